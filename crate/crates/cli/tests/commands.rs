use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use longevity_cli::error::{EXIT_DEGENERATE, EXIT_IO, EXIT_USAGE, EXIT_VALIDATION};
use serde_json::Value;
use tempfile::TempDir;

fn longevity(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_longevity"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: PathBuf) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

/// Surface with `ln μ = α_x + β_x k_t` written from closures.
fn write_surface(
    path: &Path,
    ages: std::ops::RangeInclusive<u32>,
    years: std::ops::RangeInclusive<i32>,
    mu: impl Fn(u32, i32) -> f64,
) {
    let mut text = String::from("age,year,mu\n");
    for a in ages {
        for y in years.clone() {
            text.push_str(&format!("{a},{y},{}\n", mu(a, y)));
        }
    }
    fs::write(path, text).unwrap();
}

/// Gompertz ages 55..=100 over 1980..=2009 with a noisy declining index.
fn demo_surface(dir: &Path) {
    write_surface(&dir.join("surface.csv"), 55..=100, 1980..=2009, |a, y| {
        let t = f64::from(y - 1980);
        let k = 30.0 - 2.0 * t + 12.0 * (1.7 * t).sin();
        let beta = (1.5 - 0.01 * f64::from(a - 55)) / 46.0 * 2.0;
        (-9.5 + 0.1 * f64::from(a) - 4.0 + beta * k * 0.5).exp()
    });
}

fn demo_portfolio(dir: &Path) {
    let mut text = String::from("id,age,annuity\n");
    for j in 0..30u32 {
        text.push_str(&format!("P{j},{},{}\n", 60 + j % 20, 1000 + 100 * j));
    }
    fs::write(dir.join("portfolio.csv"), text).unwrap();
}

#[test]
fn fit_minimal_surface() {
    let dir = TempDir::new().unwrap();
    write_surface(&dir.path().join("s.csv"), 60..=61, 2000..=2002, |a, y| {
        0.01 * f64::from(a - 59) * (1.0 - 0.02 * f64::from(y - 2000))
    });
    let out = longevity(dir.path(), &["--out-dir", "o", "fit", "--surface", "s.csv"]);
    ok(&out);
    for f in ["params.json", "trend.json", "fit_report.json"] {
        assert!(dir.path().join("o").join(f).exists(), "{f}");
    }
    let report = json(dir.path().join("o/fit_report.json"));
    assert_eq!(report["sigma_t_sq_poly"].as_array().unwrap().len(), 3);
    assert_eq!(report["years"], serde_json::json!([2000, 2002]));
}

#[test]
fn missing_surface_is_io_error() {
    let dir = TempDir::new().unwrap();
    let out = longevity(dir.path(), &["fit", "--surface", "absent.csv"]);
    assert_eq!(out.status.code(), Some(EXIT_IO));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.csv"));
}

#[test]
fn malformed_surface_is_validation_error() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("s.csv"), "age,year,mu\n60,2000,-1\n").unwrap();
    let out = longevity(dir.path(), &["fit", "--surface", "s.csv"]);
    assert_eq!(out.status.code(), Some(EXIT_VALIDATION));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn opposed_age_loadings_are_degenerate() {
    let dir = TempDir::new().unwrap();
    write_surface(&dir.path().join("s.csv"), 60..=61, 2000..=2002, |a, y| {
        let t = f64::from(y - 2001) * 0.1;
        (-5.0 + if a == 60 { t } else { -t }).exp()
    });
    let out = longevity(dir.path(), &["fit", "--surface", "s.csv"]);
    assert_eq!(out.status.code(), Some(EXIT_DEGENERATE));
}

#[test]
fn usage_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        longevity(dir.path(), &["frobnicate"]).status.code(),
        Some(EXIT_USAGE)
    );
    assert_eq!(
        longevity(dir.path(), &["simulate", "--seed", "x"])
            .status
            .code(),
        Some(EXIT_USAGE)
    );
    assert_eq!(longevity(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn affine_index_has_zero_trend_noise() {
    let dir = TempDir::new().unwrap();
    write_surface(&dir.path().join("s.csv"), 60..=64, 1990..=1999, |a, y| {
        (-6.0 + 0.1 * f64::from(a - 60) - 0.02 * f64::from(y - 1990)).exp()
    });
    ok(&longevity(
        dir.path(),
        &["--out-dir", "o", "fit", "--surface", "s.csv"],
    ));
    let report = json(dir.path().join("o/fit_report.json"));
    assert!(report["sigma_gamma"].as_f64().unwrap() < 1e-9);
    for row in report["cov"].as_array().unwrap() {
        for v in row.as_array().unwrap() {
            assert!(v.as_f64().unwrap().abs() < 1e-15);
        }
    }

    ok(&longevity(
        dir.path(),
        &[
            "--out-dir",
            "p",
            "project",
            "--params",
            "o/params.json",
            "--trend",
            "o/trend.json",
            "--horizon",
            "2010",
        ],
    ));
    for r in csv_rows(dir.path().join("p/fan.csv")) {
        assert!((r[2] - r[3]).abs() < 1e-9 && (r[2] - r[4]).abs() < 1e-9);
    }
}

#[test]
fn project_corridor_and_paths() {
    let dir = TempDir::new().unwrap();
    demo_surface(dir.path());
    ok(&longevity(
        dir.path(),
        &["--out-dir", "o", "fit", "--surface", "surface.csv"],
    ));
    ok(&longevity(
        dir.path(),
        &[
            "--out-dir",
            "p",
            "--seed",
            "5",
            "project",
            "--params",
            "o/params.json",
            "--trend",
            "o/trend.json",
            "--horizon",
            "2049",
            "--paths",
            "100",
            "--surfaces",
            "2",
        ],
    ));
    let fan = csv_rows(dir.path().join("p/fan.csv"));
    assert_eq!(fan.len(), 70);
    let half: Vec<f64> = fan.iter().map(|r| r[4] - r[2]).collect();
    // Narrowest at the centre of the fitted window, widening after it.
    let centre = 15;
    assert!(half[centre..].windows(2).all(|w| w[1] > w[0]));

    let paths = csv_rows(dir.path().join("p/paths.csv"));
    assert_eq!(paths.len(), 100 * 40);
    let spread = |year: f64| {
        let ks: Vec<f64> = paths
            .iter()
            .filter(|r| r[2] == year)
            .map(|r| r[3])
            .collect();
        let m = ks.iter().sum::<f64>() / ks.len() as f64;
        ks.iter().map(|k| (k - m).powi(2)).sum::<f64>() / (ks.len() - 1) as f64
    };
    assert!(spread(2010.0) * 5.0 < spread(2049.0));
    assert!(dir.path().join("p/surface_1.csv").exists());
    assert_eq!(json(dir.path().join("p/project.json"))["seed"], 5);
}

#[test]
fn simulate_deterministic_toy_matches_enumeration() {
    let dir = TempDir::new().unwrap();
    // Constant hazard, one member at 80 with closure at 83.
    write_surface(&dir.path().join("s.csv"), 78..=83, 1990..=2009, |_, _| 0.2);
    fs::write(dir.path().join("book.csv"), "id,age,annuity\nA,80,100\n").unwrap();
    ok(&longevity(
        dir.path(),
        &[
            "--out-dir",
            "o",
            "simulate",
            "--surface",
            "s.csv",
            "--portfolio",
            "book.csv",
            "--mode",
            "deterministic",
            "--scenarios",
            "40",
            "--inner",
            "1000",
            "--omega-max",
            "83",
            "--discount-rate",
            "0.05",
        ],
    ));
    let q = 1.0 - (-0.2f64).exp();
    let v = 1.0 / 1.05;
    // K ∈ {0, 1, 2, 3}: three sub-closure years then certain death.
    let p = 1.0 - q;
    let exact = 100.0 * (p * v + p * p * v * v + p * p * p * v * v * v);
    let r = json(dir.path().join("o/result.json"));
    let run = &r["runs"][0];
    assert_eq!(run["n_scenarios"], 1);
    assert_eq!(run["n_inner"], 40_000);
    let se = run["std"].as_f64().unwrap() / 40_000f64.sqrt();
    assert!((run["mean"].as_f64().unwrap() - exact).abs() < 3.0 * se);
}

#[test]
fn simulate_both_with_replications() {
    let dir = TempDir::new().unwrap();
    demo_surface(dir.path());
    demo_portfolio(dir.path());
    fs::write(
        dir.path().join("run.toml"),
        "surface = \"surface.csv\"\nportfolio = \"portfolio.csv\"\nscenarios = 100\ninner = 50\n\
         replications = [1, 10, 30]\nseed = 3\nout_dir = \"from_file\"\n",
    )
    .unwrap();
    ok(&longevity(
        dir.path(),
        &["--config", "run.toml", "--out-dir", "o", "simulate"],
    ));
    assert!(!dir.path().join("from_file").exists());
    let r = json(dir.path().join("o/result.json"));
    assert_eq!(r["seed"], 3);
    assert_eq!(r["runs"].as_array().unwrap().len(), 6);
    for c in r["comparison"].as_array().unwrap() {
        assert!(c["cv_ratio"].as_f64().unwrap() > 1.0, "{c}");
    }
    let table = r["omega_table"].as_array().unwrap();
    assert_eq!(table.len(), 3);
    let w30 = &table[2];
    let (m, p) = (
        w30["measured"].as_f64().unwrap(),
        w30["predicted"].as_f64().unwrap(),
    );
    assert!((m - p).abs() / p < 0.2, "{w30}");
    for n in [1, 10, 30] {
        let hist = dir.path().join(format!("o/histogram_stochastic_n{n}.csv"));
        let total: f64 = csv_rows(hist).iter().map(|r| r[2]).sum();
        assert_eq!(total, 5_000.0);
    }
}

#[test]
fn simulate_rejects_small_runs_and_bad_keys() {
    let dir = TempDir::new().unwrap();
    demo_surface(dir.path());
    demo_portfolio(dir.path());
    let small = longevity(
        dir.path(),
        &[
            "simulate",
            "--surface",
            "surface.csv",
            "--portfolio",
            "portfolio.csv",
            "--scenarios",
            "9",
            "--inner",
            "100",
        ],
    );
    assert_eq!(small.status.code(), Some(EXIT_VALIDATION));
    fs::write(dir.path().join("bad.toml"), "scenarioz = 10\n").unwrap();
    let bad = longevity(dir.path(), &["--config", "bad.toml", "simulate"]);
    assert_eq!(bad.status.code(), Some(EXIT_VALIDATION));
}

#[test]
fn expectancy_constant_surface_has_no_drift() {
    let dir = TempDir::new().unwrap();
    write_surface(&dir.path().join("s.csv"), 60..=110, 1980..=2100, |a, _| {
        0.005 * (0.09 * f64::from(a - 60)).exp()
    });
    ok(&longevity(
        dir.path(),
        &[
            "--out-dir",
            "o",
            "expectancy",
            "--surface",
            "s.csv",
            "--from",
            "1925",
            "--to",
            "1940",
        ],
    ));
    let r = json(dir.path().join("o/expectancy.json"));
    assert!(r["drift_months_per_year"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(csv_rows(dir.path().join("o/expectancy.csv")).len(), 16);
}

#[test]
fn expectancy_comparison_reports_both_gaps() {
    let dir = TempDir::new().unwrap();
    let improving = |rate: f64| {
        move |a: u32, y: i32| {
            0.01 * (0.08 * f64::from(a - 60)).exp() * (-rate * f64::from(y - 1980)).exp()
        }
    };
    write_surface(
        &dir.path().join("a.csv"),
        60..=110,
        1980..=2100,
        improving(0.01),
    );
    write_surface(
        &dir.path().join("b.csv"),
        60..=110,
        1980..=2100,
        improving(0.02),
    );
    ok(&longevity(
        dir.path(),
        &[
            "--out-dir",
            "o",
            "expectancy",
            "--surface",
            "a.csv",
            "--compare-surface",
            "b.csv",
            "--from",
            "1925",
            "--to",
            "1940",
            "--omega-max",
            "110",
        ],
    ));
    let c = &json(dir.path().join("o/expectancy.json"))["comparison"];
    let (a, b) = (c["first"].as_f64().unwrap(), c["second"].as_f64().unwrap());
    assert!(b > a && a > 0.0);
    assert!((c["gap_vs_first"].as_f64().unwrap() - (b - a) / a).abs() < 1e-12);
    assert!((c["gap_vs_second"].as_f64().unwrap() - (b - a) / b).abs() < 1e-12);
    let header = fs::read_to_string(dir.path().join("o/expectancy.csv")).unwrap();
    assert!(header.starts_with("generation,e,e_compare\n"));
}

#[test]
fn expectancy_from_fitted_artifacts() {
    let dir = TempDir::new().unwrap();
    demo_surface(dir.path());
    ok(&longevity(
        dir.path(),
        &["--out-dir", "o", "fit", "--surface", "surface.csv"],
    ));
    ok(&longevity(
        dir.path(),
        &[
            "--out-dir",
            "e",
            "expectancy",
            "--params",
            "o/params.json",
            "--trend",
            "o/trend.json",
            "--from",
            "1925",
            "--to",
            "1945",
        ],
    ));
    let drift = json(dir.path().join("e/expectancy.json"))["drift_months_per_year"]
        .as_f64()
        .unwrap();
    assert!(drift > 0.0);
}
