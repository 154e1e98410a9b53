//! Replays the checked-in fuzz corpus through every parser on stable.

use std::fs;
use std::path::PathBuf;

use longevity_cli::config::{RunConfig, Settings};
use longevity_core::valuation::load_portfolio;
use longevity_core::{load_surface, save_surface, LeeCarterParams, TrendFit};

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds in {}", dir.display());
    files
        .into_iter()
        .map(|p| {
            let b = fs::read(&p).unwrap();
            (p, b)
        })
        .collect()
}

#[test]
fn surface_seeds() {
    let mut accepted = 0;
    for (_, data) in seeds("surface_csv") {
        if let Ok(s) = load_surface(data.as_slice()) {
            let mut out = Vec::new();
            save_surface(&s, &mut out).unwrap();
            assert_eq!(load_surface(out.as_slice()).unwrap(), s);
            accepted += 1;
        }
    }
    assert!(accepted >= 1);
}

#[test]
fn portfolio_seeds() {
    let results: Vec<bool> = seeds("portfolio_csv")
        .iter()
        .map(|(_, d)| load_portfolio(d.as_slice()).is_ok())
        .collect();
    assert!(results.contains(&true) && results.contains(&false));
}

#[test]
fn json_seeds() {
    for (path, data) in seeds("params_json") {
        let text = String::from_utf8(data).unwrap();
        let ok = LeeCarterParams::from_json(&text).is_ok();
        assert_eq!(ok, path.ends_with("small.json"), "{}", path.display());
    }
    for (path, data) in seeds("trend_json") {
        let text = String::from_utf8(data).unwrap();
        let ok = TrendFit::from_json(&text).is_ok();
        assert_eq!(ok, path.ends_with("anchor.json"), "{}", path.display());
    }
}

#[test]
fn config_seeds() {
    for (path, data) in seeds("run_config") {
        let text = String::from_utf8(data).unwrap();
        match Settings::parse(&text) {
            Ok(s) => {
                // Inputs named by the seeds do not exist here.
                assert!(RunConfig::from_settings(&s).is_err(), "{}", path.display());
            }
            Err(_) => assert!(path.ends_with("negative_seed.toml")),
        }
    }
}
