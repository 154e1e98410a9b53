//! Mortality surfaces: a complete grid of instantaneous rates μ(age, year),
//! CSV ingestion and export, and cohort (diagonal) reads.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::ops::RangeInclusive;

use crate::error::{Cell, Error, Result};

/// Default closure age: q is forced to 1 here.
pub const DEFAULT_OMEGA_MAX: u32 = 120;

const SURFACE_HEADER: [&str; 3] = ["age", "year", "mu"];
const MAX_REPORTED_MISSING: usize = 10;

/// Rectangular grid of instantaneous mortality rates, indexed by age (rows)
/// and calendar year (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct MortalitySurface {
    age_min: u32,
    year_min: i32,
    n_ages: usize,
    n_years: usize,
    rates: Vec<f64>,
}

impl MortalitySurface {
    /// Builds a surface from age-major rates (`rates[ia * n_years + iy]`).
    pub fn new(
        age_min: u32,
        year_min: i32,
        n_ages: usize,
        n_years: usize,
        rates: Vec<f64>,
    ) -> Result<Self> {
        if n_ages < 2 || n_years < 2 {
            return Err(Error::invalid(format!(
                "surface needs at least 2 ages and 2 years, got {n_ages} x {n_years}"
            )));
        }
        if rates.len() != n_ages * n_years {
            return Err(Error::invalid(format!(
                "expected {} rates, got {}",
                n_ages * n_years,
                rates.len()
            )));
        }
        if u32::try_from(n_ages - 1)
            .ok()
            .and_then(|d| age_min.checked_add(d))
            .is_none()
            || i32::try_from(n_years - 1)
                .ok()
                .and_then(|d| year_min.checked_add(d))
                .is_none()
        {
            return Err(Error::invalid("surface index range overflows"));
        }
        if let Some(bad) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::invalid(format!(
                "rates must be strictly positive and finite, got {bad}"
            )));
        }
        Ok(Self {
            age_min,
            year_min,
            n_ages,
            n_years,
            rates,
        })
    }

    /// Builds a surface by evaluating `f(age, year)` on every cell.
    pub fn from_fn(
        ages: RangeInclusive<u32>,
        years: RangeInclusive<i32>,
        mut f: impl FnMut(u32, i32) -> f64,
    ) -> Result<Self> {
        let n_ages = ages.clone().count();
        let n_years = years.clone().count();
        let mut rates = Vec::with_capacity(n_ages * n_years);
        for age in ages.clone() {
            for year in years.clone() {
                rates.push(f(age, year));
            }
        }
        Self::new(*ages.start(), *years.start(), n_ages, n_years, rates)
    }

    pub fn ages(&self) -> RangeInclusive<u32> {
        self.age_min..=self.age_max()
    }

    pub fn years(&self) -> RangeInclusive<i32> {
        self.year_min..=self.year_max()
    }

    pub fn age_min(&self) -> u32 {
        self.age_min
    }

    pub fn age_max(&self) -> u32 {
        self.age_min + (self.n_ages as u32 - 1)
    }

    pub fn year_min(&self) -> i32 {
        self.year_min
    }

    pub fn year_max(&self) -> i32 {
        self.year_min + (self.n_years as i32 - 1)
    }

    pub fn n_ages(&self) -> usize {
        self.n_ages
    }

    pub fn n_years(&self) -> usize {
        self.n_years
    }

    /// Rate by grid index.
    pub fn at(&self, ia: usize, iy: usize) -> f64 {
        self.rates[ia * self.n_years + iy]
    }

    /// Rate at `(age, year)`, or `None` outside the grid.
    pub fn rate(&self, age: u32, year: i32) -> Option<f64> {
        let ia = age.checked_sub(self.age_min)? as usize;
        let iy = i64::from(year) - i64::from(self.year_min);
        if ia >= self.n_ages || iy < 0 || iy as usize >= self.n_years {
            return None;
        }
        Some(self.at(ia, iy as usize))
    }

    /// Age-major view of the rates.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Iterates `(age, year, mu)` in age-major order.
    pub fn cells(&self) -> impl Iterator<Item = (u32, i32, f64)> + '_ {
        self.rates.iter().enumerate().map(move |(i, &mu)| {
            let ia = i / self.n_years;
            let iy = i % self.n_years;
            (self.age_min + ia as u32, self.year_min + iy as i32, mu)
        })
    }
}

fn csv_line(err: &csv::Error) -> u64 {
    err.position().map(|p| p.line()).unwrap_or(0)
}

fn malformed(line: u64, message: impl Into<String>) -> Error {
    Error::Malformed {
        line,
        message: message.into(),
    }
}

/// Opens a trimmed CSV reader and checks the header row exactly.
pub(crate) fn csv_reader<R: Read>(source: R, header: &[&str]) -> Result<csv::Reader<R>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let found = reader
        .headers()
        .map_err(|e| malformed(csv_line(&e).max(1), e.to_string()))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(malformed(
            1,
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(reader)
}

/// Reads the data rows of a CSV, handing each record and its line number to `f`.
pub(crate) fn for_each_record<R: Read>(
    reader: &mut csv::Reader<R>,
    mut f: impl FnMut(u64, &csv::StringRecord) -> Result<()>,
) -> Result<()> {
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(true) => {
                let line = record.position().map(|p| p.line()).unwrap_or(0);
                f(line, &record)?;
            }
            Ok(false) => return Ok(()),
            Err(e) => return Err(malformed(csv_line(&e), e.to_string())),
        }
    }
}

pub(crate) fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    name: &str,
    line: u64,
) -> Result<T> {
    let raw = record
        .get(idx)
        .ok_or_else(|| malformed(line, format!("missing field `{name}`")))?;
    raw.parse()
        .map_err(|_| malformed(line, format!("cannot parse `{name}` from {raw:?}")))
}

/// Parses a surface from `age,year,mu` long-format CSV.
///
/// Rows may come in any order. Every `(age, year)` pair spanned by the
/// observed ranges must appear exactly once; nothing is imputed.
pub fn load_surface<R: Read>(source: R) -> Result<MortalitySurface> {
    let mut reader = csv_reader(source, &SURFACE_HEADER)?;
    let mut rows: Vec<(u32, i32, f64)> = Vec::new();
    let mut seen = HashSet::new();
    for_each_record(&mut reader, |line, rec| {
        let age: u32 = parse_field(rec, 0, "age", line)?;
        let year: i32 = parse_field(rec, 1, "year", line)?;
        let mu: f64 = parse_field(rec, 2, "mu", line)?;
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::NonPositiveRate { line, value: mu });
        }
        if !seen.insert((age, year)) {
            return Err(Error::DuplicateCell {
                line,
                cell: Cell { age, year },
            });
        }
        rows.push((age, year, mu));
        Ok(())
    })?;

    if rows.is_empty() {
        return Err(malformed(1, "no data rows"));
    }
    let age_min = rows.iter().map(|r| r.0).min().unwrap_or(0);
    let age_max = rows.iter().map(|r| r.0).max().unwrap_or(0);
    let year_min = rows.iter().map(|r| r.1).min().unwrap_or(0);
    let year_max = rows.iter().map(|r| r.1).max().unwrap_or(0);
    let n_ages = u64::from(age_max - age_min) + 1;
    let n_years = (i64::from(year_max) - i64::from(year_min)) as u64 + 1;
    let expected = n_ages.saturating_mul(n_years);
    if (rows.len() as u64) < expected {
        let mut missing = Vec::new();
        'scan: for age in age_min..=age_max {
            for year in year_min..=year_max {
                if !seen.contains(&(age, year)) {
                    missing.push(Cell { age, year });
                    if missing.len() == MAX_REPORTED_MISSING {
                        break 'scan;
                    }
                }
            }
        }
        return Err(Error::IncompleteGrid {
            missing_count: expected - rows.len() as u64,
            missing,
        });
    }

    let (n_ages, n_years) = (n_ages as usize, n_years as usize);
    let mut rates = vec![0.0; n_ages * n_years];
    for (age, year, mu) in rows {
        let ia = (age - age_min) as usize;
        let iy = (year - year_min) as usize;
        rates[ia * n_years + iy] = mu;
    }
    MortalitySurface::new(age_min, year_min, n_ages, n_years, rates)
}

/// Writes a surface as `age,year,mu`, age-major, shortest round-trip decimals.
pub fn save_surface<W: Write>(surface: &MortalitySurface, mut out: W) -> Result<()> {
    writeln!(out, "age,year,mu")?;
    for (age, year, mu) in surface.cells() {
        writeln!(out, "{age},{year},{mu}")?;
    }
    out.flush()?;
    Ok(())
}

/// Annual death probability under a constant hazard over the year.
pub fn mu_to_q(mu: f64) -> Result<f64> {
    if mu.is_nan() || mu < 0.0 {
        return Err(Error::invalid(format!(
            "hazard must be non-negative, got {mu}"
        )));
    }
    Ok(-(-mu).exp_m1())
}

/// What to do once a cohort diagonal passes the last age of the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AgeTail {
    /// Hold the last-age rate of the same calendar year.
    #[default]
    HoldLast,
    /// Treat any age beyond the grid as an error.
    Strict,
}

/// Closure rule for cohort reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CohortSpec {
    pub omega_max: u32,
    pub age_tail: AgeTail,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            omega_max: DEFAULT_OMEGA_MAX,
            age_tail: AgeTail::HoldLast,
        }
    }
}

impl CohortSpec {
    pub fn with_omega(omega_max: u32) -> Self {
        Self {
            omega_max,
            ..Self::default()
        }
    }
}

/// Annual death probabilities along one generation's diagonal.
///
/// Entry `k` is for age `start_age + k` in calendar year
/// `generation + start_age + k`; the last entry is the closure age.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortRateVector {
    pub generation: i32,
    pub start_age: u32,
    pub q: Vec<f64>,
}

impl CohortRateVector {
    pub fn calendar_year(&self, k: usize) -> i32 {
        self.generation + self.start_age as i32 + k as i32
    }

    /// Writes the vector as `age,year,q`.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "age,year,q")?;
        for (k, q) in self.q.iter().enumerate() {
            writeln!(
                out,
                "{},{},{}",
                self.start_age + k as u32,
                self.calendar_year(k),
                q
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads the diagonal of `generation` from `start_age` up to the closure age.
pub fn cohort_view(
    surface: &MortalitySurface,
    generation: i32,
    start_age: u32,
    spec: &CohortSpec,
) -> Result<CohortRateVector> {
    if start_age > spec.omega_max {
        return Err(Error::invalid(format!(
            "start age {start_age} exceeds closure age {}",
            spec.omega_max
        )));
    }
    let len = (spec.omega_max - start_age) as usize + 1;
    let mut q = Vec::with_capacity(len);
    for age in start_age..spec.omega_max {
        let year = i64::from(generation) + i64::from(age);
        let cell = Cell {
            age,
            year: year.clamp(i64::from(i32::MIN), i64::from(i32::MAX)) as i32,
        };
        if year < i64::from(surface.year_min()) || year > i64::from(surface.year_max()) {
            return Err(Error::OutOfSurface { cell });
        }
        let lookup_age = if age > surface.age_max() {
            match spec.age_tail {
                AgeTail::HoldLast => surface.age_max(),
                AgeTail::Strict => return Err(Error::OutOfSurface { cell }),
            }
        } else {
            age
        };
        let mu = surface
            .rate(lookup_age, cell.year)
            .ok_or(Error::OutOfSurface { cell })?;
        q.push(mu_to_q(mu)?);
    }
    q.push(1.0);
    Ok(CohortRateVector {
        generation,
        start_age,
        q,
    })
}
