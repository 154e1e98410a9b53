use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::{csv_reader, for_each_record, parse_field};

const PORTFOLIO_HEADER: [&str; 3] = ["id", "age", "annuity"];

/// One annuitant: age at the valuation date and yearly amount paid in arrears.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub id: String,
    pub age: u32,
    pub annuity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    members: Vec<Member>,
}

impl Portfolio {
    pub fn new(members: Vec<Member>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("portfolio is empty"));
        }
        let mut ids = HashSet::with_capacity(members.len());
        for (i, m) in members.iter().enumerate() {
            let line = i as u64 + 2;
            if !(m.annuity.is_finite() && m.annuity > 0.0) {
                return Err(Error::NonPositiveAnnuity {
                    line,
                    value: m.annuity,
                });
            }
            if !ids.insert(m.id.as_str()) {
                return Err(Error::DuplicateId {
                    line,
                    id: m.id.clone(),
                });
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn total_annuity(&self) -> f64 {
        self.members.iter().map(|m| m.annuity).sum()
    }

    pub fn mean_age(&self) -> f64 {
        self.members.iter().map(|m| f64::from(m.age)).sum::<f64>() / self.len() as f64
    }

    pub fn mean_annuity(&self) -> f64 {
        self.total_annuity() / self.len() as f64
    }

    pub fn min_age(&self) -> u32 {
        self.members.iter().map(|m| m.age).min().unwrap_or(0)
    }

    /// Every age must lie below the closure age.
    pub fn check_ages(&self, omega_max: u32) -> Result<()> {
        match self.members.iter().find(|m| m.age >= omega_max) {
            Some(m) => Err(Error::invalid(format!(
                "member {:?} aged {} is not below the closure age {omega_max}",
                m.id, m.age
            ))),
            None => Ok(()),
        }
    }

    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(PORTFOLIO_HEADER)
            .map_err(|e| Error::Io(e.into()))?;
        for m in &self.members {
            w.write_record([m.id.as_str(), &m.age.to_string(), &m.annuity.to_string()])
                .map_err(|e| Error::Io(e.into()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses an `id,age,annuity` CSV.
pub fn load_portfolio<R: Read>(source: R) -> Result<Portfolio> {
    let mut reader = csv_reader(source, &PORTFOLIO_HEADER)?;
    let mut members = Vec::new();
    let mut ids = HashSet::new();
    for_each_record(&mut reader, |line, rec| {
        let id: String = parse_field(rec, 0, "id", line)?;
        if id.is_empty() {
            return Err(Error::Malformed {
                line,
                message: "empty id".into(),
            });
        }
        let age: u32 = parse_field(rec, 1, "age", line)?;
        let annuity: f64 = parse_field(rec, 2, "annuity", line)?;
        if !(annuity.is_finite() && annuity > 0.0) {
            return Err(Error::NonPositiveAnnuity {
                line,
                value: annuity,
            });
        }
        if !ids.insert(id.clone()) {
            return Err(Error::DuplicateId { line, id });
        }
        members.push(Member { id, age, annuity });
        Ok(())
    })?;
    if members.is_empty() {
        return Err(Error::Malformed {
            line: 1,
            message: "portfolio has no rows".into(),
        });
    }
    Portfolio::new(members)
}

/// `n` disjoint copies of the portfolio. Copy `c` of member `id` becomes
/// `id#c`; with `n = 1` the portfolio is returned unchanged.
pub fn replicate(portfolio: &Portfolio, n: usize) -> Result<Portfolio> {
    if n == 0 {
        return Err(Error::invalid("replication factor must be at least 1"));
    }
    if n == 1 {
        return Ok(portfolio.clone());
    }
    let members = (1..=n)
        .flat_map(|c| {
            portfolio.members.iter().map(move |m| Member {
                id: format!("{}#{c}", m.id),
                ..m.clone()
            })
        })
        .collect();
    Portfolio::new(members)
}
