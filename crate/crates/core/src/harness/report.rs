use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::io::{field, read_rows, write_rows};

use super::spec::ExperimentKind;

/// One user's rate in one series; `x` is the swept value (M or tau).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRow {
    pub redraw: usize,
    pub series: String,
    pub x: f64,
    pub group: usize,
    pub cell: usize,
    pub rate: f64,
    /// Monte-Carlo standard error; zero for closed-form values.
    pub std_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub name: String,
    pub points: Vec<CurvePoint>,
}

/// Pooled samples of one quantity, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub name: String,
    pub samples: Vec<f64>,
}

impl Distribution {
    pub fn new(name: impl Into<String>, mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        Self {
            name: name.into(),
            samples,
        }
    }

    /// Empirical CDF as `(value, P[X <= value])` at every sample.
    pub fn cdf(&self) -> Vec<(f64, f64)> {
        let n = self.samples.len() as f64;
        self.samples
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, (i + 1) as f64 / n))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outage {
    pub name: String,
    pub quantile: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub seed: u64,
    /// Config file text that reproduces the run.
    pub config_echo: String,
    pub version: String,
    pub user_rows: Vec<UserRow>,
    pub curves: Vec<Curve>,
    pub distributions: Vec<Distribution>,
    pub outages: Vec<Outage>,
}

impl ExperimentReport {
    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.name == name)
    }

    pub fn distribution(&self, name: &str) -> Option<&Distribution> {
        self.distributions.iter().find(|d| d.name == name)
    }

    pub fn outage(&self, name: &str, quantile: f64) -> Option<f64> {
        self.outages
            .iter()
            .find(|o| o.name == name && o.quantile == quantile)
            .map(|o| o.value)
    }

    pub fn total_rate(&self) -> f64 {
        self.user_rows.iter().map(|r| r.rate).sum()
    }
}

/// Empirical `q`-quantile with lower interpolation: the sample at rank
/// `floor(q (n - 1))` of the sorted samples.
pub fn outage_rate(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidConfig(format!("quantile {q} outside (0, 1)")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (q * (sorted.len() - 1) as f64).floor() as usize;
    Ok(sorted[rank])
}

pub const USER_HEADER: [&str; 7] = ["redraw", "series", "x", "group", "cell", "rate", "std_err"];

/// Writes `users.csv`, `curve_<name>.csv`, `cdf_<name>.csv`, `outage.csv`
/// and `manifest.txt` into `dir`.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_rows(
        &dir.join("users.csv"),
        &USER_HEADER,
        report.user_rows.iter().map(|r| {
            vec![
                r.redraw.to_string(),
                r.series.clone(),
                r.x.to_string(),
                r.group.to_string(),
                r.cell.to_string(),
                r.rate.to_string(),
                r.std_err.to_string(),
            ]
        }),
    )?;
    for c in &report.curves {
        write_rows(
            &dir.join(format!("curve_{}.csv", c.name)),
            &["x", "y", "std_err"],
            c.points.iter().map(|p| vec![p.x.to_string(), p.y.to_string(), p.std_err.to_string()]),
        )?;
    }
    for d in &report.distributions {
        write_rows(
            &dir.join(format!("cdf_{}.csv", d.name)),
            &["value", "probability"],
            d.cdf().into_iter().map(|(v, p)| vec![v.to_string(), p.to_string()]),
        )?;
    }
    write_rows(
        &dir.join("outage.csv"),
        &["series", "quantile", "value"],
        report
            .outages
            .iter()
            .map(|o| vec![o.name.clone(), o.quantile.to_string(), o.value.to_string()]),
    )?;
    let manifest = format!(
        "# experiment: {}\n# version: {}\n{}",
        report.kind.name(),
        report.version,
        report.config_echo
    );
    let path = dir.join("manifest.txt");
    std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
}

pub fn read_user_rows(path: &Path) -> Result<Vec<UserRow>> {
    read_rows(path)?
        .iter()
        .map(|row| {
            Ok(UserRow {
                redraw: field(row, 0, path)?,
                series: field(row, 1, path)?,
                x: field(row, 2, path)?,
                group: field(row, 3, path)?,
                cell: field(row, 4, path)?,
                rate: field(row, 5, path)?,
                std_err: field(row, 6, path)?,
            })
        })
        .collect()
}

pub fn read_curve(path: &Path) -> Result<Vec<CurvePoint>> {
    read_rows(path)?
        .iter()
        .map(|row| {
            Ok(CurvePoint {
                x: field(row, 0, path)?,
                y: field(row, 1, path)?,
                std_err: field(row, 2, path)?,
            })
        })
        .collect()
}
