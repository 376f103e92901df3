use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::fit::FitResult;
use crate::error::{Error, Result};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;
pub const EXIT_ABORT: i32 = 3;

/// Exit code for a run that stopped with an error.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Resolution(_) | Error::Lifespan(_) | Error::Breakdown(_) | Error::DegenerateCoupling(_) => EXIT_ABORT,
        _ => EXIT_USAGE,
    }
}

/// One asserted inequality or fit tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub measured: f64,
    /// Target value, or the bound for one-sided checks.
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Informational entries are reported but never fail a run.
    pub asserted: bool,
    #[serde(default)]
    pub detail: String,
}

impl Criterion {
    pub fn within(name: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            target,
            tolerance,
            pass: (measured - target).abs() <= tolerance,
            asserted: true,
            detail: String::new(),
        }
    }

    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            target: bound,
            tolerance: 0.0,
            pass: measured <= bound,
            asserted: true,
            detail: String::new(),
        }
    }

    pub fn below(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { pass: measured < bound, ..Self::at_most(name, measured, bound) }
    }

    pub fn informational(mut self) -> Self {
        self.asserted = false;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn line(&self) -> String {
        let verdict = match (self.asserted, self.pass) {
            (false, _) => "INFO",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        let mut s = format!(
            "{verdict} {}: measured {:.6e}, target {:.6e}, tolerance {:.3e}",
            self.name, self.measured, self.target, self.tolerance
        );
        if !self.detail.is_empty() {
            s.push_str(" (");
            s.push_str(&self.detail);
            s.push(')');
        }
        s
    }
}

/// A fit together with the CSV columns it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub name: String,
    pub x_column: String,
    pub y_column: String,
    /// Rows used: those whose columns equal these values.
    pub filter: BTreeMap<String, f64>,
    pub fit: FitResult,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub pass: bool,
    pub csv: String,
    pub criteria: Vec<Criterion>,
    pub fits: Vec<FitRecord>,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Summary {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            pass: true,
            csv: format!("{experiment}.csv"),
            criteria: Vec::new(),
            fits: Vec::new(),
            values: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, c: Criterion) {
        if c.asserted && !c.pass {
            self.pass = false;
        }
        self.criteria.push(c);
    }

    pub fn criterion(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }

    pub fn fit(&self, name: &str) -> Option<&FitRecord> {
        self.fits.iter().find(|f| f.name == name)
    }
}

/// The parameter tuple that leads every CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Params {
    pub d: usize,
    pub m: u32,
    pub s: f64,
    pub sigma: Option<f64>,
    pub epsilon: Option<f64>,
    pub h_k: Option<f64>,
    pub n: usize,
    pub dt: Option<f64>,
}

pub const PARAM_COLUMNS: [&str; 8] = ["d", "m", "s", "sigma", "epsilon", "h_k", "N", "dt"];

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

impl Params {
    fn cells(&self) -> Vec<String> {
        vec![
            self.d.to_string(),
            self.m.to_string(),
            num(self.s),
            opt(self.sigma),
            opt(self.epsilon),
            opt(self.h_k),
            self.n.to_string(),
            opt(self.dt),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// A table whose columns are the parameter tuple followed by `extra`.
    pub fn new(extra: &[&str]) -> Self {
        let header = PARAM_COLUMNS.iter().chain(extra).map(|s| s.to_string()).collect();
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, p: &Params, values: &[f64]) {
        let mut row = p.cells();
        row.extend(values.iter().map(|v| num(*v)));
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_cells(&mut self, p: &Params, cells: Vec<String>) {
        let mut row = p.cells();
        row.extend(cells);
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parsed values of one column; empty cells become NaN.
    pub fn values(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.column(name)?;
        Some(self.rows.iter().map(|r| r[c].parse().unwrap_or(f64::NAN)).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Structural(e.to_string()))
    }
}

/// Everything one experiment produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub table: Table,
    pub summary: Summary,
}

impl ExperimentOutput {
    pub fn exit_code(&self) -> i32 {
        if self.summary.pass {
            EXIT_PASS
        } else {
            EXIT_ASSERTION
        }
    }

    /// Writes `<name>.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(&self.summary.csv);
        fs::write(&csv_path, self.table.to_csv()?)?;
        let json_path = dir.join("summary.json");
        fs::write(&json_path, serde_json::to_string_pretty(&self.summary)?)?;
        Ok((csv_path, json_path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_carry_parameter_tuple() {
        let mut t = Table::new(&["value"]);
        let p = Params { d: 1, m: 3, s: 0.1, sigma: Some(0.5), epsilon: Some(0.05), h_k: None, n: 256, dt: Some(1e-4) };
        t.push(&p, &[2.5]);
        let csv = t.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "d,m,s,sigma,epsilon,h_k,N,dt,value");
        assert_eq!(lines.next().unwrap(), "1,3,0.1,0.5,0.05,,256,0.0001,2.5");
        assert!(t.values("h_k").unwrap()[0].is_nan());
    }

    #[test]
    fn summary_verdicts() {
        let mut s = Summary::new("x");
        s.push(Criterion::within("slope", 2.1, 2.0, 0.3));
        s.push(Criterion::at_most("defect", 2.0, 1.0).informational());
        assert!(s.pass);
        s.push(Criterion::below("control", 2.0, 2.0));
        assert!(!s.pass);
        assert!(s.criterion("control").unwrap().line().starts_with("FAIL control"));
    }

    #[test]
    fn abort_codes() {
        assert_eq!(exit_code_for(&Error::Resolution("x".into())), EXIT_ABORT);
        assert_eq!(exit_code_for(&Error::Lifespan("x".into())), EXIT_ABORT);
        assert_eq!(exit_code_for(&Error::Config("x".into())), EXIT_USAGE);
    }
}
