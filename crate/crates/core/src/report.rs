//! Report emission: `key: value` summaries and CSV tables.
//!
//! Reals are written in Rust's shortest round-trip form (exponent notation
//! outside `[1e-4, 1e15)`), so parsing a summary or a CSV cell with
//! `str::parse::<f64>` restores the exact value. Missing values are empty
//! cells.

use std::fmt::{self, Display};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::SpaceTimeGrid;
use crate::interface::LevelInterface;
use crate::solver::SolveResult;

/// Shortest round-trip rendering of a real.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Values accepted by [`Summary::push`].
pub trait Value {
    fn render(&self) -> String;
}

impl Value for f64 {
    fn render(&self) -> String {
        num(*self)
    }
}

macro_rules! display_value {
    ($($t:ty),*) => {
        $(impl Value for $t {
            fn render(&self) -> String {
                self.to_string()
            }
        })*
    };
}

display_value!(usize, u64, bool, str, String, Status);

impl<T: Value + ?Sized> Value for &T {
    fn render(&self) -> String {
        (**self).render()
    }
}

/// Outcome of one checked statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Measured only; no pass/fail threshold applies.
    Report,
    /// Preconditions not met at any point.
    Skipped,
}

impl Status {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

impl Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Report => "report",
            Status::Skipped => "skipped",
        })
    }
}

/// Ordered `key: value` document.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub entries: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Value) -> &mut Self {
        let value = value.render();
        debug_assert!(!value.contains('\n'));
        self.entries.push((key.into(), value));
        self
    }

    pub fn push_opt(&mut self, key: impl Into<String>, value: Option<impl Value>) -> &mut Self {
        match value {
            Some(v) => self.push(key, v),
            None => self.push(key, ""),
        }
    }

    /// Grid parameters under `grid.*`.
    pub fn grid(&mut self, g: &SpaceTimeGrid) -> &mut Self {
        self.push("grid.n", g.dim())
            .push("grid.nx", g.nx())
            .push("grid.nt", g.nt())
            .push("grid.half_width", g.half_width())
            .push("grid.t_start", g.t_start())
            .push("grid.t_end", g.t_end())
            .push("grid.h", g.h())
            .push("grid.dt", g.dt())
    }

    /// A checked statement under `statement.<name>`.
    pub fn statement(&mut self, name: &str, status: Status) -> &mut Self {
        self.push(format!("statement.{name}"), status)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.0 == key).map(|e| e.1.as_str())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Summary::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once(": ")
                .or_else(|| line.strip_suffix(':').map(|k| (k, "")))
                .ok_or_else(|| Error::Format(format!("summary line without ': ': '{line}'")))?;
            s.push(k, v);
        }
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }
}

impl Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            if v.is_empty() {
                writeln!(f, "{k}:")?;
            } else {
                writeln!(f, "{k}: {v}")?;
            }
        }
        Ok(())
    }
}

/// Formats an optional cell.
pub fn cell(v: Option<impl Value>) -> String {
    v.map(|v| v.render()).unwrap_or_default()
}

/// A CSV table with a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record(&self.header).map_err(csv_error)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
        let header = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(csv_error)?.iter().map(str::to_string).collect());
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

/// Interface midpoints of every level, columns `t,x1,x2`.
pub fn interface_table(result: &SolveResult) -> Table {
    let g = result.grid();
    let mut t = Table::new(&["t", "x1", "x2"]);
    for m in 0..g.nt() {
        for p in LevelInterface::extract(g, result.level_mask(m)).points {
            t.push(vec![num(g.time(m)), num(p[0]), num(p[1])]);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_round_trips_exact_values() {
        let mut s = Summary::new();
        let x = 0.1 + 0.2;
        s.push("a", x)
            .push("b", f64::MIN_POSITIVE)
            .push("d", -2.5e17)
            .push_opt("c", None::<f64>)
            .statement("growth", Status::Report);
        let back = Summary::parse(&s.to_string()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.get("a").unwrap().parse::<f64>().unwrap(), x);
        assert_eq!(back.get("b").unwrap().parse::<f64>().unwrap(), f64::MIN_POSITIVE);
        assert_eq!(back.get("b"), Some("2.2250738585072014e-308"));
        assert_eq!(back.get("c"), Some(""));
        assert_eq!(back.get("statement.growth"), Some("report"));
    }

    #[test]
    fn table_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(&["r", "value"]);
        t.push(vec![num(0.25), num(1.0 / 3.0)]);
        t.push(vec![num(1.5e-20), cell(None::<f64>)]);
        t.write(&path).unwrap();
        let back = Table::read(&path).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column("value").unwrap()[0].parse::<f64>().unwrap(), 1.0 / 3.0);
    }
}
