use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::geometry::ResidualReport;
use crate::rigidity::{HypothesisReport, IntegralIdentity};

/// One residual line of a report. `tol = None` marks a reported but
/// unchecked quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub sup: f64,
    pub grid: String,
    pub backend: String,
    pub tol: Option<f64>,
    pub pass: Option<bool>,
}

impl Check {
    pub fn new(name: &str, sup: f64, grid: &str, backend: &str, tol: Option<f64>) -> Check {
        Check {
            name: name.to_string(),
            sup,
            grid: grid.to_string(),
            backend: backend.to_string(),
            tol,
            pass: tol.map(|t| sup <= t),
        }
    }

    pub fn from_residual(name: &str, r: &ResidualReport, tol: Option<f64>) -> Check {
        Check::new(name, r.sup, &r.grid, &r.backend.to_string(), tol)
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuSummary {
    pub mean: f64,
    pub deviation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stated: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralSummary {
    pub resolution: usize,
    #[serde(flatten)]
    pub identity: IntegralIdentity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub residuals: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<MuSummary>,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<HypothesisReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub integrals: Vec<IntegralSummary>,
    pub passed: bool,
}

impl Report {
    pub fn new(scenario: &str) -> Report {
        Report {
            scenario: scenario.to_string(),
            parameters: BTreeMap::new(),
            residuals: Vec::new(),
            mu: None,
            notes: Vec::new(),
            hypotheses: None,
            integrals: Vec::new(),
            passed: true,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.residuals.push(check);
        self.passed = !self.residuals.iter().any(Check::failed);
    }

    pub fn param<V: Into<serde_json::Value>>(&mut self, key: &str, value: V) {
        self.parameters.insert(key.to_string(), value.into());
    }

    /// Pretty JSON with every float written to 17 significant digits.
    pub fn to_json(&self) -> String {
        to_json(self)
    }

    /// Residual table: `name,sup,grid,backend,tol,pass`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "sup", "grid", "backend", "tol", "pass"]).expect("in-memory write");
        for c in &self.residuals {
            w.write_record([
                c.name.clone(),
                format!("{:.16e}", c.sup),
                c.grid.clone(),
                c.backend.clone(),
                c.tol.map_or(String::new(), |t| format!("{t:.16e}")),
                c.pass.map_or(String::new(), |p| p.to_string()),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

struct Fixed17<'a>(PrettyFormatter<'a>);

impl Formatter for Fixed17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Fixed17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json writes utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits_and_round_trip() {
        let mut r = Report::new("t");
        r.push(Check::new("a", 0.1, "1 on [0,1]", "symbolic", Some(1e-8)));
        r.param("m", 2.0);
        let text = r.to_json();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back.residuals, r.residuals);
        assert_eq!(back.to_json(), text);
        assert!(!r.passed);
    }

    #[test]
    fn unchecked_lines_do_not_fail() {
        let mut r = Report::new("t");
        r.push(Check::new("info", 5.0, "g", "symbolic", None));
        assert!(r.passed);
        assert!(r.to_csv().starts_with("name,sup,grid,backend,tol,pass\n"));
    }
}
