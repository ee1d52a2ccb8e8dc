use std::collections::{BTreeMap, HashMap};

use serde::Deserialize;

use crate::catalog::CatalogParams;
use crate::constraints::SolitonTriple;
use crate::error::{Error, Result};
use crate::expr::{parse, Expression};
use crate::geometry::{Backend, Chart, Grid, MetricField, ScalarField};

/// Top-level JSON scenario document, selected by its `kind` field.
#[derive(Debug, Clone)]
pub enum ScenarioConfig {
    VerifyTriple(VerifyTriple),
    ConstructConformal(ConstructConformal),
    AssembleWarped(AssembleWarped),
    Catalog(CatalogRun),
    Crosscheck(Crosscheck),
    Rigidity(Rigidity),
}

impl ScenarioConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioConfig::VerifyTriple(_) => "verify-triple",
            ScenarioConfig::ConstructConformal(_) => "construct-conformal",
            ScenarioConfig::AssembleWarped(_) => "assemble-warped",
            ScenarioConfig::Catalog(_) => "catalog",
            ScenarioConfig::Crosscheck(_) => "crosscheck",
            ScenarioConfig::Rigidity(_) => "rigidity",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "at `{}`: {}", self.path, self.message)
        }
    }
}

pub const KINDS: [&str; 6] = ["verify-triple", "construct-conformal", "assemble-warped", "catalog", "crosscheck", "rigidity"];

fn body<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> std::result::Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| ConfigError {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Parse a config, reporting the JSON path of the first offending field.
pub fn parse_config(text: &str) -> std::result::Result<ScenarioConfig, ConfigError> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError {
        path: String::new(),
        message: e.to_string(),
    })?;
    let Some(object) = value.as_object_mut() else {
        return Err(ConfigError { path: String::new(), message: "config must be a JSON object".into() });
    };
    let kind = match object.remove("kind") {
        Some(serde_json::Value::String(k)) => k,
        Some(_) => return Err(ConfigError { path: "kind".into(), message: "expected a string".into() }),
        None => return Err(ConfigError { path: String::new(), message: "missing field `kind`".into() }),
    };
    Ok(match kind.as_str() {
        "verify-triple" => ScenarioConfig::VerifyTriple(body(value)?),
        "construct-conformal" => ScenarioConfig::ConstructConformal(body(value)?),
        "assemble-warped" => ScenarioConfig::AssembleWarped(body(value)?),
        "catalog" => ScenarioConfig::Catalog(body(value)?),
        "crosscheck" => ScenarioConfig::Crosscheck(body(value)?),
        "rigidity" => ScenarioConfig::Rigidity(body(value)?),
        other => {
            return Err(ConfigError {
                path: "kind".into(),
                message: format!("unknown kind `{other}`, expected one of {}", KINDS.join(", ")),
            })
        }
    })
}

/// Derivative backend as written in configs.
#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    #[default]
    Symbolic,
    Fd,
}

/// `"backend": {"mode": "fd", "h": 1e-3}` plus an optional top-level `tol`.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    #[serde(default)]
    pub mode: BackendKind,
    pub h: Option<f64>,
    #[serde(default)]
    pub richardson: bool,
}

impl BackendConfig {
    pub fn backend(&self) -> Result<Backend> {
        match self.mode {
            BackendKind::Symbolic => Ok(Backend::Symbolic),
            BackendKind::Fd => {
                let h = self.h.unwrap_or(crate::geometry::DEFAULT_FD_STEP);
                if !(h > 0.0 && h.is_finite()) {
                    return Err(Error::Invalid(format!("finite-difference step must be positive, got {h}")));
                }
                Ok(Backend::FiniteDifference { h, richardson: self.richardson })
            }
        }
    }

    /// Command-line flags take precedence over the config.
    pub fn overridden(mut self, mode: Option<BackendKind>, h: Option<f64>) -> Self {
        if let Some(b) = mode {
            self.mode = b;
        }
        if h.is_some() {
            self.h = h;
        }
        self
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    pub coords: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ChartConfig {
    pub fn chart(&self) -> Result<Chart> {
        Chart::new(&self.coords, &self.lower, &self.upper)
    }
}

/// A chart with metric components as expressions in its coordinates.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    pub chart: ChartConfig,
    pub metric: Vec<Vec<String>>,
}

/// Grid resolution: one count for every axis or one per axis.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

impl GridSpec {
    pub fn grid(&self, chart: &Chart) -> Result<Grid> {
        match self {
            GridSpec::Uniform(c) => Grid::uniform(chart.lower(), chart.upper(), *c),
            GridSpec::PerAxis(cs) => Grid::new(chart.lower(), chart.upper(), cs),
        }
    }
}

pub(crate) fn bind(text: &str, params: &HashMap<String, f64>) -> Result<Expression> {
    Ok(parse(text)?.bind_parameters(params))
}

pub(crate) fn metric_from(config: &ManifoldConfig, params: &HashMap<String, f64>) -> Result<MetricField> {
    let chart = config.chart.chart()?;
    let exprs = config
        .metric
        .iter()
        .map(|row| row.iter().map(|s| bind(s, params)).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    MetricField::from_exprs(chart, exprs)
}

pub(crate) fn field_from(text: &str, coords: &[String], params: &HashMap<String, f64>) -> Result<ScalarField> {
    let e = bind(text, params)?;
    let unbound: Vec<String> = e.free_symbols().into_iter().filter(|s| !coords.contains(s)).collect();
    if !unbound.is_empty() {
        return Err(Error::Invalid(format!("`{text}` uses unknown symbols {unbound:?}")));
    }
    ScalarField::from_expr(e, coords)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleConfig {
    pub base: ManifoldConfig,
    pub f: String,
    pub phi: String,
    pub lambda: String,
    pub m: f64,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl TripleConfig {
    pub fn parameters(&self) -> HashMap<String, f64> {
        let mut p: HashMap<String, f64> = self.params.iter().map(|(k, v)| (k.clone(), *v)).collect();
        p.entry("m".into()).or_insert(self.m);
        p.entry("n".into()).or_insert(self.base.chart.coords.len() as f64);
        p
    }

    pub fn triple(&self) -> Result<SolitonTriple> {
        let params = self.parameters();
        let metric = metric_from(&self.base, &params)?;
        let coords = metric.coords().to_vec();
        SolitonTriple::new(
            metric,
            field_from(&self.f, &coords, &params)?,
            field_from(&self.phi, &coords, &params)?,
            field_from(&self.lambda, &coords, &params)?,
            self.m,
        )
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyTriple {
    pub triple: TripleConfig,
    pub grid: GridSpec,
    #[serde(default)]
    pub backend: BackendConfig,
    pub tol: Option<f64>,
}

fn default_range() -> [f64; 2] {
    [-2.0, 2.0]
}

fn default_step() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructConformal {
    pub n: usize,
    pub m: f64,
    pub alpha: Option<Vec<f64>>,
    #[serde(rename = "F")]
    pub big_f: String,
    pub f: String,
    #[serde(default)]
    pub xi0: f64,
    pub phi0: f64,
    pub dphi0: f64,
    #[serde(default = "default_range")]
    pub xi_range: [f64; 2],
    #[serde(default = "default_step")]
    pub step: f64,
    /// Half-width of the lifted chart cube; defaults to the largest cube
    /// that `α·x` maps into the solved range.
    pub half_width: Option<f64>,
    pub grid: Option<usize>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub csv: Option<String>,
    #[serde(default)]
    pub backend: BackendConfig,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssembleWarped {
    pub triple: TripleConfig,
    pub fiber: ManifoldConfig,
    /// Fiber Einstein constant; defaults to the computed mean of μ.
    pub mu: Option<f64>,
    pub base_grid: GridSpec,
    pub fiber_grid: GridSpec,
    #[serde(default)]
    pub backend: BackendConfig,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogRun {
    pub name: String,
    #[serde(default)]
    pub params: CatalogParams,
    #[serde(default)]
    pub backend: BackendConfig,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Crosscheck {
    pub base: ManifoldConfig,
    pub fiber: ManifoldConfig,
    pub f: String,
    pub phi: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub base_grid: GridSpec,
    pub fiber_grid: GridSpec,
    #[serde(default)]
    pub backend: BackendConfig,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rigidity {
    pub catalog: Option<String>,
    #[serde(default)]
    pub params: CatalogParams,
    pub triple: Option<TripleConfig>,
    pub grid: Option<GridSpec>,
    pub resolution: Option<usize>,
    #[serde(default)]
    pub backend: BackendConfig,
    pub tol: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_field_reports_path() {
        let text = r#"{"kind": "verify-triple", "triple": {
            "base": {"chart": {"coords": ["t"], "lower": [-1], "upper": [1]}, "metric": [["1"]]},
            "f": "cosh(t)", "phi": "sinh(t)", "lambda": "sinh(t) - m"}, "grid": 5}"#;
        let err = parse_config(text).unwrap_err();
        assert!(err.message.contains("missing field `m`"), "{err}");
        assert_eq!(err.path, "triple");
    }

    #[test]
    fn unknown_kind_and_field() {
        assert_eq!(parse_config(r#"{"kind": "nope"}"#).unwrap_err().path, "kind");
        let err = parse_config(r#"{"kind": "catalog", "name": "x", "extra": 1}"#).unwrap_err();
        assert!(err.message.contains("unknown field `extra`"), "{err}");
    }

    #[test]
    fn nested_type_error_has_path() {
        let text = r#"{"kind": "catalog", "name": "corollary-1.3", "params": {"n": "three"}}"#;
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.path, "params.n");
    }

    #[test]
    fn verify_config_builds_triple() {
        let text = r#"{"kind": "verify-triple", "triple": {
            "base": {"chart": {"coords": ["t"], "lower": [-1], "upper": [1]}, "metric": [["1"]]},
            "f": "cosh(t)", "phi": "sinh(t)", "lambda": "sinh(t) - m", "m": 3}, "grid": 5,
            "backend": {"mode": "fd", "h": 0.001}}"#;
        let ScenarioConfig::VerifyTriple(v) = parse_config(text).unwrap() else { panic!() };
        let t = v.triple.triple().unwrap();
        assert_eq!(t.lambda.value(&[0.0]).unwrap(), -3.0);
        assert_eq!(v.backend.backend().unwrap(), Backend::fd(1e-3));
    }
}
