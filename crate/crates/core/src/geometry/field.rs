//! Scalar and metric fields on a chart, and their coordinate jets.
//!
//! A jet holds the value and all coordinate partials up to some order
//! (at most three) at one point. Jets come either from exact symbolic
//! derivatives of the defining expressions, from an analytic source that
//! knows its own derivatives, or from central finite differences of the
//! pointwise value.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::{CompiledExpr, Expression};

/// How coordinate derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Backend {
    Symbolic,
    FiniteDifference {
        h: f64,
        #[serde(default)]
        richardson: bool,
    },
}

pub const DEFAULT_FD_STEP: f64 = 1e-3;

impl Backend {
    pub fn fd(h: f64) -> Backend {
        Backend::FiniteDifference { h, richardson: false }
    }

    pub fn step(&self) -> Option<f64> {
        match self {
            Backend::Symbolic => None,
            Backend::FiniteDifference { h, .. } => Some(*h),
        }
    }

    /// Default acceptance tolerance: 1e-7 symbolic, max(1e-4, 10 h^2) FD.
    pub fn default_tolerance(&self) -> f64 {
        match self {
            Backend::Symbolic => 1e-7,
            Backend::FiniteDifference { h, .. } => (10.0 * h * h).max(1e-4),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Symbolic => f.write_str("symbolic"),
            Backend::FiniteDifference { h, richardson: false } => write!(f, "fd(h={h:e})"),
            Backend::FiniteDifference { h, richardson: true } => {
                write!(f, "fd(h={h:e},richardson)")
            }
        }
    }
}

/// Value and coordinate partials of a scalar at a point. Higher-order
/// arrays are full (not symmetry-packed) and empty beyond `order`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarJet {
    pub order: usize,
    pub value: f64,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
}

impl ScalarJet {
    pub fn constant(value: f64, n: usize, order: usize) -> ScalarJet {
        ScalarJet {
            order,
            value,
            d1: if order >= 1 { vec![0.0; n] } else { vec![] },
            d2: if order >= 2 { vec![0.0; n * n] } else { vec![] },
            d3: if order >= 3 { vec![0.0; n * n * n] } else { vec![] },
        }
    }

    pub fn dim(&self) -> usize {
        self.d1.len()
    }

    pub fn d2(&self, i: usize, j: usize) -> f64 {
        self.d2[i * self.dim() + j]
    }

    pub fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim();
        self.d3[(i * n + j) * n + k]
    }

    /// Chain rule for `u(x) = U(alpha . x + offset)` given the 1-D
    /// derivatives `[U, U', U'', U''']`.
    pub fn from_profile(profile: &[f64], alpha: &[f64], order: usize) -> ScalarJet {
        let n = alpha.len();
        let mut jet = ScalarJet::constant(profile[0], n, order);
        if order >= 1 {
            for i in 0..n {
                jet.d1[i] = profile[1] * alpha[i];
            }
        }
        if order >= 2 {
            for i in 0..n {
                for j in 0..n {
                    jet.d2[i * n + j] = profile[2] * alpha[i] * alpha[j];
                }
            }
        }
        if order >= 3 {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        jet.d3[(i * n + j) * n + k] = profile[3] * alpha[i] * alpha[j] * alpha[k];
                    }
                }
            }
        }
        jet
    }
}

/// Metric components and their partials at a point. `dg[k]` is
/// `d_k g`, `d2g[k*n+l]` is `d_k d_l g`, `d3g[(k*n+l)*n+m]` likewise.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub order: usize,
    pub g: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
    pub d2g: Vec<DMatrix<f64>>,
    pub d3g: Vec<DMatrix<f64>>,
}

/// A scalar source whose derivatives are known in closed form but which
/// is not a single expression (e.g. an interpolated ODE profile).
pub trait JetSource: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, p: &[f64]) -> Result<f64>;
    fn jet(&self, p: &[f64], order: usize) -> Result<ScalarJet>;
    fn describe(&self) -> String;
}

type PointwiseScalar = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;
type PointwiseMatrix = dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync;

/// Multi-index bookkeeping for symmetric derivative tables.
fn sorted_index(n: usize, idx: &[usize]) -> usize {
    // position of a sorted multi-index in the enumeration used by tiers
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    match sorted.len() {
        1 => sorted[0],
        2 => {
            let (i, j) = (sorted[0], sorted[1]);
            i * n - i * (i + 1) / 2 + j
        }
        3 => {
            let mut pos = 0;
            for (a, b, c) in tuples3(n) {
                if [a, b, c] == sorted[..] {
                    return pos;
                }
                pos += 1;
            }
            unreachable!()
        }
        _ => unreachable!(),
    }
}

fn tuples2(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))
}

fn tuples3(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |i| (i..n).flat_map(move |j| (j..n).map(move |k| (i, j, k))))
}

struct Tier {
    exprs: Vec<Expression>,
    compiled: Vec<CompiledExpr>,
    lookup: Vec<usize>,
}

/// Expression with lazily built, cached derivative trees up to order 3.
struct SymbolicScalar {
    expr: Expression,
    vars: Vec<String>,
    value: CompiledExpr,
    tiers: [OnceLock<Tier>; 3],
}

impl SymbolicScalar {
    fn new(expr: Expression, vars: &[String]) -> Result<Self> {
        let value = expr.compile(vars)?;
        Ok(SymbolicScalar {
            expr,
            vars: vars.to_vec(),
            value,
            tiers: [OnceLock::new(), OnceLock::new(), OnceLock::new()],
        })
    }

    fn tier(&self, order: usize) -> &Tier {
        self.tiers[order - 1].get_or_init(|| {
            let n = self.vars.len();
            let exprs: Vec<Expression> = match order {
                1 => self.vars.iter().map(|v| self.expr.differentiate(v)).collect(),
                2 => {
                    let t1 = self.tier(1);
                    tuples2(n)
                        .map(|(i, j)| t1.exprs[i].differentiate(&self.vars[j]))
                        .collect()
                }
                3 => {
                    let t2 = self.tier(2);
                    tuples3(n)
                        .map(|(i, j, k)| {
                            t2.exprs[sorted_index(n, &[i, j])].differentiate(&self.vars[k])
                        })
                        .collect()
                }
                _ => unreachable!(),
            };
            let compiled = exprs
                .iter()
                .map(|e| e.compile(&self.vars).expect("derivative has the same symbols"))
                .collect();
            let lookup = match order {
                1 => (0..n).collect(),
                2 => (0..n * n).map(|f| sorted_index(n, &[f / n, f % n])).collect(),
                _ => (0..n * n * n)
                    .map(|f| sorted_index(n, &[f / (n * n), (f / n) % n, f % n]))
                    .collect(),
            };
            Tier { exprs, compiled, lookup }
        })
    }

    fn eval_tier(&self, order: usize, p: &[f64]) -> Result<Vec<f64>> {
        let tier = self.tier(order);
        let unique: Vec<f64> = tier
            .compiled
            .iter()
            .map(|c| c.eval(p))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::eval_at(p, e))?;
        Ok(tier.lookup.iter().map(|&k| unique[k]).collect())
    }

    fn value(&self, p: &[f64]) -> Result<f64> {
        self.value.eval(p).map_err(|e| Error::eval_at(p, e))
    }

    fn jet(&self, p: &[f64], order: usize) -> Result<ScalarJet> {
        let n = self.vars.len();
        let mut jet = ScalarJet::constant(self.value(p)?, n, 0);
        jet.order = order;
        if order >= 1 {
            jet.d1 = self.eval_tier(1, p)?;
        }
        if order >= 2 {
            jet.d2 = self.eval_tier(2, p)?;
        }
        if order >= 3 {
            jet.d3 = self.eval_tier(3, p)?;
        }
        Ok(jet)
    }
}

// ---------------------------------------------------------------------------
// Finite differences

/// Central-difference partials of a vector-valued map up to `order`.
/// Returns `[value, d1, d2, d3]` with the same layout as the jets.
fn fd_partials<F>(f: &F, p: &[f64], h: f64, order: usize) -> Result<[Vec<Vec<f64>>; 4]>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = p.len();
    let shifted = |offsets: &[(usize, f64)]| {
        let mut q = p.to_vec();
        for &(k, s) in offsets {
            q[k] += s;
        }
        f(&q)
    };
    let comb = |terms: &[(f64, &Vec<f64>)], scale: f64| -> Vec<f64> {
        let len = terms[0].1.len();
        (0..len)
            .map(|c| terms.iter().map(|(w, v)| w * v[c]).sum::<f64>() * scale)
            .collect()
    };
    let f0 = f(p)?;
    let mut out: [Vec<Vec<f64>>; 4] = [vec![f0.clone()], vec![], vec![], vec![]];
    if order == 0 {
        return Ok(out);
    }
    let plus: Vec<Vec<f64>> = (0..n).map(|k| shifted(&[(k, h)])).collect::<Result<_>>()?;
    let minus: Vec<Vec<f64>> = (0..n).map(|k| shifted(&[(k, -h)])).collect::<Result<_>>()?;
    out[1] = (0..n)
        .map(|k| comb(&[(1.0, &plus[k]), (-1.0, &minus[k])], 0.5 / h))
        .collect();
    if order == 1 {
        return Ok(out);
    }
    let mut d2 = vec![Vec::new(); n * n];
    for k in 0..n {
        d2[k * n + k] = comb(&[(1.0, &plus[k]), (-2.0, &f0), (1.0, &minus[k])], 1.0 / (h * h));
        for l in k + 1..n {
            let pp = shifted(&[(k, h), (l, h)])?;
            let pm = shifted(&[(k, h), (l, -h)])?;
            let mp = shifted(&[(k, -h), (l, h)])?;
            let mm = shifted(&[(k, -h), (l, -h)])?;
            let v = comb(&[(1.0, &pp), (-1.0, &pm), (-1.0, &mp), (1.0, &mm)], 0.25 / (h * h));
            d2[l * n + k] = v.clone();
            d2[k * n + l] = v;
        }
    }
    out[2] = d2;
    if order == 2 {
        return Ok(out);
    }
    // third partials: central difference of the second-partial table
    let mut d3 = vec![Vec::new(); n * n * n];
    for m in 0..n {
        let mut q = p.to_vec();
        q[m] += h;
        let [_, _, hi, _] = fd_partials(f, &q, h, 2)?;
        q[m] -= 2.0 * h;
        let [_, _, lo, _] = fd_partials(f, &q, h, 2)?;
        for kl in 0..n * n {
            d3[kl * n + m] = comb(&[(1.0, &hi[kl]), (-1.0, &lo[kl])], 0.5 / h);
        }
    }
    out[3] = d3;
    Ok(out)
}

fn richardson(coarse: [Vec<Vec<f64>>; 4], fine: [Vec<Vec<f64>>; 4]) -> [Vec<Vec<f64>>; 4] {
    let mut out = fine;
    for (tier_c, tier_f) in coarse.iter().zip(out.iter_mut()).skip(1) {
        for (vc, vf) in tier_c.iter().zip(tier_f.iter_mut()) {
            for (c, f) in vc.iter().zip(vf.iter_mut()) {
                *f = (4.0 * *f - c) / 3.0;
            }
        }
    }
    out
}

fn fd_with_backend<F>(f: &F, p: &[f64], order: usize, backend: &Backend, domain: &Chart) -> Result<[Vec<Vec<f64>>; 4]>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let Backend::FiniteDifference { h, richardson: rich } = *backend else {
        unreachable!("finite differences requested with symbolic backend")
    };
    let reach = if order >= 3 { 2.0 * h } else { h };
    let lo: Vec<f64> = p.iter().map(|x| x - reach).collect();
    let hi: Vec<f64> = p.iter().map(|x| x + reach).collect();
    if order > 0 && (!domain.contains(&lo) || !domain.contains(&hi)) {
        return Err(Error::StencilOutsideDomain(p.to_vec()));
    }
    let coarse = fd_partials(f, p, h, order)?;
    if rich {
        let fine = fd_partials(f, p, 0.5 * h, order)?;
        Ok(richardson(coarse, fine))
    } else {
        Ok(coarse)
    }
}

// ---------------------------------------------------------------------------
// Scalar fields

enum ScalarSource {
    Symbolic(SymbolicScalar),
    Pointwise { dim: usize, label: String, f: Arc<PointwiseScalar> },
    Analytic(Arc<dyn JetSource>),
}

/// Scalar function on a chart. Cheap to clone; immutable.
#[derive(Clone)]
pub struct ScalarField {
    source: Arc<ScalarSource>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.describe())
    }
}

impl ScalarField {
    pub fn from_expr(expr: Expression, coords: &[String]) -> Result<Self> {
        Ok(ScalarField {
            source: Arc::new(ScalarSource::Symbolic(SymbolicScalar::new(expr, coords)?)),
        })
    }

    pub fn parse(text: &str, coords: &[String]) -> Result<Self> {
        ScalarField::from_expr(crate::expr::parse(text)?, coords)
    }

    pub fn constant(value: f64, coords: &[String]) -> Self {
        ScalarField::from_expr(Expression::Literal(value), coords).expect("literal compiles")
    }

    pub fn pointwise<F>(dim: usize, label: &str, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        ScalarField {
            source: Arc::new(ScalarSource::Pointwise { dim, label: label.into(), f: Arc::new(f) }),
        }
    }

    pub fn analytic(source: Arc<dyn JetSource>) -> Self {
        ScalarField { source: Arc::new(ScalarSource::Analytic(source)) }
    }

    pub fn dim(&self) -> usize {
        match &*self.source {
            ScalarSource::Symbolic(s) => s.vars.len(),
            ScalarSource::Pointwise { dim, .. } => *dim,
            ScalarSource::Analytic(a) => a.dim(),
        }
    }

    pub fn expression(&self) -> Option<&Expression> {
        match &*self.source {
            ScalarSource::Symbolic(s) => Some(&s.expr),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match &*self.source {
            ScalarSource::Symbolic(s) => s.expr.to_string(),
            ScalarSource::Pointwise { label, .. } => format!("<pointwise {label}>"),
            ScalarSource::Analytic(a) => a.describe(),
        }
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        match &*self.source {
            ScalarSource::Symbolic(s) => s.value(p),
            ScalarSource::Pointwise { f, .. } => f(p),
            ScalarSource::Analytic(a) => a.value(p),
        }
    }

    /// Jet up to `order`. The finite-difference backend differentiates the
    /// pointwise value and checks the stencil against `domain`.
    pub fn jet(&self, p: &[f64], order: usize, backend: &Backend, domain: &Chart) -> Result<ScalarJet> {
        if p.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "point of length {} for a field in {} coordinates",
                p.len(),
                self.dim()
            )));
        }
        match (backend, &*self.source) {
            (Backend::Symbolic, ScalarSource::Symbolic(s)) => s.jet(p, order),
            (Backend::Symbolic, ScalarSource::Analytic(a)) => a.jet(p, order),
            (Backend::Symbolic, ScalarSource::Pointwise { label, .. }) => {
                Err(Error::NoSymbolicDerivatives(format!("scalar field {label}")))
            }
            (Backend::FiniteDifference { .. }, _) => {
                let f = |q: &[f64]| self.value(q).map(|v| vec![v]);
                let [v, d1, d2, d3] = fd_with_backend(&f, p, order, backend, domain)?;
                let flat = |t: Vec<Vec<f64>>| t.into_iter().map(|x| x[0]).collect::<Vec<f64>>();
                Ok(ScalarJet { order, value: v[0][0], d1: flat(d1), d2: flat(d2), d3: flat(d3) })
            }
        }
    }

    /// Error unless the field is positive at every grid point.
    pub fn check_positive(&self, what: &str, grid: &super::Grid) -> Result<()> {
        let values = grid.sweep(|p| self.value(p))?;
        for (i, v) in values.into_iter().enumerate() {
            if !(v > 0.0) {
                return Err(Error::NonPositive { what: what.into(), value: v, point: grid.point(i) });
            }
        }
        Ok(())
    }

    /// Pull back along the projection onto the first `self.dim()`
    /// coordinates of a product chart with coordinates `product_coords`.
    pub fn lift(&self, product_coords: &[String]) -> Result<ScalarField> {
        let base = self.dim();
        let total = product_coords.len();
        if total < base {
            return Err(Error::Dimension("lift target is smaller than the base".into()));
        }
        match &*self.source {
            ScalarSource::Symbolic(s) => {
                if s.vars[..] != product_coords[..base] {
                    return Err(Error::Invalid(
                        "product coordinates must start with the base coordinates".into(),
                    ));
                }
                ScalarField::from_expr(s.expr.clone(), product_coords)
            }
            ScalarSource::Pointwise { label, f, .. } => {
                let f = f.clone();
                Ok(ScalarField::pointwise(total, label, move |p| f(&p[..base])))
            }
            ScalarSource::Analytic(a) => Ok(ScalarField::analytic(Arc::new(Lifted {
                inner: a.clone(),
                total,
            }))),
        }
    }
}

struct Lifted {
    inner: Arc<dyn JetSource>,
    total: usize,
}

impl JetSource for Lifted {
    fn dim(&self) -> usize {
        self.total
    }

    fn value(&self, p: &[f64]) -> Result<f64> {
        self.inner.value(&p[..self.inner.dim()])
    }

    fn jet(&self, p: &[f64], order: usize) -> Result<ScalarJet> {
        let b = self.inner.dim();
        let n = self.total;
        let base = self.inner.jet(&p[..b], order)?;
        let mut out = ScalarJet::constant(base.value, n, order);
        for i in 0..b {
            if order >= 1 {
                out.d1[i] = base.d1[i];
            }
            for j in 0..b {
                if order >= 2 {
                    out.d2[i * n + j] = base.d2[i * b + j];
                }
                for k in 0..b {
                    if order >= 3 {
                        out.d3[(i * n + j) * n + k] = base.d3[(i * b + j) * b + k];
                    }
                }
            }
        }
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("lift({})", self.inner.describe())
    }
}

// ---------------------------------------------------------------------------
// Metric fields

enum MetricSource {
    Symbolic { entries: Vec<SymbolicScalar>, exprs: Vec<Vec<Expression>> },
    Pointwise(Arc<PointwiseMatrix>),
}

/// Riemannian metric on a chart plus the derivative backend used by every
/// geometric operation built on it.
#[derive(Clone)]
pub struct MetricField {
    chart: Chart,
    source: Arc<MetricSource>,
    backend: Backend,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("coords", &self.chart.names())
            .field("backend", &self.backend)
            .finish()
    }
}

impl MetricField {
    /// Metric from symbolic components. `g[i][j]` and `g[j][i]` must be the
    /// same tree.
    pub fn from_exprs(chart: Chart, g: Vec<Vec<Expression>>) -> Result<Self> {
        let n = chart.dim();
        if g.len() != n || g.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension(format!("metric must be {n}x{n}")));
        }
        for i in 0..n {
            for j in 0..i {
                if g[i][j] != g[j][i] {
                    return Err(Error::Invalid(format!("metric is not symmetric at ({i},{j})")));
                }
            }
        }
        let entries = tuples2(n)
            .map(|(i, j)| SymbolicScalar::new(g[i][j].clone(), chart.names()))
            .collect::<Result<Vec<_>>>()?;
        Ok(MetricField {
            chart,
            source: Arc::new(MetricSource::Symbolic { entries, exprs: g }),
            backend: Backend::Symbolic,
        })
    }

    pub fn parse<S: AsRef<str>>(chart: Chart, g: &[Vec<S>]) -> Result<Self> {
        let exprs = g
            .iter()
            .map(|row| row.iter().map(|s| crate::expr::parse(s.as_ref())).collect())
            .collect::<std::result::Result<Vec<Vec<_>>, _>>()?;
        MetricField::from_exprs(chart, exprs)
    }

    pub fn diagonal(chart: Chart, diag: Vec<Expression>) -> Result<Self> {
        let n = diag.len();
        let mut g = vec![vec![Expression::Literal(0.0); n]; n];
        for (i, d) in diag.into_iter().enumerate() {
            g[i][i] = d;
        }
        MetricField::from_exprs(chart, g)
    }

    pub fn euclidean(chart: Chart) -> Self {
        let n = chart.dim();
        MetricField::diagonal(chart, vec![Expression::Literal(1.0); n]).expect("flat metric")
    }

    /// Metric from an opaque evaluator; only the FD backend can
    /// differentiate it.
    pub fn pointwise<F>(chart: Chart, h: f64, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        MetricField {
            chart,
            source: Arc::new(MetricSource::Pointwise(Arc::new(f))),
            backend: Backend::fd(h),
        }
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn coords(&self) -> &[String] {
        self.chart.names()
    }

    pub fn expressions(&self) -> Option<&Vec<Vec<Expression>>> {
        match &*self.source {
            MetricSource::Symbolic { exprs, .. } => Some(exprs),
            MetricSource::Pointwise(_) => None,
        }
    }

    pub fn value(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        match &*self.source {
            MetricSource::Symbolic { entries, .. } => {
                let n = self.dim();
                let mut g = DMatrix::zeros(n, n);
                for ((i, j), e) in tuples2(n).zip(entries) {
                    let v = e.value(p)?;
                    g[(i, j)] = v;
                    g[(j, i)] = v;
                }
                Ok(g)
            }
            MetricSource::Pointwise(f) => f(p),
        }
    }

    /// Same metric in renamed coordinates (symbolic components only).
    pub fn renamed<S: AsRef<str>>(&self, names: &[S]) -> Result<MetricField> {
        let chart = Chart::new(names, self.chart.lower(), self.chart.upper())?;
        let rename = |e: &Expression| {
            let mut out = e.clone();
            // two passes through fresh names so swaps cannot collide
            for (i, old) in self.chart.names().iter().enumerate() {
                out = out.substitute(old, &Expression::Symbol(format!("\u{1}{i}").into()));
            }
            for (i, new) in chart.names().iter().enumerate() {
                out = out.substitute(&format!("\u{1}{i}"), &Expression::Symbol(new.as_str().into()));
            }
            out
        };
        match &*self.source {
            MetricSource::Symbolic { exprs, .. } => {
                let g = exprs.iter().map(|row| row.iter().map(rename).collect()).collect();
                Ok(MetricField::from_exprs(chart, g)?.with_backend(self.backend))
            }
            MetricSource::Pointwise(f) => Ok(MetricField {
                chart,
                source: Arc::new(MetricSource::Pointwise(f.clone())),
                backend: self.backend,
            }),
        }
    }

    /// `c · g` for a constant `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<MetricField> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Invalid(format!("metric scale must be positive, got {c}")));
        }
        match &*self.source {
            MetricSource::Symbolic { exprs, .. } => {
                let g = exprs
                    .iter()
                    .map(|row| row.iter().map(|e| Expression::mul(Expression::Literal(c), e.clone())).collect())
                    .collect();
                Ok(MetricField::from_exprs(self.chart.clone(), g)?.with_backend(self.backend))
            }
            MetricSource::Pointwise(f) => {
                let f = f.clone();
                Ok(MetricField {
                    chart: self.chart.clone(),
                    source: Arc::new(MetricSource::Pointwise(Arc::new(move |p| Ok(f(p)? * c)))),
                    backend: self.backend,
                })
            }
        }
    }

    /// Cholesky check at every grid point; the first failure is an error.
    pub fn check_positive_definite(&self, grid: &super::Grid) -> Result<()> {
        grid.sweep(|p| {
            self.value(p)?
                .cholesky()
                .map(|_| ())
                .ok_or_else(|| Error::NotPositiveDefinite(p.to_vec()))
        })?;
        Ok(())
    }

    /// Metric jet up to `order` with this field's backend.
    pub fn jet(&self, p: &[f64], order: usize) -> Result<MetricJet> {
        let n = self.dim();
        if p.len() != n {
            return Err(Error::Dimension(format!("point of length {} in {n}-dim chart", p.len())));
        }
        match (&self.backend, &*self.source) {
            (Backend::Symbolic, MetricSource::Symbolic { entries, .. }) => {
                let jets = entries
                    .iter()
                    .map(|e| e.jet(p, order))
                    .collect::<Result<Vec<_>>>()?;
                let build = |get: &dyn Fn(&ScalarJet) -> f64| {
                    let mut m = DMatrix::zeros(n, n);
                    for ((i, j), jet) in tuples2(n).zip(&jets) {
                        let v = get(jet);
                        m[(i, j)] = v;
                        m[(j, i)] = v;
                    }
                    m
                };
                let g = build(&|j| j.value);
                let dg = (0..if order >= 1 { n } else { 0 })
                    .map(|k| build(&|j| j.d1[k]))
                    .collect();
                let d2g = (0..if order >= 2 { n * n } else { 0 })
                    .map(|kl| build(&|j| j.d2[kl]))
                    .collect();
                let d3g = (0..if order >= 3 { n * n * n } else { 0 })
                    .map(|klm| build(&|j| j.d3[klm]))
                    .collect();
                Ok(MetricJet { order, g, dg, d2g, d3g })
            }
            (Backend::Symbolic, MetricSource::Pointwise(_)) => {
                Err(Error::NoSymbolicDerivatives("pointwise metric".into()))
            }
            (Backend::FiniteDifference { .. }, _) => {
                let f = |q: &[f64]| self.value(q).map(|m| m.as_slice().to_vec());
                let [v, d1, d2, d3] = fd_with_backend(&f, p, order, &self.backend, &self.chart)?;
                let mat = |x: Vec<f64>| {
                    let mut m = DMatrix::from_vec(n, n, x);
                    // restore exact symmetry lost to rounding
                    let t = m.transpose();
                    m = (m + t) * 0.5;
                    m
                };
                let g = mat(v.into_iter().next().unwrap());
                Ok(MetricJet {
                    order,
                    g,
                    dg: d1.into_iter().map(mat).collect(),
                    d2g: d2.into_iter().map(mat).collect(),
                    d3g: d3.into_iter().map(mat).collect(),
                })
            }
        }
    }
}
