//! Translation-invariant data on a conformally flat base `g = F⁻² δ` with
//! every function of `ξ = α·x`. The base equations reduce to
//!
//! ```text
//! φ'' = (m/f)(f'' + 2(F'/F) f') − (n−2) F''/F − 2 (F'/F) φ'
//! λ   = F² (F''/F − (n−1)(F'/F)² − (F'/F) φ' + m (f'/f)(F'/F))
//! ```
//!
//! The first is integrated with classical RK4; `λ` is always evaluated from
//! the second.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::constraints::SolitonTriple;
use crate::error::{Error, Result};
use crate::expr::{parse, CompiledExpr, Expression};
use crate::geometry::{Chart, JetSource, MetricField, ScalarField, ScalarJet};

pub const XI: &str = "xi";
pub const DPHI: &str = "dphi";
const BLOW_UP: f64 = 1e12;

/// Unit direction with every component `1/√n`.
pub fn diagonal_direction(n: usize) -> Vec<f64> {
    vec![1.0 / (n as f64).sqrt(); n]
}

fn check_direction(alpha: &[f64]) -> Result<()> {
    let norm2: f64 = alpha.iter().map(|a| a * a).sum();
    if (norm2 - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!("direction must be a unit vector, |alpha|^2 = {norm2}")));
    }
    Ok(())
}

/// `ξ = Σ αᵢ xᵢ` in coordinates `coords`.
pub fn xi_expression(alpha: &[f64], coords: &[String]) -> Expression {
    alpha
        .iter()
        .zip(coords)
        .filter(|(a, _)| **a != 0.0)
        .map(|(a, x)| Expression::mul(Expression::Literal(*a), Expression::Symbol(x.as_str().into())))
        .reduce(Expression::add)
        .unwrap_or(Expression::Literal(0.0))
}

pub fn coordinates(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Derivative tower of an expression in `ξ`: value, ', '', '''.
#[derive(Debug, Clone)]
struct Tower {
    expr: Expression,
    compiled: [CompiledExpr; 4],
}

impl Tower {
    fn new(expr: Expression) -> Result<Tower> {
        let vars = [XI.to_string()];
        let d1 = expr.differentiate(XI);
        let d2 = d1.differentiate(XI);
        let d3 = d2.differentiate(XI);
        Ok(Tower {
            compiled: [expr.compile(&vars)?, d1.compile(&vars)?, d2.compile(&vars)?, d3.compile(&vars)?],
            expr,
        })
    }

    fn eval(&self, xi: f64) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for (o, c) in out.iter_mut().zip(&self.compiled) {
            *o = c.eval(&[xi]).map_err(|e| Error::eval_at(&[xi], e))?;
        }
        Ok(out)
    }
}

/// Compiled right-hand side `P(ξ, φ')` or `L(ξ, φ')` with the partials
/// needed to differentiate along solutions.
#[derive(Debug, Clone)]
struct Rhs {
    expr: Expression,
    value: CompiledExpr,
    d_xi: CompiledExpr,
    d_dphi: CompiledExpr,
    d_xi_xi: CompiledExpr,
    d_xi_dphi: CompiledExpr,
    d_dphi_dphi: CompiledExpr,
}

impl Rhs {
    fn new(expr: Expression) -> Result<Rhs> {
        let vars = [XI.to_string(), DPHI.to_string()];
        let dx = expr.differentiate(XI);
        let dp = expr.differentiate(DPHI);
        Ok(Rhs {
            value: expr.compile(&vars)?,
            d_xi_xi: dx.differentiate(XI).compile(&vars)?,
            d_xi_dphi: dx.differentiate(DPHI).compile(&vars)?,
            d_dphi_dphi: dp.differentiate(DPHI).compile(&vars)?,
            d_xi: dx.compile(&vars)?,
            d_dphi: dp.compile(&vars)?,
            expr,
        })
    }

    fn at(c: &CompiledExpr, xi: f64, dphi: f64) -> Result<f64> {
        c.eval(&[xi, dphi]).map_err(|e| Error::eval_at(&[xi, dphi], e))
    }
}

#[derive(Debug, Clone)]
pub struct ConformalAnsatz {
    n: usize,
    m: f64,
    alpha: Vec<f64>,
    big_f: Tower,
    f: Tower,
    phi_rhs: Rhs,
    lambda_rhs: Rhs,
}

impl ConformalAnsatz {
    /// `big_f` and `f` are expressions in `xi`.
    pub fn new(n: usize, m: f64, alpha: Vec<f64>, big_f: Expression, f: Expression) -> Result<Self> {
        if n < 3 {
            return Err(Error::Invalid(format!("conformal reduction needs n >= 3, got {n}")));
        }
        if alpha.len() != n {
            return Err(Error::Dimension(format!("direction has {} components, n = {n}", alpha.len())));
        }
        check_direction(&alpha)?;
        if alpha.iter().filter(|a| **a != 0.0).count() < 2 {
            return Err(Error::Invalid("direction needs at least two nonzero components".into()));
        }
        if m == 0.0 {
            return Err(Error::Invalid("m must be nonzero".into()));
        }
        for (name, e) in [("F", &big_f), ("f", &f)] {
            let extra: Vec<String> = e.free_symbols().into_iter().filter(|s| s != XI).collect();
            if !extra.is_empty() {
                return Err(Error::Invalid(format!("{name} may only depend on xi, found {extra:?}")));
            }
        }
        let (phi_rhs, lambda_rhs) = rhs_expressions(n, m, &big_f, &f);
        Ok(ConformalAnsatz {
            n,
            m,
            alpha,
            big_f: Tower::new(big_f)?,
            f: Tower::new(f)?,
            phi_rhs: Rhs::new(phi_rhs)?,
            lambda_rhs: Rhs::new(lambda_rhs)?,
        })
    }

    pub fn parse(n: usize, m: f64, alpha: Vec<f64>, big_f: &str, f: &str) -> Result<Self> {
        ConformalAnsatz::new(n, m, alpha, parse(big_f)?, parse(f)?)
    }

    /// `F = e^{−ξ}`, `f = e^{ξ}`.
    pub fn exponential(n: usize, m: f64) -> Result<Self> {
        ConformalAnsatz::parse(n, m, diagonal_direction(n), "exp(-xi)", "exp(xi)")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn big_f(&self) -> &Expression {
        &self.big_f.expr
    }

    pub fn f(&self) -> &Expression {
        &self.f.expr
    }

    pub fn phi_rhs(&self) -> &Expression {
        &self.phi_rhs.expr
    }

    pub fn lambda_rhs(&self) -> &Expression {
        &self.lambda_rhs.expr
    }

    fn positive(&self, xi: f64) -> Result<([f64; 4], [f64; 4])> {
        let big = self.big_f.eval(xi)?;
        let f = self.f.eval(xi)?;
        for (name, v) in [("F", big[0]), ("f", f[0])] {
            if !(v > 0.0) {
                return Err(Error::NonPositive { what: name.into(), value: v, point: vec![xi] });
            }
        }
        Ok((big, f))
    }

    pub fn phi_second_derivative(&self, xi: f64, dphi: f64) -> Result<f64> {
        self.positive(xi)?;
        Rhs::at(&self.phi_rhs.value, xi, dphi)
    }

    pub fn lambda_profile(&self, xi: f64, dphi: f64) -> Result<f64> {
        self.positive(xi)?;
        Rhs::at(&self.lambda_rhs.value, xi, dphi)
    }

    /// `λ f² + f Δf + (m−1)|∇f|² − f ⟨∇φ, ∇f⟩` for `g = F⁻² δ`.
    pub fn mu_profile(&self, xi: f64, dphi: f64) -> Result<f64> {
        let (big, f) = self.positive(xi)?;
        let lambda = Rhs::at(&self.lambda_rhs.value, xi, dphi)?;
        let n = self.n as f64;
        let f2 = big[0] * big[0];
        let lap = f2 * f[2] - (n - 2.0) * big[0] * big[1] * f[1];
        let grad2 = f2 * f[1] * f[1];
        let dphi_f = f2 * dphi * f[1];
        Ok(lambda * f[0] * f[0] + f[0] * lap + (self.m - 1.0) * grad2 - f[0] * dphi_f)
    }

    fn rk4_step(&self, xi: f64, y: [f64; 2], h: f64) -> Result<[f64; 2]> {
        let rhs = |x: f64, s: [f64; 2]| -> Result<[f64; 2]> { Ok([s[1], self.phi_second_derivative(x, s[1])?]) };
        let k1 = rhs(xi, y)?;
        let k2 = rhs(xi + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]])?;
        let k3 = rhs(xi + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]])?;
        let k4 = rhs(xi + h, [y[0] + h * k3[0], y[1] + h * k3[1]])?;
        Ok([
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ])
    }

    /// RK4 from `(ξ₀, φ₀, φ'₀)` outward in both directions on the uniform
    /// grid `ξ₀ + k·step` covering `range`.
    pub fn integrate_profiles(&self, xi0: f64, phi0: f64, dphi0: f64, range: (f64, f64), step: f64) -> Result<ProfileSolution> {
        let (a, b) = range;
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Invalid(format!("step must be positive, got {step}")));
        }
        if !(a <= xi0 && xi0 <= b && a < b) {
            return Err(Error::Invalid(format!("xi0 = {xi0} must lie in [{a}, {b}]")));
        }
        let steps = |len: f64| (len / step - 1e-9).ceil().max(0.0) as usize;
        let (back, fwd) = (steps(xi0 - a), steps(b - xi0));
        let total = back + fwd + 1;
        let mut phi = vec![0.0; total];
        let mut dphi = vec![0.0; total];
        phi[back] = phi0;
        dphi[back] = dphi0;
        let xi_at = |k: usize| xi0 + (k as f64 - back as f64) * step;
        let guard = |xi: f64, y: [f64; 2]| {
            if !y[1].is_finite() || !y[0].is_finite() || y[1].abs() > BLOW_UP {
                Err(Error::BlowUp { xi, dphi: y[1] })
            } else {
                Ok(y)
            }
        };
        for k in back..total - 1 {
            let y = guard(xi_at(k + 1), self.rk4_step(xi_at(k), [phi[k], dphi[k]], step)?)?;
            phi[k + 1] = y[0];
            dphi[k + 1] = y[1];
        }
        for k in (1..=back).rev() {
            let y = guard(xi_at(k - 1), self.rk4_step(xi_at(k), [phi[k], dphi[k]], -step)?)?;
            phi[k - 1] = y[0];
            dphi[k - 1] = y[1];
        }
        let xi: Vec<f64> = (0..total).map(xi_at).collect();
        let lambda = xi
            .iter()
            .zip(&dphi)
            .map(|(x, d)| self.lambda_profile(*x, *d))
            .collect::<Result<Vec<_>>>()?;
        let mu = xi
            .iter()
            .zip(&dphi)
            .map(|(x, d)| self.mu_profile(*x, *d))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProfileSolution {
            ansatz: self.clone(),
            xi0,
            step,
            method: "rk4".into(),
            xi,
            phi,
            dphi,
            lambda,
            mu,
        })
    }
}

/// Builds `P(ξ, φ')` and `L(ξ, φ')` as expressions in `xi` and `dphi`.
fn rhs_expressions(n: usize, m: f64, big_f: &Expression, f: &Expression) -> (Expression, Expression) {
    use Expression as E;
    let lit = E::Literal;
    let b1 = big_f.differentiate(XI);
    let b2 = b1.differentiate(XI);
    let f1 = f.differentiate(XI);
    let f2 = f1.differentiate(XI);
    let dphi = E::Symbol(DPHI.into());
    let ratio = E::div(b1.clone(), big_f.clone());
    let phi_rhs = E::sub(
        E::sub(
            E::mul(
                E::div(lit(m), f.clone()),
                E::add(f2, E::mul(E::mul(lit(2.0), ratio.clone()), f1.clone())),
            ),
            E::mul(lit(n as f64 - 2.0), E::div(b2.clone(), big_f.clone())),
        ),
        E::mul(E::mul(lit(2.0), ratio.clone()), dphi.clone()),
    );
    let inner = E::add(
        E::sub(
            E::sub(
                E::div(b2, big_f.clone()),
                E::mul(lit(n as f64 - 1.0), E::pow(ratio.clone(), lit(2.0))),
            ),
            E::mul(ratio.clone(), dphi),
        ),
        E::mul(E::mul(lit(m), E::div(f1, f.clone())), ratio),
    );
    let lambda_rhs = E::mul(E::pow(big_f.clone(), lit(2.0)), inner);
    (phi_rhs, lambda_rhs)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileSolution {
    #[serde(skip)]
    ansatz: ConformalAnsatz,
    pub xi0: f64,
    pub step: f64,
    pub method: String,
    pub xi: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

impl ProfileSolution {
    pub fn ansatz(&self) -> &ConformalAnsatz {
        &self.ansatz
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xi[0], self.xi[self.len() - 1])
    }

    /// Max deviation of the μ column from its mean.
    pub fn mu_deviation(&self) -> f64 {
        crate::constraints::MuReport::from_samples(self.mu.clone()).deviation
    }

    /// `[φ, φ', φ'', φ''']` at an arbitrary `ξ` in the solved range: one RK4
    /// step from the nearest node gives `(φ, φ')`, the ODE gives the rest.
    pub fn profile_at(&self, xi: f64) -> Result<[f64; 4]> {
        let (a, b) = self.range();
        let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
        if !(xi >= a - slack && xi <= b + slack) {
            return Err(Error::OutOfRange(format!("xi = {xi} outside solved range [{a}, {b}]")));
        }
        let k = (((xi - a) / self.step).round() as usize).min(self.len() - 1);
        let h = xi - self.xi[k];
        let y = if h == 0.0 {
            [self.phi[k], self.dphi[k]]
        } else {
            self.ansatz.rk4_step(self.xi[k], [self.phi[k], self.dphi[k]], h)?
        };
        let rhs = &self.ansatz.phi_rhs;
        let p2 = Rhs::at(&rhs.value, xi, y[1])?;
        let p3 = Rhs::at(&rhs.d_xi, xi, y[1])? + Rhs::at(&rhs.d_dphi, xi, y[1])? * p2;
        Ok([y[0], y[1], p2, p3])
    }

    /// `[λ, λ', λ'']` along the solution at `ξ`.
    pub fn lambda_at(&self, xi: f64) -> Result<[f64; 3]> {
        let p = self.profile_at(xi)?;
        let l = &self.ansatz.lambda_rhs;
        let at = |c: &CompiledExpr| Rhs::at(c, xi, p[1]);
        let l1 = at(&l.d_xi)? + at(&l.d_dphi)? * p[2];
        let l2 = at(&l.d_xi_xi)? + 2.0 * at(&l.d_xi_dphi)? * p[2] + at(&l.d_dphi_dphi)? * p[2] * p[2]
            + at(&l.d_dphi)? * p[3];
        Ok([at(&l.value)?, l1, l2])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
        w.write_record(["xi", "phi", "dphi", "lambda", "mu"]).map_err(io)?;
        for i in 0..self.len() {
            let row = [self.xi[i], self.phi[i], self.dphi[i], self.lambda[i], self.mu[i]];
            w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::Invalid(format!("cannot create {}: {e}", path.display())))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Compose the profiles with `ξ = α·x` on `chart`, giving a triple on
    /// `(chart, F(ξ)⁻² δ)`.
    pub fn lift(&self, alpha: &[f64], chart: &Chart) -> Result<SolitonTriple> {
        let n = chart.dim();
        if alpha.len() != n {
            return Err(Error::Dimension(format!("direction has {} components, chart has {n}", alpha.len())));
        }
        check_direction(alpha)?;
        let (lo, hi) = xi_bounds(alpha, chart);
        let (a, b) = self.range();
        if lo < a - 1e-12 || hi > b + 1e-12 {
            return Err(Error::OutOfRange(format!(
                "chart maps to xi in [{lo}, {hi}], solution covers [{a}, {b}]"
            )));
        }
        let coords = chart.names().to_vec();
        let xi = xi_expression(alpha, &coords);
        let conf = Expression::pow(self.ansatz.big_f().substitute(XI, &xi), Expression::Literal(-2.0));
        let metric = MetricField::diagonal(chart.clone(), vec![conf; n])?;
        let f = ScalarField::from_expr(self.ansatz.f().substitute(XI, &xi), &coords)?;
        let shared = Arc::new(self.clone());
        let phi = ScalarField::analytic(Arc::new(ProfileField {
            solution: shared.clone(),
            alpha: alpha.to_vec(),
            kind: ProfileKind::Phi,
        }));
        let lambda = ScalarField::analytic(Arc::new(ProfileField {
            solution: shared,
            alpha: alpha.to_vec(),
            kind: ProfileKind::Lambda,
        }));
        SolitonTriple::new(metric, f, phi, lambda, self.ansatz.m)
    }
}

pub fn xi_bounds(alpha: &[f64], chart: &Chart) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for ((a, l), u) in alpha.iter().zip(chart.lower()).zip(chart.upper()) {
        lo += (a * l).min(a * u);
        hi += (a * l).max(a * u);
    }
    (lo, hi)
}

#[derive(Debug, Clone, Copy)]
enum ProfileKind {
    Phi,
    Lambda,
}

struct ProfileField {
    solution: Arc<ProfileSolution>,
    alpha: Vec<f64>,
    kind: ProfileKind,
}

impl ProfileField {
    fn xi(&self, p: &[f64]) -> f64 {
        self.alpha.iter().zip(p).map(|(a, x)| a * x).sum()
    }
}

impl JetSource for ProfileField {
    fn dim(&self) -> usize {
        self.alpha.len()
    }

    fn value(&self, p: &[f64]) -> Result<f64> {
        let xi = self.xi(p);
        match self.kind {
            ProfileKind::Phi => Ok(self.solution.profile_at(xi)?[0]),
            ProfileKind::Lambda => Ok(self.solution.lambda_at(xi)?[0]),
        }
    }

    fn jet(&self, p: &[f64], order: usize) -> Result<ScalarJet> {
        let xi = self.xi(p);
        let profile: Vec<f64> = match self.kind {
            ProfileKind::Phi => self.solution.profile_at(xi)?.to_vec(),
            ProfileKind::Lambda => {
                if order > 2 {
                    return Err(Error::Invalid("lambda profile has derivatives up to order 2".into()));
                }
                let l = self.solution.lambda_at(xi)?;
                vec![l[0], l[1], l[2], 0.0]
            }
        };
        Ok(ScalarJet::from_profile(&profile, &self.alpha, order))
    }

    fn describe(&self) -> String {
        let name = match self.kind {
            ProfileKind::Phi => "phi",
            ProfileKind::Lambda => "lambda",
        };
        format!("<rk4 {name} profile, step {:e}>", self.solution.step)
    }
}

/// Closed-form family on `(box, e^{2ξ} δ)`: `f = e^ξ`,
/// `φ = (c1/2) e^{2ξ} − ((2−m−n)/2) ξ + c2`, `λ = c1 + ((2−m−n)/2) e^{−2ξ}`.
pub fn closed_form_family(c1: f64, c2: f64, n: usize, m: f64) -> Result<SolitonTriple> {
    let half = 1.0 / (n as f64).sqrt();
    let chart = Chart::cube(&coordinates(n), -half, half)?;
    closed_form_family_on(c1, c2, m, &diagonal_direction(n), &chart)
}

pub fn closed_form_family_on(c1: f64, c2: f64, m: f64, alpha: &[f64], chart: &Chart) -> Result<SolitonTriple> {
    let n = chart.dim();
    if n < 3 || m < 2.0 {
        return Err(Error::Invalid(format!("closed-form family needs n >= 3 and m >= 2, got n = {n}, m = {m}")));
    }
    if alpha.len() != n {
        return Err(Error::Dimension(format!("direction has {} components, chart has {n}", alpha.len())));
    }
    check_direction(alpha)?;
    let coords = chart.names().to_vec();
    let xi = xi_expression(alpha, &coords);
    let params: HashMap<String, f64> =
        [("c1", c1), ("c2", c2), ("m", m), ("n", n as f64)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let field = |text: &str| -> Result<ScalarField> {
        let e = parse(text)?.bind_parameters(&params).substitute(XI, &xi);
        ScalarField::from_expr(e, &coords)
    };
    let conf = parse("exp(2*xi)")?.substitute(XI, &xi);
    let metric = MetricField::diagonal(chart.clone(), vec![conf; n])?;
    SolitonTriple::new(
        metric,
        field("exp(xi)")?,
        field("c1/2*exp(2*xi) - (2-m-n)/2*xi + c2")?,
        field("c1 + (2-m-n)/2*exp(-2*xi)")?,
        m,
    )
}

/// Initial data `(φ(0), φ'(0))` of the closed-form family.
pub fn closed_form_initial(c1: f64, c2: f64, n: usize, m: f64) -> (f64, f64) {
    let k = (2.0 - m - n as f64) / 2.0;
    (c1 / 2.0 + c2, c1 - k)
}

/// Closed-form `φ` profile for comparison with integrated solutions.
pub fn closed_form_phi(c1: f64, c2: f64, n: usize, m: f64, xi: f64) -> f64 {
    let k = (2.0 - m - n as f64) / 2.0;
    c1 / 2.0 * (2.0 * xi).exp() - k * xi + c2
}
