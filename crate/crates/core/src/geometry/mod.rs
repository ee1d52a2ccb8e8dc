//! Coordinate Riemannian geometry: metrics on charts, Levi-Civita
//! connection, curvature and the differential operators built on them.

mod chart;
mod curvature;
mod field;
mod report;
mod tensor;

pub use chart::{Chart, Grid};
pub use curvature::PointGeometry;
pub use field::{Backend, JetSource, MetricField, MetricJet, ScalarField, ScalarJet, DEFAULT_FD_STEP};
pub use report::ResidualReport;
pub use tensor::{
    gradient_of, hessian_of, inner_gradients, laplacian_of, oneform_norm, tensor_norm, NormKind,
    Tensor2Field, Tensor2Jet, D1,
};
pub(crate) use tensor::scalar_jet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Christoffel symbols `Γ^k_ij` at a point.
#[derive(Debug, Clone)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

pub fn christoffel(g: &MetricField, p: &[f64]) -> Result<Christoffel> {
    let geom = PointGeometry::at(g, p, 1)?;
    Ok(Christoffel { n: geom.n, data: geom.gamma })
}

pub fn ricci(g: &MetricField, p: &[f64]) -> Result<DMatrix<f64>> {
    Ok(PointGeometry::at(g, p, 2)?.ricci().clone())
}

pub fn scalar_curvature(g: &MetricField, p: &[f64]) -> Result<f64> {
    Ok(PointGeometry::at(g, p, 2)?.scalar_curvature())
}

/// Largest component of `∇g`.
pub fn metric_compatibility(g: &MetricField, p: &[f64]) -> Result<f64> {
    Ok(PointGeometry::at(g, p, 1)?.metric_compatibility())
}

pub fn gradient(u: &ScalarField, g: &MetricField, p: &[f64]) -> Result<Vec<f64>> {
    let geom = PointGeometry::at(g, p, 1)?;
    Ok(gradient_of(&scalar_jet(u, g, p, 1)?, &geom))
}

pub fn hessian(u: &ScalarField, g: &MetricField, p: &[f64]) -> Result<DMatrix<f64>> {
    let geom = PointGeometry::at(g, p, 1)?;
    Ok(hessian_of(&scalar_jet(u, g, p, 2)?, &geom).t)
}

pub fn laplacian(u: &ScalarField, g: &MetricField, p: &[f64]) -> Result<f64> {
    let geom = PointGeometry::at(g, p, 1)?;
    Ok(laplacian_of(&scalar_jet(u, g, p, 2)?, &geom).v)
}

pub fn divergence(t: &Tensor2Field, g: &MetricField, p: &[f64]) -> Result<Vec<f64>> {
    let geom = PointGeometry::at(g, p, t.metric_order())?;
    Ok(t.jet(g, &geom)?.divergence(&geom))
}

/// `−½ dS + div Ric`.
pub fn bianchi_residual(g: &MetricField, p: &[f64]) -> Result<Vec<f64>> {
    let geom = PointGeometry::at(g, p, 3)?;
    Ok(bianchi_at(&geom))
}

pub fn bianchi_at(geom: &PointGeometry) -> Vec<f64> {
    let ric = Tensor2Jet { t: geom.ricci().clone(), dt: geom.dricci().to_vec() };
    let div = ric.divergence(geom);
    div.iter().zip(geom.dscalar()).map(|(d, s)| d - 0.5 * s).collect()
}

/// `div ∇²φ − Ric(∇φ, ·) − dΔφ`.
pub fn hessian_divergence_residual(u: &ScalarField, g: &MetricField, p: &[f64]) -> Result<Vec<f64>> {
    let geom = PointGeometry::at(g, p, 2)?;
    let jet = scalar_jet(u, g, p, 3)?;
    let hess = hessian_of(&jet, &geom);
    let div = hess.divergence(&geom);
    let lap = hess.trace(&geom);
    let grad = gradient_of(&jet, &geom);
    let ric_grad = Tensor2Jet { t: geom.ricci().clone(), dt: vec![] }.contract(&grad);
    Ok((0..geom.n).map(|j| div[j] - ric_grad[j] - lap.d[j]).collect())
}

/// `½ d|∇φ|² − ∇²φ(∇φ, ·)`.
pub fn gradient_norm_residual(u: &ScalarField, g: &MetricField, p: &[f64]) -> Result<Vec<f64>> {
    let geom = PointGeometry::at(g, p, 1)?;
    let jet = scalar_jet(u, g, p, 2)?;
    let sq = inner_gradients(&jet, &jet, &geom);
    let hg = hessian_of(&jet, &geom).contract(&gradient_of(&jet, &geom));
    Ok((0..geom.n).map(|j| 0.5 * sq.d[j] - hg[j]).collect())
}

/// Ricci tensor of `F⁻² δ` from flat derivatives of `F`:
/// `(n−2) ∂²F / F + (ΔF / F − (n−1) |∂F|² / F²) δ`.
pub fn conformal_ricci(f: &ScalarField, chart: &Chart, backend: &Backend, p: &[f64]) -> Result<DMatrix<f64>> {
    let n = chart.dim();
    let jet = f.jet(p, 2, backend, chart)?;
    let fv = jet.value;
    if fv <= 0.0 {
        return Err(Error::NonPositive { what: "conformal factor F".into(), value: fv, point: p.to_vec() });
    }
    let lap: f64 = (0..n).map(|i| jet.d2(i, i)).sum();
    let grad2: f64 = jet.d1.iter().map(|x| x * x).sum();
    let mut ric = DMatrix::from_fn(n, n, |i, j| (n as f64 - 2.0) * jet.d2(i, j) / fv);
    let diag = lap / fv - (n as f64 - 1.0) * grad2 / (fv * fv);
    for i in 0..n {
        ric[(i, i)] += diag;
    }
    Ok(ric)
}

/// Round-sphere metric of radius 1 in hyperspherical coordinates
/// `(θ₁, …, θ_{n−1}, φ)`, with each polar angle kept in `[0.2, π−0.2]`.
pub fn unit_sphere(n: usize) -> Result<MetricField> {
    if n < 2 {
        return Err(Error::Invalid("sphere dimension must be at least 2".into()));
    }
    let mut names: Vec<String> = (1..n).map(|i| if n == 2 { "th".to_string() } else { format!("th{i}") }).collect();
    names.push("ph".into());
    let mut lower = vec![0.2; n - 1];
    let mut upper = vec![std::f64::consts::PI - 0.2; n - 1];
    lower.push(-std::f64::consts::PI);
    upper.push(std::f64::consts::PI);
    let chart = Chart::new(&names, &lower, &upper)?;
    let mut diag = Vec::with_capacity(n);
    let mut factor = crate::expr::Expression::Literal(1.0);
    for name in &names {
        diag.push(factor.clone());
        let s = crate::expr::parse(&format!("sin({name})^2"))?;
        factor = crate::expr::Expression::mul(factor, s);
    }
    MetricField::diagonal(chart, diag)
}

/// Poincaré ball `4 δ / (1 − |x|²)²` on the cube of half-width `r`.
pub fn poincare_ball(n: usize, r: f64) -> Result<MetricField> {
    if !(r > 0.0 && r * (n as f64).sqrt() < 1.0) {
        return Err(Error::Invalid(format!("cube of half-width {r} leaves the unit ball")));
    }
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let chart = Chart::cube(&names, -r, r)?;
    let r2 = names.iter().map(|x| format!("{x}^2")).collect::<Vec<_>>().join(" + ");
    let conf = crate::expr::parse(&format!("4/(1 - ({r2}))^2"))?;
    MetricField::diagonal(chart, vec![conf; n])
}
