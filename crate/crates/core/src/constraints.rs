//! Residuals of the base equations of a soliton warped product and of the
//! soliton equations themselves:
//!
//! - `Ric + ∇²φ = λ g + (m/f) ∇²f`
//! - `−2λ dφ + d((2−m−n)λ + |∇φ|² − Δφ − (m/f) ⟨∇φ, ∇f⟩) = 0`
//! - `μ = λ f² + f Δf + (m−1)|∇f|² − f ⟨∇φ, ∇f⟩` constant
//! - `Ric + ∇²ψ = λ g`, its trace, and the one-form identity that follows.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    hessian_of, inner_gradients, oneform_norm, scalar_jet, tensor_norm, Backend, Grid, MetricField, NormKind,
    PointGeometry, ResidualReport, ScalarField, D1,
};

/// `(g, f, φ, λ, m)` on a base of dimension `n`.
#[derive(Debug, Clone)]
pub struct SolitonTriple {
    pub metric: MetricField,
    pub f: ScalarField,
    pub phi: ScalarField,
    pub lambda: ScalarField,
    pub m: f64,
}

/// Everything the base equations need at one point.
#[derive(Debug, Clone)]
pub struct TriplePoint {
    pub ricci_hessian: DMatrix<f64>,
    pub oneform: Vec<f64>,
    pub mu: D1,
    pub f: f64,
    pub lambda: f64,
    pub geom: PointGeometry,
}

#[derive(Debug, Clone, Serialize)]
pub struct MuReport {
    pub samples: Vec<f64>,
    pub mean: f64,
    pub deviation: f64,
}

impl MuReport {
    pub fn from_samples(samples: Vec<f64>) -> MuReport {
        let mean = samples.iter().sum::<f64>() / samples.len().max(1) as f64;
        let deviation = samples.iter().fold(0.0_f64, |a, s| a.max((s - mean).abs()));
        MuReport { samples, mean, deviation }
    }
}

impl SolitonTriple {
    pub fn new(metric: MetricField, f: ScalarField, phi: ScalarField, lambda: ScalarField, m: f64) -> Result<Self> {
        if m == 0.0 || !m.is_finite() {
            return Err(Error::Invalid(format!("m must be a nonzero real, got {m}")));
        }
        let n = metric.dim();
        for (name, u) in [("f", &f), ("phi", &phi), ("lambda", &lambda)] {
            if u.dim() != n {
                return Err(Error::Dimension(format!("{name} has {} coordinates, base has {n}", u.dim())));
            }
        }
        Ok(SolitonTriple { metric, f, phi, lambda, m })
    }

    pub fn n(&self) -> usize {
        self.metric.dim()
    }

    pub fn backend(&self) -> Backend {
        *self.metric.backend()
    }

    pub fn with_backend(&self, backend: Backend) -> SolitonTriple {
        SolitonTriple { metric: self.metric.clone().with_backend(backend), ..self.clone() }
    }

    pub fn check_f_positive(&self, grid: &Grid) -> Result<()> {
        self.f.check_positive("f", grid)
    }

    pub fn at(&self, p: &[f64]) -> Result<TriplePoint> {
        let geom = PointGeometry::at(&self.metric, p, 2)?;
        let fj = scalar_jet(&self.f, &self.metric, p, 3)?;
        if !(fj.value > 0.0) {
            return Err(Error::NonPositive { what: "f".into(), value: fj.value, point: p.to_vec() });
        }
        let pj = scalar_jet(&self.phi, &self.metric, p, 3)?;
        let lj = scalar_jet(&self.lambda, &self.metric, p, 1)?;
        let n = self.n() as f64;
        let m = self.m;

        let hf = hessian_of(&fj, &geom);
        let hp = hessian_of(&pj, &geom);
        let ricci_hessian =
            geom.ricci() + &hp.t - geom.g() * lj.value - &hf.t * (m / fj.value);

        let f = D1::from_jet(&fj);
        let lambda = D1::from_jet(&lj);
        let grad_phi2 = inner_gradients(&pj, &pj, &geom);
        let grad_f2 = inner_gradients(&fj, &fj, &geom);
        let dphi_f = inner_gradients(&pj, &fj, &geom);
        let lap_phi = hp.trace(&geom);
        let lap_f = hf.trace(&geom);

        let q = lambda.scale(2.0 - m - n) + grad_phi2 - lap_phi - f.recip().scale(m) * dphi_f.clone();
        let oneform = (0..geom.n).map(|j| -2.0 * lambda.v * pj.d1[j] + q.d[j]).collect();

        let mu = lambda.clone() * f.clone() * f.clone() + f.clone() * lap_f + grad_f2.scale(m - 1.0)
            - f.clone() * dphi_f;
        Ok(TriplePoint { ricci_hessian, oneform, mu, f: fj.value, lambda: lj.value, geom })
    }

    /// Sup of `‖Ric + ∇²φ − λ g − (m/f) ∇²f‖` over the grid.
    pub fn residual_ricci_hessian(&self, grid: &Grid) -> Result<ResidualReport> {
        self.residual_ricci_hessian_with(grid, NormKind::Coordinate)
    }

    pub fn residual_ricci_hessian_with(&self, grid: &Grid, norm: NormKind) -> Result<ResidualReport> {
        ResidualReport::sweep("ricci-hessian", grid, self.backend(), norm, |p| {
            let tp = self.at(p)?;
            Ok(tensor_norm(&tp.ricci_hessian, norm, &tp.geom))
        })
    }

    pub fn residual_oneform(&self, grid: &Grid) -> Result<ResidualReport> {
        self.residual_oneform_with(grid, NormKind::Coordinate)
    }

    pub fn residual_oneform_with(&self, grid: &Grid, norm: NormKind) -> Result<ResidualReport> {
        ResidualReport::sweep("one-form", grid, self.backend(), norm, |p| {
            let tp = self.at(p)?;
            Ok(oneform_norm(&tp.oneform, norm, &tp.geom))
        })
    }

    pub fn mu_field(&self, grid: &Grid) -> Result<MuReport> {
        Ok(MuReport::from_samples(grid.sweep(|p| Ok(self.at(p)?.mu.v))?))
    }

    /// Sup of `‖dμ + (f²/m) E‖`, where `E` is the one-form residual. The
    /// combination vanishes wherever the Ricci-Hessian equation holds, so
    /// it separates failures of the two base equations.
    pub fn first_integral_balance(&self, grid: &Grid) -> Result<ResidualReport> {
        ResidualReport::sweep("first-integral balance", grid, self.backend(), NormKind::Coordinate, |p| {
            let tp = self.at(p)?;
            let c = tp.f * tp.f / self.m;
            let r: Vec<f64> = tp.mu.d.iter().zip(&tp.oneform).map(|(d, e)| d + c * e).collect();
            Ok(oneform_norm(&r, NormKind::Coordinate, &tp.geom))
        })
    }
}

/// Residuals of a gradient almost Ricci soliton `(M^k, g, ψ, λ)`.
#[derive(Debug, Clone, Serialize)]
pub struct SolitonSuite {
    pub fundamental: ResidualReport,
    pub trace: ResidualReport,
    pub oneform: ResidualReport,
}

struct SolitonPoint {
    fundamental: DMatrix<f64>,
    trace: f64,
    oneform: Vec<f64>,
    geom: PointGeometry,
}

fn soliton_point(g: &MetricField, psi: &ScalarField, lambda: &ScalarField, p: &[f64]) -> Result<SolitonPoint> {
    let geom = PointGeometry::at(g, p, 2)?;
    let k = geom.n as f64;
    let pj = scalar_jet(psi, g, p, 3)?;
    let lj = scalar_jet(lambda, g, p, 1)?;
    let hp = hessian_of(&pj, &geom);
    let fundamental = geom.ricci() + &hp.t - geom.g() * lj.value;
    let lap = hp.trace(&geom);
    let trace = geom.scalar_curvature() + lap.v - k * lj.value;
    let q = D1::from_jet(&lj).scale(2.0 - k) + inner_gradients(&pj, &pj, &geom) - lap;
    let oneform = (0..geom.n).map(|j| -2.0 * lj.value * pj.d1[j] + q.d[j]).collect();
    Ok(SolitonPoint { fundamental, trace, oneform, geom })
}

/// Fundamental equation, its trace, and `−2λ dψ + d((2−k)λ + |∇ψ|² − Δψ)`.
pub fn soliton_identity_suite(g: &MetricField, psi: &ScalarField, lambda: &ScalarField, grid: &Grid) -> Result<SolitonSuite> {
    let points = grid.sweep(|p| {
        let sp = soliton_point(g, psi, lambda, p)?;
        Ok([
            tensor_norm(&sp.fundamental, NormKind::Coordinate, &sp.geom),
            sp.trace.abs(),
            oneform_norm(&sp.oneform, NormKind::Coordinate, &sp.geom),
        ])
    })?;
    let column = |i: usize| points.iter().map(|r| r[i]).collect::<Vec<_>>();
    let backend = *g.backend();
    Ok(SolitonSuite {
        fundamental: ResidualReport::from_samples("fundamental", grid, backend, NormKind::Coordinate, column(0)),
        trace: ResidualReport::from_samples("trace", grid, backend, NormKind::Coordinate, column(1)),
        oneform: ResidualReport::from_samples("soliton one-form", grid, backend, NormKind::Coordinate, column(2)),
    })
}

/// Per-point `|R + Δψ − kλ| / ‖Ric + ∇²ψ − λ g‖_g`; bounded by `√k`.
pub fn trace_ratio(g: &MetricField, psi: &ScalarField, lambda: &ScalarField, p: &[f64]) -> Result<Option<f64>> {
    let sp = soliton_point(g, psi, lambda, p)?;
    let norm = tensor_norm(&sp.fundamental, NormKind::Metric, &sp.geom);
    Ok(if norm > 0.0 { Some(sp.trace.abs() / norm) } else { None })
}

/// `d(R + |∇ψ|² − 2(k−1)λ) − 2λ dψ`.
pub fn barros_ribeiro_residual(g: &MetricField, psi: &ScalarField, lambda: &ScalarField, grid: &Grid) -> Result<ResidualReport> {
    ResidualReport::sweep("barros-ribeiro", grid, *g.backend(), NormKind::Coordinate, |p| {
        let geom = PointGeometry::at(g, p, 3)?;
        let k = geom.n as f64;
        let pj = scalar_jet(psi, g, p, 2)?;
        let lj = scalar_jet(lambda, g, p, 1)?;
        let grad2 = inner_gradients(&pj, &pj, &geom);
        let r: Vec<f64> = (0..geom.n)
            .map(|j| geom.dscalar()[j] + grad2.d[j] - 2.0 * (k - 1.0) * lj.d1[j] - 2.0 * lj.value * pj.d1[j])
            .collect();
        Ok(oneform_norm(&r, NormKind::Coordinate, &geom))
    })
}
