//! Rigidity-side checks: the operator `𝓔 = Δ − ⟨∇φ, ∇·⟩ + ((m−1)/f)⟨∇f, ∇·⟩`
//! and its identity `𝓔(f) = (μ − λf²)/f`, the compact integral identity by
//! quadrature on the 2-sphere, height-function triples, and a report on the
//! hypotheses of the maximum-principle rigidity statement.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constraints::SolitonTriple;
use crate::error::{Error, Result};
use crate::geometry::{
    hessian_of, inner_gradients, laplacian_of, poincare_ball, scalar_jet, unit_sphere, Grid, MetricField,
    NormKind, PointGeometry, ResidualReport, ScalarField,
};

/// `𝓔(u)` at `p`.
pub fn elliptic_e(u: &ScalarField, triple: &SolitonTriple, p: &[f64]) -> Result<f64> {
    let g = &triple.metric;
    let geom = PointGeometry::at(g, p, 1)?;
    let uj = scalar_jet(u, g, p, 2)?;
    let pj = scalar_jet(&triple.phi, g, p, 1)?;
    let fj = scalar_jet(&triple.f, g, p, 1)?;
    if !(fj.value > 0.0) {
        return Err(Error::NonPositive { what: "f".into(), value: fj.value, point: p.to_vec() });
    }
    Ok(laplacian_of(&uj, &geom).v - inner_gradients(&pj, &uj, &geom).v
        + (triple.m - 1.0) / fj.value * inner_gradients(&fj, &uj, &geom).v)
}

/// Sup over `grid` of `|𝓔(f) − (μ̄ − λf²)/f|` where `μ̄` is the mean of μ
/// on the same grid.
pub fn elliptic_identity_residual(triple: &SolitonTriple, grid: &Grid) -> Result<(ResidualReport, f64)> {
    let mu = triple.mu_field(grid)?.mean;
    let report = ResidualReport::sweep("elliptic identity", grid, triple.backend(), NormKind::Coordinate, |p| {
        let e = elliptic_e(&triple.f, triple, p)?;
        let f = triple.f.value(p)?;
        let lambda = triple.lambda.value(p)?;
        Ok((e - (mu - lambda * f * f) / f).abs())
    })?;
    Ok((report, mu))
}

// ---------------------------------------------------------------------------
// Quadrature on the 2-sphere

#[derive(Debug, Clone, Serialize)]
pub struct QuadNode {
    pub chart: usize,
    pub point: Vec<f64>,
    pub weight: f64,
}

/// Weighted nodes over an atlas; `weight` already contains the volume
/// density and the partition of unity.
#[derive(Debug, Clone, Serialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<QuadNode>,
    pub volume: f64,
    pub resolution: (usize, usize),
}

const POLAR_MARGIN: f64 = 0.2;

fn smooth_step(t: f64, a: f64, b: f64) -> f64 {
    let psi = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let x = (t - a) / (b - a);
    psi(x) / (psi(x) + psi(1.0 - x))
}

/// Embedding of the `(θ, φ)` chart with polar axis `axis` (2 = z, 0 = x).
fn embed(axis: usize, th: f64, ph: f64) -> [f64; 3] {
    let (s, c) = th.sin_cos();
    match axis {
        2 => [s * ph.cos(), s * ph.sin(), c],
        _ => [c, s * ph.cos(), s * ph.sin()],
    }
}

impl QuadratureGrid {
    /// Two polar charts of the unit 2-sphere (axes z and x), midpoint rule
    /// in `θ ∈ [0.2, π−0.2]`, periodic rule in `φ`, smooth partition of
    /// unity in `sin²θ` supported away from the chart edges.
    pub fn sphere2(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(Error::Invalid("quadrature needs at least one node per axis".into()));
        }
        let (s0, s1) = (0.25_f64.sin().powi(2), 0.6_f64.sin().powi(2));
        let rho = |sin2: f64| smooth_step(sin2, s0, s1);
        let dth = (PI - 2.0 * POLAR_MARGIN) / n_theta as f64;
        let dph = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::new();
        for (chart, axis) in [(0, 2), (1, 0)] {
            for i in 0..n_theta {
                let th = POLAR_MARGIN + (i as f64 + 0.5) * dth;
                for j in 0..n_phi {
                    let ph = -PI + j as f64 * dph;
                    let x = embed(axis, th, ph);
                    let own = rho(1.0 - x[axis] * x[axis]);
                    let other_axis = if axis == 2 { 0 } else { 2 };
                    let other = rho(1.0 - x[other_axis] * x[other_axis]);
                    let w = own / (own + other) * th.sin() * dth * dph;
                    if w > 0.0 {
                        nodes.push(QuadNode { chart, point: vec![th, ph], weight: w });
                    }
                }
            }
        }
        let volume = nodes.iter().map(|q| q.weight).sum::<f64>();
        if ((volume - 4.0 * PI) / (4.0 * PI)).abs() > 0.01 {
            return Err(Error::Invalid(format!("quadrature volume {volume} is not within 1% of 4 pi")));
        }
        Ok(QuadratureGrid { nodes, volume, resolution: (n_theta, n_phi) })
    }

    /// Ordered sum of `f(chart, point) · weight`.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(usize, &[f64]) -> Result<f64> + Sync,
    {
        use rayon::prelude::*;
        let values: Vec<Result<f64>> = self.nodes.par_iter().map(|q| f(q.chart, &q.point).map(|v| v * q.weight)).collect();
        let mut total = 0.0;
        for v in values {
            total += v?;
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub terms: [f64; 3],
    pub difference: f64,
    pub volume: f64,
    /// Sup of the Ricci-Hessian residual over the quadrature nodes.
    pub ricci_hessian_sup: f64,
}

/// Both sides of
/// `∫|∇²φ − (Δφ/n) g|² = ((n−2)/2n)∫⟨∇S, ∇φ⟩ − (m/n)∫(Δf/f)Δφ + m∫⟨∇²φ, ∇²f⟩/f`
/// with one triple per chart of the quadrature atlas.
pub fn compact_integral_identity(atlas: &[SolitonTriple], quad: &QuadratureGrid) -> Result<IntegralIdentity> {
    let charts = quad.nodes.iter().map(|q| q.chart).max().map_or(0, |c| c + 1);
    if atlas.len() < charts {
        return Err(Error::Invalid(format!("quadrature uses {charts} charts, atlas has {}", atlas.len())));
    }
    let integrand = |chart: usize, p: &[f64]| -> Result<[f64; 5]> {
        let t = &atlas[chart];
        let g = &t.metric;
        let geom = PointGeometry::at(g, p, 3)?;
        let n = geom.n as f64;
        let pj = scalar_jet(&t.phi, g, p, 2)?;
        let fj = scalar_jet(&t.f, g, p, 2)?;
        let hp = hessian_of(&pj, &geom).t;
        let hf = hessian_of(&fj, &geom).t;
        let a = &geom.inv;
        let dot = |x: &nalgebra::DMatrix<f64>, y: &nalgebra::DMatrix<f64>| (a * x * a).component_mul(y).sum();
        let lap_p = a.component_mul(&hp).sum();
        let lap_f = a.component_mul(&hf).sum();
        let traceless = &hp - geom.g() * (lap_p / n);
        let grad_s: f64 = {
            let up = geom.raise(geom.dscalar());
            up.iter().zip(&pj.d1).map(|(x, y)| x * y).sum()
        };
        let rh = t.at(p)?.ricci_hessian.norm();
        Ok([
            dot(&traceless, &traceless),
            (n - 2.0) / (2.0 * n) * grad_s,
            -(t.m / n) * lap_f / fj.value * lap_p,
            t.m / fj.value * dot(&hp, &hf),
            rh,
        ])
    };
    use rayon::prelude::*;
    let values: Vec<Result<[f64; 5]>> = quad.nodes.par_iter().map(|q| integrand(q.chart, &q.point)).collect();
    let mut sums = [0.0; 4];
    let mut rh_sup: f64 = 0.0;
    for (q, v) in quad.nodes.iter().zip(values) {
        let v = v?;
        for k in 0..4 {
            sums[k] += v[k] * q.weight;
        }
        rh_sup = rh_sup.max(v[4]);
    }
    let rhs = sums[1] + sums[2] + sums[3];
    Ok(IntegralIdentity {
        lhs: sums[0],
        rhs,
        terms: [sums[1], sums[2], sums[3]],
        difference: (sums[0] - rhs).abs(),
        volume: quad.volume,
        ricci_hessian_sup: rh_sup,
    })
}

// ---------------------------------------------------------------------------
// Height-function triples

fn height_triple(metric: MetricField, h: &str, c: f64, a: f64, m: f64) -> Result<SolitonTriple> {
    let n = metric.dim() as f64;
    let coords = metric.coords().to_vec();
    let field = |text: String| ScalarField::parse(&text, &coords);
    SolitonTriple::new(
        metric,
        field(format!("{c} + {h}"))?,
        field(format!("{a}*({h})"))?,
        field(format!("{} - {a}*({h}) + {m}*({h})/({c} + {h})", n - 1.0))?,
        m,
    )
}

/// On the unit `n`-sphere with `h = cos θ₁` (the height along the last
/// embedding axis): `f = c + h`, `φ = a h`, `λ = (n−1) − a h + m h/(c+h)`.
pub fn sphere_height_triple(c: f64, a: f64, n: usize, m: f64) -> Result<SolitonTriple> {
    if !(c > 1.0) {
        return Err(Error::Invalid(format!("c must exceed 1 so that f = c + h stays positive, got {c}")));
    }
    let g = unit_sphere(n)?;
    let h = format!("cos({})", g.coords()[0]);
    height_triple(g, &h, c, a, m)
}

/// The same triple on both charts of [`QuadratureGrid::sphere2`]; in the
/// x-polar chart the height is `z = sin θ sin φ`.
pub fn sphere_height_atlas(c: f64, a: f64, m: f64) -> Result<Vec<SolitonTriple>> {
    let z_chart = sphere_height_triple(c, a, 2, m)?;
    let g = unit_sphere(2)?;
    let x_chart = height_triple(g, "sin(th)*sin(ph)", c, a, m)?;
    Ok(vec![z_chart, x_chart])
}

/// Height `⟨X, e₁⟩` of the hyperboloid in the Poincaré-ball chart.
pub fn hyperbolic_height(coords: &[String]) -> String {
    let r2 = coords.iter().map(|x| format!("{x}^2")).collect::<Vec<_>>().join(" + ");
    format!("2*{}/(1 - ({r2}))", coords[0])
}

pub fn hyperbolic_box(n: usize) -> f64 {
    0.5_f64.min(0.9 / (n as f64).sqrt())
}

/// On the Poincaré ball: `f = h + c`, `φ = −h`,
/// `λ = −(n−1) − h − m h/(h + c)` with `∇²h = h g`.
pub fn hyperbolic_height_triple(c: f64, n: usize, m: f64) -> Result<SolitonTriple> {
    let g = poincare_ball(n, hyperbolic_box(n))?;
    let coords = g.coords().to_vec();
    let h = hyperbolic_height(&coords);
    let field = |text: String| ScalarField::parse(&text, &coords);
    let t = SolitonTriple::new(
        g,
        field(format!("({h}) + {c}"))?,
        field(format!("-({h})"))?,
        field(format!("-{} - ({h}) - {m}*({h})/(({h}) + {c})", n as f64 - 1.0))?,
        m,
    )?;
    t.check_f_positive(&t.metric.chart().grid(17))?;
    Ok(t)
}

// ---------------------------------------------------------------------------
// Hypothesis observation

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub f_max: f64,
    pub p: Vec<f64>,
    pub f_min: f64,
    pub q: Vec<f64>,
    pub lambda_at_p: f64,
    pub lambda_at_q: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_positive: usize,
    pub lambda_negative: usize,
    pub lambda_zero: usize,
    pub lambda_nonpositive: bool,
    pub f_bounded: bool,
    pub lambda_p_le_lambda_q: bool,
    pub hypotheses_hold: bool,
    pub f_constant: bool,
    pub consistent: bool,
}

/// Samples `f` and `λ` and evaluates: `λ ≤ 0`, `f` bounded, `λ(p) ≤ λ(q)`
/// at the sampled max `p` and min `q` of `f`, and whether `f` is constant.
pub fn theorem31_hypothesis_report(triple: &SolitonTriple, grid: &Grid) -> Result<HypothesisReport> {
    let samples = grid.sweep(|p| Ok((triple.f.value(p)?, triple.lambda.value(p)?)))?;
    let (mut imax, mut imin) = (0, 0);
    for (i, (f, _)) in samples.iter().enumerate() {
        if *f > samples[imax].0 {
            imax = i;
        }
        if *f < samples[imin].0 {
            imin = i;
        }
    }
    let lambdas: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (f_max, f_min) = (samples[imax].0, samples[imin].0);
    let (lp, lq) = (samples[imax].1, samples[imin].1);
    let scale = 1e-9 * (1.0 + f_max.abs().max(f_min.abs()));
    let lambda_nonpositive = lambdas.iter().all(|l| *l <= 0.0);
    let f_bounded = samples.iter().all(|s| s.0.is_finite());
    let lambda_p_le_lambda_q = lp <= lq;
    let hypotheses_hold = lambda_nonpositive && f_bounded && lambda_p_le_lambda_q;
    let f_constant = f_max - f_min <= scale;
    Ok(HypothesisReport {
        f_max,
        p: grid.point(imax),
        f_min,
        q: grid.point(imin),
        lambda_at_p: lp,
        lambda_at_q: lq,
        lambda_min: lambdas.iter().copied().fold(f64::INFINITY, f64::min),
        lambda_max: lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        lambda_positive: lambdas.iter().filter(|l| **l > 0.0).count(),
        lambda_negative: lambdas.iter().filter(|l| **l < 0.0).count(),
        lambda_zero: lambdas.iter().filter(|l| **l == 0.0).count(),
        lambda_nonpositive,
        f_bounded,
        lambda_p_le_lambda_q,
        hypotheses_hold,
        f_constant,
        consistent: !hypotheses_hold || f_constant,
    })
}

/// Grid of `count` points per axis over the sphere chart of dimension `n`.
pub fn sphere_grid(n: usize, count: usize) -> Result<Grid> {
    Ok(unit_sphere(n)?.chart().grid(count))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_volume() {
        let q = QuadratureGrid::sphere2(64, 64).unwrap();
        assert!((q.volume - 4.0 * PI).abs() < 1e-4 * 4.0 * PI, "{}", q.volume);
        // ∫ z² = 4π/3
        let z2 = q
            .integrate(|chart, p| {
                let axis = if chart == 0 { 2 } else { 0 };
                let x = embed(axis, p[0], p[1]);
                Ok(x[2] * x[2])
            })
            .unwrap();
        assert!((z2 - 4.0 * PI / 3.0).abs() < 1e-3);
    }

    #[test]
    fn smooth_step_limits() {
        let s0 = 0.25_f64.sin().powi(2);
        let s1 = 0.6_f64.sin().powi(2);
        assert_eq!(smooth_step(0.0, s0, s1), 0.0);
        assert_eq!(smooth_step(1.0, s0, s1), 1.0);
        let mid = smooth_step(0.5 * (s0 + s1), s0, s1);
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_phi_integral_identity() {
        let atlas = sphere_height_atlas(2.0, 0.0, 2.0).unwrap();
        let q = QuadratureGrid::sphere2(16, 16).unwrap();
        let r = compact_integral_identity(&atlas, &q).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.terms.iter().all(|t| t.abs() < 1e-14));
    }

    #[test]
    fn sphere_height_requires_c_above_one() {
        assert!(sphere_height_triple(1.0, 1.0, 2, 2.0).is_err());
    }

    #[test]
    fn hyperbolic_lambda_at_origin() {
        let t = hyperbolic_height_triple(3.0, 2, 2.0).unwrap();
        // h(0) = 0
        assert!((t.lambda.value(&[0.0, 0.0]).unwrap() + 1.0).abs() < 1e-10);
        let p = [0.3, -0.2];
        let r2: f64 = 0.13;
        let h = 0.6 / (1.0 - r2);
        let expected = -1.0 - h - 2.0 * h / (h + 3.0);
        assert!((t.lambda.value(&p).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn constant_f_is_flagged() {
        let g = unit_sphere(2).unwrap();
        let c = g.coords().to_vec();
        let t = SolitonTriple::new(
            g,
            ScalarField::constant(1.0, &c),
            ScalarField::constant(0.0, &c),
            ScalarField::constant(1.0, &c),
            2.0,
        )
        .unwrap();
        let r = theorem31_hypothesis_report(&t, &sphere_grid(2, 5).unwrap()).unwrap();
        assert!(r.f_constant);
        assert!(!r.lambda_nonpositive);
    }
}
