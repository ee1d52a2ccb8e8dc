use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::curvature::PointGeometry;
use super::field::{MetricField, ScalarField, ScalarJet};
use crate::error::{Error, Result};

/// Scalar value together with its coordinate differential.
#[derive(Debug, Clone, PartialEq)]
pub struct D1 {
    pub v: f64,
    pub d: Vec<f64>,
}

impl D1 {
    pub fn constant(v: f64, n: usize) -> D1 {
        D1 { v, d: vec![0.0; n] }
    }

    pub fn from_jet(jet: &ScalarJet) -> D1 {
        D1 { v: jet.value, d: jet.d1.clone() }
    }

    pub fn scale(&self, c: f64) -> D1 {
        D1 { v: self.v * c, d: self.d.iter().map(|x| x * c).collect() }
    }

    pub fn recip(&self) -> D1 {
        let r = 1.0 / self.v;
        D1 { v: r, d: self.d.iter().map(|x| -x * r * r).collect() }
    }

    pub fn div(&self, other: &D1) -> D1 {
        self.clone() * other.recip()
    }
}

impl Add for D1 {
    type Output = D1;
    fn add(self, o: D1) -> D1 {
        D1 { v: self.v + o.v, d: self.d.iter().zip(&o.d).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for D1 {
    type Output = D1;
    fn sub(self, o: D1) -> D1 {
        D1 { v: self.v - o.v, d: self.d.iter().zip(&o.d).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for D1 {
    type Output = D1;
    fn mul(self, o: D1) -> D1 {
        D1 {
            v: self.v * o.v,
            d: self.d.iter().zip(&o.d).map(|(a, b)| a * o.v + self.v * b).collect(),
        }
    }
}

impl Neg for D1 {
    type Output = D1;
    fn neg(self) -> D1 {
        self.scale(-1.0)
    }
}

/// Components of a covariant 2-tensor and (optionally) their coordinate
/// partials `dt[k] = ∂_k T`.
#[derive(Debug, Clone)]
pub struct Tensor2Jet {
    pub t: DMatrix<f64>,
    pub dt: Vec<DMatrix<f64>>,
}

impl Tensor2Jet {
    pub fn has_derivatives(&self) -> bool {
        !self.dt.is_empty()
    }

    pub fn scale(&self, c: f64) -> Tensor2Jet {
        Tensor2Jet { t: &self.t * c, dt: self.dt.iter().map(|m| m * c).collect() }
    }

    /// Product with a scalar, by the Leibniz rule.
    pub fn times(&self, u: &D1) -> Tensor2Jet {
        let dt = if self.has_derivatives() {
            self.dt
                .iter()
                .enumerate()
                .map(|(k, m)| m * u.v + &self.t * u.d[k])
                .collect()
        } else {
            Vec::new()
        };
        Tensor2Jet { t: &self.t * u.v, dt }
    }

    pub fn add(&self, other: &Tensor2Jet) -> Tensor2Jet {
        let dt = if self.has_derivatives() && other.has_derivatives() {
            self.dt.iter().zip(&other.dt).map(|(a, b)| a + b).collect()
        } else {
            Vec::new()
        };
        Tensor2Jet { t: &self.t + &other.t, dt }
    }

    pub fn sub(&self, other: &Tensor2Jet) -> Tensor2Jet {
        self.add(&other.scale(-1.0))
    }

    /// `∇_k T_ij` at `[k][(i,j)]`.
    pub fn covariant(&self, geom: &PointGeometry) -> Vec<DMatrix<f64>> {
        assert!(self.has_derivatives(), "covariant derivative needs tensor partials");
        let n = geom.n;
        (0..n)
            .map(|k| {
                let mut out = self.dt[k].clone();
                for i in 0..n {
                    for j in 0..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += geom.gamma(l, k, i) * self.t[(l, j)] + geom.gamma(l, k, j) * self.t[(i, l)];
                        }
                        out[(i, j)] -= s;
                    }
                }
                out
            })
            .collect()
    }

    /// `(div T)_j = g^{ki} ∇_k T_ij`.
    pub fn divergence(&self, geom: &PointGeometry) -> Vec<f64> {
        let cov = self.covariant(geom);
        let n = geom.n;
        (0..n)
            .map(|j| {
                let mut s = 0.0;
                for k in 0..n {
                    for i in 0..n {
                        s += geom.inv[(k, i)] * cov[k][(i, j)];
                    }
                }
                s
            })
            .collect()
    }

    /// g-trace, with its differential when partials are present.
    pub fn trace(&self, geom: &PointGeometry) -> D1 {
        let v = geom.inv.component_mul(&self.t).sum();
        let d = if self.has_derivatives() {
            (0..geom.n)
                .map(|k| geom.dinv[k].component_mul(&self.t).sum() + geom.inv.component_mul(&self.dt[k]).sum())
                .collect()
        } else {
            vec![0.0; geom.n]
        };
        D1 { v, d }
    }

    /// One-form `T(V, ·)`.
    pub fn contract(&self, vector: &[f64]) -> Vec<f64> {
        let n = vector.len();
        (0..n).map(|j| (0..n).map(|i| vector[i] * self.t[(i, j)]).sum()).collect()
    }
}

/// How residual tensors are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    /// Frobenius / Euclidean norm of coordinate components.
    #[default]
    Coordinate,
    /// Norm induced by the metric.
    Metric,
}

pub fn tensor_norm(t: &DMatrix<f64>, kind: NormKind, geom: &PointGeometry) -> f64 {
    match kind {
        NormKind::Coordinate => t.norm(),
        NormKind::Metric => {
            let a = &geom.inv;
            (a * t * a).component_mul(t).sum().max(0.0).sqrt()
        }
    }
}

pub fn oneform_norm(w: &[f64], kind: NormKind, geom: &PointGeometry) -> f64 {
    match kind {
        NormKind::Coordinate => w.iter().map(|x| x * x).sum::<f64>().sqrt(),
        NormKind::Metric => {
            let up = geom.raise(w);
            up.iter().zip(w).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
        }
    }
}

// ---------------------------------------------------------------------------
// Scalar calculus on a PointGeometry

pub(crate) fn scalar_jet(u: &ScalarField, metric: &MetricField, p: &[f64], order: usize) -> Result<ScalarJet> {
    u.jet(p, order, metric.backend(), metric.chart())
}

/// `∇u^i = g^{ij} ∂_j u`.
pub fn gradient_of(u: &ScalarJet, geom: &PointGeometry) -> Vec<f64> {
    geom.raise(&u.d1)
}

/// `⟨∇u, ∇w⟩` with differential (needs second partials of both).
pub fn inner_gradients(u: &ScalarJet, w: &ScalarJet, geom: &PointGeometry) -> D1 {
    let n = geom.n;
    let a = &geom.inv;
    let mut v = 0.0;
    let mut d = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            v += a[(i, j)] * u.d1[i] * w.d1[j];
            if u.order >= 2 && w.order >= 2 {
                for (k, dk) in d.iter_mut().enumerate() {
                    *dk += geom.dinv[k][(i, j)] * u.d1[i] * w.d1[j]
                        + a[(i, j)] * (u.d2(k, i) * w.d1[j] + u.d1[i] * w.d2(k, j));
                }
            }
        }
    }
    D1 { v, d }
}

/// `∇²u_ij = ∂_ij u − Γ^k_ij ∂_k u`; partials included when `u` has third
/// derivatives and the geometry has order ≥ 2.
pub fn hessian_of(u: &ScalarJet, geom: &PointGeometry) -> Tensor2Jet {
    let n = geom.n;
    let mut t = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = u.d2(i, j);
            for k in 0..n {
                s -= geom.gamma(k, i, j) * u.d1[k];
            }
            t[(i, j)] = s;
        }
    }
    let dt = if u.order >= 3 && geom.order >= 2 {
        (0..n)
            .map(|m| {
                let mut dm = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let mut s = u.d3(m, i, j);
                        for k in 0..n {
                            s -= geom.dgamma(m, k, i, j) * u.d1[k] + geom.gamma(k, i, j) * u.d2(m, k);
                        }
                        dm[(i, j)] = s;
                    }
                }
                dm
            })
            .collect()
    } else {
        Vec::new()
    };
    Tensor2Jet { t, dt }
}

pub fn laplacian_of(u: &ScalarJet, geom: &PointGeometry) -> D1 {
    hessian_of(u, geom).trace(geom)
}

// ---------------------------------------------------------------------------
// Symbolically described 2-tensor fields

/// A covariant 2-tensor field built from the metric, its curvature and
/// scalar fields.
#[derive(Clone, Debug)]
pub enum Tensor2Field {
    Metric,
    Ricci,
    Hessian(ScalarField),
    Scaled(ScalarField, Box<Tensor2Field>),
    Sum(Vec<(f64, Tensor2Field)>),
    Components(Vec<Vec<ScalarField>>),
}

impl Tensor2Field {
    /// Metric order needed to evaluate the field with first partials.
    pub fn metric_order(&self) -> usize {
        match self {
            Tensor2Field::Metric | Tensor2Field::Components(_) => 1,
            Tensor2Field::Hessian(_) => 2,
            Tensor2Field::Ricci => 3,
            Tensor2Field::Scaled(_, t) => t.metric_order(),
            Tensor2Field::Sum(ts) => ts.iter().map(|(_, t)| t.metric_order()).max().unwrap_or(1),
        }
    }

    pub fn jet(&self, metric: &MetricField, geom: &PointGeometry) -> Result<Tensor2Jet> {
        let p = &geom.point;
        let n = geom.n;
        match self {
            Tensor2Field::Metric => Ok(Tensor2Jet { t: geom.g().clone(), dt: geom.jet.dg.clone() }),
            Tensor2Field::Ricci => {
                Ok(Tensor2Jet { t: geom.ricci().clone(), dt: geom.dricci().to_vec() })
            }
            Tensor2Field::Hessian(u) => {
                let jet = scalar_jet(u, metric, p, 3)?;
                Ok(hessian_of(&jet, geom))
            }
            Tensor2Field::Scaled(u, t) => {
                let jet = scalar_jet(u, metric, p, 1)?;
                Ok(t.jet(metric, geom)?.times(&D1::from_jet(&jet)))
            }
            Tensor2Field::Sum(ts) => {
                let mut acc = Tensor2Jet { t: DMatrix::zeros(n, n), dt: vec![DMatrix::zeros(n, n); n] };
                for (c, t) in ts {
                    acc = acc.add(&t.jet(metric, geom)?.scale(*c));
                }
                Ok(acc)
            }
            Tensor2Field::Components(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Dimension(format!("tensor components must be {n}x{n}")));
                }
                let mut t = DMatrix::zeros(n, n);
                let mut dt = vec![DMatrix::zeros(n, n); n];
                for (i, row) in rows.iter().enumerate() {
                    for (j, u) in row.iter().enumerate() {
                        let jet = scalar_jet(u, metric, p, 1)?;
                        t[(i, j)] = jet.value;
                        for k in 0..n {
                            dt[k][(i, j)] = jet.d1[k];
                        }
                    }
                }
                Ok(Tensor2Jet { t, dt })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d1_arithmetic_follows_leibniz() {
        let a = D1 { v: 2.0, d: vec![1.0, 0.0] };
        let b = D1 { v: 3.0, d: vec![0.0, 2.0] };
        let p = a.clone() * b.clone();
        assert_eq!(p, D1 { v: 6.0, d: vec![3.0, 4.0] });
        let q = a.div(&b);
        assert!((q.v - 2.0 / 3.0).abs() < 1e-15);
        assert!((q.d[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((q.d[1] + 4.0 / 9.0).abs() < 1e-15);
        assert_eq!((a.clone() - a).v, 0.0);
    }
}
