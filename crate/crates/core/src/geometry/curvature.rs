use nalgebra::{DMatrix, DVector};

use super::field::{MetricField, MetricJet};
use crate::error::{Error, Result};

/// Levi-Civita data of a metric at one point, up to the requested order:
/// order 1 gives the Christoffel symbols, order 2 adds their first
/// partials and the Ricci tensor, order 3 adds second partials of the
/// Christoffel symbols and first partials of Ricci and scalar curvature.
///
/// Flat layouts: `gamma[(k*n+i)*n+j] = Γ^k_ij`, `dgamma[m*n³ + ...]` is
/// `∂_m Γ^k_ij`, `d2gamma[(p*n+m)*n³ + ...]` is `∂_p ∂_m Γ^k_ij`.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub n: usize,
    pub order: usize,
    pub point: Vec<f64>,
    pub jet: MetricJet,
    pub inv: DMatrix<f64>,
    pub dinv: Vec<DMatrix<f64>>,
    pub gamma: Vec<f64>,
    pub dgamma: Vec<f64>,
    pub d2gamma: Vec<f64>,
    pub ricci: Option<DMatrix<f64>>,
    pub scalar: Option<f64>,
    pub dricci: Vec<DMatrix<f64>>,
    pub dscalar: Vec<f64>,
}

impl PointGeometry {
    pub fn at(metric: &MetricField, p: &[f64], order: usize) -> Result<PointGeometry> {
        let order = order.clamp(1, 3);
        let jet = metric.jet(p, order)?;
        PointGeometry::from_jet(jet, p, order)
    }

    pub fn from_jet(jet: MetricJet, p: &[f64], order: usize) -> Result<PointGeometry> {
        let n = jet.g.nrows();
        let chol = jet
            .g
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite(p.to_vec()))?;
        let inv = chol.inverse();
        let dinv: Vec<DMatrix<f64>> = jet.dg.iter().map(|dg| -(&inv * dg * &inv)).collect();

        let n3 = n * n * n;
        let idx = |k: usize, i: usize, j: usize| (k * n + i) * n + j;

        // Christoffel symbols of the first kind and their partials
        let lower = |k: usize, i: usize, j: usize| {
            0.5 * (jet.dg[i][(j, k)] + jet.dg[j][(i, k)] - jet.dg[k][(i, j)])
        };
        let lower_d = |m: usize, k: usize, i: usize, j: usize| {
            let d = |a: usize, b: usize| &jet.d2g[a * n + b];
            0.5 * (d(m, i)[(j, k)] + d(m, j)[(i, k)] - d(m, k)[(i, j)])
        };
        let lower_dd = |q: usize, m: usize, k: usize, i: usize, j: usize| {
            let d = |a: usize, b: usize, c: usize| &jet.d3g[(a * n + b) * n + c];
            0.5 * (d(q, m, i)[(j, k)] + d(q, m, j)[(i, k)] - d(q, m, k)[(i, j)])
        };

        let mut low = vec![0.0; n3];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    low[idx(k, i, j)] = lower(k, i, j);
                }
            }
        }
        let raise = |a: &DMatrix<f64>, t: &[f64]| {
            let mut out = vec![0.0; n3];
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        out[idx(k, i, j)] = (0..n).map(|l| a[(k, l)] * t[idx(l, i, j)]).sum();
                    }
                }
            }
            out
        };
        let gamma = raise(&inv, &low);

        let mut dgamma = Vec::new();
        let mut dlow = Vec::new();
        if order >= 2 {
            dlow = vec![0.0; n * n3];
            for m in 0..n {
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            dlow[m * n3 + idx(k, i, j)] = lower_d(m, k, i, j);
                        }
                    }
                }
            }
            dgamma = vec![0.0; n * n3];
            for m in 0..n {
                let a = raise(&dinv[m], &low);
                let b = raise(&inv, &dlow[m * n3..(m + 1) * n3]);
                for t in 0..n3 {
                    dgamma[m * n3 + t] = a[t] + b[t];
                }
            }
        }

        let mut d2gamma = Vec::new();
        if order >= 3 {
            // ∂_q ∂_m A = −∂_q A ∂_m g A − A ∂_qm g A − A ∂_m g ∂_q A
            let mut ddinv = Vec::with_capacity(n * n);
            for q in 0..n {
                for m in 0..n {
                    let t = -(&dinv[q] * &jet.dg[m] * &inv)
                        - &inv * &jet.d2g[q * n + m] * &inv
                        - &inv * &jet.dg[m] * &dinv[q];
                    ddinv.push(t);
                }
            }
            d2gamma = vec![0.0; n * n * n3];
            let mut ddlow = vec![0.0; n3];
            for q in 0..n {
                for m in 0..n {
                    for k in 0..n {
                        for i in 0..n {
                            for j in 0..n {
                                ddlow[idx(k, i, j)] = lower_dd(q, m, k, i, j);
                            }
                        }
                    }
                    let t1 = raise(&ddinv[q * n + m], &low);
                    let t2 = raise(&dinv[m], &dlow[q * n3..(q + 1) * n3]);
                    let t3 = raise(&dinv[q], &dlow[m * n3..(m + 1) * n3]);
                    let t4 = raise(&inv, &ddlow);
                    let base = (q * n + m) * n3;
                    for t in 0..n3 {
                        d2gamma[base + t] = t1[t] + t2[t] + t3[t] + t4[t];
                    }
                }
            }
        }

        let mut geom = PointGeometry {
            n,
            order,
            point: p.to_vec(),
            jet,
            inv,
            dinv,
            gamma,
            dgamma,
            d2gamma,
            ricci: None,
            scalar: None,
            dricci: Vec::new(),
            dscalar: Vec::new(),
        };
        if order >= 2 {
            let ric = geom.compute_ricci();
            geom.scalar = Some(geom.inv.component_mul(&ric).sum());
            geom.ricci = Some(ric);
        }
        if order >= 3 {
            geom.dricci = (0..n).map(|q| geom.compute_dricci(q)).collect();
            let ric = geom.ricci.as_ref().unwrap();
            geom.dscalar = (0..n)
                .map(|q| {
                    geom.dinv[q].component_mul(ric).sum() + geom.inv.component_mul(&geom.dricci[q]).sum()
                })
                .collect();
        }
        Ok(geom)
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.jet.g
    }

    #[inline]
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.n + i) * self.n + j]
    }

    #[inline]
    pub fn dgamma(&self, m: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.dgamma[((m * n + k) * n + i) * n + j]
    }

    #[inline]
    pub fn d2gamma(&self, q: usize, m: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.d2gamma[(((q * n + m) * n + k) * n + i) * n + j]
    }

    fn require(&self, order: usize, what: &str) {
        assert!(self.order >= order, "{what} needs geometry of order {order}, have {}", self.order);
    }

    pub fn ricci(&self) -> &DMatrix<f64> {
        self.require(2, "ricci");
        self.ricci.as_ref().unwrap()
    }

    pub fn scalar_curvature(&self) -> f64 {
        self.require(2, "scalar curvature");
        self.scalar.unwrap()
    }

    pub fn dricci(&self) -> &[DMatrix<f64>] {
        self.require(3, "ricci derivative");
        &self.dricci
    }

    pub fn dscalar(&self) -> &[f64] {
        self.require(3, "scalar curvature derivative");
        &self.dscalar
    }

    // R_ij = ∂_k Γ^k_ij − ∂_j Γ^k_ik + Γ^k_kl Γ^l_ij − Γ^k_jl Γ^l_ik
    fn compute_ricci(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut r = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.dgamma(k, k, i, j) - self.dgamma(j, k, i, k);
                    for l in 0..n {
                        s += self.gamma(k, k, l) * self.gamma(l, i, j)
                            - self.gamma(k, j, l) * self.gamma(l, i, k);
                    }
                }
                r[(i, j)] = s;
                r[(j, i)] = s;
            }
        }
        r
    }

    fn compute_dricci(&self, q: usize) -> DMatrix<f64> {
        let n = self.n;
        let mut r = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.d2gamma(q, k, k, i, j) - self.d2gamma(q, j, k, i, k);
                    for l in 0..n {
                        s += self.dgamma(q, k, k, l) * self.gamma(l, i, j)
                            + self.gamma(k, k, l) * self.dgamma(q, l, i, j)
                            - self.dgamma(q, k, j, l) * self.gamma(l, i, k)
                            - self.gamma(k, j, l) * self.dgamma(q, l, i, k);
                    }
                }
                r[(i, j)] = s;
                r[(j, i)] = s;
            }
        }
        r
    }

    /// Components `∇_k g_ij`, which vanish for the Levi-Civita connection.
    pub fn metric_compatibility(&self) -> f64 {
        let n = self.n;
        let g = self.g();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = self.jet.dg[k][(i, j)];
                    for l in 0..n {
                        v -= self.gamma(l, k, i) * g[(l, j)] + self.gamma(l, k, j) * g[(i, l)];
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    pub fn raise(&self, v: &[f64]) -> Vec<f64> {
        (&self.inv * DVector::from_column_slice(v)).as_slice().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chart;
    use std::f64::consts::FRAC_PI_4;

    fn sphere2() -> MetricField {
        let chart = Chart::new(&["th", "ph"], &[0.2, -4.0], &[3.0, 4.0]).unwrap();
        MetricField::parse(chart, &[vec!["1", "0"], vec!["0", "sin(th)^2"]]).unwrap()
    }

    #[test]
    fn sphere_christoffel_closed_form() {
        let geom = PointGeometry::at(&sphere2(), &[FRAC_PI_4, 0.3], 1).unwrap();
        let (s, c) = FRAC_PI_4.sin_cos();
        assert!((geom.gamma(0, 1, 1) + s * c).abs() < 1e-12);
        assert!((geom.gamma(1, 0, 1) - c / s).abs() < 1e-12);
        assert!((geom.gamma(1, 1, 0) - c / s).abs() < 1e-12);
        assert_eq!(geom.gamma(0, 0, 0), 0.0);
    }

    #[test]
    fn sphere_ricci_and_derivatives() {
        let geom = PointGeometry::at(&sphere2(), &[1.1, 0.3], 3).unwrap();
        let diff = geom.ricci() - geom.g();
        assert!(diff.abs().max() < 1e-12);
        assert!((geom.scalar_curvature() - 2.0).abs() < 1e-12);
        assert!(geom.dscalar().iter().all(|v| v.abs() < 1e-12));
        assert!(geom.metric_compatibility() < 1e-13);
    }

    #[test]
    fn indefinite_metric_is_error() {
        let chart = Chart::cube(&["x", "y"], -1.0, 1.0).unwrap();
        let g = MetricField::parse(chart, &[vec!["1", "0"], vec!["0", "-1"]]).unwrap();
        assert!(matches!(PointGeometry::at(&g, &[0.0, 0.0], 1), Err(Error::NotPositiveDefinite(_))));
    }
}
