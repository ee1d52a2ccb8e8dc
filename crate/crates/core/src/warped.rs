//! Warped products `B ×_f F` with metric `g_B + f² g_F`, their Ricci
//! tensor by direct computation and by the block formulas, and the lift
//! rules for Hessian and Laplacian of base functions.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::geometry::{
    hessian_of, inner_gradients, laplacian_of, scalar_jet, tensor_norm, Backend, Chart, Grid, MetricField,
    NormKind, PointGeometry, ResidualReport, ScalarField, DEFAULT_FD_STEP,
};

pub const DEFAULT_AXIS_POINTS: usize = 17;

#[derive(Debug, Clone)]
pub struct WarpedProductSpec {
    base: MetricField,
    fiber: MetricField,
    warp: ScalarField,
    product: Chart,
}

/// A symmetric `(n+m)`-tensor split into base/fiber blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTensor {
    pub horizontal: DMatrix<f64>,
    pub mixed: DMatrix<f64>,
    pub vertical: DMatrix<f64>,
    pub point: Vec<f64>,
}

pub type RicciBlocks = BlockTensor;

impl BlockTensor {
    pub fn split(full: &DMatrix<f64>, n: usize, point: &[f64]) -> BlockTensor {
        let k = full.nrows();
        BlockTensor {
            horizontal: full.view((0, 0), (n, n)).into_owned(),
            mixed: full.view((0, n), (n, k - n)).into_owned(),
            vertical: full.view((n, n), (k - n, k - n)).into_owned(),
            point: point.to_vec(),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.horizontal.nrows();
        let m = self.vertical.nrows();
        let mut full = DMatrix::zeros(n + m, n + m);
        full.view_mut((0, 0), (n, n)).copy_from(&self.horizontal);
        full.view_mut((0, n), (n, m)).copy_from(&self.mixed);
        full.view_mut((n, 0), (m, n)).copy_from(&self.mixed.transpose());
        full.view_mut((n, n), (m, m)).copy_from(&self.vertical);
        full
    }
}

impl WarpedProductSpec {
    /// Validates coordinates and checks `f > 0` on the default base grid.
    pub fn new(base: MetricField, fiber: MetricField, warp: ScalarField) -> Result<Self> {
        if warp.dim() != base.dim() {
            return Err(Error::Dimension(format!(
                "warping function has {} coordinates, base has {}",
                warp.dim(),
                base.dim()
            )));
        }
        let product = base.chart().product(fiber.chart())?;
        let spec = WarpedProductSpec { base, fiber, warp, product };
        spec.check_warp(&spec.base.chart().grid(DEFAULT_AXIS_POINTS))?;
        Ok(spec)
    }

    pub fn check_warp(&self, base_grid: &Grid) -> Result<()> {
        self.warp.check_positive("warping function f", base_grid)
    }

    pub fn base(&self) -> &MetricField {
        &self.base
    }

    pub fn fiber(&self) -> &MetricField {
        &self.fiber
    }

    pub fn warp(&self) -> &ScalarField {
        &self.warp
    }

    pub fn n(&self) -> usize {
        self.base.dim()
    }

    pub fn m(&self) -> usize {
        self.fiber.dim()
    }

    pub fn product_chart(&self) -> &Chart {
        &self.product
    }

    pub fn product_grid(&self, base_points: usize, fiber_points: usize) -> Grid {
        self.base.chart().grid(base_points).product(&self.fiber.chart().grid(fiber_points))
    }

    fn split_point<'a>(&self, p: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        p.split_at(self.n())
    }

    /// The warped metric on the product chart. Symbolic when every input
    /// is symbolic and uses the symbolic backend; otherwise a pointwise
    /// metric differentiated by finite differences.
    pub fn assemble(&self) -> Result<MetricField> {
        let (n, m) = (self.n(), self.m());
        let symbolic = matches!(self.base.backend(), Backend::Symbolic)
            && matches!(self.fiber.backend(), Backend::Symbolic);
        if let (true, Some(gb), Some(gf), Some(f)) =
            (symbolic, self.base.expressions(), self.fiber.expressions(), self.warp.expression())
        {
            let f2 = Expression::pow(f.clone(), Expression::Literal(2.0));
            let mut g = vec![vec![Expression::Literal(0.0); n + m]; n + m];
            for i in 0..n {
                for j in 0..n {
                    g[i][j] = gb[i][j].clone();
                }
            }
            for a in 0..m {
                for b in 0..m {
                    g[n + a][n + b] = Expression::mul(f2.clone(), gf[a][b].clone());
                }
            }
            return MetricField::from_exprs(self.product.clone(), g);
        }
        let h = self
            .base
            .backend()
            .step()
            .or(self.fiber.backend().step())
            .unwrap_or(DEFAULT_FD_STEP);
        let spec = Arc::new(self.clone());
        Ok(MetricField::pointwise(self.product.clone(), h, move |p| {
            let (pb, pf) = spec.split_point(p);
            let f = spec.warp.value(pb)?;
            let block = BlockTensor {
                horizontal: spec.base.value(pb)?,
                mixed: DMatrix::zeros(n, m),
                vertical: spec.fiber.value(pf)? * (f * f),
                point: p.to_vec(),
            };
            Ok(block.to_matrix())
        }))
    }

    /// Base function pulled back to the product.
    pub fn lift(&self, u: &ScalarField) -> Result<ScalarField> {
        u.lift(self.product.names())
    }

    fn warp_jet(&self, pb: &[f64], order: usize) -> Result<crate::geometry::ScalarJet> {
        let jet = scalar_jet(&self.warp, &self.base, pb, order)?;
        if !(jet.value > 0.0) {
            return Err(Error::NonPositive { what: "warping function f".into(), value: jet.value, point: pb.to_vec() });
        }
        Ok(jet)
    }

    /// Ricci blocks from base and fiber curvature:
    /// horizontal `Ric_B − (m/f) ∇²f`, mixed `0`,
    /// vertical `Ric_F − (Δf/f + (m−1)|∇f|²/f²) f² g_F`.
    pub fn ricci_oneill(&self, p: &[f64]) -> Result<RicciBlocks> {
        let (pb, pf) = self.split_point(p);
        let m = self.m() as f64;
        let base = PointGeometry::at(&self.base, pb, 2)?;
        let fiber = PointGeometry::at(&self.fiber, pf, 2)?;
        let fj = self.warp_jet(pb, 2)?;
        let f = fj.value;
        let hess = hessian_of(&fj, &base).t;
        let lap = laplacian_of(&fj, &base).v;
        let grad2 = inner_gradients(&fj, &fj, &base).v;
        let coef = lap / f + (m - 1.0) * grad2 / (f * f);
        Ok(BlockTensor {
            horizontal: base.ricci() - hess * (m / f),
            mixed: DMatrix::zeros(self.n(), self.m()),
            vertical: fiber.ricci() - fiber.g() * (coef * f * f),
            point: p.to_vec(),
        })
    }

    /// Ricci of the assembled metric, split into blocks.
    pub fn ricci_direct(&self, assembled: &MetricField, p: &[f64]) -> Result<RicciBlocks> {
        let geom = PointGeometry::at(assembled, p, 2)?;
        Ok(BlockTensor::split(geom.ricci(), self.n(), p))
    }

    /// Sup over `grid` of the Frobenius distance between the two Ricci
    /// computations.
    pub fn crosscheck_ricci(&self, grid: &Grid) -> Result<ResidualReport> {
        let assembled = self.assemble()?;
        ResidualReport::sweep("ricci direct - block formulas", grid, *assembled.backend(), NormKind::Coordinate, |p| {
            let direct = self.ricci_direct(&assembled, p)?.to_matrix();
            let blocks = self.ricci_oneill(p)?.to_matrix();
            Ok((direct - blocks).norm())
        })
    }

    /// Sup of the mixed Ricci block of the assembled metric.
    pub fn mixed_ricci_report(&self, grid: &Grid) -> Result<ResidualReport> {
        let assembled = self.assemble()?;
        ResidualReport::sweep("mixed ricci block", grid, *assembled.backend(), NormKind::Coordinate, |p| {
            Ok(self.ricci_direct(&assembled, p)?.mixed.norm())
        })
    }

    /// Hessian of the lift `φ̃` from base data: horizontal `∇²φ`, mixed 0,
    /// vertical `f ⟨∇φ, ∇f⟩ g_F`.
    pub fn hessian_lift(&self, phi: &ScalarField, p: &[f64]) -> Result<BlockTensor> {
        let (pb, pf) = self.split_point(p);
        let base = PointGeometry::at(&self.base, pb, 1)?;
        let fj = self.warp_jet(pb, 1)?;
        let pj = scalar_jet(phi, &self.base, pb, 2)?;
        let dphi_f = inner_gradients(&pj, &fj, &base).v;
        Ok(BlockTensor {
            horizontal: hessian_of(&pj, &base).t,
            mixed: DMatrix::zeros(self.n(), self.m()),
            vertical: self.fiber.value(pf)? * (fj.value * dphi_f),
            point: p.to_vec(),
        })
    }

    /// `Δφ̃ = Δφ + (m/f) ⟨∇φ, ∇f⟩`.
    pub fn laplacian_lift(&self, phi: &ScalarField, p: &[f64]) -> Result<f64> {
        let (pb, _) = self.split_point(p);
        let base = PointGeometry::at(&self.base, pb, 1)?;
        let fj = self.warp_jet(pb, 1)?;
        let pj = scalar_jet(phi, &self.base, pb, 2)?;
        let m = self.m() as f64;
        Ok(laplacian_of(&pj, &base).v + m / fj.value * inner_gradients(&pj, &fj, &base).v)
    }

    /// Hessian of the lift computed on the assembled metric.
    pub fn hessian_lift_direct(&self, assembled: &MetricField, phi: &ScalarField, p: &[f64]) -> Result<BlockTensor> {
        let lifted = self.lift(phi)?;
        let geom = PointGeometry::at(assembled, p, 1)?;
        let jet = scalar_jet(&lifted, assembled, p, 2)?;
        Ok(BlockTensor::split(&hessian_of(&jet, &geom).t, self.n(), p))
    }

    /// Sup over the fiber grid of `‖Ric_F − μ g_F‖`.
    pub fn fiber_einstein_report(&self, mu: f64, fiber_grid: &Grid) -> Result<ResidualReport> {
        ResidualReport::sweep("fiber einstein", fiber_grid, *self.fiber.backend(), NormKind::Coordinate, |p| {
            let geom = PointGeometry::at(&self.fiber, p, 2)?;
            Ok(tensor_norm(&(geom.ricci() - geom.g() * mu), NormKind::Coordinate, &geom))
        })
    }
}
