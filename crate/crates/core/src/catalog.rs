//! Named example instances with their checks and tolerances.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::conformal_ode::{closed_form_family, xi_bounds};
use crate::constraints::SolitonTriple;
use crate::error::{Error, Result};
use crate::geometry::{poincare_ball, unit_sphere, Backend, Chart, Grid, MetricField, ScalarField};
use crate::rigidity::{hyperbolic_box, hyperbolic_height, sphere_height_atlas, sphere_height_triple, hyperbolic_height_triple};
use crate::warped::WarpedProductSpec;

pub const NAMES: [&str; 5] = ["corollary-1.3", "hyperbolic-sinh", "sphere-height", "hyperbolic-height", "product-trivial"];

/// Optional catalog parameters; unset fields take per-instance defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogParams {
    pub n: Option<usize>,
    pub m: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c: Option<f64>,
    pub a: Option<f64>,
    pub grid: Option<usize>,
    pub fiber_grid: Option<usize>,
}

/// `∇²u = sign · u · g` check for a height function.
#[derive(Debug, Clone)]
pub struct HessianCheck {
    pub name: String,
    pub u: ScalarField,
    pub sign: f64,
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct WarpedInstance {
    pub spec: WarpedProductSpec,
    pub psi: ScalarField,
    pub lambda: ScalarField,
    pub mu: f64,
    pub product_grid: Grid,
    pub fiber_grid: Grid,
    pub crosscheck_grid: Grid,
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct QuadratureCheck {
    pub atlas: Vec<SolitonTriple>,
    pub resolution: usize,
    pub tol: f64,
}

/// Tolerances; `None` marks a quantity that is reported but not checked.
#[derive(Debug, Clone, Default)]
pub struct Tolerances {
    pub ricci_hessian: Option<f64>,
    pub oneform: Option<f64>,
    pub mu_deviation: Option<f64>,
    pub elliptic: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub parameters: BTreeMap<String, f64>,
    pub triple: SolitonTriple,
    pub grid: Grid,
    pub tolerances: Tolerances,
    /// Expected μ and tolerance on the mean.
    pub mu_target: Option<(f64, f64)>,
    /// μ value stated for the example in the literature, for comparison.
    pub stated_mu: Option<f64>,
    pub hessian_checks: Vec<HessianCheck>,
    pub point_checks: Vec<PointCheck>,
    pub warped: Option<WarpedInstance>,
    pub quadrature: Option<QuadratureCheck>,
    pub notes: Vec<String>,
}

/// Value of a field at a point against a closed form.
#[derive(Debug, Clone)]
pub struct PointCheck {
    pub name: String,
    pub field: ScalarField,
    pub point: Vec<f64>,
    pub expected: f64,
    pub tol: f64,
}

fn names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

/// Complete Einstein manifold chart with `Ric = μ g` in dimension `m`:
/// a round sphere, a Poincaré ball, or a flat torus chart.
pub fn einstein_fiber(m: usize, mu: f64, coords: &[String]) -> Result<MetricField> {
    if coords.len() != m {
        return Err(Error::Dimension(format!("{m}-dimensional fiber needs {m} coordinate names")));
    }
    if mu.abs() <= 1e-12 {
        let chart = Chart::cube(coords, 0.0, 2.0 * std::f64::consts::PI)?;
        return Ok(MetricField::euclidean(chart));
    }
    if m < 2 {
        return Err(Error::Invalid(format!("a 1-dimensional fiber is flat, cannot have Einstein constant {mu}")));
    }
    let scale = (m as f64 - 1.0) / mu.abs();
    let unit = if mu > 0.0 { unit_sphere(m)? } else { poincare_ball(m, hyperbolic_box(m))? };
    unit.renamed(coords)?.scaled(scale)
}

fn integer_m(m: f64) -> Result<usize> {
    if m >= 1.0 && m.fract() == 0.0 {
        Ok(m as usize)
    } else {
        Err(Error::Invalid(format!("fiber dimension m must be a positive integer, got {m}")))
    }
}

pub fn build(name: &str, params: &CatalogParams) -> Result<Instance> {
    match name {
        "corollary-1.3" => corollary(params),
        "hyperbolic-sinh" => hyperbolic_sinh(params),
        "sphere-height" => sphere_height(params),
        "hyperbolic-height" => hyperbolic_height_instance(params),
        "product-trivial" => product_trivial(params),
        other => Err(Error::Invalid(format!("unknown catalog entry `{other}`; known: {}", NAMES.join(", ")))),
    }
}

fn corollary(params: &CatalogParams) -> Result<Instance> {
    let n = params.n.unwrap_or(3);
    let m = params.m.unwrap_or(2.0);
    let (c1, c2) = (params.c1.unwrap_or(1.0), params.c2.unwrap_or(0.0));
    let triple = closed_form_family(c1, c2, n, m)?;
    let grid = triple.metric.chart().grid(params.grid.unwrap_or(17));
    let mdim = integer_m(m)?;
    let fiber = einstein_fiber(mdim, 0.0, &names("u", mdim))?;
    let spec = WarpedProductSpec::new(triple.metric.clone(), fiber, triple.f.clone())?;
    let (lo, hi) = xi_bounds(&vec![1.0 / (n as f64).sqrt(); n], triple.metric.chart());
    let warped = WarpedInstance {
        psi: spec.lift(&triple.phi)?,
        lambda: spec.lift(&triple.lambda)?,
        mu: 0.0,
        product_grid: spec.product_grid(params.grid.map_or(9, |g| g.min(9)), params.fiber_grid.unwrap_or(9)),
        fiber_grid: spec.fiber().chart().grid(params.fiber_grid.unwrap_or(9)),
        crosscheck_grid: spec.product_grid(5, 3),
        tol: 1e-7,
        spec,
    };
    Ok(Instance {
        name: "corollary-1.3".into(),
        parameters: BTreeMap::from([("n".into(), n as f64), ("m".into(), m), ("c1".into(), c1), ("c2".into(), c2)]),
        triple,
        grid,
        tolerances: Tolerances {
            ricci_hessian: Some(1e-8),
            oneform: Some(1e-8),
            mu_deviation: Some(1e-9),
            elliptic: Some(1e-7),
        },
        mu_target: Some((0.0, 1e-9)),
        stated_mu: None,
        hessian_checks: vec![],
        point_checks: vec![],
        warped: Some(warped),
        quadrature: None,
        notes: vec![format!("base g = exp(2 xi) delta with xi = (x1 + ... + xn)/sqrt(n), xi in [{lo:.6}, {hi:.6}]; fiber flat")],
    })
}

fn hyperbolic_sinh(params: &CatalogParams) -> Result<Instance> {
    let m = params.m.unwrap_or(2.0);
    let base = MetricField::euclidean(Chart::cube(&["t"], -2.0, 2.0)?);
    let c = base.coords().to_vec();
    let triple = SolitonTriple::new(
        base,
        ScalarField::parse("cosh(t)", &c)?,
        ScalarField::parse("sinh(t)", &c)?,
        ScalarField::parse(&format!("sinh(t) - {m}"), &c)?,
        m,
    )?;
    let grid = triple.metric.chart().grid(params.grid.unwrap_or(41));
    let mu = triple.mu_field(&grid)?.mean;
    let mut notes = vec![format!(
        "computed mu = {mu:.16e}; the value stated for this example is m - 1 = {:.16e}",
        m - 1.0
    )];
    if (mu - (m - 1.0)).abs() > 1e-9 {
        notes.push(format!(
            "discrepancy: mu equals -(m-1), not m-1, so the fiber must have Einstein constant {mu:.16e} (hyperbolic for m > 1)"
        ));
    }
    let mdim = integer_m(m)?;
    let fiber = einstein_fiber(mdim, mu, &names("u", mdim))?;
    let spec = WarpedProductSpec::new(triple.metric.clone(), fiber, triple.f.clone())?;
    let warped = WarpedInstance {
        psi: spec.lift(&triple.phi)?,
        lambda: spec.lift(&triple.lambda)?,
        mu,
        product_grid: spec.product_grid(17, params.fiber_grid.unwrap_or(9)),
        fiber_grid: spec.fiber().chart().grid(params.fiber_grid.unwrap_or(9)),
        crosscheck_grid: spec.product_grid(9, 5),
        tol: 1e-6,
        spec,
    };
    Ok(Instance {
        name: "hyperbolic-sinh".into(),
        parameters: BTreeMap::from([("m".into(), m)]),
        triple,
        grid,
        tolerances: Tolerances {
            ricci_hessian: Some(1e-9),
            oneform: Some(1e-9),
            mu_deviation: Some(1e-9),
            elliptic: Some(1e-9),
        },
        mu_target: Some((-(m - 1.0), 1e-9)),
        stated_mu: Some(m - 1.0),
        hessian_checks: vec![],
        point_checks: vec![],
        warped: Some(warped),
        quadrature: None,
        notes,
    })
}

const NONCONSTANT_MU: &str = "mu is not constant for this triple (it satisfies the Ricci-Hessian equation but not the one-form condition), so the one-form, mu-deviation and elliptic-identity residuals are reported without a tolerance";

fn sphere_height(params: &CatalogParams) -> Result<Instance> {
    let n = params.n.unwrap_or(2);
    let m = params.m.unwrap_or(2.0);
    let (c, a) = (params.c.unwrap_or(2.0), params.a.unwrap_or(1.0));
    let triple = sphere_height_triple(c, a, n, m)?;
    let grid = triple.metric.chart().grid(params.grid.unwrap_or(if n == 2 { 17 } else { 9 }));
    let h = ScalarField::parse(&format!("cos({})", triple.metric.coords()[0]), triple.metric.coords())?;
    let quadrature = if n == 2 {
        Some(QuadratureCheck { atlas: sphere_height_atlas(c, a, m)?, resolution: 64, tol: 1e-3 })
    } else {
        None
    };
    Ok(Instance {
        name: "sphere-height".into(),
        parameters: BTreeMap::from([("n".into(), n as f64), ("m".into(), m), ("c".into(), c), ("a".into(), a)]),
        triple,
        grid,
        tolerances: Tolerances { ricci_hessian: Some(1e-7), ..Tolerances::default() },
        mu_target: None,
        stated_mu: None,
        hessian_checks: vec![HessianCheck { name: "hessian h = -h g".into(), u: h, sign: -1.0, tol: 1e-7 }],
        point_checks: vec![],
        warped: None,
        quadrature,
        notes: vec![NONCONSTANT_MU.into()],
    })
}

fn hyperbolic_height_instance(params: &CatalogParams) -> Result<Instance> {
    let n = params.n.unwrap_or(2);
    let m = params.m.unwrap_or(2.0);
    let c = params.c.unwrap_or(3.0);
    let triple = hyperbolic_height_triple(c, n, m)?;
    let grid = triple.metric.chart().grid(params.grid.unwrap_or(17));
    let coords = triple.metric.coords().to_vec();
    let h = ScalarField::parse(&hyperbolic_height(&coords), &coords)?;
    let origin = vec![0.0; n];
    Ok(Instance {
        name: "hyperbolic-height".into(),
        parameters: BTreeMap::from([("n".into(), n as f64), ("m".into(), m), ("c".into(), c)]),
        point_checks: vec![PointCheck {
            name: "lambda at origin".into(),
            field: triple.lambda.clone(),
            point: origin,
            expected: -(n as f64 - 1.0),
            tol: 1e-10,
        }],
        triple,
        grid,
        tolerances: Tolerances { ricci_hessian: Some(1e-6), ..Tolerances::default() },
        mu_target: None,
        stated_mu: None,
        hessian_checks: vec![HessianCheck { name: "hessian h = h g".into(), u: h, sign: 1.0, tol: 1e-7 }],
        warped: None,
        quadrature: None,
        notes: vec![NONCONSTANT_MU.into()],
    })
}

fn product_trivial(params: &CatalogParams) -> Result<Instance> {
    let base = unit_sphere(2)?;
    let c = base.coords().to_vec();
    let triple = SolitonTriple::new(
        base,
        ScalarField::constant(1.0, &c),
        ScalarField::constant(0.0, &c),
        ScalarField::constant(1.0, &c),
        2.0,
    )?;
    let grid = triple.metric.chart().grid(params.grid.unwrap_or(17));
    let fiber = einstein_fiber(2, 1.0, &["u1".to_string(), "u2".to_string()])?;
    let spec = WarpedProductSpec::new(triple.metric.clone(), fiber, triple.f.clone())?;
    let warped = WarpedInstance {
        psi: spec.lift(&triple.phi)?,
        lambda: spec.lift(&triple.lambda)?,
        mu: 1.0,
        product_grid: spec.product_grid(9, params.fiber_grid.unwrap_or(9)),
        fiber_grid: spec.fiber().chart().grid(params.fiber_grid.unwrap_or(9)),
        crosscheck_grid: spec.product_grid(5, 5),
        tol: 1e-7,
        spec,
    };
    Ok(Instance {
        name: "product-trivial".into(),
        parameters: BTreeMap::from([("m".into(), 2.0)]),
        triple,
        grid,
        tolerances: Tolerances {
            ricci_hessian: Some(1e-8),
            oneform: Some(1e-8),
            mu_deviation: Some(1e-9),
            elliptic: Some(1e-7),
        },
        mu_target: Some((1.0, 1e-9)),
        stated_mu: None,
        hessian_checks: vec![],
        point_checks: vec![],
        warped: Some(warped),
        quadrature: None,
        notes: vec!["S^2 x S^2 with f = 1: a Riemannian product, Ricci soliton with lambda = 1".into()],
    })
}

impl Instance {
    /// Same instance differentiated with `backend`. Finite differences
    /// need grids pulled in from the chart edges.
    pub fn with_backend(mut self, backend: Backend) -> Result<Instance> {
        if backend == Backend::Symbolic {
            return Ok(self);
        }
        let margin = match backend {
            Backend::FiniteDifference { h, .. } => 2.5 * h,
            Backend::Symbolic => 0.0,
        };
        self.triple = self.triple.with_backend(backend);
        self.grid = self.grid.inset(margin);
        if let Some(w) = self.warped.take() {
            let spec = WarpedProductSpec::new(
                w.spec.base().clone().with_backend(backend),
                w.spec.fiber().clone().with_backend(backend),
                w.spec.warp().clone(),
            )?;
            self.warped = Some(WarpedInstance {
                spec,
                product_grid: w.product_grid.inset(margin),
                fiber_grid: w.fiber_grid.inset(margin),
                crosscheck_grid: w.crosscheck_grid.inset(margin),
                ..w
            });
        }
        for q in self.quadrature.iter_mut() {
            for t in q.atlas.iter_mut() {
                *t = t.with_backend(backend);
            }
        }
        Ok(self)
    }
}
