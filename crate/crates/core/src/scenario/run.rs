use std::collections::HashMap;
use std::fmt::Write as _;

use crate::catalog::{self, CatalogParams, Instance};
use crate::conformal_ode::{diagonal_direction, ConformalAnsatz, ProfileSolution};
use crate::constraints::{soliton_identity_suite, SolitonTriple};
use crate::error::{Error, Result};
use crate::geometry::{hessian, Backend, Chart, Grid, NormKind, ResidualReport};
use crate::rigidity::{compact_integral_identity, elliptic_identity_residual, theorem31_hypothesis_report, QuadratureGrid};
use crate::warped::WarpedProductSpec;

use super::config::*;
use super::report::{Check, IntegralSummary, MuSummary, Report};

/// Tolerance selection: an explicit override replaces every checked
/// tolerance (unchecked lines stay unchecked), and finite differences
/// never check tighter than the backend's own default.
#[derive(Debug, Clone, Copy)]
pub struct TolPolicy {
    pub backend: Backend,
    pub fixed: Option<f64>,
}

impl TolPolicy {
    pub fn new(backend: Backend, fixed: Option<f64>) -> Self {
        TolPolicy { backend, fixed }
    }

    pub fn pick(&self, nominal: Option<f64>) -> Option<f64> {
        let t = nominal.map(|t| self.fixed.unwrap_or(t))?;
        Some(match self.backend {
            Backend::Symbolic => t,
            fd => t.max(fd.default_tolerance()),
        })
    }
}

/// Outputs of a run besides the report.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub profile: Option<ProfileSolution>,
    pub plot: Option<String>,
}

fn inset_for(backend: Backend, grid: Grid) -> Grid {
    match backend.step() {
        Some(h) => grid.inset(2.5 * h),
        None => grid,
    }
}

/// Whitespace-separated columns: coordinates, f, φ, λ, μ.
pub fn plot_data(triple: &SolitonTriple, grid: &Grid) -> Result<String> {
    let rows = grid.sweep(|p| {
        let tp = triple.at(p)?;
        Ok((p.to_vec(), tp.f, triple.phi.value(p)?, tp.lambda, tp.mu.v))
    })?;
    let mut out = String::new();
    let mut header: Vec<String> = triple.metric.coords().to_vec();
    header.extend(["f", "phi", "lambda", "mu"].map(String::from));
    writeln!(out, "# {}", header.join(" ")).unwrap();
    for (p, f, phi, lambda, mu) in rows {
        let mut cols: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
        cols.extend([f, phi, lambda, mu].iter().map(|x| format!("{x:.16e}")));
        writeln!(out, "{}", cols.join(" ")).unwrap();
    }
    Ok(out)
}

/// Ricci-Hessian residual, one-form residual, μ, balance and elliptic lines
/// for a triple on a grid.
fn base_checks(
    report: &mut Report,
    triple: &SolitonTriple,
    grid: &Grid,
    tols: &catalog::Tolerances,
    policy: &TolPolicy,
) -> Result<MuSummary> {
    let rh = triple.residual_ricci_hessian(grid)?;
    report.push(Check::from_residual("ricci_hessian", &rh, policy.pick(tols.ricci_hessian)));
    let oneform = triple.residual_oneform(grid)?;
    report.push(Check::from_residual("oneform", &oneform, policy.pick(tols.oneform)));
    let mu = triple.mu_field(grid)?;
    report.push(Check::new(
        "mu_deviation",
        mu.deviation,
        &grid.describe(),
        &triple.backend().to_string(),
        policy.pick(tols.mu_deviation),
    ));
    let balance = triple.first_integral_balance(grid)?;
    report.push(Check::from_residual("first_integral_balance", &balance, None));
    let (elliptic, _) = elliptic_identity_residual(triple, grid)?;
    report.push(Check::from_residual("elliptic_identity", &elliptic, policy.pick(tols.elliptic)));
    Ok(MuSummary { mean: mu.mean, deviation: mu.deviation, stated: None })
}

fn hessian_sign_report(u: &crate::geometry::ScalarField, sign: f64, triple: &SolitonTriple, grid: &Grid, name: &str) -> Result<ResidualReport> {
    let g = &triple.metric;
    ResidualReport::sweep(name, grid, *g.backend(), NormKind::Coordinate, |p| {
        let h = hessian(u, g, p)?;
        let gp = g.value(p)?;
        Ok((h - gp * (sign * u.value(p)?)).norm())
    })
}

fn quadrature_checks(report: &mut Report, q: &catalog::QuadratureCheck, policy: &TolPolicy) -> Result<()> {
    let mut diffs = Vec::new();
    for res in [q.resolution, 2 * q.resolution] {
        let quad = QuadratureGrid::sphere2(res, res)?;
        let identity = compact_integral_identity(&q.atlas, &quad)?;
        diffs.push(identity.difference);
        report.integrals.push(IntegralSummary { resolution: res, identity });
    }
    let backend = q.atlas[0].backend().to_string();
    let grid = format!("{0}x{0} two-chart sphere quadrature", q.resolution);
    report.push(Check::new("integral_identity", diffs[0], &grid, &backend, policy.pick(Some(q.tol))));
    let fine = format!("{0}x{0} two-chart sphere quadrature", 2 * q.resolution);
    report.push(Check::new("integral_refinement", diffs[1], &fine, &backend, Some((diffs[0] / 2.0).max(1e-12))));
    Ok(())
}

fn warped_checks(report: &mut Report, w: &catalog::WarpedInstance, policy: &TolPolicy) -> Result<()> {
    let spec = &w.spec;
    let fiber = spec.fiber_einstein_report(w.mu, &w.fiber_grid)?;
    report.push(Check::from_residual("fiber_einstein", &fiber, policy.pick(Some(w.tol))));
    let cross = spec.crosscheck_ricci(&w.crosscheck_grid)?;
    report.push(Check::from_residual("oneill_crosscheck", &cross, policy.pick(Some(1e-8))));
    let mixed = spec.mixed_ricci_report(&w.crosscheck_grid)?;
    report.push(Check::from_residual("mixed_ricci", &mixed, policy.pick(Some(1e-8))));
    let assembled = spec.assemble()?;
    let suite = soliton_identity_suite(&assembled, &w.psi, &w.lambda, &w.product_grid)?;
    report.push(Check::from_residual("soliton_fundamental", &suite.fundamental, policy.pick(Some(w.tol))));
    report.push(Check::from_residual("soliton_trace", &suite.trace, policy.pick(Some(w.tol))));
    report.push(Check::from_residual("soliton_oneform", &suite.oneform, policy.pick(Some(w.tol))));
    Ok(())
}

/// Every check attached to a catalog instance.
pub fn run_instance(instance: &Instance, policy: &TolPolicy) -> Result<Report> {
    let mut report = Report::new(&instance.name);
    for (k, v) in &instance.parameters {
        report.param(k, *v);
    }
    report.param("backend", policy.backend.to_string());
    let triple = &instance.triple;
    let grid = &instance.grid;
    let backend = triple.backend().to_string();

    let mut mu = base_checks(&mut report, triple, grid, &instance.tolerances, policy)?;
    if let Some((target, tol)) = instance.mu_target {
        report.push(Check::new("mu_target", (mu.mean - target).abs(), &grid.describe(), &backend, policy.pick(Some(tol))));
    }
    mu.stated = instance.stated_mu;
    report.mu = Some(mu);

    for h in &instance.hessian_checks {
        let r = hessian_sign_report(&h.u, h.sign, triple, grid, &h.name)?;
        report.push(Check::from_residual(&h.name, &r, policy.pick(Some(h.tol))));
    }
    for c in &instance.point_checks {
        let err = (c.field.value(&c.point)? - c.expected).abs();
        report.push(Check::new(&c.name, err, &format!("{:?}", c.point), &backend, policy.pick(Some(c.tol))));
    }
    if let Some(w) = &instance.warped {
        warped_checks(&mut report, w, policy)?;
    }
    if let Some(q) = &instance.quadrature {
        quadrature_checks(&mut report, q, policy)?;
    }
    report.hypotheses = Some(theorem31_hypothesis_report(triple, grid)?);
    report.notes = instance.notes.clone();
    Ok(report)
}

pub fn run_catalog(name: &str, params: &CatalogParams, backend: Backend, tol: Option<f64>) -> Result<Report> {
    let instance = catalog::build(name, params)?.with_backend(backend)?;
    run_instance(&instance, &TolPolicy::new(backend, tol))
}

fn uniform(t: Option<f64>) -> catalog::Tolerances {
    catalog::Tolerances { ricci_hessian: t, oneform: t, mu_deviation: t, elliptic: None }
}

fn to_params(map: &std::collections::BTreeMap<String, f64>) -> HashMap<String, f64> {
    map.iter().map(|(k, v)| (k.clone(), *v)).collect()
}

fn verify_triple(cfg: &VerifyTriple, backend: Backend, tol: Option<f64>) -> Result<(Report, Artifacts)> {
    let triple = cfg.triple.triple()?.with_backend(backend);
    let grid = inset_for(backend, cfg.grid.grid(triple.metric.chart())?);
    triple.check_f_positive(&grid)?;
    let policy = TolPolicy::new(backend, tol);
    let mut report = Report::new("verify-triple");
    for (k, v) in cfg.triple.parameters().into_iter().collect::<std::collections::BTreeMap<_, _>>() {
        report.param(&k, v);
    }
    report.param("backend", backend.to_string());
    let nominal = Some(tol.unwrap_or(backend.default_tolerance()));
    report.mu = Some(base_checks(&mut report, &triple, &grid, &uniform(nominal), &policy)?);
    report.hypotheses = Some(theorem31_hypothesis_report(&triple, &grid)?);
    let plot = plot_data(&triple, &grid)?;
    Ok((report, Artifacts { profile: None, plot: Some(plot) }))
}

fn construct(cfg: &ConstructConformal, backend: Backend, tol: Option<f64>) -> Result<(Report, Artifacts)> {
    let mut params = to_params(&cfg.params);
    params.entry("m".into()).or_insert(cfg.m);
    params.entry("n".into()).or_insert(cfg.n as f64);
    let alpha = cfg.alpha.clone().unwrap_or_else(|| diagonal_direction(cfg.n));
    let ansatz = ConformalAnsatz::new(cfg.n, cfg.m, alpha.clone(), bind(&cfg.big_f, &params)?, bind(&cfg.f, &params)?)?;
    let [a, b] = cfg.xi_range;
    let solution = ansatz.integrate_profiles(cfg.xi0, cfg.phi0, cfg.dphi0, (a, b), cfg.step)?;

    let spread: f64 = alpha.iter().map(|x| x.abs()).sum();
    let reach = (cfg.xi0 - a).min(b - cfg.xi0);
    let half = cfg.half_width.unwrap_or(0.999 * reach / spread);
    let coords = crate::conformal_ode::coordinates(cfg.n);
    let centre: Vec<f64> = alpha.iter().map(|x| x * cfg.xi0).collect();
    let lower: Vec<f64> = centre.iter().map(|c| c - half).collect();
    let upper: Vec<f64> = centre.iter().map(|c| c + half).collect();
    let chart = Chart::new(&coords, &lower, &upper)?;
    let triple = solution.lift(&alpha, &chart)?.with_backend(backend);
    let grid = inset_for(backend, chart.grid(cfg.grid.unwrap_or(9)));

    let policy = TolPolicy::new(backend, tol);
    let mut report = Report::new("construct-conformal");
    for (k, v) in params.iter().collect::<std::collections::BTreeMap<_, _>>() {
        report.param(k, *v);
    }
    report.param("F", cfg.big_f.clone());
    report.param("f", cfg.f.clone());
    report.param("alpha", alpha.clone());
    report.param("xi_range", vec![a, b]);
    report.param("step", cfg.step);
    report.param("backend", backend.to_string());
    let nominal = Some(tol.unwrap_or(1e-6));
    report.push(Check::new(
        "profile_mu_deviation",
        solution.mu_deviation(),
        &format!("{} RK4 nodes on [{a}, {b}]", solution.len()),
        "symbolic",
        policy.pick(nominal),
    ));
    report.mu = Some(base_checks(&mut report, &triple, &grid, &uniform(nominal), &policy)?);
    report.notes.push(
        "the profile ODE enforces the Ricci-Hessian equation only; constancy of mu is an extra condition on F and f".into(),
    );
    Ok((report, Artifacts { profile: Some(solution), plot: Some(plot_data(&triple, &grid)?) }))
}

fn assemble_warped(cfg: &AssembleWarped, backend: Backend, tol: Option<f64>) -> Result<(Report, Artifacts)> {
    let base_triple = cfg.triple.triple()?.with_backend(backend);
    let params = cfg.triple.parameters();
    let base_grid = inset_for(backend, cfg.base_grid.grid(base_triple.metric.chart())?);
    let fiber_metric = metric_from(&cfg.fiber, &params)?.with_backend(backend);
    let fiber_grid = inset_for(backend, cfg.fiber_grid.grid(fiber_metric.chart())?);
    let policy = TolPolicy::new(backend, tol);
    let nominal = Some(tol.unwrap_or(backend.default_tolerance()));

    let mut report = Report::new("assemble-warped");
    for (k, v) in params.iter().collect::<std::collections::BTreeMap<_, _>>() {
        report.param(k, *v);
    }
    report.param("backend", backend.to_string());
    let mut mu = base_checks(&mut report, &base_triple, &base_grid, &uniform(nominal), &policy)?;
    let fiber_mu = cfg.mu.unwrap_or(mu.mean);
    mu.stated = cfg.mu;
    report.mu = Some(mu);

    let spec = WarpedProductSpec::new(base_triple.metric.clone(), fiber_metric, base_triple.f.clone())?;
    let product_grid = base_grid.product(&fiber_grid);
    let w = catalog::WarpedInstance {
        psi: spec.lift(&base_triple.phi)?,
        lambda: spec.lift(&base_triple.lambda)?,
        mu: fiber_mu,
        crosscheck_grid: product_grid.clone(),
        product_grid,
        fiber_grid,
        tol: nominal.unwrap(),
        spec,
    };
    warped_checks(&mut report, &w, &policy)?;
    Ok((report, Artifacts::default()))
}

fn crosscheck(cfg: &Crosscheck, backend: Backend, tol: Option<f64>) -> Result<(Report, Artifacts)> {
    let params = to_params(&cfg.params);
    let base = metric_from(&cfg.base, &params)?.with_backend(backend);
    let fiber = metric_from(&cfg.fiber, &params)?.with_backend(backend);
    let warp = field_from(&cfg.f, base.coords(), &params)?;
    let base_grid = inset_for(backend, cfg.base_grid.grid(base.chart())?);
    let fiber_grid = inset_for(backend, cfg.fiber_grid.grid(fiber.chart())?);
    let spec = WarpedProductSpec::new(base, fiber, warp)?;
    let grid = base_grid.product(&fiber_grid);
    let policy = TolPolicy::new(backend, tol);
    let nominal = Some(tol.unwrap_or(1e-8));

    let mut report = Report::new("crosscheck");
    for (k, v) in &cfg.params {
        report.param(k, *v);
    }
    report.param("backend", backend.to_string());
    let cross = spec.crosscheck_ricci(&grid)?;
    report.push(Check::from_residual("oneill_crosscheck", &cross, policy.pick(nominal)));
    let mixed = spec.mixed_ricci_report(&grid)?;
    report.push(Check::from_residual("mixed_ricci", &mixed, policy.pick(nominal)));
    if let Some(phi) = &cfg.phi {
        let phi = field_from(phi, spec.base().coords(), &params)?;
        let assembled = spec.assemble()?;
        let worst = grid.sweep(|p| {
            let a = spec.hessian_lift(&phi, p)?.to_matrix();
            let b = spec.hessian_lift_direct(&assembled, &phi, p)?.to_matrix();
            Ok((a - b).abs().max())
        })?;
        let r = ResidualReport::from_samples("hessian_lift", &grid, backend, NormKind::Coordinate, worst);
        report.push(Check::from_residual("hessian_lift", &r, policy.pick(nominal)));
    }
    if let Backend::FiniteDifference { h, richardson } = backend {
        let half = Backend::FiniteDifference { h: h / 2.0, richardson };
        let spec_half = WarpedProductSpec::new(
            spec.base().clone().with_backend(half),
            spec.fiber().clone().with_backend(half),
            spec.warp().clone(),
        )?;
        let fine = spec_half.crosscheck_ricci(&grid)?;
        let ratio = cross.sup / fine.sup;
        report.push(Check::new("oneill_crosscheck_half_step", fine.sup, &grid.describe(), &half.to_string(), None));
        report.notes.push(format!("sup residual ratio between h and h/2: {ratio:.6}"));
    }
    Ok((report, Artifacts::default()))
}

fn rigidity(cfg: &Rigidity, backend: Backend, tol: Option<f64>) -> Result<(Report, Artifacts)> {
    let policy = TolPolicy::new(backend, tol);
    match (&cfg.catalog, &cfg.triple) {
        (Some(name), None) => {
            let mut instance = catalog::build(name, &cfg.params)?.with_backend(backend)?;
            let mut report = Report::new(&format!("rigidity:{name}"));
            for (k, v) in &instance.parameters {
                report.param(k, *v);
            }
            report.param("backend", backend.to_string());
            if let Some(spec) = &cfg.grid {
                instance.grid = inset_for(backend, spec.grid(instance.triple.metric.chart())?);
            }
            let (elliptic, mean) = elliptic_identity_residual(&instance.triple, &instance.grid)?;
            report.push(Check::from_residual("elliptic_identity", &elliptic, policy.pick(instance.tolerances.elliptic)));
            report.notes.push(format!("elliptic identity evaluated with mu = {mean:.16e} (grid mean)"));
            for h in &instance.hessian_checks {
                let r = hessian_sign_report(&h.u, h.sign, &instance.triple, &instance.grid, &h.name)?;
                report.push(Check::from_residual(&h.name, &r, policy.pick(Some(h.tol))));
            }
            if let Some(mut q) = instance.quadrature.clone() {
                if let Some(res) = cfg.resolution {
                    q.resolution = res;
                }
                quadrature_checks(&mut report, &q, &policy)?;
            }
            report.hypotheses = Some(theorem31_hypothesis_report(&instance.triple, &instance.grid)?);
            report.notes.extend(instance.notes.iter().cloned());
            Ok((report, Artifacts::default()))
        }
        (None, Some(t)) => {
            let triple = t.triple()?.with_backend(backend);
            let spec = cfg.grid.clone().unwrap_or(GridSpec::Uniform(17));
            let grid = inset_for(backend, spec.grid(triple.metric.chart())?);
            let mut report = Report::new("rigidity");
            for (k, v) in t.parameters().into_iter().collect::<std::collections::BTreeMap<_, _>>() {
                report.param(&k, v);
            }
            report.param("backend", backend.to_string());
            let (elliptic, mean) = elliptic_identity_residual(&triple, &grid)?;
            report.push(Check::from_residual("elliptic_identity", &elliptic, policy.pick(Some(tol.unwrap_or(1e-7)))));
            report.notes.push(format!("elliptic identity evaluated with mu = {mean:.16e} (grid mean)"));
            report.hypotheses = Some(theorem31_hypothesis_report(&triple, &grid)?);
            Ok((report, Artifacts::default()))
        }
        _ => Err(Error::Invalid("rigidity config needs exactly one of `catalog` or `triple`".into())),
    }
}

/// Command-line overrides of a config's backend and tolerance.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub mode: Option<BackendKind>,
    pub h: Option<f64>,
    pub tol: Option<f64>,
}

pub fn run_config(config: &ScenarioConfig, o: &Overrides) -> Result<(Report, Artifacts)> {
    let pick = |b: &BackendConfig, t: Option<f64>| -> Result<(Backend, Option<f64>)> {
        Ok((b.overridden(o.mode, o.h).backend()?, o.tol.or(t)))
    };
    match config {
        ScenarioConfig::VerifyTriple(c) => {
            let (b, t) = pick(&c.backend, c.tol)?;
            verify_triple(c, b, t)
        }
        ScenarioConfig::ConstructConformal(c) => {
            let (b, t) = pick(&c.backend, c.tol)?;
            construct(c, b, t)
        }
        ScenarioConfig::AssembleWarped(c) => {
            let (b, t) = pick(&c.backend, c.tol)?;
            assemble_warped(c, b, t)
        }
        ScenarioConfig::Catalog(c) => {
            let (b, t) = pick(&c.backend, c.tol)?;
            let instance = catalog::build(&c.name, &c.params)?.with_backend(b)?;
            let report = run_instance(&instance, &TolPolicy::new(b, t))?;
            let plot = plot_data(&instance.triple, &instance.grid)?;
            Ok((report, Artifacts { profile: None, plot: Some(plot) }))
        }
        ScenarioConfig::Crosscheck(c) => {
            let (b, t) = pick(&c.backend, c.tol)?;
            crosscheck(c, b, t)
        }
        ScenarioConfig::Rigidity(c) => {
            let (b, t) = pick(&c.backend, c.tol)?;
            rigidity(c, b, t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_policy() {
        let s = TolPolicy::new(Backend::Symbolic, None);
        assert_eq!(s.pick(Some(1e-9)), Some(1e-9));
        assert_eq!(s.pick(None), None);
        let fd = TolPolicy::new(Backend::fd(1e-3), None);
        assert_eq!(fd.pick(Some(1e-9)), Some(1e-4));
        let fixed = TolPolicy::new(Backend::Symbolic, Some(0.5));
        assert_eq!(fixed.pick(Some(1e-9)), Some(0.5));
        assert_eq!(fixed.pick(None), None);
    }
}
