//! Acceptance criteria, one pass/fail line each. Runs without the libtest
//! harness so every line is printed; exits non-zero if any criterion fails.

use std::process::{Command, ExitCode};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use warpsol::catalog::{self, CatalogParams, NAMES};
use warpsol::conformal_ode::*;
use warpsol::constraints::soliton_identity_suite;
use warpsol::error::Result;
use warpsol::geometry::*;
use warpsol::rigidity::{compact_integral_identity, elliptic_identity_residual, hyperbolic_height, QuadratureGrid};
use warpsol::scenario::run_catalog;
use warpsol::warped::WarpedProductSpec;

struct Outcome {
    pass: bool,
    detail: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { pass: true, detail: Vec::new() }
    }

    fn le(&mut self, what: &str, value: f64, tol: f64) {
        let ok = value <= tol;
        self.pass &= ok;
        self.detail.push(format!("{what} {value:.3e}{}{tol:.0e}", if ok { " <= " } else { " > " }));
    }

    fn within(&mut self, what: &str, value: f64, lo: f64, hi: f64) {
        let ok = (lo..=hi).contains(&value);
        self.pass &= ok;
        self.detail.push(format!("{what} {value:.3} {} [{lo}, {hi}]", if ok { "in" } else { "not in" }));
    }

    fn flag(&mut self, what: &str, ok: bool) {
        self.pass &= ok;
        self.detail.push(format!("{what} {}", if ok { "yes" } else { "NO" }));
    }

    fn note(&mut self, text: String) {
        self.detail.push(text);
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, b| a.max(b.abs()))
}

fn criterion_1() -> Result<Outcome> {
    let mut o = Outcome::new();
    let t = closed_form_family(1.0, 0.0, 3, 2.0)?;
    let grid = t.metric.chart().grid(17);
    o.le("ricci_hessian", t.residual_ricci_hessian(&grid)?.sup, 1e-8);
    o.le("oneform", t.residual_oneform(&grid)?.sup, 1e-8);
    let mu = t.mu_field(&grid)?;
    o.le("mu deviation", mu.deviation, 1e-9);
    o.le("|mu mean|", mu.mean.abs(), 1e-9);
    Ok(o)
}

fn criterion_2() -> Result<Outcome> {
    let mut o = Outcome::new();
    let inst = catalog::build("corollary-1.3", &CatalogParams::default())?;
    let w = inst.warped.expect("corollary instance is warped");
    o.flag("fiber Ricci-flat", w.spec.fiber_einstein_report(0.0, &w.fiber_grid)?.sup <= 1e-12);
    let g = w.spec.assemble()?;
    let grid = w.spec.product_grid(9, 9);
    o.note(format!("{} points", grid.len()));
    let suite = soliton_identity_suite(&g, &w.psi, &w.lambda, &grid)?;
    o.le("fundamental", suite.fundamental.sup, 1e-7);
    o.le("trace", suite.trace.sup, 1e-7);
    Ok(o)
}

fn criterion_3() -> Result<Outcome> {
    let mut o = Outcome::new();
    let base = MetricField::euclidean(Chart::cube(&["t"], -1.5, 1.5)?);
    let fiber = unit_sphere(2)?;
    let f = ScalarField::parse("cosh(t)", base.coords())?;
    let spec = WarpedProductSpec::new(base.clone(), fiber.clone(), f.clone())?;
    let grid = spec.product_grid(9, 5);
    o.le("symbolic", spec.crosscheck_ricci(&grid)?.sup, 1e-8);
    let inner = grid.inset(0.05);
    let sup = |h: f64| -> Result<f64> {
        let s = WarpedProductSpec::new(base.clone().with_backend(Backend::fd(h)), fiber.clone().with_backend(Backend::fd(h)), f.clone())?;
        Ok(s.crosscheck_ricci(&inner)?.sup)
    };
    let (coarse, fine) = (sup(1e-3)?, sup(5e-4)?);
    o.note(format!("fd sup {coarse:.3e} at h=1e-3, {fine:.3e} at h=5e-4"));
    o.within("ratio", coarse / fine, 3.5, 4.5);
    Ok(o)
}

fn random_ansatz(rng: &mut ChaCha8Rng) -> (usize, f64, String, String) {
    let n = [3, 4][rng.random_range(0..2)];
    let m = [2.0, 3.0][rng.random_range(0..2)];
    let a: f64 = rng.random_range(0.2..1.0);
    let (b, c, d): (f64, f64, f64) = (rng.random_range(0.3..1.0), rng.random_range(0.5..1.5), rng.random_range(-1.0..1.0));
    (n, m, format!("1/(1 + {a}*xi^2)"), format!("2 + {b}*sin({c}*xi + {d})"))
}

fn criterion_4() -> Result<Outcome> {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    let mut worst_rh = 0.0_f64;
    let mut worst_balance = 0.0_f64;
    for _ in 0..5 {
        let (n, m, big_f, f) = random_ansatz(&mut rng);
        let ansatz = ConformalAnsatz::parse(n, m, diagonal_direction(n), &big_f, &f)?;
        let s = ansatz.integrate_profiles(0.0, 0.0, 0.0, (-2.0, 2.0), 1e-3)?;
        let chart = Chart::cube(&coordinates(n), -0.5, 0.5)?;
        let t = s.lift(&diagonal_direction(n), &chart)?;
        let grid = chart.grid(4);
        worst = worst.max(t.mu_field(&grid)?.deviation).max(s.mu_deviation());
        worst_rh = worst_rh.max(t.residual_ricci_hessian(&grid)?.sup);
        worst_balance = worst_balance.max(t.first_integral_balance(&grid)?.sup);
    }
    o.le("random ansatz mu deviation (worst of 5)", worst, 1e-6);
    o.note(format!("their Ricci-Hessian residual {worst_rh:.1e}, balance {worst_balance:.1e}"));

    let a = ConformalAnsatz::exponential(3, 2.0)?;
    let (p0, d0) = closed_form_initial(1.0, 0.0, 3, 2.0);
    let err = |step: f64| -> Result<f64> {
        let s = a.integrate_profiles(0.0, p0, d0, (-1.0, 1.0), step)?;
        Ok(s.xi.iter().zip(&s.phi).map(|(x, p)| (p - closed_form_phi(1.0, 0.0, 3, 2.0, *x)).abs()).fold(0.0, f64::max))
    };
    o.le("RK4 error at step 1e-3", err(1e-3)?, 1e-8);
    let ratio = err(0.02)? / err(0.01)?;
    o.flag(&format!("halving 0.02 -> 0.01 improves by {ratio:.2} >= 14"), ratio >= 14.0);
    Ok(o)
}

fn criterion_5() -> Result<Outcome> {
    let mut o = Outcome::new();
    let m = 2.0;
    let r = run_catalog("hyperbolic-sinh", &CatalogParams { m: Some(m), ..Default::default() }, Backend::Symbolic, None)?;
    let sup = |name: &str| r.residuals.iter().find(|c| c.name == name).map(|c| c.sup).unwrap_or(f64::NAN);
    o.le("ricci_hessian", sup("ricci_hessian"), 1e-9);
    o.le("oneform", sup("oneform"), 1e-9);
    let mu = r.mu.clone().expect("mu summary");
    o.le("mu deviation", mu.deviation, 1e-9);
    o.note(format!("computed mu {:.12} vs stated m-1 = {}", mu.mean, m - 1.0));
    o.flag("discrepancy noted", r.notes.iter().any(|n| n.contains("discrepancy")));
    o.le("warped fundamental", sup("soliton_fundamental"), 1e-6);
    o.le("warped trace", sup("soliton_trace"), 1e-6);
    o.le("fiber Einstein at computed mu", sup("fiber_einstein"), 1e-6);
    Ok(o)
}

fn criterion_6() -> Result<Outcome> {
    let mut o = Outcome::new();
    for name in NAMES {
        let inst = catalog::build(name, &CatalogParams::default())?;
        let (r, _) = elliptic_identity_residual(&inst.triple, &inst.grid)?;
        o.le(&format!("elliptic {name}"), r.sup, 1e-7);
    }
    let atlas = warpsol::rigidity::sphere_height_atlas(2.0, -1.0, 2.0)?;
    let coarse = compact_integral_identity(&atlas, &QuadratureGrid::sphere2(64, 64)?)?;
    let fine = compact_integral_identity(&atlas, &QuadratureGrid::sphere2(128, 128)?)?;
    o.le("integral identity 64x64", coarse.difference, 1e-3);
    o.le("at 128x128", fine.difference, (coarse.difference / 2.0).max(1e-12));

    let s = unit_sphere(2)?;
    let h = ScalarField::parse("cos(th)", s.coords())?;
    let mut sphere_sup = 0.0_f64;
    for p in s.chart().grid(9).points() {
        sphere_sup = sphere_sup.max((hessian(&h, &s, &p)? + s.value(&p)? * h.value(&p)?).abs().max());
    }
    o.le("Hess h = -h g on S^2", sphere_sup, 1e-7);
    let b = poincare_ball(2, 0.5)?;
    let hv = ScalarField::parse(&hyperbolic_height(b.coords()), b.coords())?;
    let mut hyp_sup = 0.0_f64;
    for p in b.chart().grid(9).points() {
        hyp_sup = hyp_sup.max((hessian(&hv, &b, &p)? - b.value(&p)? * hv.value(&p)?).abs().max());
    }
    o.le("Hess h = h g on H^2", hyp_sup, 1e-7);
    Ok(o)
}

fn bianchi_metrics() -> Result<Vec<MetricField>> {
    let c3 = ["x1", "x2", "x3"];
    let conf = warpsol::parse("exp(2*sin(x1 + x2))")?;
    Ok(vec![
        MetricField::diagonal(Chart::cube(&c3, -1.0, 1.0)?, vec![conf; 3])?,
        MetricField::parse(Chart::cube(&["x", "y"], -1.0, 1.0)?, &[vec!["1 + x^2", "x*y"], vec!["x*y", "1 + y^2"]])?,
        MetricField::parse(
            Chart::cube(&c3, -1.0, 1.0)?,
            &[
                vec!["2 + sin(x1)", "0.3*x3", "0"],
                vec!["0.3*x3", "exp(x2)", "0.1*x1*x2"],
                vec!["0", "0.1*x1*x2", "1 + x3^2"],
            ],
        )?,
    ])
}

fn criterion_7() -> Result<Outcome> {
    let mut o = Outcome::new();
    for n in [2, 3] {
        let g = unit_sphere(n)?;
        let mut worst = 0.0_f64;
        for p in g.chart().grid(5).points() {
            let geom = PointGeometry::at(&g, &p, 2)?;
            worst = worst.max((geom.ricci() - geom.g() * (n as f64 - 1.0)).abs().max());
        }
        o.le(&format!("Ric - (n-1)g on S^{n}"), worst, 1e-8);
    }
    let mut bianchi = 0.0_f64;
    for g in bianchi_metrics()? {
        for p in Grid::cube(g.dim(), -0.8, 0.8, 3)?.points() {
            bianchi = bianchi.max(max_abs(&bianchi_residual(&g, &p)?));
        }
    }
    o.le("Bianchi (3 metrics)", bianchi, 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut div = 0.0_f64;
    for _ in 0..10 {
        let mut r = || rng.random_range(-1.0..1.0);
        let (a, b, c, d, e) = (r(), r(), 0.3 * r(), 0.5 * r(), r());
        let off = format!("{c}*sin(x + {e})");
        let g = MetricField::parse(
            Chart::cube(&["x", "y"], -1.0, 1.0)?,
            &[vec![format!("exp({a}*x + {b}*y)"), off.clone()], vec![off, format!("1 + {d}*y^2 + 0.5*x^2")]],
        )?;
        let phi = ScalarField::parse(&format!("sin({a}*x + 1)*cosh({b}*y) + {d}*x*y^2"), g.coords())?;
        for p in Grid::cube(2, -0.8, 0.8, 3)?.points() {
            div = div.max(max_abs(&hessian_divergence_residual(&phi, &g, &p)?));
        }
    }
    o.le("div Hess - Ric(grad) - d Lap (10 random pairs)", div, 1e-6);
    Ok(o)
}

fn criterion_8() -> Result<Outcome> {
    let mut o = Outcome::new();
    for name in NAMES {
        let run = || Command::new(env!("CARGO_BIN_EXE_warpsol")).args(["catalog", name]).output().expect("binary runs");
        let (a, b) = (run(), run());
        o.flag(&format!("{name} identical"), !a.stdout.is_empty() && a.stdout == b.stdout);
    }
    Ok(o)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 8] = [
        ("exponential family verification", criterion_1),
        ("warped round trip", criterion_2),
        ("block Ricci cross-check", criterion_3),
        ("first integral and RK4", criterion_4),
        ("hyperbolic-sinh audit", criterion_5),
        ("rigidity identities", criterion_6),
        ("geometry foundations", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail.join("; ")),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("criterion {} {}: {title}: {detail}", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
