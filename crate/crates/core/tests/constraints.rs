use warpsol::catalog::{self, einstein_fiber, CatalogParams};
use warpsol::constraints::{barros_ribeiro_residual, soliton_identity_suite, trace_ratio, SolitonTriple};
use warpsol::geometry::{unit_sphere, Chart, MetricField, ScalarField};
use warpsol::warped::WarpedProductSpec;

fn intro(m: f64) -> SolitonTriple {
    let g = MetricField::euclidean(Chart::cube(&["t"], -2.0, 2.0).unwrap());
    let c = g.coords().to_vec();
    let field = |s: &str| ScalarField::parse(s, &c).unwrap();
    SolitonTriple::new(g, field("cosh(t)"), field("sinh(t)"), field(&format!("sinh(t) - {m}")), m).unwrap()
}

/// `λf² + f f″ + (m−1) f′² − f φ′ f′` written out for `f = cosh`, `φ = sinh`.
fn intro_mu_by_hand(m: f64, t: f64) -> f64 {
    let (c, s) = (t.cosh(), t.sinh());
    (s - m) * c * c + c * c + (m - 1.0) * s * s - c * c * s
}

#[test]
fn intro_mu_matches_hand_expansion() {
    for m in [2.0, 3.0, 5.0] {
        let t = intro(m);
        let grid = t.metric.chart().grid(41);
        let mu = t.mu_field(&grid).unwrap();
        for (i, s) in mu.samples.iter().enumerate() {
            let p = grid.point(i);
            assert!((s - intro_mu_by_hand(m, p[0])).abs() <= 1e-9);
        }
        assert!((mu.mean + (m - 1.0)).abs() <= 1e-9, "m={m} mean={}", mu.mean);
        assert!(mu.deviation <= 1e-9);
        assert!(t.residual_ricci_hessian(&grid).unwrap().sup <= 1e-9);
        assert!(t.residual_oneform(&grid).unwrap().sup <= 1e-9);
    }
}

#[test]
fn einstein_base_with_constant_data() {
    let g = unit_sphere(2).unwrap();
    let c = g.coords().to_vec();
    let t = SolitonTriple::new(
        g,
        ScalarField::constant(1.0, &c),
        ScalarField::constant(3.0, &c),
        ScalarField::constant(1.0, &c),
        2.0,
    )
    .unwrap();
    let grid = t.metric.chart().grid(9);
    assert!(t.residual_ricci_hessian(&grid).unwrap().sup <= 1e-8);
    let mu = t.mu_field(&grid).unwrap();
    assert!((mu.mean - 1.0).abs() <= 1e-12 && mu.deviation <= 1e-12);
}

#[test]
fn round_sphere_is_a_trivial_soliton() {
    let g = unit_sphere(2).unwrap();
    let c = g.coords().to_vec();
    let suite = soliton_identity_suite(&g, &ScalarField::constant(0.0, &c), &ScalarField::constant(1.0, &c), &g.chart().grid(9)).unwrap();
    assert!(suite.fundamental.sup <= 1e-8);
    assert!(suite.trace.sup <= 1e-8);
    assert!(suite.oneform.sup <= 1e-8);
}

#[test]
fn small_base_residuals_force_constant_mu() {
    for name in ["corollary-1.3", "hyperbolic-sinh", "product-trivial"] {
        let inst = catalog::build(name, &CatalogParams::default()).unwrap();
        let t = &inst.triple;
        let e1 = t.residual_ricci_hessian(&inst.grid).unwrap().sup;
        let e2 = t.residual_oneform(&inst.grid).unwrap().sup;
        let dev = t.mu_field(&inst.grid).unwrap().deviation;
        assert!(dev <= 10.0 * (e1 + e2) + 1e-12, "{name}: dev {dev} e1 {e1} e2 {e2}");
    }
}

#[test]
fn trace_is_bounded_by_fundamental() {
    let g = MetricField::parse(
        Chart::cube(&["x", "y", "z"], -0.5, 0.5).unwrap(),
        &[
            vec!["exp(x)", "0.1*y", "0"],
            vec!["0.1*y", "1 + z^2", "0.2*x"],
            vec!["0", "0.2*x", "2 + sin(y)"],
        ],
    )
    .unwrap();
    let c = g.coords().to_vec();
    let psi = ScalarField::parse("x*y + cos(z)", &c).unwrap();
    let lambda = ScalarField::parse("1 + x - y*z", &c).unwrap();
    for p in g.chart().grid(4).points() {
        if let Some(r) = trace_ratio(&g, &psi, &lambda, &p).unwrap() {
            assert!(r <= 3f64.sqrt() + 1e-12, "ratio {r} at {p:?}");
        }
    }
}

#[test]
fn hyperbolic_sinh_warped_soliton_with_computed_constant() {
    let m = 2.0;
    let base = intro(m);
    let grid = base.metric.chart().grid(17);
    let mu = base.mu_field(&grid).unwrap().mean;
    let fiber = einstein_fiber(2, mu, &["u1".to_string(), "u2".to_string()]).unwrap();
    let spec = WarpedProductSpec::new(base.metric.clone(), fiber, base.f.clone()).unwrap();
    assert!(spec.fiber_einstein_report(mu, &spec.fiber().chart().grid(7)).unwrap().sup <= 1e-9);
    let g = spec.assemble().unwrap();
    let psi = spec.lift(&base.phi).unwrap();
    let lambda = spec.lift(&base.lambda).unwrap();
    let product = spec.product_grid(9, 5);
    let suite = soliton_identity_suite(&g, &psi, &lambda, &product).unwrap();
    assert!(suite.fundamental.sup <= 1e-6, "{}", suite.fundamental.sup);
    assert!(suite.trace.sup <= 1e-6);
    assert!(suite.oneform.sup <= 1e-6);
    assert!(barros_ribeiro_residual(&g, &psi, &lambda, &product).unwrap().sup <= 1e-6);

    // A fiber with the opposite constant breaks the soliton equation.
    let wrong = einstein_fiber(2, -mu, &["u1".to_string(), "u2".to_string()]).unwrap();
    let spec = WarpedProductSpec::new(base.metric.clone(), wrong, base.f.clone()).unwrap();
    let g = spec.assemble().unwrap();
    let suite = soliton_identity_suite(&g, &psi, &lambda, &spec.product_grid(5, 3)).unwrap();
    assert!(suite.fundamental.sup > 0.1);
}

#[test]
fn m_must_be_nonzero() {
    let g = MetricField::euclidean(Chart::cube(&["t"], -1.0, 1.0).unwrap());
    let c = g.coords().to_vec();
    let one = ScalarField::constant(1.0, &c);
    assert!(SolitonTriple::new(g, one.clone(), one.clone(), one, 0.0).is_err());
}
