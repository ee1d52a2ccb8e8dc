use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use warpsol::geometry::*;

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, b| a.max(b.abs()))
}

#[test]
fn flat_metric_has_no_curvature() {
    let chart = Chart::cube(&["x", "y", "z"], -1.0, 1.0).unwrap();
    let g = MetricField::euclidean(chart);
    let p = [0.1, 0.2, -0.3];
    let gamma = christoffel(&g, &p).unwrap();
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(gamma.get(k, i, j), 0.0);
            }
        }
    }
    assert_eq!(ricci(&g, &p).unwrap().abs().max(), 0.0);
    assert_eq!(scalar_curvature(&g, &p).unwrap(), 0.0);
    assert_eq!(max_abs(&bianchi_residual(&g, &p).unwrap()), 0.0);
    let u = ScalarField::parse("2*x - y + 3", g.coords()).unwrap();
    assert_eq!(hessian(&u, &g, &p).unwrap().abs().max(), 0.0);
    assert_eq!(max_abs(&divergence(&Tensor2Field::Metric, &g, &p).unwrap()), 0.0);
    let lam = ScalarField::parse("x", g.coords()).unwrap();
    let div = divergence(&Tensor2Field::Scaled(lam, Box::new(Tensor2Field::Metric)), &g, &p).unwrap();
    assert_eq!(div, vec![1.0, 0.0, 0.0]);
}

#[test]
fn sphere_ricci_is_einstein() {
    for n in [2, 3] {
        let g = unit_sphere(n).unwrap();
        let grid = Grid::new(g.chart().lower(), g.chart().upper(), &vec![5; n]).unwrap();
        for p in grid.points() {
            let geom = PointGeometry::at(&g, &p, 2).unwrap();
            let diff = geom.ricci() - geom.g() * (n as f64 - 1.0);
            assert!(diff.abs().max() < 1e-8, "n={n} at {p:?}");
            assert!((geom.scalar_curvature() - (n * (n - 1)) as f64).abs() < 1e-8);
        }
    }
}

#[test]
fn sphere_ricci_fd_backend() {
    let g = unit_sphere(2).unwrap().with_backend(Backend::fd(1e-3));
    let geom = PointGeometry::at(&g, &[0.9, 0.4], 2).unwrap();
    assert!((geom.ricci() - geom.g()).abs().max() < 1e-4);
    assert!((geom.scalar_curvature() - 2.0).abs() < 1e-4);
}

#[test]
fn poincare_disk_has_curvature_minus_one() {
    let g = poincare_ball(2, 0.5).unwrap();
    for p in Grid::cube(2, -0.5, 0.5, 7).unwrap().points() {
        let geom = PointGeometry::at(&g, &p, 2).unwrap();
        assert!((geom.ricci() + geom.g()).abs().max() < 1e-8);
    }
    let fd = g.with_backend(Backend::fd(1e-3));
    let geom = PointGeometry::at(&fd, &[0.2, -0.1], 2).unwrap();
    assert!((geom.ricci() + geom.g()).abs().max() < 1e-4);
}

#[test]
fn conformal_christoffel_closed_form() {
    let alpha = [0.6, 0.0, 0.8];
    let chart = Chart::cube(&["x1", "x2", "x3"], -1.0, 1.0).unwrap();
    let e = warpsol::parse("exp(2*(0.6*x1 + 0.8*x3))").unwrap();
    let g = MetricField::diagonal(chart, vec![e; 3]).unwrap();
    let gamma = christoffel(&g, &[0.3, -0.2, 0.5]).unwrap();
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let oracle = d(k, i) * alpha[j] + d(k, j) * alpha[i] - d(i, j) * alpha[k];
                assert!((gamma.get(k, i, j) - oracle).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn sphere_height_function_hessian() {
    let g = unit_sphere(2).unwrap();
    let h = ScalarField::parse("cos(th)", g.coords()).unwrap();
    let tilted = ScalarField::parse("sin(th)*cos(ph)", g.coords()).unwrap();
    for p in [[0.7_f64, 0.1], [1.5, -2.0], [2.6, 3.0]] {
        for (u, v) in [(&h, p[0].cos()), (&tilted, p[0].sin() * p[1].cos())] {
            let hess = hessian(u, &g, &p).unwrap();
            let gm = g.value(&p).unwrap();
            assert!((hess + gm * v).abs().max() < 1e-8);
        }
    }
}

#[test]
fn conformal_hessian_matches_direct_formula() {
    let c = names(&["x1", "x2", "x3"]);
    let chart = Chart::cube(&c, -1.0, 1.0).unwrap();
    let big_f = ScalarField::parse("1 + 0.2*x1^2 + 0.1*sin(x2*x3)", &c).unwrap();
    let e = warpsol::parse("1/(1 + 0.2*x1^2 + 0.1*sin(x2*x3))^2").unwrap();
    let g = MetricField::diagonal(chart.clone(), vec![e; 3]).unwrap();
    let u = ScalarField::parse("exp(0.3*x1 - x2) + x3^3", &c).unwrap();
    let p = [0.4, -0.3, 0.7];
    let fj = big_f.jet(&p, 1, &Backend::Symbolic, &chart).unwrap();
    let uj = u.jet(&p, 2, &Backend::Symbolic, &chart).unwrap();
    let dot: f64 = (0..3).map(|i| fj.d1[i] * uj.d1[i]).sum();
    let oracle = DMatrix::from_fn(3, 3, |i, j| {
        uj.d2(i, j) + (fj.d1[j] * uj.d1[i] + fj.d1[i] * uj.d1[j]) / fj.value
            - if i == j { dot / fj.value } else { 0.0 }
    });
    assert!((hessian(&u, &g, &p).unwrap() - oracle).abs().max() < 1e-9);
    let lap = laplacian(&u, &g, &p).unwrap();
    // Δu = F² Σ∂²u − (n−2) F ⟨∂F, ∂u⟩
    let flat_lap: f64 = (0..3).map(|i| uj.d2(i, i)).sum();
    let expected = fj.value.powi(2) * flat_lap - fj.value * dot;
    assert!((lap - expected).abs() < 1e-9);
}

#[test]
fn conformal_ricci_agrees_with_generic() {
    let c = names(&["x1", "x2", "x3"]);
    let chart = Chart::cube(&c, -1.0, 1.0).unwrap();
    let cases = [("exp(-x1)", "exp(2*x1)"), ("1 + (x1^2 + x2^2 + x3^2)/4", "1/(1 + (x1^2 + x2^2 + x3^2)/4)^2")];
    for (f, conf) in cases {
        let big_f = ScalarField::parse(f, &c).unwrap();
        let g = MetricField::diagonal(chart.clone(), vec![warpsol::parse(conf).unwrap(); 3]).unwrap();
        for p in [[0.1, 0.2, 0.3], [-0.7, 0.4, 0.9]] {
            let a = conformal_ricci(&big_f, &chart, &Backend::Symbolic, &p).unwrap();
            let b = ricci(&g, &p).unwrap();
            assert!((&a - &b).abs().max() < 1e-8);
            if f.starts_with('1') {
                let gm = g.value(&p).unwrap();
                assert!((a - gm * 2.0).abs().max() < 1e-6);
            }
        }
    }
    let one = ScalarField::constant(1.0, &c);
    assert_eq!(conformal_ricci(&one, &chart, &Backend::Symbolic, &[0.0; 3]).unwrap().abs().max(), 0.0);
}

fn bianchi_metrics() -> Vec<MetricField> {
    let c3 = ["x1", "x2", "x3"];
    let conf = warpsol::parse("exp(2*sin(x1 + x2))").unwrap();
    let a = MetricField::diagonal(Chart::cube(&c3, -1.0, 1.0).unwrap(), vec![conf; 3]).unwrap();
    let b = MetricField::parse(
        Chart::cube(&["x", "y"], -1.0, 1.0).unwrap(),
        &[vec!["1 + x^2", "x*y"], vec!["x*y", "1 + y^2"]],
    )
    .unwrap();
    let c = MetricField::parse(
        Chart::cube(&c3, -1.0, 1.0).unwrap(),
        &[
            vec!["2 + sin(x1)", "0.3*x3", "0"],
            vec!["0.3*x3", "exp(x2)", "0.1*x1*x2"],
            vec!["0", "0.1*x1*x2", "1 + x3^2"],
        ],
    )
    .unwrap();
    vec![a, b, c]
}

#[test]
fn bianchi_identity_symbolic() {
    for g in bianchi_metrics() {
        let n = g.dim();
        for p in Grid::cube(n, -0.8, 0.8, 3).unwrap().points() {
            assert!(max_abs(&bianchi_residual(&g, &p).unwrap()) < 1e-6);
        }
    }
    let s = unit_sphere(2).unwrap();
    assert!(max_abs(&bianchi_residual(&s, &[1.0, 0.5]).unwrap()) < 1e-7);
}

#[test]
fn bianchi_fd_converges_second_order() {
    let g = bianchi_metrics().remove(0);
    let p = [0.3, -0.2, 0.4];
    let res = |h: f64| max_abs(&bianchi_residual(&g.clone().with_backend(Backend::fd(h)), &p).unwrap());
    let ratio = res(1e-2) / res(5e-3);
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn ricci_symmetry_and_metric_compatibility() {
    for g in bianchi_metrics() {
        let p = vec![0.25; g.dim()];
        let r = ricci(&g, &p).unwrap();
        assert!((&r - r.transpose()).abs().max() <= 1e-12);
        assert!(metric_compatibility(&g, &p).unwrap() <= 1e-10);
    }
}

#[test]
fn hessian_divergence_on_sphere() {
    let g = unit_sphere(2).unwrap();
    let phi = ScalarField::parse("sinh(th)", g.coords()).unwrap();
    for p in [[0.5, 0.0], [1.2, 1.0], [2.5, -2.0]] {
        assert!(max_abs(&hessian_divergence_residual(&phi, &g, &p).unwrap()) < 1e-6);
    }
}

fn random_pair(rng: &mut ChaCha8Rng) -> (MetricField, ScalarField) {
    let mut r = || rng.random_range(-1.0..1.0);
    let (a, b, c, d, e) = (r(), r(), 0.3 * r(), 0.5 * r(), r());
    let chart = Chart::cube(&["x", "y"], -1.0, 1.0).unwrap();
    let off = format!("{c}*sin(x + {e})");
    let g = MetricField::parse(
        chart,
        &[vec![format!("exp({a}*x + {b}*y)"), off.clone()], vec![off, format!("1 + {d}*y^2 + 0.5*x^2")]],
    )
    .unwrap();
    let phi = ScalarField::parse(&format!("sin({a}*x + 1)*cosh({b}*y) + {d}*x*y^2"), g.coords()).unwrap();
    (g, phi)
}

#[test]
fn differential_identities_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let (g, phi) = random_pair(&mut rng);
        let p = [rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8)];
        assert!(max_abs(&hessian_divergence_residual(&phi, &g, &p).unwrap()) < 1e-6);
        assert!(max_abs(&gradient_norm_residual(&phi, &g, &p).unwrap()) < 1e-6);
        // div(φ T) = φ div T + T(∇φ, ·) with T = Ric
        let lhs = divergence(&Tensor2Field::Scaled(phi.clone(), Box::new(Tensor2Field::Ricci)), &g, &p).unwrap();
        let div_ric = divergence(&Tensor2Field::Ricci, &g, &p).unwrap();
        let grad = gradient(&phi, &g, &p).unwrap();
        let ric = ricci(&g, &p).unwrap();
        let v = phi.value(&p).unwrap();
        for j in 0..2 {
            let rhs = v * div_ric[j] + (0..2).map(|i| ric[(i, j)] * grad[i]).sum::<f64>();
            assert!((lhs[j] - rhs).abs() < 1e-9);
        }
        let hess = hessian(&phi, &g, &p).unwrap();
        assert!((&hess - hess.transpose()).abs().max() < 1e-12);
    }
}

#[test]
fn pointwise_metric_needs_fd() {
    let chart = Chart::cube(&["x", "y"], -1.0, 1.0).unwrap();
    let g = MetricField::pointwise(chart, 1e-3, |p| Ok(DMatrix::from_diagonal_element(2, 2, (2.0 * p[0]).exp())));
    let r = ricci(&g, &[0.1, 0.1]).unwrap();
    // e^{2x} δ in 2-d is flat
    assert!(r.abs().max() < 1e-4);
    assert!(ricci(&g.with_backend(Backend::Symbolic), &[0.1, 0.1]).is_err());
}
