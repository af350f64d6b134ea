use mixedreg_core::catalog::{invert_monotone, MonotoneScalar, ScalarExpr, Wrt};
use mixedreg_core::fem::solve_linear;
use mixedreg_core::geometry::{build_disk_mesh, build_mesh, DomainPreset};
use mixedreg_core::presets::spec_with;
use mixedreg_core::{delta_inverse, exponents, FEField, FemSpace, FieldRole, Model};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight-line reading of the exponent formulas, kept separate from the library.
fn exponents_reference(n: f64, p: f64, q: f64) -> (f64, f64) {
    let r;
    if p < n {
        let a = p * n / (n - p);
        let b = n * q / (n - 1.0);
        r = if a < b { a } else { b };
    } else {
        r = n * q / (n - 1.0);
    }
    let s;
    if 1.0 - 1.0 / p - 1.0 / n > 0.0 {
        let a = 1.0 / (1.0 - 1.0 / p - 1.0 / n);
        let b = n * q / ((n - 1.0) * (q - 1.0));
        s = if a < b { a } else { b };
    } else {
        s = n * q / ((n - 1.0) * (q - 1.0));
    }
    (r, s)
}

#[test]
fn exponent_tables_match_reference_and_are_conjugate() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..10_000 {
        let n = rng.gen_range(2..=6) as f64;
        let p = rng.gen_range((n / 2.0).max(2.0)..3.0 * n);
        let q = rng.gen_range((n - 1.0).max(2.0)..12.0);
        if p <= n / 2.0 || q <= n - 1.0 {
            continue;
        }
        let t = exponents(n, p, q).unwrap();
        let (r, s) = exponents_reference(n, p, q);
        assert_eq!((t.r, t.s), (r, s), "N={n} p={p} q={q}");
        assert!(t.conjugacy_slack > 0.0, "N={n} p={p} q={q}");
    }
}

#[test]
fn monotone_inverse_roundtrip_and_lipschitz_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (src, rho) in [("t + t^3", 1.0), ("2*t + sin(t)", 1.0), ("spow(t, 2.5) + 0.5*t", 0.5), ("3*t", 3.0)] {
        let z = MonotoneScalar::increasing(src, rho).unwrap();
        for _ in 0..1000 {
            let t = rng.gen_range(-10.0..10.0);
            let back = invert_monotone(&z, z.eval(t).unwrap()).unwrap();
            assert!((back - t).abs() <= 1e-10, "{src}: {t} -> {back}");
        }
        for _ in 0..1000 {
            let (a, b) = (rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
            let (ha, hb) = (invert_monotone(&z, a).unwrap(), invert_monotone(&z, b).unwrap());
            assert!((ha - hb).abs() <= (a - b).abs() / rho * (1.0 + 1e-12) + 1e-12, "{src}");
        }
    }
}

#[test]
fn delta_inverse_is_increasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let spec = spec_with(&[("p", "3.5"), ("q", "2.5"), ("lambda2", "0.7"), ("mu2", "2")]);
    for i in [1, 2] {
        for _ in 0..1000 {
            let a = rng.gen_range(-100.0..100.0);
            let b = a + rng.gen_range(1e-6..10.0);
            assert!(delta_inverse(i, &spec, a).unwrap() < delta_inverse(i, &spec, b).unwrap());
        }
    }
    assert!(delta_inverse(3, &spec, 0.0).is_err());
}

#[test]
fn derivatives_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let exprs = [
        "sin(x1)*y^3 + exp(0.3*y)",
        "spow(y, 3) + x2*y - cos(x1*y)",
        "y / (2 + cos(y)) + x1^2*x2",
        "abs(y) + y^2*exp(-x2)",
        "pow(1 + y^2, 1.5) * sin(x2)",
    ];
    for src in exprs {
        let e = ScalarExpr::parse(src).unwrap();
        for wrt in [Wrt::Value, Wrt::X1, Wrt::X2] {
            let d = e.derivative(wrt);
            for _ in 0..1000 {
                let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let y: f64 = rng.gen_range(-2.0..2.0);
                if y.abs() < 1e-2 {
                    continue;
                }
                let h = 1e-5;
                let shift = |s: f64| match wrt {
                    Wrt::Value => e.eval(x, y + s),
                    Wrt::X1 => e.eval([x[0] + s, x[1]], y),
                    Wrt::X2 => e.eval([x[0], x[1] + s], y),
                };
                let fd = (shift(h).unwrap() - shift(-h).unwrap()) / (2.0 * h);
                let exact = d.eval(x, y).unwrap();
                assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{src} {wrt:?} at {x:?},{y}: {fd} vs {exact}");
            }
        }
    }
}

#[test]
fn operator_symmetry_coercivity_and_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for (a0, strict) in [("1", true), ("0", false), ("x1^2", true)] {
        let spec = spec_with(&[("a0", a0), ("a11", "1 + 0.5*x2^2"), ("a12", "0.3*x1"), ("a22", "2 - x1^2")]);
        let m = Model::new(spec, 3).unwrap();
        let op = m.operator();
        assert!(op.is_symmetric(0.0));
        for _ in 0..100 {
            let x: Vec<f64> = (0..op.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let q = op.quad_form(&x);
            assert!(if strict { q > 0.0 } else { q >= -1e-12 }, "{a0}: {q}");
        }
    }
    let space = FemSpace::new(build_disk_mesh(3).unwrap());
    for _ in 0..20 {
        let v: Vec<f64> = (0..space.n()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let l2 = space.lp_norm(&FEField::domain(v.clone()), 2.0).unwrap();
        let q = space.mass().quad_form(&v);
        assert!((l2 * l2 - q).abs() <= 1e-12 * q);
    }
}

#[test]
fn linear_solve_recovers_manufactured_vector() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = Model::new(spec_with(&[]), 4).unwrap();
    let op = m.operator();
    let x: Vec<f64> = (0..op.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b = op.mul_vec(&x);
    let sol = solve_linear(op, &b).unwrap();
    let err = x.iter().zip(&sol).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = x.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    assert!(err <= 1e-8 * scale, "{err}");
}

#[test]
fn disk_perimeter_increases_toward_two_pi() {
    let p: Vec<f64> = (0..=6).map(|l| build_disk_mesh(l).unwrap().perimeter()).collect();
    for w in p.windows(2) {
        assert!(w[1] > w[0]);
    }
    assert!(p[6] < std::f64::consts::TAU);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(14))]

    #[test]
    fn mesh_invariants_hold(level in 0usize..=6, ellipse in any::<bool>()) {
        let preset = if ellipse { DomainPreset::Ellipse } else { DomainPreset::Disk };
        let m = build_mesh(preset, level).unwrap();
        prop_assert!(m.validate().is_ok());
        prop_assert_eq!(m.refinement_level(), level);
        prop_assert_eq!(m.boundary_count(), 8 << level);
        let nb = m.boundary_count();
        let edges = m.boundary_edges();
        for (k, w) in m.boundary_weights().iter().enumerate() {
            let expected = 0.5 * (edges[k].length + edges[(k + nb - 1) % nb].length);
            prop_assert!((w - expected).abs() <= 1e-15);
        }
        let total: f64 = m.boundary_weights().iter().sum();
        prop_assert!((total - m.perimeter()).abs() <= 1e-12);
    }

    #[test]
    fn prolongation_is_exact_for_affine_fields(level in 1usize..=5, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let fine = build_disk_mesh(level).unwrap();
        let coarse = build_disk_mesh(level - 1).unwrap();
        let f = |x: [f64; 2]| a * x[0] + b * x[1] + 1.0;
        let cu = FEField::interpolate(&coarse, FieldRole::Domain, f);
        let p = fine.prolongate(&cu.values).unwrap();
        let fu = FEField::interpolate(&fine, FieldRole::Domain, f);
        // new boundary vertices sit on the curve, not on the coarse chord
        for (i, (x, y)) in p.iter().zip(&fu.values).enumerate() {
            if fine.boundary_slot(i).is_none() {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
