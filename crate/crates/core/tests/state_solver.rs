use mixedreg_core::fem::{FEField, FieldRole};
use mixedreg_core::presets::spec_with;
use mixedreg_core::Model;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exact(x: [f64; 2]) -> f64 {
    1.0 + x[0] * x[1]
}

/// Errors of the manufactured cubic problem: (h, L², max, newton iterations).
fn manufactured(level: usize) -> (f64, f64, f64, usize) {
    let m = Model::new(spec_with(&[("f", "y^3")]), level).unwrap();
    // -Δ(x1 x2) = 0, so u = y* + y*^3; ∂_ν y* = 2 x1 x2 on the unit circle.
    let u = FEField::interpolate(m.mesh(), FieldRole::Domain, |x| {
        let y = exact(x);
        y + y * y * y
    });
    let v = FEField::interpolate(m.mesh(), FieldRole::Boundary, |x| 2.0 * x[0] * x[1]);
    let rep = m.solve_state(&u, &v, None).unwrap();
    let space = m.space();
    let yq = space.at_quadrature(&rep.state.values);
    let err: Vec<f64> = space
        .quadrature_points()
        .iter()
        .zip(&yq)
        .map(|(&x, y)| (y - exact(x)).powi(2))
        .collect();
    let l2 = space.integrate(&err).sqrt();
    let max = m
        .mesh()
        .vertices()
        .iter()
        .zip(&rep.state.values)
        .map(|(&x, y)| (y - exact(x)).abs())
        .fold(0.0, f64::max);
    (m.mesh().mesh_size(), l2, max, rep.newton_iterations)
}

#[test]
fn manufactured_cubic_converges_at_second_order() {
    let rows: Vec<_> = (3..=6).map(manufactured).collect();
    for r in &rows {
        eprintln!("h={:.4e} l2={:.4e} max={:.4e} newton={}", r.0, r.1, r.2, r.3);
        assert!(r.3 <= 8);
    }
    let (a, b) = (rows[0], rows[3]);
    let order_l2 = (a.1 / b.1).ln() / (a.0 / b.0).ln();
    let order_max = (a.2 / b.2).ln() / (a.0 / b.0).ln();
    eprintln!("orders {order_l2} {order_max}");
    assert!(order_l2 >= 1.9, "L2 order {order_l2}");
    assert!(order_max >= 1.9, "max order {order_max}");
}

#[test]
fn linearization_error_is_second_order_in_step() {
    let m = Model::new(spec_with(&[("f", "y^3 + y")]), 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let u = FEField::interpolate(m.mesh(), FieldRole::Domain, |x| 1.0 + x[0]);
    let v = FEField::interpolate(m.mesh(), FieldRole::Boundary, |x| x[1]);
    let ut = FEField::domain((0..u.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let vt = FEField::boundary((0..v.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let y = m.solve_state(&u, &v, None).unwrap().state;
    let w = m.solve_linearized(&y, &ut, &vt).unwrap();
    let mut ratios = Vec::new();
    for t in [1e-2, 1e-3, 1e-4] {
        let up = FEField::domain(u.values.iter().zip(&ut.values).map(|(a, b)| a + t * b).collect());
        let vp = FEField::boundary(v.values.iter().zip(&vt.values).map(|(a, b)| a + t * b).collect());
        let yp = m.solve_state(&up, &vp, Some(&y.values)).unwrap().state;
        let rem = yp
            .values
            .iter()
            .zip(&y.values)
            .zip(&w.values)
            .map(|((a, b), c)| (a - b - t * c).abs())
            .fold(0.0, f64::max);
        ratios.push(rem / t);
    }
    // remainder / t = O(t): drops by roughly 10 per decade.
    assert!(ratios[1] < ratios[0] / 5.0 && ratios[2] < ratios[1] / 5.0, "{ratios:?}");
}

#[test]
fn adjoint_duality_holds_on_every_level() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for level in 1..=4 {
        let m = Model::new(spec_with(&[("f", "y^3"), ("a11", "1 + 0.5*x1^2"), ("a12", "0.2*x1*x2")]), level).unwrap();
        let space = m.space();
        let y = FEField::interpolate(m.mesh(), FieldRole::Domain, |x| x[0] - 0.5 * x[1]);
        let nd = m.mesh().vertex_count();
        let nb = m.mesh().boundary_count();
        let mut field = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let (rd, rb, ut, vt) = (field(nd), field(nb), field(nd), field(nb));
        let phi = m
            .solve_adjoint(&y, &FEField::domain(rd.clone()), &FEField::boundary(rb.clone()))
            .unwrap();
        let w = m.solve_linearized(&y, &FEField::domain(ut.clone()), &FEField::boundary(vt.clone())).unwrap();
        let wb = space.restrict_boundary(&w.values);
        let pb = space.restrict_boundary(&phi.values);
        let lhs = space.mass().bilinear(&rd, &w.values) + space.boundary_mass().bilinear(&rb, &wb);
        let rhs = space.mass().bilinear(&ut, &phi.values) + space.boundary_mass().bilinear(&vt, &pb);
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "level {level}: {lhs} vs {rhs}");
    }
}

#[test]
fn a_priori_ratio_stays_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for level in 2..=5 {
        let m = Model::new(spec_with(&[("f", "y^3"), ("p", "3"), ("q", "3")]), level).unwrap();
        for _ in 0..5 {
            let (a, b, c) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let u = FEField::interpolate(m.mesh(), FieldRole::Domain, |x| a + b * x[0] * x[1]);
            let v = FEField::interpolate(m.mesh(), FieldRole::Boundary, |x| c * x[0]);
            let r = m.solve_state(&u, &v, None).unwrap().c_infinity_ratio;
            assert!(r.is_finite() && r >= 0.0);
            worst = worst.max(r);
        }
    }
    assert!(worst < 10.0, "{worst}");
}

#[test]
fn state_responds_continuously_to_small_perturbations() {
    let m = Model::new(spec_with(&[("f", "y^3")]), 4).unwrap();
    let u = FEField::interpolate(m.mesh(), FieldRole::Domain, |x| 2.0 * x[0]);
    let v = FEField::constant(m.mesh(), FieldRole::Boundary, 0.5);
    let y = m.solve_state(&u, &v, None).unwrap().state;
    let up = u.map(|t| t + 1e-3);
    let yp = m.solve_state(&up, &v, None).unwrap().state;
    let diff = y.values.iter().zip(&yp.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff > 0.0 && diff < 2e-3, "{diff}");
}
