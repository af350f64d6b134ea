use mixedreg_core::geometry::build_disk_mesh;
use mixedreg_core::kkt::KktOptions;
use mixedreg_core::presets::spec_with;
use mixedreg_core::regularity::{
    holder_estimates, lipschitz_estimate, max_second_difference, refinement_study, RegularityReport, RegularityRow,
};
use mixedreg_core::{FEField, FieldRole};
use proptest::prelude::*;

const SMOOTH: &[(&str, &str)] = &[
    ("f", "y"),
    ("L", "0.5*(y - 3*x1)^2"),
    ("ell", "0.5*(y - 2*x2)^2"),
    ("g1", "0.5*y - 0.4"),
    ("g2", "0.5*y - 0.2"),
];

#[test]
fn constant_and_linear_fields() {
    let m = build_disk_mesh(3).unwrap();
    for role in [FieldRole::Domain, FieldRole::Boundary] {
        let c = FEField::constant(&m, role, 4.0);
        assert!(lipschitz_estimate(&m, &c).unwrap() < 1e-12);
        assert_eq!(holder_estimates(&m, &c).unwrap(), [0.0; 3]);
    }
    let x1 = FEField::interpolate(&m, FieldRole::Domain, |x| x[0]);
    assert!((lipschitz_estimate(&m, &x1).unwrap() - 1.0).abs() < 1e-12);
    // chordal quotients of x₁ on the circle are |sin((θ+θ')/2)| ≤ 1
    let b = FEField::interpolate(&m, FieldRole::Boundary, |x| x[0]);
    let lb = lipschitz_estimate(&m, &b).unwrap();
    assert!(lb <= 1.0 + 1e-12 && lb > 0.95, "{lb}");
}

#[test]
fn kink_converges_to_one() {
    let est: Vec<f64> = (2..=5)
        .map(|l| {
            let m = build_disk_mesh(l).unwrap();
            lipschitz_estimate(&m, &FEField::interpolate(&m, FieldRole::Domain, |x| x[0].abs())).unwrap()
        })
        .collect();
    assert!((est[3] - 1.0).abs() < 0.05, "{est:?}");
}

#[test]
fn second_difference_separates_smooth_from_kink() {
    let d = |l: usize, f: fn([f64; 2]) -> f64| {
        let m = build_disk_mesh(l).unwrap();
        max_second_difference(&m, &FEField::interpolate(&m, FieldRole::Domain, f)).unwrap()
    };
    let smooth = |x: [f64; 2]| x[0] * x[0] + x[1];
    let kink = |x: [f64; 2]| (x[0] - 0.1).abs();
    let (s4, s5) = (d(4, smooth), d(5, smooth));
    let (k4, k5) = (d(4, kink), d(5, kink));
    assert!(s5 < 1.5 * s4, "{s4} {s5}");
    assert!(k5 > 1.6 * k4, "{k4} {k5}");
    let m = build_disk_mesh(4).unwrap();
    let b = FEField::interpolate(&m, FieldRole::Boundary, |x| x[0]);
    // |d²/ds² cos s| ≤ 1 on the unit circle
    assert!(max_second_difference(&m, &b).unwrap() <= 1.0 + 1e-2);
}

#[test]
fn stabilization_flags() {
    let row = |level: usize, h: f64, lip: f64| RegularityRow {
        level,
        h,
        lip,
        holder05: 0.0,
        holder09: 0.0,
        holder10: 0.0,
        second_difference: 0.0,
        ladder: vec![],
    };
    let r = RegularityReport::new("a", vec![row(3, 0.2, 1.0), row(4, 0.1, 1.05)]);
    assert!(r.stabilized && !r.diverging);
    let r = RegularityReport::new("b", vec![row(3, 0.2, 1.0), row(4, 0.1, 2.0)]);
    assert!(!r.stabilized && r.diverging);
    let r = RegularityReport::new("c", vec![row(3, 0.2, 0.0), row(4, 0.1, 0.0)]);
    assert!(r.stabilized && !r.diverging);
    let r = RegularityReport::new("d", vec![row(3, 0.2, 1.0)]);
    assert!(!r.stabilized && r.growth.is_none());
    assert_eq!(r.csv_rows()[0].split(',').count(), RegularityReport::CSV_HEADER.split(',').count());
}

#[test]
fn constant_instance_has_zero_lipschitz_estimates() {
    // u ≤ 0.3 and v ≤ 0 both bind; then y = u = 0.3, φ = -1.7 and the
    // multipliers are constant as well.
    let spec = spec_with(&[("L", "0.5*(y - 2)^2"), ("ell", "0"), ("g1", "0*y - 0.3"), ("g2", "0*y")]);
    let st = refinement_study(&spec, 2..=4, &KktOptions::default()).unwrap();
    assert!(st.failure.is_none());
    for r in &st.reports {
        for row in &r.rows {
            assert!(row.lip < 1e-8, "{} {}", r.field, row.lip);
        }
    }
}

#[test]
fn smooth_active_instance_stabilizes() {
    let st = refinement_study(&spec_with(SMOOTH), 3..=5, &KktOptions::default()).unwrap();
    assert!(st.failure.is_none(), "{:?}", st.failure);
    assert!(st.solves.iter().all(|s| s.converged && s.active_domain > 0 && s.active_boundary > 0));
    for r in &st.reports {
        assert!(r.stabilized, "{} {:?}", r.field, r.growth);
        for w in r.rows.windows(2) {
            assert!(w[1].h < w[0].h);
        }
    }
    // The control has a kink at the free boundary.
    let u = st.report("u").unwrap();
    let d: Vec<f64> = u.rows.iter().map(|r| r.second_difference).collect();
    assert!(d[2] > 1.6 * d[1] && d[1] > 1.6 * d[0], "{d:?}");
    let csv = st.csv();
    assert!(csv.starts_with("field,level,h,lip,holder05,holder09\n"));
    assert_eq!(csv.lines().count(), 1 + 6 * 3);
}

#[test]
fn discontinuous_bound_trips_divergence() {
    let spec = spec_with(&[("L", "0.5*(y - 2)^2"), ("g1", "0.5*y + 0.3*sign(x1)"), ("g2", "0.5*y")]);
    let st = refinement_study(&spec, 3..=5, &KktOptions::default()).unwrap();
    assert!(st.failure.is_none());
    assert!(st.report("u").unwrap().diverging);
    assert!(st.any_diverging());
}

#[test]
fn non_convergence_is_reported() {
    let opts = KktOptions { max_iter: 1, ..Default::default() };
    let st = refinement_study(&spec_with(SMOOTH), 2..=3, &opts).unwrap();
    assert!(st.failure.as_deref().unwrap().starts_with("level 2"));
    assert!(st.reports.iter().all(|r| r.rows.is_empty()));
    #[allow(clippy::reversed_empty_ranges)]
    let empty = 3..=2;
    assert!(refinement_study(&spec_with(SMOOTH), empty, &opts).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn affine_fields_have_exact_gradient(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0) {
        let m = build_disk_mesh(2).unwrap();
        let f = FEField::interpolate(&m, FieldRole::Domain, |x| a * x[0] + b * x[1] + c);
        let l = lipschitz_estimate(&m, &f).unwrap();
        prop_assert!((l - a.hypot(b)).abs() <= 1e-10 * (1.0 + a.hypot(b)));
    }

    #[test]
    fn estimates_scale_and_order(s in -3.0f64..3.0, k in 1.0f64..4.0) {
        let m = build_disk_mesh(3).unwrap();
        for role in [FieldRole::Domain, FieldRole::Boundary] {
            let f = FEField::interpolate(&m, role, |x| (k * x[0]).sin() + x[1] * x[1]);
            let l = lipschitz_estimate(&m, &f).unwrap();
            let ls = lipschitz_estimate(&m, &f.map(|v| s * v)).unwrap();
            prop_assert!((ls - s.abs() * l).abs() <= 1e-12 * (1.0 + l));
            let h = holder_estimates(&m, &f).unwrap();
            prop_assert!(h.iter().all(|&x| x >= 0.0));
            // convex domain: pair quotients never exceed the largest gradient
            prop_assert!(h[2] <= l * (1.0 + 1e-12));
        }
    }
}
