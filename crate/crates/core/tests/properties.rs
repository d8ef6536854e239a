//! Property tests for the geometric invariants, over randomly parametrised
//! metrics of every family.

use finsler_core::distance::{arc_length, default_tol, Polyline};
use finsler_core::geodesics::{rescaling_defect, PATH_TOL};
use finsler_core::maps::isometry_defect;
use finsler_core::numcore::sampling::{seeded_rng, unit_direction};
use finsler_core::{
    distance, exponential, integrate_geodesic, invert_exp, spray_coefficients, FinslerMetric, MapSpec,
    MetricFamily,
};
use nalgebra::DVector;
use proptest::prelude::*;

fn family() -> impl Strategy<Value = MetricFamily> {
    prop_oneof![
        (2usize..=3).prop_map(|dim| MetricFamily::Euclidean { dim }),
        (0.2f64..2.0).prop_map(|kappa| MetricFamily::MinkowskiNorm { dim: 2, kappa }),
        (0.5f64..2.0, -0.4f64..0.4, -0.1f64..0.1).prop_map(|(a, c, s)| MetricFamily::Riemannian {
            coefficients: vec![vec![a, 0.3], vec![0.3, 1.0]],
            conformal_linear: Some(vec![c, -c / 2.0]),
            conformal_quadratic: s,
        }),
        (-0.5f64..0.5, -0.5f64..0.5, -0.1f64..0.1).prop_map(|(b1, b2, g)| MetricFamily::Randers {
            drift: vec![b1 * 0.7, b2 * 0.7],
            coefficients: None,
            drift_gradient: Some(vec![vec![0.0, g], vec![-g, 0.0]]),
        }),
        (2usize..=3, 0.5f64..2.0).prop_map(|(dim, scale)| MetricFamily::HyperbolicHalfPlane { dim, scale }),
        (0.5f64..2.0).prop_map(|radius| MetricFamily::RoundSpherePatch {
            dim: 2,
            radius,
            chart_radius: 20.0,
        }),
    ]
}

/// A metric, a base point and a direction, all seeded.
fn setup() -> impl Strategy<Value = (FinslerMetric, DVector<f64>, DVector<f64>)> {
    (family(), any::<u64>()).prop_map(|(fam, seed)| {
        let m = FinslerMetric::new(fam).unwrap();
        let mut rng = seeded_rng(seed);
        let p = m.sampling_region().sample(&mut rng);
        let u = unit_direction(&mut rng, m.dim());
        (m, p, u)
    })
}

fn unit_speed(m: &FinslerMetric, p: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
    u / m.evaluate_f(p, u).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn f_is_positively_homogeneous((m, p, u) in setup(), lambda in 0.01f64..100.0) {
        let f = m.evaluate_f(&p, &u).unwrap();
        prop_assert!(f > 0.0);
        let fl = m.evaluate_f(&p, &(&u * lambda)).unwrap();
        prop_assert!((fl - lambda * f).abs() <= 1e-12 * lambda * f);
    }

    #[test]
    fn fundamental_tensor_is_positive_definite((m, p, u) in setup()) {
        let g = m.fundamental_tensor(&p, &u).unwrap();
        prop_assert!(g.clone().cholesky().is_some(), "g = {g}");
        prop_assert!((&g - g.transpose()).amax() <= 1e-10 * g.amax());
    }

    #[test]
    fn spray_is_two_homogeneous((m, p, u) in setup(), lambda in 0.1f64..10.0) {
        let g = spray_coefficients(&m, &p, &u).unwrap();
        let gl = spray_coefficients(&m, &p, &(&u * lambda)).unwrap();
        prop_assert!((gl - g * (lambda * lambda)).amax() <= 1e-9 * lambda * lambda * (1.0 + m.evaluate_f(&p, &u).unwrap()));
    }

    #[test]
    fn exp_of_zero_is_identity((m, p, _u) in setup()) {
        let q = exponential(&m, &p, &DVector::zeros(m.dim())).unwrap();
        prop_assert_eq!(q.coords(), &p);
    }

    #[test]
    fn geodesics_conserve_speed((m, p, u) in setup()) {
        let v = unit_speed(&m, &p, &u) * 0.5;
        let path = integrate_geodesic(&m, &p, &v, (-1.0, 1.0), PATH_TOL).unwrap();
        prop_assert!(path.speed_drift(&m, 3).unwrap() < 1e-6);
    }

    #[test]
    fn rescaling_identity((m, p, u) in setup(), t in 0.25f64..4.0, s in 0.05f64..1.0) {
        let v = unit_speed(&m, &p, &u) * 0.5;
        prop_assert!(rescaling_defect(&m, &p, &v, t, s / t).unwrap() < 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn distance_along_short_geodesics((m, p, u) in setup(), t in 0.05f64..0.4) {
        let v = unit_speed(&m, &p, &u);
        let q = exponential(&m, &p, &(&v * t)).unwrap();
        let d = distance(&m, &p, q.coords()).unwrap();
        prop_assert!((d - t).abs() < 1e-6, "rho = {d}, t = {t}");
    }

    #[test]
    fn shooting_inverts_exp((m, p, u) in setup(), t in 0.05f64..0.4) {
        let v = unit_speed(&m, &p, &u) * t;
        let q = exponential(&m, &p, &v).unwrap().into_inner();
        let shot = invert_exp(&m, &p, &q, default_tol(&q)).unwrap();
        prop_assert!((shot.v - v).amax() < 1e-8);
    }

    #[test]
    fn triangle_inequality((m, p, u) in setup(), seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let w = unit_direction(&mut rng, m.dim());
        let a = exponential(&m, &p, &(unit_speed(&m, &p, &u) * 0.3)).unwrap().into_inner();
        let b = exponential(&m, &p, &(unit_speed(&m, &p, &w) * 0.3)).unwrap().into_inner();
        let (pa, ab, pb) = (distance(&m, &p, &a).unwrap(), distance(&m, &a, &b).unwrap(), distance(&m, &p, &b).unwrap());
        prop_assert!(pb <= pa + ab + 1e-9);
        prop_assert!(distance(&m, &p, &p).unwrap() == 0.0);
    }

    #[test]
    fn polylines_are_never_shorter((m, p, u) in setup(), seed in any::<u64>(), sigma in 0.0f64..0.3) {
        let mut rng = seeded_rng(seed);
        let q = exponential(&m, &p, &(unit_speed(&m, &p, &u) * 0.3)).unwrap().into_inner();
        let mid = (&p + &q) * 0.5 + unit_direction(&mut rng, m.dim()) * (sigma * (&q - &p).norm());
        prop_assume!(m.check_point(&mid).is_ok());
        let l = arc_length(&m, &Polyline::new(vec![p.clone(), mid, q.clone()]).unwrap()).unwrap();
        prop_assert!(l >= distance(&m, &p, &q).unwrap() - 1e-9);
    }

    #[test]
    fn reversible_metrics_have_symmetric_distance((m, p, u) in setup()) {
        prop_assume!(m.is_reversible());
        let q = exponential(&m, &p, &(unit_speed(&m, &p, &u) * 0.3)).unwrap().into_inner();
        let (f, b) = (distance(&m, &p, &q).unwrap(), distance(&m, &q, &p).unwrap());
        prop_assert!((f - b).abs() < 1e-9);
    }

    #[test]
    fn flat_randers_asymmetry(b1 in -0.6f64..0.6, b2 in -0.6f64..0.6, seed in any::<u64>()) {
        prop_assume!(b1.hypot(b2) < 0.8);
        let m = FinslerMetric::randers_flat(&[b1, b2]);
        let mut rng = seeded_rng(seed);
        let (p, q) = (m.sampling_region().sample(&mut rng), m.sampling_region().sample(&mut rng));
        let gap = distance(&m, &p, &q).unwrap() - distance(&m, &q, &p).unwrap();
        prop_assert!((gap - 2.0 * (b1 * (q[0] - p[0]) + b2 * (q[1] - p[1]))).abs() < 1e-7);
    }

    #[test]
    fn translations_of_flat_metrics_are_isometries(fam in family(), seed in any::<u64>()) {
        let m = FinslerMetric::new(fam).unwrap();
        prop_assume!(m.is_flat_model() && !matches!(m.family(), MetricFamily::HyperbolicHalfPlane { .. }));
        let offset = vec![0.1; m.dim()];
        let probe = MapSpec::Translation { offset }.probe(&m).unwrap();
        prop_assert!(isometry_defect(&probe, 3, seed).unwrap().value < 1e-12);
    }

    #[test]
    fn metric_descriptors_round_trip(fam in family()) {
        let text = serde_json::to_string(&fam).unwrap();
        prop_assert_eq!(serde_json::from_str::<MetricFamily>(&text).unwrap(), fam);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn distance_charts_round_trip((m, p, _u) in setup(), seed in any::<u64>()) {
        let chart = finsler_core::build_distance_chart(&m, &p, 0.5, seed).unwrap();
        prop_assert!(chart.upper_mass() <= 1e-6 * chart.jacobian.norm());
        prop_assert!(chart.jacobian.diagonal().iter().all(|d| *d > 0.0));
        let mut rng = seeded_rng(seed);
        let u = unit_direction(&mut rng, m.dim());
        let a = &p + &u * (0.3 * chart.certified_radius / m.evaluate_f(&p, &u).unwrap());
        let back = chart.invert(&chart.evaluate(&a).unwrap(), 1e-10).unwrap();
        prop_assert!((back.coords() - &a).amax() < 1e-7);
    }
}
