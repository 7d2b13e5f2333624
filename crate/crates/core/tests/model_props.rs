use std::collections::HashSet;

use gssm::pade::RationalMap;
use gssm::reduced::*;
use gssm::series::{MultiIndex, MultiSeries};
use gssm::singularity::*;
use gssm::systems::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn shaw_pierre_rhs_matches_the_equations_of_motion(
        x in prop::collection::vec(-3.0f64..3.0, 4),
        t in 0.0f64..20.0,
        k in 0.5f64..4.0,
        cd in 0.0f64..0.1,
        gamma in 0.0f64..1.0,
        eps in 0.0f64..0.2,
        om in 0.5f64..3.0,
    ) {
        let sys = shaw_pierre(k, cd, gamma, eps, om).unwrap();
        let f = sys.rhs(t, &x);
        let (q1, v1, q2, v2) = (x[0], x[1], x[2], x[3]);
        let a1 = -cd * (2.0 * v1 - v2) - k * (2.0 * q1 - q2) - gamma * q1.powi(3) + eps * (om * t).cos();
        let a2 = -cd * (2.0 * v2 - v1) - k * (2.0 * q2 - q1);
        let want = [v1, a1, v2, a2];
        for i in 0..4 {
            prop_assert!((f[i] - want[i]).abs() < 1e-12 * (1.0 + want[i].abs()));
        }
    }

    #[test]
    fn double_well_rhs_matches_the_equation_of_motion(
        x in prop::collection::vec(-3.0f64..3.0, 2),
        t in 0.0f64..20.0,
        delta in 0.0f64..1.0,
        gamma in 0.0f64..1.0,
        om in 0.5f64..3.0,
    ) {
        let sys = double_well(delta, gamma, om).unwrap();
        let f = sys.rhs(t, &x);
        let a = -delta * x[1] + x[0] - x[0].powi(3) + gamma * (om * t).cos();
        prop_assert!((f[0] - x[1]).abs() < 1e-14);
        prop_assert!((f[1] - a).abs() < 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn dauchot_manneville_rhs_matches_its_definition(
        x in prop::collection::vec(-2.0f64..2.0, 2),
        s1 in -1.0f64..-0.01,
        s2 in -3.0f64..-1.1,
    ) {
        let sys = dauchot_manneville(s1, s2).unwrap();
        let f = sys.rhs(0.0, &x);
        prop_assert!((f[0] - (s1 * x[0] + x[1] + x[0] * x[1])).abs() < 1e-13);
        prop_assert!((f[1] - (s2 * x[1] - x[0] * x[0])).abs() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The Borel sum solves `x² y' + y = x`.
    #[test]
    fn euler_exact_solves_its_ode(x in 0.05f64..5.0) {
        let h = 1e-4 * x;
        let dy = (euler_exact(x + h).unwrap() - euler_exact(x - h).unwrap()) / (2.0 * h);
        let y = euler_exact(x).unwrap();
        prop_assert!((x * x * dy + y - x).abs() < 1e-6 * x.max(1.0));
    }

    #[test]
    fn forward_then_backward_returns(x0 in -1.0f64..1.0, v0 in -1.0f64..1.0, t1 in 0.5f64..5.0) {
        // undamped Duffing x'' = −x − x³ in first-order form
        let mut r = MultiSeries::zeros(2, 2, 3);
        r.add_term(&MultiIndex::new(vec![0, 1]), &[re(1.0), re(0.0)]);
        r.add_term(&MultiIndex::new(vec![1, 0]), &[re(0.0), re(-1.0)]);
        r.add_term(&MultiIndex::new(vec![3, 0]), &[re(0.0), re(-1.0)]);
        let field = ReducedField::polynomial(r, Coordinates::Real);
        let opts = IntegrateOptions { rtol: 1e-11, atol: 1e-13, ..Default::default() };
        let fwd = integrate(&field, &[x0, v0], 0.0, t1, &opts).unwrap();
        prop_assert_eq!(&fwd.termination, &Termination::Completed);
        let end = fwd.trajectory.last().unwrap().to_vec();
        let back = integrate(&field, &end, t1, 0.0, &opts).unwrap();
        let start = back.trajectory.last().unwrap();
        prop_assert!((start[0] - x0).abs() < 1e-8 && (start[1] - v0).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frc_branches_are_symmetric_about_the_backbone(
        k0 in -0.05f64..-0.001,
        k1 in -0.01f64..0.0,
        w0 in 0.5f64..2.0,
        w1 in -0.1f64..0.1,
        ef in 0.001f64..0.1,
    ) {
        let kappa = RadialFn::Even(vec![k0, k1]);
        let omega = RadialFn::Even(vec![w0, w1]);
        let grid: Vec<f64> = (1..400).map(|i| i as f64 * 0.01).collect();
        let frc = forced_response(&kappa, &omega, ef, &grid, None).unwrap();
        for p in frc.points.iter().filter(|p| p.branch == 1) {
            let partner = frc.points.iter().find(|q| q.branch == -1 && q.rho == p.rho);
            prop_assert!(partner.is_some());
            let q = partner.unwrap();
            let w = omega.eval(p.rho).unwrap();
            prop_assert!((p.omega + q.omega - 2.0 * w).abs() < 1e-12);
            let radicand = (ef / p.rho).powi(2) - kappa.eval(p.rho).unwrap().powi(2);
            prop_assert!(((p.omega - w) - radicand.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_lift_scales_with_amplitude(
        v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3),
        rho in 0.01f64..2.0,
        s in 0.1f64..3.0,
        theta in 0.0f64..6.283,
    ) {
        let cols: Vec<Complex64> = v.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let mut w = MultiSeries::zeros(2, 3, 3);
        w.add_term(&MultiIndex::new(vec![1, 0]), &cols);
        w.add_term(&MultiIndex::new(vec![0, 1]), &cols.iter().map(|c| c.conj()).collect::<Vec<_>>());
        let param = Param::Series(w);
        let a = lift_polar(&param, rho, theta).unwrap();
        let b = lift_polar(&param, s * rho, theta).unwrap();
        for i in 0..3 {
            prop_assert!((b[i] - s * a[i]).abs() < 1e-12);
            let z = Complex64::from_polar(rho, theta);
            prop_assert!((a[i] - 2.0 * (cols[i] * z).re).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_scan_flags_grow_with_the_floor(
        b1 in -2.0f64..2.0,
        b2 in -2.0f64..2.0,
        f1 in 1e-4f64..0.1,
        f2 in 0.1f64..0.5,
    ) {
        let r = RationalMap::new(
            vec![MultiSeries::univariate_real(&[1.0])],
            vec![MultiSeries::univariate_real(&[1.0, b1, b2])],
        ).unwrap();
        let grid = EvaluationGrid::real_box(&[-2.0], &[2.0], 401).unwrap();
        let key = |f: &FlaggedPoint| (f.denominator, f.index);
        let small: HashSet<_> = denominator_zero_scan(&r, &grid, f1).unwrap().iter().map(key).collect();
        let large: HashSet<_> = denominator_zero_scan(&r, &grid, f2).unwrap().iter().map(key).collect();
        prop_assert!(small.is_subset(&large));
    }

    #[test]
    fn geometric_coefficients_give_their_radius(radius in 0.2f64..5.0, negative in prop::bool::ANY) {
        let q: f64 = if negative { -1.0 / radius } else { 1.0 / radius };
        let c: Vec<f64> = (0..30).map(|k| q.powi(k)).collect();
        let est = estimate_radius(&c).unwrap();
        prop_assert!((est.radius - radius).abs() < 1e-6 * radius);
    }
}
