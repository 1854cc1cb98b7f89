use std::f64::consts::PI;

use mnls_ist::soliton::{residue_residual, solve_coefficients, SolitonEnsemble};
use mnls_ist::spectral_plane::{classify_points, k_lambda, k_of, lambda_of, phase_theta};
use mnls_ist::spectrum::{CircleEigenpair, DiscreteSpectrum};
use mnls_ist::ProblemParams;
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn off_axis() -> impl Strategy<Value = C> {
    (0.2f64..4.0, 0.05f64..(PI / 2.0 - 0.05), 0usize..4)
        .prop_map(|(r, a, quad)| C::from_polar(r, a + quad as f64 * PI / 2.0))
}

proptest! {
    #[test]
    fn maps_respect_inversion_and_conjugation(z in off_axis(), alpha in 0.3f64..3.0) {
        let w = -z.inv();
        let tol = 1e-12 * (1.0 + z.norm() + w.norm()).powi(2);
        prop_assert!((k_of(w, alpha) - k_of(z, alpha)).norm() < tol);
        prop_assert!((lambda_of(w) + lambda_of(z)).norm() < tol);
        prop_assert!((k_of(z.conj(), alpha) - k_of(z, alpha).conj()).norm() < tol);
        prop_assert!((k_lambda(z, alpha) - k_of(z, alpha) * lambda_of(z)).norm() < tol);
    }

    #[test]
    fn theta_is_odd_under_inversion(z in off_axis(), xi in -10.0f64..10.0, alpha in 0.3f64..3.0) {
        let p = ProblemParams::unit(alpha).with_xi(xi);
        let a = phase_theta(z, &p).unwrap();
        let b = phase_theta(-z.inv(), &p).unwrap();
        prop_assert!((a + b).norm() < 1e-11 * (1.0 + a.norm()));
    }

    #[test]
    fn classification_follows_relabelling(
        zs in prop::collection::vec(off_axis(), 1..8),
        xi in 2.0f64..10.0,
        shift in 0usize..8,
    ) {
        let p = ProblemParams::unit(1.0).with_xi(xi);
        let a = classify_points(&zs, &p, Some(0.3)).unwrap();
        let n = zs.len();
        let mut rotated = zs.clone();
        rotated.rotate_left(shift % n);
        let b = classify_points(&rotated, &p, Some(0.3)).unwrap();
        let back = |v: &[usize]| {
            let mut out: Vec<usize> = v.iter().map(|&j| (j + shift) % n).collect();
            out.sort_unstable();
            out
        };
        prop_assert_eq!(back(&b.nabla), a.nabla.clone());
        prop_assert_eq!(back(&b.delta), a.delta.clone());
        prop_assert_eq!(back(&b.lambda_set), a.lambda_set.clone());
    }

    #[test]
    fn circle_soliton_meets_its_residue_conditions(
        phi in 0.6f64..(PI - 0.6),
        scale in 0.2f64..5.0,
        x in -6.0f64..6.0,
        t in 0.0f64..2.0,
    ) {
        let zeta = C::from_polar(1.0, phi);
        let sp = DiscreteSpectrum {
            quartets: vec![],
            circle: vec![CircleEigenpair { zeta, c: -zeta * scale }],
            alpha: 1.0,
            q_minus: C::new(1.0, 0.0),
        };
        let ens = SolitonEnsemble::reflectionless(&sp).unwrap();
        let sol = solve_coefficients(x, t, 0.0, &ens).unwrap();
        prop_assert!(sol.residual < 1e-10);
        prop_assert!(residue_residual(&sol, &ens, 1e-3).unwrap() < 1e-8);
        prop_assert!(sol.q_sol(&ens).norm().is_finite());
    }
}
