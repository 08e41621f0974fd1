use proptest::prelude::*;
use reweight_core::estimators::{llr_estimate, llr_intercept, nw_estimate, LocalSample};

fn sample_strategy() -> impl Strategy<Value = LocalSample> {
    (2usize..15).prop_flat_map(|n| {
        (
            prop::collection::vec(-3.0f64..3.0, n),
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(0.01f64..1.0, n),
            -1.0f64..1.0,
        )
            .prop_map(|(z, y, w, c)| LocalSample::new(vec![c], z.into_iter().map(|v| vec![v]).collect(), y, w).unwrap())
    })
}

proptest! {
    #[test]
    fn nw_first_order_condition(s in sample_strategy()) {
        let b = nw_estimate(&s).unwrap();
        let foc: f64 = s.weights.iter().zip(&s.responses).map(|(w, y)| w * (b - y)).sum();
        let scale: f64 = s.weights.iter().zip(&s.responses).map(|(w, y)| w * y.abs()).sum::<f64>() + 1.0;
        prop_assert!(foc.abs() <= 1e-10 * scale);
    }

    #[test]
    fn nw_is_a_convex_combination(s in sample_strategy()) {
        let b = nw_estimate(&s).unwrap();
        let lo = s.responses.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.responses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(b >= lo - 1e-12 && b <= hi + 1e-12);
    }

    #[test]
    fn weight_scaling_invariance(s in sample_strategy(), c in 0.01f64..100.0) {
        let mut t = s.clone();
        t.weights.iter_mut().for_each(|w| *w *= c);
        let (a, b) = (nw_estimate(&s).unwrap(), nw_estimate(&t).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        let (a, b) = (llr_intercept(&s).unwrap(), llr_intercept(&t).unwrap());
        prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()));
    }

    #[test]
    fn llr_with_zero_slope_is_nw(s in sample_strategy()) {
        // Intercept-only weighted least squares, refit independently: the
        // normal equation is Σwᵢ(β − yᵢ) = 0.
        let sw: f64 = s.weights.iter().sum();
        let swy: f64 = s.weights.iter().zip(&s.responses).map(|(w, y)| w * y).sum();
        prop_assert!((swy / sw - nw_estimate(&s).unwrap()).abs() <= 1e-12 * (1.0 + (swy / sw).abs()));
    }

    #[test]
    fn llr_reproduces_affine_data(
        z in prop::collection::vec(-3.0f64..3.0, 3..12),
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        c in -1.0f64..1.0,
    ) {
        prop_assume!(z.iter().any(|v| (v - z[0]).abs() > 0.1));
        let y: Vec<f64> = z.iter().map(|v| a + b * v).collect();
        let w: Vec<f64> = z.iter().map(|v| (-(v - c) * (v - c)).exp()).collect();
        let s = LocalSample::new(vec![c], z.iter().map(|v| vec![*v]).collect(), y, w).unwrap();
        let fit = llr_estimate(&s).unwrap();
        prop_assert!((fit.prediction - (a + b * c)).abs() <= 1e-8 * (1.0 + a.abs() + b.abs()));
        prop_assert!((fit.slope[0] - b).abs() <= 1e-7 * (1.0 + b.abs()));
    }
}
