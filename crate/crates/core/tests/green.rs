use std::f64::consts::PI;

use indefbvp::green::{apply_operator_fn, green};
use indefbvp::{apply_operator, GridFunction, Nonlinearity, ProblemSpec, Weight};
use proptest::prelude::*;

fn linear_spec(l: f64) -> ProblemSpec {
    ProblemSpec::new(Weight::constant(l, 1.0).unwrap(), Nonlinearity::new(|s| s))
}

/// Max error of `Φ sin(πx/L)` against `(L/π)² sin(πx/L)` on 41 points.
fn identity_error(l: f64, quad_n: usize) -> f64 {
    let spec = linear_spec(l);
    let xs: Vec<f64> = (0..=40).map(|j| l * j as f64 / 40.0).collect();
    let u = |x: f64| (PI * x / l).sin();
    let phi = apply_operator_fn(&spec, u, &xs, quad_n).unwrap();
    xs.iter()
        .zip(phi)
        .map(|(&x, p)| (p - (l / PI).powi(2) * u(x)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn simpson_order_on_eigenfunction_identity() {
    for l in [1.0, 2.5] {
        let errs: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&n| identity_error(l, n))
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(
                (14.0..18.5).contains(&ratio),
                "L = {l}: ratio {ratio} from {errs:?}"
            );
        }
    }
}

#[test]
fn grid_operator_uses_interpolated_samples() {
    let spec = linear_spec(1.0);
    let u = GridFunction::uniform(1.0, 400, |x| (PI * x).sin());
    let phi = apply_operator(&spec, &u, 256).unwrap();
    for (x, p) in u.xs.iter().zip(phi) {
        assert!((p - (PI * x).sin() / (PI * PI)).abs() < 1e-9);
    }
}

#[test]
fn piecewise_weight_is_integrated_across_breakpoints() {
    // a = 1 on [0, 1/2), −1 after; g(s) = 1 for s > 0. Then Φ1 solves −w'' = a with
    // w(0) = w(1) = 0, whose exact solution is piecewise quadratic.
    let w = Weight::new(1.0, |x| if x < 0.5 { 1.0 } else { -1.0 })
        .unwrap()
        .with_kinks(vec![0.5]);
    let spec = ProblemSpec::new(w, Nonlinearity::new(|s| if s > 0.0 { 1.0 } else { 0.0 }));
    let exact = |x: f64| {
        // w = −x²/2 + c1 x on [0, 1/2], w = x²/2 + c2 (x − 1) on [1/2, 1], C¹ at 1/2.
        let c1 = 0.25;
        if x <= 0.5 {
            -x * x / 2.0 + c1 * x
        } else {
            x * x / 2.0 - 0.75 * x + 0.25
        }
    };
    let xs: Vec<f64> = (0..=20).map(|j| j as f64 / 20.0).collect();
    let phi = apply_operator_fn(&spec, |_| 1.0, &xs, 64).unwrap();
    for (&x, p) in xs.iter().zip(phi) {
        assert!((p - exact(x)).abs() < 1e-13, "x = {x}: {p} vs {}", exact(x));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn kernel_identities(x in 0.0f64..=1.0, xi in 0.0f64..=1.0, l in 0.1f64..10.0) {
        let (x, xi) = (x * l, xi * l);
        let g = green(x, xi, l);
        prop_assert_eq!(g, green(xi, x, l));
        prop_assert!(g >= 0.0);
        prop_assert!(g <= l / 4.0 * (1.0 + 1e-15));
        prop_assert_eq!(green(0.0, xi, l), 0.0);
        prop_assert!(green(l, xi, l).abs() <= 1e-15 * l);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// `‖Φu‖∞ ≤ (L²/8) · max|a| · max|g̃(u)|`, since `∫₀ᴸ G(x, ξ) dξ = x(L − x)/2`.
    #[test]
    fn operator_bound(l in 0.2f64..6.0, amp in 0.1f64..5.0, k in 1.0f64..8.0, shift in -1.0f64..1.0) {
        let spec = ProblemSpec::new(
            Weight::new(l, move |x| amp * (k * PI * x / l).sin()).unwrap(),
            Nonlinearity::new(|s| s * s),
        );
        let u = GridFunction::uniform(l, 60, move |x| shift + (3.0 * x / l).cos());
        let phi = apply_operator(&spec, &u, 64).unwrap();
        let g_max = u.us.iter().map(|&v| if v > 0.0 { v * v } else { 0.0 }).fold(0.0, f64::max);
        let bound = l * l / 8.0 * amp * g_max;
        for p in phi {
            prop_assert!(p.abs() <= bound * (1.0 + 1e-9) + 1e-300);
        }
    }
}
