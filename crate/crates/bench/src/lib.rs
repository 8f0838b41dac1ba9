//! Problem fixtures shared by the benchmarks.

use std::f64::consts::PI;

use indefbvp::problem::NearZeroClass;
use indefbvp::{Descriptors, Limit, Nonlinearity, ProblemSpec, RadialProblem, Weight};

/// `a(x) = sin(3πx)`, `g(s) = min{20s^{6/5} − 6s³ + s⁴, 400 s arctan s}` on `[0, 1]`.
pub fn fig1() -> ProblemSpec {
    let g = Nonlinearity::new(|s: f64| {
        (20.0 * s.powf(1.2) - 6.0 * s.powi(3) + s.powi(4)).min(400.0 * s * s.atan())
    })
    .with_descriptors(Descriptors::declared(
        Limit::Finite(0.0),
        Limit::Finite(0.0),
        Limit::Finite(200.0 * PI),
    ))
    .with_class(NearZeroClass::NonNegative);
    ProblemSpec::new(Weight::new(1.0, |x| (3.0 * PI * x).sin()).unwrap(), g)
}

/// `a(x) = sin(7πx)`, `g(s) = s³ + s² sin(1/s)` on `[0, 1]`.
pub fn fig2() -> ProblemSpec {
    let g = Nonlinearity::new(|s: f64| {
        if s == 0.0 {
            0.0
        } else {
            s.powi(3) + s * s * (1.0 / s).sin()
        }
    })
    .with_descriptors(Descriptors::declared(
        Limit::Finite(0.0),
        Limit::Finite(0.0),
        Limit::PosInfinity,
    ))
    .with_class(NearZeroClass::SignChanging);
    ProblemSpec::new(Weight::new(1.0, |x| (7.0 * PI * x).sin()).unwrap(), g)
}

/// `a ≡ 1`, `g(s) = s` on `[0, 1]`.
pub fn linear() -> ProblemSpec {
    ProblemSpec::new(
        Weight::constant(1.0, 1.0).unwrap(),
        Nonlinearity::new(|s| s),
    )
}

/// `N = 3`, annulus `1 < r < 2`, `a ≡ 1`, `g(s) = s³`.
pub fn annulus() -> RadialProblem {
    RadialProblem::new(3, 1.0, 2.0, |_| 1.0, Nonlinearity::new(|s| s * s * s)).unwrap()
}
