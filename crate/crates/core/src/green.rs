//! The fixed-point operator `(Φu)(x) = ∫₀ᴸ G(x,ξ) a(ξ) g̃(u(ξ)) dξ` built on the
//! Dirichlet Green function of `-u''`. Fixed points of `Φ` are exactly the
//! solutions of the extended problem, which makes `‖u − Φu‖∞` an independent
//! certificate for shooting results.

use rayon::prelude::*;
use thiserror::Error;

use crate::problem::ProblemSpec;
use crate::shooting::SolutionProfile;

pub const DEFAULT_QUAD_N: usize = 1024;
pub const MIN_QUAD_N: usize = 64;

/// `G(x, ξ) = min(x, ξ) (L − max(x, ξ)) / L`.
#[inline]
pub fn green(x: f64, xi: f64, l: f64) -> f64 {
    x.min(xi) * (l - x.max(xi)) / l
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenKernel {
    pub length: f64,
}

impl GreenKernel {
    pub fn new(length: f64) -> Self {
        Self { length }
    }

    pub fn evaluate(&self, x: f64, xi: f64) -> f64 {
        green(x, xi, self.length)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreenError {
    #[error("quadrature needs at least {MIN_QUAD_N} subintervals per panel, got {0}")]
    QuadTooCoarse(usize),
    #[error("grid function needs at least 4 strictly increasing abscissae covering [0, {0}]")]
    BadGrid(f64),
}

/// Samples `(xs[i], us[i])` of a function on `[0, L]`, read back with local cubic
/// Lagrange interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub xs: Vec<f64>,
    pub us: Vec<f64>,
}

impl GridFunction {
    pub fn new(xs: Vec<f64>, us: Vec<f64>) -> Self {
        Self { xs, us }
    }

    pub fn from_fn(xs: Vec<f64>, f: impl Fn(f64) -> f64) -> Self {
        let us = xs.iter().map(|&x| f(x)).collect();
        Self { xs, us }
    }

    pub fn uniform(l: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let xs = (0..=n)
            .map(|j| if j == n { l } else { l * j as f64 / n as f64 })
            .collect();
        Self::from_fn(xs, f)
    }

    fn valid(&self, l: f64) -> bool {
        self.xs.len() >= 4
            && self.xs.len() == self.us.len()
            && self.xs.windows(2).all(|w| w[0] < w[1])
            && self.xs[0] <= 1e-12 * l
            && self.xs[self.xs.len() - 1] >= l * (1.0 - 1e-12)
    }

    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = self.xs.partition_point(|&p| p < x);
        let start = i.saturating_sub(2).min(n - 4);
        let (px, pu) = (&self.xs[start..start + 4], &self.us[start..start + 4]);
        let mut acc = 0.0;
        for j in 0..4 {
            let mut basis = 1.0;
            for k in 0..4 {
                if k != j {
                    basis *= (x - px[k]) / (px[j] - px[k]);
                }
            }
            acc += basis * pu[j];
        }
        acc
    }
}

/// Composite Simpson on one smooth panel. The panel ends are sampled a relative
/// `1e-13` inside, so a weight that jumps at a breakpoint contributes its one-sided
/// limit rather than the value from the neighbouring panel.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / n as f64;
    let inset = 1e-13 * (b - a);
    let mut acc = f(a + inset) + f(b - inset);
    for j in 1..n {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * j as f64);
    }
    acc * h / 3.0
}

/// `(Φu)(x)` at each `x` in `xs`. The integral is split at `x` (the kernel's kink)
/// and at the weight's breakpoints; each smooth panel gets composite Simpson with
/// `quad_n` subintervals (rounded up to even).
pub fn apply_operator_fn<U>(
    spec: &ProblemSpec,
    u: U,
    xs: &[f64],
    quad_n: usize,
) -> Result<Vec<f64>, GreenError>
where
    U: Fn(f64) -> f64 + Sync,
{
    if quad_n < MIN_QUAD_N {
        return Err(GreenError::QuadTooCoarse(quad_n));
    }
    let n = quad_n + quad_n % 2;
    let l = spec.length();
    let weight = &spec.weight;
    let g = &spec.nonlinearity;
    let source = |xi: f64| weight.eval(xi) * g.eval_extended(u(xi));
    let bps = spec.breakpoints();

    Ok(xs
        .par_iter()
        .map(|&x| {
            let mut cuts: Vec<f64> = Vec::with_capacity(bps.len() + 3);
            cuts.push(0.0);
            cuts.extend(bps.iter().copied().filter(|&b| b > 0.0 && b < l));
            if x > 0.0 && x < l {
                cuts.push(x);
            }
            cuts.push(l);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let integrand = |xi: f64| green(x, xi, l) * source(xi);
            cuts.windows(2)
                .map(|w| simpson(&integrand, w[0], w[1], n))
                .sum()
        })
        .collect())
}

/// `Φu` on the grid of `u`.
pub fn apply_operator(
    spec: &ProblemSpec,
    u: &GridFunction,
    quad_n: usize,
) -> Result<Vec<f64>, GreenError> {
    if !u.valid(spec.length()) {
        return Err(GreenError::BadGrid(spec.length()));
    }
    apply_operator_fn(spec, |x| u.interpolate(x), &u.xs, quad_n)
}

/// `max_i |u(x_i) − (Φu)(x_i)|` over the grid of `u`.
pub fn operator_residual(
    spec: &ProblemSpec,
    u: &GridFunction,
    quad_n: usize,
) -> Result<f64, GreenError> {
    let phi = apply_operator(spec, u, quad_n)?;
    Ok(u.us
        .iter()
        .zip(&phi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Residual of a shooting profile, evaluating `u` through the profile's continuous
/// extension and comparing on its sample grid.
pub fn operator_residual_profile(
    spec: &ProblemSpec,
    profile: &SolutionProfile,
    quad_n: usize,
) -> f64 {
    let xs: Vec<f64> = profile.samples.iter().map(|s| s.x).collect();
    let u = |x: f64| profile.u(x.clamp(0.0, spec.length())).unwrap_or(0.0);
    let phi = apply_operator_fn(spec, u, &xs, quad_n.max(MIN_QUAD_N)).expect("quad_n clamped");
    profile
        .samples
        .iter()
        .zip(&phi)
        .map(|(s, p)| (s.u - p).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Nonlinearity, Weight};
    use std::f64::consts::PI;

    #[test]
    fn kernel_values() {
        assert_eq!(green(0.5, 0.5, 1.0), 0.25);
        assert_eq!(green(0.0, 0.3, 1.0), 0.0);
        assert_eq!(green(0.25, 0.75, 1.0), 1.0 / 16.0);
        assert_eq!(GreenKernel::new(2.0).evaluate(2.0, 0.7), 0.0);
    }

    #[test]
    fn zero_maps_to_zero() {
        let spec = ProblemSpec::new(
            Weight::constant(1.0, 3.0).unwrap(),
            Nonlinearity::new(|s| s * s),
        );
        let u = GridFunction::uniform(1.0, 50, |_| 0.0);
        assert!(apply_operator(&spec, &u, 64)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        assert_eq!(operator_residual(&spec, &u, 64).unwrap(), 0.0);
    }

    #[test]
    fn inverts_minus_second_derivative() {
        let l = 2.0;
        let spec = ProblemSpec::new(Weight::constant(l, 1.0).unwrap(), Nonlinearity::new(|s| s));
        let u = GridFunction::uniform(l, 40, |x| (PI * x / l).sin());
        let phi = apply_operator_fn(&spec, |x| (PI * x / l).sin(), &u.xs, 256).unwrap();
        for (x, p) in u.xs.iter().zip(phi) {
            assert!((p - (l / PI).powi(2) * (PI * x / l).sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = ProblemSpec::new(
            Weight::constant(1.0, 1.0).unwrap(),
            Nonlinearity::new(|s| s),
        );
        let u = GridFunction::uniform(1.0, 10, |x| x);
        assert_eq!(
            apply_operator(&spec, &u, 32),
            Err(GreenError::QuadTooCoarse(32))
        );
        let short = GridFunction::new(vec![0.0, 0.5, 0.6], vec![0.0; 3]);
        assert!(apply_operator(&spec, &short, 64).is_err());
        let partial = GridFunction::uniform(0.5, 10, |x| x);
        assert!(apply_operator(&spec, &partial, 64).is_err());
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let xs = vec![0.0, 0.1, 0.35, 0.5, 0.8, 1.0];
        let gf = GridFunction::from_fn(xs, f);
        for x in [0.0, 0.05, 0.42, 0.9, 1.0] {
            assert!((gf.interpolate(x) - f(x)).abs() < 1e-13);
        }
    }
}
