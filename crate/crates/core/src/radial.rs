//! Radial solutions on an annulus `R₁ < ‖x‖ < R₂` in `ℝᴺ`.
//!
//! With `w(r)` radial, `Δu + a(‖x‖) g(u) = 0` becomes
//! `w'' + (N−1)/r · w' + a(r) g(w) = 0`. The substitution `t = h(r) = ∫_{R₁}^r ξ^{1−N} dξ`
//! turns this into `v'' + r(t)^{2(N−1)} a(r(t)) g(v) = 0` on `[0, h(R₂)]`, which the
//! one-dimensional pipeline handles directly.

use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{
    detect_sign_partition, Interval, Nonlinearity, PartitionError, ProblemError, ProblemSpec,
    ScalarFn, SignPartition, Weight, DEFAULT_PARTITION_GRID, DEFAULT_SIGN_TOLERANCE,
};
use crate::shooting::{find_positive_solutions, ShootError, ShootingOptions, SolutionProfile};

/// Cell counts used for the radial finite-difference residual.
pub const DEFAULT_RESIDUAL_GRIDS: [usize; 3] = [64, 128, 256];

const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RadialError {
    #[error("dimension must be at least 2, got {0}")]
    Dimension(u32),
    #[error("radii must satisfy 0 < R1 < R2, got R1 = {r1}, R2 = {r2}")]
    Radii { r1: f64, r2: f64 },
    #[error("r = {r} lies outside [{lo}, {hi}]")]
    RadiusOutOfRange { r: f64, lo: f64, hi: f64 },
    #[error("t = {t} lies outside [0, {hi}]")]
    ParameterOutOfRange { t: f64, hi: f64 },
    #[error("no positive solution accepted ({rejected} candidate roots rejected)")]
    NoSolution { rejected: usize },
    #[error("residual grid needs at least 4 cells, got {0}")]
    ResidualGrid(usize),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Shoot(#[from] ShootError),
}

fn check_dim(n: u32) -> Result<(), RadialError> {
    if n < 2 {
        return Err(RadialError::Dimension(n));
    }
    Ok(())
}

/// Supremum of `h` over `[R₁, ∞)`; infinite for `N = 2`.
fn h_sup(n: u32, r1: f64) -> f64 {
    if n == 2 {
        f64::INFINITY
    } else {
        r1.powi(2 - n as i32) / (n as f64 - 2.0)
    }
}

/// `h(r) = ∫_{R₁}^r ξ^{1−N} dξ` in closed form.
pub fn h(r: f64, n: u32, r1: f64) -> Result<f64, RadialError> {
    check_dim(n)?;
    if !(r1 > 0.0) {
        return Err(RadialError::Radii { r1, r2: r });
    }
    if !(r >= r1 && r.is_finite()) {
        return Err(RadialError::RadiusOutOfRange {
            r,
            lo: r1,
            hi: f64::INFINITY,
        });
    }
    Ok(if n == 2 {
        (r / r1).ln()
    } else {
        let k = n as i32 - 2;
        (r1.powi(-k) - r.powi(-k)) / k as f64
    })
}

/// Inverse of [`h`].
pub fn h_inverse(t: f64, n: u32, r1: f64) -> Result<f64, RadialError> {
    check_dim(n)?;
    if !(r1 > 0.0) {
        return Err(RadialError::Radii { r1, r2: f64::NAN });
    }
    let sup = h_sup(n, r1);
    if !(t >= 0.0 && t < sup) {
        return Err(RadialError::ParameterOutOfRange { t, hi: sup });
    }
    Ok(if n == 2 {
        r1 * t.exp()
    } else {
        let k = n as f64 - 2.0;
        (r1.powi(2 - n as i32) - k * t).powf(-1.0 / k)
    })
}

/// Radial Dirichlet problem on the annulus `R₁ < ‖x‖ < R₂` in `ℝᴺ`.
#[derive(Clone)]
pub struct RadialProblem {
    dim: u32,
    r1: f64,
    r2: f64,
    a: ScalarFn,
    kinks: Vec<f64>,
    pub nonlinearity: Nonlinearity,
}

impl std::fmt::Debug for RadialProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialProblem")
            .field("dim", &self.dim)
            .field("r1", &self.r1)
            .field("r2", &self.r2)
            .field("kinks", &self.kinks)
            .finish_non_exhaustive()
    }
}

impl RadialProblem {
    pub fn new<F>(dim: u32, r1: f64, r2: f64, a: F, g: Nonlinearity) -> Result<Self, RadialError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_arc(dim, r1, r2, Arc::new(a), g)
    }

    pub fn from_arc(
        dim: u32,
        r1: f64,
        r2: f64,
        a: ScalarFn,
        g: Nonlinearity,
    ) -> Result<Self, RadialError> {
        check_dim(dim)?;
        if !(r1 > 0.0 && r1 < r2 && r2.is_finite()) {
            return Err(RadialError::Radii { r1, r2 });
        }
        Ok(Self {
            dim,
            r1,
            r2,
            a,
            kinks: Vec::new(),
            nonlinearity: g,
        })
    }

    /// Radii where `a` may fail to be smooth (table data, for instance).
    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks
            .into_iter()
            .filter(|&r| r > self.r1 && r < self.r2)
            .collect();
        self
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn radii(&self) -> (f64, f64) {
        (self.r1, self.r2)
    }

    pub fn a(&self, r: f64) -> f64 {
        (self.a)(r)
    }

    /// `h(r)`, rejecting `r` outside `[R₁, R₂]`.
    pub fn h(&self, r: f64) -> Result<f64, RadialError> {
        let slack = DOMAIN_SLACK * self.r2;
        if !(r >= self.r1 - slack && r <= self.r2 + slack) {
            return Err(RadialError::RadiusOutOfRange {
                r,
                lo: self.r1,
                hi: self.r2,
            });
        }
        h(r.clamp(self.r1, self.r2), self.dim, self.r1)
    }

    /// `h⁻¹(t)`, rejecting `t` outside `[0, h(R₂)]`.
    pub fn h_inverse(&self, t: f64) -> Result<f64, RadialError> {
        let l = self.length();
        let slack = DOMAIN_SLACK * l;
        if !(t >= -slack && t <= l + slack) {
            return Err(RadialError::ParameterOutOfRange { t, hi: l });
        }
        h_inverse(t.clamp(0.0, l), self.dim, self.r1)
    }

    /// Length of the transformed interval, `h(R₂)`.
    pub fn length(&self) -> f64 {
        h(self.r2, self.dim, self.r1).expect("validated radii")
    }

    /// Sign partition of `a` on `[R₁, R₂]`, in the radial variable.
    pub fn radial_partition(&self) -> Result<SignPartition, RadialError> {
        let (r1, a) = (self.r1, self.a.clone());
        let shifted = Weight::new(self.r2 - self.r1, move |s| a(r1 + s))?;
        let p = detect_sign_partition(&shifted, DEFAULT_PARTITION_GRID, DEFAULT_SIGN_TOLERANCE)?;
        let intervals = p
            .intervals
            .iter()
            .map(|iv| Interval::new(r1 + iv.start, r1 + iv.end))
            .collect();
        Ok(SignPartition::new(intervals, p.tolerance)?)
    }
}

/// The one-dimensional problem in the variable `t`.
#[derive(Debug, Clone)]
pub struct TransformedProblem {
    pub spec: ProblemSpec,
    dim: u32,
    r1: f64,
    r2: f64,
}

impl TransformedProblem {
    pub fn length(&self) -> f64 {
        self.spec.length()
    }

    pub fn weight_t(&self, t: f64) -> f64 {
        self.spec.weight.eval(t)
    }

    /// `r(t) = h⁻¹(t)`, clamped to `[R₁, R₂]`.
    pub fn back_map(&self, t: f64) -> f64 {
        let l = self.length();
        h_inverse(t.clamp(0.0, l), self.dim, self.r1)
            .expect("t clamped into range")
            .clamp(self.r1, self.r2)
    }
}

/// Builds the equivalent problem on `[0, h(R₂)]`. When `a` has a nonnegativity
/// region its partition is mapped through `h` and attached to the new weight, so the
/// transformed breakpoints are exact images of the radial ones.
pub fn reduce(rp: &RadialProblem) -> Result<TransformedProblem, RadialError> {
    let l = rp.length();
    let (dim, r1, r2) = (rp.dim, rp.r1, rp.r2);
    let a = rp.a.clone();
    let power = 2 * (dim as i32 - 1);
    let weight_t = move |t: f64| {
        let r = h_inverse(t.clamp(0.0, l), dim, r1)
            .map(|r| r.clamp(r1, r2))
            .unwrap_or(r2);
        r.powi(power) * a(r)
    };
    let mut weight = Weight::new(l, weight_t)?;
    if let Ok(p) = rp.radial_partition() {
        let intervals = p
            .intervals
            .iter()
            .map(|iv| Interval::new(rp.h(iv.start).unwrap_or(0.0), rp.h(iv.end).unwrap_or(l)))
            .collect();
        weight = weight.with_partition(SignPartition::new(intervals, p.tolerance)?);
    }
    let kinks = rp.kinks.iter().filter_map(|&r| rp.h(r).ok()).collect();
    weight = weight.with_kinks(kinks);
    Ok(TransformedProblem {
        spec: ProblemSpec::new(weight, rp.nonlinearity.clone()),
        dim,
        r1,
        r2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSample {
    pub r: f64,
    pub w: f64,
    pub dw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualLevel {
    pub cells: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialSolution {
    pub dim: u32,
    pub r1: f64,
    pub r2: f64,
    /// The accepted solution `v(t)` of the transformed problem.
    pub profile_t: SolutionProfile,
    pub samples: Vec<RadialSample>,
    pub boundary: [f64; 2],
    pub residuals: Vec<ResidualLevel>,
    /// `log₂` of successive residual ratios.
    pub observed_orders: Vec<f64>,
}

impl RadialSolution {
    /// `(w(r), w'(r))`, with `w'(r) = v'(h(r)) · r^{1−N}`.
    pub fn eval(&self, r: f64) -> Option<(f64, f64)> {
        let t = h(r, self.dim, self.r1).ok()?;
        let (v, dv) = self.profile_t.eval(t)?;
        Some((v, dv * r.powi(1 - self.dim as i32)))
    }

    pub fn w(&self, r: f64) -> Option<f64> {
        if !(r >= self.r1 && r <= self.r2) {
            return None;
        }
        self.eval(r).map(|(w, _)| w)
    }

    /// `u(x) = w(‖x‖)` for a point of the closed annulus.
    pub fn u(&self, x: &[f64]) -> Option<f64> {
        let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        self.w(norm)
    }

    pub fn write_csv<W: Write>(&self, mut out: W, precision: usize) -> io::Result<()> {
        writeln!(out, "r,w,dw")?;
        let p = precision.max(1) - 1;
        for s in &self.samples {
            writeln!(out, "{:.*e},{:.*e},{:.*e}", p, s.r, p, s.w, p, s.dw)?;
        }
        Ok(())
    }

    /// Points `(x₁, x₂, u)` of an `n × n` grid over `[−R₂, R₂]²` in the plane
    /// `x₃ = … = x_N = 0`, restricted to the closed annulus.
    pub fn write_slice_csv<W: Write>(
        &self,
        mut out: W,
        n: usize,
        precision: usize,
    ) -> io::Result<()> {
        writeln!(out, "x1,x2,u")?;
        let p = precision.max(1) - 1;
        let n = n.max(2);
        for i in 0..n {
            let x1 = -self.r2 + 2.0 * self.r2 * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let x2 = -self.r2 + 2.0 * self.r2 * j as f64 / (n - 1) as f64;
                if let Some(u) = self.u(&[x1, x2]) {
                    writeln!(out, "{:.*e},{:.*e},{:.*e}", p, x1, p, x2, p, u)?;
                }
            }
        }
        Ok(())
    }
}

/// `max_i |w''(rᵢ) + (N−1)/rᵢ · w'(rᵢ) + a(rᵢ) g(w(rᵢ))|` with second-order
/// central differences on `cells` equal cells of `[R₁, R₂]`.
pub fn radial_fd_residual<W>(rp: &RadialProblem, w: W, cells: usize) -> Result<f64, RadialError>
where
    W: Fn(f64) -> f64,
{
    if cells < 4 {
        return Err(RadialError::ResidualGrid(cells));
    }
    let (r1, r2) = rp.radii();
    let dr = (r2 - r1) / cells as f64;
    let nm1 = rp.dim as f64 - 1.0;
    let ws: Vec<f64> = (0..=cells)
        .map(|i| w(if i == cells { r2 } else { r1 + dr * i as f64 }))
        .collect();
    let mut worst = 0.0_f64;
    for i in 1..cells {
        let r = r1 + dr * i as f64;
        let d2 = (ws[i + 1] - 2.0 * ws[i] + ws[i - 1]) / (dr * dr);
        let d1 = (ws[i + 1] - ws[i - 1]) / (2.0 * dr);
        let res = d2 + nm1 / r * d1 + rp.a(r) * rp.nonlinearity.eval(ws[i]);
        worst = worst.max(res.abs());
    }
    Ok(worst)
}

/// Solves the transformed problem by shooting and maps the first accepted
/// solution back to `w(r)`. Residuals are measured on `residual_grids`.
pub fn solve_radial(
    rp: &RadialProblem,
    opts: &ShootingOptions,
    residual_grids: &[usize],
) -> Result<RadialSolution, RadialError> {
    let tp = reduce(rp)?;
    let report = find_positive_solutions(&tp.spec, opts)?;
    let profile_t = match report.solutions.into_iter().next() {
        Some(p) => p,
        None => {
            return Err(RadialError::NoSolution {
                rejected: report.rejected.len(),
            })
        }
    };
    let (r1, r2) = rp.radii();
    let mut sol = RadialSolution {
        dim: rp.dim,
        r1,
        r2,
        profile_t,
        samples: Vec::new(),
        boundary: [0.0; 2],
        residuals: Vec::new(),
        observed_orders: Vec::new(),
    };
    let n = opts.samples.max(4);
    sol.samples = (0..=n)
        .map(|i| {
            let r = if i == n {
                r2
            } else {
                r1 + (r2 - r1) * i as f64 / n as f64
            };
            let (w, dw) = sol.eval(r).unwrap_or((f64::NAN, f64::NAN));
            RadialSample { r, w, dw }
        })
        .collect();
    sol.boundary = [sol.samples[0].w, sol.samples[n].w];
    for &cells in residual_grids {
        let residual = radial_fd_residual(rp, |r| sol.w(r).unwrap_or(f64::NAN), cells)?;
        sol.residuals.push(ResidualLevel { cells, residual });
    }
    sol.observed_orders = sol
        .residuals
        .windows(2)
        .map(|p| (p[0].residual / p[1].residual).log2())
        .collect();
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn cube() -> Nonlinearity {
        Nonlinearity::new(|s| s * s * s)
    }

    #[test]
    fn closed_forms() {
        assert!((h(E, 2, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((h(2.0, 3, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((h_inverse(0.25, 3, 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((h_inverse(1.0, 2, 1.0).unwrap() - E).abs() < 1e-15);
    }

    #[test]
    fn domain_violations() {
        assert!(h(0.5, 3, 1.0).is_err());
        assert!(h(2.0, 1, 1.0).is_err());
        assert!(h_inverse(-0.1, 3, 1.0).is_err());
        assert!(h_inverse(1.0, 3, 1.0).is_err());
        assert!(RadialProblem::new(3, 2.0, 1.0, |_| 1.0, cube()).is_err());
        assert!(RadialProblem::new(1, 1.0, 2.0, |_| 1.0, cube()).is_err());
        let rp = RadialProblem::new(3, 1.0, 2.0, |_| 1.0, cube()).unwrap();
        assert!(rp.h(2.5).is_err());
        assert!(rp.h_inverse(0.6).is_err());
    }

    #[test]
    fn transformed_weight_for_n2() {
        let rp = RadialProblem::new(2, 1.0, E, |_| 1.0, cube()).unwrap();
        let tp = reduce(&rp).unwrap();
        assert!((tp.length() - 1.0).abs() < 1e-15);
        for t in [0.0, 0.3, 0.7, 1.0] {
            assert!((tp.weight_t(t) - (2.0 * t).exp()).abs() < 1e-12 * (2.0 * t).exp());
        }
        assert!((tp.back_map(0.0) - 1.0).abs() < 1e-12);
        assert!((tp.back_map(1.0) - E).abs() < 1e-12);
    }

    #[test]
    fn cancelling_weight_is_constant() {
        for n in 2..=5u32 {
            let p = 2 * (n as i32 - 1);
            let rp = RadialProblem::new(n, 0.5, 1.5, move |r| r.powi(-p), cube()).unwrap();
            let tp = reduce(&rp).unwrap();
            for j in 0..=10 {
                let t = tp.length() * j as f64 / 10.0;
                assert!((tp.weight_t(t) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn partition_maps_through_h() {
        let rp =
            RadialProblem::new(3, 1.0, 2.0, |r| (std::f64::consts::PI * r).cos(), cube()).unwrap();
        let tp = reduce(&rp).unwrap();
        let p = tp.spec.weight.declared_partition().unwrap();
        assert_eq!(p.intervals.len(), 1);
        assert!((p.intervals[0].start - 1.0 / 3.0).abs() < 1e-9);
        assert!((p.intervals[0].end - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_has_no_solution() {
        let rp = RadialProblem::new(3, 1.0, 2.0, |_| 0.0, cube()).unwrap();
        let opts = ShootingOptions {
            n_scan: 21,
            ..ShootingOptions::default()
        }
        .with_range(0.0, 5.0);
        assert!(matches!(
            solve_radial(&rp, &opts, &[16]),
            Err(RadialError::Shoot(ShootError::NoBracketFound { .. }))
        ));
    }

    #[test]
    fn residual_of_exact_solution_converges() {
        // w = sin(π(r−1)) solves w'' + 2/r w' + a w = 0 with a chosen accordingly.
        use std::f64::consts::PI;
        let a = |r: f64| PI * PI - 2.0 / r * PI * (PI * (r - 1.0)).cos() / (PI * (r - 1.0)).sin();
        let rp = RadialProblem::new(3, 1.0, 2.0, a, Nonlinearity::new(|s| s)).unwrap();
        let w = |r: f64| (PI * (r - 1.0)).sin();
        let r1 = radial_fd_residual(&rp, w, 32).unwrap();
        let r2 = radial_fd_residual(&rp, w, 64).unwrap();
        assert!((r1 / r2).log2() > 1.9);
        assert!(radial_fd_residual(&rp, w, 3).is_err());
    }
}
