//! First Dirichlet eigenvalue of `φ'' + λ w(x) φ = 0` for a nonnegative weight, by
//! Prüfer-angle shooting.
//!
//! With `φ = ρ sin θ`, `φ' = ρ cos θ` the angle obeys
//! `θ' = cos²θ + λ w(x) sin²θ`, `θ(α) = 0`, and the first eigenvalue is the
//! unique `λ` with `θ(β; λ) = π`. The terminal angle is nondecreasing in `λ`, so
//! the root is bracketed by doubling and then bisected.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ode::{Outcome, StateSample, Trajectory};
use crate::problem::{Interval, Weight};
use crate::rk::{self, Control};
use crate::shooting::SolutionProfile;

pub const DEFAULT_EIGEN_TOL: f64 = 1e-8;
const LAMBDA_CEILING: f64 = 1e16;
const WEIGHT_GRID: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    PositivePart,
    NegativePart,
    AbsoluteValue,
    PositivePartOnSubinterval,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("weight vanishes identically on [{}, {}]; no first eigenvalue", .0.start, .0.end)]
    WeightVanishes(Interval),
    #[error("weight is negative ({value:e}) at x = {x}")]
    NegativeWeight { x: f64, value: f64 },
    #[error("eigenvalue exceeds {LAMBDA_CEILING:e}")]
    BracketOverflow,
    #[error("interval [{}, {}] is empty or outside [0, {length}]", .interval.start, .interval.end)]
    InvalidInterval { interval: Interval, length: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("Prüfer angle integration failed at x = {0}")]
    Integration(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda: f64,
    pub interval: Interval,
    pub weight_kind: WeightKind,
    /// `|θ(β; λ) - π|` at the returned eigenvalue.
    pub residual: f64,
    pub bracket: (f64, f64),
    #[serde(skip)]
    weight: Option<Weight>,
}

impl EigenResult {
    pub fn weight(&self) -> Option<&Weight> {
        self.weight.as_ref()
    }
}

fn ode_tolerance(tol: f64) -> f64 {
    (tol * 1e-2).clamp(1e-13, 1e-6)
}

fn stops(w: &Weight, iv: Interval) -> Vec<f64> {
    let mut s: Vec<f64> = w.kinks().to_vec();
    if let Some(p) = w.declared_partition() {
        s.extend(p.endpoints());
    }
    s.retain(|x| *x > iv.start && *x < iv.end);
    s
}

/// Terminal Prüfer angle `θ(β; λ)`.
fn terminal_angle(
    w: &Weight,
    iv: Interval,
    lambda: f64,
    tol: f64,
    bps: &[f64],
) -> Result<f64, EigenError> {
    let opts = rk::Options {
        rtol: tol,
        atol: tol,
        h_min: 1e-14 * iv.len(),
        h_max: iv.len(),
        max_steps: 2_000_000,
    };
    let rhs = |x: f64, th: &[f64; 1]| {
        let (s, c) = th[0].sin_cos();
        [c * c + lambda * w.eval(x) * s * s]
    };
    rk::integrate(rhs, iv.start, [0.0], iv.end, bps, &opts, |_| {
        Control::Continue
    })
    .map(|(_, th)| th[0])
    .map_err(|e| match e {
        rk::Failure::StepUnderflow { x, .. }
        | rk::Failure::TooManySteps { x }
        | rk::Failure::NonFinite { x } => EigenError::Integration(x),
    })
}

/// `θ(β; λ)` with the integration tolerance `first_eigenvalue` would use for `tol`.
/// `λ` is an eigenvalue exactly when this equals `π` (first) or a multiple of it.
pub fn prufer_angle(
    w: &Weight,
    interval: Interval,
    lambda: f64,
    tol: f64,
) -> Result<f64, EigenError> {
    terminal_angle(w, interval, lambda, ode_tolerance(tol), &stops(w, interval))
}

/// First eigenvalue of `φ'' + λ w φ = 0`, `φ(α) = φ(β) = 0`, to relative tolerance `tol`.
///
/// `w` must be nonnegative on the interval and not identically zero there (both
/// checked on a 2048-cell grid). `kind` is recorded for reporting only.
pub fn first_eigenvalue(
    w: &Weight,
    interval: Interval,
    kind: WeightKind,
    tol: f64,
) -> Result<EigenResult, EigenError> {
    let length = w.length();
    if !(interval.start >= 0.0
        && interval.start < interval.end
        && interval.end <= length * (1.0 + 1e-12))
    {
        return Err(EigenError::InvalidInterval { interval, length });
    }
    if !(tol > 0.0) {
        return Err(EigenError::InvalidTolerance(tol));
    }

    let bps = stops(w, interval);
    let mut peak = 0.0f64;
    for x in interval.grid(WEIGHT_GRID).chain(bps.iter().copied()) {
        let v = w.eval(x);
        if v < 0.0 {
            return Err(EigenError::NegativeWeight { x, value: v });
        }
        peak = peak.max(v);
    }
    if !(peak > 0.0) {
        return Err(EigenError::WeightVanishes(interval));
    }

    let ode_tol = ode_tolerance(tol);
    let angle = |lambda: f64| terminal_angle(w, interval, lambda, ode_tol, &bps);

    let (mut lo, mut hi);
    if angle(1.0)? < PI {
        lo = 1.0;
        hi = 2.0;
        while angle(hi)? < PI {
            lo = hi;
            hi *= 2.0;
            if hi > LAMBDA_CEILING {
                return Err(EigenError::BracketOverflow);
            }
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        while angle(lo)? >= PI {
            hi = lo;
            lo *= 0.5;
        }
    }

    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if angle(mid)? < PI {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let residual = (angle(lambda)? - PI).abs();
    Ok(EigenResult {
        lambda,
        interval,
        weight_kind: kind,
        residual,
        bracket: (lo, hi),
        weight: Some(w.clone()),
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenfunctionError {
    #[error("eigen result carries no weight (was it deserialized?)")]
    MissingWeight,
    #[error("eigenfunction integration failed at x = {0}")]
    Integration(f64),
    #[error("need at least 2 samples")]
    TooFewSamples,
}

/// Integrates `φ'' + λ w φ = 0` from `φ(α) = 0`, `φ'(α) = 1` and rescales so that
/// `max |φ| = 1` on `n_samples + 1` equispaced points.
pub fn eigenfunction(
    result: &EigenResult,
    n_samples: usize,
) -> Result<SolutionProfile, EigenfunctionError> {
    let w = result
        .weight
        .as_ref()
        .ok_or(EigenfunctionError::MissingWeight)?;
    if n_samples < 2 {
        return Err(EigenfunctionError::TooFewSamples);
    }
    let iv = result.interval;
    let lambda = result.lambda;
    let bps = stops(w, iv);
    let opts = rk::Options {
        rtol: 1e-12,
        atol: 1e-12,
        h_min: 1e-14 * iv.len(),
        h_max: iv.len(),
        max_steps: 2_000_000,
    };
    let mut dense = Vec::new();
    let mut samples = vec![StateSample {
        x: iv.start,
        u: 0.0,
        v: 1.0,
    }];
    rk::integrate(
        |x, y: &[f64; 2]| [y[1], -lambda * w.eval(x) * y[0]],
        iv.start,
        [0.0, 1.0],
        iv.end,
        &bps,
        &opts,
        |s| {
            dense.push(*s.dense);
            samples.push(StateSample {
                x: s.dense.x1(),
                u: s.y_new[0],
                v: s.y_new[1],
            });
            Control::Continue
        },
    )
    .map_err(|e| match e {
        rk::Failure::StepUnderflow { x, .. }
        | rk::Failure::TooManySteps { x }
        | rk::Failure::NonFinite { x } => EigenfunctionError::Integration(x),
    })?;
    let traj = Trajectory::from_parts(samples, Outcome::ReachedEnd, dense);
    let peak = traj
        .resample(n_samples)
        .iter()
        .map(|s| s.u.abs())
        .fold(0.0, f64::max);
    Ok(SolutionProfile::from_trajectory(
        Arc::new(traj),
        1.0 / peak,
        n_samples,
        1.0 / peak,
    ))
}
