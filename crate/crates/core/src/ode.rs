//! Initial value problems for `u'' + a(x) g̃(u) = 0`.

use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{Nonlinearity, ProblemSpec, ScalarFn};
use crate::rk::{self, Control, DenseStep};

/// Default blow-up guard on `|u| + |u'|`.
pub const DEFAULT_CAP: f64 = 1e8;

/// `g̃`: `g` on `[0, ∞)`, zero on negative arguments.
pub fn extend_g(g: &Nonlinearity) -> ScalarFn {
    let f = g.evaluator();
    Arc::new(move |s| if s > 0.0 { f(s) } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSample {
    pub x: f64,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    ReachedEnd,
    Escaped { x: f64 },
}

/// Sampled path of the initial value problem, with its continuous extension.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<StateSample>,
    pub outcome: Outcome,
    /// Abscissae where `u` crosses zero downward.
    pub zero_crossings: Vec<f64>,
    #[serde(skip)]
    dense: Vec<DenseStep<2>>,
}

impl Trajectory {
    pub(crate) fn from_parts(
        samples: Vec<StateSample>,
        outcome: Outcome,
        dense: Vec<DenseStep<2>>,
    ) -> Self {
        Self {
            samples,
            outcome,
            zero_crossings: Vec::new(),
            dense,
        }
    }

    pub fn reached_end(&self) -> bool {
        self.outcome == Outcome::ReachedEnd
    }

    pub fn first(&self) -> StateSample {
        self.samples[0]
    }

    pub fn last(&self) -> StateSample {
        *self
            .samples
            .last()
            .expect("trajectory has at least one sample")
    }

    /// Abscissa range covered by the continuous extension.
    pub fn span(&self) -> (f64, f64) {
        (self.first().x, self.last().x)
    }

    /// `(u, u')` at `x` from the continuous extension, or `None` outside the
    /// integrated range or when the trajectory was deserialized.
    pub fn eval(&self, x: f64) -> Option<(f64, f64)> {
        let (lo, hi) = self.span();
        if !(x >= lo && x <= hi) {
            return None;
        }
        if self.samples.len() == 1 {
            let s = self.first();
            return Some((s.u, s.v));
        }
        if self.dense.is_empty() {
            return None;
        }
        let idx = self
            .dense
            .partition_point(|d| d.x1() < x)
            .min(self.dense.len() - 1);
        let [u, v] = self.dense[idx].eval(x);
        Some((u, v))
    }

    /// `n + 1` equispaced samples of the continuous extension over the covered range.
    pub fn resample(&self, n: usize) -> Vec<StateSample> {
        let (lo, hi) = self.span();
        (0..=n)
            .map(|j| {
                let x = if j == n {
                    hi
                } else {
                    lo + (hi - lo) * j as f64 / n as f64
                };
                let (u, v) = self.eval(x).expect("inside span");
                StateSample { x, u, v }
            })
            .collect()
    }

    pub fn max_abs_u(&self) -> f64 {
        self.samples.iter().map(|s| s.u.abs()).fold(0.0, f64::max)
    }

    /// `x,u,v` rows with a header, `precision` significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W, precision: usize) -> io::Result<()> {
        writeln!(w, "x,u,v")?;
        let p = precision.max(1) - 1;
        for s in &self.samples {
            writeln!(w, "{:.*e},{:.*e},{:.*e}", p, s.x, p, s.u, p, s.v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("invalid integration interval [{x0}, {x1}] for domain length {length}")]
    InvalidInterval { x0: f64, x1: f64, length: f64 },
    #[error("tolerance and cap must be positive (tol = {tol}, cap = {cap})")]
    InvalidSettings { tol: f64, cap: f64 },
    #[error("step size fell below {h_min:e} at x = {x}")]
    StepSizeUnderflow {
        x: f64,
        h_min: f64,
        partial: Box<Trajectory>,
    },
    #[error("step budget exhausted at x = {x}")]
    TooManySteps { x: f64, partial: Box<Trajectory> },
}

/// Integrates `(u, v)' = (v, -a(x) g̃(u))` from `(x0, u0, v0)` to `x1`.
///
/// Uses an adaptive Dormand–Prince 5(4) pair with mixed error control
/// (`atol = rtol = tol`), stepping onto every breakpoint of the problem. The run
/// stops with [`Outcome::Escaped`] at the first step where `|u| + |v| > cap`.
/// Downward zero crossings of `u` are polished by bisection on the continuous
/// extension to `|u| <= 1e-12`.
pub fn integrate(
    problem: &ProblemSpec,
    x0: f64,
    u0: f64,
    v0: f64,
    x1: f64,
    tol: f64,
    cap: f64,
) -> Result<Trajectory, IntegrateError> {
    let length = problem.length();
    let slack = 1e-12 * length;
    if !(x0 >= -slack && x0 < x1 && x1 <= length + slack) {
        return Err(IntegrateError::InvalidInterval { x0, x1, length });
    }
    if !(tol > 0.0 && cap > 0.0) {
        return Err(IntegrateError::InvalidSettings { tol, cap });
    }

    let weight = &problem.weight;
    let g = &problem.nonlinearity;
    let rhs = |x: f64, y: &[f64; 2]| [y[1], -weight.eval(x) * g.eval_extended(y[0])];

    let mut traj = Trajectory {
        samples: vec![StateSample {
            x: x0,
            u: u0,
            v: v0,
        }],
        outcome: Outcome::ReachedEnd,
        zero_crossings: Vec::new(),
        dense: Vec::new(),
    };

    // Exact equilibrium: g̃(0) = 0.
    if u0 == 0.0 && v0 == 0.0 {
        traj.samples.push(StateSample {
            x: x1,
            u: 0.0,
            v: 0.0,
        });
        traj.dense
            .push(DenseStep::constant(x0, x1 - x0, [0.0, 0.0]));
        return Ok(traj);
    }

    let h_min = 1e-14 * length;
    let opts = rk::Options {
        rtol: tol,
        atol: tol,
        h_min,
        h_max: x1 - x0,
        max_steps: 5_000_000,
    };
    let mut escaped = None;
    let result = rk::integrate(
        rhs,
        x0,
        [u0, v0],
        x1,
        problem.breakpoints(),
        &opts,
        |step| {
            let d = *step.dense;
            let prev = *traj.samples.last().unwrap();
            let [u, v] = step.y_new;
            let x = d.x1();
            if prev.u > 0.0 && u <= 0.0 {
                traj.zero_crossings.push(polish_zero(&d, prev.x, x));
            }
            traj.dense.push(d);
            traj.samples.push(StateSample { x, u, v });
            if u.abs() + v.abs() > cap {
                escaped = Some(x);
                return Control::Stop;
            }
            Control::Continue
        },
    );

    match result {
        Ok((x_end, _)) => {
            if let Some(x) = escaped {
                traj.outcome = Outcome::Escaped { x };
            } else if let Some(last) = traj.samples.last_mut() {
                debug_assert!((x_end - x1).abs() <= 1e-12);
                last.x = x1;
            }
            Ok(traj)
        }
        Err(rk::Failure::StepUnderflow { x, .. }) | Err(rk::Failure::NonFinite { x }) => {
            Err(IntegrateError::StepSizeUnderflow {
                x,
                h_min,
                partial: Box::new(traj),
            })
        }
        Err(rk::Failure::TooManySteps { x }) => Err(IntegrateError::TooManySteps {
            x,
            partial: Box::new(traj),
        }),
    }
}

fn polish_zero(d: &DenseStep<2>, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let u = d.eval(mid)[0];
        if u.abs() <= 1e-12 || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            return mid;
        }
        if u > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
