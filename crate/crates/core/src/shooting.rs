//! Shooting on the extended equation and Poincaré-map sampling.
//!
//! The shooting function is `F(c) = u(L; c)` where `u` solves
//! `u'' + a(x) g̃(u) = 0`, `u(0) = 0`, `u'(0) = c`. Because `g̃` vanishes for
//! negative arguments, a trajectory that crosses zero downward stays negative, so
//! a sign change of `F` brackets a solution that is positive on `(0, L)`.
//! Positivity is still verified on a grid before a root is accepted.

use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::green;
use crate::ode::{self, IntegrateError, Outcome, StateSample, Trajectory, DEFAULT_CAP};
use crate::problem::ProblemSpec;

pub const DEFAULT_SCAN: usize = 481;
pub const DEFAULT_TOL_BVP: f64 = 1e-9;
pub const DEFAULT_TOL_ODE: f64 = 1e-10;
const ESCAPE_REFINEMENT_ROUNDS: usize = 3;
const ESCAPE_REFINEMENT_POINTS: usize = 7;

fn one() -> f64 {
    1.0
}

/// A verified (or candidate) solution sampled on an equispaced grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionProfile {
    pub samples: Vec<StateSample>,
    pub initial_slope: f64,
    pub boundary_residual: f64,
    /// Minimum of `u` over the interior samples.
    pub interior_positivity: f64,
    pub sup_norm: f64,
    pub operator_residual: Option<f64>,
    #[serde(skip)]
    source: Option<Arc<Trajectory>>,
    #[serde(skip, default = "one")]
    scale: f64,
}

impl SolutionProfile {
    /// Profile from a trajectory multiplied by `scale`, resampled on `n + 1` points.
    pub fn from_trajectory(
        traj: Arc<Trajectory>,
        scale: f64,
        n: usize,
        initial_slope: f64,
    ) -> Self {
        let samples: Vec<StateSample> = traj
            .resample(n)
            .into_iter()
            .map(|s| StateSample {
                x: s.x,
                u: scale * s.u,
                v: scale * s.v,
            })
            .collect();
        let boundary_residual = samples.last().map(|s| s.u.abs()).unwrap_or(0.0);
        let interior_positivity = samples[1..samples.len() - 1]
            .iter()
            .map(|s| s.u)
            .fold(f64::INFINITY, f64::min);
        let sup_norm = samples.iter().map(|s| s.u.abs()).fold(0.0, f64::max);
        Self {
            samples,
            initial_slope,
            boundary_residual,
            interior_positivity,
            sup_norm,
            operator_residual: None,
            source: Some(traj),
            scale,
        }
    }

    /// `(u, u')` from the continuous extension of the underlying trajectory, or
    /// piecewise-linear interpolation of the samples when it is unavailable.
    pub fn eval(&self, x: f64) -> Option<(f64, f64)> {
        if let Some(t) = &self.source {
            return t.eval(x).map(|(u, v)| (self.scale * u, self.scale * v));
        }
        let s = &self.samples;
        if s.is_empty() || x < s[0].x || x > s[s.len() - 1].x {
            return None;
        }
        let i = s.partition_point(|p| p.x < x).clamp(1, s.len() - 1);
        let (a, b) = (s[i - 1], s[i]);
        let t = if b.x > a.x {
            (x - a.x) / (b.x - a.x)
        } else {
            0.0
        };
        Some((a.u + t * (b.u - a.u), a.v + t * (b.v - a.v)))
    }

    pub fn u(&self, x: f64) -> Option<f64> {
        self.eval(x).map(|(u, _)| u)
    }

    pub fn trajectory(&self) -> Option<&Trajectory> {
        self.source.as_deref()
    }

    pub fn write_csv<W: Write>(&self, mut w: W, precision: usize) -> io::Result<()> {
        writeln!(w, "x,u,v")?;
        let p = precision.max(1) - 1;
        for s in &self.samples {
            writeln!(w, "{:.*e},{:.*e},{:.*e}", p, s.x, p, s.u, p, s.v)?;
        }
        Ok(())
    }
}

/// Terminal state of the shooting trajectory for one slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EndState {
    Reached {
        u: f64,
        v: f64,
    },
    Escaped {
        x: f64,
    },
    /// The step controller underflowed; treated like an escape.
    Failed {
        x: f64,
    },
}

impl EndState {
    pub fn value(&self) -> Option<(f64, f64)> {
        match *self {
            EndState::Reached { u, v } => Some((u, v)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincarePoint {
    pub c: f64,
    pub end_state: EndState,
    pub interior_min: f64,
    pub positive_interior: bool,
}

impl PoincarePoint {
    fn shoot_value(&self) -> Option<f64> {
        self.end_state.value().map(|(u, _)| u)
    }
}

/// `c,uL,vL,escaped,positive_interior` rows; escaped rows carry `NaN` end values.
pub fn write_poincare_csv<W: Write>(
    points: &[PoincarePoint],
    mut w: W,
    precision: usize,
) -> io::Result<()> {
    writeln!(w, "c,uL,vL,escaped,positive_interior")?;
    let p = precision.max(1) - 1;
    for pt in points {
        let (u, v) = pt.end_state.value().unwrap_or((f64::NAN, f64::NAN));
        writeln!(
            w,
            "{:.*e},{:.*e},{:.*e},{},{}",
            p,
            pt.c,
            p,
            u,
            p,
            v,
            pt.end_state.value().is_none(),
            pt.positive_interior
        )?;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum ShootError {
    #[error("invalid slope range [{c_min}, {c_max}] with {n} samples")]
    InvalidRange { c_min: f64, c_max: f64, n: usize },
    #[error("tolerances must be positive")]
    InvalidTolerance,
    #[error("no sign change of u(L; c) among {} non-escaped samples; widen the slope range", .table.len())]
    NoBracketFound { table: Vec<PoincarePoint> },
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub c_min: f64,
    pub c_max: f64,
    pub n_scan: usize,
    pub tol_bvp: f64,
    pub tol_ode: f64,
    pub cap: f64,
    /// Number of cells of the interior verification grid and of stored profiles.
    pub samples: usize,
    /// Quadrature resolution for the Green-operator certificate; `None` skips it.
    pub quad_n: Option<usize>,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            c_min: 0.0,
            c_max: 10.0,
            n_scan: DEFAULT_SCAN,
            tol_bvp: DEFAULT_TOL_BVP,
            tol_ode: DEFAULT_TOL_ODE,
            cap: DEFAULT_CAP,
            samples: 1000,
            quad_n: Some(green::DEFAULT_QUAD_N),
        }
    }
}

impl ShootingOptions {
    pub fn with_range(mut self, c_min: f64, c_max: f64) -> Self {
        self.c_min = c_min;
        self.c_max = c_max;
        self
    }
}

const VERIFY_CELLS: usize = 1000;

fn shoot(spec: &ProblemSpec, c: f64, tol: f64, cap: f64) -> (PoincarePoint, Option<Trajectory>) {
    let l = spec.length();
    match ode::integrate(spec, 0.0, 0.0, c, l, tol, cap) {
        Ok(traj) => {
            let end_state = match traj.outcome {
                Outcome::ReachedEnd => {
                    let e = traj.last();
                    EndState::Reached { u: e.u, v: e.v }
                }
                Outcome::Escaped { x } => EndState::Escaped { x },
            };
            let interior_min = interior_min(&traj, l);
            let positive_interior = traj.reached_end() && interior_min > 0.0;
            (
                PoincarePoint {
                    c,
                    end_state,
                    interior_min,
                    positive_interior,
                },
                Some(traj),
            )
        }
        Err(IntegrateError::StepSizeUnderflow { x, partial, .. })
        | Err(IntegrateError::TooManySteps { x, partial }) => {
            let interior_min = interior_min(&partial, l);
            (
                PoincarePoint {
                    c,
                    end_state: EndState::Failed { x },
                    interior_min,
                    positive_interior: false,
                },
                None,
            )
        }
        Err(e) => unreachable!("arguments validated before shooting: {e}"),
    }
}

/// Minimum of `u` over interior step points and an equispaced interior grid.
fn interior_min(traj: &Trajectory, l: f64) -> f64 {
    let (lo, hi) = traj.span();
    let steps = traj
        .samples
        .iter()
        .filter(|s| s.x > 0.0 && s.x < l)
        .map(|s| s.u);
    let grid = (1..VERIFY_CELLS)
        .map(|j| l * j as f64 / VERIFY_CELLS as f64)
        .filter(|&x| x >= lo && x <= hi)
        .filter_map(|x| traj.eval(x).map(|(u, _)| u));
    steps.chain(grid).fold(f64::INFINITY, f64::min)
}

fn check_range(c_min: f64, c_max: f64, n: usize) -> Result<(), ShootError> {
    if !(c_min >= 0.0 && c_min < c_max && c_max.is_finite() && n >= 2) {
        return Err(ShootError::InvalidRange { c_min, c_max, n });
    }
    Ok(())
}

fn uniform(c_min: f64, c_max: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i == n - 1 {
                c_max
            } else {
                c_min + (c_max - c_min) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn sample_slopes(spec: &ProblemSpec, slopes: &[f64], tol: f64, cap: f64) -> Vec<PoincarePoint> {
    slopes
        .par_iter()
        .map(|&c| shoot(spec, c, tol, cap).0)
        .collect()
}

/// Image of the segment `{0} × [c_min, c_max]` under the map `c ↦ (u(L), u'(L))`,
/// on `n` equispaced slopes, ordered by `c`.
pub fn sample_poincare(
    spec: &ProblemSpec,
    c_min: f64,
    c_max: f64,
    n: usize,
    tol: f64,
) -> Result<Vec<PoincarePoint>, ShootError> {
    check_range(c_min, c_max, n)?;
    if !(tol > 0.0) {
        return Err(ShootError::InvalidTolerance);
    }
    Ok(sample_slopes(
        spec,
        &uniform(c_min, c_max, n),
        tol,
        DEFAULT_CAP,
    ))
}

/// Inserts points between escaped and reached neighbours, a fixed number of rounds.
fn refine_near_escapes(
    spec: &ProblemSpec,
    mut table: Vec<PoincarePoint>,
    opts: &ShootingOptions,
) -> Vec<PoincarePoint> {
    for _ in 0..ESCAPE_REFINEMENT_ROUNDS {
        let mut extra = Vec::new();
        for pair in table.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.shoot_value().is_some() != b.shoot_value().is_some() {
                let k = ESCAPE_REFINEMENT_POINTS + 1;
                extra.extend((1..k).map(|j| a.c + (b.c - a.c) * j as f64 / k as f64));
            }
        }
        if extra.is_empty() {
            break;
        }
        table.extend(sample_slopes(spec, &extra, opts.tol_ode, opts.cap));
        table.sort_by(|a, b| a.c.total_cmp(&b.c));
    }
    table
}

/// A sign change of `F` that was bisected but not accepted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectedRoot {
    pub c: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub solutions: Vec<SolutionProfile>,
    pub rejected: Vec<RejectedRoot>,
    /// Slope pairs with opposite `F` signs separated by escaped samples; not bisected.
    pub escaped_brackets: Vec<(f64, f64)>,
    #[serde(skip)]
    pub table: Vec<PoincarePoint>,
}

enum Bracket {
    Exact(f64),
    Sign(PoincarePoint, PoincarePoint),
}

fn brackets(table: &[PoincarePoint]) -> (Vec<Bracket>, Vec<(f64, f64)>) {
    let mut out = Vec::new();
    let mut across_escape = Vec::new();
    let mut prev: Option<(PoincarePoint, bool)> = None;
    for p in table {
        let Some(f) = p.shoot_value() else {
            if let Some((q, _)) = prev {
                prev = Some((q, true));
            }
            continue;
        };
        if f == 0.0 && p.c > 0.0 {
            out.push(Bracket::Exact(p.c));
        }
        if let Some((q, gap)) = prev {
            let fq = q.shoot_value().unwrap();
            if fq * f < 0.0 {
                if gap {
                    across_escape.push((q.c, p.c));
                } else {
                    out.push(Bracket::Sign(q, *p));
                }
            }
        }
        prev = Some((*p, false));
    }
    (out, across_escape)
}

enum RootSearch {
    Found(f64),
    Escaped(f64),
    Lost(f64),
}

/// Bisection at the verification tolerance. The bracket comes from the scan, so its
/// end values are recomputed before use.
fn bisect(
    spec: &ProblemSpec,
    a: PoincarePoint,
    b: PoincarePoint,
    opts: &ShootingOptions,
) -> RootSearch {
    let tol = verify_tol(opts);
    let eval = |c: f64| shoot(spec, c, tol, opts.cap).0.shoot_value();
    let (mut lo, mut hi) = (a.c, b.c);
    let (Some(mut f_lo), Some(f_hi)) = (eval(lo), eval(hi)) else {
        return RootSearch::Escaped(lo);
    };
    if f_lo * f_hi > 0.0 {
        return RootSearch::Lost(0.5 * (lo + hi));
    }
    let (mut best_c, mut best_f) = if f_lo.abs() <= f_hi.abs() {
        (lo, f_lo.abs())
    } else {
        (hi, f_hi.abs())
    };
    for _ in 0..200 {
        if best_f <= 0.1 * opts.tol_bvp || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let Some(f) = eval(mid) else {
            return RootSearch::Escaped(mid);
        };
        if f.abs() < best_f {
            best_f = f.abs();
            best_c = mid;
        }
        if f == 0.0 {
            break;
        }
        if (f > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
    }
    RootSearch::Found(best_c)
}

fn verify_tol(opts: &ShootingOptions) -> f64 {
    opts.tol_ode / 10.0
}

fn verify_root(
    spec: &ProblemSpec,
    c: f64,
    opts: &ShootingOptions,
) -> Result<SolutionProfile, RejectedRoot> {
    let l = spec.length();
    let traj = ode::integrate(spec, 0.0, 0.0, c, l, verify_tol(opts), opts.cap).map_err(|e| {
        RejectedRoot {
            c,
            reason: format!("re-integration failed: {e}"),
        }
    })?;
    if !traj.reached_end() {
        return Err(RejectedRoot {
            c,
            reason: "trajectory escaped on re-integration".into(),
        });
    }
    let mut profile = SolutionProfile::from_trajectory(Arc::new(traj), 1.0, opts.samples.max(2), c);
    let interior = interior_min(profile.trajectory().unwrap(), l).min(profile.interior_positivity);
    profile.interior_positivity = interior;
    if !(interior > 0.0) {
        return Err(RejectedRoot {
            c,
            reason: format!("u is not positive on the interior (min {interior:e})"),
        });
    }
    if profile.boundary_residual > opts.tol_bvp {
        return Err(RejectedRoot {
            c,
            reason: format!("|u(L)| = {:e} above tolerance", profile.boundary_residual),
        });
    }
    if let Some(q) = opts.quad_n {
        profile.operator_residual = Some(green::operator_residual_profile(spec, &profile, q));
    }
    Ok(profile)
}

/// Positive solutions found by scanning `F(c) = u(L; c)` and bisecting every sign
/// change between non-escaped neighbours.
pub fn find_positive_solutions(
    spec: &ProblemSpec,
    opts: &ShootingOptions,
) -> Result<SolveReport, ShootError> {
    check_range(opts.c_min, opts.c_max, opts.n_scan)?;
    if !(opts.tol_bvp > 0.0 && opts.tol_ode > 0.0 && opts.cap > 0.0) {
        return Err(ShootError::InvalidTolerance);
    }
    let table = sample_slopes(
        spec,
        &uniform(opts.c_min, opts.c_max, opts.n_scan),
        opts.tol_ode,
        opts.cap,
    );
    let table = refine_near_escapes(spec, table, opts);
    let (found, escaped_brackets) = brackets(&table);
    if found.is_empty() {
        return Err(ShootError::NoBracketFound { table });
    }

    let outcomes: Vec<Result<SolutionProfile, RejectedRoot>> = found
        .par_iter()
        .map(|b| match *b {
            Bracket::Exact(c) => verify_root(spec, c, opts),
            Bracket::Sign(a, b) => match bisect(spec, a, b, opts) {
                RootSearch::Found(c) => verify_root(spec, c, opts),
                RootSearch::Escaped(c) => Err(RejectedRoot {
                    c,
                    reason: "bisection met an escaped trajectory".into(),
                }),
                RootSearch::Lost(c) => Err(RejectedRoot {
                    c,
                    reason: "sign change vanished at the verification tolerance".into(),
                }),
            },
        })
        .collect();

    let mut solutions = Vec::new();
    let mut rejected = Vec::new();
    for o in outcomes {
        match o {
            Ok(p) => solutions.push(p),
            Err(r) => rejected.push(r),
        }
    }
    Ok(SolveReport {
        solutions,
        rejected,
        escaped_brackets,
        table,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmallAmplitudeReport {
    /// No accepted positive solution with sup-norm at most `r_small` was found.
    pub holds: bool,
    pub r_small: f64,
    /// Slopes of accepted positive solutions with sup-norm at most `r_small`.
    pub violations: Vec<f64>,
    /// Largest sup-norm among scanned trajectories and bisected roots.
    pub largest_sup_norm: f64,
    pub roots_examined: usize,
}

/// Looks for positive solutions of amplitude at most `r_small` among the given
/// (positive) slopes. The zero slope is the trivial solution and is skipped.
pub fn small_amplitude_scan(
    spec: &ProblemSpec,
    r_small: f64,
    c_grid: &[f64],
    tol_ode: f64,
) -> Result<SmallAmplitudeReport, ShootError> {
    let mut slopes: Vec<f64> = c_grid.iter().copied().filter(|c| *c > 0.0).collect();
    slopes.sort_by(f64::total_cmp);
    slopes.dedup();
    if slopes.len() < 2 || !(r_small > 0.0) {
        return Err(ShootError::InvalidRange {
            c_min: slopes.first().copied().unwrap_or(0.0),
            c_max: slopes.last().copied().unwrap_or(0.0),
            n: slopes.len(),
        });
    }
    let opts = ShootingOptions {
        tol_ode,
        tol_bvp: DEFAULT_TOL_BVP.min(1e-3 * r_small),
        quad_n: None,
        ..Default::default()
    };
    let runs: Vec<(PoincarePoint, f64)> = slopes
        .par_iter()
        .map(|&c| {
            let (p, t) = shoot(spec, c, tol_ode, opts.cap);
            (p, t.map(|t| t.max_abs_u()).unwrap_or(f64::INFINITY))
        })
        .collect();
    let table: Vec<PoincarePoint> = runs.iter().map(|r| r.0).collect();
    let mut largest = runs
        .iter()
        .map(|r| r.1)
        .filter(|s| s.is_finite())
        .fold(0.0, f64::max);

    let (found, _) = brackets(&table);
    let mut violations = Vec::new();
    for b in &found {
        let c = match *b {
            Bracket::Exact(c) => c,
            Bracket::Sign(a, b) => match bisect(spec, a, b, &opts) {
                RootSearch::Found(c) => c,
                RootSearch::Escaped(_) | RootSearch::Lost(_) => continue,
            },
        };
        if let Ok(p) = verify_root(spec, c, &opts) {
            largest = largest.max(p.sup_norm);
            if p.sup_norm <= r_small {
                violations.push(c);
            }
        }
    }
    Ok(SmallAmplitudeReport {
        holds: violations.is_empty(),
        r_small,
        violations,
        largest_sup_norm: largest,
        roots_examined: found.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Nonlinearity, Weight};

    fn cubic(a: f64) -> ProblemSpec {
        ProblemSpec::new(
            Weight::constant(1.0, a).unwrap(),
            Nonlinearity::new(|s| s.powi(3)),
        )
    }

    #[test]
    fn zero_slope_is_equilibrium() {
        let pts = sample_poincare(&cubic(1.0), 0.0, 1.0, 3, 1e-9).unwrap();
        assert_eq!(pts[0].end_state, EndState::Reached { u: 0.0, v: 0.0 });
        assert!(pts.windows(2).all(|w| w[0].c < w[1].c));
        assert_eq!(pts[2].c, 1.0);
    }

    #[test]
    fn invalid_ranges() {
        let s = cubic(1.0);
        assert!(sample_poincare(&s, 1.0, 0.5, 10, 1e-8).is_err());
        assert!(sample_poincare(&s, -1.0, 0.5, 10, 1e-8).is_err());
        assert!(sample_poincare(&s, 0.0, 1.0, 1, 1e-8).is_err());
        assert!(sample_poincare(&s, 0.0, 1.0, 5, 0.0).is_err());
    }

    #[test]
    fn zero_weight_has_no_bracket() {
        let opts = ShootingOptions {
            n_scan: 21,
            ..Default::default()
        }
        .with_range(0.0, 5.0);
        match find_positive_solutions(&cubic(0.0), &opts) {
            Err(ShootError::NoBracketFound { table }) => {
                assert_eq!(table.len(), 21);
                for p in table {
                    let (u, _) = p.end_state.value().unwrap();
                    assert!((u - p.c).abs() <= 1e-12 * p.c.max(1.0));
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn brackets_skip_escapes() {
        let pt = |c: f64, e: EndState| PoincarePoint {
            c,
            end_state: e,
            interior_min: 0.0,
            positive_interior: false,
        };
        let table = vec![
            pt(0.0, EndState::Reached { u: 0.0, v: 0.0 }),
            pt(1.0, EndState::Reached { u: 1.0, v: 0.0 }),
            pt(2.0, EndState::Reached { u: -1.0, v: 0.0 }),
            pt(3.0, EndState::Escaped { x: 0.5 }),
            pt(4.0, EndState::Reached { u: 1.0, v: 0.0 }),
            pt(5.0, EndState::Reached { u: 0.0, v: 0.0 }),
        ];
        let (found, across) = brackets(&table);
        assert_eq!(across, vec![(2.0, 4.0)]);
        assert_eq!(found.len(), 2);
        assert!(matches!(found[0], Bracket::Sign(a, b) if a.c == 1.0 && b.c == 2.0));
        assert!(matches!(found[1], Bracket::Exact(c) if c == 5.0));
    }

    #[test]
    fn poincare_csv_layout() {
        let pts = sample_poincare(&cubic(1.0), 0.0, 2.0, 5, 1e-8).unwrap();
        let mut buf = Vec::new();
        write_poincare_csv(&pts, &mut buf, 17).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "c,uL,vL,escaped,positive_interior");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].ends_with(",false,false"));
    }

    #[test]
    fn small_slopes_in_autonomous_cubic() {
        // For small c, u ≈ c x so u(1) ≈ c > 0 and there is no root.
        let grid: Vec<f64> = crate::problem::log_grid(1e-6, 1e-2, 40);
        let r = small_amplitude_scan(&cubic(1.0), 1e-3, &grid, 1e-10).unwrap();
        assert!(r.holds);
        assert_eq!(r.roots_examined, 0);
        assert!(r.largest_sup_norm <= 1e-2 * (1.0 + 1e-3));
    }
}
