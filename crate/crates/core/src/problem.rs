//! Weights, nonlinearities and the problem descriptor shared by the rest of the crate.
//!
//! A problem is `u'' + a(x) g(u) = 0` on `[0, L]` with `u(0) = u(L) = 0`. The weight `a`
//! may change sign finitely many times; `g` is only required to vanish at zero.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shared scalar evaluator.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Default tolerance for auto-detected sign partitions.
pub const DEFAULT_SIGN_TOLERANCE: f64 = 1e-12;
/// Grid used when a [`ProblemSpec`] detects its own partition.
pub const DEFAULT_PARTITION_GRID: usize = 4096;
/// Auto-detection refuses partitions with more intervals than this.
pub const MAX_PARTITION_INTERVALS: usize = 64;
/// Largest abscissa sampled when estimating `liminf g(s)/s` at infinity.
pub const ASYMPTOTIC_CAP: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("domain length must be positive and finite, got {0}")]
    InvalidLength(f64),
    #[error("weight scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("invalid sign partition: {0}")]
    InvalidPartition(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error(
        "weight is below -{tolerance:e} everywhere on the grid; no interval with a >= 0 exists"
    )]
    NoNonNegativeRegion { tolerance: f64 },
    #[error(
        "detected {0} nonnegativity intervals, more than the supported {MAX_PARTITION_INTERVALS}"
    )]
    TooManyIntervals(usize),
    #[error("partition grid needs at least 16 cells, got {0}")]
    GridTooCoarse(usize),
    #[error("negative sign tolerance {0}")]
    NegativeTolerance(f64),
}

/// A closed interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start && x <= self.end
    }

    /// `n + 1` equispaced points including both endpoints.
    pub fn grid(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let h = self.len() / n as f64;
        (0..=n).map(move |j| {
            if j == n {
                self.end
            } else {
                self.start + h * j as f64
            }
        })
    }
}

/// Ordered, pairwise disjoint intervals on which the weight is nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPartition {
    pub intervals: Vec<Interval>,
    pub tolerance: f64,
}

impl SignPartition {
    pub fn new(intervals: Vec<Interval>, tolerance: f64) -> Result<Self, ProblemError> {
        if intervals.is_empty() {
            return Err(ProblemError::InvalidPartition("no intervals".into()));
        }
        if !(tolerance >= 0.0) {
            return Err(ProblemError::InvalidPartition(format!(
                "tolerance {tolerance}"
            )));
        }
        for (i, iv) in intervals.iter().enumerate() {
            if !(iv.start < iv.end) {
                return Err(ProblemError::InvalidPartition(format!(
                    "interval {i} is degenerate: [{}, {}]",
                    iv.start, iv.end
                )));
            }
            if let Some(next) = intervals.get(i + 1) {
                if !(iv.end < next.start) {
                    return Err(ProblemError::InvalidPartition(format!(
                        "intervals {i} and {} overlap or are out of order",
                        i + 1
                    )));
                }
            }
        }
        Ok(Self {
            intervals,
            tolerance,
        })
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn endpoints(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .flat_map(|iv| [iv.start, iv.end])
            .collect()
    }

    pub fn covers(&self, x: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
    }
}

/// The coefficient `a(x)` on `[0, L]`, multiplied by a positive scale.
#[derive(Clone)]
pub struct Weight {
    length: f64,
    eval: ScalarFn,
    declared: Option<SignPartition>,
    scale: f64,
    kinks: Vec<f64>,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight")
            .field("length", &self.length)
            .field("scale", &self.scale)
            .field("declared", &self.declared)
            .field("kinks", &self.kinks)
            .finish_non_exhaustive()
    }
}

impl Weight {
    pub fn new<F>(length: f64, f: F) -> Result<Self, ProblemError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_arc(length, Arc::new(f))
    }

    pub fn from_arc(length: f64, eval: ScalarFn) -> Result<Self, ProblemError> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(ProblemError::InvalidLength(length));
        }
        Ok(Self {
            length,
            eval,
            declared: None,
            scale: 1.0,
            kinks: Vec::new(),
        })
    }

    pub fn constant(length: f64, value: f64) -> Result<Self, ProblemError> {
        Self::new(length, move |_| value)
    }

    /// Attaches a user-declared sign partition. The partition is validated by the
    /// hypothesis checker, not here.
    pub fn with_partition(mut self, partition: SignPartition) -> Self {
        self.declared = Some(partition);
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self, ProblemError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(ProblemError::InvalidScale(scale));
        }
        self.scale = scale;
        Ok(self)
    }

    /// Abscissae where the weight may fail to be smooth. The integrator steps onto them.
    pub fn with_kinks(mut self, mut kinks: Vec<f64>) -> Self {
        kinks.retain(|x| *x > 0.0 && *x < self.length);
        kinks.extend(self.kinks.iter().copied());
        kinks.sort_by(f64::total_cmp);
        kinks.dedup();
        self.kinks = kinks;
        self
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.scale * (self.eval)(x)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn declared_partition(&self) -> Option<&SignPartition> {
        self.declared.as_ref()
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    fn derived(&self, eval: ScalarFn) -> Weight {
        Weight {
            length: self.length,
            eval,
            declared: None,
            scale: self.scale,
            kinks: self.kinks.clone(),
        }
    }

    /// `a⁺(x) = max(a(x), 0)`, same scale.
    pub fn positive_part(&self) -> Weight {
        let f = self.eval.clone();
        self.derived(Arc::new(move |x| f(x).max(0.0)))
    }

    /// `a⁻(x) = max(-a(x), 0)`, same scale.
    pub fn negative_part(&self) -> Weight {
        let f = self.eval.clone();
        self.derived(Arc::new(move |x| (-f(x)).max(0.0)))
    }

    pub fn abs(&self) -> Weight {
        let f = self.eval.clone();
        self.derived(Arc::new(move |x| f(x).abs()))
    }

    /// `x ↦ a(L - x)`.
    pub fn reflected(&self) -> Weight {
        let f = self.eval.clone();
        let l = self.length;
        let mut w = self.derived(Arc::new(move |x| f(l - x)));
        w.kinks = self.kinks.iter().rev().map(|k| l - k).collect();
        w
    }

    /// Pairs `(x, a(x))` on `n + 1` equispaced points of `[0, L]`.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        Interval::new(0.0, self.length)
            .grid(n)
            .map(|x| (x, self.eval(x)))
            .collect()
    }
}

pub fn positive_part(weight: &Weight) -> Weight {
    weight.positive_part()
}

pub fn negative_part(weight: &Weight) -> Weight {
    weight.negative_part()
}

/// Shrinks a bracket with `inside(lo) != inside(hi)` to width `tol`. The first
/// component keeps the classification of the original `lo`.
fn bisect_boundary<F: Fn(f64) -> bool>(
    inside: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    let lo_inside = inside(lo);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if inside(mid) == lo_inside {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Finds the coarsest sign partition of `weight`: maximal runs of the grid where
/// `a >= -tau`, each containing at least one point with `a > tau`. Endpoints are
/// refined by bisection to a few ulps of `L`, well inside `L / grid_n²`.
pub fn detect_sign_partition(
    weight: &Weight,
    grid_n: usize,
    tau: f64,
) -> Result<SignPartition, PartitionError> {
    if grid_n < 16 {
        return Err(PartitionError::GridTooCoarse(grid_n));
    }
    if !(tau >= 0.0) {
        return Err(PartitionError::NegativeTolerance(tau));
    }
    let l = weight.length();
    let xs: Vec<f64> = Interval::new(0.0, l).grid(grid_n).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| weight.eval(x)).collect();
    let nonneg = |v: f64| v >= -tau;
    let abscissa_tol = (l / (grid_n as f64 * grid_n as f64)).min(4.0 * f64::EPSILON * l);

    let mut intervals = Vec::new();
    let mut j = 0;
    while j < xs.len() {
        if !nonneg(vals[j]) {
            j += 1;
            continue;
        }
        let first = j;
        let mut strict = false;
        while j < xs.len() && nonneg(vals[j]) {
            strict |= vals[j] > tau;
            j += 1;
        }
        let last = j - 1;
        if !strict {
            continue;
        }
        let inside = |x: f64| nonneg(weight.eval(x));
        let start = if first == 0 {
            0.0
        } else {
            bisect_boundary(inside, xs[first], xs[first - 1], abscissa_tol).0
        };
        let end = if last == xs.len() - 1 {
            l
        } else {
            bisect_boundary(inside, xs[last], xs[last + 1], abscissa_tol).0
        };
        intervals.push(Interval::new(start, end));
    }

    if intervals.is_empty() {
        return Err(PartitionError::NoNonNegativeRegion { tolerance: tau });
    }
    if intervals.len() > MAX_PARTITION_INTERVALS {
        return Err(PartitionError::TooManyIntervals(intervals.len()));
    }
    Ok(SignPartition {
        intervals,
        tolerance: tau,
    })
}

/// A grid point that contradicts a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionViolation {
    pub x: f64,
    pub value: f64,
    pub inside: bool,
}

/// Checks `a >= -tau` on the partition and `a <= tau` off it, on `grid_n + 1`
/// equispaced points plus every interval endpoint.
pub fn validate_partition(
    weight: &Weight,
    partition: &SignPartition,
    grid_n: usize,
) -> Result<(), PartitionViolation> {
    let tau = partition.tolerance;
    let mut points: Vec<f64> = Interval::new(0.0, weight.length()).grid(grid_n).collect();
    points.extend(partition.endpoints());
    for x in points {
        let value = weight.eval(x);
        let inside = partition.covers(x);
        let ok = if inside { value >= -tau } else { value <= tau };
        if !ok {
            return Err(PartitionViolation { x, value, inside });
        }
    }
    Ok(())
}

/// A descriptor value that may be infinite. Serialized as a JSON number or as the
/// strings `"+inf"` / `"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LimitRepr", into = "LimitRepr")]
pub enum Limit {
    Finite(f64),
    PosInfinity,
    NegInfinity,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LimitRepr {
    Num(f64),
    Text(String),
}

impl TryFrom<LimitRepr> for Limit {
    type Error = String;

    fn try_from(r: LimitRepr) -> Result<Self, Self::Error> {
        match r {
            LimitRepr::Num(v) => Ok(Limit::from(v)),
            LimitRepr::Text(s) => match s.trim() {
                "inf" | "+inf" | "infinity" | "+infinity" => Ok(Limit::PosInfinity),
                "-inf" | "-infinity" => Ok(Limit::NegInfinity),
                other => other
                    .parse::<f64>()
                    .map(Limit::from)
                    .map_err(|_| format!("expected a number, \"+inf\" or \"-inf\", got {other:?}")),
            },
        }
    }
}

impl From<Limit> for LimitRepr {
    fn from(l: Limit) -> Self {
        match l {
            Limit::Finite(v) => LimitRepr::Num(v),
            Limit::PosInfinity => LimitRepr::Text("+inf".into()),
            Limit::NegInfinity => LimitRepr::Text("-inf".into()),
        }
    }
}

impl From<f64> for Limit {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            Limit::PosInfinity
        } else if v == f64::NEG_INFINITY {
            Limit::NegInfinity
        } else {
            Limit::Finite(v)
        }
    }
}

impl Limit {
    pub fn as_f64(&self) -> f64 {
        match *self {
            Limit::Finite(v) => v,
            Limit::PosInfinity => f64::INFINITY,
            Limit::NegInfinity => f64::NEG_INFINITY,
        }
    }
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Limit::Finite(v) => write!(f, "{v}"),
            Limit::PosInfinity => f.write_str("+inf"),
            Limit::NegInfinity => f.write_str("-inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NearZeroClass {
    NonNegative,
    NonPositive,
    SignChanging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DescriptorSource {
    UserDeclared,
    GridEstimated,
}

/// `liminf_{s→0⁺} g(s)/s`, `limsup_{s→0⁺} g(s)/s` and `liminf_{s→∞} g(s)/s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptors {
    pub g0_inf: Limit,
    pub g0_sup: Limit,
    pub g_infty: Limit,
    pub source: DescriptorSource,
}

impl Descriptors {
    pub fn declared(g0_inf: Limit, g0_sup: Limit, g_infty: Limit) -> Self {
        Self {
            g0_inf,
            g0_sup,
            g_infty,
            source: DescriptorSource::UserDeclared,
        }
    }
}

/// The nonlinearity `g` on `[0, ∞)` with optional user declarations.
#[derive(Clone)]
pub struct Nonlinearity {
    eval: ScalarFn,
    declared_class: Option<NearZeroClass>,
    delta: Option<f64>,
    descriptors: Option<Descriptors>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("declared_class", &self.declared_class)
            .field("delta", &self.delta)
            .field("descriptors", &self.descriptors)
            .finish_non_exhaustive()
    }
}

impl Nonlinearity {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_arc(Arc::new(f))
    }

    pub fn from_arc(eval: ScalarFn) -> Self {
        Self {
            eval,
            declared_class: None,
            delta: None,
            descriptors: None,
        }
    }

    pub fn with_descriptors(mut self, d: Descriptors) -> Self {
        self.descriptors = Some(d);
        self
    }

    pub fn with_class(mut self, class: NearZeroClass) -> Self {
        self.declared_class = Some(class);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        (self.eval)(s)
    }

    /// `g̃(s)`: `g(s)` for `s >= 0`, zero otherwise.
    #[inline]
    pub fn eval_extended(&self, s: f64) -> f64 {
        if s > 0.0 {
            (self.eval)(s)
        } else {
            0.0
        }
    }

    pub fn declared_class(&self) -> Option<NearZeroClass> {
        self.declared_class
    }

    pub fn declared_delta(&self) -> Option<f64> {
        self.delta
    }

    pub fn declared_descriptors(&self) -> Option<&Descriptors> {
        self.descriptors.as_ref()
    }

    pub fn evaluator(&self) -> ScalarFn {
        self.eval.clone()
    }

    /// Near-zero scan radius: the declared value, else `min(1, s₁)` where `s₁` is
    /// the first abscissa of a log grid on `[1e-8, 1]` with `|g| > 1e-3 · max |g|`.
    pub fn default_delta(&self) -> f64 {
        if let Some(d) = self.delta {
            return d;
        }
        let grid = log_grid(1e-8, 1.0, 1024);
        let peak = grid.iter().map(|&s| self.eval(s).abs()).fold(0.0, f64::max);
        if !(peak > 0.0) || !peak.is_finite() {
            return 1.0;
        }
        grid.iter()
            .copied()
            .find(|&s| self.eval(s).abs() > 1e-3 * peak)
            .unwrap_or(1.0)
            .min(1.0)
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("g vanishes at every sample of (0, {delta}]; declare the near-zero class explicitly")]
    Inconclusive { delta: f64 },
    #[error("scan radius must be positive, got {0}")]
    InvalidDelta(f64),
    #[error("near-zero scan needs at least 64 points, got {0}")]
    GridTooCoarse(usize),
}

/// Outcome of [`classify_near_zero`], with the sample points that witness each sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearZeroReport {
    pub class: NearZeroClass,
    pub delta: f64,
    pub positive_witness: Option<f64>,
    pub negative_witness: Option<f64>,
}

/// Sign of `g` on a log grid over `(δ·1e-6, δ]`.
pub fn classify_near_zero(
    g: &Nonlinearity,
    delta: f64,
    grid_n: usize,
) -> Result<NearZeroReport, ClassifyError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(ClassifyError::InvalidDelta(delta));
    }
    if grid_n < 64 {
        return Err(ClassifyError::GridTooCoarse(grid_n));
    }
    let mut pos = None;
    let mut neg = None;
    for s in log_grid(delta * 1e-6, delta, grid_n) {
        let v = g.eval(s);
        if v > 0.0 && pos.is_none() {
            pos = Some(s);
        } else if v < 0.0 && neg.is_none() {
            neg = Some(s);
        }
    }
    let class = match (pos, neg) {
        (Some(_), Some(_)) => NearZeroClass::SignChanging,
        (Some(_), None) => NearZeroClass::NonNegative,
        (None, Some(_)) => NearZeroClass::NonPositive,
        (None, None) => return Err(ClassifyError::Inconclusive { delta }),
    };
    Ok(NearZeroReport {
        class,
        delta,
        positive_witness: pos,
        negative_witness: neg,
    })
}

/// Sampled stand-ins for the three limits: extrema of `g(s)/s` on 512 log-spaced
/// points of `(δ·1e-6, δ]`, and the minimum of `g(s)/s` on `[S/100, S]` with
/// `S = 1e6`. Always tagged [`DescriptorSource::GridEstimated`].
pub fn estimate_asymptotics(g: &Nonlinearity, delta: f64) -> Descriptors {
    let near: Vec<f64> = log_grid(delta * 1e-6, delta, 512)
        .into_iter()
        .map(|s| g.eval(s) / s)
        .collect();
    let lo = near.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = near.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let far = log_grid(ASYMPTOTIC_CAP / 100.0, ASYMPTOTIC_CAP, 256)
        .into_iter()
        .map(|s| g.eval(s) / s)
        .fold(f64::INFINITY, f64::min);
    Descriptors {
        g0_inf: Limit::from(lo),
        g0_sup: Limit::from(hi),
        g_infty: Limit::from(far),
        source: DescriptorSource::GridEstimated,
    }
}

/// Weight and nonlinearity of one Dirichlet problem on `[0, L]`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub weight: Weight,
    pub nonlinearity: Nonlinearity,
    breakpoints: Vec<f64>,
}

impl ProblemSpec {
    /// Builds the problem and records the weight's sign-change abscissae (declared
    /// partition if any, else auto-detected) as mandatory integrator mesh points.
    pub fn new(weight: Weight, nonlinearity: Nonlinearity) -> Self {
        let partition = match weight.declared_partition() {
            Some(p) => Some(p.clone()),
            None => {
                detect_sign_partition(&weight, DEFAULT_PARTITION_GRID, DEFAULT_SIGN_TOLERANCE).ok()
            }
        };
        let l = weight.length();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-14 * l;
        // Kinks are exact user data; an endpoint found by bisection next to one is
        // the same point located approximately, so the kink wins.
        let mut breakpoints: Vec<f64> = weight.kinks().to_vec();
        for e in partition.map(|p| p.endpoints()).unwrap_or_default() {
            if !weight.kinks().iter().any(|&k| close(k, e)) {
                breakpoints.push(e);
            }
        }
        breakpoints.retain(|x| *x > 0.0 && *x < l);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup_by(|a, b| close(*a, *b));
        Self {
            weight,
            nonlinearity,
            breakpoints,
        }
    }

    pub fn length(&self) -> f64 {
        self.weight.length()
    }

    /// Interior abscissae where the right-hand side may be non-smooth.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Declared descriptors, else grid estimates at the default scan radius.
    pub fn descriptors(&self) -> Descriptors {
        match self.nonlinearity.declared_descriptors() {
            Some(d) => *d,
            None => estimate_asymptotics(&self.nonlinearity, self.nonlinearity.default_delta()),
        }
    }

    /// Same problem with the weight multiplied by `scale` (on top of any existing scale).
    pub fn with_weight_scale(&self, scale: f64) -> Result<Self, ProblemError> {
        let s = self.weight.scale() * scale;
        let weight = self.weight.clone().with_scale(s)?;
        Ok(Self {
            weight,
            nonlinearity: self.nonlinearity.clone(),
            breakpoints: self.breakpoints.clone(),
        })
    }
}
