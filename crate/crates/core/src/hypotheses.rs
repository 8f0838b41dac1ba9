//! Verdicts for the four structural hypotheses of the existence result:
//!
//! * H1: the weight is nonnegative on finitely many closed intervals and nonpositive off them;
//! * H2: `g(0) = 0` and `g ≢ 0`;
//! * H3: the growth of `g(s)/s` at zero stays below the relevant first eigenvalue,
//!   with the eigenvalue problem chosen by the sign of `g` near zero;
//! * H4: `liminf g(s)/s` at infinity exceeds the first eigenvalue of `a⁺` on each interval.
//!
//! Strict inequalities are decided with a band of `10 · tol · λ` around the
//! threshold; comparisons inside the band are reported as indeterminate.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::{first_eigenvalue, EigenError, EigenResult, WeightKind, DEFAULT_EIGEN_TOL};
use crate::problem::{
    classify_near_zero, detect_sign_partition, validate_partition, DescriptorSource, Descriptors,
    Interval, Limit, NearZeroClass, ProblemSpec, SignPartition, Weight, DEFAULT_PARTITION_GRID,
    DEFAULT_SIGN_TOLERANCE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    PassAdvisory,
    Indeterminate,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::PassAdvisory)
    }

    fn worst(self, other: Verdict) -> Verdict {
        self.max(other)
    }

    fn rank(self) -> u8 {
        match self {
            Verdict::Pass => 0,
            Verdict::PassAdvisory => 1,
            Verdict::Indeterminate => 2,
            Verdict::Fail => 3,
        }
    }
}

impl PartialOrd for Verdict {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Verdict {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::PassAdvisory => "pass (advisory)",
            Verdict::Indeterminate => "indeterminate",
            Verdict::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    /// Relative tolerance of every eigenvalue solve.
    pub tol: f64,
    pub partition_grid: usize,
    pub sign_tolerance: f64,
    /// Points in the near-zero sign scan and in the `g ≢ 0` scan.
    pub scan_grid: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_EIGEN_TOL,
            partition_grid: DEFAULT_PARTITION_GRID,
            sign_tolerance: DEFAULT_SIGN_TOLERANCE,
            scan_grid: 256,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct H1Report {
    pub verdict: Verdict,
    pub partition: Option<SignPartition>,
    pub declared: bool,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct H2Report {
    pub verdict: Verdict,
    pub g_at_zero: f64,
    pub nonzero_witness: Option<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct H3Report {
    pub verdict: Verdict,
    pub case: Option<NearZeroClass>,
    pub class_declared: bool,
    pub g0_inf: Limit,
    pub g0_sup: Limit,
    pub threshold: Option<f64>,
    pub eigen: Option<EigenResult>,
    /// Distance from the descriptor(s) to the threshold; positive when satisfied.
    pub margin: Option<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct H4Entry {
    pub interval: Interval,
    pub lambda: Option<f64>,
    pub eigen: Option<EigenResult>,
    /// `g_∞ − λ₁ⁱ`.
    pub margin: Option<f64>,
    pub verdict: Verdict,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct H4Report {
    pub verdict: Verdict,
    pub g_infty: Limit,
    pub entries: Vec<H4Entry>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub h1: H1Report,
    pub h2: H2Report,
    pub h3: H3Report,
    pub h4: H4Report,
    pub overall: Verdict,
    pub warnings: Vec<String>,
}

/// Verdict for "`margin > 0`" given an eigenvalue computed to relative `tol`.
fn judge(margin: f64, lambda: f64, tol: f64, source: DescriptorSource) -> Verdict {
    let band = 10.0 * tol * lambda;
    if margin > band {
        match source {
            DescriptorSource::UserDeclared => Verdict::Pass,
            DescriptorSource::GridEstimated => Verdict::PassAdvisory,
        }
    } else if margin < -band {
        Verdict::Fail
    } else {
        Verdict::Indeterminate
    }
}

fn positive_part_with_kinks(spec: &ProblemSpec) -> Weight {
    spec.weight
        .positive_part()
        .with_kinks(spec.breakpoints().to_vec())
}

/// Declared partition (validated) or the auto-detected one.
pub fn check_h1(spec: &ProblemSpec, opts: &CheckOptions) -> H1Report {
    let w = &spec.weight;
    if let Some(p) = w.declared_partition() {
        return match validate_partition(w, p, opts.partition_grid) {
            Ok(()) => H1Report {
                verdict: Verdict::Pass,
                partition: Some(p.clone()),
                declared: true,
                message: None,
            },
            Err(v) => H1Report {
                verdict: Verdict::Fail,
                partition: Some(p.clone()),
                declared: true,
                message: Some(format!(
                    "declared partition violated at x = {}: a(x) = {:e} ({} an interval)",
                    v.x,
                    v.value,
                    if v.inside { "inside" } else { "outside" }
                )),
            },
        };
    }
    match detect_sign_partition(w, opts.partition_grid, opts.sign_tolerance) {
        Ok(p) => H1Report {
            verdict: Verdict::Pass,
            partition: Some(p),
            declared: false,
            message: None,
        },
        Err(e) => H1Report {
            verdict: Verdict::Fail,
            partition: None,
            declared: false,
            message: Some(e.to_string()),
        },
    }
}

pub fn check_h2(spec: &ProblemSpec, opts: &CheckOptions) -> H2Report {
    let g = &spec.nonlinearity;
    let g0 = g.eval(0.0);
    let scan = crate::problem::log_grid(1e-8, 1e3, opts.scan_grid.max(64));
    let witness = scan.into_iter().find(|&s| g.eval(s) != 0.0);
    let (verdict, message) = match (g0 == 0.0, witness) {
        (false, _) => (Verdict::Fail, Some(format!("g(0) = {g0:e}, not 0"))),
        (true, None) => (
            Verdict::Fail,
            Some("g vanishes on the whole scan grid".to_string()),
        ),
        (true, Some(_)) => (Verdict::Pass, None),
    };
    H2Report {
        verdict,
        g_at_zero: g0,
        nonzero_witness: witness,
        message,
    }
}

/// Growth at zero, against `λ₀⁺`, `λ₀⁻` or `λ₀` depending on the near-zero sign class.
pub fn check_h3(spec: &ProblemSpec, opts: &CheckOptions) -> H3Report {
    check_h3_with(spec, opts, &spec.descriptors())
}

fn check_h3_with(spec: &ProblemSpec, opts: &CheckOptions, d: &Descriptors) -> H3Report {
    let g = &spec.nonlinearity;
    let mut report = H3Report {
        verdict: Verdict::Indeterminate,
        case: None,
        class_declared: g.declared_class().is_some(),
        g0_inf: d.g0_inf,
        g0_sup: d.g0_sup,
        threshold: None,
        eigen: None,
        margin: None,
        message: None,
    };
    let class = match g.declared_class() {
        Some(c) => c,
        None => match classify_near_zero(g, g.default_delta(), opts.scan_grid) {
            Ok(r) => r.class,
            Err(e) => {
                report.message = Some(e.to_string());
                return report;
            }
        },
    };
    report.case = Some(class);

    let l = spec.length();
    let whole = Interval::new(0.0, l);
    let bps = spec.breakpoints().to_vec();
    let (w, kind) = match class {
        NearZeroClass::NonNegative => (spec.weight.positive_part(), WeightKind::PositivePart),
        NearZeroClass::NonPositive => (spec.weight.negative_part(), WeightKind::NegativePart),
        NearZeroClass::SignChanging => (spec.weight.abs(), WeightKind::AbsoluteValue),
    };
    let eig = match first_eigenvalue(&w.with_kinks(bps), whole, kind, opts.tol) {
        Ok(e) => e,
        Err(EigenError::WeightVanishes(_)) => {
            report.verdict = Verdict::Fail;
            report.message = Some(format!("{kind:?} weight vanishes identically on [0, L]"));
            return report;
        }
        Err(e) => {
            report.message = Some(e.to_string());
            return report;
        }
    };
    let lambda = eig.lambda;
    let (inf, sup) = (d.g0_inf.as_f64(), d.g0_sup.as_f64());
    let margin = match class {
        NearZeroClass::NonNegative => lambda - sup,
        NearZeroClass::NonPositive => inf + lambda,
        NearZeroClass::SignChanging => (lambda - sup).min(inf + lambda),
    };
    report.threshold = Some(lambda);
    report.eigen = Some(eig);
    report.margin = Some(margin);
    report.verdict = judge(margin, lambda, opts.tol, d.source);
    if class == NearZeroClass::SignChanging && inf > sup {
        report.verdict = Verdict::Fail;
        report.message = Some(format!(
            "inconsistent descriptors: g0_inf = {inf} > g0_sup = {sup}"
        ));
    } else if report.verdict == Verdict::Fail {
        report.message = Some(format!(
            "growth at zero violates the eigenvalue bound {lambda} (margin {margin:e})"
        ));
    }
    report
}

fn resolve_partition(spec: &ProblemSpec, opts: &CheckOptions) -> Result<SignPartition, String> {
    let h1 = check_h1(spec, opts);
    match (h1.verdict, h1.partition) {
        (Verdict::Pass, Some(p)) => Ok(p),
        (_, _) => Err(h1.message.unwrap_or_else(|| "no sign partition".into())),
    }
}

/// First eigenvalue of `a⁺` on each nonnegativity interval.
fn interval_eigenvalues(
    spec: &ProblemSpec,
    partition: &SignPartition,
    tol: f64,
) -> Vec<(Interval, Result<EigenResult, EigenError>)> {
    let w = positive_part_with_kinks(spec);
    partition
        .intervals
        .par_iter()
        .map(|&iv| {
            (
                iv,
                first_eigenvalue(&w, iv, WeightKind::PositivePartOnSubinterval, tol),
            )
        })
        .collect()
}

/// Growth at infinity against `λ₁ⁱ` on every interval of the sign partition.
pub fn check_h4(spec: &ProblemSpec, opts: &CheckOptions) -> H4Report {
    check_h4_with(spec, opts, &spec.descriptors())
}

fn check_h4_with(spec: &ProblemSpec, opts: &CheckOptions, d: &Descriptors) -> H4Report {
    let g_infty = d.g_infty;
    let partition = match resolve_partition(spec, opts) {
        Ok(p) => p,
        Err(msg) => {
            return H4Report {
                verdict: Verdict::Fail,
                g_infty,
                entries: Vec::new(),
                message: Some(format!("no nonnegativity interval: {msg}")),
            }
        }
    };
    let entries: Vec<H4Entry> = interval_eigenvalues(spec, &partition, opts.tol)
        .into_iter()
        .map(|(interval, res)| match res {
            Ok(e) => {
                let lambda = e.lambda;
                let (margin, verdict) = match g_infty {
                    Limit::PosInfinity => (
                        f64::INFINITY,
                        match d.source {
                            DescriptorSource::UserDeclared => Verdict::Pass,
                            DescriptorSource::GridEstimated => Verdict::PassAdvisory,
                        },
                    ),
                    other => {
                        let m = other.as_f64() - lambda;
                        (m, judge(m, lambda, opts.tol, d.source))
                    }
                };
                let message = (verdict == Verdict::Fail)
                    .then(|| format!("g_infty = {g_infty} does not exceed {lambda}"));
                H4Entry {
                    interval,
                    lambda: Some(lambda),
                    eigen: Some(e),
                    margin: Some(margin),
                    verdict,
                    message,
                }
            }
            Err(err) => H4Entry {
                interval,
                lambda: None,
                eigen: None,
                margin: None,
                verdict: if matches!(err, EigenError::WeightVanishes(_)) {
                    Verdict::Fail
                } else {
                    Verdict::Indeterminate
                },
                message: Some(err.to_string()),
            },
        })
        .collect();
    let verdict = entries
        .iter()
        .map(|e| e.verdict)
        .fold(Verdict::Pass, Verdict::worst);
    H4Report {
        verdict,
        g_infty,
        entries,
        message: None,
    }
}

/// Runs H1–H4 and aggregates. Never fails: problems surface as verdicts.
pub fn check_all(spec: &ProblemSpec, opts: &CheckOptions) -> HypothesisReport {
    let d = spec.descriptors();
    let h1 = check_h1(spec, opts);
    let h2 = check_h2(spec, opts);
    let h3 = check_h3_with(spec, opts, &d);
    let h4 = check_h4_with(spec, opts, &d);
    let mut warnings = Vec::new();
    if d.source == DescriptorSource::GridEstimated {
        warnings.push(
            "g0_inf, g0_sup and g_infty are grid estimates, not limits; declare them to obtain a definite verdict"
                .to_string(),
        );
    }
    if !h3.class_declared {
        if let Some(c) = h3.case {
            warnings.push(format!(
                "near-zero sign class {c:?} was classified from samples"
            ));
        }
    }
    let mut overall = [h1.verdict, h2.verdict, h3.verdict, h4.verdict]
        .into_iter()
        .fold(Verdict::Pass, Verdict::worst);
    if overall == Verdict::Pass && d.source == DescriptorSource::GridEstimated {
        overall = Verdict::PassAdvisory;
    }
    HypothesisReport {
        h1,
        h2,
        h3,
        h4,
        overall,
        warnings,
    }
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "H1  {}", self.h1.verdict)?;
        if let Some(p) = &self.h1.partition {
            for (i, iv) in p.intervals.iter().enumerate() {
                writeln!(f, "    I{} = [{:.12}, {:.12}]", i + 1, iv.start, iv.end)?;
            }
        }
        writeln!(f, "H2  {}", self.h2.verdict)?;
        write!(f, "H3  {}", self.h3.verdict)?;
        if let (Some(c), Some(t), Some(m)) = (self.h3.case, self.h3.threshold, self.h3.margin) {
            write!(f, "  case {c:?}, eigenvalue {t:.10}, margin {m:.6e}")?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "H4  {}  (g_infty = {})",
            self.h4.verdict, self.h4.g_infty
        )?;
        for e in &self.h4.entries {
            match e.lambda {
                Some(l) => writeln!(
                    f,
                    "    [{:.6}, {:.6}]  lambda1 = {l:.10}  {}",
                    e.interval.start, e.interval.end, e.verdict
                )?,
                None => writeln!(
                    f,
                    "    [{:.6}, {:.6}]  {}",
                    e.interval.start, e.interval.end, e.verdict
                )?,
            }
        }
        for m in [
            &self.h1.message,
            &self.h2.message,
            &self.h3.message,
            &self.h4.message,
        ]
        .into_iter()
        .flatten()
        {
            writeln!(f, "    note: {m}")?;
        }
        writeln!(f, "overall: {}", self.overall)?;
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThresholdError {
    #[error("threshold scan needs a finite positive g_infty, got {0}")]
    NeedsFiniteGrowth(Limit),
    #[error("{0}")]
    Partition(String),
    #[error("eigenvalue on [{}, {}]: {err}", .interval.start, .interval.end)]
    Eigen { interval: Interval, err: EigenError },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaScan {
    /// `max_i λ₁ⁱ / g_∞`: the weight scale above which growth at infinity holds.
    pub lambda_star: f64,
    pub g_infty: f64,
    pub interval_eigenvalues: Vec<f64>,
    /// H4 verdict recomputed directly at each grid scale.
    pub grid: Vec<(f64, Verdict)>,
    pub smallest_passing: Option<f64>,
}

/// Threshold in the weight scale for H4, from the scaling law `λ(s·w) = λ(w)/s`,
/// plus direct H4 verdicts on `lambda_grid`.
pub fn lambda_threshold_scan(
    spec: &ProblemSpec,
    lambda_grid: &[f64],
    opts: &CheckOptions,
) -> Result<LambdaScan, ThresholdError> {
    let d = spec.descriptors();
    let g_infty = match d.g_infty {
        Limit::Finite(v) if v > 0.0 => v,
        other => return Err(ThresholdError::NeedsFiniteGrowth(other)),
    };
    let partition = resolve_partition(spec, opts).map_err(ThresholdError::Partition)?;
    let mut eigs = Vec::new();
    for (interval, r) in interval_eigenvalues(spec, &partition, opts.tol) {
        eigs.push(
            r.map_err(|err| ThresholdError::Eigen { interval, err })?
                .lambda,
        );
    }
    let lambda_star = eigs.iter().copied().fold(0.0, f64::max) / g_infty;

    let mut grid = Vec::with_capacity(lambda_grid.len());
    for &s in lambda_grid {
        let verdict = match spec.with_weight_scale(s) {
            Ok(scaled) => check_h4_with(&scaled, opts, &d).verdict,
            Err(_) => Verdict::Fail,
        };
        grid.push((s, verdict));
    }
    let smallest_passing = grid
        .iter()
        .filter(|(_, v)| v.passed())
        .map(|(s, _)| *s)
        .fold(None, |acc: Option<f64>, s| {
            Some(acc.map_or(s, |a| a.min(s)))
        });
    Ok(LambdaScan {
        lambda_star,
        g_infty,
        interval_eigenvalues: eigs,
        grid,
        smallest_passing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Nonlinearity;
    use std::f64::consts::PI;

    fn declared(g: Nonlinearity, inf: f64, sup: f64, infty: Limit) -> Nonlinearity {
        g.with_descriptors(Descriptors::declared(
            Limit::Finite(inf),
            Limit::Finite(sup),
            infty,
        ))
    }

    #[test]
    fn constructed_h3_violation() {
        let tp = 2.0 * PI * PI;
        let g = declared(
            Nonlinearity::new(move |s| tp * s + s.powi(3)),
            tp,
            tp,
            Limit::PosInfinity,
        );
        let spec = ProblemSpec::new(Weight::constant(1.0, 1.0).unwrap(), g);
        let r = check_all(&spec, &CheckOptions::default());
        assert_eq!(r.h3.case, Some(NearZeroClass::NonNegative));
        assert_eq!(r.h3.verdict, Verdict::Fail);
        assert!((r.h3.margin.unwrap() + PI * PI).abs() < 1e-6);
        assert_eq!(r.h4.verdict, Verdict::Pass);
        assert_eq!(r.overall, Verdict::Fail);
    }

    #[test]
    fn constant_weight_square() {
        let g = declared(Nonlinearity::new(|s| s * s), 0.0, 0.0, Limit::PosInfinity);
        let spec = ProblemSpec::new(Weight::constant(1.0, 1.0).unwrap(), g);
        let h4 = check_h4(&spec, &CheckOptions::default());
        assert_eq!(h4.entries.len(), 1);
        assert!((h4.entries[0].lambda.unwrap() - PI * PI).abs() < 1e-6);
        assert_eq!(h4.verdict, Verdict::Pass);
    }

    #[test]
    fn zero_nonlinearity_fails_h2() {
        let spec = ProblemSpec::new(
            Weight::constant(1.0, 1.0).unwrap(),
            Nonlinearity::new(|_| 0.0),
        );
        let r = check_all(&spec, &CheckOptions::default());
        assert_eq!(r.h2.verdict, Verdict::Fail);
        assert_eq!(r.overall, Verdict::Fail);
    }

    #[test]
    fn negative_weight_fails_h4() {
        let g = declared(Nonlinearity::new(|s| s * s), 0.0, 0.0, Limit::PosInfinity);
        let spec = ProblemSpec::new(Weight::constant(1.0, -1.0).unwrap(), g);
        let r = check_all(&spec, &CheckOptions::default());
        assert_eq!(r.h1.verdict, Verdict::Fail);
        assert_eq!(r.h4.verdict, Verdict::Fail);
        assert!(r
            .h4
            .message
            .as_deref()
            .unwrap()
            .contains("no nonnegativity interval"));
        // a⁺ ≡ 0 as well.
        assert_eq!(r.h3.verdict, Verdict::Fail);
    }

    #[test]
    fn small_growth_at_infinity_fails() {
        let w = Weight::new(1.0, |x| (3.0 * PI * x).sin()).unwrap();
        let g = declared(
            Nonlinearity::new(|s| s * s.min(1.0)),
            0.0,
            0.0,
            Limit::Finite(1.0),
        );
        let r = check_h4(&ProblemSpec::new(w, g), &CheckOptions::default());
        assert_eq!(r.entries.len(), 2);
        assert!(r.entries.iter().all(|e| e.verdict == Verdict::Fail));
    }

    #[test]
    fn estimated_descriptors_cap_verdict() {
        let spec = ProblemSpec::new(
            Weight::constant(1.0, 1.0).unwrap(),
            Nonlinearity::new(|s| s * s),
        );
        let r = check_all(&spec, &CheckOptions::default());
        assert_eq!(r.overall, Verdict::PassAdvisory);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn band_around_threshold_is_indeterminate() {
        let l = PI * PI;
        let g = declared(
            Nonlinearity::new(|s| s * s),
            0.0,
            0.0,
            Limit::Finite(l * (1.0 + 1e-9)),
        );
        let spec = ProblemSpec::new(Weight::constant(1.0, 1.0).unwrap(), g);
        assert_eq!(
            check_h4(&spec, &CheckOptions::default()).verdict,
            Verdict::Indeterminate
        );
    }

    #[test]
    fn threshold_for_constant_weight() {
        let g = declared(Nonlinearity::new(|s| s * s), 0.0, 0.0, Limit::Finite(1.0));
        let spec = ProblemSpec::new(Weight::constant(1.0, 1.0).unwrap(), g);
        let scan = lambda_threshold_scan(&spec, &[5.0, 9.0, 10.0, 20.0], &CheckOptions::default())
            .unwrap();
        assert!((scan.lambda_star - PI * PI).abs() < 1e-6);
        let verdicts: Vec<bool> = scan.grid.iter().map(|(_, v)| v.passed()).collect();
        assert_eq!(verdicts, vec![false, false, true, true]);
        assert_eq!(scan.smallest_passing, Some(10.0));

        let inf = declared(Nonlinearity::new(|s| s * s), 0.0, 0.0, Limit::PosInfinity);
        let spec = ProblemSpec::new(Weight::constant(1.0, 1.0).unwrap(), inf);
        assert!(lambda_threshold_scan(&spec, &[1.0], &CheckOptions::default()).is_err());
    }

    #[test]
    fn report_round_trips_through_json() {
        let g = declared(Nonlinearity::new(|s| s * s), 0.0, 0.0, Limit::PosInfinity);
        let w = Weight::new(1.0, |x| (3.0 * PI * x).sin()).unwrap();
        let r = check_all(&ProblemSpec::new(w, g), &CheckOptions::default());
        let json = serde_json::to_string_pretty(&r).unwrap();
        for key in [
            "\"h1\"",
            "\"h2\"",
            "\"h3\"",
            "\"h4\"",
            "\"overall\"",
            "\"warnings\"",
        ] {
            assert!(json.contains(key));
        }
        let back: HypothesisReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.overall, r.overall);
        assert_eq!(back.h3.verdict, r.h3.verdict);
        assert_eq!(
            back.h4
                .entries
                .iter()
                .map(|e| e.verdict)
                .collect::<Vec<_>>(),
            r.h4.entries.iter().map(|e| e.verdict).collect::<Vec<_>>()
        );
        assert!(r.to_string().contains("overall: pass"));
    }
}
