//! Runs one task entirely in memory and returns the report plus the CSV artifacts.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use indefbvp::hypotheses::{check_h1, LambdaScan};
use indefbvp::problem::log_grid;
use indefbvp::radial::DEFAULT_RESIDUAL_GRIDS;
use indefbvp::shooting::{
    write_poincare_csv, EndState, PoincarePoint, RejectedRoot, SmallAmplitudeReport,
};
use indefbvp::{
    check_all, eigenfunction, find_positive_solutions, first_eigenvalue, lambda_threshold_scan,
    sample_poincare, small_amplitude_scan, solve_radial, CheckOptions, HypothesisReport, Interval,
    ProblemSpec, ShootingOptions, SolutionProfile, Verdict, Weight, WeightKind,
};
use serde::Serialize;

use crate::config::{Config, ProblemEcho, RawTask, SmallAmplitude, TaskName};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    HypothesesFailed,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub task: TaskName,
    pub status: Status,
    pub problem: ProblemEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<HypothesisReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<EigenEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poincare: Option<PoincareSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radial: Option<RadialSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_scan: Option<LambdaScan>,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct EigenEntry {
    pub kind: WeightKind,
    pub interval: Interval,
    pub lambda: Option<f64>,
    pub residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SolutionSummary {
    pub initial_slope: f64,
    pub boundary_residual: f64,
    pub interior_min: f64,
    pub sup_norm: f64,
    pub operator_residual: Option<f64>,
    pub file: Option<String>,
}

impl SolutionSummary {
    fn new(p: &SolutionProfile, file: Option<String>) -> Self {
        Self {
            initial_slope: p.initial_slope,
            boundary_residual: p.boundary_residual,
            interior_min: p.interior_positivity,
            sup_norm: p.sup_norm,
            operator_residual: p.operator_residual,
            file,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub c_min: f64,
    pub c_max: f64,
    pub n_scan: usize,
    pub tol_bvp: f64,
    pub tol_ode: f64,
    pub solutions: Vec<SolutionSummary>,
    pub rejected: Vec<RejectedRoot>,
    pub escaped_brackets: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub small_amplitude: Option<SmallAmplitudeReport>,
}

#[derive(Debug, Serialize)]
pub struct PoincareSummary {
    pub c_min: f64,
    pub c_max: f64,
    pub rows: usize,
    pub reached: usize,
    pub escaped: usize,
    /// Consecutive reached samples where `u(L)` changes sign.
    pub sign_changes: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct RadialSummary {
    pub dim: u32,
    pub r1: f64,
    pub r2: f64,
    /// Length `h(r2)` of the transformed interval.
    pub length_t: f64,
    pub solution_t: SolutionSummary,
    pub boundary: [f64; 2],
    pub residuals: Vec<indefbvp::radial::ResidualLevel>,
    pub observed_orders: Vec<f64>,
}

pub struct Run {
    pub report: Report,
    /// CSV artifacts as `(file name, contents)`.
    pub csv: Vec<(String, Vec<u8>)>,
    /// Human-readable summary for the terminal.
    pub summary: String,
}

fn check_options(task: &RawTask) -> CheckOptions {
    let mut o = CheckOptions::default();
    if let Some(t) = task.tol {
        o.tol = t;
    }
    o
}

fn shooting_options(task: &RawTask) -> ShootingOptions {
    let mut o = ShootingOptions::default();
    o.c_min = task.c_min.unwrap_or(o.c_min);
    o.c_max = task.c_max.unwrap_or(o.c_max);
    o.n_scan = task.n_scan.unwrap_or(o.n_scan);
    o.tol_bvp = task.tol_bvp.unwrap_or(o.tol_bvp);
    o.tol_ode = task.tol_ode.unwrap_or(o.tol_ode);
    o.samples = task.samples.unwrap_or(o.samples);
    if let Some(q) = task.quad_n {
        o.quad_n = (q > 0).then_some(q);
    }
    o
}

struct Csv {
    files: Vec<(String, Vec<u8>)>,
    enabled: bool,
    precision: usize,
}

impl Csv {
    /// Renders a file and returns its name, or `None` when CSV output is off.
    fn add<F>(&mut self, name: &str, render: F) -> Result<Option<String>>
    where
        F: FnOnce(&mut Vec<u8>, usize) -> std::io::Result<()>,
    {
        if !self.enabled {
            return Ok(None);
        }
        let mut buf = Vec::new();
        render(&mut buf, self.precision).with_context(|| format!("rendering {name}"))?;
        self.files.push((name.to_string(), buf));
        Ok(Some(name.to_string()))
    }
}

fn num(v: f64, precision: usize) -> String {
    format!("{:.*e}", precision.max(1) - 1, v)
}

pub fn run(cfg: Config) -> Result<Run> {
    let Config {
        task_name,
        task,
        spec,
        radial,
        echo,
        output,
        warnings,
    } = cfg;
    let mut csv = Csv {
        files: Vec::new(),
        enabled: output.formats.csv,
        precision: output.precision,
    };
    let mut report = Report {
        task: task_name,
        status: Status::Ok,
        problem: echo,
        hypotheses: None,
        eigenvalues: None,
        solve: None,
        poincare: None,
        radial: None,
        lambda_scan: None,
        warnings,
        files: Vec::new(),
    };
    let mut summary = String::new();

    match task_name {
        TaskName::Check => {
            let h = check_all(&spec, &check_options(&task));
            let rows = hypothesis_eigenvalues(&h);
            csv.add("eigenvalues.csv", |w, p| write_eigen_csv(w, &rows, p))?;
            write!(summary, "{h}")?;
            finish_hypotheses(&mut report, h);
        }
        TaskName::Solve => {
            let h = check_all(&spec, &check_options(&task));
            write!(summary, "{h}")?;
            let failed = h.overall == Verdict::Fail;
            finish_hypotheses(&mut report, h);
            if failed {
                summary.push_str("hypotheses fail; not solving\n");
            } else {
                let opts = shooting_options(&task);
                let s = solve(&spec, &opts, task.small_amplitude, &mut csv)?;
                for (i, sol) in s.solutions.iter().enumerate() {
                    writeln!(
                        summary,
                        "solution {}: c = {}, |u(L)| = {:.3e}, min interior u = {:.6e}, sup = {:.6e}",
                        i + 1,
                        sol.initial_slope,
                        sol.boundary_residual,
                        sol.interior_min,
                        sol.sup_norm
                    )?;
                }
                if let Some(sa) = &s.small_amplitude {
                    writeln!(
                        summary,
                        "small-amplitude scan: holds = {} (r_small = {})",
                        sa.holds, sa.r_small
                    )?;
                }
                report.solve = Some(s);
            }
        }
        TaskName::Poincare => {
            let opts = shooting_options(&task);
            let pts = sample_poincare(&spec, opts.c_min, opts.c_max, opts.n_scan, opts.tol_ode)?;
            csv.add("poincare.csv", |w, p| write_poincare_csv(&pts, w, p))?;
            let p = poincare_summary(&pts, &opts);
            writeln!(
                summary,
                "{} samples on [{}, {}]: {} reached, {} escaped, {} sign changes of u(L)",
                p.rows,
                p.c_min,
                p.c_max,
                p.reached,
                p.escaped,
                p.sign_changes.len()
            )?;
            report.poincare = Some(p);
        }
        TaskName::Eigen => {
            let tol = task.tol.unwrap_or(CheckOptions::default().tol);
            let entries = match task.interval {
                Some([a, b]) => {
                    let kind = task.kind.unwrap_or(WeightKind::PositivePart);
                    let iv = Interval::new(a, b);
                    let res = first_eigenvalue(&weight_for(&spec.weight, kind), iv, kind, tol)
                        .with_context(|| format!("eigenvalue on [{a}, {b}]"))?;
                    let n = task.eigenfunction_samples.unwrap_or(1000);
                    let phi = eigenfunction(&res, n).context("eigenfunction")?;
                    csv.add("eigenfunction.csv", |w, p| phi.write_csv(w, p))?;
                    vec![EigenEntry {
                        kind,
                        interval: iv,
                        lambda: Some(res.lambda),
                        residual: Some(res.residual),
                        error: None,
                    }]
                }
                None => all_eigenvalues(&spec, tol),
            };
            csv.add("eigenvalues.csv", |w, p| write_eigen_csv(w, &entries, p))?;
            for e in &entries {
                match (e.lambda, &e.error) {
                    (Some(l), _) => writeln!(
                        summary,
                        "{} on [{:.6}, {:.6}]: {l}",
                        label(&e.kind),
                        e.interval.start,
                        e.interval.end
                    )?,
                    (None, Some(err)) => writeln!(summary, "{}: {err}", label(&e.kind))?,
                    (None, None) => {}
                }
            }
            report.eigenvalues = Some(entries);
        }
        TaskName::Radial => {
            let rp = radial.expect("validated at parse time");
            let h = check_all(&spec, &check_options(&task));
            write!(summary, "{h}")?;
            let failed = h.overall == Verdict::Fail;
            finish_hypotheses(&mut report, h);
            if failed {
                summary.push_str("hypotheses fail on the transformed problem; not solving\n");
            } else {
                let opts = shooting_options(&task);
                let grids = task
                    .residual_grids
                    .clone()
                    .unwrap_or(DEFAULT_RESIDUAL_GRIDS.to_vec());
                let sol = solve_radial(&rp, &opts, &grids)?;
                csv.add("radial.csv", |w, p| sol.write_csv(w, p))?;
                let file_t = csv.add("transformed.csv", |w, p| sol.profile_t.write_csv(w, p))?;
                if let Some(n) = task.slice_n {
                    csv.add("slice.csv", |w, p| sol.write_slice_csv(w, n, p))?;
                }
                writeln!(
                    summary,
                    "radial solution: N = {}, w(R1) = {:.3e}, w(R2) = {:.3e}, observed orders {:?}",
                    sol.dim, sol.boundary[0], sol.boundary[1], sol.observed_orders
                )?;
                report.radial = Some(RadialSummary {
                    dim: sol.dim,
                    r1: sol.r1,
                    r2: sol.r2,
                    length_t: spec.length(),
                    solution_t: SolutionSummary::new(&sol.profile_t, file_t),
                    boundary: sol.boundary,
                    residuals: sol.residuals.clone(),
                    observed_orders: sol.observed_orders.clone(),
                });
            }
        }
        TaskName::LambdaScan => {
            let opts = check_options(&task);
            let scales = match &task.scales {
                Some(s) => s.clone(),
                None => {
                    let star = lambda_threshold_scan(&spec, &[], &opts)?.lambda_star;
                    [0.5, 0.9, 0.99, 1.01, 1.1, 2.0]
                        .iter()
                        .map(|f| f * star)
                        .collect()
                }
            };
            if let Some(bad) = scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
                bail!("task.scales must be positive and finite, got {bad}");
            }
            let scan = lambda_threshold_scan(&spec, &scales, &opts)?;
            csv.add("lambda_scan.csv", |w, p| write_lambda_csv(w, &scan, p))?;
            writeln!(
                summary,
                "lambda* = {} (g_infty = {})",
                scan.lambda_star, scan.g_infty
            )?;
            for (s, v) in &scan.grid {
                writeln!(summary, "  scale {s}: {v}")?;
            }
            report.lambda_scan = Some(scan);
        }
    }

    for w in &report.warnings {
        writeln!(summary, "warning: {w}")?;
    }
    report.files = csv.files.iter().map(|(n, _)| n.clone()).collect();
    Ok(Run {
        report,
        csv: csv.files,
        summary,
    })
}

/// The serialized name of a unit enum variant, such as `pass-advisory`.
fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn write_lambda_csv(w: &mut Vec<u8>, scan: &LambdaScan, p: usize) -> std::io::Result<()> {
    use std::io::Write;
    writeln!(w, "scale,verdict")?;
    for (s, v) in &scan.grid {
        writeln!(w, "{},{}", num(*s, p), label(v))?;
    }
    Ok(())
}

fn finish_hypotheses(report: &mut Report, h: HypothesisReport) {
    if h.overall == Verdict::Fail {
        report.status = Status::HypothesesFailed;
    }
    report.hypotheses = Some(h);
}

fn weight_for(w: &Weight, kind: WeightKind) -> Weight {
    match kind {
        WeightKind::PositivePart | WeightKind::PositivePartOnSubinterval => w.positive_part(),
        WeightKind::NegativePart => w.negative_part(),
        WeightKind::AbsoluteValue => w.abs(),
    }
}

fn entry(w: &Weight, iv: Interval, kind: WeightKind, tol: f64) -> EigenEntry {
    match first_eigenvalue(&weight_for(w, kind), iv, kind, tol) {
        Ok(r) => EigenEntry {
            kind,
            interval: iv,
            lambda: Some(r.lambda),
            residual: Some(r.residual),
            error: None,
        },
        Err(e) => EigenEntry {
            kind,
            interval: iv,
            lambda: None,
            residual: None,
            error: Some(e.to_string()),
        },
    }
}

/// `λ₀` for `a⁺`, `a⁻` and `|a|` on the whole interval, and `λ₁ⁱ` on each
/// nonnegativity interval.
fn all_eigenvalues(spec: &ProblemSpec, tol: f64) -> Vec<EigenEntry> {
    let w = spec.weight.clone().with_kinks(spec.breakpoints().to_vec());
    let whole = Interval::new(0.0, spec.length());
    let mut out: Vec<EigenEntry> = [
        WeightKind::PositivePart,
        WeightKind::NegativePart,
        WeightKind::AbsoluteValue,
    ]
    .into_iter()
    .map(|k| entry(&w, whole, k, tol))
    .collect();
    if let Some(p) = check_h1(spec, &CheckOptions::default()).partition {
        for iv in p.intervals {
            out.push(entry(&w, iv, WeightKind::PositivePartOnSubinterval, tol));
        }
    }
    out
}

fn hypothesis_eigenvalues(h: &HypothesisReport) -> Vec<EigenEntry> {
    h.h3.eigen
        .iter()
        .chain(h.h4.entries.iter().filter_map(|e| e.eigen.as_ref()))
        .map(|r| EigenEntry {
            kind: r.weight_kind,
            interval: r.interval,
            lambda: Some(r.lambda),
            residual: Some(r.residual),
            error: None,
        })
        .collect()
}

fn write_eigen_csv(w: &mut Vec<u8>, rows: &[EigenEntry], p: usize) -> std::io::Result<()> {
    use std::io::Write;
    writeln!(w, "kind,start,end,lambda,residual")?;
    for e in rows {
        let kind = label(&e.kind);
        let f = |v: Option<f64>| v.map(|x| num(x, p)).unwrap_or_else(|| "NaN".into());
        writeln!(
            w,
            "{kind},{},{},{},{}",
            num(e.interval.start, p),
            num(e.interval.end, p),
            f(e.lambda),
            f(e.residual)
        )?;
    }
    Ok(())
}

fn poincare_summary(pts: &[PoincarePoint], opts: &ShootingOptions) -> PoincareSummary {
    let reached = pts.iter().filter(|p| p.end_state.value().is_some()).count();
    let sign_changes = pts
        .windows(2)
        .filter_map(|w| match (w[0].end_state, w[1].end_state) {
            (EndState::Reached { u: u0, .. }, EndState::Reached { u: u1, .. }) if u0 * u1 < 0.0 => {
                Some((w[0].c, w[1].c))
            }
            _ => None,
        })
        .collect();
    PoincareSummary {
        c_min: opts.c_min,
        c_max: opts.c_max,
        rows: pts.len(),
        reached,
        escaped: pts.len() - reached,
        sign_changes,
    }
}

fn solve(
    spec: &ProblemSpec,
    opts: &ShootingOptions,
    small: Option<SmallAmplitude>,
    csv: &mut Csv,
) -> Result<SolveSummary> {
    let r = find_positive_solutions(spec, opts)?;
    if r.solutions.is_empty() {
        let reasons: Vec<String> = r
            .rejected
            .iter()
            .map(|x| format!("c = {}: {}", x.c, x.reason))
            .collect();
        bail!(
            "no accepted positive solution in [{}, {}]; rejected roots: {}",
            opts.c_min,
            opts.c_max,
            reasons.join("; ")
        );
    }
    let mut solutions = Vec::new();
    for (i, p) in r.solutions.iter().enumerate() {
        let file = csv.add(&format!("solution_{}.csv", i + 1), |w, prec| {
            p.write_csv(w, prec)
        })?;
        solutions.push(SolutionSummary::new(p, file));
    }
    csv.add("poincare.csv", |w, p| write_poincare_csv(&r.table, w, p))?;
    let small_amplitude = match small {
        Some(s) => {
            let grid = log_grid(s.c_min, s.c_max, s.n);
            Some(small_amplitude_scan(spec, s.r_small, &grid, opts.tol_ode)?)
        }
        None => None,
    };
    Ok(SolveSummary {
        c_min: opts.c_min,
        c_max: opts.c_max,
        n_scan: opts.n_scan,
        tol_bvp: opts.tol_bvp,
        tol_ode: opts.tol_ode,
        solutions,
        rejected: r.rejected,
        escaped_brackets: r.escaped_brackets,
        small_amplitude,
    })
}
