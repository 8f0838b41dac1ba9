//! Run configuration: a TOML file with `[problem]`, `[task]` and `[output]` sections.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use indefbvp::families::{NonlinearityFamily, Table, WeightFamily};
use indefbvp::problem::{NearZeroClass, SignPartition};
use indefbvp::{Descriptors, Interval, Limit, ProblemSpec, RadialProblem, WeightKind};
use serde::{Deserialize, Serialize};
use toml::Spanned;

/// Tolerance attached to a declared sign partition; matches the checker default.
const DECLARED_SIGN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TaskName {
    Check,
    Solve,
    Poincare,
    Eigen,
    Radial,
    LambdaScan,
}

impl fmt::Display for TaskName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(
            self.to_possible_value()
                .expect("no skipped variants")
                .get_name(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: RawProblem,
    task: RawTask,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    length: Option<f64>,
    weight: Spanned<toml::Value>,
    nonlinearity: Spanned<toml::Value>,
    descriptors: Option<RawDescriptors>,
    partition: Option<Vec<[f64; 2]>>,
    radial: Option<RawRadial>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDescriptors {
    g0_inf: Option<Limit>,
    g0_sup: Option<Limit>,
    g_infty: Option<Limit>,
    class: Option<NearZeroClass>,
    delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawRadial {
    pub dim: u32,
    pub r1: f64,
    pub r2: f64,
}

/// Task parameters. Every field is optional and each task reads only its own.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTask {
    pub name: Option<TaskName>,
    pub c_min: Option<f64>,
    pub c_max: Option<f64>,
    pub n_scan: Option<usize>,
    pub tol_bvp: Option<f64>,
    pub tol_ode: Option<f64>,
    pub samples: Option<usize>,
    /// `0` skips the Green-operator certificate.
    pub quad_n: Option<usize>,
    pub small_amplitude: Option<SmallAmplitude>,
    pub tol: Option<f64>,
    pub interval: Option<[f64; 2]>,
    pub kind: Option<WeightKind>,
    pub eigenfunction_samples: Option<usize>,
    pub residual_grids: Option<Vec<usize>>,
    pub slice_n: Option<usize>,
    pub scales: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SmallAmplitude {
    pub r_small: f64,
    #[serde(default = "SmallAmplitude::default_c_min")]
    pub c_min: f64,
    #[serde(default = "SmallAmplitude::default_c_max")]
    pub c_max: f64,
    #[serde(default = "SmallAmplitude::default_n")]
    pub n: usize,
}

impl SmallAmplitude {
    fn default_c_min() -> f64 {
        1e-8
    }
    fn default_c_max() -> f64 {
        1e-2
    }
    fn default_n() -> usize {
        200
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default = "RawOutput::default_dir")]
    dir: PathBuf,
    #[serde(default = "RawOutput::default_formats")]
    formats: Vec<String>,
    #[serde(default = "RawOutput::default_precision")]
    precision: usize,
}

impl RawOutput {
    fn default_dir() -> PathBuf {
        PathBuf::from("indefbvp-out")
    }
    fn default_formats() -> Vec<String> {
        vec!["csv".into(), "json".into()]
    }
    fn default_precision() -> usize {
        17
    }
}

impl Default for RawOutput {
    fn default() -> Self {
        Self {
            dir: Self::default_dir(),
            formats: Self::default_formats(),
            precision: Self::default_precision(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
}

impl From<Format> for Formats {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => Formats {
                csv: true,
                json: false,
            },
            Format::Json => Formats {
                csv: false,
                json: true,
            },
            Format::Both => Formats {
                csv: true,
                json: true,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct Output {
    pub dir: PathBuf,
    pub formats: Formats,
    pub precision: usize,
}

/// Problem as written in the config, kept for the report.
#[derive(Debug, Clone, Serialize)]
pub struct ProblemEcho {
    pub length: f64,
    pub weight: WeightFamily,
    pub nonlinearity: NonlinearityFamily,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descriptors: Option<Descriptors>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<NearZeroClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radial: Option<RawRadial>,
}

pub struct Config {
    pub task_name: TaskName,
    pub task: RawTask,
    /// The 1-D problem. With a radial block this is the transformed problem.
    pub spec: ProblemSpec,
    pub radial: Option<RadialProblem>,
    pub echo: ProblemEcho,
    pub output: Output,
    pub warnings: Vec<String>,
}

impl fmt::Debug for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Config")
            .field("task", &self.task)
            .field("problem", &self.echo)
            .finish_non_exhaustive()
    }
}

pub struct Overrides {
    pub task: Option<TaskName>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub format: Option<Format>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Replaces `{ family = "table", file = "..." }` by the file's columns, recursively.
fn inline_table_files(value: &mut toml::Value, base: &Path, field: &str) -> Result<()> {
    match value {
        toml::Value::Table(t) => {
            if t.get("family").and_then(toml::Value::as_str) == Some("table") {
                if let Some(file) = t.remove("file") {
                    let rel = file
                        .as_str()
                        .with_context(|| format!("{field}.file must be a string"))?;
                    let path = base.join(rel);
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("{field}.file: cannot read {}", path.display()))?;
                    let table = Table::parse_csv(&text)
                        .with_context(|| format!("{field}.file {}", path.display()))?;
                    if t.contains_key("x") || t.contains_key("y") {
                        bail!("{field}: give either `file` or `x`/`y`, not both");
                    }
                    t.insert("x".into(), table.x.into());
                    t.insert("y".into(), table.y.into());
                }
            }
            for (k, v) in t.iter_mut() {
                inline_table_files(v, base, &format!("{field}.{k}"))?;
            }
        }
        toml::Value::Array(items) => {
            for (i, v) in items.iter_mut().enumerate() {
                inline_table_files(v, base, &format!("{field}[{i}]"))?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn family<T: serde::de::DeserializeOwned>(
    spanned: Spanned<toml::Value>,
    text: &str,
    origin: &str,
    field: &str,
    base: &Path,
) -> Result<T> {
    let line = line_of(text, spanned.span().start);
    let mut value = spanned.into_inner();
    inline_table_files(&mut value, base, field).with_context(|| format!("{origin}:{line}"))?;
    value.try_into().map_err(|e: toml::de::Error| {
        anyhow::anyhow!("{origin}:{line}: {field}: {}", e.message().trim())
    })
}

fn check_positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => {
            bail!("{name} must be positive and finite, got {x}")
        }
        _ => Ok(()),
    }
}

pub fn load(path: &Path, over: &Overrides) -> Result<Config> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    parse(&text, path, over)
}

pub fn parse(text: &str, path: &Path, over: &Overrides) -> Result<Config> {
    let origin = path.display().to_string();
    let base = path.parent().unwrap_or(Path::new("."));
    let raw: RawConfig = toml::from_str(text).map_err(|e| match e.span() {
        Some(span) => {
            let line = line_of(text, span.start);
            let src = text.lines().nth(line - 1).unwrap_or("").trim();
            anyhow::anyhow!("{origin}:{line}: {} (in `{src}`)", e.message().trim())
        }
        None => anyhow::anyhow!("{origin}: {}", e.message().trim()),
    })?;
    let RawConfig {
        problem,
        mut task,
        output,
    } = raw;

    let task_name = over
        .task
        .or(task.name)
        .with_context(|| format!("{origin}: [task] needs `name` (one of check, solve, poincare, eigen, radial, lambda-scan) or pass --task"))?;
    task.name = Some(task_name);
    if let Some(tol) = over.tol {
        check_positive("--tol", Some(tol))?;
        match task_name {
            TaskName::Solve | TaskName::Poincare | TaskName::Radial => task.tol_ode = Some(tol),
            _ => task.tol = Some(tol),
        }
    }
    for (name, v) in [
        ("task.tol", task.tol),
        ("task.tol_ode", task.tol_ode),
        ("task.tol_bvp", task.tol_bvp),
    ] {
        check_positive(name, v).with_context(|| origin.clone())?;
    }
    let mut warnings = Vec::new();

    let weight_family: WeightFamily =
        family(problem.weight, text, &origin, "problem.weight", base)?;
    let g_family: NonlinearityFamily = family(
        problem.nonlinearity,
        text,
        &origin,
        "problem.nonlinearity",
        base,
    )?;

    let d = problem.descriptors.unwrap_or_default();
    let declared = match (d.g0_inf, d.g0_sup, d.g_infty) {
        (Some(a), Some(b), Some(c)) => Some(Descriptors::declared(a, b, c)),
        (None, None, None) => None,
        _ => bail!(
            "{origin}: problem.descriptors: g0_inf, g0_sup and g_infty must be declared together"
        ),
    };
    if let Some(delta) = d.delta {
        check_positive("problem.descriptors.delta", Some(delta)).with_context(|| origin.clone())?;
    }
    let mut g = g_family
        .build()
        .with_context(|| format!("{origin}: problem.nonlinearity"))?;
    if let Some(desc) = declared {
        g = g.with_descriptors(desc);
    }
    if let Some(class) = d.class {
        g = g.with_class(class);
    }
    if let Some(delta) = d.delta {
        g = g.with_delta(delta);
    }

    let (spec, radial, length) = match problem.radial {
        Some(r) => {
            if problem.length.is_some() {
                bail!("{origin}: problem.length cannot be combined with problem.radial; the length is h(r2)");
            }
            if problem.partition.is_some() {
                bail!("{origin}: problem.partition cannot be combined with problem.radial; the transformed partition is derived from a(r)");
            }
            weight_family
                .check_range(r.r1, r.r2)
                .with_context(|| format!("{origin}: problem.weight"))?;
            let a = weight_family
                .evaluator()
                .with_context(|| format!("{origin}: problem.weight"))?;
            let rp = RadialProblem::from_arc(r.dim, r.r1, r.r2, a, g.clone())
                .with_context(|| format!("{origin}: problem.radial"))?
                .with_kinks(weight_family.kinks());
            let tp = indefbvp::reduce(&rp).with_context(|| format!("{origin}: problem.radial"))?;
            let l = tp.length();
            (tp.spec, Some(rp), l)
        }
        None => {
            let length = problem.length.unwrap_or(1.0);
            check_positive("problem.length", Some(length)).with_context(|| origin.clone())?;
            let mut w = weight_family
                .build(length)
                .with_context(|| format!("{origin}: problem.weight"))?;
            if let Some(parts) = &problem.partition {
                let intervals = parts.iter().map(|[a, b]| Interval::new(*a, *b)).collect();
                let p = SignPartition::new(intervals, DECLARED_SIGN_TOLERANCE)
                    .with_context(|| format!("{origin}: problem.partition"))?;
                if p.intervals
                    .iter()
                    .any(|iv| iv.start < 0.0 || iv.end > length)
                {
                    bail!("{origin}: problem.partition must lie in [0, {length}]");
                }
                w = w.with_partition(p);
            }
            (ProblemSpec::new(w, g), None, length)
        }
    };
    if task_name == TaskName::Radial && radial.is_none() {
        bail!("{origin}: task `radial` needs a [problem.radial] block with dim, r1 and r2");
    }

    let formats = match over.format {
        Some(f) => Formats::from(f),
        None => {
            let mut f = Formats {
                csv: false,
                json: false,
            };
            for name in &output.formats {
                match name.as_str() {
                    "csv" => f.csv = true,
                    "json" => f.json = true,
                    other => bail!("{origin}: output.formats: unknown format {other:?} (expected \"csv\" or \"json\")"),
                }
            }
            if !f.csv && !f.json {
                warnings.push("output.formats is empty; nothing will be written".into());
            }
            f
        }
    };
    if !(1..=17).contains(&output.precision) {
        bail!(
            "{origin}: output.precision must be in 1..=17, got {}",
            output.precision
        );
    }

    let echo = ProblemEcho {
        length,
        weight: weight_family,
        nonlinearity: g_family,
        descriptors: declared,
        class: d.class,
        partition: problem.partition,
        radial: problem.radial,
    };
    Ok(Config {
        task_name,
        task,
        spec,
        radial,
        echo,
        output: Output {
            dir: over.out.clone().unwrap_or(output.dir),
            formats,
            precision: output.precision,
        },
        warnings,
    })
}
