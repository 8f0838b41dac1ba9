//! Parametric weights and nonlinearities that can be described in a config file.
//!
//! Both enums are internally tagged by `family`, so a TOML table such as
//! `{ family = "sin-k-pi", k = 3 }` deserializes directly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{Nonlinearity, ProblemError, ScalarFn, Weight};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error(
        "table needs at least 2 nodes with strictly increasing abscissae and matching lengths"
    )]
    BadTable,
    #[error("weight table covers [{lo}, {hi}] but the domain is [{from}, {to}]")]
    TableRange {
        lo: f64,
        hi: f64,
        from: f64,
        to: f64,
    },
    #[error("family `{family}` needs at least one term")]
    Empty { family: &'static str },
    #[error("table line {line}: {msg}")]
    TableSyntax { line: usize, msg: String },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

fn one() -> f64 {
    1.0
}

/// Tabulated function, linear between nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Table {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, FamilyError> {
        let t = Self { x, y };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<(), FamilyError> {
        let ok = self.x.len() >= 2
            && self.x.len() == self.y.len()
            && self.x.windows(2).all(|w| w[0] < w[1])
            && self.x.iter().chain(&self.y).all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(FamilyError::BadTable)
        }
    }

    /// Parses two comma-separated columns. Blank lines, `#` comments and a
    /// non-numeric first line (a header) are skipped.
    pub fn parse_csv(text: &str) -> Result<Self, FamilyError> {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        let mut first = true;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(FamilyError::TableSyntax {
                    line: i + 1,
                    msg: format!("expected 2 columns, got {}", fields.len()),
                });
            }
            let header = std::mem::replace(&mut first, false);
            match (fields[0].parse::<f64>(), fields[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    x.push(a);
                    y.push(b);
                }
                _ if header => {}
                _ => {
                    return Err(FamilyError::TableSyntax {
                        line: i + 1,
                        msg: format!("not a number pair: {line:?}"),
                    })
                }
            }
        }
        Self::new(x, y)
    }

    /// Linear interpolation; outside the nodes the end segments are extended.
    pub fn eval(&self, s: f64) -> f64 {
        let n = self.x.len();
        let i = self.x.partition_point(|&p| p < s).clamp(1, n - 1);
        let (x0, x1, y0, y1) = (self.x[i - 1], self.x[i], self.y[i - 1], self.y[i]);
        y0 + (y1 - y0) * (s - x0) / (x1 - x0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightFamily {
    Constant {
        value: f64,
    },
    /// `intercept + slope · x`.
    Linear {
        slope: f64,
        #[serde(default)]
        intercept: f64,
    },
    /// `amplitude · sin(kπx)`.
    SinKPi {
        k: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude · cos(kπx)`.
    CosKPi {
        k: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `Σ coefficients[i] · xⁱ`.
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// `coef · x^exponent`.
    Power {
        exponent: f64,
        #[serde(default = "one")]
        coef: f64,
    },
    Table(Table),
}

impl WeightFamily {
    pub fn evaluator(&self) -> Result<ScalarFn, FamilyError> {
        Ok(match self.clone() {
            WeightFamily::Constant { value } => Arc::new(move |_| value),
            WeightFamily::Linear { slope, intercept } => Arc::new(move |x| intercept + slope * x),
            WeightFamily::SinKPi { k, amplitude } => {
                Arc::new(move |x| amplitude * (k * std::f64::consts::PI * x).sin())
            }
            WeightFamily::CosKPi { k, amplitude } => {
                Arc::new(move |x| amplitude * (k * std::f64::consts::PI * x).cos())
            }
            WeightFamily::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return Err(FamilyError::Empty {
                        family: "polynomial",
                    });
                }
                Arc::new(move |x| coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c))
            }
            WeightFamily::Power { exponent, coef } => {
                Arc::new(move |x: f64| coef * x.powf(exponent))
            }
            WeightFamily::Table(t) => {
                t.validate()?;
                Arc::new(move |x| t.eval(x))
            }
        })
    }

    /// Table nodes, where the weight is only continuous.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            WeightFamily::Table(t) => t.x.clone(),
            _ => Vec::new(),
        }
    }

    /// The weight on `[0, length]`. Tables must cover the whole interval.
    pub fn build(&self, length: f64) -> Result<Weight, FamilyError> {
        self.check_range(0.0, length)?;
        Ok(Weight::from_arc(length, self.evaluator()?)?.with_kinks(self.kinks()))
    }

    /// Checks that a table covers `[from, to]`; other families always do.
    pub fn check_range(&self, from: f64, to: f64) -> Result<(), FamilyError> {
        if let WeightFamily::Table(t) = self {
            t.validate()?;
            let (lo, hi) = (t.x[0], t.x[t.x.len() - 1]);
            let slack = 1e-12 * (to - from).abs().max(1.0);
            if lo > from + slack || hi < to - slack {
                return Err(FamilyError::TableRange { lo, hi, from, to });
            }
        }
        Ok(())
    }
}

/// `sign(s) · |s|^e`, which is `s^e` on `s ≥ 0` and defined for every real `e`.
fn odd_pow(s: f64, e: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.signum() * s.abs().powf(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NonlinearityFamily {
    /// `coef · s^exponent`.
    Power {
        exponent: f64,
        #[serde(default = "one")]
        coef: f64,
    },
    /// `Σ c · s^e` over `terms = [[c, e], ...]`.
    Polynomial {
        terms: Vec<[f64; 2]>,
    },
    /// `coef · s · arctan(s)`.
    Arctan {
        #[serde(default = "one")]
        coef: f64,
    },
    /// `coef · s^exponent · sin(1/s)`, continued by 0 at `s = 0`.
    SinInverse {
        #[serde(default = "one")]
        coef: f64,
        exponent: f64,
    },
    Sum {
        terms: Vec<NonlinearityFamily>,
    },
    /// Pointwise minimum of the terms.
    Min {
        terms: Vec<NonlinearityFamily>,
    },
    Table(Table),
}

impl NonlinearityFamily {
    pub fn evaluator(&self) -> Result<ScalarFn, FamilyError> {
        Ok(match self.clone() {
            NonlinearityFamily::Power { exponent, coef } => {
                Arc::new(move |s| coef * odd_pow(s, exponent))
            }
            NonlinearityFamily::Polynomial { terms } => {
                if terms.is_empty() {
                    return Err(FamilyError::Empty {
                        family: "polynomial",
                    });
                }
                Arc::new(move |s| terms.iter().map(|[c, e]| c * odd_pow(s, *e)).sum())
            }
            NonlinearityFamily::Arctan { coef } => Arc::new(move |s: f64| coef * s * s.atan()),
            NonlinearityFamily::SinInverse { coef, exponent } => Arc::new(move |s: f64| {
                if s == 0.0 {
                    0.0
                } else {
                    coef * odd_pow(s, exponent) * (1.0 / s).sin()
                }
            }),
            NonlinearityFamily::Sum { terms } => {
                let fs = Self::collect(&terms, "sum")?;
                Arc::new(move |s| fs.iter().map(|f| f(s)).sum())
            }
            NonlinearityFamily::Min { terms } => {
                let fs = Self::collect(&terms, "min")?;
                Arc::new(move |s| fs.iter().map(|f| f(s)).fold(f64::INFINITY, f64::min))
            }
            NonlinearityFamily::Table(t) => {
                t.validate()?;
                Arc::new(move |s| t.eval(s))
            }
        })
    }

    fn collect(
        terms: &[NonlinearityFamily],
        family: &'static str,
    ) -> Result<Vec<ScalarFn>, FamilyError> {
        if terms.is_empty() {
            return Err(FamilyError::Empty { family });
        }
        terms.iter().map(Self::evaluator).collect()
    }

    pub fn build(&self) -> Result<Nonlinearity, FamilyError> {
        Ok(Nonlinearity::from_arc(self.evaluator()?))
    }
}
