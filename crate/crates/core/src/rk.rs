//! Dormand–Prince 5(4) with Hairer's fourth-order continuous extension.
//!
//! Fixed-size state, mixed absolute/relative error control, and forced mesh points.

#![allow(clippy::excessive_precision)]

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension over one accepted step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DenseStep<const N: usize> {
    pub x0: f64,
    pub h: f64,
    coeffs: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn constant(x0: f64, h: f64, y: [f64; N]) -> Self {
        let mut coeffs = [[0.0; N]; 5];
        coeffs[0] = y;
        Self { x0, h, coeffs }
    }

    pub fn x1(&self) -> f64 {
        self.x0 + self.h
    }

    pub fn eval(&self, x: f64) -> [f64; N] {
        let th = (x - self.x0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        }
        out
    }
}

/// One accepted step as seen by the observer.
pub(crate) struct Accepted<'a, const N: usize> {
    pub dense: &'a DenseStep<N>,
    pub y_new: [f64; N],
}

pub(crate) enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Abort when a step would be smaller than this.
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Failure {
    StepUnderflow { x: f64 },
    TooManySteps { x: f64 },
    NonFinite { x: f64 },
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// `x` moved a few ulps in direction `dir`.
fn nudge(x: f64, dir: f64) -> f64 {
    x + dir * 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE)
}

/// Integrates `y' = f(x, y)` from `x0` to `x1 > x0`, landing exactly on every
/// breakpoint in `(x0, x1)`. The observer sees each accepted step and may stop early.
/// Returns the final abscissa and state.
pub(crate) fn integrate<const N: usize, F, O>(
    f: F,
    x0: f64,
    y0: [f64; N],
    x1: f64,
    breakpoints: &[f64],
    opts: &Options,
    mut observe: O,
) -> Result<(f64, [f64; N]), Failure>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    O: FnMut(&Accepted<'_, N>) -> Control,
{
    let mut stops: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > x0 && b < x1)
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.push(x1);
    let mut next_stop = 0;

    let span = x1 - x0;
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    let mut h = initial_step(&f, x, &y, &k1, opts).min(span).min(opts.h_max);
    let mut steps = 0usize;
    let mut last_rejected = false;

    loop {
        let target = stops[next_stop];
        let mut hit = false;
        if x + 1.01 * h >= target {
            h = target - x;
            hit = true;
        }
        if h < opts.h_min && !hit {
            return Err(Failure::StepUnderflow { x });
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Failure::TooManySteps { x });
        }

        let k2 = f(x + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(x + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            x + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            x + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        // On a breakpoint the end stages see the left limit of the right-hand side.
        let x_end = if hit { nudge(target, -1.0) } else { x + h };
        let k6 = f(
            x_end,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let x_new = if hit { target } else { x + h };
        let k7 = f(x_end, &y_new);

        let mut err_sq = 0.0;
        let mut finite = true;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc).powi(2);
            finite &= y_new[i].is_finite();
        }
        let err = (err_sq / N as f64).sqrt();

        if !finite || !err.is_finite() {
            h *= 0.25;
            last_rejected = true;
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Failure::NonFinite { x });
            }
            continue;
        }

        if err <= 1.0 {
            let mut coeffs = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                coeffs[0][i] = y[i];
                coeffs[1][i] = ydiff;
                coeffs[2][i] = bspl;
                coeffs[3][i] = ydiff - h * k7[i] - bspl;
                coeffs[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let dense = DenseStep {
                x0: x,
                h: x_new - x,
                coeffs,
            };
            let control = observe(&Accepted {
                dense: &dense,
                y_new,
            });
            x = x_new;
            y = y_new;
            if hit {
                if next_stop + 1 == stops.len() {
                    return Ok((x, y));
                }
                next_stop += 1;
                // The right-hand side may jump at a breakpoint: restart the FSAL stage
                // from the right limit.
                k1 = f(nudge(x, 1.0), &y);
            } else {
                k1 = k7;
            }
            if let Control::Stop = control {
                return Ok((x, y));
            }
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 5.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h = (h * fac).min(opts.h_max);
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            h *= fac;
            last_rejected = true;
        }
    }
}

/// Starting step from Hairer & Wanner's heuristic.
fn initial_step<const N: usize, F>(
    f: &F,
    x: f64,
    y: &[f64; N],
    k1: &[f64; N],
    opts: &Options,
) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let sc: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let norm = |v: &[f64; N]| {
        (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / N as f64).sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(k1);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = axpy(y, h0, &[(1.0, k1)]);
    let k2 = f(x + h0, &y1);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = k2[i] - k1[i];
    }
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).max(opts.h_min * 10.0)
}
