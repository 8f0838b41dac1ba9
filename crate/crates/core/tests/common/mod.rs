//! Independent reference computations shared by the integration tests. None of
//! them calls into the library's numerics.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Number of negative pivots of `A − λW`, where `A` is the `−D²` matrix on `n`
/// interior nodes of `[alpha, beta]` and `W = diag(w(xᵢ))`. Since `A` is positive
/// definite this is the number of generalized eigenvalues below `λ`.
pub fn sturm_count(w: &[f64], h: f64, lambda: f64) -> usize {
    let diag = 2.0 / (h * h);
    let off2 = 1.0 / (h * h * h * h);
    let mut count = 0;
    let mut d = 0.0;
    for (i, wi) in w.iter().enumerate() {
        let mut pivot = diag - lambda * wi;
        if i > 0 {
            pivot -= off2 / d;
        }
        if pivot == 0.0 {
            pivot = -f64::EPSILON * diag;
        }
        if pivot < 0.0 {
            count += 1;
        }
        d = pivot;
    }
    count
}

/// Smallest generalized eigenvalue of `−φ'' = λ w φ` on `[alpha, beta]` with
/// Dirichlet conditions, second-order finite differences on `n` interior nodes,
/// located by bisection on the Sturm count to relative width 1e-13.
pub fn fd_first_eigenvalue(w: impl Fn(f64) -> f64, alpha: f64, beta: f64, n: usize) -> f64 {
    let h = (beta - alpha) / (n + 1) as f64;
    let ws: Vec<f64> = (1..=n).map(|i| w(alpha + h * i as f64)).collect();
    let mut hi = 1.0;
    while sturm_count(&ws, h, hi) == 0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if sturm_count(&ws, h, mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Classical fixed-step RK4 for `u'' = −a(x) g̃(u)` from `(0, c)` to `x = l` with
/// step `h`. Returns `(u(l), u'(l))`, or `None` once `|u| + |u'|` exceeds `cap`.
pub fn rk4_shoot(
    a: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    c: f64,
    l: f64,
    h: f64,
    cap: f64,
) -> Option<(f64, f64)> {
    let gt = |s: f64| if s > 0.0 { g(s) } else { 0.0 };
    let f = |x: f64, u: f64, v: f64| (v, -a(x) * gt(u));
    let steps = (l / h).round() as usize;
    let h = l / steps as f64;
    let (mut u, mut v) = (0.0, c);
    for k in 0..steps {
        let x = h * k as f64;
        let (k1u, k1v) = f(x, u, v);
        let (k2u, k2v) = f(x + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v);
        let (k3u, k3v) = f(x + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v);
        let (k4u, k4v) = f(x + h, u + h * k3u, v + h * k3v);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if u.abs() + v.abs() > cap {
            return None;
        }
    }
    Some((u, v))
}

/// Composite Simpson with `n` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for j in 1..n {
        acc += if j % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * j as f64);
    }
    acc * h / 3.0
}

/// `∫_{r1}^{r} ξ^{1−N} dξ` by Simpson quadrature.
pub fn h_quadrature(r: f64, n: u32, r1: f64) -> f64 {
    simpson(|xi| xi.powi(1 - n as i32), r1, r, 20_000)
}

pub fn fig1_a(x: f64) -> f64 {
    (3.0 * PI * x).sin()
}

pub fn fig1_g(s: f64) -> f64 {
    (20.0 * s.powf(1.2) - 6.0 * s.powi(3) + s.powi(4)).min(400.0 * s * s.atan())
}

pub fn fig2_a(x: f64) -> f64 {
    (7.0 * PI * x).sin()
}

pub fn fig2_g(s: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.powi(3) + s * s * (1.0 / s).sin()
    }
}
