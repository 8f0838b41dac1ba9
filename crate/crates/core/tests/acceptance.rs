//! Acceptance suite. Prints one line per criterion and exits with status 1 if
//! any criterion fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use indefbvp::green::apply_operator_fn;
use indefbvp::problem::{log_grid, NearZeroClass};
use indefbvp::radial::{h, h_inverse, DEFAULT_RESIDUAL_GRIDS};
use indefbvp::shooting::EndState;
use indefbvp::{
    check_all, check_h4, find_positive_solutions, first_eigenvalue, lambda_threshold_scan,
    sample_poincare, small_amplitude_scan, solve_radial, CheckOptions, Descriptors, Interval,
    Limit, Nonlinearity, ProblemSpec, RadialProblem, ShootingOptions, Verdict, Weight, WeightKind,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn fig1() -> ProblemSpec {
    let g = Nonlinearity::new(common::fig1_g)
        .with_descriptors(Descriptors::declared(
            Limit::Finite(0.0),
            Limit::Finite(0.0),
            Limit::Finite(200.0 * PI),
        ))
        .with_class(NearZeroClass::NonNegative);
    ProblemSpec::new(Weight::new(1.0, common::fig1_a).unwrap(), g)
}

fn fig2() -> ProblemSpec {
    let g = Nonlinearity::new(common::fig2_g)
        .with_descriptors(Descriptors::declared(
            Limit::Finite(0.0),
            Limit::Finite(0.0),
            Limit::PosInfinity,
        ))
        .with_class(NearZeroClass::SignChanging);
    ProblemSpec::new(Weight::new(1.0, common::fig2_a).unwrap(), g)
}

fn eigen_oracle() -> Outcome {
    let tol = 1e-10;
    let mut parts = Vec::new();
    for (l, want) in [(1.0, PI * PI), (PI, 1.0)] {
        let w = Weight::constant(l, 1.0).unwrap();
        let (r, dt) =
            timed(|| first_eigenvalue(&w, Interval::new(0.0, l), WeightKind::PositivePart, tol));
        let lam = r.map_err(|e| e.to_string())?.lambda;
        ensure(rel(lam, want) <= 1e-8, format!("L = {l}: {lam} vs {want}"))?;
        ensure(
            dt < Duration::from_millis(100),
            format!("L = {l}: took {dt:?}"),
        )?;
        parts.push(format!(
            "L={l:.4}: rel err {:.1e} in {:.1} ms",
            rel(lam, want),
            dt.as_secs_f64() * 1e3
        ));
    }
    Ok(parts.join(", "))
}

fn eigen_cross_validation() -> Outcome {
    let sin3 = |x: f64| (3.0 * PI * x).sin().max(0.0);
    let abs7 = |x: f64| (7.0 * PI * x).sin().abs();
    let cases: [(&str, Weight, f64, WeightKind); 3] = [
        (
            "(sin 3πx)⁺ on [0,1]",
            Weight::new(1.0, sin3).unwrap(),
            1.0,
            WeightKind::PositivePart,
        ),
        (
            "(sin 3πx)⁺ on [0,1/3]",
            Weight::new(1.0, sin3).unwrap(),
            1.0 / 3.0,
            WeightKind::PositivePart,
        ),
        (
            "|sin 7πx| on [0,1]",
            Weight::new(1.0, abs7).unwrap(),
            1.0,
            WeightKind::AbsoluteValue,
        ),
    ];
    let mut worst: f64 = 0.0;
    for (name, w, end, kind) in cases {
        let p = first_eigenvalue(&w, Interval::new(0.0, end), kind, 1e-10)
            .map_err(|e| e.to_string())?
            .lambda;
        let fd = if kind == WeightKind::AbsoluteValue {
            common::fd_first_eigenvalue(abs7, 0.0, end, 4096)
        } else {
            common::fd_first_eigenvalue(sin3, 0.0, end, 4096)
        };
        ensure(rel(p, fd) < 5e-5, format!("{name}: Prüfer {p} vs FD {fd}"))?;
        worst = worst.max(rel(p, fd));
    }
    Ok(format!("max rel diff vs FD n=4096: {worst:.1e}"))
}

fn figure(spec: ProblemSpec, c_max: f64) -> Outcome {
    let start = Instant::now();
    let opts = ShootingOptions::default().with_range(0.0, c_max);
    let pts =
        sample_poincare(&spec, 0.0, c_max, opts.n_scan, opts.tol_ode).map_err(|e| e.to_string())?;
    let crossing = pts
        .windows(2)
        .find(|w| match (w[0].end_state, w[1].end_state) {
            (EndState::Reached { u: u0, v: v0 }, EndState::Reached { u: u1, v: v1 }) => {
                u0 * u1 < 0.0 && v0 < 0.0 && v1 < 0.0
            }
            _ => false,
        });
    let crossing = crossing.ok_or("no sign change of u(1) with u'(1) < 0 on the sampled image")?;
    let report = find_positive_solutions(&spec, &opts).map_err(|e| e.to_string())?;
    let good: Vec<_> = report
        .solutions
        .iter()
        .filter(|p| {
            p.boundary_residual <= 1e-9
                && p.interior_positivity > 0.0
                && p.operator_residual.is_some_and(|r| r <= 1e-6)
        })
        .collect();
    let p = good
        .first()
        .ok_or_else(|| format!("no accepted profile; rejected {:?}", report.rejected))?;
    let dt = start.elapsed();
    ensure(dt < Duration::from_secs(30), format!("took {dt:?}"))?;
    Ok(format!(
        "bracket [{:.4}, {:.4}], c* = {:.10}, |u(1)| = {:.1e}, Green residual = {:.1e}, {:.2} s",
        crossing[0].c,
        crossing[1].c,
        p.initial_slope,
        p.boundary_residual,
        p.operator_residual.unwrap(),
        dt.as_secs_f64()
    ))
}

fn hypothesis_verdicts() -> Outcome {
    let opts = CheckOptions::default();
    let r1 = check_all(&fig1(), &opts);
    ensure(
        r1.overall == Verdict::Pass,
        format!("figure 1 overall {}", r1.overall),
    )?;
    ensure(
        r1.h3.case == Some(NearZeroClass::NonNegative),
        "figure 1 not through the first case",
    )?;
    let r2 = check_all(&fig2(), &opts);
    ensure(
        r2.overall == Verdict::Pass,
        format!("figure 2 overall {}", r2.overall),
    )?;
    ensure(
        r2.h3.case == Some(NearZeroClass::SignChanging),
        "figure 2 not through the third case",
    )?;
    let tp = 2.0 * PI * PI;
    let g = Nonlinearity::new(move |s| tp * s + s * s * s).with_descriptors(Descriptors::declared(
        Limit::Finite(tp),
        Limit::Finite(tp),
        Limit::PosInfinity,
    ));
    let bad = check_all(
        &ProblemSpec::new(Weight::constant(1.0, 1.0).unwrap(), g),
        &opts,
    );
    let margin = bad.h3.margin.ok_or("violation reported without a margin")?;
    ensure(
        bad.h3.verdict == Verdict::Fail && bad.overall == Verdict::Fail,
        "constructed violation not rejected",
    )?;
    ensure(
        (margin + PI * PI).abs() < 1e-6,
        format!("violation margin {margin}, expected -π²"),
    )?;
    Ok(format!(
        "figure 1 case 1 pass, figure 2 case 3 pass, violation margin {margin:.8}"
    ))
}

fn small_amplitude() -> Outcome {
    let grid = log_grid(1e-8, 1e-2, 200);
    let r = small_amplitude_scan(&fig1(), 1e-3, &grid, 1e-10).map_err(|e| e.to_string())?;
    ensure(
        r.holds,
        format!("small positive solutions at c = {:?}", r.violations),
    )?;
    Ok(format!(
        "{} slopes, {} roots examined, none with sup norm ≤ 1e-3",
        grid.len(),
        r.roots_examined
    ))
}

fn radial() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 2..=5u32 {
        let (r1, r2) = (1.0, 2.0);
        let l = h(r2, n, r1).map_err(|e| e.to_string())?;
        for j in 0..1000 {
            let t = l * j as f64 / 999.0;
            let r = h_inverse(t, n, r1).map_err(|e| e.to_string())?;
            let back = h(r, n, r1).map_err(|e| e.to_string())?;
            worst = worst.max((back - t).abs() / l);
            worst = worst.max(rel(h_inverse(back, n, r1).map_err(|e| e.to_string())?, r));
        }
    }
    ensure(worst <= 1e-12, format!("round trip error {worst:e}"))?;
    let rp = RadialProblem::new(3, 1.0, 2.0, |_| 1.0, Nonlinearity::new(|s| s * s * s))
        .map_err(|e| e.to_string())?;
    let sol = solve_radial(
        &rp,
        &ShootingOptions::default().with_range(0.0, 100.0),
        &DEFAULT_RESIDUAL_GRIDS,
    )
    .map_err(|e| e.to_string())?;
    ensure(
        sol.boundary.iter().all(|b| b.abs() <= 1e-9),
        format!("boundary values {:?}", sol.boundary),
    )?;
    ensure(
        sol.samples[1..sol.samples.len() - 1]
            .iter()
            .all(|s| s.w > 0.0),
        "profile not positive",
    )?;
    let min_order = sol
        .observed_orders
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    ensure(
        min_order >= 1.9,
        format!("observed orders {:?}", sol.observed_orders),
    )?;
    Ok(format!(
        "round trip {worst:.1e}, |w(R1)|,|w(R2)| ≤ {:.1e}, FD orders {:?}",
        sol.boundary[0].abs().max(sol.boundary[1].abs()),
        sol.observed_orders
            .iter()
            .map(|o| format!("{o:.3}"))
            .collect::<Vec<_>>()
    ))
}

fn operator_identity() -> Outcome {
    let spec = ProblemSpec::new(
        Weight::constant(1.0, 1.0).unwrap(),
        Nonlinearity::new(|s| s),
    );
    let xs: Vec<f64> = (0..=40).map(|j| j as f64 / 40.0).collect();
    let u = |x: f64| (PI * x).sin();
    let mut errs = Vec::new();
    for quad_n in [64, 128, 256, 512] {
        let phi = apply_operator_fn(&spec, u, &xs, quad_n).map_err(|e| e.to_string())?;
        errs.push(
            xs.iter()
                .zip(phi)
                .map(|(&x, p)| (p - u(x) / (PI * PI)).abs())
                .fold(0.0, f64::max),
        );
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    ensure(
        ratios.iter().all(|r| (14.0..18.5).contains(r)),
        format!("ratios {ratios:?} from {errs:?}"),
    )?;
    Ok(format!(
        "error ratios per doubling {:?}",
        ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
    ))
}

fn scaling_law() -> Outcome {
    let tol = 1e-10;
    let w = Weight::new(1.0, common::fig1_a).unwrap().positive_part();
    let iv = Interval::new(0.0, 1.0);
    let base = first_eigenvalue(&w, iv, WeightKind::PositivePart, tol)
        .map_err(|e| e.to_string())?
        .lambda;
    for c in [0.5, 2.0, 10.0] {
        let scaled = w.clone().with_scale(c).map_err(|e| e.to_string())?;
        let lam = first_eigenvalue(&scaled, iv, WeightKind::PositivePart, tol)
            .map_err(|e| e.to_string())?
            .lambda;
        ensure(
            rel(lam, base / c) <= 2.0 * tol,
            format!("c = {c}: {lam} vs {}", base / c),
        )?;
    }
    let spec = fig1();
    let opts = CheckOptions::default();
    let probe = lambda_threshold_scan(&spec, &[], &opts).map_err(|e| e.to_string())?;
    let star = probe.lambda_star;
    let max_eig = probe
        .interval_eigenvalues
        .iter()
        .copied()
        .fold(0.0, f64::max);
    ensure(
        rel(star, max_eig / probe.g_infty) < 1e-15,
        "λ* is not max λ₁ⁱ / g_∞",
    )?;
    let grid: Vec<f64> = [0.5, 0.9, 0.99, 1.01, 1.1, 2.0]
        .iter()
        .map(|f| f * star)
        .collect();
    let scan = lambda_threshold_scan(&spec, &grid, &opts).map_err(|e| e.to_string())?;
    for &(s, v) in &scan.grid {
        let direct = check_h4(
            &spec.with_weight_scale(s).map_err(|e| e.to_string())?,
            &opts,
        )
        .verdict;
        ensure(
            v == direct,
            format!("scale {s}: scan {v} vs direct {direct}"),
        )?;
        ensure(
            v.passed() == (s > star),
            format!("scale {s}: verdict {v} on the wrong side of λ* = {star}"),
        )?;
    }
    Ok(format!(
        "λ* = {star:.10}, verdicts flip between 0.99λ* and 1.01λ*"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("eigenvalue oracle", eigen_oracle),
        ("eigenvalue cross-validation", eigen_cross_validation),
        ("figure 1 reproduction", || figure(fig1(), 12.0)),
        ("figure 2 reproduction", || figure(fig2(), 16.0)),
        ("hypothesis verdicts", hypothesis_verdicts),
        ("small-amplitude property", small_amplitude),
        ("radial pipeline", radial),
        ("operator identity", operator_identity),
        ("scaling law", scaling_law),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
