//! Acceptance checks, one line per criterion. Exits non-zero if any fail.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use entrain::blocks::Saturation;
use entrain::diagnostics::{
    detect_steady_state, entrainment_verdict, lyapunov_max, monte_carlo, tail_stats,
    LyapunovOptions, MonteCarloOptions, SampleVerdict, Verdict, VerdictOptions,
};
use entrain::harness::run_simulation;
use entrain::scenario::{ScenarioId, ScenarioSpec, EXAMPLE1_X0, EXAMPLE2_X0};
use entrain::solver::uniform_grid;
use entrain::{
    compose_example1, compose_example2, compose_general, integrate, Complex, ComposedSystem,
    InputSignal, IntegratorConfig, LorenzParams, LtiSystem, OutputGrid, Trajectory, VectorField,
};

/// Independent tight-tolerance Benettin run on standard Lorenz from (1,1,1).
const LORENZ_LAMBDA_PINNED: f64 = 0.904;

/// |W(i)| as a five-place decimal.
#[allow(clippy::approx_constant)]
const W_AT_I_ROUNDED: f64 = 0.70711;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(
    sys: &ComposedSystem,
    u: &InputSignal,
    x0: &[f64],
    t_end: f64,
) -> Result<Trajectory, String> {
    let grid = OutputGrid::Points(uniform_grid(0.0, t_end, 0.01).map_err(|e| e.to_string())?);
    integrate(
        sys,
        u,
        x0,
        (0.0, t_end),
        &IntegratorConfig::default(),
        &grid,
    )
    .map_err(|e| e.to_string())
}

fn z_norm(state: &[f64]) -> f64 {
    state[2..].iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn c1_example1_dichotomy() -> Check {
    let sys = compose_example1(0.1, LorenzParams::default()).map_err(|e| e.to_string())?;
    let limit = Duration::from_secs(10);

    let (steady, ta) = timed(|| -> Result<_, String> {
        let tr = run(
            &sys,
            &InputSignal::constant(10.0).unwrap(),
            &EXAMPLE1_X0,
            100.0,
        )?;
        detect_steady_state(&tr, 0.2, 1e-5).map_err(|e| e.to_string())
    });
    let steady = steady?;
    ensure(
        steady.converged && steady.max_component_variation < 1e-5,
        || {
            format!(
                "u=10: converged={} variation={:e}",
                steady.converged, steady.max_component_variation
            )
        },
    )?;
    ensure(ta < limit, || format!("u=10 took {ta:?}"))?;

    let (forced, tb) = timed(|| -> Result<_, String> {
        let u = InputSignal::unit_sine();
        let tr = run(&sys, &u, &EXAMPLE1_X0, 200.0)?;
        let ss = detect_steady_state(&tr, 0.2, 1e-5).map_err(|e| e.to_string())?;
        let l = lyapunov_max(
            &sys,
            &u,
            &EXAMPLE1_X0,
            &IntegratorConfig::default(),
            &LyapunovOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        Ok((ss, l))
    });
    let (ss, l) = forced?;
    ensure(!ss.converged && l.lambda_max > 0.05, || {
        format!(
            "u=sin t: converged={} lambda={}",
            ss.converged, l.lambda_max
        )
    })?;
    ensure(tb < limit, || format!("u=sin t took {tb:?}"))?;
    Ok(format!(
        "const 10: variation {:.1e} ({ta:.2?}); sin t: lambda {:.3} ({tb:.2?})",
        steady.max_component_variation, l.lambda_max
    ))
}

fn c2_example2_dichotomy() -> Check {
    let sys = compose_example2(1e-4).map_err(|e| e.to_string())?;
    let tr = run(
        &sys,
        &InputSignal::constant(5.13).unwrap(),
        &EXAMPLE2_X0,
        100.0,
    )?;
    let ss = detect_steady_state(&tr, 0.2, 1e-5).map_err(|e| e.to_string())?;
    let p = tail_stats(&tr, "p", 0.2).map_err(|e| e.to_string())?;
    let z = z_norm(&ss.final_state);
    ensure(ss.converged && z < 1e-3 && p.mean < 0.05, || {
        format!(
            "u=5.13: converged={} |z|={z:e} p mean={:e}",
            ss.converged, p.mean
        )
    })?;

    let report = entrainment_verdict(
        &sys,
        &InputSignal::unit_sine(),
        &EXAMPLE2_X0,
        &IntegratorConfig::default(),
        &VerdictOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let p_sin = report.p_tail.as_ref().map(|p| p.mean).unwrap_or(f64::NAN);
    ensure(
        p_sin > 0.9 && report.verdict != Verdict::SteadyState,
        || format!("u=sin t: p mean={p_sin} verdict={}", report.verdict),
    )?;
    Ok(format!(
        "const 5.13: |z| {z:.1e}, p mean {:.1e}; sin t: p mean {p_sin:.4}, verdict {}",
        p.mean, report.verdict
    ))
}

fn c3_monte_carlo() -> Check {
    let opts = MonteCarloOptions {
        n_samples: 20,
        seed: 42,
        ..MonteCarloOptions::default()
    };
    let (rows, elapsed) = timed(|| monte_carlo("example2", &opts));
    let rows = rows.map_err(|e| e.to_string())?;
    let const_ok = rows
        .iter()
        .filter(|r| {
            r.verdict_const == SampleVerdict::SteadyState
                && r.final_state_const
                    .as_deref()
                    .is_some_and(|s| z_norm(s) < 1e-3)
        })
        .count();
    let sin_ok = rows
        .iter()
        .filter(|r| r.verdict_sin != SampleVerdict::SteadyState)
        .count();
    ensure(
        const_ok == 20 && sin_ok >= 18 && elapsed < Duration::from_secs(300),
        || {
            format!(
                "const steady at origin {const_ok}/20, sin not steady {sin_ok}/20, {elapsed:.1?}"
            )
        },
    )?;
    Ok(format!(
        "const {const_ok}/20 steady at origin, sin {sin_ok}/20 not steady ({elapsed:.1?})"
    ))
}

fn lorenz() -> ComposedSystem {
    ComposedSystem::autonomous("lorenz", VectorField::lorenz(LorenzParams::default()))
}

fn c4_lorenz_exponent() -> Check {
    let est = |dt: f64| -> Result<f64, String> {
        let opts = LyapunovOptions {
            renorm_dt: dt,
            ..LyapunovOptions::default()
        };
        lyapunov_max(
            &lorenz(),
            &InputSignal::constant(0.0).unwrap(),
            &[1.0; 3],
            &IntegratorConfig::default(),
            &opts,
        )
        .map(|e| e.lambda_max)
        .map_err(|e| e.to_string())
    };
    let (a, b) = (est(0.5)?, est(0.25)?);
    ensure(
        (a - 0.906).abs() <= 0.1 && (a - LORENZ_LAMBDA_PINNED).abs() <= 0.1,
        || format!("lambda {a} outside 0.906 +/- 0.1"),
    )?;
    ensure(a.signum() == b.signum() && (a - b).abs() <= 0.15, || {
        format!("dt 0.5 gives {a}, dt 0.25 gives {b}")
    })?;
    Ok(format!("lambda {a:.4} (dt 0.5), {b:.4} (dt 0.25)"))
}

fn c5_transfer_function() -> Check {
    let w = LtiSystem::washout();
    let w0 = w
        .transfer_eval(Complex::ZERO)
        .map_err(|e| e.to_string())?
        .norm();
    let w1 = w
        .transfer_eval(Complex::imag(1.0))
        .map_err(|e| e.to_string())?
        .norm();
    // The rounded value is 3.2e-6 off, so the band is taken around the closed form.
    let exact = std::f64::consts::FRAC_1_SQRT_2;
    ensure(w0 < 1e-12 && (w1 - exact).abs() <= 1e-6, || {
        format!("|W(0)|={w0:e} |W(i)|={w1}")
    })?;
    Ok(format!(
        "|W(0)| = {w0:e}, |W(i)| = {w1:.10} (closed form {exact:.10}, {:.1e} from 0.70711)",
        (w1 - W_AT_I_ROUNDED).abs()
    ))
}

fn alpha_properties(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..10_000 {
        let k = rng.random_range(1e-6..10.0);
        let sat = Saturation::new(k).map_err(|e| e.to_string())?;
        let (y1, y2): (f64, f64) = (rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
        let (a1, a2) = (sat.eval(y1), sat.eval(y2));
        ensure((0.0..1.0).contains(&a1), || {
            format!("alpha({k}, {y1}) = {a1}")
        })?;
        ensure(a1 == sat.eval(-y1), || format!("alpha not even at {y1}"))?;
        let (lo, hi) = if y1.abs() <= y2.abs() {
            (a1, a2)
        } else {
            (a2, a1)
        };
        ensure(hi >= lo, || {
            format!("alpha not monotone between {y1} and {y2}")
        })?;
    }
    Ok(())
}

fn rescaling_deviation() -> Result<f64, String> {
    let c = 0.5;
    let cfg = IntegratorConfig::default();
    let u = InputSignal::constant(0.0).unwrap();
    let slow_sys = ComposedSystem::autonomous(
        "lorenz",
        VectorField::lorenz(LorenzParams::default()).scaled(c),
    );
    let times = uniform_grid(0.0, 10.0, 0.5).map_err(|e| e.to_string())?;
    let slow = integrate(
        &slow_sys,
        &u,
        &[1.0; 3],
        (0.0, 10.0),
        &cfg,
        &OutputGrid::Points(times.clone()),
    )
    .map_err(|e| e.to_string())?;
    let fast_times = times.iter().map(|t| c * t).collect();
    let fast = integrate(
        &lorenz(),
        &u,
        &[1.0; 3],
        (0.0, 5.0),
        &cfg,
        &OutputGrid::Points(fast_times),
    )
    .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (a, b) in slow.states.iter().zip(&fast.states) {
        for (x, y) in a.iter().zip(b) {
            worst = worst.max((x - y).abs() / (cfg.rel_tol * x.abs().max(y.abs()) + cfg.abs_tol));
        }
    }
    Ok(worst)
}

fn rk4_ratio() -> Result<f64, String> {
    let sys =
        ComposedSystem::autonomous("decay", VectorField::decay(1).map_err(|e| e.to_string())?);
    let u = InputSignal::constant(0.0).unwrap();
    let err = |h: f64| -> Result<f64, String> {
        let tr = integrate(
            &sys,
            &u,
            &[1.0],
            (0.0, 1.0),
            &IntegratorConfig::rk4(h),
            &OutputGrid::Points(vec![1.0]),
        )
        .map_err(|e| e.to_string())?;
        Ok((tr.final_state()[0] - (-1.0f64).exp()).abs())
    };
    Ok(err(0.1)? / err(0.05)?)
}

fn general_agreement(rng: &mut ChaCha8Rng) -> Result<f64, String> {
    let ex1 = compose_example1(0.1, LorenzParams::default()).map_err(|e| e.to_string())?;
    let gen = compose_general(
        LtiSystem::washout(),
        Saturation::new(0.1).map_err(|e| e.to_string())?,
        VectorField::lorenz(LorenzParams::default()),
    )
    .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let s: Vec<f64> = (0..5).map(|_| rng.random_range(-20.0..20.0)).collect();
        let u = rng.random_range(-10.0..10.0);
        let a = ex1.rhs(&s, u).map_err(|e| e.to_string())?;
        let b = gen.rhs(&s, u).map_err(|e| e.to_string())?;
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

fn example2_origin_residual() -> Result<f64, String> {
    let sys = compose_example2(1e-4).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for u0 in [-10.0, -5.13, -1.0, 0.0, 0.37, 1.89, 5.13, 10.0] {
        let r = sys
            .rhs(&[-u0, 0.0, 0.0, 0.0, 0.0], u0)
            .map_err(|e| e.to_string())?;
        worst = r.iter().fold(worst, |m, v| m.max(v.abs()));
    }
    Ok(worst)
}

fn c6_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    alpha_properties(&mut rng)?;
    let rescale = rescaling_deviation()?;
    ensure(rescale <= 10.0, || {
        format!("rescaling deviation {rescale} x tolerance")
    })?;
    let ratio = rk4_ratio()?;
    ensure((12.0..=20.0).contains(&ratio), || {
        format!("rk4 ratio {ratio}")
    })?;
    let agree = general_agreement(&mut rng)?;
    ensure(agree <= 1e-14, || {
        format!("general vs example1 differ by {agree:e}")
    })?;
    let origin = example2_origin_residual()?;
    ensure(origin <= f64::EPSILON, || {
        format!("example2 origin residual {origin:e}")
    })?;
    Ok(format!(
        "alpha 10^4 ok; rescaling {rescale:.2}x tol; rk4 ratio {ratio:.2}; general diff {agree:e}; origin residual {origin:e}"
    ))
}

fn c7_reproducibility() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = ScenarioSpec::preset(ScenarioId::Example1);
    let a = run_simulation(&spec, &dir.path().join("a")).map_err(|e| e.to_string())?;
    let b = run_simulation(&a.run_manifest.scenario, &dir.path().join("b"))
        .map_err(|e| e.to_string())?;
    let read = |p: &std::path::Path| std::fs::read(p).map_err(|e| e.to_string());
    let (x, y) = (read(&a.trajectory_csv_path)?, read(&b.trajectory_csv_path)?);
    ensure(x == y, || "trajectory CSV bytes differ between runs".into())?;
    Ok(format!("{} identical CSV bytes", x.len()))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("example1 dichotomy", c1_example1_dichotomy),
        ("example2 dichotomy", c2_example2_dichotomy),
        ("monte carlo, 20 samples", c3_monte_carlo),
        ("lorenz exponent", c4_lorenz_exponent),
        ("transfer function", c5_transfer_function),
        ("property suites", c6_properties),
        ("reproducibility", c7_reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (result, elapsed) = timed(check);
        match result {
            Ok(detail) => println!("PASS {}. {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!(
        "{}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
