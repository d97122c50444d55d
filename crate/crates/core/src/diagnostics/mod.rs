//! Telling steady-state convergence apart from sustained chaotic motion.

mod lyapunov;
mod montecarlo;

pub use lyapunov::{lyapunov_max, LyapunovEstimate, LyapunovOptions};
pub use montecarlo::{
    monte_carlo, MonteCarloOptions, MonteCarloRow, MonteCarloSummary, SampleVerdict,
};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::{BlocksError, ComposedSystem};
use crate::signals::InputSignal;
use crate::solver::{
    integrate, uniform_grid, IntegratorConfig, OutputGrid, SolverError, Trajectory,
};

/// Minimum span accepted by [`detect_steady_state`].
pub const MIN_STEADY_STATE_SPAN: f64 = 10.0;
/// λ above this is read as chaos; |λ| at or below it as neutral oscillation.
pub const CHAOS_THRESHOLD: f64 = 0.05;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("unknown variable '{0}'")]
    UnknownVariable(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Blocks(#[from] BlocksError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateReport {
    pub converged: bool,
    pub tail_window: (f64, f64),
    /// Largest max−min spread of any component over the tail window.
    pub max_component_variation: f64,
    pub final_state: Vec<f64>,
    /// Finite-difference speed over the last output interval.
    pub velocity_norm_at_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailStats {
    pub variable: String,
    pub window: (f64, f64),
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

fn tail_start(traj: &Trajectory, fraction: f64) -> Result<usize, DiagnosticsError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DiagnosticsError::Parameter(format!(
            "tail fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if traj.len() < 2 {
        return Err(DiagnosticsError::InsufficientData(
            "trajectory has fewer than 2 rows".into(),
        ));
    }
    let (t0, t1) = (traj.t_start(), traj.t_end());
    let cut = t1 - fraction * (t1 - t0);
    let i = traj.times.partition_point(|&t| t < cut);
    if traj.len() - i < 2 {
        return Err(DiagnosticsError::InsufficientData(format!(
            "fewer than 2 samples in tail window [{cut}, {t1}]"
        )));
    }
    Ok(i)
}

/// Converged iff every component's spread over the trailing `tail_fraction`
/// of the span is at most `eps·(1 + |component mean|)`.
pub fn detect_steady_state(
    traj: &Trajectory,
    tail_fraction: f64,
    eps: f64,
) -> Result<SteadyStateReport, DiagnosticsError> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(DiagnosticsError::Parameter(format!(
            "eps must be ≥ 0, got {eps}"
        )));
    }
    if traj.is_empty() || traj.t_end() - traj.t_start() < MIN_STEADY_STATE_SPAN {
        return Err(DiagnosticsError::InsufficientData(format!(
            "steady-state detection needs a span of at least {MIN_STEADY_STATE_SPAN} time units"
        )));
    }
    let start = tail_start(traj, tail_fraction)?;
    let tail = &traj.states[start..];
    let dim = traj.columns.len();
    let mut converged = true;
    let mut worst = 0.0f64;
    for j in 0..dim {
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for row in tail {
            lo = lo.min(row[j]);
            hi = hi.max(row[j]);
            sum += row[j];
        }
        let mean = sum / tail.len() as f64;
        let spread = hi - lo;
        worst = worst.max(spread);
        if spread > eps * (1.0 + mean.abs()) {
            converged = false;
        }
    }
    let n = traj.len();
    let dt = traj.times[n - 1] - traj.times[n - 2];
    let velocity = traj.states[n - 1]
        .iter()
        .zip(&traj.states[n - 2])
        .map(|(a, b)| ((a - b) / dt).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(SteadyStateReport {
        converged,
        tail_window: (traj.times[start], traj.t_end()),
        max_component_variation: worst,
        final_state: traj.final_state().to_vec(),
        velocity_norm_at_end: velocity,
    })
}

/// Time-weighted (trapezoidal) mean, min and max of one column over the
/// trailing window.
pub fn tail_stats(
    traj: &Trajectory,
    variable: &str,
    window_fraction: f64,
) -> Result<TailStats, DiagnosticsError> {
    let j = traj
        .column_index(variable)
        .ok_or_else(|| DiagnosticsError::UnknownVariable(variable.to_string()))?;
    let start = tail_start(traj, window_fraction)?;
    let times = &traj.times[start..];
    let values: Vec<f64> = traj.states[start..].iter().map(|r| r[j]).collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut integral = 0.0;
    for k in 1..times.len() {
        integral += 0.5 * (values[k] + values[k - 1]) * (times[k] - times[k - 1]);
    }
    let span = times[times.len() - 1] - times[0];
    let mean = (integral / span).clamp(min, max);
    Ok(TailStats {
        variable: variable.to_string(),
        window: (times[0], times[times.len() - 1]),
        mean,
        min,
        max,
    })
}

/// Fraction of tail samples at which the saturation output α(y) is at or
/// above [`crate::blocks::SATURATED_LEVEL`]. `None` for systems without a
/// filter/saturation front end.
pub fn saturated_fraction(
    sys: &ComposedSystem,
    input: &InputSignal,
    traj: &Trajectory,
    window_fraction: f64,
) -> Result<Option<f64>, DiagnosticsError> {
    let (Some(filter), Some(sat)) = (sys.filter(), sys.saturation()) else {
        return Ok(None);
    };
    let start = tail_start(traj, window_fraction)?;
    let range = sys.layout().filter();
    let mut hits = 0usize;
    for (t, row) in traj.times[start..].iter().zip(&traj.states[start..]) {
        let u = input.eval(*t).map_err(SolverError::from)?;
        let (_, y) = filter
            .rhs(&row[range.clone()], u)
            .map_err(BlocksError::from)?;
        if sat.is_saturated(y) {
            hits += 1;
        }
    }
    Ok(Some(hits as f64 / (traj.len() - start) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SteadyState,
    SustainedOscillation,
    ChaoticLike,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SteadyState => "steady_state",
            Self::SustainedOscillation => "sustained_oscillation",
            Self::ChaoticLike => "chaotic_like",
            Self::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerdictOptions {
    pub t_end: f64,
    pub grid_step: f64,
    pub tail_fraction: f64,
    pub eps: f64,
    pub lyapunov: LyapunovOptions,
    /// Repeat the steady-state test at 100× tighter tolerances and report
    /// `inconclusive` when the two disagree.
    pub cross_check: bool,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self {
            t_end: 200.0,
            grid_step: 0.01,
            tail_fraction: 0.2,
            eps: 1e-5,
            lyapunov: LyapunovOptions::default(),
            cross_check: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub verdict: Verdict,
    pub steady_state: SteadyStateReport,
    pub lyapunov: LyapunovEstimate,
    /// Tail statistics of p, when the system has one.
    pub p_tail: Option<TailStats>,
}

pub fn entrainment_verdict(
    sys: &ComposedSystem,
    input: &InputSignal,
    x0: &[f64],
    cfg: &IntegratorConfig,
    opts: &VerdictOptions,
) -> Result<VerdictReport, DiagnosticsError> {
    let grid = OutputGrid::Points(uniform_grid(0.0, opts.t_end, opts.grid_step)?);
    let traj = integrate(sys, input, x0, (0.0, opts.t_end), cfg, &grid)?;
    let steady = detect_steady_state(&traj, opts.tail_fraction, opts.eps)?;
    let p_tail = match sys.layout().p() {
        Some(j) => Some(tail_stats(
            &traj,
            &sys.layout().names()[j],
            opts.tail_fraction,
        )?),
        None => None,
    };
    let lyap = lyapunov_max(sys, input, x0, cfg, &opts.lyapunov)?;

    let mut verdict = if steady.converged {
        Verdict::SteadyState
    } else if lyap.lambda_max > CHAOS_THRESHOLD {
        Verdict::ChaoticLike
    } else if lyap.lambda_max.abs() <= CHAOS_THRESHOLD {
        Verdict::SustainedOscillation
    } else {
        Verdict::Inconclusive
    };

    if opts.cross_check {
        let tight = IntegratorConfig {
            rel_tol: cfg.rel_tol / 100.0,
            abs_tol: cfg.abs_tol / 100.0,
            ..cfg.clone()
        };
        let traj2 = integrate(sys, input, x0, (0.0, opts.t_end), &tight, &grid)?;
        let steady2 = detect_steady_state(&traj2, opts.tail_fraction, opts.eps)?;
        if steady2.converged != steady.converged {
            verdict = Verdict::Inconclusive;
        }
    }

    Ok(VerdictReport {
        verdict,
        steady_state: steady,
        lyapunov: lyap,
        p_tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{compose_example1, compose_example2, LorenzParams};
    use crate::solver::uniform_grid;

    fn flat(rows: usize, span: f64) -> Trajectory {
        let times = uniform_grid(0.0, span, span / (rows - 1) as f64).unwrap();
        Trajectory {
            scenario_id: "flat".into(),
            input_spec: "const:0".into(),
            columns: vec!["a".into(), "b".into()],
            states: vec![vec![1.0, -3.0]; times.len()],
            times,
        }
    }

    fn run(sys: &ComposedSystem, u: &InputSignal, x0: &[f64], t_end: f64) -> Trajectory {
        let grid = OutputGrid::Points(uniform_grid(0.0, t_end, 0.01).unwrap());
        integrate(
            sys,
            u,
            x0,
            (0.0, t_end),
            &IntegratorConfig::default(),
            &grid,
        )
        .unwrap()
    }

    const EX1_X0: [f64; 5] = [5.0, 0.0, 1.0, 0.0, 0.0];
    const EX2_X0: [f64; 5] = [2.95, -0.98, 0.94, -4.07, 4.89];

    #[test]
    fn constant_trajectory_is_steady() {
        let r = detect_steady_state(&flat(101, 20.0), 0.2, 1e-5).unwrap();
        assert!(r.converged);
        assert_eq!(r.max_component_variation, 0.0);
        assert_eq!(r.velocity_norm_at_end, 0.0);
        assert_eq!(r.final_state, vec![1.0, -3.0]);
        assert_eq!(r.tail_window.1, 20.0);
    }

    #[test]
    fn short_or_bad_inputs_are_rejected() {
        assert!(matches!(
            detect_steady_state(&flat(11, 5.0), 0.2, 1e-5),
            Err(DiagnosticsError::InsufficientData(_))
        ));
        for f in [0.0, 1.0, -0.5] {
            assert!(matches!(
                detect_steady_state(&flat(101, 20.0), f, 1e-5),
                Err(DiagnosticsError::Parameter(_))
            ));
        }
        assert!(matches!(
            tail_stats(&flat(101, 20.0), "nope", 0.2),
            Err(DiagnosticsError::UnknownVariable(_))
        ));
    }

    #[test]
    fn relative_eps_scales_with_magnitude() {
        let mut tr = flat(101, 20.0);
        for row in tr.states.iter_mut() {
            row[0] = 1000.0;
        }
        let last = tr.states.len() - 1;
        tr.states[last][0] = 1000.005;
        // spread 5e-3 ≤ 1e-5·1001
        assert!(detect_steady_state(&tr, 0.2, 1e-5).unwrap().converged);
        tr.states[last][1] = -3.001;
        assert!(!detect_steady_state(&tr, 0.2, 1e-5).unwrap().converged);
    }

    #[test]
    fn tail_stats_on_ramp() {
        let mut tr = flat(101, 10.0);
        for (t, row) in tr.times.iter().zip(tr.states.iter_mut()) {
            row[0] = *t;
        }
        let s = tail_stats(&tr, "a", 0.2).unwrap();
        assert_eq!(s.window, (8.0, 10.0));
        assert!((s.mean - 9.0).abs() < 1e-12);
        assert_eq!((s.min, s.max), (8.0, 10.0));
    }

    #[test]
    fn example1_dichotomy() {
        let sys = compose_example1(0.1, LorenzParams::default()).unwrap();
        let steady = run(&sys, &InputSignal::constant(10.0).unwrap(), &EX1_X0, 100.0);
        assert!(detect_steady_state(&steady, 0.2, 1e-5).unwrap().converged);
        let forced = run(&sys, &InputSignal::unit_sine(), &EX1_X0, 200.0);
        assert!(!detect_steady_state(&forced, 0.2, 1e-5).unwrap().converged);
    }

    /// Period average of α(A sin θ) by composite Simpson quadrature.
    fn mean_alpha_over_period(k: f64, amplitude: f64) -> f64 {
        let n = 20_000;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let f = |th: f64| {
            let y = amplitude * th.sin();
            y * y / (k + y * y)
        };
        let mut acc = f(0.0) + f(2.0 * std::f64::consts::PI);
        for i in 1..n {
            acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0 / (2.0 * std::f64::consts::PI)
    }

    #[test]
    fn p_tail_means() {
        let oracle = mean_alpha_over_period(0.1, std::f64::consts::FRAC_1_SQRT_2);
        assert!((oracle - 0.592).abs() < 1e-3, "oracle {oracle}");

        let ex1 = compose_example1(0.1, LorenzParams::default()).unwrap();
        let tr = run(&ex1, &InputSignal::unit_sine(), &EX1_X0, 200.0);
        let p = tail_stats(&tr, "p", 0.2).unwrap();
        assert!((p.mean - 0.59).abs() < 0.1, "p mean {}", p.mean);
        assert!(
            (p.mean - oracle).abs() < 0.01,
            "p mean {} vs period average {oracle}",
            p.mean
        );
        assert!(p.min <= p.mean && p.mean <= p.max);

        let ex2 = compose_example2(1e-4).unwrap();
        let tr = run(&ex2, &InputSignal::unit_sine(), &EX2_X0, 200.0);
        assert!(tail_stats(&tr, "p", 0.2).unwrap().mean > 0.9);
        let tr = run(&ex2, &InputSignal::constant(5.13).unwrap(), &EX2_X0, 200.0);
        assert!(tail_stats(&tr, "p", 0.2).unwrap().mean < 0.05);
    }

    #[test]
    fn shrinking_tail_never_increases_variation() {
        let sys = compose_example1(0.1, LorenzParams::default()).unwrap();
        let tr = run(&sys, &InputSignal::constant(-1.0).unwrap(), &EX1_X0, 100.0);
        let wide = detect_steady_state(&tr, 0.2, 1e-5).unwrap();
        let narrow = detect_steady_state(&tr, 0.1, 1e-5).unwrap();
        assert!(wide.converged);
        assert!(narrow.max_component_variation <= wide.max_component_variation);
    }

    #[test]
    fn saturation_fraction_tracks_input() {
        let sys = compose_example2(1e-4).unwrap();
        let u = InputSignal::unit_sine();
        let tr = run(&sys, &u, &EX2_X0, 50.0);
        let frac = saturated_fraction(&sys, &u, &tr, 0.2).unwrap().unwrap();
        assert!(frac > 0.9, "{frac}");
        let c = InputSignal::constant(3.0).unwrap();
        let tr = run(&sys, &c, &EX2_X0, 50.0);
        assert_eq!(saturated_fraction(&sys, &c, &tr, 0.2).unwrap(), Some(0.0));
    }

    #[test]
    fn verdicts_for_example1() {
        let sys = compose_example1(0.1, LorenzParams::default()).unwrap();
        let cfg = IntegratorConfig::default();
        let opts = VerdictOptions::default();
        let forced =
            entrainment_verdict(&sys, &InputSignal::unit_sine(), &EX1_X0, &cfg, &opts).unwrap();
        assert_eq!(forced.verdict, Verdict::ChaoticLike, "{forced:?}");
        for u0 in [-10.0, -3.7, 0.0, 6.2, 10.0] {
            let r = entrainment_verdict(
                &sys,
                &InputSignal::constant(u0).unwrap(),
                &EX1_X0,
                &cfg,
                &opts,
            )
            .unwrap();
            assert_eq!(r.verdict, Verdict::SteadyState, "u0 = {u0}");
        }
    }

    #[test]
    fn example2_constant_converges_to_origin() {
        let sys = compose_example2(1e-4).unwrap();
        let r = entrainment_verdict(
            &sys,
            &InputSignal::constant(-7.3).unwrap(),
            &EX2_X0,
            &IntegratorConfig::default(),
            &VerdictOptions::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::SteadyState);
        assert!(r.steady_state.final_state[2..]
            .iter()
            .all(|v| v.abs() < 1e-4));
        assert!(r.lyapunov.lambda_max < 0.0);
    }
}
