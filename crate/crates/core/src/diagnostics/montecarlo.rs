//! Seeded sweep over random constant inputs and initial states.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{entrainment_verdict, DiagnosticsError, Verdict, VerdictOptions, VerdictReport};
use crate::blocks::ComposedSystem;
use crate::scenario::ScenarioId;
use crate::signals::InputSignal;
use crate::solver::IntegratorConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonteCarloOptions {
    pub n_samples: usize,
    pub seed: u64,
    /// Inputs and every initial-state component are drawn uniformly from here.
    pub range: (f64, f64),
    /// Saturation constant; the scenario default when `None`.
    pub k: Option<f64>,
    /// Worker threads; rayon's default when `None`.
    pub jobs: Option<usize>,
    pub integrator: IntegratorConfig,
    pub verdict: VerdictOptions,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self {
            n_samples: 20,
            seed: 0,
            range: (-10.0, 10.0),
            k: None,
            jobs: None,
            integrator: IntegratorConfig::default(),
            verdict: VerdictOptions::default(),
        }
    }
}

/// A verdict, or the record of a run that failed numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleVerdict {
    SteadyState,
    SustainedOscillation,
    ChaoticLike,
    Inconclusive,
    Divergence,
}

impl From<Verdict> for SampleVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::SteadyState => Self::SteadyState,
            Verdict::SustainedOscillation => Self::SustainedOscillation,
            Verdict::ChaoticLike => Self::ChaoticLike,
            Verdict::Inconclusive => Self::Inconclusive,
        }
    }
}

impl fmt::Display for SampleVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant serializes");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

/// One line of the verdict table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloRow {
    pub sample: usize,
    pub u0: f64,
    pub x0: Vec<f64>,
    pub verdict_const: SampleVerdict,
    pub verdict_sin: SampleVerdict,
    pub lambda_const: Option<f64>,
    pub lambda_sin: Option<f64>,
    pub p_tail_mean_const: Option<f64>,
    pub p_tail_mean_sin: Option<f64>,
    #[serde(skip)]
    pub final_state_const: Option<Vec<f64>>,
    #[serde(skip)]
    pub final_state_sin: Option<Vec<f64>>,
    #[serde(skip)]
    pub errors: Vec<String>,
}

/// Draws `(u0, x0)` for one sample. Each sample index gets its own ChaCha
/// stream under the shared seed, so results do not depend on scheduling.
pub fn draw_sample(seed: u64, sample: usize, dim: usize, range: (f64, f64)) -> (f64, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample as u64);
    let (lo, hi) = range;
    let mut draw = || {
        if hi > lo {
            rng.random_range(lo..hi)
        } else {
            lo
        }
    };
    let u0 = draw();
    let x0 = (0..dim).map(|_| draw()).collect();
    (u0, x0)
}

type Outcome = (
    SampleVerdict,
    Option<f64>,
    Option<f64>,
    Option<Vec<f64>>,
    Option<String>,
);

fn outcome(result: Result<VerdictReport, DiagnosticsError>) -> Outcome {
    match result {
        Ok(r) => (
            r.verdict.into(),
            Some(r.lyapunov.lambda_max),
            r.p_tail.map(|p| p.mean),
            Some(r.steady_state.final_state),
            None,
        ),
        Err(e) => (
            SampleVerdict::Divergence,
            None,
            None,
            None,
            Some(e.to_string()),
        ),
    }
}

fn run_sample(sys: &ComposedSystem, opts: &MonteCarloOptions, sample: usize) -> MonteCarloRow {
    let (u0, x0) = draw_sample(opts.seed, sample, sys.dim(), opts.range);
    let run = |input: InputSignal| {
        outcome(entrainment_verdict(
            sys,
            &input,
            &x0,
            &opts.integrator,
            &opts.verdict,
        ))
    };
    let (verdict_const, lambda_const, p_const, final_const, err_const) =
        run(InputSignal::Constant(u0));
    let (verdict_sin, lambda_sin, p_sin, final_sin, err_sin) = run(InputSignal::unit_sine());
    MonteCarloRow {
        sample,
        u0,
        x0: x0.clone(),
        verdict_const,
        verdict_sin,
        lambda_const,
        lambda_sin,
        p_tail_mean_const: p_const,
        p_tail_mean_sin: p_sin,
        final_state_const: final_const,
        final_state_sin: final_sin,
        errors: err_const.into_iter().chain(err_sin).collect(),
    }
}

/// Runs every sample under a constant input `u0` and under `sin t`.
/// Numerical failures become `divergence` rows rather than errors.
pub fn monte_carlo(
    scenario: &str,
    opts: &MonteCarloOptions,
) -> Result<Vec<MonteCarloRow>, DiagnosticsError> {
    if opts.n_samples == 0 {
        return Err(DiagnosticsError::Parameter("n_samples must be ≥ 1".into()));
    }
    let (lo, hi) = opts.range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(DiagnosticsError::Parameter(format!(
            "bad sampling range ({lo}, {hi})"
        )));
    }
    if opts.jobs == Some(0) {
        return Err(DiagnosticsError::Parameter("jobs must be ≥ 1".into()));
    }
    opts.integrator.validate()?;
    let id: ScenarioId = scenario.parse()?;
    let sys = id.build(opts.k.unwrap_or_else(|| id.default_k()))?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = opts.jobs {
        builder = builder.num_threads(jobs);
    }
    let pool = builder
        .build()
        .map_err(|e| DiagnosticsError::Parameter(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        (0..opts.n_samples)
            .into_par_iter()
            .map(|i| run_sample(&sys, opts, i))
            .collect()
    }))
}

/// Verdict counts for the constant-input and periodic-input runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub samples: usize,
    pub constant: BTreeMap<SampleVerdict, usize>,
    pub periodic: BTreeMap<SampleVerdict, usize>,
}

impl MonteCarloSummary {
    pub fn from_rows(rows: &[MonteCarloRow]) -> Self {
        let mut s = Self {
            samples: rows.len(),
            ..Self::default()
        };
        for r in rows {
            *s.constant.entry(r.verdict_const).or_default() += 1;
            *s.periodic.entry(r.verdict_sin).or_default() += 1;
        }
        s
    }

    pub fn constant_count(&self, v: SampleVerdict) -> usize {
        self.constant.get(&v).copied().unwrap_or(0)
    }

    pub fn periodic_count(&self, v: SampleVerdict) -> usize {
        self.periodic.get(&v).copied().unwrap_or(0)
    }
}

impl fmt::Display for MonteCarloSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |m: &BTreeMap<SampleVerdict, usize>| {
            m.iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        write!(
            f,
            "samples={} | const: {} | sin: {}",
            self.samples,
            join(&self.constant),
            join(&self.periodic)
        )
    }
}
