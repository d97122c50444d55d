//! Largest Lyapunov exponent by two-trajectory renormalization (Benettin).

use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::blocks::ComposedSystem;
use crate::signals::InputSignal;
use crate::solver::{IntegratorConfig, Propagator, SolverError};

/// Fewest renormalizations accepted for an estimate.
pub const MIN_RENORM_COUNT: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LyapunovOptions {
    /// Time integrated before the perturbation is introduced.
    pub transient: f64,
    /// Averaging time after the transient.
    pub horizon: f64,
    /// Perturbation size, restored after every renormalization.
    pub d0: f64,
    pub renorm_dt: f64,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self {
            transient: 100.0,
            horizon: 400.0,
            d0: 1e-8,
            renorm_dt: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda_max: f64,
    pub renorm_interval: f64,
    pub renorm_count: usize,
    pub transient_discarded: f64,
    pub perturbation_size: f64,
}

impl LyapunovOptions {
    fn renorm_count(&self) -> Result<usize, DiagnosticsError> {
        let finite = [self.transient, self.horizon, self.d0, self.renorm_dt]
            .iter()
            .all(|v| v.is_finite());
        if !finite
            || self.transient < 0.0
            || self.horizon <= 0.0
            || self.d0 <= 0.0
            || self.renorm_dt <= 0.0
        {
            return Err(DiagnosticsError::Parameter(format!(
                "invalid Lyapunov options {self:?}"
            )));
        }
        let count = (self.horizon / self.renorm_dt + 1e-9).floor() as usize;
        if count < MIN_RENORM_COUNT {
            return Err(DiagnosticsError::InsufficientData(format!(
                "{count} renormalizations, need at least {MIN_RENORM_COUNT}"
            )));
        }
        if self.horizon < 100.0 * self.renorm_dt {
            return Err(DiagnosticsError::Parameter(format!(
                "horizon {} must be at least 100 renormalization intervals ({})",
                self.horizon,
                100.0 * self.renorm_dt
            )));
        }
        Ok(count)
    }
}

/// λ = (1/T)·Σ ln(dᵢ/d0) over the renormalizations after the transient.
///
/// The perturbation lives on the z subsystem only; the filter and lag states
/// of both copies are kept identical.
pub fn lyapunov_max(
    sys: &ComposedSystem,
    input: &InputSignal,
    x0: &[f64],
    cfg: &IntegratorConfig,
    opts: &LyapunovOptions,
) -> Result<LyapunovEstimate, DiagnosticsError> {
    let count = opts.renorm_count()?;
    cfg.validate()?;
    let dim = sys.dim();
    if x0.len() != dim {
        return Err(SolverError::Dimension {
            got: x0.len(),
            expected: dim,
        }
        .into());
    }
    let z = sys.layout().z();
    if z.is_empty() {
        return Err(DiagnosticsError::Parameter(
            "system has no z subsystem to perturb".into(),
        ));
    }

    let mut base = x0.to_vec();
    Propagator::new(sys, input, cfg, 1).advance(
        0.0,
        &mut base,
        opts.transient,
        Some(&[]),
        &mut |_, _| {},
    )?;

    let mut pair = [base.clone(), base].concat();
    pair[dim + z.start] += opts.d0;

    let mut prop = Propagator::new(sys, input, cfg, 2);
    let mut log_sum = 0.0;
    let mut t = opts.transient;
    for k in 1..=count {
        let t_next = opts.transient + k as f64 * opts.renorm_dt;
        prop.advance(t, &mut pair, t_next, Some(&[]), &mut |_, _| {})?;
        t = t_next;

        let (a, b) = pair.split_at_mut(dim);
        let d = z.clone().map(|i| (b[i] - a[i]).powi(2)).sum::<f64>().sqrt();
        if !d.is_finite() {
            return Err(SolverError::Divergence { last_good_t: t }.into());
        }
        if d == 0.0 {
            return Err(DiagnosticsError::InsufficientData(format!(
                "perturbation collapsed to zero at t = {t}"
            )));
        }
        log_sum += (d / opts.d0).ln();
        let scale = opts.d0 / d;
        for i in 0..dim {
            b[i] = if z.contains(&i) {
                a[i] + (b[i] - a[i]) * scale
            } else {
                a[i]
            };
        }
    }

    Ok(LyapunovEstimate {
        lambda_max: log_sum / (count as f64 * opts.renorm_dt),
        renorm_interval: opts.renorm_dt,
        renorm_count: count,
        transient_discarded: opts.transient,
        perturbation_size: opts.d0,
    })
}
