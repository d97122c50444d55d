//! Explicit Runge–Kutta integration of composed systems.
//!
//! Two methods are available: the Dormand–Prince 5(4) embedded pair with
//! step-size control and a 4th-order continuous extension for output on an
//! arbitrary grid, and classic fixed-step RK4, which lands exactly on every
//! grid point.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::ComposedSystem;
use crate::signals::{InputSignal, SignalError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid integrator configuration: {0}")]
    Config(String),
    #[error("invalid output grid: {0}")]
    Grid(String),
    #[error("initial state has length {got}, system dimension is {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("step size underflow at t = {t} (h = {h:e}); problem may be stiff")]
    StepUnderflow { t: f64, h: f64 },
    #[error("state became non-finite; last good time t = {last_good_t}")]
    Divergence { last_good_t: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    StepBudget { max_steps: u64, t: f64 },
    #[error("input signal: {0}")]
    Input(#[from] SignalError),
}

impl SolverError {
    /// Last time at which the state was known good, when the failure has one.
    pub fn last_good_time(&self) -> Option<f64> {
        match self {
            Self::StepUnderflow { t, .. } | Self::StepBudget { t, .. } => Some(*t),
            Self::Divergence { last_good_t } => Some(*last_good_t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4Fixed,
    #[default]
    Rk45Adaptive,
}

impl FromStr for Method {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rk4_fixed" | "rk4" => Ok(Self::Rk4Fixed),
            "rk45_adaptive" | "rk45" => Ok(Self::Rk45Adaptive),
            other => Err(SolverError::Config(format!(
                "unknown method '{other}' (expected rk4_fixed or rk45_adaptive)"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rk4Fixed => "rk4_fixed",
            Self::Rk45Adaptive => "rk45_adaptive",
        })
    }
}

/// `h_init` doubles as the step size of `rk4_fixed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: u64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45Adaptive,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            h_init: 1e-3,
            h_min: 1e-12,
            h_max: 0.1,
            max_steps: 100_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(h: f64) -> Self {
        Self {
            method: Method::Rk4Fixed,
            h_init: h,
            h_min: h.min(1e-12),
            h_max: h,
            ..Self::default()
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let all_finite = [
            self.rel_tol,
            self.abs_tol,
            self.h_init,
            self.h_min,
            self.h_max,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(SolverError::Config("non-finite setting".into()));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(SolverError::Config("tolerances must be > 0".into()));
        }
        if !(0.0 < self.h_min && self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return Err(SolverError::Config(format!(
                "need 0 < h_min ≤ h_init ≤ h_max, got {} / {} / {}",
                self.h_min, self.h_init, self.h_max
            )));
        }
        if self.max_steps == 0 {
            return Err(SolverError::Config("max_steps must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Where the trajectory is sampled.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputGrid {
    /// Exactly these times, strictly increasing and inside the span.
    Points(Vec<f64>),
    /// Every accepted internal step.
    Dense,
}

/// `t0, t0 + step, …` ending exactly at `t1`. A final interval shorter than
/// `step` is kept when the span is not a multiple of it.
pub fn uniform_grid(t0: f64, t1: f64, step: f64) -> Result<Vec<f64>, SolverError> {
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(SolverError::Grid(format!("bad span ({t0}, {t1})")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(SolverError::Grid(format!(
            "grid step must be > 0, got {step}"
        )));
    }
    let span = t1 - t0;
    let ratio = span / step;
    let n = ratio.round();
    if n > 1e9 {
        return Err(SolverError::Grid("grid would exceed 1e9 points".into()));
    }
    let n = if (ratio - n).abs() <= 1e-9 * ratio.max(1.0) {
        n as usize
    } else {
        ratio.floor() as usize + 1
    };
    let mut grid: Vec<f64> = (0..n).map(|i| t0 + i as f64 * step).collect();
    if grid.is_empty() || t1 > *grid.last().unwrap() {
        grid.push(t1);
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub scenario_id: String,
    pub input_spec: String,
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    /// One row per entry of `times`, columns as in `columns`.
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one row")
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one row")
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.states.iter().map(|row| row[j]).collect())
    }

    /// State at `t` by linear interpolation between stored rows.
    pub fn sample(&self, t: f64) -> Option<Vec<f64>> {
        if self.is_empty() || t < self.t_start() || t > self.t_end() {
            return None;
        }
        let i = self.times.partition_point(|&ti| ti < t);
        if self.times[i] == t || i == 0 {
            return Some(self.states[i].clone());
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        Some(
            self.states[i - 1]
                .iter()
                .zip(&self.states[i])
                .map(|(a, b)| a + w * (b - a))
                .collect(),
        )
    }
}

// Dormand–Prince 5(4) tableau.
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

// 5th-order minus embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// Steps `copies` independent copies of a system, stacked in one state
/// vector, under a shared input and a shared step sequence.
pub(crate) struct Propagator<'a> {
    sys: &'a ComposedSystem,
    input: &'a InputSignal,
    cfg: &'a IntegratorConfig,
    copies: usize,
    h: f64,
    steps: u64,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
    cont: [Vec<f64>; 5],
    interp: Vec<f64>,
}

impl<'a> Propagator<'a> {
    pub(crate) fn new(
        sys: &'a ComposedSystem,
        input: &'a InputSignal,
        cfg: &'a IntegratorConfig,
        copies: usize,
    ) -> Self {
        let n = sys.dim() * copies;
        let v = || vec![0.0; n];
        Self {
            sys,
            input,
            cfg,
            copies,
            h: cfg.h_init,
            steps: 0,
            k: std::array::from_fn(|_| v()),
            tmp: v(),
            y_new: v(),
            err: v(),
            cont: std::array::from_fn(|_| v()),
            interp: v(),
        }
    }

    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), SolverError> {
        let u = self.input.eval(t)?;
        let d = self.sys.dim();
        for c in 0..self.copies {
            let r = c * d..(c + 1) * d;
            self.sys.rhs_into(&y[r.clone()], u, &mut out[r]);
        }
        Ok(())
    }

    /// Integrates `y` from `t0` to `t_end` in place. With `grid`, calls `emit`
    /// at each grid time in `(t0, t_end]`; without, after every step.
    pub(crate) fn advance(
        &mut self,
        t0: f64,
        y: &mut [f64],
        t_end: f64,
        grid: Option<&[f64]>,
        emit: &mut dyn FnMut(f64, &[f64]),
    ) -> Result<(), SolverError> {
        if t_end <= t0 {
            return Ok(());
        }
        match self.cfg.method {
            Method::Rk45Adaptive => self.advance_dopri(t0, y, t_end, grid, emit),
            Method::Rk4Fixed => self.advance_rk4(t0, y, t_end, grid, emit),
        }
    }

    fn check_budget(&mut self, t: f64) -> Result<(), SolverError> {
        if self.steps >= self.cfg.max_steps {
            return Err(SolverError::StepBudget {
                max_steps: self.cfg.max_steps,
                t,
            });
        }
        self.steps += 1;
        Ok(())
    }

    fn advance_dopri(
        &mut self,
        t0: f64,
        y: &mut [f64],
        t_end: f64,
        grid: Option<&[f64]>,
        emit: &mut dyn FnMut(f64, &[f64]),
    ) -> Result<(), SolverError> {
        let n = y.len();
        let (rtol, atol) = (self.cfg.rel_tol, self.cfg.abs_tol);
        let mut t = t0;
        let mut next_point = 0usize;
        {
            let mut k1 = std::mem::take(&mut self.k[0]);
            let r = self.eval(t, y, &mut k1);
            self.k[0] = k1;
            r?;
        }
        while t < t_end {
            self.check_budget(t)?;
            let remaining = t_end - t;
            let mut h = self.h.min(self.cfg.h_max);
            let landing = h >= remaining;
            if landing {
                h = remaining;
            } else if h > 0.5 * remaining {
                h = 0.5 * remaining;
            }
            let t_new = if landing { t_end } else { t + h };

            self.stages(t, y, h, t_new)?;
            let mut err_norm = 0.0f64;
            for i in 0..n {
                let sc = atol + rtol * y[i].abs().max(self.y_new[i].abs());
                err_norm = err_norm.max((self.err[i] / sc).abs());
            }
            if !self.y_new.iter().all(|v| v.is_finite()) {
                return Err(SolverError::Divergence { last_good_t: t });
            }
            if err_norm.is_nan() {
                err_norm = f64::INFINITY;
            }

            if err_norm <= 1.0 {
                if let Some(points) = grid {
                    let mut have_cont = false;
                    while next_point < points.len() && points[next_point] <= t_new {
                        let tp = points[next_point];
                        if tp == t_new {
                            emit(tp, &self.y_new);
                        } else {
                            if !have_cont {
                                self.build_continuous(y, h);
                                have_cont = true;
                            }
                            self.interpolate((tp - t) / h);
                            emit(tp, &self.interp);
                        }
                        next_point += 1;
                    }
                } else {
                    emit(t_new, &self.y_new);
                }
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                t = t_new;
                let fac = if err_norm == 0.0 {
                    FAC_MAX
                } else {
                    (SAFETY * err_norm.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
                };
                // Do not let a shortened landing step shrink the carried step.
                self.h = if landing {
                    self.h.max(h * fac)
                } else {
                    h * fac
                };
            } else {
                let fac = (SAFETY * err_norm.powf(-0.2)).max(FAC_MIN);
                self.h = h * fac;
                if self.h < self.cfg.h_min {
                    return Err(SolverError::StepUnderflow { t, h: self.h });
                }
            }
        }
        Ok(())
    }

    /// Fills `k[1..7]`, `y_new` and `err` for a step of size `h` from `(t, y)`;
    /// `k[0]` must hold f(t, y).
    fn stages(&mut self, t: f64, y: &[f64], h: f64, t_new: f64) -> Result<(), SolverError> {
        let n = y.len();
        let mut k = std::mem::take(&mut self.k);
        let mut tmp = std::mem::take(&mut self.tmp);
        let result = (|| {
            for i in 0..n {
                tmp[i] = y[i] + h * A21 * k[0][i];
            }
            self.eval(t + C2 * h, &tmp, &mut k[1])?;
            for i in 0..n {
                tmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
            }
            self.eval(t + C3 * h, &tmp, &mut k[2])?;
            for i in 0..n {
                tmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
            }
            self.eval(t + C4 * h, &tmp, &mut k[3])?;
            for i in 0..n {
                tmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
            }
            self.eval(t + C5 * h, &tmp, &mut k[4])?;
            for i in 0..n {
                tmp[i] = y[i]
                    + h * (A61 * k[0][i]
                        + A62 * k[1][i]
                        + A63 * k[2][i]
                        + A64 * k[3][i]
                        + A65 * k[4][i]);
            }
            self.eval(t_new, &tmp, &mut k[5])?;
            for i in 0..n {
                self.y_new[i] = y[i]
                    + h * (A71 * k[0][i]
                        + A73 * k[2][i]
                        + A74 * k[3][i]
                        + A75 * k[4][i]
                        + A76 * k[5][i]);
            }
            self.eval(t_new, &self.y_new, &mut k[6])?;
            for i in 0..n {
                self.err[i] = h
                    * (E1 * k[0][i]
                        + E3 * k[2][i]
                        + E4 * k[3][i]
                        + E5 * k[4][i]
                        + E6 * k[5][i]
                        + E7 * k[6][i]);
            }
            Ok(())
        })();
        self.k = k;
        self.tmp = tmp;
        result
    }

    fn build_continuous(&mut self, y: &[f64], h: f64) {
        let k = &self.k;
        for i in 0..y.len() {
            let ydiff = self.y_new[i] - y[i];
            let bspl = h * k[0][i] - ydiff;
            self.cont[0][i] = y[i];
            self.cont[1][i] = ydiff;
            self.cont[2][i] = bspl;
            self.cont[3][i] = ydiff - h * k[6][i] - bspl;
            self.cont[4][i] = h
                * (D1 * k[0][i]
                    + D3 * k[2][i]
                    + D4 * k[3][i]
                    + D5 * k[4][i]
                    + D6 * k[5][i]
                    + D7 * k[6][i]);
        }
    }

    fn interpolate(&mut self, theta: f64) {
        let theta1 = 1.0 - theta;
        let c = &self.cont;
        for i in 0..self.interp.len() {
            self.interp[i] = c[0][i]
                + theta * (c[1][i] + theta1 * (c[2][i] + theta * (c[3][i] + theta1 * c[4][i])));
        }
    }

    fn advance_rk4(
        &mut self,
        t0: f64,
        y: &mut [f64],
        t_end: f64,
        grid: Option<&[f64]>,
        emit: &mut dyn FnMut(f64, &[f64]),
    ) -> Result<(), SolverError> {
        let h = self.cfg.h_init;
        let mut t = t0;
        let segment = |this: &mut Self, t: &mut f64, target: f64, y: &mut [f64]| {
            let span = target - *t;
            if span <= 0.0 {
                return Ok(());
            }
            let n_sub = ((span / h) - 1e-9).ceil().max(1.0) as u64;
            let h_eff = span / n_sub as f64;
            let start = *t;
            for j in 1..=n_sub {
                this.check_budget(*t)?;
                let t_next = if j == n_sub {
                    target
                } else {
                    start + j as f64 * h_eff
                };
                this.rk4_step(*t, y, t_next - *t)?;
                *t = t_next;
            }
            Ok::<(), SolverError>(())
        };
        match grid {
            Some(points) => {
                for &tp in points.iter().filter(|&&tp| tp > t0 && tp <= t_end) {
                    segment(self, &mut t, tp, y)?;
                    emit(tp, y);
                }
                segment(self, &mut t, t_end, y)?;
            }
            None => {
                let mut j = 1u64;
                while t < t_end {
                    let target = (t0 + j as f64 * h).min(t_end);
                    let target = if t_end - target < 1e-9 * h {
                        t_end
                    } else {
                        target
                    };
                    segment(self, &mut t, target, y)?;
                    emit(t, y);
                    j += 1;
                }
            }
        }
        Ok(())
    }

    fn rk4_step(&mut self, t: f64, y: &mut [f64], h: f64) -> Result<(), SolverError> {
        let n = y.len();
        let mut k = std::mem::take(&mut self.k);
        let mut tmp = std::mem::take(&mut self.tmp);
        let result = (|| {
            self.eval(t, y, &mut k[0])?;
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * h * k[0][i];
            }
            self.eval(t + 0.5 * h, &tmp, &mut k[1])?;
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * h * k[1][i];
            }
            self.eval(t + 0.5 * h, &tmp, &mut k[2])?;
            for i in 0..n {
                tmp[i] = y[i] + h * k[2][i];
            }
            self.eval(t + h, &tmp, &mut k[3])?;
            Ok(())
        })();
        self.tmp = tmp;
        if let Err(e) = result {
            self.k = k;
            return Err(e);
        }
        for i in 0..n {
            y[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        self.k = k;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(SolverError::Divergence { last_good_t: t });
        }
        Ok(())
    }
}

fn validate_problem(
    sys: &ComposedSystem,
    x0: &[f64],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<(), SolverError> {
    cfg.validate()?;
    if x0.len() != sys.dim() {
        return Err(SolverError::Dimension {
            got: x0.len(),
            expected: sys.dim(),
        });
    }
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(SolverError::Config("initial state must be finite".into()));
    }
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(SolverError::Grid(format!(
            "time span ({t0}, {t1}) must be finite and increasing"
        )));
    }
    Ok(())
}

fn validate_grid(points: &[f64], t_span: (f64, f64)) -> Result<(), SolverError> {
    let (t0, t1) = t_span;
    if points.is_empty() {
        return Err(SolverError::Grid("empty output grid".into()));
    }
    if points.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SolverError::Grid(
            "grid times must be strictly increasing".into(),
        ));
    }
    if points[0] < t0 || *points.last().unwrap() > t1 || !points.iter().all(|t| t.is_finite()) {
        return Err(SolverError::Grid(format!(
            "grid leaves the span [{t0}, {t1}]"
        )));
    }
    Ok(())
}

/// Integrates `copies` stacked copies and returns `(times, stacked rows)`.
fn run(
    sys: &ComposedSystem,
    input: &InputSignal,
    y0: Vec<f64>,
    copies: usize,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    grid: &OutputGrid,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), SolverError> {
    let (t0, t1) = t_span;
    let mut times = Vec::new();
    let mut rows = Vec::new();
    let mut y = y0;
    let mut prop = Propagator::new(sys, input, cfg, copies);
    let mut emit = |t: f64, s: &[f64]| {
        times.push(t);
        rows.push(s.to_vec());
    };
    match grid {
        OutputGrid::Points(points) => {
            validate_grid(points, t_span)?;
            if points[0] == t0 {
                emit(t0, &y);
            }
            let inner = if points[0] == t0 {
                &points[1..]
            } else {
                &points[..]
            };
            let t_last = *points.last().unwrap();
            prop.advance(t0, &mut y, t_last, Some(inner), &mut emit)?;
        }
        OutputGrid::Dense => {
            emit(t0, &y);
            prop.advance(t0, &mut y, t1, None, &mut emit)?;
        }
    }
    Ok((times, rows))
}

pub fn integrate(
    sys: &ComposedSystem,
    input: &InputSignal,
    x0: &[f64],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    grid: &OutputGrid,
) -> Result<Trajectory, SolverError> {
    validate_problem(sys, x0, t_span, cfg)?;
    let (times, states) = run(sys, input, x0.to_vec(), 1, t_span, cfg, grid)?;
    Ok(Trajectory {
        scenario_id: sys.scenario_id().to_string(),
        input_spec: input.to_string(),
        columns: sys.layout().names().to_vec(),
        times,
        states,
    })
}

/// Integrates two initial states with one shared step sequence so both
/// trajectories are sampled on the identical grid.
pub fn integrate_pair(
    sys: &ComposedSystem,
    input: &InputSignal,
    x0_a: &[f64],
    x0_b: &[f64],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    grid: &OutputGrid,
) -> Result<(Trajectory, Trajectory), SolverError> {
    validate_problem(sys, x0_a, t_span, cfg)?;
    validate_problem(sys, x0_b, t_span, cfg)?;
    let d = sys.dim();
    let y0 = [x0_a, x0_b].concat();
    let (times, rows) = run(sys, input, y0, 2, t_span, cfg, grid)?;
    let split = |r: std::ops::Range<usize>| Trajectory {
        scenario_id: sys.scenario_id().to_string(),
        input_spec: input.to_string(),
        columns: sys.layout().names().to_vec(),
        times: times.clone(),
        states: rows.iter().map(|row| row[r.clone()].to_vec()).collect(),
    };
    Ok((split(0..d), split(d..2 * d)))
}
