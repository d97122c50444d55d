//! Nonlinear blocks and the filter → saturation → lag → system cascade.
//!
//! A composed system has state laid out as `(filter states, p, z states)`:
//!
//! ```text
//! ẋ = Ax + Bu,   y = Cx + Du      filter 1
//! ṗ = -p + α(y)                   filter 2 (lag), driven by the saturation
//! ż = p·f(z)                      time-rescaled vector field
//! ```
//!
//! A constant u drives y, and therefore p, to zero whenever the filter's
//! transfer function vanishes at the origin, which freezes z. A sinusoidal u
//! keeps α(y) mostly saturated, so p stays bounded away from zero and z
//! follows f. The Lorenz field is spelled "Lorentz" in some of the literature.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lti::{Complex, LtiError, LtiSystem};

/// α(y) at or above this level counts as saturated in diagnostics.
pub const SATURATED_LEVEL: f64 = 0.9;

/// |W(0)| accepted as a zero at the origin when composing.
pub const ZERO_AT_ORIGIN_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlocksError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("cannot compose system: {0}")]
    Construction(String),
    #[error("state has length {got}, system dimension is {expected}")]
    Dimension { got: usize, expected: usize },
    #[error(transparent)]
    Lti(#[from] LtiError),
}

/// α(y) = y² / (K + y²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    k: f64,
}

impl Saturation {
    pub fn new(k: f64) -> Result<Self, BlocksError> {
        if !(k.is_finite() && k > 0.0) {
            return Err(BlocksError::Parameter(format!(
                "K must be finite and > 0, got {k}"
            )));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        let y2 = y * y;
        y2 / (self.k + y2)
    }

    pub fn is_saturated(&self, y: f64) -> bool {
        self.eval(y) >= SATURATED_LEVEL
    }
}

/// Right-hand side of the lag filter ṗ = -p + w.
#[inline]
pub fn lag_rhs(p: f64, w: f64) -> f64 {
    -p + w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorenzParams {
    /// Prandtl number.
    pub s: f64,
    /// Rayleigh number.
    pub r: f64,
    pub b: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            s: 10.0,
            r: 28.0,
            b: 8.0 / 3.0,
        }
    }
}

impl LorenzParams {
    pub fn validate(&self) -> Result<(), BlocksError> {
        if [self.s, self.r, self.b].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(BlocksError::Parameter(
                "Lorenz parameters must be finite".into(),
            ))
        }
    }
}

#[inline]
pub fn lorenz_rhs(params: &LorenzParams, z: [f64; 3]) -> [f64; 3] {
    let [xi, psi, zeta] = z;
    [
        params.s * (psi - xi),
        params.r * xi - psi - xi * zeta,
        xi * psi - params.b * zeta,
    ]
}

type FieldFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Autonomous vector field ż = f(z).
#[derive(Clone)]
pub struct VectorField {
    name: String,
    names: Vec<String>,
    f: Arc<FieldFn>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .finish()
    }
}

impl VectorField {
    /// Components are named `z1..z{dim}`.
    pub fn new<F>(name: &str, dim: usize, f: F) -> Result<Self, BlocksError>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        let names = (1..=dim).map(|i| format!("z{i}")).collect();
        Self::with_names(name, names, f)
    }

    pub fn with_names<F>(name: &str, names: Vec<String>, f: F) -> Result<Self, BlocksError>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if names.is_empty() {
            return Err(BlocksError::Parameter(
                "vector field dimension must be ≥ 1".into(),
            ));
        }
        Ok(Self {
            name: name.to_string(),
            names,
            f: Arc::new(f),
        })
    }

    pub fn lorenz(params: LorenzParams) -> Self {
        Self {
            name: "lorenz".into(),
            names: lorenz_names(),
            f: Arc::new(move |z, out| {
                out.copy_from_slice(&lorenz_rhs(&params, [z[0], z[1], z[2]]));
            }),
        }
    }

    /// (10(ψ-ξ), -ψ, -(8/3)ζ): the Lorenz field with its coupling terms removed.
    pub fn stable_linear() -> Self {
        Self {
            name: "stable-linear".into(),
            names: lorenz_names(),
            f: Arc::new(|z, out| {
                out[0] = 10.0 * (z[1] - z[0]);
                out[1] = -z[1];
                out[2] = -(8.0 / 3.0) * z[2];
            }),
        }
    }

    /// ż = -z.
    pub fn decay(dim: usize) -> Result<Self, BlocksError> {
        Self::new("decay", dim, |z, out| {
            for (o, v) in out.iter_mut().zip(z) {
                *o = -v;
            }
        })
    }

    /// The field c·f, whose solutions are those of f with time rescaled by c.
    pub fn scaled(&self, c: f64) -> Self {
        let f = Arc::clone(&self.f);
        Self {
            name: format!("{}*{c}", self.name),
            names: self.names.clone(),
            f: Arc::new(move |z, out| {
                f(z, out);
                for o in out.iter_mut() {
                    *o *= c;
                }
            }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn component_names(&self) -> &[String] {
        &self.names
    }

    #[inline]
    pub fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        (self.f)(z, out)
    }

    pub fn eval(&self, z: &[f64]) -> Result<Vec<f64>, BlocksError> {
        if z.len() != self.dim() {
            return Err(BlocksError::Dimension {
                got: z.len(),
                expected: self.dim(),
            });
        }
        let mut out = vec![0.0; self.dim()];
        self.eval_into(z, &mut out);
        Ok(out)
    }
}

fn lorenz_names() -> Vec<String> {
    ["xi", "psi", "zeta"].map(String::from).to_vec()
}

/// Column names and index ranges of a composed state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    names: Vec<String>,
    filter: Range<usize>,
    p: Option<usize>,
    z: Range<usize>,
}

impl Layout {
    fn cascade(filter_names: Vec<String>, z_names: &[String]) -> Self {
        let n = filter_names.len();
        let mut names = filter_names;
        names.push("p".into());
        names.extend(z_names.iter().cloned());
        let dim = names.len();
        Self {
            names,
            filter: 0..n,
            p: Some(n),
            z: n + 1..dim,
        }
    }

    fn z_only(z_names: &[String]) -> Self {
        Self {
            names: z_names.to_vec(),
            filter: 0..0,
            p: None,
            z: 0..z_names.len(),
        }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn filter(&self) -> Range<usize> {
        self.filter.clone()
    }

    pub fn p(&self) -> Option<usize> {
        self.p
    }

    pub fn z(&self) -> Range<usize> {
        self.z.clone()
    }
}

fn filter_names(n: usize) -> Vec<String> {
    if n == 1 {
        vec!["x".into()]
    } else {
        (1..=n).map(|i| format!("x{i}")).collect()
    }
}

type CustomFn = dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync;

#[derive(Clone)]
enum Dynamics {
    Example1 {
        sat: Saturation,
        lorenz: LorenzParams,
    },
    Example2 {
        sat: Saturation,
    },
    Cascade {
        filter: LtiSystem,
        sat: Saturation,
        field: VectorField,
    },
    Interpolated {
        filter: LtiSystem,
        sat: Saturation,
        f0: VectorField,
        f1: VectorField,
    },
    Autonomous(VectorField),
    Custom(Arc<CustomFn>),
}

/// Input-driven ODE assembled from blocks. The right-hand side depends on
/// time only through the input value u.
#[derive(Clone)]
pub struct ComposedSystem {
    scenario_id: String,
    layout: Layout,
    dynamics: Dynamics,
}

impl fmt::Debug for ComposedSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComposedSystem")
            .field("scenario_id", &self.scenario_id)
            .field("layout", &self.layout.names)
            .finish()
    }
}

/// The five-state cascade with ż = p·f_Lorenz(z).
pub fn compose_example1(k: f64, lorenz: LorenzParams) -> Result<ComposedSystem, BlocksError> {
    let sat = Saturation::new(k)?;
    lorenz.validate()?;
    Ok(ComposedSystem {
        scenario_id: "example1".into(),
        layout: Layout::cascade(filter_names(1), &lorenz_names()),
        dynamics: Dynamics::Example1 { sat, lorenz },
    })
}

/// The five-state cascade where p multiplies only the Lorenz coupling terms:
/// linear and stable at p = 0, standard Lorenz at p = 1.
pub fn compose_example2(k: f64) -> Result<ComposedSystem, BlocksError> {
    let sat = Saturation::new(k)?;
    Ok(ComposedSystem {
        scenario_id: "example2".into(),
        layout: Layout::cascade(filter_names(1), &lorenz_names()),
        dynamics: Dynamics::Example2 { sat },
    })
}

fn check_filter(filter: &LtiSystem) -> Result<(), BlocksError> {
    filter
        .ensure_hurwitz()
        .map_err(|e| BlocksError::Construction(format!("filter 1 must be stable: {e}")))?;
    let w0 = filter.transfer_eval(Complex::ZERO)?.norm();
    if w0 > ZERO_AT_ORIGIN_TOL {
        return Err(BlocksError::Construction(format!(
            "filter 1 needs a transfer-function zero at s = 0 (|W(0)| = {w0}); \
             constant inputs would not drive p to zero"
        )));
    }
    Ok(())
}

pub fn compose_general(
    filter: LtiSystem,
    sat: Saturation,
    field: VectorField,
) -> Result<ComposedSystem, BlocksError> {
    check_filter(&filter)?;
    Ok(ComposedSystem {
        scenario_id: "general".into(),
        layout: Layout::cascade(filter_names(filter.order()), field.component_names()),
        dynamics: Dynamics::Cascade { filter, sat, field },
    })
}

/// ż = p·f1(z) + (1-p)·f0(z): behaves like f0 under constant input and like
/// f1 under periodic input.
pub fn compose_interpolated(
    filter: LtiSystem,
    sat: Saturation,
    f0: VectorField,
    f1: VectorField,
) -> Result<ComposedSystem, BlocksError> {
    if f0.dim() != f1.dim() {
        return Err(BlocksError::Construction(format!(
            "f0 has dimension {} but f1 has dimension {}",
            f0.dim(),
            f1.dim()
        )));
    }
    check_filter(&filter)?;
    Ok(ComposedSystem {
        scenario_id: "interpolated".into(),
        layout: Layout::cascade(filter_names(filter.order()), f1.component_names()),
        dynamics: Dynamics::Interpolated {
            filter,
            sat,
            f0,
            f1,
        },
    })
}

impl ComposedSystem {
    /// Unforced ż = f(z); the whole state counts as the z subsystem.
    pub fn autonomous(scenario_id: &str, field: VectorField) -> Self {
        Self {
            scenario_id: scenario_id.into(),
            layout: Layout::z_only(field.component_names()),
            dynamics: Dynamics::Autonomous(field),
        }
    }

    /// Arbitrary `(state, u) -> derivative` system. All components are
    /// treated as the z subsystem.
    pub fn custom<F>(scenario_id: &str, names: Vec<String>, f: F) -> Result<Self, BlocksError>
    where
        F: Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static,
    {
        if names.is_empty() {
            return Err(BlocksError::Parameter(
                "system dimension must be ≥ 1".into(),
            ));
        }
        Ok(Self {
            scenario_id: scenario_id.into(),
            layout: Layout::z_only(&names),
            dynamics: Dynamics::Custom(Arc::new(f)),
        })
    }

    pub fn with_scenario_id(mut self, id: &str) -> Self {
        self.scenario_id = id.into();
        self
    }

    pub fn scenario_id(&self) -> &str {
        &self.scenario_id
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// The front-end LTI block, if the system has one.
    pub fn filter(&self) -> Option<LtiSystem> {
        match &self.dynamics {
            Dynamics::Example1 { .. } | Dynamics::Example2 { .. } => Some(LtiSystem::washout()),
            Dynamics::Cascade { filter, .. } | Dynamics::Interpolated { filter, .. } => {
                Some(filter.clone())
            }
            Dynamics::Autonomous(_) | Dynamics::Custom(_) => None,
        }
    }

    pub fn saturation(&self) -> Option<Saturation> {
        match &self.dynamics {
            Dynamics::Example1 { sat, .. }
            | Dynamics::Example2 { sat }
            | Dynamics::Cascade { sat, .. }
            | Dynamics::Interpolated { sat, .. } => Some(*sat),
            Dynamics::Autonomous(_) | Dynamics::Custom(_) => None,
        }
    }

    pub fn rhs(&self, state: &[f64], u: f64) -> Result<Vec<f64>, BlocksError> {
        if state.len() != self.dim() {
            return Err(BlocksError::Dimension {
                got: state.len(),
                expected: self.dim(),
            });
        }
        let mut out = vec![0.0; self.dim()];
        self.rhs_into(state, u, &mut out);
        Ok(out)
    }

    /// Unchecked right-hand side; `state` and `out` must have length `dim()`.
    #[inline]
    pub fn rhs_into(&self, state: &[f64], u: f64, out: &mut [f64]) {
        match &self.dynamics {
            Dynamics::Example1 { sat, lorenz } => {
                let (x, p) = (state[0], state[1]);
                let (xi, psi, zeta) = (state[2], state[3], state[4]);
                out[0] = -x - u;
                out[1] = lag_rhs(p, sat.eval(x + u));
                out[2] = p * (lorenz.s * (psi - xi));
                out[3] = p * (lorenz.r * xi - psi - xi * zeta);
                out[4] = p * (xi * psi - lorenz.b * zeta);
            }
            Dynamics::Example2 { sat } => {
                let (x, p) = (state[0], state[1]);
                let (xi, psi, zeta) = (state[2], state[3], state[4]);
                out[0] = -x - u;
                out[1] = lag_rhs(p, sat.eval(x + u));
                out[2] = 10.0 * (psi - xi);
                out[3] = 28.0 * p * xi - psi - p * xi * zeta;
                out[4] = p * xi * psi - (8.0 / 3.0) * zeta;
            }
            Dynamics::Cascade { filter, sat, field } => {
                let n = filter.order();
                let y = filter.rhs_into(&state[..n], u, &mut out[..n]);
                let p = state[n];
                out[n] = lag_rhs(p, sat.eval(y));
                let dz = &mut out[n + 1..];
                field.eval_into(&state[n + 1..], dz);
                for v in dz.iter_mut() {
                    *v *= p;
                }
            }
            Dynamics::Interpolated {
                filter,
                sat,
                f0,
                f1,
            } => {
                let n = filter.order();
                let y = filter.rhs_into(&state[..n], u, &mut out[..n]);
                let p = state[n];
                out[n] = lag_rhs(p, sat.eval(y));
                let z = &state[n + 1..];
                let mut g0 = [0.0; 8];
                let mut g0_heap;
                let g0: &mut [f64] = if z.len() <= g0.len() {
                    &mut g0[..z.len()]
                } else {
                    g0_heap = vec![0.0; z.len()];
                    &mut g0_heap
                };
                f0.eval_into(z, g0);
                let dz = &mut out[n + 1..];
                f1.eval_into(z, dz);
                for (d, g) in dz.iter_mut().zip(g0.iter()) {
                    *d = p * *d + (1.0 - p) * g;
                }
            }
            Dynamics::Autonomous(field) => field.eval_into(state, out),
            Dynamics::Custom(f) => f(state, u, out),
        }
    }
}
