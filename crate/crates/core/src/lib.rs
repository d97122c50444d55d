//! Forced ODE systems that converge to a steady state under every constant
//! input yet behave chaotically under periodic forcing, plus the numerical
//! diagnostics that tell the two regimes apart.
//!
//! The pieces, bottom-up:
//!
//! - [`signals`]: scalar inputs u(t).
//! - [`lti`]: the front-end linear filter and its transfer function.
//! - [`blocks`]: saturation, lag filter, Lorenz-type fields and the cascade.
//! - [`solver`]: Dormand–Prince and fixed-step RK4 integration.
//! - [`diagnostics`]: steady-state detection, Lyapunov exponents, verdicts
//!   and the Monte Carlo sweep.
//! - [`scenario`] and [`harness`]: named presets, run manifests and the
//!   CSV/JSON artifacts the CLI writes.

pub mod blocks;
pub mod diagnostics;
pub mod harness;
pub mod lti;
pub mod scenario;
pub mod signals;
pub mod solver;

pub use blocks::{
    compose_example1, compose_example2, compose_general, compose_interpolated, ComposedSystem,
    Layout, LorenzParams, Saturation, VectorField,
};
pub use diagnostics::{entrainment_verdict, lyapunov_max, Verdict, VerdictOptions};
pub use lti::{Complex, LtiSystem};
pub use scenario::{ScenarioId, ScenarioSpec};
pub use signals::InputSignal;
pub use solver::{integrate, integrate_pair, IntegratorConfig, Method, OutputGrid, Trajectory};
