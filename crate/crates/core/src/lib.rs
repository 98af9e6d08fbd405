//! Simulation and gradient-based optimization of N-level open quantum systems
//! driven jointly by coherent fields and by the spectral density of their
//! environment (incoherent control).
//!
//! The pieces, bottom up:
//!
//! * [`linalg`] and [`state`]: small dense complex matrices, vectorization,
//!   matrix exponentials and their Fréchet derivatives, density matrices,
//!   superoperators, the Bloch parameterization and Cardano cubic roots.
//! * [`models`]: controlled systems and their GKSL generators, with qubit,
//!   qutrit and two-qubit presets.
//! * [`propagator`]: exact propagation under piecewise-constant controls, with
//!   an analytic fast path for a single qubit.
//! * [`objectives`]: terminal-time objectives and their exact gradients.
//! * [`optimizer`]: gradient descent with an adaptive step.
//! * [`landscape`]: seeded multi-start statistics, peak detection, robustness.

pub mod error;
pub mod landscape;
pub mod linalg;
pub mod models;
pub mod objectives;
pub mod optimizer;
pub mod propagator;
pub mod state;

pub use error::{Error, ModelError, ModelErrorCode, Result};
pub use models::{ControlSample, ControlledSystem, IncoherentChannel};
pub use objectives::{GradientVector, ObjectiveSpec};
pub use optimizer::{InitSpec, OptimizerConfig, RunResult, StopReason};
pub use propagator::{PWCControls, TimeGrid, Trajectory};
pub use state::{BlochVector, DensityMatrix, Superoperator};
