//! Gradient descent with an adaptive step over the stacked controls `(u, w)`.
//!
//! Each iteration tries `x − s·∇F`. An improvement is accepted and grows the
//! step by `grow_factor`; otherwise the step shrinks by `backtrack_factor` and
//! the trial repeats, up to `max_backtracks` times. The accepted step carries
//! over to the next iteration. Coherent controls may be clipped to a box;
//! incoherent controls need no constraint because `n = w²`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::ControlledSystem;
use crate::objectives::{evaluate, value_and_gradient, ObjectiveSpec};
use crate::propagator::{PWCControls, TimeGrid};

/// Number of iterations over which `f_tol` measures improvement.
pub const F_TOL_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub f_tol: f64,
    pub step_init: f64,
    pub backtrack_factor: f64,
    pub grow_factor: f64,
    pub max_backtracks: usize,
    pub u_bound: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            grad_tol: 1e-8,
            f_tol: 1e-12,
            step_init: 0.1,
            backtrack_factor: 0.5,
            grow_factor: 1.5,
            max_backtracks: 40,
            u_bound: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if self.max_iters == 0 {
            return Err(Error::Domain("max_iters must be positive".into()));
        }
        if !(positive(self.grad_tol) && positive(self.f_tol) && positive(self.step_init)) {
            return Err(Error::Domain("grad_tol, f_tol and step_init must be positive".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::Domain("backtrack_factor must lie in (0, 1)".into()));
        }
        if !(self.grow_factor > 1.0 && self.grow_factor.is_finite()) {
            return Err(Error::Domain("grow_factor must exceed 1".into()));
        }
        if self.max_backtracks == 0 {
            return Err(Error::Domain("max_backtracks must be positive".into()));
        }
        if let Some(b) = self.u_bound {
            if !positive(b) {
                return Err(Error::Domain("u_bound must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    GradTol,
    FTol,
    MaxIters,
    /// Every backtracked trial failed to decrease the objective.
    LineSearchFailed,
    /// A non-finite objective or gradient was encountered.
    Aborted,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::GradTol => "grad_tol",
            StopReason::FTol => "f_tol",
            StopReason::MaxIters => "max_iters",
            StopReason::LineSearchFailed => "line_search_failed",
            StopReason::Aborted => "aborted",
        }
    }

    pub fn is_aborted(self) -> bool {
        self == StopReason::Aborted
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub value: f64,
    pub grad_norm: f64,
    /// Step that produced this iterate; 0 for the starting point.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub final_value: f64,
    pub final_controls: PWCControls,
    pub iterations_used: usize,
    pub stop: StopReason,
    pub history: Vec<HistoryEntry>,
    pub seed: Option<u64>,
}

impl RunResult {
    /// CSV with `iteration,value,grad_norm,step`.
    pub fn write_history_csv<W: std::io::Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["iteration", "value", "grad_norm", "step"])?;
        for (i, h) in self.history.iter().enumerate() {
            out.write_record([i.to_string(), h.value.to_string(), h.grad_norm.to_string(), h.step.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Uniform initial controls: `u ∈ [−u_amplitude, u_amplitude]`, `w ∈ [0, w_amplitude]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitSpec {
    pub u_amplitude: f64,
    pub w_amplitude: f64,
    pub seed: u64,
}

/// Draws `u` then `w`, row-major, from a ChaCha8 stream keyed by the seed.
pub fn init_random_controls(system: &ControlledSystem, grid: TimeGrid, spec: &InitSpec) -> Result<PWCControls> {
    if !(spec.u_amplitude > 0.0
        && spec.u_amplitude.is_finite()
        && spec.w_amplitude > 0.0
        && spec.w_amplitude.is_finite())
    {
        return Err(Error::Domain("initial amplitudes must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let m = grid.intervals();
    let u = DMatrix::from_row_iterator(
        m,
        system.n_coherent(),
        (0..m * system.n_coherent()).map(|_| rng.random_range(-spec.u_amplitude..=spec.u_amplitude)),
    );
    let w = DMatrix::from_row_iterator(
        m,
        system.n_incoherent(),
        (0..m * system.n_incoherent()).map(|_| rng.random_range(0.0..=spec.w_amplitude)),
    );
    PWCControls::new(grid, u, w)
}

fn project(params: &mut [f64], n_u: usize, bound: Option<f64>) {
    if let Some(b) = bound {
        for x in &mut params[..n_u] {
            *x = x.clamp(-b, b);
        }
    }
}

fn finite_or_abort(value: f64, grad: &[f64]) -> bool {
    value.is_finite() && grad.iter().all(|g| g.is_finite())
}

pub fn optimize(
    obj: &ObjectiveSpec,
    system: &ControlledSystem,
    controls0: &PWCControls,
    config: &OptimizerConfig,
) -> Result<RunResult> {
    optimize_observed(obj, system, controls0, config, |_, _| {})
}

/// [`optimize`], calling `observer` with every accepted iterate and its value
/// (the starting point included).
pub fn optimize_observed(
    obj: &ObjectiveSpec,
    system: &ControlledSystem,
    controls0: &PWCControls,
    config: &OptimizerConfig,
    mut observer: impl FnMut(&PWCControls, f64),
) -> Result<RunResult> {
    config.validate()?;
    controls0.check_system(system)?;
    let n_u = controls0.u().len();

    let mut params = controls0.to_params();
    project(&mut params, n_u, config.u_bound);
    let mut controls = controls0.with_params(&params)?;
    let (mut value, grad) = value_and_gradient(obj, system, &controls)?;
    let mut grad = grad.to_params();
    let mut grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let mut history = vec![HistoryEntry { value, grad_norm, step: 0.0 }];
    observer(&controls, value);

    let mut step = config.step_init;
    let mut iterations = 0;
    let stop = loop {
        if !finite_or_abort(value, &grad) {
            break StopReason::Aborted;
        }
        if grad_norm < config.grad_tol {
            break StopReason::GradTol;
        }
        if iterations >= F_TOL_WINDOW && history[iterations - F_TOL_WINDOW].value - value < config.f_tol {
            break StopReason::FTol;
        }
        if iterations >= config.max_iters {
            break StopReason::MaxIters;
        }

        let mut accepted = None;
        let mut aborted = false;
        for _ in 0..=config.max_backtracks {
            let mut trial: Vec<f64> = params.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
            project(&mut trial, n_u, config.u_bound);
            // Overflowing trials surface as errors or non-finite values; both abort.
            let Ok((trial_controls, trial_value)) =
                controls.with_params(&trial).and_then(|c| evaluate(obj, system, &c).map(|v| (c, v)))
            else {
                aborted = true;
                break;
            };
            if !trial_value.is_finite() {
                aborted = true;
                break;
            }
            if trial_value < value {
                accepted = Some((trial, trial_controls));
                break;
            }
            step *= config.backtrack_factor;
        }
        if aborted {
            break StopReason::Aborted;
        }
        let Some((trial, trial_controls)) = accepted else {
            break StopReason::LineSearchFailed;
        };

        let used = step;
        params = trial;
        controls = trial_controls;
        match value_and_gradient(obj, system, &controls) {
            Ok((v, g)) => {
                value = v;
                grad = g.to_params();
            }
            Err(_) => {
                value = f64::NAN;
                grad.fill(f64::NAN);
            }
        }
        grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        iterations += 1;
        history.push(HistoryEntry { value, grad_norm, step: used });
        observer(&controls, value);
        step *= config.grow_factor;
    };

    Ok(RunResult {
        final_value: value,
        final_controls: controls,
        iterations_used: iterations,
        stop,
        history,
        seed: None,
    })
}
