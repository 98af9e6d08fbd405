//! Exact propagation under piecewise-constant controls.
//!
//! On interval `m` the generator `L_m = L(u_m, n_m)` is constant, so the step
//! channel is `Φ_m = exp(Δt·L_m)` and the full channel is `Φ_M ··· Φ_1`.
//! Incoherent controls are parameterized as `n = w²`, which keeps every
//! iterate of an unconstrained optimizer physical.

mod bloch;

pub use bloch::{
    bloch_affine_generator, bloch_step_cardano, bloch_step_with_path, propagate_bloch, BlochAffineGenerator,
    BlochDiagnostics, StepPath,
};

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{devectorize, expm, C64};
use crate::models::{ControlSample, ControlledSystem};
use crate::state::{bloch_from_density, DensityMatrix, SuperKind, Superoperator};

/// Uniform grid of `intervals` steps over `[0, total_time]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    total_time: f64,
    intervals: usize,
}

impl TimeGrid {
    pub fn new(total_time: f64, intervals: usize) -> Result<Self> {
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(Error::Domain(format!("total time must be positive, got {total_time}")));
        }
        if intervals == 0 {
            return Err(Error::Domain("need at least one interval".into()));
        }
        Ok(Self { total_time, intervals })
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.intervals as f64
    }

    /// Node times `t_0 = 0, …, t_M = T`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.intervals).map(|k| k as f64 * self.dt()).collect()
    }
}

/// Piecewise-constant controls: `u` is `M×K`, `w` is `M×C`, and `n = w²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PWCControls {
    grid: TimeGrid,
    u: DMatrix<f64>,
    w: DMatrix<f64>,
}

impl PWCControls {
    pub fn new(grid: TimeGrid, u: DMatrix<f64>, w: DMatrix<f64>) -> Result<Self> {
        let m = grid.intervals();
        if u.nrows() != m || w.nrows() != m {
            return Err(Error::Dimension(format!(
                "control arrays have {} and {} rows for {m} intervals",
                u.nrows(),
                w.nrows()
            )));
        }
        if !u.iter().chain(w.iter()).all(|x| x.is_finite()) {
            return Err(Error::Domain("control values must be finite".into()));
        }
        Ok(Self { grid, u, w })
    }

    pub fn zeros(grid: TimeGrid, system: &ControlledSystem) -> Self {
        let m = grid.intervals();
        Self { grid, u: DMatrix::zeros(m, system.n_coherent()), w: DMatrix::zeros(m, system.n_incoherent()) }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Spectral densities `n = w²`.
    pub fn n(&self) -> DMatrix<f64> {
        self.w.map(|x| x * x)
    }

    pub fn n_coherent(&self) -> usize {
        self.u.ncols()
    }

    pub fn n_incoherent(&self) -> usize {
        self.w.ncols()
    }

    /// Control values on interval `m`.
    pub fn sample(&self, m: usize) -> ControlSample {
        ControlSample { u: self.u.row(m).iter().copied().collect(), n: self.w.row(m).iter().map(|x| x * x).collect() }
    }

    pub fn check_system(&self, system: &ControlledSystem) -> Result<()> {
        if self.n_coherent() != system.n_coherent() || self.n_incoherent() != system.n_incoherent() {
            return Err(Error::Dimension(format!(
                "controls have {} coherent / {} incoherent columns, system needs {} / {}",
                self.n_coherent(),
                self.n_incoherent(),
                system.n_coherent(),
                system.n_incoherent()
            )));
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        self.u.len() + self.w.len()
    }

    /// Flatten as `u` row-major followed by `w` row-major.
    pub fn to_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        out.extend(self.u.transpose().iter());
        out.extend(self.w.transpose().iter());
        out
    }

    /// Inverse of [`to_params`](Self::to_params) with this object's shapes.
    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.n_params() {
            return Err(Error::Dimension(format!("{} parameters for {} slots", params.len(), self.n_params())));
        }
        let m = self.grid.intervals();
        let (pu, pw) = params.split_at(self.u.len());
        let u = DMatrix::from_row_slice(m, self.n_coherent(), pu);
        let w = DMatrix::from_row_slice(m, self.n_incoherent(), pw);
        Self::new(self.grid, u, w)
    }
}

/// States at the grid nodes, plus the step channels that produced them.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub step_propagators: Option<Vec<Superoperator>>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// CSV with `t`, real and imaginary parts of every entry in row-major
    /// order, and for qubits the Bloch components `r_x, r_y, r_z`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(writer);
        let dim = self.states.first().map_or(0, |s| s.dim());
        let mut header = vec!["t".to_string()];
        for i in 0..dim {
            for j in 0..dim {
                header.push(format!("re_{i}{j}"));
                header.push(format!("im_{i}{j}"));
            }
        }
        if dim == 2 {
            header.extend(["r_x", "r_y", "r_z"].map(String::from));
        }
        out.write_record(&header)?;
        for (t, rho) in self.times.iter().zip(&self.states) {
            let m = rho.matrix();
            let mut row = vec![t.to_string()];
            for i in 0..dim {
                for j in 0..dim {
                    row.push(m[(i, j)].re.to_string());
                    row.push(m[(i, j)].im.to_string());
                }
            }
            if dim == 2 {
                let r = bloch_from_density(rho).expect("dim checked");
                row.extend(r.0.iter().map(|x| x.to_string()));
            }
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `exp(dt·L(sample))`; `dt = 0` gives the identity.
pub fn step_propagator(system: &ControlledSystem, sample: &ControlSample, dt: f64) -> Result<Superoperator> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::Domain(format!("time step must be >= 0, got {dt}")));
    }
    let generator = system.liouvillian(sample)?;
    if dt == 0.0 {
        return Ok(Superoperator::identity(system.dim()));
    }
    let phi = expm(&(generator.into_matrix() * C64::new(dt, 0.0)))?;
    Superoperator::new(system.dim(), phi, SuperKind::Channel)
}

/// Step channels `Φ_1, …, Φ_M`.
pub fn step_propagators(system: &ControlledSystem, controls: &PWCControls) -> Result<Vec<Superoperator>> {
    controls.check_system(system)?;
    let dt = controls.grid().dt();
    (0..controls.grid().intervals()).map(|m| step_propagator(system, &controls.sample(m), dt)).collect()
}

pub fn propagate(system: &ControlledSystem, controls: &PWCControls, rho0: &DensityMatrix) -> Result<Trajectory> {
    if rho0.dim() != system.dim() {
        return Err(Error::Dimension(format!("initial state dim {} for system dim {}", rho0.dim(), system.dim())));
    }
    let steps = step_propagators(system, controls)?;
    let mut states = Vec::with_capacity(steps.len() + 1);
    states.push(rho0.clone());
    let mut v = rho0.vectorize();
    for phi in &steps {
        v = phi.matrix() * v;
        states.push(DensityMatrix::from_matrix_unchecked(devectorize(&v)?));
    }
    Ok(Trajectory { times: controls.grid().nodes(), states, step_propagators: Some(steps) })
}

/// The evolution channel `Φ = Φ_M ··· Φ_1` over the whole grid.
pub fn propagate_channel(system: &ControlledSystem, controls: &PWCControls) -> Result<Superoperator> {
    let steps = step_propagators(system, controls)?;
    let mut total = Superoperator::identity(system.dim());
    for phi in &steps {
        total = phi.compose(&total)?;
    }
    Ok(total)
}
