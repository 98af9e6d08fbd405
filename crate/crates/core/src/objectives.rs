//! Terminal-time (Mayer-type) objectives and their exact gradients with
//! respect to piecewise-constant controls.
//!
//! Every objective is a function of the evolution channel `Φ`. Writing its
//! differential as `dF = Re⟨G, dΦ⟩` with the Frobenius inner product, a
//! perturbation `δL = E` of the generator on interval `m` contributes
//!
//! ```text
//! dF = Re⟨Λ_m, L_exp(Δt L_m, Δt E)⟩,   Λ_m = (Φ_M ··· Φ_{m+1})† G (Φ_{m−1} ··· Φ_1)†
//! ```
//!
//! where `L_exp(A, ·)` is the Fréchet derivative of the exponential. Since
//! `⟨Λ, L_exp(A, E)⟩ = ⟨L_exp(A†, Λ), E⟩`, one Fréchet derivative per interval
//! serves every control direction `∂L/∂u_k` and `∂L/∂n_c` at once.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    self, expm, expm_frechet, hermiticity_error, identity, kron, re_inner, unitarity_error, vectorize, CMatrix,
    CVector, C64, ONE, ZERO,
};
use crate::models::ControlledSystem;
use crate::propagator::{propagate_channel, PWCControls};
use crate::state::{DensityMatrix, Superoperator};

const UNITARY_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;

/// An objective to be minimized.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveSpec {
    /// `Tr(O ρ(T))` from `initial`; with `maximize` the cost is `−Tr(O ρ(T))`.
    ObservableMean { observable: CMatrix, initial: DensityMatrix, maximize: bool },
    /// `‖ρ(T) − target‖²` from `initial`.
    StateTransfer { initial: DensityMatrix, target: DensityMatrix },
    /// `(1/K) Σ_j ‖Φ(ρ_j) − U ρ_j U†‖²` over the basis states `ρ_j`.
    GateOnStates { gate: CMatrix, basis: Vec<DensityMatrix> },
    /// `‖Φ − Ū⊗U‖²` on superoperator matrices.
    GateOnChannel { gate: CMatrix },
}

/// Gradient with respect to `u` and `w`, plus `∂F/∂n` before the chain rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub du: DMatrix<f64>,
    pub dw: DMatrix<f64>,
    pub dn: DMatrix<f64>,
}

impl GradientVector {
    /// Same ordering as [`PWCControls::to_params`].
    pub fn to_params(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.du.transpose().iter().copied().collect();
        out.extend(self.dw.transpose().iter());
        out
    }

    pub fn norm(&self) -> f64 {
        (self.du.norm_squared() + self.dw.norm_squared()).sqrt()
    }
}

/// How interval derivatives are paired with control directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientRoute {
    /// One adjoint Fréchet derivative per interval.
    Adjoint,
    /// One Fréchet derivative per interval and control direction.
    Directional,
}

impl ObjectiveSpec {
    pub fn observable_mean(observable: CMatrix, initial: DensityMatrix, maximize: bool) -> Result<Self> {
        let spec = Self::ObservableMean { observable, initial, maximize };
        spec.validate()?;
        Ok(spec)
    }

    pub fn state_transfer(initial: DensityMatrix, target: DensityMatrix) -> Result<Self> {
        let spec = Self::StateTransfer { initial, target };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gate_on_states(gate: CMatrix, basis: Vec<DensityMatrix>) -> Result<Self> {
        let spec = Self::GateOnStates { gate, basis };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gate_on_channel(gate: CMatrix) -> Result<Self> {
        let spec = Self::GateOnChannel { gate };
        spec.validate()?;
        Ok(spec)
    }

    /// Hilbert-space dimension the objective acts on.
    pub fn dim(&self) -> usize {
        match self {
            Self::ObservableMean { observable, .. } => observable.nrows(),
            Self::StateTransfer { initial, .. } => initial.dim(),
            Self::GateOnStates { gate, .. } | Self::GateOnChannel { gate } => gate.nrows(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::ObservableMean { observable, initial, .. } => {
                linalg::ensure_square(observable, "observable")?;
                if hermiticity_error(observable) > HERMITIAN_TOL {
                    return Err(Error::Domain("observable not Hermitian".into()));
                }
                same_dim(observable.nrows(), initial.dim(), "initial state")
            }
            Self::StateTransfer { initial, target } => same_dim(initial.dim(), target.dim(), "target state"),
            Self::GateOnStates { gate, basis } => {
                check_unitary(gate)?;
                if basis.is_empty() {
                    return Err(Error::Domain("gate basis must be nonempty".into()));
                }
                basis.iter().try_for_each(|b| same_dim(gate.nrows(), b.dim(), "basis state"))
            }
            Self::GateOnChannel { gate } => check_unitary(gate),
        }
    }

    fn check_system(&self, system: &ControlledSystem) -> Result<()> {
        self.validate()?;
        same_dim(system.dim(), self.dim(), "objective")
    }

    /// Cost and its sensitivity `G` with `dF = Re⟨G, dΦ⟩`.
    fn terminal(&self, phi: &CMatrix) -> (f64, CMatrix) {
        match self {
            Self::ObservableMean { observable, initial, maximize } => {
                let sign = if *maximize { -1.0 } else { 1.0 };
                let o = vectorize(observable);
                let v0 = initial.vectorize();
                let value = (o.adjoint() * phi * &v0)[(0, 0)].re;
                (sign * value, &o * v0.adjoint() * C64::new(sign, 0.0))
            }
            Self::StateTransfer { initial, target } => {
                let v0 = initial.vectorize();
                let diff = phi * &v0 - target.vectorize();
                (diff.norm_squared(), &diff * v0.adjoint() * C64::new(2.0, 0.0))
            }
            Self::GateOnStates { gate, basis } => {
                let inputs = columns(basis.iter().map(DensityMatrix::vectorize));
                let targets = Superoperator::unitary(gate).into_matrix() * &inputs;
                let diff = phi * &inputs - targets;
                let k = basis.len() as f64;
                (diff.norm_squared() / k, &diff * inputs.adjoint() * C64::new(2.0 / k, 0.0))
            }
            Self::GateOnChannel { gate } => {
                let diff = phi - Superoperator::unitary(gate).into_matrix();
                (diff.norm_squared(), diff * C64::new(2.0, 0.0))
            }
        }
    }
}

fn same_dim(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension(format!("{what} has dim {got}, expected {expected}")));
    }
    Ok(())
}

fn check_unitary(gate: &CMatrix) -> Result<()> {
    linalg::ensure_square(gate, "gate")?;
    let err = unitarity_error(gate);
    if err > UNITARY_TOL {
        return Err(Error::Domain(format!("gate not unitary (error {err:e})")));
    }
    Ok(())
}

fn columns(cols: impl Iterator<Item = CVector>) -> CMatrix {
    let cols: Vec<CVector> = cols.collect();
    CMatrix::from_columns(&cols)
}

/// Objective value at the given controls.
pub fn evaluate(obj: &ObjectiveSpec, system: &ControlledSystem, controls: &PWCControls) -> Result<f64> {
    obj.check_system(system)?;
    let phi = propagate_channel(system, controls)?;
    Ok(obj.terminal(phi.matrix()).0)
}

/// Exact gradient.
pub fn gradient(obj: &ObjectiveSpec, system: &ControlledSystem, controls: &PWCControls) -> Result<GradientVector> {
    Ok(value_and_gradient(obj, system, controls)?.1)
}

pub fn value_and_gradient(
    obj: &ObjectiveSpec,
    system: &ControlledSystem,
    controls: &PWCControls,
) -> Result<(f64, GradientVector)> {
    value_and_gradient_via(obj, system, controls, GradientRoute::Adjoint)
}

pub fn value_and_gradient_via(
    obj: &ObjectiveSpec,
    system: &ControlledSystem,
    controls: &PWCControls,
    route: GradientRoute,
) -> Result<(f64, GradientVector)> {
    obj.check_system(system)?;
    controls.check_system(system)?;
    let grid = controls.grid();
    let (m_count, k_count, c_count) = (grid.intervals(), system.n_coherent(), system.n_incoherent());
    let dt = C64::new(grid.dt(), 0.0);

    let mut generators = Vec::with_capacity(m_count);
    let mut steps = Vec::with_capacity(m_count);
    // prefix[m] = Φ_{m−1} ··· Φ_0
    let mut prefix = Vec::with_capacity(m_count);
    let mut acc = identity(system.dim() * system.dim());
    for m in 0..m_count {
        let a = system.liouvillian(&controls.sample(m))?.into_matrix() * dt;
        let phi = expm(&a)?;
        prefix.push(acc.clone());
        acc = &phi * acc;
        generators.push(a);
        steps.push(phi);
    }
    let (value, sensitivity) = obj.terminal(&acc);

    let mut du = DMatrix::zeros(m_count, k_count);
    let mut dn = DMatrix::zeros(m_count, c_count);
    let mut back = sensitivity;
    for m in (0..m_count).rev() {
        let lambda = &back * prefix[m].adjoint();
        match route {
            GradientRoute::Adjoint => {
                let pulled = expm_frechet(&generators[m].adjoint(), &lambda)?;
                for k in 0..k_count {
                    du[(m, k)] = grid.dt() * re_inner(&pulled, system.coherent_generator(k));
                }
                for c in 0..c_count {
                    dn[(m, c)] = grid.dt() * re_inner(&pulled, system.incoherent_generator(c));
                }
            }
            GradientRoute::Directional => {
                for k in 0..k_count {
                    let d = expm_frechet(&generators[m], &(system.coherent_generator(k) * dt))?;
                    du[(m, k)] = re_inner(&lambda, &d);
                }
                for c in 0..c_count {
                    let d = expm_frechet(&generators[m], &(system.incoherent_generator(c) * dt))?;
                    dn[(m, c)] = re_inner(&lambda, &d);
                }
            }
        }
        back = steps[m].adjoint() * back;
    }
    let dw = controls.w().zip_map(&dn, |w, d| 2.0 * w * d);
    Ok((value, GradientVector { du, dw, dn }))
}

/// Central finite differences in the stacked `(u, w)` parameters.
pub fn finite_difference_gradient(
    obj: &ObjectiveSpec,
    system: &ControlledSystem,
    controls: &PWCControls,
    step: f64,
) -> Result<Vec<f64>> {
    let base = controls.to_params();
    let mut out = Vec::with_capacity(base.len());
    let mut p = base.clone();
    for i in 0..base.len() {
        p[i] = base[i] + step;
        let plus = evaluate(obj, system, &controls.with_params(&p)?)?;
        p[i] = base[i] - step;
        let minus = evaluate(obj, system, &controls.with_params(&p)?)?;
        p[i] = base[i];
        out.push((plus - minus) / (2.0 * step));
    }
    Ok(out)
}

/// `max_i |a_i − b_i| / max_i |b_i|`, relative to the reference's largest entry.
pub fn max_relative_error(a: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let err = a.iter().zip(reference).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

/// Four tomographically complete qubit states `|0⟩, |1⟩, |+⟩, |+i⟩`, or
/// their 16 pairwise tensor products for two qubits.
pub fn default_gate_basis(dim: usize) -> Result<Vec<DensityMatrix>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let kets = [[ONE, ZERO], [ZERO, ONE], [C64::new(h, 0.0), C64::new(h, 0.0)], [C64::new(h, 0.0), C64::new(0.0, h)]];
    let qubit: Vec<CMatrix> = kets
        .iter()
        .map(|k| {
            let v = CVector::from_column_slice(k);
            &v * v.adjoint()
        })
        .collect();
    let mats: Vec<CMatrix> = match dim {
        2 => qubit,
        4 => qubit.iter().flat_map(|a| qubit.iter().map(move |b| kron(a, b))).collect(),
        _ => return Err(Error::Domain(format!("no default gate basis for dim {dim}; supported: 2, 4"))),
    };
    mats.into_iter()
        .map(|m| {
            // Symmetrize rounding in the off-diagonals of |+⟩⟨+|-type products.
            let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
            DensityMatrix::new(m)
        })
        .collect()
}

pub mod gates {
    use super::*;

    pub fn hadamard() -> CMatrix {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        CMatrix::from_row_slice(2, 2, &[h, h, h, -h])
    }

    /// `diag(1, e^{iπ/4})`.
    pub fn t_gate() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)])
    }

    /// Controlled-NOT with the first qubit as control.
    pub fn cnot() -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 1)] = ONE;
        m[(2, 3)] = ONE;
        m[(3, 2)] = ONE;
        m
    }

    pub fn cz() -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, ONE, ONE, -ONE]))
    }

    /// Look up `hadamard`, `t`, `cnot` or `cz` (case-insensitive).
    pub fn named(name: &str) -> Option<CMatrix> {
        match name.to_ascii_lowercase().as_str() {
            "hadamard" | "h" => Some(hadamard()),
            "t" => Some(t_gate()),
            "cnot" => Some(cnot()),
            "cz" => Some(cz()),
            _ => None,
        }
    }
}
