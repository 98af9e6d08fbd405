//! Controlled open-system models and their GKSL generators.
//!
//! A [`ControlledSystem`] fixes the free Hamiltonian `H₀`, the interaction
//! Hamiltonians `V_k` driven by coherent amplitudes `u_k`, and a set of
//! incoherent channels whose rates are set by spectral densities `n_c ≥ 0`:
//!
//! ```text
//! L(u, n)ρ = −i[H₀ + Σ u_k V_k, ρ] + Σ_channels A·(n_c + 1)·D[L↓]ρ + A·n_c·D[L↑]ρ
//! ```
//!
//! with `D[L]ρ = LρL† − ½{L†L, ρ}` and `L↑ = L↓†`. The generator is affine in
//! `u` and in `n`, so the constant and linear parts are assembled once.

pub mod document;

pub use document::{load_model, ModelDocument};

use crate::error::{Error, ModelError, ModelErrorCode, Result};
use crate::linalg::{self, commutator_superop, is_hermitian, kron, lindblad_superop, CMatrix, C64};
use crate::state::{SuperKind, Superoperator};

const HERMITIAN_TOL: f64 = 1e-12;

/// Which jump a channel drives.
#[derive(Debug, Clone, PartialEq)]
pub enum Transition {
    /// Between basis levels `lower < upper`: `L↓ = |lower⟩⟨upper|`.
    Levels { lower: usize, upper: usize },
    /// An arbitrary lowering operator, e.g. a local `σ⁻ ⊗ I`.
    Operator(CMatrix),
}

/// One incoherently controlled dissipation channel.
#[derive(Debug, Clone, PartialEq)]
pub struct IncoherentChannel {
    pub transition: Transition,
    /// Spontaneous-emission rate `A`; stimulated rates scale as `A·n`.
    pub einstein_coeff: f64,
    /// Index into the incoherent control vector `n`.
    pub control_index: usize,
}

impl IncoherentChannel {
    pub fn levels(lower: usize, upper: usize, einstein_coeff: f64, control_index: usize) -> Self {
        Self { transition: Transition::Levels { lower, upper }, einstein_coeff, control_index }
    }

    pub fn operator(lowering: CMatrix, einstein_coeff: f64, control_index: usize) -> Self {
        Self { transition: Transition::Operator(lowering), einstein_coeff, control_index }
    }

    pub fn lowering(&self, dim: usize) -> CMatrix {
        match &self.transition {
            Transition::Levels { lower, upper } => linalg::ket_bra(dim, *lower, *upper),
            Transition::Operator(l) => l.clone(),
        }
    }
}

/// Control values on one interval: coherent `u` and spectral densities `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSample {
    pub u: Vec<f64>,
    pub n: Vec<f64>,
}

impl ControlSample {
    pub fn new(u: Vec<f64>, n: Vec<f64>) -> Self {
        Self { u, n }
    }

    pub fn zero(system: &ControlledSystem) -> Self {
        Self { u: vec![0.0; system.n_coherent()], n: vec![0.0; system.n_incoherent()] }
    }
}

/// An `N`-level system with coherent and incoherent controls. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlledSystem {
    dim: usize,
    h0: CMatrix,
    interactions: Vec<CMatrix>,
    channels: Vec<IncoherentChannel>,
    n_controls: usize,
    drift: CMatrix,
    coherent_parts: Vec<CMatrix>,
    incoherent_parts: Vec<CMatrix>,
}

impl ControlledSystem {
    pub fn new(
        h0: CMatrix,
        interactions: Vec<CMatrix>,
        channels: Vec<IncoherentChannel>,
        n_controls: usize,
    ) -> Result<Self, ModelError> {
        let dim = h0.nrows();
        if dim == 0 || h0.ncols() != dim {
            return Err(ModelError::new(
                ModelErrorCode::Schema,
                "H0",
                format!("must be square with dim >= 1, got {:?}", h0.shape()),
            ));
        }
        check_hermitian(&h0, "H0")?;
        for (k, v) in interactions.iter().enumerate() {
            let field = format!("V[{k}]");
            if v.shape() != (dim, dim) {
                return Err(ModelError::new(
                    ModelErrorCode::Schema,
                    field,
                    format!("must be {dim}x{dim}, got {:?}", v.shape()),
                ));
            }
            check_hermitian(v, &field)?;
        }
        for (i, ch) in channels.iter().enumerate() {
            let field = format!("channels[{i}]");
            match &ch.transition {
                Transition::Levels { lower, upper } => {
                    if !(lower < upper && *upper < dim) {
                        return Err(ModelError::new(
                            ModelErrorCode::BadIndex,
                            field,
                            format!("levels ({lower}, {upper}) need lower < upper < {dim}"),
                        ));
                    }
                }
                Transition::Operator(l) => {
                    if l.shape() != (dim, dim) {
                        return Err(ModelError::new(
                            ModelErrorCode::Schema,
                            field + ".jump",
                            format!("must be {dim}x{dim}"),
                        ));
                    }
                    if !linalg::all_finite(l) {
                        return Err(ModelError::new(ModelErrorCode::Physics, field + ".jump", "non-finite entries"));
                    }
                }
            }
            if !(ch.einstein_coeff.is_finite() && ch.einstein_coeff > 0.0) {
                return Err(ModelError::new(
                    ModelErrorCode::Physics,
                    field + ".einstein_coeff",
                    format!("rate must be positive, got {}", ch.einstein_coeff),
                ));
            }
            if ch.control_index >= n_controls {
                return Err(ModelError::new(
                    ModelErrorCode::BadIndex,
                    field + ".control_index",
                    format!("{} out of range for {n_controls} incoherent controls", ch.control_index),
                ));
            }
        }

        let mut drift = commutator_superop(&h0);
        let mut incoherent_parts = vec![CMatrix::zeros(dim * dim, dim * dim); n_controls];
        for ch in &channels {
            let down = ch.lowering(dim);
            let d_down = lindblad_superop(&down) * C64::new(ch.einstein_coeff, 0.0);
            let d_up = lindblad_superop(&down.adjoint()) * C64::new(ch.einstein_coeff, 0.0);
            drift += &d_down;
            incoherent_parts[ch.control_index] += d_down + d_up;
        }
        let coherent_parts = interactions.iter().map(commutator_superop).collect();

        Ok(Self { dim, h0, interactions, channels, n_controls, drift, coherent_parts, incoherent_parts })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h0(&self) -> &CMatrix {
        &self.h0
    }

    pub fn interactions(&self) -> &[CMatrix] {
        &self.interactions
    }

    pub fn channels(&self) -> &[IncoherentChannel] {
        &self.channels
    }

    /// Number of coherent controls `K`.
    pub fn n_coherent(&self) -> usize {
        self.interactions.len()
    }

    /// Number of independent incoherent components `C`.
    pub fn n_incoherent(&self) -> usize {
        self.n_controls
    }

    /// Generator at zero controls.
    pub fn drift_generator(&self) -> &CMatrix {
        &self.drift
    }

    /// `∂L/∂u_k`: the superoperator of `ρ ↦ −i[V_k, ρ]`.
    pub fn coherent_generator(&self, k: usize) -> &CMatrix {
        &self.coherent_parts[k]
    }

    /// `∂L/∂n_c`: the sum of `A·(D[L↓] + D[L↑])` over channels on component `c`.
    pub fn incoherent_generator(&self, c: usize) -> &CMatrix {
        &self.incoherent_parts[c]
    }

    /// `H₀ + Σ u_k V_k`.
    pub fn hamiltonian(&self, u: &[f64]) -> Result<CMatrix> {
        if u.len() != self.n_coherent() {
            return Err(Error::Dimension(format!("{} coherent values for {} controls", u.len(), self.n_coherent())));
        }
        let mut h = self.h0.clone();
        for (v, uk) in self.interactions.iter().zip(u) {
            h += v * C64::new(*uk, 0.0);
        }
        Ok(h)
    }

    pub fn validate_sample(&self, sample: &ControlSample) -> Result<()> {
        if sample.u.len() != self.n_coherent() || sample.n.len() != self.n_incoherent() {
            return Err(Error::Dimension(format!(
                "sample has {} coherent / {} incoherent values, system needs {} / {}",
                sample.u.len(),
                sample.n.len(),
                self.n_coherent(),
                self.n_incoherent()
            )));
        }
        if !sample.u.iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("coherent control values must be finite".into()));
        }
        check_densities(&sample.n)
    }

    /// The GKSL dissipator at spectral densities `n`, built channel by channel.
    pub fn dissipator_superop(&self, n: &[f64]) -> Result<Superoperator> {
        if n.len() != self.n_incoherent() {
            return Err(Error::Dimension(format!("{} densities for {} components", n.len(), self.n_incoherent())));
        }
        check_densities(n)?;
        let d = self.dim;
        let mut m = CMatrix::zeros(d * d, d * d);
        for ch in &self.channels {
            let nc = n[ch.control_index];
            let a = ch.einstein_coeff;
            let down = ch.lowering(d);
            m += lindblad_superop(&down) * C64::new(a * (nc + 1.0), 0.0);
            m += lindblad_superop(&down.adjoint()) * C64::new(a * nc, 0.0);
        }
        Superoperator::new(d, m, SuperKind::Generator)
    }

    /// The generator `L(u, n)`.
    pub fn liouvillian(&self, sample: &ControlSample) -> Result<Superoperator> {
        self.validate_sample(sample)?;
        let mut m = self.drift.clone();
        for (part, uk) in self.coherent_parts.iter().zip(&sample.u) {
            m += part * C64::new(*uk, 0.0);
        }
        for (part, nc) in self.incoherent_parts.iter().zip(&sample.n) {
            m += part * C64::new(*nc, 0.0);
        }
        Superoperator::new(self.dim, m, SuperKind::Generator)
    }
}

fn check_hermitian(m: &CMatrix, field: &str) -> Result<(), ModelError> {
    if !linalg::all_finite(m) {
        return Err(ModelError::new(ModelErrorCode::Physics, field, "non-finite entries"));
    }
    if !is_hermitian(m, HERMITIAN_TOL) {
        return Err(ModelError::new(ModelErrorCode::NotHermitian, field, format!("{field} not Hermitian")));
    }
    Ok(())
}

fn check_densities(n: &[f64]) -> Result<()> {
    match n.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        Some(i) => Err(Error::Domain(format!("spectral density n[{i}] = {} must be finite and >= 0", n[i]))),
        None => Ok(()),
    }
}

fn positive(value: f64, field: &str) -> Result<(), ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::new(ModelErrorCode::Physics, field, format!("must be positive, got {value}")))
    }
}

fn finite(value: f64, field: &str) -> Result<(), ModelError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::new(ModelErrorCode::Physics, field, "must be finite"))
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Qubit with `H₀ = (ω/2)σ_z`, coherent drive `σ_x`, and one thermal channel
/// `|0⟩ ↔ |1⟩` of rate `γ` controlled by `n₀`.
pub fn preset_qubit(omega: f64, gamma: f64) -> Result<ControlledSystem, ModelError> {
    finite(omega, "omega")?;
    positive(gamma, "gamma")?;
    ControlledSystem::new(
        linalg::sigma_z() * real(omega / 2.0),
        vec![linalg::sigma_x()],
        vec![IncoherentChannel::levels(0, 1, gamma, 0)],
        1,
    )
}

/// Qutrit with forbidden `|1⟩ ↔ |2⟩` transition (levels indexed from 0 here):
/// `H₀ = diag(E₁, E₂, E₃)`, one drive coupling both lower levels to the top,
/// and two incoherent components at frequencies `E₃ − E₁` and `E₃ − E₂`.
#[allow(clippy::too_many_arguments)]
pub fn preset_qutrit_forbidden(
    energies: [f64; 3],
    v13: C64,
    v23: C64,
    a1: f64,
    a2: f64,
) -> Result<ControlledSystem, ModelError> {
    for (i, e) in energies.iter().enumerate() {
        finite(*e, &format!("energies[{i}]"))?;
    }
    let [e1, e2, e3] = energies;
    if e1 == e2 || e1 == e3 || e2 == e3 {
        return Err(ModelError::new(ModelErrorCode::Physics, "energies", "energies must be pairwise distinct"));
    }
    if !(v13.re.is_finite() && v13.im.is_finite()) {
        return Err(ModelError::new(ModelErrorCode::Physics, "v13", "must be finite"));
    }
    if !(v23.re.is_finite() && v23.im.is_finite()) {
        return Err(ModelError::new(ModelErrorCode::Physics, "v23", "must be finite"));
    }
    positive(a1, "a1")?;
    positive(a2, "a2")?;
    let h0 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![real(e1), real(e2), real(e3)]));
    ControlledSystem::new(
        h0,
        vec![qutrit_interaction(v13, v23)],
        vec![IncoherentChannel::levels(0, 2, a1, 0), IncoherentChannel::levels(1, 2, a2, 1)],
        2,
    )
}

/// The qutrit drive with `V₁₂ = 0` and Hermitian completion.
pub fn qutrit_interaction(v13: C64, v23: C64) -> CMatrix {
    let mut v = CMatrix::zeros(3, 3);
    v[(0, 2)] = v13;
    v[(1, 2)] = v23;
    v[(2, 0)] = v13.conj();
    v[(2, 1)] = v23.conj();
    v
}

/// Two qubits with Ising coupling:
/// `H₀ = (ω₁/2)σ_z⊗I + (ω₂/2)I⊗σ_z + J σ_z⊗σ_z`, drives `σ_x⊗I` and `I⊗σ_x`,
/// and local decay `σ⁻⊗I`, `I⊗σ⁻` each with its own incoherent component.
pub fn preset_two_qubit(
    omega1: f64,
    omega2: f64,
    coupling: f64,
    gamma1: f64,
    gamma2: f64,
) -> Result<ControlledSystem, ModelError> {
    finite(omega1, "omega1")?;
    finite(omega2, "omega2")?;
    finite(coupling, "J")?;
    positive(gamma1, "gamma1")?;
    positive(gamma2, "gamma2")?;
    let id = linalg::identity(2);
    let (sx, sz) = (linalg::sigma_x(), linalg::sigma_z());
    let lower = linalg::ket_bra(2, 0, 1);
    let h0 =
        kron(&sz, &id) * real(omega1 / 2.0) + kron(&id, &sz) * real(omega2 / 2.0) + kron(&sz, &sz) * real(coupling);
    ControlledSystem::new(
        h0,
        vec![kron(&sx, &id), kron(&id, &sx)],
        vec![
            IncoherentChannel::operator(kron(&lower, &id), gamma1, 0),
            IncoherentChannel::operator(kron(&id, &lower), gamma2, 1),
        ],
        2,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, I as IM};
    use crate::state::DensityMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_operator(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_density(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = random_operator(n, rng);
        let m = &g * g.adjoint();
        let tr = m.trace();
        m / tr
    }

    fn random_sample(sys: &ControlledSystem, rng: &mut ChaCha8Rng) -> ControlSample {
        ControlSample {
            u: (0..sys.n_coherent()).map(|_| rng.random_range(-2.0..2.0)).collect(),
            n: (0..sys.n_incoherent()).map(|_| rng.random_range(0.0..3.0)).collect(),
        }
    }

    fn systems() -> Vec<ControlledSystem> {
        vec![
            preset_qubit(1.0, 0.1).unwrap(),
            preset_qutrit_forbidden([0.0, 1.0, 2.5], C64::new(1.0, 0.2), C64::new(0.5, -0.3), 0.1, 0.2).unwrap(),
            preset_two_qubit(1.0, 1.3, 0.2, 0.05, 0.07).unwrap(),
        ]
    }

    #[test]
    fn vacuum_ground_state_is_stationary() {
        for sys in systems() {
            let d = sys.dissipator_superop(&vec![0.0; sys.n_incoherent()]).unwrap();
            let ground = DensityMatrix::basis(sys.dim(), 0);
            assert!(max_abs(&d.apply(ground.matrix()).unwrap()) < 1e-15);
        }
    }

    #[test]
    fn qubit_decay_rates() {
        let gamma = 0.37;
        let sys = preset_qubit(0.0, gamma).unwrap();
        let d = sys.dissipator_superop(&[0.0]).unwrap();
        let out = d.apply(&linalg::ket_bra(2, 1, 1)).unwrap();
        assert!((out[(1, 1)].re + gamma).abs() < 1e-15);
        assert!((out[(0, 0)].re - gamma).abs() < 1e-15);
    }

    #[test]
    fn dissipator_rejects_negative_density() {
        let sys = preset_qubit(1.0, 0.1).unwrap();
        assert!(matches!(sys.dissipator_superop(&[-0.1]), Err(Error::Domain(_))));
        assert!(sys.liouvillian(&ControlSample::new(vec![0.0], vec![-1e-3])).is_err());
    }

    #[test]
    fn dissipator_and_liouvillian_are_traceless() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for sys in systems() {
            for _ in 0..100 {
                let sample = random_sample(&sys, &mut rng);
                let rho = random_density(sys.dim(), &mut rng);
                let d = sys.dissipator_superop(&sample.n).unwrap();
                assert!(d.apply(&rho).unwrap().trace().norm() < 1e-12);
                let l = sys.liouvillian(&sample).unwrap();
                assert!(l.trace_error() < 1e-12);
            }
        }
    }

    #[test]
    fn liouvillian_is_hamiltonian_plus_dissipator() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for sys in systems() {
            let sample = random_sample(&sys, &mut rng);
            let h = sys.hamiltonian(&sample.u).unwrap();
            let want = commutator_superop(&h) + sys.dissipator_superop(&sample.n).unwrap().into_matrix();
            let got = sys.liouvillian(&sample).unwrap().into_matrix();
            assert!(max_abs(&(got - want)) < 1e-13);
        }
    }

    #[test]
    fn coherent_only_free_evolution() {
        let h0 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![real(0.3), real(-1.1)]));
        let sys = ControlledSystem::new(h0.clone(), vec![], vec![], 0).unwrap();
        let l = sys.liouvillian(&ControlSample::zero(&sys)).unwrap();
        let rho = CMatrix::from_row_slice(2, 2, &[real(0.2), C64::new(0.1, 0.3), C64::new(0.1, -0.3), real(0.8)]);
        let want = (&h0 * &rho - &rho * &h0) * (-IM);
        assert!(max_abs(&(l.apply(&rho).unwrap() - want)) < 1e-15);
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![real(0.4), real(0.6)]));
        assert!(max_abs(&l.apply(&diag).unwrap()) == 0.0);
    }

    #[test]
    fn coherent_part_is_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for sys in systems() {
            let sample = random_sample(&sys, &mut rng);
            let base = ControlSample { u: vec![0.0; sys.n_coherent()], n: sample.n.clone() };
            let diff = sys.liouvillian(&sample).unwrap().into_matrix() - sys.liouvillian(&base).unwrap().into_matrix();
            let mut want = CMatrix::zeros(diff.nrows(), diff.ncols());
            for (k, uk) in sample.u.iter().enumerate() {
                want += commutator_superop(&sys.interactions()[k]) * real(*uk);
            }
            assert!(max_abs(&(diff - want)) < 1e-12);
        }
    }

    #[test]
    fn affine_in_every_parameter() {
        // Three collinear points per parameter: the middle one must interpolate.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for sys in systems() {
            let s = random_sample(&sys, &mut rng);
            let eval = |s: &ControlSample| sys.liouvillian(s).unwrap().into_matrix();
            for k in 0..sys.n_coherent() {
                let (mut a, mut b) = (s.clone(), s.clone());
                a.u[k] -= 0.7;
                b.u[k] += 0.7;
                let mid = (eval(&a) + eval(&b)) * real(0.5);
                assert!(max_abs(&(mid - eval(&s))) < 1e-12);
            }
            for c in 0..sys.n_incoherent() {
                let (mut a, mut b) = (s.clone(), s.clone());
                a.n[c] = 0.0;
                b.n[c] = 2.0 * s.n[c];
                let mid = (eval(&a) + eval(&b)) * real(0.5);
                assert!(max_abs(&(mid - eval(&s))) < 1e-12);
            }
        }
    }

    #[test]
    fn preserves_hermiticity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for sys in systems() {
            let l = sys.liouvillian(&random_sample(&sys, &mut rng)).unwrap();
            for _ in 0..10 {
                let x = random_operator(sys.dim(), &mut rng);
                let lhs = l.apply(&x).unwrap().adjoint();
                let rhs = l.apply(&x.adjoint()).unwrap();
                assert!(max_abs(&(lhs - rhs)) < 1e-12);
            }
        }
    }

    #[test]
    fn qubit_preset_shape() {
        let sys = preset_qubit(1.0, 0.1).unwrap();
        assert_eq!((sys.dim(), sys.n_coherent(), sys.n_incoherent()), (2, 1, 1));
        assert_eq!(preset_qubit(1.0, 0.0).unwrap_err().field, "gamma");
        assert_eq!(preset_qubit(1.0, -1.0).unwrap_err().code, ModelErrorCode::Physics);
        let l = sys.liouvillian(&ControlSample::zero(&sys)).unwrap();
        assert!(max_abs(&l.apply(&linalg::ket_bra(2, 0, 0)).unwrap()) == 0.0);
    }

    #[test]
    fn qubit_thermal_fixed_point() {
        // Stationary excited population of the rate equations is n/(2n+1).
        let n0 = 0.8;
        let sys = preset_qubit(0.7, 0.2).unwrap();
        let l = sys.liouvillian(&ControlSample::new(vec![0.0], vec![n0])).unwrap();
        let p1 = n0 / (2.0 * n0 + 1.0);
        let rho = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![real(1.0 - p1), real(p1)]));
        assert!(max_abs(&l.apply(&rho).unwrap()) < 1e-15);
    }

    #[test]
    fn qutrit_preset_structure() {
        let sys = preset_qutrit_forbidden([0.0, 1.0, 2.0], C64::new(1.0, 0.5), real(1.0), 0.1, 0.1).unwrap();
        assert_eq!((sys.dim(), sys.n_coherent(), sys.n_incoherent()), (3, 1, 2));
        for u in [-3.0, 0.0, 0.4, 17.0] {
            let h = sys.hamiltonian(&[u]).unwrap();
            assert_eq!(h[(0, 1)], C64::new(0.0, 0.0));
            assert_eq!(h[(1, 0)], C64::new(0.0, 0.0));
        }
        let err = preset_qutrit_forbidden([0.0, 1.0, 1.0], real(1.0), real(1.0), 0.1, 0.1).unwrap_err();
        assert_eq!(err.field, "energies");
        assert_eq!(preset_qutrit_forbidden([0.0, 1.0, 2.0], real(1.0), real(1.0), 0.1, 0.0).unwrap_err().field, "a2");
    }

    #[test]
    fn two_qubit_local_liouvillians_lift_when_uncoupled() {
        let (w1, w2, g1, g2) = (0.9, 1.4, 0.05, 0.11);
        let sys = preset_two_qubit(w1, w2, 0.0, g1, g2).unwrap();
        let q1 = preset_qubit(w1, g1).unwrap();
        let q2 = preset_qubit(w2, g2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let s = random_sample(&sys, &mut rng);
            let l = sys.liouvillian(&s).unwrap();
            let l1 = q1.liouvillian(&ControlSample::new(vec![s.u[0]], vec![s.n[0]])).unwrap();
            let l2 = q2.liouvillian(&ControlSample::new(vec![s.u[1]], vec![s.n[1]])).unwrap();
            // Oracle on product operators: L(X⊗Y) = L₁(X)⊗Y + X⊗L₂(Y).
            for _ in 0..4 {
                let x = random_operator(2, &mut rng);
                let y = random_operator(2, &mut rng);
                let want = kron(&l1.apply(&x).unwrap(), &y) + kron(&x, &l2.apply(&y).unwrap());
                let got = l.apply(&kron(&x, &y)).unwrap();
                assert!(max_abs(&(got - want)) < 1e-12);
            }
        }
        let sys = preset_two_qubit(1.0, 1.0, 0.3, 0.1, 0.1).unwrap();
        assert_eq!((sys.dim(), sys.n_coherent(), sys.n_incoherent()), (4, 2, 2));
        assert!(preset_two_qubit(1.0, 1.0, 0.3, 0.1, -0.1).is_err());
    }

    #[test]
    fn rejects_bad_systems() {
        let mut h = linalg::sigma_x();
        h[(0, 1)] = C64::new(0.0, 1.0);
        let e = ControlledSystem::new(h, vec![], vec![], 0).unwrap_err();
        assert_eq!(e.code, ModelErrorCode::NotHermitian);
        assert_eq!(e.message, "H0 not Hermitian");
        let e = ControlledSystem::new(linalg::sigma_z(), vec![], vec![IncoherentChannel::levels(1, 0, 0.1, 0)], 1)
            .unwrap_err();
        assert_eq!(e.code, ModelErrorCode::BadIndex);
        let e = ControlledSystem::new(linalg::sigma_z(), vec![], vec![IncoherentChannel::levels(0, 1, 0.1, 1)], 1)
            .unwrap_err();
        assert_eq!(e.field, "channels[0].control_index");
    }
}
