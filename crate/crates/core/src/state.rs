//! Quantum states, vectorized superoperators and the qubit Bloch parameterization.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::linalg::{
    self, devectorize, hermitian_eigenvalues, hermiticity_error, identity, vectorize, CMatrix, CVector, C64, ONE,
};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-10;

/// A density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Validates with the default tolerances.
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, POSITIVITY_TOL)
    }

    /// Validates Hermiticity and trace at `1e-12`, positivity at `positivity_tol`.
    pub fn with_tolerance(m: CMatrix, positivity_tol: f64) -> Result<Self> {
        linalg::ensure_square(&m, "density matrix")?;
        if m.nrows() == 0 {
            return Err(Error::Dimension("density matrix must have dim >= 1".into()));
        }
        if !linalg::all_finite(&m) {
            return Err(Error::NonFinite("density matrix"));
        }
        let herm = hermiticity_error(&m);
        if herm > HERMITIAN_TOL {
            return Err(Error::Domain(format!("density matrix not Hermitian (error {herm:e})")));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::Domain(format!("density matrix trace {tr} != 1")));
        }
        let min_eig = hermitian_eigenvalues(&m)[0];
        if min_eig < -positivity_tol {
            return Err(Error::Domain(format!("density matrix has eigenvalue {min_eig:e}")));
        }
        Ok(Self(m))
    }

    /// Wraps a propagated matrix without validation.
    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    /// `|ψ⟩⟨ψ|` for a ket normalized here.
    pub fn from_ket(ket: &CVector) -> Result<Self> {
        let norm = ket.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Domain("ket must be nonzero and finite".into()));
        }
        let k = ket / C64::new(norm, 0.0);
        let m = &k * k.adjoint();
        // Symmetrize away rounding so the Hermitian check is exact.
        let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        Self::new(m)
    }

    /// The computational basis projector `|i⟩⟨i|`.
    pub fn basis(dim: usize, i: usize) -> Self {
        Self(linalg::ket_bra(dim, i, i))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(identity(dim) / C64::new(dim as f64, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn vectorize(&self) -> CVector {
        vectorize(&self.0)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.0)[0]
    }
}

/// Whether a superoperator generates dynamics or is itself a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperKind {
    Generator,
    Channel,
}

/// Linear map on `N×N` operators as an `N²×N²` matrix (column stacking).
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: CMatrix,
    kind: SuperKind,
}

impl Superoperator {
    pub fn new(dim: usize, matrix: CMatrix, kind: SuperKind) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::Dimension(format!(
                "superoperator on dim {dim} must be {0}x{0}, got {1:?}",
                dim * dim,
                matrix.shape()
            )));
        }
        Ok(Self { dim, matrix, kind })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, matrix: identity(dim * dim), kind: SuperKind::Channel }
    }

    /// The unitary channel `ρ ↦ UρU†`, i.e. `Ū ⊗ U`.
    pub fn unitary(u: &CMatrix) -> Self {
        Self { dim: u.nrows(), matrix: linalg::sandwich_superop(u, u), kind: SuperKind::Channel }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn kind(&self) -> SuperKind {
        self.kind
    }

    pub fn apply(&self, op: &CMatrix) -> Result<CMatrix> {
        if op.nrows() != self.dim || op.ncols() != self.dim {
            return Err(Error::Dimension(format!("operator {:?} on superoperator of dim {}", op.shape(), self.dim)));
        }
        devectorize(&(&self.matrix * vectorize(op)))
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &Superoperator) -> Result<Superoperator> {
        if self.dim != first.dim {
            return Err(Error::Dimension(format!("compose dim {} with {}", self.dim, first.dim)));
        }
        Ok(Superoperator { dim: self.dim, matrix: &self.matrix * &first.matrix, kind: SuperKind::Channel })
    }

    /// Largest entry of `vec(I)† S` for a generator, or of `vec(I)† S − vec(I)†` for a channel.
    pub fn trace_error(&self) -> f64 {
        let vid = vectorize(&identity(self.dim));
        let row = vid.adjoint() * &self.matrix;
        let target = match self.kind {
            SuperKind::Generator => CVector::zeros(vid.len()).adjoint(),
            SuperKind::Channel => vid.adjoint(),
        };
        (row - target).iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ S(|i⟩⟨j|)`.
    pub fn choi(&self) -> CMatrix {
        let n = self.dim;
        let mut choi = CMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                // vec(|i⟩⟨j|) is the unit vector at column-stacked index j·n + i.
                let col = self.matrix.column(j * n + i);
                let image = CMatrix::from_column_slice(n, n, col.as_slice());
                choi.view_mut((i * n, j * n), (n, n)).copy_from(&image);
            }
        }
        choi
    }

    /// Smallest eigenvalue of the Choi matrix; `≥ 0` for completely positive maps.
    pub fn choi_min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.choi())[0]
    }
}

/// Qubit state as `ρ = (I + r·σ)/2`, with `|0⟩⟨0|` at `r = (0, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector(pub Vector3<f64>);

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Components `Tr(σ_i X)` of an arbitrary 2×2 operator.
    pub fn components_of(op: &CMatrix) -> Result<Vector3<f64>> {
        if op.shape() != (2, 2) {
            return Err(Error::Dimension(format!("Bloch components need a 2x2 operator, got {:?}", op.shape())));
        }
        let x = op[(0, 1)] + op[(1, 0)];
        let y = (op[(0, 1)] - op[(1, 0)]) * C64::new(0.0, 1.0);
        let z = op[(0, 0)] - op[(1, 1)];
        Ok(Vector3::new(x.re, y.re, z.re))
    }

    pub fn to_operator(&self) -> CMatrix {
        let r = self.0;
        let half = C64::new(0.5, 0.0);
        CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0 + r.z, 0.0) * half,
                C64::new(r.x, -r.y) * half,
                C64::new(r.x, r.y) * half,
                C64::new(1.0 - r.z, 0.0) * half,
            ],
        )
    }
}

pub fn bloch_from_density(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::Dimension(format!("Bloch vector needs dim 2, got {}", rho.dim())));
    }
    Ok(BlochVector(BlochVector::components_of(rho.matrix())?))
}

/// `(I + r·σ)/2`. Fails for `|r| > 1 + 1e-10`.
pub fn density_from_bloch(r: &BlochVector) -> Result<DensityMatrix> {
    if !r.0.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("Bloch vector"));
    }
    if r.norm() > 1.0 + POSITIVITY_TOL {
        return Err(Error::Domain(format!("Bloch vector length {} exceeds 1", r.norm())));
    }
    Ok(DensityMatrix(r.to_operator()))
}
