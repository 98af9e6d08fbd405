//! Dense complex linear algebra for the small matrices that appear in
//! N-level open-system dynamics.
//!
//! Operators are `nalgebra` dynamic matrices of `Complex64`. Vectorization is
//! column stacking throughout the crate, which is also `nalgebra`'s storage
//! order, so `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.

mod cubic;
mod expm;

pub use cubic::{cardano_roots, CubicRoots, RootClass, REPEATED_ROOT_TOL};
pub use expm::{expm, expm_frechet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
/// Square complex matrix: Hamiltonians, observables, gates, superoperators.
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `|i⟩⟨j|` in dimension `n`.
pub fn ket_bra(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = zeros(n);
    m[(i, j)] = ONE;
    m
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_square(m: &CMatrix, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!("{what} is {}x{}, expected square", m.nrows(), m.ncols())));
    }
    Ok(m.nrows())
}

pub fn ensure_same_dim(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut err = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            err = err.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    err
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.nrows() == m.ncols() && hermiticity_error(m) <= tol
}

/// Largest deviation of `U†U` from the identity.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - identity(n)).iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the Hermitian part is used.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Column-stacking vectorization.
pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`]; the length must be a perfect square.
pub fn devectorize(v: &CVector) -> Result<CMatrix> {
    let len = v.len();
    let n = (len as f64).sqrt().round() as usize;
    if n * n != len || n == 0 {
        return Err(Error::Dimension(format!("vector length {len} is not a positive perfect square")));
    }
    Ok(CMatrix::from_column_slice(n, n, v.as_slice()))
}

/// `Re Tr(A† B)`, the real Frobenius inner product.
pub fn re_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Squared Hilbert–Schmidt distance `Tr[(A−B)†(A−B)]`.
pub fn hs_distance_sq(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    ensure_same_dim(a, b)?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum())
}

/// Induced 1-norm (maximum absolute column sum).
pub fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Superoperator of `ρ ↦ A ρ B†` under column stacking: `B̄ ⊗ A`.
pub fn sandwich_superop(a: &CMatrix, b: &CMatrix) -> CMatrix {
    kron(&b.conjugate(), a)
}

/// Superoperator of `ρ ↦ −i[H, ρ]`.
pub fn commutator_superop(h: &CMatrix) -> CMatrix {
    let n = h.nrows();
    let id = identity(n);
    (kron(&id, h) - kron(&h.transpose(), &id)) * (-I)
}

/// Superoperator of the GKSL dissipator `D[L]ρ = LρL† − ½{L†L, ρ}`.
pub fn lindblad_superop(l: &CMatrix) -> CMatrix {
    let n = l.nrows();
    let id = identity(n);
    let ldl = l.adjoint() * l;
    let half = C64::new(0.5, 0.0);
    sandwich_superop(l, l) - (kron(&id, &ldl) + kron(&ldl.transpose(), &id)) * half
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(n: usize, seed: u64) -> CMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn vectorize_identity_and_sigma_x() {
        let v = vectorize(&identity(2));
        assert_eq!(v.as_slice(), &[ONE, ZERO, ZERO, ONE]);
        let v = vectorize(&sigma_x());
        assert_eq!(v.as_slice(), &[ZERO, ONE, ONE, ZERO]);
    }

    #[test]
    fn vectorize_is_column_stacking() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE, C64::new(2.0, 0.0), C64::new(3.0, 0.0), C64::new(4.0, 0.0)]);
        let v = vectorize(&m);
        let re: Vec<f64> = v.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn devectorize_round_trip_exact() {
        let m = random_matrix(3, 7);
        assert_eq!(devectorize(&vectorize(&m)).unwrap(), m);
    }

    #[test]
    fn devectorize_rejects_non_square_length() {
        let v = CVector::from_element(5, ONE);
        assert!(matches!(devectorize(&v), Err(Error::Dimension(_))));
        assert!(devectorize(&CVector::zeros(0)).is_err());
    }

    #[test]
    fn hs_distance_examples() {
        let a = random_matrix(3, 1);
        assert_eq!(hs_distance_sq(&a, &a).unwrap(), 0.0);
        let d = hs_distance_sq(&ket_bra(2, 0, 0), &ket_bra(2, 1, 1)).unwrap();
        assert_eq!(d, 2.0);
        assert!(hs_distance_sq(&identity(2), &identity(3)).is_err());
    }

    #[test]
    fn hs_distance_matches_trace_formula() {
        let a = random_matrix(4, 2);
        let b = random_matrix(4, 3);
        let diff = &a - &b;
        let oracle = (diff.adjoint() * &diff).trace().re;
        let got = hs_distance_sq(&a, &b).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle.max(1.0));
    }

    #[test]
    fn sandwich_matches_direct_product() {
        let a = random_matrix(3, 4);
        let b = random_matrix(3, 5);
        let rho = random_matrix(3, 6);
        let direct = &a * &rho * b.adjoint();
        let via = devectorize(&(sandwich_superop(&a, &b) * vectorize(&rho))).unwrap();
        assert!(max_abs(&(direct - via)) < 1e-13);
    }

    #[test]
    fn lindblad_superop_matches_definition() {
        let l = random_matrix(3, 8);
        let rho = random_matrix(3, 9);
        let ldl = l.adjoint() * &l;
        let direct = &l * &rho * l.adjoint() - (&ldl * &rho + &rho * &ldl) * C64::new(0.5, 0.0);
        let via = devectorize(&(lindblad_superop(&l) * vectorize(&rho))).unwrap();
        assert!(max_abs(&(direct - via)) < 1e-13);
    }
}
