//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants (Higham 2005), and its Fréchet derivative through the
//! block-triangular augmentation `exp([[A, E], [0, A]])`.

use super::{all_finite, ensure_same_dim, ensure_square, identity, one_norm, CMatrix, C64};
use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.53939833006323e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068e0)];
const THETA_13: f64 = 5.371920351148152e0;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE_9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `e^A` for a square complex matrix.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = ensure_square(a, "expm argument")?;
    if !all_finite(a) {
        return Err(Error::NonFinite("expm argument"));
    }
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = one_norm(a);
    for (order, theta) in THETA {
        if norm <= theta {
            let coeffs: &[f64] = match order {
                3 => &PADE_3,
                5 => &PADE_5,
                7 => &PADE_7,
                _ => &PADE_9,
            };
            return pade_low(a, coeffs);
        }
    }
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let scaled = a * re(0.5f64.powi(s));
    let mut r = pade_13(&scaled)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn solve_pade(u: CMatrix, v: CMatrix) -> Result<CMatrix> {
    let p = &v + &u;
    let q = v - u;
    q.lu().solve(&p).ok_or_else(|| Error::Domain("singular Padé denominator".into()))
}

fn pade_low(a: &CMatrix, b: &[f64]) -> Result<CMatrix> {
    let n = a.nrows();
    let a2 = a * a;
    let mut odd = identity(n) * re(b[1]);
    let mut even = identity(n) * re(b[0]);
    let mut power = identity(n);
    for k in 1..b.len() / 2 {
        power = &power * &a2;
        odd += &power * re(b[2 * k + 1]);
        even += &power * re(b[2 * k]);
    }
    let u = a * odd;
    solve_pade(u, even)
}

fn pade_13(a: &CMatrix) -> Result<CMatrix> {
    let b = &PADE_13;
    let n = a.nrows();
    let id = identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * re(b[13]) + &a4 * re(b[11]) + &a2 * re(b[9]))
        + &a6 * re(b[7])
        + &a4 * re(b[5])
        + &a2 * re(b[3])
        + &id * re(b[1]);
    let u = a * inner_u;
    let v = &a6 * (&a6 * re(b[12]) + &a4 * re(b[10]) + &a2 * re(b[8]))
        + &a6 * re(b[6])
        + &a4 * re(b[4])
        + &a2 * re(b[2])
        + &id * re(b[0]);
    solve_pade(u, v)
}

/// Directional derivative `d/ds e^{A + sE}` at `s = 0`, read off the
/// upper-right block of `exp([[A, E], [0, A]])`.
pub fn expm_frechet(a: &CMatrix, e: &CMatrix) -> Result<CMatrix> {
    let n = ensure_square(a, "expm_frechet base")?;
    ensure_same_dim(a, e)?;
    let mut big = CMatrix::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(a);
    big.view_mut((0, n), (n, n)).copy_from(e);
    big.view_mut((n, n), (n, n)).copy_from(a);
    let exp_big = expm(&big)?;
    Ok(exp_big.view((0, n), (n, n)).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, zeros, ONE, ZERO};
    use rand::{Rng, SeedableRng};

    fn random_matrix(n: usize, scale: f64, seed: u64) -> CMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
    }

    /// Truncated Taylor series; independent of the Padé path.
    fn taylor_oracle(a: &CMatrix, terms: usize) -> CMatrix {
        let n = a.nrows();
        let mut sum = identity(n);
        let mut term = identity(n);
        for k in 1..terms {
            term = &term * a * re(1.0 / k as f64);
            sum += &term;
        }
        sum
    }

    fn rel_err(a: &CMatrix, b: &CMatrix) -> f64 {
        max_abs(&(a - b)) / max_abs(b).max(1e-300)
    }

    #[test]
    fn zero_gives_identity() {
        assert_eq!(expm(&zeros(3)).unwrap(), identity(3));
    }

    #[test]
    fn diagonal_exponentiates_entrywise() {
        let (a, b) = (C64::new(0.3, -1.2), C64::new(-2.5, 0.7));
        let m = CMatrix::from_row_slice(2, 2, &[a, ZERO, ZERO, b]);
        let e = expm(&m).unwrap();
        assert!((e[(0, 0)] - a.exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - b.exp()).norm() < 1e-14);
        assert_eq!(e[(0, 1)], ZERO);
    }

    #[test]
    fn nilpotent_series_truncates() {
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        let e = expm(&m).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(max_abs(&(e - want)) < 1e-15);
    }

    #[test]
    fn matches_taylor_oracle_on_random_4x4() {
        for seed in 0..20 {
            for scale in [0.01, 0.2, 1.0] {
                let a = random_matrix(4, scale, seed);
                let err = rel_err(&expm(&a).unwrap(), &taylor_oracle(&a, 30));
                assert!(err < 1e-12, "seed {seed} scale {scale}: {err}");
            }
        }
    }

    #[test]
    fn large_norm_uses_squaring() {
        // Hermitian times i: the exponential is unitary, a norm-free check.
        let h = random_matrix(4, 3.0, 11);
        let h = (&h + h.adjoint()) * re(2.0);
        let u = expm(&(h * C64::new(0.0, 1.0))).unwrap();
        assert!(crate::linalg::unitarity_error(&u) < 1e-11);
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = zeros(2);
        m[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(expm(&m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn commuting_sum_factorizes() {
        // Polynomials in the same matrix commute.
        let a = random_matrix(3, 0.7, 3);
        let b = &a * &a * re(0.3) - &a * re(1.1);
        let lhs = expm(&(&a + &b)).unwrap();
        let rhs = expm(&a).unwrap() * expm(&b).unwrap();
        assert!(rel_err(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn frechet_trivial_cases() {
        let a = random_matrix(3, 1.0, 5);
        let f = expm_frechet(&a, &zeros(3)).unwrap();
        assert!(max_abs(&f) == 0.0);
        let e = random_matrix(3, 1.0, 6);
        let f = expm_frechet(&zeros(3), &e).unwrap();
        assert!(max_abs(&(f - &e)) < 1e-15);
        assert!(expm_frechet(&a, &zeros(2)).is_err());
    }

    #[test]
    fn frechet_matches_central_difference() {
        let h = 1e-6;
        for seed in 0..10 {
            let a = random_matrix(3, 1.0, 100 + seed);
            let e = random_matrix(3, 1.0, 200 + seed);
            let plus = expm(&(&a + &e * re(h))).unwrap();
            let minus = expm(&(&a - &e * re(h))).unwrap();
            let fd = (plus - minus) * re(0.5 / h);
            let f = expm_frechet(&a, &e).unwrap();
            assert!(rel_err(&f, &fd) < 1e-6, "seed {seed}");
        }
    }

    #[test]
    fn frechet_is_linear_in_direction() {
        let a = random_matrix(3, 1.0, 41);
        let e1 = random_matrix(3, 1.0, 42);
        let e2 = random_matrix(3, 1.0, 43);
        let (alpha, beta) = (C64::new(0.7, -0.2), C64::new(-1.3, 0.4));
        let lhs = expm_frechet(&a, &(&e1 * alpha + &e2 * beta)).unwrap();
        let rhs = expm_frechet(&a, &e1).unwrap() * alpha + expm_frechet(&a, &e2).unwrap() * beta;
        assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn frechet_adjoint_pairing() {
        // <Λ, L(A, E)> = <L(A†, Λ), E> in the Frobenius inner product.
        let a = random_matrix(4, 1.0, 51);
        let e = random_matrix(4, 1.0, 52);
        let lam = random_matrix(4, 1.0, 53);
        let lhs = (lam.adjoint() * expm_frechet(&a, &e).unwrap()).trace();
        let rhs = (expm_frechet(&a.adjoint(), &lam).unwrap().adjoint() * e).trace();
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
    }
}
