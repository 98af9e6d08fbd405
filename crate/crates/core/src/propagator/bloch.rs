//! Qubit fast path: affine Bloch dynamics `dr/dt = B r + c` stepped in closed
//! form from the eigenvalues of `B`, which are the roots of its characteristic
//! cubic.
//!
//! For a step of length `dt` the augmented system `[[B, c], [0, 0]]` has the
//! exponential `[[e^{B dt}, φ(B dt)·c dt], [0, 1]]` with `φ(z) = (e^z − 1)/z`.
//! Both blocks are functions of `B dt` alone, so with distinct eigenvalues
//! `λ_i` they follow from Lagrange–Sylvester interpolation:
//!
//! ```text
//! f(X) = Σ_i f(λ_i) Π_{j≠i} (X − λ_j) / (λ_i − λ_j)
//! ```
//!
//! `φ` is entire, so a singular `B` needs no special case. Clustered roots make
//! the interpolation ill-conditioned; those steps fall back to a Padé
//! exponential of the 4×4 augmented matrix.

use nalgebra::{Matrix3, Vector3};

use super::{PWCControls, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{
    cardano_roots, expm, identity, sigma_x, sigma_y, sigma_z, CMatrix, CubicRoots, RootClass, C64, REPEATED_ROOT_TOL,
};
use crate::models::{ControlSample, ControlledSystem};
use crate::state::{bloch_from_density, BlochVector, DensityMatrix};

/// `dr/dt = B r + c` for a trace-one qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochAffineGenerator {
    pub matrix: Matrix3<f64>,
    pub offset: Vector3<f64>,
}

/// Which route a Bloch step took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepPath {
    Cardano,
    PadeFallback,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BlochDiagnostics {
    pub cardano_steps: usize,
    pub fallback_steps: usize,
}

/// `B_ij = ½ Tr(σ_i L(σ_j))`, `c_i = ½ Tr(σ_i L(I))`.
pub fn bloch_affine_generator(system: &ControlledSystem, sample: &ControlSample) -> Result<BlochAffineGenerator> {
    if system.dim() != 2 {
        return Err(Error::Dimension(format!("Bloch generator needs a qubit, got dim {}", system.dim())));
    }
    let l = system.liouvillian(sample)?;
    let mut matrix = Matrix3::zeros();
    for (j, s) in [sigma_x(), sigma_y(), sigma_z()].iter().enumerate() {
        let image = BlochVector::components_of(&l.apply(s)?)?;
        matrix.set_column(j, &(image * 0.5));
    }
    let offset = BlochVector::components_of(&l.apply(&identity(2))?)? * 0.5;
    Ok(BlochAffineGenerator { matrix, offset })
}

pub fn bloch_step_cardano(gen: &BlochAffineGenerator, dt: f64, r: &BlochVector) -> BlochVector {
    bloch_step_with_path(gen, dt, r).0
}

fn phi(z: C64) -> C64 {
    if z.norm() < 0.1 {
        // Taylor series of (e^z − 1)/z; 14 terms reach machine precision here.
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..16 {
            term = term * z / k as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

fn characteristic_roots(b: &Matrix3<f64>) -> CubicRoots {
    let trace = b.trace();
    let minors = b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)] + b[(0, 0)] * b[(2, 2)] - b[(0, 2)] * b[(2, 0)]
        + b[(1, 1)] * b[(2, 2)]
        - b[(1, 2)] * b[(2, 1)];
    cardano_roots(-trace, minors, -b.determinant())
}

/// One exact step of length `dt`, reporting whether the Cardano route was used.
pub fn bloch_step_with_path(gen: &BlochAffineGenerator, dt: f64, r: &BlochVector) -> (BlochVector, StepPath) {
    if dt == 0.0 {
        return (*r, StepPath::Cardano);
    }
    let b = gen.matrix * dt;
    let c = gen.offset * dt;
    let roots = characteristic_roots(&b);
    let clustered = roots.class == RootClass::Repeated
        || roots.min_separation() < REPEATED_ROOT_TOL * (1.0 + roots.spectral_radius());
    if clustered {
        return (pade_step(&b, &c, r), StepPath::PadeFallback);
    }

    let bc = b.map(|x| C64::new(x, 0.0));
    let id = Matrix3::<C64>::identity();
    let lam = roots.roots;
    let mut exp_b = Matrix3::<C64>::zeros();
    let mut phi_b = Matrix3::<C64>::zeros();
    for i in 0..3 {
        let mut proj = id;
        for j in (0..3).filter(|&j| j != i) {
            proj = proj * (bc - id * lam[j]) / (lam[i] - lam[j]);
        }
        exp_b += proj * lam[i].exp();
        phi_b += proj * phi(lam[i]);
    }
    let rc = r.0.map(|x| C64::new(x, 0.0));
    let cc = c.map(|x| C64::new(x, 0.0));
    let next = exp_b * rc + phi_b * cc;
    (BlochVector(next.map(|z| z.re)), StepPath::Cardano)
}

fn pade_step(b: &Matrix3<f64>, c: &Vector3<f64>, r: &BlochVector) -> BlochVector {
    let mut aug = CMatrix::zeros(4, 4);
    for i in 0..3 {
        for j in 0..3 {
            aug[(i, j)] = C64::new(b[(i, j)], 0.0);
        }
        aug[(i, 3)] = C64::new(c[i], 0.0);
    }
    let e = expm(&aug).expect("finite 4x4 generator");
    let v = [r.0.x, r.0.y, r.0.z, 1.0];
    let out = Vector3::from_fn(|i, _| (0..4).map(|j| e[(i, j)].re * v[j]).sum());
    BlochVector(out)
}

/// Propagate a qubit along the Bloch fast path.
pub fn propagate_bloch(
    system: &ControlledSystem,
    controls: &PWCControls,
    rho0: &DensityMatrix,
) -> Result<(Trajectory, BlochDiagnostics)> {
    controls.check_system(system)?;
    let mut r = bloch_from_density(rho0)?;
    let dt = controls.grid().dt();
    let mut diag = BlochDiagnostics::default();
    let mut states = vec![rho0.clone()];
    for m in 0..controls.grid().intervals() {
        let gen = bloch_affine_generator(system, &controls.sample(m))?;
        let (next, path) = bloch_step_with_path(&gen, dt, &r);
        match path {
            StepPath::Cardano => diag.cardano_steps += 1,
            StepPath::PadeFallback => diag.fallback_steps += 1,
        }
        r = next;
        states.push(DensityMatrix::from_matrix_unchecked(r.to_operator()));
    }
    Ok((Trajectory { times: controls.grid().nodes(), states, step_propagators: None }, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hs_distance_sq, CVector};
    use crate::models::preset_qubit;
    use crate::propagator::{propagate, TimeGrid};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generator_reproduces_liouvillian_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let sys = preset_qubit(rng.random_range(-2.0..2.0), rng.random_range(0.01..1.0)).unwrap();
            let s = ControlSample::new(vec![rng.random_range(-2.0..2.0)], vec![rng.random_range(0.0..2.0)]);
            let gen = bloch_affine_generator(&sys, &s).unwrap();
            let l = sys.liouvillian(&s).unwrap();
            let x = CMatrix::from_fn(2, 2, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let lhs = BlochVector::components_of(&l.apply(&x).unwrap()).unwrap();
            let rx = BlochVector::components_of(&x).unwrap();
            let tr = x.trace();
            // Non-Hermitian X: the real parts of both sides must agree.
            let rhs = gen.matrix * rx + gen.offset * tr.re;
            assert!((lhs - rhs).norm() < 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn generator_examples() {
        let free = ControlledSystem::new(crate::linalg::zeros(2), vec![sigma_x()], vec![], 1).unwrap();
        let gen = bloch_affine_generator(&free, &ControlSample::new(vec![0.0], vec![0.0])).unwrap();
        assert_eq!(gen.matrix, Matrix3::zeros());
        assert_eq!(gen.offset, Vector3::zeros());

        // −i[(ω/2)σ_z, ρ]: ṙ_x = −ω r_y, ṙ_y = ω r_x.
        let omega = 1.7;
        let prec = ControlledSystem::new(sigma_z() * C64::new(omega / 2.0, 0.0), vec![], vec![], 0).unwrap();
        let gen = bloch_affine_generator(&prec, &ControlSample::new(vec![], vec![])).unwrap();
        let want = Matrix3::new(0.0, -omega, 0.0, omega, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!((gen.matrix - want).norm() < 1e-15);
        assert_eq!(gen.offset, Vector3::zeros());

        let gamma = 0.3;
        let damp = preset_qubit(0.0, gamma).unwrap();
        let gen = bloch_affine_generator(&damp, &ControlSample::new(vec![0.0], vec![0.0])).unwrap();
        let want = Matrix3::from_diagonal(&Vector3::new(-gamma / 2.0, -gamma / 2.0, -gamma));
        assert!((gen.matrix - want).norm() < 1e-15);
        assert!((gen.offset - Vector3::new(0.0, 0.0, gamma)).norm() < 1e-15);

        assert!(bloch_affine_generator(
            &crate::models::preset_two_qubit(1.0, 1.0, 0.0, 0.1, 0.1).unwrap(),
            &ControlSample::new(vec![0.0, 0.0], vec![0.0, 0.0])
        )
        .is_err());
    }

    #[test]
    fn null_generator_keeps_state() {
        let gen = BlochAffineGenerator { matrix: Matrix3::zeros(), offset: Vector3::zeros() };
        let r = BlochVector::new(0.1, -0.4, 0.3);
        assert_eq!(bloch_step_cardano(&gen, 2.0, &r), r);
    }

    #[test]
    fn relaxation_from_south_pole() {
        // r_z(t) = 1 − 2e^{−γt} from r = (0, 0, −1).
        let gamma = 0.45;
        let gen = BlochAffineGenerator {
            matrix: Matrix3::from_diagonal(&Vector3::new(-gamma / 2.0, -gamma / 2.0, -gamma)),
            offset: Vector3::new(0.0, 0.0, gamma),
        };
        for t in [0.1, 1.0, 3.7] {
            let (r, path) = bloch_step_with_path(&gen, t, &BlochVector::new(0.0, 0.0, -1.0));
            assert_eq!(path, StepPath::PadeFallback);
            assert!((r.0.z - (1.0 - 2.0 * (-gamma * t).exp())).abs() < 1e-13);
        }
        // With a drive the roots separate and the Cardano route is used.
        let mut driven = gen;
        driven.matrix[(2, 1)] = -0.8;
        driven.matrix[(1, 2)] = 0.8;
        let (_, path) = bloch_step_with_path(&driven, 1.0, &BlochVector::new(0.0, 0.0, -1.0));
        assert_eq!(path, StepPath::Cardano);
    }

    #[test]
    fn random_affine_steps_match_pade() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let b = Matrix3::from_fn(|_, _| rng.random_range(-2.0..2.0));
            let c = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let dt = rng.random_range(0.0..2.0);
            let r =
                BlochVector::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
            let gen = BlochAffineGenerator { matrix: b, offset: c };
            let fast = bloch_step_cardano(&gen, dt, &r);
            let oracle = pade_step(&(b * dt), &(c * dt), &r);
            assert!((fast.0 - oracle.0).norm() < 1e-9, "{} vs {}", fast.0, oracle.0);
        }
    }

    #[test]
    fn fast_path_matches_generic_trajectory() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let sys = preset_qubit(rng.random_range(-2.0..2.0), rng.random_range(0.01..1.0)).unwrap();
            let grid = TimeGrid::new(rng.random_range(0.5..5.0), 10).unwrap();
            let c = PWCControls::new(
                grid,
                DMatrix::from_fn(10, 1, |_, _| rng.random_range(-2.0..2.0)),
                DMatrix::from_fn(10, 1, |_, _| rng.random_range(-1.0..1.0)),
            )
            .unwrap();
            let ket = CVector::from_vec(vec![
                C64::new(rng.random_range(-1.0..1.0), 0.3),
                C64::new(0.2, rng.random_range(-1.0..1.0)),
            ]);
            let rho0 = DensityMatrix::from_ket(&ket).unwrap();
            let (fast, diag) = propagate_bloch(&sys, &c, &rho0).unwrap();
            let slow = propagate(&sys, &c, &rho0).unwrap();
            assert_eq!(diag.cardano_steps + diag.fallback_steps, 10);
            for (a, b) in fast.states.iter().zip(&slow.states) {
                assert!(hs_distance_sq(a.matrix(), b.matrix()).unwrap().sqrt() < 1e-9);
            }
        }
    }
}
