//! Closed-form roots of the monic real cubic `λ³ + aλ² + bλ + c`.

use std::f64::consts::PI;

use super::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootClass {
    ThreeDistinctReal,
    OneRealPairComplex,
    /// Two or three roots closer than `1e-7·(1 + max|λ|)`.
    Repeated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicRoots {
    pub roots: [C64; 3],
    pub class: RootClass,
}

impl CubicRoots {
    pub fn min_separation(&self) -> f64 {
        let r = &self.roots;
        (r[0] - r[1]).norm().min((r[0] - r[2]).norm()).min((r[1] - r[2]).norm())
    }

    pub fn spectral_radius(&self) -> f64 {
        self.roots.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Relative separation below which roots count as repeated.
pub const REPEATED_ROOT_TOL: f64 = 1e-7;

fn eval(a: f64, b: f64, c: f64, z: C64) -> C64 {
    ((z + a) * z + b) * z + c
}

fn polish(a: f64, b: f64, c: f64, z: C64) -> C64 {
    let f = eval(a, b, c, z);
    let df = (z * 3.0 + 2.0 * a) * z + b;
    if df.norm() == 0.0 {
        return z;
    }
    let next = z - f / df;
    if eval(a, b, c, next).norm() < f.norm() {
        next
    } else {
        z
    }
}

/// Cardano's method on the depressed cubic `t³ + pt + q` with `λ = t − a/3`.
///
/// Three real roots come from the trigonometric form; otherwise the real root
/// uses the cancellation-free pairing `v = −p / (3u)`. Each root then gets one
/// guarded Newton step.
pub fn cardano_roots(a: f64, b: f64, c: f64) -> CubicRoots {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;

    let depressed: [C64; 3] = if p == 0.0 && q == 0.0 {
        [C64::new(0.0, 0.0); 3]
    } else if disc <= 0.0 {
        // p < 0 here, otherwise disc > 0 unless p = q = 0.
        let m = 2.0 * (-third_p).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        [0, 1, 2].map(|k| C64::new(m * (theta - 2.0 * PI * k as f64 / 3.0).cos(), 0.0))
    } else {
        let sq = disc.sqrt();
        let u = (-half_q - half_q.signum() * sq).cbrt();
        let v = if u != 0.0 { -third_p / u } else { 0.0 };
        let real = u + v;
        let imag = 3f64.sqrt() / 2.0 * (u - v);
        [C64::new(real, 0.0), C64::new(-real / 2.0, imag), C64::new(-real / 2.0, -imag)]
    };

    let mut roots = depressed.map(|t| polish(a, b, c, t - shift));
    if disc > 0.0 {
        // Keep the complex pair exactly conjugate after polishing.
        roots[0].im = 0.0;
        roots[2] = roots[1].conj();
    } else {
        for r in &mut roots {
            r.im = 0.0;
        }
    }

    let mut out = CubicRoots { roots, class: RootClass::ThreeDistinctReal };
    out.class = if out.min_separation() < REPEATED_ROOT_TOL * (1.0 + out.spectral_radius()) {
        RootClass::Repeated
    } else if disc > 0.0 {
        RootClass::OneRealPairComplex
    } else {
        RootClass::ThreeDistinctReal
    };
    out
}
