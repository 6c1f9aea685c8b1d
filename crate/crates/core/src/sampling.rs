//! Seeded, splittable randomness and exact-invariance samplers.
//!
//! Every sampler here draws from an explicit [`RandomStream`]. A stream is a
//! deterministic function of its `(seed, path)` pair, so a computation that
//! receives a stream is reproducible bit for bit. Parallel work never shares a
//! stream; it splits one child stream per unit of work instead.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::exterior::{orthonormalize, OrthoFrame};

/// A seeded random stream identified by its seed and split path.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    path: Vec<u64>,
    rng: ChaCha12Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::at(seed, Vec::new())
    }

    fn at(seed: u64, path: Vec<u64>) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"crofton-stream-v1");
        hasher.update(seed.to_le_bytes());
        hasher.update((path.len() as u64).to_le_bytes());
        for index in &path {
            hasher.update(index.to_le_bytes());
        }
        let key: [u8; 32] = hasher.finalize().into();
        Self {
            seed,
            path,
            rng: ChaCha12Rng::from_seed(key),
        }
    }

    /// Child stream `index`. Depends only on `(seed, path, index)`, never on
    /// how much of the parent has been consumed.
    pub fn split(&self, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        Self::at(self.seed, path)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    pub fn normal(&mut self) -> f64 {
        self.sample(StandardNormal)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Matrix of independent standard normals.
pub fn gaussian_matrix(rows: usize, cols: usize, stream: &mut RandomStream) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| stream.normal())
}

/// Uniform point on the unit sphere `S^{q-1}` in `R^q`.
pub fn sample_sphere(q: usize, stream: &mut RandomStream) -> DVector<f64> {
    assert!(q >= 1, "sphere dimension must be positive");
    loop {
        let v = DVector::from_fn(q, |_, _| stream.normal());
        let norm = v.norm();
        if norm > 1e-300 {
            return v / norm;
        }
    }
}

/// Haar-distributed element of `SO(n)`.
///
/// QR of a Gaussian matrix with the signs of `R`'s diagonal absorbed into `Q`
/// is Haar on `O(n)`; negating the first column on negative determinant maps
/// that onto Haar measure on `SO(n)`.
pub fn sample_rotation(n: usize, stream: &mut RandomStream) -> DMatrix<f64> {
    assert!(n >= 1, "rotation dimension must be positive");
    let g = gaussian_matrix(n, n, stream);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Haar-distributed element of `U(n)`, realified to a `2n x 2n` orthogonal
/// matrix commuting with the standard complex structure.
pub fn sample_unitary(n: usize, stream: &mut RandomStream) -> DMatrix<f64> {
    realify(&sample_unitary_complex(n, stream))
}

/// Haar-distributed element of `U(n)` as a complex matrix.
pub fn sample_unitary_complex(n: usize, stream: &mut RandomStream) -> DMatrix<Complex64> {
    assert!(n >= 1, "unitary dimension must be positive");
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(stream.normal() * scale, stream.normal() * scale)
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let modulus = d.norm();
        if modulus > 0.0 {
            let phase = d / modulus;
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Realification of a complex matrix in the `(re, im)` interleaved layout:
/// complex coordinate `j` occupies real coordinates `2j` and `2j + 1`.
pub fn realify(a: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    let mut out = DMatrix::zeros(2 * rows, 2 * cols);
    for i in 0..rows {
        for j in 0..cols {
            let z = a[(i, j)];
            out[(2 * i, 2 * j)] = z.re;
            out[(2 * i, 2 * j + 1)] = -z.im;
            out[(2 * i + 1, 2 * j)] = z.im;
            out[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    out
}

/// Inverse of the vector realification: `(re, im)` pairs to complex entries.
pub fn complexify(x: &DVector<f64>) -> DVector<Complex64> {
    assert!(x.len() % 2 == 0, "realified vector must have even length");
    DVector::from_fn(x.len() / 2, |j, _| Complex64::new(x[2 * j], x[2 * j + 1]))
}

/// Torus coordinates on `S^3`.
///
/// The point is `(sin b cos a, sin b sin a, cos b cos g, cos b sin g)` with
/// `a = alpha`, `b = beta`, `g = gamma`. The first two coordinates are the
/// `a_1, a_2` functions and the last two are `b_1, b_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl TorusPoint {
    /// Torus coordinates of a unit vector of `R^4`. `beta` lands in `[0, pi/2]`.
    pub fn from_s3(x: [f64; 4]) -> Self {
        let alpha = x[1].atan2(x[0]).rem_euclid(TAU);
        let gamma = x[3].atan2(x[2]).rem_euclid(TAU);
        let beta = x[0].hypot(x[1]).atan2(x[2].hypot(x[3]));
        Self { alpha, beta, gamma }
    }

    pub fn to_s3(&self) -> [f64; 4] {
        let (sb, cb) = self.beta.sin_cos();
        let (sa, ca) = self.alpha.sin_cos();
        let (sg, cg) = self.gamma.sin_cos();
        [sb * ca, sb * sa, cb * cg, cb * sg]
    }

    /// Shift of `alpha` and `gamma`; an isometry of `S^3`.
    pub fn rotate(&self, d_alpha: f64, d_gamma: f64) -> Self {
        Self {
            alpha: (self.alpha + d_alpha).rem_euclid(TAU),
            beta: self.beta,
            gamma: (self.gamma + d_gamma).rem_euclid(TAU),
        }
    }
}

/// Uniform point of `S^3` expressed in torus coordinates.
///
/// `beta` covers all of `[0, pi]`: with probability one half the equivalent
/// chart `(alpha, pi - beta, gamma + pi)` is reported, so the marginal density
/// of `beta` is proportional to `|sin beta cos beta|` on the full range.
pub fn sample_torus_s3(stream: &mut RandomStream) -> TorusPoint {
    let x = sample_sphere(4, stream);
    let p = TorusPoint::from_s3([x[0], x[1], x[2], x[3]]);
    if stream.random::<bool>() {
        TorusPoint {
            alpha: p.alpha,
            beta: PI - p.beta,
            gamma: (p.gamma + PI).rem_euclid(TAU),
        }
    } else {
        p
    }
}

/// Representative in `R^{2n}` of a Fubini–Study uniform point of `CP^{n-1}`.
///
/// Uniform points of `S^{2n-1}` push forward to the invariant measure under
/// the Hopf map, and the complex line `x ∧ Jx` does not depend on the phase.
pub fn sample_cp_point(n: usize, stream: &mut RandomStream) -> DVector<f64> {
    assert!(n >= 1, "complex dimension must be positive");
    sample_sphere(2 * n, stream)
}

/// Haar-uniform `k`-plane in `R^n`.
pub fn random_frame(n: usize, k: usize, stream: &mut RandomStream) -> OrthoFrame {
    loop {
        let g = gaussian_matrix(n, k, stream);
        if let Ok(frame) = orthonormalize(&g) {
            return frame;
        }
    }
}
