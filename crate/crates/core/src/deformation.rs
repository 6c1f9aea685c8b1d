//! Deformation coefficients and the planes that maximize them.
//!
//! All coefficients are expectations under probability measures: the mean of
//! `|<V, Z>|` over a random plane `Z` drawn from the relevant family. The
//! families are the orbit `g·W` of a reference plane under a compact group,
//! the interleaved wedges `x ∧ I(x) ∧ … ∧ I^{m-1}(x)`, and the complex lines
//! of `CP^n`.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::exterior::{
    complex_interleaved_wedge, interleaved_wedge, kahler_angle, orthonormalize,
    projection_volume_unchecked, trace_identity, b_r_form, ComplexStructure, InterleaveOperator,
    OrthoFrame,
};
use crate::mc::{estimate_mean, pairwise_merge, McEstimate, Moments, BATCH_SIZE};
use crate::sampling::{
    random_frame, sample_cp_point, sample_rotation, sample_sphere, sample_torus_s3,
    sample_unitary, RandomStream,
};

/// Step size at which the ascent stops.
pub const STEP_FLOOR: f64 = 1e-4;
const INITIAL_STEP: f64 = 0.5;
/// Rejected proposals tolerated before the step is halved.
const PATIENCE: usize = 12;
const EVALUATION_CAP: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    /// Complex lines of `CP^{n-1}` moved by `U(n)`, realified in `R^{2n}`.
    CpHyperplanes { n: usize },
    /// `km`-planes in `R^l ⊗ R^m`, `m` blocks of `R^l`, moved by `SO(l)`
    /// acting on every block.
    Grassmann { k: usize, l: usize, m: usize },
    /// `mp`-planes (real) or `2mp`-planes (complex) in `m` interleaved copies
    /// of `R^q` or realified `C^q`.
    Interleaved {
        m: usize,
        p: usize,
        q: usize,
        field: Field,
    },
    /// `2k`-planes in realified `C^{n+1}` against the complex lines of `CP^n`.
    WirtingerCp { n: usize, k: usize },
}

impl FamilyKind {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            FamilyKind::CpHyperplanes { n } => n >= 1,
            FamilyKind::Grassmann { k, l, m } => k >= 1 && k <= l && m >= 1,
            FamilyKind::Interleaved { m, p, q, .. } => m >= 1 && p >= 1 && p <= q,
            FamilyKind::WirtingerCp { n, k } => n >= 1 && k >= 1 && k <= n + 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid family parameters {self:?}")))
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match *self {
            FamilyKind::CpHyperplanes { n } => 2 * n,
            FamilyKind::Grassmann { l, m, .. } => l * m,
            FamilyKind::Interleaved { m, q, field, .. } => match field {
                Field::Real => q * m,
                Field::Complex => 2 * q * m,
            },
            FamilyKind::WirtingerCp { n, .. } => 2 * (n + 1),
        }
    }

    pub fn plane_rank(&self) -> usize {
        match *self {
            FamilyKind::CpHyperplanes { .. } => 2,
            FamilyKind::Grassmann { k, m, .. } => k * m,
            FamilyKind::Interleaved { m, p, field, .. } => match field {
                Field::Real => m * p,
                Field::Complex => 2 * m * p,
            },
            FamilyKind::WirtingerCp { k, .. } => 2 * k,
        }
    }

    /// Coordinates spanning the reference plane.
    fn reference_coordinates(&self) -> Vec<usize> {
        match *self {
            FamilyKind::CpHyperplanes { .. } => vec![0, 1],
            FamilyKind::Grassmann { k, l, m } => block_prefix(l, m, k),
            FamilyKind::Interleaved { m, p, q, field } => match field {
                Field::Real => block_prefix(q, m, p),
                Field::Complex => block_prefix(2 * q, m, 2 * p),
            },
            FamilyKind::WirtingerCp { k, .. } => (0..2 * k).collect(),
        }
    }
}

fn block_prefix(block: usize, copies: usize, prefix: usize) -> Vec<usize> {
    (0..copies)
        .flat_map(|i| (0..prefix).map(move |a| i * block + a))
        .collect()
}

/// A family of planes together with the reference plane `W` of its orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub reference_plane: OrthoFrame,
}

impl FamilySpec {
    /// The family with its coordinate reference plane.
    pub fn new(kind: FamilyKind) -> Result<Self> {
        kind.validate()?;
        let reference_plane =
            OrthoFrame::coordinate(kind.ambient_dim(), &kind.reference_coordinates());
        Ok(Self {
            kind,
            reference_plane,
        })
    }

    pub fn with_reference(kind: FamilyKind, reference_plane: OrthoFrame) -> Result<Self> {
        kind.validate()?;
        check_plane(&reference_plane, kind.ambient_dim(), kind.plane_rank())?;
        Ok(Self {
            kind,
            reference_plane,
        })
    }
}

fn check_plane(v: &OrthoFrame, ambient: usize, rank: usize) -> Result<()> {
    if v.ambient_dim() != ambient || v.rank() != rank {
        return Err(mismatch(format!(
            "expected a rank {rank} plane in R^{ambient}, got rank {} in R^{}",
            v.rank(),
            v.ambient_dim()
        )));
    }
    Ok(())
}

fn check_samples(samples: usize, minimum: usize) -> Result<()> {
    if samples < minimum {
        return Err(Error::InvalidInput(format!(
            "need at least {minimum} samples, got {samples}"
        )));
    }
    Ok(())
}

/// `E|(a₁² + b₁²) cos τ + (a₂b₁ − a₁b₂) sin τ|` over uniform `S^3`, the
/// coefficient of a 2-plane of Kähler angle `τ` in `CP^2`-type families.
pub fn cd_cp_tau(tau: f64, samples: usize, stream: &RandomStream) -> Result<McEstimate> {
    if !(0.0..=FRAC_PI_2).contains(&tau) {
        return Err(Error::InvalidInput(format!("tau {tau} outside [0, pi/2]")));
    }
    check_samples(samples, 1000)?;
    let (st, ct) = tau.sin_cos();
    Ok(estimate_mean(samples, stream, |s| {
        let x = sample_torus_s3(s).to_s3();
        let (a1, a2, b1, b2) = (x[0], x[1], x[2], x[3]);
        ((a1 * a1 + b1 * b1) * ct + (a2 * b1 - a1 * b2) * st).abs()
    }))
}

/// `points` equally spaced values `kπ / (2(points − 1))` covering `[0, π/2]`.
pub fn tau_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|k| FRAC_PI_2 * k as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// How the probe plane `Z` is drawn.
#[derive(Debug, Clone)]
enum Probe {
    /// `g · W` with `g` Haar on `SO(l)` (or `U(q)`) applied to every block.
    Blockwise {
        reference: DMatrix<f64>,
        op: InterleaveOperator,
        complex: bool,
    },
    /// `g · W` with `g` Haar on `U(n)`.
    Unitary { reference: DMatrix<f64>, n: usize },
    /// `x ∧ I(x) ∧ …` for `x` uniform on `S^{q-1}`, or the interleaved
    /// complex lines for `x` uniform in `CP^{q-1}`.
    Interleaved { op: InterleaveOperator, complex: bool },
    /// `x ∧ Jx` for `x` uniform in `CP^n`.
    ComplexLine { n: usize },
}

impl Probe {
    fn orbit(spec: &FamilySpec) -> Self {
        let reference = spec.reference_plane.columns().clone();
        match spec.kind {
            FamilyKind::CpHyperplanes { n } => Probe::Unitary { reference, n },
            FamilyKind::WirtingerCp { n, .. } => Probe::Unitary { reference, n: n + 1 },
            FamilyKind::Grassmann { l, m, .. } => Probe::Blockwise {
                reference,
                op: InterleaveOperator::new(l, m).expect("validated family"),
                complex: false,
            },
            FamilyKind::Interleaved { m, q, field, .. } => {
                let complex = field == Field::Complex;
                let block = if complex { 2 * q } else { q };
                Probe::Blockwise {
                    reference,
                    op: InterleaveOperator::new(block, m).expect("validated family"),
                    complex,
                }
            }
        }
    }

    fn draw(&self, s: &mut RandomStream) -> DMatrix<f64> {
        match self {
            Probe::Blockwise {
                reference,
                op,
                complex,
            } => {
                let g = if *complex {
                    sample_unitary(op.block_dim() / 2, s)
                } else {
                    sample_rotation(op.block_dim(), s)
                };
                op.blockwise(&g) * reference
            }
            Probe::Unitary { reference, n } => sample_unitary(*n, s) * reference,
            Probe::Interleaved { op, complex } => {
                let x = sample_sphere(op.block_dim(), s);
                let frame = if *complex {
                    complex_interleaved_wedge(&x, op)
                } else {
                    interleaved_wedge(&x, op)
                };
                frame.expect("unit probe vector").columns().clone()
            }
            Probe::ComplexLine { n } => {
                let x = sample_cp_point(n + 1, s);
                let jx = ComplexStructure::standard(n + 1).apply(&x);
                DMatrix::from_columns(&[x, jx])
            }
        }
    }

    fn estimate(&self, v: &OrthoFrame, samples: usize, stream: &RandomStream) -> McEstimate {
        let cols = v.columns();
        estimate_mean(samples, stream, |s| {
            projection_volume_unchecked(cols, &self.draw(s))
        })
    }
}

/// `E_g |<V, g·W>|` over the symmetry group of the family.
pub fn cd_generic(
    v: &OrthoFrame,
    spec: &FamilySpec,
    samples: usize,
    stream: &RandomStream,
) -> Result<McEstimate> {
    check_plane(v, spec.kind.ambient_dim(), spec.reference_plane.rank())?;
    check_samples(samples, 1)?;
    Ok(Probe::orbit(spec).estimate(v, samples, stream))
}

fn interleaved_probe(v: &OrthoFrame, m: usize, q: usize, complex: bool) -> Result<Probe> {
    if m == 0 || q == 0 {
        return Err(Error::InvalidInput("m and q must be positive".into()));
    }
    let block = if complex { 2 * q } else { q };
    let unit = if complex { 2 * m } else { m };
    if v.ambient_dim() != block * m || v.rank() % unit != 0 || v.rank() < unit {
        return Err(mismatch(format!(
            "plane of rank {} in R^{} for m = {m}, q = {q}",
            v.rank(),
            v.ambient_dim()
        )));
    }
    Ok(Probe::Interleaved {
        op: InterleaveOperator::new(block, m)?,
        complex,
    })
}

/// `M(V) = E_x vol(proj_V(x ∧ I(x) ∧ … ∧ I^{m-1}(x)))`, `x` uniform on
/// `S^{q-1}`, for `V` of rank `mp` in `(R^q)^m`.
pub fn m_objective(
    v: &OrthoFrame,
    m: usize,
    q: usize,
    samples: usize,
    stream: &RandomStream,
) -> Result<McEstimate> {
    check_samples(samples, 1)?;
    Ok(interleaved_probe(v, m, q, false)?.estimate(v, samples, stream))
}

/// The complex analogue of [`m_objective`]: `x` uniform in `CP^{q-1}` and
/// the wedge runs over the interleaved complex lines `I^r(x ∧ Jx)`.
pub fn m_objective_complex(
    v: &OrthoFrame,
    m: usize,
    q: usize,
    samples: usize,
    stream: &RandomStream,
) -> Result<McEstimate> {
    check_samples(samples, 1)?;
    Ok(interleaved_probe(v, m, q, true)?.estimate(v, samples, stream))
}

/// `E_x vol(proj_V(x ∧ Jx))` over the complex lines of `CP^n`, for an
/// even-rank `V` in realified `C^{n+1}`.
pub fn wirtinger_objective(v: &OrthoFrame, samples: usize, stream: &RandomStream) -> Result<McEstimate> {
    check_samples(samples, 1)?;
    if v.ambient_dim() % 2 != 0 || v.ambient_dim() < 4 || v.rank() % 2 != 0 || v.rank() == 0 {
        return Err(mismatch(format!(
            "need an even-rank plane in realified C^(n+1), got rank {} in R^{}",
            v.rank(),
            v.ambient_dim()
        )));
    }
    let n = v.ambient_dim() / 2 - 1;
    Ok(Probe::ComplexLine { n }.estimate(v, samples, stream))
}

/// The two upper bounds on `M(V)`, estimated on common samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundChain {
    pub value: McEstimate,
    /// `E Π_r |proj_V I^r(x)|`.
    pub hadamard: McEstimate,
    /// `m^{-m/2} E (Σ_r B_r(x, x))^{m/2}`.
    pub mean_bound: McEstimate,
}

pub fn bound_chain(
    v: &OrthoFrame,
    m: usize,
    q: usize,
    samples: usize,
    stream: &RandomStream,
) -> Result<BoundChain> {
    check_samples(samples, 1)?;
    let Probe::Interleaved { op, .. } = interleaved_probe(v, m, q, false)? else {
        unreachable!("real interleaved probe")
    };
    let cols = v.columns();
    let parts = crate::mc::run_batches(samples, stream, |s, len| {
        let mut acc = [Moments::default(); 3];
        for _ in 0..len {
            let x = sample_sphere(q, s);
            let z = interleaved_wedge(&x, &op).expect("unit probe vector");
            let zc = z.columns();
            acc[0].push(projection_volume_unchecked(cols, zc));
            let lengths: Vec<f64> = (0..m).map(|r| cols.tr_mul(&zc.column(r)).norm()).collect();
            acc[1].push(lengths.iter().product());
            let sum_sq: f64 = lengths.iter().map(|l| l * l).sum();
            acc[2].push((sum_sq / m as f64).powf(m as f64 / 2.0));
        }
        acc
    });
    let total = pairwise_merge(&parts, &|a: &[Moments; 3], b: &[Moments; 3]| {
        [a[0].merge(&b[0]), a[1].merge(&b[1]), a[2].merge(&b[2])]
    })
    .unwrap_or_default();
    let seed = stream.seed();
    Ok(BoundChain {
        value: total[0].estimate(seed),
        hadamard: total[1].estimate(seed),
        mean_bound: total[2].estimate(seed),
    })
}

/// `F(η) = m^{-m/2} E_x (Σ_j η_j x_j²)^{m/2}` over uniform `x ∈ S^{q-1}`,
/// by deterministic midpoint quadrature for `q ∈ {2, 3}`.
pub fn surrogate_f(eta: &[f64], m: usize, resolution: usize) -> Result<f64> {
    if eta.iter().any(|&e| e < 0.0) || m == 0 || resolution == 0 {
        return Err(Error::InvalidInput("need eta >= 0, m >= 1, resolution >= 1".into()));
    }
    let power = m as f64 / 2.0;
    let nodes: Vec<(f64, f64)> = (0..resolution)
        .map(|i| (TAU * (i as f64 + 0.5) / resolution as f64).sin_cos())
        .collect();
    let mean = match eta.len() {
        2 => {
            nodes
                .iter()
                .map(|(s, c)| (eta[0] * c * c + eta[1] * s * s).powf(power))
                .sum::<f64>()
                / resolution as f64
        }
        3 => {
            // Archimedes: the height on S² is uniform on [-1, 1].
            let mut total = 0.0;
            for i in 0..resolution {
                let t = -1.0 + 2.0 * (i as f64 + 0.5) / resolution as f64;
                let r2 = 1.0 - t * t;
                for (s, c) in &nodes {
                    let quad = r2 * (eta[0] * c * c + eta[1] * s * s) + eta[2] * t * t;
                    total += quad.powf(power);
                }
            }
            total / (resolution * resolution) as f64
        }
        q => {
            return Err(Error::InvalidInput(format!(
                "surrogate quadrature supports q = 2 or 3, got {q}"
            )))
        }
    };
    Ok(mean * (m as f64).powf(-power))
}

/// Residuals of the product-form test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductTest {
    pub pass: bool,
    /// `max_r` max-entry `|B_r − B_0|`.
    pub spread: f64,
    /// Largest distance of an eigenvalue of `B_0` to `{0, 1}`.
    pub spectrum: f64,
}

/// Whether `V = V₁ ⊕ I(V₁) ⊕ … ⊕ I^{m-1}(V₁)` to within `tol`.
pub fn structure_test_product(v: &OrthoFrame, m: usize, q: usize, tol: f64) -> Result<ProductTest> {
    let op = InterleaveOperator::new(q, m)?;
    if v.ambient_dim() != op.ambient_dim() || v.rank() % m != 0 {
        return Err(mismatch(format!(
            "plane of rank {} in R^{} for m = {m}, q = {q}",
            v.rank(),
            v.ambient_dim()
        )));
    }
    let b0 = b_r_form(v, 0, &op)?;
    let mut spread: f64 = 0.0;
    for r in 1..m {
        let br = b_r_form(v, r, &op)?;
        spread = spread.max((br.matrix() - b0.matrix()).amax());
    }
    let spectrum = b0
        .eigenvalues()
        .iter()
        .map(|&e| e.abs().min((e - 1.0).abs()))
        .fold(0.0, f64::max);
    Ok(ProductTest {
        pass: spread <= tol && spectrum <= tol,
        spread,
        spectrum,
    })
}

/// Residual `|(1 − P_V) I′ V|` of invariance under the twisted structure
/// `I′(a, b) = (−b, a)` on `R^q ⊕ R^q`.
pub fn i_prime_residual(v: &OrthoFrame, q: usize) -> Result<f64> {
    ComplexStructure::twisted_interleave(q).invariance_residual(v)
}

/// `span(u, I′u)`, a 2-plane invariant under the twisted structure.
pub fn tasaki_plane(q: usize, u: &DVector<f64>) -> Result<OrthoFrame> {
    let j = ComplexStructure::twisted_interleave(q);
    if u.len() != 2 * q {
        return Err(mismatch(format!("vector in R^{} for q = {q}", u.len())));
    }
    let norm = u.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnit(norm));
    }
    let ju = j.apply(u);
    if u.dot(&ju).abs() >= 1.0 - 1e-9 {
        return Err(Error::DegenerateVector("u is isotropic for I′".into()));
    }
    orthonormalize(&DMatrix::from_columns(&[u.clone(), ju]))
}

/// [`tasaki_plane`] through a uniformly random `u`.
pub fn random_tasaki_plane(q: usize, stream: &mut RandomStream) -> Result<OrthoFrame> {
    tasaki_plane(q, &sample_sphere(2 * q, stream))
}

/// Structure tolerance for planes found with `samples` per evaluation.
pub fn default_tolerance(samples: usize) -> f64 {
    if samples >= 1_000_000 {
        0.01
    } else {
        0.05
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureDiagnosis {
    pub tolerance: f64,
    pub product: Option<ProductTest>,
    /// `Some` only for two real interleaved copies.
    pub i_prime_residual: Option<f64>,
    pub i_prime_complex: bool,
    /// Invariance residual under the standard complex structure.
    pub complex_residual: Option<f64>,
    pub kahler_angle: Option<f64>,
    /// The plane belongs to a known maximizer family for this kind.
    pub accepted: bool,
}

impl StructureDiagnosis {
    pub fn product_form(&self) -> bool {
        self.product.is_some_and(|p| p.pass)
    }
}

/// Runs the structure tests relevant for the family kind.
pub fn diagnose(v: &OrthoFrame, kind: &FamilyKind, tol: f64) -> Result<StructureDiagnosis> {
    check_plane(v, kind.ambient_dim(), kind.plane_rank())?;
    let mut d = StructureDiagnosis {
        tolerance: tol,
        product: None,
        i_prime_residual: None,
        i_prime_complex: false,
        complex_residual: None,
        kahler_angle: None,
        accepted: false,
    };
    let standard = |n: usize| ComplexStructure::standard(n);
    match *kind {
        FamilyKind::Interleaved { m, q, field, .. } => {
            let block = if field == Field::Complex { 2 * q } else { q };
            d.product = Some(structure_test_product(v, m, block, tol)?);
            if field == Field::Complex {
                d.complex_residual = Some(standard(q * m).invariance_residual(v)?);
                d.accepted = d.product_form() && d.complex_residual.unwrap() <= tol;
            } else if m == 2 {
                let r = i_prime_residual(v, q)?;
                d.i_prime_residual = Some(r);
                d.i_prime_complex = r <= tol;
                d.accepted = d.product_form() || d.i_prime_complex;
            } else {
                d.accepted = d.product_form();
            }
        }
        FamilyKind::Grassmann { l, m, .. } => {
            d.product = Some(structure_test_product(v, m, l, tol)?);
            d.accepted = d.product_form();
        }
        FamilyKind::CpHyperplanes { .. } | FamilyKind::WirtingerCp { .. } => {
            let j = standard(kind.ambient_dim() / 2);
            let r = j.invariance_residual(v)?;
            d.complex_residual = Some(r);
            if v.rank() == 2 {
                let tau = kahler_angle(v, &j)?.tau;
                d.kahler_angle = Some(tau);
                d.accepted = tau <= tol;
            } else {
                d.accepted = r <= tol;
            }
        }
    }
    Ok(d)
}

/// Pre-drawn probe planes shared by every evaluation in one line search.
#[derive(Debug, Clone)]
pub struct ProbeSet {
    probes: Vec<DMatrix<f64>>,
    seed: u64,
}

impl ProbeSet {
    fn draw(probe: &Probe, samples: usize, stream: &RandomStream) -> Self {
        let batches = crate::mc::run_batches(samples, stream, |s, len| {
            (0..len).map(|_| probe.draw(s)).collect::<Vec<_>>()
        });
        Self {
            probes: batches.into_iter().flatten().collect(),
            seed: stream.seed(),
        }
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    fn evaluate(&self, v: &DMatrix<f64>) -> McEstimate {
        let parts: Vec<Moments> = self
            .probes
            .par_chunks(BATCH_SIZE)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|z| projection_volume_unchecked(v, z))
                    .collect()
            })
            .collect();
        pairwise_merge(&parts, &|a: &Moments, b: &Moments| a.merge(b))
            .unwrap_or_default()
            .estimate(self.seed)
    }
}

/// The objective the scan maximizes for a family kind.
fn scan_probe(spec: &FamilySpec) -> Probe {
    match spec.kind {
        FamilyKind::Interleaved { m, q, field, .. } => {
            let complex = field == Field::Complex;
            Probe::Interleaved {
                op: InterleaveOperator::new(if complex { 2 * q } else { q }, m)
                    .expect("validated family"),
                complex,
            }
        }
        FamilyKind::WirtingerCp { n, .. } => Probe::ComplexLine { n },
        FamilyKind::CpHyperplanes { .. } | FamilyKind::Grassmann { .. } => Probe::orbit(spec),
    }
}

/// The objective [`maximizer_scan`] uses for `spec`, estimated at `v`.
pub fn scan_objective(
    v: &OrthoFrame,
    spec: &FamilySpec,
    samples: usize,
    stream: &RandomStream,
) -> Result<McEstimate> {
    check_plane(v, spec.kind.ambient_dim(), spec.kind.plane_rank())?;
    check_samples(samples, 1)?;
    Ok(scan_probe(spec).estimate(v, samples, stream))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub plane: OrthoFrame,
    /// Value on the restart's own probe set.
    pub value: McEstimate,
    pub evaluations: usize,
    pub final_step: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub best_plane: OrthoFrame,
    /// Best value on the shared re-evaluation set.
    pub best_value: McEstimate,
    /// Every restart's final plane on the shared re-evaluation set.
    pub restart_values: Vec<McEstimate>,
    pub restarts: Vec<RestartOutcome>,
    pub structure: StructureDiagnosis,
    /// `max |Σ_r tr B_r − rank|` over accepted iterates, interleaved kinds only.
    pub trace_residual: Option<f64>,
}

impl ScanResult {
    /// Every restart reached the step floor within the evaluation cap.
    pub fn converged(&self) -> bool {
        self.restarts.iter().all(|r| r.converged)
    }
}

/// Rotates `V` in the plane of a unit `u ∈ V` and a unit `w ⊥ V` by `angle`.
fn rotate_plane(v: &DMatrix<f64>, u: &DVector<f64>, w: &DVector<f64>, angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    let coeffs = v.tr_mul(u);
    let delta = u * (c - 1.0) + w * s;
    v + delta * coeffs.transpose()
}

fn random_move(v: &DMatrix<f64>, s: &mut RandomStream) -> Option<(DVector<f64>, DVector<f64>)> {
    let u = v * sample_sphere(v.ncols(), s);
    let g = DVector::from_fn(v.nrows(), |_, _| s.normal());
    let mut w = &g - v * v.tr_mul(&g);
    w -= v * v.tr_mul(&w);
    let norm = w.norm();
    (norm > 1e-8).then(|| (u, w / norm))
}

fn ascend(
    probes: &ProbeSet,
    start: OrthoFrame,
    interleave: Option<&InterleaveOperator>,
    s: &mut RandomStream,
) -> Result<(RestartOutcome, f64)> {
    let rank = start.rank() as f64;
    let trace_check = |v: &OrthoFrame| -> Result<f64> {
        match interleave {
            Some(op) => Ok((trace_identity(v, op)? - rank).abs()),
            None => Ok(0.0),
        }
    };
    let mut plane = start;
    let mut value = probes.evaluate(plane.columns());
    let mut trace_residual = trace_check(&plane)?;
    let mut step = INITIAL_STEP;
    let mut failures = 0;
    let mut evaluations = 1;
    while step >= STEP_FLOOR && evaluations < EVALUATION_CAP {
        let Some((u, w)) = random_move(plane.columns(), s) else {
            continue;
        };
        let mut improved = false;
        for angle in [step, -step] {
            let candidate = rotate_plane(plane.columns(), &u, &w, angle);
            let candidate = orthonormalize(&candidate)?;
            let cv = probes.evaluate(candidate.columns());
            evaluations += 1;
            if cv.mean > value.mean {
                trace_residual = trace_residual.max(trace_check(&candidate)?);
                plane = candidate;
                value = cv;
                improved = true;
                break;
            }
        }
        if improved {
            failures = 0;
        } else {
            failures += 1;
            if failures >= PATIENCE {
                step /= 2.0;
                failures = 0;
            }
        }
    }
    Ok((
        RestartOutcome {
            plane,
            value,
            evaluations,
            final_step: step,
            converged: step < STEP_FLOOR,
        },
        trace_residual,
    ))
}

/// Random-restart stochastic ascent over planes of the family's rank.
///
/// Each restart draws its own probe set once and compares every proposal on
/// it. Proposals rotate the current plane by `±step` in the plane of a random
/// unit vector of `V` and a random unit vector of `V^⊥`; after
/// a run of rejected proposals the step is halved, down to [`STEP_FLOOR`].
/// Final planes are re-evaluated on one fresh common probe set.
pub fn maximizer_scan(
    spec: &FamilySpec,
    restarts: usize,
    samples_per_eval: usize,
    stream: &RandomStream,
) -> Result<ScanResult> {
    if restarts == 0 {
        return Err(Error::InvalidInput("need at least one restart".into()));
    }
    check_samples(samples_per_eval, 1000)?;
    let kind = spec.kind;
    let probe = scan_probe(spec);
    let interleave = match kind {
        FamilyKind::Interleaved { m, q, field, .. } => Some(InterleaveOperator::new(
            if field == Field::Complex { 2 * q } else { q },
            m,
        )?),
        FamilyKind::Grassmann { l, m, .. } => Some(InterleaveOperator::new(l, m)?),
        _ => None,
    };

    let outcomes = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let restart = stream.split(r as u64);
            let probes = ProbeSet::draw(&probe, samples_per_eval, &restart.split(0));
            let mut moves = restart.split(1);
            let start = random_frame(kind.ambient_dim(), kind.plane_rank(), &mut moves);
            ascend(&probes, start, interleave.as_ref(), &mut moves)
        })
        .collect::<Result<Vec<_>>>()?;

    let common = ProbeSet::draw(&probe, samples_per_eval, &stream.split(restarts as u64));
    let restart_values: Vec<McEstimate> = outcomes
        .iter()
        .map(|(o, _)| common.evaluate(o.plane.columns()))
        .collect();
    let best = (0..restarts)
        .max_by(|&a, &b| restart_values[a].mean.total_cmp(&restart_values[b].mean))
        .expect("at least one restart");
    let trace_residual = interleave
        .as_ref()
        .map(|_| outcomes.iter().map(|(_, t)| *t).fold(0.0, f64::max));
    let restarts: Vec<RestartOutcome> = outcomes.into_iter().map(|(o, _)| o).collect();
    let best_plane = restarts[best].plane.clone();
    let structure = diagnose(&best_plane, &kind, default_tolerance(samples_per_eval))?;
    Ok(ScanResult {
        best_plane,
        best_value: restart_values[best],
        restart_values,
        restarts,
        structure,
        trace_residual,
    })
}
