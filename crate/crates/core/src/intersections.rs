//! Exact intersection machinery.
//!
//! Transversality of sub-Grassmannians, line–curve intersection counts in
//! `CP^2`, the equidistribution experiment for those counts, and the scalar
//! circle meeting `SU(n)` inside `U(n)`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::exterior::gram_volume;
use crate::mc::{pairwise_merge, run_batches};
use crate::sampling::{complexify, sample_cp_point, RandomStream};

/// Relative singular-value threshold for numerical rank.
pub const RANK_RELATIVE: f64 = 1e-9;
/// `degeneracy_volume` at or below this value counts as non-transversal.
pub const DEGENERACY_THRESHOLD: f64 = 1e-9;
/// Chordal radius on `CP^1` within which roots are the same point. A root of
/// multiplicity `m` splits by about `eps^(1/m)` under rounding, so this is
/// sized for up to triple roots.
pub const ROOT_CLUSTER_RADIUS: f64 = 1e-5;
/// Leading coefficients below this (after max-modulus scaling) are roots at
/// the chart's infinity.
pub const LEADING_COEFF_FLOOR: f64 = 1e-8;

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let largest = sv.max();
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_RELATIVE * largest).count()
}

/// Linear subspace given by spanning columns of full numerical rank.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSubspace {
    span: DMatrix<f64>,
}

impl LinearSubspace {
    pub fn new(span: DMatrix<f64>) -> Result<Self> {
        let rank = numerical_rank(&span);
        if rank != span.ncols() {
            let sv = span.clone().svd(false, false).singular_values;
            return Err(Error::RankDeficient { smallest: sv.min() });
        }
        Ok(Self { span })
    }

    /// Span of standard basis vectors `e_i`, `i ∈ range`.
    pub fn coordinate(n: usize, range: std::ops::Range<usize>) -> Self {
        let mut span = DMatrix::zeros(n, range.len());
        for (j, i) in range.enumerate() {
            span[(i, j)] = 1.0;
        }
        Self { span }
    }

    pub fn span_matrix(&self) -> &DMatrix<f64> {
        &self.span
    }

    pub fn ambient_dim(&self) -> usize {
        self.span.nrows()
    }

    pub fn rank(&self) -> usize {
        self.span.ncols()
    }
}

/// `dim(A ∩ B) = dim A + dim B - rank[A | B]`.
pub fn intersection_dim(a: &LinearSubspace, b: &LinearSubspace) -> Result<usize> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(mismatch(format!(
            "subspaces of R^{} and R^{}",
            a.ambient_dim(),
            b.ambient_dim()
        )));
    }
    let mut joined = DMatrix::zeros(a.ambient_dim(), a.rank() + b.rank());
    joined.columns_mut(0, a.rank()).copy_from(&a.span);
    joined.columns_mut(a.rank(), b.rank()).copy_from(&b.span);
    Ok(a.rank() + b.rank() - numerical_rank(&joined))
}

fn check_rotation(y: &DMatrix<f64>, k: usize, l: usize) -> Result<()> {
    let n = y.nrows();
    if y.ncols() != n || k == 0 || k > l || l > n {
        return Err(mismatch(format!(
            "rotation {}x{} with k={k}, l={l}",
            y.nrows(),
            y.ncols()
        )));
    }
    let err = (y.tr_mul(y) - DMatrix::identity(n, n)).amax();
    if err > 1e-9 {
        return Err(Error::InvalidInput(format!("matrix is not orthogonal ({err:.2e})")));
    }
    Ok(())
}

/// `y · R^k`, the image of the first `k` coordinate axes.
pub fn rotated_factor(y: &DMatrix<f64>, k: usize) -> LinearSubspace {
    LinearSubspace {
        span: y.columns(0, k).into_owned(),
    }
}

/// `R^{l-k}`, spanned by `e_{k+1}, …, e_l`.
pub fn fixed_factor(n: usize, k: usize, l: usize) -> LinearSubspace {
    LinearSubspace::coordinate(n, k..l)
}

/// `vol(y·v^k ∧ v^{l-k})`: Gram volume of `[y e_1 … y e_k | e_{k+1} … e_l]`.
pub fn degeneracy_volume(y: &DMatrix<f64>, k: usize, l: usize) -> Result<f64> {
    check_rotation(y, k, l)?;
    let n = y.nrows();
    let mut g = DMatrix::zeros(n, l);
    g.columns_mut(0, k).copy_from(&y.columns(0, k));
    for j in k..l {
        g[(j, j)] = 1.0;
    }
    Ok(gram_volume(&g))
}

/// Outcome of intersecting `y · G_{l-k}` with the fixed `G_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum Meet {
    /// The single intersection point: the `l`-plane spanned by both factors.
    OnePoint(LinearSubspace),
    Degenerate { volume: f64 },
}

pub fn grassmann_meet(y: &DMatrix<f64>, k: usize, l: usize, m: usize) -> Result<Meet> {
    if y.nrows() != l + m {
        return Err(mismatch(format!("rotation of R^{} for l+m = {}", y.nrows(), l + m)));
    }
    let volume = degeneracy_volume(y, k, l)?;
    if volume <= DEGENERACY_THRESHOLD {
        return Ok(Meet::Degenerate { volume });
    }
    let n = l + m;
    let mut span = DMatrix::zeros(n, l);
    span.columns_mut(0, k).copy_from(&y.columns(0, k));
    for j in k..l {
        span[(j, j)] = 1.0;
    }
    Ok(Meet::OnePoint(LinearSubspace::new(span)?))
}

/// The rotation exchanging `e_1` and `e_{k+1}`, with a sign flip on the last
/// axis to land in `SO(n)`. Requires `k + 2 <= n`.
pub fn swap_rotation(n: usize, k: usize) -> DMatrix<f64> {
    assert!(k + 2 <= n, "swap rotation needs an unused axis");
    let mut y = DMatrix::identity(n, n);
    y[(0, 0)] = 0.0;
    y[(k, k)] = 0.0;
    y[(0, k)] = 1.0;
    y[(k, 0)] = 1.0;
    y[(n - 1, n - 1)] = -1.0;
    y
}

/// Degree-`d` homogeneous polynomial in `x, y, z` with complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousCurve {
    degree: u32,
    coefficients: BTreeMap<[u32; 3], Complex64>,
}

impl HomogeneousCurve {
    pub fn new(
        degree: u32,
        terms: impl IntoIterator<Item = ([u32; 3], Complex64)>,
    ) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidInput("curve degree must be at least 1".into()));
        }
        let mut coefficients = BTreeMap::new();
        for (exps, c) in terms {
            if exps.iter().sum::<u32>() != degree {
                return Err(Error::InvalidInput(format!(
                    "monomial {exps:?} does not have degree {degree}"
                )));
            }
            *coefficients.entry(exps).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        coefficients.retain(|_, c| c.norm() != 0.0);
        if coefficients.is_empty() {
            return Err(Error::InvalidInput("curve has no nonzero coefficient".into()));
        }
        Ok(Self {
            degree,
            coefficients,
        })
    }

    /// `x^d + y^d + z^d`, smooth for every `d >= 1`.
    pub fn fermat(degree: u32) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self::new(
            degree,
            [[degree, 0, 0], [0, degree, 0], [0, 0, degree]].map(|e| (e, one)),
        )
        .expect("valid Fermat curve")
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coefficients(&self) -> &BTreeMap<[u32; 3], Complex64> {
        &self.coefficients
    }

    pub fn eval(&self, p: &[Complex64; 3]) -> Complex64 {
        self.coefficients
            .iter()
            .map(|(e, c)| c * p[0].powu(e[0]) * p[1].powu(e[1]) * p[2].powu(e[2]))
            .sum()
    }

    pub fn gradient(&self, p: &[Complex64; 3]) -> [Complex64; 3] {
        let mut g = [Complex64::new(0.0, 0.0); 3];
        for (e, c) in &self.coefficients {
            for (i, gi) in g.iter_mut().enumerate() {
                if e[i] == 0 {
                    continue;
                }
                let mut term = c * e[i] as f64;
                for (j, pj) in p.iter().enumerate() {
                    let power = if i == j { e[j] - 1 } else { e[j] };
                    term *= pj.powu(power);
                }
                *gi += term;
            }
        }
        g
    }

    /// Coefficients `c_j` of the binary form `f(sP + tQ) = Σ c_j s^{d-j} t^j`.
    pub fn restrict(&self, p: &[Complex64; 3], q: &[Complex64; 3]) -> Vec<Complex64> {
        let d = self.degree as usize;
        let mut out = vec![Complex64::new(0.0, 0.0); d + 1];
        for (e, c) in &self.coefficients {
            let mut poly = vec![*c];
            for var in 0..3 {
                for _ in 0..e[var] {
                    let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
                    for (j, a) in poly.iter().enumerate() {
                        next[j] += a * p[var];
                        next[j + 1] += a * q[var];
                    }
                    poly = next;
                }
            }
            for (o, a) in out.iter_mut().zip(poly) {
                *o += a;
            }
        }
        out
    }

    /// Parses the `CURVE d` / `a b c re im` text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            message: "empty curve file".into(),
        })?;
        let mut head = header.split_whitespace();
        let degree = match (head.next(), head.next(), head.next()) {
            (Some("CURVE"), Some(d), None) => d.parse::<u32>().map_err(|e| Error::Parse {
                line: hline,
                message: format!("bad degree: {e}"),
            })?,
            _ => {
                return Err(Error::Parse {
                    line: hline,
                    message: "expected header `CURVE d`".into(),
                })
            }
        };
        let mut terms = Vec::new();
        for (line, body) in lines {
            let fields: Vec<&str> = body.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected `a b c re im`, got {} fields", fields.len()),
                });
            }
            let bad = |m: String| Error::Parse { line, message: m };
            let mut exps = [0u32; 3];
            for i in 0..3 {
                exps[i] = fields[i].parse().map_err(|e| bad(format!("bad exponent: {e}")))?;
            }
            let re: f64 = fields[3].parse().map_err(|e| bad(format!("bad real part: {e}")))?;
            let im: f64 = fields[4].parse().map_err(|e| bad(format!("bad imaginary part: {e}")))?;
            terms.push((exps, Complex64::new(re, im)));
        }
        Self::new(degree, terms)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("CURVE {}\n", self.degree);
        for (e, c) in &self.coefficients {
            let _ = writeln!(out, "{} {} {} {:e} {:e}", e[0], e[1], e[2], c.re, c.im);
        }
        out
    }
}

/// Roots of `Σ a_i z^{n-i}` (highest degree first, `a_0 != 0`) as companion
/// matrix eigenvalues.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[0];
    if n == 1 {
        return vec![-coeffs[1] / lead];
    }
    let mut companion = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        companion[(i, n - 1)] = -coeffs[n - i] / lead;
    }
    let schur = companion.clone().schur();
    let (_, t) = schur.unpack();
    (0..n).map(|i| t[(i, i)]).collect()
}

/// Unit representative in `C^2` of a point of `CP^1`.
fn sphere_point(s: Complex64, t: Complex64) -> [Complex64; 2] {
    let norm = (s.norm_sqr() + t.norm_sqr()).sqrt();
    [s / norm, t / norm]
}

/// Chordal (Fubini–Study sine) distance between points of `CP^1`.
fn chordal(a: &[Complex64; 2], b: &[Complex64; 2]) -> f64 {
    (a[0] * b[1] - a[1] * b[0]).norm()
}

/// Counts of a line meeting a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineCount {
    pub with_multiplicity: u32,
    pub distinct: u32,
}

fn cross(p: &[Complex64; 3], q: &[Complex64; 3]) -> [Complex64; 3] {
    [
        p[1] * q[2] - p[2] * q[1],
        p[2] * q[0] - p[0] * q[2],
        p[0] * q[1] - p[1] * q[0],
    ]
}

fn norm3(p: &[Complex64; 3]) -> f64 {
    p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Points of the curve on the line through `P` and `Q`.
///
/// The curve restricts to a binary form of degree `d` on the line. Its roots
/// are found in whichever affine chart has the larger leading coefficient;
/// leading coefficients below [`LEADING_COEFF_FLOOR`] are roots at that chart's
/// infinity. Distinct points are clusters of roots within
/// [`ROOT_CLUSTER_RADIUS`] in chordal distance.
pub fn line_curve_count(
    curve: &HomogeneousCurve,
    p: &[Complex64; 3],
    q: &[Complex64; 3],
) -> Result<LineCount> {
    let (np, nq) = (norm3(p), norm3(q));
    if np == 0.0 || nq == 0.0 || norm3(&cross(p, q)) <= 1e-12 * np * nq {
        return Err(Error::DegenerateLine);
    }
    let d = curve.degree as usize;
    let mut c = curve.restrict(p, q);
    let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let coeff_scale = curve
        .coefficients
        .values()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if scale <= 1e-12 * coeff_scale * (np + nq).powi(d as i32) {
        return Err(Error::IdenticallyZero);
    }
    for z in &mut c {
        *z /= scale;
    }

    // Chart s = 1 puts t = w and the polynomial Σ c_j w^j with leading c_d;
    // chart t = 1 puts s = z and Σ c_j z^{d-j} with leading c_0.
    let use_w = c[d].norm() >= c[0].norm();
    let high_first: Vec<Complex64> = if use_w {
        c.iter().rev().cloned().collect()
    } else {
        c.clone()
    };
    let at_infinity = high_first
        .iter()
        .take_while(|z| z.norm() < LEADING_COEFF_FLOOR)
        .count();
    let finite = polynomial_roots(&high_first[at_infinity..]);

    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut points: Vec<[Complex64; 2]> = finite
        .iter()
        .map(|&r| if use_w { sphere_point(one, r) } else { sphere_point(r, one) })
        .collect();
    let infinity = if use_w { [zero, one] } else { [one, zero] };
    points.extend(std::iter::repeat(infinity).take(at_infinity));

    Ok(LineCount {
        with_multiplicity: points.len() as u32,
        distinct: count_clusters(&points, ROOT_CLUSTER_RADIUS) as u32,
    })
}

fn count_clusters(points: &[[Complex64; 2]], radius: f64) -> usize {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if chordal(&points[i], &points[j]) <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

fn to_c3(x: &DVector<f64>) -> [Complex64; 3] {
    let z = complexify(x);
    [z[0], z[1], z[2]]
}

/// A Fubini–Study random line of `CP^2`, given by two independent uniform
/// points.
pub fn random_line(stream: &mut RandomStream) -> ([Complex64; 3], [Complex64; 3]) {
    let p = to_c3(&sample_cp_point(3, stream));
    let q = to_c3(&sample_cp_point(3, stream));
    (p, q)
}

/// Histogram of distinct intersection counts with random lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equidistribution {
    pub degree: u32,
    pub samples: u64,
    pub histogram: BTreeMap<u32, u64>,
    /// Fraction of lines whose distinct count differs from the degree.
    pub exceptional_fraction: f64,
}

pub fn equidistribution_experiment(
    curve: &HomogeneousCurve,
    samples: usize,
    stream: &RandomStream,
) -> Result<Equidistribution> {
    if samples < 100 {
        return Err(Error::InvalidInput(format!(
            "equidistribution needs at least 100 samples, got {samples}"
        )));
    }
    let parts = run_batches(samples, stream, |s, len| -> Result<BTreeMap<u32, u64>> {
        let mut hist = BTreeMap::new();
        for _ in 0..len {
            let (p, q) = random_line(s);
            let count = line_curve_count(curve, &p, &q)?;
            *hist.entry(count.distinct).or_insert(0) += 1;
        }
        Ok(hist)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let histogram = pairwise_merge(&parts, &|a: &BTreeMap<u32, u64>, b: &BTreeMap<u32, u64>| {
        let mut out = a.clone();
        for (k, v) in b {
            *out.entry(*k).or_insert(0) += v;
        }
        out
    })
    .unwrap_or_default();
    let on_degree = histogram.get(&curve.degree).copied().unwrap_or(0);
    Ok(Equidistribution {
        degree: curve.degree,
        samples: samples as u64,
        exceptional_fraction: (samples as u64 - on_degree) as f64 / samples as f64,
        histogram,
    })
}

/// The scalar circle meeting `SU(n)` in `U(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuCircleIntersections {
    /// `diag(exp(2πik/n))`, `k = 0..n`.
    pub points: Vec<DMatrix<Complex64>>,
    /// `max |<ξ, η>|` with `<ξ, η> = -tr(ξη)` pulled back to the identity,
    /// over the circle tangent `ξ = i·x` and a basis `x·η` of the coset tangent.
    pub orthogonality_residual: f64,
    /// `max |det(x) - 1|` and `max ‖xⁿ - Id‖` over the points.
    pub membership_residual: f64,
}

/// Traceless skew-Hermitian basis of `su(n)`.
pub fn su_basis(n: usize) -> Vec<DMatrix<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut basis = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let mut real = DMatrix::from_element(n, n, zero);
            real[(a, b)] = one;
            real[(b, a)] = -one;
            basis.push(real);
            let mut imag = DMatrix::from_element(n, n, zero);
            imag[(a, b)] = i;
            imag[(b, a)] = i;
            basis.push(imag);
        }
    }
    for a in 0..n.saturating_sub(1) {
        let mut diag = DMatrix::from_element(n, n, zero);
        diag[(a, a)] = i;
        diag[(a + 1, a + 1)] = -i;
        basis.push(diag);
    }
    basis
}

pub fn su_circle_intersections(n: usize) -> Result<SuCircleIntersections> {
    if n == 0 {
        return Err(Error::InvalidInput("matrix size must be positive".into()));
    }
    let i = Complex64::new(0.0, 1.0);
    let id = DMatrix::<Complex64>::identity(n, n);
    let basis = su_basis(n);
    let mut points = Vec::with_capacity(n);
    let mut orthogonality_residual: f64 = 0.0;
    let mut membership_residual: f64 = 0.0;
    for k in 0..n {
        let z = Complex64::from_polar(1.0, TAU * k as f64 / n as f64);
        let x = &id * z;
        let det = x.determinant();
        let mut power = id.clone();
        for _ in 0..n {
            power = &power * &x;
        }
        membership_residual = membership_residual
            .max((det - 1.0).norm())
            .max((power - &id).iter().map(|c| c.norm()).fold(0.0, f64::max));

        let x_inv = x.adjoint();
        let xi = (&x * i).clone();
        let pulled_xi = &x_inv * &xi;
        for eta in &basis {
            let tangent = &x * eta;
            let pulled_eta = &x_inv * tangent;
            let inner = -(&pulled_xi * &pulled_eta).trace();
            orthogonality_residual = orthogonality_residual.max(inner.norm());
        }
        points.push(x);
    }
    Ok(SuCircleIntersections {
        points,
        orthogonality_residual,
        membership_residual,
    })
}
