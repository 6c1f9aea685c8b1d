//! Frames, polyvector pairings, the block-shift operator and the `B_r` forms.
//!
//! A unit simple `k`-vector is carried as an orthonormal `k`-frame. Every
//! quantity computed from frames is an absolute value of a pairing, so the
//! orientation of a frame is never observable.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{mismatch, Error, Result};

/// Smallest singular value accepted by [`orthonormalize`].
pub const RANK_THRESHOLD: f64 = 1e-9;
/// Max-entry deviation of `FᵀF` from the identity tolerated in a frame.
pub const FRAME_TOLERANCE: f64 = 1e-10;

/// Orthonormal `k`-frame in `R^n` standing for the `k`-plane it spans.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoFrame {
    columns: DMatrix<f64>,
}

impl OrthoFrame {
    /// Wraps columns that are already orthonormal.
    pub fn from_orthonormal(columns: DMatrix<f64>) -> Result<Self> {
        if columns.ncols() == 0 || columns.ncols() > columns.nrows() {
            return Err(mismatch(format!(
                "frame of rank {} in ambient dimension {}",
                columns.ncols(),
                columns.nrows()
            )));
        }
        let k = columns.ncols();
        let err = (columns.tr_mul(&columns) - DMatrix::identity(k, k)).amax();
        if err > FRAME_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "columns deviate from orthonormal by {err:.3e}"
            )));
        }
        Ok(Self { columns })
    }

    pub(crate) fn from_orthonormal_unchecked(columns: DMatrix<f64>) -> Self {
        debug_assert!(
            (columns.tr_mul(&columns) - DMatrix::identity(columns.ncols(), columns.ncols()))
                .amax()
                < 1e-8
        );
        Self { columns }
    }

    /// Span of the standard basis vectors with the given indices.
    pub fn coordinate(n: usize, indices: &[usize]) -> Self {
        let mut columns = DMatrix::zeros(n, indices.len());
        for (j, &i) in indices.iter().enumerate() {
            columns[(i, j)] = 1.0;
        }
        Self::from_orthonormal(columns).expect("distinct in-range coordinate indices")
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn ambient_dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn rank(&self) -> usize {
        self.columns.ncols()
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.columns.column(j).into_owned()
    }

    /// Orthogonal projection of `x` onto the span.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.columns * self.columns.tr_mul(x)
    }

    /// The orthogonal projector `FFᵀ`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.columns * self.columns.transpose()
    }

    /// Image of the frame under an orthogonal map `g`.
    pub fn transform(&self, g: &DMatrix<f64>) -> Result<Self> {
        if g.ncols() != self.ambient_dim() || g.nrows() != self.ambient_dim() {
            return Err(mismatch(format!(
                "{}x{} map applied to frame in R^{}",
                g.nrows(),
                g.ncols(),
                self.ambient_dim()
            )));
        }
        Self::from_orthonormal(g * &self.columns)
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement(&self) -> Option<Self> {
        let n = self.ambient_dim();
        let k = self.rank();
        if k == n {
            return None;
        }
        let mut basis = self.columns.clone().resize_horizontally(k, 0.0);
        let mut out = Vec::with_capacity(n - k);
        for e in 0..n {
            let mut v = DVector::zeros(n);
            v[e] = 1.0;
            for _ in 0..2 {
                let c = basis.tr_mul(&v);
                v -= &basis * c;
            }
            let norm = v.norm();
            if norm > 1e-6 {
                v /= norm;
                let last = basis.ncols();
                basis = basis.insert_column(last, 0.0);
                basis.set_column(last, &v);
                out.push(v);
                if out.len() == n - k {
                    break;
                }
            }
        }
        Some(Self::from_orthonormal_unchecked(DMatrix::from_columns(&out)))
    }
}

/// Orthonormal frame spanning the columns of `vectors`.
///
/// Gram–Schmidt in input column order with one reorthogonalization pass, so
/// the first output column is the normalized first input column.
pub fn orthonormalize(vectors: &DMatrix<f64>) -> Result<OrthoFrame> {
    let (n, k) = vectors.shape();
    if k == 0 || k > n {
        return Err(mismatch(format!("{k} vectors in R^{n}")));
    }
    let smallest = vectors
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(smallest > RANK_THRESHOLD) {
        return Err(Error::RankDeficient { smallest });
    }
    let mut q = DMatrix::zeros(n, k);
    for j in 0..k {
        let mut v = vectors.column(j).into_owned();
        for _ in 0..2 {
            for i in 0..j {
                let c = q.column(i).dot(&v);
                v.axpy(-c, &q.column(i), 1.0);
            }
        }
        let norm = v.norm();
        q.set_column(j, &(v / norm));
    }
    Ok(OrthoFrame { columns: q })
}

/// `sqrt(det(MᵀM))`: the volume of the parallelotope spanned by the columns.
pub fn gram_volume(m: &DMatrix<f64>) -> f64 {
    m.tr_mul(m).determinant().max(0.0).sqrt()
}

/// `|<V, W>|` for equal-rank planes, i.e. `|det(VᵀW)|`.
pub fn pairing(v: &OrthoFrame, w: &OrthoFrame) -> Result<f64> {
    if v.ambient_dim() != w.ambient_dim() || v.rank() != w.rank() {
        return Err(mismatch(format!(
            "pairing rank {} in R^{} with rank {} in R^{}",
            v.rank(),
            v.ambient_dim(),
            w.rank(),
            w.ambient_dim()
        )));
    }
    Ok(pairing_unchecked(v.columns(), w.columns()))
}

pub(crate) fn pairing_unchecked(v: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    v.tr_mul(w).determinant().abs().min(1.0)
}

/// Volume of the orthogonal projection of the unit simple `j`-vector `Z`
/// onto the `k`-plane `V`, `j <= k`.
pub fn projection_volume(v: &OrthoFrame, z: &OrthoFrame) -> Result<f64> {
    if v.ambient_dim() != z.ambient_dim() || z.rank() > v.rank() {
        return Err(mismatch(format!(
            "projecting rank {} in R^{} onto rank {} in R^{}",
            z.rank(),
            z.ambient_dim(),
            v.rank(),
            v.ambient_dim()
        )));
    }
    Ok(projection_volume_unchecked(v.columns(), z.columns()))
}

pub(crate) fn projection_volume_unchecked(v: &DMatrix<f64>, z: &DMatrix<f64>) -> f64 {
    if v.ncols() == z.ncols() {
        return pairing_unchecked(v, z);
    }
    gram_volume(&v.tr_mul(z)).min(1.0)
}

/// Orthogonal complex structure `J` (`J² = -1`) on `R^{2n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStructure {
    matrix: DMatrix<f64>,
}

impl ComplexStructure {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 || d % 2 != 0 || matrix.ncols() != d {
            return Err(mismatch(format!(
                "complex structure must be square of even size, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let id = DMatrix::<f64>::identity(d, d);
        let square = (&matrix * &matrix + &id).amax();
        let orth = (matrix.tr_mul(&matrix) - &id).amax();
        if square > 1e-12 || orth > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "not an orthogonal complex structure (J²+1: {square:.2e}, JᵀJ-1: {orth:.2e})"
            )));
        }
        Ok(Self { matrix })
    }

    /// Multiplication by `i` on `C^n` in the `(re, im)` interleaved layout:
    /// `J e_{2j} = e_{2j+1}`, `J e_{2j+1} = -e_{2j}`.
    pub fn standard(n: usize) -> Self {
        let mut matrix = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            matrix[(2 * j + 1, 2 * j)] = 1.0;
            matrix[(2 * j, 2 * j + 1)] = -1.0;
        }
        Self { matrix }
    }

    /// The twisted structure on `R^q ⊕ R^q` that agrees with the block shift on
    /// the first summand and with its negative on the second:
    /// `(a, b) ↦ (-b, a)`.
    pub fn twisted_interleave(q: usize) -> Self {
        let mut matrix = DMatrix::zeros(2 * q, 2 * q);
        for i in 0..q {
            matrix[(q + i, i)] = 1.0;
            matrix[(i, q + i)] = -1.0;
        }
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    /// Max-entry size of the part of `J V` leaving `V`; zero iff `V` is complex.
    pub fn invariance_residual(&self, v: &OrthoFrame) -> Result<f64> {
        if v.ambient_dim() != self.dim() {
            return Err(mismatch(format!(
                "plane in R^{} against complex structure on R^{}",
                v.ambient_dim(),
                self.dim()
            )));
        }
        let jv = &self.matrix * v.columns();
        let leak = &jv - v.columns() * v.columns().tr_mul(&jv);
        Ok(leak.amax())
    }
}

/// Cyclic block shift on `R^{l·m}` viewed as `m` blocks of `R^l`: block `i`
/// moves to block `i + 1 (mod m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterleaveOperator {
    block_dim: usize,
    copies: usize,
}

impl InterleaveOperator {
    pub fn new(block_dim: usize, copies: usize) -> Result<Self> {
        if block_dim == 0 || copies == 0 {
            return Err(mismatch("interleave operator needs positive block size and copy count"));
        }
        Ok(Self { block_dim, copies })
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn ambient_dim(&self) -> usize {
        self.block_dim * self.copies
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ambient_dim());
        let l = self.block_dim;
        let mut out = DVector::zeros(x.len());
        for i in 0..self.copies {
            let dst = (i + 1) % self.copies;
            out.rows_mut(dst * l, l).copy_from(&x.rows(i * l, l));
        }
        out
    }

    /// Matrix of `I^r`.
    pub fn power_matrix(&self, r: usize) -> DMatrix<f64> {
        let l = self.block_dim;
        let n = self.ambient_dim();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..self.copies {
            let dst = (i + r) % self.copies;
            for a in 0..l {
                out[(dst * l + a, i * l + a)] = 1.0;
            }
        }
        out
    }

    /// `I^r` applied to `x` placed in block 0.
    pub fn embed(&self, x: &DVector<f64>, r: usize) -> DVector<f64> {
        assert_eq!(x.len(), self.block_dim);
        let mut out = DVector::zeros(self.ambient_dim());
        out.rows_mut((r % self.copies) * self.block_dim, self.block_dim)
            .copy_from(x);
        out
    }

    /// Applies `g` (acting on one block) to every block.
    pub fn blockwise(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(g.nrows(), self.block_dim);
        assert_eq!(g.ncols(), self.block_dim);
        let l = self.block_dim;
        let n = self.ambient_dim();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..self.copies {
            out.view_mut((i * l, i * l), (l, l)).copy_from(g);
        }
        out
    }

    /// `V₁ ⊕ I(V₁) ⊕ … ⊕ I^{m-1}(V₁)` for a plane `V₁` of one block.
    pub fn product_plane(&self, base: &OrthoFrame) -> Result<OrthoFrame> {
        if base.ambient_dim() != self.block_dim {
            return Err(mismatch(format!(
                "base plane in R^{} for blocks of R^{}",
                base.ambient_dim(),
                self.block_dim
            )));
        }
        let p = base.rank();
        let mut columns = DMatrix::zeros(self.ambient_dim(), p * self.copies);
        for r in 0..self.copies {
            for j in 0..p {
                columns.set_column(r * p + j, &self.embed(&base.column(j), r));
            }
        }
        Ok(OrthoFrame::from_orthonormal_unchecked(columns))
    }
}

fn check_unit(x: &DVector<f64>) -> Result<()> {
    let norm = x.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnit(norm));
    }
    Ok(())
}

/// Frame of the simple `m`-vector `x ∧ I(x) ∧ … ∧ I^{m-1}(x)`.
pub fn interleaved_wedge(x: &DVector<f64>, op: &InterleaveOperator) -> Result<OrthoFrame> {
    if x.len() != op.block_dim() {
        return Err(mismatch(format!(
            "vector in R^{} for blocks of R^{}",
            x.len(),
            op.block_dim()
        )));
    }
    check_unit(x)?;
    let mut columns = DMatrix::zeros(op.ambient_dim(), op.copies());
    for r in 0..op.copies() {
        columns.set_column(r, &op.embed(x, r));
    }
    Ok(OrthoFrame::from_orthonormal_unchecked(columns))
}

/// Frame of `(x ∧ Jx) ∧ I(x ∧ Jx) ∧ …`, the interleaved copies of the complex
/// line through `x`. Blocks are realified `C^q` with the standard structure.
pub fn complex_interleaved_wedge(x: &DVector<f64>, op: &InterleaveOperator) -> Result<OrthoFrame> {
    if x.len() != op.block_dim() || x.len() % 2 != 0 {
        return Err(mismatch(format!(
            "vector in R^{} for realified blocks of R^{}",
            x.len(),
            op.block_dim()
        )));
    }
    check_unit(x)?;
    let jx = ComplexStructure::standard(x.len() / 2).apply(x);
    let mut columns = DMatrix::zeros(op.ambient_dim(), 2 * op.copies());
    for r in 0..op.copies() {
        columns.set_column(2 * r, &op.embed(x, r));
        columns.set_column(2 * r + 1, &op.embed(&jx, r));
    }
    Ok(OrthoFrame::from_orthonormal_unchecked(columns))
}

/// Symmetric positive semidefinite form on one block.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionForm {
    matrix: DMatrix<f64>,
}

impl ProjectionForm {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.matrix * x))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// `B_r(x, x) = |proj_V(I^r x)|²`.
///
/// With `V_r` the rows of the frame lying in block `r`, `B_r = V_r V_rᵀ`.
pub fn b_r_form(v: &OrthoFrame, r: usize, op: &InterleaveOperator) -> Result<ProjectionForm> {
    if v.ambient_dim() != op.ambient_dim() {
        return Err(mismatch(format!(
            "plane in R^{} for interleave space R^{}",
            v.ambient_dim(),
            op.ambient_dim()
        )));
    }
    if r >= op.copies() {
        return Err(mismatch(format!("shift power {r} with {} copies", op.copies())));
    }
    let q = op.block_dim();
    let rows = v.columns().rows(r * q, q);
    Ok(ProjectionForm {
        matrix: rows * rows.transpose(),
    })
}

/// `Σ_r trace(B_r)`, which equals `dim V` for every plane.
pub fn trace_identity(v: &OrthoFrame, op: &InterleaveOperator) -> Result<f64> {
    let mut total = 0.0;
    for r in 0..op.copies() {
        total += b_r_form(v, r, op)?.trace();
    }
    Ok(total)
}

/// Normal form of a 2-plane relative to a complex structure.
#[derive(Debug, Clone, PartialEq)]
pub struct KahlerAngle {
    /// Kähler angle in `[0, pi/2]`.
    pub tau: f64,
    pub v1: DVector<f64>,
    /// `None` when the plane is a complex line and `v2` is arbitrary.
    pub v2: Option<DVector<f64>>,
}

/// Kähler angle of a 2-plane: `V = cos τ · v₁∧Jv₁ + sin τ · v₁∧v₂`.
///
/// `cos τ` is the largest singular value of the antisymmetric matrix
/// `<u_i, J u_j>`, independent of the orthonormal basis `u` of `V`.
pub fn kahler_angle(v: &OrthoFrame, j: &ComplexStructure) -> Result<KahlerAngle> {
    if v.rank() != 2 || v.ambient_dim() != j.dim() {
        return Err(mismatch(format!(
            "Kähler angle needs a 2-plane in R^{}, got rank {} in R^{}",
            j.dim(),
            v.rank(),
            v.ambient_dim()
        )));
    }
    let u = v.columns();
    let form = u.tr_mul(&(j.matrix() * u));
    let cos_tau = form
        .svd(false, false)
        .singular_values
        .max()
        .clamp(0.0, 1.0);

    let u1 = v.column(0);
    let ju1 = j.apply(&u1);
    let mut u2 = v.column(1);
    if u2.dot(&ju1) < 0.0 {
        u2.neg_mut();
    }
    let rest = &u2 - &ju1 * u2.dot(&ju1);
    let sin_tau = rest.norm();
    let tau = sin_tau.atan2(cos_tau);
    let v2 = (sin_tau > 1e-9).then(|| rest / sin_tau);
    Ok(KahlerAngle { tau, v1: u1, v2 })
}
