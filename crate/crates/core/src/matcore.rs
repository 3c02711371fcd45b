//! Complex dense matrices, Modified Gram-Schmidt orthonormalization, the
//! variable-projected objective, and closed-form recovery of the eliminated
//! linear factor.
//!
//! Storage is column-major so the per-column recurrences of the
//! orthonormalization and its adjoint operate on contiguous slices.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::flops::FlopCounter;
use crate::scalar::{real, Real};

/// Relative tolerance below which a deflated column norm is treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Dense complex matrix with column-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0, "matrix must have at least one row");
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    /// Builds a matrix from column-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if rows == 0 || data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let m = Self { rows, cols, data };
        if !m.all_finite() {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[j * rows + i] = f(i, j);
            }
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[Complex<T>] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [Complex<T>] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Splits the storage into columns `0..j` and column `j`, so a column can
    /// be deflated against earlier ones in place.
    #[inline]
    pub(crate) fn split_col_mut(&mut self, j: usize) -> (&[Complex<T>], &mut [Complex<T>]) {
        let (head, tail) = self.data.split_at_mut(j * self.rows);
        (&head[..], &mut tail[..self.rows])
    }

    /// Mutable views of two distinct columns, `j < i`.
    #[inline]
    pub(crate) fn two_cols_mut(&mut self, j: usize, i: usize) -> (&mut [Complex<T>], &mut [Complex<T>]) {
        debug_assert!(j < i);
        let (head, tail) = self.data.split_at_mut(i * self.rows);
        (
            &mut head[j * self.rows..(j + 1) * self.rows],
            &mut tail[..self.rows],
        )
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn frob_norm_sqr(&self) -> T {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn frob_norm(&self) -> T {
        self.frob_norm_sqr().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|c| c.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&mut self, c: Complex<T>) {
        for v in &mut self.data {
            *v = *v * c;
        }
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            for k in 0..self.cols {
                let s = rhs.get(k, j);
                let a = self.col(k);
                let o = out.col_mut(j);
                for i in 0..self.rows {
                    o[i] = o[i] + a[i] * s;
                }
            }
        }
        Ok(out)
    }

    /// `self^H * rhs` (conjugate transpose on the left).
    pub fn herm_matmul(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::ShapeMismatch(format!(
                "{}x{}^H * {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        if self.cols == 0 {
            return Err(Error::ShapeMismatch("A^H with zero columns".into()));
        }
        let mut out = Self::zeros(self.cols, rhs.cols);
        let mut ctr = FlopCounter::new();
        for j in 0..rhs.cols {
            for i in 0..self.cols {
                let v = dotc(self.col(i), rhs.col(j), &mut ctr);
                out.set(i, j, v);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} - {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = self.clone();
        for (o, r) in out.data.iter_mut().zip(&rhs.data) {
            *o = *o - *r;
        }
        Ok(out)
    }

    /// Largest entry modulus of `self - rhs`; panics on shape mismatch.
    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        assert_eq!(self.rows, rhs.rows);
        assert_eq!(self.cols, rhs.cols);
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), |a, b| a.max(b))
    }
}

// ---------------------------------------------------------------------------
// slice kernels
// ---------------------------------------------------------------------------

/// `x^H y`.
#[inline]
pub(crate) fn dotc<T: Real>(
    x: &[Complex<T>],
    y: &[Complex<T>],
    ctr: &mut FlopCounter,
) -> Complex<T> {
    debug_assert_eq!(x.len(), y.len());
    ctr.muls += x.len() as u64;
    ctr.adds += x.len() as u64;
    let mut s = Complex::new(T::zero(), T::zero());
    for (a, b) in x.iter().zip(y) {
        s = s + a.conj() * *b;
    }
    s
}

/// `y += alpha * x`.
#[inline]
pub(crate) fn axpy<T: Real>(
    alpha: Complex<T>,
    x: &[Complex<T>],
    y: &mut [Complex<T>],
    ctr: &mut FlopCounter,
) {
    debug_assert_eq!(x.len(), y.len());
    ctr.muls += x.len() as u64;
    ctr.adds += x.len() as u64;
    for (b, a) in y.iter_mut().zip(x) {
        *b = *b + *a * alpha;
    }
}

/// Euclidean norm of a complex vector.
#[inline]
pub(crate) fn nrm2<T: Real>(x: &[Complex<T>], ctr: &mut FlopCounter) -> T {
    ctr.muls += x.len() as u64;
    ctr.adds += x.len() as u64;
    ctr.sqrts += 1;
    x.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt()
}

#[inline]
pub(crate) fn scale_slice<T: Real>(alpha: Complex<T>, x: &mut [Complex<T>], ctr: &mut FlopCounter) {
    ctr.muls += x.len() as u64;
    for v in x.iter_mut() {
        *v = *v * alpha;
    }
}

// ---------------------------------------------------------------------------
// Modified Gram-Schmidt
// ---------------------------------------------------------------------------

/// Orthonormal factor produced by [`mgs_orthonormalize`] together with the
/// deflated column norms taken immediately before each normalization.
#[derive(Clone, Debug)]
pub struct OrthoResult<T> {
    pub q: DenseMatrix<T>,
    pub t_norms: Vec<T>,
}

pub(crate) struct MgsOutput<T> {
    pub t_norms: Vec<T>,
    /// Upper-triangular coefficients packed column-major (diagonal holds the
    /// column norms), present when requested.
    pub r_upper: Option<Vec<Complex<T>>>,
}

/// Runs MGS from `src` into `q` (same shape). Column `i` is copied, deflated
/// sequentially against columns `0..i` of `q`, then normalized.
pub(crate) fn mgs_core<T: Real>(
    src: &DenseMatrix<T>,
    q: &mut DenseMatrix<T>,
    want_r: bool,
    rank_tol: T,
    ctr: &mut FlopCounter,
) -> Result<MgsOutput<T>> {
    let m = src.rows();
    let r = src.cols();
    debug_assert_eq!(q.rows(), m);
    debug_assert_eq!(q.cols(), r);
    let mut t_norms = Vec::with_capacity(r);
    let mut r_upper = if want_r {
        Some(Vec::with_capacity(r * (r + 1) / 2))
    } else {
        None
    };
    for i in 0..r {
        let col_norm = nrm2(src.col(i), ctr);
        {
            let (prev, u) = q.split_col_mut(i);
            u.copy_from_slice(src.col(i));
            for j in 0..i {
                let qj = &prev[j * m..(j + 1) * m];
                let z = dotc(qj, u, ctr);
                axpy(-z, qj, u, ctr);
                if let Some(ru) = r_upper.as_mut() {
                    ru.push(z);
                }
            }
            let tau = nrm2(u, ctr);
            if tau <= rank_tol * col_norm {
                return Err(Error::RankDeficient { column: i });
            }
            let inv = Complex::new(T::one() / tau, T::zero());
            scale_slice(inv, u, ctr);
            ctr.divs += 1;
            if let Some(ru) = r_upper.as_mut() {
                ru.push(Complex::new(tau, T::zero()));
            }
            t_norms.push(tau);
        }
    }
    Ok(MgsOutput { t_norms, r_upper })
}

/// Orthonormalizes the columns of `b` by Modified Gram-Schmidt with the
/// default rank tolerance.
///
/// Fails with [`Error::RankDeficient`] when a deflated column norm drops below
/// `rank_tol` times the incoming column norm.
pub fn mgs_orthonormalize<T: Real>(b: &DenseMatrix<T>) -> Result<OrthoResult<T>> {
    mgs_orthonormalize_with_tol(b, real(DEFAULT_RANK_TOL))
}

pub fn mgs_orthonormalize_with_tol<T: Real>(b: &DenseMatrix<T>, rank_tol: T) -> Result<OrthoResult<T>> {
    if b.cols() > b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "cannot orthonormalize {} columns in dimension {}",
            b.cols(),
            b.rows()
        )));
    }
    if !b.all_finite() {
        return Err(Error::NonFinite);
    }
    let mut q = DenseMatrix::zeros(b.rows(), b.cols());
    let mut ctr = FlopCounter::new();
    let out = mgs_core(b, &mut q, false, rank_tol, &mut ctr)?;
    Ok(OrthoResult {
        q,
        t_norms: out.t_norms,
    })
}

// ---------------------------------------------------------------------------
// objective
// ---------------------------------------------------------------------------

/// The projected objective `sqrt(||A||_F^2 - sum_i ||A^H q_i||^2)`.
///
/// The radicand is clamped at zero: roundoff can push it slightly negative
/// when the span of `q` captures `A` exactly.
pub fn objective_value<T: Real>(a: &DenseMatrix<T>, q: &DenseMatrix<T>) -> Result<T> {
    let mut ctr = FlopCounter::new();
    objective_counted(a, q, &mut ctr)
}

pub(crate) fn objective_counted<T: Real>(
    a: &DenseMatrix<T>,
    q: &DenseMatrix<T>,
    ctr: &mut FlopCounter,
) -> Result<T> {
    if a.rows() != q.rows() {
        return Err(Error::ShapeMismatch(format!(
            "A has {} rows, Q has {}",
            a.rows(),
            q.rows()
        )));
    }
    let total = a.frob_norm_sqr();
    ctr.muls += (a.rows() * a.cols()) as u64;
    ctr.adds += (a.rows() * a.cols()) as u64;
    let mut captured = T::zero();
    for i in 0..q.cols() {
        for k in 0..a.cols() {
            let s = dotc(a.col(k), q.col(i), ctr);
            captured += s.norm_sqr();
        }
    }
    ctr.sqrts += 1;
    Ok((total - captured).max(T::zero()).sqrt())
}

/// Frobenius norm of the explicit residual `A - Q (Q^H A)`.
///
/// Test oracle for [`objective_value`]: it forms the residual matrix
/// explicitly instead of using the norm identity. An empty `q` (zero columns)
/// is allowed and returns `||A||_F`.
pub fn projection_residual<T: Real>(a: &DenseMatrix<T>, q: &DenseMatrix<T>) -> Result<T> {
    if a.rows() != q.rows() {
        return Err(Error::ShapeMismatch(format!(
            "A has {} rows, Q has {}",
            a.rows(),
            q.rows()
        )));
    }
    let m = a.rows();
    let r = q.cols();
    let mut ctr = FlopCounter::new();
    let mut acc = T::zero();
    let mut res = vec![Complex::new(T::zero(), T::zero()); m];
    for k in 0..a.cols() {
        res.copy_from_slice(a.col(k));
        for i in 0..r {
            let y = dotc(q.col(i), a.col(k), &mut ctr);
            axpy(-y, q.col(i), &mut res, &mut ctr);
        }
        acc += res.iter().map(|c| c.norm_sqr()).sum::<T>();
    }
    Ok(acc.sqrt())
}

/// Minimizer of `||A - B C^H||_F` over `C` for frozen `B`, computed through
/// the MGS factorization `B = Q R` as `C = (A^H Q) R^{-H}` rather than by
/// forming `(B^H B)^{-1}`.
pub fn recover_c<T: Real>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.rows() != b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "A has {} rows, B has {}",
            a.rows(),
            b.rows()
        )));
    }
    let r = b.cols();
    let n = a.cols();
    let mut ctr = FlopCounter::new();
    let mut q = DenseMatrix::zeros(b.rows(), r);
    let fac = mgs_core(b, &mut q, true, real(DEFAULT_RANK_TOL), &mut ctr)?;
    let r_upper = fac.r_upper.expect("requested R factor");
    // W = A^H Q  (n x r)
    let mut c = DenseMatrix::zeros(n, r);
    for i in 0..r {
        for k in 0..n {
            let v = dotc(a.col(k), q.col(i), &mut ctr);
            c.set(k, i, v);
        }
    }
    // Solve C R^H = W row by row (R upper triangular, packed column-major).
    let ridx = |j: usize, l: usize| l * (l + 1) / 2 + j; // j <= l
    for k in 0..n {
        for j in (0..r).rev() {
            let mut v = c.get(k, j);
            for l in j + 1..r {
                v = v - c.get(k, l) * r_upper[ridx(j, l)].conj();
            }
            c.set(k, j, v / r_upper[ridx(j, j)].conj());
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn re_mat(rows: usize, cols: usize, vals: &[f64]) -> DenseMatrix<f64> {
        // vals row-major for readability
        DenseMatrix::from_fn(rows, cols, |i, j| cm(vals[i * cols + j], 0.0))
    }

    #[test]
    fn mgs_already_orthogonal_columns() {
        let b = re_mat(3, 2, &[3.0, 0.0, 0.0, 4.0, 0.0, 0.0]);
        let o = mgs_orthonormalize(&b).unwrap();
        assert!((o.q.get(0, 0) - cm(1.0, 0.0)).norm() < 1e-15);
        assert!((o.q.get(1, 1) - cm(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(o.t_norms, vec![3.0, 4.0]);
    }

    #[test]
    fn mgs_two_column_hand_case() {
        let b = re_mat(3, 2, &[1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        let o = mgs_orthonormalize(&b).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        assert!((o.q.get(0, 0) - cm(s, 0.0)).norm() < 1e-15);
        assert!((o.q.get(1, 0) - cm(s, 0.0)).norm() < 1e-15);
        assert!((o.q.get(0, 1) - cm(s, 0.0)).norm() < 1e-14);
        assert!((o.q.get(1, 1) - cm(-s, 0.0)).norm() < 1e-14);
        assert!((o.t_norms[0] - 2.0_f64.sqrt()).abs() < 1e-15);
        assert!((o.t_norms[1] - s).abs() < 1e-15);
    }

    #[test]
    fn mgs_rejects_dependent_columns() {
        let b = re_mat(3, 2, &[1.0, 2.0, 1.0, 2.0, 0.0, 0.0]);
        match mgs_orthonormalize(&b) {
            Err(Error::RankDeficient { column }) => assert_eq!(column, 1),
            other => panic!("expected RankDeficient, got {other:?}"),
        }
    }

    #[test]
    fn mgs_rejects_wide_input() {
        let b = DenseMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            mgs_orthonormalize(&b),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn objective_unit_directions() {
        let a = DenseMatrix::<f64>::identity(2);
        let q = re_mat(2, 1, &[1.0, 0.0]);
        assert!((objective_value(&a, &q).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn objective_complete_projection_is_zero() {
        let a = DenseMatrix::from_fn(3, 2, |i, j| cm((i + 2 * j) as f64, (j as f64) - 1.0));
        let q = DenseMatrix::<f64>::identity(3);
        assert!(objective_value(&a, &q).unwrap() < 1e-12);
    }

    #[test]
    fn residual_without_projection_is_frob_norm() {
        let a = DenseMatrix::from_fn(3, 2, |i, j| cm(i as f64 + 1.0, j as f64));
        let q = DenseMatrix::<f64>::zeros(3, 0);
        assert!((projection_residual(&a, &q).unwrap() - a.frob_norm()).abs() < 1e-14);
    }

    #[test]
    fn residual_identity_case() {
        let a = DenseMatrix::<f64>::identity(2);
        let q = re_mat(2, 1, &[1.0, 0.0]);
        assert!((projection_residual(&a, &q).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn recover_c_orthonormal_b() {
        let b = re_mat(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let a = DenseMatrix::from_fn(3, 2, |i, j| cm(i as f64 - j as f64, 0.5 * j as f64));
        let c = recover_c(&a, &b).unwrap();
        let expect = a.herm_matmul(&b).unwrap();
        assert!(c.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn recover_c_self_representation() {
        let mut rng = crate::rng::Xorshift64Star::new(11);
        let b: DenseMatrix<f64> = rng.matrix(5, 3, true);
        let c = recover_c(&b, &b).unwrap();
        assert!(c.max_abs_diff(&DenseMatrix::identity(3)) < 1e-10);
    }

    #[test]
    fn from_vec_rejects_nan() {
        let v = vec![cm(f64::NAN, 0.0)];
        assert_eq!(DenseMatrix::from_vec(1, 1, v), Err(Error::NonFinite));
    }
}
