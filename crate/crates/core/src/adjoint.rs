//! Gradient of the projected objective over all entries of `B`, by four
//! routes:
//!
//! * [`gradient_amgs`] — reverse sweep over the Modified Gram-Schmidt
//!   recurrence with on-the-fly recomputation of the deflation trajectory.
//!   Workspace is four `m x r` panels plus one length-`r` scalar buffer,
//!   independent of `n`.
//! * [`gradient_ags`] — the classical (non-modified) Gram-Schmidt variant.
//!   Cheaper in memory (three panels plus the stored projection
//!   coefficients) but inherits CGS's loss of orthogonality on
//!   ill-conditioned input.
//! * [`gradient_fd`] — central finite differences over every real coordinate
//!   of `B`. Slow (`4 m r` forward evaluations) but implementation-free;
//!   this is the ground-truth oracle that pins the complex-gradient
//!   convention.
//! * [`gradient_blocksystem`] — explicit assembly of the block-triangular
//!   linearization and a transposed back-substitution. Exact but
//!   materializes the whole system, so it is capped to tiny sizes.
//!
//! Gradient convention: `f` is real-valued over complex `B`; the returned
//! panel stores `G_ij = df/dRe(b_ij) + i * df/dIm(b_ij)`, so for any
//! perturbation `dB`, `df = sum_ij Re(conj(G_ij) * dB_ij)`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::flops::FlopCounter;
use crate::matcore::{
    axpy, dotc, mgs_core, nrm2, objective_counted, scale_slice, DenseMatrix, OrthoResult,
    DEFAULT_RANK_TOL,
};
use crate::scalar::{real, Real};

/// Relative objective threshold (times `||A||_F`) below which the gradient of
/// the square-root objective is treated as singular.
pub const DEFAULT_GRAD_TOL_F: f64 = 1e-10;

/// Default finite-difference base step; the per-coordinate step is
/// `h0 * (1 + |coordinate|)`.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Size caps for the explicit block-system route.
pub const BLOCKSYS_MAX_M: usize = 8;
pub const BLOCKSYS_MAX_R: usize = 4;

/// Which gradient route to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GradientMethod {
    Fd,
    Ags,
    Amgs,
    Blocksys,
}

impl GradientMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            GradientMethod::Fd => "fd",
            GradientMethod::Ags => "ags",
            GradientMethod::Amgs => "amgs",
            GradientMethod::Blocksys => "blocksys",
        }
    }
}

impl std::fmt::Display for GradientMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for GradientMethod {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fd" => Ok(GradientMethod::Fd),
            "ags" => Ok(GradientMethod::Ags),
            "amgs" => Ok(GradientMethod::Amgs),
            "blocksys" => Ok(GradientMethod::Blocksys),
            other => Err(format!("unknown gradient method `{other}`")),
        }
    }
}

/// The entire auxiliary state of the reverse-MGS gradient: four `m x r`
/// complex panels plus a length-`r` scalar buffer. `t` is recomputed inside
/// each outer reverse step and never persists across steps.
pub struct GradientWorkspace<T> {
    pub b: DenseMatrix<T>,
    pub q: DenseMatrix<T>,
    pub t: DenseMatrix<T>,
    pub g: DenseMatrix<T>,
    pub z: Vec<Complex<T>>,
}

impl<T: Real> GradientWorkspace<T> {
    pub fn new(b: &DenseMatrix<T>) -> Self {
        let (m, r) = (b.rows(), b.cols());
        Self {
            b: b.clone(),
            q: DenseMatrix::zeros(m, r),
            t: DenseMatrix::zeros(m, r),
            g: DenseMatrix::zeros(m, r),
            z: vec![Complex::new(T::zero(), T::zero()); r],
        }
    }

    /// Complex words actually allocated: `4 m r + r`.
    pub fn complex_words(&self) -> usize {
        self.b.data().len()
            + self.q.data().len()
            + self.t.data().len()
            + self.g.data().len()
            + self.z.len()
    }
}

/// Objective value, gradient panel, and resource instrumentation from one
/// gradient evaluation.
#[derive(Clone, Debug)]
pub struct GradientResult<T> {
    /// Objective at `B`.
    pub f: T,
    /// Gradient panel; see the module docs for the pairing convention.
    pub g: DenseMatrix<T>,
    /// Complex operations, forward pass included.
    pub flops: u64,
    /// Peak auxiliary complex words actually allocated.
    pub words: usize,
}

fn check_shapes<T: Real>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<()> {
    if a.rows() != b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "A has {} rows, B has {}",
            a.rows(),
            b.rows()
        )));
    }
    if b.cols() == 0 || b.cols() > b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "B is {}x{}; need 1 <= r <= m",
            b.rows(),
            b.cols()
        )));
    }
    if !a.all_finite() || !b.all_finite() {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Fills `g` with `A (A^H q_i)` column by column, accumulating
/// `sum_i ||A^H q_i||^2` on the way, then scales by `-1/f`. Works column-wise
/// against the columns of `A`, so neither `A A^H` nor `A^H Q` is ever
/// materialized.
fn seed_gradient<T: Real>(
    a: &DenseMatrix<T>,
    q: &DenseMatrix<T>,
    g: &mut DenseMatrix<T>,
    ctr: &mut FlopCounter,
) -> Result<T> {
    let r = q.cols();
    let n = a.cols();
    // A constant of the data matrix, computable once and reused across
    // gradient calls; not charged to the per-gradient count.
    let total = a.frob_norm_sqr();
    let mut captured = T::zero();
    for i in 0..r {
        let gi = g.col_mut(i);
        for v in gi.iter_mut() {
            *v = Complex::new(T::zero(), T::zero());
        }
        for k in 0..n {
            let s = dotc(a.col(k), q.col(i), ctr);
            captured += s.norm_sqr();
            axpy(s, a.col(k), gi, ctr);
        }
    }
    ctr.sqrts += 1;
    let f = (total - captured).max(T::zero()).sqrt();
    if f <= real::<T>(DEFAULT_GRAD_TOL_F) * total.sqrt() {
        return Err(Error::ObjectiveNearZero);
    }
    let scale = Complex::new(-T::one() / f, T::zero());
    ctr.divs += 1;
    for i in 0..r {
        scale_slice(scale, g.col_mut(i), ctr);
    }
    Ok(f)
}

/// Gradient of the projected objective over all entries of `B` by the
/// reverse-mode Modified Gram-Schmidt sweep.
///
/// For each column `i` from last to first, the deflation trajectory of that
/// column is recomputed from the stored `B` and `Q` panels into `T`, the
/// cotangent of `q_i` is pulled back through the normalization, and the
/// backward inner loop distributes it onto the earlier columns. Column `i` of
/// the returned panel then holds the full entrywise gradient.
pub fn gradient_amgs<T: Real>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<GradientResult<T>> {
    check_shapes(a, b)?;
    let (m, r) = (b.rows(), b.cols());
    let mut ctr = FlopCounter::new();
    let mut ws = GradientWorkspace::new(b);
    mgs_core(&ws.b, &mut ws.q, false, real(DEFAULT_RANK_TOL), &mut ctr)?;
    let f = seed_gradient(a, &ws.q, &mut ws.g, &mut ctr)?;

    for i in (0..r).rev() {
        // Recompute t_0..t_{i-1} for this column, caching z_j = q_j^H t_j.
        // t_i itself is only needed through its norm, and orthogonality gives
        // that directly: q_i^H t_i = q_i^H b_i, so the last deflation step is
        // never materialized.
        ws.t.col_mut(0).copy_from_slice(ws.b.col(i));
        for j in 0..i {
            let z = dotc(ws.q.col(j), ws.t.col(j), &mut ctr);
            ws.z[j] = z;
            if j + 1 < i {
                let (prev, cur) = ws.t.split_col_mut(j + 1);
                cur.copy_from_slice(&prev[j * m..(j + 1) * m]);
                axpy(-z, ws.q.col(j), cur, &mut ctr);
            }
        }
        let tau = dotc(ws.q.col(i), ws.b.col(i), &mut ctr).re;

        // Pull the cotangent of q_i back through the normalization.
        let c = dotc(ws.q.col(i), ws.g.col(i), &mut ctr);
        {
            let gi = ws.g.col_mut(i);
            let qi_start = i * m;
            let q_data = ws.q.data();
            ctr.muls += 2 * m as u64;
            ctr.adds += m as u64;
            ctr.divs += 1;
            let inv = T::one() / tau;
            for e in 0..m {
                gi[e] = (gi[e] - q_data[qi_start + e] * c) * inv;
            }
        }

        for j in (0..i).rev() {
            let alpha = dotc(ws.q.col(j), ws.g.col(i), &mut ctr);
            let zc = ws.z[j].conj();
            let ac = alpha.conj();
            {
                let (gj, gi) = ws.g.two_cols_mut(j, i);
                let tj = ws.t.col(j);
                ctr.muls += 2 * m as u64;
                ctr.adds += 2 * m as u64;
                for e in 0..m {
                    gj[e] = gj[e] - zc * gi[e] - ac * tj[e];
                }
            }
            axpy(-alpha, ws.q.col(j), ws.g.col_mut(i), &mut ctr);
        }
    }

    let words = ws.complex_words();
    debug_assert_eq!(words, 4 * m * r + r);
    Ok(GradientResult {
        f,
        g: ws.g,
        flops: ctr.total(),
        words,
    })
}

/// Classical Gram-Schmidt forward pass: every projection coefficient of
/// column `i` is taken against the original `b_i`, not the partially deflated
/// vector. Returns `Q` and the deflated norms, like
/// [`crate::matcore::mgs_orthonormalize`].
pub fn cgs_orthonormalize<T: Real>(b: &DenseMatrix<T>) -> Result<OrthoResult<T>> {
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
    let mut coeffs = vec![Complex::new(T::zero(), T::zero()); b.cols() * (b.cols() + 1) / 2];
    let mut ctr = FlopCounter::new();
    let t_norms = cgs_core(b, &mut q, &mut coeffs, real(DEFAULT_RANK_TOL), &mut ctr)?;
    Ok(OrthoResult { q, t_norms })
}

/// Packed upper-triangle index, `j <= i`.
#[inline]
fn tri(j: usize, i: usize) -> usize {
    i * (i + 1) / 2 + j
}

fn cgs_core<T: Real>(
    b: &DenseMatrix<T>,
    q: &mut DenseMatrix<T>,
    coeffs: &mut [Complex<T>],
    rank_tol: T,
    ctr: &mut FlopCounter,
) -> Result<Vec<T>> {
    let m = b.rows();
    let r = b.cols();
    let mut t_norms = Vec::with_capacity(r);
    for i in 0..r {
        let col_norm = nrm2(b.col(i), ctr);
        let (prev, u) = q.split_col_mut(i);
        u.copy_from_slice(b.col(i));
        for j in 0..i {
            let qj = &prev[j * m..(j + 1) * m];
            let z = dotc(qj, b.col(i), ctr);
            coeffs[tri(j, i)] = z;
            axpy(-z, qj, u, ctr);
        }
        let tau = nrm2(u, ctr);
        if tau <= rank_tol * col_norm {
            return Err(Error::RankDeficient { column: i });
        }
        coeffs[tri(i, i)] = Complex::new(tau, T::zero());
        ctr.divs += 1;
        scale_slice(Complex::new(T::one() / tau, T::zero()), u, ctr);
        t_norms.push(tau);
    }
    Ok(t_norms)
}

/// Gradient by the classical Gram-Schmidt variant.
///
/// Workspace is three `m x r` panels plus the `r(r+1)/2` stored projection
/// coefficients; the reverse sweep needs no trajectory recomputation because
/// every coefficient refers to the original columns. Not recommended on
/// ill-conditioned `B`: the forward orthogonality defect of CGS grows much
/// faster than MGS's.
pub fn gradient_ags<T: Real>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<GradientResult<T>> {
    check_shapes(a, b)?;
    let (m, r) = (b.rows(), b.cols());
    let mut ctr = FlopCounter::new();
    let mut wb = b.clone();
    let mut q = DenseMatrix::zeros(m, r);
    let mut g = DenseMatrix::zeros(m, r);
    let mut coeffs = vec![Complex::new(T::zero(), T::zero()); r * (r + 1) / 2];
    cgs_core(&wb, &mut q, &mut coeffs, real(DEFAULT_RANK_TOL), &mut ctr)?;
    let words = wb.data().len() + q.data().len() + g.data().len() + coeffs.len();
    debug_assert_eq!(words, 3 * m * r + r * (r + 1) / 2);
    let f = seed_gradient(a, &q, &mut g, &mut ctr)?;

    for i in (0..r).rev() {
        let tau = coeffs[tri(i, i)].re;
        // Normalization adjoint: g_i becomes the cotangent of the deflated u.
        let c = dotc(q.col(i), g.col(i), &mut ctr);
        {
            let gi = g.col_mut(i);
            let qi = q.col(i);
            ctr.muls += 2 * m as u64;
            ctr.adds += m as u64;
            ctr.divs += 1;
            let inv = T::one() / tau;
            for e in 0..m {
                gi[e] = (gi[e] - qi[e] * c) * inv;
            }
        }
        // Distribute onto earlier q's; the coefficient slots are reused to
        // hold alpha_j for the second pass.
        for j in 0..i {
            let alpha = dotc(q.col(j), g.col(i), &mut ctr);
            let zc = coeffs[tri(j, i)].conj();
            let ac = alpha.conj();
            {
                let (gj, gi) = g.two_cols_mut(j, i);
                let bi = wb.col(i);
                ctr.muls += 2 * m as u64;
                ctr.adds += 2 * m as u64;
                for e in 0..m {
                    gj[e] = gj[e] - zc * gi[e] - ac * bi[e];
                }
            }
            coeffs[tri(j, i)] = alpha;
        }
        // b_i is no longer needed by later (earlier-indexed) reverse steps, so
        // its panel slot receives the finished gradient column.
        wb.col_mut(i).copy_from_slice(g.col(i));
        for j in 0..i {
            let alpha = coeffs[tri(j, i)];
            axpy(-alpha, q.col(j), wb.col_mut(i), &mut ctr);
        }
    }

    Ok(GradientResult {
        f,
        g: wb,
        flops: ctr.total(),
        words,
    })
}

/// Forward evaluation (MGS plus objective) with its complex-operation count.
pub fn forward_eval_counted<T: Real>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<(T, u64)> {
    check_shapes(a, b)?;
    let mut ctr = FlopCounter::new();
    let mut q = DenseMatrix::zeros(b.rows(), b.cols());
    mgs_core(b, &mut q, false, real(DEFAULT_RANK_TOL), &mut ctr)?;
    let f = objective_counted(a, &q, &mut ctr)?;
    Ok((f, ctr.total()))
}

/// Central finite differences of the forward evaluation over every real
/// coordinate of `B`: `4 m r` forward evaluations in total.
///
/// The returned panel follows the same convention as the analytic routes:
/// real part `df/dRe(b_ij)`, imaginary part `df/dIm(b_ij)`. The step for each
/// coordinate is `h0 * (1 + |coordinate|)`.
pub fn gradient_fd<T: Real>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    h0: T,
) -> Result<DenseMatrix<T>> {
    check_shapes(a, b)?;
    if h0 <= T::zero() {
        return Err(Error::ShapeMismatch("FD step must be positive".into()));
    }
    let (m, r) = (b.rows(), b.cols());
    let mut work = b.clone();
    let mut q = DenseMatrix::zeros(m, r);
    let mut ctr = FlopCounter::new();
    let mut out = DenseMatrix::zeros(m, r);
    let mut eval = |w: &DenseMatrix<T>, q: &mut DenseMatrix<T>| -> Result<T> {
        mgs_core(w, q, false, real(DEFAULT_RANK_TOL), &mut ctr)?;
        objective_counted(a, q, &mut ctr)
    };
    let two = real::<T>(2.0);
    for j in 0..r {
        for i in 0..m {
            let base = b.get(i, j);
            let mut parts = [T::zero(); 2];
            for (comp, slot) in parts.iter_mut().enumerate() {
                let coord = if comp == 0 { base.re } else { base.im };
                let h = h0 * (T::one() + coord.abs());
                let delta = if comp == 0 {
                    Complex::new(h, T::zero())
                } else {
                    Complex::new(T::zero(), h)
                };
                work.set(i, j, base + delta);
                let fp = eval(&work, &mut q)?;
                work.set(i, j, base - delta);
                let fm = eval(&work, &mut q)?;
                work.set(i, j, base);
                *slot = (fp - fm) / (two * h);
            }
            out.set(i, j, Complex::new(parts[0], parts[1]));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// explicit block-system route
// ---------------------------------------------------------------------------

/// Kind of a nonzero block in the assembled linearization, following the
/// usual naming: `S` normalization, `V` coupling to an earlier orthonormal
/// column, `W` propagation from the previous deflation state (or the source
/// column), `I` the unit diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    S,
    V,
    W,
    I,
}

/// One nonzero block of the combined `[F, L]` matrix. Block columns `0..r`
/// are the columns of `B`; block columns `r..r + r(r+1)/2` are the
/// intermediates in evaluation order (for each source column: its deflation
/// states, then the orthonormal column).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockEntry {
    pub row: usize,
    pub col: usize,
    pub kind: BlockKind,
}

fn block_base(i: usize) -> usize {
    i * (i + 1) / 2
}

/// Nonzero-block pattern of the combined `[F, L]` matrix for `r` columns.
/// Every block row holds at most three nonzero blocks.
pub fn blocksystem_pattern(r: usize) -> Vec<BlockEntry> {
    let mut out = Vec::new();
    for i in 0..r {
        for s in 1..=i {
            let row = block_base(i) + s - 1;
            let j = s - 1;
            // previous state (the source column itself when s == 1)
            let prev_col = if s == 1 {
                i
            } else {
                r + block_base(i) + s - 2
            };
            out.push(BlockEntry {
                row,
                col: prev_col,
                kind: BlockKind::W,
            });
            out.push(BlockEntry {
                row,
                col: r + block_base(j) + j,
                kind: BlockKind::V,
            });
            out.push(BlockEntry {
                row,
                col: r + row,
                kind: BlockKind::I,
            });
        }
        let qrow = block_base(i) + i;
        let prev_col = if i == 0 { 0 } else { r + block_base(i) + i - 1 };
        out.push(BlockEntry {
            row: qrow,
            col: prev_col,
            kind: BlockKind::S,
        });
        out.push(BlockEntry {
            row: qrow,
            col: r + qrow,
            kind: BlockKind::I,
        });
    }
    out
}

/// Gradient by explicit assembly of the realified block-triangular
/// linearization and back-substitution of the transposed system.
///
/// Exact (no truncation beyond roundoff), but the system is materialized
/// densely, so the route is capped at `m <= 8`, `r <= 4` and serves as a
/// tiny-scale oracle for the reverse sweeps.
pub fn gradient_blocksystem<T: Real>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    check_shapes(a, b)?;
    let (m, r) = (b.rows(), b.cols());
    if m > BLOCKSYS_MAX_M || r > BLOCKSYS_MAX_R {
        return Err(Error::SizeCap {
            max_m: BLOCKSYS_MAX_M,
            max_r: BLOCKSYS_MAX_R,
        });
    }
    let mut ctr = FlopCounter::new();
    let mut q = DenseMatrix::zeros(m, r);
    mgs_core(b, &mut q, false, real(DEFAULT_RANK_TOL), &mut ctr)?;
    // Objective and the per-column seed -(1/f) A (A^H q_i).
    let mut seeds = DenseMatrix::zeros(m, r);
    let f = seed_gradient(a, &q, &mut seeds, &mut ctr)?;
    let _ = f;

    let nb = r * (r + 1) / 2;
    let nn = 2 * m * nb; // realified dimension of the intermediate space
    let bn = 2 * m * r; // realified dimension of the B space
    let mut lmat = vec![T::zero(); nn * nn];
    let mut fmat = vec![T::zero(); nn * bn];
    for k in 0..nn {
        lmat[k * nn + k] = T::one();
    }

    // Applies a real-linear map to the 2m realified basis directions and adds
    // `sign * map` into the given block of `target` (row-major, `ncols` wide).
    let place = |target: &mut [T],
                     ncols: usize,
                     row_block: usize,
                     col_block: usize,
                     sign: T,
                     map: &dyn Fn(&[Complex<T>]) -> Vec<Complex<T>>| {
        let mut e = vec![Complex::new(T::zero(), T::zero()); m];
        for d in 0..2 * m {
            for v in e.iter_mut() {
                *v = Complex::new(T::zero(), T::zero());
            }
            if d < m {
                e[d] = Complex::new(T::one(), T::zero());
            } else {
                e[d - m] = Complex::new(T::zero(), T::one());
            }
            let v = map(&e);
            let col = 2 * m * col_block + d;
            for x in 0..m {
                target[(2 * m * row_block + x) * ncols + col] += sign * v[x].re;
                target[(2 * m * row_block + m + x) * ncols + col] += sign * v[x].im;
            }
        }
    };

    // Forward trajectory per column, assembling blocks on the way.
    let mut traj = vec![vec![Complex::new(T::zero(), T::zero()); m]; r + 1];
    for i in 0..r {
        traj[0].copy_from_slice(b.col(i));
        for s in 1..=i {
            let j = s - 1;
            let qj: Vec<Complex<T>> = q.col(j).to_vec();
            let tprev = traj[s - 1].clone();
            let z = dotc(&qj, &tprev, &mut ctr);
            {
                let (head, tail) = traj.split_at_mut(s);
                tail[0].copy_from_slice(&head[s - 1]);
                axpy(-z, &qj, &mut tail[0], &mut ctr);
            }
            let row = block_base(i) + s - 1;
            // d t_s = P_j d t_{s-1} - (z * dq_j + q_j * (dq_j^H t_{s-1}))
            let proj = {
                let qj = qj.clone();
                move |dv: &[Complex<T>]| -> Vec<Complex<T>> {
                    let mut c = FlopCounter::new();
                    let w = dotc(&qj, dv, &mut c);
                    let mut out = dv.to_vec();
                    axpy(-w, &qj, &mut out, &mut c);
                    out
                }
            };
            let vmap = {
                let qj = qj.clone();
                let tprev = tprev.clone();
                move |dq: &[Complex<T>]| -> Vec<Complex<T>> {
                    let mut c = FlopCounter::new();
                    let w = dotc(dq, &tprev, &mut c); // dq^H t_prev
                    let mut out: Vec<Complex<T>> = dq.iter().map(|v| *v * z).collect();
                    axpy(w, &qj, &mut out, &mut c);
                    out
                }
            };
            if s == 1 {
                place(&mut fmat, bn, row, i, -T::one(), &proj);
            } else {
                let prev_block = block_base(i) + s - 2;
                place(&mut lmat, nn, row, prev_block, -T::one(), &proj);
            }
            let qj_block = block_base(j) + j;
            place(&mut lmat, nn, row, qj_block, T::one(), &vmap);
        }
        // q_i = t_i / ||t_i||
        let tau = nrm2(&traj[i], &mut ctr);
        let qi: Vec<Complex<T>> = q.col(i).to_vec();
        let smap = move |dt: &[Complex<T>]| -> Vec<Complex<T>> {
            let mut c = FlopCounter::new();
            let w = dotc(&qi, dt, &mut c).re;
            let inv = T::one() / tau;
            let mut out = dt.to_vec();
            for (o, qv) in out.iter_mut().zip(&qi) {
                *o = (*o - *qv * Complex::new(w, T::zero())) * inv;
            }
            out
        };
        let qrow = block_base(i) + i;
        if i == 0 {
            place(&mut fmat, bn, qrow, 0, -T::one(), &smap);
        } else {
            let prev_block = block_base(i) + i - 1;
            place(&mut lmat, nn, qrow, prev_block, -T::one(), &smap);
        }
    }

    // Realified seed vector: nonzero only on the q_i block rows.
    let mut h = vec![T::zero(); nn];
    for i in 0..r {
        let row = 2 * m * (block_base(i) + i);
        for x in 0..m {
            h[row + x] = seeds.get(x, i).re;
            h[row + m + x] = seeds.get(x, i).im;
        }
    }

    // Solve L^T y = h by back-substitution (L is unit lower triangular).
    let mut y = vec![T::zero(); nn];
    for row in (0..nn).rev() {
        let mut v = h[row];
        for c in row + 1..nn {
            v = v - lmat[c * nn + row] * y[c];
        }
        y[row] = v;
    }

    // g = -F^T y, mapped back to the complex panel.
    let mut g = DenseMatrix::zeros(m, r);
    for i in 0..r {
        for x in 0..m {
            let mut gre = T::zero();
            let mut gim = T::zero();
            for row in 0..nn {
                gre = gre - fmat[row * bn + 2 * m * i + x] * y[row];
                gim = gim - fmat[row * bn + 2 * m * i + m + x] * y[row];
            }
            g.set(x, i, Complex::new(gre, gim));
        }
    }
    Ok(g)
}

/// Analytic peak auxiliary complex-word count for each method as implemented
/// here.
///
/// * AMGS: the four panels plus the scalar buffer, `4 m r + r`; independent
///   of `n`.
/// * AGS: three panels plus the stored coefficients,
///   `3 m r + r (r + 1) / 2`.
/// * FD: the perturbed copy of `B` plus a couple of scalars, `m r + 2`.
/// * Block system: dense block-triangular assembly bound,
///   `m^2 r (r + 1) / 2`, listed for comparison only.
pub fn account_words(method: GradientMethod, m: usize, _n: usize, r: usize) -> usize {
    match method {
        GradientMethod::Fd => m * r + 2,
        GradientMethod::Ags => 3 * m * r + r * (r + 1) / 2,
        GradientMethod::Amgs => 4 * m * r + r,
        GradientMethod::Blocksys => m * m * r * (r + 1) / 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xorshift64Star;

    fn hand_instance() -> (DenseMatrix<f64>, DenseMatrix<f64>) {
        let a = DenseMatrix::from_fn(2, 1, |i, _| {
            Complex::new(if i == 0 { 1.0 } else { 0.0 }, 0.0)
        });
        let b = DenseMatrix::from_fn(2, 1, |_, _| Complex::new(1.0, 0.0));
        (a, b)
    }

    #[test]
    fn amgs_hand_case() {
        let (a, b) = hand_instance();
        let res = gradient_amgs(&a, &b).unwrap();
        let k = 2.0_f64.powf(-1.5);
        assert!((res.f - 1.0 / 2.0_f64.sqrt()).abs() < 1e-14);
        assert!((res.g.get(0, 0).re + k).abs() < 1e-14);
        assert!((res.g.get(1, 0).re - k).abs() < 1e-14);
        assert!(res.g.get(0, 0).im.abs() < 1e-14);
        assert!(res.g.get(1, 0).im.abs() < 1e-14);
    }

    #[test]
    fn fd_hand_case() {
        let (a, b) = hand_instance();
        let g = gradient_fd(&a, &b, 1e-6).unwrap();
        let k = 2.0_f64.powf(-1.5);
        assert!((g.get(0, 0).re + k).abs() < 1e-8);
        assert!((g.get(1, 0).re - k).abs() < 1e-8);
        assert!(g.get(0, 0).im.abs() < 1e-8);
        assert!(g.get(1, 0).im.abs() < 1e-8);
    }

    #[test]
    fn amgs_matches_fd_on_seeded_instance() {
        let mut rng = Xorshift64Star::new(1234);
        let a: DenseMatrix<f64> = rng.matrix(12, 6, true);
        let b: DenseMatrix<f64> = rng.matrix(12, 3, true);
        let res = gradient_amgs(&a, &b).unwrap();
        let fd = gradient_fd(&a, &b, 1e-6).unwrap();
        let scale = fd.max_abs();
        assert!(res.g.max_abs_diff(&fd) / scale < 1e-7);
    }

    #[test]
    fn ags_matches_amgs_well_conditioned() {
        let mut rng = Xorshift64Star::new(99);
        let a: DenseMatrix<f64> = rng.matrix(15, 7, true);
        let b: DenseMatrix<f64> = rng.matrix(15, 4, true);
        let am = gradient_amgs(&a, &b).unwrap();
        let ag = gradient_ags(&a, &b).unwrap();
        assert!(am.g.max_abs_diff(&ag.g) / am.g.max_abs() < 1e-10);
        assert!((am.f - ag.f).abs() < 1e-12);
    }

    #[test]
    fn ags_rank_one_matches_amgs_to_rounding() {
        // At r = 1 both routes run the same algorithm except for the
        // normalization constant: AGS reuses the forward nrm2, AMGS recovers
        // it as Re(q^H b). The two differ only in last-ulp rounding.
        let mut rng = Xorshift64Star::new(5);
        let a: DenseMatrix<f64> = rng.matrix(9, 4, true);
        let b: DenseMatrix<f64> = rng.matrix(9, 1, true);
        let am = gradient_amgs(&a, &b).unwrap();
        let ag = gradient_ags(&a, &b).unwrap();
        assert!(am.g.max_abs_diff(&ag.g) <= 4.0 * f64::EPSILON * am.g.max_abs());
        assert!((am.f - ag.f).abs() <= 4.0 * f64::EPSILON * am.f);
    }

    #[test]
    fn blocksystem_matches_amgs_tiny() {
        let mut rng = Xorshift64Star::new(77);
        let a: DenseMatrix<f64> = rng.matrix(3, 2, true);
        let b: DenseMatrix<f64> = rng.matrix(3, 2, true);
        let am = gradient_amgs(&a, &b).unwrap();
        let bs = gradient_blocksystem(&a, &b).unwrap();
        assert!(am.g.max_abs_diff(&bs) / am.g.max_abs() < 1e-10);
    }

    #[test]
    fn blocksystem_rank_one_closed_form() {
        // For r = 1 the system collapses to g = S^T applied to the seed.
        let mut rng = Xorshift64Star::new(3);
        let a: DenseMatrix<f64> = rng.matrix(4, 3, true);
        let b: DenseMatrix<f64> = rng.matrix(4, 1, true);
        let bs = gradient_blocksystem(&a, &b).unwrap();
        let am = gradient_amgs(&a, &b).unwrap();
        assert!(bs.max_abs_diff(&am.g) / am.g.max_abs() < 1e-12);
    }

    #[test]
    fn blocksystem_size_cap() {
        let a = DenseMatrix::<f64>::zeros(9, 2);
        let b = DenseMatrix::<f64>::identity(9);
        assert!(matches!(
            gradient_blocksystem(&a, &b),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn pattern_has_at_most_three_blocks_per_row() {
        for r in 1..=4 {
            let pat = blocksystem_pattern(r);
            let nb = r * (r + 1) / 2;
            for row in 0..nb {
                let count = pat.iter().filter(|e| e.row == row).count();
                assert!(count <= 3, "row {row} has {count} blocks");
            }
        }
    }

    #[test]
    fn objective_near_zero_guard() {
        // A lies exactly in the span of b.
        let b = DenseMatrix::from_fn(3, 2, |i, j| {
            Complex::new((i + j) as f64 + 1.0, (i as f64) - (j as f64))
        });
        let a = b.clone();
        assert!(matches!(
            gradient_amgs(&a, &b),
            Err(Error::ObjectiveNearZero)
        ));
    }

    #[test]
    fn scale_invariance_of_gradient() {
        let mut rng = Xorshift64Star::new(2024);
        let a: DenseMatrix<f64> = rng.matrix(10, 5, true);
        let b: DenseMatrix<f64> = rng.matrix(10, 3, true);
        let res = gradient_amgs(&a, &b).unwrap();
        for i in 0..3 {
            let mut ctr = FlopCounter::new();
            let pair = dotc(b.col(i), res.g.col(i), &mut ctr);
            let scale = nrm2(b.col(i), &mut ctr) * nrm2(res.g.col(i), &mut ctr);
            assert!(pair.re.abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn account_words_examples() {
        assert_eq!(account_words(GradientMethod::Amgs, 1000, 100, 100), 400_100);
        assert_eq!(
            account_words(GradientMethod::Amgs, 1000, 100, 100),
            account_words(GradientMethod::Amgs, 1000, 10, 100)
        );
        assert_eq!(account_words(GradientMethod::Ags, 100, 10, 10), 3055);
    }

    #[test]
    fn measured_words_match_analytic() {
        let mut rng = Xorshift64Star::new(11);
        let a: DenseMatrix<f64> = rng.matrix(20, 8, true);
        let b: DenseMatrix<f64> = rng.matrix(20, 5, true);
        let am = gradient_amgs(&a, &b).unwrap();
        assert_eq!(am.words, account_words(GradientMethod::Amgs, 20, 8, 5));
        let ag = gradient_ags(&a, &b).unwrap();
        assert_eq!(ag.words, account_words(GradientMethod::Ags, 20, 8, 5));
    }
}
