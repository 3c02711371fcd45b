//! Structured parameterizations `B(sigma)` and the chain rule that pulls the
//! entrywise gradient panel back to a gradient over the real parameters.
//!
//! Every model maps a real parameter vector to the `m x r` factor and exposes
//! the exact linear adjoint of that map: for a gradient panel `G` in the
//! convention of [`crate::adjoint`],
//!
//! ```text
//! dsigma_l = sum_ij [ Re(G_ij) * dRe(b_ij)/dsigma_l + Im(G_ij) * dIm(b_ij)/dsigma_l ]
//! ```

use num_complex::Complex;

use crate::adjoint::{gradient_amgs, gradient_fd, GradientMethod, DEFAULT_FD_STEP};
use crate::error::{Error, Result};
use crate::matcore::{mgs_orthonormalize, objective_value, DenseMatrix};
use crate::scalar::{real, Real};

/// A structured factor: builds `B` from `sigma` and pulls a `B`-gradient
/// back to a `sigma`-gradient.
///
/// `build` must be deterministic in `sigma` and `adjoint_sigma` linear in the
/// gradient panel for fixed `sigma`.
pub trait ParamModel<T: Real> {
    /// Row count of the built factor.
    fn rows(&self) -> usize;
    /// Column count of the built factor.
    fn rank(&self) -> usize;
    /// Number of real parameters.
    fn param_count(&self) -> usize;
    fn build(&self, sigma: &[T]) -> Result<DenseMatrix<T>>;
    fn adjoint_sigma(&self, sigma: &[T], g: &DenseMatrix<T>) -> Result<Vec<T>>;
}

fn check_sigma<T: Real>(sigma: &[T], expected: usize) -> Result<()> {
    if sigma.len() != expected {
        return Err(Error::ParamLength {
            expected,
            got: sigma.len(),
        });
    }
    if !sigma.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Columns are Kronecker products of parameter vector pairs:
/// column `i` is `p_i (x) q_i` with `(p (x) q)[a*n + c] = p[a] * q[c]`,
/// giving a real `n^2 x R` factor from `2 n R` parameters.
///
/// The parameter layout is `[p_1(n), q_1(n), ..., p_R(n), q_R(n)]`.
#[derive(Clone, Debug)]
pub struct KroneckerModel {
    base_n: usize,
    pairs: usize,
}

impl KroneckerModel {
    pub fn new(base_n: usize, pairs: usize) -> Self {
        assert!(base_n > 0 && pairs > 0);
        Self { base_n, pairs }
    }

    pub fn base_n(&self) -> usize {
        self.base_n
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }
}

impl<T: Real> ParamModel<T> for KroneckerModel {
    fn rows(&self) -> usize {
        self.base_n * self.base_n
    }

    fn rank(&self) -> usize {
        self.pairs
    }

    fn param_count(&self) -> usize {
        2 * self.base_n * self.pairs
    }

    fn build(&self, sigma: &[T]) -> Result<DenseMatrix<T>> {
        check_sigma(sigma, ParamModel::<T>::param_count(self))?;
        let n = self.base_n;
        let mut b = DenseMatrix::zeros(n * n, self.pairs);
        for i in 0..self.pairs {
            let p = &sigma[2 * n * i..2 * n * i + n];
            let q = &sigma[2 * n * i + n..2 * n * (i + 1)];
            let col = b.col_mut(i);
            for a in 0..n {
                for c in 0..n {
                    col[a * n + c] = Complex::new(p[a] * q[c], T::zero());
                }
            }
        }
        Ok(b)
    }

    fn adjoint_sigma(&self, sigma: &[T], g: &DenseMatrix<T>) -> Result<Vec<T>> {
        check_sigma(sigma, ParamModel::<T>::param_count(self))?;
        let n = self.base_n;
        if g.rows() != n * n || g.cols() != self.pairs {
            return Err(Error::ShapeMismatch(format!(
                "gradient panel {}x{}, expected {}x{}",
                g.rows(),
                g.cols(),
                n * n,
                self.pairs
            )));
        }
        let mut ds = vec![T::zero(); ParamModel::<T>::param_count(self)];
        for i in 0..self.pairs {
            let p = &sigma[2 * n * i..2 * n * i + n];
            let q = &sigma[2 * n * i + n..2 * n * (i + 1)];
            let gi = g.col(i);
            // Reshape the column gradient to an n x n panel M (same ordering
            // as build); dp = M q, dq = M^T p, on real parts only since the
            // built entries are real.
            let (dp, dq) = ds[2 * n * i..2 * n * (i + 1)].split_at_mut(n);
            for a in 0..n {
                for c in 0..n {
                    let m_ac = gi[a * n + c].re;
                    dp[a] += m_ac * q[c];
                    dq[c] += m_ac * p[a];
                }
            }
        }
        Ok(ds)
    }
}

/// Every entry of the `K x L` factor is a unit-modulus complex exponential
/// `e^{i sigma_kl}`; the phases are the parameters, laid out column-major
/// (`sigma[l*K + k]`).
#[derive(Clone, Debug)]
pub struct ExponentialModel {
    rows_k: usize,
    cols_l: usize,
}

impl ExponentialModel {
    pub fn new(rows_k: usize, cols_l: usize) -> Self {
        assert!(rows_k > 0 && cols_l > 0);
        Self { rows_k, cols_l }
    }
}

impl<T: Real> ParamModel<T> for ExponentialModel {
    fn rows(&self) -> usize {
        self.rows_k
    }

    fn rank(&self) -> usize {
        self.cols_l
    }

    fn param_count(&self) -> usize {
        self.rows_k * self.cols_l
    }

    fn build(&self, sigma: &[T]) -> Result<DenseMatrix<T>> {
        check_sigma(sigma, ParamModel::<T>::param_count(self))?;
        let k_rows = self.rows_k;
        Ok(DenseMatrix::from_fn(k_rows, self.cols_l, |k, l| {
            let phase = sigma[l * k_rows + k];
            Complex::new(phase.cos(), phase.sin())
        }))
    }

    fn adjoint_sigma(&self, sigma: &[T], g: &DenseMatrix<T>) -> Result<Vec<T>> {
        check_sigma(sigma, ParamModel::<T>::param_count(self))?;
        if g.rows() != self.rows_k || g.cols() != self.cols_l {
            return Err(Error::ShapeMismatch(format!(
                "gradient panel {}x{}, expected {}x{}",
                g.rows(),
                g.cols(),
                self.rows_k,
                self.cols_l
            )));
        }
        let k_rows = self.rows_k;
        let mut ds = vec![T::zero(); ParamModel::<T>::param_count(self)];
        // d(e^{i s})/ds = i e^{i s}: the pairing reduces to Im(e^{-is} G).
        for l in 0..self.cols_l {
            let gl = g.col(l);
            for k in 0..k_rows {
                let phase = sigma[l * k_rows + k];
                let e = Complex::new(phase.cos(), -phase.sin());
                ds[l * k_rows + k] = (e * gl[k]).im;
            }
        }
        Ok(ds)
    }
}

/// Unstructured factor: the parameters are all `2 m r` real coordinates of
/// `B` directly, interleaved `(re, im)` in column-major entry order. Lets the
/// solver run unstructured and anchors oracle tests.
#[derive(Clone, Debug)]
pub struct FreeModel {
    m: usize,
    r: usize,
}

impl FreeModel {
    pub fn new(m: usize, r: usize) -> Self {
        assert!(m > 0 && r > 0);
        Self { m, r }
    }

    /// Inverse of `build`: matrix to parameter vector.
    pub fn flatten<T: Real>(&self, b: &DenseMatrix<T>) -> Vec<T> {
        let mut out = Vec::with_capacity(2 * self.m * self.r);
        for j in 0..self.r {
            for v in b.col(j) {
                out.push(v.re);
                out.push(v.im);
            }
        }
        out
    }
}

impl<T: Real> ParamModel<T> for FreeModel {
    fn rows(&self) -> usize {
        self.m
    }

    fn rank(&self) -> usize {
        self.r
    }

    fn param_count(&self) -> usize {
        2 * self.m * self.r
    }

    fn build(&self, sigma: &[T]) -> Result<DenseMatrix<T>> {
        check_sigma(sigma, ParamModel::<T>::param_count(self))?;
        let m = self.m;
        Ok(DenseMatrix::from_fn(m, self.r, |i, j| {
            let at = 2 * (j * m + i);
            Complex::new(sigma[at], sigma[at + 1])
        }))
    }

    fn adjoint_sigma(&self, sigma: &[T], g: &DenseMatrix<T>) -> Result<Vec<T>> {
        check_sigma(sigma, ParamModel::<T>::param_count(self))?;
        if g.rows() != self.m || g.cols() != self.r {
            return Err(Error::ShapeMismatch(format!(
                "gradient panel {}x{}, expected {}x{}",
                g.rows(),
                g.cols(),
                self.m,
                self.r
            )));
        }
        Ok(self.flatten(g))
    }
}

/// Forward-only objective of the composed problem at `sigma`.
pub fn objective_of<T: Real>(
    model: &dyn ParamModel<T>,
    a: &DenseMatrix<T>,
    sigma: &[T],
) -> Result<T> {
    let b = model.build(sigma)?;
    let ortho = mgs_orthonormalize(&b)?;
    objective_value(a, &ortho.q)
}

/// Objective and `sigma`-gradient at `sigma`: build, entrywise gradient by
/// the reverse-MGS sweep, then the model adjoint.
pub fn value_and_gradient<T: Real>(
    model: &dyn ParamModel<T>,
    a: &DenseMatrix<T>,
    sigma: &[T],
) -> Result<(T, Vec<T>)> {
    value_and_gradient_with(model, a, sigma, GradientMethod::Amgs)
}

/// As [`value_and_gradient`] with an explicit choice of the entrywise
/// gradient route.
pub fn value_and_gradient_with<T: Real>(
    model: &dyn ParamModel<T>,
    a: &DenseMatrix<T>,
    sigma: &[T],
    method: GradientMethod,
) -> Result<(T, Vec<T>)> {
    let b = model.build(sigma)?;
    let (f, panel) = match method {
        GradientMethod::Amgs => {
            let res = gradient_amgs(a, &b)?;
            (res.f, res.g)
        }
        GradientMethod::Ags => {
            let res = crate::adjoint::gradient_ags(a, &b)?;
            (res.f, res.g)
        }
        GradientMethod::Fd => {
            let ortho = mgs_orthonormalize(&b)?;
            let f = objective_value(a, &ortho.q)?;
            let panel = gradient_fd(a, &b, real(DEFAULT_FD_STEP))?;
            (f, panel)
        }
        GradientMethod::Blocksys => {
            let ortho = mgs_orthonormalize(&b)?;
            let f = objective_value(a, &ortho.q)?;
            let panel = crate::adjoint::gradient_blocksystem(a, &b)?;
            (f, panel)
        }
    };
    let ds = model.adjoint_sigma(sigma, &panel)?;
    Ok((f, ds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xorshift64Star;

    #[test]
    fn kronecker_build_ordering() {
        let model = KroneckerModel::new(2, 1);
        let sigma = [1.0_f64, 2.0, 3.0, 4.0];
        let b = model.build(&sigma).unwrap();
        let col: Vec<f64> = b.col(0).iter().map(|c| c.re).collect();
        assert_eq!(col, vec![3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn kronecker_adjoint_hand_case() {
        let model = KroneckerModel::new(2, 1);
        let sigma = [1.0_f64, 2.0, 3.0, 4.0];
        let mut g = DenseMatrix::zeros(4, 1);
        g.set(0, 0, Complex::new(1.0, 0.0));
        let ds = model.adjoint_sigma(&sigma, &g).unwrap();
        assert_eq!(ds, vec![3.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn exponential_build_at_zero_is_all_ones() {
        let model = ExponentialModel::new(3, 2);
        let sigma = vec![0.0_f64; 6];
        let b = model.build(&sigma).unwrap();
        for v in b.data() {
            assert_eq!(*v, Complex::new(1.0, 0.0));
        }
    }

    #[test]
    fn exponential_unit_modulus() {
        let model = ExponentialModel::new(4, 2);
        let mut rng = Xorshift64Star::new(8);
        let sigma: Vec<f64> = rng.vector(8).iter().map(|v: &f64| v * 3.0).collect();
        let b = model.build(&sigma).unwrap();
        for v in b.data() {
            assert!((v.norm() - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn free_model_round_trip() {
        let model = FreeModel::new(3, 2);
        let mut rng = Xorshift64Star::new(21);
        let b: DenseMatrix<f64> = rng.matrix(3, 2, true);
        let sigma = model.flatten(&b);
        let rebuilt = model.build(&sigma).unwrap();
        assert_eq!(rebuilt, b);
    }

    #[test]
    fn free_adjoint_is_flatten() {
        let model = FreeModel::new(3, 2);
        let mut rng = Xorshift64Star::new(22);
        let b: DenseMatrix<f64> = rng.matrix(3, 2, true);
        let g: DenseMatrix<f64> = rng.matrix(3, 2, true);
        let sigma = model.flatten(&b);
        assert_eq!(model.adjoint_sigma(&sigma, &g).unwrap(), model.flatten(&g));
    }

    #[test]
    fn param_length_checked() {
        let model = KroneckerModel::new(2, 1);
        let sigma = [1.0_f64; 3];
        assert!(matches!(
            model.build(&sigma),
            Err(Error::ParamLength { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn value_and_gradient_free_is_composition() {
        let model = FreeModel::new(6, 2);
        let mut rng = Xorshift64Star::new(31);
        let a: DenseMatrix<f64> = rng.matrix(6, 4, true);
        let b: DenseMatrix<f64> = rng.matrix(6, 2, true);
        let sigma = model.flatten(&b);
        let (f, ds) = value_and_gradient(&model, &a, &sigma).unwrap();
        let res = gradient_amgs(&a, &b).unwrap();
        assert_eq!(f, res.f);
        assert_eq!(ds, model.flatten(&res.g));
    }
}
