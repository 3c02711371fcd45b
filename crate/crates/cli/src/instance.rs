//! Shared problem construction: model selection flags and seeded planted
//! instances. Generation order is fixed (ground-truth sigma, then C, then the
//! noise matrix) so every consumer of a seed sees the same instance.

use clap::Args;
use num_complex::Complex;
use varproj_core::matcore::DenseMatrix;
use varproj_core::rng::Xorshift64Star;
use varproj_core::structure::{ExponentialModel, FreeModel, KroneckerModel, ParamModel};

use crate::CmdError;

#[derive(Args, Clone, Debug)]
pub struct ModelArgs {
    /// Structure model for B.
    #[arg(long, default_value = "kronecker", value_parser = ["free", "kronecker", "exponential"])]
    pub model: String,

    /// Rows of A and B (free model).
    #[arg(long, default_value_t = 8)]
    pub m: usize,

    /// Columns of A; defaults to the model rank.
    #[arg(long)]
    pub n: Option<usize>,

    /// Rank / columns of B (free model).
    #[arg(long, default_value_t = 2)]
    pub r: usize,

    /// Kronecker base dimension (B has base-n squared rows).
    #[arg(long, default_value_t = 2)]
    pub base_n: usize,

    /// Kronecker pair count.
    #[arg(long = "R", default_value_t = 2)]
    pub pairs: usize,

    /// Exponential model row count.
    #[arg(long = "K", default_value_t = 8)]
    pub k_rows: usize,

    /// Exponential model column count.
    #[arg(long = "L", default_value_t = 2)]
    pub l_cols: usize,
}

impl ModelArgs {
    pub fn build(&self) -> Result<Box<dyn ParamModel<f64>>, CmdError> {
        let model: Box<dyn ParamModel<f64>> = match self.model.as_str() {
            "free" => {
                if self.m == 0 || self.r == 0 || self.r > self.m {
                    return Err(CmdError::input(format!(
                        "free model needs 0 < r <= m, got m={} r={}",
                        self.m, self.r
                    )));
                }
                Box::new(FreeModel::new(self.m, self.r))
            }
            "kronecker" => {
                if self.base_n == 0 || self.pairs == 0 || self.pairs > self.base_n * self.base_n {
                    return Err(CmdError::input(format!(
                        "kronecker model needs 0 < R <= base-n^2, got base-n={} R={}",
                        self.base_n, self.pairs
                    )));
                }
                Box::new(KroneckerModel::new(self.base_n, self.pairs))
            }
            "exponential" => {
                if self.k_rows == 0 || self.l_cols == 0 || self.l_cols > self.k_rows {
                    return Err(CmdError::input(format!(
                        "exponential model needs 0 < L <= K, got K={} L={}",
                        self.k_rows, self.l_cols
                    )));
                }
                Box::new(ExponentialModel::new(self.k_rows, self.l_cols))
            }
            other => return Err(CmdError::input(format!("unknown model {other:?}"))),
        };
        Ok(model)
    }

    pub fn data_cols(&self, model: &dyn ParamModel<f64>) -> usize {
        self.n.unwrap_or_else(|| model.rank())
    }
}

pub struct Planted {
    pub a: DenseMatrix<f64>,
    pub sigma_star: Vec<f64>,
    /// Generator state after the instance draw; subsequent draws (such as a
    /// starting point) continue this stream.
    pub rng: Xorshift64Star,
}

/// Builds `A = B(sigma*) C^H + noise E` with every factor drawn from the
/// seeded stream in a fixed order.
pub fn planted(
    model: &dyn ParamModel<f64>,
    n: usize,
    seed: u64,
    noise: f64,
) -> Result<Planted, CmdError> {
    let mut rng = Xorshift64Star::new(seed);
    let sigma_star: Vec<f64> = rng.vector(model.param_count());
    let b = model.build(&sigma_star)?;
    let c: DenseMatrix<f64> = rng.matrix(n, b.cols(), true);
    let mut a = b.matmul(&c.conj_transpose())?;
    if noise > 0.0 {
        let e: DenseMatrix<f64> = rng.matrix(a.rows(), a.cols(), true);
        a = DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| {
            a.get(i, j) + e.get(i, j) * Complex::new(noise, 0.0)
        });
    }
    Ok(Planted { a, sigma_star, rng })
}

/// Unstructured dense pair for gradient checks and benchmarks: A then B,
/// both complex uniform.
pub fn dense_pair(seed: u64, m: usize, n: usize, r: usize) -> (DenseMatrix<f64>, DenseMatrix<f64>) {
    let mut rng = Xorshift64Star::new(seed);
    let a = rng.matrix(m, n, true);
    let b = rng.matrix(m, r, true);
    (a, b)
}
