//! Fixed xorshift64* generator so generated instances are bit-reproducible
//! across platforms and language bindings.

use num_complex::Complex;

use crate::matcore::DenseMatrix;
use crate::scalar::Real;

const MULT: u64 = 2685821657736338717;
/// Replacement state for the all-zero seed, which is a fixed point of the
/// xorshift update.
const ZERO_SEED: u64 = 0x9E37_79B9_7F4A_7C15;

/// xorshift64* with 64-bit state: `x ^= x >> 12; x ^= x << 25; x ^= x >> 27`,
/// output `x * 2685821657736338717`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Xorshift64Star {
    state: u64,
}

impl Xorshift64Star {
    pub fn new(seed: u64) -> Self {
        Self {
            state: if seed == 0 { ZERO_SEED } else { seed },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(MULT)
    }

    /// Uniform value in `[-1, 1)`: the top 53 output bits scaled by `2^-52`,
    /// shifted down by one.
    pub fn next_unit(&mut self) -> f64 {
        let bits = self.next_u64() >> 11;
        bits as f64 / (1u64 << 52) as f64 - 1.0
    }

    pub fn next_real<T: Real>(&mut self) -> T {
        T::from_f64(self.next_unit()).unwrap()
    }

    /// Matrix with i.i.d. uniform `[-1, 1)` components, column-major order,
    /// real part before imaginary part.
    pub fn matrix<T: Real>(&mut self, rows: usize, cols: usize, complex: bool) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                let re = self.next_real();
                let im = if complex { self.next_real() } else { T::zero() };
                m.set(i, j, Complex::new(re, im));
            }
        }
        m
    }

    pub fn vector<T: Real>(&mut self, len: usize) -> Vec<T> {
        (0..len).map(|_| self.next_real()).collect()
    }
}
