//! Randomized invariants over seeded instances: orthonormalization quality,
//! the two objective routes, projection geometry, and gradient structure.

use num_complex::Complex;
use proptest::prelude::*;
use varproj_core::adjoint::{gradient_ags, gradient_amgs};
use varproj_core::matcore::{
    mgs_orthonormalize, objective_value, projection_residual, recover_c, DenseMatrix,
};
use varproj_core::rng::Xorshift64Star;

/// Dimensions kept small enough that every property runs in milliseconds but
/// large enough to exercise the deflation chain.
fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (3usize..14, 1usize..8).prop_flat_map(|(m, n)| (Just(m), Just(n), 1..m))
}

fn instance(seed: u64, m: usize, n: usize, r: usize) -> (DenseMatrix<f64>, DenseMatrix<f64>) {
    let mut rng = Xorshift64Star::new(seed);
    (rng.matrix(m, n, true), rng.matrix(m, r, true))
}

fn ortho_defect(q: &DenseMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..q.cols() {
        for j in 0..q.cols() {
            let mut acc = Complex::new(0.0, 0.0);
            for k in 0..q.rows() {
                acc += q.get(k, i).conj() * q.get(k, j);
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).norm());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mgs_produces_orthonormal_columns((m, _n, r) in dims(), seed in 1u64..1 << 48) {
        let (_, b) = instance(seed, m, 1, r);
        let ortho = mgs_orthonormalize(&b).unwrap();
        prop_assert!(ortho_defect(&ortho.q) < 1e-13);
    }

    #[test]
    fn objective_routes_agree((m, n, r) in dims(), seed in 1u64..1 << 48) {
        let (a, b) = instance(seed, m, n, r);
        let q = mgs_orthonormalize(&b).unwrap().q;
        let radical = objective_value(&a, &q).unwrap();
        let residual = projection_residual(&a, &q).unwrap();
        prop_assert!((radical - residual).abs() <= 1e-10 * a.frob_norm());
    }

    #[test]
    fn captured_and_residual_energies_are_pythagorean((m, n, r) in dims(), seed in 1u64..1 << 48) {
        let (a, b) = instance(seed, m, n, r);
        let q = mgs_orthonormalize(&b).unwrap().q;
        let f = objective_value(&a, &q).unwrap();
        let captured = a.herm_matmul(&q).unwrap().frob_norm_sqr();
        let total = a.frob_norm_sqr();
        prop_assert!((f * f + captured - total).abs() <= 1e-12 * total);
    }

    #[test]
    fn objective_ignores_the_basis_of_the_span((m, n, r) in dims(), seed in 1u64..1 << 48) {
        let (a, b) = instance(seed, m, n, r);
        let mut rng = Xorshift64Star::new(seed ^ 0xabcd);
        let pert: DenseMatrix<f64> = rng.matrix(r, r, true);
        let factor = DenseMatrix::from_fn(r, r, |i, j| {
            let base = if i == j { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) };
            base + pert.get(i, j) * Complex::new(0.25, 0.0)
        });
        let f1 = objective_value(&a, &mgs_orthonormalize(&b).unwrap().q).unwrap();
        let bm = b.matmul(&factor).unwrap();
        let f2 = objective_value(&a, &mgs_orthonormalize(&bm).unwrap().q).unwrap();
        prop_assert!((f1 - f2).abs() <= 1e-10 * f1.max(1e-30));
    }

    #[test]
    fn recovered_c_attains_the_projection_residual((m, n, r) in dims(), seed in 1u64..1 << 48) {
        let (a, b) = instance(seed, m, n, r);
        let c = recover_c(&a, &b).unwrap();
        let fit = b.matmul(&c.conj_transpose()).unwrap();
        let err = a.sub(&fit).unwrap().frob_norm();
        let residual = projection_residual(&a, &mgs_orthonormalize(&b).unwrap().q).unwrap();
        prop_assert!((err - residual).abs() <= 1e-9 * a.frob_norm());
    }

    #[test]
    fn gradient_columns_have_no_radial_component((m, n, r) in dims(), seed in 1u64..1 << 48) {
        let (a, b) = instance(seed, m, n, r);
        let res = match gradient_amgs(&a, &b) {
            Ok(res) => res,
            // Full span or exact fit: nothing to test.
            Err(_) => return Ok(()),
        };
        for i in 0..r {
            let (mut dot, mut nb, mut ng) = (0.0f64, 0.0f64, 0.0f64);
            for k in 0..m {
                let bv = b.get(k, i);
                let gv = res.g.get(k, i);
                dot += (bv.conj() * gv).re;
                nb += bv.norm_sqr();
                ng += gv.norm_sqr();
            }
            let scale = (nb.sqrt() * ng.sqrt()).max(1e-30);
            prop_assert!(dot.abs() / scale <= 1e-10);
        }
    }

    #[test]
    fn ags_and_amgs_agree_at_rank_one(m in 2usize..20, n in 1usize..8, seed in 1u64..1 << 48) {
        let (a, b) = instance(seed, m, n, 1);
        let amgs = gradient_amgs(&a, &b).unwrap();
        let ags = gradient_ags(&a, &b).unwrap();
        // Same algorithm at r = 1 up to how the normalization constant is
        // obtained (forward nrm2 vs Re(q^H b)): agreement to a few ulps.
        prop_assert!(amgs.g.max_abs_diff(&ags.g) <= 8.0 * f64::EPSILON * amgs.g.max_abs());
        prop_assert!((amgs.f - ags.f).abs() <= 8.0 * f64::EPSILON * amgs.f);
    }

    #[test]
    fn gradient_is_invariant_under_data_rotation((m, n, r) in dims(), seed in 1u64..1 << 48) {
        // Multiplying A on the right by a unitary factor changes neither the
        // objective nor the gradient: both only see A through A A^H.
        let (a, b) = instance(seed, m, n, r);
        let u = mgs_orthonormalize(&Xorshift64Star::new(seed ^ 0x55).matrix::<f64>(n, n, true))
            .unwrap()
            .q;
        let au = a.matmul(&u).unwrap();
        let r1 = match gradient_amgs(&a, &b) {
            Ok(res) => res,
            Err(_) => return Ok(()),
        };
        let r2 = gradient_amgs(&au, &b).unwrap();
        prop_assert!((r1.f - r2.f).abs() <= 1e-10 * r1.f.max(1e-30));
        prop_assert!(r1.g.max_abs_diff(&r2.g) <= 1e-9 * r1.g.max_abs().max(1e-30));
    }
}
