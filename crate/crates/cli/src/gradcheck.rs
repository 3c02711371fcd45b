//! `gradcheck`: compare the fast gradient routes against the central
//! finite-difference oracle on a seeded dense instance.

use clap::Args;
use varproj_core::adjoint::{
    gradient_ags, gradient_amgs, gradient_blocksystem, gradient_fd, GradientMethod,
    DEFAULT_FD_STEP,
};
use varproj_core::matcore::DenseMatrix;

use crate::instance::dense_pair;
use crate::CmdError;

#[derive(Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, default_value_t = 20)]
    pub m: usize,

    #[arg(long, default_value_t = 10)]
    pub n: usize,

    #[arg(long, default_value_t = 4)]
    pub r: usize,

    /// Gradient route to check; repeatable.
    #[arg(long = "method", default_value = "amgs")]
    pub methods: Vec<String>,

    /// Baseline the methods are compared against.
    #[arg(long, default_value = "fd", value_parser = ["fd", "amgs"])]
    pub against: String,

    /// Maximum allowed relative discrepancy against the baseline.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,

    /// Self-test hook: perturb the computed gradients so the check must fail.
    #[arg(long, hide = true)]
    pub corrupt: bool,
}

pub fn run(args: GradcheckArgs) -> Result<(), CmdError> {
    if args.r == 0 || args.r > args.m || args.n == 0 {
        return Err(CmdError::input(format!(
            "need 0 < r <= m and n > 0, got m={} n={} r={}",
            args.m, args.n, args.r
        )));
    }
    let (a, b) = dense_pair(args.seed, args.m, args.n, args.r);
    let oracle = match args.against.as_str() {
        "amgs" => gradient_amgs(&a, &b)?.g,
        _ => gradient_fd(&a, &b, DEFAULT_FD_STEP)?,
    };
    let scale = oracle.max_abs().max(f64::MIN_POSITIVE);

    let mut worst: f64 = 0.0;
    for name in &args.methods {
        let method: GradientMethod = name
            .parse()
            .map_err(|_| CmdError::input(format!("unknown method {name:?}")))?;
        let mut g = match method {
            GradientMethod::Fd => oracle.clone(),
            GradientMethod::Ags => gradient_ags(&a, &b)?.g,
            GradientMethod::Amgs => gradient_amgs(&a, &b)?.g,
            GradientMethod::Blocksys => gradient_blocksystem(&a, &b)?,
        };
        if args.corrupt {
            g.scale(num_complex::Complex::new(1.0 + 1e-3, 0.0));
        }
        let rel = rel_discrepancy(&g, &oracle, scale);
        let verdict = if rel <= args.tol { "ok" } else { "FAIL" };
        println!(
            "{method} vs {}  m={} n={} r={}  rel {rel:.3e}  tol {:.1e}  {verdict}",
            args.against, args.m, args.n, args.r, args.tol
        );
        worst = worst.max(rel);
    }

    if worst > args.tol {
        return Err(CmdError::tolerance(format!(
            "max relative discrepancy {worst:.3e} exceeds tol {:.1e}",
            args.tol
        )));
    }
    Ok(())
}

fn rel_discrepancy(g: &DenseMatrix<f64>, oracle: &DenseMatrix<f64>, scale: f64) -> f64 {
    g.max_abs_diff(oracle) / scale
}
