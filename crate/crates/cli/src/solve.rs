//! `solve`: minimize the fitting objective over the model parameters from a
//! seeded random start, emitting the full trajectory report as JSON.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use varproj_core::adjoint::GradientMethod;
use varproj_core::rng::Xorshift64Star;
use varproj_core::solve::{broyden_minimize, SolveOptions};

use crate::instance::{planted, ModelArgs};
use crate::matfile;
use crate::CmdError;

#[derive(Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Additive noise level on the generated instance.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,

    /// Read A from a matrix file instead of generating it.
    #[arg(long)]
    pub a: Option<PathBuf>,

    /// Read the starting point from a vector file instead of drawing it.
    #[arg(long)]
    pub sigma0: Option<PathBuf>,

    /// Gradient route for the solver.
    #[arg(long, default_value = "amgs", value_parser = ["fd", "ags", "amgs"])]
    pub method: String,

    /// Gradient max-norm stopping tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,

    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,

    /// Exit 1 when the run does not converge.
    #[arg(long)]
    pub strict: bool,

    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SolveOutput {
    model: String,
    m: usize,
    n: usize,
    r: usize,
    seed: u64,
    noise: f64,
    method: String,
    iterations: usize,
    termination: String,
    converged: bool,
    restarts: usize,
    final_f: f64,
    final_grad_norm: f64,
    f_history: Vec<f64>,
    final_sigma: Vec<f64>,
}

pub fn run(args: SolveArgs) -> Result<(), CmdError> {
    let model = args.model.build()?;
    let method: GradientMethod = args
        .method
        .parse()
        .expect("value_parser restricts the method name");

    let (a, mut rng) = match &args.a {
        Some(path) => {
            let a = matfile::read_matrix(path)?;
            if a.rows() != model.rows() {
                return Err(CmdError::input(format!(
                    "{}: has {} rows but the model builds {}-row factors",
                    path.display(),
                    a.rows(),
                    model.rows()
                )));
            }
            (a, Xorshift64Star::new(args.seed))
        }
        None => {
            if args.noise < 0.0 {
                return Err(CmdError::input("noise must be nonnegative"));
            }
            let n = args.model.data_cols(model.as_ref());
            let inst = planted(model.as_ref(), n, args.seed, args.noise)?;
            (inst.a, inst.rng)
        }
    };

    let sigma0: Vec<f64> = match &args.sigma0 {
        Some(path) => matfile::read_vector(path)?,
        None => rng.vector(model.param_count()),
    };
    let opts = SolveOptions {
        grad_tol: args.tol,
        max_iters: args.max_iters,
        method,
        ..SolveOptions::default()
    };
    let report = broyden_minimize(model.as_ref(), &a, &sigma0, &opts)?;

    let output = SolveOutput {
        model: args.model.model.clone(),
        m: a.rows(),
        n: a.cols(),
        r: model.rank(),
        seed: args.seed,
        noise: args.noise,
        method: args.method.clone(),
        iterations: report.iterations,
        termination: report.termination.as_str().into(),
        converged: report.termination.converged(),
        restarts: report.restarts,
        final_f: report.f_history.last().copied().unwrap_or(f64::NAN),
        final_grad_norm: report.final_grad_norm,
        f_history: report.f_history.clone(),
        final_sigma: report.final_sigma.clone(),
    };
    let mut text = serde_json::to_string_pretty(&output).expect("serializable report");
    text.push('\n');
    match &args.out {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| CmdError::input(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }

    if args.strict && !output.converged {
        return Err(CmdError::tolerance(format!(
            "did not converge: {} after {} iterations",
            output.termination, output.iterations
        )));
    }
    Ok(())
}
