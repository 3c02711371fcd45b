//! `gen`: write a seeded instance to disk. Planted instances also write the
//! ground-truth parameter vector next to the data matrix.

use std::path::PathBuf;

use clap::Args;

use crate::instance::{planted, ModelArgs};
use crate::matfile;
use crate::CmdError;

#[derive(Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Additive noise level on the planted instance.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,

    /// Copy an existing matrix file through (header-validated) instead of
    /// generating.
    #[arg(long)]
    pub a: Option<PathBuf>,

    /// Destination for the data matrix; the planted sigma goes to
    /// `<out>.sigma`.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: GenArgs) -> Result<(), CmdError> {
    if let Some(src) = &args.a {
        let m = matfile::read_matrix(src)?;
        matfile::write_matrix(&args.out, &m)?;
        println!("copied {} ({}x{})", args.out.display(), m.rows(), m.cols());
        return Ok(());
    }
    if args.noise < 0.0 {
        return Err(CmdError::input("noise must be nonnegative"));
    }

    let model = args.model.build()?;
    let n = args.model.data_cols(model.as_ref());
    let inst = planted(model.as_ref(), n, args.seed, args.noise)?;
    matfile::write_matrix(&args.out, &inst.a)?;
    let sigma_path = sigma_path(&args.out);
    matfile::write_vector(&sigma_path, &inst.sigma_star)?;
    println!(
        "wrote {} ({}x{}) and {}",
        args.out.display(),
        inst.a.rows(),
        inst.a.cols(),
        sigma_path.display()
    );
    Ok(())
}

pub fn sigma_path(out: &PathBuf) -> PathBuf {
    let mut p = out.clone().into_os_string();
    p.push(".sigma");
    PathBuf::from(p)
}
