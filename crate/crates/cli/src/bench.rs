//! `bench`: time and count the gradient routes over a size grid, one record
//! per cell and method, CSV or JSON. Finite-difference gradients beyond the
//! flop cutoff are extrapolated from a single forward pass and flagged.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;
use varproj_core::adjoint::{
    account_words, forward_eval_counted, gradient_ags, gradient_amgs, gradient_blocksystem,
    gradient_fd, GradientMethod, DEFAULT_FD_STEP,
};

use crate::instance::dense_pair;
use crate::CmdError;

#[derive(Args)]
pub struct BenchArgs {
    /// Grid cell as `m,n,r`; repeatable.
    #[arg(long = "cell", required = true)]
    pub cells: Vec<String>,

    /// Gradient route to bench; repeatable.
    #[arg(long = "method", default_value = "amgs")]
    pub methods: Vec<String>,

    #[arg(long, default_value_t = 3)]
    pub repeats: usize,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    pub format: String,

    /// Write records here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Complex-op budget above which FD timing is extrapolated from one
    /// forward pass.
    #[arg(long, default_value_t = 1e10)]
    pub fd_cutoff: f64,
}

#[derive(Serialize)]
pub struct BenchRecord {
    pub method: String,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub flops: u64,
    pub words: usize,
    pub words_analytic: usize,
    pub elapsed_ns: u128,
    pub extrapolated: bool,
    pub status: String,
}

pub fn run(args: BenchArgs) -> Result<(), CmdError> {
    if args.repeats == 0 {
        return Err(CmdError::input("repeats must be positive"));
    }
    let methods: Vec<GradientMethod> = args
        .methods
        .iter()
        .map(|name| {
            name.parse()
                .map_err(|_| CmdError::input(format!("unknown method {name:?}")))
        })
        .collect::<Result<_, _>>()?;

    let mut records = Vec::new();
    for (idx, cell) in args.cells.iter().enumerate() {
        let (m, n, r) = parse_cell(cell)?;
        let (a, b) = dense_pair(args.seed.wrapping_add(idx as u64), m, n, r);
        for &method in &methods {
            records.push(bench_cell(method, &a, &b, args.repeats, args.fd_cutoff));
        }
    }

    let text = match args.format.as_str() {
        "json" => {
            let mut s = serde_json::to_string_pretty(&records).expect("serializable records");
            s.push('\n');
            s
        }
        _ => to_csv(&records),
    };
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CmdError::input(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_cell(cell: &str) -> Result<(usize, usize, usize), CmdError> {
    let parts: Vec<&str> = cell.split(',').collect();
    if parts.len() != 3 {
        return Err(CmdError::input(format!("cell {cell:?} is not m,n,r")));
    }
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| CmdError::input(format!("cell {cell:?} is not m,n,r")))
    };
    let (m, n, r) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    if m == 0 || n == 0 || r == 0 || r > m {
        return Err(CmdError::input(format!(
            "cell {cell:?} needs positive sizes with r <= m"
        )));
    }
    Ok((m, n, r))
}

fn bench_cell(
    method: GradientMethod,
    a: &varproj_core::matcore::DenseMatrix<f64>,
    b: &varproj_core::matcore::DenseMatrix<f64>,
    repeats: usize,
    fd_cutoff: f64,
) -> BenchRecord {
    let (m, n, r) = (b.rows(), a.cols(), b.cols());
    let analytic = account_words(method, m, n, r);
    let mut rec = BenchRecord {
        method: method.to_string(),
        m,
        n,
        r,
        flops: 0,
        words: analytic,
        words_analytic: analytic,
        elapsed_ns: 0,
        extrapolated: false,
        status: "ok".into(),
    };

    let outcome = (|| -> Result<(), varproj_core::Error> {
        match method {
            GradientMethod::Amgs => {
                let mut times = Vec::with_capacity(repeats);
                for _ in 0..repeats {
                    let t0 = Instant::now();
                    let res = gradient_amgs(a, b)?;
                    times.push(t0.elapsed().as_nanos());
                    rec.flops = res.flops;
                    rec.words = res.words;
                }
                rec.elapsed_ns = median(&mut times);
            }
            GradientMethod::Ags => {
                let mut times = Vec::with_capacity(repeats);
                for _ in 0..repeats {
                    let t0 = Instant::now();
                    let res = gradient_ags(a, b)?;
                    times.push(t0.elapsed().as_nanos());
                    rec.flops = res.flops;
                    rec.words = res.words;
                }
                rec.elapsed_ns = median(&mut times);
            }
            GradientMethod::Blocksys => {
                let mut times = Vec::with_capacity(repeats);
                for _ in 0..repeats {
                    let t0 = Instant::now();
                    gradient_blocksystem(a, b)?;
                    times.push(t0.elapsed().as_nanos());
                }
                rec.elapsed_ns = median(&mut times);
            }
            GradientMethod::Fd => {
                // 2mr real coordinates, two forward evaluations each.
                let evals = 4 * (m as u64) * (r as u64);
                let (_, fwd_flops) = forward_eval_counted(a, b)?;
                rec.flops = fwd_flops * evals;
                if rec.flops as f64 > fd_cutoff {
                    let mut times = Vec::with_capacity(repeats);
                    for _ in 0..repeats {
                        let t0 = Instant::now();
                        forward_eval_counted(a, b)?;
                        times.push(t0.elapsed().as_nanos());
                    }
                    rec.elapsed_ns = median(&mut times) * evals as u128;
                    rec.extrapolated = true;
                } else {
                    let mut times = Vec::with_capacity(repeats);
                    for _ in 0..repeats {
                        let t0 = Instant::now();
                        gradient_fd(a, b, DEFAULT_FD_STEP)?;
                        times.push(t0.elapsed().as_nanos());
                    }
                    rec.elapsed_ns = median(&mut times);
                }
            }
        }
        Ok(())
    })();

    if let Err(e) = outcome {
        rec.status = format!("error: {e}");
        rec.flops = 0;
        rec.elapsed_ns = 0;
    }
    rec
}

fn median(times: &mut [u128]) -> u128 {
    times.sort_unstable();
    times[times.len() / 2]
}

fn to_csv(records: &[BenchRecord]) -> String {
    let mut out =
        String::from("method,m,n,r,flops,words,words_analytic,elapsed_ns,extrapolated,status\n");
    for rec in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            rec.method,
            rec.m,
            rec.n,
            rec.r,
            rec.flops,
            rec.words,
            rec.words_analytic,
            rec.elapsed_ns,
            rec.extrapolated,
            rec.status.replace(',', ";")
        ));
    }
    out
}
