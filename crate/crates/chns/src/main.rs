use chns::config::{parse_config, ProblemKind, RunConfig};
use chns::drivers::{run_benchmark, run_convergence};
use chns::error::RunError;
use chns::solver::set_threads;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "chns", version, about = "Divergence-free phase-field two-phase flow benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution convergence study
    Converge(RunArgs),
    /// Rising bubble benchmark (kind bubble1 or bubble2)
    Bubble(RunArgs),
    /// Rayleigh-Taylor instability
    Rt(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `out/<kind>`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Threads used by the sparse factorization
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Suppress progress output
    #[arg(long)]
    quiet: bool,
}

fn load(path: &Path) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    parse_config(&text).map_err(|source| RunError::Config {
        path: path.into(),
        source,
    })
}

fn run(cli: Cli) -> Result<(), RunError> {
    let (args, allowed): (&RunArgs, &[ProblemKind]) = match &cli.command {
        Command::Converge(a) => (a, &[ProblemKind::Converge]),
        Command::Bubble(a) => (a, &[ProblemKind::Bubble1, ProblemKind::Bubble2]),
        Command::Rt(a) => (a, &[ProblemKind::RayleighTaylor]),
    };
    let cfg = load(&args.config)?;
    if !allowed.contains(&cfg.kind) {
        return Err(RunError::Usage(format!(
            "{}: problem kind `{}` does not match this subcommand",
            args.config.display(),
            cfg.kind.name()
        )));
    }
    set_threads(args.threads);
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out").join(cfg.kind.name()));
    let start = Instant::now();
    let quiet = args.quiet;
    let mut progress = |r: &chns_core::stepper::StepRecord| {
        if !quiet && (r.step % 50 == 0) {
            eprintln!("step {:6}  t = {:.4}  dt = {:.3e}  vmax = {:.3e}", r.step, r.t, r.dt, r.v_max);
        }
    };
    if cfg.kind == ProblemKind::Converge {
        let rows = run_convergence(&cfg, Some(&out), &mut progress)?;
        println!("{:>5} {:>6} {:>11} {:>6} {:>11} {:>6} {:>11} {:>6}", "n", "steps", "err_u", "ord", "err_phi", "ord", "err_mu", "ord");
        for r in rows {
            println!(
                "{:>5} {:>6} {:>11.3e} {:>6.2} {:>11.3e} {:>6.2} {:>11.3e} {:>6.2}",
                r.n, r.steps, r.err_u, r.order_u, r.err_phi, r.order_phi, r.err_mu, r.order_mu
            );
        }
    } else {
        let run = run_benchmark(&cfg, Some(&out), &mut progress)?;
        let s = run.summary;
        println!("steps        {}", s.steps);
        println!("c_min        {:.4} at t = {:.3}", s.c_min, s.t_c_min);
        println!("V_c max      {:.4} at t = {:.3}", s.vc_max, s.t_vc_max);
        println!("y_c({:.2})    {:.4}", s.t_final, s.y_c_final);
        println!("mass drift   {:.3e}", s.mass_drift);
        if cfg.kind == ProblemKind::RayleighTaylor {
            println!("{:>8} {:>10} {:>10}", "t", "bubble", "spike");
            for r in &run.records {
                println!("{:>8.3} {:>10.4} {:>10.4}", r.t, r.y_bubble, r.y_spike);
            }
        }
    }
    eprintln!("finished in {:.1} s, output in {}", start.elapsed().as_secs_f64(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
