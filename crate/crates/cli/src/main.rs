use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hinfgrad::bench::{self, ReportFormat};
use hinfgrad::lti::{check_detectable, check_stabilizable, is_hurwitz_default, PBH_RANK_TOL};
use hinfgrad::{
    closed_loop, hinf_norm, lqr_initial_gain, synthesize, AlphaMode, Error, Execution,
    SynthesisConfig,
};

#[derive(Parser)]
#[command(
    name = "hinfgrad",
    version,
    about = "State-feedback H-infinity synthesis by gradient descent"
)]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a gain from the LQR start (or --gain).
    Synth {
        #[arg(long)]
        system: PathBuf,
        /// Initial gain file; defaults to LQR with Q = I, R = I.
        #[arg(long)]
        gain: Option<PathBuf>,
        /// Write the final gain here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// H-infinity norm of the closed loop under a given gain.
    Norm {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        gain: PathBuf,
        #[arg(long, default_value_t = hinfgrad::hinf::DEFAULT_TOL_BIS)]
        tol_bis: f64,
    },
    /// Load a system file and check the standing assumptions.
    Validate {
        #[arg(long)]
        system: PathBuf,
    },
    /// Run every *.json system in a directory and write a CSV report.
    Bench {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Worker threads across systems; 1 runs sequentially.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        tuning: Tuning,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlphaModeArg {
    Persist,
    Reset,
}

#[derive(Args)]
struct Tuning {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    delta_beta: Option<f64>,
    #[arg(long)]
    s_min: Option<f64>,
    #[arg(long)]
    alpha_shrink: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    max_armijo_iters: Option<usize>,
    #[arg(long)]
    tol_bis: Option<f64>,
    #[arg(long, value_enum)]
    alpha_mode: Option<AlphaModeArg>,
}

impl Tuning {
    fn apply(&self, mut cfg: SynthesisConfig) -> SynthesisConfig {
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$target = v; })*
            };
        }
        set!(eps => eps, alpha0 => alpha0, zeta => zeta, eta => eta, delta_beta => delta_beta,
             s_min => s_min, alpha_shrink => alpha_shrink, max_iters => max_outer_iters,
             max_armijo_iters => max_armijo_iters, tol_bis => tol_bis);
        if let Some(mode) = self.alpha_mode {
            cfg.alpha_mode = match mode {
                AlphaModeArg::Persist => AlphaMode::Persist,
                AlphaModeArg::Reset => AlphaMode::Reset,
            };
        }
        cfg
    }
}

fn exit_code(category: &str) -> u8 {
    match category {
        "io" => 3,
        "parse" => 4,
        "dimension" | "non_finite" => 5,
        "config" => 6,
        "not_stabilizable" | "not_detectable" | "unstable_closed_loop" => 7,
        _ => 8,
    }
}

fn run_synth(
    system: &Path,
    gain: Option<&Path>,
    out: Option<&Path>,
    tuning: &Tuning,
) -> Result<(), Error> {
    let sys = bench::load_system(system)?;
    let cfg = tuning.apply(sys.overrides.apply(&SynthesisConfig::default()));
    cfg.validate()?;
    let k0 = match gain {
        Some(p) => bench::load_gain(p)?,
        None => lqr_initial_gain(&sys.plant)?,
    };
    let started = Instant::now();
    let res = synthesize(&sys.plant, &k0, &cfg)?;
    let secs = started.elapsed().as_secs_f64();
    println!("system {}", sys.name);
    println!("gamma0 {}", res.gamma0);
    println!("gamma_star {}", res.gamma_star);
    println!(
        "improvement_pct {}",
        bench::improvement_pct(res.gamma0, res.gamma_star)
    );
    println!("iterations {}", res.trace.len() - 1);
    println!("termination {}", res.termination.as_str());
    println!("time_seconds {secs}");
    match out {
        Some(p) => bench::write_gain(p, &res.k_star)?,
        None => print!("{}", bench::gain_to_json(&res.k_star)),
    }
    Ok(())
}

fn run_norm(system: &Path, gain: &Path, tol_bis: f64) -> Result<(), Error> {
    let sys = bench::load_system(system)?;
    let k = bench::load_gain(gain)?;
    let ev = hinf_norm(&closed_loop(&sys.plant, &k)?, tol_bis)?;
    println!("gamma {}", ev.gamma);
    println!("beta {}", ev.beta);
    println!("bracket {} {}", ev.lower, ev.upper);
    Ok(())
}

fn run_validate(system: &Path) -> Result<(), Error> {
    let sys = bench::load_system(system)?;
    let p = &sys.plant;
    println!("system {}", sys.name);
    println!("dims n={} m={} m1={} r={}", p.n(), p.m(), p.m1(), p.r());
    println!("open_loop_hurwitz {}", is_hurwitz_default(p.a())?);
    println!(
        "stabilizable {}",
        check_stabilizable(p.a(), p.b(), PBH_RANK_TOL)?
    );
    println!(
        "detectable {}",
        check_detectable(p.a(), p.c(), PBH_RANK_TOL)?
    );
    p.check_assumptions()?;
    println!("ok");
    Ok(())
}

fn run_bench(dir: &Path, report: &Path, jobs: usize, tuning: &Tuning) -> Result<(), Error> {
    if jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let cfg = tuning.apply(SynthesisConfig::default());
    cfg.validate()?;
    let paths = bench::list_systems(dir)?;
    let rows = run_rows(&paths, &cfg, jobs)?;
    std::fs::write(report, bench::emit_report(&rows, ReportFormat::Csv)).map_err(|source| {
        Error::Io {
            path: report.display().to_string(),
            source,
        }
    })?;
    print!("{}", bench::emit_report(&rows, ReportFormat::Table));
    Ok(())
}

#[cfg(feature = "parallel")]
fn run_rows(
    paths: &[PathBuf],
    cfg: &SynthesisConfig,
    jobs: usize,
) -> Result<Vec<bench::ReportRow>, Error> {
    if jobs == 1 {
        return Ok(bench::run_benchmark(paths, cfg, Execution::Sequential));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| bench::run_benchmark(paths, cfg, Execution::Parallel)))
}

#[cfg(not(feature = "parallel"))]
fn run_rows(
    paths: &[PathBuf],
    cfg: &SynthesisConfig,
    jobs: usize,
) -> Result<Vec<bench::ReportRow>, Error> {
    if jobs > 1 {
        log::warn!("built without the parallel feature; running sequentially");
    }
    Ok(bench::run_benchmark(paths, cfg, Execution::Sequential))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let result = match &cli.command {
        Command::Synth {
            system,
            gain,
            out,
            tuning,
        } => run_synth(system, gain.as_deref(), out.as_deref(), tuning),
        Command::Norm {
            system,
            gain,
            tol_bis,
        } => run_norm(system, gain, *tol_bis),
        Command::Validate { system } => run_validate(system),
        Command::Bench {
            dir,
            report,
            jobs,
            tuning,
        } => run_bench(dir, report, *jobs, tuning),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(exit_code(e.category()))
        }
    }
}
