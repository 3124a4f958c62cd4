//! `qga`: run, analyse and benchmark the quantum genetic algorithm.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use qga_core::bench::{
    aggregate, read_jsonl, run_experiment, scatter_rows, write_scatter_csv, AggregateStats, BenchRecord, ExperimentConfig,
    SpectralRecord,
};
use qga_core::channels::DEFAULT_MUTATION_PROBABILITY;
use qga_core::engine::{sample_initial_state, Engine, InitMode};
use qga_core::spectral::{analyze, SpectralOptions, DEFAULT_TOP_K};
use qga_core::{Cloner, MutationMode, PopulationLayout, ProblemHamiltonian, QgaError, RngStream, Variant};

const EXIT_USAGE: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;
const EXIT_CONVERGENCE: u8 = 4;
const EXIT_RESUME: u8 = 5;

const TAG_HAM: u64 = 1;
const TAG_INIT: u64 = 2;
const TAG_MUT: u64 = 3;

#[derive(Parser, Debug)]
#[command(name = "qga", version, about = "Density-matrix quantum genetic algorithm: simulation, spectral analysis and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one trajectory and write it as a JSON line.
    Run(RunArgs),
    /// Dominant eigenvalues and fixed point of a generation channel.
    Spectral(SpectralArgs),
    /// Run the randomized benchmark described by a config file.
    Bench(BenchArgs),
    /// Join fitted parameters with spectral predictions.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Number of registers (individuals).
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Qubits per register.
    #[arg(long)]
    c: usize,
    #[arg(long, default_value = "uqcm")]
    cloner: Cloner,
    #[arg(long, default_value = "off")]
    mutation: MutationMode,
    /// Mutation probability per qubit; defaults to 1/24 when mutation is on.
    #[arg(long)]
    pm: Option<f64>,
    #[arg(long, default_value_t = 10)]
    generations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `random` (drawn from the seed) or a path to a .ham file.
    #[arg(long, default_value = "random")]
    ham: String,
    /// Save the Hamiltonian used to this .ham file.
    #[arg(long)]
    ham_out: Option<PathBuf>,
    #[arg(long, default_value = "haar-full")]
    init: InitMode,
    /// Trajectory JSON-lines output; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpectralArgs {
    /// Path to a .ham file, or `computational` for the diagonal Hamiltonian.
    #[arg(long)]
    ham: String,
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Qubits per register; required with `--ham computational`.
    #[arg(long)]
    c: Option<usize>,
    #[arg(long, default_value = "uqcm")]
    cloner: Cloner,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    topk: usize,
    /// Include mutation, averaged exactly.
    #[arg(long, default_value = "off")]
    mutation: MutationMode,
    #[arg(long)]
    pm: Option<f64>,
    /// Report JSON output; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Experiment configuration (JSON).
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: `full` or `reduced`.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue a previous run in the same output directory.
    #[arg(long)]
    resume: bool,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    spectral: PathBuf,
    /// Directory receiving scatter.csv and compare.json.
    #[arg(long)]
    out: PathBuf,
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<QgaError> for Failure {
    fn from(e: QgaError) -> Self {
        let code = match e {
            QgaError::Convergence { .. } => EXIT_CONVERGENCE,
            QgaError::ResumeConflict(_) => EXIT_RESUME,
            QgaError::Contract(_) | QgaError::Size(_) | QgaError::EmptyStats(_) => 1,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

type CmdResult = Result<u8, Failure>;

fn mutation_probability(mode: MutationMode, pm: Option<f64>) -> Result<f64, Failure> {
    match (mode, pm) {
        (MutationMode::Off, Some(_)) => Err(usage("--pm requires --mutation sampled or exact")),
        (MutationMode::Off, None) => Ok(0.0),
        (_, Some(p)) if !(0.0..=1.0).contains(&p) => Err(usage(format!("--pm {p} outside [0, 1]"))),
        (_, p) => Ok(p.unwrap_or(DEFAULT_MUTATION_PROBABILITY)),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(QgaError::from)?;
            }
            fs::write(p, text).map_err(QgaError::from)?;
        }
        None => {
            std::io::stdout().write_all(text.as_bytes()).map_err(QgaError::from)?;
        }
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> CmdResult {
    let p_m = mutation_probability(args.mutation, args.pm)?;
    let variant = Variant::new(args.cloner, args.mutation, p_m)?;
    let layout = PopulationLayout::new(args.n, args.c)?;
    if args.generations == 0 {
        return Err(usage("--generations must be positive"));
    }
    let master = RngStream::new(args.seed);
    let h = if args.ham == "random" {
        ProblemHamiltonian::random(args.c, &mut master.derive(TAG_HAM))
    } else {
        let h = ProblemHamiltonian::load(Path::new(&args.ham))?;
        if h.qubits() != args.c {
            return Err(usage(format!("{} has {} qubits per register, --c is {}", args.ham, h.qubits(), args.c)));
        }
        h
    };
    if let Some(path) = &args.ham_out {
        h.save(path)?;
    }
    let rho = sample_initial_state(layout, args.init, &mut master.derive(TAG_INIT));
    let engine = Engine::new(layout, &h, &variant)?;
    let trajectory = engine.run(&rho, args.generations, args.init, &mut master.derive(TAG_MUT))?;
    let line = trajectory.to_json_line()? + "\n";
    write_output(args.out.as_deref(), &line)?;
    if args.out.is_some() {
        println!("final_fidelity {}", trajectory.final_fidelity());
        println!("final_energy {}", trajectory.final_energy());
    } else {
        eprintln!("final_fidelity {}", trajectory.final_fidelity());
        eprintln!("final_energy {}", trajectory.final_energy());
    }
    Ok(0)
}

fn cmd_spectral(args: SpectralArgs) -> CmdResult {
    let p_m = mutation_probability(args.mutation, args.pm)?;
    let variant = Variant::new(args.cloner, args.mutation, p_m)?;
    let h = if args.ham == "computational" {
        let c = args.c.ok_or_else(|| usage("--ham computational needs --c"))?;
        ProblemHamiltonian::computational(c)
    } else {
        let h = ProblemHamiltonian::load(Path::new(&args.ham))?;
        if let Some(c) = args.c.filter(|&c| c != h.qubits()) {
            return Err(usage(format!("{} has {} qubits per register, --c is {c}", args.ham, h.qubits())));
        }
        h
    };
    if args.topk < 2 {
        return Err(usage("--topk must be at least 2"));
    }
    let layout = PopulationLayout::new(args.n, h.qubits())?;
    let opts = SpectralOptions { top_k: args.topk, ..Default::default() };
    let report = analyze(layout, &h, &variant, &opts)?;
    write_output(args.out.as_deref(), &(serde_json::to_string_pretty(&report).map_err(QgaError::from)? + "\n"))?;
    let lambda2 = report.eigenvalues.get(1).map(|e| e.re.hypot(e.im)).unwrap_or(0.0);
    eprintln!("m {} F_inf {} gamma {} |lambda_2| {} residual {:.3e}", report.m, report.f_inf, report.gamma, lambda2, report.residual);
    if report.degenerate || report.oscillating {
        eprintln!("warning: the unit circle holds more than the unique fixed point");
        return Ok(EXIT_DEGENERATE);
    }
    Ok(0)
}

fn print_summary(summary: &AggregateStats) {
    for v in &summary.variants {
        println!(
            "{:<14} H={:<4} F_inf {:.4} ± {:.4}   gamma {:.4} ± {:.4} [{:.3}, {:.3}]",
            v.label, v.hamiltonians, v.f_inf_mean, v.f_inf_std, v.gamma_mean, v.gamma_std, v.gamma_min, v.gamma_max
        );
    }
    for w in &summary.win_rates {
        match (w.rate, w.ci_half_width) {
            (Some(r), Some(ci)) => println!("bcqo faster ({:?} mutation): {r:.1}% ± {ci:.1} of {}", w.mutation, w.comparisons),
            _ => println!("bcqo faster ({:?} mutation): undefined", w.mutation),
        }
    }
    print_agreement(summary);
}

fn print_agreement(summary: &AggregateStats) {
    let show = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    for a in &summary.agreement {
        println!("{:<14} R2(F_inf) {}  R2(gamma) {}  points {}", a.label, show(a.r2_f_inf), show(a.r2_gamma), a.points);
    }
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    let mut config = match (&args.config, args.preset.as_deref()) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some("full")) => ExperimentConfig::full("bench-full"),
        (None, Some("reduced")) => ExperimentConfig::reduced("bench-reduced"),
        (None, Some(other)) => return Err(usage(format!("unknown preset '{other}' (full|reduced)"))),
        (None, None) => return Err(usage("--config or --preset is required")),
    };
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    config.validate()?;
    info!("benchmark into {}", config.output_dir.display());
    let outcome = run_experiment(&config, args.resume)?;
    println!("computed {} Hamiltonians into {}", outcome.computed_hamiltonians, config.output_dir.display());
    print_summary(&outcome.summary);
    Ok(0)
}

fn cmd_compare(args: CompareArgs) -> CmdResult {
    let records: Vec<BenchRecord> = read_jsonl(&args.records)?;
    let spectral: Vec<SpectralRecord> = read_jsonl(&args.spectral)?;
    let summary = aggregate(&records, &spectral)?;
    fs::create_dir_all(&args.out).map_err(QgaError::from)?;
    write_scatter_csv(&args.out.join("scatter.csv"), &scatter_rows(&records, &spectral))?;
    let json = serde_json::to_string_pretty(&summary.agreement).map_err(QgaError::from)? + "\n";
    fs::write(args.out.join("compare.json"), json).map_err(QgaError::from)?;
    print_agreement(&summary);
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Spectral(a) => cmd_spectral(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
