//! The randomized benchmark: many problem Hamiltonians, shared initial populations,
//! every variant, fitted convergence curves and spectral predictions.
//!
//! Randomness is derived from the master seed by path, so each Hamiltonian, initial
//! state and mutation stream is independent of scheduling and thread count:
//! `[HAM, h]`, `[INIT, h, s]` and `[MUT, h, v, s]`. All variants of a Hamiltonian
//! therefore start from identical initial populations.

mod stats;

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use stats::{aggregate, pearson_r2, scatter_rows, win_rate, write_scatter_csv, AggregateStats, Agreement, FixedPointStats, ScatterRow, VariantStats, WinRate, TIE_TOL};

use crate::channels::{Cloner, MutationMode, Variant, DEFAULT_MUTATION_PROBABILITY};
use crate::engine::{sample_initial_state, Engine, InitMode};
use crate::error::{QgaError, Result};
use crate::fit::{fit_convergence, FitResult};
use crate::hamiltonian::ProblemHamiltonian;
use crate::layout::PopulationLayout;
use crate::random::RngStream;
use crate::spectral::{analyze, SpectralOptions, SpectralReport, DEFAULT_TOP_K};

const TAG_HAM: u64 = 1;
const TAG_INIT: u64 = 2;
const TAG_MUT: u64 = 3;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SPECTRAL_FILE: &str = "spectral.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SCATTER_FILE: &str = "scatter.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "QGA_THREADS";

/// Cloner and mutation mode; the probability comes from the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub cloner: Cloner,
    pub mutation: MutationMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub c: usize,
    pub num_hamiltonians: usize,
    pub num_initial_states: usize,
    pub generations: usize,
    pub p_m: f64,
    pub variants: Vec<VariantSpec>,
    pub burn_in: usize,
    pub seed: u64,
    #[serde(default)]
    pub init_mode: InitMode,
    /// Run the spectral analysis of every (Hamiltonian, cloner) pair.
    #[serde(default = "default_true")]
    pub spectral: bool,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    /// Directory receiving the output files; not part of the configuration hash.
    pub output_dir: PathBuf,
}

fn default_true() -> bool {
    true
}

fn default_top_k() -> usize {
    DEFAULT_TOP_K
}

impl ExperimentConfig {
    /// 200 Hamiltonians, 10 initial states, 10 generations, all four variants.
    pub fn full(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            n: 4,
            c: 2,
            num_hamiltonians: 200,
            num_initial_states: 10,
            generations: 10,
            p_m: DEFAULT_MUTATION_PROBABILITY,
            variants: Variant::standard_set().iter().map(|v| VariantSpec { cloner: v.cloner, mutation: v.mutation }).collect(),
            burn_in: 4,
            seed: 2021,
            init_mode: InitMode::HaarFull,
            spectral: true,
            top_k: DEFAULT_TOP_K,
            output_dir: output_dir.into(),
        }
    }

    /// 50 Hamiltonians with 5 initial states each.
    pub fn reduced(output_dir: impl Into<PathBuf>) -> Self {
        Self { num_hamiltonians: 50, num_initial_states: 5, ..Self::full(output_dir) }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text).map_err(|e| QgaError::Parse(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn layout(&self) -> Result<PopulationLayout> {
        PopulationLayout::new(self.n, self.c)
    }

    pub fn variant_list(&self) -> Vec<Variant> {
        self.variants
            .iter()
            .map(|v| match v.mutation {
                MutationMode::Off => Variant::without_mutation(v.cloner),
                m => Variant { cloner: v.cloner, mutation: m, p_m: self.p_m },
            })
            .collect()
    }

    /// Cloners analysed spectrally, in order of first appearance.
    pub fn spectral_cloners(&self) -> Vec<Cloner> {
        let mut out = Vec::new();
        for v in &self.variants {
            if !out.contains(&v.cloner) {
                out.push(v.cloner);
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.layout()?;
        let bad = |msg: String| Err(QgaError::Config(msg));
        if self.num_hamiltonians == 0 || self.num_initial_states == 0 {
            return bad("at least one Hamiltonian and one initial state are required".into());
        }
        if self.burn_in >= self.generations || self.generations < self.burn_in + 2 {
            return bad(format!(
                "generations ({}) must exceed burn_in ({}) by at least 2 to fit three parameters",
                self.generations, self.burn_in
            ));
        }
        if !(0.0..=1.0).contains(&self.p_m) {
            return bad(format!("p_m = {} outside [0, 1]", self.p_m));
        }
        if self.variants.is_empty() {
            return bad("no variants configured".into());
        }
        for (i, v) in self.variants.iter().enumerate() {
            if self.variants[..i].contains(v) {
                return bad(format!("variant {v:?} listed twice"));
            }
        }
        if self.top_k < 2 {
            return bad(format!("top_k = {} must be at least 2", self.top_k));
        }
        Ok(())
    }

    /// SHA-256 of the configuration without its output location.
    pub fn hash(&self) -> String {
        let mut copy = self.clone();
        copy.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&copy).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    fn records_per_hamiltonian(&self) -> usize {
        self.variants.len() * self.num_initial_states
    }

    fn spectral_per_hamiltonian(&self) -> usize {
        if self.spectral {
            self.spectral_cloners().len()
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Ok,
    Failed,
}

/// One (Hamiltonian, variant, initial state) trajectory and its fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub ham_index: usize,
    pub init_index: usize,
    pub ham_hash: String,
    pub variant: Variant,
    /// Seed of the mutation stream of this trajectory.
    pub seed: u64,
    pub init_mode: InitMode,
    pub status: RecordStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub fidelity_series: Vec<f64>,
    pub energy_series: Vec<f64>,
    pub fit: Option<FitResult>,
}

/// A spectral report tagged with its Hamiltonian, or the failure that replaced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralRecord {
    #[serde(default)]
    pub ham_index: usize,
    #[serde(default = "ok_status")]
    pub status: RecordStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(flatten)]
    pub report: Option<SpectralReport>,
}

fn ok_status() -> RecordStatus {
    RecordStatus::Ok
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    config_hash: String,
    config: ExperimentConfig,
}

/// Everything an experiment produced, including records loaded on resume.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<BenchRecord>,
    pub spectral: Vec<SpectralRecord>,
    pub summary: AggregateStats,
    /// Hamiltonians computed by this invocation.
    pub computed_hamiltonians: usize,
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "worker panicked".into())
}

fn guarded<T>(f: impl FnOnce() -> Result<T>) -> std::result::Result<T, String> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(e.to_string()),
        Err(p) => Err(panic_message(p)),
    }
}

/// Problem Hamiltonian number `index` of the experiment.
pub fn experiment_hamiltonian(config: &ExperimentConfig, index: usize) -> ProblemHamiltonian {
    let master = RngStream::new(config.seed);
    ProblemHamiltonian::random(config.c, &mut master.derive_path(&[TAG_HAM, index as u64]))
}

enum Task {
    Trajectory { ham: usize, variant: usize, init: usize },
    Spectral { ham: usize, cloner: Cloner },
}

enum TaskResult {
    Record(BenchRecord),
    Spectral(SpectralRecord),
}

struct Runner<'a> {
    config: &'a ExperimentConfig,
    layout: PopulationLayout,
    variants: Vec<Variant>,
    master: RngStream,
}

impl Runner<'_> {
    fn trajectory(&self, h: &ProblemHamiltonian, ham: usize, vi: usize, init: usize) -> BenchRecord {
        let variant = self.variants[vi];
        let mut mut_rng = self.master.derive_path(&[TAG_MUT, ham as u64, vi as u64, init as u64]);
        let seed = mut_rng.seed();
        let outcome = guarded(|| {
            let mut init_rng = self.master.derive_path(&[TAG_INIT, ham as u64, init as u64]);
            let rho = sample_initial_state(self.layout, self.config.init_mode, &mut init_rng);
            let t = Engine::new(self.layout, h, &variant)?.run(&rho, self.config.generations, self.config.init_mode, &mut mut_rng)?;
            let fit = fit_convergence(&t.fidelity_series, self.config.burn_in)?;
            Ok((t, fit))
        });
        let base = BenchRecord {
            ham_index: ham,
            init_index: init,
            ham_hash: h.content_hash(),
            variant,
            seed,
            init_mode: self.config.init_mode,
            status: RecordStatus::Ok,
            error: None,
            fidelity_series: Vec::new(),
            energy_series: Vec::new(),
            fit: None,
        };
        match outcome {
            Ok((t, fit)) => BenchRecord { fidelity_series: t.fidelity_series, energy_series: t.energy_series, fit: Some(fit), ..base },
            Err(cause) => {
                warn!("trajectory h={ham} variant={} init={init} failed: {cause}", variant.label());
                BenchRecord { status: RecordStatus::Failed, error: Some(cause), ..base }
            }
        }
    }

    fn spectral(&self, h: &ProblemHamiltonian, ham: usize, cloner: Cloner) -> SpectralRecord {
        let opts = SpectralOptions { top_k: self.config.top_k, ..Default::default() };
        match guarded(|| analyze(self.layout, h, &Variant::without_mutation(cloner), &opts)) {
            Ok(report) => SpectralRecord { ham_index: ham, status: RecordStatus::Ok, error: None, report: Some(report) },
            Err(cause) => {
                warn!("spectral analysis h={ham} cloner={} failed: {cause}", cloner.name());
                SpectralRecord { ham_index: ham, status: RecordStatus::Failed, error: Some(cause), report: None }
            }
        }
    }
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let threads: usize = value
            .trim()
            .parse()
            .map_err(|_| QgaError::Config(format!("{THREADS_ENV}={value} is not a positive integer")))?;
        if threads == 0 {
            return Err(QgaError::Config(format!("{THREADS_ENV} must be positive")));
        }
        builder = builder.num_threads(threads);
    }
    builder.build().map_err(|e| QgaError::Config(format!("cannot start worker pool: {e}")))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| QgaError::Parse(format!("{}:{}: {e}", path.display(), i + 1)))?);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Number of leading Hamiltonians whose records are complete.
fn complete_prefix(config: &ExperimentConfig, records: &[BenchRecord], spectral: &[SpectralRecord]) -> usize {
    let per_h = config.records_per_hamiltonian();
    let spec_per_h = config.spectral_per_hamiltonian();
    let mut done = 0;
    while done < config.num_hamiltonians {
        let r = records.iter().filter(|r| r.ham_index == done).count();
        let s = spectral.iter().filter(|s| s.ham_index == done).count();
        if r != per_h || s != spec_per_h {
            break;
        }
        done += 1;
    }
    done
}

/// Loads the completed prefix of a previous run, or prepares a fresh output directory.
fn prepare_output(config: &ExperimentConfig, resume: bool) -> Result<(Vec<BenchRecord>, Vec<SpectralRecord>)> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let hash = config.hash();
    if resume && manifest_path.exists() {
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)
            .map_err(|e| QgaError::Parse(format!("{}: {e}", manifest_path.display())))?;
        if manifest.config_hash != hash {
            return Err(QgaError::ResumeConflict(format!(
                "{} was produced by configuration {} but the current one hashes to {hash}",
                dir.display(),
                manifest.config_hash
            )));
        }
        let load = |name: &str| -> Result<bool> { Ok(dir.join(name).exists()) };
        let mut records: Vec<BenchRecord> = if load(RECORDS_FILE)? { read_jsonl(&dir.join(RECORDS_FILE))? } else { Vec::new() };
        let mut spectral: Vec<SpectralRecord> = if load(SPECTRAL_FILE)? { read_jsonl(&dir.join(SPECTRAL_FILE))? } else { Vec::new() };
        let done = complete_prefix(config, &records, &spectral);
        records.retain(|r| r.ham_index < done);
        spectral.retain(|s| s.ham_index < done);
        write_jsonl(&dir.join(RECORDS_FILE), &records)?;
        write_jsonl(&dir.join(SPECTRAL_FILE), &spectral)?;
        info!("resuming after {done} completed Hamiltonians");
        return Ok((records, spectral));
    }
    let manifest = Manifest { config_hash: hash, config: config.clone() };
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    File::create(dir.join(RECORDS_FILE))?;
    File::create(dir.join(SPECTRAL_FILE))?;
    Ok((Vec::new(), Vec::new()))
}

fn append_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(OpenOptions::new().append(true).open(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Runs (or resumes) the experiment, writing records incrementally, then the summary
/// and scatter files.
pub fn run_experiment(config: &ExperimentConfig, resume: bool) -> Result<ExperimentOutcome> {
    config.validate()?;
    let layout = config.layout()?;
    let pool = worker_pool()?;
    let (mut records, mut spectral) = prepare_output(config, resume)?;
    let start = complete_prefix(config, &records, &spectral);
    let runner = Runner { config, layout, variants: config.variant_list(), master: RngStream::new(config.seed) };
    let chunk = pool.current_num_threads().max(1);
    let records_path = config.output_dir.join(RECORDS_FILE);
    let spectral_path = config.output_dir.join(SPECTRAL_FILE);

    let mut next = start;
    while next < config.num_hamiltonians {
        let end = (next + chunk).min(config.num_hamiltonians);
        let hams: Vec<ProblemHamiltonian> = (next..end).map(|i| experiment_hamiltonian(config, i)).collect();
        let mut tasks = Vec::new();
        for ham in next..end {
            for variant in 0..runner.variants.len() {
                for init in 0..config.num_initial_states {
                    tasks.push(Task::Trajectory { ham, variant, init });
                }
            }
            if config.spectral {
                for cloner in config.spectral_cloners() {
                    tasks.push(Task::Spectral { ham, cloner });
                }
            }
        }
        let results: Vec<TaskResult> = pool.install(|| {
            tasks
                .par_iter()
                .map(|task| match *task {
                    Task::Trajectory { ham, variant, init } => {
                        TaskResult::Record(runner.trajectory(&hams[ham - next], ham, variant, init))
                    }
                    Task::Spectral { ham, cloner } => TaskResult::Spectral(runner.spectral(&hams[ham - next], ham, cloner)),
                })
                .collect()
        });
        let (mut new_records, mut new_spectral) = (Vec::new(), Vec::new());
        for r in results {
            match r {
                TaskResult::Record(r) => new_records.push(r),
                TaskResult::Spectral(s) => new_spectral.push(s),
            }
        }
        append_jsonl(&records_path, &new_records)?;
        append_jsonl(&spectral_path, &new_spectral)?;
        records.extend(new_records);
        spectral.extend(new_spectral);
        info!("completed Hamiltonians {next}..{end} of {}", config.num_hamiltonians);
        next = end;
    }

    let mut summary = aggregate(&records, &spectral)?;
    summary.config_hash = Some(config.hash());
    fs::write(config.output_dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)? + "\n")?;
    write_scatter_csv(&config.output_dir.join(SCATTER_FILE), &scatter_rows(&records, &spectral))?;
    Ok(ExperimentOutcome { records, spectral, summary, computed_hamiltonians: config.num_hamiltonians - start })
}

#[cfg(test)]
mod tests;
