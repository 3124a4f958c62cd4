//! Iterating the generation channel and recording figures of merit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::{generation_channel, sorting_channel, Channel, Variant};
use crate::error::{QgaError, Result};
use crate::hamiltonian::ProblemHamiltonian;
use crate::layout::PopulationLayout;
use crate::linalg::{tensor, CMatrix};
use crate::random::{haar_pure_state, RngStream};
use crate::state::{fidelity_pure, PopulationState};

/// Reduced state of the first (best) register.
fn best_register(state: &PopulationState) -> CMatrix {
    state.partial_trace(&[0]).expect("register 0 always exists")
}

fn check_dims(state: &PopulationState, h: &ProblemHamiltonian) -> Result<()> {
    if state.layout().individual_dim() != h.dim() {
        return Err(QgaError::Range(format!(
            "population registers have dimension {}, Hamiltonian has {}",
            state.layout().individual_dim(),
            h.dim()
        )));
    }
    Ok(())
}

/// `<u_1| tr_{rest}(rho) |u_1>`, clamped into `[0, 1]` against rounding.
pub fn qga_fidelity(state: &PopulationState, h: &ProblemHamiltonian) -> Result<f64> {
    check_dims(state, h)?;
    Ok(fidelity_pure(&best_register(state), &h.ground_state())?.clamp(0.0, 1.0))
}

/// `tr[H_P rho_1]`: expected energy of the first register.
pub fn best_individual_energy(state: &PopulationState, h: &ProblemHamiltonian) -> Result<f64> {
    check_dims(state, h)?;
    let rho1 = best_register(state);
    let mut energy = 0.0;
    for (k, eps) in h.eigenvalues().iter().enumerate() {
        let u = h.eigenvector(k);
        energy += eps * fidelity_pure(&rho1, &u)?;
    }
    Ok(energy)
}

/// How initial populations are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum InitMode {
    /// One Haar-random pure state on all `n c` qubits.
    #[default]
    #[serde(rename = "haar-full")]
    HaarFull,
    /// An independent Haar-random pure state per register.
    #[serde(rename = "haar-product")]
    HaarProduct,
}

impl InitMode {
    pub fn name(self) -> &'static str {
        match self {
            InitMode::HaarFull => "haar-full",
            InitMode::HaarProduct => "haar-product",
        }
    }
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitMode {
    type Err = QgaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar-full" => Ok(InitMode::HaarFull),
            "haar-product" => Ok(InitMode::HaarProduct),
            other => Err(QgaError::Parse(format!("unknown init mode '{other}' (haar-full|haar-product)"))),
        }
    }
}

pub fn sample_initial_state(layout: PopulationLayout, mode: InitMode, rng: &mut RngStream) -> PopulationState {
    let m = match mode {
        InitMode::HaarFull => haar_pure_state(layout.dim(), rng).projector(),
        InitMode::HaarProduct => {
            let d = layout.individual_dim();
            let first = haar_pure_state(d, rng).projector();
            (1..layout.registers()).fold(first, |acc, _| tensor(&acc, &haar_pure_state(d, rng).projector()))
        }
    };
    PopulationState::from_matrix(layout, m).expect("sampled state has the layout's shape")
}

/// One run of the algorithm. Entry `g` of each series is measured after generation
/// `g`; entry 0 after the initial sort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub ham_hash: String,
    pub variant: Variant,
    pub seed: u64,
    pub init_mode: InitMode,
    pub fidelity_series: Vec<f64>,
    pub energy_series: Vec<f64>,
    #[serde(skip)]
    pub states: Option<Vec<PopulationState>>,
}

impl Trajectory {
    pub fn generations(&self) -> usize {
        self.fidelity_series.len() - 1
    }

    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity_series.last().expect("series is never empty")
    }

    pub fn final_energy(&self) -> f64 {
        *self.energy_series.last().expect("series is never empty")
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// A Hamiltonian and variant with their channels built once, for repeated runs.
#[derive(Debug, Clone)]
pub struct Engine {
    h: ProblemHamiltonian,
    variant: Variant,
    ham_hash: String,
    sort: Channel,
    generation: Channel,
    retain_states: bool,
}

impl Engine {
    pub fn new(layout: PopulationLayout, h: &ProblemHamiltonian, variant: &Variant) -> Result<Self> {
        Ok(Self {
            h: h.clone(),
            variant: *variant,
            ham_hash: h.content_hash(),
            sort: sorting_channel(layout, h)?,
            generation: generation_channel(layout, h, variant)?,
            retain_states: false,
        })
    }

    /// Keep every post-generation state in the trajectory.
    pub fn retain_states(mut self, retain: bool) -> Self {
        self.retain_states = retain;
        self
    }

    pub fn generation_channel(&self) -> &Channel {
        &self.generation
    }

    /// Sorts `rho_in`, then applies the generation channel `generations` times.
    /// Sampled mutation draws from `rng`; deterministic variants never touch it.
    pub fn run(&self, rho_in: &PopulationState, generations: usize, init_mode: InitMode, rng: &mut RngStream) -> Result<Trajectory> {
        if generations == 0 {
            return Err(QgaError::Config("at least one generation is required".into()));
        }
        if rho_in.layout() != self.generation.layout() {
            return Err(QgaError::Range(format!(
                "initial state is on {}, the channel on {}",
                rho_in.layout(),
                self.generation.layout()
            )));
        }
        let seed = rng.seed();
        let mut fidelity_series = Vec::with_capacity(generations + 1);
        let mut energy_series = Vec::with_capacity(generations + 1);
        let mut states = self.retain_states.then(Vec::new);

        let mut rho = self.sort.apply(rho_in);
        for g in 0..=generations {
            if g > 0 {
                rho = if self.generation.is_stochastic() {
                    self.generation.apply_sampled(&rho, rng)
                } else {
                    self.generation.apply(&rho)
                };
            }
            fidelity_series.push(qga_fidelity(&rho, &self.h)?);
            energy_series.push(best_individual_energy(&rho, &self.h)?);
            if let Some(s) = states.as_mut() {
                s.push(rho.clone());
            }
        }
        Ok(Trajectory {
            ham_hash: self.ham_hash.clone(),
            variant: self.variant,
            seed,
            init_mode,
            fidelity_series,
            energy_series,
            states,
        })
    }
}

/// Runs `generations` generations of `variant` from `rho_in`.
pub fn run(
    rho_in: &PopulationState,
    h: &ProblemHamiltonian,
    variant: &Variant,
    generations: usize,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    Engine::new(rho_in.layout(), h, variant)?.run(rho_in, generations, InitMode::HaarFull, rng)
}
