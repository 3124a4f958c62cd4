//! The QGA subroutines as quantum channels.
//!
//! Every channel acts linearly on arbitrary `D x D` operators (not only density
//! matrices), which is what the spectral analysis needs. States are kept in the
//! computational basis; only the sorting channel moves to the problem basis
//! internally.

mod cloning;
mod crossover;
pub mod kraus;
mod mutation;
mod sort;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{QgaError, Result};
use crate::hamiltonian::ProblemHamiltonian;
use crate::layout::PopulationLayout;
use crate::linalg::{max_abs_diff, permute_conjugate, CMatrix};
use crate::random::RngStream;
use crate::state::{validate_density, PopulationState};

pub use cloning::{bcqo_reference, uqcm_reference};
pub use crossover::crossover_qubit_pairs;
pub use mutation::{sample_mutation_unitary, sample_pauli_string, Pauli, PauliString};
pub use sort::{comparator_schedule, SortTable};

use cloning::{bcqo_permutation, ResetOp, UqcmOp};
use crossover::qubit_swap_permutation;
use mutation::DepolarizeOp;
use sort::SortOp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Identity,
    Sort,
    Reset,
    Clone,
    Swap,
    Mutate,
    Unitary,
    Composite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cloner {
    Bcqo,
    Uqcm,
}

impl Cloner {
    /// Reference state the lower registers are reset to before cloning.
    pub fn reference(self, layout: PopulationLayout) -> CMatrix {
        match self {
            Cloner::Bcqo => bcqo_reference(layout),
            Cloner::Uqcm => uqcm_reference(layout),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Cloner::Bcqo => "bcqo",
            Cloner::Uqcm => "uqcm",
        }
    }
}

impl std::str::FromStr for Cloner {
    type Err = QgaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bcqo" => Ok(Cloner::Bcqo),
            "uqcm" => Ok(Cloner::Uqcm),
            other => Err(QgaError::Config(format!("unknown cloner '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationMode {
    Off,
    Sampled,
    Exact,
}

impl std::str::FromStr for MutationMode {
    type Err = QgaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "off" => Ok(MutationMode::Off),
            "sampled" => Ok(MutationMode::Sampled),
            "exact" => Ok(MutationMode::Exact),
            other => Err(QgaError::Config(format!("unknown mutation mode '{other}'"))),
        }
    }
}

/// Mutation probability used throughout the benchmark.
pub const DEFAULT_MUTATION_PROBABILITY: f64 = 1.0 / 24.0;

/// Cloner plus mutation setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub cloner: Cloner,
    pub mutation: MutationMode,
    /// Per-qubit mutation probability; ignored when mutation is off.
    #[serde(default)]
    pub p_m: f64,
}

impl Variant {
    pub fn new(cloner: Cloner, mutation: MutationMode, p_m: f64) -> Result<Self> {
        let v = Self { cloner, mutation, p_m };
        v.validate()?;
        Ok(v)
    }

    pub fn without_mutation(cloner: Cloner) -> Self {
        Self { cloner, mutation: MutationMode::Off, p_m: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_m) {
            return Err(QgaError::Config(format!("mutation probability {} outside [0, 1]", self.p_m)));
        }
        Ok(())
    }

    /// The four benchmark variants: both cloners, mutation off and sampled.
    pub fn standard_set() -> Vec<Variant> {
        let p = DEFAULT_MUTATION_PROBABILITY;
        vec![
            Self::without_mutation(Cloner::Bcqo),
            Self { cloner: Cloner::Bcqo, mutation: MutationMode::Sampled, p_m: p },
            Self::without_mutation(Cloner::Uqcm),
            Self { cloner: Cloner::Uqcm, mutation: MutationMode::Sampled, p_m: p },
        ]
    }

    /// Same cloner with mutation switched off.
    pub fn mutation_off(&self) -> Variant {
        Self::without_mutation(self.cloner)
    }

    pub fn has_mutation(&self) -> bool {
        self.mutation != MutationMode::Off && self.p_m > 0.0
    }

    /// Short label, e.g. `uqcm/off` or `bcqo/sampled`.
    pub fn label(&self) -> String {
        let m = match self.mutation {
            MutationMode::Off => "off",
            MutationMode::Sampled => "sampled",
            MutationMode::Exact => "exact",
        };
        format!("{}/{m}", self.cloner.name())
    }
}

#[derive(Debug, Clone)]
enum Op {
    Sort(Arc<SortOp>),
    Reset(Arc<ResetOp>),
    Permute(Arc<Vec<usize>>),
    Uqcm(Arc<UqcmOp>),
    Depolarize(DepolarizeOp),
    /// Pauli string drawn per application; its ensemble average is `Depolarize`.
    SampledPauli { p: f64, average: DepolarizeOp },
    Unitary(Arc<CMatrix>),
}

impl Op {
    fn apply(&self, m: CMatrix) -> CMatrix {
        match self {
            Op::Sort(op) => op.apply(m),
            Op::Reset(op) => op.apply(&m),
            Op::Permute(perm) => permute_conjugate(&m, perm),
            Op::Uqcm(op) => op.apply(m),
            Op::Depolarize(op) => op.apply(m),
            Op::SampledPauli { average, .. } => average.apply(m),
            Op::Unitary(u) => &**u * m * u.adjoint(),
        }
    }

    fn apply_sampled(&self, layout: PopulationLayout, m: CMatrix, rng: &mut RngStream) -> CMatrix {
        match self {
            Op::SampledPauli { p, .. } => sample_pauli_string(layout, *p, rng).conjugate(&m),
            other => other.apply(m),
        }
    }
}

/// A CPTP map on the population.
///
/// Channels are immutable and cheap to clone. A channel containing sampled mutation is
/// stochastic: [`apply_sampled`](Self::apply_sampled) draws one Pauli string per
/// mutation step, while [`apply`](Self::apply) uses the ensemble average, which is the
/// exact mutation channel.
#[derive(Debug, Clone)]
pub struct Channel {
    layout: PopulationLayout,
    kind: ChannelKind,
    ops: Vec<Op>,
}

impl Channel {
    fn single(layout: PopulationLayout, kind: ChannelKind, op: Op) -> Self {
        Self { layout, kind, ops: vec![op] }
    }

    pub fn identity(layout: PopulationLayout) -> Self {
        Self { layout, kind: ChannelKind::Identity, ops: Vec::new() }
    }

    /// Applies `parts` in order (first element acts first).
    pub fn compose(layout: PopulationLayout, parts: Vec<Channel>) -> Result<Self> {
        let mut ops = Vec::new();
        for part in parts {
            if part.layout != layout {
                return Err(QgaError::Config(format!(
                    "cannot compose a channel on {} into one on {layout}",
                    part.layout
                )));
            }
            ops.extend(part.ops);
        }
        Ok(Self { layout, kind: ChannelKind::Composite, ops })
    }

    /// `self` followed by `next`.
    pub fn then(self, next: Channel) -> Result<Self> {
        let layout = self.layout;
        Self::compose(layout, vec![self, next])
    }

    pub fn layout(&self) -> PopulationLayout {
        self.layout
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn is_stochastic(&self) -> bool {
        self.ops.iter().any(|op| matches!(op, Op::SampledPauli { .. }))
    }

    /// Linear action on any `D x D` operator.
    pub fn apply_matrix(&self, m: &CMatrix) -> Result<CMatrix> {
        let dim = self.layout.dim();
        if m.nrows() != dim || m.ncols() != dim {
            return Err(QgaError::Range(format!(
                "operator is {}x{}, channel acts on {dim}x{dim}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(self.apply_owned(m.clone()))
    }

    pub(crate) fn apply_owned(&self, m: CMatrix) -> CMatrix {
        self.ops.iter().fold(m, |acc, op| op.apply(acc))
    }

    pub fn apply(&self, state: &PopulationState) -> PopulationState {
        assert_eq!(state.layout(), self.layout, "state and channel layouts differ");
        let out = self.apply_owned(state.matrix().clone());
        PopulationState::from_matrix(self.layout, out).expect("channel preserves shape")
    }

    /// Applies the channel drawing fresh randomness for stochastic steps.
    pub fn apply_sampled(&self, state: &PopulationState, rng: &mut RngStream) -> PopulationState {
        assert_eq!(state.layout(), self.layout, "state and channel layouts differ");
        let out = self
            .ops
            .iter()
            .fold(state.matrix().clone(), |acc, op| op.apply_sampled(self.layout, acc, rng));
        PopulationState::from_matrix(self.layout, out).expect("channel preserves shape")
    }
}

fn check_hamiltonian(layout: PopulationLayout, h: &ProblemHamiltonian) -> Result<()> {
    if h.qubits() != layout.qubits_per_register() {
        return Err(QgaError::Config(format!(
            "Hamiltonian acts on {} qubits but registers have {}",
            h.qubits(),
            layout.qubits_per_register()
        )));
    }
    Ok(())
}

/// Builds the classical sorting trace for `h`.
pub fn build_sort_table(layout: PopulationLayout, h: &ProblemHamiltonian) -> Result<SortTable> {
    check_hamiltonian(layout, h)?;
    Ok(SortTable::build(layout, h))
}

/// `rho -> sum_kappa A_kappa rho A_kappa†`, sorting registers by energy under `h`.
pub fn sorting_channel(layout: PopulationLayout, h: &ProblemHamiltonian) -> Result<Channel> {
    check_hamiltonian(layout, h)?;
    Ok(Channel::single(layout, ChannelKind::Sort, Op::Sort(Arc::new(SortOp::new(layout, h)))))
}

/// `rho -> tr_low(rho) ⊗ rho_0^{⊗ n/2}`.
pub fn reset_channel(layout: PopulationLayout, reference: &CMatrix) -> Result<Channel> {
    let d = layout.individual_dim();
    if reference.nrows() != d || reference.ncols() != d {
        return Err(QgaError::Range(format!("reference state must be {d}x{d}")));
    }
    validate_density(reference)
        .map_err(|e| QgaError::Contract(format!("reference is not a density matrix: {e}")))?;
    Ok(Channel::single(layout, ChannelKind::Reset, Op::Reset(Arc::new(ResetOp::new(layout, reference)))))
}

/// Transversal XOR cloner `|j>|k> -> |j>|k ⊕ j>` on every pair `(i, i + n/2)`.
pub fn bcqo_clone_channel(layout: PopulationLayout) -> Channel {
    Channel::single(layout, ChannelKind::Clone, Op::Permute(Arc::new(bcqo_permutation(layout))))
}

/// Bužek–Hillery symmetric cloner on every pair `(i, i + n/2)`.
pub fn uqcm_clone_channel(layout: PopulationLayout) -> Channel {
    Channel::single(layout, ChannelKind::Clone, Op::Uqcm(Arc::new(UqcmOp::new(layout))))
}

pub fn clone_channel(layout: PopulationLayout, cloner: Cloner) -> Channel {
    match cloner {
        Cloner::Bcqo => bcqo_clone_channel(layout),
        Cloner::Uqcm => uqcm_clone_channel(layout),
    }
}

/// Crossover qubit exchange between consecutive lower registers.
pub fn crossover_swap(layout: PopulationLayout) -> Channel {
    let perm = qubit_swap_permutation(layout, &crossover_qubit_pairs(layout));
    Channel::single(layout, ChannelKind::Swap, Op::Permute(Arc::new(perm)))
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QgaError::Config(format!("mutation probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Independent Pauli mutation with probability `p` on every qubit, as a channel.
pub fn mutation_channel_exact(layout: PopulationLayout, p: f64) -> Result<Channel> {
    check_probability(p)?;
    Ok(Channel::single(layout, ChannelKind::Mutate, Op::Depolarize(DepolarizeOp::new(layout, p))))
}

/// Mutation that draws one Pauli string per application.
pub fn mutation_channel_sampled(layout: PopulationLayout, p: f64) -> Result<Channel> {
    check_probability(p)?;
    Ok(Channel::single(
        layout,
        ChannelKind::Mutate,
        Op::SampledPauli { p, average: DepolarizeOp::new(layout, p) },
    ))
}

/// `rho -> u rho u†` for a population-wide unitary.
pub fn unitary_channel(layout: PopulationLayout, u: CMatrix) -> Result<Channel> {
    let defect = crate::linalg::unitarity_defect(&u);
    if u.nrows() != layout.dim() || defect > crate::state::UNITARY_TOL {
        return Err(QgaError::Contract(format!("not a {0}x{0} unitary (defect {defect:.3e})", layout.dim())));
    }
    Ok(Channel::single(layout, ChannelKind::Unitary, Op::Unitary(Arc::new(u))))
}

/// One generation: reset, clone, crossover swap, mutation, sort.
pub fn generation_channel(layout: PopulationLayout, h: &ProblemHamiltonian, variant: &Variant) -> Result<Channel> {
    generation_channel_with_reference(layout, h, variant, &variant.cloner.reference(layout))
}

/// As [`generation_channel`] with an explicit reset state, which must be the one the
/// cloner requires.
pub fn generation_channel_with_reference(
    layout: PopulationLayout,
    h: &ProblemHamiltonian,
    variant: &Variant,
    reference: &CMatrix,
) -> Result<Channel> {
    variant.validate()?;
    let expected = variant.cloner.reference(layout);
    if reference.shape() != expected.shape() || max_abs_diff(reference, &expected) > 1e-12 {
        return Err(QgaError::Config(format!(
            "the {} cloner requires its own reference state for the reset",
            variant.cloner.name()
        )));
    }
    let mut parts = vec![
        reset_channel(layout, reference)?,
        clone_channel(layout, variant.cloner),
        crossover_swap(layout),
    ];
    match variant.mutation {
        MutationMode::Off => {}
        MutationMode::Exact => parts.push(mutation_channel_exact(layout, variant.p_m)?),
        MutationMode::Sampled => parts.push(mutation_channel_sampled(layout, variant.p_m)?),
    }
    parts.push(sorting_channel(layout, h)?);
    Channel::compose(layout, parts)
}
