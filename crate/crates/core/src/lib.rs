//! Density-matrix simulator and spectral analyser for a quantum genetic algorithm
//! whose individuals live in separate registers.
//!
//! One generation of the algorithm is the channel
//! `sort ∘ mutate ∘ swap ∘ clone ∘ reset` acting on the population density matrix.
//! [`engine`] iterates it, [`spectral`] predicts its asymptotics from the dominant
//! eigenpairs of the channel, and [`bench`] runs the randomized benchmark that
//! compares both.

pub mod bench;
pub mod channels;
pub mod engine;
pub mod error;
pub mod fit;
pub mod hamiltonian;
pub mod layout;
pub mod linalg;
pub mod random;
pub mod spectral;
pub mod state;

pub use channels::{generation_channel, Channel, Cloner, MutationMode, Variant};
pub use error::{QgaError, Result};
pub use hamiltonian::ProblemHamiltonian;
pub use layout::PopulationLayout;
pub use random::RngStream;
pub use state::{PopulationState, PureState};
