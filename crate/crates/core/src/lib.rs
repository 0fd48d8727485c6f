//! Epidemic spreading on a community network simulated with a system/bath
//! spin Hamiltonian.
//!
//! Each site (index patient, household, community) is a spin: `|0⟩` healthy,
//! `|1⟩` infected. Every site has a bath partner; the bath is periodically
//! reset to its ground state and index patients are re-infected, so the
//! system relaxes like a susceptible/infectious model. Susceptible sites show
//! exponential survival curves with a rate set by their couplings.
//!
//! Modules:
//!
//! * [`state`] dense statevector and density-matrix kernels
//! * [`evolution`] the Hamiltonian, Trotterized reset protocol and rate fits
//! * [`geometry`] Gaussian contact model and the rate/coupling inversion
//! * [`calibration`] λ from the secondary attack rate, σ from R0, rescaling
//! * [`oracle`] second-order Markov chain and RK4 reference engines
//! * [`scenario`] JSON scenarios, output files and the command implementations

pub mod calibration;
pub mod error;
pub mod evolution;
pub mod fit;
pub mod geometry;
pub mod oracle;
pub mod scenario;
pub mod state;

pub use error::{Error, Result};
pub use evolution::{
    build_terms, extract_infection_rate, run_protocol, EpidemicModel, HamiltonianTerm, RateFit, SimulationMode,
    TermKind, TimeSeries,
};
pub use geometry::{CommunityMap, ContactProfile, Region, SiteKind};
pub use oracle::StochasticMatrix;
pub use state::{init_basis_state, QuantumState, Representation, ShotResult};
