//! Continuous-time quantum walk simulation on 2D photonic waveguide
//! lattices: lattice geometry and couplings, tight-binding Hamiltonian
//! assembly, unitary evolution with two independent backends, transport and
//! recurrence observables, and a classical random-walk baseline.

pub mod classical;
pub mod evolution;
pub mod hamiltonian;
pub mod lattice;
pub mod observables;

pub use evolution::{
    evolve_krylov, evolve_spectral, evolve_trace, evolve_trace_with, Backend, EvolutionError,
    EvolutionTrace, KrylovOptions, ProbabilityGrid, Propagator, StateVector,
};
pub use hamiltonian::{Hamiltonian, HermiticityReport};
pub use lattice::{CouplingModel, CouplingPair, Lattice, LatticeError, LatticeSpec};
