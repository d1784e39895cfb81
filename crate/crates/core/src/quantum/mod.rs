//! Open-system simulation of the alternating dissipative/unitary automaton.

pub mod analytic;
pub mod density;
pub mod evolve;
pub mod integrate;
pub mod ops;
pub mod protocol;
pub mod space;

pub use analytic::{open_chain_recursion, threshold_angle};
pub use density::{overlap, DensityVec};
pub use evolve::{
    dissipative_evolve, dissipative_evolve_diagonal, dissipative_steady, unitary_step, StagePolicy,
};
pub use ops::{build_jump_operators, build_pxp, JumpOperatorSet, PxpHamiltonian};
pub use protocol::{run_protocol, CycleRecord, CycleTrace, ProtocolParams};
pub use space::{Space, SpaceKind};
