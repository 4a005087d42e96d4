pub mod analysis;
pub mod cli;
pub mod code;
pub mod dense;
pub mod error;
pub mod evaluator;
pub mod hamiltonian;
pub mod measure;
pub mod pauli;
pub mod protocol;
pub mod report;
pub mod state;
pub mod strategy;
