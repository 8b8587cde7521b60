//! Variational decision diagrams (VDDs).
//!
//! A VDD stores an `n`-qubit wavefunction as a leveled binary multigraph whose
//! edges carry parameterized amplitudes. The crate provides graph
//! construction and validation ([`graph`], [`ansatz`]), Pauli Hamiltonians
//! and an exact ground-state oracle ([`pauli`], [`eigen`]), exact and Monte
//! Carlo energy/gradient engines ([`exact`], [`vmc`]), training loops
//! ([`optimize`]) and the reproduction experiments ([`experiments`]).

pub mod ansatz;
pub mod eigen;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod graph;
pub mod optimize;
pub mod params;
pub mod pauli;
pub mod rng;
pub mod vmc;

pub use ansatz::{AnsatzKind, InitScheme};
pub use error::{Result, VddError};
pub use exact::{GradientVector, StateVector};
pub use graph::{BitString, Child, Node, NodeId, ParamTriple, VddGraph};
pub use optimize::{GradientSource, LabeledDataset, LossKind, Optimizer, TrainConfig, TrainTrace};
pub use params::{ParamMode, ParamVector};
pub use pauli::{Boundary, Model, ModelSpec, Pauli, PauliHamiltonian, PauliString};
pub use vmc::VmcBatch;
