//! Statevector VQE workbench built around progressive operator-block ansatz growth.
//!
//! The pipeline is: FCIDUMP integrals -> Jordan-Wigner qubit Hamiltonian ->
//! operator screening -> block pool -> micro/macro optimisation cycles.

pub mod driver;
pub mod error;
pub mod exact;
pub mod fermion;
pub mod hamiltonian;
pub mod optimizer;
pub mod pauli;
pub mod screening;
pub mod state;

pub use driver::{
    run_adapt, run_compass_pro, run_method, run_static, InitStrategy, MacroTrace, Method,
    RunConfig, RunOutcome, RunStatus, StaticKind, TraceRow, Workbench,
};
pub use error::{Error, Result};
pub use exact::{fci_spectrum, Eigenpair};
pub use hamiltonian::{load_fixture, Fixture, MoleculeSystem};
pub use screening::{build_block_pool, OperatorBlock, Thresholds};
