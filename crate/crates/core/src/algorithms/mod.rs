//! Oracles, single-member solvers, the greedy multi-task planner and its audits.

pub mod audit;
pub mod genrl;
pub mod linear;
pub mod metarl;
pub mod oracle;
pub mod search;
pub mod sio;

pub use linear::{linear_trajectory, path_to_linear_policy, sio_linear_witness};
pub use oracle::{ExactOracle, PerturbedOracle, Prop1Oracle, ValueOracle};
pub use sio::{sio_greedy_solve, sio_query_bound, SioSolution, SioVariant};
pub use audit::{concentration_audit, expected_q, q_gap_audit, ConcentrationParams, ConcentrationReport, QGapReport, QGapViolation};
pub use genrl::{genrl_sample_size, genrl_train, GenRlConfig, GenRlStep, GenRlTrace, TieBreak};
pub use metarl::{run_meta_protocol, MetaOutcome, MetaParams, META_SUCCESS_THRESHOLD};
pub use search::{locate_shared_leaf, SearchOutcome};
