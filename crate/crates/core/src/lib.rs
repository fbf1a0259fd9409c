//! Layered MDP families for studying when policies generalize across tasks.
//!
//! The crate provides implicit and explicit finite-horizon MDPs, generative and
//! episodic query models with exact cost accounting, weighted MDP families with
//! measurement of their similarity parameters, hard-instance generators, and
//! the greedy multi-task planner together with its audits.

pub mod algorithms;
pub mod error;
pub mod family;
pub mod instances;
pub mod mdp;
pub mod measure;
pub mod query;
pub mod seed;

pub use algorithms::{
    genrl_sample_size, genrl_train, sio_greedy_solve, ExactOracle, GenRlConfig, GenRlTrace, PerturbedOracle,
    Prop1Oracle, SioVariant, TieBreak, ValueOracle,
};
pub use error::{Error, Result};
pub use family::{
    expected_policy_value, max_expected_value, FamilyFlags, FamilyManifest, HiddenMetadata, MdpDistribution,
    SharedMdp,
};
pub use mdp::{
    linear_action, optimal_value, optimal_values, policy_value, rollout, tv_distance, ActionId,
    DeterministicPolicy, LayeredMdp, LinearPolicy, Policy, SequencePolicy, StateRef, TransitionSupport,
    TreePath,
};
pub use instances::{
    build_corollary2_family, build_prop1_instance, build_strong_family, build_theorem1_family, LazyFeatureMap,
};
pub use measure::{brute_force_shared_policy, measure_alpha, measure_gaps, simulation_lemma_check, AlphaMode};
pub use query::{open_episode, EpisodicSession, GenerativeModel, QueryLedger};
