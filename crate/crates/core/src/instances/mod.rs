//! Generators for the hard MDP families.

pub mod corollary2;
pub mod features;
pub mod prop1;
pub mod strong;
pub mod theorem1;

pub use corollary2::{build_corollary2_family, Corollary2Instance, Corollary2Member, Corollary2Params};
pub use features::{check_incoherence, feature_seed, incoherent_dimension, IncoherenceReport, LazyFeatureMap};
pub use theorem1::{build_theorem1_family, default_feature_dim, default_gap, Theorem1Instance, Theorem1Member, Theorem1Params};
pub use prop1::{block_length_for_samples, build_prop1_instance, BoundaryRule, Prop1Mdp, Prop1OracleSpec, Prop1Params};
pub use strong::{build_strong_family, RewardTreeMdp, StrongFamily, StrongParams, STRONG_MARGIN};
