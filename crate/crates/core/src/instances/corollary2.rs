//! Stochastic family with a shared reward function.
//!
//! A binary tree of depth `H/2` feeds one chain per leaf; each chain ends in the
//! reward state `One`, which pays 1 and exits. Members differ only in their
//! transitions: chains below a member's non-special leaves leak to the zero exit
//! with probability `10/H` per step, and tree edges on a member's special paths
//! between levels `H/4` and `H/2` jump straight to `One` with probability
//! `1/H^(k-1)`. Special leaves are the hidden star leaf plus leaf `i` of every
//! other level-`H/4` subtree.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::features::{feature_seed, LazyFeatureMap};
use super::theorem1::default_feature_dim;
use crate::error::{Error, Result};
use crate::family::{FamilyFlags, FamilyManifest, HiddenMetadata, MdpDistribution, SharedMdp};
use crate::mdp::{
    backup, ActionId, LayeredMdp, Representation, SequencePolicy, StateRef, TransitionSupport, TreePath,
    DEFAULT_STATE_CAP,
};
use crate::seed::mix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Corollary2Params {
    pub horizon: u32,
    pub k: u32,
    pub seed: u64,
    pub feature_dim: usize,
    pub sample_cost: u64,
}

impl Corollary2Params {
    pub fn new(horizon: u32, k: u32, seed: u64) -> Self {
        Corollary2Params {
            horizon,
            k,
            seed,
            feature_dim: default_feature_dim(horizon),
            sample_cost: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.horizon;
        if h < 12 || h % 4 != 0 || h > 124 {
            return Err(Error::InvalidParams(format!(
                "horizon must be a multiple of 4 in [12, 124], got {h}"
            )));
        }
        if self.k < 3 {
            return Err(Error::InvalidParams(format!("k must be at least 3, got {}", self.k)));
        }
        if self.feature_dim < super::features::MIN_FEATURE_DIM {
            return Err(Error::InvalidParams("feature dimension must be at least 8".into()));
        }
        if self.sample_cost < 1 {
            return Err(Error::InvalidParams("sample cost must be at least 1".into()));
        }
        let (pe, pj) = (self.p_exit(), self.p_jump());
        if !(0.0 < pj && pj < pe && pe < 1.0) {
            return Err(Error::InvalidParams(format!(
                "need 0 < p_jump < p_exit < 1, got {pj} and {pe}"
            )));
        }
        Ok(())
    }

    pub fn p_exit(&self) -> f64 {
        10.0 / self.horizon as f64
    }

    pub fn p_jump(&self) -> f64 {
        1.0 / (self.horizon as f64).powi(self.k as i32 - 1)
    }

    pub fn leaf_level(&self) -> u32 {
        self.horizon / 2
    }

    pub fn subtree_level(&self) -> u32 {
        self.horizon / 4
    }

    /// Chain nodes below each leaf, before the reward state at level `H - 1`.
    pub fn chain_length(&self) -> u32 {
        self.horizon / 2 - 2
    }

    pub fn member_count(&self) -> u64 {
        1u64 << self.subtree_level()
    }
}

#[derive(Debug)]
struct Layout {
    params: Corollary2Params,
    star: TreePath,
    stay_exit: f64,
    stay_jump: f64,
    features: LazyFeatureMap,
}

impl Layout {
    fn subtree(&self, p: &TreePath) -> u64 {
        p.bits() >> (p.len() - self.params.subtree_level())
    }

    fn special_leaf(&self, subtree: u64, member: u64) -> TreePath {
        if subtree == self.subtree(&self.star) {
            self.star
        } else {
            let q = self.params.subtree_level();
            TreePath::from_bits((subtree << q) | member, self.params.leaf_level())
        }
    }

    /// Value of `One` reached by the end of a chain or by a jump.
    fn one_value(&self) -> f64 {
        backup(1.0, [(1.0, 0.0)])
    }

    /// Value at chain depth `depth` (the leaf itself is depth 0).
    fn chain_value(&self, special: bool, depth: u32) -> f64 {
        let p = &self.params;
        let mut v = self.one_value();
        for _ in depth..=p.chain_length() {
            v = if special {
                backup(0.0, [(1.0, v)])
            } else {
                backup(0.0, [(self.stay_exit, v), (p.p_exit(), 0.0)])
            };
        }
        v
    }

    /// Value of a tree node at `level` lying on a special path.
    fn special_tree_value(&self, level: u32) -> f64 {
        let p = &self.params;
        let mut v = self.chain_value(true, 0);
        for h in (level..p.leaf_level()).rev() {
            v = if h >= p.subtree_level() {
                backup(0.0, [(self.stay_jump, v), (p.p_jump(), self.one_value())])
            } else {
                backup(0.0, [(1.0, v)])
            };
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct Corollary2Member {
    layout: Arc<Layout>,
    index: u64,
}

impl Corollary2Member {
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn params(&self) -> &Corollary2Params {
        &self.layout.params
    }

    /// Whether tree node `p` leads to one of this member's special leaves.
    fn on_special(&self, p: &TreePath) -> bool {
        if p.len() < self.layout.params.subtree_level() {
            return true;
        }
        let t = self.layout.subtree(p);
        p.is_prefix_of(&self.layout.special_leaf(t, self.index))
    }

    fn chain_step(&self, leaf: TreePath, next: StateRef, level: u32) -> TransitionSupport {
        if self.on_special(&leaf) {
            TransitionSupport::deterministic(next)
        } else {
            TransitionSupport::split(
                next,
                self.layout.stay_exit,
                StateRef::TerminalZero { level: level + 1 },
                self.layout.params.p_exit(),
            )
        }
    }
}

impl LayeredMdp for Corollary2Member {
    fn horizon(&self) -> u32 {
        self.layout.params.horizon
    }

    fn action_count(&self) -> u32 {
        2
    }

    fn contains(&self, s: &StateRef) -> bool {
        let p = &self.layout.params;
        match *s {
            StateRef::Tree(t) => t.len() <= p.leaf_level(),
            StateRef::Chain { leaf, depth } => {
                leaf.len() == p.leaf_level() && (1..=p.chain_length()).contains(&depth)
            }
            StateRef::TerminalOne { level } => level < p.horizon,
            StateRef::TerminalZero { level } => level <= p.horizon,
            StateRef::Tabular { .. } => false,
        }
    }

    fn transition(&self, s: &StateRef, a: ActionId) -> TransitionSupport {
        let p = &self.layout.params;
        match *s {
            StateRef::Tree(t) if t.len() < p.leaf_level() => {
                let child = t.child(a);
                let level = t.len();
                if level >= p.subtree_level() && self.on_special(&child) {
                    TransitionSupport::split(
                        StateRef::Tree(child),
                        self.layout.stay_jump,
                        StateRef::TerminalOne { level: level + 1 },
                        p.p_jump(),
                    )
                } else {
                    TransitionSupport::deterministic(StateRef::Tree(child))
                }
            }
            StateRef::Tree(leaf) => self.chain_step(leaf, StateRef::Chain { leaf, depth: 1 }, leaf.len()),
            StateRef::Chain { leaf, depth } => {
                let next = if depth < p.chain_length() {
                    StateRef::Chain { leaf, depth: depth + 1 }
                } else {
                    StateRef::TerminalOne { level: p.horizon - 1 }
                };
                self.chain_step(leaf, next, s.level())
            }
            StateRef::TerminalOne { level } => TransitionSupport::deterministic(StateRef::TerminalZero { level: level + 1 }),
            StateRef::TerminalZero { .. } | StateRef::Tabular { .. } => {
                panic!("no transition from {s:?}")
            }
        }
    }

    fn reward(&self, s: &StateRef, _a: ActionId) -> f64 {
        match s {
            StateRef::TerminalOne { .. } => 1.0,
            _ => 0.0,
        }
    }

    fn feature_dim(&self) -> usize {
        self.layout.features.dim()
    }

    fn feature(&self, s: &StateRef, a: ActionId) -> Vec<f64> {
        self.layout.features.feature(s, a)
    }

    fn representation(&self) -> Representation {
        let p = &self.layout.params;
        let states = (1u128 << (p.leaf_level() + 1)) * p.horizon as u128;
        if states <= DEFAULT_STATE_CAP as u128 {
            Representation::Explicit
        } else {
            Representation::Implicit
        }
    }

    fn analytic_optimal_value(&self, s: &StateRef) -> Option<f64> {
        let p = &self.layout.params;
        if self.is_terminal(s) {
            return Some(0.0);
        }
        Some(match *s {
            StateRef::TerminalOne { .. } => self.layout.one_value(),
            StateRef::Chain { leaf, depth } => self.layout.chain_value(self.on_special(&leaf), depth),
            StateRef::Tree(t) if t.len() == p.leaf_level() => self.layout.chain_value(self.on_special(&t), 0),
            StateRef::Tree(t) if self.on_special(&t) => self.layout.special_tree_value(t.len()),
            StateRef::Tree(_) => self.layout.chain_value(false, 0),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Corollary2Instance {
    layout: Arc<Layout>,
}

impl Corollary2Instance {
    pub fn build(params: Corollary2Params) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[params.seed, 0xC02]));
        let leaves = 1u64 << params.leaf_level();
        let star = TreePath::from_bits(rng.random_range(0..leaves), params.leaf_level());
        Ok(Corollary2Instance {
            layout: Arc::new(Layout {
                params,
                star,
                stay_exit: 1.0 - params.p_exit(),
                stay_jump: 1.0 - params.p_jump(),
                features: LazyFeatureMap::new(feature_seed(params.seed), params.feature_dim),
            }),
        })
    }

    pub fn params(&self) -> &Corollary2Params {
        &self.layout.params
    }

    pub fn member(&self, index: u64) -> Corollary2Member {
        assert!(index < self.params().member_count(), "member {index} out of range");
        Corollary2Member {
            layout: self.layout.clone(),
            index,
        }
    }

    /// Leaf special for every member. Audit use only.
    pub fn star_leaf(&self) -> TreePath {
        self.layout.star
    }

    pub fn manifest(&self) -> FamilyManifest {
        let p = self.params();
        FamilyManifest::new()
            .with("family", "corollary2")
            .with("horizon", p.horizon)
            .with("actions", 2)
            .with("k", p.k)
            .with("seed", p.seed)
            .with("feature_dim", p.feature_dim)
            .with("members", p.member_count())
            .with("p_exit", p.p_exit())
            .with("p_jump", p.p_jump())
            .with("sample_cost", p.sample_cost)
            .with("shared_state_space", true)
            .with("shared_deterministic_transitions", false)
    }

    pub fn distribution(&self) -> MdpDistribution {
        let this = self.clone();
        let build = Arc::new(move |i: u64| Arc::new(this.member(i)) as SharedMdp);
        let hidden = HiddenMetadata {
            star_path: Some(self.star_leaf()),
            star_policy: Some(Arc::new(SequencePolicy::from_path(self.star_leaf(), self.params().horizon))),
        };
        MdpDistribution::uniform(
            self.params().member_count(),
            build,
            self.params().sample_cost,
            FamilyFlags::SHARED_SPACE,
        )
        .expect("validated parameters")
        .with_hidden(hidden)
        .with_manifest(self.manifest())
    }
}

pub fn build_corollary2_family(params: Corollary2Params) -> Result<MdpDistribution> {
    Ok(Corollary2Instance::build(params)?.distribution())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{optimal_values, policy_value};

    fn small(h: u32) -> Corollary2Instance {
        let mut p = Corollary2Params::new(h, 3, 5);
        p.feature_dim = 16;
        Corollary2Instance::build(p).unwrap()
    }

    #[test]
    fn validation() {
        assert!(Corollary2Params::new(14, 3, 0).validate().is_err());
        assert!(Corollary2Params::new(16, 2, 0).validate().is_err());
        assert!(Corollary2Params::new(8, 3, 0).validate().is_err());
        assert!(Corollary2Params::new(12, 3, 0).validate().is_ok());
    }

    #[test]
    fn analytic_matches_dp_everywhere() {
        for h in [12, 16, 20] {
            let inst = small(h);
            for i in 0..inst.params().member_count() {
                let m = inst.member(i);
                let table = optimal_values(&m).unwrap();
                for (s, v) in table.iter() {
                    assert_eq!(m.analytic_optimal_value(s), Some(*v), "H {h} member {i} state {s:?}");
                }
            }
        }
    }

    #[test]
    fn transitions_are_valid_and_layered() {
        let inst = small(12);
        let m = inst.member(1);
        let table = optimal_values(&m).unwrap();
        for s in table.decision_states() {
            for a in 0..2 {
                m.transition(s, ActionId(a)).validate_from(s.level()).unwrap();
            }
        }
    }

    #[test]
    fn star_path_value_is_one() {
        let inst = small(16);
        let star = SequencePolicy::from_path(inst.star_leaf(), 16);
        for i in 0..inst.params().member_count() {
            assert_eq!(policy_value(&inst.member(i), &star, &StateRef::root()).unwrap(), 1.0);
        }
    }
}
