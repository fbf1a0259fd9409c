//! Deterministic binary-tree family in which every member has a different
//! optimal leaf in each subtree, except one hidden leaf that is optimal for all.
//!
//! Level `H/2` splits the tree into `2^(H/2)` subtrees of `2^(H/2)` leaves each.
//! Member `i` rewards `eps = 1 / (H/2 - g)` on the last `H/2 - g` edges of the
//! path to its target leaf in every subtree: the shared star leaf in the star
//! subtree and leaf `i` of every other subtree. The first `g` levels below the
//! split carry no reward, so locating a rewarded edge costs up to `2^g` probes.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::features::{feature_seed, incoherent_dimension, LazyFeatureMap};
use crate::error::{Error, Result};
use crate::family::{FamilyFlags, FamilyManifest, HiddenMetadata, MdpDistribution, SharedMdp};
use crate::mdp::{
    backup, ActionId, LayeredMdp, Representation, SequencePolicy, StateRef, TransitionSupport, TreePath,
    DEFAULT_STATE_CAP,
};
use crate::seed::mix;

pub const MAX_TREE_HORIZON: u32 = 62;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem1Params {
    pub horizon: u32,
    /// Unrewarded levels between the subtree roots and the first rewarded edge.
    pub gap: u32,
    /// Exponent of the query lower bound the default gap is derived from.
    pub k: u32,
    pub seed: u64,
    pub feature_dim: usize,
    pub sample_cost: u64,
}

/// `ceil(log2(H^k)) + 1`, when it leaves at least one rewarded edge.
pub fn default_gap(horizon: u32, k: u32) -> Option<u32> {
    let g = (k as f64 * (horizon as f64).log2()).ceil() as u32 + 1;
    (horizon / 2 > g).then_some(g)
}

/// Incoherent dimension for all `2^(H+1)` tree states at failure probability 0.01.
pub fn default_feature_dim(horizon: u32) -> usize {
    incoherent_dimension(2f64.powi(horizon as i32 + 1), 0.01)
}

impl Theorem1Params {
    pub fn new(horizon: u32, gap: u32, seed: u64) -> Self {
        Theorem1Params {
            horizon,
            gap,
            k: 3,
            seed,
            feature_dim: default_feature_dim(horizon),
            sample_cost: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.horizon;
        if h < 8 || h % 2 != 0 || h > MAX_TREE_HORIZON {
            return Err(Error::InvalidParams(format!(
                "horizon must be even and in [8, {MAX_TREE_HORIZON}], got {h}"
            )));
        }
        if self.gap < 1 || h / 2 <= self.gap {
            return Err(Error::InvalidParams(format!(
                "gap must satisfy 1 <= gap < H/2, got gap {} with H {h}",
                self.gap
            )));
        }
        if self.feature_dim < super::features::MIN_FEATURE_DIM {
            return Err(Error::InvalidParams("feature dimension must be at least 8".into()));
        }
        if self.sample_cost < 1 {
            return Err(Error::InvalidParams("sample cost must be at least 1".into()));
        }
        Ok(())
    }

    pub fn split_level(&self) -> u32 {
        self.horizon / 2
    }

    /// Level of the first rewarded edge.
    pub fn probe_level(&self) -> u32 {
        self.horizon / 2 + self.gap
    }

    pub fn rewarded_edges(&self) -> u32 {
        self.horizon / 2 - self.gap
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.rewarded_edges() as f64
    }

    pub fn member_count(&self) -> u64 {
        1u64 << (self.horizon / 2)
    }
}

/// `eps` summed over `edges` rewarded edges, in backup order.
pub(crate) fn path_sum(eps: f64, edges: u32) -> f64 {
    let mut v = 0.0;
    for _ in 0..edges {
        v = backup(eps, [(1.0, v)]);
    }
    v
}

#[derive(Debug)]
struct Layout {
    params: Theorem1Params,
    star: TreePath,
    eps: f64,
    features: LazyFeatureMap,
}

impl Layout {
    fn subtree(&self, p: &TreePath) -> u64 {
        p.bits() >> (p.len() - self.params.split_level())
    }

    fn star_subtree(&self) -> u64 {
        self.subtree(&self.star)
    }

    fn target(&self, subtree: u64, member: u64) -> TreePath {
        if subtree == self.star_subtree() {
            self.star
        } else {
            let half = self.params.split_level();
            TreePath::from_bits((subtree << half) | member, self.params.horizon)
        }
    }
}

/// One member of the family; shares its layout with all siblings.
#[derive(Debug, Clone)]
pub struct Theorem1Member {
    layout: Arc<Layout>,
    index: u64,
}

impl Theorem1Member {
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn params(&self) -> &Theorem1Params {
        &self.layout.params
    }

    pub fn features(&self) -> &LazyFeatureMap {
        &self.layout.features
    }

    /// Whether `p` lies on this member's rewarded path of its own subtree.
    fn on_target(&self, p: &TreePath) -> bool {
        let t = self.layout.subtree(p);
        p.is_prefix_of(&self.layout.target(t, self.index))
    }
}

impl LayeredMdp for Theorem1Member {
    fn horizon(&self) -> u32 {
        self.layout.params.horizon
    }

    fn action_count(&self) -> u32 {
        2
    }

    fn contains(&self, s: &StateRef) -> bool {
        matches!(s, StateRef::Tree(p) if p.len() <= self.horizon())
    }

    fn transition(&self, s: &StateRef, a: ActionId) -> TransitionSupport {
        let p = s.tree_path().expect("tree state");
        TransitionSupport::deterministic(StateRef::Tree(p.child(a)))
    }

    fn reward(&self, s: &StateRef, a: ActionId) -> f64 {
        let Some(p) = s.tree_path() else { return 0.0 };
        let level = p.len();
        if level < self.layout.params.probe_level() || level >= self.horizon() {
            return 0.0;
        }
        if self.on_target(&p.child(a)) {
            self.layout.eps
        } else {
            0.0
        }
    }

    fn feature_dim(&self) -> usize {
        self.layout.features.dim()
    }

    fn feature(&self, s: &StateRef, a: ActionId) -> Vec<f64> {
        self.layout.features.feature(s, a)
    }

    fn representation(&self) -> Representation {
        if (1usize << (self.horizon() + 1).min(63)) <= DEFAULT_STATE_CAP {
            Representation::Explicit
        } else {
            Representation::Implicit
        }
    }

    fn analytic_optimal_value(&self, s: &StateRef) -> Option<f64> {
        let p = s.tree_path()?;
        let params = &self.layout.params;
        let level = p.len();
        if level >= params.horizon {
            return Some(0.0);
        }
        if level <= params.split_level() {
            return Some(path_sum(self.layout.eps, params.rewarded_edges()));
        }
        if self.on_target(&p) {
            let remaining = params.horizon - level.max(params.probe_level());
            Some(path_sum(self.layout.eps, remaining))
        } else {
            Some(0.0)
        }
    }
}

/// Built family: the distribution plus typed access to its members.
#[derive(Debug, Clone)]
pub struct Theorem1Instance {
    layout: Arc<Layout>,
}

impl Theorem1Instance {
    pub fn build(params: Theorem1Params) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[params.seed, 0x57A2]));
        let leaves = 1u64 << params.horizon;
        let star = TreePath::from_bits(rng.random_range(0..leaves), params.horizon);
        Ok(Theorem1Instance {
            layout: Arc::new(Layout {
                params,
                star,
                eps: params.epsilon(),
                features: LazyFeatureMap::new(feature_seed(params.seed), params.feature_dim),
            }),
        })
    }

    pub fn params(&self) -> &Theorem1Params {
        &self.layout.params
    }

    pub fn member(&self, index: u64) -> Theorem1Member {
        assert!(index < self.params().member_count(), "member {index} out of range");
        Theorem1Member {
            layout: self.layout.clone(),
            index,
        }
    }

    /// The leaf optimal for every member. Audit use only.
    pub fn star_leaf(&self) -> TreePath {
        self.layout.star
    }

    pub fn manifest(&self) -> FamilyManifest {
        let p = self.params();
        FamilyManifest::new()
            .with("family", "theorem1")
            .with("horizon", p.horizon)
            .with("actions", 2)
            .with("gap", p.gap)
            .with("k", p.k)
            .with("seed", p.seed)
            .with("feature_dim", p.feature_dim)
            .with("members", p.member_count())
            .with("epsilon", p.epsilon())
            .with("sample_cost", p.sample_cost)
            .with("shared_state_space", true)
            .with("shared_deterministic_transitions", true)
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
            FamilyFlags::DETERMINISTIC,
        )
        .expect("validated parameters")
        .with_hidden(hidden)
        .with_manifest(self.manifest())
    }
}

pub fn build_theorem1_family(params: Theorem1Params) -> Result<MdpDistribution> {
    Ok(Theorem1Instance::build(params)?.distribution())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{optimal_values, policy_value};

    fn small() -> Theorem1Instance {
        let mut p = Theorem1Params::new(8, 1, 11);
        p.feature_dim = 16;
        Theorem1Instance::build(p).unwrap()
    }

    #[test]
    fn default_gap_values() {
        // ceil(3 * log2 64) + 1 = 19 < 32
        assert_eq!(default_gap(64, 3), Some(19));
        assert_eq!(default_gap(12, 3), None);
        assert_eq!(default_gap(16, 1), Some(5));
    }

    #[test]
    fn validation() {
        assert!(Theorem1Params::new(11, 2, 0).validate().is_err());
        assert!(Theorem1Params::new(12, 6, 0).validate().is_err());
        assert!(Theorem1Params::new(12, 0, 0).validate().is_err());
        assert!(Theorem1Params::new(6, 1, 0).validate().is_err());
        assert!(Theorem1Params::new(12, 5, 0).validate().is_ok());
    }

    #[test]
    fn analytic_matches_dp_everywhere() {
        let inst = small();
        for i in 0..inst.params().member_count() {
            let m = inst.member(i);
            let table = optimal_values(&m).unwrap();
            assert_eq!(table.len(), (1 << 9) - 1);
            for (s, v) in table.iter() {
                assert_eq!(m.analytic_optimal_value(s), Some(*v), "member {i} state {s:?}");
            }
        }
    }

    #[test]
    fn star_path_is_optimal_for_every_member() {
        let inst = small();
        let star = SequencePolicy::from_path(inst.star_leaf(), 8);
        for i in 0..inst.params().member_count() {
            let m = inst.member(i);
            assert_eq!(policy_value(&m, &star, &StateRef::root()).unwrap(), 1.0);
        }
    }
}
