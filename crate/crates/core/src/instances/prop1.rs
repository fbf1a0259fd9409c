//! Single-MDP block tree on which a pessimistic value oracle hides the optimum.
//!
//! Levels are chunked into blocks of length `b`. Each block anchor (a node at a
//! level divisible by `b`) has one special descendant at the next boundary that
//! keeps the anchor's value; every other descendant there loses `beta`. Leaves
//! pay their value on the final transition, so the best leaf is worth `V0` and
//! a path that misses every special node is worth `V0 - beta * H / b`.

use std::sync::Arc;

use serde::Serialize;

use super::features::{feature_seed, LazyFeatureMap};
use super::theorem1::{default_feature_dim, MAX_TREE_HORIZON};
use crate::error::{Error, Result};
use crate::family::{FamilyManifest, HiddenMetadata, MdpDistribution};
use crate::mdp::{ActionId, LayeredMdp, Representation, SequencePolicy, StateRef, TransitionSupport, TreePath, DEFAULT_STATE_CAP};
use crate::seed::mix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop1Params {
    pub horizon: u32,
    pub block: u32,
    pub beta: f64,
    pub seed: u64,
    pub base_value: f64,
    pub feature_dim: usize,
    pub sample_cost: u64,
}

/// Block length matching `n` samples per step: `ceil(log2(50 n))`.
pub fn block_length_for_samples(n: u64) -> u32 {
    (50.0 * n as f64).log2().ceil() as u32
}

impl Prop1Params {
    pub fn new(horizon: u32, block: u32, beta: f64, seed: u64) -> Self {
        Prop1Params {
            horizon,
            block,
            beta,
            seed,
            base_value: 1.0,
            feature_dim: default_feature_dim(horizon),
            sample_cost: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (h, b) = (self.horizon, self.block);
        if h < 1 || h > MAX_TREE_HORIZON {
            return Err(Error::InvalidParams(format!("horizon must be in [1, {MAX_TREE_HORIZON}], got {h}")));
        }
        if b < 1 || h % b != 0 {
            return Err(Error::InvalidParams(format!("block length {b} must divide horizon {h}")));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParams(format!("beta must be non-negative, got {}", self.beta)));
        }
        let worst = self.base_value - self.beta * self.blocks() as f64;
        if !(worst >= 0.0 && self.base_value <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "leaf values must lie in [0, 1], got range [{worst}, {}]",
                self.base_value
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

    pub fn blocks(&self) -> u32 {
        self.horizon / self.block
    }

    /// Value lost by a path that misses every special node.
    pub fn full_gap(&self) -> f64 {
        self.beta * self.blocks() as f64
    }
}

#[derive(Debug, Clone)]
pub struct Prop1Mdp {
    params: Prop1Params,
    features: LazyFeatureMap,
}

impl Prop1Mdp {
    pub fn build(params: Prop1Params) -> Result<Self> {
        params.validate()?;
        Ok(Prop1Mdp {
            params,
            features: LazyFeatureMap::new(feature_seed(params.seed), params.feature_dim),
        })
    }

    pub fn params(&self) -> &Prop1Params {
        &self.params
    }

    /// Special descendant of `anchor` at the next block boundary.
    pub fn special_child(&self, anchor: &TreePath) -> TreePath {
        let b = self.params.block;
        debug_assert!(anchor.len() % b == 0 && anchor.len() < self.params.horizon);
        let offset = mix(&[self.params.seed, 0xB10C, anchor.bits(), anchor.len() as u64]) & ((1u64 << b) - 1);
        anchor.extend(offset, b)
    }

    /// Anchor of the block that `p` lies strictly after.
    fn anchor_of(&self, p: &TreePath) -> TreePath {
        let b = self.params.block;
        p.prefix(b * ((p.len() - 1) / b))
    }

    /// Value of a boundary node: `V0` less `beta` per missed special node.
    pub fn boundary_value(&self, p: &TreePath) -> f64 {
        let b = self.params.block;
        debug_assert!(p.len() % b == 0);
        let mut v = self.params.base_value;
        for j in 1..=p.len() / b {
            if p.prefix(j * b) != self.special_child(&p.prefix((j - 1) * b)) {
                v -= self.params.beta;
            }
        }
        v
    }

    /// Best leaf below `p`, following special nodes.
    pub fn best_leaf(&self, p: &TreePath) -> TreePath {
        let b = self.params.block;
        let mut q = *p;
        if q.len() % b != 0 {
            let special = self.special_child(&self.anchor_of(&q));
            q = if q.is_prefix_of(&special) {
                special
            } else {
                let next = b * q.len().div_ceil(b);
                q.extend(0, next - q.len())
            };
        }
        while q.len() < self.params.horizon {
            q = self.special_child(&q);
        }
        q
    }

    /// Path from the root to the optimal leaf.
    pub fn optimal_leaf(&self) -> TreePath {
        self.best_leaf(&TreePath::root())
    }
}

impl LayeredMdp for Prop1Mdp {
    fn horizon(&self) -> u32 {
        self.params.horizon
    }

    fn action_count(&self) -> u32 {
        2
    }

    fn contains(&self, s: &StateRef) -> bool {
        matches!(s, StateRef::Tree(p) if p.len() <= self.params.horizon)
    }

    fn transition(&self, s: &StateRef, a: ActionId) -> TransitionSupport {
        let p = s.tree_path().expect("tree state");
        TransitionSupport::deterministic(StateRef::Tree(p.child(a)))
    }

    fn reward(&self, s: &StateRef, a: ActionId) -> f64 {
        match s.tree_path() {
            Some(p) if p.len() + 1 == self.params.horizon => self.boundary_value(&p.child(a)),
            _ => 0.0,
        }
    }

    fn feature_dim(&self) -> usize {
        self.features.dim()
    }

    fn feature(&self, s: &StateRef, a: ActionId) -> Vec<f64> {
        self.features.feature(s, a)
    }

    fn representation(&self) -> Representation {
        if (1usize << (self.params.horizon + 1).min(63)) <= DEFAULT_STATE_CAP {
            Representation::Explicit
        } else {
            Representation::Implicit
        }
    }

    fn analytic_optimal_value(&self, s: &StateRef) -> Option<f64> {
        let p = s.tree_path()?;
        if p.len() >= self.params.horizon {
            return Some(0.0);
        }
        Some(self.boundary_value(&self.best_leaf(&p)))
    }
}

/// How the pessimistic oracle treats nodes at block boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum BoundaryRule {
    /// Boundary nodes report their parent block's anchor value less `beta`,
    /// so siblings that differ only in being special look identical.
    Pessimistic,
    /// Boundary nodes report their exact optimal value.
    Exact,
}

/// What the pessimistic oracle needs: the instance and its block structure.
#[derive(Debug, Clone)]
pub struct Prop1OracleSpec {
    mdp: Arc<Prop1Mdp>,
}

impl Prop1OracleSpec {
    pub fn mdp(&self) -> &Prop1Mdp {
        &self.mdp
    }

    pub fn beta(&self) -> f64 {
        self.mdp.params.beta
    }

    /// Anchor value less `beta` inside blocks; boundaries follow `rule`, with
    /// the root treated as its own anchor. Terminal states report 0.
    pub fn value(&self, s: &StateRef, rule: BoundaryRule) -> f64 {
        let Some(p) = s.tree_path() else { return 0.0 };
        let m = &self.mdp;
        if p.len() >= m.params.horizon {
            return 0.0;
        }
        let exact = |q: TreePath| m.analytic_optimal_value(&StateRef::Tree(q)).expect("tree state");
        if p.len() % m.params.block == 0 && rule == BoundaryRule::Exact {
            return exact(p);
        }
        let anchor = if p.is_root() { p } else { m.anchor_of(&p) };
        exact(anchor) - m.params.beta
    }
}

/// Point-mass family over the block tree plus the pessimistic oracle's spec.
pub fn build_prop1_instance(params: Prop1Params) -> Result<(MdpDistribution, Prop1OracleSpec)> {
    let mdp = Arc::new(Prop1Mdp::build(params)?);
    let manifest = FamilyManifest::new()
        .with("family", "prop1")
        .with("horizon", params.horizon)
        .with("actions", 2)
        .with("block", params.block)
        .with("beta", params.beta)
        .with("base_value", params.base_value)
        .with("seed", params.seed)
        .with("feature_dim", params.feature_dim)
        .with("samples_per_block", format!("50n <= 2^{}", params.block))
        .with("sample_cost", params.sample_cost)
        .with("shared_state_space", true)
        .with("shared_deterministic_transitions", true);
    let hidden = HiddenMetadata {
        star_path: Some(mdp.optimal_leaf()),
        star_policy: Some(Arc::new(SequencePolicy::from_path(mdp.optimal_leaf(), params.horizon))),
    };
    let dist = MdpDistribution::point_mass(mdp.clone(), params.sample_cost, true)?
        .with_hidden(hidden)
        .with_manifest(manifest);
    Ok((dist, Prop1OracleSpec { mdp }))
}
