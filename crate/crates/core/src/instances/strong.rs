//! Positive family: members share a binary tree and one optimal policy but
//! draw their rewards independently.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::features::{feature_seed, LazyFeatureMap};
use crate::error::{Error, Result};
use crate::family::{FamilyFlags, FamilyManifest, HiddenMetadata, MdpDistribution, SharedMdp};
use crate::mdp::{ActionId, DeterministicPolicy, LayeredMdp, Representation, StateRef, TransitionSupport, TreePath};
use crate::seed::mix;

pub const MAX_DENSE_HORIZON: u32 = 16;

/// Deterministic binary tree with an explicit reward per state-action pair.
#[derive(Debug, Clone)]
pub struct RewardTreeMdp {
    horizon: u32,
    /// Indexed by `2 * node + action`, nodes in breadth-first order.
    rewards: Vec<f64>,
    features: LazyFeatureMap,
}

fn node_index(p: &TreePath) -> usize {
    (1usize << p.len()) - 1 + p.bits() as usize
}

impl RewardTreeMdp {
    pub fn new(horizon: u32, rewards: Vec<f64>, features: LazyFeatureMap) -> Result<Self> {
        if horizon < 1 || horizon > MAX_DENSE_HORIZON {
            return Err(Error::InvalidParams(format!(
                "horizon must be in [1, {MAX_DENSE_HORIZON}], got {horizon}"
            )));
        }
        let expected = 2 * ((1usize << horizon) - 1);
        if rewards.len() != expected {
            return Err(Error::InvalidParams(format!(
                "expected {expected} rewards, got {}",
                rewards.len()
            )));
        }
        if let Some(r) = rewards.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidParams(format!("reward {r} outside [0, 1]")));
        }
        Ok(RewardTreeMdp {
            horizon,
            rewards,
            features,
        })
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }
}

impl LayeredMdp for RewardTreeMdp {
    fn horizon(&self) -> u32 {
        self.horizon
    }

    fn action_count(&self) -> u32 {
        2
    }

    fn contains(&self, s: &StateRef) -> bool {
        matches!(s, StateRef::Tree(p) if p.len() <= self.horizon)
    }

    fn transition(&self, s: &StateRef, a: ActionId) -> TransitionSupport {
        let p = s.tree_path().expect("tree state");
        TransitionSupport::deterministic(StateRef::Tree(p.child(a)))
    }

    fn reward(&self, s: &StateRef, a: ActionId) -> f64 {
        match s.tree_path() {
            Some(p) if p.len() < self.horizon => self.rewards[2 * node_index(&p) + a.index()],
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
        Representation::Explicit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrongParams {
    pub horizon: u32,
    pub members: u64,
    /// Upper end of the raw reward draw.
    pub spread: f64,
    pub seed: u64,
    pub feature_dim: usize,
    pub sample_cost: u64,
}

/// Fraction of `spread` by which the shared action beats every alternative.
pub const STRONG_MARGIN: f64 = 0.05;

impl StrongParams {
    pub fn new(horizon: u32, members: u64, seed: u64) -> Self {
        StrongParams {
            horizon,
            members,
            spread: 1.0,
            seed,
            feature_dim: 16,
            sample_cost: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 || self.horizon > MAX_DENSE_HORIZON {
            return Err(Error::InvalidParams(format!(
                "horizon must be in [1, {MAX_DENSE_HORIZON}], got {}",
                self.horizon
            )));
        }
        if self.members < 1 {
            return Err(Error::InvalidParams("need at least one member".into()));
        }
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            return Err(Error::InvalidParams(format!("spread must be positive, got {}", self.spread)));
        }
        if self.feature_dim < super::features::MIN_FEATURE_DIM {
            return Err(Error::InvalidParams("feature dimension must be at least 8".into()));
        }
        if self.sample_cost < 1 {
            return Err(Error::InvalidParams("sample cost must be at least 1".into()));
        }
        Ok(())
    }
}

/// Built family with the shared optimal policy exposed for audits.
#[derive(Debug, Clone)]
pub struct StrongFamily {
    pub params: StrongParams,
    pub members: Vec<Arc<RewardTreeMdp>>,
    pub star_policy: Arc<DeterministicPolicy>,
}

impl StrongFamily {
    pub fn build(params: StrongParams) -> Result<Self> {
        params.validate()?;
        let h = params.horizon;
        let nodes = (1usize << h) - 1;
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[params.seed, 0x5770]));
        let star: Vec<usize> = (0..nodes).map(|_| rng.random_range(0..2)).collect();

        let mut raw = Vec::with_capacity(params.members as usize);
        let mut best = 0.0f64;
        for _ in 0..params.members {
            let (rewards, root_value) = strong_rewards(h, &star, params.spread, &mut rng);
            best = best.max(root_value);
            raw.push(rewards);
        }
        // Shrinks by a few ulps so rounded path sums never exceed 1.
        let scale = (1.0 - 4.0 * h as f64 * f64::EPSILON) / best;
        let features = LazyFeatureMap::new(feature_seed(params.seed), params.feature_dim);
        let members = raw
            .into_iter()
            .map(|r| RewardTreeMdp::new(h, r.into_iter().map(|x| x * scale).collect(), features).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;

        let mut policy = DeterministicPolicy::new(Default::default(), ActionId(0));
        for idx in 0..nodes {
            let len = (idx + 1).ilog2();
            let bits = (idx + 1 - (1 << len)) as u64;
            policy.insert(StateRef::Tree(TreePath::from_bits(bits, len)), ActionId(star[idx] as u32));
        }
        Ok(StrongFamily {
            params,
            members,
            star_policy: Arc::new(policy),
        })
    }

    pub fn manifest(&self) -> FamilyManifest {
        let p = &self.params;
        FamilyManifest::new()
            .with("family", "strong")
            .with("horizon", p.horizon)
            .with("actions", 2)
            .with("members", p.members)
            .with("spread", p.spread)
            .with("margin", STRONG_MARGIN)
            .with("seed", p.seed)
            .with("feature_dim", p.feature_dim)
            .with("sample_cost", p.sample_cost)
            .with("shared_state_space", true)
            .with("shared_deterministic_transitions", true)
    }

    pub fn distribution(&self) -> MdpDistribution {
        let members = self.members.iter().map(|m| m.clone() as SharedMdp).collect();
        let hidden = HiddenMetadata {
            star_path: None,
            star_policy: Some(self.star_policy.clone()),
        };
        MdpDistribution::uniform_listed(members, self.params.sample_cost, FamilyFlags::DETERMINISTIC)
            .expect("validated parameters")
            .with_hidden(hidden)
            .with_manifest(self.manifest())
    }
}

/// Raw rewards in `[0, spread]`, raised bottom-up so the shared action wins by
/// the margin everywhere. Returns the rewards and the root value.
fn strong_rewards<R: Rng>(h: u32, star: &[usize], spread: f64, rng: &mut R) -> (Vec<f64>, f64) {
    let nodes = star.len();
    let mut rewards: Vec<f64> = (0..2 * nodes).map(|_| rng.random_range(0.0..=spread)).collect();
    let margin = STRONG_MARGIN * spread;
    let mut value = vec![0.0; nodes + (1 << h)];
    for idx in (0..nodes).rev() {
        let q = |a: usize, r: &[f64]| r[2 * idx + a] + value[2 * idx + 1 + a];
        let (s, o) = (star[idx], 1 - star[idx]);
        let short = q(o, &rewards) + margin - q(s, &rewards);
        if short > 0.0 {
            rewards[2 * idx + s] += short;
        }
        value[idx] = q(s, &rewards);
    }
    (rewards, value[0])
}

pub fn build_strong_family(params: StrongParams) -> Result<MdpDistribution> {
    Ok(StrongFamily::build(params)?.distribution())
}
