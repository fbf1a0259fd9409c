//! Finite weighted families of MDPs over a shared state-action space.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mdp::{
    backup, policy_value, ActionId, DeterministicPolicy, LayeredMdp, Policy, StateRef, TreePath,
    DEFAULT_STATE_CAP, PROBABILITY_TOLERANCE,
};
use crate::query::QueryLedger;

pub type SharedMdp = Arc<dyn LayeredMdp>;
pub type MemberBuilder = Arc<dyn Fn(u64) -> SharedMdp + Send + Sync>;

#[derive(Clone)]
pub enum Members {
    Listed(Vec<(f64, SharedMdp)>),
    /// `count` equally weighted members built on demand from their id.
    Uniform { count: u64, build: MemberBuilder },
}

impl fmt::Debug for Members {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Members::Listed(m) => write!(f, "Listed({} members)", m.len()),
            Members::Uniform { count, .. } => write!(f, "Uniform({count} members)"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FamilyFlags {
    pub shared_state_space: bool,
    pub shared_deterministic_transitions: bool,
}

impl FamilyFlags {
    pub const DETERMINISTIC: FamilyFlags = FamilyFlags {
        shared_state_space: true,
        shared_deterministic_transitions: true,
    };
    pub const SHARED_SPACE: FamilyFlags = FamilyFlags {
        shared_state_space: true,
        shared_deterministic_transitions: false,
    };
}

/// Construction secrets, for audits and measurement only.
#[derive(Clone, Default)]
pub struct HiddenMetadata {
    pub star_path: Option<TreePath>,
    pub star_policy: Option<Arc<dyn Policy>>,
}

impl fmt::Debug for HiddenMetadata {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HiddenMetadata")
            .field("star_path", &self.star_path)
            .field("star_policy", &self.star_policy.is_some())
            .finish()
    }
}

/// Provenance record written next to experiment results.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FamilyManifest {
    entries: Vec<(String, String)>,
}

impl FamilyManifest {
    pub fn new() -> Self {
        FamilyManifest::default()
    }

    pub fn with(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.insert(key, value);
        self
    }

    /// Sets `key`, replacing an earlier value in place.
    pub fn insert(&mut self, key: &str, value: impl fmt::Display) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// First 16 hex digits of the SHA-256 of the text form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The distribution over MDPs that training and test tasks are drawn from.
#[derive(Debug, Clone)]
pub struct MdpDistribution {
    members: Members,
    cumulative: Vec<f64>,
    sample_cost: u64,
    flags: FamilyFlags,
    horizon: u32,
    action_count: u32,
    hidden: HiddenMetadata,
    manifest: FamilyManifest,
}

impl MdpDistribution {
    pub fn listed(members: Vec<(f64, SharedMdp)>, sample_cost: u64, flags: FamilyFlags) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidParams("family needs at least one member".into()))?;
        let (horizon, action_count) = (first.1.horizon(), first.1.action_count());
        let mut cumulative = Vec::with_capacity(members.len());
        let mut total = 0.0;
        for (i, (w, m)) in members.iter().enumerate() {
            if !(*w > 0.0) {
                return Err(Error::InvalidParams(format!("member {i} has non-positive weight {w}")));
            }
            if m.horizon() != horizon || m.action_count() != action_count {
                return Err(Error::NotSharedSpace);
            }
            total += w;
            cumulative.push(total);
        }
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::InvalidParams(format!("member weights sum to {total}")));
        }
        Self::check_sample_cost(sample_cost)?;
        Ok(MdpDistribution {
            members: Members::Listed(members),
            cumulative,
            sample_cost,
            flags,
            horizon,
            action_count,
            hidden: HiddenMetadata::default(),
            manifest: FamilyManifest::new(),
        })
    }

    pub fn uniform_listed(members: Vec<SharedMdp>, sample_cost: u64, flags: FamilyFlags) -> Result<Self> {
        let w = 1.0 / members.len() as f64;
        Self::listed(members.into_iter().map(|m| (w, m)).collect(), sample_cost, flags)
    }

    pub fn uniform(count: u64, build: MemberBuilder, sample_cost: u64, flags: FamilyFlags) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParams("family needs at least one member".into()));
        }
        Self::check_sample_cost(sample_cost)?;
        let probe = build(0);
        Ok(MdpDistribution {
            horizon: probe.horizon(),
            action_count: probe.action_count(),
            members: Members::Uniform { count, build },
            cumulative: Vec::new(),
            sample_cost,
            flags,
            hidden: HiddenMetadata::default(),
            manifest: FamilyManifest::new(),
        })
    }

    pub fn point_mass(mdp: SharedMdp, sample_cost: u64, deterministic: bool) -> Result<Self> {
        let flags = FamilyFlags {
            shared_state_space: true,
            shared_deterministic_transitions: deterministic,
        };
        Self::listed(vec![(1.0, mdp)], sample_cost, flags)
    }

    fn check_sample_cost(sample_cost: u64) -> Result<()> {
        if sample_cost == 0 {
            return Err(Error::InvalidParams("per-MDP sample cost must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_hidden(mut self, hidden: HiddenMetadata) -> Self {
        self.hidden = hidden;
        self
    }

    pub fn with_manifest(mut self, manifest: FamilyManifest) -> Self {
        self.manifest = manifest;
        self
    }

    pub fn with_sample_cost(mut self, sample_cost: u64) -> Result<Self> {
        Self::check_sample_cost(sample_cost)?;
        self.sample_cost = sample_cost;
        self.manifest.insert("sample_cost", sample_cost);
        Ok(self)
    }

    pub fn len(&self) -> u64 {
        match &self.members {
            Members::Listed(m) => m.len() as u64,
            Members::Uniform { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn member(&self, id: u64) -> SharedMdp {
        match &self.members {
            Members::Listed(m) => m[id as usize].1.clone(),
            Members::Uniform { count, build } => {
                assert!(id < *count, "member {id} out of range");
                build(id)
            }
        }
    }

    pub fn weight(&self, id: u64) -> f64 {
        match &self.members {
            Members::Listed(m) => m[id as usize].0,
            Members::Uniform { count, .. } => 1.0 / *count as f64,
        }
    }

    pub fn members(&self) -> &Members {
        &self.members
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn action_count(&self) -> u32 {
        self.action_count
    }

    pub fn sample_cost(&self) -> u64 {
        self.sample_cost
    }

    pub fn flags(&self) -> FamilyFlags {
        self.flags
    }

    pub fn manifest(&self) -> &FamilyManifest {
        &self.manifest
    }

    pub fn manifest_mut(&mut self) -> &mut FamilyManifest {
        &mut self.manifest
    }

    /// Construction secrets. Audit and measurement code only; algorithms under
    /// test must never read this.
    pub fn audit_metadata(&self) -> &HiddenMetadata {
        &self.hidden
    }

    /// Draws a member i.i.d. by weight and charges the per-MDP sample cost.
    pub fn sample_mdp<R: Rng + ?Sized>(&self, ledger: &mut QueryLedger, rng: &mut R) -> Result<(u64, SharedMdp)> {
        ledger.charge_sample()?;
        let id = match &self.members {
            Members::Listed(m) => {
                let u: f64 = rng.random::<f64>() * self.cumulative[m.len() - 1];
                self.cumulative.partition_point(|&c| c <= u).min(m.len() - 1) as u64
            }
            Members::Uniform { count, .. } => rng.random_range(0..*count),
        };
        Ok((id, self.member(id)))
    }

    /// Per-member values of `policy` from the initial state, in id order.
    pub fn member_values<P: Policy + ?Sized>(&self, policy: &P) -> Result<Vec<f64>> {
        (0..self.len())
            .into_par_iter()
            .map(|id| {
                let m = self.member(id);
                policy_value(&*m, policy, &m.initial_state())
            })
            .collect()
    }
}

/// Exact weighted average of the policy's value from the initial state.
pub fn expected_policy_value<P: Policy + ?Sized>(dist: &MdpDistribution, policy: &P) -> Result<f64> {
    let values = dist.member_values(policy)?;
    Ok(values
        .iter()
        .enumerate()
        .map(|(id, v)| dist.weight(id as u64) * v)
        .sum())
}

/// Best expected value over all deterministic policies, for families whose
/// members share deterministic transitions.
///
/// Runs dynamic programming on the weight-averaged reward and re-evaluates the
/// maximizing policy with [`expected_policy_value`], so the returned value is
/// directly comparable to evaluations of other policies.
pub fn max_expected_value(dist: &MdpDistribution) -> Result<(f64, DeterministicPolicy)> {
    if !dist.flags().shared_deterministic_transitions {
        return Err(Error::NotDeterministicFamily);
    }
    let members: Vec<(f64, SharedMdp)> = (0..dist.len()).map(|id| (dist.weight(id), dist.member(id))).collect();
    let mut memo: HashMap<StateRef, (f64, ActionId)> = HashMap::new();
    mixture_solve(&members, members[0].1.initial_state(), &mut memo)?;
    let mut policy = DeterministicPolicy::default();
    for (s, (_, a)) in &memo {
        if !members[0].1.is_terminal(s) {
            policy.insert(*s, *a);
        }
    }
    let value = expected_policy_value(dist, &policy)?;
    Ok((value, policy))
}

fn mixture_solve(
    members: &[(f64, SharedMdp)],
    s: StateRef,
    memo: &mut HashMap<StateRef, (f64, ActionId)>,
) -> Result<f64> {
    if let Some((v, _)) = memo.get(&s) {
        return Ok(*v);
    }
    let reference = &members[0].1;
    let entry = if reference.is_terminal(&s) {
        (0.0, ActionId(0))
    } else {
        let mut best = (f64::NEG_INFINITY, ActionId(0));
        for a in 0..reference.action_count() {
            let a = ActionId(a);
            let support = reference.transition(&s, a);
            let next = support.entries()[0].0;
            let mean_reward: f64 = members.iter().map(|(w, m)| w * m.reward(&s, a)).sum();
            let q = backup(mean_reward, [(1.0, mixture_solve(members, next, memo)?)]);
            if q > best.0 {
                best = (q, a);
            }
        }
        best
    };
    if memo.len() >= DEFAULT_STATE_CAP {
        return Err(Error::CapExceeded { cap: DEFAULT_STATE_CAP });
    }
    memo.insert(s, entry);
    Ok(entry.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{SequencePolicy, TabularMdp};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain(r: f64) -> SharedMdp {
        Arc::new(TabularMdp::chain(&[r, r], 2).unwrap())
    }

    #[test]
    fn weights_must_sum_to_one() {
        let bad = MdpDistribution::listed(vec![(0.5, chain(0.1)), (0.4, chain(0.2))], 1, FamilyFlags::DETERMINISTIC);
        assert!(bad.is_err());
        let neg = MdpDistribution::listed(vec![(1.5, chain(0.1)), (-0.5, chain(0.2))], 1, FamilyFlags::DETERMINISTIC);
        assert!(neg.is_err());
    }

    #[test]
    fn point_mass_samples_one_member_and_charges() {
        let d = MdpDistribution::point_mass(chain(0.1), 4, true).unwrap();
        let mut ledger = QueryLedger::new(4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 1..=10 {
            assert_eq!(d.sample_mdp(&mut ledger, &mut rng).unwrap().0, 0);
            assert_eq!(ledger.total_cost(), 4 * k);
        }
    }

    #[test]
    fn uniform_listed_accepts_thirds() {
        let d = MdpDistribution::uniform_listed(vec![chain(0.1), chain(0.2), chain(0.3)], 1, FamilyFlags::DETERMINISTIC)
            .unwrap();
        let v = expected_policy_value(&d, &SequencePolicy::constant(ActionId(0), 2)).unwrap();
        assert!((v - 0.4).abs() < 1e-12);
    }

    #[test]
    fn mixture_optimum_on_chains() {
        let d = MdpDistribution::listed(vec![(0.25, chain(0.1)), (0.75, chain(0.3))], 1, FamilyFlags::DETERMINISTIC)
            .unwrap();
        let (v, _) = max_expected_value(&d).unwrap();
        assert!((v - (0.25 * 0.2 + 0.75 * 0.6)).abs() < 1e-12);
    }

    #[test]
    fn manifest_hash_is_stable_and_sensitive() {
        let a = FamilyManifest::new().with("horizon", 12).with("seed", 3);
        let b = FamilyManifest::new().with("horizon", 12).with("seed", 4);
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        assert_eq!(a.to_text(), "horizon = 12\nseed = 3\n");
    }
}
