use rand::Rng;
use smallvec::SmallVec;

use super::StateRef;
use crate::error::{Error, Result};

pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Finite successor distribution of a state-action pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSupport {
    entries: SmallVec<[(StateRef, f64); 2]>,
}

impl TransitionSupport {
    pub fn deterministic(next: StateRef) -> Self {
        let mut entries = SmallVec::new();
        entries.push((next, 1.0));
        TransitionSupport { entries }
    }

    /// Two-point distribution; `p_second` of zero collapses to a point mass.
    pub fn split(first: StateRef, p_first: f64, second: StateRef, p_second: f64) -> Self {
        if p_second == 0.0 {
            return Self::deterministic(first);
        }
        let mut entries = SmallVec::new();
        entries.push((first, p_first));
        entries.push((second, p_second));
        TransitionSupport { entries }
    }

    pub fn new(entries: impl IntoIterator<Item = (StateRef, f64)>) -> Result<Self> {
        let entries: SmallVec<[(StateRef, f64); 2]> = entries.into_iter().collect();
        let support = TransitionSupport { entries };
        support.validate()?;
        Ok(support)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidSupport("empty support".into()));
        }
        let mut total = 0.0;
        for &(s, p) in &self.entries {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidSupport(format!(
                    "probability {p} of {s:?} outside (0, 1]"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::InvalidSupport(format!("probabilities sum to {total}")));
        }
        Ok(())
    }

    /// Checks that every successor lies strictly below `level`.
    pub fn validate_from(&self, level: u32) -> Result<()> {
        self.validate()?;
        match self.entries.iter().find(|(s, _)| s.level() <= level) {
            Some((s, _)) => Err(Error::InvalidSupport(format!(
                "successor {s:?} does not advance past level {level}"
            ))),
            None => Ok(()),
        }
    }

    pub fn entries(&self) -> &[(StateRef, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_deterministic(&self) -> bool {
        self.entries.len() == 1 && self.entries[0].1 == 1.0
    }

    pub fn probability_of(&self, s: &StateRef) -> f64 {
        self.entries
            .iter()
            .filter(|(t, _)| t == s)
            .map(|&(_, p)| p)
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StateRef {
        if self.entries.len() == 1 {
            return self.entries[0].0;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(s, p) in &self.entries {
            acc += p;
            if u < acc {
                return s;
            }
        }
        self.entries[self.entries.len() - 1].0
    }

    /// Entries with duplicate successors merged, in sorted state order.
    pub fn canonical(&self) -> Vec<(StateRef, f64)> {
        let mut merged: Vec<(StateRef, f64)> = Vec::with_capacity(self.entries.len());
        for &(s, p) in &self.entries {
            match merged.iter_mut().find(|(t, _)| *t == s) {
                Some(e) => e.1 += p,
                None => merged.push((s, p)),
            }
        }
        merged.sort_by(|a, b| a.0.cmp(&b.0));
        merged
    }
}

/// Total variation distance, half the L1 distance over the union support.
pub fn tv_distance(p: &TransitionSupport, q: &TransitionSupport) -> f64 {
    let p = p.canonical();
    let q = q.canonical();
    let mut l1 = 0.0;
    for &(s, ps) in &p {
        let qs = q.iter().find(|(t, _)| *t == s).map_or(0.0, |e| e.1);
        l1 += (ps - qs).abs();
    }
    for &(s, qs) in &q {
        if !p.iter().any(|(t, _)| *t == s) {
            l1 += qs;
        }
    }
    (0.5 * l1).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::TreePath;

    fn tree(bits: u64, len: u32) -> StateRef {
        StateRef::Tree(TreePath::from_bits(bits, len))
    }

    #[test]
    fn rejects_bad_sums_and_probabilities() {
        assert!(TransitionSupport::new([(tree(0, 1), 0.5)]).is_err());
        assert!(TransitionSupport::new([(tree(0, 1), 1.5), (tree(1, 1), -0.5)]).is_err());
        assert!(TransitionSupport::new(Vec::new()).is_err());
        assert!(TransitionSupport::new([(tree(0, 1), 0.25), (tree(1, 1), 0.75)]).is_ok());
    }

    #[test]
    fn successors_must_advance() {
        let s = TransitionSupport::deterministic(tree(0, 2));
        assert!(s.validate_from(1).is_ok());
        assert!(s.validate_from(2).is_err());
    }

    #[test]
    fn tv_examples() {
        let a = TransitionSupport::deterministic(tree(0, 1));
        let b = TransitionSupport::deterministic(tree(1, 1));
        assert_eq!(tv_distance(&a, &b), 1.0);
        assert_eq!(tv_distance(&a, &a), 0.0);

        let h = 20.0;
        let child = tree(0, 5);
        let exit = StateRef::TerminalZero { level: 5 };
        let leaky = TransitionSupport::split(child, 1.0 - 10.0 / h, exit, 10.0 / h);
        let det = TransitionSupport::deterministic(child);
        assert!((tv_distance(&det, &leaky) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn duplicate_entries_are_merged() {
        let s = tree(0, 1);
        let dup = TransitionSupport::new([(s, 0.5), (s, 0.5)]).unwrap();
        assert_eq!(tv_distance(&dup, &TransitionSupport::deterministic(s)), 0.0);
        assert_eq!(dup.probability_of(&s), 1.0);
    }
}
