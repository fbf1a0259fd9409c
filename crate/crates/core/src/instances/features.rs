use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::mdp::{dot, normalize, ActionId, StateRef};
use crate::seed::{mix, unit_interval};

pub const MIN_FEATURE_DIM: usize = 8;
pub const INCOHERENCE_TARGET: f64 = 1.0 / 50.0;

/// Lazily generated state-action features for binary-action trees.
///
/// Coordinates are laid out as `[z (d - 3) | bias | flag | dummy]`:
///
/// * `phi(s, a0) = normalize([z_s, 1, 0, 0])`
/// * `phi(s, a1) = normalize([0, 1, 1, u_s])`
///
/// where `z_s` is a unit Gaussian direction keyed by `(seed, s)` and
/// `u_s in [0.01, 0.1]` makes every `a1` feature distinct. Keys never involve
/// rewards, so features carry no information about which member is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LazyFeatureMap {
    seed: u64,
    dim: usize,
}

impl LazyFeatureMap {
    pub fn new(seed: u64, dim: usize) -> Self {
        assert!(dim >= MIN_FEATURE_DIM, "feature dimension must be at least {MIN_FEATURE_DIM}");
        LazyFeatureMap { seed, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn z_dim(&self) -> usize {
        self.dim - 3
    }

    pub fn bias_index(&self) -> usize {
        self.dim - 3
    }

    pub fn flag_index(&self) -> usize {
        self.dim - 2
    }

    pub fn dummy_index(&self) -> usize {
        self.dim - 1
    }

    /// Unit direction of `s` in the first `d - 3` coordinates.
    pub fn z(&self, s: &StateRef) -> Vec<f64> {
        let [k0, k1, k2] = s.key_words();
        let mut key = [0u8; 32];
        for (chunk, word) in key.chunks_exact_mut(8).zip([self.seed, k0, k1, k2]) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        let draws = (0..self.z_dim()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        normalize(draws)
    }

    pub fn dummy(&self, s: &StateRef) -> f64 {
        let [k0, k1, k2] = s.key_words();
        0.01 + 0.09 * unit_interval(&[self.seed, 0xD0, k0, k1, k2])
    }

    pub fn feature(&self, s: &StateRef, a: ActionId) -> Vec<f64> {
        if a.0 == 0 {
            let mut v = self.z(s);
            v.extend_from_slice(&[1.0, 0.0, 0.0]);
            normalize(v)
        } else {
            let mut v = vec![0.0; self.dim];
            v[self.bias_index()] = 1.0;
            v[self.flag_index()] = 1.0;
            v[self.dummy_index()] = self.dummy(s);
            normalize(v)
        }
    }
}

/// Dimension for which `n` random directions are pairwise `1/50`-incoherent
/// with probability at least `1 - delta`: Gaussian inner products of unit
/// vectors in `R^m` exceed `t` with probability at most `2 exp(-m t^2 / 2)`,
/// so a union bound over `n^2` pairs needs `m >= 5000 ln(2 n^2 / delta)`.
pub fn incoherent_dimension(n: f64, delta: f64) -> usize {
    3 + (5000.0 * (2.0 * n * n / delta).ln()).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncoherenceReport {
    pub max_abs_dot: f64,
    pub violations: usize,
    pub pairs: usize,
}

/// Inner-product statistics of `z` over distinct state pairs; identical pairs are skipped.
pub fn check_incoherence(fm: &LazyFeatureMap, pairs: &[(StateRef, StateRef)]) -> IncoherenceReport {
    let mut report = IncoherenceReport {
        max_abs_dot: 0.0,
        violations: 0,
        pairs: 0,
    };
    let mut cache: HashMap<StateRef, Vec<f64>> = HashMap::new();
    for (a, b) in pairs {
        if a == b {
            continue;
        }
        for s in [a, b] {
            cache.entry(*s).or_insert_with(|| fm.z(s));
        }
        let d = dot(&cache[a], &cache[b]).abs();
        report.pairs += 1;
        report.max_abs_dot = report.max_abs_dot.max(d);
        if d > INCOHERENCE_TARGET {
            report.violations += 1;
        }
    }
    report
}

/// Seed for a family's feature map, independent of its reward seed.
pub fn feature_seed(seed: u64) -> u64 {
    mix(&[seed, 0xFEA7])
}
