//! Structural checks of the generated families.

use proxgen_core::instances::*;
use proxgen_core::measure::{measure_alpha, measure_gaps, union_reachable_states, AlphaMode};
use proxgen_core::mdp::{optimal_values, tv_distance, DEFAULT_STATE_CAP};
use proxgen_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn theorem1(h: u32, g: u32, seed: u64) -> Theorem1Instance {
    let mut p = Theorem1Params::new(h, g, seed);
    p.feature_dim = 16;
    Theorem1Instance::build(p).unwrap()
}

fn corollary2(h: u32, seed: u64) -> Corollary2Instance {
    let mut p = Corollary2Params::new(h, 3, seed);
    p.feature_dim = 16;
    Corollary2Instance::build(p).unwrap()
}

#[test]
fn theorem1_values_and_gaps() {
    let inst = theorem1(12, 2, 3);
    let dist = inst.distribution();
    for i in 0..64 {
        let m = inst.member(i);
        assert_eq!(optimal_value(&m, &StateRef::root()).unwrap(), 1.0);
        for bits in 0..64 {
            assert_eq!(optimal_value(&m, &StateRef::Tree(TreePath::from_bits(bits, 6))).unwrap(), 1.0);
        }
    }
    let gaps = measure_gaps(&dist).unwrap();
    assert_eq!((gaps.eps_r, gaps.eps_p), (0.25, 0.0));
    let star = dist.audit_metadata().star_policy.clone().unwrap();
    assert_eq!(measure_alpha(&dist, star.as_ref(), AlphaMode::Weak).unwrap(), 0.0);
}

#[test]
fn theorem1_star_path_is_the_only_optimal_path() {
    let inst = theorem1(12, 2, 8);
    let dist = inst.distribution();
    let mut best = Vec::new();
    for leaf in 0..1u64 << 12 {
        let path = TreePath::from_bits(leaf, 12);
        let v = expected_policy_value(&dist, &SequencePolicy::from_path(path, 12)).unwrap();
        let star = inst.star_leaf();
        if path == star {
            assert_eq!(v, 1.0);
            best.push(path);
        } else if path.prefix(6) == star.prefix(6) {
            // Near misses earn one step reward per rewarded edge shared with the star path.
            let shared = (8..12).filter(|&l| path.prefix(l + 1) == star.prefix(l + 1)).count();
            assert!((v - 0.25 * shared as f64).abs() < 1e-12, "leaf {path:?} has value {v}");
        } else {
            assert!(v <= 2.0 / 12.0, "leaf {path:?} has value {v}");
        }
    }
    assert_eq!(best.len(), 1);
}

#[test]
fn theorem1_members_are_isomorphic_off_the_star_subtree() {
    let inst = theorem1(12, 2, 5);
    let star_subtree = inst.star_leaf().prefix(6).bits();
    let (i, j) = (9u64, 44u64);
    let (mi, mj) = (inst.member(i), inst.member(j));
    for subtree in (0..64).filter(|&t| t != star_subtree) {
        for level in 6..12 {
            for suffix in 0..1u64 << (level - 6) {
                let p = TreePath::from_bits((subtree << (level - 6)) | suffix, level);
                // Relabel leaf i to leaf j by flipping the differing suffix bits.
                let flip = (i ^ j) >> (12 - level);
                let q = TreePath::from_bits(p.bits() ^ flip, level);
                for a in 0..2u32 {
                    let bit = ((i ^ j) >> (11 - level)) & 1;
                    let b = ActionId(a ^ bit as u32);
                    assert_eq!(mi.reward(&StateRef::Tree(p), ActionId(a)), mj.reward(&StateRef::Tree(q), b));
                }
            }
        }
    }
}

#[test]
fn implicit_values_match_dp_on_sampled_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let inst = theorem1(12, 2, 2);
    let cor = corollary2(12, 2);
    for _ in 0..10 {
        let m = inst.member(rng.random_range(0..64));
        let table = optimal_values(&m).unwrap();
        let c = cor.member(rng.random_range(0..8));
        let ctable = optimal_values(&c).unwrap();
        let cstates: Vec<_> = ctable.iter().map(|(s, _)| *s).collect();
        for _ in 0..100 {
            let level = rng.random_range(0..=12);
            let s = StateRef::Tree(TreePath::from_bits(rng.random_range(0..1u64 << level), level));
            assert_eq!(m.analytic_optimal_value(&s), table.value(&s));
            let s = cstates[rng.random_range(0..cstates.len())];
            assert_eq!(c.analytic_optimal_value(&s), ctable.value(&s));
        }
    }
}

#[test]
fn corollary2_gaps_and_star_value() {
    let inst = corollary2(16, 4);
    let dist = inst.distribution();
    let gaps = measure_gaps(&dist).unwrap();
    assert_eq!(gaps.eps_r, 0.0);
    assert_eq!(gaps.eps_p, 10.0 / 16.0);
    let star = SequencePolicy::from_path(inst.star_leaf(), 16);
    for v in dist.member_values(&star).unwrap() {
        assert_eq!(v, 1.0);
    }
}

#[test]
fn corollary2_modifications_have_exact_tv() {
    let inst = corollary2(12, 7);
    let dist = inst.distribution();
    let p = inst.params();
    let states = union_reachable_states(&dist, DEFAULT_STATE_CAP).unwrap();
    let members: Vec<_> = (0..dist.len()).map(|i| inst.member(i)).collect();
    for s in &states {
        for a in 0..2 {
            let a = ActionId(a);
            for x in &members {
                for y in &members {
                    if !x.contains(s) || x.is_terminal(s) {
                        continue;
                    }
                    let tv = tv_distance(&x.transition(s, a), &y.transition(s, a));
                    let ok = [0.0, p.p_exit(), p.p_jump()].iter().any(|v| (tv - v).abs() < 1e-12);
                    assert!(ok, "tv {tv} at {s:?}");
                }
            }
        }
    }
}

#[test]
fn prop1_special_choice_is_uniform() {
    let mut counts = [0u32; 8];
    let seeds = 2000;
    for seed in 0..seeds {
        let mut p = Prop1Params::new(12, 3, 0.05, seed);
        p.feature_dim = 16;
        let m = Prop1Mdp::build(p).unwrap();
        let anchor = TreePath::from_bits(5, 3);
        counts[m.special_child(&anchor).suffix_bits(3) as usize] += 1;
    }
    let rate = 1.0 / 8.0;
    let se = (rate * (1.0 - rate) / seeds as f64).sqrt();
    for c in counts {
        let freq = c as f64 / seeds as f64;
        assert!((freq - rate).abs() <= 3.0 * se, "frequency {freq}");
    }
}

#[test]
fn prop1_values() {
    let mut p = Prop1Params::new(12, 3, 0.05, 1);
    p.feature_dim = 16;
    let (dist, _) = build_prop1_instance(p).unwrap();
    let m = dist.member(0);
    assert_eq!(optimal_value(m.as_ref(), &StateRef::root()).unwrap(), 1.0);
    let star = dist.audit_metadata().star_policy.clone().unwrap();
    assert_eq!(expected_policy_value(&dist, star.as_ref()).unwrap(), 1.0);
}

#[test]
fn strong_family_alpha_is_zero() {
    for seed in 0..3 {
        let fam = StrongFamily::build(StrongParams::new(8, 5, seed)).unwrap();
        let dist = fam.distribution();
        assert_eq!(measure_alpha(&dist, fam.star_policy.as_ref(), AlphaMode::Strong).unwrap(), 0.0);
    }
}

#[test]
fn features_are_incoherent_at_full_dimension() {
    let fm = LazyFeatureMap::new(feature_seed(7), 1 << 17);
    let states: Vec<StateRef> = (0..142u64).map(|i| StateRef::Tree(TreePath::from_bits(i * 977 % 4096, 12))).collect();
    let mut pairs = Vec::new();
    for (k, a) in states.iter().enumerate() {
        for b in &states[k + 1..] {
            pairs.push((*a, *b));
        }
    }
    pairs.truncate(10_000);
    let report = check_incoherence(&fm, &pairs);
    assert_eq!(report.pairs, 10_000);
    assert_eq!(report.violations, 0, "max {}", report.max_abs_dot);
}
