//! Property tests for the MDP core, query models and measurement.

use std::sync::Arc;

use proptest::prelude::*;
use proxgen_core::family::FamilyFlags;
use proxgen_core::mdp::{optimal_values, q_from_table, TabularMdp, TabularState};
use proxgen_core::measure::{measure_alpha, AlphaMode};
use proxgen_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tab(index: u32, level: u32) -> StateRef {
    if level == 0 {
        StateRef::root()
    } else {
        StateRef::Tabular { index, level }
    }
}

/// Random layered MDP with `width` states per level and two-point transitions.
fn random_mdp(horizon: u32, width: u32, draws: &[f64]) -> TabularMdp {
    let mut k = 0;
    let mut next = || {
        k += 1;
        draws[k % draws.len()]
    };
    let mut states = Vec::new();
    for level in 0..horizon {
        let count = if level == 0 { 1 } else { width };
        for index in 0..count {
            let mut rewards = Vec::new();
            let mut transitions = Vec::new();
            for _ in 0..2 {
                rewards.push(next() / horizon as f64);
                let p = 0.05 + 0.9 * next();
                let a = (next() * width as f64) as u32 % width;
                let b = (a + 1) % width;
                transitions.push(TransitionSupport::split(tab(a, level + 1), p, tab(b, level + 1), 1.0 - p));
            }
            states.push(TabularState {
                state: tab(index, level),
                rewards,
                transitions,
            });
        }
    }
    TabularMdp::new(horizon, 2, states).unwrap()
}

fn support(weights: &[f64]) -> TransitionSupport {
    let total: f64 = weights.iter().sum();
    TransitionSupport::new(weights.iter().enumerate().map(|(i, w)| (tab(i as u32, 1), w / total))).unwrap()
}

proptest! {
    #[test]
    fn tv_is_a_bounded_metric(
        a in prop::collection::vec(0.01f64..1.0, 4),
        b in prop::collection::vec(0.01f64..1.0, 4),
        c in prop::collection::vec(0.01f64..1.0, 4),
    ) {
        let (p, q, r) = (support(&a), support(&b), support(&c));
        let pq = tv_distance(&p, &q);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
        prop_assert!((pq - tv_distance(&q, &p)).abs() < 1e-15);
        prop_assert!(tv_distance(&p, &p) < 1e-15);
        prop_assert!(pq <= tv_distance(&p, &r) + tv_distance(&r, &q) + 1e-12);
    }

    #[test]
    fn bellman_consistency(draws in prop::collection::vec(0.0f64..1.0, 64), h in 2u32..6, w in 1u32..4) {
        let mdp = random_mdp(h, w, &draws);
        let table = optimal_values(&mdp).unwrap();
        for s in table.decision_states() {
            let q0 = q_from_table(&mdp, &table, s, ActionId(0)).unwrap();
            let q1 = q_from_table(&mdp, &table, s, ActionId(1)).unwrap();
            prop_assert_eq!(table.value(s).unwrap(), q0.max(q1));
            let greedy = table.action(s).unwrap();
            prop_assert_eq!(greedy, if q1 > q0 { ActionId(1) } else { ActionId(0) });
            prop_assert!(table.value(s).unwrap() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn weak_alpha_never_exceeds_strong(draws in prop::collection::vec(0.0f64..1.0, 48), acts in prop::collection::vec(0u32..2, 4)) {
        let members: Vec<SharedMdp> = (0..3)
            .map(|k| {
                let shifted: Vec<f64> = draws.iter().map(|d| (d + 0.37 * k as f64).fract()).collect();
                Arc::new(random_mdp(4, 2, &shifted)) as SharedMdp
            })
            .collect();
        let dist = MdpDistribution::uniform_listed(members, 1, FamilyFlags::SHARED_SPACE).unwrap();
        let policy = SequencePolicy::new(acts.into_iter().map(ActionId).collect());
        let weak = measure_alpha(&dist, &policy, AlphaMode::Weak).unwrap();
        let strong = measure_alpha(&dist, &policy, AlphaMode::Strong).unwrap();
        prop_assert!(weak >= 0.0);
        prop_assert!(weak <= strong + 1e-12);
    }

    #[test]
    fn expected_value_is_weighted_sum(draws in prop::collection::vec(0.0f64..1.0, 32), w in 0.05f64..0.95) {
        let a: SharedMdp = Arc::new(random_mdp(3, 2, &draws));
        let b: SharedMdp = Arc::new(random_mdp(3, 2, &draws[3..]));
        let dist = MdpDistribution::listed(vec![(w, a.clone()), (1.0 - w, b.clone())], 1, FamilyFlags::SHARED_SPACE).unwrap();
        let pi = SequencePolicy::constant(ActionId(1), 3);
        let va = policy_value(a.as_ref(), &pi, &StateRef::root()).unwrap();
        let vb = policy_value(b.as_ref(), &pi, &StateRef::root()).unwrap();
        let expected = expected_policy_value(&dist, &pi).unwrap();
        prop_assert!((expected - (w * va + (1.0 - w) * vb)).abs() < 1e-12);
    }

    #[test]
    fn rollouts_stay_bounded_and_layered(seed in any::<u64>(), draws in prop::collection::vec(0.0f64..1.0, 40)) {
        let mdp = random_mdp(5, 3, &draws);
        let pi = SequencePolicy::constant(ActionId(0), 5);
        let traj = rollout(&mdp, &pi, seed);
        prop_assert!(traj.total <= 1.0 + 1e-12);
        prop_assert_eq!(traj.steps.len(), 5);
        for (t, step) in traj.steps.iter().enumerate() {
            prop_assert_eq!(step.state.level(), t as u32);
        }
    }
}

fn small_theorem1_member() -> proxgen_core::instances::Theorem1Member {
    let mut p = proxgen_core::instances::Theorem1Params::new(8, 1, 0);
    p.feature_dim = 8;
    proxgen_core::instances::Theorem1Instance::build(p).unwrap().member(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn linear_action_ignores_scale(raw in prop::collection::vec(-1.0f64..1.0, 8), scale in 0.01f64..100.0, bits in any::<u64>()) {
        prop_assume!(raw.iter().any(|x| x.abs() > 1e-3));
        let mdp = small_theorem1_member();
        let s = StateRef::Tree(TreePath::from_bits(bits & 0x7F, 7));
        let lin = LinearPolicy::normalized(vec![raw.clone(); 8]).unwrap();
        let scaled: Vec<f64> = raw.iter().map(|x| x * scale).collect();
        let score = |a: u32| mdp.feature(&s, ActionId(a)).iter().zip(&scaled).map(|(f, t)| f * t).sum::<f64>();
        let (s0, s1) = (score(0), score(1));
        prop_assume!((s0 - s1).abs() > 1e-9 * scale);
        let expected = if s1 > s0 { ActionId(1) } else { ActionId(0) };
        prop_assert_eq!(linear_action(&mdp, &lin, &s), expected);
    }
}

#[test]
fn brute_force_alpha_lower_bounds_every_policy() {
    let draws: Vec<f64> = (0..97).map(|i| ((i * 37 % 97) as f64) / 97.0).collect();
    let members: Vec<SharedMdp> = (0..3)
        .map(|k| {
            let rewards: Vec<f64> = (0..6).map(|i| draws[(i * 7 + k * 11) % 97] / 3.0).collect();
            let mut states = Vec::new();
            for level in 0..3u32 {
                for bits in 0..1u64 << level {
                    let p = TreePath::from_bits(bits, level);
                    let node = ((1usize << level) - 1 + bits as usize) % 6;
                    states.push(TabularState {
                        state: StateRef::Tree(p),
                        rewards: vec![rewards[node], rewards[(node + 3) % 6]],
                        transitions: vec![
                            TransitionSupport::deterministic(StateRef::Tree(p.child(ActionId(0)))),
                            TransitionSupport::deterministic(StateRef::Tree(p.child(ActionId(1)))),
                        ],
                    });
                }
            }
            Arc::new(TabularMdp::new(3, 2, states).unwrap()) as SharedMdp
        })
        .collect();
    let dist = MdpDistribution::uniform_listed(members, 1, FamilyFlags::DETERMINISTIC).unwrap();
    let (_, best) = brute_force_shared_policy(&dist, 1 << 20).unwrap();
    for leaf in 0..8 {
        let pi = SequencePolicy::from_path(TreePath::from_bits(leaf, 3), 3);
        assert!(best <= measure_alpha(&dist, &pi, AlphaMode::Weak).unwrap() + 1e-12);
    }
}

#[test]
fn sampling_frequencies_pass_chi_square() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let probs = [0.1, 0.2, 0.3, 0.4];
    let sup = support(&probs);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 20_000;
    let mut counts = [0u32; 4];
    for _ in 0..n {
        if let StateRef::Tabular { index, .. } = sup.sample(&mut rng) {
            counts[index as usize] += 1;
        }
    }
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, p)| (c as f64 - n as f64 * p).powi(2) / (n as f64 * p))
        .sum();
    let p_value = 1.0 - ChiSquared::new(3.0).unwrap().cdf(stat);
    assert!(p_value > 0.001, "chi-square {stat}, p {p_value}");
}

#[test]
fn generative_successors_follow_transition_probabilities() {
    let mdp = TabularMdp::new(
        1,
        2,
        vec![TabularState {
            state: StateRef::root(),
            rewards: vec![0.5, 0.0],
            transitions: vec![
                TransitionSupport::split(tab(0, 1), 0.3, tab(1, 1), 0.7),
                TransitionSupport::deterministic(tab(0, 1)),
            ],
        }],
    )
    .unwrap();
    let mut ledger = QueryLedger::new(1, 1);
    let mut gm = GenerativeModel::new(&mdp, &mut ledger, 9);
    let n = 10_000;
    let mut first = 0;
    for _ in 0..n {
        let (r, next) = gm.query(&StateRef::root(), ActionId(0)).unwrap();
        assert_eq!(r, 0.5);
        first += (next == tab(0, 1)) as u32;
    }
    let freq = first as f64 / n as f64;
    let se = (0.3f64 * 0.7 / n as f64).sqrt();
    assert!((freq - 0.3).abs() < 4.0 * se, "{freq}");
    assert_eq!(ledger.generative_queries(), n as u64);
    assert!(ledger.audit());
}

#[test]
fn monte_carlo_returns_converge_to_policy_value() {
    use proxgen_core::instances::{Corollary2Instance, Corollary2Params};
    let mut p = Corollary2Params::new(12, 3, 2);
    p.feature_dim = 16;
    let inst = Corollary2Instance::build(p).unwrap();
    let m = inst.member(1);
    let pi = SequencePolicy::constant(ActionId(1), 12);
    let exact = policy_value(&m, &pi, &StateRef::root()).unwrap();
    let n = 20_000;
    let mean = (0..n).map(|seed| rollout(&m, &pi, seed).total).sum::<f64>() / n as f64;
    let se = (exact * (1.0 - exact) / n as f64).sqrt().max(1e-3);
    assert!((mean - exact).abs() < 4.0 * se, "mean {mean} exact {exact}");
}
