use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use proxgen_bench::tree_family;
use proxgen_core::{open_episode, GenerativeModel, QueryLedger, SequencePolicy, SioVariant, StateRef};

fn generative(c: &mut Criterion) {
    let mut group = c.benchmark_group("generative_query");
    for h in [12u32, 40] {
        let inst = tree_family(h, 4);
        let member = inst.member(3);
        group.bench_with_input(BenchmarkId::from_parameter(h), &h, |b, _| {
            let mut ledger = QueryLedger::new(1, h);
            let mut gm = GenerativeModel::new(&member, &mut ledger, 1);
            let s = StateRef::root();
            b.iter(|| gm.query(black_box(&s), proxgen_core::ActionId(1)).unwrap());
        });
    }
    group.finish();
}

fn episode(c: &mut Criterion) {
    let inst = tree_family(40, 4);
    let member = inst.member(5);
    let path = SequencePolicy::from_path(inst.star_leaf(), 40);
    c.bench_function("episode_replay_h40", |b| {
        b.iter(|| {
            let mut ledger = QueryLedger::new(1, 40);
            open_episode(&member, &mut ledger, 2).replay(black_box(path.actions())).unwrap()
        })
    });
}

fn solver(c: &mut Criterion) {
    let inst = tree_family(40, 4);
    let member = inst.member(9);
    c.bench_function("sio_solve_h40", |b| {
        b.iter(|| {
            let mut ledger = QueryLedger::new(1, 40);
            let mut gm = GenerativeModel::new(&member, &mut ledger, 3);
            proxgen_core::sio_greedy_solve(&mut gm, &StateRef::root(), SioVariant::Deterministic { gap: 4 }).unwrap()
        })
    });
}

criterion_group!(benches, generative, episode, solver);
criterion_main!(benches);
