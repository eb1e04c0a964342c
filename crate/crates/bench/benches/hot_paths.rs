use std::hint::black_box;

use coopcache_bench::{paper, tiny};
use coopcache_core::controllers::{BaselineKind, BaselinePolicy, ControlMode, Phase};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

fn env_step(c: &mut Criterion) {
    let (config, env, _) = paper(ControlMode::Centralized);
    let net = config.network_config();
    let action = vec![net.cache_capacity / net.num_content as f64; net.num_content * net.num_sbs];
    c.bench_function("env_step_paper", |b| {
        b.iter_batched_ref(
            || env.clone(),
            |e| black_box(e.step(&action).unwrap()),
            BatchSize::SmallInput,
        )
    });
    c.bench_function("global_state_paper", |b| b.iter(|| black_box(env.global_state())));
}

fn train_epochs(c: &mut Criterion) {
    let mut group = c.benchmark_group("train_epoch_tiny");
    for mode in [
        ControlMode::Centralized,
        ControlMode::PartiallyDecentralized,
        ControlMode::FullyDecentralized,
    ] {
        let (_, mut env, mut learner) = tiny(mode);
        // Fill the replay memory so every epoch runs a full update.
        for _ in 0..learner.config().batch_size {
            learner.train_epoch(&mut env).unwrap();
        }
        group.bench_function(mode.as_str(), |b| {
            b.iter(|| black_box(learner.train_epoch(&mut env).unwrap()))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("train_epoch_paper");
    group.sample_size(10);
    let (_, mut env, mut learner) = paper(ControlMode::Centralized);
    for _ in 0..learner.config().batch_size {
        learner.train_epoch(&mut env).unwrap();
    }
    group.bench_function("centralized", |b| {
        b.iter(|| black_box(learner.train_epoch(&mut env).unwrap()))
    });
    group.finish();
}

fn greedy_and_baselines(c: &mut Criterion) {
    let (_, env, learner) = paper(ControlMode::Centralized);
    c.bench_function("greedy_action_paper", |b| {
        b.iter(|| black_box(learner.greedy_action(&env).unwrap()))
    });
    let mut group = c.benchmark_group("baseline_epoch_paper");
    group.sample_size(20);
    for kind in [BaselineKind::CoCu, BaselineKind::LoCu, BaselineKind::Rcu] {
        let mut policy = BaselinePolicy::new(kind, 1);
        let mut env = env.clone();
        group.bench_function(kind.as_str(), |b| {
            b.iter(|| black_box(policy.epoch(&mut env, Phase::Eval).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, env_step, train_epochs, greedy_and_baselines);
criterion_main!(benches);
