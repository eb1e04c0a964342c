//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use coopcache_core::baselines::{
    brute_force_oracle, co_cu_decide, lo_cu_decide, RequestStats, SubgradientConfig, TinyMdp,
    TinyUser,
};
use coopcache_core::controllers::{
    ControlMode, EpochRecord, Learner, Objective, Phase,
};
use coopcache_core::env::{
    compute_reward, compute_traffic_cost, CacheAllocation, Environment, UserBatch,
};
use coopcache_core::experiment::{run_experiment, ExperimentConfig, Preset, RunMode, METRICS_FILE};
use coopcache_core::hddpg::{
    build_actor, build_critic, critic_loss_grad, policy_gradient, HomotopySchedule, NetShape,
    OuNoise,
};
use coopcache_core::nn::{Activation, DenseNet};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Independent reference networks: dense tanh layers, weights `out x in`
// row-major followed by the bias, layer after layer.

fn ref_forward(params: &[f64], sizes: &[usize], x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    let mut off = 0;
    let layers = sizes.len() - 1;
    for l in 0..layers {
        let (inp, out) = (sizes[l], sizes[l + 1]);
        let w = &params[off..off + inp * out];
        let b = &params[off + inp * out..off + inp * out + out];
        off += inp * out + out;
        let mut z: Vec<f64> = (0..out)
            .map(|o| b[o] + (0..inp).map(|i| w[o * inp + i] * h[i]).sum::<f64>())
            .collect();
        if l + 1 < layers {
            z.iter_mut().for_each(|v| *v = v.tanh());
        }
        h = z;
    }
    h
}

/// `scale * softmax` per block, then the cap at one.
fn ref_proto(logits: &[f64], scale: f64, groups: usize) -> Vec<f64> {
    let width = logits.len() / groups;
    let mut out = Vec::with_capacity(logits.len());
    for block in logits.chunks(width) {
        let m = block.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = block.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        out.extend(e.iter().map(|v| scale * v / s));
    }
    out
}

struct GradInstance {
    actor_sizes: Vec<usize>,
    critic_sizes: Vec<usize>,
    actor: DenseNet,
    critic: DenseNet,
    states: Array2<f64>,
    critic_inputs: Array2<f64>,
    offset: usize,
    scale: f64,
    groups: usize,
}

impl GradInstance {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let f = rng.random_range(2..=4);
        let groups = rng.random_range(1..=3);
        let scale = rng.random_range(1.0..=f as f64);
        let obs = rng.random_range(2..=6);
        let ad = f * groups;
        let before = rng.random_range(0..=3);
        let after = rng.random_range(0..=3);
        let cin = obs + before + ad + after;
        let hidden = |rng: &mut ChaCha8Rng| -> Vec<usize> {
            (0..rng.random_range(1..=2)).map(|_| rng.random_range(3..=8)).collect()
        };
        let shape = NetShape {
            actor_hidden: hidden(rng),
            critic_hidden: hidden(rng),
            activation: Activation::Tanh,
        };
        let mut actor = build_actor(&shape, obs, ad, groups, scale, rng).unwrap().net;
        // Sharper logits push some entries past the cap.
        let sharpen = rng.random_range(1.0..4.0);
        let p: Vec<f64> = actor.params().iter().map(|v| v * sharpen).collect();
        actor.set_params(&p).unwrap();
        let critic = build_critic(&shape, cin, rng).unwrap().net;
        let n = rng.random_range(1..=5);
        let states = Array2::from_shape_fn((n, obs), |_| rng.random_range(-1.5..1.5));
        let mut critic_inputs = Array2::from_shape_fn((n, cin), |_| rng.random_range(-1.0..1.0));
        for i in 0..n {
            for j in 0..obs {
                critic_inputs[[i, j]] = states[[i, j]];
            }
        }
        let mut actor_sizes = vec![obs];
        actor_sizes.extend(&shape.actor_hidden);
        actor_sizes.push(ad);
        let mut critic_sizes = vec![cin];
        critic_sizes.extend(&shape.critic_hidden);
        critic_sizes.push(1);
        Self {
            actor_sizes,
            critic_sizes,
            actor,
            critic,
            states,
            critic_inputs,
            offset: obs + before,
            scale,
            groups,
        }
    }

    fn protos(&self, actor_params: &[f64]) -> Vec<Vec<f64>> {
        self.states
            .rows()
            .into_iter()
            .map(|s| {
                let logits = ref_forward(actor_params, &self.actor_sizes, &s.to_vec());
                ref_proto(&logits, self.scale, self.groups)
            })
            .collect()
    }

    fn surrogate(&self, actor_params: &[f64]) -> f64 {
        let protos = self.protos(actor_params);
        let n = protos.len() as f64;
        protos
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut x = self.critic_inputs.row(i).to_vec();
                for (j, v) in p.iter().enumerate() {
                    x[self.offset + j] = v.min(1.0);
                }
                ref_forward(self.critic.params(), &self.critic_sizes, &x)[0]
            })
            .sum::<f64>()
            / n
    }

    fn critic_loss(&self, critic_params: &[f64], targets: &[f64]) -> f64 {
        let n = targets.len() as f64;
        self.critic_inputs
            .rows()
            .into_iter()
            .zip(targets)
            .map(|(x, y)| {
                let q = ref_forward(critic_params, &self.critic_sizes, &x.to_vec())[0];
                (q - y) * (q - y)
            })
            .sum::<f64>()
            / n
    }
}

fn central_difference(f: impl Fn(&[f64]) -> f64, at: &[f64], h: f64) -> Vec<f64> {
    let mut x = at.to_vec();
    (0..at.len())
        .map(|j| {
            x[j] = at[j] + h;
            let up = f(&x);
            x[j] = at[j] - h;
            let down = f(&x);
            x[j] = at[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn relative_error(got: &[f64], want: &[f64]) -> f64 {
    let diff = got.iter().zip(want).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let scale = want.iter().map(|v| v * v).sum::<f64>().sqrt();
    let got_norm = got.iter().map(|v| v * v).sum::<f64>().sqrt();
    if scale < 1e-10 && got_norm < 1e-10 {
        0.0
    } else {
        diff / scale.max(1e-10)
    }
}

fn gradient_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_501);
    let (mut checked, mut skipped, mut clipped) = (0, 0, 0);
    let (mut worst_actor, mut worst_critic) = (0.0f64, 0.0f64);
    while checked < 120 {
        let inst = GradInstance::random(&mut rng);
        let protos = inst.protos(inst.actor.params());
        if protos.iter().flatten().any(|p| (p - 1.0).abs() < 1e-3) {
            skipped += 1;
            continue;
        }
        if protos.iter().flatten().any(|p| *p > 1.0) {
            clipped += 1;
        }
        let got = policy_gradient(
            &inst.actor,
            &inst.critic,
            inst.states.view(),
            &inst.critic_inputs,
            inst.offset,
        )
        .map_err(|e| e.to_string())?;
        let want = central_difference(|p| inst.surrogate(p), inst.actor.params(), 1e-6);
        worst_actor = worst_actor.max(relative_error(&got, &want));

        let targets: Vec<f64> = (0..inst.states.nrows())
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let (_, got) = critic_loss_grad(&inst.critic, inst.critic_inputs.view(), &targets)
            .map_err(|e| e.to_string())?;
        let want = central_difference(|p| inst.critic_loss(p, &targets), inst.critic.params(), 1e-6);
        worst_critic = worst_critic.max(relative_error(&got, &want));
        checked += 1;
    }
    let detail = format!(
        "{checked} instances ({clipped} with capped entries, {skipped} near-kink skipped), \
         max rel err actor {worst_actor:.2e}, critic {worst_critic:.2e}"
    );
    ensure(worst_actor < 1e-4 && worst_critic < 1e-5, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------------------

fn tiny_with(mode: &str, seed: u64) -> ExperimentConfig {
    let mut c = Preset::Tiny.config();
    c.mode = mode.parse().unwrap();
    c.seed = seed;
    c
}

fn plain_reduction() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut homotopy = tiny_with("centralized", 11);
    homotopy.learner.lambda_min = 0.0;
    let plain = tiny_with("plain-ddpg", 11);
    let mut reports = Vec::new();
    for (name, mut cfg) in [("h", homotopy), ("p", plain)] {
        cfg.train_epochs = 1000;
        cfg.eval_epochs = 0;
        reports.push(run_experiment(&cfg, &dir.path().join(name)).map_err(|e| e.to_string())?);
    }
    let bytes = |r: &coopcache_core::experiment::RunReport| std::fs::read(&r.metrics_path).unwrap();
    ensure(bytes(&reports[0]) == bytes(&reports[1]), || "metrics differ".into())?;
    let agents = |r: &coopcache_core::experiment::RunReport| {
        r.learner.as_ref().and_then(|l| l.centralized().cloned())
    };
    ensure(agents(&reports[0]) == agents(&reports[1]), || {
        "final networks, optimizer moments or replay memories differ".into()
    })?;
    Ok(format!(
        "{} epochs, metrics and final agent state bit-identical",
        reports[0].records.len()
    ))
}

// ---------------------------------------------------------------------------

/// Hand evaluation of the traffic cost: update plus uncovered request mass.
fn hand_return(mdp: &TinyMdp, actions: &[Vec<f64>]) -> f64 {
    let f = mdp.num_content;
    let mut prev = mdp.initial_cache.clone();
    let mut total = 0.0;
    for (t, a) in actions.iter().enumerate() {
        let update: f64 = a.iter().zip(&prev).map(|(n, o)| (n - o).max(0.0)).sum();
        let miss: f64 = mdp.requests[t]
            .iter()
            .map(|u| {
                let got: f64 = (0..mdp.num_sbs).filter(|&b| u.links[b]).map(|b| a[b * f + u.item]).sum();
                (1.0 - got).max(0.0)
            })
            .sum();
        let users = mdp.requests[t].len().max(1) as f64;
        total -= (update + miss) * mdp.content_size / (users * mdp.content_size);
        prev = a.clone();
    }
    total
}

fn full_storage_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut instances = 0;
    for _ in 0..24 {
        let num_sbs = rng.random_range(1..=2);
        let num_content = rng.random_range(2..=3);
        let capacity = [1.0f64, 1.5, 2.0][rng.random_range(0..3)].min(num_content as f64);
        let horizon = rng.random_range(1..=3);
        let grid_step = if num_sbs == 2 && num_content == 3 { 0.5 } else { 0.25 };
        let mut initial_cache = Vec::new();
        for _ in 0..num_sbs {
            // Fully loaded start: capacity spread over the catalog.
            let mut col = vec![0.0; num_content];
            let mut left = capacity;
            let mut f = 0;
            while left > 0.0 {
                let put = left.min(1.0);
                col[f] = put;
                left -= put;
                f += 1;
            }
            initial_cache.extend(col);
        }
        let requests = (0..horizon)
            .map(|_| {
                (0..rng.random_range(0..=4))
                    .map(|_| {
                        let mut links: Vec<bool> = (0..num_sbs).map(|_| rng.random_bool(0.7)).collect();
                        if !links.iter().any(|&l| l) {
                            links[rng.random_range(0..num_sbs)] = true;
                        }
                        TinyUser { item: rng.random_range(0..num_content), links }
                    })
                    .collect()
            })
            .collect();
        let mdp = TinyMdp {
            num_content,
            num_sbs,
            capacity,
            content_size: 1.0,
            grid_step,
            initial_cache,
            requests,
        };
        let result = brute_force_oracle(&mdp, 1_000_000).map_err(|e| e.to_string())?;
        let seq = result.full_storage_optimizer(&mdp).ok_or_else(|| {
            format!("no full-storage optimizer for instance {instances}: {mdp:?}")
        })?;
        for a in seq {
            for b in 0..num_sbs {
                let sum: f64 = a[b * num_content..(b + 1) * num_content].iter().sum();
                ensure((sum - capacity).abs() < 1e-9, || format!("storage {sum} != {capacity}"))?;
            }
        }
        let hand = hand_return(&mdp, seq);
        ensure((hand - result.optimal_return).abs() < 1e-9, || {
            format!("oracle return {} but hand value {hand}", result.optimal_return)
        })?;
        instances += 1;
    }
    Ok(format!("{instances} quantized instances, each with a verified full-storage optimizer"))
}

// ---------------------------------------------------------------------------

struct CostCase {
    name: &'static str,
    num_content: usize,
    num_sbs: usize,
    prev: Vec<f64>,
    next: Vec<f64>,
    users: Vec<(usize, Vec<bool>)>,
    size: f64,
    cost: (f64, f64),
    reward: f64,
}

fn reward_cost_oracle() -> Outcome {
    let one = |b: usize, n: usize| -> Vec<bool> { (0..n).map(|i| i == b).collect() };
    let cases = vec![
        CostCase { name: "full hit", num_content: 1, num_sbs: 1, prev: vec![1.0], next: vec![1.0], users: vec![(0, vec![true])], size: 1.0, cost: (0.0, 0.0), reward: 0.0 },
        CostCase { name: "full miss", num_content: 1, num_sbs: 1, prev: vec![0.0], next: vec![0.0], users: vec![(0, vec![true])], size: 1.0, cost: (0.0, 1.0), reward: -1.0 },
        CostCase { name: "half fill", num_content: 1, num_sbs: 1, prev: vec![0.0], next: vec![0.5], users: vec![(0, vec![true])], size: 1.0, cost: (0.5, 0.5), reward: -1.0 },
        CostCase { name: "half fill, s=2", num_content: 1, num_sbs: 1, prev: vec![0.0], next: vec![0.5], users: vec![(0, vec![true])], size: 2.0, cost: (1.0, 1.0), reward: -1.0 },
        CostCase { name: "3s over 2 users", num_content: 2, num_sbs: 1, prev: vec![0.0, 0.0], next: vec![1.0, 0.0], users: vec![(1, vec![true]), (1, vec![true])], size: 1.0, cost: (1.0, 2.0), reward: -1.5 },
        CostCase { name: "coded halves", num_content: 1, num_sbs: 2, prev: vec![0.0, 0.0], next: vec![0.5, 0.5], users: vec![(0, vec![true, true]), (0, one(0, 2))], size: 1.0, cost: (1.0, 0.5), reward: -0.75 },
        CostCase { name: "over-coverage", num_content: 1, num_sbs: 2, prev: vec![1.0, 1.0], next: vec![1.0, 1.0], users: vec![(0, vec![true, true])], size: 1.0, cost: (0.0, 0.0), reward: 0.0 },
        CostCase { name: "evictions are free", num_content: 2, num_sbs: 1, prev: vec![1.0, 0.0], next: vec![0.0, 1.0], users: vec![(1, vec![true])], size: 1.0, cost: (1.0, 0.0), reward: -1.0 },
        CostCase { name: "unlinked cache", num_content: 1, num_sbs: 2, prev: vec![0.0, 1.0], next: vec![0.0, 1.0], users: vec![(0, one(0, 2))], size: 1.0, cost: (0.0, 1.0), reward: -1.0 },
        CostCase { name: "no users, no change", num_content: 2, num_sbs: 1, prev: vec![0.5, 0.5], next: vec![0.5, 0.5], users: vec![], size: 1.0, cost: (0.0, 0.0), reward: 0.0 },
        CostCase { name: "no users, update", num_content: 1, num_sbs: 1, prev: vec![0.0], next: vec![0.25], users: vec![], size: 1.0, cost: (0.25, 0.0), reward: -0.25 },
        CostCase {
            name: "two SBSs mixed",
            num_content: 2,
            num_sbs: 2,
            prev: vec![0.5, 0.5, 1.0, 0.0],
            next: vec![0.0, 1.0, 0.5, 0.5],
            users: vec![(0, vec![true, true]), (1, one(0, 2)), (1, one(1, 2))],
            size: 1.0,
            cost: (1.0, 1.0),
            reward: -2.0 / 3.0,
        },
        CostCase {
            name: "four users, s=4",
            num_content: 2,
            num_sbs: 2,
            prev: vec![0.0, 0.0, 0.0, 0.0],
            next: vec![0.75, 0.25, 0.25, 0.75],
            users: vec![(0, vec![true, true]), (1, vec![true, true]), (0, one(1, 2)), (1, one(0, 2))],
            size: 4.0,
            cost: (8.0, 6.0),
            reward: -14.0 / 16.0,
        },
    ];
    let n = cases.len();
    for c in cases {
        let prev = CacheAllocation::from_vec(c.num_content, c.num_sbs, c.prev).map_err(|e| e.to_string())?;
        let next = CacheAllocation::from_vec(c.num_content, c.num_sbs, c.next).map_err(|e| e.to_string())?;
        let k = c.users.len();
        let (requests, links): (Vec<usize>, Vec<Vec<bool>>) = c.users.into_iter().unzip();
        let users = UserBatch::from_parts(c.num_sbs, vec![[0.0, 0.0]; k], requests, links.concat())
            .map_err(|e| e.to_string())?;
        let cost = compute_traffic_cost(&prev, &next, &users, c.size).map_err(|e| e.to_string())?;
        let reward = compute_reward(cost.total, k, c.size);
        let want_total = c.cost.0 + c.cost.1;
        ensure(
            cost.update == c.cost.0 && cost.miss == c.cost.1 && cost.total == want_total,
            || format!("{}: cost {:?}, expected {:?}", c.name, cost, c.cost),
        )?;
        ensure(reward.to_bits() == c.reward.to_bits(), || {
            format!("{}: reward {reward}, expected {}", c.name, c.reward)
        })?;
    }
    let extra = [(0.0, 1, 0.0), (1.0, 1, -1.0), (3.0, 2, -1.5)];
    for (cost, users, want) in extra {
        let got = compute_reward(cost, users, 1.0);
        ensure(got.to_bits() == f64::to_bits(want), || format!("R({cost}, {users}) = {got}"))?;
    }
    Ok(format!("{n} cost scenarios and {} reward examples exact", extra.len()))
}

// ---------------------------------------------------------------------------

fn homotopy_schedule() -> Outcome {
    let deltas = vec![0.0005; 10];
    let mut s = HomotopySchedule::new(-0.005, deltas, 1000).map_err(|e| e.to_string())?;
    ensure(s.lambda() == -0.005, || "bad start".into())?;
    let mut prev = s.lambda();
    let mut changes = Vec::new();
    for epoch in 1..=12_000u64 {
        s.step(epoch);
        let l = s.lambda();
        ensure(l >= prev, || format!("lambda decreased at epoch {epoch}"))?;
        if l != prev {
            changes.push(epoch);
        }
        if epoch < 10_000 {
            ensure(l < 0.0, || format!("lambda reached 0 early at {epoch}"))?;
        }
        if epoch == 10_000 {
            ensure(l == 0.0, || format!("lambda at 10000 is {l:e}"))?;
        }
        prev = l;
    }
    let expected: Vec<u64> = (1..=10).map(|i| i * 1000).collect();
    ensure(changes == expected, || format!("changes at {changes:?}"))?;
    ensure(s.lambda() == 0.0 && s.lambda().to_bits() == 0, || "final lambda not +0".into())?;
    Ok("10 increments at 1000..10000, lambda exactly 0 from epoch 10000, never decreasing".into())
}

// ---------------------------------------------------------------------------

fn force_full_load(env: &mut Environment) -> Result<(), String> {
    let cfg = env.config().clone();
    let (b_count, k) = (cfg.num_sbs, cfg.max_users_per_sbs);
    let mut requests = Vec::new();
    let mut links = Vec::new();
    for b in 0..b_count {
        for u in 0..k {
            requests.push(u % cfg.num_content);
            links.extend((0..b_count).map(|i| i == b));
        }
    }
    let n = requests.len();
    let users = UserBatch::from_parts(b_count, vec![[0.0, 0.0]; n], requests, links)
        .map_err(|e| e.to_string())?;
    env.set_users(users).map_err(|e| e.to_string())
}

fn fronthaul_meter() -> Outcome {
    let config = Preset::PaperDefault.config();
    let net = config.network_config();
    ensure(
        (net.num_sbs, net.max_users_per_sbs, net.num_content) == (4, 100, 20),
        || "preset is not B=4, K=100, F=20".into(),
    )?;
    let mut seen = Vec::new();
    for (mode, train, eval) in [
        (ControlMode::Centralized, 1280, 1280),
        (ControlMode::PartiallyDecentralized, 1280, 0),
        (ControlMode::FullyDecentralized, 8, 0),
    ] {
        let mut env = Environment::new(net.clone(), &config.popularity, 3).map_err(|e| e.to_string())?;
        let mut learner = Learner::new(mode, Objective::Homotopy, config.learner.clone(), &net, 3)
            .map_err(|e| e.to_string())?;
        force_full_load(&mut env)?;
        let t = learner.train_epoch(&mut env).map_err(|e| e.to_string())?;
        force_full_load(&mut env)?;
        let e = learner.eval_epoch(&mut env).map_err(|e| e.to_string())?;
        ensure(t.meter.actual == train && e.meter.actual == eval, || {
            format!("{}: train {} eval {}", mode.as_str(), t.meter.actual, e.meter.actual)
        })?;
        seen.push(format!("{} {}/{}", mode.as_str(), t.meter.actual, e.meter.actual));
    }
    Ok(format!("train/eval counts: {}", seen.join(", ")))
}

// ---------------------------------------------------------------------------

/// Independent per-epoch objective with unit item size.
fn hand_objective(f: usize, b: usize, users: &[(usize, Vec<bool>)], current: &[f64], x: &[f64]) -> f64 {
    let update: f64 = x.iter().zip(current).map(|(n, o)| (n - o).max(0.0)).sum();
    let miss: f64 = users
        .iter()
        .map(|(item, links)| {
            let got: f64 = (0..b).filter(|&s| links[s]).map(|s| x[s * f + item]).sum();
            (1.0 - got).max(0.0)
        })
        .sum();
    update + miss
}

/// Every column on the `1/steps` grid with entries in [0, 1] and sum <= cap.
fn grid_columns(f: usize, steps: u32, cap: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut idx = vec![0u32; f];
    loop {
        let col: Vec<f64> = idx.iter().map(|&i| i as f64 / steps as f64).collect();
        if col.iter().sum::<f64>() <= cap + 1e-9 {
            out.push(col);
        }
        let mut d = 0;
        loop {
            if d == f {
                return out;
            }
            idx[d] += 1;
            if idx[d] <= steps {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

fn grid_minimum(f: usize, b: usize, users: &[(usize, Vec<bool>)], current: &[f64], cap: f64) -> f64 {
    let cols = grid_columns(f, 20, cap);
    let mut best = f64::INFINITY;
    let mut x = vec![0.0; f * b];
    let total = cols.len().pow(b as u32);
    for code in 0..total {
        let mut c = code;
        for s in 0..b {
            x[s * f..(s + 1) * f].copy_from_slice(&cols[c % cols.len()]);
            c /= cols.len();
        }
        best = best.min(hand_objective(f, b, users, current, &x));
    }
    best
}

fn random_instance(rng: &mut ChaCha8Rng, f: usize, b: usize, cap: f64) -> (Vec<(usize, Vec<bool>)>, Vec<f64>) {
    let users = (0..rng.random_range(1..=6))
        .map(|_| {
            let mut links: Vec<bool> = (0..b).map(|_| rng.random_bool(0.6)).collect();
            if !links.iter().any(|&l| l) {
                links[rng.random_range(0..b)] = true;
            }
            (rng.random_range(0..f), links)
        })
        .collect();
    let cols = grid_columns(f, 20, cap);
    let current = (0..b).flat_map(|_| cols[rng.random_range(0..cols.len())].clone()).collect();
    (users, current)
}

fn baseline_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_co = f64::NEG_INFINITY;
    let mut co_count = 0;
    for (f, b, cap) in [(2, 1, 1.0), (3, 1, 1.0), (3, 1, 2.0), (2, 2, 1.0), (3, 2, 1.0), (3, 2, 1.5)] {
        for _ in 0..6 {
            let (users, current) = random_instance(&mut rng, f, b, cap);
            let stats = RequestStats::from_requests(f, b, users.clone());
            let x = co_cu_decide(&stats, &current, cap, SubgradientConfig::default())
                .map_err(|e| e.to_string())?;
            let got = hand_objective(f, b, &users, &current, &x);
            let grid = grid_minimum(f, b, &users, &current, cap);
            worst_co = worst_co.max(got - grid);
            co_count += 1;
        }
    }
    ensure(worst_co <= 0.05, || format!("CO-CU exceeds grid optimum by {worst_co}"))?;
    let mut worst_lo = 0.0f64;
    let mut lo_count = 0;
    for (f, cap) in [(2, 1.0), (3, 1.0), (3, 1.5), (4, 1.0), (4, 2.0), (4, 2.5)] {
        for _ in 0..6 {
            let (users, current) = random_instance(&mut rng, f, 1, cap);
            let stats = RequestStats::from_requests(f, 1, users.clone());
            let x = lo_cu_decide(&stats, &current, cap).map_err(|e| e.to_string())?;
            let got = hand_objective(f, 1, &users, &current, &x);
            let grid = grid_minimum(f, 1, &users, &current, cap);
            worst_lo = worst_lo.max((got - grid).abs());
            lo_count += 1;
        }
    }
    ensure(worst_lo < 1e-9, || format!("LO-CU differs from the single-SBS optimum by {worst_lo}"))?;
    Ok(format!(
        "CO-CU worst gap {worst_co:+.4} over {co_count} instances, \
         LO-CU max |gap| {worst_lo:.1e} over {lo_count}"
    ))
}

// ---------------------------------------------------------------------------

struct SeedRun {
    seed: u64,
    dir: PathBuf,
    records: Vec<EpochRecord>,
    rcu_mean: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn learning_runs(root: &Path) -> Result<Vec<SeedRun>, String> {
    (1..=5u64)
        .map(|seed| {
            let dir = root.join(format!("c{seed}"));
            let report = run_experiment(&tiny_with("centralized", seed), &dir).map_err(|e| e.to_string())?;
            let rcu = run_experiment(&tiny_with("rcu", seed), &root.join(format!("rcu{seed}")))
                .map_err(|e| e.to_string())?;
            Ok(SeedRun {
                seed,
                dir,
                records: report.records,
                rcu_mean: rcu.eval.mean_reward,
            })
        })
        .collect()
}

fn learning_trend(runs: &[SeedRun]) -> Outcome {
    let mut lines = Vec::new();
    let mut passed = 0;
    for r in runs {
        let train: Vec<f64> = r
            .records
            .iter()
            .filter(|x| x.phase == Phase::Train)
            .map(|x| x.reward)
            .collect();
        let first = mean(&train[..2000]);
        let last = mean(&train[train.len() - 2000..]);
        let ok = last - first > 0.05 && last - r.rcu_mean > 0.05;
        passed += ok as usize;
        lines.push(format!(
            "seed {}: first {first:.3} final {last:.3} rcu {:.3}{}",
            r.seed,
            r.rcu_mean,
            if ok { "" } else { " (miss)" }
        ));
    }
    let detail = format!("{passed}/5 seeds; {}", lines.join("; "));
    ensure(passed >= 4, || detail.clone())?;
    Ok(detail)
}

fn feasibility(runs: &[SeedRun]) -> Outcome {
    let (mut epochs, mut violations, mut worst) = (0, 0, 0.0f64);
    for r in runs {
        for x in &r.records {
            epochs += 1;
            worst = worst.max(x.action_violation);
            violations += (x.action_violation > 1e-6) as usize;
        }
    }
    ensure(violations == 0, || format!("{violations} violating epochs, worst {worst:e}"))?;
    Ok(format!("{epochs} executed actions, worst violation {worst:.1e}"))
}

// ---------------------------------------------------------------------------

fn ou_statistics() -> Outcome {
    let mut noise = OuNoise::unit_variance(1, 1.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for _ in 0..1000 {
        noise.sample(&mut rng);
    }
    let n = 1_000_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..n {
        let x = noise.sample(&mut rng)[0];
        sum += x;
        sq += x * x;
    }
    let m = sum / n as f64;
    let var = sq / n as f64 - m * m;
    let detail = format!("mean {m:+.4}, variance {var:.4} over {n} samples");
    ensure(m.abs() <= 0.01 && (0.97..=1.03).contains(&var), || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------------------

fn determinism(runs: &[SeedRun], root: &Path) -> Outcome {
    let first = runs.first().ok_or("no learning runs")?;
    let again = root.join("again");
    run_experiment(&tiny_with("centralized", first.seed), &again).map_err(|e| e.to_string())?;
    let read = |d: &Path| std::fs::read(d.join(METRICS_FILE)).map_err(|e| e.to_string());
    ensure(read(&first.dir)? == read(&again)?, || "tiny preset metrics differ".into())?;
    let mut checked = vec!["tiny/centralized".to_owned()];
    for mode in ["centralized", "fully-decentralized", "co-cu"] {
        let mut c = Preset::PaperDefault.config();
        c.mode = mode.parse::<RunMode>().map_err(|e| e.to_string())?;
        c.seed = 5;
        c.train_epochs = 120;
        c.eval_epochs = 30;
        let (a, b) = (root.join(format!("pa-{mode}")), root.join(format!("pb-{mode}")));
        run_experiment(&c, &a).map_err(|e| e.to_string())?;
        run_experiment(&c, &b).map_err(|e| e.to_string())?;
        ensure(read(&a)? == read(&b)?, || format!("paper-default/{mode} metrics differ"))?;
        checked.push(format!("paper-default/{mode}"));
    }
    Ok(format!("byte-identical metrics for {}", checked.join(", ")))
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, start: Instant, outcome: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {id:>2} {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {id:>2} {name} [{secs:.1}s]: {detail}");
            }
        }
    };
    let t = Instant::now();
    report(1, "gradient fidelity", t, gradient_fidelity());
    let t = Instant::now();
    report(2, "plain-DDPG reduction", t, plain_reduction());
    let t = Instant::now();
    report(3, "full-storage optimizer", t, full_storage_property());
    let t = Instant::now();
    report(4, "reward/cost oracle", t, reward_cost_oracle());
    let t = Instant::now();
    report(5, "homotopy schedule", t, homotopy_schedule());
    let t = Instant::now();
    report(6, "fronthaul meter", t, fronthaul_meter());
    let t = Instant::now();
    report(7, "baseline optimality", t, baseline_optimality());

    let root = tempfile::tempdir().expect("temp dir");
    let t = Instant::now();
    let runs = learning_runs(root.path());
    match &runs {
        Ok(runs) => {
            report(8, "learning trend", t, learning_trend(runs));
            report(9, "feasibility sweep", t, feasibility(runs));
        }
        Err(e) => {
            report(8, "learning trend", t, Err(e.clone()));
            report(9, "feasibility sweep", t, Err(e.clone()));
        }
    }
    let t = Instant::now();
    report(10, "OU statistics", t, ou_statistics());
    let t = Instant::now();
    let det = match &runs {
        Ok(runs) => determinism(runs, root.path()),
        Err(e) => Err(e.clone()),
    };
    report(11, "determinism", t, det);

    println!("acceptance: {} of 11 criteria passed", 11 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
