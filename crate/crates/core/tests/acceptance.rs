//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs every criterion by default; pass criterion numbers to run a subset,
//! e.g. `cargo test --test acceptance -- 1 2 4`. Failures are reported but
//! only fail the process under `--strict`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use subgoal_transfer::approx::{DenseNet, Tape};
use subgoal_transfer::assets::{shipped_demo, shipped_layout, SHIPPED_LAYOUTS};
use subgoal_transfer::embed::{
    balanced_sample, infonce_loss, infonce_terms, l2_distance, train_embedding, Dataset, EmbeddingConfig, EmbeddingModel,
};
use subgoal_transfer::expert::{phase_of, record_demonstration};
use subgoal_transfer::gcrl::{goal_success_rate, surrogate_loss, train_gcrl, GcrlAgent, Sample, TrainConfig};
use subgoal_transfer::graph::{build_planning_graph, cluster_purity, fit_clusters, Edge, GraphError, PlanningGraph};
use subgoal_transfer::gridworld::{
    random_joint_action, Action, GridState, Held, JointAction, Kitchen, Layout, StateKey, TileKind,
};
use subgoal_transfer::harness::{
    pretrain, run_baseline, run_experiment, run_pipeline_seed, BaselineKind, ExperimentConfig, RunReport,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn kitchen(name: &str) -> Kitchen {
    Kitchen::new(shipped_layout(name).unwrap())
}

fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)).unwrap()
}

fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn synthetic(episodes: &[usize], dim: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Dataset::empty(dim);
    let mut id = 0u16;
    for &len in episodes {
        let states = (0..len)
            .map(|_| {
                id += 1;
                (StateKey(vec![id]), (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            })
            .collect();
        data.push_episode(states).unwrap();
    }
    data
}

fn dense_gradients() -> f64 {
    let mut worst = 0.0f64;
    let h = 1e-5;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes: Vec<usize> = (0..rng.gen_range(2..=4)).map(|_| rng.gen_range(1..=8)).collect();
        let net = DenseNet::init(&sizes, 1.0, &mut rng).unwrap();
        let x: Vec<f64> = (0..sizes[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let gy: Vec<f64> = (0..sizes[sizes.len() - 1]).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let loss = |n: &DenseNet, x: &[f64]| n.forward(x).unwrap().iter().zip(&gy).map(|(y, g)| y * g).sum::<f64>();
        let mut tape = Tape::default();
        net.forward_tape(&x, &mut tape).unwrap();
        let mut grads = vec![0.0; net.num_params()];
        let mut gx = vec![0.0; x.len()];
        net.backward(&tape, &gy, &mut grads, Some(&mut gx)).unwrap();
        for i in 0..net.num_params() {
            let (mut p, mut m) = (net.clone(), net.clone());
            p.params_mut()[i] += h;
            m.params_mut()[i] -= h;
            let numeric = (loss(&p, &x) - loss(&m, &x)) / (2.0 * h);
            worst = worst.max(rel_err(grads[i], numeric, 1e-3));
        }
        for j in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[j] += h;
            xm[j] -= h;
            let numeric = (loss(&net, &xp) - loss(&net, &xm)) / (2.0 * h);
            worst = worst.max(rel_err(gx[j], numeric, 1e-3));
        }
    }
    worst
}

fn surrogate_gradients() -> f64 {
    let k = kitchen("source");
    let cfg = TrainConfig {
        hidden: vec![16],
        ..TrainConfig::default()
    };
    let mut worst = 0.0f64;
    let h = 1e-5;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = GcrlAgent::for_kitchen(&k, &cfg, &mut rng).unwrap();
        for p in a.policy.params_mut() {
            *p *= 1.0 + rng.gen_range(0.0..20.0);
        }
        let s = k.reset(seed);
        let samples: Vec<Sample> = (0..4)
            .map(|i| {
                let goal = k.reset(seed + 1 + i as u64);
                let mut input = Vec::new();
                subgoal_transfer::gcrl::policy_input(&k, &s, Some(&goal), i % 2, &mut input);
                Sample {
                    input,
                    action: rng.gen_range(0..6),
                    logp: rng.gen_range(-2.5..-1.0),
                    value: 0.0,
                    advantage: rng.gen_range(-1.0..1.0),
                    ret: 0.0,
                }
            })
            .collect();
        let refs: Vec<&Sample> = samples.iter().collect();
        let loss = |net: &DenseNet| {
            let mut g = vec![0.0; net.num_params()];
            let st = surrogate_loss(net, &refs, &cfg, &mut g, &mut Tape::default()).unwrap();
            st.policy_loss - cfg.entropy_coef * st.entropy
        };
        let mut grads = vec![0.0; a.policy.num_params()];
        surrogate_loss(&a.policy, &refs, &cfg, &mut grads, &mut Tape::default()).unwrap();
        for i in (0..a.policy.num_params()).step_by(7) {
            let (mut p, mut m) = (a.policy.clone(), a.policy.clone());
            p.params_mut()[i] += h;
            m.params_mut()[i] -= h;
            let numeric = (loss(&p) - loss(&m)) / (2.0 * h);
            worst = worst.max(rel_err(grads[i], numeric, 1e-4));
        }
    }
    worst
}

fn infonce_gradients() -> f64 {
    let mut worst = 0.0f64;
    let h = 1e-5;
    for seed in 0..20u64 {
        let data = synthetic(&[12, 9, 15], 5, seed);
        let mut net = DenseNet::init(&[5, 7, 3], 1.0, &mut ChaCha8Rng::seed_from_u64(100 + seed)).unwrap();
        let cfg = EmbeddingConfig {
            window: 2,
            batch_size: 6,
            negatives: 4,
            ..EmbeddingConfig::default()
        };
        let batch = balanced_sample(&data, &cfg, seed).unwrap();
        let mut grads = vec![0.0; net.num_params()];
        infonce_loss(&net, &data, &batch, &mut grads).unwrap();
        let mut scratch = vec![0.0; net.num_params()];
        for i in 0..net.num_params() {
            let x = net.params()[i];
            net.params_mut()[i] = x + h;
            let up = infonce_loss(&net, &data, &batch, &mut scratch).unwrap();
            net.params_mut()[i] = x - h;
            let down = infonce_loss(&net, &data, &batch, &mut scratch).unwrap();
            net.params_mut()[i] = x;
            worst = worst.max(rel_err(grads[i], (up - down) / (2.0 * h), 1e-6));
        }
    }
    worst
}

fn gradient_oracles() -> Outcome {
    let start = Instant::now();
    let (dense, ppo, nce) = (dense_gradients(), surrogate_gradients(), infonce_gradients());
    let secs = start.elapsed().as_secs_f64();
    check(
        dense < 1e-4 && nce < 1e-4 && ppo < 1e-3 && secs < 30.0,
        format!("max relative error: network {dense:.1e}, surrogate {ppo:.1e}, infonce {nce:.1e}; {secs:.1}s"),
    )
}

fn infonce_closed_forms() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=32 {
        worst = worst.max((infonce_terms(&vec![0.0; n]).0 - (n as f64).ln()).abs());
    }
    let data = synthetic(&[20, 20, 20], 4, 1);
    let net = DenseNet::zeros(&[4, 6, 3]).unwrap();
    let cfg = EmbeddingConfig {
        window: 2,
        batch_size: 8,
        negatives: 5,
        ..EmbeddingConfig::default()
    };
    let batch = balanced_sample(&data, &cfg, 2).unwrap();
    let loss = infonce_loss(&net, &data, &batch, &mut vec![0.0; net.num_params()]).unwrap();
    worst = worst.max((loss - 6f64.ln()).abs());
    let two = (infonce_terms(&[1.0, 3.0]).0 - (1.0 + (-2.0f64).exp()).ln()).abs();
    check(
        worst < 1e-9 && two < 1e-9,
        format!("uniform batches off by {worst:.1e}, two-candidate example off by {two:.1e}"),
    )
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

const CORRIDOR_30: &str = "recipe: plain
XOVPSXXXXXXXXXXXXXXXXXXXXXXXXXXX
X1                             X
X2XXXXXXXXXXXXXXXXXXXXXXXXXXXXXX
XXXXXXXXXXXXXXXXXXXXXXXXXXXXXXXX
";

fn temporal_faithfulness() -> Outcome {
    let start = Instant::now();
    let layout = Layout::parse(CORRIDOR_30).unwrap();
    let k = Kitchen::new(layout.clone());
    let mut s = k.initial_state();
    let mut walk = vec![s.clone()];
    for _ in 0..29 {
        s = k.step(&s, JointAction([Action::MoveRight, Action::Stay])).unwrap().state;
        walk.push(s.clone());
    }
    let data = Dataset::from_trajectories(&layout, &[walk.clone()]);
    let cfg = EmbeddingConfig {
        iterations: 1500,
        ..EmbeddingConfig::default()
    };
    let mut rhos = Vec::new();
    for seed in 0..3 {
        let (model, _) = train_embedding(&data, &cfg, seed).unwrap();
        let z: Vec<Vec<f64>> = walk.iter().map(|s| model.embed_state(&layout, s).unwrap()).collect();
        let (mut d, mut steps) = (Vec::new(), Vec::new());
        for i in 0..z.len() {
            for j in i + 1..z.len() {
                d.push(l2_distance(&z[i], &z[j]));
                steps.push((j - i) as f64);
            }
        }
        rhos.push(spearman(&d, &steps));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        rhos.iter().all(|&r| r >= 0.8) && secs < 300.0,
        format!("spearman per seed {rhos:.3?}; {secs:.1}s"),
    )
}

fn edge_graph(n: usize, edges: &[(usize, usize)], state: &GridState) -> PlanningGraph {
    let mut edges: Vec<Edge> = edges
        .iter()
        .enumerate()
        .map(|(i, &(from, to))| Edge {
            from,
            to,
            tick: i + 1,
            key: state.key(),
            state: state.clone(),
        })
        .collect();
    edges.sort_by_key(|e| (e.from, e.to));
    PlanningGraph {
        k: n,
        walk: vec![0],
        edges,
        target: 0,
        target_key: state.key(),
        target_state: state.clone(),
    }
}

fn brute_force(g: &PlanningGraph, from: usize, to: usize) -> Option<Vec<usize>> {
    fn dfs(g: &PlanningGraph, path: &mut Vec<usize>, to: usize, best: &mut Option<Vec<usize>>) {
        let c = path[path.len() - 1];
        if c == to {
            if best.as_ref().is_none_or(|b| path.len() < b.len() || (path.len() == b.len() && *path < *b)) {
                *best = Some(path.clone());
            }
            return;
        }
        for n in g.successors(c).collect::<Vec<_>>() {
            if !path.contains(&n) {
                path.push(n);
                dfs(g, path, to, best);
                path.pop();
            }
        }
    }
    let mut best = None;
    dfs(g, &mut vec![from], to, &mut best);
    best
}

fn graph_oracles() -> Outcome {
    let start = Instant::now();
    let dummy = kitchen("tiny").initial_state();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut mismatches = 0;
    let mut pairs = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=6);
        let p = rng.gen_range(0.1..0.6);
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| a != b)
            .filter(|_| rng.gen_bool(p))
            .collect();
        let g = edge_graph(n, &edges, &dummy);
        for a in 0..n {
            for b in 0..n {
                pairs += 1;
                let agree = match (g.shortest_path(a, b), brute_force(&g, a, b)) {
                    (Ok(x), Some(y)) => x == y,
                    (Err(GraphError::Unreachable { .. }), None) => true,
                    _ => false,
                };
                mismatches += usize::from(!agree);
            }
        }
    }
    let mut walks_ok = 0;
    let mut walks = 0;
    for name in SHIPPED_LAYOUTS {
        let (layout, demo) = shipped_demo(name).unwrap();
        let expert = demo.states(&layout).unwrap();
        let data = Dataset::from_trajectories(&layout, &[expert.clone()]);
        for seed in 0..3 {
            walks += 1;
            let emb = EmbeddingModel::new(data.feature_len(), &EmbeddingConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let latents: Vec<Vec<f64>> = expert.iter().map(|s| emb.embed_state(&layout, s).unwrap()).collect();
            let clusters = fit_clusters(&latents, 8, seed).unwrap();
            let g = build_planning_graph(&clusters, &emb, &layout, &expert).unwrap();
            let replay: Vec<usize> = latents.iter().map(|z| clusters.assign(z)).collect();
            let edges_ok = g.walk.windows(2).all(|w| w[0] == w[1] || g.edge(w[0], w[1]).is_some());
            walks_ok += usize::from(replay == g.walk && edges_ok && g.walk[g.walk.len() - 1] == g.target);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        mismatches == 0 && walks_ok == walks && secs < 60.0,
        format!("{mismatches} path mismatches over {pairs} pairs, {walks_ok}/{walks} demo walks reproduced; {secs:.1}s"),
    )
}

fn phase_purity() -> Outcome {
    let start = Instant::now();
    let (layout, demo) = shipped_demo("source").unwrap();
    let expert = demo.states(&layout).unwrap();
    let data = Dataset::from_trajectories(&layout, &[expert.clone()]);
    let labels: Vec<usize> = expert.iter().map(|s| phase_of(s) as usize).collect();
    let cfg = EmbeddingConfig {
        iterations: 1500,
        ..EmbeddingConfig::default()
    };
    let mut purities = Vec::new();
    for seed in 0..3 {
        let (emb, _) = train_embedding(&data, &cfg, seed).unwrap();
        let latents: Vec<Vec<f64>> = expert.iter().map(|s| emb.embed_state(&layout, s).unwrap()).collect();
        let clusters = fit_clusters(&latents, 8, seed).unwrap();
        let assigned: Vec<usize> = latents.iter().map(|z| clusters.assign(z)).collect();
        purities.push(cluster_purity(&assigned, &labels));
    }
    let secs = start.elapsed().as_secs_f64();
    let passing = purities.iter().filter(|&&p| p >= 0.6).count();
    check(
        passing >= 2 && secs < 600.0,
        format!("purity per seed {purities:.3?} ({passing}/3 at least 0.6); {secs:.1}s"),
    )
}

fn gcrl_competence() -> Outcome {
    let start = Instant::now();
    let k = kitchen("source");
    let expert = record_demonstration(&k, 0).unwrap().states(&k.layout).unwrap();
    let cfg = TrainConfig {
        budget: 500_000,
        walk_max: 8,
        ..TrainConfig::default()
    };
    let mut rates = Vec::new();
    for seed in 0..3 {
        let (agent, _) = train_gcrl(&k, &expert, &cfg, seed, None).unwrap();
        rates.push(goal_success_rate(&agent, &k, &expert, &cfg, 500, 1000 + seed).unwrap());
    }
    let secs = start.elapsed().as_secs_f64();
    let m = median(rates.clone());
    check(
        m >= 0.7 && secs < 3600.0,
        format!("goal success per seed {rates:.3?}, median {m:.3}; {secs:.0}s"),
    )
}

fn soups(runs: &[&RunReport]) -> Vec<f64> {
    runs.iter().map(|r| r.eval.mean_soups).collect()
}

fn end_to_end_transfer() -> Outcome {
    let start = Instant::now();
    let cfg = config("corridor.toml");
    let out = tempfile::tempdir().unwrap();
    let report = run_experiment(&cfg, true, Some(out.path())).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (pipe, van, ft) = (report.method("pipeline"), report.method("vanilla"), report.method("finetune"));
    let equal_budgets = pipe
        .iter()
        .zip(&van)
        .zip(&ft)
        .all(|((p, v), f)| p.total_steps == v.total_steps && p.total_steps == f.total_steps);
    let (p, v, f) = (soups(&pipe), soups(&van), soups(&ft));
    let (mp, mv, mf) = (median(p.clone()), median(v.clone()), median(f.clone()));
    check(
        mp >= 1.0 && mv == 0.0 && mf <= 0.2 && equal_budgets && secs < 7200.0,
        format!(
            "median soups: pipeline {mp:.2} {p:.2?}, vanilla {mv:.2} {v:.2?}, finetune {mf:.2} {f:.2?}; equal budgets {equal_budgets}; {secs:.0}s"
        ),
    )
}

fn sample_efficiency() -> Outcome {
    let start = Instant::now();
    let cfg = config("cilantro.toml");
    let (mut pipe, mut van) = (Vec::new(), Vec::new());
    for &seed in &cfg.seeds {
        let pre = pretrain(&cfg, seed).unwrap();
        let (p, _) = run_pipeline_seed(&cfg, seed, Some(pre)).unwrap();
        let (v, _) = run_baseline(BaselineKind::Vanilla, None, &cfg, p.total_steps, seed).unwrap();
        pipe.push(p.convergence);
        van.push(v.convergence);
    }
    let secs = start.elapsed().as_secs_f64();
    let key = |c: &Option<u64>| c.map_or(f64::INFINITY, |s| s as f64);
    let mp = median(pipe.iter().map(key).collect());
    let mv = median(van.iter().map(key).collect());
    check(
        mp < mv,
        format!("steps to convergence (none = never): pipeline {pipe:?}, vanilla {van:?}; medians {mp} vs {mv}; {secs:.0}s"),
    )
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let bin = env!("CARGO_BIN_EXE_subgoal-transfer");
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join("smoke.toml");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let status = Command::new(bin)
            .arg("pipeline")
            .arg("--baselines")
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(d.path())
            .output()
            .unwrap();
        if !status.status.success() {
            return Err(format!("pipeline failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap();
    let csv = read(&dirs[0], "metrics.csv") == read(&dirs[1], "metrics.csv");
    let digests = read(&dirs[0], "digests.txt") == read(&dirs[1], "digests.txt");
    let files = String::from_utf8(read(&dirs[0], "digests.txt")).unwrap().lines().count();
    let secs = start.elapsed().as_secs_f64();
    check(
        csv && digests,
        format!("metrics identical {csv}, {files} artifact digests identical {digests}; {secs:.1}s"),
    )
}

fn onions_in_world(s: &GridState) -> u32 {
    let weight = |h: Held| match h {
        Held::Onion => 1,
        Held::SoupPlate | Held::CilantroSoupPlate => 3,
        _ => 0,
    };
    let held: u32 = s.chefs.iter().map(|c| weight(c.held)).sum();
    let counters: u32 = s.counters.iter().map(|(_, h)| weight(*h)).sum();
    held + counters + s.ovens.iter().map(|o| o.onions as u32).sum::<u32>() + 3 * s.delivered
}

fn invariant_violations(k: &Kitchen, s: &GridState, a: JointAction) -> (GridState, usize) {
    let pickups = (0..2)
        .filter(|&i| {
            let c = s.chefs[i];
            a.0[i] == Action::Interact && c.held == Held::Nothing && k.layout.tile(c.pos.offset(c.facing)) == TileKind::OnionDispenser
        })
        .count() as u32;
    let step = k.step(s, a).unwrap();
    let n = &step.state;
    let checks = [
        n.validate(&k.layout).is_ok(),
        n.chefs[0].pos != n.chefs[1].pos,
        n.tick == s.tick + 1,
        n.delivered >= s.delivered,
        step.reward == n.delivered - s.delivered,
        onions_in_world(n) == onions_in_world(s) + pickups,
        k.step(s, a).unwrap() == step,
        GridState::from_key(&k.layout, &n.key(), n.tick).ok().as_ref() == Some(n),
    ];
    (step.state, checks.iter().filter(|&&ok| !ok).count())
}

fn conservation_and_replay() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut violations = 0;
    let mut steps = 0;
    while steps < 10_000 {
        for name in SHIPPED_LAYOUTS {
            let k = kitchen(name);
            let mut s = k.reset(rng.gen());
            for _ in 0..200 {
                let (n, v) = invariant_violations(&k, &s, random_joint_action(&mut rng));
                violations += v;
                steps += 1;
                s = if n.tick >= k.episode_limit { k.reset(rng.gen()) } else { n };
            }
        }
    }
    let mut replayed = 0;
    for name in SHIPPED_LAYOUTS {
        let (layout, demo) = shipped_demo(name).unwrap();
        let k = Kitchen::new(layout.clone());
        let states = demo.states(&layout).unwrap();
        let mut s = states[0].clone();
        let mut same = true;
        for (t, r) in demo.records.iter().enumerate().take(states.len() - 1) {
            let step = k.step(&s, r.joint_action.unwrap()).unwrap();
            same &= step.state == states[t + 1] && step.reward == r.reward;
            s = step.state;
        }
        let recorded = record_demonstration(&k, demo.header.seed).map(|d| d.records == demo.records).unwrap_or(false);
        replayed += usize::from(same && recorded);
    }
    check(
        violations == 0 && replayed == SHIPPED_LAYOUTS.len(),
        format!("{violations} invariant violations over {steps} random steps, {replayed}/{} demos replay", SHIPPED_LAYOUTS.len()),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "gradient oracles", gradient_oracles),
    (2, "closed-form InfoNCE", infonce_closed_forms),
    (3, "temporal faithfulness", temporal_faithfulness),
    (4, "graph oracles", graph_oracles),
    (5, "sub-goal phase purity", phase_purity),
    (6, "GCRL competence", gcrl_competence),
    (7, "end-to-end transfer", end_to_end_transfer),
    (8, "sample-efficiency direction", sample_efficiency),
    (9, "determinism", determinism),
    (10, "simulator conservation and replay", conservation_and_replay),
];

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let strict = args.iter().any(|a| a == "--strict");
    let picked: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, run) in CRITERIA {
        if !picked.is_empty() && !picked.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = Duration::from_secs_f64(start.elapsed().as_secs_f64().round());
        match outcome {
            Ok(d) => println!("criterion {n:>2} PASS {name}: {d} [{took:?}]"),
            Err(d) => {
                failed += 1;
                println!("criterion {n:>2} FAIL {name}: {d} [{took:?}]");
            }
        }
    }
    println!("{failed} criteria failed");
    if failed == 0 || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
