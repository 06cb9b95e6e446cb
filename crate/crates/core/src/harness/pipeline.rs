use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{evaluate, steps_to_convergence, HarnessError, PlainPolicy, SeedEval, SubgoalController, SubgoalMode};
use crate::assets::{shipped_layout, SHIPPED_LAYOUTS};
use crate::embed::{build_dataset, train_embedding, Dataset, EmbeddingConfig, EmbeddingModel};
use crate::expert::record_demonstration;
use crate::gcrl::{train, GcrlAgent, IterationMetrics, Objective, TrainConfig};
use crate::graph::{build_planning_graph, fit_clusters, Abstraction};
use crate::gridworld::{GridState, Kitchen, Layout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Shipped layout name or path to a layout file.
    pub source_layout: String,
    pub target_layout: String,
    pub pretrain_steps: u64,
    pub finetune_steps: u64,
    /// Goal-reaching rollouts added to the embedding dataset.
    pub dataset_episodes: usize,
    pub embed_iterations: usize,
    pub k: usize,
    pub window: u32,
    pub seeds: Vec<u64>,
    pub eval_episodes: usize,
    pub episode_limit: u32,
    /// Steps between learning-curve points; 0 disables the curve.
    pub curve_interval: u64,
    pub curve_episodes: usize,
    /// Budget of each baseline; `None` matches the pipeline total.
    pub baseline_steps: Option<u64>,
    pub walk_max: u32,
    /// Steps without progress before a committed sub-goal is dropped;
    /// 0 re-classifies the state at every step.
    pub subgoal_patience: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            source_layout: "source".into(),
            target_layout: "corridor".into(),
            pretrain_steps: 500_000,
            finetune_steps: 300_000,
            dataset_episodes: 0,
            embed_iterations: 3000,
            k: 8,
            window: 12,
            seeds: vec![0, 1, 2],
            eval_episodes: 50,
            episode_limit: 500,
            curve_interval: 50_000,
            curve_episodes: 10,
            baseline_steps: None,
            walk_max: 8,
            subgoal_patience: 64,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.eval_episodes == 0 || self.episode_limit == 0 {
            return bad("eval_episodes and episode_limit must be positive");
        }
        if self.k < 2 {
            return bad("k must be at least 2");
        }
        if self.window == 0 {
            return bad("window must be positive");
        }
        if self.curve_interval > 0 && self.curve_episodes == 0 {
            return bad("curve_episodes must be positive when a curve is requested");
        }
        self.gcrl(0).validate()?;
        self.embedding().validate()?;
        Ok(())
    }

    pub fn gcrl(&self, budget: u64) -> TrainConfig {
        TrainConfig {
            budget,
            walk_max: self.walk_max,
            ..TrainConfig::default()
        }
    }

    pub fn embedding(&self) -> EmbeddingConfig {
        EmbeddingConfig {
            window: self.window,
            iterations: self.embed_iterations,
            ..EmbeddingConfig::default()
        }
    }

    pub fn subgoal_mode(&self) -> SubgoalMode {
        match self.subgoal_patience {
            0 => SubgoalMode::PerStep,
            patience => SubgoalMode::Committed { patience },
        }
    }

    pub fn source_kitchen(&self) -> Result<Kitchen, HarnessError> {
        Ok(Kitchen::new(resolve_layout(&self.source_layout)?).with_episode_limit(self.episode_limit))
    }

    pub fn target_kitchen(&self) -> Result<Kitchen, HarnessError> {
        Ok(Kitchen::new(resolve_layout(&self.target_layout)?).with_episode_limit(self.episode_limit))
    }
}

/// A shipped layout by name, otherwise a layout file.
pub fn resolve_layout(name: &str) -> Result<Layout, HarnessError> {
    let r = if SHIPPED_LAYOUTS.contains(&name) {
        shipped_layout(name)
    } else {
        Layout::load(Path::new(name))
    };
    r.map_err(|e| HarnessError::Config(format!("layout {name}: {e}")))
}

/// States of the scripted expert's first round on `kitchen`.
pub fn expert_states(kitchen: &Kitchen) -> Result<Vec<GridState>, HarnessError> {
    Ok(record_demonstration(kitchen, 0)?.states(&kitchen.layout)?)
}

/// Seed of stage `stage` within run `seed`.
pub fn stage_seed(seed: u64, stage: u64) -> u64 {
    seed.wrapping_mul(16).wrapping_add(stage)
}

fn in_stage<T>(stage: &'static str, r: Result<T, HarnessError>) -> Result<T, HarnessError> {
    r.map_err(|e| match e {
        HarnessError::Config(_) | HarnessError::Stage { .. } => e,
        e => HarnessError::Stage {
            stage,
            source: Box::new(e),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub env_steps: u64,
    pub mean_soups: f64,
    pub max_soups: u32,
}

/// Outcome of one method on one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: String,
    pub seed: u64,
    /// Environment steps per stage, in execution order.
    pub stages: Vec<(String, u64)>,
    pub total_steps: u64,
    pub eval: SeedEval,
    pub curve: Vec<CurvePoint>,
    /// `None` when the curve never delivered a soup.
    pub convergence: Option<u64>,
}

impl RunReport {
    fn finish(method: &str, seed: u64, stages: Vec<(String, u64)>, eval: SeedEval, curve: Vec<CurvePoint>) -> Self {
        let pts: Vec<(u64, f64)> = curve.iter().map(|p| (p.env_steps, p.mean_soups)).collect();
        Self {
            method: method.into(),
            seed,
            total_steps: stages.iter().map(|(_, s)| s).sum(),
            stages,
            eval,
            convergence: steps_to_convergence(&pts),
            curve,
        }
    }

    /// Metrics rows: one per stage, one per curve point and a final evaluation row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (stage, steps) in &self.stages {
            writeln!(w, "{}/{stage},{steps},,,{}", self.method, self.seed)?;
        }
        for p in &self.curve {
            writeln!(w, "{}/curve,{},{},{},{}", self.method, p.env_steps, p.mean_soups, p.max_soups, self.seed)?;
        }
        writeln!(
            w,
            "{}/eval,{},{},{},{}",
            self.method, self.total_steps, self.eval.mean_soups, self.eval.max_soups, self.seed
        )
    }
}

pub const METRICS_HEADER: &str = "stage,env_steps,eval_mean_soups,eval_max_soups,seed";

pub fn write_metrics_csv<W: Write>(mut w: W, runs: &[RunReport]) -> std::io::Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for r in runs {
        r.write_csv(&mut w)?;
    }
    Ok(())
}

/// Trains on the source layout's expert-anchored goals.
pub fn pretrain(cfg: &ExperimentConfig, seed: u64) -> Result<GcrlAgent, HarnessError> {
    let kitchen = cfg.source_kitchen()?;
    let starts = expert_states(&kitchen)?;
    let gcfg = cfg.gcrl(cfg.pretrain_steps);
    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(seed, 1));
    let mut agent = GcrlAgent::for_kitchen(&kitchen, &gcfg, &mut rng)?;
    let objective = Objective::Goals {
        starts: &starts,
        sampler: gcfg.sampler(),
    };
    train(&mut agent, &kitchen, objective, &gcfg, &mut rng, &mut |_, _| Ok(()))?;
    Ok(agent)
}

/// Trains `agent` for `budget` steps, keeping a copy every `interval` steps
/// (and the starting agent) for later evaluation.
fn train_with_snapshots(
    agent: &mut GcrlAgent,
    kitchen: &Kitchen,
    objective: Objective<'_>,
    cfg: &TrainConfig,
    interval: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(u64, GcrlAgent)>, HarnessError> {
    let mut snaps = Vec::new();
    if interval > 0 {
        snaps.push((0, agent.clone()));
    }
    let mut next = interval;
    train(agent, kitchen, objective, cfg, rng, &mut |a: &GcrlAgent, m: &IterationMetrics| {
        if interval > 0 && (m.env_steps >= next || m.env_steps == cfg.budget) {
            snaps.push((m.env_steps, a.clone()));
            while next <= m.env_steps {
                next += interval;
            }
        }
        Ok(())
    })?;
    Ok(snaps)
}

fn curve_point(eval: &super::EvalReport, env_steps: u64) -> CurvePoint {
    CurvePoint {
        env_steps,
        mean_soups: eval.mean_soups,
        max_soups: eval.max_soups,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Vanilla,
    Finetune,
}

impl BaselineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Vanilla => "vanilla",
            BaselineKind::Finetune => "finetune",
        }
    }
}

/// Trains a plain soup-delivering agent on the target for `budget` steps,
/// from scratch or from `source`, and evaluates it without goals.
/// A finetune run reports `source_steps` as its pretrain stage.
pub fn run_baseline(
    kind: BaselineKind,
    source: Option<(&GcrlAgent, u64)>,
    cfg: &ExperimentConfig,
    budget: u64,
    seed: u64,
) -> Result<(RunReport, GcrlAgent), HarnessError> {
    let kitchen = cfg.target_kitchen()?;
    let gcfg = cfg.gcrl(budget);
    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(seed, 8));
    let (mut agent, mut stages) = match (kind, source) {
        (BaselineKind::Vanilla, _) => (GcrlAgent::for_kitchen(&kitchen, &gcfg, &mut rng)?, Vec::new()),
        (BaselineKind::Finetune, Some((a, steps))) => (a.clone(), vec![("pretrain".to_string(), steps)]),
        (BaselineKind::Finetune, None) => return Err(HarnessError::Config("finetune baseline needs a source checkpoint".into())),
    };
    let snaps = in_stage(
        "train",
        train_with_snapshots(&mut agent, &kitchen, Objective::Soups, &gcfg, cfg.curve_interval, &mut rng),
    )?;
    stages.push(("train".to_string(), budget));
    let offset = match kind {
        BaselineKind::Vanilla => 0,
        BaselineKind::Finetune => stages[0].1,
    };
    let mut curve = Vec::new();
    for (steps, a) in &snaps {
        let r = evaluate(&mut PlainPolicy(a), &kitchen, cfg.curve_episodes, &[seed])?;
        curve.push(curve_point(&r, offset + steps));
    }
    let eval = in_stage("eval", evaluate(&mut PlainPolicy(&agent), &kitchen, cfg.eval_episodes, &[seed]))?;
    let report = RunReport::finish(kind.as_str(), seed, stages, eval.seeds[0].clone(), curve);
    Ok((report, agent))
}

/// Continues training `pretrained` on the target's expert-anchored goals.
/// With a positive `interval`, also returns copies taken every `interval` steps.
pub fn finetune(
    cfg: &ExperimentConfig,
    seed: u64,
    pretrained: &GcrlAgent,
    kitchen: &Kitchen,
    expert: &[GridState],
    interval: u64,
) -> Result<(GcrlAgent, Vec<(u64, GcrlAgent)>), HarnessError> {
    let gcfg = cfg.gcrl(cfg.finetune_steps);
    let mut agent = pretrained.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(seed, 2));
    let objective = Objective::Goals {
        starts: expert,
        sampler: gcfg.sampler(),
    };
    let snaps = train_with_snapshots(&mut agent, kitchen, objective, &gcfg, interval, &mut rng)?;
    Ok((agent, snaps))
}

/// The expert trajectory followed by `cfg.dataset_episodes` goal-reaching rollouts of `agent`.
pub fn embedding_dataset(
    cfg: &ExperimentConfig,
    seed: u64,
    agent: &GcrlAgent,
    kitchen: &Kitchen,
    expert: &[GridState],
) -> Result<Dataset, HarnessError> {
    let mut dataset = Dataset::from_trajectories(&kitchen.layout, &[expert.to_vec()]);
    let rollouts = build_dataset(agent, kitchen, expert, &cfg.gcrl(0), cfg.dataset_episodes, stage_seed(seed, 3))?;
    dataset.append(rollouts)?;
    Ok(dataset)
}

/// Everything one pipeline run produces.
#[derive(Debug, Clone)]
pub struct PipelineArtifacts {
    pub pretrained: GcrlAgent,
    pub agent: GcrlAgent,
    pub dataset: Dataset,
    pub embedding: EmbeddingModel,
    pub abstraction: Abstraction,
    pub expert: Vec<GridState>,
}

/// Pretrain, finetune, embed, cluster, plan and evaluate on one seed.
/// `pretrained` skips the pretrain stage (its steps still count).
pub fn run_pipeline_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    pretrained: Option<GcrlAgent>,
) -> Result<(RunReport, PipelineArtifacts), HarnessError> {
    cfg.validate()?;
    let kitchen = cfg.target_kitchen()?;
    let pretrained = match pretrained {
        Some(a) => a,
        None => in_stage("pretrain", pretrain(cfg, seed))?,
    };
    let expert = in_stage("demo", expert_states(&kitchen))?;

    let (agent, snaps) = in_stage("finetune", finetune(cfg, seed, &pretrained, &kitchen, &expert, cfg.curve_interval))?;
    let dataset = in_stage("dataset", embedding_dataset(cfg, seed, &agent, &kitchen, &expert))?;
    let (embedding, _) = in_stage("embedding", train_embedding(&dataset, &cfg.embedding(), stage_seed(seed, 4)).map_err(HarnessError::from))?;
    let abstraction = in_stage("graph", build_abstraction(&embedding, &kitchen, &expert, cfg.k, stage_seed(seed, 5)))?;

    let stages = vec![
        ("pretrain".to_string(), cfg.pretrain_steps),
        ("finetune".to_string(), cfg.finetune_steps),
        ("dataset".to_string(), dataset.env_steps),
    ];
    let offset = cfg.pretrain_steps + dataset.env_steps;
    let mut curve = Vec::new();
    for (steps, a) in &snaps {
        let mut ctl = SubgoalController::new(a, &embedding, &abstraction, cfg.subgoal_mode());
        let r = evaluate(&mut ctl, &kitchen, cfg.curve_episodes, &[seed])?;
        curve.push(curve_point(&r, offset + steps));
    }
    let mut ctl = SubgoalController::new(&agent, &embedding, &abstraction, cfg.subgoal_mode());
    let eval = in_stage("eval", evaluate(&mut ctl, &kitchen, cfg.eval_episodes, &[seed]))?;
    let report = RunReport::finish("pipeline", seed, stages, eval.seeds[0].clone(), curve);
    Ok((
        report,
        PipelineArtifacts {
            pretrained,
            agent,
            dataset,
            embedding,
            abstraction,
            expert,
        },
    ))
}

/// Clusters the expert trajectory's latents and builds the planning graph.
pub fn build_abstraction(
    embedding: &EmbeddingModel,
    kitchen: &Kitchen,
    expert: &[GridState],
    k: usize,
    seed: u64,
) -> Result<Abstraction, HarnessError> {
    let latents = expert
        .iter()
        .map(|s| embedding.embed_state(&kitchen.layout, s))
        .collect::<Result<Vec<_>, _>>()?;
    let clusters = fit_clusters(&latents, k, seed)?;
    let graph = build_planning_graph(&clusters, embedding, &kitchen.layout, expert)?;
    Ok(Abstraction { clusters, graph })
}

/// Writes the artifacts of one run under `dir` and returns `(file name, sha256)` pairs.
pub fn save_artifacts(dir: &Path, cfg: &ExperimentConfig, report: &RunReport, art: &PipelineArtifacts) -> Result<Vec<(String, String)>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let source = cfg.source_kitchen()?;
    let target = cfg.target_kitchen()?;
    let files: Vec<PathBuf> = ["pretrain.json", "finetune.json", "dataset.json", "embedding.json", "abstraction.json", "report.json"]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    let gdigest = cfg.gcrl(0).digest();
    art.pretrained.save(&files[0], &source.layout.digest(), &gdigest)?;
    art.agent.save(&files[1], &target.layout.digest(), &gdigest)?;
    art.dataset.save(&files[2], &target.layout)?;
    art.embedding.save(&files[3], &cfg.embedding().digest(), &art.dataset.digest())?;
    art.abstraction.save(&files[4])?;
    std::fs::write(&files[5], serde_json::to_string_pretty(report).map_err(std::io::Error::other)?)?;
    files
        .iter()
        .map(|p| {
            let bytes = std::fs::read(p)?;
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, hex::encode(Sha256::digest(&bytes))))
        })
        .collect()
}

/// Result of a full experiment over every configured seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub runs: Vec<RunReport>,
}

impl ExperimentReport {
    /// Runs of `method` in seed order.
    pub fn method(&self, method: &str) -> Vec<&RunReport> {
        self.runs.iter().filter(|r| r.method == method).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_metrics_csv(w, &self.runs)
    }
}

/// Runs the pipeline on every seed, plus both baselines when `baselines` is
/// set, writing artifacts, `metrics.csv` and `digests.txt` under `out`.
pub fn run_experiment(cfg: &ExperimentConfig, baselines: bool, out: Option<&Path>) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let mut runs = Vec::new();
    let mut digests = Vec::new();
    for &seed in &cfg.seeds {
        let (report, art) = run_pipeline_seed(cfg, seed, None)?;
        if let Some(out) = out {
            for (name, d) in save_artifacts(&out.join(format!("seed-{seed}")), cfg, &report, &art)? {
                digests.push(format!("seed-{seed}/{name} {d}"));
            }
        }
        if baselines {
            let budget = cfg.baseline_steps.unwrap_or(report.total_steps);
            let (vanilla, _) = run_baseline(BaselineKind::Vanilla, None, cfg, budget, seed)?;
            let ft_budget = budget.saturating_sub(cfg.pretrain_steps);
            let (finetune, _) = run_baseline(BaselineKind::Finetune, Some((&art.pretrained, cfg.pretrain_steps)), cfg, ft_budget, seed)?;
            runs.push(report);
            runs.push(vanilla);
            runs.push(finetune);
        } else {
            runs.push(report);
        }
    }
    let report = ExperimentReport { runs };
    if let Some(out) = out {
        std::fs::create_dir_all(out)?;
        let mut csv = Vec::new();
        report.write_csv(&mut csv)?;
        std::fs::write(out.join("metrics.csv"), &csv)?;
        digests.push(format!("metrics.csv {}", hex::encode(Sha256::digest(&csv))));
        std::fs::write(out.join("digests.txt"), digests.join("\n") + "\n")?;
    }
    Ok(report)
}
