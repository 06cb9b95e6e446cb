use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use subgoal_transfer::embed::{train_embedding, write_latents_csv, EmbeddingModel};
use subgoal_transfer::expert::{record_demonstration, ExpertController};
use subgoal_transfer::gcrl::GcrlAgent;
use subgoal_transfer::graph::Abstraction;
use subgoal_transfer::gridworld::Kitchen;
use subgoal_transfer::harness::{
    build_abstraction, embedding_dataset, evaluate, execute_task, expert_states, finetune, pretrain, render_subgoals,
    resolve_layout, run_baseline, run_experiment, stage_seed, write_metrics_csv, BaselineKind, EvalReport,
    ExperimentConfig, HarnessError, Idle, PlainPolicy, SubgoalController,
};

#[derive(Parser)]
#[command(name = "subgoal-transfer", version, about = "Sub-goal guided transfer in a two-chef cooking gridworld")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML); defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train the goal-conditioned agent on the source layout.
    Pretrain(Common),
    /// Continue training a pretrained agent on the target layout.
    Finetune {
        #[command(flatten)]
        common: Common,
        /// Pretrained checkpoint; defaults to `<out>/pretrain.json`.
        #[arg(long)]
        agent: Option<PathBuf>,
    },
    /// Record the scripted expert's first round on a layout.
    Demo {
        #[command(flatten)]
        common: Common,
        /// Layout name or file; defaults to the config's target.
        #[arg(long)]
        layout: Option<String>,
    },
    /// Build the rollout dataset and train the temporal embedding.
    Embed(Common),
    /// Cluster the expert latents and build the planning graph.
    Graph(Common),
    /// Run one episode under sub-goal control and save its trace.
    Execute(Common),
    /// Evaluate a controller over the configured episodes.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ControllerKind::Pipeline)]
        controller: ControllerKind,
    },
    /// Train and evaluate a baseline on the target layout.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: Kind,
        /// Budget in environment steps; defaults to pretrain + finetune steps.
        #[arg(long)]
        steps: Option<u64>,
        /// Source checkpoint for the finetune baseline; defaults to `<out>/pretrain.json`.
        #[arg(long)]
        source: Option<PathBuf>,
    },
    /// Run every stage end to end and write metrics and digests.
    Pipeline {
        #[command(flatten)]
        common: Common,
        /// Also train and evaluate both baselines per seed.
        #[arg(long)]
        baselines: bool,
    },
    /// Render the sub-goals of one executed episode as ASCII frames.
    Render(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerKind {
    Pipeline,
    Plain,
    Expert,
    Idle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Vanilla,
    Finetune,
}

struct Ctx {
    cfg: ExperimentConfig,
    seed: u64,
    out: PathBuf,
}

impl Ctx {
    fn new(c: &Common) -> Result<Self, HarnessError> {
        let mut cfg = match &c.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = c.seed {
            cfg.seeds = vec![s];
        }
        cfg.validate()?;
        std::fs::create_dir_all(&c.out)?;
        Ok(Self {
            seed: cfg.seeds[0],
            cfg,
            out: c.out.clone(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Path of an artifact an earlier subcommand must have written.
    fn input(&self, name: &str) -> Result<PathBuf, HarnessError> {
        existing(self.path(name))
    }

    fn target(&self) -> Result<(Kitchen, Vec<subgoal_transfer::gridworld::GridState>), HarnessError> {
        let kitchen = self.cfg.target_kitchen()?;
        let expert = expert_states(&kitchen)?;
        Ok((kitchen, expert))
    }

    fn agent(&self, name: &str) -> Result<GcrlAgent, HarnessError> {
        Ok(GcrlAgent::load(&self.input(name)?)?)
    }

    fn abstraction(&self) -> Result<(EmbeddingModel, Abstraction), HarnessError> {
        Ok((EmbeddingModel::load(&self.input("embedding.json")?)?, Abstraction::load(&self.input("abstraction.json")?)?))
    }
}

fn existing(path: PathBuf) -> Result<PathBuf, HarnessError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(HarnessError::Config(format!("missing input {}", path.display())))
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn print_eval(label: &str, r: &EvalReport) {
    for s in &r.seeds {
        println!("{label} seed {}: mean soups {:.3}, max {}", s.seed, s.mean_soups, s.max_soups);
    }
    println!("{label}: mean soups {:.3}, max {}", r.mean_soups, r.max_soups);
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Pretrain(c) => {
            let ctx = Ctx::new(&c)?;
            let agent = pretrain(&ctx.cfg, ctx.seed)?;
            let layout = ctx.cfg.source_kitchen()?.layout;
            agent.save(&ctx.path("pretrain.json"), &layout.digest(), &ctx.cfg.gcrl(0).digest())?;
            println!("pretrained {} steps on {}", ctx.cfg.pretrain_steps, ctx.cfg.source_layout);
        }
        Command::Finetune { common, agent } => {
            let ctx = Ctx::new(&common)?;
            let pre = GcrlAgent::load(&existing(agent.unwrap_or_else(|| ctx.path("pretrain.json")))?)?;
            let (kitchen, expert) = ctx.target()?;
            let (tuned, _) = finetune(&ctx.cfg, ctx.seed, &pre, &kitchen, &expert, 0)?;
            tuned.save(&ctx.path("finetune.json"), &kitchen.layout.digest(), &ctx.cfg.gcrl(0).digest())?;
            println!("finetuned {} steps on {}", ctx.cfg.finetune_steps, ctx.cfg.target_layout);
        }
        Command::Demo { common, layout } => {
            let ctx = Ctx::new(&common)?;
            let name = layout.unwrap_or_else(|| ctx.cfg.target_layout.clone());
            let kitchen = Kitchen::new(resolve_layout(&name)?);
            let demo = record_demonstration(&kitchen, ctx.seed)?;
            demo.save(&ctx.path("demo.jsonl"))?;
            println!("recorded {} steps on {name}", demo.len());
        }
        Command::Embed(c) => {
            let ctx = Ctx::new(&c)?;
            let (kitchen, expert) = ctx.target()?;
            let agent = ctx.agent("finetune.json")?;
            let data = embedding_dataset(&ctx.cfg, ctx.seed, &agent, &kitchen, &expert)?;
            let ecfg = ctx.cfg.embedding();
            let (model, losses) = train_embedding(&data, &ecfg, stage_seed(ctx.seed, 4))?;
            data.save(&ctx.path("dataset.json"), &kitchen.layout)?;
            model.save(&ctx.path("embedding.json"), &ecfg.digest(), &data.digest())?;
            write_latents_csv(std::fs::File::create(ctx.path("latents.csv"))?, &model, &data)?;
            let last = losses.last().copied().unwrap_or(f64::NAN);
            println!("embedded {} states ({} rollout steps), final loss {last:.4}", data.len(), data.env_steps);
        }
        Command::Graph(c) => {
            let ctx = Ctx::new(&c)?;
            let (kitchen, expert) = ctx.target()?;
            let model = EmbeddingModel::load(&ctx.input("embedding.json")?)?;
            let abs = build_abstraction(&model, &kitchen, &expert, ctx.cfg.k, stage_seed(ctx.seed, 5))?;
            abs.save(&ctx.path("abstraction.json"))?;
            println!("graph: {} clusters, {} edges, expert walk {:?}", abs.graph.k, abs.graph.edges.len(), abs.graph.runs());
        }
        Command::Execute(c) => {
            let ctx = Ctx::new(&c)?;
            let (kitchen, _) = ctx.target()?;
            let agent = ctx.agent("finetune.json")?;
            let (model, abs) = ctx.abstraction()?;
            let mut ctl = SubgoalController::new(&agent, &model, &abs, ctx.cfg.subgoal_mode());
            let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(ctx.seed, 6));
            let trace = execute_task(&mut ctl, &kitchen, ctx.seed, &mut rng)?;
            write_json(&ctx.path("trace.json"), &trace)?;
            println!("executed {} steps, {} sub-goals, {} soups", trace.actions.len(), trace.goals.len(), trace.soups);
        }
        Command::Evaluate { common, controller } => {
            let ctx = Ctx::new(&common)?;
            let (kitchen, _) = ctx.target()?;
            let (episodes, seeds) = (ctx.cfg.eval_episodes, &ctx.cfg.seeds);
            let report = match controller {
                ControllerKind::Pipeline => {
                    let agent = ctx.agent("finetune.json")?;
                    let (model, abs) = ctx.abstraction()?;
                    let mut ctl = SubgoalController::new(&agent, &model, &abs, ctx.cfg.subgoal_mode());
                    evaluate(&mut ctl, &kitchen, episodes, seeds)?
                }
                ControllerKind::Plain => {
                    let agent = ctx.agent("finetune.json")?;
                    evaluate(&mut PlainPolicy(&agent), &kitchen, episodes, seeds)?
                }
                ControllerKind::Expert => evaluate(&mut ExpertController::new(), &kitchen, episodes, seeds)?,
                ControllerKind::Idle => evaluate(&mut Idle, &kitchen, episodes, seeds)?,
            };
            write_json(&ctx.path("eval.json"), &report)?;
            print_eval("evaluate", &report);
        }
        Command::Baseline { common, kind, steps, source } => {
            let ctx = Ctx::new(&common)?;
            let budget = steps.unwrap_or(ctx.cfg.pretrain_steps + ctx.cfg.finetune_steps);
            let (report, agent) = match kind {
                Kind::Vanilla => run_baseline(BaselineKind::Vanilla, None, &ctx.cfg, budget, ctx.seed)?,
                Kind::Finetune => {
                    let src = GcrlAgent::load(&existing(source.unwrap_or_else(|| ctx.path("pretrain.json")))?)?;
                    let rest = budget.saturating_sub(ctx.cfg.pretrain_steps);
                    run_baseline(BaselineKind::Finetune, Some((&src, ctx.cfg.pretrain_steps)), &ctx.cfg, rest, ctx.seed)?
                }
            };
            let name = report.method.clone();
            let kitchen = ctx.cfg.target_kitchen()?;
            agent.save(&ctx.path(&format!("{name}.json")), &kitchen.layout.digest(), &ctx.cfg.gcrl(0).digest())?;
            write_metrics_csv(std::fs::File::create(ctx.path(&format!("{name}-metrics.csv")))?, std::slice::from_ref(&report))?;
            println!(
                "{name} seed {}: {} steps, mean soups {:.3}, max {}",
                report.seed, report.total_steps, report.eval.mean_soups, report.eval.max_soups
            );
        }
        Command::Pipeline { common, baselines } => {
            let ctx = Ctx::new(&common)?;
            let report = run_experiment(&ctx.cfg, baselines, Some(&ctx.out))?;
            for r in &report.runs {
                let conv = r.convergence.map_or("not converged".to_string(), |s| format!("converged at {s}"));
                println!(
                    "{} seed {}: {} steps, mean soups {:.3}, max {}, {conv}",
                    r.method, r.seed, r.total_steps, r.eval.mean_soups, r.eval.max_soups
                );
            }
        }
        Command::Render(c) => {
            let ctx = Ctx::new(&c)?;
            let (kitchen, _) = ctx.target()?;
            let agent = ctx.agent("finetune.json")?;
            let (model, abs) = ctx.abstraction()?;
            let mut ctl = SubgoalController::new(&agent, &model, &abs, ctx.cfg.subgoal_mode());
            let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(ctx.seed, 6));
            let trace = execute_task(&mut ctl, &kitchen, ctx.seed, &mut rng)?;
            let frames = render_subgoals(&trace, &kitchen.layout);
            let text: String = frames.iter().map(|f| f.text.clone() + "\n").collect();
            std::fs::write(ctx.path("subgoals.txt"), &text)?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
