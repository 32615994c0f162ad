//! `srnn`: describe videos, simulate scenes, score detections against the
//! oracle and assemble question prompts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use srnn_core::config::{load_config, ConfigError, EngineConfig};
use srnn_core::ingest::{ingest, IngestError, VideoDocument};
use srnn_core::language::{assemble_prompt, DescriptionDoc, QType, Question};
use srnn_core::network::{to_dot, Ablation, GraphDoc};
use srnn_core::pipeline::{run, Diagnostics, PipelineError, RunOptions};
use srnn_core::relations::detect_all;
use srnn_core::simulate::{evaluate, generate, generate_with_margin, render_observations, MarginPolicy, SceneError, SimScene};

const EXIT_SCHEMA: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

#[derive(Parser)]
#[command(name = "srnn", version, about = "Spatiotemporal relation engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct EngineArgs {
    /// Engine configuration file.
    #[arg(long, env = "SRNN_CONFIG")]
    config: Option<PathBuf>,
    /// Number of time slots.
    #[arg(long)]
    slots: Option<usize>,
    /// Frame rate; overrides the input document's.
    #[arg(long)]
    fps: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on one or more video documents.
    Describe {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
        /// Relation kind to remove, or `distance_change` / `rest_state`.
        #[arg(long = "ablate")]
        ablate: Vec<String>,
        /// Re-link the time-stamp chain in a seeded random order.
        #[arg(long = "shuffle-time")]
        shuffle_time: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Videos processed in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Generate a synthetic scene and its rendered observations.
    Simulate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of objects.
        #[arg(short, long, default_value_t = 3)]
        n: usize,
        #[command(flatten)]
        engine: EngineArgs,
        /// Standard deviation of the positional noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Skip the margin policy and keep the first draw.
        #[arg(long)]
        no_margin: bool,
        /// Fewest collisions a margin-checked scene must have.
        #[arg(long, default_value_t = 0)]
        min_collisions: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Score detected relations against the scene oracle.
    Eval {
        scene: PathBuf,
        observations: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long = "ablate")]
        ablate: Vec<String>,
        /// Directory for eval.txt and eval.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble a question prompt from a description.
    Prompt {
        description: PathBuf,
        question: PathBuf,
        /// predictive, counterfactual, descriptive or explanatory.
        #[arg(long)]
        qtype: String,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn schema(e: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_SCHEMA, error: e.into() }
    }
    fn validation(e: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_VALIDATION, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Self { code: 1, error: e.into() },
            ConfigError::Parse { .. } => Self::schema(e),
            ConfigError::Validation { .. } => Self::validation(e),
        }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Schema(_) => Self::schema(e),
            _ => Self::validation(e),
        }
    }
}

impl From<SceneError> for Failure {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::Schema(_) => Self::schema(e),
            SceneError::Validation(_) => Self::validation(e),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Ingest(e) => e.into(),
            other => Self::validation(other),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::from)
}

fn write(dir: &Path, name: &str, text: &str, written: &mut Vec<String>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    written.push(name.to_string());
    Ok(())
}

fn engine_config(args: &EngineArgs) -> Result<EngineConfig> {
    let mut cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => EngineConfig::default(),
    };
    if let Some(n) = args.slots {
        cfg.slot_count = n;
    }
    if let Some(f) = args.fps {
        cfg.frames_per_second = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_ablation(names: &[String]) -> Result<Ablation> {
    Ablation::parse_all(names).map_err(Failure::validation)
}

fn load_video(path: &Path, engine: &EngineArgs) -> Result<VideoDocument> {
    let mut doc = VideoDocument::from_json(&read(path)?)?;
    if let Some(f) = engine.fps {
        doc.fps = f;
    }
    Ok(doc)
}

#[derive(Serialize)]
struct DescribeManifest {
    input: String,
    config: Option<String>,
    ablations: Vec<String>,
    shuffle_seed: Option<u64>,
    output_dir: String,
    artifacts: Vec<String>,
    diagnostics: Diagnostics,
}

fn describe_one(
    input: &Path,
    out: &Path,
    engine: &EngineArgs,
    cfg: &EngineConfig,
    ablate: &[String],
    opts: &RunOptions,
) -> Result<usize> {
    let doc = load_video(input, engine)?;
    let result = run(&doc, cfg, opts)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut written = Vec::new();
    write(out, "description.txt", &result.description.render(), &mut written)?;
    write(out, "graph.json", &GraphDoc::from_graph(&result.graph).to_json(), &mut written)?;
    write(out, "graph.dot", &to_dot(&result.graph), &mut written)?;
    for (name, n) in &result.diagnostics.relation_diagnostics {
        eprintln!("{}: {n} {name} diagnostic(s)", input.display());
    }
    let mut ablations: Vec<String> = ablate.to_vec();
    ablations.sort();
    ablations.dedup();
    let manifest = DescribeManifest {
        input: input.display().to_string(),
        config: engine.config.as_ref().map(|p| p.display().to_string()),
        ablations,
        shuffle_seed: opts.shuffle_seed,
        output_dir: out.display().to_string(),
        artifacts: {
            let mut a = written.clone();
            a.push("manifest.json".into());
            a
        },
        diagnostics: result.diagnostics.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).context("manifest")?;
    write(out, "manifest.json", &json, &mut written)?;
    println!(
        "{}: {} slots, {} sentences, {} neurons -> {}",
        input.display(),
        result.diagnostics.slots,
        result.diagnostics.sentences,
        result.diagnostics.neurons,
        out.display()
    );
    Ok(result.diagnostics.sentences)
}

fn output_dir(out: &Path, input: &Path, many: bool) -> PathBuf {
    if many {
        let stem = input.file_stem().map_or_else(|| "video".into(), |s| s.to_string_lossy().into_owned());
        out.join(stem)
    } else {
        out.to_path_buf()
    }
}

fn cmd_describe(
    inputs: &[PathBuf],
    engine: &EngineArgs,
    ablate: &[String],
    shuffle_time: Option<u64>,
    out: &Path,
    jobs: usize,
) -> Result<()> {
    let cfg = engine_config(engine)?;
    let opts = RunOptions {
        ablation: parse_ablation(ablate)?,
        shuffle_seed: shuffle_time,
    };
    let many = inputs.len() > 1;
    let task = |input: &PathBuf| describe_one(input, &output_dir(out, input, many), engine, &cfg, ablate, &opts);
    let results: Vec<Result<usize>> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .context("thread pool")?;
        pool.install(|| inputs.par_iter().map(task).collect())
    } else {
        inputs.iter().map(task).collect()
    };
    results.into_iter().try_for_each(|r| r.map(|_| ()))
}

#[derive(Serialize)]
struct SimulateManifest {
    seed: u64,
    objects: usize,
    noise_sigma: f64,
    margin_policy: bool,
    config: Option<String>,
    output_dir: String,
    artifacts: Vec<String>,
    collisions: usize,
}

fn cmd_simulate(
    seed: u64,
    n: usize,
    engine: &EngineArgs,
    noise: f64,
    no_margin: bool,
    min_collisions: usize,
    out: &Path,
) -> Result<()> {
    if n == 0 {
        return Err(Failure::validation(anyhow!("need at least one object")));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Failure::validation(anyhow!("noise must be >= 0, got {noise}")));
    }
    let cfg = engine_config(engine)?;
    let scene = if no_margin {
        generate(seed, n, &cfg)
    } else {
        let policy = MarginPolicy {
            min_collisions,
            ..MarginPolicy::default()
        };
        generate_with_margin(seed, n, &cfg, &policy, 5000)
            .ok_or_else(|| Failure::validation(anyhow!("no scene within the margin policy for seed {seed}")))?
    };
    let obs = render_observations(&scene, noise);
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut written = Vec::new();
    write(out, "scene.json", &scene.to_json(), &mut written)?;
    write(out, "observations.json", &obs.to_json(), &mut written)?;
    written.push("manifest.json".into());
    let manifest = SimulateManifest {
        seed,
        objects: n,
        noise_sigma: noise,
        margin_policy: !no_margin,
        config: engine.config.as_ref().map(|p| p.display().to_string()),
        output_dir: out.display().to_string(),
        artifacts: written.clone(),
        collisions: scene.events.len(),
    };
    let json = serde_json::to_string_pretty(&manifest).context("manifest")?;
    fs::write(out.join("manifest.json"), json).context("cannot write manifest.json")?;
    println!(
        "seed {seed}: {n} objects, {} collisions -> {}",
        scene.events.len(),
        out.display()
    );
    Ok(())
}

fn cmd_eval(scene: &Path, observations: &Path, engine: &EngineArgs, ablate: &[String], out: Option<&Path>) -> Result<()> {
    let cfg = engine_config(engine)?;
    let ablation = parse_ablation(ablate)?;
    let scene = SimScene::from_json(&read(scene)?)?;
    let doc = load_video(observations, engine)?;
    if doc.seed != Some(scene.seed) {
        return Err(Failure::validation(anyhow!(
            "seed mismatch: scene {} vs observations {}",
            scene.seed,
            doc.seed.map_or_else(|| "none".to_string(), |s| s.to_string())
        )));
    }
    let cfg = EngineConfig {
        frames_per_second: doc.fps,
        ..cfg
    };
    let ingested = ingest(&doc, &cfg)?;
    let mut report = detect_all(&ingested.tracks, ingested.frame_count, &cfg);
    for slot in &mut report.slots {
        slot.events.retain(|e| !ablation.removes(e.kind));
    }
    let ev = evaluate(&scene, &ingested.tracks, &report.slots, &cfg);
    let text = ev.to_text();
    print!("{text}");
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let mut written = Vec::new();
        write(dir, "eval.txt", &text, &mut written)?;
        let json = serde_json::to_string_pretty(&ev).context("report")?;
        write(dir, "eval.json", &json, &mut written)?;
    }
    Ok(())
}

fn cmd_prompt(description: &Path, question: &Path, qtype: &str, out: Option<&Path>) -> Result<()> {
    let qtype: QType = qtype.parse().map_err(Failure::validation)?;
    let doc = DescriptionDoc::parse(&read(description)?).map_err(Failure::schema)?;
    let question = Question::from_json(&read(question)?).map_err(Failure::schema)?;
    let text = assemble_prompt(&doc, &question, qtype);
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Describe {
            inputs,
            engine,
            ablate,
            shuffle_time,
            out,
            jobs,
        } => cmd_describe(inputs, engine, ablate, *shuffle_time, out, *jobs),
        Command::Simulate {
            seed,
            n,
            engine,
            noise,
            no_margin,
            min_collisions,
            out,
        } => cmd_simulate(*seed, *n, engine, *noise, *no_margin, *min_collisions, out),
        Command::Eval {
            scene,
            observations,
            engine,
            ablate,
            out,
        } => cmd_eval(scene, observations, engine, ablate, out.as_deref()),
        Command::Prompt {
            description,
            question,
            qtype,
            out,
        } => cmd_prompt(description, question, qtype, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
