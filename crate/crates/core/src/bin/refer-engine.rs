use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use refer_engine::batch;
use refer_engine::config::Config;
use refer_engine::mock_fixtures::{self, FixtureTemplate};
use refer_engine::orchestrator::{self, SESSION_LOG_FILE};
use refer_engine::video_io;

#[derive(Parser)]
#[command(name = "refer-engine", version, about = "Referring video object segmentation with reflective agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment the objects a query refers to in one video.
    Run {
        #[arg(long)]
        video: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        max_turn: Option<u32>,
        #[arg(long)]
        dump_reflection: bool,
    },
    /// Run every sample of a JSON-lines manifest and write a report.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate a synthetic clip with ground truth and a scripted backend.
    GenFixture {
        #[arg(long)]
        template: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn run(
    video: &Path,
    query: &str,
    out: &Path,
    config: Option<&Path>,
    max_turn: Option<u32>,
    dump_reflection: bool,
) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(m) = max_turn {
        cfg.reflection.max_turn = m;
    }
    cfg.validate()?;
    let backend = cfg.backends.connect().context("connecting backends")?;
    let clip = video_io::load_clip(video, cfg.input.max_frames)
        .with_context(|| format!("loading video {}", video.display()))?;
    let mut result = match orchestrator::run_session(&clip, query, &cfg, backend) {
        Ok(r) => r,
        Err(failure) => {
            std::fs::create_dir_all(out)?;
            let path = out.join(SESSION_LOG_FILE);
            failure.log.save(&path)?;
            eprintln!("partial transcript written to {}", path.display());
            return Err(failure.error.into());
        }
    };
    orchestrator::write_session_outputs(&mut result, &clip, out, dump_reflection)?;
    println!(
        "status={:?} accepted={} rounds={} keyframe={} targets={} transcript={}",
        result.status,
        result.accepted,
        result.rounds_used,
        result.keyframe_index().map(|k| k.to_string()).unwrap_or_else(|| "-".into()),
        result.masklets.len(),
        result.transcript_path.as_deref().unwrap_or(out).display()
    );
    Ok(())
}

fn eval(manifest: &Path, out: &Path, parallel: usize, config: Option<&Path>) -> Result<()> {
    let cfg = load_config(config)?;
    let report = batch::run_batch(manifest, &cfg, out, parallel)?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
    println!(
        "samples={} completed={} errors={} J={} F={} J&F={}",
        report.samples.len(),
        report.completed,
        report.errors,
        fmt(report.mean_j),
        fmt(report.mean_f),
        fmt(report.mean_jf)
    );
    for s in report.samples.iter().filter(|s| s.error.is_some()) {
        eprintln!("{}: {}", s.id, s.error.as_deref().unwrap_or_default());
    }
    Ok(())
}

fn gen_fixture(template: &str, seed: u64, out: &Path, config: Option<&Path>) -> Result<()> {
    let cfg = load_config(config)?;
    let template: FixtureTemplate = template.parse()?;
    let fixture = mock_fixtures::generate(template, seed, &cfg)?;
    let paths = mock_fixtures::write_fixture(&fixture, out)?;
    println!("query: {}", fixture.query);
    println!("frames: {}", paths.frames.display());
    println!("gt: {}", paths.gt.display());
    println!("scenario: {}", paths.scenario.display());
    println!("manifest: {}", paths.manifest.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run {
            video,
            query,
            out,
            config,
            max_turn,
            dump_reflection,
        } => run(&video, &query, &out, config.as_deref(), max_turn, dump_reflection),
        Command::Eval {
            manifest,
            out,
            parallel,
            config,
        } => eval(&manifest, &out, parallel, config.as_deref()),
        Command::GenFixture {
            template,
            seed,
            out,
            config,
        } => gen_fixture(&template, seed, &out, config.as_deref()),
    }
}
