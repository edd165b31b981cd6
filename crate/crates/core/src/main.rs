use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use newsmacro::pipeline::{self, PipelineError, Stage};
use newsmacro::synthetic::{generate_world, WorldSpec};

#[derive(Parser)]
#[command(name = "newsmacro", version, about = "News-sentiment panels and factor-augmented macro forecasts")]
struct Cli {
    /// Log progress (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Replaces the config seeds.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus, labels, macro series and a config.
    GenerateSynthetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// JSON world specification; defaults apply to missing fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Comma-separated target countries.
        #[arg(long, value_delimiter = ',')]
        countries: Option<Vec<String>>,
        /// Gzip the corpus.
        #[arg(long)]
        gzip: bool,
    },
    Ingest(RunArgs),
    Filter(RunArgs),
    Aggregate(RunArgs),
    Granger(RunArgs),
    Forecast(RunArgs),
    Report(RunArgs),
    /// Every stage in order.
    RunAll(RunArgs),
    /// One stage by name, or `all`.
    Run {
        #[arg(long)]
        stage: String,
        #[command(flatten)]
        args: RunArgs,
    },
}

fn generate(
    out: PathBuf,
    seed: Option<u64>,
    spec: Option<PathBuf>,
    countries: Option<Vec<String>>,
    gzip: bool,
) -> Result<serde_json::Value, PipelineError> {
    let mut ws: WorldSpec = match spec {
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| PipelineError::io(&p, e))?;
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?
        }
        None => WorldSpec::default(),
    };
    if let Some(s) = seed {
        ws.seed = s;
    }
    if let Some(c) = countries {
        ws.countries = c;
    }
    let world = generate_world(&ws);
    let config = world.write(&out, gzip).map_err(|e| PipelineError::io(&out, e))?;
    Ok(serde_json::json!({
        "config": config,
        "records": world.records.len(),
    }))
}

fn execute(command: Command) -> Result<serde_json::Value, PipelineError> {
    let stage_run = |args: RunArgs, stage: Option<Stage>| {
        let m = pipeline::run(&args.config, &args.out, stage, args.seed)?;
        Ok(serde_json::json!({ "manifest": args.out.join("manifest.json"), "artifacts": m.artifacts.len() }))
    };
    match command {
        Command::GenerateSynthetic {
            out,
            seed,
            spec,
            countries,
            gzip,
        } => generate(out, seed, spec, countries, gzip),
        Command::Ingest(a) => stage_run(a, Some(Stage::Ingest)),
        Command::Filter(a) => stage_run(a, Some(Stage::Filter)),
        Command::Aggregate(a) => stage_run(a, Some(Stage::Aggregate)),
        Command::Granger(a) => stage_run(a, Some(Stage::Granger)),
        Command::Forecast(a) => stage_run(a, Some(Stage::Forecast)),
        Command::Report(a) => stage_run(a, Some(Stage::Report)),
        Command::RunAll(a) => stage_run(a, None),
        Command::Run { stage, args } => {
            let stage = if stage == "all" { None } else { Some(stage.parse()?) };
            stage_run(args, stage)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
