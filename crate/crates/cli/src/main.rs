use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand};
use sgplan_cli::{BackendKind, RunConfig};
use sgplan_core::fixtures::Template;

#[derive(Parser)]
#[command(name = "sgplan", version, about = "Scene-graph subpolicy planning in a grid world")]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes and write records, logs, transcripts and metrics.
    Run(RunArgs),
    /// Recompute metrics from a directory of episode records.
    Eval {
        dir: PathBuf,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Generate a fixture scene and its tasks.
    GenScene {
        /// two-room, corridor-maze or indoor-outdoor.
        template: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print the effective run configuration as TOML.
    ShowConfig(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Task file, repeatable.
    #[arg(long = "task")]
    tasks: Vec<PathBuf>,
    /// `bundled` or a suite manifest path.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    /// Transcript directory for the oracle backend.
    #[arg(long)]
    transcripts: Option<PathBuf>,
    /// Episode seed, or an offset added to suite seeds.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long)]
    jobs: Option<usize>,
    /// Plan over the full scene graph instead of a filtered one.
    #[arg(long)]
    no_filter: bool,
    #[arg(long)]
    max_steps: Option<u32>,
    #[arg(long)]
    post_completion_cap: Option<u32>,
    /// Sparsification threshold in meters.
    #[arg(long)]
    sparsify_c: Option<f64>,
    /// Door-crossing threshold.
    #[arg(long)]
    tau: Option<f64>,
    /// Exponent of the object assignment cost.
    #[arg(long)]
    lambda: Option<f64>,
}

impl RunArgs {
    fn into_config(self) -> anyhow::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.scene {
            c.scene = Some(v);
        }
        if !self.tasks.is_empty() {
            c.tasks = self.tasks;
        }
        if let Some(v) = self.suite {
            c.suite = Some(v);
        }
        if let Some(v) = self.backend {
            c.backend.kind = v;
        }
        if let Some(v) = self.transcripts {
            c.backend.transcripts = Some(v);
        }
        if let Some(v) = self.seed {
            c.seed = Some(v);
        }
        if let Some(v) = self.out {
            c.out = v;
        }
        if let Some(v) = self.jobs {
            c.jobs = v;
        }
        if self.no_filter {
            c.agent.filter = false;
        }
        if let Some(v) = self.max_steps {
            c.agent.max_steps = v;
        }
        if let Some(v) = self.post_completion_cap {
            c.agent.post_completion_cap = v;
        }
        if let Some(v) = self.sparsify_c {
            c.agent.sparsify_c = v;
        }
        if let Some(v) = self.tau {
            c.agent.tau = Some(v);
        }
        if let Some(v) = self.lambda {
            c.agent.lambda = v;
        }
        Ok(c)
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

    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Run(args) => {
            let config = args.into_config()?;
            let summary = sgplan_cli::run(&config)?;
            print!("{}", summary.report.to_table());
            println!("output: {}", config.out.display());
            if summary.faults > 0 {
                eprintln!("{} episode(s) ended in a fault", summary.faults);
                return Ok(ExitCode::from(1));
            }
        }
        Command::Eval { dir, json } => {
            let report = sgplan_cli::eval(&dir)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_table());
            }
        }
        Command::GenScene {
            template,
            seed,
            out,
        } => {
            let template: Template = template.parse()?;
            for p in sgplan_cli::gen_scene(template, seed, &out)? {
                println!("{}", p.display());
            }
        }
        Command::ShowConfig(args) => {
            let config = args.into_config()?;
            print!("{}", config.to_toml().context("serializing configuration")?);
        }
    }
    Ok(ExitCode::SUCCESS)
}
