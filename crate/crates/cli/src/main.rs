mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::{CliError, CliResult, Ctx};
use config::{unflatten, RawConfig, Resolver};

/// Entropic barrier experiments: MCMC hitting times, free-entropy profiles,
/// small-ball estimates and spiked-tensor diagnostics.
#[derive(Parser)]
#[command(name = "ebarrier", version)]
struct Cli {
    /// TOML or JSON config file, or a manifest.json from an earlier run
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Replica count, for commands that run replicas
    #[arg(long, global = true)]
    replicas: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a regression dataset
    Simulate,
    /// Run one chain on the radial model and save its trace
    RunChain,
    /// Cold and warm start hitting-time experiment
    HittingTime,
    /// Free-entropy curve (averaged tensor) or radial profile
    FreeEntropy,
    /// Small-ball scaling fit or isotropic lower bound
    SmallBall,
    /// Posterior band masses for a spiked tensor
    Bands,
    /// Posterior contraction curve over SNRs
    TensorContract,
    /// Conductance bound against empirical escape times
    Bottleneck,
    /// Barrier-reduction audit of a saved trace
    Audit,
    /// Render a CSV as SVG
    Plot {
        #[arg(long)]
        input: Option<String>,
        #[arg(long)]
        kind: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::RunChain => "run-chain",
            Command::HittingTime => "hitting-time",
            Command::FreeEntropy => "free-entropy",
            Command::SmallBall => "small-ball",
            Command::Bands => "bands",
            Command::TensorContract => "tensor-contract",
            Command::Bottleneck => "bottleneck",
            Command::Audit => "audit",
            Command::Plot { .. } => "plot",
        }
    }

    /// Config key that `--replicas` sets, if the command has replicas.
    fn replica_key(&self) -> Option<&'static str> {
        match self {
            Command::HittingTime => Some("hitting.replicas"),
            Command::TensorContract => Some("contraction.seeds"),
            Command::Bottleneck => Some("bottleneck.replicas"),
            _ => None,
        }
    }
}

fn run(cli: Cli) -> CliResult<Ctx> {
    let name = cli.command.name();
    let raw = match &cli.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    if let Some(c) = &raw.command {
        if c != name {
            return Err(CliError::Config(format!("manifest was written by '{c}', not '{name}'")));
        }
    }
    let seed = cli.seed.or(raw.seed).unwrap_or(0);
    let mut r = Resolver::new(raw);
    if let Some(n) = cli.replicas {
        let key = cli.command.replica_key().ok_or_else(|| CliError::Config(format!("--replicas is not used by '{name}'")))?;
        r.set(key, json!(n));
    }
    if let Command::Plot { input, kind } = &cli.command {
        if let Some(i) = input {
            r.set("plot.input", json!(i));
        }
        if let Some(k) = kind {
            r.set("plot.kind", json!(k));
        }
    }
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    std::fs::create_dir_all(&cli.out)?;
    let mut ctx = Ctx { seed, out: cli.out.clone(), outputs: vec![] };
    match cli.command {
        Command::Simulate => commands::simulate(&mut r, &mut ctx)?,
        Command::RunChain => commands::run_chain_cmd(&mut r, &mut ctx)?,
        Command::HittingTime => commands::hitting_time(&mut r, &mut ctx)?,
        Command::FreeEntropy => commands::free_entropy(&mut r, &mut ctx)?,
        Command::SmallBall => commands::small_ball(&mut r, &mut ctx)?,
        Command::Bands => commands::bands_cmd(&mut r, &mut ctx)?,
        Command::TensorContract => commands::tensor_contract(&mut r, &mut ctx)?,
        Command::Bottleneck => commands::bottleneck(&mut r, &mut ctx)?,
        Command::Audit => commands::audit(&mut r, &mut ctx)?,
        Command::Plot { .. } => commands::plot(&mut r, &mut ctx)?,
    }
    let manifest = json!({
        "manifest_version": 1,
        "command": name,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "config": unflatten(&r.resolved),
        "outputs": ctx.outputs,
    });
    ctx.write_json("manifest.json", &manifest)?;
    Ok(ctx)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(ctx) => {
            println!("{}", commands::summary(&ctx));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
