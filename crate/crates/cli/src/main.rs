use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use debias_core::causal::{pc_discover, Alpha};
use debias_core::engine::{replay, GameConfig};
use debias_core::sim::{emit_report, simulate, AgentPolicy, ReportFormat};
use debias_core::Table;
use debias_service::GameService;

#[derive(Parser)]
#[command(name = "debias", version, about = "Collaborative causal debiasing game")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a causal DAG from a CSV with the PC algorithm.
    Discover {
        #[arg(long)]
        csv: PathBuf,
        /// Label column.
        #[arg(long)]
        label: String,
        /// Significance level of the independence tests.
        #[arg(long, default_value_t = Alpha::DEFAULT)]
        alpha: f64,
        /// DAG file to write; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Play a full game with scripted agents and write reports.
    Sim {
        /// Game config (JSON or TOML). Defaults to the synthetic hiring game.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Rows of the synthetic hiring data when no config is given.
        #[arg(long, default_value_t = 4000)]
        rows: usize,
        /// Comma-separated agent policies, one per player, or a single one for
        /// everyone: `deontologist`, `consequentialist[:STEP]`, `scripted:PATH`.
        #[arg(long, default_value = "deontologist")]
        policies: String,
        /// Overrides the config's seed; 1 for the synthetic default.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 10)]
        max_rounds: u32,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        data_dir: PathBuf,
    },
    /// Rebuild a concluded game's debiased CSV and reports from its log.
    Export {
        /// Engine audit log (`game.jsonl`).
        #[arg(long, conflicts_with_all = ["data_dir", "game"])]
        log: Option<PathBuf>,
        /// Service data directory, together with `--game`.
        #[arg(long, requires = "game")]
        data_dir: Option<PathBuf>,
        #[arg(long, requires = "data_dir")]
        game: Option<String>,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Structured,
    Both,
}

fn discover(csv: &Path, label: &str, alpha: f64, output: Option<&Path>) -> Result<()> {
    let alpha = Alpha::new(alpha)?;
    let table = Table::load_csv(csv, label, &[] as &[&str]).with_context(|| format!("reading {}", csv.display()))?;
    let dag = pc_discover(&table, alpha)?;
    let text = dag.to_dag_file(None);
    match output {
        Some(path) => {
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("{} edges written to {}", dag.edge_count(), path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_policies(spec: &str, players: usize) -> Result<Vec<AgentPolicy>> {
    let base = std::env::current_dir()?;
    let mut policies = spec
        .split(',')
        .map(|s| AgentPolicy::parse(s, &base))
        .collect::<Result<Vec<_>, _>>()?;
    if policies.len() == 1 && players > 1 {
        policies = vec![policies[0].clone(); players];
    }
    Ok(policies)
}

fn sim(
    config: Option<&Path>,
    rows: usize,
    policies: &str,
    seed: Option<u64>,
    max_rounds: u32,
    output: &Path,
    format: Format,
) -> Result<bool> {
    let config = match config {
        Some(path) => GameConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => GameConfig::hiring(seed.unwrap_or(1), rows),
    };
    let seed = seed.unwrap_or(config.seed);
    let policies = parse_policies(policies, config.players.len())?;
    let sim = simulate::<f64>(config, &policies, max_rounds, seed)?;
    let report = &sim.report;
    let formats: &[ReportFormat] = match format {
        Format::Text => &[ReportFormat::TextTable],
        Format::Structured => &[ReportFormat::Structured],
        Format::Both => &[ReportFormat::TextTable, ReportFormat::Structured],
    };
    for f in formats {
        emit_report(report, *f, output)?;
    }
    if report.consensus {
        sim.game.export()?.write_to(&output.join("export"))?;
    }
    print!("{}", report.render_text());
    Ok(report.consensus)
}

fn export(log: Option<&Path>, data_dir: Option<&Path>, game: Option<&str>, output: &Path) -> Result<()> {
    let bundle = match (log, data_dir, game) {
        (Some(path), _, _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            replay::<f64>(&text)?.export()?
        }
        (None, Some(dir), Some(id)) => GameService::open(dir)?.export(id)?,
        _ => bail!("pass --log, or --data-dir with --game"),
    };
    for path in bundle.write_to(output)? {
        println!("{}", path.display());
    }
    Ok(())
}

async fn serve(host: &str, port: u16, data_dir: &Path) -> Result<()> {
    let service = GameService::open(data_dir)?;
    let listener = tokio::net::TcpListener::bind((host, port))
        .await
        .with_context(|| format!("binding {host}:{port}"))?;
    tokio::select! {
        r = debias_service::serve(listener, service) => r?,
        _ = tokio::signal::ctrl_c() => log::info!("shutting down"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Discover { csv, label, alpha, output } => discover(&csv, &label, alpha, output.as_deref()).map(|_| true),
        Command::Sim {
            config,
            rows,
            policies,
            seed,
            max_rounds,
            output,
            format,
        } => sim(config.as_deref(), rows, &policies, seed, max_rounds, &output, format),
        Command::Serve { port, host, data_dir } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(&host, port, &data_dir)).map(|_| true)
        }
        Command::Export {
            log,
            data_dir,
            game,
            output,
        } => export(log.as_deref(), data_dir.as_deref(), game.as_deref(), &output).map(|_| true),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        // a simulation that ended without consensus
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
