use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use giots::harness::{self, Component, ServeOptions};
use giots::kspa::{self, AgentConfig};
use giots::rdf::parse_ntriples;
use giots::smg::{self, GatewayConfig};
use giots::validate::{Kind, Validator};

#[derive(Parser)]
#[command(name = "giots", version, about = "Semantic IoT interoperability services")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one service until interrupted.
    Serve {
        /// cse, broker, knowledge or validator
        component: Component,
        #[arg(long)]
        port: Option<u16>,
        /// Knowledge server the broker uses for subtype expansion.
        #[arg(long)]
        knowledge_url: Option<String>,
        /// N-Triples ontology (knowledge server, or validator reference).
        #[arg(long)]
        ontology: Option<PathBuf>,
        /// JSON array of rules already deployed (validator).
        #[arg(long)]
        rules: Option<PathBuf>,
        /// N-Triples witness graph for rule checks (validator).
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Run a scenario file end to end and print its report.
    Scenario { file: PathBuf },
    /// Validate a file offline: ontology, annotation, rule or sparql.
    Validate {
        kind: Kind,
        file: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Run the mediation gateway.
    Smg {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a processing agent.
    Agent {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match runtime.block_on(run(cli.command)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

async fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Serve {
            component,
            port,
            knowledge_url,
            ontology,
            rules,
            witness,
        } => {
            let opts = ServeOptions {
                knowledge_url,
                ontology,
                rules,
                witness,
            };
            let handle = harness::serve(component, port.unwrap_or(component.default_port()), &opts).await?;
            println!("{} listening on {}", component.name(), handle.url());
            tokio::signal::ctrl_c().await?;
            handle.shutdown().await;
            Ok(0)
        }
        Command::Scenario { file } => {
            let report = harness::run_scenario(&file).await;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.exit_code as u8)
        }
        Command::Validate {
            kind,
            file,
            reference,
            rules,
            witness,
        } => validate(kind, file, reference, rules, witness),
        Command::Smg { config } => {
            let cfg = GatewayConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let handle = smg::start(cfg).await?;
            println!("smg listening on {}", handle.url());
            tokio::signal::ctrl_c().await?;
            handle.shutdown().await;
            Ok(0)
        }
        Command::Agent { config } => {
            let cfg = AgentConfig::load(&config)?;
            let handle = kspa::start(cfg).await?;
            println!("agent listening on {}", handle.url());
            tokio::signal::ctrl_c().await?;
            handle.shutdown().await;
            Ok(0)
        }
    }
}

fn validate(
    kind: Kind,
    file: PathBuf,
    reference: Option<PathBuf>,
    rules: Option<PathBuf>,
    witness: Option<PathBuf>,
) -> anyhow::Result<u8> {
    let payload = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
    let mut v = Validator::default();
    if let Some(p) = reference {
        v.reference = harness::read_ontology(&p)?;
    }
    if let Some(p) = rules {
        v.rules = harness::read_rules(&p)?;
    }
    if let Some(p) = witness {
        let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        v.witness = Some(parse_ntriples(&text)?);
    }
    let report = v.submit(kind, &payload);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.passed { 0 } else { 1 })
}
