use std::io::Read;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use lateral::answer::AttributedAnswer;
use lateral::config::{ApiKeys, PipelineConfig, ProviderMode};
use lateral::feedback::FeedbackStore;
use lateral::pipeline::{Outcome, Pipeline, ProbeResult, Providers};
use lateral::server::{AppState, serve};

#[derive(Parser)]
#[command(name = "lateral", version, about = "Probe a text with questions answered from web sources")]
struct Cli {
    /// Provider set to use; overrides the config file.
    #[arg(long, global = true, value_enum)]
    provider: Option<ProviderMode>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Mock fixture file (mock mode only).
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one probe and print the result.
    Probe {
        /// Input file, or `-` for stdin.
        #[arg(long)]
        input: String,
        /// Print the full result as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Feedback log file; overrides the config file.
        #[arg(long)]
        feedback: Option<PathBuf>,
    },
}

fn read_input(source: &str) -> Result<String> {
    if source == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text).context("reading stdin")?;
        Ok(text)
    } else {
        std::fs::read_to_string(source).with_context(|| format!("reading {source}"))
    }
}

fn print_answer(answer: &AttributedAnswer) {
    println!("   {}", answer.raw_text.trim());
    for source in &answer.sources {
        let note = if source.cited { "" } else { "  (not used in this answer)" };
        println!("   [{}] {} {}{note}", source.doc_number, source.title, source.url);
    }
    let flags = &answer.flags;
    if flags.overlength {
        println!("   ! answer is {} words long", answer.word_count);
    }
    if flags.unattributed_sentences > 0 {
        println!("   ! {} sentence(s) carry no citation", flags.unattributed_sentences);
    }
    if !flags.out_of_range_citations.is_empty() {
        println!("   ! citations to unknown documents: {:?}", flags.out_of_range_citations);
    }
}

fn print_result(result: &ProbeResult) {
    for item in &result.items {
        println!("{}. {}", item.question.index, item.question.text);
        match &item.outcome {
            Outcome::Answer(answer) => print_answer(answer),
            Outcome::Failure(f) => {
                println!("   (no answer: {} failed with {}: {})", f.stage.as_str(), f.code, f.message)
            }
        }
        println!();
    }
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();

    let cli = Cli::parse();
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(mode) = cli.provider {
        cfg.provider = mode;
    }
    if let Some(path) = cli.fixtures {
        cfg.fixtures = Some(path);
    }
    let providers = Providers::from_config(&cfg, &ApiKeys::from_env())?;

    match cli.command {
        Command::Probe { input, json } => {
            let text = read_input(&input)?;
            let pipeline = Pipeline::new(providers, cfg);
            let result = pipeline.probe(&text).await.map_err(|e| anyhow::anyhow!("{}: {e}", e.code()))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&result)?);
            } else {
                print_result(&result);
            }
        }
        Command::Serve { bind, feedback } => {
            let feedback_path = feedback.unwrap_or_else(|| cfg.feedback_path.clone());
            let state = AppState {
                provider_mode: cfg.provider,
                pipeline: Arc::new(Pipeline::new(providers, cfg)),
                feedback: Arc::new(FeedbackStore::new(feedback_path)),
            };
            serve(state, bind).await?;
        }
    }
    Ok(())
}
