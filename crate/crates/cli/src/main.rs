use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use counterquill_core::corpus::Corpus;
use counterquill_core::engine::EVENT_LOG_FILE;
use counterquill_core::events::read_log;
use counterquill_core::state::StudyState;
use counterquill_core::stats::{render_table, Family, TableFormat, TableOptions};
use counterquill_core::study::{analyze, assign_condition_order, assign_corpus, export_dataset, import_dataset};
use counterquill_server::{ProviderMode, ServerConfig};

#[derive(Parser)]
#[command(name = "counterquill", version, about = "Counterspeech writing study service and analysis tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
        /// Use the deterministic mock provider regardless of config.
        #[arg(long)]
        mock: bool,
    },
    #[command(subcommand)]
    Study(StudyCommand),
    #[command(subcommand)]
    Stats(StatsCommand),
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Write the per-session dataset CSV from an event log.
    Export {
        #[arg(long)]
        data_dir: PathBuf,
        /// Defaults to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Show the condition order and corpus items for one participant.
    Assign {
        #[arg(long)]
        participant_index: u32,
        #[arg(long)]
        seed: u64,
        /// JSON-lines corpus; defaults to the bundled one.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum StatsCommand {
    /// t-test tables from an exported dataset.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Paired,
    Welch,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Serve { config, mock } => serve(&config, mock),
        Command::Study(StudyCommand::Export { data_dir, output }) => {
            let csv = export(&data_dir)?;
            match output {
                Some(path) => std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display())),
                None => Ok(out.write_all(csv.as_bytes())?),
            }
        }
        Command::Study(StudyCommand::Assign {
            participant_index,
            seed,
            corpus,
        }) => {
            let corpus = match corpus {
                Some(p) => Corpus::load(&p)?,
                None => Corpus::bundled(),
            };
            let order = assign_condition_order(participant_index);
            let items = assign_corpus(participant_index, &corpus, seed)?;
            let doc = serde_json::json!({
                "participant_index": participant_index,
                "seed": seed,
                "first": order.first,
                "second": order.second,
                "instances": items,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
            Ok(())
        }
        Command::Stats(StatsCommand::Report { input, family, format }) => {
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let family = match family {
                FamilyArg::Paired => Family::Paired,
                FamilyArg::Welch => Family::Welch,
            };
            let format = match format {
                FormatArg::Text => TableFormat::Text,
                FormatArg::Csv => TableFormat::Csv,
            };
            out.write_all(report(&text, family, format)?.as_bytes())?;
            Ok(())
        }
    }
}

fn serve(config: &Path, mock: bool) -> Result<()> {
    let mut cfg = ServerConfig::load(config)?;
    if mock {
        cfg.provider.mode = ProviderMode::Mock;
    }
    // the live client owns a blocking runtime, so it must be built and
    // dropped outside the async one
    let startup = counterquill_server::start(&cfg, |v| std::env::var(v).ok())?;
    let engine = Arc::new(startup.engine);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let result = runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&cfg.bind)
            .await
            .with_context(|| format!("binding {}", cfg.bind))?;
        counterquill_server::serve(listener, engine.clone(), startup.token, counterquill_server::shutdown_signal())
            .await
            .context("serving")
    });
    drop(runtime);
    drop(engine);
    result
}

fn export(data_dir: &Path) -> Result<String> {
    let path = data_dir.join(EVENT_LOG_FILE);
    if !path.exists() {
        bail!("no event log at {}", path.display());
    }
    let records = read_log(&path)?;
    let state = StudyState::replay(&records)?;
    Ok(export_dataset(&state))
}

fn report(csv_text: &str, family: Family, format: TableFormat) -> Result<String> {
    let rows = import_dataset(csv_text)?;
    let mut out = String::new();
    for (i, section) in analyze(&rows, family).iter().enumerate() {
        let opts = TableOptions {
            label_a: section.label_a.clone(),
            label_b: section.label_b.clone(),
            format,
        };
        let table = render_table(&section.reports, &opts);
        match format {
            TableFormat::Text => {
                if i > 0 {
                    out.push('\n');
                }
                out.push_str(&format!("{}\n{table}", section.title));
            }
            TableFormat::Csv => {
                // one header for all sections, with the section as the first column
                for (j, line) in table.lines().enumerate() {
                    match (i, j) {
                        (0, 0) => out.push_str(&format!("section,{line}\n")),
                        (_, 0) => {}
                        _ => out.push_str(&format!("\"{}\",{line}\n", section.title)),
                    }
                }
            }
        }
    }
    Ok(out)
}
