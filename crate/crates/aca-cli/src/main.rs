//! Command-line front end: offline design, closed-loop simulation with CSV
//! trace output, and allocator comparison.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use aca_core::config::ConfigDocument;
use aca_core::sim::{self, AllocatorKind};

#[derive(Parser)]
#[command(name = "aca", about = "Adaptive control allocation toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Clone, Copy, ValueEnum)]
enum AllocatorArg {
    Adaptive,
    Pseudo,
}

#[derive(Subcommand)]
enum Commands {
    /// Run the offline design pipeline and write the report.
    Design {
        /// Built-in preset: admire, admire-l1, admire-l2, admire-l3.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// TOML configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one closed-loop scenario and write the trace CSV and metrics.
    Simulate {
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the allocator kind from the configuration.
        #[arg(long, value_enum)]
        allocator: Option<AllocatorArg>,
        /// Trace CSV destination.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Metrics destination; stdout when omitted.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Run the adaptive and pseudo-inverse allocators on the same scenario
    /// and write the paired metrics.
    Compare {
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_document(
    preset: &Option<String>,
    config: &Option<PathBuf>,
) -> anyhow::Result<ConfigDocument> {
    match (preset, config) {
        (Some(name), None) => Ok(ConfigDocument::preset(name)?),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok(ConfigDocument::from_toml_str(&text)?)
        }
        (None, None) => Err(anyhow!("pass either --preset or --config")),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    }
}

fn config_stamp(doc: &ConfigDocument) -> (String, String) {
    let resolved = doc.to_toml_string();
    let mut hasher = Sha256::new();
    hasher.update(resolved.as_bytes());
    let hex: String = hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    (resolved, hex)
}

fn write_or_print(path: &Option<PathBuf>, content: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, content).with_context(|| format!("writing {}", p.display()))?
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn run() -> anyhow::Result<u8> {
    let cli = Cli::parse();
    match cli.command {
        Commands::Design { preset, config, out } => {
            let doc = load_document(&preset, &config)?;
            let (resolved, hash) = config_stamp(&doc);
            match doc.run_design() {
                Ok(report) => {
                    let mut text = format!("# config_sha256 = {hash}\n");
                    text.push_str(&report.to_text());
                    text.push_str("\n# resolved configuration\n");
                    for line in resolved.lines() {
                        text.push_str("# ");
                        text.push_str(line);
                        text.push('\n');
                    }
                    write_or_print(&out, &text)?;
                    if report.feasible {
                        Ok(0)
                    } else {
                        eprintln!("design infeasible: disturbance budget or rate inequality");
                        Ok(1)
                    }
                }
                Err(e) => {
                    eprintln!("design failed: {e}");
                    Ok(1)
                }
            }
        }
        Commands::Simulate {
            preset,
            config,
            allocator,
            trace,
            metrics,
        } => {
            let mut doc = load_document(&preset, &config)?;
            if let Some(kind) = allocator {
                doc.allocator.kind = match kind {
                    AllocatorArg::Adaptive => "adaptive".into(),
                    AllocatorArg::Pseudo => "pseudo_inverse".into(),
                };
            }
            let (resolved, hash) = config_stamp(&doc);
            let report = doc.run_design()?;
            let scenario = doc.scenario(&report)?;
            let (trace_data, m) = sim::run_scenario(&scenario)?;

            let mut comments = vec![format!("config_sha256 = {hash}")];
            comments.extend(resolved.lines().map(|l| format!("config: {l}")));
            let trace_path = trace.or_else(|| doc.output.trace.clone().map(PathBuf::from));
            if let Some(p) = &trace_path {
                std::fs::write(p, trace_data.to_csv(&comments))
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            let metrics_path = metrics.or_else(|| doc.output.metrics.clone().map(PathBuf::from));
            let mut text = format!("# config_sha256 = {hash}\n");
            text.push_str(&m.to_text());
            write_or_print(&metrics_path, &text)?;
            Ok(if m.diverged { 2 } else { 0 })
        }
        Commands::Compare { preset, config, out } => {
            let doc = load_document(&preset, &config)?;
            let (resolved, hash) = config_stamp(&doc);
            let report = doc.run_design()?;
            let mut first = doc.clone();
            first.allocator.kind = "adaptive".into();
            let mut second = doc.clone();
            second.allocator.kind = "pseudo_inverse".into();
            let a = first.scenario(&report)?;
            let mut b = second.scenario(&report)?;
            b.allocator = AllocatorKind::PseudoInverse;
            let cmp = sim::compare(&a, &b)?;
            let mut text = format!("# config_sha256 = {hash}\n");
            text.push_str(&cmp.to_text());
            text.push_str("# resolved configuration\n");
            for line in resolved.lines() {
                text.push_str("# ");
                text.push_str(line);
                text.push('\n');
            }
            write_or_print(&out, &text)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
