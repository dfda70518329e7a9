//! Command-line front end: train, predict, evaluate, synth, diagnose.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal error.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use cellgrid::evaluation::{
    dimension_diagnostic, format_diagnostic, group_by_trip, read_predictions, read_truth,
};
use cellgrid::manifest::RunManifest;
use cellgrid::ports::load_ports;
use cellgrid::record::{read_records, RecordReader};
use cellgrid::{
    synth, AisRecord, Engine, EngineConfig, Error, EvalReport, ModelSnapshot, Prediction, Schema,
    SynthConfig,
};

#[derive(Parser)]
#[command(
    name = "cellgrid",
    version,
    about = "Cell-grid AIS destination and arrival-time prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train both models on a labeled AIS file and write a snapshot.
    Train {
        /// Labeled AIS CSV.
        train_csv: PathBuf,
        #[arg(long)]
        ports: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Snapshot to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict destination and arrival for every record of an AIS file.
    Predict {
        /// Unlabeled AIS CSV, in event-time order.
        eval_csv: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Overrides the snapshot's settings (grids stay as trained).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Predictions CSV to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against a truth file.
    Evaluate {
        predictions: PathBuf,
        truth: PathBuf,
        /// JSON report to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic dataset with known ground truth.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Single-dimension correlation table of a labeled AIS file.
    Diagnose {
        train_csv: PathBuf,
        /// When given, every label must name a known port.
        #[arg(long)]
        ports: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Table to write.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Config(_) | Error::InvalidGrid(_) => 1,
                Error::UndefinedBearing | Error::ZeroSpeed | Error::MissingPrediction => 3,
                _ => 2,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
        if cause.downcast_ref::<DataError>().is_some() {
            return 2;
        }
    }
    3
}

/// Input that parsed but cannot be used.
#[derive(Debug)]
struct DataError(String);

impl std::fmt::Display for DataError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

fn read_input(path: &Path, manifest: &mut RunManifest) -> Result<Vec<u8>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    manifest.add_input(path, &bytes);
    Ok(bytes)
}

fn engine_config(path: Option<&Path>, manifest: &mut RunManifest) -> Result<Option<EngineConfig>> {
    let Some(path) = path else { return Ok(None) };
    let text = String::from_utf8(read_input(path, manifest)?)
        .map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
    let cfg =
        EngineConfig::from_config_text(&text).with_context(|| format!("in {}", path.display()))?;
    Ok(Some(cfg))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn args() -> Vec<String> {
    std::env::args().collect()
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train {
            train_csv,
            ports,
            config,
            out,
        } => train(&train_csv, &ports, config.as_deref(), &out),
        Command::Predict {
            eval_csv,
            model,
            config,
            out,
        } => predict(&eval_csv, &model, config.as_deref(), &out),
        Command::Evaluate {
            predictions,
            truth,
            out,
        } => evaluate(&predictions, &truth, &out),
        Command::Synth { config, seed, out } => synthesize(config.as_deref(), seed, &out),
        Command::Diagnose {
            train_csv,
            ports,
            config,
            out,
        } => diagnose(&train_csv, ports.as_deref(), config.as_deref(), &out),
    }
}

fn train(train_csv: &Path, ports_csv: &Path, config: Option<&Path>, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new(args(), String::new());
    let cfg = engine_config(config, &mut manifest)?.unwrap_or_default();
    manifest.config = cfg.to_config_text();
    let ports = load_ports(&read_input(ports_csv, &mut manifest)?[..])
        .with_context(|| format!("in {}", ports_csv.display()))?;
    let records: Vec<AisRecord> =
        read_records(&read_input(train_csv, &mut manifest)?[..], Schema::Train)
            .with_context(|| format!("in {}", train_csv.display()))?;
    if records.is_empty() {
        bail!(DataError(format!(
            "{} holds no training records",
            train_csv.display()
        )));
    }

    let mut engine = Engine::new(cfg, ports)?;
    engine.train_all(&records)?;
    let stats = engine.stats().clone();
    let (dest_cells, eta_cells) = engine.allocated_cells();
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    engine.snapshot().write_to(BufWriter::new(file))?;

    println!("records     {}", records.len());
    println!("trained     {}", stats.trained);
    println!("skipped     {} (outside the bounding box)", stats.skipped);
    println!("rejected    {} (arrival before timestamp)", stats.rejected);
    println!(
        "cells       destination grid {dest_cells} of {}, arrival grid {eta_cells} of {}",
        engine.dest_model().grid.capacity(),
        engine.eta_model().grid.capacity()
    );
    manifest.report = json!({
        "records": records.len(),
        "trained": stats.trained,
        "skipped": stats.skipped,
        "rejected": stats.rejected,
        "dest_cells": dest_cells,
        "eta_cells": eta_cells,
    });
    manifest.write(&manifest_path(out))?;
    Ok(())
}

fn predict(eval_csv: &Path, model: &Path, config: Option<&Path>, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new(args(), String::new());
    let snapshot = ModelSnapshot::from_bytes(&read_input(model, &mut manifest)?)
        .with_context(|| format!("in {}", model.display()))?;
    let cfg = engine_config(config, &mut manifest)?;
    let mut engine = Engine::from_snapshot(snapshot, cfg)?;
    manifest.config = engine.config().to_config_text();

    let input = read_input(eval_csv, &mut manifest)?;
    let reader = RecordReader::<_, f64>::new(&input[..], Schema::Eval)
        .with_context(|| format!("in {}", eval_csv.display()))?;
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", Prediction::HEADER)?;
    for rec in reader {
        let rec = rec.with_context(|| format!("in {}", eval_csv.display()))?;
        writeln!(w, "{}", engine.predict(&rec)?.to_csv_line())?;
    }
    engine.finish()?;
    w.flush()?;

    let stats = engine.stats();
    println!("predictions {}", stats.predicted);
    if engine.config().semi_supervised {
        println!("committed   {} trips", engine.committed_trips().len());
        println!("discarded   {} trips", stats.discarded_trips);
    }
    manifest.report = json!({
        "predictions": stats.predicted,
        "committed_trips": engine.committed_trips(),
        "discarded_trips": stats.discarded_trips,
    });
    manifest.write(&manifest_path(out))?;
    Ok(())
}

fn evaluate(predictions: &Path, truth: &Path, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new(args(), String::new());
    let preds = read_predictions(&read_input(predictions, &mut manifest)?[..])
        .with_context(|| format!("in {}", predictions.display()))?;
    let rows = read_truth(&read_input(truth, &mut manifest)?[..])
        .with_context(|| format!("in {}", truth.display()))?;
    let (trips, skipped) = group_by_trip(&preds, &rows)?;
    let report = EvalReport::from_trips(&trips, skipped);
    fs::write(out, report.to_json_line() + "\n")
        .with_context(|| format!("writing {}", out.display()))?;
    println!("{report}");
    manifest.report = serde_json::to_value(&report)?;
    manifest.write(&manifest_path(out))?;
    Ok(())
}

fn synthesize(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new(args(), String::new());
    let mut cfg = match config {
        Some(path) => {
            let text = String::from_utf8(read_input(path, &mut manifest)?)
                .map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
            SynthConfig::from_config_text(&text)
                .with_context(|| format!("in {}", path.display()))?
        }
        None => SynthConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    manifest.config = format!("{cfg:?}");
    let ds = synth::gen_dataset(&cfg)?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let files = [
        ("train.csv", ds.train_csv()),
        ("eval.csv", ds.eval_csv()),
        ("truth.csv", ds.truth_csv()),
        ("ports.csv", ds.ports_csv()),
    ];
    for (name, text) in &files {
        let path = out.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    manifest.report = json!({
        "seed": cfg.seed,
        "ports": ds.ports.len(),
        "train_trips": ds.train.len(),
        "eval_trips": ds.eval.len(),
        "files": files.iter().map(|(n, _)| *n).collect::<Vec<_>>(),
    });
    manifest.write(&out.join("manifest.json"))?;
    Ok(())
}

fn diagnose(
    train_csv: &Path,
    ports_csv: Option<&Path>,
    config: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let mut manifest = RunManifest::new(args(), String::new());
    let cfg = engine_config(config, &mut manifest)?.unwrap_or_default();
    manifest.config = cfg.to_config_text();
    let records: Vec<AisRecord> =
        read_records(&read_input(train_csv, &mut manifest)?[..], Schema::Train)
            .with_context(|| format!("in {}", train_csv.display()))?;
    if records.is_empty() {
        bail!(DataError(format!(
            "{} holds no training records",
            train_csv.display()
        )));
    }
    if let Some(path) = ports_csv {
        let ports: cellgrid::PortRegistry = load_ports(&read_input(path, &mut manifest)?[..])
            .with_context(|| format!("in {}", path.display()))?;
        if let Some(r) = records.iter().find(|r| {
            ports
                .get(r.label_destination.as_deref().unwrap_or(""))
                .is_none()
        }) {
            return Err(Error::UnknownPort(r.label_destination.clone().unwrap_or_default()).into());
        }
    }
    let rows = dimension_diagnostic(&records, cfg.speed_bucket);
    let table = format_diagnostic(&rows);
    fs::write(out, &table).with_context(|| format!("writing {}", out.display()))?;
    print!("{table}");
    manifest.report = json!(rows
        .iter()
        .map(|(d, v)| (d.to_string(), *v))
        .collect::<std::collections::BTreeMap<_, _>>());
    manifest.write(&manifest_path(out))?;
    Ok(())
}
