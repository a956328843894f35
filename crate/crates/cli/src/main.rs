use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use induct_core::evaluation::{build_report, evaluate_all, render_tables, EvalRecord, Prediction};
use induct_core::generators::{gen_holdout, parse_bands, BandConfig, Generator, HoldoutSpec};
use induct_core::harness::{extract_formula, render_prompt, request_for, run_external_solver, Baseline, RetryPolicy};
use induct_core::instance::{ProblemInstance, Task};
use induct_core::sat::Budget;
use tracing::info;

/// Generate, solve and score first-order concept-synthesis instances.
#[derive(Debug, Parser)]
#[command(name = "induct", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Args)]
struct BandSource {
    /// TOML file of `[[band]]` tables overriding the built-in bands.
    #[arg(long)]
    bands: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Generate a batch of instances into a directory.
    Generate {
        #[arg(long)]
        task: Task,
        #[arg(long)]
        band: String,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        source: BandSource,
    },
    /// Attach held-out worlds to every instance in a directory.
    Holdout {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        source: BandSource,
    },
    /// Write the solver prompt of every instance.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve every instance with an external adapter or the baseline.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        /// Shell command of an adapter speaking one JSON document per line.
        #[arg(long, conflicts_with = "baseline", required_unless_present = "baseline")]
        adapter: Option<String>,
        /// Use the built-in enumeration baseline.
        #[arg(long)]
        baseline: bool,
        /// Model label recorded with each prediction.
        #[arg(long)]
        model: Option<String>,
        #[arg(long, default_value_t = 4)]
        parallelism: usize,
        #[arg(long, default_value_t = 5)]
        retries: u32,
        #[arg(long, default_value_t = 600)]
        timeout_secs: u64,
        /// Predictions file (JSON lines).
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against instances.
    Evaluate {
        #[arg(long)]
        instances: PathBuf,
        /// Predictions files (JSON lines); repeat for several models.
        #[arg(long, required = true)]
        predictions: Vec<PathBuf>,
        /// Evaluation records (JSON lines).
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize evaluation records.
    Report {
        #[arg(long)]
        eval: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Bootstrap seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Data,
}

fn bands(source: &BandSource) -> Result<Vec<BandConfig>> {
    match &source.bands {
        None => Ok(BandConfig::builtin_bands()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_bands(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn find_band(source: &BandSource, task: Task, name: &str) -> Result<BandConfig> {
    let all = bands(source)?;
    match all.iter().find(|b| b.task == task && b.name == name) {
        Some(b) => Ok(b.clone()),
        None => {
            let known: Vec<&str> = all.iter().filter(|b| b.task == task).map(|b| b.name.as_str()).collect();
            Cli::command()
                .error(
                    ErrorKind::InvalidValue,
                    format!("unknown band `{name}` for task {task} (known: {})", known.join(", ")),
                )
                .exit()
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn read_instances(dir: &Path) -> Result<Vec<ProblemInstance>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json") && p.file_name().is_some_and(|n| n != "manifest.json"));
    paths.sort();
    if paths.is_empty() {
        bail!("no instance files in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ProblemInstance::from_json(&text).with_context(|| format!("loading {}", p.display()))
        })
        .collect()
}

fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn write_lines<T: serde::Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item)?);
        text.push('\n');
    }
    write(path, &text)
}

fn instance_path(dir: &Path, inst: &ProblemInstance) -> PathBuf {
    dir.join(format!("{}.json", inst.instance_id))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Generate { task, band, count, seed, out, source } => {
            let band = find_band(&source, task, &band)?;
            let generator = Generator::default();
            let (instances, manifest) = generator.generate_batch(&band, count, seed)?;
            for inst in &instances {
                write(&instance_path(&out, inst), &inst.to_json())?;
            }
            write(&out.join("manifest.json"), &pretty(&manifest))?;
            info!(count = instances.len(), replacements = manifest.replacements.len(), "generated");
        }
        Cmd::Holdout { input, out, seed, source } => {
            let all = bands(&source)?;
            let spec = HoldoutSpec::default();
            for mut inst in read_instances(&input)? {
                let band = all
                    .iter()
                    .find(|b| b.task == inst.task && b.name == inst.band)
                    .with_context(|| format!("{}: band {} not configured", inst.instance_id, inst.band))?;
                let hseed = induct_core::rng::derive_str(seed ^ inst.seed, &inst.instance_id);
                inst.holdout = gen_holdout(&inst, band, &spec, hseed)?;
                write(&instance_path(&out, &inst), &inst.to_json())?;
            }
        }
        Cmd::Render { input, out } => {
            for inst in read_instances(&input)? {
                write(&out.join(format!("{}.prompt.txt", inst.instance_id)), &render_prompt(&inst))?;
            }
        }
        Cmd::Solve { input, adapter, baseline, model, parallelism, retries, timeout_secs, out } => {
            let instances = read_instances(&input)?;
            let predictions: Vec<Prediction> = if baseline {
                let solver = Baseline::from_generator(&Generator::default());
                let label = model.unwrap_or_else(|| induct_core::harness::BASELINE_MODEL.to_string());
                instances
                    .iter()
                    .map(|i| {
                        let mut p = solver.solve(i, Budget::default());
                        p.model = label.clone();
                        p
                    })
                    .collect()
            } else {
                let command = adapter.expect("clap enforces one solver");
                let label = model.unwrap_or_else(|| "external".to_string());
                let policy = RetryPolicy {
                    retries,
                    timeout: Duration::from_secs(timeout_secs),
                    parallelism,
                    ..RetryPolicy::default()
                };
                let requests: Vec<_> = instances.iter().map(request_for).collect();
                run_external_solver(&requests, &command, &policy)?
                    .iter()
                    .map(|r| extract_formula(&r.instance_id, &label, &r.raw_text))
                    .collect()
            };
            write_lines(&out, &predictions)?;
        }
        Cmd::Evaluate { instances, predictions, out } => {
            let instances = read_instances(&instances)?;
            let mut preds: Vec<Prediction> = Vec::new();
            for p in &predictions {
                preds.extend(read_lines::<Prediction>(p)?);
            }
            if let Some(bad) = preds.iter().find(|p| !p.is_consistent()) {
                bail!("prediction for {} has status {:?} but formula presence disagrees", bad.instance_id, bad.status);
            }
            let records = evaluate_all(&instances, &preds, Budget::default());
            write_lines(&out, &records)?;
        }
        Cmd::Report { eval, format, seed, out } => {
            let records: Vec<EvalRecord> = read_lines(&eval)?;
            let report = build_report(&records, seed);
            let text = match format {
                Format::Table => render_tables(&report),
                Format::Data => pretty(&report),
            };
            match out {
                Some(p) => write(&p, &text)?,
                None => std::io::stdout().write_all(text.as_bytes())?,
            }
        }
    }
    Ok(())
}

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
