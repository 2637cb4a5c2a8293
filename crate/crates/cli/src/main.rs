//! Command-line front end for the amlgen transaction generator.
//!
//! Subcommands map one-to-one onto the library: `generate` builds a
//! dataset, `split`/`filter-bank` reshape an existing CSV, `analyze`
//! reports statistics, and `validate` cross-checks a CSV against its
//! ground-truth sidecar.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use amlgen_core::analyze;
use amlgen_core::calibrate::{calibrate, CalibrationTargets};
use amlgen_core::config;
use amlgen_core::engine::{generate_with_threads, GeneratedWorld};
use amlgen_core::export::{self, ExportError};
use amlgen_core::presets;

/// Process exit codes per failure class.
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_INTEGRITY: u8 = 4;

#[derive(Parser)]
#[command(
    name = "amlgen",
    version,
    about = "Deterministic synthetic bank-transaction generator with labeled money laundering"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a dataset: transactions.csv, patterns.txt/.json, run manifest.
    Generate {
        /// World configuration JSON (see README for the schema).
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Named preset: hi-small, li-small, hi-medium, li-medium, hi-large, li-large.
        #[arg(long)]
        preset: Option<String>,
        /// Population multiplier applied after config/preset resolution.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Override the config's random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = library default). Output does not depend on this.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Calibrate the retail-purchase rate on pilot runs before the
        /// full generation (writes calibration-trace.json).
        #[arg(long)]
        calibrate: bool,
    },
    /// Cut a timestamp-ordered CSV into cumulative train/validation/test files.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Three comma-separated fractions summing to 1.
        #[arg(long, default_value = "0.6,0.2,0.2")]
        fractions: String,
    },
    /// Keep only rows where the given bank appears on either side.
    FilterBank {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        bank: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print dataset statistics (add --sidecar for laundering breakdowns).
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        sidecar: Option<PathBuf>,
        /// Emit a single JSON object instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Cross-check a CSV against its sidecar; exit 0 only if clean.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        sidecar: PathBuf,
    },
}

/// A failure annotated with its exit-code class.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(msg: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: msg.into() }
    }
    fn io(msg: impl Into<String>) -> Self {
        Self { code: EXIT_IO, message: msg.into() }
    }
    fn integrity(msg: impl Into<String>) -> Self {
        Self { code: EXIT_INTEGRITY, message: msg.into() }
    }
}

impl From<amlgen_core::ConfigError> for Failure {
    fn from(e: amlgen_core::ConfigError) -> Self {
        Failure::config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::io(e.to_string())
    }
}

impl From<ExportError> for Failure {
    fn from(e: ExportError) -> Self {
        match e {
            ExportError::Io(io) => Failure::io(io.to_string()),
            ExportError::BadFractions => Failure::config(e.to_string()),
            ExportError::Malformed { .. }
            | ExportError::Unordered { .. }
            | ExportError::TooFewRows(_)
            | ExportError::Json(_) => Failure::integrity(e.to_string()),
        }
    }
}

impl From<analyze::AnalyzeError> for Failure {
    fn from(e: analyze::AnalyzeError) -> Self {
        match e {
            analyze::AnalyzeError::Export(inner) => inner.into(),
            analyze::AnalyzeError::Io(io) => Failure::io(io.to_string()),
            analyze::AnalyzeError::Integrity(_) | analyze::AnalyzeError::ZeroSpan => {
                Failure::integrity(e.to_string())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Generate { config, preset, scale, seed, threads, out, calibrate } => {
            cmd_generate(config, preset, scale, seed, threads, &out, calibrate)
        }
        Cmd::Split { input, out, fractions } => cmd_split(&input, &out, &fractions),
        Cmd::FilterBank { input, bank, out } => {
            let kept = export::filter_bank(&input, &out, bank)?;
            println!("kept {kept} rows involving bank {bank} -> {}", out.display());
            Ok(())
        }
        Cmd::Analyze { input, sidecar, json } => cmd_analyze(&input, sidecar.as_deref(), json),
        Cmd::Validate { input, sidecar } => cmd_validate(&input, &sidecar),
    }
}

fn resolve_config(
    config: Option<&Path>,
    preset: Option<&str>,
    scale: f64,
    seed: Option<u64>,
) -> Result<amlgen_core::WorldConfig, Failure> {
    let mut cfg = match (config, preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
            config::from_json(&text)?
        }
        (None, Some(name)) => presets::preset(name)
            .ok_or_else(|| Failure::config(format!("unknown preset {name:?}")))?,
        (None, None) => {
            return Err(Failure::config("provide --config <file> or --preset <name>"))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects --config with --preset"),
    };
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Failure::config(format!("--scale must be positive, got {scale}")));
    }
    if scale != 1.0 {
        cfg = presets::scale_population(&cfg, scale);
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    config::validate(&cfg)?;
    Ok(cfg)
}

fn cmd_generate(
    config_path: Option<PathBuf>,
    preset: Option<String>,
    scale: f64,
    seed: Option<u64>,
    threads: usize,
    out: &Path,
    run_calibration: bool,
) -> Result<(), Failure> {
    let mut cfg = resolve_config(config_path.as_deref(), preset.as_deref(), scale, seed)?;
    std::fs::create_dir_all(out)?;

    let mut calibration_json = serde_json::Value::Null;
    if run_calibration {
        // Rate only: laundering volume is planned analytically against
        // the full horizon and pilots would measure it with bias.
        let targets = CalibrationTargets::tx_only(&cfg);
        let (adjusted, outcome) = calibrate(&cfg, targets, 10, 0.10)?;
        if !outcome.converged {
            eprintln!(
                "warning: calibration did not converge in {} iterations; using best effort",
                outcome.iterations
            );
        }
        calibration_json = serde_json::to_value(&outcome).expect("serializable outcome");
        std::fs::write(
            out.join("calibration-trace.json"),
            serde_json::to_string_pretty(&outcome).expect("serializable outcome"),
        )?;
        cfg = adjusted;
    }

    let world = generate_with_threads(&cfg, threads)?;
    let (rows, instances) = export::write_dataset(&world, out)?;
    write_manifest(&world, out, preset.as_deref(), scale, threads, calibration_json)?;

    println!(
        "wrote {rows} transactions ({} laundering, {instances} pattern instances) to {}",
        world.stats.laundering_rows,
        out.display()
    );
    Ok(())
}

/// Everything needed to reproduce and sanity-check the run: the full
/// resolved config (seed included), a hash of it, and headline counts.
fn write_manifest(
    world: &GeneratedWorld,
    out: &Path,
    preset: Option<&str>,
    scale: f64,
    threads: usize,
    calibration: serde_json::Value,
) -> Result<(), Failure> {
    let config_json = config::to_json(&world.config);
    let digest = Sha256::digest(config_json.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    let manifest = serde_json::json!({
        "seed": world.config.seed,
        "preset": preset,
        "scale": scale,
        "threads": threads,
        "config_sha256": hex,
        "config": serde_json::from_str::<serde_json::Value>(&config_json).expect("valid json"),
        "rows": world.stats.rows_total,
        "laundering_rows": world.stats.laundering_rows,
        "pattern_rows": world.stats.pattern_rows,
        "pattern_instances": world.instances.len(),
        "accounts": world.population.accounts.len(),
        "calibration": calibration,
    });
    std::fs::write(
        out.join("run-manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("valid json"),
    )?;
    Ok(())
}

fn cmd_split(input: &Path, out: &Path, fractions: &str) -> Result<(), Failure> {
    let parts: Vec<f64> = fractions
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::config(format!("bad --fractions {fractions:?}: {e}")))?;
    let [f1, f2, f3] = parts[..] else {
        return Err(Failure::config(format!(
            "--fractions needs exactly 3 comma-separated values, got {}",
            parts.len()
        )));
    };
    let bounds = export::temporal_split(input, out, (f1, f2, f3))?;
    println!(
        "train rows [{}, {}), validation eval [{}, {}), test eval [{}, {}) -> {}",
        bounds.train_range.0,
        bounds.train_range.1,
        bounds.val_eval_range.0,
        bounds.val_eval_range.1,
        bounds.test_eval_range.0,
        bounds.test_eval_range.1,
        out.display()
    );
    Ok(())
}

fn cmd_analyze(input: &Path, sidecar: Option<&Path>, json: bool) -> Result<(), Failure> {
    let summary = analyze::summarize(input)?;
    let activity = analyze::activity_histograms(input)?;
    let mut rates = None;
    let mut patterns = None;
    if let Some(sc) = sidecar {
        rates = Some(analyze::rate_breakdown(input, sc)?);
        patterns = Some(analyze::pattern_report(sc)?);
    }

    if json {
        let doc = serde_json::json!({
            "summary": summary,
            "activity": activity,
            "rates": rates,
            "patterns": patterns,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("valid json"));
    } else {
        print!("{}", analyze::summary_text(&summary));
        if let Some(r) = &rates {
            print!("{}", analyze::rate_breakdown_text(r));
        }
        if let Some(p) = &patterns {
            print!("{}", analyze::pattern_report_text(p));
        }
        print!("{}", analyze::activity_text(&activity));
    }
    Ok(())
}

fn cmd_validate(input: &Path, sidecar: &Path) -> Result<(), Failure> {
    let report = analyze::validate_dataset(input, sidecar)?;
    if report.violations.is_empty() {
        println!(
            "ok: {} instances, {} member rows, 0 violations",
            report.instances, report.rows_checked
        );
        Ok(())
    } else {
        for v in &report.violations {
            eprintln!("violation: {v}");
        }
        Err(Failure::integrity(format!(
            "{} violations across {} instances",
            report.violations.len(),
            report.instances
        )))
    }
}
