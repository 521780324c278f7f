use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use kwb_core::analysis::{classify_regime, compute_constants, predicted_scaled_moments, validate_assumptions};
use kwb_core::config::{ConfigDocument, Overrides};
use kwb_core::harness::{emit, read_summary, run_monte_carlo};
use serde_json::{json, Value};

/// Stochastic maximizer and maximum-value estimation with Monte Carlo checks
/// of the limit laws.
#[derive(Parser, Debug)]
#[command(name = "kwb", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a configuration's assumptions and print the report as JSON.
    Validate { config: PathBuf },
    /// Print the limit constants and predicted limit law as JSON.
    Predict { config: PathBuf },
    /// Run a Monte Carlo experiment and write CSV and JSON outputs.
    Run {
        config: PathBuf,
        /// Number of replications (defaults to experiment.replications).
        #[arg(long)]
        reps: Option<usize>,
        /// Iterations per replication (defaults to algorithm.horizon).
        #[arg(long)]
        horizon: Option<u64>,
        /// Master seed (defaults to experiment.seed).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses every available core.
        #[arg(long)]
        workers: Option<usize>,
        /// Run even when a required assumption check fails.
        #[arg(long)]
        override_validation: bool,
    },
    /// Summarize the verdicts of a finished run directory.
    Report { dir: PathBuf },
}

fn load(path: &Path) -> Result<ConfigDocument> {
    ConfigDocument::from_path(path).with_context(|| format!("loading {}", path.display()))
}

fn print_json(value: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn status(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn validate(path: &Path) -> Result<ExitCode> {
    let doc = load(path)?;
    let config = doc.run_config(None)?;
    let report = validate_assumptions(&config, &doc.model()?, &doc.noise()?);
    print_json(&serde_json::to_value(&report)?)?;
    for check in report.blocking() {
        eprintln!("FAIL {}: {}", check.id, check.detail);
        if let Some(hint) = &check.hint {
            eprintln!("     hint: {hint}");
        }
    }
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(status(report.passed))
}

fn predict(path: &Path) -> Result<ExitCode> {
    let doc = load(path)?;
    let config = doc.run_config(None)?;
    let (model, noise) = (doc.model()?, doc.noise()?);
    let report = validate_assumptions(&config, &model, &noise);
    if !report.passed {
        eprintln!("warning: assumption checks failed; the prediction may not apply");
    }
    let constants = compute_constants(&config, &model, &noise)?;
    let prediction = classify_regime(&config, &constants)?;
    let (mean, cov) = predicted_scaled_moments(&prediction);
    print_json(&json!({
        "validation_passed": report.passed,
        "constants": constants,
        "prediction": prediction,
        "predicted_mean": mean.iter().collect::<Vec<_>>(),
        "predicted_covariance": cov.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn run(path: &Path, overrides: Overrides, out: &Path) -> Result<ExitCode> {
    let doc = load(path)?;
    let spec = doc.experiment_spec(&overrides)?;
    let validation = validate_assumptions(&spec.run_config, &spec.model, &spec.noise);
    if !validation.passed {
        for check in validation.blocking() {
            eprintln!("FAIL {}: {}", check.id, check.detail);
        }
        if !spec.override_validation {
            anyhow::bail!("assumption checks failed; pass --override-validation to run anyway");
        }
    }
    let report = run_monte_carlo(&spec)?;
    let files = emit(&report, out).with_context(|| format!("writing outputs to {}", out.display()))?;
    print_summary(&read_summary(out)?)?;
    println!("wrote {}, {}, {}", files.replications.display(), files.snapshots.display(), files.summary.display());
    Ok(status(report.all_passed()))
}

fn fmt_num(v: &Value) -> String {
    v.as_f64().map_or_else(|| "nan".to_string(), |x| format!("{x:.6}"))
}

/// Prints the verdict table of a summary document; true iff every verdict
/// passed.
fn print_summary(summary: &Value) -> Result<bool> {
    let prediction = &summary["prediction"];
    println!(
        "{} part {} ({} replications, divergence fraction {})",
        prediction["theorem"].as_str().unwrap_or("?"),
        prediction["part"],
        summary["empirical"]["count"],
        fmt_num(&summary["divergence_fraction"])
    );
    let verdicts = summary["verdicts"].as_array().context("summary has no verdict list")?;
    let mut all = true;
    for v in verdicts {
        let passed = v["passed"].as_bool().unwrap_or(false);
        all &= passed;
        println!(
            "{:4} {:16} {:12} observed {:>12} predicted {:>12} allowed {}",
            if passed { "PASS" } else { "FAIL" },
            v["kind"].as_str().unwrap_or("?"),
            v["component"].as_str().unwrap_or("?"),
            fmt_num(&v["observed"]),
            fmt_num(&v["predicted"]),
            fmt_num(&v["allowed"])
        );
    }
    for s in summary["slopes"].as_array().into_iter().flatten() {
        let estimate = &s["estimate"];
        println!(
            "slope {:9} expected {:>9} estimated {:>9} ± {}",
            s["target"].as_str().unwrap_or("?"),
            fmt_num(&s["expected_exponent"]),
            fmt_num(&estimate["exponent"]),
            fmt_num(&estimate["std_error"])
        );
    }
    Ok(all && !verdicts.is_empty())
}

fn report(dir: &Path) -> Result<ExitCode> {
    let summary = read_summary(dir)?;
    Ok(status(print_summary(&summary)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Predict { config } => predict(&config),
        Command::Run {
            config,
            reps,
            horizon,
            seed,
            out,
            workers,
            override_validation,
        } => run(
            &config,
            Overrides {
                replications: reps,
                horizon,
                seed,
                workers,
                override_validation,
            },
            &out,
        ),
        Command::Report { dir } => report(&dir),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
