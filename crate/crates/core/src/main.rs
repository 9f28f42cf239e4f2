use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use releak::experiment::{
    run_anonymity_drop_study, run_anonymize, run_attack, run_breach_study, run_dp_suite,
    run_entropy_study, run_multi_release_study, ExperimentConfig, StudyOutput,
};

/// Re-identification risk experiments for overlapping anonymized releases.
#[derive(Parser)]
#[command(name = "releak", version, about, max_term_width = 100)]
struct Cli {
    /// TOML config file; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override the config's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config's output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads; 0 uses all cores. Results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Intersection-attack breach rates across scenarios and k.
    Breach,
    /// Anonymity lost to release intersection, with and without
    /// entropy/closeness constraints.
    Drop,
    /// Attack strength as a function of the sensitive attribute's entropy.
    Entropy,
    /// Attack strength as the number of overlapping releases grows.
    Multi,
    /// Indistinguishability checks and posterior-divergence bounds for the
    /// built-in mechanisms.
    Dp,
    /// Anonymize one table; writes release.json and anonymized.csv.
    Anonymize,
    /// Attack previously written releases; writes attack_report.json and
    /// attack_summary.csv.
    Attack,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> releak::Result<ExitCode> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .map_err(|e| releak::Error::Config(format!("worker pool: {e}")))?;

    let study = match cli.command {
        Command::Breach => run_breach_study(&cfg)?,
        Command::Drop => run_anonymity_drop_study(&cfg)?,
        Command::Entropy => run_entropy_study(&cfg)?,
        Command::Multi => run_multi_release_study(&cfg)?,
        Command::Dp => run_dp_suite(&cfg)?,
        Command::Anonymize => {
            let (json, csv) = run_anonymize(&cfg)?;
            println!("wrote {} and {}", json.display(), csv.display());
            return Ok(ExitCode::SUCCESS);
        }
        Command::Attack => {
            let (json, csv, report) = run_attack(&cfg)?;
            let agg = &report.aggregates;
            println!(
                "population {} located {} vulnerable {}",
                agg.population, agg.located, agg.vulnerable
            );
            println!("wrote {} and {}", json.display(), csv.display());
            return Ok(ExitCode::SUCCESS);
        }
    };
    finish(study, &cfg)
}

fn finish(study: StudyOutput, cfg: &ExperimentConfig) -> releak::Result<ExitCode> {
    let csv = study.write(&cfg.out, cfg)?;
    let errors = study.error_cells();
    println!(
        "{}: {} cells, {} rows, {} failed cells -> {}",
        study.study,
        study.cells,
        study.rows.len(),
        errors,
        csv.display()
    );
    // Partial failure is visible in the report and the exit code; only
    // setup problems abort the run.
    Ok(if errors > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}
