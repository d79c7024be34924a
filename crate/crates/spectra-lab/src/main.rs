use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectra_core::fw::{RegularizerSpec, SpectralBall};
use spectra_core::synth::gen_weight_reg_dataset;
use spectra_lab::config::{parse_config, ExperimentKind, RunConfig};
use spectra_lab::experiments;
use spectra_lab::fstar::compute_f_star;
use spectra_lab::metrics::emit_metrics;

const EXIT_OK: u8 = 0;
const EXIT_ASSERTION_FAILURE: u8 = 2;
const EXIT_CONFIG_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "spectra-lab", about = "Spectral-clipping experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by the config and emit CSV metrics.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (falls back to SPECTRA_OUT, then the config's
        /// output_path, then ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (falls back to SPECTRA_JOBS, then all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Parse and validate a config without running anything.
    Validate { config: PathBuf },
    /// Compute the reference-optimum certificate for the config's problem
    /// and print it as JSON.
    Fstar {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn experiment_name(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::FwWeightReg => "fw_weight_reg",
        ExperimentKind::SpikeRobustness => "spike_robustness",
        ExperimentKind::LemmaMc => "lemma_mc",
        ExperimentKind::NoiseAnalysis => "noise_analysis",
        ExperimentKind::MomentumAudit => "momentum_audit",
    }
}

fn load_config(path: &PathBuf, seed: Option<u64>) -> Result<RunConfig> {
    let mut config = parse_config(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

fn env_usize(name: &str) -> Result<Option<usize>> {
    match std::env::var(name) {
        Ok(v) => Ok(Some(
            v.parse()
                .with_context(|| format!("{name} must be a positive integer, got '{v}'"))?,
        )),
        Err(_) => Ok(None),
    }
}

fn resolve_out_dir(cli: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    cli.or_else(|| std::env::var_os("SPECTRA_OUT").map(PathBuf::from))
        .or_else(|| config.output_path.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run_command(
    config_path: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
) -> Result<u8> {
    let config = match load_config(&config_path, seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return Ok(EXIT_CONFIG_ERROR);
        }
    };
    let jobs = match jobs {
        Some(j) => Some(j),
        None => env_usize("SPECTRA_JOBS")?,
    };
    if let Some(j) = jobs.filter(|&j| j > 0) {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }

    let output = match experiments::run(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return Ok(EXIT_CONFIG_ERROR);
        }
    };

    let out_dir = resolve_out_dir(out, &config);
    let csv_path = out_dir.join(format!("{}.csv", experiment_name(config.experiment)));
    emit_metrics(&output.records, &config, &csv_path)?;
    println!(
        "wrote {} rows to {}",
        output.records.len(),
        csv_path.display()
    );
    for a in &output.assertions {
        let status = if a.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", a.name, a.detail);
    }
    Ok(if output.all_passed() {
        EXIT_OK
    } else {
        EXIT_ASSERTION_FAILURE
    })
}

fn fstar_command(config_path: PathBuf, seed: Option<u64>) -> Result<u8> {
    let config = match load_config(&config_path, seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return Ok(EXIT_CONFIG_ERROR);
        }
    };
    let p = &config.problem;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let problem = gen_weight_reg_dataset(p.d, p.n_train, p.n_test, p.sigma_noise, &mut rng)?;
    let b = config.sweep.b_list.iter().copied().find(|&b| b > 0.0);
    let reg = b.map(RegularizerSpec::frobenius_sq);
    let d2 = config
        .sweep
        .d2_list
        .first()
        .copied()
        .context("fstar needs a non-empty sweep.d2_list")?;
    let cert = compute_f_star(
        &problem,
        reg.as_ref(),
        SpectralBall::new(d2)?,
        config.fstar_steps,
    )?;
    println!("{}", serde_json::to_string_pretty(&cert)?);
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            jobs,
        } => run_command(config, seed, out, jobs),
        Command::Validate { config } => match parse_config(&config) {
            Ok(c) => {
                println!("ok: {} experiment, seed {}", experiment_name(c.experiment), c.seed);
                Ok(EXIT_OK)
            }
            Err(e) => {
                eprintln!("config error: {e:#}");
                Ok(EXIT_CONFIG_ERROR)
            }
        },
        Command::Fstar { config, seed } => fstar_command(config, seed),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
