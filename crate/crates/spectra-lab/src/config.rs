use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    FwWeightReg,
    SpikeRobustness,
    LemmaMc,
    NoiseAnalysis,
    MomentumAudit,
}

/// Synthetic problem dimensions and noise model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default = "default_sigma_noise")]
    pub sigma_noise: f64,
    /// Spike magnitudes swept by the robustness experiment.
    #[serde(default = "default_ell_list")]
    pub ell_list: Vec<f64>,
    /// Rank of the spike noise.
    #[serde(default = "default_spike_rank")]
    pub spike_rank: usize,
}

fn default_d() -> usize {
    10
}
fn default_n_train() -> usize {
    80
}
fn default_n_test() -> usize {
    200
}
fn default_sigma_noise() -> f64 {
    5.0
}
fn default_ell_list() -> Vec<f64> {
    vec![10.0, 100.0, 1000.0]
}
fn default_spike_rank() -> usize {
    5
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            d: default_d(),
            n_train: default_n_train(),
            n_test: default_n_test(),
            sigma_noise: default_sigma_noise(),
            ell_list: default_ell_list(),
            spike_rank: default_spike_rank(),
        }
    }
}

/// Optimizer / regularizer sweep parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    /// Regularizer strengths; 0 selects the orthogonalized (psi = 0) path.
    #[serde(default = "default_b_list")]
    pub b_list: Vec<f64>,
    /// Spectral-ball radii.
    #[serde(default = "default_d2_list")]
    pub d2_list: Vec<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Fixed spectral-clip threshold for the robustness experiment.
    #[serde(default = "default_clip_c")]
    pub clip_c: f64,
    /// Initial learning-rate grid for the robustness experiment.
    #[serde(default = "default_eta0_grid")]
    pub eta0_grid: Vec<f64>,
    /// Methods swept by the robustness experiment.
    #[serde(default = "default_methods")]
    pub methods: Vec<RobustnessMethod>,
    /// Enable the stochastic (batch 20, decaying momentum) mode of the
    /// weight-regularization experiment in addition to full batch.
    #[serde(default)]
    pub stochastic: bool,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
}

fn default_b_list() -> Vec<f64> {
    vec![0.0, 0.1, 1.0]
}
fn default_d2_list() -> Vec<f64> {
    vec![0.2, 1.0, 5.0]
}
fn default_lambda() -> f64 {
    0.1
}
fn default_clip_c() -> f64 {
    15.0
}
fn default_eta0_grid() -> Vec<f64> {
    vec![1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001]
}
fn default_batch_size() -> usize {
    20
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustnessMethod {
    Vanilla,
    GlobalClip,
    SpectralClip,
    SgdM,
    SgdMPreClip,
}

impl RobustnessMethod {
    pub fn label(&self) -> &'static str {
        match self {
            RobustnessMethod::Vanilla => "vanilla",
            RobustnessMethod::GlobalClip => "global_clip",
            RobustnessMethod::SpectralClip => "spectral_clip",
            RobustnessMethod::SgdM => "sgdm",
            RobustnessMethod::SgdMPreClip => "sgdm_pre_clip",
        }
    }
}

fn default_methods() -> Vec<RobustnessMethod> {
    vec![
        RobustnessMethod::Vanilla,
        RobustnessMethod::GlobalClip,
        RobustnessMethod::SpectralClip,
        RobustnessMethod::SgdM,
        RobustnessMethod::SgdMPreClip,
    ]
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            b_list: default_b_list(),
            d2_list: default_d2_list(),
            lambda: default_lambda(),
            clip_c: default_clip_c(),
            eta0_grid: default_eta0_grid(),
            methods: default_methods(),
            stochastic: false,
            batch_size: default_batch_size(),
        }
    }
}

/// Full experiment configuration. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub problem: ProblemParams,
    #[serde(default)]
    pub sweep: SweepParams,
    /// Optimization horizon per run.
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Seeds per sweep cell where the experiment averages over seeds.
    #[serde(default = "default_seeds_per_cell")]
    pub seeds_per_cell: usize,
    /// Monte-Carlo draw count for the lemma experiment.
    #[serde(default = "default_mc_draws")]
    pub mc_draws: usize,
    /// Iteration budget of the reference-optimum solver.
    #[serde(default = "default_fstar_steps")]
    pub fstar_steps: usize,
    /// Noise-sample count for the noise-structure analysis.
    #[serde(default = "default_noise_samples")]
    pub noise_samples: usize,
    /// Horizon of the momentum-coefficient audit.
    #[serde(default = "default_audit_horizon")]
    pub audit_horizon: usize,
}

fn default_steps() -> usize {
    2000
}
fn default_seeds_per_cell() -> usize {
    5
}
fn default_mc_draws() -> usize {
    100_000
}
fn default_fstar_steps() -> usize {
    200_000
}
fn default_noise_samples() -> usize {
    50
}
fn default_audit_horizon() -> usize {
    1_000_000
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.problem.d == 0 || self.problem.n_train == 0 {
            bail!("problem.d and problem.n_train must be positive");
        }
        if self.problem.spike_rank == 0 || self.problem.spike_rank > self.problem.d {
            bail!("problem.spike_rank must be in 1..=problem.d");
        }
        if self.sweep.lambda <= 0.0 {
            bail!("sweep.lambda must be positive");
        }
        match self.experiment {
            ExperimentKind::FwWeightReg => {
                if self.sweep.b_list.is_empty() || self.sweep.d2_list.is_empty() {
                    bail!("fw_weight_reg needs non-empty sweep.b_list and sweep.d2_list");
                }
                if self.sweep.b_list.iter().any(|&b| b < 0.0)
                    || self.sweep.d2_list.iter().any(|&d| d <= 0.0)
                {
                    bail!("sweep.b_list entries must be >= 0 and sweep.d2_list entries > 0");
                }
                if self.steps == 0 {
                    bail!("steps must be positive");
                }
            }
            ExperimentKind::SpikeRobustness => {
                if self.sweep.eta0_grid.is_empty() || self.sweep.methods.is_empty() {
                    bail!("spike_robustness needs a learning-rate grid and methods");
                }
                if self.problem.ell_list.is_empty() {
                    bail!("spike_robustness needs problem.ell_list");
                }
                if self.sweep.clip_c <= 0.0 {
                    bail!("sweep.clip_c must be positive");
                }
            }
            ExperimentKind::LemmaMc => {
                if self.mc_draws < 100 {
                    bail!("mc_draws must be at least 100");
                }
            }
            ExperimentKind::NoiseAnalysis => {
                if self.noise_samples == 0 {
                    bail!("noise_samples must be positive");
                }
            }
            ExperimentKind::MomentumAudit => {
                if self.audit_horizon == 0 {
                    bail!("audit_horizon must be at least 1");
                }
            }
        }
        Ok(())
    }
}

/// Parses a TOML or JSON config, dispatching on the file extension.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let config: RunConfig = match ext.as_str() {
        "toml" => toml::from_str(&text)
            .with_context(|| format!("invalid TOML config {}", path.display()))?,
        "json" => serde_json::from_str(&text)
            .with_context(|| format!("invalid JSON config {}", path.display()))?,
        other => bail!("unsupported config extension '{other}' (expected .toml or .json)"),
    };
    config.validate()?;
    Ok(config)
}
