//! Spike-noise robustness sweep: plain SGD against globally clipped,
//! spectrally clipped, and momentum variants under low-rank spike noise of
//! increasing magnitude, with a per-method initial-learning-rate grid
//! search and `eta_k = eta_0 / sqrt(k + 1)` decay.

use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use spectra_core::linalg::clip::{global_clip, spectral_clip_exact, ClipThreshold};
use spectra_core::linalg::matrix::{frobenius_norm, DenseMatrix};
use spectra_core::optim::{base_update, BaseOptimizerSpec, OptimizerState};
use spectra_core::synth::{
    gen_weight_reg_dataset, grad, loss, spike_noisy_grad, LogisticProblem, SpikeNoiseSpec,
};

use crate::config::{RobustnessMethod, RunConfig};
use crate::metrics::{Assertion, MetricRecord};

use super::{derive_seed, ExperimentOutput};

/// Momentum weight on the fresh gradient for the SGD-M variants
/// (`M <- (1 - beta) M + beta g`), i.e. a 0.9 exponential decay.
const SGDM_BETA: f64 = 0.1;

struct RunResult {
    seed_idx: usize,
    ell_idx: usize,
    method_idx: usize,
    eta_idx: usize,
    train_losses: Vec<f64>,
    diverged: bool,
    /// Violations of the clipped-update Frobenius-norm bounds (checked only
    /// for the spectral-clip method at the largest spike magnitude).
    norm_bound_violations: usize,
}

#[allow(clippy::too_many_arguments)]
fn single_run(
    problem: &LogisticProblem,
    method: RobustnessMethod,
    ell: f64,
    rank: usize,
    eta0: f64,
    clip_c: f64,
    steps: usize,
    noise_seed: u64,
    check_norm_bounds: bool,
) -> Result<RunResult> {
    let (d, _) = problem.dim();
    let threshold = ClipThreshold::new(clip_c)?;
    let spec = SpikeNoiseSpec { ell, rank };
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let mut x = DenseMatrix::zeros(d, d);
    let base = BaseOptimizerSpec::sgdm(SGDM_BETA);
    let mut state = OptimizerState::new(d, d, &base);
    let mut train_losses = Vec::with_capacity(steps);
    let mut diverged = false;
    let mut norm_bound_violations = 0usize;
    for k in 0..steps {
        let g = spike_noisy_grad(problem, &x, &spec, &mut rng)?;
        let dir = match method {
            RobustnessMethod::Vanilla => g,
            RobustnessMethod::GlobalClip => global_clip(&g, threshold),
            RobustnessMethod::SpectralClip => spectral_clip_exact(&g, threshold)?,
            RobustnessMethod::SgdM => base_update(&base, &mut state, &g)?,
            RobustnessMethod::SgdMPreClip => {
                let pre = spectral_clip_exact(&g, threshold)?;
                base_update(&base, &mut state, &pre)?
            }
        };
        if check_norm_bounds && k % 10 == 0 {
            // Loose: sqrt(d) c. Tight: ||grad f||_F + sqrt(r) c, from the
            // non-expansiveness of the spectral-ball projection.
            let dir_norm = frobenius_norm(&dir);
            let signal_norm = frobenius_norm(&grad(problem, &x, None)?);
            let loose = (d as f64).sqrt() * clip_c;
            let tight = signal_norm + (rank as f64).sqrt() * clip_c;
            if dir_norm > loose + 1e-9 || dir_norm > tight + 1e-9 {
                norm_bound_violations += 1;
            }
        }
        let eta = eta0 / (k as f64 + 1.0).sqrt();
        x -= dir * eta;
        let l = loss(problem, &x, None)?;
        train_losses.push(l);
        if !l.is_finite() {
            diverged = true;
            break;
        }
    }
    Ok(RunResult {
        seed_idx: 0,
        ell_idx: 0,
        method_idx: 0,
        eta_idx: 0,
        train_losses,
        diverged,
        norm_bound_violations,
    })
}

fn final_loss(r: &RunResult) -> f64 {
    if r.diverged {
        f64::INFINITY
    } else {
        *r.train_losses.last().unwrap_or(&f64::INFINITY)
    }
}

pub fn run(config: &RunConfig) -> Result<ExperimentOutput> {
    let p = &config.problem;
    let sweep = &config.sweep;
    let steps = config.steps;

    let problems: Vec<LogisticProblem> = (0..config.seeds_per_cell)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 100 + s as u64));
            gen_weight_reg_dataset(p.d, p.n_train, p.n_test, p.sigma_noise, &mut rng)
        })
        .collect::<spectra_core::Result<_>>()?;

    let ell_max = p.ell_list.iter().cloned().fold(f64::MIN, f64::max);
    let mut jobs = Vec::new();
    for (seed_idx, _) in problems.iter().enumerate() {
        for (ell_idx, &ell) in p.ell_list.iter().enumerate() {
            for (eta_idx, &eta0) in sweep.eta0_grid.iter().enumerate() {
                // One noise seed per (seed, ell, eta0) cell, shared across
                // methods so comparisons are paired.
                let noise_seed = derive_seed(
                    config.seed,
                    1_000_000
                        + (seed_idx * p.ell_list.len() + ell_idx) as u64 * 1000
                        + eta_idx as u64,
                );
                for (method_idx, &method) in sweep.methods.iter().enumerate() {
                    jobs.push((seed_idx, ell_idx, ell, eta_idx, eta0, method_idx, method, noise_seed));
                }
            }
        }
    }

    let mut results: Vec<RunResult> = jobs
        .par_iter()
        .map(|&(seed_idx, ell_idx, ell, eta_idx, eta0, method_idx, method, noise_seed)| {
            let check = method == RobustnessMethod::SpectralClip && ell == ell_max;
            let mut r = single_run(
                &problems[seed_idx],
                method,
                ell,
                p.spike_rank,
                eta0,
                sweep.clip_c,
                steps,
                noise_seed,
                check,
            )?;
            r.seed_idx = seed_idx;
            r.ell_idx = ell_idx;
            r.method_idx = method_idx;
            r.eta_idx = eta_idx;
            Ok(r)
        })
        .collect::<Result<_>>()?;
    results.sort_by_key(|r| (r.ell_idx, r.method_idx, r.eta_idx, r.seed_idx));

    // Best learning rate per (ell, method, seed) by final training loss.
    let n_methods = sweep.methods.len();
    let n_seeds = config.seeds_per_cell;
    let mut best: Vec<Option<usize>> = vec![None; p.ell_list.len() * n_methods * n_seeds];
    let cell = |ell_idx: usize, method_idx: usize, seed_idx: usize| {
        (ell_idx * n_methods + method_idx) * n_seeds + seed_idx
    };
    for (i, r) in results.iter().enumerate() {
        let c = cell(r.ell_idx, r.method_idx, r.seed_idx);
        if best[c].map_or(true, |j| final_loss(r) < final_loss(&results[j])) {
            best[c] = Some(i);
        }
    }

    let mut records = Vec::new();
    let curve_stride = (steps / 100).max(1);
    for (i, r) in results.iter().enumerate() {
        let ell = p.ell_list[r.ell_idx];
        let method = sweep.methods[r.method_idx];
        let eta0 = sweep.eta0_grid[r.eta_idx];
        let run_id = format!(
            "rob_ell{ell}_{}_eta{eta0}_s{}",
            method.label(),
            r.seed_idx
        );
        let is_best = best[cell(r.ell_idx, r.method_idx, r.seed_idx)] == Some(i);
        let emit_steps: Vec<usize> = if is_best {
            (0..r.train_losses.len())
                .filter(|k| k % curve_stride == 0 || k + 1 == r.train_losses.len())
                .collect()
        } else {
            vec![r.train_losses.len().saturating_sub(1)]
        };
        for k in emit_steps {
            let mut row = MetricRecord::new(run_id.clone(), k);
            row.train_loss = r.train_losses[k];
            row.diverged = r.diverged && k + 1 == r.train_losses.len();
            row.extra.insert("ell".into(), ell);
            row.extra.insert("eta0".into(), eta0);
            row.extra.insert("best_eta".into(), f64::from(u8::from(is_best)));
            records.push(row);
        }
    }

    let mut assertions = Vec::new();
    let mean_best = |ell_idx: usize, method: RobustnessMethod| -> Option<f64> {
        let method_idx = sweep.methods.iter().position(|&m| m == method)?;
        let mut acc = 0.0;
        for seed_idx in 0..n_seeds {
            acc += final_loss(&results[best[cell(ell_idx, method_idx, seed_idx)]?]);
        }
        Some(acc / n_seeds as f64)
    };

    let ell_max_idx = p
        .ell_list
        .iter()
        .position(|&e| e == ell_max)
        .expect("non-empty ell list");
    if let (Some(spectral), Some(global), Some(vanilla)) = (
        mean_best(ell_max_idx, RobustnessMethod::SpectralClip),
        mean_best(ell_max_idx, RobustnessMethod::GlobalClip),
        mean_best(ell_max_idx, RobustnessMethod::Vanilla),
    ) {
        assertions.push(Assertion::check(
            "large_spike_spectral_beats_global",
            spectral < global,
            format!("mean best-final loss {spectral} vs {global} at ell = {ell_max}"),
        ));
        assertions.push(Assertion::check(
            "large_spike_spectral_beats_vanilla",
            spectral < vanilla,
            format!("mean best-final loss {spectral} vs {vanilla} at ell = {ell_max}"),
        ));
    }
    let ell_min = p.ell_list.iter().cloned().fold(f64::MAX, f64::min);
    if ell_min < ell_max {
        let ell_min_idx = p.ell_list.iter().position(|&e| e == ell_min).unwrap();
        if let (Some(spectral), Some(global), Some(vanilla)) = (
            mean_best(ell_min_idx, RobustnessMethod::SpectralClip),
            mean_best(ell_min_idx, RobustnessMethod::GlobalClip),
            mean_best(ell_min_idx, RobustnessMethod::Vanilla),
        ) {
            let hi = spectral.max(global).max(vanilla);
            let lo = spectral.min(global).min(vanilla);
            assertions.push(Assertion::check(
                "small_spike_methods_within_ten_percent",
                hi <= lo * 1.10,
                format!("spread [{lo}, {hi}] at ell = {ell_min}"),
            ));
        }
    }
    let norm_violations: usize = results.iter().map(|r| r.norm_bound_violations).sum();
    assertions.push(Assertion::check(
        "spectral_clip_update_norm_bounds",
        norm_violations == 0,
        format!("{norm_violations} sampled steps violated the clip-norm bounds"),
    ));

    Ok(ExperimentOutput {
        records,
        assertions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> RunConfig {
        let mut cfg: RunConfig =
            toml::from_str("experiment = \"spike_robustness\"\nseed = 5\n").unwrap();
        cfg.problem.d = 12;
        cfg.problem.n_train = 30;
        cfg.problem.n_test = 20;
        cfg.problem.spike_rank = 3;
        cfg.problem.ell_list = vec![10.0, 300.0];
        cfg.sweep.eta0_grid = vec![0.3, 0.1, 0.03];
        cfg.steps = 120;
        cfg.seeds_per_cell = 2;
        cfg
    }

    #[test]
    fn small_instance_reproduces_the_ordering() {
        let out = run(&config()).unwrap();
        assert!(out.all_passed(), "{:?}", out.assertions);
        assert!(!out.records.is_empty());
    }

    #[test]
    fn zero_spike_makes_clipless_methods_coincide() {
        let mut cfg = config();
        cfg.problem.ell_list = vec![0.0];
        cfg.sweep.eta0_grid = vec![0.1];
        cfg.sweep.methods = vec![
            RobustnessMethod::Vanilla,
            RobustnessMethod::GlobalClip,
            RobustnessMethod::SpectralClip,
        ];
        cfg.seeds_per_cell = 1;
        cfg.steps = 40;
        let out = run(&cfg).unwrap();
        // With no noise and an inactive threshold the three trajectories
        // are identical, so all final rows agree exactly.
        let finals: Vec<f64> = out
            .records
            .iter()
            .filter(|r| r.step == 39)
            .map(|r| r.train_loss)
            .collect();
        assert_eq!(finals.len(), 3);
        assert!(finals.windows(2).all(|w| w[0] == w[1]), "{finals:?}");
    }
}
