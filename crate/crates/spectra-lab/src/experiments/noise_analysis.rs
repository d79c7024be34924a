//! Noise-structure analysis: draws independent spike-noise stochastic
//! gradients around the exact full-dataset gradient and records the
//! top-r spectrum of each noise matrix plus its subspace distances to the
//! signal's top-r frames.

use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectra_core::linalg::matrix::{frobenius_norm, linf_norm, spectral_norm, DenseMatrix};
use spectra_core::synth::{
    gen_weight_reg_dataset, grad, loss, signal_noise_decompose, spike_noisy_grad, SpikeNoiseSpec,
};

use crate::config::RunConfig;
use crate::metrics::{Assertion, MetricRecord};

use super::{derive_seed, ExperimentOutput};

pub fn run(config: &RunConfig) -> Result<ExperimentOutput> {
    let p = &config.problem;
    let mut data_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0));
    let problem = gen_weight_reg_dataset(p.d, p.n_train, p.n_test, p.sigma_noise, &mut data_rng)?;

    // Desk-scale stand-in for a large-batch signal: the exact full-dataset
    // gradient at the zero point.
    let x = DenseMatrix::zeros(p.d, p.d);
    let signal = grad(&problem, &x, None)?;
    let train_loss = loss(&problem, &x, None)?;

    let mut records = Vec::new();
    let mut assertions = Vec::new();
    for (ell_idx, &ell) in p.ell_list.iter().enumerate() {
        let spec = SpikeNoiseSpec {
            ell,
            rank: p.spike_rank,
        };
        let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1 + ell_idx as u64));
        let grads: Vec<DenseMatrix> = (0..config.noise_samples)
            .map(|_| spike_noisy_grad(&problem, &x, &spec, &mut noise_rng))
            .collect::<spectra_core::Result<_>>()?;
        let samples = signal_noise_decompose(&grads, &signal, p.spike_rank)?;

        let mut spectrum_ok = true;
        let mut distances_ok = true;
        for (i, (rec, g)) in samples.iter().zip(&grads).enumerate() {
            let noise = g - &signal;
            let mut row = MetricRecord::new(format!("noise_ell{ell}"), i);
            row.train_loss = train_loss;
            row.spectral_norm = spectral_norm(&noise);
            row.frobenius_norm = frobenius_norm(&noise);
            row.linf_norm = linf_norm(&noise);
            row.extra.insert("ell".into(), ell);
            row.extra.insert("d_spec".into(), rec.d_spec);
            row.extra.insert("d_chord".into(), rec.d_chord);
            for (j, &s) in rec.top_singular_values.iter().enumerate() {
                row.extra.insert(format!("sigma_{}", j + 1), s);
            }
            records.push(row);

            // The oracle adds exactly ell * U V^T on top of the signal, so
            // every recovered top-r singular value must equal ell.
            let tol = 1e-8 * ell.max(1.0);
            spectrum_ok &= rec
                .top_singular_values
                .iter()
                .all(|&s| (s - ell).abs() <= tol);
            distances_ok &= (0.0..=1.0 + 1e-9).contains(&rec.d_spec)
                && (0.0..=1.0 + 1e-9).contains(&rec.d_chord);
        }
        assertions.push(Assertion::check(
            &format!("noise_sample_count_ell{ell}"),
            samples.len() == config.noise_samples,
            format!("{} samples (expected {})", samples.len(), config.noise_samples),
        ));
        assertions.push(Assertion::check(
            &format!("noise_spike_spectrum_exact_ell{ell}"),
            spectrum_ok,
            "top-r noise singular values equal the spike magnitude".into(),
        ));
        assertions.push(Assertion::check(
            &format!("noise_distances_in_unit_range_ell{ell}"),
            distances_ok,
            "subspace distances lie in [0, 1]".into(),
        ));
    }
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
            toml::from_str("experiment = \"noise_analysis\"\nseed = 11\n").unwrap();
        cfg.noise_samples = 8;
        cfg.problem.ell_list = vec![0.0, 100.0];
        cfg
    }

    #[test]
    fn produces_one_row_per_sample_and_passes() {
        let cfg = config();
        let out = run(&cfg).unwrap();
        assert_eq!(out.records.len(), 2 * cfg.noise_samples);
        assert!(out.all_passed(), "{:?}", out.assertions);
    }

    #[test]
    fn zero_spike_has_zero_noise_spectrum() {
        let out = run(&config()).unwrap();
        let zero_rows: Vec<_> = out
            .records
            .iter()
            .filter(|r| r.run_id == "noise_ell0")
            .collect();
        assert!(!zero_rows.is_empty());
        for row in zero_rows {
            assert!(row.spectral_norm <= 1e-12);
        }
    }

    #[test]
    fn reruns_are_identical() {
        let a = run(&config()).unwrap();
        let b = run(&config()).unwrap();
        let csv_a = crate::metrics::to_csv(&a.records);
        let csv_b = crate::metrics::to_csv(&b.records);
        assert_eq!(csv_a, csv_b);
    }
}
