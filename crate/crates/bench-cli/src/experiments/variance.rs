//! Variance comparison between a pseudorandom engine and its quasi-Monte
//! Carlo counterpart, with a percentile-bootstrap interval on the variance
//! ratio.

use rayon::prelude::*;
use sqmc_core::abc::{run_abc, AbcEngine, ObservedData};
use sqmc_core::dpm::{run_dpm_filter, DpmEngine};
use sqmc_core::qseq::derive_stream_seed;
use sqmc_core::stats::{bootstrap_variance_ratio, sample_variance};

use crate::config::{Experiment, ExperimentSpec};
use crate::csvio::CsvWriter;
use crate::experiments::{abc_setup, dpm_setup, fmt};
use crate::BenchError;

pub const BOOTSTRAP_RESAMPLES: usize = 10_000;

#[derive(Clone, Debug)]
pub struct EstimateRow {
    pub engine: String,
    pub n: usize,
    pub replicate: usize,
    pub estimate: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub n: usize,
    pub engine_baseline: String,
    pub engine_qmc: String,
    pub ok_baseline: usize,
    pub ok_qmc: usize,
    pub aborted: usize,
    pub var_baseline: f64,
    pub var_qmc: f64,
    /// (ratio, lower, upper); missing when variance is undefined.
    pub ratio: Option<(f64, f64, f64)>,
}

#[derive(Debug)]
pub struct VarianceOutcome {
    pub estimates: Vec<EstimateRow>,
    pub summaries: Vec<SummaryRow>,
    pub warnings: Vec<String>,
}

/// One replicate of the configured experiment; `None` estimate on abort.
fn run_replicate(
    spec: &ExperimentSpec,
    engine: &str,
    n: usize,
    replicate: usize,
) -> EstimateRow {
    let seed = derive_stream_seed(spec.seed, replicate as u64);
    let outcome: Result<f64, String> = match spec.experiment {
        Experiment::AbcVariance => (|| {
            let (config, model, data_seed) =
                abc_setup(&spec.config, n).map_err(|e| e.to_string())?;
            let engine = match engine {
                "pqmc" => AbcEngine::Pqmc,
                _ => AbcEngine::PlainMc,
            };
            let run = run_abc(
                &config,
                &model,
                engine,
                &ObservedData::Synthetic { seed: data_seed },
                seed,
            )
            .map_err(|e| e.to_string())?;
            Ok(run.posterior_mean)
        })(),
        Experiment::DpmVariance => (|| {
            let (model, data) = dpm_setup(&spec.config).map_err(|e| e.to_string())?;
            let engine = match engine {
                "sqmc" => DpmEngine::Sqmc,
                _ => DpmEngine::Smc,
            };
            let run =
                run_dpm_filter(&data, &model, n, engine, seed).map_err(|e| e.to_string())?;
            Ok(run.log_marginal_likelihood.exp())
        })(),
        _ => Err("not a variance experiment".to_string()),
    };
    match outcome {
        Ok(estimate) => EstimateRow {
            engine: engine.to_string(),
            n,
            replicate,
            estimate: Some(estimate),
            status: "ok".to_string(),
        },
        Err(message) => EstimateRow {
            engine: engine.to_string(),
            n,
            replicate,
            estimate: None,
            status: format!("abort: {message}"),
        },
    }
}

pub fn run_variance(spec: &ExperimentSpec) -> Result<VarianceOutcome, BenchError> {
    // Validate the model block once up front so configuration mistakes are
    // usage errors, not per-replicate aborts.
    match spec.experiment {
        Experiment::AbcVariance => {
            abc_setup(&spec.config, spec.n_values[0])?;
        }
        Experiment::DpmVariance => {
            dpm_setup(&spec.config)?;
        }
        other => {
            return Err(BenchError::Usage(format!(
                "{} is not a variance experiment",
                other.name()
            )))
        }
    }

    let pool = crate::worker_pool()?;
    let mut estimates = Vec::new();
    for engine in &spec.engines {
        for &n in &spec.n_values {
            let mut rows: Vec<EstimateRow> = pool.install(|| {
                (0..spec.replicates)
                    .into_par_iter()
                    .map(|replicate| run_replicate(spec, engine, n, replicate))
                    .collect()
            });
            estimates.append(&mut rows);
        }
    }

    let mut warnings = Vec::new();
    let mut summaries = Vec::new();
    if spec.engines.len() == 2 {
        let (base, qmc) = (&spec.engines[0], &spec.engines[1]);
        for &n in &spec.n_values {
            let collect = |engine: &str| -> Vec<f64> {
                estimates
                    .iter()
                    .filter(|r| r.engine == engine && r.n == n)
                    .filter_map(|r| r.estimate)
                    .collect()
            };
            let a = collect(base);
            let b = collect(qmc);
            let aborted = 2 * spec.replicates - a.len() - b.len();
            if aborted > 0 {
                warnings.push(format!("n={n}: {aborted} replicate(s) aborted and were excluded"));
            }
            let var_a = if a.len() >= 2 { sample_variance(&a) } else { f64::NAN };
            let var_b = if b.len() >= 2 { sample_variance(&b) } else { f64::NAN };
            let ratio = if a.len() >= 2 && b.len() >= 2 && var_b > 0.0 {
                let boot = bootstrap_variance_ratio(&a, &b, BOOTSTRAP_RESAMPLES, 0.95, spec.seed)
                    .map_err(|e| BenchError::Runtime(e.to_string()))?;
                Some((boot.ratio, boot.lower, boot.upper))
            } else {
                warnings.push(format!(
                    "n={n}: variance ratio undefined with fewer than 2 estimates per engine"
                ));
                None
            };
            summaries.push(SummaryRow {
                n,
                engine_baseline: base.clone(),
                engine_qmc: qmc.clone(),
                ok_baseline: a.len(),
                ok_qmc: b.len(),
                aborted,
                var_baseline: var_a,
                var_qmc: var_b,
                ratio,
            });
        }
    } else {
        warnings.push(format!(
            "{} engine(s) listed; variance ratio needs exactly 2",
            spec.engines.len()
        ));
    }

    Ok(VarianceOutcome {
        estimates,
        summaries,
        warnings,
    })
}

pub fn write_variance_csvs(
    spec: &ExperimentSpec,
    outcome: &VarianceOutcome,
) -> Result<(), BenchError> {
    let comment = spec.describe();
    let mut est = CsvWriter::new(&comment, &["replicate", "engine", "n", "estimate", "status"]);
    for r in &outcome.estimates {
        est.row(&[
            r.replicate.to_string(),
            r.engine.clone(),
            r.n.to_string(),
            r.estimate.map_or(String::new(), |e| format!("{e}")),
            r.status.clone(),
        ]);
    }
    est.write_to(&spec.out_dir.join("variance_estimates.csv"))?;

    let mut sum = CsvWriter::new(
        &comment,
        &[
            "n",
            "engine_mc",
            "engine_qmc",
            "replicates_ok_mc",
            "replicates_ok_qmc",
            "aborted",
            "var_mc",
            "var_qmc",
            "ratio_mc_over_qmc",
            "ratio_lo95",
            "ratio_hi95",
        ],
    );
    for s in &outcome.summaries {
        let (ratio, lo, hi) = match s.ratio {
            Some((r, lo, hi)) => (format!("{r}"), format!("{lo}"), format!("{hi}")),
            None => (String::new(), String::new(), String::new()),
        };
        sum.row(&[
            s.n.to_string(),
            s.engine_baseline.clone(),
            s.engine_qmc.clone(),
            s.ok_baseline.to_string(),
            s.ok_qmc.to_string(),
            s.aborted.to_string(),
            fmt(s.var_baseline),
            fmt(s.var_qmc),
            ratio,
            lo,
            hi,
        ]);
    }
    sum.write_to(&spec.out_dir.join("variance_summary.csv"))?;
    Ok(())
}
