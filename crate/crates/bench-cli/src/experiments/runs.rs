//! Single-run commands emitting full telemetry CSVs.

use std::time::Instant;

use sqmc_core::abc::{run_abc, AbcEngine, ObservedData};
use sqmc_core::dpm::{run_dpm_filter_observed, DpmEngine};
use sqmc_core::qseq::derive_stream_seed;

use crate::config::ExperimentSpec;
use crate::csvio::CsvWriter;
use crate::experiments::{abc_setup, dpm_setup};
use crate::BenchError;

pub fn run_dpm(spec: &ExperimentSpec) -> Result<(), BenchError> {
    let (model, data) = dpm_setup(&spec.config)?;
    let comment = spec.describe();
    let mut evidence = CsvWriter::new(&comment, &["replicate", "t", "log_norm_const"]);
    let mut posterior = CsvWriter::new(&comment, &["replicate", "j", "prob_k"]);
    let mut trajectory = CsvWriter::new(
        &comment,
        &["replicate", "t", "particle", "weight", "cluster_count"],
    );

    for engine_name in &spec.engines {
        let engine = match engine_name.as_str() {
            "sqmc" => DpmEngine::Sqmc,
            _ => DpmEngine::Smc,
        };
        for &n in &spec.n_values {
            for replicate in 0..spec.replicates {
                let seed = derive_stream_seed(spec.seed, replicate as u64);
                let run = run_dpm_filter_observed(
                    &data,
                    &model,
                    n,
                    engine,
                    seed,
                    |t, system| {
                        for (particle, (state, weight)) in
                            system.states().iter().zip(system.weights()).enumerate()
                        {
                            trajectory.row(&[
                                replicate.to_string(),
                                t.to_string(),
                                particle.to_string(),
                                format!("{weight}"),
                                state.cluster_count().to_string(),
                            ]);
                        }
                    },
                )
                .map_err(|e| BenchError::Runtime(format!("dpm run aborted: {e}")))?;
                for (t, lnc) in run.log_evidence_path.iter().enumerate() {
                    evidence.row(&[
                        replicate.to_string(),
                        (t + 1).to_string(),
                        format!("{lnc}"),
                    ]);
                }
                for (j, p) in run.k_posterior.iter().enumerate() {
                    posterior.row(&[
                        replicate.to_string(),
                        (j + 1).to_string(),
                        format!("{p}"),
                    ]);
                }
            }
        }
    }
    evidence.write_to(&spec.out_dir.join("evidence.csv"))?;
    posterior.write_to(&spec.out_dir.join("k_posterior.csv"))?;
    trajectory.write_to(&spec.out_dir.join("trajectory.csv"))?;
    Ok(())
}

pub fn run_abc_single(spec: &ExperimentSpec) -> Result<(), BenchError> {
    let comment = spec.describe();
    let mut telemetry = CsvWriter::new(
        &comment,
        &["replicate", "t", "i", "theta", "omega", "attempts"],
    );
    let mut summary = CsvWriter::new(
        &comment,
        &[
            "replicate",
            "engine",
            "posterior_mean",
            "posterior_var",
            "total_sim_calls",
            "wall_time_ms",
        ],
    );
    let mut schedule = CsvWriter::new(
        &comment,
        &["replicate", "t", "epsilon", "sim_calls", "acceptance_rate"],
    );

    for engine_name in &spec.engines {
        let engine = match engine_name.as_str() {
            "pqmc" => AbcEngine::Pqmc,
            _ => AbcEngine::PlainMc,
        };
        for &n in &spec.n_values {
            let (config, model, data_seed) = abc_setup(&spec.config, n)?;
            let data = match spec.config.get("data_file") {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        BenchError::Usage(format!("cannot read data file {path}: {e}"))
                    })?;
                    let mut values = Vec::new();
                    for (lineno, line) in text.lines().enumerate() {
                        let line = line.trim();
                        if line.is_empty() {
                            continue;
                        }
                        values.push(line.parse().map_err(|_| {
                            BenchError::Usage(format!(
                                "{path} line {}: `{line}` is not a number",
                                lineno + 1
                            ))
                        })?);
                    }
                    ObservedData::Dataset(values)
                }
                None => ObservedData::Synthetic { seed: data_seed },
            };
            for replicate in 0..spec.replicates {
                let seed = derive_stream_seed(spec.seed, replicate as u64);
                let start = Instant::now();
                let run = run_abc(&config, &model, engine, &data, seed)
                    .map_err(|e| BenchError::Runtime(format!("abc run aborted: {e}")))?;
                let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                for pop in &run.populations {
                    for (i, (theta, omega)) in
                        pop.thetas.iter().zip(&pop.omegas).enumerate()
                    {
                        telemetry.row(&[
                            replicate.to_string(),
                            pop.iteration.to_string(),
                            i.to_string(),
                            format!("{theta}"),
                            format!("{omega}"),
                            pop.attempts.to_string(),
                        ]);
                    }
                }
                for (t, stats) in run.iterations.iter().enumerate() {
                    schedule.row(&[
                        replicate.to_string(),
                        (t + 1).to_string(),
                        format!("{}", stats.epsilon),
                        stats.sim_calls.to_string(),
                        format!("{}", stats.acceptance_rate),
                    ]);
                }
                summary.row(&[
                    replicate.to_string(),
                    engine_name.clone(),
                    format!("{}", run.posterior_mean),
                    format!("{}", run.posterior_variance),
                    run.total_sim_calls.to_string(),
                    format!("{wall_ms}"),
                ]);
            }
        }
    }
    telemetry.write_to(&spec.out_dir.join("abc_telemetry.csv"))?;
    summary.write_to(&spec.out_dir.join("abc_summary.csv"))?;
    schedule.write_to(&spec.out_dir.join("abc_schedule.csv"))?;
    Ok(())
}
