//! Experiment drivers: variance comparisons, timing-vs-N scaling, and
//! single telemetry runs.

pub mod runs;
pub mod timing;
pub mod variance;

use sqmc_core::abc::{AbcConfig, EpsilonSchedule, HmsModel, UniformPrior};
use sqmc_core::dpm::DpmModel;

use crate::config::KvConfig;
use crate::BenchError;

pub const ABC_KEYS: &[&str] = &[
    "theta",
    "sigma_obs",
    "length",
    "epsilons",
    "quantile",
    "pilot",
    "prior_lo",
    "prior_hi",
    "max_attempts",
    "data_seed",
    "data_file",
];

pub const DPM_KEYS: &[&str] = &[
    "alpha", "m0", "v0", "kernel_var", "discount", "data", "data_file",
];

/// The five-observation comparison dataset used by the variance
/// experiments when no data is supplied.
pub const DPM_DEFAULT_DATA: [f64; 5] = [-1.0, -0.8, 0.0, 0.9, 1.1];

pub fn abc_setup(config: &KvConfig, n: usize) -> Result<(AbcConfig, HmsModel, u64), BenchError> {
    config.ensure_known_keys(ABC_KEYS)?;
    let theta = config.f64_or("theta", 0.3)?;
    let sigma_obs = config.f64_or("sigma_obs", 0.5)?;
    let length = config.usize_or("length", 100)?;
    let model = HmsModel::new(sigma_obs, length, theta)
        .map_err(|e| BenchError::Usage(format!("model config: {e}")))?;
    let prior_lo = config.f64_or("prior_lo", 0.0)?;
    let prior_hi = config.f64_or("prior_hi", 1.0)?;
    let prior = UniformPrior::new(prior_lo, prior_hi)
        .map_err(|e| BenchError::Usage(format!("prior config: {e}")))?;
    let schedule = match (config.get("quantile"), config.get("pilot")) {
        (None, None) => EpsilonSchedule::Explicit(
            config.f64_list_or("epsilons", &[0.5, 0.3, 0.2, 0.15, 0.1])?,
        ),
        (q, pilot) => EpsilonSchedule::AdaptiveQuantile {
            q: q.map(|v| v.parse())
                .transpose()
                .map_err(|_| BenchError::Usage("bad value for `quantile`".to_string()))?
                .unwrap_or(0.25),
            pilot: pilot
                .map(|v| v.parse())
                .transpose()
                .map_err(|_| BenchError::Usage("bad value for `pilot`".to_string()))?
                .unwrap_or(200),
        },
    };
    let iterations = match &schedule {
        EpsilonSchedule::Explicit(eps) => eps.len(),
        EpsilonSchedule::AdaptiveQuantile { .. } => config.usize_or("iterations", 5)?,
    };
    let abc = AbcConfig {
        population: n,
        iterations,
        schedule,
        prior,
        summary: sqmc_core::abc::default_summary,
        distance: sqmc_core::abc::euclidean_distance,
        max_attempts_per_particle: config.u64_or("max_attempts", 2000)?,
    };
    abc.validate()
        .map_err(|e| BenchError::Usage(format!("abc config: {e}")))?;
    let data_seed = config.u64_or("data_seed", 1)?;
    Ok((abc, model, data_seed))
}

pub fn dpm_setup(config: &KvConfig) -> Result<(DpmModel, Vec<f64>), BenchError> {
    config.ensure_known_keys(DPM_KEYS)?;
    let model = DpmModel::new(
        config.f64_or("alpha", 1.0)?,
        config.f64_or("m0", 0.0)?,
        config.f64_or("v0", 2.0)?,
        config.f64_or("kernel_var", 0.25)?,
        config.f64_or("discount", 0.0)?,
    )
    .map_err(|e| BenchError::Usage(format!("model config: {e}")))?;
    let data = if let Some(path) = config.get("data_file") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Usage(format!("cannot read data file {path}: {e}")))?;
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            values.push(line.parse().map_err(|_| {
                BenchError::Usage(format!("{path} line {}: `{line}` is not a number", lineno + 1))
            })?);
        }
        values
    } else {
        config.f64_list_or("data", &DPM_DEFAULT_DATA)?
    };
    if data.is_empty() {
        return Err(BenchError::Usage("dpm data is empty".to_string()));
    }
    Ok((model, data))
}

fn format_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

pub(crate) use format_f64 as fmt;
