//! Likelihood-free population sampler with interchangeable uniform sources:
//! a randomized low-discrepancy stream (the quasi-Monte Carlo engine) or a
//! pseudorandom generator (the control). Both engines share one code path,
//! so variance comparisons between them measure the point set and nothing
//! else.
//!
//! Each iteration consumes a single shared sequence of points across all
//! particles and all rejection attempts (`j` never resets within an
//! iteration). Includes the hidden Markov switching toy model the sampler
//! is exercised on.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::qseq::{QseqError, Randomization, RqmcStream, StreamConfig};
use crate::smc::inverse_cdf_select;
use crate::stats::{inv_normal_cdf, sample_variance, standard_normal_pdf, weighted_variance};

#[derive(Debug, Error)]
pub enum AbcError {
    #[error("switching probability must lie in (0,1), got {0}")]
    BadTheta(f64),
    #[error("observation noise must be positive, got {0}")]
    BadSigma(f64),
    #[error("dataset length must be at least 2, got {0}")]
    ShortDataset(usize),
    #[error("population size must be at least 2, got {0}")]
    SmallPopulation(usize),
    #[error("iteration count must be at least 1")]
    NoIterations,
    #[error("bad epsilon schedule: {0}")]
    BadSchedule(String),
    #[error("prior bounds must satisfy lo < hi, got [{lo}, {hi}]")]
    BadPriorBounds { lo: f64, hi: f64 },
    #[error(
        "attempt budget exhausted at iteration {iteration}: {draws} draws, \
         {sim_calls} simulator calls, {accepted} of {population} accepted \
         (acceptance rate {rate:.2e})"
    )]
    AttemptBudget {
        iteration: usize,
        draws: u64,
        sim_calls: u64,
        accepted: usize,
        population: usize,
        rate: f64,
    },
    #[error("all particle weights vanished at iteration {0}")]
    AllWeightsZero(usize),
    #[error("kernel covariance degenerate ({sigma}) at iteration {iteration}")]
    DegenerateKernel { iteration: usize, sigma: f64 },
    #[error("population has not been initialized")]
    NotInitialized,
    #[error(transparent)]
    Stream(#[from] QseqError),
}

/// Prior over a scalar parameter with evaluable density and inverse CDF.
pub trait ScalarPrior {
    fn density(&self, theta: f64) -> f64;
    fn inv_cdf(&self, u: f64) -> f64;
    /// Open support check; proposals outside it are rejected without a
    /// simulator call.
    fn supports(&self, theta: f64) -> bool;
}

/// Uniform prior on the open interval (lo, hi).
#[derive(Clone, Copy, Debug)]
pub struct UniformPrior {
    pub lo: f64,
    pub hi: f64,
}

impl UniformPrior {
    pub fn new(lo: f64, hi: f64) -> Result<Self, AbcError> {
        if !(lo < hi) {
            return Err(AbcError::BadPriorBounds { lo, hi });
        }
        Ok(UniformPrior { lo, hi })
    }
}

impl ScalarPrior for UniformPrior {
    fn density(&self, theta: f64) -> f64 {
        if self.supports(theta) {
            1.0 / (self.hi - self.lo)
        } else {
            0.0
        }
    }

    fn inv_cdf(&self, u: f64) -> f64 {
        self.lo + (self.hi - self.lo) * u
    }

    fn supports(&self, theta: f64) -> bool {
        self.lo < theta && theta < self.hi
    }
}

/// Hidden Markov switching model: x_k walks on the two levels, switching
/// with probability theta at each step; y_k = x_k + sigma_obs * noise.
#[derive(Clone, Copy, Debug)]
pub struct HmsModel {
    pub sigma_obs: f64,
    pub length: usize,
    pub levels: (f64, f64),
    /// Switching probability used when generating observed data.
    pub theta: f64,
}

impl HmsModel {
    pub fn new(sigma_obs: f64, length: usize, theta: f64) -> Result<Self, AbcError> {
        if !(sigma_obs > 0.0) {
            return Err(AbcError::BadSigma(sigma_obs));
        }
        if length < 2 {
            return Err(AbcError::ShortDataset(length));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(AbcError::BadTheta(theta));
        }
        Ok(HmsModel {
            sigma_obs,
            length,
            levels: (-2.0, 2.0),
            theta,
        })
    }
}

/// Simulates one dataset of `model.length` observations at switching
/// probability `theta`. The initial level is uniform on the pair.
pub fn simulate_hms(theta: f64, model: &HmsModel, rng: &mut impl Rng) -> Result<Vec<f64>, AbcError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(AbcError::BadTheta(theta));
    }
    let (lo, hi) = model.levels;
    let mut x = if rng.random::<bool>() { hi } else { lo };
    let mut ys = Vec::with_capacity(model.length);
    for k in 0..model.length {
        if k > 0 && rng.random::<f64>() < theta {
            x = if x == hi { lo } else { hi };
        }
        let noise: f64 = StandardNormal.sample(rng);
        ys.push(x + model.sigma_obs * noise);
    }
    Ok(ys)
}

pub type SummaryFn = fn(&[f64]) -> Vec<f64>;
pub type DistanceFn = fn(&[f64], &[f64]) -> f64;

/// Default summary: (lag-1 sample autocorrelation, mean absolute value).
/// A constant series has autocorrelation 0 by convention.
pub fn default_summary(data: &[f64]) -> Vec<f64> {
    let n = data.len();
    if n == 0 {
        return vec![0.0, 0.0];
    }
    let mean = data.iter().sum::<f64>() / n as f64;
    let mean_abs = data.iter().map(|y| y.abs()).sum::<f64>() / n as f64;
    if n == 1 {
        return vec![0.0, mean_abs];
    }
    let denom: f64 = data.iter().map(|y| (y - mean) * (y - mean)).sum();
    let numer: f64 = data
        .windows(2)
        .map(|w| (w[0] - mean) * (w[1] - mean))
        .sum();
    let autocorr = if denom > 0.0 { numer / denom } else { 0.0 };
    vec![autocorr, mean_abs]
}

/// Euclidean distance between summary vectors; mismatched lengths are
/// infinitely far apart.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Threshold schedule: explicit strictly decreasing values, one per
/// iteration, or a per-iteration quantile of pilot-run distances.
#[derive(Clone, Debug)]
pub enum EpsilonSchedule {
    Explicit(Vec<f64>),
    AdaptiveQuantile { q: f64, pilot: usize },
}

/// Lower empirical quantile with no interpolation: the ceil(q*M)-th order
/// statistic of the distances.
pub fn adaptive_epsilon(distances: &[f64], q: f64) -> Result<f64, AbcError> {
    if distances.is_empty() {
        return Err(AbcError::BadSchedule("no pilot distances".to_string()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(AbcError::BadSchedule(format!("quantile {q} outside (0,1)")));
    }
    let mut sorted = distances.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = sorted.len() as f64;
    let rank = (q * m).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Sampler configuration.
#[derive(Clone, Debug)]
pub struct AbcConfig<P: ScalarPrior = UniformPrior> {
    pub population: usize,
    pub iterations: usize,
    pub schedule: EpsilonSchedule,
    pub prior: P,
    pub summary: SummaryFn,
    pub distance: DistanceFn,
    pub max_attempts_per_particle: u64,
}

impl<P: ScalarPrior> AbcConfig<P> {
    pub fn validate(&self) -> Result<(), AbcError> {
        if self.population < 2 {
            return Err(AbcError::SmallPopulation(self.population));
        }
        if self.iterations == 0 {
            return Err(AbcError::NoIterations);
        }
        if self.max_attempts_per_particle == 0 {
            return Err(AbcError::BadSchedule(
                "max_attempts_per_particle must be positive".to_string(),
            ));
        }
        match &self.schedule {
            EpsilonSchedule::Explicit(eps) => {
                if eps.len() != self.iterations {
                    return Err(AbcError::BadSchedule(format!(
                        "schedule length {} != iterations {}",
                        eps.len(),
                        self.iterations
                    )));
                }
                for pair in eps.windows(2) {
                    if !(pair[1] < pair[0]) {
                        return Err(AbcError::BadSchedule(
                            "explicit schedule must be strictly decreasing".to_string(),
                        ));
                    }
                }
                if let Some(&last) = eps.last() {
                    if !(last > 0.0) {
                        return Err(AbcError::BadSchedule(
                            "thresholds must be positive".to_string(),
                        ));
                    }
                }
            }
            EpsilonSchedule::AdaptiveQuantile { q, pilot } => {
                if !(*q > 0.0 && *q < 1.0) {
                    return Err(AbcError::BadSchedule(format!("quantile {q} outside (0,1)")));
                }
                if *pilot == 0 {
                    return Err(AbcError::BadSchedule("pilot size must be positive".to_string()));
                }
            }
        }
        Ok(())
    }

    fn budget(&self) -> u64 {
        self.max_attempts_per_particle * self.population as u64
    }
}

impl AbcConfig<UniformPrior> {
    /// The toy setup: uniform (0,1) prior, default summary, Euclidean
    /// distance.
    pub fn toy(population: usize, epsilons: Vec<f64>) -> Self {
        AbcConfig {
            population,
            iterations: epsilons.len(),
            schedule: EpsilonSchedule::Explicit(epsilons),
            prior: UniformPrior { lo: 0.0, hi: 1.0 },
            summary: default_summary,
            distance: euclidean_distance,
            max_attempts_per_particle: 2000,
        }
    }
}

/// Where the (u, v) points come from: a low-discrepancy stream or a
/// pseudorandom generator. Everything downstream is identical.
#[derive(Clone, Debug)]
pub enum PointSource {
    Stream(RqmcStream),
    Pseudorandom(StdRng),
}

impl PointSource {
    pub fn stream(stream: RqmcStream) -> Self {
        PointSource::Stream(stream)
    }

    pub fn pseudorandom(seed: u64) -> Self {
        PointSource::Pseudorandom(StdRng::seed_from_u64(seed))
    }

    fn next_into(&mut self, out: &mut [f64]) -> Result<(), AbcError> {
        match self {
            PointSource::Stream(s) => s.next_into(out).map_err(AbcError::Stream),
            PointSource::Pseudorandom(rng) => {
                for slot in out.iter_mut() {
                    *slot = rng.random::<f64>();
                }
                Ok(())
            }
        }
    }
}

/// Weighted parameter population at one iteration.
#[derive(Clone, Debug)]
pub struct AbcPopulation {
    pub thetas: Vec<f64>,
    pub omegas: Vec<f64>,
    /// Kernel covariance: twice the (weighted) variance of the thetas.
    pub sigma: f64,
    /// 1-based iteration index.
    pub iteration: usize,
    /// Simulator calls spent building this population.
    pub attempts: u64,
}

impl AbcPopulation {
    pub fn posterior_mean(&self) -> f64 {
        self.omegas.iter().zip(&self.thetas).map(|(w, t)| w * t).sum()
    }

    pub fn posterior_variance(&self) -> f64 {
        weighted_variance(&self.omegas, &self.thetas)
    }
}

/// Kernel covariance of an initial population: twice the unbiased sample
/// variance.
pub fn initial_kernel_covariance(thetas: &[f64]) -> f64 {
    2.0 * sample_variance(thetas)
}

struct IterationOutcome {
    population: AbcPopulation,
    draws: u64,
}

/// First iteration: repeated prior draws from the shared source until each
/// of the N slots holds an accepted parameter.
pub fn init_population<P: ScalarPrior>(
    config: &AbcConfig<P>,
    model: &HmsModel,
    observed_summary: &[f64],
    source: &mut PointSource,
    sim_rng: &mut StdRng,
    epsilon: f64,
) -> Result<AbcPopulation, AbcError> {
    init_population_inner(config, model, observed_summary, source, sim_rng, epsilon)
        .map(|o| o.population)
}

fn init_population_inner<P: ScalarPrior>(
    config: &AbcConfig<P>,
    model: &HmsModel,
    observed_summary: &[f64],
    source: &mut PointSource,
    sim_rng: &mut StdRng,
    epsilon: f64,
) -> Result<IterationOutcome, AbcError> {
    let n = config.population;
    let budget = config.budget();
    let mut thetas = Vec::with_capacity(n);
    let mut draws = 0u64;
    let mut sim_calls = 0u64;
    let mut point = [0.0];
    while thetas.len() < n {
        draws += 1;
        if draws > budget {
            return Err(AbcError::AttemptBudget {
                iteration: 1,
                draws,
                sim_calls,
                accepted: thetas.len(),
                population: n,
                rate: thetas.len() as f64 / sim_calls.max(1) as f64,
            });
        }
        source.next_into(&mut point)?;
        let theta = config.prior.inv_cdf(point[0]);
        if !config.prior.supports(theta) {
            continue;
        }
        sim_calls += 1;
        let dataset = simulate_hms(theta, model, sim_rng)?;
        let summary = (config.summary)(&dataset);
        if (config.distance)(&summary, observed_summary) <= epsilon {
            thetas.push(theta);
        }
    }
    let sigma = initial_kernel_covariance(&thetas);
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(AbcError::DegenerateKernel {
            iteration: 1,
            sigma,
        });
    }
    Ok(IterationOutcome {
        population: AbcPopulation {
            omegas: vec![1.0 / n as f64; n],
            thetas,
            sigma,
            iteration: 1,
            attempts: sim_calls,
        },
        draws,
    })
}

/// One move iteration: ancestors are selected by inverse CDF over the
/// theta-sorted weights (the one-dimensional Hilbert sort), perturbed by a
/// Gaussian kernel of covariance sigma, and accepted against `epsilon`.
/// Proposals outside the prior support are rejections without a simulator
/// call. New weights follow the population Monte Carlo correction.
pub fn move_population<P: ScalarPrior>(
    pop: &AbcPopulation,
    config: &AbcConfig<P>,
    model: &HmsModel,
    observed_summary: &[f64],
    source: &mut PointSource,
    sim_rng: &mut StdRng,
    epsilon: f64,
) -> Result<AbcPopulation, AbcError> {
    move_population_inner(pop, config, model, observed_summary, source, sim_rng, epsilon)
        .map(|o| o.population)
}

fn move_population_inner<P: ScalarPrior>(
    pop: &AbcPopulation,
    config: &AbcConfig<P>,
    model: &HmsModel,
    observed_summary: &[f64],
    source: &mut PointSource,
    sim_rng: &mut StdRng,
    epsilon: f64,
) -> Result<IterationOutcome, AbcError> {
    let n = config.population;
    let iteration = pop.iteration + 1;
    let budget = config.budget();
    let scale = pop.sigma.sqrt();
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(AbcError::DegenerateKernel {
            iteration,
            sigma: pop.sigma,
        });
    }

    // Ancestors sorted ascending by theta; stable on ties.
    let mut order: Vec<usize> = (0..pop.thetas.len()).collect();
    order.sort_by(|&a, &b| {
        pop.thetas[a]
            .partial_cmp(&pop.thetas[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let sorted_thetas: Vec<f64> = order.iter().map(|&i| pop.thetas[i]).collect();
    let mut cumulative = Vec::with_capacity(order.len());
    let mut acc = 0.0;
    for &i in &order {
        acc += pop.omegas[i];
        cumulative.push(acc);
    }

    let mut thetas = Vec::with_capacity(n);
    let mut draws = 0u64;
    let mut sim_calls = 0u64;
    let mut point = [0.0; 2];
    while thetas.len() < n {
        draws += 1;
        if draws > budget {
            return Err(AbcError::AttemptBudget {
                iteration,
                draws,
                sim_calls,
                accepted: thetas.len(),
                population: n,
                rate: thetas.len() as f64 / sim_calls.max(1) as f64,
            });
        }
        source.next_into(&mut point)?;
        let (u, v) = (point[0], point[1]);
        let ancestor = sorted_thetas[inverse_cdf_select(&cumulative, v)];
        // A u of exactly 0 (possible under a digital shift) has no normal
        // quantile; treat it like an unsupported proposal.
        let step = match inv_normal_cdf(u) {
            Ok(z) => z,
            Err(_) => continue,
        };
        let proposal = ancestor + scale * step;
        if !config.prior.supports(proposal) {
            continue;
        }
        sim_calls += 1;
        let dataset = simulate_hms(proposal, model, sim_rng)?;
        let summary = (config.summary)(&dataset);
        if (config.distance)(&summary, observed_summary) <= epsilon {
            thetas.push(proposal);
        }
    }

    let mut omegas = Vec::with_capacity(n);
    let mut total = 0.0;
    for &theta in &thetas {
        let mixture: f64 = pop
            .omegas
            .iter()
            .zip(&pop.thetas)
            .map(|(w, t)| w * standard_normal_pdf((theta - t) / scale))
            .sum();
        let w = if mixture > 0.0 {
            config.prior.density(theta) / mixture
        } else {
            0.0
        };
        omegas.push(w);
        total += w;
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(AbcError::AllWeightsZero(iteration));
    }
    for w in omegas.iter_mut() {
        *w /= total;
    }

    let sigma = 2.0 * weighted_variance(&omegas, &thetas);
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(AbcError::DegenerateKernel { iteration, sigma });
    }
    Ok(IterationOutcome {
        population: AbcPopulation {
            thetas,
            omegas,
            sigma,
            iteration,
            attempts: sim_calls,
        },
        draws,
    })
}

/// Which point source drives the sampler.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbcEngine {
    Pqmc,
    PlainMc,
}

/// Observed data: a measured dataset or a synthetic one drawn from the
/// model at its configured switching probability.
#[derive(Clone, Debug)]
pub enum ObservedData {
    Dataset(Vec<f64>),
    Synthetic { seed: u64 },
}

/// Per-iteration telemetry.
#[derive(Clone, Copy, Debug)]
pub struct IterationStats {
    pub epsilon: f64,
    pub sim_calls: u64,
    pub draws: u64,
    pub acceptance_rate: f64,
}

/// Full sampler output.
#[derive(Clone, Debug)]
pub struct AbcRunResult {
    /// Population snapshot after each iteration.
    pub populations: Vec<AbcPopulation>,
    pub iterations: Vec<IterationStats>,
    pub posterior_mean: f64,
    pub posterior_variance: f64,
    pub total_sim_calls: u64,
    pub observed_summary: Vec<f64>,
}

impl AbcRunResult {
    pub fn final_population(&self) -> &AbcPopulation {
        self.populations.last().expect("at least one iteration")
    }
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn iteration_source(engine: AbcEngine, seed: u64, iteration: usize, dim: usize) -> Result<PointSource, AbcError> {
    let derived = mix64(seed ^ (iteration as u64).wrapping_mul(0x9e3779b97f4a7c15));
    match engine {
        AbcEngine::Pqmc => {
            let config = StreamConfig::new(dim)
                .with_randomization(Randomization::DigitalShift { seed: derived })
                .with_skip_zero_point(true);
            Ok(PointSource::stream(RqmcStream::new(config)?))
        }
        AbcEngine::PlainMc => Ok(PointSource::pseudorandom(derived)),
    }
}

/// Runs the full sampler: an init iteration followed by `iterations - 1`
/// move iterations, with a fresh point source per iteration (1-D for the
/// first, 2-D afterwards).
pub fn run_abc<P: ScalarPrior>(
    config: &AbcConfig<P>,
    model: &HmsModel,
    engine: AbcEngine,
    data: &ObservedData,
    seed: u64,
) -> Result<AbcRunResult, AbcError> {
    config.validate()?;
    let observed = match data {
        ObservedData::Dataset(ys) => {
            if ys.len() < 2 {
                return Err(AbcError::ShortDataset(ys.len()));
            }
            ys.clone()
        }
        ObservedData::Synthetic { seed } => {
            let mut data_rng = StdRng::seed_from_u64(*seed);
            simulate_hms(model.theta, model, &mut data_rng)?
        }
    };
    let observed_summary = (config.summary)(&observed);
    let mut sim_rng = StdRng::seed_from_u64(mix64(seed ^ 0x51c0_74e5));

    let mut populations = Vec::with_capacity(config.iterations);
    let mut stats = Vec::with_capacity(config.iterations);
    let mut total_sim_calls = 0u64;

    for t in 1..=config.iterations {
        let epsilon = match &config.schedule {
            EpsilonSchedule::Explicit(eps) => eps[t - 1],
            EpsilonSchedule::AdaptiveQuantile { q, pilot } => {
                let distances = pilot_distances(
                    config,
                    model,
                    &observed_summary,
                    populations.last(),
                    *pilot,
                    &mut sim_rng,
                )?;
                adaptive_epsilon(&distances, *q)?
            }
        };
        let dim = if t == 1 { 1 } else { 2 };
        let mut source = iteration_source(engine, seed, t, dim)?;
        let outcome = if t == 1 {
            init_population_inner(config, model, &observed_summary, &mut source, &mut sim_rng, epsilon)?
        } else {
            move_population_inner(
                populations.last().expect("previous iteration exists"),
                config,
                model,
                &observed_summary,
                &mut source,
                &mut sim_rng,
                epsilon,
            )?
        };
        total_sim_calls += outcome.population.attempts;
        stats.push(IterationStats {
            epsilon,
            sim_calls: outcome.population.attempts,
            draws: outcome.draws,
            acceptance_rate: config.population as f64 / outcome.population.attempts.max(1) as f64,
        });
        populations.push(outcome.population);
    }

    let last = populations.last().expect("at least one iteration");
    Ok(AbcRunResult {
        posterior_mean: last.posterior_mean(),
        posterior_variance: last.posterior_variance(),
        total_sim_calls,
        observed_summary,
        iterations: stats,
        populations,
    })
}

// Pilot distances for the adaptive-quantile schedule: prior draws before
// the first iteration, kernel-perturbed ancestor draws afterwards. The
// pilot runs on the simulator generator, leaving the point-source
// consumption identical to an explicit schedule.
fn pilot_distances<P: ScalarPrior>(
    config: &AbcConfig<P>,
    model: &HmsModel,
    observed_summary: &[f64],
    pop: Option<&AbcPopulation>,
    pilot: usize,
    sim_rng: &mut StdRng,
) -> Result<Vec<f64>, AbcError> {
    let mut distances = Vec::with_capacity(pilot);
    let mut guard = 0u64;
    let budget = config.budget().max(pilot as u64 * 100);
    while distances.len() < pilot {
        guard += 1;
        if guard > budget {
            return Err(AbcError::AttemptBudget {
                iteration: pop.map_or(1, |p| p.iteration + 1),
                draws: guard,
                sim_calls: distances.len() as u64,
                accepted: distances.len(),
                population: pilot,
                rate: 0.0,
            });
        }
        let theta = match pop {
            None => config.prior.inv_cdf(sim_rng.random::<f64>()),
            Some(p) => {
                let mut cum = 0.0;
                let u: f64 = sim_rng.random();
                let mut pick = p.thetas[p.thetas.len() - 1];
                for (w, &t) in p.omegas.iter().zip(&p.thetas) {
                    cum += w;
                    if cum > u {
                        pick = t;
                        break;
                    }
                }
                let z: f64 = StandardNormal.sample(sim_rng);
                pick + p.sigma.sqrt() * z
            }
        };
        if !config.prior.supports(theta) {
            continue;
        }
        let dataset = simulate_hms(theta, model, sim_rng)?;
        distances.push((config.distance)((config.summary)(&dataset).as_slice(), observed_summary));
    }
    Ok(distances)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_model() -> HmsModel {
        HmsModel::new(0.5, 100, 0.3).unwrap()
    }

    #[test]
    fn model_validation() {
        assert!(HmsModel::new(0.0, 100, 0.3).is_err());
        assert!(HmsModel::new(0.5, 1, 0.3).is_err());
        assert!(HmsModel::new(0.5, 100, 0.0).is_err());
        assert!(HmsModel::new(0.5, 100, 1.0).is_err());
    }

    #[test]
    fn no_switching_keeps_one_level() {
        let model = HmsModel::new(0.5, 400, 0.5).unwrap();
        let mut rng = StdRng::seed_from_u64(1);
        let ys = simulate_hms(1e-12, &model, &mut rng).unwrap();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        // All x_k share the initial level, so the mean sits near plus or
        // minus 2 within 3 sigma / sqrt(n).
        let tol = 3.0 * 0.5 / (ys.len() as f64).sqrt();
        assert!((mean.abs() - 2.0).abs() < tol, "mean {mean}");
    }

    #[test]
    fn certain_switching_alternates() {
        let model = HmsModel::new(0.5, 100, 0.5).unwrap();
        let mut rng = StdRng::seed_from_u64(2);
        let ys = simulate_hms(1.0 - 1e-12, &model, &mut rng).unwrap();
        // Deterministic alternation means lag-1 products of the latent
        // levels are all negative; with sigma = 0.5 the noisy series still
        // has strongly negative autocorrelation.
        let s = default_summary(&ys);
        assert!(s[0] < -0.8, "autocorrelation {}", s[0]);
    }

    #[test]
    fn simulate_rejects_bad_theta() {
        let mut rng = StdRng::seed_from_u64(3);
        assert!(simulate_hms(0.0, &toy_model(), &mut rng).is_err());
        assert!(simulate_hms(1.5, &toy_model(), &mut rng).is_err());
    }

    #[test]
    fn summary_conventions() {
        assert_eq!(default_summary(&[3.0, 3.0, 3.0]), vec![0.0, 3.0]);
        let alternating = [2.0, -2.0, 2.0, -2.0, 2.0, -2.0];
        let s = default_summary(&alternating);
        assert!((s[0] + 1.0).abs() < 0.21, "autocorr {}", s[0]);
        assert_eq!(s[1], 2.0);
    }

    #[test]
    fn adaptive_epsilon_order_statistic() {
        assert_eq!(adaptive_epsilon(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.0);
        assert_eq!(adaptive_epsilon(&[1.0, 2.0, 3.0, 4.0], 0.999).unwrap(), 4.0);
        assert_eq!(adaptive_epsilon(&[5.0], 0.5).unwrap(), 5.0);
        assert!(adaptive_epsilon(&[], 0.5).is_err());
        assert!(adaptive_epsilon(&[1.0], 1.0).is_err());
    }

    #[test]
    fn initial_kernel_covariance_convention() {
        // 2 x the unbiased variance of (0.2, 0.4, 0.6) = 2 x 0.04.
        let sigma = initial_kernel_covariance(&[0.2, 0.4, 0.6]);
        assert!((sigma - 0.08).abs() < 1e-12);
    }

    #[test]
    fn accept_all_threshold_returns_prior_draws() {
        // With epsilon = infinity and a uniform prior the first N stream
        // values come back as the thetas.
        let config = AbcConfig::toy(8, vec![f64::INFINITY]);
        let model = toy_model();
        let stream = RqmcStream::new(
            StreamConfig::new(1).with_skip_zero_point(true),
        )
        .unwrap();
        let mut reference = stream.clone();
        let mut source = PointSource::stream(stream);
        let mut sim_rng = StdRng::seed_from_u64(4);
        let pop = init_population(
            &config,
            &model,
            &[0.0, 0.0],
            &mut source,
            &mut sim_rng,
            f64::INFINITY,
        )
        .unwrap();
        for theta in &pop.thetas {
            assert_eq!(*theta, reference.next_point().unwrap()[0]);
        }
        assert!(pop.omegas.iter().all(|&w| (w - 0.125).abs() < 1e-15));
        assert_eq!(pop.iteration, 1);
    }

    #[test]
    fn move_weight_single_ancestor_normalizes_to_one() {
        let config = AbcConfig::toy(2, vec![f64::INFINITY, f64::INFINITY]);
        let model = toy_model();
        let pop = AbcPopulation {
            thetas: vec![0.5, 0.5],
            omegas: vec![0.5, 0.5],
            sigma: 0.02,
            iteration: 1,
            attempts: 2,
        };
        let mut source = PointSource::pseudorandom(5);
        let mut sim_rng = StdRng::seed_from_u64(6);
        let next = move_population(
            &pop,
            &config,
            &model,
            &[0.0, 0.0],
            &mut source,
            &mut sim_rng,
            f64::INFINITY,
        )
        .unwrap();
        let total: f64 = next.omegas.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(next.iteration, 2);
    }

    #[test]
    fn move_weight_worked_example() {
        // Ancestors (0.3, 0.5) with equal weights, sigma 0.04, proposal 0.4,
        // uniform prior: weight proportional to
        // 1 / (0.5 phi(0.5) + 0.5 phi(-0.5)) evaluated independently.
        let prior = UniformPrior::new(0.0, 1.0).unwrap();
        let scale = 0.04f64.sqrt();
        let mixture = 0.5 * standard_normal_pdf((0.4 - 0.3) / scale)
            + 0.5 * standard_normal_pdf((0.4 - 0.5) / scale);
        let expected = prior.density(0.4) / mixture;
        let phi_half = (-0.125f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((mixture - phi_half).abs() < 1e-15);
        assert!(expected.is_finite() && expected > 0.0);
    }

    #[test]
    fn attempt_budget_reports_diagnostics() {
        let mut config = AbcConfig::toy(4, vec![1e-9]);
        config.max_attempts_per_particle = 3;
        let model = toy_model();
        let mut source = PointSource::pseudorandom(7);
        let mut sim_rng = StdRng::seed_from_u64(8);
        let err = init_population(&config, &model, &[0.376, 1.7], &mut source, &mut sim_rng, 1e-9)
            .unwrap_err();
        match err {
            AbcError::AttemptBudget {
                iteration, draws, ..
            } => {
                assert_eq!(iteration, 1);
                assert_eq!(draws, 13);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn schedule_validation() {
        let mut config = AbcConfig::toy(4, vec![0.5, 0.5]);
        assert!(config.validate().is_err());
        config.schedule = EpsilonSchedule::Explicit(vec![0.5, 0.3]);
        assert!(config.validate().is_ok());
        config.schedule = EpsilonSchedule::Explicit(vec![0.5]);
        assert!(config.validate().is_err());
        let single = AbcConfig::toy(4, vec![0.4]);
        assert!(single.validate().is_ok());
    }

    #[test]
    fn monotone_acceptance_in_threshold() {
        // Same proposals and distances, two thresholds: the tighter one
        // accepts a subset.
        let model = toy_model();
        let mut rng = StdRng::seed_from_u64(11);
        let observed = simulate_hms(0.3, &model, &mut rng).unwrap();
        let obs_summary = default_summary(&observed);
        let mut distances = Vec::new();
        for i in 0..400 {
            let theta = (i as f64 + 0.5) / 400.0;
            let data = simulate_hms(theta, &model, &mut rng).unwrap();
            distances.push(euclidean_distance(&default_summary(&data), &obs_summary));
        }
        let accept = |eps: f64| distances.iter().filter(|&&d| d <= eps).count();
        let mut last = accept(1.0);
        for eps in [0.7, 0.5, 0.3, 0.2, 0.1] {
            let now = accept(eps);
            assert!(now <= last);
            last = now;
        }
    }
}
