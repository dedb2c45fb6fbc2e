//! Sequential inference for Dirichlet-process mixture models through the
//! Polya-urn representation: discrete allocation states propagated by an
//! inverse-CDF transform of the predictive probabilities, runnable under
//! both the pseudorandom and the quasi-Monte Carlo engines.
//!
//! The conjugate family is a Normal kernel with known variance and a Normal
//! base measure, so the cluster predictives are closed-form. A Pitman-Yor
//! discount is exposed and defaults to zero.

use rand::rngs::StdRng;
use rand::SeedableRng;
use thiserror::Error;

use crate::hilbert::HilbertMap;
use crate::qseq::{derive_stream_seed, Randomization, RqmcStream, StreamConfig};
use crate::smc::{ParticleSystem, ResampleScheme, SmcError, TransitionKernel};
use crate::stats::{logistic, normal_pdf};

#[derive(Debug, Error)]
pub enum DpmError {
    #[error("alpha must be positive, got {0}")]
    BadAlpha(f64),
    #[error("variance must be positive, got {0}")]
    BadVariance(f64),
    #[error("discount must lie in [0,1), got {0}")]
    BadDiscount(f64),
    #[error("observation {0} is not finite")]
    NonFiniteObservation(f64),
    #[error("uniform {0} lies outside [0,1)")]
    UniformOutOfRange(f64),
    #[error("label {label} out of range 1..={max}")]
    BadLabel { label: usize, max: usize },
    #[error("data must be nonempty")]
    EmptyData,
    #[error("need at least 2 particles, got {0}")]
    TooFewParticles(usize),
    #[error(transparent)]
    Smc(#[from] SmcError),
}

/// Dirichlet-process mixture with Normal kernel of known variance and
/// Normal base measure N(base_mean, base_var).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DpmModel {
    pub alpha: f64,
    pub base_mean: f64,
    pub base_var: f64,
    pub kernel_var: f64,
    pub discount: f64,
}

impl DpmModel {
    pub fn new(
        alpha: f64,
        base_mean: f64,
        base_var: f64,
        kernel_var: f64,
        discount: f64,
    ) -> Result<Self, DpmError> {
        if !(alpha > 0.0) {
            return Err(DpmError::BadAlpha(alpha));
        }
        if !(base_var > 0.0) {
            return Err(DpmError::BadVariance(base_var));
        }
        if !(kernel_var > 0.0) {
            return Err(DpmError::BadVariance(kernel_var));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(DpmError::BadDiscount(discount));
        }
        Ok(DpmModel {
            alpha,
            base_mean,
            base_var,
            kernel_var,
            discount,
        })
    }
}

/// Per-cluster sufficient statistics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClusterStats {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl ClusterStats {
    fn absorb(&mut self, y: f64) {
        self.count += 1;
        self.sum += y;
        self.sum_sq += y * y;
    }
}

/// An allocation history with cluster labels 1..=k in order of first
/// appearance and matching sufficient statistics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DpmParticle {
    allocations: Vec<usize>,
    clusters: Vec<ClusterStats>,
}

impl DpmParticle {
    pub fn empty() -> Self {
        DpmParticle::default()
    }

    /// Number of observations absorbed so far.
    pub fn t(&self) -> usize {
        self.allocations.len()
    }

    /// Current cluster count k_t.
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn allocations(&self) -> &[usize] {
        &self.allocations
    }

    pub fn clusters(&self) -> &[ClusterStats] {
        &self.clusters
    }

    /// Absorbs `y` into cluster `label`; `cluster_count() + 1` opens a new
    /// cluster.
    pub fn assign(&mut self, label: usize, y: f64) -> Result<(), DpmError> {
        let k = self.clusters.len();
        if label == 0 || label > k + 1 {
            return Err(DpmError::BadLabel { label, max: k + 1 });
        }
        if label == k + 1 {
            self.clusters.push(ClusterStats::default());
        }
        self.clusters[label - 1].absorb(y);
        self.allocations.push(label);
        Ok(())
    }

    /// Relabels clusters by order of first appearance. Particles built
    /// through `assign` are already canonical, so this is idempotent.
    pub fn canonicalize(&self) -> DpmParticle {
        let mut remap: Vec<Option<usize>> = vec![None; self.clusters.len()];
        let mut clusters = Vec::with_capacity(self.clusters.len());
        let mut allocations = Vec::with_capacity(self.allocations.len());
        for &label in &self.allocations {
            let old = label - 1;
            let new = match remap[old] {
                Some(n) => n,
                None => {
                    let n = clusters.len();
                    remap[old] = Some(n);
                    clusters.push(self.clusters[old].clone());
                    n
                }
            };
            allocations.push(new + 1);
        }
        DpmParticle {
            allocations,
            clusters,
        }
    }
}

/// Marginal density of a new observation under the base measure alone:
/// Normal(y; m0, v0 + kernel_var).
pub fn marginal_k0(y: f64, model: &DpmModel) -> f64 {
    normal_pdf(y, model.base_mean, model.base_var + model.kernel_var)
}

/// Posterior-predictive mean and variance of a cluster's next observation.
fn posterior_predictive(stats: &ClusterStats, model: &DpmModel) -> (f64, f64) {
    let precision = 1.0 / model.base_var + stats.count as f64 / model.kernel_var;
    let post_var = 1.0 / precision;
    let post_mean = (model.base_mean / model.base_var + stats.sum / model.kernel_var) * post_var;
    (post_mean, post_var + model.kernel_var)
}

/// Marginal density of a new observation given a cluster's sufficient
/// statistics. An empty cluster reduces to `marginal_k0`.
pub fn marginal_kj(y: f64, stats: &ClusterStats, model: &DpmModel) -> f64 {
    let (mean, var) = posterior_predictive(stats, model);
    normal_pdf(y, mean, var)
}

/// The normalized allocation probabilities for the next observation plus
/// the predictive density it normalizes to.
#[derive(Clone, Debug)]
pub struct Predictive {
    /// Probability of each existing cluster 1..=k, then of a new one.
    pub probabilities: Vec<f64>,
    /// Marginal density of the observation given the history.
    pub density: f64,
}

/// Allocation law of the next observation: existing cluster j gets mass
/// (n_j - discount) K_j(y), a new cluster gets (alpha + discount k) K_0(y).
/// The returned density divides the total mass by (alpha + t), which makes
/// it the exact one-step predictive and the filter's incremental weight.
pub fn predictive(particle: &DpmParticle, y: f64, model: &DpmModel) -> Result<Predictive, DpmError> {
    if !y.is_finite() {
        return Err(DpmError::NonFiniteObservation(y));
    }
    let k = particle.cluster_count();
    let mut unnormalized = Vec::with_capacity(k + 1);
    let mut total = 0.0;
    for stats in particle.clusters() {
        let mass = (stats.count as f64 - model.discount) * marginal_kj(y, stats, model);
        unnormalized.push(mass);
        total += mass;
    }
    let new_mass = (model.alpha + model.discount * k as f64) * marginal_k0(y, model);
    unnormalized.push(new_mass);
    total += new_mass;
    let density = total / (model.alpha + particle.t() as f64);
    for mass in unnormalized.iter_mut() {
        *mass /= total;
    }
    Ok(Predictive {
        probabilities: unnormalized,
        density,
    })
}

/// Just the normalized allocation probabilities.
pub fn predictive_weights(
    particle: &DpmParticle,
    y: f64,
    model: &DpmModel,
) -> Result<Vec<f64>, DpmError> {
    predictive(particle, y, model).map(|p| p.probabilities)
}

/// Deterministic allocation transform: the smallest label whose cumulative
/// probability strictly exceeds `u`. Labels are 1-based; the last label
/// means "new cluster".
pub fn select_allocation(probabilities: &[f64], u: f64) -> Result<usize, DpmError> {
    if !(0.0..1.0).contains(&u) {
        return Err(DpmError::UniformOutOfRange(u));
    }
    let mut cum = 0.0;
    for (j, &p) in probabilities.iter().enumerate() {
        cum += p;
        if cum > u {
            return Ok(j + 1);
        }
    }
    // Cumulative never exceeded u due to rounding; take the last label
    // carrying mass.
    let last = probabilities
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probabilities.len() - 1);
    Ok(last + 1)
}

/// Mean of the one-step predictive density given the history.
pub fn predictive_mean(particle: &DpmParticle, model: &DpmModel) -> f64 {
    let denom = model.alpha + particle.t() as f64;
    let k = particle.cluster_count();
    let mut mean = (model.alpha + model.discount * k as f64) / denom * model.base_mean;
    for stats in particle.clusters() {
        let (post_mean, _) = posterior_predictive(stats, model);
        mean += (stats.count as f64 - model.discount) / denom * post_mean;
    }
    mean
}

/// Two-coordinate summary of a discrete allocation history used as the
/// Hilbert sort key: (logistic of the predictive mean, k/(k+1)).
pub fn particle_projection(particle: &DpmParticle, model: &DpmModel) -> [f64; 2] {
    let k = particle.cluster_count() as f64;
    let loc = logistic(predictive_mean(particle, model)).min(1.0 - 1e-12);
    [loc, k / (k + 1.0)]
}

/// Filter engine choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DpmEngine {
    Smc,
    Sqmc,
}

/// Output of a filter run: the weighted posterior over the final cluster
/// count, the evidence estimate, and the weighted particles themselves for
/// predictive evaluation.
#[derive(Clone, Debug)]
pub struct DpmRunResult {
    model: DpmModel,
    particles: Vec<DpmParticle>,
    weights: Vec<f64>,
    /// P(k_T = j) at index j - 1, padded to the data length.
    pub k_posterior: Vec<f64>,
    pub log_marginal_likelihood: f64,
    /// Log evidence after each step.
    pub log_evidence_path: Vec<f64>,
}

impl DpmRunResult {
    /// Posterior predictive density of a new observation.
    pub fn predictive_density(&self, y: f64) -> Result<f64, DpmError> {
        let mut total = 0.0;
        for (particle, w) in self.particles.iter().zip(&self.weights) {
            total += w * predictive(particle, y, &self.model)?.density;
        }
        Ok(total)
    }

    pub fn particles(&self) -> &[DpmParticle] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

struct DpmKernel {
    model: DpmModel,
}

impl TransitionKernel for DpmKernel {
    type State = DpmParticle;
    type Observation = f64;

    fn u_dim(&self) -> usize {
        1
    }

    fn propagate(&self, prev: &DpmParticle, obs: &f64, u: &[f64]) -> DpmParticle {
        let pred = predictive(prev, *obs, &self.model).expect("observations validated up front");
        let label = select_allocation(&pred.probabilities, u[0])
            .expect("stream uniforms lie in [0,1)");
        let mut next = prev.clone();
        next.assign(label, *obs).expect("label within range");
        next
    }

    fn incremental_weight(&self, prev: &DpmParticle, _new: &DpmParticle, obs: &f64) -> f64 {
        predictive(prev, *obs, &self.model)
            .expect("observations validated up front")
            .density
    }
}

/// Runs the sequential filter over `data` with `n_particles` particles.
///
/// The proposal is the prior predictive, so the incremental weight of every
/// particle is its predictive density and the evidence estimate is the
/// running product of mean predictive densities.
pub fn run_dpm_filter(
    data: &[f64],
    model: &DpmModel,
    n_particles: usize,
    engine: DpmEngine,
    seed: u64,
) -> Result<DpmRunResult, DpmError> {
    run_dpm_filter_observed(data, model, n_particles, engine, seed, |_, _| {})
}

/// As [`run_dpm_filter`], invoking `observer` with the 1-based step index
/// and the particle system after every step (for trajectory dumps).
pub fn run_dpm_filter_observed(
    data: &[f64],
    model: &DpmModel,
    n_particles: usize,
    engine: DpmEngine,
    seed: u64,
    mut observer: impl FnMut(usize, &ParticleSystem<DpmParticle>),
) -> Result<DpmRunResult, DpmError> {
    if data.is_empty() {
        return Err(DpmError::EmptyData);
    }
    if n_particles < 2 {
        return Err(DpmError::TooFewParticles(n_particles));
    }
    for &y in data {
        if !y.is_finite() {
            return Err(DpmError::NonFiniteObservation(y));
        }
    }

    let kernel = DpmKernel { model: *model };
    let mut system =
        ParticleSystem::new(vec![DpmParticle::empty(); n_particles]).map_err(DpmError::Smc)?;
    let mut log_evidence_path = Vec::with_capacity(data.len());

    match engine {
        DpmEngine::Smc => {
            let mut rng = StdRng::seed_from_u64(seed);
            for (t, &y) in data.iter().enumerate() {
                system.smc_step(&kernel, &y, &mut rng, ResampleScheme::Multinomial)?;
                log_evidence_path.push(system.log_norm_const());
                observer(t + 1, &system);
            }
        }
        DpmEngine::Sqmc => {
            let map = HilbertMap::new(2, 16).map_err(SmcError::Hilbert)?;
            let model_copy = *model;
            // One independently randomized point block per step keeps the
            // evidence product unbiased.
            for (t, &y) in data.iter().enumerate() {
                let config = StreamConfig::new(2).with_randomization(Randomization::DigitalShift {
                    seed: derive_stream_seed(seed, t as u64),
                });
                let mut stream = RqmcStream::new(config).map_err(SmcError::Stream)?;
                system.sqmc_step(&kernel, &y, &mut stream, &map, |p| {
                    particle_projection(p, &model_copy).to_vec()
                })?;
                log_evidence_path.push(system.log_norm_const());
                observer(t + 1, &system);
            }
        }
    }

    let mut k_posterior = vec![0.0; data.len()];
    for (particle, w) in system.states().iter().zip(system.weights()) {
        let k = particle.cluster_count();
        if k > k_posterior.len() {
            k_posterior.resize(k, 0.0);
        }
        k_posterior[k - 1] += w;
    }

    Ok(DpmRunResult {
        model: *model,
        particles: system.states().to_vec(),
        weights: system.weights().to_vec(),
        k_posterior,
        log_marginal_likelihood: system.log_norm_const(),
        log_evidence_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> DpmModel {
        DpmModel::new(1.0, 0.0, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn model_validation() {
        assert!(DpmModel::new(0.0, 0.0, 1.0, 1.0, 0.0).is_err());
        assert!(DpmModel::new(1.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(DpmModel::new(1.0, 0.0, 1.0, -1.0, 0.0).is_err());
        assert!(DpmModel::new(1.0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(DpmModel::new(1.0, 0.0, 1.0, 1.0, 0.5).is_ok());
    }

    #[test]
    fn first_observation_has_single_option() {
        let weights = predictive_weights(&DpmParticle::empty(), 1.7, &model()).unwrap();
        assert_eq!(weights, vec![1.0]);
    }

    #[test]
    fn large_alpha_forces_new_cluster() {
        let m = DpmModel::new(1e6, 0.0, 1.0, 1.0, 0.0).unwrap();
        let mut particle = DpmParticle::empty();
        particle.assign(1, 0.0).unwrap();
        let weights = predictive_weights(&particle, 0.0, &m).unwrap();
        assert!(weights[1] >= 0.999);
    }

    #[test]
    fn conjugate_predictive_worked_example() {
        // Cluster {2.0} under m0=0, v0=1, kvar=1: predictive mean 1, var 1.5.
        let stats = ClusterStats {
            count: 1,
            sum: 2.0,
            sum_sq: 4.0,
        };
        let (mean, var) = posterior_predictive(&stats, &model());
        assert!((mean - 1.0).abs() < 1e-14);
        assert!((var - 1.5).abs() < 1e-14);
        let direct = normal_pdf(0.0, 1.0, 1.5);
        assert!((marginal_kj(0.0, &stats, &model()) - direct).abs() < 1e-15);
    }

    #[test]
    fn empty_cluster_reduces_to_base_marginal() {
        let stats = ClusterStats::default();
        for &y in &[-2.0, 0.0, 1.3] {
            assert!((marginal_kj(y, &stats, &model()) - marginal_k0(y, &model())).abs() < 1e-15);
        }
    }

    #[test]
    fn point_mass_base_measure_limit() {
        let m = DpmModel::new(1.0, 0.3, 1e-12, 1.0, 0.0).unwrap();
        for &y in &[-1.0, 0.3, 2.0] {
            let want = normal_pdf(y, 0.3, 1.0);
            assert!((marginal_k0(y, &m) - want).abs() < 1e-9);
        }
    }

    #[test]
    fn allocation_boundary_is_strict() {
        // Cumulative mass equal to u does NOT select; strictly above does.
        assert_eq!(select_allocation(&[0.3, 0.7], 0.3).unwrap(), 2);
        assert_eq!(select_allocation(&[0.3, 0.7], 0.299999).unwrap(), 1);
        assert_eq!(select_allocation(&[0.0, 0.4, 0.6], 0.0).unwrap(), 2);
        assert!(select_allocation(&[1.0], 1.0).is_err());
        assert!(select_allocation(&[1.0], -0.1).is_err());
    }

    #[test]
    fn projection_pins_trivial_cases() {
        let m = model();
        let empty = particle_projection(&DpmParticle::empty(), &m);
        assert_eq!(empty, [logistic(0.0), 0.0]);
        let mut one = DpmParticle::empty();
        one.assign(1, 0.5).unwrap();
        assert_eq!(particle_projection(&one, &m)[1], 0.5);
        // Identical histories project identically.
        let mut other = DpmParticle::empty();
        other.assign(1, 0.5).unwrap();
        assert_eq!(
            particle_projection(&one, &m),
            particle_projection(&other, &m)
        );
    }

    #[test]
    fn canonicalize_is_idempotent_and_preserves_predictives() {
        let mut p = DpmParticle::empty();
        for (label, y) in [(1, 0.1), (2, -0.5), (1, 0.2), (3, 1.0), (2, -0.4)] {
            p.assign(label, y).unwrap();
        }
        let canon = p.canonicalize();
        assert_eq!(canon, p);
        assert_eq!(canon.canonicalize(), canon);
        let a = predictive_weights(&p, 0.3, &model()).unwrap();
        let b = predictive_weights(&canon, 0.3, &model()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn suffstats_track_assignments() {
        let mut p = DpmParticle::empty();
        p.assign(1, 1.0).unwrap();
        p.assign(2, 2.0).unwrap();
        p.assign(1, 3.0).unwrap();
        assert_eq!(p.t(), 3);
        assert_eq!(p.cluster_count(), 2);
        assert_eq!(p.clusters()[0].count, 2);
        assert!((p.clusters()[0].sum - 4.0).abs() < 1e-15);
        assert!((p.clusters()[0].sum_sq - 10.0).abs() < 1e-15);
        assert!(p.assign(5, 0.0).is_err());
        let total: usize = p.clusters().iter().map(|c| c.count).sum();
        assert_eq!(total, p.t());
    }

    #[test]
    fn filter_input_validation() {
        let m = model();
        assert!(matches!(
            run_dpm_filter(&[], &m, 16, DpmEngine::Smc, 0),
            Err(DpmError::EmptyData)
        ));
        assert!(matches!(
            run_dpm_filter(&[1.0], &m, 1, DpmEngine::Smc, 0),
            Err(DpmError::TooFewParticles(1))
        ));
        assert!(matches!(
            run_dpm_filter(&[f64::NAN], &m, 16, DpmEngine::Smc, 0),
            Err(DpmError::NonFiniteObservation(_))
        ));
    }

    #[test]
    fn single_observation_evidence_is_exact() {
        let m = model();
        let y = [0.31];
        for engine in [DpmEngine::Smc, DpmEngine::Sqmc] {
            let result = run_dpm_filter(&y, &m, 32, engine, 9).unwrap();
            let want = marginal_k0(y[0], &m).ln();
            assert!((result.log_marginal_likelihood - want).abs() < 1e-12);
            assert!((result.k_posterior[0] - 1.0).abs() < 1e-12);
        }
    }
}
