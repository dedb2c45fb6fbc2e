//! Weighted particle systems with multinomial, systematic, residual, and
//! Hilbert-sorted inverse-CDF resampling, plus the two step engines: a
//! plain pseudorandom filter step with ESS-triggered resampling and the
//! quasi-Monte Carlo step driven by a low-discrepancy stream.

use rand::Rng;
use thiserror::Error;

use crate::hilbert::{HilbertError, HilbertMap};
use crate::qseq::{QseqError, RqmcStream};

const WEIGHT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SmcError {
    #[error("particle system needs at least one particle")]
    Empty,
    #[error("weights must be normalized: sum deviates by {deviation}")]
    UnnormalizedWeights { deviation: f64 },
    #[error("negative or non-finite weight {value} at index {index}")]
    BadWeight { index: usize, value: f64 },
    #[error("uniform {value} lies outside [0,1)")]
    UniformOutOfRange { value: f64 },
    #[error("uniforms must be sorted ascending")]
    UniformsNotSorted,
    #[error("need {needed} uniforms, got {got}")]
    NotEnoughUniforms { needed: usize, got: usize },
    #[error("weights and particle counts differ: {weights} weights, {items} items")]
    LengthMismatch { weights: usize, items: usize },
    #[error("stream dimension {got} does not match 1 + u_dim = {expected}")]
    StreamDimension { expected: usize, got: usize },
    #[error("all particle weights vanished at step {step}")]
    Degenerate { step: usize },
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Stream(#[from] QseqError),
}

/// Effective sample size 1 / sum w_i^2 of a normalized weight vector.
pub fn ess(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

fn check_normalized(weights: &[f64]) -> Result<(), SmcError> {
    if weights.is_empty() {
        return Err(SmcError::Empty);
    }
    let mut sum = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(SmcError::BadWeight { index: i, value: w });
        }
        sum += w;
    }
    let deviation = (sum - 1.0).abs();
    if deviation > WEIGHT_TOL {
        return Err(SmcError::UnnormalizedWeights { deviation });
    }
    Ok(())
}

fn check_uniform(u: f64) -> Result<(), SmcError> {
    if !(0.0..1.0).contains(&u) {
        return Err(SmcError::UniformOutOfRange { value: u });
    }
    Ok(())
}

/// Smallest index whose cumulative weight strictly exceeds `u`.
pub fn inverse_cdf_select(cumulative: &[f64], u: f64) -> usize {
    let idx = cumulative.partition_point(|&c| c <= u);
    idx.min(cumulative.len() - 1)
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Multinomial resampling: ancestor_i is the inverse CDF of the weight
/// vector at uniforms_i.
pub fn multinomial_resample(weights: &[f64], uniforms: &[f64]) -> Result<Vec<usize>, SmcError> {
    check_normalized(weights)?;
    let cum = cumulative(weights);
    let mut ancestors = Vec::with_capacity(uniforms.len());
    for &u in uniforms {
        check_uniform(u)?;
        ancestors.push(inverse_cdf_select(&cum, u));
    }
    Ok(ancestors)
}

/// Systematic resampling on the grid (u + k)/N, k = 0..N-1. Offspring
/// counts land in {floor(N w_i), ceil(N w_i)}.
pub fn systematic_resample(weights: &[f64], u: f64) -> Result<Vec<usize>, SmcError> {
    check_normalized(weights)?;
    check_uniform(u)?;
    let n = weights.len();
    let cum = cumulative(weights);
    let mut ancestors = Vec::with_capacity(n);
    let mut j = 0usize;
    for k in 0..n {
        let point = (u + k as f64) / n as f64;
        while j + 1 < n && cum[j] <= point {
            j += 1;
        }
        ancestors.push(j);
    }
    Ok(ancestors)
}

/// Residual resampling: floor(N w_i) deterministic copies per index, the
/// remaining slots filled by multinomial draws on the residual weights.
/// Consumes one uniform per residual slot; zero residual consumes nothing.
pub fn residual_resample(weights: &[f64], uniforms: &[f64]) -> Result<Vec<usize>, SmcError> {
    check_normalized(weights)?;
    let n = weights.len();
    let mut ancestors = Vec::with_capacity(n);
    let mut residual = Vec::with_capacity(n);
    let mut residual_sum = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        let scaled = n as f64 * w;
        let copies = scaled.floor() as usize;
        ancestors.extend(std::iter::repeat(i).take(copies));
        let r = scaled - copies as f64;
        residual.push(r);
        residual_sum += r;
    }
    let remaining = n - ancestors.len();
    if remaining > 0 {
        if uniforms.len() < remaining {
            return Err(SmcError::NotEnoughUniforms {
                needed: remaining,
                got: uniforms.len(),
            });
        }
        for r in residual.iter_mut() {
            *r /= residual_sum;
        }
        let cum = cumulative(&residual);
        for &u in &uniforms[..remaining] {
            check_uniform(u)?;
            ancestors.push(inverse_cdf_select(&cum, u));
        }
    }
    Ok(ancestors)
}

/// Hilbert-sorted inverse-CDF resampling: particles are ordered by the
/// curve index of their projections, the weight CDF is taken in that order,
/// and the ascending uniforms are consumed against it. Returned ancestors
/// refer to the original particle numbering.
pub fn sqmc_resample<S>(
    weights: &[f64],
    states: &[S],
    map: &HilbertMap,
    mut project: impl FnMut(&S) -> Vec<f64>,
    sorted_uniforms: &[f64],
) -> Result<Vec<usize>, SmcError> {
    check_normalized(weights)?;
    if weights.len() != states.len() {
        return Err(SmcError::LengthMismatch {
            weights: weights.len(),
            items: states.len(),
        });
    }
    for pair in sorted_uniforms.windows(2) {
        if pair[1] < pair[0] {
            return Err(SmcError::UniformsNotSorted);
        }
    }
    let projections: Vec<Vec<f64>> = states.iter().map(&mut project).collect();
    let order = map.sort_by_curve(&projections)?;
    let sorted_weights: Vec<f64> = order.iter().map(|&i| weights[i]).collect();
    let cum = cumulative(&sorted_weights);
    let mut ancestors = Vec::with_capacity(sorted_uniforms.len());
    let mut j = 0usize;
    for &u in sorted_uniforms {
        check_uniform(u)?;
        while j + 1 < cum.len() && cum[j] <= u {
            j += 1;
        }
        ancestors.push(order[j]);
    }
    Ok(ancestors)
}

/// Baseline resampling scheme for the pseudorandom engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResampleScheme {
    Multinomial,
    Systematic,
    Residual,
}

/// A Markov transition expressed as a deterministic transform of uniforms,
/// with an incremental importance weight.
pub trait TransitionKernel {
    type State;
    type Observation: ?Sized;

    /// Number of uniforms consumed per propagation.
    fn u_dim(&self) -> usize;

    /// Deterministic transform of (previous state, uniforms) to a new
    /// state. Must be a pure function.
    fn propagate(&self, prev: &Self::State, obs: &Self::Observation, u: &[f64]) -> Self::State;

    /// Unnormalized incremental weight of the move.
    fn incremental_weight(
        &self,
        prev: &Self::State,
        new: &Self::State,
        obs: &Self::Observation,
    ) -> f64;
}

/// N weighted particles with a running log normalizing-constant estimate.
#[derive(Clone, Debug)]
pub struct ParticleSystem<S> {
    states: Vec<S>,
    weights: Vec<f64>,
    log_norm_const: f64,
    step_index: usize,
}

impl<S: Clone> ParticleSystem<S> {
    /// Starts a system with uniform weights.
    pub fn new(states: Vec<S>) -> Result<Self, SmcError> {
        if states.is_empty() {
            return Err(SmcError::Empty);
        }
        let n = states.len();
        Ok(ParticleSystem {
            states,
            weights: vec![1.0 / n as f64; n],
            log_norm_const: 0.0,
            step_index: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_norm_const(&self) -> f64 {
        self.log_norm_const
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn ess(&self) -> f64 {
        ess(&self.weights)
    }

    /// One pseudorandom filter step: resample (chosen scheme) when the
    /// effective sample size falls below N/2, propagate through the kernel
    /// transform with fresh uniforms, reweight, and update the evidence.
    pub fn smc_step<K, R>(
        &mut self,
        kernel: &K,
        obs: &K::Observation,
        rng: &mut R,
        scheme: ResampleScheme,
    ) -> Result<(), SmcError>
    where
        K: TransitionKernel<State = S>,
        R: Rng,
    {
        let n = self.len();
        let resample = self.ess() < n as f64 / 2.0;
        let ancestors: Vec<usize> = if resample {
            match scheme {
                ResampleScheme::Multinomial => {
                    let us: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                    multinomial_resample(&self.weights, &us)?
                }
                ResampleScheme::Systematic => systematic_resample(&self.weights, rng.random())?,
                ResampleScheme::Residual => {
                    let us: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                    residual_resample(&self.weights, &us)?
                }
            }
        } else {
            (0..n).collect()
        };

        let u_dim = kernel.u_dim();
        let mut u = vec![0.0; u_dim];
        let mut new_states = Vec::with_capacity(n);
        let mut incremental = Vec::with_capacity(n);
        for &a in &ancestors {
            for slot in u.iter_mut() {
                *slot = rng.random::<f64>();
            }
            let prev = &self.states[a];
            let next = kernel.propagate(prev, obs, &u);
            incremental.push(kernel.incremental_weight(prev, &next, obs));
            new_states.push(next);
        }

        // After a resample ancestors carry weight 1/N, so the evidence
        // increment is the plain mean of the incremental weights; without
        // one it is the mean under the carried weights.
        let increment = if resample {
            incremental.iter().sum::<f64>() / n as f64
        } else {
            self.weights
                .iter()
                .zip(&incremental)
                .map(|(w, g)| w * g)
                .sum::<f64>()
        };
        let unnormalized: Vec<f64> = if resample {
            incremental
        } else {
            self.weights
                .iter()
                .zip(&incremental)
                .map(|(w, g)| w * g)
                .collect()
        };
        self.finish_step(new_states, unnormalized, increment)
    }

    /// One quasi-Monte Carlo filter step. The stream must have dimension
    /// 1 + u_dim: the first coordinate drives ancestor selection through the
    /// Hilbert-sorted inverse CDF, the rest drive the kernel transform.
    /// Resampling happens every step.
    pub fn sqmc_step<K>(
        &mut self,
        kernel: &K,
        obs: &K::Observation,
        stream: &mut RqmcStream,
        map: &HilbertMap,
        mut project: impl FnMut(&S) -> Vec<f64>,
    ) -> Result<(), SmcError>
    where
        K: TransitionKernel<State = S>,
    {
        let n = self.len();
        let u_dim = kernel.u_dim();
        if stream.dimension() != 1 + u_dim {
            return Err(SmcError::StreamDimension {
                expected: 1 + u_dim,
                got: stream.dimension(),
            });
        }
        let batch = stream.next_batch(n)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| batch.row(a)[0].partial_cmp(&batch.row(b)[0]).unwrap());
        let sorted_uniforms: Vec<f64> = order.iter().map(|&i| batch.row(i)[0]).collect();

        let ancestors = sqmc_resample(&self.weights, &self.states, map, &mut project, &sorted_uniforms)?;

        let mut new_states = Vec::with_capacity(n);
        let mut incremental = Vec::with_capacity(n);
        for (slot, &a) in ancestors.iter().enumerate() {
            let u = &batch.row(order[slot])[1..];
            let prev = &self.states[a];
            let next = kernel.propagate(prev, obs, u);
            incremental.push(kernel.incremental_weight(prev, &next, obs));
            new_states.push(next);
        }
        let increment = incremental.iter().sum::<f64>() / n as f64;
        self.finish_step(new_states, incremental, increment)
    }

    fn finish_step(
        &mut self,
        new_states: Vec<S>,
        unnormalized: Vec<f64>,
        increment: f64,
    ) -> Result<(), SmcError> {
        let total: f64 = unnormalized.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(SmcError::Degenerate {
                step: self.step_index,
            });
        }
        self.states = new_states;
        self.weights = unnormalized.iter().map(|w| w / total).collect();
        self.log_norm_const += increment.ln();
        self.step_index += 1;
        Ok(())
    }
}
