//! Independent oracles and statistical helpers shared by the test suites.
//!
//! Everything in this crate is deliberately written from scratch so the
//! checks stay independent of the implementations they verify: the radical
//! inverse is plain bit reversal, the Kalman filter is the textbook scalar
//! recursion, the mixture-model oracle enumerates set partitions directly,
//! and the normal density is evaluated inline.

use rand::Rng;

/// Base-2 radical inverse of `n` by explicit bit reversal (32 digits).
pub fn radical_inverse_base2(n: u32) -> f64 {
    let mut v = n;
    let mut out = 0u32;
    for _ in 0..32 {
        out = (out << 1) | (v & 1);
        v >>= 1;
    }
    out as f64 / 4294967296.0
}

/// Normal density with mean `mean` and variance `var`.
pub fn normal_density(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    (-0.5 * z * z / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased (n-1) sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// One-sample Kolmogorov-Smirnov statistic against U[0,1).
pub fn ks_statistic_uniform(samples: &[f64]) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let hi = (i as f64 + 1.0) / n - x;
        let lo = x - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Asymptotic KS critical value at significance `alpha` for sample size `n`.
/// Supports the two levels the suites use.
pub fn ks_critical_value(alpha: f64, n: usize) -> f64 {
    let c = if alpha <= 0.001 {
        1.94947
    } else if alpha <= 0.01 {
        1.62762
    } else {
        1.35810
    };
    c / (n as f64).sqrt()
}

/// Scalar linear-Gaussian state-space model
/// x_t = phi x_{t-1} + sigma_x eps_t,  y_t = x_t + sigma_y nu_t,  x_1 ~ N(0, var0).
#[derive(Clone, Copy, Debug)]
pub struct ScalarSsm {
    pub phi: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub var0: f64,
}

/// Exact log-likelihood of `ys` under the scalar model via the Kalman recursion.
pub fn kalman_log_likelihood(model: &ScalarSsm, ys: &[f64]) -> f64 {
    let mut m = 0.0;
    let mut p = model.var0;
    let mut ll = 0.0;
    for (t, &y) in ys.iter().enumerate() {
        if t > 0 {
            m *= model.phi;
            p = model.phi * model.phi * p + model.sigma_x * model.sigma_x;
        }
        let s = p + model.sigma_y * model.sigma_y;
        ll += -0.5 * (2.0 * std::f64::consts::PI * s).ln() - 0.5 * (y - m) * (y - m) / s;
        let k = p / s;
        m += k * (y - m);
        p *= 1.0 - k;
    }
    ll
}

/// Exact posterior for a conjugate Normal mixture with a Dirichlet-process
/// prior, computed by enumerating every set partition of the data.
///
/// Arguments are the precision `alpha`, base measure N(m0, v0), and known
/// kernel variance `kvar`. Returns the evidence and `P(k = j)` for
/// j = 1..=n (index j-1).
pub struct PartitionPosterior {
    pub evidence: f64,
    pub k_probabilities: Vec<f64>,
    pub partitions: usize,
}

pub fn enumerate_partition_posterior(
    ys: &[f64],
    alpha: f64,
    m0: f64,
    v0: f64,
    kvar: f64,
) -> PartitionPosterior {
    let n = ys.len();
    let mut evidence = 0.0;
    let mut kmass = vec![0.0; n];
    let mut count = 0usize;

    // Restricted growth strings enumerate each set partition exactly once.
    let mut labels = vec![0usize; n];
    enumerate_rgs(&mut labels, 1, 0, &mut |labels| {
        count += 1;
        let k = labels.iter().copied().max().unwrap() + 1;
        let mut prior = 1.0;
        let mut sizes = vec![0usize; k];
        for (i, &lab) in labels.iter().enumerate() {
            let denom = alpha + i as f64;
            if sizes[lab] == 0 {
                prior *= alpha / denom;
            } else {
                prior *= sizes[lab] as f64 / denom;
            }
            sizes[lab] += 1;
        }
        let mut lik = 1.0;
        for lab in 0..k {
            let obs: Vec<f64> = ys
                .iter()
                .zip(labels.iter())
                .filter(|(_, &l)| l == lab)
                .map(|(&y, _)| y)
                .collect();
            lik *= cluster_marginal(&obs, m0, v0, kvar);
        }
        evidence += prior * lik;
        kmass[k - 1] += prior * lik;
    });

    for m in kmass.iter_mut() {
        *m /= evidence;
    }
    PartitionPosterior {
        evidence,
        k_probabilities: kmass,
        partitions: count,
    }
}

fn enumerate_rgs(labels: &mut [usize], pos: usize, max_used: usize, f: &mut impl FnMut(&[usize])) {
    if pos == labels.len() {
        f(labels);
        return;
    }
    for lab in 0..=max_used + 1 {
        labels[pos] = lab;
        let next_max = max_used.max(lab);
        enumerate_rgs(labels, pos + 1, next_max, f);
    }
}

/// Marginal likelihood of a cluster's observations under the Normal-Normal
/// conjugate pair, as a product of sequential one-step predictives.
pub fn cluster_marginal(obs: &[f64], m0: f64, v0: f64, kvar: f64) -> f64 {
    let mut n = 0.0;
    let mut sum = 0.0;
    let mut p = 1.0;
    for &y in obs {
        let post_prec = 1.0 / v0 + n / kvar;
        let post_var = 1.0 / post_prec;
        let post_mean = (m0 / v0 + sum / kvar) * post_var;
        p *= normal_density(y, post_mean, post_var + kvar);
        n += 1.0;
        sum += y;
    }
    p
}

/// Independently coded switching-model summary oracle: simulates `reps`
/// series of length `len` (state on {-2, 2}, switch probability `theta`,
/// Gaussian noise `sigma`) and returns the mean and standard error of the
/// lag-1 sample autocorrelation.
pub fn hms_autocorr_oracle(
    theta: f64,
    sigma: f64,
    len: usize,
    reps: usize,
    rng: &mut impl Rng,
) -> (f64, f64) {
    let mut values = Vec::with_capacity(reps);
    for _ in 0..reps {
        let mut x: f64 = if rng.random::<bool>() { 2.0 } else { -2.0 };
        let mut ys = Vec::with_capacity(len);
        for k in 0..len {
            if k > 0 && rng.random::<f64>() < theta {
                x = -x;
            }
            let noise: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
            ys.push(x + sigma * noise);
        }
        let m = mean(&ys);
        let denom: f64 = ys.iter().map(|y| (y - m) * (y - m)).sum();
        let numer: f64 = ys.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
        values.push(if denom > 0.0 { numer / denom } else { 0.0 });
    }
    (mean(&values), standard_error(&values))
}

/// Plain rejection ABC: draws from a uniform prior on `(lo, hi)`, simulates
/// via the supplied closure, accepts when `distance(simulated) <= epsilon`.
/// Returns the accepted parameter values.
pub fn rejection_abc(
    attempts: usize,
    lo: f64,
    hi: f64,
    epsilon: f64,
    rng: &mut impl Rng,
    mut simulate_distance: impl FnMut(f64, &mut dyn rand::RngCore) -> f64,
) -> Vec<f64> {
    let mut accepted = Vec::new();
    for _ in 0..attempts {
        let theta = lo + (hi - lo) * rng.random::<f64>();
        if simulate_distance(theta, rng) <= epsilon {
            accepted.push(theta);
        }
    }
    accepted
}
