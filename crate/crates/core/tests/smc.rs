//! Statistical checks of the resampling schemes and end-to-end filter
//! verification on a scalar linear-Gaussian model against the exact Kalman
//! likelihood.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sqmc_core::hilbert::HilbertMap;
use sqmc_core::qseq::{derive_stream_seed, Randomization, RqmcStream, StreamConfig};
use sqmc_core::smc::{
    ess, multinomial_resample, residual_resample, sqmc_resample, systematic_resample,
    ParticleSystem, ResampleScheme, SmcError, TransitionKernel,
};
use sqmc_core::stats::{inv_normal_cdf, logistic, normal_pdf};
use sqmc_testkit as testkit;

// Synthetic observations from the ScalarSsm below; the Kalman recursion
// gives their exact log-likelihood at runtime.
const OBSERVATIONS: [f64; 10] = [
    0.150603, -0.581381, -0.832027, 0.431217, -0.747453, 0.073592, -0.496408, 0.308086, -0.932567,
    -2.158388,
];

const MODEL: testkit::ScalarSsm = testkit::ScalarSsm {
    phi: 0.8,
    sigma_x: 0.5,
    sigma_y: 0.5,
    var0: 1.0,
};

struct LinearGaussian {
    model: testkit::ScalarSsm,
}

impl LinearGaussian {
    fn quantile(u: f64) -> f64 {
        inv_normal_cdf(u.clamp(1e-12, 1.0 - 1e-12)).expect("clamped into (0,1)")
    }
}

impl TransitionKernel for LinearGaussian {
    type State = f64;
    type Observation = f64;

    fn u_dim(&self) -> usize {
        1
    }

    fn propagate(&self, prev: &f64, _obs: &f64, u: &[f64]) -> f64 {
        self.model.phi * prev + self.model.sigma_x * Self::quantile(u[0])
    }

    fn incremental_weight(&self, _prev: &f64, new: &f64, obs: &f64) -> f64 {
        normal_pdf(*obs, *new, self.model.sigma_y * self.model.sigma_y)
    }
}

// The filter propagates every step, including the first, so particles are
// seeded at a fictitious time 0 whose propagation reproduces the model's
// x_1 ~ N(0, var0): var_pre = (var0 - sigma_x^2) / phi^2.
fn pre_initial_sd() -> f64 {
    ((MODEL.var0 - MODEL.sigma_x * MODEL.sigma_x) / (MODEL.phi * MODEL.phi)).sqrt()
}

fn initial_states_from_rng(n: usize, rng: &mut StdRng) -> Vec<f64> {
    let sd = pre_initial_sd();
    (0..n)
        .map(|_| sd * LinearGaussian::quantile(rng.random::<f64>()))
        .collect()
}

fn run_smc(n: usize, seed: u64, scheme: ResampleScheme) -> f64 {
    let kernel = LinearGaussian { model: MODEL };
    let mut rng = StdRng::seed_from_u64(seed);
    let mut system = ParticleSystem::new(initial_states_from_rng(n, &mut rng)).unwrap();
    for &y in &OBSERVATIONS {
        system.smc_step(&kernel, &y, &mut rng, scheme).unwrap();
    }
    system.log_norm_const()
}

fn run_sqmc(n: usize, seed: u64) -> f64 {
    let kernel = LinearGaussian { model: MODEL };
    let map = HilbertMap::new(1, 32).unwrap();
    // Initial draws from their own randomized block.
    let init_cfg = StreamConfig::new(1).with_randomization(Randomization::DigitalShift {
        seed: derive_stream_seed(seed, 1_000_000),
    });
    let mut init = RqmcStream::new(init_cfg).unwrap();
    let sd = pre_initial_sd();
    let states: Vec<f64> = (0..n)
        .map(|_| sd * LinearGaussian::quantile(init.next_point().unwrap()[0]))
        .collect();
    let mut system = ParticleSystem::new(states).unwrap();
    for (t, &y) in OBSERVATIONS.iter().enumerate() {
        // Fresh randomized block per step; running location/scale of the
        // particle cloud feeds the logistic squash onto the unit interval.
        let cfg = StreamConfig::new(2).with_randomization(Randomization::DigitalShift {
            seed: derive_stream_seed(seed, t as u64),
        });
        let mut stream = RqmcStream::new(cfg).unwrap();
        let states = system.states();
        let mean = states.iter().sum::<f64>() / states.len() as f64;
        let var =
            states.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / states.len() as f64;
        let scale = var.sqrt().max(1e-12);
        system
            .sqmc_step(&kernel, &y, &mut stream, &map, |s: &f64| {
                vec![logistic((s - mean) / scale)]
            })
            .unwrap();
    }
    system.log_norm_const()
}

#[test]
fn multinomial_frequencies_match_weights() {
    let weights = [0.75, 0.25];
    let mut rng = StdRng::seed_from_u64(5);
    let n = 100_000;
    let uniforms: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let ancestors = multinomial_resample(&weights, &uniforms).unwrap();
    let freq0 = ancestors.iter().filter(|&&a| a == 0).count() as f64 / n as f64;
    assert!((freq0 - 0.75).abs() < 0.005, "freq {freq0}");
}

// E[count_i] = N w_i for every scheme; statistical for the randomized ones.
#[test]
fn resampling_unbiasedness() {
    let weights = [0.35, 0.05, 0.2, 0.1, 0.3];
    let n = weights.len();
    let reps = 10_000;
    let mut rng = StdRng::seed_from_u64(17);
    let mut mean_counts = [[0.0f64; 5]; 3];
    for _ in 0..reps {
        let uniforms: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let schemes: [Vec<usize>; 3] = [
            multinomial_resample(&weights, &uniforms).unwrap(),
            systematic_resample(&weights, rng.random()).unwrap(),
            residual_resample(&weights, &uniforms).unwrap(),
        ];
        for (s, ancestors) in schemes.iter().enumerate() {
            for &a in ancestors {
                mean_counts[s][a] += 1.0;
            }
        }
    }
    for counts in &mut mean_counts {
        for c in counts.iter_mut() {
            *c /= reps as f64;
        }
    }
    for (s, counts) in mean_counts.iter().enumerate() {
        for (i, &c) in counts.iter().enumerate() {
            let expect = n as f64 * weights[i];
            // Count variance per replicate is at most N/4; 3 SE with a
            // generous bound.
            let se = (n as f64 / 4.0 / reps as f64).sqrt();
            assert!(
                (c - expect).abs() < 3.0 * se.max(0.005),
                "scheme {s} index {i}: mean count {c}, want {expect}"
            );
        }
    }
}

// The residual deterministic part is floor(N w) and the residual draws are
// multinomial, so mean counts converge to N w.
#[test]
fn residual_expected_counts() {
    let weights = [0.5, 0.3, 0.2];
    let reps = 100_000;
    let mut rng = StdRng::seed_from_u64(23);
    let mut totals = [0.0f64; 3];
    for _ in 0..reps {
        let uniforms: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
        for a in residual_resample(&weights, &uniforms).unwrap() {
            totals[a] += 1.0;
        }
    }
    let means: Vec<f64> = totals.iter().map(|t| t / reps as f64).collect();
    for (i, &m) in means.iter().enumerate() {
        let expect = 3.0 * weights[i];
        assert!((m - expect).abs() < 0.02, "index {i}: {m} vs {expect}");
    }
}

#[test]
fn ess_controls_resampling() {
    // Unit weights keep ESS at N: the step must not resample, so ancestry
    // is the identity and states evolve in place.
    struct Shift;
    impl TransitionKernel for Shift {
        type State = f64;
        type Observation = ();
        fn u_dim(&self) -> usize {
            1
        }
        fn propagate(&self, prev: &f64, _obs: &(), _u: &[f64]) -> f64 {
            prev + 1.0
        }
        fn incremental_weight(&self, _p: &f64, _n: &f64, _o: &()) -> f64 {
            1.0
        }
    }
    let mut rng = StdRng::seed_from_u64(3);
    let mut system = ParticleSystem::new(vec![0.0, 10.0, 20.0, 30.0]).unwrap();
    system
        .smc_step(&Shift, &(), &mut rng, ResampleScheme::Multinomial)
        .unwrap();
    assert_eq!(system.states(), &[1.0, 11.0, 21.0, 31.0]);
    assert_eq!(system.log_norm_const(), 0.0);
    assert!(system.weights().iter().all(|&w| (w - 0.25).abs() < 1e-15));
    assert!((ess(system.weights()) - 4.0).abs() < 1e-9);
}

#[test]
fn single_particle_sqmc_is_deterministic_trajectory() {
    let kernel = LinearGaussian { model: MODEL };
    let map = HilbertMap::new(1, 32).unwrap();
    let mut stream = RqmcStream::new(StreamConfig::new(2)).unwrap();
    let mut system = ParticleSystem::new(vec![0.3]).unwrap();
    let mut expected = 0.3;
    for &y in &OBSERVATIONS[..4] {
        let mut probe = stream.clone();
        let u = probe.next_point().unwrap()[1];
        system
            .sqmc_step(&kernel, &y, &mut stream, &map, |s: &f64| {
                vec![logistic(*s)]
            })
            .unwrap();
        expected = kernel.propagate(&expected, &y, &[u]);
        assert_eq!(system.states(), &[expected]);
    }
}

#[test]
fn degenerate_weights_abort_with_step_index() {
    struct Zero;
    impl TransitionKernel for Zero {
        type State = f64;
        type Observation = ();
        fn u_dim(&self) -> usize {
            1
        }
        fn propagate(&self, prev: &f64, _obs: &(), _u: &[f64]) -> f64 {
            *prev
        }
        fn incremental_weight(&self, _p: &f64, _n: &f64, _o: &()) -> f64 {
            0.0
        }
    }
    let mut rng = StdRng::seed_from_u64(4);
    let mut system = ParticleSystem::new(vec![0.0; 8]).unwrap();
    let err = system
        .smc_step(&Zero, &(), &mut rng, ResampleScheme::Systematic)
        .unwrap_err();
    assert!(matches!(err, SmcError::Degenerate { step: 0 }));
}

#[test]
fn smc_log_evidence_matches_kalman() {
    let exact = testkit::kalman_log_likelihood(&MODEL, &OBSERVATIONS);
    for scheme in [
        ResampleScheme::Multinomial,
        ResampleScheme::Systematic,
        ResampleScheme::Residual,
    ] {
        let estimates: Vec<f64> = (0..24).map(|s| run_smc(1 << 10, s, scheme)).collect();
        let mean = testkit::mean(&estimates);
        let se = testkit::standard_error(&estimates);
        assert!(
            (mean - exact).abs() <= 3.0 * se,
            "{scheme:?}: mean {mean}, exact {exact}, se {se}"
        );
    }
}

#[test]
fn sqmc_log_evidence_matches_kalman() {
    let exact = testkit::kalman_log_likelihood(&MODEL, &OBSERVATIONS);
    let estimates: Vec<f64> = (0..24).map(|s| run_sqmc(1 << 10, s)).collect();
    let mean = testkit::mean(&estimates);
    let se = testkit::standard_error(&estimates);
    assert!(
        (mean - exact).abs() <= 3.0 * se.max(1e-4),
        "mean {mean}, exact {exact}, se {se}"
    );
}

// Mean of the evidence (not its log) over many randomization seeds matches
// the exact likelihood: the estimator is unbiased for both engines.
#[test]
fn evidence_unbiasedness_over_seeds() {
    let exact = testkit::kalman_log_likelihood(&MODEL, &OBSERVATIONS).exp();
    let n = 256;
    let smc: Vec<f64> = (0..200)
        .map(|s| run_smc(n, s, ResampleScheme::Multinomial).exp())
        .collect();
    let sqmc: Vec<f64> = (0..200).map(|s| run_sqmc(n, s).exp()).collect();
    for (name, estimates) in [("smc", smc), ("sqmc", sqmc)] {
        let mean = testkit::mean(&estimates);
        let se = testkit::standard_error(&estimates);
        assert!(
            (mean - exact).abs() <= 3.0 * se,
            "{name}: mean {mean}, exact {exact}, se {se}"
        );
    }
}

// The quasi-Monte Carlo engine should not be worse than multinomial
// resampling at equal particle count.
#[test]
fn sqmc_variance_not_worse_than_multinomial() {
    let n = 1 << 10;
    let smc: Vec<f64> = (0..60)
        .map(|s| run_smc(n, 1000 + s, ResampleScheme::Multinomial))
        .collect();
    let sqmc: Vec<f64> = (0..60).map(|s| run_sqmc(n, 2000 + s)).collect();
    let ratio =
        sqmc_core::stats::bootstrap_variance_ratio(&smc, &sqmc, 4000, 0.95, 11).unwrap();
    assert!(
        ratio.lower >= 1.0,
        "variance ratio {} (CI {} .. {})",
        ratio.ratio,
        ratio.lower,
        ratio.upper
    );
}

#[test]
fn permutation_equivariance_of_sqmc_resample() {
    let map = HilbertMap::new(1, 20).unwrap();
    let mut rng = StdRng::seed_from_u64(77);
    let n = 16;
    let states: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let mut uniforms: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    uniforms.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let base = sqmc_resample(&weights, &states, &map, |&s| vec![s], &uniforms).unwrap();

    // Reverse the particle order; ancestors must follow the permutation.
    let perm: Vec<usize> = (0..n).rev().collect();
    let p_states: Vec<f64> = perm.iter().map(|&i| states[i]).collect();
    let p_weights: Vec<f64> = perm.iter().map(|&i| weights[i]).collect();
    let permuted =
        sqmc_resample(&p_weights, &p_states, &map, |&s| vec![s], &uniforms).unwrap();
    let mapped: Vec<usize> = permuted.iter().map(|&a| perm[a]).collect();
    assert_eq!(base, mapped);
}
