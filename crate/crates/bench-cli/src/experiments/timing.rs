//! Timing-vs-N scaling: the same miniature sampler iteration (draw N
//! two-dimensional points, pick ancestors, simulate short datasets) is
//! timed with its point source swapped between a pseudorandom generator,
//! an incremental low-discrepancy stream, and the regenerate-per-draw
//! stream, and log-log slopes are fitted per mode.

use std::hint::black_box;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sqmc_core::abc::{simulate_hms, HmsModel};
use sqmc_core::qseq::{derive_stream_seed, Mode, Randomization, RqmcStream, StreamConfig};
use sqmc_core::stats::fit_log_log_slope;

use crate::config::ExperimentSpec;
use crate::csvio::CsvWriter;
use crate::BenchError;

/// Simulated dataset length inside the timing workload; short so the
/// linear simulate component does not drown the sequence component.
const SIM_LENGTH: usize = 16;

/// Target accumulated time per measurement; passes repeat until reached.
const MIN_MEASURE: Duration = Duration::from_millis(4);

const MAX_PASSES: u32 = 4096;

#[derive(Clone, Debug)]
pub struct TimingRecord {
    pub mode: String,
    pub n: usize,
    pub replicate: usize,
    pub wall_ms: f64,
    pub sequence_ms: f64,
    pub resample_ms: f64,
    pub simulate_ms: f64,
    pub passes: u32,
}

#[derive(Clone, Debug)]
pub struct ExponentFit {
    pub mode: String,
    pub exponent: f64,
    pub intercept: f64,
    pub points: usize,
}

enum Source {
    Rng(StdRng),
    Stream(RqmcStream),
}

impl Source {
    fn fill(&mut self, out: &mut [f64]) {
        match self {
            Source::Rng(rng) => {
                for slot in out.iter_mut() {
                    *slot = rng.random::<f64>();
                }
            }
            Source::Stream(s) => {
                for point in out.chunks_exact_mut(2) {
                    s.next_into(point).expect("within index budget");
                }
            }
        }
    }
}

fn make_source(mode: &str, seed: u64) -> Source {
    match mode {
        "plain-mc" => Source::Rng(StdRng::seed_from_u64(seed)),
        "qmc-incremental" => Source::Stream(
            RqmcStream::new(
                StreamConfig::new(2)
                    .with_randomization(Randomization::DigitalShift { seed })
                    .with_skip_zero_point(true),
            )
            .expect("valid stream config"),
        ),
        _ => Source::Stream(
            RqmcStream::new(
                StreamConfig::new(2)
                    .with_randomization(Randomization::DigitalShift { seed })
                    .with_skip_zero_point(true)
                    .with_mode(Mode::BatchRegenerate),
            )
            .expect("valid stream config"),
        ),
    }
}

struct ComponentTimes {
    sequence: Duration,
    resample: Duration,
    simulate: Duration,
    wall: Duration,
}

// One workload pass: N 2-D points; ancestor selection by inverse CDF of a
// uniform weight vector at the sorted second coordinates; one short
// simulated dataset per particle driven by the first coordinate.
fn one_pass(mode: &str, n: usize, seed: u64, model: &HmsModel, sim_rng: &mut StdRng) -> ComponentTimes {
    let wall_start = Instant::now();

    let t = Instant::now();
    let mut points = vec![0.0f64; 2 * n];
    let mut source = make_source(mode, seed);
    source.fill(&mut points);
    let sequence = t.elapsed();

    let t = Instant::now();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[2 * a + 1].partial_cmp(&points[2 * b + 1]).unwrap());
    let mut ancestors = Vec::with_capacity(n);
    let mut j = 0usize;
    for &i in &order {
        let u = points[2 * i + 1];
        while j + 1 < n && (j + 1) as f64 / n as f64 <= u {
            j += 1;
        }
        ancestors.push(j);
    }
    black_box(&ancestors);
    let resample = t.elapsed();

    let t = Instant::now();
    let mut checksum = 0.0f64;
    for i in 0..n {
        let theta = 0.05 + 0.9 * points[2 * i];
        let data = simulate_hms(theta, model, sim_rng).expect("theta in (0,1)");
        checksum += data[0];
    }
    black_box(checksum);
    let simulate = t.elapsed();

    ComponentTimes {
        sequence,
        resample,
        simulate,
        wall: wall_start.elapsed(),
    }
}

fn measure(mode: &str, n: usize, seed: u64) -> TimingRecord {
    let model = HmsModel::new(0.5, SIM_LENGTH, 0.3).expect("valid toy model");
    let mut sim_rng = StdRng::seed_from_u64(seed ^ 0xabcd);
    let mut totals = ComponentTimes {
        sequence: Duration::ZERO,
        resample: Duration::ZERO,
        simulate: Duration::ZERO,
        wall: Duration::ZERO,
    };
    let mut passes = 0u32;
    // Repeat the workload until the accumulated wall time is measurable,
    // so the smallest N is not at the timer's resolution floor.
    while totals.wall < MIN_MEASURE && passes < MAX_PASSES {
        let pass = one_pass(mode, n, seed.wrapping_add(passes as u64), &model, &mut sim_rng);
        totals.sequence += pass.sequence;
        totals.resample += pass.resample;
        totals.simulate += pass.simulate;
        totals.wall += pass.wall;
        passes += 1;
    }
    let to_ms = |d: Duration| d.as_secs_f64() * 1e3 / passes as f64;
    TimingRecord {
        mode: mode.to_string(),
        n,
        replicate: 0,
        wall_ms: to_ms(totals.wall),
        sequence_ms: to_ms(totals.sequence),
        resample_ms: to_ms(totals.resample),
        simulate_ms: to_ms(totals.simulate),
        passes,
    }
}

pub struct TimingOutcome {
    pub records: Vec<TimingRecord>,
    pub fits: Vec<ExponentFit>,
    pub warnings: Vec<String>,
}

pub fn run_timing(spec: &ExperimentSpec) -> Result<TimingOutcome, BenchError> {
    let mut warnings = Vec::new();
    let mut sorted_n = spec.n_values.clone();
    sorted_n.sort_unstable();
    sorted_n.dedup();
    if sorted_n.len() < 4 {
        warnings.push(format!(
            "{} distinct N value(s); scaling fits want at least 4",
            sorted_n.len()
        ));
    } else if *sorted_n.last().unwrap() < 10 * sorted_n[0] {
        warnings.push("N range spans less than one decade".to_string());
    }

    // Warm-up pass so fits are not skewed by cold caches.
    let _ = measure("plain-mc", sorted_n[0], spec.seed);

    // Timing replicates run sequentially on one worker: wall-clock under
    // contention is meaningless.
    let mut records = Vec::new();
    for mode in &spec.engines {
        for &n in &sorted_n {
            for replicate in 0..spec.replicates {
                let seed = derive_stream_seed(spec.seed, (n as u64) << 20 | replicate as u64);
                let mut record = measure(mode, n, seed);
                record.replicate = replicate;
                records.push(record);
            }
        }
    }

    let mut fits = Vec::new();
    if sorted_n.len() >= 2 {
        for mode in &spec.engines {
            let xs: Vec<f64> = sorted_n.iter().map(|&n| n as f64).collect();
            let ys: Vec<f64> = sorted_n
                .iter()
                .map(|&n| {
                    let per_n: Vec<f64> = records
                        .iter()
                        .filter(|r| &r.mode == mode && r.n == n)
                        .map(|r| r.wall_ms)
                        .collect();
                    per_n.iter().sum::<f64>() / per_n.len() as f64
                })
                .collect();
            let (exponent, intercept) =
                fit_log_log_slope(&xs, &ys).map_err(|e| BenchError::Runtime(e.to_string()))?;
            fits.push(ExponentFit {
                mode: mode.clone(),
                exponent,
                intercept,
                points: sorted_n.len(),
            });
        }
    } else {
        warnings.push("exponent fit refused: need at least 2 distinct N values".to_string());
    }

    Ok(TimingOutcome {
        records,
        fits,
        warnings,
    })
}

pub fn write_timing_csvs(spec: &ExperimentSpec, outcome: &TimingOutcome) -> Result<(), BenchError> {
    let comment = spec.describe();
    let mut raw = CsvWriter::new(
        &comment,
        &[
            "mode",
            "n",
            "replicate",
            "wall_time_ms",
            "sequence_time_ms",
            "resample_time_ms",
            "simulate_time_ms",
            "passes",
        ],
    );
    for r in &outcome.records {
        raw.row(&[
            r.mode.clone(),
            r.n.to_string(),
            r.replicate.to_string(),
            format!("{}", r.wall_ms),
            format!("{}", r.sequence_ms),
            format!("{}", r.resample_ms),
            format!("{}", r.simulate_ms),
            r.passes.to_string(),
        ]);
    }
    raw.write_to(&spec.out_dir.join("timing.csv"))?;

    let mut fit = CsvWriter::new(&comment, &["mode", "exponent", "intercept", "points"]);
    for f in &outcome.fits {
        fit.row(&[
            f.mode.clone(),
            format!("{}", f.exponent),
            format!("{}", f.intercept),
            f.points.to_string(),
        ]);
    }
    fit.write_to(&spec.out_dir.join("exponents.csv"))?;
    Ok(())
}
