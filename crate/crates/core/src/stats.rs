//! Shared numerics: normal density/CDF/quantile, weighted moments,
//! log-sum-exp, a percentile bootstrap for variance ratios, and a least
//! squares slope fit on log-log data.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("normal quantile requires p in (0,1), got {p}")]
    QuantileDomain { p: f64 },
    #[error("need at least {needed} data points, got {got}")]
    NotEnoughData { needed: usize, got: usize },
    #[error("fit is underdetermined: all x values coincide")]
    DegenerateFit,
}

const SQRT_2PI: f64 = 2.506628274631000502;
const FRAC_2_SQRT_PI: f64 = 1.1283791670955126;

/// Standard normal density.
pub fn standard_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

/// Normal density with the given mean and variance.
pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    (-0.5 * z * z / var).exp() / (SQRT_2PI * var.sqrt())
}

/// Log of `normal_pdf`.
pub fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    -0.5 * z * z / var - 0.5 * var.ln() - SQRT_2PI.ln()
}

/// Error function, accurate to roughly 1e-15.
///
/// Series expansion below |x| = 3, Lentz continued fraction for the
/// complement above it.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 3.0 {
        // erf(x) = 2/sqrt(pi) * sum (-1)^n x^(2n+1) / (n! (2n+1))
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        let mut n = 1.0;
        loop {
            term *= -x2 / n;
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-30) {
                break;
            }
            n += 1.0;
        }
        FRAC_2_SQRT_PI * sum
    } else {
        1.0 - erfc_large(x)
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x < 3.0 {
        1.0 - erf(x)
    } else {
        erfc_large(x)
    }
}

// erfc via the Legendre continued fraction, valid for x >= 3:
// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 2/2/(x + 3/2/(x + ...))))
fn erfc_large(x: f64) -> f64 {
    if x > 27.0 {
        return 0.0; // below the smallest positive f64 once squared
    }
    let mut f = 0.0;
    for k in (1..=60).rev() {
        f = 0.5 * k as f64 / (x + f);
    }
    (-x * x).exp() / ((x + f) * SQRT_2PI * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal quantile, absolute error well below 1e-9 on (0, 1).
///
/// Acklam's rational approximation polished by two Halley steps against the
/// erfc-based CDF. Rejects 0 and 1; streams feeding this should be built
/// with `skip_zero_point`.
pub fn inv_normal_cdf(p: f64) -> Result<f64, StatsError> {
    if !p.is_finite() || p <= 0.0 || p >= 1.0 {
        return Err(StatsError::QuantileDomain { p });
    }
    // Work in the lower half: 1 - p is exact, and the lower-tail CDF is
    // well conditioned for the polish steps.
    if p > 0.5 {
        return Ok(-inv_normal_cdf_lower(1.0 - p));
    }
    Ok(inv_normal_cdf_lower(p))
}

fn inv_normal_cdf_lower(p: f64) -> f64 {

    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let mut x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    for _ in 0..2 {
        let e = normal_cdf(x) - p;
        let u = e / standard_normal_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// Logistic map onto (0, 1).
pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable log of a sum of exponentials.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased (n-1) sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Weighted mean with normalized weights.
pub fn weighted_mean(weights: &[f64], xs: &[f64]) -> f64 {
    weights.iter().zip(xs).map(|(w, x)| w * x).sum()
}

/// Weighted variance with the reliability correction 1/(1 - sum w^2).
pub fn weighted_variance(weights: &[f64], xs: &[f64]) -> f64 {
    let m = weighted_mean(weights, xs);
    let w2: f64 = weights.iter().map(|w| w * w).sum();
    let raw: f64 = weights.iter().zip(xs).map(|(w, x)| w * (x - m) * (x - m)).sum();
    raw / (1.0 - w2)
}

/// Percentile bootstrap for the ratio var(a)/var(b).
///
/// Returns (point estimate, lower, upper) at the given two-sided confidence
/// level. Resampling is driven by a small deterministic mixer so identical
/// inputs give identical intervals.
pub fn bootstrap_variance_ratio(
    a: &[f64],
    b: &[f64],
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<VarianceRatio, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::NotEnoughData {
            needed: 2,
            got: a.len().min(b.len()),
        });
    }
    let point = sample_variance(a) / sample_variance(b);
    let mut ratios = Vec::with_capacity(resamples);
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut next = move || {
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        state.wrapping_mul(0x2545f4914f6cdd1d)
    };
    let mut ra = vec![0.0; a.len()];
    let mut rb = vec![0.0; b.len()];
    for _ in 0..resamples {
        for slot in ra.iter_mut() {
            *slot = a[(next() % a.len() as u64) as usize];
        }
        for slot in rb.iter_mut() {
            *slot = b[(next() % b.len() as u64) as usize];
        }
        let vb = sample_variance(&rb);
        if vb > 0.0 {
            ratios.push(sample_variance(&ra) / vb);
        }
    }
    ratios.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let alpha = (1.0 - confidence) / 2.0;
    let pick = |q: f64| {
        let idx = ((ratios.len() as f64 - 1.0) * q).round() as usize;
        ratios[idx.min(ratios.len() - 1)]
    };
    Ok(VarianceRatio {
        ratio: point,
        lower: pick(alpha),
        upper: pick(1.0 - alpha),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct VarianceRatio {
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Least squares slope and intercept of log(y) against log(x).
/// Needs at least two distinct x values.
pub fn fit_log_log_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), StatsError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(StatsError::NotEnoughData {
            needed: 2,
            got: xs.len(),
        });
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = mean(&lx);
    let my = mean(&ly);
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(StatsError::DegenerateFit);
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference quantiles computed externally at double precision.
    const QUANTILES: [(f64, f64); 20] = [
        (1e-12, -7.034483825301131),
        (1e-09, -5.9978070150076865),
        (1e-06, -4.753424308822899),
        (1e-04, -3.7190164854556804),
        (0.001, -3.090232306167813),
        (0.01, -2.3263478740408408),
        (0.025, -1.9599639845400545),
        (0.1, -1.2815515655446004),
        (0.25, -0.6744897501960817),
        (0.5, 0.0),
        (0.6, 0.2533471031357997),
        (0.75, 0.6744897501960817),
        (0.9, 1.2815515655446004),
        (0.975, 1.959963984540054),
        (0.99, 2.3263478740408408),
        (0.999, 3.090232306167813),
        (0.9999, 3.719016485455709),
        (0.999999, 4.753424308817087),
        (0.999999999, 5.997807019601637),
        (0.999999999999, 7.0344869100478356),
    ];

    #[test]
    fn quantile_matches_reference_below_1e9() {
        for &(p, x) in &QUANTILES {
            let got = inv_normal_cdf(p).unwrap();
            assert!(
                (got - x).abs() <= 1e-9,
                "p={p}: got {got}, want {x}, err {}",
                (got - x).abs()
            );
        }
    }

    #[test]
    fn quantile_rejects_endpoints() {
        assert!(inv_normal_cdf(0.0).is_err());
        assert!(inv_normal_cdf(1.0).is_err());
        assert!(inv_normal_cdf(f64::NAN).is_err());
    }

    #[test]
    fn cdf_quantile_roundtrip() {
        // Above x ~ 4.5 the rounding of p = Phi(x) to the nearest double
        // already perturbs x by more than 1e-9, so the roundtrip is only
        // meaningful below that.
        for i in 1..200 {
            let x = -6.0 + 10.5 * i as f64 / 200.0;
            let p = normal_cdf(x);
            let back = inv_normal_cdf(p).unwrap();
            assert!((back - x).abs() < 1e-9, "x={x} back={back}");
        }
    }

    #[test]
    fn erf_reference_points() {
        assert!((erf(1.0) - 0.8427007929497149).abs() < 1e-14);
        assert!((erf(3.5) - 0.999999256901628).abs() < 1e-13);
        assert!((erfc(5.0) - 1.5374597944280349e-12).abs() < 1e-24);
    }

    #[test]
    fn weighted_variance_matches_unweighted_when_uniform() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let w = [0.25; 4];
        let wv = weighted_variance(&w, &xs);
        assert!((wv - sample_variance(&xs)).abs() < 1e-12);
    }

    #[test]
    fn log_log_fit_recovers_exact_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|&x: &f64| 3.0 * x.powf(1.7)).collect();
        let (slope, _) = fit_log_log_slope(&xs, &ys).unwrap();
        assert!((slope - 1.7).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_ratio_of_identical_samples_contains_one() {
        let a: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin()).collect();
        let r = bootstrap_variance_ratio(&a, &a, 2000, 0.95, 7).unwrap();
        assert!(r.lower <= 1.0 && 1.0 <= r.upper);
        assert!((r.ratio - 1.0).abs() < 1e-12);
    }
}
