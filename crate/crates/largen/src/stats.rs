//! Estimation layer: translation-averaged correlators, batch-means error bars
//! with integrated autocorrelation times, power-law fits and z-scores.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{dft_forward, dft_inverse, ScalarLattice, SpectralTable};

/// Window factor of the automatic windowing rule for `tau_int`.
pub const WINDOW_FACTOR: f64 = 5.0;

/// `c(r) = n⁻² Σ_x a(x) b(x+r)`, computed by FFT cross-correlation.
pub fn translation_correlator(a: &ScalarLattice, b: &ScalarLattice) -> Result<ScalarLattice> {
    if a.spec != b.spec {
        return Err(Error::SpecMismatch(format!("{:?} vs {:?}", a.spec, b.spec)));
    }
    let ah = dft_forward(a);
    let bh = dft_forward(b);
    let values: Vec<Complex64> =
        ah.values.iter().zip(&bh.values).map(|(x, y)| x.conj() * y).collect();
    Ok(dft_inverse(&SpectralTable { spec: a.spec, values }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeries {
    pub values: Vec<f64>,
    /// Steps between consecutive samples.
    pub stride: usize,
    pub dt: f64,
}

impl SampleSeries {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, stride: 1, dt: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateResult {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    /// Integrated autocorrelation time in units of samples (0.5 for iid data).
    pub tau_int: f64,
}

/// Integrated autocorrelation time with automatic windowing: the sum
/// `1/2 + Σ_{t≤W} ρ(t)` is stopped at the first `W ≥ 5 τ(W)`.
pub fn integrated_autocorrelation(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.5;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let c0 = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return 0.5;
    }
    let mut tau = 0.5;
    for w in 1..n {
        let ct = centered[..n - w].iter().zip(&centered[w..]).map(|(x, y)| x * y).sum::<f64>()
            / n as f64;
        tau += ct / c0;
        if w as f64 >= WINDOW_FACTOR * tau {
            break;
        }
    }
    tau.max(0.5)
}

/// Batch-means estimate of the mean and its standard error.
pub fn batch_estimate(series: &SampleSeries, n_batches: usize) -> Result<EstimateResult> {
    let v = &series.values;
    if n_batches < 2 || v.len() < 2 * n_batches {
        return Err(Error::Statistics(format!(
            "series of length {} too short for {n_batches} batches",
            v.len()
        )));
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("sample {x}")));
    }
    let len = v.len() / n_batches;
    let used = &v[..len * n_batches];
    let batches: Vec<f64> =
        used.chunks(len).map(|c| c.iter().sum::<f64>() / len as f64).collect();
    let mean = batches.iter().sum::<f64>() / n_batches as f64;
    let var = batches.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n_batches - 1) as f64;
    Ok(EstimateResult {
        mean,
        stderr: (var / n_batches as f64).sqrt(),
        n_samples: used.len(),
        tau_int: integrated_autocorrelation(used),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    /// Decay exponent `p` in `deviation ≈ amplitude · N^{-p}`.
    pub exponent: f64,
    pub amplitude: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

pub fn rate_fit(ns: &[f64], deviations: &[f64]) -> Result<RateFit> {
    if ns.len() != deviations.len() || ns.len() < 3 {
        return Err(Error::Statistics("rate fit needs at least 3 (N, deviation) pairs".into()));
    }
    if let Some(d) = deviations.iter().find(|d| !(**d > 0.0)) {
        return Err(Error::Statistics(format!("nonpositive deviation {d}")));
    }
    let xs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = deviations.iter().map(|d| d.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>()
        / k)
        .sqrt();
    Ok(RateFit { exponent: -slope, amplitude: intercept.exp(), residual })
}

pub fn sigma_test(estimate: &EstimateResult, prediction: f64) -> Result<f64> {
    let diff = estimate.mean - prediction;
    if estimate.stderr > 0.0 {
        Ok(diff / estimate.stderr)
    } else if diff == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::Statistics("zero stderr with mean different from prediction".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_field(spec: LatticeSpec, rng: &mut ChaCha8Rng) -> ScalarLattice {
        let values = (0..spec.sites()).map(|_| StandardNormal.sample(rng)).collect();
        ScalarLattice { spec, values }
    }

    #[test]
    fn correlator_of_constants() {
        let spec = LatticeSpec::new(3, 1.0).unwrap();
        let one = ScalarLattice::constant(spec, 1.0);
        let c = translation_correlator(&one, &one).unwrap();
        assert!(c.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn correlator_with_one_hot_shifts() {
        let spec = LatticeSpec::new(3, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_field(spec, &mut rng);
        let mut a = ScalarLattice::zeros(spec);
        a.values[spec.index(2, 5)] = 1.0;
        let c = translation_correlator(&a, &b).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert!((c.at(i, j) * 64.0 - b.at(2 + i, 5 + j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn correlator_matches_double_loop() {
        let spec = LatticeSpec::new(3, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (a, b) = (random_field(spec, &mut rng), random_field(spec, &mut rng));
        let c = translation_correlator(&a, &b).unwrap();
        for r1 in 0..8 {
            for r2 in 0..8 {
                let mut s = 0.0;
                for x1 in 0..8 {
                    for x2 in 0..8 {
                        s += a.at(x1, x2) * b.at(x1 + r1, x2 + r2);
                    }
                }
                assert!((c.at(r1, r2) - s / 64.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn iid_series_error_bar() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let e = batch_estimate(&SampleSeries::new(v), 50).unwrap();
        assert!((e.stderr - 0.01).abs() <= 0.3 * 0.01, "stderr {}", e.stderr);
        assert!((e.tau_int - 0.5).abs() < 0.2);
    }

    #[test]
    fn constant_series_has_zero_error() {
        let e = batch_estimate(&SampleSeries::new(vec![2.5; 100]), 10).unwrap();
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.mean, 2.5);
        assert_eq!(e.tau_int, 0.5);
    }

    #[test]
    fn ar1_autocorrelation_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho: f64 = 0.9;
        let mut x = 0.0;
        let v: Vec<f64> = (0..200_000)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x = rho * x + (1.0 - rho * rho).sqrt() * e;
                x
            })
            .collect();
        let e = batch_estimate(&SampleSeries::new(v), 50).unwrap();
        let want = (1.0 + rho) / (1.0 - rho) / 2.0;
        assert!((e.tau_int - want).abs() <= 0.3 * want, "tau {}", e.tau_int);
    }

    #[test]
    fn short_series_is_rejected() {
        assert!(batch_estimate(&SampleSeries::new(vec![1.0; 5]), 3).is_err());
    }

    #[test]
    fn exact_power_laws() {
        let ns = [4.0, 8.0, 16.0, 32.0];
        let d1: Vec<f64> = ns.iter().map(|n| 3.0 / n).collect();
        let f = rate_fit(&ns, &d1).unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-10);
        assert!((f.amplitude - 3.0).abs() < 1e-10);
        let d2: Vec<f64> = ns.iter().map(|n: &f64| 0.2 / n.sqrt()).collect();
        assert!((rate_fit(&ns, &d2).unwrap().exponent - 0.5).abs() < 1e-10);
        assert!(rate_fit(&ns, &[1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(rate_fit(&ns[..2], &d1[..2]).is_err());
    }

    #[test]
    fn noisy_inverse_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ns = [4.0, 8.0, 16.0, 32.0];
        for _ in 0..100 {
            let d: Vec<f64> = ns
                .iter()
                .map(|n| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    (1.0 + 0.1 * e).abs() / n
                })
                .collect();
            let p = rate_fit(&ns, &d).unwrap().exponent;
            assert!((0.7..=1.3).contains(&p), "exponent {p}");
        }
    }

    #[test]
    fn z_scores() {
        let e = EstimateResult { mean: 1.0, stderr: 0.5, n_samples: 10, tau_int: 0.5 };
        assert_eq!(sigma_test(&e, 1.0).unwrap(), 0.0);
        assert!((sigma_test(&e, 0.0).unwrap() - 2.0).abs() < 1e-15);
        let z = EstimateResult { stderr: 0.0, ..e };
        assert!(sigma_test(&z, 0.5).is_err());
        assert_eq!(sigma_test(&z, 1.0).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn correlator_agrees_with_site_pairs(seed in 0u64..1000, r1 in 0i64..4, r2 in 0i64..4) {
            let spec = LatticeSpec::new(2, 1.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (random_field(spec, &mut rng), random_field(spec, &mut rng));
            let c = translation_correlator(&a, &b).unwrap();
            let mut s = 0.0;
            for x1 in 0..4 { for x2 in 0..4 { s += a.at(x1, x2) * b.at(x1 + r1, x2 + r2); } }
            prop_assert!((c.at(r1, r2) - s / 16.0).abs() < 1e-12);
        }
    }
}
