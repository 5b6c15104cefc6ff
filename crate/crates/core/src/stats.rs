//! Finite-window time statistics, simulated projection noise, bootstrap
//! uncertainties and thermalization postselection.
//!
//! Every random draw comes from ChaCha20 keyed by the user seed with the
//! stream set to the draw's index (time point or resample), so results do not
//! depend on how work is split between threads.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::ed::TimeTrace;
use crate::error::{Error, Result};
use crate::numeric::{map_indexed, CompensatedSum};

/// Identifier of the generator, recorded in run manifests.
pub const RNG_ALGORITHM: &str = "chacha20";

/// Default bootstrap resample count.
pub const DEFAULT_RESAMPLES: usize = 100_000;

/// Default postselection threshold on `|mu_exp - mu_micro|`.
pub const POSTSELECTION_THRESHOLD: f64 = 0.1;

fn rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Closed time interval `[lo, hi]` (us).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    /// `[tau_s, 13 tau_s]`.
    pub fn standard(tau_s: f64) -> Self {
        Self {
            lo: tau_s,
            hi: 13.0 * tau_s,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        let slack = 1e-12 * self.hi.abs().max(self.lo.abs());
        t >= self.lo - slack && t <= self.hi + slack
    }
}

/// Values of the trace whose times fall in the window, in time order.
pub fn window_samples(trace: &TimeTrace, window: Window) -> Vec<f64> {
    trace
        .times
        .iter()
        .zip(&trace.values)
        .filter(|(t, _)| window.contains(**t))
        .map(|(_, v)| *v)
        .collect()
}

/// Two-pass mean: the correction pass makes the mean of equal samples exact.
pub fn mean(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let s: CompensatedSum = samples.iter().copied().collect();
    let m = s.value() / n;
    let r: CompensatedSum = samples.iter().map(|x| x - m).collect();
    m + r.value() / n
}

/// Standard deviation with the `S - 1` denominator.
pub fn sample_std(samples: &[f64]) -> f64 {
    let m = mean(samples);
    let s: CompensatedSum = samples.iter().map(|x| (x - m) * (x - m)).collect();
    (s.value() / (samples.len() - 1) as f64).sqrt()
}

pub fn window_time_average(trace: &TimeTrace, window: Window) -> Result<f64> {
    let s = window_samples(trace, window);
    if s.is_empty() {
        return Err(Error::EmptyWindow {
            lo: window.lo,
            hi: window.hi,
        });
    }
    Ok(mean(&s))
}

pub fn window_fluctuation(trace: &TimeTrace, window: Window) -> Result<f64> {
    let s = window_samples(trace, window);
    if s.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: s.len(),
        });
    }
    Ok(sample_std(&s))
}

/// Replaces each value by `2k/r - 1` with `k ~ Binomial(r, (1 + value)/2)`,
/// the estimate from `r` projective measurements.
pub fn simulate_projective_sampling(
    trace: &TimeTrace,
    repetitions: u64,
    seed: u64,
) -> Result<TimeTrace> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter(
            "need at least one repetition".into(),
        ));
    }
    if let Some((k, v)) = trace
        .values
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.abs() <= 1.0 + 1e-9))
    {
        return Err(Error::OutOfRange {
            index: k,
            value: *v,
        });
    }
    let r = repetitions as f64;
    let values = trace
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let p = (0.5 * (1.0 + v)).clamp(0.0, 1.0);
            let dist = Binomial::new(repetitions, p)
                .map_err(|e| Error::InvalidParameter(format!("binomial: {e}")))?;
            let hits = dist.sample(&mut rng(seed, k as u64)) as f64;
            Ok(2.0 * hits / r - 1.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeTrace {
        values,
        ..trace.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowStats {
    pub mu_exp: f64,
    pub delta_exp: f64,
    pub samples: usize,
    pub window: Window,
    /// Bootstrap means of the resampled statistics.
    pub mu_boot_mean: f64,
    pub delta_boot_mean: f64,
    /// Bootstrap standard deviations, the reported uncertainties.
    pub mu_err: f64,
    pub delta_err: f64,
    pub seed: u64,
    pub resamples: usize,
    /// A single resample leaves the spread undefined; the errors are then 0.
    pub spread_undefined: bool,
}

/// Bootstrap of `mu_exp` and `delta_exp`: each resample draws the in-window
/// samples with replacement.
pub fn bootstrap_uncertainty(
    trace: &TimeTrace,
    window: Window,
    resamples: usize,
    seed: u64,
) -> Result<WindowStats> {
    let s = window_samples(trace, window);
    if s.is_empty() {
        return Err(Error::EmptyWindow {
            lo: window.lo,
            hi: window.hi,
        });
    }
    if s.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: s.len(),
        });
    }
    if resamples == 0 {
        return Err(Error::InvalidParameter("need at least one resample".into()));
    }
    let n = s.len();
    let stats = map_indexed(resamples, |i| {
        let mut r = rng(seed, i as u64);
        let draw: Vec<f64> = (0..n)
            .map(|_| s[rand::Rng::random_range(&mut r, 0..n)])
            .collect();
        (mean(&draw), sample_std(&draw))
    });
    let mus: Vec<f64> = stats.iter().map(|x| x.0).collect();
    let deltas: Vec<f64> = stats.iter().map(|x| x.1).collect();
    let single = resamples == 1;
    Ok(WindowStats {
        mu_exp: mean(&s),
        delta_exp: sample_std(&s),
        samples: n,
        window,
        mu_boot_mean: mean(&mus),
        delta_boot_mean: mean(&deltas),
        mu_err: if single { 0.0 } else { sample_std(&mus) },
        delta_err: if single { 0.0 } else { sample_std(&deltas) },
        seed,
        resamples,
        spread_undefined: single,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalPoint {
    pub mu_exp: f64,
    pub mu_micro: f64,
    pub d_eff: f64,
}

/// Points with `|mu_exp - mu_micro| < threshold` (strict).
pub fn postselect_thermalized(points: &[ThermalPoint], threshold: f64) -> Vec<ThermalPoint> {
    points
        .iter()
        .filter(|p| (p.mu_exp - p.mu_micro).abs() < threshold)
        .copied()
        .collect()
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let r = 0.5 * (i + j - 1) as f64 + 1.0;
        for &k in &idx[i..j] {
            out[k] = r;
        }
        i = j;
    }
    out
}

/// Spearman rank correlation.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: x.len(),
        });
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::SingularFit(
            "constant input has no rank correlation".into(),
        ));
    }
    Ok(cov / (vx * vy).sqrt())
}
