//! Seeded Monte Carlo estimates of every rate and outage metric.
//!
//! Trials are grouped into fixed blocks of consecutive indices. Each block is
//! accumulated serially, and block summaries are combined by a pairwise tree
//! in index order, so the result is bit-identical for any worker count.

use std::f64::consts::LOG2_E;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, draw_realization, stream_for_trial, ChannelRealization, ScenarioParams, TrialRng};
use crate::error::{Error, Result};
use crate::rates::{cellular_rate_unchecked, iot_rate_for_strength, Scheme, Source};
use crate::specfun::EULER_GAMMA;

/// Trials per serial block.
const BLOCK: u64 = 512;

/// Divisor applied to strength samples before they are emitted.
pub const STRENGTH_UNIT: f64 = crate::distfit::STRENGTH_UNIT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    /// 0 uses the high-SNR cellular rate per realization; otherwise the inner
    /// expectation over the IoT symbols is sampled this many times.
    pub inner_c_samples: u32,
    /// Thread count; 0 lets rayon decide. Never affects results.
    pub workers: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            trials: 100_000,
            seed: 0,
            inner_c_samples: 0,
            workers: 0,
        }
    }
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        McConfig {
            trials,
            seed,
            ..McConfig::default()
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_inner_samples(mut self, samples: u32) -> Self {
        self.inner_c_samples = samples;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("mc.trials", self.trials, "need at least one trial"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate {
    pub value: f64,
    /// Sample standard deviation over `√trials`.
    pub stderr: f64,
    pub trials: u64,
    pub source: Source,
}

impl MetricEstimate {
    /// Whether `x` lies within `k` standard errors.
    pub fn within(&self, x: f64, k: f64) -> bool {
        (self.value - x).abs() <= k * self.stderr
    }
}

/// Streaming mean and variance; merges follow Chan et al.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, other: &RunningStats) -> RunningStats {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        RunningStats {
            n,
            mean: self.mean + d * nb / n as f64,
            m2: self.m2 + other.m2 + d * d * na * nb / n as f64,
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> MetricEstimate {
        MetricEstimate {
            value: self.mean,
            stderr: (self.variance() / self.n as f64).sqrt(),
            trials: self.n,
            source: Source::MonteCarlo,
        }
    }
}

fn with_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::param("mc.workers", workers, e.to_string()))?;
    Ok(pool.install(job))
}

/// Folds `items` pairwise, left to right at every level.
fn tree_reduce<T: Clone>(mut items: Vec<T>, merge: impl Fn(&T, &T) -> T) -> Option<T> {
    while items.len() > 1 {
        items = items
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => merge(a, b),
                [a] => a.clone(),
                _ => unreachable!(),
            })
            .collect();
    }
    items.pop()
}

/// Runs `f` on every trial and returns per-metric statistics.
fn run_trials<const M: usize, F>(params: &ScenarioParams, mc: &McConfig, f: F) -> Result<[RunningStats; M]>
where
    F: Fn(&ChannelRealization, &mut TrialRng) -> [f64; M] + Sync,
{
    params.validate()?;
    mc.validate()?;
    let blocks = mc.trials.div_ceil(BLOCK);
    let block = |b: u64| {
        let mut stats = [RunningStats::default(); M];
        let end = ((b + 1) * BLOCK).min(mc.trials);
        let mut real: Option<ChannelRealization> = None;
        for t in b * BLOCK..end {
            let mut rng = stream_for_trial(mc.seed, t);
            match real.as_mut() {
                Some(r) => r.resample(params, &mut rng),
                None => real = Some(draw_realization(params, &mut rng)),
            }
            let values = f(real.as_ref().unwrap(), &mut rng);
            for (s, v) in stats.iter_mut().zip(values) {
                s.push(v);
            }
        }
        stats
    };
    let partials: Vec<[RunningStats; M]> =
        with_pool(mc.workers, || (0..blocks).into_par_iter().map(block).collect())?;
    let merged = tree_reduce(partials, |a, b| {
        let mut out = *a;
        for (o, s) in out.iter_mut().zip(b) {
            *o = o.merge(s);
        }
        out
    });
    Ok(merged.expect("at least one block"))
}

/// `E_c[log2(1 + p|h0 + α Σ g_k h_k c_k|²/σ²)]` estimated with `samples`
/// draws of unit-variance Gaussian symbols, for both schemes at once.
fn inner_cellular_rates(
    real: &ChannelRealization,
    params: &ScenarioParams,
    rng: &mut TrialRng,
    samples: u32,
) -> (f64, f64) {
    let snr = params.snr_scale();
    let alpha = params.alpha;
    let l = real.argmax_index;
    let (mut sa, mut sda) = (0.0, 0.0);
    for _ in 0..samples {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut chosen = Complex64::new(0.0, 0.0);
        for (k, (g, h)) in real.g.iter().zip(&real.h).enumerate() {
            let c = complex_gaussian(rng, 1.0);
            let term = g * h * c;
            sum += term;
            if k == l {
                chosen = term;
            }
        }
        sa += (snr * (real.h0 + alpha * sum).norm_sqr()).ln_1p();
        sda += (snr * (real.h0 + alpha * chosen).norm_sqr()).ln_1p();
    }
    let n = samples as f64;
    (sa / n * LOG2_E, sda / n * LOG2_E)
}

fn cellular_rates(real: &ChannelRealization, params: &ScenarioParams, rng: &mut TrialRng, inner: u32) -> (f64, f64) {
    if inner > 0 {
        return inner_cellular_rates(real, params, rng, inner);
    }
    let h0 = real.h0_sq().max(f64::MIN_POSITIVE);
    let a2 = params.alpha_sq();
    (
        cellular_rate_unchecked(h0, a2 * real.lambda_sum, params),
        cellular_rate_unchecked(h0, a2 * real.z_max, params),
    )
}

/// Ergodic rate estimates for both schemes from one set of realizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McRates {
    pub sa_cellular: MetricEstimate,
    pub sa_iot: MetricEstimate,
    pub sda_cellular: MetricEstimate,
    pub sda_iot: MetricEstimate,
}

impl McRates {
    pub fn scheme(&self, scheme: Scheme) -> (MetricEstimate, MetricEstimate) {
        match scheme {
            Scheme::Sa => (self.sa_cellular, self.sa_iot),
            Scheme::Sda => (self.sda_cellular, self.sda_iot),
        }
    }
}

pub fn mc_rates(params: &ScenarioParams, mc: &McConfig) -> Result<McRates> {
    let inner = mc.inner_c_samples;
    let [sc, si, dc, di] = run_trials(params, mc, |real, rng| {
        let (sa, sda) = cellular_rates(real, params, rng, inner);
        [
            sa,
            iot_rate_for_strength(real.lambda_sum, params),
            sda,
            iot_rate_for_strength(real.z_max, params),
        ]
    })?;
    Ok(McRates {
        sa_cellular: sc.estimate(),
        sa_iot: si.estimate(),
        sda_cellular: dc.estimate(),
        sda_iot: di.estimate(),
    })
}

/// Cellular and IoT ergodic rate estimates of one scheme.
pub fn mc_ergodic_rates(
    params: &ScenarioParams,
    mc: &McConfig,
    scheme: Scheme,
) -> Result<(MetricEstimate, MetricEstimate)> {
    Ok(mc_rates(params, mc)?.scheme(scheme))
}

/// First-order upper bound of the cellular rate,
/// `log2(pα²B/σ²) + (|h0|²/(α²B) − E0)·log2 e`.
pub fn cellular_rate_bound(h0_sq: f64, strength: f64, params: &ScenarioParams) -> f64 {
    let b = params.alpha_sq() * strength;
    if b <= 0.0 {
        return f64::INFINITY;
    }
    (params.snr_scale() * b).log2() + (h0_sq / b - EULER_GAMMA) * LOG2_E
}

/// Empirical outage probabilities of one scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimates {
    /// Cellular outage of the first-order rate bound, the event the closed
    /// forms describe.
    pub cellular: MetricEstimate,
    /// Cellular outage of the high-SNR rate itself.
    pub cellular_high_snr: MetricEstimate,
    pub iot: MetricEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOutages {
    pub sa: OutageEstimates,
    pub sda: OutageEstimates,
}

impl McOutages {
    pub fn scheme(&self, scheme: Scheme) -> OutageEstimates {
        match scheme {
            Scheme::Sa => self.sa,
            Scheme::Sda => self.sda,
        }
    }
}

fn indicator(event: bool) -> f64 {
    if event {
        1.0
    } else {
        0.0
    }
}

pub fn mc_outages(params: &ScenarioParams, mc: &McConfig) -> Result<McOutages> {
    let (rs, rc) = (params.target_rate_s, params.target_rate_c);
    let stats = run_trials(params, mc, |real, _rng| {
        let h0 = real.h0_sq().max(f64::MIN_POSITIVE);
        let a2 = params.alpha_sq();
        let mut out = [0.0; 6];
        for (i, strength) in [real.lambda_sum, real.z_max].into_iter().enumerate() {
            out[3 * i] = indicator(cellular_rate_bound(h0, strength, params) <= rs);
            out[3 * i + 1] = indicator(cellular_rate_unchecked(h0, a2 * strength, params) <= rs);
            out[3 * i + 2] = indicator(iot_rate_for_strength(strength, params) < rc);
        }
        out
    })?;
    let pick = |i: usize| OutageEstimates {
        cellular: stats[3 * i].estimate(),
        cellular_high_snr: stats[3 * i + 1].estimate(),
        iot: stats[3 * i + 2].estimate(),
    };
    Ok(McOutages { sa: pick(0), sda: pick(1) })
}

/// Cellular and IoT outage estimates of one scheme.
pub fn mc_outage(params: &ScenarioParams, mc: &McConfig, scheme: Scheme) -> Result<OutageEstimates> {
    Ok(mc_outages(params, mc)?.scheme(scheme))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrengthKind {
    LambdaSum,
    ZMax,
}

/// Per-trial strengths divided by [`STRENGTH_UNIT`], in trial order.
pub fn mc_strength_samples(params: &ScenarioParams, mc: &McConfig, which: StrengthKind) -> Result<Vec<f64>> {
    params.validate()?;
    mc.validate()?;
    let blocks = mc.trials.div_ceil(BLOCK);
    let block = |b: u64| {
        let end = ((b + 1) * BLOCK).min(mc.trials);
        (b * BLOCK..end)
            .map(|t| {
                let r = draw_realization(params, &mut stream_for_trial(mc.seed, t));
                let raw = match which {
                    StrengthKind::LambdaSum => r.lambda_sum,
                    StrengthKind::ZMax => r.z_max,
                };
                raw / STRENGTH_UNIT
            })
            .collect::<Vec<f64>>()
    };
    let parts: Vec<Vec<f64>> = with_pool(mc.workers, || (0..blocks).into_par_iter().map(block).collect())?;
    Ok(parts.concat())
}
