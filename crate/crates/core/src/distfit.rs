//! Distributions of the backscatter strengths.
//!
//! `Z_k = |g_k h_k|²` is the product of two exponentials and has density
//! `(2/λ) K0(2√(z/λ))`. The aggregate `Λ = Σ Z_k` has no closed form and is
//! approximated by moment-matched Gaussian, Gamma and generalized-K laws; the
//! maximum `Z = max Z_k` is exact through the K-th power of the CDF.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{adaptive_simpson, k0_unchecked, ln_gamma_unchecked, ln_k0_unchecked, one_minus_x_k1};

/// Normalization applied to strengths before histogramming.
pub const STRENGTH_UNIT: f64 = 1e-12;

const GENK_CDF_TOL: f64 = 1e-10;

fn check_strength(func: &'static str, z: f64, lambda: f64) -> Result<()> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::domain(func, z, "strength must be nonnegative"));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::domain(func, lambda, "λ must be positive"));
    }
    Ok(())
}

/// Density of a single product strength `Z_k`.
pub fn z_pdf(z: f64, lambda_prod: f64) -> Result<f64> {
    check_strength("z_pdf", z, lambda_prod)?;
    if z == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 / lambda_prod * k0_unchecked(2.0 * (z / lambda_prod).sqrt()))
}

/// CDF `1 − 2√(z/λ) K1(2√(z/λ))` of a single product strength.
pub fn z_cdf(z: f64, lambda_prod: f64) -> Result<f64> {
    check_strength("z_cdf", z, lambda_prod)?;
    Ok(z_cdf_normalized(z / lambda_prod))
}

/// CDF of `Z_k/λ`.
pub(crate) fn z_cdf_normalized(v: f64) -> f64 {
    if v.is_infinite() {
        return 1.0;
    }
    one_minus_x_k1(2.0 * v.sqrt()).clamp(0.0, 1.0)
}


/// Density of `max_k Z_k/λ` over `k` i.i.d. devices.
pub(crate) fn maxz_pdf_normalized(v: f64, k: u32) -> f64 {
    let x = 2.0 * v.sqrt();
    let k0 = k0_unchecked(x);
    if k == 1 {
        return 2.0 * k0;
    }
    if k0 == 0.0 {
        return 0.0;
    }
    k as f64 * one_minus_x_k1(x).powi(k as i32 - 1) * 2.0 * k0
}

fn check_k(func: &'static str, k: u32) -> Result<()> {
    if k == 0 {
        Err(Error::domain(func, 0.0, "K must be at least 1"))
    } else {
        Ok(())
    }
}

/// Density of `Z = max_k Z_k`.
pub fn maxz_pdf(z: f64, lambda_prod: f64, k: u32) -> Result<f64> {
    check_strength("maxz_pdf", z, lambda_prod)?;
    check_k("maxz_pdf", k)?;
    if z == 0.0 {
        return Ok(if k == 1 { f64::INFINITY } else { 0.0 });
    }
    Ok(maxz_pdf_normalized(z / lambda_prod, k) / lambda_prod)
}

/// CDF `F_{Z_k}(z)^K` of the maximum strength.
pub fn maxz_cdf(z: f64, lambda_prod: f64, k: u32) -> Result<f64> {
    check_strength("maxz_cdf", z, lambda_prod)?;
    check_k("maxz_cdf", k)?;
    Ok(z_cdf_normalized(z / lambda_prod).powi(k as i32))
}

/// Choice of the generalized-K shape parameter for `Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum ShapeChoice {
    /// `(K + √(K² + 3K))/3`, which matches the first two moments of `Λ`.
    #[default]
    MomentMatched,
    /// `m = K`.
    DeviceCount,
    /// `m = K + ε` with a caller-supplied adjustment.
    Adjusted(f64),
}

/// Generalized-K parameters `(m1, m2, Ω)`. Only the symmetric case `m1 = m2`
/// is supported, where the density kernel reduces to `K0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenKParams {
    pub m1: f64,
    pub m2: f64,
    pub omega: f64,
}

impl GenKParams {
    pub fn new(m1: f64, m2: f64, omega: f64) -> Result<Self> {
        if !(m1.is_finite() && m1 > 0.5) {
            return Err(Error::param("m1", m1, "shape must exceed 0.5"));
        }
        if m1 != m2 {
            return Err(Error::param("m2", m2, "only m1 = m2 is supported"));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::param("omega", omega, "mean must be positive"));
        }
        Ok(GenKParams { m1, m2, omega })
    }

    /// Fit to `Λ` for `k` devices with mean strength `lambda_prod`.
    pub fn for_aggregate(k: u32, lambda_prod: f64, shape: ShapeChoice) -> Result<Self> {
        check_k("GenKParams::for_aggregate", k)?;
        let kf = k as f64;
        let m = match shape {
            ShapeChoice::MomentMatched => (kf + (kf * kf + 3.0 * kf).sqrt()) / 3.0,
            ShapeChoice::DeviceCount => kf,
            ShapeChoice::Adjusted(eps) => kf + eps,
        };
        GenKParams::new(m, m, kf * lambda_prod)
    }

    pub fn shape(&self) -> f64 {
        self.m1
    }

    pub fn mean(&self) -> f64 {
        self.omega
    }

    pub fn variance(&self) -> f64 {
        let m = self.m1;
        self.omega * self.omega * (2.0 * m + 1.0) / (m * m)
    }

    /// `ln(m^{2m} / (Γ(m)² Ω^m))`, the constant the outage expressions call `a3`.
    pub fn ln_a3(&self) -> f64 {
        let m = self.m1;
        2.0 * m * m.ln() - 2.0 * ln_gamma_unchecked(m) - m * self.omega.ln()
    }
}

/// Generalized-K density
/// `2 (m²/Ω)^m x^{m−1} K0(2m√(x/Ω)) / Γ(m)²`.
pub fn genk_pdf(x: f64, params: &GenKParams) -> f64 {
    let m = params.m1;
    if x.is_nan() || x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return if m > 1.0 { 0.0 } else { f64::INFINITY };
    }
    let arg = 2.0 * m * (x / params.omega).sqrt();
    let ln_f = 2f64.ln() + m * (m * m / params.omega).ln() + (m - 1.0) * x.ln() + ln_k0_unchecked(arg)
        - 2.0 * ln_gamma_unchecked(m);
    ln_f.exp()
}

/// Generalized-K CDF by adaptive integration of the density.
///
/// With `u = 2m√(y/Ω)` the CDF becomes
/// `4^{1−m}/Γ(m)² ∫₀^U u^{2m−1} K0(u) du`, whose integrand is bounded at the
/// origin for `m > ½`.
pub fn genk_cdf(x: f64, params: &GenKParams) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return 0.0;
    }
    let m = params.m1;
    let upper = 2.0 * m * (x / params.omega).sqrt();
    let ln_c = (1.0 - m) * 4f64.ln() - 2.0 * ln_gamma_unchecked(m);
    let integrand = move |u: f64| -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        (ln_c + (2.0 * m - 1.0) * u.ln() + ln_k0_unchecked(u)).exp()
    };
    let peak = (2.0 * m - 1.5).max(0.5);
    let width = (2.0 * m).sqrt();
    let cap = peak + 40.0 * width + 60.0;
    let panels_for = |len: f64| ((len / (0.5 * width)).ceil() as usize).clamp(8, 2000);
    let value = if upper <= peak {
        adaptive_simpson(integrand, 0.0, upper, GENK_CDF_TOL, panels_for(upper))
    } else if upper >= cap {
        Ok(1.0)
    } else {
        adaptive_simpson(integrand, upper, cap, GENK_CDF_TOL, panels_for(cap - upper)).map(|tail| 1.0 - tail)
    };
    value.unwrap_or(f64::NAN).clamp(0.0, 1.0)
}

/// Kind tag of an approximating family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Gaussian,
    Gamma,
    GeneralizedK,
}

impl FamilyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyKind::Gaussian => "gaussian",
            FamilyKind::Gamma => "gamma",
            FamilyKind::GeneralizedK => "generalized_k",
        }
    }
}

/// A moment-matched approximation of the aggregate strength `Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ApproxFamily {
    Gaussian { mean: f64, variance: f64 },
    Gamma { shape: f64, scale: f64 },
    GeneralizedK(GenKParams),
}

impl ApproxFamily {
    pub fn kind(&self) -> FamilyKind {
        match self {
            ApproxFamily::Gaussian { .. } => FamilyKind::Gaussian,
            ApproxFamily::Gamma { .. } => FamilyKind::Gamma,
            ApproxFamily::GeneralizedK(_) => FamilyKind::GeneralizedK,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ApproxFamily::Gaussian { mean, .. } => mean,
            ApproxFamily::Gamma { shape, scale } => shape * scale,
            ApproxFamily::GeneralizedK(p) => p.omega,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ApproxFamily::Gaussian { variance, .. } => variance,
            ApproxFamily::Gamma { shape, scale } => shape * scale * scale,
            ApproxFamily::GeneralizedK(p) => p.variance(),
        }
    }

    /// Same family with its argument measured in units of `unit`.
    pub fn rescaled(&self, unit: f64) -> ApproxFamily {
        match *self {
            ApproxFamily::Gaussian { mean, variance } => ApproxFamily::Gaussian {
                mean: mean / unit,
                variance: variance / (unit * unit),
            },
            ApproxFamily::Gamma { shape, scale } => ApproxFamily::Gamma {
                shape,
                scale: scale / unit,
            },
            ApproxFamily::GeneralizedK(p) => ApproxFamily::GeneralizedK(GenKParams {
                omega: p.omega / unit,
                ..p
            }),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        approx_pdf(self, x)
    }
}

/// Density of an approximating family at `x`.
pub fn approx_pdf(family: &ApproxFamily, x: f64) -> f64 {
    match *family {
        ApproxFamily::Gaussian { mean, variance } => {
            let d = x - mean;
            (-d * d / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
        }
        ApproxFamily::Gamma { shape, scale } => {
            if x.is_nan() || x < 0.0 {
                0.0
            } else if x == 0.0 {
                match shape.partial_cmp(&1.0) {
                    Some(std::cmp::Ordering::Less) => f64::INFINITY,
                    Some(std::cmp::Ordering::Equal) => 1.0 / scale,
                    _ => 0.0,
                }
            } else {
                ((shape - 1.0) * x.ln() - x / scale - ln_gamma_unchecked(shape) - shape * scale.ln()).exp()
            }
        }
        ApproxFamily::GeneralizedK(ref p) => genk_pdf(x, p),
    }
}

/// The Gaussian, Gamma and generalized-K fits of `Λ` for `k` devices.
pub fn fit_families(k: u32, lambda_prod: f64) -> Result<[ApproxFamily; 3]> {
    fit_families_with(k, lambda_prod, ShapeChoice::MomentMatched)
}

pub fn fit_families_with(k: u32, lambda_prod: f64, shape: ShapeChoice) -> Result<[ApproxFamily; 3]> {
    check_k("fit_families", k)?;
    if !(lambda_prod.is_finite() && lambda_prod > 0.0) {
        return Err(Error::param("lambda_prod", lambda_prod, "must be positive"));
    }
    let kf = k as f64;
    Ok([
        ApproxFamily::Gaussian {
            mean: kf * lambda_prod,
            variance: 3.0 * kf * lambda_prod * lambda_prod,
        },
        ApproxFamily::Gamma {
            shape: kf / 3.0,
            scale: 3.0 * lambda_prod,
        },
        ApproxFamily::GeneralizedK(GenKParams::for_aggregate(k, lambda_prod, shape)?),
    ])
}

/// Equal-width density histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    /// Bins chosen by the Freedman–Diaconis rule `2·IQR·n^{−1/3}` over
    /// `[min, max]` of the samples.
    pub fn freedman_diaconis(samples: &[f64]) -> Result<Histogram> {
        if samples.len() < 2 {
            return Err(Error::param("samples", samples.len(), "need at least two samples"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
        let (lo, hi) = (sorted[0], sorted[n - 1]);
        let mut width = 2.0 * iqr / (n as f64).cbrt();
        if !(width > 0.0) {
            width = ((hi - lo) / 10.0).max(f64::MIN_POSITIVE);
        }
        let bins = (((hi - lo) / width).ceil() as usize).clamp(1, 100_000);
        Ok(Histogram::with_bins(&sorted, lo, width, bins))
    }

    pub fn with_bins(samples: &[f64], lo: f64, bin_width: f64, bins: usize) -> Histogram {
        let mut counts = vec![0u64; bins];
        for &s in samples {
            let idx = ((s - lo) / bin_width).floor();
            if idx >= 0.0 {
                let i = (idx as usize).min(bins - 1);
                counts[i] += 1;
            }
        }
        Histogram {
            lo,
            bin_width,
            counts,
            total: samples.len() as u64,
        }
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.counts.len()).map(move |i| self.lo + (i as f64 + 0.5) * self.bin_width)
    }

    pub fn densities(&self) -> impl Iterator<Item = f64> + '_ {
        let norm = self.total as f64 * self.bin_width;
        self.counts.iter().map(move |&c| c as f64 / norm)
    }

    /// Largest gap between the empirical bin density and the bin-averaged
    /// model density.
    pub fn sup_distance<F: Fn(f64) -> f64>(&self, pdf: F) -> f64 {
        let h = self.bin_width;
        self.densities()
            .enumerate()
            .map(|(i, d)| {
                let a = self.lo + i as f64 * h;
                // Simpson average over the bin on four sub-intervals
                let pts = [a, a + 0.25 * h, a + 0.5 * h, a + 0.75 * h, a + h];
                let fs: Vec<f64> = pts.iter().map(|&x| finite_or_zero(pdf(x))).collect();
                let avg = (fs[0] + 4.0 * fs[1] + 2.0 * fs[2] + 4.0 * fs[3] + fs[4]) / 12.0;
                (d - avg).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < n {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[n - 1]
    }
}

/// Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov critical value `√(−ln(α/2)/2)/√n` for sample size `n`.
pub fn ks_critical_value(n: usize, significance: f64) -> f64 {
    (-(0.5 * significance).ln() / 2.0).sqrt() / (n as f64).sqrt()
}
