//! Ergodic and per-realization rates for simultaneous access (SA) and
//! selection diversity access (SDA).
//!
//! Every closed form below assumes double fading on the backscatter link.
//! Strength integrals run over `v = z/λ` so the truncation bounds in
//! [`QuadratureSpec`] mean the same thing for every scenario.

use std::f64::consts::{LOG2_E, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, ScenarioParams};
use crate::distfit::maxz_pdf_normalized;
use crate::error::{Error, Result};
use crate::specfun::{e1_unchecked, x_k1, GaussChebyshev, QuadratureSpec, EULER_GAMMA};

/// Relative change between `n` and `2n` nodes above which a quadrature value
/// is flagged as unconverged.
pub const CONVERGENCE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Sa,
    Sda,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::Sa, Scheme::Sda];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Sa => "sa",
            Scheme::Sda => "sda",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sa" => Ok(Scheme::Sa),
            "sda" => Ok(Scheme::Sda),
            other => Err(Error::param("scheme", other, "expected sa or sda")),
        }
    }
}

/// Where a number came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Analytic,
    Asymptotic,
    MonteCarlo,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Analytic => "analytic",
            Source::Asymptotic => "asymptotic",
            Source::MonteCarlo => "monte_carlo",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Source::Analytic),
            "asymptotic" => Ok(Source::Asymptotic),
            "monte_carlo" => Ok(Source::MonteCarlo),
            other => Err(Error::param("source", other, "unknown source tag")),
        }
    }
}

/// Cellular and IoT rates of one scheme, in bit/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub cellular_rate: f64,
    pub iot_sum_rate: f64,
    pub scheme: Scheme,
    pub source: Source,
    /// False when a quadrature behind either rate failed its refinement check.
    pub converged: bool,
}

impl RatePair {
    /// Closed-form rates of `scheme`.
    pub fn analytic(params: &ScenarioParams, scheme: Scheme, quad: &QuadratureSpec) -> Result<RatePair> {
        match scheme {
            Scheme::Sa => Ok(RatePair {
                cellular_rate: sa_cellular_ergodic(params),
                iot_sum_rate: sa_iot_ergodic(params),
                scheme,
                source: Source::Analytic,
                converged: true,
            }),
            Scheme::Sda => {
                let cell = sda_cellular_ergodic(params, quad)?;
                let iot = sda_iot_ergodic_exact(params, quad)?;
                Ok(RatePair {
                    cellular_rate: cell.value,
                    iot_sum_rate: iot.value,
                    scheme,
                    source: Source::Analytic,
                    converged: cell.converged && iot.converged,
                })
            }
        }
    }
}

/// A quadrature value together with its refinement check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadValue {
    pub value: f64,
    /// Same quantity with twice the nodes.
    pub refined: f64,
    pub converged: bool,
}

impl QuadValue {
    fn from_pair(value: f64, refined: f64) -> QuadValue {
        let scale = value.abs().max(refined.abs()).max(f64::MIN_POSITIVE);
        QuadValue {
            value,
            refined,
            converged: (value - refined).abs() / scale <= CONVERGENCE_TOL,
        }
    }
}

/// High-SNR cellular rate `log2(p|h0|²/σ²) + E1(|h0|²/B)·log2 e`, where `B`
/// is the received backscatter power (`α²Λ` for SA, `α²Z` for SDA).
pub fn high_snr_cellular_rate(h0_sq: f64, backscatter_power: f64, params: &ScenarioParams) -> Result<f64> {
    if !(h0_sq.is_finite() && h0_sq > 0.0) {
        return Err(Error::domain("high_snr_cellular_rate", h0_sq, "|h0|² must be positive"));
    }
    if backscatter_power.is_nan() || backscatter_power < 0.0 {
        return Err(Error::domain(
            "high_snr_cellular_rate",
            backscatter_power,
            "backscatter power must be nonnegative",
        ));
    }
    Ok(cellular_rate_unchecked(h0_sq, backscatter_power, params))
}

pub(crate) fn cellular_rate_unchecked(h0_sq: f64, backscatter_power: f64, params: &ScenarioParams) -> f64 {
    let direct = (params.p_watts * h0_sq / params.sigma2_watts).log2();
    if backscatter_power == 0.0 {
        return direct;
    }
    direct + e1_unchecked(h0_sq / backscatter_power) * LOG2_E
}

/// `Npα²/σ²`, the post-combining IoT SNR per unit strength.
fn iot_gain(params: &ScenarioParams) -> f64 {
    params.n_spread as f64 * params.snr_scale() * params.alpha_sq()
}

/// IoT rate `(1/N)·log2(1 + Npα²B/σ²)` for aggregate strength `B`.
pub(crate) fn iot_rate_for_strength(strength: f64, params: &ScenarioParams) -> f64 {
    (iot_gain(params) * strength).ln_1p() * LOG2_E / params.n_spread as f64
}

/// Exact SA IoT sum rate `(1/N)·log2(1 + Npα²Λ/σ²)` of one realization.
pub fn sa_iot_sum_rate_realized(realization: &ChannelRealization, params: &ScenarioParams) -> f64 {
    iot_rate_for_strength(realization.lambda_sum, params)
}

/// SDA IoT rate of one realization; only the strongest device transmits.
pub fn sda_iot_rate_realized(realization: &ChannelRealization, params: &ScenarioParams) -> f64 {
    iot_rate_for_strength(realization.z_max, params)
}

/// Per-device SINRs after MRC along the SIC chain. Device `j` is decoded with
/// devices `j+1, …, K` still present as interference.
pub fn sic_device_sinrs(realization: &ChannelRealization, params: &ScenarioParams) -> Vec<f64> {
    let c = iot_gain(params);
    let z = &realization.z;
    // interference left when device j is decoded: Σ_{i>j} z_i
    let mut suffix = vec![0.0; z.len()];
    let mut acc = 0.0;
    for j in (0..z.len()).rev() {
        suffix[j] = acc;
        acc += z[j];
    }
    z.iter().zip(&suffix).map(|(&zj, &rest)| c * zj / (1.0 + c * rest)).collect()
}

/// `Σ_j (1/N)·log2(1 + γ_j)` over the SIC chain.
pub fn sic_sum_rate(realization: &ChannelRealization, params: &ScenarioParams) -> f64 {
    let n = params.n_spread as f64;
    sic_device_sinrs(realization, params)
        .iter()
        .map(|g| g.ln_1p() * LOG2_E / n)
        .sum()
}

/// SA cellular ergodic rate under the Gaussian approximation of `Λ`:
/// `log2(pλ0/σ²) + [ln(1 + Kα²λ/λ0) − 3Kλ²α⁴/(2(λ0 + Kα²λ)²) − E0]·log2 e`.
pub fn sa_cellular_ergodic(params: &ScenarioParams) -> f64 {
    let k = params.k_devices as f64;
    let a2 = params.alpha_sq();
    let (l0, lam) = (params.lambda0, params.lambda_prod);
    let mean_b = k * a2 * lam;
    let correction = 3.0 * k * lam * lam * a2 * a2 / (2.0 * (l0 + mean_b).powi(2));
    (params.p_watts * l0 / params.sigma2_watts).log2() + ((mean_b / l0).ln_1p() - correction - EULER_GAMMA) * LOG2_E
}

/// SA IoT ergodic sum rate from a second-order expansion around `E[Λ]`.
pub fn sa_iot_ergodic(params: &ScenarioParams) -> f64 {
    let k = params.k_devices as f64;
    let n = params.n_spread as f64;
    let c = iot_gain(params);
    let mean = c * k * params.lambda_prod;
    let var = 3.0 * k * (c * params.lambda_prod).powi(2);
    (mean.ln_1p() - var / (2.0 * (1.0 + mean).powi(2))) * LOG2_E / n
}

/// `∫₀^M f(v) dv` by Gauss–Chebyshev with `n` and `2n` nodes.
///
/// The strength densities carry a `ln v` singularity at the origin and most
/// of their mass sits far below `M`, so the rule is applied after `v = u²`,
/// which makes the integrand vanish linearly at 0 and spreads the mass over
/// `[0, √M]`.
fn gc_pair<F: Fn(f64) -> f64>(f: F, upper: f64, n: usize) -> Result<(f64, f64)> {
    let g = |u: f64| 2.0 * u * f(u * u);
    let root = upper.sqrt();
    let coarse = GaussChebyshev::new(n)?.integrate(g, root)?;
    let fine = GaussChebyshev::new(2 * n)?.integrate(g, root)?;
    Ok((coarse, fine))
}

/// SDA cellular ergodic rate
/// `log2(pλ0/σ²) − E0·log2 e + log2 e·∫ ln(1 + α²λv/λ0) f_{Z/λ}(v) dv`,
/// integrated by Gauss–Chebyshev over `[0, M1]`.
pub fn sda_cellular_ergodic(params: &ScenarioParams, quad: &QuadratureSpec) -> Result<QuadValue> {
    quad.validate()?;
    let k = params.k_devices;
    let ratio = params.alpha_sq() * params.lambda_prod / params.lambda0;
    let integrand = |v: f64| (ratio * v).ln_1p() * maxz_pdf_normalized(v, k);
    let (coarse, fine) = gc_pair(integrand, quad.m1_bound, quad.n_nodes)?;
    let base = (params.p_watts * params.lambda0 / params.sigma2_watts).log2() - EULER_GAMMA * LOG2_E;
    Ok(QuadValue::from_pair(base + coarse * LOG2_E, base + fine * LOG2_E))
}

/// SDA IoT ergodic rate `E[(1/N)·log2(1 + Npα²Z/σ²)]` over the exact law of
/// the strongest strength, integrated by Gauss–Chebyshev over `[0, M2]`.
pub fn sda_iot_ergodic_exact(params: &ScenarioParams, quad: &QuadratureSpec) -> Result<QuadValue> {
    quad.validate()?;
    let k = params.k_devices;
    let c = iot_gain(params) * params.lambda_prod;
    let n = params.n_spread as f64;
    let integrand = |v: f64| (c * v).ln_1p() * LOG2_E / n * maxz_pdf_normalized(v, k);
    let (coarse, fine) = gc_pair(integrand, quad.m2_bound, quad.n_nodes)?;
    Ok(QuadValue::from_pair(coarse, fine))
}

/// Extreme-value normalization of the strongest strength and its image in the
/// rate domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GumbelNormalization {
    /// Location `a_K` in watts.
    pub a_k: f64,
    /// Scale `b_K` in watts.
    pub b_k: f64,
    /// `(1/N)·log2(1 + Npα²a_K/σ²)`.
    pub a_bar: f64,
    /// `(1/N)·log2((1 + Npα²(a_K + b_K)/σ²)/(1 + Npα²a_K/σ²))`.
    pub b_bar: f64,
}

impl GumbelNormalization {
    fn from_strengths(a_k: f64, b_k: f64, params: &ScenarioParams) -> GumbelNormalization {
        let c = iot_gain(params);
        let n = params.n_spread as f64;
        let a_bar = (c * a_k).ln_1p() * LOG2_E / n;
        let b_bar = ((c * b_k) / (1.0 + c * a_k)).ln_1p() * LOG2_E / n;
        GumbelNormalization { a_k, b_k, a_bar, b_bar }
    }

    /// Mean of the limiting Gumbel law in the rate domain, `E0·b̄ + ā`.
    pub fn asymptotic_rate(&self) -> f64 {
        EULER_GAMMA * self.b_bar + self.a_bar
    }
}

/// Closed-form normalizers
/// `a_K = (λ/4)(ln(K√(π/2)) + ½ ln ln(K√π))²`, `b_K = (λ/2) ln(K√π)`.
///
/// The logarithms act on the λ-normalized strength, for which the tail is
/// `P(Z_k/λ > v) ~ √π v^{1/4} e^{−2√v}`.
pub fn gumbel_normalizers(params: &ScenarioParams) -> Result<GumbelNormalization> {
    let k = params.k_devices;
    let kf = k as f64;
    let inner = kf * PI.sqrt();
    if inner <= std::f64::consts::E {
        return Err(Error::AsymptoticRegime {
            k,
            reason: "ln ln(K√π) must be positive; need K ≥ 2",
        });
    }
    let lam = params.lambda_prod;
    let root = (kf * (PI / 2.0).sqrt()).ln() + 0.5 * inner.ln().ln();
    let a_k = lam / 4.0 * root * root;
    let b_k = lam / 2.0 * inner.ln();
    Ok(GumbelNormalization::from_strengths(a_k, b_k, params))
}

/// Normalizers from the exact quantiles `a_K = F⁻¹(1 − 1/K)` and
/// `b_K = F⁻¹(1 − 1/(Ke)) − a_K` of the single-device strength law.
pub fn exact_normalizers(params: &ScenarioParams) -> Result<GumbelNormalization> {
    let k = params.k_devices;
    if k < 2 {
        return Err(Error::AsymptoticRegime {
            k,
            reason: "need at least two devices",
        });
    }
    let kf = k as f64;
    let a = strength_tail_inverse(1.0 / kf);
    let b = strength_tail_inverse(1.0 / (kf * std::f64::consts::E)) - a;
    let lam = params.lambda_prod;
    Ok(GumbelNormalization::from_strengths(a * lam, b * lam, params))
}

/// Solves `P(Z_k/λ > v) = q` for `v` by bisection.
pub(crate) fn strength_tail_inverse(q: f64) -> f64 {
    let tail = |v: f64| x_k1(2.0 * v.sqrt());
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while tail(hi) > q {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Asymptotic SDA IoT ergodic rate `E0·b̄_K + ā_K`.
pub fn sda_iot_ergodic_asymptotic(params: &ScenarioParams) -> Result<f64> {
    Ok(gumbel_normalizers(params)?.asymptotic_rate())
}
