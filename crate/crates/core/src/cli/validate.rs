//! Invariant checks run by the `validate` experiment.
//!
//! Each check reports a pass flag and the measured quantity it was judged on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{draw_realization, stream_for_trial, FadingMode, ScenarioParams};
use crate::distfit::{genk_pdf, ks_critical_value, ks_statistic, maxz_pdf, z_pdf, GenKParams, STRENGTH_UNIT};
use crate::error::Result;
use crate::montecarlo::{cellular_rate_bound, mc_rates, mc_strength_samples, McConfig, StrengthKind};
use crate::rates::{
    exact_normalizers, gumbel_normalizers, high_snr_cellular_rate, sa_iot_sum_rate_realized, sda_iot_rate_realized, sic_sum_rate,
    GumbelNormalization,
};
use crate::specfun::{adaptive_simpson, bessel_k0, bessel_k1, exp_integral_e1};

use super::config::ExperimentSpec;
use super::table::ResultRow;

/// Realizations examined by the per-realization checks.
const REALIZATION_CAP: u64 = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// The statistic the verdict rests on.
    pub measured: f64,
    pub sampled: bool,
}

impl Check {
    fn new(name: &'static str, measured: f64, passed: bool, sampled: bool) -> Check {
        Check {
            name,
            passed,
            measured,
            sampled,
        }
    }

    /// A pass-flag row and a row with the measured statistic.
    pub fn rows(&self) -> [ResultRow; 2] {
        let source = if self.sampled { "monte_carlo" } else { "analytic" };
        let flag = ResultRow::exact("all", self.name, "check", 0.0, source, if self.passed { 1.0 } else { 0.0 });
        let measured = ResultRow::exact("all", &format!("{}_measured", self.name), "check", 0.0, source, self.measured);
        [flag, measured]
    }
}

/// Whether every check in `rows` passed. Measured-value rows are ignored.
pub fn all_passed(rows: &[ResultRow]) -> bool {
    rows.iter()
        .filter(|r| r.sweep_param == "check" && !r.metric.ends_with("_measured"))
        .all(|r| r.value == 1.0)
}

pub fn run_checks(spec: &ExperimentSpec, params: &ScenarioParams) -> Result<Vec<Check>> {
    let mut out = vec![k0_derivative()?, e1_envelope()?, pdf_normalization()?];
    let n = spec.mc.trials.min(REALIZATION_CAP);
    out.extend(per_realization(params, spec.mc.seed, n)?);
    out.extend(gumbel_ks(params, spec.mc.seed)?);
    out.push(worker_determinism(params, &spec.mc, n)?);
    Ok(out)
}

/// `K0' = −K1` by central differences.
fn k0_derivative() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for x in [0.5, 1.0, 2.0, 5.0] {
        let h = 1e-5 * x;
        let d = (bessel_k0(x + h)? - bessel_k0(x - h)?) / (2.0 * h);
        let k1 = bessel_k1(x)?;
        worst = worst.max((d + k1).abs() / k1);
    }
    Ok(Check::new("k0_derivative", worst, worst < 1e-6, false))
}

/// `e^{−x}/(x+1) < E1(x) < e^{−x}/x` at 100 random points of (0, 50];
/// reports the violation count.
fn e1_envelope() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE1);
    let mut bad = 0;
    for _ in 0..100 {
        let x = 50.0 * (1.0 - rng.random::<f64>());
        let e1 = exp_integral_e1(x)?;
        let lo = (-x).exp() / (x + 1.0);
        let hi = (-x).exp() / x;
        if !(lo < e1 && e1 < hi) {
            bad += 1;
        }
    }
    Ok(Check::new("e1_envelope", bad as f64, bad == 0, false))
}

/// Total mass of the strength densities, integrated over `v = u²`.
fn pdf_normalization() -> Result<Check> {
    let mass = |pdf: &dyn Fn(f64) -> f64, upper: f64| {
        adaptive_simpson(|u| if u == 0.0 { 0.0 } else { 2.0 * u * pdf(u * u) }, 0.0, upper, 1e-12, 64)
    };
    let gk = GenKParams::for_aggregate(5, 1.0, Default::default())?;
    let masses = [
        mass(&|v| z_pdf(v, 1.0).unwrap_or(0.0), 40.0)?,
        mass(&|v| maxz_pdf(v, 1.0, 5).unwrap_or(0.0), 40.0)?,
        mass(&|v| genk_pdf(v, &gk), 40.0)?,
    ];
    let worst = masses.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max);
    Ok(Check::new("pdf_normalization", worst, worst <= 1e-6, false))
}

/// SIC telescoping and SA/SDA dominance, realization by realization.
fn per_realization(params: &ScenarioParams, seed: u64, n: u64) -> Result<[Check; 3]> {
    let (rs, rc) = (params.target_rate_s, params.target_rate_c);
    let a2 = params.alpha_sq();
    let mut telescoping: f64 = 0.0;
    let mut rate_bad = 0u64;
    let mut outage_bad = 0u64;
    for t in 0..n {
        let real = draw_realization(params, &mut stream_for_trial(seed, t));
        let sa_iot = sa_iot_sum_rate_realized(&real, params);
        let sda_iot = sda_iot_rate_realized(&real, params);
        telescoping = telescoping.max((sic_sum_rate(&real, params) - sa_iot).abs() / (1.0 + sa_iot));

        let h0 = real.h0_sq().max(f64::MIN_POSITIVE);
        let sa_cell = high_snr_cellular_rate(h0, a2 * real.lambda_sum, params)?;
        let sda_cell = high_snr_cellular_rate(h0, a2 * real.z_max, params)?;
        let slack = 1e-12 * (1.0 + sa_cell.abs());
        if sa_cell + slack < sda_cell || sa_iot + 1e-15 < sda_iot {
            rate_bad += 1;
        }
        let sa_out = [cellular_rate_bound(h0, real.lambda_sum, params) <= rs, sa_iot < rc];
        let sda_out = [cellular_rate_bound(h0, real.z_max, params) <= rs, sda_iot < rc];
        if sa_out.iter().zip(&sda_out).any(|(&sa, &sda)| sa && !sda) {
            outage_bad += 1;
        }
    }
    Ok([
        Check::new("sic_telescoping", telescoping, telescoping <= 1e-12, true),
        Check::new("rate_dominance", rate_bad as f64, rate_bad == 0, true),
        Check::new("outage_dominance", outage_bad as f64, outage_bad == 0, true),
    ])
}

/// KS distance of 1000 maxima over 1024 double-fading devices from the
/// Gumbel law, standardized by the closed-form and by the exact-quantile
/// normalizers.
fn gumbel_ks(params: &ScenarioParams, seed: u64) -> Result<[Check; 2]> {
    let p = params.with_fading(FadingMode::Double).with_k(1024)?;
    let n = 1000;
    let samples = mc_strength_samples(&p, &McConfig::new(n as u64, seed), StrengthKind::ZMax)?;
    let crit = ks_critical_value(n, 0.01);
    let ks = |g: GumbelNormalization| {
        let (a, b) = (g.a_k / STRENGTH_UNIT, g.b_k / STRENGTH_UNIT);
        ks_statistic(&samples, |x| (-(-(x - a) / b).exp()).exp())
    };
    let closed = ks(gumbel_normalizers(&p)?);
    let quantile = ks(exact_normalizers(&p)?);
    Ok([
        Check::new("gumbel_ks", closed, closed < crit, true),
        Check::new("gumbel_ks_quantile", quantile, quantile < crit, true),
    ])
}

/// Same estimates with one and with three worker threads.
fn worker_determinism(params: &ScenarioParams, mc: &McConfig, n: u64) -> Result<Check> {
    let base = McConfig { trials: n, ..*mc };
    let one = mc_rates(params, &base.with_workers(1))?;
    let three = mc_rates(params, &base.with_workers(3))?;
    let same = one == three;
    Ok(Check::new("worker_determinism", if same { 0.0 } else { 1.0 }, same, true))
}
