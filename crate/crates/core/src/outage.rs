//! Outage probabilities of the cellular and IoT links.
//!
//! The cellular expressions are built on the first-order bound
//! `R_s ≤ log2(pα²B/σ²) + (|h0|²/(α²B) − E0)·log2 e`, obtained from
//! `E1(x) ≤ x − ln x − E0`. For a backscatter strength `y` the bound falls
//! below `R̃_s` iff `y < 2^{a2}` and `|h0|² ≤ y(a2 − log2 y)/a1`, so
//! conditioning on the exponential `|h0|²` leaves a single integral over the
//! law of `y`.

use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use crate::channel::ScenarioParams;
use crate::distfit::{genk_cdf, genk_pdf, maxz_pdf_normalized, z_cdf_normalized, GenKParams, ShapeChoice};
use crate::error::{Error, Result};
use crate::specfun::{ln_gamma_unchecked, GaussChebyshev, QuadratureSpec, EULER_GAMMA};

/// Clamping beyond this distance from `[0, 1]` marks a result as doubtful.
const CLAMP_SLACK: f64 = 1e-4;

/// Scenario plus the derived outage constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageInputs {
    pub params: ScenarioParams,
    pub quad: QuadratureSpec,
    /// `log2 e / α²`.
    pub a1: f64,
    /// `R̃_s − log2(pα²/σ²) + E0·log2 e`.
    pub a2: f64,
    /// IoT outage threshold on the aggregate strength,
    /// `σ²(2^{N·R̃_c} − 1)/(Npα²)`.
    pub delta: f64,
    pub genk_shape: ShapeChoice,
}

impl OutageInputs {
    pub fn new(params: &ScenarioParams, quad: &QuadratureSpec) -> Result<Self> {
        params.validate()?;
        quad.validate()?;
        let a2sq = params.alpha_sq();
        let n = params.n_spread as f64;
        let a1 = LOG2_E / a2sq;
        let a2 = params.target_rate_s - (params.p_watts * a2sq / params.sigma2_watts).log2() + EULER_GAMMA * LOG2_E;
        let delta = params.sigma2_watts * (n * params.target_rate_c * std::f64::consts::LN_2).exp_m1()
            / (n * params.p_watts * a2sq);
        Ok(OutageInputs {
            params: *params,
            quad: *quad,
            a1,
            a2,
            delta,
            genk_shape: ShapeChoice::default(),
        })
    }

    pub fn with_genk_shape(mut self, shape: ShapeChoice) -> Self {
        self.genk_shape = shape;
        self
    }

    /// Generalized-K fit of `Λ/λ`.
    fn genk_normalized(&self) -> Result<GenKParams> {
        GenKParams::for_aggregate(self.params.k_devices, 1.0, self.genk_shape)
    }

    /// Fit of `Λ` in watts.
    pub fn genk(&self) -> Result<GenKParams> {
        GenKParams::for_aggregate(self.params.k_devices, self.params.lambda_prod, self.genk_shape)
    }

    /// Strength threshold `2^{a2}` above which the cellular bound never fails.
    pub fn cellular_threshold(&self) -> f64 {
        self.a2.exp2()
    }
}

/// An outage probability with its quadrature health.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageValue {
    pub value: f64,
    pub converged: bool,
}

impl OutageValue {
    fn exact(value: f64) -> OutageValue {
        let (value, ok) = clamp_probability(value);
        OutageValue { value, converged: ok }
    }
}

fn clamp_probability(v: f64) -> (f64, bool) {
    if v.is_nan() {
        return (v, false);
    }
    let c = v.clamp(0.0, 1.0);
    (c, (c - v).abs() <= CLAMP_SLACK)
}

/// `P{bound ≤ R̃_s}` for a strength whose λ-normalized density is `density`.
fn cellular_outage_with<F: Fn(f64) -> f64>(inputs: &OutageInputs, density: F) -> Result<OutageValue> {
    let p = &inputs.params;
    let lam = p.lambda_prod;
    let upper = (inputs.cellular_threshold() / lam).min(inputs.quad.m1_bound);
    if !(upper > 0.0) {
        return Ok(OutageValue::exact(0.0));
    }
    let scale = lam / (inputs.a1 * p.lambda0);
    let (a2, ln_lam) = (inputs.a2, lam.log2());
    // P{|h0|² ≤ y(a2 − log2 y)/a1} integrated against the strength law,
    // written as one nonnegative integrand to avoid cancelling F(2^{a2})
    let conditional = |v: f64| {
        let slack = a2 - (ln_lam + v.log2());
        if slack <= 0.0 {
            0.0
        } else {
            -(-scale * v * slack).exp_m1() * density(v)
        }
    };
    let g = |u: f64| if u == 0.0 { 0.0 } else { 2.0 * u * conditional(u * u) };
    let root = upper.sqrt();
    let n = inputs.quad.n_nodes;
    let coarse = GaussChebyshev::new(n)?.integrate(g, root)?;
    let fine = GaussChebyshev::new(2 * n)?.integrate(g, root)?;
    let (value, in_range) = clamp_probability(coarse);
    let agree = (coarse - fine).abs() <= (1e-3 * coarse.abs()).max(1e-9);
    Ok(OutageValue {
        value,
        converged: in_range && agree,
    })
}

/// SA cellular outage with `Λ` approximated by the generalized-K law.
pub fn sa_cellular_outage(inputs: &OutageInputs) -> Result<OutageValue> {
    let gk = inputs.genk_normalized()?;
    cellular_outage_with(inputs, |v| genk_pdf(v, &gk))
}

/// SDA cellular outage under the exact law of the strongest strength.
pub fn sda_cellular_outage(inputs: &OutageInputs) -> Result<OutageValue> {
    let k = inputs.params.k_devices;
    cellular_outage_with(inputs, |v| maxz_pdf_normalized(v, k))
}

/// SA IoT outage `P{Λ ≤ δ}` from the generalized-K CDF.
pub fn sa_iot_outage(inputs: &OutageInputs) -> Result<OutageValue> {
    let gk = inputs.genk()?;
    Ok(OutageValue::exact(genk_cdf(inputs.delta, &gk)))
}

/// SDA IoT outage `F_{Z_k}(δ)^K`.
pub fn sda_iot_outage(inputs: &OutageInputs) -> OutageValue {
    let p = &inputs.params;
    let single = z_cdf_normalized(inputs.delta / p.lambda_prod);
    OutageValue::exact(single.powi(p.k_devices as i32))
}

/// High-SNR SA IoT outage
/// `4(m²σ²)^m (2^{N R̃_c} − 1)^m / (Γ(m)² · 2m · (Npα²Ω)^m)`.
pub fn sa_iot_outage_asymptotic(inputs: &OutageInputs) -> Result<f64> {
    let p = &inputs.params;
    if p.target_rate_c == 0.0 {
        return Ok(0.0);
    }
    let gk = inputs.genk()?;
    let m = gk.shape();
    let n = p.n_spread as f64;
    let ln_gap = (n * p.target_rate_c * std::f64::consts::LN_2).exp_m1().ln();
    let ln_snr = (n * p.p_watts * p.alpha_sq() * gk.omega).ln();
    let ln_p = 4f64.ln() + m * (2.0 * m.ln() + p.sigma2_watts.ln()) + m * ln_gap
        - 2.0 * ln_gamma_unchecked(m)
        - (2.0 * m).ln()
        - m * ln_snr;
    if !ln_p.is_finite() {
        return Err(Error::NonFinite { at: p.p_watts });
    }
    Ok(ln_p.exp())
}

/// All four closed-form outage values at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageSet {
    pub sa_cellular: OutageValue,
    pub sa_iot: OutageValue,
    pub sda_cellular: OutageValue,
    pub sda_iot: OutageValue,
}

pub fn all_outages(inputs: &OutageInputs) -> Result<OutageSet> {
    Ok(OutageSet {
        sa_cellular: sa_cellular_outage(inputs)?,
        sa_iot: sa_iot_outage(inputs)?,
        sda_cellular: sda_cellular_outage(inputs)?,
        sda_iot: sda_iot_outage(inputs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::dbm_to_watts;

    fn inputs(k: u32, dbm: f64) -> OutageInputs {
        let p = ScenarioParams::default()
            .with_k(k)
            .unwrap()
            .with_power_watts(dbm_to_watts(dbm))
            .unwrap();
        OutageInputs::new(&p, &QuadratureSpec::default()).unwrap()
    }

    #[test]
    fn derived_constants() {
        let i = inputs(4, 30.0);
        assert!((i.a1 - LOG2_E).abs() < 1e-15);
        // 5 − log2(1e14) + E0·log2 e
        assert!((i.a2 - (5.0 - 1e14f64.log2() + EULER_GAMMA * LOG2_E)).abs() < 1e-12);
        // 1e-14·(2^{12.8} − 1)/64
        let want = 1e-14 * (2f64.powf(12.8) - 1.0) / 64.0;
        assert!(((i.delta - want) / want).abs() < 1e-13);
        let p = ScenarioParams::default().with_targets(5.0, 0.0).unwrap();
        let i = OutageInputs::new(&p, &QuadratureSpec::default()).unwrap();
        assert_eq!(i.delta, 0.0);
        assert_eq!(sda_iot_outage(&i).value, 0.0);
        assert_eq!(sa_iot_outage(&i).unwrap().value, 0.0);
        assert_eq!(sa_iot_outage_asymptotic(&i).unwrap(), 0.0);
    }

    #[test]
    fn sda_iot_is_power_of_single() {
        let one = inputs(1, 35.0);
        let single = z_cdf_normalized(one.delta / one.params.lambda_prod);
        assert_eq!(sda_iot_outage(&one).value, single);
        let four = inputs(4, 35.0);
        assert!((sda_iot_outage(&four).value - single.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn tiny_target_means_no_cellular_outage() {
        let p = ScenarioParams::default()
            .with_k(4)
            .unwrap()
            .with_power_watts(dbm_to_watts(50.0))
            .unwrap()
            .with_targets(0.0, 0.2)
            .unwrap();
        let i = OutageInputs::new(&p, &QuadratureSpec::default()).unwrap();
        assert!(sa_cellular_outage(&i).unwrap().value < 1e-6);
        assert!(sda_cellular_outage(&i).unwrap().value < 1e-6);
    }

    #[test]
    fn outage_range_and_power_monotonicity() {
        let ks = [1u32, 2, 3, 4, 6, 8, 12, 16, 32, 64];
        let ps: Vec<f64> = (0..10).map(|i| 5.0 * i as f64).collect();
        let mut table = Vec::new();
        for &k in &ks {
            let row: Vec<OutageSet> = ps.iter().map(|&dbm| all_outages(&inputs(k, dbm)).unwrap()).collect();
            table.push(row);
        }
        let get = |s: &OutageSet| [s.sa_cellular.value, s.sa_iot.value, s.sda_cellular.value, s.sda_iot.value];
        for row in &table {
            for (pi, set) in row.iter().enumerate() {
                for v in get(set) {
                    assert!((0.0..=1.0).contains(&v));
                }
                assert!(set.sa_cellular.converged && set.sda_cellular.converged);
                if pi > 0 {
                    let (a, b) = (get(&row[pi - 1]), get(set));
                    for j in 0..4 {
                        assert!(b[j] <= a[j] + 1e-9, "p={} j={j}", ps[pi]);
                    }
                }
            }
        }
    }

    #[test]
    fn cellular_outage_is_self_convergent() {
        for k in [1u32, 4, 16] {
            for dbm in [20.0, 30.0, 40.0] {
                let mut i = inputs(k, dbm);
                let a = sa_cellular_outage(&i).unwrap().value;
                let b = sda_cellular_outage(&i).unwrap().value;
                i.quad = i.quad.refined().refined();
                let a2 = sa_cellular_outage(&i).unwrap().value;
                let b2 = sda_cellular_outage(&i).unwrap().value;
                assert!((a - a2).abs() < 1e-6 + 1e-4 * a2, "k={k} p={dbm}");
                assert!((b - b2).abs() < 1e-6 + 1e-4 * b2, "k={k} p={dbm}");
            }
        }
    }

    #[test]
    fn single_device_schemes_agree_on_iot() {
        // one device: Λ = Z, and the generalized-K fit has m = 1, Ω = λ,
        // which is exactly the double-Rayleigh law
        for dbm in [25.0, 30.0, 35.0] {
            let i = inputs(1, dbm);
            let a = sa_iot_outage(&i).unwrap().value;
            let b = sda_iot_outage(&i).value;
            assert!((a - b).abs() < 1e-7, "p={dbm} {a} {b}");
        }
    }

    #[test]
    fn asymptotic_power_law() {
        let m = inputs(4, 30.0).genk().unwrap().shape();
        let lo = inputs(4, 30.0);
        let hi = inputs(4, 50.0);
        let slope = (sa_iot_outage_asymptotic(&hi).unwrap().ln() - sa_iot_outage_asymptotic(&lo).unwrap().ln())
            / (hi.params.p_watts.ln() - lo.params.p_watts.ln());
        assert!((slope + m).abs() < 1e-9 * m);
    }
}
