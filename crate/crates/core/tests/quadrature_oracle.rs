//! Gauss–Chebyshev results against a brute-force Simpson rule on a
//! logarithmic grid, built here from the defining expectations.
//!
//! With `H = |h0|²` exponential of mean λ0, `E_H[E1(H/B)] = ln(1 + B/λ0)`, so
//! the SDA cellular rate is `log2(pλ0/σ²) + (E ln(1 + α²Z/λ0) − E0)·log2 e`.
//! The cellular bound fails when `H ≤ α²B·ln2·(a2 − log2 B)`.

use std::f64::consts::{LN_2, LOG2_E};

use srma::channel::ScenarioParams;
use srma::distfit::{genk_pdf, GenKParams, ShapeChoice};
use srma::outage::{sa_cellular_outage, sda_cellular_outage, OutageInputs};
use srma::rates::{sda_cellular_ergodic, sda_iot_ergodic_exact};
use srma::specfun::{bessel_k0, bessel_k1, QuadratureSpec, EULER_GAMMA};

/// `∫_0^upper f(v) dv` by Simpson in `t = ln v` over `[−40, ln upper]`.
fn log_simpson(f: impl Fn(f64) -> f64, upper: f64) -> f64 {
    let (lo, hi) = (-40.0, upper.ln());
    let n = 200_000;
    let h = (hi - lo) / n as f64;
    let g = |t: f64| {
        let v = f64::exp(t);
        f(v) * v
    };
    let mut s = g(lo) + g(hi);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(lo + i as f64 * h);
    }
    s * h / 3.0
}

/// Density of the largest of `k` normalized products.
fn max_density(v: f64, k: u32) -> f64 {
    let x = 2.0 * v.sqrt();
    let cdf = 1.0 - x * bessel_k1(x).unwrap();
    k as f64 * cdf.powi(k as i32 - 1) * 2.0 * bessel_k0(x).unwrap()
}

const UPPER: f64 = 1000.0;

#[test]
fn sda_cellular_rate_matches_brute_force() {
    for k in [1, 2, 4, 16, 128] {
        let p = ScenarioParams::default().with_k(k).unwrap();
        let ratio = p.alpha_sq() * p.lambda_prod / p.lambda0;
        let mean_log = log_simpson(|v| (ratio * v).ln_1p() * max_density(v, k), UPPER);
        let oracle = (p.p_watts * p.lambda0 / p.sigma2_watts).log2() + (mean_log - EULER_GAMMA) * LOG2_E;
        let got = sda_cellular_ergodic(&p, &QuadratureSpec::default()).unwrap();
        assert!(got.converged);
        assert!((got.value - oracle).abs() < 1e-6 * oracle.abs(), "K={k}: {} vs {oracle}", got.value);
    }
}

#[test]
fn sda_iot_rate_matches_brute_force() {
    for k in [1, 2, 4, 16, 128] {
        let p = ScenarioParams::default().with_k(k).unwrap();
        let n = p.n_spread as f64;
        let c = n * p.snr_scale() * p.alpha_sq() * p.lambda_prod;
        let oracle = log_simpson(|v| (c * v).ln_1p() * LOG2_E / n * max_density(v, k), UPPER);
        let got = sda_iot_ergodic_exact(&p, &QuadratureSpec::default()).unwrap();
        assert!(got.converged);
        assert!((got.value - oracle).abs() < 1e-6 * oracle, "K={k}: {} vs {oracle}", got.value);
    }
}

fn bound_outage(p: &ScenarioParams, density: impl Fn(f64) -> f64) -> f64 {
    let a2 = p.target_rate_s - (p.snr_scale() * p.alpha_sq()).log2() + EULER_GAMMA * LOG2_E;
    let lam = p.lambda_prod;
    let fail = |v: f64| {
        let b = lam * v;
        let t = p.alpha_sq() * b * LN_2 * (a2 - b.log2());
        if t <= 0.0 {
            0.0
        } else {
            -(-t / p.lambda0).exp_m1() * density(v)
        }
    };
    log_simpson(fail, (a2.exp2() / lam).min(UPPER))
}

#[test]
fn cellular_outages_match_brute_force() {
    for (k, dbm) in [(2, 10.0), (2, 30.0), (4, 20.0), (8, 30.0), (16, 40.0)] {
        let p = ScenarioParams::default()
            .with_k(k)
            .unwrap()
            .with_power_watts(srma::channel::dbm_to_watts(dbm))
            .unwrap();
        let inputs = OutageInputs::new(&p, &QuadratureSpec::default()).unwrap();

        let sda = sda_cellular_outage(&inputs).unwrap();
        let oracle = bound_outage(&p, |v| max_density(v, k));
        assert!((sda.value - oracle).abs() < 1e-6, "SDA K={k} {dbm} dBm: {} vs {oracle}", sda.value);

        let gk = GenKParams::for_aggregate(k, 1.0, ShapeChoice::MomentMatched).unwrap();
        let sa = sa_cellular_outage(&inputs).unwrap();
        let oracle = bound_outage(&p, |v| genk_pdf(v, &gk));
        assert!((sa.value - oracle).abs() < 1e-6, "SA K={k} {dbm} dBm: {} vs {oracle}", sa.value);
    }
}
