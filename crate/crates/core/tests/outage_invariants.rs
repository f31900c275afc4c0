//! Structural properties of the closed-form outage probabilities, one test
//! per (scheme, link) so a failure points at the offending curve.

use std::sync::OnceLock;

use srma::channel::{dbm_to_watts, ScenarioParams};
use srma::outage::{all_outages, OutageInputs, OutageSet};
use srma::rates::{RatePair, Scheme};
use srma::specfun::QuadratureSpec;

const KS: [u32; 10] = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512];
/// Differences below the 1e-8 absolute accuracy of the CDF evaluations are ties.
const TIE: f64 = 1e-8;
const DBM: [f64; 10] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0];

fn at(k: u32, dbm: f64) -> ScenarioParams {
    ScenarioParams::default()
        .with_k(k)
        .unwrap()
        .with_power_watts(dbm_to_watts(dbm))
        .unwrap()
}

/// Outages on the K × p grid, indexed `[ki][pi]`.
fn grid() -> &'static Vec<Vec<OutageSet>> {
    static GRID: OnceLock<Vec<Vec<OutageSet>>> = OnceLock::new();
    GRID.get_or_init(|| {
        KS.iter()
            .map(|&k| {
                DBM.iter()
                    .map(|&d| {
                        let inputs = OutageInputs::new(&at(k, d), &QuadratureSpec::default()).unwrap();
                        all_outages(&inputs).unwrap()
                    })
                    .collect()
            })
            .collect()
    })
}

#[derive(Clone, Copy, Debug)]
enum Curve {
    SaCellular,
    SaIot,
    SdaCellular,
    SdaIot,
}

fn value(set: &OutageSet, c: Curve) -> f64 {
    match c {
        Curve::SaCellular => set.sa_cellular.value,
        Curve::SaIot => set.sa_iot.value,
        Curve::SdaCellular => set.sda_cellular.value,
        Curve::SdaIot => set.sda_iot.value,
    }
}

#[test]
fn every_outage_is_a_probability() {
    for row in grid() {
        for set in row {
            for c in [Curve::SaCellular, Curve::SaIot, Curve::SdaCellular, Curve::SdaIot] {
                let v = value(set, c);
                assert!((0.0..=1.0).contains(&v), "{c:?}: {v}");
            }
        }
    }
}

fn power_violations(c: Curve) -> Vec<(u32, f64, f64)> {
    let mut bad = Vec::new();
    for (ki, row) in grid().iter().enumerate() {
        for pi in 1..DBM.len() {
            let (lo, hi) = (value(&row[pi - 1], c), value(&row[pi], c));
            if hi > lo + TIE {
                bad.push((KS[ki], DBM[pi], hi - lo));
            }
        }
    }
    bad
}

fn device_violations(c: Curve) -> Vec<(u32, f64, f64)> {
    let g = grid();
    let mut bad = Vec::new();
    for ki in 1..KS.len() {
        for pi in 0..DBM.len() {
            let (few, many) = (value(&g[ki - 1][pi], c), value(&g[ki][pi], c));
            if many > few + TIE {
                bad.push((KS[ki], DBM[pi], many - few));
            }
        }
    }
    bad
}

#[test]
fn sa_cellular_outage_nonincreasing_in_power() {
    let bad = power_violations(Curve::SaCellular);
    assert!(bad.is_empty(), "(K, dBm, rise): {bad:?}");
}

#[test]
fn sa_iot_outage_nonincreasing_in_power() {
    let bad = power_violations(Curve::SaIot);
    assert!(bad.is_empty(), "(K, dBm, rise): {bad:?}");
}

#[test]
fn sda_cellular_outage_nonincreasing_in_power() {
    let bad = power_violations(Curve::SdaCellular);
    assert!(bad.is_empty(), "(K, dBm, rise): {bad:?}");
}

#[test]
fn sda_iot_outage_nonincreasing_in_power() {
    let bad = power_violations(Curve::SdaIot);
    assert!(bad.is_empty(), "(K, dBm, rise): {bad:?}");
}

#[test]
fn sa_cellular_outage_nonincreasing_in_devices() {
    let bad = device_violations(Curve::SaCellular);
    assert!(bad.is_empty(), "(K, dBm, rise): {bad:?}");
}

#[test]
fn sa_iot_outage_nonincreasing_in_devices() {
    let bad = device_violations(Curve::SaIot);
    assert!(bad.is_empty(), "(K, dBm, rise): {bad:?}");
}

#[test]
fn sda_cellular_outage_nonincreasing_in_devices() {
    let bad = device_violations(Curve::SdaCellular);
    assert!(bad.is_empty(), "(K, dBm, rise): {bad:?}");
}

#[test]
fn sda_iot_outage_nonincreasing_in_devices() {
    let bad = device_violations(Curve::SdaIot);
    assert!(bad.is_empty(), "(K, dBm, rise): {bad:?}");
}

fn ordering_violations(sa: Curve, sda: Curve) -> Vec<(u32, f64, f64, f64)> {
    let mut bad = Vec::new();
    for (ki, row) in grid().iter().enumerate() {
        for (pi, set) in row.iter().enumerate() {
            let (a, d) = (value(set, sa), value(set, sda));
            if a > d + TIE {
                bad.push((KS[ki], DBM[pi], a, d));
            }
        }
    }
    bad
}

#[test]
fn sa_cellular_outage_at_most_sda() {
    let bad = ordering_violations(Curve::SaCellular, Curve::SdaCellular);
    assert!(bad.is_empty(), "(K, dBm, SA, SDA): {bad:?}");
}

#[test]
fn sa_iot_outage_at_most_sda() {
    let bad = ordering_violations(Curve::SaIot, Curve::SdaIot);
    assert!(bad.is_empty(), "(K, dBm, SA, SDA): {bad:?}");
}

/// Where the ergodic rate is at least twice the target, outage stays below ½.
#[test]
fn outage_consistent_with_rates() {
    let quad = QuadratureSpec::default();
    let g = grid();
    for (ki, &k) in KS.iter().enumerate() {
        for (pi, &d) in DBM.iter().enumerate() {
            let p = at(k, d);
            for (scheme, cell, iot) in [
                (Scheme::Sa, Curve::SaCellular, Curve::SaIot),
                (Scheme::Sda, Curve::SdaCellular, Curve::SdaIot),
            ] {
                let r = RatePair::analytic(&p, scheme, &quad).unwrap();
                if r.cellular_rate >= 2.0 * p.target_rate_s {
                    let o = value(&g[ki][pi], cell);
                    assert!(o < 0.5, "{scheme} cellular K={k} {d} dBm: {o}");
                }
                if r.iot_sum_rate >= 2.0 * p.target_rate_c {
                    let o = value(&g[ki][pi], iot);
                    assert!(o < 0.5, "{scheme} IoT K={k} {d} dBm: {o}");
                }
            }
        }
    }
}
