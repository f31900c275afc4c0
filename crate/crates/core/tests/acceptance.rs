//! Acceptance criteria, each at its stated tolerance. Prints one PASS/FAIL
//! line per criterion and exits nonzero if any fails.

use std::process::ExitCode;

use srma::channel::{dbm_to_watts, FadingMode, ScenarioParams};
use srma::cli::{all_passed, parse_config, run_experiment, ExperimentKind};
use srma::montecarlo::{mc_outages, mc_rates, McConfig, MetricEstimate};
use srma::outage::{all_outages, sa_iot_outage, sa_iot_outage_asymptotic, OutageInputs};
use srma::rates::{sda_iot_ergodic_asymptotic, RatePair, Scheme};
use srma::specfun::QuadratureSpec;

const TRIALS: u64 = 100_000;
const SEED: u64 = 2024;

fn at(k: u32, dbm: f64) -> ScenarioParams {
    ScenarioParams::default()
        .with_k(k)
        .unwrap()
        .with_power_watts(dbm_to_watts(dbm))
        .unwrap()
}

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn mc() -> McConfig {
    McConfig::new(TRIALS, SEED)
}

fn analytic(p: &ScenarioParams, s: Scheme) -> RatePair {
    RatePair::analytic(p, s, &quad()).unwrap()
}

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn headline_rates() -> Verdict {
    let p = at(16, 30.0);
    let r = mc_rates(&p, &mc()).unwrap();
    let (sa, sda) = (analytic(&p, Scheme::Sa).cellular_rate, analytic(&p, Scheme::Sda).cellular_rate);
    let (mc_sa, mc_sda) = (r.sa_cellular.value, r.sda_cellular.value);
    let ratio_ok = |num: f64, den: f64| (0.85..=0.92).contains(&(num / den));
    let pass = within(mc_sa, 7.82, 0.25)
        && within(mc_sda, 6.82, 0.25)
        && within(sa, 7.82, 0.25)
        && within(sda, 6.82, 0.25)
        && ratio_ok(mc_sda, mc_sa)
        && ratio_ok(sda, sa);
    verdict(
        pass,
        format!(
            "SA MC {mc_sa:.4} analytic {sa:.4} (7.82±0.25); SDA MC {mc_sda:.4} analytic {sda:.4} (6.82±0.25); \
             ratio MC {:.4} analytic {:.4}",
            mc_sda / mc_sa,
            sda / sa
        ),
    )
}

fn asymptotic_iot_rate() -> Verdict {
    let p = at(4, 30.0);
    let asym = sda_iot_ergodic_asymptotic(&p).unwrap();
    let sim = mc_rates(&p, &mc()).unwrap().sda_iot.value;
    verdict(
        within(asym, 0.1726, 0.0005) && within(sim, 0.1731, 0.01),
        format!("asymptotic {asym:.5} (0.1726±0.0005); MC {sim:.5} (0.1731±0.01)"),
    )
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

fn high_snr_slopes() -> Verdict {
    let dbm: Vec<f64> = (40..=50).map(f64::from).collect();
    let n = ScenarioParams::default().n_spread as f64;
    let mut pass = true;
    let mut parts = Vec::new();
    for s in Scheme::ALL {
        let pairs: Vec<RatePair> = dbm.iter().map(|&d| analytic(&at(2, d), s)).collect();
        let cell: Vec<f64> = pairs.iter().map(|r| r.cellular_rate).collect();
        let iot: Vec<f64> = pairs.iter().map(|r| r.iot_sum_rate).collect();
        for (name, ys, target) in [("cellular", cell, 0.332), ("iot", iot, 0.332 / n)] {
            let m = slope(&dbm, &ys);
            pass &= (m / target - 1.0).abs() <= 0.05;
            parts.push(format!("{s} {name} {m:.5} ({:+.2}%)", 100.0 * (m / target - 1.0)));
        }
    }
    verdict(pass, parts.join("; "))
}

fn scaling_laws() -> Verdict {
    let iot = |k: u32, s: Scheme| analytic(&at(k, 30.0), s).iot_sum_rate;
    let sa_k: Vec<u32> = (3..=10).map(|i| 1u32 << i).collect();
    let x: Vec<f64> = sa_k.iter().map(|&k| (k as f64).ln()).collect();
    let y: Vec<f64> = sa_k.iter().map(|&k| iot(k, Scheme::Sa)).collect();
    let r2_sa = r_squared(&x, &y);
    let sda_k: Vec<u32> = (6..=10).map(|i| 1u32 << i).collect();
    let x: Vec<f64> = sda_k.iter().map(|&k| (k as f64).ln().ln()).collect();
    let y: Vec<f64> = sda_k.iter().map(|&k| iot(k, Scheme::Sda)).collect();
    let r2_sda = r_squared(&x, &y);
    verdict(
        r2_sa > 0.99 && r2_sda > 0.99,
        format!("SA IoT vs ln K R² {r2_sa:.5}; SDA IoT vs ln ln K R² {r2_sda:.5}"),
    )
}

fn rate_agreement() -> Verdict {
    let mut worst = (0.0, String::new());
    let mut fails = Vec::new();
    for k in [2u32, 4, 8, 16, 64, 256] {
        for dbm in [10.0, 20.0, 30.0] {
            let p = at(k, dbm);
            let sim = mc_rates(&p, &mc()).unwrap();
            let rel = if k >= 8 { 0.02 } else { 0.06 };
            for s in Scheme::ALL {
                let a = analytic(&p, s);
                let (c, i) = sim.scheme(s);
                for (name, x, est) in [("cellular", a.cellular_rate, c), ("iot", a.iot_sum_rate, i)] {
                    let tol = (rel * est.value.abs()).max(3.0 * est.stderr);
                    let dev = (x - est.value).abs();
                    let label = format!("K={k} {dbm} dBm {s} {name}: {x:.5} vs {:.5}", est.value);
                    if dev / tol > worst.0 {
                        worst = (dev / tol, label.clone());
                    }
                    if dev > tol {
                        fails.push(label);
                    }
                }
            }
        }
    }
    let detail = if fails.is_empty() {
        format!("worst {:.2} of tolerance at {}", worst.0, worst.1)
    } else {
        format!("{} misses: {}", fails.len(), fails.join(", "))
    };
    verdict(fails.is_empty(), detail)
}

fn outage_agreement() -> Verdict {
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    for k in [2u32, 4, 8] {
        for dbm in (0..=10).map(|i| 5.0 * i as f64) {
            let p = at(k, dbm);
            let set = all_outages(&OutageInputs::new(&p, &quad()).unwrap()).unwrap();
            let sim = mc_outages(&p, &mc()).unwrap();
            for (name, a, est) in [
                ("SA cellular", set.sa_cellular.value, sim.sa.cellular),
                ("SA IoT", set.sa_iot.value, sim.sa.iot),
                ("SDA cellular", set.sda_cellular.value, sim.sda.cellular),
                ("SDA IoT", set.sda_iot.value, sim.sda.iot),
            ] {
                let est: MetricEstimate = est;
                if a.max(est.value) < 1e-2 {
                    continue;
                }
                let dev = (a - est.value).abs();
                worst = worst.max(dev);
                if dev > 0.01 {
                    fails.push(format!("K={k} {dbm} dBm {name}: {a:.4} vs MC {:.4}", est.value));
                }
            }
        }
    }
    let detail = if fails.is_empty() {
        format!("worst deviation {worst:.4}")
    } else {
        format!("{} misses (worst {worst:.4}), e.g. {}", fails.len(), fails[0])
    };
    verdict(fails.is_empty(), detail)
}

fn asymptotic_outage() -> Verdict {
    let k = 4;
    let inputs = |dbm: f64| OutageInputs::new(&at(k, dbm), &quad()).unwrap();
    let m = inputs(30.0).genk().unwrap().shape();
    let (lo, hi) = (50.0, 60.0);
    let ln_p = |dbm: f64| sa_iot_outage_asymptotic(&inputs(dbm)).unwrap().ln();
    let fitted = (ln_p(hi) - ln_p(lo)) / (dbm_to_watts(hi).ln() - dbm_to_watts(lo).ln());
    let slope_ok = (fitted / -m - 1.0).abs() <= 0.01;

    // (dBm, ratio) of the largest relative disagreement
    let mut worst: Option<(f64, f64)> = None;
    for dbm in (0..=16).map(|i| 20.0 + 2.5 * i as f64) {
        let inp = inputs(dbm);
        let exact = sa_iot_outage(&inp).unwrap().value;
        if exact < 1e-3 && exact > 0.0 {
            let ratio = sa_iot_outage_asymptotic(&inp).unwrap() / exact;
            if worst.is_none_or(|(_, r)| (ratio - 1.0).abs() > (r - 1.0).abs()) {
                worst = Some((dbm, ratio));
            }
        }
    }
    let Some((worst_dbm, worst_ratio)) = worst else {
        return verdict(false, "exact outage never fell below 1e-3 on the grid".to_string());
    };
    let agree_ok = (worst_ratio - 1.0).abs() <= 0.10;
    verdict(
        slope_ok && agree_ok,
        format!(
            "slope {fitted:.4} vs -m = {:.4}; worst asymptotic/exact ratio {worst_ratio:.3} at {worst_dbm} dBm",
            -m
        ),
    )
}

fn distribution_fits() -> Verdict {
    let spec = parse_config(
        ExperimentKind::PdfCompare,
        &format!("mc.trials = {TRIALS}\nmc.seed = {SEED}\nsweep.from = 5\nsweep.to = 500\nsweep.points = 2"),
    )
    .unwrap();
    let t = run_experiment(&spec).unwrap();
    let sup = |k: f64, fam: &str| t.value_at("sa", "lambda_pdf_sup_distance", fam, k).unwrap();
    let fams = ["gaussian", "gamma", "generalized_k"];
    let at5: Vec<f64> = fams.iter().map(|f| sup(5.0, f)).collect();
    let at500: Vec<f64> = fams.iter().map(|f| sup(500.0, f)).collect();
    let best5 = at5[2] < at5[0] && at5[2] < at5[1];
    let spread = at500.iter().cloned().fold(0.0, f64::max) / at500.iter().cloned().fold(f64::INFINITY, f64::min);
    verdict(
        best5 && spread <= 2.0,
        format!("K=5 sup-distances (gauss, gamma, genk) {at5:.4?}; K=500 {at500:.5?}, spread {spread:.2}x"),
    )
}

fn heavy_tail_crossover() -> Verdict {
    let iot = |k: u32, mode: FadingMode| {
        let p = at(k, 30.0).with_fading(mode);
        mc_rates(&p, &mc()).unwrap().sda_iot.value
    };
    let big = (iot(500, FadingMode::Double), iot(500, FadingMode::Single));
    let mut reversed = Vec::new();
    for k in [1u32, 2, 4, 8, 16] {
        let (d, s) = (iot(k, FadingMode::Double), iot(k, FadingMode::Single));
        if d >= s {
            reversed.push(format!("K={k} double {d:.4} >= single {s:.4}"));
        }
    }
    let detail = format!(
        "K=500 double {:.4} vs single {:.4}; small-K violations: {}",
        big.0,
        big.1,
        if reversed.is_empty() { "none".to_string() } else { reversed.join(", ") }
    );
    verdict(big.0 > big.1 && reversed.is_empty(), detail)
}

fn property_suites() -> Verdict {
    let spec = parse_config(ExperimentKind::Validate, &format!("mc.trials = {TRIALS}\nmc.seed = {SEED}")).unwrap();
    let t = run_experiment(&spec).unwrap();
    let failed: Vec<String> = t
        .rows
        .iter()
        .filter(|r| r.sweep_param == "check" && !r.metric.ends_with("_measured") && r.value != 1.0)
        .map(|r| {
            let measured = t.value_at("all", &format!("{}_measured", r.metric), &r.source, 0.0).unwrap();
            format!("{} (measured {measured})", r.metric)
        })
        .collect();
    let detail = if failed.is_empty() { "all checks pass".to_string() } else { format!("failing: {}", failed.join(", ")) };
    verdict(all_passed(&t.rows), detail)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("headline rates", headline_rates),
        ("asymptotic IoT rate", asymptotic_iot_rate),
        ("high-SNR slopes", high_snr_slopes),
        ("scaling laws", scaling_laws),
        ("analytic vs MC rates", rate_agreement),
        ("analytic vs MC outage", outage_agreement),
        ("asymptotic outage", asymptotic_outage),
        ("distribution fits", distribution_fits),
        ("heavy-tail crossover", heavy_tail_crossover),
        ("property suites", property_suites),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        if !v.pass {
            failures += 1;
        }
        println!("criterion {:>2} {} {name}: {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("{} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
