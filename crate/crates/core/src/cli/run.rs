//! Sweeps behind each experiment kind.

use crate::channel::{build_scenario, dbm_to_watts, FadingMode, ScenarioParams};
use crate::distfit::{fit_families_with, maxz_pdf, Histogram, STRENGTH_UNIT};
use crate::error::{Error, Result};
use crate::montecarlo::{mc_outages, mc_rates, mc_strength_samples, McConfig, MetricEstimate, StrengthKind};
use crate::outage::{all_outages, sa_iot_outage_asymptotic, OutageInputs};
use crate::rates::{sda_iot_ergodic_asymptotic, sda_iot_ergodic_exact, RatePair, Scheme, Source};

use super::config::{ExperimentKind, ExperimentSpec};
use super::table::{ResultRow, ResultTable};
use super::validate::run_checks;

/// Runs every sweep point of `spec` and collects the rows.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.sweep.validate()?;
    spec.mc.validate()?;
    let base = build_scenario(&spec.geometry, &spec.link)?;
    let mut rows = Vec::new();

    if spec.kind == ExperimentKind::Validate {
        for check in run_checks(spec, &base)? {
            rows.extend(check.rows());
        }
        return Ok(ResultTable::new(rows));
    }

    let (param, points): (&'static str, Vec<f64>) = if spec.kind.sweeps_devices() {
        ("k_devices", spec.sweep.integer_grid().into_iter().map(f64::from).collect())
    } else {
        ("p_dbm", spec.sweep.grid())
    };
    for x in points {
        let at = |e: Error| Error::AtSweepPoint {
            param,
            value: x,
            source: Box::new(e),
        };
        let params = if param == "k_devices" {
            base.with_k(x as u32)
        } else {
            base.with_power_watts(dbm_to_watts(x))
        }
        .map_err(at)?;
        let point = SweepPoint {
            spec,
            params,
            param,
            value: x,
        };
        match spec.kind {
            ExperimentKind::RateVsK | ExperimentKind::RateVsPower => point.rates(&mut rows),
            ExperimentKind::OutageVsK | ExperimentKind::OutageVsPower => point.outages(&mut rows),
            ExperimentKind::AsymptoticCheck => point.asymptotic(&mut rows),
            ExperimentKind::PdfCompare => point.pdfs(&mut rows),
            ExperimentKind::Validate => unreachable!("handled above"),
        }
        .map_err(at)?;
    }
    Ok(ResultTable::new(rows))
}

struct SweepPoint<'a> {
    spec: &'a ExperimentSpec,
    params: ScenarioParams,
    param: &'static str,
    value: f64,
}

impl SweepPoint<'_> {
    /// Closed forms only describe double fading.
    fn analytic(&self) -> bool {
        self.params.fading_mode == FadingMode::Double
    }

    fn exact(&self, scheme: Scheme, metric: &str, source: Source, v: f64) -> ResultRow {
        ResultRow::exact(scheme.as_str(), metric, self.param, self.value, source.as_str(), v)
    }

    fn sampled(&self, scheme: Scheme, metric: &str, est: &MetricEstimate) -> ResultRow {
        ResultRow::sampled(scheme.as_str(), metric, self.param, self.value, est, self.spec.mc.seed)
    }

    fn asymptotic_iot_rate(&self) -> Result<Option<f64>> {
        match sda_iot_ergodic_asymptotic(&self.params) {
            Ok(v) => Ok(Some(v)),
            Err(Error::AsymptoticRegime { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn rates(&self, rows: &mut Vec<ResultRow>) -> Result<()> {
        if self.analytic() {
            for scheme in Scheme::ALL {
                let pair = RatePair::analytic(&self.params, scheme, &self.spec.quad)?;
                rows.push(self.exact(scheme, "cellular_rate", Source::Analytic, pair.cellular_rate));
                rows.push(self.exact(scheme, "iot_rate", Source::Analytic, pair.iot_sum_rate));
            }
            if let Some(v) = self.asymptotic_iot_rate()? {
                rows.push(self.exact(Scheme::Sda, "iot_rate", Source::Asymptotic, v));
            }
        }
        let mc = mc_rates(&self.params, &self.spec.mc)?;
        for scheme in Scheme::ALL {
            let (cell, iot) = mc.scheme(scheme);
            rows.push(self.sampled(scheme, "cellular_rate", &cell));
            rows.push(self.sampled(scheme, "iot_rate", &iot));
        }
        Ok(())
    }

    fn outages(&self, rows: &mut Vec<ResultRow>) -> Result<()> {
        if self.analytic() {
            let inputs = OutageInputs::new(&self.params, &self.spec.quad)?.with_genk_shape(self.spec.genk_shape);
            let set = all_outages(&inputs)?;
            for (scheme, cell, iot) in [
                (Scheme::Sa, set.sa_cellular, set.sa_iot),
                (Scheme::Sda, set.sda_cellular, set.sda_iot),
            ] {
                rows.push(self.exact(scheme, "cellular_outage", Source::Analytic, cell.value));
                rows.push(self.exact(scheme, "iot_outage", Source::Analytic, iot.value));
            }
            let asym = sa_iot_outage_asymptotic(&inputs)?;
            rows.push(self.exact(Scheme::Sa, "iot_outage", Source::Asymptotic, asym));
        }
        let mc = mc_outages(&self.params, &self.spec.mc)?;
        for scheme in Scheme::ALL {
            let est = mc.scheme(scheme);
            rows.push(self.sampled(scheme, "cellular_outage", &est.cellular));
            rows.push(self.sampled(scheme, "cellular_outage_high_snr", &est.cellular_high_snr));
            rows.push(self.sampled(scheme, "iot_outage", &est.iot));
        }
        Ok(())
    }

    fn asymptotic(&self, rows: &mut Vec<ResultRow>) -> Result<()> {
        if self.analytic() {
            let exact = sda_iot_ergodic_exact(&self.params, &self.spec.quad)?;
            rows.push(self.exact(Scheme::Sda, "iot_rate", Source::Analytic, exact.value));
            if let Some(v) = self.asymptotic_iot_rate()? {
                rows.push(self.exact(Scheme::Sda, "iot_rate", Source::Asymptotic, v));
            }
        }
        let (_, iot) = mc_rates(&self.params, &self.spec.mc)?.scheme(Scheme::Sda);
        rows.push(self.sampled(Scheme::Sda, "iot_rate", &iot));
        Ok(())
    }

    /// Histograms of `Λ/10⁻¹²` and `max Z/10⁻¹²` with the model densities at
    /// the bin centers.
    fn pdfs(&self, rows: &mut Vec<ResultRow>) -> Result<()> {
        let k = self.params.k_devices;
        let lam = self.params.lambda_prod;
        let mc: &McConfig = &self.spec.mc;
        let seed = mc.seed;

        let lambda_samples = mc_strength_samples(&self.params, mc, StrengthKind::LambdaSum)?;
        let lambda_hist = Histogram::freedman_diaconis(&lambda_samples)?;
        let lambda_metric = format!("lambda_pdf_k{k}");
        rows.extend(histogram_rows(Scheme::Sa, &lambda_metric, &lambda_hist, seed));
        let families = if self.analytic() {
            fit_families_with(k, lam, self.spec.genk_shape)?.map(|f| f.rescaled(STRENGTH_UNIT)).to_vec()
        } else {
            Vec::new()
        };
        for fam in &families {
            let name = fam.kind().as_str();
            for x in lambda_hist.centers() {
                rows.push(ResultRow::exact("sa", &lambda_metric, "x", x, name, fam.pdf(x)));
            }
            let sup = lambda_hist.sup_distance(|x| fam.pdf(x));
            rows.push(ResultRow::exact("sa", "lambda_pdf_sup_distance", "k_devices", k as f64, name, sup));
        }
        rows.push(bin_width_row(Scheme::Sa, "lambda_pdf_bin_width", k, &lambda_hist, seed));

        let zmax_samples = mc_strength_samples(&self.params, mc, StrengthKind::ZMax)?;
        let zmax_hist = Histogram::freedman_diaconis(&zmax_samples)?;
        let zmax_metric = format!("zmax_pdf_k{k}");
        rows.extend(histogram_rows(Scheme::Sda, &zmax_metric, &zmax_hist, seed));
        if self.analytic() {
            let pdf = |x: f64| maxz_pdf(x * STRENGTH_UNIT, lam, k).map_or(0.0, |d| d * STRENGTH_UNIT);
            for x in zmax_hist.centers() {
                rows.push(ResultRow::exact("sda", &zmax_metric, "x", x, "analytic", pdf(x)));
            }
            let sup = zmax_hist.sup_distance(pdf);
            rows.push(ResultRow::exact("sda", "zmax_pdf_sup_distance", "k_devices", k as f64, "analytic", sup));
        }
        rows.push(bin_width_row(Scheme::Sda, "zmax_pdf_bin_width", k, &zmax_hist, seed));
        Ok(())
    }
}

/// Empirical densities; the standard error is the binomial one of the count.
fn histogram_rows<'a>(
    scheme: Scheme,
    metric: &'a str,
    hist: &'a Histogram,
    seed: u64,
) -> impl Iterator<Item = ResultRow> + 'a {
    let n = hist.total as f64;
    hist.centers().zip(&hist.counts).map(move |(x, &c)| {
        let p = c as f64 / n;
        let est = MetricEstimate {
            value: p / hist.bin_width,
            stderr: (p * (1.0 - p) / n).sqrt() / hist.bin_width,
            trials: hist.total,
            source: Source::MonteCarlo,
        };
        ResultRow::sampled(scheme.as_str(), metric, "x", x, &est, seed)
    })
}

fn bin_width_row(scheme: Scheme, metric: &str, k: u32, hist: &Histogram, seed: u64) -> ResultRow {
    ResultRow {
        trials: Some(hist.total),
        seed: Some(seed),
        ..ResultRow::exact(scheme.as_str(), metric, "k_devices", k as f64, "monte_carlo", hist.bin_width)
    }
}
