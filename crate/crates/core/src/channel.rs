//! Scenario construction and seeded sampling of channel realizations.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Random stream owned by a single Monte Carlo trial.
pub type TrialRng = ChaCha8Rng;

/// Small-scale fading model of the device-to-receiver hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingMode {
    /// Both hops Rayleigh: the cascaded link is double-Rayleigh.
    Double,
    /// `g_k` fixed at `√λ_g`; only the BS-to-device hop fades.
    Single,
}

impl fmt::Display for FadingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FadingMode::Double => f.write_str("double"),
            FadingMode::Single => f.write_str("single"),
        }
    }
}

impl FromStr for FadingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "double" => Ok(FadingMode::Double),
            "single" => Ok(FadingMode::Single),
            other => Err(format!("unknown fading mode `{other}` (expected double|single)")),
        }
    }
}

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Free-space style path loss `λ_c² G_a G_b / ((4π)² d^ν)` as a linear power ratio.
pub fn path_loss(wavelength: f64, gain_a: f64, gain_b: f64, distance: f64, exponent: f64) -> Result<f64> {
    for (name, v) in [
        ("wavelength", wavelength),
        ("gain_a", gain_a),
        ("gain_b", gain_b),
        ("distance", distance),
        ("exponent", exponent),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::param(name, v, "must be positive and finite"));
        }
    }
    Ok(wavelength * wavelength * gain_a * gain_b / ((4.0 * PI).powi(2) * distance.powf(exponent)))
}

/// Link geometry and large-scale parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    /// BS to receiver.
    pub d0_m: f64,
    /// BS to device.
    pub dh_m: f64,
    /// Device to receiver.
    pub dg_m: f64,
    pub nu0: f64,
    pub nuh: f64,
    pub nug: f64,
    pub carrier_wavelength_m: f64,
    /// Linear antenna gains of the BS, the device and the receiver.
    pub gains_linear: [f64; 3],
    /// Variances of the small-scale factors η_0, η_{k,h}, η_{k,g}.
    pub eta_vars: [f64; 3],
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            d0_m: 162.0,
            dh_m: 162.0,
            dg_m: 10.0,
            nu0: 4.0,
            nuh: 2.0,
            nug: 2.0,
            carrier_wavelength_m: 0.33,
            gains_linear: [1.0, 1.0, 1.0],
            eta_vars: [1.0, 0.8, 1.0],
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        for (name, d) in [("geometry.d0_m", self.d0_m), ("geometry.dh_m", self.dh_m), ("geometry.dg_m", self.dg_m)] {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::param(name, d, "distance must be positive"));
            }
        }
        for (name, nu) in [("geometry.nu0", self.nu0), ("geometry.nuh", self.nuh), ("geometry.nug", self.nug)] {
            if !(nu.is_finite() && nu >= 2.0) {
                return Err(Error::param(name, nu, "path-loss exponent must be at least 2"));
            }
        }
        if !(self.carrier_wavelength_m.is_finite() && self.carrier_wavelength_m > 0.0) {
            return Err(Error::param(
                "geometry.wavelength_m",
                self.carrier_wavelength_m,
                "must be positive",
            ));
        }
        if self.gains_linear.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::param("geometry.gains_db", format!("{:?}", self.gains_linear), "gains must be finite"));
        }
        if self.eta_vars.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::param("geometry.eta_vars", format!("{:?}", self.eta_vars), "variances must be positive"));
        }
        Ok(())
    }

    /// Path losses `(L_0, L_{k,h}, L_{k,g})`.
    pub fn path_losses(&self) -> Result<(f64, f64, f64)> {
        self.validate()?;
        let [gb, gi, gr] = self.gains_linear;
        let wl = self.carrier_wavelength_m;
        Ok((
            path_loss(wl, gb, gr, self.d0_m, self.nu0)?,
            path_loss(wl, gb, gi, self.dh_m, self.nuh)?,
            path_loss(wl, gr, gi, self.dg_m, self.nug)?,
        ))
    }
}

/// Link-level settings that do not depend on geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSettings {
    pub k_devices: u32,
    pub n_spread: u32,
    pub p_watts: f64,
    pub sigma2_watts: f64,
    pub alpha: f64,
    pub fading_mode: FadingMode,
    pub target_rate_s: f64,
    pub target_rate_c: f64,
}

impl Default for LinkSettings {
    fn default() -> Self {
        LinkSettings {
            k_devices: 2,
            n_spread: 64,
            p_watts: 1.0,
            sigma2_watts: dbm_to_watts(-110.0),
            alpha: 1.0,
            fading_mode: FadingMode::Double,
            target_rate_s: 5.0,
            target_rate_c: 0.2,
        }
    }
}

/// All physical and statistical parameters of one experiment.
///
/// Built through [`build_scenario`]; `lambda_prod` always equals
/// `lambda_h * lambda_g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub k_devices: u32,
    pub n_spread: u32,
    pub p_watts: f64,
    pub sigma2_watts: f64,
    pub alpha: f64,
    pub lambda0: f64,
    pub lambda_h: f64,
    pub lambda_g: f64,
    pub lambda_prod: f64,
    pub fading_mode: FadingMode,
    pub target_rate_s: f64,
    pub target_rate_c: f64,
}

/// Derives channel variances from the geometry and validates the link settings.
pub fn build_scenario(geometry: &Geometry, link: &LinkSettings) -> Result<ScenarioParams> {
    let (l0, lh, lg) = geometry.path_losses()?;
    let [v0, vh, vg] = geometry.eta_vars;
    ScenarioParams::from_variances(link, l0 * v0, lh * vh, lg * vg)
}

impl Default for ScenarioParams {
    fn default() -> Self {
        build_scenario(&Geometry::default(), &LinkSettings::default()).expect("default scenario is valid")
    }
}

impl ScenarioParams {
    /// Builds a scenario from explicit channel variances.
    pub fn from_variances(link: &LinkSettings, lambda0: f64, lambda_h: f64, lambda_g: f64) -> Result<Self> {
        let params = ScenarioParams {
            k_devices: link.k_devices,
            n_spread: link.n_spread,
            p_watts: link.p_watts,
            sigma2_watts: link.sigma2_watts,
            alpha: link.alpha,
            lambda0,
            lambda_h,
            lambda_g,
            lambda_prod: lambda_h * lambda_g,
            fading_mode: link.fading_mode,
            target_rate_s: link.target_rate_s,
            target_rate_c: link.target_rate_c,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_devices == 0 {
            return Err(Error::param("scenario.k_devices", self.k_devices, "must be at least 1"));
        }
        if self.n_spread == 0 {
            return Err(Error::param("scenario.n_spread", self.n_spread, "must be at least 1"));
        }
        for (name, v) in [
            ("scenario.p", self.p_watts),
            ("scenario.sigma2", self.sigma2_watts),
            ("lambda0", self.lambda0),
            ("lambda_h", self.lambda_h),
            ("lambda_g", self.lambda_g),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, v, "must be positive and finite"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param("scenario.alpha", self.alpha, "must lie in (0, 1]"));
        }
        for (name, v) in [("scenario.target_rate_s", self.target_rate_s), ("scenario.target_rate_c", self.target_rate_c)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, v, "must be nonnegative"));
            }
        }
        if self.lambda_prod != self.lambda_h * self.lambda_g {
            return Err(Error::param("lambda_prod", self.lambda_prod, "must equal lambda_h * lambda_g"));
        }
        Ok(())
    }

    pub fn with_k(mut self, k: u32) -> Result<Self> {
        self.k_devices = k;
        self.validate()?;
        Ok(self)
    }

    pub fn with_power_watts(mut self, p: f64) -> Result<Self> {
        self.p_watts = p;
        self.validate()?;
        Ok(self)
    }

    pub fn with_fading(mut self, mode: FadingMode) -> Self {
        self.fading_mode = mode;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn with_targets(mut self, rate_s: f64, rate_c: f64) -> Result<Self> {
        self.target_rate_s = rate_s;
        self.target_rate_c = rate_c;
        self.validate()?;
        Ok(self)
    }

    /// `p/σ²`.
    pub fn snr_scale(&self) -> f64 {
        self.p_watts / self.sigma2_watts
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha * self.alpha
    }
}

/// One draw of the direct, incident and backscatter channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h0: Complex64,
    pub h: Vec<Complex64>,
    pub g: Vec<Complex64>,
    /// `Z_k = |g_k h_k|²`
    pub z: Vec<f64>,
    /// `Λ = Σ Z_k`
    pub lambda_sum: f64,
    /// `Z = max Z_k`
    pub z_max: f64,
    pub argmax_index: usize,
}

impl ChannelRealization {
    fn with_capacity(k: usize) -> Self {
        ChannelRealization {
            h0: Complex64::new(0.0, 0.0),
            h: Vec::with_capacity(k),
            g: Vec::with_capacity(k),
            z: Vec::with_capacity(k),
            lambda_sum: 0.0,
            z_max: 0.0,
            argmax_index: 0,
        }
    }

    /// `|h_0|²`
    pub fn h0_sq(&self) -> f64 {
        self.h0.norm_sqr()
    }

    /// Redraws every channel in place, reusing the buffers.
    pub fn resample<R: Rng + ?Sized>(&mut self, params: &ScenarioParams, rng: &mut R) {
        let k = params.k_devices as usize;
        self.h.clear();
        self.g.clear();
        self.h0 = complex_gaussian(rng, params.lambda0);
        let g_fixed = Complex64::new(params.lambda_g.sqrt(), 0.0);
        for _ in 0..k {
            self.h.push(complex_gaussian(rng, params.lambda_h));
            let g = match params.fading_mode {
                FadingMode::Double => complex_gaussian(rng, params.lambda_g),
                FadingMode::Single => g_fixed,
            };
            self.g.push(g);
        }
        self.refresh_strengths();
    }

    /// Recomputes `z`, `lambda_sum`, `z_max` and `argmax_index` from `h` and `g`.
    pub fn refresh_strengths(&mut self) {
        self.z.clear();
        self.lambda_sum = 0.0;
        self.z_max = 0.0;
        self.argmax_index = 0;
        for (i, (h, g)) in self.h.iter().zip(&self.g).enumerate() {
            let zk = g.norm_sqr() * h.norm_sqr();
            self.z.push(zk);
            self.lambda_sum += zk;
            if zk > self.z_max || i == 0 {
                self.z_max = zk;
                self.argmax_index = i;
            }
        }
    }

    /// The same realization with device `k` removed.
    pub fn without_device(&self, k: usize) -> ChannelRealization {
        let mut out = self.clone();
        out.h.remove(k);
        out.g.remove(k);
        out.refresh_strengths();
        out
    }
}

pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Draws one realization of `h0`, `{h_k}` and `{g_k}`.
pub fn draw_realization<R: Rng + ?Sized>(params: &ScenarioParams, rng: &mut R) -> ChannelRealization {
    let mut r = ChannelRealization::with_capacity(params.k_devices as usize);
    r.resample(params, rng);
    r
}

/// Independent reproducible substream for trial `trial_index` under `seed`.
///
/// ChaCha's 64-bit stream id carries the trial index, so the stream depends
/// only on `(seed, trial_index)` and never on scheduling.
pub fn stream_for_trial(seed: u64, trial_index: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}
