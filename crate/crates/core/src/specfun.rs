//! Special functions and quadrature rules shared by every analytic expression.
//!
//! The modified Bessel functions use the ascending series below `x = 2` and
//! Steed's continued fraction above it. The exponential integral uses the
//! power series on `(0, 1]` and a Lentz continued fraction beyond. Nothing here
//! allocates except [`chebyshev_nodes`] and [`GaussChebyshev::new`].

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const SERIES_SWITCH: f64 = 2.0;
const MAX_ITER: usize = 10_000;

/// Truncation bounds and node count for the Gauss–Chebyshev rate integrals.
///
/// The bounds are expressed in multiples of the mean backscatter strength
/// `λ = λ_g·λ_h`, not in watts.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureSpec {
    pub m1_bound: f64,
    pub m2_bound: f64,
    pub n_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            m1_bound: 1000.0,
            m2_bound: 1000.0,
            n_nodes: 128,
        }
    }
}

impl QuadratureSpec {
    pub fn new(m1_bound: f64, m2_bound: f64, n_nodes: usize) -> Result<Self> {
        let spec = QuadratureSpec {
            m1_bound,
            m2_bound,
            n_nodes,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m1_bound.is_finite() && self.m1_bound > 0.0) {
            return Err(Error::param("quad.m1", self.m1_bound, "must be positive"));
        }
        if !(self.m2_bound.is_finite() && self.m2_bound > 0.0) {
            return Err(Error::param("quad.m2", self.m2_bound, "must be positive"));
        }
        if self.n_nodes == 0 {
            return Err(Error::param("quad.n_nodes", self.n_nodes, "must be at least 1"));
        }
        Ok(())
    }

    /// Same bounds with the node count doubled, used for self-convergence checks.
    pub fn refined(&self) -> Self {
        QuadratureSpec {
            n_nodes: self.n_nodes * 2,
            ..*self
        }
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::domain("ln_gamma", x, "requires finite x > 0"));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx), sin(πx) > 0 on (0, 0.5)
        return (PI / (PI * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Ascending-series pieces shared by K0 and K1 on `(0, 2]`.
struct SmallArgSeries {
    /// I0(x)
    i0: f64,
    /// I1(x)
    i1: f64,
    /// Σ_{k≥1} H_k q^k / (k!)²
    k0_tail: f64,
    /// Σ_{k≥0} (ψ(k+1)+ψ(k+2)) q^k / (k!(k+1)!)
    k1_tail: f64,
}

fn small_arg_series(x: f64) -> SmallArgSeries {
    let q = 0.25 * x * x;
    // term_k = q^k/(k!)², term1_k = q^k/(k!(k+1)!)
    let mut term = 1.0;
    let mut term1 = 1.0;
    let mut harmonic = 0.0;
    let mut i0 = 1.0;
    let mut i1_sum = 1.0;
    let mut k0_tail = 0.0;
    // ψ(1)+ψ(2) = -2γ + 1
    let mut k1_tail = 1.0 - 2.0 * EULER_GAMMA;
    for k in 1..64 {
        let kf = k as f64;
        term *= q / (kf * kf);
        term1 *= q / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        i0 += term;
        i1_sum += term1;
        k0_tail += harmonic * term;
        // ψ(k+1)+ψ(k+2) = -2γ + 2H_k + 1/(k+1)
        let psi_sum = -2.0 * EULER_GAMMA + 2.0 * harmonic + 1.0 / (kf + 1.0);
        k1_tail += psi_sum * term1;
        if term < 1e-18 * i0 && term1 < 1e-18 * i1_sum {
            break;
        }
    }
    SmallArgSeries {
        i0,
        i1: 0.5 * x * i1_sum,
        k0_tail,
        k1_tail,
    }
}

/// Steed's continued fraction for `e^x K0(x)` and `e^x K1(x)`, valid for `x ≥ 2`.
fn steed_scaled(x: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0e = (PI / (2.0 * x)).sqrt() / s;
    let k1e = k0e * (0.5 + x - h) / x;
    (k0e, k1e)
}

fn check_positive(func: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::domain(func, x, "requires x > 0"))
    }
}

fn k0_scaled_unchecked(x: f64) -> f64 {
    if x <= SERIES_SWITCH {
        let s = small_arg_series(x);
        let k0 = -((0.5 * x).ln() + EULER_GAMMA) * s.i0 + s.k0_tail;
        k0 * x.exp()
    } else if x.is_infinite() {
        0.0
    } else {
        steed_scaled(x).0
    }
}

fn k1_scaled_unchecked(x: f64) -> f64 {
    if x <= SERIES_SWITCH {
        let s = small_arg_series(x);
        let k1 = 1.0 / x + (0.5 * x).ln() * s.i1 - 0.25 * x * s.k1_tail;
        k1 * x.exp()
    } else if x.is_infinite() {
        0.0
    } else {
        steed_scaled(x).1
    }
}

/// Modified Bessel function of the second kind, order zero.
///
/// Returns exactly 0 once `e^{-x}` underflows.
pub fn bessel_k0(x: f64) -> Result<f64> {
    check_positive("bessel_k0", x)?;
    Ok(k0_unchecked(x))
}

/// Modified Bessel function of the second kind, order one.
pub fn bessel_k1(x: f64) -> Result<f64> {
    check_positive("bessel_k1", x)?;
    Ok(k1_unchecked(x))
}

/// `e^x K0(x)`, finite for every `x > 0`.
pub fn bessel_k0_scaled(x: f64) -> Result<f64> {
    check_positive("bessel_k0_scaled", x)?;
    Ok(k0_scaled_unchecked(x))
}

/// `e^x K1(x)`.
pub fn bessel_k1_scaled(x: f64) -> Result<f64> {
    check_positive("bessel_k1_scaled", x)?;
    Ok(k1_scaled_unchecked(x))
}

/// `ln K0(x)` without underflow for large `x`.
pub fn ln_bessel_k0(x: f64) -> Result<f64> {
    check_positive("ln_bessel_k0", x)?;
    Ok(ln_k0_unchecked(x))
}

pub(crate) fn k0_unchecked(x: f64) -> f64 {
    if x <= SERIES_SWITCH {
        let s = small_arg_series(x);
        -((0.5 * x).ln() + EULER_GAMMA) * s.i0 + s.k0_tail
    } else {
        k0_scaled_unchecked(x) * (-x).exp()
    }
}

pub(crate) fn k1_unchecked(x: f64) -> f64 {
    if x <= SERIES_SWITCH {
        let s = small_arg_series(x);
        1.0 / x + (0.5 * x).ln() * s.i1 - 0.25 * x * s.k1_tail
    } else {
        k1_scaled_unchecked(x) * (-x).exp()
    }
}

pub(crate) fn ln_k0_unchecked(x: f64) -> f64 {
    if x <= SERIES_SWITCH {
        k0_unchecked(x).ln()
    } else {
        k0_scaled_unchecked(x).ln() - x
    }
}

/// `x·K1(x)` for `x ≥ 0`, with the limit value 1 at the origin.
///
/// This is the survival function of the double-Rayleigh product evaluated at
/// `(x/2)²` in λ-normalized units.
pub(crate) fn x_k1(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        1.0 - one_minus_x_k1(x)
    }
}

/// `1 − x·K1(x)` for `x ≥ 0`, computed without cancellation near the origin.
pub(crate) fn one_minus_x_k1(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x <= SERIES_SWITCH {
        let s = small_arg_series(x);
        -x * (0.5 * x).ln() * s.i1 + 0.25 * x * x * s.k1_tail
    } else {
        1.0 - x * k1_unchecked(x)
    }
}

/// Exponential integral `E1(x) = ∫ₓ^∞ e^{-u}/u du`; `Ei(-x) = -E1(x)`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    check_positive("exp_integral_e1", x)?;
    Ok(e1_unchecked(x))
}

/// `e^x E1(x)`.
pub fn exp_integral_e1_scaled(x: f64) -> Result<f64> {
    check_positive("exp_integral_e1_scaled", x)?;
    Ok(if x <= 1.0 {
        e1_series(x) * x.exp()
    } else {
        e1_continued_fraction_scaled(x)
    })
}

pub(crate) fn e1_unchecked(x: f64) -> f64 {
    if x <= 1.0 {
        e1_series(x)
    } else if x > 745.0 {
        0.0
    } else {
        e1_continued_fraction_scaled(x) * (-x).exp()
    }
}

fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..MAX_ITER {
        let kf = k as f64;
        term *= -x / kf;
        let add = -term / kf;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

fn e1_continued_fraction_scaled(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Chebyshev–Gauss nodes `φ_i = cos((2i−1)π/(2n))`, `i = 1..=n`, strictly decreasing.
pub fn chebyshev_nodes(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::domain("chebyshev_nodes", 0.0, "requires n ≥ 1"));
    }
    let nf = n as f64;
    Ok((1..=n)
        .map(|i| {
            let node = ((2 * i - 1) as f64 * PI / (2.0 * nf)).cos();
            // the middle node of an odd rule is exactly zero
            if 2 * i - 1 == n {
                0.0
            } else {
                node
            }
        })
        .collect())
}

/// Precomputed Gauss–Chebyshev rule mapped onto `[0, upper]`:
///
/// `∫₀^M g(y) dy ≈ (Mπ/2n) Σ g((Mφ_i + M)/2) √(1 − φ_i²)`.
#[derive(Debug, Clone)]
pub struct GaussChebyshev {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussChebyshev {
    pub fn new(n: usize) -> Result<Self> {
        let nodes = chebyshev_nodes(n)?;
        let weights = nodes.iter().map(|phi| (1.0 - phi * phi).sqrt()).collect();
        Ok(GaussChebyshev { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Abscissae in `[0, upper]` at which `integrate` evaluates the integrand.
    pub fn abscissae(&self, upper: f64) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().map(move |phi| 0.5 * (upper * phi + upper))
    }

    pub fn integrate<F>(&self, mut f: F, upper: f64) -> Result<f64>
    where
        F: FnMut(f64) -> f64,
    {
        if !(upper.is_finite() && upper > 0.0) {
            return Err(Error::domain("integrate_gc", upper, "requires finite upper > 0"));
        }
        let mut sum = 0.0;
        for (phi, w) in self.nodes.iter().zip(&self.weights) {
            let y = 0.5 * (upper * phi + upper);
            let v = f(y);
            if !v.is_finite() {
                return Err(Error::NonFinite { at: y });
            }
            sum += v * w;
        }
        Ok(upper * PI / (2.0 * self.nodes.len() as f64) * sum)
    }
}

/// One-shot Gauss–Chebyshev integral of `f` over `[0, upper]` with `n` nodes.
pub fn integrate_gc<F>(f: F, upper: f64, n: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    GaussChebyshev::new(n)?.integrate(f, upper)
}

/// Adaptive Simpson quadrature on `[a, b]` with absolute tolerance `tol`.
///
/// The interval is first split into `panels` equal pieces so narrow peaks are
/// not skipped by the initial five-point sample.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64, panels: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("adaptive_simpson", b, "requires finite limits"));
    }
    if b <= a {
        return Ok(0.0);
    }
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { at: x })
        }
    };
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let hi = if p + 1 == panels { b } else { lo + width };
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (eval(lo)?, eval(mid)?, eval(hi)?);
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += simpson_step(&eval, lo, hi, flo, fmid, fhi, whole, tol / panels as f64, 48)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<E>(
    eval: &E,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64>
where
    E: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(lm)?;
    let frm = eval(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_step(eval, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(eval, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}
