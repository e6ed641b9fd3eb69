//! Special functions needed by the operator family.
//!
//! Everything here is a pure function of its arguments. The Gamma function is
//! evaluated through the Stirling series after shifting the argument upward
//! with the recurrence `Γ(z+1) = zΓ(z)`; the same code path serves the real
//! axis and the vertical lines `Re z = ½ + α`. The reflection formula is never
//! used in the implementation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent parameter of the operator family. Always strictly greater than −½.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > -0.5 {
            Ok(Alpha(value))
        } else {
            Err(Error::domain("Alpha::new", format!("alpha must exceed -1/2, got {value}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 + 2α`, the homogeneity exponent of the model kernel.
    #[inline]
    pub fn order(self) -> f64 {
        1.0 + 2.0 * self.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Alpha::new(value)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_4;

/// Below this real part the argument is shifted up before the asymptotic series is applied.
const STIRLING_SHIFT: f64 = 12.0;

/// `B_{2k} / (2k (2k-1))` for k = 1..=10.
const STIRLING_COEFFS: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

fn stirling_tail(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in STIRLING_COEFFS.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

fn stirling_tail_complex(z: Complex64) -> Complex64 {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in STIRLING_COEFFS.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// Natural logarithm of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("ln_gamma", format!("argument must be positive, got {x}")));
    }
    let mut z = x;
    let mut product = 1.0;
    while z < STIRLING_SHIFT {
        product *= z;
        z += 1.0;
    }
    let stirling = (z - 0.5) * z.ln() - z + LN_SQRT_2PI + stirling_tail(z);
    Ok(stirling - product.ln())
}

/// Γ(x) for x > 0 (overflows to +inf past x ≈ 171).
pub fn gamma(x: f64) -> Result<f64> {
    Ok(ln_gamma(x)?.exp())
}

/// Principal branch of ln Γ(z) for `Re z > 0`.
pub fn ln_gamma_complex(z: Complex64) -> Result<Complex64> {
    if !(z.re > 0.0) || !z.is_finite() {
        return Err(Error::domain(
            "ln_gamma_complex",
            format!("real part must be positive, got {z}"),
        ));
    }
    let mut w = z;
    let mut shift_log = Complex64::new(0.0, 0.0);
    while w.re < STIRLING_SHIFT {
        shift_log += w.ln();
        w += 1.0;
    }
    let stirling = (w - 0.5) * w.ln() - w + LN_SQRT_2PI + stirling_tail_complex(w);
    Ok(stirling - shift_log)
}

/// |Γ(½ + α + iξ)|².
pub fn gamma_abs_sq(alpha: Alpha, xi: f64) -> f64 {
    let z = Complex64::new(0.5 + alpha.value(), xi);
    // Re z > 0 is guaranteed by the Alpha invariant.
    let lg = ln_gamma_complex(z).expect("Re(1/2 + alpha) > 0");
    (2.0 * lg.re).exp()
}

/// Top of the spectrum of the model operator, Γ(½+α)² / Γ(1+2α).
pub fn pi_alpha(alpha: Alpha) -> f64 {
    let a = alpha.value();
    let num = ln_gamma(0.5 + a).expect("positive argument");
    let den = ln_gamma(1.0 + 2.0 * a).expect("positive argument");
    (2.0 * num - den).exp()
}

/// Multiplier σ_α(ξ) = |Γ(½+α+iξ)|² / Γ(1+2α) that the Mellin transform
/// turns the model operator into.
pub fn mellin_symbol(alpha: Alpha, xi: f64) -> f64 {
    let z = Complex64::new(0.5 + alpha.value(), xi);
    let lg = ln_gamma_complex(z).expect("Re(1/2 + alpha) > 0");
    let den = ln_gamma(alpha.order()).expect("positive argument");
    (2.0 * lg.re - den).exp()
}

/// Result of a quadrature evaluation together with its refinement error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureValue {
    pub value: f64,
    pub error_estimate: f64,
}

const SYMBOL_TAIL_TOL: f64 = 1e-14;
const SYMBOL_REFINE_TOL: f64 = 1e-12;

/// Independent evaluation of the Mellin symbol by direct quadrature of
/// `∫₀^∞ s^α (1+s)^(−1−2α) s^(−½+iξ) ds`.
///
/// With `s = e^x` the integrand becomes `(2 cosh(x/2))^(−1−2α) e^{iξx}`, which is
/// even and analytic in a strip, so the trapezoid rule on a symmetric window
/// converges geometrically. The window half-width is the larger of 40 and the
/// width needed to push the exponential tail below 1e-14.
pub fn symbol_by_quadrature(alpha: Alpha, xi: f64) -> Result<QuadratureValue> {
    let order = alpha.order();
    let decay = 0.5 * order;
    let half_width = (2.0 / (decay * SYMBOL_TAIL_TOL)).ln() / decay;
    let half_width = half_width.max(40.0);
    let freq = xi.abs().max(1.0);
    // at least 20 points per period of the oscillating factor
    let mut step = (2.0 * PI / (20.0 * freq)).min(0.25);

    let integrand = |x: f64| {
        let ax = x.abs();
        let log_cosh2 = 0.5 * ax + (-ax).exp().ln_1p();
        (-order * log_cosh2).exp() * (xi * x).cos()
    };
    let trapezoid = |h: f64| {
        let n = (half_width / h).ceil() as usize;
        let mut sum = 0.0;
        for k in (1..=n).rev() {
            sum += integrand(k as f64 * h);
        }
        h * (integrand(0.0) + 2.0 * sum)
    };

    let mut coarse = trapezoid(step);
    for _ in 0..6 {
        step *= 0.5;
        let fine = trapezoid(step);
        let estimate = (fine - coarse).abs();
        if estimate <= SYMBOL_REFINE_TOL * fine.abs().max(1.0) {
            return Ok(QuadratureValue {
                value: fine.abs(),
                error_estimate: estimate,
            });
        }
        coarse = fine;
    }
    Err(Error::QuadratureNotConverged {
        estimate: (trapezoid(step) - coarse).abs(),
    })
}

const INCGAMMA_TOL: f64 = 1e-14;
const INCGAMMA_MAX_ITER: usize = 500;

fn check_incgamma_args(func: &'static str, s: f64, t: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain(func, format!("shape must be positive, got {s}")));
    }
    if !(t >= 0.0) {
        return Err(Error::domain(func, format!("argument must be non-negative, got {t}")));
    }
    Ok(())
}

/// exp(−t + s ln t − ln Γ(s)), the common prefactor.
fn incgamma_prefactor(s: f64, t: f64) -> Result<f64> {
    Ok((-t + s * t.ln() - ln_gamma(s)?).exp())
}

fn lower_series(s: f64, t: f64) -> Result<f64> {
    let mut ap = s;
    let mut term = 1.0 / s;
    let mut sum = term;
    for _ in 0..INCGAMMA_MAX_ITER {
        ap += 1.0;
        term *= t / ap;
        sum += term;
        if term.abs() < sum.abs() * INCGAMMA_TOL {
            return Ok(sum * incgamma_prefactor(s, t)?);
        }
    }
    Err(Error::domain("reg_gamma_lower", format!("series failed to converge at s={s}, t={t}")))
}

fn upper_continued_fraction(s: f64, t: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = t + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=INCGAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < INCGAMMA_TOL {
            return Ok(h * incgamma_prefactor(s, t)?);
        }
    }
    Err(Error::domain(
        "reg_gamma_upper",
        format!("continued fraction failed to converge at s={s}, t={t}"),
    ))
}

/// Regularised lower incomplete Gamma function P(s, t) = γ(s, t) / Γ(s).
pub fn reg_gamma_lower(s: f64, t: f64) -> Result<f64> {
    check_incgamma_args("reg_gamma_lower", s, t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    if t < s + 1.0 {
        lower_series(s, t)
    } else {
        Ok(1.0 - upper_continued_fraction(s, t)?)
    }
}

/// Regularised upper incomplete Gamma function Q(s, t) = Γ(s, t) / Γ(s).
pub fn reg_gamma_upper(s: f64, t: f64) -> Result<f64> {
    check_incgamma_args("reg_gamma_upper", s, t)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    if t < s + 1.0 {
        Ok(1.0 - lower_series(s, t)?)
    } else {
        upper_continued_fraction(s, t)
    }
}

fn check_positive(func: &'static str, t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(func, format!("argument must be positive, got {t}")))
    }
}

/// φ₀(t) = Γ(1+2α)⁻¹ ∫₁^∞ x^{2α} e^{−xt} dx = t^{−1−2α} Q(1+2α, t).
///
/// Decays like e^{−t}; underflows to zero for t beyond roughly 700.
pub fn phi0(alpha: Alpha, t: f64) -> Result<f64> {
    check_positive("phi0", t)?;
    let s = alpha.order();
    Ok(t.powf(-s) * reg_gamma_upper(s, t)?)
}

/// φ∞(t) = Γ(1+2α)⁻¹ ∫₀^1 x^{2α} e^{−xt} dx = t^{−1−2α} P(1+2α, t).
pub fn phi_inf(alpha: Alpha, t: f64) -> Result<f64> {
    check_positive("phi_inf", t)?;
    let s = alpha.order();
    if t < s + 1.0 {
        // t^{-s} P(s,t) without forming t^{-s} and t^{s} separately
        let mut ap = s;
        let mut term = 1.0 / s;
        let mut sum = term;
        for _ in 0..INCGAMMA_MAX_ITER {
            ap += 1.0;
            term *= t / ap;
            sum += term;
            if term.abs() < sum.abs() * INCGAMMA_TOL {
                return Ok(sum * (-t - ln_gamma(s)?).exp());
            }
        }
        return Err(Error::domain("phi_inf", format!("series failed to converge at t={t}")));
    }
    Ok(t.powf(-s) * reg_gamma_lower(s, t)?)
}

/// ψ₊(t) = e^{t(α+½)} e^{−e^t}.
pub fn psi_plus(alpha: Alpha, t: f64) -> f64 {
    (t * (alpha.value() + 0.5) - t.exp()).exp()
}

/// ψ₋(t) = e^{−t(α+½)} e^{−e^{−t}}.
pub fn psi_minus(alpha: Alpha, t: f64) -> f64 {
    (-t * (alpha.value() + 0.5) - (-t).exp()).exp()
}
