//! Kernels `a(t)`, weights `w(t)`, the two-variable kernels of the model
//! operators, and a numerical checker for the asymptotic hypotheses on `a`, `w`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{self, Alpha};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type BivariateFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A real kernel `a(t)` with the limits of `t^{1+2α} a(t)` at 0 and ∞.
#[derive(Clone)]
pub struct KernelSpec {
    pub alpha: Alpha,
    pub a0: f64,
    pub a_inf: f64,
    /// Regularity margin: the deviation from the limits is O(t^{±ε}).
    pub epsilon: f64,
    label: String,
    eval: ScalarFn,
}

impl KernelSpec {
    pub fn new(
        alpha: Alpha,
        label: impl Into<String>,
        a0: f64,
        a_inf: f64,
        epsilon: f64,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        KernelSpec {
            alpha,
            a0,
            a_inf,
            epsilon,
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("label", &self.label)
            .field("alpha", &self.alpha)
            .field("a0", &self.a0)
            .field("a_inf", &self.a_inf)
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

/// A real weight `w(t)` with the limits of `t^{−α} w(t)` at 0 and ∞.
///
/// Only real weights are supported; the spectral prediction depends on the
/// limits through `|b|²` alone.
#[derive(Clone)]
pub struct WeightSpec {
    pub alpha: Alpha,
    pub b0: f64,
    pub b_inf: f64,
    label: String,
    eval: ScalarFn,
}

impl WeightSpec {
    pub fn new(
        alpha: Alpha,
        label: impl Into<String>,
        b0: f64,
        b_inf: f64,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        WeightSpec {
            alpha,
            b0,
            b_inf,
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    /// `v(t) = t^{−α} w(t)`.
    #[inline]
    pub fn reduced(&self, t: f64) -> f64 {
        t.powf(-self.alpha.value()) * self.eval(t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightSpec")
            .field("label", &self.label)
            .field("alpha", &self.alpha)
            .field("b0", &self.b0)
            .field("b_inf", &self.b_inf)
            .finish()
    }
}

/// Symmetric two-variable kernel `K(s, t)`.
#[derive(Clone)]
pub struct SymmetricKernel {
    label: String,
    eval: BivariateFn,
}

impl SymmetricKernel {
    pub fn new(label: impl Into<String>, eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        SymmetricKernel {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    #[inline]
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        (self.eval)(s, t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Borrowing closure view, for passing to the Nyström assemblers.
    pub fn as_fn(&self) -> impl Fn(f64, f64) -> f64 + Sync + '_ {
        move |s, t| self.eval(s, t)
    }
}

impl fmt::Debug for SymmetricKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymmetricKernel({})", self.label)
    }
}

/// `s^α t^α (s+t)^{−1−2α}`; the Carleman kernel `1/(s+t)` at α = 0.
pub fn kernel_a(alpha: Alpha) -> SymmetricKernel {
    let a = alpha.value();
    let order = alpha.order();
    SymmetricKernel::new(format!("A[alpha={a}]"), move |s, t| {
        (s * t).powf(a) * (s + t).powf(-order)
    })
}

/// `t^α s^α e^{−st} / sqrt(Γ(1+2α))`, the square-root factor of the model operator.
pub fn kernel_l(alpha: Alpha) -> SymmetricKernel {
    let a = alpha.value();
    let norm = 1.0 / specfun::gamma(alpha.order()).expect("1+2alpha > 0").sqrt();
    SymmetricKernel::new(format!("L[alpha={a}]"), move |s, t| {
        norm * (s * t).powf(a) * (-s * t).exp()
    })
}

/// Which of the two model kernels φ₀, φ∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKernel {
    Phi0,
    PhiInf,
}

/// `t^α φ(s+t) s^α` for φ ∈ {φ₀, φ∞}.
pub fn model_hankel_kernel(which: ModelKernel, alpha: Alpha) -> SymmetricKernel {
    let a = alpha.value();
    let (label, phi): (&str, fn(Alpha, f64) -> Result<f64>) = match which {
        ModelKernel::Phi0 => ("phi0", specfun::phi0),
        ModelKernel::PhiInf => ("phi_inf", specfun::phi_inf),
    };
    SymmetricKernel::new(format!("w H({label}) w[alpha={a}]"), move |s, t| {
        (s * t).powf(a) * phi(alpha, s + t).unwrap_or(f64::NAN)
    })
}

/// `w(t) a(t+s) w(s)`.
pub fn weighted_hankel_kernel(a: &KernelSpec, w: &WeightSpec) -> Result<SymmetricKernel> {
    if a.alpha != w.alpha {
        return Err(Error::AlphaMismatch {
            kernel: a.alpha.value(),
            weight: w.alpha.value(),
        });
    }
    let (a, w) = (a.clone(), w.clone());
    let label = format!("w H(a) w[a={}, w={}]", a.label, w.label);
    Ok(SymmetricKernel::new(label, move |s, t| w.eval(t) * a.eval(t + s) * w.eval(s)))
}

/// Asymptotic constants `(a0, a_inf, b0, b_inf)` of a kernel/weight pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub a0: f64,
    pub a_inf: f64,
    pub b0: f64,
    pub b_inf: f64,
}

impl FamilyParams {
    pub const fn new(a0: f64, a_inf: f64, b0: f64, b_inf: f64) -> Self {
        FamilyParams { a0, a_inf, b0, b_inf }
    }

    pub const MODEL: FamilyParams = FamilyParams::new(1.0, 1.0, 1.0, 1.0);
}

/// `a(t) = t^{−1−2α}`.
pub fn power_kernel(alpha: Alpha) -> KernelSpec {
    let order = alpha.order();
    KernelSpec::new(alpha, "power", 1.0, 1.0, 1.0, move |t| t.powf(-order))
}

/// `w(t) = t^α`.
pub fn power_weight(alpha: Alpha) -> WeightSpec {
    let a = alpha.value();
    WeightSpec::new(alpha, "power", 1.0, 1.0, move |t| t.powf(a))
}

/// `a(t) = (a0 + a_inf t) / (t^{1+2α}(1+t))`.
pub fn rational_kernel(alpha: Alpha, a0: f64, a_inf: f64) -> KernelSpec {
    let order = alpha.order();
    KernelSpec::new(alpha, format!("rational({a0},{a_inf})"), a0, a_inf, 1.0, move |t| {
        (a0 + a_inf * t) / (t.powf(order) * (1.0 + t))
    })
}

/// `w(t) = t^α (b0 + b_inf t) / (1+t)`.
pub fn rational_weight(alpha: Alpha, b0: f64, b_inf: f64) -> WeightSpec {
    let a = alpha.value();
    WeightSpec::new(alpha, format!("rational({b0},{b_inf})"), b0, b_inf, move |t| {
        t.powf(a) * (b0 + b_inf * t) / (1.0 + t)
    })
}

/// Kernel/weight pair satisfying every hypothesis with ε = 1; the parameters
/// (1, 1, 1, 1) recover the model operator.
pub fn rational_test_family(alpha: Alpha, p: FamilyParams) -> (KernelSpec, WeightSpec) {
    (
        rational_kernel(alpha, p.a0, p.a_inf),
        rational_weight(alpha, p.b0, p.b_inf),
    )
}

/// `a(t) = t^{−1−2α}(2 + sin ln t)`: bounded but with no limits at 0 or ∞.
/// The nominal constants (2, 2) are what a naive reading would suggest.
pub fn oscillating_kernel(alpha: Alpha) -> KernelSpec {
    let order = alpha.order();
    KernelSpec::new(alpha, "oscillating", 2.0, 2.0, 1.0, move |t| {
        t.powf(-order) * (2.0 + t.ln().sin())
    })
}

/// A built-in kernel/weight selection as written in configuration files.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Power,
    Carleman,
    Oscillating,
    Rational(Vec<f64>),
}

/// Parse `power`, `carleman`, `oscillating` or `rational(x,y[,z,w])`.
pub fn parse_builtin(name: &str) -> Result<Builtin> {
    let name = name.trim();
    match name {
        "power" => return Ok(Builtin::Power),
        "carleman" => return Ok(Builtin::Carleman),
        "oscillating" => return Ok(Builtin::Oscillating),
        _ => {}
    }
    let inner = name
        .strip_prefix("rational(")
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::Config(format!("unknown builtin `{name}`")))?;
    let args = inner
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number `{}` in `{name}`", s.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    if args.len() != 2 && args.len() != 4 {
        return Err(Error::Config(format!("`{name}` needs 2 or 4 arguments")));
    }
    Ok(Builtin::Rational(args))
}

/// Resolve kernel and weight names into specs. A four-argument
/// `rational(a0,ainf,b0,binf)` kernel carries its own weight, in which case
/// `weight` must be `None`.
pub fn resolve_builtins(alpha: Alpha, kernel: &str, weight: Option<&str>) -> Result<(KernelSpec, WeightSpec)> {
    let k = parse_builtin(kernel)?;
    let kernel_spec = match &k {
        Builtin::Power => power_kernel(alpha),
        Builtin::Carleman => {
            if alpha.value() != 0.0 {
                return Err(Error::Config(format!(
                    "the carleman kernel requires alpha = 0, got {}",
                    alpha.value()
                )));
            }
            let mut spec = power_kernel(alpha);
            spec.label = "carleman".into();
            spec
        }
        Builtin::Oscillating => oscillating_kernel(alpha),
        Builtin::Rational(args) if args.len() == 4 => {
            if weight.is_some() {
                return Err(Error::Config(
                    "a four-parameter rational kernel already fixes the weight".into(),
                ));
            }
            let p = FamilyParams::new(args[0], args[1], args[2], args[3]);
            return Ok(rational_test_family(alpha, p));
        }
        Builtin::Rational(args) => rational_kernel(alpha, args[0], args[1]),
    };
    let weight_spec = match parse_builtin(weight.unwrap_or("power"))? {
        Builtin::Power => power_weight(alpha),
        Builtin::Rational(args) if args.len() == 2 => rational_weight(alpha, args[0], args[1]),
        other => return Err(Error::Config(format!("`{other:?}` is not a weight"))),
    };
    Ok((kernel_spec, weight_spec))
}

// ---------------------------------------------------------------------------
// Hypothesis checker

/// Log-step for the central differences in `x = ln t`.
pub const FD_STEP: f64 = 1e-3;
/// Samples are taken at `t = 2^{∓k}` for k in this range.
pub const SAMPLE_EXPONENTS: std::ops::RangeInclusive<i32> = 5..=30;
/// Allowed growth of a sampled sequence towards its limit point.
pub const GROWTH_LIMIT: f64 = 10.0;
/// Nested truncations for the weight integrals.
pub const INTEGRAL_TRUNCATIONS: [f64; 3] = [10.0, 20.0, 40.0];
/// Successive-difference contraction required of the nested integrals.
pub const CAUCHY_CONTRACTION: f64 = 0.8;

/// One sampled condition and its verdict.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub name: String,
    /// (t, value) pairs, ordered from t near 1 towards the limit point.
    pub samples: Vec<(f64, f64)>,
    /// Growth ratio (or contraction ratio for Cauchy checks).
    pub ratio: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub checks: Vec<ConditionCheck>,
    /// Sample points where evaluation returned a non-finite value.
    pub evaluation_failures: Vec<String>,
    pub passed: bool,
}

impl HypothesisReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum End {
    Zero,
    Infinity,
}

impl End {
    fn tag(self) -> &'static str {
        match self {
            End::Zero => "0",
            End::Infinity => "inf",
        }
    }

    fn sample_points(self) -> impl Iterator<Item = f64> {
        SAMPLE_EXPONENTS.map(move |k| match self {
            End::Zero => 2f64.powi(-k),
            End::Infinity => 2f64.powi(k),
        })
    }
}

/// `t^m d^m/dt^m g(t)` from central differences of `g(e^x)` in x.
fn scaled_derivative(g: &dyn Fn(f64) -> f64, t: f64, m: usize) -> f64 {
    let x = t.ln();
    let h = FD_STEP;
    let at = |dx: f64| g((x + dx).exp());
    match m {
        0 => g(t),
        1 => (at(h) - at(-h)) / (2.0 * h),
        2 => {
            let first = (at(h) - at(-h)) / (2.0 * h);
            let second = (at(h) - 2.0 * at(0.0) + at(-h)) / (h * h);
            second - first
        }
        _ => unreachable!("only m <= 2 is checked"),
    }
}

/// Bounded-towards-the-limit verdict. Values within the rounding-noise floor
/// are treated as zero; the sequence passes when its maximum over the samples
/// beyond the first third does not exceed `GROWTH_LIMIT` times the maximum over
/// the first third.
fn growth_verdict(cleaned: &[f64]) -> (f64, bool) {
    let overall = cleaned.iter().cloned().fold(0.0, f64::max);
    if overall == 0.0 {
        return (0.0, true);
    }
    let split = cleaned.len() / 3;
    let head = cleaned[..split].iter().cloned().fold(0.0, f64::max);
    let tail = cleaned[split..].iter().cloned().fold(0.0, f64::max);
    if head == 0.0 {
        return (f64::INFINITY, false);
    }
    let ratio = tail / head;
    (ratio, ratio < GROWTH_LIMIT)
}

fn regularity_check(
    a: &KernelSpec,
    end: End,
    m: usize,
    failures: &mut Vec<String>,
) -> ConditionCheck {
    let order = a.alpha.order();
    let limit = match end {
        End::Zero => a.a0,
        End::Infinity => a.a_inf,
    };
    let g = |t: f64| t.powf(order) * a.eval(t) - limit;
    let scale = a.a0.abs().max(a.a_inf.abs()).max(1.0);
    let mut samples = Vec::new();
    let mut cleaned = Vec::new();
    for t in end.sample_points() {
        let d = scaled_derivative(&g, t, m);
        if !d.is_finite() {
            failures.push(format!("kernel m={m} at t={t:e}: {d}"));
            continue;
        }
        let weight = match end {
            End::Zero => t.powf(-a.epsilon),
            End::Infinity => t.powf(a.epsilon),
        };
        let value = d.abs() * weight;
        let noise = 16.0 * f64::EPSILON * (scale + (g(t) + limit).abs()) / FD_STEP.powi(m as i32) * weight;
        samples.push((t, value));
        cleaned.push((value - noise).max(0.0));
    }
    let (ratio, passed) = growth_verdict(&cleaned);
    ConditionCheck {
        name: format!("kernel_regularity_m{m}_at_{}", end.tag()),
        samples,
        ratio,
        passed,
    }
}

/// The sampled values of `t^{1+2α} a(t)` must settle: their spread over the
/// last six samples must be at most half the spread over the first six (or
/// negligible).
fn limit_check(a: &KernelSpec, end: End, failures: &mut Vec<String>) -> ConditionCheck {
    let order = a.alpha.order();
    let mut samples = Vec::new();
    for t in end.sample_points() {
        let v = t.powf(order) * a.eval(t);
        if v.is_finite() {
            samples.push((t, v));
        } else {
            failures.push(format!("kernel limit at t={t:e}: {v}"));
        }
    }
    let spread = |s: &[(f64, f64)]| {
        let lo = s.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = s.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let (ratio, passed) = if samples.len() < 12 {
        (f64::NAN, false)
    } else {
        let first = spread(&samples[..6]);
        let last = spread(&samples[samples.len() - 6..]);
        let scale = a.a0.abs().max(a.a_inf.abs()).max(1.0);
        if last <= 1e-12 * scale {
            (0.0, true)
        } else {
            let r = last / first;
            (r, r <= 0.5)
        }
    };
    ConditionCheck {
        name: format!("kernel_limit_at_{}", end.tag()),
        samples,
        ratio,
        passed,
    }
}

fn weight_bound_check(w: &WeightSpec, end: End, failures: &mut Vec<String>) -> ConditionCheck {
    let mut samples = Vec::new();
    let mut cleaned = Vec::new();
    for t in end.sample_points() {
        let v = w.reduced(t);
        if v.is_finite() {
            samples.push((t, v.abs()));
            cleaned.push(v.abs());
        } else {
            failures.push(format!("weight at t={t:e}: {v}"));
        }
    }
    let (ratio, passed) = growth_verdict(&cleaned);
    ConditionCheck {
        name: format!("weight_bounded_at_{}", end.tag()),
        samples,
        ratio,
        passed,
    }
}

/// Midpoint rule in `x = ∓ln t` for `∫ | |v|² − |b|² | dt/t` over `x ∈ [0, r]`.
fn weight_deviation_integral(w: &WeightSpec, end: End, r: f64) -> f64 {
    let b = match end {
        End::Zero => w.b0,
        End::Infinity => w.b_inf,
    };
    let h = 0.01;
    let n = (r / h).round() as usize;
    let mut sum = 0.0;
    for k in 0..n {
        let x = (k as f64 + 0.5) * h;
        let t = match end {
            End::Zero => (-x).exp(),
            End::Infinity => x.exp(),
        };
        let v = w.reduced(t);
        let d = (v * v - b * b).abs();
        if d.is_finite() {
            sum += d;
        }
    }
    sum * h
}

fn weight_integral_check(w: &WeightSpec, end: End) -> ConditionCheck {
    let values: Vec<(f64, f64)> = INTEGRAL_TRUNCATIONS
        .iter()
        .map(|&r| (r, weight_deviation_integral(w, end, r)))
        .collect();
    let d1 = (values[1].1 - values[0].1).abs();
    let d2 = (values[2].1 - values[1].1).abs();
    let tiny = 1e-10 * (1.0 + values[2].1.abs());
    let (ratio, passed) = if d2 <= tiny {
        (0.0, true)
    } else {
        let r = d2 / d1;
        (r, r <= CAUCHY_CONTRACTION)
    };
    ConditionCheck {
        name: format!("weight_integral_at_{}", end.tag()),
        samples: values,
        ratio,
        passed,
    }
}

/// Sample the hypotheses on `a` and `w` numerically.
///
/// For the kernel: `t^m |d^m/dt^m (t^{1+2α}a(t) − a0)| t^{−ε}` must stay bounded
/// as `t → 0` for m = 0, 1, 2 (mirrored at ∞ with `a_inf` and `t^{ε}`), and
/// `t^{1+2α}a(t)` must settle. For the weight: `t^{−α}w(t)` must stay bounded
/// and both deviation integrals must converge under nested truncation.
pub fn hypothesis_check(a: &KernelSpec, w: &WeightSpec) -> HypothesisReport {
    let mut failures = Vec::new();
    let mut checks = Vec::new();
    for end in [End::Zero, End::Infinity] {
        checks.push(limit_check(a, end, &mut failures));
        for m in 0..=2 {
            checks.push(regularity_check(a, end, m, &mut failures));
        }
    }
    for end in [End::Zero, End::Infinity] {
        checks.push(weight_bound_check(w, end, &mut failures));
        checks.push(weight_integral_check(w, end));
    }
    if a.alpha != w.alpha {
        failures.push(format!(
            "alpha mismatch: kernel {} vs weight {}",
            a.alpha.value(),
            w.alpha.value()
        ));
    }
    let passed = checks.iter().all(|c| c.passed) && a.alpha == w.alpha;
    HypothesisReport {
        checks,
        evaluation_failures: failures,
        passed,
    }
}

/// `t^{1+2α} g(t)` for `g = a − a0·φ₀ − a∞·φ∞`, the part of the kernel left
/// after the two model Hankel kernels are removed. Vanishes at both ends when
/// the hypotheses hold. Evaluated through the regularised incomplete Gamma
/// functions, so no `t^{±(1+2α)}` factor is ever formed on its own.
pub fn residual_kernel_scaled(a: &KernelSpec, t: f64) -> Result<f64> {
    let s = a.alpha.order();
    let head = t.powf(s) * a.eval(t);
    Ok(head - a.a0 * specfun::reg_gamma_upper(s, t)? - a.a_inf * specfun::reg_gamma_lower(s, t)?)
}

/// `|ζ|` range of the coarsest rectangle is `2^{±1}`; each further level doubles it.
pub const HALF_PLANE_LEVELS: u32 = 3;
const HALF_PLANE_ROWS_PER_OCTAVE: usize = 8;
const HALF_PLANE_DECAY_CUT: f64 = 45.0;

/// 8-point Gauss–Legendre rule on [−1, 1].
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

#[derive(Debug, Clone, Serialize)]
pub struct HalfPlaneRectangle {
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub integral: f64,
}

/// `∬|k̂(x+iy)| dx dy` over nested rectangles `|x| ≤ 2^j, 2^{−j} ≤ y ≤ 2^j`,
/// with `k(t) = t^{2+2α} g(t)` and `g` the residual kernel.
///
/// The improper integral over the whole half-plane cannot be certified from
/// finitely many samples; `increments_decrease` only says that each level
/// added less than the one before. A log-divergent integral adds a roughly
/// constant amount per level.
#[derive(Debug, Clone, Serialize)]
pub struct HalfPlaneDiagnostic {
    pub rectangles: Vec<HalfPlaneRectangle>,
    pub increments: Vec<f64>,
    pub increments_decrease: bool,
}

pub fn half_plane_diagnostic(a: &KernelSpec, levels: u32) -> Result<HalfPlaneDiagnostic> {
    if levels < 2 {
        return Err(Error::domain("half_plane_diagnostic", "need at least two levels"));
    }
    let lv = levels as i32;
    let x_outer = 2f64.powi(lv);
    let y_floor = 2f64.powi(-lv);

    // t quadrature: dyadic panels down to 2^-50, then uniform panels short
    // enough to resolve e^{ixt} for |x| ≤ x_outer
    let t_max = 1.0 + HALF_PLANE_DECAY_CUT / y_floor;
    let panel = (std::f64::consts::PI / (4.0 * x_outer)).min(0.5);
    let mut edges: Vec<f64> = (0..=50).rev().map(|m| 2f64.powi(-m)).collect();
    let uniform = ((t_max - 1.0) / panel).ceil() as usize;
    edges.extend((1..=uniform).map(|k| 1.0 + k as f64 * panel));
    let mut nodes = Vec::with_capacity(8 * edges.len());
    for e in edges.windows(2) {
        let (mid, half) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
        for &(z, w) in &GL8 {
            let t = mid + half * z;
            nodes.push((t, half * w * t * residual_kernel_scaled(a, t)?));
        }
    }

    let rows: Vec<(f64, f64, i32)> = (-lv..lv)
        .flat_map(|oct| {
            let lo = (oct as f64) * std::f64::consts::LN_2;
            let dl = std::f64::consts::LN_2 / HALF_PLANE_ROWS_PER_OCTAVE as f64;
            (0..HALF_PLANE_ROWS_PER_OCTAVE).map(move |r| {
                let y = (lo + (r as f64 + 0.5) * dl).exp();
                (y, y * dl, oct)
            })
        })
        .collect();

    // per row, the integral over |x| ≤ 2^j for j = 1..=levels
    let per_row: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|&(y, dy, _)| {
            let used = nodes.partition_point(|&(t, _)| y * t <= HALF_PLANE_DECAY_CUT + 1.0);
            let nodes = &nodes[..used.max(1)];
            let damped: Vec<(f64, f64)> = nodes.iter().map(|&(t, wk)| (t, wk * (-y * t).exp())).collect();
            let dx = 2f64.powi((y / 4.0).log2().floor() as i32).min(0.25);
            let mut acc = vec![0.0; levels as usize];
            let cells = (x_outer / dx).round() as usize;
            for c in 0..cells {
                let x = (c as f64 + 0.5) * dx;
                let (mut re, mut im) = (0.0, 0.0);
                for &(t, wk) in &damped {
                    let (sn, cs) = (x * t).sin_cos();
                    re += wk * cs;
                    im += wk * sn;
                }
                // |k̂| is even in x for real k
                let contrib = 2.0 * re.hypot(im) * dx * dy;
                let x_hi = (c + 1) as f64 * dx;
                for (j, slot) in acc.iter_mut().enumerate() {
                    if x_hi <= 2f64.powi(j as i32 + 1) * (1.0 + 1e-12) {
                        *slot += contrib;
                    }
                }
            }
            acc
        })
        .collect();

    let mut rectangles = Vec::new();
    for j in 1..=lv {
        let integral = rows
            .iter()
            .zip(&per_row)
            .filter(|((_, _, oct), _)| *oct >= -j && *oct < j)
            .map(|(_, acc)| acc[(j - 1) as usize])
            .sum();
        rectangles.push(HalfPlaneRectangle {
            x_max: 2f64.powi(j),
            y_min: 2f64.powi(-j),
            y_max: 2f64.powi(j),
            integral,
        });
    }
    let increments: Vec<f64> = rectangles.windows(2).map(|w| w[1].integral - w[0].integral).collect();
    let floor = 1e-10 * rectangles.last().map_or(0.0, |r| r.integral).max(1.0);
    let increments_decrease = increments.windows(2).all(|w| w[1] < w[0] || w[1] <= floor);
    Ok(HalfPlaneDiagnostic {
        rectangles,
        increments,
        increments_decrease,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn al(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    #[test]
    fn kernel_a_examples() {
        let k = kernel_a(al(0.0));
        assert!((k.eval(2.0, 3.0) - 0.2).abs() < 1e-16);
        for a in [-0.25, 0.0, 0.5, 1.0] {
            let k = kernel_a(al(a));
            assert!((k.eval(1.0, 1.0) - 2f64.powf(-1.0 - 2.0 * a)).abs() < 1e-15);
        }
        let k = kernel_a(al(1.0));
        assert!((k.eval(2.0, 3.0) - 6.0 / 125.0).abs() < 1e-16);
    }

    #[test]
    fn kernel_l_examples() {
        let k = kernel_l(al(0.0));
        assert!((k.eval(0.7, 1.3) - (-0.91f64).exp()).abs() < 1e-15);
        for a in [-0.25, 0.0, 0.5, 1.0] {
            let want = (-1.0f64).exp() / specfun::gamma(1.0 + 2.0 * a).unwrap().sqrt();
            assert!((kernel_l(al(a)).eval(1.0, 1.0) - want).abs() < 1e-15);
        }
        let v = kernel_l(al(0.5)).eval(2.0, 1.0);
        assert!((v - 2f64.sqrt() * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn weighted_hankel_examples() {
        for a in [-0.25, 0.0, 0.5, 1.0] {
            let alpha = al(a);
            let wh = weighted_hankel_kernel(&power_kernel(alpha), &power_weight(alpha)).unwrap();
            let (fa, fw) = rational_test_family(alpha, FamilyParams::MODEL);
            let wr = weighted_hankel_kernel(&fa, &fw).unwrap();
            let ka = kernel_a(alpha);
            for &(s, t) in &[(0.1, 0.2), (1.0, 1.0), (3.0, 0.01), (50.0, 7.0)] {
                let want = ka.eval(s, t);
                assert!((wh.eval(s, t) - want).abs() <= 1e-14 * want);
                assert!((wr.eval(s, t) - want).abs() <= 1e-14 * want);
            }
        }
        let zero = KernelSpec::new(al(0.0), "zero", 0.0, 0.0, 1.0, |_| 0.0);
        let k = weighted_hankel_kernel(&zero, &power_weight(al(0.0))).unwrap();
        assert_eq!(k.eval(0.3, 2.0), 0.0);

        let (fa, fw) = rational_test_family(al(0.0), FamilyParams::new(1.0, 2.0, 1.0, 1.0));
        let k = weighted_hankel_kernel(&fa, &fw).unwrap();
        assert!((k.eval(1.0, 1.0) - 5.0 / 6.0).abs() < 1e-15);

        assert!(matches!(
            weighted_hankel_kernel(&power_kernel(al(0.0)), &power_weight(al(0.5))),
            Err(Error::AlphaMismatch { .. })
        ));
    }

    #[test]
    fn builtin_kernels_are_symmetric() {
        let alpha = al(0.3);
        let (fa, fw) = rational_test_family(alpha, FamilyParams::new(2.0, -1.0, 1.0, 2.0));
        let kernels = [
            kernel_a(alpha),
            kernel_l(alpha),
            model_hankel_kernel(ModelKernel::Phi0, alpha),
            model_hankel_kernel(ModelKernel::PhiInf, alpha),
            weighted_hankel_kernel(&fa, &fw).unwrap(),
        ];
        for k in &kernels {
            for &(s, t) in &[(0.1, 0.2), (3.0, 0.01), (50.0, 7.0)] {
                assert_eq!(k.eval(s, t), k.eval(t, s), "{}", k.label());
            }
        }
    }

    #[test]
    fn rational_family_recovers_power() {
        let alpha = al(0.5);
        let (fa, fw) = rational_test_family(alpha, FamilyParams::MODEL);
        for t in [1e-3, 0.5, 1.0, 7.0, 1e3] {
            assert!((fa.eval(t) - t.powf(-2.0)).abs() <= 1e-14 * t.powf(-2.0));
            assert!((fw.eval(t) - t.sqrt()).abs() <= 1e-14 * t.sqrt());
        }
    }

    #[test]
    fn rational_family_passes_hypotheses() {
        let vals_a = [0.0, 1.0, -1.0, 2.0];
        let vals_b = [0.0, 1.0, 2.0];
        for a in [-0.25, 0.0, 0.5, 1.0] {
            for &a0 in &vals_a {
                for &ai in &vals_a {
                    for &b0 in &vals_b {
                        for &bi in &vals_b {
                            let p = FamilyParams::new(a0, ai, b0, bi);
                            let (fa, fw) = rational_test_family(al(a), p);
                            let rep = hypothesis_check(&fa, &fw);
                            let bad: Vec<_> = rep.failed_checks().map(|c| (&c.name, c.ratio)).collect();
                            assert!(rep.passed, "alpha={a} {p:?}: {bad:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn exact_power_pair_has_zero_deviation() {
        let alpha = al(0.0);
        let rep = hypothesis_check(&power_kernel(alpha), &power_weight(alpha));
        assert!(rep.passed);
        for c in rep.checks.iter().filter(|c| c.name.starts_with("kernel_regularity")) {
            // everything sits under the rounding-noise floor
            assert_eq!(c.ratio, 0.0, "{}", c.name);
        }
    }

    #[test]
    fn oscillating_kernel_fails() {
        for a in [0.0, 0.5] {
            let alpha = al(a);
            let rep = hypothesis_check(&oscillating_kernel(alpha), &power_weight(alpha));
            assert!(!rep.passed);
            let failed: Vec<_> = rep.failed_checks().map(|c| c.name.clone()).collect();
            assert!(failed.contains(&"kernel_limit_at_0".to_string()), "{failed:?}");
            assert!(failed.contains(&"kernel_limit_at_inf".to_string()));
            assert!(failed.contains(&"kernel_regularity_m0_at_0".to_string()));
        }
    }

    #[test]
    fn slowly_converging_weight_fails_integral_condition() {
        let alpha = al(0.0);
        // |v|² − 1 ~ 2/sqrt(|ln t|): ∫ dt/t diverges like sqrt(R)
        let w = WeightSpec::new(alpha, "slow", 1.0, 1.0, |t: f64| 1.0 + 1.0 / (1.0 + t.ln().abs()).sqrt());
        let rep = hypothesis_check(&power_kernel(alpha), &w);
        let failed: Vec<_> = rep.failed_checks().map(|c| c.name.clone()).collect();
        assert!(failed.contains(&"weight_integral_at_0".to_string()), "{failed:?}");
        assert!(failed.contains(&"weight_integral_at_inf".to_string()));
    }

    #[test]
    fn wrong_epsilon_is_detected() {
        // deviation ~ t^{1/2} at 0 cannot satisfy an ε = 1 claim
        let alpha = al(0.0);
        let a = KernelSpec::new(alpha, "sqrt-dev", 1.0, 1.0, 1.0, |t: f64| (1.0 + t.sqrt() / (1.0 + t)) / t);
        let rep = hypothesis_check(&a, &power_weight(alpha));
        assert!(rep.failed_checks().any(|c| c.name == "kernel_regularity_m0_at_0"));
        let honest = KernelSpec { epsilon: 0.5, ..a };
        let rep = hypothesis_check(&honest, &power_weight(alpha));
        assert!(rep.passed, "{:?}", rep.failed_checks().map(|c| &c.name).collect::<Vec<_>>());
    }

    #[test]
    fn builtin_parsing() {
        assert_eq!(parse_builtin("power").unwrap(), Builtin::Power);
        assert_eq!(parse_builtin(" carleman ").unwrap(), Builtin::Carleman);
        assert_eq!(
            parse_builtin("rational(1, -1, 1, 2)").unwrap(),
            Builtin::Rational(vec![1.0, -1.0, 1.0, 2.0])
        );
        assert!(parse_builtin("rational(1)").is_err());
        assert!(parse_builtin("rational(1,x)").is_err());
        assert!(parse_builtin("gaussian").is_err());

        let alpha = al(0.0);
        let (k, w) = resolve_builtins(alpha, "rational(1,0,1,1)", None).unwrap();
        assert_eq!((k.a0, k.a_inf, w.b0, w.b_inf), (1.0, 0.0, 1.0, 1.0));
        assert!(resolve_builtins(alpha, "rational(1,0,1,1)", Some("power")).is_err());
        let (k, w) = resolve_builtins(alpha, "rational(2,1)", Some("rational(1,2)")).unwrap();
        assert_eq!((k.a0, k.a_inf, w.b0, w.b_inf), (2.0, 1.0, 1.0, 2.0));
        assert!(resolve_builtins(al(0.5), "carleman", None).is_err());
        assert_eq!(resolve_builtins(alpha, "carleman", None).unwrap().0.label(), "carleman");
        assert!(resolve_builtins(alpha, "power", Some("carleman")).is_err());
    }

    #[test]
    fn half_plane_integral_on_rectangles() {
        let model = half_plane_diagnostic(&power_kernel(al(0.0)), 3).unwrap();
        assert!(model.rectangles.iter().all(|r| r.integral.abs() < 1e-8), "{model:?}");

        for alpha in [0.0, 0.5, -0.25] {
            let d = half_plane_diagnostic(&rational_kernel(al(alpha), 2.0, 1.0), 3).unwrap();
            assert!(d.increments_decrease, "{alpha}: {d:?}");
            assert!(d.rectangles.windows(2).all(|w| w[1].integral >= w[0].integral));
        }

        // t^{1+2α} g = sin ln t: k̂ ~ |ζ|^{-2} near the origin, log divergent
        let d = half_plane_diagnostic(&oscillating_kernel(al(0.0)), 3).unwrap();
        assert!(!d.increments_decrease, "{d:?}");
    }
}
