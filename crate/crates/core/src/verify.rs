//! The verification suite: every identity and spectral statement of the model
//! argument, run along a refinement ladder of grids.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{
    assemble_a, assemble_l, assemble_model_hankel, assemble_wha, compose_padded, compose_through_mask,
    log_pushforward_hankel, masks, multiply, project, transform_block, Intermediate, ProjectionMask, Side,
};
use crate::error::{Error, Result};
use crate::kernels::{self, hypothesis_check, rational_test_family, FamilyParams, ModelKernel};
use crate::linalg::{
    frobenius_norm, nuclear_norm, op_norm, singular_values, sym_eigenvalues, symmetrised, Matrix,
};
use crate::quadrature::{make_grid, quad_integral, Grid, OperatorMatrix};
use crate::spectra::{analyze, counting_compare, predict, schatten_diagnostic, sup_discrepancy, SchattenVerdict};
use crate::specfun::{pi_alpha, Alpha};

/// One rung of a refinement ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridStep {
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl GridStep {
    pub const fn new(r: f64, n: usize) -> Self {
        GridStep { r, n }
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(make_grid(self.r, self.n)?))
    }
}

impl fmt::Display for GridStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.r, self.n)
    }
}

pub const DEFAULT_LADDER: [GridStep; 3] = [GridStep::new(6.0, 200), GridStep::new(8.0, 400), GridStep::new(10.0, 800)];

/// The test families of the desk runs.
pub const DEFAULT_FAMILIES: [FamilyParams; 5] = [
    FamilyParams::new(1.0, 1.0, 1.0, 1.0),
    FamilyParams::new(1.0, 0.0, 1.0, 1.0),
    FamilyParams::new(0.0, 1.0, 1.0, 1.0),
    FamilyParams::new(1.0, -1.0, 1.0, 1.0),
    FamilyParams::new(2.0, 1.0, 1.0, 2.0),
];

/// Half-width added to the intermediate variable of padded compositions, for
/// 1+2α ≥ 1.
pub const COMPOSITION_PAD: f64 = 16.0;

/// The cut-off part of `∫ L(s,u)L(u,t) du` near u = 0 contributes about
/// `h·e^{−(1+2α)·pad}` to a matrix entry, whatever R is; the pad is widened
/// for 1+2α < 1 to keep that below `h·e^{−16}`.
pub fn composition_pad(alpha: Alpha) -> f64 {
    COMPOSITION_PAD / alpha.order().min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CheckId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
}

impl CheckId {
    pub const ALL: [CheckId; 8] = [
        CheckId::C1,
        CheckId::C2,
        CheckId::C3,
        CheckId::C4,
        CheckId::C5,
        CheckId::C6,
        CheckId::C7,
        CheckId::C8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckId::C1 => "C1_factorisation",
            CheckId::C2 => "C2_block_similarity",
            CheckId::C3 => "C3_split_kernels",
            CheckId::C4 => "C4_hilbert_schmidt",
            CheckId::C5 => "C5_pushforward_equivalence",
            CheckId::C6 => "C6_schatten",
            CheckId::C7 => "C7_decomposition",
            CheckId::C8 => "C8_spectra",
        }
    }

    pub fn anchor(self) -> &'static str {
        match self {
            CheckId::C1 => "factorisation A_alpha = L_alpha^2 by direct kernel calculation",
            CheckId::C2 => "inversion U f(t) = f(1/t)/t is unitary, commutes with A_alpha and swaps the half-line blocks",
            CheckId::C3 => "phi0 + phi_inf = t^(-1-2alpha) and L 1_inf L = w H(phi0) w, L 1_0 L = w H(phi_inf) w",
            CheckId::C4 => "u L_alpha is Hilbert-Schmidt iff the integral of |u|^2/t is finite, with norm^2 = 2^(-1-2alpha) times it",
            CheckId::C5 => "U_+ 1_inf L 1_inf U_+* = H(psi_+) and U_- 1_0 L 1_0 U_-* = H(psi_-)",
            CheckId::C6 => "diagonal L blocks are in every Schatten class; cross blocks of A are trace class",
            CheckId::C7 => "w H(a) w = a0 v 1_0 L 1_inf L 1_0 v + a_inf v 1_inf L 1_0 L 1_inf v + trace class",
            CheckId::C8 => "a.c. spectrum of w H(a) w is [0, pi_alpha a0 b0^2] union [0, pi_alpha a_inf b_inf^2]",
        }
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        CheckId::ALL
            .into_iter()
            .find(|c| {
                let name = c.name().to_ascii_lowercase();
                key == name || key == name[..2] || key == name[3..]
            })
            .ok_or_else(|| Error::Config(format!("unknown check `{s}`")))
    }
}

/// Pass rule applied to a metric series along the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    AtMost { cap: f64 },
    AtLeast { floor: f64 },
    StrictlyDecreasing,
    NonIncreasing,
    StrictlyIncreasing,
    /// No step may exceed the previous one by more than the given fraction.
    BoundedGrowth { max_increase: f64 },
    /// Last value at most the first.
    NetDecrease,
    /// Only the value at the finest grid is capped.
    FinalAtMost { cap: f64 },
}

impl Rule {
    fn holds(&self, v: &[f64]) -> bool {
        if v.iter().any(|x| !x.is_finite()) {
            return false;
        }
        let pairs = || v.windows(2).map(|w| (w[0], w[1]));
        match *self {
            Rule::AtMost { cap } => v.iter().all(|&x| x <= cap),
            Rule::AtLeast { floor } => v.iter().all(|&x| x >= floor),
            Rule::StrictlyDecreasing => pairs().all(|(a, b)| b < a),
            Rule::NonIncreasing => pairs().all(|(a, b)| b <= a),
            Rule::StrictlyIncreasing => pairs().all(|(a, b)| b > a),
            Rule::BoundedGrowth { max_increase } => pairs().all(|(a, b)| b <= a * (1.0 + max_increase)),
            Rule::NetDecrease => v.last().zip(v.first()).map_or(true, |(l, f)| l <= f),
            Rule::FinalAtMost { cap } => v.last().map_or(true, |&l| l <= cap),
        }
    }
}

/// Values of one metric at each ladder step, with the rules it must satisfy.
/// A series without rules is informational.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub name: String,
    pub values: Vec<f64>,
    pub rules: Vec<Rule>,
    pub passed: bool,
}

impl MetricSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>, rules: Vec<Rule>) -> Self {
        let passed = rules.iter().all(|r| r.holds(&values));
        MetricSeries {
            name: name.into(),
            values,
            rules,
            passed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub grids: Vec<GridStep>,
    pub metrics: Vec<MetricSeries>,
    pub notes: Vec<String>,
    pub error: Option<String>,
    pub verdict: Verdict,
}

impl CheckRecord {
    pub fn metric(&self, name: &str) -> Option<&MetricSeries> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub alpha: f64,
    pub checks: Vec<CheckRecord>,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn check(&self, id: CheckId) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == id.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub alpha: Alpha,
    pub ladder: Vec<GridStep>,
    pub checks: Vec<CheckId>,
    pub families: Vec<FamilyParams>,
    /// δ as a fraction of the largest predicted endpoint.
    pub delta_fraction: f64,
    /// Interior margin as a fraction of the largest predicted endpoint.
    pub margin_fraction: f64,
}

impl SuiteConfig {
    pub fn new(alpha: Alpha) -> Self {
        SuiteConfig {
            alpha,
            ladder: DEFAULT_LADDER.to_vec(),
            checks: CheckId::ALL.to_vec(),
            families: DEFAULT_FAMILIES.to_vec(),
            delta_fraction: 0.05,
            margin_fraction: 0.1,
        }
    }

    pub fn with_ladder(mut self, ladder: Vec<GridStep>) -> Self {
        self.ladder = ladder;
        self
    }

    pub fn with_checks(mut self, checks: Vec<CheckId>) -> Self {
        self.checks = checks;
        self
    }

    pub fn with_families(mut self, families: Vec<FamilyParams>) -> Self {
        self.families = families;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.ladder.is_empty() {
            return Err(Error::Config("ladder must not be empty".into()));
        }
        for s in &self.ladder {
            make_grid(s.r, s.n)?;
        }
        if self.ladder.windows(2).any(|w| w[1].r < w[0].r || w[1].n <= w[0].n) {
            return Err(Error::Config("ladder must increase in R and N".into()));
        }
        if !(self.delta_fraction > 0.0) || !(self.margin_fraction > 0.0) {
            return Err(Error::Config("delta and margin fractions must be positive".into()));
        }
        if self.checks.is_empty() {
            return Err(Error::Config("no checks selected".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// calibrated thresholds

/// Exact identities (similarities, pointwise kernel splits).
pub const EXACT_TOL: f64 = 1e-11;
/// Cap on the truncated `‖L² − A‖/‖A‖`; see `check_factorisation`.
pub const FACTORISATION_CAP: f64 = 0.5;
/// Cap on the padded `‖L² − A‖/‖A‖`.
pub const PADDED_FACTORISATION_CAP: f64 = 1e-2;
pub const HS_REL_TOL: f64 = 0.02;
pub const PUSHFORWARD_EIG_TOL: f64 = 1e-6;
pub const PUSHFORWARD_ENTRY_TOL: f64 = 1e-12;
pub const SCHATTEN_RATIO_CAP: f64 = 1e-6;
pub const NUCLEAR_GROWTH: f64 = 0.10;
pub const COUNTING_DISCREPANCY_CAP: f64 = 8.0;

fn rel_op(a: &Matrix, b: &Matrix) -> Result<f64> {
    Ok(op_norm(&a.sub(b)?)? / op_norm(b)?)
}

fn sorted_eigs(m: &Matrix) -> Result<Vec<f64>> {
    sym_eigenvalues(&symmetrised(m))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Collects one value per ladder step for each named series.
struct Collector {
    names: Vec<String>,
    values: Vec<Vec<f64>>,
    rules: Vec<Vec<Rule>>,
}

impl Collector {
    fn new() -> Self {
        Collector {
            names: vec![],
            values: vec![],
            rules: vec![],
        }
    }

    fn push(&mut self, name: &str, value: f64, rules: &[Rule]) {
        match self.names.iter().position(|n| n == name) {
            Some(k) => self.values[k].push(value),
            None => {
                self.names.push(name.to_string());
                self.values.push(vec![value]);
                self.rules.push(rules.to_vec());
            }
        }
    }

    fn finish(self) -> Vec<MetricSeries> {
        self.names
            .into_iter()
            .zip(self.values)
            .zip(self.rules)
            .map(|((n, v), r)| MetricSeries::new(n, v, r))
            .collect()
    }
}

struct Outcome {
    metrics: Vec<MetricSeries>,
    notes: Vec<String>,
}

fn run_check(id: CheckId, cfg: &SuiteConfig) -> CheckRecord {
    let result = match id {
        CheckId::C1 => check_factorisation(cfg),
        CheckId::C2 => check_block_similarity(cfg),
        CheckId::C3 => check_split(cfg),
        CheckId::C4 => check_hilbert_schmidt(cfg),
        CheckId::C5 => check_pushforward(cfg),
        CheckId::C6 => check_schatten(cfg),
        CheckId::C7 => check_decomposition(cfg),
        CheckId::C8 => check_spectra(cfg),
    };
    let (metrics, notes, error) = match result {
        Ok(o) => (o.metrics, o.notes, None),
        Err(e) => (vec![], vec![], Some(e.to_string())),
    };
    let ok = error.is_none() && metrics.iter().all(|m| m.passed);
    CheckRecord {
        name: id.name().to_string(),
        anchor: id.anchor().to_string(),
        grids: cfg.ladder.clone(),
        metrics,
        notes,
        error,
        verdict: Verdict::from_bool(ok),
    }
}

/// Run the selected checks. Checks run concurrently; records are ordered by
/// check name, so the report is identical from run to run.
pub fn run_suite(cfg: &SuiteConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    let mut ids = cfg.checks.clone();
    ids.sort();
    ids.dedup();
    let mut checks: Vec<CheckRecord> = ids.par_iter().map(|&id| run_check(id, cfg)).collect();
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let verdict = Verdict::from_bool(checks.iter().all(|c| c.verdict.is_pass()));
    Ok(VerificationReport {
        alpha: cfg.alpha.value(),
        checks,
        verdict,
    })
}

// ---------------------------------------------------------------------------
// individual checks

/// `‖L² − A‖/‖A‖` with the intermediate variable truncated to the outer
/// window, and with it padded by `composition_pad`. The truncated residual is
/// dominated by the part of `∫ L(s,u)L(u,t) du` outside `[e^{−R}, e^R]`,
/// which for homogeneous kernels does not shrink with R; only its decrease is
/// asserted, under a calibrated cap. The padded residual isolates the
/// quadrature error of the identity itself.
fn check_factorisation(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut c = Collector::new();
    let l_kernel = kernels::kernel_l(cfg.alpha);
    for step in &cfg.ladder {
        let g = step.grid()?;
        let a = assemble_a(cfg.alpha, &g)?;
        let l = assemble_l(cfg.alpha, &g)?;
        let l2 = l.entries().matmul(l.entries())?;
        c.push(
            "residual_truncated",
            rel_op(&l2, a.entries())?,
            &[Rule::StrictlyDecreasing, Rule::AtMost { cap: FACTORISATION_CAP }],
        );
        let padded = compose_padded(&l_kernel, &l_kernel, &g, composition_pad(cfg.alpha), Intermediate::All)?;
        c.push(
            "residual_padded",
            rel_op(padded.entries(), a.entries())?,
            &[Rule::AtMost {
                cap: PADDED_FACTORISATION_CAP,
            }],
        );
    }
    Ok(Outcome {
        metrics: c.finish(),
        notes: vec![],
    })
}

fn check_block_similarity(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut c = Collector::new();
    for step in &cfg.ladder {
        let g = step.grid()?;
        let a = assemble_a(cfg.alpha, &g)?;
        let (z, i) = masks(&g);
        let e0 = sorted_eigs(project(&a, &z, &z)?.entries())?;
        let ei = sorted_eigs(project(&a, &i, &i)?.entries())?;
        let scale = op_norm(a.entries())?;
        c.push(
            "block_eigenvalue_difference",
            max_abs_diff(&e0, &ei) / scale,
            &[Rule::AtMost { cap: EXACT_TOL }],
        );
    }
    Ok(Outcome {
        metrics: c.finish(),
        notes: vec![],
    })
}

fn check_split(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut c = Collector::new();
    let l_kernel = kernels::kernel_l(cfg.alpha);
    for step in &cfg.ladder {
        let g = step.grid()?;
        let a = assemble_a(cfg.alpha, &g)?;
        let l = assemble_l(cfg.alpha, &g)?;
        let (z, i) = masks(&g);
        let p0 = assemble_model_hankel(ModelKernel::Phi0, cfg.alpha, &g)?;
        let pi = assemble_model_hankel(ModelKernel::PhiInf, cfg.alpha, &g)?;
        let split = p0.entries().add(pi.entries())?.sub(a.entries())?.max_abs() / a.entries().max_abs();
        c.push("split_entrywise", split, &[Rule::AtMost { cap: EXACT_TOL }]);

        for (side, model, name) in [(&i, &p0, "phi0"), (&z, &pi, "phi_inf")] {
            let comp = compose_through_mask(&l, side, &l)?;
            let resid = op_norm(&model.entries().sub(comp.entries())?)?;
            c.push(&format!("composition_{name}_truncated"), resid, &[]);
            let padded = compose_padded(&l_kernel, &l_kernel, &g, composition_pad(cfg.alpha), Intermediate::Only(side.side()))?;
            let resid = op_norm(&model.entries().sub(padded.entries())?)?;
            c.push(&format!("composition_{name}_padded"), resid, &[Rule::StrictlyDecreasing]);
        }
    }
    Ok(Outcome {
        metrics: c.finish(),
        notes: vec!["truncated compositions are informational: the intermediate variable is cut to the outer window".into()],
    })
}

/// Test functions for the Hilbert–Schmidt identity.
pub fn hs_battery() -> Vec<(&'static str, fn(f64) -> f64)> {
    vec![
        ("indicator_1_e", |t| if (1.0..=std::f64::consts::E).contains(&t) { 1.0 } else { 0.0 }),
        ("gaussian_log_bump", |t| (-t.ln().powi(2)).exp()),
        ("t_exp_minus_t", |t| t * (-t).exp()),
    ]
}

/// `‖u L_α‖²_F` and `2^{−1−2α} Σ w_i |u(t_i)|²/t_i` on one grid.
pub fn hs_pair(alpha: Alpha, u: impl Fn(f64) -> f64, grid: &Arc<Grid>) -> Result<(f64, f64)> {
    let l = assemble_l(alpha, grid)?;
    let ul = multiply(&l, &u, |_| 1.0)?;
    let lhs = frobenius_norm(ul.entries()).powi(2);
    let rhs = 2f64.powf(-alpha.order()) * quad_integral(|t| u(t).powi(2) / t, grid)?;
    Ok((lhs, rhs))
}

fn check_hilbert_schmidt(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut c = Collector::new();
    for step in &cfg.ladder {
        let g = step.grid()?;
        for (name, u) in hs_battery() {
            let (lhs, rhs) = hs_pair(cfg.alpha, u, &g)?;
            c.push(&format!("{name}_relative_error"), (lhs - rhs).abs() / rhs, &[
                Rule::FinalAtMost { cap: HS_REL_TOL },
                Rule::NetDecrease,
            ]);
        }
        let l = assemble_l(cfg.alpha, &g)?;
        let norm = frobenius_norm(l.entries());
        c.push("constant_u_frobenius", norm, &[Rule::StrictlyIncreasing]);
    }
    Ok(Outcome {
        metrics: c.finish(),
        notes: vec![
            "u = 1 is the divergence witness: its norm must grow with R".into(),
            "the window error is of order e^(-(1+2alpha)R), so only the finest grid is capped".into(),
        ],
    })
}

fn check_pushforward(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut c = Collector::new();
    for step in &cfg.ladder {
        let g = step.grid()?;
        let l = assemble_l(cfg.alpha, &g)?;
        for side in [Side::Infinity, Side::Zero] {
            let m = ProjectionMask::new(&g, side);
            let block = project(&l, &m, &m)?;
            let direct = log_pushforward_hankel(side, cfg.alpha, &g)?;
            let moved = transform_block(&block, side)?;
            let entry = moved.entries().sub(direct.entries())?.max_abs() / direct.entries().max_abs();
            c.push(&format!("entrywise_{}", side.tag()), entry, &[Rule::AtMost { cap: PUSHFORWARD_ENTRY_TOL }]);
            let d = max_abs_diff(&sorted_eigs(block.entries())?, &sorted_eigs(direct.entries())?);
            c.push(&format!("eigenvalues_{}", side.tag()), d, &[Rule::AtMost { cap: PUSHFORWARD_EIG_TOL }]);
        }
    }
    Ok(Outcome {
        metrics: c.finish(),
        notes: vec![],
    })
}

fn super_flag(v: SchattenVerdict) -> f64 {
    if v == SchattenVerdict::SuperPolynomial {
        1.0
    } else {
        0.0
    }
}

fn check_schatten(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut c = Collector::new();
    for step in &cfg.ladder {
        let g = step.grid()?;
        let l = assemble_l(cfg.alpha, &g)?;
        let a = assemble_a(cfg.alpha, &g)?;
        let (z, i) = masks(&g);
        // the frozen ratio cap belongs to the 1_0 block; on the other side the
        // ratio is reported only
        for (m, tag, capped) in [(&z, "L_00", true), (&i, "L_inf_inf", false)] {
            let sv = singular_values(project(&l, m, m)?.entries())?;
            let rec = schatten_diagnostic(&sv.values, sv.floor)?;
            let cap = [Rule::AtMost {
                cap: SCHATTEN_RATIO_CAP,
            }];
            let ratio = sv.values[9.min(sv.values.len() - 1)] / sv.values[0];
            c.push(&format!("{tag}_sigma10_over_sigma1"), ratio, if capped { &cap } else { &[] });
            c.push(&format!("{tag}_super_polynomial"), super_flag(rec.verdict), &[Rule::AtLeast { floor: 1.0 }]);
        }
        let cross = project(&a, &z, &i)?;
        let sv = singular_values(cross.entries())?;
        c.push("A_0_inf_nuclear", sv.values.iter().sum(), &[Rule::BoundedGrowth {
            max_increase: NUCLEAR_GROWTH,
        }]);
        let rec = schatten_diagnostic(&sv.values, sv.floor)?;
        let summable = !matches!(rec.verdict, SchattenVerdict::NonSummableSuspect | SchattenVerdict::InsufficientData);
        c.push("A_0_inf_summable", if summable { 1.0 } else { 0.0 }, &[Rule::AtLeast { floor: 1.0 }]);
    }
    Ok(Outcome {
        metrics: c.finish(),
        notes: vec![],
    })
}

pub fn family_tag(p: &FamilyParams) -> String {
    format!("({},{},{},{})", p.a0, p.a_inf, p.b0, p.b_inf)
}

/// Embed a square block back into an N×N zero matrix.
fn embed(block: &OperatorMatrix) -> Matrix {
    let n = block.grid().len();
    let mut m = Matrix::zeros(n, n);
    for (p, &i) in block.row_indices().iter().enumerate() {
        for (q, &j) in block.col_indices().iter().enumerate() {
            m[(i, j)] = block.entries()[(p, q)];
        }
    }
    m
}

/// The residual `T` of the decomposition, at matrix level:
/// `W − a0·v 1_0 H_φ0 1_0 v − a_inf·v 1_∞ H_φ∞ 1_∞ v`, where `H_φ` are the model
/// operators `L 1 L` and `v = t^{−α} w`.
pub fn decomposition_residual(
    alpha: Alpha,
    family: FamilyParams,
    grid: &Arc<Grid>,
    phi0: &OperatorMatrix,
    phi_inf: &OperatorMatrix,
) -> Result<Matrix> {
    let (ka, kw) = rational_test_family(alpha, family);
    let w = assemble_wha(&ka, &kw, grid)?;
    let (z, i) = masks(grid);
    let v = |t: f64| kw.reduced(t);
    let b0 = multiply(&project(phi0, &z, &z)?, v, v)?;
    let bi = multiply(&project(phi_inf, &i, &i)?, v, v)?;
    let t = w
        .entries()
        .sub(&embed(&b0).scale(family.a0))?
        .sub(&embed(&bi).scale(family.a_inf))?;
    Ok(symmetrised(&t))
}

fn check_decomposition(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut c = Collector::new();
    let mut notes = vec![];
    for p in &cfg.families {
        let (ka, kw) = rational_test_family(cfg.alpha, *p);
        if !hypothesis_check(&ka, &kw).passed {
            notes.push(format!("family {} fails the hypothesis check", family_tag(p)));
        }
        let d = kernels::half_plane_diagnostic(&ka, kernels::HALF_PLANE_LEVELS)?;
        let integrals: Vec<String> = d.rectangles.iter().map(|r| format!("{:.6e}", r.integral)).collect();
        notes.push(format!(
            "family {}: integral of |k^| over nested rectangles [{}], increments decreasing: {}",
            family_tag(p),
            integrals.join(", "),
            d.increments_decrease
        ));
    }
    for step in &cfg.ladder {
        let g = step.grid()?;
        let phi0 = assemble_model_hankel(ModelKernel::Phi0, cfg.alpha, &g)?;
        let phi_inf = assemble_model_hankel(ModelKernel::PhiInf, cfg.alpha, &g)?;
        for p in &cfg.families {
            let t = decomposition_residual(cfg.alpha, *p, &g, &phi0, &phi_inf)?;
            c.push(&format!("T_nuclear{}", family_tag(p)), nuclear_norm(&t)?, &[Rule::BoundedGrowth {
                max_increase: NUCLEAR_GROWTH,
            }]);
        }
    }
    Ok(Outcome {
        metrics: c.finish(),
        notes,
    })
}

/// Outlier count, fill gap and Hausdorff distance of one spectrum against a
/// prediction, each divided by the prediction scale where relevant.
fn spectral_metrics(
    c: &mut Collector,
    tag: &str,
    eigs: &[f64],
    predicted: &crate::spectra::PredictedSpectrum,
    cfg: &SuiteConfig,
    strict: bool,
) -> Result<()> {
    let scale = if predicted.scale() > 0.0 { predicted.scale() } else { 1.0 };
    let r = analyze(eigs, predicted, cfg.delta_fraction * scale, cfg.margin_fraction * scale)?;
    let hausdorff_rules: &[Rule] = if strict { &[Rule::NetDecrease] } else { &[] };
    let outlier_rules: &[Rule] = if strict {
        &[Rule::AtMost { cap: 0.0 }]
    } else {
        &[Rule::NonIncreasing]
    };
    c.push(&format!("{tag}_outliers"), r.outliers.len() as f64, outlier_rules);
    c.push(&format!("{tag}_fill_max_gap"), r.fill_max_gap, &[]);
    c.push(&format!("{tag}_hausdorff"), r.hausdorff, hausdorff_rules);
    Ok(())
}

fn check_spectra(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut c = Collector::new();
    let alpha = cfg.alpha;
    let pa = pi_alpha(alpha);
    let model = predict(alpha, FamilyParams::MODEL);
    let single = crate::spectra::PredictedSpectrum {
        intervals: vec![crate::spectra::PredictedInterval {
            lo: 0.0,
            hi: pa,
            multiplicity: 1,
            origin: crate::spectra::Origin::ZeroEnd,
        }],
    };
    for step in &cfg.ladder {
        let g = step.grid()?;
        let (z, i) = masks(&g);
        let a = assemble_a(alpha, &g)?;
        let full = sorted_eigs(a.entries())?;
        spectral_metrics(&mut c, "A", &full, &model, cfg, true)?;
        c.push("A_top_eigenvalue_over_pi_alpha", full[full.len() - 1] / pa, &[Rule::AtMost { cap: 1.0 }]);

        // counting additivity of the two diagonal blocks
        let e0 = sorted_eigs(project(&a, &z, &z)?.entries())?;
        let ei = sorted_eigs(project(&a, &i, &i)?.entries())?;
        let lambdas: Vec<f64> = (0..=25).map(|k| pa * (0.3 + 2.5 * k as f64 / 25.0) / std::f64::consts::PI).collect();
        let rows = counting_compare(&full, &e0, &ei, &lambdas);
        c.push("A_counting_sup_discrepancy", sup_discrepancy(&rows) as f64, &[Rule::AtMost {
            cap: COUNTING_DISCREPANCY_CAP,
        }]);

        // the two model blocks 1_0 L 1_inf L 1_0 and 1_inf L 1_0 L 1_inf
        let phi0 = assemble_model_hankel(ModelKernel::Phi0, alpha, &g)?;
        let phi_inf = assemble_model_hankel(ModelKernel::PhiInf, alpha, &g)?;
        let m0 = project(&phi0, &z, &z)?;
        let mi = project(&phi_inf, &i, &i)?;
        spectral_metrics(&mut c, "block_0", &sorted_eigs(m0.entries())?, &single, cfg, true)?;
        spectral_metrics(&mut c, "block_inf", &sorted_eigs(mi.entries())?, &single, cfg, true)?;

        for p in &cfg.families {
            let tag = family_tag(p);
            let (ka, kw) = rational_test_family(alpha, *p);
            let v = |t: f64| kw.reduced(t);
            let vb0 = multiply(&m0, v, v)?;
            let vbi = multiply(&mi, v, v)?;
            let one = |b: f64| predict(alpha, FamilyParams::new(1.0, 0.0, b, 0.0));
            spectral_metrics(&mut c, &format!("v_block_0{tag}"), &sorted_eigs(vb0.entries())?, &one(p.b0), cfg, false)?;
            spectral_metrics(&mut c, &format!("v_block_inf{tag}"), &sorted_eigs(vbi.entries())?, &one(p.b_inf), cfg, false)?;
            let w = assemble_wha(&ka, &kw, &g)?;
            spectral_metrics(&mut c, &format!("wHa{tag}"), &sorted_eigs(w.entries())?, &predict(alpha, *p), cfg, false)?;
        }
    }
    Ok(Outcome {
        metrics: c.finish(),
        notes: vec![
            "fill and Hausdorff metrics are surrogate evidence for the a.c. spectrum; only outlier counts are asserted for the families".into(),
        ],
    })
}
