//! Batch front end: symbol tables, spectra along a ladder, and the
//! verification suite, written as CSV/JSON files.
//!
//! Floats in every output file are printed like C's `%.17g`, so repeated runs
//! with the same configuration produce identical bytes.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::discretize::assemble_wha;
use crate::error::{Error, Result};
use crate::kernels::{hypothesis_check, parse_builtin, resolve_builtins, Builtin, FamilyParams};
use crate::linalg::{sym_eigenvalues, symmetrised};
use crate::specfun::{mellin_symbol, symbol_by_quadrature, Alpha};
use crate::spectra::{analyze, predict};
use crate::verify::{run_suite, CheckId, GridStep, SuiteConfig, VerificationReport, DEFAULT_FAMILIES, DEFAULT_LADDER};

pub const SYMBOL_FILE: &str = "symbol.csv";
pub const SPECTRAL_REPORT_FILE: &str = "spectral_report.json";
pub const VERIFICATION_REPORT_FILE: &str = "verification_report.json";

/// ξ = k/10 for k in this range.
const SYMBOL_XI_TENTHS: std::ops::RangeInclusive<i32> = -50..=50;

fn default_alpha() -> Alpha {
    Alpha::new(0.0).expect("0 is a valid alpha")
}

fn default_kernel() -> String {
    "power".into()
}

fn default_ladder() -> Vec<GridStep> {
    DEFAULT_LADDER.to_vec()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_checks() -> Vec<String> {
    CheckId::ALL.iter().map(|c| c.name().to_string()).collect()
}

/// Contents of the JSON configuration file. Every field is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_alpha")]
    pub alpha: Alpha,
    /// `power`, `carleman`, `oscillating`, `rational(a0,ainf)` or
    /// `rational(a0,ainf,b0,binf)`.
    #[serde(default = "default_kernel")]
    pub kernel: String,
    /// `power` or `rational(b0,binf)`; defaults to `power`.
    #[serde(default)]
    pub weight: Option<String>,
    #[serde(default = "default_ladder")]
    pub ladder: Vec<GridStep>,
    /// Outlier distance; defaults to 5% of the largest predicted endpoint.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Defaults to 10% of the largest predicted endpoint.
    #[serde(default)]
    pub interior_margin: Option<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: default_alpha(),
            kernel: default_kernel(),
            weight: None,
            ladder: default_ladder(),
            delta: None,
            interior_margin: None,
            output_dir: default_output_dir(),
            checks: default_checks(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub r: Option<f64>,
    pub n: Option<usize>,
    pub kernel: Option<String>,
    pub weight: Option<String>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Apply flag overrides. `--R` or `--N` replace the ladder by a single
    /// step, the missing half taken from the last step of the current ladder.
    pub fn apply(mut self, o: &Overrides) -> Result<Self> {
        if let Some(a) = o.alpha {
            self.alpha = Alpha::new(a).map_err(|e| Error::Config(e.to_string()))?;
        }
        if o.r.is_some() || o.n.is_some() {
            let last = self.ladder.last().copied().unwrap_or(DEFAULT_LADDER[1]);
            self.ladder = vec![GridStep::new(o.r.unwrap_or(last.r), o.n.unwrap_or(last.n))];
        }
        if let Some(k) = &o.kernel {
            self.kernel = k.clone();
        }
        if let Some(w) = &o.weight {
            self.weight = Some(w.clone());
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ladder.is_empty() {
            return Err(Error::Config("ladder must not be empty".into()));
        }
        for s in &self.ladder {
            crate::quadrature::make_grid(s.r, s.n).map_err(|e| Error::Config(format!("ladder step {s}: {e}")))?;
        }
        for (name, v) in [("delta", self.delta), ("interior_margin", self.interior_margin)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        self.check_ids()?;
        resolve_builtins(self.alpha, &self.kernel, self.weight.as_deref())?;
        Ok(())
    }

    pub fn check_ids(&self) -> Result<Vec<CheckId>> {
        let mut ids = self.checks.iter().map(|c| c.parse()).collect::<Result<Vec<CheckId>>>()?;
        ids.sort();
        ids.dedup();
        Ok(ids)
    }

    /// Limits `(a0, a_inf, b0, b_inf)` of the configured kernel and weight.
    pub fn family(&self) -> Result<FamilyParams> {
        let (a, w) = resolve_builtins(self.alpha, &self.kernel, self.weight.as_deref())?;
        Ok(FamilyParams::new(a.a0, a.a_inf, w.b0, w.b_inf))
    }
}

// ---------------------------------------------------------------------------
// output

/// `x` formatted like C's `printf("%.17g", x)`.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    } else {
        trim_fraction(&format!("{:.*}", (16 - exp) as usize, x)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Pretty JSON with `%.17g` floats. Non-finite values become `null`.
struct G17Formatter(PrettyFormatter<'static>);

impl Formatter for G17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        let mut s = format_g17(value);
        // keep floats distinguishable from integers on re-parse
        if !s.contains(['.', 'e']) {
            s.push_str(".0");
        }
        w.write_all(s.as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, G17Formatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

// ---------------------------------------------------------------------------
// commands

/// Write `symbol.csv`: the Gamma-function symbol against direct quadrature on
/// ξ ∈ [−5, 5] with step 0.1.
pub fn cmd_symbol(cfg: &RunConfig) -> Result<PathBuf> {
    prepare_dir(&cfg.output_dir)?;
    let rows = SYMBOL_XI_TENTHS
        .map(|k| {
            let xi = k as f64 / 10.0;
            let g = mellin_symbol(cfg.alpha, xi);
            let q = symbol_by_quadrature(cfg.alpha, xi)?.value;
            Ok([xi, g, q, (g - q).abs()].map(format_g17).join(","))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut text = String::from("xi,sigma_gamma,sigma_quadrature,abs_diff\n");
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    let path = cfg.output_dir.join(SYMBOL_FILE);
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub kernel: String,
    pub weight: String,
    pub a0: f64,
    pub a_inf: f64,
    pub b0: f64,
    pub b_inf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub lo: f64,
    pub hi: f64,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub max_gap: f64,
    pub outliers: Vec<f64>,
    pub hausdorff: f64,
    pub hypothesis_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRun {
    pub alpha: f64,
    pub family: FamilyRecord,
    pub predicted: Vec<IntervalRecord>,
    pub delta: f64,
    pub interior_margin: f64,
    pub hypothesis_failures: Vec<String>,
    pub steps: Vec<StepRecord>,
}

pub fn eigs_file_name(step: &GridStep) -> String {
    format!("eigs_R{}_N{}.csv", step.r, step.n)
}

/// Eigenvalues of `wH(a)w` at every ladder step, plus `spectral_report.json`.
/// A failed hypothesis check is recorded, not fatal.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<SpectrumRun> {
    let (a, w) = resolve_builtins(cfg.alpha, &cfg.kernel, cfg.weight.as_deref())?;
    let hyp = hypothesis_check(&a, &w);
    let params = FamilyParams::new(a.a0, a.a_inf, w.b0, w.b_inf);
    let predicted = predict(cfg.alpha, params);
    let delta = cfg.delta.unwrap_or_else(|| predicted.default_delta());
    let margin = cfg.interior_margin.unwrap_or_else(|| predicted.default_margin());
    prepare_dir(&cfg.output_dir)?;

    let steps = cfg
        .ladder
        .par_iter()
        .map(|step| {
            let m = assemble_wha(&a, &w, &step.grid()?)?;
            let eigs = sym_eigenvalues(&symmetrised(m.entries()))?;
            let mut text = String::with_capacity(eigs.len() * 24);
            for e in &eigs {
                text.push_str(&format_g17(*e));
                text.push('\n');
            }
            write_atomic(&cfg.output_dir.join(eigs_file_name(step)), text.as_bytes())?;
            let r = analyze(&eigs, &predicted, delta, margin)?;
            Ok(StepRecord {
                r: step.r,
                n: step.n,
                max_gap: r.fill_max_gap,
                outliers: r.outliers,
                hausdorff: r.hausdorff,
                hypothesis_ok: hyp.passed,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let run = SpectrumRun {
        alpha: cfg.alpha.value(),
        family: FamilyRecord {
            kernel: a.label().to_string(),
            weight: w.label().to_string(),
            a0: params.a0,
            a_inf: params.a_inf,
            b0: params.b0,
            b_inf: params.b_inf,
        },
        predicted: predicted
            .intervals
            .iter()
            .map(|iv| IntervalRecord {
                lo: iv.lo,
                hi: iv.hi,
                multiplicity: iv.multiplicity,
            })
            .collect(),
        delta,
        interior_margin: margin,
        hypothesis_failures: hyp.failed_checks().map(|c| c.name.clone()).collect(),
        steps,
    };
    write_atomic(&cfg.output_dir.join(SPECTRAL_REPORT_FILE), &to_json_bytes(&run)?)?;
    Ok(run)
}

/// Families for the suite: the built-in set for the power (model) kernel,
/// otherwise the configured rational pair.
fn suite_families(cfg: &RunConfig) -> Result<Vec<FamilyParams>> {
    let weight_is_power = cfg.weight.as_deref().map_or(true, |w| w.trim() == "power");
    match parse_builtin(&cfg.kernel)? {
        Builtin::Power | Builtin::Carleman if weight_is_power => Ok(DEFAULT_FAMILIES.to_vec()),
        Builtin::Oscillating => Err(Error::Config(
            "the verification suite needs a rational or power kernel".into(),
        )),
        _ => Ok(vec![cfg.family()?]),
    }
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<VerificationReport> {
    let suite = SuiteConfig::new(cfg.alpha)
        .with_ladder(cfg.ladder.clone())
        .with_checks(cfg.check_ids()?)
        .with_families(suite_families(cfg)?);
    suite.validate()?;
    prepare_dir(&cfg.output_dir)?;
    let report = run_suite(&suite)?;
    write_atomic(&cfg.output_dir.join(VERIFICATION_REPORT_FILE), &to_json_bytes(&report)?)?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// argument parsing

#[derive(Debug, Parser)]
#[command(name = "hankel-lab", version, about = "Spectra of weighted integral Hankel operators on the half-line")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Grid half-width; replaces the ladder by a single step.
    #[arg(long = "R", global = true)]
    pub r: Option<f64>,
    /// Grid size; replaces the ladder by a single step.
    #[arg(long = "N", global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub kernel: Option<String>,
    #[arg(long, global = true)]
    pub weight: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Mellin symbol table.
    Symbol,
    /// Eigenvalues of wH(a)w along the ladder with the predicted spectrum.
    Spectrum,
    /// Run the verification suite; exit status 1 on failure.
    Verify,
}

impl Cli {
    pub fn config(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let cfg = base.apply(&Overrides {
            alpha: self.alpha,
            r: self.r,
            n: self.n,
            kernel: self.kernel.clone(),
            weight: self.weight.clone(),
            out: self.out.clone(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cfg = match cli.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let outcome = match cli.command {
        Command::Symbol => cmd_symbol(&cfg).map(|p| {
            eprintln!("wrote {}", p.display());
            EXIT_OK
        }),
        Command::Spectrum => cmd_spectrum(&cfg).map(|run| {
            if !run.hypothesis_failures.is_empty() {
                eprintln!("warning: hypothesis check failed: {}", run.hypothesis_failures.join(", "));
            }
            eprintln!("wrote {}", cfg.output_dir.join(SPECTRAL_REPORT_FILE).display());
            EXIT_OK
        }),
        Command::Verify => cmd_verify(&cfg).map(|report| {
            for c in &report.checks {
                eprintln!("{:<28} {:?}", c.name, c.verdict);
            }
            if report.verdict.is_pass() {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_printf() {
        let cases = [
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (std::f64::consts::PI, "3.1415926535897931"),
            (1e-5, "1.0000000000000001e-05"),
            (1e-4, "0.0001"),
            (123456789.0, "123456789"),
            (1e17, "1e+17"),
            (1e16, "10000000000000000"),
            (6.02214076e23, "6.0221407599999999e+23"),
            (5e-324, "4.9406564584124654e-324"),
            (0.0, "0"),
            (-0.0, "-0"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g17(x), want, "{x:e}");
        }
        assert_eq!(format_g17(f64::NAN), "nan");
    }

    #[test]
    fn g17_round_trips() {
        for x in [0.1, 1.0 / 3.0, 2f64.sqrt(), 1e-300, 7.123e200, -4.4e-9] {
            assert_eq!(format_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn json_floats_and_nulls() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: f64,
            c: Vec<f64>,
            n: u32,
        }
        let s = String::from_utf8(
            to_json_bytes(&S {
                a: 0.1,
                b: f64::NAN,
                c: vec![2.0, 1e-7],
                n: 3,
            })
            .unwrap(),
        )
        .unwrap();
        assert!(s.contains("\"a\": 0.10000000000000001"), "{s}");
        assert!(s.contains("\"b\": null"), "{s}");
        assert!(s.contains("2.0,") && s.contains("9.9999999999999995e-08"), "{s}");
        assert!(s.contains("\"n\": 3\n"), "{s}");
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn config_defaults_and_overrides() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let cfg = RunConfig::from_json(r#"{"alpha": 0.5, "ladder": [{"R": 4, "N": 50}], "checks": ["C2"]}"#)
            .unwrap()
            .apply(&Overrides {
                n: Some(100),
                kernel: Some("rational(2,1,1,2)".into()),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(cfg.ladder, vec![GridStep::new(4.0, 100)]);
        assert_eq!(cfg.alpha.value(), 0.5);
        assert_eq!(cfg.check_ids().unwrap(), vec![CheckId::C2]);
        cfg.validate().unwrap();
        assert_eq!(cfg.family().unwrap(), FamilyParams::new(2.0, 1.0, 1.0, 2.0));
    }

    #[test]
    fn config_rejections() {
        assert!(RunConfig::from_json(r#"{"alpha": -0.5}"#).is_err());
        assert!(RunConfig::from_json(r#"{"colour": 1}"#).is_err());
        assert!(RunConfig::default().apply(&Overrides { alpha: Some(-0.7), ..Default::default() }).is_err());
        let bad = |json: &str| RunConfig::from_json(json).unwrap().validate().is_err();
        assert!(bad(r#"{"ladder": []}"#));
        assert!(bad(r#"{"ladder": [{"R": 4, "N": 51}]}"#));
        assert!(bad(r#"{"delta": 0}"#));
        assert!(bad(r#"{"interior_margin": -1}"#));
        assert!(bad(r#"{"checks": ["C9"]}"#));
        assert!(bad(r#"{"kernel": "gaussian"}"#));
        assert!(bad(r#"{"kernel": "carleman", "alpha": 0.5}"#));
        assert!(bad(r#"{"kernel": "rational(1,1,1,1)", "weight": "power"}"#));
    }

    #[test]
    fn suite_family_selection() {
        let mut cfg = RunConfig::default();
        assert_eq!(suite_families(&cfg).unwrap().len(), DEFAULT_FAMILIES.len());
        cfg.kernel = "rational(1,0)".into();
        cfg.weight = Some("rational(1,2)".into());
        assert_eq!(suite_families(&cfg).unwrap(), vec![FamilyParams::new(1.0, 0.0, 1.0, 2.0)]);
        cfg.kernel = "oscillating".into();
        cfg.weight = None;
        assert!(suite_families(&cfg).is_err());
    }
}
