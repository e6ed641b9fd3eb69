//! Predicted spectra of weighted Hankel operators and the desk-scale metrics
//! used to compare them against matrix eigenvalues.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::FamilyParams;
use crate::specfun::{pi_alpha, Alpha};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    ZeroEnd,
    InfinityEnd,
    Both,
}

/// One predicted interval `[lo, hi]`; one endpoint is always 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedInterval {
    pub lo: f64,
    pub hi: f64,
    pub multiplicity: u32,
    pub origin: Origin,
}

impl PredictedInterval {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn distance(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }

    /// The interval with `margin` removed at both ends, if anything is left.
    pub fn shrunk(&self, margin: f64) -> Option<(f64, f64)> {
        let (a, b) = (self.lo + margin, self.hi - margin);
        (a < b).then_some((a, b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedSpectrum {
    pub intervals: Vec<PredictedInterval>,
}

impl PredictedSpectrum {
    /// Largest endpoint magnitude; 0 for an empty prediction.
    pub fn scale(&self) -> f64 {
        self.intervals
            .iter()
            .map(|iv| iv.lo.abs().max(iv.hi.abs()))
            .fold(0.0, f64::max)
    }

    /// Distance from the union of the intervals, or from {0} when there are none.
    pub fn distance(&self, x: f64) -> f64 {
        if self.intervals.is_empty() {
            return x.abs();
        }
        self.intervals.iter().map(|iv| iv.distance(x)).fold(f64::INFINITY, f64::min)
    }

    /// Predicted multiplicity at `x`: sum over the intervals containing it.
    pub fn multiplicity_at(&self, x: f64) -> u32 {
        self.intervals.iter().filter(|iv| iv.contains(x)).map(|iv| iv.multiplicity).sum()
    }

    pub fn default_delta(&self) -> f64 {
        0.05 * self.scale_or_one()
    }

    pub fn default_margin(&self) -> f64 {
        0.1 * self.scale_or_one()
    }

    fn scale_or_one(&self) -> f64 {
        let s = self.scale();
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }
}

fn oriented(c: f64, origin: Origin, multiplicity: u32) -> PredictedInterval {
    PredictedInterval {
        lo: c.min(0.0),
        hi: c.max(0.0),
        multiplicity,
        origin,
    }
}

/// `[0, π_α a0 b0²] ∪ [0, π_α a∞ b∞²]`, an interval `[0, c]` with `c < 0`
/// read as `[c, 0]`. Zero-length intervals are dropped; coinciding ones are
/// merged with multiplicity two.
pub fn predict(alpha: Alpha, p: FamilyParams) -> PredictedSpectrum {
    let pa = pi_alpha(alpha);
    let c0 = pa * p.a0 * p.b0 * p.b0;
    let ci = pa * p.a_inf * p.b_inf * p.b_inf;
    let mut intervals = Vec::new();
    if c0 != 0.0 && ci != 0.0 && (c0 - ci).abs() <= 1e-12 * c0.abs() {
        intervals.push(oriented(c0, Origin::Both, 2));
    } else {
        if c0 != 0.0 {
            intervals.push(oriented(c0, Origin::ZeroEnd, 1));
        }
        if ci != 0.0 {
            intervals.push(oriented(ci, Origin::InfinityEnd, 1));
        }
    }
    intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
    PredictedSpectrum { intervals }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingRow {
    pub lambda: f64,
    /// Number of eigenvalues above λ.
    pub count: usize,
    /// Predicted multiplicity at λ.
    pub predicted_multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub predicted: PredictedSpectrum,
    pub delta: f64,
    pub interior_margin: f64,
    pub fill_max_gap: f64,
    pub outliers: Vec<f64>,
    pub hausdorff: f64,
    pub counting_table: Vec<CountingRow>,
}

/// Number of rows in the counting table.
pub const COUNTING_ROWS: usize = 21;

/// Count of entries of an ascending list strictly above λ.
pub fn count_above(sorted: &[f64], lambda: f64) -> usize {
    sorted.len() - sorted.partition_point(|&e| e <= lambda)
}

fn distance_to_set(sorted: &[f64], x: f64) -> f64 {
    let k = sorted.partition_point(|&e| e < x);
    let mut d = f64::INFINITY;
    if k < sorted.len() {
        d = d.min(sorted[k] - x);
    }
    if k > 0 {
        d = d.min(x - sorted[k - 1]);
    }
    d
}

/// Compare eigenvalues with a prediction.
///
/// * outliers: eigenvalues farther than `delta` from the predicted union;
/// * fill_max_gap: largest gap between consecutive eigenvalues inside any
///   interval shrunk by `interior_margin` (the shrunk length when fewer than two
///   eigenvalues lie inside);
/// * hausdorff: `sup` over the shrunk intervals of the distance to the
///   eigenvalue set.
pub fn analyze(eigs: &[f64], predicted: &PredictedSpectrum, delta: f64, interior_margin: f64) -> Result<SpectralReport> {
    if eigs.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    if !(delta > 0.0) || !(interior_margin > 0.0) {
        return Err(Error::domain("analyze", "delta and interior_margin must be positive"));
    }
    let mut sorted = eigs.to_vec();
    sorted.sort_by(f64::total_cmp);

    let outliers: Vec<f64> = sorted.iter().cloned().filter(|&e| predicted.distance(e) > delta).collect();

    let mut fill_max_gap: f64 = 0.0;
    let mut hausdorff: f64 = 0.0;
    for iv in &predicted.intervals {
        let Some((a, b)) = iv.shrunk(interior_margin) else {
            continue;
        };
        let lo = sorted.partition_point(|&e| e < a);
        let hi = sorted.partition_point(|&e| e <= b);
        let inside = &sorted[lo..hi];
        let gap = if inside.len() < 2 {
            b - a
        } else {
            inside.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
        };
        fill_max_gap = fill_max_gap.max(gap);
        // the distance function peaks at a, b or a midpoint inside [a, b]
        let mut h = distance_to_set(&sorted, a).max(distance_to_set(&sorted, b));
        for w in sorted[lo.saturating_sub(1)..(hi + 1).min(sorted.len())].windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if a <= mid && mid <= b {
                h = h.max((w[1] - w[0]) / 2.0);
            }
        }
        hausdorff = hausdorff.max(h);
    }

    let (lo, hi) = if predicted.intervals.is_empty() {
        (sorted[0], sorted[sorted.len() - 1])
    } else {
        let lo = predicted.intervals.iter().map(|iv| iv.lo).fold(f64::INFINITY, f64::min);
        let hi = predicted.intervals.iter().map(|iv| iv.hi).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let counting_table = (0..COUNTING_ROWS)
        .map(|k| {
            let lambda = lo + (hi - lo) * k as f64 / (COUNTING_ROWS - 1) as f64;
            CountingRow {
                lambda,
                count: count_above(&sorted, lambda),
                predicted_multiplicity: predicted.multiplicity_at(lambda),
            }
        })
        .collect();

    Ok(SpectralReport {
        eigenvalues: sorted,
        predicted: predicted.clone(),
        delta,
        interior_margin,
        fill_max_gap,
        outliers,
        hausdorff,
        counting_table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingComparison {
    pub lambda: f64,
    pub full: usize,
    pub block0: usize,
    pub block_inf: usize,
    /// `full − (block0 + block_inf)`.
    pub discrepancy: i64,
}

/// Counting functions `N(λ) = #{eigenvalues > λ}` of the full operator and of
/// the two diagonal blocks.
pub fn counting_compare(full: &[f64], block0: &[f64], block_inf: &[f64], lambdas: &[f64]) -> Vec<CountingComparison> {
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s
    };
    let (f, b0, bi) = (sorted(full), sorted(block0), sorted(block_inf));
    lambdas
        .iter()
        .map(|&lambda| {
            let (nf, n0, ni) = (count_above(&f, lambda), count_above(&b0, lambda), count_above(&bi, lambda));
            CountingComparison {
                lambda,
                full: nf,
                block0: n0,
                block_inf: ni,
                discrepancy: nf as i64 - (n0 + ni) as i64,
            }
        })
        .collect()
}

pub fn sup_discrepancy(rows: &[CountingComparison]) -> u64 {
    rows.iter().map(|r| r.discrepancy.unsigned_abs()).max().unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchattenVerdict {
    SuperPolynomial,
    Polynomial { p_fit: f64 },
    NonSummableSuspect,
    InsufficientData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchattenRecord {
    /// Least-squares slope of ln σ_k against ln k over the values above the floor.
    pub p_fit: f64,
    /// Slopes over the first and second halves of those values.
    pub half_slopes: (f64, f64),
    pub nuclear_partial: Vec<f64>,
    pub used: usize,
    pub verdict: SchattenVerdict,
}

pub const MIN_FIT_VALUES: usize = 5;

fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Decay classification of a descending singular-value list. Values at or
/// below `floor` are excluded from the fit.
pub fn schatten_diagnostic(sigma: &[f64], floor: f64) -> Result<SchattenRecord> {
    if sigma.iter().any(|&s| !(s >= 0.0)) || sigma.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::domain("schatten_diagnostic", "singular values must be non-negative and descending"));
    }
    let mut acc = 0.0;
    let nuclear_partial = sigma
        .iter()
        .map(|s| {
            acc += s;
            acc
        })
        .collect();
    let points: Vec<(f64, f64)> = sigma
        .iter()
        .take_while(|&&s| s > floor && s > 0.0)
        .enumerate()
        .map(|(k, s)| (((k + 1) as f64).ln(), s.ln()))
        .collect();
    if points.len() < MIN_FIT_VALUES {
        return Ok(SchattenRecord {
            p_fit: f64::NAN,
            half_slopes: (f64::NAN, f64::NAN),
            nuclear_partial,
            used: points.len(),
            verdict: SchattenVerdict::InsufficientData,
        });
    }
    let p_fit = ls_slope(&points);
    let mid = points.len() / 2;
    let half_slopes = (ls_slope(&points[..mid.max(2)]), ls_slope(&points[mid..]));
    let verdict = if (half_slopes.0 - half_slopes.1).abs() > 1.0 {
        SchattenVerdict::SuperPolynomial
    } else if p_fit >= -1.0 {
        SchattenVerdict::NonSummableSuspect
    } else {
        SchattenVerdict::Polynomial { p_fit }
    };
    Ok(SchattenRecord {
        p_fit,
        half_slopes,
        nuclear_partial,
        used: points.len(),
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn al(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    fn iv(lo: f64, hi: f64, m: u32, o: Origin) -> PredictedInterval {
        PredictedInterval {
            lo,
            hi,
            multiplicity: m,
            origin: o,
        }
    }

    #[test]
    fn predict_examples() {
        let p = predict(al(0.0), FamilyParams::MODEL);
        assert_eq!(p.intervals.len(), 1);
        assert_eq!(p.intervals[0].multiplicity, 2);
        assert_eq!(p.intervals[0].origin, Origin::Both);
        assert!((p.intervals[0].hi - PI).abs() < 1e-12);

        let p = predict(al(0.5), FamilyParams::new(1.0, 0.0, 1.0, 1.0));
        assert_eq!(p.intervals.len(), 1);
        assert_eq!(p.intervals[0].origin, Origin::ZeroEnd);
        assert!((p.intervals[0].hi - 1.0).abs() < 1e-12);
        assert_eq!(p.intervals[0].lo, 0.0);

        let p = predict(al(0.0), FamilyParams::new(1.0, -1.0, 1.0, 1.0));
        assert_eq!(p.intervals.len(), 2);
        assert!((p.intervals[0].lo + PI).abs() < 1e-12 && p.intervals[0].hi == 0.0);
        assert_eq!(p.intervals[0].origin, Origin::InfinityEnd);
        assert!((p.intervals[1].hi - PI).abs() < 1e-12);

        let p = predict(al(0.0), FamilyParams::new(0.0, 1.0, 1.0, 1.0));
        assert_eq!(p.intervals, vec![iv(0.0, p.intervals[0].hi, 1, Origin::InfinityEnd)]);
        assert!(predict(al(0.0), FamilyParams::new(0.0, 0.0, 1.0, 1.0)).intervals.is_empty());
        assert!(predict(al(0.0), FamilyParams::new(1.0, 1.0, 0.0, 0.0)).intervals.is_empty());

        // nested intervals [0, 2π] and [0, 4π] stay separate
        let p = predict(al(0.0), FamilyParams::new(2.0, 1.0, 1.0, 2.0));
        assert_eq!(p.intervals.len(), 2);
        assert!((p.intervals[0].hi - 2.0 * PI).abs() < 1e-12);
        assert!((p.intervals[1].hi - 4.0 * PI).abs() < 1e-12);
        assert_eq!(p.multiplicity_at(PI), 2);
        assert_eq!(p.multiplicity_at(3.0 * PI), 1);

        let p = predict(al(0.0), FamilyParams::new(1.0, 1.0, 1.0, 2.0));
        assert_eq!(p.intervals.len(), 2);
        assert!((p.intervals[1].hi - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn predict_model_endpoint_is_pi_alpha() {
        for a in [-0.25, 0.0, 0.25, 0.5, 1.0, 2.0] {
            let p = predict(al(a), FamilyParams::MODEL);
            assert!((p.intervals[0].hi - pi_alpha(al(a))).abs() <= 1e-12 * pi_alpha(al(a)));
        }
    }

    #[test]
    fn analyze_uniform_grid() {
        let pred = predict(al(0.0), FamilyParams::MODEL);
        let step = PI / 200.0;
        let eigs: Vec<f64> = (0..=200).map(|k| k as f64 * step).collect();
        let r = analyze(&eigs, &pred, 0.05, 0.1).unwrap();
        assert!(r.outliers.is_empty());
        assert!((r.fill_max_gap - step).abs() < 1e-12);
        assert!(r.hausdorff <= step / 2.0 + 1e-12);
        assert_eq!(r.counting_table.len(), COUNTING_ROWS);
        assert_eq!(r.counting_table[10].predicted_multiplicity, 2);
    }

    #[test]
    fn hausdorff_sees_gap_straddling_the_margin() {
        let pred = PredictedSpectrum {
            intervals: vec![iv(0.0, 10.0, 1, Origin::ZeroEnd)],
        };
        let eigs: Vec<f64> = vec![0.9, 5.0, 5.5, 6.0, 6.5, 7.0, 7.5, 8.0, 8.5, 9.0];
        let r = analyze(&eigs, &pred, 0.1, 1.0).unwrap();
        assert!((r.hausdorff - 2.05).abs() < 1e-12, "{}", r.hausdorff);
        assert!((r.fill_max_gap - 0.5).abs() < 1e-12);
    }

    #[test]
    fn analyze_single_outlier() {
        let pred = predict(al(0.0), FamilyParams::MODEL);
        let r = analyze(&[5.0], &pred, 0.1, 0.1).unwrap();
        assert_eq!(r.outliers, vec![5.0]);
        assert!((r.fill_max_gap - (PI - 0.2)).abs() < 1e-12);
        assert!(matches!(analyze(&[], &pred, 0.1, 0.1), Err(Error::EmptySpectrum)));
        assert!(analyze(&[1.0], &pred, 0.0, 0.1).is_err());
    }

    #[test]
    fn analyze_empty_prediction_measures_distance_to_zero() {
        let pred = PredictedSpectrum { intervals: vec![] };
        let r = analyze(&[0.01, -0.02, 0.5], &pred, 0.05, 0.1).unwrap();
        assert_eq!(r.outliers, vec![0.5]);
        assert_eq!(r.fill_max_gap, 0.0);
        assert_eq!(r.hausdorff, 0.0);
    }

    #[test]
    fn counting_examples() {
        let b: Vec<f64> = (1..=10).map(|k| k as f64 / 4.0).collect();
        let full: Vec<f64> = b.iter().chain(&b).cloned().collect();
        let lambdas: Vec<f64> = (0..30).map(|k| k as f64 * 0.1).collect();
        let rows = counting_compare(&full, &b, &b, &lambdas);
        assert!(rows.iter().all(|r| r.block0 == r.block_inf && r.discrepancy == 0));
        assert_eq!(sup_discrepancy(&rows), 0);
        let rows = counting_compare(&b, &b, &b, &[0.0]);
        assert_eq!(rows[0].discrepancy, -10);
    }

    #[test]
    fn schatten_examples() {
        let geo: Vec<f64> = (1..=30).map(|k| 2f64.powi(-k)).collect();
        let r = schatten_diagnostic(&geo, 0.0).unwrap();
        assert_eq!(r.verdict, SchattenVerdict::SuperPolynomial);

        let poly: Vec<f64> = (1..=200).map(|k| (k as f64).powi(-2)).collect();
        let r = schatten_diagnostic(&poly, 0.0).unwrap();
        match r.verdict {
            SchattenVerdict::Polynomial { p_fit } => assert!((p_fit + 2.0).abs() < 1e-10),
            v => panic!("{v:?}"),
        }
        assert!((r.nuclear_partial[1] - 1.25).abs() < 1e-15);

        let slow: Vec<f64> = (1..=200).map(|k| (k as f64).powf(-0.5)).collect();
        assert_eq!(schatten_diagnostic(&slow, 0.0).unwrap().verdict, SchattenVerdict::NonSummableSuspect);

        let r = schatten_diagnostic(&[1.0, 0.5, 0.1, 1e-12], 1e-9).unwrap();
        assert_eq!(r.verdict, SchattenVerdict::InsufficientData);
        assert!(schatten_diagnostic(&[1.0, 2.0], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn predict_symmetric_in_ends(a in -0.2f64..1.5, a0 in -2.0f64..2.0, ai in -2.0f64..2.0,
                                     b0 in 0.0f64..2.0, bi in 0.0f64..2.0) {
            let p = predict(al(a), FamilyParams::new(a0, ai, b0, bi));
            let q = predict(al(a), FamilyParams::new(ai, a0, bi, b0));
            let key = |s: &PredictedSpectrum| s.intervals.iter().map(|i| (i.lo, i.hi, i.multiplicity)).collect::<Vec<_>>();
            prop_assert_eq!(key(&p), key(&q));
            for i in &p.intervals {
                prop_assert!(i.lo == 0.0 || i.hi == 0.0);
                prop_assert!(i.lo < i.hi);
            }
        }

        #[test]
        fn outliers_monotone_in_delta(eigs in proptest::collection::vec(-5.0f64..8.0, 1..60),
                                      d1 in 0.001f64..1.0, extra in 0.0f64..2.0) {
            let pred = predict(al(0.0), FamilyParams::new(1.0, -0.5, 1.0, 1.0));
            let r1 = analyze(&eigs, &pred, d1, 0.1).unwrap();
            let r2 = analyze(&eigs, &pred, d1 + extra, 0.1).unwrap();
            prop_assert!(r2.outliers.len() <= r1.outliers.len());
            for o in &r1.outliers {
                prop_assert!(pred.distance(*o) > d1);
            }
        }
    }
}
