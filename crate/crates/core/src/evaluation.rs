//! RMSE, cut scoring and with/without-control reports.

use std::fmt;

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("series is empty")]
    EmptySeries,
    #[error("series lengths differ ({reference} vs {actual})")]
    LengthMismatch { reference: usize, actual: usize },
    #[error("time base must be strictly increasing (index {0})")]
    NonMonotonicTime(usize),
    #[error("no cut records")]
    EmptyRecords,
    #[error("cut record {0} is not finite")]
    NonFiniteRecord(usize),
    #[error("rubric thresholds must be positive and strictly increasing")]
    BadRubric,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries<T> {
    t: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> TimeSeries<T> {
    pub fn new(t: Vec<T>, values: Vec<T>) -> Result<Self, EvalError> {
        if t.len() != values.len() {
            return Err(EvalError::LengthMismatch {
                reference: t.len(),
                actual: values.len(),
            });
        }
        if let Some(i) = (1..t.len()).find(|&i| !(t[i] > t[i - 1])) {
            return Err(EvalError::NonMonotonicTime(i));
        }
        Ok(TimeSeries { t, values })
    }

    pub fn with_capacity(n: usize) -> Self {
        TimeSeries {
            t: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, t: T, v: T) -> Result<(), EvalError> {
        if let Some(last) = self.t.last() {
            if !(t > *last) {
                return Err(EvalError::NonMonotonicTime(self.t.len()));
            }
        }
        self.t.push(t);
        self.values.push(v);
        Ok(())
    }

    pub fn t(&self) -> &[T] {
        &self.t
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Linear interpolation, clamped at the ends.
    pub fn sample_at(&self, t: T) -> Option<T> {
        let (ts, vs) = (&self.t, &self.values);
        if ts.is_empty() {
            return None;
        }
        if t <= ts[0] {
            return Some(vs[0]);
        }
        let n = ts.len();
        if t >= ts[n - 1] {
            return Some(vs[n - 1]);
        }
        let i = ts.partition_point(|x| *x < t);
        let w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
        Some(vs[i - 1] + (vs[i] - vs[i - 1]) * w)
    }
}

/// What a series is compared against.
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a, T> {
    Constant(T),
    Series(&'a [T]),
}

pub fn rmse<T: Real>(reference: Reference<'_, T>, actual: &[T]) -> Result<T, EvalError> {
    if actual.is_empty() {
        return Err(EvalError::EmptySeries);
    }
    let mut sum = T::zero();
    match reference {
        Reference::Constant(c) => {
            for a in actual {
                sum += (c - *a).powi(2);
            }
        }
        Reference::Series(r) => {
            if r.len() != actual.len() {
                return Err(EvalError::LengthMismatch {
                    reference: r.len(),
                    actual: actual.len(),
                });
            }
            for (r, a) in r.iter().zip(actual) {
                sum += (*r - *a).powi(2);
            }
        }
    }
    Ok((sum / T::from_usize(actual.len()).unwrap()).sqrt())
}

pub fn rmse_const<T: Real>(reference: T, actual: &[T]) -> Result<T, EvalError> {
    rmse(Reference::Constant(reference), actual)
}

/// Signed cut errors at one cabbage, measured against the targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutRecord<T> {
    pub height_error_mm: T,
    pub angle_error_deg: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Grade {
    Cross,
    Triangle,
    Square,
    Circle,
}

impl Grade {
    pub fn score(self) -> u32 {
        match self {
            Grade::Circle => 100,
            Grade::Square => 80,
            Grade::Triangle => 50,
            Grade::Cross => 0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Grade::Circle => 'O',
            Grade::Square => '#',
            Grade::Triangle => '^',
            Grade::Cross => 'x',
        }
    }
}

/// Upper error bounds (inclusive) for circle, square and triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityRubric<T> {
    pub height_mm: [T; 3],
    pub angle_deg: [T; 3],
}

impl<T: Real> Default for QualityRubric<T> {
    fn default() -> Self {
        QualityRubric {
            height_mm: [T::lit(10.0), T::lit(25.0), T::lit(50.0)],
            angle_deg: [T::lit(2.0), T::lit(5.0), T::lit(10.0)],
        }
    }
}

impl<T: Real> QualityRubric<T> {
    pub fn validate(&self) -> Result<(), EvalError> {
        let ok = |th: &[T; 3]| th[0] > T::zero() && th[0] < th[1] && th[1] < th[2] && th[2].is_finite();
        if ok(&self.height_mm) && ok(&self.angle_deg) {
            Ok(())
        } else {
            Err(EvalError::BadRubric)
        }
    }

    fn grade_one(err: T, th: &[T; 3]) -> Grade {
        let e = err.abs();
        if e <= th[0] {
            Grade::Circle
        } else if e <= th[1] {
            Grade::Square
        } else if e <= th[2] {
            Grade::Triangle
        } else {
            Grade::Cross
        }
    }

    pub fn grade(&self, rec: &CutRecord<T>) -> Grade {
        Self::grade_one(rec.height_error_mm, &self.height_mm)
            .min(Self::grade_one(rec.angle_error_deg, &self.angle_deg))
    }
}

pub fn score_cuts<T: Real>(records: &[CutRecord<T>], rubric: &QualityRubric<T>) -> Result<T, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyRecords);
    }
    rubric.validate()?;
    let mut total = 0u64;
    for (i, r) in records.iter().enumerate() {
        if !r.height_error_mm.is_finite() || !r.angle_error_deg.is_finite() {
            return Err(EvalError::NonFiniteRecord(i));
        }
        total += u64::from(rubric.grade(r).score());
    }
    Ok(T::from_u64(total).unwrap() / T::from_usize(records.len()).unwrap())
}

/// Percent reduction from `without` to `with`. Zero when both are zero.
pub fn improvement_pct<T: Real>(with: T, without: T) -> T {
    if without == T::zero() {
        if with == T::zero() {
            return T::zero();
        }
        return T::neg_infinity();
    }
    T::lit(100.0) * (T::one() - with / without)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics<T> {
    pub rmse_theta: T,
    pub rmse_h: T,
    /// `None` when the course has no cabbages.
    pub score: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport<T> {
    pub with_control: RunMetrics<T>,
    pub without_control: RunMetrics<T>,
    pub improvement_theta_pct: T,
    pub improvement_h_pct: T,
}

impl<T: Real> ComparisonReport<T> {
    pub fn new(with_control: RunMetrics<T>, without_control: RunMetrics<T>) -> Self {
        ComparisonReport {
            with_control,
            without_control,
            improvement_theta_pct: improvement_pct(with_control.rmse_theta, without_control.rmse_theta),
            improvement_h_pct: improvement_pct(with_control.rmse_h, without_control.rmse_h),
        }
    }

    /// Machine-readable `key=value` lines in a fixed order.
    pub fn summary_pairs(&self) -> Vec<(&'static str, String)> {
        let f = |v: T| format!("{:.6}", v.to_f64_lossy());
        let s = |v: Option<T>| v.map(f).unwrap_or_else(|| "nan".to_string());
        vec![
            ("rmse_theta_with", f(self.with_control.rmse_theta)),
            ("rmse_theta_without", f(self.without_control.rmse_theta)),
            ("improvement_theta_pct", f(self.improvement_theta_pct)),
            ("rmse_h_with", f(self.with_control.rmse_h)),
            ("rmse_h_without", f(self.without_control.rmse_h)),
            ("improvement_h_pct", f(self.improvement_h_pct)),
            ("score_with", s(self.with_control.score)),
            ("score_without", s(self.without_control.score)),
        ]
    }

    pub fn summary_text(&self) -> String {
        self.summary_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

impl<T: Real> fmt::Display for ComparisonReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = &self.with_control;
        let wo = &self.without_control;
        writeln!(f, "                 with control   without control   improvement")?;
        writeln!(
            f,
            "RMSE pitch (deg) {:>12.3} {:>17.3} {:>12.1}%",
            w.rmse_theta.to_f64_lossy(),
            wo.rmse_theta.to_f64_lossy(),
            self.improvement_theta_pct.to_f64_lossy()
        )?;
        writeln!(
            f,
            "RMSE height (mm) {:>12.3} {:>17.3} {:>12.1}%",
            w.rmse_h.to_f64_lossy(),
            wo.rmse_h.to_f64_lossy(),
            self.improvement_h_pct.to_f64_lossy()
        )?;
        if let (Some(a), Some(b)) = (w.score, wo.score) {
            writeln!(
                f,
                "cut score        {:>12.1} {:>17.1}",
                a.to_f64_lossy(),
                b.to_f64_lossy()
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rec(h: f64, a: f64) -> CutRecord<f64> {
        CutRecord {
            height_error_mm: h,
            angle_error_deg: a,
        }
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse_const(35.0, &[35.0, 35.0, 35.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(rmse_const(35.0, &[34.0, 36.0]).unwrap(), 1.0, epsilon = 1e-15);
        let oracle = (25.0f64 / 3.0).sqrt();
        assert_abs_diff_eq!(
            rmse_const(35.0, &[35.0, 38.0, 31.0]).unwrap(),
            oracle,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(oracle, 2.886751, epsilon = 1e-6);
        assert_eq!(rmse_const::<f64>(35.0, &[]), Err(EvalError::EmptySeries));
        assert_eq!(
            rmse(Reference::Series(&[1.0, 2.0]), &[1.0]),
            Err(EvalError::LengthMismatch {
                reference: 2,
                actual: 1
            })
        );
    }

    #[test]
    fn time_series_checks() {
        assert!(TimeSeries::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(TimeSeries::new(vec![0.0], vec![1.0, 2.0]).is_err());
        let ts = TimeSeries::new(vec![0.0, 1.0, 2.0], vec![0.0, 10.0, 0.0]).unwrap();
        assert_eq!(ts.sample_at(0.5), Some(5.0));
        assert_eq!(ts.sample_at(-1.0), Some(0.0));
        assert_eq!(ts.sample_at(1.75), Some(2.5));
        let mut ts = TimeSeries::with_capacity(2);
        ts.push(1.0, 0.0).unwrap();
        assert!(ts.push(1.0, 0.0).is_err());
    }

    #[test]
    fn score_examples() {
        let r = QualityRubric::default();
        assert_eq!(score_cuts(&[rec(0.0, 0.0); 15], &r).unwrap(), 100.0);
        let recs: Vec<_> = [5.0, 15.0, 30.0, 60.0].iter().map(|h| rec(*h, 0.0)).collect();
        let grades: Vec<u32> = recs.iter().map(|c| r.grade(c).score()).collect();
        assert_eq!(grades, vec![100, 80, 50, 0]);
        assert_eq!(score_cuts(&recs, &r).unwrap(), 57.5);
        assert_eq!(score_cuts::<f64>(&[], &r), Err(EvalError::EmptyRecords));
        assert_eq!(
            score_cuts(&[rec(f64::NAN, 0.0)], &r),
            Err(EvalError::NonFiniteRecord(0))
        );
    }

    #[test]
    fn boundaries_grade_up() {
        let r = QualityRubric::default();
        assert_eq!(r.grade(&rec(10.0, 0.0)), Grade::Circle);
        assert_eq!(r.grade(&rec(-25.0, 0.0)), Grade::Square);
        assert_eq!(r.grade(&rec(50.0, 0.0)), Grade::Triangle);
        assert_eq!(r.grade(&rec(0.0, 2.0)), Grade::Circle);
        assert_eq!(r.grade(&rec(0.0, -5.0)), Grade::Square);
        assert_eq!(r.grade(&rec(0.0, 10.0)), Grade::Triangle);
        assert_eq!(r.grade(&rec(0.0, 10.0001)), Grade::Cross);
        // Worst of the two axes.
        assert_eq!(r.grade(&rec(3.0, 7.0)), Grade::Triangle);
    }

    #[test]
    fn bad_rubric() {
        let r = QualityRubric {
            height_mm: [10.0, 10.0, 50.0],
            angle_deg: [2.0, 5.0, 10.0],
        };
        assert_eq!(score_cuts(&[rec(0.0, 0.0)], &r), Err(EvalError::BadRubric));
    }

    #[test]
    fn field_improvements() {
        let theta = improvement_pct(0.29, 3.66f64);
        let h = improvement_pct(18.97, 81.44f64);
        assert_abs_diff_eq!(theta, 100.0 * (1.0 - 0.29 / 3.66), epsilon = 1e-12);
        assert_eq!(theta.round(), 92.0);
        assert_eq!(h.round(), 77.0);
        assert_abs_diff_eq!(h, 76.7, epsilon = 0.05);
        assert_eq!(improvement_pct(0.0, 0.0f64), 0.0);
        assert_eq!(improvement_pct(1.5, 1.5f64), 0.0);
    }

    #[test]
    fn summary_keys() {
        let m = RunMetrics {
            rmse_theta: 1.0,
            rmse_h: 2.0,
            score: Some(90.0),
        };
        let rep = ComparisonReport::new(m, m);
        let keys: Vec<_> = rep.summary_pairs().into_iter().map(|(k, _)| k).collect();
        assert_eq!(
            keys,
            [
                "rmse_theta_with",
                "rmse_theta_without",
                "improvement_theta_pct",
                "rmse_h_with",
                "rmse_h_without",
                "improvement_h_pct",
                "score_with",
                "score_without"
            ]
        );
        assert_eq!(rep.improvement_theta_pct, 0.0);
        assert!(rep.summary_text().contains("improvement_h_pct=0.000000\n"));
    }

    proptest! {
        #[test]
        fn rmse_nonneg_and_zero_iff_equal(a in proptest::collection::vec(-1e3..1e3f64, 1..50), d in proptest::collection::vec(-5.0..5.0f64, 50)) {
            let b: Vec<f64> = a.iter().zip(&d).map(|(x, e)| x + e).collect();
            let v = rmse(Reference::Series(&a), &b).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert_eq!(v == 0.0, a == b);
            prop_assert_eq!(rmse(Reference::Series(&a), &a).unwrap(), 0.0);
        }

        #[test]
        fn rmse_permutation_invariant(pairs in proptest::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 1..40), seed in any::<u64>()) {
            let mut shuffled = pairs.clone();
            let n = shuffled.len();
            let mut x = seed | 1;
            for i in (1..n).rev() {
                x ^= x << 13; x ^= x >> 7; x ^= x << 17;
                shuffled.swap(i, (x % (i as u64 + 1)) as usize);
            }
            let (r1, a1): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let (r2, a2): (Vec<f64>, Vec<f64>) = shuffled.into_iter().unzip();
            let v1 = rmse(Reference::Series(&r1), &a1).unwrap();
            let v2 = rmse(Reference::Series(&r2), &a2).unwrap();
            prop_assert!((v1 - v2).abs() <= 1e-9 * v1.max(1.0));
        }

        #[test]
        fn score_monotone(errs in proptest::collection::vec((-80.0..80.0f64, -15.0..15.0f64), 1..20), shrink in proptest::collection::vec(0.0..=1.0f64, 20)) {
            let r = QualityRubric::default();
            let big: Vec<_> = errs.iter().map(|(h, a)| rec(*h, *a)).collect();
            let small: Vec<_> = errs.iter().zip(&shrink).map(|((h, a), s)| rec(h * s, a * s)).collect();
            prop_assert!(score_cuts(&small, &r).unwrap() >= score_cuts(&big, &r).unwrap());
        }
    }
}
