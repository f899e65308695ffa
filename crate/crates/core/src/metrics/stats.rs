use num_traits::Float;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Labelled sample of real values, e.g. one success rate per experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet<T> {
    pub values: Vec<T>,
    pub label: String,
}

impl<T: Float> SampleSet<T> {
    pub fn new(label: impl Into<String>, values: Vec<T>) -> Self {
        SampleSet {
            values,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn count(&self) -> T {
        T::from(self.values.len()).expect("length fits the scalar")
    }

    pub fn mean(&self) -> Result<T> {
        if self.is_empty() {
            return Err(Error::Precision(format!("{}: empty sample", self.label)));
        }
        let sum = self.values.iter().fold(T::zero(), |acc, &v| acc + v);
        Ok(sum / self.count())
    }

    /// Unbiased sample variance. Needs two values.
    pub fn variance(&self) -> Result<T> {
        if self.len() < 2 {
            return Err(Error::Precision(format!(
                "{}: variance needs at least 2 values, got {}",
                self.label,
                self.len()
            )));
        }
        let m = self.mean()?;
        let ss = self
            .values
            .iter()
            .fold(T::zero(), |acc, &v| acc + (v - m) * (v - m));
        Ok(ss / (self.count() - T::one()))
    }

    /// Two-sided t-interval for the mean at the given confidence level.
    pub fn mean_ci(&self, level: f64) -> Result<(T, T)> {
        let m = self.mean()?;
        if self.len() < 2 {
            return Ok((m, m));
        }
        let se = (self.variance()? / self.count()).sqrt();
        let half = T::from(t_interval(level, self.len() - 1)?).expect("finite") * se;
        Ok((m - half, m + half))
    }
}

/// Critical value `t` with `P(|T| <= t) = level` for `df` degrees of freedom.
pub fn t_interval(level: f64, df: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&level) || df == 0 {
        return Err(Error::Precision(format!(
            "bad t-interval request: level={level}, df={df}"
        )));
    }
    let dist = StudentsT::new(0.0, 1.0, df as f64)
        .map_err(|e| Error::Precision(format!("student t: {e}")))?;
    Ok(dist.inverse_cdf(0.5 + level / 2.0))
}

/// Welch's unequal-variance t statistic of `a` against `b`.
///
/// When both variances are zero the statistic is 0 for equal means and a
/// signed infinity otherwise.
pub fn welch_t<T: Float>(a: &SampleSet<T>, b: &SampleSet<T>) -> Result<T> {
    let (ma, mb) = (a.mean()?, b.mean()?);
    let (va, vb) = (a.variance()?, b.variance()?);
    let se2 = va / a.count() + vb / b.count();
    let diff = ma - mb;
    if se2 == T::zero() {
        return Ok(if diff == T::zero() {
            T::zero()
        } else {
            diff.signum() * T::infinity()
        });
    }
    Ok(diff / se2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[f64]) -> SampleSet<f64> {
        SampleSet::new("x", v.to_vec())
    }

    #[test]
    fn identical_sets_give_zero() {
        let a = set(&[0.1, 0.4, 0.3, 0.9]);
        assert_eq!(welch_t(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_value() {
        // a: mean 3, var 2.5; b: mean 6, var 10. se = sqrt(0.5 + 2) = 1.5811.
        let a = set(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let b = set(&[2.0, 4.0, 6.0, 8.0, 10.0]);
        let t = welch_t(&a, &b).unwrap();
        assert!((t - (-3.0 / 2.5f64.sqrt())).abs() < 1e-12);
        assert!((t + 1.897_366_596).abs() < 1e-9);
    }

    #[test]
    fn antisymmetric_and_shift_invariant() {
        let a = set(&[0.2, 0.5, 0.1, 0.7, 0.3]);
        let b = set(&[0.4, 0.9, 0.6, 0.8, 0.5, 0.55]);
        let t = welch_t(&a, &b).unwrap();
        assert_eq!(t, -welch_t(&b, &a).unwrap());
        let shift =
            |s: &SampleSet<f64>| set(&s.values.iter().map(|v| v + 10.0).collect::<Vec<_>>());
        assert!((welch_t(&shift(&a), &shift(&b)).unwrap() - t).abs() < 1e-9);
        let scale = |s: &SampleSet<f64>| set(&s.values.iter().map(|v| v * 3.0).collect::<Vec<_>>());
        assert!((welch_t(&scale(&a), &scale(&b)).unwrap() - t).abs() < 1e-9);
    }

    #[test]
    fn separated_means_exceed_threshold() {
        let a: Vec<f64> = (0..1000).map(|i| (i % 7) as f64 * 1e-6).collect();
        let b: Vec<f64> = (0..1000).map(|i| 1.0 + (i % 5) as f64 * 1e-6).collect();
        assert!(welch_t(&set(&a), &set(&b)).unwrap().abs() > 4.5);
    }

    #[test]
    fn zero_variance_sentinels() {
        let z = set(&[0.0; 10]);
        let o = set(&[1.0; 10]);
        assert_eq!(welch_t(&z, &z).unwrap(), 0.0);
        assert_eq!(welch_t(&z, &o).unwrap(), f64::NEG_INFINITY);
        assert_eq!(welch_t(&o, &z).unwrap(), f64::INFINITY);
    }

    #[test]
    fn too_few_values() {
        assert!(welch_t(&set(&[1.0]), &set(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn single_precision() {
        let a = SampleSet::new("a", vec![1.0f32, 2.0, 3.0, 4.0, 5.0]);
        let b = SampleSet::new("b", vec![2.0f32, 4.0, 6.0, 8.0, 10.0]);
        assert!((welch_t(&a, &b).unwrap() + 1.897_366_6).abs() < 1e-5);
    }

    #[test]
    fn interval_matches_table() {
        assert!((t_interval(0.95, 10).unwrap() - 2.228).abs() < 1e-3);
        let (lo, hi) = set(&[1.0, 2.0, 3.0]).mean_ci(0.95).unwrap();
        assert!(lo < 2.0 && hi > 2.0);
    }
}
