//! Distribution statistics of degree sequences.

mod powerlaw;
pub mod zeta;

pub use powerlaw::{
    fit_power_law, powerlaw_ks_test, DiscretePowerLaw, PowerLawEstimate, PowerLawFit, POWERLAW_MIN_SAMPLE,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    Empty,
    #[error("percentile level {0} is outside (0, 1)")]
    LevelOutOfRange(f64),
    #[error("sample of {n} positive values is below the minimum of {min}")]
    TooSmall { n: usize, min: usize },
    #[error("degenerate sample: all values equal")]
    Degenerate,
}

/// Population moments of a sample. Skewness and kurtosis are `None` when
/// the variance is zero. Kurtosis is the plain fourth standardized moment
/// (3 for a Gaussian).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
}

/// Mean, standard deviation, skewness and kurtosis with population
/// (divide-by-n) central moments.
///
/// Central moments are formed from exact integer power sums of the values
/// shifted by their minimum; when those overflow 128 bits a compensated
/// two-pass evaluation is used instead.
pub fn moments(xs: &[u64]) -> Result<MomentSet, StatsError> {
    let n = xs.len();
    if n == 0 {
        return Err(StatsError::Empty);
    }
    let min = *xs.iter().min().unwrap();
    match exact_central(xs, min) {
        Some(c) => Ok(c),
        None => Ok(two_pass(xs)),
    }
}

fn exact_central(xs: &[u64], min: u64) -> Option<MomentSet> {
    let n = xs.len() as i128;
    let (mut s1, mut s2, mut s3, mut s4) = (0i128, 0i128, 0i128, 0i128);
    for &x in xs {
        let y = (x - min) as i128;
        let y2 = y.checked_mul(y)?;
        let y3 = y2.checked_mul(y)?;
        let y4 = y3.checked_mul(y)?;
        s1 = s1.checked_add(y)?;
        s2 = s2.checked_add(y2)?;
        s3 = s3.checked_add(y3)?;
        s4 = s4.checked_add(y4)?;
    }
    let n2 = n.checked_mul(n)?;
    let n3 = n2.checked_mul(n)?;
    let s1_2 = s1.checked_mul(s1)?;
    let s1_3 = s1_2.checked_mul(s1)?;
    let s1_4 = s1_3.checked_mul(s1)?;
    // n^2 m2, n^3 m3, n^4 m4 as exact integers.
    let a2 = n.checked_mul(s2)?.checked_sub(s1_2)?;
    let a3 = n2
        .checked_mul(s3)?
        .checked_sub(n.checked_mul(s1)?.checked_mul(s2)?.checked_mul(3)?)?
        .checked_add(s1_3.checked_mul(2)?)?;
    let a4 = n3
        .checked_mul(s4)?
        .checked_sub(n2.checked_mul(s1)?.checked_mul(s3)?.checked_mul(4)?)?
        .checked_add(n.checked_mul(s1_2)?.checked_mul(s2)?.checked_mul(6)?)?
        .checked_sub(s1_4.checked_mul(3)?)?;

    let nf = n as f64;
    let mean = min as f64 + s1 as f64 / nf;
    let a2f = a2 as f64;
    let std_dev = a2f.sqrt() / nf;
    let (skewness, kurtosis) = if a2 == 0 {
        (None, None)
    } else {
        (Some(a3 as f64 / (a2f * a2f.sqrt())), Some(a4 as f64 / (a2f * a2f)))
    };
    Some(MomentSet {
        n: xs.len(),
        mean,
        std_dev,
        skewness,
        kurtosis,
    })
}

struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn new() -> Self {
        Neumaier { sum: 0.0, c: 0.0 }
    }

    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.c
    }
}

fn two_pass(xs: &[u64]) -> MomentSet {
    let nf = xs.len() as f64;
    let mut acc = Neumaier::new();
    for &x in xs {
        acc.add(x as f64);
    }
    let mean = acc.total() / nf;
    let (mut m2, mut m3, mut m4) = (Neumaier::new(), Neumaier::new(), Neumaier::new());
    for &x in xs {
        let d = x as f64 - mean;
        let d2 = d * d;
        m2.add(d2);
        m3.add(d2 * d);
        m4.add(d2 * d2);
    }
    let (m2, m3, m4) = (m2.total() / nf, m3.total() / nf, m4.total() / nf);
    let defined = m2 > 0.0;
    MomentSet {
        n: xs.len(),
        mean,
        std_dev: m2.max(0.0).sqrt(),
        skewness: defined.then(|| m3 / m2.powf(1.5)),
        kurtosis: defined.then(|| m4 / (m2 * m2)),
    }
}

/// Nearest-rank percentiles: the `ceil(q n)`-th smallest value for each
/// level `q` in (0, 1).
pub fn percentiles(xs: &[u64], qs: &[f64]) -> Result<Vec<u64>, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::Empty);
    }
    if let Some(&q) = qs.iter().find(|&&q| !(q > 0.0 && q < 1.0)) {
        return Err(StatsError::LevelOutOfRange(q));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_unstable();
    Ok(qs.iter().map(|&q| sorted[nearest_rank(q, sorted.len()) - 1]).collect())
}

/// 1-based nearest rank, guarding against `q * n` landing a hair above an
/// integer through rounding.
pub(crate) fn nearest_rank(q: f64, n: usize) -> usize {
    let r = (q * n as f64 - 1e-9).ceil() as usize;
    r.clamp(1, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_sequence() {
        let m = moments(&[5, 5, 5]).unwrap();
        assert_eq!(m.mean, 5.0);
        assert_eq!(m.std_dev, 0.0);
        assert_eq!(m.skewness, None);
        assert_eq!(m.kurtosis, None);
    }

    #[test]
    fn one_two_three() {
        let m = moments(&[1, 2, 3]).unwrap();
        assert_eq!(m.mean, 2.0);
        assert!((m.std_dev - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((m.std_dev - 0.81650).abs() < 1e-5);
        assert_eq!(m.skewness, Some(0.0));
        // m4 = 2/3, m2^2 = 4/9
        assert!((m.kurtosis.unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn symmetric_has_zero_skew() {
        let m = moments(&[0, 1, 1, 4, 7, 7, 8]).unwrap();
        assert_eq!(m.skewness, Some(0.0));
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(moments(&[]), Err(StatsError::Empty));
    }

    #[test]
    fn overflow_falls_back_to_two_pass() {
        let xs = [0u64, 1 << 40, 3 << 40, 1 << 41];
        let m = moments(&xs).unwrap();
        let mean = (xs.iter().map(|&x| x as f64).sum::<f64>()) / 4.0;
        assert!((m.mean - mean).abs() / mean < 1e-15);
        assert!(m.skewness.is_some());
    }

    #[test]
    fn nearest_rank_percentiles() {
        let xs: Vec<u64> = (1..=100).collect();
        assert_eq!(percentiles(&xs, &[0.5]).unwrap(), vec![50]);
        assert_eq!(percentiles(&xs, &[0.95, 0.99, 0.01]).unwrap(), vec![95, 99, 1]);
        assert_eq!(percentiles(&[7], &[0.01, 0.5, 0.99]).unwrap(), vec![7, 7, 7]);
        assert_eq!(percentiles(&xs, &[1.0]), Err(StatsError::LevelOutOfRange(1.0)));
        assert_eq!(percentiles(&xs, &[0.0]), Err(StatsError::LevelOutOfRange(0.0)));
        assert_eq!(percentiles(&[], &[0.5]), Err(StatsError::Empty));
    }

    #[test]
    fn nearest_rank_definition_oracle() {
        // ceil(q n) computed in exact rational arithmetic on q = k/1000.
        let xs: Vec<u64> = (0..37).map(|i| (i * 7919) % 101).collect();
        let mut sorted = xs.clone();
        sorted.sort();
        for k in 1..1000u64 {
            let q = k as f64 / 1000.0;
            let n = xs.len() as u64;
            let rank = (k * n).div_ceil(1000);
            assert_eq!(percentiles(&xs, &[q]).unwrap()[0], sorted[rank as usize - 1], "q={q}");
        }
    }

    proptest! {
        #[test]
        fn translation_moves_only_the_mean(xs in prop::collection::vec(0u64..10_000, 2..300), c in 0u64..1_000_000) {
            let a = moments(&xs).unwrap();
            let shifted: Vec<u64> = xs.iter().map(|x| x + c).collect();
            let b = moments(&shifted).unwrap();
            prop_assert!((b.mean - (a.mean + c as f64)).abs() <= 1e-12 * b.mean.abs().max(1.0));
            prop_assert!((a.std_dev - b.std_dev).abs() <= 1e-12 * a.std_dev.max(1.0));
            prop_assert_eq!(a.skewness.is_some(), b.skewness.is_some());
            if let (Some(x), Some(y)) = (a.skewness, b.skewness) { prop_assert!((x - y).abs() <= 1e-12); }
            if let (Some(x), Some(y)) = (a.kurtosis, b.kurtosis) { prop_assert!((x - y).abs() <= 1e-12 * x.abs()); }
        }

        #[test]
        fn scaling_multiplies_sigma(xs in prop::collection::vec(0u64..10_000, 2..300), c in 1u64..1000) {
            let a = moments(&xs).unwrap();
            let scaled: Vec<u64> = xs.iter().map(|x| x * c).collect();
            let b = moments(&scaled).unwrap();
            prop_assert!((b.std_dev - c as f64 * a.std_dev).abs() <= 1e-9 * b.std_dev.max(1.0));
            if let (Some(x), Some(y)) = (a.skewness, b.skewness) { prop_assert!((x - y).abs() <= 1e-9); }
            if let (Some(x), Some(y)) = (a.kurtosis, b.kurtosis) { prop_assert!((x - y).abs() <= 1e-9 * x.abs()); }
        }
    }
}
