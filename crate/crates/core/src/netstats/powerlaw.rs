//! Discrete power-law fitting with a Kolmogorov-Smirnov goodness-of-fit
//! test.
//!
//! One KS distance selects the lower cutoff `x_min`; a second compares the
//! observed distance with the distances of bootstrap samples drawn from the
//! fitted model, each refitted from scratch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::zeta::hurwitz_zeta;
use super::{nearest_rank, StatsError};
use crate::rng::replicate_seed;

/// Fewer positive observations than this are rejected.
pub const POWERLAW_MIN_SAMPLE: usize = 50;
/// `x_min` candidates stop at this quantile so the tail keeps at least
/// a tenth of the sample.
const XMIN_MAX_QUANTILE: f64 = 0.9;
const ALPHA_LO: f64 = 1.0 + 1e-6;
const ALPHA_HI: f64 = 25.0;
/// Exact inverse-CDF table length for the sampler.
const SAMPLER_TABLE: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawEstimate {
    pub alpha: f64,
    pub x_min: u64,
    pub ks_distance: f64,
    pub n_tail: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub x_min: u64,
    pub ks_distance: f64,
    pub p_value: f64,
    /// Number of positive observations used.
    pub n: usize,
    pub n_tail: usize,
    pub n_bootstrap: usize,
}

/// Tail of a sorted sample starting at `x_min`, as unique values with
/// cumulative counts.
struct Tail<'a> {
    values: &'a [u64],
    counts: &'a [usize],
    n: usize,
    log_sum: f64,
}

struct Prepared {
    /// Unique positive values, ascending.
    uniq: Vec<u64>,
    /// Multiplicity of each unique value.
    mult: Vec<usize>,
    /// Suffix sums of multiplicity and of `m * ln(x)`.
    suffix_n: Vec<usize>,
    suffix_log: Vec<f64>,
    n_candidates: usize,
}

impl Prepared {
    fn new(sorted: &[u64]) -> Prepared {
        let mut uniq = Vec::new();
        let mut mult: Vec<usize> = Vec::new();
        for &x in sorted {
            if uniq.last() == Some(&x) {
                *mult.last_mut().unwrap() += 1;
            } else {
                uniq.push(x);
                mult.push(1);
            }
        }
        let k = uniq.len();
        let mut suffix_n = vec![0usize; k + 1];
        let mut suffix_log = vec![0.0f64; k + 1];
        for i in (0..k).rev() {
            suffix_n[i] = suffix_n[i + 1] + mult[i];
            suffix_log[i] = suffix_log[i + 1] + mult[i] as f64 * (uniq[i] as f64).ln();
        }
        let cap = sorted[nearest_rank(XMIN_MAX_QUANTILE, sorted.len()) - 1];
        // A candidate needs at least two distinct values in its tail.
        let n_candidates = uniq
            .iter()
            .enumerate()
            .take_while(|&(i, &u)| u <= cap && i + 1 < k)
            .count();
        Prepared {
            uniq,
            mult,
            suffix_n,
            suffix_log,
            n_candidates,
        }
    }

    fn tail(&self, i: usize) -> Tail<'_> {
        Tail {
            values: &self.uniq[i..],
            counts: &self.mult[i..],
            n: self.suffix_n[i],
            log_sum: self.suffix_log[i],
        }
    }
}

fn log_likelihood(alpha: f64, tail: &Tail<'_>) -> f64 {
    let x_min = tail.values[0] as f64;
    -(tail.n as f64) * hurwitz_zeta(alpha, x_min).ln() - alpha * tail.log_sum
}

/// Discrete maximum-likelihood exponent for a tail. The log-likelihood is
/// concave in `alpha`, so a golden-section search is exact up to its
/// tolerance.
fn mle_alpha(tail: &Tail<'_>) -> f64 {
    let x_min = tail.values[0] as f64;
    // Continuous approximation as a starting bracket.
    let approx = 1.0 + tail.n as f64 / (tail.log_sum - tail.n as f64 * (x_min - 0.5).ln());
    let approx = if approx.is_finite() { approx.clamp(ALPHA_LO, ALPHA_HI) } else { 2.5 };
    let mut lo = (approx - 0.75).max(ALPHA_LO);
    let mut hi = (approx + 0.75).min(ALPHA_HI);
    let mut best = golden_max(|a| log_likelihood(a, tail), lo, hi);
    if (best - lo).abs() < 1e-5 && lo > ALPHA_LO || (hi - best).abs() < 1e-5 && hi < ALPHA_HI {
        lo = ALPHA_LO;
        hi = ALPHA_HI;
        best = golden_max(|a| log_likelihood(a, tail), lo, hi);
    }
    best
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-7 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Supremum over all integers `x >= x_min` of `|F_n(x) - F(x)|`.
fn ks_distance(alpha: f64, tail: &Tail<'_>) -> f64 {
    let x_min = tail.values[0] as f64;
    let z0 = hurwitz_zeta(alpha, x_min);
    let n = tail.n as f64;
    let mut cum = 0usize;
    let mut d: f64 = 0.0;
    let mut zeta_here = z0;
    for i in 0..tail.values.len() {
        let u = tail.values[i] as f64;
        if i > 0 {
            // Model CDF just before u equals its value at u - 1; the
            // empirical CDF there still holds the previous step.
            zeta_here = hurwitz_zeta(alpha, u);
            let f_before = 1.0 - zeta_here / z0;
            d = d.max((cum as f64 / n - f_before).abs());
        }
        cum += tail.counts[i];
        let f_at = 1.0 - (zeta_here - u.powf(-alpha)) / z0;
        d = d.max((cum as f64 / n - f_at).abs());
    }
    d
}

fn best_fit(prep: &Prepared) -> Option<PowerLawEstimate> {
    let mut best: Option<PowerLawEstimate> = None;
    for i in 0..prep.n_candidates {
        let tail = prep.tail(i);
        let alpha = mle_alpha(&tail);
        let ks = ks_distance(alpha, &tail);
        if best.is_none_or(|b| ks < b.ks_distance) {
            best = Some(PowerLawEstimate {
                alpha,
                x_min: tail.values[0],
                ks_distance: ks,
                n_tail: tail.n,
            });
        }
    }
    best
}

fn positive_sorted(xs: &[u64]) -> Vec<u64> {
    let mut v: Vec<u64> = xs.iter().copied().filter(|&x| x > 0).collect();
    v.sort_unstable();
    v
}

/// Fits `x_min` and `alpha` without the bootstrap. Zeros are outside the
/// support and dropped.
pub fn fit_power_law(xs: &[u64]) -> Result<PowerLawEstimate, StatsError> {
    let sorted = positive_sorted(xs);
    if sorted.len() < POWERLAW_MIN_SAMPLE {
        return Err(StatsError::TooSmall {
            n: sorted.len(),
            min: POWERLAW_MIN_SAMPLE,
        });
    }
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(StatsError::Degenerate);
    }
    best_fit(&Prepared::new(&sorted)).ok_or(StatsError::Degenerate)
}

/// Power-law goodness-of-fit test with a semi-parametric bootstrap.
///
/// Each synthetic sample keeps the original size; a value is drawn from the
/// fitted power law with probability `n_tail / n` and otherwise resampled
/// from the observations below `x_min`. The p-value is the fraction of
/// refitted synthetic samples whose KS distance is at least the observed
/// one. Replicate `i` uses an RNG seeded from `(seed, i)` so results do
/// not depend on scheduling.
pub fn powerlaw_ks_test(xs: &[u64], n_bootstrap: usize, seed: u64) -> Result<PowerLawFit, StatsError> {
    let sorted = positive_sorted(xs);
    let est = fit_power_law(&sorted)?;
    let n = sorted.len();
    let body = &sorted[..n - est.n_tail];
    let model = DiscretePowerLaw::new(est.alpha, est.x_min);
    let tail_prob = est.n_tail as f64 / n as f64;

    let outcomes: Vec<Option<bool>> = (0..n_bootstrap as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(seed, rep));
            let mut sample: Vec<u64> = (0..n)
                .map(|_| {
                    if body.is_empty() || rng.random::<f64>() < tail_prob {
                        model.sample(&mut rng)
                    } else {
                        body[rng.random_range(0..body.len())]
                    }
                })
                .collect();
            sample.sort_unstable();
            if sample[0] == sample[n - 1] {
                return None;
            }
            best_fit(&Prepared::new(&sample)).map(|b| b.ks_distance >= est.ks_distance)
        })
        .collect();
    let valid = outcomes.iter().flatten().count();
    let exceed = outcomes.iter().flatten().filter(|&&e| e).count();
    let p_value = if valid == 0 { 1.0 } else { exceed as f64 / valid as f64 };
    Ok(PowerLawFit {
        alpha: est.alpha,
        x_min: est.x_min,
        ks_distance: est.ks_distance,
        p_value,
        n,
        n_tail: est.n_tail,
        n_bootstrap,
    })
}

/// Discrete power law `P(X = x) = x^{-alpha} / ζ(alpha, x_min)` on
/// `x >= x_min`, sampled by inversion.
#[derive(Debug, Clone)]
pub struct DiscretePowerLaw {
    alpha: f64,
    x_min: u64,
    norm: f64,
    /// `ccdf[k] = P(X >= x_min + k)`.
    ccdf: Vec<f64>,
}

impl DiscretePowerLaw {
    pub fn new(alpha: f64, x_min: u64) -> Self {
        assert!(alpha > 1.0 && x_min >= 1);
        let norm = hurwitz_zeta(alpha, x_min as f64);
        let mut ccdf = vec![0.0; SAMPLER_TABLE];
        // Summing upward from the far end keeps every entry accurate.
        let mut z = hurwitz_zeta(alpha, (x_min + SAMPLER_TABLE as u64) as f64);
        for k in (0..SAMPLER_TABLE).rev() {
            z += ((x_min + k as u64) as f64).powf(-alpha);
            ccdf[k] = z / norm;
        }
        DiscretePowerLaw {
            alpha,
            x_min,
            norm,
            ccdf,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn x_min(&self) -> u64 {
        self.x_min
    }

    /// `P(X >= x)`.
    pub fn ccdf(&self, x: u64) -> f64 {
        if x <= self.x_min {
            1.0
        } else {
            hurwitz_zeta(self.alpha, x as f64) / self.norm
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = 1.0 - rng.random::<f64>();
        let k = self.ccdf.partition_point(|&c| c >= u);
        if k < self.ccdf.len() {
            return self.x_min + k as u64 - 1;
        }
        // Beyond the table ζ(alpha, x) ≈ (x - 1/2)^{1-alpha} / (alpha - 1).
        let x = 0.5 + (u * (self.alpha - 1.0) * self.norm).powf(-1.0 / (self.alpha - 1.0));
        (x.floor() as u64).max(self.x_min + self.ccdf.len() as u64 - 1)
    }
}
