//! Granger causality in mean: bivariate regressions and conditional tests
//! inside a vector autoregression.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::CausalityError;

/// Lag order used for weekly (4) and daily (7) series.
pub fn default_lag(granularity: crate::tx::Granularity) -> usize {
    match granularity {
        crate::tx::Granularity::Daily => 7,
        crate::tx::Granularity::Weekly => 4,
    }
}

/// Relative size below which a pivot of the triangular factor counts as zero.
const RANK_TOL: f64 = 1e-9;

/// Least-squares fit of one equation.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
}

/// Ordinary least squares through a Householder QR factorisation.
pub fn ols(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit, CausalityError> {
    let (rows, cols) = design.shape();
    if rows <= cols {
        return Err(CausalityError::TooShort {
            len: rows,
            needed: cols + 1,
        });
    }
    let qr = design.clone().qr();
    let r = qr.r();
    for j in 0..cols {
        let col_norm = design.column(j).norm().max(f64::MIN_POSITIVE);
        if r[(j, j)].abs() <= RANK_TOL * col_norm {
            return Err(CausalityError::RankDeficient);
        }
    }
    let qty = qr.q().transpose() * y;
    let coefficients = r.solve_upper_triangular(&qty).ok_or(CausalityError::RankDeficient)?;
    let residuals = y - design * &coefficients;
    let rss = residuals.norm_squared();
    Ok(OlsFit {
        coefficients,
        residuals,
        rss,
    })
}

/// Zero mean, unit population variance. Constant columns are rank
/// deficient against the intercept.
pub fn standardize(xs: &[f64]) -> Result<Vec<f64>, CausalityError> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(CausalityError::NonFinite);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !(sd > 1e-12 * mean.abs().max(1e-300)) {
        return Err(CausalityError::RankDeficient);
    }
    Ok(xs.iter().map(|x| (x - mean) / sd).collect())
}

/// Regression of `series[target]` at times `lag..T` on an intercept and
/// lags `1..=lag` of every series in `regressors` (in that order).
fn lagged_regression(
    series: &[Vec<f64>],
    target: usize,
    regressors: &[usize],
    lag: usize,
) -> Result<OlsFit, CausalityError> {
    let t_len = series[target].len();
    let rows = t_len - lag;
    let cols = 1 + regressors.len() * lag;
    let mut design = DMatrix::<f64>::zeros(rows, cols);
    for r in 0..rows {
        let t = r + lag;
        design[(r, 0)] = 1.0;
        for (vi, &v) in regressors.iter().enumerate() {
            for k in 1..=lag {
                design[(r, 1 + vi * lag + (k - 1))] = series[v][t - k];
            }
        }
    }
    let y = DVector::from_iterator(rows, series[target][lag..].iter().copied());
    ols(&design, &y)
}

/// Outcome of one Granger F-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrangerTest {
    pub f_statistic: f64,
    pub p_value: f64,
    pub df1: usize,
    pub df2: usize,
    /// Sign of the summed lag coefficients of the cause in the effect's
    /// full-model equation: -1, 0 or +1.
    pub sign: i8,
}

fn f_test(rss_restricted: f64, rss_full: f64, df1: usize, df2: usize) -> Result<(f64, f64), CausalityError> {
    if df2 == 0 {
        return Err(CausalityError::TooShort { len: 0, needed: 1 });
    }
    let num = (rss_restricted - rss_full).max(0.0) / df1 as f64;
    if rss_full <= 0.0 {
        return Ok(if num > 0.0 { (f64::INFINITY, 0.0) } else { (0.0, 1.0) });
    }
    let f = num / (rss_full / df2 as f64);
    let dist = FisherSnedecor::new(df1 as f64, df2 as f64).map_err(|_| CausalityError::TooShort {
        len: df2,
        needed: 1,
    })?;
    let p = dist.sf(f).clamp(0.0, 1.0);
    Ok((f, p))
}

fn sign_of(sum: f64) -> i8 {
    if sum > 0.0 {
        1
    } else if sum < 0.0 {
        -1
    } else {
        0
    }
}

fn check_inputs(columns: &[&[f64]], lag: usize, needed: usize) -> Result<usize, CausalityError> {
    if lag == 0 {
        return Err(CausalityError::InvalidParameter("lag must be at least 1".into()));
    }
    let t = columns[0].len();
    if columns.iter().any(|c| c.len() != t) {
        return Err(CausalityError::LengthMismatch);
    }
    if t < needed {
        return Err(CausalityError::TooShort { len: t, needed });
    }
    Ok(t)
}

/// Does `x` Granger-cause `y`? Compares `y` on its own `lag` lags against
/// `y` on its own and `x`'s lags, both with an intercept. The F statistic
/// has `(lag, T - lag - 2 lag - 1)` degrees of freedom, `T - lag` being the
/// number of usable observations.
pub fn bivariate_granger(x: &[f64], y: &[f64], lag: usize) -> Result<GrangerTest, CausalityError> {
    check_inputs(&[x, y], lag, 3 * lag + 5)?;
    let series = vec![standardize(x)?, standardize(y)?];
    let restricted = lagged_regression(&series, 1, &[1], lag)?;
    let full = lagged_regression(&series, 1, &[1, 0], lag)?;
    let rows = x.len() - lag;
    let df2 = rows.saturating_sub(2 * lag + 1);
    let (f, p) = f_test(restricted.rss, full.rss, lag, df2)?;
    let sum: f64 = full.coefficients.rows(1 + lag, lag).iter().sum();
    Ok(GrangerTest {
        f_statistic: f,
        p_value: p,
        df1: lag,
        df2,
        sign: sign_of(sum),
    })
}

/// Conditional test for one ordered pair inside a VAR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalGranger {
    pub cause: usize,
    pub effect: usize,
    pub test: GrangerTest,
}

/// Conditional Granger causality for every ordered pair of columns of the
/// `T x n` matrix `data`.
///
/// For a pair `i -> j` the effect's equation in the full VAR(lag) is
/// compared with the same equation after dropping column `i` from the
/// system. Columns are standardized first.
pub fn multivariate_granger(data: &DMatrix<f64>, lag: usize) -> Result<Vec<ConditionalGranger>, CausalityError> {
    let (t, n) = data.shape();
    if n < 2 {
        return Err(CausalityError::InvalidParameter("need at least two series".into()));
    }
    let columns: Vec<Vec<f64>> = (0..n).map(|j| data.column(j).iter().copied().collect()).collect();
    let refs: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
    check_inputs(&refs, lag, n * lag + 10)?;
    let series = columns
        .iter()
        .map(|c| standardize(c))
        .collect::<Result<Vec<_>, _>>()?;

    let rows = t - lag;
    let df2 = rows.saturating_sub(n * lag + 1);
    let all: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n * (n - 1));
    for effect in 0..n {
        let full = lagged_regression(&series, effect, &all, lag)?;
        for cause in (0..n).filter(|&c| c != effect) {
            let reduced_set: Vec<usize> = all.iter().copied().filter(|&c| c != cause).collect();
            let reduced = lagged_regression(&series, effect, &reduced_set, lag)?;
            let (f, p) = f_test(reduced.rss, full.rss, lag, df2)?;
            let sum: f64 = full.coefficients.rows(1 + cause * lag, lag).iter().sum();
            out.push(ConditionalGranger {
                cause,
                effect,
                test: GrangerTest {
                    f_statistic: f,
                    p_value: p,
                    df1: lag,
                    df2,
                    sign: sign_of(sum),
                },
            });
        }
    }
    Ok(out)
}

/// Fitted VAR(lag) with intercept: `A_t = c + Σ_k B_k A_{t-k} + Ξ_t`.
#[derive(Debug, Clone)]
pub struct VarModel {
    pub lag: usize,
    pub intercept: DVector<f64>,
    /// `coefficients[k-1][(j, i)]`: effect of series `i` at lag `k` on `j`.
    pub coefficients: Vec<DMatrix<f64>>,
    /// `(T - lag) x n` residuals.
    pub residuals: DMatrix<f64>,
    pub rss: Vec<f64>,
}

/// Equation-by-equation least-squares VAR fit on unstandardized data.
pub fn fit_var(data: &DMatrix<f64>, lag: usize) -> Result<VarModel, CausalityError> {
    let (t, n) = data.shape();
    let columns: Vec<Vec<f64>> = (0..n).map(|j| data.column(j).iter().copied().collect()).collect();
    let refs: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
    check_inputs(&refs, lag, n * lag + 2)?;
    let all: Vec<usize> = (0..n).collect();
    let mut intercept = DVector::zeros(n);
    let mut coefficients = vec![DMatrix::zeros(n, n); lag];
    let mut residuals = DMatrix::zeros(t - lag, n);
    let mut rss = Vec::with_capacity(n);
    for j in 0..n {
        let fit = lagged_regression(&columns, j, &all, lag)?;
        intercept[j] = fit.coefficients[0];
        for i in 0..n {
            for (k, b) in coefficients.iter_mut().enumerate() {
                b[(j, i)] = fit.coefficients[1 + i * lag + k];
            }
        }
        residuals.set_column(j, &fit.residuals);
        rss.push(fit.rss);
    }
    Ok(VarModel {
        lag,
        intercept,
        coefficients,
        residuals,
        rss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let fit = ols(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn constant_cause_is_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = noise(&mut rng, 100);
        let x = vec![3.0; 100];
        assert_eq!(bivariate_granger(&x, &y, 2), Err(CausalityError::RankDeficient));
    }

    #[test]
    fn collinear_lags_are_rank_deficient() {
        let x = DMatrix::from_row_slice(4, 3, &[1.0, 1.0, 2.0, 1.0, 2.0, 4.0, 1.0, 3.0, 6.0, 1.0, 5.0, 10.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(ols(&x, &y), Err(CausalityError::RankDeficient)));
    }

    #[test]
    fn zero_lag_and_short_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = DMatrix::from_fn(50, 3, |_, _| StandardNormal.sample(&mut rng));
        assert!(matches!(multivariate_granger(&data, 0), Err(CausalityError::InvalidParameter(_))));
        let x = noise(&mut rng, 16);
        let y = noise(&mut rng, 16);
        assert!(matches!(bivariate_granger(&x, &y, 4), Err(CausalityError::TooShort { len: 16, needed: 17 })));
    }

    #[test]
    fn detects_planted_lag() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = noise(&mut rng, 500);
        let e = noise(&mut rng, 500);
        let y: Vec<f64> = (0..500).map(|t| if t == 0 { e[0] } else { 0.8 * x[t - 1] + e[t] }).collect();
        let g = bivariate_granger(&x, &y, 4).unwrap();
        assert!(g.p_value < 1e-10);
        assert_eq!(g.sign, 1);
        assert_eq!(g.df2, 500 - 4 - 9);
        let back = bivariate_granger(&y, &x, 4).unwrap();
        assert!(back.p_value > 1e-3);
    }

    #[test]
    fn bivariate_equals_two_column_var() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = noise(&mut rng, 300);
        let e = noise(&mut rng, 300);
        let y: Vec<f64> = (0..300).map(|t| if t < 2 { e[t] } else { -0.2 * x[t - 2] + 0.3 * e[t - 1] + e[t] }).collect();
        let biv = bivariate_granger(&x, &y, 3).unwrap();
        let mut data = DMatrix::zeros(300, 2);
        data.set_column(0, &DVector::from_vec(x.clone()));
        data.set_column(1, &DVector::from_vec(y.clone()));
        let mv = multivariate_granger(&data, 3).unwrap();
        let pair = mv.iter().find(|c| c.cause == 0 && c.effect == 1).unwrap();
        assert!((pair.test.f_statistic - biv.f_statistic).abs() <= 1e-9 * biv.f_statistic.abs().max(1.0));
        assert!((pair.test.p_value - biv.p_value).abs() <= 1e-9);
        assert_eq!(pair.test.sign, biv.sign);
    }

    #[test]
    fn affine_transforms_leave_p_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200;
        let mut data = DMatrix::from_fn(n, 3, |_, _| StandardNormal.sample(&mut rng));
        for t in 1..n {
            data[(t, 2)] += 0.4 * data[(t - 1, 0)];
        }
        let base = multivariate_granger(&data, 2).unwrap();
        let mut moved = data.clone();
        for t in 0..n {
            moved[(t, 0)] = 250.0 * moved[(t, 0)] - 17.0;
            moved[(t, 2)] = 0.003 * moved[(t, 2)] + 1e4;
        }
        let other = multivariate_granger(&moved, 2).unwrap();
        for (a, b) in base.iter().zip(&other) {
            assert!((a.test.p_value - b.test.p_value).abs() <= 1e-8, "{a:?} {b:?}");
            assert_eq!(a.test.sign, b.test.sign);
        }
    }
}
