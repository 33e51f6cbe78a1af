//! Granger causality in tail: conditional quantiles with a feedback
//! correction, tail indicators and the kernel-weighted cross-correlation test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::CausalityError;
use crate::netstats::nearest_rank;
use crate::tx::Granularity;

/// Default feedback gain of the conditional quantile correction.
pub const DEFAULT_PHI: f64 = 0.1;

/// Rolling quantile window: about one month of daily data, two months of
/// weekly data.
pub fn default_quantile_window(granularity: Granularity) -> usize {
    match granularity {
        Granularity::Daily => 30,
        Granularity::Weekly => 9,
    }
}

/// Default kernel bandwidth.
pub fn default_bandwidth(granularity: Granularity) -> usize {
    match granularity {
        Granularity::Daily => 5,
        Granularity::Weekly => 3,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TailSide {
    Left,
    Right,
}

impl TailSide {
    pub const ALL: [TailSide; 2] = [TailSide::Left, TailSide::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            TailSide::Left => "left",
            TailSide::Right => "right",
        }
    }

    /// Tail level used for the quantile on this side.
    pub fn default_level(self) -> f64 {
        match self {
            TailSide::Left => 0.1,
            TailSide::Right => 0.9,
        }
    }
}

impl fmt::Display for TailSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TailSide {
    type Err = CausalityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(TailSide::Left),
            "right" => Ok(TailSide::Right),
            other => Err(CausalityError::InvalidParameter(format!("unknown tail side {other:?}"))),
        }
    }
}

/// Rolling `alpha`-quantile over the previous `window` observations with
/// the feedback correction `q_t = q̂_t + φ (y̌_{t-1} - (1 - α))`, where
/// `y̌` is the running exceedance rate `x > q` over the defined points so
/// far. The first `window` points are undefined.
pub fn davis_conditional_quantile(
    x: &[f64],
    alpha: f64,
    window: usize,
    phi: f64,
) -> Result<Vec<Option<f64>>, CausalityError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CausalityError::InvalidParameter(format!("tail level {alpha} outside (0, 1)")));
    }
    if window == 0 {
        return Err(CausalityError::InvalidParameter("quantile window must be positive".into()));
    }
    if !phi.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(CausalityError::NonFinite);
    }
    let rank = nearest_rank(alpha, window);
    let mut out = vec![None; x.len()];
    let mut buf = Vec::with_capacity(window);
    let (mut exceed, mut seen) = (0usize, 0usize);
    for t in window..x.len() {
        buf.clear();
        buf.extend_from_slice(&x[t - window..t]);
        buf.sort_unstable_by(|a, b| a.total_cmp(b));
        let plain = buf[rank - 1];
        let q = if seen == 0 {
            plain
        } else {
            plain + phi * (exceed as f64 / seen as f64 - (1.0 - alpha))
        };
        out[t] = Some(q);
        seen += 1;
        if x[t] > q {
            exceed += 1;
        }
    }
    Ok(out)
}

/// Binary tail-event series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailIndicator {
    pub side: TailSide,
    pub alpha: f64,
    pub quantiles: Vec<Option<f64>>,
    pub values: Vec<Option<bool>>,
}

impl TailIndicator {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn undefined_prefix(&self) -> usize {
        self.values.iter().take_while(|v| v.is_none()).count()
    }
}

/// `Z_t = x_t > q_t` on the right side, `x_t < q_t` on the left. Ties are
/// not events.
pub fn tail_indicator(
    x: &[f64],
    q: &[Option<f64>],
    side: TailSide,
    alpha: f64,
) -> Result<TailIndicator, CausalityError> {
    if x.len() != q.len() {
        return Err(CausalityError::LengthMismatch);
    }
    let values = x
        .iter()
        .zip(q)
        .map(|(&v, q)| {
            q.map(|q| match side {
                TailSide::Right => v > q,
                TailSide::Left => v < q,
            })
        })
        .collect();
    Ok(TailIndicator {
        side,
        alpha,
        quantiles: q.to_vec(),
        values,
    })
}

/// Indicator built from a series with the default level for `side`.
pub fn tail_events(
    x: &[f64],
    side: TailSide,
    window: usize,
    phi: f64,
) -> Result<TailIndicator, CausalityError> {
    let alpha = side.default_level();
    let q = davis_conditional_quantile(x, alpha, window, phi)?;
    tail_indicator(x, &q, side, alpha)
}

/// Result of the tail causality test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HongStatistic {
    pub q: f64,
    pub bandwidth: f64,
    pub kernel: &'static str,
    /// `rho[l - 1]` is the correlation at lag `l`.
    pub rho: Vec<f64>,
    pub centering: f64,
    pub scaling: f64,
    pub p_value: f64,
    pub t: usize,
}

impl HongStatistic {
    /// Direction of the dominant lagged association: sign of `Σ K² ρ̂`.
    pub fn sign(&self) -> i8 {
        let s: f64 = self
            .rho
            .iter()
            .enumerate()
            .map(|(i, r)| daniell((i + 1) as f64 / self.bandwidth).powi(2) * r)
            .sum();
        if s > 0.0 {
            1
        } else if s < 0.0 {
            -1
        } else {
            0
        }
    }
}

/// Daniell kernel `sin(πz) / (πz)`, equal to 1 at zero.
pub fn daniell(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        (PI * z).sin() / (PI * z)
    }
}

/// Does the cause indicator `z` help predict the effect indicator `w`?
/// Leading undefined points are dropped from both; whatever remains must
/// be fully defined and of equal length.
pub fn hong_tail_test(cause: &TailIndicator, effect: &TailIndicator, bandwidth: f64) -> Result<HongStatistic, CausalityError> {
    if cause.len() != effect.len() {
        return Err(CausalityError::LengthMismatch);
    }
    let start = cause.undefined_prefix().max(effect.undefined_prefix());
    let collect = |ind: &TailIndicator| -> Result<Vec<bool>, CausalityError> {
        ind.values[start..]
            .iter()
            .map(|v| v.ok_or(CausalityError::Undefined))
            .collect()
    };
    hong_statistic(&collect(cause)?, &collect(effect)?, bandwidth)
}

/// Test statistic on raw 0/1 series; `z` is the cause and `w` the effect.
pub fn hong_statistic(z: &[bool], w: &[bool], bandwidth: f64) -> Result<HongStatistic, CausalityError> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(CausalityError::InvalidParameter(format!("bandwidth {bandwidth} must be positive")));
    }
    if z.len() != w.len() {
        return Err(CausalityError::LengthMismatch);
    }
    let t = z.len();
    let needed = (4.0 * bandwidth).ceil() as usize;
    if t < needed.max(2) {
        return Err(CausalityError::TooShort { len: t, needed });
    }
    let rate = |s: &[bool]| s.iter().filter(|&&b| b).count() as f64 / t as f64;
    let (pz, pw) = (rate(z), rate(w));
    if pz == 0.0 || pz == 1.0 || pw == 0.0 || pw == 1.0 {
        return Err(CausalityError::Degenerate);
    }
    let sz = (pz * (1.0 - pz)).sqrt();
    let sw = (pw * (1.0 - pw)).sqrt();
    let zc: Vec<f64> = z.iter().map(|&b| b as u8 as f64 - pz).collect();
    let wc: Vec<f64> = w.iter().map(|&b| b as u8 as f64 - pw).collect();
    let tf = t as f64;
    let norm = tf * sz * sw;

    let mut rho = Vec::with_capacity(t - 1);
    let (mut weighted, mut centering, mut scaling) = (0.0, 0.0, 0.0);
    for l in 1..t {
        let c: f64 = wc[l..].iter().zip(&zc[..t - l]).map(|(a, b)| a * b).sum();
        let r = c / norm;
        rho.push(r);
        let k2 = daniell(l as f64 / bandwidth).powi(2);
        let lf = l as f64;
        weighted += k2 * r * r;
        centering += (1.0 - lf / tf) * k2;
        scaling += (1.0 - lf / tf) * (1.0 - (lf + 1.0) / tf) * k2 * k2;
    }
    scaling *= 2.0;
    if !(scaling > 0.0) {
        return Err(CausalityError::TooShort { len: t, needed });
    }
    let q = (tf * weighted - centering) / scaling.sqrt();
    let p_value = Normal::standard().sf(q).clamp(0.0, 1.0);
    Ok(HongStatistic {
        q,
        bandwidth,
        kernel: "daniell",
        rho,
        centering,
        scaling,
        p_value,
        t,
    })
}
