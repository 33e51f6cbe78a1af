//! Hurwitz zeta function `ζ(s, q) = Σ_{k≥0} (k + q)^{-s}` for `s > 1`, `q > 0`.

/// Bernoulli numbers B_2, B_4, ..., B_16.
const BERNOULLI_EVEN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Euler-Maclaurin summation after shifting `q` past `s + 10`.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q > 0.0);
    let threshold = (s + 10.0).max(12.0);
    let mut sum = 0.0;
    let mut a = q;
    while a < threshold {
        sum += a.powf(-s);
        a += 1.0;
    }
    let a_pow = a.powf(-s);
    sum += a * a_pow / (s - 1.0) + 0.5 * a_pow;
    // t_j = s (s+1) ... (s+2j-2) a^{-s-2j+1} / (2j)!
    let inv_a2 = 1.0 / (a * a);
    let mut t = s * a_pow / a / 2.0;
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b * t;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        let k = 2.0 * (j as f64 + 1.0);
        t *= (s + k - 1.0) * (s + k) / ((k + 1.0) * (k + 2.0)) * inv_a2;
    }
    sum
}
