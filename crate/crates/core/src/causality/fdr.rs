//! Benjamini-Hochberg step-up procedure.

use super::CausalityError;

/// Indices (into `pvals`, ascending) of the hypotheses rejected at false
/// discovery rate `q`: every hypothesis whose rank is at most
/// `k* = max { k : p_(k) <= k q / m }`.
pub fn benjamini_hochberg(pvals: &[f64], q: f64) -> Result<Vec<usize>, CausalityError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(CausalityError::InvalidParameter(format!("FDR level {q} outside [0, 1]")));
    }
    if let Some(&p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(CausalityError::PValueOutOfRange(p));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]).then(a.cmp(&b)));
    let k_star = order
        .iter()
        .enumerate()
        .filter(|&(k, &i)| pvals[i] <= (k + 1) as f64 * q / m as f64)
        .map(|(k, _)| k + 1)
        .next_back()
        .unwrap_or(0);
    let mut rejected: Vec<usize> = order[..k_star].to_vec();
    rejected.sort_unstable();
    Ok(rejected)
}
