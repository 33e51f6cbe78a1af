use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use txnet_core::causality::{
    benjamini_hochberg, bivariate_granger, davis_conditional_quantile, fit_var, hong_statistic,
    multivariate_granger, tail_indicator, CausalityError, TailSide,
};

fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Direct transcription of the step-up definition: find the largest k with
/// p_(k) <= k q / m by scanning every k, then reject every p <= p_(k).
fn brute_force_bh(p: &[f64], q: f64) -> Vec<usize> {
    let m = p.len();
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut k_star = 0;
    for k in 1..=m {
        if sorted[k - 1] <= k as f64 * q / m as f64 {
            k_star = k;
        }
    }
    if k_star == 0 {
        return Vec::new();
    }
    let cut = sorted[k_star - 1];
    // A value tied with the cut at a later rank would itself satisfy the
    // bound, so everything at or below the cut is exactly the first k*.
    (0..m).filter(|&i| p[i] <= cut).collect()
}

#[test]
fn bh_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..1000 {
        let m = rng.random_range(1..60);
        let p: Vec<f64> = (0..m)
            .map(|_| {
                if rng.random_bool(0.3) {
                    rng.random_range(0.0..0.01)
                } else if rng.random_bool(0.1) {
                    (rng.random_range(0..20) as f64) / 20.0
                } else {
                    rng.random()
                }
            })
            .collect();
        let q = rng.random_range(0.01..0.3);
        assert_eq!(benjamini_hochberg(&p, q).unwrap(), brute_force_bh(&p, q), "case {case}");
    }
}

proptest! {
    #[test]
    fn bh_is_monotone_in_q(p in prop::collection::vec(0.0f64..=1.0, 1..80), q1 in 0.0f64..1.0, q2 in 0.0f64..1.0) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let a = benjamini_hochberg(&p, lo).unwrap();
        let b = benjamini_hochberg(&p, hi).unwrap();
        prop_assert!(a.iter().all(|i| b.contains(i)));
    }

    #[test]
    fn granger_p_is_affine_invariant(seed in any::<u64>(), a in 0.01f64..100.0, b in -1e3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = noise(&mut rng, 120);
        let e = noise(&mut rng, 120);
        let y: Vec<f64> = (0..120).map(|t| if t == 0 { e[0] } else { 0.3 * x[t - 1] + e[t] }).collect();
        let base = bivariate_granger(&x, &y, 3).unwrap();
        let moved: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let other = bivariate_granger(&moved, &y, 3).unwrap();
        prop_assert!((base.p_value - other.p_value).abs() <= 1e-8);
    }
}

#[test]
fn granger_size_and_power() {
    let mut false_pos = 0;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = noise(&mut rng, 500);
        let y = noise(&mut rng, 500);
        if bivariate_granger(&x, &y, 4).unwrap().p_value < 0.05 {
            false_pos += 1;
        }
    }
    let size = false_pos as f64 / 200.0;
    assert!((0.02..=0.09).contains(&size), "size {size}");

    let mut detected = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let x = noise(&mut rng, 500);
        let e = noise(&mut rng, 500);
        let y: Vec<f64> = (0..500).map(|t| if t == 0 { e[0] } else { 0.8 * x[t - 1] + e[t] }).collect();
        if bivariate_granger(&x, &y, 4).unwrap().p_value < 0.05 {
            detected += 1;
        }
    }
    assert!(detected >= 95, "power {detected}/100");
}

#[test]
fn conditional_test_detects_direct_link_among_nuisance() {
    let mut hits = 0;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let t = 400;
        let mut data = DMatrix::from_fn(t, 6, |_, _| StandardNormal.sample(&mut rng));
        for r in 1..t {
            data[(r, 1)] = 0.7 * data[(r - 1, 0)] + data[(r, 1)];
        }
        let res = multivariate_granger(&data, 4).unwrap();
        let pair = res.iter().find(|c| c.cause == 0 && c.effect == 1).unwrap();
        if pair.test.p_value < 0.05 {
            hits += 1;
        }
    }
    assert!(hits >= 45, "{hits}/50");
}

#[test]
fn var_recovers_coefficients() {
    let truth = [[0.5, 0.2, 0.0], [-0.3, 0.4, 0.1], [0.0, 0.25, -0.2]];
    let mut acc = [[0.0f64; 3]; 3];
    let seeds = 50;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        let t = 5000;
        let mut data = DMatrix::<f64>::zeros(t, 3);
        for r in 1..t {
            for j in 0..3 {
                let mut v: f64 = StandardNormal.sample(&mut rng);
                for i in 0..3 {
                    v += truth[j][i] * data[(r - 1, i)];
                }
                data[(r, j)] = v;
            }
        }
        let var = fit_var(&data, 1).unwrap();
        assert_eq!(var.residuals.nrows(), t - 1);
        for j in 0..3 {
            for i in 0..3 {
                acc[j][i] += var.coefficients[0][(j, i)] / seeds as f64;
            }
        }
    }
    for j in 0..3 {
        for i in 0..3 {
            assert!((acc[j][i] - truth[j][i]).abs() <= 0.05, "B[{j},{i}] = {}", acc[j][i]);
        }
    }
}

#[test]
fn hong_null_calibration() {
    let reps = 200;
    let (mut sum_q, mut rejected) = (0.0, 0);
    for seed in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<bool> = (0..1000).map(|_| rng.random_bool(0.1)).collect();
        let w: Vec<bool> = (0..1000).map(|_| rng.random_bool(0.1)).collect();
        let h = hong_statistic(&z, &w, 5.0).unwrap();
        sum_q += h.q;
        if h.p_value < 0.05 {
            rejected += 1;
        }
    }
    let mean_q = sum_q / reps as f64;
    let rate = rejected as f64 / reps as f64;
    assert!(mean_q.abs() <= 0.25, "mean Q {mean_q}");
    assert!((0.02..=0.10).contains(&rate), "rejection {rate}");
}

#[test]
fn davis_quantile_calibration() {
    let mut rates = Vec::new();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        let q = davis_conditional_quantile(&x, 0.9, 100, 0.1).unwrap();
        let ind = tail_indicator(&x, &q, TailSide::Right, 0.9).unwrap();
        let defined: Vec<bool> = ind.values.iter().flatten().copied().collect();
        rates.push(defined.iter().filter(|&&b| b).count() as f64 / defined.len() as f64);
    }
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    assert!((0.07..=0.13).contains(&mean), "exceedance {mean}");
}

#[test]
fn error_cases() {
    assert!(matches!(
        davis_conditional_quantile(&[1.0, 2.0], 1.0, 1, 0.1),
        Err(CausalityError::InvalidParameter(_))
    ));
    let q = davis_conditional_quantile(&[1.0, 2.0, 3.0], 0.5, 5, 0.1).unwrap();
    assert!(q.iter().all(Option::is_none));
    assert_eq!(benjamini_hochberg(&[-0.1], 0.05), Err(CausalityError::PValueOutOfRange(-0.1)));
}
