use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use txnet_core::netstats::{moments, percentiles, powerlaw_ks_test, DiscretePowerLaw};

/// Plain two-pass population moments.
fn naive(xs: &[u64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x as f64 - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    (mean, m2.sqrt(), m3 / m2.powf(1.5), m4 / (m2 * m2))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

fn heavy_sequence(rng: &mut ChaCha8Rng, n: usize) -> Vec<u64> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.random_range(1e-6..1.0);
            (u.powf(-1.0 / 1.6)).min(1e6) as u64
        })
        .collect()
}

#[test]
fn moments_match_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..60 {
        let n = rng.random_range(2..20_000);
        let xs = heavy_sequence(&mut rng, n);
        if xs.iter().all(|&x| x == xs[0]) {
            continue;
        }
        let m = moments(&xs).unwrap();
        let (mean, sd, g, k) = naive(&xs);
        assert!(close(m.mean, mean, 1e-10), "case {case}");
        assert!(close(m.std_dev, sd, 1e-10), "case {case}");
        assert!(close(m.skewness.unwrap(), g, 1e-10), "case {case}");
        assert!(close(m.kurtosis.unwrap(), k, 1e-10), "case {case}");
    }
}

#[test]
fn million_element_sequence() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let xs = heavy_sequence(&mut rng, 1_000_000);
    let m = moments(&xs).unwrap();
    let (mean, sd, g, k) = naive(&xs);
    assert!(close(m.mean, mean, 1e-10));
    assert!(close(m.std_dev, sd, 1e-10));
    assert!(close(m.skewness.unwrap(), g, 1e-10));
    assert!(close(m.kurtosis.unwrap(), k, 1e-10));
}

#[test]
fn constant_input_flags_higher_moments() {
    let m = moments(&[42; 1000]).unwrap();
    assert_eq!(m.std_dev, 0.0);
    assert!(m.skewness.is_none() && m.kurtosis.is_none());
}

#[test]
fn percentiles_are_order_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let xs = heavy_sequence(&mut rng, 999);
    let mut sorted = xs.clone();
    sorted.sort();
    let got = percentiles(&xs, &[0.25, 0.5, 0.9]).unwrap();
    assert_eq!(got, vec![sorted[249], sorted[499], sorted[899]]);
}

#[test]
fn powerlaw_null_rejection_rate() {
    let model = DiscretePowerLaw::new(2.5, 1);
    let reps = 200;
    let mut rejected = 0;
    for rep in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + rep);
        let xs: Vec<u64> = (0..1000).map(|_| model.sample(&mut rng)).collect();
        let fit = powerlaw_ks_test(&xs, 100, 5000 + rep).unwrap();
        if fit.p_value <= 0.05 {
            rejected += 1;
        }
    }
    let rate = rejected as f64 / reps as f64;
    assert!((0.02..=0.10).contains(&rate), "null rejection rate {rate}");
}

#[test]
fn powerlaw_rejects_geometric_tail() {
    let mut rejected = 0;
    for rep in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(77 + rep);
        let xs: Vec<u64> = (0..5000)
            .map(|_| {
                let u: f64 = rng.random();
                1 + (u.ln() / (1.0f64 - 0.05).ln()).floor() as u64
            })
            .collect();
        if powerlaw_ks_test(&xs, 100, rep).unwrap().p_value <= 0.05 {
            rejected += 1;
        }
    }
    assert!(rejected >= 8, "rejected only {rejected}/10");
}
