use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swarmplan_learner::{NoiseMode, NoiseWindow};

const STEPS: usize = 1_000_000;
const ENTRIES: (usize, usize) = (2, 2);

/// Lag autocovariances of `H - h` pooled over the entries of a table.
fn autocov(p: usize, sigma: f64, max_lag: usize, seed: u64) -> Vec<f64> {
    let mut w = NoiseWindow::new(p, NoiseMode::Innovation);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = Array2::from_elem(ENTRIES, 0.75);
    let k = ENTRIES.0 * ENTRIES.1;
    let burn = p;
    let mut series = vec![Vec::with_capacity(STEPS); k];
    for t in 0..STEPS + burn {
        let h = w.sample(&mean, sigma, &mut rng);
        if t >= burn {
            for (s, (a, m)) in series.iter_mut().zip(h.iter().zip(&mean)) {
                s.push(a - m);
            }
        }
    }
    (0..=max_lag)
        .map(|lag| {
            let mut acc = 0.0;
            for s in &series {
                let mu = s.iter().sum::<f64>() / s.len() as f64;
                acc += (0..s.len() - lag).map(|t| (s[t] - mu) * (s[t + lag] - mu)).sum::<f64>() / (s.len() - lag) as f64;
            }
            acc / k as f64
        })
        .collect()
}

#[test]
fn window_autocovariance_matches_the_moving_sum() {
    let sigma = 1.3;
    for (p, seed) in [(1, 1), (3, 2), (10, 3)] {
        let c = autocov(p, sigma, p + 2, seed);
        for (lag, &got) in c.iter().enumerate() {
            if lag < p {
                let want = (p - lag) as f64 * sigma / p as f64;
                assert!((got - want).abs() <= 0.05 * want, "p={p} lag={lag}: {got} vs {want}");
            } else {
                assert!(got.abs() <= 0.05 * sigma / p as f64, "p={p} lag={lag}: {got} should vanish");
            }
        }
        assert!((c[0] - sigma).abs() <= 0.02 * sigma, "p={p}: stationary variance {}", c[0]);
    }
}
