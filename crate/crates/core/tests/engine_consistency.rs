use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stubborn_usd_core::engine::{run_indexed_trial, trial_rng, Outcome, TrialSpec};
use stubborn_usd_core::oracle::solve_chain;
use stubborn_usd_core::step::sample_step;
use stubborn_usd_core::{Configuration, ProtocolParams};

/// Plain interaction-by-interaction run to consensus.
fn plain_run(c: Configuration, params: &ProtocolParams, rng: &mut ChaCha8Rng) -> bool {
    let mut c = c;
    loop {
        if let Some(o) = c.consensus_opinion() {
            return o == stubborn_usd_core::Opinion::One;
        }
        c = sample_step(&c, params, rng).unwrap().next;
    }
}

#[test]
fn accelerated_and_plain_absorption_agree() {
    let cases = [
        (Configuration { x1: 2, x2: 3, u: 1 }, 0.3),
        (Configuration { x1: 1, x2: 2, u: 2 }, 0.7),
        (Configuration { x1: 2, x2: 2, u: 0 }, 0.0),
    ];
    for (k, (c, p)) in cases.into_iter().enumerate() {
        let params = ProtocolParams::new(p).unwrap();
        let m = 100_000u64;
        let spec = TrialSpec::new(c, params, 40 + k as u64);
        let fast = (0..m)
            .filter(|&i| run_indexed_trial(&spec, i).unwrap().0.outcome == Outcome::Winner1)
            .count() as f64
            / m as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(900 + k as u64);
        let slow = (0..m).filter(|_| plain_run(c, &params, &mut rng)).count() as f64 / m as f64;
        let exact = solve_chain(c.n(), p).unwrap().win1(&c);
        let se = (exact * (1.0 - exact) / m as f64).sqrt();
        assert!((fast - slow).abs() <= 3.0 * se * 2f64.sqrt(), "{c}: {fast} vs {slow}");
        assert!((fast - exact).abs() <= 4.0 * se, "{c}: {fast} vs exact {exact}");
    }
}

#[test]
fn mean_absorption_time_matches_oracle() {
    let c = Configuration { x1: 3, x2: 4, u: 1 };
    let params = ProtocolParams::new(0.5).unwrap();
    let sol = solve_chain(8, 0.5).unwrap();
    let spec = TrialSpec::new(c, params, 12);
    let m = 50_000u64;
    let times: Vec<f64> = (0..m)
        .map(|i| run_indexed_trial(&spec, i).unwrap().0.interactions as f64)
        .collect();
    let mean = times.iter().sum::<f64>() / m as f64;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    let exact = sol.exp_time(&c).unwrap();
    assert!((mean - exact).abs() <= 4.0 * (var / m as f64).sqrt(), "{mean} vs {exact}");
}

#[test]
fn streams_differ_by_index_and_seed() {
    use rand::RngCore;
    let a = trial_rng(1, 0).next_u64();
    assert_ne!(a, trial_rng(1, 1).next_u64());
    assert_ne!(a, trial_rng(2, 0).next_u64());
    assert_eq!(a, trial_rng(1, 0).next_u64());
}
