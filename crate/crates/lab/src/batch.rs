//! Parallel execution of independent trials.
//!
//! Trial `i` always uses stream `i` of the trial seed, and results are
//! collected in index order, so the output does not depend on the number
//! of worker threads.

use rayon::prelude::*;
use stubborn_usd_core::engine::{run_indexed_trial, AbsorptionResult, BatchSummary, Trajectory, TrialSpec};

use crate::error::Result;

/// Caps the worker count when set.
pub const THREADS_ENV: &str = "STUBBORN_USD_THREADS";

/// Available cores, capped by `STUBBORN_USD_THREADS` when it parses to a
/// positive integer.
pub fn default_parallelism() -> usize {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(cap) if cap > 0 => cap.min(cores).max(1),
        _ => cores,
    }
}

pub fn thread_pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()?)
}

/// Runs trials `0..trials` on the current rayon pool.
pub fn trial_results(spec: &TrialSpec, trials: u64) -> Result<Vec<(AbsorptionResult, Option<Trajectory>)>> {
    spec.validate()?;
    (0..trials)
        .into_par_iter()
        .map(|i| run_indexed_trial(spec, i).map_err(Into::into))
        .collect()
}

/// Runs `trials` independent trials with `parallelism` worker threads.
pub fn run_batch(spec: &TrialSpec, trials: u64, parallelism: usize) -> Result<BatchSummary> {
    let pool = thread_pool(parallelism)?;
    let results = pool.install(|| trial_results(spec, trials))?;
    let results: Vec<AbsorptionResult> = results.into_iter().map(|(r, _)| r).collect();
    Ok(BatchSummary::from_results(&results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use stubborn_usd_core::engine::run_batch_sequential;
    use stubborn_usd_core::{Configuration, ProtocolParams};

    #[test]
    fn summary_independent_of_parallelism() {
        let spec = TrialSpec::new(
            Configuration::new(20, 30, 10).unwrap(),
            ProtocolParams::new(0.45).unwrap(),
            31,
        );
        let one = run_batch(&spec, 300, 1).unwrap();
        let four = run_batch(&spec, 300, 4).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, run_batch_sequential(&spec, 300).unwrap());
        assert_eq!(one.wins1 + one.wins2 + one.frozen + one.timeouts, 300);
    }

    #[test]
    fn opinion1_absent() {
        let spec = TrialSpec::new(
            Configuration::new(0, 7, 5).unwrap(),
            ProtocolParams::new(0.9).unwrap(),
            1,
        );
        let s = run_batch(&spec, 64, 3).unwrap();
        assert_eq!(s.wins2, 64);
    }
}
