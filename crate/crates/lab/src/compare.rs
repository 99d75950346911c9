//! Monte Carlo estimates checked against the exact chain solution.

use serde::Serialize;
use stubborn_usd_core::engine::TrialSpec;
use stubborn_usd_core::oracle::ExactChainSolution;
use stubborn_usd_core::{Configuration, ProtocolParams};

use crate::batch::run_batch;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McComparison {
    pub config: Configuration,
    pub trials: u64,
    pub exact: f64,
    pub empirical: f64,
    /// `(empirical - exact) / sqrt(exact (1 - exact) / trials)`; 0 when the
    /// exact value is 0 or 1 and matched, infinite when it is not matched.
    pub z_score: f64,
}

pub fn z_score(empirical: f64, exact: f64, trials: u64) -> f64 {
    let se = (exact * (1.0 - exact) / trials as f64).sqrt();
    if se > 0.0 {
        (empirical - exact) / se
    } else if empirical == exact {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Runs `trials` accelerated trials from `c` and compares the Opinion-1
/// win frequency with the exact probability.
pub fn compare_monte_carlo(
    sol: &ExactChainSolution,
    c: &Configuration,
    trials: u64,
    seed: u64,
    parallelism: usize,
) -> Result<McComparison> {
    if c.n() != sol.n {
        return Err(LabError::Invalid(format!(
            "configuration {c} does not have population {}",
            sol.n
        )));
    }
    let spec = TrialSpec::new(*c, ProtocolParams::new(sol.p)?, seed);
    let summary = run_batch(&spec, trials, parallelism)?;
    let empirical = summary.wins1 as f64 / trials as f64;
    let exact = sol.win1(c);
    Ok(McComparison {
        config: *c,
        trials,
        exact,
        empirical,
        z_score: z_score(empirical, exact, trials),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use stubborn_usd_core::oracle::solve_chain;

    #[test]
    fn certain_outcomes_have_zero_z() {
        let sol = solve_chain(8, 0.3).unwrap();
        let r = compare_monte_carlo(&sol, &Configuration::new(3, 0, 5).unwrap(), 500, 1, 2).unwrap();
        assert_eq!((r.exact, r.empirical, r.z_score), (1.0, 1.0, 0.0));
    }

    #[test]
    fn z_conventions() {
        assert_eq!(z_score(1.0, 1.0, 10), 0.0);
        assert!(z_score(0.9, 1.0, 10).is_infinite());
        assert!((z_score(0.6, 0.5, 100) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn swapped_opinions_at_p0() {
        let sol = solve_chain(9, 0.0).unwrap();
        let a = Configuration::new(3, 5, 1).unwrap();
        assert!((sol.win1(&a) - sol.win2(&a.mirrored())).abs() < 1e-12);
        let r = compare_monte_carlo(&sol, &a, 20_000, 5, 4).unwrap();
        assert!(r.z_score.abs() < 4.0, "{r:?}");
    }

    #[test]
    fn population_mismatch() {
        let sol = solve_chain(5, 0.5).unwrap();
        assert!(compare_monte_carlo(&sol, &Configuration::new(1, 1, 1).unwrap(), 10, 1, 1).is_err());
    }
}
