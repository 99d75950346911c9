//! Batches of coupled runs checking that the configuration order survives.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use stubborn_usd_core::coupling::{check_monotone_run, config_geq, MonotoneReport};
use stubborn_usd_core::engine::trial_rng;
use stubborn_usd_core::{Configuration, Error};

use crate::error::Result;

/// Stream reserved for drawing random instances, away from the run streams.
const INSTANCE_STREAM: u64 = 1 << 40;

/// One ordered pair of chains: `upper` at `p` dominates `lower` at `p_lower`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingInstance {
    pub upper: Configuration,
    pub p: f64,
    pub lower: Configuration,
    pub p_lower: f64,
}

impl CouplingInstance {
    pub fn validate(&self) -> Result<()> {
        self.upper.validate()?;
        self.lower.validate()?;
        for q in [self.p, self.p_lower] {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidStubbornness(q).into());
            }
        }
        if self.p < self.p_lower {
            return Err(Error::CouplingPrecondition("upper run needs p >= p~").into());
        }
        if !config_geq(&self.upper, &self.lower)? {
            return Err(Error::CouplingPrecondition("upper configuration must dominate the lower one").into());
        }
        Ok(())
    }
}

/// A random ordered pair on `n` agents.
pub fn random_instance<R: Rng + ?Sized>(n: u64, rng: &mut R) -> CouplingInstance {
    let x1 = rng.gen_range(0..=n);
    let x2 = rng.gen_range(0..=n - x1);
    let lower = Configuration { x1, x2, u: n - x1 - x2 };
    // move some agents up the order: first into Opinion 1, then 2 -> undecided
    let gain1 = rng.gen_range(0..=lower.x2 + lower.u);
    let mut upper = lower;
    let from_u = gain1.min(upper.u);
    upper.u -= from_u;
    upper.x2 -= gain1 - from_u;
    upper.x1 += gain1;
    let shift = rng.gen_range(0..=upper.x2);
    upper.x2 -= shift;
    upper.u += shift;
    let p_lower: f64 = rng.gen();
    let p = rng.gen_range(p_lower..=1.0);
    CouplingInstance { upper, p, lower, p_lower }
}

/// `count` random instances on `n` agents, reproducible from `seed`.
pub fn random_instances(n: u64, count: u64, seed: u64) -> Result<Vec<CouplingInstance>> {
    if n < 2 {
        return Err(Error::PopulationTooSmall(n).into());
    }
    let mut rng = trial_rng(seed, INSTANCE_STREAM);
    Ok((0..count).map(|_| random_instance(n, &mut rng)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoupledRun {
    pub run: u64,
    pub instance: CouplingInstance,
    pub report: MonotoneReport,
}

/// Runs every instance for `steps` interactions; run `i` is seeded with
/// `seed + i`.
pub fn run_coupled(
    instances: &[CouplingInstance],
    steps: u64,
    seed: u64,
    self_pairs: bool,
) -> Result<Vec<CoupledRun>> {
    for inst in instances {
        inst.validate()?;
    }
    instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let run = i as u64;
            let report = check_monotone_run(
                &inst.upper,
                inst.p,
                &inst.lower,
                inst.p_lower,
                steps,
                seed.wrapping_add(run),
                self_pairs,
            )?;
            Ok(CoupledRun { run, instance: *inst, report })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_instances_are_ordered() {
        for inst in random_instances(30, 500, 3).unwrap() {
            inst.validate().unwrap();
            assert_eq!(inst.upper.n(), 30);
        }
        assert!(random_instances(1, 1, 0).is_err());
    }

    #[test]
    fn identical_chains_stay_equal() {
        let c = Configuration::new(5, 9, 6).unwrap();
        let inst = CouplingInstance { upper: c, p: 0.4, lower: c, p_lower: 0.4 };
        let runs = run_coupled(&[inst], 5000, 11, false).unwrap();
        assert!(runs[0].report.preserved);
        assert_eq!(runs[0].report.final_upper, runs[0].report.final_lower);
    }

    #[test]
    fn reversed_order_rejected() {
        let inst = CouplingInstance {
            upper: Configuration::new(2, 8, 0).unwrap(),
            p: 0.5,
            lower: Configuration::new(4, 6, 0).unwrap(),
            p_lower: 0.5,
        };
        assert!(run_coupled(&[inst], 10, 0, false).is_err());
        let inst = CouplingInstance { p: 0.1, ..random_instance(10, &mut trial_rng(0, 0)) };
        let bad = CouplingInstance { p_lower: 0.2, ..inst };
        assert!(bad.validate().is_err());
    }
}
