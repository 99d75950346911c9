//! Single trials to absorption and batch summaries.
//!
//! Randomness: every trial owns a ChaCha8 stream. The key is derived from
//! the 64-bit batch seed with `ChaCha8Rng::seed_from_u64(seed)` and the
//! trial index selects the 64-bit stream (`set_stream(index)`), so trial
//! `i` of a batch is reproducible on its own and independent of how the
//! batch is scheduled across threads.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::step::sample_productive_step;
use crate::{Configuration, Error, Opinion, ProtocolParams, Result};

/// Stream for trial `index` of a batch seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `ceil(200 n (ln n)^2)`.
pub fn default_max_interactions(n: u64) -> u64 {
    let n = n as f64;
    let ln = libm::log(n);
    libm::ceil(200.0 * n * ln * ln) as u64
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialSpec {
    pub initial: Configuration,
    pub params: ProtocolParams,
    pub seed: u64,
    pub max_interactions: u64,
    /// Record the configuration every `record_stride` interactions; 0 turns
    /// recording off.
    pub record_stride: u64,
}

impl TrialSpec {
    /// Trial description with the default interaction budget and no recording.
    pub fn new(initial: Configuration, params: ProtocolParams, seed: u64) -> Self {
        TrialSpec {
            initial,
            params,
            seed,
            max_interactions: default_max_interactions(initial.n()),
            record_stride: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.initial.validate()?;
        ProtocolParams::with_scheduler(self.params.p, self.params.self_pairs)?;
        if self.max_interactions == 0 {
            return Err(Error::ZeroBudget);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Outcome {
    Winner1,
    Winner2,
    Frozen,
    Timeout,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::Winner1,
        Outcome::Winner2,
        Outcome::Frozen,
        Outcome::Timeout,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AbsorptionResult {
    pub outcome: Outcome,
    /// Interactions until the outcome was decided (`max_interactions` for a
    /// timeout).
    pub interactions: u64,
    pub final_config: Configuration,
}

/// Configurations sampled on the interaction clock.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub points: Vec<(u64, Configuration)>,
}

fn classify(c: &Configuration) -> Option<Outcome> {
    if c.is_frozen() {
        return Some(Outcome::Frozen);
    }
    match c.consensus_opinion() {
        Some(Opinion::One) => Some(Outcome::Winner1),
        Some(Opinion::Two) => Some(Outcome::Winner2),
        None => None,
    }
}

/// Runs trial 0 of `spec.seed`.
pub fn run_trial(spec: &TrialSpec) -> Result<(AbsorptionResult, Option<Trajectory>)> {
    run_indexed_trial(spec, 0)
}

/// Runs trial `index` of a batch seeded by `spec.seed`.
pub fn run_indexed_trial(
    spec: &TrialSpec,
    index: u64,
) -> Result<(AbsorptionResult, Option<Trajectory>)> {
    spec.validate()?;
    let mut rng = trial_rng(spec.seed, index);
    let stride = spec.record_stride;
    let budget = spec.max_interactions;
    let mut trajectory = (stride > 0).then(Trajectory::default);
    // Next multiple of the stride still to be recorded.
    let mut next_mark = 0u64;
    let mut record_until = |traj: &mut Option<Trajectory>, c: Configuration, end: u64| {
        if let Some(traj) = traj {
            while next_mark <= end {
                traj.points.push((next_mark, c));
                match next_mark.checked_add(stride) {
                    Some(m) => next_mark = m,
                    None => break,
                }
            }
        }
    };

    let mut c = spec.initial;
    let mut clock = 0u64;
    let outcome = loop {
        if let Some(done) = classify(&c) {
            break done;
        }
        let step = sample_productive_step(&c, &spec.params, &mut rng)?;
        let arrival = clock.saturating_add(step.elapsed);
        if arrival > budget {
            record_until(&mut trajectory, c, budget);
            clock = budget;
            break Outcome::Timeout;
        }
        // `c` is in force on [clock, arrival).
        record_until(&mut trajectory, c, arrival - 1);
        clock = arrival;
        c = step.next;
    };
    if let Some(traj) = trajectory.as_mut() {
        if traj.points.last().map(|(t, _)| *t) != Some(clock) {
            traj.points.push((clock, c));
        }
    }
    Ok((
        AbsorptionResult {
            outcome,
            interactions: clock,
            final_config: c,
        },
        trajectory,
    ))
}

/// Order statistics of the interaction counts of one outcome class.
///
/// The median averages the two middle values for an even count; `p95` is
/// the nearest-rank 95th percentile.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeStats {
    pub count: u64,
    pub min: u64,
    pub median: f64,
    pub mean: f64,
    pub p95: u64,
    pub max: u64,
}

impl TimeStats {
    pub fn from_times(times: &[u64]) -> Option<Self> {
        if times.is_empty() {
            return None;
        }
        let mut sorted = times.to_vec();
        sorted.sort_unstable();
        let k = sorted.len();
        let median = if k % 2 == 1 {
            sorted[k / 2] as f64
        } else {
            (sorted[k / 2 - 1] as f64 + sorted[k / 2] as f64) / 2.0
        };
        let sum: u128 = sorted.iter().map(|&t| t as u128).sum();
        let rank = libm::ceil(0.95 * k as f64) as usize;
        Some(TimeStats {
            count: k as u64,
            min: sorted[0],
            median,
            mean: sum as f64 / k as f64,
            p95: sorted[rank.max(1) - 1],
            max: sorted[k - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BatchSummary {
    pub trials: u64,
    pub wins1: u64,
    pub wins2: u64,
    pub frozen: u64,
    pub timeouts: u64,
    pub winner1_times: Option<TimeStats>,
    pub winner2_times: Option<TimeStats>,
    pub frozen_times: Option<TimeStats>,
    pub timeout_times: Option<TimeStats>,
}

impl BatchSummary {
    /// Summary of results given in any order.
    pub fn from_results(results: &[AbsorptionResult]) -> Self {
        let times = |o: Outcome| -> Vec<u64> {
            results
                .iter()
                .filter(|r| r.outcome == o)
                .map(|r| r.interactions)
                .collect()
        };
        let w1 = times(Outcome::Winner1);
        let w2 = times(Outcome::Winner2);
        let fr = times(Outcome::Frozen);
        let to = times(Outcome::Timeout);
        BatchSummary {
            trials: results.len() as u64,
            wins1: w1.len() as u64,
            wins2: w2.len() as u64,
            frozen: fr.len() as u64,
            timeouts: to.len() as u64,
            winner1_times: TimeStats::from_times(&w1),
            winner2_times: TimeStats::from_times(&w2),
            frozen_times: TimeStats::from_times(&fr),
            timeout_times: TimeStats::from_times(&to),
        }
    }

    pub fn count(&self, outcome: Outcome) -> u64 {
        match outcome {
            Outcome::Winner1 => self.wins1,
            Outcome::Winner2 => self.wins2,
            Outcome::Frozen => self.frozen,
            Outcome::Timeout => self.timeouts,
        }
    }
}

/// Runs `trials` trials one after another.
pub fn run_batch_sequential(spec: &TrialSpec, trials: u64) -> Result<BatchSummary> {
    let results = (0..trials)
        .map(|i| run_indexed_trial(spec, i).map(|(r, _)| r))
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchSummary::from_results(&results))
}
