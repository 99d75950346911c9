//! Labeled realization of the monotone coupling between two runs.
//!
//! States are ordered `Opinion1 >= Undecided >= Opinion2`; configurations
//! by `x1 >= x1'` and `x1 + u >= x1' + u'`. Both populations keep their
//! agents sorted non-increasingly, so the order on configurations is the
//! same as the agent-wise order between equal labels. Feeding the same
//! `(initiator, responder, r)` to both runs then preserves the order.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use crate::engine::trial_rng;
use crate::step::uniform_open_closed;
use crate::{transition, AgentState, Configuration, Error, Result};

fn rank(q: AgentState) -> u8 {
    match q {
        AgentState::Opinion1 => 2,
        AgentState::Undecided => 1,
        AgentState::Opinion2 => 0,
    }
}

/// `q >= q'` in the order `Opinion1 >= Undecided >= Opinion2`.
pub fn state_geq(q: AgentState, other: AgentState) -> bool {
    rank(q) >= rank(other)
}

pub fn state_cmp(q: AgentState, other: AgentState) -> Ordering {
    rank(q).cmp(&rank(other))
}

/// `c` is at least as good for Opinion 1 as `other`.
pub fn config_geq(c: &Configuration, other: &Configuration) -> Result<bool> {
    if c.n() != other.n() {
        return Err(Error::PopulationMismatch(c.n(), other.n()));
    }
    Ok(c.x1 >= other.x1 && c.x1 + c.u >= other.x1 + other.u)
}

/// Outcome of each ordered state pair: `(initiator, responder, with r <= p,
/// with r > p)`. Only `(Opinion1, Opinion2)` depends on `r`.
pub const INTERACTION_TABLE: [(AgentState, AgentState, AgentState, AgentState); 9] = {
    use AgentState::*;
    [
        (Opinion1, Opinion1, Opinion1, Opinion1),
        (Undecided, Opinion1, Opinion1, Opinion1),
        (Opinion1, Undecided, Opinion1, Opinion1),
        (Opinion2, Opinion1, Undecided, Undecided),
        (Undecided, Undecided, Undecided, Undecided),
        (Opinion1, Opinion2, Opinion1, Undecided),
        (Opinion2, Undecided, Opinion2, Opinion2),
        (Undecided, Opinion2, Opinion2, Opinion2),
        (Opinion2, Opinion2, Opinion2, Opinion2),
    ]
};

/// Agents with labels `0..n`, sorted non-increasingly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPopulation {
    states: Vec<AgentState>,
}

impl LabeledPopulation {
    pub fn from_configuration(c: &Configuration) -> Self {
        let mut states = Vec::with_capacity(c.n() as usize);
        for (state, count) in [
            (AgentState::Opinion1, c.x1),
            (AgentState::Undecided, c.u),
            (AgentState::Opinion2, c.x2),
        ] {
            states.extend(core::iter::repeat_n(state, count as usize));
        }
        LabeledPopulation { states }
    }

    pub fn states(&self) -> &[AgentState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn configuration(&self) -> Configuration {
        let mut c = Configuration { x1: 0, x2: 0, u: 0 };
        for &q in &self.states {
            match q {
                AgentState::Opinion1 => c.x1 += 1,
                AgentState::Opinion2 => c.x2 += 1,
                AgentState::Undecided => c.u += 1,
            }
        }
        c
    }

    pub fn is_sorted(&self) -> bool {
        self.states.windows(2).all(|w| state_geq(w[0], w[1]))
    }

    /// Counting sort over the three states.
    fn resort(&mut self) {
        let c = self.configuration();
        *self = LabeledPopulation::from_configuration(&c);
    }

    /// Applies one interaction and restores the sorted order.
    fn apply(&mut self, draw: &SchedulerDraw, p: f64) {
        let next = transition(self.states[draw.initiator], self.states[draw.responder], draw.r, p);
        if next != self.states[draw.initiator] {
            self.states[draw.initiator] = next;
            self.resort();
        }
    }
}

/// One scheduler draw: initiator and responder labels plus the uniform `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerDraw {
    pub initiator: usize,
    pub responder: usize,
    pub r: f64,
}

impl SchedulerDraw {
    pub fn sample<R: Rng + ?Sized>(n: usize, self_pairs: bool, rng: &mut R) -> Self {
        let initiator = rng.gen_range(0..n);
        let responder = if self_pairs {
            rng.gen_range(0..n)
        } else {
            let j = rng.gen_range(0..n - 1);
            if j >= initiator {
                j + 1
            } else {
                j
            }
        };
        SchedulerDraw {
            initiator,
            responder,
            r: uniform_open_closed(rng),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        for label in [self.initiator, self.responder] {
            if label >= n {
                return Err(Error::LabelOutOfRange { label, n });
            }
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::InvalidUniform(self.r));
        }
        Ok(())
    }
}

fn check_preconditions(
    upper: &Configuration,
    p: f64,
    lower: &Configuration,
    p_lower: f64,
) -> Result<()> {
    for q in [p, p_lower] {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidStubbornness(q));
        }
    }
    if p < p_lower {
        return Err(Error::CouplingPrecondition("upper run needs p >= p~"));
    }
    if !config_geq(upper, lower)? {
        return Err(Error::CouplingPrecondition(
            "upper configuration must dominate the lower one",
        ));
    }
    Ok(())
}

/// Applies the same draw to both populations and re-sorts them.
///
/// Requires `p >= p_lower`, `upper >= lower` and both populations sorted.
pub fn coupled_step(
    upper: &LabeledPopulation,
    p: f64,
    lower: &LabeledPopulation,
    p_lower: f64,
    draw: &SchedulerDraw,
) -> Result<(LabeledPopulation, LabeledPopulation)> {
    if !upper.is_sorted() || !lower.is_sorted() {
        return Err(Error::CouplingPrecondition("populations must be sorted"));
    }
    let c = upper.configuration();
    let c_lower = lower.configuration();
    c.validate()?;
    check_preconditions(&c, p, &c_lower, p_lower)?;
    draw.validate(upper.len())?;
    let mut a = upper.clone();
    let mut b = lower.clone();
    a.apply(draw, p);
    b.apply(draw, p_lower);
    Ok((a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MonotoneReport {
    pub steps: u64,
    pub preserved: bool,
    /// Index (1-based interaction count) of the first step after which the
    /// order failed.
    pub first_violation: Option<u64>,
    pub final_upper: Configuration,
    pub final_lower: Configuration,
}

/// Runs the coupled pair for `steps` interactions and checks the
/// configuration order after each one. Draws use distinct agents unless
/// `self_pairs` is set.
pub fn check_monotone_run(
    c: &Configuration,
    p: f64,
    c_lower: &Configuration,
    p_lower: f64,
    steps: u64,
    seed: u64,
    self_pairs: bool,
) -> Result<MonotoneReport> {
    c.validate()?;
    check_preconditions(c, p, c_lower, p_lower)?;
    let mut rng = trial_rng(seed, 0);
    let mut a = LabeledPopulation::from_configuration(c);
    let mut b = LabeledPopulation::from_configuration(c_lower);
    let n = a.len();
    let mut first_violation = None;
    for step in 1..=steps {
        let draw = SchedulerDraw::sample(n, self_pairs, &mut rng);
        a.apply(&draw, p);
        b.apply(&draw, p_lower);
        if !config_geq(&a.configuration(), &b.configuration())? {
            first_violation = Some(step);
            break;
        }
    }
    Ok(MonotoneReport {
        steps,
        preserved: first_violation.is_none(),
        first_violation,
        final_upper: a.configuration(),
        final_lower: b.configuration(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use AgentState::*;

    fn cfg(x1: u64, x2: u64, u: u64) -> Configuration {
        Configuration { x1, x2, u }
    }

    #[test]
    fn state_order() {
        assert!(state_geq(Opinion1, Undecided));
        assert!(!state_geq(Opinion2, Undecided));
        assert!(state_geq(Undecided, Opinion2));
        assert!(state_geq(Opinion1, Opinion2));
        for q in AgentState::ALL {
            assert!(state_geq(q, q));
        }
    }

    #[test]
    fn config_order() {
        assert!(config_geq(&cfg(5, 3, 2), &cfg(4, 3, 3)).unwrap());
        assert!(!config_geq(&cfg(4, 3, 3), &cfg(5, 3, 2)).unwrap());
        assert!(config_geq(&cfg(4, 3, 3), &cfg(4, 3, 3)).unwrap());
        assert_eq!(
            config_geq(&cfg(4, 3, 3), &cfg(4, 3, 2)),
            Err(Error::PopulationMismatch(10, 9))
        );
    }

    #[test]
    fn table_matches_transition() {
        for (a, b, keep, lose) in INTERACTION_TABLE {
            assert_eq!(transition(a, b, 0.2, 0.5), keep, "{a:?} {b:?}");
            assert_eq!(transition(a, b, 0.8, 0.5), lose, "{a:?} {b:?}");
        }
    }

    #[test]
    fn sorted_labeling() {
        let pop = LabeledPopulation::from_configuration(&cfg(2, 3, 1));
        assert_eq!(pop.states(), &[Opinion1, Opinion1, Undecided, Opinion2, Opinion2, Opinion2]);
        assert!(pop.is_sorted());
        assert_eq!(pop.configuration(), cfg(2, 3, 1));
    }

    #[test]
    fn identical_inputs_identical_outputs() {
        let pop = LabeledPopulation::from_configuration(&cfg(3, 3, 2));
        let draw = SchedulerDraw { initiator: 0, responder: 5, r: 0.9 };
        let (a, b) = coupled_step(&pop, 0.4, &pop, 0.4, &draw).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.configuration(), cfg(2, 3, 3));
    }

    #[test]
    fn top_element_is_absorbing() {
        let top = LabeledPopulation::from_configuration(&cfg(6, 0, 0));
        let other = LabeledPopulation::from_configuration(&cfg(1, 4, 1));
        for (i, j) in [(0, 5), (5, 0), (1, 4), (3, 3)] {
            let draw = SchedulerDraw { initiator: i, responder: j, r: 1.0 };
            let (a, b) = coupled_step(&top, 0.0, &other, 0.0, &draw).unwrap();
            assert_eq!(a, top);
            assert!(config_geq(&a.configuration(), &b.configuration()).unwrap());
        }
    }

    #[test]
    fn stubborn_pair_with_shared_r() {
        // upper: agent 0 holds 1 and meets a 2; lower: agent 0 is undecided.
        let upper = LabeledPopulation::from_configuration(&cfg(1, 2, 1));
        let lower = LabeledPopulation::from_configuration(&cfg(0, 2, 2));
        let j = 3;
        assert_eq!(upper.states()[j], Opinion2);
        for r in [0.1, 0.3, 0.6, 1.0] {
            let draw = SchedulerDraw { initiator: 0, responder: j, r };
            let (a, b) = coupled_step(&upper, 0.5, &lower, 0.3, &draw).unwrap();
            assert!(state_geq(a.states()[0], b.states()[0]));
            assert!(config_geq(&a.configuration(), &b.configuration()).unwrap());
        }
    }

    #[test]
    fn preconditions_rejected() {
        let a = LabeledPopulation::from_configuration(&cfg(2, 2, 2));
        let b = LabeledPopulation::from_configuration(&cfg(3, 2, 1));
        let draw = SchedulerDraw { initiator: 0, responder: 1, r: 0.5 };
        assert!(matches!(
            coupled_step(&a, 0.5, &b, 0.5, &draw),
            Err(Error::CouplingPrecondition(_))
        ));
        assert!(matches!(
            coupled_step(&b, 0.2, &a, 0.5, &draw),
            Err(Error::CouplingPrecondition(_))
        ));
        let bad = SchedulerDraw { initiator: 6, responder: 1, r: 0.5 };
        assert!(coupled_step(&b, 0.5, &a, 0.5, &bad).is_err());
        let bad = SchedulerDraw { initiator: 0, responder: 1, r: 0.0 };
        assert!(coupled_step(&b, 0.5, &a, 0.5, &bad).is_err());
        assert!(check_monotone_run(&cfg(2, 2, 2), 0.5, &cfg(3, 2, 1), 0.5, 10, 1, false).is_err());
    }

    #[test]
    fn identical_chains_stay_identical() {
        let c = cfg(5, 8, 3);
        let rep = check_monotone_run(&c, 0.3, &c, 0.3, 5000, 4, false).unwrap();
        assert!(rep.preserved);
        assert_eq!(rep.final_upper, rep.final_lower);
    }

    #[test]
    fn absorbed_top_run() {
        let rep = check_monotone_run(&cfg(9, 0, 0), 0.0, &cfg(2, 5, 2), 0.0, 3000, 2, false).unwrap();
        assert!(rep.preserved);
        assert_eq!(rep.final_upper, cfg(9, 0, 0));
    }
}
