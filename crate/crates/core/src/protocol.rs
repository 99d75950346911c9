//! Agent states, configurations and the stubborn transition function.

use core::fmt;

use crate::{Error, Result};

/// State of a single agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AgentState {
    Opinion1,
    Opinion2,
    Undecided,
}

impl AgentState {
    pub const ALL: [AgentState; 3] = [
        AgentState::Opinion1,
        AgentState::Opinion2,
        AgentState::Undecided,
    ];
}

/// Selects one of the two opinions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Opinion {
    One,
    Two,
}

/// New state of the initiator after meeting `responder`.
///
/// The only random rule is Opinion 1 meeting Opinion 2; it is resolved by
/// the uniform draw `r`: the initiator keeps Opinion 1 iff `r <= p`.
/// `r` is ignored by every other pair.
#[inline]
pub fn transition(initiator: AgentState, responder: AgentState, r: f64, p: f64) -> AgentState {
    use AgentState::*;
    match (initiator, responder) {
        (Opinion2, Opinion1) => Undecided,
        (Opinion1, Opinion2) => {
            if r <= p {
                Opinion1
            } else {
                Undecided
            }
        }
        (Undecided, other) => other,
        (same, _) => same,
    }
}

/// Counts `(x1, x2, u)` of Opinion-1, Opinion-2 and undecided agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Configuration {
    pub x1: u64,
    pub x2: u64,
    pub u: u64,
}

impl Configuration {
    /// Validated constructor; populations below two agents are rejected.
    pub fn new(x1: u64, x2: u64, u: u64) -> Result<Self> {
        let c = Configuration { x1, x2, u };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n() < 2 {
            return Err(Error::PopulationTooSmall(self.n()));
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> u64 {
        self.x1 + self.x2 + self.u
    }

    pub fn consensus(n: u64, opinion: Opinion) -> Self {
        match opinion {
            Opinion::One => Configuration { x1: n, x2: 0, u: 0 },
            Opinion::Two => Configuration { x1: 0, x2: n, u: 0 },
        }
    }

    pub fn frozen(n: u64) -> Self {
        Configuration { x1: 0, x2: 0, u: n }
    }

    /// Count of agents in `state`.
    pub fn count(&self, state: AgentState) -> u64 {
        match state {
            AgentState::Opinion1 => self.x1,
            AgentState::Opinion2 => self.x2,
            AgentState::Undecided => self.u,
        }
    }

    /// Same configuration with the two opinions swapped.
    pub fn mirrored(&self) -> Self {
        Configuration {
            x1: self.x2,
            x2: self.x1,
            u: self.u,
        }
    }

    /// `Some(winner)` once every agent holds the same opinion.
    pub fn consensus_opinion(&self) -> Option<Opinion> {
        if self.x2 == 0 && self.u == 0 && self.x1 > 0 {
            Some(Opinion::One)
        } else if self.x1 == 0 && self.u == 0 && self.x2 > 0 {
            Some(Opinion::Two)
        } else {
            None
        }
    }

    /// All agents undecided: no rule can ever fire.
    pub fn is_frozen(&self) -> bool {
        self.x1 == 0 && self.x2 == 0
    }

    /// Consensus or frozen.
    pub fn is_terminal(&self) -> bool {
        self.is_frozen() || self.consensus_opinion().is_some()
    }

    /// Every configuration with population `n`, ordered by `x1` then `x2`.
    pub fn enumerate(n: u64) -> impl Iterator<Item = Configuration> {
        (0..=n).flat_map(move |x1| {
            (0..=n - x1).map(move |x2| Configuration {
                x1,
                x2,
                u: n - x1 - x2,
            })
        })
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x1, self.x2, self.u)
    }
}

/// Stubbornness and scheduler convention.
///
/// `self_pairs = true` draws initiator and responder independently, so a
/// pair has probability `1/n^2`; `false` draws two distinct agents
/// (`1/(n(n-1))`). Self-pairs are always neutral.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProtocolParams {
    pub p: f64,
    pub self_pairs: bool,
}

impl ProtocolParams {
    pub fn new(p: f64) -> Result<Self> {
        Self::with_scheduler(p, true)
    }

    pub fn with_scheduler(p: f64, self_pairs: bool) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidStubbornness(p));
        }
        Ok(ProtocolParams { p, self_pairs })
    }

    /// Number of equally likely ordered pairs.
    #[inline]
    pub fn pair_count(&self, n: u64) -> f64 {
        let n = n as f64;
        if self.self_pairs {
            n * n
        } else {
            n * (n - 1.0)
        }
    }
}

/// Threshold stubbornness `1 - x1/x2`, undefined when `x2 = 0`.
pub fn threshold(x1: u64, x2: u64) -> Option<f64> {
    (x2 > 0).then(|| 1.0 - x1 as f64 / x2 as f64)
}
