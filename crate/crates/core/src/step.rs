//! One scheduler step on the counting abstraction: the exact successor law,
//! a plain sampler, and the geometric-skip sampler that jumps straight to
//! the next productive interaction.

use alloc::vec::Vec;

use rand::Rng;

use crate::{transition, AgentState, Configuration, Error, ProtocolParams, Result};

/// The four interactions that change the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Productive {
    /// Opinion 1 meets Opinion 2 and is not stubborn: `1 -> undecided`.
    Opinion1Yields,
    /// Opinion 2 meets Opinion 1: `2 -> undecided`.
    Opinion2Yields,
    /// Undecided meets Opinion 1.
    Adopt1,
    /// Undecided meets Opinion 2.
    Adopt2,
}

impl Productive {
    pub const ALL: [Productive; 4] = [
        Productive::Opinion1Yields,
        Productive::Opinion2Yields,
        Productive::Adopt1,
        Productive::Adopt2,
    ];

    pub fn apply(self, c: Configuration) -> Configuration {
        let Configuration { x1, x2, u } = c;
        match self {
            Productive::Opinion1Yields => Configuration { x1: x1 - 1, x2, u: u + 1 },
            Productive::Opinion2Yields => Configuration { x1, x2: x2 - 1, u: u + 1 },
            Productive::Adopt1 => Configuration { x1: x1 + 1, x2, u: u - 1 },
            Productive::Adopt2 => Configuration { x1, x2: x2 + 1, u: u - 1 },
        }
    }
}

/// Unnormalized weights (ordered-pair counts, the first scaled by `1 - p`)
/// of the productive interactions, in [`Productive::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductiveWeights(pub [f64; 4]);

impl ProductiveWeights {
    pub fn new(c: &Configuration, p: f64) -> Self {
        let x1 = c.x1 as f64;
        let x2 = c.x2 as f64;
        let u = c.u as f64;
        ProductiveWeights([(1.0 - p) * x1 * x2, x1 * x2, u * x1, u * x2])
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Picks a category with one uniform `v in (0, 1]` against cumulative
    /// sums taken in a fixed order.
    fn pick(&self, v: f64) -> Productive {
        let target = v * self.total();
        let mut acc = 0.0;
        for (kind, w) in Productive::ALL.iter().zip(self.0) {
            acc += w;
            if w > 0.0 && target <= acc {
                return *kind;
            }
        }
        // Rounding can leave `target` a hair above the final sum.
        let last = self.0.iter().rposition(|w| *w > 0.0).unwrap_or(3);
        Productive::ALL[last]
    }
}

/// Result of advancing the scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InteractionOutcome {
    pub next: Configuration,
    /// Interactions consumed, at least 1.
    pub elapsed: u64,
}

/// Probability that a single interaction is productive.
pub fn productive_probability(c: &Configuration, params: &ProtocolParams) -> f64 {
    ProductiveWeights::new(c, params.p).total() / params.pair_count(c.n())
}

/// Exact one-step law of the successor configuration.
///
/// Productive successors come first in [`Productive::ALL`] order, followed
/// by the self-loop; zero-probability entries are omitted.
pub fn step_distribution(
    c: &Configuration,
    params: &ProtocolParams,
) -> Result<Vec<(Configuration, f64)>> {
    c.validate()?;
    let n = c.n();
    let pairs = params.pair_count(n);
    let weights = ProductiveWeights::new(c, params.p);
    let mut out = Vec::with_capacity(5);
    for (kind, w) in Productive::ALL.iter().zip(weights.0) {
        if w > 0.0 {
            out.push((kind.apply(*c), w / pairs));
        }
    }
    let (x1, x2, u) = (c.x1 as f64, c.x2 as f64, c.u as f64);
    let same_state = if params.self_pairs {
        x1 * x1 + x2 * x2 + u * u
    } else {
        x1 * (x1 - 1.0) + x2 * (x2 - 1.0) + u * (u - 1.0)
    };
    let neutral = same_state + u * (x1 + x2) + params.p * x1 * x2;
    if neutral > 0.0 {
        out.push((*c, neutral / pairs));
    }
    Ok(out)
}

/// Uniform draw in `(0, 1]`.
#[inline]
pub fn uniform_open_closed<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// State of the agent at `label` when agents are listed as all Opinion-1,
/// then all Opinion-2, then all undecided.
#[inline]
fn state_at(c: &Configuration, label: u64) -> AgentState {
    if label < c.x1 {
        AgentState::Opinion1
    } else if label < c.x1 + c.x2 {
        AgentState::Opinion2
    } else {
        AgentState::Undecided
    }
}

/// Samples one interaction: an ordered pair of agents and the uniform `r`
/// for the stubborn branch. `r` is always drawn so the stream consumption
/// per step is fixed.
pub fn sample_step<R: Rng + ?Sized>(
    c: &Configuration,
    params: &ProtocolParams,
    rng: &mut R,
) -> Result<InteractionOutcome> {
    c.validate()?;
    let n = c.n();
    let i = rng.gen_range(0..n);
    let j = if params.self_pairs {
        rng.gen_range(0..n)
    } else {
        let j = rng.gen_range(0..n - 1);
        if j >= i {
            j + 1
        } else {
            j
        }
    };
    let r = uniform_open_closed(rng);
    let before = state_at(c, i);
    let after = transition(before, state_at(c, j), r, params.p);
    let mut next = *c;
    if before != after {
        match before {
            AgentState::Opinion1 => next.x1 -= 1,
            AgentState::Opinion2 => next.x2 -= 1,
            AgentState::Undecided => next.u -= 1,
        }
        match after {
            AgentState::Opinion1 => next.x1 += 1,
            AgentState::Opinion2 => next.x2 += 1,
            AgentState::Undecided => next.u += 1,
        }
    }
    Ok(InteractionOutcome { next, elapsed: 1 })
}

/// Number of trials up to and including the first success of a
/// Bernoulli(`q`) sequence, by inversion: `ceil(ln U / ln(1 - q))`.
pub fn sample_geometric<R: Rng + ?Sized>(q: f64, rng: &mut R) -> u64 {
    let v = uniform_open_closed(rng);
    if q >= 1.0 {
        return 1;
    }
    let k = libm::ceil(libm::log(v) / libm::log1p(-q));
    if k >= u64::MAX as f64 {
        u64::MAX
    } else if k < 1.0 {
        1
    } else {
        k as u64
    }
}

/// Jumps to the next productive interaction.
///
/// `elapsed` is geometric with the productive probability of `c`; the
/// category is then chosen proportionally to its weight. The joint law of
/// `(next, elapsed)` equals that of iterating [`sample_step`] until the
/// configuration first changes.
pub fn sample_productive_step<R: Rng + ?Sized>(
    c: &Configuration,
    params: &ProtocolParams,
    rng: &mut R,
) -> Result<InteractionOutcome> {
    c.validate()?;
    let weights = ProductiveWeights::new(c, params.p);
    let total = weights.total();
    if total <= 0.0 {
        return Err(Error::NotProductive(*c));
    }
    let q = total / params.pair_count(c.n());
    let elapsed = sample_geometric(q, rng);
    let kind = weights.pick(uniform_open_closed(rng));
    Ok(InteractionOutcome {
        next: kind.apply(*c),
        elapsed,
    })
}
