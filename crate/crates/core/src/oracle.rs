//! Exact absorption probabilities and expected absorption times for small
//! populations.
//!
//! States are indexed by `x1` then `x2`; every transition moves `x1` or
//! `x2` by at most one, so the system matrix is banded with half-width
//! `n + 2`. It is an M-matrix (diagonal `1 - P(c -> c)`, non-positive
//! off-diagonals, weakly row-dominant), so elimination without pivoting is
//! stable and produces no fill outside the band.

use alloc::vec;
use alloc::vec::Vec;

use crate::step::step_distribution;
use crate::{Configuration, Error, Opinion, ProtocolParams, Result};

pub const DEFAULT_CAP: u64 = 60;

/// Exact solution of the absorbing chain for one `(n, p)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExactChainSolution {
    pub n: u64,
    pub p: f64,
    win1: Vec<f64>,
    win2: Vec<f64>,
    exp_time: Vec<Option<f64>>,
    /// Largest `|h(c) - sum_c' P(c -> c') h(c')|` over non-terminal states
    /// for both absorption probabilities.
    pub residual: f64,
    /// Same residual for the expected-time equations (`+1` per step).
    pub time_residual: f64,
}

#[inline]
fn index(n: u64, x1: u64, x2: u64) -> usize {
    // states with a smaller x1 come first: sum_{a < x1} (n - a + 1)
    let before = x1 * (n + 1) - x1 * x1.saturating_sub(1) / 2;
    (before + x2) as usize
}

fn state_count(n: u64) -> usize {
    ((n + 1) * (n + 2) / 2) as usize
}

impl ExactChainSolution {
    fn idx(&self, c: &Configuration) -> usize {
        assert_eq!(c.n(), self.n, "configuration {c} outside population {}", self.n);
        index(self.n, c.x1, c.x2)
    }

    /// Probability that Opinion 1 takes over from `c`.
    pub fn win1(&self, c: &Configuration) -> f64 {
        self.win1[self.idx(c)]
    }

    pub fn win2(&self, c: &Configuration) -> f64 {
        self.win2[self.idx(c)]
    }

    pub fn win(&self, c: &Configuration, opinion: Opinion) -> f64 {
        match opinion {
            Opinion::One => self.win1(c),
            Opinion::Two => self.win2(c),
        }
    }

    /// Expected interactions until consensus; `None` for the frozen state.
    pub fn exp_time(&self, c: &Configuration) -> Option<f64> {
        self.exp_time[self.idx(c)]
    }

    pub fn states(&self) -> impl Iterator<Item = Configuration> {
        Configuration::enumerate(self.n)
    }
}

/// Band storage: row `i` holds columns `i - width ..= i + width`.
struct BandMatrix {
    size: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    fn new(size: usize, width: usize) -> Self {
        BandMatrix {
            size,
            width,
            data: vec![0.0; size * (2 * width + 1)],
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.width >= i && j <= i + self.width);
        i * (2 * self.width + 1) + (j + self.width - i)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.slot(i, j)]
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    /// Solves in place for each right-hand side (columns of `rhs`).
    fn solve(mut self, rhs: &mut [Vec<f64>]) {
        let (size, w) = (self.size, self.width);
        for k in 0..size {
            let pivot = self.get(k, k);
            let last_row = (k + w).min(size - 1);
            for i in k + 1..=last_row {
                let a_ik = self.get(i, k);
                if a_ik == 0.0 {
                    continue;
                }
                let factor = a_ik / pivot;
                for j in k..=(k + w).min(size - 1) {
                    let a_kj = self.get(k, j);
                    if a_kj != 0.0 {
                        self.add(i, j, -factor * a_kj);
                    }
                }
                for b in rhs.iter_mut() {
                    b[i] -= factor * b[k];
                }
            }
        }
        for k in (0..size).rev() {
            let last_col = (k + w).min(size - 1);
            for b in rhs.iter_mut() {
                let mut acc = b[k];
                for j in k + 1..=last_col {
                    acc -= self.get(k, j) * b[j];
                }
                b[k] = acc / self.get(k, k);
            }
        }
    }
}

/// Solves the chain with the default cap on `n`.
pub fn solve_chain(n: u64, p: f64) -> Result<ExactChainSolution> {
    solve_chain_capped(n, p, DEFAULT_CAP)
}

pub fn solve_chain_capped(n: u64, p: f64, cap: u64) -> Result<ExactChainSolution> {
    if n < 2 {
        return Err(Error::PopulationTooSmall(n));
    }
    if n > cap {
        return Err(Error::AboveSolverCap { n, cap });
    }
    let params = ProtocolParams::new(p)?;
    let size = state_count(n);
    let mut matrix = BandMatrix::new(size, (n + 2) as usize);
    let mut rhs = vec![vec![0.0; size], vec![0.0; size], vec![0.0; size]];
    let mut rows = Vec::with_capacity(size);

    for c in Configuration::enumerate(n) {
        let i = index(n, c.x1, c.x2);
        if c.is_terminal() {
            matrix.add(i, i, 1.0);
            match c.consensus_opinion() {
                Some(Opinion::One) => rhs[0][i] = 1.0,
                Some(Opinion::Two) => rhs[1][i] = 1.0,
                None => {}
            }
            rows.push(Vec::new());
            continue;
        }
        let dist = step_distribution(&c, &params)?;
        let mut leave = 0.0;
        for &(next, prob) in &dist {
            if next != c {
                matrix.add(i, index(n, next.x1, next.x2), -prob);
                leave += prob;
            }
        }
        matrix.add(i, i, leave);
        rhs[2][i] = 1.0;
        rows.push(dist);
    }

    matrix.solve(&mut rhs);
    let [win1, win2, times]: [Vec<f64>; 3] = rhs.try_into().expect("three right-hand sides");

    let mut residual: f64 = 0.0;
    let mut time_residual: f64 = 0.0;
    for (i, dist) in rows.iter().enumerate() {
        if dist.is_empty() {
            continue;
        }
        let mut h1 = 0.0;
        let mut h2 = 0.0;
        let mut ht = 1.0;
        for &(next, prob) in dist {
            let j = index(n, next.x1, next.x2);
            h1 += prob * win1[j];
            h2 += prob * win2[j];
            ht += prob * times[j];
        }
        residual = residual.max(libm::fabs(win1[i] - h1)).max(libm::fabs(win2[i] - h2));
        time_residual = time_residual.max(libm::fabs(times[i] - ht));
    }

    let frozen = index(n, 0, 0);
    let exp_time = times
        .into_iter()
        .enumerate()
        .map(|(i, t)| (i != frozen).then_some(t))
        .collect();

    Ok(ExactChainSolution {
        n,
        p,
        win1,
        win2,
        exp_time,
        residual,
        time_residual,
    })
}
