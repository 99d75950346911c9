//! Test-only reference implementations, written from the rule table and
//! independent of the crate's sampling and distribution code.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_rational::Ratio;
use stubborn_usd_core::Configuration;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum S {
    One,
    Two,
    Und,
}

/// Outcomes for the initiator as `(state, weight)` where weight is either
/// 1, `p` or `1 - p`.
pub fn rule<W: Copy + std::ops::Sub<Output = W>>(a: S, b: S, p: W, one: W) -> Vec<(S, W)> {
    match (a, b) {
        (S::Two, S::One) => vec![(S::Und, one)],
        (S::One, S::Two) => vec![(S::One, p), (S::Und, one - p)],
        (S::Und, other) => vec![(other, one)],
        (same, _) => vec![(same, one)],
    }
}

fn agents(c: &Configuration) -> Vec<S> {
    let mut v = vec![S::One; c.x1 as usize];
    v.extend(vec![S::Two; c.x2 as usize]);
    v.extend(vec![S::Und; c.u as usize]);
    v
}

fn replace(c: &Configuration, from: S, to: S) -> Configuration {
    let mut c = *c;
    for (s, d) in [(from, -1i64), (to, 1)] {
        match s {
            S::One => c.x1 = (c.x1 as i64 + d) as u64,
            S::Two => c.x2 = (c.x2 as i64 + d) as u64,
            S::Und => c.u = (c.u as i64 + d) as u64,
        }
    }
    c
}

/// One-step law by enumerating all n^2 ordered agent pairs (or the
/// n(n-1) distinct ones) and both outcomes of the stubborn branch.
pub fn brute_force_f64(c: &Configuration, p: f64, self_pairs: bool) -> BTreeMap<(u64, u64, u64), f64> {
    let ag = agents(c);
    let n = ag.len();
    let pairs = if self_pairs { n * n } else { n * (n - 1) } as f64;
    let mut out = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            if !self_pairs && i == j {
                continue;
            }
            for (s, w) in rule(ag[i], ag[j], p, 1.0) {
                let next = replace(c, ag[i], s);
                *out.entry((next.x1, next.x2, next.u)).or_insert(0.0) += w / pairs;
            }
        }
    }
    out.retain(|_, w| *w > 0.0);
    out
}

pub type Q = Ratio<i128>;

pub fn brute_force_exact(c: &Configuration, p: Q) -> BTreeMap<(u64, u64, u64), Q> {
    let ag = agents(c);
    let n = ag.len() as i128;
    let mut out: BTreeMap<(u64, u64, u64), Q> = BTreeMap::new();
    for &a in &ag {
        for &b in &ag {
            for (s, w) in rule(a, b, p, Q::from(1)) {
                let next = replace(c, a, s);
                *out.entry((next.x1, next.x2, next.u)).or_insert(Q::from(0)) += w / Q::from(n * n);
            }
        }
    }
    out
}

/// Opinion-1 absorption probabilities in exact arithmetic by Gauss-Jordan
/// elimination over all states of population `n`.
pub fn exact_win1(n: u64, p: Q) -> BTreeMap<(u64, u64, u64), Q> {
    let states: Vec<Configuration> = Configuration::enumerate(n).collect();
    let pos: BTreeMap<(u64, u64, u64), usize> =
        states.iter().enumerate().map(|(i, c)| ((c.x1, c.x2, c.u), i)).collect();
    let m = states.len();
    let zero = Q::from(0);
    let mut a = vec![vec![zero; m + 1]; m];
    for (i, c) in states.iter().enumerate() {
        let terminal = (c.x1 == 0 && c.x2 == 0) || (c.x2 == 0 && c.u == 0) || (c.x1 == 0 && c.u == 0);
        a[i][i] = Q::from(1);
        if terminal {
            if c.x1 == n {
                a[i][m] = Q::from(1);
            }
            continue;
        }
        for (key, w) in brute_force_exact(c, p) {
            a[i][pos[&key]] -= w;
        }
    }
    for col in 0..m {
        let piv = (col..m).find(|&r| a[r][col] != zero).expect("singular");
        a.swap(col, piv);
        let d = a[col][col];
        for k in col..=m {
            a[col][k] /= d;
        }
        for r in 0..m {
            if r != col && a[r][col] != zero {
                let f = a[r][col];
                for k in col..=m {
                    let v = a[col][k];
                    a[r][k] -= f * v;
                }
            }
        }
    }
    states
        .iter()
        .enumerate()
        .map(|(i, c)| ((c.x1, c.x2, c.u), a[i][m]))
        .collect()
}
