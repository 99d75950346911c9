//! Potential functions of the process and their exact one-step drifts.
//!
//! Every drift here is a closed form for `E[f(X(t+1)) - f(X(t)) | X(t) = c]`
//! under the self-pair scheduler (`n^2` equally likely ordered pairs).
//! [`expected_increment`] computes the same quantities by summing over
//! [`step_distribution`], and [`scan_drifts`] compares the two routes.

use alloc::vec::Vec;

use crate::protocol::threshold;
use crate::step::step_distribution;
use crate::{Configuration, Error, Opinion, ProtocolParams, Result};

/// `x1 - (1 - p) x2`.
#[inline]
pub fn weighted_bias(c: &Configuration, p: f64) -> f64 {
    c.x1 as f64 - (1.0 - p) * c.x2 as f64
}

/// Potentials of one configuration. Undefined quantities are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PotentialReport {
    /// `x1 - (1 - p) x2`
    pub weighted_bias: f64,
    /// `(1 - p) x2 - x1`
    pub negative_weighted_bias: f64,
    /// `1 - x1 / x2`; `None` when `x2 = 0`.
    pub threshold: Option<f64>,
    /// `x2 / x1`; `None` when `x1 = 0`.
    pub gap_inverse: Option<f64>,
    /// `x1 / x2`; `None` when `x2 = 0`.
    pub gap: Option<f64>,
    /// `u - x1 - x2`
    pub undecided_surplus: f64,
}

pub fn potentials(c: &Configuration, p: f64) -> PotentialReport {
    let x1 = c.x1 as f64;
    let x2 = c.x2 as f64;
    let bias = weighted_bias(c, p);
    PotentialReport {
        weighted_bias: bias,
        negative_weighted_bias: -bias,
        threshold: threshold(c.x1, c.x2),
        gap_inverse: (c.x1 > 0).then(|| x2 / x1),
        gap: (c.x2 > 0).then(|| x1 / x2),
        undecided_surplus: c.u as f64 - x1 - x2,
    }
}

fn require_self_pairs(params: &ProtocolParams) -> Result<()> {
    if params.self_pairs {
        Ok(())
    } else {
        Err(Error::DistinctPairScheduler)
    }
}

fn n_squared(c: &Configuration) -> f64 {
    let n = c.n() as f64;
    n * n
}

/// Expected one-step change of the weighted bias: `u * bias / n^2`.
pub fn drift_weighted_bias(c: &Configuration, params: &ProtocolParams) -> Result<f64> {
    require_self_pairs(params)?;
    c.validate()?;
    Ok(c.u as f64 * weighted_bias(c, params.p) / n_squared(c))
}

/// Expected one-step change of the squared weighted bias.
///
/// `x1 x2 (2-p)(1-p) / n^2 + 2 u bias^2 / n^2 + u (x1 + (1-p)^2 x2) / n^2`
pub fn drift_weighted_bias_squared(c: &Configuration, params: &ProtocolParams) -> Result<f64> {
    require_self_pairs(params)?;
    c.validate()?;
    let p = params.p;
    let (x1, x2, u) = (c.x1 as f64, c.x2 as f64, c.u as f64);
    let bias = weighted_bias(c, p);
    let q = 1.0 - p;
    let nn = n_squared(c);
    Ok(x1 * x2 * (2.0 - p) * q / nn + 2.0 * u * bias * bias / nn + u * (x1 + q * q * x2) / nn)
}

/// Expected one-step change of the gap potential that vanishes when
/// `winner` takes over: `x2 / x1` for Opinion 1, `x1 / x2` for Opinion 2.
///
/// Opinion 1 (needs `x1 >= 2`, `x2 >= 1`):
/// `-(psi / n^2) (x1 - (1-p) x2 - (1-p) x2 / (x1 - 1) - u / (x1 + 1))`
///
/// Opinion 2 (needs `x2 >= 2`, `x1 >= 1`):
/// `-(psi / n^2) ((1-p) x2 - x1 - x1 / (x2 - 1) - u / (x2 + 1))`
pub fn drift_gap(c: &Configuration, params: &ProtocolParams, winner: Opinion) -> Result<f64> {
    require_self_pairs(params)?;
    c.validate()?;
    let q = 1.0 - params.p;
    let (x1, x2, u) = (c.x1 as f64, c.x2 as f64, c.u as f64);
    let nn = n_squared(c);
    match winner {
        Opinion::One => {
            if c.x1 < 2 || c.x2 < 1 {
                return Err(Error::GapPole {
                    config: *c,
                    reason: "Opinion-1 gap drift needs x1 >= 2 and x2 >= 1",
                });
            }
            let psi = x2 / x1;
            Ok(-(psi / nn) * (x1 - q * x2 - q * x2 / (x1 - 1.0) - u / (x1 + 1.0)))
        }
        Opinion::Two => {
            if c.x2 < 2 || c.x1 < 1 {
                return Err(Error::GapPole {
                    config: *c,
                    reason: "Opinion-2 gap drift needs x2 >= 2 and x1 >= 1",
                });
            }
            let psi = x1 / x2;
            Ok(-(psi / nn) * (q * x2 - x1 - x1 / (x2 - 1.0) - u / (x2 + 1.0)))
        }
    }
}

/// Probabilities of a `+2` and a `-2` step of the undecided surplus.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurplusStep {
    /// `(2 - p) x1 x2 / n^2`
    pub plus: f64,
    /// `u (x1 + x2) / n^2`
    pub minus: f64,
}

impl SurplusStep {
    pub fn expected_change(&self) -> f64 {
        2.0 * (self.plus - self.minus)
    }
}

pub fn drift_phi_up(c: &Configuration, params: &ProtocolParams) -> Result<SurplusStep> {
    require_self_pairs(params)?;
    c.validate()?;
    let (x1, x2, u) = (c.x1 as f64, c.x2 as f64, c.u as f64);
    let nn = n_squared(c);
    Ok(SurplusStep {
        plus: (2.0 - params.p) * x1 * x2 / nn,
        minus: u * (x1 + x2) / nn,
    })
}

/// Drift constant `x1 (1-p) x2 / n^2` evaluated at the initial
/// configuration. A heuristic choice; [`SubmartingaleTracker`] accepts any
/// constant.
pub fn default_r(c0: &Configuration, p: f64) -> f64 {
    c0.x1 as f64 * (1.0 - p) * c0.x2 as f64 / n_squared(c0)
}

/// Tracks `Y_t = bias(t)^2 - r t` along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubmartingaleTracker {
    r: f64,
    p: f64,
    t: u64,
    bias: f64,
    y: f64,
}

impl SubmartingaleTracker {
    pub fn new(c0: &Configuration, p: f64, r: f64) -> Self {
        let bias = weighted_bias(c0, p);
        SubmartingaleTracker {
            r,
            p,
            t: 0,
            bias,
            y: bias * bias,
        }
    }

    /// Records that `c` is the configuration after `elapsed` more
    /// interactions.
    pub fn advance(&mut self, c: &Configuration, elapsed: u64) {
        self.t += elapsed;
        self.bias = weighted_bias(c, self.p);
        self.y = self.bias * self.bias - self.r * self.t as f64;
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn weighted_bias(&self) -> f64 {
        self.bias
    }
}

/// `E[f(next) - f(c)]` by summation over the exact successor law.
pub fn expected_increment<F>(c: &Configuration, params: &ProtocolParams, f: F) -> Result<f64>
where
    F: Fn(&Configuration) -> f64,
{
    let here = f(c);
    Ok(step_distribution(c, params)?
        .iter()
        .map(|(next, prob)| prob * (f(next) - here))
        .sum())
}

/// Largest absolute gap between each closed-form drift and its enumerated
/// counterpart over a scan.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DriftDiscrepancy {
    pub weighted_bias: f64,
    pub weighted_bias_squared: f64,
    pub gap_opinion1: f64,
    pub gap_opinion2: f64,
    pub surplus_plus: f64,
    pub surplus_minus: f64,
    /// Successors whose weighted-bias step is not in `{0, 1-p, 1}`.
    pub step_bound_violations: u64,
    pub configurations: u64,
}

impl DriftDiscrepancy {
    pub fn max(&self) -> f64 {
        [
            self.weighted_bias,
            self.weighted_bias_squared,
            self.gap_opinion1,
            self.gap_opinion2,
            self.surplus_plus,
            self.surplus_minus,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn named(&self) -> Vec<(&'static str, f64)> {
        alloc::vec![
            ("weighted_bias", self.weighted_bias),
            ("weighted_bias_squared", self.weighted_bias_squared),
            ("gap_opinion1", self.gap_opinion1),
            ("gap_opinion2", self.gap_opinion2),
            ("surplus_plus", self.surplus_plus),
            ("surplus_minus", self.surplus_minus),
        ]
    }
}

fn check_one(c: &Configuration, params: &ProtocolParams, acc: &mut DriftDiscrepancy) -> Result<()> {
    let p = params.p;
    let upd = |slot: &mut f64, a: f64, b: f64| *slot = slot.max(libm::fabs(a - b));

    let enumerated = expected_increment(c, params, |s| weighted_bias(s, p))?;
    upd(&mut acc.weighted_bias, drift_weighted_bias(c, params)?, enumerated);

    let enumerated = expected_increment(c, params, |s| {
        let b = weighted_bias(s, p);
        b * b
    })?;
    upd(
        &mut acc.weighted_bias_squared,
        drift_weighted_bias_squared(c, params)?,
        enumerated,
    );

    if c.x1 >= 2 && c.x2 >= 1 {
        let enumerated = expected_increment(c, params, |s| s.x2 as f64 / s.x1 as f64)?;
        upd(&mut acc.gap_opinion1, drift_gap(c, params, Opinion::One)?, enumerated);
    }
    if c.x2 >= 2 && c.x1 >= 1 {
        let enumerated = expected_increment(c, params, |s| s.x1 as f64 / s.x2 as f64)?;
        upd(&mut acc.gap_opinion2, drift_gap(c, params, Opinion::Two)?, enumerated);
    }

    let dist = step_distribution(c, params)?;
    let plus: f64 = dist.iter().filter(|(s, _)| s.u > c.u).map(|e| e.1).sum();
    let minus: f64 = dist.iter().filter(|(s, _)| s.u < c.u).map(|e| e.1).sum();
    let closed = drift_phi_up(c, params)?;
    upd(&mut acc.surplus_plus, closed.plus, plus);
    upd(&mut acc.surplus_minus, closed.minus, minus);

    let here = weighted_bias(c, p);
    for (s, _) in &dist {
        let jump = libm::fabs(weighted_bias(s, p) - here);
        let allowed = [0.0, 1.0 - p, 1.0];
        if !allowed.iter().any(|a| libm::fabs(jump - a) < 1e-12) {
            acc.step_bound_violations += 1;
        }
    }
    acc.configurations += 1;
    Ok(())
}

/// Compares every closed-form drift with enumeration for all configurations
/// with `2 <= n <= n_max` and each stubbornness in `p_grid`.
pub fn scan_drifts(n_max: u64, p_grid: &[f64]) -> Result<DriftDiscrepancy> {
    let mut acc = DriftDiscrepancy::default();
    for &p in p_grid {
        let params = ProtocolParams::new(p)?;
        for n in 2..=n_max {
            for c in Configuration::enumerate(n) {
                check_one(&c, &params, &mut acc)?;
            }
        }
    }
    Ok(acc)
}
