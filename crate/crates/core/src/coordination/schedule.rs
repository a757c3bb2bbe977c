//! Lengths of the order-search protocols.
//!
//! * `m`: trials per size hypothesis, the least integer with
//!   `m > ln(δ/2) / ln(1 − p_same·(1 − δ/2))`, `p_same = 1/n!`.
//! * `t_prime`: trial length, at least the least integer above `m·R/ε`, and
//!   at least the R-MAX step bound at confidence `δ/2` when its inputs are
//!   known.
//! * `q`: exploitation length, the least integer above
//!   `(1/γ)·2·m·|sizes|·t_prime`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::strictly_above;
use crate::rmax::rmax_step_bound;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("invalid schedule parameter: {0}")]
    Invalid(String),
}

/// What the R-MAX step bound needs beyond the accuracy parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RmaxBoundInputs {
    pub num_states: usize,
    pub num_joint_actions: usize,
    pub k1: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
    pub r_max: f64,
    pub num_agents: usize,
    pub t_mix: usize,
    /// Bound on every agent's action count; 1 when the counts are known.
    pub bound: usize,
    pub t_prime_floor: u64,
    pub rmax_bound: Option<RmaxBoundInputs>,
}

impl ScheduleParams {
    pub fn new(epsilon: f64, delta: f64, gamma: f64, r_max: f64, num_agents: usize, t_mix: usize, bound: usize) -> Self {
        Self {
            epsilon,
            delta,
            gamma,
            r_max,
            num_agents,
            t_mix,
            bound,
            t_prime_floor: 0,
            rmax_bound: None,
        }
    }
}

/// Assumed mixing times for the unknown-mixing-time protocol:
/// `first · 2^i` in phase `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixingSchedule {
    pub first: usize,
}

impl Default for MixingSchedule {
    fn default() -> Self {
        Self { first: 1 }
    }
}

impl MixingSchedule {
    pub fn assumed(&self, phase: usize) -> usize {
        self.first.saturating_mul(1usize.checked_shl(phase as u32).unwrap_or(usize::MAX))
    }

    /// First phase whose assumed mixing time is at least `t`.
    pub fn phase_reaching(&self, t: usize) -> usize {
        (0..).find(|&i| self.assumed(i) >= t).expect("doubling reaches every bound")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSchedule {
    pub m: u64,
    pub t_prime: u64,
    pub q: u64,
    pub b: usize,
    /// Size hypotheses tried in order, `m` trials each.
    pub sizes_order: Vec<Vec<usize>>,
    pub mixing_schedule: MixingSchedule,
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
    pub t_mix: usize,
    pub p_same: f64,
    /// `t_prime` from the `R/T′ < ε/m` rule alone.
    pub t_prime_trial_rule: u64,
    pub rmax_bound: Option<u64>,
}

impl ProtocolSchedule {
    pub fn num_trials(&self) -> u64 {
        self.m * self.sizes_order.len() as u64
    }

    pub fn exploration_steps(&self) -> u64 {
        self.num_trials().saturating_mul(self.t_prime)
    }

    /// Exploration plus exploitation: the step budget of one pass.
    pub fn phase_budget(&self) -> u64 {
        self.exploration_steps().saturating_add(self.q)
    }

    /// Size hypotheses of trial `trial`.
    pub fn sizes_for_trial(&self, trial: u64) -> &[usize] {
        &self.sizes_order[(trial / self.m) as usize]
    }

    /// Replaces the hypotheses with the one true count tuple.
    pub fn with_known_counts(mut self, counts: Vec<usize>) -> Self {
        self.sizes_order = vec![counts];
        self
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Least `m` with `[1 − p_same·(1 − δ/2)]^m < δ/2`.
pub fn required_trials(delta: f64, num_agents: usize) -> u64 {
    let p_same = 1.0 / factorial(num_agents);
    let ratio = (delta / 2.0).ln() / (1.0 - p_same * (1.0 - delta / 2.0)).ln();
    strictly_above(ratio).max(1.0) as u64
}

/// Least `T′` with `R / T′ < ε / m`.
pub fn trial_length_rule(m: u64, r_max: f64, epsilon: f64) -> u64 {
    strictly_above(m as f64 * r_max / epsilon).max(1.0) as u64
}

/// Least `Q` with `Q > (1/γ)·2·m·sizes·T′`.
pub fn exploitation_length(gamma: f64, m: u64, num_sizes: usize, t_prime: u64) -> u64 {
    let x = 2.0 * m as f64 * num_sizes as f64 * t_prime as f64 / gamma;
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        strictly_above(x) as u64
    }
}

/// Every count tuple in `[1, b]^n`, lexicographic with agent 0 major.
pub fn size_hypotheses(bound: usize, num_agents: usize) -> Vec<Vec<usize>> {
    let total = bound.pow(num_agents as u32);
    (0..total)
        .map(|mut i| {
            let mut t = vec![0; num_agents];
            for slot in t.iter_mut().rev() {
                *slot = i % bound + 1;
                i /= bound;
            }
            t
        })
        .collect()
}

pub fn compute_schedule(params: &ScheduleParams) -> Result<ProtocolSchedule, ScheduleError> {
    let p = params;
    if !(p.epsilon > 0.0) {
        return Err(ScheduleError::Invalid(format!("epsilon must be positive, got {}", p.epsilon)));
    }
    if !(p.delta > 0.0 && p.delta < 1.0) {
        return Err(ScheduleError::Invalid(format!("delta must lie in (0, 1), got {}", p.delta)));
    }
    if !(p.gamma > 0.0 && p.gamma < 1.0) {
        return Err(ScheduleError::Invalid(format!("gamma must lie in (0, 1), got {}", p.gamma)));
    }
    if !(p.r_max > 0.0) {
        return Err(ScheduleError::Invalid(format!("r_max must be positive, got {}", p.r_max)));
    }
    if p.num_agents < 2 || p.t_mix == 0 || p.bound == 0 {
        return Err(ScheduleError::Invalid("need at least two agents, t_mix ≥ 1 and b ≥ 1".into()));
    }
    let m = required_trials(p.delta, p.num_agents);
    let rule = trial_length_rule(m, p.r_max, p.epsilon);
    let rmax_bound = p.rmax_bound.map(|inputs| {
        rmax_step_bound(
            inputs.num_states,
            inputs.num_joint_actions,
            inputs.k1,
            p.t_mix,
            p.r_max,
            p.epsilon,
            p.delta / 2.0,
        )
    });
    let t_prime = rule.max(rmax_bound.unwrap_or(0)).max(p.t_prime_floor);
    let sizes_order = size_hypotheses(p.bound, p.num_agents);
    let q = exploitation_length(p.gamma, m, sizes_order.len(), t_prime);
    Ok(ProtocolSchedule {
        m,
        t_prime,
        q,
        b: p.bound,
        sizes_order,
        mixing_schedule: MixingSchedule::default(),
        epsilon: p.epsilon,
        delta: p.delta,
        gamma: p.gamma,
        t_mix: p.t_mix,
        p_same: 1.0 / factorial(p.num_agents),
        t_prime_trial_rule: rule,
        rmax_bound,
    })
}
