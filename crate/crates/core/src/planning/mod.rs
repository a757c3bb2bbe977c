//! Exact solvers over small MDPs.
//!
//! [`finite_horizon_plan`] is the deterministic T-step planner used inside
//! R-MAX. The average-reward routines ([`stationary_average_reward`],
//! [`optimal_value_oracle`], [`epsilon_mixing_time`]) are brute-force
//! ground truth for tests, schedules and reports.

mod average;
mod horizon;

pub use average::{
    default_mixing_cap, epsilon_mixing_time, expected_t_step_average, optimal_value_oracle,
    optimal_value_oracle_with, stationary_average_reward, stationary_distribution, t_step_averages,
    OracleOptions, ValueReport, STATIONARY_RESIDUAL_LIMIT,
};
pub use horizon::{finite_horizon_plan, FiniteHorizonPlan, FiniteHorizonPolicy};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanningError {
    #[error("stationary distribution solve is singular; the policy chain is not irreducible")]
    Singular,
    #[error("stationary distribution residual {residual:e} exceeds the limit; the chain is ill-conditioned")]
    IllConditioned { residual: f64 },
    #[error("enumeration of {required} policies exceeds the cap of {cap}")]
    SizeCap { required: u128, cap: u64 },
    #[error("no mixing time up to the cap of {t_cap} steps")]
    MixingExceedsCap { t_cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Anything that picks an action from `(step, state)`.
pub trait Policy {
    fn action(&self, step: usize, state: usize) -> usize;
}

/// A pure stationary policy: one action per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StationaryPolicy(Vec<usize>);

impl StationaryPolicy {
    pub fn new(actions: Vec<usize>) -> Self {
        Self(actions)
    }

    pub fn action(&self, state: usize) -> usize {
        self.0[state]
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn num_states(&self) -> usize {
        self.0.len()
    }
}

impl Policy for StationaryPolicy {
    fn action(&self, _step: usize, state: usize) -> usize {
        self.0[state]
    }
}
