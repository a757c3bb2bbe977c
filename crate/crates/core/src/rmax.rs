//! Single-agent R-MAX over a finite MDP.
//!
//! The learner keeps an optimistic model with one extra absorbing state
//! (index `N`): every unknown `(state, action)` pair pays `r_max` and moves to
//! it. A pair becomes known after `K₁` visits, at which point its empirical
//! successor frequencies and first observed reward replace the placeholder
//! for good. The learner always follows a `T`-step plan on its model and
//! replans when `T` steps have elapsed or a pair has just become known.
//!
//! All randomness lives in the environment; [`RmaxAgent::act`] and
//! [`RmaxAgent::observe`] are deterministic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::Mdp;
use crate::harness::{sample_successor, ProtocolEvent, SeedStreams};
use crate::numeric::snap_ceil;
use crate::planning::{finite_horizon_plan, FiniteHorizonPolicy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RmaxError {
    #[error("reward {reward} is outside [0, {r_max}]")]
    RewardOutOfRange { reward: f64, r_max: f64 },
    #[error("state {0} is out of range")]
    StateOutOfRange(usize),
    #[error("action {0} is out of range")]
    ActionOutOfRange(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmaxConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Assumed ε-return mixing time; also the planning horizon.
    pub t_mix: usize,
    pub r_max: f64,
    /// Replaces the `K₁` formula when set.
    pub k1_override: Option<u64>,
}

impl RmaxConfig {
    pub fn validate(&self) -> Result<(), RmaxError> {
        if !(self.epsilon > 0.0) {
            return Err(RmaxError::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(RmaxError::InvalidConfig(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.t_mix == 0 {
            return Err(RmaxError::InvalidConfig("t_mix must be positive".into()));
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(RmaxError::InvalidConfig(format!("r_max must be positive, got {}", self.r_max)));
        }
        if self.k1_override == Some(0) {
            return Err(RmaxError::InvalidConfig("k1 override must be positive".into()));
        }
        Ok(())
    }

    pub fn replan_horizon(&self) -> usize {
        self.t_mix
    }
}

/// `K₁ = max(⌈4·N·T·R_max/ε⌉³, ⌈−6·ln³(δ / (6·N·k²))⌉) + 1`, saturating at
/// `u64::MAX`.
pub fn k1_threshold(num_states: usize, num_actions: usize, t_mix: usize, r_max: f64, epsilon: f64, delta: f64) -> u64 {
    let n = num_states as f64;
    let k = num_actions as f64;
    let base = snap_ceil(4.0 * n * t_mix as f64 * r_max / epsilon);
    let first = if base >= 2_642_245.0 {
        // 2642245³ > u64::MAX
        u64::MAX
    } else {
        let b = base as u64;
        b.saturating_mul(b).saturating_mul(b)
    };
    let ln = (delta / (6.0 * n * k * k)).ln();
    let second = snap_ceil(-6.0 * ln.powi(3));
    let second = if second >= u64::MAX as f64 { u64::MAX } else { second.max(0.0) as u64 };
    first.max(second).saturating_add(1)
}

/// The visit threshold in force, next to the formula value it may replace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct K1Choice {
    pub formula: u64,
    pub effective: u64,
}

impl K1Choice {
    pub fn overridden(&self) -> bool {
        self.formula != self.effective
    }
}

pub fn effective_k1(config: &RmaxConfig, num_states: usize, num_actions: usize) -> K1Choice {
    let formula = k1_threshold(num_states, num_actions, config.t_mix, config.r_max, config.epsilon, config.delta);
    K1Choice {
        formula,
        effective: config.k1_override.unwrap_or(formula),
    }
}

/// Steps after which R-MAX is ε-close with confidence `1 − δ`, as used for
/// trial lengths: `⌈T · ⌈(2R/ε)(N·k·K₁ + ln(1/δ))⌉ · R/ε⌉`.
///
/// Explorations are `T`-step phases that reach an unknown pair with
/// probability at least `ε / 2R` while the plan is not ε-close; `N·k·K₁`
/// such visits exhaust the unknown pairs, and the steps they cost are
/// amortized to an ε share of the average.
pub fn rmax_step_bound(
    num_states: usize,
    num_actions: usize,
    k1: u64,
    t_mix: usize,
    r_max: f64,
    epsilon: f64,
    delta: f64,
) -> u64 {
    let visits = num_states as f64 * num_actions as f64 * k1 as f64;
    let phases = snap_ceil(2.0 * r_max / epsilon * (visits + (1.0 / delta).ln()));
    let steps = snap_ceil(t_mix as f64 * phases * r_max / epsilon);
    if steps >= u64::MAX as f64 {
        u64::MAX
    } else {
        steps as u64
    }
}

/// The learner's optimistic internal model over `N + 1` states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmaxModel {
    num_real_states: usize,
    num_actions: usize,
    r_max: f64,
    /// `(N + 1) · k` entries.
    reward_est: Vec<f64>,
    /// `(N + 1) · k · (N + 1)` entries.
    trans_est: Vec<f64>,
    known: Vec<bool>,
    /// Successor counts over real states, `N · k · N` entries.
    visits: Vec<u64>,
    visit_totals: Vec<u64>,
    reward_seen: Vec<Option<f64>>,
    known_count: usize,
}

impl RmaxModel {
    /// Fresh model: everything unknown, paying `r_max` and leading to the
    /// fictitious state, which itself loops on every action.
    pub fn new(num_real_states: usize, num_actions: usize, r_max: f64) -> Self {
        assert!(num_real_states >= 1 && num_actions >= 1);
        let total = num_real_states + 1;
        let fict = num_real_states;
        let mut trans_est = vec![0.0; total * num_actions * total];
        for cell in 0..total * num_actions {
            trans_est[cell * total + fict] = 1.0;
        }
        Self {
            num_real_states,
            num_actions,
            r_max,
            reward_est: vec![r_max; total * num_actions],
            trans_est,
            known: vec![false; num_real_states * num_actions],
            visits: vec![0; num_real_states * num_actions * num_real_states],
            visit_totals: vec![0; num_real_states * num_actions],
            reward_seen: vec![None; num_real_states * num_actions],
            known_count: 0,
        }
    }

    pub fn num_real_states(&self) -> usize {
        self.num_real_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Index of the fictitious state, `N`.
    pub fn fictitious_state(&self) -> usize {
        self.num_real_states
    }

    pub fn is_known(&self, state: usize, action: usize) -> bool {
        self.known[state * self.num_actions + action]
    }

    pub fn known_count(&self) -> usize {
        self.known_count
    }

    pub fn reward_estimate(&self, state: usize, action: usize) -> f64 {
        self.reward_est[state * self.num_actions + action]
    }

    pub fn reward_seen(&self, state: usize, action: usize) -> Option<f64> {
        self.reward_seen[state * self.num_actions + action]
    }

    /// Estimated transition row over all `N + 1` model states.
    pub fn transition_estimate(&self, state: usize, action: usize) -> &[f64] {
        let total = self.num_real_states + 1;
        let start = (state * self.num_actions + action) * total;
        &self.trans_est[start..start + total]
    }

    /// Successor counts over real states recorded for `(state, action)`.
    pub fn successor_counts(&self, state: usize, action: usize) -> &[u64] {
        let n = self.num_real_states;
        let start = (state * self.num_actions + action) * n;
        &self.visits[start..start + n]
    }

    pub fn visit_count(&self, state: usize, action: usize) -> u64 {
        self.visit_totals[state * self.num_actions + action]
    }

    /// The model as an MDP over `N + 1` states, for planning.
    pub fn as_mdp(&self) -> Mdp {
        Mdp::from_parts_unchecked(
            self.num_real_states + 1,
            self.num_actions,
            self.r_max,
            self.reward_est.clone(),
            self.trans_est.clone(),
        )
    }

    /// Records one visit. Returns `true` when the pair becomes known.
    fn record(&mut self, state: usize, action: usize, reward: f64, next: usize, k1: u64) -> bool {
        let cell = state * self.num_actions + action;
        if self.known[cell] {
            return false;
        }
        if self.reward_seen[cell].is_none() {
            self.reward_seen[cell] = Some(reward);
        }
        self.visits[cell * self.num_real_states + next] += 1;
        self.visit_totals[cell] += 1;
        if self.visit_totals[cell] < k1 {
            return false;
        }
        let total = self.visit_totals[cell] as f64;
        let width = self.num_real_states + 1;
        for t in 0..self.num_real_states {
            self.trans_est[cell * width + t] = self.visits[cell * self.num_real_states + t] as f64 / total;
        }
        self.trans_est[cell * width + self.num_real_states] = 0.0;
        self.reward_est[cell] = self.reward_seen[cell].expect("recorded above");
        self.known[cell] = true;
        self.known_count += 1;
        true
    }
}

/// Fresh optimistic model for `N` real states and `k` actions.
pub fn init_model(num_states: usize, num_actions: usize, config: &RmaxConfig) -> RmaxModel {
    RmaxModel::new(num_states, num_actions, config.r_max)
}

/// What [`RmaxAgent::act`] decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RmaxDecision {
    pub action: usize,
    pub replanned: bool,
}

/// An R-MAX learner and its execution state.
#[derive(Debug, Clone, PartialEq)]
pub struct RmaxAgent {
    config: RmaxConfig,
    k1: K1Choice,
    model: RmaxModel,
    plan: Option<FiniteHorizonPolicy>,
    /// Model changed since `plan` was computed.
    plan_stale: bool,
    steps_since_replan: usize,
    replan_pending: bool,
    step_count: u64,
}

impl RmaxAgent {
    pub fn new(num_states: usize, num_actions: usize, config: RmaxConfig) -> Result<Self, RmaxError> {
        config.validate()?;
        if num_states == 0 || num_actions == 0 {
            return Err(RmaxError::InvalidConfig("R-MAX needs at least one state and one action".into()));
        }
        let k1 = effective_k1(&config, num_states, num_actions);
        Ok(Self {
            model: init_model(num_states, num_actions, &config),
            config,
            k1,
            plan: None,
            plan_stale: true,
            steps_since_replan: 0,
            replan_pending: true,
            step_count: 0,
        })
    }

    pub fn config(&self) -> &RmaxConfig {
        &self.config
    }

    pub fn k1(&self) -> K1Choice {
        self.k1
    }

    pub fn model(&self) -> &RmaxModel {
        &self.model
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn current_plan(&self) -> Option<&FiniteHorizonPolicy> {
        self.plan.as_ref()
    }

    /// Forces a replan at the next [`act`](Self::act).
    pub fn request_replan(&mut self) {
        self.replan_pending = true;
    }

    /// Next action from `state`, replanning first when a pair became known at
    /// the last observation or the current plan has run for `T` steps.
    pub fn act(&mut self, state: usize) -> RmaxDecision {
        assert!(state < self.model.num_real_states, "state {state} is not a real state");
        let horizon = self.config.replan_horizon();
        let replanned = self.replan_pending || self.plan.is_none() || self.steps_since_replan >= horizon;
        if replanned {
            if self.plan_stale || self.plan.is_none() {
                self.plan = Some(finite_horizon_plan(&self.model.as_mdp(), horizon).policy);
                self.plan_stale = false;
            }
            self.steps_since_replan = 0;
            self.replan_pending = false;
        }
        let plan = self.plan.as_ref().expect("plan exists after replanning");
        let action = plan.action_at(self.steps_since_replan, state);
        self.steps_since_replan += 1;
        RmaxDecision { action, replanned }
    }

    /// Updates the model with one transition. Returns `true` when
    /// `(state, action)` has just become known.
    pub fn observe(&mut self, state: usize, action: usize, reward: f64, next_state: usize) -> Result<bool, RmaxError> {
        let n = self.model.num_real_states;
        if state >= n {
            return Err(RmaxError::StateOutOfRange(state));
        }
        if next_state >= n {
            return Err(RmaxError::StateOutOfRange(next_state));
        }
        if action >= self.model.num_actions {
            return Err(RmaxError::ActionOutOfRange(action));
        }
        if !(reward >= 0.0 && reward <= self.config.r_max) {
            return Err(RmaxError::RewardOutOfRange {
                reward,
                r_max: self.config.r_max,
            });
        }
        self.step_count += 1;
        let flipped = self.model.record(state, action, reward, next_state, self.k1.effective);
        if flipped {
            self.plan_stale = true;
            self.replan_pending = true;
        }
        Ok(flipped)
    }
}

/// One step of a single-agent R-MAX run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmaxStep {
    pub step: u64,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    pub replanned: bool,
    pub became_known: bool,
    pub known_count: usize,
}

impl RmaxStep {
    /// Events in the order a controller emits them.
    pub fn events(&self) -> Vec<ProtocolEvent> {
        let mut out = Vec::new();
        if self.replanned {
            out.push(ProtocolEvent::Replan);
        }
        if self.became_known {
            out.push(ProtocolEvent::Known { count: self.known_count });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmaxTrace {
    pub seed: u64,
    pub k1: K1Choice,
    pub steps: Vec<RmaxStep>,
}

impl RmaxTrace {
    pub fn running_average(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.reward).sum::<f64>() / self.steps.len() as f64
    }
}

/// Runs R-MAX against `mdp` for `num_steps` steps from state 0. The
/// environment draws successors from the environment stream of `seed`.
pub fn run_rmax(mdp: &Mdp, config: &RmaxConfig, seed: u64, num_steps: u64) -> Result<RmaxTrace, RmaxError> {
    run_rmax_from(mdp, config, seed, num_steps, 0)
}

pub fn run_rmax_from(
    mdp: &Mdp,
    config: &RmaxConfig,
    seed: u64,
    num_steps: u64,
    start_state: usize,
) -> Result<RmaxTrace, RmaxError> {
    let mut agent = RmaxAgent::new(mdp.num_states(), mdp.num_actions(), config.clone())?;
    if start_state >= mdp.num_states() {
        return Err(RmaxError::StateOutOfRange(start_state));
    }
    let mut env_rng = SeedStreams::new(seed).environment();
    let mut state = start_state;
    let mut steps = Vec::with_capacity(num_steps as usize);
    for step in 0..num_steps {
        let decision = agent.act(state);
        let reward = mdp.reward(state, decision.action);
        let next_state = sample_successor(mdp.row(state, decision.action), &mut env_rng);
        let became_known = agent.observe(state, decision.action, reward, next_state)?;
        steps.push(RmaxStep {
            step,
            state,
            action: decision.action,
            reward,
            next_state,
            replanned: decision.replanned,
            became_known,
            known_count: agent.model().known_count(),
        });
        state = next_state;
    }
    Ok(RmaxTrace {
        seed,
        k1: agent.k1(),
        steps,
    })
}
