//! Per-agent controllers for the coordination protocols.
//!
//! Every controller sees only what its own agent would: the state, its own
//! action, the common payoff and the next state, plus the full joint action
//! when monitoring is perfect.

mod emulation;
mod handshake;
mod indexing;
mod order_search;
mod repeated;
mod runners;
pub mod schedule;
mod unknown_mixing;

use std::any::Any;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use emulation::{make_case1_controllers, make_case2_controllers, EmulationController};
pub use handshake::{resolve_order, HandshakeAgreement, HandshakeController};
pub use indexing::{lex_decode, lex_index, IndexingError, JointActionIndexing};
pub use order_search::{OrderSearchController, TrialRecord};
pub use repeated::{repeated_phase_length, RepeatedGameController};
pub use runners::{run_case3_handshake, run_case4, run_case5, run_case6, run_repeated_game, HandshakeOutcome};
pub use schedule::{compute_schedule, MixingSchedule, ProtocolSchedule, ScheduleError, ScheduleParams};
pub use unknown_mixing::UnknownMixingController;

use crate::game::Cisg;
use crate::harness::{Monitoring, Observation, Phase, ProtocolEvent, SeedStreams};
use crate::rmax::{effective_k1, RmaxConfig, RmaxError};
use schedule::RmaxBoundInputs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtocolKind {
    #[serde(rename = "case1")]
    Case1,
    #[serde(rename = "case2")]
    Case2,
    #[serde(rename = "case3")]
    Case3,
    #[serde(rename = "case4")]
    Case4,
    #[serde(rename = "case5")]
    Case5,
    #[serde(rename = "case6")]
    Case6,
    #[serde(rename = "repeated")]
    Repeated,
    /// One R-MAX learner controlling the joint action directly.
    #[serde(rename = "rmax-single")]
    RmaxSingle,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 8] = [
        ProtocolKind::Case1,
        ProtocolKind::Case2,
        ProtocolKind::Case3,
        ProtocolKind::Case4,
        ProtocolKind::Case5,
        ProtocolKind::Case6,
        ProtocolKind::Repeated,
        ProtocolKind::RmaxSingle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Case1 => "case1",
            ProtocolKind::Case2 => "case2",
            ProtocolKind::Case3 => "case3",
            ProtocolKind::Case4 => "case4",
            ProtocolKind::Case5 => "case5",
            ProtocolKind::Case6 => "case6",
            ProtocolKind::Repeated => "repeated",
            ProtocolKind::RmaxSingle => "rmax-single",
        }
    }

    pub fn requires_t_mix(self) -> bool {
        !matches!(self, ProtocolKind::Case6 | ProtocolKind::Repeated)
    }

    pub fn requires_bound(self) -> bool {
        matches!(self, ProtocolKind::Case5 | ProtocolKind::Case6)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown protocol {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("protocol {protocol} requires perfect monitoring")]
    RequiresPerfectMonitoring { protocol: ProtocolKind },
    #[error("protocol {0} requires a known mixing time (t_mix)")]
    MissingTMix(ProtocolKind),
    #[error("protocol {0} does not take a mixing time: it is assumed unknown")]
    TMixForbidden(ProtocolKind),
    #[error("protocol {0} requires an action-count bound")]
    MissingBound(ProtocolKind),
    #[error("action-count bound {bound} is below the largest action count {largest}")]
    BoundTooSmall { bound: usize, largest: usize },
    #[error("the repeated-game protocol needs a single-state game, this one has {0} states")]
    NotRepeatedGame(usize),
    #[error("protocol {0} needs at least two agents")]
    TooFewAgents(ProtocolKind),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Rmax(#[from] RmaxError),
    #[error(transparent)]
    Indexing(#[from] IndexingError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error(transparent)]
    Rmax(#[from] RmaxError),
    #[error("the handshake needs other agents' actions, which imperfect monitoring hides")]
    RequiresPerfectMonitoring,
    #[error("observation arrived before any action")]
    ObserveBeforeAct,
    #[error("handshake revealed {revealed} actions for this agent, which has {actual}")]
    HandshakeMismatch { revealed: usize, actual: usize },
}

/// Parameters shared by all agents of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
    /// Known ε-return mixing time; absent for the unknown-mixing protocol.
    pub t_mix: Option<usize>,
    pub k1_override: Option<u64>,
    /// Shared bound on every agent's action count.
    pub bound: Option<usize>,
    /// Shared agent order for the emulation protocols; identity when absent.
    #[serde(default)]
    pub agent_order: Option<Vec<usize>>,
    /// Lower bound on the trial length.
    #[serde(default)]
    pub t_prime_floor: u64,
    /// Also bound the trial length below by the R-MAX step bound.
    #[serde(default)]
    pub use_rmax_bound: bool,
}

impl ProtocolConfig {
    pub fn new(kind: ProtocolKind) -> Self {
        Self {
            kind,
            epsilon: 0.1,
            delta: 0.1,
            gamma: 0.1,
            t_mix: None,
            k1_override: None,
            bound: None,
            agent_order: None,
            t_prime_floor: 0,
            use_rmax_bound: false,
        }
    }

    /// Checks everything that does not depend on the game.
    pub fn validate(&self, monitoring: Monitoring) -> Result<(), ConfigError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ConfigError::Invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ConfigError::Invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(ConfigError::Invalid(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if self.kind == ProtocolKind::Case3 && monitoring != Monitoring::Perfect {
            return Err(ConfigError::RequiresPerfectMonitoring { protocol: self.kind });
        }
        if self.kind == ProtocolKind::Case6 && self.t_mix.is_some() {
            return Err(ConfigError::TMixForbidden(self.kind));
        }
        if self.kind.requires_t_mix() && self.t_mix.is_none() {
            return Err(ConfigError::MissingTMix(self.kind));
        }
        if self.t_mix == Some(0) {
            return Err(ConfigError::Invalid("t_mix must be positive".into()));
        }
        if self.kind.requires_bound() && self.bound.is_none() {
            return Err(ConfigError::MissingBound(self.kind));
        }
        if self.bound == Some(0) {
            return Err(ConfigError::Invalid("the action-count bound must be positive".into()));
        }
        if self.k1_override == Some(0) {
            return Err(ConfigError::Invalid("k1 override must be positive".into()));
        }
        Ok(())
    }

    pub fn rmax_config(&self, r_max: f64, t_mix: usize) -> RmaxConfig {
        RmaxConfig {
            epsilon: self.epsilon,
            delta: self.delta,
            t_mix,
            r_max,
            k1_override: self.k1_override,
        }
    }

    /// Schedule for an order search over `num_states` states with assumed
    /// mixing time `t_mix`, accuracy `gamma` and count bound `bound`.
    pub(crate) fn order_search_schedule(
        &self,
        num_states: usize,
        num_agents: usize,
        r_max: f64,
        t_mix: usize,
        gamma: f64,
        bound: usize,
        joint_actions: usize,
    ) -> Result<ProtocolSchedule, ConfigError> {
        let mut params = ScheduleParams::new(self.epsilon, self.delta, gamma, r_max, num_agents, t_mix, bound);
        params.t_prime_floor = self.t_prime_floor;
        if self.use_rmax_bound {
            let k1 = effective_k1(&self.rmax_config(r_max, t_mix), num_states, joint_actions).effective;
            params.rmax_bound = Some(RmaxBoundInputs {
                num_states,
                num_joint_actions: joint_actions,
                k1,
            });
        }
        Ok(compute_schedule(&params)?)
    }
}

/// One agent's side of a protocol.
pub trait AgentController: Send + 'static {
    fn agent_id(&self) -> usize;

    /// Own action at `state`.
    fn act(&mut self, state: usize) -> usize;

    fn observe(&mut self, obs: &Observation) -> Result<(), ControllerError>;

    fn phase(&self) -> Phase;

    /// Events since the last call.
    fn drain_events(&mut self) -> Vec<ProtocolEvent>;

    /// Ordering switches made during exploitation.
    fn switches(&self) -> usize {
        0
    }

    /// The R-MAX model currently driving the agent, if any.
    fn rmax_model(&self) -> Option<&crate::rmax::RmaxModel> {
        None
    }

    fn as_any(&self) -> &dyn Any;
}

/// The controllers of `config.kind` for every agent of `game`. Agent `i`
/// draws private randomness from `streams.agent(i)`.
pub fn build_controllers(
    game: &Cisg,
    config: &ProtocolConfig,
    monitoring: Monitoring,
    streams: &SeedStreams,
) -> Result<Vec<Box<dyn AgentController>>, ConfigError> {
    config.validate(monitoring)?;
    let n = game.num_agents();
    let num_states = game.num_states();
    let counts = game.action_counts().to_vec();
    let r_max = game.r_max();
    let largest = counts.iter().copied().max().unwrap_or(1);
    if let Some(bound) = config.bound {
        if bound < largest {
            return Err(ConfigError::BoundTooSmall { bound, largest });
        }
    }
    let boxed = |v: Vec<_>| v.into_iter().map(|c| Box::new(c) as Box<dyn AgentController>).collect();
    let out: Vec<Box<dyn AgentController>> = match config.kind {
        ProtocolKind::Case1 | ProtocolKind::RmaxSingle => {
            let indexing = JointActionIndexing::canonical(counts);
            let rmax = config.rmax_config(r_max, config.t_mix.expect("validated"));
            boxed(make_case1_controllers(num_states, &indexing, &rmax)?)
        }
        ProtocolKind::Case2 => {
            let order = config.agent_order.clone().unwrap_or_else(|| (0..n).collect());
            let rmax = config.rmax_config(r_max, config.t_mix.expect("validated"));
            boxed(make_case2_controllers(num_states, counts, order, &rmax)?)
        }
        ProtocolKind::Case3 => {
            let rmax = config.rmax_config(r_max, config.t_mix.expect("validated"));
            rmax.validate()?;
            (0..n)
                .map(|i| {
                    Box::new(HandshakeController::new(i, n, num_states, counts[i], rmax.clone(), streams.agent(i)))
                        as Box<dyn AgentController>
                })
                .collect()
        }
        ProtocolKind::Case4 | ProtocolKind::Case5 => {
            if n < 2 {
                return Err(ConfigError::TooFewAgents(config.kind));
            }
            let t_mix = config.t_mix.expect("validated");
            let schedule = if config.kind == ProtocolKind::Case4 {
                let joint = counts.iter().product();
                config
                    .order_search_schedule(num_states, n, r_max, t_mix, config.gamma, 1, joint)?
                    .with_known_counts(counts.clone())
            } else {
                let b = config.bound.expect("validated");
                config.order_search_schedule(num_states, n, r_max, t_mix, config.gamma, b, b.pow(n as u32))?
            };
            let rmax = config.rmax_config(r_max, t_mix);
            rmax.validate()?;
            (0..n)
                .map(|i| {
                    Box::new(OrderSearchController::new(
                        i,
                        n,
                        num_states,
                        counts[i],
                        rmax.clone(),
                        schedule.clone(),
                        streams.agent(i),
                    )) as Box<dyn AgentController>
                })
                .collect()
        }
        ProtocolKind::Case6 => {
            if n < 2 {
                return Err(ConfigError::TooFewAgents(config.kind));
            }
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                out.push(Box::new(UnknownMixingController::new(
                    i,
                    n,
                    num_states,
                    counts[i],
                    r_max,
                    config.clone(),
                    streams.agent(i),
                )?) as Box<dyn AgentController>);
            }
            out
        }
        ProtocolKind::Repeated => {
            if num_states != 1 {
                return Err(ConfigError::NotRepeatedGame(num_states));
            }
            (0..n)
                .map(|i| {
                    let k = config.bound.unwrap_or(counts[i]);
                    Box::new(RepeatedGameController::new(i, counts[i], k, streams.agent(i))) as Box<dyn AgentController>
                })
                .collect()
        }
    };
    Ok(out)
}
