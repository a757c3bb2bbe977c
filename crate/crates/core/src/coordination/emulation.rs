use std::any::Any;

use super::{AgentController, ConfigError, ControllerError, JointActionIndexing};
use crate::harness::{Observation, Phase, PrivateObservation, ProtocolEvent};
use crate::rmax::{RmaxAgent, RmaxConfig, RmaxModel};

/// One agent's copy of a team R-MAX learner over a shared joint-action
/// indexing. The agent plays its own component of the joint action.
///
/// Copies built from the same indexing and configuration stay identical,
/// because they see the same states and payoffs and R-MAX is deterministic.
#[derive(Debug, Clone)]
pub struct EmulationController {
    agent_id: usize,
    /// The agent's real action count; components at or above it are clamped.
    own_count: usize,
    indexing: JointActionIndexing,
    rmax: RmaxAgent,
    last: Option<(usize, usize)>,
    events: Vec<ProtocolEvent>,
}

impl EmulationController {
    pub fn new(
        agent_id: usize,
        num_states: usize,
        own_count: usize,
        indexing: JointActionIndexing,
        config: RmaxConfig,
    ) -> Result<Self, ConfigError> {
        if agent_id >= indexing.num_agents() {
            return Err(ConfigError::Invalid(format!(
                "agent {agent_id} is not covered by an indexing of {} agents",
                indexing.num_agents()
            )));
        }
        if own_count == 0 {
            return Err(ConfigError::Invalid(format!("agent {agent_id} has no actions")));
        }
        let rmax = RmaxAgent::new(num_states, indexing.size(), config)?;
        Ok(Self {
            agent_id,
            own_count,
            indexing,
            rmax,
            last: None,
            events: Vec::new(),
        })
    }

    pub fn indexing(&self) -> &JointActionIndexing {
        &self.indexing
    }

    pub fn rmax(&self) -> &RmaxAgent {
        &self.rmax
    }

    /// Own action for `state`, and whether the learner replanned first.
    pub fn decide(&mut self, state: usize) -> (usize, bool) {
        let d = self.rmax.act(state);
        self.last = Some((state, d.action));
        let own = self.indexing.component(d.action, self.agent_id);
        (own.min(self.own_count - 1), d.replanned)
    }

    /// Feeds the outcome of the last decision to the learner. Returns `true`
    /// when the planned pair has just become known.
    pub fn learn(&mut self, obs: &PrivateObservation) -> Result<bool, ControllerError> {
        let (state, joint) = self.last.ok_or(ControllerError::ObserveBeforeAct)?;
        Ok(self.rmax.observe(state, joint, obs.payoff, obs.next_state)?)
    }

    pub fn request_replan(&mut self) {
        self.rmax.request_replan();
    }
}

impl AgentController for EmulationController {
    fn agent_id(&self) -> usize {
        self.agent_id
    }

    fn act(&mut self, state: usize) -> usize {
        let (own, replanned) = self.decide(state);
        if replanned {
            self.events.push(ProtocolEvent::Replan);
        }
        own
    }

    fn observe(&mut self, obs: &Observation) -> Result<(), ControllerError> {
        if self.learn(obs.private())? {
            self.events.push(ProtocolEvent::Known {
                count: self.rmax.model().known_count(),
            });
        }
        Ok(())
    }

    fn phase(&self) -> Phase {
        Phase::Rmax
    }

    fn drain_events(&mut self) -> Vec<ProtocolEvent> {
        std::mem::take(&mut self.events)
    }

    fn rmax_model(&self) -> Option<&RmaxModel> {
        Some(self.rmax.model())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Controllers that all emulate one R-MAX learner under `indexing`, whose
/// counts are the agents' real action counts.
pub fn make_case1_controllers(
    num_states: usize,
    indexing: &JointActionIndexing,
    config: &RmaxConfig,
) -> Result<Vec<EmulationController>, ConfigError> {
    let counts = indexing.assumed_action_counts();
    (0..indexing.num_agents())
        .map(|i| EmulationController::new(i, num_states, counts[i], indexing.clone(), config.clone()))
        .collect()
}

/// As [`make_case1_controllers`], with the indexing built from a shared
/// agent order and the now commonly known action counts.
pub fn make_case2_controllers(
    num_states: usize,
    action_counts: Vec<usize>,
    agent_order: Vec<usize>,
    config: &RmaxConfig,
) -> Result<Vec<EmulationController>, ConfigError> {
    let indexing = JointActionIndexing::new(agent_order, action_counts)?;
    make_case1_controllers(num_states, &indexing, config)
}
