//! Learning action counts and an agent order by watching each other play.
//!
//! Phase A: every agent cycles through its actions `0, 1, …, f−1, 0, …`.
//! Agent `j`'s count is `f_j`, the first step `t ≥ 1` at which it plays 0
//! again. Once every agent has repeated, all agents know all counts, at the
//! same step.
//!
//! Phase B: every agent plays a uniformly drawn action; lower draws come
//! first in the order. Equal draws force a redraw, except between agents
//! with a single action, who could never draw differently and are ordered by
//! id instead.

use std::any::Any;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{AgentController, ControllerError, EmulationController, JointActionIndexing};
use crate::harness::{Observation, Phase, ProtocolEvent};
use crate::rmax::{RmaxConfig, RmaxModel};

/// What an agent holds when the handshake ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandshakeAgreement {
    pub agent_order: Vec<usize>,
    pub action_counts: Vec<usize>,
    /// Steps spent cycling.
    pub phase_a_steps: usize,
    /// Draw rounds that ended in a tie.
    pub redraws: usize,
}

/// Agent order from one round of draws, or `None` when the round must be
/// redrawn.
pub fn resolve_order(draws: &[usize], counts: &[usize]) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..draws.len()).collect();
    order.sort_by_key(|&i| (draws[i], i));
    let tied = order
        .windows(2)
        .any(|w| draws[w[0]] == draws[w[1]] && !(counts[w[0]] == 1 && counts[w[1]] == 1));
    (!tied).then_some(order)
}

#[derive(Debug, Clone)]
enum Stage {
    Cycle,
    Draw,
    Emulate(Box<EmulationController>),
}

#[derive(Debug, Clone)]
pub struct HandshakeController {
    agent_id: usize,
    num_states: usize,
    own_count: usize,
    rmax_config: RmaxConfig,
    rng: ChaCha8Rng,
    stage: Stage,
    cycle_step: usize,
    revealed: Vec<Option<usize>>,
    redraws: usize,
    agreement: Option<HandshakeAgreement>,
    events: Vec<ProtocolEvent>,
}

impl HandshakeController {
    pub fn new(
        agent_id: usize,
        num_agents: usize,
        num_states: usize,
        own_count: usize,
        rmax_config: RmaxConfig,
        rng: ChaCha8Rng,
    ) -> Self {
        Self {
            agent_id,
            num_states,
            own_count,
            rmax_config,
            rng,
            stage: Stage::Cycle,
            cycle_step: 0,
            revealed: vec![None; num_agents],
            redraws: 0,
            agreement: None,
            events: Vec::new(),
        }
    }

    pub fn agreement(&self) -> Option<&HandshakeAgreement> {
        self.agreement.as_ref()
    }

    fn finish_cycle(&mut self) -> Result<(), ControllerError> {
        let counts: Vec<usize> = self.revealed.iter().map(|c| c.expect("all revealed")).collect();
        if counts[self.agent_id] != self.own_count {
            return Err(ControllerError::HandshakeMismatch {
                revealed: counts[self.agent_id],
                actual: self.own_count,
            });
        }
        self.events.push(ProtocolEvent::CountsRevealed { counts });
        self.stage = Stage::Draw;
        Ok(())
    }

    fn finish_draw(&mut self, draws: &[usize]) -> Result<(), ControllerError> {
        let counts: Vec<usize> = self.revealed.iter().map(|c| c.expect("all revealed")).collect();
        let Some(order) = resolve_order(draws, &counts) else {
            self.redraws += 1;
            self.events.push(ProtocolEvent::Redraw);
            return Ok(());
        };
        let indexing = JointActionIndexing::new(order.clone(), counts.clone()).expect("order is a permutation");
        let emulation = EmulationController::new(
            self.agent_id,
            self.num_states,
            self.own_count,
            indexing,
            self.rmax_config.clone(),
        )
        .map_err(|e| match e {
            super::ConfigError::Rmax(r) => ControllerError::Rmax(r),
            other => unreachable!("indexing was validated: {other}"),
        })?;
        self.events.push(ProtocolEvent::OrderAgreed { order: order.clone() });
        self.agreement = Some(HandshakeAgreement {
            agent_order: order,
            action_counts: counts,
            phase_a_steps: self.cycle_step,
            redraws: self.redraws,
        });
        self.stage = Stage::Emulate(Box::new(emulation));
        Ok(())
    }
}

impl AgentController for HandshakeController {
    fn agent_id(&self) -> usize {
        self.agent_id
    }

    fn act(&mut self, state: usize) -> usize {
        match &mut self.stage {
            Stage::Cycle => self.cycle_step % self.own_count,
            Stage::Draw => self.rng.random_range(0..self.own_count),
            Stage::Emulate(e) => {
                let (own, replanned) = e.decide(state);
                if replanned {
                    self.events.push(ProtocolEvent::Replan);
                }
                own
            }
        }
    }

    fn observe(&mut self, obs: &Observation) -> Result<(), ControllerError> {
        match &mut self.stage {
            Stage::Cycle => {
                let actions = obs.others_actions().ok_or(ControllerError::RequiresPerfectMonitoring)?;
                let t = self.cycle_step;
                for (slot, &a) in self.revealed.iter_mut().zip(actions) {
                    if slot.is_none() && t >= 1 && a == 0 {
                        *slot = Some(t);
                    }
                }
                self.cycle_step += 1;
                if self.revealed.iter().all(Option::is_some) {
                    self.finish_cycle()?;
                }
            }
            Stage::Draw => {
                let draws = obs.others_actions().ok_or(ControllerError::RequiresPerfectMonitoring)?.to_vec();
                self.finish_draw(&draws)?;
            }
            Stage::Emulate(e) => {
                if e.learn(obs.private())? {
                    let count = e.rmax().model().known_count();
                    self.events.push(ProtocolEvent::Known { count });
                }
            }
        }
        Ok(())
    }

    fn phase(&self) -> Phase {
        match self.stage {
            Stage::Emulate(_) => Phase::Rmax,
            _ => Phase::Handshake,
        }
    }

    fn drain_events(&mut self) -> Vec<ProtocolEvent> {
        std::mem::take(&mut self.events)
    }

    fn rmax_model(&self) -> Option<&RmaxModel> {
        match &self.stage {
            Stage::Emulate(e) => Some(e.rmax().model()),
            _ => None,
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_draw_goes_first() {
        assert_eq!(resolve_order(&[0, 2], &[2, 3]), Some(vec![0, 1]));
        assert_eq!(resolve_order(&[1, 0], &[2, 3]), Some(vec![1, 0]));
        assert_eq!(resolve_order(&[2, 0, 1], &[3, 3, 3]), Some(vec![1, 2, 0]));
    }

    #[test]
    fn ties_redraw() {
        assert_eq!(resolve_order(&[1, 1], &[2, 3]), None);
        assert_eq!(resolve_order(&[0, 0, 1], &[1, 2, 2]), None);
    }

    #[test]
    fn single_action_agents_fall_back_to_id() {
        assert_eq!(resolve_order(&[0, 0], &[1, 1]), Some(vec![0, 1]));
        assert_eq!(resolve_order(&[0, 1, 0], &[1, 2, 1]), Some(vec![0, 2, 1]));
        assert_eq!(resolve_order(&[0, 0, 0], &[1, 2, 1]), None);
    }
}
