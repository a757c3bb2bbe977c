use std::any::Any;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{AgentController, ControllerError};
use crate::harness::{Observation, Phase, ProtocolEvent};

/// Length `k³` of the random phase.
pub fn repeated_phase_length(k: usize) -> u64 {
    (k as u64).saturating_pow(3)
}

/// Plays uniformly at random for `k³` steps, then repeats forever its own
/// action from the earliest step with the highest payoff seen. The payoff is
/// common, so every agent locks onto the same step.
#[derive(Debug, Clone)]
pub struct RepeatedGameController {
    agent_id: usize,
    own_count: usize,
    horizon: u64,
    rng: ChaCha8Rng,
    step: u64,
    last_action: Option<usize>,
    /// `(payoff, step, own action)` of the earliest best step.
    best: Option<(f64, u64, usize)>,
    locked: Option<usize>,
    events: Vec<ProtocolEvent>,
}

impl RepeatedGameController {
    pub fn new(agent_id: usize, own_count: usize, k: usize, rng: ChaCha8Rng) -> Self {
        Self {
            agent_id,
            own_count,
            horizon: repeated_phase_length(k),
            rng,
            step: 0,
            last_action: None,
            best: None,
            locked: None,
            events: Vec::new(),
        }
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn locked_action(&self) -> Option<usize> {
        self.locked
    }

    /// Step whose action was locked in.
    pub fn locked_step(&self) -> Option<u64> {
        self.locked.and(self.best.map(|b| b.1))
    }

    fn lock(&mut self) {
        if let Some((_, step, action)) = self.best {
            self.locked = Some(action);
            self.events.push(ProtocolEvent::Lock { step, action });
        }
    }
}

impl AgentController for RepeatedGameController {
    fn agent_id(&self) -> usize {
        self.agent_id
    }

    fn act(&mut self, _state: usize) -> usize {
        if self.locked.is_none() && self.step >= self.horizon {
            // k = 0: nothing was sampled, so lock onto action 0
            self.best.get_or_insert((0.0, 0, 0));
            self.lock();
        }
        let a = match self.locked {
            Some(a) => a,
            None => self.rng.random_range(0..self.own_count),
        };
        self.last_action = Some(a);
        a
    }

    fn observe(&mut self, obs: &Observation) -> Result<(), ControllerError> {
        let a = self.last_action.ok_or(ControllerError::ObserveBeforeAct)?;
        if self.locked.is_none() {
            let payoff = obs.private().payoff;
            if self.best.is_none_or(|(p, _, _)| payoff > p) {
                self.best = Some((payoff, self.step, a));
            }
            if self.step + 1 == self.horizon {
                self.lock();
            }
        }
        self.step += 1;
        Ok(())
    }

    fn phase(&self) -> Phase {
        if self.locked.is_some() {
            Phase::Locked
        } else {
            Phase::Random
        }
    }

    fn drain_events(&mut self) -> Vec<ProtocolEvent> {
        std::mem::take(&mut self.events)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
