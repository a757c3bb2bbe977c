//! Order search when the mixing time is unknown: run it under assumed
//! mixing times `1, 2, 4, …`, each for the step budget the schedule gives
//! that assumption, with the slack `γ` halved.

use std::any::Any;

use rand_chacha::ChaCha8Rng;

use super::{AgentController, ConfigError, ControllerError, MixingSchedule, OrderSearchController, ProtocolConfig};
use crate::harness::{Observation, Phase, ProtocolEvent};
use crate::rmax::RmaxModel;

#[derive(Debug, Clone)]
pub struct UnknownMixingController {
    agent_id: usize,
    num_agents: usize,
    num_states: usize,
    own_count: usize,
    r_max: f64,
    config: ProtocolConfig,
    mixing: MixingSchedule,
    phase: usize,
    inner: Option<OrderSearchController>,
    phase_steps: u64,
    budget: u64,
    earlier_switches: usize,
    events: Vec<ProtocolEvent>,
}

impl UnknownMixingController {
    pub fn new(
        agent_id: usize,
        num_agents: usize,
        num_states: usize,
        own_count: usize,
        r_max: f64,
        config: ProtocolConfig,
        rng: ChaCha8Rng,
    ) -> Result<Self, ConfigError> {
        let mut c = Self {
            agent_id,
            num_agents,
            num_states,
            own_count,
            r_max,
            config,
            mixing: MixingSchedule::default(),
            phase: 0,
            inner: None,
            phase_steps: 0,
            budget: 0,
            earlier_switches: 0,
            events: Vec::new(),
        };
        c.enter_phase(0, rng)?;
        Ok(c)
    }

    /// Index of the running phase.
    pub fn phase_index(&self) -> usize {
        self.phase
    }

    pub fn assumed_t_mix(&self) -> usize {
        self.mixing.assumed(self.phase)
    }

    pub fn phase_budget(&self) -> u64 {
        self.budget
    }

    pub fn current(&self) -> &OrderSearchController {
        self.inner.as_ref().expect("a phase is always running")
    }

    /// Step budget of phase `phase` under `config`.
    pub fn budget_for(
        config: &ProtocolConfig,
        phase: usize,
        num_states: usize,
        num_agents: usize,
        r_max: f64,
    ) -> Result<u64, ConfigError> {
        let t_mix = MixingSchedule::default().assumed(phase);
        let b = config.bound.expect("validated");
        let s = config.order_search_schedule(
            num_states,
            num_agents,
            r_max,
            t_mix,
            config.gamma / 2.0,
            b,
            b.pow(num_agents as u32),
        )?;
        Ok(s.phase_budget())
    }

    fn enter_phase(&mut self, phase: usize, rng: ChaCha8Rng) -> Result<(), ConfigError> {
        let t_mix = self.mixing.assumed(phase);
        let b = self.config.bound.expect("validated");
        let schedule = self.config.order_search_schedule(
            self.num_states,
            self.num_agents,
            self.r_max,
            t_mix,
            self.config.gamma / 2.0,
            b,
            b.pow(self.num_agents as u32),
        )?;
        let rmax = self.config.rmax_config(self.r_max, t_mix);
        rmax.validate()?;
        self.budget = schedule.phase_budget();
        self.phase = phase;
        self.phase_steps = 0;
        self.inner = Some(OrderSearchController::new(
            self.agent_id,
            self.num_agents,
            self.num_states,
            self.own_count,
            rmax,
            schedule,
            rng,
        ));
        self.events.push(ProtocolEvent::MixingPhase { t_mix });
        Ok(())
    }
}

impl AgentController for UnknownMixingController {
    fn agent_id(&self) -> usize {
        self.agent_id
    }

    fn act(&mut self, state: usize) -> usize {
        let inner = self.inner.as_mut().expect("a phase is always running");
        let a = inner.act(state);
        self.events.extend(inner.drain_events());
        a
    }

    fn observe(&mut self, obs: &Observation) -> Result<(), ControllerError> {
        let inner = self.inner.as_mut().expect("a phase is always running");
        inner.observe(obs)?;
        self.events.extend(inner.drain_events());
        self.phase_steps += 1;
        if self.phase_steps >= self.budget {
            let done = self.inner.take().expect("a phase is always running");
            self.earlier_switches += done.switches();
            self.enter_phase(self.phase + 1, done.into_rng())
                .expect("later phases use the parameters that built the first");
        }
        Ok(())
    }

    fn phase(&self) -> Phase {
        self.current().phase()
    }

    fn drain_events(&mut self) -> Vec<ProtocolEvent> {
        std::mem::take(&mut self.events)
    }

    fn switches(&self) -> usize {
        self.earlier_switches + self.current().switches()
    }

    fn rmax_model(&self) -> Option<&RmaxModel> {
        self.current().rmax_model()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
