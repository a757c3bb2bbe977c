//! Coordination without a shared agent order.
//!
//! Exploration runs a fixed number of trials. In each, the agent draws a
//! private uniform agent order, assumes the trial's action counts, and runs
//! the emulated R-MAX learner under that indexing for `t_prime` steps,
//! scoring the trial by its average payoff. Trials whose orders happened to
//! agree across agents earn near-optimal payoff.
//!
//! Exploitation replays the best-scoring trial's learner, frozen. After a
//! warm-up of `t_mix` steps, if the exploit average falls more than `2ε`
//! below that trial's score the agent moves on to its next-best trial. The
//! last trial in the ranking is kept for good, so there are at most
//! `trials − 1` switches.

use std::any::Any;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::{AgentController, ControllerError, EmulationController, JointActionIndexing, ProtocolSchedule};
use crate::harness::{Observation, Phase, ProtocolEvent};
use crate::rmax::{RmaxConfig, RmaxModel};

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub agent_order: Vec<usize>,
    pub action_counts: Vec<usize>,
    /// The trial assumes a count for this agent that differs from its real
    /// one.
    pub mismatch: bool,
    pub total_payoff: f64,
    pub steps: u64,
}

impl TrialRecord {
    pub fn average(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.total_payoff / self.steps as f64
        }
    }
}

#[derive(Debug, Clone)]
struct Exploit {
    ranking: Vec<usize>,
    pos: usize,
    total: f64,
    steps: u64,
    switches: usize,
}

#[derive(Debug, Clone)]
pub struct OrderSearchController {
    agent_id: usize,
    num_agents: usize,
    num_states: usize,
    own_count: usize,
    rmax_config: RmaxConfig,
    schedule: ProtocolSchedule,
    rng: ChaCha8Rng,
    trials: Vec<TrialRecord>,
    learners: Vec<EmulationController>,
    exploring: Option<EmulationController>,
    exploit: Option<Exploit>,
    steps: u64,
    events: Vec<ProtocolEvent>,
}

impl OrderSearchController {
    pub fn new(
        agent_id: usize,
        num_agents: usize,
        num_states: usize,
        own_count: usize,
        rmax_config: RmaxConfig,
        schedule: ProtocolSchedule,
        rng: ChaCha8Rng,
    ) -> Self {
        Self {
            agent_id,
            num_agents,
            num_states,
            own_count,
            rmax_config,
            schedule,
            rng,
            trials: Vec::new(),
            learners: Vec::new(),
            exploring: None,
            exploit: None,
            steps: 0,
            events: Vec::new(),
        }
    }

    pub fn schedule(&self) -> &ProtocolSchedule {
        &self.schedule
    }

    /// Finished and running trials, in the order they were played.
    pub fn trials(&self) -> &[TrialRecord] {
        &self.trials
    }

    pub fn is_exploiting(&self) -> bool {
        self.exploit.is_some()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Trial whose learner is being exploited.
    pub fn adopted_trial(&self) -> Option<usize> {
        self.exploit.as_ref().map(|e| e.ranking[e.pos])
    }

    pub(crate) fn into_rng(self) -> ChaCha8Rng {
        self.rng
    }

    fn start_trial(&mut self) {
        let trial = self.trials.len();
        let mut order: Vec<usize> = (0..self.num_agents).collect();
        order.shuffle(&mut self.rng);
        let counts = self.schedule.sizes_for_trial(trial as u64).to_vec();
        let mismatch = counts[self.agent_id] != self.own_count;
        let indexing = JointActionIndexing::new(order.clone(), counts.clone()).expect("valid trial indexing");
        let learner = EmulationController::new(
            self.agent_id,
            self.num_states,
            self.own_count,
            indexing,
            self.rmax_config.clone(),
        )
        .expect("configuration was validated when the controller was built");
        self.events.push(ProtocolEvent::TrialStart {
            trial,
            order: order.clone(),
            counts: counts.clone(),
            mismatch,
        });
        self.trials.push(TrialRecord {
            agent_order: order,
            action_counts: counts,
            mismatch,
            total_payoff: 0.0,
            steps: 0,
        });
        self.exploring = Some(learner);
    }

    fn start_exploit(&mut self) {
        let mut ranking: Vec<usize> = (0..self.trials.len()).collect();
        ranking.sort_by(|&a, &b| {
            self.trials[b]
                .average()
                .total_cmp(&self.trials[a].average())
                .then(a.cmp(&b))
        });
        let best = ranking[0];
        self.learners[best].request_replan();
        self.events.push(ProtocolEvent::Adopt { trial: best });
        self.exploit = Some(Exploit {
            ranking,
            pos: 0,
            total: 0.0,
            steps: 0,
            switches: 0,
        });
    }
}

impl AgentController for OrderSearchController {
    fn agent_id(&self) -> usize {
        self.agent_id
    }

    fn act(&mut self, state: usize) -> usize {
        if let Some(e) = &self.exploit {
            let trial = e.ranking[e.pos];
            return self.learners[trial].decide(state).0;
        }
        if self.exploring.is_none() {
            self.start_trial();
        }
        self.exploring.as_mut().expect("trial running").decide(state).0
    }

    fn observe(&mut self, obs: &Observation) -> Result<(), ControllerError> {
        let payoff = obs.private().payoff;
        self.steps += 1;
        if let Some(e) = &mut self.exploit {
            e.total += payoff;
            e.steps += 1;
            let trial = e.ranking[e.pos];
            let reference = self.trials[trial].average();
            let warm = e.steps >= self.schedule.t_mix as u64;
            let low = e.total / (e.steps as f64) < reference - 2.0 * self.schedule.epsilon;
            if warm && low && e.pos + 1 < e.ranking.len() {
                e.pos += 1;
                e.total = 0.0;
                e.steps = 0;
                e.switches += 1;
                let next = e.ranking[e.pos];
                self.learners[next].request_replan();
                self.events.push(ProtocolEvent::Switch { trial: next });
            }
            return Ok(());
        }
        let learner = self.exploring.as_mut().ok_or(ControllerError::ObserveBeforeAct)?;
        learner.learn(obs.private())?;
        let trial = self.trials.len() - 1;
        let rec = &mut self.trials[trial];
        rec.total_payoff += payoff;
        rec.steps += 1;
        if rec.steps >= self.schedule.t_prime {
            let average = rec.average();
            self.events.push(ProtocolEvent::TrialEnd { trial, average });
            self.learners.push(self.exploring.take().expect("trial running"));
            if self.trials.len() as u64 >= self.schedule.num_trials() {
                self.start_exploit();
            }
        }
        Ok(())
    }

    fn phase(&self) -> Phase {
        if self.exploit.is_some() {
            Phase::Exploit
        } else {
            Phase::Explore
        }
    }

    fn drain_events(&mut self) -> Vec<ProtocolEvent> {
        std::mem::take(&mut self.events)
    }

    fn switches(&self) -> usize {
        self.exploit.as_ref().map_or(0, |e| e.switches)
    }

    fn rmax_model(&self) -> Option<&RmaxModel> {
        match &self.exploit {
            Some(e) => Some(self.learners[e.ranking[e.pos]].rmax().model()),
            None => self.exploring.as_ref().map(|l| l.rmax().model()),
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
