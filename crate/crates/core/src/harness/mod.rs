//! Seeded lockstep simulation of a team of controllers on a game.
//!
//! Each stage every controller picks an action for the current state, the
//! environment samples the next state from its own RNG stream, and each
//! controller receives an observation filtered by the monitoring mode.

mod log;
mod observation;
mod rng;

pub use log::{Phase, ProtocolEvent, RunLog, StepRecord, RUN_LOG_HEADER};
pub use observation::{Monitoring, Observation, PerfectObservation, PrivateObservation};
pub use rng::{sample_successor, SeedStreams};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coordination::{build_controllers, AgentController, ConfigError, ControllerError, ProtocolConfig};
use crate::game::{Cisg, JointAction};
use crate::planning::{optimal_value_oracle_with, OracleOptions, PlanningError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("step {step}: agent {agent} chose action {action}, but it has only {count}")]
    ActionOutOfRange {
        step: u64,
        agent: usize,
        action: usize,
        count: usize,
    },
    #[error("step {step}: agent {agent}: {source}")]
    Controller {
        step: u64,
        agent: usize,
        #[source]
        source: ControllerError,
    },
    #[error("expected {expected} controllers, got {got}")]
    ControllerCount { expected: usize, got: usize },
    #[error("start state {0} is out of range")]
    StartState(usize),
}

/// Everything that determines a run besides the game itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub protocol: ProtocolConfig,
    pub monitoring: Monitoring,
    pub master_seed: u64,
    pub num_steps: u64,
    #[serde(default)]
    pub start_state: usize,
}

pub struct Simulation<'g> {
    game: &'g Cisg,
    monitoring: Monitoring,
    controllers: Vec<Box<dyn AgentController>>,
    env_rng: ChaCha8Rng,
    state: usize,
    step: u64,
    log: RunLog,
}

impl<'g> Simulation<'g> {
    /// Builds the protocol's controllers for `game` from `config`.
    pub fn new(game: &'g Cisg, config: &SimulationConfig) -> Result<Self, HarnessError> {
        let streams = SeedStreams::new(config.master_seed);
        let controllers = build_controllers(game, &config.protocol, config.monitoring, &streams)?;
        Self::with_controllers(game, config, controllers)
    }

    pub fn with_controllers(
        game: &'g Cisg,
        config: &SimulationConfig,
        controllers: Vec<Box<dyn AgentController>>,
    ) -> Result<Self, HarnessError> {
        if controllers.len() != game.num_agents() {
            return Err(HarnessError::ControllerCount {
                expected: game.num_agents(),
                got: controllers.len(),
            });
        }
        if config.start_state >= game.num_states() {
            return Err(HarnessError::StartState(config.start_state));
        }
        let streams = SeedStreams::new(config.master_seed);
        Ok(Self {
            game,
            monitoring: config.monitoring,
            env_rng: streams.environment(),
            state: config.start_state,
            step: 0,
            log: RunLog::new(config.master_seed, game.num_agents(), Some(config.clone())),
            controllers,
        })
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn steps_done(&self) -> u64 {
        self.step
    }

    pub fn controllers(&self) -> &[Box<dyn AgentController>] {
        &self.controllers
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn into_log(self) -> RunLog {
        self.log
    }

    /// Plays one stage.
    pub fn step(&mut self) -> Result<&StepRecord, HarnessError> {
        let s = self.state;
        let step = self.step;
        let counts = self.game.action_counts();
        let n = self.controllers.len();
        let mut actions = Vec::with_capacity(n);
        let mut phases = Vec::with_capacity(n);
        for (agent, c) in self.controllers.iter_mut().enumerate() {
            let a = c.act(s);
            if a >= counts[agent] {
                return Err(HarnessError::ActionOutOfRange {
                    step,
                    agent,
                    action: a,
                    count: counts[agent],
                });
            }
            actions.push(a);
            phases.push(c.phase());
        }
        let joint = JointAction::new(actions);
        let payoff = self.game.reward(s, &joint);
        let next_state = sample_successor(self.game.transition_row(s, &joint), &mut self.env_rng);

        let mut events = Vec::new();
        for (agent, c) in self.controllers.iter_mut().enumerate() {
            let private = PrivateObservation {
                state: s,
                own_action: joint.get(agent),
                payoff,
                next_state,
            };
            let obs = match self.monitoring {
                Monitoring::Imperfect => Observation::Imperfect(private),
                Monitoring::Perfect => {
                    Observation::Perfect(PerfectObservation::new(private, joint.per_agent().to_vec()))
                }
            };
            c.observe(&obs)
                .map_err(|source| HarnessError::Controller { step, agent, source })?;
            self.log.others_reads[agent] += obs.others_reads() as u64;
            events.extend(c.drain_events().into_iter().map(|e| (agent, e)));
            self.log.switches[agent] = c.switches();
        }

        self.state = next_state;
        self.step += 1;
        self.log.records.push(StepRecord {
            step,
            state: s,
            actions: joint.0,
            payoff,
            next_state,
            phases,
            events,
        });
        Ok(self.log.records.last().expect("just pushed"))
    }

    pub fn run(&mut self, num_steps: u64) -> Result<(), HarnessError> {
        for _ in 0..num_steps {
            self.step()?;
        }
        Ok(())
    }
}

/// Runs `config.num_steps` stages and summarizes the run.
pub fn run_simulation(game: &Cisg, config: &SimulationConfig) -> Result<(RunLog, Metrics), HarnessError> {
    let mut sim = Simulation::new(game, config)?;
    sim.run(config.num_steps)?;
    let log = sim.into_log();
    let metrics = Metrics::from_log(&log);
    Ok((log, metrics))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub steps: u64,
    /// Cumulative payoff over steps.
    pub running_average: f64,
    pub v_opt: Option<f64>,
    /// `(1 − γ)(v(M) − 2ε)`.
    pub target: Option<f64>,
    /// `step` of the first record at which the running average reaches the
    /// target.
    pub time_to_target: Option<u64>,
    /// Largest per-agent switch count.
    pub switches: usize,
}

impl Metrics {
    pub fn from_log(log: &RunLog) -> Self {
        Self {
            steps: log.len() as u64,
            running_average: log.running_average(),
            v_opt: None,
            target: None,
            time_to_target: None,
            switches: log.switches.iter().copied().max().unwrap_or(0),
        }
    }

    /// Adds the near-optimality target for a known optimal value.
    pub fn with_oracle_value(log: &RunLog, v_opt: f64, epsilon: f64, gamma: f64) -> Self {
        let target = near_optimal_target(v_opt, epsilon, gamma);
        let mut total = 0.0;
        let mut hit = None;
        for (i, r) in log.records.iter().enumerate() {
            total += r.payoff;
            if total / (i + 1) as f64 >= target {
                hit = Some(r.step);
                break;
            }
        }
        Self {
            v_opt: Some(v_opt),
            target: Some(target),
            time_to_target: hit,
            ..Self::from_log(log)
        }
    }
}

/// `(1 − γ)(v − 2ε)`.
pub fn near_optimal_target(v_opt: f64, epsilon: f64, gamma: f64) -> f64 {
    (1.0 - gamma) * (v_opt - 2.0 * epsilon)
}

/// Computes `v(M)` by brute force and scores `log` against it.
pub fn evaluate_against_oracle(log: &RunLog, game: &Cisg, epsilon: f64, gamma: f64) -> Result<Metrics, PlanningError> {
    evaluate_against_oracle_with(log, game, epsilon, gamma, &OracleOptions::default())
}

pub fn evaluate_against_oracle_with(
    log: &RunLog,
    game: &Cisg,
    epsilon: f64,
    gamma: f64,
    options: &OracleOptions,
) -> Result<Metrics, PlanningError> {
    let report = optimal_value_oracle_with(&game.induced_mdp(), options)?;
    Ok(Metrics::with_oracle_value(log, report.optimal_value, epsilon, gamma))
}
