use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};

use super::SimulationConfig;
use crate::coordination::JointActionIndexing;
use crate::rmax::RmaxTrace;

/// Coarse protocol phase of one agent, as recorded per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Emulating R-MAX over a shared joint-action indexing.
    Rmax,
    Handshake,
    Explore,
    Exploit,
    /// Uniform play in the repeated-game algorithm.
    Random,
    Locked,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Rmax => "rmax",
            Phase::Handshake => "handshake",
            Phase::Explore => "explore",
            Phase::Exploit => "exploit",
            Phase::Random => "random",
            Phase::Locked => "locked",
        })
    }
}

fn join<T: fmt::Display>(items: &[T], sep: &str) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

/// Something a controller did that is worth a line in the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProtocolEvent {
    Replan,
    Known { count: usize },
    CountsRevealed { counts: Vec<usize> },
    Redraw,
    OrderAgreed { order: Vec<usize> },
    TrialStart {
        trial: usize,
        order: Vec<usize>,
        counts: Vec<usize>,
        /// The hypothesized count for this agent differs from its real one.
        mismatch: bool,
    },
    TrialEnd { trial: usize, average: f64 },
    Adopt { trial: usize },
    Switch { trial: usize },
    MixingPhase { t_mix: usize },
    Lock { step: u64, action: usize },
}

impl fmt::Display for ProtocolEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolEvent::Replan => write!(f, "replan"),
            ProtocolEvent::Known { count } => write!(f, "known={count}"),
            ProtocolEvent::CountsRevealed { counts } => write!(f, "counts={}", join(counts, "x")),
            ProtocolEvent::Redraw => write!(f, "redraw"),
            ProtocolEvent::OrderAgreed { order } => write!(f, "order={}", join(order, ">")),
            ProtocolEvent::TrialStart {
                trial,
                order,
                counts,
                mismatch,
            } => {
                write!(f, "trial={trial}:order={}:counts={}", join(order, ">"), join(counts, "x"))?;
                if *mismatch {
                    write!(f, ":mismatch")?;
                }
                Ok(())
            }
            ProtocolEvent::TrialEnd { trial, average } => write!(f, "trial-end={trial}:avg={average}"),
            ProtocolEvent::Adopt { trial } => write!(f, "adopt={trial}"),
            ProtocolEvent::Switch { trial } => write!(f, "switch={trial}"),
            ProtocolEvent::MixingPhase { t_mix } => write!(f, "mix={t_mix}"),
            ProtocolEvent::Lock { step, action } => write!(f, "lock={step}:action={action}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub state: usize,
    /// Per-agent actions in agent-id order.
    pub actions: Vec<usize>,
    pub payoff: f64,
    pub next_state: usize,
    pub phases: Vec<Phase>,
    /// `(agent, event)` in agent order, then emission order.
    pub events: Vec<(usize, ProtocolEvent)>,
}

impl StepRecord {
    fn csv_fields(&self) -> [String; 6] {
        let events: Vec<String> = self.events.iter().map(|(a, e)| format!("a{a}:{e}")).collect();
        [
            self.step.to_string(),
            self.state.to_string(),
            join(&self.actions, "/"),
            self.payoff.to_string(),
            join(&self.phases, "/"),
            events.join(";"),
        ]
    }
}

pub const RUN_LOG_HEADER: [&str; 6] = ["step", "state", "actions", "payoff", "phase", "event"];

/// Append-only per-step trace of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub master_seed: u64,
    pub num_agents: usize,
    /// The configuration that reproduces this log, when it came from the
    /// harness.
    pub config: Option<SimulationConfig>,
    pub records: Vec<StepRecord>,
    /// Per-agent count of reads of other agents' actions.
    pub others_reads: Vec<u64>,
    /// Per-agent ordering switches in exploitation.
    pub switches: Vec<usize>,
}

impl RunLog {
    pub fn new(master_seed: u64, num_agents: usize, config: Option<SimulationConfig>) -> Self {
        Self {
            master_seed,
            num_agents,
            config,
            records: Vec::new(),
            others_reads: vec![0; num_agents],
            switches: vec![0; num_agents],
        }
    }

    /// A single-controller R-MAX trace seen as a team run: the action index
    /// is decoded through `indexing` and every agent carries the learner's
    /// phase and events.
    pub fn from_centralized(trace: &RmaxTrace, indexing: &JointActionIndexing) -> Self {
        let n = indexing.num_agents();
        let mut log = RunLog::new(trace.seed, n, None);
        for s in &trace.steps {
            let events = s.events();
            log.records.push(StepRecord {
                step: s.step,
                state: s.state,
                actions: indexing.decode(s.action).per_agent().to_vec(),
                payoff: s.reward,
                next_state: s.next_state,
                phases: vec![Phase::Rmax; n],
                events: (0..n).flat_map(|a| events.iter().cloned().map(move |e| (a, e))).collect(),
            });
        }
        log
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_payoff(&self) -> f64 {
        self.records.iter().map(|r| r.payoff).sum()
    }

    pub fn running_average(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.total_payoff() / self.records.len() as f64
        }
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(RUN_LOG_HEADER)?;
        for r in &self.records {
            w.write_record(r.csv_fields())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}
