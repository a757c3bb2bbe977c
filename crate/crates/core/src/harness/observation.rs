use std::cell::Cell;

use serde::{Deserialize, Serialize};

/// Whether agents see each other's actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monitoring {
    Perfect,
    Imperfect,
}

impl std::fmt::Display for Monitoring {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Monitoring::Perfect => "perfect",
            Monitoring::Imperfect => "imperfect",
        })
    }
}

/// What every agent observes after a stage: its own action and the common
/// payoff, nothing about the others.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivateObservation {
    pub state: usize,
    pub own_action: usize,
    pub payoff: f64,
    pub next_state: usize,
}

/// A private observation plus the full joint action, indexed by agent id
/// (the observer's own slot included).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerfectObservation {
    #[serde(flatten)]
    private: PrivateObservation,
    others_actions: Vec<usize>,
    #[serde(skip)]
    reads: Cell<u32>,
}

impl PerfectObservation {
    pub fn new(private: PrivateObservation, others_actions: Vec<usize>) -> Self {
        Self {
            private,
            others_actions,
            reads: Cell::new(0),
        }
    }
}

/// One agent's view of a stage.
///
/// Under imperfect monitoring the variant has no field for other agents'
/// actions at all.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Observation {
    Imperfect(PrivateObservation),
    Perfect(PerfectObservation),
}

impl Observation {
    pub fn private(&self) -> &PrivateObservation {
        match self {
            Observation::Imperfect(p) => p,
            Observation::Perfect(p) => &p.private,
        }
    }

    pub fn monitoring(&self) -> Monitoring {
        match self {
            Observation::Imperfect(_) => Monitoring::Imperfect,
            Observation::Perfect(_) => Monitoring::Perfect,
        }
    }

    /// Every agent's action, when monitoring is perfect. Each call is counted
    /// so the harness can audit which controllers look.
    pub fn others_actions(&self) -> Option<&[usize]> {
        match self {
            Observation::Imperfect(_) => None,
            Observation::Perfect(p) => {
                p.reads.set(p.reads.get() + 1);
                Some(&p.others_actions)
            }
        }
    }

    pub(crate) fn others_reads(&self) -> u32 {
        match self {
            Observation::Imperfect(_) => 0,
            Observation::Perfect(p) => p.reads.get(),
        }
    }
}
