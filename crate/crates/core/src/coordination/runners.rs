//! Convenience drivers that run one protocol through the harness.

use super::{HandshakeAgreement, HandshakeController, ProtocolConfig, ProtocolKind};
use crate::game::Cisg;
use crate::harness::{HarnessError, Monitoring, RunLog, Simulation, SimulationConfig};

/// Where every agent stands once the handshake is over.
#[derive(Debug, Clone, PartialEq)]
pub struct HandshakeOutcome {
    /// Per agent; `None` if that agent had not agreed when the run stopped.
    pub agreements: Vec<Option<HandshakeAgreement>>,
    /// Steps played.
    pub steps: u64,
    pub log: RunLog,
}

impl HandshakeOutcome {
    pub fn complete(&self) -> bool {
        self.agreements.iter().all(Option::is_some)
    }
}

/// Plays the counting and ordering handshake under perfect monitoring until
/// every agent has agreed, or for at most `max_steps` steps.
pub fn run_case3_handshake(
    game: &Cisg,
    protocol: &ProtocolConfig,
    master_seed: u64,
    max_steps: u64,
) -> Result<HandshakeOutcome, HarnessError> {
    let config = SimulationConfig {
        protocol: ProtocolConfig {
            kind: ProtocolKind::Case3,
            ..protocol.clone()
        },
        monitoring: Monitoring::Perfect,
        master_seed,
        num_steps: max_steps,
        start_state: 0,
    };
    let mut sim = Simulation::new(game, &config)?;
    let agreements = |sim: &Simulation| -> Vec<Option<HandshakeAgreement>> {
        sim.controllers()
            .iter()
            .map(|c| {
                c.as_any()
                    .downcast_ref::<HandshakeController>()
                    .and_then(|h| h.agreement().cloned())
            })
            .collect()
    };
    while sim.steps_done() < max_steps && !agreements(&sim).iter().all(Option::is_some) {
        sim.step()?;
    }
    Ok(HandshakeOutcome {
        agreements: agreements(&sim),
        steps: sim.steps_done(),
        log: sim.into_log(),
    })
}

fn run_kind(
    kind: ProtocolKind,
    game: &Cisg,
    protocol: &ProtocolConfig,
    master_seed: u64,
    num_steps: u64,
) -> Result<RunLog, HarnessError> {
    let config = SimulationConfig {
        protocol: ProtocolConfig {
            kind,
            ..protocol.clone()
        },
        monitoring: Monitoring::Imperfect,
        master_seed,
        num_steps,
        start_state: 0,
    };
    let mut sim = Simulation::new(game, &config)?;
    sim.run(num_steps)?;
    Ok(sim.into_log())
}

/// Order search with known action counts, under imperfect monitoring.
pub fn run_case4(game: &Cisg, protocol: &ProtocolConfig, master_seed: u64, num_steps: u64) -> Result<RunLog, HarnessError> {
    run_kind(ProtocolKind::Case4, game, protocol, master_seed, num_steps)
}

/// Order search over every count tuple up to `protocol.bound`.
pub fn run_case5(game: &Cisg, protocol: &ProtocolConfig, master_seed: u64, num_steps: u64) -> Result<RunLog, HarnessError> {
    run_kind(ProtocolKind::Case5, game, protocol, master_seed, num_steps)
}

/// Order search under doubling assumed mixing times.
pub fn run_case6(game: &Cisg, protocol: &ProtocolConfig, master_seed: u64, num_steps: u64) -> Result<RunLog, HarnessError> {
    run_kind(ProtocolKind::Case6, game, protocol, master_seed, num_steps)
}

/// Random play for `k³` steps, then lock-in. `k` is `protocol.bound`, or
/// each agent's own action count when absent.
pub fn run_repeated_game(
    game: &Cisg,
    protocol: &ProtocolConfig,
    master_seed: u64,
    num_steps: u64,
) -> Result<RunLog, HarnessError> {
    run_kind(ProtocolKind::Repeated, game, protocol, master_seed, num_steps)
}
