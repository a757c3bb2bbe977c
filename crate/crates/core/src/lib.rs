//! Learning to coordinate in common-interest stochastic games.
//!
//! A team of agents shares one payoff. Each agent controls only its own
//! action and, under imperfect monitoring, sees only its own action and the
//! common payoff. The protocols in [`coordination`] let such agents jointly
//! emulate a single-agent R-MAX learner over the induced MDP, establishing
//! whatever shared conventions (action counts, agent order, mixing time)
//! they lack.

pub mod cli;
pub mod coordination;
pub mod game;
pub mod harness;
pub mod numeric;
pub mod planning;
pub mod rmax;

pub use coordination::{
    build_controllers, compute_schedule, AgentController, JointActionIndexing, ProtocolConfig, ProtocolKind,
    ProtocolSchedule,
};
pub use game::{parse_game_spec, serialize_game_spec, Cisg, GameError, InducedMdp, JointAction, Mdp};
pub use harness::{run_simulation, Metrics, Monitoring, Observation, RunLog, SimulationConfig};
pub use rmax::{k1_threshold, run_rmax, RmaxAgent, RmaxConfig, RmaxModel};
