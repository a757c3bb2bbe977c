//! Common-interest stochastic games (CISGs) and their induced MDPs.
//!
//! A [`Cisg`] stores one common payoff and one transition row per
//! `(state, joint action)` cell. Joint actions are addressed either as a
//! [`JointAction`] (one index per agent, in agent-id order) or by their
//! canonical index: the mixed-radix encoding with agent 0 as the most
//! significant digit.

mod ergodic;
mod generate;
mod spec;

pub(crate) use ergodic::policy_count;
pub use ergodic::{check_ergodic, check_ergodic_with_cap, ErgodicityReport, NonErgodicWitness};
pub use generate::{random_ergodic_cisg, random_ergodic_cisg_with_floor, DEFAULT_TRANSITION_FLOOR};
pub use spec::{parse_game_spec, serialize_game_spec};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coordination::JointActionIndexing;

/// Tolerance on the sum of every transition row.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Default cap on the number of pure stationary policies an exhaustive
/// check may enumerate.
pub const DEFAULT_POLICY_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate {kind} entry for state {state}, joint action {joint}")]
    Duplicate {
        line: usize,
        kind: &'static str,
        state: usize,
        joint: JointAction,
    },
    #[error("missing {kind} entry for state {state}, joint action {joint}")]
    Missing {
        kind: &'static str,
        state: usize,
        joint: JointAction,
    },
    #[error("transition row for state {state}, joint action {joint} sums to {sum}, expected 1")]
    RowSum {
        state: usize,
        joint: JointAction,
        sum: f64,
    },
    #[error("negative or non-finite transition probability {value} at state {state}, joint action {joint}")]
    BadProbability {
        state: usize,
        joint: JointAction,
        value: f64,
    },
    #[error("reward {value} at state {state}, joint action {joint} is outside [0, {r_max}]")]
    RewardOutOfRange {
        state: usize,
        joint: JointAction,
        value: f64,
        r_max: f64,
    },
    #[error("invalid game: {0}")]
    Invalid(String),
    #[error("enumeration of {required} policies exceeds the cap of {cap}")]
    SizeCap { required: u128, cap: u64 },
}

/// One action index per agent, in agent-id order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JointAction(pub Vec<usize>);

impl JointAction {
    pub fn new(per_agent: Vec<usize>) -> Self {
        Self(per_agent)
    }

    pub fn per_agent(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, agent: usize) -> usize {
        self.0[agent]
    }

    pub fn num_agents(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for JointAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Mixed-radix encoding with the first count as the most significant digit.
pub(crate) fn canonical_encode(counts: &[usize], action: &[usize]) -> usize {
    action
        .iter()
        .zip(counts)
        .fold(0, |acc, (&a, &f)| acc * f + a)
}

pub(crate) fn canonical_decode(counts: &[usize], mut index: usize) -> Vec<usize> {
    let mut out = vec![0; counts.len()];
    for i in (0..counts.len()).rev() {
        out[i] = index % counts[i];
        index /= counts[i];
    }
    out
}

/// An n-agent common-interest stochastic game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cisg {
    num_states: usize,
    action_counts: Vec<usize>,
    r_max: f64,
    /// `reward[s * J + j]` for canonical joint index `j`.
    reward: Vec<f64>,
    /// `transition[(s * J + j) * N + s']`.
    transition: Vec<f64>,
}

impl Cisg {
    /// Builds a game from dense tables indexed by canonical joint action,
    /// checking every invariant.
    pub fn new(
        num_states: usize,
        action_counts: Vec<usize>,
        r_max: f64,
        reward: Vec<f64>,
        transition: Vec<f64>,
    ) -> Result<Self, GameError> {
        if num_states == 0 {
            return Err(GameError::Invalid("a game needs at least one state".into()));
        }
        if action_counts.len() < 2 {
            return Err(GameError::Invalid(format!(
                "a game needs at least two agents, got {}",
                action_counts.len()
            )));
        }
        if let Some(i) = action_counts.iter().position(|&f| f == 0) {
            return Err(GameError::Invalid(format!("agent {i} has no actions")));
        }
        if !(r_max.is_finite() && r_max >= 0.0) {
            return Err(GameError::Invalid(format!("r_max must be a nonnegative real, got {r_max}")));
        }
        let joint = action_counts
            .iter()
            .try_fold(1usize, |acc, &f| acc.checked_mul(f))
            .ok_or_else(|| GameError::Invalid("joint action space overflows".into()))?;
        if reward.len() != num_states * joint {
            return Err(GameError::Invalid(format!(
                "reward table has {} cells, expected {}",
                reward.len(),
                num_states * joint
            )));
        }
        if transition.len() != num_states * joint * num_states {
            return Err(GameError::Invalid(format!(
                "transition table has {} entries, expected {}",
                transition.len(),
                num_states * joint * num_states
            )));
        }
        let game = Self {
            num_states,
            action_counts,
            r_max,
            reward,
            transition,
        };
        for s in 0..num_states {
            for j in 0..joint {
                let ja = JointAction(canonical_decode(&game.action_counts, j));
                let r = game.reward[s * joint + j];
                if !(r.is_finite() && (0.0..=r_max).contains(&r)) {
                    return Err(GameError::RewardOutOfRange {
                        state: s,
                        joint: ja,
                        value: r,
                        r_max,
                    });
                }
                let row = game.row_at(s, j);
                if let Some(&p) = row.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                    return Err(GameError::BadProbability {
                        state: s,
                        joint: ja,
                        value: p,
                    });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(GameError::RowSum {
                        state: s,
                        joint: ja,
                        sum,
                    });
                }
            }
        }
        Ok(game)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_agents(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// `∏ f_i`.
    pub fn num_joint_actions(&self) -> usize {
        self.action_counts.iter().product()
    }

    pub fn is_valid_joint(&self, joint: &JointAction) -> bool {
        joint.0.len() == self.action_counts.len()
            && joint.0.iter().zip(&self.action_counts).all(|(&a, &f)| a < f)
    }

    pub fn canonical_index(&self, joint: &JointAction) -> usize {
        debug_assert!(self.is_valid_joint(joint));
        canonical_encode(&self.action_counts, &joint.0)
    }

    pub fn canonical_joint(&self, index: usize) -> JointAction {
        JointAction(canonical_decode(&self.action_counts, index))
    }

    pub fn reward(&self, state: usize, joint: &JointAction) -> f64 {
        self.reward_at(state, self.canonical_index(joint))
    }

    pub fn transition_row(&self, state: usize, joint: &JointAction) -> &[f64] {
        self.row_at(state, self.canonical_index(joint))
    }

    pub fn reward_at(&self, state: usize, joint_index: usize) -> f64 {
        self.reward[state * self.num_joint_actions() + joint_index]
    }

    pub fn row_at(&self, state: usize, joint_index: usize) -> &[f64] {
        let n = self.num_states;
        let start = (state * self.num_joint_actions() + joint_index) * n;
        &self.transition[start..start + n]
    }

    /// Induced MDP under the canonical joint-action order.
    pub fn induced_mdp(&self) -> Mdp {
        let indexing = JointActionIndexing::canonical(self.action_counts.clone());
        induce_mdp(self, &indexing).expect("canonical indexing always matches its game")
    }
}

/// A finite MDP with rewards in `[0, r_max]`.
///
/// Used both for the induced MDP of a game and for the learner's internal
/// model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mdp {
    num_states: usize,
    num_actions: usize,
    r_max: f64,
    reward: Vec<f64>,
    transition: Vec<f64>,
}

/// The single-agent MDP whose actions are a game's joint actions.
pub type InducedMdp = Mdp;

impl Mdp {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        r_max: f64,
        reward: Vec<f64>,
        transition: Vec<f64>,
    ) -> Result<Self, GameError> {
        if num_states == 0 || num_actions == 0 {
            return Err(GameError::Invalid("an MDP needs at least one state and one action".into()));
        }
        if reward.len() != num_states * num_actions
            || transition.len() != num_states * num_actions * num_states
        {
            return Err(GameError::Invalid("MDP table sizes do not match its dimensions".into()));
        }
        let mdp = Self {
            num_states,
            num_actions,
            r_max,
            reward,
            transition,
        };
        for s in 0..num_states {
            for a in 0..num_actions {
                let ja = JointAction(vec![a]);
                let r = mdp.reward(s, a);
                if !(r.is_finite() && (0.0..=r_max).contains(&r)) {
                    return Err(GameError::RewardOutOfRange {
                        state: s,
                        joint: ja,
                        value: r,
                        r_max,
                    });
                }
                let row = mdp.row(s, a);
                if let Some(&p) = row.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                    return Err(GameError::BadProbability {
                        state: s,
                        joint: ja,
                        value: p,
                    });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(GameError::RowSum {
                        state: s,
                        joint: ja,
                        sum,
                    });
                }
            }
        }
        Ok(mdp)
    }

    /// Builds without validation; callers guarantee the invariants.
    pub(crate) fn from_parts_unchecked(
        num_states: usize,
        num_actions: usize,
        r_max: f64,
        reward: Vec<f64>,
        transition: Vec<f64>,
    ) -> Self {
        Self {
            num_states,
            num_actions,
            r_max,
            reward,
            transition,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.reward[state * self.num_actions + action]
    }

    pub fn row(&self, state: usize, action: usize) -> &[f64] {
        let n = self.num_states;
        let start = (state * self.num_actions + action) * n;
        &self.transition[start..start + n]
    }

    pub fn transition(&self, state: usize, action: usize, next: usize) -> f64 {
        self.row(state, action)[next]
    }
}

/// Builds the induced MDP of `game`: action `j` is the joint action
/// `indexing.decode(j)`.
pub fn induce_mdp(game: &Cisg, indexing: &JointActionIndexing) -> Result<Mdp, GameError> {
    if indexing.assumed_action_counts() != game.action_counts() {
        return Err(GameError::Invalid(format!(
            "indexing counts {:?} do not match the game's action counts {:?}",
            indexing.assumed_action_counts(),
            game.action_counts()
        )));
    }
    let n = game.num_states();
    let k = game.num_joint_actions();
    let mut reward = Vec::with_capacity(n * k);
    let mut transition = Vec::with_capacity(n * k * n);
    for s in 0..n {
        for j in 0..k {
            let joint = indexing.decode(j);
            let canonical = game.canonical_index(&joint);
            reward.push(game.reward_at(s, canonical));
            transition.extend_from_slice(game.row_at(s, canonical));
        }
    }
    Ok(Mdp::from_parts_unchecked(n, k, game.r_max(), reward, transition))
}
