use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::JointAction;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexingError {
    #[error("agent order {0:?} is not a permutation of the agents")]
    NotAPermutation(Vec<usize>),
    #[error("joint action has {got} components, expected {expected}")]
    Arity { got: usize, expected: usize },
    #[error("action {action} of agent {agent} is out of range ({count} actions assumed)")]
    ComponentOutOfRange { agent: usize, action: usize, count: usize },
    #[error("joint index {index} is out of range ({size} joint actions)")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("action counts must be positive")]
    EmptyActionSet,
}

/// Lexicographic bijection between `[0, ∏ counts)` and joint actions.
///
/// The first agent in `agent_order` is the most significant digit. Counts
/// are stored per agent id, so `assumed_action_counts()[i]` belongs to agent
/// `i` whatever its position in the order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointActionIndexing {
    agent_order: Vec<usize>,
    counts: Vec<usize>,
    size: usize,
}

impl JointActionIndexing {
    pub fn new(agent_order: Vec<usize>, assumed_action_counts: Vec<usize>) -> Result<Self, IndexingError> {
        let n = assumed_action_counts.len();
        let mut seen = vec![false; n];
        if agent_order.len() != n
            || !agent_order
                .iter()
                .all(|&a| a < n && !std::mem::replace(&mut seen[a], true))
        {
            return Err(IndexingError::NotAPermutation(agent_order));
        }
        if assumed_action_counts.contains(&0) {
            return Err(IndexingError::EmptyActionSet);
        }
        let size = assumed_action_counts.iter().product();
        Ok(Self {
            agent_order,
            counts: assumed_action_counts,
            size,
        })
    }

    /// Agents in id order; matches a game's canonical joint index.
    pub fn canonical(action_counts: Vec<usize>) -> Self {
        let order = (0..action_counts.len()).collect();
        Self::new(order, action_counts).expect("identity order with positive counts")
    }

    pub fn agent_order(&self) -> &[usize] {
        &self.agent_order
    }

    pub fn assumed_action_counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn num_agents(&self) -> usize {
        self.counts.len()
    }

    /// `∏ counts`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn index(&self, joint: &JointAction) -> Result<usize, IndexingError> {
        let comps = joint.per_agent();
        if comps.len() != self.counts.len() {
            return Err(IndexingError::Arity {
                got: comps.len(),
                expected: self.counts.len(),
            });
        }
        let mut acc = 0;
        for &agent in &self.agent_order {
            let (a, f) = (comps[agent], self.counts[agent]);
            if a >= f {
                return Err(IndexingError::ComponentOutOfRange {
                    agent,
                    action: a,
                    count: f,
                });
            }
            acc = acc * f + a;
        }
        Ok(acc)
    }

    pub fn try_decode(&self, index: usize) -> Result<JointAction, IndexingError> {
        if index >= self.size {
            return Err(IndexingError::IndexOutOfRange {
                index,
                size: self.size,
            });
        }
        let mut rest = index;
        let mut out = vec![0; self.counts.len()];
        for &agent in self.agent_order.iter().rev() {
            out[agent] = rest % self.counts[agent];
            rest /= self.counts[agent];
        }
        Ok(JointAction::new(out))
    }

    /// # Panics
    /// If `index` is out of range.
    pub fn decode(&self, index: usize) -> JointAction {
        self.try_decode(index).expect("joint index in range")
    }

    /// Component of `agent` in the joint action with this index.
    pub fn component(&self, index: usize, agent: usize) -> usize {
        let mut rest = index;
        for &a in self.agent_order.iter().rev() {
            let digit = rest % self.counts[a];
            if a == agent {
                return digit;
            }
            rest /= self.counts[a];
        }
        unreachable!("agent {agent} is not part of the indexing")
    }
}

/// Index of `joint` under `indexing`.
pub fn lex_index(indexing: &JointActionIndexing, joint: &JointAction) -> Result<usize, IndexingError> {
    indexing.index(joint)
}

/// Joint action with index `j` under `indexing`.
pub fn lex_decode(indexing: &JointActionIndexing, j: usize) -> Result<JointAction, IndexingError> {
    indexing.try_decode(j)
}
