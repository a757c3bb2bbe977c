use serde::{Deserialize, Serialize};

use super::Policy;
use crate::game::Mdp;

/// A pure nonstationary policy over `horizon` steps.
///
/// As a [`Policy`] it repeats with period `horizon`, which is what an agent
/// that keeps replanning on an unchanged model executes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteHorizonPolicy {
    horizon: usize,
    num_states: usize,
    /// `actions[t * N + s]`
    actions: Vec<usize>,
}

impl FiniteHorizonPolicy {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Action at step `t < horizon` in `state`.
    pub fn action_at(&self, t: usize, state: usize) -> usize {
        assert!(t < self.horizon, "step {t} beyond horizon {}", self.horizon);
        self.actions[t * self.num_states + state]
    }
}

impl Policy for FiniteHorizonPolicy {
    fn action(&self, step: usize, state: usize) -> usize {
        self.action_at(step % self.horizon, state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteHorizonPlan {
    pub policy: FiniteHorizonPolicy,
    /// `values[h][s]` is the optimal expected total reward with `h` steps to
    /// go; `values[0]` is all zeros.
    pub values: Vec<Vec<f64>>,
}

impl FiniteHorizonPlan {
    /// Optimal expected total reward over the full horizon from `state`.
    pub fn value(&self, state: usize) -> f64 {
        self.values[self.policy.horizon][state]
    }
}

/// Backward induction with `V_0 = 0`:
/// `V_h(s) = max_a R(s,a) + Σ tr(s,a,s') V_{h-1}(s')`.
///
/// Ties go to the lowest action index, so the result is a deterministic
/// function of `(mdp, horizon)`.
///
/// # Panics
/// If `horizon` is zero.
pub fn finite_horizon_plan(mdp: &Mdp, horizon: usize) -> FiniteHorizonPlan {
    assert!(horizon >= 1, "planning horizon must be at least 1");
    let n = mdp.num_states();
    let k = mdp.num_actions();
    let mut values = Vec::with_capacity(horizon + 1);
    values.push(vec![0.0; n]);
    let mut actions = vec![0; horizon * n];
    for h in 1..=horizon {
        let prev = &values[h - 1];
        let mut cur = vec![0.0; n];
        // step t = horizon - h has h steps to go
        let t = horizon - h;
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut best_a = 0;
            for a in 0..k {
                let q = mdp.reward(s, a)
                    + mdp
                        .row(s, a)
                        .iter()
                        .zip(prev)
                        .map(|(p, v)| p * v)
                        .sum::<f64>();
                if q > best {
                    best = q;
                    best_a = a;
                }
            }
            cur[s] = best;
            actions[t * n + s] = best_a;
        }
        values.push(cur);
    }
    FiniteHorizonPlan {
        policy: FiniteHorizonPolicy {
            horizon,
            num_states: n,
            actions,
        },
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_state(rewards: &[f64]) -> Mdp {
        let k = rewards.len();
        Mdp::new(1, k, 1.0, rewards.to_vec(), vec![1.0; k]).unwrap()
    }

    #[test]
    fn myopic_dominance() {
        let plan = finite_horizon_plan(&one_state(&[0.3, 0.9]), 5);
        for t in 0..5 {
            assert_eq!(plan.policy.action_at(t, 0), 1);
        }
        assert!((plan.value(0) - 4.5).abs() < 1e-12);
    }

    #[test]
    fn identical_actions_tie_to_lowest_index() {
        let mdp = Mdp::new(
            2,
            3,
            1.0,
            vec![0.2, 0.7, 0.7, 0.4, 0.4, 0.1],
            vec![
                0.5, 0.5, 0.3, 0.7, 0.3, 0.7, //
                1.0, 0.0, 1.0, 0.0, 0.2, 0.8,
            ],
        )
        .unwrap();
        let plan = finite_horizon_plan(&mdp, 4);
        for t in 0..4 {
            assert_eq!(plan.policy.action_at(t, 0), 1);
            assert_eq!(plan.policy.action_at(t, 1), 0);
        }
    }

    #[test]
    fn policy_wraps_with_period_horizon() {
        let plan = finite_horizon_plan(&one_state(&[0.3, 0.9]), 3);
        assert_eq!(Policy::action(&plan.policy, 7, 0), plan.policy.action_at(1, 0));
    }

    #[test]
    fn deterministic_bit_for_bit() {
        let g = crate::game::random_ergodic_cisg(3, &[2, 2], 1.0, 5);
        let m = g.induced_mdp();
        let a = finite_horizon_plan(&m, 6);
        let b = finite_horizon_plan(&m, 6);
        assert_eq!(a.policy, b.policy);
        for (x, y) in a.values.iter().flatten().zip(b.values.iter().flatten()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
