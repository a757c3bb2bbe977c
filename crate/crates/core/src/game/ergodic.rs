use serde::{Deserialize, Serialize};

use super::{Cisg, GameError, DEFAULT_POLICY_CAP};
use crate::planning::StationaryPolicy;

/// A pure stationary joint policy whose chain is not strongly connected,
/// with one state pair `from -> to` that has no path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonErgodicWitness {
    /// Canonical joint-action index per state.
    pub policy: StationaryPolicy,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    pub ergodic: bool,
    pub policies_checked: u64,
    pub witness: Option<NonErgodicWitness>,
}

/// Number of pure stationary policies, `(∏ f_i)^N`, saturating.
pub(crate) fn policy_count(num_actions: usize, num_states: usize) -> u128 {
    let mut total: u128 = 1;
    for _ in 0..num_states {
        total = total.saturating_mul(num_actions as u128);
    }
    total
}

/// Exhaustive ergodicity check with the default enumeration cap.
pub fn check_ergodic(game: &Cisg) -> Result<ErgodicityReport, GameError> {
    check_ergodic_with_cap(game, DEFAULT_POLICY_CAP)
}

/// Checks that every pure stationary joint policy induces a chain whose
/// support graph is strongly connected.
pub fn check_ergodic_with_cap(game: &Cisg, cap: u64) -> Result<ErgodicityReport, GameError> {
    let n = game.num_states();
    let k = game.num_joint_actions();
    let required = policy_count(k, n);
    if required > cap as u128 {
        return Err(GameError::SizeCap { required, cap });
    }

    // adjacency bitsets per (state, joint action)
    let succ: Vec<Vec<usize>> = (0..n * k)
        .map(|cell| {
            let (s, j) = (cell / k, cell % k);
            game.row_at(s, j)
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(t, _)| t)
                .collect()
        })
        .collect();

    let mut choice = vec![0usize; n];
    let mut checked = 0u64;
    loop {
        checked += 1;
        if let Some((from, to)) = unreachable_pair(n, |s| &succ[s * k + choice[s]]) {
            return Ok(ErgodicityReport {
                ergodic: false,
                policies_checked: checked,
                witness: Some(NonErgodicWitness {
                    policy: StationaryPolicy::new(choice),
                    from,
                    to,
                }),
            });
        }
        // odometer over policies, state 0 most significant
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(ErgodicityReport {
                    ergodic: true,
                    policies_checked: checked,
                    witness: None,
                });
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < k {
                break;
            }
            choice[pos] = 0;
        }
    }
}

/// Returns a pair `(from, to)` with no directed path, or `None` when the
/// graph is strongly connected.
fn unreachable_pair<'a>(n: usize, succ: impl Fn(usize) -> &'a Vec<usize>) -> Option<(usize, usize)> {
    let forward = reach(n, 0, |s| succ(s).clone());
    if let Some(t) = forward.iter().position(|&r| !r) {
        return Some((0, t));
    }
    // reverse reachability to state 0
    let mut pred = vec![Vec::new(); n];
    for s in 0..n {
        for &t in succ(s) {
            pred[t].push(s);
        }
    }
    let backward = reach(n, 0, |s| pred[s].clone());
    backward.iter().position(|&r| !r).map(|s| (s, 0))
}

fn reach(n: usize, start: usize, next: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(s) = stack.pop() {
        for t in next(s) {
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}
