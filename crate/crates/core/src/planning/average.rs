use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{PlanningError, Policy, StationaryPolicy};
use crate::game::{Mdp, DEFAULT_POLICY_CAP};

/// Upper bound on `‖πP − π‖∞` for an accepted stationary distribution.
pub const STATIONARY_RESIDUAL_LIMIT: f64 = 1e-9;

/// Gains closer than this are treated as equal when picking the argmax
/// policy, so the lowest-lexicographic policy wins.
const GAIN_TIE_TOLERANCE: f64 = 1e-12;

/// Expected t-step average reward `U(s, π, t)` for every start state and
/// every `t` in `1..=t_max`: `out[t - 1][s]`.
pub fn t_step_averages<P: Policy + ?Sized>(mdp: &Mdp, policy: &P, t_max: usize) -> Vec<Vec<f64>> {
    let n = mdp.num_states();
    // dist[s0] = distribution over current state given start s0
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|s0| {
            let mut d = vec![0.0; n];
            d[s0] = 1.0;
            d
        })
        .collect();
    let mut total = vec![0.0; n];
    let mut out = Vec::with_capacity(t_max);
    let mut next = vec![0.0; n];
    for t in 0..t_max {
        for s0 in 0..n {
            next.iter_mut().for_each(|x| *x = 0.0);
            for (s, &mass) in dist[s0].iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                let a = policy.action(t, s);
                total[s0] += mass * mdp.reward(s, a);
                for (x, p) in next.iter_mut().zip(mdp.row(s, a)) {
                    *x += mass * p;
                }
            }
            dist[s0].copy_from_slice(&next);
        }
        out.push(total.iter().map(|x| x / (t + 1) as f64).collect());
    }
    out
}

/// Exact `U(s, π, t)` by forward propagation of the state distribution.
///
/// # Panics
/// If `t` is zero.
pub fn expected_t_step_average<P: Policy + ?Sized>(mdp: &Mdp, policy: &P, start_state: usize, t: usize) -> f64 {
    assert!(t >= 1, "t must be at least 1");
    let n = mdp.num_states();
    let mut dist = vec![0.0; n];
    dist[start_state] = 1.0;
    let mut total = 0.0;
    let mut next = vec![0.0; n];
    for step in 0..t {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (s, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let a = policy.action(step, s);
            total += mass * mdp.reward(s, a);
            for (x, p) in next.iter_mut().zip(mdp.row(s, a)) {
                *x += mass * p;
            }
        }
        std::mem::swap(&mut dist, &mut next);
    }
    total / t as f64
}

/// Stationary distribution of the chain induced by `policy`, from the
/// balance equations with the last one replaced by `Σπ = 1`.
pub fn stationary_distribution(mdp: &Mdp, policy: &StationaryPolicy) -> Result<Vec<f64>, PlanningError> {
    let n = mdp.num_states();
    if policy.num_states() != n {
        return Err(PlanningError::InvalidArgument(format!(
            "policy covers {} states, MDP has {n}",
            policy.num_states()
        )));
    }
    // row i: Σ_j π_j P[j][i] − π_i = 0
    let mut a = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let row = mdp.row(j, policy.action(j));
        for i in 0..n - 1 {
            a[(i, j)] = row[i];
        }
    }
    for i in 0..n - 1 {
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or(PlanningError::Singular)?;
    if pi.iter().any(|x| !x.is_finite()) {
        return Err(PlanningError::Singular);
    }
    let pi: Vec<f64> = pi.iter().map(|&x| if x < 0.0 && x > -1e-12 { 0.0 } else { x }).collect();

    let mut residual: f64 = 0.0;
    for i in 0..n {
        let flow: f64 = (0..n).map(|j| pi[j] * mdp.row(j, policy.action(j))[i]).sum();
        residual = residual.max((flow - pi[i]).abs());
    }
    if residual >= STATIONARY_RESIDUAL_LIMIT || pi.iter().any(|&x| x < 0.0) {
        return Err(PlanningError::IllConditioned { residual });
    }
    Ok(pi)
}

/// Gain `Σ π(s) R(s, policy(s))` of an irreducible policy chain.
pub fn stationary_average_reward(mdp: &Mdp, policy: &StationaryPolicy) -> Result<f64, PlanningError> {
    let pi = stationary_distribution(mdp, policy)?;
    Ok(pi
        .iter()
        .enumerate()
        .map(|(s, p)| p * mdp.reward(s, policy.action(s)))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub cap: u64,
    pub keep_table: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_POLICY_CAP,
            keep_table: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueReport {
    /// `v(M)`.
    pub optimal_value: f64,
    pub argmax_policy: StationaryPolicy,
    /// Gain of every policy in enumeration order (state 0 most significant),
    /// when requested.
    pub per_policy_gain: Option<Vec<f64>>,
}

/// `v(M)` by enumerating every pure stationary policy.
pub fn optimal_value_oracle(mdp: &Mdp) -> Result<ValueReport, PlanningError> {
    optimal_value_oracle_with(mdp, &OracleOptions::default())
}

pub fn optimal_value_oracle_with(mdp: &Mdp, options: &OracleOptions) -> Result<ValueReport, PlanningError> {
    let n = mdp.num_states();
    let k = mdp.num_actions();
    let required = crate::game::policy_count(k, n);
    if required > options.cap as u128 {
        return Err(PlanningError::SizeCap {
            required,
            cap: options.cap,
        });
    }
    let mut table = options.keep_table.then(|| Vec::with_capacity(required as usize));
    let mut choice = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    'outer: loop {
        let policy = StationaryPolicy::new(choice.clone());
        let gain = stationary_average_reward(mdp, &policy)?;
        if let Some(t) = table.as_mut() {
            t.push(gain);
        }
        if best.as_ref().is_none_or(|(g, _)| gain > g + GAIN_TIE_TOLERANCE) {
            best = Some((gain, choice.clone()));
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < k {
                break;
            }
            choice[pos] = 0;
        }
    }
    let (optimal_value, actions) = best.expect("at least one policy");
    Ok(ValueReport {
        optimal_value,
        argmax_policy: StationaryPolicy::new(actions),
        per_policy_gain: table,
    })
}

/// `10 · N · max_f · ⌈r_max / ε⌉`, the default truncation of the mixing-time
/// quantifier.
pub fn default_mixing_cap(num_states: usize, max_action_count: usize, r_max: f64, epsilon: f64) -> usize {
    let ratio = crate::numeric::snap_ceil(r_max / epsilon).max(1.0);
    (10.0 * num_states as f64 * max_action_count as f64 * ratio) as usize
}

/// Least `T ≤ t_cap` with `U(s, π, t') > U(π) − ε` for every start state and
/// every `t'` in `[T, t_cap]`.
pub fn epsilon_mixing_time(
    mdp: &Mdp,
    policy: &StationaryPolicy,
    epsilon: f64,
    t_cap: usize,
) -> Result<usize, PlanningError> {
    if !(epsilon > 0.0) {
        return Err(PlanningError::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if t_cap == 0 {
        return Err(PlanningError::InvalidArgument("t_cap must be at least 1".into()));
    }
    let gain = stationary_average_reward(mdp, policy)?;
    let threshold = gain - epsilon;
    let averages = t_step_averages(mdp, policy, t_cap);
    // the last t' that fails decides T
    match averages.iter().rposition(|row| row.iter().any(|&u| u <= threshold)) {
        None => Ok(1),
        Some(i) if i + 1 == t_cap => Err(PlanningError::MixingExceedsCap { t_cap }),
        Some(i) => Ok(i + 2),
    }
}
