use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Cisg;

/// Minimum probability of every transition entry in generated games.
pub const DEFAULT_TRANSITION_FLOOR: f64 = 0.01;

/// Random game whose every transition entry is at least
/// [`DEFAULT_TRANSITION_FLOOR`], so every pure policy chain is irreducible.
pub fn random_ergodic_cisg(num_states: usize, action_counts: &[usize], r_max: f64, seed: u64) -> Cisg {
    random_ergodic_cisg_with_floor(num_states, action_counts, r_max, seed, DEFAULT_TRANSITION_FLOOR)
}

/// Rewards are uniform on `[0, r_max]`. Each transition row is
/// `floor + (1 - N * floor) * w / Σw` with `w` uniform on `[0, 1)`; the floor
/// is clamped to `1 / N`.
///
/// # Panics
/// If `num_states` is zero, fewer than two agents are given, a count is zero
/// or `floor` is not positive.
pub fn random_ergodic_cisg_with_floor(
    num_states: usize,
    action_counts: &[usize],
    r_max: f64,
    seed: u64,
    floor: f64,
) -> Cisg {
    assert!(floor > 0.0, "transition floor must be positive");
    let floor = floor.min(1.0 / num_states as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let joint: usize = action_counts.iter().product();
    let reward: Vec<f64> = (0..num_states * joint)
        .map(|_| rng.random::<f64>() * r_max)
        .collect();
    let spare = 1.0 - num_states as f64 * floor;
    let mut transition = Vec::with_capacity(num_states * joint * num_states);
    for _ in 0..num_states * joint {
        let w: Vec<f64> = (0..num_states).map(|_| rng.random::<f64>() + f64::MIN_POSITIVE).collect();
        let total: f64 = w.iter().sum();
        transition.extend(w.iter().map(|x| floor + spare * x / total));
    }
    Cisg::new(num_states, action_counts.to_vec(), r_max, reward, transition)
        .expect("generated game satisfies its invariants")
}
