use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coordlearn::coordination::{lex_decode, lex_index, JointActionIndexing, ProtocolConfig, ProtocolKind};
use coordlearn::game::{parse_game_spec, random_ergodic_cisg, serialize_game_spec, Mdp};
use coordlearn::harness::{run_simulation, Metrics, Monitoring, SimulationConfig};
use coordlearn::planning::{
    epsilon_mixing_time, finite_horizon_plan, stationary_average_reward, t_step_averages, StationaryPolicy,
};
use coordlearn::rmax::{RmaxAgent, RmaxConfig};

fn mdp_from_seed(seed: u64, n: usize, k: usize) -> Mdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rewards = (0..n * k).map(|_| rng.random::<f64>()).collect();
    let mut trans = Vec::new();
    for _ in 0..n * k {
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
        let sum: f64 = w.iter().sum();
        trans.extend(w.iter().map(|x| x / sum));
    }
    Mdp::new(n, k, 1.0, rewards, trans).unwrap()
}

/// `t`-step value of a Markov policy, by pushing the state distribution
/// forward.
fn policy_value(mdp: &Mdp, s0: usize, actions: &dyn Fn(usize, usize) -> usize, t: usize) -> f64 {
    let n = mdp.num_states();
    let mut dist = vec![0.0; n];
    dist[s0] = 1.0;
    let mut total = 0.0;
    for step in 0..t {
        let mut next = vec![0.0; n];
        for s in 0..n {
            if dist[s] == 0.0 {
                continue;
            }
            let a = actions(step, s);
            total += dist[s] * mdp.reward(s, a);
            for (to, p) in mdp.row(s, a).iter().enumerate() {
                next[to] += dist[s] * p;
            }
        }
        dist = next;
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn planned_policy_achieves_its_values(seed in any::<u64>(), n in 1usize..4, k in 1usize..4, t in 1usize..5) {
        let mdp = mdp_from_seed(seed, n, k);
        let plan = finite_horizon_plan(&mdp, t);
        for s in 0..n {
            let v = policy_value(&mdp, s, &|step, st| plan.policy.action_at(step, st), t);
            prop_assert!((v - plan.value(s)).abs() < 1e-9);
        }
    }

    #[test]
    fn no_markov_policy_beats_the_plan(seed in any::<u64>(), t in 1usize..4) {
        // every Markov policy on a 2-state, 2-action MDP
        let mdp = mdp_from_seed(seed, 2, 2);
        let plan = finite_horizon_plan(&mdp, t);
        for code in 0..(1usize << (2 * t)) {
            let pick = |step: usize, s: usize| (code >> (2 * step + s)) & 1;
            for s in 0..2 {
                prop_assert!(policy_value(&mdp, s, &pick, t) <= plan.value(s) + 1e-9);
            }
        }
    }

    #[test]
    fn mixing_time_is_antitone_in_epsilon(seed in any::<u64>(), e1 in 0.02f64..0.5, e2 in 0.02f64..0.5) {
        let mdp = mdp_from_seed(seed, 3, 2);
        let policy = StationaryPolicy::new(vec![0, 1, 0]);
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let t_lo = epsilon_mixing_time(&mdp, &policy, lo, 5000).unwrap();
        let t_hi = epsilon_mixing_time(&mdp, &policy, hi, 5000).unwrap();
        prop_assert!(t_hi <= t_lo);
    }

    #[test]
    fn mixing_time_meets_its_definition(seed in any::<u64>(), eps in 0.02f64..0.5) {
        let mdp = mdp_from_seed(seed, 3, 2);
        let policy = StationaryPolicy::new(vec![1, 0, 1]);
        let gain = stationary_average_reward(&mdp, &policy).unwrap();
        let t = epsilon_mixing_time(&mdp, &policy, eps, 500).unwrap();
        let averages = t_step_averages(&mdp, &policy, 500);
        for row in &averages[t - 1..] {
            prop_assert!(row.iter().all(|&u| u > gain - eps));
        }
        if t > 1 {
            prop_assert!(averages[t - 2].iter().any(|&u| u <= gain - eps));
        }
    }

    #[test]
    fn lex_index_round_trips(counts in proptest::collection::vec(1usize..5, 1..4), seed in any::<u64>()) {
        let n = counts.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let ix = JointActionIndexing::new(order, counts).unwrap();
        for j in 0..ix.size() {
            prop_assert_eq!(lex_index(&ix, &lex_decode(&ix, j).unwrap()).unwrap(), j);
        }
    }

    #[test]
    fn generated_games_round_trip_through_text(seed in any::<u64>(), n in 1usize..4) {
        let g = random_ergodic_cisg(n, &[2, 3], 1.0, seed);
        let again = parse_game_spec(&serialize_game_spec(&g)).unwrap();
        prop_assert_eq!(g, again);
    }

    #[test]
    fn rmax_is_a_function_of_its_inputs(seed in any::<u64>()) {
        let cfg = RmaxConfig { epsilon: 0.1, delta: 0.1, t_mix: 3, r_max: 1.0, k1_override: Some(2) };
        let mut a = RmaxAgent::new(3, 2, cfg.clone()).unwrap();
        let mut b = RmaxAgent::new(3, 2, cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = 0;
        for _ in 0..60 {
            let (da, db) = (a.act(s), b.act(s));
            prop_assert_eq!(da, db);
            let next = rng.random_range(0..3);
            let r = (s + da.action) as f64 / 4.0;
            prop_assert_eq!(a.observe(s, da.action, r, next).unwrap(), b.observe(s, db.action, r, next).unwrap());
            s = next;
        }
        prop_assert_eq!(a.model(), b.model());
    }
}

#[test]
fn running_average_recomputes_exactly() {
    let game = random_ergodic_cisg(3, &[2, 2], 1.0, 3);
    let cfg = SimulationConfig {
        protocol: ProtocolConfig {
            t_mix: Some(3),
            k1_override: Some(4),
            ..ProtocolConfig::new(ProtocolKind::Case1)
        },
        monitoring: Monitoring::Imperfect,
        master_seed: 8,
        num_steps: 5000,
        start_state: 0,
    };
    let (log, metrics) = run_simulation(&game, &cfg).unwrap();
    let recomputed: f64 = log.records.iter().map(|r| r.payoff).sum::<f64>() / log.len() as f64;
    assert_eq!(metrics.running_average, recomputed);
    assert_eq!(Metrics::from_log(&log), metrics);
    assert!((0.0..=1.0).contains(&metrics.running_average));
}

#[test]
fn cycle_game_empirical_average_matches_stationary() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/cycle2.cisg")).unwrap();
    let game = parse_game_spec(&text).unwrap();
    let cfg = SimulationConfig {
        protocol: ProtocolConfig {
            t_mix: Some(2),
            k1_override: Some(5),
            ..ProtocolConfig::new(ProtocolKind::Case1)
        },
        monitoring: Monitoring::Imperfect,
        master_seed: 1,
        num_steps: 1_000_000,
        start_state: 0,
    };
    let (log, _) = run_simulation(&game, &cfg).unwrap();
    let gain = stationary_average_reward(&game.induced_mdp(), &StationaryPolicy::new(vec![0, 0])).unwrap();
    assert!((log.running_average() - gain).abs() < 0.01);
}
