//! Line-oriented text format for games.
//!
//! ```text
//! cisg v1
//! states <N>
//! agents <n>
//! actions <f_1> ... <f_n>
//! rmax <R>
//! reward <s> <a_1> ... <a_n> <r>
//! trans  <s> <a_1> ... <a_n> <s'> <p>
//! ```
//!
//! Header lines come first, in any order. Data lines may appear in any order;
//! omitted `trans` entries have probability zero.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{canonical_decode, canonical_encode, Cisg, GameError, JointAction, ROW_SUM_TOLERANCE};

fn syntax(line: usize, message: impl Into<String>) -> GameError {
    GameError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize, GameError> {
    tok.parse()
        .map_err(|_| syntax(line, format!("expected a nonnegative integer for {what}, got `{tok}`")))
}

fn parse_real(tok: &str, line: usize, what: &str) -> Result<f64, GameError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| syntax(line, format!("expected a real number for {what}, got `{tok}`")))?;
    if !v.is_finite() {
        return Err(syntax(line, format!("{what} must be finite, got `{tok}`")));
    }
    Ok(v)
}

#[derive(Default)]
struct Header {
    states: Option<usize>,
    agents: Option<usize>,
    actions: Option<Vec<usize>>,
    rmax: Option<f64>,
}

impl Header {
    fn complete(&self, line: usize) -> Result<(usize, Vec<usize>, f64), GameError> {
        let states = self.states.ok_or_else(|| syntax(line, "data line before `states`"))?;
        let agents = self.agents.ok_or_else(|| syntax(line, "data line before `agents`"))?;
        let actions = self
            .actions
            .clone()
            .ok_or_else(|| syntax(line, "data line before `actions`"))?;
        let rmax = self.rmax.ok_or_else(|| syntax(line, "data line before `rmax`"))?;
        if actions.len() != agents {
            return Err(syntax(
                line,
                format!("`actions` lists {} counts but `agents` is {agents}", actions.len()),
            ));
        }
        Ok((states, actions, rmax))
    }
}

/// Parses a game-spec document into a validated [`Cisg`].
pub fn parse_game_spec(text: &str) -> Result<Cisg, GameError> {
    let mut header = Header::default();
    let mut dims: Option<(usize, Vec<usize>, f64)> = None;
    let mut seen_magic = false;
    let mut rewards: HashMap<(usize, usize), (f64, usize)> = HashMap::new();
    let mut trans: HashMap<(usize, usize, usize), (f64, usize)> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if !seen_magic {
            if toks != ["cisg", "v1"] {
                return Err(syntax(line, "expected `cisg v1` as the first line"));
            }
            seen_magic = true;
            continue;
        }
        let keyword = toks[0];
        let args = &toks[1..];
        match keyword {
            "states" | "agents" | "actions" | "rmax" => {
                if dims.is_some() {
                    return Err(syntax(line, format!("`{keyword}` after the first data line")));
                }
                match keyword {
                    "states" => {
                        if header.states.is_some() {
                            return Err(syntax(line, "duplicate `states` line"));
                        }
                        let [tok] = args else {
                            return Err(syntax(line, "`states` takes one argument"));
                        };
                        let n = parse_usize(tok, line, "states")?;
                        if n == 0 {
                            return Err(syntax(line, "`states` must be positive"));
                        }
                        header.states = Some(n);
                    }
                    "agents" => {
                        if header.agents.is_some() {
                            return Err(syntax(line, "duplicate `agents` line"));
                        }
                        let [tok] = args else {
                            return Err(syntax(line, "`agents` takes one argument"));
                        };
                        let n = parse_usize(tok, line, "agents")?;
                        if n < 2 {
                            return Err(syntax(line, "`agents` must be at least 2"));
                        }
                        header.agents = Some(n);
                    }
                    "actions" => {
                        if header.actions.is_some() {
                            return Err(syntax(line, "duplicate `actions` line"));
                        }
                        if args.is_empty() {
                            return Err(syntax(line, "`actions` needs one count per agent"));
                        }
                        let counts = args
                            .iter()
                            .map(|t| parse_usize(t, line, "action count"))
                            .collect::<Result<Vec<_>, _>>()?;
                        if counts.contains(&0) {
                            return Err(syntax(line, "action counts must be positive"));
                        }
                        header.actions = Some(counts);
                    }
                    _ => {
                        if header.rmax.is_some() {
                            return Err(syntax(line, "duplicate `rmax` line"));
                        }
                        let [tok] = args else {
                            return Err(syntax(line, "`rmax` takes one argument"));
                        };
                        let r = parse_real(tok, line, "rmax")?;
                        if r < 0.0 {
                            return Err(syntax(line, "`rmax` must be nonnegative"));
                        }
                        header.rmax = Some(r);
                    }
                }
            }
            "reward" | "trans" => {
                if dims.is_none() {
                    dims = Some(header.complete(line)?);
                }
                let (n_states, counts, _) = dims.as_ref().expect("set above");
                let n_agents = counts.len();
                let expected = if keyword == "reward" { n_agents + 2 } else { n_agents + 3 };
                if args.len() != expected {
                    return Err(syntax(
                        line,
                        format!("`{keyword}` takes {expected} arguments, got {}", args.len()),
                    ));
                }
                let s = parse_usize(args[0], line, "state")?;
                if s >= *n_states {
                    return Err(syntax(line, format!("state {s} out of range")));
                }
                let mut joint = Vec::with_capacity(n_agents);
                for (i, tok) in args[1..=n_agents].iter().enumerate() {
                    let a = parse_usize(tok, line, "action")?;
                    if a >= counts[i] {
                        return Err(syntax(
                            line,
                            format!("action {a} out of range for agent {i} ({} actions)", counts[i]),
                        ));
                    }
                    joint.push(a);
                }
                let j = canonical_encode(counts, &joint);
                if keyword == "reward" {
                    let r = parse_real(args[n_agents + 1], line, "reward")?;
                    if rewards.insert((s, j), (r, line)).is_some() {
                        return Err(GameError::Duplicate {
                            line,
                            kind: "reward",
                            state: s,
                            joint: JointAction(joint),
                        });
                    }
                } else {
                    let next = parse_usize(args[n_agents + 1], line, "successor state")?;
                    if next >= *n_states {
                        return Err(syntax(line, format!("successor state {next} out of range")));
                    }
                    let p = parse_real(args[n_agents + 2], line, "probability")?;
                    if !(0.0..=1.0 + ROW_SUM_TOLERANCE).contains(&p) {
                        return Err(syntax(line, format!("probability {p} outside [0, 1]")));
                    }
                    if trans.insert((s, j, next), (p, line)).is_some() {
                        return Err(GameError::Duplicate {
                            line,
                            kind: "trans",
                            state: s,
                            joint: JointAction(joint),
                        });
                    }
                }
            }
            other => return Err(syntax(line, format!("unknown keyword `{other}`"))),
        }
    }

    if !seen_magic {
        return Err(syntax(1, "empty document, expected `cisg v1`"));
    }
    let last_line = text.lines().count().max(1);
    let (n_states, counts, r_max) = match dims {
        Some(d) => d,
        None => header.complete(last_line)?,
    };
    let joint_count: usize = counts.iter().product();

    let mut reward = vec![0.0; n_states * joint_count];
    let mut transition = vec![0.0; n_states * joint_count * n_states];
    let mut has_trans = vec![false; n_states * joint_count];
    for ((s, j, next), (p, _)) in &trans {
        transition[(s * joint_count + j) * n_states + next] = *p;
        has_trans[s * joint_count + j] = true;
    }
    for s in 0..n_states {
        for j in 0..joint_count {
            let joint = || JointAction(canonical_decode(&counts, j));
            match rewards.get(&(s, j)) {
                Some((r, _)) => reward[s * joint_count + j] = *r,
                None => {
                    return Err(GameError::Missing {
                        kind: "reward",
                        state: s,
                        joint: joint(),
                    })
                }
            }
            if !has_trans[s * joint_count + j] {
                return Err(GameError::Missing {
                    kind: "trans",
                    state: s,
                    joint: joint(),
                });
            }
        }
    }
    Cisg::new(n_states, counts, r_max, reward, transition)
}

/// Writes `game` in the game-spec format. Zero-probability transitions are
/// omitted; reals use the shortest representation that parses back exactly.
pub fn serialize_game_spec(game: &Cisg) -> String {
    let mut out = String::new();
    let counts = game.action_counts();
    writeln!(out, "cisg v1").unwrap();
    writeln!(out, "states {}", game.num_states()).unwrap();
    writeln!(out, "agents {}", game.num_agents()).unwrap();
    let list: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
    writeln!(out, "actions {}", list.join(" ")).unwrap();
    writeln!(out, "rmax {}", game.r_max()).unwrap();
    for s in 0..game.num_states() {
        for j in 0..game.num_joint_actions() {
            let joint: Vec<String> = canonical_decode(counts, j).iter().map(|a| a.to_string()).collect();
            let joint = joint.join(" ");
            writeln!(out, "reward {s} {joint} {}", game.reward_at(s, j)).unwrap();
            for (next, &p) in game.row_at(s, j).iter().enumerate() {
                if p != 0.0 {
                    writeln!(out, "trans {s} {joint} {next} {p}").unwrap();
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "cisg v1\nstates 1\nagents 2\nactions 1 1\nrmax 1\nreward 0 0 0 0.5\ntrans 0 0 0 0 1\n";

    const CYCLE2: &str = "\
# two states, rewards 1 and 0, every joint action swaps
cisg v1
states 2
agents 2
actions 1 1
rmax 1
trans 1 0 0 0 1.0
reward 1 0 0 0
reward 0 0 0 1   # good state
trans 0 0 0 1 1.0
";

    #[test]
    fn minimal_game() {
        let g = parse_game_spec(MINIMAL).unwrap();
        assert_eq!(g.num_states(), 1);
        assert_eq!(g.num_joint_actions(), 1);
        assert_eq!(g.reward_at(0, 0), 0.5);
        assert_eq!(g.row_at(0, 0), &[1.0]);
    }

    #[test]
    fn cycle2_round_trips() {
        let g = parse_game_spec(CYCLE2).unwrap();
        let text = serialize_game_spec(&g);
        let again = parse_game_spec(&text).unwrap();
        assert_eq!(g, again);
        assert_eq!(text, serialize_game_spec(&again));
    }

    #[test]
    fn missing_transition_row_names_the_cell() {
        let text = "cisg v1\nstates 1\nagents 2\nactions 1 2\nrmax 1\nreward 0 0 0 0.5\nreward 0 0 1 0.5\ntrans 0 0 0 0 1\n";
        let err = parse_game_spec(text).unwrap_err();
        assert_eq!(
            err,
            GameError::Missing {
                kind: "trans",
                state: 0,
                joint: JointAction(vec![0, 1])
            }
        );
        assert!(err.to_string().contains("(0, 1)"));
    }

    #[test]
    fn missing_reward() {
        let text = "cisg v1\nstates 1\nagents 2\nactions 1 1\nrmax 1\ntrans 0 0 0 0 1\n";
        assert!(matches!(
            parse_game_spec(text).unwrap_err(),
            GameError::Missing { kind: "reward", .. }
        ));
    }

    #[test]
    fn duplicate_entries() {
        let text = format!("{MINIMAL}reward 0 0 0 0.25\n");
        assert!(matches!(
            parse_game_spec(&text).unwrap_err(),
            GameError::Duplicate { kind: "reward", line: 8, .. }
        ));
        let text = format!("{MINIMAL}trans 0 0 0 0 1\n");
        assert!(matches!(
            parse_game_spec(&text).unwrap_err(),
            GameError::Duplicate { kind: "trans", .. }
        ));
    }

    #[test]
    fn row_sum_and_reward_range() {
        let text = MINIMAL.replace("trans 0 0 0 0 1", "trans 0 0 0 0 0.75");
        assert!(matches!(parse_game_spec(&text).unwrap_err(), GameError::RowSum { .. }));
        let text = MINIMAL.replace("0 0 0.5", "0 0 1.5");
        assert!(matches!(
            parse_game_spec(&text).unwrap_err(),
            GameError::RewardOutOfRange { .. }
        ));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = MINIMAL.replace("reward 0 0 0 0.5", "reward 0 0 0 abc");
        assert_eq!(
            parse_game_spec(&text).unwrap_err(),
            GameError::Syntax {
                line: 6,
                message: "expected a real number for reward, got `abc`".into()
            }
        );
        let text = MINIMAL.replace("cisg v1", "cisg v2");
        assert!(matches!(parse_game_spec(&text).unwrap_err(), GameError::Syntax { line: 1, .. }));
        let text = MINIMAL.replace("reward 0 0 0 0.5", "reward 0 0 1 0.5");
        assert!(matches!(parse_game_spec(&text).unwrap_err(), GameError::Syntax { line: 6, .. }));
        let text = MINIMAL.replace("actions 1 1", "actions 1 1 1");
        assert!(matches!(parse_game_spec(&text).unwrap_err(), GameError::Syntax { line: 6, .. }));
        assert!(parse_game_spec("").is_err());
    }

    #[test]
    fn decimal_literals_are_kept_exactly() {
        let text = MINIMAL.replace("0.5", "0.1");
        let g = parse_game_spec(&text).unwrap();
        assert_eq!(g.reward_at(0, 0), 0.1);
        assert!(serialize_game_spec(&g).contains("reward 0 0 0 0.1\n"));
    }
}
