use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use coordlearn::cli::execute;
use coordlearn::coordination::{self, JointActionIndexing, ProtocolConfig, ProtocolKind, ScheduleParams};
use coordlearn::game::{self, Cisg, JointAction};
use coordlearn::harness::{Metrics, Monitoring, RunLog, SimulationConfig};
use coordlearn::planning::{self, StationaryPolicy};
use coordlearn::rmax;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A common-interest stochastic game.
#[pyclass(module = "coordlearn_py", name = "Game", frozen)]
struct PyGame {
    inner: Cisg,
}

#[pymethods]
impl PyGame {
    /// Parse the line-oriented game format.
    #[staticmethod]
    fn from_spec(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: game::parse_game_spec(text).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        Self::from_spec(&text)
    }

    /// A random game whose every transition probability is positive.
    #[staticmethod]
    #[pyo3(signature = (num_states, action_counts, r_max = 1.0, seed = 0))]
    fn random(num_states: usize, action_counts: Vec<usize>, r_max: f64, seed: u64) -> PyResult<Self> {
        if num_states == 0 || action_counts.is_empty() || action_counts.contains(&0) || !(r_max > 0.0) {
            return Err(PyValueError::new_err("need states, positive action counts and r_max > 0"));
        }
        Ok(Self {
            inner: game::random_ergodic_cisg(num_states, &action_counts, r_max, seed),
        })
    }

    fn to_spec(&self) -> String {
        game::serialize_game_spec(&self.inner)
    }

    #[getter]
    fn num_states(&self) -> usize {
        self.inner.num_states()
    }

    #[getter]
    fn num_agents(&self) -> usize {
        self.inner.num_agents()
    }

    #[getter]
    fn action_counts(&self) -> Vec<usize> {
        self.inner.action_counts().to_vec()
    }

    #[getter]
    fn r_max(&self) -> f64 {
        self.inner.r_max()
    }

    fn reward(&self, state: usize, joint: Vec<usize>) -> PyResult<f64> {
        let j = self.joint(state, joint)?;
        Ok(self.inner.reward(state, &j))
    }

    fn transition(&self, state: usize, joint: Vec<usize>) -> PyResult<Vec<f64>> {
        let j = self.joint(state, joint)?;
        Ok(self.inner.transition_row(state, &j).to_vec())
    }

    /// `(ergodic, witness)`, the witness being `(policy, from, to)` with
    /// `to` unreachable from `from` under `policy`.
    fn check_ergodic(&self) -> PyResult<(bool, Option<(Vec<Vec<usize>>, usize, usize)>)> {
        let r = game::check_ergodic(&self.inner).map_err(value_err)?;
        let witness = r.witness.map(|w| (self.joints(w.policy.actions()), w.from, w.to));
        Ok((r.ergodic, witness))
    }

    /// `(v(M), argmax policy as one joint action per state)`.
    fn optimal_value(&self) -> PyResult<(f64, Vec<Vec<usize>>)> {
        let r = planning::optimal_value_oracle(&self.inner.induced_mdp()).map_err(value_err)?;
        Ok((r.optimal_value, self.joints(r.argmax_policy.actions())))
    }

    /// ε-return mixing time of a stationary joint policy.
    #[pyo3(signature = (policy, epsilon, t_cap = None))]
    fn mixing_time(&self, policy: Vec<Vec<usize>>, epsilon: f64, t_cap: Option<usize>) -> PyResult<usize> {
        if policy.len() != self.inner.num_states() {
            return Err(PyValueError::new_err("need one joint action per state"));
        }
        let actions = policy
            .into_iter()
            .enumerate()
            .map(|(s, j)| self.joint(s, j).map(|j| self.inner.canonical_index(&j)))
            .collect::<PyResult<Vec<_>>>()?;
        let max_count = self.inner.action_counts().iter().copied().max().unwrap_or(1);
        let cap = t_cap.unwrap_or_else(|| {
            planning::default_mixing_cap(self.inner.num_states(), max_count, self.inner.r_max(), epsilon)
        });
        planning::epsilon_mixing_time(&self.inner.induced_mdp(), &StationaryPolicy::new(actions), epsilon, cap)
            .map_err(value_err)
    }

    fn __repr__(&self) -> String {
        let counts: Vec<String> = self.inner.action_counts().iter().map(|c| c.to_string()).collect();
        format!("Game(states={}, actions={})", self.inner.num_states(), counts.join("x"))
    }
}

impl PyGame {
    fn joint(&self, state: usize, joint: Vec<usize>) -> PyResult<JointAction> {
        let j = JointAction::new(joint);
        if state >= self.inner.num_states() || !self.inner.is_valid_joint(&j) {
            return Err(PyValueError::new_err(format!("no state {state} or joint action {j}")));
        }
        Ok(j)
    }

    fn joints(&self, indices: &[usize]) -> Vec<Vec<usize>> {
        indices.iter().map(|&j| self.inner.canonical_joint(j).0).collect()
    }
}

/// The log and summary of one run.
#[pyclass(module = "coordlearn_py", name = "RunResult", frozen)]
struct PyRunResult {
    log: RunLog,
    metrics: Metrics,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn steps(&self) -> u64 {
        self.metrics.steps
    }

    #[getter]
    fn running_average(&self) -> f64 {
        self.metrics.running_average
    }

    #[getter]
    fn v_opt(&self) -> Option<f64> {
        self.metrics.v_opt
    }

    #[getter]
    fn target(&self) -> Option<f64> {
        self.metrics.target
    }

    #[getter]
    fn time_to_target(&self) -> Option<u64> {
        self.metrics.time_to_target
    }

    #[getter]
    fn switches(&self) -> Vec<usize> {
        self.log.switches.clone()
    }

    #[getter]
    fn payoffs(&self) -> Vec<f64> {
        self.log.records.iter().map(|r| r.payoff).collect()
    }

    #[getter]
    fn states(&self) -> Vec<usize> {
        self.log.records.iter().map(|r| r.state).collect()
    }

    #[getter]
    fn actions(&self) -> Vec<Vec<usize>> {
        self.log.records.iter().map(|r| r.actions.clone()).collect()
    }

    /// The run log as CSV text.
    fn to_csv(&self) -> String {
        self.log.to_csv_string()
    }

    fn __len__(&self) -> usize {
        self.log.len()
    }
}

/// Runs one protocol for `steps` stages.
#[pyfunction]
#[pyo3(signature = (
    game, protocol, steps, *, seed = 0, monitoring = "imperfect", epsilon = 0.1, delta = 0.1, gamma = 0.1,
    t_mix = None, k1_override = None, bound = None, agent_order = None, oracle = false
))]
fn run(
    py: Python<'_>,
    game: &PyGame,
    protocol: &str,
    steps: u64,
    seed: u64,
    monitoring: &str,
    epsilon: f64,
    delta: f64,
    gamma: f64,
    t_mix: Option<usize>,
    k1_override: Option<u64>,
    bound: Option<usize>,
    agent_order: Option<Vec<usize>>,
    oracle: bool,
) -> PyResult<PyRunResult> {
    let kind: ProtocolKind = protocol.parse().map_err(PyValueError::new_err)?;
    let monitoring = match monitoring {
        "perfect" => Monitoring::Perfect,
        "imperfect" => Monitoring::Imperfect,
        other => return Err(PyValueError::new_err(format!("unknown monitoring {other:?}"))),
    };
    let config = SimulationConfig {
        protocol: ProtocolConfig {
            epsilon,
            delta,
            gamma,
            t_mix,
            k1_override,
            bound,
            agent_order,
            ..ProtocolConfig::new(kind)
        },
        monitoring,
        master_seed: seed,
        num_steps: steps,
        start_state: 0,
    };
    config.protocol.validate(monitoring).map_err(value_err)?;
    let g = &game.inner;
    let log = py.detach(|| execute(g, &config)).map_err(PyRuntimeError::new_err)?;
    let metrics = if oracle {
        let v = planning::optimal_value_oracle(&g.induced_mdp()).map_err(value_err)?;
        Metrics::with_oracle_value(&log, v.optimal_value, epsilon, gamma)
    } else {
        Metrics::from_log(&log)
    };
    Ok(PyRunResult { log, metrics })
}

/// `K₁` from the visit-threshold formula.
#[pyfunction]
fn k1_threshold(num_states: usize, num_actions: usize, t_mix: usize, r_max: f64, epsilon: f64, delta: f64) -> u64 {
    rmax::k1_threshold(num_states, num_actions, t_mix, r_max, epsilon, delta)
}

/// `(m, t_prime, q, number of size hypotheses)` for an order search.
#[pyfunction]
#[pyo3(signature = (epsilon, delta, gamma, r_max, num_agents, t_mix, bound = 1))]
fn compute_schedule(
    epsilon: f64,
    delta: f64,
    gamma: f64,
    r_max: f64,
    num_agents: usize,
    t_mix: usize,
    bound: usize,
) -> PyResult<(u64, u64, u64, usize)> {
    let s = coordination::compute_schedule(&ScheduleParams::new(epsilon, delta, gamma, r_max, num_agents, t_mix, bound))
        .map_err(value_err)?;
    Ok((s.m, s.t_prime, s.q, s.sizes_order.len()))
}

#[pyfunction]
fn lex_index(agent_order: Vec<usize>, action_counts: Vec<usize>, joint: Vec<usize>) -> PyResult<usize> {
    let ix = JointActionIndexing::new(agent_order, action_counts).map_err(value_err)?;
    ix.index(&JointAction::new(joint)).map_err(value_err)
}

#[pyfunction]
fn lex_decode(agent_order: Vec<usize>, action_counts: Vec<usize>, index: usize) -> PyResult<Vec<usize>> {
    let ix = JointActionIndexing::new(agent_order, action_counts).map_err(value_err)?;
    Ok(ix.try_decode(index).map_err(value_err)?.0)
}

#[pymodule]
fn coordlearn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGame>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(k1_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(compute_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(lex_index, m)?)?;
    m.add_function(wrap_pyfunction!(lex_decode, m)?)?;
    Ok(())
}
