//! Consensus-equilibrium fixed-point engine.
//!
//! A stacked state holds one working vector per agent. One sweep reflects the
//! state through every agent, then through the consensus-averaging operator:
//!
//! ```text
//! v  <-  (1 - rho) v + rho (2G - I)(2F - I) v
//! ```
//!
//! where `F` applies each agent to its own vector and `G` replaces every
//! vector with the stack average. At a fixed point all agents agree: each
//! `F_i(x* + u_i*)` equals the consensus `x*` and the tensions `u_i*` sum to
//! zero. The engine never looks inside an agent; anything implementing
//! [`AgentOp`] can participate.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// One consensus agent: a map from a flat vector to a flat vector of the
/// same length. Implementations should be (approximately) firmly
/// nonexpansive for the fixed-point iteration to behave.
pub trait AgentOp: Send + Sync {
    fn name(&self) -> &str;
    fn apply(&self, input: &[f64]) -> Result<Vec<f64>>;
}

/// Adapter turning a plain closure into an agent. Handy in tests and examples.
pub struct FnAgent<F> {
    name: String,
    f: F,
}

impl<F> FnAgent<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<F> AgentOp for FnAgent<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn apply(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(input))
    }
}

/// N stacked working vectors of equal length, one per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedState {
    vectors: Vec<Vec<f64>>,
}

impl StackedState {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let first = vectors.first().ok_or(Error::EmptyStackedState)?;
        let expected = first.len();
        for v in &vectors {
            if v.len() != expected {
                return Err(Error::RaggedStackedState {
                    expected,
                    got: v.len(),
                });
            }
        }
        Ok(Self { vectors })
    }

    /// Broadcasts one vector to `n_agents` identical copies.
    pub fn uniform(v: Vec<f64>, n_agents: usize) -> Result<Self> {
        if n_agents == 0 {
            return Err(Error::EmptyStackedState);
        }
        Ok(Self {
            vectors: vec![v; n_agents],
        })
    }

    pub fn agent_count(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector_len(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Euclidean norm over the full stacked state.
    pub fn norm(&self) -> f64 {
        self.vectors
            .iter()
            .flat_map(|v| v.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    fn average(&self) -> Vec<f64> {
        let n = self.vector_len();
        let mut mean = vec![0.0; n];
        for v in &self.vectors {
            for i in 0..n {
                mean[i] += v[i];
            }
        }
        let count = self.agent_count() as f64;
        for m in &mut mean {
            *m /= count;
        }
        mean
    }

    fn distance(&self, other: &StackedState) -> f64 {
        self.vectors
            .iter()
            .zip(&other.vectors)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// The averaging operator G: every vector becomes the stack mean.
pub fn consensus_average(state: &StackedState) -> StackedState {
    let mean = state.average();
    StackedState {
        vectors: vec![mean; state.agent_count()],
    }
}

/// The reflection 2G - I. Self-inverse and norm-preserving.
pub fn consensus_reflect(state: &StackedState) -> StackedState {
    let mean = state.average();
    let vectors = state
        .vectors
        .iter()
        .map(|v| {
            v.iter()
                .zip(&mean)
                .map(|(vi, mi)| 2.0 * mi - vi)
                .collect()
        })
        .collect();
    StackedState { vectors }
}

/// The reflection 2F - I: each agent is applied to its own vector. Agent
/// evaluations are independent and dispatched concurrently.
pub fn reflect_agents(state: &StackedState, agents: &[&dyn AgentOp]) -> Result<StackedState> {
    reflect_agents_at(state, agents, 0)
}

// Same as `reflect_agents`, with the engine's iteration index attached to
// any failure.
fn reflect_agents_at(
    state: &StackedState,
    agents: &[&dyn AgentOp],
    iteration: usize,
) -> Result<StackedState> {
    if agents.len() != state.agent_count() {
        return Err(Error::AgentCountMismatch {
            agents: agents.len(),
            state: state.agent_count(),
        });
    }
    let n = state.vector_len();
    let vectors: Vec<Vec<f64>> = agents
        .par_iter()
        .zip(state.vectors.par_iter())
        .map(|(agent, v)| -> Result<Vec<f64>> {
            let fv = agent.apply(v).map_err(|e| Error::AgentFailure {
                agent: agent.name().to_string(),
                iteration,
                source: Box::new(e),
            })?;
            if fv.len() != n {
                return Err(Error::AgentOutputLength {
                    agent: agent.name().to_string(),
                    expected: n,
                    got: fv.len(),
                });
            }
            let out: Vec<f64> = fv.iter().zip(v).map(|(f, vi)| 2.0 * f - vi).collect();
            if out.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteAgentOutput {
                    agent: agent.name().to_string(),
                    iteration,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(StackedState { vectors })
}

/// Stopping and averaging knobs for [`mace_iterate`].
#[derive(Debug, Clone)]
pub struct MaceOptions {
    /// Relative-residual stopping threshold.
    pub tol: f64,
    /// Hard iteration cap.
    pub max_iter: usize,
    /// Mann averaging weight rho in (0, 1]; 1 is the plain fixed-point sweep.
    pub mann_weight: f64,
}

impl Default for MaceOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 30,
            mann_weight: 1.0,
        }
    }
}

impl MaceOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol",
                value: self.tol,
                constraint: "must be positive",
            });
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iter",
                value: 0.0,
                constraint: "must be at least 1",
            });
        }
        if !(self.mann_weight > 0.0 && self.mann_weight <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "mann_weight",
                value: self.mann_weight,
                constraint: "must lie in (0, 1]",
            });
        }
        Ok(())
    }
}

/// Outcome of a consensus run: the agreed solution, per-agent tensions,
/// and the residual trace.
#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    /// Consensus solution x*: the average of the final stacked state.
    pub solution: Vec<f64>,
    /// Per-agent tensions u_i* = v_i* - x*. They sum to zero by construction.
    pub tensions: Vec<Vec<f64>>,
    /// Relative residual |v_next - v| / max(|v|, eps) per iteration.
    pub residual_history: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
}

/// Runs the consensus fixed-point iteration until the relative residual
/// drops below `tol` or `max_iter` sweeps have been spent.
pub fn mace_iterate(
    initial: StackedState,
    agents: &[&dyn AgentOp],
    options: &MaceOptions,
) -> Result<EquilibriumReport> {
    options.validate()?;
    if agents.len() != initial.agent_count() {
        return Err(Error::AgentCountMismatch {
            agents: agents.len(),
            state: initial.agent_count(),
        });
    }

    let rho = options.mann_weight;
    let mut state = initial;
    let mut residual_history = Vec::new();
    let mut converged = false;
    let mut iterations_used = 0;

    for iteration in 0..options.max_iter {
        let reflected = reflect_agents_at(&state, agents, iteration)?;
        let mut next = consensus_reflect(&reflected);
        if rho < 1.0 {
            // Mann averaging: next = (1 - rho) * current + rho * T(current).
            for (nv, ov) in next.vectors.iter_mut().zip(&state.vectors) {
                for (n, o) in nv.iter_mut().zip(ov) {
                    *n = (1.0 - rho) * o + rho * *n;
                }
            }
        }
        let prev_norm = state.norm();
        let residual = next.distance(&state) / prev_norm.max(f64::EPSILON);
        residual_history.push(residual);
        state = next;
        iterations_used = iteration + 1;
        if residual < options.tol {
            converged = true;
            break;
        }
    }

    let solution = state.average();
    let tensions = state
        .vectors
        .iter()
        .map(|v| v.iter().zip(&solution).map(|(vi, xi)| vi - xi).collect())
        .collect();
    Ok(EquilibriumReport {
        solution,
        tensions,
        residual_history,
        iterations_used,
        converged,
    })
}

/// Residuals of the equilibrium conditions at a reported solution.
#[derive(Debug, Clone)]
pub struct EquilibriumDiagnostics {
    /// Per-agent |F_i(x* + u_i*) - x*| / sqrt(n), in agent order.
    pub agent_residuals: Vec<f64>,
    /// |sum_i u_i*| / sqrt(n).
    pub consensus_residual: f64,
    pub pass: bool,
}

/// Re-evaluates every agent at `x* + u_i*` and measures how far the
/// equilibrium conditions are from holding.
pub fn verify_equilibrium(
    report: &EquilibriumReport,
    agents: &[&dyn AgentOp],
    tol: f64,
) -> Result<EquilibriumDiagnostics> {
    if agents.len() != report.tensions.len() {
        return Err(Error::AgentCountMismatch {
            agents: agents.len(),
            state: report.tensions.len(),
        });
    }
    let n = report.solution.len();
    let scale = (n as f64).sqrt().max(1.0);

    let mut agent_residuals = Vec::with_capacity(agents.len());
    for (agent, u) in agents.iter().zip(&report.tensions) {
        let input: Vec<f64> = report.solution.iter().zip(u).map(|(x, ui)| x + ui).collect();
        let out = agent.apply(&input).map_err(|e| Error::AgentFailure {
            agent: agent.name().to_string(),
            iteration: report.iterations_used,
            source: Box::new(e),
        })?;
        if out.len() != n {
            return Err(Error::AgentOutputLength {
                agent: agent.name().to_string(),
                expected: n,
                got: out.len(),
            });
        }
        let dev = out
            .iter()
            .zip(&report.solution)
            .map(|(o, x)| (o - x) * (o - x))
            .sum::<f64>()
            .sqrt();
        agent_residuals.push(dev / scale);
    }

    let mut sum_sq = 0.0;
    for i in 0..n {
        let s: f64 = report.tensions.iter().map(|u| u[i]).sum();
        sum_sq += s * s;
    }
    let consensus_residual = sum_sq.sqrt() / scale;

    let pass = consensus_residual <= tol && agent_residuals.iter().all(|r| *r <= tol);
    Ok(EquilibriumDiagnostics {
        agent_residuals,
        consensus_residual,
        pass,
    })
}

/// Samples pairs from `sampler` and returns the worst observed slack of the
/// firm-nonexpansiveness inequality
/// `|F(x)-F(y)|^2 + |(x-y)-(F(x)-F(y))|^2 <= |x-y|^2`.
/// Nonpositive slack (up to roundoff) means every sampled pair satisfied it.
pub fn check_firm_nonexpansiveness(
    agent: &dyn AgentOp,
    mut sampler: impl FnMut() -> Vec<f64>,
    trials: usize,
) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let x = sampler();
        let y = sampler();
        let fx = agent.apply(&x)?;
        let fy = agent.apply(&y)?;
        let mut df = 0.0;
        let mut rem = 0.0;
        let mut dx = 0.0;
        for i in 0..x.len() {
            let d = x[i] - y[i];
            let f = fx[i] - fy[i];
            df += f * f;
            rem += (d - f) * (d - f);
            dx += d * d;
        }
        worst = worst.max(df + rem - dx);
    }
    Ok(worst)
}
