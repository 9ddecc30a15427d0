//! Two-period pure-exchange economy over lottery states: Pareto-optimal
//! allocation, marginal-rate checks, and the link between state prices and
//! game amplitudes.
//!
//! Agents have time-separable CRRA utility `u(c_0, c_w) = v(c_0) + beta
//! v(c_w)` and subjective beliefs over the lottery states. The planner
//! maximizes the Pareto-weighted sum of expected utilities subject to
//! feasibility in each market (time 0 and every state). CRRA marginal
//! utility inverts in closed form, so each market clears through one scalar
//! monotone equation in its own multiplier; markets decouple completely and
//! the solver reduces to `N + 1` independent bracketed Newton solves.
//!
//! Multipliers are stored as solved (they scale linearly with the Pareto
//! weights); [`Allocation::state_prices`] divides out the time-0 multiplier,
//! which is the conventional normalization for price statements. States no
//! agent believes in receive an equal split of their aggregate, a zero
//! multiplier, and are excluded from all optimality checks; agents with a
//! zero belief in an otherwise live state optimally consume nothing there
//! and sit on the domain boundary.

use crate::lottery::{rational_beliefs, BeliefVector, JointKet, LotteryError};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EconomyError {
    #[error("invalid economy specification: {0}")]
    InvalidSpec(String),
    #[error("consumption {consumption} outside the CRRA domain (curvature {gamma})")]
    DomainError { consumption: f64, gamma: f64 },
    #[error("no interior solution: market clearing stalled at residual {best_residual}")]
    NoInteriorSolution { best_residual: f64 },
    #[error("agent {agent} beliefs deviate from rational beliefs by {deviation} (tolerance {tol})")]
    BeliefMismatch { agent: usize, deviation: f64, tol: f64 },
    #[error("allocation shape does not match the economy: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Lottery(#[from] LotteryError),
}

pub type EconomyResult<T> = Result<T, EconomyError>;

/// Time-separable CRRA utility: `v(c) = (c^(1-gamma) - 1) / (1 - gamma)`,
/// logarithmic at curvature exactly 1. Increasing and strictly concave for
/// every admissible parameter pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilitySpec {
    gamma: f64,
    beta: f64,
}

impl UtilitySpec {
    pub fn new(gamma: f64, beta: f64) -> EconomyResult<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(EconomyError::InvalidSpec(format!(
                "curvature must be positive and finite, got {gamma}"
            )));
        }
        if !beta.is_finite() || beta <= 0.0 {
            return Err(EconomyError::InvalidSpec(format!(
                "time weight must be positive and finite, got {beta}"
            )));
        }
        Ok(Self { gamma, beta })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn check_domain(&self, c: f64) -> EconomyResult<()> {
        if !c.is_finite() || c < 0.0 || (c == 0.0 && self.gamma >= 1.0) {
            return Err(EconomyError::DomainError { consumption: c, gamma: self.gamma });
        }
        Ok(())
    }

    /// Period felicity `v(c)`.
    pub fn v(&self, c: f64) -> EconomyResult<f64> {
        self.check_domain(c)?;
        if self.gamma == 1.0 {
            Ok(c.ln())
        } else {
            Ok((c.powf(1.0 - self.gamma) - 1.0) / (1.0 - self.gamma))
        }
    }

    /// Marginal felicity `v'(c) = c^(-gamma)`; requires strictly positive
    /// consumption.
    pub fn v_prime(&self, c: f64) -> EconomyResult<f64> {
        if !c.is_finite() || c <= 0.0 {
            return Err(EconomyError::DomainError { consumption: c, gamma: self.gamma });
        }
        Ok(c.powf(-self.gamma))
    }

    /// Second derivative `v''(c) = -gamma c^(-gamma - 1)`.
    pub fn v_double_prime(&self, c: f64) -> EconomyResult<f64> {
        if !c.is_finite() || c <= 0.0 {
            return Err(EconomyError::DomainError { consumption: c, gamma: self.gamma });
        }
        Ok(-self.gamma * c.powf(-self.gamma - 1.0))
    }
}

/// One agent: utility parameters, Pareto weight, and subjective beliefs.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub utility: UtilitySpec,
    pub lambda: f64,
    pub beliefs: BeliefVector,
}

/// A pure-exchange economy: agents plus aggregate resources at time 0 and in
/// each lottery state.
#[derive(Debug, Clone, PartialEq)]
pub struct EconomySpec {
    agents: Vec<AgentSpec>,
    aggregate_c0: f64,
    aggregate_c: Vec<f64>,
}

impl EconomySpec {
    pub fn new(agents: Vec<AgentSpec>, aggregate_c0: f64, aggregate_c: Vec<f64>) -> EconomyResult<Self> {
        if agents.is_empty() {
            return Err(EconomyError::InvalidSpec("at least one agent is required".into()));
        }
        if aggregate_c.is_empty() {
            return Err(EconomyError::InvalidSpec("at least one lottery state is required".into()));
        }
        let n = aggregate_c.len();
        for (i, agent) in agents.iter().enumerate() {
            if !agent.lambda.is_finite() || agent.lambda <= 0.0 {
                return Err(EconomyError::InvalidSpec(format!(
                    "agent {i} weight must be positive and finite, got {}",
                    agent.lambda
                )));
            }
            if agent.beliefs.len() != n {
                return Err(EconomyError::InvalidSpec(format!(
                    "agent {i} has {} belief weights for {n} states",
                    agent.beliefs.len()
                )));
            }
        }
        if !aggregate_c0.is_finite() || aggregate_c0 <= 0.0 {
            return Err(EconomyError::InvalidSpec(format!(
                "time-0 aggregate must be positive and finite, got {aggregate_c0}"
            )));
        }
        if let Some(bad) = aggregate_c.iter().find(|&&c| !c.is_finite() || c <= 0.0) {
            return Err(EconomyError::InvalidSpec(format!(
                "state aggregates must be positive and finite, got {bad}"
            )));
        }
        Ok(Self { agents, aggregate_c0, aggregate_c })
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_states(&self) -> usize {
        self.aggregate_c.len()
    }

    pub fn aggregate_c0(&self) -> f64 {
        self.aggregate_c0
    }

    pub fn aggregate_c(&self) -> &[f64] {
        &self.aggregate_c
    }
}

/// Subjective expected utility `v(c_0) + beta sum_w bel_w v(c_w)`. States
/// with zero belief contribute nothing and their consumption may sit on the
/// domain boundary.
pub fn expected_utility(
    utility: &UtilitySpec,
    beliefs: &BeliefVector,
    c0: f64,
    c: &[f64],
) -> EconomyResult<f64> {
    if c.len() != beliefs.len() {
        return Err(EconomyError::ShapeMismatch(format!(
            "{} consumptions for {} belief weights",
            c.len(),
            beliefs.len()
        )));
    }
    let mut future = 0.0;
    for (&bel, &cw) in beliefs.weights().iter().zip(c) {
        if bel > 0.0 {
            future += bel * utility.v(cw)?;
        }
    }
    Ok(utility.v(c0)? + utility.beta * future)
}

/// The same expectation computed as an operator trace: the diagonal belief
/// density against the diagonal utility operator. Agrees with
/// [`expected_utility`] to rounding; kept as an independent code path.
pub fn expected_utility_operator(
    utility: &UtilitySpec,
    beliefs: &BeliefVector,
    c0: f64,
    c: &[f64],
) -> EconomyResult<f64> {
    if c.len() != beliefs.len() {
        return Err(EconomyError::ShapeMismatch(format!(
            "{} consumptions for {} belief weights",
            c.len(),
            beliefs.len()
        )));
    }
    let n = c.len();
    let v0 = utility.v(c0)?;
    let mut u_diag = vec![0.0; n];
    for (w, (&bel, &cw)) in beliefs.weights().iter().zip(c).enumerate() {
        // Zero-belief states are annihilated by the density anyway; masking
        // them keeps the utility operator finite on the boundary.
        u_diag[w] = if bel > 0.0 { v0 + utility.beta * utility.v(cw)? } else { 0.0 };
    }
    let rho = DMatrix::<f64>::from_fn(n, n, |r, c_| if r == c_ { beliefs.weights()[r] } else { 0.0 });
    let u_op = DMatrix::<f64>::from_fn(n, n, |r, c_| if r == c_ { u_diag[r] } else { 0.0 });
    Ok((rho * u_op).trace())
}

/// A Pareto-optimal consumption plan with its market multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Time-0 consumption per agent.
    pub c0: Vec<f64>,
    /// State consumption, agent-major: `c[i][w]`.
    pub c: Vec<Vec<f64>>,
    /// Time-0 multiplier, in the scale set by the Pareto weights.
    pub phi0: f64,
    /// State multipliers, same scale.
    pub phi: Vec<f64>,
    /// States in which every agent holds zero belief.
    pub degenerate_states: Vec<usize>,
}

impl Allocation {
    /// State prices `phi_w / phi_0`, the multipliers under the normalization
    /// that sets the time-0 price to 1.
    pub fn state_prices(&self) -> Vec<f64> {
        self.phi.iter().map(|p| p / self.phi0).collect()
    }
}

/// Clears one market: finds `phi > 0` with `sum_i (a_i / phi)^(1/gamma_i) =
/// supply`, returning the multiplier and the per-participant consumptions.
/// The left side is strictly decreasing in `phi`, so the root is unique;
/// solved by bracketed Newton in log space. `Err` carries the best residual.
fn clear_market(coeffs: &[(f64, f64)], supply: f64) -> Result<(f64, Vec<f64>), f64> {
    debug_assert!(!coeffs.is_empty() && supply > 0.0);
    let excess = |t: f64| -> f64 {
        coeffs.iter().map(|&(a, g)| ((a.ln() - t) / g).exp()).sum::<f64>() - supply
    };
    let slope = |t: f64| -> f64 {
        coeffs.iter().map(|&(a, g)| -((a.ln() - t) / g).exp() / g).sum::<f64>()
    };

    let (mut lo, mut hi);
    let f0 = excess(0.0);
    if f0 > 0.0 {
        lo = 0.0;
        hi = 1.0;
        let mut step = 1.0;
        while excess(hi) > 0.0 {
            step *= 2.0;
            hi += step;
            if step > 1e9 {
                return Err(excess(hi).abs());
            }
        }
    } else {
        hi = 0.0;
        lo = -1.0;
        let mut step = 1.0;
        while excess(lo) < 0.0 {
            step *= 2.0;
            lo -= step;
            if step > 1e9 {
                return Err(excess(lo).abs());
            }
        }
    }

    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let ft = excess(t);
        if ft > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let mut next = t - ft / slope(t);
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-15 * (1.0 + t.abs()) {
            t = next;
            break;
        }
        t = next;
    }

    let residual = excess(t).abs();
    if !residual.is_finite() || residual > 1e-9 * supply.max(1.0) {
        return Err(residual);
    }
    let consumptions = coeffs.iter().map(|&(a, g)| ((a.ln() - t) / g).exp()).collect();
    Ok((t.exp(), consumptions))
}

/// Solves the Pareto program: maximizes the weighted sum of expected
/// utilities subject to feasibility at time 0 and in every state. Each
/// market clears independently through its own multiplier; the first-order
/// conditions hold by construction to solver precision, and strict concavity
/// makes them sufficient for the global optimum.
pub fn solve_pareto(economy: &EconomySpec) -> EconomyResult<Allocation> {
    let num_agents = economy.num_agents();
    let num_states = economy.num_states();

    let coeffs: Vec<(f64, f64)> =
        economy.agents.iter().map(|a| (a.lambda, a.utility.gamma)).collect();
    let (phi0, c0) = clear_market(&coeffs, economy.aggregate_c0)
        .map_err(|best_residual| EconomyError::NoInteriorSolution { best_residual })?;

    let mut c = vec![vec![0.0; num_states]; num_agents];
    let mut phi = vec![0.0; num_states];
    let mut degenerate_states = Vec::new();

    for w in 0..num_states {
        let active: Vec<usize> = (0..num_agents)
            .filter(|&i| economy.agents[i].beliefs.weights()[w] > 0.0)
            .collect();
        if active.is_empty() {
            let share = economy.aggregate_c[w] / num_agents as f64;
            for row in c.iter_mut() {
                row[w] = share;
            }
            degenerate_states.push(w);
            continue;
        }
        let coeffs: Vec<(f64, f64)> = active
            .iter()
            .map(|&i| {
                let agent = &economy.agents[i];
                (agent.lambda * agent.utility.beta * agent.beliefs.weights()[w], agent.utility.gamma)
            })
            .collect();
        let (phi_w, cons) = clear_market(&coeffs, economy.aggregate_c[w])
            .map_err(|best_residual| EconomyError::NoInteriorSolution { best_residual })?;
        phi[w] = phi_w;
        for (&i, cw) in active.iter().zip(cons) {
            c[i][w] = cw;
        }
    }

    Ok(Allocation { c0, c, phi0, phi, degenerate_states })
}

/// First-order and feasibility residuals of an allocation, each scaled by
/// `1 + |target|`.
#[derive(Debug, Clone, PartialEq)]
pub struct FocReport {
    pub max_foc: f64,
    pub max_feasibility: f64,
}

pub fn foc_residuals(economy: &EconomySpec, allocation: &Allocation) -> EconomyResult<FocReport> {
    check_shape(economy, allocation)?;
    let mut max_foc = 0.0f64;

    for (i, agent) in economy.agents.iter().enumerate() {
        let lhs = agent.lambda * agent.utility.v_prime(allocation.c0[i])?;
        max_foc = max_foc.max((lhs - allocation.phi0).abs() / (1.0 + allocation.phi0.abs()));
        for w in 0..economy.num_states() {
            let bel = agent.beliefs.weights()[w];
            if bel == 0.0 {
                continue;
            }
            let lhs = agent.lambda * agent.utility.beta * bel * agent.utility.v_prime(allocation.c[i][w])?;
            max_foc = max_foc.max((lhs - allocation.phi[w]).abs() / (1.0 + allocation.phi[w].abs()));
        }
    }

    let mut max_feasibility =
        (allocation.c0.iter().sum::<f64>() - economy.aggregate_c0).abs()
            / (1.0 + economy.aggregate_c0);
    for w in 0..economy.num_states() {
        let total: f64 = allocation.c.iter().map(|row| row[w]).sum();
        max_feasibility =
            max_feasibility.max((total - economy.aggregate_c[w]).abs() / (1.0 + economy.aggregate_c[w]));
    }
    Ok(FocReport { max_foc, max_feasibility })
}

/// The planner objective: Pareto-weighted sum of expected utilities.
pub fn pareto_objective(economy: &EconomySpec, allocation: &Allocation) -> EconomyResult<f64> {
    check_shape(economy, allocation)?;
    let mut total = 0.0;
    for (i, agent) in economy.agents.iter().enumerate() {
        total += agent.lambda
            * expected_utility(&agent.utility, &agent.beliefs, allocation.c0[i], &allocation.c[i])?;
    }
    Ok(total)
}

fn check_shape(economy: &EconomySpec, allocation: &Allocation) -> EconomyResult<()> {
    let n = economy.num_states();
    if allocation.c0.len() != economy.num_agents()
        || allocation.c.len() != economy.num_agents()
        || allocation.c.iter().any(|row| row.len() != n)
        || allocation.phi.len() != n
    {
        return Err(EconomyError::ShapeMismatch(format!(
            "allocation for {} agents / {} states vs economy with {} agents / {} states",
            allocation.c0.len(),
            allocation.phi.len(),
            economy.num_agents(),
            n
        )));
    }
    Ok(())
}

/// Outcome of the marginal-rate-of-substitution equality check.
#[derive(Debug, Clone, PartialEq)]
pub struct MrsReport {
    pub ok: bool,
    pub max_deviation: f64,
    /// Worst deviation per state; 0 for excluded states.
    pub state_deviations: Vec<f64>,
    /// `(agent, state)` pairs skipped for zero belief, and all agents of
    /// degenerate states.
    pub excluded: Vec<(usize, usize)>,
    pub tol: f64,
}

/// Checks that each agent's marginal rate of substitution between time-0 and
/// state-`w` consumption equals the state price `phi_w / phi_0`, hence
/// agrees across agents. Deviations are scaled by `1 + |price|`.
pub fn check_mrs_equality(
    economy: &EconomySpec,
    allocation: &Allocation,
    tol: f64,
) -> EconomyResult<MrsReport> {
    check_shape(economy, allocation)?;
    let prices = allocation.state_prices();
    let mut state_deviations = vec![0.0f64; economy.num_states()];
    let mut excluded = Vec::new();

    for w in 0..economy.num_states() {
        if allocation.degenerate_states.contains(&w) {
            for i in 0..economy.num_agents() {
                excluded.push((i, w));
            }
            continue;
        }
        for (i, agent) in economy.agents.iter().enumerate() {
            let bel = agent.beliefs.weights()[w];
            if bel == 0.0 {
                excluded.push((i, w));
                continue;
            }
            let mrs = agent.utility.beta * bel * agent.utility.v_prime(allocation.c[i][w])?
                / agent.utility.v_prime(allocation.c0[i])?;
            let dev = (mrs - prices[w]).abs() / (1.0 + prices[w].abs());
            state_deviations[w] = state_deviations[w].max(dev);
        }
    }
    let max_deviation = state_deviations.iter().copied().fold(0.0, f64::max);
    Ok(MrsReport { ok: max_deviation <= tol, max_deviation, state_deviations, excluded, tol })
}

/// Outcome of the quantum price-condition check: state prices against
/// squared game amplitudes, and marginal utilities against the discounted
/// time-0 marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumPriceReport {
    pub ok: bool,
    /// Worst deviation of an agent's MRS from the squared amplitude price.
    pub price_residual_max: f64,
    /// Worst deviation of `beta v'(c_w)` from `d v'(c_0)`.
    pub marginal_residual_max: f64,
    /// States skipped: zero amplitude or degenerate.
    pub excluded_states: Vec<usize>,
    pub tol: f64,
}

/// Verifies the identification of state prices with the game ket: with the
/// time-0 price normalized to 1, each state price must equal the squared
/// amplitude `|psi(w, w)|^2 = d * bel_w`, and each agent's future marginal
/// utility must satisfy `beta v'(c_w) = d v'(c_0)` state by state.
///
/// Requires every agent to hold the rational beliefs of the ket within
/// `tol`; zero-amplitude states are excluded and reported.
pub fn check_quantum_price_conditions(
    economy: &EconomySpec,
    allocation: &Allocation,
    q: &JointKet,
    d: f64,
    tol: f64,
) -> EconomyResult<QuantumPriceReport> {
    check_shape(economy, allocation)?;
    let rational = rational_beliefs(q, d)?;
    if rational.len() != economy.num_states() {
        return Err(EconomyError::ShapeMismatch(format!(
            "ket carries {} outcomes for an economy with {} states",
            rational.len(),
            economy.num_states()
        )));
    }
    for (i, agent) in economy.agents.iter().enumerate() {
        let deviation = agent
            .beliefs
            .weights()
            .iter()
            .zip(rational.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if deviation > tol {
            return Err(EconomyError::BeliefMismatch { agent: i, deviation, tol });
        }
    }

    let mut price_residual_max = 0.0f64;
    let mut marginal_residual_max = 0.0f64;
    let mut excluded_states = Vec::new();

    for w in 0..economy.num_states() {
        let bel = rational.weights()[w];
        if bel == 0.0 || allocation.degenerate_states.contains(&w) {
            excluded_states.push(w);
            continue;
        }
        // Squared raw amplitude of the state, the quantum Arrow-Debreu price.
        let target = d * bel;
        for (i, agent) in economy.agents.iter().enumerate() {
            let v0 = agent.utility.v_prime(allocation.c0[i])?;
            let vw = agent.utility.v_prime(allocation.c[i][w])?;
            let mrs = agent.utility.beta * agent.beliefs.weights()[w] * vw / v0;
            price_residual_max =
                price_residual_max.max((mrs - target).abs() / (1.0 + target.abs()));
            let marginal = (agent.utility.beta * vw - d * v0).abs() / (1.0 + (d * v0).abs());
            marginal_residual_max = marginal_residual_max.max(marginal);
        }
    }

    Ok(QuantumPriceReport {
        ok: price_residual_max <= tol && marginal_residual_max <= tol,
        price_residual_max,
        marginal_residual_max,
        excluded_states,
        tol,
    })
}
