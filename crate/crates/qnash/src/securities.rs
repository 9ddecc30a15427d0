//! Securities written on lottery states: valuation by game amplitudes,
//! securitization of player positions, portfolio choice, and the Pareto
//! condition under incomplete markets.
//!
//! A security pays `x_j(w)` numeraire units in lottery state `w`. Pricing a
//! security against an entangled game ket weighs each state payoff by the
//! squared amplitude, so the price of a securitized player position equals
//! that player's present value. The portfolio solver eliminates time-0
//! consumption through the budget and runs a damped Newton method on the
//! remaining concave program in the holdings.
//!
//! Two distinct optimality conditions are checked at a portfolio optimum.
//! The pointwise condition demands `beta v'(c_w) = d v'(c_0)` in every
//! state; it requires the constant vector to lie in the payoff span, which
//! incomplete markets usually fail. The weighted condition demands only
//! that each security's belief-weighted sum of those gaps vanish, which is
//! exactly first-order optimality and holds at every interior optimum.
//! [`check_pareto_condition`] reports both.

use crate::economy::{EconomyError, UtilitySpec};
use crate::game::{GameError, GameSpec};
use crate::lottery::{rational_beliefs, BeliefVector, DensityOperator, JointKet, LotteryError};
use crate::CONSTRUCTION_TOL;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SecuritiesError {
    #[error("invalid security specification: {0}")]
    InvalidSecurity(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("security {index} pays nothing in every state but is priced at {price}")]
    ArbitragePrice { index: usize, price: f64 },
    #[error("endowment wealth {wealth} leaves no feasible consumption")]
    InfeasibleBudget { wealth: f64 },
    #[error("portfolio solver found no interior optimum: best residual {best_residual}")]
    NoInteriorOptimum { best_residual: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error(transparent)]
    Economy(#[from] EconomyError),
    #[error(transparent)]
    Lottery(#[from] LotteryError),
    #[error(transparent)]
    Game(#[from] GameError),
}

pub type SecuritiesResult<T> = Result<T, SecuritiesError>;

/// Tag recording that a security is a scaled exposure to one player's
/// payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GamePosition {
    pub player: usize,
    pub theta: f64,
}

/// One security: a payoff vector over lottery states, optionally tagged
/// with the player position it securitizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Security {
    pub name: String,
    pub payoffs: Vec<f64>,
    pub provenance: Option<GamePosition>,
}

impl Security {
    pub fn new(name: impl Into<String>, payoffs: Vec<f64>) -> Self {
        Self { name: name.into(), payoffs, provenance: None }
    }

    /// A scaled exposure to one player's payoff across all game paths.
    pub fn from_game(spec: &GameSpec, player: usize, theta: f64) -> SecuritiesResult<Self> {
        if player >= spec.num_players() {
            return Err(SecuritiesError::DimensionMismatch(format!(
                "player {player} out of range for a {}-player game",
                spec.num_players()
            )));
        }
        if !theta.is_finite() || theta <= 0.0 {
            return Err(SecuritiesError::InvalidSecurity(format!(
                "exposure scale must be positive and finite, got {theta}"
            )));
        }
        let payoffs = spec.payoffs_of(player).iter().map(|p| theta * p).collect();
        Ok(Self {
            name: spec.players()[player].name.clone(),
            payoffs,
            provenance: Some(GamePosition { player, theta }),
        })
    }
}

/// A market of securities over a common lottery state space.
#[derive(Debug, Clone, PartialEq)]
pub struct SecuritySet {
    securities: Vec<Security>,
    num_states: usize,
}

impl SecuritySet {
    pub fn new(securities: Vec<Security>) -> SecuritiesResult<Self> {
        if securities.is_empty() {
            return Err(SecuritiesError::InvalidSecurity("at least one security is required".into()));
        }
        let num_states = securities[0].payoffs.len();
        if num_states == 0 {
            return Err(SecuritiesError::InvalidSecurity("payoff vectors must be non-empty".into()));
        }
        for (j, sec) in securities.iter().enumerate() {
            if sec.payoffs.len() != num_states {
                return Err(SecuritiesError::DimensionMismatch(format!(
                    "security {j} pays over {} states, expected {num_states}",
                    sec.payoffs.len()
                )));
            }
            if sec.payoffs.iter().any(|p| !p.is_finite()) {
                return Err(SecuritiesError::InvalidSecurity(format!(
                    "security {j} has a non-finite payoff"
                )));
            }
        }
        Ok(Self { securities, num_states })
    }

    pub fn securities(&self) -> &[Security] {
        &self.securities
    }

    pub fn num_securities(&self) -> usize {
        self.securities.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Payoff matrix with one row per security and one column per state.
    pub fn payoff_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.num_securities(), self.num_states, |j, w| {
            self.securities[j].payoffs[w]
        })
    }
}

/// Securitizes every player position: one security per player, each paying
/// `theta` times that player's payoff on the realized path.
pub fn securitize(spec: &GameSpec, theta: f64) -> SecuritiesResult<SecuritySet> {
    let securities = (0..spec.num_players())
        .map(|i| Security::from_game(spec, i, theta))
        .collect::<SecuritiesResult<Vec<_>>>()?;
    SecuritySet::new(securities)
}

/// Time-0 security prices in numeraire units.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPrices {
    prices: Vec<f64>,
}

impl MarketPrices {
    pub fn new(prices: Vec<f64>) -> SecuritiesResult<Self> {
        if prices.is_empty() || prices.iter().any(|p| !p.is_finite()) {
            return Err(SecuritiesError::InvalidSecurity(
                "prices must be a non-empty vector of finite reals".into(),
            ));
        }
        Ok(Self { prices })
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Expected payoff of one security under a lottery-basis density operator:
/// the trace of the density against the diagonal payoff operator.
pub fn security_expected_payoff(
    rho: &DensityOperator,
    security: &Security,
) -> SecuritiesResult<f64> {
    if rho.dim() != security.payoffs.len() {
        return Err(SecuritiesError::DimensionMismatch(format!(
            "density over {} states, security pays over {}",
            rho.dim(),
            security.payoffs.len()
        )));
    }
    Ok(rho
        .diagonal()
        .iter()
        .zip(&security.payoffs)
        .map(|(p, x)| p * x)
        .sum())
}

/// Prices one security against an entangled game ket: each state payoff is
/// weighed by its squared amplitude, so the price is the discounted
/// belief-expected payoff.
pub fn price_security(security: &Security, q: &JointKet, d: f64) -> SecuritiesResult<f64> {
    let beliefs = rational_beliefs(q, d)?;
    if beliefs.len() != security.payoffs.len() {
        return Err(SecuritiesError::DimensionMismatch(format!(
            "ket carries {} outcomes, security pays over {}",
            beliefs.len(),
            security.payoffs.len()
        )));
    }
    Ok(d * beliefs
        .weights()
        .iter()
        .zip(&security.payoffs)
        .map(|(b, x)| b * x)
        .sum::<f64>())
}

/// Prices every security in the set by [`price_security`].
pub fn pv_prices(securities: &SecuritySet, q: &JointKet, d: f64) -> SecuritiesResult<MarketPrices> {
    let prices = securities
        .securities
        .iter()
        .map(|s| price_security(s, q, d))
        .collect::<SecuritiesResult<Vec<_>>>()?;
    MarketPrices::new(prices)
}

/// Numerical rank of the payoff matrix against the state count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompletenessReport {
    pub rank: usize,
    pub num_states: usize,
    pub complete: bool,
}

/// Counts independent payoff directions: singular values above
/// `1e-10 * sigma_max`. The market is complete when they span all states.
pub fn market_completeness(securities: &SecuritySet) -> CompletenessReport {
    let svd = securities.payoff_matrix().svd(false, false);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let rank = if sigma_max == 0.0 {
        0
    } else {
        svd.singular_values.iter().filter(|s| **s > 1e-10 * sigma_max).count()
    };
    CompletenessReport { rank, num_states: securities.num_states, complete: rank == securities.num_states }
}

/// One investor: utility, beliefs over lottery states, and endowments of
/// time-0 numeraire and security holdings.
#[derive(Debug, Clone, PartialEq)]
pub struct InvestorSpec {
    pub utility: UtilitySpec,
    pub beliefs: BeliefVector,
    pub endowment_c0: f64,
    pub endowment_holdings: Vec<f64>,
}

/// A solved portfolio: holdings, time-0 consumption, and the state
/// consumption implied by the holdings.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    pub holdings: Vec<f64>,
    pub c0: f64,
    /// `c[w] = sum_j holdings[j] * x_j(w)`.
    pub implied_consumption: Vec<f64>,
    pub endowment_c0: f64,
    pub endowment_holdings: Vec<f64>,
}

struct Program<'a> {
    utility: &'a UtilitySpec,
    beliefs: &'a [f64],
    x: DMatrix<f64>,
    prices: DVector<f64>,
    wealth: f64,
}

impl Program<'_> {
    fn consumption(&self, s: &DVector<f64>) -> (f64, DVector<f64>) {
        (self.wealth - self.prices.dot(s), self.x.tr_mul(s))
    }

    fn feasible(&self, c0: f64, c: &DVector<f64>) -> bool {
        c0 > 0.0 && self.beliefs.iter().zip(c.iter()).all(|(&b, &cw)| b == 0.0 || cw > 0.0)
    }

    fn objective(&self, c0: f64, c: &DVector<f64>) -> f64 {
        let u = self.utility;
        let mut total = u.v(c0).unwrap_or(f64::NEG_INFINITY);
        for (&b, &cw) in self.beliefs.iter().zip(c.iter()) {
            if b > 0.0 {
                total += u.beta() * b * u.v(cw).unwrap_or(f64::NEG_INFINITY);
            }
        }
        total
    }

    fn gradient(&self, c0: f64, c: &DVector<f64>) -> DVector<f64> {
        let u = self.utility;
        let v0 = u.v_prime(c0).expect("interior point");
        let mut g = -v0 * self.prices.clone();
        for (w, (&b, &cw)) in self.beliefs.iter().zip(c.iter()).enumerate() {
            if b > 0.0 {
                let scale = u.beta() * b * u.v_prime(cw).expect("interior point");
                for j in 0..g.len() {
                    g[j] += scale * self.x[(j, w)];
                }
            }
        }
        g
    }

    fn hessian(&self, c0: f64, c: &DVector<f64>) -> DMatrix<f64> {
        let u = self.utility;
        let vpp0 = u.v_double_prime(c0).expect("interior point");
        let m = self.prices.len();
        let mut h = DMatrix::from_fn(m, m, |j, k| vpp0 * self.prices[j] * self.prices[k]);
        for (w, (&b, &cw)) in self.beliefs.iter().zip(c.iter()).enumerate() {
            if b > 0.0 {
                let scale = u.beta() * b * u.v_double_prime(cw).expect("interior point");
                for j in 0..m {
                    for k in 0..m {
                        h[(j, k)] += scale * self.x[(j, w)] * self.x[(k, w)];
                    }
                }
            }
        }
        h
    }

    /// First-order residual per security, scaled by `1 + |price|`: the
    /// belief-weighted marginal value of the security's payoffs, in time-0
    /// marginal-utility units, against its price.
    fn foc_residuals(&self, c0: f64, c: &DVector<f64>) -> Vec<f64> {
        let g = self.gradient(c0, c);
        let v0 = self.utility.v_prime(c0).expect("interior point");
        (0..g.len())
            .map(|j| (g[j] / v0).abs() / (1.0 + self.prices[j].abs()))
            .collect()
    }
}

/// Maximizes `v(c_0) + beta sum_w bel_w v(c_w)` over holdings subject to
/// the budget, with `c_0` eliminated through it. Damped Newton steps with a
/// curvature fallback and a backtracking line search that preserves
/// positive consumption; the returned portfolio satisfies the first-order
/// conditions within 1e-8 with the budget binding by construction.
pub fn solve_portfolio(
    agent: &InvestorSpec,
    securities: &SecuritySet,
    prices: &MarketPrices,
) -> SecuritiesResult<Portfolio> {
    let m = securities.num_securities();
    let n = securities.num_states();
    if prices.len() != m {
        return Err(SecuritiesError::DimensionMismatch(format!(
            "{} prices for {m} securities",
            prices.len()
        )));
    }
    if agent.beliefs.len() != n {
        return Err(SecuritiesError::DimensionMismatch(format!(
            "{} belief weights for {n} states",
            agent.beliefs.len()
        )));
    }
    if agent.endowment_holdings.len() != m {
        return Err(SecuritiesError::DimensionMismatch(format!(
            "{} endowed holdings for {m} securities",
            agent.endowment_holdings.len()
        )));
    }
    if !agent.endowment_c0.is_finite() || agent.endowment_holdings.iter().any(|w| !w.is_finite()) {
        return Err(SecuritiesError::InvalidSecurity("endowments must be finite".into()));
    }
    for (j, sec) in securities.securities.iter().enumerate() {
        let price = prices.prices()[j];
        if sec.payoffs.iter().all(|&x| x == 0.0) && price != 0.0 {
            return Err(SecuritiesError::ArbitragePrice { index: j, price });
        }
    }

    let wealth = agent.endowment_c0
        + agent
            .endowment_holdings
            .iter()
            .zip(prices.prices())
            .map(|(w, s)| w * s)
            .sum::<f64>();
    if !(wealth > 0.0) {
        return Err(SecuritiesError::InfeasibleBudget { wealth });
    }

    let program = Program {
        utility: &agent.utility,
        beliefs: agent.beliefs.weights(),
        x: securities.payoff_matrix(),
        prices: DVector::from_column_slice(prices.prices()),
        wealth,
    };

    // Start from the least-squares approximation to unit consumption in
    // every state, rescaled to spend half the wealth.
    let target = DVector::from_element(n, 1.0);
    let svd = program.x.transpose().svd(true, true);
    let mut s = svd
        .solve(&target, 1e-12)
        .map_err(|_| SecuritiesError::NoInteriorOptimum { best_residual: f64::INFINITY })?;
    let cost = program.prices.dot(&s);
    if cost.abs() > 1e-12 {
        s *= 0.5 * wealth / cost;
    }
    let (mut c0, mut c) = program.consumption(&s);
    let mut shrink = 0;
    while !program.feasible(c0, &c) && shrink < 80 {
        s *= 0.5;
        let next = program.consumption(&s);
        c0 = next.0;
        c = next.1;
        shrink += 1;
    }
    if !program.feasible(c0, &c) {
        return Err(SecuritiesError::NoInteriorOptimum { best_residual: f64::INFINITY });
    }

    let mut best_residual = f64::INFINITY;
    for _ in 0..200 {
        let g = program.gradient(c0, &c);
        let residual = program
            .foc_residuals(c0, &c)
            .iter()
            .copied()
            .fold(0.0, f64::max);
        best_residual = best_residual.min(residual);
        if residual <= 1e-11 {
            break;
        }

        let h = program.hessian(c0, &c);
        let mut step = None;
        let mut mu = 0.0;
        for _ in 0..40 {
            let damped = if mu == 0.0 {
                h.clone()
            } else {
                let mut d = h.clone();
                for j in 0..d.nrows() {
                    d[(j, j)] -= mu;
                }
                d
            };
            if let Some(delta) = damped.lu().solve(&(-&g)) {
                if g.dot(&delta) > 0.0 {
                    step = Some(delta);
                    break;
                }
            }
            mu = if mu == 0.0 { 1e-8 } else { mu * 10.0 };
        }
        let Some(delta) = step else { break };

        let base = program.objective(c0, &c);
        let slope = g.dot(&delta);
        let mut t = 1.0;
        let mut advanced = false;
        for _ in 0..60 {
            let trial = &s + t * &delta;
            let (tc0, tc) = program.consumption(&trial);
            if program.feasible(tc0, &tc)
                && program.objective(tc0, &tc) >= base + 1e-4 * t * slope
            {
                s = trial;
                c0 = tc0;
                c = tc;
                advanced = true;
                break;
            }
            t *= 0.5;
        }
        if !advanced {
            break;
        }
    }

    let residual = program
        .foc_residuals(c0, &c)
        .iter()
        .copied()
        .fold(0.0, f64::max);
    if !(residual <= 1e-8) {
        return Err(SecuritiesError::NoInteriorOptimum {
            best_residual: best_residual.min(residual),
        });
    }

    Ok(Portfolio {
        holdings: s.iter().copied().collect(),
        c0,
        implied_consumption: c.iter().copied().collect(),
        endowment_c0: agent.endowment_c0,
        endowment_holdings: agent.endowment_holdings.clone(),
    })
}

/// First-order residuals of a portfolio against the market prices, scaled
/// by `1 + |price|`.
pub fn portfolio_foc_residuals(
    agent: &InvestorSpec,
    securities: &SecuritySet,
    prices: &MarketPrices,
    portfolio: &Portfolio,
) -> SecuritiesResult<Vec<f64>> {
    if portfolio.holdings.len() != securities.num_securities() || prices.len() != securities.num_securities() {
        return Err(SecuritiesError::DimensionMismatch(
            "portfolio, prices, and securities must agree on the security count".into(),
        ));
    }
    let program = Program {
        utility: &agent.utility,
        beliefs: agent.beliefs.weights(),
        x: securities.payoff_matrix(),
        prices: DVector::from_column_slice(prices.prices()),
        wealth: 0.0,
    };
    let c = DVector::from_column_slice(&portfolio.implied_consumption);
    Ok(program.foc_residuals(portfolio.c0, &c))
}

/// Outcome of the Pareto-condition check at a portfolio optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoConditionReport {
    /// True when the pointwise condition holds within `tol`.
    pub ok: bool,
    /// Worst pointwise deviation, scaled by `1 + d v'(c_0)`.
    pub max_residual: f64,
    /// Signed pointwise gaps `beta v'(c_w) - d v'(c_0)`; 0 for excluded
    /// states.
    pub state_residuals: Vec<f64>,
    /// Belief-weighted payoff sums of those gaps, one per security, each
    /// scaled by `1 + d v'(c_0) sum_w bel_w |x_j(w)|`. These vanish at any
    /// interior optimum with discounted-expected-payoff prices.
    pub weighted_residuals: Vec<f64>,
    pub weighted_max: f64,
    /// States with zero belief, skipped by the pointwise check.
    pub excluded_states: Vec<usize>,
    pub tol: f64,
}

/// Evaluates the intertemporal Pareto condition at a portfolio's implied
/// consumption: `beta v'(c_w) = d v'(c_0)` state by state. Requires the
/// agent to hold the ket's rational beliefs and the prices to match the
/// discounted expected payoffs. The pointwise condition needs the constant
/// vector inside the payoff span; the weighted form is plain first-order
/// optimality and is reported alongside.
pub fn check_pareto_condition(
    agent: &InvestorSpec,
    portfolio: &Portfolio,
    securities: &SecuritySet,
    prices: &MarketPrices,
    q: &JointKet,
    d: f64,
    tol: f64,
) -> SecuritiesResult<ParetoConditionReport> {
    let n = securities.num_states();
    if portfolio.implied_consumption.len() != n || agent.beliefs.len() != n {
        return Err(SecuritiesError::DimensionMismatch(
            "portfolio, beliefs, and securities must agree on the state count".into(),
        ));
    }
    let rational = rational_beliefs(q, d)?;
    if rational.len() != n {
        return Err(SecuritiesError::DimensionMismatch(format!(
            "ket carries {} outcomes for {n} states",
            rational.len()
        )));
    }
    let belief_gap = agent
        .beliefs
        .weights()
        .iter()
        .zip(rational.weights())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if belief_gap > CONSTRUCTION_TOL {
        return Err(SecuritiesError::PreconditionViolation(format!(
            "agent beliefs deviate from the ket's rational beliefs by {belief_gap}"
        )));
    }
    for (j, sec) in securities.securities.iter().enumerate() {
        let pv = price_security(sec, q, d)?;
        let gap = (prices.prices()[j] - pv).abs();
        if gap > CONSTRUCTION_TOL * (1.0 + pv.abs()) {
            return Err(SecuritiesError::PreconditionViolation(format!(
                "price of security {j} deviates from its discounted expected payoff by {gap}"
            )));
        }
    }

    let u = &agent.utility;
    let v0 = u.v_prime(portfolio.c0)?;
    let target = d * v0;
    let mut state_residuals = vec![0.0; n];
    let mut excluded_states = Vec::new();
    let mut max_residual = 0.0f64;
    for w in 0..n {
        if rational.weights()[w] == 0.0 {
            excluded_states.push(w);
            continue;
        }
        let gap = u.beta() * u.v_prime(portfolio.implied_consumption[w])? - target;
        state_residuals[w] = gap;
        max_residual = max_residual.max(gap.abs() / (1.0 + target.abs()));
    }

    let mut weighted_residuals = Vec::with_capacity(securities.num_securities());
    let mut weighted_max = 0.0f64;
    for sec in &securities.securities {
        let mut num = 0.0;
        let mut scale = 0.0;
        for w in 0..n {
            let bel = rational.weights()[w];
            if bel > 0.0 {
                num += bel * sec.payoffs[w] * state_residuals[w];
                scale += bel * sec.payoffs[w].abs();
            }
        }
        let r = num.abs() / (1.0 + target.abs() * scale);
        weighted_residuals.push(r);
        weighted_max = weighted_max.max(r);
    }

    Ok(ParetoConditionReport {
        ok: max_residual <= tol,
        max_residual,
        state_residuals,
        weighted_residuals,
        weighted_max,
        excluded_states,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{profile_to_ket, solve_support_enum, MixedProfile};
    use crate::game::{present_value, Normalization, PlayerDef, PriceKet};
    use crate::lottery::{entangle, trace_out_game};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn equilibrium_ket() -> PriceKet {
        let spec = GameSpec::two_company();
        let report = solve_support_enum(&spec).unwrap();
        report.equilibria[0].ket.clone()
    }

    fn rational_belief_vector() -> BeliefVector {
        BeliefVector::new(vec![5.0 / 32.0, 11.0 / 32.0, 5.0 / 32.0, 11.0 / 32.0]).unwrap()
    }

    fn log_investor(e0: f64, w: Vec<f64>) -> InvestorSpec {
        InvestorSpec {
            utility: UtilitySpec::new(1.0, 1.0).unwrap(),
            beliefs: rational_belief_vector(),
            endowment_c0: e0,
            endowment_holdings: w,
        }
    }

    #[test]
    fn securitized_positions_repeat_the_payoff_rows() {
        let spec = GameSpec::two_company();
        let set = securitize(&spec, 1.0).unwrap();
        assert_eq!(set.num_securities(), 2);
        assert_eq!(set.securities()[0].payoffs, vec![2.0, 1.5, 1.5, 2.0]);
        assert_eq!(set.securities()[1].payoffs, vec![1.4, 2.5, 2.5, 2.0]);
        assert_eq!(
            set.securities()[0].provenance,
            Some(GamePosition { player: 0, theta: 1.0 })
        );

        let scaled = securitize(&spec, 0.1).unwrap();
        for (s, t) in set.securities().iter().zip(scaled.securities()) {
            for (a, b) in s.payoffs.iter().zip(&t.payoffs) {
                assert!((0.1 * a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn expected_payoff_under_the_equilibrium_density() {
        let joint = entangle(&equilibrium_ket());
        let rho = trace_out_game(&joint).unwrap();
        let set = securitize(&GameSpec::two_company(), 1.0).unwrap();
        let ea = security_expected_payoff(&rho, &set.securities()[0]).unwrap();
        let eb = security_expected_payoff(&rho, &set.securities()[1]).unwrap();
        assert!((ea - 1.75).abs() < 1e-12);
        assert!((eb - 2.15625).abs() < 1e-12);

        let zero = Security::new("null", vec![0.0; 4]);
        assert_eq!(security_expected_payoff(&rho, &zero).unwrap(), 0.0);

        let short = Security::new("short", vec![1.0; 3]);
        assert!(matches!(
            security_expected_payoff(&rho, &short),
            Err(SecuritiesError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn expected_payoff_matches_a_loop_oracle() {
        let amps: Vec<Complex64> = [0.3f64, 0.1, 0.35, 0.25]
            .iter()
            .map(|p| Complex64::new(p.sqrt(), 0.0))
            .collect();
        let joint = entangle(&PriceKet::future_value(amps).unwrap());
        let rho = trace_out_game(&joint).unwrap();
        let sec = Security::new("x", vec![1.7, -0.4, 2.2, 0.9]);
        let expected: f64 = [0.3, 0.1, 0.35, 0.25]
            .iter()
            .zip(&sec.payoffs)
            .map(|(p, x)| p * x)
            .sum();
        let got = security_expected_payoff(&rho, &sec).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_prices_equal_present_values() {
        let spec = GameSpec::two_company();
        let ket = equilibrium_ket();
        let joint = entangle(&ket);
        let set = securitize(&spec, 1.0).unwrap();
        let sa = price_security(&set.securities()[0], &joint, 1.0).unwrap();
        let sb = price_security(&set.securities()[1], &joint, 1.0).unwrap();
        assert!((sa - 1.75).abs() < 1e-12);
        assert!((sb - 2.15625).abs() < 1e-12);

        // A scaled position prices at the scaled present value.
        let theta = 0.25;
        let scaled = securitize(&spec, theta).unwrap();
        for player in 0..2 {
            let s = price_security(&scaled.securities()[player], &joint, 1.0).unwrap();
            let pv =
                present_value(&ket, &spec.payoff_operator(player).unwrap(), spec.discount())
                    .unwrap();
            assert!((s - theta * pv).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_bond_prices_at_the_discount() {
        let d: f64 = 0.8;
        let scale = (d / 4.0).sqrt();
        let amps = vec![Complex64::new(scale, 0.0); 4];
        let joint = entangle(&PriceKet::raw(amps, d).unwrap());
        let bond = Security::new("bond", vec![1.0; 4]);
        let price = price_security(&bond, &joint, d).unwrap();
        assert!((price - d).abs() < 1e-12);
    }

    #[test]
    fn pricing_is_linear_in_the_payoffs() {
        let joint = entangle(&equilibrium_ket());
        let x = Security::new("x", vec![1.0, 2.0, 3.0, 4.0]);
        let y = Security::new("y", vec![-0.5, 0.0, 1.5, 2.5]);
        let combo = Security::new(
            "combo",
            x.payoffs
                .iter()
                .zip(&y.payoffs)
                .map(|(a, b)| 2.0 * a - 3.0 * b)
                .collect(),
        );
        let sx = price_security(&x, &joint, 1.0).unwrap();
        let sy = price_security(&y, &joint, 1.0).unwrap();
        let sc = price_security(&combo, &joint, 1.0).unwrap();
        assert!((sc - (2.0 * sx - 3.0 * sy)).abs() < 1e-12);
    }

    #[test]
    fn discounting_scales_prices_linearly() {
        let future: Vec<Complex64> = [0.3f64, 0.1, 0.35, 0.25]
            .iter()
            .map(|p| Complex64::new(p.sqrt(), 0.0))
            .collect();
        let sec = Security::new("x", vec![1.7, 0.4, 2.2, 0.9]);

        let at_one = price_security(
            &sec,
            &entangle(&PriceKet::future_value(future.clone()).unwrap()),
            1.0,
        )
        .unwrap();
        let d: f64 = 0.9;
        let raw: Vec<Complex64> = future.iter().map(|a| a * d.sqrt()).collect();
        let at_d = price_security(&sec, &entangle(&PriceKet::raw(raw, d).unwrap()), d).unwrap();
        assert!((at_d - d * at_one).abs() < 1e-12);
    }

    #[test]
    fn completeness_counts_independent_payoff_directions() {
        let set = securitize(&GameSpec::two_company(), 1.0).unwrap();
        let report = market_completeness(&set);
        assert_eq!(report.rank, 2);
        assert_eq!(report.num_states, 4);
        assert!(!report.complete);

        // Duplicating a security row leaves the rank unchanged.
        let mut dup = set.securities().to_vec();
        dup.push(set.securities()[0].clone());
        let report = market_completeness(&SecuritySet::new(dup).unwrap());
        assert_eq!(report.rank, 2);

        let arrow: Vec<Security> = (0..4)
            .map(|w| {
                let mut payoffs = vec![0.0; 4];
                payoffs[w] = 1.0;
                Security::new(format!("ad{w}"), payoffs)
            })
            .collect();
        let report = market_completeness(&SecuritySet::new(arrow).unwrap());
        assert_eq!(report.rank, 4);
        assert!(report.complete);
    }

    #[test]
    fn unit_bond_saving_matches_the_closed_form() {
        let d = 0.8;
        let beta = 0.9;
        let bond = SecuritySet::new(vec![Security::new("bond", vec![1.0; 3])]).unwrap();
        let prices = MarketPrices::new(vec![d]).unwrap();
        let agent = InvestorSpec {
            utility: UtilitySpec::new(1.0, beta).unwrap(),
            beliefs: BeliefVector::new(vec![1.0 / 3.0; 3]).unwrap(),
            endowment_c0: 2.0,
            endowment_holdings: vec![0.0],
        };
        let portfolio = solve_portfolio(&agent, &bond, &prices).unwrap();
        // One-variable calculus: s = beta W / (d (1 + beta)), c0 = W / (1 + beta).
        let w = 2.0;
        assert!((portfolio.holdings[0] - beta * w / (d * (1.0 + beta))).abs() < 1e-8);
        assert!((portfolio.c0 - w / (1.0 + beta)).abs() < 1e-8);
        let residuals = portfolio_foc_residuals(&agent, &bond, &prices, &portfolio).unwrap();
        assert!(residuals.iter().all(|r| *r <= 1e-8));
    }

    #[test]
    fn self_justifying_prices_induce_zero_trade() {
        // Prices are reverse-engineered so the endowment already satisfies
        // the first-order conditions; the optimum must be no trade.
        let u = UtilitySpec::new(2.0, 0.9).unwrap();
        let beliefs = BeliefVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        let set = SecuritySet::new(vec![
            Security::new("a", vec![1.0, 2.0, 0.5]),
            Security::new("b", vec![0.8, 0.3, 2.1]),
        ])
        .unwrap();
        let w = [1.0, 0.5];
        let e0 = 1.5;
        let c_star: Vec<f64> = (0..3)
            .map(|s| w[0] * set.securities()[0].payoffs[s] + w[1] * set.securities()[1].payoffs[s])
            .collect();
        let v0 = u.v_prime(e0).unwrap();
        let price = |payoffs: &[f64]| -> f64 {
            beliefs
                .weights()
                .iter()
                .zip(payoffs)
                .zip(&c_star)
                .map(|((b, x), cs)| b * u.beta() * u.v_prime(*cs).unwrap() * x / v0)
                .sum()
        };
        let prices = MarketPrices::new(vec![
            price(&set.securities()[0].payoffs),
            price(&set.securities()[1].payoffs),
        ])
        .unwrap();
        let agent = InvestorSpec {
            utility: u,
            beliefs,
            endowment_c0: e0,
            endowment_holdings: w.to_vec(),
        };
        let portfolio = solve_portfolio(&agent, &set, &prices).unwrap();
        assert!((portfolio.holdings[0] - w[0]).abs() < 1e-8);
        assert!((portfolio.holdings[1] - w[1]).abs() < 1e-8);
        assert!((portfolio.c0 - e0).abs() < 1e-8);
    }

    #[test]
    fn zero_payoff_securities_must_be_free() {
        let set = SecuritySet::new(vec![
            Security::new("real", vec![1.0, 2.0]),
            Security::new("empty", vec![0.0, 0.0]),
        ])
        .unwrap();
        let prices = MarketPrices::new(vec![1.0, 0.3]).unwrap();
        let agent = InvestorSpec {
            utility: UtilitySpec::new(1.0, 1.0).unwrap(),
            beliefs: BeliefVector::new(vec![0.5, 0.5]).unwrap(),
            endowment_c0: 1.0,
            endowment_holdings: vec![0.0, 0.0],
        };
        assert!(matches!(
            solve_portfolio(&agent, &set, &prices),
            Err(SecuritiesError::ArbitragePrice { index: 1, .. })
        ));
    }

    #[test]
    fn non_positive_wealth_is_rejected() {
        let set = SecuritySet::new(vec![Security::new("a", vec![1.0, 1.0])]).unwrap();
        let prices = MarketPrices::new(vec![0.9]).unwrap();
        let agent = InvestorSpec {
            utility: UtilitySpec::new(1.0, 1.0).unwrap(),
            beliefs: BeliefVector::new(vec![0.5, 0.5]).unwrap(),
            endowment_c0: -1.0,
            endowment_holdings: vec![0.0],
        };
        assert!(matches!(
            solve_portfolio(&agent, &set, &prices),
            Err(SecuritiesError::InfeasibleBudget { .. })
        ));
    }

    fn two_company_market() -> (SecuritySet, MarketPrices, JointKet) {
        let spec = GameSpec::two_company();
        let set = securitize(&spec, 1.0).unwrap();
        let joint = entangle(&equilibrium_ket());
        let prices = pv_prices(&set, &joint, 1.0).unwrap();
        (set, prices, joint)
    }

    #[test]
    fn securitized_market_optimum_matches_frozen_values() {
        let (set, prices, joint) = two_company_market();
        assert!((prices.prices()[0] - 1.75).abs() < 1e-12);
        assert!((prices.prices()[1] - 2.15625).abs() < 1e-12);

        let agent = log_investor(1.0, vec![1.0, 1.0]);
        let portfolio = solve_portfolio(&agent, &set, &prices).unwrap();

        // Wealth 1 + 1.75 + 2.15625; log utility with unit time weight
        // spends exactly half at time 0.
        assert!((portfolio.c0 - 4.90625 / 2.0).abs() < 1e-9);
        assert!((portfolio.holdings[0] - 0.80215429).abs() < 1e-6);
        assert!((portfolio.holdings[1] - 0.48665738).abs() < 1e-6);
        let frozen_c = [2.28562891, 2.41987488, 2.41987488, 2.57762334];
        for (got, want) in portfolio.implied_consumption.iter().zip(frozen_c) {
            assert!((got - want).abs() < 1e-6);
        }

        let budget_gap = (portfolio.c0
            + portfolio
                .holdings
                .iter()
                .zip(prices.prices())
                .map(|(s, p)| s * p)
                .sum::<f64>()
            - 4.90625)
            .abs();
        assert!(budget_gap < 1e-10);

        let report =
            check_pareto_condition(&agent, &portfolio, &set, &prices, &joint, 1.0, 1e-6).unwrap();
        // The constant vector is outside the two-security payoff span, so
        // the pointwise condition fails with a finite gap while the
        // weighted condition holds to solver precision.
        assert!(!report.ok);
        let frozen_gaps = [0.02987303, 0.0056012, 0.0056012, -0.01968903];
        for (got, want) in report.state_residuals.iter().zip(frozen_gaps) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
        assert!(report.weighted_max <= 1e-8);
        assert!(report.excluded_states.is_empty());
    }

    #[test]
    fn portfolio_optimum_is_a_local_maximum() {
        let (set, prices, _) = two_company_market();
        let agent = log_investor(1.0, vec![1.0, 1.0]);
        let portfolio = solve_portfolio(&agent, &set, &prices).unwrap();

        let wealth = 4.90625;
        let objective = |s: &[f64]| -> f64 {
            let c0 = wealth - s.iter().zip(prices.prices()).map(|(a, b)| a * b).sum::<f64>();
            let mut total = c0.ln();
            for w in 0..4 {
                let cw: f64 = s
                    .iter()
                    .zip(set.securities())
                    .map(|(h, sec)| h * sec.payoffs[w])
                    .sum();
                total += agent.beliefs.weights()[w] * cw.ln();
            }
            total
        };
        let base = objective(&portfolio.holdings);
        for j in 0..2 {
            for sign in [-1.0, 1.0] {
                let mut bumped = portfolio.holdings.clone();
                bumped[j] += sign * 1e-3;
                assert!(objective(&bumped) <= base + 1e-12);
            }
        }
    }

    #[test]
    fn complete_market_satisfies_the_pointwise_condition() {
        // Four unit securities at squared-amplitude prices replicate the
        // state-price economy; the pointwise condition then coincides with
        // first-order optimality and holds exactly.
        let joint = entangle(&equilibrium_ket());
        let bel = rational_belief_vector();
        let arrow: Vec<Security> = (0..4)
            .map(|w| {
                let mut payoffs = vec![0.0; 4];
                payoffs[w] = 1.0;
                Security::new(format!("ad{w}"), payoffs)
            })
            .collect();
        let set = SecuritySet::new(arrow).unwrap();
        let prices = pv_prices(&set, &joint, 1.0).unwrap();
        for (p, b) in prices.prices().iter().zip(bel.weights()) {
            assert!((p - b).abs() < 1e-12);
        }
        assert!(market_completeness(&set).complete);

        let agent = log_investor(2.0, vec![0.5, 0.5, 0.5, 0.5]);
        let portfolio = solve_portfolio(&agent, &set, &prices).unwrap();
        let report =
            check_pareto_condition(&agent, &portfolio, &set, &prices, &joint, 1.0, 1e-6).unwrap();
        assert!(report.ok, "max residual {}", report.max_residual);
        assert!(report.max_residual <= 1e-8);
    }

    #[test]
    fn pareto_check_rejects_foreign_beliefs_and_prices() {
        let (set, prices, joint) = two_company_market();
        let mut agent = log_investor(1.0, vec![1.0, 1.0]);
        let portfolio = solve_portfolio(&agent, &set, &prices).unwrap();

        agent.beliefs = BeliefVector::new(vec![0.25; 4]).unwrap();
        assert!(matches!(
            check_pareto_condition(&agent, &portfolio, &set, &prices, &joint, 1.0, 1e-6),
            Err(SecuritiesError::PreconditionViolation(_))
        ));

        let agent = log_investor(1.0, vec![1.0, 1.0]);
        let skewed = MarketPrices::new(vec![1.75 * 1.01, 2.15625]).unwrap();
        assert!(matches!(
            check_pareto_condition(&agent, &portfolio, &set, &skewed, &joint, 1.0, 1e-6),
            Err(SecuritiesError::PreconditionViolation(_))
        ));
    }

    #[test]
    fn single_state_market_reduces_to_a_price_ratio() {
        let joint = entangle(&PriceKet::future_value(vec![Complex64::new(1.0, 0.0)]).unwrap());
        let set = SecuritySet::new(vec![Security::new("claim", vec![2.0])]).unwrap();
        let prices = pv_prices(&set, &joint, 1.0).unwrap();
        assert!((prices.prices()[0] - 2.0).abs() < 1e-12);

        let agent = InvestorSpec {
            utility: UtilitySpec::new(1.0, 1.0).unwrap(),
            beliefs: BeliefVector::new(vec![1.0]).unwrap(),
            endowment_c0: 2.0,
            endowment_holdings: vec![0.5],
        };
        let portfolio = solve_portfolio(&agent, &set, &prices).unwrap();
        let report =
            check_pareto_condition(&agent, &portfolio, &set, &prices, &joint, 1.0, 1e-6).unwrap();
        assert!(report.ok);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn random_securitized_markets_satisfy_the_weighted_condition(
            payoffs_a in prop::collection::vec(0.5f64..3.0, 4),
            payoffs_b in prop::collection::vec(0.5f64..3.0, 4),
            e0 in 0.5f64..2.0,
        ) {
            let players = vec![
                PlayerDef { name: "p0".into(), strategies: vec!["a".into(), "b".into()] },
                PlayerDef { name: "p1".into(), strategies: vec!["a".into(), "b".into()] },
            ];
            let spec = GameSpec::new(
                players,
                vec![payoffs_a.clone(), payoffs_b.clone()],
                1.0,
            ).unwrap();
            let report = solve_support_enum(&spec).unwrap();
            prop_assume!(!report.equilibria.is_empty());
            let eq = &report.equilibria[0];

            let joint = entangle(&eq.ket);
            let beliefs = rational_beliefs(&joint, 1.0).unwrap();
            let set = securitize(&spec, 1.0).unwrap();
            let prices = pv_prices(&set, &joint, 1.0).unwrap();

            let agent = InvestorSpec {
                utility: UtilitySpec::new(1.0, 1.0).unwrap(),
                beliefs,
                endowment_c0: e0,
                endowment_holdings: vec![0.3, 0.4],
            };
            let portfolio = solve_portfolio(&agent, &set, &prices).unwrap();
            let wealth = e0 + 0.3 * prices.prices()[0] + 0.4 * prices.prices()[1];
            let spent = portfolio.c0 + portfolio.holdings.iter()
                .zip(prices.prices()).map(|(s, p)| s * p).sum::<f64>();
            prop_assert!((spent - wealth).abs() <= 1e-10);

            let report = check_pareto_condition(
                &agent, &portfolio, &set, &prices, &joint, 1.0, 1e-6,
            ).unwrap();
            prop_assert!(report.weighted_max <= 1e-6);
        }
    }

    // Keeps the equilibrium ket construction honest: the profile
    // (5/16, 11/16) x (1/2, 1/2) must reproduce the stored ket.
    #[test]
    fn equilibrium_ket_matches_the_profile_construction() {
        let spec = GameSpec::two_company();
        let profile =
            MixedProfile::new(vec![vec![5.0 / 16.0, 11.0 / 16.0], vec![0.5, 0.5]]).unwrap();
        let ket = profile_to_ket(spec.space(), &profile).unwrap();
        let stored = equilibrium_ket();
        for (a, b) in ket.amplitudes().iter().zip(stored.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(ket.normalization(), Normalization::FutureValue);
    }
}
