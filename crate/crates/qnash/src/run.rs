//! Subcommand orchestration: wires parsed specifications through the
//! solver pipeline and assembles reports.
//!
//! Every command starts from a game file. `solve` stops at the
//! equilibrium; `lottery` entangles it and reduces both sides; `economy`,
//! `price`, and `portfolio` push the equilibrium prices into the financial
//! layer; `demo` runs the whole chain on one game with a stock economy and
//! investor. Exit code 0 means the pipeline ran, 2 means the inputs were
//! rejected, 3 means a solver could not certify its answer. Diagnostics
//! belong on the error stream, the report on standard output.

use crate::economy::{
    check_mrs_equality, check_quantum_price_conditions, foc_residuals, solve_pareto, AgentSpec,
    EconomyError, EconomySpec, UtilitySpec,
};
use crate::equilibrium::{
    solve_iterative, solve_support_enum, EquilibriumResult, IterativeConfig, SolveMethod,
};
use crate::game::{GameSpec, PriceKet};
use crate::input::{load_economy, load_game, load_securities, InputError};
use crate::lottery::{
    apply_lottery_operator, entangle, rational_beliefs, trace_out_game, trace_out_lottery,
    JointKet,
};
use crate::report::{
    ComplexEntry, EconomyReport, LotteryReport, ParetoSection, PortfolioReport, PriceReport,
    QuantumSection, Report, ReportOptions, ReportResults, SolveReport,
};
use crate::securities::{
    check_pareto_condition, market_completeness, portfolio_foc_residuals, pv_prices, securitize,
    security_expected_payoff, solve_portfolio, InvestorSpec, SecuritiesError, SecuritySet,
};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

/// Rendering target for the report stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Table,
}

/// Solver and check options shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub damping: f64,
    pub restarts: usize,
    pub theta: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, seed: 0, max_iter: 2000, damping: 0.5, restarts: 20, theta: 1.0 }
    }
}

/// One subcommand with its input files.
#[derive(Debug, Clone)]
pub enum Command {
    Solve { game: PathBuf },
    Lottery { game: PathBuf },
    Economy { game: PathBuf, economy: PathBuf },
    Price { game: PathBuf },
    Portfolio {
        game: PathBuf,
        securities: PathBuf,
        gamma: f64,
        beta: f64,
        endowment_c0: f64,
        endowment_holdings: Option<Vec<f64>>,
    },
    Demo { game: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::Lottery { .. } => "lottery",
            Command::Economy { .. } => "economy",
            Command::Price { .. } => "price",
            Command::Portfolio { .. } => "portfolio",
            Command::Demo { .. } => "demo",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub format: OutputFormat,
    pub options: SolverOptions,
}

/// Result of one invocation: the code for the process exit, the report if
/// one was produced, and diagnostics for the error stream.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report: Option<Report>,
    pub diagnostics: Vec<String>,
}

struct Failure {
    exit_code: i32,
    message: String,
}

fn rejected(message: impl Into<String>) -> Failure {
    Failure { exit_code: 2, message: message.into() }
}

fn uncertified(message: impl Into<String>) -> Failure {
    Failure { exit_code: 3, message: message.into() }
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        rejected(e.to_string())
    }
}

impl From<EconomyError> for Failure {
    fn from(e: EconomyError) -> Self {
        match e {
            EconomyError::NoInteriorSolution { .. } => uncertified(e.to_string()),
            _ => rejected(e.to_string()),
        }
    }
}

impl From<SecuritiesError> for Failure {
    fn from(e: SecuritiesError) -> Self {
        match e {
            SecuritiesError::NoInteriorOptimum { .. } => uncertified(e.to_string()),
            _ => rejected(e.to_string()),
        }
    }
}

/// Executes one configured invocation end to end.
pub fn run(config: &RunConfig) -> RunOutcome {
    let started = Instant::now();
    match execute(config) {
        Ok((results, inputs, residuals, diagnostics, certified)) => {
            let report = Report {
                version: env!("CARGO_PKG_VERSION").to_string(),
                command: config.command.name().to_string(),
                inputs,
                options: ReportOptions {
                    tol: config.options.tol,
                    seed: config.options.seed,
                    max_iter: config.options.max_iter,
                    damping: config.options.damping,
                    restarts: config.options.restarts,
                    theta: config.options.theta,
                },
                results,
                residuals,
                timing_ms: Some(started.elapsed().as_secs_f64() * 1e3),
            };
            RunOutcome {
                exit_code: if certified { 0 } else { 3 },
                report: Some(report),
                diagnostics,
            }
        }
        Err(failure) => RunOutcome {
            exit_code: failure.exit_code,
            report: None,
            diagnostics: vec![failure.message],
        },
    }
}

type Executed = (
    ReportResults,
    BTreeMap<String, String>,
    BTreeMap<String, f64>,
    Vec<String>,
    bool,
);

fn execute(config: &RunConfig) -> Result<Executed, Failure> {
    let opts = &config.options;
    let mut inputs = BTreeMap::new();
    let mut residuals = BTreeMap::new();
    let mut diagnostics = Vec::new();

    match &config.command {
        Command::Solve { game } => {
            inputs.insert("game".to_string(), game.display().to_string());
            let spec = load_game(game)?;
            let eq = solve_equilibrium(&spec, opts)?;
            if !eq.certified {
                diagnostics.push(format!(
                    "equilibrium not certified within the restart budget; best deviation gain {}",
                    eq.epsilon
                ));
            }
            residuals.insert("equilibrium_epsilon".to_string(), eq.epsilon);
            let certified = eq.certified;
            let results = ReportResults::Solve(solve_section(&spec, &eq));
            Ok((results, inputs, residuals, diagnostics, certified))
        }
        Command::Lottery { game } => {
            inputs.insert("game".to_string(), game.display().to_string());
            let spec = load_game(game)?;
            let eq = certified_equilibrium(&spec, opts)?;
            let section = lottery_section(&eq, &mut residuals)?;
            residuals.insert("equilibrium_epsilon".to_string(), eq.epsilon);
            Ok((ReportResults::Lottery(section), inputs, residuals, diagnostics, true))
        }
        Command::Economy { game, economy } => {
            inputs.insert("game".to_string(), game.display().to_string());
            inputs.insert("economy".to_string(), economy.display().to_string());
            let spec = load_game(game)?;
            let economy_input = load_economy(economy)?;
            let eq = certified_equilibrium(&spec, opts)?;
            let (joint, d) = raw_joint(&eq, spec.discount())?;
            let rational =
                rational_beliefs(&joint, d).map_err(|e| rejected(e.to_string()))?;
            let economy_spec = economy_input.resolve(Some(&rational))?;
            let section =
                economy_section(&economy_spec, &joint, d, opts.tol, &mut residuals, &mut diagnostics)?;
            residuals.insert("equilibrium_epsilon".to_string(), eq.epsilon);
            Ok((ReportResults::Economy(section), inputs, residuals, diagnostics, true))
        }
        Command::Price { game } => {
            inputs.insert("game".to_string(), game.display().to_string());
            let spec = load_game(game)?;
            let eq = certified_equilibrium(&spec, opts)?;
            let (joint, d) = raw_joint(&eq, spec.discount())?;
            let set = securitize(&spec, opts.theta)?;
            let section = price_section(&set, &joint, d, &mut residuals)?;
            residuals.insert("equilibrium_epsilon".to_string(), eq.epsilon);
            Ok((ReportResults::Price(section), inputs, residuals, diagnostics, true))
        }
        Command::Portfolio { game, securities, gamma, beta, endowment_c0, endowment_holdings } => {
            inputs.insert("game".to_string(), game.display().to_string());
            inputs.insert("securities".to_string(), securities.display().to_string());
            let spec = load_game(game)?;
            let securities_input = load_securities(securities)?;
            let eq = certified_equilibrium(&spec, opts)?;
            let (joint, d) = raw_joint(&eq, spec.discount())?;
            let set = securities_input.resolve_securities(Some(&spec))?;
            let prices = securities_input.resolve_prices(&set, Some((&joint, d)))?;
            let beliefs = rational_beliefs(&joint, d).map_err(|e| rejected(e.to_string()))?;
            let utility =
                UtilitySpec::new(*gamma, *beta).map_err(|e| rejected(e.to_string()))?;
            let holdings = endowment_holdings
                .clone()
                .unwrap_or_else(|| vec![1.0; set.num_securities()]);
            let investor = InvestorSpec {
                utility,
                beliefs,
                endowment_c0: *endowment_c0,
                endowment_holdings: holdings,
            };
            let section = portfolio_section(
                &investor,
                &set,
                &prices,
                &joint,
                d,
                opts.tol,
                &mut residuals,
                &mut diagnostics,
            )?;
            residuals.insert("equilibrium_epsilon".to_string(), eq.epsilon);
            Ok((ReportResults::Portfolio(section), inputs, residuals, diagnostics, true))
        }
        Command::Demo { game } => {
            inputs.insert("game".to_string(), game.display().to_string());
            let spec = load_game(game)?;
            let eq = certified_equilibrium(&spec, opts)?;
            residuals.insert("equilibrium_epsilon".to_string(), eq.epsilon);

            let solve = solve_section(&spec, &eq);
            let lottery = lottery_section(&eq, &mut residuals)?;
            let (joint, d) = raw_joint(&eq, spec.discount())?;
            let rational =
                rational_beliefs(&joint, d).map_err(|e| rejected(e.to_string()))?;

            let set = securitize(&spec, opts.theta)?;
            let price = price_section(&set, &joint, d, &mut residuals)?;

            // Stock two-agent economy compatible with the amplitude-price
            // conditions: log utility, unit time weight, and state
            // aggregates scaled by 1/d so the marginal condition is
            // satisfiable.
            let economy_spec = EconomySpec::new(
                vec![
                    AgentSpec {
                        utility: UtilitySpec::new(1.0, 1.0).map_err(|e| rejected(e.to_string()))?,
                        lambda: 1.0,
                        beliefs: rational.clone(),
                    },
                    AgentSpec {
                        utility: UtilitySpec::new(1.0, 1.0).map_err(|e| rejected(e.to_string()))?,
                        lambda: 2.0,
                        beliefs: rational.clone(),
                    },
                ],
                4.0,
                vec![4.0 / d; spec.num_paths()],
            )?;
            let economy = economy_section(
                &economy_spec,
                &joint,
                d,
                opts.tol,
                &mut residuals,
                &mut diagnostics,
            )?;

            let prices = pv_prices(&set, &joint, d)?;
            let investor = InvestorSpec {
                utility: UtilitySpec::new(1.0, 1.0).map_err(|e| rejected(e.to_string()))?,
                beliefs: rational,
                endowment_c0: 1.0,
                endowment_holdings: vec![1.0; set.num_securities()],
            };
            let portfolio = portfolio_section(
                &investor,
                &set,
                &prices,
                &joint,
                d,
                1e-6,
                &mut residuals,
                &mut diagnostics,
            )?;

            let results = ReportResults::Demo(Box::new(crate::report::DemoReport {
                solve,
                lottery,
                price,
                economy,
                portfolio,
            }));
            Ok((results, inputs, residuals, diagnostics, true))
        }
    }
}

/// Picks the equilibrium the pipeline runs on: exact support enumeration
/// for bimatrix games within its size cap, the damped iteration otherwise.
/// Deterministic for a fixed seed.
fn solve_equilibrium(spec: &GameSpec, opts: &SolverOptions) -> Result<EquilibriumResult, Failure> {
    if spec.num_players() == 2 && spec.space().dims().iter().all(|d| *d <= 16) {
        match solve_support_enum(spec) {
            Ok(report) if !report.equilibria.is_empty() => {
                return Ok(report.equilibria[0].clone());
            }
            Ok(_) => {}
            Err(e) => return Err(rejected(e.to_string())),
        }
    }
    let config = IterativeConfig {
        max_iter: opts.max_iter,
        damping: opts.damping,
        restarts: opts.restarts,
        tol: opts.tol,
        seed: opts.seed,
    };
    let outcome = solve_iterative(spec, &config).map_err(|e| rejected(e.to_string()))?;
    Ok(outcome.result)
}

fn certified_equilibrium(
    spec: &GameSpec,
    opts: &SolverOptions,
) -> Result<EquilibriumResult, Failure> {
    let eq = solve_equilibrium(spec, opts)?;
    if !eq.certified {
        return Err(uncertified(format!(
            "equilibrium not certified within the restart budget; best deviation gain {}",
            eq.epsilon
        )));
    }
    Ok(eq)
}

/// Rescales the capitalized equilibrium ket to its raw form under the
/// game's discount, then entangles it with the lottery.
fn raw_joint(eq: &EquilibriumResult, d: f64) -> Result<(JointKet, f64), Failure> {
    let scaled: Vec<_> = eq.ket.amplitudes().iter().map(|a| a * d.sqrt()).collect();
    let raw = PriceKet::raw(scaled, d).map_err(|e| rejected(e.to_string()))?;
    Ok((entangle(&raw), d))
}

fn solve_section(spec: &GameSpec, eq: &EquilibriumResult) -> SolveReport {
    SolveReport {
        players: spec.players().iter().map(|p| p.name.clone()).collect(),
        weights: eq.profile.weights.clone(),
        ket: eq
            .ket
            .amplitudes()
            .iter()
            .map(|a| ComplexEntry { re: a.re, im: a.im })
            .collect(),
        present_values: eq.pv.clone(),
        epsilon: eq.epsilon,
        method: match eq.method {
            SolveMethod::SupportEnum => "support_enumeration".to_string(),
            SolveMethod::Iterative => "iterative".to_string(),
        },
        iterations: eq.iterations,
        certified: eq.certified,
    }
}

fn lottery_section(
    eq: &EquilibriumResult,
    residuals: &mut BTreeMap<String, f64>,
) -> Result<LotteryReport, Failure> {
    let joint = entangle(&eq.ket);
    let (projected, surviving_mass) = apply_lottery_operator(&joint);
    let projected = projected.renormalized().map_err(|e| rejected(e.to_string()))?;
    let game = trace_out_game(&projected).map_err(|e| rejected(e.to_string()))?;
    let lottery = trace_out_lottery(&projected).map_err(|e| rejected(e.to_string()))?;
    let beliefs = rational_beliefs(&projected, 1.0).map_err(|e| rejected(e.to_string()))?;

    residuals.insert("trace_gap_game".to_string(), (game.trace() - 1.0).abs());
    residuals.insert("trace_gap_lottery".to_string(), (lottery.trace() - 1.0).abs());
    residuals.insert(
        "belief_sum_gap".to_string(),
        (beliefs.weights().iter().sum::<f64>() - 1.0).abs(),
    );

    Ok(LotteryReport {
        surviving_mass,
        entangled_diagonal: projected.is_entangled_diagonal(),
        game_diagonal: game.diagonal(),
        lottery_diagonal: lottery.diagonal(),
        spectrum: game.spectrum(),
        beliefs: beliefs.weights().to_vec(),
    })
}

fn economy_section(
    economy: &EconomySpec,
    joint: &JointKet,
    d: f64,
    tol: f64,
    residuals: &mut BTreeMap<String, f64>,
    diagnostics: &mut Vec<String>,
) -> Result<EconomyReport, Failure> {
    let allocation = solve_pareto(economy)?;
    let foc = foc_residuals(economy, &allocation)?;
    let mrs = check_mrs_equality(economy, &allocation, tol)?;
    residuals.insert("foc_max".to_string(), foc.max_foc);
    residuals.insert("feasibility_max".to_string(), foc.max_feasibility);
    residuals.insert("mrs_max_deviation".to_string(), mrs.max_deviation);

    let quantum = match check_quantum_price_conditions(economy, &allocation, joint, d, tol) {
        Ok(report) => {
            residuals.insert("quantum_price_residual".to_string(), report.price_residual_max);
            residuals
                .insert("quantum_marginal_residual".to_string(), report.marginal_residual_max);
            Some(QuantumSection {
                ok: report.ok,
                price_residual: report.price_residual_max,
                marginal_residual: report.marginal_residual_max,
                excluded_states: report.excluded_states,
            })
        }
        Err(EconomyError::BeliefMismatch { agent, deviation, .. }) => {
            diagnostics.push(format!(
                "amplitude-price check skipped: agent {agent} beliefs deviate from rational by {deviation:.3e}"
            ));
            None
        }
        Err(e) => return Err(e.into()),
    };

    Ok(EconomyReport {
        c0: allocation.c0.clone(),
        c: allocation.c.clone(),
        state_prices: allocation.state_prices(),
        multiplier_scale: allocation.phi0,
        degenerate_states: allocation.degenerate_states.clone(),
        max_foc_residual: foc.max_foc,
        max_feasibility_residual: foc.max_feasibility,
        mrs_ok: mrs.ok,
        mrs_max_deviation: mrs.max_deviation,
        quantum,
    })
}

fn price_section(
    set: &SecuritySet,
    joint: &JointKet,
    d: f64,
    residuals: &mut BTreeMap<String, f64>,
) -> Result<PriceReport, Failure> {
    let prices = pv_prices(set, joint, d)?;
    let rho = trace_out_game(joint).map_err(|e| rejected(e.to_string()))?;
    let mut expected = Vec::with_capacity(set.num_securities());
    let mut gap = 0.0f64;
    for (j, security) in set.securities().iter().enumerate() {
        let e = security_expected_payoff(&rho, security)?;
        gap = gap.max((prices.prices()[j] - d * e).abs());
        expected.push(e);
    }
    residuals.insert("price_vs_expected_gap".to_string(), gap);
    let completeness = market_completeness(set);
    Ok(PriceReport {
        names: set.securities().iter().map(|s| s.name.clone()).collect(),
        prices: prices.prices().to_vec(),
        expected_payoffs: expected,
        rank: completeness.rank,
        num_states: completeness.num_states,
        complete: completeness.complete,
    })
}

#[allow(clippy::too_many_arguments)]
fn portfolio_section(
    investor: &InvestorSpec,
    set: &SecuritySet,
    prices: &crate::securities::MarketPrices,
    joint: &JointKet,
    d: f64,
    tol: f64,
    residuals: &mut BTreeMap<String, f64>,
    diagnostics: &mut Vec<String>,
) -> Result<PortfolioReport, Failure> {
    let portfolio = solve_portfolio(investor, set, prices)?;
    let foc = portfolio_foc_residuals(investor, set, prices, &portfolio)?;
    let wealth = investor.endowment_c0
        + investor
            .endowment_holdings
            .iter()
            .zip(prices.prices())
            .map(|(w, s)| w * s)
            .sum::<f64>();
    let budget_gap = (portfolio.c0
        + portfolio
            .holdings
            .iter()
            .zip(prices.prices())
            .map(|(s, p)| s * p)
            .sum::<f64>()
        - wealth)
        .abs();
    residuals.insert("budget_gap".to_string(), budget_gap);
    residuals.insert(
        "portfolio_foc_max".to_string(),
        foc.iter().copied().fold(0.0, f64::max),
    );

    let pareto = match check_pareto_condition(investor, &portfolio, set, prices, joint, d, tol) {
        Ok(report) => {
            residuals.insert("pareto_max_residual".to_string(), report.max_residual);
            residuals.insert("pareto_weighted_max".to_string(), report.weighted_max);
            if !report.ok {
                diagnostics.push(format!(
                    "pointwise pareto condition fails at {:.3e} (weighted condition at {:.3e})",
                    report.max_residual, report.weighted_max
                ));
            }
            Some(ParetoSection {
                ok: report.ok,
                max_residual: report.max_residual,
                state_residuals: report.state_residuals,
                weighted_max: report.weighted_max,
                excluded_states: report.excluded_states,
            })
        }
        Err(SecuritiesError::PreconditionViolation(reason)) => {
            diagnostics.push(format!("pareto condition skipped: {reason}"));
            None
        }
        Err(e) => return Err(e.into()),
    };

    let completeness = market_completeness(set);
    Ok(PortfolioReport {
        holdings: portfolio.holdings.clone(),
        c0: portfolio.c0,
        implied_consumption: portfolio.implied_consumption.clone(),
        foc_residuals: foc,
        budget_gap,
        rank: completeness.rank,
        complete: completeness.complete,
        pareto,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn fixture(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
        let path = dir.path().join(name);
        let mut file = std::fs::File::create(&path).unwrap();
        file.write_all(text.as_bytes()).unwrap();
        path
    }

    const GAME: &str = r#"{
        "players": [
            {"name": "CompanyA", "strategies": ["tech_0", "tech_1"]},
            {"name": "CompanyB", "strategies": ["tech_0", "tech_1"]}
        ],
        "payoffs": {
            "CompanyA": [2.0, 1.5, 1.5, 2.0],
            "CompanyB": [1.4, 2.5, 2.5, 2.0]
        },
        "discount": 1.0
    }"#;

    fn config(command: Command) -> RunConfig {
        RunConfig { command, format: OutputFormat::Json, options: SolverOptions::default() }
    }

    #[test]
    fn solve_command_reports_the_fixture_equilibrium() {
        let dir = tempfile::tempdir().unwrap();
        let game = fixture(&dir, "game.json", GAME);
        let outcome = run(&config(Command::Solve { game }));
        assert_eq!(outcome.exit_code, 0);
        let report = outcome.report.unwrap();
        let ReportResults::Solve(solve) = &report.results else {
            panic!("expected solve results");
        };
        assert!((solve.weights[0][0] - 0.3125).abs() < 1e-9);
        assert!((solve.weights[1][0] - 0.5).abs() < 1e-9);
        assert!((solve.present_values[0] - 1.75).abs() < 1e-9);
        assert!((solve.present_values[1] - 2.15625).abs() < 1e-9);
        assert!(solve.certified);
        assert_eq!(report.command, "solve");
    }

    #[test]
    fn lottery_command_reports_unit_traces_and_beliefs() {
        let dir = tempfile::tempdir().unwrap();
        let game = fixture(&dir, "game.json", GAME);
        let outcome = run(&config(Command::Lottery { game }));
        assert_eq!(outcome.exit_code, 0);
        let report = outcome.report.unwrap();
        let ReportResults::Lottery(lottery) = &report.results else {
            panic!("expected lottery results");
        };
        assert!((lottery.surviving_mass - 1.0).abs() < 1e-12);
        assert!(lottery.entangled_diagonal);
        let expected = [5.0 / 32.0, 11.0 / 32.0, 5.0 / 32.0, 11.0 / 32.0];
        for (got, want) in lottery.beliefs.iter().zip(expected) {
            assert!((got - want).abs() < 1e-9);
        }
        assert!(report.residuals["trace_gap_game"] < 1e-12);
    }

    #[test]
    fn economy_command_solves_and_checks_conditions() {
        let dir = tempfile::tempdir().unwrap();
        let game = fixture(&dir, "game.json", GAME);
        let economy = fixture(
            &dir,
            "economy.json",
            r#"{
                "agents": [
                    {"gamma": 1.0, "beta": 1.0, "lambda": 1.0, "beliefs": "rational"},
                    {"gamma": 1.0, "beta": 1.0, "lambda": 2.0, "beliefs": "rational"}
                ],
                "aggregate_c0": 4.0,
                "aggregate_c": [4.0, 4.0, 4.0, 4.0]
            }"#,
        );
        let outcome = run(&config(Command::Economy { game, economy }));
        assert_eq!(outcome.exit_code, 0);
        let report = outcome.report.unwrap();
        let ReportResults::Economy(section) = &report.results else {
            panic!("expected economy results");
        };
        assert!((section.c0[0] - 4.0 / 3.0).abs() < 1e-9);
        assert!(section.mrs_ok);
        let quantum = section.quantum.as_ref().unwrap();
        assert!(quantum.ok);
    }

    #[test]
    fn price_command_reports_pv_prices_and_rank() {
        let dir = tempfile::tempdir().unwrap();
        let game = fixture(&dir, "game.json", GAME);
        let outcome = run(&config(Command::Price { game }));
        assert_eq!(outcome.exit_code, 0);
        let report = outcome.report.unwrap();
        let ReportResults::Price(price) = &report.results else {
            panic!("expected price results");
        };
        assert!((price.prices[0] - 1.75).abs() < 1e-12);
        assert!((price.prices[1] - 2.15625).abs() < 1e-12);
        assert_eq!(price.rank, 2);
        assert!(!price.complete);
        assert!(report.residuals["price_vs_expected_gap"] < 1e-12);
    }

    #[test]
    fn portfolio_command_reports_the_incomplete_market_verdict() {
        let dir = tempfile::tempdir().unwrap();
        let game = fixture(&dir, "game.json", GAME);
        let securities = fixture(
            &dir,
            "securities.json",
            r#"{
                "securities": [
                    {"name": "alpha", "game_position": 0, "theta": 1.0},
                    {"name": "beta", "game_position": 1, "theta": 1.0}
                ],
                "prices": "pv"
            }"#,
        );
        let outcome = run(&config(Command::Portfolio {
            game,
            securities,
            gamma: 1.0,
            beta: 1.0,
            endowment_c0: 1.0,
            endowment_holdings: None,
        }));
        assert_eq!(outcome.exit_code, 0);
        let report = outcome.report.unwrap();
        let ReportResults::Portfolio(portfolio) = &report.results else {
            panic!("expected portfolio results");
        };
        assert!((portfolio.c0 - 2.453125).abs() < 1e-9);
        assert!((portfolio.holdings[0] - 0.80215429).abs() < 1e-6);
        assert!(portfolio.budget_gap < 1e-10);
        assert!(!portfolio.complete);
        let pareto = portfolio.pareto.as_ref().unwrap();
        assert!(!pareto.ok);
        assert!(pareto.weighted_max <= 1e-8);
        assert!(!outcome.diagnostics.is_empty());
    }

    #[test]
    fn demo_command_runs_the_whole_pipeline() {
        let dir = tempfile::tempdir().unwrap();
        let game = fixture(&dir, "game.json", GAME);
        let outcome = run(&config(Command::Demo { game }));
        assert_eq!(outcome.exit_code, 0);
        let report = outcome.report.unwrap();
        let ReportResults::Demo(demo) = &report.results else {
            panic!("expected demo results");
        };
        assert!(demo.solve.certified);
        assert!((demo.price.prices[0] - 1.75).abs() < 1e-12);
        assert!(demo.economy.quantum.as_ref().unwrap().ok);
        assert!(!demo.portfolio.pareto.as_ref().unwrap().ok);
    }

    #[test]
    fn validation_failures_exit_with_code_two() {
        let dir = tempfile::tempdir().unwrap();
        let game = fixture(&dir, "game.json", &GAME.replace("1.0", "-1.0"));
        let outcome = run(&config(Command::Solve { game }));
        assert_eq!(outcome.exit_code, 2);
        assert!(outcome.report.is_none());
        assert!(!outcome.diagnostics.is_empty());

        let missing = run(&config(Command::Solve { game: dir.path().join("absent.json") }));
        assert_eq!(missing.exit_code, 2);
    }

    #[test]
    fn reports_are_deterministic_for_a_fixed_seed() {
        let dir = tempfile::tempdir().unwrap();
        let game = fixture(&dir, "game.json", GAME);
        let first = run(&config(Command::Demo { game: game.clone() }));
        let second = run(&config(Command::Demo { game }));
        assert_eq!(
            first.report.unwrap().canonical_json(),
            second.report.unwrap().canonical_json()
        );
    }
}
