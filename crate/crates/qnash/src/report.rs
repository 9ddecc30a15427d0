//! Report structures emitted by the command-line front end.
//!
//! One `Report` is produced per invocation: an echo of the inputs and
//! options, a result payload for the subcommand that ran, a flat map of
//! headline residuals, and wall-clock timing. JSON is the canonical format
//! and round-trips exactly; the aligned-table rendering is derived from it
//! and never parsed back. [`Report::canonical_json`] strips the timing
//! field so that two runs over identical inputs compare byte for byte.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// A complex amplitude split into parts so the JSON stays flat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEntry {
    pub re: f64,
    pub im: f64,
}

/// Solver and check options the run was configured with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub damping: f64,
    pub restarts: usize,
    pub theta: f64,
}

/// Equilibrium of one game: mixed weights, price amplitudes, and values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub players: Vec<String>,
    /// Mixed-strategy weights per player, the diagonals of the pricing
    /// matrices.
    pub weights: Vec<Vec<f64>>,
    /// Equilibrium price ket over game paths, capitalized units.
    pub ket: Vec<ComplexEntry>,
    pub present_values: Vec<f64>,
    pub epsilon: f64,
    pub method: String,
    pub iterations: usize,
    pub certified: bool,
}

/// Lottery entanglement summary: reductions, spectrum, and beliefs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LotteryReport {
    /// Probability mass surviving the lottery projection.
    pub surviving_mass: f64,
    pub entangled_diagonal: bool,
    pub game_diagonal: Vec<f64>,
    pub lottery_diagonal: Vec<f64>,
    /// Eigenvalues of the game reduction, descending.
    pub spectrum: Vec<f64>,
    pub beliefs: Vec<f64>,
}

/// Verdict of the amplitude-price conditions; absent when the agents'
/// beliefs do not match the ket's rational beliefs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumSection {
    pub ok: bool,
    pub price_residual: f64,
    pub marginal_residual: f64,
    pub excluded_states: Vec<usize>,
}

/// Pareto allocation with its optimality checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomyReport {
    pub c0: Vec<f64>,
    pub c: Vec<Vec<f64>>,
    pub state_prices: Vec<f64>,
    pub multiplier_scale: f64,
    pub degenerate_states: Vec<usize>,
    pub max_foc_residual: f64,
    pub max_feasibility_residual: f64,
    pub mrs_ok: bool,
    pub mrs_max_deviation: f64,
    pub quantum: Option<QuantumSection>,
}

/// Security prices, expected payoffs, and market rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceReport {
    pub names: Vec<String>,
    pub prices: Vec<f64>,
    pub expected_payoffs: Vec<f64>,
    pub rank: usize,
    pub num_states: usize,
    pub complete: bool,
}

/// Verdict of the intertemporal Pareto condition; absent when prices or
/// beliefs deviate from the equilibrium construction it presumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoSection {
    pub ok: bool,
    pub max_residual: f64,
    pub state_residuals: Vec<f64>,
    pub weighted_max: f64,
    pub excluded_states: Vec<usize>,
}

/// A solved portfolio with the Pareto-condition verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioReport {
    pub holdings: Vec<f64>,
    pub c0: f64,
    pub implied_consumption: Vec<f64>,
    pub foc_residuals: Vec<f64>,
    pub budget_gap: f64,
    pub rank: usize,
    pub complete: bool,
    pub pareto: Option<ParetoSection>,
}

/// The full pipeline in one pass: equilibrium, entanglement, prices, an
/// allocation, and a portfolio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub solve: SolveReport,
    pub lottery: LotteryReport,
    pub price: PriceReport,
    pub economy: EconomyReport,
    pub portfolio: PortfolioReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportResults {
    Solve(SolveReport),
    Lottery(LotteryReport),
    Economy(EconomyReport),
    Price(PriceReport),
    Portfolio(PortfolioReport),
    Demo(Box<DemoReport>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub command: String,
    /// Input files by role.
    pub inputs: BTreeMap<String, String>,
    pub options: ReportOptions,
    pub results: ReportResults,
    /// Headline residuals, keyed by check name.
    pub residuals: BTreeMap<String, f64>,
    /// Wall-clock time; excluded from the comparison form.
    pub timing_ms: Option<f64>,
}

impl Report {
    /// Pretty JSON including timing, the stream format.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Pretty JSON with timing removed; byte-identical across reruns of the
    /// same inputs and seed.
    pub fn canonical_json(&self) -> String {
        let mut stripped = self.clone();
        stripped.timing_ms = None;
        serde_json::to_string_pretty(&stripped).expect("report serializes")
    }

    /// Aligned text rendering for terminals; derived from the same data,
    /// never parsed back.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "qnash {} :: {}", self.version, self.command);
        for (role, path) in &self.inputs {
            let _ = writeln!(out, "  input {role}: {path}");
        }
        let o = &self.options;
        let _ = writeln!(
            out,
            "  options: tol={} seed={} max_iter={} damping={} restarts={} theta={}",
            o.tol, o.seed, o.max_iter, o.damping, o.restarts, o.theta
        );
        out.push('\n');
        render_results(&mut out, &self.results);
        if !self.residuals.is_empty() {
            let _ = writeln!(out, "residuals");
            for (name, value) in &self.residuals {
                let _ = writeln!(out, "  {name:<32} {value:.3e}");
            }
        }
        if let Some(ms) = self.timing_ms {
            let _ = writeln!(out, "elapsed: {ms:.1} ms");
        }
        out
    }
}

fn fmt_vec(values: &[f64]) -> String {
    let inner: Vec<String> = values.iter().map(|v| format!("{v:.9}")).collect();
    format!("[{}]", inner.join(", "))
}

fn render_results(out: &mut String, results: &ReportResults) {
    match results {
        ReportResults::Solve(r) => render_solve(out, r),
        ReportResults::Lottery(r) => render_lottery(out, r),
        ReportResults::Economy(r) => render_economy(out, r),
        ReportResults::Price(r) => render_price(out, r),
        ReportResults::Portfolio(r) => render_portfolio(out, r),
        ReportResults::Demo(r) => {
            render_solve(out, &r.solve);
            render_lottery(out, &r.lottery);
            render_price(out, &r.price);
            render_economy(out, &r.economy);
            render_portfolio(out, &r.portfolio);
        }
    }
}

fn render_solve(out: &mut String, r: &SolveReport) {
    let _ = writeln!(
        out,
        "equilibrium ({}, {} iterations, epsilon {:.3e}, certified: {})",
        r.method, r.iterations, r.epsilon, r.certified
    );
    for (i, name) in r.players.iter().enumerate() {
        let _ = writeln!(
            out,
            "  {name:<12} weights {}  present value {:.9}",
            fmt_vec(&r.weights[i]),
            r.present_values[i]
        );
    }
    let amps: Vec<String> = r
        .ket
        .iter()
        .map(|a| {
            if a.im == 0.0 {
                format!("{:.9}", a.re)
            } else {
                format!("{:.9}{:+.9}i", a.re, a.im)
            }
        })
        .collect();
    let _ = writeln!(out, "  ket [{}]", amps.join(", "));
    out.push('\n');
}

fn render_lottery(out: &mut String, r: &LotteryReport) {
    let _ = writeln!(
        out,
        "lottery (surviving mass {:.9}, entangled diagonal: {})",
        r.surviving_mass, r.entangled_diagonal
    );
    let _ = writeln!(out, "  game reduction    {}", fmt_vec(&r.game_diagonal));
    let _ = writeln!(out, "  lottery reduction {}", fmt_vec(&r.lottery_diagonal));
    let _ = writeln!(out, "  spectrum          {}", fmt_vec(&r.spectrum));
    let _ = writeln!(out, "  rational beliefs  {}", fmt_vec(&r.beliefs));
    out.push('\n');
}

fn render_economy(out: &mut String, r: &EconomyReport) {
    let _ = writeln!(out, "allocation");
    for (i, row) in r.c.iter().enumerate() {
        let _ = writeln!(out, "  agent {i}: c0 {:.9}  c {}", r.c0[i], fmt_vec(row));
    }
    let _ = writeln!(out, "  state prices {}", fmt_vec(&r.state_prices));
    if !r.degenerate_states.is_empty() {
        let _ = writeln!(out, "  degenerate states {:?}", r.degenerate_states);
    }
    let _ = writeln!(
        out,
        "  first-order {:.3e}  feasibility {:.3e}  mrs {} ({:.3e})",
        r.max_foc_residual,
        r.max_feasibility_residual,
        if r.mrs_ok { "ok" } else { "FAIL" },
        r.mrs_max_deviation
    );
    match &r.quantum {
        Some(q) => {
            let _ = writeln!(
                out,
                "  amplitude prices {} (price {:.3e}, marginal {:.3e})",
                if q.ok { "ok" } else { "FAIL" },
                q.price_residual,
                q.marginal_residual
            );
        }
        None => {
            let _ = writeln!(out, "  amplitude prices not applicable (beliefs are not rational)");
        }
    }
    out.push('\n');
}

fn render_price(out: &mut String, r: &PriceReport) {
    let _ = writeln!(
        out,
        "securities (rank {}/{}, complete: {})",
        r.rank, r.num_states, r.complete
    );
    for (j, name) in r.names.iter().enumerate() {
        let _ = writeln!(
            out,
            "  {name:<12} price {:.9}  expected payoff {:.9}",
            r.prices[j], r.expected_payoffs[j]
        );
    }
    out.push('\n');
}

fn render_portfolio(out: &mut String, r: &PortfolioReport) {
    let _ = writeln!(out, "portfolio (rank {}, complete: {})", r.rank, r.complete);
    let _ = writeln!(out, "  holdings {}", fmt_vec(&r.holdings));
    let _ = writeln!(out, "  c0 {:.9}  implied {}", r.c0, fmt_vec(&r.implied_consumption));
    let _ = writeln!(
        out,
        "  budget gap {:.3e}  first-order {}",
        r.budget_gap,
        fmt_vec(&r.foc_residuals)
    );
    match &r.pareto {
        Some(p) => {
            let _ = writeln!(
                out,
                "  pareto condition {} (max {:.3e}, weighted {:.3e})",
                if p.ok { "ok" } else { "FAIL" },
                p.max_residual,
                p.weighted_max
            );
            let _ = writeln!(out, "  state gaps {}", fmt_vec(&p.state_residuals));
        }
        None => {
            let _ = writeln!(out, "  pareto condition not applicable (non-equilibrium prices or beliefs)");
        }
    }
    out.push('\n');
}
