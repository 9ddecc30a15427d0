//! Quantum Nash equilibria of finite games, priced as Arrow-Debreu state
//! amplitudes, and their propagation into two-period financial allocation
//! problems.
//!
//! A finite strategic game is represented as a path space: one basis element
//! per joint pure-strategy choice. A complex amplitude vector over that basis
//! carries the Arrow-Debreu price of each path in its squared moduli. The
//! crate computes per-player pricing matrices from such kets, finds the
//! profiles at which no player gains by deviating (quantum Nash equilibria),
//! and then feeds the equilibrium prices forward:
//!
//! * a single-bet lottery entangles game paths with lottery outcomes, giving
//!   reduced density operators and rational beliefs,
//! * a pure-exchange economy allocates two-period consumption Pareto
//!   optimally under those beliefs,
//! * a securities market prices player positions at their present values and
//!   solves each agent's portfolio problem, complete or not.
//!
//! # Worked example
//!
//! Two companies each pick one of two technologies. Payoffs reward matching
//! (player A) and mismatching (player B):
//!
//! ```
//! use qnash::game::GameSpec;
//! use qnash::equilibrium::solve_support_enum;
//!
//! let spec = GameSpec::two_company();
//! let found = solve_support_enum(&spec).unwrap();
//! let eq = &found.equilibria[0];
//! assert!((eq.profile.weights[0][0] - 5.0 / 16.0).abs() < 1e-12);
//! assert!((eq.pv[0] - 1.75).abs() < 1e-12);
//! assert!((eq.pv[1] - 2.15625).abs() < 1e-12);
//! ```
//!
//! # Runnable examples
//!
//! Each major capability has a runnable example under `examples/`:
//!
//! * `two_company`: solve the bundled two-company game, print pricing
//!   matrices and present values (`cargo run -p qnash --example two_company`)
//! * `equilibrium_methods`: damped-iteration solver next to the exact
//!   support-enumeration oracle, certification, and gauge freedom
//! * `entangled_lottery`: lottery entanglement, partial traces, rational
//!   beliefs, and seeded path sampling
//! * `exchange_economy`: Pareto allocation, marginal-rate checks, and the
//!   quantum price conditions
//! * `securities_market`: securitized positions, pricing, completeness,
//!   and a portfolio solve
//! * `full_pipeline`: the whole chain from game to portfolio in one run
//!
//! The same flows are scriptable through the `qnash` binary; see the README.

pub mod economy;
pub mod equilibrium;
pub mod game;
pub mod input;
pub mod lottery;
pub mod report;
pub mod run;
pub mod securities;

/// Default tolerance for validating user-supplied constructions
/// (norms, simplex sums, unitarity).
pub const CONSTRUCTION_TOL: f64 = 1e-9;

/// Tolerance for assertions where exact algebra guarantees equality and
/// only floating-point rounding intervenes.
pub const EXACT_TOL: f64 = 1e-12;
