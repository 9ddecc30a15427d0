//! JSON specification files: parsing, validation, and resolution against
//! game context.
//!
//! Three file formats are accepted. A game file fixes players, flat payoff
//! arrays in canonical path order, and the discount. An economy file lists
//! agents whose beliefs are either explicit weights or the string
//! `"rational"`, resolved later from an equilibrium ket. A securities file
//! mixes explicit payoff vectors with references to player positions, and
//! prices are either explicit or the string `"pv"` for valuation by the
//! equilibrium amplitudes. Validation failures carry the offending field
//! path.

use crate::economy::{AgentSpec, EconomySpec, UtilitySpec};
use crate::game::{GameSpec, PlayerDef};
use crate::lottery::{BeliefVector, JointKet};
use crate::securities::{pv_prices, MarketPrices, Security, SecuritySet};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid value at {field}: {reason}")]
    Validation { field: String, reason: String },
}

pub type InputResult<T> = Result<T, InputError>;

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> InputError {
    InputError::Validation { field: field.into(), reason: reason.into() }
}

fn read_to_string(path: &Path) -> InputResult<String> {
    std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    players: Vec<PlayerEntry>,
    payoffs: BTreeMap<String, Vec<f64>>,
    discount: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlayerEntry {
    name: String,
    strategies: Vec<String>,
}

/// Parses and validates a game specification from JSON text.
pub fn parse_game_str(text: &str, origin: &str) -> InputResult<GameSpec> {
    let file: GameFile = serde_json::from_str(text).map_err(|source| InputError::Parse {
        path: origin.to_string(),
        source,
    })?;
    if file.players.is_empty() {
        return Err(invalid("players", "at least one player is required"));
    }
    let mut num_paths = 1usize;
    for (i, player) in file.players.iter().enumerate() {
        if player.name.is_empty() {
            return Err(invalid(format!("players[{i}].name"), "must be non-empty"));
        }
        if player.strategies.is_empty() {
            return Err(invalid(
                format!("players[{i}].strategies"),
                "at least one strategy is required",
            ));
        }
        num_paths = num_paths.saturating_mul(player.strategies.len());
    }
    if !(file.discount.is_finite() && file.discount > 0.0) {
        return Err(invalid("discount", format!("must be positive and finite, got {}", file.discount)));
    }

    let names: Vec<&str> = file.players.iter().map(|p| p.name.as_str()).collect();
    for key in file.payoffs.keys() {
        if !names.contains(&key.as_str()) {
            return Err(invalid(format!("payoffs.{key}"), "does not match any player name"));
        }
    }
    let mut payoffs = Vec::with_capacity(file.players.len());
    for player in &file.players {
        let row = file
            .payoffs
            .get(&player.name)
            .ok_or_else(|| invalid(format!("payoffs.{}", player.name), "missing payoff array"))?;
        if row.len() != num_paths {
            return Err(invalid(
                format!("payoffs.{}", player.name),
                format!("expected {num_paths} entries in canonical path order, got {}", row.len()),
            ));
        }
        if let Some(pos) = row.iter().position(|p| !p.is_finite()) {
            return Err(invalid(
                format!("payoffs.{}[{pos}]", player.name),
                "payoffs must be finite",
            ));
        }
        payoffs.push(row.clone());
    }

    let players: Vec<PlayerDef> = file
        .players
        .into_iter()
        .map(|p| PlayerDef { name: p.name, strategies: p.strategies })
        .collect();
    GameSpec::new(players, payoffs, file.discount)
        .map_err(|e| invalid("game", e.to_string()))
}

/// Reads a game specification file.
pub fn load_game(path: &Path) -> InputResult<GameSpec> {
    parse_game_str(&read_to_string(path)?, &path.display().to_string())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EconomyFile {
    agents: Vec<AgentEntry>,
    aggregate_c0: f64,
    aggregate_c: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentEntry {
    gamma: f64,
    beta: f64,
    lambda: f64,
    beliefs: BeliefEntry,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum BeliefEntry {
    Keyword(String),
    Weights(Vec<f64>),
}

/// An economy file parsed but not yet resolved: agents flagged `"rational"`
/// still need beliefs from an equilibrium ket.
#[derive(Debug)]
pub struct EconomyInput {
    agents: Vec<(UtilitySpec, f64, Option<Vec<f64>>)>,
    aggregate_c0: f64,
    aggregate_c: Vec<f64>,
}

impl EconomyInput {
    pub fn num_states(&self) -> usize {
        self.aggregate_c.len()
    }

    /// True when at least one agent deferred to rational beliefs.
    pub fn needs_rational_beliefs(&self) -> bool {
        self.agents.iter().any(|(_, _, b)| b.is_none())
    }

    /// Produces the validated economy, substituting `rational` for agents
    /// that deferred their beliefs.
    pub fn resolve(&self, rational: Option<&BeliefVector>) -> InputResult<EconomySpec> {
        let mut agents = Vec::with_capacity(self.agents.len());
        for (i, (utility, lambda, weights)) in self.agents.iter().enumerate() {
            let beliefs = match weights {
                Some(w) => BeliefVector::new(w.clone()).map_err(|e| {
                    invalid(format!("agents[{i}].beliefs"), e.to_string())
                })?,
                None => rational
                    .ok_or_else(|| {
                        invalid(
                            format!("agents[{i}].beliefs"),
                            "\"rational\" requires game context to resolve",
                        )
                    })?
                    .clone(),
            };
            if beliefs.len() != self.aggregate_c.len() {
                return Err(invalid(
                    format!("agents[{i}].beliefs"),
                    format!(
                        "{} weights for {} states in aggregate_c",
                        beliefs.len(),
                        self.aggregate_c.len()
                    ),
                ));
            }
            agents.push(AgentSpec { utility: *utility, lambda: *lambda, beliefs });
        }
        EconomySpec::new(agents, self.aggregate_c0, self.aggregate_c.clone())
            .map_err(|e| invalid("economy", e.to_string()))
    }
}

/// Parses and validates an economy specification from JSON text.
pub fn parse_economy_str(text: &str, origin: &str) -> InputResult<EconomyInput> {
    let file: EconomyFile = serde_json::from_str(text).map_err(|source| InputError::Parse {
        path: origin.to_string(),
        source,
    })?;
    if file.agents.is_empty() {
        return Err(invalid("agents", "at least one agent is required"));
    }
    let mut agents = Vec::with_capacity(file.agents.len());
    for (i, agent) in file.agents.into_iter().enumerate() {
        let utility = UtilitySpec::new(agent.gamma, agent.beta)
            .map_err(|e| invalid(format!("agents[{i}]"), e.to_string()))?;
        if !agent.lambda.is_finite() || agent.lambda <= 0.0 {
            return Err(invalid(
                format!("agents[{i}].lambda"),
                format!("must be positive and finite, got {}", agent.lambda),
            ));
        }
        let weights = match agent.beliefs {
            BeliefEntry::Keyword(word) if word == "rational" => None,
            BeliefEntry::Keyword(word) => {
                return Err(invalid(
                    format!("agents[{i}].beliefs"),
                    format!("expected belief weights or \"rational\", got \"{word}\""),
                ));
            }
            BeliefEntry::Weights(w) => Some(w),
        };
        agents.push((utility, agent.lambda, weights));
    }
    Ok(EconomyInput { agents, aggregate_c0: file.aggregate_c0, aggregate_c: file.aggregate_c })
}

/// Reads an economy specification file.
pub fn load_economy(path: &Path) -> InputResult<EconomyInput> {
    parse_economy_str(&read_to_string(path)?, &path.display().to_string())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SecuritiesFile {
    securities: Vec<SecurityEntry>,
    prices: PricesEntry,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SecurityEntry {
    Explicit {
        name: String,
        payoffs: Vec<f64>,
    },
    Position {
        name: String,
        game_position: usize,
        theta: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PricesEntry {
    Keyword(String),
    Given(Vec<f64>),
}

/// A securities file parsed but not yet resolved: position entries need the
/// game, and `"pv"` prices need the equilibrium ket.
#[derive(Debug)]
pub struct SecuritiesInput {
    entries: Vec<SecurityEntry>,
    prices: Option<Vec<f64>>,
}

impl SecuritiesInput {
    /// True when prices defer to valuation by the equilibrium amplitudes.
    pub fn needs_pv_prices(&self) -> bool {
        self.prices.is_none()
    }

    /// Builds the security set, resolving position entries against the
    /// game.
    pub fn resolve_securities(&self, game: Option<&GameSpec>) -> InputResult<SecuritySet> {
        let mut securities = Vec::with_capacity(self.entries.len());
        for (j, entry) in self.entries.iter().enumerate() {
            match entry {
                SecurityEntry::Explicit { name, payoffs } => {
                    securities.push(Security::new(name.clone(), payoffs.clone()));
                }
                SecurityEntry::Position { name, game_position, theta } => {
                    let spec = game.ok_or_else(|| {
                        invalid(
                            format!("securities[{j}].game_position"),
                            "requires game context to resolve",
                        )
                    })?;
                    let mut security = Security::from_game(spec, *game_position, *theta)
                        .map_err(|e| invalid(format!("securities[{j}]"), e.to_string()))?;
                    security.name = name.clone();
                    securities.push(security);
                }
            }
        }
        SecuritySet::new(securities).map_err(|e| invalid("securities", e.to_string()))
    }

    /// Resolves prices: explicit values are validated against the security
    /// count, `"pv"` values each security against the ket.
    pub fn resolve_prices(
        &self,
        securities: &SecuritySet,
        joint: Option<(&JointKet, f64)>,
    ) -> InputResult<MarketPrices> {
        match &self.prices {
            Some(values) => {
                if values.len() != securities.num_securities() {
                    return Err(invalid(
                        "prices",
                        format!(
                            "{} prices for {} securities",
                            values.len(),
                            securities.num_securities()
                        ),
                    ));
                }
                MarketPrices::new(values.clone()).map_err(|e| invalid("prices", e.to_string()))
            }
            None => {
                let (ket, d) = joint.ok_or_else(|| {
                    invalid("prices", "\"pv\" requires an equilibrium ket to resolve")
                })?;
                pv_prices(securities, ket, d).map_err(|e| invalid("prices", e.to_string()))
            }
        }
    }
}

/// Parses and validates a securities specification from JSON text.
pub fn parse_securities_str(text: &str, origin: &str) -> InputResult<SecuritiesInput> {
    let file: SecuritiesFile = serde_json::from_str(text).map_err(|source| InputError::Parse {
        path: origin.to_string(),
        source,
    })?;
    if file.securities.is_empty() {
        return Err(invalid("securities", "at least one security is required"));
    }
    for (j, entry) in file.securities.iter().enumerate() {
        match entry {
            SecurityEntry::Explicit { name, payoffs } => {
                if name.is_empty() {
                    return Err(invalid(format!("securities[{j}].name"), "must be non-empty"));
                }
                if payoffs.is_empty() {
                    return Err(invalid(format!("securities[{j}].payoffs"), "must be non-empty"));
                }
                if let Some(pos) = payoffs.iter().position(|p| !p.is_finite()) {
                    return Err(invalid(
                        format!("securities[{j}].payoffs[{pos}]"),
                        "payoffs must be finite",
                    ));
                }
            }
            SecurityEntry::Position { name, theta, .. } => {
                if name.is_empty() {
                    return Err(invalid(format!("securities[{j}].name"), "must be non-empty"));
                }
                if !theta.is_finite() || *theta <= 0.0 {
                    return Err(invalid(
                        format!("securities[{j}].theta"),
                        format!("must be positive and finite, got {theta}"),
                    ));
                }
            }
        }
    }
    let prices = match file.prices {
        PricesEntry::Keyword(word) if word == "pv" => None,
        PricesEntry::Keyword(word) => {
            return Err(invalid(
                "prices",
                format!("expected price array or \"pv\", got \"{word}\""),
            ));
        }
        PricesEntry::Given(values) => Some(values),
    };
    Ok(SecuritiesInput { entries: file.securities, prices })
}

/// Reads a securities specification file.
pub fn load_securities(path: &Path) -> InputResult<SecuritiesInput> {
    parse_securities_str(&read_to_string(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lottery::entangle;
    use num_complex::Complex64;

    const TWO_COMPANY: &str = r#"{
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

    #[test]
    fn game_fixture_parses_to_the_expected_spec() {
        let spec = parse_game_str(TWO_COMPANY, "inline").unwrap();
        assert_eq!(spec.space().dims(), &[2, 2]);
        assert_eq!(spec.discount(), 1.0);
        assert_eq!(spec.payoffs_of(0), &[2.0, 1.5, 1.5, 2.0]);
        assert_eq!(spec.payoffs_of(1), &[1.4, 2.5, 2.5, 2.0]);
        assert_eq!(spec.players()[0].name, "CompanyA");
    }

    #[test]
    fn wrong_payoff_length_names_the_field() {
        let text = TWO_COMPANY.replace("[2.0, 1.5, 1.5, 2.0]", "[2.0, 1.5, 1.5]");
        let err = parse_game_str(&text, "inline").unwrap_err();
        match err {
            InputError::Validation { field, reason } => {
                assert_eq!(field, "payoffs.CompanyA");
                assert!(reason.contains("expected 4"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn negative_discount_names_the_field() {
        let text = TWO_COMPANY.replace("\"discount\": 1.0", "\"discount\": -0.5");
        let err = parse_game_str(&text, "inline").unwrap_err();
        match err {
            InputError::Validation { field, .. } => assert_eq!(field, "discount"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_payoff_key_is_rejected() {
        let text = TWO_COMPANY.replace("\"CompanyB\":", "\"CompanyX\":");
        let err = parse_game_str(&text, "inline").unwrap_err();
        match err {
            InputError::Validation { field, .. } => assert_eq!(field, "payoffs.CompanyX"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(
            parse_game_str("{not json", "inline"),
            Err(InputError::Parse { .. })
        ));
    }

    const ECONOMY: &str = r#"{
        "agents": [
            {"gamma": 1.0, "beta": 1.0, "lambda": 1.0, "beliefs": "rational"},
            {"gamma": 1.0, "beta": 1.0, "lambda": 2.0, "beliefs": [0.25, 0.25, 0.25, 0.25]}
        ],
        "aggregate_c0": 4.0,
        "aggregate_c": [4.0, 4.0, 4.0, 4.0]
    }"#;

    #[test]
    fn economy_resolves_rational_beliefs_from_context() {
        let input = parse_economy_str(ECONOMY, "inline").unwrap();
        assert!(input.needs_rational_beliefs());
        let rational =
            BeliefVector::new(vec![5.0 / 32.0, 11.0 / 32.0, 5.0 / 32.0, 11.0 / 32.0]).unwrap();
        let economy = input.resolve(Some(&rational)).unwrap();
        assert_eq!(economy.agents()[0].beliefs.weights(), rational.weights());
        assert_eq!(economy.agents()[1].beliefs.weights(), &[0.25; 4]);

        let err = input.resolve(None).unwrap_err();
        match err {
            InputError::Validation { field, .. } => assert_eq!(field, "agents[0].beliefs"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_belief_keyword_is_rejected() {
        let text = ECONOMY.replace("\"rational\"", "\"uniform\"");
        let err = parse_economy_str(&text, "inline").unwrap_err();
        match err {
            InputError::Validation { field, reason } => {
                assert_eq!(field, "agents[0].beliefs");
                assert!(reason.contains("uniform"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn belief_length_mismatch_names_the_agent() {
        let text = ECONOMY.replace("[0.25, 0.25, 0.25, 0.25]", "[0.5, 0.5]");
        let input = parse_economy_str(&text, "inline").unwrap();
        let rational = BeliefVector::new(vec![0.25; 4]).unwrap();
        let err = input.resolve(Some(&rational)).unwrap_err();
        match err {
            InputError::Validation { field, .. } => assert_eq!(field, "agents[1].beliefs"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    const SECURITIES: &str = r#"{
        "securities": [
            {"name": "alpha", "game_position": 0, "theta": 1.0},
            {"name": "flat", "payoffs": [1.0, 1.0, 1.0, 1.0]}
        ],
        "prices": "pv"
    }"#;

    #[test]
    fn securities_resolve_positions_and_pv_prices() {
        let game = parse_game_str(TWO_COMPANY, "inline").unwrap();
        let input = parse_securities_str(SECURITIES, "inline").unwrap();
        assert!(input.needs_pv_prices());
        let set = input.resolve_securities(Some(&game)).unwrap();
        assert_eq!(set.securities()[0].payoffs, vec![2.0, 1.5, 1.5, 2.0]);
        assert_eq!(set.securities()[0].name, "alpha");
        assert_eq!(set.securities()[1].payoffs, vec![1.0; 4]);

        let amps: Vec<Complex64> = [5.0f64 / 32.0, 11.0 / 32.0, 5.0 / 32.0, 11.0 / 32.0]
            .iter()
            .map(|p| Complex64::new(p.sqrt(), 0.0))
            .collect();
        let joint = entangle(&crate::game::PriceKet::future_value(amps).unwrap());
        let prices = input.resolve_prices(&set, Some((&joint, 1.0))).unwrap();
        assert!((prices.prices()[0] - 1.75).abs() < 1e-12);
        assert!((prices.prices()[1] - 1.0).abs() < 1e-12);

        let err = input.resolve_prices(&set, None).unwrap_err();
        assert!(matches!(err, InputError::Validation { .. }));
    }

    #[test]
    fn explicit_prices_must_match_the_security_count() {
        let text = SECURITIES.replace("\"pv\"", "[1.0]");
        let input = parse_securities_str(&text, "inline").unwrap();
        let game = parse_game_str(TWO_COMPANY, "inline").unwrap();
        let set = input.resolve_securities(Some(&game)).unwrap();
        let err = input.resolve_prices(&set, None).unwrap_err();
        match err {
            InputError::Validation { field, .. } => assert_eq!(field, "prices"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn position_entries_require_game_context() {
        let input = parse_securities_str(SECURITIES, "inline").unwrap();
        let err = input.resolve_securities(None).unwrap_err();
        match err {
            InputError::Validation { field, .. } => {
                assert_eq!(field, "securities[0].game_position")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
