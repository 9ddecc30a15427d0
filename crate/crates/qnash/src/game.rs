//! Finite games as tensor-indexed path spaces with complex price amplitudes.
//!
//! A game with `n` players, player `i` choosing among `d_i` pure strategies,
//! has `N = d_1 * d_2 * ... * d_n` joint choices. Each joint choice is a
//! *path*: one basis element of an `N`-dimensional state space. A complex
//! amplitude vector over that basis is a [`PriceKet`]; the squared modulus of
//! each amplitude is the Arrow-Debreu price of the corresponding path
//! (capitalized, i.e. in end-of-game units, once divided by the discount
//! factor `D`).
//!
//! Everything downstream (equilibria, lotteries, economies, securities)
//! consumes the conventions fixed here:
//!
//! * **Canonical path order.** Paths are enumerated row-major with the
//!   first-listed player varying fastest; the last-listed player is the
//!   outermost (slowest-varying) tensor factor. For the two-company game
//!   with players listed `[A, B]`, the four paths appear in the order
//!   `(B0 A0), (B0 A1), (B1 A0), (B1 A1)`.
//! * **Indices are 0-based** throughout the API: players, strategies, paths.
//! * **Normalization.** A `RAW` ket's squared moduli sum to the discount
//!   factor `D`; a `FUTURE_VALUE` ket's sum to 1. Capitalized prices are
//!   `|amplitude|^2 / D` and `|amplitude|^2` respectively.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Hard cap on the number of paths a spec may declare. Payoff tensors are
/// stored dense, so the guard bounds memory at roughly `n * N` reals.
pub const MAX_PATHS: usize = 1_000_000;

/// Errors raised by game-level constructions and operations.
#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid game specification: {0}")]
    InvalidSpec(String),
    #[error("game declares {paths} paths, exceeding the supported maximum {MAX_PATHS}")]
    TooLarge { paths: usize },
    #[error("squared amplitudes sum to {actual}, expected {expected} (tolerance {tol})")]
    NormMismatch { expected: f64, actual: f64, tol: f64 },
    #[error("operator acts on {operator_len} paths but the ket has {ket_len} amplitudes")]
    BasisMismatch { operator_len: usize, ket_len: usize },
    #[error("index out of range: {what} = {got}, valid range 0..{bound}")]
    IndexOutOfRange { what: &'static str, got: usize, bound: usize },
    #[error("matrix is not unitary: max deviation of U†U from identity is {deviation}")]
    NotUnitary { deviation: f64 },
}

pub type GameResult<T> = Result<T, GameError>;

/// The pure-strategy index structure of a game: per-player strategy counts
/// plus the canonical path enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpace {
    dims: Vec<usize>,
    /// `strides[i]` is the index step of one unit of player `i`'s strategy.
    strides: Vec<usize>,
    num_paths: usize,
}

impl StrategySpace {
    /// Builds the space for the given per-player strategy counts, listed in
    /// player order (first listed varies fastest in the path enumeration).
    pub fn new(dims: Vec<usize>) -> GameResult<Self> {
        if dims.is_empty() {
            return Err(GameError::InvalidSpec("at least one player is required".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(GameError::InvalidSpec("every player needs at least one strategy".into()));
        }
        let mut strides = Vec::with_capacity(dims.len());
        let mut num_paths: usize = 1;
        for &d in &dims {
            strides.push(num_paths);
            num_paths = num_paths
                .checked_mul(d)
                .filter(|&n| n <= MAX_PATHS)
                .ok_or(GameError::TooLarge { paths: usize::MAX })?;
        }
        if num_paths > MAX_PATHS {
            return Err(GameError::TooLarge { paths: num_paths });
        }
        Ok(Self { dims, strides, num_paths })
    }

    pub fn num_players(&self) -> usize {
        self.dims.len()
    }

    pub fn num_paths(&self) -> usize {
        self.num_paths
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Flat canonical index of a joint strategy tuple.
    pub fn path_index(&self, strategies: &[usize]) -> GameResult<usize> {
        if strategies.len() != self.dims.len() {
            return Err(GameError::InvalidSpec(format!(
                "strategy tuple has {} entries, expected {}",
                strategies.len(),
                self.dims.len()
            )));
        }
        let mut index = 0;
        for (i, &s) in strategies.iter().enumerate() {
            if s >= self.dims[i] {
                return Err(GameError::IndexOutOfRange { what: "strategy", got: s, bound: self.dims[i] });
            }
            index += s * self.strides[i];
        }
        Ok(index)
    }

    /// Joint strategy tuple of a flat canonical index.
    pub fn path(&self, index: usize) -> GameResult<GamePath> {
        if index >= self.num_paths {
            return Err(GameError::IndexOutOfRange { what: "path", got: index, bound: self.num_paths });
        }
        let strategies = self.dims.iter().zip(&self.strides).map(|(&d, &stride)| (index / stride) % d).collect();
        Ok(GamePath { strategies, index })
    }

    /// Player `i`'s strategy on path `index`, without materializing the tuple.
    pub fn strategy_of(&self, index: usize, player: usize) -> usize {
        (index / self.strides[player]) % self.dims[player]
    }

    /// All `N` paths in canonical order.
    pub fn enumerate_paths(&self) -> Vec<GamePath> {
        (0..self.num_paths).map(|i| self.path(i).expect("index in range")).collect()
    }
}

/// One joint pure-strategy choice: the strategy tuple and its flat index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GamePath {
    pub strategies: Vec<usize>,
    pub index: usize,
}

/// A named player with named strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerDef {
    pub name: String,
    pub strategies: Vec<String>,
}

/// A complete game: players, payoff tensors, and the discount factor `D`
/// ruling the exchange rate between end-of-game and present value.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    players: Vec<PlayerDef>,
    space: StrategySpace,
    /// `payoffs[i][alpha]` is player `i`'s payoff on path `alpha`.
    payoffs: Vec<Vec<f64>>,
    discount: f64,
}

impl GameSpec {
    pub fn new(players: Vec<PlayerDef>, payoffs: Vec<Vec<f64>>, discount: f64) -> GameResult<Self> {
        let space = StrategySpace::new(players.iter().map(|p| p.strategies.len()).collect())?;
        if payoffs.len() != players.len() {
            return Err(GameError::InvalidSpec(format!(
                "{} payoff tensors for {} players",
                payoffs.len(),
                players.len()
            )));
        }
        for (i, tensor) in payoffs.iter().enumerate() {
            if tensor.len() != space.num_paths() {
                return Err(GameError::InvalidSpec(format!(
                    "payoff tensor for player {} has {} entries, expected {}",
                    players[i].name,
                    tensor.len(),
                    space.num_paths()
                )));
            }
            if tensor.iter().any(|x| !x.is_finite()) {
                return Err(GameError::InvalidSpec(format!(
                    "payoff tensor for player {} contains a non-finite value",
                    players[i].name
                )));
            }
        }
        if !discount.is_finite() || discount <= 0.0 {
            return Err(GameError::InvalidSpec(format!(
                "discount must be a positive finite real, got {discount}"
            )));
        }
        Ok(Self { players, space, payoffs, discount })
    }

    /// Non-fatal oddities of a game specification. A discount above 1
    /// values future payoffs more than present ones; unusual, but not
    /// rejected.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.discount > 1.0 {
            out.push(format!(
                "discount {} exceeds 1; future payoffs are valued above present ones",
                self.discount
            ));
        }
        out
    }

    pub fn players(&self) -> &[PlayerDef] {
        &self.players
    }

    pub fn space(&self) -> &StrategySpace {
        &self.space
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn num_paths(&self) -> usize {
        self.space.num_paths()
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn payoff(&self, player: usize, path_index: usize) -> f64 {
        self.payoffs[player][path_index]
    }

    pub fn payoffs_of(&self, player: usize) -> &[f64] {
        &self.payoffs[player]
    }

    /// The diagonal payoff operator of one player.
    pub fn payoff_operator(&self, player: usize) -> GameResult<PayoffOperator> {
        if player >= self.players.len() {
            return Err(GameError::IndexOutOfRange { what: "player", got: player, bound: self.players.len() });
        }
        Ok(PayoffOperator { diagonal: self.payoffs[player].clone() })
    }

    /// Human-readable label of a path, outermost player first, e.g.
    /// `B:tech_1 A:tech_0`.
    pub fn path_label(&self, path: &GamePath) -> String {
        let mut parts = Vec::with_capacity(self.players.len());
        for (i, player) in self.players.iter().enumerate().rev() {
            parts.push(format!("{}:{}", player.name, player.strategies[path.strategies[i]]));
        }
        parts.join(" ")
    }

    /// The two-company technology game: player A earns 2 when both firms
    /// adopt the same technology and 1.5 otherwise; player B earns 1.4 when
    /// both adopt technology 0, 2 when both adopt technology 1, and 2.5 on a
    /// mismatch. Discount 1. Mixed equilibrium: A plays (5/16, 11/16),
    /// B plays (1/2, 1/2).
    pub fn two_company() -> Self {
        let players = vec![
            PlayerDef { name: "A".into(), strategies: vec!["tech_0".into(), "tech_1".into()] },
            PlayerDef { name: "B".into(), strategies: vec!["tech_0".into(), "tech_1".into()] },
        ];
        // Canonical path order: (B0 A0), (B0 A1), (B1 A0), (B1 A1).
        let payoffs = vec![vec![2.0, 1.5, 1.5, 2.0], vec![1.4, 2.5, 2.5, 2.0]];
        Self::new(players, payoffs, 1.0).expect("fixture is valid")
    }
}

/// How a ket's total squared amplitude is normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Squared moduli sum to the discount factor carried here.
    Raw { discount: f64 },
    /// Squared moduli sum to 1 (amplitudes in end-of-game units).
    FutureValue,
}

/// A complex amplitude vector over a path basis. Squared moduli are
/// Arrow-Debreu prices of the paths; see [`Normalization`] for the scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceKet {
    amplitudes: Vec<Complex64>,
    normalization: Normalization,
}

impl PriceKet {
    /// A ket whose squared moduli sum to the discount `d`, validated within
    /// [`crate::CONSTRUCTION_TOL`].
    pub fn raw(amplitudes: Vec<Complex64>, d: f64) -> GameResult<Self> {
        Self::raw_with_tol(amplitudes, d, crate::CONSTRUCTION_TOL)
    }

    pub fn raw_with_tol(amplitudes: Vec<Complex64>, d: f64, tol: f64) -> GameResult<Self> {
        if !d.is_finite() || d <= 0.0 {
            return Err(GameError::InvalidSpec(format!("discount must be positive and finite, got {d}")));
        }
        let total: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !total.is_finite() || (total - d).abs() > tol {
            return Err(GameError::NormMismatch { expected: d, actual: total, tol });
        }
        Ok(Self { amplitudes, normalization: Normalization::Raw { discount: d } })
    }

    /// A unit-norm ket, validated within [`crate::CONSTRUCTION_TOL`].
    pub fn future_value(amplitudes: Vec<Complex64>) -> GameResult<Self> {
        Self::future_value_with_tol(amplitudes, crate::CONSTRUCTION_TOL)
    }

    pub fn future_value_with_tol(amplitudes: Vec<Complex64>, tol: f64) -> GameResult<Self> {
        let total: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !total.is_finite() || (total - 1.0).abs() > tol {
            return Err(GameError::NormMismatch { expected: 1.0, actual: total, tol });
        }
        Ok(Self { amplitudes, normalization: Normalization::FutureValue })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Capitalized Arrow-Debreu prices: nonnegative, summing to 1 (up to the
    /// construction tolerance of the ket).
    pub fn capitalized_prices(&self) -> Vec<f64> {
        match self.normalization {
            Normalization::Raw { discount } => {
                self.amplitudes.iter().map(|a| a.norm_sqr() / discount).collect()
            }
            Normalization::FutureValue => self.amplitudes.iter().map(|a| a.norm_sqr()).collect(),
        }
    }
}

/// Rescales a raw ket by `1/sqrt(d)` so its squared moduli sum to 1.
pub fn normalize_to_future_value(psi: &PriceKet, d: f64) -> GameResult<PriceKet> {
    let total = psi.norm_sqr();
    if (total - d).abs() > crate::CONSTRUCTION_TOL {
        return Err(GameError::NormMismatch { expected: d, actual: total, tol: crate::CONSTRUCTION_TOL });
    }
    let scale = 1.0 / d.sqrt();
    let amplitudes = psi.amplitudes.iter().map(|a| a * scale).collect();
    Ok(PriceKet { amplitudes, normalization: Normalization::FutureValue })
}

/// A diagonal operator in the path basis: real weights on the path
/// projectors. Payoff operators and the unit (bond) operator live here.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffOperator {
    pub diagonal: Vec<f64>,
}

impl PayoffOperator {
    pub fn new(diagonal: Vec<f64>) -> Self {
        Self { diagonal }
    }

    /// The unit operator on `n` paths; its present value is the bond price `D`.
    pub fn unit(n: usize) -> Self {
        Self { diagonal: vec![1.0; n] }
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }
}

/// Present value of a diagonal operator under a ket: `D` times the
/// price-weighted average of the diagonal.
///
/// The ket may live on the operator's path basis directly, or on the joint
/// game-lottery basis of `N^2` amplitudes (flat index `alpha * N + omega`);
/// in the joint case the operator is lifted to act on the game factor.
pub fn present_value(ket: &PriceKet, op: &PayoffOperator, d: f64) -> GameResult<f64> {
    let n = op.len();
    let caps = ket.capitalized_prices();
    if ket.len() == n {
        Ok(d * caps.iter().zip(&op.diagonal).map(|(p, pi)| p * pi).sum::<f64>())
    } else if n != 0 && ket.len() == n * n {
        Ok(d * caps.iter().enumerate().map(|(idx, p)| op.diagonal[idx / n] * p).sum::<f64>())
    } else {
        Err(GameError::BasisMismatch { operator_len: n, ket_len: ket.len() })
    }
}

/// The pricing (decoherence) functional of player `i` between pure
/// strategies `f` and `g`: the inner product of the ket's projections onto
/// the two coarse-grained sets of paths.
///
/// Distinct strategies select disjoint path sets, so the off-diagonal values
/// vanish identically; the diagonal value is the capitalized Arrow-Debreu
/// price of the pure strategy.
pub fn pricing_functional(
    space: &StrategySpace,
    ket: &PriceKet,
    player: usize,
    f: usize,
    g: usize,
) -> GameResult<Complex64> {
    if player >= space.num_players() {
        return Err(GameError::IndexOutOfRange { what: "player", got: player, bound: space.num_players() });
    }
    let d = space.dims()[player];
    if f >= d {
        return Err(GameError::IndexOutOfRange { what: "strategy", got: f, bound: d });
    }
    if g >= d {
        return Err(GameError::IndexOutOfRange { what: "strategy", got: g, bound: d });
    }
    if ket.len() != space.num_paths() {
        return Err(GameError::BasisMismatch { operator_len: space.num_paths(), ket_len: ket.len() });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (alpha, q) in ket.amplitudes.iter().enumerate() {
        let s = space.strategy_of(alpha, player);
        // A path contributes only when both projections keep it.
        if s == f && s == g {
            acc += q.conj() * q;
        }
    }
    Ok(acc)
}

/// One player's pure-strategy weights extracted from a ket. The weights are
/// the diagonal of the pricing functional and form a point in the strategy
/// simplex (scaled by the ket's total norm).
#[derive(Debug, Clone, PartialEq)]
pub struct PricingMatrix {
    pub player: usize,
    pub weights: Vec<f64>,
}

/// Pricing matrices of every player, read off a game-basis ket.
pub fn pricing_matrices(space: &StrategySpace, ket: &PriceKet) -> GameResult<Vec<PricingMatrix>> {
    if ket.len() != space.num_paths() {
        return Err(GameError::BasisMismatch { operator_len: space.num_paths(), ket_len: ket.len() });
    }
    let caps = ket.capitalized_prices();
    let mut matrices = Vec::with_capacity(space.num_players());
    for player in 0..space.num_players() {
        let mut weights = vec![0.0; space.dims()[player]];
        for (alpha, p) in caps.iter().enumerate() {
            weights[space.strategy_of(alpha, player)] += p;
        }
        matrices.push(PricingMatrix { player, weights });
    }
    Ok(matrices)
}

/// Applies a unitary matrix to a ket's amplitudes. The matrix is checked for
/// unitarity (`U†U = I`) within `tol` first.
pub fn apply_unitary(
    ket: &PriceKet,
    u: &nalgebra::DMatrix<Complex64>,
    tol: f64,
) -> GameResult<PriceKet> {
    let n = ket.len();
    if u.nrows() != n || u.ncols() != n {
        return Err(GameError::BasisMismatch { operator_len: u.nrows(), ket_len: n });
    }
    let product = u.adjoint() * u;
    let mut deviation = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            deviation = deviation.max((product[(i, j)] - expected).norm());
        }
    }
    if deviation > tol {
        return Err(GameError::NotUnitary { deviation });
    }
    let vec = nalgebra::DVector::from_column_slice(&ket.amplitudes);
    let rotated = u * vec;
    Ok(PriceKet { amplitudes: rotated.iter().copied().collect(), normalization: ket.normalization })
}

/// True when `U` preserves every path's price on this ket: the squared
/// moduli of `U q` match those of `q` componentwise within `tol`.
pub fn check_price_conserving(
    u: &nalgebra::DMatrix<Complex64>,
    ket: &PriceKet,
    tol: f64,
) -> GameResult<bool> {
    let rotated = apply_unitary(ket, u, tol.max(crate::CONSTRUCTION_TOL))?;
    let max_shift = ket
        .amplitudes
        .iter()
        .zip(rotated.amplitudes.iter())
        .map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs())
        .fold(0.0f64, f64::max);
    Ok(max_shift <= tol)
}

/// Draws paths with probabilities equal to the ket's capitalized prices.
/// Deterministic for a fixed seed.
pub struct PathSampler {
    cumulative: Vec<f64>,
    space: StrategySpace,
    rng: ChaCha8Rng,
}

impl PathSampler {
    pub fn new(space: &StrategySpace, ket: &PriceKet, seed: u64) -> GameResult<Self> {
        if ket.len() != space.num_paths() {
            return Err(GameError::BasisMismatch { operator_len: space.num_paths(), ket_len: ket.len() });
        }
        let mut cumulative = Vec::with_capacity(ket.len());
        let mut total = 0.0;
        for p in ket.capitalized_prices() {
            total += p;
            cumulative.push(total);
        }
        Ok(Self { cumulative, space: space.clone(), rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn sample(&mut self) -> GamePath {
        let u: f64 = self.rng.gen::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        let idx = match self.cumulative.binary_search_by(|c| c.partial_cmp(&u).expect("finite")) {
            Ok(i) => (i + 1).min(self.cumulative.len() - 1),
            Err(i) => i.min(self.cumulative.len() - 1),
        };
        self.space.path(idx).expect("cumulative index in range")
    }
}

/// One draw from the ket's path distribution with a fresh seeded generator.
pub fn sample_path(space: &StrategySpace, ket: &PriceKet, seed: u64) -> GameResult<GamePath> {
    Ok(PathSampler::new(space, ket, seed)?.sample())
}
