//! Equilibrium search and certification for price-amplitude games.
//!
//! A mixed profile is an assignment of one simplex point per player,
//! identified with the diagonal pricing matrices a product ket induces. A
//! profile is a (quantum Nash) equilibrium when no player can raise their
//! present value by deviating; by linearity of the payoff in any single
//! player's weights, checking pure deviations suffices.
//!
//! Two solvers are provided. [`solve_iterative`] runs a damped fixed-point
//! iteration of the gain map (whose fixed points are exactly the equilibria)
//! from several random starts, polishing candidate supports with a Newton
//! solve of the indifference system. [`solve_support_enum`] is the exact
//! oracle for two-player games: it enumerates equal-size support pairs and
//! solves each linear indifference system directly. Interior mixed
//! equilibria are repelling for the plain damped gain map, so the polish
//! step is what makes the iterative path certify; the two methods agree on
//! nondegenerate games and are tested against each other.

use crate::game::{GameError, GameSpec, PriceKet, StrategySpace};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error("profile weights are invalid: {0}")]
    InvalidProfile(String),
    #[error("profile shape does not match the game: {0}")]
    DimensionMismatch(String),
    #[error("operation requires exactly 2 players, game has {0}")]
    NotBimatrix(usize),
    #[error(transparent)]
    Game(#[from] GameError),
}

pub type EqResult<T> = Result<T, EquilibriumError>;

/// One simplex point per player.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile {
    pub weights: Vec<Vec<f64>>,
}

impl MixedProfile {
    pub fn new(weights: Vec<Vec<f64>>) -> EqResult<Self> {
        for (i, w) in weights.iter().enumerate() {
            if w.is_empty() {
                return Err(EquilibriumError::InvalidProfile(format!("player {i} has no strategies")));
            }
            if w.iter().any(|&x| !x.is_finite() || x < -crate::CONSTRUCTION_TOL) {
                return Err(EquilibriumError::InvalidProfile(format!(
                    "player {i} has a negative or non-finite weight"
                )));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > crate::CONSTRUCTION_TOL {
                return Err(EquilibriumError::InvalidProfile(format!(
                    "player {i} weights sum to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { weights })
    }

    pub fn uniform(space: &StrategySpace) -> Self {
        let weights = space.dims().iter().map(|&d| vec![1.0 / d as f64; d]).collect();
        Self { weights }
    }

    /// Largest componentwise distance between two profiles of the same shape.
    pub fn linf_distance(&self, other: &MixedProfile) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Strategies of one player carrying more than `tol` weight.
    pub fn support(&self, player: usize, tol: f64) -> Vec<usize> {
        self.weights[player]
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > tol)
            .map(|(f, _)| f)
            .collect()
    }

    fn check_shape(&self, space: &StrategySpace) -> EqResult<()> {
        if self.weights.len() != space.num_players()
            || self.weights.iter().zip(space.dims()).any(|(w, &d)| w.len() != d)
        {
            return Err(EquilibriumError::DimensionMismatch(format!(
                "profile shape {:?} vs game dims {:?}",
                self.weights.iter().map(Vec::len).collect::<Vec<_>>(),
                space.dims()
            )));
        }
        Ok(())
    }
}

/// Present value of each of `player`'s pure strategies against the other
/// players' mixed weights: entry `f` is the payoff of deviating to pure `f`.
pub fn strategy_values(spec: &GameSpec, profile: &MixedProfile, player: usize) -> EqResult<Vec<f64>> {
    profile.check_shape(spec.space())?;
    let space = spec.space();
    let mut values = vec![0.0; space.dims()[player]];
    for alpha in 0..space.num_paths() {
        let mut weight = 1.0;
        for j in 0..space.num_players() {
            if j != player {
                weight *= profile.weights[j][space.strategy_of(alpha, j)];
            }
        }
        if weight != 0.0 {
            values[space.strategy_of(alpha, player)] += spec.payoff(player, alpha) * weight;
        }
    }
    let d = spec.discount();
    values.iter_mut().for_each(|v| *v *= d);
    Ok(values)
}

/// Present value of `player` under the product ket the profile induces.
pub fn profile_payoff(spec: &GameSpec, profile: &MixedProfile, player: usize) -> EqResult<f64> {
    let values = strategy_values(spec, profile, player)?;
    Ok(values.iter().zip(&profile.weights[player]).map(|(v, p)| v * p).sum())
}

/// One step of the gain map: each player's weights move toward pure
/// strategies that would improve on the current payoff, scaled so the output
/// stays on the simplex. Fixed points are exactly the equilibria.
pub fn nash_map_step(spec: &GameSpec, profile: &MixedProfile) -> EqResult<MixedProfile> {
    profile.check_shape(spec.space())?;
    let mut out = Vec::with_capacity(profile.weights.len());
    for i in 0..profile.weights.len() {
        let values = strategy_values(spec, profile, i)?;
        let pv: f64 = values.iter().zip(&profile.weights[i]).map(|(v, p)| v * p).sum();
        let gains: Vec<f64> = values.iter().map(|v| (v - pv).max(0.0)).collect();
        let total: f64 = gains.iter().sum();
        let row: Vec<f64> = profile.weights[i]
            .iter()
            .zip(&gains)
            .map(|(p, g)| (p + g) / (1.0 + total))
            .collect();
        out.push(row);
    }
    Ok(MixedProfile { weights: out })
}

/// Result of checking a profile for profitable pure deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub ok: bool,
    pub worst_player: usize,
    pub worst_gain: f64,
    /// Best deviation gain per player (0 when no deviation helps).
    pub per_player_gain: Vec<f64>,
}

/// Certifies a profile: `ok` iff no player can gain more than `eps` by any
/// pure deviation.
pub fn verify_equilibrium(spec: &GameSpec, profile: &MixedProfile, eps: f64) -> EqResult<Verification> {
    profile.check_shape(spec.space())?;
    let mut per_player_gain = Vec::with_capacity(spec.num_players());
    for i in 0..spec.num_players() {
        let values = strategy_values(spec, profile, i)?;
        let pv: f64 = values.iter().zip(&profile.weights[i]).map(|(v, p)| v * p).sum();
        let best = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        per_player_gain.push((best - pv).max(0.0));
    }
    let (worst_player, worst_gain) = per_player_gain
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite gains"))
        .map(|(i, &g)| (i, g))
        .expect("at least one player");
    Ok(Verification { ok: worst_gain <= eps, worst_player, worst_gain, per_player_gain })
}

/// The product ket realizing a mixed profile: real nonnegative amplitude
/// `prod_i sqrt(p_i(s_i))` on each path.
pub fn profile_to_ket(space: &StrategySpace, profile: &MixedProfile) -> EqResult<PriceKet> {
    profile.check_shape(space)?;
    let mut amps = Vec::with_capacity(space.num_paths());
    for alpha in 0..space.num_paths() {
        let mut a = 1.0;
        for j in 0..space.num_players() {
            a *= profile.weights[j][space.strategy_of(alpha, j)].max(0.0).sqrt();
        }
        amps.push(Complex64::new(a, 0.0));
    }
    Ok(PriceKet::future_value(amps)?)
}

/// Which solver produced an [`EquilibriumResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Iterative,
    SupportEnum,
}

/// An equilibrium candidate with its certification data.
#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub profile: MixedProfile,
    pub ket: PriceKet,
    /// Present value per player at the profile.
    pub pv: Vec<f64>,
    /// Certified bound on the best deviation gain.
    pub epsilon: f64,
    pub method: SolveMethod,
    pub iterations: usize,
    /// False when the solver exhausted its budget and reports its best
    /// profile without certification.
    pub certified: bool,
}

impl EquilibriumResult {
    fn build(
        spec: &GameSpec,
        profile: MixedProfile,
        method: SolveMethod,
        iterations: usize,
        tol: f64,
    ) -> EqResult<Self> {
        let verification = verify_equilibrium(spec, &profile, tol)?;
        let ket = profile_to_ket(spec.space(), &profile)?;
        let pv = (0..spec.num_players())
            .map(|i| profile_payoff(spec, &profile, i))
            .collect::<EqResult<Vec<_>>>()?;
        Ok(Self {
            profile,
            ket,
            pv,
            epsilon: verification.worst_gain,
            method,
            iterations,
            certified: verification.ok,
        })
    }
}

/// Options for [`solve_iterative`].
#[derive(Debug, Clone, PartialEq)]
pub struct IterativeConfig {
    pub max_iter: usize,
    /// Blend factor toward the gain-map output per step, in (0, 1].
    pub damping: f64,
    pub restarts: usize,
    /// Certification tolerance on the best deviation gain.
    pub tol: f64,
    pub seed: u64,
}

impl Default for IterativeConfig {
    fn default() -> Self {
        Self { max_iter: 2000, damping: 0.5, restarts: 20, tol: 1e-9, seed: 0 }
    }
}

/// Outcome of the iterative solver across all restarts.
#[derive(Debug, Clone)]
pub struct IterativeOutcome {
    /// First certified result, or the best-epsilon profile flagged
    /// uncertified when no restart certified.
    pub result: EquilibriumResult,
    /// All certified profiles found, deduplicated at l-infinity distance 1e-4.
    pub distinct_certified: Vec<MixedProfile>,
}

/// Damped fixed-point iteration of the gain map with support polishing.
///
/// Each restart begins at the uniform profile (restart 0) or a seeded random
/// simplex point, blends toward the gain-map output by the damping factor,
/// and periodically attempts to solve the indifference system on the
/// currently supported strategies. A candidate is accepted only when
/// [`verify_equilibrium`] certifies it at the configured tolerance. When no
/// restart certifies, the best profile seen is returned with
/// `certified = false`.
pub fn solve_iterative(spec: &GameSpec, config: &IterativeConfig) -> EqResult<IterativeOutcome> {
    let space = spec.space();
    let mut distinct: Vec<MixedProfile> = Vec::new();
    let mut first_certified: Option<EquilibriumResult> = None;
    let mut best_uncertified: Option<(MixedProfile, f64, usize)> = None;

    for restart in 0..config.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(restart as u64));
        let mut profile = if restart == 0 {
            MixedProfile::uniform(space)
        } else {
            random_profile(space, &mut rng)
        };
        let mut iterations = 0;
        let mut certified_here: Option<MixedProfile> = None;

        'steps: for step in 0..config.max_iter {
            let mapped = nash_map_step(spec, &profile)?;
            let mut moved = 0.0f64;
            for (row, mapped_row) in profile.weights.iter_mut().zip(&mapped.weights) {
                for (p, m) in row.iter_mut().zip(mapped_row) {
                    let next = (1.0 - config.damping) * *p + config.damping * m;
                    moved = moved.max((next - *p).abs());
                    *p = next;
                }
                let sum: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= sum);
            }
            iterations += 1;

            let stalled = moved < 1e-13;
            if stalled || step % 25 == 24 || step + 1 == config.max_iter {
                // The ladder starts coarse: weights decaying toward a
                // boundary equilibrium shrink only harmonically, so they can
                // still be large when the support is already decided.
                for threshold in [0.3, 0.1, 0.03, 1e-2, 1e-6] {
                    if let Some(candidate) = polish(spec, &profile, threshold) {
                        if verify_equilibrium(spec, &candidate, config.tol)?.ok {
                            certified_here = Some(candidate);
                            break 'steps;
                        }
                    }
                }
            }
            if stalled {
                break;
            }
        }

        match certified_here {
            Some(candidate) => {
                if !distinct.iter().any(|p| p.linf_distance(&candidate) <= 1e-4) {
                    distinct.push(candidate.clone());
                }
                if first_certified.is_none() {
                    first_certified = Some(EquilibriumResult::build(
                        spec,
                        candidate,
                        SolveMethod::Iterative,
                        iterations,
                        config.tol,
                    )?);
                }
            }
            None => {
                let v = verify_equilibrium(spec, &profile, config.tol)?;
                let better = best_uncertified
                    .as_ref()
                    .map(|(_, eps, _)| v.worst_gain < *eps)
                    .unwrap_or(true);
                if better {
                    best_uncertified = Some((profile, v.worst_gain, iterations));
                }
            }
        }
    }

    let result = match first_certified {
        Some(r) => r,
        None => {
            let (profile, _, iterations) =
                best_uncertified.expect("at least one restart ran");
            EquilibriumResult::build(spec, profile, SolveMethod::Iterative, iterations, config.tol)?
        }
    };
    Ok(IterativeOutcome { result, distinct_certified: distinct })
}

fn random_profile(space: &StrategySpace, rng: &mut ChaCha8Rng) -> MixedProfile {
    let weights = space
        .dims()
        .iter()
        .map(|&d| {
            let mut row: Vec<f64> = (0..d).map(|_| -(rng.gen::<f64>().max(1e-300)).ln()).collect();
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= sum);
            row
        })
        .collect();
    MixedProfile { weights }
}

/// Solves the indifference system on the strategies the profile currently
/// supports, shrinking the support when the solution leaves the simplex.
/// Returns a full-length profile or `None` when no consistent solution
/// exists on any shrunken support.
fn polish(spec: &GameSpec, profile: &MixedProfile, threshold: f64) -> Option<MixedProfile> {
    let space = spec.space();
    let mut supports: Vec<Vec<usize>> = (0..space.num_players())
        .map(|i| {
            let s = profile.support(i, threshold);
            if s.is_empty() {
                // Keep at least the heaviest strategy.
                let best = profile.weights[i]
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
                    .map(|(f, _)| f)
                    .unwrap_or(0);
                vec![best]
            } else {
                s
            }
        })
        .collect();

    let max_shrinks: usize = space.dims().iter().sum();
    for _ in 0..=max_shrinks {
        let Some(solved) = solve_indifference(spec, &supports, profile) else {
            // Inconsistent or singular on this support: drop the weakest
            // supported strategy of any player that still has a choice.
            let mut weakest: Option<(usize, usize, f64)> = None;
            for (i, s) in supports.iter().enumerate() {
                if s.len() <= 1 {
                    continue;
                }
                for (k, &f) in s.iter().enumerate() {
                    let w = profile.weights[i][f];
                    if weakest.map(|(_, _, ww)| w < ww).unwrap_or(true) {
                        weakest = Some((i, k, w));
                    }
                }
            }
            let (i, k, _) = weakest?;
            supports[i].remove(k);
            continue;
        };
        // Locate the worst simplex violation across players.
        let mut worst: Option<(usize, usize, f64)> = None;
        for (i, row) in solved.iter().enumerate() {
            for (k, &w) in row.iter().enumerate() {
                if w < -1e-9 && worst.map(|(_, _, ww)| w < ww).unwrap_or(true) {
                    worst = Some((i, k, w));
                }
            }
        }
        match worst {
            None => {
                let mut weights = Vec::with_capacity(space.num_players());
                for (i, &d) in space.dims().iter().enumerate() {
                    let mut full = vec![0.0; d];
                    for (k, &f) in supports[i].iter().enumerate() {
                        full[f] = solved[i][k].max(0.0);
                    }
                    let sum: f64 = full.iter().sum();
                    if sum <= 0.0 {
                        return None;
                    }
                    full.iter_mut().for_each(|w| *w /= sum);
                    weights.push(full);
                }
                return Some(MixedProfile { weights });
            }
            Some((i, k, _)) => {
                if supports[i].len() <= 1 {
                    return None;
                }
                supports[i].remove(k);
            }
        }
    }
    None
}

/// Newton solve of the indifference system restricted to the given supports:
/// every supported strategy of a player earns that player's common value,
/// and each player's supported weights sum to 1. Linear for two players.
/// Returns per-player weights over the supports, or `None` on a singular
/// system or non-convergence.
fn solve_indifference(
    spec: &GameSpec,
    supports: &[Vec<usize>],
    start: &MixedProfile,
) -> Option<Vec<Vec<f64>>> {
    let space = spec.space();
    let n = space.num_players();
    let weight_count: usize = supports.iter().map(Vec::len).sum();
    let unknowns = weight_count + n;

    // Unknown layout: all supported weights player by player, then one
    // common value per player.
    let mut offsets = Vec::with_capacity(n);
    let mut acc = 0;
    for s in supports {
        offsets.push(acc);
        acc += s.len();
    }

    let mut x = nalgebra::DVector::<f64>::zeros(unknowns);
    for (i, s) in supports.iter().enumerate() {
        let total: f64 = s.iter().map(|&f| start.weights[i][f].max(0.0)).sum();
        for (k, &f) in s.iter().enumerate() {
            x[offsets[i] + k] = if total > 0.0 {
                start.weights[i][f].max(0.0) / total
            } else {
                1.0 / s.len() as f64
            };
        }
    }

    let full_weights = |x: &nalgebra::DVector<f64>| -> Vec<Vec<f64>> {
        let mut w: Vec<Vec<f64>> = space.dims().iter().map(|&d| vec![0.0; d]).collect();
        for (i, s) in supports.iter().enumerate() {
            for (k, &f) in s.iter().enumerate() {
                w[i][f] = x[offsets[i] + k];
            }
        }
        w
    };

    for iteration in 0..60 {
        let w = full_weights(&x);
        // Initial common-value guesses come from the current weights.
        if iteration == 0 {
            for i in 0..n {
                let values = strategy_values_raw(spec, &w, i);
                let v: f64 = supports[i].iter().map(|&f| values[f] * w[i][f]).sum();
                x[weight_count + i] = v;
            }
        }

        let w = full_weights(&x);
        let mut residual = nalgebra::DVector::<f64>::zeros(unknowns);
        let mut jac = nalgebra::DMatrix::<f64>::zeros(unknowns, unknowns);
        let mut row = 0;

        for i in 0..n {
            let values = strategy_values_raw(spec, &w, i);
            for &f in &supports[i] {
                residual[row] = values[f] - x[weight_count + i];
                jac[(row, weight_count + i)] = -1.0;
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    for (k, &g) in supports[j].iter().enumerate() {
                        jac[(row, offsets[j] + k)] = pair_value(spec, &w, i, f, j, g);
                    }
                }
                row += 1;
            }
        }
        for (i, s) in supports.iter().enumerate() {
            residual[row] = s.iter().enumerate().map(|(k, _)| x[offsets[i] + k]).sum::<f64>() - 1.0;
            for (k, _) in s.iter().enumerate() {
                jac[(row, offsets[i] + k)] = 1.0;
            }
            row += 1;
        }

        let err = residual.amax();
        if err <= 1e-12 {
            let mut out = Vec::with_capacity(n);
            for (i, s) in supports.iter().enumerate() {
                out.push((0..s.len()).map(|k| x[offsets[i] + k]).collect());
            }
            return Some(out);
        }

        let delta = jac.lu().solve(&(-residual))?;
        if !delta.iter().all(|d| d.is_finite()) {
            return None;
        }
        x += delta;
    }
    None
}

/// Strategy values against possibly unnormalized opponent weights.
fn strategy_values_raw(spec: &GameSpec, weights: &[Vec<f64>], player: usize) -> Vec<f64> {
    let space = spec.space();
    let mut values = vec![0.0; space.dims()[player]];
    for alpha in 0..space.num_paths() {
        let mut w = 1.0;
        for j in 0..space.num_players() {
            if j != player {
                w *= weights[j][space.strategy_of(alpha, j)];
            }
        }
        if w != 0.0 {
            values[space.strategy_of(alpha, player)] += spec.payoff(player, alpha) * w;
        }
    }
    let d = spec.discount();
    values.iter_mut().for_each(|v| *v *= d);
    values
}

/// Derivative of `player`'s value at pure `f` with respect to player `j`'s
/// weight on pure `g`: the payoff sum over paths pinning both strategies,
/// weighted by all remaining players.
fn pair_value(spec: &GameSpec, weights: &[Vec<f64>], player: usize, f: usize, j: usize, g: usize) -> f64 {
    let space = spec.space();
    let mut total = 0.0;
    for alpha in 0..space.num_paths() {
        if space.strategy_of(alpha, player) != f || space.strategy_of(alpha, j) != g {
            continue;
        }
        let mut w = 1.0;
        for k in 0..space.num_players() {
            if k != player && k != j {
                w *= weights[k][space.strategy_of(alpha, k)];
            }
        }
        total += spec.payoff(player, alpha) * w;
    }
    total * spec.discount()
}

/// A support pair the enumeration could not solve, with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedSupport {
    pub supports: [Vec<usize>; 2],
    pub reason: &'static str,
}

/// Everything the exact bimatrix oracle found.
#[derive(Debug, Clone)]
pub struct SupportEnumReport {
    /// Equilibria sorted lexicographically by their support pair.
    pub equilibria: Vec<EquilibriumResult>,
    /// Singular or inconsistent support pairs, for diagnostics.
    pub skipped: Vec<SkippedSupport>,
}

/// Exact equilibrium enumeration for two-player games.
///
/// Equal-size support pairs are enumerated in lexicographic order; each
/// square indifference system is solved directly, and solutions are kept
/// when they are nonnegative, undominated off support, and certified by
/// [`verify_equilibrium`]. Unequal support sizes cannot occur in
/// nondegenerate games and are not enumerated.
pub fn solve_support_enum(spec: &GameSpec) -> EqResult<SupportEnumReport> {
    let space = spec.space();
    if space.num_players() != 2 {
        return Err(EquilibriumError::NotBimatrix(space.num_players()));
    }
    let dims = [space.dims()[0], space.dims()[1]];
    if dims[0] > 16 || dims[1] > 16 {
        return Err(EquilibriumError::DimensionMismatch(format!(
            "support enumeration handles at most 16 strategies per player, game has {}x{}",
            dims[0], dims[1]
        )));
    }
    let uniform = MixedProfile::uniform(space);

    let mut pairs: Vec<[Vec<usize>; 2]> = Vec::new();
    for s0 in subsets(dims[0]) {
        for s1 in subsets(dims[1]) {
            if s0.len() == s1.len() {
                pairs.push([s0.clone(), s1]);
            }
        }
    }
    pairs.sort();

    let mut equilibria = Vec::new();
    let mut skipped = Vec::new();
    for pair in pairs {
        let supports = [pair[0].clone(), pair[1].clone()];
        let Some(solved) = solve_indifference(spec, &supports, &uniform) else {
            skipped.push(SkippedSupport { supports: pair, reason: "singular indifference system" });
            continue;
        };
        if solved.iter().flatten().any(|&w| w < -1e-9) {
            continue;
        }
        let mut weights: Vec<Vec<f64>> = dims.iter().map(|&d| vec![0.0; d]).collect();
        for (i, s) in pair.iter().enumerate() {
            for (k, &f) in s.iter().enumerate() {
                weights[i][f] = solved[i][k].max(0.0);
            }
            let sum: f64 = weights[i].iter().sum();
            weights[i].iter_mut().for_each(|w| *w /= sum);
        }
        let profile = MixedProfile { weights };
        let verification = verify_equilibrium(spec, &profile, 1e-9)?;
        if !verification.ok {
            // Off-support dominance: some unsupported strategy improves.
            continue;
        }
        equilibria.push(EquilibriumResult::build(
            spec,
            profile,
            SolveMethod::SupportEnum,
            1,
            1e-9,
        )?);
    }
    Ok(SupportEnumReport { equilibria, skipped })
}

/// Nonempty subsets of `0..d` as sorted index vectors, lexicographic.
fn subsets(d: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u32..(1 << d))
        .map(|mask| (0..d).filter(|&i| mask & (1 << i) != 0).collect())
        .collect();
    out.sort();
    out
}

/// Ket built by letting the follower best-respond to each pure strategy of
/// the leader, with the leader's amplitude split across the branches. Ties
/// in the follower's best response break toward the lowest strategy index.
///
/// The result is entangled (not a product ket) whenever the best response
/// varies with the leader's strategy; see [`schmidt_rank`].
pub fn sequential_best_response_ket(
    spec: &GameSpec,
    leader: usize,
    weights: &[Complex64],
) -> EqResult<PriceKet> {
    let space = spec.space();
    if space.num_players() != 2 {
        return Err(EquilibriumError::NotBimatrix(space.num_players()));
    }
    if leader > 1 {
        return Err(EquilibriumError::DimensionMismatch(format!("leader index {leader} out of range")));
    }
    let follower = 1 - leader;
    if weights.len() != space.dims()[leader] {
        return Err(EquilibriumError::DimensionMismatch(format!(
            "{} weights for {} leader strategies",
            weights.len(),
            space.dims()[leader]
        )));
    }
    let total: f64 = weights.iter().map(|w| w.norm_sqr()).sum();
    if (total - 1.0).abs() > crate::CONSTRUCTION_TOL {
        return Err(EquilibriumError::Game(GameError::NormMismatch {
            expected: 1.0,
            actual: total,
            tol: crate::CONSTRUCTION_TOL,
        }));
    }

    let mut amps = vec![Complex64::new(0.0, 0.0); space.num_paths()];
    for (s, &w) in weights.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for g in 0..space.dims()[follower] {
            let mut strategies = vec![0usize; 2];
            strategies[leader] = s;
            strategies[follower] = g;
            let alpha = space.path_index(&strategies)?;
            let payoff = spec.payoff(follower, alpha);
            if best.map(|(_, b)| payoff > b).unwrap_or(true) {
                best = Some((g, payoff));
            }
        }
        let (g, _) = best.expect("follower has at least one strategy");
        let mut strategies = vec![0usize; 2];
        strategies[leader] = s;
        strategies[follower] = g;
        amps[space.path_index(&strategies)?] = w;
    }
    Ok(PriceKet::future_value(amps)?)
}

/// Number of nonzero Schmidt coefficients of a two-player game-basis ket:
/// 1 for product kets, at least 2 for entangled ones.
pub fn schmidt_rank(space: &StrategySpace, ket: &PriceKet, tol: f64) -> EqResult<usize> {
    if space.num_players() != 2 {
        return Err(EquilibriumError::NotBimatrix(space.num_players()));
    }
    if ket.len() != space.num_paths() {
        return Err(EquilibriumError::Game(GameError::BasisMismatch {
            operator_len: space.num_paths(),
            ket_len: ket.len(),
        }));
    }
    let (d0, d1) = (space.dims()[0], space.dims()[1]);
    // Rows indexed by the second (outer) player, columns by the first.
    let m = nalgebra::DMatrix::<Complex64>::from_fn(d1, d0, |r, c| ket.amplitudes()[r * d0 + c]);
    let svd = m.svd(false, false);
    let max_sv = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    if max_sv == 0.0 {
        return Ok(0);
    }
    Ok(svd.singular_values.iter().filter(|&&s| s > tol * max_sv).count())
}
