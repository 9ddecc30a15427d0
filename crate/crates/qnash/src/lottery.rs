//! Single-bet lottery entanglement: joint game-lottery kets, the lottery
//! economy projector, partial traces, and rational beliefs.
//!
//! The lottery has exactly one outcome per game path. The joint basis
//! `|path alpha, outcome omega⟩` is indexed flat as `alpha * N + omega`, the
//! game factor outermost, which matches the joint-basis lift used by
//! [`crate::game::present_value`]. Entangling a solved game ket places its
//! amplitudes on the diagonal `omega = alpha`, so the lottery pays exactly
//! when its matching path is played. The lottery economy operator is the
//! projector onto that diagonal; entangled kets are its fixed points, and
//! anything off the diagonal is annihilated (reported as lost mass).
//!
//! Diagonal kets are stored sparsely (one amplitude per path); the dense
//! representation exists for projector tests and externally supplied joint
//! states, and is capped at [`DENSE_MAX`] paths.

use crate::game::{GameError, Normalization, PayoffOperator, PriceKet};
use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Largest path count for which dense joint states and density matrices are
/// materialized (`N^2` complex entries).
pub const DENSE_MAX: usize = 1024;

#[derive(Debug, Error)]
pub enum LotteryError {
    #[error("dense joint storage needs a square amplitude count, got {len}")]
    NotSquare { len: usize },
    #[error("{num_paths} paths exceeds the dense-storage cap {DENSE_MAX}")]
    TooLarge { num_paths: usize },
    #[error("joint ket has off-diagonal support at flat index {index}")]
    OffDiagonalSupport { index: usize },
    #[error("operation undefined on a zero-norm ket")]
    ZeroNorm,
    #[error("matrix is not Hermitian: max asymmetry {deviation}")]
    NotHermitian { deviation: f64 },
    #[error("density operator trace is {trace}, expected 1")]
    TraceMismatch { trace: f64 },
    #[error("density operator has negative diagonal entry {value}")]
    NegativeDiagonal { value: f64 },
    #[error(transparent)]
    Game(#[from] GameError),
}

pub type LotteryResult<T> = Result<T, LotteryError>;

#[derive(Debug, Clone, PartialEq)]
enum JointStorage {
    /// One amplitude per path, supported only on `omega = alpha`.
    Diagonal(Vec<Complex64>),
    /// Row-major `N x N` amplitudes, flat index `alpha * N + omega`.
    Dense(Vec<Complex64>),
}

/// A complex amplitude vector over the joint game-lottery basis.
///
/// Properly constructed kets have squared moduli summing to the discount
/// (raw) or to 1 (future value); the output of [`apply_lottery_operator`] is
/// generally unnormalized and reports its surviving mass instead.
#[derive(Debug, Clone, PartialEq)]
pub struct JointKet {
    storage: JointStorage,
    num_paths: usize,
    /// Total squared amplitude a properly normalized instance carries;
    /// 1 for future-value kets.
    discount: f64,
}

impl JointKet {
    /// A ket supported on the diagonal only, validated against the given
    /// normalization within [`crate::CONSTRUCTION_TOL`].
    pub fn diagonal(amplitudes: Vec<Complex64>, normalization: Normalization) -> LotteryResult<Self> {
        let discount = expected_mass(normalization)?;
        let total: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !total.is_finite() || (total - discount).abs() > crate::CONSTRUCTION_TOL {
            return Err(GameError::NormMismatch {
                expected: discount,
                actual: total,
                tol: crate::CONSTRUCTION_TOL,
            }
            .into());
        }
        let num_paths = amplitudes.len();
        Ok(Self { storage: JointStorage::Diagonal(amplitudes), num_paths, discount })
    }

    /// A ket with arbitrary joint support, `N^2` amplitudes at flat index
    /// `alpha * N + omega`, validated like [`JointKet::diagonal`].
    pub fn dense(amplitudes: Vec<Complex64>, normalization: Normalization) -> LotteryResult<Self> {
        let num_paths = integer_sqrt(amplitudes.len())
            .ok_or(LotteryError::NotSquare { len: amplitudes.len() })?;
        if num_paths > DENSE_MAX {
            return Err(LotteryError::TooLarge { num_paths });
        }
        let discount = expected_mass(normalization)?;
        let total: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !total.is_finite() || (total - discount).abs() > crate::CONSTRUCTION_TOL {
            return Err(GameError::NormMismatch {
                expected: discount,
                actual: total,
                tol: crate::CONSTRUCTION_TOL,
            }
            .into());
        }
        Ok(Self { storage: JointStorage::Dense(amplitudes), num_paths, discount })
    }

    fn from_projection(amplitudes: Vec<Complex64>, discount: f64) -> Self {
        let num_paths = amplitudes.len();
        Self { storage: JointStorage::Diagonal(amplitudes), num_paths, discount }
    }

    pub fn num_paths(&self) -> usize {
        self.num_paths
    }

    /// The squared-amplitude total this ket is supposed to carry (1 for
    /// future-value constructions). The actual total is [`Self::norm_sqr`].
    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn norm_sqr(&self) -> f64 {
        match &self.storage {
            JointStorage::Diagonal(a) | JointStorage::Dense(a) => {
                a.iter().map(|x| x.norm_sqr()).sum()
            }
        }
    }

    /// Amplitude on `|path alpha, outcome omega⟩`.
    pub fn amplitude(&self, alpha: usize, omega: usize) -> Complex64 {
        match &self.storage {
            JointStorage::Diagonal(a) => {
                if alpha == omega {
                    a[alpha]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            JointStorage::Dense(a) => a[alpha * self.num_paths + omega],
        }
    }

    /// True when the ket's support lies entirely on `omega = alpha`.
    pub fn is_entangled_diagonal(&self) -> bool {
        match &self.storage {
            JointStorage::Diagonal(_) => true,
            JointStorage::Dense(a) => {
                let n = self.num_paths;
                a.iter().enumerate().all(|(idx, x)| idx / n == idx % n || x.norm_sqr() == 0.0)
            }
        }
    }

    /// The diagonal amplitudes `psi(alpha, alpha)`.
    pub fn diagonal_amplitudes(&self) -> Vec<Complex64> {
        match &self.storage {
            JointStorage::Diagonal(a) => a.clone(),
            JointStorage::Dense(a) => {
                (0..self.num_paths).map(|i| a[i * self.num_paths + i]).collect()
            }
        }
    }

    /// Rescales to unit norm, keeping the support.
    pub fn renormalized(&self) -> LotteryResult<JointKet> {
        let norm = self.norm_sqr().sqrt();
        if norm <= 0.0 {
            return Err(LotteryError::ZeroNorm);
        }
        let scale = 1.0 / norm;
        let storage = match &self.storage {
            JointStorage::Diagonal(a) => {
                JointStorage::Diagonal(a.iter().map(|x| x * scale).collect())
            }
            JointStorage::Dense(a) => JointStorage::Dense(a.iter().map(|x| x * scale).collect()),
        };
        Ok(JointKet { storage, num_paths: self.num_paths, discount: 1.0 })
    }

    /// The same state as a [`PriceKet`] over the `N^2` joint basis, for
    /// pricing payoff operators lifted to the game factor.
    pub fn to_price_ket(&self) -> LotteryResult<PriceKet> {
        if self.num_paths > DENSE_MAX {
            return Err(LotteryError::TooLarge { num_paths: self.num_paths });
        }
        let n = self.num_paths;
        let mut amps = vec![Complex64::new(0.0, 0.0); n * n];
        match &self.storage {
            JointStorage::Diagonal(a) => {
                for (i, &x) in a.iter().enumerate() {
                    amps[i * n + i] = x;
                }
            }
            JointStorage::Dense(a) => amps.copy_from_slice(a),
        }
        let ket = if (self.discount - 1.0).abs() <= f64::EPSILON {
            PriceKet::future_value(amps)?
        } else {
            PriceKet::raw(amps, self.discount)?
        };
        Ok(ket)
    }
}

fn expected_mass(normalization: Normalization) -> LotteryResult<f64> {
    match normalization {
        Normalization::FutureValue => Ok(1.0),
        Normalization::Raw { discount } => {
            if !discount.is_finite() || discount <= 0.0 {
                Err(GameError::InvalidSpec(format!(
                    "discount must be positive and finite, got {discount}"
                ))
                .into())
            } else {
                Ok(discount)
            }
        }
    }
}

fn integer_sqrt(len: usize) -> Option<usize> {
    let n = (len as f64).sqrt().round() as usize;
    (n * n == len).then_some(n)
}

/// Entangles a game-basis ket with the lottery: amplitude `q(alpha)` moves to
/// the joint diagonal element `|alpha, alpha⟩`. Norm and normalization are
/// preserved.
pub fn entangle(game_ket: &PriceKet) -> JointKet {
    let discount = match game_ket.normalization() {
        Normalization::FutureValue => 1.0,
        Normalization::Raw { discount } => discount,
    };
    JointKet {
        storage: JointStorage::Diagonal(game_ket.amplitudes().to_vec()),
        num_paths: game_ket.len(),
        discount,
    }
}

/// Applies the lottery economy projector: diagonal components survive,
/// off-diagonal components are annihilated. Returns the projected ket
/// (generally unnormalized) and its surviving squared norm.
pub fn apply_lottery_operator(ket: &JointKet) -> (JointKet, f64) {
    let diagonal = ket.diagonal_amplitudes();
    let mass: f64 = diagonal.iter().map(|a| a.norm_sqr()).sum();
    (JointKet::from_projection(diagonal, ket.discount()), mass)
}

/// A Hermitian, unit-trace, nonnegative-diagonal operator: the statistical
/// state one side of the joint system sees after the other is traced out.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace, and diagonal nonnegativity within
    /// [`crate::EXACT_TOL`] (diagonal entries may undershoot zero by at most
    /// 1e-12).
    pub fn new(matrix: DMatrix<Complex64>) -> LotteryResult<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(LotteryError::NotSquare { len: matrix.len() });
        }
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                asym = asym.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if asym > crate::EXACT_TOL {
            return Err(LotteryError::NotHermitian { deviation: asym });
        }
        let trace: f64 = (0..n).map(|i| matrix[(i, i)].re).sum();
        if !trace.is_finite() || (trace - 1.0).abs() > crate::EXACT_TOL {
            return Err(LotteryError::TraceMismatch { trace });
        }
        if let Some(bad) = (0..n).map(|i| matrix[(i, i)].re).find(|&v| v < -1e-12) {
            return Err(LotteryError::NegativeDiagonal { value: bad });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// Eigenvalues in descending order. Real because the operator is
    /// Hermitian.
    pub fn spectrum(&self) -> Vec<f64> {
        let eigen = self.matrix.clone().symmetric_eigen();
        let mut values: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
        values
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.spectrum().into_iter().filter(|&v| v > tol).count()
    }
}

fn guard_dense(num_paths: usize) -> LotteryResult<()> {
    if num_paths > DENSE_MAX {
        return Err(LotteryError::TooLarge { num_paths });
    }
    Ok(())
}

/// Reduced state of the game factor: `rho[alpha, alpha'] = sum_omega
/// psi(alpha, omega) conj(psi(alpha', omega))`, divided by the ket's squared
/// norm so the trace is exactly 1.
pub fn trace_out_lottery(ket: &JointKet) -> LotteryResult<DensityOperator> {
    guard_dense(ket.num_paths())?;
    let norm_sqr = ket.norm_sqr();
    if norm_sqr <= 0.0 {
        return Err(LotteryError::ZeroNorm);
    }
    let n = ket.num_paths();
    let matrix = match &ket.storage {
        JointStorage::Diagonal(a) => DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(a[r].norm_sqr() / norm_sqr, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }),
        JointStorage::Dense(a) => DMatrix::from_fn(n, n, |r, c| {
            let mut acc = Complex64::new(0.0, 0.0);
            for omega in 0..n {
                acc += a[r * n + omega] * a[c * n + omega].conj();
            }
            acc / norm_sqr
        }),
    };
    DensityOperator::new(matrix)
}

/// Reduced state of the lottery factor: `rho[omega, omega'] = sum_alpha
/// psi(alpha, omega) conj(psi(alpha, omega'))`, divided by the ket's squared
/// norm.
pub fn trace_out_game(ket: &JointKet) -> LotteryResult<DensityOperator> {
    guard_dense(ket.num_paths())?;
    let norm_sqr = ket.norm_sqr();
    if norm_sqr <= 0.0 {
        return Err(LotteryError::ZeroNorm);
    }
    let n = ket.num_paths();
    let matrix = match &ket.storage {
        JointStorage::Diagonal(a) => DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(a[r].norm_sqr() / norm_sqr, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }),
        JointStorage::Dense(a) => DMatrix::from_fn(n, n, |r, c| {
            let mut acc = Complex64::new(0.0, 0.0);
            for alpha in 0..n {
                acc += a[alpha * n + r] * a[alpha * n + c].conj();
            }
            acc / norm_sqr
        }),
    };
    DensityOperator::new(matrix)
}

/// Nonnegative weights over lottery outcomes summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefVector {
    weights: Vec<f64>,
}

impl BeliefVector {
    pub fn new(weights: Vec<f64>) -> LotteryResult<Self> {
        if weights.iter().any(|&w| !w.is_finite() || w < -crate::CONSTRUCTION_TOL) {
            return Err(GameError::InvalidSpec(
                "belief weights must be finite and nonnegative".into(),
            )
            .into());
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > crate::CONSTRUCTION_TOL {
            return Err(GameError::NormMismatch {
                expected: 1.0,
                actual: total,
                tol: crate::CONSTRUCTION_TOL,
            }
            .into());
        }
        let weights = weights.into_iter().map(|w| w.max(0.0)).collect();
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Rational beliefs of a diagonal joint ket: `|psi(omega, omega)|^2 / d`,
/// the capitalized Arrow-Debreu prices of the outcomes. The ket's squared
/// norm must equal `d` (1 for future-value kets), so the discount divides
/// out of the belief.
pub fn rational_beliefs(ket: &JointKet, d: f64) -> LotteryResult<BeliefVector> {
    if !d.is_finite() || d <= 0.0 {
        return Err(GameError::InvalidSpec(format!(
            "discount must be positive and finite, got {d}"
        ))
        .into());
    }
    if let JointStorage::Dense(a) = &ket.storage {
        let n = ket.num_paths;
        if let Some(bad) =
            (0..a.len()).find(|&idx| idx / n != idx % n && a[idx].norm_sqr() > 0.0)
        {
            return Err(LotteryError::OffDiagonalSupport { index: bad });
        }
    }
    let total = ket.norm_sqr();
    if (total - d).abs() > crate::CONSTRUCTION_TOL {
        return Err(GameError::NormMismatch {
            expected: d,
            actual: total,
            tol: crate::CONSTRUCTION_TOL,
        }
        .into());
    }
    BeliefVector::new(ket.diagonal_amplitudes().iter().map(|a| a.norm_sqr() / d).collect())
}

/// Present value of a game payoff operator under a joint ket, through the
/// joint-basis lift of [`crate::game::present_value`].
pub fn joint_present_value(ket: &JointKet, op: &PayoffOperator, d: f64) -> LotteryResult<f64> {
    Ok(crate::game::present_value(&ket.to_price_ket()?, op, d)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameSpec;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn equilibrium_ket() -> PriceKet {
        let a = [(5.0f64 / 16.0).sqrt(), (11.0f64 / 16.0).sqrt()];
        let b = [(0.5f64).sqrt(), (0.5f64).sqrt()];
        PriceKet::future_value(vec![c(b[0] * a[0]), c(b[0] * a[1]), c(b[1] * a[0]), c(b[1] * a[1])])
            .unwrap()
    }

    fn random_unit(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amps: Vec<Complex64> =
            (0..n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        amps
    }

    #[test]
    fn entangling_moves_amplitudes_to_the_diagonal() {
        let joint = entangle(&equilibrium_ket());
        assert!(joint.is_entangled_diagonal());
        assert_eq!(joint.num_paths(), 4);
        assert!((joint.norm_sqr() - 1.0).abs() < 1e-12);
        let expected = [5.0 / 32.0, 11.0 / 32.0, 5.0 / 32.0, 11.0 / 32.0];
        for (i, e) in expected.iter().enumerate() {
            assert!((joint.amplitude(i, i).norm_sqr() - e).abs() < 1e-12);
        }
        assert_eq!(joint.amplitude(0, 1), c(0.0));
        assert_eq!(joint.amplitude(3, 1), c(0.0));
    }

    #[test]
    fn entangling_a_deterministic_ket_selects_one_joint_element() {
        let game = PriceKet::future_value(vec![c(0.0), c(0.0), c(1.0), c(0.0)]).unwrap();
        let joint = entangle(&game);
        assert!((joint.amplitude(2, 2).norm_sqr() - 1.0).abs() < 1e-15);
        assert!((joint.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn entangled_kets_are_fixed_points_of_the_projector() {
        let joint = entangle(&equilibrium_ket());
        let (projected, mass) = apply_lottery_operator(&joint);
        assert!((mass - 1.0).abs() < 1e-12);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(projected.amplitude(i, j), joint.amplitude(i, j));
            }
        }
    }

    #[test]
    fn uniform_dense_ket_keeps_one_over_n_mass() {
        let amps = vec![c(0.25); 16];
        let joint = JointKet::dense(amps, Normalization::FutureValue).unwrap();
        let (projected, mass) = apply_lottery_operator(&joint);
        assert!((mass - 0.25).abs() < 1e-12);
        assert!(projected.is_entangled_diagonal());
        assert!((projected.norm_sqr() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn purely_off_diagonal_kets_are_annihilated() {
        let mut amps = vec![c(0.0); 16];
        amps[1] = c((0.5f64).sqrt());
        amps[4 + 2] = c((0.5f64).sqrt());
        let joint = JointKet::dense(amps, Normalization::FutureValue).unwrap();
        let (projected, mass) = apply_lottery_operator(&joint);
        assert_eq!(mass, 0.0);
        assert_eq!(projected.norm_sqr(), 0.0);
    }

    #[test]
    fn lottery_projector_is_idempotent() {
        let amps = random_unit(16, 5);
        let joint = JointKet::dense(amps, Normalization::FutureValue).unwrap();
        let (once, mass_once) = apply_lottery_operator(&joint);
        let (twice, mass_twice) = apply_lottery_operator(&once);
        assert_eq!(once, twice);
        assert!((mass_twice - once.norm_sqr()).abs() < 1e-15);
        assert!(mass_once <= 1.0 + 1e-12);
    }

    #[test]
    fn tracing_out_the_lottery_recovers_path_prices() {
        let joint = entangle(&equilibrium_ket());
        let rho = trace_out_lottery(&joint).unwrap();
        let expected = [5.0 / 32.0, 11.0 / 32.0, 5.0 / 32.0, 11.0 / 32.0];
        for (got, want) in rho.diagonal().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(rho.matrix()[(i, j)], c(0.0));
                }
            }
        }
    }

    #[test]
    fn tracing_out_the_game_gives_the_same_outcome_prices() {
        let joint = entangle(&equilibrium_ket());
        let rho = trace_out_game(&joint).unwrap();
        let expected = [5.0 / 32.0, 11.0 / 32.0, 5.0 / 32.0, 11.0 / 32.0];
        for (got, want) in rho.diagonal().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn single_element_joint_ket_reduces_to_a_pure_projector() {
        let mut amps = vec![c(0.0); 9];
        amps[3 * 1 + 1] = c(1.0);
        let joint = JointKet::dense(amps, Normalization::FutureValue).unwrap();
        let rho = trace_out_lottery(&joint).unwrap();
        let spectrum = rho.spectrum();
        assert!((spectrum[0] - 1.0).abs() < 1e-12);
        assert!(spectrum[1].abs() < 1e-12);
        assert_eq!(rho.rank(1e-9), 1);
    }

    #[test]
    fn diagonal_ket_spectra_match_squared_amplitudes() {
        let amps = random_unit(5, 9);
        let joint = JointKet::diagonal(amps.clone(), Normalization::FutureValue).unwrap();
        let rho = trace_out_lottery(&joint).unwrap();
        let mut expected: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
        expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (got, want) in rho.spectrum().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_partial_traces_match_a_naive_loop() {
        let n = 3;
        let amps = random_unit(n * n, 23);
        let joint = JointKet::dense(amps.clone(), Normalization::FutureValue).unwrap();
        let rho_game = trace_out_lottery(&joint).unwrap();
        let rho_lottery = trace_out_game(&joint).unwrap();
        for r in 0..n {
            for c_ in 0..n {
                let mut game = Complex64::new(0.0, 0.0);
                let mut lottery = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    game += amps[r * n + k] * amps[c_ * n + k].conj();
                    lottery += amps[k * n + r] * amps[k * n + c_].conj();
                }
                assert!((rho_game.matrix()[(r, c_)] - game).norm() < 1e-12);
                assert!((rho_lottery.matrix()[(r, c_)] - lottery).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn product_joint_ket_reduces_to_the_lottery_factor() {
        let q = random_unit(3, 1);
        let r = random_unit(3, 2);
        let amps: Vec<Complex64> =
            (0..9).map(|idx| q[idx / 3] * r[idx % 3]).collect();
        let joint = JointKet::dense(amps, Normalization::FutureValue).unwrap();
        let rho = trace_out_game(&joint).unwrap();
        for (got, want) in rho.diagonal().iter().zip(r.iter().map(|x| x.norm_sqr())) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(rho.rank(1e-9), 1);
    }

    #[test]
    fn both_reductions_share_their_spectrum() {
        for seed in [3, 14, 15] {
            let amps = random_unit(16, seed);
            let joint = JointKet::dense(amps, Normalization::FutureValue).unwrap();
            let a = trace_out_lottery(&joint).unwrap().spectrum();
            let b = trace_out_game(&joint).unwrap().spectrum();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-9, "spectra diverge: {x} vs {y}");
            }
        }
    }

    #[test]
    fn entangled_kets_with_spread_support_are_mixed_states() {
        let joint = entangle(&equilibrium_ket());
        assert!(trace_out_lottery(&joint).unwrap().rank(1e-9) >= 2);
    }

    #[test]
    fn rational_beliefs_recover_equilibrium_prices() {
        let joint = entangle(&equilibrium_ket());
        let beliefs = rational_beliefs(&joint, 1.0).unwrap();
        let expected = [5.0 / 32.0, 11.0 / 32.0, 5.0 / 32.0, 11.0 / 32.0];
        for (got, want) in beliefs.weights().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_ket_yields_vertex_beliefs() {
        let game = PriceKet::future_value(vec![c(0.0), c(1.0), c(0.0), c(0.0)]).unwrap();
        let beliefs = rational_beliefs(&entangle(&game), 1.0).unwrap();
        assert_eq!(beliefs.weights(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn discount_divides_out_of_rational_beliefs() {
        let d: f64 = 0.8;
        let scale = d.sqrt();
        let scaled: Vec<Complex64> =
            equilibrium_ket().amplitudes().iter().map(|a| a * scale).collect();
        let raw = PriceKet::raw(scaled, d).unwrap();
        let beliefs = rational_beliefs(&entangle(&raw), d).unwrap();
        let expected = [5.0 / 32.0, 11.0 / 32.0, 5.0 / 32.0, 11.0 / 32.0];
        for (got, want) in beliefs.weights().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn beliefs_reject_mismatched_mass_and_off_diagonal_support() {
        let joint = entangle(&equilibrium_ket());
        assert!(matches!(
            rational_beliefs(&joint, 0.5),
            Err(LotteryError::Game(GameError::NormMismatch { .. }))
        ));

        let amps = random_unit(16, 77);
        let dense = JointKet::dense(amps, Normalization::FutureValue).unwrap();
        assert!(matches!(
            rational_beliefs(&dense, 1.0),
            Err(LotteryError::OffDiagonalSupport { .. })
        ));

        let (projected, _) = apply_lottery_operator(&dense);
        assert!(matches!(
            rational_beliefs(&projected, 1.0),
            Err(LotteryError::Game(GameError::NormMismatch { .. }))
        ));
        let renormalized = projected.renormalized().unwrap();
        assert!(rational_beliefs(&renormalized, 1.0).is_ok());
    }

    #[test]
    fn beliefs_match_the_lottery_reduction_diagonal() {
        let amps = random_unit(6, 31);
        let joint = JointKet::diagonal(amps, Normalization::FutureValue).unwrap();
        let beliefs = rational_beliefs(&joint, 1.0).unwrap();
        let rho = trace_out_game(&joint).unwrap();
        for (b, d) in beliefs.weights().iter().zip(rho.diagonal()) {
            assert!((b - d).abs() < 1e-12);
        }
    }

    #[test]
    fn oversized_dense_states_are_rejected() {
        let n = DENSE_MAX + 1;
        let mut amps = vec![c(0.0); n];
        amps[0] = c(1.0);
        let joint = JointKet::diagonal(amps, Normalization::FutureValue).unwrap();
        assert!(matches!(trace_out_lottery(&joint), Err(LotteryError::TooLarge { .. })));
        assert!(matches!(joint.to_price_ket(), Err(LotteryError::TooLarge { .. })));
    }

    #[test]
    fn dense_storage_requires_square_counts() {
        let amps = vec![c(1.0), c(0.0), c(0.0)];
        assert!(matches!(
            JointKet::dense(amps, Normalization::FutureValue),
            Err(LotteryError::NotSquare { len: 3 })
        ));
    }

    #[test]
    fn joint_present_values_agree_with_the_game_basis() {
        let spec = GameSpec::two_company();
        let ket = equilibrium_ket();
        let joint = entangle(&ket);
        for player in 0..2 {
            let op = spec.payoff_operator(player).unwrap();
            let direct = crate::game::present_value(&ket, &op, 1.0).unwrap();
            let lifted = joint_present_value(&joint, &op, 1.0).unwrap();
            assert!((direct - lifted).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn partial_traces_preserve_unit_trace(seed in 0u64..2000, n in 2usize..=4) {
            let amps = random_unit(n * n, seed);
            let joint = JointKet::dense(amps, Normalization::FutureValue).unwrap();
            let game = trace_out_lottery(&joint).unwrap();
            let lottery = trace_out_game(&joint).unwrap();
            prop_assert!((game.trace() - 1.0).abs() <= 1e-12);
            prop_assert!((lottery.trace() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn diagonal_beliefs_coincide_with_outcome_prices(seed in 0u64..2000, n in 2usize..=6) {
            let amps = random_unit(n, seed);
            let joint = JointKet::diagonal(amps, Normalization::FutureValue).unwrap();
            let beliefs = rational_beliefs(&joint, 1.0).unwrap();
            let total: f64 = beliefs.weights().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            let rho = trace_out_game(&joint).unwrap();
            for (b, d) in beliefs.weights().iter().zip(rho.diagonal()) {
                prop_assert!((b - d).abs() <= 1e-12);
            }
        }
    }
}
