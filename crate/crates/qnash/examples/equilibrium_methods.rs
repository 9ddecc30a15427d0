//! The two equilibrium solvers side by side: exact support enumeration and
//! the damped gain-map iteration, with certification and the phase-gauge
//! freedom of equilibrium kets.
//!
//! Run with `cargo run --example equilibrium_methods`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use qnash::equilibrium::{
    solve_iterative, solve_support_enum, verify_equilibrium, IterativeConfig,
};
use qnash::game::{apply_unitary, pricing_matrices, GameSpec, PlayerDef};

fn main() {
    let spec = GameSpec::two_company();

    // Exact: enumerate supports, solve the indifference systems.
    let exact = solve_support_enum(&spec).unwrap();
    println!("support enumeration found {} certified equilibria:", exact.equilibria.len());
    for eq in &exact.equilibria {
        println!("  weights {:?}  epsilon {:.3e}", eq.profile.weights, eq.epsilon);
    }

    // Iterative: damped fixed-point steps on the gain map, restarted from
    // random simplex points, with support polishing.
    let outcome = solve_iterative(&spec, &IterativeConfig::default()).unwrap();
    println!(
        "\niterative solver: weights {:?} after {} iterations (certified: {})",
        outcome.result.profile.weights, outcome.result.iterations, outcome.result.certified
    );
    println!("distinct certified profiles across restarts: {}", outcome.distinct_certified.len());

    let agreement = exact.equilibria[0].profile.linf_distance(&outcome.result.profile);
    println!("methods agree within {agreement:.3e}");

    // Certification is a first-class check, not a solver side effect.
    let check = verify_equilibrium(&spec, &outcome.result.profile, 1e-9).unwrap();
    println!(
        "verification: ok {} (worst deviation gain {:.3e} by player {})",
        check.ok, check.worst_gain, check.worst_player
    );

    // Any diagonal phase rotation leaves the squared amplitudes, hence the
    // equilibrium, untouched.
    let n = spec.num_paths();
    let phases = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            Complex64::from_polar(1.0, 0.7 * (r as f64 + 1.0))
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let rotated = apply_unitary(&exact.equilibria[0].ket, &phases, 1e-12).unwrap();
    let weights = pricing_matrices(spec.space(), &rotated).unwrap();
    let profile = qnash::equilibrium::MixedProfile {
        weights: weights.into_iter().map(|m| m.weights).collect(),
    };
    let still_ok = verify_equilibrium(&spec, &profile, 1e-9).unwrap().ok;
    println!("gauge-rotated ket still certifies: {still_ok}");

    // A three-player game goes through the iterative path; enumeration is
    // bimatrix-only.
    let spec3 = GameSpec::new(
        vec![
            PlayerDef { name: "P0".into(), strategies: vec!["x".into(), "y".into()] },
            PlayerDef { name: "P1".into(), strategies: vec!["x".into(), "y".into()] },
            PlayerDef { name: "P2".into(), strategies: vec!["x".into(), "y".into()] },
        ],
        vec![
            vec![3.0, 0.0, 3.0, 0.0, 3.0, 0.0, 3.0, 0.0],
            vec![2.0, 2.0, 0.0, 0.0, 2.0, 2.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        ],
        1.0,
    )
    .unwrap();
    let outcome3 = solve_iterative(&spec3, &IterativeConfig::default()).unwrap();
    println!(
        "\nthree-player dominant-strategy game: weights {:?} (certified: {})",
        outcome3.result.profile.weights, outcome3.result.certified
    );
}
