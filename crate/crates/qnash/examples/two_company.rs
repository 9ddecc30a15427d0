//! The bundled two-company technology adoption game, solved end to end:
//! mixed equilibrium, price-amplitude ket, and present values.
//!
//! Run with `cargo run --example two_company`.

use qnash::equilibrium::solve_support_enum;
use qnash::game::{pricing_matrices, GameSpec};

fn main() {
    let spec = GameSpec::two_company();

    println!("game: {} joint strategy paths", spec.num_paths());
    for path in spec.space().enumerate_paths() {
        println!(
            "  path {}: {}  payoffs ({}, {})",
            path.index,
            spec.path_label(&path),
            spec.payoff(0, path.index),
            spec.payoff(1, path.index),
        );
    }

    let report = solve_support_enum(&spec).expect("two players");
    let eq = &report.equilibria[0];
    println!("\nequilibrium (epsilon {:.3e}, certified: {})", eq.epsilon, eq.certified);
    for (i, player) in spec.players().iter().enumerate() {
        println!("  {}: weights {:?}", player.name, eq.profile.weights[i]);
    }

    // The ket's squared amplitudes are capitalized state prices: each path
    // price is the product of the players' strategy weights.
    println!("\nprice-amplitude ket:");
    for (path, amp) in spec.space().enumerate_paths().iter().zip(eq.ket.amplitudes()) {
        println!(
            "  {}  amplitude {:.9}  state price {:.9}",
            spec.path_label(path),
            amp.re,
            amp.norm_sqr()
        );
    }

    // Reading the weights back off the ket recovers the mixed profile.
    let matrices = pricing_matrices(spec.space(), &eq.ket).unwrap();
    for (player, matrix) in spec.players().iter().zip(&matrices) {
        println!("  recovered weights for {}: {:?}", player.name, matrix.weights);
    }

    println!("\npresent values:");
    for (player, pv) in spec.players().iter().zip(&eq.pv) {
        println!("  {}: {:.9}", player.name, pv);
    }
    assert!((eq.pv[0] - 1.75).abs() < 1e-12);
    assert!((eq.pv[1] - 2.15625).abs() < 1e-12);
    println!("\nclosed forms check out: PV_A = 1.75, PV_B = 2.15625");
}
