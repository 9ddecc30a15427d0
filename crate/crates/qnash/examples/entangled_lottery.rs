//! Entangling the equilibrium ket with a single-bet lottery: the joint
//! state, the surviving mass under the lottery projection, the two partial
//! traces, and the rational beliefs they induce.
//!
//! Run with `cargo run --example entangled_lottery`.

use num_complex::Complex64;
use qnash::equilibrium::{schmidt_rank, sequential_best_response_ket, solve_support_enum};
use qnash::game::{GameSpec, PathSampler};
use qnash::lottery::{
    apply_lottery_operator, entangle, rational_beliefs, trace_out_game, trace_out_lottery,
};

fn main() {
    let spec = GameSpec::two_company();
    let eq = solve_support_enum(&spec).unwrap().equilibria[0].clone();

    // One lottery outcome per game path, perfectly correlated.
    let joint = entangle(&eq.ket);
    println!(
        "joint ket over {} path-outcome pairs (norm² {:.9})",
        spec.num_paths() * spec.num_paths(),
        joint.norm_sqr()
    );
    println!("entangled diagonal form: {}", joint.is_entangled_diagonal());

    // The lottery projection keeps only the correlated pairs; an entangled
    // diagonal ket loses no mass.
    let (projected, surviving) = apply_lottery_operator(&joint);
    println!("surviving mass under the lottery projection: {surviving:.9}");
    let projected = projected.renormalized().unwrap();

    let game_side = trace_out_lottery(&projected).unwrap();
    let lottery_side = trace_out_game(&projected).unwrap();
    println!("\ngame reduction diagonal:    {:?}", game_side.diagonal());
    println!("lottery reduction diagonal: {:?}", lottery_side.diagonal());
    println!("traces: {:.12} / {:.12}", game_side.trace(), lottery_side.trace());

    // Both reductions carry the same spectrum; the shared eigenvalues are
    // the squared Schmidt coefficients.
    println!("game-side spectrum:    {:?}", game_side.spectrum());
    println!("lottery-side spectrum: {:?}", lottery_side.spectrum());
    println!("game-side rank: {}", game_side.rank(1e-12));

    let beliefs = rational_beliefs(&projected, 1.0).unwrap();
    println!("\nrational beliefs (capitalized state prices): {:?}", beliefs.weights());

    // Sampling paths from the ket draws each path with its capitalized
    // price; a fixed seed replays the same draw sequence.
    let mut sampler = PathSampler::new(spec.space(), &eq.ket, 7).unwrap();
    let mut counts = vec![0usize; spec.num_paths()];
    let draws = 20_000;
    for _ in 0..draws {
        counts[sampler.sample().index] += 1;
    }
    let frequencies: Vec<f64> = counts.iter().map(|c| *c as f64 / draws as f64).collect();
    println!("\nseeded sampler, {draws} draws: frequencies {frequencies:?}");

    // A follower best-responding to each leader branch produces an
    // entangled ket directly, without any lottery.
    let split = [Complex64::new(0.6f64.sqrt(), 0.0), Complex64::new(0.4f64.sqrt(), 0.0)];
    let sequential = sequential_best_response_ket(&spec, 0, &split).unwrap();
    let rank = schmidt_rank(spec.space(), &sequential, 1e-12).unwrap();
    println!("\nsequential best-response ket (leader splits 0.6/0.4):");
    for (path, amp) in spec.space().enumerate_paths().iter().zip(sequential.amplitudes()) {
        if amp.norm_sqr() > 0.0 {
            println!("  {}  amplitude {:.9}", spec.path_label(path), amp.re);
        }
    }
    println!("schmidt rank {rank} (> 1 means the branches cannot factor)");
}
