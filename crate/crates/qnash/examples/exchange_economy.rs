//! A two-agent pure exchange economy priced by the equilibrium ket: Pareto
//! allocation, state prices, first-order and marginal-rate checks, and the
//! amplitude-price conditions under rational beliefs.
//!
//! Run with `cargo run --example exchange_economy`.

use qnash::economy::{
    check_mrs_equality, check_quantum_price_conditions, foc_residuals, pareto_objective,
    solve_pareto, AgentSpec, EconomySpec, UtilitySpec,
};
use qnash::equilibrium::solve_support_enum;
use qnash::game::GameSpec;
use qnash::lottery::{entangle, rational_beliefs};

fn main() {
    let spec = GameSpec::two_company();
    let eq = solve_support_enum(&spec).unwrap().equilibria[0].clone();
    let joint = entangle(&eq.ket);
    let d = spec.discount();
    let beliefs = rational_beliefs(&joint, d).unwrap();
    println!("rational beliefs from the equilibrium ket: {:?}", beliefs.weights());

    // Log agents with common rational beliefs and flat aggregate supply:
    // consumption splits in proportion to the welfare weights everywhere.
    let economy = EconomySpec::new(
        vec![
            AgentSpec {
                utility: UtilitySpec::new(1.0, 1.0).unwrap(),
                lambda: 1.0,
                beliefs: beliefs.clone(),
            },
            AgentSpec {
                utility: UtilitySpec::new(1.0, 1.0).unwrap(),
                lambda: 2.0,
                beliefs: beliefs.clone(),
            },
        ],
        4.0,
        vec![4.0, 4.0, 4.0, 4.0],
    )
    .unwrap();

    let allocation = solve_pareto(&economy).unwrap();
    println!("\nlog economy, welfare weights (1, 2):");
    for (i, c0) in allocation.c0.iter().enumerate() {
        println!("  agent {i}: c0 {:.9}  states {:?}", c0, allocation.c[i]);
    }
    println!("  state prices {:?}", allocation.state_prices());

    let foc = foc_residuals(&economy, &allocation).unwrap();
    let mrs = check_mrs_equality(&economy, &allocation, 1e-9).unwrap();
    println!(
        "  first-order residual {:.3e}, feasibility {:.3e}, mrs equalized: {}",
        foc.max_foc, foc.max_feasibility, mrs.ok
    );

    // With rational beliefs and matching aggregates, state prices equal
    // discounted squared amplitudes and marginal utilities satisfy the
    // per-state condition.
    let quantum = check_quantum_price_conditions(&economy, &allocation, &joint, d, 1e-8).unwrap();
    println!(
        "  amplitude-price conditions: ok {} (state {:.3e}, marginal {:.3e})",
        quantum.ok, quantum.price_residual_max, quantum.marginal_residual_max
    );

    // Heterogeneous curvature and time preference: sharing is no longer
    // proportional, but the same first-order conditions certify optimality.
    let mixed = EconomySpec::new(
        vec![
            AgentSpec {
                utility: UtilitySpec::new(1.0, 1.0).unwrap(),
                lambda: 1.0,
                beliefs: beliefs.clone(),
            },
            AgentSpec {
                utility: UtilitySpec::new(2.0, 0.9).unwrap(),
                lambda: 2.0,
                beliefs,
            },
        ],
        4.0,
        vec![2.0, 3.0, 2.0, 3.0],
    )
    .unwrap();
    let allocation = solve_pareto(&mixed).unwrap();
    println!("\nmixed-curvature economy (log vs gamma = 2, beta 1 vs 0.9):");
    for (i, c0) in allocation.c0.iter().enumerate() {
        println!("  agent {i}: c0 {:.9}  states {:?}", c0, allocation.c[i]);
    }
    println!("  state prices {:?}", allocation.state_prices());
    let foc = foc_residuals(&mixed, &allocation).unwrap();
    let objective = pareto_objective(&mixed, &allocation).unwrap();
    println!(
        "  first-order residual {:.3e}, welfare objective {:.12}",
        foc.max_foc, objective
    );
}
