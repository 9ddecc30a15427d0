//! The whole pipeline in one pass: solve a game, entangle the price ket with
//! a lottery, read off beliefs, clear an exchange economy, price securities,
//! and optimize a portfolio against them.
//!
//! Run with `cargo run --example full_pipeline`.

use qnash::economy::{
    check_mrs_equality, check_quantum_price_conditions, foc_residuals, solve_pareto, AgentSpec,
    EconomySpec, UtilitySpec,
};
use qnash::equilibrium::solve_support_enum;
use qnash::game::GameSpec;
use qnash::lottery::{
    apply_lottery_operator, entangle, rational_beliefs, trace_out_game, trace_out_lottery,
};
use qnash::securities::{
    check_pareto_condition, market_completeness, portfolio_foc_residuals, pv_prices, securitize,
    solve_portfolio, InvestorSpec,
};

fn main() {
    // 1. Equilibrium of the two-company technology game.
    let spec = GameSpec::two_company();
    let eq = solve_support_enum(&spec).unwrap().equilibria[0].clone();
    println!("== equilibrium ==");
    for (player, weights) in spec.players().iter().zip(eq.profile.weights.iter()) {
        println!("  {:<9} {:?}", player.name, weights);
    }
    println!("  present values {:?}", eq.pv);

    // 2. Entangle the price ket with the single-bet lottery.
    let joint = entangle(&eq.ket);
    let d = spec.discount();
    let (collapsed, mass) = apply_lottery_operator(&joint);
    let game_side = trace_out_lottery(&joint).unwrap();
    let lottery_side = trace_out_game(&joint).unwrap();
    println!("\n== lottery ==");
    println!("  winning-branch mass {:.9}", mass);
    println!("  collapsed norm {:.9}", collapsed.renormalized().unwrap().norm_sqr());
    println!(
        "  partial traces: game {:.9}, lottery {:.9}",
        game_side.trace(),
        lottery_side.trace()
    );

    // 3. Beliefs implied by the joint state.
    let beliefs = rational_beliefs(&joint, d).unwrap();
    println!("\n== beliefs ==");
    println!("  {:?}", beliefs.weights());

    // 4. A two-agent exchange economy under those beliefs.
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
    let foc = foc_residuals(&economy, &allocation).unwrap();
    let mrs = check_mrs_equality(&economy, &allocation, 1e-9).unwrap();
    let quantum = check_quantum_price_conditions(&economy, &allocation, &joint, d, 1e-8).unwrap();
    println!("\n== economy ==");
    println!("  state prices {:?}", allocation.state_prices());
    println!(
        "  foc {:.3e}, mrs equal {}, amplitude-price ok {}",
        foc.max_foc, mrs.ok, quantum.ok
    );

    // 5. Securities written on the companies, priced off the ket.
    let set = securitize(&spec, 1.0).unwrap();
    let prices = pv_prices(&set, &joint, d).unwrap();
    let completeness = market_completeness(&set);
    println!("\n== securities ==");
    println!("  prices {:?}", prices.prices());
    println!(
        "  rank {}/{} ({})",
        completeness.rank,
        completeness.num_states,
        if completeness.complete { "complete" } else { "incomplete" }
    );

    // 6. A portfolio choice against those prices.
    let investor = InvestorSpec {
        utility: UtilitySpec::new(1.0, 1.0).unwrap(),
        beliefs,
        endowment_c0: 1.0,
        endowment_holdings: vec![1.0, 1.0],
    };
    let portfolio = solve_portfolio(&investor, &set, &prices).unwrap();
    let foc = portfolio_foc_residuals(&investor, &set, &prices, &portfolio).unwrap();
    let foc_max = foc.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let pareto = check_pareto_condition(&investor, &portfolio, &set, &prices, &joint, d, 1e-6)
        .unwrap();
    println!("\n== portfolio ==");
    println!("  holdings {:?}", portfolio.holdings);
    println!("  c0 {:.9}, foc {:.3e}", portfolio.c0, foc_max);
    println!(
        "  pointwise condition ok {} (residual {:.3e}), weighted residual {:.3e}",
        pareto.ok, pareto.max_residual, pareto.weighted_max
    );
}
