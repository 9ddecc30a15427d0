//! A securities market layered on the equilibrium ket: company securities,
//! present-value prices, completeness, an investor's optimal portfolio, and
//! the pointwise optimality condition that an incomplete market cannot meet.
//!
//! Run with `cargo run --example securities_market`.

use qnash::economy::UtilitySpec;
use qnash::equilibrium::solve_support_enum;
use qnash::game::GameSpec;
use qnash::lottery::{entangle, rational_beliefs, trace_out_lottery};
use qnash::securities::{
    check_pareto_condition, market_completeness, portfolio_foc_residuals, pv_prices,
    security_expected_payoff, securitize, solve_portfolio, InvestorSpec,
};

fn main() {
    let spec = GameSpec::two_company();
    let eq = solve_support_enum(&spec).unwrap().equilibria[0].clone();
    let joint = entangle(&eq.ket);
    let d = spec.discount();

    // One security per company, each paying that company's payoff row.
    let set = securitize(&spec, 1.0).unwrap();
    for security in set.securities() {
        println!("security {:<9} payoffs {:?}", security.name, security.payoffs);
    }

    let prices = pv_prices(&set, &joint, d).unwrap();
    let rho = trace_out_lottery(&joint).unwrap();
    println!("\npresent-value prices {:?}", prices.prices());
    for (security, price) in set.securities().iter().zip(prices.prices()) {
        let expected = security_expected_payoff(&rho, security).unwrap();
        println!(
            "  {:<9} price {:.9}  discounted expected payoff {:.9}  gap {:.3e}",
            security.name,
            price,
            d * expected,
            (price - d * expected).abs()
        );
    }

    let completeness = market_completeness(&set);
    println!(
        "\npayoff rank {} over {} states: market {}",
        completeness.rank,
        completeness.num_states,
        if completeness.complete { "complete" } else { "incomplete" }
    );

    // A log investor holding one unit of each security plus date-0 wealth.
    let beliefs = rational_beliefs(&joint, d).unwrap();
    let investor = InvestorSpec {
        utility: UtilitySpec::new(1.0, 1.0).unwrap(),
        beliefs,
        endowment_c0: 1.0,
        endowment_holdings: vec![1.0, 1.0],
    };
    let portfolio = solve_portfolio(&investor, &set, &prices).unwrap();
    println!("\noptimal holdings {:?}", portfolio.holdings);
    println!("date-0 consumption {:.9}", portfolio.c0);
    println!("implied state consumption {:?}", portfolio.implied_consumption);

    let foc = portfolio_foc_residuals(&investor, &set, &prices, &portfolio).unwrap();
    let foc_max = foc.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    println!("portfolio first-order residual {:.3e}", foc_max);

    // With two securities spanning a rank-2 subspace of four states, the
    // payoff-weighted optimality condition holds but the pointwise one
    // cannot: the riskless direction lies outside the span of the payoffs.
    let report = check_pareto_condition(&investor, &portfolio, &set, &prices, &joint, d, 1e-6)
        .unwrap();
    println!(
        "\npointwise marginal condition: ok {} (max residual {:.3e})",
        report.ok, report.max_residual
    );
    println!(
        "payoff-weighted condition residual {:.3e}",
        report.weighted_max
    );
    println!("per-state residuals {:?}", report.state_residuals);
}
