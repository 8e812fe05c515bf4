//! Bring a random two-qutrit state to filter normal form and compare the
//! covariance bounds on the correlation strengths.
//!
//! cargo run --example filter_normal_form [seed]

use covsep::filter::{ccnr_fnf_bound, dv_fnf_bound, eq8_bound, prop6_test, to_fnf, FnfOptions};
use covsep::state::random_density_matrix_seeded;
use covsep::verdict::DEFAULT_TOL;

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let rho = random_density_matrix_seeded(3, 3, 2, seed).unwrap();
    let fnf = to_fnf(&rho, &FnfOptions::default()).expect("rank-2 states have full-rank reductions");
    println!("converged in {} iterations, residual {:e}", fnf.iterations, fnf.residual);
    println!("xi = {:.6?}", fnf.xi);
    println!("sum xi = {:.6}", fnf.xi_sum());
    let v = prop6_test(&fnf, DEFAULT_TOL).unwrap();
    println!("d^2 - d bound {} -> entangled: {}", v.right, v.detected);

    println!("\nbounds on sum xi for separable states:");
    println!("{:>6} {:>10} {:>10} {:>10}", "dims", "eq8", "ccnr", "dv");
    for (a, b) in [(2, 2), (2, 4), (3, 3), (2, 9), (3, 8)] {
        println!(
            "{:>6} {:>10.4} {:>10.4} {:>10.4}",
            format!("{a}x{b}"),
            eq8_bound(a, b),
            ccnr_fnf_bound(a, b),
            dv_fnf_bound(a, b)
        );
    }
}
