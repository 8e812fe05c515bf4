//! Decide the covariance matrix criterion exactly for two qubits along the
//! Werner line, showing the certified bracket on the optimal slack.
//!
//! cargo run --example two_qubit_cmc

use covsep::cmc::{qubit_cm6, qubit_cmc_feasibility, QubitCmcOptions};
use covsep::zoo::werner_state;

fn main() {
    let opts = QubitCmcOptions::default();
    println!("{:>6} {:>14} {:>14} {:>10}", "p", "lower", "upper", "feasible");
    for k in 0..=10 {
        let p = 0.1 * k as f64;
        let rho = werner_state(p).unwrap();
        let out = qubit_cmc_feasibility(&qubit_cm6(&rho).unwrap(), &opts).unwrap();
        println!("{p:>6.2} {:>14.3e} {:>14.3e} {:>10}", out.lower_bound, out.upper_bound, out.feasible());
    }
    println!("\nthe Werner family violates the criterion exactly when p > 1/3");
}
