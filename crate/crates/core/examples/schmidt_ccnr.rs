//! Operator Schmidt decomposition, the realignment (CCNR) criterion and
//! its strengthening that also uses the local traces.
//!
//! cargo run --example schmidt_ccnr

use covsep::schmidt::{ccnr_test, operator_schmidt, prop4_test};
use covsep::state::mix_with_white_noise;
use covsep::verdict::DEFAULT_TOL;
use covsep::zoo::upb_tiles_state;

fn main() {
    println!("{:>6} {:>10} {:>10} {:>8} {:>8}", "p", "sum lam", "ccnr gap", "ccnr", "prop4");
    for k in 0..=10 {
        let p = 0.8 + 0.02 * k as f64;
        let rho = mix_with_white_noise(&upb_tiles_state(), p).unwrap();
        let dec = operator_schmidt(&rho);
        let ccnr = ccnr_test(&dec, DEFAULT_TOL);
        let prop4 = prop4_test(&dec, DEFAULT_TOL);
        println!(
            "{p:>6.2} {:>10.6} {:>10.6} {:>8} {:>8}",
            dec.coefficient_sum(),
            ccnr.margin,
            ccnr.detected,
            prop4.detected
        );
    }
    let dec = operator_schmidt(&upb_tiles_state());
    println!("\nSchmidt coefficients of the tiles state: {:.5?}", dec.coefficients);
}
