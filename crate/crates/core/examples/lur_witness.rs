//! Turn a CMC violation into an explicit local uncertainty relation and
//! verify it from the state's moments.
//!
//! cargo run --example lur_witness

use covsep::cmc::{
    extract_lur_witness, lur_value, qubit_cm6, qubit_cmc_feasibility, MinVarianceOptions, QubitCmcOptions,
};
use covsep::zoo::werner_state;

fn main() {
    let rho = werner_state(0.6).unwrap();
    let gamma = qubit_cm6(&rho).unwrap();
    let out = qubit_cmc_feasibility(&gamma, &QubitCmcOptions::default()).unwrap();
    println!("CMC slack bracket [{:.4e}, {:.4e}]", out.lower_bound, out.upper_bound);

    let lur = extract_lur_witness(&gamma, &out, &MinVarianceOptions::default())
        .unwrap()
        .expect("a clear violation yields a witness");
    println!("{} observable pairs", lur.len());
    for (k, (a, b)) in lur.ops_a.iter().zip(&lur.ops_b).enumerate() {
        println!("A_{k} ={}B_{k} ={}", a.as_matrix(), b.as_matrix());
    }
    println!("U_A = {:.6} ({:?}), U_B = {:.6} ({:?})", lur.bound_a.value, lur.bound_a.kind, lur.bound_b.value, lur.bound_b.kind);
    let v = lur_value(&rho, &lur).unwrap();
    println!("sum of variances {:.6} < {:.6}: {}", v.lhs, v.rhs, v.violated(1e-9));
}
