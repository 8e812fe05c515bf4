//! Covariance matrices of a Bell state in the Pauli basis, and the
//! pure-state projector structure of a single qutrit.
//!
//! cargo run --example covariance_structure

use covsep::covariance::{bipartite_cm, covariance_matrix};
use covsep::numerics::HermitianMatrix;
use covsep::state::{gell_mann_basis, maximally_entangled, pauli_basis, random_pure_vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let bell = maximally_entangled(2).unwrap();
    let paulis = pauli_basis();
    let gamma = bipartite_cm(&bell, paulis.traceless(), paulis.traceless()).unwrap();
    println!("Bell state, observables sigma_k/sqrt(2) on each side:");
    println!("A block:{}", gamma.block_a.as_matrix());
    println!("C block:{}", gamma.block_c);
    println!("eigenvalues of the full 6x6 matrix: {:?}", gamma.assembled().eigh().values);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let psi = random_pure_vector(3, &mut rng);
    let g = covariance_matrix(&HermitianMatrix::outer(&psi), gell_mann_basis(3).unwrap().observables()).unwrap();
    let twice: Vec<f64> = g.eigh().values.iter().map(|x| 2.0 * x).collect();
    println!("\nrandom qutrit pure state: eigenvalues of 2*gamma = {twice:.6?}");
    println!("(a projector of rank 2(d-1) = 4)");
}
