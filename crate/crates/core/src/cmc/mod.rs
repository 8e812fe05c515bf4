//! The covariance matrix criterion (CMC): separable states satisfy
//! `γ ≥ κ_A ⊕ κ_B` for some mixtures `κ` of pure-state covariance matrices.
//!
//! Only two qubits admit an exact test ([`qubit_cmc_feasibility`]); for
//! larger local dimensions the set of admissible `κ` has no known finite
//! description and this crate ships necessary conditions instead
//! ([`prop3_test`], the Schmidt-form and filter-normal-form bounds).

mod lur;
mod qubit;

pub use lur::{
    certified_min_variance, extract_lur_witness, lur_value, witness_to_lur, BoundKind, LocalUncertaintySet,
    LurValue, LurWitness, MinVarianceOptions, VarianceBound, WitnessMatrix, LUR_VERIFY_SLACK,
};
pub use qubit::{
    qubit_cm6, qubit_cmc_feasibility, qubit_gamma6, KappaCandidate, QubitCmcCertificate, QubitCmcOptions,
    QubitCmcOutcome,
};

use crate::covariance::{bipartite_cm, diagonalize_c, BlockCovarianceMatrix};
use crate::error::{Error, Result};
use crate::state::{gell_mann_basis, purity, DensityMatrix, Subsystem};
use crate::verdict::{Criterion, CriterionVerdict};

/// `2 Σ_i |C_ii| ≤ (1 − Tr[ρ_A²]) + (1 − Tr[ρ_B²])` for `d_A = d_B`.
///
/// `C` is first made diagonal by an orthogonal change of observables when
/// its off-diagonal part exceeds `1e-10`.
pub fn prop3_test(gamma: &BlockCovarianceMatrix, purity_a: f64, purity_b: f64, tol: f64) -> Result<CriterionVerdict> {
    let (na, nb) = gamma.dims();
    let (da, db) = (
        gamma.observables_a.first().map_or(0, |o| o.dim()),
        gamma.observables_b.first().map_or(0, |o| o.dim()),
    );
    if da != db || na != nb {
        return Err(Error::DimensionMismatch(format!(
            "prop3 needs equal local dimensions, got {da}x{db} with {na}/{nb} observables"
        )));
    }
    let mut rotated = false;
    let diag;
    let g = if gamma.off_diagonal_c() > 1e-10 {
        rotated = true;
        diag = diagonalize_c(gamma)?.0;
        &diag
    } else {
        gamma
    };
    let left = 2.0 * (0..na).map(|i| g.block_c[(i, i)].abs()).sum::<f64>();
    let right = (1.0 - purity_a) + (1.0 - purity_b);
    Ok(CriterionVerdict::new(Criterion::Prop3, left, right, tol).with_detail("c_diagonalized", rotated))
}

/// [`prop3_test`] with generalized Gell-Mann observables on both sides.
pub fn prop3_for_state(rho: &DensityMatrix, tol: f64) -> Result<CriterionVerdict> {
    let (da, db) = rho.dims();
    if da != db {
        return Err(Error::DimensionMismatch(format!("prop3 needs equal local dimensions, got {da}x{db}")));
    }
    let basis = gell_mann_basis(da)?;
    let gamma = bipartite_cm(rho, &basis, &basis)?;
    let pa = purity(&rho.partial_trace(Subsystem::A));
    let pb = purity(&rho.partial_trace(Subsystem::B));
    prop3_test(&gamma, pa, pb, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, HermitianMatrix};
    use crate::state::{maximally_entangled, pauli_basis};
    use approx::assert_abs_diff_eq;

    #[test]
    fn bell_numbers() {
        let v = prop3_for_state(&maximally_entangled(2).unwrap(), 1e-10).unwrap();
        assert_abs_diff_eq!(v.left, 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(v.right, 1.0, epsilon = 1e-10);
        assert!(v.detected);
    }

    #[test]
    fn maximally_mixed_and_pure_product() {
        let v = prop3_for_state(&DensityMatrix::maximally_mixed(3, 3).unwrap(), 1e-10).unwrap();
        assert_abs_diff_eq!(v.left, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v.right, 1.0 + 1.0 / 3.0, epsilon = 1e-14);
        assert!(!v.detected);

        let a = HermitianMatrix::outer(&[c(0.6, 0.0), c(0.0, 0.8)]);
        let b = HermitianMatrix::outer(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let v = prop3_for_state(&DensityMatrix::product(&a, &b).unwrap(), 1e-10).unwrap();
        assert_abs_diff_eq!(v.left, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v.right, 0.0, epsilon = 1e-14);
        assert!(!v.detected);
    }

    #[test]
    fn unequal_dimensions_rejected() {
        let rho = DensityMatrix::maximally_mixed(2, 3).unwrap();
        assert!(matches!(prop3_for_state(&rho, 1e-10), Err(Error::DimensionMismatch(_))));
        let gamma = bipartite_cm(&rho, &pauli_basis(), &gell_mann_basis(3).unwrap()).unwrap();
        assert!(matches!(prop3_test(&gamma, 0.5, 1.0 / 3.0, 1e-10), Err(Error::DimensionMismatch(_))));
    }
}
