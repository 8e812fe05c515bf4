//! Operator Schmidt decomposition and the criteria built on it.
//!
//! Realignment convention (A-major composite indices):
//!
//! ```text
//! R[i*dA + k, j*dB + l] = ρ[i*dB + j, k*dB + l]
//! ```
//!
//! with `i, k` indexing A and `j, l` indexing B. The singular values of `R`
//! are the operator Schmidt coefficients.

use crate::covariance::local_expectation;
use crate::error::Result;
use crate::filter::{dv_fnf_bound, to_fnf, FnfOptions};
use crate::numerics::{self, CMat, HermitianMatrix, RMat, C64};
use crate::state::{gell_mann_basis, DensityMatrix};
use crate::verdict::{Criterion, CriterionVerdict};

/// Realigned matrix `R` (`d_A² × d_B²`).
pub fn realign(rho: &DensityMatrix) -> CMat {
    let (da, db) = rho.dims();
    CMat::from_fn(da * da, db * db, |r, col| {
        let (i, k) = (r / da, r % da);
        let (j, l) = (col / db, col % db);
        rho.entry(i, j, k, l)
    })
}

/// `ρ = Σ_k λ_k G_k^A ⊗ G_k^B` with Hermitian, Hilbert–Schmidt orthonormal
/// operator families and `λ_k ≥ 0` descending.
#[derive(Clone, Debug)]
pub struct OperatorSchmidtDecomposition {
    pub dim_a: usize,
    pub dim_b: usize,
    pub coefficients: Vec<f64>,
    pub ops_a: Vec<HermitianMatrix>,
    pub ops_b: Vec<HermitianMatrix>,
    /// `g_k^A = Tr[G_k^A]`
    pub traces_a: Vec<f64>,
    /// `g_k^B = Tr[G_k^B]`
    pub traces_b: Vec<f64>,
}

impl OperatorSchmidtDecomposition {
    pub fn reconstruct(&self) -> CMat {
        let n = self.dim_a * self.dim_b;
        self.coefficients
            .iter()
            .zip(self.ops_a.iter().zip(&self.ops_b))
            .fold(CMat::zeros(n, n), |acc, (&lam, (a, b))| {
                acc + a.as_matrix().kronecker(b.as_matrix()) * C64::new(lam, 0.0)
            })
    }

    /// `Σ_k λ_k`, the trace norm of the realigned matrix.
    pub fn coefficient_sum(&self) -> f64 {
        self.coefficients.iter().sum()
    }
}

fn combine(coeffs: &RMat, col: usize, basis: &[HermitianMatrix]) -> HermitianMatrix {
    let d = basis[0].dim();
    let m = basis
        .iter()
        .enumerate()
        .fold(CMat::zeros(d, d), |acc, (i, g)| acc + g.as_matrix() * C64::new(coeffs[(i, col)], 0.0));
    HermitianMatrix::symmetrized(m)
}

/// Householder reflection `H` (symmetric, orthogonal) with `H x = ‖x‖ e₁`.
fn householder_to_e1(x: &[f64]) -> RMat {
    let n = x.len();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut h = RMat::identity(n, n);
    if norm == 0.0 {
        return h;
    }
    let mut w: Vec<f64> = x.to_vec();
    w[0] -= norm;
    let wn = w.iter().map(|v| v * v).sum::<f64>();
    if wn <= 1e-30 * norm * norm {
        return h;
    }
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] -= 2.0 * w[i] * w[j] / wn;
        }
    }
    h
}

/// Operator Schmidt decomposition through the real correlation matrix
/// `T_ij = Tr[ρ (G_i^A ⊗ G_j^B)]` in generalized Gell-Mann bases.
///
/// `T` is `R` expressed in a Hermitian product basis, so it has the same
/// singular values while its singular vectors give Hermitian operators.
/// Inside a cluster of equal coefficients the operators are rotated so
/// that the trace vector `g^A` is concentrated on the first member.
pub fn operator_schmidt(rho: &DensityMatrix) -> OperatorSchmidtDecomposition {
    let (da, db) = rho.dims();
    let ga = gell_mann_basis(da).expect("dimension >= 2");
    let gb = gell_mann_basis(db).expect("dimension >= 2");
    let t = RMat::from_fn(da * da, db * db, |i, j| local_expectation(rho, ga[i].as_matrix(), gb[j].as_matrix()).re);
    let dec = numerics::svd_real(&t);
    let mut u = dec.u;
    let mut v = dec.v;
    let lambda = dec.singular_values;
    let k = lambda.len();

    let trace_a = |u: &RMat, col: usize| -> f64 { (0..da * da).map(|i| u[(i, col)] * ga[i].trace()).sum() };

    let scale = lambda.first().copied().unwrap_or(0.0).max(1e-300);
    let mut start = 0;
    while start < k {
        let mut end = start + 1;
        while end < k && (lambda[start] - lambda[end]).abs() <= 1e-10 * scale {
            end += 1;
        }
        if end - start > 1 && lambda[start] > 0.0 {
            let g: Vec<f64> = (start..end).map(|col| trace_a(&u, col)).collect();
            let h = householder_to_e1(&g);
            let uc = u.columns(start, end - start) * &h;
            let vc = v.columns(start, end - start) * &h;
            u.columns_mut(start, end - start).copy_from(&uc);
            v.columns_mut(start, end - start).copy_from(&vc);
        }
        start = end;
    }
    // Sign convention: nonnegative g^A on each term (flip both sides together).
    for col in 0..k {
        if trace_a(&u, col) < 0.0 {
            u.column_mut(col).neg_mut();
            v.column_mut(col).neg_mut();
        }
    }

    let ops_a: Vec<HermitianMatrix> = (0..k).map(|col| combine(&u, col, &ga)).collect();
    let ops_b: Vec<HermitianMatrix> = (0..k).map(|col| combine(&v, col, &gb)).collect();
    let traces_a = ops_a.iter().map(HermitianMatrix::trace).collect();
    let traces_b = ops_b.iter().map(HermitianMatrix::trace).collect();
    OperatorSchmidtDecomposition { dim_a: da, dim_b: db, coefficients: lambda, ops_a, ops_b, traces_a, traces_b }
}

/// Realignment criterion: separable ⇒ `Σ_k λ_k ≤ 1`.
pub fn ccnr_test(dec: &OperatorSchmidtDecomposition, tol: f64) -> CriterionVerdict {
    CriterionVerdict::new(Criterion::Ccnr, dec.coefficient_sum(), 1.0, tol)
}

/// Covariance criterion in the operator Schmidt basis:
/// separable ⇒ `2 Σ_k |λ_k − λ_k² g_k^A g_k^B| ≤ 2 − Σ_k λ_k² ((g_k^A)² + (g_k^B)²)`.
pub fn prop4_test(dec: &OperatorSchmidtDecomposition, tol: f64) -> CriterionVerdict {
    let mut left = 0.0;
    let mut right = 2.0;
    for ((&lam, &ga), &gb) in dec.coefficients.iter().zip(&dec.traces_a).zip(&dec.traces_b) {
        left += 2.0 * (lam - lam * lam * ga * gb).abs();
        right -= lam * lam * (ga * ga + gb * gb);
    }
    CriterionVerdict::new(Criterion::Prop4, left, right, tol)
}

/// Bloch-representation bound `Σ ξ_i ≤ √(d_A d_B (d_A − 1)(d_B − 1))` on
/// filter-normal-form correlation strengths.
pub fn dv_test(xi: &[f64], dim_a: usize, dim_b: usize, tol: f64) -> CriterionVerdict {
    CriterionVerdict::new(Criterion::Dv, xi.iter().sum(), dv_fnf_bound(dim_a, dim_b), tol)
}

/// [`dv_test`] after bringing `ρ` to filter normal form.
pub fn dv_test_state(rho: &DensityMatrix, opts: &FnfOptions, tol: f64) -> Result<CriterionVerdict> {
    let fnf = to_fnf(rho, opts)?;
    Ok(dv_test(&fnf.xi, rho.dim_a(), rho.dim_b(), tol)
        .with_detail("fnf_iterations", fnf.iterations)
        .with_detail("fnf_residual", fnf.residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c;
    use crate::state::{basis_vector, maximally_entangled, random_density_matrix_seeded};
    use approx::assert_abs_diff_eq;

    /// Brute-force oracle: SVD of the explicitly realigned matrix.
    fn realign_oracle(rho: &DensityMatrix) -> Vec<f64> {
        let (da, db) = rho.dims();
        let mut r = CMat::zeros(da * da, db * db);
        for i in 0..da {
            for j in 0..db {
                for k in 0..da {
                    for l in 0..db {
                        r[(i * da + k, j * db + l)] = rho.matrix().as_matrix()[(i * db + j, k * db + l)];
                    }
                }
            }
        }
        let mut s: Vec<f64> = r.svd(false, false).singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    #[test]
    fn bell_coefficients() {
        let bell = maximally_entangled(2).unwrap();
        let dec = operator_schmidt(&bell);
        for &l in &dec.coefficients {
            assert_abs_diff_eq!(l, 0.5, epsilon = 1e-14);
        }
        for (a, b) in dec.coefficients.iter().zip(realign_oracle(&bell)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        let ccnr = ccnr_test(&dec, 1e-10);
        assert_abs_diff_eq!(ccnr.left, 2.0, epsilon = 1e-13);
        assert!(ccnr.detected);
        let p4 = prop4_test(&dec, 1e-10);
        assert_abs_diff_eq!(p4.left, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p4.right, 1.0, epsilon = 1e-12);
        assert!(p4.detected);
    }

    #[test]
    fn maximally_mixed_single_term() {
        let mm = DensityMatrix::maximally_mixed(2, 2).unwrap();
        let dec = operator_schmidt(&mm);
        assert_abs_diff_eq!(dec.coefficients[0], 0.5, epsilon = 1e-15);
        assert!(dec.coefficients[1..].iter().all(|&l| l.abs() < 1e-15));
        let id = CMat::identity(2, 2) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        assert!((dec.ops_a[0].as_matrix() - &id).norm() < 1e-14);
        assert!((dec.ops_b[0].as_matrix() - &id).norm() < 1e-14);
        let ccnr = ccnr_test(&dec, 1e-10);
        assert_abs_diff_eq!(ccnr.left, 0.5, epsilon = 1e-14);
        assert!(!ccnr.detected);
        let p4 = prop4_test(&dec, 1e-10);
        assert_abs_diff_eq!(p4.left, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p4.right, 1.0, epsilon = 1e-14);
        assert!(!p4.detected);
    }

    #[test]
    fn pure_product_is_boundary() {
        let psi: Vec<C64> = {
            let a = [c(0.6, 0.0), c(0.0, 0.8)];
            let b = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
            a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
        };
        let rho = DensityMatrix::pure(2, 3, &psi).unwrap();
        let dec = operator_schmidt(&rho);
        assert_abs_diff_eq!(dec.coefficients[0], 1.0, epsilon = 1e-14);
        assert!(dec.coefficients[1..].iter().all(|&l| l < 1e-14));
        let ccnr = ccnr_test(&dec, 1e-10);
        assert!(!ccnr.detected);
        let p4 = prop4_test(&dec, 1e-10);
        assert_abs_diff_eq!(p4.left, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p4.right, 0.0, epsilon = 1e-12);
        assert!(!p4.detected);
    }

    #[test]
    fn random_states_reconstruct_and_match_oracle() {
        for (seed, (da, db)) in [(1, (2, 2)), (2, (2, 3)), (3, (3, 3)), (4, (3, 2)), (5, (2, 4))] {
            let rho = random_density_matrix_seeded(da, db, da * db, seed).unwrap();
            let dec = operator_schmidt(&rho);
            let err = (dec.reconstruct() - rho.matrix().as_matrix()).norm();
            assert!(err < 1e-10, "reconstruction {err}");
            for (a, b) in dec.coefficients.iter().zip(realign_oracle(&rho)) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
            }
            let sq: f64 = dec.coefficients.iter().map(|l| l * l).sum();
            assert_abs_diff_eq!(sq, crate::state::purity(rho.matrix()), epsilon = 1e-10);
            assert!(crate::state::check_orthonormal(&dec.ops_a, 1e-10).is_ok());
            assert!(crate::state::check_orthonormal(&dec.ops_b, 1e-10).is_ok());
        }
    }

    #[test]
    fn realign_matches_definition() {
        let rho = DensityMatrix::pure(2, 2, &basis_vector(4, 1)).unwrap();
        let r = realign(&rho);
        // ρ = |01⟩⟨01|: only ρ[(0,1),(0,1)] = 1, which lands at R[0*2+0, 1*2+1].
        assert_eq!(r[(0, 3)], c(1.0, 0.0));
        assert_abs_diff_eq!(r.norm(), 1.0);
    }

    #[test]
    fn dv_bounds() {
        let v = dv_test(&[2.0, 2.0, 2.0], 2, 2, 1e-10);
        assert_abs_diff_eq!(v.right, 2.0, epsilon = 1e-15);
        assert!(v.detected);
        let mm = dv_test(&[0.0; 3], 2, 2, 1e-10);
        assert!(!mm.detected);
        assert_abs_diff_eq!(dv_test(&[], 2, 4, 0.0).right, 24f64.sqrt(), epsilon = 1e-15);
    }
}
