//! Covariance matrices of observable sets and their bipartite block form.

use crate::error::{Error, Result};
use crate::numerics::{self, direct_sum, trace_product, CMat, HermitianMatrix, RMat, RealSymmetricMatrix, C64};
use crate::state::{DensityMatrix, Subsystem};

fn check_dims(state_dim: usize, observables: &[HermitianMatrix]) -> Result<()> {
    if let Some(bad) = observables.iter().position(|o| o.dim() != state_dim) {
        return Err(Error::DimensionMismatch(format!(
            "observable {bad} is {0}x{0}, state is {state_dim}x{state_dim}",
            observables[bad].dim()
        )));
    }
    Ok(())
}

/// `⟨M_i M_j⟩ − ⟨M_i⟩⟨M_j⟩` as a complex matrix, plus the means.
fn second_moments(rho: &HermitianMatrix, observables: &[HermitianMatrix]) -> (CMat, Vec<f64>) {
    let n = observables.len();
    let rho_m: Vec<CMat> = observables.iter().map(|m| rho.as_matrix() * m.as_matrix()).collect();
    let means: Vec<f64> = rho_m.iter().map(|rm| (0..rm.nrows()).map(|i| rm[(i, i)].re).sum()).collect();
    let mut g = CMat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let m_ij = trace_product(&rho_m[i], observables[j].as_matrix()) - C64::new(means[i] * means[j], 0.0);
            g[(i, j)] = m_ij;
            g[(j, i)] = m_ij.conj();
        }
    }
    (g, means)
}

/// Symmetric covariance matrix
/// `γ_ij = ⟨M_i M_j + M_j M_i⟩/2 − ⟨M_i⟩⟨M_j⟩`.
pub fn covariance_matrix(rho: &HermitianMatrix, observables: &[HermitianMatrix]) -> Result<RealSymmetricMatrix> {
    check_dims(rho.dim(), observables)?;
    let (g, _) = second_moments(rho, observables);
    Ok(RealSymmetricMatrix::symmetrized(g.map(|z| z.re)))
}

/// Non-symmetric covariance matrix `⟨M_i M_j⟩ − ⟨M_i⟩⟨M_j⟩`; Hermitian and
/// positive semidefinite, with real part equal to [`covariance_matrix`].
pub fn nonsymmetric_cm(rho: &HermitianMatrix, observables: &[HermitianMatrix]) -> Result<HermitianMatrix> {
    check_dims(rho.dim(), observables)?;
    let (g, _) = second_moments(rho, observables);
    Ok(HermitianMatrix::symmetrized(g))
}

/// `Tr[ρ (a ⊗ b)]` without forming the Kronecker product.
pub(crate) fn local_expectation(rho: &DensityMatrix, a: &CMat, b: &CMat) -> C64 {
    let (da, db) = rho.dims();
    let m = rho.matrix().as_matrix();
    let mut acc = C64::default();
    for i in 0..da {
        for k in 0..da {
            let aki = a[(k, i)];
            if aki == C64::default() {
                continue;
            }
            for j in 0..db {
                for l in 0..db {
                    acc += m[(i * db + j, k * db + l)] * aki * b[(l, j)];
                }
            }
        }
    }
    acc
}

/// Bipartite covariance matrix `[[A, C], [Cᵀ, B]]` for observables
/// `{A_k ⊗ 1, 1 ⊗ B_k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCovarianceMatrix {
    pub block_a: RealSymmetricMatrix,
    pub block_b: RealSymmetricMatrix,
    pub block_c: RMat,
    pub observables_a: Vec<HermitianMatrix>,
    pub observables_b: Vec<HermitianMatrix>,
}

impl BlockCovarianceMatrix {
    pub fn assembled(&self) -> RealSymmetricMatrix {
        let (na, nb) = (self.block_a.dim(), self.block_b.dim());
        let mut m = direct_sum(self.block_a.as_matrix(), self.block_b.as_matrix());
        m.view_mut((0, na), (na, nb)).copy_from(&self.block_c);
        m.view_mut((na, 0), (nb, na)).copy_from(&self.block_c.transpose());
        RealSymmetricMatrix::symmetrized(m)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.block_a.dim(), self.block_b.dim())
    }

    /// Frobenius norm of the off-diagonal part of `C`.
    pub fn off_diagonal_c(&self) -> f64 {
        let mut s = 0.0;
        for ((i, j), v) in self.block_c.iter().enumerate().map(|(idx, v)| {
            let r = self.block_c.nrows();
            ((idx % r, idx / r), v)
        }) {
            if i != j {
                s += v * v;
            }
        }
        s.sqrt()
    }
}

pub fn bipartite_cm(
    rho: &DensityMatrix,
    observables_a: &[HermitianMatrix],
    observables_b: &[HermitianMatrix],
) -> Result<BlockCovarianceMatrix> {
    let (da, db) = rho.dims();
    check_dims(da, observables_a)?;
    check_dims(db, observables_b)?;
    let rho_a = rho.partial_trace(Subsystem::A);
    let rho_b = rho.partial_trace(Subsystem::B);
    let block_a = covariance_matrix(&rho_a, observables_a)?;
    let block_b = covariance_matrix(&rho_b, observables_b)?;
    let mean_a: Vec<f64> = observables_a.iter().map(|o| rho_a.trace_product(o)).collect();
    let mean_b: Vec<f64> = observables_b.iter().map(|o| rho_b.trace_product(o)).collect();
    let block_c = RMat::from_fn(observables_a.len(), observables_b.len(), |i, j| {
        local_expectation(rho, observables_a[i].as_matrix(), observables_b[j].as_matrix()).re - mean_a[i] * mean_b[j]
    });
    Ok(BlockCovarianceMatrix {
        block_a,
        block_b,
        block_c,
        observables_a: observables_a.to_vec(),
        observables_b: observables_b.to_vec(),
    })
}

fn transform_observables(mu: &RMat, ops: &[HermitianMatrix]) -> Vec<HermitianMatrix> {
    let d = ops.first().map_or(0, HermitianMatrix::dim);
    (0..mu.nrows())
        .map(|k| {
            let m = ops
                .iter()
                .enumerate()
                .fold(CMat::zeros(d, d), |acc, (l, o)| acc + o.as_matrix() * C64::new(mu[(k, l)], 0.0));
            HermitianMatrix::symmetrized(m)
        })
        .collect()
}

/// Observable change `M̃_k = Σ_l μ_kl M_l` with `μ = μ_A ⊕ μ_B`, i.e.
/// `γ ↦ μ γ μᵀ` blockwise.
pub fn change_basis(gamma: &BlockCovarianceMatrix, mu_a: &RMat, mu_b: &RMat) -> Result<BlockCovarianceMatrix> {
    let (na, nb) = gamma.dims();
    for (name, mu, n) in [("mu_A", mu_a, na), ("mu_B", mu_b, nb)] {
        if mu.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {}x{}, block is {n}x{n}",
                mu.nrows(),
                mu.ncols()
            )));
        }
        let smallest = numerics::svd_real(mu).singular_values.last().copied().unwrap_or(0.0);
        let largest = numerics::svd_real(mu).singular_values.first().copied().unwrap_or(0.0);
        if !(smallest > 1e-12 * largest.max(1.0)) {
            return Err(Error::Validation(format!("{name} is singular (smallest singular value {smallest:e})")));
        }
    }
    Ok(BlockCovarianceMatrix {
        block_a: gamma.block_a.congruence(mu_a),
        block_b: gamma.block_b.congruence(mu_b),
        block_c: mu_a * &gamma.block_c * mu_b.transpose(),
        observables_a: transform_observables(mu_a, &gamma.observables_a),
        observables_b: transform_observables(mu_b, &gamma.observables_b),
    })
}

/// Rotates both observable sets orthogonally so that `C` becomes diagonal
/// with nonnegative entries (its singular values, descending).
pub fn diagonalize_c(gamma: &BlockCovarianceMatrix) -> Result<(BlockCovarianceMatrix, RMat, RMat)> {
    let dec = numerics::svd_real(&gamma.block_c);
    let u = numerics::complete_orthonormal(&dec.u);
    let v = numerics::complete_orthonormal(&dec.v);
    let mu_a = u.transpose();
    let mu_b = v.transpose();
    let mut out = change_basis(gamma, &mu_a, &mu_b)?;
    // Zero the numerical dust so downstream code sees an exactly diagonal C.
    let (r, cdim) = out.block_c.shape();
    for i in 0..r {
        for j in 0..cdim {
            if i != j {
                out.block_c[(i, j)] = 0.0;
            } else {
                out.block_c[(i, i)] = dec.singular_values[i];
            }
        }
    }
    Ok((out, mu_a, mu_b))
}
