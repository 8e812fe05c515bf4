//! Local filtering to the filter normal form (FNF) and the criteria that
//! read off its correlation strengths `ξ_i`.
//!
//! A state is in FNF when both reductions are maximally mixed and its
//! traceless correlations are diagonal:
//! `ρ̃ = (1 + Σ_i ξ_i G̃_i^A ⊗ G̃_i^B) / (d_A d_B)` with `ξ_i ≥ 0`.
//!
//! The filters are found by alternating `F_A ← (d_A ρ_A)^{-1/2}` and
//! `F_B ← (d_B ρ_B)^{-1/2}` with trace renormalization, until the summed
//! Frobenius distance of both reductions from `1/d` drops below `tol`.

use crate::covariance::local_expectation;
use crate::error::{Error, Result};
use crate::numerics::{self, c, inv_sqrt_psd, CMat, HermitianMatrix, RMat, C64};
use crate::state::{gell_mann_basis, DensityMatrix, Subsystem};
use crate::verdict::{Criterion, CriterionVerdict};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FnfOptions {
    /// Target for `‖ρ̃_A − 1/d_A‖_F + ‖ρ̃_B − 1/d_B‖_F`.
    pub tol: f64,
    pub max_iter: usize,
    /// Reductions with an eigenvalue (after scaling by `d`) below this are
    /// treated as singular.
    pub rank_cutoff: f64,
}

impl Default for FnfOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 500, rank_cutoff: 1e-12 }
    }
}

#[derive(Clone, Debug)]
pub struct FilterNormalFormResult {
    /// The normal-form state `(F_A ⊗ F_B) ρ (F_A ⊗ F_B)†`.
    pub state: DensityMatrix,
    pub filter_a: CMat,
    pub filter_b: CMat,
    /// Correlation strengths, descending, `min(d_A, d_B)² − 1` of them.
    pub xi: Vec<f64>,
    /// Traceless orthonormal observables aligned with `xi`.
    pub basis_a: Vec<HermitianMatrix>,
    pub basis_b: Vec<HermitianMatrix>,
    pub iterations: usize,
    pub residual: f64,
}

impl FilterNormalFormResult {
    pub fn xi_sum(&self) -> f64 {
        self.xi.iter().sum()
    }

    /// `(1 + Σ ξ_i G̃_i^A ⊗ G̃_i^B) / (d_A d_B)`.
    pub fn normal_form_matrix(&self) -> CMat {
        let (da, db) = self.state.dims();
        let n = da * db;
        let mut m = CMat::identity(n, n);
        for ((&x, a), b) in self.xi.iter().zip(&self.basis_a).zip(&self.basis_b) {
            m += a.as_matrix().kronecker(b.as_matrix()) * c(x, 0.0);
        }
        m * c(1.0 / n as f64, 0.0)
    }
}

fn reduction_residual(rho: &DensityMatrix) -> f64 {
    let (da, db) = rho.dims();
    let ra = rho.partial_trace(Subsystem::A);
    let rb = rho.partial_trace(Subsystem::B);
    let dev_a = (ra.as_matrix() - CMat::identity(da, da) * c(1.0 / da as f64, 0.0)).norm();
    let dev_b = (rb.as_matrix() - CMat::identity(db, db) * c(1.0 / db as f64, 0.0)).norm();
    dev_a + dev_b
}

fn apply_filter(rho: &DensityMatrix, f: &CMat) -> Result<DensityMatrix> {
    let m = rho.matrix().conjugate_by(f);
    let (da, db) = rho.dims();
    DensityMatrix::from_unnormalized(da, db, m)
}

/// Brings `ρ` to filter normal form.
///
/// Fails with [`Error::SingularReducedState`] when a reduction along the
/// way is singular, and with [`Error::NoConvergence`] when `max_iter`
/// alternations do not reach `tol`.
pub fn to_fnf(rho: &DensityMatrix, opts: &FnfOptions) -> Result<FilterNormalFormResult> {
    let (da, db) = rho.dims();
    let id_a = CMat::identity(da, da);
    let id_b = CMat::identity(db, db);
    let mut state = rho.clone();
    let mut filter_a = id_a.clone();
    let mut filter_b = id_b.clone();
    let mut residual = reduction_residual(&state);
    let mut iterations = 0;
    while residual > opts.tol {
        if iterations == opts.max_iter {
            return Err(Error::NoConvergence {
                method: "filter normal form",
                iterations,
                residual,
                bounds: None,
            });
        }
        iterations += 1;
        let ra = state.partial_trace(Subsystem::A).scale(da as f64);
        let fa = inv_sqrt_psd(&ra, opts.rank_cutoff)?.into_matrix();
        state = apply_filter(&state, &fa.kronecker(&id_b))?;
        filter_a = &fa * filter_a;

        let rb = state.partial_trace(Subsystem::B).scale(db as f64);
        let fb = inv_sqrt_psd(&rb, opts.rank_cutoff)?.into_matrix();
        state = apply_filter(&state, &id_a.kronecker(&fb))?;
        filter_b = &fb * filter_b;
        residual = reduction_residual(&state);
    }

    // Fix the overall scale so the recorded filters map ρ onto the FNF state
    // without a further normalization.
    let raw = rho.matrix().conjugate_by(&filter_a.kronecker(&filter_b)).trace();
    filter_a *= c(1.0 / raw.sqrt(), 0.0);

    let ga = gell_mann_basis(da)?;
    let gb = gell_mann_basis(db)?;
    let (ta, tb) = (ga.traceless(), gb.traceless());
    let corr = RMat::from_fn(ta.len(), tb.len(), |i, j| local_expectation(&state, ta[i].as_matrix(), tb[j].as_matrix()).re);
    let dec = numerics::svd_real(&corr);
    let k = dec.singular_values.len();
    let scale = (da * db) as f64;
    let xi = dec.singular_values.iter().map(|s| s * scale).collect();
    let rotate = |coeffs: &RMat, basis: &[HermitianMatrix]| -> Vec<HermitianMatrix> {
        let d = basis[0].dim();
        (0..k)
            .map(|col| {
                let m = basis
                    .iter()
                    .enumerate()
                    .fold(CMat::zeros(d, d), |acc, (i, g)| acc + g.as_matrix() * C64::new(coeffs[(i, col)], 0.0));
                HermitianMatrix::symmetrized(m)
            })
            .collect()
    };
    let basis_a = rotate(&dec.u, ta);
    let basis_b = rotate(&dec.v, tb);
    Ok(FilterNormalFormResult { state, filter_a, filter_b, xi, basis_a, basis_b, iterations, residual })
}

/// `Σ ξ_i ≤ d² − d` for `d_A = d_B = d`.
pub fn prop6_test(fnf: &FilterNormalFormResult, tol: f64) -> Result<CriterionVerdict> {
    let (da, db) = fnf.state.dims();
    if da != db {
        return Err(Error::DimensionMismatch(format!(
            "prop6 needs equal local dimensions, got {da}x{db}; use eq8 instead"
        )));
    }
    let d = da as f64;
    Ok(CriterionVerdict::new(Criterion::Prop6, fnf.xi_sum(), d * d - d, tol))
}

/// Asymmetric covariance bound on `Σ ξ_i` (sides ordered so `d_A ≤ d_B`).
pub fn eq8_test(fnf: &FilterNormalFormResult, tol: f64) -> CriterionVerdict {
    let (da, db) = fnf.state.dims();
    CriterionVerdict::new(Criterion::Eq8, fnf.xi_sum(), eq8_bound(da, db), tol)
}

/// `(d_A d_B / 2)(1 − 1/d_A + (d_A² − 1)/d_B + min{0, −(d_B − 1) + (d_B² − d_A²)/d_B})`
/// with the smaller dimension taken as `d_A`.
pub fn eq8_bound(dim_a: usize, dim_b: usize) -> f64 {
    let (a, b) = (dim_a.min(dim_b) as f64, dim_a.max(dim_b) as f64);
    let tail = (-(b - 1.0) + (b * b - a * a) / b).min(0.0);
    a * b / 2.0 * (1.0 - 1.0 / a + (a * a - 1.0) / b + tail)
}

/// Realignment bound in FNF: `Σ ξ_i ≤ d_A d_B − √(d_A d_B)`.
pub fn ccnr_fnf_bound(dim_a: usize, dim_b: usize) -> f64 {
    let n = (dim_a * dim_b) as f64;
    n - n.sqrt()
}

/// Bloch-representation bound: `Σ ξ_i ≤ √(d_A d_B (d_A − 1)(d_B − 1))`.
pub fn dv_fnf_bound(dim_a: usize, dim_b: usize) -> f64 {
    let (a, b) = (dim_a as f64, dim_b as f64);
    (a * b * (a - 1.0) * (b - 1.0)).sqrt()
}

/// `to_fnf` on `(1 − ε)ρ + ε·1/(d_A d_B)`; `ε = 0` leaves `ρ` untouched.
pub fn to_fnf_regularized(rho: &DensityMatrix, epsilon: f64, opts: &FnfOptions) -> Result<FilterNormalFormResult> {
    if epsilon == 0.0 {
        to_fnf(rho, opts)
    } else {
        to_fnf(&crate::state::mix_with_white_noise(rho, 1.0 - epsilon)?, opts)
    }
}
