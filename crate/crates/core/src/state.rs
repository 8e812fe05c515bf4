//! Bipartite density matrices, orthonormal observable bases and sampling.
//!
//! Composite indices are A-major: basis state `|i⟩_A ⊗ |j⟩_B` sits at
//! position `i * dim_b + j`. Partial traces, partial transposes and the
//! realignment map all share this convention.

use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{c, CMat, HermitianMatrix, C64};

/// Tolerance on unit trace and on negative eigenvalues of a density matrix.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// A mixed state on `H_A ⊗ H_B`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dim_a: usize,
    dim_b: usize,
    matrix: HermitianMatrix,
}

impl DensityMatrix {
    /// Validates dimensions, unit trace and positivity (both within
    /// [`STATE_TOL`]).
    pub fn new(dim_a: usize, dim_b: usize, matrix: HermitianMatrix) -> Result<Self> {
        if dim_a < 2 || dim_b < 2 {
            return Err(Error::Validation(format!(
                "local dimensions must be at least 2, got dimA={dim_a}, dimB={dim_b}"
            )));
        }
        if matrix.dim() != dim_a * dim_b {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {0}x{0} but dimA*dimB = {1}",
                matrix.dim(),
                dim_a * dim_b
            )));
        }
        let tr = matrix.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::Validation(format!("trace must be 1, got {tr}")));
        }
        let min = matrix.min_eigenvalue();
        if min < -STATE_TOL {
            return Err(Error::Validation(format!(
                "matrix must be positive semidefinite, smallest eigenvalue {min:e}"
            )));
        }
        Ok(Self { dim_a, dim_b, matrix })
    }

    /// Normalizes a PSD matrix to unit trace first.
    pub fn from_unnormalized(dim_a: usize, dim_b: usize, matrix: HermitianMatrix) -> Result<Self> {
        let tr = matrix.trace();
        if !(tr > 0.0) {
            return Err(Error::Validation(format!("cannot normalize matrix with trace {tr}")));
        }
        Self::new(dim_a, dim_b, matrix.scale(1.0 / tr))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) composite vector.
    pub fn pure(dim_a: usize, dim_b: usize, psi: &[C64]) -> Result<Self> {
        Self::from_unnormalized(dim_a, dim_b, HermitianMatrix::outer(psi))
    }

    pub fn product(rho_a: &HermitianMatrix, rho_b: &HermitianMatrix) -> Result<Self> {
        Self::new(rho_a.dim(), rho_b.dim(), rho_a.kron(rho_b))
    }

    pub fn maximally_mixed(dim_a: usize, dim_b: usize) -> Result<Self> {
        let n = dim_a * dim_b;
        Self::new(dim_a, dim_b, HermitianMatrix::identity(n).scale(1.0 / n as f64))
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    /// Entry `ρ[(i, j), (k, l)]` with `i, k` on A and `j, l` on B.
    pub fn entry(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.matrix.as_matrix()[(i * self.dim_b + j, k * self.dim_b + l)]
    }

    pub fn partial_trace(&self, keep: Subsystem) -> HermitianMatrix {
        partial_trace(self, keep)
    }

    /// `(U ⊗ V) ρ (U ⊗ V)†`.
    pub fn local_unitary(&self, u: &CMat, v: &CMat) -> Result<Self> {
        let w = u.kronecker(v);
        Self::new(self.dim_a, self.dim_b, self.matrix.conjugate_by(&w))
    }

    /// Partial transpose on subsystem B.
    pub fn partial_transpose(&self) -> HermitianMatrix {
        let (da, db) = self.dims();
        let n = da * db;
        let m = CMat::from_fn(n, n, |r, col| {
            let (i, j) = (r / db, r % db);
            let (k, l) = (col / db, col % db);
            self.entry(i, l, k, j)
        });
        HermitianMatrix::symmetrized(m)
    }

    /// Same state with the roles of A and B exchanged.
    pub fn swap_subsystems(&self) -> Self {
        let (da, db) = self.dims();
        let n = da * db;
        let m = CMat::from_fn(n, n, |r, col| {
            let (j, i) = (r / da, r % da);
            let (l, k) = (col / da, col % da);
            self.entry(i, j, k, l)
        });
        Self { dim_a: db, dim_b: da, matrix: HermitianMatrix::symmetrized(m) }
    }
}

/// Reduced state on the kept subsystem.
pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> HermitianMatrix {
    let (da, db) = rho.dims();
    let m = match keep {
        Subsystem::A => CMat::from_fn(da, da, |i, k| (0..db).map(|j| rho.entry(i, j, k, j)).sum()),
        Subsystem::B => CMat::from_fn(db, db, |j, l| (0..da).map(|i| rho.entry(i, j, i, l)).sum()),
    };
    HermitianMatrix::symmetrized(m)
}

/// `Tr[m²]`.
pub fn purity(m: &HermitianMatrix) -> f64 {
    m.as_matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// `p·ρ + (1 − p)·1/(d_A d_B)`.
pub fn mix_with_white_noise(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Validation(format!("mixing weight p must lie in [0, 1], got {p}")));
    }
    let (da, db) = rho.dims();
    let n = da * db;
    let noise = HermitianMatrix::identity(n).scale((1.0 - p) / n as f64);
    DensityMatrix::new(da, db, rho.matrix().scale(p).add(&noise))
}

/// Ginibre-ensemble state `G G† / Tr[G G†]` with `G` a `(d_A d_B) × rank`
/// matrix of i.i.d. standard complex Gaussians.
pub fn random_density_matrix<R: Rng + ?Sized>(
    dim_a: usize,
    dim_b: usize,
    rank: usize,
    rng: &mut R,
) -> Result<DensityMatrix> {
    let n = dim_a * dim_b;
    if rank == 0 || rank > n {
        return Err(Error::Validation(format!("rank must lie in 1..={n}, got {rank}")));
    }
    let g = CMat::from_fn(n, rank, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    let m = HermitianMatrix::symmetrized(&g * g.adjoint());
    DensityMatrix::from_unnormalized(dim_a, dim_b, m)
}

pub fn random_density_matrix_seeded(dim_a: usize, dim_b: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_density_matrix(dim_a, dim_b, rank, &mut rng)
}

/// Haar-random unitary via QR of a complex Ginibre matrix with phase fix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Random pure state of dimension `dim`, Haar distributed.
pub fn random_pure_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c(re, im)
        })
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// A Hilbert–Schmidt orthonormal basis of Hermitian operators on `C^d`
/// with `identity/√d` first.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableBasis {
    dim: usize,
    observables: Vec<HermitianMatrix>,
}

impl ObservableBasis {
    /// Checks `Tr[A_k A_l] = δ_kl` within `1e-10` and the count `d²`.
    pub fn new(dim: usize, observables: Vec<HermitianMatrix>) -> Result<Self> {
        if observables.len() != dim * dim {
            return Err(Error::Validation(format!(
                "an observable basis on C^{dim} needs {} elements, got {}",
                dim * dim,
                observables.len()
            )));
        }
        if let Some(bad) = observables.iter().position(|o| o.dim() != dim) {
            return Err(Error::DimensionMismatch(format!("observable {bad} is not {dim}x{dim}")));
        }
        check_orthonormal(&observables, 1e-10)?;
        Ok(Self { dim, observables })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn observables(&self) -> &[HermitianMatrix] {
        &self.observables
    }

    /// Everything after the leading `identity/√d` element.
    pub fn traceless(&self) -> &[HermitianMatrix] {
        &self.observables[1..]
    }

    /// Gram matrix `Tr[A_k A_l]`.
    pub fn gram(&self) -> nalgebra::DMatrix<f64> {
        gram(&self.observables)
    }
}

impl Deref for ObservableBasis {
    type Target = [HermitianMatrix];

    fn deref(&self) -> &Self::Target {
        &self.observables
    }
}

pub(crate) fn gram(ops: &[HermitianMatrix]) -> nalgebra::DMatrix<f64> {
    let n = ops.len();
    nalgebra::DMatrix::from_fn(n, n, |i, j| ops[i].trace_product(&ops[j]))
}

pub(crate) fn check_orthonormal(ops: &[HermitianMatrix], tol: f64) -> Result<()> {
    let g = gram(ops);
    for i in 0..ops.len() {
        for j in 0..ops.len() {
            let want = if i == j { 1.0 } else { 0.0 };
            if (g[(i, j)] - want).abs() > tol {
                return Err(Error::Validation(format!(
                    "observables are not orthonormal: Tr[A_{i} A_{j}] = {}",
                    g[(i, j)]
                )));
            }
        }
    }
    Ok(())
}

/// `{1, σx, σy, σz}/√2`.
pub fn pauli_basis() -> ObservableBasis {
    gell_mann_basis(2).expect("d = 2 is valid")
}

/// Normalized generalized Gell-Mann matrices: `identity/√d`, then for each
/// pair `j < k` the symmetric and antisymmetric off-diagonal elements, then
/// the `d − 1` diagonal ones.
pub fn gell_mann_basis(d: usize) -> Result<ObservableBasis> {
    if d < 2 {
        return Err(Error::Validation(format!("basis dimension must be at least 2, got {d}")));
    }
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut ops = Vec::with_capacity(d * d);
    ops.push(HermitianMatrix::identity(d).scale(1.0 / (d as f64).sqrt()));
    for j in 0..d {
        for k in (j + 1)..d {
            let mut sym = CMat::zeros(d, d);
            sym[(j, k)] = c(s2, 0.0);
            sym[(k, j)] = c(s2, 0.0);
            ops.push(HermitianMatrix::symmetrized(sym));
            let mut anti = CMat::zeros(d, d);
            anti[(j, k)] = c(0.0, -s2);
            anti[(k, j)] = c(0.0, s2);
            ops.push(HermitianMatrix::symmetrized(anti));
        }
    }
    for l in 1..d {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut diag = vec![0.0; d];
        for x in diag.iter_mut().take(l) {
            *x = 1.0 / norm;
        }
        diag[l] = -(l as f64) / norm;
        ops.push(HermitianMatrix::from_real_diagonal(&diag));
    }
    ObservableBasis::new(d, ops)
}

/// Standard computational basis vector `|i⟩_A ⊗ |j⟩_B` amplitudes.
pub fn basis_vector(dim: usize, index: usize) -> Vec<C64> {
    let mut v = vec![C64::default(); dim];
    v[index] = c(1.0, 0.0);
    v
}

/// `(|00⟩ + |11⟩ + … )/√d`.
pub fn maximally_entangled(d: usize) -> Result<DensityMatrix> {
    let mut psi = vec![C64::default(); d * d];
    for i in 0..d {
        psi[i * d + i] = c(1.0, 0.0);
    }
    DensityMatrix::pure(d, d, &psi)
}
