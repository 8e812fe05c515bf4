//! Dense kernels for the tiny matrices used throughout the crate.
//!
//! Every matrix here is at most a few dozen rows, so eigenproblems are solved
//! with cyclic Jacobi sweeps (accurate to working precision, no workspace
//! juggling). General SVD is delegated to `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar used everywhere.
pub type C64 = Complex64;
/// Dense complex matrix.
pub type CMat = DMatrix<C64>;
/// Dense real matrix.
pub type RMat = DMatrix<f64>;

/// Default tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Default slack when asserting positive semidefiniteness.
pub const PSD_SLACK: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest absolute entry, at least 1. Used to make tolerances scale-aware.
fn scale_of<T: Copy>(m: &DMatrix<T>, abs: impl Fn(T) -> f64) -> f64 {
    m.iter().map(|&x| abs(x)).fold(1.0, f64::max)
}

/// A complex Hermitian matrix, stored exactly Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    /// Validates Hermiticity within [`HERMITIAN_TOL`] (relative to the largest
    /// entry) and stores `(m + m†)/2`.
    pub fn new(m: CMat) -> Result<Self> {
        Self::with_tolerance(m, HERMITIAN_TOL)
    }

    pub fn with_tolerance(m: CMat, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Validation(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::Validation("Hermitian matrix must be non-empty".into()));
        }
        let n = m.nrows();
        let scale = scale_of(&m, |z: C64| z.norm());
        for i in 0..n {
            for j in i..n {
                let dev = (m[(i, j)] - m[(j, i)].conj()).norm();
                if !dev.is_finite() || dev > tol * scale {
                    return Err(Error::Validation(format!(
                        "matrix is not Hermitian: |m[{i}][{j}] - conj(m[{j}][{i}])| = {dev:e}"
                    )));
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    /// Stores `(m + m†)/2` without validation.
    pub fn symmetrized(m: CMat) -> Self {
        let n = m.nrows();
        let mut out = m;
        for i in 0..n {
            out[(i, i)] = c(out[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let avg = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
                out[(i, j)] = avg;
                out[(j, i)] = avg.conj();
            }
        }
        Self(out)
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMat::identity(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(CMat::from_fn(n, n, |i, j| if i == j { c(diag[i], 0.0) } else { C64::default() }))
    }

    /// `|ψ⟩⟨ψ|` for an arbitrary (not necessarily normalized) vector.
    pub fn outer(psi: &[C64]) -> Self {
        let n = psi.len();
        Self::symmetrized(CMat::from_fn(n, n, |i, j| psi[i] * psi[j].conj()))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// `Re Tr[self · other]`; for two Hermitian matrices the trace is real.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        trace_product(&self.0, &other.0).re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * c(s, 0.0))
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        Self(&self.0 + &other.0)
    }

    /// `u · self · u†`. The result is re-symmetrized.
    pub fn conjugate_by(&self, u: &CMat) -> Self {
        Self::symmetrized(u * &self.0 * u.adjoint())
    }

    pub fn kron(&self, other: &HermitianMatrix) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn eigh(&self) -> Eigh {
        eigh(self)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigh().values[0]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

/// A real symmetric matrix; construction symmetrizes exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct RealSymmetricMatrix(RMat);

impl RealSymmetricMatrix {
    pub fn new(m: RMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Validation(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(m: RMat) -> Self {
        let n = m.nrows();
        let mut out = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = avg;
                out[(j, i)] = avg;
            }
        }
        Self(out)
    }

    pub fn identity(dim: usize) -> Self {
        Self(RMat::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(RMat::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(RMat::from_diagonal(&nalgebra::DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &RMat {
        &self.0
    }

    pub fn into_matrix(self) -> RMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn eigh(&self) -> RealEigh {
        eigh_real(self)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigh().values[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigh().values.last().expect("non-empty")
    }

    /// `μ · self · μᵀ`.
    pub fn congruence(&self, mu: &RMat) -> Self {
        Self::symmetrized(mu * &self.0 * mu.transpose())
    }
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and
/// unitary eigenvector columns.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eigh {
    pub fn reconstruct(&self) -> CMat {
        let n = self.values.len();
        let d = CMat::from_fn(n, n, |i, j| if i == j { c(self.values[i], 0.0) } else { C64::default() });
        &self.vectors * d * self.vectors.adjoint()
    }

    /// `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.values.len();
        let mut out = CMat::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let fl = f(lam);
            if fl == 0.0 {
                continue;
            }
            let v = self.vectors.column(k);
            for i in 0..n {
                let vi = v[i] * fl;
                for j in 0..n {
                    out[(i, j)] += vi * v[j].conj();
                }
            }
        }
        HermitianMatrix::symmetrized(out)
    }
}

/// Real symmetric eigendecomposition: ascending values, orthogonal columns.
#[derive(Clone, Debug)]
pub struct RealEigh {
    pub values: Vec<f64>,
    pub vectors: RMat,
}

impl RealEigh {
    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealSymmetricMatrix {
        let n = self.values.len();
        let mut out = RMat::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let fl = f(lam);
            if fl == 0.0 {
                continue;
            }
            let v = self.vectors.column(k);
            out += v * v.transpose() * fl;
        }
        RealSymmetricMatrix::symmetrized(out)
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn eigh(m: &HermitianMatrix) -> Eigh {
    let n = m.dim();
    let mut a = m.as_matrix().clone();
    let mut v = CMat::identity(n, n);
    let total = a.norm();
    if total > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() <= 1e-17 * total {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let mag = apq.norm();
                    if mag <= 1e-300 || mag <= 1e-18 * total {
                        continue;
                    }
                    let phase = apq / mag;
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let zeta = (aqq - app) / (2.0 * mag);
                    let t = if zeta == 0.0 {
                        1.0
                    } else {
                        zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                    };
                    let cs = 1.0 / (1.0 + t * t).sqrt();
                    let sn = t * cs;
                    // U = diag(1, conj(phase)) · [[c, s], [-s, c]] on (p, q).
                    let up_p = c(cs, 0.0);
                    let up_q = c(sn, 0.0);
                    let uq_p = -phase.conj() * sn;
                    let uq_q = phase.conj() * cs;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * up_p + akq * uq_p;
                        a[(k, q)] = akp * up_q + akq * uq_q;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = up_p.conj() * apk + uq_p.conj() * aqk;
                        a[(q, k)] = up_q.conj() * apk + uq_q.conj() * aqk;
                    }
                    a[(p, q)] = C64::default();
                    a[(q, p)] = C64::default();
                    a[(p, p)] = c(a[(p, p)].re, 0.0);
                    a[(q, q)] = c(a[(q, q)].re, 0.0);
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * up_p + vkq * uq_p;
                        v[(k, q)] = vkp * up_q + vkq * uq_q;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMat::from_fn(n, n, |i, j| v[(i, order[j])]);
    Eigh { values, vectors }
}

/// Real symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn eigh_real(m: &RealSymmetricMatrix) -> RealEigh {
    let n = m.dim();
    let mut a = m.as_matrix().clone();
    let mut v = RMat::identity(n, n);
    let total = a.norm();
    if total > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
            if off.sqrt() <= 1e-17 * total {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq.abs() <= 1e-300 || apq.abs() <= 1e-18 * total {
                        continue;
                    }
                    let zeta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = if zeta == 0.0 {
                        1.0
                    } else {
                        zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                    };
                    let cs = 1.0 / (1.0 + t * t).sqrt();
                    let sn = t * cs;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = cs * akp - sn * akq;
                        a[(k, q)] = sn * akp + cs * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = cs * apk - sn * aqk;
                        a[(q, k)] = sn * apk + cs * aqk;
                    }
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = cs * vkp - sn * vkq;
                        v[(k, q)] = sn * vkp + cs * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = RMat::from_fn(n, n, |i, j| v[(i, order[j])]);
    RealEigh { values, vectors }
}

/// Singular value decomposition `m = U Σ V†` with descending singular values.
///
/// `U` is `rows × k`, `V` is `cols × k` with `k = min(rows, cols)`.
#[derive(Clone, Debug)]
pub struct Svd<T: nalgebra::Scalar> {
    pub u: DMatrix<T>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<T>,
}

pub fn svd(m: &CMat) -> Svd<C64> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Svd { u: CMat::zeros(rows, 0), singular_values: vec![], v: CMat::zeros(cols, 0) };
    }
    let dec = m.clone().svd(true, true);
    let u = dec.u.expect("requested U");
    let v = dec.v_t.expect("requested V").adjoint();
    let sv: Vec<f64> = dec.singular_values.iter().copied().collect();
    sorted_svd(u, sv, v)
}

pub fn svd_real(m: &RMat) -> Svd<f64> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Svd { u: RMat::zeros(rows, 0), singular_values: vec![], v: RMat::zeros(cols, 0) };
    }
    let dec = m.clone().svd(true, true);
    let u = dec.u.expect("requested U");
    let v = dec.v_t.expect("requested V").transpose();
    let sv: Vec<f64> = dec.singular_values.iter().copied().collect();
    sorted_svd(u, sv, v)
}

fn sorted_svd<T: nalgebra::Scalar + Copy>(u: DMatrix<T>, sv: Vec<f64>, v: DMatrix<T>) -> Svd<T> {
    let k = sv.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let u = DMatrix::from_fn(u.nrows(), k, |i, j| u[(i, order[j])]);
    let v = DMatrix::from_fn(v.nrows(), k, |i, j| v[(i, order[j])]);
    let singular_values = order.iter().map(|&i| sv[i].max(0.0)).collect();
    Svd { u, singular_values, v }
}

/// Extends orthonormal columns `q` (n × k) to a full n × n orthogonal matrix.
pub fn complete_orthonormal(q: &RMat) -> RMat {
    let n = q.nrows();
    let mut cols: Vec<nalgebra::DVector<f64>> = q.column_iter().map(|c| c.into_owned()).collect();
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut cand = nalgebra::DVector::<f64>::zeros(n);
        cand[e] = 1.0;
        for _ in 0..2 {
            for col in &cols {
                let proj = col.dot(&cand);
                cand -= col * proj;
            }
        }
        let norm = cand.norm();
        if norm > 1e-8 {
            cols.push(cand / norm);
        }
    }
    RMat::from_columns(&cols)
}

/// `m^{-1/2}` for a positive definite Hermitian matrix.
///
/// Fails with [`Error::SingularReducedState`] when the smallest eigenvalue is
/// below `cutoff`.
pub fn inv_sqrt_psd(m: &HermitianMatrix, cutoff: f64) -> Result<HermitianMatrix> {
    let e = m.eigh();
    let min = e.values[0];
    if !(min >= cutoff) {
        return Err(Error::SingularReducedState { min_eigenvalue: min, cutoff });
    }
    Ok(e.map(|x| 1.0 / x.sqrt()))
}

/// Nearest positive semidefinite matrix in Frobenius norm.
pub trait ProjectPsd: Sized {
    fn project_psd(&self) -> Self;
}

impl ProjectPsd for HermitianMatrix {
    fn project_psd(&self) -> Self {
        self.eigh().map(|x| x.max(0.0))
    }
}

impl ProjectPsd for RealSymmetricMatrix {
    fn project_psd(&self) -> Self {
        self.eigh().map(|x| x.max(0.0))
    }
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    svd(m).singular_values.iter().sum()
}

/// `Tr[a · b]` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut acc = C64::default();
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Block-diagonal direct sum `a ⊕ b`.
pub fn direct_sum(a: &RMat, b: &RMat) -> RMat {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut out = RMat::zeros(na + nb, na + nb);
    out.view_mut((0, 0), (na, na)).copy_from(a);
    out.view_mut((na, na), (nb, nb)).copy_from(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn herm(rows: &[&[(f64, f64)]]) -> HermitianMatrix {
        let n = rows.len();
        HermitianMatrix::new(CMat::from_fn(n, n, |i, j| c(rows[i][j].0, rows[i][j].1))).unwrap()
    }

    #[test]
    fn eigh_identity() {
        let e = HermitianMatrix::identity(3).eigh();
        for v in e.values {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn eigh_diagonal_sorted() {
        let e = HermitianMatrix::from_real_diagonal(&[2.0, -1.0]).eigh();
        assert_eq!(e.values, vec![-1.0, 2.0]);
    }

    #[test]
    fn eigh_pauli_x() {
        let x = herm(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]]);
        let e = x.eigh();
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-14);
        let s = 1.0 / 2f64.sqrt();
        // (|0⟩ - |1⟩)/√2 and (|0⟩ + |1⟩)/√2 up to a global phase.
        let v0 = e.vectors.column(0);
        let v1 = e.vectors.column(1);
        assert_abs_diff_eq!((v0[0] * s - v0[1] * s).norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!((v1[0] * s + v1[1] * s).norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigh_complex_reconstructs() {
        let m = herm(&[
            &[(1.0, 0.0), (0.3, -0.7), (0.0, 0.2)],
            &[(0.3, 0.7), (-2.0, 0.0), (0.5, 0.5)],
            &[(0.0, -0.2), (0.5, -0.5), (0.25, 0.0)],
        ]);
        let e = m.eigh();
        let err = (e.reconstruct() - m.as_matrix()).norm();
        assert!(err <= 1e-12 * m.frobenius_norm(), "err {err}");
        let unit = e.vectors.adjoint() * &e.vectors - CMat::identity(3, 3);
        assert!(unit.norm() < 1e-13);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMat::from_fn(2, 2, |i, j| c((i + 2 * j) as f64, 0.0));
        assert!(matches!(HermitianMatrix::new(m), Err(Error::Validation(_))));
    }

    #[test]
    fn svd_zero_and_diagonal() {
        let z = svd(&CMat::zeros(3, 2));
        assert!(z.singular_values.iter().all(|&s| s == 0.0));
        let d = svd(&CMat::from_fn(2, 2, |i, j| if i == j { c(3.0 + i as f64, 0.0) } else { c(0.0, 0.0) }));
        assert_abs_diff_eq!(d.singular_values[0], 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.singular_values[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn inv_sqrt_cases() {
        let id = inv_sqrt_psd(&HermitianMatrix::identity(2), 1e-12).unwrap();
        assert!((id.as_matrix() - CMat::identity(2, 2)).norm() < 1e-12);
        let r = inv_sqrt_psd(&HermitianMatrix::from_real_diagonal(&[4.0, 1.0]), 1e-12).unwrap();
        assert_abs_diff_eq!(r.as_matrix()[(0, 0)].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r.as_matrix()[(1, 1)].re, 1.0, epsilon = 1e-14);
        let sing = HermitianMatrix::from_real_diagonal(&[1.0, 1e-14]);
        assert!(matches!(inv_sqrt_psd(&sing, 1e-10), Err(Error::SingularReducedState { .. })));
    }

    #[test]
    fn project_psd_cases() {
        let p = RealSymmetricMatrix::from_diagonal(&[1.0, -2.0]).project_psd();
        assert_abs_diff_eq!(p.as_matrix()[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.as_matrix()[(1, 1)], 0.0, epsilon = 1e-15);
        let v = nalgebra::DVector::from_vec(vec![1.0, 2.0, -0.5]);
        let neg = RealSymmetricMatrix::new(-(&v * v.transpose())).unwrap().project_psd();
        assert!(neg.as_matrix().norm() < 1e-14);
        let psd = HermitianMatrix::from_real_diagonal(&[0.5, 0.25]);
        assert!((psd.project_psd().as_matrix() - psd.as_matrix()).norm() < 1e-15);
    }

    #[test]
    fn complete_orthonormal_is_orthogonal() {
        let q = RMat::from_column_slice(3, 1, &[0.6, 0.8, 0.0]);
        let full = complete_orthonormal(&q);
        assert_eq!(full.shape(), (3, 3));
        assert!((full.transpose() * &full - RMat::identity(3, 3)).norm() < 1e-12);
        assert_abs_diff_eq!(full[(0, 0)], 0.6);
    }
}
