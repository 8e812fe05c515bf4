//! Exact two-qubit CMC as a small semidefinite program.
//!
//! With traceless orthonormal qubit observables every admissible `κ` has the
//! form `(1₃ − ρ)/2` for a real 3×3 density matrix `ρ`, so the criterion
//! asks for `ρ_A, ρ_B` with
//!
//! ```text
//! M(ρ_A, ρ_B) = γ − 1₆/2 + (ρ_A ⊕ ρ_B)/2 ≥ 0.
//! ```
//!
//! We compute `f* = max λ_min(M)` over both spectraplexes with a primal
//! log-barrier method (Newton steps on 11 parameters). Every iterate yields
//! a certified bracket:
//!
//! * lower bound: `λ_min(M)` at the current `(ρ_A, ρ_B)`;
//! * upper bound: for the dual point `Z = S⁻¹ / Tr S⁻¹` (PSD, unit trace),
//!   `Tr[Z(γ − 1/2)] + (λ_max(Z_AA) + λ_max(Z_BB))/2 ≥ f*` by weak duality.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::covariance::{bipartite_cm, BlockCovarianceMatrix};
use crate::error::{Error, Result};
use crate::numerics::{direct_sum, HermitianMatrix, RMat, RealSymmetricMatrix};
use crate::state::{check_orthonormal, pauli_basis, DensityMatrix};
use crate::verdict::{Criterion, CriterionVerdict};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitCmcOptions {
    /// The CMC counts as violated when `f* < −tol`.
    pub tol: f64,
    /// Stop once `upper − lower` is below this. Brackets narrower than about
    /// `1e-8` are rarely reached: the barrier Hessian becomes too
    /// ill-conditioned near rank-deficient optima, and the solver then stops
    /// after several rounds without progress.
    pub gap_tol: f64,
    pub max_newton: usize,
}

impl Default for QubitCmcOptions {
    fn default() -> Self {
        Self { tol: 1e-7, gap_tol: 1e-9, max_newton: 400 }
    }
}

/// Real 3×3 density matrices encoding `κ_A = (1₃ − ρ_A)/2`, `κ_B` likewise.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaCandidate {
    pub rho_a: RealSymmetricMatrix,
    pub rho_b: RealSymmetricMatrix,
}

impl KappaCandidate {
    /// Checks unit trace (1e-10) and positivity (1e-9 slack).
    pub fn new(rho_a: RealSymmetricMatrix, rho_b: RealSymmetricMatrix) -> Result<Self> {
        for (name, r) in [("rho_A", &rho_a), ("rho_B", &rho_b)] {
            if r.dim() != 3 {
                return Err(Error::DimensionMismatch(format!("{name} must be 3x3")));
            }
            if (r.trace() - 1.0).abs() > 1e-10 {
                return Err(Error::Validation(format!("{name} must have unit trace, got {}", r.trace())));
            }
            if r.min_eigenvalue() < -1e-9 {
                return Err(Error::Validation(format!("{name} must be positive semidefinite")));
            }
        }
        Ok(Self { rho_a, rho_b })
    }

    pub fn kappa_a(&self) -> RealSymmetricMatrix {
        RealSymmetricMatrix::symmetrized((RMat::identity(3, 3) - self.rho_a.as_matrix()) * 0.5)
    }

    pub fn kappa_b(&self) -> RealSymmetricMatrix {
        RealSymmetricMatrix::symmetrized((RMat::identity(3, 3) - self.rho_b.as_matrix()) * 0.5)
    }

    /// `γ − 1/2 + (ρ_A ⊕ ρ_B)/2`.
    pub fn slack_matrix(&self, gamma6: &RealSymmetricMatrix) -> RealSymmetricMatrix {
        let m = gamma6.as_matrix() - RMat::identity(6, 6) * 0.5
            + direct_sum(self.rho_a.as_matrix(), self.rho_b.as_matrix()) * 0.5;
        RealSymmetricMatrix::symmetrized(m)
    }
}

/// Either a κ pair satisfying the CMC or a dual witness refuting it.
#[derive(Clone, Debug)]
pub enum QubitCmcCertificate {
    Feasible(KappaCandidate),
    Infeasible { dual: RealSymmetricMatrix, upper_bound: f64 },
}

#[derive(Clone, Debug)]
pub struct QubitCmcOutcome {
    pub verdict: CriterionVerdict,
    /// Certified lower bound on `f*` (attained by `candidate`).
    pub lower_bound: f64,
    /// Certified upper bound on `f*` (attained by `dual`).
    pub upper_bound: f64,
    /// Best primal point found.
    pub candidate: KappaCandidate,
    /// Unit-trace PSD dual point on the 6×6 CM space.
    pub dual: RealSymmetricMatrix,
    pub gamma6: RealSymmetricMatrix,
    pub observables_a: Vec<HermitianMatrix>,
    pub observables_b: Vec<HermitianMatrix>,
    pub newton_steps: usize,
}

impl QubitCmcOutcome {
    pub fn feasible(&self) -> bool {
        !self.verdict.detected
    }

    pub fn certificate(&self) -> QubitCmcCertificate {
        if self.feasible() {
            QubitCmcCertificate::Feasible(self.candidate.clone())
        } else {
            QubitCmcCertificate::Infeasible { dual: self.dual.clone(), upper_bound: self.upper_bound }
        }
    }
}

fn strip_identity(ops: &[HermitianMatrix], side: &str) -> Result<Vec<HermitianMatrix>> {
    if ops.iter().any(|o| o.dim() != 2) {
        return Err(Error::DimensionMismatch(format!("{side} observables must act on a qubit")));
    }
    let traceless: Vec<HermitianMatrix> = match ops.len() {
        3 => ops.to_vec(),
        4 => {
            let first = &ops[0];
            let dev = (first.as_matrix() - crate::numerics::CMat::identity(2, 2) * crate::numerics::c(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm();
            if dev > 1e-10 {
                return Err(Error::Validation(format!("{side} basis must start with identity/sqrt(2)")));
            }
            ops[1..].to_vec()
        }
        n => return Err(Error::Validation(format!("{side} needs 3 traceless or 4 qubit observables, got {n}"))),
    };
    if traceless.iter().any(|o| o.trace().abs() > 1e-10) {
        return Err(Error::Validation(format!("{side} observables must be traceless")));
    }
    check_orthonormal(&traceless, 1e-10)?;
    Ok(traceless)
}

/// Extracts the 6×6 CM over traceless orthonormal qubit observables, dropping
/// identity rows when the basis includes `identity/√2`.
pub fn qubit_gamma6(gamma: &BlockCovarianceMatrix) -> Result<(RealSymmetricMatrix, Vec<HermitianMatrix>, Vec<HermitianMatrix>)> {
    let obs_a = strip_identity(&gamma.observables_a, "A")?;
    let obs_b = strip_identity(&gamma.observables_b, "B")?;
    let off_a = gamma.observables_a.len() - 3;
    let off_b = gamma.observables_b.len() - 3;
    let full = gamma.assembled();
    let na = gamma.observables_a.len();
    let idx: Vec<usize> = (off_a..na).chain((na + off_b)..(na + gamma.observables_b.len())).collect();
    let m = RMat::from_fn(6, 6, |i, j| full.as_matrix()[(idx[i], idx[j])]);
    Ok((RealSymmetricMatrix::symmetrized(m), obs_a, obs_b))
}

/// Two-qubit CM over the normalized Pauli triple on both sides.
pub fn qubit_cm6(rho: &DensityMatrix) -> Result<BlockCovarianceMatrix> {
    if rho.dims() != (2, 2) {
        return Err(Error::DimensionMismatch(format!(
            "cmc-sdp requires 2x2, got {}x{}",
            rho.dim_a(),
            rho.dim_b()
        )));
    }
    let p = pauli_basis();
    bipartite_cm(rho, p.traceless(), p.traceless())
}

/// Orthonormal basis of traceless real symmetric 3×3 matrices.
fn traceless_symmetric_basis() -> [RMat; 5] {
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let s6 = 1.0 / 6f64.sqrt();
    let off = |i: usize, j: usize| {
        let mut m = RMat::zeros(3, 3);
        m[(i, j)] = s2;
        m[(j, i)] = s2;
        m
    };
    [
        off(0, 1),
        off(0, 2),
        off(1, 2),
        RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![s2, -s2, 0.0])),
        RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![s6, s6, -2.0 * s6])),
    ]
}

struct Barrier {
    gp: RMat,
    basis: [RMat; 5],
}

struct Point {
    y: [f64; 11],
}

impl Barrier {
    fn rho(&self, x: &[f64]) -> RMat {
        let mut r = RMat::identity(3, 3) / 3.0;
        for (xi, e) in x.iter().zip(&self.basis) {
            r += e * *xi;
        }
        r
    }

    fn parts(&self, p: &Point) -> (RMat, RMat, RMat) {
        let ra = self.rho(&p.y[0..5]);
        let rb = self.rho(&p.y[5..10]);
        let s = &self.gp + direct_sum(&ra, &rb) * 0.5 - RMat::identity(6, 6) * p.y[10];
        (s, ra, rb)
    }

    /// Sum of the three log-determinants, or `None` outside the domain. The
    /// linear term `t/μ` is handled by the caller as a difference, which
    /// keeps line searches accurate once `t/μ` dwarfs the barrier change.
    fn log_barrier(&self, p: &Point) -> Option<f64> {
        let (s, ra, rb) = self.parts(p);
        let mut v = 0.0;
        for m in [s, ra, rb] {
            v += logdet(m)?;
        }
        Some(v)
    }

    /// Gradient and negated Hessian of the barrier objective.
    fn derivatives(&self, p: &Point, mu: f64) -> Option<([f64; 11], DMatrix<f64>)> {
        let (s, ra, rb) = self.parts(p);
        let s_inv = Cholesky::<f64, Dyn>::new(s)?.inverse();
        let ra_inv = Cholesky::<f64, Dyn>::new(ra)?.inverse();
        let rb_inv = Cholesky::<f64, Dyn>::new(rb)?.inverse();

        // S⁻¹ ∂S for every parameter.
        let mut dirs: Vec<RMat> = Vec::with_capacity(11);
        for side in 0..2 {
            for e in &self.basis {
                let z = RMat::zeros(3, 3);
                let d = if side == 0 { direct_sum(e, &z) } else { direct_sum(&z, e) } * 0.5;
                dirs.push(&s_inv * d);
            }
        }
        dirs.push(-&s_inv);
        let local: Vec<RMat> = (0..10)
            .map(|k| if k < 5 { &ra_inv * &self.basis[k] } else { &rb_inv * &self.basis[k - 5] })
            .collect();

        let mut grad = [0.0; 11];
        for k in 0..11 {
            grad[k] = dirs[k].trace();
            if k < 10 {
                grad[k] += local[k].trace();
            }
        }
        grad[10] += 1.0 / mu;

        let mut neg_h = DMatrix::<f64>::zeros(11, 11);
        for k in 0..11 {
            for l in k..11 {
                let mut h = trace_of_product(&dirs[k], &dirs[l]);
                if k < 10 && l < 10 && (k < 5) == (l < 5) {
                    h += trace_of_product(&local[k], &local[l]);
                }
                neg_h[(k, l)] = h;
                neg_h[(l, k)] = h;
            }
        }
        Some((grad, neg_h))
    }
}

fn logdet(m: RMat) -> Option<f64> {
    let ch = Cholesky::<f64, Dyn>::new(m)?;
    let l = ch.l_dirty();
    Some(2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

fn trace_of_product(a: &RMat, b: &RMat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn dual_value(gp: &RMat, z: &RMat) -> f64 {
    let zs = RealSymmetricMatrix::symmetrized(z.clone());
    let za = RealSymmetricMatrix::symmetrized(z.view((0, 0), (3, 3)).into_owned());
    let zb = RealSymmetricMatrix::symmetrized(z.view((3, 3), (3, 3)).into_owned());
    trace_of_product(zs.as_matrix(), gp) + 0.5 * (za.max_eigenvalue() + zb.max_eigenvalue())
}

/// Solves the two-qubit CMC feasibility problem for a CM built from
/// traceless orthonormal qubit observables (identity rows are dropped).
///
/// The verdict reports `right = f*` (upper bound when violated, lower bound
/// otherwise) against `left = 0`.
pub fn qubit_cmc_feasibility(gamma: &BlockCovarianceMatrix, opts: &QubitCmcOptions) -> Result<QubitCmcOutcome> {
    let (gamma6, obs_a, obs_b) = qubit_gamma6(gamma)?;
    let gp = gamma6.as_matrix() - RMat::identity(6, 6) * 0.5;
    let barrier = Barrier { gp: gp.clone(), basis: traceless_symmetric_basis() };

    let start_min = RealSymmetricMatrix::symmetrized(&gp + RMat::identity(6, 6) / 6.0).min_eigenvalue();
    let mut point = Point { y: [0.0; 11] };
    point.y[10] = start_min - 1.0;

    let mut mu = 1.0;
    let mut steps = 0;
    let mut best_lower = f64::NEG_INFINITY;
    let mut best_candidate = (RMat::identity(3, 3) / 3.0, RMat::identity(3, 3) / 3.0);
    let mut best_upper = f64::INFINITY;
    let mut best_dual = RMat::identity(6, 6) / 6.0;

    let mut record = |point: &Point, best_lower: &mut f64, best_upper: &mut f64| {
        let (s, ra, rb) = barrier.parts(point);
        let m = RealSymmetricMatrix::symmetrized(&barrier.gp + direct_sum(&ra, &rb) * 0.5);
        let lower = m.min_eigenvalue();
        if lower > *best_lower {
            *best_lower = lower;
            best_candidate = (ra, rb);
        }
        if let Some(ch) = Cholesky::<f64, Dyn>::new(s) {
            let inv = ch.inverse();
            let tr = inv.trace();
            if tr > 0.0 && tr.is_finite() {
                let z = inv / tr;
                let upper = dual_value(&barrier.gp, &z);
                if upper < *best_upper {
                    *best_upper = upper;
                    best_dual = z;
                }
            }
        }
    };

    let mut last_gap = f64::INFINITY;
    let mut stalled = 0;
    'outer: loop {
        for _ in 0..60 {
            if steps >= opts.max_newton {
                break 'outer;
            }
            let Some((grad, neg_h)) = barrier.derivatives(&point, mu) else { break 'outer };
            // Jacobi-scaled Cholesky with one round of iterative refinement:
            // the Hessian mixes O(1) and O(1/μ²) curvature near the optimum.
            let scale: Vec<f64> = (0..11).map(|k| 1.0 / neg_h[(k, k)].sqrt()).collect();
            let scaled = DMatrix::from_fn(11, 11, |i, j| neg_h[(i, j)] * scale[i] * scale[j]);
            let Some(ch) = Cholesky::<f64, Dyn>::new(scaled.clone()) else { break 'outer };
            let g = nalgebra::DVector::from_column_slice(&grad);
            let gs = nalgebra::DVector::from_fn(11, |k, _| g[k] * scale[k]);
            let mut z = ch.solve(&gs);
            let residual = &gs - &scaled * &z;
            z += ch.solve(&residual);
            let delta = nalgebra::DVector::from_fn(11, |k, _| z[k] * scale[k]);
            let decrement = g.dot(&delta);
            steps += 1;
            if !decrement.is_finite() {
                break 'outer;
            }
            if decrement / 2.0 <= 1e-12 {
                break;
            }
            let f0 = barrier.log_barrier(&point).unwrap_or(f64::NEG_INFINITY);
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let mut trial = Point { y: point.y };
                for (k, y) in trial.y.iter_mut().enumerate() {
                    *y += step * delta[k];
                }
                if let Some(f1) = barrier.log_barrier(&trial) {
                    let gain = (trial.y[10] - point.y[10]) / mu + (f1 - f0);
                    if gain >= 0.25 * step * decrement {
                        point = trial;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        record(&point, &mut best_lower, &mut best_upper);
        let gap = best_upper - best_lower;
        if gap <= opts.gap_tol {
            break;
        }
        // Below μ ≈ 1e-9 the Newton systems lose accuracy and the bracket
        // stops shrinking; give up after a few rounds without progress.
        if gap < 0.999 * last_gap {
            stalled = 0;
        } else {
            stalled += 1;
        }
        if stalled >= 6 || 12.0 * mu < 1e-3 * opts.gap_tol {
            break;
        }
        last_gap = gap;
        mu /= 8.0;
    }
    record(&point, &mut best_lower, &mut best_upper);

    let gap = best_upper - best_lower;
    let violated = best_upper < -opts.tol;
    let satisfied = best_lower >= -opts.tol;
    if !violated && !satisfied {
        return Err(Error::NoConvergence {
            method: "two-qubit CMC barrier solver",
            iterations: steps,
            residual: gap,
            bounds: Some((best_lower, best_upper)),
        });
    }
    let f_star = if violated { best_upper } else { best_lower };
    let verdict = CriterionVerdict::new(Criterion::CmcSdp, 0.0, f_star, opts.tol)
        .with_detail("lower_bound", best_lower)
        .with_detail("upper_bound", best_upper)
        .with_detail("newton_steps", steps);
    let (ra, rb) = best_candidate;
    let candidate = KappaCandidate {
        rho_a: RealSymmetricMatrix::symmetrized(ra),
        rho_b: RealSymmetricMatrix::symmetrized(rb),
    };
    Ok(QubitCmcOutcome {
        verdict,
        lower_bound: best_lower,
        upper_bound: best_upper,
        candidate,
        dual: RealSymmetricMatrix::symmetrized(best_dual),
        gamma6,
        observables_a: obs_a,
        observables_b: obs_b,
        newton_steps: steps,
    })
}
