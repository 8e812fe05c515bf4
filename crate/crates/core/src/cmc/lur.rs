//! Local uncertainty relations (LURs) built from CM witnesses.
//!
//! A PSD matrix `W = Σ_k λ_k |α_k ⊕ β_k⟩⟨α_k ⊕ β_k|` on CM index space
//! defines observables `Â_k = √λ_k Σ_l α_{k,l} A_l`, `B̂_k = √λ_k Σ_l β_{k,l} B_l`
//! with `Σ_k δ²(Â_k ⊗ 1 + 1 ⊗ B̂_k) = Tr[W γ]`. Separable states obey
//! `Σ_k δ²(Â_k ⊗ 1 + 1 ⊗ B̂_k) ≥ U_A + U_B`, where `U_A` lower-bounds
//! `Σ_k δ²(Â_k)` over all states of A.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DVector, Matrix2, Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::qubit::QubitCmcOutcome;
use crate::covariance::BlockCovarianceMatrix;
use crate::error::{Error, Result};
use crate::numerics::{c, CMat, HermitianMatrix, RealEigh, RealSymmetricMatrix, C64, PSD_SLACK};
use crate::state::{random_pure_vector, DensityMatrix};

/// Required gap `rhs − lhs` before a LUR violation is reported as verified.
pub const LUR_VERIFY_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// A rigorous lower bound on the minimum over all states.
    Certified,
    /// The best local minimum found; only an upper bound on the true minimum.
    Estimate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceBound {
    pub value: f64,
    pub kind: BoundKind,
    /// Smallest variance sum actually attained by a state during the search.
    pub attained: f64,
}

impl VarianceBound {
    fn exact(value: f64) -> Self {
        Self { value, kind: BoundKind::Certified, attained: value }
    }

    pub fn is_certified(&self) -> bool {
        self.kind == BoundKind::Certified
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinVarianceOptions {
    /// Qubit branch-and-bound stops once the certified gap is below this.
    pub slack: f64,
    /// Qubit branch-and-bound node budget; the bound stays valid if it runs out.
    pub max_nodes: usize,
    /// Random starts for `d ≥ 3`, on top of the eigenvectors of each operator.
    pub starts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for MinVarianceOptions {
    fn default() -> Self {
        Self { slack: 1e-10, max_nodes: 200_000, starts: 32, max_iter: 400, seed: 0x5eed }
    }
}

/// A PSD matrix on CM index space together with its eigendecomposition.
#[derive(Clone, Debug)]
pub struct WitnessMatrix {
    matrix: RealSymmetricMatrix,
    eig: RealEigh,
}

impl WitnessMatrix {
    /// Accepts eigenvalues down to `−1e-9` (scaled by the largest one) and
    /// clips them to zero, so the stored matrix is exactly PSD.
    pub fn new(matrix: RealSymmetricMatrix) -> Result<Self> {
        let eig = matrix.eigh();
        let scale = eig.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if let Some(&min) = eig.values.first() {
            if min < -PSD_SLACK * scale {
                return Err(Error::Validation(format!("witness matrix is not PSD: eigenvalue {min:e}")));
            }
        }
        let values: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
        let eig = RealEigh { values, vectors: eig.vectors };
        let matrix = eig.map(|v| v);
        Ok(Self { matrix, eig })
    }

    pub fn matrix(&self) -> &RealSymmetricMatrix {
        &self.matrix
    }

    pub fn eigen(&self) -> &RealEigh {
        &self.eig
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `Tr[W γ]`.
    pub fn pair(&self, gamma: &RealSymmetricMatrix) -> Result<f64> {
        if gamma.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "witness is {}x{}, CM is {}x{}",
                self.dim(),
                self.dim(),
                gamma.dim(),
                gamma.dim()
            )));
        }
        Ok(self.matrix.as_matrix().component_mul(gamma.as_matrix()).sum())
    }
}

/// A witness together with the observable bases indexing its rows.
#[derive(Clone, Debug)]
pub struct LurWitness {
    pub matrix: WitnessMatrix,
    pub basis_a: Vec<HermitianMatrix>,
    pub basis_b: Vec<HermitianMatrix>,
}

#[derive(Clone, Debug)]
pub struct LocalUncertaintySet {
    pub ops_a: Vec<HermitianMatrix>,
    pub ops_b: Vec<HermitianMatrix>,
    pub bound_a: VarianceBound,
    pub bound_b: VarianceBound,
    pub witness: Option<LurWitness>,
}

impl LocalUncertaintySet {
    pub fn rhs(&self) -> f64 {
        self.bound_a.value + self.bound_b.value
    }

    pub fn is_certified(&self) -> bool {
        self.bound_a.is_certified() && self.bound_b.is_certified()
    }

    pub fn len(&self) -> usize {
        self.ops_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops_a.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LurValue {
    /// `Σ_k δ²(Â_k ⊗ 1 + 1 ⊗ B̂_k)` from direct moments.
    pub lhs: f64,
    /// The same quantity as `Tr[W γ]`, when a witness is attached.
    pub lhs_witness: Option<f64>,
    /// `U_A + U_B`.
    pub rhs: f64,
}

impl LurValue {
    pub fn violated(&self, slack: f64) -> bool {
        self.lhs < self.rhs - slack
    }
}

fn combine(weights: impl Iterator<Item = f64>, basis: &[HermitianMatrix], dim: usize) -> HermitianMatrix {
    let mut m = CMat::zeros(dim, dim);
    for (w, op) in weights.zip(basis) {
        if w != 0.0 {
            m += op.as_matrix() * c(w, 0.0);
        }
    }
    HermitianMatrix::symmetrized(m)
}

fn local_dim(basis: &[HermitianMatrix], side: &str) -> Result<usize> {
    let d = basis.first().map(|o| o.dim()).ok_or_else(|| Error::Validation(format!("empty {side} basis")))?;
    if basis.iter().any(|o| o.dim() != d) {
        return Err(Error::DimensionMismatch(format!("{side} observables have mixed dimensions")));
    }
    Ok(d)
}

/// Expands `W` into LUR observables and bounds both local sums.
///
/// Eigenvalues below `1e-14 · λ_max` contribute nothing and are dropped.
pub fn witness_to_lur(
    w: &WitnessMatrix,
    basis_a: &[HermitianMatrix],
    basis_b: &[HermitianMatrix],
    opts: &MinVarianceOptions,
) -> Result<LocalUncertaintySet> {
    let (na, nb) = (basis_a.len(), basis_b.len());
    if w.dim() != na + nb {
        return Err(Error::DimensionMismatch(format!(
            "witness is {}x{} but bases span {} + {}",
            w.dim(),
            w.dim(),
            na,
            nb
        )));
    }
    let (da, db) = (local_dim(basis_a, "A")?, local_dim(basis_b, "B")?);
    let eig = w.eigen();
    let top = eig.values.last().copied().unwrap_or(0.0);
    let mut ops_a = Vec::new();
    let mut ops_b = Vec::new();
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam <= 1e-14 * top || lam <= 0.0 {
            continue;
        }
        let s = lam.sqrt();
        let v = eig.vectors.column(k);
        ops_a.push(combine(v.iter().take(na).map(|x| s * x), basis_a, da));
        ops_b.push(combine(v.iter().skip(na).map(|x| s * x), basis_b, db));
    }
    let bound_a = certified_min_variance(&ops_a, da, opts)?;
    let bound_b = certified_min_variance(&ops_b, db, opts)?;
    Ok(LocalUncertaintySet {
        ops_a,
        ops_b,
        bound_a,
        bound_b,
        witness: Some(LurWitness { matrix: w.clone(), basis_a: basis_a.to_vec(), basis_b: basis_b.to_vec() }),
    })
}

/// Evaluates both sides of a LUR on `ρ`.
///
/// When a witness is attached, `Tr[W γ(ρ)]` is computed as well and must
/// agree with the direct moments to `1e-9` (relative to their size).
pub fn lur_value(rho: &DensityMatrix, lur: &LocalUncertaintySet) -> Result<LurValue> {
    let (da, db) = rho.dims();
    if lur.ops_a.len() != lur.ops_b.len() {
        return Err(Error::Validation("LUR needs as many A as B observables".into()));
    }
    if lur.ops_a.iter().any(|o| o.dim() != da) || lur.ops_b.iter().any(|o| o.dim() != db) {
        return Err(Error::DimensionMismatch(format!("LUR observables do not act on a {da}x{db} state")));
    }
    let id_a = HermitianMatrix::identity(da);
    let id_b = HermitianMatrix::identity(db);
    let m = rho.matrix().as_matrix();
    let mut lhs = 0.0;
    for (a, b) in lur.ops_a.iter().zip(&lur.ops_b) {
        let x = a.kron(&id_b).add(&id_a.kron(b));
        let xm = x.as_matrix();
        let mean = crate::numerics::trace_product(m, xm).re;
        let second = crate::numerics::trace_product(m, &(xm * xm)).re;
        lhs += second - mean * mean;
    }
    let lhs_witness = match &lur.witness {
        None => None,
        Some(w) => {
            let gamma = crate::covariance::bipartite_cm(rho, &w.basis_a, &w.basis_b)?.assembled();
            let t = w.matrix.pair(&gamma)?;
            if (t - lhs).abs() > 1e-9 * (1.0 + lhs.abs()) {
                return Err(Error::Precondition(format!(
                    "witness and observables disagree: Tr[W gamma] = {t}, direct = {lhs}"
                )));
            }
            Some(t)
        }
    };
    Ok(LurValue { lhs, lhs_witness, rhs: lur.rhs() })
}

/// Lower bound on `min_ψ Σ_k δ²(ops_k)` over states of a `dim`-level system.
///
/// Mixed states never do better than pure ones (variance is concave), so the
/// search runs over pure states. Qubits get a certified branch-and-bound on
/// the Bloch sphere; larger systems get a multistart local search whose
/// result is only an [`BoundKind::Estimate`].
pub fn certified_min_variance(ops: &[HermitianMatrix], dim: usize, opts: &MinVarianceOptions) -> Result<VarianceBound> {
    if dim < 2 {
        return Err(Error::Validation(format!("dimension must be at least 2, got {dim}")));
    }
    if let Some(bad) = ops.iter().find(|o| o.dim() != dim) {
        return Err(Error::DimensionMismatch(format!("operator is {}x{}, expected {dim}", bad.dim(), bad.dim())));
    }
    if ops.is_empty() {
        return Ok(VarianceBound::exact(0.0));
    }
    if dim == 2 {
        Ok(bloch_branch_and_bound(ops, opts))
    } else {
        Ok(multistart_estimate(ops, dim, opts))
    }
}

/// `Σ_k δ²(X_k)` at Bloch vector `n` equals `s − nᵀQn` with `X_k = x₀ + x·σ`,
/// `s = Σ|x_k|²` and `Q = Σ x_k x_kᵀ`.
struct BlochQuadratic {
    s: f64,
    q: Matrix3<f64>,
    q_max: f64,
}

impl BlochQuadratic {
    fn new(ops: &[HermitianMatrix]) -> Self {
        let mut q = Matrix3::zeros();
        let mut s = 0.0;
        for op in ops {
            let m = op.as_matrix();
            let x = Vector3::new(m[(0, 1)].re, -m[(0, 1)].im, 0.5 * (m[(0, 0)].re - m[(1, 1)].re));
            s += x.norm_squared();
            q += x * x.transpose();
        }
        let q_max = q.symmetric_eigenvalues().max();
        Self { s, q, q_max }
    }

    fn value(&self, n: &Vector3<f64>) -> f64 {
        self.s - n.dot(&(self.q * n))
    }
}

#[derive(Clone, Copy)]
struct Patch {
    face: usize,
    u: (f64, f64),
    v: (f64, f64),
    lower: f64,
}

impl PartialEq for Patch {
    fn eq(&self, other: &Self) -> bool {
        self.lower == other.lower
    }
}
impl Eq for Patch {}
impl PartialOrd for Patch {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Patch {
    // Min-heap on the lower bound.
    fn cmp(&self, other: &Self) -> Ordering {
        other.lower.total_cmp(&self.lower)
    }
}

fn cube_point(face: usize, u: f64, v: f64) -> Vector3<f64> {
    let sign = if face.is_multiple_of(2) { 1.0 } else { -1.0 };
    let p = match face / 2 {
        0 => Vector3::new(sign, u, v),
        1 => Vector3::new(u, sign, v),
        _ => Vector3::new(u, v, sign),
    };
    p.normalize()
}

/// Returns `(lower bound over the patch, value at its centre)`.
///
/// Every point of a cube-face rectangle lies within angle `θ` of the centre
/// direction, where `θ` is the largest centre-to-corner angle (`n ↦ c·n/|n|`
/// is quasi-concave on the face). Writing `n = cos φ c + sin φ t` gives
/// `f(n) − f(c) ≥ −|∇_t f(c)| sin θ + min(0, cᵀQc − λ_max(Q|_{c⊥})) sin²θ`;
/// a plain Lipschitz bound with constant `2 λ_max(Q)` on the chord is also
/// applied and the larger bound wins.
fn patch_bound(f: &BlochQuadratic, face: usize, u: (f64, f64), v: (f64, f64)) -> (f64, f64, Vector3<f64>) {
    let c = cube_point(face, 0.5 * (u.0 + u.1), 0.5 * (v.0 + v.1));
    let mut min_cos = 1.0f64;
    for (a, b) in [(u.0, v.0), (u.0, v.1), (u.1, v.0), (u.1, v.1)] {
        min_cos = min_cos.min(c.dot(&cube_point(face, a, b)).clamp(-1.0, 1.0));
    }
    let theta = min_cos.acos();
    let sin_t = theta.sin();
    let chord = 2.0 * (0.5 * theta).sin();

    let fc = f.value(&c);
    let qc = f.q * c;
    let cqc = c.dot(&qc);
    let g_tan = 2.0 * (qc - c * cqc).norm();
    // Orthonormal tangent frame at c.
    let helper = if c.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let t1 = (helper - c * c.dot(&helper)).normalize();
    let t2 = c.cross(&t1);
    let qt = Matrix2::new(t1.dot(&(f.q * t1)), t1.dot(&(f.q * t2)), t2.dot(&(f.q * t1)), t2.dot(&(f.q * t2)));
    let tan_max = qt.symmetric_eigenvalues().max();
    let curvature = (cqc - tan_max).min(0.0);
    let taylor = fc - g_tan * sin_t + curvature * sin_t * sin_t;
    let lipschitz = fc - 2.0 * f.q_max * chord;
    (taylor.max(lipschitz), fc, c)
}

fn bloch_branch_and_bound(ops: &[HermitianMatrix], opts: &MinVarianceOptions) -> VarianceBound {
    let f = BlochQuadratic::new(ops);
    // Floating-point allowance on each evaluated bound.
    let rounding = 64.0 * f64::EPSILON * (f.s + f.q.trace() + 1.0);
    let mut heap = BinaryHeap::new();
    let mut best = f64::INFINITY;
    for face in 0..6 {
        let (lower, fc, _) = patch_bound(&f, face, (-1.0, 1.0), (-1.0, 1.0));
        best = best.min(fc);
        heap.push(Patch { face, u: (-1.0, 1.0), v: (-1.0, 1.0), lower });
    }
    let mut nodes = 0;
    while let Some(top) = heap.peek().copied() {
        if best - top.lower <= opts.slack || nodes >= opts.max_nodes {
            break;
        }
        heap.pop();
        nodes += 1;
        let um = 0.5 * (top.u.0 + top.u.1);
        let vm = 0.5 * (top.v.0 + top.v.1);
        for u in [(top.u.0, um), (um, top.u.1)] {
            for v in [(top.v.0, vm), (vm, top.v.1)] {
                let (lower, fc, _) = patch_bound(&f, top.face, u, v);
                best = best.min(fc);
                if lower < best {
                    heap.push(Patch { face: top.face, u, v, lower });
                }
            }
        }
    }
    let lower = heap.peek().map_or(best, |p| p.lower.min(best));
    VarianceBound { value: (lower - rounding).max(0.0), kind: BoundKind::Certified, attained: best }
}

fn variance_sum(ops: &[CMat], sq: &CMat, psi: &DVector<C64>) -> f64 {
    let mut total = psi.dotc(&(sq * psi)).re;
    for x in ops {
        let m = psi.dotc(&(x * psi)).re;
        total -= m * m;
    }
    total
}

/// Projected gradient descent on the unit sphere of `C^d` with Armijo steps.
fn local_descent(ops: &[CMat], sq: &CMat, mut psi: DVector<C64>, max_iter: usize) -> f64 {
    let mut val = variance_sum(ops, sq, &psi);
    let mut step = 0.5;
    for _ in 0..max_iter {
        let mut h = sq.clone();
        for x in ops {
            let m = psi.dotc(&(x * &psi)).re;
            h -= x * c(2.0 * m, 0.0);
        }
        let hp = &h * &psi;
        let grad = &hp - &psi * psi.dotc(&hp);
        let gnorm2 = grad.norm_squared();
        if gnorm2 < 1e-24 {
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let trial = (&psi - &grad * c(step, 0.0)).normalize();
            let tv = variance_sum(ops, sq, &trial);
            if tv <= val - 0.5 * step * gnorm2 {
                psi = trial;
                val = tv;
                step *= 2.0;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    val
}

fn multistart_estimate(ops: &[HermitianMatrix], dim: usize, opts: &MinVarianceOptions) -> VarianceBound {
    let mats: Vec<CMat> = ops.iter().map(|o| o.as_matrix().clone()).collect();
    let mut sq = CMat::zeros(dim, dim);
    for x in &mats {
        sq += x * x;
    }
    let mut starts: Vec<DVector<C64>> = Vec::new();
    for op in ops {
        let e = op.eigh();
        for k in 0..dim {
            starts.push(e.vectors.column(k).into_owned());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.starts {
        starts.push(DVector::from_vec(random_pure_vector(dim, &mut rng)));
    }
    let best = starts
        .into_iter()
        .map(|s| local_descent(&mats, &sq, s, opts.max_iter))
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    VarianceBound { value: best, kind: BoundKind::Estimate, attained: best }
}

/// Turns an infeasible two-qubit CMC result into a verified LUR.
///
/// Candidate witnesses: the projector onto the negative eigenspace of
/// `M* = γ − 1/2 + (ρ_A* ⊕ ρ_B*)/2`, the projector onto its lowest
/// eigenvector, and the solver's dual matrix. Each is expanded with
/// [`witness_to_lur`] and kept only if `Tr[W γ] < U_A + U_B − 1e-9` with
/// certified bounds. Returns the candidate with the largest violation, or
/// `None` when nothing verifies (possible close to the CMC boundary).
pub fn extract_lur_witness(
    gamma: &BlockCovarianceMatrix,
    outcome: &QubitCmcOutcome,
    opts: &MinVarianceOptions,
) -> Result<Option<LocalUncertaintySet>> {
    if outcome.feasible() {
        return Err(Error::Precondition("LUR extraction needs a state that violates the CMC".into()));
    }
    let (g6, obs_a, obs_b) = super::qubit::qubit_gamma6(gamma)?;
    let m_star = outcome.candidate.slack_matrix(&g6);
    let eig = m_star.eigh();
    let n = g6.dim();

    let mut candidates = Vec::new();
    let negative = eig.map(|v| if v < 0.0 { 1.0 } else { 0.0 });
    if negative.trace() > 0.0 {
        candidates.push(negative);
    }
    let v0 = eig.vectors.column(0);
    candidates.push(RealSymmetricMatrix::symmetrized(v0 * v0.transpose()));
    candidates.push(outcome.dual.clone());

    let mut best: Option<(f64, LocalUncertaintySet)> = None;
    for cand in candidates {
        if cand.dim() != n {
            continue;
        }
        let w = WitnessMatrix::new(cand)?;
        let lur = witness_to_lur(&w, &obs_a, &obs_b, opts)?;
        if !lur.is_certified() {
            continue;
        }
        let lhs = w.pair(&g6)?;
        let margin = lhs - lur.rhs();
        if margin < -LUR_VERIFY_SLACK && best.as_ref().is_none_or(|(m, _)| margin < *m) {
            best = Some((margin, lur));
        }
    }
    Ok(best.map(|(_, l)| l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmc::{qubit_cm6, qubit_cmc_feasibility, QubitCmcOptions};
    use crate::covariance::bipartite_cm;
    use crate::state::{maximally_entangled, pauli_basis, random_density_matrix_seeded};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn opts() -> MinVarianceOptions {
        MinVarianceOptions::default()
    }

    /// `Tr Q − λ_max(Q)`, the exact qubit minimum.
    fn analytic_qubit_min(ops: &[HermitianMatrix]) -> f64 {
        let f = BlochQuadratic::new(ops);
        f.q.trace() - f.q_max
    }

    fn random_hermitian<R: Rng>(d: usize, rng: &mut R) -> HermitianMatrix {
        let m = CMat::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        HermitianMatrix::symmetrized(&m + m.adjoint())
    }

    #[test]
    fn pauli_triple_bound_is_one() {
        let b = certified_min_variance(pauli_basis().traceless(), 2, &opts()).unwrap();
        assert_eq!(b.kind, BoundKind::Certified);
        assert_abs_diff_eq!(b.value, 1.0, epsilon = 1e-9);
        assert!(b.value <= 1.0);
    }

    #[test]
    fn single_and_empty() {
        let p = pauli_basis();
        let b = certified_min_variance(&p.traceless()[..1], 2, &opts()).unwrap();
        assert_abs_diff_eq!(b.value, 0.0, epsilon = 1e-9);
        let b = certified_min_variance(&[], 2, &opts()).unwrap();
        assert_eq!(b.value, 0.0);
        let g = crate::state::gell_mann_basis(3).unwrap();
        let b = certified_min_variance(&g.traceless()[..1], 3, &opts()).unwrap();
        assert_eq!(b.kind, BoundKind::Estimate);
        assert_abs_diff_eq!(b.value, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn branch_and_bound_matches_closed_form_and_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let ops: Vec<_> = (0..3).map(|_| random_hermitian(2, &mut rng)).collect();
            let b = certified_min_variance(&ops, 2, &opts()).unwrap();
            let exact = analytic_qubit_min(&ops);
            assert!(b.value <= exact + 1e-12, "{} > {}", b.value, exact);
            assert!(exact - b.value < 1e-8, "gap {}", exact - b.value);
            let mats: Vec<CMat> = ops.iter().map(|o| o.as_matrix().clone()).collect();
            let sq = mats.iter().fold(CMat::zeros(2, 2), |acc, x| acc + x * x);
            for _ in 0..2000 {
                let psi = DVector::from_vec(random_pure_vector(2, &mut rng));
                assert!(variance_sum(&mats, &sq, &psi) >= b.value - 1e-12);
            }
        }
    }

    #[test]
    fn qutrit_estimate_is_attained() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ops: Vec<_> = (0..3).map(|_| random_hermitian(3, &mut rng)).collect();
        let b = certified_min_variance(&ops, 3, &opts()).unwrap();
        assert_eq!(b.kind, BoundKind::Estimate);
        let mats: Vec<CMat> = ops.iter().map(|o| o.as_matrix().clone()).collect();
        let sq = mats.iter().fold(CMat::zeros(3, 3), |acc, x| acc + x * x);
        let mut sample_min = f64::INFINITY;
        for _ in 0..5000 {
            let psi = DVector::from_vec(random_pure_vector(3, &mut rng));
            sample_min = sample_min.min(variance_sum(&mats, &sq, &psi));
        }
        assert!(b.value <= sample_min + 1e-9);
    }

    #[test]
    fn zero_witness_gives_empty_lur() {
        let p = pauli_basis();
        let w = WitnessMatrix::new(RealSymmetricMatrix::zeros(6)).unwrap();
        let lur = witness_to_lur(&w, p.traceless(), p.traceless(), &opts()).unwrap();
        assert!(lur.is_empty());
        let rho = random_density_matrix_seeded(2, 2, 4, 1).unwrap();
        let v = lur_value(&rho, &lur).unwrap();
        assert_eq!((v.lhs, v.rhs), (0.0, 0.0));
    }

    #[test]
    fn identity_witness_reproduces_trace() {
        let p = pauli_basis();
        let w = WitnessMatrix::new(RealSymmetricMatrix::identity(6)).unwrap();
        let lur = witness_to_lur(&w, p.traceless(), p.traceless(), &opts()).unwrap();
        assert_eq!(lur.len(), 6);
        // Each side sees the normalized Pauli triple up to rotation: bound 1.
        assert_abs_diff_eq!(lur.bound_a.value, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(lur.bound_b.value, 1.0, epsilon = 1e-9);
        for seed in 0..5 {
            let rho = random_density_matrix_seeded(2, 2, 4, seed).unwrap();
            let gamma = qubit_cm6(&rho).unwrap().assembled();
            let v = lur_value(&rho, &lur).unwrap();
            assert_abs_diff_eq!(v.lhs, gamma.trace(), epsilon = 1e-10);
        }
    }

    #[test]
    fn rank_one_witness_gives_one_pair() {
        let p = pauli_basis();
        let mut m = nalgebra::DMatrix::<f64>::zeros(6, 6);
        let a = nalgebra::DVector::from_vec(vec![0.3, -0.2, 0.5, 0.1, 0.7, -0.4]);
        m += &a * a.transpose();
        let w = WitnessMatrix::new(RealSymmetricMatrix::symmetrized(m)).unwrap();
        let lur = witness_to_lur(&w, p.traceless(), p.traceless(), &opts()).unwrap();
        assert_eq!(lur.len(), 1);
        // One observable per side: an eigenstate makes the variance vanish.
        assert_abs_diff_eq!(lur.rhs(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn non_psd_witness_rejected() {
        let m = RealSymmetricMatrix::from_diagonal(&[1.0, -0.1, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(WitnessMatrix::new(m), Err(Error::Validation(_))));
    }

    #[test]
    fn witness_matches_direct_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g3 = crate::state::gell_mann_basis(3).unwrap();
        let p = pauli_basis();
        let n = 4 + 9;
        let a = nalgebra::DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let w = WitnessMatrix::new(RealSymmetricMatrix::symmetrized(&a * a.transpose())).unwrap();
        let lur = witness_to_lur(&w, &p, &g3, &opts()).unwrap();
        for seed in 0..5 {
            let rho = random_density_matrix_seeded(2, 3, 6, seed).unwrap();
            let v = lur_value(&rho, &lur).unwrap();
            let t = v.lhs_witness.unwrap();
            assert_abs_diff_eq!(v.lhs, t, epsilon = 1e-9 * (1.0 + t.abs()));
            let gamma = bipartite_cm(&rho, &p, &g3).unwrap().assembled();
            assert_abs_diff_eq!(w.pair(&gamma).unwrap(), t, epsilon = 1e-12 * (1.0 + t.abs()));
        }
    }

    #[test]
    fn bell_round_trip() {
        let rho = maximally_entangled(2).unwrap();
        let gamma = qubit_cm6(&rho).unwrap();
        let out = qubit_cmc_feasibility(&gamma, &QubitCmcOptions::default()).unwrap();
        let lur = extract_lur_witness(&gamma, &out, &opts()).unwrap().expect("Bell state has a LUR");
        let v = lur_value(&rho, &lur).unwrap();
        assert!(v.violated(LUR_VERIFY_SLACK));
        assert_abs_diff_eq!(v.lhs, v.lhs_witness.unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn separable_input_is_rejected() {
        let rho = DensityMatrix::maximally_mixed(2, 2).unwrap();
        let gamma = qubit_cm6(&rho).unwrap();
        let out = qubit_cmc_feasibility(&gamma, &QubitCmcOptions::default()).unwrap();
        assert!(matches!(extract_lur_witness(&gamma, &out, &opts()), Err(Error::Precondition(_))));
    }
}
