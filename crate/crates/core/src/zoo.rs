//! Reference state families, the PPT baseline and threshold scans.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{c, CMat, HermitianMatrix, C64};
use crate::state::{maximally_entangled, mix_with_white_noise, random_density_matrix, DensityMatrix};
use crate::verdict::{Criterion, CriterionVerdict};

/// Positive partial transpose: `left = −λ_min(ρ^{T_B})`, `right = 0`.
pub fn ppt_test(rho: &DensityMatrix, tol: f64) -> CriterionVerdict {
    let min = rho.partial_transpose().min_eigenvalue();
    CriterionVerdict::new(Criterion::Ppt, -min, 0.0, tol).with_detail("min_eigenvalue", min)
}

/// The five product vectors of the "tiles" unextendible product basis on
/// `C³ ⊗ C³`, as composite amplitudes.
pub fn upb_tiles_vectors() -> [Vec<C64>; 5] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let kron = |a: [f64; 3], b: [f64; 3]| -> Vec<C64> {
        let mut v = Vec::with_capacity(9);
        for x in a {
            for y in b {
                v.push(c(x * y, 0.0));
            }
        }
        v
    };
    let third = 1.0 / 3.0f64.sqrt();
    [
        kron([1.0, 0.0, 0.0], [s, -s, 0.0]),
        kron([s, -s, 0.0], [0.0, 0.0, 1.0]),
        kron([0.0, 0.0, 1.0], [0.0, s, -s]),
        kron([0.0, s, -s], [1.0, 0.0, 0.0]),
        kron([third; 3], [third; 3]),
    ]
}

/// `(1 − Σ_j |ψ_j⟩⟨ψ_j|)/4` over the tiles basis: a rank-4 PPT entangled state.
pub fn upb_tiles_state() -> DensityMatrix {
    let mut m = CMat::identity(9, 9);
    for v in upb_tiles_vectors() {
        m -= HermitianMatrix::outer(&v).into_matrix();
    }
    DensityMatrix::new(3, 3, HermitianMatrix::symmetrized(m * c(0.25, 0.0))).expect("tiles state is valid")
}

/// `p·ρ_tiles + (1 − p)·1/9`.
pub fn upb_noise_state(p: f64) -> Result<DensityMatrix> {
    mix_with_white_noise(&upb_tiles_state(), p)
}

/// `p·|Φ⁺⟩⟨Φ⁺| + (1 − p)·1/d²` with `|Φ⁺⟩ = Σ_i |ii⟩/√d`.
pub fn isotropic_state(p: f64, d: usize) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::Validation(format!("isotropic family needs d >= 2, got {d}")));
    }
    mix_with_white_noise(&maximally_entangled(d)?, p)
}

/// Two-qubit member of [`isotropic_state`].
pub fn werner_state(p: f64) -> Result<DensityMatrix> {
    isotropic_state(p, 2)
}

/// Free parameters `(a, b, c, d, m, n)` of a real chessboard state.
///
/// The state is `∝ Σ_k |V_k⟩⟨V_k|` with (composite index `3i + j`)
///
/// ```text
/// V1 = (m, 0, s, 0, n, 0, 0, 0, 0)    V2 = (0, a, 0, b, 0, c, 0, 0, 0)
/// V3 = (n, 0, 0, 0, −m, 0, t, 0, 0)   V4 = (0, b, 0, −a, 0, 0, 0, d, 0)
/// ```
///
/// and `s = ac/n`, `t = ad/m`; these two relations are what makes the
/// partial transpose positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChessboardParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub m: f64,
    pub n: f64,
}

impl ChessboardParams {
    /// Smallest `|m|`, `|n|` accepted by [`ChessboardParams::sample`].
    pub const MIN_PIVOT: f64 = 1e-3;

    pub fn from_array(p: [f64; 6]) -> Self {
        Self { a: p[0], b: p[1], c: p[2], d: p[3], m: p[4], n: p[5] }
    }

    /// Draws all six parameters uniformly from `[−1, 1]`, redrawing while
    /// `|m|` or `|n|` is below [`Self::MIN_PIVOT`].
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let p: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
            let params = Self::from_array(p);
            if params.m.abs() >= Self::MIN_PIVOT && params.n.abs() >= Self::MIN_PIVOT {
                return params;
            }
        }
    }

    fn vectors(&self) -> Result<[[f64; 9]; 4]> {
        let Self { a, b, c, d, m, n } = *self;
        if m == 0.0 || n == 0.0 || !(m.is_finite() && n.is_finite()) {
            return Err(Error::Validation(format!("chessboard parameters m = {m}, n = {n} must be nonzero")));
        }
        let s = a * c / n;
        let t = a * d / m;
        let vs = [
            [m, 0.0, s, 0.0, n, 0.0, 0.0, 0.0, 0.0],
            [0.0, a, 0.0, b, 0.0, c, 0.0, 0.0, 0.0],
            [n, 0.0, 0.0, 0.0, -m, 0.0, t, 0.0, 0.0],
            [0.0, b, 0.0, -a, 0.0, 0.0, 0.0, d, 0.0],
        ];
        for (k, v) in vs.iter().enumerate() {
            let norm: f64 = v.iter().map(|x| x * x).sum();
            if !norm.is_finite() || norm < 1e-24 {
                return Err(Error::Validation(format!("chessboard vector V{} vanishes or overflows", k + 1)));
            }
        }
        Ok(vs)
    }
}

pub fn chessboard_state(params: &ChessboardParams) -> Result<DensityMatrix> {
    let mut m = CMat::zeros(9, 9);
    for v in params.vectors()? {
        for i in 0..9 {
            for j in 0..9 {
                m[(i, j)] += c(v[i] * v[j], 0.0);
            }
        }
    }
    DensityMatrix::from_unnormalized(3, 3, HermitianMatrix::symmetrized(m))
}

pub fn chessboard_state_seeded(seed: u64) -> Result<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    chessboard_state(&ChessboardParams::sample(&mut rng))
}

/// Named state families shared by the scan and batch commands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateFamily {
    /// Two-qubit isotropic family, parameter `p`.
    Werner,
    /// `d × d` isotropic family, parameter `p`.
    Isotropic(usize),
    /// Tiles bound entangled state mixed with white noise, parameter `p`.
    UpbNoise,
    /// Random chessboard states (sampled).
    Chessboard,
    /// Full-rank Ginibre states on `d_A × d_B` (sampled).
    Random(usize, usize),
}

impl StateFamily {
    pub fn name(&self) -> String {
        match self {
            StateFamily::Werner => "werner".into(),
            StateFamily::Isotropic(d) => format!("isotropic-{d}"),
            StateFamily::UpbNoise => "upb-noise".into(),
            StateFamily::Chessboard => "chessboard".into(),
            StateFamily::Random(a, b) => format!("random-{a}x{b}"),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match *self {
            StateFamily::Werner => (2, 2),
            StateFamily::Isotropic(d) => (d, d),
            StateFamily::UpbNoise | StateFamily::Chessboard => (3, 3),
            StateFamily::Random(a, b) => (a, b),
        }
    }

    /// Whether the family is indexed by a mixing weight `p ∈ [0, 1]`.
    pub fn is_parametric(&self) -> bool {
        matches!(self, StateFamily::Werner | StateFamily::Isotropic(_) | StateFamily::UpbNoise)
    }

    /// White-noise weight mixed in before filtering. Chessboard states are
    /// rank 4, so their reductions can be singular.
    pub fn fnf_epsilon(&self) -> f64 {
        match self {
            StateFamily::Chessboard => 1e-9,
            _ => 0.0,
        }
    }

    pub fn at(&self, p: f64) -> Result<DensityMatrix> {
        match *self {
            StateFamily::Werner => werner_state(p),
            StateFamily::Isotropic(d) => isotropic_state(p, d),
            StateFamily::UpbNoise => upb_noise_state(p),
            _ => Err(Error::Validation(format!("family {} has no mixing parameter", self.name()))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DensityMatrix> {
        match *self {
            StateFamily::Chessboard => chessboard_state(&ChessboardParams::sample(rng)),
            StateFamily::Random(a, b) => random_density_matrix(a, b, a * b, rng),
            _ => Err(Error::Validation(format!("family {} is not a random family", self.name()))),
        }
    }
}

impl fmt::Display for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for StateFamily {
    type Err = Error;

    /// Accepts `werner`, `isotropic` (qutrits) or `isotropic-<d>`,
    /// `upb-noise`, `chessboard` and `random-<a>x<b>`.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::Validation(format!("unknown family '{s}'"));
        let dim = |t: &str| -> Result<usize> {
            match t.parse::<usize>() {
                Ok(d) if (2..=9).contains(&d) => Ok(d),
                _ => Err(Error::Validation(format!("family '{s}': dimensions must be integers in 2..=9"))),
            }
        };
        match s {
            "werner" => Ok(StateFamily::Werner),
            "isotropic" => Ok(StateFamily::Isotropic(3)),
            "upb-noise" => Ok(StateFamily::UpbNoise),
            "chessboard" => Ok(StateFamily::Chessboard),
            _ => {
                if let Some(d) = s.strip_prefix("isotropic-") {
                    Ok(StateFamily::Isotropic(dim(d)?))
                } else if let Some(rest) = s.strip_prefix("random-") {
                    let (a, b) = rest.split_once('x').ok_or_else(unknown)?;
                    Ok(StateFamily::Random(dim(a)?, dim(b)?))
                } else {
                    Err(unknown())
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Threshold {
    /// Midpoint of the final bracket.
    pub estimate: f64,
    /// Last parameter on the undetected side.
    pub p_undetected: f64,
    /// Last parameter on the detected side.
    pub p_detected: f64,
    pub evaluations: usize,
}

/// Number of evenly spaced points checked before bisecting.
pub const PRESCAN_POINTS: usize = 32;

/// Locates the single parameter where `detect` flips on `[p_min, p_max]`.
///
/// A 32-point pre-scan must show exactly one flip; the bracketing pair is
/// then bisected until it is narrower than `bisect_tol`. Errors from
/// `detect` abort the scan.
pub fn threshold_scan(
    mut detect: impl FnMut(f64) -> Result<bool>,
    p_min: f64,
    p_max: f64,
    bisect_tol: f64,
) -> Result<Threshold> {
    if !(p_min < p_max) || !p_min.is_finite() || !p_max.is_finite() {
        return Err(Error::Validation(format!("scan range [{p_min}, {p_max}] is empty")));
    }
    if !(bisect_tol > 0.0) {
        return Err(Error::Validation(format!("bisection tolerance must be positive, got {bisect_tol}")));
    }
    let grid: Vec<f64> = (0..PRESCAN_POINTS)
        .map(|k| p_min + (p_max - p_min) * k as f64 / (PRESCAN_POINTS - 1) as f64)
        .collect();
    let mut flags = Vec::with_capacity(grid.len());
    for &p in &grid {
        flags.push(detect(p)?);
    }
    let flips: Vec<usize> = (1..flags.len()).filter(|&k| flags[k] != flags[k - 1]).collect();
    match flips.len() {
        0 => return Err(Error::NoThreshold { lo: p_min, hi: p_max }),
        1 => {}
        n => return Err(Error::Ambiguous { flips: n }),
    }
    let k = flips[0];
    let lo_detected = flags[k - 1];
    let (mut lo, mut hi) = (grid[k - 1], grid[k]);
    let mut evaluations = grid.len();
    while hi - lo > bisect_tol {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        if detect(mid)? == lo_detected {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (p_undetected, p_detected) = if lo_detected { (hi, lo) } else { (lo, hi) };
    Ok(Threshold { estimate: 0.5 * (lo + hi), p_undetected, p_detected, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{purity, Subsystem};
    use approx::assert_abs_diff_eq;

    #[test]
    fn tiles_vectors_are_orthonormal() {
        let vs = upb_tiles_vectors();
        for (i, a) in vs.iter().enumerate() {
            for (j, b) in vs.iter().enumerate() {
                let ip: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                assert_abs_diff_eq!(ip.norm(), if i == j { 1.0 } else { 0.0 }, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn tiles_state_properties() {
        let rho = upb_tiles_state();
        let eig = rho.matrix().eigh();
        let rank = eig.values.iter().filter(|v| **v > 1e-12).count();
        assert_eq!(rank, 4);
        assert_abs_diff_eq!(purity(rho.matrix()), 0.25, epsilon = 1e-14);
        // Each reduction is (3·1 − Σ_j tr ψ_j ψ_j†)/4; the tiles vectors are
        // not balanced, so this is full rank but not 1/3.
        for side in [Subsystem::A, Subsystem::B] {
            let r = rho.partial_trace(side);
            assert_abs_diff_eq!(r.as_matrix()[(0, 0)].re, (3.0 - 11.0 / 6.0) / 4.0, epsilon = 1e-14);
            assert_abs_diff_eq!(r.as_matrix()[(1, 1)].re, (3.0 - 4.0 / 3.0) / 4.0, epsilon = 1e-14);
            assert!(r.min_eigenvalue() > 0.1);
        }
        // Oracle: eigenvalues of the explicitly transposed matrix.
        let m = rho.matrix().as_matrix();
        let pt = CMat::from_fn(9, 9, |r, s| m[((r / 3) * 3 + s % 3, (s / 3) * 3 + r % 3)]);
        let pt_min = HermitianMatrix::new(pt).unwrap().min_eigenvalue();
        assert!(pt_min > -1e-10);
        assert!(!ppt_test(&rho, 1e-10).detected);
    }

    #[test]
    fn ppt_on_bell_and_products() {
        let v = ppt_test(&werner_state(1.0).unwrap(), 1e-10);
        assert_abs_diff_eq!(v.left, 0.5, epsilon = 1e-12);
        assert!(v.detected);
        let v = ppt_test(&DensityMatrix::maximally_mixed(2, 3).unwrap(), 1e-10);
        assert!(!v.detected);
        let v = ppt_test(&werner_state(0.0).unwrap(), 1e-10);
        assert_abs_diff_eq!(v.left, -0.25, epsilon = 1e-14);
    }

    #[test]
    fn chessboard_samples_are_ppt_and_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let rho = chessboard_state(&ChessboardParams::sample(&mut rng)).unwrap();
            assert_abs_diff_eq!(rho.matrix().trace(), 1.0, epsilon = 1e-12);
            let scale = rho.matrix().eigh().values[8];
            assert!(rho.partial_transpose().min_eigenvalue() > -1e-12 * scale.max(1.0));
        }
        assert_eq!(chessboard_state_seeded(3).unwrap(), chessboard_state_seeded(3).unwrap());
    }

    #[test]
    fn degenerate_chessboard_rejected() {
        let p = ChessboardParams::from_array([0.3, 0.2, 0.1, 0.4, 0.0, 0.5]);
        assert!(matches!(chessboard_state(&p), Err(Error::Validation(_))));
    }

    #[test]
    fn isotropic_endpoints() {
        let rho = werner_state(0.0).unwrap();
        assert_eq!(rho, DensityMatrix::maximally_mixed(2, 2).unwrap());
        assert_eq!(werner_state(1.0).unwrap(), maximally_entangled(2).unwrap());
        assert!(werner_state(1.5).is_err());
        assert!(isotropic_state(0.5, 1).is_err());
    }

    #[test]
    fn werner_ppt_threshold() {
        let fam = StateFamily::Werner;
        let t = threshold_scan(|p| Ok(ppt_test(&fam.at(p)?, 1e-10).detected), 0.0, 1.0, 1e-7).unwrap();
        assert_abs_diff_eq!(t.estimate, 1.0 / 3.0, epsilon = 1e-6);
        assert!(t.p_undetected < t.p_detected);
    }

    #[test]
    fn scan_errors() {
        assert!(matches!(threshold_scan(|_| Ok(false), 0.0, 1.0, 1e-6), Err(Error::NoThreshold { .. })));
        let r = threshold_scan(|p| Ok((p * 10.0) as usize % 2 == 1), 0.0, 1.0, 1e-6);
        assert!(matches!(r, Err(Error::Ambiguous { flips }) if flips > 1));
        assert!(threshold_scan(|_| Ok(true), 1.0, 0.0, 1e-6).is_err());
    }

    #[test]
    fn family_names_round_trip() {
        for f in [
            StateFamily::Werner,
            StateFamily::Isotropic(4),
            StateFamily::UpbNoise,
            StateFamily::Chessboard,
            StateFamily::Random(2, 3),
        ] {
            assert_eq!(f.name().parse::<StateFamily>().unwrap(), f);
        }
        assert_eq!("isotropic".parse::<StateFamily>().unwrap(), StateFamily::Isotropic(3));
        assert!("random-2y3".parse::<StateFamily>().is_err());
        assert!("random-1x3".parse::<StateFamily>().is_err());
        assert!("ghz".parse::<StateFamily>().is_err());
    }
}
