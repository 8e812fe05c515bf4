//! Randomized properties checked against independent oracles: nalgebra's
//! own decompositions, closed forms, and brute-force sampling.

use covsep::analysis::{analyze, applicable_criteria, AnalysisOptions};
use covsep::cmc::{certified_min_variance, prop3_for_state, qubit_cm6, qubit_cmc_feasibility, MinVarianceOptions};
use covsep::filter::{to_fnf, FnfOptions};
use covsep::numerics::{svd, CMat, HermitianMatrix, ProjectPsd, C64};
use covsep::schmidt::{ccnr_test, operator_schmidt, prop4_test, realign};
use covsep::state::{random_density_matrix, random_pure_vector, random_unitary, DensityMatrix};
use covsep::verdict::DEFAULT_TOL;
use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn hermitian(dim: usize, raw: &[f64]) -> HermitianMatrix {
    let m = CMat::from_fn(dim, dim, |i, j| c(raw[2 * (i * dim + j)], raw[2 * (i * dim + j) + 1]));
    HermitianMatrix::symmetrized(&m + m.adjoint())
}

fn hermitian_strategy() -> impl Strategy<Value = HermitianMatrix> {
    (1usize..=9).prop_flat_map(|d| prop::collection::vec(-2.0f64..2.0, 2 * d * d).prop_map(move |v| hermitian(d, &v)))
}

fn state_strategy() -> impl Strategy<Value = DensityMatrix> {
    (2usize..=3, 2usize..=3, any::<u64>(), 1usize..=9).prop_map(|(da, db, seed, rank)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_density_matrix(da, db, rank.min(da * db), &mut rng).unwrap()
    })
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// A random convex mixture of product states.
fn separable_state(da: usize, db: usize, terms: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = da * db;
    let mut acc = HermitianMatrix::symmetrized(CMat::zeros(n, n));
    for k in 0..terms {
        let a = HermitianMatrix::outer(&random_pure_vector(da, &mut rng));
        let b = HermitianMatrix::outer(&random_pure_vector(db, &mut rng));
        acc = acc.add(&a.kron(&b).scale(1.0 + k as f64));
    }
    DensityMatrix::from_unnormalized(da, db, acc).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigh_reconstructs_and_matches_nalgebra(h in hermitian_strategy()) {
        let e = h.eigh();
        let scale = 1.0 + max_abs(h.as_matrix());
        prop_assert!(max_abs(&(e.reconstruct() - h.as_matrix())) < 1e-10 * scale);
        let gram = e.vectors.adjoint() * &e.vectors;
        prop_assert!(max_abs(&(gram - CMat::identity(h.dim(), h.dim()))) < 1e-10);
        let reference = sorted(h.as_matrix().clone().symmetric_eigenvalues().iter().copied().collect());
        for (a, b) in sorted(e.values.clone()).iter().zip(&reference) {
            prop_assert!((a - b).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn psd_projection_is_the_nearest_psd_matrix(h in hermitian_strategy()) {
        let p = h.project_psd();
        prop_assert!(p.min_eigenvalue() > -1e-12);
        prop_assert!(max_abs(&(p.project_psd().as_matrix() - p.as_matrix())) < 1e-10);
        // The Frobenius distance equals the norm of the clipped negative eigenvalues.
        let neg: f64 = h.eigh().values.iter().map(|x| x.min(0.0).powi(2)).sum::<f64>().sqrt();
        let dist = (h.as_matrix() - p.as_matrix()).norm();
        prop_assert!((dist - neg).abs() < 1e-9 * (1.0 + dist));
    }

    #[test]
    fn singular_values_are_square_roots_of_gram_eigenvalues(
        rows in 1usize..=6, cols in 1usize..=6, raw in prop::collection::vec(-1.0f64..1.0, 72)
    ) {
        let m = CMat::from_fn(rows, cols, |i, j| c(raw[2 * (i * cols + j)], raw[2 * (i * cols + j) + 1]));
        let s = svd(&m);
        let recon = &s.u * CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            s.singular_values.len(), s.singular_values.iter().map(|&x| C64::new(x, 0.0)))) * s.v.adjoint();
        prop_assert!(max_abs(&(recon - &m)) < 1e-10);
        let gram = HermitianMatrix::symmetrized(m.adjoint() * &m);
        let mut want: Vec<f64> = gram.eigh().values.iter().map(|x| x.max(0.0).sqrt()).collect();
        want.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in s.singular_values.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn operator_schmidt_reconstructs_and_matches_realignment(rho in state_strategy()) {
        let dec = operator_schmidt(&rho);
        prop_assert!(max_abs(&(dec.reconstruct() - rho.matrix().as_matrix())) < 1e-10);
        let sq: f64 = dec.coefficients.iter().map(|x| x * x).sum();
        let purity = rho.matrix().trace_product(rho.matrix());
        prop_assert!((sq - purity).abs() < 1e-10);
        let reference = realign(&rho).singular_values();
        prop_assert!((dec.coefficient_sum() - reference.sum()).abs() < 1e-10);
    }

    #[test]
    fn local_unitaries_preserve_schmidt_coefficients_and_xi(rho in state_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (da, db) = rho.dims();
        let moved = rho.local_unitary(&random_unitary(da, &mut rng), &random_unitary(db, &mut rng)).unwrap();
        let a = operator_schmidt(&rho).coefficients;
        let b = operator_schmidt(&moved).coefficients;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        if let (Ok(f), Ok(g)) = (to_fnf(&rho, &FnfOptions::default()), to_fnf(&moved, &FnfOptions::default())) {
            for (x, y) in f.xi.iter().zip(&g.xi) {
                prop_assert!((x - y).abs() < 1e-7, "{:?} vs {:?}", f.xi, g.xi);
            }
        }
    }

    #[test]
    fn fnf_has_maximally_mixed_reductions(rho in state_strategy()) {
        if let Ok(f) = to_fnf(&rho, &FnfOptions::default()) {
            let (da, db) = rho.dims();
            let ra = f.state.partial_trace(covsep::state::Subsystem::A);
            let rb = f.state.partial_trace(covsep::state::Subsystem::B);
            prop_assert!(max_abs(&(ra.as_matrix() - CMat::identity(da, da) * c(1.0 / da as f64, 0.0))) < 1e-8);
            prop_assert!(max_abs(&(rb.as_matrix() - CMat::identity(db, db) * c(1.0 / db as f64, 0.0))) < 1e-8);
        }
    }

    #[test]
    fn ccnr_detection_implies_prop4_detection(rho in state_strategy()) {
        let dec = operator_schmidt(&rho);
        prop_assert!(!ccnr_test(&dec, DEFAULT_TOL).detected || prop4_test(&dec, DEFAULT_TOL).detected);
    }

    #[test]
    fn separable_states_are_never_detected(
        da in 2usize..=3, db in 2usize..=3, terms in 1usize..=12, seed in any::<u64>()
    ) {
        let rho = separable_state(da, db, terms, seed);
        let a = analyze(&rho, &applicable_criteria((da, db)), &AnalysisOptions::default()).unwrap();
        for (crit, r) in &a.results {
            // Product-heavy mixtures can have singular reductions; that is
            // an error, never a detection.
            if let Ok(v) = r {
                prop_assert!(!v.detected, "{crit} flagged a separable state: margin {}", v.margin);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prop3_detection_implies_cmc_violation(seed in any::<u64>(), rank in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density_matrix(2, 2, rank, &mut rng).unwrap();
        let prop3 = prop3_for_state(&rho, 1e-7).unwrap();
        if prop3.detected {
            let out = qubit_cmc_feasibility(&qubit_cm6(&rho).unwrap(), &Default::default()).unwrap();
            prop_assert!(!out.feasible(), "prop3 margin {}, cmc lower bound {}", prop3.margin, out.lower_bound);
        }
    }

    #[test]
    fn certified_qubit_variance_is_tight(raw in prop::collection::vec(-1.0f64..1.0, 8..=24)) {
        let ops: Vec<HermitianMatrix> = raw.chunks_exact(8).map(|r| hermitian(2, r)).collect();
        let bound = certified_min_variance(&ops, 2, &MinVarianceOptions::default()).unwrap();
        // Exact: A = a₀ + a·σ has variance |a|² − (a·n)² at Bloch vector n.
        let mut q = Matrix3::<f64>::zeros();
        for op in &ops {
            let m = op.as_matrix();
            let a = nalgebra::Vector3::new(m[(0, 1)].re, -m[(0, 1)].im, 0.5 * (m[(0, 0)].re - m[(1, 1)].re));
            q += a * a.transpose();
        }
        let exact = q.trace() - q.symmetric_eigenvalues().max();
        prop_assert!(bound.is_certified());
        prop_assert!(bound.value <= exact + 1e-12, "bound {} above exact {}", bound.value, exact);
        prop_assert!(bound.value >= exact - 1e-8, "bound {} loose vs exact {}", bound.value, exact);
    }
}
