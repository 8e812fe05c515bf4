//! Runs any subset of criteria on one state, sharing the expensive
//! intermediate objects (operator Schmidt decomposition, filter normal form,
//! two-qubit CMC solution) between them.

use serde::Serialize;

use crate::cmc::{
    extract_lur_witness, prop3_for_state, qubit_cm6, qubit_cmc_feasibility, MinVarianceOptions, QubitCmcOptions,
    QubitCmcOutcome,
};
use crate::error::{Error, Result};
use crate::filter::{eq8_test, prop6_test, to_fnf_regularized, FilterNormalFormResult, FnfOptions};
use crate::schmidt::{ccnr_test, dv_test, operator_schmidt, prop4_test, OperatorSchmidtDecomposition};
use crate::state::DensityMatrix;
use crate::verdict::{Criterion, CriterionVerdict, DEFAULT_TOL};
use crate::zoo::ppt_test;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisOptions {
    /// Margin tolerance for every criterion except `cmc-sdp`, which uses
    /// `cmc.tol`.
    pub tol: f64,
    pub fnf: FnfOptions,
    /// White-noise weight mixed in before filtering (0 disables).
    pub fnf_epsilon: f64,
    pub cmc: QubitCmcOptions,
    pub variance: MinVarianceOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            fnf: FnfOptions::default(),
            fnf_epsilon: 0.0,
            cmc: QubitCmcOptions::default(),
            variance: MinVarianceOptions::default(),
        }
    }
}

/// Checks that `criterion` is defined for a `d_A × d_B` state.
pub fn check_applicable(criterion: Criterion, dims: (usize, usize)) -> Result<()> {
    let (da, db) = dims;
    match criterion {
        Criterion::CmcSdp | Criterion::LurExtract if dims != (2, 2) => Err(Error::DimensionMismatch(format!(
            "{criterion} requires 2x2, got {da}x{db}"
        ))),
        Criterion::Prop3 | Criterion::Prop6 if da != db => Err(Error::DimensionMismatch(format!(
            "{criterion} requires equal local dimensions, got {da}x{db}"
        ))),
        _ => Ok(()),
    }
}

/// Every criterion defined for the given dimensions, in canonical order.
pub fn applicable_criteria(dims: (usize, usize)) -> Vec<Criterion> {
    Criterion::ALL.into_iter().filter(|c| check_applicable(*c, dims).is_ok()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FnfSummary {
    pub xi: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub epsilon: f64,
}

impl FnfSummary {
    fn new(fnf: &FilterNormalFormResult, epsilon: f64) -> Self {
        Self { xi: fnf.xi.clone(), iterations: fnf.iterations, residual: fnf.residual, epsilon }
    }
}

/// Per-criterion outcomes in request order. A failing criterion never
/// prevents the others from running.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub results: Vec<(Criterion, Result<CriterionVerdict>)>,
    pub fnf: Option<Result<FnfSummary>>,
}

impl Analysis {
    pub fn verdict(&self, c: Criterion) -> Option<&Result<CriterionVerdict>> {
        self.results.iter().find(|(k, _)| *k == c).map(|(_, r)| r)
    }

    pub fn first_error(&self) -> Option<&Error> {
        self.results
            .iter()
            .find_map(|(_, r)| r.as_ref().err())
            .or_else(|| self.fnf.as_ref().and_then(|f| f.as_ref().err()))
    }
}

struct Lazy<'a> {
    rho: &'a DensityMatrix,
    opts: &'a AnalysisOptions,
    schmidt: Option<OperatorSchmidtDecomposition>,
    fnf: Option<Result<FilterNormalFormResult>>,
    cmc: Option<Result<QubitCmcOutcome>>,
}

impl Lazy<'_> {
    fn schmidt(&mut self) -> &OperatorSchmidtDecomposition {
        self.schmidt.get_or_insert_with(|| operator_schmidt(self.rho))
    }

    fn fnf(&mut self) -> Result<&FilterNormalFormResult> {
        let (rho, opts) = (self.rho, self.opts);
        self.fnf
            .get_or_insert_with(|| to_fnf_regularized(rho, opts.fnf_epsilon, &opts.fnf))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn cmc(&mut self) -> Result<&QubitCmcOutcome> {
        let (rho, opts) = (self.rho, self.opts);
        self.cmc
            .get_or_insert_with(|| qubit_cmc_feasibility(&qubit_cm6(rho)?, &opts.cmc))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn fnf_details(&mut self, v: CriterionVerdict) -> Result<CriterionVerdict> {
        let eps = self.opts.fnf_epsilon;
        let fnf = self.fnf()?;
        Ok(v.with_detail("fnf_iterations", fnf.iterations)
            .with_detail("fnf_residual", fnf.residual)
            .with_detail("fnf_epsilon", eps))
    }

    fn run(&mut self, c: Criterion) -> Result<CriterionVerdict> {
        let tol = self.opts.tol;
        let (da, db) = self.rho.dims();
        match c {
            Criterion::Ppt => Ok(ppt_test(self.rho, tol)),
            Criterion::Ccnr => Ok(ccnr_test(self.schmidt(), tol)),
            Criterion::Prop4 => Ok(prop4_test(self.schmidt(), tol)),
            Criterion::Prop3 => prop3_for_state(self.rho, tol),
            Criterion::Prop6 => {
                let v = prop6_test(self.fnf()?, tol)?;
                self.fnf_details(v)
            }
            Criterion::Eq8 => {
                let v = eq8_test(self.fnf()?, tol);
                self.fnf_details(v)
            }
            Criterion::Dv => {
                let v = dv_test(&self.fnf()?.xi, da, db, tol);
                self.fnf_details(v)
            }
            Criterion::CmcSdp => Ok(self.cmc()?.verdict.clone()),
            Criterion::LurExtract => self.lur(),
        }
    }

    /// LUR verdict: `left = U_A + U_B`, `right = Σ δ²`, so a verified
    /// violation shows up as `left > right`.
    fn lur(&mut self) -> Result<CriterionVerdict> {
        let tol = self.opts.tol;
        let variance = self.opts.variance;
        let rho = self.rho;
        let outcome = self.cmc()?.clone();
        if outcome.feasible() {
            return Ok(CriterionVerdict::new(Criterion::LurExtract, 0.0, 0.0, tol)
                .with_detail("status", "cmc-satisfied"));
        }
        let gamma = qubit_cm6(rho)?;
        match extract_lur_witness(&gamma, &outcome, &variance)? {
            None => Ok(CriterionVerdict::new(Criterion::LurExtract, 0.0, 0.0, tol).with_detail("status", "not-found")),
            Some(lur) => {
                let value = crate::cmc::lur_value(rho, &lur)?;
                Ok(CriterionVerdict::new(Criterion::LurExtract, value.rhs, value.lhs, tol)
                    .with_detail("status", "verified")
                    .with_detail("observables", lur.len())
                    .with_detail("bound_a", lur.bound_a.value)
                    .with_detail("bound_b", lur.bound_b.value))
            }
        }
    }
}

/// Evaluates `criteria` on `rho`.
///
/// Fails up front (validation) if a requested criterion is not defined for
/// the state's dimensions; numerical failures are reported per criterion.
pub fn analyze(rho: &DensityMatrix, criteria: &[Criterion], opts: &AnalysisOptions) -> Result<Analysis> {
    for &c in criteria {
        check_applicable(c, rho.dims())?;
    }
    let mut lazy = Lazy { rho, opts, schmidt: None, fnf: None, cmc: None };
    let results = criteria.iter().map(|&c| (c, lazy.run(c))).collect();
    let eps = opts.fnf_epsilon;
    let fnf = lazy.fnf.map(|r| r.map(|f| FnfSummary::new(&f, eps)));
    Ok(Analysis { results, fnf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::maximally_entangled;
    use crate::zoo::upb_tiles_state;

    #[test]
    fn bell_detected_by_everything() {
        let rho = maximally_entangled(2).unwrap();
        let crit = applicable_criteria((2, 2));
        assert_eq!(crit.len(), Criterion::ALL.len());
        let a = analyze(&rho, &crit, &AnalysisOptions::default()).unwrap();
        for (c, r) in &a.results {
            assert!(r.as_ref().unwrap().detected, "{c} missed the Bell state");
        }
        assert_eq!(a.fnf.unwrap().unwrap().xi.len(), 3);
    }

    #[test]
    fn maximally_mixed_detected_by_nothing() {
        let rho = DensityMatrix::maximally_mixed(2, 2).unwrap();
        let a = analyze(&rho, &Criterion::ALL, &AnalysisOptions::default()).unwrap();
        assert!(a.results.iter().all(|(_, r)| !r.as_ref().unwrap().detected));
    }

    #[test]
    fn inapplicable_criteria_rejected() {
        let rho = DensityMatrix::maximally_mixed(3, 3).unwrap();
        let err = analyze(&rho, &[Criterion::CmcSdp], &AnalysisOptions::default()).unwrap_err();
        assert!(err.to_string().contains("cmc-sdp requires 2x2"));
        let rho = DensityMatrix::maximally_mixed(2, 3).unwrap();
        assert!(analyze(&rho, &[Criterion::Prop6], &AnalysisOptions::default()).is_err());
        assert_eq!(
            applicable_criteria((2, 3)),
            vec![Criterion::Ppt, Criterion::Ccnr, Criterion::Prop4, Criterion::Eq8, Criterion::Dv]
        );
    }

    #[test]
    fn failures_stay_local() {
        // A pure product state has no filter normal form, but PPT and CCNR
        // still run.
        let rho = DensityMatrix::pure(3, 3, &crate::state::basis_vector(9, 0)).unwrap();
        let a = analyze(&rho, &[Criterion::Ppt, Criterion::Prop6, Criterion::Ccnr], &AnalysisOptions::default()).unwrap();
        assert!(a.results[0].1.is_ok());
        assert!(matches!(a.results[1].1, Err(Error::SingularReducedState { .. })));
        assert!(a.results[2].1.is_ok());
        assert!(a.first_error().is_some());
    }

    #[test]
    fn tiles_state_is_ppt_but_prop6_detected() {
        let a = analyze(&upb_tiles_state(), &[Criterion::Ppt, Criterion::Prop6], &AnalysisOptions::default()).unwrap();
        assert!(!a.results[0].1.as_ref().unwrap().detected);
        assert!(a.results[1].1.as_ref().unwrap().detected);
    }
}
