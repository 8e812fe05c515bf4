//! Machine-readable command reports.
//!
//! Reports serialize with a fixed key order (struct order, sorted maps), so
//! two runs with the same inputs produce identical JSON apart from the
//! `timing` object.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::analysis::{Analysis, FnfSummary};
use crate::error::Error;
use crate::verdict::{Criterion, CriterionVerdict};
use crate::zoo::Threshold;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub input: BTreeMap<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<VerdictEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fnf: Option<FnfEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch: Option<BatchStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            input: BTreeMap::new(),
            seed: None,
            verdicts: Vec::new(),
            fnf: None,
            threshold: None,
            batch: None,
            error: None,
            timing: None,
        }
    }

    pub fn with_input(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.input.insert(key.to_owned(), value.into());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite JSON values")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

/// One criterion's result: either a verdict or the error that stopped it.
#[derive(Clone, Debug, Serialize)]
pub struct VerdictEntry {
    pub criterion: Criterion,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<CriterionVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl VerdictEntry {
    pub fn from_result(criterion: Criterion, r: &Result<CriterionVerdict, Error>) -> Self {
        match r {
            Ok(v) => Self { criterion, verdict: Some(v.clone()), error: None },
            Err(e) => Self { criterion, verdict: None, error: Some(e.to_string()) },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FnfEntry {
    #[serde(flatten)]
    pub summary: Option<FnfSummary>,
    /// `[re, im]` pairs, row-major.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_a: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_b: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl FnfEntry {
    pub fn from_analysis(a: &Analysis) -> Option<Self> {
        a.fnf.as_ref().map(|r| match r {
            Ok(s) => Self { summary: Some(s.clone()), filter_a: None, filter_b: None, error: None },
            Err(e) => Self { summary: None, filter_a: None, filter_b: None, error: Some(e.to_string()) },
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdEntry {
    pub criterion: Criterion,
    pub p_min: f64,
    pub p_max: f64,
    pub bisect_tol: f64,
    #[serde(flatten)]
    pub result: Threshold,
}

/// `z` for a two-sided 95% interval.
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0.0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateEntry {
    pub criterion: Criterion,
    /// States on which the criterion produced a verdict.
    pub evaluated: usize,
    pub detected: usize,
    /// States on which the criterion failed numerically (not in the rate).
    pub failures: usize,
    /// `detected / evaluated`.
    pub rate: f64,
    pub ci95: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgreementEntry {
    pub first: Criterion,
    pub second: Criterion,
    /// States where both criteria produced a verdict.
    pub compared: usize,
    pub agree: usize,
    /// Subset where both margins exceed `margin_floor` in absolute value.
    pub compared_clear: usize,
    pub agree_clear: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateRecord {
    pub index: usize,
    /// `None` marks a criterion that failed on this state.
    pub margins: BTreeMap<String, Option<f64>>,
    pub detected: BTreeMap<String, Option<bool>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchStats {
    pub family: String,
    pub n: usize,
    /// States whose generation itself failed.
    pub generation_failures: usize,
    pub margin_floor: f64,
    pub rates: Vec<RateEntry>,
    pub agreement: Vec<AgreementEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<StateRecord>,
}

/// Per-state outcome fed into [`BatchStats::collect`]: `None` if the state
/// could not be generated, else `(margin, detected)` per criterion, `None`
/// for a failed criterion.
pub type StateOutcome = Option<Vec<Option<(f64, bool)>>>;

impl BatchStats {
    pub fn collect(
        family: String,
        criteria: &[Criterion],
        outcomes: &[StateOutcome],
        margin_floor: f64,
        keep_states: bool,
    ) -> Self {
        let n = outcomes.len();
        let generation_failures = outcomes.iter().filter(|o| o.is_none()).count();
        let rates = criteria
            .iter()
            .enumerate()
            .map(|(k, &criterion)| {
                let mut evaluated = 0;
                let mut detected = 0;
                let mut failures = 0;
                for o in outcomes.iter().flatten() {
                    match o[k] {
                        Some((_, d)) => {
                            evaluated += 1;
                            detected += usize::from(d);
                        }
                        None => failures += 1,
                    }
                }
                let rate = if evaluated > 0 { detected as f64 / evaluated as f64 } else { 0.0 };
                RateEntry { criterion, evaluated, detected, failures, rate, ci95: wilson_interval(detected, evaluated) }
            })
            .collect();
        let mut agreement = Vec::new();
        for i in 0..criteria.len() {
            for j in (i + 1)..criteria.len() {
                let mut e = AgreementEntry {
                    first: criteria[i],
                    second: criteria[j],
                    compared: 0,
                    agree: 0,
                    compared_clear: 0,
                    agree_clear: 0,
                };
                for o in outcomes.iter().flatten() {
                    if let (Some((ma, da)), Some((mb, db))) = (o[i], o[j]) {
                        e.compared += 1;
                        e.agree += usize::from(da == db);
                        if ma.abs() > margin_floor && mb.abs() > margin_floor {
                            e.compared_clear += 1;
                            e.agree_clear += usize::from(da == db);
                        }
                    }
                }
                agreement.push(e);
            }
        }
        let states = if keep_states {
            outcomes
                .iter()
                .enumerate()
                .map(|(index, o)| {
                    let mut margins = BTreeMap::new();
                    let mut detected = BTreeMap::new();
                    for (k, c) in criteria.iter().enumerate() {
                        let v = o.as_ref().and_then(|v| v[k]);
                        margins.insert(c.name().to_owned(), v.map(|x| x.0));
                        detected.insert(c.name().to_owned(), v.map(|x| x.1));
                    }
                    StateRecord { index, margins, detected }
                })
                .collect()
        } else {
            Vec::new()
        };
        Self { family, n, generation_failures, margin_floor, rates, agreement, states }
    }

    pub fn rate(&self, c: Criterion) -> Option<&RateEntry> {
        self.rates.iter().find(|r| r.criterion == c)
    }
}
