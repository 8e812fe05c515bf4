use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Default absolute tolerance on a verdict margin.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Ppt,
    Ccnr,
    Prop3,
    Prop4,
    Prop6,
    Eq8,
    Dv,
    CmcSdp,
    LurExtract,
}

impl Criterion {
    pub const ALL: [Criterion; 9] = [
        Criterion::Ppt,
        Criterion::Ccnr,
        Criterion::Prop3,
        Criterion::Prop4,
        Criterion::Prop6,
        Criterion::Eq8,
        Criterion::Dv,
        Criterion::CmcSdp,
        Criterion::LurExtract,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Ppt => "ppt",
            Criterion::Ccnr => "ccnr",
            Criterion::Prop3 => "prop3",
            Criterion::Prop4 => "prop4",
            Criterion::Prop6 => "prop6",
            Criterion::Eq8 => "eq8",
            Criterion::Dv => "dv",
            Criterion::CmcSdp => "cmc-sdp",
            Criterion::LurExtract => "lur-extract",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown criterion '{s}'")))
    }
}

/// Outcome of one separability test.
///
/// Every criterion is phrased as "separable ⇒ left ≤ right", so
/// `margin = right − left` and the state is flagged entangled exactly when
/// `margin < −tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub criterion: Criterion,
    pub left: f64,
    pub right: f64,
    pub margin: f64,
    pub detected: bool,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
}

impl CriterionVerdict {
    pub fn new(criterion: Criterion, left: f64, right: f64, tol: f64) -> Self {
        let margin = right - left;
        Self { criterion, left, right, margin, detected: margin < -tol, tol, details: BTreeMap::new() }
    }

    pub fn with_detail(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.details.insert(key.to_owned(), value.into());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detection_follows_margin() {
        let v = CriterionVerdict::new(Criterion::Ccnr, 2.0, 1.0, 1e-10);
        assert!(v.detected);
        assert_eq!(v.margin, -1.0);
        let boundary = CriterionVerdict::new(Criterion::Ccnr, 1.0, 1.0, 1e-10);
        assert!(!boundary.detected);
    }

    #[test]
    fn names_round_trip() {
        for c in Criterion::ALL {
            assert_eq!(c.name().parse::<Criterion>().unwrap(), c);
            let json = serde_json::to_string(&c).unwrap();
            assert_eq!(json, format!("\"{}\"", c.name()));
        }
        assert!("prop5".parse::<Criterion>().is_err());
    }
}
