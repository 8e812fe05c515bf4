//! JSON state files.
//!
//! ```json
//! {
//!   "dimA": 2,
//!   "dimB": 2,
//!   "matrix": [
//!     [0.5, 0.0], [0.0, 0.0], [0.0, 0.0], [0.5, 0.0],
//!     ...
//!   ]
//! }
//! ```
//!
//! `matrix` holds the `(d_A d_B)²` entries as `[re, im]` pairs, row-major in
//! the composite index `i·d_B + j`. The canonical writer puts the keys in
//! this order and one matrix row per line; numbers use the shortest
//! representation that parses back to the same `f64`, so writing a parsed
//! canonical file reproduces it byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::numerics::{c, CMat, HermitianMatrix};
use crate::state::DensityMatrix;

/// The raw contents of a state file. Entries are kept exactly as read, so
/// they survive a round trip even when they are only Hermitian to within
/// the validation tolerance.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    #[serde(rename = "dimA")]
    pub dim_a: usize,
    #[serde(rename = "dimB")]
    pub dim_b: usize,
    pub matrix: Vec<[f64; 2]>,
}

impl StateFile {
    pub fn from_density_matrix(rho: &DensityMatrix) -> Self {
        let m = rho.matrix().as_matrix();
        let n = m.nrows();
        let mut matrix = Vec::with_capacity(n * n);
        for r in 0..n {
            for col in 0..n {
                let z = m[(r, col)];
                matrix.push([z.re, z.im]);
            }
        }
        Self { dim_a: rho.dim_a(), dim_b: rho.dim_b(), matrix }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("malformed state file: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Validates shape, finiteness and Hermiticity (naming the first bad
    /// entry), then unit trace and positivity.
    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        let (da, db) = (self.dim_a, self.dim_b);
        if da < 2 || db < 2 {
            return Err(Error::Validation(format!("dimA and dimB must be at least 2, got {da} and {db}")));
        }
        let n = da * db;
        if self.matrix.len() != n * n {
            return Err(Error::Validation(format!(
                "matrix must have (dimA*dimB)^2 = {} entries, got {}",
                n * n,
                self.matrix.len()
            )));
        }
        if let Some(k) = self.matrix.iter().position(|z| !(z[0].is_finite() && z[1].is_finite())) {
            return Err(Error::Validation(format!("matrix entry ({}, {}) is not finite", k / n, k % n)));
        }
        let m = CMat::from_fn(n, n, |r, col| {
            let z = self.matrix[r * n + col];
            c(z[0], z[1])
        });
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for r in 0..n {
            for col in r..n {
                if (m[(r, col)] - m[(col, r)].conj()).norm() > 1e-12 * scale {
                    return Err(Error::Validation(format!(
                        "matrix is not Hermitian: entry ({r}, {col}) differs from the conjugate of ({col}, {r})"
                    )));
                }
            }
        }
        DensityMatrix::new(da, db, HermitianMatrix::symmetrized(m))
    }

    pub fn to_canonical_string(&self) -> String {
        let n = self.dim_a * self.dim_b;
        let num = |x: f64| serde_json::to_string(&x).expect("finite float");
        let mut out = String::new();
        let _ = writeln!(out, "{{\n  \"dimA\": {},\n  \"dimB\": {},\n  \"matrix\": [", self.dim_a, self.dim_b);
        let rows = if n == 0 { 0 } else { self.matrix.len().div_ceil(n) };
        for r in 0..rows {
            let row = &self.matrix[r * n..((r + 1) * n).min(self.matrix.len())];
            let cells: Vec<String> = row.iter().map(|z| format!("[{}, {}]", num(z[0]), num(z[1]))).collect();
            let sep = if r + 1 < rows { "," } else { "" };
            let _ = writeln!(out, "    {}{sep}", cells.join(", "));
        }
        out.push_str("  ]\n}\n");
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical_string())
            .map_err(|e| Error::Validation(format!("cannot write {}: {e}", path.display())))
    }
}

/// Reads and validates a state file in one step.
pub fn read_state(path: &Path) -> Result<DensityMatrix> {
    StateFile::read(path)?.to_density_matrix()
}
