//! Find the noise level below which the tiles bound entangled state stops
//! being detected by the filter-normal-form criterion. PPT never detects it.
//!
//! cargo run --release --example upb_threshold

use covsep::analysis::{analyze, AnalysisOptions};
use covsep::verdict::Criterion;
use covsep::zoo::{threshold_scan, StateFamily};

fn main() {
    let opts = AnalysisOptions::default();
    for c in [Criterion::Prop6, Criterion::Ccnr, Criterion::Ppt] {
        let r = threshold_scan(
            |p| Ok(analyze(&StateFamily::UpbNoise.at(p)?, &[c], &opts)?.results[0].1.clone()?.detected),
            0.0,
            1.0,
            1e-6,
        );
        match r {
            Ok(t) => println!("{c:>6}: detected for p >= {:.5} ({} evaluations)", t.estimate, t.evaluations),
            Err(e) => println!("{c:>6}: {e}"),
        }
    }
}
