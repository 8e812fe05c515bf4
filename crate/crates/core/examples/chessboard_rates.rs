//! Detection rates on random chessboard states (all PPT, all entangled).
//!
//! cargo run --release --example chessboard_rates [n] [seed]

use covsep::analysis::AnalysisOptions;
use covsep::cli::batch_state;
use covsep::report::BatchStats;
use covsep::verdict::Criterion;
use covsep::zoo::StateFamily;
use rayon::prelude::*;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let family = StateFamily::Chessboard;
    let criteria = [Criterion::Ppt, Criterion::Ccnr, Criterion::Prop4, Criterion::Prop6];
    let opts = AnalysisOptions { fnf_epsilon: family.fnf_epsilon(), ..AnalysisOptions::default() };
    let outcomes: Vec<_> = (0..n).into_par_iter().map(|i| batch_state(family, seed, i, &criteria, &opts)).collect();
    let stats = BatchStats::collect(family.name(), &criteria, &outcomes, 1e-6, false);
    for r in &stats.rates {
        println!(
            "{:>6}: {:6.2}%  [{:.2}%, {:.2}%]  ({} failures)",
            r.criterion.name(),
            100.0 * r.rate,
            100.0 * r.ci95.0,
            100.0 * r.ci95.1,
            r.failures
        );
    }
}
