//! The `covsep` command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure
//! (the report is still printed, with the failing parts marked).

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{analyze, applicable_criteria, check_applicable, AnalysisOptions};
use crate::error::{Error, Result};
use crate::filter::{to_fnf_regularized, FnfOptions};
use crate::io::{read_state, StateFile};
use crate::report::{BatchStats, FnfEntry, Report, StateOutcome, ThresholdEntry, Timing, VerdictEntry};
use crate::verdict::{Criterion, DEFAULT_TOL};
use crate::zoo::{threshold_scan, StateFamily};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "covsep", version, about = "Covariance-matrix entanglement criteria for bipartite states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run separability criteria on a state file.
    Analyze(AnalyzeArgs),
    /// Locate the mixing weight where a criterion starts detecting a family.
    Scan(ScanArgs),
    /// Detection rates over random states from a family.
    Batch(BatchArgs),
    /// Filter normal form of a state file.
    Fnf(FnfArgs),
    /// Write a family member as a state file.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FnfFlags {
    /// Residual target for the filter iteration.
    #[arg(long, default_value_t = 1e-10)]
    pub fnf_tol: f64,
    #[arg(long, default_value_t = 500)]
    pub fnf_max_iter: usize,
    /// Weight of white noise mixed in before filtering (family default when omitted).
    #[arg(long)]
    pub fnf_eps: Option<f64>,
}

impl FnfFlags {
    fn options(&self) -> FnfOptions {
        FnfOptions { tol: self.fnf_tol, max_iter: self.fnf_max_iter, ..FnfOptions::default() }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub state: PathBuf,
    /// Comma-separated criteria; defaults to every criterion defined for the state's dimensions.
    #[arg(long, value_delimiter = ',')]
    pub criteria: Option<Vec<Criterion>>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub fnf: FnfFlags,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub family: StateFamily,
    #[arg(long)]
    pub criterion: Criterion,
    #[arg(long, default_value_t = 0.0)]
    pub p_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p_max: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Width of the final bisection bracket.
    #[arg(long, default_value_t = 1e-6)]
    pub bisect_tol: f64,
    #[command(flatten)]
    pub fnf: FnfFlags,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long)]
    pub family: StateFamily,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',')]
    pub criteria: Option<Vec<Criterion>>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Margins smaller than this are treated as unclear in agreement counts.
    #[arg(long, default_value_t = 1e-6)]
    pub margin_floor: f64,
    /// Include every state's margins in the report.
    #[arg(long)]
    pub per_state: bool,
    #[command(flatten)]
    pub fnf: FnfFlags,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct FnfArgs {
    #[arg(long)]
    pub state: PathBuf,
    #[command(flatten)]
    pub fnf: FnfFlags,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub family: StateFamily,
    /// Mixing weight for parametric families.
    #[arg(long)]
    pub p: Option<f64>,
    /// Seed for random families (the state drawn is batch index 0).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a command produced: the text to print and the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub report: Option<Report>,
    pub stdout: String,
    pub exit_code: i32,
}

fn exit_code_for(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

fn render(report: Report, json: bool, exit_code: i32) -> Outcome {
    let stdout = if json { report.to_json() + "\n" } else { human(&report) };
    Outcome { report: Some(report), stdout, exit_code }
}

fn finish(mut report: Report, start: Instant, json: bool, exit_code: i32) -> Outcome {
    report.timing = Some(Timing { elapsed_ms: start.elapsed().as_secs_f64() * 1e3 });
    render(report, json, exit_code)
}

fn fmt_num(x: f64) -> String {
    format!("{x:.10}").trim_end_matches('0').trim_end_matches('.').to_owned()
}

/// Plain-text rendering of a report.
fn human(r: &Report) -> String {
    let mut out = format!("covsep {}", r.command);
    for (k, v) in &r.input {
        out.push_str(&format!(" {k}={v}"));
    }
    out.push('\n');
    for e in &r.verdicts {
        match (&e.verdict, &e.error) {
            (Some(v), _) => out.push_str(&format!(
                "  {:<12} {:<12} left={} right={} margin={}\n",
                e.criterion.name(),
                if v.detected { "DETECTED" } else { "not detected" },
                fmt_num(v.left),
                fmt_num(v.right),
                fmt_num(v.margin)
            )),
            (None, Some(err)) => out.push_str(&format!("  {:<12} ERROR        {err}\n", e.criterion.name())),
            _ => {}
        }
    }
    if let Some(f) = &r.fnf {
        if let Some(s) = &f.summary {
            let xi: Vec<String> = s.xi.iter().map(|x| fmt_num(*x)).collect();
            out.push_str(&format!(
                "  fnf: xi=[{}] iterations={} residual={:e}\n",
                xi.join(", "),
                s.iterations,
                s.residual
            ));
        }
        if let Some(err) = &f.error {
            out.push_str(&format!("  fnf: ERROR {err}\n"));
        }
    }
    if let Some(t) = &r.threshold {
        out.push_str(&format!(
            "  threshold for {}: p = {} (undetected at {}, detected at {}; {} evaluations)\n",
            t.criterion.name(),
            fmt_num(t.result.estimate),
            fmt_num(t.result.p_undetected),
            fmt_num(t.result.p_detected),
            t.result.evaluations
        ));
    }
    if let Some(b) = &r.batch {
        out.push_str(&format!("  {} states, {} failed to generate\n", b.n, b.generation_failures));
        for rate in &b.rates {
            out.push_str(&format!(
                "  {:<12} rate={:.4} ({}/{}, 95% CI [{:.4}, {:.4}], {} failures)\n",
                rate.criterion.name(),
                rate.rate,
                rate.detected,
                rate.evaluated,
                rate.ci95.0,
                rate.ci95.1,
                rate.failures
            ));
        }
    }
    if let Some(e) = &r.error {
        out.push_str(&format!("  error: {e}\n"));
    }
    out
}

fn resolve_criteria(requested: &Option<Vec<Criterion>>, dims: (usize, usize)) -> Result<Vec<Criterion>> {
    match requested {
        None => Ok(applicable_criteria(dims)),
        Some(list) => {
            let mut out: Vec<Criterion> = Vec::new();
            for &c in list {
                check_applicable(c, dims)?;
                if !out.contains(&c) {
                    out.push(c);
                }
            }
            Ok(out)
        }
    }
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<Outcome> {
    let start = Instant::now();
    let rho = read_state(&args.state)?;
    let criteria = resolve_criteria(&args.criteria, rho.dims())?;
    let opts = AnalysisOptions {
        tol: args.tol,
        fnf: args.fnf.options(),
        fnf_epsilon: args.fnf.fnf_eps.unwrap_or(0.0),
        ..AnalysisOptions::default()
    };
    let analysis = analyze(&rho, &criteria, &opts)?;
    let mut report = Report::new("analyze")
        .with_input("state", args.state.display().to_string())
        .with_input("dimA", rho.dim_a())
        .with_input("dimB", rho.dim_b());
    report.verdicts = analysis.results.iter().map(|(c, r)| VerdictEntry::from_result(*c, r)).collect();
    report.fnf = FnfEntry::from_analysis(&analysis);
    let code = analysis.first_error().map_or(EXIT_OK, exit_code_for);
    Ok(finish(report, start, args.json, code))
}

pub fn cmd_scan(args: &ScanArgs) -> Result<Outcome> {
    let start = Instant::now();
    check_applicable(args.criterion, args.family.dims())?;
    if !args.family.is_parametric() {
        return Err(Error::Validation(format!("family {} has no mixing parameter to scan", args.family)));
    }
    let opts = AnalysisOptions {
        tol: args.tol,
        fnf: args.fnf.options(),
        fnf_epsilon: args.fnf.fnf_eps.unwrap_or(args.family.fnf_epsilon()),
        ..AnalysisOptions::default()
    };
    let family = args.family;
    let criterion = args.criterion;
    let detect = |p: f64| -> Result<bool> {
        let rho = family.at(p)?;
        let a = analyze(&rho, &[criterion], &opts)?;
        match &a.results[0].1 {
            Ok(v) => Ok(v.detected),
            Err(e) => Err(e.clone()),
        }
    };
    let mut report = Report::new("scan")
        .with_input("family", family.name())
        .with_input("criterion", criterion.name())
        .with_input("tol", args.tol);
    match threshold_scan(detect, args.p_min, args.p_max, args.bisect_tol) {
        Ok(t) => {
            report.threshold = Some(ThresholdEntry {
                criterion,
                p_min: args.p_min,
                p_max: args.p_max,
                bisect_tol: args.bisect_tol,
                result: t,
            });
            Ok(finish(report, start, args.json, EXIT_OK))
        }
        Err(e) => {
            let code = exit_code_for(&e);
            report.error = Some(e.to_string());
            Ok(finish(report, start, args.json, code))
        }
    }
}

/// Evaluates state `index` of a batch; its RNG is seeded with `seed` and
/// uses stream `index`, so results do not depend on scheduling.
pub fn batch_state(
    family: StateFamily,
    seed: u64,
    index: usize,
    criteria: &[Criterion],
    opts: &AnalysisOptions,
) -> StateOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let rho = family.sample(&mut rng).ok()?;
    let a = analyze(&rho, criteria, opts).ok()?;
    Some(a.results.iter().map(|(_, r)| r.as_ref().ok().map(|v| (v.margin, v.detected))).collect())
}

pub fn cmd_batch(args: &BatchArgs) -> Result<Outcome> {
    let start = Instant::now();
    if args.n == 0 {
        return Err(Error::Validation("--n must be at least 1".into()));
    }
    if args.family.is_parametric() {
        return Err(Error::Validation(format!(
            "family {} is parametric; batch needs a random family (chessboard, random-<a>x<b>)",
            args.family
        )));
    }
    let criteria = resolve_criteria(&args.criteria, args.family.dims())?;
    let opts = AnalysisOptions {
        tol: args.tol,
        fnf: args.fnf.options(),
        fnf_epsilon: args.fnf.fnf_eps.unwrap_or(args.family.fnf_epsilon()),
        ..AnalysisOptions::default()
    };
    let workers = args.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
    let family = args.family;
    let seed = args.seed;
    let outcomes: Vec<StateOutcome> =
        pool.install(|| (0..args.n).into_par_iter().map(|i| batch_state(family, seed, i, &criteria, &opts)).collect());
    let stats = BatchStats::collect(family.name(), &criteria, &outcomes, args.margin_floor, args.per_state);
    let mut report = Report::new("batch").with_input("family", family.name()).with_input("n", args.n);
    report.seed = Some(seed);
    report.batch = Some(stats);
    Ok(finish(report, start, args.json, EXIT_OK))
}

fn matrix_pairs(m: &crate::numerics::CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect()
}

pub fn cmd_fnf(args: &FnfArgs) -> Result<Outcome> {
    let start = Instant::now();
    let rho = read_state(&args.state)?;
    let eps = args.fnf.fnf_eps.unwrap_or(0.0);
    let mut report = Report::new("fnf")
        .with_input("state", args.state.display().to_string())
        .with_input("dimA", rho.dim_a())
        .with_input("dimB", rho.dim_b());
    match to_fnf_regularized(&rho, eps, &args.fnf.options()) {
        Ok(f) => {
            report.fnf = Some(FnfEntry {
                summary: Some(crate::analysis::FnfSummary {
                    xi: f.xi.clone(),
                    iterations: f.iterations,
                    residual: f.residual,
                    epsilon: eps,
                }),
                filter_a: Some(matrix_pairs(&f.filter_a)),
                filter_b: Some(matrix_pairs(&f.filter_b)),
                error: None,
            });
            Ok(finish(report, start, args.json, EXIT_OK))
        }
        Err(e) => {
            let code = exit_code_for(&e);
            report.fnf = Some(FnfEntry { summary: None, filter_a: None, filter_b: None, error: Some(e.to_string()) });
            Ok(finish(report, start, args.json, code))
        }
    }
}

pub fn cmd_export(args: &ExportArgs) -> Result<Outcome> {
    let rho = if args.family.is_parametric() {
        let p = args.p.ok_or_else(|| Error::Validation(format!("family {} needs --p", args.family)))?;
        args.family.at(p)?
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        rng.set_stream(0);
        args.family.sample(&mut rng)?
    };
    let file = StateFile::from_density_matrix(&rho);
    match &args.out {
        Some(path) => {
            file.write(path)?;
            Ok(Outcome { report: None, stdout: String::new(), exit_code: EXIT_OK })
        }
        None => Ok(Outcome { report: None, stdout: file.to_canonical_string(), exit_code: EXIT_OK }),
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Fnf(a) => cmd_fnf(a),
        Command::Export(a) => cmd_export(a),
    }
}

/// Parses `args`, runs the command, prints its output and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            out.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_list_is_checked_against_dimensions() {
        assert!(resolve_criteria(&Some(vec![Criterion::CmcSdp]), (3, 3)).is_err());
        let got = resolve_criteria(&Some(vec![Criterion::Ppt, Criterion::Ppt, Criterion::Ccnr]), (3, 3)).unwrap();
        assert_eq!(got, vec![Criterion::Ppt, Criterion::Ccnr]);
    }

    #[test]
    fn batch_states_do_not_depend_on_workers() {
        let crit = [Criterion::Ppt, Criterion::Ccnr];
        let opts = AnalysisOptions::default();
        let a: Vec<_> = (0..8).map(|i| batch_state(StateFamily::Random(2, 2), 5, i, &crit, &opts)).collect();
        let b: Vec<_> = (0..8).rev().map(|i| batch_state(StateFamily::Random(2, 2), 5, i, &crit, &opts)).collect();
        let b: Vec<_> = b.into_iter().rev().collect();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }
}
