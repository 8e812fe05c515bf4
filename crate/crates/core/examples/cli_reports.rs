//! Drive the command-line layer in-process: export a state, analyze it and
//! print the JSON report.
//!
//! cargo run --example cli_reports

fn main() {
    let dir = std::env::temp_dir().join("covsep-example");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("werner.json");
    let p = path.to_str().unwrap();
    assert_eq!(covsep::cli::run(["covsep", "export", "--family", "werner", "--p", "0.5", "--out", p]), 0);
    let code = covsep::cli::run(["covsep", "analyze", "--state", p, "--criteria", "ppt,prop6,cmc-sdp", "--json"]);
    println!("exit code {code}");
}
