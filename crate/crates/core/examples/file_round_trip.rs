//! Writing a cocycle to JSON, reading it back, and running the `analyze`
//! subcommand on it in-process.

use dichotomy_kit::cli_io::{self, AnalyzeReport, CocycleFile};
use dichotomy_kit::cocycle::generate_example;
use dichotomy_kit::{ExampleKind, NormSequence, Result, Tolerances, Window};

pub struct Summary {
    pub exact: bool,
    pub exit_code: i32,
    pub report: AnalyzeReport,
}

pub fn run_example() -> Result<Summary> {
    let tol = Tolerances::default();
    let w = Window::symmetric(32);
    let c = generate_example(&ExampleKind::diagonal(0.5, 2.0), w)?.with_norms(NormSequence::exponential(w, 2, 0.02))?;

    let dir = std::env::temp_dir().join(format!("dichotomy-kit-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let input = dir.join("cocycle.json");
    let report = dir.join("report.json");
    cli_io::write_json(&input, &CocycleFile::from_cocycle(&c, serde_json::Value::Null))?;
    let back: CocycleFile = cli_io::read_json(&input)?;
    let exact = back.to_cocycle(&tol)? == c;
    println!("cocycle survives the file round trip exactly: {exact}");

    let args = ["dichotomy-kit", "analyze", "--input", input.to_str().unwrap(), "--report", report.to_str().unwrap()];
    let exit_code = cli_io::run(args);
    let parsed: AnalyzeReport = cli_io::read_json(&report)?;
    println!("analyze exited with {exit_code}; dichotomy = {}", parsed.dichotomy);
    std::fs::remove_dir_all(&dir)?;
    Ok(Summary { exact, exit_code, report: parsed })
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
