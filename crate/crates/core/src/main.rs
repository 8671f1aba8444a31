use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use heatframe::parser::{parse_statement, Commonsense};
use heatframe::report::{build_report, failure_report, solve_problem, write_outputs, DefectEntry, RunOptions, SolutionReport};
use heatframe::template::assemble_template;

/// Environment variable overriding the default output directory.
const OUT_ENV: &str = "HEATFRAME_OUT";
const DEFAULT_OUT: &str = "heatframe-out";

const EXIT_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "heatframe", version, about = "Solve controlled-English steady heat conduction problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem statement and write report.json plus SVG figures.
    Solve {
        file: PathBuf,
        /// Run the adaptive finite element solver on generalized walls.
        #[arg(long)]
        fe: bool,
        /// Relative tolerance for both the QoI and energy estimates.
        #[arg(long, value_name = "REL")]
        tol: Option<f64>,
        /// Maximum number of finite element dofs.
        #[arg(long, value_name = "N")]
        max_dofs: Option<usize>,
        /// Dörfler marking fraction.
        #[arg(long, value_name = "THETA")]
        marking_fraction: Option<f64>,
        /// Commonsense database replacing the bundled one.
        #[arg(long, value_name = "PATH")]
        commonsense: Option<PathBuf>,
        /// Output directory (overrides HEATFRAME_OUT).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Print the JSON report to stdout and write no files.
        #[arg(long)]
        json_only: bool,
        /// Include per-stage wall-clock timings in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Parse a statement and print the frame and PDE template as JSON.
    Parse {
        file: PathBuf,
        #[arg(long, value_name = "PATH")]
        commonsense: Option<PathBuf>,
    },
}

fn load_commonsense(path: Option<&Path>) -> Result<Commonsense, String> {
    match path {
        None => Ok(Commonsense::bundled()),
        Some(p) => {
            let src = std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            Commonsense::parse(&src).map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}

fn problem_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

fn print_defects(report: &SolutionReport) {
    for DefectEntry { stage, kind, message, sentence } in &report.defects {
        match sentence {
            Some(s) => eprintln!("{stage}: {kind} (sentence {s}): {message}"),
            None => eprintln!("{stage}: {kind}: {message}"),
        }
    }
}

fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    file: &Path,
    fe: bool,
    tol: Option<f64>,
    max_dofs: Option<usize>,
    marking_fraction: Option<f64>,
    commonsense: Option<&Path>,
    out: Option<PathBuf>,
    json_only: bool,
    timing: bool,
) -> Result<u8, String> {
    let src = std::fs::read_to_string(file).map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let commonsense = load_commonsense(commonsense)?;
    let mut opts = RunOptions { fe, ..RunOptions::default() };
    if let Some(t) = tol {
        opts.adaptive.tol_qoi = t;
        opts.adaptive.tol_energy = t;
    }
    if let Some(n) = max_dofs {
        opts.adaptive.max_dofs = n;
    }
    if let Some(theta) = marking_fraction {
        opts.adaptive.marking_fraction = theta;
    }
    let name = problem_name(file);
    let report = match solve_problem(&src, &name, &commonsense, &opts) {
        Ok(outcome) => {
            if json_only {
                build_report(&outcome, Vec::new(), timing)
            } else {
                let dir = output_dir(out);
                let report =
                    write_outputs(&outcome, &dir, timing).map_err(|e| format!("cannot write to {}: {e}", dir.display()))?;
                eprintln!("wrote {}", dir.join("report.json").display());
                report
            }
        }
        Err(failure) => failure_report(&name, &failure),
    };
    print!("{}", report.to_json());
    print_defects(&report);
    Ok(match report.status.as_str() {
        "ok" => 0,
        "partial" => EXIT_PARTIAL,
        _ => EXIT_ERROR,
    })
}

fn cmd_parse(file: &Path, commonsense: Option<&Path>) -> Result<u8, String> {
    let src = std::fs::read_to_string(file).map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let commonsense = load_commonsense(commonsense)?;
    let frame = parse_statement(&src, &problem_name(file), &commonsense).map_err(|e| e.to_string())?;
    let template = assemble_template(&frame).map_err(|e| e.to_string())?;
    let json = serde_json::json!({ "frame": frame, "template": template });
    println!("{}", serde_json::to_string_pretty(&json).expect("frame serializes"));
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { file, fe, tol, max_dofs, marking_fraction, commonsense, out, json_only, timing } => {
            cmd_solve(&file, fe, tol, max_dofs, marking_fraction, commonsense.as_deref(), out, json_only, timing)
        }
        Command::Parse { file, commonsense } => cmd_parse(&file, commonsense.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
