//! vardescent: multivalued Lagrangian cocycles over finite covers —
//! verification, descent, glued Euler-Lagrange source forms, universal
//! currents, and action evaluation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use vardescent_core::cech::Convention;
use vardescent_core::cli_io::{load_problem, run, Command, RunFlags};

#[derive(Parser)]
#[command(
    name = "vardescent",
    version,
    about = "Symbolic descent engine for local Lagrangian data on finite covers",
    after_help = "Commands:\n  \
        verify          check the descent relations and integrality of the cocycle\n  \
        descend         construct the correction components from the densities\n  \
        euler-lagrange  per-chart source and Cartan forms\n  \
        theorem1        glued source form, Cartan cochain, and every identity\n  \
        current         theorem1 plus the universal conserved current\n  \
        action          pair the cocycle with the fundamental cycle numerically\n  \
        on-shell        numeric checks of a closed-form solution sample\n  \
        sign-audit      report which total-differential convention closes the cocycle\n\n\
        Exit codes: 0 all checks pass, 1 check failure, 2 input error, 3 solver infeasibility."
)]
struct Cli {
    /// One of: verify, descend, euler-lagrange, theorem1, current, action,
    /// on-shell, sign-audit.
    command: String,
    /// Problem file (JSON; see docs/problem-schema.md).
    problem_file: PathBuf,
    /// Override the jet-order cap K declared by the problem file.
    #[arg(long, value_name = "K")]
    jet_order: Option<usize>,
    /// Gauss-Legendre order per cell for the action pairing.
    #[arg(long, value_name = "N", default_value_t = 16)]
    quad_order: usize,
    /// Relative quadrature convergence requirement.
    #[arg(long, value_name = "T", default_value_t = 1e-9)]
    quad_tol: f64,
    /// Numeric tolerance for on-shell residuals.
    #[arg(long, value_name = "T", default_value_t = 1e-8)]
    tol: f64,
    /// Extend the primitive solver's polynomial degree bound by this much.
    #[arg(long, value_name = "D", default_value_t = 0)]
    ansatz_degree: usize,
    /// Exponent convention of the total differential.
    #[arg(long, value_name = "C", default_value = "deligne-degree")]
    convention: String,
    /// Also write the machine-readable report to this file.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Output format on stdout.
    #[arg(long, value_name = "F", default_value = "text")]
    format: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let Some(command) = Command::parse(&cli.command) else {
        eprintln!(
            "error: unknown command `{}`; expected verify, descend, euler-lagrange, theorem1, \
             current, action, on-shell, or sign-audit",
            cli.command
        );
        return ExitCode::from(2);
    };
    let convention = match cli.convention.as_str() {
        "deligne-degree" => Convention::DeligneDegree,
        "cech-degree" => Convention::CechDegree,
        other => {
            eprintln!("error: unknown convention `{other}`; expected deligne-degree or cech-degree");
            return ExitCode::from(2);
        }
    };
    if cli.format != "text" && cli.format != "machine" {
        eprintln!("error: unknown format `{}`; expected text or machine", cli.format);
        return ExitCode::from(2);
    }

    let problem = match load_problem(&cli.problem_file, cli.jet_order) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let flags = RunFlags {
        quad_order: cli.quad_order,
        quad_tol: cli.quad_tol,
        tol: cli.tol,
        convention,
        ansatz_degree: cli.ansatz_degree,
    };
    let doc = run(command, &problem, &flags);

    match cli.format.as_str() {
        "machine" => println!("{}", doc.render_machine()),
        _ => print!("{}", doc.render_text()),
    }
    if let Some(path) = &cli.report {
        if let Err(e) = std::fs::write(path, doc.render_machine()) {
            eprintln!("error: cannot write report to {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    ExitCode::from(doc.exit_code.clamp(0, 255) as u8)
}
