//! Command dispatch and report assembly.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cech::{
    descend_with, evaluate_action, verify_lagrangian_cocycle, ActionError, ActionOptions, CechError,
    Convention, LagrangianCocycle,
};
use crate::report::{CheckEntry, CheckStatus, VerificationReport};
use crate::theorem::{
    on_shell_check, run_theorem1_with, universal_current, verify_prop1, OnShellOptions,
    TheoremError,
};
use crate::variational::VariationalError;

use super::ProblemFile;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Descend,
    EulerLagrange,
    Theorem1,
    Current,
    Action,
    OnShell,
    SignAudit,
}

impl Command {
    pub fn parse(name: &str) -> Option<Command> {
        Some(match name {
            "verify" => Command::Verify,
            "descend" => Command::Descend,
            "euler-lagrange" => Command::EulerLagrange,
            "theorem1" => Command::Theorem1,
            "current" => Command::Current,
            "action" => Command::Action,
            "on-shell" => Command::OnShell,
            "sign-audit" => Command::SignAudit,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Descend => "descend",
            Command::EulerLagrange => "euler-lagrange",
            Command::Theorem1 => "theorem1",
            Command::Current => "current",
            Command::Action => "action",
            Command::OnShell => "on-shell",
            Command::SignAudit => "sign-audit",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunFlags {
    pub quad_order: usize,
    pub quad_tol: f64,
    pub tol: f64,
    pub convention: Convention,
    /// Extends the primitive solver's polynomial degree bound beyond the
    /// default deg(target)+1.
    pub ansatz_degree: usize,
}

impl Default for RunFlags {
    fn default() -> Self {
        RunFlags {
            quad_order: 16,
            quad_tol: 1e-9,
            tol: 1e-8,
            convention: Convention::DeligneDegree,
            ansatz_degree: 0,
        }
    }
}

/// Exit statuses: 0 all-pass, 1 check failure, 2 input error, 3 solver
/// infeasibility.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportDocument {
    pub command: String,
    pub problem: String,
    pub dimension: usize,
    pub jet_order: usize,
    pub convention: String,
    pub checks: Vec<CheckEntry>,
    /// Named output values (rendered forms, numeric results).
    pub values: BTreeMap<String, serde_json::Value>,
    pub passed: bool,
    pub exit_code: i32,
    /// Wall-clock milliseconds; excluded from determinism comparisons.
    pub timing_ms: u128,
}

impl ReportDocument {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} on {} (n = {}, K = {}, convention {})\n",
            self.command, self.problem, self.dimension, self.jet_order, self.convention
        ));
        let report = VerificationReport { checks: self.checks.clone() };
        out.push_str(&report.render_text());
        for (k, v) in &self.values {
            match v {
                serde_json::Value::String(s) => out.push_str(&format!("  {k} = {s}\n")),
                other => out.push_str(&format!("  {k} = {other}\n")),
            }
        }
        out.push_str(&format!(
            "{} ({} checks, exit {})\n",
            if self.passed { "ALL CHECKS PASSED" } else { "CHECKS FAILED" },
            self.checks.len(),
            self.exit_code
        ));
        out
    }

    pub fn render_machine(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Exit classification for engine errors surfacing during a run.
fn classify(e: &TheoremError) -> i32 {
    match e {
        TheoremError::Recursion { .. } => 3,
        TheoremError::Variational(VariationalError::NoPrimitiveInAnsatz { .. }) => 3,
        TheoremError::Variational(VariationalError::AnsatzTooLarge(_)) => 3,
        TheoremError::Cech(CechError::Descent { .. }) => 3,
        TheoremError::SourceGluing { .. } | TheoremError::NotASolution { .. } => 1,
        _ => 2,
    }
}

fn classify_cech(e: &CechError) -> i32 {
    match e {
        CechError::Descent { .. } => 3,
        CechError::IntegralityFailure { .. } | CechError::NonConstantLevel { .. } => 1,
        _ => 2,
    }
}

fn classify_action(e: &ActionError) -> i32 {
    match e {
        ActionError::NonConvergent { .. } => 1,
        ActionError::Cech(inner) => classify_cech(inner),
        _ => 2,
    }
}

struct Outcome {
    checks: Vec<CheckEntry>,
    values: BTreeMap<String, serde_json::Value>,
    exit_override: Option<i32>,
}

/// Dispatches a command against a loaded problem. Engine errors are folded
/// into the report with the documented exit codes; this function only
/// returns `Err` for conditions equivalent to malformed input.
pub fn run(command: Command, problem: &ProblemFile, flags: &RunFlags) -> ReportDocument {
    let start = Instant::now();
    let outcome = dispatch(command, problem, flags);
    let passed = outcome.checks.iter().all(|c| c.status != CheckStatus::Fail);
    let exit_code = outcome.exit_override.unwrap_or(if passed { 0 } else { 1 });
    ReportDocument {
        command: command.name().into(),
        problem: problem.name.clone(),
        dimension: problem.ctx.dimension(),
        jet_order: problem.ctx.jet_cap(),
        convention: flags.convention.to_string(),
        checks: outcome.checks,
        values: outcome.values,
        passed: passed && exit_code == 0,
        exit_code,
        timing_ms: start.elapsed().as_millis(),
    }
}

fn fail_entry(name: &str, detail: String) -> CheckEntry {
    CheckEntry { name: name.into(), status: CheckStatus::Fail, residual: None, sign: None, detail }
}

fn info_entry(name: &str, detail: String) -> CheckEntry {
    CheckEntry { name: name.into(), status: CheckStatus::Info, residual: None, sign: None, detail }
}

/// The cocycle to operate on: precomputed components when the file ships
/// them, otherwise constructed by descent.
fn obtain_cocycle(
    problem: &ProblemFile,
    flags: &RunFlags,
    checks: &mut Vec<CheckEntry>,
) -> Result<LagrangianCocycle, i32> {
    if let Some(cocycle) = problem.precomputed_cocycle() {
        return Ok(cocycle);
    }
    match descend_with(
        &problem.ctx,
        &problem.cover,
        &problem.densities,
        &problem.period,
        flags.ansatz_degree,
    ) {
        Ok(cocycle) => {
            checks.push(info_entry(
                "cocycle_constructed",
                "no precomputed components in the problem file; descent solved them".into(),
            ));
            Ok(cocycle)
        }
        Err(e) => {
            checks.push(fail_entry("cocycle_construction", e.to_string()));
            Err(classify_cech(&e))
        }
    }
}

fn dispatch(command: Command, problem: &ProblemFile, flags: &RunFlags) -> Outcome {
    let ctx = &problem.ctx;
    let cover = &problem.cover;
    let mut checks = Vec::new();
    let mut values: BTreeMap<String, serde_json::Value> = BTreeMap::new();

    macro_rules! bail {
        ($code:expr) => {
            return Outcome { checks, values, exit_override: Some($code) }
        };
    }

    match command {
        Command::Verify => {
            let omega = match obtain_cocycle(problem, flags, &mut checks) {
                Ok(o) => o,
                Err(code) => bail!(code),
            };
            match verify_lagrangian_cocycle(ctx, cover, &omega, flags.convention) {
                Ok(report) => checks.extend(report.checks),
                Err(e) => {
                    checks.push(fail_entry("verify", e.to_string()));
                    bail!(classify_cech(&e));
                }
            }
        }
        Command::Descend => {
            match descend_with(ctx, cover, &problem.densities, &problem.period, flags.ansatz_degree) {
                Ok(omega) => {
                    for (q, component) in omega.omegas.iter().enumerate().skip(1) {
                        values.insert(
                            format!("omega^({q})"),
                            serde_json::Value::String(component.render(ctx)),
                        );
                    }
                    let levels: Vec<String> =
                        omega.c.entries().map(|(s, v)| format!("{s:?}: {v}")).collect();
                    values.insert(
                        "integer_level".into(),
                        serde_json::Value::String(if levels.is_empty() {
                            "0".into()
                        } else {
                            levels.join("; ")
                        }),
                    );
                    match verify_lagrangian_cocycle(ctx, cover, &omega, flags.convention) {
                        Ok(report) => checks.extend(report.checks),
                        Err(e) => {
                            checks.push(fail_entry("verify_after_descent", e.to_string()));
                            bail!(classify_cech(&e));
                        }
                    }
                }
                Err(e) => {
                    checks.push(fail_entry("descent", e.to_string()));
                    bail!(classify_cech(&e));
                }
            }
        }
        Command::EulerLagrange => {
            for i in 0..ctx.principal_count() {
                let density = problem.densities.value(&vec![i]);
                let chart_name = &ctx.chart(crate::context::ChartId(i)).name;
                match crate::variational::euler_lagrange(ctx, &density) {
                    Ok(source) => {
                        values.insert(
                            format!("source_form.{chart_name}"),
                            serde_json::Value::String(source.form().render(ctx)),
                        );
                        match crate::variational::source_decompose(ctx, &density) {
                            Ok(dec) => {
                                let agree = dec.source.form() == source.form();
                                checks.push(CheckEntry {
                                    name: format!("source_two_routes_{chart_name}"),
                                    status: if agree { CheckStatus::Pass } else { CheckStatus::Fail },
                                    residual: None,
                                    sign: None,
                                    detail: "integration by parts vs Euler operator".into(),
                                });
                                values.insert(
                                    format!("cartan_form.{chart_name}"),
                                    serde_json::Value::String(dec.cartan.render(ctx)),
                                );
                            }
                            Err(e) => checks.push(fail_entry(
                                &format!("source_decompose_{chart_name}"),
                                e.to_string(),
                            )),
                        }
                    }
                    Err(e) => {
                        checks.push(fail_entry(&format!("euler_lagrange_{chart_name}"), e.to_string()));
                        bail!(2);
                    }
                }
            }
        }
        Command::Theorem1 | Command::Current => {
            let omega = match obtain_cocycle(problem, flags, &mut checks) {
                Ok(o) => o,
                Err(code) => bail!(code),
            };
            let run = match run_theorem1_with(ctx, cover, &omega, flags.convention, flags.ansatz_degree) {
                Ok(run) => run,
                Err(e) => {
                    checks.push(fail_entry("theorem1", e.to_string()));
                    bail!(classify(&e));
                }
            };
            checks.extend(run.report.checks.clone());
            values.insert(
                "source_form".into(),
                serde_json::Value::String(run.source.representative(0).render(ctx)),
            );
            for (q, gamma) in run.cartan.gammas.iter().enumerate() {
                values.insert(
                    format!("cartan^({q})"),
                    serde_json::Value::String(gamma.render(ctx)),
                );
            }
            if command == Command::Current {
                match universal_current(ctx, &run.cartan) {
                    Ok(current) => {
                        for (q, theta) in current.thetas.iter().enumerate() {
                            values.insert(
                                format!("current^({q})"),
                                serde_json::Value::String(theta.render(ctx)),
                            );
                        }
                        match verify_prop1(
                            ctx,
                            cover,
                            &current,
                            &run.source,
                            &omega.period,
                            flags.convention,
                        ) {
                            Ok(report) => checks.extend(report.checks),
                            Err(e) => {
                                checks.push(fail_entry("current_identities", e.to_string()));
                                bail!(classify(&e));
                            }
                        }
                    }
                    Err(e) => {
                        checks.push(fail_entry("universal_current", e.to_string()));
                        bail!(classify(&e));
                    }
                }
            }
        }
        Command::Action => {
            let omega = match obtain_cocycle(problem, flags, &mut checks) {
                Ok(o) => o,
                Err(code) => bail!(code),
            };
            let Some(cycle) = &problem.cycle else {
                checks.push(fail_entry("action", "the problem file declares no cycle".into()));
                bail!(2);
            };
            let Some(fields) = &problem.field_assignment else {
                checks.push(fail_entry(
                    "action",
                    "the problem file declares no field_assignment".into(),
                ));
                bail!(2);
            };
            let opts = ActionOptions {
                quad_order: flags.quad_order,
                quad_tol: flags.quad_tol,
                seam_tol: flags.tol.min(1e-9),
            };
            match evaluate_action(ctx, cover, &omega, cycle, fields, &opts) {
                Ok(result) => {
                    checks.push(CheckEntry {
                        name: "quadrature_convergence".into(),
                        status: CheckStatus::Pass,
                        residual: Some(format!("{:.3e}", (result.value - result.coarse).abs())),
                        sign: None,
                        detail: format!(
                            "order {} with one refinement halving, tolerance {:.1e}",
                            result.quad_order, opts.quad_tol
                        ),
                    });
                    values.insert("action".into(), serde_json::json!(result.value));
                    values.insert("action_coarse_pass".into(), serde_json::json!(result.coarse));
                    values.insert(
                        "cell_integrals".into(),
                        serde_json::json!(result.cells),
                    );
                    values.insert("seam_terms".into(), serde_json::json!(result.seams));
                    if !result.corners.is_empty() {
                        values.insert("corner_terms".into(), serde_json::json!(result.corners));
                    }
                }
                Err(e) => {
                    checks.push(fail_entry("action", e.to_string()));
                    bail!(classify_action(&e));
                }
            }
        }
        Command::OnShell => {
            let omega = match obtain_cocycle(problem, flags, &mut checks) {
                Ok(o) => o,
                Err(code) => bail!(code),
            };
            let Some(cycle) = &problem.cycle else {
                checks.push(fail_entry("on_shell", "the problem file declares no cycle".into()));
                bail!(2);
            };
            let Some(sample) = &problem.solution_sample else {
                checks.push(fail_entry(
                    "on_shell",
                    "the problem file declares no solution_sample".into(),
                ));
                bail!(2);
            };
            let run = match run_theorem1_with(ctx, cover, &omega, flags.convention, flags.ansatz_degree) {
                Ok(run) => run,
                Err(e) => {
                    checks.push(fail_entry("theorem1", e.to_string()));
                    bail!(classify(&e));
                }
            };
            checks.extend(run.report.checks.clone());
            let opts = OnShellOptions {
                eq_tol: flags.tol,
                seam_tol: 1e-9,
                jacobi_tol: 1e-9,
                grid: 12,
            };
            match on_shell_check(ctx, cover, &run.source, cycle, sample, &opts) {
                Ok(report) => checks.extend(report.checks),
                Err(e) => {
                    checks.push(fail_entry("on_shell", e.to_string()));
                    bail!(classify(&e));
                }
            }
        }
        Command::SignAudit => {
            let omega = match obtain_cocycle(problem, flags, &mut checks) {
                Ok(o) => o,
                Err(code) => bail!(code),
            };
            let mut annihilating = Vec::new();
            for convention in [Convention::DeligneDegree, Convention::CechDegree] {
                match verify_lagrangian_cocycle(ctx, cover, &omega, convention) {
                    Ok(report) => {
                        let ok = report.passed();
                        if ok {
                            annihilating.push(convention.to_string());
                        }
                        checks.push(CheckEntry {
                            name: format!("convention_{convention}"),
                            status: CheckStatus::Info,
                            residual: None,
                            sign: None,
                            detail: if ok {
                                format!("{convention}: D(Omega) = 0")
                            } else {
                                let failing: Vec<&str> =
                                    report.failures().map(|c| c.name.as_str()).collect();
                                format!("{convention}: nonzero residuals in {}", failing.join(", "))
                            },
                        });
                    }
                    Err(e) => checks.push(fail_entry(&format!("convention_{convention}"), e.to_string())),
                }
            }
            values.insert(
                "annihilating_conventions".into(),
                serde_json::json!(annihilating),
            );
            values.insert(
                "engine_default".into(),
                serde_json::Value::String(Convention::DeligneDegree.to_string()),
            );
            let default_ok = annihilating.iter().any(|c| c == "deligne-degree");
            checks.push(CheckEntry {
                name: "default_convention_annihilates".into(),
                status: if default_ok { CheckStatus::Pass } else { CheckStatus::Fail },
                residual: None,
                sign: None,
                detail: "the engine default must close the cocycle".into(),
            });
        }
    }

    Outcome { checks, values, exit_override: None }
}
