//! Numeric on-shell checks: a closed-form solution sample is evaluated on
//! dense grids in every chart and on the overlap seams; the linearized
//! equations and the contracted second variation certify the conserved
//! current's closure on the solution locus.

use crate::bicomplex::WedgeWord;
use crate::cech::{Cell, CellDomain, Cover, FieldAssignment, FundamentalCycle, SeamGeom};
use crate::context::{ChartId, Context, FieldId};
use crate::report::{CheckEntry, CheckStatus, VerificationReport};
use crate::symexpr::{partial, Assignment, Atom, JetExpr};

use super::{SourceCochain, TheoremError};

/// Closed-form solution data: per-chart field expressions and a list of
/// per-chart variation expressions (Jacobi fields of the linearized
/// equations).
#[derive(Clone, Debug, Default)]
pub struct FieldSolutionSample {
    pub fields: FieldAssignment,
    pub jacobi: Vec<FieldAssignment>,
}

#[derive(Clone, Copy, Debug)]
pub struct OnShellOptions {
    /// |E_a| bound on chart grids.
    pub eq_tol: f64,
    /// Cross-chart agreement bound at seam samples.
    pub seam_tol: f64,
    /// Bound for linearized-equation residuals and contracted second
    /// variation.
    pub jacobi_tol: f64,
    /// Grid resolution per axis.
    pub grid: usize,
}

impl Default for OnShellOptions {
    fn default() -> Self {
        OnShellOptions { eq_tol: 1e-8, seam_tol: 1e-9, jacobi_tol: 1e-9, grid: 12 }
    }
}

fn grid_points(cell: &Cell, m: usize) -> Vec<Vec<f64>> {
    let steps = |a: f64, b: f64| -> Vec<f64> {
        (0..=m).map(|k| a + (b - a) * k as f64 / m as f64).collect()
    };
    match &cell.domain {
        CellDomain::Interval { lo, hi } => steps(*lo, *hi).into_iter().map(|t| vec![t]).collect(),
        CellDomain::Rect { lo, hi } => {
            let xs = steps(lo[0], hi[0]);
            let ys = steps(lo[1], hi[1]);
            let mut out = Vec::with_capacity(xs.len() * ys.len());
            for &x in &xs {
                for &y in &ys {
                    out.push(vec![x, y]);
                }
            }
            out
        }
        CellDomain::Triangle { verts } => {
            let mut out = Vec::new();
            for i in 0..=m {
                for j in 0..=(m - i) {
                    let (a, b) = (i as f64 / m as f64, j as f64 / m as f64);
                    let c = 1.0 - a - b;
                    out.push(vec![
                        c * verts[0][0] + a * verts[1][0] + b * verts[2][0],
                        c * verts[0][1] + a * verts[1][1] + b * verts[2][1],
                    ]);
                }
            }
            out
        }
    }
}

fn assignment_at(chart: ChartId, point: &[f64]) -> Assignment {
    let mut a = Assignment::new();
    for (mu, v) in point.iter().enumerate() {
        a.set_base(chart, mu as u8, *v);
    }
    a
}

/// Runs every on-shell check. A solution residual above `eq_tol` aborts with
/// `NotASolution`; the remaining checks land in the report.
pub fn on_shell_check(
    ctx: &Context,
    cover: &Cover,
    source: &SourceCochain,
    cycle: &FundamentalCycle,
    sample: &FieldSolutionSample,
    opts: &OnShellOptions,
) -> Result<VerificationReport, TheoremError> {
    let n = ctx.dimension();
    let mut report = VerificationReport::new();

    // per-chart E_a on dense grids
    let mut max_residual = 0.0f64;
    for i in 0..ctx.principal_count() {
        let chart = ChartId(i);
        let cells: Vec<&Cell> = cycle.cells.iter().filter(|c| c.chart == i).collect();
        if cells.is_empty() {
            continue;
        }
        let form = source.representative(i);
        for field in source_fields(&form) {
            let coeff = source_coefficient(&form, field, n);
            let e = sample.fields.prolong(ctx, &coeff)?;
            for cell in &cells {
                for point in grid_points(cell, opts.grid) {
                    let v = e
                        .eval_numeric(ctx, &assignment_at(chart, &point))
                        ?;
                    max_residual = max_residual.max(v.abs());
                    if v.abs() > opts.eq_tol {
                        return Err(TheoremError::NotASolution { chart: i, point, value: v.abs() });
                    }
                }
            }
        }
        report.push(CheckEntry {
            name: format!("equations_hold_chart{i}"),
            status: CheckStatus::Pass,
            residual: Some(format!("max |E| = {max_residual:.3e}")),
            sign: None,
            detail: format!("dense grid over {} cell(s), tolerance {:.1e}", cells.len(), opts.eq_tol),
        });
    }

    // seam agreement of E across overlaps: the zero loci glue
    for seam in &cycle.seams {
        let (i, j) = seam.pair;
        let Some(transition) = cover.transition(i, j) else { continue };
        let samples: Vec<Vec<f64>> = match &seam.geom {
            SeamGeom::Point(p) => vec![p.clone()],
            SeamGeom::Curve { param_chart, coords, lo, hi } => (0..=8)
                .map(|k| {
                    let r = lo + (hi - lo) * k as f64 / 8.0;
                    let mut pa = Assignment::new();
                    pa.set_base(*param_chart, 0, r);
                    coords
                        .iter()
                        .map(|c| c.eval_numeric(ctx, &pa).expect("curve evaluates"))
                        .collect()
                })
                .collect(),
        };
        let form_i = source.representative(i);
        let form_j = source.representative(j);
        let mut worst = 0.0f64;
        for point in samples {
            let a_i = assignment_at(ChartId(i), &point);
            let mut a_j = Assignment::new();
            for mu in 0..n {
                let xj = transition.forward[mu]
                    .eval_numeric(ctx, &a_i)
                    ?;
                a_j.set_base(ChartId(j), mu as u8, xj);
            }
            for field in source_fields(&form_i) {
                let e_i = sample
                    .fields
                    .prolong(ctx, &source_coefficient(&form_i, field, n))
                    ?;
                let e_j = sample
                    .fields
                    .prolong(ctx, &source_coefficient(&form_j, field, n))
                    ?;
                let vi = e_i.eval_numeric(ctx, &a_i)?;
                let vj = e_j.eval_numeric(ctx, &a_j)?;
                worst = worst.max((vi - vj).abs());
            }
        }
        report.push(CheckEntry {
            name: format!("zero_locus_glues_{:?}", vec![i, j]),
            status: if worst <= opts.seam_tol { CheckStatus::Pass } else { CheckStatus::Fail },
            residual: Some(format!("max seam disagreement {worst:.3e}")),
            sign: None,
            detail: format!("tolerance {:.1e}", opts.seam_tol),
        });
    }

    // linearized equations on the Jacobi fields
    for (k, xi) in sample.jacobi.iter().enumerate() {
        let mut worst = 0.0f64;
        for i in 0..ctx.principal_count() {
            let chart = ChartId(i);
            let cells: Vec<&Cell> = cycle.cells.iter().filter(|c| c.chart == i).collect();
            if cells.is_empty() {
                continue;
            }
            let form = source.representative(i);
            for field in source_fields(&form) {
                let coeff = source_coefficient(&form, field, n);
                let lin = linearized(ctx, &coeff, &sample.fields, xi, chart)?;
                for cell in &cells {
                    for point in grid_points(cell, opts.grid) {
                        let v = lin
                            .eval_numeric(ctx, &assignment_at(chart, &point))
                            ?;
                        worst = worst.max(v.abs());
                    }
                }
            }
        }
        report.push(CheckEntry {
            name: format!("jacobi_field_{k}_linearized"),
            status: if worst <= opts.jacobi_tol { CheckStatus::Pass } else { CheckStatus::Fail },
            residual: Some(format!("max |linearized E| = {worst:.3e}")),
            sign: None,
            detail: "variation satisfies the linearized equations".into(),
        });
    }

    // contracted second variation along Jacobi pairs: closure of the current
    // on the solution locus
    for a in 0..sample.jacobi.len() {
        for b in (a + 1)..sample.jacobi.len() {
            let xi = &sample.jacobi[a];
            let eta = &sample.jacobi[b];
            let mut worst = 0.0f64;
            for i in 0..ctx.principal_count() {
                let chart = ChartId(i);
                let cells: Vec<&Cell> = cycle.cells.iter().filter(|c| c.chart == i).collect();
                if cells.is_empty() {
                    continue;
                }
                let form = source.representative(i);
                let dva = crate::bicomplex::d_v(ctx, &form)?;
                let contracted = contract_pair(ctx, &dva, &sample.fields, xi, eta, chart)?;
                for cell in &cells {
                    for point in grid_points(cell, opts.grid) {
                        let v = contracted
                            .eval_numeric(ctx, &assignment_at(chart, &point))
                            ?;
                        worst = worst.max(v.abs());
                    }
                }
            }
            report.push(CheckEntry {
                name: format!("second_variation_contracted_{a}{b}"),
                status: if worst <= opts.jacobi_tol { CheckStatus::Pass } else { CheckStatus::Fail },
                residual: Some(format!("max |d_v a (xi,eta)| = {worst:.3e}")),
                sign: None,
                detail: "source variation contracted with a Jacobi pair vanishes on shell".into(),
            });
        }
    }

    Ok(report)
}

fn source_fields(form: &crate::bicomplex::LocalForm) -> Vec<FieldId> {
    let mut out: Vec<FieldId> = form.terms().map(|(w, _)| w.thetas[0].field).collect();
    out.sort();
    out.dedup();
    out
}

fn source_coefficient(form: &crate::bicomplex::LocalForm, field: FieldId, n: usize) -> JetExpr {
    let word = WedgeWord {
        thetas: vec![crate::bicomplex::ThetaGen {
            field,
            index: crate::symexpr::MultiIndex::empty(),
        }],
        dxs: (0..n as u8).collect(),
    };
    form.coefficient(&word)
}

/// Linearization of E along a variation: sum over jets of
/// (dE/du^b_J on the solution) * d^J xi^b, as a base-only expression.
fn linearized(
    ctx: &Context,
    e: &JetExpr,
    fields: &FieldAssignment,
    xi: &FieldAssignment,
    chart: ChartId,
) -> Result<JetExpr, TheoremError> {
    let mut out = JetExpr::zero();
    for (jc, jf, ji) in e.jet_atoms().map(|(c, f, i)| (c, f, i.clone())).collect::<Vec<_>>() {
        let de = partial(ctx, e, &Atom::Jet { chart: jc, field: jf, index: ji.clone() })
            ?;
        let de_on_shell = fields.prolong(ctx, &de)?;
        let xi_jet = xi.jet_expr(ctx, jf, chart, &ji)?;
        out = out.add(&de_on_shell.mul(&xi_jet));
    }
    Ok(out)
}

/// Contraction of a (2,n)-form with two vertical vectors given by closed-form
/// variations: theta_A ^ theta_B picks up xi_A eta_B - xi_B eta_A.
fn contract_pair(
    ctx: &Context,
    form: &crate::bicomplex::LocalForm,
    fields: &FieldAssignment,
    xi: &FieldAssignment,
    eta: &FieldAssignment,
    chart: ChartId,
) -> Result<JetExpr, TheoremError> {
    let mut out = JetExpr::zero();
    for (word, coeff) in form.terms() {
        debug_assert_eq!(word.thetas.len(), 2);
        let on_shell = fields.prolong(ctx, coeff)?;
        let ta = &word.thetas[0];
        let tb = &word.thetas[1];
        let xi_a = xi.jet_expr(ctx, ta.field, chart, &ta.index)?;
        let xi_b = xi.jet_expr(ctx, tb.field, chart, &tb.index)?;
        let eta_a = eta.jet_expr(ctx, ta.field, chart, &ta.index)?;
        let eta_b = eta.jet_expr(ctx, tb.field, chart, &tb.index)?;
        let pair = xi_a.mul(&eta_b).sub(&xi_b.mul(&eta_a));
        out = out.add(&on_shell.mul(&pair));
    }
    Ok(out)
}
