//! Executable form of the gluing theorem and the conserved-current
//! proposition: variation of a Lagrangian cocycle, cross-chart gluing of the
//! source forms, the descent recursion for the Cartan cochain, the universal
//! current, and the identities they satisfy — every one checked as an exact
//! symbolic residual.

pub mod onshell;

pub use onshell::{on_shell_check, FieldSolutionSample, OnShellOptions};

use thiserror::Error;

use crate::bicomplex::{d_h, d_v, FormError, LocalForm};
use crate::cech::{
    cech_coboundary, pullback_form, total_d, total_delta, CechError, Cochain, Convention, Cover,
    LagrangianCocycle, Simplex, TotalElement,
};
use crate::context::Context;
use crate::report::{CheckEntry, CheckStatus, VerificationReport};
use crate::symexpr::JetExpr;
use crate::variational::{
    euler_lagrange, horizontal_primitive_with, source_decompose, AnsatzBounds, VariationalError,
};

#[derive(Clone, Debug, Error)]
pub enum TheoremError {
    #[error("source forms do not glue on {simplex:?}: residual {residual}")]
    SourceGluing { simplex: Simplex, residual: String },
    #[error("Cartan recursion blocked at step {step} on {simplex:?}: {source}")]
    Recursion { step: usize, simplex: Simplex, source: VariationalError },
    #[error("solution sample fails the equations at chart {chart}, point {point:?}: |E| = {value}")]
    NotASolution { chart: usize, point: Vec<f64>, value: f64 },
    #[error("no domain to sample: the problem declares no cells for chart {0}")]
    NoSampleDomain(usize),
    #[error(transparent)]
    Cech(#[from] CechError),
    #[error(transparent)]
    Action(#[from] crate::cech::ActionError),
    #[error(transparent)]
    Expr(#[from] crate::symexpr::ExprError),
    #[error(transparent)]
    Variational(#[from] VariationalError),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// The glued source form: a 0-cochain of per-chart (1,n)-forms that agree
/// under prolonged pullback.
#[derive(Clone, Debug)]
pub struct SourceCochain {
    pub cochain: Cochain,
}

impl SourceCochain {
    pub fn representative(&self, chart: usize) -> LocalForm {
        self.cochain.value(&vec![chart])
    }
}

/// Cartan cochain: gamma^(q) of bidegree (1, n-1-q) at Cech degree q,
/// q = 0..n-1. The would-be top component vanishes identically and is not
/// stored.
#[derive(Clone, Debug)]
pub struct CartanCochain {
    pub gammas: Vec<Cochain>,
}

impl CartanCochain {
    pub fn to_total(&self) -> TotalElement {
        TotalElement { forms: self.gammas.clone(), ints: vec![] }
    }
}

/// Universal current: theta^(q) = d_v gamma^(q), bidegree (2, n-1-q).
#[derive(Clone, Debug)]
pub struct CurrentCochain {
    pub thetas: Vec<Cochain>,
}

impl CurrentCochain {
    pub fn to_total(&self) -> TotalElement {
        TotalElement { forms: self.thetas.clone(), ints: vec![] }
    }
}

#[derive(Clone, Debug)]
pub struct Theorem1Run {
    pub source: SourceCochain,
    pub cartan: CartanCochain,
    pub report: VerificationReport,
}

/// Decomposes every local density, checks that the source forms glue, builds
/// the Cartan cochain by the descent recursion, and verifies that the
/// variation of the whole cocycle is the source form plus a total
/// coboundary.
pub fn run_theorem1(
    ctx: &Context,
    cover: &Cover,
    omega: &LagrangianCocycle,
    convention: Convention,
) -> Result<Theorem1Run, TheoremError> {
    run_theorem1_with(ctx, cover, omega, convention, 0)
}

/// As `run_theorem1`, with the primitive-solver polynomial degree bound
/// extended by `extra_degree` beyond the default deg(target)+1.
pub fn run_theorem1_with(
    ctx: &Context,
    cover: &Cover,
    omega: &LagrangianCocycle,
    convention: Convention,
    extra_degree: usize,
) -> Result<Theorem1Run, TheoremError> {
    let n = ctx.dimension();
    let mut report = VerificationReport::new();

    // (0) the cocycle itself
    report.merge(crate::cech::verify_lagrangian_cocycle(ctx, cover, omega, convention)?);

    // (i) per-chart decomposition, with the Euler-operator route as an
    // independent check of the integration-by-parts route
    let nchart = ctx.principal_count();
    let mut sources = Cochain::new(0, 1, n);
    let mut gamma0 = Cochain::new(0, 1, n - 1);
    for i in 0..nchart {
        let density = omega.omegas[0].value(&vec![i]);
        let dec = source_decompose(ctx, &density)?;
        let euler = euler_lagrange(ctx, &density)?;
        let agree = dec.source.form() == euler.form();
        report.push(CheckEntry {
            name: format!("source_two_routes_chart{i}"),
            status: if agree { CheckStatus::Pass } else { CheckStatus::Fail },
            residual: Some(dec.source.form().sub(euler.form())?.render(ctx)),
            sign: None,
            detail: "integration by parts vs Euler operator".into(),
        });
        sources.set(vec![i], dec.source.form().clone())?;
        gamma0.set(vec![i], dec.cartan.clone())?;
    }

    // (ii) cross-chart gluing of the source forms and exactness of the
    // Cartan-form differences against the first correction component
    for s in cover.simplices_of_degree(1) {
        let (i, j) = (s[0], s[1]);
        let map = cover.pullback(j, i).expect("edge transition");
        let a_j = pullback_form(ctx, map, &sources.value(&vec![j]))?;
        let a_i = sources.value(&vec![i]);
        let residual = a_j.sub(&a_i)?;
        if !residual.is_zero() {
            return Err(TheoremError::SourceGluing {
                simplex: s.clone(),
                residual: residual.render(ctx),
            });
        }
        report.push(CheckEntry {
            name: format!("source_glues_{s:?}"),
            status: CheckStatus::Pass,
            residual: Some("0".into()),
            sign: None,
            detail: "pulled-back source form agrees across the overlap".into(),
        });

        // d gamma_j - d gamma_i = sign * d d_v omega^(1)_{ij}, sign = (-1)^n
        let sign = if n % 2 == 0 { 1 } else { -1 };
        let g_j = pullback_form(ctx, map, &gamma0.value(&vec![j]))?;
        let g_i = gamma0.value(&vec![i]);
        let w1 = omega.omegas[1].value(&s);
        let rhs = d_h(ctx, &d_v(ctx, &w1)?)?.scale_int(sign);
        let residual = d_h(ctx, &g_j.sub(&g_i)?)?.sub(&rhs)?;
        report.push(CheckEntry {
            name: format!("cartan_difference_exact_{s:?}"),
            status: if residual.is_zero() { CheckStatus::Pass } else { CheckStatus::Fail },
            residual: Some(residual.render(ctx)),
            sign: Some(sign as i32),
            detail: "differential of the Cartan-form difference matches the first correction".into(),
        });
    }

    // (iii) recursion: d gamma^(r) = d_v omega^(r) - (-1)^{n-r+1} cob(gamma^(r-1))
    let mut gammas = vec![gamma0];
    for r in 1..n {
        let sign = if (n - r + 1) % 2 == 0 { 1 } else { -1 };
        let cob = cech_coboundary(ctx, cover, &gammas[r - 1])?;
        let mut next = Cochain::new(r, 1, n - 1 - r);
        for simplex in cover.simplices_of_degree(r) {
            let w = omega.omegas[r].value(&simplex);
            let target = d_v(ctx, &w)?.sub(&cob.value(&simplex).scale_int(sign))?;
            if target.is_zero() {
                continue;
            }
            let bounds = AnsatzBounds {
                max_degree: target.degree() + 1 + extra_degree,
                jet_order: ctx.jet_cap(),
            };
            let gamma = horizontal_primitive_with(ctx, &target, &bounds).map_err(|source| {
                TheoremError::Recursion { step: r, simplex: simplex.clone(), source }
            })?;
            next.set(simplex, gamma)?;
        }
        report.push(CheckEntry {
            name: format!("recursion_r{r}"),
            status: CheckStatus::Pass,
            residual: Some("0".into()),
            sign: Some(sign as i32),
            detail: format!("solved d gamma^({r}) = d_v omega^({r}) - ({sign:+}) * coboundary(gamma^({}))", r - 1),
        });
        gammas.push(next);
    }

    // (iv) top step: d_v omega^(n) = - coboundary(gamma^(n-1)); the
    // opposite-sign variant is reported for audit
    let cob = cech_coboundary(ctx, cover, &gammas[n - 1])?;
    let mut dvn = Cochain::new(n, 1, 0);
    for (s, v) in omega.omegas[n].entries() {
        dvn.set(s.clone(), d_v(ctx, v)?)?;
    }
    // also cover simplices where omega^(n) is zero but the coboundary is not
    let main = dvn.add(&cob)?;
    let variant = dvn.sub(&cob)?;
    report.push(CheckEntry {
        name: "top_step".into(),
        status: if main.is_zero() { CheckStatus::Pass } else { CheckStatus::Fail },
        residual: Some(main.render(ctx)),
        sign: Some(-1),
        detail: "d_v omega^(n) + coboundary(gamma^(n-1)), the recursion sign at the last step; exact zero, no free constants".into(),
    });
    report.push(CheckEntry {
        name: "top_step_opposite_sign".into(),
        status: CheckStatus::Info,
        residual: Some(variant.render(ctx)),
        sign: Some(1),
        detail: "the unsigned variant of the last descent relation leaves this residual; the engine uses the signed form".into(),
    });

    // (v) the whole identity: d_v Omega - a - D Gamma = 0
    let cartan = CartanCochain { gammas };
    let mut dv_omega = TotalElement::default();
    for c in &omega.omegas {
        let mut dc = Cochain::new(c.cech_degree, 1, c.q);
        for (s, v) in c.entries() {
            dc.set(s.clone(), d_v(ctx, v)?)?;
        }
        dv_omega = merge_total(dv_omega, TotalElement::from_cochain(dc))?;
    }
    let d_gamma = total_d(ctx, cover, &cartan.to_total(), convention, &omega.period)?;
    let mut residual = sub_total(ctx, dv_omega, &TotalElement::from_cochain(sources.clone()))?;
    residual = sub_total(ctx, residual, &d_gamma)?;
    report.push(CheckEntry {
        name: "variation_decomposition".into(),
        status: if residual.is_zero() { CheckStatus::Pass } else { CheckStatus::Fail },
        residual: Some(residual.describe(ctx)),
        sign: None,
        detail: "d_v Omega - a - D Gamma across all components".into(),
    });

    Ok(Theorem1Run { source: SourceCochain { cochain: sources }, cartan, report })
}

fn merge_total(mut a: TotalElement, b: TotalElement) -> Result<TotalElement, TheoremError> {
    for c in b.forms {
        a = add_form(a, c)?;
    }
    for m in b.ints {
        a.ints.push(m);
    }
    Ok(a)
}

fn add_form(mut a: TotalElement, c: Cochain) -> Result<TotalElement, TheoremError> {
    if c.is_zero() {
        return Ok(a);
    }
    for existing in &mut a.forms {
        if (existing.cech_degree, existing.p, existing.q) == (c.cech_degree, c.p, c.q) {
            *existing = existing.add(&c)?;
            return Ok(a);
        }
    }
    a.forms.push(c);
    Ok(a)
}

fn sub_total(_ctx: &Context, a: TotalElement, b: &TotalElement) -> Result<TotalElement, TheoremError> {
    let mut out = a;
    for c in &b.forms {
        out = add_form(out, c.neg())?;
    }
    for m in &b.ints {
        let mut neg = crate::cech::IntCochain::new(m.cech_degree);
        for (s, v) in m.entries() {
            neg.set(s.clone(), -v.clone());
        }
        out.ints.push(neg);
    }
    Ok(out)
}

/// Theta^(q) = d_v gamma^(q).
pub fn universal_current(ctx: &Context, cartan: &CartanCochain) -> Result<CurrentCochain, TheoremError> {
    let mut thetas = Vec::with_capacity(cartan.gammas.len());
    for g in &cartan.gammas {
        let mut t = Cochain::new(g.cech_degree, g.p + 1, g.q);
        for (s, v) in g.entries() {
            t.set(s.clone(), d_v(ctx, v)?)?;
        }
        thetas.push(t);
    }
    Ok(CurrentCochain { thetas })
}

/// Current identities: d_v Theta = 0, D Theta = s * d_v a with one sign s,
/// the per-chart differential identity d theta^(0) = -d_v a, and the triple
/// total closure Delta Theta = s * d_v a.
pub fn verify_prop1(
    ctx: &Context,
    cover: &Cover,
    current: &CurrentCochain,
    source: &SourceCochain,
    period: &JetExpr,
    convention: Convention,
) -> Result<VerificationReport, TheoremError> {
    let n = ctx.dimension();
    let mut report = VerificationReport::new();

    // d_v Theta = 0 componentwise
    let mut all_zero = true;
    let mut residuals = Vec::new();
    for t in &current.thetas {
        for (s, v) in t.entries() {
            let dv = d_v(ctx, v)?;
            if !dv.is_zero() {
                all_zero = false;
                residuals.push(format!("{s:?}: {}", dv.render(ctx)));
            }
        }
    }
    report.push(CheckEntry {
        name: "current_vertically_closed".into(),
        status: if all_zero { CheckStatus::Pass } else { CheckStatus::Fail },
        residual: Some(if residuals.is_empty() { "0".into() } else { residuals.join("; ") }),
        sign: None,
        detail: "d_v Theta = 0".into(),
    });

    // d_v a as a 0-cochain of (2,n)-forms
    let nchart = ctx.principal_count();
    let mut dva = Cochain::new(0, 2, n);
    for i in 0..nchart {
        dva.set(vec![i], d_v(ctx, &source.cochain.value(&vec![i]))?)?;
    }

    // D Theta = s * d_v a for a single sign s
    let d_theta = total_d(ctx, cover, &current.to_total(), convention, period)?;
    let mut found_sign: Option<i64> = None;
    for s in [-1i64, 1] {
        let candidate = TotalElement::from_cochain(dva.scale_int(s));
        let residual = sub_total(ctx, d_theta.clone(), &candidate)?;
        if residual.is_zero() {
            found_sign = Some(s);
            break;
        }
    }
    match found_sign {
        Some(s) => report.push(CheckEntry {
            name: "current_total_differential".into(),
            status: CheckStatus::Pass,
            residual: Some("0".into()),
            sign: Some(s as i32),
            detail: format!("D Theta = ({s:+}) * d_v a, one sign across the corpus"),
        }),
        None => report.push(CheckEntry {
            name: "current_total_differential".into(),
            status: CheckStatus::Fail,
            residual: Some(d_theta.describe(ctx)),
            sign: None,
            detail: "neither sign matches D Theta against d_v a: convention bug".into(),
        }),
    }

    // per chart: d theta^(0) + d_v a = 0
    for i in 0..nchart {
        let theta0 = current.thetas[0].value(&vec![i]);
        let residual = d_h(ctx, &theta0)?.add(&dva.value(&vec![i]))?;
        report.push(CheckEntry {
            name: format!("current_differential_chart{i}"),
            status: if residual.is_zero() { CheckStatus::Pass } else { CheckStatus::Fail },
            residual: Some(residual.render(ctx)),
            sign: Some(-1),
            detail: "d theta^(0) = - d_v a on the chart".into(),
        });
    }

    // Delta Theta = s * d_v a
    let delta_theta = total_delta(ctx, cover, &current.to_total(), period)?;
    let s = found_sign.unwrap_or(-1);
    let residual = sub_total(ctx, delta_theta, &TotalElement::from_cochain(dva.scale_int(s)))?;
    report.push(CheckEntry {
        name: "current_globally_closed".into(),
        status: if residual.is_zero() { CheckStatus::Pass } else { CheckStatus::Fail },
        residual: Some(residual.describe(ctx)),
        sign: Some(s as i32),
        detail: "Delta Theta matches the source variation; closed on the solution locus".into(),
    });

    Ok(report)
}

#[cfg(test)]
mod tests;
