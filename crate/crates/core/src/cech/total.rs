//! Total differentials of the Cech-Deligne double complex and of the full
//! triple complex (vertical x Deligne x Cech), plus the Lagrangian cocycle
//! and its verification.
//!
//! D = d + (-1)^p delta-check, with p the (shifted) Deligne degree of the
//! component by default; the Cech-degree exponent variant is kept behind
//! `Convention::CechDegree` for the sign audit. The triple differential is
//! Delta = d_v + (-1)^p d + (-1)^{p+q} delta-check with p the vertical and q
//! the Deligne degree.

use num::rational::BigRational;
use num::{One, Zero};

use crate::bicomplex::{d_h, d_v, LocalForm};
use crate::context::{ChartId, Context};
use crate::report::{CheckEntry, CheckStatus, VerificationReport};
use crate::symexpr::JetExpr;

use super::{cech_coboundary, int_coboundary, CechError, Cochain, Cover, IntCochain};

/// Which degree the (-1)^p exponent in D reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    /// p = shifted Deligne degree (integer level 0, r-form r+1). Default.
    DeligneDegree,
    /// p = Cech degree of the component.
    CechDegree,
}

impl Default for Convention {
    fn default() -> Self {
        Convention::DeligneDegree
    }
}

impl std::fmt::Display for Convention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Convention::DeligneDegree => write!(f, "deligne-degree"),
            Convention::CechDegree => write!(f, "cech-degree"),
        }
    }
}

/// Graded element of the total complex: form-valued pieces keyed by
/// (vertical p, horizontal q, Cech r) plus integer-level pieces keyed by r.
#[derive(Clone, Debug, Default)]
pub struct TotalElement {
    pub forms: Vec<Cochain>,
    pub ints: Vec<IntCochain>,
}

impl TotalElement {
    pub fn from_cochain(c: Cochain) -> Self {
        TotalElement { forms: vec![c], ints: vec![] }
    }

    pub fn is_zero(&self) -> bool {
        self.forms.iter().all(|c| c.is_zero()) && self.ints.iter().all(|c| c.is_zero())
    }

    fn push_form(&mut self, c: Cochain) -> Result<(), CechError> {
        if c.is_zero() {
            return Ok(());
        }
        for existing in &mut self.forms {
            if (existing.cech_degree, existing.p, existing.q) == (c.cech_degree, c.p, c.q) {
                *existing = existing.add(&c)?;
                return Ok(());
            }
        }
        self.forms.push(c);
        Ok(())
    }

    fn push_int(&mut self, c: IntCochain) {
        if c.is_zero() {
            return;
        }
        for existing in &mut self.ints {
            if existing.cech_degree == c.cech_degree {
                let mut merged = IntCochain::new(c.cech_degree);
                let simplices: std::collections::BTreeSet<_> = existing
                    .entries()
                    .map(|(s, _)| s.clone())
                    .chain(c.entries().map(|(s, _)| s.clone()))
                    .collect();
                for s in simplices {
                    merged.set(s.clone(), existing.value(&s) + c.value(&s));
                }
                *existing = merged;
                return;
            }
        }
        self.ints.push(c);
    }

    /// Human-readable description of the nonzero components.
    pub fn describe(&self, ctx: &Context) -> String {
        let mut parts = Vec::new();
        for c in &self.forms {
            if !c.is_zero() {
                parts.push(format!("(p={},q={},r={}): {}", c.p, c.q, c.cech_degree, c.render(ctx)));
            }
        }
        for c in &self.ints {
            if !c.is_zero() {
                let vals: Vec<String> =
                    c.entries().map(|(s, v)| format!("{s:?}: {v}")).collect();
                parts.push(format!("(int, r={}): {}", c.cech_degree, vals.join("; ")));
            }
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" | ")
        }
    }
}

fn delta_sign(convention: Convention, deligne_degree: usize, cech_degree: usize) -> i64 {
    let exp = match convention {
        Convention::DeligneDegree => deligne_degree,
        Convention::CechDegree => cech_degree,
    };
    if exp % 2 == 0 {
        1
    } else {
        -1
    }
}

/// The Cech-Deligne total differential D (vertical degree is inert).
pub fn total_d(
    ctx: &Context,
    cover: &Cover,
    x: &TotalElement,
    convention: Convention,
    period: &JetExpr,
) -> Result<TotalElement, CechError> {
    let n = ctx.dimension();
    let mut out = TotalElement::default();
    for c in &x.forms {
        // d part: de Rham differential on each value
        if c.q < n {
            let mut dc = Cochain::new(c.cech_degree, c.p, c.q + 1);
            for (s, v) in c.entries() {
                dc.set(s.clone(), d_h(ctx, v)?)?;
            }
            out.push_form(dc)?;
        }
        // delta-check part
        let sign = delta_sign(convention, c.q + 1, c.cech_degree);
        out.push_form(cech_coboundary(ctx, cover, c)?.scale_int(sign))?;
    }
    for m in &x.ints {
        // inclusion into functions: value * period as a (0,0)-form cochain
        let mut inc = Cochain::new(m.cech_degree, 0, 0);
        for (s, v) in m.entries() {
            let e = period.scale(v);
            inc.set(s.clone(), LocalForm::scalar(ChartId(s[0]), e))?;
        }
        out.push_form(inc)?;
        let sign = delta_sign(convention, 0, m.cech_degree);
        let mut cob = int_coboundary(cover, m);
        if sign < 0 {
            let mut neg = IntCochain::new(cob.cech_degree);
            for (s, v) in cob.entries() {
                neg.set(s.clone(), -v.clone());
            }
            cob = neg;
        }
        out.push_int(cob);
    }
    Ok(out)
}

/// The triple-complex total differential Delta.
pub fn total_delta(
    ctx: &Context,
    cover: &Cover,
    x: &TotalElement,
    period: &JetExpr,
) -> Result<TotalElement, CechError> {
    let n = ctx.dimension();
    let mut out = TotalElement::default();
    for c in &x.forms {
        let p = c.p;
        let q_deligne = c.q + 1;
        // vertical part, sign +1
        let mut vc = Cochain::new(c.cech_degree, c.p + 1, c.q);
        for (s, v) in c.entries() {
            vc.set(s.clone(), d_v(ctx, v)?)?;
        }
        out.push_form(vc)?;
        // horizontal part, sign (-1)^p
        if c.q < n {
            let mut dc = Cochain::new(c.cech_degree, c.p, c.q + 1);
            for (s, v) in c.entries() {
                dc.set(s.clone(), d_h(ctx, v)?)?;
            }
            out.push_form(dc.scale_int(if p % 2 == 0 { 1 } else { -1 }))?;
        }
        // Cech part, sign (-1)^{p+q}
        let sign = if (p + q_deligne) % 2 == 0 { 1 } else { -1 };
        out.push_form(cech_coboundary(ctx, cover, c)?.scale_int(sign))?;
    }
    for m in &x.ints {
        // vertical degree 0, Deligne degree 0: d = inclusion, delta-check +1
        let mut inc = Cochain::new(m.cech_degree, 0, 0);
        for (s, v) in m.entries() {
            inc.set(s.clone(), LocalForm::scalar(ChartId(s[0]), period.scale(v)))?;
        }
        out.push_form(inc)?;
        out.push_int(int_coboundary(cover, m));
    }
    Ok(out)
}

/// The total cocycle of local densities: components omega^(q) of bidegree
/// (0, n-q) at Cech degree q, an integer level on (n+2)-chart overlaps, and
/// the period normalizing the integrality check.
#[derive(Clone, Debug)]
pub struct LagrangianCocycle {
    /// omegas[q] = omega^(q), q = 0..=n.
    pub omegas: Vec<Cochain>,
    /// Integer level at Cech degree n+1.
    pub c: IntCochain,
    /// Constant expression; the integer level is detected after division by
    /// it (1 by default, 2*pi for angle-valued data).
    pub period: JetExpr,
}

impl LagrangianCocycle {
    pub fn to_total(&self) -> TotalElement {
        TotalElement { forms: self.omegas.clone(), ints: vec![self.c.clone()] }
    }
}

/// Checks the descent relations, the top-level integrality, and DOmega = 0.
/// Failures are report entries, never errors.
pub fn verify_lagrangian_cocycle(
    ctx: &Context,
    cover: &Cover,
    omega: &LagrangianCocycle,
    convention: Convention,
) -> Result<VerificationReport, CechError> {
    let n = ctx.dimension();
    let mut report = VerificationReport::new();

    for q in 0..n {
        // descent at step q: sign * delta-check omega^(q) = d omega^(q+1)
        let sign = descent_sign(convention, n, q);
        let lhs = cech_coboundary(ctx, cover, &omega.omegas[q])?.scale_int(sign);
        let mut rhs = Cochain::new(q + 1, 0, n - q);
        for (s, v) in omega.omegas[q + 1].entries() {
            rhs.set(s.clone(), d_h(ctx, v)?)?;
        }
        let residual = lhs.sub(&rhs)?;
        report.push(CheckEntry {
            name: format!("descent_q{q}"),
            status: if residual.is_zero() { CheckStatus::Pass } else { CheckStatus::Fail },
            residual: Some(residual.render(ctx)),
            sign: Some(sign as i32),
            detail: format!(
                "({sign:+}) * coboundary(omega^({q})) - d(omega^({})) over {}-simplices",
                q + 1,
                q + 1
            ),
        });
    }

    // top level: coboundary of omega^(n) must be the integer level * period
    let top = cech_coboundary(ctx, cover, &omega.omegas[n])?;
    let top_sign = top_level_sign(convention, n);
    for s in cover.simplices_of_degree(n + 1) {
        let v = top.value(&s);
        let declared = omega.c.value(&s);
        let expect = omega.period.scale(&declared).scale_int(top_sign);
        let scalar = v.coefficient(&crate::bicomplex::WedgeWord::scalar());
        let residual = scalar.sub(&expect);
        let (status, defect) = integrality_status(&scalar, &omega.period, &declared, top_sign);
        report.push(CheckEntry {
            name: format!("integrality_{s:?}"),
            status,
            residual: Some(residual.render(ctx)),
            sign: Some(top_sign as i32),
            detail: defect,
        });
    }

    // independent route: D applied to the whole cocycle
    let d_omega = total_d(ctx, cover, &omega.to_total(), convention, &omega.period)?;
    report.push(CheckEntry {
        name: "total_cocycle_closed".into(),
        status: if d_omega.is_zero() { CheckStatus::Pass } else { CheckStatus::Fail },
        residual: Some(d_omega.describe(ctx)),
        sign: None,
        detail: format!("D(Omega) with the {convention} convention"),
    });

    Ok(report)
}

/// Sign in the descent relation at step q for the given convention.
pub fn descent_sign(convention: Convention, n: usize, q: usize) -> i64 {
    match convention {
        Convention::DeligneDegree => {
            if (n - q) % 2 == 0 {
                1
            } else {
                -1
            }
        }
        Convention::CechDegree => {
            if (q + 1) % 2 == 0 {
                1
            } else {
                -1
            }
        }
    }
}

fn top_level_sign(convention: Convention, n: usize) -> i64 {
    match convention {
        Convention::DeligneDegree => 1,
        Convention::CechDegree => {
            if (n + 1) % 2 == 0 {
                1
            } else {
                -1
            }
        }
    }
}

/// Classifies the integrality of a constant coboundary value.
fn integrality_status(
    scalar: &JetExpr,
    period: &JetExpr,
    declared: &BigRational,
    top_sign: i64,
) -> (CheckStatus, String) {
    // the value must be rho * period with rho rational
    let rho = if scalar.is_zero() {
        Some(BigRational::zero())
    } else {
        ratio(scalar, period)
    };
    match rho {
        None => (CheckStatus::Fail, "coboundary is not a rational multiple of the period".into()),
        Some(rho) => {
            if !rho.denom().is_one() {
                return (CheckStatus::Fail, format!("defect {rho} is not an integer"));
            }
            let expected = declared * BigRational::from_integer(top_sign.into());
            if rho != expected {
                return (
                    CheckStatus::Fail,
                    format!("coboundary/period = {rho} does not match the declared level {declared}"),
                );
            }
            (CheckStatus::Pass, format!("level = {rho}"))
        }
    }
}

/// scalar / period when the quotient is an exact rational.
pub fn ratio(scalar: &JetExpr, period: &JetExpr) -> Option<BigRational> {
    if scalar.is_zero() {
        return Some(BigRational::zero());
    }
    let s = scalar.terms().first()?;
    let p = period.terms().first()?;
    let rho = &s.coeff / &p.coeff;
    let back = period.scale(&rho);
    if &back == scalar {
        Some(rho)
    } else {
        None
    }
}
