//! Formal differentiation: partial derivatives treating jet coordinates as
//! independent, and total derivatives D_mu feeding the horizontal structure.

use num::rational::BigRational;
use num::FromPrimitive;

use crate::context::{ChartId, Context, DerivRule};
use crate::symexpr::expr::{Atom, JetExpr, Term};
use crate::symexpr::ExprError;

/// Formal partial derivative with respect to a base or jet coordinate.
/// Linear, Leibniz, chain rule through registered function derivatives.
pub fn partial(ctx: &Context, e: &JetExpr, v: &Atom) -> Result<JetExpr, ExprError> {
    debug_assert!(matches!(v, Atom::Base { .. } | Atom::Jet { .. }));
    let mut out = JetExpr::zero();
    for term in e.terms() {
        out = out.add(&partial_term(ctx, term, v)?);
    }
    Ok(out.rewritten(ctx))
}

fn partial_term(ctx: &Context, term: &Term, v: &Atom) -> Result<JetExpr, ExprError> {
    let mut out = JetExpr::zero();
    for (k, (atom, pow)) in term.mono.factors().iter().enumerate() {
        let datom = d_atom(ctx, atom, v)?;
        if datom.is_zero() {
            continue;
        }
        // d(a^p)/dv = p * a^(p-1) * da/dv, times the remaining factors
        let mut rest = JetExpr::from_rational(term.coeff.clone());
        for (j, (a, p)) in term.mono.factors().iter().enumerate() {
            let q = if j == k { *p - 1 } else { *p };
            if q != 0 {
                rest = rest.mul(&JetExpr::atom(a.clone()).powi(q)?);
            }
        }
        let p_rat = BigRational::from_i32(*pow).expect("exponent fits");
        out = out.add(&rest.mul(&datom).scale(&p_rat));
    }
    Ok(out)
}

/// Derivative of a single atom with respect to `v`.
fn d_atom(ctx: &Context, atom: &Atom, v: &Atom) -> Result<JetExpr, ExprError> {
    if atom == v {
        return Ok(JetExpr::one());
    }
    match atom {
        Atom::Func { func, arg } => {
            let darg = partial(ctx, arg, v)?;
            if darg.is_zero() {
                return Ok(JetExpr::zero());
            }
            let rule = ctx
                .func_decl(*func)
                .deriv
                .ok_or_else(|| ExprError::NoDerivativeRule(ctx.func_decl(*func).name.clone()))?;
            let fprime = apply_deriv_rule(ctx, rule, arg)?;
            Ok(fprime.mul(&darg))
        }
        _ => Ok(JetExpr::zero()),
    }
}

fn apply_deriv_rule(ctx: &Context, rule: DerivRule, arg: &JetExpr) -> Result<JetExpr, ExprError> {
    let func = |name: &str| ctx.func_by_name(name).expect("builtin function");
    Ok(match rule {
        DerivRule::Sin => JetExpr::atom(Atom::Func { func: func("cos"), arg: Box::new(arg.clone()) }),
        DerivRule::Cos => {
            JetExpr::atom(Atom::Func { func: func("sin"), arg: Box::new(arg.clone()) }).neg()
        }
        DerivRule::Exp => JetExpr::atom(Atom::Func { func: func("exp"), arg: Box::new(arg.clone()) }),
        DerivRule::Log => arg.powi(-1)?,
    })
}

/// Total derivative D_mu = d/dx^mu + sum over jets u^a_{I mu} d/du^a_I.
/// Fails when the result would exceed the jet-order cap.
pub fn total_derivative(ctx: &Context, e: &JetExpr, chart: ChartId, mu: u8) -> Result<JetExpr, ExprError> {
    let mut out = partial(ctx, e, &Atom::Base { chart, coord: mu })?;
    let jets: Vec<_> = e
        .jet_atoms()
        .map(|(c, f, i)| (c, f, i.clone()))
        .collect();
    for (jchart, field, index) in jets {
        if jchart != chart {
            return Err(ExprError::ChartMismatch { expected: chart, found: jchart });
        }
        let v = Atom::Jet { chart: jchart, field, index: index.clone() };
        let de = partial(ctx, e, &v)?;
        if de.is_zero() {
            continue;
        }
        let up = index.extended(mu);
        if up.order() > ctx.jet_cap() {
            return Err(ExprError::JetOrderExceeded { required: up.order(), cap: ctx.jet_cap() });
        }
        let bumped = JetExpr::jet(jchart, field, up);
        out = out.add(&de.mul(&bumped));
    }
    Ok(out.rewritten(ctx))
}

/// D_I for a whole multi-index (applied in ascending order).
pub fn total_derivative_multi(
    ctx: &Context,
    e: &JetExpr,
    chart: ChartId,
    index: &crate::symexpr::MultiIndex,
) -> Result<JetExpr, ExprError> {
    let mut cur = e.clone();
    for &mu in index.indices() {
        cur = total_derivative(ctx, &cur, chart, mu)?;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{ChartId, FieldId};
    use crate::symexpr::{parse_expr, MultiIndex};

    fn ctx() -> std::sync::Arc<Context> {
        Context::builder(1, 4).chart("U0", &["t"]).field("u").build()
    }

    fn ctx2() -> std::sync::Arc<Context> {
        Context::builder(2, 4).chart("U0", &["t", "x"]).field("u").build()
    }

    #[test]
    fn partial_wrt_jet() {
        let ctx = ctx();
        let c = ChartId(0);
        let e = parse_expr(&ctx, "1/2*u_t^2", c).unwrap();
        let v = Atom::Jet { chart: c, field: FieldId(0), index: MultiIndex::new(vec![0]) };
        let d = partial(&ctx, &e, &v).unwrap();
        assert_eq!(d, parse_expr(&ctx, "u_t", c).unwrap());
    }

    #[test]
    fn partial_wrt_base() {
        let ctx = ctx();
        let c = ChartId(0);
        let e = parse_expr(&ctx, "t*u_t", c).unwrap();
        let d = partial(&ctx, &e, &Atom::Base { chart: c, coord: 0 }).unwrap();
        assert_eq!(d, parse_expr(&ctx, "u_t", c).unwrap());
    }

    #[test]
    fn partial_through_functions() {
        let ctx = ctx();
        let c = ChartId(0);
        let e = parse_expr(&ctx, "sin(t)*u", c).unwrap();
        let v = Atom::Jet { chart: c, field: FieldId(0), index: MultiIndex::empty() };
        assert_eq!(partial(&ctx, &e, &v).unwrap(), parse_expr(&ctx, "sin(t)", c).unwrap());
        let dt = partial(&ctx, &e, &Atom::Base { chart: c, coord: 0 }).unwrap();
        assert_eq!(dt, parse_expr(&ctx, "cos(t)*u", c).unwrap());
    }

    #[test]
    fn total_derivative_of_field() {
        let ctx = ctx();
        let c = ChartId(0);
        let e = parse_expr(&ctx, "u", c).unwrap();
        assert_eq!(total_derivative(&ctx, &e, c, 0).unwrap(), parse_expr(&ctx, "u_t", c).unwrap());
    }

    #[test]
    fn total_derivative_leibniz() {
        let ctx = ctx();
        let c = ChartId(0);
        let e = parse_expr(&ctx, "t*u_t", c).unwrap();
        assert_eq!(
            total_derivative(&ctx, &e, c, 0).unwrap(),
            parse_expr(&ctx, "u_t + t*u_tt", c).unwrap()
        );
    }

    #[test]
    fn total_derivatives_commute() {
        let ctx = ctx2();
        let c = ChartId(0);
        let e = parse_expr(&ctx, "u*u_x", c).unwrap();
        let tx = total_derivative(&ctx, &total_derivative(&ctx, &e, c, 0).unwrap(), c, 1).unwrap();
        let xt = total_derivative(&ctx, &total_derivative(&ctx, &e, c, 1).unwrap(), c, 0).unwrap();
        assert_eq!(tx, xt);
    }

    #[test]
    fn total_derivatives_commute_on_random_expressions() {
        let ctx = crate::testkit::ctx_2d(4);
        let mut rng = crate::testkit::rng(0x16);
        let c = ChartId(0);
        for _ in 0..50 {
            let opts = crate::testkit::ExprOpts { max_jet_order: 2, ..Default::default() };
            let e = crate::testkit::gen_expr(&mut rng, &ctx, c, opts);
            let xy = total_derivative(&ctx, &total_derivative(&ctx, &e, c, 0).unwrap(), c, 1).unwrap();
            let yx = total_derivative(&ctx, &total_derivative(&ctx, &e, c, 1).unwrap(), c, 0).unwrap();
            assert_eq!(xy, yx);
        }
    }

    #[test]
    fn jet_cap_exceeded_is_loud() {
        let ctx = Context::builder(1, 2).chart("U0", &["t"]).field("u").build();
        let c = ChartId(0);
        let e = parse_expr(&ctx, "u_tt", c).unwrap();
        let err = total_derivative(&ctx, &e, c, 0).unwrap_err();
        assert!(matches!(err, ExprError::JetOrderExceeded { required: 3, cap: 2 }));
    }
}
