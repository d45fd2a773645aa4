//! Form syntax: `theta(u,[I])`, `dx(t)`, `du(u,[I])`, wedge `^`, scalar
//! coefficients in the expression grammar, e.g. `(u_t + t) * theta(u,[])`.
//! `du(...)` expands immediately into the contact basis.

use std::collections::BTreeMap;

use crate::context::{ChartId, Context};
use crate::symexpr::parse::{lex, parse_jet_args, Cursor, Tok};
use crate::symexpr::{ExprError, JetExpr};

use super::{raw_differential, FormError, LocalForm, ThetaGen, WedgeWord};

/// Sum of homogeneous components, used while parsing; a well formed form
/// collapses to a single component at the end.
#[derive(Clone, Debug, Default)]
struct Graded {
    parts: BTreeMap<(usize, usize), LocalForm>,
}

impl Graded {
    fn scalar(chart: ChartId, e: JetExpr) -> Self {
        let mut g = Graded::default();
        if !e.is_zero() {
            g.parts.insert((0, 0), LocalForm::scalar(chart, e));
        }
        g
    }

    fn form(f: LocalForm) -> Self {
        let mut g = Graded::default();
        if !f.is_zero() {
            let bd = f.bidegree();
            g.parts.insert((bd.p, bd.q), f);
        }
        g
    }

    fn add(&self, other: &Graded) -> Result<Graded, FormError> {
        let mut out = self.clone();
        for (k, f) in &other.parts {
            match out.parts.entry(*k) {
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert(f.clone());
                }
                std::collections::btree_map::Entry::Occupied(mut o) => {
                    let sum = o.get().add(f)?;
                    if sum.is_zero() {
                        o.remove();
                    } else {
                        *o.get_mut() = sum;
                    }
                }
            }
        }
        Ok(out)
    }

    fn neg(&self) -> Graded {
        Graded { parts: self.parts.iter().map(|(k, f)| (*k, f.neg())).collect() }
    }

    fn wedge(&self, ctx: &Context, other: &Graded) -> Result<Graded, FormError> {
        let mut out = Graded::default();
        for fa in self.parts.values() {
            for fb in other.parts.values() {
                // components pushed past horizontal degree n vanish
                if fa.bidegree().q + fb.bidegree().q > ctx.dimension() {
                    continue;
                }
                let w = fa.wedge(ctx, fb)?;
                out = out.add(&Graded::form(w))?;
            }
        }
        Ok(out)
    }

    fn scale(&self, e: &JetExpr) -> Graded {
        let mut out = Graded::default();
        for (k, f) in &self.parts {
            let s = f.scale_expr(e);
            if !s.is_zero() {
                out.parts.insert(*k, s);
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
enum Value {
    Scalar(JetExpr),
    Form(Graded),
}

/// Parses a form in the scope of `chart`. The result must be homogeneous;
/// a plain scalar expression parses as a (0,0)-form.
pub fn parse_form(ctx: &Context, text: &str, chart: ChartId) -> Result<LocalForm, FormError> {
    let toks = lex(text)?;
    let mut cur = Cursor::new(&toks, text.len());
    let v = parse_sum(ctx, &mut cur, chart)?;
    if !cur.at_end() {
        return Err(FormError::Expr(ExprError::Syntax {
            msg: "trailing input".into(),
            pos: cur.here(),
        }));
    }
    let graded = match v {
        Value::Scalar(e) => Graded::scalar(chart, e.rewritten(ctx)),
        Value::Form(g) => g,
    };
    match graded.parts.len() {
        0 => Ok(LocalForm::zero(chart, 0, 0)),
        1 => Ok(graded.parts.into_values().next().unwrap()),
        _ => {
            let degrees: Vec<String> =
                graded.parts.keys().map(|(p, q)| format!("({p},{q})")).collect();
            Err(FormError::Expr(ExprError::Syntax {
                msg: format!("form is not homogeneous: components of bidegree {}", degrees.join(", ")),
                pos: 0,
            }))
        }
    }
}

fn parse_sum(ctx: &Context, cur: &mut Cursor, chart: ChartId) -> Result<Value, FormError> {
    let mut acc = parse_product(ctx, cur, chart)?;
    loop {
        match cur.peek() {
            Some(Tok::Plus) => {
                cur.bump();
                let rhs = parse_product(ctx, cur, chart)?;
                acc = add_values(ctx, chart, acc, rhs)?;
            }
            Some(Tok::Minus) => {
                cur.bump();
                let rhs = neg_value(parse_product(ctx, cur, chart)?);
                acc = add_values(ctx, chart, acc, rhs)?;
            }
            _ => return Ok(acc),
        }
    }
}

fn add_values(ctx: &Context, chart: ChartId, a: Value, b: Value) -> Result<Value, FormError> {
    Ok(match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(x.add(&y)),
        (Value::Scalar(x), Value::Form(g)) | (Value::Form(g), Value::Scalar(x)) => {
            Value::Form(g.add(&Graded::scalar(chart, x.rewritten(ctx)))?)
        }
        (Value::Form(x), Value::Form(y)) => Value::Form(x.add(&y)?),
    })
}

fn neg_value(v: Value) -> Value {
    match v {
        Value::Scalar(e) => Value::Scalar(e.neg()),
        Value::Form(g) => Value::Form(g.neg()),
    }
}

fn parse_product(ctx: &Context, cur: &mut Cursor, chart: ChartId) -> Result<Value, FormError> {
    let mut acc = parse_unary(ctx, cur, chart)?;
    loop {
        match cur.peek() {
            Some(Tok::Star) => {
                cur.bump();
                let rhs = parse_unary(ctx, cur, chart)?;
                acc = mul_values(ctx, acc, rhs)?;
            }
            Some(Tok::Slash) => {
                cur.bump();
                let rhs = parse_unary(ctx, cur, chart)?;
                match (acc, rhs) {
                    (Value::Scalar(x), Value::Scalar(y)) => acc = Value::Scalar(x.div(&y)?),
                    (Value::Form(g), Value::Scalar(y)) => {
                        let inv = JetExpr::one().div(&y)?;
                        acc = Value::Form(g.scale(&inv));
                    }
                    _ => {
                        return Err(FormError::Expr(ExprError::Syntax {
                            msg: "cannot divide by a form".into(),
                            pos: cur.here(),
                        }))
                    }
                }
            }
            _ => return Ok(acc),
        }
    }
}

fn mul_values(ctx: &Context, a: Value, b: Value) -> Result<Value, FormError> {
    Ok(match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(x.mul(&y)),
        (Value::Scalar(x), Value::Form(g)) | (Value::Form(g), Value::Scalar(x)) => {
            Value::Form(g.scale(&x))
        }
        (Value::Form(x), Value::Form(y)) => Value::Form(x.wedge(ctx, &y)?),
    })
}

fn parse_unary(ctx: &Context, cur: &mut Cursor, chart: ChartId) -> Result<Value, FormError> {
    if matches!(cur.peek(), Some(Tok::Minus)) {
        cur.bump();
        return Ok(neg_value(parse_unary(ctx, cur, chart)?));
    }
    parse_power(ctx, cur, chart)
}

fn parse_power(ctx: &Context, cur: &mut Cursor, chart: ChartId) -> Result<Value, FormError> {
    let mut base = parse_atom(ctx, cur, chart)?;
    while matches!(cur.peek(), Some(Tok::Caret)) {
        cur.bump();
        match base {
            Value::Scalar(e) => {
                let k = parse_scalar_exponent(cur)?;
                base = Value::Scalar(e.powi(k)?);
            }
            Value::Form(g) => {
                // wedge product
                let rhs = parse_atom(ctx, cur, chart)?;
                let rhs = match rhs {
                    Value::Form(h) => h,
                    Value::Scalar(_) => {
                        return Err(FormError::Expr(ExprError::Syntax {
                            msg: "cannot raise a form to a power; `^` joins form factors".into(),
                            pos: cur.here(),
                        }))
                    }
                };
                base = Value::Form(g.wedge(ctx, &rhs)?);
            }
        }
    }
    Ok(base)
}

fn parse_scalar_exponent(cur: &mut Cursor) -> Result<i32, ExprError> {
    let pos = cur.here();
    let mut neg = false;
    let mut parens = false;
    if matches!(cur.peek(), Some(Tok::LParen)) {
        cur.bump();
        parens = true;
    }
    if matches!(cur.peek(), Some(Tok::Minus)) {
        cur.bump();
        neg = true;
    }
    let k = match cur.bump() {
        Some(Tok::Int(n)) => {
            use num::ToPrimitive;
            n.to_i32().ok_or(ExprError::Syntax { msg: "exponent too large".into(), pos })?
        }
        _ => return Err(ExprError::Syntax { msg: "expected integer exponent".into(), pos }),
    };
    if parens {
        cur.expect(&Tok::RParen, "`)` after exponent")?;
    }
    Ok(if neg { -k } else { k })
}

fn parse_atom(ctx: &Context, cur: &mut Cursor, chart: ChartId) -> Result<Value, FormError> {
    let pos = cur.here();
    match cur.bump().cloned() {
        Some(Tok::Int(n)) => {
            Ok(Value::Scalar(JetExpr::from_rational(num::rational::BigRational::from_integer(n))))
        }
        Some(Tok::LParen) => {
            let inner = parse_sum(ctx, cur, chart)?;
            cur.expect(&Tok::RParen, "`)`")?;
            Ok(inner)
        }
        Some(Tok::Ident(name)) => {
            if matches!(cur.peek(), Some(Tok::LParen)) {
                match name.as_str() {
                    "theta" => {
                        cur.bump();
                        let (field, index) = parse_jet_args(ctx, cur, chart)?;
                        if index.order() > ctx.jet_cap() {
                            return Err(FormError::Expr(ExprError::JetOrderExceeded {
                                required: index.order(),
                                cap: ctx.jet_cap(),
                            }));
                        }
                        let f = LocalForm::from_term(
                            ctx,
                            chart,
                            WedgeWord { thetas: vec![ThetaGen { field, index }], dxs: vec![] },
                            JetExpr::one(),
                        )?;
                        return Ok(Value::Form(Graded::form(f)));
                    }
                    "dx" => {
                        cur.bump();
                        let cpos = cur.here();
                        let coord = match cur.bump().cloned() {
                            Some(Tok::Ident(c)) => ctx
                                .coord_by_name(chart, &c)
                                .ok_or(ExprError::UndeclaredIdentifier { name: c, pos: cpos })?,
                            _ => {
                                return Err(FormError::Expr(ExprError::Syntax {
                                    msg: "expected coordinate name".into(),
                                    pos: cpos,
                                }))
                            }
                        };
                        cur.expect(&Tok::RParen, "`)` closing dx(...)")?;
                        let f = LocalForm::from_term(
                            ctx,
                            chart,
                            WedgeWord { thetas: vec![], dxs: vec![coord] },
                            JetExpr::one(),
                        )?;
                        return Ok(Value::Form(Graded::form(f)));
                    }
                    "du" => {
                        cur.bump();
                        let (field, index) = parse_jet_args(ctx, cur, chart)?;
                        let (contact, horizontal) = raw_differential(ctx, chart, field, &index)?;
                        let g = Graded::form(contact).add(&Graded::form(horizontal))?;
                        return Ok(Value::Form(g));
                    }
                    _ => {}
                }
            }
            // fall back to the scalar grammar for everything else
            cur.pos -= 1;
            let save = cur.pos;
            match parse_scalar_fragment(ctx, cur, chart) {
                Ok(e) => Ok(Value::Scalar(e)),
                Err(err) => {
                    cur.pos = save;
                    Err(FormError::Expr(err))
                }
            }
        }
        _ => Err(FormError::Expr(ExprError::Syntax { msg: "expected form or expression".into(), pos })),
    }
}

/// Parses one scalar atom (not a full sum) via the expression grammar.
fn parse_scalar_fragment(ctx: &Context, cur: &mut Cursor, chart: ChartId) -> Result<JetExpr, ExprError> {
    let pos = cur.here();
    match cur.bump().cloned() {
        Some(Tok::Ident(name)) => {
            if matches!(cur.peek(), Some(Tok::LParen)) {
                if name == "jet" {
                    cur.bump();
                    let (field, index) = parse_jet_args(ctx, cur, chart)?;
                    if index.order() > ctx.jet_cap() {
                        return Err(ExprError::JetOrderExceeded {
                            required: index.order(),
                            cap: ctx.jet_cap(),
                        });
                    }
                    return Ok(JetExpr::jet(chart, field, index));
                }
                if let Some(func) = ctx.func_by_name(&name) {
                    cur.bump();
                    // function arguments are scalar expressions
                    let arg = parse_scalar_sum(ctx, cur, chart)?;
                    cur.expect(&Tok::RParen, "`)` closing function argument")?;
                    return JetExpr::func(func, arg);
                }
                return Err(ExprError::UndeclaredIdentifier { name, pos });
            }
            crate::symexpr::parse::resolve_ident_pub(ctx, &name, chart, pos)
        }
        _ => Err(ExprError::Syntax { msg: "expected identifier".into(), pos }),
    }
}

/// Scalar sub-parser for function arguments inside form syntax.
fn parse_scalar_sum(ctx: &Context, cur: &mut Cursor, chart: ChartId) -> Result<JetExpr, ExprError> {
    crate::symexpr::parse::parse_sum_at(ctx, cur, chart)
}
