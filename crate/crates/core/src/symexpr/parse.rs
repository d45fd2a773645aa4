//! Expression grammar: infix `+ - * / ^`, integer literals (rationals are
//! written `p/q`), function application `f(expr)`, jet coordinates
//! `jet(field,[mu,...])` with shorthand `u_t`/`u_tt` for single-letter
//! coordinates, constants `pi` and declared names. Precedence:
//! `^` > unary minus > `* /` > `+ -`.

use num::bigint::BigInt;
use num::rational::BigRational;

use crate::context::{ChartId, Context};
use crate::symexpr::expr::{JetExpr, MultiIndex};
use crate::symexpr::ExprError;

/// Byte offset into the source text; reported in errors.
pub type ParsePosition = usize;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

#[derive(Clone, Debug)]
pub(crate) struct Lexed {
    pub tok: Tok,
    pub pos: ParsePosition,
}

pub(crate) fn lex(text: &str) -> Result<Vec<Lexed>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => { out.push(Lexed { tok: Tok::Plus, pos: i }); i += 1; }
            '-' => { out.push(Lexed { tok: Tok::Minus, pos: i }); i += 1; }
            '*' => { out.push(Lexed { tok: Tok::Star, pos: i }); i += 1; }
            '/' => { out.push(Lexed { tok: Tok::Slash, pos: i }); i += 1; }
            '^' => { out.push(Lexed { tok: Tok::Caret, pos: i }); i += 1; }
            '(' => { out.push(Lexed { tok: Tok::LParen, pos: i }); i += 1; }
            ')' => { out.push(Lexed { tok: Tok::RParen, pos: i }); i += 1; }
            '[' => { out.push(Lexed { tok: Tok::LBracket, pos: i }); i += 1; }
            ']' => { out.push(Lexed { tok: Tok::RBracket, pos: i }); i += 1; }
            ',' => { out.push(Lexed { tok: Tok::Comma, pos: i }); i += 1; }
            '.' => {
                return Err(ExprError::Syntax {
                    msg: "floating-point literals are not supported; use p/q rationals".into(),
                    pos: i,
                })
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    return Err(ExprError::Syntax {
                        msg: "floating-point literals are not supported; use p/q rationals".into(),
                        pos: i,
                    });
                }
                let n: BigInt = text[start..i].parse().expect("digits");
                out.push(Lexed { tok: Tok::Int(n), pos: start });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push(Lexed { tok: Tok::Ident(text[start..i].into()), pos: start });
            }
            other => {
                return Err(ExprError::Syntax { msg: format!("unexpected character `{other}`"), pos: i })
            }
        }
    }
    Ok(out)
}

pub(crate) struct Cursor<'a> {
    toks: &'a [Lexed],
    pub pos: usize,
    end: ParsePosition,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Lexed], text_len: usize) -> Self {
        Cursor { toks, pos: 0, end: text_len }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|l| &l.tok)
    }

    pub fn here(&self) -> ParsePosition {
        self.toks.get(self.pos).map(|l| l.pos).unwrap_or(self.end)
    }

    pub fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|l| &l.tok);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn expect(&mut self, want: &Tok, what: &str) -> Result<(), ExprError> {
        let pos = self.here();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            _ => Err(ExprError::Syntax { msg: format!("expected {what}"), pos }),
        }
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

/// Parses `text` in the scope of `chart`, returning the canonical normal form.
pub fn parse_expr(ctx: &Context, text: &str, chart: ChartId) -> Result<JetExpr, ExprError> {
    let toks = lex(text)?;
    let mut cur = Cursor::new(&toks, text.len());
    let e = parse_sum(ctx, &mut cur, chart)?;
    if !cur.at_end() {
        return Err(ExprError::Syntax { msg: "trailing input".into(), pos: cur.here() });
    }
    Ok(e.rewritten(ctx))
}

fn parse_sum(ctx: &Context, cur: &mut Cursor, chart: ChartId) -> Result<JetExpr, ExprError> {
    let mut acc = parse_product(ctx, cur, chart)?;
    loop {
        match cur.peek() {
            Some(Tok::Plus) => {
                cur.bump();
                acc = acc.add(&parse_product(ctx, cur, chart)?);
            }
            Some(Tok::Minus) => {
                cur.bump();
                acc = acc.sub(&parse_product(ctx, cur, chart)?);
            }
            _ => return Ok(acc),
        }
    }
}

fn parse_product(ctx: &Context, cur: &mut Cursor, chart: ChartId) -> Result<JetExpr, ExprError> {
    let mut acc = parse_unary(ctx, cur, chart)?;
    loop {
        match cur.peek() {
            Some(Tok::Star) => {
                cur.bump();
                acc = acc.mul(&parse_unary(ctx, cur, chart)?);
            }
            Some(Tok::Slash) => {
                cur.bump();
                let rhs = parse_unary(ctx, cur, chart)?;
                acc = acc.div(&rhs)?;
            }
            _ => return Ok(acc),
        }
    }
}

fn parse_unary(ctx: &Context, cur: &mut Cursor, chart: ChartId) -> Result<JetExpr, ExprError> {
    if matches!(cur.peek(), Some(Tok::Minus)) {
        cur.bump();
        return Ok(parse_unary(ctx, cur, chart)?.neg());
    }
    parse_power(ctx, cur, chart)
}

fn parse_power(ctx: &Context, cur: &mut Cursor, chart: ChartId) -> Result<JetExpr, ExprError> {
    let base = parse_atom(ctx, cur, chart)?;
    if matches!(cur.peek(), Some(Tok::Caret)) {
        cur.bump();
        let k = parse_exponent(cur)?;
        return base.powi(k);
    }
    Ok(base)
}

fn parse_exponent(cur: &mut Cursor) -> Result<i32, ExprError> {
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

fn parse_atom(ctx: &Context, cur: &mut Cursor, chart: ChartId) -> Result<JetExpr, ExprError> {
    let pos = cur.here();
    match cur.bump().cloned() {
        Some(Tok::Int(n)) => Ok(JetExpr::from_rational(BigRational::from_integer(n))),
        Some(Tok::LParen) => {
            let inner = parse_sum(ctx, cur, chart)?;
            cur.expect(&Tok::RParen, "`)`")?;
            Ok(inner)
        }
        Some(Tok::Ident(name)) => {
            if matches!(cur.peek(), Some(Tok::LParen)) {
                if name == "jet" {
                    cur.bump();
                    let (field, index) = parse_jet_args(ctx, cur, chart)?;
                    check_cap(ctx, index.order(), pos)?;
                    return Ok(JetExpr::jet(chart, field, index));
                }
                if let Some(func) = ctx.func_by_name(&name) {
                    cur.bump();
                    let arg = parse_sum(ctx, cur, chart)?;
                    cur.expect(&Tok::RParen, "`)` closing function argument")?;
                    return JetExpr::func(func, arg);
                }
                return Err(ExprError::UndeclaredIdentifier { name, pos });
            }
            resolve_ident(ctx, &name, chart, pos)
        }
        _ => Err(ExprError::Syntax { msg: "expected expression".into(), pos }),
    }
}

pub(crate) fn parse_jet_args(
    ctx: &Context,
    cur: &mut Cursor,
    chart: ChartId,
) -> Result<(crate::context::FieldId, MultiIndex), ExprError> {
    let pos = cur.here();
    let field_name = match cur.bump().cloned() {
        Some(Tok::Ident(n)) => n,
        _ => return Err(ExprError::Syntax { msg: "expected field name".into(), pos }),
    };
    let field = ctx
        .field_by_name(&field_name)
        .ok_or(ExprError::UndeclaredIdentifier { name: field_name, pos })?;
    cur.expect(&Tok::Comma, "`,` after field name")?;
    let index = parse_index_list(ctx, cur, chart)?;
    cur.expect(&Tok::RParen, "`)` closing jet(...)")?;
    Ok((field, index))
}

pub(crate) fn parse_index_list(
    ctx: &Context,
    cur: &mut Cursor,
    chart: ChartId,
) -> Result<MultiIndex, ExprError> {
    cur.expect(&Tok::LBracket, "`[`")?;
    let mut indices = Vec::new();
    if matches!(cur.peek(), Some(Tok::RBracket)) {
        cur.bump();
        return Ok(MultiIndex::empty());
    }
    loop {
        let pos = cur.here();
        match cur.bump().cloned() {
            Some(Tok::Ident(c)) => {
                let mu = ctx
                    .coord_by_name(chart, &c)
                    .ok_or(ExprError::UndeclaredIdentifier { name: c, pos })?;
                indices.push(mu);
            }
            _ => return Err(ExprError::Syntax { msg: "expected coordinate name".into(), pos }),
        }
        match cur.bump() {
            Some(Tok::Comma) => continue,
            Some(Tok::RBracket) => break,
            _ => return Err(ExprError::Syntax { msg: "expected `,` or `]`".into(), pos: cur.here() }),
        }
    }
    Ok(MultiIndex::new(indices))
}

/// Scalar sum entry usable from the form grammar.
pub(crate) fn parse_sum_at(ctx: &Context, cur: &mut Cursor, chart: ChartId) -> Result<JetExpr, ExprError> {
    parse_sum(ctx, cur, chart)
}

/// Identifier resolution entry usable from the form grammar.
pub(crate) fn resolve_ident_pub(
    ctx: &Context,
    name: &str,
    chart: ChartId,
    pos: ParsePosition,
) -> Result<JetExpr, ExprError> {
    resolve_ident(ctx, name, chart, pos)
}

fn check_cap(ctx: &Context, order: usize, _pos: ParsePosition) -> Result<(), ExprError> {
    if order > ctx.jet_cap() {
        return Err(ExprError::JetOrderExceeded { required: order, cap: ctx.jet_cap() });
    }
    Ok(())
}

/// Resolves a bare identifier: field (0-jet), base coordinate, constant, or
/// the `field_suffix` jet shorthand.
fn resolve_ident(
    ctx: &Context,
    name: &str,
    chart: ChartId,
    pos: ParsePosition,
) -> Result<JetExpr, ExprError> {
    if let Some(field) = ctx.field_by_name(name) {
        return Ok(JetExpr::jet(chart, field, MultiIndex::empty()));
    }
    if let Some(mu) = ctx.coord_by_name(chart, name) {
        return Ok(JetExpr::base(chart, mu));
    }
    if let Some(c) = ctx.const_by_name(name) {
        return Ok(JetExpr::constant(c));
    }
    // shorthand u_tt: field name, underscore, single-letter coordinates
    if let Some(underscore) = name.find('_') {
        let (fname, suffix) = name.split_at(underscore);
        let suffix = &suffix[1..];
        if let Some(field) = ctx.field_by_name(fname) {
            if !suffix.is_empty() {
                let mut indices = Vec::with_capacity(suffix.len());
                let mut ok = true;
                for ch in suffix.chars() {
                    match ctx.coord_by_name(chart, &ch.to_string()) {
                        Some(mu) => indices.push(mu),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    let index = MultiIndex::new(indices);
                    check_cap(ctx, index.order(), pos)?;
                    return Ok(JetExpr::jet(chart, field, index));
                }
            }
        }
    }
    Err(ExprError::UndeclaredIdentifier { name: name.into(), pos })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::Context;
    use crate::symexpr::expr::rat;

    fn ctx1() -> std::sync::Arc<Context> {
        Context::builder(1, 4)
            .chart("U0", &["t"])
            .chart("U1", &["t"])
            .field("u")
            .build()
    }

    #[test]
    fn literal_construction() {
        let ctx = ctx1();
        let c0 = ChartId(0);
        let e = parse_expr(&ctx, "1/2 * jet(u,[t])^2", c0).unwrap();
        let ut = JetExpr::jet(c0, crate::context::FieldId(0), MultiIndex::new(vec![0]));
        let expected = ut.mul(&ut).scale(&rat(1, 2));
        assert_eq!(e, expected);
    }

    #[test]
    fn multi_index_symmetry() {
        let ctx = Context::builder(2, 4)
            .chart("U0", &["t", "x"])
            .field("u")
            .build();
        let e = parse_expr(&ctx, "jet(u,[t,x]) - jet(u,[x,t])", ChartId(0)).unwrap();
        assert!(e.is_zero());
    }

    #[test]
    fn print_parse_round_trip() {
        let ctx = ctx1();
        let c0 = ChartId(0);
        for text in [
            "t * jet(u,[t])",
            "1/2*u_t^2 + t*u_t",
            "-u_tt - 1",
            "sin(t)*u + pi*u_t",
            "u_t^-2 + 3/4",
            "2*t^3 - u*u_t*u_tt",
        ] {
            let e = parse_expr(&ctx, text, c0).unwrap();
            let printed = e.render(&ctx);
            let back = parse_expr(&ctx, &printed, c0).unwrap();
            assert_eq!(e, back, "round trip failed for `{text}` -> `{printed}`");
        }
    }

    #[test]
    fn shorthand_matches_jet_form() {
        let ctx = ctx1();
        let a = parse_expr(&ctx, "u_tt", ChartId(0)).unwrap();
        let b = parse_expr(&ctx, "jet(u,[t,t])", ChartId(0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn undeclared_identifier_reports_position() {
        let ctx = ctx1();
        let err = parse_expr(&ctx, "t + wobble", ChartId(0)).unwrap_err();
        assert_eq!(err, ExprError::UndeclaredIdentifier { name: "wobble".into(), pos: 4 });
    }

    #[test]
    fn jet_order_cap_enforced() {
        let ctx = Context::builder(1, 2).chart("U0", &["t"]).field("u").build();
        let err = parse_expr(&ctx, "jet(u,[t,t,t])", ChartId(0)).unwrap_err();
        assert!(matches!(err, ExprError::JetOrderExceeded { required: 3, cap: 2 }));
    }

    #[test]
    fn float_literals_rejected() {
        let ctx = ctx1();
        let err = parse_expr(&ctx, "0.5*u_t", ChartId(0)).unwrap_err();
        assert!(matches!(err, ExprError::Syntax { .. }));
    }

    #[test]
    fn sin_squared_rewrites_to_cos() {
        let ctx = ctx1();
        let c0 = ChartId(0);
        let lhs = parse_expr(&ctx, "sin(t)^2 + cos(t)^2", c0).unwrap();
        assert_eq!(lhs, JetExpr::one());
        let cubic = parse_expr(&ctx, "sin(t)^3", c0).unwrap();
        let expanded = parse_expr(&ctx, "sin(t) - sin(t)*cos(t)^2", c0).unwrap();
        assert_eq!(cubic, expanded);
    }

    #[test]
    fn division_requires_single_term() {
        let ctx = ctx1();
        let err = parse_expr(&ctx, "1/(t + u)", ChartId(0)).unwrap_err();
        assert_eq!(err, ExprError::NonMonomialDivisor);
        let ok = parse_expr(&ctx, "u/t", ChartId(0)).unwrap();
        assert_eq!(ok, parse_expr(&ctx, "u * t^-1", ChartId(0)).unwrap());
    }
}
