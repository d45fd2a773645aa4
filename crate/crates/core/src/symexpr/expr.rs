//! Canonical-form expressions. A `JetExpr` is a sorted sum of terms, each a
//! rational coefficient times a sorted power product of atoms. All arithmetic
//! re-normalizes, so structural equality is semantic equality modulo the
//! registered rewrite rules.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::context::{ChartId, ConstId, Context, FieldId, FuncId};
use crate::symexpr::ExprError;

/// Symmetric multi-index over a chart's base coordinates, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn new(mut indices: Vec<u8>) -> Self {
        indices.sort_unstable();
        MultiIndex(indices)
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[u8] {
        &self.0
    }

    /// The multi-index with one more derivative in direction `mu`.
    pub fn extended(&self, mu: u8) -> Self {
        let mut v = self.0.clone();
        let pos = v.partition_point(|&x| x <= mu);
        v.insert(pos, mu);
        MultiIndex(v)
    }

    /// Removes one occurrence of the largest index; returns (rest, largest).
    pub fn split_largest(&self) -> Option<(Self, u8)> {
        let mut v = self.0.clone();
        let last = v.pop()?;
        Some((MultiIndex(v), last))
    }

    pub fn contains(&self, mu: u8) -> bool {
        self.0.binary_search(&mu).is_ok()
    }
}

/// A single multiplicand. The `Ord` derive fixes the canonical atom order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Base { chart: ChartId, coord: u8 },
    Jet { chart: ChartId, field: FieldId, index: MultiIndex },
    Const(ConstId),
    Func { func: FuncId, arg: Box<JetExpr> },
}

impl Atom {
    pub fn jet(chart: ChartId, field: FieldId, index: MultiIndex) -> Self {
        Atom::Jet { chart, field, index }
    }

    pub fn is_jet(&self) -> bool {
        matches!(self, Atom::Jet { .. })
    }

    /// Chart the atom is bound to, if any (constants are chart-free; function
    /// atoms report the chart of their argument).
    pub fn chart(&self) -> Option<ChartId> {
        match self {
            Atom::Base { chart, .. } | Atom::Jet { chart, .. } => Some(*chart),
            Atom::Const(_) => None,
            Atom::Func { arg, .. } => arg.chart(),
        }
    }
}

/// Power product of atoms; exponents are nonzero (negative allowed).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(Atom, i32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(a: Atom) -> Self {
        Monomial(vec![(a, 1)])
    }

    pub fn factors(&self) -> &[(Atom, i32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    /// Total polynomial degree (sum of positive exponents; function atoms
    /// count by their exponent, negative powers count zero).
    pub fn degree(&self) -> usize {
        self.0
            .iter()
            .map(|(_, p)| if *p > 0 { *p as usize } else { 0 })
            .sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out: Vec<(Atom, i32)> = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let p = self.0[i].1 + other.0[j].1;
                    if p != 0 {
                        out.push((self.0[i].0.clone(), p));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    fn powi(&self, k: i32) -> Monomial {
        if k == 0 {
            return Monomial::one();
        }
        Monomial(
            self.0
                .iter()
                .filter_map(|(a, p)| {
                    let q = p * k;
                    (q != 0).then(|| (a.clone(), q))
                })
                .collect(),
        )
    }

    /// Builds a monomial from arbitrary factors; sorts and merges powers.
    pub fn from_factors(factors: Vec<(Atom, i32)>) -> Monomial {
        let mut m = Monomial::one();
        for (a, p) in factors {
            if p != 0 {
                m = m.mul(&Monomial(vec![(a, p)]));
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub coeff: BigRational,
    pub mono: Monomial,
}

/// Expression in canonical normal form: terms sorted by monomial, no zero
/// coefficients, rewrite rules applied to a fixed point.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct JetExpr {
    terms: Vec<Term>,
}

pub(crate) fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl JetExpr {
    pub fn zero() -> Self {
        JetExpr { terms: Vec::new() }
    }

    pub fn one() -> Self {
        JetExpr::from_rational(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        JetExpr::from_rational(rat(n, 1))
    }

    pub fn from_rational(r: BigRational) -> Self {
        if r.is_zero() {
            return JetExpr::zero();
        }
        JetExpr { terms: vec![Term { coeff: r, mono: Monomial::one() }] }
    }

    pub fn atom(a: Atom) -> Self {
        JetExpr { terms: vec![Term { coeff: BigRational::one(), mono: Monomial::atom(a) }] }
    }

    /// Single-term expression.
    pub fn from_term(coeff: BigRational, mono: Monomial) -> Self {
        if coeff.is_zero() {
            return JetExpr::zero();
        }
        JetExpr { terms: vec![Term { coeff, mono }] }
    }

    pub fn base(chart: ChartId, coord: u8) -> Self {
        JetExpr::atom(Atom::Base { chart, coord })
    }

    pub fn jet(chart: ChartId, field: FieldId, index: MultiIndex) -> Self {
        JetExpr::atom(Atom::Jet { chart, field, index })
    }

    pub fn constant(id: ConstId) -> Self {
        JetExpr::atom(Atom::Const(id))
    }

    pub fn func(func: FuncId, arg: JetExpr) -> Result<Self, ExprError> {
        if arg.jet_atoms().next().is_some() {
            return Err(ExprError::FunctionArgNotBase);
        }
        Ok(JetExpr::atom(Atom::Func { func, arg: Box::new(arg) }))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// The rational value of a constant expression, if it is one.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 if self.terms[0].mono.is_one() => Some(self.terms[0].coeff.clone()),
            _ => None,
        }
    }

    /// Chart this expression is bound to, if it mentions any chart-bound atom.
    pub fn chart(&self) -> Option<ChartId> {
        self.terms
            .iter()
            .flat_map(|t| t.mono.factors())
            .find_map(|(a, _)| a.chart())
    }

    /// All distinct jet atoms occurring in the expression.
    pub fn jet_atoms(&self) -> impl Iterator<Item = (ChartId, FieldId, &MultiIndex)> {
        let mut seen = std::collections::BTreeSet::new();
        self.terms
            .iter()
            .flat_map(|t| t.mono.factors())
            .filter_map(move |(a, _)| match a {
                Atom::Jet { chart, field, index } if seen.insert((*chart, *field, index.clone())) => {
                    Some((*chart, *field, index))
                }
                _ => None,
            })
    }

    /// Largest jet order occurring (0 if no jets).
    pub fn max_jet_order(&self) -> usize {
        self.jet_atoms().map(|(_, _, i)| i.order()).max().unwrap_or(0)
    }

    /// All distinct atoms occurring in the expression.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = std::collections::BTreeSet::new();
        for t in &self.terms {
            for (a, _) in t.mono.factors() {
                out.insert(a.clone());
            }
        }
        out.into_iter().collect()
    }

    /// Total polynomial degree (max over terms).
    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| t.mono.degree()).max().unwrap_or(0)
    }

    fn from_terms_raw(mut terms: Vec<Term>) -> Self {
        terms.sort_by(|a, b| a.mono.cmp(&b.mono));
        let mut out: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match out.last_mut() {
                Some(last) if last.mono == t.mono => {
                    last.coeff += t.coeff;
                    if last.coeff.is_zero() {
                        out.pop();
                    }
                }
                _ => {
                    if !t.coeff.is_zero() {
                        out.push(t);
                    }
                }
            }
        }
        JetExpr { terms: out }
    }

    pub fn add(&self, other: &JetExpr) -> JetExpr {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        JetExpr::from_terms_raw(terms)
    }

    pub fn neg(&self) -> JetExpr {
        JetExpr {
            terms: self
                .terms
                .iter()
                .map(|t| Term { coeff: -t.coeff.clone(), mono: t.mono.clone() })
                .collect(),
        }
    }

    pub fn sub(&self, other: &JetExpr) -> JetExpr {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &JetExpr) -> JetExpr {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Term { coeff: &a.coeff * &b.coeff, mono: a.mono.mul(&b.mono) });
            }
        }
        JetExpr::from_terms_raw(terms)
    }

    pub fn scale(&self, r: &BigRational) -> JetExpr {
        if r.is_zero() {
            return JetExpr::zero();
        }
        JetExpr {
            terms: self
                .terms
                .iter()
                .map(|t| Term { coeff: &t.coeff * r, mono: t.mono.clone() })
                .collect(),
        }
    }

    pub fn scale_int(&self, k: i64) -> JetExpr {
        self.scale(&rat(k, 1))
    }

    /// Integer power. Negative exponents require a single-term base.
    pub fn powi(&self, k: i32) -> Result<JetExpr, ExprError> {
        if k == 0 {
            return Ok(JetExpr::one());
        }
        if k > 0 {
            let mut acc = self.clone();
            for _ in 1..k {
                acc = acc.mul(self);
            }
            return Ok(acc);
        }
        // negative power: invert a single term
        if self.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        if self.terms.len() != 1 {
            return Err(ExprError::NonMonomialDivisor);
        }
        let t = &self.terms[0];
        let inv = Term { coeff: t.coeff.recip(), mono: t.mono.powi(-1) };
        let base = JetExpr { terms: vec![inv] };
        base.powi(-k)
    }

    pub fn div(&self, other: &JetExpr) -> Result<JetExpr, ExprError> {
        Ok(self.mul(&other.powi(-1)?))
    }

    /// Applies the context's rewrite rules to a fixed point. Arithmetic does
    /// not rewrite on its own; normalization entry points (parser, calculus,
    /// substitution) call this before comparisons matter.
    pub fn rewritten(&self, ctx: &Context) -> JetExpr {
        let mut cur = self.clone();
        for _ in 0..10_000 {
            match rewrite_once(&cur, ctx) {
                Some(next) => cur = next,
                None => return cur,
            }
        }
        panic!("rewrite rules did not reach a fixed point");
    }
}

/// One rewrite step; `None` when already normal.
fn rewrite_once(e: &JetExpr, ctx: &Context) -> Option<JetExpr> {
    let sin = ctx.func_by_name("sin");
    let cos = ctx.func_by_name("cos");
    for (ti, term) in e.terms.iter().enumerate() {
        for (atom, pow) in term.mono.factors() {
            let replacement = match atom {
                Atom::Func { func, arg }
                    if ctx.rewrite_sin_squared && Some(*func) == sin && *pow >= 2 =>
                {
                    // sin(g)^2 -> 1 - cos(g)^2
                    let cosg = JetExpr::atom(Atom::Func {
                        func: cos.expect("cos is always declared"),
                        arg: arg.clone(),
                    });
                    Some((2u32, JetExpr::one().sub(&cosg.mul(&cosg))))
                }
                Atom::Const(c) => ctx
                    .const_decl(*c)
                    .power_rule
                    .as_ref()
                    .and_then(|(p, repl)| (*pow >= *p as i32).then(|| (*p, repl.clone()))),
                _ => None,
            };
            if let Some((used, repl)) = replacement {
                let mut rest_factors: Vec<(Atom, i32)> = Vec::new();
                for (a, p) in term.mono.factors() {
                    if a == atom {
                        let left = p - used as i32;
                        if left != 0 {
                            rest_factors.push((a.clone(), left));
                        }
                    } else {
                        rest_factors.push((a.clone(), *p));
                    }
                }
                let rest = JetExpr {
                    terms: vec![Term { coeff: term.coeff.clone(), mono: Monomial(rest_factors) }],
                };
                let mut others: Vec<Term> = e.terms.clone();
                others.remove(ti);
                let rebuilt = JetExpr { terms: others }.add(&rest.mul(&repl));
                return Some(rebuilt);
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// rendering

fn render_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl JetExpr {
    /// Deterministic rendering; `parse_expr(render(e)) == e`.
    pub fn render(&self, ctx: &Context) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, t) in self.terms.iter().enumerate() {
            let neg = t.coeff.is_negative();
            let mag = t.coeff.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut pieces: Vec<String> = Vec::new();
            if !mag.is_one() || t.mono.is_one() {
                pieces.push(render_rational(&mag));
            }
            for (a, p) in t.mono.factors() {
                let base = render_atom(a, ctx);
                if *p == 1 {
                    pieces.push(base);
                } else {
                    pieces.push(format!("{base}^{p}"));
                }
            }
            let _ = write!(out, "{}", pieces.join("*"));
        }
        out
    }
}

pub(crate) fn render_atom(a: &Atom, ctx: &Context) -> String {
    match a {
        Atom::Base { chart, coord } => ctx.coord_name(*chart, *coord).to_string(),
        Atom::Jet { chart, field, index } => render_jet(ctx, *chart, *field, index),
        Atom::Const(c) => ctx.const_decl(*c).name.clone(),
        Atom::Func { func, arg } => {
            format!("{}({})", ctx.func_decl(*func).name, arg.render(ctx))
        }
    }
}

pub(crate) fn render_jet(ctx: &Context, chart: ChartId, field: FieldId, index: &MultiIndex) -> String {
    let fname = ctx.field_name(field);
    if index.order() == 0 {
        return fname.to_string();
    }
    let coords = &ctx.chart(chart).coords;
    let all_single = index.indices().iter().all(|&mu| coords[mu as usize].len() == 1);
    if all_single && !fname.contains('_') {
        let suffix: String = index
            .indices()
            .iter()
            .map(|&mu| coords[mu as usize].chars().next().unwrap())
            .collect();
        format!("{fname}_{suffix}")
    } else {
        let list: Vec<&str> = index.indices().iter().map(|&mu| coords[mu as usize].as_str()).collect();
        format!("jet({},[{}])", fname, list.join(","))
    }
}
