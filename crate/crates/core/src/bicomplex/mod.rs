//! The variational bicomplex over one chart: bigraded forms in the contact
//! basis, wedge product, horizontal differential `d_h`, and vertical
//! differential `d_v`.
//!
//! Sign conventions (locked by property tests, see `docs/conventions.md`):
//! the two differentials commute, d_h d_v = d_v d_h, and both square to zero.
//! All totalization signs downstream are carried by explicit (-1)^degree
//! factors, never by anticommutation. Concretely, on a monomial
//! `e * thetas ^ dxs`:
//!   d_h = sum_mu D_mu(e * thetas) ^ dx^mu   (dx^mu wedged on the right),
//!   d_v = sum_v  theta_v ^ (de/dv * thetas ^ dxs)  (theta on the left),
//! where D_mu is the total derivative acting on the coefficient and on each
//! contact generator by D_mu theta^a_I = theta^a_{I mu}. Equivalently
//! d_h(theta^a_I) = -dx^mu ^ theta^a_{I mu}.

mod diff;
pub mod parse;

pub use diff::{d_h, d_v, raw_differential};
pub use parse::parse_form;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::context::{ChartId, Context, FieldId};
use crate::symexpr::{ExprError, JetExpr, MultiIndex};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum FormError {
    #[error("forms live on different charts")]
    ChartMismatch,
    #[error("horizontal degree {q} exceeds the base dimension {n}")]
    DegreeOverflow { q: usize, n: usize },
    #[error("bidegrees do not match: ({0},{1}) vs ({2},{3})")]
    BidegreeMismatch(usize, usize, usize, usize),
    #[error("expected a form of bidegree ({0},{1})")]
    WrongBidegree(usize, usize),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Vertical (variational) and horizontal (form) degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bidegree {
    pub p: usize,
    pub q: usize,
}

impl Bidegree {
    pub fn total(&self) -> usize {
        self.p + self.q
    }
}

/// Contact generator theta^a_I.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThetaGen {
    pub field: FieldId,
    pub index: MultiIndex,
}

/// Canonically sorted wedge monomial: contact generators first, then
/// horizontal generators, each block strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct WedgeWord {
    pub thetas: Vec<ThetaGen>,
    pub dxs: Vec<u8>,
}

impl WedgeWord {
    pub fn scalar() -> Self {
        WedgeWord::default()
    }

    pub fn bidegree(&self) -> Bidegree {
        Bidegree { p: self.thetas.len(), q: self.dxs.len() }
    }
}

/// One generator in an unsorted wedge sequence.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Gen {
    Theta(ThetaGen),
    Dx(u8),
}

/// Sorts a generator sequence into a canonical word, tracking the sign of
/// the permutation. Returns `None` when a generator repeats.
pub fn sort_word(gens: Vec<Gen>) -> Option<(i8, WedgeWord)> {
    let mut sign = 1i8;
    let mut sorted: Vec<Gen> = Vec::with_capacity(gens.len());
    for g in gens {
        // insertion sort, counting crossings
        let mut at = sorted.len();
        while at > 0 {
            match sorted[at - 1].cmp(&g) {
                std::cmp::Ordering::Greater => {
                    sign = -sign;
                    at -= 1;
                }
                std::cmp::Ordering::Equal => return None,
                std::cmp::Ordering::Less => break,
            }
        }
        sorted.insert(at, g);
    }
    let mut word = WedgeWord::default();
    for g in sorted {
        match g {
            Gen::Theta(t) => word.thetas.push(t),
            Gen::Dx(mu) => word.dxs.push(mu),
        }
    }
    Some((sign, word))
}

/// Homogeneous bigraded local form on one chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalForm {
    chart: ChartId,
    p: usize,
    q: usize,
    terms: BTreeMap<WedgeWord, JetExpr>,
}

impl LocalForm {
    pub fn zero(chart: ChartId, p: usize, q: usize) -> Self {
        LocalForm { chart, p, q, terms: BTreeMap::new() }
    }

    pub fn scalar(chart: ChartId, e: JetExpr) -> Self {
        let mut f = LocalForm::zero(chart, 0, 0);
        if !e.is_zero() {
            f.terms.insert(WedgeWord::scalar(), e);
        }
        f
    }

    pub fn from_term(
        ctx: &Context,
        chart: ChartId,
        word: WedgeWord,
        coeff: JetExpr,
    ) -> Result<Self, FormError> {
        let bd = word.bidegree();
        if bd.q > ctx.dimension() {
            return Err(FormError::DegreeOverflow { q: bd.q, n: ctx.dimension() });
        }
        let mut f = LocalForm::zero(chart, bd.p, bd.q);
        f.accumulate(word, coeff);
        Ok(f)
    }

    pub fn chart(&self) -> ChartId {
        self.chart
    }

    pub fn bidegree(&self) -> Bidegree {
        Bidegree { p: self.p, q: self.q }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&WedgeWord, &JetExpr)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, word: &WedgeWord) -> JetExpr {
        self.terms.get(word).cloned().unwrap_or_else(JetExpr::zero)
    }

    /// Largest jet order among coefficients and contact generators.
    pub fn max_jet_order(&self) -> usize {
        self.terms
            .iter()
            .map(|(w, e)| {
                let gen_order = w.thetas.iter().map(|t| t.index.order()).max().unwrap_or(0);
                gen_order.max(e.max_jet_order())
            })
            .max()
            .unwrap_or(0)
    }

    /// Largest coefficient polynomial degree.
    pub fn degree(&self) -> usize {
        self.terms.values().map(|e| e.degree()).max().unwrap_or(0)
    }

    pub(crate) fn accumulate(&mut self, word: WedgeWord, coeff: JetExpr) {
        if coeff.is_zero() {
            return;
        }
        debug_assert_eq!(word.bidegree(), self.bidegree());
        match self.terms.entry(word) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().add(&coeff);
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    /// Addition; a zero form adopts the other operand's bidegree.
    pub fn add(&self, other: &LocalForm) -> Result<LocalForm, FormError> {
        if self.is_zero() && self.bidegree() != other.bidegree() {
            return Ok(other.clone());
        }
        if other.is_zero() && self.bidegree() != other.bidegree() {
            return Ok(self.clone());
        }
        if self.chart != other.chart && !self.is_zero() && !other.is_zero() {
            return Err(FormError::ChartMismatch);
        }
        if self.bidegree() != other.bidegree() {
            return Err(FormError::BidegreeMismatch(self.p, self.q, other.p, other.q));
        }
        let mut out = self.clone();
        for (w, e) in &other.terms {
            out.accumulate(w.clone(), e.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> LocalForm {
        LocalForm {
            chart: self.chart,
            p: self.p,
            q: self.q,
            terms: self.terms.iter().map(|(w, e)| (w.clone(), e.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &LocalForm) -> Result<LocalForm, FormError> {
        self.add(&other.neg())
    }

    pub fn scale_int(&self, k: i64) -> LocalForm {
        if k == 0 {
            return LocalForm::zero(self.chart, self.p, self.q);
        }
        LocalForm {
            chart: self.chart,
            p: self.p,
            q: self.q,
            terms: self.terms.iter().map(|(w, e)| (w.clone(), e.scale_int(k))).collect(),
        }
    }

    /// Multiplication by a scalar expression.
    pub fn scale_expr(&self, e: &JetExpr) -> LocalForm {
        let mut out = LocalForm::zero(self.chart, self.p, self.q);
        for (w, c) in &self.terms {
            out.accumulate(w.clone(), c.mul(e));
        }
        out
    }

    /// Graded wedge product; bidegrees add.
    pub fn wedge(&self, ctx: &Context, other: &LocalForm) -> Result<LocalForm, FormError> {
        if !self.is_zero() && !other.is_zero() && self.chart != other.chart {
            return Err(FormError::ChartMismatch);
        }
        let p = self.p + other.p;
        let q = self.q + other.q;
        if q > ctx.dimension() {
            return Err(FormError::DegreeOverflow { q, n: ctx.dimension() });
        }
        let mut out = LocalForm::zero(self.chart, p, q);
        for (wa, ea) in &self.terms {
            for (wb, eb) in &other.terms {
                let mut gens: Vec<Gen> = Vec::with_capacity(p + q);
                gens.extend(wa.thetas.iter().cloned().map(Gen::Theta));
                gens.extend(wa.dxs.iter().copied().map(Gen::Dx));
                gens.extend(wb.thetas.iter().cloned().map(Gen::Theta));
                gens.extend(wb.dxs.iter().copied().map(Gen::Dx));
                if let Some((sign, word)) = sort_word(gens) {
                    out.accumulate(word, ea.mul(eb).scale_int(sign as i64));
                }
            }
        }
        Ok(out)
    }

    /// Deterministic rendering; sorted monomials.
    pub fn render(&self, ctx: &Context) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut pieces: Vec<String> = Vec::new();
        for (w, e) in &self.terms {
            let mut factors: Vec<String> = Vec::new();
            let coeff = e.render(ctx);
            let coeff_is_one = coeff == "1";
            if w.thetas.is_empty() && w.dxs.is_empty() {
                factors.push(coeff);
            } else if !coeff_is_one {
                if e.terms().len() > 1 {
                    factors.push(format!("({coeff})"));
                } else {
                    factors.push(coeff);
                }
            }
            let mut gens: Vec<String> = Vec::new();
            for t in &w.thetas {
                let idx: Vec<&str> = t
                    .index
                    .indices()
                    .iter()
                    .map(|&mu| ctx.coord_name(self.chart, mu))
                    .collect();
                gens.push(format!("theta({},[{}])", ctx.field_name(t.field), idx.join(",")));
            }
            for &mu in &w.dxs {
                gens.push(format!("dx({})", ctx.coord_name(self.chart, mu)));
            }
            let gen_part = gens.join(" ^ ");
            if gen_part.is_empty() {
                pieces.push(factors.join(" * "));
            } else if factors.is_empty() {
                pieces.push(gen_part);
            } else {
                pieces.push(format!("{} * {}", factors.join(" * "), gen_part));
            }
        }
        pieces.join(" + ")
    }
}

#[cfg(test)]
mod tests;
