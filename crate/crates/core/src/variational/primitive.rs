//! Horizontal primitives by exact linear solving: given a d_h-exact form
//! eta of bidegree (p,q), find gamma of bidegree (p,q-1) with
//! d_h(gamma) = eta, over a finite ansatz (bounded jet order and polynomial
//! degree). Ties are broken deterministically: columns are ordered by the
//! canonical (word, monomial) order and free variables are set to zero.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::Zero;

use crate::bicomplex::{d_h, LocalForm, ThetaGen, WedgeWord};
use crate::context::{Context, FieldId};
use crate::symexpr::{Atom, JetExpr, Monomial};

use super::linsolve::{solve_dense, solve_sparse, SparseRow};
use super::VariationalError;

/// Search space for the primitive solver.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnsatzBounds {
    /// Coefficient polynomial degree cap.
    pub max_degree: usize,
    /// Jet-order cap for coefficient jets and contact generators.
    pub jet_order: usize,
}

impl AnsatzBounds {
    /// Default bounds for a target form: degree deg(eta)+1, jets up to the
    /// global cap.
    pub fn for_target(ctx: &Context, eta: &LocalForm) -> Self {
        AnsatzBounds { max_degree: eta.degree() + 1, jet_order: ctx.jet_cap() }
    }

    fn describe(&self) -> String {
        format!("degree <= {}, jet order <= {}", self.max_degree, self.jet_order)
    }
}

const SPARSE_COLUMN_GUARD: usize = 200_000;
const DENSE_COLUMN_GUARD: usize = 20_000;

/// Finds gamma with d_h(gamma) = eta inside the declared ansatz. Tries a
/// restricted atom alphabet first (atoms of eta plus one jet order), then
/// escalates to the full declared alphabet before giving up.
pub fn horizontal_primitive(ctx: &Context, eta: &LocalForm) -> Result<LocalForm, VariationalError> {
    let bounds = AnsatzBounds::for_target(ctx, eta);
    horizontal_primitive_with(ctx, eta, &bounds)
}

/// As `horizontal_primitive` with caller-supplied bounds.
pub fn horizontal_primitive_with(
    ctx: &Context,
    eta: &LocalForm,
    bounds: &AnsatzBounds,
) -> Result<LocalForm, VariationalError> {
    precheck(ctx, eta)?;
    let bd = eta.bidegree();
    if eta.is_zero() {
        return Ok(LocalForm::zero(eta.chart(), bd.p, bd.q - 1));
    }
    let restricted = build_basis(ctx, eta, bounds, true)?;
    if let Some(gamma) = try_solve_sparse(ctx, eta, &restricted)? {
        return Ok(gamma);
    }
    let full = build_basis(ctx, eta, bounds, false)?;
    if full.len() != restricted.len() {
        if let Some(gamma) = try_solve_sparse(ctx, eta, &full)? {
            return Ok(gamma);
        }
    }
    Err(VariationalError::NoPrimitiveInAnsatz { bounds: bounds.describe() })
}

/// Brute-force twin: one dense linear system over the full monomial basis,
/// no restricted first pass, no sparsity shortcuts. Test oracle only.
pub fn primitive_oracle(
    ctx: &Context,
    eta: &LocalForm,
    bounds: &AnsatzBounds,
) -> Result<LocalForm, VariationalError> {
    precheck(ctx, eta)?;
    let bd = eta.bidegree();
    if eta.is_zero() {
        return Ok(LocalForm::zero(eta.chart(), bd.p, bd.q - 1));
    }
    let basis = build_basis(ctx, eta, bounds, false)?;
    // order-K columns have images passing through order K+1 before
    // cancellation; relax the cap for the image computation only
    let relaxed = ctx.with_jet_cap(ctx.jet_cap() + 1);
    let ctx = relaxed.as_ref();
    if basis.len() > DENSE_COLUMN_GUARD {
        return Err(VariationalError::AnsatzTooLarge(basis.len()));
    }
    // assemble the dense matrix row space
    let mut row_index: BTreeMap<(WedgeWord, Monomial), usize> = BTreeMap::new();
    let mut images: Vec<Vec<((WedgeWord, Monomial), BigRational)>> = Vec::with_capacity(basis.len());
    for b in &basis {
        let form = basis_form(ctx, eta, b)?;
        let image = d_h(ctx, &form)?;
        let mut entries = Vec::new();
        for (word, coeff) in image.terms() {
            for term in coeff.terms() {
                let key = (word.clone(), term.mono.clone());
                let next = row_index.len();
                row_index.entry(key.clone()).or_insert(next);
                entries.push((key, term.coeff.clone()));
            }
        }
        images.push(entries);
    }
    let mut rhs_entries: Vec<((WedgeWord, Monomial), BigRational)> = Vec::new();
    for (word, coeff) in eta.terms() {
        for term in coeff.terms() {
            let key = (word.clone(), term.mono.clone());
            let next = row_index.len();
            row_index.entry(key.clone()).or_insert(next);
            rhs_entries.push((key, term.coeff.clone()));
        }
    }
    let nrows = row_index.len();
    let mut a = vec![vec![BigRational::zero(); basis.len()]; nrows];
    for (j, entries) in images.iter().enumerate() {
        for (key, v) in entries {
            a[row_index[key]][j] += v;
        }
    }
    let mut b = vec![BigRational::zero(); nrows];
    for (key, v) in &rhs_entries {
        b[row_index[key]] += v;
    }
    let x = solve_dense(a, b)
        .ok_or_else(|| VariationalError::NoPrimitiveInAnsatz { bounds: bounds.describe() })?;
    let gamma = assemble(ctx, eta, &basis, &x)?;
    confirm(ctx, eta, &gamma)
}

fn precheck(ctx: &Context, eta: &LocalForm) -> Result<(), VariationalError> {
    let bd = eta.bidegree();
    let n = ctx.dimension();
    if bd.q == 0 || bd.q > n {
        return Err(VariationalError::WrongBidegree(bd.p, bd.q));
    }
    if bd.q < n {
        let closed = d_h(ctx, eta)?;
        if !closed.is_zero() {
            return Err(VariationalError::NotClosed { residual: closed.render(ctx) });
        }
    }
    Ok(())
}

/// One ansatz column: a wedge word and a coefficient monomial.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct BasisElem {
    word: WedgeWord,
    mono: Monomial,
}

fn basis_form(ctx: &Context, eta: &LocalForm, b: &BasisElem) -> Result<LocalForm, VariationalError> {
    Ok(LocalForm::from_term(
        ctx,
        eta.chart(),
        b.word.clone(),
        JetExpr::from_term(BigRational::from_integer(1.into()), b.mono.clone()),
    )?)
}

fn try_solve_sparse(
    ctx: &Context,
    eta: &LocalForm,
    basis: &[BasisElem],
) -> Result<Option<LocalForm>, VariationalError> {
    if basis.len() > SPARSE_COLUMN_GUARD {
        return Err(VariationalError::AnsatzTooLarge(basis.len()));
    }
    let relaxed = ctx.with_jet_cap(ctx.jet_cap() + 1);
    let ctx = relaxed.as_ref();
    let mut row_index: BTreeMap<(WedgeWord, Monomial), usize> = BTreeMap::new();
    let mut cols: Vec<Vec<(usize, BigRational)>> = Vec::with_capacity(basis.len());
    for b in basis {
        let form = basis_form(ctx, eta, b)?;
        let image = d_h(ctx, &form)?;
        let mut entries = Vec::new();
        for (word, coeff) in image.terms() {
            for term in coeff.terms() {
                let key = (word.clone(), term.mono.clone());
                let next = row_index.len();
                let r = *row_index.entry(key).or_insert(next);
                entries.push((r, term.coeff.clone()));
            }
        }
        cols.push(entries);
    }
    let mut consistent = true;
    let mut rhs_rows: Vec<(usize, BigRational)> = Vec::new();
    for (word, coeff) in eta.terms() {
        for term in coeff.terms() {
            let key = (word.clone(), term.mono.clone());
            match row_index.get(&key) {
                Some(&r) => rhs_rows.push((r, term.coeff.clone())),
                None => {
                    // a target monomial no ansatz column can produce
                    consistent = false;
                }
            }
        }
    }
    if !consistent {
        return Ok(None);
    }
    let nrows = row_index.len();
    let mut rows: Vec<SparseRow> = vec![SparseRow::new(); nrows];
    for (j, entries) in cols.iter().enumerate() {
        for (r, v) in entries {
            let e = rows[*r].entry(j).or_insert_with(BigRational::zero);
            *e += v;
            if e.is_zero() {
                rows[*r].remove(&j);
            }
        }
    }
    let mut rhs = vec![BigRational::zero(); nrows];
    for (r, v) in rhs_rows {
        rhs[r] += v;
    }
    match solve_sparse(&rows, &rhs, basis.len()) {
        Some(x) => {
            let gamma = assemble(ctx, eta, basis, &x)?;
            Ok(Some(confirm(ctx, eta, &gamma)?))
        }
        None => Ok(None),
    }
}

fn assemble(
    ctx: &Context,
    eta: &LocalForm,
    basis: &[BasisElem],
    x: &[BigRational],
) -> Result<LocalForm, VariationalError> {
    let bd = eta.bidegree();
    let mut gamma = LocalForm::zero(eta.chart(), bd.p, bd.q - 1);
    for (b, v) in basis.iter().zip(x) {
        if v.is_zero() {
            continue;
        }
        let term = LocalForm::from_term(
            ctx,
            eta.chart(),
            b.word.clone(),
            JetExpr::from_term(v.clone(), b.mono.clone()),
        )?;
        gamma = gamma.add(&term)?;
    }
    Ok(gamma)
}

fn confirm(ctx: &Context, eta: &LocalForm, gamma: &LocalForm) -> Result<LocalForm, VariationalError> {
    let image = d_h(ctx, gamma)?;
    debug_assert_eq!(&image, eta, "solver returned a non-primitive");
    let _ = image;
    Ok(gamma.clone())
}

/// Enumerates ansatz columns for the (p, q-1) search space.
fn build_basis(
    ctx: &Context,
    eta: &LocalForm,
    bounds: &AnsatzBounds,
    restricted: bool,
) -> Result<Vec<BasisElem>, VariationalError> {
    let n = ctx.dimension();
    let chart = eta.chart();
    let bd = eta.bidegree();
    let jet_order = bounds.jet_order.min(ctx.jet_cap());

    // fields in scope
    let mut fields: Vec<FieldId> = Vec::new();
    if restricted {
        let mut seen = std::collections::BTreeSet::new();
        for (word, coeff) in eta.terms() {
            for t in &word.thetas {
                seen.insert(t.field);
            }
            for (_, f, _) in coeff.jet_atoms() {
                seen.insert(f);
            }
        }
        fields.extend(seen);
    } else {
        fields.extend((0..ctx.fields().len()).map(FieldId));
    }

    // scalar atom alphabet
    let mut scalar_atoms: Vec<Atom> = Vec::new();
    for mu in 0..n as u8 {
        scalar_atoms.push(Atom::Base { chart, coord: mu });
    }
    let jet_limit = if restricted {
        let maxjet = eta.max_jet_order();
        jet_order.min(maxjet + 1)
    } else {
        jet_order
    };
    for &field in &fields {
        for order in 0..=jet_limit {
            for index in crate::symexpr::all_multi_indices(n, order) {
                scalar_atoms.push(Atom::Jet { chart, field, index });
            }
        }
    }
    // opaque constant and function atoms present in the target (new function
    // symbols are never invented by the solver)
    let mut opaque: std::collections::BTreeSet<Atom> = std::collections::BTreeSet::new();
    for (_, coeff) in eta.terms() {
        for a in coeff.atoms() {
            if matches!(a, Atom::Const(_) | Atom::Func { .. }) {
                opaque.insert(a);
            }
        }
    }
    scalar_atoms.extend(opaque);
    scalar_atoms.sort();
    scalar_atoms.dedup();

    // theta alphabet
    let mut theta_gens: Vec<ThetaGen> = Vec::new();
    for &field in &fields {
        let limit = if restricted { jet_limit } else { jet_order };
        for order in 0..=limit {
            for index in crate::symexpr::all_multi_indices(n, order) {
                theta_gens.push(ThetaGen { field, index });
            }
        }
    }
    theta_gens.sort();
    theta_gens.dedup();

    let theta_words = combinations(&theta_gens, bd.p);
    let dx_all: Vec<u8> = (0..n as u8).collect();
    let dx_words = combinations(&dx_all, bd.q - 1);
    let monos = monomials_up_to(&scalar_atoms, bounds.max_degree);

    let mut basis = Vec::with_capacity(theta_words.len() * dx_words.len() * monos.len());
    for tw in &theta_words {
        for dw in &dx_words {
            let word = WedgeWord { thetas: tw.clone(), dxs: dw.clone() };
            for m in &monos {
                basis.push(BasisElem { word: word.clone(), mono: m.clone() });
            }
        }
    }
    basis.sort();
    Ok(basis)
}

fn combinations<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    fn rec<T: Clone>(items: &[T], k: usize, start: usize, cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if k == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k {
                break;
            }
            cur.push(items[i].clone());
            rec(items, k - 1, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::new(), &mut out);
    out
}

/// All monomials over the alphabet with total degree 0..=max_degree.
fn monomials_up_to(atoms: &[Atom], max_degree: usize) -> Vec<Monomial> {
    fn rec(
        atoms: &[Atom],
        at: usize,
        budget: usize,
        cur: &mut Vec<(Atom, i32)>,
        out: &mut Vec<Monomial>,
    ) {
        out.push(Monomial::from_factors(cur.clone()));
        if budget == 0 {
            return;
        }
        for i in at..atoms.len() {
            for p in 1..=budget {
                cur.push((atoms[i].clone(), p as i32));
                rec(atoms, i + 1, budget - p, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(atoms, 0, max_degree, &mut Vec::new(), &mut out);
    out.sort();
    out.dedup();
    out
}
