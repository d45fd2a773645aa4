//! Constructive consequences of horizontal exactness at bounded jet order:
//! Euler-Lagrange source forms, the unique source + exact decomposition via
//! structural integration by parts, and linear-solve horizontal primitives
//! with a brute-force oracle twin.

pub mod linsolve;
mod primitive;

pub use primitive::{horizontal_primitive, horizontal_primitive_with, primitive_oracle, AnsatzBounds};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bicomplex::{d_v, FormError, LocalForm, ThetaGen, WedgeWord};
use crate::context::{Context, FieldId};
use crate::symexpr::{partial, total_derivative, Atom, JetExpr};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum VariationalError {
    #[error("expected a Lagrangian density of bidegree (0,{n}), got ({p},{q})")]
    NotADensity { p: usize, q: usize, n: usize },
    #[error("expected a form of bidegree ({0},{1})")]
    WrongBidegree(usize, usize),
    #[error("no horizontal primitive within the ansatz ({bounds}); residual degrees of freedom could not be matched")]
    NoPrimitiveInAnsatz { bounds: String },
    #[error("the form is not d_h-closed (required for q < n); residual: {residual}")]
    NotClosed { residual: String },
    #[error("ansatz basis too large ({0} columns); tighten degree or jet bounds")]
    AnsatzTooLarge(usize),
    #[error(transparent)]
    Form(#[from] FormError),
}

impl From<crate::symexpr::ExprError> for VariationalError {
    fn from(e: crate::symexpr::ExprError) -> Self {
        VariationalError::Form(FormError::Expr(e))
    }
}

/// A (1,n)-form whose contact factors all carry the empty multi-index:
/// sum_a E_a theta^a ^ dx^1 ^ ... ^ dx^n.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceForm {
    form: LocalForm,
    coefficients: BTreeMap<FieldId, JetExpr>,
}

impl SourceForm {
    pub fn form(&self) -> &LocalForm {
        &self.form
    }

    pub fn coefficients(&self) -> &BTreeMap<FieldId, JetExpr> {
        &self.coefficients
    }

    pub fn coefficient(&self, field: FieldId) -> JetExpr {
        self.coefficients.get(&field).cloned().unwrap_or_else(JetExpr::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.form.is_zero()
    }

    /// Classifies an existing (1,n)-form. Fails when some contact factor has
    /// positive order.
    pub fn from_form(ctx: &Context, form: LocalForm) -> Result<Self, VariationalError> {
        let n = ctx.dimension();
        let bd = form.bidegree();
        if bd.p != 1 || bd.q != n {
            return Err(VariationalError::WrongBidegree(1, n));
        }
        if !is_source_form(ctx, &form)? {
            return Err(VariationalError::WrongBidegree(1, n));
        }
        let mut coefficients = BTreeMap::new();
        for (word, coeff) in form.terms() {
            let field = word.thetas[0].field;
            let e = coefficients.entry(field).or_insert_with(JetExpr::zero);
            *e = e.add(coeff);
        }
        Ok(SourceForm { form, coefficients })
    }
}

/// Result of the unique source + exact splitting of a first variation.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub source: SourceForm,
    pub cartan: LocalForm,
}

/// True iff every contact factor of the (1,n)-form has an empty multi-index.
pub fn is_source_form(ctx: &Context, omega: &LocalForm) -> Result<bool, VariationalError> {
    let n = ctx.dimension();
    let bd = omega.bidegree();
    if bd.p != 1 || bd.q != n {
        return Err(VariationalError::WrongBidegree(1, n));
    }
    Ok(omega
        .terms()
        .all(|(word, _)| word.thetas.iter().all(|t| t.index.order() == 0)))
}

fn density_coefficient(ctx: &Context, omega: &LocalForm) -> Result<JetExpr, VariationalError> {
    let n = ctx.dimension();
    let bd = omega.bidegree();
    if bd.p != 0 || bd.q != n {
        return Err(VariationalError::NotADensity { p: bd.p, q: bd.q, n });
    }
    let full = WedgeWord { thetas: vec![], dxs: (0..n as u8).collect() };
    Ok(omega.coefficient(&full))
}

/// The Euler operator: E_a = sum over multi-indices I of
/// (-1)^|I| D_I (dL/du^a_I), assembled into the source form
/// sum_a E_a theta^a ^ dx^1 ^ ... ^ dx^n.
pub fn euler_lagrange(ctx: &Context, omega: &LocalForm) -> Result<SourceForm, VariationalError> {
    let n = ctx.dimension();
    let chart = omega.chart();
    let lagrangian = density_coefficient(ctx, omega)?;
    let mut coefficients: BTreeMap<FieldId, JetExpr> = BTreeMap::new();
    for (jchart, field, index) in lagrangian.jet_atoms().map(|(c, f, i)| (c, f, i.clone())).collect::<Vec<_>>() {
        debug_assert_eq!(jchart, chart);
        let dl = partial(ctx, &lagrangian, &Atom::Jet { chart: jchart, field, index: index.clone() })?;
        if dl.is_zero() {
            continue;
        }
        let mut term = dl;
        for &mu in index.indices() {
            term = total_derivative(ctx, &term, chart, mu)?;
        }
        if index.order() % 2 == 1 {
            term = term.neg();
        }
        let e = coefficients.entry(field).or_insert_with(JetExpr::zero);
        *e = e.add(&term);
    }
    coefficients.retain(|_, e| !e.is_zero());

    let mut form = LocalForm::zero(chart, 1, n);
    let dxs: Vec<u8> = (0..n as u8).collect();
    for (field, e) in &coefficients {
        let word = WedgeWord {
            thetas: vec![ThetaGen { field: *field, index: crate::symexpr::MultiIndex::empty() }],
            dxs: dxs.clone(),
        };
        form = form.add(&LocalForm::from_term(ctx, chart, word, e.clone())?)?;
    }
    Ok(SourceForm { form, coefficients })
}

/// Splits d_v(omega) = source + d_h(cartan) by structural integration by
/// parts: the highest-order contact factor of each term is peeled one
/// derivative at a time, collecting the boundary pieces into the Cartan
/// form. The source part equals `euler_lagrange(omega)` (checked by tests,
/// not assumed here).
pub fn source_decompose(ctx: &Context, omega: &LocalForm) -> Result<Decomposition, VariationalError> {
    let n = ctx.dimension();
    let chart = omega.chart();
    density_coefficient(ctx, omega)?; // shape check
    let mut eta = d_v(ctx, omega)?;
    let mut cartan = LocalForm::zero(chart, 1, n - 1);

    loop {
        // deterministic: pick the first term (canonical word order) whose
        // contact factor has positive order, peel its largest index
        let target = eta.terms().find_map(|(word, coeff)| {
            let theta = &word.thetas[0];
            (theta.index.order() > 0).then(|| (theta.clone(), coeff.clone()))
        });
        let Some((theta, coeff)) = target else { break };
        let field = theta.field;
        let (rest, mu) = theta.index.split_largest().expect("positive order");

        // kappa = sign * (volume word minus dx^mu) with kappa ^ dx^mu = volume
        let dxs_minus: Vec<u8> = (0..n as u8).filter(|&nu| nu != mu).collect();
        let crossings = dxs_minus.iter().filter(|&&nu| nu > mu).count();
        let sign = if crossings % 2 == 0 { 1 } else { -1 };

        // cartan piece: sign * coeff * theta^a_rest ^ kappa0
        let piece_word =
            WedgeWord { thetas: vec![ThetaGen { field, index: rest.clone() }], dxs: dxs_minus };
        let piece = LocalForm::from_term(ctx, chart, piece_word, coeff.scale_int(sign as i64))?;
        cartan = cartan.add(&piece)?;

        // replace the term: e theta_I ^ vol  ->  -(D_mu e) theta_rest ^ vol
        let full_word = WedgeWord { thetas: vec![theta], dxs: (0..n as u8).collect() };
        let old = LocalForm::from_term(ctx, chart, full_word, coeff.clone())?;
        let lower_word =
            WedgeWord { thetas: vec![ThetaGen { field, index: rest }], dxs: (0..n as u8).collect() };
        let lowered =
            LocalForm::from_term(ctx, chart, lower_word, total_derivative(ctx, &coeff, chart, mu)?.neg())?;
        eta = eta.sub(&old)?.add(&lowered)?;
    }

    let source = SourceForm::from_form(ctx, eta)?;
    Ok(Decomposition { source, cartan })
}
