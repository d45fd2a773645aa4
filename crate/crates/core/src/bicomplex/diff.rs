//! The two differentials and the raw-differential expansion.

use crate::context::{ChartId, Context, FieldId};
use crate::symexpr::{partial, total_derivative, Atom, JetExpr, MultiIndex};

use super::{FormError, Gen, LocalForm, ThetaGen, WedgeWord};

/// Horizontal differential: (p,q) -> (p,q+1).
///
/// d_h(e * W) = sum_mu D_mu(e * W) ^ dx^mu, where D_mu is a degree-0
/// derivation acting on the coefficient by the total derivative and on each
/// contact generator by theta^a_I -> theta^a_{I mu}. At q = n the result is
/// the zero form (every dx^mu already occurs).
pub fn d_h(ctx: &Context, omega: &LocalForm) -> Result<LocalForm, FormError> {
    let bd = omega.bidegree();
    let chart = omega.chart();
    let n = ctx.dimension();
    // At q = n every dx already occurs, so the result is the (formal) zero
    // form of degree (p, n+1); it never acquires terms.
    let mut out = LocalForm::zero(chart, bd.p, bd.q + 1);
    for (word, coeff) in omega.terms() {
        for mu in 0..n as u8 {
            if word.dxs.contains(&mu) {
                continue;
            }
            // coefficient part
            let de = total_derivative(ctx, coeff, chart, mu)?;
            if !de.is_zero() {
                if let Some((sign, w)) = append_dx(word, mu) {
                    out.accumulate(w, de.scale_int(sign as i64));
                }
            }
            // contact-generator parts
            for (k, theta) in word.thetas.iter().enumerate() {
                let up = theta.index.extended(mu);
                if up.order() > ctx.jet_cap() {
                    return Err(FormError::Expr(crate::symexpr::ExprError::JetOrderExceeded {
                        required: up.order(),
                        cap: ctx.jet_cap(),
                    }));
                }
                let mut gens: Vec<Gen> = Vec::with_capacity(word.thetas.len() + word.dxs.len() + 1);
                for (j, t) in word.thetas.iter().enumerate() {
                    if j == k {
                        gens.push(Gen::Theta(ThetaGen { field: t.field, index: up.clone() }));
                    } else {
                        gens.push(Gen::Theta(t.clone()));
                    }
                }
                gens.extend(word.dxs.iter().copied().map(Gen::Dx));
                gens.push(Gen::Dx(mu));
                if let Some((sign, w)) = super::sort_word(gens) {
                    out.accumulate(w, coeff.scale_int(sign as i64));
                }
            }
        }
    }
    Ok(out)
}

/// Appends dx^mu on the right of the word; `None` when mu already occurs.
fn append_dx(word: &WedgeWord, mu: u8) -> Option<(i8, WedgeWord)> {
    if word.dxs.contains(&mu) {
        return None;
    }
    let crossings = word.dxs.iter().filter(|&&nu| nu > mu).count();
    let sign = if crossings % 2 == 0 { 1 } else { -1 };
    let mut w = word.clone();
    let at = w.dxs.partition_point(|&nu| nu < mu);
    w.dxs.insert(at, mu);
    Some((sign, w))
}

/// Vertical differential: (p,q) -> (p+1,q).
///
/// d_v(e * W) = sum over jet coordinates v of theta_v ^ (de/dv * W); contact
/// and horizontal generators are annihilated.
pub fn d_v(ctx: &Context, omega: &LocalForm) -> Result<LocalForm, FormError> {
    let bd = omega.bidegree();
    let chart = omega.chart();
    let mut out = LocalForm::zero(chart, bd.p + 1, bd.q);
    for (word, coeff) in omega.terms() {
        let jets: Vec<(ChartId, FieldId, MultiIndex)> =
            coeff.jet_atoms().map(|(c, f, i)| (c, f, i.clone())).collect();
        for (jchart, field, index) in jets {
            debug_assert_eq!(jchart, chart);
            let de = partial(ctx, coeff, &Atom::Jet { chart: jchart, field, index: index.clone() })?;
            if de.is_zero() {
                continue;
            }
            let mut gens: Vec<Gen> = Vec::with_capacity(word.thetas.len() + word.dxs.len() + 1);
            gens.push(Gen::Theta(ThetaGen { field, index }));
            gens.extend(word.thetas.iter().cloned().map(Gen::Theta));
            gens.extend(word.dxs.iter().copied().map(Gen::Dx));
            if let Some((sign, w)) = super::sort_word(gens) {
                out.accumulate(w, de.scale_int(sign as i64));
            }
        }
    }
    Ok(out)
}

/// Raw differential du^a_I = theta^a_I + sum_mu u^a_{I mu} dx^mu, returned as
/// its two homogeneous pieces (the (1,0) contact part and the (0,1)
/// horizontal part). Input convenience only; forms are stored in the contact
/// basis, so the parser expands `du(...)` through this immediately.
pub fn raw_differential(
    ctx: &Context,
    chart: ChartId,
    field: FieldId,
    index: &MultiIndex,
) -> Result<(LocalForm, LocalForm), FormError> {
    let mut contact = LocalForm::zero(chart, 1, 0);
    contact.accumulate(
        WedgeWord { thetas: vec![ThetaGen { field, index: index.clone() }], dxs: vec![] },
        JetExpr::one(),
    );
    let mut horizontal = LocalForm::zero(chart, 0, 1);
    for mu in 0..ctx.dimension() as u8 {
        let up = index.extended(mu);
        if up.order() > ctx.jet_cap() {
            return Err(FormError::Expr(crate::symexpr::ExprError::JetOrderExceeded {
                required: up.order(),
                cap: ctx.jet_cap(),
            }));
        }
        horizontal.accumulate(
            WedgeWord { thetas: vec![], dxs: vec![mu] },
            JetExpr::jet(chart, field, up),
        );
    }
    Ok((contact, horizontal))
}
