//! Finite covers as abstract nerves with chart transitions, cochains valued
//! in local forms, the Cech coboundary with prolonged pullback, total
//! differentials, cocycle verification, descent solving, and the action
//! pairing. Charts and overlaps are purely combinatorial; transition data is
//! the only geometry.

pub mod action;
mod cochain;
mod descent;
pub mod quad;
mod total;

pub use action::{evaluate_action, ActionError, ActionEvaluation, ActionOptions, Cell, CellDomain, Corner, FieldAssignment, FundamentalCycle, Seam, SeamGeom};
pub use cochain::{cech_coboundary, int_coboundary, pullback_form, Cochain, IntCochain};
pub use descent::{descend, descend_with};
pub use total::{
    total_d, total_delta, verify_lagrangian_cocycle, Convention, LagrangianCocycle, TotalElement,
};

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::bicomplex::FormError;
use crate::context::{ChartId, Context};
use crate::symexpr::{subst_base_exprs, ExprError, JetExpr, ProlongedMap};
use crate::variational::VariationalError;

/// A nerve simplex: strictly increasing chart indices.
pub type Simplex = Vec<usize>;

/// Deligne-complex degree: the integer level sits in degree 0, an r-form in
/// degree r+1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeligneDegree(pub usize);

impl DeligneDegree {
    pub fn of_form_degree(r: usize) -> Self {
        DeligneDegree(r + 1)
    }

    pub fn integer_level() -> Self {
        DeligneDegree(0)
    }
}

#[derive(Clone, Debug, Error)]
pub enum CechError {
    #[error("simplex {0:?} is not strictly increasing or references an unknown chart")]
    BadSimplex(Simplex),
    #[error("nerve is not closed under faces: {simplex:?} is present but {missing:?} is not")]
    NerveNotClosed { simplex: Simplex, missing: Simplex },
    #[error("no transition declared for overlap ({0},{1})")]
    MissingTransition(usize, usize),
    #[error("transition ({i},{j}): {what} must be expressed in chart {expected}, found chart {found}")]
    TransitionChart { i: usize, j: usize, what: String, expected: usize, found: usize },
    #[error("transition ({i},{j}): base map and inverse do not compose to the identity on `{coord}`; residual {residual}")]
    InverseNotIdentity { i: usize, j: usize, coord: String, residual: String },
    #[error("transitions incompatible on triple {triple:?}: {detail}")]
    TransitionsIncompatible { triple: Simplex, detail: String },
    #[error("cochain value on {simplex:?} must be expressed in the anchor chart {anchor}")]
    WrongAnchor { simplex: Simplex, anchor: usize },
    #[error("descent blocked at step {step} on simplex {simplex:?}: {source}")]
    Descent { step: usize, simplex: Simplex, source: VariationalError },
    #[error("integrality failure on {simplex:?}: coboundary/period = {defect} is not an integer")]
    IntegralityFailure { simplex: Simplex, defect: String },
    #[error("coboundary of the top component is not constant on {simplex:?}: {value}")]
    NonConstantLevel { simplex: Simplex, value: String },
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Transition data for an overlap (i,j), i < j: the base map in both
/// directions and the frozen affine field shifts u_j = u_i + s_ij.
#[derive(Clone, Debug)]
pub struct Transition {
    pub low: usize,
    pub high: usize,
    /// x_high as expressions in chart `low` coordinates.
    pub forward: Vec<JetExpr>,
    /// x_low as expressions in chart `high` coordinates.
    pub inverse: Vec<JetExpr>,
    /// Per field, the shift s with u_high = u_low + s, in chart `low`
    /// coordinates. Frozen: the vertical differential ignores it.
    pub shifts: Vec<JetExpr>,
}

/// A finite cover: the nerve and its transitions, with prolonged pullback
/// maps prebuilt for both directions of every edge.
#[derive(Clone, Debug)]
pub struct Cover {
    ncharts: usize,
    nerve: BTreeSet<Simplex>,
    transitions: BTreeMap<(usize, usize), Transition>,
    maps: BTreeMap<(usize, usize), Arc<ProlongedMap>>,
}

impl Cover {
    /// Builds and validates a cover. The nerve lists simplices of dimension
    /// >= 1; vertices are implied by the chart table. Validation checks
    /// nerve closure, transition presence, two-sided inverse identities, and
    /// prolonged compatibility on every 2-simplex up to the jet cap.
    pub fn new(
        ctx: &Context,
        nerve: Vec<Simplex>,
        transitions: Vec<Transition>,
    ) -> Result<Self, CechError> {
        let nchart = ctx.principal_count();
        let mut set: BTreeSet<Simplex> = BTreeSet::new();
        for s in nerve {
            if s.len() < 2 || s.windows(2).any(|w| w[0] >= w[1]) || s.iter().any(|&i| i >= nchart) {
                return Err(CechError::BadSimplex(s));
            }
            set.insert(s);
        }
        // closure under faces of dimension >= 1
        for s in set.clone() {
            if s.len() > 2 {
                for k in 0..s.len() {
                    let mut face = s.clone();
                    face.remove(k);
                    if !set.contains(&face) {
                        return Err(CechError::NerveNotClosed { simplex: s, missing: face });
                    }
                }
            }
        }

        let mut tmap = BTreeMap::new();
        for t in transitions {
            if t.low >= t.high || t.high >= nchart {
                return Err(CechError::BadSimplex(vec![t.low, t.high]));
            }
            tmap.insert((t.low, t.high), t);
        }
        for s in &set {
            if s.len() == 2 && !tmap.contains_key(&(s[0], s[1])) {
                return Err(CechError::MissingTransition(s[0], s[1]));
            }
        }

        for t in tmap.values() {
            let expect = |exprs: &[JetExpr], chart: usize, what: &str| -> Result<(), CechError> {
                for e in exprs {
                    if let Some(found) = e.chart() {
                        if found != ChartId(chart) {
                            return Err(CechError::TransitionChart {
                                i: t.low,
                                j: t.high,
                                what: what.into(),
                                expected: chart,
                                found: found.0,
                            });
                        }
                    }
                }
                Ok(())
            };
            expect(&t.forward, t.low, "the forward base map")?;
            expect(&t.inverse, t.high, "the inverse base map")?;
            expect(&t.shifts, t.low, "a field shift")?;
        }
        let mut cover =
            Cover { ncharts: nchart, nerve: set, transitions: tmap, maps: BTreeMap::new() };
        cover.build_maps(ctx)?;
        cover.check_inverses(ctx)?;
        cover.check_compatibility(ctx)?;
        Ok(cover)
    }

    fn build_maps(&mut self, ctx: &Context) -> Result<(), CechError> {
        for ((i, j), t) in &self.transitions {
            let ci = ChartId(*i);
            let cj = ChartId(*j);
            // pull chart-j expressions back to chart i
            let low_map = ProlongedMap::new(
                ctx,
                cj,
                ci,
                t.forward.clone(),
                t.inverse.clone(),
                t.shifts.clone(),
            )?;
            // pull chart-i expressions to chart j: shifts flip sign and move
            // to chart-j coordinates
            let mut flipped = Vec::with_capacity(t.shifts.len());
            for s in &t.shifts {
                let moved = subst_base_exprs(ctx, s, ci, &t.inverse)?;
                flipped.push(moved.neg());
            }
            let high_map = ProlongedMap::new(
                ctx,
                ci,
                cj,
                t.inverse.clone(),
                t.forward.clone(),
                flipped,
            )?;
            self.maps.insert((*j, *i), Arc::new(low_map));
            self.maps.insert((*i, *j), Arc::new(high_map));
        }
        Ok(())
    }

    fn check_inverses(&self, ctx: &Context) -> Result<(), CechError> {
        for ((i, j), t) in &self.transitions {
            let ci = ChartId(*i);
            let cj = ChartId(*j);
            for mu in 0..ctx.dimension() {
                // x_low -> inverse(forward) must be the identity
                let round = subst_base_exprs(ctx, &t.inverse[mu], cj, &t.forward)?;
                let expect = JetExpr::base(ci, mu as u8);
                if round != expect {
                    return Err(CechError::InverseNotIdentity {
                        i: *i,
                        j: *j,
                        coord: ctx.coord_name(ci, mu as u8).into(),
                        residual: round.sub(&expect).render(ctx),
                    });
                }
                let round = subst_base_exprs(ctx, &t.forward[mu], ci, &t.inverse)?;
                let expect = JetExpr::base(cj, mu as u8);
                if round != expect {
                    return Err(CechError::InverseNotIdentity {
                        i: *i,
                        j: *j,
                        coord: ctx.coord_name(cj, mu as u8).into(),
                        residual: round.sub(&expect).render(ctx),
                    });
                }
            }
        }
        Ok(())
    }

    /// psi_ik = psi_jk o psi_ij on every 2-simplex, checked as equality of
    /// the pullback maps on base coordinates and jets up to the cap.
    fn check_compatibility(&self, ctx: &Context) -> Result<(), CechError> {
        for s in &self.nerve {
            if s.len() != 3 {
                continue;
            }
            let (i, j, k) = (s[0], s[1], s[2]);
            let p_ij = self.pullback(j, i).unwrap();
            let p_jk = self.pullback(k, j).unwrap();
            let p_ik = self.pullback(k, i).unwrap();
            for mu in 0..ctx.dimension() as u8 {
                let via_j = p_ij.apply(ctx, p_jk.base_image(mu))?;
                let direct = p_ik.base_image(mu).clone();
                if via_j != direct {
                    return Err(CechError::TransitionsIncompatible {
                        triple: s.clone(),
                        detail: format!(
                            "base coordinate {}: {} vs {}",
                            ctx.coord_name(ChartId(k), mu),
                            via_j.render(ctx),
                            direct.render(ctx)
                        ),
                    });
                }
            }
            for f in 0..ctx.fields().len() {
                let field = crate::context::FieldId(f);
                for order in 0..=ctx.jet_cap() {
                    for index in crate::symexpr::all_multi_indices(ctx.dimension(), order) {
                        let via_j = p_ij.apply(ctx, p_jk.jet_image(field, &index)?)?;
                        let direct = p_ik.jet_image(field, &index)?.clone();
                        if via_j != direct {
                            return Err(CechError::TransitionsIncompatible {
                                triple: s.clone(),
                                detail: format!(
                                    "jet {} of `{}`: {} vs {}",
                                    order,
                                    ctx.field_name(field),
                                    via_j.render(ctx),
                                    direct.render(ctx)
                                ),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn nerve(&self) -> impl Iterator<Item = &Simplex> {
        self.nerve.iter()
    }

    pub fn simplices_of_degree(&self, r: usize) -> Vec<Simplex> {
        if r == 0 {
            return (0..self.ncharts).map(|i| vec![i]).collect();
        }
        self.nerve.iter().filter(|s| s.len() == r + 1).cloned().collect()
    }

    pub fn ncharts(&self) -> usize {
        self.ncharts
    }

    pub fn contains(&self, s: &Simplex) -> bool {
        if s.len() == 1 {
            return true;
        }
        self.nerve.contains(s)
    }

    pub fn transition(&self, i: usize, j: usize) -> Option<&Transition> {
        self.transitions.get(&(i, j))
    }

    /// Pullback map rewriting chart `source` expressions in chart `target`.
    pub fn pullback(&self, source: usize, target: usize) -> Option<&ProlongedMap> {
        self.maps.get(&(source, target)).map(|m| m.as_ref())
    }
}

#[cfg(test)]
mod tests;
