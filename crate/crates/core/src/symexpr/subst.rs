//! Prolonged substitution: rewrites expressions of one chart in another
//! chart's coordinates, replacing base coordinates through the base map and
//! jet coordinates through recursive total derivatives with the transition's
//! Jacobian (the chain rule, exact at every order up to the cap).

use std::collections::BTreeMap;

use crate::context::{ChartId, Context, FieldId};
use crate::symexpr::calculus::total_derivative;
use crate::symexpr::expr::{Atom, JetExpr, MultiIndex};
use crate::symexpr::ExprError;

/// A fully prolonged chart-to-chart substitution. `apply` rewrites any
/// expression in `source` coordinates as an expression in `target`
/// coordinates; the jet table is precomputed up to the jet-order cap.
#[derive(Clone, Debug)]
pub struct ProlongedMap {
    source: ChartId,
    target: ChartId,
    cap: usize,
    /// x^mu_source as an expression in target coordinates.
    base: Vec<JetExpr>,
    /// u^a_I (source) as an expression in target coordinates.
    jets: BTreeMap<(FieldId, MultiIndex), JetExpr>,
}

/// Replaces base coordinates of `chart` by the given expressions. The input
/// must not contain jet coordinates.
pub(crate) fn substitute_base(
    ctx: &Context,
    e: &JetExpr,
    chart: ChartId,
    replacements: &[JetExpr],
) -> Result<JetExpr, ExprError> {
    let mut out = JetExpr::zero();
    for term in e.terms() {
        let mut acc = JetExpr::from_rational(term.coeff.clone());
        for (atom, pow) in term.mono.factors() {
            let image = match atom {
                Atom::Base { chart: c, coord } if *c == chart => replacements[*coord as usize].clone(),
                Atom::Base { .. } | Atom::Const(_) => JetExpr::atom(atom.clone()),
                Atom::Func { func, arg } => {
                    let marg = substitute_base(ctx, arg, chart, replacements)?;
                    JetExpr::func(*func, marg)?
                }
                Atom::Jet { .. } => {
                    return Err(ExprError::FunctionArgNotBase);
                }
            };
            acc = acc.mul(&image.powi(*pow)?);
        }
        out = out.add(&acc);
    }
    Ok(out.rewritten(ctx))
}

impl ProlongedMap {
    /// Builds the substitution from transition data:
    /// - `source_in_target`: each source base coordinate as an expression in
    ///   target coordinates (the direction actually substituted);
    /// - `target_in_source`: the inverse direction, used to form the Jacobian
    ///   d x^nu_target / d x^mu_source;
    /// - `shifts`: per declared field, the frozen shift `s` with
    ///   u_source = u_target + s, expressed in target coordinates.
    pub fn new(
        ctx: &Context,
        source: ChartId,
        target: ChartId,
        source_in_target: Vec<JetExpr>,
        target_in_source: Vec<JetExpr>,
        shifts: Vec<JetExpr>,
    ) -> Result<Self, ExprError> {
        let n = ctx.dimension();
        assert_eq!(source_in_target.len(), n);
        assert_eq!(target_in_source.len(), n);
        assert_eq!(shifts.len(), ctx.fields().len());

        // Jacobian M[nu][mu] = d x^nu_target / d x^mu_source, re-expressed in
        // target coordinates through the base map.
        let mut jacobian = vec![vec![JetExpr::zero(); n]; n];
        for nu in 0..n {
            for mu in 0..n {
                let d = crate::symexpr::calculus::partial(
                    ctx,
                    &target_in_source[nu],
                    &Atom::Base { chart: source, coord: mu as u8 },
                )?;
                jacobian[nu][mu] = substitute_base(ctx, &d, source, &source_in_target)?;
            }
        }

        let mut jets: BTreeMap<(FieldId, MultiIndex), JetExpr> = BTreeMap::new();
        for (f, shift) in shifts.iter().enumerate() {
            let field = FieldId(f);
            let u = JetExpr::jet(target, field, MultiIndex::empty());
            jets.insert((field, MultiIndex::empty()), u.add(shift).rewritten(ctx));
        }
        for order in 1..=ctx.jet_cap() {
            for index in multi_indices(n, order) {
                let (rest, mu) = index.split_largest().expect("order >= 1");
                for f in 0..ctx.fields().len() {
                    let field = FieldId(f);
                    let lower = jets.get(&(field, rest.clone())).expect("built in order").clone();
                    let mut acc = JetExpr::zero();
                    for nu in 0..n {
                        let m = &jacobian[nu][mu as usize];
                        if m.is_zero() {
                            continue;
                        }
                        let d = total_derivative(ctx, &lower, target, nu as u8)?;
                        acc = acc.add(&m.mul(&d));
                    }
                    jets.insert((field, index.clone()), acc.rewritten(ctx));
                }
            }
        }

        Ok(ProlongedMap { source, target, cap: ctx.jet_cap(), base: source_in_target, jets })
    }

    /// The identity substitution on a chart.
    pub fn identity(ctx: &Context, chart: ChartId) -> Self {
        let n = ctx.dimension();
        let base = (0..n).map(|mu| JetExpr::base(chart, mu as u8)).collect();
        let shifts = vec![JetExpr::zero(); ctx.fields().len()];
        let target_in_source = (0..n).map(|mu| JetExpr::base(chart, mu as u8)).collect();
        ProlongedMap::new(ctx, chart, chart, base, target_in_source, shifts)
            .expect("identity map construction cannot fail")
    }

    pub fn source(&self) -> ChartId {
        self.source
    }

    pub fn target(&self) -> ChartId {
        self.target
    }

    /// Image of a source base coordinate.
    pub fn base_image(&self, mu: u8) -> &JetExpr {
        &self.base[mu as usize]
    }

    /// Image of a source jet coordinate.
    pub fn jet_image(&self, field: FieldId, index: &MultiIndex) -> Result<&JetExpr, ExprError> {
        self.jets
            .get(&(field, index.clone()))
            .ok_or(ExprError::JetOrderExceeded { required: index.order(), cap: self.cap })
    }

    /// Rewrites a source-chart expression in target coordinates.
    pub fn apply(&self, ctx: &Context, e: &JetExpr) -> Result<JetExpr, ExprError> {
        let mut out = JetExpr::zero();
        for term in e.terms() {
            let mut acc = JetExpr::from_rational(term.coeff.clone());
            for (atom, pow) in term.mono.factors() {
                let image = match atom {
                    Atom::Base { chart, coord } if *chart == self.source => {
                        self.base[*coord as usize].clone()
                    }
                    Atom::Jet { chart, field, index } if *chart == self.source => {
                        self.jet_image(*field, index)?.clone()
                    }
                    Atom::Base { chart, .. } | Atom::Jet { chart, .. } => {
                        return Err(ExprError::ChartMismatch { expected: self.source, found: *chart })
                    }
                    Atom::Const(_) => JetExpr::atom(atom.clone()),
                    Atom::Func { func, arg } => {
                        let marg = self.apply(ctx, arg)?;
                        JetExpr::func(*func, marg)?
                    }
                };
                acc = acc.mul(&image.powi(*pow)?);
            }
            out = out.add(&acc);
        }
        Ok(out.rewritten(ctx))
    }
}

/// Prolonged substitution of an expression along a transition direction.
pub fn substitute_prolonged(ctx: &Context, e: &JetExpr, map: &ProlongedMap) -> Result<JetExpr, ExprError> {
    map.apply(ctx, e)
}

/// All sorted multi-indices of the given order over n coordinates.
pub(crate) fn multi_indices(n: usize, order: usize) -> Vec<MultiIndex> {
    fn rec(n: usize, order: usize, start: u8, cur: &mut Vec<u8>, out: &mut Vec<MultiIndex>) {
        if order == 0 {
            out.push(MultiIndex::new(cur.clone()));
            return;
        }
        for mu in start..n as u8 {
            cur.push(mu);
            rec(n, order - 1, mu, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, order, 0, &mut Vec::new(), &mut out);
    out
}

/// All sorted multi-indices of order 0..=cap.
pub(crate) fn multi_indices_up_to(n: usize, cap: usize) -> Vec<MultiIndex> {
    (0..=cap).flat_map(|k| multi_indices(n, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse_expr;

    fn ctx() -> std::sync::Arc<Context> {
        Context::builder(1, 4)
            .chart("U0", &["t"])
            .chart("U2", &["t"])
            .field("u")
            .build()
    }

    /// Transition t_2 = t_0 + 2*pi, field unshifted; pulls chart-2
    /// expressions back to chart 0.
    fn winding_map(ctx: &Context) -> ProlongedMap {
        let c0 = ChartId(0);
        let c2 = ChartId(1);
        // source = chart 2, target = chart 0
        let source_in_target = vec![parse_expr(ctx, "t + 2*pi", c0).unwrap()];
        let target_in_source = vec![parse_expr(ctx, "t - 2*pi", c2).unwrap()];
        let shifts = vec![JetExpr::zero()];
        ProlongedMap::new(ctx, c2, c0, source_in_target, target_in_source, shifts).unwrap()
    }

    #[test]
    fn translation_leaves_first_jets() {
        let ctx = ctx();
        let map = winding_map(&ctx);
        let e = parse_expr(&ctx, "u_t", ChartId(1)).unwrap();
        assert_eq!(map.apply(&ctx, &e).unwrap(), parse_expr(&ctx, "u_t", ChartId(0)).unwrap());
    }

    #[test]
    fn base_coordinates_translate() {
        let ctx = ctx();
        let map = winding_map(&ctx);
        let e = parse_expr(&ctx, "t*u_t", ChartId(1)).unwrap();
        assert_eq!(
            map.apply(&ctx, &e).unwrap(),
            parse_expr(&ctx, "(t + 2*pi)*u_t", ChartId(0)).unwrap()
        );
    }

    #[test]
    fn identity_map_is_identity() {
        let ctx = ctx();
        let map = ProlongedMap::identity(&ctx, ChartId(0));
        for text in ["u_tt*t - 3*u", "1/2*u_t^2 + t*u_t", "sin(t)*u + pi"] {
            let e = parse_expr(&ctx, text, ChartId(0)).unwrap();
            assert_eq!(map.apply(&ctx, &e).unwrap(), e);
        }
        // and on random expressions
        let mut rng = crate::testkit::rng(0x1D);
        for _ in 0..30 {
            let opts = crate::testkit::ExprOpts { max_jet_order: 3, ..Default::default() };
            let e = crate::testkit::gen_expr(&mut rng, &ctx, ChartId(0), opts);
            assert_eq!(map.apply(&ctx, &e).unwrap(), e);
        }
    }

    #[test]
    fn round_trip_through_inverse() {
        let ctx = ctx();
        let c0 = ChartId(0);
        let c2 = ChartId(1);
        let fwd = winding_map(&ctx); // chart2 -> chart0
        let bwd = ProlongedMap::new(
            &ctx,
            c0,
            c2,
            vec![parse_expr(&ctx, "t - 2*pi", c2).unwrap()],
            vec![parse_expr(&ctx, "t + 2*pi", c0).unwrap()],
            vec![JetExpr::zero()],
        )
        .unwrap();
        for text in ["u_tt*t - 3*u", "t^2*u_t + 1/3", "u*u_t*u_tt"] {
            let e = parse_expr(&ctx, text, c0).unwrap();
            let there = bwd.apply(&ctx, &e).unwrap();
            let back = fwd.apply(&ctx, &there).unwrap();
            assert_eq!(back, e, "round trip failed for {text}");
        }
        let mut rng = crate::testkit::rng(0x2E);
        for _ in 0..30 {
            let opts = crate::testkit::ExprOpts { max_jet_order: 3, ..Default::default() };
            let e = crate::testkit::gen_expr(&mut rng, &ctx, c0, opts);
            let back = fwd.apply(&ctx, &bwd.apply(&ctx, &e).unwrap()).unwrap();
            assert_eq!(back, e);
        }
    }

    /// Scaling map t_1 = 2 t_0 exercises the Jacobian: u_t in chart 1 pulls
    /// back to (1/2) u_t in chart 0.
    #[test]
    fn jacobian_rescales_jets() {
        let ctx = Context::builder(1, 4)
            .chart("U0", &["t"])
            .chart("U1", &["t"])
            .field("u")
            .build();
        let c0 = ChartId(0);
        let c1 = ChartId(1);
        let map = ProlongedMap::new(
            &ctx,
            c1,
            c0,
            vec![parse_expr(&ctx, "2*t", c0).unwrap()],
            vec![parse_expr(&ctx, "t/2", c1).unwrap()],
            vec![JetExpr::zero()],
        )
        .unwrap();
        let e = parse_expr(&ctx, "u_t", c1).unwrap();
        assert_eq!(map.apply(&ctx, &e).unwrap(), parse_expr(&ctx, "1/2*u_t", c0).unwrap());
        let e2 = parse_expr(&ctx, "u_tt", c1).unwrap();
        assert_eq!(map.apply(&ctx, &e2).unwrap(), parse_expr(&ctx, "1/4*u_tt", c0).unwrap());
    }

    #[test]
    fn frozen_field_shift_applies() {
        let ctx = ctx();
        let c0 = ChartId(0);
        let c2 = ChartId(1);
        let map = ProlongedMap::new(
            &ctx,
            c2,
            c0,
            vec![parse_expr(&ctx, "t", c0).unwrap()],
            vec![parse_expr(&ctx, "t", c2).unwrap()],
            vec![parse_expr(&ctx, "2*pi*t", c0).unwrap()],
        )
        .unwrap();
        let e = parse_expr(&ctx, "u", c2).unwrap();
        assert_eq!(map.apply(&ctx, &e).unwrap(), parse_expr(&ctx, "u + 2*pi*t", c0).unwrap());
        // jets pick up derivatives of the frozen shift
        let e1 = parse_expr(&ctx, "u_t", c2).unwrap();
        assert_eq!(map.apply(&ctx, &e1).unwrap(), parse_expr(&ctx, "u_t + 2*pi", c0).unwrap());
        let e2 = parse_expr(&ctx, "u_tt", c2).unwrap();
        assert_eq!(map.apply(&ctx, &e2).unwrap(), parse_expr(&ctx, "u_tt", c0).unwrap());
    }
}
