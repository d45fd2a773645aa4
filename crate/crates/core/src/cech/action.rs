//! The action pairing: a Lagrangian cocycle evaluated against a fundamental
//! cycle for base dimensions 1 and 2. Cells integrate the local densities,
//! codimension-1 seams pick up the first correction component, and (n = 2)
//! codimension-2 corner points pick up the second. The integer level has no
//! geometric stratum to pair with; it enters only through the modulo-period
//! ambiguity exercised by coboundary shifts.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bicomplex::WedgeWord;
use crate::context::{ChartId, Context, FieldId};
use crate::symexpr::{partial, Assignment, Atom, ExprError, JetExpr, MultiIndex};

use super::quad;
use super::{CechError, Cover, LagrangianCocycle};

#[derive(Clone, Debug, Error)]
pub enum ActionError {
    #[error("action evaluation supports base dimension 1 and 2, got {0}")]
    DimensionUnsupported(usize),
    #[error("field `{field}` disagrees across seam {pair:?} at {point:?}: |{a} - {b}| > {tol}")]
    SeamMismatch { field: String, pair: (usize, usize), point: Vec<f64>, a: f64, b: f64, tol: f64 },
    #[error("quadrature did not converge: coarse {coarse}, refined {refined}, tolerance {tol}")]
    NonConvergent { coarse: f64, refined: f64, tol: f64 },
    #[error("no field assignment for `{0}` on chart {1}")]
    MissingField(String, usize),
    #[error("cell geometry does not match the base dimension")]
    BadCell,
    #[error(transparent)]
    Cech(#[from] CechError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Cell of a fundamental cycle, subordinate to one chart.
#[derive(Clone, Debug)]
pub struct Cell {
    pub chart: usize,
    pub domain: CellDomain,
}

#[derive(Clone, Debug)]
pub enum CellDomain {
    Interval { lo: f64, hi: f64 },
    Rect { lo: [f64; 2], hi: [f64; 2] },
    /// Oriented by vertex order (positive = counterclockwise).
    Triangle { verts: [[f64; 2]; 3] },
}

/// Codimension-1 stratum on a double overlap. The geometry is expressed in
/// the anchor (lower-index) chart; the sign is declared by the cycle.
#[derive(Clone, Debug)]
pub struct Seam {
    pub pair: (usize, usize),
    pub geom: SeamGeom,
    pub sign: i64,
}

#[derive(Clone, Debug)]
pub enum SeamGeom {
    /// n = 1: a point.
    Point(Vec<f64>),
    /// n = 2: a parameterized curve r in [lo, hi] -> chart coordinates;
    /// `coords` are expressions in the parameter chart's single coordinate.
    Curve { param_chart: ChartId, coords: Vec<JetExpr>, lo: f64, hi: f64 },
}

/// Codimension-2 stratum on a triple overlap (n = 2 only).
#[derive(Clone, Debug)]
pub struct Corner {
    pub triple: (usize, usize, usize),
    pub point: Vec<f64>,
    pub sign: i64,
}

#[derive(Clone, Debug, Default)]
pub struct FundamentalCycle {
    pub cells: Vec<Cell>,
    pub seams: Vec<Seam>,
    pub corners: Vec<Corner>,
}

/// Per-chart closed-form field expressions (base coordinates only).
#[derive(Clone, Debug, Default)]
pub struct FieldAssignment {
    exprs: BTreeMap<(FieldId, ChartId), JetExpr>,
}

impl FieldAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, field: FieldId, chart: ChartId, expr: JetExpr) {
        assert!(expr.jet_atoms().next().is_none(), "field assignment must be jet-free");
        self.exprs.insert((field, chart), expr);
    }

    pub fn get(&self, field: FieldId, chart: ChartId) -> Option<&JetExpr> {
        self.exprs.get(&(field, chart))
    }

    /// d^I of the field expression on a chart.
    pub fn jet_expr(
        &self,
        ctx: &Context,
        field: FieldId,
        chart: ChartId,
        index: &MultiIndex,
    ) -> Result<JetExpr, ActionError> {
        let base = self
            .exprs
            .get(&(field, chart))
            .ok_or_else(|| ActionError::MissingField(ctx.field_name(field).into(), chart.0))?;
        let mut cur = base.clone();
        for &mu in index.indices() {
            cur = partial(ctx, &cur, &Atom::Base { chart, coord: mu })?;
        }
        Ok(cur)
    }

    /// Replaces every jet coordinate in `e` by the corresponding derivative
    /// of the assigned field, leaving a base-only expression.
    pub fn prolong(&self, ctx: &Context, e: &JetExpr) -> Result<JetExpr, ActionError> {
        let mut out = JetExpr::zero();
        for term in e.terms() {
            let mut acc = JetExpr::from_rational(term.coeff.clone());
            for (atom, pow) in term.mono.factors() {
                let image = match atom {
                    Atom::Jet { chart, field, index } => self.jet_expr(ctx, *field, *chart, index)?,
                    _ => JetExpr::atom(atom.clone()),
                };
                acc = acc.mul(&image.powi(*pow)?);
            }
            out = out.add(&acc);
        }
        Ok(out.rewritten(ctx))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ActionOptions {
    pub quad_order: usize,
    /// Relative convergence requirement between the coarse and halved pass.
    pub quad_tol: f64,
    /// Field agreement tolerance at seam sample points.
    pub seam_tol: f64,
}

impl Default for ActionOptions {
    fn default() -> Self {
        ActionOptions { quad_order: 16, quad_tol: 1e-9, seam_tol: 1e-9 }
    }
}

#[derive(Clone, Debug)]
pub struct ActionEvaluation {
    /// The refined value (one halving past the coarse pass).
    pub value: f64,
    pub coarse: f64,
    pub cells: Vec<f64>,
    pub seams: Vec<f64>,
    pub corners: Vec<f64>,
    pub quad_order: usize,
}

/// S = sum of cell integrals of omega^(0) + signed seam terms of omega^(1)
/// (+ corner terms of omega^(2) when n = 2). Checks field consistency across
/// seams first and requires quadrature convergence under one refinement
/// halving.
pub fn evaluate_action(
    ctx: &Context,
    cover: &Cover,
    omega: &LagrangianCocycle,
    cycle: &FundamentalCycle,
    fields: &FieldAssignment,
    opts: &ActionOptions,
) -> Result<ActionEvaluation, ActionError> {
    let n = ctx.dimension();
    if n == 0 || n > 2 {
        return Err(ActionError::DimensionUnsupported(n));
    }
    check_seam_consistency(ctx, cover, cycle, fields, opts.seam_tol)?;

    let nodes = quad::gauss_legendre(opts.quad_order);
    let coarse = compute(ctx, omega, cycle, fields, &nodes, 0)?;
    let refined = compute(ctx, omega, cycle, fields, &nodes, 1)?;
    let s0: f64 = total(&coarse);
    let s1: f64 = total(&refined);
    if (s1 - s0).abs() > opts.quad_tol * s1.abs().max(1.0) {
        return Err(ActionError::NonConvergent { coarse: s0, refined: s1, tol: opts.quad_tol });
    }
    Ok(ActionEvaluation {
        value: s1,
        coarse: s0,
        cells: refined.0,
        seams: refined.1,
        corners: refined.2,
        quad_order: opts.quad_order,
    })
}

type Pieces = (Vec<f64>, Vec<f64>, Vec<f64>);

fn total(p: &Pieces) -> f64 {
    p.0.iter().chain(p.1.iter()).chain(p.2.iter()).sum()
}

fn compute(
    ctx: &Context,
    omega: &LagrangianCocycle,
    cycle: &FundamentalCycle,
    fields: &FieldAssignment,
    nodes: &[(f64, f64)],
    halvings: usize,
) -> Result<Pieces, ActionError> {
    let n = ctx.dimension();
    let mut cells = Vec::new();
    for cell in &cycle.cells {
        cells.push(cell_integral(ctx, omega, cell, fields, nodes, halvings)?);
    }
    let mut seams = Vec::new();
    for seam in &cycle.seams {
        seams.push(seam_term(ctx, omega, seam, fields, nodes, halvings)?);
    }
    let mut corners = Vec::new();
    if n == 2 {
        for corner in &cycle.corners {
            corners.push(corner_term(ctx, omega, corner, fields)?);
        }
    }
    Ok((cells, seams, corners))
}

/// Base-only integrand of the density on a cell's chart.
fn density_integrand(
    ctx: &Context,
    omega: &LagrangianCocycle,
    chart: usize,
    fields: &FieldAssignment,
) -> Result<JetExpr, ActionError> {
    let n = ctx.dimension();
    let form = omega.omegas[0].value(&vec![chart]);
    let full = WedgeWord { thetas: vec![], dxs: (0..n as u8).collect() };
    let coeff = form.coefficient(&full);
    fields.prolong(ctx, &coeff)
}

fn cell_integral(
    ctx: &Context,
    omega: &LagrangianCocycle,
    cell: &Cell,
    fields: &FieldAssignment,
    nodes: &[(f64, f64)],
    halvings: usize,
) -> Result<f64, ActionError> {
    let chart = ChartId(cell.chart);
    let integrand = density_integrand(ctx, omega, cell.chart, fields)?;
    let eval1 = |t: f64| -> f64 {
        let mut a = Assignment::new();
        a.set_base(chart, 0, t);
        integrand.eval_numeric(ctx, &a).expect("integrand evaluates")
    };
    let eval2 = |x: f64, y: f64| -> f64 {
        let mut a = Assignment::new();
        a.set_base(chart, 0, x);
        a.set_base(chart, 1, y);
        integrand.eval_numeric(ctx, &a).expect("integrand evaluates")
    };
    match (&cell.domain, ctx.dimension()) {
        (CellDomain::Interval { lo, hi }, 1) => {
            Ok(split_intervals(*lo, *hi, halvings)
                .into_iter()
                .map(|(a, b)| quad::integrate(eval1, a, b, nodes))
                .sum())
        }
        (CellDomain::Rect { lo, hi }, 2) => {
            let mut acc = 0.0;
            for (ax, bx) in split_intervals(lo[0], hi[0], halvings) {
                for (ay, by) in split_intervals(lo[1], hi[1], halvings) {
                    acc += quad::integrate2(&eval2, (ax, bx), (ay, by), nodes);
                }
            }
            Ok(acc)
        }
        (CellDomain::Triangle { verts }, 2) => {
            let mut acc = 0.0;
            for tri in split_triangle(*verts, halvings) {
                acc += quad::integrate_triangle(&eval2, tri, nodes);
            }
            Ok(acc)
        }
        _ => Err(ActionError::BadCell),
    }
}

fn split_intervals(lo: f64, hi: f64, halvings: usize) -> Vec<(f64, f64)> {
    let pieces = 1usize << halvings;
    let h = (hi - lo) / pieces as f64;
    (0..pieces).map(|k| (lo + h * k as f64, lo + h * (k + 1) as f64)).collect()
}

fn split_triangle(verts: [[f64; 2]; 3], halvings: usize) -> Vec<[[f64; 2]; 3]> {
    let mut tris = vec![verts];
    for _ in 0..halvings {
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let m = |p: [f64; 2], q: [f64; 2]| [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
            let (ab, bc, ca) = (m(a, b), m(b, c), m(c, a));
            next.push([a, ab, ca]);
            next.push([ab, b, bc]);
            next.push([ca, bc, c]);
            next.push([ab, bc, ca]);
        }
        tris = next;
    }
    tris
}

/// Seam contribution: sign * omega^(1) on the sorted pair, evaluated at the
/// point (n = 1) or line-integrated along the curve (n = 2).
fn seam_term(
    ctx: &Context,
    omega: &LagrangianCocycle,
    seam: &Seam,
    fields: &FieldAssignment,
    nodes: &[(f64, f64)],
    halvings: usize,
) -> Result<f64, ActionError> {
    let (i, j) = seam.pair;
    assert!(i < j, "seam pair must be sorted");
    let anchor = ChartId(i);
    let form = omega.omegas[1].value(&vec![i, j]);
    match &seam.geom {
        SeamGeom::Point(coords) => {
            let scalar = fields.prolong(ctx, &form.coefficient(&WedgeWord::scalar()))?;
            let mut a = Assignment::new();
            for (mu, v) in coords.iter().enumerate() {
                a.set_base(anchor, mu as u8, *v);
            }
            Ok(seam.sign as f64 * scalar.eval_numeric(ctx, &a)?)
        }
        SeamGeom::Curve { param_chart, coords, lo, hi } => {
            // line integral of g_mu dx^mu along r -> x(r)
            let mut comps: Vec<(JetExpr, JetExpr)> = Vec::new(); // (g_mu prolonged, dx^mu/dr)
            for mu in 0..ctx.dimension() as u8 {
                let word = WedgeWord { thetas: vec![], dxs: vec![mu] };
                let g = fields.prolong(ctx, &form.coefficient(&word))?;
                let dxdr = partial(ctx, &coords[mu as usize], &Atom::Base { chart: *param_chart, coord: 0 })?;
                comps.push((g, dxdr));
            }
            let f = |r: f64| -> f64 {
                let mut pa = Assignment::new();
                pa.set_base(*param_chart, 0, r);
                let mut a = Assignment::new();
                for mu in 0..ctx.dimension() as u8 {
                    let x = coords[mu as usize].eval_numeric(ctx, &pa).expect("curve evaluates");
                    a.set_base(anchor, mu, x);
                }
                let mut acc = 0.0;
                for (g, dxdr) in &comps {
                    acc += g.eval_numeric(ctx, &a).expect("seam integrand evaluates")
                        * dxdr.eval_numeric(ctx, &pa).expect("curve derivative evaluates");
                }
                acc
            };
            let mut acc = 0.0;
            for (a, b) in split_intervals(*lo, *hi, halvings) {
                acc += quad::integrate(&f, a, b, nodes);
            }
            Ok(seam.sign as f64 * acc)
        }
    }
}

fn corner_term(
    ctx: &Context,
    omega: &LagrangianCocycle,
    corner: &Corner,
    fields: &FieldAssignment,
) -> Result<f64, ActionError> {
    let (i, j, k) = corner.triple;
    let anchor = ChartId(i);
    let form = omega.omegas[2].value(&vec![i, j, k]);
    let scalar = fields.prolong(ctx, &form.coefficient(&WedgeWord::scalar()))?;
    let mut a = Assignment::new();
    for (mu, v) in corner.point.iter().enumerate() {
        a.set_base(anchor, mu as u8, *v);
    }
    Ok(corner.sign as f64 * scalar.eval_numeric(ctx, &a)?)
}

/// Field values must agree across each seam: u_high(forward(x)) =
/// u_low(x) + shift(x) at sample points of the seam geometry.
fn check_seam_consistency(
    ctx: &Context,
    cover: &Cover,
    cycle: &FundamentalCycle,
    fields: &FieldAssignment,
    tol: f64,
) -> Result<(), ActionError> {
    for seam in &cycle.seams {
        let (i, j) = seam.pair;
        let Some(transition) = cover.transition(i, j) else {
            return Err(ActionError::Cech(CechError::MissingTransition(i, j)));
        };
        let samples: Vec<Vec<f64>> = match &seam.geom {
            SeamGeom::Point(coords) => vec![coords.clone()],
            SeamGeom::Curve { param_chart, coords, lo, hi } => (0..=6)
                .map(|k| {
                    let r = lo + (hi - lo) * k as f64 / 6.0;
                    let mut pa = Assignment::new();
                    pa.set_base(*param_chart, 0, r);
                    coords
                        .iter()
                        .map(|c| c.eval_numeric(ctx, &pa).expect("curve evaluates"))
                        .collect()
                })
                .collect(),
        };
        for point in samples {
            let mut a_low = Assignment::new();
            for (mu, v) in point.iter().enumerate() {
                a_low.set_base(ChartId(i), mu as u8, *v);
            }
            // map the point to the high chart
            let mut a_high = Assignment::new();
            for mu in 0..ctx.dimension() {
                let xj = transition.forward[mu].eval_numeric(ctx, &a_low)?;
                a_high.set_base(ChartId(j), mu as u8, xj);
            }
            for f in 0..ctx.fields().len() {
                let field = FieldId(f);
                let low = fields
                    .get(field, ChartId(i))
                    .ok_or_else(|| ActionError::MissingField(ctx.field_name(field).into(), i))?;
                let high = fields
                    .get(field, ChartId(j))
                    .ok_or_else(|| ActionError::MissingField(ctx.field_name(field).into(), j))?;
                let shift = &transition.shifts[f];
                let a = low.eval_numeric(ctx, &a_low)? + shift.eval_numeric(ctx, &a_low)?;
                let b = high.eval_numeric(ctx, &a_high)?;
                if (a - b).abs() > tol {
                    return Err(ActionError::SeamMismatch {
                        field: ctx.field_name(field).into(),
                        pair: (i, j),
                        point,
                        a,
                        b,
                        tol,
                    });
                }
            }
        }
    }
    Ok(())
}
