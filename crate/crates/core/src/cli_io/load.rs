//! Loading and resolving problem files.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use num::rational::BigRational;
use num::BigInt;
use serde::Deserialize;
use thiserror::Error;

use crate::bicomplex::{parse_form, FormError, LocalForm, WedgeWord};
use crate::cech::{
    ActionError, Cell, CellDomain, CechError, Cochain, Corner, Cover, FieldAssignment,
    FundamentalCycle, IntCochain, LagrangianCocycle, Seam, SeamGeom, Transition,
};
use crate::context::{ChartId, Context, FieldId};
use crate::symexpr::{parse_expr, Assignment, ExprError, JetExpr};
use crate::theorem::FieldSolutionSample;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("dangling reference at {path}: {msg}")]
    Dangling { path: String, msg: String },
    #[error("expression error at {path}: {source}")]
    Expr { path: String, source: ExprError },
    #[error("form error at {path}: {source}")]
    Form { path: String, source: FormError },
    #[error(transparent)]
    Cover(#[from] CechError),
    #[error(transparent)]
    Action(#[from] ActionError),
}

// ---------------------------------------------------------------------------
// raw JSON shape

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    name: String,
    dimension: usize,
    #[serde(default = "default_jet_order")]
    jet_order: usize,
    #[serde(default = "default_period")]
    period: String,
    #[serde(default)]
    constants: Vec<RawConstant>,
    #[serde(default)]
    functions: Vec<RawFunction>,
    fields: Vec<String>,
    charts: Vec<RawChart>,
    #[serde(default)]
    nerve: Vec<Vec<usize>>,
    #[serde(default)]
    transitions: Vec<RawTransition>,
    densities: BTreeMap<String, String>,
    #[serde(default)]
    cocycle: Option<RawCocycle>,
    #[serde(default)]
    cycle: Option<RawCycle>,
    #[serde(default)]
    field_assignment: Option<BTreeMap<String, BTreeMap<String, String>>>,
    #[serde(default)]
    solution_sample: Option<RawSample>,
}

fn default_jet_order() -> usize {
    4
}

fn default_period() -> String {
    "1".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstant {
    name: String,
    #[serde(default)]
    value: Option<f64>,
    #[serde(default)]
    power_rule: Option<RawPowerRule>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPowerRule {
    power: u32,
    replacement: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunction {
    name: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChart {
    id: String,
    coords: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransition {
    pair: [usize; 2],
    /// High-chart coordinates as expressions in the low chart.
    map: BTreeMap<String, String>,
    /// Low-chart coordinates as expressions in the high chart.
    inverse: BTreeMap<String, String>,
    /// Frozen field shifts u_high = u_low + shift, in low-chart coordinates.
    #[serde(default)]
    shifts: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCocycle {
    /// Cech degree (as a string key) -> simplex "i,j,..." -> form text.
    #[serde(default)]
    components: BTreeMap<String, BTreeMap<String, String>>,
    /// Simplex "i,j,k" -> integer level.
    #[serde(default)]
    c: BTreeMap<String, i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCycle {
    cells: Vec<RawCell>,
    #[serde(default)]
    seams: Vec<RawSeam>,
    #[serde(default)]
    corners: Vec<RawCorner>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    chart: String,
    #[serde(default)]
    lo: Option<Vec<String>>,
    #[serde(default)]
    hi: Option<Vec<String>>,
    #[serde(default)]
    vertices: Option<[[String; 2]; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeam {
    simplex: [usize; 2],
    #[serde(default)]
    point: Option<Vec<String>>,
    #[serde(default)]
    curve: Option<RawCurve>,
    sign: i64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurve {
    /// Name of the curve parameter symbol.
    param: String,
    coords: Vec<String>,
    range: [String; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorner {
    simplex: [usize; 3],
    point: Vec<String>,
    sign: i64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSample {
    fields: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default)]
    jacobi: Vec<BTreeMap<String, BTreeMap<String, String>>>,
}

// ---------------------------------------------------------------------------
// resolved problem

/// A fully resolved problem: declaration context, validated cover, parsed
/// densities and optional precomputed cocycle components, cycle data, and
/// sample sections.
#[derive(Debug)]
pub struct ProblemFile {
    pub name: String,
    pub ctx: Arc<Context>,
    pub cover: Cover,
    pub densities: Cochain,
    /// Precomputed correction components (q >= 1), when the file ships them.
    pub components: Option<Vec<Cochain>>,
    pub declared_level: IntCochain,
    pub has_declared_level: bool,
    pub period: JetExpr,
    pub cycle: Option<FundamentalCycle>,
    pub field_assignment: Option<FieldAssignment>,
    pub solution_sample: Option<FieldSolutionSample>,
}

impl ProblemFile {
    /// Assembles the cocycle from precomputed components, or `None` when the
    /// file has none and descent is required.
    pub fn precomputed_cocycle(&self) -> Option<LagrangianCocycle> {
        let n = self.ctx.dimension();
        let components = self.components.as_ref()?;
        let mut omegas = vec![self.densities.clone()];
        omegas.extend(components.iter().cloned());
        debug_assert_eq!(omegas.len(), n + 1);
        Some(LagrangianCocycle {
            omegas,
            c: self.declared_level.clone(),
            period: self.period.clone(),
        })
    }
}

pub fn load_problem(path: impl AsRef<Path>, jet_order_override: Option<usize>) -> Result<ProblemFile, ProblemError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ProblemError::Io { path: path.display().to_string(), source })?;
    problem_from_str(&text, jet_order_override)
}

pub fn problem_from_str(text: &str, jet_order_override: Option<usize>) -> Result<ProblemFile, ProblemError> {
    let raw: RawProblem = serde_json::from_str(text)?;
    resolve(raw, jet_order_override)
}

fn schema(path: impl Into<String>, msg: impl Into<String>) -> ProblemError {
    ProblemError::Schema { path: path.into(), msg: msg.into() }
}

fn expr_err(path: impl Into<String>) -> impl FnOnce(ExprError) -> ProblemError {
    let p = path.into();
    move |source| match source {
        ExprError::UndeclaredIdentifier { ref name, pos } => ProblemError::Dangling {
            path: p,
            msg: format!("undeclared identifier `{name}` at position {pos}"),
        },
        other => ProblemError::Expr { path: p, source: other },
    }
}

fn form_err(path: impl Into<String>) -> impl FnOnce(FormError) -> ProblemError {
    let p = path.into();
    move |source| match source {
        FormError::Expr(ExprError::UndeclaredIdentifier { ref name, pos }) => ProblemError::Dangling {
            path: p,
            msg: format!("undeclared identifier `{name}` at position {pos}"),
        },
        other => ProblemError::Form { path: p, source: other },
    }
}

fn resolve(raw: RawProblem, jet_order_override: Option<usize>) -> Result<ProblemFile, ProblemError> {
    let n = raw.dimension;
    if n < 1 {
        return Err(schema("dimension", "base dimension must be at least 1"));
    }
    let jet_order = jet_order_override.unwrap_or(raw.jet_order);
    if jet_order < 1 {
        return Err(schema("jet_order", "jet-order cap must be at least 1"));
    }
    for chart in &raw.charts {
        if chart.coords.len() != n {
            return Err(schema(
                format!("charts[{}]", chart.id),
                format!("expected {n} coordinates, found {}", chart.coords.len()),
            ));
        }
    }

    // collect curve parameter names for auxiliary charts
    let mut params: Vec<String> = Vec::new();
    if let Some(cycle) = &raw.cycle {
        for seam in &cycle.seams {
            if let Some(curve) = &seam.curve {
                if !params.contains(&curve.param) {
                    params.push(curve.param.clone());
                }
            }
        }
    }

    // two-phase context build: constant power rules parse against a context
    // with the same declarations minus the rules
    let build = |with_rules: Option<&BTreeMap<String, (u32, JetExpr)>>| {
        let mut b = Context::builder(n, jet_order);
        for chart in &raw.charts {
            let coords: Vec<&str> = chart.coords.iter().map(String::as_str).collect();
            b = b.chart(&chart.id, &coords);
        }
        for p in &params {
            b = b.aux_chart(&format!("param:{p}"), &[p]);
        }
        for f in &raw.fields {
            b = b.field(f);
        }
        for c in &raw.constants {
            match with_rules.and_then(|r| r.get(&c.name)) {
                Some((power, replacement)) => {
                    b = b.constant_with_rule(&c.name, c.value, *power, replacement.clone());
                }
                None => {
                    b = b.constant(&c.name, c.value);
                }
            }
        }
        for f in &raw.functions {
            b = b.function(&f.name, None, None);
        }
        b.build()
    };
    let ctx0 = build(None);
    let chart0 = ChartId(0);
    let mut rules: BTreeMap<String, (u32, JetExpr)> = BTreeMap::new();
    for c in &raw.constants {
        if let Some(rule) = &c.power_rule {
            let repl = parse_expr(&ctx0, &rule.replacement, chart0)
                .map_err(expr_err(format!("constants[{}].power_rule", c.name)))?;
            rules.insert(c.name.clone(), (rule.power, repl));
        }
    }
    let ctx = if rules.is_empty() { ctx0 } else { build(Some(&rules)) };

    let period = parse_expr(&ctx, &raw.period, chart0).map_err(expr_err("period"))?;
    if period.is_zero() || period.jet_atoms().next().is_some() || period.chart().is_some() {
        return Err(schema("period", "the period must be a nonzero constant expression"));
    }

    // transitions
    let chart_index = |id: &str| -> Result<usize, ProblemError> {
        ctx.chart_by_name(id)
            .map(|c| c.0)
            .ok_or_else(|| ProblemError::Dangling { path: "charts".into(), msg: format!("unknown chart id `{id}`") })
    };
    let mut transitions = Vec::new();
    for (k, t) in raw.transitions.iter().enumerate() {
        let [i, j] = t.pair;
        if i >= ctx.principal_count() || j >= ctx.principal_count() || i >= j {
            return Err(schema(format!("transitions[{k}].pair"), "pair must be two chart indices i < j"));
        }
        let (ci, cj) = (ChartId(i), ChartId(j));
        let mut forward = Vec::with_capacity(n);
        for mu in 0..n {
            let cname = ctx.coord_name(cj, mu as u8).to_string();
            let text = t.map.get(&cname).ok_or_else(|| {
                schema(format!("transitions[{k}].map"), format!("missing coordinate `{cname}`"))
            })?;
            forward.push(parse_expr(&ctx, text, ci).map_err(expr_err(format!("transitions[{k}].map.{cname}")))?);
        }
        let mut inverse = Vec::with_capacity(n);
        for mu in 0..n {
            let cname = ctx.coord_name(ci, mu as u8).to_string();
            let text = t.inverse.get(&cname).ok_or_else(|| {
                schema(format!("transitions[{k}].inverse"), format!("missing coordinate `{cname}`"))
            })?;
            inverse
                .push(parse_expr(&ctx, text, cj).map_err(expr_err(format!("transitions[{k}].inverse.{cname}")))?);
        }
        let mut shifts = Vec::with_capacity(ctx.fields().len());
        for f in 0..ctx.fields().len() {
            let fname = ctx.field_name(FieldId(f)).to_string();
            let shift = match t.shifts.get(&fname) {
                Some(text) => {
                    let e = parse_expr(&ctx, text, ci)
                        .map_err(expr_err(format!("transitions[{k}].shifts.{fname}")))?;
                    if e.jet_atoms().next().is_some() {
                        return Err(schema(
                            format!("transitions[{k}].shifts.{fname}"),
                            "field shifts must be frozen: base coordinates only",
                        ));
                    }
                    e
                }
                None => JetExpr::zero(),
            };
            shifts.push(shift);
        }
        transitions.push(Transition { low: i, high: j, forward, inverse, shifts });
    }
    for shift_name in raw.transitions.iter().flat_map(|t| t.shifts.keys()) {
        if ctx.field_by_name(shift_name).is_none() {
            return Err(ProblemError::Dangling {
                path: "transitions.shifts".into(),
                msg: format!("unknown field `{shift_name}`"),
            });
        }
    }
    let cover = Cover::new(&ctx, raw.nerve.clone(), transitions)?;

    // densities
    let mut densities = Cochain::new(0, 0, n);
    let vol = WedgeWord { thetas: vec![], dxs: (0..n as u8).collect() };
    for (chart_id, text) in &raw.densities {
        let i = chart_index(chart_id)?;
        let lagrangian = parse_expr(&ctx, text, ChartId(i))
            .map_err(expr_err(format!("densities.{chart_id}")))?;
        let form = LocalForm::from_term(&ctx, ChartId(i), vol.clone(), lagrangian)
            .map_err(form_err(format!("densities.{chart_id}")))?;
        densities
            .set(vec![i], form)
            .map_err(|e| schema(format!("densities.{chart_id}"), e.to_string()))?;
    }
    // precomputed cocycle components
    let mut components: Option<Vec<Cochain>> = None;
    let mut declared_level = IntCochain::new(n + 1);
    let mut has_declared_level = false;
    if let Some(raw_cocycle) = &raw.cocycle {
        let mut comps = Vec::with_capacity(n);
        for q in 1..=n {
            let mut cochain = Cochain::new(q, 0, n - q);
            if let Some(values) = raw_cocycle.components.get(&q.to_string()) {
                for (key, text) in values {
                    let simplex = parse_simplex(key, q + 1, ctx.principal_count())?;
                    let anchor = ChartId(simplex[0]);
                    let form = parse_form(&ctx, text, anchor)
                        .map_err(form_err(format!("cocycle.components.{q}.{key}")))?;
                    cochain
                        .set(simplex, form)
                        .map_err(|e| schema(format!("cocycle.components.{q}.{key}"), e.to_string()))?;
                }
            }
            comps.push(cochain);
        }
        for (key, unknown_q) in raw_cocycle.components.keys().filter_map(|k| {
            k.parse::<usize>().ok().filter(|q| *q == 0 || *q > n).map(|q| (k.clone(), q))
        }) {
            return Err(schema(
                format!("cocycle.components.{key}"),
                format!("component degree {unknown_q} out of range 1..={n}"),
            ));
        }
        for (key, level) in &raw_cocycle.c {
            let simplex = parse_simplex(key, n + 2, ctx.principal_count())?;
            declared_level.set(simplex, BigRational::from_integer(BigInt::from(*level)));
            has_declared_level = true;
        }
        components = Some(comps);
    }

    // numeric evaluation of constant coordinate expressions
    let const_eval = |text: &str, chart: ChartId, path: String| -> Result<f64, ProblemError> {
        let e = parse_expr(&ctx, text, chart).map_err(expr_err(path.clone()))?;
        e.eval_numeric(&ctx, &Assignment::new())
            .map_err(|err| schema(path, format!("must be a constant expression: {err}")))
    };

    // cycle
    let mut cycle = None;
    if let Some(raw_cycle) = &raw.cycle {
        let mut cells = Vec::new();
        for (k, cell) in raw_cycle.cells.iter().enumerate() {
            let i = chart_index(&cell.chart)?;
            let chart = ChartId(i);
            let domain = match (&cell.lo, &cell.hi, &cell.vertices) {
                (Some(lo), Some(hi), None) => {
                    if lo.len() != n || hi.len() != n {
                        return Err(schema(
                            format!("cycle.cells[{k}]"),
                            format!("lo/hi must have {n} entries"),
                        ));
                    }
                    let lo: Vec<f64> = lo
                        .iter()
                        .enumerate()
                        .map(|(m, t)| const_eval(t, chart, format!("cycle.cells[{k}].lo[{m}]")))
                        .collect::<Result<_, _>>()?;
                    let hi: Vec<f64> = hi
                        .iter()
                        .enumerate()
                        .map(|(m, t)| const_eval(t, chart, format!("cycle.cells[{k}].hi[{m}]")))
                        .collect::<Result<_, _>>()?;
                    match n {
                        1 => CellDomain::Interval { lo: lo[0], hi: hi[0] },
                        2 => CellDomain::Rect { lo: [lo[0], lo[1]], hi: [hi[0], hi[1]] },
                        _ => return Err(schema(format!("cycle.cells[{k}]"), "cells support n <= 2")),
                    }
                }
                (None, None, Some(verts)) => {
                    if n != 2 {
                        return Err(schema(format!("cycle.cells[{k}]"), "triangle cells require n = 2"));
                    }
                    let mut vv = [[0.0; 2]; 3];
                    for (a, v) in verts.iter().enumerate() {
                        for (b, t) in v.iter().enumerate() {
                            vv[a][b] = const_eval(t, chart, format!("cycle.cells[{k}].vertices[{a}][{b}]"))?;
                        }
                    }
                    CellDomain::Triangle { verts: vv }
                }
                _ => {
                    return Err(schema(
                        format!("cycle.cells[{k}]"),
                        "a cell declares either lo/hi bounds or triangle vertices",
                    ))
                }
            };
            cells.push(Cell { chart: i, domain });
        }
        let mut seams = Vec::new();
        for (k, seam) in raw_cycle.seams.iter().enumerate() {
            let [i, j] = seam.simplex;
            if !cover.contains(&vec![i, j]) {
                return Err(ProblemError::Dangling {
                    path: format!("cycle.seams[{k}]"),
                    msg: format!("seam simplex [{i},{j}] is not in the nerve"),
                });
            }
            let anchor = ChartId(i);
            let geom = match (&seam.point, &seam.curve) {
                (Some(p), None) => {
                    let coords: Vec<f64> = p
                        .iter()
                        .enumerate()
                        .map(|(m, t)| const_eval(t, anchor, format!("cycle.seams[{k}].point[{m}]")))
                        .collect::<Result<_, _>>()?;
                    SeamGeom::Point(coords)
                }
                (None, Some(curve)) => {
                    let param_chart = ctx
                        .chart_by_name(&format!("param:{}", curve.param))
                        .expect("parameter chart declared");
                    let coords: Vec<JetExpr> = curve
                        .coords
                        .iter()
                        .enumerate()
                        .map(|(m, t)| {
                            parse_expr(&ctx, t, param_chart)
                                .map_err(expr_err(format!("cycle.seams[{k}].curve.coords[{m}]")))
                        })
                        .collect::<Result<_, _>>()?;
                    if coords.len() != n {
                        return Err(schema(
                            format!("cycle.seams[{k}].curve"),
                            format!("curve must give {n} coordinates"),
                        ));
                    }
                    let lo = const_eval(&curve.range[0], param_chart, format!("cycle.seams[{k}].curve.range[0]"))?;
                    let hi = const_eval(&curve.range[1], param_chart, format!("cycle.seams[{k}].curve.range[1]"))?;
                    SeamGeom::Curve { param_chart, coords, lo, hi }
                }
                _ => {
                    return Err(schema(
                        format!("cycle.seams[{k}]"),
                        "a seam declares either a point or a curve",
                    ))
                }
            };
            seams.push(Seam { pair: (i, j), geom, sign: seam.sign });
        }
        let mut corners = Vec::new();
        for (k, corner) in raw_cycle.corners.iter().enumerate() {
            let [i, j, l] = corner.simplex;
            if !cover.contains(&vec![i, j, l]) {
                return Err(ProblemError::Dangling {
                    path: format!("cycle.corners[{k}]"),
                    msg: format!("corner simplex [{i},{j},{l}] is not in the nerve"),
                });
            }
            let anchor = ChartId(i);
            let point: Vec<f64> = corner
                .point
                .iter()
                .enumerate()
                .map(|(m, t)| const_eval(t, anchor, format!("cycle.corners[{k}].point[{m}]")))
                .collect::<Result<_, _>>()?;
            corners.push(Corner { triple: (i, j, l), point, sign: corner.sign });
        }
        cycle = Some(FundamentalCycle { cells, seams, corners });
    }

    // field assignment (used by the action pairing)
    let field_assignment = match &raw.field_assignment {
        None => None,
        Some(map) => Some(parse_assignment(&ctx, map, "field_assignment", &chart_index)?),
    };

    // solution sample (used by the on-shell checks)
    let solution_sample = match &raw.solution_sample {
        None => None,
        Some(sample) => {
            let fields = parse_assignment(&ctx, &sample.fields, "solution_sample.fields", &chart_index)?;
            let mut jacobi = Vec::new();
            for (k, j) in sample.jacobi.iter().enumerate() {
                jacobi.push(parse_assignment(
                    &ctx,
                    j,
                    &format!("solution_sample.jacobi[{k}]"),
                    &chart_index,
                )?);
            }
            Some(FieldSolutionSample { fields, jacobi })
        }
    };

    Ok(ProblemFile {
        name: raw.name,
        ctx,
        cover,
        densities,
        components,
        declared_level,
        has_declared_level,
        period,
        cycle,
        field_assignment,
        solution_sample,
    })
}

fn parse_assignment(
    ctx: &Context,
    map: &BTreeMap<String, BTreeMap<String, String>>,
    path: &str,
    chart_index: &impl Fn(&str) -> Result<usize, ProblemError>,
) -> Result<FieldAssignment, ProblemError> {
    let mut out = FieldAssignment::new();
    for (fname, per_chart) in map {
        let field = ctx.field_by_name(fname).ok_or_else(|| ProblemError::Dangling {
            path: path.into(),
            msg: format!("unknown field `{fname}`"),
        })?;
        for (chart_id, text) in per_chart {
            let i = chart_index(chart_id)?;
            let e = parse_expr(ctx, text, ChartId(i))
                .map_err(expr_err(format!("{path}.{fname}.{chart_id}")))?;
            if e.jet_atoms().next().is_some() {
                return Err(schema(
                    format!("{path}.{fname}.{chart_id}"),
                    "closed-form assignments must not mention jet coordinates",
                ));
            }
            out.set(field, ChartId(i), e);
        }
    }
    Ok(out)
}

fn parse_simplex(key: &str, len: usize, ncharts: usize) -> Result<Vec<usize>, ProblemError> {
    let parts: Result<Vec<usize>, _> = key.split(',').map(|p| p.trim().parse::<usize>()).collect();
    let simplex = parts.map_err(|_| schema(format!("simplex key `{key}`"), "expected `i,j,...`"))?;
    if simplex.len() != len
        || simplex.windows(2).any(|w| w[0] >= w[1])
        || simplex.iter().any(|&i| i >= ncharts)
    {
        return Err(schema(
            format!("simplex key `{key}`"),
            format!("expected {len} strictly increasing chart indices below {ncharts}"),
        ));
    }
    Ok(simplex)
}
