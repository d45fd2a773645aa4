//! Test support: seeded random generators for expressions, forms, covers and
//! cochains, plus independent numeric oracles (composite Simpson quadrature,
//! central-difference action gradients). Used by the test suites only; not
//! part of the public API surface.

use num::rational::BigRational;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::bicomplex::{LocalForm, ThetaGen, WedgeWord};
use crate::context::{ChartId, Context, FieldId};
use crate::symexpr::{Atom, JetExpr};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Shared 1-d context: three charts with coordinate `t`, one field `u`.
pub fn ctx_1d(jet_cap: usize) -> std::sync::Arc<Context> {
    Context::builder(1, jet_cap)
        .chart("U0", &["t"])
        .chart("U1", &["t"])
        .chart("U2", &["t"])
        .aux_chart("param", &["s"])
        .field("u")
        .build()
}

/// Shared 2-d context: two charts with coordinates `x`, `y`, one field `u`.
pub fn ctx_2d(jet_cap: usize) -> std::sync::Arc<Context> {
    Context::builder(2, jet_cap)
        .chart("U0", &["x", "y"])
        .chart("U1", &["x", "y"])
        .aux_chart("param", &["r"])
        .field("u")
        .build()
}

#[derive(Clone, Copy, Debug)]
pub struct ExprOpts {
    pub max_terms: usize,
    pub max_factors: usize,
    pub max_power: i32,
    pub max_jet_order: usize,
    pub coeff_range: i64,
}

impl Default for ExprOpts {
    fn default() -> Self {
        ExprOpts { max_terms: 3, max_factors: 2, max_power: 2, max_jet_order: 2, coeff_range: 4 }
    }
}

/// Random polynomial expression in the chart's base and jet coordinates.
pub fn gen_expr(rng: &mut StdRng, ctx: &Context, chart: ChartId, opts: ExprOpts) -> JetExpr {
    let n = ctx.dimension();
    let mut atoms: Vec<Atom> = Vec::new();
    for mu in 0..n as u8 {
        atoms.push(Atom::Base { chart, coord: mu });
    }
    for f in 0..ctx.fields().len() {
        for order in 0..=opts.max_jet_order {
            for index in crate::symexpr::all_multi_indices(n, order) {
                atoms.push(Atom::Jet { chart, field: FieldId(f), index });
            }
        }
    }
    let mut out = JetExpr::zero();
    let terms = rng.gen_range(1..=opts.max_terms);
    for _ in 0..terms {
        let mut num = rng.gen_range(-opts.coeff_range..=opts.coeff_range);
        if num == 0 {
            num = 1;
        }
        let den = rng.gen_range(1..=opts.coeff_range);
        let mut term = JetExpr::from_rational(BigRational::new(num.into(), den.into()));
        let factors = rng.gen_range(0..=opts.max_factors);
        for _ in 0..factors {
            let a = atoms[rng.gen_range(0..atoms.len())].clone();
            let p = rng.gen_range(1..=opts.max_power);
            term = term.mul(&JetExpr::atom(a).powi(p).unwrap());
        }
        out = out.add(&term);
    }
    out.rewritten(ctx)
}

/// Random homogeneous (p,q)-form with polynomial coefficients.
pub fn gen_form(
    rng: &mut StdRng,
    ctx: &Context,
    chart: ChartId,
    p: usize,
    q: usize,
    opts: ExprOpts,
) -> LocalForm {
    let n = ctx.dimension();
    assert!(q <= n);
    let mut thetas: Vec<ThetaGen> = Vec::new();
    for f in 0..ctx.fields().len() {
        for order in 0..=opts.max_jet_order {
            for index in crate::symexpr::all_multi_indices(n, order) {
                thetas.push(ThetaGen { field: FieldId(f), index });
            }
        }
    }
    let mut out = LocalForm::zero(chart, p, q);
    let terms = rng.gen_range(1..=opts.max_terms);
    for _ in 0..terms {
        // pick p distinct thetas and q distinct dxs
        let mut th: Vec<ThetaGen> = Vec::new();
        let mut guard = 0;
        while th.len() < p && guard < 200 {
            let cand = thetas[rng.gen_range(0..thetas.len())].clone();
            if !th.contains(&cand) {
                th.push(cand);
            }
            guard += 1;
        }
        if th.len() < p {
            continue;
        }
        th.sort();
        let mut dxs: Vec<u8> = (0..n as u8).collect();
        while dxs.len() > q {
            let k = rng.gen_range(0..dxs.len());
            dxs.remove(k);
        }
        let coeff = gen_expr(rng, ctx, chart, opts);
        if coeff.is_zero() {
            continue;
        }
        let word = WedgeWord { thetas: th, dxs };
        let term = LocalForm::from_term(ctx, chart, word, coeff).unwrap();
        out = out.add(&term).unwrap();
    }
    out
}

/// Composite Simpson quadrature, the independent reference for the
/// Gauss-Legendre layer. `panels` must be even.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels % 2 == 0 && panels >= 2);
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for k in 1..panels {
        let x = a + h * k as f64;
        acc += f(x) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// 2-d composite Simpson on a rectangle.
pub fn simpson2(
    f: impl Fn(f64, f64) -> f64,
    (ax, bx): (f64, f64),
    (ay, by): (f64, f64),
    panels: usize,
) -> f64 {
    simpson(|x| simpson(|y| f(x, y), ay, by, panels), ax, bx, panels)
}

use crate::cech::{Cochain, Cover, IntCochain, LagrangianCocycle, TotalElement, Transition};
use crate::symexpr::parse_expr;
use num::BigInt;

/// The flagship circle cover: three charts around the circle, transitions
/// t_1 = t_0, t_2 = t_1, t_2 = t_0 + 2*pi on the wrap-around overlap, no
/// triple overlaps, fields unshifted.
pub fn circle_cover(ctx: &Context) -> Cover {
    let c0 = ChartId(0);
    let c1 = ChartId(1);
    let c2 = ChartId(2);
    let id = |c: ChartId| vec![JetExpr::base(c, 0)];
    let transitions = vec![
        Transition { low: 0, high: 1, forward: id(c0), inverse: id(c1), shifts: vec![JetExpr::zero()] },
        Transition { low: 1, high: 2, forward: id(c1), inverse: id(c2), shifts: vec![JetExpr::zero()] },
        Transition {
            low: 0,
            high: 2,
            forward: vec![parse_expr(ctx, "t + 2*pi", c0).unwrap()],
            inverse: vec![parse_expr(ctx, "t - 2*pi", c2).unwrap()],
            shifts: vec![JetExpr::zero()],
        },
    ];
    Cover::new(ctx, vec![vec![0, 1], vec![1, 2], vec![0, 2]], transitions).unwrap()
}

/// The flagship cocycle over `circle_cover`: densities
/// (1/2 u_t^2 + t u_t) dt, first correction -2*pi*u on the wrap-around
/// overlap, empty integer level, period 1.
pub fn theta1_cocycle(ctx: &Context) -> LagrangianCocycle {
    let mut omega0 = Cochain::new(0, 0, 1);
    for i in 0..3 {
        let f = crate::bicomplex::parse_form(ctx, "(1/2*u_t^2 + t*u_t) * dx(t)", ChartId(i)).unwrap();
        omega0.set(vec![i], f).unwrap();
    }
    let mut omega1 = Cochain::new(1, 0, 0);
    omega1
        .set(vec![0, 2], crate::bicomplex::parse_form(ctx, "-2*pi*u", ChartId(0)).unwrap())
        .unwrap();
    LagrangianCocycle { omegas: vec![omega0, omega1], c: IntCochain::new(2), period: JetExpr::one() }
}

/// Random cover with exactly compatible transitions: every chart is an
/// affine reparameterization of a virtual global frame (diagonal in 2-d),
/// and field shifts difference per-chart potentials.
pub fn random_affine_cover(rng: &mut StdRng, ctx: &Context, nerve: Vec<Vec<usize>>) -> Cover {
    let n = ctx.dimension();
    let ncharts = ctx.charts().len();
    // per-chart scale (unit-ish rationals) and offset
    let mut scales: Vec<Vec<BigRational>> = Vec::new();
    let mut offsets: Vec<Vec<BigRational>> = Vec::new();
    for _ in 0..ncharts {
        let mut s = Vec::new();
        let mut o = Vec::new();
        for _ in 0..n {
            let num = *[1i64, 1, 2, 3, 1, 2].get(rng.gen_range(0..6)).unwrap();
            let den = *[1i64, 2, 1, 1, 3, 1].get(rng.gen_range(0..6)).unwrap();
            s.push(BigRational::new(BigInt::from(num), BigInt::from(den)));
            o.push(BigRational::new(BigInt::from(rng.gen_range(-3i64..=3)), BigInt::from(1)));
        }
        scales.push(s);
        offsets.push(o);
    }
    // per-chart field potentials sigma_i (frozen shifts difference them)
    let mut potentials: Vec<Vec<JetExpr>> = Vec::new();
    for i in 0..ncharts {
        let mut per_field = Vec::new();
        for _ in 0..ctx.fields().len() {
            let mut e = JetExpr::zero();
            for mu in 0..n as u8 {
                let k = rng.gen_range(-2i64..=2);
                if k != 0 {
                    e = e.add(&JetExpr::base(ChartId(i), mu).scale_int(k));
                }
            }
            per_field.push(e);
        }
        potentials.push(per_field);
    }

    let mut transitions = Vec::new();
    for s in &nerve {
        if s.len() != 2 {
            continue;
        }
        let (i, j) = (s[0], s[1]);
        let ci = ChartId(i);
        let cj = ChartId(j);
        let mut forward = Vec::new();
        let mut inverse = Vec::new();
        for mu in 0..n {
            // x_j = (a_j/a_i)(x_i - b_i) + b_j
            let a = &scales[j][mu] / &scales[i][mu];
            let xi = JetExpr::base(ci, mu as u8);
            let fwd = xi.sub(&JetExpr::from_rational(offsets[i][mu].clone()))
                .scale(&a)
                .add(&JetExpr::from_rational(offsets[j][mu].clone()));
            forward.push(fwd);
            let ainv = &scales[i][mu] / &scales[j][mu];
            let xj = JetExpr::base(cj, mu as u8);
            let inv = xj.sub(&JetExpr::from_rational(offsets[j][mu].clone()))
                .scale(&ainv)
                .add(&JetExpr::from_rational(offsets[i][mu].clone()));
            inverse.push(inv);
        }
        let mut shifts = Vec::new();
        for f in 0..ctx.fields().len() {
            // s_ij = sigma_j(x_j(x_i)) - sigma_i(x_i)
            let moved = crate::symexpr::subst_base_exprs(ctx, &potentials[j][f], cj, &forward).unwrap();
            shifts.push(moved.sub(&potentials[i][f]));
        }
        transitions.push(Transition { low: i, high: j, forward, inverse, shifts });
    }
    Cover::new(ctx, nerve, transitions).unwrap()
}

/// Full nerve on the first k charts (every subset of size >= 2).
pub fn full_nerve(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << k) {
        if mask.count_ones() >= 2 {
            let simplex: Vec<usize> = (0..k).filter(|&i| mask & (1 << i) != 0).collect();
            out.push(simplex);
        }
    }
    out
}

/// Random form-valued cochain at the given grading.
pub fn gen_cochain(
    rng: &mut StdRng,
    ctx: &Context,
    cover: &Cover,
    r: usize,
    p: usize,
    q: usize,
    opts: ExprOpts,
) -> Cochain {
    let mut out = Cochain::new(r, p, q);
    for simplex in cover.simplices_of_degree(r) {
        let chart = ChartId(simplex[0]);
        let f = gen_form(rng, ctx, chart, p, q, opts);
        out.set(simplex, f).unwrap();
    }
    out
}

/// Random mixed-degree total element (forms at several gradings plus an
/// integer piece).
pub fn gen_total_element(
    rng: &mut StdRng,
    ctx: &Context,
    cover: &Cover,
    opts: ExprOpts,
) -> TotalElement {
    let n = ctx.dimension();
    let mut forms = Vec::new();
    for _ in 0..3 {
        let p = rng.gen_range(0..=2);
        let q = rng.gen_range(0..=n);
        let r = rng.gen_range(0..=2usize);
        if cover.simplices_of_degree(r).is_empty() && r > 0 {
            continue;
        }
        forms.push(gen_cochain(rng, ctx, cover, r, p, q, opts));
    }
    let mut ints = Vec::new();
    let r = rng.gen_range(0..=1usize);
    let mut m = IntCochain::new(r);
    for simplex in cover.simplices_of_degree(r) {
        m.set(simplex, BigRational::new(BigInt::from(rng.gen_range(-3i64..=3)), BigInt::from(1)));
    }
    ints.push(m);
    TotalElement { forms, ints }
}

/// 1-d context with four charts (for randomized cover tests).
pub fn ctx_1d4(jet_cap: usize) -> std::sync::Arc<Context> {
    Context::builder(1, jet_cap)
        .chart("U0", &["t"])
        .chart("U1", &["t"])
        .chart("U2", &["t"])
        .chart("U3", &["t"])
        .aux_chart("param", &["s"])
        .field("u")
        .build()
}

/// Random polynomial in the base coordinates only (no jets), for closed-form
/// field samples.
pub fn gen_base_expr(rng: &mut StdRng, ctx: &Context, chart: ChartId, max_degree: usize) -> JetExpr {
    let n = ctx.dimension();
    let mut out = JetExpr::zero();
    let terms = rng.gen_range(2..=4);
    for _ in 0..terms {
        let mut num = rng.gen_range(-6i64..=6);
        if num == 0 {
            num = 2;
        }
        let den = rng.gen_range(1i64..=4);
        let mut term = JetExpr::from_rational(BigRational::new(num.into(), den.into()));
        let deg = rng.gen_range(0..=max_degree);
        for _ in 0..deg {
            let mu = rng.gen_range(0..n) as u8;
            term = term.mul(&JetExpr::base(chart, mu));
        }
        out = out.add(&term);
    }
    out
}
