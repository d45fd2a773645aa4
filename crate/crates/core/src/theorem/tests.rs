use super::*;
use crate::bicomplex::parse_form;
use crate::cech::{Cell, CellDomain, Convention, FieldAssignment, FundamentalCycle, Seam, SeamGeom, Transition};
use crate::context::{ChartId, FieldId};
use crate::report::CheckStatus;
use crate::symexpr::parse_expr;
use crate::testkit;

const TWO_THIRDS_PI: f64 = 2.0 * std::f64::consts::FRAC_PI_3;

fn theta1() -> (std::sync::Arc<Context>, Cover, LagrangianCocycle) {
    let ctx = testkit::ctx_1d(4);
    let cover = testkit::circle_cover(&ctx);
    let omega = testkit::theta1_cocycle(&ctx);
    (ctx, cover, omega)
}

fn theta1_cycle(_ctx: &Context) -> FundamentalCycle {
    let pi = std::f64::consts::PI;
    FundamentalCycle {
        cells: vec![
            Cell { chart: 0, domain: CellDomain::Interval { lo: 0.0, hi: TWO_THIRDS_PI } },
            Cell { chart: 1, domain: CellDomain::Interval { lo: TWO_THIRDS_PI, hi: 2.0 * TWO_THIRDS_PI } },
            Cell { chart: 2, domain: CellDomain::Interval { lo: 2.0 * TWO_THIRDS_PI, hi: 2.0 * pi } },
        ],
        seams: vec![
            Seam { pair: (0, 1), geom: SeamGeom::Point(vec![TWO_THIRDS_PI]), sign: -1 },
            Seam { pair: (1, 2), geom: SeamGeom::Point(vec![2.0 * TWO_THIRDS_PI]), sign: -1 },
            Seam { pair: (0, 2), geom: SeamGeom::Point(vec![0.0]), sign: 1 },
        ],
        corners: vec![],
    }
}

#[test]
fn flagship_theorem_run() {
    let (ctx, cover, omega) = theta1();
    let run = run_theorem1(&ctx, &cover, &omega, Convention::DeligneDegree).unwrap();
    assert!(run.report.passed(), "{}", run.report.render_text());

    let expected_source = parse_form(&ctx, "-(u_tt + 1) * theta(u,[]) ^ dx(t)", ChartId(0)).unwrap();
    assert_eq!(run.source.representative(0), expected_source);
    let g0 = run.cartan.gammas[0].value(&vec![0]);
    assert_eq!(g0, parse_form(&ctx, "(u_t + t) * theta(u,[])", ChartId(0)).unwrap());

    // the opposite-sign variant of the top step must be visibly nonzero
    let variant = run
        .report
        .checks
        .iter()
        .find(|c| c.name == "top_step_opposite_sign")
        .expect("audit entry present");
    assert_eq!(variant.status, CheckStatus::Info);
    assert!(variant.residual.as_deref() != Some("0"));
}

#[test]
fn single_chart_reduces_to_decomposition() {
    let ctx = crate::context::Context::builder(1, 4).chart("U0", &["t"]).field("u").build();
    let cover = Cover::new(&ctx, vec![], vec![]).unwrap();
    let mut omega0 = crate::cech::Cochain::new(0, 0, 1);
    omega0.set(vec![0], parse_form(&ctx, "1/2*u_t^2 * dx(t)", ChartId(0)).unwrap()).unwrap();
    let omega = LagrangianCocycle {
        omegas: vec![omega0, crate::cech::Cochain::new(1, 0, 0)],
        c: crate::cech::IntCochain::new(2),
        period: crate::symexpr::JetExpr::one(),
    };
    let run = run_theorem1(&ctx, &cover, &omega, Convention::DeligneDegree).unwrap();
    assert!(run.report.passed(), "{}", run.report.render_text());
    assert_eq!(run.source.representative(0), parse_form(&ctx, "-u_tt * theta(u,[]) ^ dx(t)", ChartId(0)).unwrap());
    assert_eq!(run.cartan.gammas.len(), 1);
    assert_eq!(run.cartan.gammas[0].value(&vec![0]), parse_form(&ctx, "u_t * theta(u,[])", ChartId(0)).unwrap());
}

fn poisson2() -> (std::sync::Arc<Context>, Cover, LagrangianCocycle) {
    let ctx = testkit::ctx_2d(4);
    let id = |c: ChartId| vec![crate::symexpr::JetExpr::base(c, 0), crate::symexpr::JetExpr::base(c, 1)];
    let transitions = vec![Transition {
        low: 0,
        high: 1,
        forward: id(ChartId(0)),
        inverse: id(ChartId(1)),
        shifts: vec![crate::symexpr::JetExpr::zero()],
    }];
    let cover = Cover::new(&ctx, vec![vec![0, 1]], transitions).unwrap();
    let mut omega0 = crate::cech::Cochain::new(0, 0, 2);
    for i in 0..2 {
        omega0
            .set(vec![i], parse_form(&ctx, "(1/2*u_x^2 + 1/2*u_y^2) * dx(x) ^ dx(y)", ChartId(i)).unwrap())
            .unwrap();
    }
    let omega = LagrangianCocycle {
        omegas: vec![omega0, crate::cech::Cochain::new(1, 0, 1), crate::cech::Cochain::new(2, 0, 0)],
        c: crate::cech::IntCochain::new(3),
        period: crate::symexpr::JetExpr::one(),
    };
    (ctx, cover, omega)
}

#[test]
fn laplace_two_chart_run() {
    let (ctx, cover, omega) = poisson2();
    let run = run_theorem1(&ctx, &cover, &omega, Convention::DeligneDegree).unwrap();
    assert!(run.report.passed(), "{}", run.report.render_text());
    assert_eq!(
        run.source.representative(0),
        parse_form(&ctx, "-(u_xx + u_yy) * theta(u,[]) ^ dx(x) ^ dx(y)", ChartId(0)).unwrap()
    );
    // gamma^(1) vanishes: equal densities, identity transitions
    assert!(run.cartan.gammas[1].is_zero());
}

#[test]
fn universal_current_of_flagship() {
    let (ctx, cover, omega) = theta1();
    let run = run_theorem1(&ctx, &cover, &omega, Convention::DeligneDegree).unwrap();
    let current = universal_current(&ctx, &run.cartan).unwrap();
    // theta^(0) = d_v gamma^(0) is chart-independent here
    let expect = parse_form(&ctx, "-theta(u,[]) ^ theta(u,[t])", ChartId(0)).unwrap();
    for i in 0..3 {
        let v = current.thetas[0].value(&vec![i]);
        let w = parse_form(
            &ctx,
            "-theta(u,[]) ^ theta(u,[t])",
            ChartId(i),
        )
        .unwrap();
        assert_eq!(v, w);
    }
    let _ = expect;

    let report =
        verify_prop1(&ctx, &cover, &current, &run.source, &omega.period, Convention::DeligneDegree)
            .unwrap();
    assert!(report.passed(), "{}", report.render_text());
    let sign_entry = report.checks.iter().find(|c| c.name == "current_total_differential").unwrap();
    assert_eq!(sign_entry.sign, Some(-1), "expected the negative sign to close the current");
}

#[test]
fn zero_cartan_gives_zero_current() {
    let ctx = testkit::ctx_1d(4);
    let cartan = CartanCochain { gammas: vec![crate::cech::Cochain::new(0, 1, 0)] };
    let current = universal_current(&ctx, &cartan).unwrap();
    assert!(current.thetas[0].is_zero());
}

#[test]
fn current_identities_for_laplace() {
    let (ctx, cover, omega) = poisson2();
    let run = run_theorem1(&ctx, &cover, &omega, Convention::DeligneDegree).unwrap();
    let current = universal_current(&ctx, &run.cartan).unwrap();
    let report =
        verify_prop1(&ctx, &cover, &current, &run.source, &omega.period, Convention::DeligneDegree)
            .unwrap();
    assert!(report.passed(), "{}", report.render_text());
}

#[test]
fn perturbed_correction_component_fails_loudly() {
    let (ctx, cover, mut omega) = theta1();
    // add a non-exact term to the correction on the winding overlap
    let broken = omega.omegas[1]
        .value(&vec![0, 2])
        .add(&parse_form(&ctx, "u", ChartId(0)).unwrap())
        .unwrap();
    omega.omegas[1].set(vec![0, 2], broken).unwrap();
    let report =
        crate::cech::verify_lagrangian_cocycle(&ctx, &cover, &omega, Convention::DeligneDegree)
            .unwrap();
    assert!(!report.passed());
    let failure = report.failures().next().unwrap();
    assert!(failure.residual.as_deref().is_some_and(|r| r != "0"), "{failure:?}");

    let run = run_theorem1(&ctx, &cover, &omega, Convention::DeligneDegree).unwrap();
    assert!(!run.report.passed());
}

#[test]
fn perturbed_transition_fails_loudly() {
    let ctx = testkit::ctx_1d(4);
    let c0 = ChartId(0);
    let c2 = ChartId(2);
    let id = |c: ChartId| vec![crate::symexpr::JetExpr::base(c, 0)];
    let transitions = vec![
        Transition { low: 0, high: 1, forward: id(c0), inverse: id(ChartId(1)), shifts: vec![crate::symexpr::JetExpr::zero()] },
        Transition { low: 1, high: 2, forward: id(ChartId(1)), inverse: id(c2), shifts: vec![crate::symexpr::JetExpr::zero()] },
        Transition {
            low: 0,
            high: 2,
            forward: vec![parse_expr(&ctx, "t + 2*pi + 1/10", c0).unwrap()],
            inverse: vec![parse_expr(&ctx, "t - 2*pi - 1/10", c2).unwrap()],
            shifts: vec![crate::symexpr::JetExpr::zero()],
        },
    ];
    let cover = Cover::new(&ctx, vec![vec![0, 1], vec![1, 2], vec![0, 2]], transitions).unwrap();
    let omega = testkit::theta1_cocycle(&ctx);
    let run = run_theorem1(&ctx, &cover, &omega, Convention::DeligneDegree).unwrap();
    assert!(!run.report.passed());
    let failure = run.report.failures().next().unwrap();
    assert!(failure.residual.as_deref().is_some_and(|r| r != "0"));
}

fn theta1_solution(ctx: &Context) -> FieldSolutionSample {
    let u = FieldId(0);
    let mut fields = FieldAssignment::new();
    fields.set(u, ChartId(0), parse_expr(ctx, "-t^2/2 + t", ChartId(0)).unwrap());
    fields.set(u, ChartId(1), parse_expr(ctx, "-t^2/2 + t", ChartId(1)).unwrap());
    fields.set(u, ChartId(2), parse_expr(ctx, "-(t - 2*pi)^2/2 + (t - 2*pi)", ChartId(2)).unwrap());
    let mut xi = FieldAssignment::new();
    for i in 0..3 {
        xi.set(u, ChartId(i), parse_expr(ctx, "1", ChartId(i)).unwrap());
    }
    let mut eta = FieldAssignment::new();
    eta.set(u, ChartId(0), parse_expr(ctx, "t", ChartId(0)).unwrap());
    eta.set(u, ChartId(1), parse_expr(ctx, "t", ChartId(1)).unwrap());
    eta.set(u, ChartId(2), parse_expr(ctx, "t - 2*pi", ChartId(2)).unwrap());
    FieldSolutionSample { fields, jacobi: vec![xi, eta] }
}

#[test]
fn on_shell_flagship_solution() {
    let (ctx, cover, omega) = theta1();
    let run = run_theorem1(&ctx, &cover, &omega, Convention::DeligneDegree).unwrap();
    let cycle = theta1_cycle(&ctx);
    let sample = theta1_solution(&ctx);
    let report =
        on_shell_check(&ctx, &cover, &run.source, &cycle, &sample, &OnShellOptions::default())
            .unwrap();
    assert!(report.passed(), "{}", report.render_text());
}

#[test]
fn off_shell_sample_is_rejected() {
    let (ctx, cover, omega) = theta1();
    let run = run_theorem1(&ctx, &cover, &omega, Convention::DeligneDegree).unwrap();
    let cycle = theta1_cycle(&ctx);
    let mut sample = theta1_solution(&ctx);
    let mut fields = FieldAssignment::new();
    for i in 0..3 {
        fields.set(FieldId(0), ChartId(i), crate::symexpr::JetExpr::zero());
    }
    sample.fields = fields;
    let err = on_shell_check(&ctx, &cover, &run.source, &cycle, &sample, &OnShellOptions::default())
        .unwrap_err();
    match err {
        TheoremError::NotASolution { value, .. } => {
            assert!((value - 1.0).abs() < 1e-12, "residual should be exactly 1, got {value}")
        }
        other => panic!("expected NotASolution, got {other}"),
    }
}

#[test]
fn on_shell_harmonic_solution() {
    let (ctx, cover, omega) = poisson2();
    let run = run_theorem1(&ctx, &cover, &omega, Convention::DeligneDegree).unwrap();
    let cycle = FundamentalCycle {
        cells: vec![
            Cell { chart: 0, domain: CellDomain::Rect { lo: [0.0, 0.0], hi: [1.0, 1.0] } },
            Cell { chart: 1, domain: CellDomain::Rect { lo: [1.0, 0.0], hi: [2.0, 1.0] } },
        ],
        seams: vec![{
            let param = ctx.chart_by_name("param").unwrap();
            Seam {
                pair: (0, 1),
                geom: SeamGeom::Curve {
                    param_chart: param,
                    coords: vec![
                        parse_expr(&ctx, "1", param).unwrap(),
                        parse_expr(&ctx, "r", param).unwrap(),
                    ],
                    lo: 0.0,
                    hi: 1.0,
                },
                sign: -1,
            }
        }],
        corners: vec![],
    };
    let u = FieldId(0);
    let mut fields = FieldAssignment::new();
    for i in 0..2 {
        fields.set(u, ChartId(i), parse_expr(&ctx, "x^2 - y^2", ChartId(i)).unwrap());
    }
    let mut xi = FieldAssignment::new();
    let mut eta = FieldAssignment::new();
    for i in 0..2 {
        xi.set(u, ChartId(i), parse_expr(&ctx, "x", ChartId(i)).unwrap());
        eta.set(u, ChartId(i), parse_expr(&ctx, "x*y", ChartId(i)).unwrap());
    }
    let sample = FieldSolutionSample { fields, jacobi: vec![xi, eta] };
    let report =
        on_shell_check(&ctx, &cover, &run.source, &cycle, &sample, &OnShellOptions::default())
            .unwrap();
    assert!(report.passed(), "{}", report.render_text());
}

#[test]
fn source_gluing_failure_is_an_error() {
    // a scaling transition makes the pulled-back source form differ by
    // Jacobian factors when the densities are copied verbatim
    let ctx = crate::context::Context::builder(1, 4)
        .chart("U0", &["t"])
        .chart("U1", &["t"])
        .field("u")
        .build();
    let c0 = ChartId(0);
    let c1 = ChartId(1);
    let transitions = vec![Transition {
        low: 0,
        high: 1,
        forward: vec![parse_expr(&ctx, "2*t", c0).unwrap()],
        inverse: vec![parse_expr(&ctx, "t/2", c1).unwrap()],
        shifts: vec![crate::symexpr::JetExpr::zero()],
    }];
    let cover = Cover::new(&ctx, vec![vec![0, 1]], transitions).unwrap();
    let mut omega0 = crate::cech::Cochain::new(0, 0, 1);
    for i in 0..2 {
        omega0.set(vec![i], parse_form(&ctx, "1/2*u_t^2 * dx(t)", ChartId(i)).unwrap()).unwrap();
    }
    let omega = LagrangianCocycle {
        omegas: vec![omega0, crate::cech::Cochain::new(1, 0, 0)],
        c: crate::cech::IntCochain::new(2),
        period: crate::symexpr::JetExpr::one(),
    };
    let err = run_theorem1(&ctx, &cover, &omega, Convention::DeligneDegree).unwrap_err();
    match err {
        TheoremError::SourceGluing { simplex, residual } => {
            assert_eq!(simplex, vec![0, 1]);
            assert!(!residual.is_empty() && residual != "0");
        }
        other => panic!("expected a gluing failure, got {other}"),
    }
}
