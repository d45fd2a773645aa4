//! Builds a Lagrangian cocycle from a 0-cochain of densities by solving the
//! descent relation step by step with the horizontal-primitive solver at
//! vertical degree zero.

use num::One;

use crate::bicomplex::WedgeWord;
use crate::context::Context;
use crate::symexpr::JetExpr;
use crate::variational::{horizontal_primitive_with, AnsatzBounds};

use super::total::{descent_sign, ratio, Convention, LagrangianCocycle};
use super::{cech_coboundary, CechError, Cochain, Cover, IntCochain};

/// Solves sign * coboundary(omega^(q)) = d(omega^(q+1)) for q = 0..n-1 and
/// extracts the integer level from the top coboundary. Output components are
/// the deterministic minimal-support primitives (no free constants).
pub fn descend(
    ctx: &Context,
    cover: &Cover,
    densities: &Cochain,
    period: &JetExpr,
) -> Result<LagrangianCocycle, CechError> {
    descend_with(ctx, cover, densities, period, 0)
}

/// As `descend`, with the primitive-solver polynomial degree bound extended
/// by `extra_degree` beyond the default deg(target)+1.
pub fn descend_with(
    ctx: &Context,
    cover: &Cover,
    densities: &Cochain,
    period: &JetExpr,
    extra_degree: usize,
) -> Result<LagrangianCocycle, CechError> {
    let n = ctx.dimension();
    assert_eq!((densities.cech_degree, densities.p, densities.q), (0, 0, n), "densities must be a 0-cochain of (0,n)-forms");

    let mut omegas = vec![densities.clone()];
    for q in 0..n {
        let sign = descent_sign(Convention::DeligneDegree, n, q);
        let target = cech_coboundary(ctx, cover, &omegas[q])?.scale_int(sign);
        let mut next = Cochain::new(q + 1, 0, n - q - 1);
        for simplex in cover.simplices_of_degree(q + 1) {
            let t = target.value(&simplex);
            if t.is_zero() {
                continue;
            }
            let bounds =
                AnsatzBounds { max_degree: t.degree() + 1 + extra_degree, jet_order: ctx.jet_cap() };
            let gamma = horizontal_primitive_with(ctx, &t, &bounds).map_err(|source| {
                CechError::Descent { step: q + 1, simplex: simplex.clone(), source }
            })?;
            next.set(simplex, gamma)?;
        }
        omegas.push(next);
    }

    // top level: coboundary of omega^(n) must be constant * period, integer
    let top = cech_coboundary(ctx, cover, &omegas[n])?;
    let mut c = IntCochain::new(n + 1);
    for simplex in cover.simplices_of_degree(n + 1) {
        let v = top.value(&simplex);
        let scalar = v.coefficient(&WedgeWord::scalar());
        let Some(rho) = ratio(&scalar, period) else {
            return Err(CechError::NonConstantLevel { simplex, value: scalar.render(ctx) });
        };
        if !rho.denom().is_one() {
            return Err(CechError::IntegralityFailure { simplex, defect: rho.to_string() });
        }
        c.set(simplex, rho);
    }

    Ok(LagrangianCocycle { omegas, c, period: period.clone() })
}
