//! Exact symbolic scalar kernel: expressions over base coordinates, jet
//! coordinates, opaque function symbols, and symbolic constants, held in a
//! canonical normal form with rational coefficients. Two expressions are
//! equal exactly when their normal forms are identical.

mod calculus;
mod eval;
mod expr;
pub mod parse;
mod subst;

pub use calculus::{partial, total_derivative, total_derivative_multi};
pub use eval::Assignment;
pub use expr::{Atom, JetExpr, Monomial, MultiIndex, Term};
pub use parse::{parse_expr, ParsePosition};
pub use subst::{substitute_prolonged, ProlongedMap};

/// All sorted multi-indices of the given order over n coordinates.
pub fn all_multi_indices(n: usize, order: usize) -> Vec<MultiIndex> {
    subst::multi_indices(n, order)
}

/// Replaces base coordinates of `chart` by the given expressions. The input
/// must not contain jet coordinates.
pub fn subst_base_exprs(
    ctx: &crate::context::Context,
    e: &JetExpr,
    chart: crate::context::ChartId,
    replacements: &[JetExpr],
) -> Result<JetExpr, ExprError> {
    subst::substitute_base(ctx, e, chart, replacements)
}

/// All sorted multi-indices of order 0..=cap over n coordinates.
pub fn all_multi_indices_up_to(n: usize, cap: usize) -> Vec<MultiIndex> {
    subst::multi_indices_up_to(n, cap)
}

use thiserror::Error;

use crate::context::{ChartId, FieldId};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("undeclared identifier `{name}` at position {pos}")]
    UndeclaredIdentifier { name: String, pos: usize },
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { msg: String, pos: usize },
    #[error("jet order {required} exceeds the cap K = {cap}")]
    JetOrderExceeded { required: usize, cap: usize },
    #[error("division by an expression that is not a single term")]
    NonMonomialDivisor,
    #[error("division by zero")]
    DivisionByZero,
    #[error("function argument may involve base coordinates and constants only")]
    FunctionArgNotBase,
    #[error("no derivative rule registered for function `{0}`")]
    NoDerivativeRule(String),
    #[error("no numeric evaluator registered for function `{0}`")]
    NoNumericRule(String),
    #[error("symbol `{0}` has no numeric assignment")]
    UnassignedSymbol(String),
    #[error("expression mixes charts: expected chart {expected:?}, found {found:?}")]
    ChartMismatch { expected: ChartId, found: ChartId },
    #[error("transition does not cover field {0:?}")]
    MissingFieldRule(FieldId),
}
