//! IEEE-double evaluation of normal forms.

use std::collections::HashMap;

use num::ToPrimitive;

use crate::context::{ChartId, Context, FieldId};
use crate::symexpr::expr::{render_atom, Atom, JetExpr, MultiIndex};
use crate::symexpr::ExprError;

/// Numeric bindings for base coordinates, jet coordinates, and constants.
/// `pi` and declared constant values are bound automatically; explicit
/// entries override them.
#[derive(Clone, Debug, Default)]
pub struct Assignment {
    values: HashMap<Atom, f64>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn set_base(&mut self, chart: ChartId, coord: u8, v: f64) -> &mut Self {
        self.values.insert(Atom::Base { chart, coord }, v);
        self
    }

    pub fn set_jet(&mut self, chart: ChartId, field: FieldId, index: MultiIndex, v: f64) -> &mut Self {
        self.values.insert(Atom::Jet { chart, field, index }, v);
        self
    }

    pub fn set_const(&mut self, id: crate::context::ConstId, v: f64) -> &mut Self {
        self.values.insert(Atom::Const(id), v);
        self
    }

    fn lookup(&self, ctx: &Context, atom: &Atom) -> Result<f64, ExprError> {
        if let Some(v) = self.values.get(atom) {
            return Ok(*v);
        }
        if let Atom::Const(c) = atom {
            if let Some(v) = ctx.const_decl(*c).value {
                return Ok(v);
            }
        }
        Err(ExprError::UnassignedSymbol(render_atom(atom, ctx)))
    }
}

impl JetExpr {
    pub fn eval_numeric(&self, ctx: &Context, assignment: &Assignment) -> Result<f64, ExprError> {
        let mut total = 0.0;
        for term in self.terms() {
            let mut acc = term.coeff.to_f64().expect("rational fits in f64");
            for (atom, pow) in term.mono.factors() {
                let base = eval_atom(ctx, atom, assignment)?;
                acc *= base.powi(*pow);
            }
            total += acc;
        }
        Ok(total)
    }
}

fn eval_atom(ctx: &Context, atom: &Atom, assignment: &Assignment) -> Result<f64, ExprError> {
    match atom {
        Atom::Func { func, arg } => {
            let x = arg.eval_numeric(ctx, assignment)?;
            let decl = ctx.func_decl(*func);
            let f = decl.eval.ok_or_else(|| ExprError::NoNumericRule(decl.name.clone()))?;
            Ok(f(x))
        }
        _ => assignment.lookup(ctx, atom),
    }
}
