//! Declaration tables shared by the whole engine: charts with their base
//! coordinates, fields, symbolic constants, opaque functions, and the global
//! jet-order cap. A `Context` is immutable once built; every other layer
//! borrows it.

use std::sync::Arc;

use crate::symexpr::JetExpr;

/// Index of a chart in the context's chart table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChartId(pub usize);

/// Index of a field (dependent variable).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldId(pub usize);

/// Index of a declared symbolic constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstId(pub usize);

/// Index of a declared opaque function symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FuncId(pub usize);

#[derive(Clone, Debug)]
pub struct ChartDecl {
    pub name: String,
    pub coords: Vec<String>,
    /// Auxiliary charts host helper symbols (curve parameters); they carry
    /// no cover data and are skipped by per-chart iteration.
    pub aux: bool,
}

#[derive(Clone, Debug)]
pub struct ConstDecl {
    pub name: String,
    /// Numeric binding used by `eval_numeric`; `None` makes the constant
    /// purely symbolic (evaluation of expressions containing it fails).
    pub value: Option<f64>,
    /// Optional power-reduction rule `name^power -> replacement`, applied
    /// during normalization. The replacement must be a constant expression.
    pub power_rule: Option<(u32, JetExpr)>,
}

/// Derivative rule attached to a 1-argument opaque function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivRule {
    Sin,
    Cos,
    Exp,
    Log,
}

#[derive(Clone, Debug)]
pub struct FuncDecl {
    pub name: String,
    pub deriv: Option<DerivRule>,
    pub eval: Option<fn(f64) -> f64>,
}

/// Immutable declaration universe.
#[derive(Clone, Debug)]
pub struct Context {
    dimension: usize,
    jet_cap: usize,
    charts: Vec<ChartDecl>,
    fields: Vec<String>,
    consts: Vec<ConstDecl>,
    funcs: Vec<FuncDecl>,
    /// Canonical trigonometric rewrite sin(g)^2 -> 1 - cos(g)^2.
    pub(crate) rewrite_sin_squared: bool,
}

impl Context {
    pub fn builder(dimension: usize, jet_cap: usize) -> ContextBuilder {
        ContextBuilder::new(dimension, jet_cap)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn jet_cap(&self) -> usize {
        self.jet_cap
    }

    pub fn charts(&self) -> &[ChartDecl] {
        &self.charts
    }

    /// Number of principal (cover-participating) charts.
    pub fn principal_count(&self) -> usize {
        self.charts.iter().filter(|c| !c.aux).count()
    }

    pub fn chart(&self, id: ChartId) -> &ChartDecl {
        &self.charts[id.0]
    }

    pub fn chart_by_name(&self, name: &str) -> Option<ChartId> {
        self.charts.iter().position(|c| c.name == name).map(ChartId)
    }

    pub fn coord_name(&self, chart: ChartId, mu: u8) -> &str {
        &self.charts[chart.0].coords[mu as usize]
    }

    pub fn coord_by_name(&self, chart: ChartId, name: &str) -> Option<u8> {
        self.charts[chart.0]
            .coords
            .iter()
            .position(|c| c == name)
            .map(|i| i as u8)
    }

    pub fn fields(&self) -> &[String] {
        &self.fields
    }

    pub fn field_name(&self, id: FieldId) -> &str {
        &self.fields[id.0]
    }

    pub fn field_by_name(&self, name: &str) -> Option<FieldId> {
        self.fields.iter().position(|f| f == name).map(FieldId)
    }

    pub fn consts(&self) -> &[ConstDecl] {
        &self.consts
    }

    pub fn const_decl(&self, id: ConstId) -> &ConstDecl {
        &self.consts[id.0]
    }

    pub fn const_by_name(&self, name: &str) -> Option<ConstId> {
        self.consts.iter().position(|c| c.name == name).map(ConstId)
    }

    pub fn funcs(&self) -> &[FuncDecl] {
        &self.funcs
    }

    pub fn func_decl(&self, id: FuncId) -> &FuncDecl {
        &self.funcs[id.0]
    }

    pub fn func_by_name(&self, name: &str) -> Option<FuncId> {
        self.funcs.iter().position(|f| f.name == name).map(FuncId)
    }

    /// The builtin `pi` constant, always declared.
    pub fn pi(&self) -> ConstId {
        self.const_by_name("pi").expect("pi is always declared")
    }

    /// A copy with a different jet-order cap. The primitive solver relaxes
    /// the cap by one internally: images of order-K ansatz columns pass
    /// through order K+1 before cancellation.
    pub fn with_jet_cap(&self, cap: usize) -> Arc<Context> {
        let mut c = self.clone();
        c.jet_cap = cap;
        Arc::new(c)
    }
}

/// Builder; declarations are resolved by name once, then frozen.
pub struct ContextBuilder {
    dimension: usize,
    jet_cap: usize,
    charts: Vec<ChartDecl>,
    fields: Vec<String>,
    consts: Vec<ConstDecl>,
    funcs: Vec<FuncDecl>,
    rewrite_sin_squared: bool,
}

impl ContextBuilder {
    fn new(dimension: usize, jet_cap: usize) -> Self {
        let consts = vec![ConstDecl {
            name: "pi".into(),
            value: Some(std::f64::consts::PI),
            power_rule: None,
        }];
        let funcs = vec![
            FuncDecl { name: "sin".into(), deriv: Some(DerivRule::Sin), eval: Some(f64::sin) },
            FuncDecl { name: "cos".into(), deriv: Some(DerivRule::Cos), eval: Some(f64::cos) },
            FuncDecl { name: "exp".into(), deriv: Some(DerivRule::Exp), eval: Some(f64::exp) },
            FuncDecl { name: "log".into(), deriv: Some(DerivRule::Log), eval: Some(f64::ln) },
        ];
        ContextBuilder {
            dimension,
            jet_cap,
            charts: Vec::new(),
            fields: Vec::new(),
            consts,
            funcs,
            rewrite_sin_squared: true,
        }
    }

    pub fn chart(mut self, name: &str, coords: &[&str]) -> Self {
        assert_eq!(
            coords.len(),
            self.dimension,
            "chart {name} must declare exactly n = {} coordinates",
            self.dimension
        );
        let mut seen = std::collections::BTreeSet::new();
        for c in coords {
            assert!(seen.insert(*c), "duplicate coordinate {c} in chart {name}");
        }
        self.charts.push(ChartDecl {
            name: name.into(),
            coords: coords.iter().map(|s| s.to_string()).collect(),
            aux: false,
        });
        self
    }

    /// Auxiliary chart with an arbitrary coordinate count, declared after
    /// all principal charts (used for curve parameters).
    pub fn aux_chart(mut self, name: &str, coords: &[&str]) -> Self {
        self.charts.push(ChartDecl {
            name: name.into(),
            coords: coords.iter().map(|s| s.to_string()).collect(),
            aux: true,
        });
        self
    }

    pub fn field(mut self, name: &str) -> Self {
        self.fields.push(name.into());
        self
    }

    pub fn constant(mut self, name: &str, value: Option<f64>) -> Self {
        if name == "pi" {
            return self;
        }
        self.consts.push(ConstDecl { name: name.into(), value, power_rule: None });
        self
    }

    pub fn constant_with_rule(
        mut self,
        name: &str,
        value: Option<f64>,
        power: u32,
        replacement: JetExpr,
    ) -> Self {
        self.consts.push(ConstDecl {
            name: name.into(),
            value,
            power_rule: Some((power, replacement)),
        });
        self
    }

    pub fn function(mut self, name: &str, deriv: Option<DerivRule>, eval: Option<fn(f64) -> f64>) -> Self {
        self.funcs.push(FuncDecl { name: name.into(), deriv, eval });
        self
    }

    pub fn sin_squared_rewrite(mut self, on: bool) -> Self {
        self.rewrite_sin_squared = on;
        self
    }

    pub fn build(self) -> Arc<Context> {
        Arc::new(Context {
            dimension: self.dimension,
            jet_cap: self.jet_cap,
            charts: self.charts,
            fields: self.fields,
            consts: self.consts,
            funcs: self.funcs,
            rewrite_sin_squared: self.rewrite_sin_squared,
        })
    }
}
