//! Cochains on the nerve, valued in local forms (anchor-chart convention)
//! or integers/rationals, and the Cech coboundary with prolonged pullback.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::Zero;

use crate::bicomplex::LocalForm;
use crate::context::{ChartId, Context};
use crate::symexpr::ProlongedMap;

use super::{CechError, Cover, Simplex};

/// Form-valued cochain: Cech degree r, values on r-simplices expressed in
/// each simplex's anchor (lowest-index) chart. Absent simplex = zero value.
#[derive(Clone, Debug, PartialEq)]
pub struct Cochain {
    pub cech_degree: usize,
    pub p: usize,
    pub q: usize,
    values: BTreeMap<Simplex, LocalForm>,
}

impl Cochain {
    pub fn new(cech_degree: usize, p: usize, q: usize) -> Self {
        Cochain { cech_degree, p, q, values: BTreeMap::new() }
    }

    pub fn set(&mut self, simplex: Simplex, value: LocalForm) -> Result<(), CechError> {
        assert_eq!(simplex.len(), self.cech_degree + 1, "simplex size vs Cech degree");
        if value.is_zero() {
            self.values.remove(&simplex);
            return Ok(());
        }
        if value.chart() != ChartId(simplex[0]) {
            let anchor = simplex[0];
            return Err(CechError::WrongAnchor { simplex, anchor });
        }
        let bd = value.bidegree();
        assert_eq!((bd.p, bd.q), (self.p, self.q), "inhomogeneous cochain value");
        self.values.insert(simplex, value);
        Ok(())
    }

    /// Value on a sorted simplex; zero (anchored correctly) when absent.
    pub fn value(&self, simplex: &Simplex) -> LocalForm {
        self.values
            .get(simplex)
            .cloned()
            .unwrap_or_else(|| LocalForm::zero(ChartId(simplex[0]), self.p, self.q))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Simplex, &LocalForm)> {
        self.values.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn add(&self, other: &Cochain) -> Result<Cochain, CechError> {
        assert_eq!(
            (self.cech_degree, self.p, self.q),
            (other.cech_degree, other.p, other.q),
            "cochain grading mismatch"
        );
        let mut out = self.clone();
        for (s, v) in &other.values {
            let sum = out.value(s).add(v)?;
            out.set(s.clone(), sum)?;
        }
        Ok(out)
    }

    pub fn neg(&self) -> Cochain {
        Cochain {
            cech_degree: self.cech_degree,
            p: self.p,
            q: self.q,
            values: self.values.iter().map(|(s, v)| (s.clone(), v.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &Cochain) -> Result<Cochain, CechError> {
        self.add(&other.neg())
    }

    pub fn scale_int(&self, k: i64) -> Cochain {
        if k == 0 {
            return Cochain::new(self.cech_degree, self.p, self.q);
        }
        Cochain {
            cech_degree: self.cech_degree,
            p: self.p,
            q: self.q,
            values: self.values.iter().map(|(s, v)| (s.clone(), v.scale_int(k))).collect(),
        }
    }

    pub fn render(&self, ctx: &Context) -> String {
        if self.values.is_empty() {
            return "0".into();
        }
        self.values
            .iter()
            .map(|(s, v)| format!("{s:?}: {}", v.render(ctx)))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Integer/rational-valued cochain (the Deligne degree-0 level).
#[derive(Clone, Debug, PartialEq)]
pub struct IntCochain {
    pub cech_degree: usize,
    values: BTreeMap<Simplex, BigRational>,
}

impl IntCochain {
    pub fn new(cech_degree: usize) -> Self {
        IntCochain { cech_degree, values: BTreeMap::new() }
    }

    pub fn set(&mut self, simplex: Simplex, value: BigRational) {
        assert_eq!(simplex.len(), self.cech_degree + 1);
        if value.is_zero() {
            self.values.remove(&simplex);
        } else {
            self.values.insert(simplex, value);
        }
    }

    pub fn value(&self, simplex: &Simplex) -> BigRational {
        self.values.get(simplex).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Simplex, &BigRational)> {
        self.values.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_integral(&self) -> bool {
        use num::One;
        self.values.values().all(|v| v.denom().is_one())
    }
}

/// Pulls a local form through a prolonged map: coefficients substitute, the
/// generators transform by the prolonged cotangent images
/// dx^mu -> d(base image), theta^a_I -> vertical linearization of the jet
/// image.
pub fn pullback_form(
    ctx: &Context,
    map: &ProlongedMap,
    form: &LocalForm,
) -> Result<LocalForm, CechError> {
    use crate::symexpr::{partial, Atom};

    let target = map.target();
    let bd = form.bidegree();
    let mut out = LocalForm::zero(target, bd.p, bd.q);
    for (word, coeff) in form.terms() {
        let mut acc = LocalForm::scalar(target, map.apply(ctx, coeff)?);
        for theta in &word.thetas {
            // theta^a_I -> sum_{b,J} d(jet image)/du^b_J theta^b_J
            let image = map.jet_image(theta.field, &theta.index)?.clone();
            let mut gform = LocalForm::zero(target, 1, 0);
            for (jc, jf, ji) in image.jet_atoms().map(|(c, f, i)| (c, f, i.clone())).collect::<Vec<_>>() {
                debug_assert_eq!(jc, target);
                let d = partial(ctx, &image, &Atom::Jet { chart: jc, field: jf, index: ji.clone() })?;
                if d.is_zero() {
                    continue;
                }
                let term = LocalForm::from_term(
                    ctx,
                    target,
                    crate::bicomplex::WedgeWord {
                        thetas: vec![crate::bicomplex::ThetaGen { field: jf, index: ji }],
                        dxs: vec![],
                    },
                    d,
                )?;
                gform = gform.add(&term)?;
            }
            acc = acc.wedge(ctx, &gform)?;
        }
        for &mu in &word.dxs {
            // dx^mu -> sum_nu d(base image)/dx^nu_target dx^nu
            let image = map.base_image(mu).clone();
            let mut gform = LocalForm::zero(target, 0, 1);
            for nu in 0..ctx.dimension() as u8 {
                let d = partial(ctx, &image, &Atom::Base { chart: target, coord: nu })?;
                if d.is_zero() {
                    continue;
                }
                let term = LocalForm::from_term(
                    ctx,
                    target,
                    crate::bicomplex::WedgeWord { thetas: vec![], dxs: vec![nu] },
                    d,
                )?;
                gform = gform.add(&term)?;
            }
            acc = acc.wedge(ctx, &gform)?;
        }
        out = out.add(&acc)?;
    }
    Ok(out)
}

/// Cech coboundary: (delta c)_{i0..i_{r+1}} = sum_k (-1)^k c_{..face k..},
/// with the k = 0 face pulled back from its own anchor chart to the big
/// simplex's anchor.
pub fn cech_coboundary(ctx: &Context, cover: &Cover, c: &Cochain) -> Result<Cochain, CechError> {
    let r = c.cech_degree;
    let mut out = Cochain::new(r + 1, c.p, c.q);
    for simplex in cover.simplices_of_degree(r + 1) {
        let anchor = ChartId(simplex[0]);
        let mut acc = LocalForm::zero(anchor, c.p, c.q);
        for k in 0..simplex.len() {
            let mut face = simplex.clone();
            face.remove(k);
            if !cover.contains(&face) {
                continue; // absent face contributes zero
            }
            let mut v = c.value(&face);
            if k == 0 {
                let map = cover
                    .pullback(simplex[1], simplex[0])
                    .ok_or(CechError::MissingTransition(simplex[0], simplex[1]))?;
                v = pullback_form(ctx, map, &v)?;
            }
            if k % 2 == 1 {
                v = v.neg();
            }
            acc = acc.add(&v)?;
        }
        out.set(simplex, acc)?;
    }
    Ok(out)
}

/// Coboundary of an integer/rational cochain (no pullback: values are
/// constants).
pub fn int_coboundary(cover: &Cover, c: &IntCochain) -> IntCochain {
    let r = c.cech_degree;
    let mut out = IntCochain::new(r + 1);
    for simplex in cover.simplices_of_degree(r + 1) {
        let mut acc = BigRational::zero();
        for k in 0..simplex.len() {
            let mut face = simplex.clone();
            face.remove(k);
            if !cover.contains(&face) {
                continue;
            }
            let v = c.value(&face);
            if k % 2 == 1 {
                acc -= v;
            } else {
                acc += v;
            }
        }
        out.set(simplex, acc);
    }
    out
}
