//! Spec files: JSON trees describing families, step mappings, regulated mappings and impulsive
//! problems with formulas from [`crate::expr`].

use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use transquad::gallery::SeriesMapping;
use transquad::impulsive::{ArctanCoupling, Forcing, ImpulsiveProblem};
use transquad::{
    Ball, Extended, Family, OrdinalAddress, RegulatedMapping, Remainder, SetSpec, StepMapping, VectorValue, WellOrderedSet,
};

use crate::expr::Expr;

/// Variables of formulas indexed by an address: the digits `n0 … n7` (`n` is `n0`), the address
/// length `len`, the coordinate index `i` (from 1) and the position `t` of the address in ℝ.
pub const ADDRESS_VARS: [&str; 12] = ["n", "n0", "n1", "n2", "n3", "n4", "n5", "n6", "n7", "len", "i", "t"];
const I_SLOT: usize = 10;
const T_SLOT: usize = 11;

/// Variables of formulas in time: `t` and the coordinate index `i`.
pub const TIME_VARS: [&str; 2] = ["t", "i"];

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    Real,
    Vec(usize),
    CZero(usize),
}

impl Space {
    fn parse(kind: &str, dim: Option<usize>) -> Result<Self> {
        let dim = dim.unwrap_or(1);
        if dim == 0 {
            bail!("dim must be at least 1");
        }
        Ok(match kind {
            "real" => Space::Real,
            "vec" | "realvec" => Space::Vec(dim),
            "c0" | "czero" => Space::CZero(dim),
            k => bail!("unknown space {k:?}; expected real, vec or c0"),
        })
    }
}

fn default_space() -> String {
    "real".into()
}

/// A vector-valued formula: one formula evaluated for `i = 1 … dim`, plus the c₀ tail bound.
#[derive(Clone)]
struct VectorFormula {
    space: Space,
    value: Arc<Expr>,
    tail: Option<Arc<Expr>>,
}

impl VectorFormula {
    fn new(space: Space, value: &str, tail: Option<&str>, vars: &[&str]) -> Result<Self> {
        let value = Arc::new(Expr::parse(value, vars).context("value formula")?);
        let tail = match (space, tail) {
            (Space::CZero(_), Some(t)) => Some(Arc::new(Expr::parse(t, vars).context("tail formula")?)),
            (Space::CZero(_), None) | (_, None) => None,
            (_, Some(_)) => bail!("a tail formula needs the c0 space"),
        };
        Ok(VectorFormula { space, value, tail })
    }

    fn eval(&self, vals: &mut [f64], i_slot: usize) -> VectorValue<f64> {
        let mut coord = |i: usize| {
            vals[i_slot] = i as f64;
            self.value.eval(vals)
        };
        match self.space {
            Space::Real => VectorValue::Real(coord(1)),
            Space::Vec(d) => VectorValue::RealVec((1..=d).map(&mut coord).collect()),
            Space::CZero(d) => {
                let prefix = (1..=d).map(&mut coord).collect();
                let tail = match &self.tail {
                    Some(t) => {
                        vals[i_slot] = (d + 1) as f64;
                        t.eval(vals).abs()
                    }
                    None => 0.0,
                };
                VectorValue::TruncCZero { prefix, tail }
            }
        }
    }

    fn uses_t(&self) -> bool {
        self.value.uses(T_SLOT) || self.tail.as_ref().is_some_and(|t| t.uses(T_SLOT))
    }
}

fn address_values(a: &OrdinalAddress, t: f64) -> [f64; 12] {
    let d = a.digits();
    let mut v = [0.0; 12];
    v[0] = d.first().copied().unwrap_or(0) as f64;
    for (k, x) in d.iter().take(8).enumerate() {
        v[1 + k] = *x as f64;
    }
    v[9] = d.len() as f64;
    v[T_SLOT] = t;
    v
}

/// Position of an address, or `NaN` when it has none.
fn position(set: &WellOrderedSet<f64>, a: &OrdinalAddress) -> f64 {
    set.embed(a).ok().map(|e| e.to_scalar()).unwrap_or(f64::NAN)
}

fn address_formula(set: &WellOrderedSet<f64>, f: VectorFormula) -> impl Fn(&OrdinalAddress) -> VectorValue<f64> + Send + Sync + 'static {
    let set = set.clone();
    let needs_t = f.uses_t();
    move |a: &OrdinalAddress| {
        let t = if needs_t { position(&set, a) } else { f64::NAN };
        let mut vals = address_values(a, t);
        f.eval(&mut vals, I_SLOT)
    }
}

fn remainder_formula(set: &WellOrderedSet<f64>, src: &str) -> Result<impl Fn(&OrdinalAddress) -> Option<Remainder<f64>> + Send + Sync + 'static> {
    let e = Expr::parse(src, &ADDRESS_VARS).context("remainder formula")?;
    let set = set.clone();
    Ok(move |a: &OrdinalAddress| {
        let t = if e.uses(T_SLOT) { position(&set, a) } else { f64::NAN };
        let r = e.eval(&address_values(a, t));
        if r.is_nan() {
            None
        } else {
            Some(Remainder::Bound(r.abs()))
        }
    })
}

/// A family: `{"set": …, "space": "real"|"vec"|"c0", "dim": d, "value": formula, "tail": formula,
/// "remainder": formula, "abs_remainder": formula, "nonnegative": bool}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub set: SetSpec,
    #[serde(default = "default_space")]
    pub space: String,
    pub dim: Option<usize>,
    pub value: String,
    pub tail: Option<String>,
    pub remainder: Option<String>,
    pub abs_remainder: Option<String>,
    #[serde(default)]
    pub nonnegative: bool,
}

impl FamilySpec {
    pub fn build(&self) -> Result<Family<f64>> {
        let set: WellOrderedSet<f64> = self.set.build().map_err(|e| anyhow!("set: {e}"))?;
        let space = Space::parse(&self.space, self.dim)?;
        let f = VectorFormula::new(space, &self.value, self.tail.as_deref(), &ADDRESS_VARS)?;
        let mut fam = Family::new(set.clone(), address_formula(&set, f));
        if let Some(r) = &self.remainder {
            fam = fam.with_remainder(remainder_formula(&set, r)?);
        }
        if let Some(r) = &self.abs_remainder {
            fam = fam.with_abs_remainder(remainder_formula(&set, r)?);
        }
        if self.nonnegative {
            fam = fam.nonnegative();
        }
        Ok(fam)
    }
}

/// A step mapping: a family of steps as in [`FamilySpec`] plus `"terminal"` (the formula for
/// `g(b)`, with `t = b`), `"bound"` (a declared bound on the steps) and `"weighted_remainder"`,
/// `"weighted_abs_remainder"` (tail bounds of `(S(α) − α)·z_α`).
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub set: SetSpec,
    #[serde(default = "default_space")]
    pub space: String,
    pub dim: Option<usize>,
    pub value: String,
    pub tail: Option<String>,
    pub terminal: Option<String>,
    pub bound: Option<f64>,
    pub remainder: Option<String>,
    pub abs_remainder: Option<String>,
    pub weighted_remainder: Option<String>,
    pub weighted_abs_remainder: Option<String>,
}

impl StepSpec {
    pub fn build(&self) -> Result<StepMapping<f64>> {
        let fam = FamilySpec {
            set: self.set.clone(),
            space: self.space.clone(),
            dim: self.dim,
            value: self.value.clone(),
            tail: self.tail.clone(),
            remainder: self.remainder.clone(),
            abs_remainder: self.abs_remainder.clone(),
            nonnegative: false,
        }
        .build()?;
        let set = fam.index.clone();
        let mut g = StepMapping::new(fam);
        if let Some(src) = &self.terminal {
            let space = Space::parse(&self.space, self.dim)?;
            let f = VectorFormula::new(space, src, self.tail.as_deref(), &ADDRESS_VARS).context("terminal")?;
            let mut vals = address_values(&OrdinalAddress::sup(), set.sup().to_scalar());
            g = g.with_terminal(f.eval(&mut vals, I_SLOT));
        }
        if let Some(b) = self.bound {
            if !(b >= 0.0) {
                bail!("bound must be nonnegative");
            }
            g = g.with_bound(b);
        }
        let w = self.weighted_remainder.as_deref().map(|r| remainder_formula(&set, r)).transpose()?;
        let wa = self.weighted_abs_remainder.as_deref().map(|r| remainder_formula(&set, r)).transpose()?;
        if let Some(w) = w {
            g = g.with_weighted_remainder(w);
        }
        if let Some(wa) = wa {
            g = g.with_weighted_abs_remainder(wa);
        }
        Ok(g)
    }
}

/// A number or `"inf"`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Num(f64),
    Text(String),
}

impl Bound {
    pub fn extended(&self) -> Result<Extended<f64>> {
        match self {
            Bound::Num(x) if x.is_finite() => Ok(Extended::Finite(*x)),
            Bound::Text(s) if s == "inf" || s == "infinity" => Ok(Extended::PosInf),
            other => bail!("expected a finite number or \"inf\", got {other:?}"),
        }
    }
}

/// A right-regulated mapping given by a formula in `t` and `i`: `{"domain": [a, b|"inf"], "space",
/// "dim", "value", "tail", "bound", "lipschitz"}`. With a Lipschitz constant `L` the oscillation on
/// `(x, y)` is certified as `L·(y − x)`; otherwise it is sampled.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegulatedSpec {
    pub domain: (f64, Bound),
    #[serde(default = "default_space")]
    pub space: String,
    pub dim: Option<usize>,
    pub value: String,
    pub tail: Option<String>,
    pub bound: Option<f64>,
    pub lipschitz: Option<f64>,
}

pub struct FormulaMapping {
    a: f64,
    b: Extended<f64>,
    f: VectorFormula,
    bound: Option<f64>,
    lipschitz: Option<f64>,
}

impl RegulatedSpec {
    pub fn build(&self) -> Result<FormulaMapping> {
        let space = Space::parse(&self.space, self.dim)?;
        let f = VectorFormula::new(space, &self.value, self.tail.as_deref(), &TIME_VARS)?;
        let b = self.domain.1.extended()?;
        if !(Extended::Finite(self.domain.0) < b) {
            bail!("domain needs a < b");
        }
        if self.lipschitz.is_some_and(|l| !(l >= 0.0 && l.is_finite())) {
            bail!("lipschitz must be a finite nonnegative number");
        }
        Ok(FormulaMapping { a: self.domain.0, b, f, bound: self.bound, lipschitz: self.lipschitz })
    }
}

impl RegulatedMapping<f64> for FormulaMapping {
    fn domain(&self) -> (f64, Extended<f64>) {
        (self.a, self.b)
    }

    fn eval(&self, t: f64) -> VectorValue<f64> {
        let mut vals = [t, 1.0];
        self.f.eval(&mut vals, 1)
    }

    fn right_limit(&self, t: f64) -> Option<VectorValue<f64>> {
        self.lipschitz.map(|_| self.eval(t))
    }

    fn osc(&self, x: f64, y: f64) -> Option<f64> {
        self.lipschitz.map(|l| l * (y - x))
    }

    fn enclose(&self, x: f64, y: f64) -> Option<Ball<f64>> {
        self.lipschitz.map(|l| Ball { center: self.eval(0.5 * (x + y)), radius: 0.5 * l * (y - x) })
    }

    fn bound(&self) -> Option<f64> {
        self.bound
    }
}

/// Forcing term of an impulsive problem: a series gallery id, or formulas for the value and a
/// primitive.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ForcingSpec {
    Gallery { gallery: String },
    Formula { value: String, primitive: String },
}

/// Increasing coupling `f(t, u)` added to the forcing.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
pub enum CouplingSpec {
    /// `q_i(u_1 + … + u_i)` with `K` arctangent terms.
    Arctan {
        #[serde(default = "default_terms")]
        terms: usize,
    },
}

fn default_terms() -> usize {
    32
}

/// Impulses `Δu(λ) = z_λ` at the points of a set; `z` is a formula over the address variables.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpulseSpec {
    pub set: SetSpec,
    pub value: String,
    /// Impulses enumerated per infinite layer.
    #[serde(default = "default_impulse_budget")]
    pub budget: u64,
    /// Bound on the total of the impulses past the enumeration horizon.
    pub tail: Option<f64>,
}

fn default_impulse_budget() -> u64 {
    48
}

/// Limits of the monotone iteration.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationSpec {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub grid: Option<usize>,
}

/// `{"interval": [a, c], "dim": d, "forcing": …, "coupling": …, "impulses": …, "iteration": …}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpulsiveSpec {
    pub interval: (f64, f64),
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub forcing: Option<ForcingSpec>,
    pub coupling: Option<CouplingSpec>,
    pub impulses: Option<ImpulseSpec>,
    #[serde(default)]
    pub iteration: IterationSpec,
}

fn default_dim() -> usize {
    1
}

impl ImpulsiveSpec {
    /// The problem and notes on what it leaves undeclared.
    pub fn build(&self) -> Result<(ImpulsiveProblem, Vec<String>)> {
        let (a, c) = self.interval;
        if !(a < c) || !c.is_finite() {
            bail!("interval needs finite a < c");
        }
        let dim = self.dim;
        if dim == 0 {
            bail!("dim must be at least 1");
        }
        let mut notes = Vec::new();
        let zero = VectorValue::RealVec(vec![0.0; dim]);
        let forcing = match &self.forcing {
            None => None,
            Some(ForcingSpec::Gallery { gallery }) => {
                let entry = transquad::gallery::get(gallery).map_err(|e| anyhow!("forcing: {e}"))?;
                match entry.object {
                    transquad::gallery::GalleryObject::Regulated(m) => Some(Forcing::series(SeriesMapping::clone(&m), dim)),
                    _ => bail!("forcing gallery entry {gallery:?} is not a series mapping"),
                }
            }
            Some(ForcingSpec::Formula { value, primitive }) => {
                let v = VectorFormula::new(Space::Vec(dim), value, None, &TIME_VARS).context("forcing value")?;
                let p = VectorFormula::new(Space::Vec(dim), primitive, None, &TIME_VARS).context("forcing primitive")?;
                Some(Forcing {
                    value: Arc::new(move |t| v.eval(&mut [t, 1.0], 1)),
                    primitive: Arc::new(move |t| (p.eval(&mut [t, 1.0], 1), 0.0)),
                })
            }
        };
        let mut p = match &self.impulses {
            Some(imp) => {
                let set: WellOrderedSet<f64> = imp.set.build().map_err(|e| anyhow!("impulse set: {e}"))?;
                let f = VectorFormula::new(Space::Vec(dim), &imp.value, None, &ADDRESS_VARS).context("impulse value")?;
                let z = Family::new(set.clone(), address_formula(&set, f));
                let mut p = ImpulsiveProblem::fixed(a, c, zero.clone(), forcing, z);
                if imp.budget == 0 {
                    bail!("impulse budget must be at least 1");
                }
                p.impulse_budget = imp.budget;
                match imp.tail {
                    Some(t) if t >= 0.0 => p.impulse_tail = t,
                    Some(_) => bail!("impulse tail must be nonnegative"),
                    None if imp.set.kind != "finite" => {
                        notes.push("no impulse tail bound declared; residuals omit impulses past the enumeration horizon".into())
                    }
                    None => {}
                }
                p
            }
            None => {
                let none = Family::new(WellOrderedSet::finite(vec![a]).map_err(|e| anyhow!("{e}"))?, {
                    let z = zero.clone();
                    move |_: &OrdinalAddress| z.clone()
                });
                ImpulsiveProblem::fixed(a, c, zero.clone(), forcing, none)
            }
        };
        if let Some(CouplingSpec::Arctan { terms }) = &self.coupling {
            if *terms == 0 {
                bail!("coupling terms must be at least 1");
            }
            let q = Arc::new(ArctanCoupling::new(dim, *terms));
            let hi = q.upper();
            let lo = zero.clone();
            p.coupling = Some(Arc::new(move |_t, x| q.apply(x)));
            p.coupling_bounds = Some((Arc::new(move |_| lo.clone()), Arc::new(move |_| hi.clone())));
        }
        Ok((p, notes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_family() {
        let spec: FamilySpec = serde_json::from_str(
            r#"{"set": {"kind": "dyadic", "depth": 1}, "value": "2^(-n)", "remainder": "2^(-n)", "nonnegative": true}"#,
        )
        .unwrap();
        let f = spec.build().unwrap();
        assert_eq!(f.value(&OrdinalAddress::new(&[3])), VectorValue::Real(0.125));
    }

    #[test]
    fn vector_and_c0_values() {
        let spec: FamilySpec = serde_json::from_str(
            r#"{"set": {"kind": "dyadic", "depth": 1}, "space": "c0", "dim": 3, "value": "1/(i*(n+1))", "tail": "1/(i*(n+1))"}"#,
        )
        .unwrap();
        let f = spec.build().unwrap();
        match f.value(&OrdinalAddress::new(&[0])) {
            VectorValue::TruncCZero { prefix, tail } => {
                assert_eq!(prefix, vec![1.0, 0.5, 1.0 / 3.0]);
                assert_eq!(tail, 0.25);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn position_variable() {
        let spec: FamilySpec =
            serde_json::from_str(r#"{"set": {"kind": "dyadic", "depth": 1}, "value": "t"}"#).unwrap();
        let f = spec.build().unwrap();
        assert_eq!(f.value(&OrdinalAddress::new(&[2])), VectorValue::Real(0.75));
    }

    #[test]
    fn rejects_bad_specs() {
        let bad: FamilySpec =
            serde_json::from_str(r#"{"set": {"kind": "dyadic"}, "value": "2^(-m)"}"#).unwrap();
        assert!(bad.build().is_err());
        assert!(serde_json::from_str::<FamilySpec>(r#"{"set": {"kind": "dyadic"}, "value": "1", "extra": 1}"#).is_err());
        let bad: RegulatedSpec = serde_json::from_str(r#"{"domain": [1, 0], "value": "t"}"#).unwrap();
        assert!(bad.build().is_err());
    }

    #[test]
    fn lipschitz_mapping() {
        let spec: RegulatedSpec =
            serde_json::from_str(r#"{"domain": [0, 1], "value": "sin(t)", "lipschitz": 1}"#).unwrap();
        let g = spec.build().unwrap();
        assert_eq!(g.osc(0.0, 0.5), Some(0.5));
        assert_eq!(g.eval(0.0), VectorValue::Real(0.0));
    }
}
