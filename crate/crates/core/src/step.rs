//! Step mappings with well-ordered steps: `g(t) = z_α` on `[α, S(α))`.

use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ordinal::{OrdinalAddress, WellOrderedSet};
use crate::scalar::{Extended, Scalar};
use crate::spaces::VectorValue;
use crate::transfinite::{
    bounded, classify, partial_sum_lenient, Basis, Family, Remainder, RemainderFn, SumConfig, SumFailure, Verdict,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Hl,
    Hk,
    Bochner,
    Riemann,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hl" => Ok(Mode::Hl),
            "hk" => Ok(Mode::Hk),
            "bochner" => Ok(Mode::Bochner),
            "riemann" => Ok(Mode::Riemann),
            other => Err(Error::Invalid(format!("unknown mode {other:?}"))),
        }
    }
}

/// A step mapping on `[a, b]`: the steps are a family `(z_α)` over `Λ`, with `min Λ = a` and
/// `sup Λ = b`.
#[derive(Clone)]
pub struct StepMapping<T> {
    pub steps: Family<T>,
    /// `g(b)`, when `b` is finite and not itself a step.
    pub terminal: Option<VectorValue<T>>,
    /// Declared bound on `‖z_α‖`.
    pub declared_bound: Option<T>,
    weighted_remainder: Option<RemainderFn<T>>,
    weighted_abs_remainder: Option<RemainderFn<T>>,
}

impl<T: Scalar> StepMapping<T> {
    pub fn new(steps: Family<T>) -> Self {
        StepMapping { steps, terminal: None, declared_bound: None, weighted_remainder: None, weighted_abs_remainder: None }
    }

    pub fn with_terminal(mut self, v: VectorValue<T>) -> Self {
        self.terminal = Some(v);
        self
    }

    pub fn with_bound(mut self, b: T) -> Self {
        self.declared_bound = Some(b);
        self
    }

    /// Tail information for the weighted family `(S(α)−α)z_α`.
    pub fn with_weighted_remainder(mut self, f: impl Fn(&OrdinalAddress) -> Option<Remainder<T>> + Send + Sync + 'static) -> Self {
        self.weighted_remainder = Some(std::sync::Arc::new(f));
        self
    }

    pub fn with_weighted_abs_remainder(mut self, f: impl Fn(&OrdinalAddress) -> Option<Remainder<T>> + Send + Sync + 'static) -> Self {
        self.weighted_abs_remainder = Some(std::sync::Arc::new(f));
        self
    }

    pub fn with_weighted_remainder_arc(mut self, f: Option<RemainderFn<T>>, abs: Option<RemainderFn<T>>) -> Self {
        self.weighted_remainder = f;
        self.weighted_abs_remainder = abs;
        self
    }

    pub fn index(&self) -> &WellOrderedSet<T> {
        &self.steps.index
    }

    pub fn interval(&self) -> (T, Extended<T>) {
        (self.steps.index.min(), self.steps.index.sup())
    }

    pub fn eval(&self, t: T) -> Result<VectorValue<T>> {
        let index = &self.steps.index;
        if Extended::Finite(t) == index.sup() {
            if index.contains_sup() {
                return Ok(self.steps.value(&OrdinalAddress::sup()));
            }
            return Ok(self.terminal.clone().unwrap_or_else(|| self.steps.zero()));
        }
        let g = index.locate(t)?;
        Ok(self.steps.value(&g))
    }

    /// `α·self + other` on the same steps.
    pub fn combine(&self, alpha: T, other: &StepMapping<T>) -> StepMapping<T> {
        let (f, g) = (self.steps.value_fn(), other.steps.value_fn());
        let steps = Family::new(self.steps.index.clone(), move |a: &OrdinalAddress| {
            let mut v = f(a).scale(alpha);
            v.add_scaled(T::one(), &g(a)).expect("matching spaces");
            v
        });
        StepMapping::new(steps)
    }
}

/// The family `α ↦ (S(α)−α)·z_α` over `Λ^{<b}`.
pub fn weighted_family<T: Scalar>(g: &StepMapping<T>) -> Family<T> {
    let index = g.steps.index.clone();
    let z = g.steps.value_fn();
    let idx = index.clone();
    let value = move |a: &OrdinalAddress| -> VectorValue<T> {
        let w = idx.gap(a).unwrap_or_else(|_| T::nan());
        z(a).scale(w)
    };
    let restricted = index.restrict_below(&OrdinalAddress::sup()).expect("sup restriction");
    Family::new(restricted, value)
        .with_remainder_arc(g.weighted_remainder.clone())
        .with_abs_remainder_arc(g.weighted_abs_remainder.clone())
}

/// Tri-state integrability in each mode.
#[derive(Clone, Debug)]
pub struct IntegrabilityVerdict<T> {
    pub mode: Mode,
    pub hl: Verdict,
    pub hk: Verdict,
    pub bochner: Verdict,
    pub riemann: Verdict,
    pub integral: Option<(VectorValue<T>, T)>,
    /// Cutoffs of summability, absolute summability and boundedness.
    pub hl_cutoff: Option<OrdinalAddress>,
    pub bochner_cutoff: Option<OrdinalAddress>,
    pub riemann_cutoff: Option<OrdinalAddress>,
    pub notes: Vec<String>,
}

impl<T: Scalar> IntegrabilityVerdict<T> {
    pub fn verdict(&self, mode: Mode) -> Verdict {
        match mode {
            Mode::Hl => self.hl,
            Mode::Hk => self.hk,
            Mode::Bochner => self.bochner,
            Mode::Riemann => self.riemann,
        }
    }

    pub fn requested(&self) -> Verdict {
        self.verdict(self.mode)
    }

    /// Enforces `bochner ⇒ hl ⇒ hk` and, on bounded domains, `riemann ⇒ hk`, together with the
    /// contrapositives.
    pub fn reconcile(&mut self, bounded_domain: bool) {
        fn weaker(a: Verdict, b: Verdict) -> Basis {
            match (a.basis(), b.basis()) {
                (Some(Basis::Heuristic), _) | (_, Some(Basis::Heuristic)) => Basis::Heuristic,
                (Some(Basis::Declared), _) | (_, Some(Basis::Declared)) => Basis::Declared,
                _ => Basis::Certified,
            }
        }
        let up = |from: Verdict, to: &mut Verdict| {
            if from.is_true() && !to.is_true() {
                *to = if to.is_false() { Verdict::Inconclusive } else { Verdict::True(weaker(from, *to)) };
            }
        };
        let hl = self.hl;
        up(self.bochner, &mut self.hl);
        up(self.hl, &mut self.hk);
        if bounded_domain {
            up(self.riemann, &mut self.hk);
        }
        let down = |from: Verdict, to: &mut Verdict| {
            if from.is_false() && !to.is_false() {
                *to = if to.is_true() { Verdict::Inconclusive } else { Verdict::False(from.basis().unwrap()) };
            }
        };
        down(self.hk, &mut self.hl);
        down(self.hl, &mut self.bochner);
        if bounded_domain {
            down(self.hk, &mut self.riemann);
        }
        if hl != self.hl {
            self.notes.push("hl verdict adjusted by implication".into());
        }
    }
}

/// Integrability of a step mapping in every mode; `mode` selects the reported verdict.
pub fn integrate_step<T: Scalar>(g: &StepMapping<T>, mode: Mode, tol: T, cfg: &SumConfig<T>) -> IntegrabilityVerdict<T> {
    let w = weighted_family(g);
    let report = classify(&w, tol, cfg);
    let bounded_domain = g.steps.index.sup().is_finite();
    let finite_dim = !matches!(g.steps.zero(), VectorValue::TruncCZero { .. });
    let mut notes = report.notes.clone();

    let (zb, zcut) = match g.declared_bound {
        Some(m) => {
            let (scan, cut) = bounded(&g.steps, cfg);
            if scan.is_false() {
                notes.push(format!("declared bound {m} contradicted by sampling"));
                (Verdict::Inconclusive, cut)
            } else {
                (Verdict::True(Basis::Declared), None)
            }
        }
        None => bounded(&g.steps, cfg),
    };

    let hk = report.verdict;
    let hl = if !bounded_domain && !finite_dim {
        if report.absolute_verdict.is_true() {
            report.absolute_verdict
        } else if hk.is_false() {
            hk
        } else {
            Verdict::Inconclusive
        }
    } else {
        hk
    };
    let riemann = if bounded_domain {
        zb
    } else {
        match (zb, hk) {
            (Verdict::False(b), _) | (_, Verdict::False(b)) => Verdict::False(b),
            (Verdict::True(b1), Verdict::True(b2)) => Verdict::True(if b1 == Basis::Certified { b2 } else { b1 }),
            _ => Verdict::Inconclusive,
        }
    };
    let mut integral = report.total.clone();
    if integral.is_none() && (hk.is_true() || report.absolute_verdict.is_true()) {
        integral = partial_sum_lenient(&w, &OrdinalAddress::sup(), tol, cfg).ok().map(|o| (o.value, o.residual));
    }
    let mut v = IntegrabilityVerdict {
        mode,
        hl,
        hk,
        bochner: report.absolute_verdict,
        riemann,
        integral,
        hl_cutoff: report.c3,
        bochner_cutoff: report.c2,
        riemann_cutoff: zcut,
        notes,
    };
    v.reconcile(bounded_domain);
    v
}

/// The primitive `f(t) = σ(γ) + (t − γ)·z_γ` for `t ∈ [γ, S(γ))`, where σ sums the weighted family.
pub struct PrimitiveTrace<T> {
    mapping: StepMapping<T>,
    weighted: Family<T>,
    tol: T,
    cfg: SumConfig<T>,
    runs: Option<RunTables<T>>,
}

/// Cumulative sums at every knot of a partition-type set, with run tails.
struct RunTables<T> {
    /// `cum[j][k] = σ((j,k))` with its residual.
    cum: Vec<Vec<(VectorValue<T>, T)>>,
    /// Tail information after the horizon knot of an open run.
    tails: Vec<Option<Remainder<T>>>,
    total: (VectorValue<T>, T),
}

fn run_tables<T: Scalar>(w: &Family<T>, index: &WellOrderedSet<T>) -> Result<RunTables<T>> {
    let runs = index.runs().unwrap();
    let mut acc = w.zero();
    let mut res = T::zero();
    let mut cum = Vec::with_capacity(runs.len());
    let mut tails = Vec::with_capacity(runs.len());
    for (j, run) in runs.iter().enumerate() {
        let mut row = Vec::with_capacity(run.knots.len());
        let cells = if run.open { run.knots.len() - 1 } else { run.knots.len() };
        for k in 0..run.knots.len() {
            row.push((acc.clone(), res));
            if k < cells {
                let a = OrdinalAddress::new(&[j as u64, k as u64]);
                acc.add_scaled(T::one(), &w.value(&a))?;
            }
        }
        let tail = if run.open {
            let last = OrdinalAddress::new(&[j as u64, cells as u64 - 1]);
            let r = w.remainder(&last);
            match &r {
                Some(Remainder::Enclosure { width, ball }) => {
                    acc.add_scaled(*width, &ball.center)?;
                    res += *width * ball.radius;
                }
                Some(Remainder::Total { sum, .. }) => {
                    acc.add_scaled(T::one(), &sum.center)?;
                    res += sum.radius;
                }
                Some(Remainder::Bound(b)) => res += *b,
                Some(Remainder::Divergent) | None => {
                    cum.push(row);
                    tails.push(r);
                    return Err(Error::NotLocallySummable { cutoff: OrdinalAddress::new(&[j as u64]) });
                }
            }
            r
        } else {
            None
        };
        cum.push(row);
        tails.push(tail);
    }
    Ok(RunTables { cum, tails, total: (acc, res) })
}

/// Builds the primitive of a step mapping.
pub fn primitive<T: Scalar>(g: &StepMapping<T>, tol: T, cfg: &SumConfig<T>) -> Result<PrimitiveTrace<T>> {
    let weighted = weighted_family(g);
    let runs = if g.steps.index.runs().is_some() { Some(run_tables(&weighted, &g.steps.index)?) } else { None };
    Ok(PrimitiveTrace { mapping: g.clone(), weighted, tol, cfg: cfg.clone(), runs })
}

impl<T: Scalar> PrimitiveTrace<T> {
    pub fn interval(&self) -> (T, Extended<T>) {
        self.mapping.interval()
    }

    pub fn mapping(&self) -> &StepMapping<T> {
        &self.mapping
    }

    /// `σ(γ)` of the weighted family with its residual.
    pub fn sigma(&self, gamma: &OrdinalAddress) -> Result<(VectorValue<T>, T)> {
        let index = &self.mapping.steps.index;
        if let Some(tabs) = &self.runs {
            let c = index.canonical(gamma)?;
            if c.is_sup() {
                return Ok(tabs.total.clone());
            }
            let d = c.digits();
            let (j, k) = (d[0] as usize, d.get(1).copied().unwrap_or(0) as usize);
            return Ok(tabs.cum[j][k].clone());
        }
        match partial_sum_lenient(&self.weighted, gamma, self.tol, &self.cfg) {
            Ok(o) => Ok((o.value, o.residual)),
            Err(SumFailure::Diverges { cutoff, .. }) => Err(Error::NotLocallySummable { cutoff }),
            Err(e) => Err(e.into_error()),
        }
    }

    /// `f(t)` with its residual.
    pub fn eval(&self, t: T) -> Result<(VectorValue<T>, T)> {
        let index = &self.mapping.steps.index;
        if t == index.min() {
            return Ok((self.weighted.zero(), T::zero()));
        }
        if Extended::Finite(t) == index.sup() {
            return self.sigma(&OrdinalAddress::sup());
        }
        match index.locate(t) {
            Ok(g) => {
                let beta = index.embed_finite(&g)?;
                let (mut v, r) = self.sigma(&g)?;
                v.add_scaled(t - beta, &self.mapping.steps.value(&g))?;
                Ok((v, r))
            }
            Err(Error::BeyondHorizon(h)) if self.runs.is_some() => {
                let tabs = self.runs.as_ref().unwrap();
                let j = h.digits()[0] as usize;
                let k = h.digits()[1] as usize;
                let xk = index.embed_finite(&h)?;
                let (mut v, mut r) = tabs.cum[j][k].clone();
                match &tabs.tails[j] {
                    Some(Remainder::Enclosure { ball, .. }) => {
                        v.add_scaled(t - xk, &ball.center)?;
                        r += (t - xk) * ball.radius;
                    }
                    Some(Remainder::Bound(b)) | Some(Remainder::Total { partial: b, .. }) => r += *b,
                    _ => return Err(Error::NotLocallySummable { cutoff: OrdinalAddress::new(&[j as u64]) }),
                }
                Ok((v, r))
            }
            Err(e) => Err(e),
        }
    }

    /// `f(d) − f(c)`.
    pub fn integral(&self, c: T, d: T) -> Result<(VectorValue<T>, T)> {
        let (fc, rc) = self.eval(c)?;
        let (fd, rd) = self.eval(d)?;
        Ok((fd.sub(&fc)?, rc + rd))
    }
}

/// `lim_{c→b−} ∫_a^c g` when it is certified.
pub fn improper_limit<T: Scalar>(g: &StepMapping<T>, tol: T, cfg: &SumConfig<T>) -> Option<(VectorValue<T>, T)> {
    let w = weighted_family(g);
    let report = classify(&w, tol, cfg);
    if report.verdict.is_certified() && report.verdict.is_true() {
        report.total
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_on_trivial_set() {
        let idx = WellOrderedSet::finite(vec![0.0, 1.0]).unwrap();
        let steps = Family::new(idx, |_: &OrdinalAddress| VectorValue::Real(std::f64::consts::E));
        let g = StepMapping::new(steps);
        let f = primitive(&g, 1e-9, &SumConfig::default()).unwrap();
        for t in [0.0, 0.25, 0.5, 1.0] {
            let (v, _) = f.eval(t).unwrap();
            assert!((v.coords()[0] - t * std::f64::consts::E).abs() < 1e-15);
        }
        let v = integrate_step(&g, Mode::Riemann, 1e-9, &SumConfig::default());
        assert!(v.riemann.is_true() && v.hk.is_true());
    }

    #[test]
    fn runs_primitive_with_tail() {
        use crate::ordinal::Run;
        use crate::spaces::Ball;
        let runs = vec![
            Run { knots: vec![0.0, 0.25, 0.4], limit: 0.5, open: true },
            Run { knots: vec![0.5, 0.75], limit: 1.0, open: false },
        ];
        let idx = WellOrderedSet::from_runs(runs, 1.0).unwrap();
        let steps = Family::new(idx, |_: &OrdinalAddress| VectorValue::Real(1.0f64));
        let g = StepMapping::new(steps).with_weighted_remainder(|a: &OrdinalAddress| {
            (a.digits() == [0, 1]).then_some(Remainder::Enclosure { width: 0.1, ball: Ball { center: VectorValue::Real(1.0f64), radius: 0.01 } })
        });
        let f = primitive(&g, 1e-9, &SumConfig::default()).unwrap();
        let (v, r) = f.eval(0.45).unwrap();
        assert!((v.coords()[0] - 0.45).abs() < 1e-12 && (r - 0.0005).abs() < 1e-12);
        let (v, r) = f.eval(1.0).unwrap();
        assert!((v.coords()[0] - 1.0).abs() < 1e-12 && (r - 0.001).abs() < 1e-12);
    }
}
