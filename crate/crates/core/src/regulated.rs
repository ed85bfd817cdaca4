//! Right-regulated mappings: oscillation partitions `Λ_ε`, step approximations `g_ε`,
//! integrability verdicts and CD primitives.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ordinal::{OrdinalAddress, Run, WellOrderedSet};
use crate::scalar::{Extended, Scalar};
use crate::spaces::{Ball, VectorValue};
use crate::step::{integrate_step, primitive, IntegrabilityVerdict, Mode, PrimitiveTrace, StepMapping};
use crate::transfinite::{partial_sum_lenient, Basis, Family, Remainder, SumConfig, Verdict};

/// Certified information on `∫_x^y ‖g‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AbsIntegral<T> {
    Bound(T),
    Divergent,
    Unknown,
}

/// A right-regulated mapping with optional analytic oracles. Every oracle returns `None` when it
/// cannot certify anything; sampling fallbacks then take over and results are marked uncertified.
pub trait RegulatedMapping<T: Scalar>: Send + Sync {
    /// `[a, b]`, or `[a, ∞)`.
    fn domain(&self) -> (T, Extended<T>);

    fn eval(&self, t: T) -> VectorValue<T>;

    /// `g(t+)`.
    fn right_limit(&self, _t: T) -> Option<VectorValue<T>> {
        None
    }

    /// Upper bound on `sup{‖g(s) − g(t)‖ : s, t ∈ (x, y)}`; must be monotone under inclusion.
    fn osc(&self, _x: T, _y: T) -> Option<T> {
        None
    }

    /// A ball containing `g(s)` for every `s ∈ (x, y)`.
    fn enclose(&self, _x: T, _y: T) -> Option<Ball<T>> {
        None
    }

    /// A ball containing the mean `(t − x)⁻¹∫_x^t g` for every `t ∈ (x, y]`.
    fn mean_enclosure(&self, x: T, y: T) -> Option<Ball<T>> {
        self.enclose(x, y)
    }

    /// A ball containing `∫_x^y g`.
    fn integral_enclosure(&self, _x: T, _y: T) -> Option<Ball<T>> {
        None
    }

    /// Bound on `‖∫_x^t g‖` for every `t ∈ (x, y]`.
    fn integral_bound(&self, x: T, y: T) -> Option<T> {
        self.mean_enclosure(x, y).map(|b| (y - x) * (b.center.norm().hi + b.radius))
    }

    fn abs_integral(&self, x: T, y: T) -> AbsIntegral<T> {
        match self.enclose(x, y) {
            Some(b) => AbsIntegral::Bound((y - x) * (b.center.norm().hi + b.radius)),
            None => AbsIntegral::Unknown,
        }
    }

    /// Declared bound on `‖g‖` over the domain.
    fn bound(&self) -> Option<T> {
        None
    }

    /// A point of `[x, y]` where `‖g‖ ≥ level`, for mappings declared unbounded there.
    fn unbounded_witness(&self, _x: T, _y: T, _level: T) -> Option<T> {
        None
    }

    /// Points of `(x, y]` whose left oscillation may reach `ε`; knots accumulate at them.
    fn singular_points(&self, _x: T, _y: T, _eps: T) -> Vec<T> {
        Vec::new()
    }

    /// Bound on the integral over `[x, y]` of the part of the mapping that `eval` omits.
    fn tail_integral_bound(&self, _x: T, _y: T) -> T {
        T::zero()
    }

    /// Bound on `‖∫_t^s g‖` for all `s ≥ t`, on unbounded domains.
    fn improper_tail_bound(&self, _t: T) -> Option<T> {
        None
    }

    /// Bound on `∫_t^∞ ‖g‖`, on unbounded domains.
    fn improper_abs_tail_bound(&self, _t: T) -> Option<T> {
        None
    }
}

const SAMPLE_POINTS: usize = 128;
const SAMPLE_ROUNDS: usize = 3;
const LATTICE: u32 = 4096;

/// Sup-norm diameter of `g` over stratified samples of `(x, y)`.
pub fn sampled_osc<T: Scalar, G: RegulatedMapping<T> + ?Sized>(g: &G, x: T, y: T) -> T {
    let offsets = [0.5, 0.118_033_988_749_895, 0.736_067_977_499_79];
    let mut lo: Vec<T> = Vec::new();
    let mut hi: Vec<T> = Vec::new();
    let mut tail = T::zero();
    let n = T::from_count(SAMPLE_POINTS as u64);
    for off in offsets.iter().take(SAMPLE_ROUNDS) {
        for i in 0..SAMPLE_POINTS {
            let s = x + (y - x) * (T::from_count(i as u64) + T::lit(*off)) / n;
            if !(s > x && s < y) {
                continue;
            }
            let v = g.eval(s);
            tail = tail.max(v.tail_bound());
            let c = v.coords();
            if lo.is_empty() {
                lo = c.to_vec();
                hi = c.to_vec();
            }
            for (k, &ck) in c.iter().enumerate() {
                lo[k] = lo[k].min(ck);
                hi[k] = hi[k].max(ck);
            }
        }
    }
    let spread = lo.iter().zip(&hi).fold(T::zero(), |m, (l, h)| m.max(*h - *l));
    spread + tail * T::lit(2.0)
}

/// `g(t+)` by sampling at `t + 2^{−k}h₀`, declared converged when successive values differ by
/// less than `tol/4`.
pub fn sampled_right_limit<T: Scalar, G: RegulatedMapping<T> + ?Sized>(g: &G, t: T, h0: T, tol: T) -> (VectorValue<T>, bool) {
    let mut prev = g.eval(t + h0);
    let mut h = h0;
    for _ in 0..40 {
        h /= T::lit(2.0);
        if t + h == t {
            break;
        }
        let v = g.eval(t + h);
        let d = v.distance(&prev).unwrap_or_else(|_| T::infinity());
        prev = v;
        if d < tol / T::lit(4.0) {
            return (prev, true);
        }
    }
    (prev, false)
}

fn right_value<T: Scalar, G: RegulatedMapping<T> + ?Sized>(g: &G, t: T) -> (VectorValue<T>, bool) {
    match g.right_limit(t) {
        Some(v) => (v, true),
        None => sampled_right_limit(g, t, T::lit(1e-3), T::lit(1e-9)),
    }
}

/// A certified (or sampled) lower estimate of `G_ε(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsStep<T> {
    pub y: T,
    /// Oscillation bound on `(x, y)`.
    pub osc: T,
    pub certified: bool,
    exponent: i32,
}

/// The largest point `x + 2^k(1 + m/4096) ≤ cap` whose oscillation on `(x, ·)` is at most `ε`.
fn lattice_step<T: Scalar>(osc: &dyn Fn(T, T) -> T, x: T, cap: T, eps: T, k_hint: i32) -> Result<(T, T, i32)> {
    let total = cap - x;
    let o = osc(x, cap);
    if o <= eps {
        return Ok((cap, o, k_hint));
    }
    let two = T::lit(2.0);
    let pow = |k: i32| two.powi(k);
    let mut k = k_hint.min(total.log2().floor().to_i32().unwrap_or(0));
    while pow(k) >= total {
        k -= 1;
    }
    let ok = |d: T| osc(x, x + d) <= eps;
    if ok(pow(k)) {
        while pow(k + 1) < total && ok(pow(k + 1)) {
            k += 1;
        }
    } else {
        loop {
            k -= 1;
            if x + pow(k) == x {
                return Err(Error::NoProgress { x: x.to_f64_lossy() });
            }
            if ok(pow(k)) {
                break;
            }
        }
    }
    let base = pow(k);
    let d_of = |m: u32| base * (T::one() + T::from_count(m as u64) / T::from_count(LATTICE as u64));
    let (mut lo, mut hi) = (0u32, LATTICE);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let d = d_of(mid);
        if d < total && ok(d) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = x + d_of(lo);
    if y <= x {
        return Err(Error::NoProgress { x: x.to_f64_lossy() });
    }
    Ok((y, osc(x, y), k))
}

fn step_with_cap<T: Scalar, G: RegulatedMapping<T> + ?Sized>(g: &G, x: T, cap: T, eps: T, k_hint: i32) -> Result<EpsStep<T>> {
    let certified = g.osc(x, cap).is_some();
    let osc = |u: T, v: T| -> T {
        if certified {
            g.osc(u, v).unwrap_or_else(T::infinity)
        } else {
            sampled_osc(g, u, v)
        }
    };
    let (y, o, k) = lattice_step(&osc, x, cap, eps, k_hint)?;
    Ok(EpsStep { y, osc: o, certified, exponent: k })
}

/// Lower estimate of `G_ε(x) = sup{y ∈ (x, b] : ‖g(s) − g(t)‖ ≤ ε for s, t ∈ (x, y)}`.
pub fn g_epsilon_step<T: Scalar, G: RegulatedMapping<T> + ?Sized>(g: &G, x: T, eps: T) -> Result<EpsStep<T>> {
    let (a, b) = g.domain();
    if x < a || Extended::Finite(x) >= b || !(eps > T::zero()) {
        return Err(Error::Invalid("need a ≤ x < b and ε > 0".into()));
    }
    let cap = b.finite().unwrap_or(x + T::lit(2f64.powi(30)));
    let cap = g.singular_points(x, cap, eps).into_iter().filter(|&r| r > x).fold(cap, |c, r| c.min(r));
    step_with_cap(g, x, cap, eps, 0)
}

/// What is known about the unenumerated part `[x_K, r)` of an open run.
#[derive(Clone, Debug)]
pub struct TailCertificate<T> {
    pub start: T,
    pub limit: T,
    pub values: Option<Ball<T>>,
    pub mean: Option<Ball<T>>,
    pub integral_bound: Option<T>,
    pub total: Option<Ball<T>>,
    pub abs: AbsIntegral<T>,
}

impl<T: Scalar> TailCertificate<T> {
    fn remainder(&self) -> Option<Remainder<T>> {
        let width = self.limit - self.start;
        if let Some(sum) = &self.total {
            let partial = match (&self.mean, self.integral_bound) {
                (_, Some(b)) => b,
                (Some(m), None) => width * (m.center.norm().hi + m.radius),
                _ => T::infinity(),
            };
            return Some(Remainder::Total { sum: sum.clone(), partial });
        }
        match (&self.mean, self.integral_bound) {
            (Some(b), _) => Some(Remainder::Enclosure { width, ball: b.clone() }),
            (None, Some(bound)) => Some(Remainder::Bound(bound)),
            _ => None,
        }
    }

    fn abs_remainder(&self) -> Option<Remainder<T>> {
        match self.abs {
            AbsIntegral::Bound(b) => Some(Remainder::Bound(b)),
            AbsIntegral::Divergent => Some(Remainder::Divergent),
            AbsIntegral::Unknown => None,
        }
    }

    /// Uncertainty of the tail's integral.
    pub fn value_residual(&self) -> T {
        self.total.as_ref().map_or_else(|| self.residual(), |b| b.radius.min(self.residual()))
    }

    /// Uncertainty of the tail's integral judged from the mean enclosure alone, which decides
    /// where runs are closed.
    pub fn residual(&self) -> T {
        let width = self.limit - self.start;
        match (&self.mean, self.integral_bound) {
            (Some(b), _) => width * b.radius,
            (None, Some(bound)) => bound,
            _ => T::infinity(),
        }
    }
}

/// `Λ_ε` on `[a, reached]`: runs of knots whose cells carry oscillation certificates, each non-final
/// run accumulating at the next one's start.
#[derive(Clone, Debug)]
pub struct OscPartition<T> {
    pub epsilon: T,
    pub set: WellOrderedSet<T>,
    /// Oscillation bound of every cell, run by run.
    pub cell_osc: Vec<Vec<T>>,
    pub tails: Vec<Option<TailCertificate<T>>>,
    /// `true` when every cell bound came from an analytic oracle.
    pub certified: bool,
    pub complete: bool,
    pub reached: T,
}

impl<T: Scalar> OscPartition<T> {
    /// `(start, end, oscillation bound)` of every certified cell.
    pub fn cells(&self) -> Vec<(T, T, T)> {
        let runs = self.set.runs().unwrap();
        let mut out = Vec::new();
        for (j, run) in runs.iter().enumerate() {
            for (k, &o) in self.cell_osc[j].iter().enumerate() {
                let end = run.knots.get(k + 1).copied().unwrap_or(run.limit);
                out.push((run.knots[k], end, o));
            }
        }
        out
    }

    /// `[x_K, r)` of every open run.
    pub fn gaps(&self) -> Vec<(T, T)> {
        self.tails.iter().flatten().map(|t| (t.start, t.limit)).collect()
    }

    pub fn knots(&self) -> Vec<T> {
        self.set.runs().unwrap().iter().flat_map(|r| r.knots.iter().copied()).collect()
    }

    pub fn knot_count(&self) -> usize {
        self.set.runs().unwrap().iter().map(|r| r.knots.len()).sum()
    }

    /// Total length of the certified cells.
    pub fn cell_length(&self) -> T {
        self.cells().iter().fold(T::zero(), |s, c| s + (c.1 - c.0))
    }

    pub fn tail_residual(&self) -> T {
        self.tails.iter().flatten().fold(T::zero(), |s, t| s + t.value_residual())
    }
}

fn tail_certificate<T: Scalar, G: RegulatedMapping<T> + ?Sized>(g: &G, x: T, r: T) -> TailCertificate<T> {
    TailCertificate {
        start: x,
        limit: r,
        values: g.enclose(x, r),
        mean: g.mean_enclosure(x, r),
        integral_bound: g.integral_bound(x, r),
        total: g.integral_enclosure(x, r),
        abs: g.abs_integral(x, r),
    }
}

/// Builds `Λ_ε` on `[a, b]` with at most `budget` knots. The iteration steps by `G_ε`; when the knots
/// approach a singular point `r`, the run is closed at `r` once the tail `[x_K, r)` has a certified
/// integral enclosure no larger than `ε` times the run length, and stepping restarts from `r`.
/// On budget exhaustion the partition covers `[a, reached]` and `complete` is `false`.
pub fn try_build_partition<T: Scalar, G: RegulatedMapping<T> + ?Sized>(g: &G, a: T, b: T, eps: T, budget: usize) -> Result<OscPartition<T>> {
    if !(a < b) || !(eps > T::zero()) {
        return Err(Error::Invalid("need a < b and ε > 0".into()));
    }
    let mut hints: Vec<T> = g.singular_points(a, b, eps).into_iter().filter(|&r| r > a && r <= b).collect();
    hints.sort_by(|p, q| p.partial_cmp(q).unwrap());
    hints.dedup();
    let mut runs: Vec<Run<T>> = Vec::new();
    let mut cell_osc: Vec<Vec<T>> = Vec::new();
    let mut tails: Vec<Option<TailCertificate<T>>> = Vec::new();
    let mut knots = vec![a];
    let mut oscs: Vec<T> = Vec::new();
    let mut run_start = a;
    let mut x = a;
    let mut h = 0usize;
    let mut k_hint = 0i32;
    let mut certified = true;
    let mut count = 1usize;
    let mut complete = true;
    loop {
        while h < hints.len() && hints[h] <= x {
            h += 1;
        }
        let (cap, hinted) = if h < hints.len() { (hints[h], true) } else { (b, false) };
        if hinted && knots.len() >= 2 {
            let tc = tail_certificate(g, x, cap);
            if tc.residual() <= eps * (cap - run_start) {
                runs.push(Run { knots: std::mem::take(&mut knots), limit: cap, open: true });
                cell_osc.push(std::mem::take(&mut oscs));
                tails.push(Some(tc));
                if cap >= b {
                    break;
                }
                knots.push(cap);
                run_start = cap;
                x = cap;
                count += 1;
                continue;
            }
        }
        let s = step_with_cap(g, x, cap, eps, k_hint)?;
        certified &= s.certified;
        k_hint = s.exponent;
        oscs.push(s.osc);
        if s.y >= b {
            runs.push(Run { knots: std::mem::take(&mut knots), limit: b, open: false });
            cell_osc.push(std::mem::take(&mut oscs));
            tails.push(None);
            break;
        }
        knots.push(s.y);
        x = s.y;
        count += 1;
        if count >= budget {
            complete = false;
            knots.pop();
            oscs.pop();
            if knots.is_empty() {
                // the budget ran out right after closing a run: that run becomes the last one
            } else {
                runs.push(Run { knots: std::mem::take(&mut knots), limit: x, open: false });
                cell_osc.push(std::mem::take(&mut oscs));
                tails.push(None);
            }
            break;
        }
    }
    let reached = if complete { b } else { runs.last().map(|r| r.limit).unwrap_or(a) };
    let set = WellOrderedSet::from_runs(runs, reached)?;
    Ok(OscPartition { epsilon: eps, set, cell_osc, tails, certified, complete, reached })
}

/// Like `try_build_partition`, failing with `BudgetExceeded` when the budget does not suffice.
pub fn build_partition<T: Scalar, G: RegulatedMapping<T> + ?Sized>(g: &G, a: T, b: T, eps: T, budget: usize) -> Result<OscPartition<T>> {
    let p = try_build_partition(g, a, b, eps, budget)?;
    if !p.complete {
        return Err(Error::BudgetExceeded { budget, reached: p.reached.to_f64_lossy() });
    }
    Ok(p)
}

/// Value given to the cell `[β, S(β))` of a step approximation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellRule {
    /// `g(β+)`.
    RightLimit,
    /// `g((β + S(β))/2)`; within ε of `g` on the cell as well, and second order on smooth cells.
    Midpoint,
}

/// `g_ε(t) = g(β+)` on `[β, S(β))`, with the tails of open runs carried as remainders.
pub fn step_approximation<T: Scalar, G: RegulatedMapping<T> + ?Sized>(g: &G, p: &OscPartition<T>) -> Result<StepMapping<T>> {
    step_approximation_with(g, p, CellRule::RightLimit)
}

/// [`step_approximation`] with the cell values chosen by `rule`.
pub fn step_approximation_with<T: Scalar, G: RegulatedMapping<T> + ?Sized>(
    g: &G,
    p: &OscPartition<T>,
    rule: CellRule,
) -> Result<StepMapping<T>> {
    let runs = p.set.runs().unwrap();
    let flat: Vec<(usize, usize, T, Option<T>)> = runs
        .iter()
        .enumerate()
        .flat_map(|(j, r)| {
            r.knots.iter().enumerate().map(move |(k, &x)| {
                let horizon = r.open && k + 1 == r.knots.len();
                let next = if horizon { None } else { Some(r.knots.get(k + 1).copied().unwrap_or(r.limit)) };
                (j, k, x, next)
            })
        })
        .collect();
    let vals: Vec<VectorValue<T>> = flat
        .par_iter()
        .map(|&(_, _, x, next)| match (rule, next) {
            (CellRule::Midpoint, Some(y)) if y > x => g.eval(T::lit(0.5) * (x + y)),
            _ => right_value(g, x).0,
        })
        .collect();
    let mut table: Vec<Vec<VectorValue<T>>> = runs.iter().map(|r| Vec::with_capacity(r.knots.len())).collect();
    for ((j, _, _, _), v) in flat.iter().zip(vals) {
        table[*j].push(v);
    }
    let terminal = g.eval(p.reached);
    let table = Arc::new(table);
    let term = terminal.clone();
    let tab = table.clone();
    let set = p.set.clone();
    let value = move |a: &OrdinalAddress| -> VectorValue<T> {
        let c = set.canonical(a).unwrap_or_else(|_| a.clone());
        if c.is_sup() {
            return term.clone();
        }
        let d = c.digits();
        if d.len() == 1 {
            return tab[d[0] as usize + 1][0].clone();
        }
        tab[d[0] as usize][d[1] as usize].clone()
    };
    let steps = Family::new(p.set.clone(), value);
    let horizon: Vec<Option<(u64, TailCertificate<T>)>> = runs
        .iter()
        .zip(&p.tails)
        .map(|(r, t)| t.as_ref().map(|t| (r.knots.len() as u64 - 2, t.clone())))
        .collect();
    let horizon = Arc::new(horizon);
    let hz = horizon.clone();
    let rem = move |a: &OrdinalAddress| -> Option<Remainder<T>> {
        let d = a.digits();
        match hz.get(*d.first()? as usize)? {
            Some((k, t)) if d.len() == 2 && d[1] == *k => t.remainder(),
            _ => None,
        }
    };
    let abs = move |a: &OrdinalAddress| -> Option<Remainder<T>> {
        let d = a.digits();
        match horizon.get(*d.first()? as usize)? {
            Some((k, t)) if d.len() == 2 && d[1] == *k => t.abs_remainder(),
            _ => None,
        }
    };
    Ok(StepMapping::new(steps).with_terminal(terminal).with_weighted_remainder(rem).with_weighted_abs_remainder(abs))
}

/// Budgets of the ε schedule.
#[derive(Clone, Debug)]
pub struct RegulatedConfig<T> {
    pub eps0: T,
    pub knot_budget: usize,
    pub max_levels: usize,
    /// Length of the compact part `[a, a + L]` used on unbounded domains.
    pub improper_horizon: T,
    pub cell_rule: CellRule,
    pub sum: SumConfig<T>,
}

impl<T: Scalar> Default for RegulatedConfig<T> {
    fn default() -> Self {
        RegulatedConfig {
            eps0: T::one(),
            knot_budget: 60_000,
            max_levels: 24,
            improper_horizon: T::lit(8.0),
            cell_rule: CellRule::Midpoint,
            sum: SumConfig::default(),
        }
    }
}

/// One level of the ε schedule.
#[derive(Clone, Debug)]
pub struct LevelReport<T> {
    pub epsilon: T,
    pub knots: usize,
    pub open_runs: usize,
    pub complete: bool,
    pub value: Option<VectorValue<T>>,
    pub residual: T,
}

#[derive(Clone, Debug)]
pub struct RegulatedIntegral<T> {
    pub verdict: IntegrabilityVerdict<T>,
    pub value: Option<(VectorValue<T>, T)>,
    /// Whether the certified residual meets the requested tolerance.
    pub tolerance_met: bool,
    pub levels: Vec<LevelReport<T>>,
    /// Cutoffs of summability, absolute summability and boundedness as points of `[a, b]`.
    pub cutoff_points: [Option<T>; 3],
    pub partition: Option<OscPartition<T>>,
    pub notes: Vec<String>,
}

struct Level<T> {
    partition: OscPartition<T>,
    steps: StepMapping<T>,
    value: Option<VectorValue<T>>,
    residual: T,
}

fn level<T: Scalar, G: RegulatedMapping<T> + ?Sized>(g: &G, a: T, b: T, eps: T, cfg: &RegulatedConfig<T>) -> Result<Level<T>> {
    let partition = try_build_partition(g, a, b, eps, cfg.knot_budget)?;
    let steps = step_approximation_with(g, &partition, cfg.cell_rule)?;
    let w = crate::step::weighted_family(&steps);
    let (value, sum_res) = match partial_sum_lenient(&w, &OrdinalAddress::sup(), eps * T::lit(1e-6), &cfg.sum) {
        Ok(o) => (Some(o.value), o.residual),
        Err(_) => (None, T::infinity()),
    };
    let residual = eps * partition.cell_length() + sum_res + g.tail_integral_bound(a, partition.reached);
    Ok(Level { partition, steps, value, residual })
}

fn report<T: Scalar>(l: &Level<T>) -> LevelReport<T> {
    LevelReport {
        epsilon: l.partition.epsilon,
        knots: l.partition.knot_count(),
        open_runs: l.partition.tails.iter().flatten().count(),
        complete: l.partition.complete,
        value: l.value.clone(),
        residual: l.residual,
    }
}

/// Boundedness of `g` on `[a, b]`.
fn riemann_verdict<T: Scalar, G: RegulatedMapping<T> + ?Sized>(g: &G, l: &Level<T>, a: T, b: T, notes: &mut Vec<String>) -> Verdict {
    let p = &l.partition;
    if p.complete && p.tails.iter().flatten().all(|t| t.values.as_ref().is_some_and(|v| v.radius.is_finite())) {
        return Verdict::True(if p.certified { Basis::Certified } else { Basis::Heuristic });
    }
    if let Some(m) = g.bound() {
        let slack = m * T::lit(1e-9);
        let runs = p.set.runs().unwrap();
        let violated = runs.iter().flat_map(|r| r.knots.iter()).any(|&x| g.eval(x).norm().lo > m + slack);
        if violated {
            notes.push("declared bound contradicted at a knot".into());
            return Verdict::Inconclusive;
        }
        return Verdict::True(Basis::Declared);
    }
    let levels = [1e2, 1e4, 1e6];
    let witnessed = levels.iter().all(|&lv| {
        let lv = T::lit(lv);
        g.unbounded_witness(a, b, lv).is_some_and(|s| s >= a && s <= b && g.eval(s).norm().lo >= lv)
    });
    if witnessed {
        notes.push("unboundedness witnessed at levels 1e2, 1e4, 1e6".into());
        return Verdict::False(Basis::Declared);
    }
    Verdict::Inconclusive
}

/// Integrability of `g` on `[a, b]` (`b` may be `+∞`) and its integral. Verdicts come from the
/// coarsest partition; the value comes from halving `ε` until `ε·(b − a) ≤ tol/2` and the residual
/// is at most `tol`, or until the knot budget stops the refinement.
pub fn integrate_regulated<T: Scalar, G: RegulatedMapping<T> + ?Sized>(
    g: &G,
    a: T,
    b: Extended<T>,
    mode: Mode,
    tol: T,
    cfg: &RegulatedConfig<T>,
) -> Result<RegulatedIntegral<T>> {
    let mut notes = Vec::new();
    let (bf, unbounded) = match b {
        Extended::Finite(b) => (b, false),
        Extended::PosInf => {
            notes.push(format!("unbounded domain: compact part [a, a + {}] plus declared tail bounds", cfg.improper_horizon));
            (a + cfg.improper_horizon, true)
        }
    };
    let len = bf - a;
    let first = level(g, a, bf, cfg.eps0, cfg)?;
    let mut verdict = integrate_step(&first.steps, mode, tol, &cfg.sum);
    verdict.riemann = riemann_verdict(g, &first, a, bf, &mut notes);
    notes.append(&mut verdict.notes);
    if !first.partition.complete {
        notes.push(format!("coarsest partition stopped at {} by the knot budget", first.partition.reached));
        for v in [&mut verdict.hl, &mut verdict.hk, &mut verdict.bochner, &mut verdict.riemann] {
            if v.is_true() {
                *v = Verdict::Inconclusive;
            }
        }
    }
    if unbounded {
        let tail = g.improper_tail_bound(bf);
        let abs_tail = g.improper_abs_tail_bound(bf);
        if tail.is_none() && verdict.hk.is_true() {
            verdict.hk = Verdict::Inconclusive;
            verdict.hl = Verdict::Inconclusive;
        } else if verdict.hk.is_true() {
            verdict.hk = Verdict::True(Basis::Declared);
        }
        if abs_tail.is_none() && verdict.bochner.is_true() {
            verdict.bochner = Verdict::Inconclusive;
        } else if verdict.bochner.is_true() {
            verdict.bochner = Verdict::True(Basis::Declared);
        }
        verdict.riemann = match (verdict.riemann, verdict.hk) {
            (Verdict::True(_), Verdict::True(_)) => Verdict::True(Basis::Declared),
            _ => Verdict::Inconclusive,
        };
        if verdict.hl.is_true() && !verdict.bochner.is_true() && !matches!(first.steps.steps.zero(), VectorValue::TruncCZero { .. }) {
            verdict.hl = verdict.hk;
        } else if !verdict.bochner.is_true() {
            verdict.hl = if verdict.hk.is_false() { verdict.hk } else { Verdict::Inconclusive };
        }
    }
    verdict.reconcile(!unbounded);
    let emb = |c: &Option<OrdinalAddress>| c.as_ref().and_then(|c| first.partition.set.embed(c).ok()).and_then(|e| e.finite());
    let cutoff_points = [emb(&verdict.hl_cutoff), emb(&verdict.bochner_cutoff), emb(&verdict.riemann_cutoff)];

    let mut levels = vec![report(&first)];
    let mut best: Option<Level<T>> = None;
    let mut current = first;
    let half = tol / T::lit(2.0);
    'schedule: for _ in 0..cfg.max_levels {
        if current.partition.complete && current.value.is_some() {
            let done = current.partition.epsilon * len <= half && current.residual <= tol;
            best = Some(current);
            if done {
                break 'schedule;
            }
        } else {
            break 'schedule;
        }
        let prev = best.as_ref().unwrap();
        let eps = prev.partition.epsilon / T::lit(2.0);
        if levels.len() >= 2 {
            let n = levels.len();
            let growth = T::from_count(levels[n - 1].knots as u64) / T::from_count(levels[n - 2].knots.max(1) as u64);
            let predicted = T::from_count(levels[n - 1].knots as u64) * growth.max(T::one());
            if predicted > T::from_count(cfg.knot_budget as u64) {
                notes.push(format!("refinement stopped: level ε = {eps} would need about {predicted} knots"));
                break 'schedule;
            }
        }
        let next = level(g, a, bf, eps, cfg)?;
        levels.push(report(&next));
        if !next.partition.complete {
            notes.push(format!("knot budget exhausted at ε = {eps}"));
            break 'schedule;
        }
        current = next;
    }
    let mut value = None;
    let mut partition = None;
    let mut tolerance_met = false;
    if let Some(l) = best {
        let mut residual = l.residual;
        if unbounded {
            residual += g.improper_tail_bound(bf).unwrap_or_else(T::infinity);
        }
        tolerance_met = residual <= tol;
        if !tolerance_met {
            notes.push(format!("certified residual {residual} exceeds tolerance {tol}"));
        }
        value = l.value.clone().map(|v| (v, residual));
        partition = Some(l.partition);
    }
    verdict.integral = value.clone().filter(|_| verdict.hk.is_true() || verdict.bochner.is_true());
    Ok(RegulatedIntegral { verdict, value, tolerance_met, levels, cutoff_points, partition, notes })
}

/// A primitive of `g` on `[a, b]`: the primitive of `g_ε` plus the bound `ε(t − a)`.
pub struct CdPrimitive<T> {
    pub trace: PrimitiveTrace<T>,
    pub epsilon: T,
    pub a: T,
    pub tail_bound: T,
}

impl<T: Scalar> CdPrimitive<T> {
    pub fn eval(&self, t: T) -> Result<(VectorValue<T>, T)> {
        let (v, r) = self.trace.eval(t)?;
        Ok((v, r + self.epsilon * (t - self.a) + self.tail_bound))
    }
}

/// The CD primitive of a locally HL integrable `g` with `f(a) = 0`.
pub fn cd_primitive<T: Scalar, G: RegulatedMapping<T> + ?Sized>(g: &G, a: T, b: T, tol: T, cfg: &RegulatedConfig<T>) -> Result<CdPrimitive<T>> {
    let r = integrate_regulated(g, a, Extended::Finite(b), Mode::Hl, tol, cfg)?;
    if r.verdict.hl.is_false() {
        let c = r.cutoff_points[0].unwrap_or(b);
        return Err(Error::NotLocallyIntegrable { cutoff: c.to_f64_lossy() });
    }
    let p = r.partition.ok_or_else(|| Error::Invalid("no complete partition within the knot budget".into()))?;
    let steps = step_approximation(g, &p)?;
    let trace = primitive(&steps, p.epsilon, &cfg.sum)?;
    Ok(CdPrimitive { trace, epsilon: p.epsilon, a, tail_bound: g.tail_integral_bound(a, b) })
}

/// Knots of `Λ_{1/n}` for `n ≤ n_max`, with the knots where left samples disagree with `g(t+)`.
#[derive(Clone, Debug, Default)]
pub struct Discontinuities<T> {
    pub knots: Vec<T>,
    /// Accumulation points of knots.
    pub limits: Vec<T>,
    pub jumps: Vec<T>,
}

pub fn discontinuities<T: Scalar, G: RegulatedMapping<T> + ?Sized>(g: &G, a: T, b: T, n_max: usize, budget: usize) -> Result<Discontinuities<T>> {
    let mut knots = Vec::new();
    let mut limits = Vec::new();
    for n in 1..=n_max.max(1) {
        let eps = T::one() / T::from_count(n as u64);
        let p = try_build_partition(g, a, b, eps, budget)?;
        knots.extend(p.knots());
        limits.extend(p.gaps().into_iter().map(|g| g.1));
    }
    let sort = |v: &mut Vec<T>| {
        v.sort_by(|p, q| p.partial_cmp(q).unwrap());
        v.dedup();
    };
    sort(&mut knots);
    sort(&mut limits);
    let thr = T::one() / T::from_count(2 * n_max.max(1) as u64);
    let mut candidates = knots.clone();
    candidates.extend(limits.iter().copied());
    sort(&mut candidates);
    let jumps = candidates
        .par_iter()
        .copied()
        .filter(|&t| t > a && t <= b)
        .filter(|&t| {
            let right = right_value(g, t).0;
            (0..8).all(|k| {
                let s = t - (t - a).min(T::one()) * T::lit(2f64.powi(-(12 + 4 * k)));
                s < t && g.eval(s).distance(&right).unwrap_or_else(|_| T::zero()) > thr
            })
        })
        .collect();
    Ok(Discontinuities { knots, limits, jumps })
}

/// A step mapping viewed as a right-regulated mapping, with exact oscillation over its enumerated
/// steps and its knots as singular points.
pub struct StepAsRegulated<T> {
    pub mapping: StepMapping<T>,
    knots: Vec<T>,
    values: Vec<VectorValue<T>>,
}

impl<T: Scalar> StepAsRegulated<T> {
    pub fn new(mapping: StepMapping<T>, budget: usize) -> Self {
        let cursors = mapping.index().enumerate(budget);
        let knots = cursors.iter().map(|c| c.value).collect();
        let values = cursors.iter().map(|c| mapping.steps.value(&c.current)).collect();
        StepAsRegulated { mapping, knots, values }
    }

    fn horizon_end(&self) -> T {
        self.knots.last().copied().unwrap_or_else(T::zero)
    }
}

impl<T: Scalar> RegulatedMapping<T> for StepAsRegulated<T> {
    fn domain(&self) -> (T, Extended<T>) {
        self.mapping.interval()
    }

    fn eval(&self, t: T) -> VectorValue<T> {
        self.mapping.eval(t).unwrap_or_else(|_| self.mapping.steps.zero().map_coords(|_| T::nan()))
    }

    fn right_limit(&self, t: T) -> Option<VectorValue<T>> {
        self.mapping.eval(t).ok()
    }

    fn osc(&self, x: T, y: T) -> Option<T> {
        if y > self.horizon_end() && Extended::Finite(y) < self.mapping.interval().1 {
            return None;
        }
        let i = self.knots.partition_point(|&k| k <= x).max(1) - 1;
        let j = self.knots.partition_point(|&k| k < y);
        let vs = &self.values[i..j.max(i + 1)];
        let mut o = T::zero();
        for u in vs {
            for v in vs {
                o = o.max(u.distance(v).ok()?);
            }
        }
        Some(o)
    }

    fn enclose(&self, x: T, y: T) -> Option<Ball<T>> {
        let o = self.osc(x, y)?;
        Some(Ball { center: self.eval(x), radius: o })
    }

    fn singular_points(&self, x: T, y: T, _eps: T) -> Vec<T> {
        self.knots.iter().copied().filter(|&k| k > x && k <= y).collect()
    }
}
