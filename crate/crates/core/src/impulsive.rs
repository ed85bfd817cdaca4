//! Impulsive problems `u′ = f(t, u(t))` a.e., `Δu(λ) = D(λ, u)` on a well-ordered set `Λ`:
//! the explicit solution for fixed data and extremal solutions by monotone iteration.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gallery::{SeriesMapping, zeta2_partial};
use crate::ordinal::{Layer, OrdinalAddress, WellOrderedSet};
use crate::regulated::{cd_primitive, RegulatedConfig, RegulatedMapping};
use crate::scalar::{Extended, Tri};
use crate::spaces::VectorValue;
use crate::step::{primitive, StepMapping};
use crate::transfinite::{partial_sum, Family, SumConfig};

type V = VectorValue<f64>;
pub type ValueAt = Arc<dyn Fn(f64) -> V + Send + Sync>;
pub type PrimitiveAt = Arc<dyn Fn(f64) -> (V, f64) + Send + Sync>;
pub type Coupling = Arc<dyn Fn(f64, &V) -> V + Send + Sync>;
pub type ImpulseMap = Arc<dyn Fn(&OrdinalAddress, &V) -> V + Send + Sync>;
pub type ImpulseBound = Arc<dyn Fn(&OrdinalAddress) -> V + Send + Sync>;

/// The `u`-independent part of the right-hand side with a primitive `F` (any additive constant).
#[derive(Clone)]
pub struct Forcing {
    pub value: ValueAt,
    /// `F(t)` and an error bound.
    pub primitive: PrimitiveAt,
}

impl Forcing {
    /// A series mapping with its closed-form primitive, projected to the first `dim` coordinates.
    pub fn series(g: SeriesMapping, dim: usize) -> Self {
        let g = Arc::new(g);
        let h = g.clone();
        Forcing {
            value: Arc::new(move |t| project(&g.eval(t), dim)),
            primitive: Arc::new(move |t| {
                let (v, r) = h.primitive(t);
                (project(&v, dim), r)
            }),
        }
    }

    /// The CD primitive of a locally HL integrable mapping on `[a, c]`.
    pub fn regulated(g: Arc<dyn RegulatedMapping<f64>>, a: f64, c: f64, tol: f64, cfg: &RegulatedConfig<f64>) -> Result<Self> {
        let p = Arc::new(cd_primitive(g.as_ref(), a, c, tol, cfg)?);
        Ok(Forcing {
            value: Arc::new(move |t| g.eval(t)),
            primitive: Arc::new(move |t| p.eval(t).unwrap_or((V::Real(f64::NAN), f64::INFINITY))),
        })
    }

    /// A step mapping with its primitive `σ(γ) + (t − γ)z_γ`.
    pub fn step(g: StepMapping<f64>, tol: f64, cfg: &SumConfig<f64>) -> Result<Self> {
        let p = Arc::new(primitive(&g, tol, cfg)?);
        Ok(Forcing {
            value: Arc::new(move |t| g.eval(t).unwrap_or(V::Real(f64::NAN))),
            primitive: Arc::new(move |t| p.eval(t).unwrap_or((V::Real(f64::NAN), f64::INFINITY))),
        })
    }
}

/// First `dim` coordinates as an element of ℝ^dim.
pub fn project(v: &V, dim: usize) -> V {
    let c = v.coords();
    V::RealVec((0..dim).map(|i| c.get(i).copied().unwrap_or(0.0)).collect())
}

/// `u′ = forcing(t) + coupling(t, u(t))` on `[a, c)` with `Δu(λ) = impulse(λ, u(λ))`.
/// `coupling` and `impulse` are declared increasing in `u`, and bracketed by the envelopes.
#[derive(Clone)]
pub struct ImpulsiveProblem {
    pub a: f64,
    pub c: f64,
    pub zero: V,
    pub forcing: Option<Forcing>,
    pub coupling: Option<Coupling>,
    pub coupling_bounds: Option<(ValueAt, ValueAt)>,
    pub impulses: WellOrderedSet<f64>,
    pub impulse: ImpulseMap,
    pub impulse_bounds: Option<(ImpulseBound, ImpulseBound)>,
    /// Bound on the total of the impulses beyond the enumeration horizon.
    pub impulse_tail: f64,
    /// Impulses enumerated per infinite layer.
    pub impulse_budget: u64,
}

impl ImpulsiveProblem {
    /// The problem `u′ = forcing`, `Δu(λ) = z(λ)` with data independent of `u`.
    pub fn fixed(a: f64, c: f64, zero: V, forcing: Option<Forcing>, z: Family<f64>) -> Self {
        let f = z.clone();
        let g = z.clone();
        let h = z.clone();
        ImpulsiveProblem {
            a,
            c,
            zero,
            forcing,
            coupling: None,
            coupling_bounds: None,
            impulses: z.index.clone(),
            impulse: Arc::new(move |l, _| f.value(l)),
            impulse_bounds: Some((Arc::new(move |l| g.value(l)), Arc::new(move |l| h.value(l)))),
            impulse_tail: 0.0,
            impulse_budget: 48,
        }
    }

    /// Enumerated impulse times in `[a, c)`.
    pub fn impulse_times(&self) -> Vec<(OrdinalAddress, f64)> {
        let per_layer = vec![self.impulse_budget; self.impulses.depth()];
        self.impulses
            .horizon(&per_layer)
            .into_iter()
            .filter(|c| c.value >= self.a && c.value < self.c)
            .map(|c| (c.current, c.value))
            .collect()
    }

    fn forcing_primitive(&self, t: f64) -> (V, f64) {
        match &self.forcing {
            Some(f) => (f.primitive)(t),
            None => (self.zero.clone(), 0.0),
        }
    }

    /// `f(t, x)`.
    pub fn rhs(&self, t: f64, x: &V) -> V {
        let mut v = match &self.forcing {
            Some(f) => (f.value)(t),
            None => self.zero.clone(),
        };
        if let Some(q) = &self.coupling {
            v = v.add(&q(t, x)).unwrap();
        }
        v
    }
}

/// `u(t) = Σ_{λ ∈ Λ^{<t}} z(λ) + ∫_a^t g`, each part within `tol/2`.
pub fn solve_fixed(forcing: Option<&Forcing>, z: &Family<f64>, a: f64, t: f64, tol: f64) -> Result<(V, f64)> {
    let cfg = SumConfig::default();
    let set = &z.index;
    let below = if t <= set.min() {
        None
    } else if Extended::Finite(t) >= set.sup() {
        Some(OrdinalAddress::sup())
    } else {
        let g = set.locate(t)?;
        Some(if set.embed_finite(&g)? < t { set.successor(&g)? } else { g })
    };
    let (mut v, mut r) = match below {
        Some(g) => partial_sum(z, &g, tol / 2.0, &cfg)?,
        None => (z.zero(), 0.0),
    };
    if let Some(f) = forcing {
        let (ft, rt) = (f.primitive)(t);
        let (fa, ra) = (f.primitive)(a);
        v = v.add(&ft.sub(&fa)?)?;
        r += rt + ra;
    }
    Ok((v, r))
}

/// Evaluation nodes: a uniform background grid plus every enumerated impulse time.
#[derive(Clone, Debug)]
pub struct Grid {
    pub t: Vec<f64>,
    pub impulse: Vec<Option<OrdinalAddress>>,
    forcing: Vec<V>,
}

impl Grid {
    pub fn new(p: &ImpulsiveProblem, per_unit: usize) -> Self {
        let n = (((p.c - p.a) * per_unit as f64).ceil() as usize).max(1);
        let mut pts: Vec<(f64, Option<OrdinalAddress>)> = (0..=n).map(|j| (p.a + (p.c - p.a) * j as f64 / n as f64, None)).collect();
        pts.extend(p.impulse_times().into_iter().map(|(l, t)| (t, Some(l))));
        pts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(y.1.is_some().cmp(&x.1.is_some())));
        pts.dedup_by(|later, earlier| later.0 == earlier.0);
        let forcing = pts.par_iter().map(|(t, _)| p.forcing_primitive(*t).0).collect();
        let (t, impulse) = pts.into_iter().unzip();
        Grid { t, impulse, forcing }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// A left-continuous trajectory: `left[j] = u(t_j)`, `right[j] = u(t_j+)`, and the coupling values
/// whose linear interpolation was integrated between nodes.
#[derive(Clone)]
pub struct Trajectory {
    pub grid: Arc<Grid>,
    pub left: Vec<V>,
    pub right: Vec<V>,
    coupling_right: Vec<V>,
    coupling_left: Vec<V>,
    forcing: Option<PrimitiveAt>,
    /// Bound on the error from unenumerated impulses and primitive truncation.
    pub residual: f64,
}

impl Trajectory {
    pub fn eval(&self, t: f64) -> V {
        let g = &self.grid;
        let j = g.t.partition_point(|&x| x < t);
        if j == 0 {
            return self.left[0].clone();
        }
        if j >= g.len() {
            return self.right[g.len() - 1].clone();
        }
        if g.t[j] == t {
            return self.left[j].clone();
        }
        let i = j - 1;
        let (t0, t1) = (g.t[i], g.t[j]);
        let s = t - t0;
        let hlen = t1 - t0;
        let mut v = self.right[i].clone();
        if let Some(f) = &self.forcing {
            v = v.add(&f(t).0.sub(&g.forcing[i]).unwrap()).unwrap();
        }
        let slope = self.coupling_left[j].sub(&self.coupling_right[i]).unwrap();
        v.add_scaled(s, &self.coupling_right[i]).unwrap();
        v.add_scaled(s * s / (2.0 * hlen), &slope).unwrap();
        v
    }

    /// Samples `(t, u(t))` at every node, with right values after jumps.
    pub fn samples(&self) -> Vec<(f64, V, bool)> {
        let mut out = Vec::with_capacity(self.grid.len() * 2);
        for j in 0..self.grid.len() {
            out.push((self.grid.t[j], self.left[j].clone(), false));
            if self.grid.impulse[j].is_some() {
                out.push((self.grid.t[j], self.right[j].clone(), true));
            }
        }
        out
    }
}

/// `u(λ+) − u(λ)` sampled from the right at `λ + 2^{−k}`.
pub fn jump_check(u: &Trajectory, lambda: f64) -> V {
    let at = u.eval(lambda);
    let mut best = u.eval(lambda + 1e-6).sub(&at).unwrap();
    for k in [1e-8, 1e-10, 1e-12] {
        let s = lambda + k * lambda.abs().max(1.0);
        if s > lambda {
            best = u.eval(s).sub(&at).unwrap();
        }
    }
    best
}

/// Limits of the monotone iteration.
#[derive(Clone, Debug)]
pub struct IterationConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub grid_per_unit: usize,
    /// Allowed violation of the declared order, from rounding.
    pub slack: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig { tol: 1e-5, max_iter: 200, grid_per_unit: 512, slack: 1e-12 }
    }
}

#[derive(Clone, Debug)]
pub struct IterationRecord {
    /// `"lower"` for the chain from `w_−`, `"upper"` for the chain from `w_+`.
    pub chain: &'static str,
    pub iteration: usize,
    pub change: f64,
}

pub struct ExtremalSolutions {
    pub lower: Trajectory,
    pub upper: Trajectory,
    pub iterations: (usize, usize),
    /// Grid sup-norm of `u^* − u_*`.
    pub gap: f64,
    /// Grid sup-norm of `G(u) − u` for both chains.
    pub residuals: (f64, f64),
    pub log: Vec<IterationRecord>,
}

fn sup_diff(x: &[V], y: &[V]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a.distance(b).unwrap()).fold(0.0, f64::max)
}

fn ordered(x: &[V], y: &[V], slack: f64) -> bool {
    x.iter().zip(y).all(|(a, b)| a.coords().iter().zip(b.coords()).all(|(p, q)| *p <= *q + slack * (1.0 + q.abs())))
}

struct Data {
    coupling_right: Vec<V>,
    coupling_left: Vec<V>,
    jumps: Vec<Option<V>>,
}

fn integrate(p: &ImpulsiveProblem, grid: &Arc<Grid>, d: Data, residual: f64) -> Trajectory {
    let n = grid.len();
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let mut cur = p.zero.clone();
    for j in 0..n {
        left.push(cur.clone());
        if let Some(z) = &d.jumps[j] {
            cur = cur.add(z).unwrap();
        }
        right.push(cur.clone());
        if j + 1 < n {
            let hlen = grid.t[j + 1] - grid.t[j];
            cur = cur.add(&grid.forcing[j + 1].sub(&grid.forcing[j]).unwrap()).unwrap();
            cur.add_scaled(0.5 * hlen, &d.coupling_right[j]).unwrap();
            cur.add_scaled(0.5 * hlen, &d.coupling_left[j + 1]).unwrap();
        }
    }
    Trajectory {
        grid: grid.clone(),
        left,
        right,
        coupling_right: d.coupling_right,
        coupling_left: d.coupling_left,
        forcing: p.forcing.as_ref().map(|f| f.primitive.clone()),
        residual,
    }
}

/// `Gu(t) = Σ_{λ<t} D(λ, u) + ∫_a^t f(s, u(s)) ds` on the grid.
fn apply(p: &ImpulsiveProblem, u: &Trajectory) -> Trajectory {
    let g = &u.grid;
    let zero = p.zero.clone();
    let (cr, cl): (Vec<V>, Vec<V>) = (0..g.len())
        .into_par_iter()
        .map(|j| match &p.coupling {
            Some(q) => (q(g.t[j], &u.right[j]), q(g.t[j], &u.left[j])),
            None => (zero.clone(), zero.clone()),
        })
        .unzip();
    let jumps = g.impulse.iter().enumerate().map(|(j, l)| l.as_ref().map(|l| (p.impulse)(l, &u.left[j]))).collect();
    integrate(p, g, Data { coupling_right: cr, coupling_left: cl, jumps }, u.residual)
}

fn envelope(p: &ImpulsiveProblem, grid: &Arc<Grid>, upper: bool) -> Result<Trajectory> {
    let missing = || Error::Invalid("envelopes are required for the monotone iteration".into());
    let c: Vec<V> = match (&p.coupling, &p.coupling_bounds) {
        (None, _) => vec![p.zero.clone(); grid.len()],
        (Some(_), Some((lo, hi))) => grid.t.par_iter().map(|&t| if upper { hi(t) } else { lo(t) }).collect(),
        (Some(_), None) => return Err(missing()),
    };
    let (zlo, zhi) = p.impulse_bounds.as_ref().ok_or_else(missing)?;
    let jumps = grid.impulse.iter().map(|l| l.as_ref().map(|l| if upper { zhi(l) } else { zlo(l) })).collect();
    let residual = p.impulse_tail + p.forcing.as_ref().map_or(0.0, |f| 2.0 * (f.primitive)(p.a).1);
    Ok(integrate(p, grid, Data { coupling_right: c.clone(), coupling_left: c, jumps }, residual))
}

fn chain(p: &ImpulsiveProblem, start: Trajectory, ascending: bool, cfg: &IterationConfig) -> Result<(Trajectory, usize, Vec<IterationRecord>)> {
    let name = if ascending { "lower" } else { "upper" };
    let mut u = start;
    let mut log = Vec::new();
    for k in 1..=cfg.max_iter {
        let next = apply(p, &u);
        let ok = if ascending {
            ordered(&u.left, &next.left, cfg.slack) && ordered(&u.right, &next.right, cfg.slack)
        } else {
            ordered(&next.left, &u.left, cfg.slack) && ordered(&next.right, &u.right, cfg.slack)
        };
        if !ok {
            let j = u.left.iter().zip(&next.left).position(|(a, b)| {
                a.coords().iter().zip(b.coords()).any(|(x, y)| if ascending { x > y } else { y > x })
            });
            return Err(Error::MonotonicityViolation { iteration: k, t: j.map_or(f64::NAN, |j| u.grid.t[j]) });
        }
        let change = sup_diff(&next.left, &u.left).max(sup_diff(&next.right, &u.right));
        log.push(IterationRecord { chain: name, iteration: k, change });
        u = next;
        if change <= cfg.tol {
            return Ok((u, k, log));
        }
    }
    Err(Error::MaxIterExceeded { iterations: cfg.max_iter, gap: log.last().map_or(f64::INFINITY, |r| r.change) })
}

/// Iterates `G` from `w_−` upward and from `w_+` downward until successive iterates differ by at
/// most `tol` on the grid, checking the declared order at every step.
pub fn extremal_solutions(p: &ImpulsiveProblem, cfg: &IterationConfig) -> Result<ExtremalSolutions> {
    let grid = Arc::new(Grid::new(p, cfg.grid_per_unit));
    let lo = envelope(p, &grid, false)?;
    let hi = envelope(p, &grid, true)?;
    if !ordered(&lo.left, &hi.left, cfg.slack) {
        return Err(Error::MonotonicityViolation { iteration: 0, t: p.a });
    }
    let (a, b) = rayon::join(|| chain(p, lo, true, cfg), || chain(p, hi, false, cfg));
    let (lower, ka, mut log) = a?;
    let (upper, kb, log_b) = b?;
    log.extend(log_b);
    if !ordered(&lower.left, &upper.left, cfg.slack) || !ordered(&lower.right, &upper.right, cfg.slack) {
        return Err(Error::MonotonicityViolation { iteration: ka.max(kb), t: f64::NAN });
    }
    let gap = sup_diff(&upper.left, &lower.left).max(sup_diff(&upper.right, &lower.right));
    let rl = apply(p, &lower);
    let ru = apply(p, &upper);
    let residuals = (
        sup_diff(&rl.left, &lower.left).max(sup_diff(&rl.right, &lower.right)),
        sup_diff(&ru.left, &upper.left).max(sup_diff(&ru.right, &upper.right)),
    );
    Ok(ExtremalSolutions { lower, upper, iterations: (ka, kb), gap, residuals, log })
}

/// `u_* ≤ u^*` at every node, as a tri-state.
pub fn bracket(s: &ExtremalSolutions) -> Tri {
    let mut acc = Tri::True;
    for (a, b) in s.lower.left.iter().zip(&s.upper.left) {
        acc = acc.and(a.leq(b).unwrap_or(Tri::Unknown));
    }
    acc
}

/// Largest `‖(u(t+δ) − u(t−δ))/2δ − f(t, u(t))‖` over the given points.
pub fn derivative_check(p: &ImpulsiveProblem, u: &Trajectory, points: &[f64], delta: f64) -> f64 {
    points
        .par_iter()
        .map(|&t| {
            let d = u.eval(t + delta).sub(&u.eval(t - delta)).unwrap().scale(0.5 / delta);
            d.distance(&p.rhs(t, &u.eval(t))).unwrap()
        })
        .reduce(|| 0.0, f64::max)
}

/// `q_i(s) = 2^{−i} Σ_{m ≤ i} Σ_{k ≤ K} (π/2 + arctan(k^{1/m} s))/(km)²` for `i = 1..dim`,
/// applied to the partial sums `s_i = x_1 + … + x_i`.
#[derive(Clone, Debug)]
pub struct ArctanCoupling {
    pub dim: usize,
    pub terms: usize,
    roots: Vec<Vec<f64>>,
}

impl ArctanCoupling {
    pub fn new(dim: usize, terms: usize) -> Self {
        let roots = (1..=dim).map(|m| (1..=terms).map(|k| (k as f64).powf(1.0 / m as f64)).collect()).collect();
        ArctanCoupling { dim, terms, roots }
    }

    pub fn q(&self, i: usize, s: f64) -> f64 {
        let mut acc = 0.0;
        for m in 1..=i {
            let mf = m as f64;
            for (k, r) in self.roots[m - 1].iter().enumerate() {
                let kf = (k + 1) as f64;
                acc += (std::f64::consts::FRAC_PI_2 + (r * s).atan()) / (kf * mf * kf * mf);
            }
        }
        acc * 0.5f64.powi(i as i32)
    }

    pub fn apply(&self, x: &V) -> V {
        let c = x.coords();
        let mut s = 0.0;
        V::RealVec(
            (1..=self.dim)
                .map(|i| {
                    s += c.get(i - 1).copied().unwrap_or(0.0);
                    self.q(i, s)
                })
                .collect(),
        )
    }

    /// `sup_s q_i(s)` for every coordinate.
    pub fn upper(&self) -> V {
        let kz = zeta2_partial(self.terms);
        V::RealVec(
            (1..=self.dim)
                .map(|i| {
                    let mz: f64 = (1..=i).map(|m| 1.0 / (m * m) as f64).sum();
                    0.5f64.powi(i as i32) * std::f64::consts::PI * kz * mz
                })
                .collect(),
        )
    }
}

/// `u′ = g₀(t) + (q_i(x_1 + … + x_i))_i`, `Δu(λ) = (2^{−i} z_λ)_i` with `λ = n₀ + 1 − 2^{−n₁}`,
/// `z_λ = 2^{−n₀−n₁}`, on `[0, c)` in the first `dim` coordinates. Coordinate `i` depends only on
/// coordinates up to `i`, so the projection is exact.
pub fn example_problem(dim: usize, c: f64) -> ImpulsiveProblem {
    let q = Arc::new(ArctanCoupling::new(dim, 32));
    let qmax = q.upper();
    let zero = V::RealVec(vec![0.0; dim]);
    let impulses = WellOrderedSet::unit_steps(0.0, vec![Layer::Dyadic]).expect("valid set");
    let jump = move |l: &OrdinalAddress| -> V {
        let d = l.digits();
        let z = 0.5f64.powi((d[0] + d.get(1).copied().unwrap_or(0)) as i32);
        V::RealVec((1..=dim).map(|i| z * 0.5f64.powi(i as i32)).collect())
    };
    let jump = Arc::new(jump);
    let (j1, j2, j3) = (jump.clone(), jump.clone(), jump);
    let budget = 48u64;
    let z0 = zero.clone();
    let qq = q.clone();
    ImpulsiveProblem {
        a: 0.0,
        c,
        zero: zero.clone(),
        forcing: Some(Forcing::series(SeriesMapping::new(crate::gallery::Extra::None), dim)),
        coupling: Some(Arc::new(move |_t, x| qq.apply(x))),
        coupling_bounds: Some((Arc::new(move |_| z0.clone()), Arc::new(move |_| qmax.clone()))),
        impulses,
        impulse: Arc::new(move |l, _| j1(l)),
        impulse_bounds: Some((Arc::new(move |l| j2(l)), Arc::new(move |l| j3(l)))),
        impulse_tail: c.ceil() * 0.5f64.powi(budget as i32 - 1),
        impulse_budget: budget,
    }
}

/// `u′ = 0`, `Δu(1 − 2^{−k}) = 2^{−k}e` for `k ≥ 1` on `[0, 1)`.
pub fn dyadic_impulses() -> ImpulsiveProblem {
    let z = dyadic_family();
    let mut p = ImpulsiveProblem::fixed(0.0, 1.0, V::Real(0.0), None, z);
    p.impulse_tail = 0.5f64.powi(p.impulse_budget as i32 - 1);
    p
}

/// `z(1 − 2^{−k}) = 2^{−k}` for `k ≥ 1`, and 0 at the point 0.
pub fn dyadic_family() -> Family<f64> {
    Family::new(WellOrderedSet::lambda0(), |a: &OrdinalAddress| {
        let k = a.digits()[0] as i32;
        V::Real(if k == 0 { 0.0 } else { 0.5f64.powi(k) })
    })
    .with_remainder(|a| Some(crate::transfinite::Remainder::Bound(0.5f64.powi(a.digits()[0] as i32))))
    .nonnegative()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staircase() {
        let p = dyadic_impulses();
        let r = extremal_solutions(&p, &IterationConfig { grid_per_unit: 64, ..Default::default() }).unwrap();
        assert_eq!(r.gap, 0.0);
        let u = &r.lower;
        assert_eq!(u.eval(0.6).coords()[0], 0.5);
        assert_eq!(jump_check(u, 0.75).coords()[0], 0.25);
    }

    #[test]
    fn fixed_formula() {
        let z = dyadic_family();
        let (v, _) = solve_fixed(None, &z, 0.0, 0.8, 1e-9).unwrap();
        assert_eq!(v, V::Real(0.75));
        let (v, _) = solve_fixed(None, &z, 0.0, 0.75, 1e-9).unwrap();
        assert_eq!(v, V::Real(0.5));
    }
}
