//! δ-fine tagged partitions and the HL/HK Riemann-sum defects of a primitive.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ordinal::OrdinalAddress;
use crate::scalar::Scalar;
use crate::spaces::VectorValue;
use crate::step::StepMapping;

/// A positive function `δ` on `[a, b]`.
#[derive(Clone)]
pub struct Gauge<T> {
    delta: Arc<dyn Fn(T) -> T + Send + Sync>,
    /// Sorted points offered as tags in addition to endpoints and midpoints.
    marks: Arc<Vec<T>>,
}

impl<T: Scalar> Gauge<T> {
    pub fn new(delta: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Gauge { delta: Arc::new(delta), marks: Arc::new(Vec::new()) }
    }

    pub fn with_marks(mut self, mut marks: Vec<T>) -> Self {
        marks.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        self.marks = Arc::new(marks);
        self
    }

    pub fn constant(d: T) -> Self {
        Gauge::new(move |_| d)
    }

    pub fn at(&self, t: T) -> T {
        (self.delta)(t)
    }

    /// `[l, r] ⊂ (ξ − δ(ξ), ξ + δ(ξ))` with `ξ ∈ [l, r]`.
    pub fn admits(&self, l: T, r: T, xi: T) -> bool {
        let d = self.at(xi);
        d > T::zero() && l <= xi && xi <= r && xi - d < l && r < xi + d
    }
}

/// Cells `(t_{i−1}, t_i, ξ_i)` from `a` to `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaggedPartition<T> {
    pub cells: Vec<(T, T, T)>,
}

impl<T: Scalar> TaggedPartition<T> {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Independent check that the cells tile `[a, b]`, carry their tags, and are δ-fine.
    pub fn is_fine(&self, gauge: &Gauge<T>, a: T, b: T) -> bool {
        let Some(first) = self.cells.first() else { return false };
        if first.0 != a || self.cells.last().unwrap().1 != b {
            return false;
        }
        self.cells.windows(2).all(|w| w[0].1 == w[1].0)
            && self.cells.iter().all(|&(l, r, xi)| {
                let d = gauge.at(xi);
                l < r && l <= xi && xi <= r && (xi - d) < l && r < (xi + d)
            })
    }
}

/// A δ-fine tagged partition of `[a, b]` by recursive bisection. An interval holding marks must
/// be tagged at one of them and is split at its interior mark nearest the midpoint; other
/// intervals are tagged at the first fine candidate among the midpoint and the endpoints, in
/// increasing order of gauge value, and bisected when none is fine.
pub fn cousin_partition<T: Scalar>(gauge: &Gauge<T>, a: T, b: T, max_depth: usize) -> Result<TaggedPartition<T>> {
    if !(a < b) || !b.is_finite() || !a.is_finite() {
        return Err(Error::Invalid("interval must be finite and nondegenerate".into()));
    }
    let mut cells = Vec::new();
    let mut stack = vec![(a, b, 0usize)];
    let half = T::lit(0.5);
    while let Some((l, r, depth)) = stack.pop() {
        let m = l + (r - l) * half;
        let lo = gauge.marks.partition_point(|&x| x < l);
        let hi = gauge.marks.partition_point(|&x| x <= r);
        let marks = &gauge.marks[lo..hi];
        let mut cands: Vec<(T, T)> = if marks.is_empty() {
            [m, l, r].into_iter().map(|x| (gauge.at(x), x)).collect()
        } else {
            marks.iter().map(|&x| (gauge.at(x), x)).collect()
        };
        cands.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
        if let Some(&(_, xi)) = cands.iter().find(|c| gauge.admits(l, r, c.1)) {
            cells.push((l, r, xi));
            continue;
        }
        let split = marks
            .iter()
            .copied()
            .filter(|&x| l < x && x < r)
            .min_by(|x, y| (*x - m).abs().partial_cmp(&(*y - m).abs()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(m);
        if depth >= max_depth || !(l < split && split < r) {
            return Err(Error::DepthExceeded(depth));
        }
        stack.push((split, r, depth + 1));
        stack.push((l, split, depth + 1));
    }
    Ok(TaggedPartition { cells })
}

/// `(Σ‖f(t_i) − f(t_{i−1}) − g(ξ_i)(t_i − t_{i−1})‖, ‖Σ(f(t_i) − f(t_{i−1}) − g(ξ_i)(t_i − t_{i−1}))‖)`.
pub fn hl_riemann_defect<T: Scalar>(
    g: impl Fn(T) -> Result<VectorValue<T>>,
    f: impl Fn(T) -> Result<VectorValue<T>>,
    p: &TaggedPartition<T>,
) -> Result<(T, T)> {
    let mut hl = T::zero();
    let mut total: Option<VectorValue<T>> = None;
    let mut prev: Option<(T, VectorValue<T>)> = None;
    for &(l, r, xi) in &p.cells {
        let fl = match prev.take() {
            Some((t, v)) if t == l => v,
            _ => f(l)?,
        };
        let fr = f(r)?;
        let mut d = fr.sub(&fl)?;
        d.add_scaled(-(r - l), &g(xi)?)?;
        hl += d.norm().hi;
        match &mut total {
            None => total = Some(d),
            Some(s) => s.add_scaled(T::one(), &d)?,
        }
        prev = Some((r, fr));
    }
    let hk = total.map(|s| s.norm().hi).unwrap_or_else(T::zero);
    Ok((hl, hk))
}

/// The canonical gauge of a step mapping with finitely many enumerated knots `λ_1 < … < λ_m`
/// in `[a, b]`, scaled by `s`: half the distance to the nearest other knot, and at most
/// `ε/(2·J·m)` at a knot with jump norm `J`.
pub fn canonical_gauge<T: Scalar>(g: &StepMapping<T>, budget: usize, eps_target: T, floor: T, s: T) -> Result<Gauge<T>> {
    let index = g.index();
    let cursors = index.enumerate(budget);
    let mut knots: Vec<(T, T)> = Vec::with_capacity(cursors.len() + 1);
    let mut prev: Option<VectorValue<T>> = None;
    for c in &cursors {
        let z = g.steps.value(&c.current);
        let jump = match &prev {
            Some(p) => z.distance(p)?,
            None => T::zero(),
        };
        knots.push((c.value, jump));
        prev = Some(z);
    }
    if let (Some(b), Some(p)) = (index.sup().finite(), prev) {
        if knots.last().is_none_or(|k| k.0 < b) {
            let zb = g.eval(b)?;
            knots.push((b, zb.distance(&p)?));
        }
    }
    let m = T::from_count(knots.len().max(1) as u64);
    let two = T::lit(2.0);
    let marks: Vec<T> = knots.iter().map(|k| k.0).collect();
    Ok(Gauge::new(move |t: T| {
        let i = knots.partition_point(|k| k.0 < t);
        let at_knot = knots.get(i).filter(|k| k.0 == t).map(|k| k.1);
        let mut d = T::infinity();
        let after = if at_knot.is_some() { i + 1 } else { i };
        if after < knots.len() {
            d = d.min(knots[after].0 - t);
        }
        if i > 0 {
            d = d.min(t - knots[i - 1].0);
        }
        if !d.is_finite() {
            d = T::one();
        }
        let away = (s * d / two).max(floor);
        match at_knot {
            Some(j) if j > T::zero() => away.min(s * eps_target / (two * j * m)),
            Some(_) => away,
            None => away,
        }
    })
    .with_marks(marks))
}

/// Address of the last step below `t`, for diagnostics.
pub fn step_at<T: Scalar>(g: &StepMapping<T>, t: T) -> Result<OrdinalAddress> {
    g.index().locate(t)
}
