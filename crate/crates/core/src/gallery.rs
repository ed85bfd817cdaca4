//! Built-in example mappings and families with analytic oracles.
//!
//! Series entries use the upper floor `⌊x⌋ = m` with `m − 1 < x ≤ m`, so the phase
//! `ξ = x − ⌊x⌋` lies in `(−1, 0]` and every mapping is right continuous.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::impulsive::{dyadic_impulses, example_problem, ImpulsiveProblem};
use crate::ordinal::{OrdinalAddress, WellOrderedSet};
use crate::regulated::{AbsIntegral, RegulatedMapping};
use crate::scalar::Extended;
use crate::spaces::{Ball, VectorValue};
use crate::step::StepMapping;
use crate::transfinite::{Family, Remainder};

/// Series terms kept in the c₀-valued entries.
pub const TERMS: usize = 512;
/// Coordinates carried explicitly.
pub const PREFIX: usize = 64;
/// Enclosure of the range of `h` over `(−1, 0]`.
pub const H_MAX: f64 = 1.7362;
pub const H_MIN: f64 = -1.6245;
const H_RANGE: f64 = H_MAX - H_MIN;
const ZETA2: f64 = 1.644_934_066_848_226_4;

/// `Σ_{k ≤ n} k⁻²`.
pub fn zeta2_partial(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / (k * k) as f64).sum()
}
const ZETA3: f64 = 1.202_056_903_159_594_3;

/// `(⌊u⌋, u − ⌊u⌋)` under the upper floor. Values within rounding of an integer are snapped to it.
pub fn upper_floor(u: f64) -> (f64, f64) {
    let k = u.round();
    if (u - k).abs() <= 8.0 * f64::EPSILON * u.abs().max(1.0) {
        (k, 0.0)
    } else {
        let c = u.ceil();
        (c, u - c)
    }
}

/// `2ξ cos(π/2ξ) + (π/2) sin(π/2ξ)`, with its right limit `−π/2` at 0.
pub fn h(xi: f64) -> f64 {
    if xi == 0.0 {
        return -FRAC_PI_2;
    }
    let th = PI / (2.0 * xi);
    2.0 * xi * th.cos() + FRAC_PI_2 * th.sin()
}

/// `ξ² cos(π/2ξ)`, a primitive of `h`.
pub fn big_f(xi: f64) -> f64 {
    if xi == 0.0 {
        return 0.0;
    }
    xi * xi * (PI / (2.0 * xi)).cos()
}

/// `cos(π/2ξ) + π sin(π/2ξ)/(2ξ)`, with its right limit `π/2` at 0.
pub fn k(xi: f64) -> f64 {
    if xi == 0.0 {
        return FRAC_PI_2;
    }
    let th = PI / (2.0 * xi);
    th.cos() + PI * th.sin() / (2.0 * xi)
}

/// `ξ cos(π/2ξ)`, a primitive of `k`.
pub fn phi(xi: f64) -> f64 {
    if xi == 0.0 {
        return 0.0;
    }
    xi * (PI / (2.0 * xi)).cos()
}

/// `1/(2√(−ξ))`, with its right limit `1/2` at 0.
pub fn u(xi: f64) -> f64 {
    if xi == 0.0 {
        return 0.5;
    }
    0.5 / (-xi).sqrt()
}

/// `(⌊nt⌋ − √(⌊nt⌋ − nt))/n`, a continuous primitive of `t ↦ u(ξ(nt))`.
fn u_primitive(n: f64, t: f64) -> f64 {
    let (fl, xi) = upper_floor(n * t);
    (fl - (-xi).sqrt()) / n
}

#[derive(Clone, Copy, Debug)]
enum Piece {
    /// `ξ` moves inside `(a, b)` with `b < 0`.
    Smooth(f64, f64),
    /// `ξ` increases from `a` to 0, reaching a singular point at the right end.
    EndSingular(f64),
    Crossing,
}

fn piece(n: f64, x: f64, y: f64) -> Piece {
    let (lo, hi) = (n * x, n * y);
    let d = 8.0 * f64::EPSILON * hi.abs().max(1.0);
    let kmax = (hi + d).floor();
    if kmax > lo + d {
        if (hi - kmax).abs() <= d && kmax - 1.0 <= lo + d {
            return Piece::EndSingular((lo - kmax).max(-1.0));
        }
        return Piece::Crossing;
    }
    let kk = kmax + 1.0;
    Piece::Smooth((lo - kk).max(-1.0), hi - kk)
}

fn h_range(p: Piece) -> (f64, f64) {
    match p {
        Piece::Smooth(a, b) => {
            let c = h(0.5 * (a + b));
            let nb = b.abs();
            let lip = 2.0 + PI / nb + PI * PI / (4.0 * nb * nb);
            let r = lip * (b - a) * 0.5 + 1e-15;
            ((c - r).max(H_MIN), (c + r).min(H_MAX))
        }
        _ => (H_MIN, H_MAX),
    }
}

fn k_range(p: Piece) -> Option<(f64, f64)> {
    match p {
        Piece::Smooth(a, b) => {
            let c = k(0.5 * (a + b));
            let nb = b.abs();
            let cap = 1.0 + PI / (2.0 * nb);
            let r = PI * PI / (4.0 * nb * nb * nb) * (b - a) * 0.5 + 1e-15;
            Some(((c - r).max(-cap), (c + r).min(cap)))
        }
        _ => None,
    }
}

fn u_range(p: Piece) -> Option<(f64, f64)> {
    match p {
        Piece::Smooth(a, b) => Some((u(a) * (1.0 - 1e-15), u(b) * (1.0 + 1e-15))),
        _ => None,
    }
}

/// Which summand is added to the bounded series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extra {
    None,
    /// `(1/i) Σ_{n ≤ i∧m} k(ξ(nt))`: locally HL but neither Bochner nor Riemann integrable.
    Oscillating(usize),
    /// `(1/i) Σ_{n ≤ i∧m} u(ξ(nt))`: locally Bochner but not Riemann integrable.
    Singular(usize),
}

impl Extra {
    fn m(self) -> usize {
        match self {
            Extra::None => 0,
            Extra::Oscillating(m) | Extra::Singular(m) => m,
        }
    }
}

/// `g(t) = (Σ_{n ≤ N} h(ξ(nt))/n² + Σ_{n ≤ i∧m} e_n(t))/i` in c₀, optionally multiplied by `e^{−t}`.
#[derive(Clone, Debug)]
pub struct SeriesMapping {
    pub extra: Extra,
    pub terms: usize,
    pub prefix: usize,
    pub decay: bool,
}

struct Ranges {
    base: (f64, f64),
    extras: Vec<Option<(f64, f64)>>,
}

impl SeriesMapping {
    pub fn new(extra: Extra) -> Self {
        SeriesMapping { extra, terms: TERMS, prefix: PREFIX, decay: false }
    }

    pub fn with_decay(mut self) -> Self {
        self.decay = true;
        self
    }

    fn base(&self, t: f64) -> f64 {
        (1..=self.terms)
            .map(|n| {
                let nf = n as f64;
                h(upper_floor(nf * t).1) / (nf * nf)
            })
            .sum()
    }

    fn extra_terms(&self, t: f64) -> Vec<f64> {
        (1..=self.extra.m())
            .map(|n| {
                let xi = upper_floor(n as f64 * t).1;
                match self.extra {
                    Extra::Oscillating(_) => k(xi),
                    _ => u(xi),
                }
            })
            .collect()
    }

    /// Coordinates `(s + Σ_{n ≤ i∧m} e_n)/i` of a combination, times `scale`.
    fn assemble(&self, s: f64, e: &[f64], scale: f64) -> VectorValue<f64> {
        let m = e.len();
        let mut acc = 0.0;
        let mut prefix = Vec::with_capacity(self.prefix);
        for i in 1..=self.prefix {
            if i <= m {
                acc += e[i - 1];
            }
            prefix.push(scale * (s + acc) / i as f64);
        }
        let rest: f64 = e.iter().skip(self.prefix.min(m)).map(|v| v.abs()).sum();
        let tail = scale * ((s + acc).abs() + rest) / (self.prefix + 1) as f64;
        VectorValue::czero(prefix, tail)
    }

    fn weight(&self, t: f64) -> f64 {
        if self.decay {
            (-t).exp()
        } else {
            1.0
        }
    }

    fn ranges(&self, x: f64, y: f64) -> Ranges {
        let (mut lo, mut hi) = (0.0, 0.0);
        for n in 1..=self.terms {
            let nf = n as f64;
            let (a, b) = h_range(piece(nf, x, y));
            lo += a / (nf * nf);
            hi += b / (nf * nf);
        }
        let extras = (1..=self.extra.m())
            .map(|n| {
                let p = piece(n as f64, x, y);
                match self.extra {
                    Extra::Oscillating(_) => k_range(p),
                    _ => u_range(p),
                }
            })
            .collect();
        Ranges { base: (lo, hi), extras }
    }

    /// `max_i (b₀ + Σ_{n ≤ i∧m} b_n)/i` over all coordinates.
    fn coordinate_max(b0: f64, b: &[f64]) -> f64 {
        let mut best = b0;
        let mut acc = b0;
        for (n, bn) in b.iter().enumerate() {
            acc += bn;
            best = best.max(acc / (n + 1) as f64);
        }
        best
    }

    /// Oscillation and norm bound of the undamped mapping on `(x, y)`.
    fn osc_and_sup(&self, x: f64, y: f64) -> (f64, f64) {
        let r = self.ranges(x, y);
        let widths: Vec<f64> = r.extras.iter().map(|e| e.map_or(f64::INFINITY, |(l, h)| h - l)).collect();
        let mags: Vec<f64> = r.extras.iter().map(|e| e.map_or(f64::INFINITY, |(l, h)| l.abs().max(h.abs()))).collect();
        let osc = Self::coordinate_max(r.base.1 - r.base.0, &widths);
        let sup = Self::coordinate_max(r.base.0.abs().max(r.base.1.abs()), &mags);
        (osc, sup)
    }

    fn undamped_enclosure(&self, x: f64, y: f64) -> Option<Ball<f64>> {
        let r = self.ranges(x, y);
        let mut mid = Vec::with_capacity(r.extras.len());
        let mut rad = Vec::with_capacity(r.extras.len());
        for e in &r.extras {
            let (l, h) = (*e)?;
            mid.push(0.5 * (l + h));
            rad.push(0.5 * (h - l));
        }
        let (m0, r0) = (0.5 * (r.base.0 + r.base.1), 0.5 * (r.base.1 - r.base.0));
        let center = self.assemble(m0, &mid, 1.0);
        let mags: Vec<f64> = mid.iter().zip(&rad).map(|(m, r)| m.abs() + r).collect();
        let far = (m0.abs() + r0 + mags.iter().sum::<f64>()) / (self.prefix + 1) as f64;
        let radius = Self::coordinate_max(r0, &rad).max(far);
        let center = match center {
            VectorValue::TruncCZero { prefix, .. } => VectorValue::czero(prefix, 0.0),
            v => v,
        };
        Some(Ball { center, radius })
    }

    fn undamped_integral_bound(&self, x: f64, y: f64) -> f64 {
        let b0 = H_MAX * ZETA2 * (y - x);
        let b: Vec<f64> = (1..=self.extra.m())
            .map(|n| {
                let nf = n as f64;
                match self.extra {
                    Extra::Oscillating(_) => {
                        let d = match piece(nf, x, y) {
                            Piece::Smooth(a, bb) => (nf * (y - x) * (1.0 + PI / (2.0 * bb.abs()))).min(2.0 * a.abs()),
                            Piece::EndSingular(a) => 2.0 * a.abs(),
                            Piece::Crossing => upper_floor(nf * x).1.abs() + 1.0,
                        };
                        d / nf
                    }
                    _ => u_primitive(nf, y) - u_primitive(nf, x),
                }
            })
            .collect();
        Self::coordinate_max(b0, &b)
    }

    /// The closed-form primitive with `f(0) = 0`, and the truncation bound `Σ_{n>N} n⁻³`.
    pub fn primitive(&self, t: f64) -> (VectorValue<f64>, f64) {
        let (s, e) = self.primitive_parts(t);
        let n = self.terms as f64;
        (self.assemble(s, &e, 1.0), 0.5 / (n * n))
    }

    fn primitive_parts(&self, t: f64) -> (f64, Vec<f64>) {
        let s: f64 = (1..=self.terms)
            .map(|n| {
                let nf = n as f64;
                big_f(upper_floor(nf * t).1) / (nf * nf * nf)
            })
            .sum();
        let e: Vec<f64> = (1..=self.extra.m())
            .map(|n| {
                let nf = n as f64;
                match self.extra {
                    Extra::Oscillating(_) => phi(upper_floor(nf * t).1) / nf,
                    _ => u_primitive(nf, t),
                }
            })
            .collect();
        (s, e)
    }

    /// Points of `(x, y]` through which no cell of width ≥ ... can be certified: `p/q` whose
    /// combined left oscillation bound reaches `ε/2`, and every singular point of the added terms.
    fn hints(&self, x: f64, y: f64, eps: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let amplitude = |q: usize| -> f64 {
            let qf = q as f64;
            (1..=self.terms / q).map(|j| H_RANGE / ((j as f64) * qf).powi(2)).sum()
        };
        let push = |q: usize, out: &mut Vec<f64>| {
            let qf = q as f64;
            let mut p = (x * qf).floor() as i64;
            loop {
                let r = p as f64 / qf;
                if r > y {
                    break;
                }
                if r > x && gcd(p.unsigned_abs(), q as u64) == 1 {
                    out.push(r);
                }
                p += 1;
            }
        };
        let span = (y - x).max(0.0);
        let mut q = 1usize;
        while q <= self.terms && (amplitude(q) >= 0.5 * eps || q <= self.extra.m()) {
            if span * (q as f64) > 1e7 {
                break;
            }
            push(q, &mut out);
            q += 1;
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn scale_ball(b: Ball<f64>, lo: f64, hi: f64) -> Ball<f64> {
    let mid = 0.5 * (lo + hi);
    let m = b.center.norm().hi + b.radius;
    Ball { center: b.center.scale(mid), radius: mid * b.radius + 0.5 * (hi - lo) * m }
}

impl RegulatedMapping<f64> for SeriesMapping {
    fn domain(&self) -> (f64, Extended<f64>) {
        (0.0, Extended::PosInf)
    }

    fn eval(&self, t: f64) -> VectorValue<f64> {
        self.assemble(self.base(t), &self.extra_terms(t), self.weight(t))
    }

    fn right_limit(&self, t: f64) -> Option<VectorValue<f64>> {
        Some(self.eval(t))
    }

    fn osc(&self, x: f64, y: f64) -> Option<f64> {
        let (osc, sup) = self.osc_and_sup(x, y);
        if self.decay {
            let (wx, wy) = ((-x).exp(), (-y).exp());
            return Some(wx * osc + (wx - wy) * sup);
        }
        Some(osc)
    }

    fn enclose(&self, x: f64, y: f64) -> Option<Ball<f64>> {
        let b = self.undamped_enclosure(x, y)?;
        if self.decay {
            return Some(scale_ball(b, (-y).exp(), (-x).exp()));
        }
        Some(b)
    }

    fn integral_enclosure(&self, x: f64, y: f64) -> Option<Ball<f64>> {
        if self.decay {
            return None;
        }
        let (sy, ey) = self.primitive_parts(y);
        let (sx, ex) = self.primitive_parts(x);
        let e: Vec<f64> = ey.iter().zip(&ex).map(|(a, b)| a - b).collect();
        let scale = sy.abs() + sx.abs() + ey.iter().chain(&ex).map(|v| v.abs()).sum::<f64>();
        let (prefix, tail) = match self.assemble(sy - sx, &e, 1.0) {
            VectorValue::TruncCZero { prefix, tail } => (prefix, tail),
            v => (v.coords().to_vec(), 0.0),
        };
        let rounding = 4.0 * f64::EPSILON * (1.0 + scale) * self.terms as f64;
        Some(Ball { center: VectorValue::czero(prefix, 0.0), radius: rounding + tail })
    }

    fn integral_bound(&self, x: f64, y: f64) -> Option<f64> {
        let b = self.undamped_integral_bound(x, y);
        let viaball = self.enclose(x, y).map(|e| (y - x) * (e.center.norm().hi + e.radius)).unwrap_or(f64::INFINITY);
        Some(self.weight(x) * b.min(viaball))
    }

    fn abs_integral(&self, x: f64, y: f64) -> AbsIntegral<f64> {
        let w = self.weight(x);
        match self.extra {
            Extra::Oscillating(m) => {
                if (1..=m).any(|n| !matches!(piece(n as f64, x, y), Piece::Smooth(..))) {
                    return AbsIntegral::Divergent;
                }
            }
            Extra::Singular(m) => {
                let s: f64 = (1..=m).map(|n| (u_primitive(n as f64, y) - u_primitive(n as f64, x)) / n as f64).sum();
                return AbsIntegral::Bound(w * (H_MAX * ZETA2 * (y - x) + s));
            }
            Extra::None => {}
        }
        match self.undamped_enclosure(x, y) {
            Some(b) => AbsIntegral::Bound(w * (y - x) * (b.center.norm().hi + b.radius)),
            None => AbsIntegral::Unknown,
        }
    }

    fn bound(&self) -> Option<f64> {
        match self.extra {
            Extra::None => Some(H_MAX * ZETA2),
            _ => None,
        }
    }

    fn unbounded_witness(&self, x: f64, y: f64, level: f64) -> Option<f64> {
        for n in 1..=self.extra.m() {
            let nf = n as f64;
            let ts = ((x * nf).floor() + 1.0) / nf;
            if ts > y {
                continue;
            }
            let mut d = (ts - x).min(0.5 / nf) * 0.5;
            for _ in 0..2000 {
                let t = ts - d;
                if t <= x || t >= ts {
                    break;
                }
                if self.eval(t).norm().lo >= level {
                    return Some(t);
                }
                d *= 0.93;
            }
        }
        None
    }

    fn singular_points(&self, x: f64, y: f64, eps: f64) -> Vec<f64> {
        self.hints(x, y, eps)
    }

    fn tail_integral_bound(&self, x: f64, _y: f64) -> f64 {
        let n = self.terms as f64;
        self.weight(x) / (n * n)
    }

    fn improper_tail_bound(&self, t: f64) -> Option<f64> {
        if !self.decay {
            return None;
        }
        let w = (-t).exp();
        match self.extra {
            Extra::None => Some(w * 2.0 * ZETA3),
            Extra::Oscillating(_) => Some(w * (2.0 * ZETA3 + 2.0 * ZETA2)),
            Extra::Singular(_) => self.improper_abs_tail_bound(t),
        }
    }

    fn improper_abs_tail_bound(&self, t: f64) -> Option<f64> {
        if !self.decay {
            return None;
        }
        let w = (-t).exp();
        match self.extra {
            Extra::None => Some(w * H_MAX * ZETA2),
            Extra::Oscillating(_) => None,
            Extra::Singular(m) => {
                let s: f64 = (1..=m)
                    .map(|n| {
                        let nf = n as f64;
                        (1.0 / nf).exp() * (1.0 + 1.0 / nf) / nf
                    })
                    .sum();
                Some(w * (H_MAX * ZETA2 + s))
            }
        }
    }
}

/// Largest discrepancy `‖(f(t+δ) − f(t−δ))/2δ − g(t)‖ / (1 + ‖g(t)‖)` over `samples` random points
/// of `(lo, hi)` kept away from the singular rationals of every series term.
pub fn fd_check(g: &SeriesMapping, lo: f64, hi: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = 1e-9;
    let mut worst = 0.0f64;
    let mut taken = 0;
    while taken < samples {
        let t: f64 = rng.gen_range(lo..hi);
        let clear = (1..=g.terms).all(|n| {
            let xi = upper_floor(n as f64 * t).1;
            xi < -1e-3 && xi > -1.0 + 1e-5
        });
        if !clear {
            continue;
        }
        taken += 1;
        let (fp, _) = g.primitive(t + delta);
        let (fm, _) = g.primitive(t - delta);
        let d = fp.sub(&fm).unwrap().scale(0.5 / delta);
        let v = g.eval(t);
        let err = d.distance(&v).unwrap() / (1.0 + v.norm().hi);
        worst = worst.max(err);
    }
    worst
}

/// What the mathematics asserts about an entry. Verdicts on the series entries hold on compact
/// subintervals unless `improper` is set.
#[derive(Clone, Debug, Default)]
pub struct Expected {
    pub summable: Option<bool>,
    pub absolutely: Option<bool>,
    pub bounded: Option<bool>,
    pub hl: Option<bool>,
    pub hk: Option<bool>,
    pub bochner: Option<bool>,
    pub riemann: Option<bool>,
    pub total: Option<VectorValue<f64>>,
    pub improper: bool,
}

#[derive(Clone)]
pub enum GalleryObject {
    Family(Family<f64>),
    Step(StepMapping<f64>),
    Regulated(Arc<SeriesMapping>),
    Impulsive(Arc<ImpulsiveProblem>),
}

#[derive(Clone)]
pub struct GalleryEntry {
    pub id: String,
    pub description: &'static str,
    pub object: GalleryObject,
    pub expected: Expected,
    /// Interval used when none is given.
    pub interval: (f64, Extended<f64>),
}

/// The base vector of the real-valued entries.
pub fn e() -> VectorValue<f64> {
    VectorValue::Real(1.0)
}

fn d(a: &OrdinalAddress, i: usize) -> i32 {
    a.digits()[i] as i32
}

fn p2(k: i32) -> f64 {
    2f64.powi(k)
}

/// Entry ids accepted by `get`.
pub fn ids() -> Vec<&'static str> {
    vec![
        "geo-lambda0",
        "alt-harmonic-lambda0",
        "const-lambda0",
        "pow2-lambda0",
        "alt-lambda1",
        "pos-lambda1",
        "ex0",
        "ex1",
        "ex1.bounded",
        "ex302",
        "ex41.g0",
        "ex42.g_m",
        "ex43.g^m",
        "ex41.g0@exp-decay",
        "ex42.g_m@exp-decay",
        "ex43.g^m@exp-decay",
        "ex54",
        "impulses-dyadic",
    ]
}

fn family(id: &str, description: &'static str, f: Family<f64>, expected: Expected) -> GalleryEntry {
    GalleryEntry { id: id.into(), description, object: GalleryObject::Family(f), expected, interval: (0.0, Extended::Finite(1.0)) }
}

fn parse_m(rest: &str, default: usize) -> Result<usize> {
    match rest.strip_prefix(':') {
        None if rest.is_empty() => Ok(default),
        Some(m) => m.parse::<usize>().ok().filter(|&m| m >= 1).ok_or_else(|| Error::UnknownId(format!("bad parameter {m}"))),
        None => Err(Error::UnknownId(rest.into())),
    }
}

/// The entry named `id`. `ex42.g_m` and `ex43.g^m` take an optional `:m` (defaults 1 and 2);
/// the series entries take an `@exp-decay` suffix.
pub fn get(id: &str) -> Result<GalleryEntry> {
    let id = id.strip_prefix("gallery:").unwrap_or(id);
    if let Some((base, w)) = id.split_once('@') {
        return weighted_variant(base, w);
    }
    let yes = Some(true);
    let no = Some(false);
    let entry = match id {
        "geo-lambda0" => family(
            id,
            "geometric terms 2^-n e on the dyadic sequence",
            Family::new(WellOrderedSet::lambda0(), |a: &OrdinalAddress| e().scale(p2(-d(a, 0))))
                .with_remainder(|a| Some(Remainder::Bound(p2(-d(a, 0)))))
                .with_abs_remainder(|a| Some(Remainder::Bound(p2(-d(a, 0)))))
                .nonnegative(),
            Expected { summable: yes, absolutely: yes, bounded: yes, total: Some(e().scale(2.0)), ..Default::default() },
        ),
        "alt-harmonic-lambda0" => family(
            id,
            "alternating harmonic terms (-1)^n e/(n+1) on the dyadic sequence",
            Family::new(WellOrderedSet::lambda0(), |a: &OrdinalAddress| {
                let n = d(a, 0);
                e().scale(if n % 2 == 0 { 1.0 } else { -1.0 } / (n + 1) as f64)
            })
            .with_remainder(|a| Some(Remainder::Bound(1.0 / (d(a, 0) + 2) as f64)))
            .with_abs_remainder(|_| Some(Remainder::Divergent)),
            Expected { summable: yes, absolutely: no, bounded: yes, total: Some(e().scale(2f64.ln())), ..Default::default() },
        ),
        "const-lambda0" => family(
            id,
            "constant terms e on the dyadic sequence",
            Family::new(WellOrderedSet::lambda0(), |_: &OrdinalAddress| e()).nonnegative(),
            Expected { summable: no, absolutely: no, bounded: yes, ..Default::default() },
        ),
        "pow2-lambda0" => family(
            id,
            "growing terms 2^n e on the dyadic sequence",
            Family::new(WellOrderedSet::lambda0(), |a: &OrdinalAddress| e().scale(p2(d(a, 0)))).nonnegative(),
            Expected { summable: no, absolutely: no, bounded: no, ..Default::default() },
        ),
        "alt-lambda1" => family(
            id,
            "nested alternating terms (-1)^n1 2^-n0 e/(n1+1) on the two-level dyadic set",
            Family::new(WellOrderedSet::lambda_m(1), |a: &OrdinalAddress| {
                let (n0, n1) = (d(a, 0), d(a, 1));
                e().scale(p2(-n0) * if n1 % 2 == 0 { 1.0 } else { -1.0 } / (n1 + 1) as f64)
            })
            .with_remainder(|a| {
                let n0 = d(a, 0);
                Some(Remainder::Bound(match a.len() {
                    2 => p2(-n0) / (d(a, 1) + 2) as f64,
                    _ => p2(-n0) * 2f64.ln(),
                }))
            })
            .with_abs_remainder(|a| match a.len() {
                2 => Some(Remainder::Divergent),
                _ => None,
            }),
            Expected { summable: yes, absolutely: no, bounded: yes, total: Some(e().scale(2.0 * 2f64.ln())), ..Default::default() },
        ),
        "pos-lambda1" => family(
            id,
            "nonnegative nested terms 2^-n0 e/((n1+1)(n1+2)) on the two-level dyadic set",
            Family::new(WellOrderedSet::lambda_m(1), |a: &OrdinalAddress| {
                let n1 = d(a, 1) as f64;
                e().scale(p2(-d(a, 0)) / ((n1 + 1.0) * (n1 + 2.0)))
            })
            .with_remainder(|a| {
                let n0 = d(a, 0);
                Some(Remainder::Bound(match a.len() {
                    2 => p2(-n0) / (d(a, 1) + 2) as f64,
                    _ => p2(-n0),
                }))
            })
            .nonnegative(),
            Expected { summable: yes, absolutely: yes, bounded: yes, total: Some(e().scale(2.0)), ..Default::default() },
        ),
        "ex0" => {
            let set = WellOrderedSet::unit_steps(0.0, vec![])?;
            let steps = Family::new(set, |a: &OrdinalAddress| e().scale(p2(-d(a, 0))));
            let g = StepMapping::new(steps)
                .with_terminal(VectorValue::Real(0.0))
                .with_bound(1.0)
                .with_weighted_remainder(|a| Some(Remainder::Bound(p2(-d(a, 0)))))
                .with_weighted_abs_remainder(|a| Some(Remainder::Bound(p2(-d(a, 0)))));
            GalleryEntry {
                id: id.into(),
                description: "step mapping y_n = 2^-n e on [n, n+1) over [0, inf]",
                object: GalleryObject::Step(g),
                expected: Expected { hl: yes, hk: yes, bochner: yes, riemann: yes, total: Some(e().scale(2.0)), improper: true, ..Default::default() },
                interval: (0.0, Extended::PosInf),
            }
        }
        "ex1" => ex1(
            id,
            |n| p2(n) * if n % 2 == 0 { 1.0 } else { -1.0 } / (n + 1) as f64,
            |n| 1.0 / (n + 2) as f64,
            false,
            Expected { hl: yes, hk: yes, bochner: no, riemann: no, total: Some(e().scale(2f64.ln() - 1.0)), ..Default::default() },
            "step mapping y_n = (-2)^n e/(n+1) on [1-2^(1-n), 1-2^-n)",
        )?,
        "ex1.bounded" => ex1(
            id,
            |n| if n % 2 == 0 { 1.0 } else { -1.0 },
            |n| p2(-n - 1),
            true,
            Expected { hl: yes, hk: yes, bochner: yes, riemann: yes, total: Some(e().scale(-1.0 / 3.0)), ..Default::default() },
            "step mapping y_n = (-1)^n e on [1-2^(1-n), 1-2^-n)",
        )?,
        "ex302" => {
            let steps = Family::new(WellOrderedSet::lambda_m(1), |a: &OrdinalAddress| {
                let n1 = d(a, 1);
                e().scale(p2(n1 + 1) * if n1 % 2 == 0 { 1.0 } else { -1.0 } / (n1 + 1) as f64)
            });
            let g = StepMapping::new(steps)
                .with_terminal(VectorValue::Real(0.0))
                .with_weighted_remainder(|a| {
                    let n0 = d(a, 0);
                    Some(Remainder::Bound(match a.len() {
                        2 => p2(-n0 - 1) / (d(a, 1) + 2) as f64,
                        _ => p2(-n0 - 1) * 2f64.ln(),
                    }))
                })
                .with_weighted_abs_remainder(|a| match a.len() {
                    2 => Some(Remainder::Divergent),
                    _ => None,
                });
            GalleryEntry {
                id: id.into(),
                description: "step mapping on the two-level dyadic set with weighted terms (-1)^n1 2^(-n0-1) e/(n1+1)",
                object: GalleryObject::Step(g),
                expected: Expected { hl: yes, hk: yes, bochner: no, riemann: no, total: Some(e().scale(2f64.ln())), ..Default::default() },
                interval: (0.0, Extended::Finite(1.0)),
            }
        }
        "ex41.g0" => series(id, Extra::None, Expected { hl: yes, hk: yes, bochner: yes, riemann: yes, ..Default::default() }),
        "ex54" => GalleryEntry {
            id: id.into(),
            description: "impulsive problem u' = g0(t) + (q_i(x_1 + ... + x_i)), jumps 2^-i z on a dyadic set",
            object: GalleryObject::Impulsive(Arc::new(example_problem(32, 2.0))),
            expected: Expected::default(),
            interval: (0.0, Extended::Finite(2.0)),
        },
        "impulses-dyadic" => GalleryEntry {
            id: id.into(),
            description: "zero right-hand side with impulses 2^-k e at 1 - 2^-k",
            object: GalleryObject::Impulsive(Arc::new(dyadic_impulses())),
            expected: Expected::default(),
            interval: (0.0, Extended::Finite(1.0)),
        },
        _ => {
            if let Some(rest) = id.strip_prefix("ex42.g_m") {
                let m = parse_m(rest, 1)?;
                series(id, Extra::Oscillating(m), Expected { hl: yes, hk: yes, bochner: no, riemann: no, ..Default::default() })
            } else if let Some(rest) = id.strip_prefix("ex43.g^m") {
                let m = parse_m(rest, 2)?;
                series(id, Extra::Singular(m), Expected { hl: yes, hk: yes, bochner: yes, riemann: no, ..Default::default() })
            } else {
                return Err(Error::UnknownId(id.into()));
            }
        }
    };
    Ok(entry)
}

fn series(id: &str, extra: Extra, expected: Expected) -> GalleryEntry {
    let description = match extra {
        Extra::None => "bounded c0-valued series with second-kind discontinuities at the rationals",
        Extra::Oscillating(_) => "c0-valued series with unbounded oscillating summands",
        Extra::Singular(_) => "c0-valued series with inverse square-root singularities",
    };
    GalleryEntry {
        id: id.into(),
        description,
        object: GalleryObject::Regulated(Arc::new(SeriesMapping::new(extra))),
        expected,
        interval: (0.0, Extended::Finite(1.0)),
    }
}

fn ex1(
    id: &str,
    y: impl Fn(i32) -> f64 + Send + Sync + 'static,
    tail: impl Fn(i32) -> f64 + Send + Sync + 'static,
    bounded: bool,
    expected: Expected,
    description: &'static str,
) -> Result<GalleryEntry> {
    let set = WellOrderedSet::lambda0();
    let steps = Family::new(set, move |a: &OrdinalAddress| e().scale(y(d(a, 0) + 1)));
    let mut g = StepMapping::new(steps)
        .with_terminal(VectorValue::Real(0.0))
        .with_weighted_remainder(move |a| Some(Remainder::Bound(tail(d(a, 0) + 1))));
    if bounded {
        g = g.with_bound(1.0).with_weighted_abs_remainder(|a| Some(Remainder::Bound(p2(-d(a, 0) - 1))));
    } else {
        g = g.with_weighted_abs_remainder(|_| Some(Remainder::Divergent));
    }
    Ok(GalleryEntry { id: id.into(), description, object: GalleryObject::Step(g), expected, interval: (0.0, Extended::Finite(1.0)) })
}

/// The exponentially damped version of a series entry, on `[0, ∞)`.
pub fn weighted_variant(id: &str, weight: &str) -> Result<GalleryEntry> {
    if weight != "exp-decay" {
        return Err(Error::UnknownId(format!("{id}@{weight}")));
    }
    let base = get(id)?;
    let GalleryObject::Regulated(m) = &base.object else {
        return Err(Error::UnknownId(format!("{id}@{weight}")));
    };
    let mapping = SeriesMapping::clone(m).with_decay();
    let yes = Some(true);
    let expected = match mapping.extra {
        Extra::None => Expected { hk: yes, riemann: yes, improper: true, ..Default::default() },
        Extra::Oscillating(_) => Expected { hk: yes, improper: true, ..Default::default() },
        Extra::Singular(_) => Expected { hk: yes, bochner: yes, improper: true, ..Default::default() },
    };
    Ok(GalleryEntry {
        id: format!("{id}@{weight}"),
        description: "exponentially damped series mapping on [0, inf)",
        object: GalleryObject::Regulated(Arc::new(mapping)),
        expected,
        interval: (0.0, Extended::PosInf),
    })
}
