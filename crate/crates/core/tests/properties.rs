use std::cmp::Ordering;

use proptest::prelude::*;
use transquad::impulsive::{bracket, extremal_solutions, jump_check, IterationConfig, ImpulsiveProblem};
use transquad::regulated::CellRule;
use transquad::transfinite::partial_sum_lenient;
use transquad::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn finite_set(gaps: &[f64]) -> Set64 {
    let mut pts = vec![0.0];
    for g in gaps {
        pts.push(pts.last().unwrap() + g);
    }
    WellOrderedSet::finite(pts).unwrap()
}

/// A step mapping with values `zs` on the finite set with left knots `0, g_0, g_0 + g_1, …`.
fn finite_step(gaps: &[f64], zs: &[f64]) -> Step64 {
    let set = finite_set(gaps);
    let knots: Vec<(OrdinalAddress, f64)> = set.enumerate(gaps.len() + 1).into_iter().map(|c| (c.current, c.value)).collect();
    let zs = zs.to_vec();
    let fam = Family::new(set, move |a: &OrdinalAddress| {
        let k = knots.iter().position(|(b, _)| b == a);
        VectorValue::Real(k.and_then(|k| zs.get(k)).copied().unwrap_or(0.0))
    });
    StepMapping::new(fam)
}

/// `∫_0^t` of the step mapping of [`finite_step`], summed cell by cell.
fn brute_primitive(gaps: &[f64], zs: &[f64], t: f64) -> f64 {
    let mut left = 0.0;
    let mut s = 0.0;
    for (g, z) in gaps.iter().zip(zs) {
        let right = left + g;
        s += z * (right.min(t) - left).max(0.0);
        left = right;
    }
    s
}

/// `x ↦ c·r^{n0}·q^{n1}` on the two-level dyadic set of `[0, 1)`, with closed-form remainders.
fn product_family(c: f64, r: f64, q: f64) -> Family64 {
    let set = WellOrderedSet::dyadic(0.0, 1.0, 2).unwrap();
    Family::new(set, move |a: &OrdinalAddress| {
        let d = a.digits();
        VectorValue::Real(c * r.powi(d[0] as i32) * q.powi(d[1] as i32))
    })
    .with_remainder(move |a: &OrdinalAddress| {
        let d = a.digits();
        let block = c / (1.0 - q);
        Some(Remainder::Bound(match d.len() {
            1 => block * r.powi(d[0] as i32 + 1) / (1.0 - r),
            _ => c * r.powi(d[0] as i32) * q.powi(d[1] as i32 + 1) / (1.0 - q),
        }))
    })
    .nonnegative()
}

/// `g(t) = α·t + β·[t ≥ j]` on `[0, 1]`, with exact oscillation and enclosure oracles.
#[derive(Debug)]
struct Ramp {
    alpha: f64,
    beta: f64,
    j: f64,
}

impl Ramp {
    fn antiderivative(&self, t: f64) -> f64 {
        self.alpha * t * t / 2.0 + self.beta * (t - self.j).max(0.0)
    }
}

impl RegulatedMapping<f64> for Ramp {
    fn domain(&self) -> (f64, Extended<f64>) {
        (0.0, Extended::Finite(1.0))
    }

    fn eval(&self, t: f64) -> Value64 {
        VectorValue::Real(self.alpha * t + if t >= self.j { self.beta } else { 0.0 })
    }

    fn right_limit(&self, t: f64) -> Option<Value64> {
        Some(self.eval(t))
    }

    fn osc(&self, x: f64, y: f64) -> Option<f64> {
        let jump = if x < self.j && self.j < y { self.beta.abs() } else { 0.0 };
        Some(self.alpha.abs() * (y - x) + jump)
    }

    fn enclose(&self, x: f64, y: f64) -> Option<Ball<f64>> {
        Some(Ball { center: self.eval((x + y) / 2.0), radius: self.osc(x, y).unwrap() })
    }

    fn bound(&self) -> Option<f64> {
        Some(self.alpha.abs() + self.beta.abs())
    }

    fn singular_points(&self, x: f64, y: f64, _eps: f64) -> Vec<f64> {
        if x < self.j && self.j <= y && self.beta != 0.0 {
            vec![self.j]
        } else {
            Vec::new()
        }
    }
}

fn ramp() -> impl Strategy<Value = Ramp> {
    (-2.0..2.0f64, -1.0..1.0f64, 0.05..0.95f64).prop_map(|(alpha, beta, j)| Ramp { alpha, beta, j })
}

fn vector(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, d)
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn enumeration_is_strictly_increasing(depth in 1usize..4, budget in 2usize..300) {
        let set = WellOrderedSet::<f64>::dyadic(0.0, 1.0, depth).unwrap();
        let cur = set.enumerate(budget);
        for w in cur.windows(2) {
            prop_assert!(w[0].value < w[1].value);
            prop_assert_eq!(set.compare(&w[0].current, &w[1].current).unwrap(), Ordering::Less);
            prop_assert!(set.embed_finite(&w[0].current).unwrap() < set.embed_finite(&w[1].current).unwrap());
        }
    }

    #[test]
    fn enumeration_is_increasing_in_f32(depth in 1usize..3, budget in 2usize..100) {
        let set = WellOrderedSet::<f32>::dyadic(0.0, 1.0, depth).unwrap();
        for w in set.enumerate(budget).windows(2) {
            prop_assert!(w[0].value < w[1].value);
        }
    }

    #[test]
    fn successors_are_immediate(depth in 1usize..4, budget in 2usize..200) {
        let set = WellOrderedSet::<f64>::dyadic(0.0, 1.0, depth).unwrap();
        let cur = set.enumerate(budget);
        for c in &cur {
            let s = set.successor(&c.current).unwrap();
            prop_assert_eq!(set.compare(&c.current, &s).unwrap(), Ordering::Less);
            prop_assert!(set.is_successor(&s).unwrap());
            let (lo, hi) = (c.value, set.embed(&s).unwrap());
            prop_assert!(cur.iter().all(|o| !(Extended::Finite(o.value) > Extended::Finite(lo) && Extended::Finite(o.value) < hi)));
        }
    }

    #[test]
    fn step_intervals_partition(depth in 1usize..4, t in 0.0..0.999f64) {
        let set = WellOrderedSet::<f64>::dyadic(0.0, 1.0, depth).unwrap();
        let beta = set.locate(t).unwrap();
        let s = set.successor(&beta).unwrap();
        prop_assert!(set.embed_finite(&beta).unwrap() <= t);
        prop_assert!(Extended::Finite(t) < set.embed(&s).unwrap());
    }

    #[test]
    fn limits_are_approached_from_below(n0 in 1u64..12) {
        let set = WellOrderedSet::<f64>::dyadic(0.0, 1.0, 2).unwrap();
        let gamma = OrdinalAddress::new(&[n0, 0]);
        prop_assert!(set.is_limit(&gamma).unwrap());
        let target = set.embed_finite(&gamma).unwrap();
        let below: Vec<f64> = (0..40).map(|k| set.embed_finite(&OrdinalAddress::new(&[n0 - 1, k])).unwrap()).collect();
        prop_assert!(below.iter().all(|&v| v < target));
        prop_assert!(target - below[39] <= 2f64.powi(-40));
    }

    #[test]
    fn norm_triangle_and_homogeneity(x in vector(5), y in vector(5), c in -4.0..4.0f64) {
        let (x, y) = (VectorValue::RealVec(x), VectorValue::RealVec(y));
        let s = x.add(&y).unwrap();
        prop_assert!(s.norm().hi <= x.norm().hi + y.norm().hi);
        let n = x.scale(c).norm();
        let m = x.norm();
        prop_assert!((n.lo - c.abs() * m.lo).abs() <= 1e-12 * (1.0 + m.hi));
        prop_assert!((n.hi - c.abs() * m.hi).abs() <= 1e-12 * (1.0 + m.hi));
    }

    #[test]
    fn czero_norms(p in vector(4), q in vector(4), tp in 0.0..3.0f64, tq in 0.0..3.0f64) {
        let (x, y) = (VectorValue::czero(p, tp), VectorValue::czero(q, tq));
        let s = x.add(&y).unwrap();
        prop_assert!(s.norm().lo <= s.norm().hi);
        prop_assert!(s.norm().hi <= x.norm().hi + y.norm().hi);
    }

    #[test]
    fn order_is_transitive(x in vector(4), d1 in prop::collection::vec(0.0..5.0f64, 4), d2 in prop::collection::vec(0.0..5.0f64, 4)) {
        let y: Vec<f64> = x.iter().zip(&d1).map(|(a, b)| a + b).collect();
        let z: Vec<f64> = y.iter().zip(&d2).map(|(a, b)| a + b).collect();
        let (x, y, z) = (VectorValue::RealVec(x), VectorValue::RealVec(y), VectorValue::RealVec(z));
        prop_assert_eq!(x.leq(&y).unwrap(), Tri::True);
        prop_assert_eq!(y.leq(&z).unwrap(), Tri::True);
        prop_assert_eq!(x.leq(&z).unwrap(), Tri::True);
    }

    #[test]
    fn successor_recursion_is_exact(c in 0.1..2.0f64, r in 0.1..0.7f64, q in 0.1..0.7f64, n0 in 0u64..6, n1 in 0u64..20) {
        let fam = product_family(c, r, q);
        let cfg = SumConfig::default();
        let beta = OrdinalAddress::new(&[n0, n1]);
        let s = fam.index.successor(&beta).unwrap();
        let (a, ra) = partial_sum(&fam, &beta, 1e-12, &cfg).unwrap();
        let (b, rb) = partial_sum(&fam, &s, 1e-12, &cfg).unwrap();
        let x = fam.value(&beta).coords()[0];
        let diff = b.coords()[0] - a.coords()[0];
        prop_assert!((diff - x).abs() <= ra + rb + 4.0 * f64::EPSILON * b.norm().hi);
    }

    #[test]
    fn regrouping_nonnegative(c in 0.1..2.0f64, r in 0.1..0.6f64, q in 0.1..0.6f64) {
        let fam = product_family(c, r, q);
        let cfg = SumConfig::default();
        let (whole, rw) = sum(&fam, 1e-12, &cfg).unwrap();
        let blocks = 30;
        let mut grouped = 0.0;
        let mut rg = 0.0;
        for n0 in 0..blocks {
            let inner = WellOrderedSet::dyadic(0.0, 1.0, 1).unwrap();
            let w = c * r.powi(n0);
            let block = Family::new(inner, move |a: &OrdinalAddress| VectorValue::Real(w * q.powi(a.digits()[0] as i32)))
                .with_remainder(move |a: &OrdinalAddress| Some(Remainder::Bound(w * q.powi(a.digits()[0] as i32 + 1) / (1.0 - q))))
                .nonnegative();
            let (v, rv) = sum(&block, 1e-14, &cfg).unwrap();
            grouped += v.coords()[0];
            rg += rv;
        }
        let omitted = c * r.powi(blocks) / ((1.0 - r) * (1.0 - q));
        prop_assert!((whole.coords()[0] - grouped).abs() <= rw + rg + omitted + 1e-14);
    }

    #[test]
    fn nonnegative_partial_sums_increase(c in 0.1..2.0f64, r in 0.1..0.7f64, q in 0.1..0.7f64, budget in 2usize..80) {
        let fam = product_family(c, r, q);
        let t = partial_sum_table(&fam, budget, 1e-12, &SumConfig::default()).unwrap();
        for w in t.windows(2) {
            prop_assert!(w[1].sigma.coords()[0] >= w[0].sigma.coords()[0] - (w[0].residual + w[1].residual));
        }
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn absolute_implies_plain(p in prop::sample::select(vec![0.5, 1.0, 1.5, 2.0]), alternating in any::<bool>()) {
        let set = WellOrderedSet::dyadic(0.0, 1.0, 1).unwrap();
        let fam = Family::new(set, move |a: &OrdinalAddress| {
            let n = a.digits()[0];
            let sign = if alternating && n % 2 == 1 { -1.0 } else { 1.0 };
            VectorValue::Real(sign / (n as f64 + 1.0).powf(p))
        });
        let rep = classify(&fam, 1e-3, &SumConfig::default().with_layer_budget(2000));
        if rep.absolute_verdict.is_true() {
            prop_assert!(rep.verdict.is_true());
        }
        if rep.verdict.is_false() {
            prop_assert!(!rep.absolute_verdict.is_true());
        }
        for cut in [&rep.c1, &rep.c2, &rep.c3].into_iter().flatten() {
            prop_assert!(!fam.index.is_successor(cut).unwrap());
        }
    }
}

fn step_data() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..12).prop_flat_map(|n| (prop::collection::vec(0.01..0.5f64, n), prop::collection::vec(-3.0..3.0f64, n)))
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn step_primitive_matches_cellwise_sum((gaps, zs) in step_data(), u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let g = finite_step(&gaps, &zs);
        let cfg = SumConfig::default();
        let p = primitive(&g, 1e-12, &cfg).unwrap();
        let end = gaps.iter().sum::<f64>();
        let (c, d) = (u.min(v) * end, u.max(v) * end);
        let (i, r) = p.integral(c, d).unwrap();
        let exact = brute_primitive(&gaps, &zs, d) - brute_primitive(&gaps, &zs, c);
        prop_assert!((i.coords()[0] - exact).abs() <= r + 1e-12);
        let (ic, rc) = p.integral(0.0, c).unwrap();
        let (id, rd) = p.integral(0.0, d).unwrap();
        prop_assert!((ic.coords()[0] + i.coords()[0] - id.coords()[0]).abs() <= r + rc + rd + 1e-12);
    }

    #[test]
    fn step_integral_is_linear((gaps, zs) in step_data(), alpha in -3.0..3.0f64, seed in any::<u64>()) {
        let ws: Vec<f64> = zs.iter().enumerate().map(|(k, z)| z * ((seed >> (k % 60)) & 7) as f64 - 1.0).collect();
        let (g1, g2) = (finite_step(&gaps, &zs), finite_step(&gaps, &ws));
        let cfg = SumConfig::default();
        let combo = g1.combine(alpha, &g2);
        let end = gaps.iter().sum::<f64>();
        let (a, ra) = primitive(&combo, 1e-12, &cfg).unwrap().eval(end).unwrap();
        let (b, rb) = primitive(&g1, 1e-12, &cfg).unwrap().eval(end).unwrap();
        let (c, rc) = primitive(&g2, 1e-12, &cfg).unwrap().eval(end).unwrap();
        let expected = alpha * b.coords()[0] + c.coords()[0];
        prop_assert!((a.coords()[0] - expected).abs() <= ra + alpha.abs() * rb + rc + 1e-12);
    }

    #[test]
    fn primitive_is_continuous_at_successors((gaps, zs) in step_data()) {
        let g = finite_step(&gaps, &zs);
        let p = primitive(&g, 1e-12, &SumConfig::default()).unwrap();
        for c in g.index().enumerate(gaps.len()) {
            let s = g.index().successor(&c.current).unwrap();
            let (sb, _) = p.sigma(&c.current).unwrap();
            let (ss, _) = p.sigma(&s).unwrap();
            let w = g.index().gap(&c.current).unwrap();
            let mut left = sb.clone();
            left.add_scaled(w, &g.eval(c.value).unwrap()).unwrap();
            prop_assert_eq!(left, ss);
        }
    }

    #[test]
    fn verdict_implications((gaps, zs) in step_data(), mode in prop::sample::select(vec![Mode::Hl, Mode::Hk, Mode::Bochner, Mode::Riemann])) {
        let v = integrate_step(&finite_step(&gaps, &zs), mode, 1e-9, &SumConfig::default());
        if v.bochner.is_true() { prop_assert!(v.hl.is_true()); }
        if v.hl.is_true() { prop_assert!(v.hk.is_true()); }
        if v.riemann.is_true() { prop_assert!(v.hk.is_true()); }
        if v.hk.is_false() { prop_assert!(!v.hl.is_true() && !v.riemann.is_true()); }
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn osc_partition_tiles_and_is_sound(g in ramp(), k in 2i32..6, samples in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 8)) {
        let eps = 2f64.powi(-k);
        let p = build_partition(&g, 0.0, 1.0, eps, 60_000).unwrap();
        prop_assert!(p.complete);
        let mut pieces: Vec<(f64, f64)> = p.cells().iter().map(|c| (c.0, c.1)).chain(p.gaps()).collect();
        pieces.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        prop_assert_eq!(pieces[0].0, 0.0);
        prop_assert_eq!(pieces.last().unwrap().1, p.reached);
        prop_assert_eq!(p.reached, 1.0);
        for w in pieces.windows(2) {
            prop_assert_eq!(w[0].1, w[1].0);
        }
        for (l, r, o) in p.cells() {
            prop_assert!(o <= eps);
            for &(u, v) in &samples {
                let (s, t) = (l + (r - l) * (0.001 + 0.998 * u), l + (r - l) * (0.001 + 0.998 * v));
                prop_assert!(g.eval(s).distance(&g.eval(t)).unwrap() <= eps + 1e-12);
            }
        }
    }

    #[test]
    fn g_epsilon_is_monotone_in_epsilon(g in ramp(), x in 0.0..0.99f64, k in 1i32..8) {
        let e = 2f64.powi(-k);
        let big = g_epsilon_step(&g, x, e).unwrap();
        let small = g_epsilon_step(&g, x, e / 2.0).unwrap();
        prop_assert!(small.y <= big.y);
        prop_assert!(small.y > x);
        prop_assert!(big.osc <= e && small.osc <= e / 2.0);
    }

    #[test]
    fn step_approximation_error(g in ramp(), k in 2i32..6, ts in prop::collection::vec(0.0..1.0f64, 16)) {
        let eps = 2f64.powi(-k);
        let p = build_partition(&g, 0.0, 1.0, eps, 60_000).unwrap();
        let s = step_approximation(&g, &p).unwrap();
        let knots = p.knots();
        let gaps = p.gaps();
        for t in ts.into_iter().filter(|t| !knots.contains(t) && gaps.iter().all(|&(l, r)| !(l..r).contains(t))) {
            prop_assert!(s.eval(t).unwrap().distance(&g.eval(t)).unwrap() <= eps + 1e-12);
        }
    }

    #[test]
    fn halving_epsilon_moves_the_integral_little(g in ramp(), k in 2i32..6) {
        let eps = 2f64.powi(-k);
        let integral = |e: f64| {
            let p = build_partition(&g, 0.0, 1.0, e, 60_000).unwrap();
            let s = step_approximation_with(&g, &p, CellRule::Midpoint).unwrap();
            partial_sum_lenient(&weighted_family(&s), &OrdinalAddress::sup(), 1e-14, &SumConfig::default()).unwrap().value.coords()[0]
        };
        let (a, b) = (integral(eps), integral(eps / 2.0));
        prop_assert!((a - b).abs() <= 1.5 * eps);
        prop_assert!((a - g.antiderivative(1.0)).abs() <= eps + 1e-12);
    }

    #[test]
    fn cd_primitive_reproduces_subintegrals(g in ramp(), u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let (c, d) = (u.min(v), u.max(v));
        let cfg = RegulatedConfig::default();
        let f = cd_primitive(&g, 0.0, 1.0, 1e-4, &cfg).unwrap();
        let (fc, rc) = f.eval(c).unwrap();
        let (fd, rd) = f.eval(d).unwrap();
        let diff = fd.coords()[0] - fc.coords()[0];
        prop_assert!((diff - (g.antiderivative(d) - g.antiderivative(c))).abs() <= rc + rd + 1e-12);
        if d - c > 1e-3 {
            let r = integrate_regulated(&g, c, Extended::Finite(d), Mode::Hl, 1e-4, &cfg).unwrap();
            let (val, res) = r.value.unwrap();
            prop_assert!((val.coords()[0] - diff).abs() <= res + rc + rd + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn cousin_partitions_are_fine(c in 0.001..0.5f64, w in 0.0..50.0f64, a in -2.0..0.0f64, len in 0.1..3.0f64) {
        let b = a + len;
        let gauge = Gauge::new(move |t: f64| c * (1.0 + (w * t).sin().abs()) + 0.2 * c * (t - a).abs());
        let p = cousin_partition(&gauge, a, b, 64).unwrap();
        prop_assert!(p.is_fine(&gauge, a, b));
    }

    #[test]
    fn marked_cousin_partitions_are_fine(marks in prop::collection::vec(0.01..0.99f64, 1..6), c in 0.01..0.3f64) {
        let m = marks.clone();
        let gauge = Gauge::new(move |t: f64| {
            let near = m.iter().map(|x| (x - t).abs()).fold(f64::INFINITY, f64::min);
            if near == 0.0 { c } else { c.min(near / 2.0) }
        })
        .with_marks(marks.clone());
        let p = cousin_partition(&gauge, 0.0, 1.0, 64).unwrap();
        prop_assert!(p.is_fine(&gauge, 0.0, 1.0));
        for x in marks {
            prop_assert!(p.cells.iter().any(|&(l, r, xi)| xi == x || x < l || x > r));
        }
    }

    #[test]
    fn hk_defect_at_most_hl((gaps, zs) in step_data(), k in 2i32..8) {
        let g = finite_step(&gaps, &zs);
        let f = primitive(&g, 1e-12, &SumConfig::default()).unwrap();
        let end = gaps.iter().sum::<f64>();
        let gauge = canonical_gauge(&g, gaps.len() + 2, 1e-3, 0.0, 2f64.powi(-k)).unwrap();
        let p = cousin_partition(&gauge, 0.0, end, 64).unwrap();
        prop_assert!(p.is_fine(&gauge, 0.0, end));
        let (hl, hk) = hl_riemann_defect(|t| g.eval(t), |t| f.eval(t).map(|x| x.0), &p).unwrap();
        prop_assert!(hk <= hl + 1e-12);
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn impulses_are_reproduced((gaps, zs) in step_data()) {
        let zs: Vec<f64> = zs.iter().map(|z| z.abs()).collect();
        let set = finite_set(&gaps);
        let c = gaps.iter().sum::<f64>() + 0.25;
        let times: Vec<(OrdinalAddress, f64)> = set.enumerate(gaps.len() + 1).into_iter().map(|c| (c.current, c.value)).collect();
        let t2 = times.clone();
        let z2 = zs.clone();
        let fam = Family::new(set, move |a: &OrdinalAddress| {
            let k = t2.iter().position(|(b, _)| b == a);
            VectorValue::Real(k.and_then(|k| z2.get(k)).copied().unwrap_or(0.0))
        });
        let p = ImpulsiveProblem::fixed(0.0, c, VectorValue::Real(0.0), None, fam);
        let cfg = IterationConfig { grid_per_unit: 32, ..Default::default() };
        let s = extremal_solutions(&p, &cfg).unwrap();
        prop_assert_eq!(bracket(&s), Tri::True);
        prop_assert!(s.residuals.0.max(s.residuals.1) <= cfg.tol);
        for (k, &(_, t)) in times.iter().enumerate().take(zs.len()) {
            let j = jump_check(&s.lower, t).coords()[0];
            prop_assert!((j - zs[k]).abs() <= cfg.tol);
        }
    }
}
