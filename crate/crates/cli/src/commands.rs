//! The five subcommands. Each returns its report and tables; `Err` means malformed input.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, bail, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use transquad::gallery::{self, Expected, GalleryObject};
use transquad::impulsive::{bracket, extremal_solutions, ImpulsiveProblem, IterationConfig};
use transquad::{
    canonical_gauge, classify, cousin_partition, hl_riemann_defect, integrate_regulated, integrate_step, partial_sum_table,
    primitive, step_approximation, CdPrimitive, Error, Extended, Family, Mode, RegulatedConfig, RegulatedMapping,
    StepAsRegulated, StepMapping, SumConfig, VectorValue, WellOrderedSet,
};

use crate::report::{coord_cells, coord_header, fmt, num, value, verdict, Report, Status, Table};
use crate::spec::{read_json, Bound, FamilySpec, ImpulsiveSpec, RegulatedSpec, StepSpec};
use crate::{Command, Source};

pub struct Outcome {
    pub report: Report,
    /// Printed with `--format csv`.
    pub main: Table,
    pub files: Vec<(PathBuf, Table)>,
}

pub fn dispatch(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Sum(a) => sum(a),
        Command::IntegrateStep(a) => integrate_step_cmd(a),
        Command::Integrate(a) => integrate(a),
        Command::GaugeCheck(a) => gauge_check(a),
        Command::ImpulsiveSolve(a) => impulsive(a),
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn nonnegative(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a nonnegative number, got {s:?}")),
    }
}

fn at_least_one(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("expected an integer ≥ 1, got {s:?}")),
    }
}

fn at_least_two(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 2 => Ok(n),
        _ => Err(format!("expected an integer ≥ 2, got {s:?}")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Hl,
    Hk,
    Bochner,
    Riemann,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Hl => Mode::Hl,
            ModeArg::Hk => Mode::Hk,
            ModeArg::Bochner => Mode::Bochner,
            ModeArg::Riemann => Mode::Riemann,
        }
    }
}

/// Core errors caused by the input rather than by budgets or convergence.
fn is_input_error(e: &Error) -> bool {
    matches!(e, Error::Invalid(_) | Error::UnknownId(_) | Error::SpaceMismatch(_) | Error::InvalidAddress(_) | Error::OutOfRange(_))
}

/// Input errors abort; the others make the run inconclusive with a note.
fn triage(e: Error, report: &mut Report, what: &str) -> Result<()> {
    if is_input_error(&e) {
        bail!("{what}: {e}");
    }
    report.status = Status::Inconclusive;
    report.notes.push(format!("{what}: {e}"));
    Ok(())
}

fn gallery_entry(id: &str) -> Result<gallery::GalleryEntry> {
    gallery::get(id).map_err(|e| anyhow!("{e}; known ids: {}", gallery::ids().join(", ")))
}

fn wrong_kind(id: &str, want: &str) -> anyhow::Error {
    anyhow!("gallery entry {id:?} is not {want}")
}

fn expected(e: &Expected) -> Value {
    json!({
        "summable": e.summable, "absolutely_summable": e.absolutely, "bounded": e.bounded,
        "hl": e.hl, "hk": e.hk, "bochner": e.bochner, "riemann": e.riemann,
        "total": e.total.as_ref().map(|v| value(v, 0.0)), "improper": e.improper,
    })
}

fn uniform(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| if j + 1 == n { b } else { a + (b - a) * j as f64 / (n - 1) as f64 })
}

fn primitive_table(samples: impl Iterator<Item = (f64, transquad::Result<(VectorValue<f64>, f64)>)>, report: &mut Report) -> Table {
    let mut table: Option<Table> = None;
    let mut failed = 0usize;
    for (t, r) in samples {
        match r {
            Ok((v, res)) => {
                let tab = table.get_or_insert_with(|| {
                    let mut h = vec!["t".to_string()];
                    h.extend(coord_header("f", &v));
                    h.push("residual".into());
                    Table::new(h)
                });
                let mut row = vec![fmt(t)];
                row.extend(coord_cells(&v));
                row.push(fmt(res));
                tab.push(row);
            }
            Err(_) => failed += 1,
        }
    }
    if failed > 0 {
        report.notes.push(format!("primitive unavailable at {failed} grid point(s)"));
    }
    table.unwrap_or_else(|| Table::new(["t", "residual"]))
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SumArgs {
    #[command(flatten)]
    pub source: Source,
    /// Tolerance on the total.
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    pub tol: f64,
    /// Rows of the partial-sum table (enumerated positions).
    #[arg(long, default_value_t = 32, value_parser = at_least_one)]
    pub budget: usize,
    /// Children examined per infinite layer.
    #[arg(long, default_value_t = 10_000, value_parser = at_least_one)]
    pub layer_budget: usize,
    /// Write the partial-sum table to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn load_family(s: &Source) -> Result<(Family<f64>, Option<Expected>)> {
    if let Some(id) = &s.gallery {
        let e = gallery_entry(id)?;
        return match e.object {
            GalleryObject::Family(f) => Ok((f, Some(e.expected))),
            _ => Err(wrong_kind(id, "a family")),
        };
    }
    let spec: FamilySpec = read_json(s.spec.as_ref().unwrap())?;
    Ok((spec.build()?, None))
}

fn sum(a: &SumArgs) -> Result<Outcome> {
    let (family, exp) = load_family(&a.source)?;
    let cfg = SumConfig::default().with_layer_budget(a.layer_budget as u64);
    let mut report = Report::new("sum", json!(a));
    let r = classify(&family, a.tol, &cfg);
    let tolerance_met = r.total.as_ref().is_some_and(|t| t.1 <= a.tol);
    let cut = r.cutoff_strings();
    report.result = json!({
        "summable": verdict(r.verdict),
        "absolutely_summable": verdict(r.absolute_verdict),
        "bounded": verdict(r.bounded_verdict),
        "cutoffs": {"bounded": cut.c1, "absolute": cut.c2, "summable": cut.c3},
        "total": r.total.as_ref().map(|(v, res)| value(v, *res)),
        "tolerance_met": tolerance_met,
        "expected": exp.as_ref().map(expected),
    });
    report.status = Status::of(r.verdict);
    if r.verdict.is_true() && r.total.is_none() {
        report.status = Status::Inconclusive;
    }
    report.notes.extend(r.notes);
    if r.total.is_some() && !tolerance_met {
        report.notes.push(format!("total residual exceeds tolerance {}", a.tol));
    }
    let mut table = Table::new(["address", "position", "residual"]);
    match partial_sum_table(&family, a.budget, a.tol, &cfg) {
        Ok(rows) => {
            if let Some(first) = rows.first() {
                let mut h = vec!["address".to_string(), "position".into()];
                h.extend(coord_header("value", &first.sigma));
                h.extend(["residual".to_string(), "exact".into()]);
                table = Table::new(h);
            }
            for e in rows {
                let mut row = vec![e.gamma.to_string(), fmt(e.value)];
                row.extend(coord_cells(&e.sigma));
                row.extend([fmt(e.residual), e.exact.to_string()]);
                table.push(row);
            }
        }
        Err(e) => report.notes.push(format!("partial-sum table unavailable: {e}")),
    }
    let files = a.csv.iter().map(|p| (p.clone(), table.clone())).collect();
    Ok(Outcome { report, main: table, files })
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct IntegrateStepArgs {
    #[command(flatten)]
    pub source: Source,
    /// Mode whose verdict decides the exit code.
    #[arg(long, value_enum, default_value_t = ModeArg::Hl)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    pub tol: f64,
    /// Children examined per infinite layer.
    #[arg(long, default_value_t = 10_000, value_parser = at_least_one)]
    pub layer_budget: usize,
    /// Points of the uniform grid on which the primitive is sampled.
    #[arg(long, default_value_t = 65, value_parser = at_least_two)]
    pub grid: usize,
    /// Length of the sampled part `[a, a + L]` on unbounded domains.
    #[arg(long, default_value_t = 8.0, value_parser = positive)]
    pub horizon: f64,
    /// Write the primitive to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn load_step(s: &Source) -> Result<(StepMapping<f64>, Option<Expected>)> {
    if let Some(id) = &s.gallery {
        let e = gallery_entry(id)?;
        return match e.object {
            GalleryObject::Step(g) => Ok((g, Some(e.expected))),
            _ => Err(wrong_kind(id, "a step mapping")),
        };
    }
    let spec: StepSpec = read_json(s.spec.as_ref().unwrap())?;
    Ok((spec.build()?, None))
}

fn verdicts<T: transquad::Scalar>(v: &transquad::IntegrabilityVerdict<T>) -> Value {
    json!({"hl": verdict(v.hl), "hk": verdict(v.hk), "bochner": verdict(v.bochner), "riemann": verdict(v.riemann)})
}

fn integrate_step_cmd(a: &IntegrateStepArgs) -> Result<Outcome> {
    let (g, exp) = load_step(&a.source)?;
    let cfg = SumConfig::default().with_layer_budget(a.layer_budget as u64);
    let mode: Mode = a.mode.into();
    let mut report = Report::new("integrate-step", json!(a));
    let v = integrate_step(&g, mode, a.tol, &cfg);
    let (lo, hi) = g.interval();
    report.result = json!({
        "interval": [num(lo), num(hi.to_scalar())],
        "mode": mode,
        "verdict": verdict(v.requested()),
        "verdicts": verdicts(&v),
        "integral": v.integral.as_ref().map(|(x, r)| value(x, *r)),
        "cutoffs": {
            "hl": v.hl_cutoff.as_ref().map(|c| c.to_string()),
            "bochner": v.bochner_cutoff.as_ref().map(|c| c.to_string()),
            "riemann": v.riemann_cutoff.as_ref().map(|c| c.to_string()),
        },
        "expected": exp.as_ref().map(expected),
    });
    report.status = Status::of(v.requested());
    report.notes.extend(v.notes.iter().cloned());
    let b = hi.finite().unwrap_or(lo + a.horizon);
    let table = match primitive(&g, a.tol, &cfg) {
        Ok(trace) => primitive_table(uniform(lo, b, a.grid).map(|t| (t, trace.eval(t))), &mut report),
        Err(e) => {
            report.notes.push(format!("primitive unavailable: {e}"));
            Table::new(["t", "residual"])
        }
    };
    let files = a.csv.iter().map(|p| (p.clone(), table.clone())).collect();
    Ok(Outcome { report, main: table, files })
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct IntegrateArgs {
    /// `gallery:<id>` or a JSON spec file.
    #[arg(long)]
    pub mapping: String,
    /// Integration interval `a b`; `b` may be `inf`. Defaults to the mapping's interval.
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
    pub interval: Option<Vec<String>>,
    /// Mode whose verdict decides the exit code.
    #[arg(long, value_enum, default_value_t = ModeArg::Hl)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 1e-3, value_parser = positive)]
    pub tol: f64,
    /// Knots per partition.
    #[arg(long, default_value_t = 60_000, value_parser = at_least_one)]
    pub budget: usize,
    /// ε levels of the refinement schedule.
    #[arg(long, default_value_t = 24, value_parser = at_least_one)]
    pub levels: usize,
    /// Points of the uniform grid on which the primitive is sampled.
    #[arg(long, default_value_t = 65, value_parser = at_least_two)]
    pub grid: usize,
    /// Write the partition knots to this CSV file.
    #[arg(long)]
    pub knots: Option<PathBuf>,
    /// Write the primitive to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

type Mapping = Arc<dyn RegulatedMapping<f64>>;
type Loaded = (Mapping, (f64, Extended<f64>), Option<Expected>);

fn load_mapping(spec: &str, budget: usize) -> Result<Loaded> {
    let path = std::path::Path::new(spec);
    let id = match spec.strip_prefix("gallery:") {
        Some(id) => Some(id),
        None if !path.exists() => Some(spec),
        None => None,
    };
    if let Some(id) = id {
        let e = gallery_entry(id)?;
        let g: Mapping = match e.object {
            GalleryObject::Regulated(m) => m,
            GalleryObject::Step(s) => Arc::new(StepAsRegulated::new(s, budget)),
            _ => return Err(wrong_kind(id, "a mapping")),
        };
        return Ok((g, e.interval, Some(e.expected)));
    }
    let s: RegulatedSpec = read_json(path)?;
    let g = s.build()?;
    let dom = g.domain();
    Ok((Arc::new(g), dom, None))
}

fn parse_interval(v: &[String]) -> Result<(f64, Extended<f64>)> {
    let a: f64 = v[0].parse().map_err(|_| anyhow!("interval start {:?} is not a number", v[0]))?;
    let b = match v[1].parse::<f64>() {
        Ok(x) => Bound::Num(x),
        Err(_) => Bound::Text(v[1].clone()),
    }
    .extended()?;
    if !a.is_finite() || !(Extended::Finite(a) < b) {
        bail!("interval needs finite a < b");
    }
    Ok((a, b))
}

fn integrate(a: &IntegrateArgs) -> Result<Outcome> {
    let (g, default, exp) = load_mapping(&a.mapping, a.budget)?;
    let (lo, hi) = match &a.interval {
        Some(v) => parse_interval(v)?,
        None => default,
    };
    let (dlo, dhi) = g.domain();
    if lo < dlo || hi > dhi {
        bail!("interval [{lo}, {}] is not inside the domain [{dlo}, {}]", hi.to_scalar(), dhi.to_scalar());
    }
    let mode: Mode = a.mode.into();
    let cfg = RegulatedConfig { knot_budget: a.budget, max_levels: a.levels, ..RegulatedConfig::default() };
    let mut report = Report::new("integrate", json!(a));
    let mut main = Table::new(["left", "right", "kind", "bound"]);
    let mut files = Vec::new();
    let r = match integrate_regulated(g.as_ref(), lo, hi, mode, a.tol, &cfg) {
        Ok(r) => r,
        Err(e) => {
            triage(e, &mut report, "integration")?;
            report.result = json!({"interval": [num(lo), num(hi.to_scalar())], "mode": mode});
            if let Some(p) = &a.knots {
                files.push((p.clone(), Table::new(["left", "right", "kind", "bound"])));
            }
            return Ok(Outcome { report, main, files });
        }
    };
    let levels: Vec<Value> = r
        .levels
        .iter()
        .map(|l| {
            json!({
                "epsilon": num(l.epsilon), "knots": l.knots, "open_runs": l.open_runs,
                "complete": l.complete, "residual": num(l.residual),
            })
        })
        .collect();
    report.result = json!({
        "interval": [num(lo), num(hi.to_scalar())],
        "mode": mode,
        "verdict": verdict(r.verdict.requested()),
        "verdicts": verdicts(&r.verdict),
        "integral": r.value.as_ref().map(|(v, res)| value(v, *res)),
        "tolerance_met": r.tolerance_met,
        "cutoffs": {
            "hl": r.cutoff_points[0].map(num),
            "bochner": r.cutoff_points[1].map(num),
            "riemann": r.cutoff_points[2].map(num),
        },
        "levels": levels,
        "expected": exp.as_ref().map(expected),
    });
    report.status = Status::of(r.verdict.requested());
    report.notes.extend(r.notes.iter().cloned());
    if let Some(p) = &r.partition {
        let mut rows: Vec<(f64, Vec<String>)> = p.cells().into_iter().map(|(x, y, o)| (x, vec![fmt(x), fmt(y), "cell".into(), fmt(o)])).collect();
        rows.extend(p.tails.iter().flatten().map(|t| (t.start, vec![fmt(t.start), fmt(t.limit), "tail".into(), fmt(t.value_residual())])));
        rows.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (_, row) in rows {
            main.push(row);
        }
        if let Some(path) = &a.csv {
            let prim = step_approximation(g.as_ref(), p).and_then(|s| primitive(&s, p.epsilon, &cfg.sum)).map(|trace| CdPrimitive {
                trace,
                epsilon: p.epsilon,
                a: lo,
                tail_bound: g.tail_integral_bound(lo, p.reached),
            });
            let table = match prim {
                Ok(c) => primitive_table(uniform(lo, p.reached, a.grid).map(|t| (t, c.eval(t))), &mut report),
                Err(e) => {
                    report.notes.push(format!("primitive unavailable: {e}"));
                    Table::new(["t", "residual"])
                }
            };
            files.push((path.clone(), table));
        }
    } else if a.csv.is_some() {
        report.notes.push("primitive unavailable: no complete partition".into());
    }
    if let Some(p) = &a.knots {
        files.push((p.clone(), main.clone()));
    }
    Ok(Outcome { report, main, files })
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct GaugeArgs {
    #[command(flatten)]
    pub source: Source,
    /// Steps kept in the finite truncation.
    #[arg(long, default_value_t = 12, value_parser = at_least_one)]
    pub knots: usize,
    /// Gauge scales as exponents `k` of `s = 2^-k`.
    #[arg(long, value_delimiter = ',', default_values_t = [4, 6, 8])]
    pub scales: Vec<i32>,
    /// Defect target ε of the gauge at the knots.
    #[arg(long, default_value_t = 1e-4, value_parser = positive)]
    pub tol: f64,
    /// Lower bound on the gauge away from the knots.
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
    pub floor: f64,
    /// Bisection depth of the Cousin construction.
    #[arg(long, default_value_t = 64, value_parser = at_least_one)]
    pub depth: usize,
    /// Write the defect table to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// The first `k` steps of `g`, on `[a, λ_k]`.
fn truncate(g: &StepMapping<f64>, k: usize) -> Result<(StepMapping<f64>, bool)> {
    let cursors = g.index().enumerate(k + 1);
    let mut pts: Vec<f64> = cursors.iter().map(|c| c.value).collect();
    let mut exact = pts.len() <= k;
    if exact {
        match g.index().sup() {
            Extended::Finite(b) if pts.last().is_some_and(|&l| l < b) => pts.push(b),
            Extended::Finite(_) => {}
            Extended::PosInf => exact = false,
        }
    }
    if pts.len() < 2 {
        bail!("the step mapping needs at least one step");
    }
    let vals = pts.iter().map(|&t| g.eval(t)).collect::<transquad::Result<Vec<_>>>().map_err(|e| anyhow!("evaluating steps: {e}"))?;
    let set = WellOrderedSet::finite(pts).map_err(|e| anyhow!("{e}"))?;
    let steps = Family::new(set, move |a: &transquad::OrdinalAddress| match a.digits() {
        [j] => vals[*j as usize].clone(),
        _ => vals[vals.len() - 1].clone(),
    });
    Ok((StepMapping::new(steps), exact))
}

fn gauge_check(a: &GaugeArgs) -> Result<Outcome> {
    let (g, _) = load_step(&a.source)?;
    let (t, exact) = truncate(&g, a.knots)?;
    let mut report = Report::new("gauge-check", json!(a));
    if !exact {
        report.notes.push(format!("defects of the truncation to the first {} steps", a.knots));
    }
    let (lo, hi) = t.interval();
    let b = hi.to_scalar();
    let cfg = SumConfig::default();
    let trace = primitive(&t, 1e-12, &cfg).map_err(|e| anyhow!("primitive of the truncation: {e}"))?;
    let mut table = Table::new(["k", "s", "cells", "hl", "hk"]);
    let mut status = Status::Certified;
    let mut hls = Vec::new();
    let mut fine = true;
    let mut hk_le_hl = true;
    for &k in &a.scales {
        let s = 2f64.powi(-k);
        let gauge = canonical_gauge(&t, a.knots + 2, a.tol, a.floor, s).map_err(|e| anyhow!("gauge: {e}"))?;
        let p = match cousin_partition(&gauge, lo, b, a.depth) {
            Ok(p) => p,
            Err(e) => {
                status = Status::Inconclusive;
                report.notes.push(format!("scale 2^-{k}: {e}"));
                continue;
            }
        };
        fine &= p.is_fine(&gauge, lo, b);
        let (hl, hk) = hl_riemann_defect(|x| t.eval(x), |x| trace.eval(x).map(|v| v.0), &p).map_err(|e| anyhow!("defect: {e}"))?;
        hk_le_hl &= hk <= hl * (1.0 + 1e-12) + 1e-300;
        hls.push(hl);
        table.push(vec![k.to_string(), fmt(s), p.len().to_string(), fmt(hl), fmt(hk)]);
    }
    if !fine {
        status = Status::Inconclusive;
        report.notes.push("a partition failed the δ-fineness re-check".into());
    }
    report.status = status;
    report.result = json!({
        "interval": [num(lo), num(b)],
        "steps": a.knots.min(t.index().enumerate(usize::MAX).len().saturating_sub(1)),
        "exact": exact,
        "fine": fine,
        "hk_le_hl": hk_le_hl,
        "hl_nonincreasing": hls.windows(2).all(|w| w[1] <= w[0]),
        "hl_below_tol": hls.last().is_some_and(|&h| h < a.tol),
        "rows": table.rows.len(),
    });
    let files = a.csv.iter().map(|p| (p.clone(), table.clone())).collect();
    Ok(Outcome { report, main: table, files })
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ImpulsiveArgs {
    #[command(flatten)]
    pub source: Source,
    /// Stop when successive iterates differ by at most this on the grid.
    #[arg(long, value_parser = positive)]
    pub tol: Option<f64>,
    /// Iterations per chain.
    #[arg(long, value_parser = at_least_one)]
    pub iterations: Option<usize>,
    /// Background grid points per unit length.
    #[arg(long, value_parser = at_least_one)]
    pub grid: Option<usize>,
    /// Write the trajectories to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the iteration log to this CSV file.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

fn impulsive(a: &ImpulsiveArgs) -> Result<Outcome> {
    let mut it = IterationConfig::default();
    let mut report = Report::new("impulsive-solve", json!(a));
    let problem: ImpulsiveProblem = if let Some(id) = &a.source.gallery {
        match gallery_entry(id)?.object {
            GalleryObject::Impulsive(p) => ImpulsiveProblem::clone(&p),
            _ => return Err(wrong_kind(id, "an impulsive problem")),
        }
    } else {
        let spec: ImpulsiveSpec = read_json(a.source.spec.as_ref().unwrap())?;
        let (p, notes) = spec.build()?;
        report.notes.extend(notes);
        if let Some(t) = spec.iteration.tol {
            if !(t > 0.0) {
                bail!("iteration tol must be positive");
            }
            it.tol = t;
        }
        if let Some(m) = spec.iteration.max_iter {
            it.max_iter = m.max(1);
        }
        if let Some(g) = spec.iteration.grid {
            it.grid_per_unit = g.max(1);
        }
        p
    };
    if let Some(t) = a.tol {
        it.tol = t;
    }
    if let Some(m) = a.iterations {
        it.max_iter = m;
    }
    if let Some(g) = a.grid {
        it.grid_per_unit = g;
    }
    let dim = problem.zero.coords().len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|i| format!("u_{i}")));
    header.extend(["chain".to_string(), "side".into()]);
    let mut table = Table::new(header);
    let mut log = Table::new(["chain", "iteration", "change"]);
    match extremal_solutions(&problem, &it) {
        Ok(s) => {
            for (name, u) in [("lower", &s.lower), ("upper", &s.upper)] {
                for (t, v, after) in u.samples() {
                    let mut row = vec![fmt(t)];
                    row.extend(v.coords().iter().map(|x| fmt(*x)));
                    row.extend([name.to_string(), if after { "right" } else { "left" }.to_string()]);
                    table.push(row);
                }
            }
            for r in &s.log {
                log.push(vec![r.chain.to_string(), r.iteration.to_string(), fmt(r.change)]);
            }
            report.status = Status::Certified;
            report.result = json!({
                "interval": [num(problem.a), num(problem.c)],
                "iterations": {"lower": s.iterations.0, "upper": s.iterations.1},
                "gap": num(s.gap),
                "fixed_point_residuals": {"lower": num(s.residuals.0), "upper": num(s.residuals.1)},
                "truncation_residual": num(s.lower.residual.max(s.upper.residual)),
                "bracket": bracket(&s),
                "grid_points": s.lower.grid.len(),
                "log": s.log.iter().map(|r| json!({"chain": r.chain, "iteration": r.iteration, "change": num(r.change)})).collect::<Vec<_>>(),
            });
        }
        Err(e) => {
            triage(e, &mut report, "iteration")?;
            report.result = json!({"interval": [num(problem.a), num(problem.c)]});
        }
    }
    let mut files: Vec<(PathBuf, Table)> = a.csv.iter().map(|p| (p.clone(), table.clone())).collect();
    if let Some(p) = &a.log {
        files.push((p.clone(), log));
    }
    Ok(Outcome { report, main: table, files })
}
