//! Config-driven experiment runs producing a CSV table and a text summary.

use std::fmt::Write as _;
use std::path::PathBuf;

use super::{
    constant_sweep, lower_constant, optimality_check, standard_lemma_set, violation_set, LemmaTarget, RadialGrid,
    QUAD_TOL, SERIES_TOL,
};
use crate::bounds::{eval_bound, BoundId, BoundInputs, BoundSpec, HSpec, PsiSpec};
use crate::config::{Config, Section};
use crate::corpus::{make_family, FamilySpec};
use crate::error::{Error, Result};
use crate::measures::HMeasure;
use crate::report::{format_real, Cell, Table};
use crate::series::PowerSeries;
use crate::LogMagnitude;

/// Gap ratio used when a gap grid gives neither `q` nor `end`.
pub const DEFAULT_Q: f64 = 0.9;

pub const EVIDENCE_NOTE: &str =
    "Exceptional sets are grid estimates (cells whose left sample violates). Reported measures are empirical evidence, not proof.";

/// The defaults line written into every report.
pub fn defaults_line() -> String {
    format!("defaults: series_tol={SERIES_TOL:e} quad_tol={QUAD_TOL:e} sweep=1e-3..1e9 step 10^(1/8) q={DEFAULT_Q}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Check,
    Sweep,
    Lemma,
    Optimality,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    /// `R - (R - r0) q^k`
    Gap { r0: f64, q: f64, count: usize },
    /// Gap grid through `r0` and `end`.
    GapBetween { r0: f64, end: f64, count: usize },
    /// `r0 q^k`
    Geo { r0: f64, q: f64, count: usize },
    /// Geometric grid through `start` and `end`.
    GeoBetween { start: f64, end: f64, count: usize },
}

impl GridSpec {
    pub fn build(&self, radius: f64) -> Result<RadialGrid> {
        let grid = match *self {
            GridSpec::Gap { r0, q, count } => RadialGrid::in_gap(radius, r0, q, count),
            GridSpec::GapBetween { r0, end, count } => RadialGrid::gap_between(radius, r0, end, count),
            GridSpec::Geo { r0, q, count } => RadialGrid::geometric(r0, q, count),
            GridSpec::GeoBetween { start, end, count } => RadialGrid::geometric_between(start, end, count),
        }?;
        if grid.end() > radius || grid.points().iter().any(|&r| r >= radius) {
            return Err(Error::validation(format!(
                "grid reaches r = {} beyond the radius of convergence {radius}",
                grid.points().last().copied().unwrap_or(f64::NAN)
            )));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub mode: Mode,
    pub family: FamilySpec,
    pub grid: GridSpec,
    /// Extra grid refinement factor for stability checks.
    pub refine: Option<usize>,
    pub bounds: Vec<BoundSpec>,
    pub measures: Vec<HSpec>,
    /// `(h, budget)` for fitting `C*`.
    pub sweep: Option<(HSpec, f64)>,
    pub lemma: Option<(PsiSpec, HSpec, LemmaTarget)>,
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

fn parse_entry<T: std::str::FromStr<Err = Error>>(sec: &Section, key: &str) -> Result<T> {
    let e = sec.require(key)?;
    e.value
        .parse()
        .map_err(|err: Error| Error::validation(format!("line {}: [{}] {key}: {}", e.line, sec.name, detail(err))))
}

fn detail(err: Error) -> String {
    match err {
        Error::Validation(m) => m,
        other => other.to_string(),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_config(&Config::parse(text)?)
    }

    pub fn from_config(cfg: &Config) -> Result<Self> {
        for s in &cfg.sections {
            if !["experiment", "family", "grid", "bound", "measure", "sweep", "lemma", "output"]
                .contains(&s.name.as_str())
            {
                return Err(Error::validation(format!("line {}: unknown section [{}]", s.line, s.name)));
            }
        }
        let exp = cfg.required("experiment")?;
        exp.only(&["name", "mode"])?;
        let name = exp.get("name").map_or_else(|| "experiment".to_string(), |e| e.value.clone());
        let mode_entry = exp.require("mode")?;
        let mode = match mode_entry.value.to_ascii_lowercase().as_str() {
            "check" => Mode::Check,
            "sweep" => Mode::Sweep,
            "lemma" => Mode::Lemma,
            "optimality" => Mode::Optimality,
            other => {
                return Err(Error::validation(format!(
                    "line {}: unknown mode {other:?} (expected check, sweep, lemma or optimality)",
                    mode_entry.line
                )))
            }
        };

        let fam = cfg.required("family")?;
        let id = fam.require("id")?.value.clone();
        let mut params = fam.params();
        params.remove("id");
        let family = FamilySpec::from_params(&id, &params)
            .map_err(|e| Error::validation(format!("line {}: [family] {}", fam.line, detail(e))))?;

        let g = cfg.required("grid")?;
        g.only(&["scheme", "r0", "start", "q", "end", "count", "refine"])?;
        let count =
            g.count("count")?.ok_or_else(|| Error::validation(format!("line {}: [grid] needs count", g.line)))?;
        if count == 0 {
            return Err(Error::validation(format!("line {}: empty grid (count = 0)", g.require("count")?.line)));
        }
        let start = match (g.number("r0")?, g.number("start")?) {
            (Some(v), None) | (None, Some(v)) => v,
            _ => return Err(Error::validation(format!("line {}: [grid] needs exactly one of r0 or start", g.line))),
        };
        let scheme = g.get("scheme").map_or("gap", |e| e.value.as_str()).to_ascii_lowercase();
        let grid = match (scheme.as_str(), g.number("q")?, g.number("end")?) {
            ("gap", Some(_), Some(_)) | ("geo", Some(_), Some(_)) => {
                return Err(Error::validation(format!("line {}: [grid] takes q or end, not both", g.line)))
            }
            ("gap", q, None) => GridSpec::Gap { r0: start, q: q.unwrap_or(DEFAULT_Q), count },
            ("gap", None, Some(end)) => GridSpec::GapBetween { r0: start, end, count },
            ("geo", Some(q), None) => GridSpec::Geo { r0: start, q, count },
            ("geo", None, Some(end)) => GridSpec::GeoBetween { start, end, count },
            ("geo", None, None) => return Err(Error::validation(format!("line {}: geo grid needs q or end", g.line))),
            (other, _, _) => {
                return Err(Error::validation(format!("line {}: unknown grid scheme {other:?} (gap or geo)", g.line)))
            }
        };
        let refine = g.count("refine")?;
        if refine == Some(0) {
            return Err(Error::validation(format!("line {}: refine must be positive", g.line)));
        }

        let mut bounds = Vec::new();
        for b in cfg.all("bound") {
            b.only(&["spec"])?;
            bounds.push(parse_entry::<BoundSpec>(b, "spec")?);
        }
        let measures = match cfg.single("measure")? {
            Some(m) => {
                m.only(&["h"])?;
                let e = m.require("h")?;
                m.list("h")
                    .iter()
                    .map(|h| {
                        h.parse().map_err(|err: Error| Error::validation(format!("line {}: {}", e.line, detail(err))))
                    })
                    .collect::<Result<Vec<HSpec>>>()?
            }
            None => Vec::new(),
        };
        let sweep = match cfg.single("sweep")? {
            Some(s) => {
                s.only(&["h", "budget"])?;
                let budget = s
                    .number("budget")?
                    .ok_or_else(|| Error::validation(format!("line {}: [sweep] needs budget", s.line)))?;
                Some((parse_entry::<HSpec>(s, "h")?, budget))
            }
            None => None,
        };
        let lemma = match cfg.single("lemma")? {
            Some(s) => {
                s.only(&["psi", "h", "target"])?;
                Some((
                    parse_entry::<PsiSpec>(s, "psi")?,
                    parse_entry::<HSpec>(s, "h")?,
                    parse_entry::<LemmaTarget>(s, "target")?,
                ))
            }
            None => None,
        };
        let (csv, summary) = match cfg.single("output")? {
            Some(o) => {
                o.only(&["csv", "summary"])?;
                (o.get("csv").map(|e| PathBuf::from(&e.value)), o.get("summary").map(|e| PathBuf::from(&e.value)))
            }
            None => (None, None),
        };

        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::validation(format!("mode {mode_entry:?} requires {what}", mode_entry = mode_entry.value)))
            }
        };
        match mode {
            Mode::Check => need(!bounds.is_empty(), "at least one [bound]")?,
            Mode::Sweep => need(!bounds.is_empty() && sweep.is_some(), "[bound] and [sweep] sections")?,
            Mode::Lemma => need(lemma.is_some(), "a [lemma] section")?,
            Mode::Optimality => {}
        }
        let cfg = ExperimentConfig { name, mode, family, grid, refine, bounds, measures, sweep, lemma, csv, summary };
        // fail before any computation on an unusable grid
        cfg.grid.build(cfg.family_radius())?;
        Ok(cfg)
    }

    fn family_radius(&self) -> f64 {
        match &self.family {
            FamilySpec::Exp | FamilySpec::Monomial { .. } => f64::INFINITY,
            FamilySpec::Geometric | FamilySpec::Kovari { .. } | FamilySpec::Suleimanov { .. } => 1.0,
            FamilySpec::LogCoeffFormula { radius, .. } => *radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub csv: String,
    pub summary: String,
    /// Guaranteed inequalities that failed numerically.
    pub failures: Vec<String>,
}

fn failure_text(e: Error) -> String {
    match e {
        Error::Assertion(m) => m,
        other => other.to_string(),
    }
}

fn measure_text(m: HMeasure) -> String {
    match m {
        HMeasure::Finite(v) => format_real(v),
        HMeasure::Divergent { partial } => format!("divergent (partial {})", format_real(partial)),
    }
}

/// Runs the experiment and writes the configured output files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let series = make_family(&cfg.family)?;
    let grid = cfg.grid.build(series.radius())?;
    let mut summary = String::new();
    let _ = writeln!(summary, "experiment: {}", cfg.name);
    let _ = writeln!(summary, "family: {}", cfg.family);
    let _ = writeln!(
        summary,
        "grid: {:?} r0={} q={} count={} end={}",
        grid.scheme(),
        format_real(grid.r0()),
        format_real(grid.q()),
        grid.len(),
        format_real(grid.end())
    );
    let _ = writeln!(summary, "{}", defaults_line());
    let mut failures = Vec::new();
    let table = match cfg.mode {
        Mode::Check => run_check(cfg, &series, &grid, &mut summary)?,
        Mode::Sweep => run_sweep(cfg, &series, &grid, &mut summary)?,
        Mode::Lemma => run_lemma(cfg, &series, &grid, &mut summary, &mut failures)?,
        Mode::Optimality => run_optimality(cfg, &series, &grid, &mut summary, &mut failures)?,
    };
    if !failures.is_empty() {
        let _ = writeln!(summary, "ASSERTION FAILURES:");
        for f in &failures {
            let _ = writeln!(summary, "  {f}");
        }
    }
    let csv = table.with_note(defaults_line()).to_csv()?;
    if let Some(p) = &cfg.csv {
        std::fs::write(p, &csv)?;
    }
    if let Some(p) = &cfg.summary {
        std::fs::write(p, &summary)?;
    }
    Ok(ExperimentOutput { csv, summary, failures })
}

fn run_check(cfg: &ExperimentConfig, series: &PowerSeries, grid: &RadialGrid, out: &mut String) -> Result<Table> {
    let _ = writeln!(out, "note: {EVIDENCE_NOTE}");
    let mut table = Table::new(["bound", "C", "r", "log_mu", "log_M", "log_bound", "slack", "violates", "excluded"]);
    for bound in &cfg.bounds {
        let mut spec = bound.clone();
        if let Some((h, budget)) = &cfg.sweep {
            let sw = constant_sweep(series, bound, grid, h, *budget)?;
            match sw.c_star {
                Some(c) => {
                    let _ = writeln!(
                        out,
                        "[{}] fitted C* = {} (h = {h}, budget {})",
                        bound.id,
                        format_real(c),
                        format_real(*budget)
                    );
                    spec = spec.with_c(c);
                }
                None => {
                    let _ = writeln!(
                        out,
                        "[{}] no C in [1e-3, 1e9] meets the budget {} under h = {h}; using C = {}",
                        bound.id,
                        format_real(*budget),
                        spec.c
                    );
                }
            }
        }
        let rep = violation_set(series, &spec, grid, &cfg.measures)?;
        let _ = writeln!(out, "[{}] bound: {spec}", bound.id);
        let _ = writeln!(out, "[{}] violating grid points: {} of {}", bound.id, rep.violation_count(), grid.len());
        let _ = writeln!(out, "[{}] undefined at {} grid points", bound.id, rep.excluded().count());
        let _ = writeln!(out, "[{}] E_est: {}", bound.id, rep.e_est);
        let refined = match cfg.refine {
            Some(m) => Some(violation_set(series, &spec, &grid.refine(m)?, &cfg.measures)?),
            None => None,
        };
        for (id, m) in &rep.measures {
            let _ = write!(out, "[{}] {id}-measure: {}", bound.id, measure_text(*m));
            if let (Some(fine), Some(k)) = (&refined, cfg.refine) {
                let mf = fine.measures.iter().find(|(i, _)| i == id).map(|(_, m)| *m).expect("same h list");
                let _ = write!(out, "; {k}x refined: {}", measure_text(mf));
                if let (HMeasure::Finite(a), HMeasure::Finite(b)) = (*m, mf) {
                    if a > 0.0 {
                        let _ = write!(out, " (relative change {:.4})", ((b - a) / a).abs());
                    }
                }
            }
            let _ = writeln!(out);
        }
        for p in &rep.points {
            table.push(vec![
                spec.id.name().into(),
                spec.c.into(),
                p.r.into(),
                p.log_mu.into(),
                p.log_m.into(),
                p.log_bound.into(),
                p.slack().into(),
                p.violates().into(),
                p.excluded.clone().map_or(Cell::Empty, Cell::Text),
            ]);
        }
    }
    Ok(table)
}

fn run_sweep(cfg: &ExperimentConfig, series: &PowerSeries, grid: &RadialGrid, out: &mut String) -> Result<Table> {
    let (h, budget) = cfg.sweep.clone().expect("validated");
    let mut table = Table::new(["bound", "C", "violating", "measure", "divergent"]);
    for bound in &cfg.bounds {
        let sw = constant_sweep(series, bound, grid, &h, budget)?;
        let _ = writeln!(
            out,
            "[{}] C* = {} (h = {h}, budget {}, {} grid points undefined)",
            bound.id,
            sw.c_star.map_or_else(|| "not found in [1e-3, 1e9]".to_string(), format_real),
            format_real(budget),
            sw.excluded
        );
        for s in &sw.steps {
            let (value, divergent) = match s.measure {
                HMeasure::Finite(v) => (v, false),
                HMeasure::Divergent { partial } => (partial, true),
            };
            table.push(vec![bound.id.name().into(), s.c.into(), s.violating.into(), value.into(), divergent.into()]);
        }
    }
    Ok(table)
}

fn run_lemma(
    cfg: &ExperimentConfig,
    series: &PowerSeries,
    grid: &RadialGrid,
    out: &mut String,
    failures: &mut Vec<String>,
) -> Result<Table> {
    let (psi, h, target) = cfg.lemma.clone().expect("validated");
    let rep = standard_lemma_set(series, &psi, &h, target, grid)?;
    let _ = writeln!(out, "note: {EVIDENCE_NOTE}");
    let _ = writeln!(out, "lemma: psi = {psi}, h = {h}, target = {target}");
    let _ = writeln!(out, "v(x0) = {}", format_real(rep.v0));
    let _ = writeln!(out, "set: {}", rep.set);
    let _ = writeln!(out, "measure: {}", format_real(rep.measure));
    let _ = writeln!(out, "budget: {}", format_real(rep.budget));
    let _ = writeln!(out, "within budget: {}", rep.within_budget());
    if let Err(e) = rep.check() {
        failures.push(failure_text(e));
    }
    let mut table = Table::new(["r", "v", "d", "log_threshold", "violates"]);
    for p in &rep.points {
        table.push(vec![p.r.into(), p.v.into(), p.d.into(), p.log_threshold.into(), p.violates().into()]);
    }
    Ok(table)
}

fn run_optimality(
    cfg: &ExperimentConfig,
    series: &PowerSeries,
    grid: &RadialGrid,
    out: &mut String,
    failures: &mut Vec<String>,
) -> Result<Table> {
    let rep = optimality_check(series, grid)?;
    if !cfg.family.is_extremal_family() {
        let _ = writeln!(
            out,
            "note: {} is not one of the families on which the lower bound is expected to be sharp",
            cfg.family
        );
    }
    let _ = writeln!(out, "C_low: {} at r = {}", format_real(rep.coarse.c_low), format_real(rep.coarse.argmin_r));
    let _ = writeln!(out, "C_low (2x refined): {}", format_real(rep.refined.c_low));
    let _ = writeln!(out, "relative change: {}", format_real(rep.relative_change));
    if !rep.coarse.skipped.is_empty() {
        let _ = writeln!(
            out,
            "grid start advanced past {} points where the expression is undefined",
            rep.coarse.skipped.len()
        );
    }
    if let Err(e) = rep.check() {
        failures.push(failure_text(e));
    }
    debug_assert_eq!(lower_constant(series, grid)?, rep.coarse);
    let values = super::evaluate_grid(series, grid)?;
    let lower = BoundSpec::new(BoundId::Lower);
    let mut table = Table::new(["r", "log_mu", "log_M", "log_lower", "log_ratio"]);
    for v in &values {
        let lb = eval_bound(&lower, BoundInputs { log_mu: LogMagnitude::from_log(v.log_mu), log_m: None, r: v.r })
            .ok()
            .map(|b| b.log());
        table.push(vec![v.r.into(), v.log_mu.into(), v.log_m.into(), lb.into(), lb.map(|b| v.log_m - b).into()]);
    }
    Ok(table)
}
