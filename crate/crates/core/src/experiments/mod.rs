//! End-to-end pipelines on radial grids: violation sets of catalog bounds,
//! the exceptional set of the standard lemma with its integral budget,
//! constant sweeps and the optimality lower constant.
//!
//! Per-point work runs on the rayon pool; results are collected in grid
//! order, so output never depends on the worker count.

mod run;

use rayon::prelude::*;

use crate::bounds::{eval_bound, psi_tail, BoundId, BoundInputs, BoundSpec, HSpec, PsiSpec};
use crate::error::{Error, Result};
use crate::measures::{h_log_measure, HMeasure, IntervalSet, RadialFactor};
use crate::rosenbloom;
use crate::series::{self, PowerSeries};
use crate::LogMagnitude;

pub use run::{
    defaults_line, run_experiment, ExperimentConfig, ExperimentOutput, GridSpec, Mode, DEFAULT_Q, EVIDENCE_NOTE,
};

/// Relative truncation tolerance for series values in the pipelines.
pub const SERIES_TOL: f64 = 1e-15;
/// Default relative quadrature tolerance.
pub const QUAD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScheme {
    /// `r_k = R - (R - r0) q^k`, `0 < q < 1`, finite `R`.
    GeometricInGap,
    /// `r_k = r0 q^k`, `q > 1`, `R = inf`.
    Geometric,
}

/// Increasing radii `r_0 < r_1 < ... < R`. Cell `k` is `[r_k, r_{k+1})`,
/// the last one closed by the next point of the scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    radius: f64,
    scheme: GridScheme,
    r0: f64,
    q: f64,
    count: usize,
    points: Vec<f64>,
}

impl RadialGrid {
    pub fn in_gap(radius: f64, r0: f64, q: f64, count: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::validation(format!("gap grid needs a finite radius, got {radius}")));
        }
        if !(r0 >= 0.0 && r0 < radius) {
            return Err(Error::validation(format!("grid start {r0} must lie in [0, {radius})")));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::validation(format!("gap ratio q must lie in (0, 1), got {q}")));
        }
        Self::build(radius, GridScheme::GeometricInGap, r0, q, count)
    }

    pub fn geometric(r0: f64, q: f64, count: usize) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::validation(format!("geometric grid start must be positive, got {r0}")));
        }
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::validation(format!("geometric ratio must exceed 1, got {q}")));
        }
        Self::build(f64::INFINITY, GridScheme::Geometric, r0, q, count)
    }

    /// Gap grid from `r0` to `r_end` (both included) with `count` points.
    pub fn gap_between(radius: f64, r0: f64, r_end: f64, count: usize) -> Result<Self> {
        if count < 2 || !(r_end > r0 && r_end < radius) {
            return Err(Error::validation(format!("need r0 < r_end < {radius} and count >= 2")));
        }
        let q = ((radius - r_end) / (radius - r0)).powf(1.0 / (count - 1) as f64);
        Self::in_gap(radius, r0, q, count)
    }

    /// Geometric grid from `start` to `end` (both included) with `count` points.
    pub fn geometric_between(start: f64, end: f64, count: usize) -> Result<Self> {
        if count < 2 || !(end > start && start > 0.0 && end.is_finite()) {
            return Err(Error::validation(format!(
                "need 0 < start < end < inf and count >= 2, got {start}:{end}:{count}"
            )));
        }
        Self::geometric(start, (end / start).powf(1.0 / (count - 1) as f64), count)
    }

    fn build(radius: f64, scheme: GridScheme, r0: f64, q: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::validation("empty grid (count = 0)"));
        }
        let mut g = RadialGrid { radius, scheme, r0, q, count, points: Vec::new() };
        g.points = (0..count).map(|k| g.point(k)).collect();
        let end = g.point(count);
        if !(end < radius) || g.points.iter().chain([&end]).collect::<Vec<_>>().windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation(format!(
                "grid is not strictly increasing below R = {radius} in double precision (r0 = {r0}, q = {q}, count = {count})"
            )));
        }
        Ok(g)
    }

    fn point(&self, k: usize) -> f64 {
        let f = (k as f64 * self.q.ln()).exp();
        match self.scheme {
            GridScheme::GeometricInGap => self.radius - (self.radius - self.r0) * f,
            GridScheme::Geometric => self.r0 * f,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `[r_k, r_{k+1})`.
    pub fn cell(&self, k: usize) -> (f64, f64) {
        let hi = if k + 1 < self.count { self.points[k + 1] } else { self.point(k + 1) };
        (self.points[k], hi)
    }

    /// Right end of the last cell.
    pub fn end(&self) -> f64 {
        self.point(self.count)
    }

    /// Same cells split `m`-fold: `count -> m count`, `q -> q^{1/m}`.
    pub fn refine(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::validation("refinement factor must be positive"));
        }
        Self::build(self.radius, self.scheme, self.r0, self.q.powf(1.0 / m as f64), self.count * m)
    }

    /// Union of the cells whose flag is set.
    pub fn cells_where(&self, flags: &[bool]) -> IntervalSet {
        let cells = flags.iter().enumerate().filter(|(_, &f)| f).map(|(k, _)| self.cell(k));
        IntervalSet::new(self.radius, cells).expect("grid cells lie inside [0, R)")
    }
}

/// `log M_f(r)` (the series value, since coefficients are nonnegative) and `log mu_f(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValues {
    pub r: f64,
    pub log_mu: f64,
    pub central_index: u64,
    pub log_m: f64,
}

pub fn evaluate_grid(series: &PowerSeries, grid: &RadialGrid) -> Result<Vec<PointValues>> {
    check_grid(series, grid)?;
    grid.points()
        .par_iter()
        .map(|&r| {
            let e = series::evaluate(series, r, SERIES_TOL)?;
            Ok(PointValues { r, log_mu: e.log_mu.log(), central_index: e.central_index, log_m: e.log_f.log() })
        })
        .collect()
}

fn check_grid(series: &PowerSeries, grid: &RadialGrid) -> Result<()> {
    if grid.radius() != series.radius() {
        return Err(Error::validation(format!(
            "grid lives on [0, {}) but {} has radius {}",
            grid.radius(),
            series.label(),
            series.radius()
        )));
    }
    Ok(())
}

fn refuse_monomial(series: &PowerSeries) -> Result<()> {
    if series.is_monomial() {
        Err(Error::validation(format!("{} is a monomial: mu = M, so every bound holds trivially", series.label())))
    } else {
        Ok(())
    }
}

/// Bound and series values at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMargin {
    pub r: f64,
    pub log_mu: f64,
    pub log_m: f64,
    /// `None` when the bound is undefined at `r`; see `excluded`.
    pub log_bound: Option<f64>,
    pub excluded: Option<String>,
}

impl PointMargin {
    /// `log bound - log M`; negative means violation.
    pub fn slack(&self) -> Option<f64> {
        self.log_bound.map(|b| b - self.log_m)
    }

    pub fn violates_with_shift(&self, log_c_shift: f64) -> bool {
        self.log_bound.is_some_and(|b| self.log_m > b + log_c_shift)
    }

    pub fn violates(&self) -> bool {
        self.violates_with_shift(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct ViolationReport {
    pub bound: BoundSpec,
    pub grid: RadialGrid,
    /// Union of the cells whose left sample violates; an estimate, not a certified set.
    pub e_est: IntervalSet,
    pub measures: Vec<(String, HMeasure)>,
    pub points: Vec<PointMargin>,
}

impl ViolationReport {
    pub fn excluded(&self) -> impl Iterator<Item = &PointMargin> {
        self.points.iter().filter(|p| p.excluded.is_some())
    }

    pub fn violation_count(&self) -> usize {
        self.points.iter().filter(|p| p.violates()).count()
    }

    pub fn measure(&self, h: &HSpec) -> Option<HMeasure> {
        self.measures.iter().find(|(id, _)| *id == h.id()).map(|(_, m)| *m)
    }
}

fn check_bound(series: &PowerSeries, bound: &BoundSpec) -> Result<()> {
    bound.validate()?;
    if bound.id == BoundId::Lower {
        return Err(Error::validation("LOWER is a lower bound; use the optimality check instead"));
    }
    let br = bound.radius();
    if br.is_finite() && br != series.radius() {
        return Err(Error::validation(format!(
            "bound {} lives on [0, {br}) but {} has radius {}",
            bound.id,
            series.label(),
            series.radius()
        )));
    }
    Ok(())
}

/// Margins of `bound` on the grid. Points where the bound is undefined are
/// kept with the reason and never count as violations.
pub fn margins(series: &PowerSeries, bound: &BoundSpec, grid: &RadialGrid) -> Result<Vec<PointMargin>> {
    check_bound(series, bound)?;
    let values = evaluate_grid(series, grid)?;
    values
        .par_iter()
        .map(|v| {
            let inputs = BoundInputs {
                log_mu: LogMagnitude::from_log(v.log_mu),
                log_m: Some(LogMagnitude::from_log(v.log_m)),
                r: v.r,
            };
            let (log_bound, excluded) = match eval_bound(bound, inputs) {
                Ok(b) => (Some(b.log()), None),
                Err(Error::Domain(msg)) => (None, Some(msg)),
                Err(e) => return Err(e),
            };
            Ok(PointMargin { r: v.r, log_mu: v.log_mu, log_m: v.log_m, log_bound, excluded })
        })
        .collect()
}

fn measures_of(e: &IntervalSet, hs: &[HSpec], tol: f64) -> Result<Vec<(String, HMeasure)>> {
    hs.iter().map(|h| Ok((h.id(), h_log_measure(e, h, tol, RadialFactor::Auto)?))).collect()
}

pub fn violation_set(
    series: &PowerSeries,
    bound: &BoundSpec,
    grid: &RadialGrid,
    hs: &[HSpec],
) -> Result<ViolationReport> {
    refuse_monomial(series)?;
    let points = margins(series, bound, grid)?;
    let flags: Vec<bool> = points.iter().map(PointMargin::violates).collect();
    let e_est = grid.cells_where(&flags);
    let measures = measures_of(&e_est, hs, QUAD_TOL)?;
    Ok(ViolationReport { bound: bound.clone(), grid: grid.clone(), e_est, measures, points })
}

/// Which function the standard lemma is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaTarget {
    /// `v = g`, `d = g'`
    G,
    /// `v = g'`, `d = g''`
    GPrime,
}

impl std::str::FromStr for LemmaTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "g" => Ok(LemmaTarget::G),
            "g_prime" | "gprime" | "g'" => Ok(LemmaTarget::GPrime),
            other => Err(Error::validation(format!("unknown lemma target {other:?} (expected g or g_prime)"))),
        }
    }
}

impl std::fmt::Display for LemmaTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LemmaTarget::G => "g",
            LemmaTarget::GPrime => "g_prime",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaSetPoint {
    pub r: f64,
    pub v: f64,
    pub d: f64,
    /// `log h(r) + log psi(v)`
    pub log_threshold: f64,
}

impl LemmaSetPoint {
    pub fn violates(&self) -> bool {
        self.d.ln() >= self.log_threshold
    }
}

#[derive(Debug, Clone)]
pub struct LemmaSetReport {
    pub target: LemmaTarget,
    pub psi: PsiSpec,
    pub h: HSpec,
    pub set: IntervalSet,
    /// `int_F h(r)/r dr` of the grid estimate.
    pub measure: f64,
    /// `int_{v(x0)}^inf dy / psi(y)`.
    pub budget: f64,
    pub v0: f64,
    pub points: Vec<LemmaSetPoint>,
}

impl LemmaSetReport {
    pub fn within_budget(&self) -> bool {
        self.measure <= self.budget * (1.0 + 1e-6) + QUAD_TOL
    }

    pub fn check(&self) -> Result<()> {
        if self.within_budget() {
            Ok(())
        } else {
            Err(Error::Assertion(format!(
                "exceptional set measure {} exceeds the budget {} (psi = {}, h = {}, target = {})",
                self.measure, self.budget, self.psi, self.h, self.target
            )))
        }
    }
}

/// Grid estimate of `{x : d(x) >= h(e^x) psi(v(x))}` with its measure
/// `int h(e^x) dx = int h(r)/r dr` and the budget from the change of variables.
pub fn standard_lemma_set(
    series: &PowerSeries,
    psi: &PsiSpec,
    h: &HSpec,
    target: LemmaTarget,
    grid: &RadialGrid,
) -> Result<LemmaSetReport> {
    refuse_monomial(series)?;
    psi.validate()?;
    check_grid(series, grid)?;
    if h.radius() != series.radius() {
        return Err(Error::validation(format!(
            "h = {h} lives on [0, {}), series radius is {}",
            h.radius(),
            series.radius()
        )));
    }
    if grid.points()[0] < h.rho_start() {
        return Err(Error::validation(format!(
            "grid starts at {} below the start {} of h = {h}",
            grid.points()[0],
            h.rho_start()
        )));
    }
    let stats: Vec<rosenbloom::RosenbloomStats> =
        grid.points().par_iter().map(|&r| rosenbloom::stats(series, r.ln())).collect::<Result<_>>()?;
    let vd: Vec<(f64, f64)> = stats
        .iter()
        .map(|s| match target {
            LemmaTarget::G => (s.g, s.g1),
            LemmaTarget::GPrime => (s.g1, s.g2),
        })
        .collect();
    if let Some(k) = vd.windows(2).position(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::HypothesisViolation(format!(
            "{target} is not increasing on the grid: {} at r = {} then {} at r = {}",
            vd[k].0,
            grid.points()[k],
            vd[k + 1].0,
            grid.points()[k + 1]
        )));
    }
    let v0 = vd[0].0;
    let budget = psi_tail(psi, v0)?;
    let points: Vec<LemmaSetPoint> = grid
        .points()
        .iter()
        .zip(&vd)
        .map(|(&r, &(v, d))| Ok(LemmaSetPoint { r, v, d, log_threshold: h.eval(r)?.ln() + psi.log_eval(v)? }))
        .collect::<Result<_>>()?;
    let flags: Vec<bool> = points.iter().map(LemmaSetPoint::violates).collect();
    let set = grid.cells_where(&flags);
    let measure = h_log_measure(&set, h, QUAD_TOL, RadialFactor::Include)?
        .finite()
        .ok_or_else(|| Error::NonFinite("bounded grid set reported a divergent measure".into()))?;
    Ok(LemmaSetReport { target, psi: psi.clone(), h: h.clone(), set, measure, budget, v0, points })
}

/// `C = 10^{-3 + k/8}` for `k = 0..=96`.
pub fn sweep_constants() -> Vec<f64> {
    (0..=96).map(|k| 10f64.powf(-3.0 + k as f64 / 8.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepStep {
    pub c: f64,
    pub violating: usize,
    pub measure: HMeasure,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub template: BoundSpec,
    pub h: HSpec,
    pub budget: f64,
    pub steps: Vec<SweepStep>,
    /// Smallest swept `C` whose violation set fits the budget.
    pub c_star: Option<f64>,
    pub excluded: usize,
}

fn fits(m: HMeasure, budget: f64) -> bool {
    match m {
        HMeasure::Finite(v) => v <= budget,
        HMeasure::Divergent { .. } => budget == f64::INFINITY,
    }
}

/// Sweeps `C` over [`sweep_constants`] using margins computed once at `C = 1`.
pub fn constant_sweep(
    series: &PowerSeries,
    template: &BoundSpec,
    grid: &RadialGrid,
    h: &HSpec,
    budget: f64,
) -> Result<SweepReport> {
    refuse_monomial(series)?;
    if !(budget >= 0.0) {
        return Err(Error::validation(format!("measure budget must be nonnegative, got {budget}")));
    }
    let unit = template.clone().with_c(1.0);
    let points = margins(series, &unit, grid)?;
    let steps: Vec<SweepStep> = sweep_constants()
        .into_par_iter()
        .map(|c| {
            let flags: Vec<bool> = points.iter().map(|p| p.violates_with_shift(c.ln())).collect();
            let set = grid.cells_where(&flags);
            let measure = h_log_measure(&set, h, QUAD_TOL, RadialFactor::Auto)?;
            Ok(SweepStep { c, violating: flags.iter().filter(|&&f| f).count(), measure })
        })
        .collect::<Result<_>>()?;
    let c_star = steps.iter().find(|s| fits(s.measure, budget)).map(|s| s.c);
    let excluded = points.iter().filter(|p| p.excluded.is_some()).count();
    Ok(SweepReport { template: unit, h: h.clone(), budget, steps, c_star, excluded })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerConstant {
    pub c_low: f64,
    pub argmin_r: f64,
    /// Grid radii where `log(mu/(1-r)) <= 0` leaves the expression undefined.
    pub skipped: Vec<f64>,
}

/// `min_r M_f(r) / [mu/(1-r) (log(mu/(1-r)))^{1/2}]` over the grid.
pub fn lower_constant(series: &PowerSeries, grid: &RadialGrid) -> Result<LowerConstant> {
    if series.radius() != 1.0 {
        return Err(Error::validation(format!(
            "the lower bound lives on the unit disk; {} has radius {}",
            series.label(),
            series.radius()
        )));
    }
    let values = evaluate_grid(series, grid)?;
    let lower = BoundSpec::new(BoundId::Lower);
    let mut best: Option<(f64, f64)> = None;
    let mut skipped = Vec::new();
    for v in &values {
        let inputs = BoundInputs { log_mu: LogMagnitude::from_log(v.log_mu), log_m: None, r: v.r };
        match eval_bound(&lower, inputs) {
            Ok(b) => {
                let ratio = v.log_m - b.log();
                if best.is_none_or(|(l, _)| ratio < l) {
                    best = Some((ratio, v.r));
                }
            }
            Err(Error::Domain(_)) => skipped.push(v.r),
            Err(e) => return Err(e),
        }
    }
    let (log_c, argmin_r) =
        best.ok_or_else(|| Error::domain("the lower-bound expression is undefined at every grid point"))?;
    Ok(LowerConstant { c_low: log_c.exp(), argmin_r, skipped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    pub coarse: LowerConstant,
    pub refined: LowerConstant,
    pub relative_change: f64,
}

impl OptimalityReport {
    pub fn stable(&self) -> bool {
        self.coarse.c_low > 0.0 && self.relative_change < 0.1
    }

    pub fn check(&self) -> Result<()> {
        if self.stable() {
            Ok(())
        } else {
            Err(Error::Assertion(format!(
                "lower constant {} changed by {:.3}% under 2x refinement",
                self.coarse.c_low,
                100.0 * self.relative_change
            )))
        }
    }
}

/// Lower constant on the grid and on its 2x refinement.
pub fn optimality_check(series: &PowerSeries, grid: &RadialGrid) -> Result<OptimalityReport> {
    let coarse = lower_constant(series, grid)?;
    let refined = lower_constant(series, &grid.refine(2)?)?;
    let relative_change = ((refined.c_low - coarse.c_low) / coarse.c_low).abs();
    Ok(OptimalityReport { coarse, refined, relative_change })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{make_family, FamilySpec};
    use approx::assert_relative_eq;

    #[test]
    fn grid_construction() {
        let g = RadialGrid::gap_between(1.0, 0.9, 0.999, 3).unwrap();
        assert_relative_eq!(g.points()[1], 0.99, max_relative = 1e-14);
        assert_relative_eq!(g.points()[2], 0.999, max_relative = 1e-14);
        assert_relative_eq!(g.end(), 0.9999, max_relative = 1e-14);
        let fine = g.refine(2).unwrap();
        assert_eq!(fine.len(), 6);
        assert_relative_eq!(fine.end(), g.end(), max_relative = 1e-14);
        assert_relative_eq!(fine.points()[2], 0.99, max_relative = 1e-14);
        let geo = RadialGrid::geometric_between(2.0, 1e4, 200).unwrap();
        assert_relative_eq!(*geo.points().last().unwrap(), 1e4, max_relative = 1e-12);
        assert!(RadialGrid::in_gap(1.0, 0.5, 0.5, 0).is_err());
        assert!(RadialGrid::in_gap(1.0, 0.5, 1e-3, 10).is_err());
    }

    #[test]
    fn huge_constant_gives_empty_set() {
        let s = make_family(&FamilySpec::Exp).unwrap();
        let g = RadialGrid::geometric_between(3.0, 1e3, 60).unwrap();
        let b: BoundSpec = "WVC:n=2,delta=1,C=1e9".parse().unwrap();
        let rep = violation_set(&s, &b, &g, &[HSpec::Unit]).unwrap();
        assert!(rep.e_est.is_empty());
        assert_eq!(rep.measure(&HSpec::Unit), Some(HMeasure::Finite(0.0)));
    }

    #[test]
    fn geometric_never_violates_kov_beyond_threshold() {
        let s = make_family(&FamilySpec::Geometric).unwrap();
        let g = RadialGrid::gap_between(1.0, 0.7, 0.9999, 100).unwrap();
        let b: BoundSpec = "KOV:delta=0.5,C=1".parse().unwrap();
        let rep = violation_set(&s, &b, &g, &[HSpec::Disk]).unwrap();
        assert!(rep.e_est.is_empty(), "{}", rep.e_est);
        assert_eq!(rep.excluded().count(), 0);
    }

    #[test]
    fn excluded_points_are_reported() {
        let s = make_family(&FamilySpec::Exp).unwrap();
        let g = RadialGrid::geometric_between(0.5, 50.0, 20).unwrap();
        let b: BoundSpec = "WVC:n=3,delta=1,C=10".parse().unwrap();
        let rep = violation_set(&s, &b, &g, &[]).unwrap();
        let ex: Vec<_> = rep.excluded().collect();
        assert!(!ex.is_empty());
        assert!(ex.iter().all(|p| p.excluded.as_ref().unwrap().contains("log_")));
        assert!(ex.iter().all(|p| !p.violates()));
    }

    #[test]
    fn lower_and_monomial_refused() {
        let s = make_family(&FamilySpec::Kovari { rho: 1.0 }).unwrap();
        let g = RadialGrid::gap_between(1.0, 0.5, 0.9, 10).unwrap();
        assert!(violation_set(&s, &BoundSpec::new(BoundId::Lower), &g, &[]).unwrap_err().is_validation());
        let m = make_family(&FamilySpec::Monomial { coeff: 2.0, degree: 3 }).unwrap();
        let g = RadialGrid::geometric_between(2.0, 10.0, 5).unwrap();
        assert!(violation_set(&m, &BoundSpec::new(BoundId::Wv), &g, &[]).unwrap_err().is_validation());
    }

    #[test]
    fn sweep_with_infinite_budget_takes_minimum() {
        let s = make_family(&FamilySpec::Exp).unwrap();
        let g = RadialGrid::geometric_between(20.0, 1e3, 40).unwrap();
        let rep = constant_sweep(&s, &"WVC:n=2,delta=1".parse().unwrap(), &g, &HSpec::Unit, f64::INFINITY).unwrap();
        assert_eq!(rep.c_star, Some(1e-3));
        assert_eq!(rep.steps.len(), 97);
        // measures shrink as C grows
        let ms: Vec<f64> = rep.steps.iter().map(|s| s.measure.finite().unwrap()).collect();
        assert!(ms.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn lemma_budget_value() {
        assert_eq!(psi_tail(&PsiSpec::Square, 10.0).unwrap(), 0.1);
    }
}
