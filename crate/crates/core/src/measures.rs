//! Finite unions of radial intervals and the sizes of exceptional sets.
//!
//! Integrals of `h(r)` run in the log coordinate `u` (`log r` for `R = inf`,
//! `-log(1 - r/R)` on a disk), where every catalog weight is smooth and
//! boundary-touching intervals become half-lines.

use std::fmt;

use crate::bounds::{from_log_coord, to_log_coord, HSpec};
use crate::error::{Error, Result};
use crate::logmag::Neumaier;
use crate::quadrature;

/// Disjoint, sorted, non-adjacent half-open intervals `[lo, hi)` in `[0, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    radius: f64,
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty(radius: f64) -> Self {
        IntervalSet { radius, intervals: Vec::new() }
    }

    /// Builds a set from arbitrary intervals, merging overlaps and touching ends.
    pub fn new(radius: f64, intervals: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::validation(format!("radius must be positive, got {radius}")));
        }
        let mut v: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in intervals {
            if !(lo >= 0.0 && lo.is_finite() && hi <= radius && lo < hi) {
                return Err(Error::validation(format!("interval [{lo}, {hi}) is not inside [0, {radius})")));
            }
            v.push((lo, hi));
        }
        Ok(Self::normalized(radius, v))
    }

    fn normalized(radius: f64, mut v: Vec<(f64, f64)>) -> Self {
        v.retain(|(lo, hi)| lo < hi);
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (lo, hi) in v {
            match out.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => out.push((lo, hi)),
            }
        }
        IntervalSet { radius, intervals: out }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Whether the last interval reaches `R`.
    pub fn touches_boundary(&self) -> bool {
        self.intervals.last().is_some_and(|&(_, hi)| hi == self.radius)
    }

    pub fn contains(&self, r: f64) -> bool {
        let i = self.intervals.partition_point(|&(lo, _)| lo <= r);
        i > 0 && r < self.intervals[i - 1].1
    }

    fn same_radius(&self, other: &Self) -> Result<()> {
        if self.radius == other.radius {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "interval sets on [0, {}) and [0, {}) do not mix",
                self.radius, other.radius
            )))
        }
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.same_radius(other)?;
        let all = self.intervals.iter().chain(&other.intervals).copied().collect();
        Ok(Self::normalized(self.radius, all))
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.same_radius(other)?;
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if lo < hi {
                out.push((lo, hi));
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(Self::normalized(self.radius, out))
    }

    /// `E ∩ [lo, hi)`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Self {
        let v = self.intervals.iter().map(|&(a, b)| (a.max(lo), b.min(hi))).collect();
        Self::normalized(self.radius, v)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.intervals.iter().all(|&(lo, hi)| {
            let i = other.intervals.partition_point(|&(a, _)| a <= lo);
            i > 0 && hi <= other.intervals[i - 1].1
        })
    }

    /// Lebesgue measure, exact up to the rounding of each difference.
    pub fn length(&self) -> f64 {
        let mut s = Neumaier::default();
        for &(lo, hi) in &self.intervals {
            s.add(hi - lo);
        }
        s.total()
    }

    /// One `lo hi` pair per line; `#` starts a comment line.
    pub fn parse(text: &str, radius: f64) -> Result<Self> {
        let mut v = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::validation(format!("line {}: {s:?} is not a number", lineno + 1)))
            };
            if nums.len() != 2 {
                return Err(Error::validation(format!("line {}: expected \"lo hi\", got {line:?}", lineno + 1)));
            }
            v.push((parse(nums[0])?, parse(nums[1])?));
        }
        Self::new(radius, v)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# intervals in [0, {})\n", self.radius);
        for &(lo, hi) in &self.intervals {
            s.push_str(&format!("{lo:.17e} {hi:.17e}\n"));
        }
        s
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("{}");
        }
        let parts: Vec<String> = self.intervals.iter().map(|(lo, hi)| format!("[{lo}, {hi})")).collect();
        f.write_str(&parts.join(" ∪ "))
    }
}

/// Whether the `1/r` of the measure's integrand `h(r)/r` is applied.
///
/// `Auto` applies it only for `R = inf`. On the unit disk the reference
/// examples (`DISK` and `DISKLOG` measures of one log-unit) are computed with
/// the bare `h(r) dr`; near `R` the factor tends to 1 and does not affect
/// finiteness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadialFactor {
    #[default]
    Auto,
    Include,
    Omit,
}

impl RadialFactor {
    fn applies(self, radius: f64) -> bool {
        match self {
            RadialFactor::Auto => radius.is_infinite(),
            RadialFactor::Include => true,
            RadialFactor::Omit => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HMeasure {
    Finite(f64),
    /// No convergence on a boundary-touching interval; `partial` is the last partial integral.
    Divergent {
        partial: f64,
    },
}

impl HMeasure {
    pub fn finite(self) -> Option<f64> {
        match self {
            HMeasure::Finite(v) => Some(v),
            HMeasure::Divergent { .. } => None,
        }
    }
}

/// Partial integrals above this are reported as divergent.
pub const DIVERGENCE_CEILING: f64 = 1e12;
/// Largest log coordinate at which a custom `h` is evaluated.
const CUSTOM_U_MAX: f64 = 700.0;
/// Largest log coordinate reached for the closed-form catalog weights.
const ANALYTIC_U_MAX: f64 = 1e300;

struct Weight<'a> {
    h: &'a HSpec,
    radial: bool,
}

impl Weight<'_> {
    fn at(&self, u: f64) -> f64 {
        self.h.log_coord_weight(u, self.radial)
    }

    fn integrate(&self, a: f64, b: f64, tol: f64) -> Result<f64> {
        let v = quadrature::integrate(|u| self.at(u), a, b, tol, 0.0)?.value;
        if v.is_nan() || v < 0.0 {
            return Err(Error::domain(format!(
                "h = {} is not positive on the log-coordinate range [{a}, {b}]",
                self.h
            )));
        }
        Ok(v)
    }

    fn u_max(&self) -> f64 {
        match self.h {
            HSpec::Custom { .. } => CUSTOM_U_MAX,
            _ => ANALYTIC_U_MAX,
        }
    }
}

enum Tail {
    Converged(f64),
    Diverged(f64),
}

/// `int_{u0}^inf w(u) du` over doubling spans; converged when a span adds
/// less than `tol` of the running total.
fn half_line(w: &Weight<'_>, u0: f64, tol: f64, ceiling: f64) -> Result<Tail> {
    let mut total = Neumaier::default();
    let mut a = u0;
    let mut span = 1.0f64.max(u0.abs());
    loop {
        let b = (a + span).min(w.u_max());
        let piece = w.integrate(a, b, tol)?;
        total.add(piece);
        let t = total.total();
        if t > ceiling {
            return Ok(Tail::Diverged(t));
        }
        if piece <= tol * t || (t == 0.0 && piece == 0.0) {
            return Ok(Tail::Converged(t));
        }
        if b >= w.u_max() {
            return Ok(Tail::Diverged(t));
        }
        a = b;
        span *= 2.0;
    }
}

/// `int_{E ∩ [rho_start, R)} h(r) dr / r`, with the `1/r` per `factor`.
pub fn h_log_measure(e: &IntervalSet, h: &HSpec, tol: f64, factor: RadialFactor) -> Result<HMeasure> {
    if e.radius() != h.radius() {
        return Err(Error::validation(format!("set lives on [0, {}) but h = {h} on [0, {})", e.radius(), h.radius())));
    }
    let big_r = h.radius();
    let w = Weight { h, radial: factor.applies(big_r) };
    let part = e.restrict(h.rho_start(), big_r);
    let mut total = Neumaier::default();
    for &(lo, hi) in part.intervals() {
        let ulo = to_log_coord(big_r, lo);
        if hi == big_r {
            match half_line(&w, ulo, tol, DIVERGENCE_CEILING)? {
                Tail::Converged(v) => total.add(v),
                Tail::Diverged(p) => return Ok(HMeasure::Divergent { partial: total.total() + p }),
            }
        } else {
            total.add(w.integrate(ulo, to_log_coord(big_r, hi), tol)?);
        }
    }
    Ok(HMeasure::Finite(total.total()))
}

fn check_disk_radius(e: &IntervalSet, r: f64) -> Result<()> {
    if e.radius() != 1.0 {
        return Err(Error::validation(format!("densities need a set on [0, 1), got radius {}", e.radius())));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::domain(format!("density radius must lie in [0, 1), got {r}")));
    }
    Ok(())
}

/// `(1/log(1/(1-r))) int_{E ∩ [0, r)} dt / (1-t)`, integrated in closed form.
pub fn log_density(e: &IntervalSet, r: f64) -> Result<f64> {
    check_disk_radius(e, r)?;
    if r == 0.0 {
        return Err(Error::domain("log density is undefined at r = 0 (log 1/(1-r) = 0)"));
    }
    let mut num = Neumaier::default();
    for &(lo, hi) in e.restrict(0.0, r).intervals() {
        num.add((1.0 - lo).ln() - (1.0 - hi).ln());
    }
    Ok(num.total() / -(-r).ln_1p())
}

/// `lambda(E ∩ (r, 1)) / (1 - r)`.
pub fn final_density(e: &IntervalSet, r: f64) -> Result<f64> {
    check_disk_radius(e, r)?;
    Ok(e.restrict(r, 1.0).length() / (1.0 - r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceVerdict {
    /// The partial integral passed the threshold.
    ExceededThreshold,
    /// Below the threshold at the end of the reachable range, but the
    /// increments over doubling spans never decayed.
    NonDecaying,
    /// The increments died out: the integral converges.
    Converged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceReport {
    pub verdict: DivergenceVerdict,
    pub partial: f64,
    /// Radius reached, `r_k`.
    pub reached: f64,
}

impl DivergenceReport {
    pub fn passed(&self) -> bool {
        self.verdict != DivergenceVerdict::Converged
    }
}

/// Partial integrals of `h(r)/r` over `[rho_start, r_k]` with `r_k -> R`
/// (doubling steps in the log coordinate).
pub fn h_divergence_check(h: &HSpec, threshold: f64, factor: RadialFactor) -> Result<DivergenceReport> {
    let big_r = h.radius();
    let w = Weight { h, radial: factor.applies(big_r) };
    let u0 = to_log_coord(big_r, h.rho_start());
    let mut total = Neumaier::default();
    let mut a = u0;
    let mut span = 1.0f64.max(u0.abs());
    // ratios of consecutive increments over the last few spans
    let mut prev_piece = f64::NAN;
    let mut small_ratios = 0u32;
    loop {
        let b = (a + span).min(w.u_max());
        let piece = w.integrate(a, b, 1e-10)?;
        total.add(piece);
        let t = total.total();
        let report = |verdict| DivergenceReport { verdict, partial: t, reached: from_log_coord(big_r, b) };
        if t > threshold {
            return Ok(report(DivergenceVerdict::ExceededThreshold));
        }
        if piece <= 1e-12 * t {
            return Ok(report(DivergenceVerdict::Converged));
        }
        small_ratios = if piece < 0.5 * prev_piece { small_ratios + 1 } else { 0 };
        if small_ratios >= 8 {
            return Ok(report(DivergenceVerdict::Converged));
        }
        if b >= w.u_max() {
            return Ok(report(DivergenceVerdict::NonDecaying));
        }
        prev_piece = piece;
        a = b;
        span *= 2.0;
    }
}

/// Witness that finite `DISKLOG` measure does not force finite `DISK` measure:
/// `u`-intervals `[2^k, 2^k + 1]`, `k < count`, with `u = log 1/(1-r)`.
/// Each adds exactly 1 to the `DISK` measure but only `log(1 + 2^{-k})` to
/// the `DISKLOG` measure. `count` is limited to 5 so that `1 - r` keeps
/// at least eight significant digits.
pub fn disklog_witness(count: u32) -> Result<IntervalSet> {
    if count > 5 {
        return Err(Error::validation("witness beyond 5 intervals loses precision in 1 - r"));
    }
    let r_of = |u: f64| -(-u).exp_m1();
    let iv = (0..count).map(|k| {
        let u = 2f64.powi(k as i32);
        (r_of(u), r_of(u + 1.0))
    });
    IntervalSet::new(1.0, iv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::E;
    use std::sync::Arc;

    fn disk(iv: &[(f64, f64)]) -> IntervalSet {
        IntervalSet::new(1.0, iv.iter().copied()).unwrap()
    }

    fn one_minus_exp(t: f64) -> f64 {
        -(-t).exp_m1()
    }

    fn measure(e: &IntervalSet, h: &HSpec) -> f64 {
        h_log_measure(e, h, 1e-12, RadialFactor::Auto).unwrap().finite().unwrap()
    }

    #[test]
    fn unit_measures() {
        let e = disk(&[(one_minus_exp(1.0), one_minus_exp(2.0))]);
        assert_abs_diff_eq!(measure(&e, &HSpec::Disk), 1.0, epsilon = 1e-12);
        let e = IntervalSet::new(f64::INFINITY, [(1.0, E)]).unwrap();
        assert_abs_diff_eq!(measure(&e, &HSpec::Unit), 1.0, epsilon = 1e-12);
        let e = disk(&[(one_minus_exp(E), one_minus_exp(E * E))]);
        assert_abs_diff_eq!(measure(&e, &HSpec::DiskLog), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn radial_factor_include_is_exact_change_of_variables() {
        // int dr / (r (1-r)) = log(r2/r1) + log((1-r1)/(1-r2))
        let (r1, r2) = (one_minus_exp(1.0), one_minus_exp(2.0));
        let e = disk(&[(r1, r2)]);
        let v = h_log_measure(&e, &HSpec::Disk, 1e-12, RadialFactor::Include).unwrap().finite().unwrap();
        assert_abs_diff_eq!(v, (r2 / r1).ln() + 1.0, epsilon = 1e-11);
    }

    #[test]
    fn part_below_rho_start_is_ignored() {
        let e = IntervalSet::new(f64::INFINITY, [(0.1, E)]).unwrap();
        assert_abs_diff_eq!(measure(&e, &HSpec::Unit), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn boundary_touching_sets() {
        let e = disk(&[(0.5, 1.0)]);
        assert!(matches!(
            h_log_measure(&e, &HSpec::Disk, 1e-9, RadialFactor::Auto).unwrap(),
            HMeasure::Divergent { .. }
        ));
        assert!(matches!(
            h_log_measure(&e, &HSpec::DiskLog, 1e-9, RadialFactor::Auto).unwrap(),
            HMeasure::Divergent { .. }
        ));
        // h(r) = 1 on the disk: int_{1/2}^1 dr = 1/2
        let flat = HSpec::Custom {
            func: crate::bounds::CustomFn { name: "one".into(), f: Arc::new(|_| 1.0) },
            rho_start: 0.0,
            radius: 1.0,
        };
        let v = h_log_measure(&e, &flat, 1e-10, RadialFactor::Auto).unwrap().finite().unwrap();
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn density_examples() {
        let empty = IntervalSet::empty(1.0);
        assert_eq!(log_density(&empty, 0.7).unwrap(), 0.0);
        assert_eq!(final_density(&empty, 0.7).unwrap(), 0.0);
        let r = one_minus_exp(2.0);
        assert_abs_diff_eq!(log_density(&disk(&[(0.0, r)]), r).unwrap(), 1.0, epsilon = 1e-14);
        let e = disk(&[(one_minus_exp(1.0), one_minus_exp(2.0))]);
        assert_abs_diff_eq!(log_density(&e, one_minus_exp(4.0)).unwrap(), 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(final_density(&disk(&[(0.95, 0.975)]), 0.9).unwrap(), 0.25, epsilon = 1e-14);
        assert_eq!(final_density(&disk(&[(0.3, 1.0)]), 0.3).unwrap(), 1.0);
        assert!(matches!(log_density(&e, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn divergence_checks() {
        for h in [HSpec::Unit, HSpec::Disk] {
            let rep = h_divergence_check(&h, 1e6, RadialFactor::Auto).unwrap();
            assert_eq!(rep.verdict, DivergenceVerdict::ExceededThreshold, "{h}");
        }
        let rep = h_divergence_check(&HSpec::DiskLog, 1e6, RadialFactor::Auto).unwrap();
        assert_eq!(rep.verdict, DivergenceVerdict::NonDecaying);
        assert!(rep.partial > 600.0);
        let gap = HSpec::Custom {
            func: crate::bounds::CustomFn { name: "1-r".into(), f: Arc::new(|r| 1.0 - r) },
            rho_start: 0.0,
            radius: 1.0,
        };
        let rep = h_divergence_check(&gap, 1e6, RadialFactor::Auto).unwrap();
        assert_eq!(rep.verdict, DivergenceVerdict::Converged);
        assert_abs_diff_eq!(rep.partial, 0.5, epsilon = 1e-8);
    }

    #[test]
    fn witness_separates_disk_and_disklog() {
        let mut disk_m = Vec::new();
        let mut log_m = Vec::new();
        for k in 1..=5 {
            let e = disklog_witness(k).unwrap();
            disk_m.push(measure(&e, &HSpec::Disk));
            log_m.push(measure(&e, &HSpec::DiskLog));
        }
        for (k, &m) in disk_m.iter().enumerate() {
            assert_abs_diff_eq!(m, (k + 1) as f64, epsilon = 1e-6);
        }
        let expected: f64 = (0..5).map(|k| (1.0 + 0.5f64.powi(k)).ln()).sum();
        assert_abs_diff_eq!(log_m[4], expected, epsilon = 1e-6);
        assert!(log_m[4] < 2.0);
    }

    #[test]
    fn text_roundtrip_and_normalization() {
        let e = IntervalSet::parse("# demo\n0.1 0.2\n0.2 0.3\n0.5 0.6\n0.55 0.7\n", 1.0).unwrap();
        assert_eq!(e.intervals(), &[(0.1, 0.3), (0.5, 0.7)]);
        let back = IntervalSet::parse(&e.to_text(), 1.0).unwrap();
        assert_eq!(back, e);
        assert!(IntervalSet::parse("0.5 0.4\n", 1.0).is_err());
        assert!(IntervalSet::parse("0.5 1.2\n", 1.0).is_err());
        assert!(IntervalSet::parse("0.5\n", 1.0).is_err());
        assert!(e.contains(0.25) && !e.contains(0.3) && e.contains(0.5));
    }

    #[test]
    fn finite_disk_measure_means_zero_densities() {
        let e = disk(
            &(1..20)
                .map(|k| (one_minus_exp(k as f64 * 0.9), one_minus_exp(k as f64 * 0.9 + 0.5 / (k * k) as f64)))
                .collect::<Vec<_>>(),
        );
        let rs: Vec<f64> = (1..=30).map(|k| one_minus_exp(k as f64 * 0.6)).collect();
        let fd: Vec<f64> = rs.iter().map(|&r| final_density(&e, r).unwrap()).collect();
        let ld: Vec<f64> = rs.iter().map(|&r| log_density(&e, r).unwrap()).collect();
        assert!(fd[25..].iter().all(|&d| d < 0.02));
        assert!(ld[29] < 0.05);
        // past the last interval the numerator is frozen
        assert!(ld[20..].windows(2).all(|w| w[1] < w[0]));
    }

    fn arb_set() -> impl Strategy<Value = IntervalSet> {
        prop::collection::vec((0.0f64..0.999, 0.0f64..0.05), 0..6).prop_map(|v| {
            IntervalSet::new(1.0, v.into_iter().map(|(lo, w)| (lo, (lo + w + 1e-6).min(0.9999)))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn normalized_invariants(e in arb_set()) {
            let iv = e.intervals();
            prop_assert!(iv.iter().all(|&(lo, hi)| lo < hi));
            prop_assert!(iv.windows(2).all(|w| w[0].1 < w[1].0));
        }

        #[test]
        fn additivity(a in arb_set(), b in arb_set()) {
            let inter = a.intersection(&b).unwrap();
            let uni = a.union(&b).unwrap();
            for h in [HSpec::Disk, HSpec::DiskLog] {
                let lhs = measure(&uni, &h) + measure(&inter, &h);
                let rhs = measure(&a, &h) + measure(&b, &h);
                prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0));
            }
            let lhs = uni.length() + inter.length();
            prop_assert!((lhs - a.length() - b.length()).abs() < 1e-12);
        }

        #[test]
        fn monotonicity(a in arb_set(), b in arb_set(), r in 0.01f64..0.999) {
            let big = a.union(&b).unwrap();
            prop_assert!(a.is_subset_of(&big));
            for h in [HSpec::Disk, HSpec::DiskLog] {
                prop_assert!(measure(&a, &h) <= measure(&big, &h) + 1e-9);
            }
            prop_assert!(log_density(&a, r).unwrap() <= log_density(&big, r).unwrap() + 1e-12);
            prop_assert!(final_density(&a, r).unwrap() <= final_density(&big, r).unwrap() + 1e-12);
        }
    }
}
