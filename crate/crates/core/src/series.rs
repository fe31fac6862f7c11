//! Power series given by coefficient moduli, and the log-domain evaluation of
//! the maximum term, the central index and `F(r) = sum |a_n| r^n`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::logmag::{LogMagnitude, Neumaier};

/// Number of consecutive small terms that closes the truncation horizon.
pub const RUN_LENGTH: u64 = 50;

/// Hard cap on the number of terms scanned at one radius.
pub const MAX_TERMS: u64 = 100_000_000;

/// Tolerance used when only the maximum term is needed.
pub const MAX_TERM_TOL: f64 = 1e-16;

const FIRST_CHUNK: usize = 64;
const MAX_CHUNK: usize = 1 << 20;

/// Provider of `log|a_n|`.
///
/// Implementations must be deterministic: the same `n` always yields the same
/// value, regardless of query order or of concurrent callers.
pub trait CoeffSource: Send + Sync + fmt::Debug {
    fn log_coeff(&self, n: u64) -> Result<f64>;

    /// Writes `log|a_{start+i}|` into `out[i]`.
    fn fill(&self, start: u64, out: &mut [f64]) -> Result<()> {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.log_coeff(start + i as u64)?;
        }
        Ok(())
    }

    /// Exclusive upper bound on the indices of nonzero coefficients, when finite.
    fn support_end(&self) -> Option<u64> {
        None
    }
}

/// Coefficients given by a closure `n -> log|a_n|`.
pub struct FnSource<F> {
    f: F,
}

impl<F> fmt::Debug for FnSource<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnSource")
    }
}

impl<F> CoeffSource for FnSource<F>
where
    F: Fn(u64) -> f64 + Send + Sync,
{
    fn log_coeff(&self, n: u64) -> Result<f64> {
        Ok((self.f)(n))
    }
}

/// Finitely many coefficients; everything past the table is zero.
#[derive(Debug, Clone)]
pub struct PolynomialSource {
    log_coeffs: Vec<f64>,
}

impl PolynomialSource {
    /// `log|a_n|` for `n < log_coeffs.len()`; `-inf` marks zero coefficients.
    pub fn from_log_coeffs(log_coeffs: Vec<f64>) -> Self {
        PolynomialSource { log_coeffs }
    }
}

impl CoeffSource for PolynomialSource {
    fn log_coeff(&self, n: u64) -> Result<f64> {
        Ok(usize::try_from(n).ok().and_then(|i| self.log_coeffs.get(i).copied()).unwrap_or(f64::NEG_INFINITY))
    }

    fn support_end(&self) -> Option<u64> {
        let last = self.log_coeffs.iter().rposition(|&l| l > f64::NEG_INFINITY).map_or(0, |i| i + 1);
        Some(last as u64)
    }
}

/// An analytic function on the disk `|z| < radius` described by `|a_n|`.
#[derive(Clone)]
pub struct PowerSeries {
    label: String,
    radius: f64,
    source: Arc<dyn CoeffSource>,
}

impl fmt::Debug for PowerSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PowerSeries").field("label", &self.label).field("radius", &self.radius).finish()
    }
}

impl PowerSeries {
    pub fn new(label: impl Into<String>, radius: f64, source: Arc<dyn CoeffSource>) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::validation(format!("radius of convergence must be positive, got {radius}")));
        }
        Ok(PowerSeries { label: label.into(), radius, source })
    }

    pub fn from_fn<F>(label: impl Into<String>, radius: f64, f: F) -> Result<Self>
    where
        F: Fn(u64) -> f64 + Send + Sync + 'static,
    {
        Self::new(label, radius, Arc::new(FnSource { f }))
    }

    /// Polynomial from coefficient moduli (signs are discarded).
    pub fn polynomial(label: impl Into<String>, coeffs: &[f64]) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation("polynomial coefficients must be finite"));
        }
        let log_coeffs = coeffs.iter().map(|c| c.abs().ln()).collect();
        Self::new(label, f64::INFINITY, Arc::new(PolynomialSource { log_coeffs }))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn source(&self) -> &Arc<dyn CoeffSource> {
        &self.source
    }

    pub fn log_coeff(&self, n: u64) -> Result<LogMagnitude> {
        let l = self.source.log_coeff(n)?;
        if l.is_nan() || l == f64::INFINITY {
            return Err(Error::NonFinite(format!("log|a_{n}| of {} is {l}", self.label)));
        }
        Ok(LogMagnitude::from_log(l))
    }

    /// True when the support is known to be a single index.
    pub fn is_monomial(&self) -> bool {
        let Some(end) = self.source.support_end() else {
            return false;
        };
        let nonzero = (0..end).filter(|&n| matches!(self.source.log_coeff(n), Ok(l) if l > f64::NEG_INFINITY)).count();
        nonzero == 1
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::domain(format!("radius must be finite and nonnegative, got {r}")));
        }
        if r >= self.radius {
            return Err(Error::domain(format!(
                "r = {r} is not inside the disk of convergence of {} (R = {})",
                self.label, self.radius
            )));
        }
        Ok(())
    }
}

/// Maximum term and central index at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxTermResult {
    pub log_mu: LogMagnitude,
    pub central_index: u64,
}

/// Everything one scan at a radius produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub r: f64,
    pub log_mu: LogMagnitude,
    pub central_index: u64,
    pub log_f: LogMagnitude,
    pub horizon: u64,
}

/// Log-terms `log|a_n| + n log r` for `n = 0..=last`, with the running
/// maximum and central index.
#[derive(Debug, Clone)]
pub(crate) struct TermScan {
    pub log_terms: Vec<f64>,
    pub log_mu: f64,
    pub nu: u64,
    pub horizon: u64,
}

impl TermScan {
    /// `log sum_n exp(t_n)` over every stored term.
    pub fn log_sum(&self) -> f64 {
        if self.log_mu == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let mut acc = Neumaier::default();
        for &t in &self.log_terms {
            acc.add((t - self.log_mu).exp());
        }
        self.log_mu + acc.total().ln()
    }
}

fn log_term(log_coeff: f64, n: u64, log_r: f64) -> f64 {
    if log_coeff == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if n == 0 {
        log_coeff
    } else {
        log_coeff + n as f64 * log_r
    }
}

/// Scans terms until `RUN_LENGTH` consecutive terms past `nu + 1` fall below
/// `mu * tol / RUN_LENGTH`.
pub(crate) fn scan(series: &PowerSeries, r: f64, tol: f64) -> Result<TermScan> {
    series.check_radius(r)?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::validation(format!("relative tolerance must lie in (0, 1), got {tol}")));
    }
    if r == 0.0 {
        let l0 = series.log_coeff(0)?.log();
        return Ok(TermScan { log_terms: vec![l0], log_mu: l0, nu: 0, horizon: 0 });
    }
    let log_r = r.ln();
    let small = (tol / RUN_LENGTH as f64).ln();
    let support_end = series.source.support_end();

    let mut terms: Vec<f64> = Vec::new();
    let mut buf = vec![0.0; FIRST_CHUNK];
    let mut max = f64::NEG_INFINITY;
    let mut nu = 0u64;
    let mut run = 0u64;
    let mut n = 0u64;
    loop {
        if n >= MAX_TERMS {
            if max == f64::NEG_INFINITY {
                return Err(Error::DegenerateInput(format!("no nonzero coefficient of {} found", series.label)));
            }
            return Err(Error::TruncationFailure { horizon: n });
        }
        let len = buf.len().min((MAX_TERMS - n) as usize);
        series.source.fill(n, &mut buf[..len])?;
        for &lc in &buf[..len] {
            if lc.is_nan() || lc == f64::INFINITY {
                return Err(Error::NonFinite(format!("log|a_{n}| of {} is {lc}", series.label)));
            }
            let t = log_term(lc, n, log_r);
            terms.push(t);
            if t > f64::NEG_INFINITY && t >= max {
                max = t;
                nu = n;
                run = 0;
            } else if max > f64::NEG_INFINITY && n >= nu + 2 {
                if t < max + small {
                    run += 1;
                } else {
                    run = 0;
                }
                if run == RUN_LENGTH {
                    return Ok(TermScan { log_terms: terms, log_mu: max, nu, horizon: n - RUN_LENGTH });
                }
            }
            n += 1;
        }
        if max == f64::NEG_INFINITY {
            if let Some(end) = support_end {
                if n >= end {
                    return Err(Error::DegenerateInput(format!("every coefficient of {} is zero", series.label)));
                }
            }
        }
        let next = (buf.len() * 2).min(MAX_CHUNK);
        buf.resize(next, 0.0);
    }
}

/// Scans exactly the terms `0..=last`.
pub(crate) fn scan_to(series: &PowerSeries, r: f64, last: u64) -> Result<TermScan> {
    series.check_radius(r)?;
    let log_r = if r == 0.0 { f64::NEG_INFINITY } else { r.ln() };
    let count = usize::try_from(last + 1).map_err(|_| Error::validation("horizon too large"))?;
    let mut coeffs = vec![0.0; count];
    series.source.fill(0, &mut coeffs)?;
    let mut max = f64::NEG_INFINITY;
    let mut nu = 0;
    let terms: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(i, &lc)| {
            let t = if r == 0.0 && i > 0 { f64::NEG_INFINITY } else { log_term(lc, i as u64, log_r) };
            if t > f64::NEG_INFINITY && t >= max {
                max = t;
                nu = i as u64;
            }
            t
        })
        .collect();
    if terms.iter().any(|t| t.is_nan()) {
        return Err(Error::NonFinite(format!("non-finite term in {}", series.label)));
    }
    Ok(TermScan { log_terms: terms, log_mu: max, nu, horizon: last })
}

/// `log mu_f(r)` and the largest index attaining it.
pub fn log_max_term(series: &PowerSeries, r: f64) -> Result<MaxTermResult> {
    let s = scan(series, r, MAX_TERM_TOL)?;
    Ok(MaxTermResult { log_mu: LogMagnitude::from_log(s.log_mu), central_index: s.nu })
}

/// `log sum_n |a_n| r^n`, truncated at the horizon for `tol`.
pub fn log_positive_value(series: &PowerSeries, r: f64, tol: f64) -> Result<LogMagnitude> {
    let s = scan(series, r, tol)?;
    Ok(LogMagnitude::from_log(s.log_sum()))
}

/// Same sum over the fixed index range `0..=last`.
pub fn log_positive_value_to(series: &PowerSeries, r: f64, last: u64) -> Result<LogMagnitude> {
    let s = scan_to(series, r, last)?;
    Ok(LogMagnitude::from_log(s.log_sum()))
}

/// Smallest `N > nu(r)` after which `RUN_LENGTH` consecutive terms are each
/// below `mu_f(r) * tol / RUN_LENGTH`. Sums run over `0..=N + RUN_LENGTH`.
pub fn truncation_horizon(series: &PowerSeries, r: f64, tol: f64) -> Result<u64> {
    Ok(scan(series, r, tol)?.horizon)
}

/// Maximum term, central index and `log F(r)` from a single scan.
pub fn evaluate(series: &PowerSeries, r: f64, tol: f64) -> Result<Evaluation> {
    let s = scan(series, r, tol)?;
    Ok(Evaluation {
        r,
        log_mu: LogMagnitude::from_log(s.log_mu),
        central_index: s.nu,
        log_f: LogMagnitude::from_log(s.log_sum()),
        horizon: s.horizon,
    })
}

/// Lower bound for `log M_f(r)` from `samples` equally spaced points on `|z| = r`.
///
/// `phase(n)` is the argument of `a_n`; the moduli come from `series`.
pub fn max_modulus_sampled(
    series: &PowerSeries,
    phase: &dyn Fn(u64) -> f64,
    r: f64,
    samples: usize,
    tol: f64,
) -> Result<LogMagnitude> {
    if samples == 0 {
        return Err(Error::validation("at least one sample point is required"));
    }
    let s = scan(series, r, tol)?;
    if s.log_mu == f64::NEG_INFINITY {
        return Ok(LogMagnitude::ZERO);
    }
    let weighted: Vec<(f64, f64, f64)> = s
        .log_terms
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > f64::NEG_INFINITY)
        .map(|(n, &t)| (n as f64, (t - s.log_mu).exp(), phase(n as u64)))
        .collect();
    let mut best = f64::NEG_INFINITY;
    for j in 0..samples {
        let theta = 2.0 * PI * j as f64 / samples as f64;
        let mut re = Neumaier::default();
        let mut im = Neumaier::default();
        for &(n, w, ph) in &weighted {
            let angle = ph + n * theta;
            re.add(w * angle.cos());
            im.add(w * angle.sin());
        }
        let modulus = re.total().hypot(im.total());
        best = best.max(modulus.ln());
    }
    Ok(LogMagnitude::from_log(s.log_mu + best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn exp_series() -> PowerSeries {
        PowerSeries::from_fn("exp", f64::INFINITY, |n| -libm::lgamma(n as f64 + 1.0)).unwrap()
    }

    fn geometric() -> PowerSeries {
        PowerSeries::from_fn("geometric", 1.0, |_| 0.0).unwrap()
    }

    fn monomial() -> PowerSeries {
        PowerSeries::polynomial("3z^5", &[0.0, 0.0, 0.0, 0.0, 0.0, 3.0]).unwrap()
    }

    #[test]
    fn log_coeff_examples() {
        assert_abs_diff_eq!(exp_series().log_coeff(3).unwrap().log(), -(6f64.ln()), epsilon = 1e-14);
        assert!(monomial().log_coeff(4).unwrap().is_zero());
    }

    #[test]
    fn max_term_exp_ties_upward() {
        // terms 1, 2, 2, 4/3, ... : n = 1 and n = 2 tie
        let m = log_max_term(&exp_series(), 2.0).unwrap();
        assert_eq!(m.central_index, 2);
        assert_abs_diff_eq!(m.log_mu.log(), 2f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn max_term_geometric_and_monomial() {
        let m = log_max_term(&geometric(), 0.5).unwrap();
        assert_eq!((m.log_mu.log(), m.central_index), (0.0, 0));
        let m = log_max_term(&monomial(), 2.0).unwrap();
        assert_eq!(m.central_index, 5);
        assert_abs_diff_eq!(m.log_mu.log(), 96f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn max_term_errors() {
        assert!(matches!(log_max_term(&geometric(), 1.0), Err(Error::Domain(_))));
        let zero = PowerSeries::polynomial("0", &[0.0, 0.0]).unwrap();
        assert!(matches!(log_max_term(&zero, 0.5), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn positive_value_examples() {
        assert_abs_diff_eq!(log_positive_value(&exp_series(), 1.0, 1e-15).unwrap().log(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(log_positive_value(&geometric(), 0.5, 1e-15).unwrap().log(), 2f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn horizon_examples() {
        let n = truncation_horizon(&exp_series(), 1.0, 1e-18).unwrap();
        assert!((1..60).contains(&n), "exp horizon {n}");
        let tail = -libm::lgamma(n as f64 + 2.0);
        assert!(tail < 1.0 + (1e-18f64 / 50.0).ln());
        // 0.5^n < 1e-18/50 first holds at n = 66
        assert_eq!(truncation_horizon(&geometric(), 0.5, 1e-18).unwrap(), 65);
        assert_eq!(truncation_horizon(&monomial(), 3.0, 1e-9).unwrap(), 6);
    }

    #[test]
    fn sampled_modulus_examples() {
        let zero_phase = |_: u64| 0.0;
        let m = max_modulus_sampled(&exp_series(), &zero_phase, 1.0, 64, 1e-15).unwrap();
        assert_abs_diff_eq!(m.log(), 1.0, epsilon = 1e-13);
        let z = PowerSeries::polynomial("z", &[0.0, 1.0]).unwrap();
        for samples in [1, 3, 17] {
            let m = max_modulus_sampled(&z, &zero_phase, 2.0, samples, 1e-12).unwrap();
            assert_abs_diff_eq!(m.log(), 2f64.ln(), epsilon = 1e-14);
        }
        let one_minus_z = PowerSeries::polynomial("1-z", &[1.0, 1.0]).unwrap();
        let phase = |n: u64| if n == 1 { PI } else { 0.0 };
        let m = max_modulus_sampled(&one_minus_z, &phase, 0.5, 256, 1e-12).unwrap();
        assert_abs_diff_eq!(m.log(), 1.5f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn radius_zero() {
        let m = log_max_term(&exp_series(), 0.0).unwrap();
        assert_eq!((m.log_mu.log(), m.central_index), (0.0, 0));
        assert_eq!(log_positive_value(&exp_series(), 0.0, 1e-9).unwrap().log(), 0.0);
    }

    #[test]
    fn doubled_horizon_changes_little() {
        for (s, r) in [(exp_series(), 30.0), (geometric(), 0.99)] {
            let tol = 1e-12;
            let n = truncation_horizon(&s, r, tol).unwrap();
            let a = log_positive_value(&s, r, tol).unwrap().log();
            let b = log_positive_value_to(&s, r, 2 * (n + RUN_LENGTH)).unwrap().log();
            assert!((a - b).abs() < tol, "{}: {a} vs {b}", s.label());
        }
    }

    #[test]
    fn monomial_detection() {
        assert!(monomial().is_monomial());
        assert!(!PowerSeries::polynomial("1-z", &[1.0, 1.0]).unwrap().is_monomial());
        assert!(!exp_series().is_monomial());
    }
}
