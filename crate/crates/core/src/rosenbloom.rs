//! The coefficient distribution `P(X = n) = a_n e^{nx} / F(x)` and the
//! pointwise Chebyshev argument bounding `F` by the maximum term.
//!
//! With `g(x) = log F(x)`, the mean of `X` is `g'(x)` and its variance is
//! `g''(x)`. For `c > 1` Chebyshev's inequality puts at least `1 - c^{-2}` of the
//! mass in the window `|n - g'| < c sqrt(g'')`, and the window holds at most
//! `floor(2c sqrt(g'')) + 1` integers, each carrying at most `mu_f(e^x)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::logmag::{LogMagnitude, Neumaier};
use crate::series::{scan, PowerSeries, TermScan};

/// Relative truncation tolerance for the moment sums.
pub const STATS_TOL: f64 = 1e-17;

/// Log-domain slack allowed on each link of the chain.
pub const LEMMA_SLACK: f64 = 1e-9;

/// Masses `log p_n` for `n = 0..log_mass.len()`.
#[derive(Debug, Clone)]
pub struct CoeffDistribution {
    pub x: f64,
    pub log_f: LogMagnitude,
    pub log_mass: Vec<f64>,
}

impl CoeffDistribution {
    pub fn mass(&self, n: usize) -> f64 {
        self.log_mass.get(n).map_or(0.0, |l| l.exp())
    }

    pub fn total_mass(&self) -> f64 {
        let mut acc = Neumaier::default();
        for l in &self.log_mass {
            acc.add(l.exp());
        }
        acc.total()
    }
}

/// `(g, g', g'')` at `x`, plus the maximum term data from the same scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RosenbloomStats {
    pub x: f64,
    pub g: f64,
    pub g1: f64,
    pub g2: f64,
    pub log_mu: f64,
    pub central_index: u64,
    pub horizon: u64,
}

impl RosenbloomStats {
    /// Zero variance: the distribution is a point mass (monomial).
    pub fn zero_variance(&self) -> bool {
        self.g2 == 0.0
    }
}

/// Integer window `lo..=hi` around the mean and the log of the terms it holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: u64,
    pub hi: u64,
    pub log_sum: LogMagnitude,
}

impl Window {
    pub fn count(&self) -> u64 {
        self.hi - self.lo + 1
    }
}

/// One grid point of the pointwise chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaPoint {
    pub stats: RosenbloomStats,
    pub c: f64,
    pub window: Window,
    /// `floor(2c sqrt(g'')) + 1`
    pub count_bound: u64,
    /// `log window - log((1 - c^{-2}) F)`, nonnegative when the Chebyshev link holds.
    pub chebyshev_margin: f64,
    /// `log(count_bound * mu) - log window`, nonnegative when the counting link holds.
    pub count_margin: f64,
    /// `C(x, c) = (floor(2c sqrt(g'')) + 1) / ((1 - c^{-2}) sqrt(g''))`
    pub constant: f64,
    /// Large-variance limit `2c / (1 - c^{-2})` of the constant.
    pub asymptotic_constant: f64,
}

impl LemmaPoint {
    pub fn holds(&self) -> bool {
        self.chebyshev_margin >= -LEMMA_SLACK && self.count_margin >= -LEMMA_SLACK
    }

    /// `log(C(x,c) mu sqrt(g'')) - log F`; nonnegative iff `F <= C mu sqrt(g'')`.
    pub fn overall_margin(&self) -> f64 {
        self.constant.ln() + self.stats.log_mu + 0.5 * self.stats.g2.ln() - self.stats.g
    }
}

struct Analysis {
    scan: TermScan,
    stats: RosenbloomStats,
}

fn analyze(series: &PowerSeries, x: f64) -> Result<Analysis> {
    if !x.is_finite() {
        return Err(Error::domain(format!("x must be finite, got {x}")));
    }
    let r = x.exp();
    let scan = scan(series, r, STATS_TOL)?;
    if scan.log_mu == f64::NEG_INFINITY {
        return Err(Error::DegenerateInput(format!("{} has no nonzero term at x = {x}", series.label())));
    }
    let g = scan.log_sum();
    let mut m1 = Neumaier::default();
    for (n, &t) in scan.log_terms.iter().enumerate() {
        m1.add(n as f64 * (t - g).exp());
    }
    let g1 = m1.total();
    let mut m2 = Neumaier::default();
    for (n, &t) in scan.log_terms.iter().enumerate() {
        let d = n as f64 - g1;
        m2.add(d * d * (t - g).exp());
    }
    let stats = RosenbloomStats {
        x,
        g,
        g1,
        g2: m2.total().max(0.0),
        log_mu: scan.log_mu,
        central_index: scan.nu,
        horizon: scan.horizon,
    };
    Ok(Analysis { scan, stats })
}

/// The distribution at `x = log r`.
pub fn distribution(series: &PowerSeries, x: f64) -> Result<CoeffDistribution> {
    let a = analyze(series, x)?;
    let g = a.stats.g;
    Ok(CoeffDistribution {
        x,
        log_f: LogMagnitude::from_log(g),
        log_mass: a.scan.log_terms.iter().map(|t| t - g).collect(),
    })
}

/// `(g, g', g'')` as `log F`, mean and (centered, second pass) variance.
pub fn stats(series: &PowerSeries, x: f64) -> Result<RosenbloomStats> {
    Ok(analyze(series, x)?.stats)
}

fn window_of(a: &Analysis, c: f64) -> Result<Window> {
    let half = c * a.stats.g2.sqrt();
    let last = (a.scan.log_terms.len() - 1) as f64;
    // strict inequalities |n - g1| < half
    let lo = ((a.stats.g1 - half).floor() + 1.0).max(0.0);
    let hi = ((a.stats.g1 + half).ceil() - 1.0).min(last);
    if !(lo <= hi) {
        return Err(Error::DegenerateInput(format!(
            "empty Chebyshev window around mean {} with half-width {half}",
            a.stats.g1
        )));
    }
    let (lo, hi) = (lo as u64, hi as u64);
    let slice = &a.scan.log_terms[lo as usize..=hi as usize];
    Ok(Window { lo, hi, log_sum: LogMagnitude::from_log(crate::logmag::log_sum_exp(slice)) })
}

fn check_c(c: f64) -> Result<()> {
    if c > 1.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!("window constant c must be finite and > 1, got {c}")))
    }
}

/// Integer window `|n - g'| < c sqrt(g'')` and the log of its term sum.
pub fn window(series: &PowerSeries, x: f64, c: f64) -> Result<Window> {
    check_c(c)?;
    let a = analyze(series, x)?;
    if a.stats.zero_variance() {
        return Err(Error::ZeroVariance);
    }
    window_of(&a, c)
}

/// `log sum_{|n - g'| < c sqrt(g'')} a_n e^{nx}`.
pub fn window_sum(series: &PowerSeries, x: f64, c: f64) -> Result<LogMagnitude> {
    Ok(window(series, x, c)?.log_sum)
}

fn lemma_point(series: &PowerSeries, x: f64, c: f64) -> Result<LemmaPoint> {
    let a = analyze(series, x)?;
    if a.stats.zero_variance() {
        return Err(Error::ZeroVariance);
    }
    let w = window_of(&a, c)?;
    let s = a.stats;
    let keep = 1.0 - c.powi(-2);
    let sd = s.g2.sqrt();
    let count_bound = (2.0 * c * sd).floor() as u64 + 1;
    Ok(LemmaPoint {
        stats: s,
        c,
        window: w,
        count_bound,
        chebyshev_margin: w.log_sum.log() - (keep.ln() + s.g),
        count_margin: (count_bound as f64).ln() + s.log_mu - w.log_sum.log(),
        constant: count_bound as f64 / (keep * sd),
        asymptotic_constant: 2.0 * c / keep,
    })
}

/// Checks both links of the chain at every `x`. Points are evaluated in
/// parallel and returned in input order.
pub fn verify_pointwise_lemma(series: &PowerSeries, xs: &[f64], c: f64) -> Result<Vec<LemmaPoint>> {
    check_c(c)?;
    if series.is_monomial() {
        return Err(Error::ZeroVariance);
    }
    xs.par_iter().map(|&x| lemma_point(series, x, c)).collect()
}

/// The `c` minimizing the asymptotic constant `2c / (1 - c^{-2}) = 2c^3 / (c^2 - 1)`.
pub fn optimal_window_constant() -> (f64, f64) {
    let c = 3f64.sqrt();
    (c, 2.0 * c / (1.0 - 1.0 / 3.0))
}
