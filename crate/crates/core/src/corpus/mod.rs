//! Named function families and their coefficient generators.

pub mod formula;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::series::{CoeffSource, PolynomialSource, PowerSeries};

pub use formula::Expr;

/// Beyond this many terms the generic (quadratic-cost) exponential recurrence
/// refuses to extend.
pub const GENERIC_EXP_TERMS: usize = 1 << 16;

/// Values above this trigger a rescale of the running coefficient table.
const RESCALE_ABOVE: f64 = 1e300;

/// One of the corpus families with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    /// `e^z`
    Exp,
    /// `1 / (1 - z)`
    Geometric,
    /// `c z^k`
    Monomial { coeff: f64, degree: u64 },
    /// `exp((1 - z)^{-rho})`
    Kovari { rho: f64 },
    /// `sum_{n >= 1} exp(n^eps) z^n`
    Suleimanov { eps: f64 },
    /// `log|a_n|` given as a formula in `n`.
    LogCoeffFormula { formula: String, radius: f64 },
}

impl FamilySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            FamilySpec::Exp | FamilySpec::Geometric => Ok(()),
            FamilySpec::Monomial { coeff, .. } => {
                if coeff.is_finite() && *coeff != 0.0 {
                    Ok(())
                } else {
                    Err(Error::validation(format!("monomial coefficient must be finite and nonzero, got {coeff}")))
                }
            }
            FamilySpec::Kovari { rho } => {
                if rho.is_finite() && *rho > 0.0 {
                    Ok(())
                } else {
                    Err(Error::validation(format!("kovari requires rho > 0, got {rho}")))
                }
            }
            FamilySpec::Suleimanov { eps } => {
                if *eps > 0.0 && *eps < 1.0 {
                    Ok(())
                } else {
                    Err(Error::validation(format!("suleimanov requires 0 < eps < 1, got {eps}")))
                }
            }
            FamilySpec::LogCoeffFormula { formula, radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::validation(format!("formula family requires radius > 0, got {radius}")));
                }
                Expr::parse(formula).map(|_| ())
            }
        }
    }

    /// Builds a spec from an identifier and textual parameters, as used by the
    /// CLI and the config files.
    pub fn from_params(id: &str, params: &BTreeMap<String, String>) -> Result<Self> {
        let num = |key: &str| -> Result<f64> {
            let raw =
                params.get(key).ok_or_else(|| Error::validation(format!("family {id}: missing parameter {key:?}")))?;
            raw.trim()
                .parse::<f64>()
                .map_err(|_| Error::validation(format!("family {id}: parameter {key} = {raw:?} is not a number")))
        };
        let spec = match id.trim().to_ascii_lowercase().as_str() {
            "exp" => FamilySpec::Exp,
            "geometric" => FamilySpec::Geometric,
            "monomial" => {
                let degree = num("degree")?;
                if degree < 0.0 || degree.fract() != 0.0 {
                    return Err(Error::validation(format!(
                        "monomial degree must be a nonnegative integer, got {degree}"
                    )));
                }
                FamilySpec::Monomial { coeff: num("coeff")?, degree: degree as u64 }
            }
            "kovari" => FamilySpec::Kovari { rho: num("rho")? },
            "suleimanov" => FamilySpec::Suleimanov { eps: num("eps")? },
            "formula" | "log_coeff_formula" => FamilySpec::LogCoeffFormula {
                formula: params
                    .get("formula")
                    .cloned()
                    .ok_or_else(|| Error::validation("formula family: missing parameter \"formula\""))?,
                radius: match params.get("radius") {
                    Some(_) => num("radius")?,
                    None => f64::INFINITY,
                },
            },
            other => return Err(Error::validation(format!("unknown family {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Families on which the lower bound is expected to be sharp.
    pub fn is_extremal_family(&self) -> bool {
        matches!(self, FamilySpec::Kovari { .. } | FamilySpec::Suleimanov { .. })
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Exp => write!(f, "exp"),
            FamilySpec::Geometric => write!(f, "geometric"),
            FamilySpec::Monomial { coeff, degree } => write!(f, "monomial(coeff={coeff},degree={degree})"),
            FamilySpec::Kovari { rho } => write!(f, "kovari(rho={rho})"),
            FamilySpec::Suleimanov { eps } => write!(f, "suleimanov(eps={eps})"),
            FamilySpec::LogCoeffFormula { formula, radius } => write!(f, "formula({formula};R={radius})"),
        }
    }
}

/// Builds the power series for a family.
pub fn make_family(spec: &FamilySpec) -> Result<PowerSeries> {
    spec.validate()?;
    let label = spec.to_string();
    match spec {
        FamilySpec::Exp => PowerSeries::from_fn(label, f64::INFINITY, |n| -libm::lgamma(n as f64 + 1.0)),
        FamilySpec::Geometric => PowerSeries::from_fn(label, 1.0, |_| 0.0),
        FamilySpec::Monomial { coeff, degree } => {
            let d = usize::try_from(*degree).map_err(|_| Error::validation("monomial degree too large"))?;
            let mut log_coeffs = vec![f64::NEG_INFINITY; d + 1];
            log_coeffs[d] = coeff.abs().ln();
            PowerSeries::new(label, f64::INFINITY, Arc::new(PolynomialSource::from_log_coeffs(log_coeffs)))
        }
        FamilySpec::Kovari { rho } => PowerSeries::new(label, 1.0, Arc::new(KovariSource::new(*rho))),
        FamilySpec::Suleimanov { eps } => {
            let eps = *eps;
            PowerSeries::from_fn(label, 1.0, move |n| if n == 0 { f64::NEG_INFINITY } else { (n as f64).powf(eps) })
        }
        FamilySpec::LogCoeffFormula { formula, radius } => {
            let expr = Expr::parse(formula)?;
            PowerSeries::from_fn(label, *radius, move |n| expr.eval(n as f64))
        }
    }
}

/// Taylor coefficients of `(1 - z)^{-rho}`: `b_n = C(n + rho - 1, n)`.
pub fn binomial_series(rho: f64, count: usize) -> Result<Vec<f64>> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::validation(format!("binomial series requires rho > 0, got {rho}")));
    }
    let mut b = Vec::with_capacity(count);
    let mut cur = 1.0;
    for n in 0..count {
        if n > 0 {
            cur *= (n as f64 + rho - 1.0) / n as f64;
        }
        b.push(cur);
    }
    Ok(b)
}

/// Taylor coefficients of `exp(sum b_k z^k)` from
/// `a_0 = e^{b_0}`, `n a_n = sum_{k=1..n} k b_k a_{n-k}`.
///
/// Requires `b_k >= 0` so the recurrence stays subtraction-free.
pub fn exp_of_series(b: &[f64]) -> Result<Vec<f64>> {
    check_exp_input(b)?;
    let mut a = Vec::with_capacity(b.len());
    for n in 0..b.len() {
        if n == 0 {
            a.push(b[0].exp());
            continue;
        }
        let s: f64 = (1..=n).map(|k| k as f64 * b[k] * a[n - k]).sum();
        a.push(s / n as f64);
    }
    Ok(a)
}

/// Same recurrence as [`exp_of_series`], returning `log a_n` and rescaling the
/// running table so that large indices do not overflow.
pub fn log_exp_of_series(b: &[f64]) -> Result<Vec<f64>> {
    check_exp_input(b)?;
    let mut gen = ExpRecurrence::new(b[0]);
    gen.b = b.to_vec();
    gen.extend_to(b.len());
    Ok(gen.log_a)
}

fn check_exp_input(b: &[f64]) -> Result<()> {
    if let Some((k, v)) = b.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::validation(format!("b_{k} = {v} is not finite")));
    }
    if let Some((k, v)) = b.iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(Error::Unsupported(format!(
            "b_{k} = {v} is negative; only nonnegative inner series are supported"
        )));
    }
    Ok(())
}

/// Scaled state of `n a_n = sum k b_k a_{n-k}`: stored values are
/// `a_n e^{-scale}`.
#[derive(Debug, Clone)]
struct ExpRecurrence {
    b: Vec<f64>,
    scaled: Vec<f64>,
    scale: f64,
    log_a: Vec<f64>,
}

impl ExpRecurrence {
    fn new(b0: f64) -> Self {
        ExpRecurrence { b: Vec::new(), scaled: vec![1.0], scale: b0, log_a: vec![b0] }
    }

    /// Requires `self.b.len() >= target`.
    fn extend_to(&mut self, target: usize) {
        while self.log_a.len() < target {
            let n = self.log_a.len();
            let mut acc = crate::logmag::Neumaier::default();
            for k in 1..=n {
                acc.add(k as f64 * self.b[k] * self.scaled[n - k]);
            }
            let mut v = acc.total() / n as f64;
            if v > RESCALE_ABOVE {
                let shift = v.ln();
                let factor = (-shift).exp();
                for s in &mut self.scaled {
                    *s *= factor;
                }
                v *= factor;
                self.scale += shift;
            }
            self.scaled.push(v);
            self.log_a.push(v.ln() + self.scale);
        }
    }
}

/// `(n+1) a_{n+1} = (2n+1) a_n - (n-1) a_{n-1}` for `exp(1/(1-z))`, carried on
/// scaled values.
#[derive(Debug, Clone)]
struct ThreeTermRecurrence {
    prev: f64,
    cur: f64,
    scale: f64,
    log_a: Vec<f64>,
}

impl ThreeTermRecurrence {
    fn new() -> Self {
        // a_0 = a_1 = e
        ThreeTermRecurrence { prev: 1.0, cur: 1.0, scale: 1.0, log_a: vec![1.0, 1.0] }
    }

    fn extend_to(&mut self, target: usize) {
        while self.log_a.len() < target {
            let n = (self.log_a.len() - 1) as f64;
            let mut next = ((2.0 * n + 1.0) * self.cur - (n - 1.0) * self.prev) / (n + 1.0);
            if next > RESCALE_ABOVE {
                let shift = next.ln();
                let factor = (-shift).exp();
                self.prev = self.cur * factor;
                next *= factor;
                self.scale += shift;
            } else {
                self.prev = self.cur;
            }
            self.cur = next;
            self.log_a.push(next.ln() + self.scale);
        }
    }
}

#[derive(Debug)]
enum KovariTable {
    ThreeTerm(ThreeTermRecurrence),
    Generic { rho: f64, rec: ExpRecurrence },
}

impl KovariTable {
    fn len(&self) -> usize {
        match self {
            KovariTable::ThreeTerm(t) => t.log_a.len(),
            KovariTable::Generic { rec, .. } => rec.log_a.len(),
        }
    }

    fn log_a(&self) -> &[f64] {
        match self {
            KovariTable::ThreeTerm(t) => &t.log_a,
            KovariTable::Generic { rec, .. } => &rec.log_a,
        }
    }

    fn extend_to(&mut self, target: usize) -> Result<()> {
        match self {
            KovariTable::ThreeTerm(t) => t.extend_to(target),
            KovariTable::Generic { rho, rec } => {
                if target > GENERIC_EXP_TERMS {
                    return Err(Error::TruncationFailure { horizon: GENERIC_EXP_TERMS as u64 });
                }
                if rec.b.len() < target {
                    rec.b = binomial_series(*rho, target)?;
                }
                rec.extend_to(target);
            }
        }
        Ok(())
    }
}

/// Lazily extended coefficient table of `exp((1 - z)^{-rho})`.
///
/// `rho = 1` runs the linear-cost three-term recurrence; other exponents use the
/// exponential recurrence on the binomial series.
#[derive(Debug)]
pub struct KovariSource {
    table: RwLock<KovariTable>,
}

impl KovariSource {
    pub fn new(rho: f64) -> Self {
        let table = if rho == 1.0 {
            KovariTable::ThreeTerm(ThreeTermRecurrence::new())
        } else {
            KovariTable::Generic { rho, rec: ExpRecurrence::new(1.0) }
        };
        KovariSource { table: RwLock::new(table) }
    }

    fn ensure(&self, len: usize) -> Result<()> {
        if self.table.read().expect("kovari table poisoned").len() >= len {
            return Ok(());
        }
        let mut t = self.table.write().expect("kovari table poisoned");
        if t.len() < len {
            let target = len.next_power_of_two().max(64);
            let target = match &*t {
                KovariTable::Generic { .. } => target.min(GENERIC_EXP_TERMS).max(len),
                KovariTable::ThreeTerm(_) => target,
            };
            t.extend_to(target)?;
        }
        Ok(())
    }
}

impl CoeffSource for KovariSource {
    fn log_coeff(&self, n: u64) -> Result<f64> {
        let i = usize::try_from(n).map_err(|_| Error::TruncationFailure { horizon: n })?;
        self.ensure(i + 1)?;
        Ok(self.table.read().expect("kovari table poisoned").log_a()[i])
    }

    fn fill(&self, start: u64, out: &mut [f64]) -> Result<()> {
        let s = usize::try_from(start).map_err(|_| Error::TruncationFailure { horizon: start })?;
        self.ensure(s + out.len())?;
        let t = self.table.read().expect("kovari table poisoned");
        out.copy_from_slice(&t.log_a()[s..s + out.len()]);
        Ok(())
    }
}
