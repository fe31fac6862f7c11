//! Catalog of weight functions and Wiman-Valiron bound expressions.
//!
//! All expressions are assembled additively in the log domain so that
//! `log mu_f(r)` in the millions is no problem. Iterated logarithms never clamp:
//! a non-positive argument is a [`Error::Domain`] naming the subexpression.
//!
//! | id       | right-hand side (`q = mu/(1-r)`, `L_k = log_k`)                          |
//! |----------|---------------------------------------------------------------------------|
//! | `WV`     | `C mu (log mu)^{1/2+d}`                                                   |
//! | `WVB`    | `C mu (log mu)^{1/2} (log log mu)^{1+d}`                                  |
//! | `WVC`    | `C mu (L_1 mu)^{1/2} L_2 mu ... L_{n-1} mu (L_n mu)^{1+d}`                |
//! | `KOV`    | `C q (log q)^{1/2+d}`                                                     |
//! | `KOV_N`  | `C q (L_1 q)^{1/2} L_2 q ... L_{n-1} q (L_n q)^{1+d}`                     |
//! | `SUL`    | `C mu (1-r)^{-1-d} (log q)^{1/2+d}`                                       |
//! | `SUL_N`  | `C q (log 1/(1-r))^{1+d} (L_1 q)^{1/2} ... (L_n q)^{1+d}`                 |
//! | `SK`     | `C q (log 1/(1-r))^{1/2+d} (log q)^{1/2} (log log q)^{1+d}`               |
//! | `SK_N`   | `C q (log 1/(1-r))^{1/2+d} (L_1 q)^{1/2} ... (L_n q)^{1+d}`               |
//! | `MAIN`   | `C mu sqrt(h psi2(h psi1(log M)))`                                        |
//! | `SK4`    | `C h mu (log h)^{1/2+d} (L_1 hmu)^{1/2} ... (L_n hmu)^{1+d}`              |
//! | `LOGIMP` | `C q (L_1 q)^{1/2} L_2 q ... (L_n q)^{1+d}`, `d <= 1/2`                   |
//! | `LOWER`  | `C q (log q)^{1/2}` (lower bound)                                         |

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::logmag::LogMagnitude;
use crate::quadrature;

/// `log` applied `k >= 1` times; every intermediate and the result must be positive.
pub fn iterated_log(k: u32, y: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::validation("iterated logarithm order must be at least 1"));
    }
    let mut v = y;
    for i in 1..=k {
        if !(v > 0.0) {
            return Err(Error::domain(format!("log_{i} argument {v} is not positive (y = {y}, k = {k})")));
        }
        v = v.ln();
    }
    if !(v > 0.0) {
        return Err(Error::domain(format!("log_{k}({y}) = {v} is not positive")));
    }
    Ok(v)
}

/// `log_k(e^{log_y})`, i.e. `log_{k-1}(log_y)` with `log_1(e^L) = L`.
pub fn iterated_log_of_exp(k: u32, log_y: f64) -> Result<f64> {
    match k {
        0 => Err(Error::validation("iterated logarithm order must be at least 1")),
        1 if log_y > 0.0 => Ok(log_y),
        1 => Err(Error::domain(format!("log_1 = {log_y} is not positive"))),
        _ => iterated_log(k - 1, log_y),
    }
}

/// `e^{e^{...}}`: the infimum of `y` with `log_k y > 0`.
pub fn iterated_log_threshold(k: u32) -> f64 {
    let mut t = 1.0f64;
    for _ in 1..k {
        t = t.exp();
    }
    t
}

/// User-supplied positive increasing function.
#[derive(Clone)]
pub struct CustomFn {
    pub name: String,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomFn({})", self.name)
    }
}

/// Positive increasing `psi` with `int^inf dy / psi(y) < inf`.
#[derive(Debug, Clone)]
pub enum PsiSpec {
    /// `y^{1+d}`
    Pow { delta: f64 },
    /// `y (log y)^{1+d}`
    LogPow { delta: f64 },
    /// `y log y log_2 y ... log_{n-2} y (log_{n-1} y)^{1+d}`, `n >= 2`
    Iter { n: u32, delta: f64 },
    /// `e^{y/2}`
    ExpHalf,
    /// `y^2`
    Square,
    /// Arbitrary `psi`, positive and increasing for `y > threshold`.
    Custom { func: CustomFn, threshold: f64 },
}

impl PsiSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PsiSpec::Pow { delta } | PsiSpec::LogPow { delta } => check_delta(*delta),
            PsiSpec::Iter { n, delta } => {
                if *n < 2 {
                    return Err(Error::validation(format!("iter psi requires n >= 2, got {n}")));
                }
                check_delta(*delta)
            }
            PsiSpec::ExpHalf | PsiSpec::Square => Ok(()),
            PsiSpec::Custom { threshold, .. } => {
                if threshold.is_finite() {
                    Ok(())
                } else {
                    Err(Error::validation("custom psi threshold must be finite"))
                }
            }
        }
    }

    /// `psi` is defined and positive exactly for `y > threshold()`.
    pub fn threshold(&self) -> f64 {
        match self {
            PsiSpec::Pow { .. } | PsiSpec::ExpHalf | PsiSpec::Square => 0.0,
            PsiSpec::LogPow { .. } => 1.0,
            PsiSpec::Iter { n, .. } => iterated_log_threshold(n - 1),
            PsiSpec::Custom { threshold, .. } => *threshold,
        }
    }

    fn check_arg(&self, y: f64) -> Result<()> {
        if y > self.threshold() && !y.is_nan() {
            Ok(())
        } else {
            Err(Error::domain(format!("{self}: argument {y} is not above the threshold {}", self.threshold())))
        }
    }

    pub fn eval(&self, y: f64) -> Result<f64> {
        self.validate()?;
        self.check_arg(y)?;
        Ok(match self {
            PsiSpec::Pow { delta } => y.powf(1.0 + delta),
            PsiSpec::LogPow { delta } => y * y.ln().powf(1.0 + delta),
            PsiSpec::Iter { n, delta } => {
                let mut v = y;
                for k in 1..n - 1 {
                    v *= iterated_log(k, y)?;
                }
                v * iterated_log(n - 1, y)?.powf(1.0 + delta)
            }
            PsiSpec::ExpHalf => (0.5 * y).exp(),
            PsiSpec::Square => y * y,
            PsiSpec::Custom { func, .. } => (func.f)(y),
        })
    }

    /// `log psi(e^{log_y})`.
    pub fn log_eval_log(&self, log_y: f64) -> Result<f64> {
        if !(log_y > self.threshold().ln()) || log_y.is_nan() {
            return Err(Error::domain(format!(
                "{self}: argument exp({log_y}) is not above the threshold {}",
                self.threshold()
            )));
        }
        Ok(match self {
            PsiSpec::Pow { delta } => (1.0 + delta) * log_y,
            PsiSpec::LogPow { delta } => log_y + (1.0 + delta) * log_y.ln(),
            PsiSpec::Iter { n, delta } => {
                let mut v = log_y;
                for k in 1..n - 1 {
                    v += iterated_log_of_exp(k, log_y)?.ln();
                }
                v + (1.0 + delta) * iterated_log_of_exp(n - 1, log_y)?.ln()
            }
            PsiSpec::ExpHalf => 0.5 * log_y.exp(),
            PsiSpec::Square => 2.0 * log_y,
            PsiSpec::Custom { func, .. } => (func.f)(log_y.exp()).ln(),
        })
    }

    /// `log(y / psi(y))` at `y = exp(exp(lly))`, usable far past the f64 range of `y`.
    fn log_ratio_loglog(&self, lly: f64) -> Result<f64> {
        // ln log_1 y = lly; log_k y = log_{k-1}(e^{lly}) for k >= 2
        let ln_log = |k: u32| -> Result<f64> {
            if k == 1 {
                Ok(lly)
            } else {
                Ok(iterated_log_of_exp(k - 1, lly)?.ln())
            }
        };
        match self {
            PsiSpec::Pow { delta } => Ok(-delta * lly.exp()),
            PsiSpec::Square => Ok(-lly.exp()),
            PsiSpec::ExpHalf => {
                let ly = lly.exp();
                Ok(if ly.is_finite() { ly - 0.5 * ly.exp() } else { f64::NEG_INFINITY })
            }
            PsiSpec::LogPow { delta } => Ok(-(1.0 + delta) * lly),
            PsiSpec::Iter { n, delta } => {
                let mut acc = 0.0;
                for k in 1..n - 1 {
                    acc -= ln_log(k)?;
                }
                Ok(acc - (1.0 + delta) * ln_log(n - 1)?)
            }
            PsiSpec::Custom { func, .. } => {
                let y = lly.exp().exp();
                Ok((y / (func.f)(y)).ln())
            }
        }
    }

    /// `log psi(y)` for linear `y`.
    pub fn log_eval(&self, y: f64) -> Result<f64> {
        self.check_arg(y)?;
        self.log_eval_log(y.ln())
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!("delta must be positive, got {delta}")))
    }
}

impl fmt::Display for PsiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiSpec::Pow { delta } => write!(f, "pow({delta})"),
            PsiSpec::LogPow { delta } => write!(f, "logpow({delta})"),
            PsiSpec::Iter { n, delta } => write!(f, "iter({n};{delta})"),
            PsiSpec::ExpHalf => write!(f, "exphalf"),
            PsiSpec::Square => write!(f, "square"),
            PsiSpec::Custom { func, .. } => write!(f, "custom({})", func.name),
        }
    }
}

impl FromStr for PsiSpec {
    type Err = Error;

    /// `pow(d)`, `logpow(d)`, `iter(n;d)`, `exphalf`, `square`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, args) = split_call(&s)?;
        let nums: Vec<f64> = args
            .iter()
            .map(|a| a.parse::<f64>().map_err(|_| Error::validation(format!("psi {s:?}: bad argument {a:?}"))))
            .collect::<Result<_>>()?;
        let want = |k: usize| -> Result<()> {
            if nums.len() == k {
                Ok(())
            } else {
                Err(Error::validation(format!("psi {name} takes {k} argument(s), got {}", nums.len())))
            }
        };
        let spec = match name {
            "pow" => {
                want(1)?;
                PsiSpec::Pow { delta: nums[0] }
            }
            "logpow" => {
                want(1)?;
                PsiSpec::LogPow { delta: nums[0] }
            }
            "iter" => {
                want(2)?;
                if nums[0].fract() != 0.0 || nums[0] < 2.0 {
                    return Err(Error::validation(format!("iter psi requires integer n >= 2, got {}", nums[0])));
                }
                PsiSpec::Iter { n: nums[0] as u32, delta: nums[1] }
            }
            "exphalf" => {
                want(0)?;
                PsiSpec::ExpHalf
            }
            "square" => {
                want(0)?;
                PsiSpec::Square
            }
            other => return Err(Error::validation(format!("unknown psi {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// `name(a;b)` or `name(a,b)` or bare `name`.
fn split_call(s: &str) -> Result<(&str, Vec<&str>)> {
    match s.find('(') {
        None => Ok((s, Vec::new())),
        Some(i) => {
            let inner =
                s[i + 1..].strip_suffix(')').ok_or_else(|| Error::validation(format!("missing ')' in {s:?}")))?;
            let args = inner.split([';', ',']).map(str::trim).filter(|a| !a.is_empty()).collect();
            Ok((s[..i].trim(), args))
        }
    }
}

/// `int_{a0}^inf dy / psi(y)`: closed form for the catalog, quadrature for custom.
pub fn psi_tail(spec: &PsiSpec, a0: f64) -> Result<f64> {
    spec.validate()?;
    spec.check_arg(a0)?;
    Ok(match spec {
        PsiSpec::Pow { delta } => a0.powf(-delta) / delta,
        PsiSpec::LogPow { delta } => a0.ln().powf(-delta) / delta,
        PsiSpec::Iter { n, delta } => iterated_log(n - 1, a0)?.powf(-delta) / delta,
        PsiSpec::ExpHalf => 2.0 * (-0.5 * a0).exp(),
        PsiSpec::Square => 1.0 / a0,
        PsiSpec::Custom { .. } => psi_tail_quadrature(spec, a0, 1e-9)?,
    })
}

/// Largest `log y` a custom closure is evaluated at.
const CUSTOM_LOG_Y_MAX: f64 = 690.0;

/// The tail integral by adaptive quadrature. Beyond `y = e` the substitution
/// `y = exp(L e^s)`, `s = u / (1 - u)` turns even iterated-log tails into
/// bounded integrands on `[0, 1)`; below `e` the integral is taken directly.
/// Custom closures are integrated up to `y = e^690` and the tail is declared
/// divergent if the integrand has not died out there.
pub fn psi_tail_quadrature(spec: &PsiSpec, a0: f64, rel_tol: f64) -> Result<f64> {
    spec.check_arg(a0)?;
    let divergent = |e: Error| match e {
        Error::Quadrature(msg) => Error::Divergent(format!("int_{a0}^inf dy/{spec}: {msg}")),
        other => other,
    };
    let split = a0.max(std::f64::consts::E);
    let head = if a0 < split {
        let f = |y: f64| spec.log_eval(y).map_or(f64::NAN, |l| (-l).exp());
        quadrature::integrate(f, a0, split, rel_tol, 0.0).map_err(divergent)?.value
    } else {
        0.0
    };
    let la = split.ln();
    let log_integrand = |u: f64| -> f64 {
        let lly = la.ln() + u / (1.0 - u);
        match spec.log_ratio_loglog(lly) {
            Ok(lr) => lr + lly - 2.0 * (1.0 - u).ln(),
            Err(_) => f64::NAN,
        }
    };
    let integrand = |u: f64| -> f64 {
        if u >= 1.0 {
            return 0.0;
        }
        let l = log_integrand(u);
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            l.exp()
        }
    };
    let u_max = match spec {
        PsiSpec::Custom { .. } => {
            if la >= CUSTOM_LOG_Y_MAX {
                return Err(Error::domain(format!("custom psi tail from {a0} exceeds the double range")));
            }
            let s = (CUSTOM_LOG_Y_MAX / la).ln();
            s / (1.0 + s)
        }
        _ => 1.0,
    };
    let tail = quadrature::integrate(integrand, 0.0, u_max, rel_tol, 0.0).map_err(divergent)?.value;
    let total = head + tail;
    if u_max < 1.0 {
        // what is left beyond the cutoff must be negligible
        let edge = integrand(u_max) * (1.0 - u_max);
        if !(edge <= rel_tol * total) {
            return Err(Error::Divergent(format!(
                "int_{a0}^inf dy/{spec}: integrand has not decayed by y = e^{CUSTOM_LOG_Y_MAX}"
            )));
        }
    }
    Ok(total)
}

/// Positive increasing weight `h` on `[rho_start, R)` with `int h(r)/r dr = inf`.
#[derive(Debug, Clone)]
pub enum HSpec {
    /// `h = 1` on `[1, inf)`
    Unit,
    /// `h = 1/(1-r)` on `[0, 1)`
    Disk,
    /// `h = 1/((1-r) log(1/(1-r)))` on `[1 - 1/e, 1)`
    DiskLog,
    Custom {
        func: CustomFn,
        rho_start: f64,
        radius: f64,
    },
}

impl HSpec {
    pub fn id(&self) -> String {
        match self {
            HSpec::Unit => "unit".into(),
            HSpec::Disk => "disk".into(),
            HSpec::DiskLog => "disklog".into(),
            HSpec::Custom { func, .. } => format!("custom:{}", func.name),
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            HSpec::Unit => f64::INFINITY,
            HSpec::Disk | HSpec::DiskLog => 1.0,
            HSpec::Custom { radius, .. } => *radius,
        }
    }

    pub fn rho_start(&self) -> f64 {
        match self {
            HSpec::Unit => 1.0,
            HSpec::Disk => 0.0,
            HSpec::DiskLog => 1.0 - (-1.0f64).exp(),
            HSpec::Custom { rho_start, .. } => *rho_start,
        }
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= self.rho_start() && r < self.radius()) {
            return Err(Error::domain(format!(
                "h = {} is defined on [{}, {}), got r = {r}",
                self.id(),
                self.rho_start(),
                self.radius()
            )));
        }
        Ok(match self {
            HSpec::Unit => 1.0,
            HSpec::Disk => 1.0 / (1.0 - r),
            HSpec::DiskLog => {
                let gap = 1.0 - r;
                1.0 / (gap * (-gap.ln()))
            }
            HSpec::Custom { func, .. } => (func.f)(r),
        })
    }

    /// Log coordinate: `log r` when `R = inf`, `-log(1 - r/R)` otherwise.
    pub fn to_log_coord(&self, r: f64) -> f64 {
        to_log_coord(self.radius(), r)
    }

    /// `h(r(u)) dr/du` in the log coordinate, divided by `r(u)` when `radial`.
    pub fn log_coord_weight(&self, u: f64, radial: bool) -> f64 {
        let big_r = self.radius();
        // 1/r on a disk of radius R
        let inv_r = || 1.0 / from_log_coord(big_r, u);
        match self {
            HSpec::Unit if radial => 1.0,
            HSpec::Unit => u.exp(),
            HSpec::Disk if radial => inv_r(),
            HSpec::Disk => 1.0,
            HSpec::DiskLog if radial => inv_r() / u,
            HSpec::DiskLog => 1.0 / u,
            HSpec::Custom { func, .. } => {
                if big_r.is_infinite() {
                    let r = u.exp();
                    if radial {
                        (func.f)(r)
                    } else {
                        (func.f)(r) * r
                    }
                } else {
                    let gap = big_r * (-u).exp();
                    let w = (func.f)(big_r - gap) * gap;
                    if radial {
                        w * inv_r()
                    } else {
                        w
                    }
                }
            }
        }
    }
}

pub(crate) fn to_log_coord(big_r: f64, r: f64) -> f64 {
    if big_r.is_infinite() {
        r.ln()
    } else {
        -(-r / big_r).ln_1p()
    }
}

pub(crate) fn from_log_coord(big_r: f64, u: f64) -> f64 {
    if big_r.is_infinite() {
        u.exp()
    } else {
        -big_r * (-u).exp_m1()
    }
}

impl fmt::Display for HSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for HSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unit" => Ok(HSpec::Unit),
            "disk" => Ok(HSpec::Disk),
            "disklog" => Ok(HSpec::DiskLog),
            other => Err(Error::validation(format!("unknown h {other:?} (expected unit, disk or disklog)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundId {
    Wv,
    Wvb,
    Wvc,
    Kov,
    KovN,
    Sul,
    SulN,
    Sk,
    SkN,
    Main,
    Sk4,
    LogImp,
    Lower,
}

impl BoundId {
    pub const ALL: [BoundId; 13] = [
        BoundId::Wv,
        BoundId::Wvb,
        BoundId::Wvc,
        BoundId::Kov,
        BoundId::KovN,
        BoundId::Sul,
        BoundId::SulN,
        BoundId::Sk,
        BoundId::SkN,
        BoundId::Main,
        BoundId::Sk4,
        BoundId::LogImp,
        BoundId::Lower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundId::Wv => "WV",
            BoundId::Wvb => "WVB",
            BoundId::Wvc => "WVC",
            BoundId::Kov => "KOV",
            BoundId::KovN => "KOV_N",
            BoundId::Sul => "SUL",
            BoundId::SulN => "SUL_N",
            BoundId::Sk => "SK",
            BoundId::SkN => "SK_N",
            BoundId::Main => "MAIN",
            BoundId::Sk4 => "SK4",
            BoundId::LogImp => "LOGIMP",
            BoundId::Lower => "LOWER",
        }
    }

    fn uses_n(self) -> bool {
        matches!(self, BoundId::Wvc | BoundId::KovN | BoundId::SulN | BoundId::SkN | BoundId::Sk4 | BoundId::LogImp)
    }

    fn uses_delta(self) -> bool {
        !matches!(self, BoundId::Main | BoundId::Lower)
    }

    /// Bounds written with `1/(1-r)` factors, only meaningful on the unit disk.
    pub fn is_disk_only(self) -> bool {
        matches!(
            self,
            BoundId::Kov
                | BoundId::KovN
                | BoundId::Sul
                | BoundId::SulN
                | BoundId::Sk
                | BoundId::SkN
                | BoundId::LogImp
                | BoundId::Lower
        )
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        BoundId::ALL
            .into_iter()
            .find(|id| id.name() == up)
            .ok_or_else(|| Error::validation(format!("unknown bound id {s:?}")))
    }
}

/// A catalog entry with its parameters.
#[derive(Debug, Clone)]
pub struct BoundSpec {
    pub id: BoundId,
    pub delta: f64,
    pub n: u32,
    pub c: f64,
    pub h: Option<HSpec>,
    pub psi1: Option<PsiSpec>,
    pub psi2: Option<PsiSpec>,
}

impl BoundSpec {
    pub fn new(id: BoundId) -> Self {
        BoundSpec { id, delta: 0.5, n: 2, c: 1.0, h: None, psi1: None, psi2: None }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_n(mut self, n: u32) -> Self {
        self.n = n;
        self
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_h(mut self, h: HSpec) -> Self {
        self.h = Some(h);
        self
    }

    pub fn with_psi(mut self, psi1: PsiSpec, psi2: PsiSpec) -> Self {
        self.psi1 = Some(psi1);
        self.psi2 = Some(psi2);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::validation(format!("{}: C must be positive, got {}", self.id, self.c)));
        }
        if self.id.uses_delta() {
            check_delta(self.delta).map_err(|e| Error::validation(format!("{}: {e}", self.id)))?;
        }
        if self.id.uses_n() && self.n < 2 {
            return Err(Error::validation(format!("{}: n must be >= 2, got {}", self.id, self.n)));
        }
        if self.id == BoundId::LogImp && self.delta > 0.5 {
            return Err(Error::validation(format!("LOGIMP requires delta <= 1/2, got {}", self.delta)));
        }
        if matches!(self.id, BoundId::Main | BoundId::Sk4) && self.h.is_none() {
            return Err(Error::Contract(format!("{} requires an h function", self.id)));
        }
        if self.id == BoundId::Main {
            match (&self.psi1, &self.psi2) {
                (Some(p1), Some(p2)) => {
                    p1.validate()?;
                    p2.validate()?;
                }
                _ => return Err(Error::Contract("MAIN requires psi1 and psi2".into())),
            }
        }
        Ok(())
    }

    pub fn requires_log_m(&self) -> bool {
        self.id == BoundId::Main
    }

    /// Radius of the disk the bound lives on.
    pub fn radius(&self) -> f64 {
        if self.id.is_disk_only() {
            1.0
        } else if let Some(h) = &self.h {
            h.radius()
        } else {
            f64::INFINITY
        }
    }
}

impl fmt::Display for BoundSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:C={}", self.id, self.c)?;
        if self.id.uses_delta() {
            write!(f, ",delta={}", self.delta)?;
        }
        if self.id.uses_n() {
            write!(f, ",n={}", self.n)?;
        }
        if let Some(h) = &self.h {
            write!(f, ",h={h}")?;
        }
        if let Some(p) = &self.psi1 {
            write!(f, ",psi1={p}")?;
        }
        if let Some(p) = &self.psi2 {
            write!(f, ",psi2={p}")?;
        }
        Ok(())
    }
}

impl FromStr for BoundSpec {
    type Err = Error;

    /// `ID` or `ID:key=value,...` with keys `C`, `delta`, `n`, `h`, `psi1`, `psi2`.
    fn from_str(s: &str) -> Result<Self> {
        let (id, rest) = match s.split_once(':') {
            Some((id, rest)) => (id, rest),
            None => (s, ""),
        };
        let mut spec = BoundSpec::new(id.parse()?);
        for (key, value) in split_params(rest)? {
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| Error::validation(format!("bound {id}: {key} = {value:?} is not a number")))
            };
            match key.to_ascii_lowercase().as_str() {
                "c" => spec.c = num()?,
                "delta" => spec.delta = num()?,
                "n" => {
                    let n = num()?;
                    if n.fract() != 0.0 || n < 0.0 {
                        return Err(Error::validation(format!("bound {id}: n must be a nonnegative integer")));
                    }
                    spec.n = n as u32;
                }
                "h" => spec.h = Some(value.parse()?),
                "psi1" => spec.psi1 = Some(value.parse()?),
                "psi2" => spec.psi2 = Some(value.parse()?),
                other => return Err(Error::validation(format!("bound {id}: unknown parameter {other:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Splits `k=v,k=v` at top-level commas (commas inside parentheses stay).
pub(crate) fn split_params(s: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let bytes: Vec<char> = s.chars().collect();
    let mut push = |piece: String| -> Result<()> {
        let piece = piece.trim().to_string();
        if piece.is_empty() {
            return Ok(());
        }
        let (k, v) =
            piece.split_once('=').ok_or_else(|| Error::validation(format!("expected key=value, got {piece:?}")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
        Ok(())
    };
    for (i, &c) in bytes.iter().enumerate() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                push(bytes[start..i].iter().collect())?;
                start = i + 1;
            }
            _ => {}
        }
    }
    push(bytes[start..].iter().collect())?;
    Ok(out)
}

/// Inputs at one radius.
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs {
    pub log_mu: LogMagnitude,
    pub log_m: Option<LogMagnitude>,
    pub r: f64,
}

/// `1/2 log(L_1 q) + sum_{k=2}^{n-1} log(L_k q) + (1+d) log(L_n q)` for `log q`.
fn iter_tail(n: u32, delta: f64, log_q: f64, what: &str) -> Result<f64> {
    let lk = |k: u32| {
        iterated_log_of_exp(k, log_q)
            .map_err(|_| Error::domain(format!("log_{k}({what}) is not positive (log {what} = {log_q})")))
    };
    let mut acc = 0.5 * lk(1)?.ln();
    for k in 2..n {
        acc += lk(k)?.ln();
    }
    Ok(acc + (1.0 + delta) * lk(n)?.ln())
}

fn positive_log(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 {
        Ok(v.ln())
    } else {
        Err(Error::domain(format!("{what} = {v} is not positive")))
    }
}

/// Log of the bound's right-hand side at the given inputs.
pub fn eval_bound(spec: &BoundSpec, inputs: BoundInputs) -> Result<LogMagnitude> {
    spec.validate()?;
    let r = inputs.r;
    if !(r >= 0.0) || r >= spec.radius() {
        return Err(Error::domain(format!("{}: r = {r} is outside [0, {})", spec.id, spec.radius())));
    }
    let l = inputs.log_mu.log();
    if !l.is_finite() {
        return Err(Error::domain(format!("{}: log mu = {l} is not finite", spec.id)));
    }
    let lc = spec.c.ln();
    // log(1/(1-r)) and log(mu/(1-r))
    let d = -(-r).ln_1p();
    let lq = l + d;
    let delta = spec.delta;
    let id = spec.id;
    let ctx = |e: Error| match e {
        Error::Domain(m) => Error::Domain(format!("{id} at r = {r}: {m}")),
        other => other,
    };
    let value = match id {
        BoundId::Wv => lc + l + (0.5 + delta) * positive_log(l, "log mu").map_err(ctx)?,
        BoundId::Wvb => lc + l + iter_tail(2, delta, l, "mu").map_err(ctx)?,
        BoundId::Wvc => lc + l + iter_tail(spec.n, delta, l, "mu").map_err(ctx)?,
        BoundId::Kov => lc + lq + (0.5 + delta) * positive_log(lq, "log(mu/(1-r))").map_err(ctx)?,
        BoundId::KovN | BoundId::LogImp => lc + lq + iter_tail(spec.n, delta, lq, "mu/(1-r)").map_err(ctx)?,
        BoundId::Sul => lc + l + (1.0 + delta) * d + (0.5 + delta) * positive_log(lq, "log(mu/(1-r))").map_err(ctx)?,
        BoundId::SulN => {
            lc + lq
                + (1.0 + delta) * positive_log(d, "log(1/(1-r))").map_err(ctx)?
                + iter_tail(spec.n, delta, lq, "mu/(1-r)").map_err(ctx)?
        }
        BoundId::Sk | BoundId::SkN => {
            let n = if id == BoundId::Sk { 2 } else { spec.n };
            lc + lq
                + (0.5 + delta) * positive_log(d, "log(1/(1-r))").map_err(ctx)?
                + iter_tail(n, delta, lq, "mu/(1-r)").map_err(ctx)?
        }
        BoundId::Main => {
            let log_m = inputs.log_m.ok_or_else(|| Error::Contract("MAIN needs log M_f(r)".into()))?.log();
            let h = spec.h.as_ref().expect("validated");
            let log_h = h.eval(r).map_err(ctx)?.ln();
            let psi1 = spec.psi1.as_ref().expect("validated");
            let psi2 = spec.psi2.as_ref().expect("validated");
            let lp1 = psi1.log_eval(log_m).map_err(ctx)?;
            let lp2 = psi2.log_eval_log(log_h + lp1).map_err(ctx)?;
            lc + l + 0.5 * (log_h + lp2)
        }
        BoundId::Sk4 => {
            let h = spec.h.as_ref().expect("validated");
            let log_h = h.eval(r).map_err(ctx)?.ln();
            lc + log_h
                + l
                + (0.5 + delta) * positive_log(log_h, "log h").map_err(ctx)?
                + iter_tail(spec.n, delta, log_h + l, "h mu").map_err(ctx)?
        }
        BoundId::Lower => lc + lq + 0.5 * positive_log(lq, "log(mu/(1-r))").map_err(ctx)?,
    };
    if value.is_nan() {
        return Err(Error::NonFinite(format!("{id} at r = {r} evaluated to NaN")));
    }
    Ok(LogMagnitude::from_log(value))
}

/// One grid point of the derivation chain for `psi1 = psi2 = y (log y)^{1+d}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiPoint {
    pub y: f64,
    pub log_phi: f64,
    /// `log(2^{1+d} y (log y)^{2+2d}) - log phi`
    pub first_margin: f64,
    /// `log(y^2) - log phi`
    pub second_margin: f64,
    /// `log(phi / y^2)`
    pub log_tail_ratio: f64,
}

impl PhiPoint {
    pub fn both_hold(&self) -> bool {
        self.first_margin >= 0.0 && self.second_margin >= 0.0
    }
}

#[derive(Debug, Clone)]
pub struct PhiChainReport {
    pub delta: f64,
    pub points: Vec<PhiPoint>,
    /// Grid values where `phi` is undefined (`psi1(y) <= 1`).
    pub undefined: Vec<f64>,
    /// Smallest grid `y` from which both inequalities hold at every later grid point.
    pub y0: Option<f64>,
    /// Grid point from `y0` on where `phi / y^2` peaks; the ratio rises
    /// while `log y < 2 + 2d` or so.
    pub ratio_peak: Option<f64>,
    /// `phi / y^2` is strictly decreasing on the grid after `ratio_peak`.
    pub tail_decreasing: bool,
}

/// Evaluates `phi = psi2(psi1(y))` on the grid and locates where both
/// `phi <= 2^{1+d} y (log y)^{2+2d}` and `phi <= y^2` hold from then on.
pub fn phi_chain_check(delta: f64, y_grid: &[f64]) -> Result<PhiChainReport> {
    check_delta(delta)?;
    let psi = PsiSpec::LogPow { delta };
    let mut points = Vec::new();
    let mut undefined = Vec::new();
    for w in y_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::validation("y grid must be strictly increasing"));
        }
    }
    for &y in y_grid {
        let ly = y.ln();
        let log_phi = match psi.log_eval(y).and_then(|l1| psi.log_eval_log(l1)) {
            Ok(v) => v,
            Err(Error::Domain(_)) => {
                undefined.push(y);
                continue;
            }
            Err(e) => return Err(e),
        };
        let first = (1.0 + delta) * 2f64.ln() + ly + (2.0 + 2.0 * delta) * ly.ln();
        points.push(PhiPoint {
            y,
            log_phi,
            first_margin: first - log_phi,
            second_margin: 2.0 * ly - log_phi,
            log_tail_ratio: log_phi - 2.0 * ly,
        });
    }
    let start = points.iter().rposition(|p| !p.both_hold()).map_or(0, |i| i + 1);
    let y0 = points.get(start).map(|p| p.y);
    let tail = &points[start.min(points.len())..];
    let peak = tail.iter().enumerate().max_by(|a, b| a.1.log_tail_ratio.total_cmp(&b.1.log_tail_ratio)).map(|(i, _)| i);
    let tail_decreasing = peak.is_some_and(|i| tail[i..].windows(2).all(|w| w[1].log_tail_ratio < w[0].log_tail_ratio));
    let ratio_peak = peak.map(|i| tail[i].y);
    Ok(PhiChainReport { delta, points, undefined, y0, ratio_peak, tail_decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn inputs(log_mu: f64, log_m: Option<f64>, r: f64) -> BoundInputs {
        BoundInputs { log_mu: LogMagnitude::from_log(log_mu), log_m: log_m.map(LogMagnitude::from_log), r }
    }

    #[test]
    fn iterated_log_examples() {
        assert_abs_diff_eq!(iterated_log(1, E).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(iterated_log(2, E.exp()).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(iterated_log(2, 2.0), Err(Error::Domain(_))));
        assert!(matches!(iterated_log(1, 1.0), Err(Error::Domain(_))));
        assert_eq!(iterated_log_threshold(1), 1.0);
        assert_eq!(iterated_log_threshold(2), E);
        assert_abs_diff_eq!(iterated_log_of_exp(2, E).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn psi_eval_examples() {
        assert_abs_diff_eq!(PsiSpec::Pow { delta: 0.5 }.eval(4.0).unwrap(), 8.0, epsilon = 1e-14);
        assert_abs_diff_eq!(PsiSpec::ExpHalf.eval(2.0).unwrap(), E, epsilon = 1e-15);
        let y = E * E;
        let iter = PsiSpec::Iter { n: 2, delta: 1.0 }.eval(y).unwrap();
        assert_relative_eq!(iter, y * 4.0, max_relative = 1e-15);
        assert_relative_eq!(iter, PsiSpec::LogPow { delta: 1.0 }.eval(y).unwrap(), max_relative = 1e-15);
        // n = 3: y log y (log log y)^{1+d}
        let y = 1e5;
        let v = PsiSpec::Iter { n: 3, delta: 0.5 }.eval(y).unwrap();
        assert_relative_eq!(v, y * y.ln() * y.ln().ln().powf(1.5), max_relative = 1e-14);
        assert!(matches!(PsiSpec::LogPow { delta: 1.0 }.eval(1.0), Err(Error::Domain(_))));
        assert!(matches!(PsiSpec::Iter { n: 3, delta: 1.0 }.eval(2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn log_eval_agrees_with_eval() {
        let specs = [
            PsiSpec::Pow { delta: 0.3 },
            PsiSpec::LogPow { delta: 1.0 },
            PsiSpec::Iter { n: 3, delta: 0.2 },
            PsiSpec::Iter { n: 4, delta: 0.7 },
            PsiSpec::ExpHalf,
            PsiSpec::Square,
        ];
        for s in &specs {
            for y in [20.0, 1e3, 1e8] {
                let a = s.eval(y).unwrap().ln();
                if a.is_infinite() {
                    continue;
                }
                let b = s.log_eval(y).unwrap();
                assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{s} at {y}");
            }
        }
    }

    #[test]
    fn psi_tail_examples() {
        assert_abs_diff_eq!(psi_tail(&PsiSpec::Square, 10.0).unwrap(), 0.1, epsilon = 1e-16);
        assert_abs_diff_eq!(psi_tail(&PsiSpec::Pow { delta: 1.0 }, 2.0).unwrap(), 0.5, epsilon = 1e-16);
        assert_abs_diff_eq!(psi_tail(&PsiSpec::LogPow { delta: 1.0 }, E * E).unwrap(), 0.5, epsilon = 1e-15);
        assert!(psi_tail(&PsiSpec::LogPow { delta: 1.0 }, 1.0).is_err());
    }

    #[test]
    fn psi_tail_closed_forms_match_quadrature() {
        let cases: Vec<(PsiSpec, [f64; 3])> = vec![
            (PsiSpec::Pow { delta: 0.5 }, [0.5, 3.0, 100.0]),
            (PsiSpec::LogPow { delta: 1.0 }, [1.5, E * E, 1e6]),
            (PsiSpec::Square, [0.1, 10.0, 1e4]),
            (PsiSpec::ExpHalf, [0.01, 2.0, 40.0]),
            (PsiSpec::Iter { n: 3, delta: 1.0 }, [3.0, 50.0, 1e9]),
        ];
        for (spec, thresholds) in cases {
            for a0 in thresholds {
                let closed = psi_tail(&spec, a0).unwrap();
                let quad = psi_tail_quadrature(&spec, a0, 1e-11).unwrap();
                assert_relative_eq!(closed, quad, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn custom_psi_tail() {
        let cube =
            PsiSpec::Custom { func: CustomFn { name: "y^3".into(), f: Arc::new(|y| y * y * y) }, threshold: 0.0 };
        assert_relative_eq!(psi_tail(&cube, 2.0).unwrap(), 0.125, max_relative = 1e-9);
        let slow = PsiSpec::Custom { func: CustomFn { name: "y".into(), f: Arc::new(|y| y) }, threshold: 0.0 };
        assert!(matches!(psi_tail(&slow, 1.0), Err(Error::Divergent(_))));
    }

    #[test]
    fn eval_bound_examples() {
        let wv = BoundSpec::new(BoundId::Wv).with_delta(0.5);
        assert_abs_diff_eq!(
            eval_bound(&wv, inputs(10.0, None, 5.0)).unwrap().log(),
            10.0 + 10f64.ln(),
            epsilon = 1e-12
        );
        let kov = BoundSpec::new(BoundId::Kov).with_delta(0.5);
        let v = eval_bound(&kov, inputs(10.0, None, 0.9)).unwrap().log();
        let expected = 10.0 + 10f64.ln() + (10.0 + 10f64.ln()).ln();
        assert_abs_diff_eq!(v, expected, epsilon = 1e-12);
        // 14.8125 is the four-decimal rounding quoted for this input
        assert_abs_diff_eq!(v, 14.8125, epsilon = 2e-4);
        let main = BoundSpec::new(BoundId::Main)
            .with_h(HSpec::Disk)
            .with_psi(PsiSpec::Pow { delta: 1.0 }, PsiSpec::Pow { delta: 1.0 });
        let v = eval_bound(&main, inputs(3.0, Some(100.0), 0.9)).unwrap().log();
        assert_abs_diff_eq!(v, 3.0 + 0.5 * (10f64.ln() + 10.0 * 10f64.ln()), epsilon = 1e-12);
    }

    #[test]
    fn catalog_special_cases() {
        // WVB is WVC with n = 2; SK is SK_N with n = 2; KOV_N and LOGIMP coincide
        let i = inputs(50.0, None, 0.95);
        let same = |a: BoundSpec, b: BoundSpec| {
            assert_abs_diff_eq!(eval_bound(&a, i).unwrap().log(), eval_bound(&b, i).unwrap().log(), epsilon = 1e-13);
        };
        same(BoundSpec::new(BoundId::Wvb).with_delta(0.3), BoundSpec::new(BoundId::Wvc).with_delta(0.3).with_n(2));
        same(BoundSpec::new(BoundId::Sk).with_delta(0.3), BoundSpec::new(BoundId::SkN).with_delta(0.3).with_n(2));
        same(
            BoundSpec::new(BoundId::KovN).with_delta(0.3).with_n(3),
            BoundSpec::new(BoundId::LogImp).with_delta(0.3).with_n(3),
        );
        // SK4 with h = 1/(1-r) is SK_N
        same(
            BoundSpec::new(BoundId::Sk4).with_delta(0.3).with_n(3).with_h(HSpec::Disk),
            BoundSpec::new(BoundId::SkN).with_delta(0.3).with_n(3),
        );
        // LOWER is KOV's shape with exponent 1/2
        let lower = eval_bound(&BoundSpec::new(BoundId::Lower), i).unwrap().log();
        let lq = 50.0 - (0.05f64).ln();
        assert_abs_diff_eq!(lower, lq + 0.5 * lq.ln(), epsilon = 1e-12);
    }

    #[test]
    fn eval_bound_errors() {
        let wvc = BoundSpec::new(BoundId::Wvc).with_n(3).with_delta(1.0);
        // log_3 mu <= 0 when log mu = 2
        match eval_bound(&wvc, inputs(2.0, None, 1.0)) {
            Err(Error::Domain(msg)) => assert!(msg.contains("log_3"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let main = BoundSpec::new(BoundId::Main).with_h(HSpec::Disk).with_psi(PsiSpec::ExpHalf, PsiSpec::Square);
        assert!(matches!(eval_bound(&main, inputs(2.0, None, 0.5)), Err(Error::Contract(_))));
        assert!(matches!(eval_bound(&BoundSpec::new(BoundId::Kov), inputs(2.0, None, 1.0)), Err(Error::Domain(_))));
        assert!(BoundSpec::new(BoundId::LogImp).with_delta(0.7).validate().is_err());
        assert!(BoundSpec::new(BoundId::Wv).with_c(0.0).validate().is_err());
    }

    #[test]
    fn bound_spec_text_roundtrip() {
        let s: BoundSpec = "MAIN:psi1=iter(3;0.5),psi2=square,h=disk,C=2".parse().unwrap();
        assert_eq!(s.id, BoundId::Main);
        assert_eq!(s.c, 2.0);
        let again: BoundSpec = s.to_string().parse().unwrap();
        assert_eq!(again.to_string(), s.to_string());
        let w: BoundSpec = "wvc:n=3,delta=1,C=10".parse().unwrap();
        assert_eq!((w.id, w.n, w.delta, w.c), (BoundId::Wvc, 3, 1.0, 10.0));
        let comma: BoundSpec = "MAIN:psi1=iter(3,0.5),psi2=pow(1),h=unit".parse().unwrap();
        assert!(matches!(comma.psi1, Some(PsiSpec::Iter { n: 3, .. })));
        assert!("NOPE".parse::<BoundSpec>().is_err());
        assert!("WV:foo=1".parse::<BoundSpec>().is_err());
    }

    #[test]
    fn h_functions() {
        assert_eq!(HSpec::Unit.eval(5.0).unwrap(), 1.0);
        assert_abs_diff_eq!(HSpec::Disk.eval(0.9).unwrap(), 10.0, epsilon = 1e-12);
        assert!(HSpec::Unit.eval(0.5).is_err());
        assert!(HSpec::Disk.eval(1.0).is_err());
        let r = 1.0 - (-E).exp();
        assert_relative_eq!(HSpec::DiskLog.eval(r).unwrap(), E.exp() / E, max_relative = 1e-12);
        for h in [HSpec::Unit, HSpec::Disk, HSpec::DiskLog] {
            let lo = h.rho_start();
            let grid: Vec<f64> = (0..200)
                .map(|k| if h.radius().is_infinite() { lo * 1.2f64.powi(k) } else { 1.0 - (1.0 - lo) * 0.9f64.powi(k) })
                .collect();
            let vals: Vec<f64> = grid.iter().map(|&r| h.eval(r).unwrap()).collect();
            assert!(vals.iter().all(|&v| v > 0.0));
            assert!(vals.windows(2).all(|w| w[1] >= w[0]), "{h} not increasing");
        }
    }

    #[test]
    fn psi_positive_increasing_on_grid() {
        let specs = [
            PsiSpec::Pow { delta: 0.5 },
            PsiSpec::LogPow { delta: 1.0 },
            PsiSpec::Iter { n: 3, delta: 0.5 },
            PsiSpec::Iter { n: 4, delta: 1.0 },
            PsiSpec::ExpHalf,
            PsiSpec::Square,
        ];
        for s in &specs {
            let a = s.threshold().max(1e-3);
            let lo = (a * (1.0 + 1e-6)).ln();
            let hi = 1e12f64.ln();
            let vals: Vec<f64> =
                (0..400).map(|k| lo + (hi - lo) * k as f64 / 399.0).map(|ly| s.log_eval_log(ly).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[1] > w[0]), "{s} not increasing");
            let first = s.eval((lo).exp()).unwrap();
            assert!(first > 0.0, "{s} not positive");
        }
    }

    #[test]
    fn phi_chain_examples() {
        let y = 10f64.exp();
        let rep = phi_chain_check(1.0, &[y]).unwrap();
        assert!(rep.points[0].both_hold());
        let grid: Vec<f64> = (0..200).map(|k| 1.05 * 1.2f64.powi(k)).collect();
        for delta in [0.1, 1.0] {
            let rep = phi_chain_check(delta, &grid).unwrap();
            let y0 = rep.y0.expect("threshold reached on grid");
            assert!(rep.points.iter().filter(|p| p.y >= y0).all(PhiPoint::both_hold));
            assert!(rep.tail_decreasing);
            assert!(rep.ratio_peak.unwrap() >= y0);
            assert!(rep.points.last().unwrap().log_tail_ratio < -10.0);
        }
        // delta = 1 fails the second inequality at moderate y, e.g. y = e^5
        let rep = phi_chain_check(1.0, &[5f64.exp()]).unwrap();
        assert!(rep.points[0].second_margin < 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn main_reduction_identity(
            log_mu in 1.0f64..1e4,
            log_m in 1.0f64..1e5,
            r in 0.0f64..0.999_999,
            c in 1e-3f64..1e3,
        ) {
            let spec = BoundSpec::new(BoundId::Main)
                .with_c(c)
                .with_h(HSpec::Disk)
                .with_psi(PsiSpec::ExpHalf, PsiSpec::Square);
            let got = eval_bound(&spec, inputs(log_mu, Some(log_m), r)).unwrap().log();
            let log_h = HSpec::Disk.eval(r).unwrap().ln();
            let want = c.ln() + log_mu + 1.5 * log_h + 0.5 * log_m;
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }

        #[test]
        fn bounds_nondecreasing_in_log_mu(
            a in 20.0f64..1e5,
            step in 0.0f64..100.0,
            r in 0.05f64..0.9999,
            idx in 0usize..13,
        ) {
            let id = BoundId::ALL[idx];
            let mut spec = BoundSpec::new(id).with_delta(0.4).with_n(3);
            if matches!(id, BoundId::Main | BoundId::Sk4) {
                spec = spec.with_h(HSpec::Disk).with_psi(PsiSpec::LogPow { delta: 1.0 }, PsiSpec::Pow { delta: 0.5 });
            }
            let r = if spec.radius().is_infinite() { 1.0 / (1.0 - r) } else { r };
            let lo = eval_bound(&spec, inputs(a, Some(a), r));
            let hi = eval_bound(&spec, inputs(a + step, Some(a + step), r));
            if let (Ok(lo), Ok(hi)) = (lo, hi) {
                prop_assert!(hi.log() >= lo.log() - 1e-12 * lo.log().abs());
            }
        }
    }
}
