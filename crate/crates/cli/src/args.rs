use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use wvlab_core::corpus::FamilySpec;
use wvlab_core::experiments::{GridSpec, RadialGrid};
use wvlab_core::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "wvlab", version, about = "Maximum term, maximum modulus and Wiman-Valiron bound experiments")]
pub struct Cli {
    /// Worker threads (affects wall time only, never output).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CSV of r, log mu, central index, log M on a grid.
    Eval {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Relative truncation tolerance.
        #[arg(long, default_value_t = 1e-15)]
        tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// CSV of g, g', g'' at values of x = log r.
    Stats {
        #[command(flatten)]
        family: FamilyArgs,
        /// Points x = log r (repeatable); otherwise the grid is used.
        #[arg(long, allow_hyphen_values = true, num_args = 1)]
        x: Vec<f64>,
        #[command(flatten)]
        grid: OptGridArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Violation report of catalog bounds on a grid.
    Check {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Bound spec such as `WVC:n=2,delta=1,C=10` (repeatable).
        #[arg(long, required = true)]
        bound: Vec<String>,
        /// h functions for measures: unit, disk, disklog (repeatable or comma separated).
        #[arg(long, value_delimiter = ',')]
        h: Vec<String>,
        #[command(flatten)]
        out: OutArgs,
        /// Write the text summary here instead of standard error.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Pointwise coefficient-window chain on a grid, plus the standard-lemma budget.
    Lemma {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Chebyshev window constant (> 1).
        #[arg(long, default_value_t = 3f64.sqrt())]
        c: f64,
        /// psi for the standard lemma, e.g. `pow(1)`, `logpow(1)`, `square`.
        #[arg(long)]
        psi: Option<String>,
        /// h for the standard lemma.
        #[arg(long)]
        h: Option<String>,
        /// `g` or `g_prime`.
        #[arg(long, default_value = "g")]
        target: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// h-logarithmic measure and densities of an interval-set file.
    Measure {
        /// File with one `lo hi` interval per line.
        #[arg(long)]
        set: PathBuf,
        /// unit, disk or disklog.
        #[arg(long)]
        h: String,
        /// Radius for the logarithmic and final densities (disk only).
        #[arg(long)]
        r: Option<f64>,
        /// Relative quadrature tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Smallest swept C whose violation set fits a measure budget.
    Sweep {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Bound template; its C is ignored.
        #[arg(long)]
        bound: String,
        #[arg(long)]
        h: String,
        /// Measure budget (may be `inf`).
        #[arg(long)]
        budget: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Lower constant of M / [mu/(1-r) (log(mu/(1-r)))^{1/2}] and its refinement stability.
    Optimality {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Full experiment from a config file.
    Report {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output CSV file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// exp, geometric, monomial, kovari, suleimanov or formula.
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub coeff: Option<String>,
    #[arg(long)]
    pub degree: Option<String>,
    /// Formula for log|a_n| in n.
    #[arg(long, allow_hyphen_values = true)]
    pub formula: Option<String>,
    /// Radius of convergence for the formula family.
    #[arg(long)]
    pub radius: Option<String>,
}

impl FamilyArgs {
    pub fn spec(&self) -> Result<FamilySpec> {
        let mut p = BTreeMap::new();
        for (k, v) in [
            ("rho", &self.rho),
            ("eps", &self.eps),
            ("coeff", &self.coeff),
            ("degree", &self.degree),
            ("formula", &self.formula),
            ("radius", &self.radius),
        ] {
            if let Some(v) = v {
                p.insert(k.to_string(), v.clone());
            }
        }
        FamilySpec::from_params(&self.family, &p)
    }
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Geometric grid `start:end:count` (entire functions).
    #[arg(long, conflicts_with = "grid_gap")]
    pub grid_geo: Option<String>,
    /// Gap grid `r0:q:count`, r_k = R - (R - r0) q^k (disk families).
    #[arg(long)]
    pub grid_gap: Option<String>,
}

#[derive(Debug, Args)]
pub struct OptGridArgs {
    #[arg(long, conflicts_with = "grid_gap")]
    pub grid_geo: Option<String>,
    #[arg(long)]
    pub grid_gap: Option<String>,
}

fn triple(flag: &str, s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Validation(format!("--{flag} expects a:b:count, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a = parts[0].trim().parse::<f64>().map_err(|_| bad())?;
    let b = parts[1].trim().parse::<f64>().map_err(|_| bad())?;
    let n = parts[2].trim().parse::<usize>().map_err(|_| bad())?;
    Ok((a, b, n))
}

pub fn grid_spec(geo: Option<&str>, gap: Option<&str>) -> Result<Option<GridSpec>> {
    match (geo, gap) {
        (Some(s), None) => {
            let (start, end, count) = triple("grid-geo", s)?;
            Ok(Some(GridSpec::GeoBetween { start, end, count }))
        }
        (None, Some(s)) => {
            let (r0, q, count) = triple("grid-gap", s)?;
            Ok(Some(GridSpec::Gap { r0, q, count }))
        }
        (None, None) => Ok(None),
        (Some(_), Some(_)) => Err(Error::Validation("give only one of --grid-geo and --grid-gap".into())),
    }
}

impl GridArgs {
    pub fn spec(&self) -> Result<GridSpec> {
        grid_spec(self.grid_geo.as_deref(), self.grid_gap.as_deref())?.ok_or_else(|| {
            Error::Validation("a grid is required: --grid-geo start:end:count or --grid-gap r0:q:count".into())
        })
    }

    pub fn grid(&self, radius: f64) -> Result<RadialGrid> {
        self.spec()?.build(radius)
    }
}

impl OptGridArgs {
    pub fn grid(&self, radius: f64) -> Result<Option<RadialGrid>> {
        grid_spec(self.grid_geo.as_deref(), self.grid_gap.as_deref())?.map(|g| g.build(radius)).transpose()
    }
}
