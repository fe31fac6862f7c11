use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use wvlab_core::bounds::{BoundSpec, HSpec, PsiSpec};
use wvlab_core::corpus::{make_family, FamilySpec};
use wvlab_core::experiments::{
    defaults_line, run_experiment, standard_lemma_set, ExperimentConfig, ExperimentOutput, GridSpec, LemmaTarget, Mode,
    EVIDENCE_NOTE,
};
use wvlab_core::measures::{final_density, h_log_measure, log_density, HMeasure, IntervalSet, RadialFactor};
use wvlab_core::report::{format_real, Cell, Table};
use wvlab_core::{rosenbloom, series, Error, Result};

use crate::args::{Command, FamilyArgs, GridArgs};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Eval { family, grid, tol, out } => eval(&family, &grid, tol, out.out.as_deref()),
        Command::Stats { family, x, grid, out } => {
            let series = make_family(&family.spec()?)?;
            let xs = match grid.grid(series.radius())? {
                Some(g) if x.is_empty() => g.points().iter().map(|r| r.ln()).collect(),
                Some(_) => return Err(Error::Validation("give either --x values or a grid, not both".into())),
                None if x.is_empty() => return Err(Error::Validation("stats needs --x values or a grid".into())),
                None => x,
            };
            let rows: Vec<rosenbloom::RosenbloomStats> =
                xs.par_iter().map(|&x| rosenbloom::stats(&series, x)).collect::<Result<_>>()?;
            let mut t = Table::new(["x", "r", "g", "g1", "g2"]).with_note(defaults_line());
            for s in rows {
                t.push(vec![s.x.into(), s.x.exp().into(), s.g.into(), s.g1.into(), s.g2.into()]);
            }
            emit(&t.to_csv()?, out.out.as_deref())
        }
        Command::Check { family, grid, bound, h, out, summary } => {
            let mut cfg = config("check", Mode::Check, &family, &grid)?;
            cfg.bounds = bound.iter().map(|b| b.parse()).collect::<Result<Vec<BoundSpec>>>()?;
            cfg.measures = h.iter().map(|s| s.parse()).collect::<Result<Vec<HSpec>>>()?;
            finish(run_experiment(&cfg)?, out.out.as_deref(), summary.as_deref())
        }
        Command::Lemma { family, grid, c, psi, h, target, out } => {
            lemma(&family, &grid, c, psi.as_deref(), h.as_deref(), &target, out.out.as_deref())
        }
        Command::Measure { set, h, r, tol } => {
            let h: HSpec = h.parse()?;
            let text =
                std::fs::read_to_string(&set).map_err(|e| Error::Io(format!("cannot read {}: {e}", set.display())))?;
            let e = IntervalSet::parse(&text, h.radius())?;
            let mut s = match h_log_measure(&e, &h, tol, RadialFactor::Auto)? {
                HMeasure::Finite(v) => format!("{}\n", format_real(v)),
                HMeasure::Divergent { partial } => {
                    eprintln!("wvlab: {h}-measure diverges (partial integral {})", format_real(partial));
                    "inf\n".to_string()
                }
            };
            if let Some(r) = r {
                s.push_str(&format!("log_density {}\n", format_real(log_density(&e, r)?)));
                s.push_str(&format!("final_density {}\n", format_real(final_density(&e, r)?)));
            }
            emit(&s, None)
        }
        Command::Sweep { family, grid, bound, h, budget, out } => {
            let mut cfg = config("sweep", Mode::Sweep, &family, &grid)?;
            cfg.bounds = vec![bound.parse()?];
            cfg.sweep = Some((h.parse()?, budget));
            finish(run_experiment(&cfg)?, out.out.as_deref(), None)
        }
        Command::Optimality { family, grid, out } => {
            let cfg = config("optimality", Mode::Optimality, &family, &grid)?;
            let res = run_experiment(&cfg)?;
            if let Some(p) = out.out.as_deref() {
                write_file(p, &res.csv)?;
            }
            emit(&res.summary, None)?;
            fail_on(&res.failures)
        }
        Command::Report { config, out } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Error::Io(format!("cannot read {}: {e}", config.display())))?;
            let mut cfg = ExperimentConfig::parse(&text)?;
            if out.is_some() {
                cfg.csv = out;
            }
            let (csv_to_stdout, summary_to_stderr) = (cfg.csv.is_none(), cfg.summary.is_none());
            let res = run_experiment(&cfg)?;
            if csv_to_stdout {
                emit(&res.csv, None)?;
            }
            if summary_to_stderr {
                eprint!("{}", res.summary);
            }
            fail_on(&res.failures)
        }
    }
}

fn config(name: &str, mode: Mode, family: &FamilyArgs, grid: &GridArgs) -> Result<ExperimentConfig> {
    let family: FamilySpec = family.spec()?;
    let grid: GridSpec = grid.spec()?;
    Ok(ExperimentConfig {
        name: name.into(),
        mode,
        family,
        grid,
        refine: None,
        bounds: Vec::new(),
        measures: Vec::new(),
        sweep: None,
        lemma: None,
        csv: None,
        summary: None,
    })
}

/// Writes CSV to `out` or stdout and the summary to `summary` or stderr.
fn finish(res: ExperimentOutput, out: Option<&Path>, summary: Option<&Path>) -> Result<()> {
    emit(&res.csv, out)?;
    match summary {
        Some(p) => write_file(p, &res.summary)?,
        None => eprint!("{}", res.summary),
    }
    fail_on(&res.failures)
}

fn fail_on(failures: &[String]) -> Result<()> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::Assertion(failures.join("; ")))
    }
}

fn write_file(p: &Path, s: &str) -> Result<()> {
    std::fs::write(p, s).map_err(|e| Error::Io(format!("cannot write {}: {e}", p.display())))
}

fn emit(s: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_file(p, s),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(s.as_bytes()).and_then(|_| so.flush()).map_err(|e| Error::Io(e.to_string()))
        }
    }
}

fn eval(family: &FamilyArgs, grid: &GridArgs, tol: f64, out: Option<&Path>) -> Result<()> {
    let series = make_family(&family.spec()?)?;
    let grid = grid.grid(series.radius())?;
    let rows: Vec<series::Evaluation> =
        grid.points().par_iter().map(|&r| series::evaluate(&series, r, tol)).collect::<Result<_>>()?;
    let mut t = Table::new(["r", "log_mu", "nu", "log_M"]).with_note(format!("{} eval_tol={tol:e}", defaults_line()));
    for e in rows {
        t.push(vec![e.r.into(), e.log_mu.log().into(), e.central_index.into(), e.log_f.log().into()]);
    }
    emit(&t.to_csv()?, out)
}

fn lemma(
    family: &FamilyArgs,
    grid: &GridArgs,
    c: f64,
    psi: Option<&str>,
    h: Option<&str>,
    target: &str,
    out: Option<&Path>,
) -> Result<()> {
    let series = make_family(&family.spec()?)?;
    let grid = grid.grid(series.radius())?;
    let xs: Vec<f64> = grid.points().iter().map(|r| r.ln()).collect();
    let points = rosenbloom::verify_pointwise_lemma(&series, &xs, c)?;
    let mut t = Table::new([
        "r",
        "g",
        "g1",
        "g2",
        "log_mu",
        "window_lo",
        "window_hi",
        "log_window",
        "count_bound",
        "chebyshev_margin",
        "count_margin",
        "constant",
        "holds",
    ])
    .with_note(format!("{} c={c}", defaults_line()));
    let mut failures = Vec::new();
    for p in &points {
        let s = &p.stats;
        if !p.holds() {
            failures.push(format!("pointwise chain fails at r = {}", format_real(s.x.exp())));
        }
        t.push(vec![
            s.x.exp().into(),
            s.g.into(),
            s.g1.into(),
            s.g2.into(),
            s.log_mu.into(),
            p.window.lo.into(),
            p.window.hi.into(),
            p.window.log_sum.log().into(),
            p.count_bound.into(),
            p.chebyshev_margin.into(),
            p.count_margin.into(),
            p.constant.into(),
            Cell::Bool(p.holds()),
        ]);
    }
    emit(&t.to_csv()?, out)?;

    match (psi, h) {
        (Some(psi), Some(h)) => {
            let psi: PsiSpec = psi.parse()?;
            let h: HSpec = h.parse()?;
            let target: LemmaTarget = target.parse()?;
            let rep = standard_lemma_set(&series, &psi, &h, target, &grid)?;
            eprintln!("note: {EVIDENCE_NOTE}");
            eprintln!("lemma: psi = {psi}, h = {h}, target = {target}");
            eprintln!("measure: {}", format_real(rep.measure));
            eprintln!("budget: {}", format_real(rep.budget));
            eprintln!("within budget: {}", rep.within_budget());
            if let Err(e) = rep.check() {
                if let Error::Assertion(m) = e {
                    failures.push(m)
                } else {
                    return Err(e);
                }
            }
        }
        (None, None) => {}
        _ => return Err(Error::Validation("--psi and --h go together".into())),
    }
    fail_on(&failures)
}
