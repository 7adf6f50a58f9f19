//! The four subcommands. Each returns the process exit status.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;
use wht_core::oracle::{enumerate_factorisations, LBounds, TableRecord};
use wht_core::spectral::{formal_branchpoints, initial_ramification, solve_system, SpectralData};
use wht_core::toprec::NumericCurve;

use crate::config::{Format, RunConfig, ScalarMode, Task};
use crate::export::{self, ExportScalar};
use crate::suites::{self, shape_of, Check, Context, Status};
use crate::CliError;

/// Separation below which ramification points count as colliding.
const GAP: f64 = 1e-8;

pub struct Options {
    pub out: Option<PathBuf>,
    pub parallel: bool,
}

fn out_dir(cfg: &RunConfig, opts: &Options) -> PathBuf {
    opts.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}

fn wants(cfg: &RunConfig, f: Format) -> bool {
    cfg.output.formats.contains(&f)
}

/// Runs `f` over `items`, in parallel when asked. Output order follows `items`.
fn map_maybe_par<T: Sync, R: Send>(items: &[T], parallel: bool, f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

/// Hurwitz counts for every degree up to `d_max`.
pub fn table(cfg: &RunConfig, opts: &Options) -> Result<i32, CliError> {
    let params = cfg.params()?;
    let shape = shape_of(&params);
    let g = cfg.toprec.g_max as u32;
    let degrees: Vec<usize> = (1..=cfg.oracle.d_max).collect();
    let tables = map_maybe_par(&degrees, opts.parallel, |&d| {
        let mut b = LBounds::for_genus(d, g);
        if let Some(cap) = cfg.oracle.exp_run_max {
            b.max_each = cap;
        }
        enumerate_factorisations(d, shape, b)
    });
    let mut records: Vec<(usize, TableRecord)> = Vec::new();
    for (d, t) in degrees.iter().zip(tables) {
        for r in t?.records() {
            if !cfg.oracle.connected || r.connected {
                records.push((*d, r));
            }
        }
    }
    let dir = out_dir(cfg, opts);
    if wants(cfg, Format::Json) {
        export::write_json(&dir, "table.json", &export::table_json(&records))?;
    }
    if wants(cfg, Format::Csv) {
        export::write(&dir, "table.csv", &export::table_csv(&records)?)?;
    }
    println!("table: {} records for d <= {} written to {}", records.len(), cfg.oracle.d_max, dir.display());
    Ok(0)
}

/// Runs the configured suites and writes `report.json`.
pub fn verify(cfg: &RunConfig, opts: &Options) -> Result<i32, CliError> {
    let ctx = Context::new(cfg)?;
    let tasks: Vec<Task> = Task::ALL.iter().copied().filter(|t| cfg.tasks.contains(t)).collect();
    let checks: Vec<Check> = map_maybe_par(&tasks, opts.parallel, |t| suites::run(*t, &ctx)).into_iter().flatten().collect();
    for c in &checks {
        let status = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        println!("{status} {} / {}: expected {}, got {} [{}] ({})", c.suite, c.name, c.expected, c.got, c.tolerance, c.inputs);
    }
    let failed = checks.iter().filter(|c| c.status == Status::Fail).count();
    let report = json!({
        "config": cfg,
        "checks": checks,
        "failed": failed,
    });
    let dir = out_dir(cfg, opts);
    export::write_json(&dir, "report.json", &report)?;
    println!("{} checks, {failed} failed", checks.len());
    Ok(if failed > 0 { 1 } else { 0 })
}

/// Spectral data, curve summary and ramification points.
pub fn curve(cfg: &RunConfig, opts: &Options) -> Result<i32, CliError> {
    let params = cfg.params()?;
    let dir = out_dir(cfg, opts);
    let order = cfg.spectral.order;
    let initial = initial_ramification(&params, GAP)?;
    let numeric_sd = solve_system(&params.to_c64(), order)?;
    let numeric = NumericCurve::new(&numeric_sd, cfg.t_value(), GAP)?;
    match cfg.model.scalar_mode {
        ScalarMode::Exact => write_curve(&solve_system(&params, order)?, &initial, &numeric, cfg, &dir)?,
        ScalarMode::Numeric => write_curve(&numeric_sd, &initial, &numeric, cfg, &dir)?,
    }
    println!("curve: {} ramification points, written to {}", initial.len(), dir.display());
    Ok(0)
}

fn write_curve<F: ExportScalar>(
    sd: &SpectralData<F>,
    initial: &[wht_core::ring::C64],
    numeric: &NumericCurve,
    cfg: &RunConfig,
    dir: &Path,
) -> Result<(), CliError> {
    let depth = sd.order.saturating_sub(sd.params.d2());
    let formal = formal_branchpoints(sd, depth, GAP)?;
    if wants(cfg, Format::Json) {
        export::write_json(dir, "spectral.json", &export::spectral_json(sd))?;
        export::write_json(dir, "curve.json", &export::curve_json(sd, initial, &formal, Some(numeric))?)?;
    }
    if wants(cfg, Format::Csv) {
        export::write(dir, "branchpoints.csv", &export::branchpoints_csv(numeric)?)?;
    }
    Ok(())
}

/// Topological recursion at `t_value`, with the comparison against the tables.
pub fn tr(cfg: &RunConfig, opts: &Options) -> Result<i32, CliError> {
    let ctx = Context::new(cfg)?;
    let run = suites::tr_run(&ctx)?;
    let dir = out_dir(cfg, opts);
    let comparisons: Vec<_> = run
        .samples
        .iter()
        .map(|((g, n), s)| json!({"g": g, "n": n, "samples": export::samples_json(s)}))
        .collect();
    export::write_json(&dir, "omega.json", &export::omega_json(&run.set))?;
    export::write_json(&dir, "compare.json", &json!({"checks": run.checks, "comparisons": comparisons}))?;
    if wants(cfg, Format::Csv) {
        export::write(&dir, "branchpoints.csv", &export::branchpoints_csv(&run.curve)?)?;
    }
    let failed = run.checks.iter().filter(|c| c.status == Status::Fail).count();
    for c in &run.checks {
        println!("{} {}: got {} [{}]", if c.status == Status::Pass { "PASS" } else { "FAIL" }, c.name, c.got, c.tolerance);
    }
    Ok(if failed > 0 { 1 } else { 0 })
}
