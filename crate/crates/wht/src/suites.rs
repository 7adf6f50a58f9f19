//! Verification suites run by `wht verify`.

use std::fmt::Debug;
use std::sync::OnceLock;

use serde::Serialize;
use wht_core::model::{Color, Error, ModelParams};
use wht_core::oracle::{
    assemble_symbolic, assemble_tau, cap_symbolic, enumerate_factorisations, tau_schur_degree, tau_schur_symbolic,
    tables_for, wgn_oracle, LBounds, Shape, Table,
};
use wht_core::ring::{Poly, Ring, Scalar, Series, C64, Q};
use wht_core::slices::tilde_transform;
use wht_core::spectral::{insertion_sides, solve_system};
use wht_core::toprec::{compare_oracle, pole_bound, sample_points, tr_compute, NumericCurve, OmegaSet};

use crate::config::{RunConfig, Task};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub inputs: String,
    pub expected: String,
    pub got: String,
    pub tolerance: String,
    pub status: Status,
}

impl Check {
    fn new(suite: Task, name: impl Into<String>, inputs: impl Into<String>) -> Self {
        Check {
            suite: suite.name().into(),
            name: name.into(),
            inputs: inputs.into(),
            expected: String::new(),
            got: String::new(),
            tolerance: "exact".into(),
            status: Status::Fail,
        }
    }

    fn error(suite: Task, name: &str, e: &Error) -> Self {
        let mut c = Check::new(suite, name, "");
        c.expected = "a result".into();
        c.got = e.to_string();
        c
    }

    fn pass_if(mut self, ok: bool) -> Self {
        self.status = if ok { Status::Pass } else { Status::Fail };
        self
    }
}

/// Shape of the oracle tables for a model.
pub fn shape_of<F: Scalar>(params: &ModelParams<F>) -> Shape {
    Shape { m: params.m() as usize, r: params.r() as usize, exp: params.u_exp.is_some() }
}

fn short<T: Debug>(v: &T) -> String {
    let s = format!("{v:?}");
    if s.len() > 160 {
        format!("{}…", &s[..s.char_indices().nth(160).map(|(i, _)| i).unwrap_or(s.len())])
    } else {
        s
    }
}

/// Exact comparison of two series; reports the first differing `t`-order.
fn series_check<F: Scalar>(mut c: Check, expected: &Series<Poly<F>>, got: &Series<Poly<F>>) -> Check {
    let order = expected.order().min(got.order());
    c.expected = format!("series through t^{order}");
    let diff = (0..=order).find(|&k| expected.coeff(k) != got.coeff(k));
    c.got = match diff {
        None => "identical".into(),
        Some(k) => format!("differs at t^{k}: {} vs {}", short(&expected.coeff(k)), short(&got.coeff(k))),
    };
    let ok = diff.is_none() && expected.order() == got.order();
    c.pass_if(ok)
}

fn eq_check<T: PartialEq + Debug>(mut c: Check, expected: &T, got: &T) -> Check {
    let ok = expected == got;
    c.expected = short(expected);
    c.got = if ok { "equal".into() } else { short(got) };
    c.pass_if(ok)
}

/// Inputs shared by the suites.
pub struct Context {
    pub params: ModelParams<Q>,
    pub order: usize,
    pub d_max: usize,
    pub cap: u32,
    pub cfg: RunConfig,
    tables: OnceLock<Result<Vec<Table>, Error>>,
}

impl Context {
    pub fn new(cfg: &RunConfig) -> Result<Self, crate::CliError> {
        Ok(Context {
            params: cfg.params()?,
            order: cfg.spectral.order,
            d_max: cfg.oracle.d_max,
            cap: cfg.oracle.exp_run_max.unwrap_or(4),
            cfg: cfg.clone(),
            tables: OnceLock::new(),
        })
    }

    /// Tables for degrees up to `d_max`, with caps adequate for genus `g_max`.
    pub fn tables(&self) -> Result<&[Table], Error> {
        self.tables
            .get_or_init(|| tables_for(shape_of(&self.params), self.d_max, self.cfg.toprec.g_max as u32))
            .as_deref()
            .map_err(Clone::clone)
    }

    /// Genus-zero comparisons run to the smaller of `T` and `d_max`.
    pub fn genus0_order(&self) -> usize {
        self.order.min(self.d_max)
    }
}

pub fn run(task: Task, ctx: &Context) -> Vec<Check> {
    match task {
        Task::OracleVsSchur => oracle_vs_schur(&ctx.params, ctx.d_max, ctx.cap),
        Task::W01 => match ctx.tables() {
            Ok(t) => w01(&ctx.params, &ctx.params, t, ctx.genus0_order()),
            Err(e) => vec![Check::error(task, "tables", &e)],
        },
        Task::W02 => match ctx.tables() {
            Ok(t) => w02(&ctx.params, &ctx.params, t, ctx.genus0_order()),
            Err(e) => vec![Check::error(task, "tables", &e)],
        },
        Task::HColor => h_color(&ctx.params, ctx.order),
        Task::ArtificialPoles => artificial_poles(&ctx.params, ctx.order),
        Task::SetToZero => set_to_zero(&ctx.params, ctx.order),
        Task::Insertion => insertion(&ctx.params, ctx.order),
        Task::Tr => tr(ctx),
    }
}

/// `[t^d] τ` from characters against the enumerated tables. Models with denominator
/// colors or an exponential weight are compared as polynomials in those parameters,
/// truncated at degree `cap`.
pub fn oracle_vs_schur(params: &ModelParams<Q>, d_max: usize, cap: u32) -> Vec<Check> {
    let shape = shape_of(params);
    let finite = shape.r == 0 && !shape.exp;
    let mut out = Vec::new();
    for d in 1..=d_max {
        let name = format!("d = {d}");
        let inputs = format!("shape {shape:?}");
        let bounds = LBounds { max_each: cap.max(d as u32), max_total: 1000 };
        let table = match enumerate_factorisations(d, shape, bounds) {
            Ok(t) => t,
            Err(e) => {
                out.push(Check::error(Task::OracleVsSchur, &name, &e));
                continue;
            }
        };
        let c = Check::new(Task::OracleVsSchur, name.clone(), inputs);
        let res = if finite {
            assemble_tau(&table, params).and_then(|a| Ok(eq_check(c, &tau_schur_degree(params, d)?, &a)))
        } else {
            let mut c = c;
            c.inputs.push_str(&format!(", symbolic in the colors, capped at degree {cap}"));
            assemble_symbolic(&table).and_then(|a| {
                let b = tau_schur_symbolic(shape, d, cap)?;
                let a = cap_symbolic(&a, shape, cap);
                let mut c = eq_check(c, &b.len(), &a.len());
                if a != b {
                    c.got = "polynomials differ".into();
                    c.status = Status::Fail;
                }
                c.expected = format!("{} (λ, μ) polynomials", b.len());
                Ok(c)
            })
        };
        out.push(res.unwrap_or_else(|e| Check::error(Task::OracleVsSchur, &name, &e)));
    }
    out
}

/// Disk series from the spectral curve and from the slices against the tables. The
/// tables are weighted with `oracle_params`, normally the same model.
pub fn w01(params: &ModelParams<Q>, oracle_params: &ModelParams<Q>, tables: &[Table], order: usize) -> Vec<Check> {
    let run = || -> Result<Vec<Check>, Error> {
        let sd = solve_system(params, order)?;
        let oracle = wgn_oracle(tables, oracle_params, 0, 1, order)?;
        let mut out = vec![series_check(Check::new(Task::W01, "spectral", format!("T = {order}")), &oracle, &sd.w01()?)];
        if params.r() == 0 && params.u_exp.is_none() {
            let td = tilde_transform(&sd)?;
            for c in 0..params.m() as usize {
                let check = Check::new(Task::W01, format!("slices, root color {c}"), format!("T = {order}"));
                out.push(series_check(check, &oracle, &td.w01_bijective(c)));
            }
        }
        Ok(out)
    };
    run().unwrap_or_else(|e| vec![Check::error(Task::W01, "spectral", &e)])
}

/// Cylinder series from the spectral curve and from annular slices against the tables.
pub fn w02(params: &ModelParams<Q>, oracle_params: &ModelParams<Q>, tables: &[Table], order: usize) -> Vec<Check> {
    let run = || -> Result<Vec<Check>, Error> {
        let sd = solve_system(params, order)?;
        let oracle = wgn_oracle(tables, oracle_params, 0, 2, order)?;
        let mut out = vec![series_check(Check::new(Task::W02, "spectral", format!("T = {order}")), &oracle, &sd.w02()?)];
        if params.r() == 0 && params.u_exp.is_none() {
            let td = tilde_transform(&sd)?;
            let check = Check::new(Task::W02, "annular slices", format!("T = {order}, window ({}, {order}, {order})", 2 * order));
            out.push(series_check(check, &oracle, &td.w02_annular(2 * order, order, order)));
        }
        Ok(out)
    };
    run().unwrap_or_else(|e| vec![Check::error(Task::W02, "spectral", &e)])
}

/// `H` computed from every color agrees.
pub fn h_color(params: &ModelParams<Q>, order: usize) -> Vec<Check> {
    let run = || -> Result<Vec<Check>, Error> {
        let sd = solve_system(params, order)?;
        let h = sd.h()?;
        Ok((0..sd.classes.len())
            .filter_map(|c| sd.h_color(c).map(|hc| (c, hc)))
            .map(|(c, hc)| eq_check(Check::new(Task::HColor, format!("class {c}"), format!("T = {order}")), &h, &hc))
            .collect())
    };
    run().unwrap_or_else(|e| vec![Check::error(Task::HColor, "H", &e)])
}

fn fresh_parameter(params: &ModelParams<Q>) -> Q {
    let used: Vec<&Q> = params.num.iter().chain(&params.den).map(|c| &c.u).collect();
    (0..)
        .map(|k| Q::from_ratio(7 + 2 * k, 5 + k))
        .find(|u| !used.contains(&u))
        .expect("infinitely many candidates")
}

/// A color added to both sides leaves the curve and the series unchanged.
pub fn artificial_poles(params: &ModelParams<Q>, order: usize) -> Vec<Check> {
    let u = fresh_parameter(params);
    let mut padded = params.clone();
    padded.num.push(Color { u: u.clone(), mult: 1 });
    padded.den.push(Color { u: u.clone(), mult: 1 });
    let inputs = format!("extra parameter {u} on both sides, T = {order}");
    let run = || -> Result<Vec<Check>, Error> {
        let a = solve_system(params, order)?;
        let b = solve_system(&padded, order)?;
        let c = |name: &str| Check::new(Task::ArtificialPoles, name, inputs.clone());
        Ok(vec![
            eq_check(c("X"), &a.phi(order)?, &b.phi(order)?),
            eq_check(c("H"), &a.h()?, &b.h()?),
            series_check(c("W01"), &a.w01()?, &b.w01()?),
            series_check(c("W02"), &a.w02()?, &b.w02()?),
        ])
    };
    run().unwrap_or_else(|e| vec![Check::error(Task::ArtificialPoles, "solve", &e)])
}

/// A color with parameter zero drops out of `Z`, `X` and `Y`.
pub fn set_to_zero(params: &ModelParams<Q>, order: usize) -> Vec<Check> {
    let mut out = Vec::new();
    for side in ["num", "den"] {
        let mut padded = params.clone();
        let zero = Color { u: Q::zero(), mult: 1 };
        if side == "num" {
            padded.num.push(zero);
        } else {
            padded.den.push(zero);
        }
        let inputs = format!("zero parameter appended to {side}, T = {order}");
        let run = || -> Result<Vec<Check>, Error> {
            let a = solve_system(params, order)?;
            let b = solve_system(&padded, order)?;
            let (za, zb) = (a.z_series()?, b.z_series()?);
            let c = |name: &str| Check::new(Task::SetToZero, format!("{name} ({side})"), inputs.clone());
            Ok(vec![
                series_check(c("Z"), &za, &zb),
                eq_check(c("X"), &a.phi(order)?, &b.phi(order)?),
                series_check(c("Y"), &a.y_of_z(&za)?, &b.y_of_z(&zb)?),
            ])
        };
        out.extend(run().unwrap_or_else(|e| vec![Check::error(Task::SetToZero, side, &e)]));
    }
    out
}

/// `∂_α Y(Z(x))` at `p → αp` against the insertion operator applied to the cylinder.
pub fn insertion(params: &ModelParams<Q>, order: usize) -> Vec<Check> {
    match insertion_sides(params, order) {
        Ok((lhs, rhs)) => lhs
            .iter()
            .zip(&rhs)
            .enumerate()
            .map(|(a, (l, r))| series_check(Check::new(Task::Insertion, format!("alpha = {a}"), format!("T = {order}")), r, l))
            .collect(),
        Err(e) => vec![Check::error(Task::Insertion, "insertion", &e)],
    }
}

/// Results of a recursion run against the tables.
pub struct TrRun {
    pub curve: NumericCurve,
    pub set: OmegaSet,
    pub checks: Vec<Check>,
    pub samples: Vec<((usize, usize), Vec<wht_core::toprec::Sample>)>,
}

/// Runs the recursion at `t_value` and compares with the tables. `Err` only for
/// assumption violations.
pub fn tr_run(ctx: &Context) -> Result<TrRun, Error> {
    let cfg = &ctx.cfg.toprec;
    let t = ctx.cfg.t_value();
    let sd = solve_system(&ctx.params.to_c64(), ctx.order)?;
    let curve = NumericCurve::new(&sd, t, 1e-8)?;
    let set = tr_compute(&curve, cfg.g_max, cfg.n_max, cfg.depth_margin)?;
    let p: Vec<C64> = ctx.params.p.iter().map(|x| x.to_c64()).collect();
    let mut checks = Vec::new();
    let mut samples = Vec::new();
    let task = Task::Tr;
    for (&(g, n), omega) in &set.omegas {
        if g > cfg.g_max || n > cfg.n_max {
            continue;
        }
        let inputs = format!("(g, n) = ({g}, {n}), t = {t}");
        let floor = 1e-10 * omega.scale_max();
        let bound = pole_bound(g, n);
        let mut c = Check::new(task, format!("pole order ({g},{n})"), inputs.clone());
        let orders: Vec<usize> = (0..curve.branchpoints.len())
            .flat_map(|i| (0..n).map(move |s| (i, s)))
            .map(|(i, s)| omega.pole_order_at(s, i, floor))
            .collect();
        let ok = if (g, n) == (0, 3) { orders.iter().all(|&o| o == 2) } else { orders.iter().all(|&o| o <= bound) };
        c.expected = if (g, n) == (0, 3) { "exactly 2".into() } else { format!("at most {bound}") };
        c.got = format!("{orders:?}");
        checks.push(c.pass_if(ok));

        // Away from the origin, where the pole terms do not cancel.
        let sym_pts = sample_points(&curve, n, cfg.samples, 0.3);
        let mut c = Check::new(task, format!("symmetry ({g},{n})"), inputs.clone());
        c.tolerance = "1e-9 relative".into();
        let mut worst: f64 = 0.0;
        for z in &sym_pts {
            let v = omega.eval(&curve.branchpoints, z);
            let mut r: Vec<C64> = z.clone();
            r.reverse();
            worst = worst.max((omega.eval(&curve.branchpoints, &r) - v).norm() / v.norm());
            r.rotate_left(1);
            worst = worst.max((omega.eval(&curve.branchpoints, &r) - v).norm() / v.norm());
        }
        c.expected = "0".into();
        c.got = format!("{worst:e}");
        checks.push(c.pass_if(worst <= 1e-9 || n == 1));

        let w = wgn_oracle(ctx.tables()?, &ctx.params, g as u32, n, ctx.d_max)?;
        if w.coeffs().iter().all(|p| p.is_empty()) {
            let mut c = Check::new(task, format!("oracle ({g},{n})"), inputs.clone());
            c.status = Status::Skip;
            c.got = format!("no terms through d = {}", ctx.d_max);
            checks.push(c);
            continue;
        }
        let pts = sample_points(&curve, n, cfg.samples, cfg.sample_fraction);
        let s = compare_oracle(&curve, &set, &w, &p, g, &pts)?;
        let worst = s.iter().map(|x| x.rel).fold(0.0, f64::max);
        let budget = s.iter().map(|x| x.budget).fold(0.0, f64::max);
        let mut c = Check::new(task, format!("oracle ({g},{n})"), format!("{inputs}, {} samples, d ≤ {}", s.len(), ctx.d_max));
        c.tolerance = format!("{:e} + budget {budget:e}", cfg.tol);
        c.expected = "relative deviation within tolerance".into();
        c.got = format!("{worst:e}");
        checks.push(c.pass_if(worst <= cfg.tol + budget));
        samples.push(((g, n), s));
    }
    Ok(TrRun { curve, set, checks, samples })
}

pub fn tr(ctx: &Context) -> Vec<Check> {
    match tr_run(ctx) {
        Ok(run) => run.checks,
        Err(Error::Assumption(reason)) => {
            let mut c = Check::new(Task::Tr, "recursion", "");
            c.status = Status::Skip;
            c.got = format!("AssumptionViolation: {reason}");
            vec![c]
        }
        Err(e) => vec![Check::error(Task::Tr, "recursion", &e)],
    }
}
