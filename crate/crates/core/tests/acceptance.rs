//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::Instant;

use num_bigint::BigInt;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use wht_core::model::{Color, ModelParams};
use wht_core::oracle::{
    assemble_symbolic, assemble_tau, cap_symbolic, enumerate_factorisations, tables_for, tau_schur_degree,
    tau_schur_symbolic, wgn_oracle, LBounds, Shape,
};
use wht_core::ring::{Ring, Scalar, C64, Q};
use wht_core::slices::tilde_transform;
use wht_core::spectral::{critical_point, insertion_sides, poly_series_norm, solve_system};
use wht_core::toprec::{compare_oracle, sample_points, tr_compute, NumericCurve, DEFAULT_SAMPLE_FRACTION};

type Outcome = Result<String, String>;

fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn random_q(rng: &mut StdRng) -> Q {
    loop {
        let n = rng.gen_range(-5i64..=5);
        if n != 0 {
            return q(n, rng.gen_range(1i64..=4));
        }
    }
}

/// Random model with distinct color parameters on each side and `D₁ = D₂ = 2`.
fn random_model(rng: &mut StdRng, m: usize, r: usize) -> ModelParams<Q> {
    let mut used: Vec<Q> = Vec::new();
    let mut fresh = |rng: &mut StdRng| loop {
        let u = random_q(rng);
        if !used.contains(&u) && !used.contains(&-u.clone()) {
            used.push(u.clone());
            return u;
        }
    };
    let num = (0..m).map(|_| fresh(rng)).collect();
    let den = (0..r).map(|_| fresh(rng)).collect();
    ModelParams::new(num, den, vec![random_q(rng), random_q(rng)], vec![random_q(rng), random_q(rng)])
}

const MODELS: [(usize, usize); 6] = [(1, 0), (2, 0), (3, 0), (1, 1), (0, 1), (2, 1)];

fn d_max(m: usize, r: usize) -> usize {
    if (m, r) == (1, 0) {
        6
    } else {
        4
    }
}

fn shape(p: &ModelParams<Q>) -> Shape {
    Shape { m: p.m() as usize, r: p.r() as usize, exp: p.u_exp.is_some() }
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn criterion_1(rng: &mut StdRng) -> Outcome {
    let cap = 4;
    for (m, r) in MODELS {
        let params = random_model(rng, m, r);
        let s = shape(&params);
        for d in 1..=d_max(m, r) {
            let table =
                enumerate_factorisations(d, s, LBounds { max_each: cap.max(d as u32), max_total: 1000 }).map_err(e2s)?;
            if r == 0 {
                let a = assemble_tau(&table, &params).map_err(e2s)?;
                let b = tau_schur_degree(&params, d).map_err(e2s)?;
                ensure(a == b, format!("({m},{r}) d = {d}: {a} vs {b}"))?;
            } else {
                let a = cap_symbolic(&assemble_symbolic(&table).map_err(e2s)?, s, cap);
                let b = tau_schur_symbolic(s, d, cap).map_err(e2s)?;
                ensure(a == b, format!("({m},{r}) d = {d}: symbolic coefficients differ"))?;
            }
        }
    }
    Ok("six models, exact".into())
}

fn genus_zero(rng: &mut StdRng, n: usize) -> Outcome {
    for (m, r) in MODELS {
        let params = random_model(rng, m, r);
        let order = d_max(m, r);
        let tables = tables_for(shape(&params), order, 0).map_err(e2s)?;
        let oracle = wgn_oracle(&tables, &params, 0, n, order).map_err(e2s)?;
        let sd = solve_system(&params, order).map_err(e2s)?;
        let spectral = if n == 1 { sd.w01() } else { sd.w02() }.map_err(e2s)?;
        ensure(spectral == oracle, format!("({m},{r}): spectral differs from oracle"))?;
        if r == 0 {
            let td = tilde_transform(&sd).map_err(e2s)?;
            if n == 1 {
                for c in 0..m {
                    ensure(td.w01_bijective(c) == oracle, format!("({m},{r}): slices rooted at color {c} differ"))?;
                }
            } else {
                ensure(td.w02_annular(2 * order, order, order) == oracle, format!("({m},{r}): annular slices differ"))?;
            }
        }
    }
    Ok(format!("W0{n} for six models, exact"))
}

fn model_21() -> ModelParams<Q> {
    ModelParams::new(vec![q(1, 2), q(-2, 3)], vec![q(1, 3)], vec![q(1, 1), q(-1, 2)], vec![q(2, 3), q(1, 4)])
}

fn criterion_4() -> Outcome {
    let order = 8;
    let params = model_21();
    let sd = solve_system(&params, order).map_err(e2s)?;
    let h = sd.h().map_err(e2s)?;
    for c in 0..sd.classes.len() {
        if let Some(hc) = sd.h_color(c) {
            ensure(hc == h, format!("H from class {c} differs"))?;
        }
    }
    let mut padded = params.clone();
    padded.num.push(Color { u: q(5, 7), mult: 1 });
    padded.den.push(Color { u: q(5, 7), mult: 1 });
    let sp = solve_system(&padded, order).map_err(e2s)?;
    ensure(sp.phi(order).map_err(e2s)? == sd.phi(order).map_err(e2s)?, "X changes")?;
    ensure(sp.h().map_err(e2s)? == h, "H changes")?;
    ensure(sp.w01().map_err(e2s)? == sd.w01().map_err(e2s)?, "W01 changes")?;
    Ok("T = 8".into())
}

fn criterion_5() -> Outcome {
    let order = 8;
    let base = model_21();
    let mut zeroed = base.clone();
    zeroed.num.last_mut().unwrap().u = Q::zero();
    let mut smaller = base.clone();
    smaller.num.pop();
    let a = solve_system(&zeroed, order).map_err(e2s)?;
    let b = solve_system(&smaller, order).map_err(e2s)?;
    let (za, zb) = (a.z_series().map_err(e2s)?, b.z_series().map_err(e2s)?);
    ensure(za == zb, "Z differs")?;
    ensure(a.phi(order).map_err(e2s)? == b.phi(order).map_err(e2s)?, "X differs")?;
    ensure(a.y_of_z(&za).map_err(e2s)? == b.y_of_z(&zb).map_err(e2s)?, "Y differs")?;
    Ok("(2,1) with last u = 0 against (1,1), T = 8".into())
}

fn criterion_6() -> Outcome {
    let (lhs, rhs) = insertion_sides(&model_21(), 6).map_err(e2s)?;
    for (a, (l, r)) in lhs.iter().zip(&rhs).enumerate() {
        ensure(l == r, format!("differs at alpha node {a}"))?;
    }
    Ok(format!("{} interpolation nodes, T = 6", lhs.len()))
}

fn tr_model() -> ModelParams<Q> {
    ModelParams::new(vec![q(1, 1)], vec![], vec![q(1, 2), q(1, 3)], vec![q(1, 1), q(2, 3)])
}

fn criteria_7_8() -> (Outcome, Outcome) {
    let run = || -> Result<(String, String), String> {
        let params = tr_model();
        let sd = solve_system(&params.to_c64(), 14).map_err(e2s)?;
        let curve = NumericCurve::new(&sd, C64::new(1e-3, 0.0), 1e-8).map_err(e2s)?;
        let set = tr_compute(&curve, 1, 3, 4).map_err(e2s)?;
        let tables = tables_for(shape(&params), 6, 1).map_err(e2s)?;
        let p: Vec<C64> = params.p.iter().map(|x| x.to_c64()).collect();
        let mut worst = Vec::new();
        for (g, n) in [(0usize, 3usize), (1, 1)] {
            let w = wgn_oracle(&tables, &params, g as u32, n, 6).map_err(e2s)?;
            let pts = sample_points(&curve, n, 5, DEFAULT_SAMPLE_FRACTION);
            let s = compare_oracle(&curve, &set, &w, &p, g, &pts).map_err(e2s)?;
            let dev = s.iter().map(|x| x.rel).fold(0.0, f64::max);
            worst.push(format!("({g},{n}) {dev:.2e}"));
            ensure(s.len() == 5 && dev <= 1e-6, format!("({g},{n}) deviation {dev:e}"))?;
        }
        let mut poles = Vec::new();
        let w03 = &set.omegas[&(0, 3)];
        let w11 = &set.omegas[&(1, 1)];
        for i in 0..curve.branchpoints.len() {
            for slot in 0..3 {
                let o = w03.pole_order_at(slot, i, 0.0);
                ensure(o == 2, format!("omega_0,3 has order {o} at point {i}"))?;
            }
            let o = w11.pole_order_at(0, i, 0.0);
            ensure(o <= 4, format!("omega_1,1 has order {o} at point {i}"))?;
            poles.push(o);
        }
        ensure(set.overflow == 0.0, format!("coefficients beyond the pole bound: {:e}", set.overflow))?;
        Ok((worst.join(", "), format!("omega_0,3 order 2 everywhere, omega_1,1 orders {poles:?}")))
    };
    match run() {
        Ok((a, b)) => (Ok(a), Ok(b)),
        Err(e) => (Err(e.clone()), Err(e)),
    }
}

fn criterion_9() -> Outcome {
    let mut parts = Vec::new();
    for (m, r, expect) in [(0u32, 1u32, 2.0 / 27.0), (3, 0, 1.0 / 8.0)] {
        let cp = critical_point(m, r).map_err(e2s)?;
        let rel = (cp.t - expect).abs() / expect;
        ensure(rel <= 1e-6, format!("({m},{r}): {} vs {expect}", cp.t))?;
        parts.push(format!("({m},{r}) t = {:.10}", cp.t));
    }
    Ok(parts.join(", "))
}

fn exp_model(u: Q) -> ModelParams<Q> {
    ModelParams::new(vec![q(1, 2)], vec![], vec![q(1, 3), q(1, 1)], vec![q(1, 1), q(1, 2)]).with_exp(u)
}

fn criterion_10() -> Outcome {
    let order = 3;
    // Both sides are polynomials in u₋₁ of degree at most 2·order at each t-order, so
    // agreement at 2·order + 1 values is equality of polynomials.
    let tables = tables_for(Shape { m: 1, r: 0, exp: true }, order, 0).map_err(e2s)?;
    for k in 0..=(2 * order as i64) {
        let params = exp_model(q(k - 3, 2));
        let sd = solve_system(&params, order).map_err(e2s)?;
        for n in [1, 2] {
            let oracle = wgn_oracle(&tables, &params, 0, n, order).map_err(e2s)?;
            let spectral = if n == 1 { sd.w01() } else { sd.w02() }.map_err(e2s)?;
            ensure(spectral == oracle, format!("W0{n} differs at u = {}", q(k - 3, 2)))?;
        }
    }
    // (1 + u z/N)^N as a numerator color of multiplicity N.
    let u = q(1, 1);
    let exact = solve_system(&exp_model(u.clone()), order).map_err(e2s)?;
    let mut errs = Vec::new();
    for n in [100u64, 10_000, 1_000_000] {
        let mut params = exp_model(u.clone());
        params.u_exp = None;
        params.num.push(Color { u: u.div(&Q::from_int(n as i64)), mult: n });
        let sd = solve_system(&params, order).map_err(e2s)?;
        let mut err: f64 = 0.0;
        for c in 0..1 {
            for k in 0..=params.d2() {
                let d = sd.a[c].coeff(k).minus(&exact.a[c].coeff(k));
                err = err.max(d.coeffs().iter().map(|x| x.magnitude()).fold(0.0, f64::max));
            }
            for k in 0..=params.d1() {
                let d = sd.b[c].coeff(k).minus(&exact.b[c].coeff(k));
                err = err.max(d.coeffs().iter().map(|x| x.magnitude()).fold(0.0, f64::max));
            }
        }
        let w = poly_series_norm(&sd.w01().map_err(e2s)?.minus(&exact.w01().map_err(e2s)?));
        errs.push((n, err.max(w)));
    }
    for pair in errs.windows(2) {
        let ratio = pair[0].1 / pair[1].1;
        ensure((50.0..=200.0).contains(&ratio), format!("error ratio {ratio:.1} between N = {} and N = {}", pair[0].0, pair[1].0))?;
    }
    let desc: Vec<String> = errs.iter().map(|(n, e)| format!("N = {n}: {e:.2e}")).collect();
    Ok(format!("exact through t^3 at 7 values of u; {}", desc.join(", ")))
}

fn main() {
    let mut rng = StdRng::seed_from_u64(20240611);
    let mut failed = 0;
    let mut report = |k: usize, start: Instant, o: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        match o {
            Ok(msg) => println!("criterion {k:>2}: PASS ({msg}; {secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("criterion {k:>2}: FAIL ({msg}; {secs:.1}s)");
            }
        }
    };
    let t = Instant::now();
    report(1, t, criterion_1(&mut rng));
    let t = Instant::now();
    report(2, t, genus_zero(&mut rng, 1));
    let t = Instant::now();
    report(3, t, genus_zero(&mut rng, 2));
    let t = Instant::now();
    report(4, t, criterion_4());
    let t = Instant::now();
    report(5, t, criterion_5());
    let t = Instant::now();
    report(6, t, criterion_6());
    let t = Instant::now();
    let (c7, c8) = criteria_7_8();
    report(7, t, c7);
    report(8, t, c8);
    let t = Instant::now();
    report(9, t, criterion_9());
    let t = Instant::now();
    report(10, t, criterion_10());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
