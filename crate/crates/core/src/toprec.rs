//! Topological recursion on the spectral curve instantiated at a complex `t`.
//!
//! Every `ω_{g,n}` with `2g - 2 + n ≥ 1` is stored as a finite sum
//! `Σ c · Π_j (z_j - b_{i_j})^{-k_j} dz_1 ⋯ dz_n`. Residues are taken by local series
//! algebra in `ζ = z - b_i`: with `s(ζ) = σ_i(b_i + ζ) - b_i` the kernel contributes
//!
//! ```text
//! Σ_k (z_1 - b_i)^{-k-1} Res_ζ (ζ^k - s^k) σ' / (2 (Y(b+ζ) - Y(b+s)) X'(b+ζ)) · [bracket]
//! ```
//!
//! and `ω₀,₂(b+ζ, z_j) = Σ_a (a+1) ζ^a (z_j - b_i)^{-a-2}` keeps the bracket in pole form.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::model::{Error, ModelParams, Result, Side};
use crate::ring::{Poly, Ring, Scalar, Series, C64};
use crate::roots::{min_relative_gap, poly_roots, DPoly};
use crate::spectral::{initial_ramification, SpectralData};

fn cx(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `(branchpoint index, pole order)` per variable slot.
pub type Key = Vec<(u16, u16)>;

const ABSENT: (u16, u16) = (u16::MAX, 0);

/// Highest pole order allowed in `ω_{g,n}`.
pub fn pole_bound(g: usize, n: usize) -> usize {
    6 * g + 2 * n - 4
}

/// `z X(z)` as a product `e^{u₋₁ η(z)} Π A(z)^e` plus `H(z)`, all with complex coefficients.
#[derive(Clone, Debug)]
pub struct NumericCurve {
    pub t: C64,
    /// Polynomials `A(z)` (lowest degree first) with signed net exponents.
    pub factors: Vec<(Vec<C64>, i64)>,
    /// `(u₋₁, η(z))` for the exponential weight.
    pub exp_weight: Option<(C64, Vec<C64>)>,
    /// `H(z) = Σ_k h[k - h_lo] z^k`.
    pub h_lo: i32,
    pub h: Vec<C64>,
    /// Zeros of `X'`, ordered like the initial ramification points they continue.
    pub branchpoints: Vec<C64>,
    pub initial: Vec<C64>,
    /// Last-term size of the spectral series at `|t|`.
    pub tail: f64,
}

fn poly_eval(c: &[C64], z: C64) -> C64 {
    c.iter().rev().fold(cx(0.0), |acc, x| acc * z + x)
}

fn poly_deriv(c: &[C64]) -> Vec<C64> {
    c.iter().enumerate().skip(1).map(|(k, x)| x * k as f64).collect()
}

fn eval_t(s: &Series<C64>, t: C64) -> C64 {
    s.eval(&t)
}

impl NumericCurve {
    /// Instantiates solved spectral data at `t`. Ramification points are the zeros of the
    /// numerator of `X'/X = -1/z + Σ e A'/A + u₋₁ η'`.
    pub fn new(sd: &SpectralData<C64>, t: C64, gap: f64) -> Result<Self> {
        let initial = initial_ramification(&sd.params, gap)?;
        let d2 = sd.params.d2();
        let mut factors: Vec<(C64, Vec<C64>, i64)> = Vec::new();
        for (ci, c) in sd.classes.iter().enumerate() {
            if c.u.is_zero() {
                continue;
            }
            let e = if c.side == Side::Num { c.mult as i64 } else { -(c.mult as i64) };
            match factors.iter_mut().find(|f| f.0 == c.u) {
                Some(f) => f.2 += e,
                None => {
                    let coeffs = (0..=d2).map(|k| eval_t(&sd.a[ci].coeff(k), t)).collect();
                    factors.push((c.u, coeffs, e));
                }
            }
        }
        let factors = factors.into_iter().filter(|f| f.2 != 0).map(|f| (f.1, f.2)).collect();
        let exp_weight = sd
            .params
            .u_exp
            .map(|u| (u, (0..=d2).map(|k| eval_t(&sd.eta.coeff(k), t)).collect::<Vec<_>>()));
        let h = sd.h()?;
        let (lo, hi) = h.range().unwrap_or((0, 0));
        let hc = (lo..=hi).map(|k| eval_t(&h.coeff(k), t)).collect();
        let tail = sd.tail_estimate(t.norm());
        Self::assemble(t, factors, exp_weight, lo, hc, initial, tail, gap)
    }

    /// The curve with `p ≡ 0` written in closed form: `A = 1 + u Q(tz)`, `η = H = Q(tz)`.
    pub fn alpha_zero(params: &ModelParams<C64>, t: C64, gap: f64) -> Result<Self> {
        let initial = initial_ramification(params, gap)?;
        let qt: Vec<C64> = (0..=params.d2()).map(|k| params.q_at(k) * t.powi(k as i32)).collect();
        let mut factors: Vec<(C64, Vec<C64>, i64)> = Vec::new();
        let all = params.num.iter().map(|c| (c, 1i64)).chain(params.den.iter().map(|c| (c, -1i64)));
        for (c, sign) in all {
            if c.u.is_zero() {
                continue;
            }
            match factors.iter_mut().find(|f| f.0 == c.u) {
                Some(f) => f.2 += sign * c.mult as i64,
                None => {
                    let mut a: Vec<C64> = qt.iter().map(|x| x * c.u).collect();
                    a[0] = cx(1.0);
                    factors.push((c.u, a, sign * c.mult as i64));
                }
            }
        }
        let factors = factors.into_iter().filter(|f| f.2 != 0).map(|f| (f.1, f.2)).collect();
        let exp_weight = params.u_exp.map(|u| (u, qt.clone()));
        Self::assemble(t, factors, exp_weight, 0, qt, initial, 0.0, gap)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        t: C64,
        factors: Vec<(Vec<C64>, i64)>,
        exp_weight: Option<(C64, Vec<C64>)>,
        h_lo: i32,
        h: Vec<C64>,
        initial: Vec<C64>,
        tail: f64,
        gap: f64,
    ) -> Result<Self> {
        let mut curve = NumericCurve { t, factors, exp_weight, h_lo, h, branchpoints: Vec::new(), initial, tail };
        let p = curve.ramification_polynomial();
        let roots = poly_roots(&p)?;
        if roots.len() != curve.initial.len() {
            return Err(Error::Assumption(format!(
                "X' has {} zeros instead of {}",
                roots.len(),
                curve.initial.len()
            )));
        }
        let mut used = vec![false; roots.len()];
        for a in &curve.initial {
            let (j, _) = roots
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, b)| (j, (b * t - a).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("as many roots as initial points");
            used[j] = true;
            curve.branchpoints.push(roots[j]);
        }
        let scale = curve.branchpoints.iter().map(|b| b.norm()).fold(0.0, f64::max);
        if curve.branchpoints.iter().any(|b| b.norm() <= 1e-12 * scale) {
            return Err(Error::Assumption("a ramification point is zero".into()));
        }
        if curve.branchpoints.len() > 1 && min_relative_gap(&curve.branchpoints) <= gap {
            return Err(Error::Assumption("ramification points collide".into()));
        }
        Ok(curve)
    }

    /// Numerator of `X'/X` cleared by `z Π A`.
    pub fn ramification_polynomial(&self) -> DPoly<C64> {
        let polys: Vec<DPoly<C64>> = self.factors.iter().map(|(a, _)| DPoly::new(a.clone())).collect();
        let prod_except = |skip: Option<usize>| {
            polys
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != skip)
                .fold(DPoly::constant(cx(1.0)), |acc, (_, p)| acc.times(p))
        };
        let all = prod_except(None);
        let mut s = DPoly::new(Vec::new());
        for (i, ((_, e), p)) in self.factors.iter().zip(&polys).enumerate() {
            s = s.plus(&p.deriv().times(&prod_except(Some(i))).scale(&cx(*e as f64)));
        }
        if let Some((u, eta)) = &self.exp_weight {
            s = s.plus(&DPoly::new(poly_deriv(eta)).times(&all).scale(u));
        }
        s.shift(1).minus(&all)
    }

    /// `Φ(z) = z X(z)`.
    pub fn phi(&self, z: C64) -> C64 {
        let mut v = cx(1.0);
        for (a, e) in &self.factors {
            v *= poly_eval(a, z).powi(*e as i32);
        }
        if let Some((u, eta)) = &self.exp_weight {
            v *= (u * poly_eval(eta, z)).exp();
        }
        v
    }

    pub fn x(&self, z: C64) -> C64 {
        self.phi(z) / z
    }

    /// `X'(z)/X(z)`.
    pub fn dlog_x(&self, z: C64) -> C64 {
        let mut v = -z.inv();
        for (a, e) in &self.factors {
            v += poly_eval(&poly_deriv(a), z) / poly_eval(a, z) * *e as f64;
        }
        if let Some((u, eta)) = &self.exp_weight {
            v += u * poly_eval(&poly_deriv(eta), z);
        }
        v
    }

    pub fn dx(&self, z: C64) -> C64 {
        self.x(z) * self.dlog_x(z)
    }

    pub fn h_at(&self, z: C64) -> C64 {
        self.h.iter().enumerate().map(|(j, c)| c * z.powi(self.h_lo + j as i32)).sum()
    }

    pub fn y(&self, z: C64) -> C64 {
        self.h_at(z) / self.x(z)
    }

    /// Taylor series of `X` and `Y` at `b` through `ζ^order`.
    pub fn local_series(&self, b: C64, order: usize) -> Result<(Series<C64>, Series<C64>)> {
        let zeta = Series::from_coeffs(vec![b, cx(1.0)], order);
        let zinv = zeta.inv()?;
        let mut phi = Series::one(order);
        for (a, e) in &self.factors {
            let s = taylor(a, b, order);
            let p = s.pow(e.unsigned_abs());
            phi = phi.times(&if *e < 0 { p.inv()? } else { p });
        }
        if let Some((u, eta)) = &self.exp_weight {
            let mut s = taylor(eta, b, order).scale(u);
            let c0 = s.coeff(0);
            s.set_coeff(0, cx(0.0));
            phi = phi.times(&s.exp()?).scale(&c0.exp());
        }
        let x = phi.times(&zinv);
        let mut h = Series::zero(order);
        for (j, c) in self.h.iter().enumerate() {
            let k = self.h_lo + j as i32;
            let base = if k < 0 { zinv.pow((-k) as u64) } else { zeta.pow(k as u64) };
            h.add_in(&base.scale(c));
        }
        let y = h.times(&x.inv()?);
        Ok((x, y))
    }

    /// Largest `|t b_i - a_i|`.
    pub fn asymptotic_gap(&self) -> f64 {
        self.branchpoints.iter().zip(&self.initial).map(|(b, a)| (b * self.t - a).norm()).fold(0.0, f64::max)
    }
}

/// Taylor coefficients of the polynomial `c` at `b`.
fn taylor(c: &[C64], b: C64, order: usize) -> Series<C64> {
    let mut work = c.to_vec();
    let mut out = Vec::with_capacity(order + 1);
    for _ in 0..=order {
        if work.is_empty() {
            out.push(cx(0.0));
            continue;
        }
        // Synthetic division by (z - b): remainder is the value, quotient the next round.
        let mut q = vec![cx(0.0); work.len() - 1];
        let mut carry = cx(0.0);
        for k in (0..work.len()).rev() {
            let v = work[k] + carry * b;
            if k > 0 {
                q[k - 1] = v;
            }
            carry = v;
        }
        out.push(carry);
        work = q;
    }
    Series::from_coeffs(out, order)
}

/// Laurent series in `ζ` known through `ζ^hi`; `c[j]` multiplies `ζ^{lo+j}` and missing
/// entries are zero.
#[derive(Clone, Debug)]
struct Laurent {
    lo: i32,
    hi: i32,
    c: Vec<C64>,
}

const EXACT: i32 = i32::MAX / 4;

impl Laurent {
    fn from_series(s: &Series<C64>, lo: i32) -> Self {
        Laurent { lo, hi: lo + s.order() as i32, c: s.coeffs().to_vec() }
    }

    fn mono(k: i32, v: C64) -> Self {
        Laurent { lo: k, hi: EXACT, c: vec![v] }
    }

    fn times(&self, o: &Self) -> Self {
        let lo = self.lo + o.lo;
        let hi = (self.hi.saturating_add(o.lo)).min(o.hi.saturating_add(self.lo)).min(EXACT);
        let len = ((self.c.len() + o.c.len()).saturating_sub(1)).min((hi - lo + 1).max(0) as usize);
        let mut c = vec![cx(0.0); len];
        for (i, x) in self.c.iter().enumerate() {
            if *x == cx(0.0) {
                continue;
            }
            for (j, y) in o.c.iter().enumerate() {
                if i + j < len {
                    c[i + j] += x * y;
                }
            }
        }
        Laurent { lo, hi, c }
    }

    fn plus(&self, o: &Self) -> Self {
        let lo = self.lo.min(o.lo);
        let hi = self.hi.min(o.hi);
        let top = (self.lo + self.c.len() as i32).max(o.lo + o.c.len() as i32).min(hi + 1);
        let c = (lo..top).map(|k| self.get(k) + o.get(k)).collect();
        Laurent { lo, hi, c }
    }

    fn get(&self, k: i32) -> C64 {
        if k < self.lo {
            return cx(0.0);
        }
        self.c.get((k - self.lo) as usize).copied().unwrap_or(cx(0.0))
    }

    fn scale(&self, v: C64) -> Self {
        Laurent { lo: self.lo, hi: self.hi, c: self.c.iter().map(|x| x * v).collect() }
    }

    /// `Res = [ζ^{-1}] (self · o)`.
    fn residue_with(&self, o: &Self) -> Result<C64> {
        let need_self = -1 - o.lo;
        let need_o = -1 - self.lo;
        if self.hi < need_self || o.hi < need_o {
            return Err(Error::Model("local expansion depth too small for this residue".into()));
        }
        let mut acc = cx(0.0);
        for (i, x) in self.c.iter().enumerate() {
            let k = self.lo + i as i32;
            acc += x * o.get(-1 - k);
        }
        Ok(acc)
    }
}

/// Expansion data of the curve at one ramification point.
#[derive(Clone, Debug)]
pub struct LocalData {
    pub b: C64,
    pub depth: usize,
    /// `X(b + ζ)`.
    pub x: Series<C64>,
    /// `Y(b + ζ)`.
    pub y: Series<C64>,
    /// `s(ζ) = σ(b + ζ) - b = -ζ (1 + Σ_k β_k ζ^k)`.
    pub sigma: Series<C64>,
    /// `Y(b + ζ) - Y(b + s(ζ))`.
    pub dy: Series<C64>,
    /// `σ' / (2 ΔY X')`, a Laurent series starting at `ζ^{-2}`.
    kernel: Laurent,
    /// `s^a` for `a = 0..=depth` and `s^{-k}` for `k = 1..=depth`.
    s_pos: Vec<Laurent>,
    s_neg: Vec<Laurent>,
}

impl LocalData {
    pub fn new(curve: &NumericCurve, b: C64, depth: usize) -> Result<Self> {
        if depth < 6 {
            return Err(Error::Model("local expansion depth must be at least 6".into()));
        }
        let (mut x, y) = curve.local_series(b, depth)?;
        let x2 = x.coeff(2);
        let unit = x.coeff(0).norm() / num_traits::Float::powi(b.norm(), 2);
        if x2.norm() <= 1e-12 * unit {
            return Err(Error::Assumption("ramification point is not simple".into()));
        }
        if x.coeff(1).norm() * b.norm() > 1e-6 * x.coeff(0).norm() {
            return Err(Error::Model("point is not a zero of X'".into()));
        }
        x.set_coeff(1, cx(0.0));
        // X(b+ζ) - X(b) = ζ² φ(ζ); w = ζ (φ/φ₀)^{1/2} is odd under σ.
        let mut top = x.clone();
        top.set_coeff(0, cx(0.0));
        top.set_coeff(1, cx(0.0));
        let phi = top.shift_down(2)?;
        let mut unit = phi.scale(&x2.inv());
        unit.set_coeff(0, cx(1.0));
        let w = unit.sqrt_unit()?.pad(depth).shift_up(1);
        let winv = w.reversion()?;
        let sigma = winv.compose(&w.negated())?;
        let dy = y.minus(&y.compose(&sigma)?);
        if dy.coeff(1).norm() <= 1e-12 * y.coeff(0).norm().max(1e-300) / b.norm() {
            return Err(Error::Assumption("Y' vanishes at a ramification point".into()));
        }
        let dsigma = sigma.deriv();
        let den = dy.times(&x.deriv()).scale(&cx(2.0)).shift_down(2)?;
        let kernel = Laurent::from_series(&dsigma.truncate(den.order()).times(&den.inv()?), -2);
        // s = ζ v with v = -1 + …
        let v = sigma.shift_down(1)?;
        let vinv = v.inv()?;
        let mut s_pos = vec![Laurent::mono(0, cx(1.0))];
        let mut s_neg = vec![Laurent::mono(0, cx(1.0))];
        let (mut vp, mut vn) = (Series::one(v.order()), Series::one(v.order()));
        for a in 1..=depth {
            vp = vp.times(&v);
            vn = vn.times(&vinv);
            s_pos.push(Laurent::from_series(&vp, a as i32));
            s_neg.push(Laurent::from_series(&vn, -(a as i32)));
        }
        Ok(LocalData { b, depth, x, y, sigma, dy, kernel, s_pos, s_neg })
    }

    /// `β_k`, `k = 1..`, from `s(ζ) = -ζ (1 + Σ β_k ζ^k)`.
    pub fn beta(&self) -> Vec<C64> {
        (2..=self.depth).map(|k| -self.sigma.coeff(k)).collect()
    }

    /// Largest relative `|X(σ(z)) - X(z)|` over points `b + ρ e^{iθ}`, using the exact `X`.
    pub fn involution_residual(&self, curve: &NumericCurve, rho: f64, points: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..points {
            let zeta = C64::from_polar(rho, 2.0 * PI * (j as f64 + 0.25) / points as f64);
            let s = self.sigma.eval(&zeta);
            let x0 = curve.x(self.b);
            let d = (curve.x(self.b + s) - curve.x(self.b + zeta)).norm();
            worst = worst.max(d / (curve.x(self.b + zeta) - x0).norm());
        }
        worst
    }

    /// `s^a` as a Laurent series, `a` of either sign.
    fn s_pow(&self, a: i32) -> &Laurent {
        if a >= 0 {
            &self.s_pos[a as usize]
        } else {
            &self.s_neg[(-a) as usize]
        }
    }
}

/// `ω_{g,n}` in pole-coefficient form.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Omega {
    pub entries: BTreeMap<Key, C64>,
}

impl Omega {
    /// `ω / dz_1⋯dz_n` at the given points.
    pub fn eval(&self, bps: &[C64], z: &[C64]) -> C64 {
        let mut acc = cx(0.0);
        for (key, c) in &self.entries {
            let mut v = *c;
            for (j, (i, k)) in key.iter().enumerate() {
                v /= (z[j] - bps[*i as usize]).powi(*k as i32);
            }
            acc += v;
        }
        acc
    }

    /// Largest pole order in any slot.
    pub fn max_pole(&self) -> usize {
        self.entries.keys().flat_map(|k| k.iter().map(|(_, o)| *o as usize)).max().unwrap_or(0)
    }

    /// Largest pole order in slot `slot` at branchpoint `i` among coefficients above `floor`.
    pub fn pole_order_at(&self, slot: usize, i: usize, floor: f64) -> usize {
        self.entries
            .iter()
            .filter(|(k, c)| k[slot].0 as usize == i && c.norm() > floor)
            .map(|(k, _)| k[slot].1 as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn scale_max(&self) -> f64 {
        self.entries.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// All computed `ω_{g,n}`, keyed by `(g, n)`.
#[derive(Clone, Debug, Default)]
pub struct OmegaSet {
    pub omegas: BTreeMap<(usize, usize), Omega>,
    /// Largest coefficient found beyond the pole bound, relative to the largest kept one.
    pub overflow: f64,
}

/// Local data and pole-series caches for one run.
pub struct TrEngine<'a> {
    pub curve: &'a NumericCurve,
    pub local: Vec<LocalData>,
    depth: usize,
}

impl<'a> TrEngine<'a> {
    /// Local expansion depth `2 (6g - 4 + 2n) + 6 + margin` for the largest target.
    pub fn new(curve: &'a NumericCurve, max_bound: usize, margin: usize) -> Result<Self> {
        let depth = 2 * max_bound + 6 + margin;
        let local = curve.branchpoints.iter().map(|b| LocalData::new(curve, *b, depth)).collect::<Result<Vec<_>>>()?;
        Ok(TrEngine { curve, local, depth })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `(z - b_j)^{-k}` at `z = b_i + ζ`, or at `z = σ_i(b_i + ζ)` when `sigma` is set.
    fn pole(&self, i: usize, j: usize, k: usize, sigma: bool) -> Laurent {
        let ld = &self.local[i];
        if i == j {
            return if sigma { ld.s_pow(-(k as i32)).clone() } else { Laurent::mono(-(k as i32), cx(1.0)) };
        }
        // (d + ζ)^{-k} = Σ_n C(-k, n) d^{-k-n} ζ^n
        let d = ld.b - self.curve.branchpoints[j];
        let n_terms = self.depth;
        let mut coef = d.powi(-(k as i32));
        let mut taylor = Vec::with_capacity(n_terms + 1);
        for n in 0..=n_terms {
            taylor.push(coef);
            coef = coef * (-(k as f64) - n as f64) / ((n + 1) as f64) / d;
        }
        if !sigma {
            return Laurent { lo: 0, hi: n_terms as i32, c: taylor };
        }
        let mut acc = Laurent { lo: 0, hi: n_terms as i32, c: vec![] };
        for (n, c) in taylor.iter().enumerate() {
            acc = acc.plus(&ld.s_pow(n as i32).scale(*c));
        }
        acc
    }

    /// First-slot expansion of `ω_{h,m}(z, C)` at `b_i`, with the other slots placed at
    /// positions `slots` of a key of length `nl`.
    #[allow(clippy::too_many_arguments)]
    fn expand_first(
        &self,
        i: usize,
        h: usize,
        slots: &[usize],
        nl: usize,
        sigma: bool,
        set: &OmegaSet,
        bound: usize,
    ) -> BTreeMap<Key, Laurent> {
        let mut out: BTreeMap<Key, Laurent> = BTreeMap::new();
        if h == 0 && slots.len() == 1 {
            // ω₀,₂(b+ζ, z_j) = Σ_a (a+1) ζ^a (z_j - b_i)^{-a-2}
            for a in 0..=bound {
                let mut key = vec![ABSENT; nl];
                key[slots[0]] = (i as u16, (a + 2) as u16);
                let base = if sigma { self.local[i].s_pow(a as i32).clone() } else { Laurent::mono(a as i32, cx(1.0)) };
                out.insert(key, base.scale(cx((a + 1) as f64)));
            }
            return out;
        }
        let omega = &set.omegas[&(h, slots.len() + 1)];
        for (key, c) in &omega.entries {
            let f = self.pole(i, key[0].0 as usize, key[0].1 as usize, sigma).scale(*c);
            let mut full = vec![ABSENT; nl];
            for (p, s) in slots.iter().enumerate() {
                full[*s] = key[p + 1];
            }
            add_into(&mut out, full, f);
        }
        out
    }

    /// One recursion step for `ω_{g,n}`; the needed lower `ω` must be in `set`.
    pub fn step(&self, g: usize, n: usize, set: &OmegaSet) -> Result<(Omega, f64)> {
        let bound = pole_bound(g, n);
        let nl = n - 1;
        let all: Vec<usize> = (0..nl).collect();
        let mut out = Omega::default();
        let mut overflow: f64 = 0.0;
        for i in 0..self.local.len() {
            let ld = &self.local[i];
            let mut bracket: BTreeMap<Key, Laurent> = BTreeMap::new();
            if g >= 1 {
                if g == 1 && n == 1 {
                    // ω₀,₂(z, σ(z)) = 1/(ζ - s)²
                    let diff = Series::from_coeffs(vec![cx(1.0)], ld.sigma.order() - 1).minus(&ld.sigma.shift_down(1)?);
                    let inv = diff.inv()?;
                    add_into(&mut bracket, vec![], Laurent::from_series(&inv.times(&inv), -2));
                } else {
                    let omega = &set.omegas[&(g - 1, n + 1)];
                    for (key, c) in &omega.entries {
                        let f = self
                            .pole(i, key[0].0 as usize, key[0].1 as usize, false)
                            .times(&self.pole(i, key[1].0 as usize, key[1].1 as usize, true))
                            .scale(*c);
                        add_into(&mut bracket, key[2..].to_vec(), f);
                    }
                }
            }
            for mask in 0u32..(1 << nl) {
                let c1: Vec<usize> = all.iter().copied().filter(|s| mask & (1 << s) != 0).collect();
                let c2: Vec<usize> = all.iter().copied().filter(|s| mask & (1 << s) == 0).collect();
                for h in 0..=g {
                    if (h == 0 && c1.is_empty()) || (h == g && c2.is_empty()) {
                        continue;
                    }
                    let left = self.expand_first(i, h, &c1, nl, false, set, bound);
                    let right = self.expand_first(i, g - h, &c2, nl, true, set, bound);
                    for (k1, l1) in &left {
                        for (k2, l2) in &right {
                            let key: Key = k1.iter().zip(k2).map(|(a, b)| if *a == ABSENT { *b } else { *a }).collect();
                            add_into(&mut bracket, key, l1.times(l2));
                        }
                    }
                }
            }
            for k in 1..=bound + 1 {
                let diff = Laurent::mono(k as i32, cx(1.0)).plus(&ld.s_pow(k as i32).scale(cx(-1.0)));
                let weight = diff.times(&ld.kernel);
                for (key, l) in &bracket {
                    let r = weight.residue_with(l)?;
                    if r == cx(0.0) {
                        continue;
                    }
                    if k + 1 > bound {
                        overflow = overflow.max(r.norm());
                        continue;
                    }
                    let mut full = vec![(i as u16, (k + 1) as u16)];
                    full.extend(key.iter().copied());
                    *out.entries.entry(full).or_insert(cx(0.0)) += r;
                }
            }
        }
        let scale = out.scale_max();
        Ok((out, if scale > 0.0 { overflow / scale } else { overflow }))
    }
}

fn add_into(map: &mut BTreeMap<Key, Laurent>, key: Key, v: Laurent) {
    match map.get_mut(&key) {
        Some(x) => *x = x.plus(&v),
        None => {
            map.insert(key, v);
        }
    }
}

/// Relative size of pole coefficients beyond the bound tolerated as rounding.
pub const OVERFLOW_TOL: f64 = 1e-6;

/// Runs the recursion for every `(g, n)` with `g ≤ g_max`, `n ≤ n_max`, `2g - 2 + n ≥ 1`,
/// computing the lower differentials they depend on.
pub fn tr_compute(curve: &NumericCurve, g_max: usize, n_max: usize, margin: usize) -> Result<OmegaSet> {
    let mut targets: Vec<(usize, usize)> = Vec::new();
    for g in 0..=g_max {
        for n in 1..=n_max {
            if 2 * g + n >= 3 {
                targets.push((g, n));
            }
        }
    }
    // Dependencies: (g-1, n+1) and (h, k) with smaller 2h - 2 + k.
    let mut needed: Vec<(usize, usize)> = Vec::new();
    let mut stack = targets.clone();
    while let Some((g, n)) = stack.pop() {
        if needed.contains(&(g, n)) {
            continue;
        }
        needed.push((g, n));
        if g >= 1 && !(g == 1 && n == 1) {
            stack.push((g - 1, n + 1));
        }
        for h in 0..=g {
            for c in 0..n {
                let (h2, c2) = (g - h, n - 1 - c);
                if (h == 0 && c == 0) || (h2 == 0 && c2 == 0) {
                    continue;
                }
                for (hh, cc) in [(h, c), (h2, c2)] {
                    if !(hh == 0 && cc == 1) {
                        stack.push((hh, cc + 1));
                    }
                }
            }
        }
    }
    needed.sort_by_key(|(g, n)| (2 * g + n, *g));
    let max_bound = needed.iter().map(|(g, n)| pole_bound(*g, *n)).max().unwrap_or(2);
    let engine = TrEngine::new(curve, max_bound, margin)?;
    let mut set = OmegaSet::default();
    for (g, n) in needed {
        let (omega, over) = engine.step(g, n, &set)?;
        if over > OVERFLOW_TOL {
            return Err(Error::Model(format!("omega_{g},{n} has poles beyond order {}: {over:e}", pole_bound(g, n))));
        }
        set.overflow = set.overflow.max(over);
        set.omegas.insert((g, n), omega);
    }
    Ok(set)
}

/// Evaluates a series `Σ_d t^d P_d(x̄)` at complex `t` and `x̄`.
pub fn eval_w<F: Scalar>(w: &Series<Poly<F>>, t: C64, xbar: &[C64]) -> C64 {
    let mut at = [cx(0.0); crate::ring::NVARS];
    at[..xbar.len()].copy_from_slice(xbar);
    let mut acc = cx(0.0);
    let mut tp = cx(1.0);
    for p in w.coeffs() {
        acc += p.eval_c64(&at) * tp;
        tp *= t;
    }
    acc
}

/// The differential built from a generating series at points `z`:
/// `W(X(z_1), …) Π X'(z_j)`, plus `X'X'/(X-X)²` for `(0, 2)`. For `(0, 1)` returns
/// `W₀,₁(X(z)) + Σ p_k X(z)^{k-1}`, to be compared with `Y(z)`.
pub fn oracle_omega<F: Scalar>(
    curve: &NumericCurve,
    w: &Series<Poly<F>>,
    p: &[C64],
    g: usize,
    z: &[C64],
) -> C64 {
    let n = z.len();
    let xs: Vec<C64> = z.iter().map(|zj| curve.x(*zj)).collect();
    let xbar: Vec<C64> = xs.iter().map(|x| x.inv()).collect();
    let v = eval_w(w, curve.t, &xbar);
    if g == 0 && n == 1 {
        return v + p.iter().enumerate().map(|(k, pk)| pk * xs[0].powi(k as i32)).sum::<C64>();
    }
    let mut out = v;
    for zj in z {
        out *= curve.dx(*zj);
    }
    if g == 0 && n == 2 {
        out += curve.dx(z[0]) * curve.dx(z[1]) / (xs[0] - xs[1]).powi(2);
    }
    out
}

/// The recursion side at points `z`: `Y(z)` for `(0,1)`, `1/(z_1 - z_2)²` for `(0,2)`.
pub fn tr_value(curve: &NumericCurve, set: &OmegaSet, g: usize, z: &[C64]) -> Result<C64> {
    let n = z.len();
    match (g, n) {
        (0, 1) => Ok(curve.y(z[0])),
        (0, 2) => Ok((z[0] - z[1]).powi(-2)),
        _ => set
            .omegas
            .get(&(g, n))
            .map(|o| o.eval(&curve.branchpoints, z))
            .ok_or_else(|| Error::Model(format!("omega_{g},{n} was not computed"))),
    }
}

/// One sample of a recursion-versus-series comparison.
#[derive(Clone, Debug)]
pub struct Sample {
    pub z: Vec<C64>,
    pub tr: C64,
    pub oracle: C64,
    pub rel: f64,
    /// Size of the top `t`-order term of the series, relative to the total.
    pub budget: f64,
}

/// Compares recursion output with a generating series at the sample points.
pub fn compare_oracle<F: Scalar>(
    curve: &NumericCurve,
    set: &OmegaSet,
    w: &Series<Poly<F>>,
    p: &[C64],
    g: usize,
    points: &[Vec<C64>],
) -> Result<Vec<Sample>> {
    let mut out = Vec::with_capacity(points.len());
    let top = w.order();
    let mut last = Series::<Poly<F>>::zero(top);
    last.set_coeff(top, w.coeff(top));
    for z in points {
        let min_gap = z
            .iter()
            .flat_map(|zj| curve.branchpoints.iter().map(move |b| (zj - b).norm() / b.norm()))
            .fold(f64::INFINITY, f64::min);
        if min_gap < 1e-3 {
            return Err(Error::Model("sample point too close to a ramification point".into()));
        }
        let tr = tr_value(curve, set, g, z)?;
        let oracle = oracle_omega(curve, w, p, g, z);
        let mut tail = eval_w(&last, curve.t, &z.iter().map(|zj| curve.x(*zj).inv()).collect::<Vec<_>>());
        for zj in z.iter().filter(|_| !(g == 0 && z.len() == 1)) {
            tail *= curve.dx(*zj);
        }
        let rel = (tr - oracle).norm() / oracle.norm().max(1e-300);
        out.push(Sample { z: z.clone(), tr, oracle, rel, budget: tail.norm() / oracle.norm().max(1e-300) });
    }
    Ok(out)
}

/// Sample radius as a fraction of the smallest `|b_i|`. Smaller radii lose digits to
/// cancellation between the pole terms; larger ones feel the truncation of the series.
pub const DEFAULT_SAMPLE_FRACTION: f64 = 1e-3;

/// `count` tuples of `n` points on the circle of radius `fraction · min |b_i|`, spread over
/// distinct angles.
pub fn sample_points(curve: &NumericCurve, n: usize, count: usize, fraction: f64) -> Vec<Vec<C64>> {
    let r = fraction * curve.branchpoints.iter().map(|b| b.norm()).fold(f64::INFINITY, f64::min);
    (0..count)
        .map(|k| {
            (0..n)
                .map(|j| {
                    let ang = 0.3 + 2.0 * PI * (k as f64 / count as f64 + 0.37 * j as f64);
                    C64::from_polar(r * (1.0 + 0.1 * j as f64), ang)
                })
                .collect()
        })
        .collect()
}

/// `K_i(z_1, z) dz = [1/(z_1 - z) - 1/(z_1 - σ(z))] / (2 (Y(z) - Y(σ(z))) X'(z))`, using the
/// exact `X`, `Y` and an involution polished by Newton steps.
pub fn kernel_value(curve: &NumericCurve, ld: &LocalData, z1: C64, zeta: C64) -> (C64, C64, C64) {
    let z = ld.b + zeta;
    let s = sigma_point(curve, ld, zeta);
    let k = ((z1 - z).inv() - (z1 - s).inv()) / (2.0 * (curve.y(z) - curve.y(s)) * curve.dx(z));
    let ds = curve.dx(z) / curve.dx(s);
    (k, s, ds)
}

/// `σ(b + ζ)` from the local series, refined on `X(σ) = X(b + ζ)`.
pub fn sigma_point(curve: &NumericCurve, ld: &LocalData, zeta: C64) -> C64 {
    let target = curve.x(ld.b + zeta);
    let mut s = ld.b + ld.sigma.eval(&zeta);
    for _ in 0..4 {
        let d = curve.dx(s);
        if d.norm() == 0.0 {
            break;
        }
        s -= (curve.x(s) - target) / d;
    }
    s
}

/// Largest `|K(z_1, σ(z)) σ'(z)^{-1}·… |` parity defect: `k(z_1, σ z) - σ'(z) k(z_1, z)`
/// relative to `|k(z_1, σ z)|` over points on a circle of radius `rho` around `b_i`.
pub fn kernel_parity(curve: &NumericCurve, ld: &LocalData, z1: C64, rho: f64, points: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..points {
        let zeta = C64::from_polar(rho, 2.0 * PI * (j as f64 + 0.5) / points as f64);
        let (k, s, ds) = kernel_value(curve, ld, z1, zeta);
        let (ks, _, _) = kernel_value(curve, ld, z1, s - ld.b);
        worst = worst.max((ks - ds * k).norm() / ks.norm());
    }
    worst
}

/// `ω₀,₃(z_1, z_2, z_3)` by trapezoidal contour integrals of radius `rho_i` around each
/// ramification point.
pub fn omega03_quadrature(curve: &NumericCurve, local: &[LocalData], z: [C64; 3], rho: &[f64], points: usize) -> C64 {
    let mut total = cx(0.0);
    for (ld, r) in local.iter().zip(rho) {
        let mut acc = cx(0.0);
        for j in 0..points {
            let e = C64::from_polar(1.0, 2.0 * PI * j as f64 / points as f64);
            let zeta = e * *r;
            let (k, s, ds) = kernel_value(curve, ld, z[0], zeta);
            let w = ld.b + zeta;
            let b = |a: C64, c: C64| (a - c).powi(-2);
            let f = k * (b(w, z[1]) * b(s, z[2]) + b(w, z[2]) * b(s, z[1])) * ds;
            acc += f * zeta;
        }
        total += acc / points as f64;
    }
    total
}
