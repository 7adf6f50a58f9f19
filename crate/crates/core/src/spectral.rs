//! The spectral curve: `A⁽ᶜ⁾`, `B⁽ᶜ⁾`, `η`, `θ`, the series `Z(x)`, closed forms for
//! `W₀,₁` and `W₀,₂`, and ramification points.
//!
//! `A⁽ᶜ⁾` is a polynomial of degree `D₂` in `z`, `B⁽ᶜ⁾` a polynomial of degree `D₁` in
//! `w = 1/z`, both with coefficients in `F[[t]]`:
//!
//! ```text
//! A⁽ᶜ⁾ = 1 + u_c Σ_s q_s t^s {z^s P_B^s / B⁽ᶜ⁾}^≥      P_B = Π_I B / Π_J B · e^{u₋₁θ}
//! B⁽ᶜ⁾ = 1 + u_c Σ_s p_s [z^{-s} P_A^s / A⁽ᶜ⁾]^<     P_A = Π_I A / Π_J A · e^{u₋₁η}
//! ```
//!
//! and `η`, `θ` solve the same equations without `u_c` and the division. Colors are
//! handled per class with a multiplicity, so a class of `N = 10⁶` equal colors costs
//! one binary exponentiation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{Error, ModelParams, Result, Side};
use crate::ring::{lift, unit_mono, Poly, Ring, Scalar, Series, WSeries, ZLaurent, C64, Q};
use crate::roots::{min_relative_gap, poly_roots, DPoly};

/// A color class as seen by the solver.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassInfo<F> {
    pub side: Side,
    pub u: F,
    pub mult: u64,
}

/// Solution of the defining system through `t^order`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData<F> {
    pub params: ModelParams<F>,
    pub order: usize,
    /// Classes `I` first, then `J`, in parameter order.
    pub classes: Vec<ClassInfo<F>>,
    /// `A⁽ᶜ⁾`: coefficient `k` multiplies `z^k`.
    pub a: Vec<WSeries<F>>,
    /// `B⁽ᶜ⁾`: coefficient `k` multiplies `z^{-k}`.
    pub b: Vec<WSeries<F>>,
    /// `η`, identically zero without the exponential parameter.
    pub eta: WSeries<F>,
    /// `θ`, coefficient `k` multiplies `z^{-k}`.
    pub theta: WSeries<F>,
}

fn classes_of<F: Scalar>(params: &ModelParams<F>) -> Vec<ClassInfo<F>> {
    let mut out = Vec::new();
    for c in &params.num {
        out.push(ClassInfo { side: Side::Num, u: c.u.clone(), mult: c.mult });
    }
    for c in &params.den {
        out.push(ClassInfo { side: Side::Den, u: c.u.clone(), mult: c.mult });
    }
    out
}

/// Like `ModelParams::validate`, but zero color parameters are allowed: such a color
/// has `A = B = 1` and drops out.
fn check_params<F: Scalar>(params: &ModelParams<F>) -> Result<()> {
    if params.m() + params.r() == 0 && params.u_exp.is_none() {
        return Err(Error::Model("need at least one color or an exponential parameter".into()));
    }
    if params.p.is_empty() || params.q.is_empty() {
        return Err(Error::Model("need D1 >= 1 and D2 >= 1".into()));
    }
    if params.num.iter().chain(&params.den).any(|c| c.mult == 0) {
        return Err(Error::Model("color multiplicity must be positive".into()));
    }
    Ok(())
}

/// `Π_I v^{mult} / Π_J v^{mult} · e^{u₋₁ extra}` through degree `deg` in the auxiliary variable.
fn side_product<F: Scalar>(
    classes: &[ClassInfo<F>],
    vals: &[WSeries<F>],
    u_exp: Option<&F>,
    extra: &WSeries<F>,
    deg: usize,
    order: usize,
) -> Result<WSeries<F>> {
    let mut acc = WSeries::one(deg, order);
    for (c, v) in classes.iter().zip(vals) {
        let f = match c.side {
            Side::Num => v.pow_trunc(c.mult, deg),
            Side::Den => v.inv(deg)?.pow_trunc(c.mult, deg),
        };
        acc = acc.times_trunc(&f, deg);
    }
    if let Some(u) = u_exp {
        let e = extra.scale(&Series::constant(u.clone(), order)).exp_trunc(deg)?;
        acc = acc.times_trunc(&e, deg);
    }
    Ok(acc)
}

fn pad_w<F: Scalar>(v: &WSeries<F>, order: usize) -> WSeries<F> {
    WSeries::polynomial(v.coeffs().iter().map(|s| s.pad(order)).collect())
}

/// New `A⁽ᶜ⁾` and `η` from `B⁽ᶜ⁾` and `θ`.
fn a_side<F: Scalar>(
    params: &ModelParams<F>,
    classes: &[ClassInfo<F>],
    b: &[WSeries<F>],
    theta: &WSeries<F>,
    order: usize,
) -> Result<(Vec<WSeries<F>>, WSeries<F>)> {
    let d2 = params.d2();
    let pb = side_product(classes, b, params.u_exp.as_ref(), theta, d2, order)?;
    let pows: Vec<WSeries<F>> = (1..=d2).map(|s| pb.pow_trunc(s as u64, s)).collect();
    let weights: Vec<Series<F>> = (1..=d2).map(|s| Series::monomial(params.q_at(s), s, order)).collect();
    // Σ_s q_s t^s [w^{s-j}] f_s  for j = 0..=D₂.
    let collect = |f: &dyn Fn(usize) -> WSeries<F>| {
        let mut out = vec![Series::zero(order); d2 + 1];
        for s in 1..=d2 {
            if weights[s - 1].is_zero() {
                continue;
            }
            let fs = f(s);
            for (j, o) in out.iter_mut().enumerate().take(s + 1) {
                o.add_in(&fs.coeff(s - j).times(&weights[s - 1]));
            }
        }
        out
    };
    let eta = WSeries::polynomial(collect(&|s| pows[s - 1].clone()));
    let mut a = Vec::with_capacity(classes.len());
    for (c, bc) in classes.iter().zip(b) {
        let inv_b = bc.inv(d2)?;
        let sum = collect(&|s| pows[s - 1].times_trunc(&inv_b, s));
        let mut coeffs: Vec<Series<F>> = sum.iter().map(|x| x.scale(&c.u)).collect();
        coeffs[0].add_in(&Series::one(order));
        a.push(WSeries::polynomial(coeffs));
    }
    Ok((a, eta))
}

/// New `B⁽ᶜ⁾` and `θ` from `A⁽ᶜ⁾` and `η`.
fn b_side<F: Scalar>(
    params: &ModelParams<F>,
    classes: &[ClassInfo<F>],
    a: &[WSeries<F>],
    eta: &WSeries<F>,
    order: usize,
) -> Result<(Vec<WSeries<F>>, WSeries<F>)> {
    let d1 = params.d1();
    let pa = side_product(classes, a, params.u_exp.as_ref(), eta, d1 - 1, order)?;
    let pows: Vec<WSeries<F>> = (1..=d1).map(|s| pa.pow_trunc(s as u64, s - 1)).collect();
    let ps: Vec<F> = (1..=d1).map(|s| params.p_at(s)).collect();
    // Σ_s p_s [z^{s-j}] f_s  for j = 1..=D₁, stored at index j.
    let collect = |f: &dyn Fn(usize) -> WSeries<F>| {
        let mut out = vec![Series::zero(order); d1 + 1];
        for s in 1..=d1 {
            if ps[s - 1].is_zero() {
                continue;
            }
            let fs = f(s);
            for (j, o) in out.iter_mut().enumerate().take(s + 1).skip(1) {
                o.add_in(&fs.coeff(s - j).scale(&ps[s - 1]));
            }
        }
        out
    };
    let theta = WSeries::polynomial(collect(&|s| pows[s - 1].clone()));
    let mut b = Vec::with_capacity(classes.len());
    for (c, ac) in classes.iter().zip(a) {
        let inv_a = ac.inv(d1 - 1)?;
        let sum = collect(&|s| pows[s - 1].times_trunc(&inv_a, s - 1));
        let mut coeffs: Vec<Series<F>> = sum.iter().map(|x| x.scale(&c.u)).collect();
        coeffs[0] = Series::one(order);
        b.push(WSeries::polynomial(coeffs));
    }
    Ok((b, theta))
}

/// Solves the defining system through `t^order`.
///
/// Pass `k` works at truncation order `k`. It rebuilds `A` and `η` from the previous
/// `B` and `θ` (every term carries `t^s` with `s ≥ 1`, so one order is gained) and then
/// `B` and `θ` from the new `A` and `η`. After pass `k` everything is exact through `t^k`.
pub fn solve_system<F: Scalar>(params: &ModelParams<F>, order: usize) -> Result<SpectralData<F>> {
    check_params(params)?;
    let classes = classes_of(params);
    let (d1, d2) = (params.d1(), params.d2());
    let mut a = vec![WSeries::one(d2, 0); classes.len()];
    let mut b = vec![WSeries::one(d1, 0); classes.len()];
    let mut eta = WSeries::zero(d2, 0);
    let mut theta = WSeries::zero(d1, 0);
    for k in 0..=order {
        let bk: Vec<_> = b.iter().map(|v| pad_w(v, k)).collect();
        let (na, ne) = a_side(params, &classes, &bk, &pad_w(&theta, k), k)?;
        let (nb, nt) = b_side(params, &classes, &na, &ne, k)?;
        a = na;
        eta = ne;
        b = nb;
        theta = nt;
    }
    Ok(SpectralData { params: params.clone(), order, classes, a, b, eta, theta })
}

fn max_diff<F: Scalar>(x: &WSeries<F>, y: &WSeries<F>) -> f64 {
    let d = x.minus(y);
    d.coeffs().iter().flat_map(|s| s.coeffs().iter().map(|c| c.magnitude())).fold(0.0, f64::max)
}

fn laurent_max<F: Scalar>(x: &ZLaurent<F>) -> f64 {
    let Some((lo, hi)) = x.range() else { return 0.0 };
    (lo..=hi).flat_map(|k| x.coeff(k).coeffs().iter().map(|c| c.magnitude()).collect::<Vec<_>>()).fold(0.0, f64::max)
}

fn series_poly_max<F: Scalar>(x: &Series<Poly<F>>) -> f64 {
    x.coeffs().iter().flat_map(|p| p.terms().map(|(_, c)| c.magnitude()).collect::<Vec<_>>()).fold(0.0, f64::max)
}

/// Largest coefficient magnitude of a series with polynomial coefficients.
pub fn poly_series_norm<F: Scalar>(x: &Series<Poly<F>>) -> f64 {
    series_poly_max(x)
}

impl<F: Scalar> SpectralData<F> {
    /// Largest coefficient of the defining equations after substituting the solution.
    /// Exactly zero in exact arithmetic.
    pub fn residual(&self) -> Result<f64> {
        let (a2, e2) = a_side(&self.params, &self.classes, &self.b, &self.theta, self.order)?;
        let (b2, t2) = b_side(&self.params, &self.classes, &self.a, &self.eta, self.order)?;
        let mut r = max_diff(&e2, &self.eta).max(max_diff(&t2, &self.theta));
        for c in 0..self.classes.len() {
            r = r.max(max_diff(&a2[c], &self.a[c])).max(max_diff(&b2[c], &self.b[c]));
        }
        Ok(r)
    }

    pub fn a_laurent(&self, c: usize) -> ZLaurent<F> {
        ZLaurent::from_pos(&self.a[c])
    }

    pub fn b_laurent(&self, c: usize) -> ZLaurent<F> {
        ZLaurent::from_neg(&self.b[c])
    }

    pub fn eta_laurent(&self) -> ZLaurent<F> {
        ZLaurent::from_pos(&self.eta)
    }

    pub fn theta_laurent(&self) -> ZLaurent<F> {
        ZLaurent::from_neg(&self.theta)
    }

    /// `ū_c (A⁽ᶜ⁾ B⁽ᶜ⁾ - 1)`, `None` for a zero color parameter.
    pub fn h_color(&self, c: usize) -> Option<ZLaurent<F>> {
        let inv = self.classes[c].u.try_inv()?;
        let one = ZLaurent::new(0, vec![Series::one(self.order)], self.order);
        let ab = self.a_laurent(c).times(&self.b_laurent(c)).minus(&one);
        Some(ab.scale(&Series::constant(inv, self.order)))
    }

    /// `H(z)`: from the first color with a nonzero parameter, or `η + θ` for a purely
    /// exponential weight (the limit of `H` for a class of `N` colors `u₋₁/N`).
    pub fn h(&self) -> Result<ZLaurent<F>> {
        if let Some(h) = (0..self.classes.len()).find_map(|c| self.h_color(c)) {
            return Ok(h);
        }
        if self.params.u_exp.is_some() {
            return Ok(self.eta_laurent().plus(&self.theta_laurent()));
        }
        Err(Error::Model("H needs a color with a nonzero parameter".into()))
    }

    /// Largest coefficient of `H⁽ᶜ⁾ - H⁽ᶜ'⁾` over all pairs, including `η + θ` with the
    /// exponential weight.
    pub fn h_mismatch(&self) -> Result<f64> {
        let h = self.h()?;
        let mut r: f64 = 0.0;
        for c in 0..self.classes.len() {
            if let Some(hc) = self.h_color(c) {
                r = r.max(laurent_max(&hc.minus(&h)));
            }
        }
        if self.params.u_exp.is_some() {
            r = r.max(laurent_max(&self.eta_laurent().plus(&self.theta_laurent()).minus(&h)));
        }
        Ok(r)
    }

    /// `Φ(z) = z X(z) = e^{u₋₁η} Π_I A / Π_J A` through `z^deg`. Graded: the `z^k`
    /// coefficient is `O(t^k)`, so `deg = T` loses nothing at order `T`.
    pub fn phi(&self, deg: usize) -> Result<WSeries<F>> {
        side_product(&self.classes, &self.a, self.params.u_exp.as_ref(), &self.eta, deg, self.order)
    }

    /// `Z(x)` as a series in `t` with polynomial coefficients in `x̄` (variable 0),
    /// from `Z = x̄ Φ(Z)`.
    pub fn z_series(&self) -> Result<Series<Poly<F>>> {
        let order = self.order;
        let phi = self.phi(order)?.map(|c| Poly::constant(c.clone()));
        let xb = Series::constant(Poly::var(0), order);
        let mut z = xb.clone();
        for _ in 0..=order {
            z = xb.times(&phi.compose(&z)?);
        }
        Ok(z)
    }

    /// `Y(Z(x)) = x̄ H(Z)`; contains negative powers of `x̄`.
    pub fn y_of_z(&self, z: &Series<Poly<F>>) -> Result<Series<Poly<F>>> {
        let order = self.order;
        let h = self.h()?;
        let Some((lo, hi)) = h.range() else { return Ok(Series::zero(order)) };
        // 1/Z = x / Φ(Z) and Φ(Z) = x Z.
        let phi_z = z.map(|p| p.shift(&unit_mono(0, -1)));
        let zinv = phi_z.inv()?.map(|p| p.shift(&unit_mono(0, -1)));
        let mut acc = Series::<Poly<F>>::zero(order);
        let mut pos = Series::one(order);
        for k in 0..=hi.max(0) {
            if k >= lo {
                acc.add_in(&pos.times(&lift(&h.coeff(k))));
            }
            pos = pos.times(z);
        }
        let mut neg = zinv.clone();
        for k in 1..=(-lo).max(0) {
            if -k <= hi {
                acc.add_in(&neg.times(&lift(&h.coeff(-k))));
            }
            neg = neg.times(&zinv);
        }
        Ok(acc.map(|p| p.shift(&unit_mono(0, 1))))
    }

    /// `W₀,₁(x) = Y(Z(x)) - Σ p_k x^{k-1}`.
    pub fn w01(&self) -> Result<Series<Poly<F>>> {
        let z = self.z_series()?;
        self.w01_from(&z)
    }

    pub fn w01_from(&self, z: &Series<Poly<F>>) -> Result<Series<Poly<F>>> {
        let mut y = self.y_of_z(z)?;
        let mut c0 = y.coeff(0);
        for k in 1..=self.params.d1() {
            c0.add_term(unit_mono(0, 1 - k as i16), &self.params.p_at(k).negated());
        }
        y.set_coeff(0, c0);
        strip_nonpositive(y, "W01")
    }

    /// `W₀,₂(x₁, x₂)` in variables 0 and 1:
    /// `x̄₁²x̄₂² [Ż₁Ż₂ R⁻² - 1] / (x̄₁ - x̄₂)²` with `Ż = dZ/dx̄` and `R = (Z₁ - Z₂)/(x̄₁ - x̄₂)`.
    pub fn w02(&self) -> Result<Series<Poly<F>>> {
        let z = self.z_series()?;
        self.w02_from(&z)
    }

    pub fn w02_from(&self, z: &Series<Poly<F>>) -> Result<Series<Poly<F>>> {
        let swap = [1usize, 0, 2, 3, 4, 5];
        let z2 = z.map(|p| p.rename(&swap));
        let dz1 = z.map(|p| p.deriv(0));
        let dz2 = dz1.map(|p| p.rename(&swap));
        let diff = z.minus(&z2);
        let mut rc = Vec::with_capacity(self.order + 1);
        for p in diff.coeffs() {
            rc.push(p.div_difference(0, 1)?);
        }
        let r = Series::from_coeffs(rc, self.order);
        let rinv = r.inv()?;
        let num = dz1.times(&dz2).times(&rinv).times(&rinv).minus(&Series::one(self.order));
        if F::is_exact() && !num.coeff(0).is_zero() {
            return Err(Error::Model("W02 numerator has a nonzero t^0 term".into()));
        }
        let mut out = Vec::with_capacity(self.order + 1);
        let sq = {
            let mut m = unit_mono(0, 2);
            m[1] = 2;
            m
        };
        for (k, p) in num.coeffs().iter().enumerate() {
            if k == 0 {
                out.push(Poly::zero());
                continue;
            }
            out.push(p.div_difference(0, 1)?.div_difference(0, 1)?.shift(&sq));
        }
        Ok(Series::from_coeffs(out, self.order))
    }

    /// Largest coefficient of `X(Z(x)) - x`, i.e. of `Z - x̄ Φ(Z)`.
    pub fn inverse_residual(&self, z: &Series<Poly<F>>) -> Result<f64> {
        let phi = self.phi(self.order)?.map(|c| Poly::constant(c.clone()));
        let xb = Series::constant(Poly::var(0), self.order);
        Ok(series_poly_max(&z.minus(&xb.times(&phi.compose(z)?))))
    }

    /// Numeric copy of the data.
    pub fn to_c64(&self) -> SpectralData<C64> {
        let f = |x: &F| x.to_c64();
        SpectralData {
            params: self.params.map(f),
            order: self.order,
            classes: self.classes.iter().map(|c| ClassInfo { side: c.side, u: f(&c.u), mult: c.mult }).collect(),
            a: self.a.iter().map(|v| v.map(f)).collect(),
            b: self.b.iter().map(|v| v.map(f)).collect(),
            eta: self.eta.map(f),
            theta: self.theta.map(f),
        }
    }

    /// Size of the last retained term, `max |c_T| |t|^T` over all coefficient series of
    /// `A` and `B`: a heuristic for the truncation error at a numeric `t`.
    pub fn tail_estimate(&self, t: f64) -> f64 {
        let tp = num_traits::Float::powi(t, self.order as i32);
        self.all_series().map(|s| s.coeff(self.order).magnitude() * tp).fold(0.0, f64::max)
    }

    /// Largest ratio `|c_T t| / |c_{T-1}|` over the coefficient series: below one when
    /// the order-by-order iteration contracts at `t`.
    pub fn contraction_estimate(&self, t: f64) -> f64 {
        let n = self.order;
        if n == 0 {
            return 0.0;
        }
        self.all_series()
            .filter_map(|s| {
                let prev = s.coeff(n - 1).magnitude();
                (prev > 0.0).then(|| s.coeff(n).magnitude() * t / prev)
            })
            .fold(0.0, f64::max)
    }

    fn all_series(&self) -> impl Iterator<Item = &Series<F>> {
        self.a
            .iter()
            .chain(&self.b)
            .chain(core::iter::once(&self.eta))
            .chain(core::iter::once(&self.theta))
            .flat_map(|w| w.coeffs().iter())
    }
}

fn strip_nonpositive<F: Scalar>(y: Series<Poly<F>>, what: &str) -> Result<Series<Poly<F>>> {
    let order = y.order();
    let mut out = Vec::with_capacity(order + 1);
    for (k, p) in y.coeffs().iter().enumerate() {
        let bad = p.filter(|m| m[0] <= 0);
        if F::is_exact() && !bad.is_zero() {
            return Err(Error::Model(format!("{what} has nonpositive powers of x̄ at t^{k}")));
        }
        out.push(p.filter(|m| m[0] > 0));
    }
    Ok(Series::from_coeffs(out, order))
}

// ---------------------------------------------------------------------------
// Insertion identity
// ---------------------------------------------------------------------------

/// `Γ_{x₂} f = Σ_k (p_k / k) [x₂^{-k-1}] f`, reading `x₂` as variable 1.
pub fn insertion<F: Scalar>(f: &Series<Poly<F>>, p: &[F]) -> Series<Poly<F>> {
    f.map(|poly| {
        let mut out = Poly::zero();
        for (m, c) in poly.terms() {
            let k = m[1] as i64 - 1;
            if k >= 1 && (k as usize) <= p.len() {
                let mut mm = *m;
                mm[1] = 0;
                out.add_term(mm, &c.times(&p[k as usize - 1]).times(&F::from_ratio(1, k)));
            }
        }
        out
    })
}

/// Left and right sides of the insertion identity, one series per interpolation node.
pub type InsertionSides = (Vec<Series<Poly<Q>>>, Vec<Series<Poly<Q>>>);

/// Both sides of `∂_α Y(Z(x)) = Γ_{x₂}[W₀,₂(x, x₂) + 1/(x - x₂)²]` for the model with `p`
/// replaced by `α p`, at `α = 0, 1, …, T + 1`.
///
/// Each `t`-coefficient is a polynomial of degree at most `T` in `α`, so the left side is
/// the exact derivative of the interpolant through these points.
pub fn insertion_sides(params: &ModelParams<Q>, order: usize) -> Result<InsertionSides> {
    let npts = order + 2;
    let alphas: Vec<Q> = (0..npts).map(|i| Q::from_int(i as i64)).collect();
    let mut ys = Vec::with_capacity(npts);
    let mut rhs = Vec::with_capacity(npts);
    for al in &alphas {
        let pa = params.scale_p(al);
        let sd = solve_system(&pa, order)?;
        let z = sd.z_series()?;
        ys.push(sd.y_of_z(&z)?);
        let mut g = insertion(&sd.w02_from(&z)?, &params.p);
        // Γ_{x₂} 1/(x - x₂)² = Σ p_k x^{k-1}.
        let mut c0 = g.coeff(0);
        for (k, pk) in params.p.iter().enumerate() {
            c0.add_term(unit_mono(0, -(k as i16)), pk);
        }
        g.set_coeff(0, c0);
        rhs.push(g);
    }
    // Derivative of the Lagrange interpolant at each node.
    let mut lhs = Vec::with_capacity(npts);
    for j in 0..npts {
        let mut acc = Series::<Poly<Q>>::zero(order);
        for (i, y) in ys.iter().enumerate() {
            let w = lagrange_deriv(&alphas, i, j);
            if !w.is_zero() {
                acc.add_in(&y.map(|p| p.scale(&w)));
            }
        }
        lhs.push(acc);
    }
    Ok((lhs, rhs))
}

/// `L_i'(α_j)` for the Lagrange basis on the nodes `xs`.
fn lagrange_deriv(xs: &[Q], i: usize, j: usize) -> Q {
    let n = xs.len();
    if i == j {
        let mut s = Q::zero();
        for k in 0..n {
            if k != j {
                s.add_in(&(xs[j].minus(&xs[k])).inv());
            }
        }
        return s;
    }
    // Π_{k≠i,j}(α_j - α_k) / Π_{k≠i}(α_i - α_k)
    let mut num = Q::one();
    let mut den = Q::one();
    for k in 0..n {
        if k != i && k != j {
            num = num.times(&xs[j].minus(&xs[k]));
        }
        if k != i {
            den = den.times(&xs[i].minus(&xs[k]));
        }
    }
    num.div(&den)
}

// ---------------------------------------------------------------------------
// Ramification points
// ---------------------------------------------------------------------------

/// Color parameters after cancelling equal values between `I` and `J`, with signed net
/// multiplicities. Zero parameters are dropped.
pub fn net_classes<F: Scalar>(params: &ModelParams<F>) -> Vec<(F, i64)> {
    let mut out: Vec<(F, i64)> = Vec::new();
    let all = params.num.iter().map(|c| (c, 1i64)).chain(params.den.iter().map(|c| (c, -1i64)));
    for (c, sign) in all {
        if c.u.is_zero() {
            continue;
        }
        match out.iter_mut().find(|(u, _)| *u == c.u) {
            Some(e) => e.1 += sign * c.mult as i64,
            None => out.push((c.u.clone(), sign * c.mult as i64)),
        }
    }
    out.retain(|(_, n)| *n != 0);
    out
}

/// The cleared numerator `P(a)` of `d/da (a⁻¹ G(Q(a)))`:
/// `P = -Π + a Q'(a) [u₋₁ Π + Σ_c n_c u_c Π / (1 + u_c Q)]` with `Π = Π_c (1 + u_c Q)^{|n_c|}`
/// over numerator classes and the reciprocal for denominator classes.
///
/// Denominator factors are cleared too, so `P = Π_{num}(1+uQ)^n Π_{den}(1+uQ)^n · (…)`.
pub fn ramification_polynomial<F: Scalar>(params: &ModelParams<F>) -> DPoly<F> {
    let d2 = params.d2();
    let qpoly = DPoly::new((0..=d2).map(|k| params.q_at(k)).collect());
    let dq = qpoly.deriv();
    let net = net_classes(params);
    let factors: Vec<DPoly<F>> =
        net.iter().map(|(u, _)| DPoly::constant(F::one()).plus(&qpoly.scale(u))).collect();
    let full = |skip: Option<usize>| {
        let mut acc = DPoly::constant(F::one());
        for (i, (f, (_, n))) in factors.iter().zip(&net).enumerate() {
            let e = n.unsigned_abs() - (skip == Some(i)) as u64;
            acc = acc.times(&f.pow(e));
        }
        acc
    };
    let pi = full(None);
    let mut s = match &params.u_exp {
        Some(u) => pi.scale(u),
        None => DPoly::new(Vec::new()),
    };
    for (i, (u, n)) in net.iter().enumerate() {
        s = s.plus(&full(Some(i)).scale(&u.times(&F::from_int(*n))));
    }
    dq.shift(1).times(&s).minus(&pi)
}

/// Initial ramification points: the roots of [`ramification_polynomial`], sorted by real
/// then imaginary part. Rejects models where the polynomial has fewer roots than
/// `(M + [u₋₁ ≠ 0]) D₂`, where a root vanishes, where two roots are closer than `gap`
/// (relative) or where `Σ k q_k a^k` vanishes at a root.
pub fn initial_ramification<F: Scalar>(params: &ModelParams<F>, gap: f64) -> Result<Vec<C64>> {
    check_params(params)?;
    let p = ramification_polynomial(params);
    let weight: i64 = net_classes(params).iter().map(|(_, n)| n.abs()).sum::<i64>() + params.u_exp.is_some() as i64;
    let expect = weight as usize * params.d2();
    if p.degree() != Some(expect) {
        return Err(Error::Assumption(format!(
            "the ramification equation has degree {:?} instead of {expect}; some initial ramification points are missing",
            p.degree()
        )));
    }
    let mut roots = poly_roots(&p.to_c64())?;
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if roots.iter().any(|z| z.norm() <= 1e-12 * scale) {
        return Err(Error::Assumption("an initial ramification point is zero".into()));
    }
    if roots.len() > 1 && min_relative_gap(&roots) <= gap {
        return Err(Error::Assumption("initial ramification points are not distinct".into()));
    }
    let dq = DPoly::new((0..=params.d2()).map(|k| params.q_at(k)).collect()).deriv().shift(1).to_c64();
    for z in &roots {
        let v = dq.eval_c(*z);
        let size: f64 = (1..=params.d2()).map(|k| params.q_at(k).magnitude() * num_traits::Float::powi(z.norm(), k as i32)).sum();
        if v.norm() <= 1e-10 * size.max(1e-300) {
            return Err(Error::Assumption("Σ k q_k a^k vanishes at an initial ramification point".into()));
        }
    }
    Ok(roots)
}

/// A formal ramification point `b(t) = β(t)/t` with `β(0) = a`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalBranchpoint {
    pub a: C64,
    /// `β(t)` through `t^depth`.
    pub beta: Series<C64>,
    /// Largest coefficient of the defining equation at `β` after the iteration.
    pub residual: f64,
}

impl FormalBranchpoint {
    /// Coefficients of `b(t)` starting at `t^{-1}`.
    pub fn laurent_coeffs(&self) -> &[C64] {
        self.beta.coeffs()
    }

    pub fn eval(&self, t: C64) -> C64 {
        self.beta.eval(&t) / t
    }
}

/// Net classes with the `A` data of one representative: `(index, net multiplicity)`.
fn net_reps<F: Scalar>(sd: &SpectralData<F>) -> Vec<(usize, i64)> {
    let mut out: Vec<(usize, i64)> = Vec::new();
    for (i, c) in sd.classes.iter().enumerate() {
        if c.u.is_zero() {
            continue;
        }
        let sign = if c.side == Side::Num { 1 } else { -1 };
        match out.iter_mut().find(|(j, _)| sd.classes[*j].u == c.u) {
            Some(e) => e.1 += sign * c.mult as i64,
            None => out.push((i, sign * c.mult as i64)),
        }
    }
    out.retain(|(_, n)| *n != 0);
    out
}

/// Expands every formal ramification point to `t^depth` by Newton iteration on
/// `X'/X = 0` written in `β = t b`:
/// `-1/β + Σ n_c Ã_c'(β)/Ã_c(β) + u₋₁ η̃'(β) = 0` with `Ã_c(β) = Σ_k t^{-k} A_{c,k} β^k`.
/// The derivative is frozen at `t = 0`; each step gains one order.
pub fn formal_branchpoints<F: Scalar>(sd: &SpectralData<F>, depth: usize, gap: f64) -> Result<Vec<FormalBranchpoint>> {
    let d2 = sd.params.d2();
    if depth + d2 > sd.order {
        return Err(Error::Model(format!("depth {depth} needs the spectral data through t^{}", depth + d2)));
    }
    let roots = initial_ramification(&sd.params, gap)?;
    let tilde = |w: &WSeries<F>| -> Result<Vec<Series<C64>>> {
        (0..=d2).map(|k| Ok(w.coeff(k).shift_down(k)?.truncate(depth).map(|c| c.to_c64()))).collect()
    };
    let mut reps: Vec<(Vec<Series<C64>>, i64)> = Vec::new();
    for (i, n) in net_reps(sd) {
        reps.push((tilde(&sd.a[i])?, n));
    }
    let eta = match &sd.params.u_exp {
        Some(u) => Some((tilde(&sd.eta)?, u.to_c64())),
        None => None,
    };
    let eval = |coef: &[Series<C64>], beta: &Series<C64>, order: usize| -> (Series<C64>, Series<C64>) {
        let mut v = Series::zero(order);
        let mut dv = Series::zero(order);
        for k in (0..coef.len()).rev() {
            let ck = coef[k].truncate(order);
            v = v.times(beta).plus(&ck);
            if k >= 1 {
                dv = dv.times(beta).plus(&ck.scale(&C64::new(k as f64, 0.0)));
            }
        }
        (v, dv)
    };
    let f = |beta: &Series<C64>, order: usize| -> Result<Series<C64>> {
        let mut acc = beta.inv()?.negated();
        for (coef, n) in &reps {
            let (v, dv) = eval(coef, beta, order);
            acc.add_in(&dv.times(&v.inv()?).scale(&C64::new(*n as f64, 0.0)));
        }
        if let Some((coef, u)) = &eta {
            acc.add_in(&eval(coef, beta, order).1.scale(u));
        }
        Ok(acc)
    };
    let mut out = Vec::with_capacity(roots.len());
    for a in roots {
        // Derivative at t = 0 from a first-order perturbation of β.
        let probe = Series::from_coeffs(vec![a, C64::new(1.0, 0.0)], 1);
        let reps0: Vec<(Vec<Series<C64>>, i64)> =
            reps.iter().map(|(c, n)| (c.iter().map(|s| Series::constant(s.coeff(0), 1)).collect(), *n)).collect();
        let mut f0 = probe.inv()?.negated();
        for (coef, n) in &reps0 {
            let (v, dv) = eval(coef, &probe, 1);
            f0.add_in(&dv.times(&v.inv()?).scale(&C64::new(*n as f64, 0.0)));
        }
        if let Some((coef, u)) = &eta {
            let c0: Vec<Series<C64>> = coef.iter().map(|s| Series::constant(s.coeff(0), 1)).collect();
            f0.add_in(&eval(&c0, &probe, 1).1.scale(u));
        }
        let fprime = f0.coeff(1);
        if fprime.norm() <= 1e-12 * (1.0 + f0.coeff(0).norm()) {
            return Err(Error::Assumption("ramification equation is degenerate at an initial point".into()));
        }
        let mut beta = Series::constant(a, depth);
        for _ in 0..=depth {
            let r = f(&beta, depth)?;
            beta = beta.minus(&r.scale(&fprime.inv()));
        }
        let r = f(&beta, depth)?;
        let residual = r.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
        out.push(FormalBranchpoint { a, beta, residual });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Critical values of the all-ones models
// ---------------------------------------------------------------------------

/// Critical point of the `D₁ = D₂ = 1`, `u_I ≡ 1`, `u_J ≡ -1`, `p = q = 1` model.
///
/// With `U = A₀⁽ⁱ⁾`, `V = A₀⁽ʲ⁾` the system reads
/// `U = 1 + t U^m V^{-r} ((m-1)/U + r/V)`, `V = 1 - t U^m V^{-r} (m/U + (r+1)/V)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint {
    pub t: f64,
    /// The polynomial whose root locates the critical point, lowest degree first.
    pub equation: DPoly<Q>,
    /// The root of `equation` that was used.
    pub root: f64,
}

fn qi(n: i64) -> Q {
    Q::from_int(n)
}

/// `c · Π` of the linear factors `(x - r_k)` given as `(const, slope)` pairs, skipping one.
fn product_except(factors: &[(i64, i64)], skip: usize) -> DPoly<Q> {
    let mut acc = DPoly::constant(qi(1));
    for (i, &(c, s)) in factors.iter().enumerate() {
        if i != skip {
            acc = acc.times(&DPoly::linear(qi(c), qi(s)));
        }
    }
    acc
}

/// Numerator of a sum `Σ_i w_i (log ℓ_i)'` of logarithmic derivatives of linear factors
/// `ℓ_i = c_i + s_i x`, cleared by `Π ℓ_i`.
fn log_derivative_numerator(terms: &[((i64, i64), Q)]) -> DPoly<Q> {
    let factors: Vec<(i64, i64)> = terms.iter().map(|(f, _)| *f).collect();
    let mut acc = DPoly::new(Vec::new());
    for (i, ((_, s), w)) in terms.iter().enumerate() {
        acc = acc.plus(&product_except(&factors, i).scale(&w.times(&qi(*s))));
    }
    acc
}

/// Removes every factor `x - v` for `v` in `trivial` that divides `p` exactly.
fn strip_factors(mut p: DPoly<Q>, trivial: &[i64]) -> DPoly<Q> {
    for &v in trivial {
        while let Some(q) = p.deflate(&qi(v)) {
            if q.degree().is_none() {
                break;
            }
            p = q;
        }
    }
    p
}

fn smallest_root_above(p: &DPoly<Q>, lo: f64) -> Result<f64> {
    let roots = poly_roots(&p.to_c64())?;
    roots
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * (1.0 + z.re.abs()) && z.re > lo + 1e-12)
        .map(|z| z.re)
        .min_by(|a, b| a.total_cmp(b))
        .ok_or_else(|| Error::Model("no admissible real critical root".into()))
}

/// Critical value `t_{m,r}` of the all-ones model.
///
/// `r = 0`: only `U` is present, `t = (U - 1)/((m - 1) U^{m-1})`, critical where
/// `1/(U - 1) - (m - 1)/U = 0`. `m = 0`: only `V`, `t = (1 - V) V^{r+1}/(r + 1)`.
/// Otherwise the curve is parametrised by `w = U/V`:
/// `t = P U^{1-m+r} w^{-r}`, `P = (w - 1)/((w + 1)L)`, `U = wN/((w + 1)L)` with
/// `L = (r + 1)w + m - 1`, `N = (2r + 1)w + 2m - 1`; the critical equation is the
/// numerator of `(log t)'` with the trivial factors removed, a cubic in general.
pub fn critical_point(m: u32, r: u32) -> Result<CriticalPoint> {
    let (mi, ri) = (m as i64, r as i64);
    let pw = |x: f64, e: i64| num_traits::Float::powi(x, e as i32);
    if r == 0 {
        if m < 3 {
            return Err(Error::Model(format!("the ({m},0) model has no finite critical point")));
        }
        let eq = log_derivative_numerator(&[((-1, 1), qi(1)), ((0, 1), qi(1 - mi))]);
        let u = smallest_root_above(&eq, 1.0)?;
        return Ok(CriticalPoint { t: (u - 1.0) / ((mi - 1) as f64 * pw(u, mi - 1)), equation: eq, root: u });
    }
    if m == 0 {
        let eq = log_derivative_numerator(&[((1, -1), qi(1)), ((0, 1), qi(ri + 1))]);
        let v = smallest_root_above(&eq, 0.0)?;
        return Ok(CriticalPoint { t: (1.0 - v) * pw(v, ri + 1) / (ri + 1) as f64, equation: eq, root: v });
    }
    let e = 1 - mi + ri;
    // log t = log(w-1) - log(w+1) - log L + e (log w + log N - log(w+1) - log L) - r log w
    let terms = [
        ((-1, 1), qi(1)),
        ((1, 1), qi(-1 - e)),
        ((mi - 1, ri + 1), qi(-1 - e)),
        ((0, 1), qi(e - ri)),
        ((2 * mi - 1, 2 * ri + 1), qi(e)),
    ];
    let eq = strip_factors(log_derivative_numerator(&terms), &[0, -1]);
    let w = smallest_root_above(&eq, 1.0)?;
    let l = (ri + 1) as f64 * w + (mi - 1) as f64;
    let n = (2 * ri + 1) as f64 * w + (2 * mi - 1) as f64;
    let p = (w - 1.0) / ((w + 1.0) * l);
    let u = w * n / ((w + 1.0) * l);
    Ok(CriticalPoint { t: p * num_traits::Float::powf(u, e as f64) * num_traits::Float::powi(w, -(r as i32)), equation: eq, root: w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{tables_for, wgn_oracle, Shape};
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> Q {
        Q::new(BigInt::from(n), BigInt::from(d))
    }

    fn model(num: &[Q], den: &[Q], p: &[Q], qq: &[Q]) -> ModelParams<Q> {
        ModelParams::new(num.to_vec(), den.to_vec(), p.to_vec(), qq.to_vec())
    }

    #[test]
    fn order_zero_solution() {
        let params = model(&[q(2, 3)], &[q(-1, 2)], &[q(1, 3), q(3, 1)], &[q(1, 1), q(1, 2)]);
        let sd = solve_system(&params, 0).unwrap();
        for (c, u) in [q(2, 3), q(-1, 2)].iter().enumerate() {
            assert_eq!(sd.a[c].coeff(0).coeff(0), q(1, 1));
            assert!(Ring::is_zero(&sd.a[c].coeff(1).coeff(0)));
            assert_eq!(sd.b[c].coeff(1).coeff(0), u.times(&q(1, 3)));
            assert_eq!(sd.b[c].coeff(2).coeff(0), u.times(&q(3, 1)));
        }
    }

    #[test]
    fn no_p_gives_trivial_b() {
        let params = model(&[q(2, 3), q(5, 1)], &[], &[q(0, 1)], &[q(1, 1), q(-1, 2)]);
        let sd = solve_system(&params, 5).unwrap();
        for c in 0..2 {
            assert_eq!(sd.b[c], WSeries::one(1, 5));
            let u = &sd.classes[c].u;
            assert_eq!(sd.a[c].coeff(1), Series::monomial(u.clone(), 1, 5));
            assert_eq!(sd.a[c].coeff(2), Series::monomial(u.times(&q(-1, 2)), 2, 5));
            assert_eq!(sd.a[c].coeff(0), Series::one(5));
        }
    }

    #[test]
    fn one_color_first_orders() {
        // m = 1, D₁ = D₂ = 1: A₁ = u q t + O(t²) and [t¹] Z = u q x̄².
        let (u, p1, q1) = (q(3, 2), q(2, 5), q(-1, 3));
        let sd = solve_system(&model(core::slice::from_ref(&u), &[], core::slice::from_ref(&p1), core::slice::from_ref(&q1)), 4).unwrap();
        assert_eq!(sd.a[0].coeff(1).coeff(1), u.times(&q1));
        // With one color P_B / B = 1, so A is exactly 1 + u q t z.
        assert_eq!(sd.a[0].coeff(0), Series::one(4));
        assert_eq!(sd.residual().unwrap(), 0.0);
        let z = sd.z_series().unwrap();
        assert_eq!(z.coeff(0), Poly::var(0));
        assert_eq!(z.coeff(1).coeff(&unit_mono(0, 2)), u.times(&q1));
        assert_eq!(sd.inverse_residual(&z).unwrap(), 0.0);
        let w = sd.w01().unwrap();
        assert!(w.coeff(0).is_zero());
        assert_eq!(w.coeff(1), Poly::monomial(unit_mono(0, 2), q1.clone()));
    }

    #[test]
    fn genus_zero_against_oracle() {
        let params = model(&[q(1, 2), q(-2, 3)], &[q(1, 3)], &[q(1, 2), q(-1, 1)], &[q(2, 1), q(1, 3)]);
        let order = 3;
        let tables = tables_for(Shape { m: 2, r: 1, exp: false }, order, 0).unwrap();
        let sd = solve_system(&params, order).unwrap();
        assert_eq!(sd.residual().unwrap(), 0.0);
        assert_eq!(sd.h_mismatch().unwrap(), 0.0);
        assert_eq!(sd.w01().unwrap(), wgn_oracle(&tables, &params, 0, 1, order).unwrap());
        let w02 = sd.w02().unwrap();
        assert_eq!(w02, wgn_oracle(&tables, &params, 0, 2, order).unwrap());
        assert_eq!(w02, w02.map(|p| p.rename(&[1, 0, 2, 3, 4, 5])));
    }

    #[test]
    fn exponential_weight_against_oracle() {
        let params = model(&[q(1, 2)], &[], &[q(1, 3), q(1, 1)], &[q(-1, 2), q(1, 1)]).with_exp(q(2, 3));
        let order = 3;
        let tables = tables_for(Shape { m: 1, r: 0, exp: true }, order, 0).unwrap();
        let sd = solve_system(&params, order).unwrap();
        assert_eq!(sd.h_mismatch().unwrap(), 0.0);
        assert_eq!(sd.w01().unwrap(), wgn_oracle(&tables, &params, 0, 1, order).unwrap());
        assert_eq!(sd.w02().unwrap(), wgn_oracle(&tables, &params, 0, 2, order).unwrap());
    }

    #[test]
    fn pure_exponential_weight() {
        let params = ModelParams::new(vec![], vec![], vec![q(1, 2)], vec![q(1, 1), q(-1, 3)]).with_exp(q(1, 1));
        let order = 3;
        let tables = tables_for(Shape { m: 0, r: 0, exp: true }, order, 0).unwrap();
        let sd = solve_system(&params, order).unwrap();
        assert_eq!(sd.w01().unwrap(), wgn_oracle(&tables, &params, 0, 1, order).unwrap());
    }

    #[test]
    fn numeric_mode_agrees_with_exact() {
        let params = model(&[q(1, 2)], &[q(-1, 3)], &[q(1, 1)], &[q(1, 2), q(1, 1)]);
        let ex = solve_system(&params, 4).unwrap();
        let nu = solve_system(&params.to_c64(), 4).unwrap();
        let d = ex.to_c64();
        for c in 0..2 {
            assert!(max_diff(&d.a[c], &nu.a[c]) < 1e-12);
            assert!(max_diff(&d.b[c], &nu.b[c]) < 1e-12);
        }
        assert!(nu.residual().unwrap() < 1e-12);
        let w = nu.w02().unwrap();
        let we = ex.w02().unwrap().map(|p| {
            let mut o = Poly::<C64>::zero();
            for (m, c) in p.terms() {
                o.add_term(*m, &c.to_c64());
            }
            o
        });
        assert!(series_poly_max(&w.minus(&we)) < 1e-10);
    }

    #[test]
    fn initial_ramification_examples() {
        let p = model(&[q(1, 1)], &[], &[q(1, 1)], &[q(0, 1), q(1, 1)]);
        let r = initial_ramification(&p, 1e-8).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] + C64::new(1.0, 0.0)).norm() < 1e-12 && (r[1] - C64::new(1.0, 0.0)).norm() < 1e-12);
        let degenerate = model(&[q(2, 1)], &[], &[q(1, 1)], &[q(1, 1)]);
        assert!(matches!(initial_ramification(&degenerate, 1e-8), Err(Error::Assumption(_))));
        let generic = model(&[q(1, 2), q(-2, 3)], &[q(1, 3)], &[q(1, 1)], &[q(1, 2), q(3, 2)]);
        assert_eq!(initial_ramification(&generic, 1e-8).unwrap().len(), 6);
    }

    #[test]
    fn artificial_poles_cancel_in_ramification() {
        let base = model(&[q(1, 2)], &[q(-1, 3)], &[q(1, 1)], &[q(1, 2), q(3, 2)]);
        let extra = model(&[q(1, 2), q(5, 7)], &[q(-1, 3), q(5, 7)], &[q(1, 1)], &[q(1, 2), q(3, 2)]);
        assert_eq!(initial_ramification(&base, 1e-8).unwrap(), initial_ramification(&extra, 1e-8).unwrap());
    }

    #[test]
    fn formal_branchpoints_solve_the_equation() {
        let params = model(&[q(1, 2)], &[q(-1, 3)], &[q(1, 1), q(1, 2)], &[q(1, 2), q(3, 2)]);
        let sd = solve_system(&params, 7).unwrap();
        let bps = formal_branchpoints(&sd, 5, 1e-8).unwrap();
        assert_eq!(bps.len(), 4);
        for b in &bps {
            assert!((b.beta.coeff(0) - b.a).norm() < 1e-12);
            assert!(b.residual < 1e-9, "residual {}", b.residual);
        }
    }

    #[test]
    fn formal_branchpoints_without_p_are_scaled_roots() {
        let params = model(&[q(1, 2)], &[], &[q(0, 1)], &[q(1, 2), q(3, 2)]);
        let sd = solve_system(&params, 6).unwrap();
        for b in formal_branchpoints(&sd, 4, 1e-8).unwrap() {
            for k in 1..=4 {
                assert!(b.beta.coeff(k).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn critical_values() {
        let c = critical_point(0, 1).unwrap();
        assert!((c.t - 2.0 / 27.0).abs() < 1e-12);
        let c = critical_point(3, 0).unwrap();
        assert!((c.t - 0.125).abs() < 1e-12);
        let c = critical_point(4, 0).unwrap();
        assert!((c.t - 4.0 / 81.0).abs() < 1e-12);
        let c = critical_point(1, 1).unwrap();
        assert_eq!(c.equation.degree(), Some(3));
        assert!((c.root - 1.7024143839193153).abs() < 1e-9);
        assert!((c.t - 0.050669).abs() < 1e-6);
        assert!((critical_point(2, 1).unwrap().t - 0.034663).abs() < 1e-6);
        assert!((critical_point(0, 2).unwrap().t - 27.0 / 768.0).abs() < 1e-12);
        assert!(critical_point(2, 0).is_err());
    }

    #[test]
    fn insertion_identity_holds() {
        let params = model(&[q(1, 2)], &[q(-1, 3)], &[q(1, 1), q(2, 3)], &[q(1, 2), q(-1, 1)]);
        let (lhs, rhs) = insertion_sides(&params, 3).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn zero_color_drops_out() {
        let pq = (vec![q(1, 2), q(1, 1)], vec![q(2, 1), q(-1, 3)]);
        let with = model(&[q(1, 3), q(0, 1)], &[q(-1, 2)], &pq.0, &pq.1);
        let without = model(&[q(1, 3)], &[q(-1, 2)], &pq.0, &pq.1);
        let a = solve_system(&with, 4).unwrap();
        let b = solve_system(&without, 4).unwrap();
        assert_eq!(a.phi(4).unwrap(), b.phi(4).unwrap());
        assert_eq!(a.h().unwrap(), b.h().unwrap());
        assert!(with.validate().is_err());
    }

    #[test]
    fn critical_system_matches_solver() {
        // U = A₀ of an I color and V = A₀ of a J color solve the two-equation system.
        let (m, r) = (1usize, 1usize);
        let one = q(1, 1);
        let params = model(&vec![one.clone(); m], &vec![q(-1, 1); r], core::slice::from_ref(&one), core::slice::from_ref(&one));
        let order = 6;
        let sd = solve_system(&params, order).unwrap();
        let u = sd.a[0].coeff(0);
        let v = sd.a[m].coeff(0);
        let t = Series::monomial(one.clone(), 1, order);
        let k = t.times(&u.pow(m as u64)).times(&v.pow(r as u64).inv().unwrap());
        let mf = Q::from_int(m as i64);
        let rf = Q::from_int(r as i64);
        let rhs_u = Series::one(order).plus(&k.times(
            &u.inv().unwrap().scale(&(mf.minus(&one))).plus(&v.inv().unwrap().scale(&rf)),
        ));
        let rhs_v = Series::one(order).minus(&k.times(
            &u.inv().unwrap().scale(&mf).plus(&v.inv().unwrap().scale(&rf.plus(&one))),
        ));
        assert_eq!(u, rhs_u);
        assert_eq!(v, rhs_v);
    }
}
