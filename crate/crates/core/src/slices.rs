//! Slice decompositions for polynomial weights (`r = 0`, no exponential).
//!
//! After the rescaling `Ã⁽ᶜ⁾(z) = ū_c A⁽ᶜ⁾(z Π u_i)`, `B̃⁽ᶜ⁾(z) = B⁽ᶜ⁾(z Π u_i)` the
//! coefficients count elementary slices, and products of the step polynomials
//! `Σ_i Ã_i α^{mi-1}` count Łukasiewicz paths. This module recomputes `W₀,₁` and
//! `W₀,₂` from path extractions, independently of the closed forms in
//! [`crate::spectral`].

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{Error, Result};
use crate::ring::{lift, times_scalar, unit_mono, Poly, Ring, Scalar, Series, ZLaurent};
use crate::spectral::{poly_series_norm, SpectralData};

/// Which slice family a path coefficient counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SliceKind {
    White,
    Black,
}

/// Rescaled slice data; colors are expanded, one entry per color `0..m`.
#[derive(Clone, Debug, PartialEq)]
pub struct TildeData<F: Scalar> {
    pub m: usize,
    pub order: usize,
    /// `Π u_i`; the slice variable is `t̃ = (Π u_i) t`.
    pub scale: F,
    pub ubar: Vec<F>,
    /// `Ã⁽ᶜ⁾_k`, `k = 0..=D₂`.
    pub a: Vec<Vec<Series<F>>>,
    /// `B̃⁽ᶜ⁾_k` (coefficient of `z^{-k}`), `k = 0..=D₁`.
    pub b: Vec<Vec<Series<F>>>,
    /// `Z̃ = x̄ Π_c Ã⁽ᶜ⁾(Z̃)` in variable 0.
    pub z: Series<Poly<F>>,
    pub p: Vec<F>,
    pub q: Vec<F>,
}

fn unsupported() -> Error {
    Error::Model("slice formulas need r = 0 and no exponential weight".into())
}

/// Builds the rescaled data from a solved polynomial model.
pub fn tilde_transform<F: Scalar>(sd: &SpectralData<F>) -> Result<TildeData<F>> {
    let params = &sd.params;
    if params.r() != 0 || params.u_exp.is_some() {
        return Err(unsupported());
    }
    params.validate()?;
    let order = sd.order;
    let mut scale = F::one();
    let mut ubar = Vec::new();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (ci, c) in sd.classes.iter().enumerate() {
        let ub = c.u.try_inv().ok_or_else(|| Error::Model("zero color parameter".into()))?;
        let ak: Vec<Series<F>> = sd.a[ci].coeffs().to_vec();
        let bk: Vec<Series<F>> = sd.b[ci].coeffs().to_vec();
        for _ in 0..c.mult {
            scale = scale.times(&c.u);
            ubar.push(ub.clone());
            a.push(ak.clone());
            b.push(bk.clone());
        }
    }
    let inv_scale = scale.try_inv().expect("nonzero product");
    for (ac, ub) in a.iter_mut().zip(&ubar) {
        let mut f = ub.clone();
        for x in ac.iter_mut() {
            *x = x.scale(&f);
            f = f.times(&scale);
        }
    }
    for bc in b.iter_mut() {
        let mut f = F::one();
        for x in bc.iter_mut() {
            *x = x.scale(&f);
            f = f.times(&inv_scale);
        }
    }
    let m = a.len();
    let mut td = TildeData {
        m,
        order,
        scale,
        ubar,
        a,
        b,
        z: Series::zero(order),
        p: params.p.clone(),
        q: params.q.clone(),
    };
    let xb = Series::constant(Poly::var(0), order);
    let mut z = xb.clone();
    for _ in 0..=order {
        let mut prod = xb.clone();
        for c in 0..m {
            prod = prod.times(&td.eval_a(c, &z));
        }
        z = prod;
    }
    td.z = z;
    Ok(td)
}

impl<F: Scalar> TildeData<F> {
    fn color(&self, c: usize, back: usize) -> usize {
        (c + self.m * (back / self.m + 1) - back) % self.m
    }

    /// `Ã⁽ᶜ⁾(w)` for a series `w` with polynomial coefficients.
    pub fn eval_a(&self, c: usize, w: &Series<Poly<F>>) -> Series<Poly<F>> {
        let mut acc = Series::<Poly<F>>::zero(self.order);
        for k in (0..self.a[c].len()).rev() {
            acc = acc.times(w).plus(&lift(&self.a[c][k]));
        }
        acc
    }

    /// One white step `Σ_i Ã⁽ᶜ⁾_i α^{mi-1}` as a Laurent polynomial in `α`.
    fn white_step(&self, c: usize) -> ZLaurent<F> {
        let m = self.m as i32;
        let hi = m * (self.a[c].len() as i32 - 1) - 1;
        let mut coeffs = vec![Series::zero(self.order); (hi + 2) as usize];
        for (i, x) in self.a[c].iter().enumerate() {
            coeffs[(m * i as i32) as usize] = x.clone();
        }
        ZLaurent::new(-1, coeffs, self.order)
    }

    /// One black step `Σ_i B̃⁽ᶜ⁾_i α^{1-mi}`.
    fn black_step(&self, c: usize) -> ZLaurent<F> {
        let m = self.m as i32;
        let lo = 1 - m * (self.b[c].len() as i32 - 1);
        let mut coeffs = vec![Series::zero(self.order); (1 - lo + 1) as usize];
        for (i, x) in self.b[c].iter().enumerate() {
            coeffs[(1 - m * i as i32 - lo) as usize] = x.clone();
        }
        ZLaurent::new(lo, coeffs, self.order)
    }

    /// Product of `n` steps whose `r`-th step has color `c - r + 1 - shift`.
    fn path_product(&self, c: usize, n: usize, shift: usize, kind: SliceKind) -> ZLaurent<F> {
        let mut acc = ZLaurent::new(0, vec![Series::one(self.order)], self.order);
        for r in 1..=n {
            let col = self.color(c, r - 1 + shift);
            let step = match kind {
                SliceKind::White => self.white_step(col),
                SliceKind::Black => self.black_step(col),
            };
            acc = acc.times(&step);
        }
        acc
    }

    /// Generating series of white slices `A⁽ᶜ⁾_{n,k} = [α^k] Π_{r=1}^n (Σ_i Ã⁽ᶜ⁻ʳ⁺¹⁾_i α^{mi-1})`
    /// or black slices `B⁽ᶜ⁾_{n,k} = [α^{-k}] Π_{r=1}^n (Σ_i B̃⁽ᶜ⁻ʳ⁺¹⁾_i α^{1-mi})`.
    pub fn path_coefficient(&self, c: usize, n: usize, k: i32, kind: SliceKind) -> Series<F> {
        let prod = self.path_product(c, n, 0, kind);
        match kind {
            SliceKind::White => prod.coeff(k),
            SliceKind::Black => prod.coeff(-k),
        }
    }

    /// Largest coefficient of the elementary slice recursions
    /// `Ã⁽ᶜ⁾_k = ū_c δ_{k,0} + Σ_s q_s t̃^s B⁽ᶜ⁻¹⁾_{ms-1,1-mk}` and
    /// `B̃⁽ᶜ⁾_k = Σ_s p_s A⁽ᶜ⁻¹⁾_{ms-1,1-mk}` (`k ≥ 1`).
    ///
    /// Matching powers of `z` fixes the increment to `1 - mk` for both slice kinds.
    pub fn slice_recursion_residual(&self) -> f64 {
        let m = self.m;
        let mut worst: f64 = 0.0;
        let norm = |s: &Series<F>| s.coeffs().iter().map(|c| c.magnitude()).fold(0.0, f64::max);
        for c in 0..m {
            let prev = self.color(c, 1);
            for k in 0..self.a[c].len() {
                let mut rhs = Series::zero(self.order);
                if k == 0 {
                    rhs = Series::constant(self.ubar[c].clone(), self.order);
                }
                for (s, qs) in self.q.iter().enumerate().map(|(i, x)| (i + 1, x)) {
                    let w = Series::monomial(qs.times(&ring_pow_f(&self.scale, s)), s, self.order);
                    let path = self.path_coefficient(prev, m * s - 1, 1 - (m * k) as i32, SliceKind::Black);
                    rhs.add_in(&path.times(&w));
                }
                worst = worst.max(norm(&self.a[c][k].minus(&rhs)));
            }
            for k in 1..self.b[c].len() {
                let mut rhs = Series::zero(self.order);
                for (s, ps) in self.p.iter().enumerate().map(|(i, x)| (i + 1, x)) {
                    let path = self.path_coefficient(prev, m * s - 1, 1 - (m * k) as i32, SliceKind::White);
                    rhs.add_in(&path.scale(ps));
                }
                worst = worst.max(norm(&self.b[c][k].minus(&rhs)));
            }
        }
        worst
    }

    /// `Ã⁽ᶜ⁾_0 - ū_c - Ã⁽ᶜ⁾_0 Σ_s p_s [α¹] Π_{r=1}^{ms-1} (Σ_i Ã⁽ᶜ⁻ʳ⁾_i α^{mi-1})`, which vanishes.
    pub fn elementary_slice_residual(&self, c: usize) -> Series<F> {
        let mut sum = Series::zero(self.order);
        for (s, ps) in self.p.iter().enumerate().map(|(i, x)| (i + 1, x)) {
            sum.add_in(&self.path_product(c, self.m * s - 1, 1, SliceKind::White).coeff(1).scale(ps));
        }
        let a0 = &self.a[c][0];
        a0.minus(&Series::constant(self.ubar[c].clone(), self.order)).minus(&a0.times(&sum))
    }

    /// `W₀,₁` from the rooted-slice decomposition at root color `c`:
    /// `x W₀,₁ = Ã⁽ᶜ⁾(Z̃) - ū_c - Ã⁽ᶜ⁾(Z̃) Σ_s p_s Σ_k Z̃^k [α^{mk+1}] Π_{r=1}^{ms-1} (Σ_i Ã⁽ᶜ⁻ʳ⁾_i α^{mi-1})`.
    pub fn w01_bijective(&self, c: usize) -> Series<Poly<F>> {
        let order = self.order;
        let az = self.eval_a(c, &self.z);
        let mut inner = Series::<Poly<F>>::zero(order);
        for (s, ps) in self.p.iter().enumerate().map(|(i, x)| (i + 1, x)) {
            if ps.is_zero() {
                continue;
            }
            let prod = self.path_product(c, self.m * s - 1, 1, SliceKind::White);
            let Some((_, hi)) = prod.range() else { continue };
            let mut zk = Series::one(order);
            let mut k = 0i32;
            while self.m as i32 * k < hi {
                let coeff = prod.coeff(self.m as i32 * k + 1).scale(ps);
                inner.add_in(&times_scalar(&zk, &coeff));
                zk = zk.times(&self.z);
                k += 1;
            }
        }
        let ub = Series::constant(Poly::constant(self.ubar[c].clone()), order);
        let x_w = az.minus(&ub).minus(&az.times(&inner));
        x_w.map(|p| p.shift(&unit_mono(0, 1)))
    }

    /// Dense coefficients of `Ã(z) = Π_c Ã⁽ᶜ⁾(z)`.
    fn total_a(&self) -> Vec<Series<F>> {
        let mut acc = vec![Series::one(self.order)];
        for c in 0..self.m {
            acc = dense_mul(&acc, &self.a[c], usize::MAX, self.order);
        }
        acc
    }

    /// `W₀,₂` from the annular decomposition:
    /// `Σ_{f₁,f₂} x̄₁^{f₁+1} x̄₂^{f₂+1} Σ_p p [α^{f₁-p}] Ã(α)^{f₁} · [z^{f₂+p}] Ã(z)^{f₂}`
    /// over `f₁ ≤ f1_max`, `f₂ ≤ f2_max`, `1 ≤ p ≤ p_max`.
    ///
    /// `[z^j] Ã^f` is `O(t^j)`, so `(2T, T, T)` already captures everything through `t^T`.
    pub fn w02_annular(&self, f1_max: usize, f2_max: usize, p_max: usize) -> Series<Poly<F>> {
        let order = self.order;
        let total = self.total_a();
        let fmax = f1_max.max(f2_max);
        let mut powers = vec![vec![Series::one(order)]];
        for f in 1..=fmax {
            let next = dense_mul(&powers[f - 1], &total, order, order);
            powers.push(next);
        }
        let get = |f: usize, j: i64| -> Series<F> {
            if j < 0 {
                return Series::zero(order);
            }
            powers[f].get(j as usize).cloned().unwrap_or_else(|| Series::zero(order))
        };
        let mut out: Vec<Poly<F>> = vec![Poly::zero(); order + 1];
        for f1 in 1..=f1_max {
            for f2 in 1..=f2_max {
                let mut sum = Series::zero(order);
                for p in 1..=p_max {
                    let l = get(f1, f1 as i64 - p as i64);
                    let r = get(f2, (f2 + p) as i64);
                    if l.is_zero() || r.is_zero() {
                        continue;
                    }
                    sum.add_in(&l.times(&r).scale(&F::from_int(p as i64)));
                }
                let mut mono = unit_mono(0, f1 as i16 + 1);
                mono[1] = f2 as i16 + 1;
                for (k, c) in sum.coeffs().iter().enumerate() {
                    if !c.is_zero() {
                        out[k].add_term(mono, c);
                    }
                }
            }
        }
        Series::from_coeffs(out, order)
    }

    /// Largest coefficient of `[z^{-p}] F(x, z) - D(x) Z̃^p` for `0 ≤ p ≤ p_max`, with
    /// `F = 1/(1 - x̄ Ã(z)/z)` and `D = -x Z̃'/Z̃ = x̄ ∂_x̄ Z̃ / Z̃`.
    pub fn last_passage_residual(&self, p_max: usize) -> Result<f64> {
        let order = self.order;
        let total = self.total_a();
        let fmax = order + p_max;
        let mut powers = vec![vec![Series::one(order)]];
        for f in 1..=fmax {
            let next = dense_mul(&powers[f - 1], &total, order, order);
            powers.push(next);
        }
        let ratio = self.z.map(|p| p.shift(&unit_mono(0, -1)));
        let d = self.z.map(|p| p.deriv(0)).times(&ratio.inv()?);
        let mut worst: f64 = 0.0;
        let mut zp = Series::one(order);
        for p in 0..=p_max {
            let mut lhs: Vec<Poly<F>> = vec![Poly::zero(); order + 1];
            for (f, pw) in powers.iter().enumerate().take(fmax + 1).skip(p) {
                let Some(c) = pw.get(f - p) else { continue };
                for (k, x) in c.coeffs().iter().enumerate() {
                    if !x.is_zero() {
                        lhs[k].add_term(unit_mono(0, f as i16), x);
                    }
                }
            }
            let lhs = Series::from_coeffs(lhs, order);
            worst = worst.max(poly_series_norm(&lhs.minus(&d.times(&zp))));
            zp = zp.times(&self.z);
        }
        Ok(worst)
    }

    /// Largest coefficient of `Z̃ - Z Π_c ū_c`.
    pub fn homogeneity_residual(&self, z: &Series<Poly<F>>) -> f64 {
        let c = self.ubar.iter().fold(F::one(), |acc, u| acc.times(u));
        poly_series_norm(&self.z.minus(&z.map(|p| p.scale(&c))))
    }
}

fn ring_pow_f<F: Scalar>(x: &F, e: usize) -> F {
    (0..e).fold(F::one(), |acc, _| acc.times(x))
}

/// Product of dense polynomials with series coefficients, keeping degrees `≤ max_deg`.
/// Powers of `Ã` are cut at the `t`-order: their `z^j` coefficient is `O(t^j)`.
fn dense_mul<F: Scalar>(a: &[Series<F>], b: &[Series<F>], max_deg: usize, order: usize) -> Vec<Series<F>> {
    let n = (a.len() + b.len() - 1).min(max_deg.saturating_add(1));
    let mut out = vec![Series::zero(order); n];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if i + j < n && !y.is_zero() {
                out[i + j].add_in(&x.times(y));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::oracle::{tables_for, wgn_oracle, Shape};
    use crate::ring::Q;
    use crate::spectral::solve_system;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> Q {
        Q::new(BigInt::from(n), BigInt::from(d))
    }

    fn setup(u: &[Q], p: &[Q], qq: &[Q], order: usize) -> (SpectralData<Q>, TildeData<Q>) {
        let sd = solve_system(&ModelParams::new(u.to_vec(), vec![], p.to_vec(), qq.to_vec()), order).unwrap();
        let td = tilde_transform(&sd).unwrap();
        (sd, td)
    }

    #[test]
    fn rejects_denominator_colors() {
        let sd = solve_system(&ModelParams::new(vec![q(1, 1)], vec![q(-1, 1)], vec![q(1, 1)], vec![q(1, 1)]), 2).unwrap();
        assert!(tilde_transform(&sd).is_err());
    }

    #[test]
    fn order_zero_data() {
        let (_, td) = setup(&[q(2, 1), q(3, 1)], &[q(1, 2), q(5, 1)], &[q(1, 1)], 0);
        assert_eq!(td.scale, q(6, 1));
        assert_eq!(td.a[0][0].coeff(0), q(1, 2));
        // B̃ = 1 + u Σ p_s (z Π u)^{-s}
        assert_eq!(td.b[1][1].coeff(0), q(3, 1).times(&q(1, 2)).times(&q(1, 6)));
        assert_eq!(td.b[1][2].coeff(0), q(3, 1).times(&q(5, 1)).times(&q(1, 36)));
    }

    #[test]
    fn small_paths() {
        let (_, td) = setup(&[q(2, 3)], &[q(1, 1)], &[q(1, 2), q(1, 3)], 4);
        assert_eq!(td.path_coefficient(0, 0, 0, SliceKind::White), Series::one(4));
        for k in 0..3 {
            assert_eq!(td.path_coefficient(0, 1, k as i32 - 1, SliceKind::White), td.a[0][k]);
        }
        // m = 1, two steps of increment 0: Σ_j Ã_j Ã_{2-j}.
        let a = &td.a[0];
        let expect = a[0].times(&a[2]).scale(&q(2, 1)).plus(&a[1].times(&a[1]));
        assert_eq!(td.path_coefficient(0, 2, 0, SliceKind::White), expect);
    }

    #[test]
    fn recursions_and_bridges() {
        let (sd, td) = setup(&[q(1, 2), q(-2, 3)], &[q(1, 1), q(1, 3)], &[q(1, 2), q(2, 1)], 4);
        assert_eq!(td.slice_recursion_residual(), 0.0);
        for c in 0..2 {
            assert!(td.elementary_slice_residual(c).is_zero());
        }
        assert_eq!(td.homogeneity_residual(&sd.z_series().unwrap()), 0.0);
        assert_eq!(td.last_passage_residual(4).unwrap(), 0.0);
    }

    #[test]
    fn disk_from_slices() {
        for m in 1..=3usize {
            let us: Vec<Q> = (0..m).map(|i| q(i as i64 + 1, 2)).collect();
            let (sd, td) = setup(&us, &[q(1, 3), q(-1, 1)], &[q(1, 1), q(1, 2)], 3);
            let w = sd.w01().unwrap();
            for c in 0..m {
                assert_eq!(td.w01_bijective(c), w, "m = {m}, c = {c}");
            }
        }
    }

    #[test]
    fn cylinder_from_annuli() {
        let order = 4;
        let (sd, td) = setup(&[q(3, 2)], &[q(1, 2)], &[q(2, 3)], order);
        assert_eq!(td.w02_annular(2 * order, order, order), sd.w02().unwrap());
        let (sd, td) = setup(&[q(1, 2), q(2, 1)], &[q(1, 1), q(1, 2)], &[q(1, 3), q(1, 1)], 3);
        assert_eq!(td.w02_annular(6, 3, 3), sd.w02().unwrap());
    }

    #[test]
    fn bijective_disk_matches_oracle() {
        let params = ModelParams::new(vec![q(1, 2), q(3, 1)], vec![], vec![q(1, 1), q(2, 1)], vec![q(1, 2), q(1, 1)]);
        let tables = tables_for(Shape { m: 2, r: 0, exp: false }, 3, 0).unwrap();
        let sd = solve_system(&params, 3).unwrap();
        let td = tilde_transform(&sd).unwrap();
        assert_eq!(td.w01_bijective(1), wgn_oracle(&tables, &params, 0, 1, 3).unwrap());
    }
}
