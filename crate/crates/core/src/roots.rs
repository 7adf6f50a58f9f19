//! Dense univariate polynomials and their complex roots.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::model::{Error, Result};
use crate::ring::{Scalar, C64};

/// Dense polynomial `Σ c_k a^k`, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct DPoly<F> {
    pub c: Vec<F>,
}

impl<F: Scalar> DPoly<F> {
    pub fn new(mut c: Vec<F>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        DPoly { c }
    }

    pub fn constant(v: F) -> Self {
        Self::new(alloc::vec![v])
    }

    /// `c0 + c1 a`.
    pub fn linear(c0: F, c1: F) -> Self {
        Self::new(alloc::vec![c0, c1])
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> F {
        self.c.get(k).cloned().unwrap_or_else(F::zero)
    }

    pub fn plus(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        Self::new((0..n).map(|k| self.coeff(k).plus(&o.coeff(k))).collect())
    }

    pub fn minus(&self, o: &Self) -> Self {
        self.plus(&o.scale(&F::from_int(-1)))
    }

    pub fn scale(&self, v: &F) -> Self {
        Self::new(self.c.iter().map(|x| x.times(v)).collect())
    }

    pub fn times(&self, o: &Self) -> Self {
        if self.c.is_empty() || o.c.is_empty() {
            return Self::new(Vec::new());
        }
        let mut c = alloc::vec![F::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                c[i + j].add_in(&a.times(b));
            }
        }
        Self::new(c)
    }

    pub fn pow(&self, e: u64) -> Self {
        (0..e).fold(Self::constant(F::one()), |acc, _| acc.times(self))
    }

    /// Multiplies by `a^k`.
    pub fn shift(&self, k: usize) -> Self {
        let mut c = alloc::vec![F::zero(); k];
        c.extend(self.c.iter().cloned());
        Self::new(c)
    }

    pub fn deriv(&self) -> Self {
        Self::new(self.c.iter().enumerate().skip(1).map(|(k, x)| x.times(&F::from_int(k as i64))).collect())
    }

    /// Exact division by `a - root` when `root` is a root; `None` otherwise.
    pub fn deflate(&self, root: &F) -> Option<Self> {
        let n = self.c.len();
        if n == 0 {
            return Some(self.clone());
        }
        let mut q = alloc::vec![F::zero(); n - 1];
        let mut carry = F::zero();
        for k in (1..n).rev() {
            carry = self.c[k].plus(&carry.times(root));
            q[k - 1] = carry.clone();
        }
        let rem = self.c[0].plus(&carry.times(root));
        rem.is_zero().then(|| Self::new(q))
    }

    pub fn eval(&self, at: &F) -> F {
        self.c.iter().rev().fold(F::zero(), |acc, x| acc.times(at).plus(x))
    }

    pub fn to_c64(&self) -> DPoly<C64> {
        DPoly { c: self.c.iter().map(|x| x.to_c64()).collect() }
    }
}

impl DPoly<C64> {
    pub fn eval_c(&self, at: C64) -> C64 {
        self.c.iter().rev().fold(C64::new(0.0, 0.0), |acc, x| acc * at + x)
    }
}

/// All complex roots of a polynomial with nonzero leading coefficient: eigenvalues of the
/// companion matrix followed by one Newton step each.
pub fn poly_roots(p: &DPoly<C64>) -> Result<Vec<C64>> {
    let Some(n) = p.degree() else {
        return Err(Error::Model("the zero polynomial has no isolated roots".into()));
    };
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = p.c[n];
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -p.c[i] / lead;
    }
    let eig = nalgebra::linalg::Schur::new(m)
        .eigenvalues()
        .ok_or_else(|| Error::Model(format!("eigenvalue iteration failed for degree {n}")))?;
    let dp = p.deriv();
    Ok(eig
        .iter()
        .map(|&z| {
            let d = dp.eval_c(z);
            if d.norm() > 0.0 {
                z - p.eval_c(z) / d
            } else {
                z
            }
        })
        .collect())
}

/// Smallest relative gap `|a_i - a_j| / max(|a_i|, |a_j|)` over pairs.
pub fn min_relative_gap(roots: &[C64]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let s = roots[i].norm().max(roots[j].norm());
            let d = (roots[i] - roots[j]).norm();
            g = g.min(if s > 0.0 { d / s } else { 0.0 });
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{Ring, Q};
    use alloc::vec;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn roots_of_cyclotomic_and_real_cubic() {
        // a^4 - 1
        let p = DPoly::new(vec![c(-1.0), c(0.0), c(0.0), c(0.0), c(1.0)]);
        let mut r = poly_roots(&p).unwrap();
        r.sort_by(|a, b| a.arg().partial_cmp(&b.arg()).unwrap());
        for z in &r {
            assert!((z.powi(4) - c(1.0)).norm() < 1e-13);
        }
        assert_eq!(r.len(), 4);
        // (a - 1)(a - 2)(a + 3)
        let q = DPoly::linear(c(-1.0), c(1.0)).times(&DPoly::linear(c(-2.0), c(1.0))).times(&DPoly::linear(c(3.0), c(1.0)));
        let mut re: Vec<f64> = poly_roots(&q).unwrap().iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in re.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(min_relative_gap(&poly_roots(&q).unwrap()) > 0.4);
    }

    #[test]
    fn exact_deflation() {
        let q = |n: i64| Q::from_int(n);
        // a^2 - 1 = (a - 1)(a + 1)
        let p = DPoly::new(vec![q(-1), q(0), q(1)]);
        assert_eq!(p.deflate(&q(1)).unwrap(), DPoly::new(vec![q(1), q(1)]));
        assert!(p.deflate(&q(2)).is_none());
        assert_eq!(p.deriv(), DPoly::new(vec![q(0), q(2)]));
    }
}
