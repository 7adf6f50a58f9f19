//! Coefficient rings and truncated series.
//!
//! Every series carries one truncation order `T`: it stores the coefficients of
//! `t^0..=t^T` and nothing beyond. Combining two series of different orders is a
//! programming error; the plain operators panic and the `checked_*` variants
//! return [`RingError::OrderMismatch`].
//!
//! Parameters (`p`, `q`, `u`) enter as concrete scalars. The only symbolic
//! quantities are auxiliary variables such as `x̄ = 1/x`, held in [`Poly`], a
//! sparse Laurent polynomial keyed by fixed-width exponent vectors.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rationals.
pub type Q = BigRational;
/// Double precision complex numbers.
pub type C64 = Complex<f64>;

/// Errors raised by ring and series operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RingError {
    /// Two series with different truncation orders were combined.
    OrderMismatch { left: usize, right: usize },
    /// An element without inverse was inverted.
    NotInvertible,
    /// An operation was applied outside its domain.
    Domain(String),
}

impl fmt::Display for RingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingError::OrderMismatch { left, right } => {
                write!(f, "truncation orders differ: {left} vs {right}")
            }
            RingError::NotInvertible => write!(f, "element is not invertible"),
            RingError::Domain(s) => write!(f, "domain error: {s}"),
        }
    }
}

/// A commutative ring with unit.
///
/// Method names avoid the `core::ops` names so that types implementing both
/// never produce ambiguous calls.
pub trait Ring: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn negated(&self) -> Self;
    fn from_int(n: i64) -> Self;
    /// Multiplicative inverse when it exists in the ring.
    fn try_inv(&self) -> Option<Self>;

    fn add_in(&mut self, o: &Self) {
        *self = self.plus(o);
    }
}

/// A field of scalars that parameters live in.
pub trait Scalar: Ring {
    fn from_q(q: &Q) -> Self;
    fn to_c64(&self) -> C64;
    /// Converts a complex number, if the field contains it.
    fn from_c64(z: C64) -> Option<Self>;
    /// `true` for exact arithmetic.
    fn is_exact() -> bool;

    fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_q(&Q::new(BigInt::from(n), BigInt::from(d)))
    }

    fn inv(&self) -> Self {
        self.try_inv().expect("division by zero")
    }

    fn div(&self, o: &Self) -> Self {
        self.times(&o.inv())
    }

    fn magnitude(&self) -> f64 {
        self.to_c64().norm()
    }
}

impl Ring for Q {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn negated(&self) -> Self {
        -self
    }
    fn from_int(n: i64) -> Self {
        Q::from_integer(BigInt::from(n))
    }
    fn try_inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn add_in(&mut self, o: &Self) {
        *self += o;
    }
}

impl Scalar for Q {
    fn from_q(q: &Q) -> Self {
        q.clone()
    }
    fn to_c64(&self) -> C64 {
        C64::new(q_to_f64(self), 0.0)
    }
    fn from_c64(_: C64) -> Option<Self> {
        None
    }
    fn is_exact() -> bool {
        true
    }
}

impl Ring for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn negated(&self) -> Self {
        -self
    }
    fn from_int(n: i64) -> Self {
        C64::new(n as f64, 0.0)
    }
    fn try_inv(&self) -> Option<Self> {
        if Ring::is_zero(self) {
            None
        } else {
            Some(C64::new(1.0, 0.0) / self)
        }
    }
}

impl Scalar for C64 {
    fn from_q(q: &Q) -> Self {
        C64::new(q_to_f64(q), 0.0)
    }
    fn to_c64(&self) -> C64 {
        *self
    }
    fn from_c64(z: C64) -> Option<Self> {
        Some(z)
    }
    fn is_exact() -> bool {
        false
    }
}

/// Nearest `f64` to a rational, robust to huge numerators and denominators.
pub fn q_to_f64(q: &Q) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = q.numer().bits() as i64;
    let db = q.denom().bits() as i64;
    let shift = nb - db - 60;
    let scaled = if shift >= 0 {
        q.numer().abs() / (q.denom() << (shift as usize))
    } else {
        (q.numer().abs() << ((-shift) as usize)) / q.denom()
    };
    let mag = scaled.to_f64().unwrap_or(0.0) * num_traits::Float::powi(2.0f64, shift as i32);
    if q.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Parses `"a"`, `"a/b"` or a plain decimal such as `"-0.25"` into an exact rational.
pub fn parse_q(s: &str) -> Result<Q, RingError> {
    let s = s.trim();
    let bad = || RingError::Domain(alloc::format!("not a rational: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let digits = alloc::format!("{}{}", ip.trim_start_matches(['-', '+']), fp);
        let n: BigInt = if digits.is_empty() { return Err(bad()) } else { digits.parse().map_err(|_| bad())? };
        let d = num_traits::pow(BigInt::from(10), fp.len());
        let q = Q::new(n, d);
        return Ok(if neg { -q } else { q });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(n))
}

/// Formats a rational as `"n"` or `"n/d"`.
pub fn format_q(q: &Q) -> String {
    if q.denom().is_one() {
        alloc::format!("{}", q.numer())
    } else {
        alloc::format!("{}/{}", q.numer(), q.denom())
    }
}

// ---------------------------------------------------------------------------
// Sparse Laurent polynomials in auxiliary variables
// ---------------------------------------------------------------------------

/// Maximum number of auxiliary variables.
pub const NVARS: usize = 6;

/// Exponent vector; negative entries are allowed.
pub type Mono = [i16; NVARS];

/// The exponent vector of the constant monomial.
pub const ONE_MONO: Mono = [0; NVARS];

/// Sparse Laurent polynomial over a scalar field. No stored coefficient is zero.
#[derive(Clone, PartialEq)]
pub struct Poly<F> {
    terms: BTreeMap<Mono, F>,
}

impl<F: Scalar> fmt::Debug for Poly<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c:?})")?;
            for (i, e) in m.iter().enumerate() {
                if *e != 0 {
                    write!(f, "*v{i}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

impl<F: Scalar> Poly<F> {
    pub fn constant(c: F) -> Self {
        Self::monomial(ONE_MONO, c)
    }

    pub fn monomial(m: Mono, c: F) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    /// The variable `v_i`.
    pub fn var(i: usize) -> Self {
        Self::monomial(unit_mono(i, 1), F::one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &F)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Mono) -> F {
        self.terms.get(m).cloned().unwrap_or_else(F::zero)
    }

    pub fn add_term(&mut self, m: Mono, c: &F) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(e) => {
                e.add_in(c);
                if e.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    pub fn scale(&self, c: &F) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, v)| (*m, v.times(c))).filter(|(_, v)| !v.is_zero()).collect() }
    }

    /// Multiplies by the monomial `m`.
    pub fn shift(&self, m: &Mono) -> Self {
        Poly { terms: self.terms.iter().map(|(k, v)| (mono_mul(k, m), v.clone())).collect() }
    }

    /// Partial derivative in `v_i`.
    pub fn deriv(&self, i: usize) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if m[i] != 0 {
                let mut k = *m;
                k[i] -= 1;
                out.add_term(k, &c.times(&F::from_int(m[i] as i64)));
            }
        }
        out
    }

    /// Smallest and largest exponent of `v_i`, or `None` for the zero polynomial.
    pub fn degree_range(&self, i: usize) -> Option<(i16, i16)> {
        let mut it = self.terms.keys().map(|m| m[i]);
        let first = it.next()?;
        Some(it.fold((first, first), |(a, b), e| (a.min(e), b.max(e))))
    }

    /// Variables with a nonzero exponent somewhere.
    pub fn used_vars(&self) -> Vec<usize> {
        (0..NVARS).filter(|&i| self.terms.keys().any(|m| m[i] != 0)).collect()
    }

    /// Renames variables: `v_i` becomes `v_{map[i]}`. Entries for unused variables are ignored.
    pub fn rename(&self, map: &[usize]) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut k = ONE_MONO;
            for (i, e) in m.iter().enumerate() {
                if *e != 0 {
                    k[map[i]] += *e;
                }
            }
            out.add_term(k, c);
        }
        out
    }

    /// Evaluates at complex values of the variables.
    pub fn eval_c64(&self, at: &[C64]) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut v = c.to_c64();
            for (i, e) in m.iter().enumerate() {
                if *e != 0 {
                    v *= at[i].powi(*e as i32);
                }
            }
            s += v;
        }
        s
    }

    /// Keeps the terms whose exponent vector satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(&Mono) -> bool) -> Self {
        Poly { terms: self.terms.iter().filter(|(m, _)| keep(m)).map(|(m, c)| (*m, c.clone())).collect() }
    }

    /// Exact quotient by `v_a - v_b`; fails when the remainder is nonzero. For floating
    /// scalars a remainder below `1e-9` of the largest coefficient counts as zero.
    pub fn div_difference(&self, a: usize, b: usize) -> Result<Self, RingError> {
        // Synthetic division in v_a, working downward from the top exponent of v_a.
        // P = Σ_e P_e v_a^e with P_e free of v_a. Quotient Q_{e-1} = P_e + v_b Q_e.
        let mut by_exp: BTreeMap<i16, Poly<F>> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut k = *m;
            let e = k[a];
            k[a] = 0;
            by_exp.entry(e).or_insert_with(Self::zero).add_term(k, c);
        }
        let Some((&lo, _)) = by_exp.iter().next() else {
            return Ok(Self::zero());
        };
        let hi = *by_exp.keys().next_back().unwrap();
        let vb = Self::var(b);
        let mut quot = Self::zero();
        let mut carry = Self::zero();
        let mut e = hi;
        while e > lo {
            let pe = by_exp.get(&e).cloned().unwrap_or_else(Self::zero);
            carry = pe.plus(&vb.times(&carry));
            quot = quot.plus(&carry.shift(&unit_mono(a, e - 1)));
            e -= 1;
        }
        let rem = by_exp.get(&lo).cloned().unwrap_or_else(Self::zero).plus(&vb.times(&carry));
        let tiny = !F::is_exact() && {
            let scale = self.terms.values().map(|c| c.magnitude()).fold(0.0, f64::max);
            rem.terms.values().all(|c| c.magnitude() <= 1e-9 * scale)
        };
        if lo != 0 || !(rem.is_zero() || tiny) {
            // A negative lowest exponent is handled by clearing v_a first.
            if lo < 0 {
                let shifted = self.shift(&unit_mono(a, -lo));
                let q = shifted.div_difference(a, b)?;
                return Ok(q.shift(&unit_mono(a, lo)));
            }
            return Err(RingError::Domain("not divisible by a variable difference".into()));
        }
        Ok(quot)
    }
}

impl<F: Scalar> Ring for Poly<F> {
    fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }
    fn one() -> Self {
        Self::constant(F::one())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn plus(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.add_in(o);
        out
    }
    fn add_in(&mut self, o: &Self) {
        for (m, c) in &o.terms {
            self.add_term(*m, c);
        }
    }
    fn minus(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(*m, &c.negated());
        }
        out
    }
    fn times(&self, o: &Self) -> Self {
        let mut out = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                out.add_term(mono_mul(ma, mb), &ca.times(cb));
            }
        }
        out
    }
    fn negated(&self) -> Self {
        Poly { terms: self.terms.iter().map(|(m, c)| (*m, c.negated())).collect() }
    }
    fn from_int(n: i64) -> Self {
        Self::constant(F::from_int(n))
    }
    fn try_inv(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next().unwrap();
        let mut k = ONE_MONO;
        for i in 0..NVARS {
            k[i] = -m[i];
        }
        Some(Self::monomial(k, c.try_inv()?))
    }
}

/// Exponent vector with `e` in slot `i` and zeros elsewhere.
pub fn unit_mono(i: usize, e: i16) -> Mono {
    let mut m = ONE_MONO;
    m[i] = e;
    m
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut m = *a;
    for i in 0..NVARS {
        m[i] += b[i];
    }
    m
}

// ---------------------------------------------------------------------------
// Truncated univariate series
// ---------------------------------------------------------------------------

/// Power series truncated after `t^order`.
#[derive(Clone, PartialEq, Debug)]
pub struct Series<C> {
    c: Vec<C>,
}

/// A series in the formal parameter `t`.
pub type TSeries<C> = Series<C>;

impl<C: Ring> Series<C> {
    pub fn zero(order: usize) -> Self {
        Series { c: vec![C::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        Self::constant(C::one(), order)
    }

    pub fn constant(v: C, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.c[0] = v;
        s
    }

    /// `v * t^k`, zero when `k > order`.
    pub fn monomial(v: C, k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.c[k] = v;
        }
        s
    }

    /// Builds a series from leading coefficients; missing ones are zero, extra ones dropped.
    pub fn from_coeffs(mut c: Vec<C>, order: usize) -> Self {
        c.resize(order + 1, C::zero());
        Series { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coeffs(&self) -> &[C] {
        &self.c
    }

    pub fn coeff(&self, k: usize) -> C {
        self.c.get(k).cloned().unwrap_or_else(C::zero)
    }

    pub fn coeff_ref(&self, k: usize) -> &C {
        &self.c[k]
    }

    pub fn set_coeff(&mut self, k: usize, v: C) {
        self.c[k] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    /// Index of the first nonzero coefficient, `None` for zero.
    pub fn valuation(&self) -> Option<usize> {
        self.c.iter().position(|x| !x.is_zero())
    }

    /// Same coefficients at a lower order.
    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order(), "cannot raise the order by truncation");
        Series { c: self.c[..=order].to_vec() }
    }

    /// Pads with zeros to a higher order. The padding is a guess, not knowledge.
    pub fn pad(&self, order: usize) -> Self {
        Self::from_coeffs(self.c.clone(), order)
    }

    pub fn map<D: Ring>(&self, f: impl Fn(&C) -> D) -> Series<D> {
        Series { c: self.c.iter().map(f).collect() }
    }

    fn check(&self, o: &Self) -> Result<(), RingError> {
        if self.order() == o.order() {
            Ok(())
        } else {
            Err(RingError::OrderMismatch { left: self.order(), right: o.order() })
        }
    }

    pub fn checked_plus(&self, o: &Self) -> Result<Self, RingError> {
        self.check(o)?;
        Ok(Series { c: self.c.iter().zip(&o.c).map(|(a, b)| a.plus(b)).collect() })
    }

    pub fn checked_minus(&self, o: &Self) -> Result<Self, RingError> {
        self.check(o)?;
        Ok(Series { c: self.c.iter().zip(&o.c).map(|(a, b)| a.minus(b)).collect() })
    }

    pub fn checked_times(&self, o: &Self) -> Result<Self, RingError> {
        self.check(o)?;
        let n = self.c.len();
        let mut c = vec![C::zero(); n];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c[..n - i].iter().enumerate() {
                if !b.is_zero() {
                    c[i + j].add_in(&a.times(b));
                }
            }
        }
        Ok(Series { c })
    }

    pub fn plus(&self, o: &Self) -> Self {
        self.checked_plus(o).unwrap()
    }

    pub fn minus(&self, o: &Self) -> Self {
        self.checked_minus(o).unwrap()
    }

    pub fn times(&self, o: &Self) -> Self {
        self.checked_times(o).unwrap()
    }

    pub fn add_in(&mut self, o: &Self) {
        assert_eq!(self.order(), o.order(), "truncation orders differ");
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            a.add_in(b);
        }
    }

    pub fn negated(&self) -> Self {
        self.map(|x| x.negated())
    }

    /// Multiplies every coefficient by `v`.
    pub fn scale(&self, v: &C) -> Self {
        self.map(|x| x.times(v))
    }

    /// Multiplies by `t^k`, dropping what falls past the order.
    pub fn shift_up(&self, k: usize) -> Self {
        let n = self.c.len();
        let mut c = vec![C::zero(); n];
        if k < n {
            c[k..].clone_from_slice(&self.c[..n - k]);
        }
        Series { c }
    }

    /// Divides by `t^k` when the valuation allows; the top `k` coefficients become unknown
    /// and the order drops by `k`.
    pub fn shift_down(&self, k: usize) -> Result<Self, RingError> {
        if self.c[..k.min(self.c.len())].iter().any(|x| !x.is_zero()) || k > self.order() {
            return Err(RingError::Domain("valuation too small to divide by t^k".into()));
        }
        Ok(Series { c: self.c[k..].to_vec() })
    }

    /// Multiplicative inverse; the constant term must be a unit of `C`.
    pub fn inv(&self) -> Result<Self, RingError> {
        let a0inv = self.c[0].try_inv().ok_or(RingError::NotInvertible)?;
        let n = self.c.len();
        let mut b: Vec<C> = Vec::with_capacity(n);
        b.push(a0inv.clone());
        for k in 1..n {
            let mut s = C::zero();
            for j in 1..=k {
                if !self.c[j].is_zero() {
                    s.add_in(&self.c[j].times(&b[k - j]));
                }
            }
            b.push(s.times(&a0inv).negated());
        }
        Ok(Series { c: b })
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.order());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.times(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.times(&base);
            }
        }
        acc
    }

    /// Formal derivative; the top coefficient becomes zero.
    pub fn deriv(&self) -> Self {
        let n = self.c.len();
        let mut c = vec![C::zero(); n];
        for k in 1..n {
            c[k - 1] = self.c[k].times(&C::from_int(k as i64));
        }
        Series { c }
    }

    /// `self(g)` for `g` with zero constant term.
    pub fn compose(&self, g: &Self) -> Result<Self, RingError> {
        self.check(g)?;
        if !g.c[0].is_zero() {
            return Err(RingError::Domain("inner series has a nonzero constant term".into()));
        }
        let n = self.c.len();
        let mut acc = Self::constant(self.c[n - 1].clone(), n - 1);
        for k in (0..n - 1).rev() {
            acc = acc.times(g);
            acc.c[0].add_in(&self.c[k]);
        }
        Ok(acc)
    }

    /// Evaluates the truncated polynomial at a point of the coefficient ring.
    pub fn eval(&self, at: &C) -> C {
        let mut acc = C::zero();
        for a in self.c.iter().rev() {
            acc = acc.times(at).plus(a);
        }
        acc
    }
}

impl<F: Scalar> Series<F> {
    /// `exp(self)` for zero constant term.
    pub fn exp(&self) -> Result<Self, RingError> {
        if !self.c[0].is_zero() {
            return Err(RingError::Domain("exp needs a zero constant term".into()));
        }
        let n = self.c.len();
        let mut e = vec![F::zero(); n];
        e[0] = F::one();
        for k in 1..n {
            let mut s = F::zero();
            for j in 1..=k {
                if !self.c[j].is_zero() {
                    s.add_in(&self.c[j].times(&F::from_int(j as i64)).times(&e[k - j]));
                }
            }
            e[k] = s.div(&F::from_int(k as i64));
        }
        Ok(Series { c: e })
    }

    /// Square root with constant term one.
    pub fn sqrt_unit(&self) -> Result<Self, RingError> {
        if self.c[0] != F::one() {
            return Err(RingError::Domain("sqrt needs constant term one".into()));
        }
        let n = self.c.len();
        let mut r = vec![F::zero(); n];
        r[0] = F::one();
        let two = F::from_int(2);
        for k in 1..n {
            let mut s = self.c[k].clone();
            for j in 1..k {
                s = s.minus(&r[j].times(&r[k - j]));
            }
            r[k] = s.div(&two);
        }
        Ok(Series { c: r })
    }

    /// Compositional inverse of a series `a1 t + a2 t^2 + …` with `a1 ≠ 0`.
    pub fn reversion(&self) -> Result<Self, RingError> {
        if !self.c[0].is_zero() || self.order() == 0 || self.c[1].is_zero() {
            return Err(RingError::Domain("reversion needs t·(unit)".into()));
        }
        let n = self.order();
        let a1inv = self.c[1].inv();
        // Fixed point r = (t - (f(r) - a1 r)) / a1, one new coefficient per pass.
        let t = Self::monomial(F::one(), 1, n);
        let mut lin = self.clone();
        lin.c[1] = F::zero();
        let mut r = t.scale(&a1inv);
        for _ in 0..n {
            r = t.minus(&lin.compose(&r)?).scale(&a1inv);
        }
        Ok(r)
    }
}

impl<C: Ring> Ring for Series<C> {
    fn zero() -> Self {
        panic!("series zero needs an order")
    }
    fn one() -> Self {
        panic!("series one needs an order")
    }
    fn is_zero(&self) -> bool {
        Series::is_zero(self)
    }
    fn plus(&self, o: &Self) -> Self {
        Series::plus(self, o)
    }
    fn minus(&self, o: &Self) -> Self {
        Series::minus(self, o)
    }
    fn times(&self, o: &Self) -> Self {
        Series::times(self, o)
    }
    fn negated(&self) -> Self {
        Series::negated(self)
    }
    fn from_int(_: i64) -> Self {
        panic!("series from_int needs an order")
    }
    fn try_inv(&self) -> Option<Self> {
        self.inv().ok()
    }
}

/// Lifts a scalar series to a series of constant polynomials.
pub fn lift<F: Scalar>(s: &Series<F>) -> Series<Poly<F>> {
    s.map(|c| Poly::constant(c.clone()))
}

/// Scales a polynomial-coefficient series by a scalar series.
pub fn times_scalar<F: Scalar>(a: &Series<Poly<F>>, s: &Series<F>) -> Series<Poly<F>> {
    a.times(&lift(s))
}

// ---------------------------------------------------------------------------
// Bivariate series: power series in an auxiliary w with series coefficients
// ---------------------------------------------------------------------------

/// Power series in `w` truncated after `w^deg`, with coefficients in `Series<C>`.
///
/// `poly` records that the stored terms are the whole element, so dropping
/// higher powers of `w` loses nothing.
#[derive(Clone, PartialEq, Debug)]
pub struct WSeries<C> {
    c: Vec<Series<C>>,
    poly: bool,
}

impl<C: Ring> WSeries<C> {
    pub fn zero(deg: usize, order: usize) -> Self {
        WSeries { c: vec![Series::zero(order); deg + 1], poly: true }
    }

    pub fn one(deg: usize, order: usize) -> Self {
        let mut s = Self::zero(deg, order);
        s.c[0] = Series::one(order);
        s
    }

    /// An element known through `w^deg`, with unknown higher terms.
    pub fn truncated(mut c: Vec<Series<C>>, deg: usize, order: usize) -> Self {
        c.resize(deg + 1, Series::zero(order));
        WSeries { c, poly: false }
    }

    /// A polynomial in `w`; the truncation degree is the length minus one.
    pub fn polynomial(c: Vec<Series<C>>) -> Self {
        assert!(!c.is_empty());
        WSeries { c, poly: true }
    }

    pub fn deg(&self) -> usize {
        self.c.len() - 1
    }

    pub fn order(&self) -> usize {
        self.c[0].order()
    }

    pub fn is_polynomial(&self) -> bool {
        self.poly
    }

    /// Marks the stored terms as complete. Used when higher powers of `w`
    /// are known to vanish at the working order.
    pub fn assume_complete(mut self) -> Self {
        self.poly = true;
        self
    }

    pub fn coeff(&self, k: usize) -> Series<C> {
        self.c.get(k).cloned().unwrap_or_else(|| Series::zero(self.order()))
    }

    pub fn coeffs(&self) -> &[Series<C>] {
        &self.c
    }

    /// Changes the truncation degree. Raising it is only allowed for polynomials.
    pub fn with_deg(&self, deg: usize) -> Self {
        let order = self.order();
        if deg == self.deg() {
            return self.clone();
        }
        if deg > self.deg() {
            assert!(self.poly, "cannot extend a truncated series");
            let mut c = self.c.clone();
            c.resize(deg + 1, Series::zero(order));
            return WSeries { c, poly: true };
        }
        let poly = self.poly && self.c[deg + 1..].iter().all(|s| s.is_zero());
        WSeries { c: self.c[..=deg].to_vec(), poly }
    }

    fn common_deg(&self, o: &Self) -> usize {
        match (self.poly, o.poly) {
            (true, true) => self.deg().max(o.deg()),
            (true, false) => o.deg(),
            (false, true) => self.deg(),
            (false, false) => self.deg().min(o.deg()),
        }
    }

    pub fn plus(&self, o: &Self) -> Self {
        let d = self.common_deg(o);
        let (a, b) = (self.fit(d), o.fit(d));
        WSeries { c: a.c.iter().zip(&b.c).map(|(x, y)| x.plus(y)).collect(), poly: self.poly && o.poly }
    }

    pub fn minus(&self, o: &Self) -> Self {
        self.plus(&o.negated())
    }

    fn fit(&self, d: usize) -> Self {
        self.with_deg(d)
    }

    pub fn negated(&self) -> Self {
        WSeries { c: self.c.iter().map(|s| s.negated()).collect(), poly: self.poly }
    }

    pub fn scale(&self, v: &Series<C>) -> Self {
        WSeries { c: self.c.iter().map(|s| s.times(v)).collect(), poly: self.poly }
    }

    /// Product. Two polynomials multiply exactly (degrees add); otherwise the
    /// result is truncated at the smaller known degree.
    pub fn times(&self, o: &Self) -> Self {
        let order = self.order();
        assert_eq!(order, o.order(), "truncation orders differ");
        let (deg, poly) = if self.poly && o.poly {
            (self.deg() + o.deg(), true)
        } else {
            (self.common_deg(o), false)
        };
        let mut c = vec![Series::zero(order); deg + 1];
        for (i, a) in self.c.iter().enumerate() {
            if i > deg || a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                if i + j > deg {
                    break;
                }
                if !b.is_zero() {
                    c[i + j].add_in(&a.times(b));
                }
            }
        }
        WSeries { c, poly }
    }

    /// Product truncated after `w^deg`.
    pub fn times_trunc(&self, o: &Self, deg: usize) -> Self {
        self.with_deg_lossy(deg).times(&o.with_deg_lossy(deg)).with_deg_lossy(deg)
    }

    fn with_deg_lossy(&self, deg: usize) -> Self {
        if deg <= self.deg() || self.poly {
            let mut s = self.with_deg(deg);
            s.poly = false;
            s
        } else {
            panic!("series known only through w^{}, asked for w^{deg}", self.deg())
        }
    }

    /// Inverse truncated after `w^deg`; the `w^0` coefficient must be a unit.
    pub fn inv(&self, deg: usize) -> Result<Self, RingError> {
        let order = self.order();
        let a = self.with_deg_lossy(deg);
        let a0inv = a.c[0].inv()?;
        let mut b: Vec<Series<C>> = Vec::with_capacity(deg + 1);
        b.push(a0inv.clone());
        for k in 1..=deg {
            let mut s = Series::zero(order);
            for j in 1..=k {
                if !a.c[j].is_zero() {
                    s.add_in(&a.c[j].times(&b[k - j]));
                }
            }
            b.push(s.times(&a0inv).negated());
        }
        Ok(WSeries { c: b, poly: false })
    }

    /// Power truncated after `w^deg`.
    pub fn pow_trunc(&self, mut e: u64, deg: usize) -> Self {
        let order = self.order();
        let mut base = self.with_deg_lossy(deg);
        let mut acc = Self::one(deg, order);
        acc.poly = false;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.times(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.times(&base);
            }
        }
        acc
    }

    /// Largest `v` such that every stored `w^k` coefficient has `t`-valuation at least `v·k`
    /// is at least one: the element is a series in `t` and `t w`.
    pub fn is_graded(&self) -> bool {
        self.c.iter().enumerate().all(|(k, s)| s.valuation().is_none_or(|v| v >= k))
    }

    /// Substitutes `g` for `w`.
    ///
    /// The result is exact at order `T` when `self` is a polynomial, when it is graded
    /// (a series in `t` and `t w`) and known through `w^T`, or when `g` has
    /// positive `t`-valuation large enough that the unknown tail vanishes.
    pub fn compose(&self, g: &Series<C>) -> Result<Series<C>, RingError> {
        let order = self.order();
        if g.order() != order {
            return Err(RingError::OrderMismatch { left: order, right: g.order() });
        }
        let vg = g.valuation().unwrap_or(order + 1);
        let ok = self.poly || (self.is_graded() && self.deg() >= order) || (vg >= 1 && (self.deg() + 1) * vg > order);
        if !ok {
            return Err(RingError::Domain("substitution does not terminate at the working order".into()));
        }
        let mut acc = self.c[self.deg()].clone();
        for k in (0..self.deg()).rev() {
            acc = acc.times(g).plus(&self.c[k]);
        }
        Ok(acc)
    }

    /// Substitutes `t^k`-scaled values: evaluates at `w = at` coefficientwise in `t`.
    pub fn eval_w(&self, at: &C) -> Series<C> {
        let mut acc = self.c[self.deg()].clone();
        for k in (0..self.deg()).rev() {
            acc = acc.scale(at).plus(&self.c[k]);
        }
        acc
    }

    pub fn map<D: Ring>(&self, f: impl Fn(&C) -> D) -> WSeries<D> {
        WSeries { c: self.c.iter().map(|s| s.map(&f)).collect(), poly: self.poly }
    }

    /// Derivative in `w`.
    pub fn deriv(&self) -> Self {
        let order = self.order();
        let mut c: Vec<Series<C>> = (1..=self.deg()).map(|k| self.c[k].scale(&C::from_int(k as i64))).collect();
        if c.is_empty() {
            c.push(Series::zero(order));
        }
        WSeries { c, poly: self.poly }
    }
}

impl<F: Scalar> WSeries<F> {
    /// `exp(self)` truncated after `w^deg`, for elements whose every term is
    /// nilpotent at the working truncation (no `t^0 w^0` term).
    pub fn exp_trunc(&self, deg: usize) -> Result<Self, RingError> {
        let order = self.order();
        if !self.coeff(0).coeff(0).is_zero() {
            return Err(RingError::Domain("exp needs a zero constant term".into()));
        }
        let f = self.with_deg_lossy(deg);
        let mut acc = Self::one(deg, order);
        acc.poly = false;
        let mut term = acc.clone();
        for j in 1..=(deg + order + 1) {
            term = term.times(&f);
            let inv = F::from_ratio(1, j as i64);
            term = term.scale(&Series::constant(inv, order));
            if term.c.iter().all(|s| s.is_zero()) {
                break;
            }
            acc = acc.plus(&term);
        }
        Ok(acc)
    }
}

// ---------------------------------------------------------------------------
// Laurent polynomials in z with series coefficients
// ---------------------------------------------------------------------------

/// Finite Laurent polynomial `Σ_{k=lo}^{hi} c_k z^k` with `Series<C>` coefficients.
#[derive(Clone, PartialEq, Debug)]
pub struct ZLaurent<C> {
    lo: i32,
    c: Vec<Series<C>>,
    order: usize,
}

impl<C: Ring> ZLaurent<C> {
    pub fn zero(order: usize) -> Self {
        ZLaurent { lo: 0, c: Vec::new(), order }
    }

    pub fn new(lo: i32, c: Vec<Series<C>>, order: usize) -> Self {
        let mut z = ZLaurent { lo, c, order };
        z.trim();
        z
    }

    /// `Σ_k a_k z^k` from a polynomial in `z`.
    pub fn from_pos(a: &WSeries<C>) -> Self {
        Self::new(0, a.coeffs().to_vec(), a.order())
    }

    /// `Σ_k b_k z^{-k}` from a polynomial in `1/z`.
    pub fn from_neg(b: &WSeries<C>) -> Self {
        let mut c = b.coeffs().to_vec();
        c.reverse();
        Self::new(-(b.deg() as i32), c, b.order())
    }

    fn trim(&mut self) {
        while self.c.last().is_some_and(|s| s.is_zero()) {
            self.c.pop();
        }
        while self.c.first().is_some_and(|s| s.is_zero()) {
            self.c.remove(0);
            self.lo += 1;
        }
        if self.c.is_empty() {
            self.lo = 0;
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Lowest and highest powers present, `None` for zero.
    pub fn range(&self) -> Option<(i32, i32)> {
        if self.c.is_empty() {
            None
        } else {
            Some((self.lo, self.lo + self.c.len() as i32 - 1))
        }
    }

    pub fn coeff(&self, k: i32) -> Series<C> {
        let i = k - self.lo;
        if i < 0 || i as usize >= self.c.len() {
            Series::zero(self.order)
        } else {
            self.c[i as usize].clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn plus(&self, o: &Self) -> Self {
        assert_eq!(self.order, o.order, "truncation orders differ");
        let (Some((a, b)), Some((c, d))) = (self.range(), o.range()) else {
            return if self.is_zero() { o.clone() } else { self.clone() };
        };
        let lo = a.min(c);
        let hi = b.max(d);
        let v = (lo..=hi).map(|k| self.coeff(k).plus(&o.coeff(k))).collect();
        Self::new(lo, v, self.order)
    }

    pub fn minus(&self, o: &Self) -> Self {
        self.plus(&o.negated())
    }

    pub fn negated(&self) -> Self {
        ZLaurent { lo: self.lo, c: self.c.iter().map(|s| s.negated()).collect(), order: self.order }
    }

    pub fn times(&self, o: &Self) -> Self {
        assert_eq!(self.order, o.order, "truncation orders differ");
        if self.is_zero() || o.is_zero() {
            return Self::zero(self.order);
        }
        let mut c = vec![Series::zero(self.order); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                c[i + j].add_in(&a.times(b));
            }
        }
        Self::new(self.lo + o.lo, c, self.order)
    }

    pub fn scale(&self, v: &Series<C>) -> Self {
        Self::new(self.lo, self.c.iter().map(|s| s.times(v)).collect(), self.order)
    }

    pub fn map<D: Ring>(&self, f: impl Fn(&C) -> D) -> ZLaurent<D> {
        ZLaurent { lo: self.lo, c: self.c.iter().map(|s| s.map(&f)).collect(), order: self.order }
    }

    /// Keeps the terms with exponent `>= 0`.
    pub fn nonneg_part(&self) -> Self {
        self.window(0, i32::MAX)
    }

    /// Keeps the terms with exponent `< 0`.
    pub fn neg_part(&self) -> Self {
        self.window(i32::MIN, -1)
    }

    /// Keeps the terms with exponent in `lo..=hi`.
    pub fn window(&self, lo: i32, hi: i32) -> Self {
        let Some((a, b)) = self.range() else { return self.clone() };
        let lo = lo.max(a);
        let hi = hi.min(b);
        if lo > hi {
            return Self::zero(self.order);
        }
        Self::new(lo, (lo..=hi).map(|k| self.coeff(k)).collect(), self.order)
    }

    /// Evaluates `t`-coefficientwise at `z = at`, where `at` lives in the coefficient ring.
    pub fn eval_z(&self, at: &C, at_inv: &C) -> Series<C> {
        let mut acc = Series::zero(self.order);
        let Some((lo, hi)) = self.range() else { return acc };
        for k in lo..=hi {
            let p = if k >= 0 { ring_pow(at, k as u64) } else { ring_pow(at_inv, (-k) as u64) };
            acc.add_in(&self.coeff(k).scale(&p));
        }
        acc
    }
}

/// `a^e` by repeated squaring.
pub fn ring_pow<C: Ring>(a: &C, mut e: u64) -> C {
    let mut base = a.clone();
    let mut acc = C::one();
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.times(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.times(&base);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Q {
        Q::new(BigInt::from(n), BigInt::from(d))
    }

    fn qs(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&n| Q::from_int(n)).collect()
    }

    fn arb_series(order: usize) -> impl Strategy<Value = Series<Q>> {
        prop::collection::vec((-5i64..6, 1i64..4), order + 1)
            .prop_map(move |v| Series::from_coeffs(v.into_iter().map(|(n, d)| q(n, d)).collect(), order))
    }

    #[test]
    fn inverse_of_one_minus_t() {
        let s = Series::from_coeffs(qs(&[1, -1]), 4);
        assert_eq!(s.inv().unwrap(), Series::from_coeffs(qs(&[1, 1, 1, 1, 1]), 4));
    }

    #[test]
    fn mixed_orders_are_refused() {
        let a = Series::<Q>::one(3);
        let b = Series::<Q>::one(4);
        assert_eq!(a.checked_times(&b), Err(RingError::OrderMismatch { left: 3, right: 4 }));
    }

    #[test]
    fn compose_geometric_with_t() {
        // f(w) = 1 + w + w^2 at w = t, order 2.
        let f = WSeries::polynomial(vec![Series::one(2), Series::one(2), Series::one(2)]);
        let g = Series::monomial(q(1, 1), 1, 2);
        assert_eq!(f.compose(&g).unwrap(), Series::from_coeffs(qs(&[1, 1, 1]), 2));
    }

    #[test]
    fn compose_polynomial_with_unit_argument() {
        // (x̄ + t x̄^2)^2 through order 2.
        let xb = Poly::<Q>::var(0);
        let g = Series::from_coeffs(vec![xb.clone(), xb.times(&xb)], 2);
        let f = WSeries::polynomial(vec![Series::zero(2), Series::zero(2), Series::one(2)]);
        assert_eq!(f.compose(&g).unwrap(), g.times(&g));
    }

    #[test]
    fn compose_unknown_tail_is_refused() {
        let f = WSeries::truncated(vec![Series::<Q>::one(2), Series::one(2)], 1, 2);
        let g = Series::constant(q(1, 1), 2);
        assert!(matches!(f.compose(&g), Err(RingError::Domain(_))));
    }

    #[test]
    fn difference_quotient() {
        // (a^3 - b^3)/(a - b) = a^2 + ab + b^2
        let a = Poly::<Q>::var(0);
        let b = Poly::<Q>::var(1);
        let p = a.times(&a).times(&a).minus(&b.times(&b).times(&b));
        let expect = a.times(&a).plus(&a.times(&b)).plus(&b.times(&b));
        assert_eq!(p.div_difference(0, 1).unwrap(), expect);
        assert!(a.plus(&Poly::one()).div_difference(0, 1).is_err());
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_q("3/4").unwrap(), q(3, 4));
        assert_eq!(parse_q("-0.25").unwrap(), q(-1, 4));
        assert_eq!(parse_q("7").unwrap(), q(7, 1));
        assert_eq!(format_q(&q(-6, 4)), "-3/2");
        assert!(parse_q("1/0").is_err());
    }

    #[test]
    fn q_to_f64_handles_huge_parts() {
        let big = num_traits::pow(BigInt::from(10), 400);
        let x = Q::new(big.clone() * BigInt::from(3), big);
        assert!((q_to_f64(&x) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn exp_and_sqrt_series() {
        let t = Series::monomial(q(1, 1), 1, 5);
        let e = t.exp().unwrap();
        assert_eq!(e.coeff(4), q(1, 24));
        let one_plus = Series::from_coeffs(qs(&[1, 2, 1]), 5);
        assert_eq!(one_plus.sqrt_unit().unwrap(), Series::from_coeffs(qs(&[1, 1]), 5));
    }

    #[test]
    fn w_inverse_and_power() {
        // (1 + w)^{-1} through w^3, and (1 + w)^3.
        let a = WSeries::polynomial(vec![Series::<Q>::one(0), Series::one(0)]);
        let inv = a.inv(3).unwrap();
        let got: Vec<Q> = inv.coeffs().iter().map(|s| s.coeff(0)).collect();
        assert_eq!(got, qs(&[1, -1, 1, -1]));
        let cube = a.pow_trunc(3, 5);
        let got: Vec<Q> = cube.coeffs().iter().map(|s| s.coeff(0)).collect();
        assert_eq!(got, qs(&[1, 3, 3, 1, 0, 0]));
    }

    proptest! {
        #[test]
        fn times_inverse_is_one(a in arb_series(5)) {
            prop_assume!(!Ring::is_zero(&a.coeff(0)));
            let b = a.inv().unwrap();
            prop_assert_eq!(a.times(&b), Series::one(5));
        }

        #[test]
        fn product_is_associative(a in arb_series(4), b in arb_series(4), c in arb_series(4)) {
            prop_assert_eq!(a.times(&b).times(&c), a.times(&b.times(&c)));
        }

        #[test]
        fn truncation_commutes_with_product(a in arb_series(5), b in arb_series(5), k in 0usize..5) {
            prop_assert_eq!(a.times(&b).truncate(k), a.truncate(k).times(&b.truncate(k)));
        }

        #[test]
        fn reversion_round_trips(a in arb_series(5)) {
            let mut f = a.clone();
            f.set_coeff(0, q(0, 1));
            prop_assume!(!Ring::is_zero(&f.coeff(1)));
            let r = f.reversion().unwrap();
            prop_assert_eq!(f.compose(&r).unwrap(), Series::monomial(q(1, 1), 1, 5));
        }

        #[test]
        fn poly_product_distributes(a in -4i64..5, b in -4i64..5, c in 1i64..4) {
            let x = Poly::<Q>::var(0);
            let y = Poly::<Q>::var(1);
            let p = x.scale(&Q::from_int(a)).plus(&y.scale(&Q::from_int(b)));
            let r = y.plus(&Poly::from_int(c));
            prop_assert_eq!(p.times(&r.plus(&x)), p.times(&r).plus(&p.times(&x)));
        }
    }
}
