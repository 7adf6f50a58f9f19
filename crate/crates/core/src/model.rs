//! Model parameters shared by every module.
//!
//! A model has `m` numerator colors `I`, `r` denominator colors `J` and an optional
//! exponential parameter `u₋₁`. The weight function is
//! `G(z) = e^{u₋₁ z} Π_I (1 + u_i z) / Π_J (1 + u_j z)`. Colors with the same
//! parameter on the same side may be grouped with a multiplicity; the spectral
//! solver exploits this, the oracle expands it.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ring::{RingError, Scalar, Q};

/// Crate-wide error type.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    Ring(RingError),
    /// Invalid model parameters or call arguments.
    Model(String),
    /// An analytic assumption of the recursion fails for this model.
    Assumption(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Ring(e) => write!(f, "{e}"),
            Error::Model(s) => write!(f, "model error: {s}"),
            Error::Assumption(s) => write!(f, "assumption violated: {s}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

impl From<RingError> for Error {
    fn from(e: RingError) -> Self {
        Error::Ring(e)
    }
}

pub type Result<T> = core::result::Result<T, Error>;

/// One color class: parameter `u` repeated `mult` times.
#[derive(Clone, Debug, PartialEq)]
pub struct Color<F> {
    pub u: F,
    pub mult: u64,
}

/// Which side of the weight function a color sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    Num,
    Den,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<F> {
    pub num: Vec<Color<F>>,
    pub den: Vec<Color<F>>,
    pub u_exp: Option<F>,
    /// `p_1..p_{D₁}`.
    pub p: Vec<F>,
    /// `q_1..q_{D₂}`.
    pub q: Vec<F>,
}

impl<F: Scalar> ModelParams<F> {
    /// Single-multiplicity colors.
    pub fn new(num: Vec<F>, den: Vec<F>, p: Vec<F>, q: Vec<F>) -> Self {
        let wrap = |v: Vec<F>| v.into_iter().map(|u| Color { u, mult: 1 }).collect();
        ModelParams { num: wrap(num), den: wrap(den), u_exp: None, p, q }
    }

    pub fn with_exp(mut self, u: F) -> Self {
        self.u_exp = Some(u);
        self
    }

    pub fn m(&self) -> u64 {
        self.num.iter().map(|c| c.mult).sum()
    }

    pub fn r(&self) -> u64 {
        self.den.iter().map(|c| c.mult).sum()
    }

    pub fn d1(&self) -> usize {
        self.p.len()
    }

    pub fn d2(&self) -> usize {
        self.q.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.m() + self.r() == 0 && self.u_exp.is_none() {
            return Err(Error::Model("need at least one color".into()));
        }
        if self.p.is_empty() || self.q.is_empty() {
            return Err(Error::Model("need D1 >= 1 and D2 >= 1".into()));
        }
        for c in self.num.iter().chain(&self.den) {
            if c.u.is_zero() {
                return Err(Error::Model("color parameters must be nonzero".into()));
            }
            if c.mult == 0 {
                return Err(Error::Model("color multiplicity must be positive".into()));
            }
        }
        Ok(())
    }

    /// Color parameters in order `I` then `J`, with multiplicities expanded.
    pub fn expanded(&self) -> Result<(Vec<F>, Vec<F>)> {
        let total = self.m() + self.r();
        if total > 8 {
            return Err(Error::Model(format!("{total} colors is too many to expand")));
        }
        let ex = |v: &[Color<F>]| {
            v.iter().flat_map(|c| core::iter::repeat_n(c.u.clone(), c.mult as usize)).collect::<Vec<F>>()
        };
        Ok((ex(&self.num), ex(&self.den)))
    }

    /// `p_k`, zero beyond `D₁`.
    pub fn p_at(&self, k: usize) -> F {
        if k >= 1 && k <= self.p.len() {
            self.p[k - 1].clone()
        } else {
            F::zero()
        }
    }

    /// `q_k`, zero beyond `D₂`.
    pub fn q_at(&self, k: usize) -> F {
        if k >= 1 && k <= self.q.len() {
            self.q[k - 1].clone()
        } else {
            F::zero()
        }
    }

    pub fn map<G: Scalar>(&self, f: impl Fn(&F) -> G) -> ModelParams<G> {
        let mc = |v: &[Color<F>]| v.iter().map(|c| Color { u: f(&c.u), mult: c.mult }).collect();
        ModelParams {
            num: mc(&self.num),
            den: mc(&self.den),
            u_exp: self.u_exp.as_ref().map(&f),
            p: self.p.iter().map(&f).collect(),
            q: self.q.iter().map(&f).collect(),
        }
    }

    /// The same model with `p` replaced by `α·p`.
    pub fn scale_p(&self, alpha: &F) -> Self {
        let mut out = self.clone();
        out.p = self.p.iter().map(|x| x.times(alpha)).collect();
        out
    }
}

impl ModelParams<Q> {
    pub fn to_c64(&self) -> ModelParams<crate::ring::C64> {
        self.map(|x| x.to_c64())
    }
}
