//! Weighted Hurwitz numbers with rational weight functions.
//!
//! Numbers counting factorisations in the symmetric group are computed three ways:
//! by direct enumeration ([`oracle`]), from the spectral curve of the model
//! ([`spectral`], [`slices`]) and by topological recursion on that curve
//! ([`toprec`]). The crate is `no_std` with `alloc`.

#![no_std]
#[cfg(any(test, feature = "std"))]
extern crate std;
extern crate alloc;

pub mod model;
pub mod oracle;
pub mod ring;
pub mod roots;
pub mod slices;
pub mod spectral;
pub mod toprec;

pub use model::{Color, Error, ModelParams, Result};
