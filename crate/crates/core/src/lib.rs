//! Linear-response conductivity of free lattice fermions in a random
//! potential, computed by exact diagonalization on finite boxes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuum;
pub mod correlators;
mod dense;
pub mod dyson;
pub mod error;
pub mod fields;
pub mod kubo;
pub mod lattice;
pub mod measures;
pub mod quad;
pub mod runner;
pub mod spectral;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/conductivity.md")]
    mod conductivity {}
    #[doc = include_str!("../../../book/src/free.md")]
    mod free {}
    #[doc = include_str!("../../../book/src/heat.md")]
    mod heat {}
    #[doc = include_str!("../../../book/src/dyson.md")]
    mod dyson {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
