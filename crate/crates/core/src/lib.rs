//! Symbolic-numeric exterior calculus on local charts of almost-complex
//! manifolds.
//!
//! The layers build on one another:
//!
//! - [`expr`]: scalar expressions in chart coordinates, with a small parser
//!   and exact partial derivatives.
//! - [`calculus`]: vector fields and differential forms on a chart, with the
//!   Lie bracket, wedge, exterior derivative, interior product and pairing.
//! - [`acs`]: almost-complex structures, type projections, bigrading of forms
//!   and the four bidegree components of `d`.
//! - [`nijenhuis`]: the Nijenhuis tensor (bracket and coordinate routes), its
//!   strong squares, the functionals `K`/`L` and the intermediate and weak
//!   squares.
//! - [`verify`]: a seeded residual harness over a catalog of identities.
//! - [`cli`]: structure spec files, JSON reports and the command front end.

pub mod acs;
pub mod calculus;
pub mod cli;
pub mod error;
pub mod expr;
pub mod nijenhuis;
pub mod verify;

pub use error::{Error, Result};
pub use expr::{parse, ComplexNum, Expr};
