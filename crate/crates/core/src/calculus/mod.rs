//! Chart-level exterior calculus.
//!
//! Index conventions: coordinates, vector components and form indices are
//! zero-based throughout the library. A form of degree `k` stores one
//! coefficient per strictly increasing `k`-tuple and evaluates on vectors by
//! the determinant convention, so `(dx1 ^ dx2)(d1, d2) = 1` and
//! `d(omega)(X, Y) = X omega(Y) - Y omega(X) - omega([X, Y])`.

mod field;
mod form;

pub use field::{lie_bracket, VecField};
pub use form::{eval_form, eval_form_values, ext_d, interior, pair, wedge, Form, FormBuilder};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// An even-dimensional coordinate chart with a sampling box.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    dim: usize,
    bounds: Vec<(f64, f64)>,
    tol: f64,
}

impl Chart {
    /// Chart on the box `[-1, 1]^dim`.
    pub fn new(dim: usize) -> Result<Self> {
        Self::with_box(dim, vec![(-1.0, 1.0); dim])
    }

    pub fn with_box(dim: usize, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if dim < 2 || !dim.is_multiple_of(2) {
            return Err(Error::OddDimension(dim));
        }
        if bounds.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: bounds.len() });
        }
        for (k, (lo, hi)) in bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidBox(format!("interval {} is [{lo}, {hi}]", k + 1)));
            }
        }
        Ok(Chart { dim, bounds, tol: DEFAULT_TOLERANCE })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim && point.iter().zip(&self.bounds).all(|(x, (lo, hi))| lo <= x && x <= hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_or_degenerate_dimension_rejected() {
        assert_eq!(Chart::new(3), Err(Error::OddDimension(3)));
        assert_eq!(Chart::new(0), Err(Error::OddDimension(0)));
        assert!(Chart::new(2).is_ok());
    }

    #[test]
    fn box_shape_checked() {
        assert!(Chart::with_box(2, vec![(0.0, 1.0)]).is_err());
        assert!(Chart::with_box(2, vec![(0.0, 1.0), (2.0, 1.0)]).is_err());
        let c = Chart::with_box(2, vec![(0.0, 1.0), (-1.0, 1.0)]).unwrap();
        assert!(c.contains(&[0.5, -0.5]));
        assert!(!c.contains(&[1.5, 0.0]));
    }
}
