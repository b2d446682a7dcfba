use crate::error::{Error, Result};
use crate::expr::{ComplexNum, Evaluator, Expr};

/// A (possibly complex-valued) vector field `sum_r comps[r] d_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct VecField {
    comps: Vec<Expr>,
}

impl VecField {
    pub fn new(comps: Vec<Expr>) -> Self {
        VecField { comps }
    }

    pub fn zero(dim: usize) -> Self {
        VecField { comps: vec![Expr::zero(); dim] }
    }

    /// The coordinate field `d_i` (zero-based `i`).
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut comps = vec![Expr::zero(); dim];
        comps[i] = Expr::one();
        VecField { comps }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn component(&self, r: usize) -> &Expr {
        &self.comps[r]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_zero)
    }

    pub fn scale(&self, f: &Expr) -> VecField {
        VecField { comps: self.comps.iter().map(|c| f * c).collect() }
    }

    pub fn scale_const(&self, c: ComplexNum) -> VecField {
        VecField { comps: self.comps.iter().map(|e| e.scale(c)).collect() }
    }

    pub fn add(&self, other: &VecField) -> Result<VecField> {
        check_dim(self.dim(), other.dim())?;
        Ok(VecField { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect() })
    }

    pub fn sub(&self, other: &VecField) -> Result<VecField> {
        check_dim(self.dim(), other.dim())?;
        Ok(VecField { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect() })
    }

    /// Directional derivative `X(f) = sum_p X^p d_p f`.
    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::sum(self.comps.iter().enumerate().map(|(p, c)| c * f.diff(p)))
    }

    pub fn eval(&self, ev: &mut Evaluator) -> Result<Vec<ComplexNum>> {
        self.comps.iter().map(|c| ev.eval(c).map_err(Error::from)).collect()
    }

    pub fn eval_at(&self, point: &[f64]) -> Result<Vec<ComplexNum>> {
        self.eval(&mut Evaluator::new(point))
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `[X, Y]^r = sum_p (X^p d_p Y^r - Y^p d_p X^r)`.
pub fn lie_bracket(x: &VecField, y: &VecField) -> Result<VecField> {
    check_dim(x.dim(), y.dim())?;
    let comps = (0..x.dim())
        .map(|r| Expr::sub(&x.apply(y.component(r)), &y.apply(x.component(r))))
        .collect();
    Ok(VecField::new(comps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn coordinate_fields_commute() {
        let b = lie_bracket(&VecField::coordinate(2, 0), &VecField::coordinate(2, 1)).unwrap();
        assert!(b.is_zero());
    }

    #[test]
    fn product_rule_bracket() {
        // [x1 d2, d1] = -d2
        let x = VecField::new(vec![Expr::zero(), parse("x1", 2).unwrap()]);
        let b = lie_bracket(&x, &VecField::coordinate(2, 0)).unwrap();
        let v = b.eval_at(&[0.3, -0.2]).unwrap();
        assert_eq!(v[0].norm(), 0.0);
        assert_eq!(v[1], ComplexNum::new(-1.0, 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let r = lie_bracket(&VecField::coordinate(2, 0), &VecField::coordinate(4, 0));
        assert_eq!(r, Err(Error::DimensionMismatch { expected: 2, got: 4 }));
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let x = VecField::new(vec![parse("x1*x2", 2).unwrap(), parse("sin(x1)", 2).unwrap()]);
        let y = VecField::new(vec![parse("x2^2", 2).unwrap(), parse("exp(x1) - i*x2", 2).unwrap()]);
        let a = lie_bracket(&x, &y).unwrap().eval_at(&[0.4, 0.7]).unwrap();
        let b = lie_bracket(&y, &x).unwrap().eval_at(&[0.4, 0.7]).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u + v).norm() < 1e-15);
        }
    }
}
