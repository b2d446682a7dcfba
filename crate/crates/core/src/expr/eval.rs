use std::collections::HashMap;

use num_complex::Complex64;

use super::{ComplexNum, Expr, ExprError, ExprKind, DIV_EPS};

/// Evaluates expressions at one fixed point, caching the values of shared
/// nodes so a DAG is walked once no matter how many expressions reach it.
///
/// Nodes are keyed by a process-unique id, so the cache stays valid even if
/// expressions are dropped while the evaluator is alive.
pub struct Evaluator<'p> {
    point: &'p [f64],
    cache: HashMap<u64, ComplexNum>,
}

impl<'p> Evaluator<'p> {
    pub fn new(point: &'p [f64]) -> Self {
        Evaluator { point, cache: HashMap::new() }
    }

    pub fn point(&self) -> &[f64] {
        self.point
    }

    pub fn eval(&mut self, e: &Expr) -> Result<ComplexNum, ExprError> {
        let v = self.eval_node(e)?;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(ExprError::NonFinite);
        }
        Ok(v)
    }

    fn eval_node(&mut self, e: &Expr) -> Result<ComplexNum, ExprError> {
        let shared = e.is_shared();
        if shared {
            if let Some(v) = self.cache.get(&e.id()) {
                return Ok(*v);
            }
        }
        let v = match e.kind() {
            ExprKind::Const(c) => return Ok(*c),
            ExprKind::Var(j) => match self.point.get(*j) {
                Some(x) => return Ok(Complex64::new(*x, 0.0)),
                None => return Err(ExprError::VarOutOfRange { index: j + 1, dim: self.point.len() }),
            },
            ExprKind::Neg(a) => -self.eval_node(a)?,
            ExprKind::Add(a, b) => self.eval_node(a)? + self.eval_node(b)?,
            ExprKind::Sub(a, b) => self.eval_node(a)? - self.eval_node(b)?,
            ExprKind::Mul(a, b) => self.eval_node(a)? * self.eval_node(b)?,
            ExprKind::Div(a, b) => {
                let num = self.eval_node(a)?;
                let den = self.eval_node(b)?;
                if den.norm() < DIV_EPS {
                    return Err(ExprError::DivisionByZero);
                }
                num / den
            }
            ExprKind::Pow(a, k) => self.eval_node(a)?.powu(*k),
            ExprKind::Sin(a) => self.eval_node(a)?.sin(),
            ExprKind::Cos(a) => self.eval_node(a)?.cos(),
            ExprKind::Exp(a) => self.eval_node(a)?.exp(),
        };
        if shared {
            self.cache.insert(e.id(), v);
        }
        Ok(v)
    }
}
