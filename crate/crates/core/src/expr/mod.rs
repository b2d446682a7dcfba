//! Scalar expressions over real chart coordinates with complex constants.
//!
//! An [`Expr`] is an immutable, reference-counted DAG. Smart constructors
//! (`Expr::add`, the operator impls, ...) apply a handful of local rewrites
//! (`0*e -> 0`, `1*e -> e`, `e+0 -> e`, constant folding); nothing more is
//! attempted. Correctness of every identity is judged by evaluation, not by
//! canonical forms.
//!
//! Partial derivatives are memoised inside each node, so differentiating a
//! shared subexpression twice yields the same `Expr` and the derivative DAG
//! keeps the sharing of its source.

mod eval;
mod parse;

use std::fmt;
use std::ops;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

pub use eval::Evaluator;
pub use parse::parse;

/// Complex scalar used for every evaluated quantity.
pub type ComplexNum = Complex64;

/// Imaginary unit.
pub const I: ComplexNum = Complex64::new(0.0, 1.0);

/// Modulus below which a divisor counts as zero.
pub const DIV_EPS: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("variable x{index} out of range for dimension {dim}")]
    VarOutOfRange { index: usize, dim: usize },
    #[error("negative exponent at position {pos}")]
    NegativeExponent { pos: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite value")]
    NonFinite,
}

/// Node kinds. Variable indices are zero-based (`Var(0)` is `x1`).
#[derive(Debug, Clone)]
pub enum ExprKind {
    Const(ComplexNum),
    Var(usize),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, u32),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
}

struct Node {
    id: u64,
    kind: ExprKind,
    // (variable, derivative) pairs; a handful at most per node.
    derivs: Mutex<Vec<(usize, Expr)>>,
}

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    /// Wraps a node kind without any simplification.
    pub fn from_kind(kind: ExprKind) -> Self {
        Expr(Arc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            kind,
            derivs: Mutex::new(Vec::new()),
        }))
    }

    pub fn kind(&self) -> &ExprKind {
        &self.0.kind
    }

    pub(crate) fn id(&self) -> u64 {
        self.0.id
    }

    pub(crate) fn is_shared(&self) -> bool {
        Arc::strong_count(&self.0) > 1
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn constant(c: ComplexNum) -> Self {
        Self::from_kind(ExprKind::Const(c))
    }

    pub fn real(x: f64) -> Self {
        Self::constant(Complex64::new(x, 0.0))
    }

    pub fn zero() -> Self {
        Self::real(0.0)
    }

    pub fn one() -> Self {
        Self::real(1.0)
    }

    pub fn imag_unit() -> Self {
        Self::constant(I)
    }

    /// Coordinate `x{index + 1}`.
    pub fn var(index: usize) -> Self {
        Self::from_kind(ExprKind::Var(index))
    }

    pub fn as_const(&self) -> Option<ComplexNum> {
        match self.kind() {
            ExprKind::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Structurally zero (a constant 0). An expression may still evaluate
    /// to zero without this returning true.
    pub fn is_zero(&self) -> bool {
        matches!(self.as_const(), Some(c) if c.re == 0.0 && c.im == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self.as_const(), Some(c) if c.re == 1.0 && c.im == 0.0)
    }

    pub fn neg(a: &Expr) -> Expr {
        match a.kind() {
            ExprKind::Const(c) => Expr::constant(-c),
            ExprKind::Neg(inner) => inner.clone(),
            _ => Expr::from_kind(ExprKind::Neg(a.clone())),
        }
    }

    pub fn add(a: &Expr, b: &Expr) -> Expr {
        if a.is_zero() {
            return b.clone();
        }
        if b.is_zero() {
            return a.clone();
        }
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x + y),
            _ => Expr::from_kind(ExprKind::Add(a.clone(), b.clone())),
        }
    }

    pub fn sub(a: &Expr, b: &Expr) -> Expr {
        if b.is_zero() {
            return a.clone();
        }
        if a.is_zero() {
            return Expr::neg(b);
        }
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x - y),
            _ => Expr::from_kind(ExprKind::Sub(a.clone(), b.clone())),
        }
    }

    pub fn mul(a: &Expr, b: &Expr) -> Expr {
        if a.is_zero() || b.is_zero() {
            return Expr::zero();
        }
        if a.is_one() {
            return b.clone();
        }
        if b.is_one() {
            return a.clone();
        }
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x * y),
            (Some(x), None) => Self::scale_const(x, b),
            (None, Some(y)) => Self::scale_const(y, a),
            (None, None) => Expr::from_kind(ExprKind::Mul(a.clone(), b.clone())),
        }
    }

    // c * e with c a non-trivial constant; merges nested constant factors.
    fn scale_const(c: ComplexNum, e: &Expr) -> Expr {
        if c == Complex64::new(-1.0, 0.0) {
            return Expr::neg(e);
        }
        if let ExprKind::Mul(l, r) = e.kind() {
            if let Some(k) = l.as_const() {
                return Expr::mul(&Expr::constant(c * k), r);
            }
        }
        Expr::from_kind(ExprKind::Mul(Expr::constant(c), e.clone()))
    }

    pub fn div(a: &Expr, b: &Expr) -> Expr {
        if b.is_one() {
            return a.clone();
        }
        match (a.as_const(), b.as_const()) {
            (_, Some(y)) if y.norm() < DIV_EPS => Expr::from_kind(ExprKind::Div(a.clone(), b.clone())),
            (Some(x), Some(y)) => Expr::constant(x / y),
            _ if a.is_zero() => Expr::zero(),
            _ => Expr::from_kind(ExprKind::Div(a.clone(), b.clone())),
        }
    }

    pub fn powi(a: &Expr, k: u32) -> Expr {
        match k {
            0 => Expr::one(),
            1 => a.clone(),
            _ => match a.as_const() {
                Some(c) => Expr::constant(c.powu(k)),
                None => Expr::from_kind(ExprKind::Pow(a.clone(), k)),
            },
        }
    }

    pub fn sin(a: &Expr) -> Expr {
        match a.as_const() {
            Some(c) => Expr::constant(c.sin()),
            None => Expr::from_kind(ExprKind::Sin(a.clone())),
        }
    }

    pub fn cos(a: &Expr) -> Expr {
        match a.as_const() {
            Some(c) => Expr::constant(c.cos()),
            None => Expr::from_kind(ExprKind::Cos(a.clone())),
        }
    }

    pub fn exp(a: &Expr) -> Expr {
        match a.as_const() {
            Some(c) => Expr::constant(c.exp()),
            None => Expr::from_kind(ExprKind::Exp(a.clone())),
        }
    }

    pub fn scale(&self, c: ComplexNum) -> Expr {
        Expr::mul(&Expr::constant(c), self)
    }

    /// Balanced sum; keeps tree depth logarithmic in the number of terms.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut terms: Vec<Expr> = terms.into_iter().filter(|t| !t.is_zero()).collect();
        if terms.is_empty() {
            return Expr::zero();
        }
        while terms.len() > 1 {
            let mut next = Vec::with_capacity(terms.len().div_ceil(2));
            let mut it = terms.into_iter();
            while let Some(a) = it.next() {
                match it.next() {
                    Some(b) => next.push(Expr::add(&a, &b)),
                    None => next.push(a),
                }
            }
            terms = next;
        }
        terms.pop().unwrap()
    }

    /// Largest variable index (zero-based) referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        let mut seen = std::collections::HashSet::new();
        self.max_var_inner(&mut seen)
    }

    fn max_var_inner(&self, seen: &mut std::collections::HashSet<u64>) -> Option<usize> {
        if !seen.insert(self.id()) {
            return None;
        }
        match self.kind() {
            ExprKind::Const(_) => None,
            ExprKind::Var(j) => Some(*j),
            ExprKind::Neg(a) | ExprKind::Pow(a, _) | ExprKind::Sin(a) | ExprKind::Cos(a) | ExprKind::Exp(a) => {
                a.max_var_inner(seen)
            }
            ExprKind::Add(a, b) | ExprKind::Sub(a, b) | ExprKind::Mul(a, b) | ExprKind::Div(a, b) => {
                a.max_var_inner(seen).max(b.max_var_inner(seen))
            }
        }
    }

    /// Exact partial derivative with respect to the zero-based variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        if let Some(d) = self.cached_deriv(var) {
            return d;
        }
        let d = match self.kind() {
            ExprKind::Const(_) => Expr::zero(),
            ExprKind::Var(j) => {
                if *j == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            ExprKind::Neg(a) => Expr::neg(&a.diff(var)),
            ExprKind::Add(a, b) => Expr::add(&a.diff(var), &b.diff(var)),
            ExprKind::Sub(a, b) => Expr::sub(&a.diff(var), &b.diff(var)),
            ExprKind::Mul(a, b) => {
                let da = a.diff(var);
                let db = b.diff(var);
                Expr::add(&Expr::mul(&da, b), &Expr::mul(a, &db))
            }
            ExprKind::Div(a, b) => {
                let da = a.diff(var);
                let db = b.diff(var);
                if db.is_zero() {
                    Expr::div(&da, b)
                } else {
                    let num = Expr::sub(&Expr::mul(&da, b), &Expr::mul(a, &db));
                    Expr::div(&num, &Expr::powi(b, 2))
                }
            }
            ExprKind::Pow(a, k) => {
                let da = a.diff(var);
                if da.is_zero() {
                    Expr::zero()
                } else {
                    let outer = Expr::mul(&Expr::real(*k as f64), &Expr::powi(a, k - 1));
                    Expr::mul(&outer, &da)
                }
            }
            ExprKind::Sin(a) => Expr::mul(&Expr::cos(a), &a.diff(var)),
            ExprKind::Cos(a) => Expr::mul(&Expr::neg(&Expr::sin(a)), &a.diff(var)),
            // a fresh node, so the cache below never points back at `self`
            ExprKind::Exp(a) => Expr::mul(&Expr::exp(a), &a.diff(var)),
        };
        self.store_deriv(var, &d);
        d
    }

    fn cached_deriv(&self, var: usize) -> Option<Expr> {
        let cache = self.0.derivs.lock().unwrap_or_else(|e| e.into_inner());
        cache.iter().find(|(v, _)| *v == var).map(|(_, d)| d.clone())
    }

    fn store_deriv(&self, var: usize, d: &Expr) {
        // constants and variables are cheap to recompute
        if matches!(self.kind(), ExprKind::Const(_) | ExprKind::Var(_)) {
            return;
        }
        let mut cache = self.0.derivs.lock().unwrap_or_else(|e| e.into_inner());
        if !cache.iter().any(|(v, _)| *v == var) {
            cache.push((var, d.clone()));
        }
    }

    /// Evaluates at a real point. See [`Evaluator`] for batched evaluation
    /// sharing work across many expressions.
    pub fn eval(&self, point: &[f64]) -> Result<ComplexNum, ExprError> {
        Evaluator::new(point).eval(self)
    }

    /// Number of distinct nodes in the DAG.
    pub fn node_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.id()) {
                continue;
            }
            match e.kind() {
                ExprKind::Const(_) | ExprKind::Var(_) => {}
                ExprKind::Neg(a) | ExprKind::Pow(a, _) | ExprKind::Sin(a) | ExprKind::Cos(a) | ExprKind::Exp(a) => {
                    stack.push(a.clone())
                }
                ExprKind::Add(a, b) | ExprKind::Sub(a, b) | ExprKind::Mul(a, b) | ExprKind::Div(a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
            }
        }
        seen.len()
    }
}

impl From<f64> for Expr {
    fn from(x: f64) -> Self {
        Expr::real(x)
    }
}

impl From<ComplexNum> for Expr {
    fn from(c: ComplexNum) -> Self {
        Expr::constant(c)
    }
}

/// Structural equality (constants compared bitwise on their components).
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        use ExprKind::*;
        match (self.kind(), other.kind()) {
            (Const(a), Const(b)) => a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits(),
            (Var(a), Var(b)) => a == b,
            (Neg(a), Neg(b)) | (Sin(a), Sin(b)) | (Cos(a), Cos(b)) | (Exp(a), Exp(b)) => a == b,
            (Pow(a, j), Pow(b, k)) => j == k && a == b,
            (Add(a1, b1), Add(a2, b2))
            | (Sub(a1, b1), Sub(a2, b2))
            | (Mul(a1, b1), Mul(a2, b2))
            | (Div(a1, b1), Div(a2, b2)) => a1 == a2 && b1 == b2,
            _ => false,
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

fn fmt_real(x: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if x < 0.0 || (x == 0.0 && x.is_sign_negative()) {
        write!(f, "(-{})", -x)
    } else {
        write!(f, "{x}")
    }
}

/// Fully parenthesised DSL text; `parse(&e.to_string(), dim)` rebuilds an
/// expression that evaluates identically.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            ExprKind::Const(c) => {
                if c.im == 0.0 {
                    fmt_real(c.re, f)
                } else if c.re == 0.0 {
                    write!(f, "(")?;
                    fmt_real(c.im, f)?;
                    write!(f, "*i)")
                } else {
                    write!(f, "(")?;
                    fmt_real(c.re, f)?;
                    write!(f, " + ")?;
                    fmt_real(c.im, f)?;
                    write!(f, "*i)")
                }
            }
            ExprKind::Var(j) => write!(f, "x{}", j + 1),
            ExprKind::Neg(a) => write!(f, "(-({a}))"),
            ExprKind::Add(a, b) => write!(f, "({a} + {b})"),
            ExprKind::Sub(a, b) => write!(f, "({a} - {b})"),
            ExprKind::Mul(a, b) => write!(f, "({a} * {b})"),
            ExprKind::Div(a, b) => write!(f, "({a} / {b})"),
            ExprKind::Pow(a, k) => write!(f, "(({a})^{k})"),
            ExprKind::Sin(a) => write!(f, "sin({a})"),
            ExprKind::Cos(a) => write!(f, "cos({a})"),
            ExprKind::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $ctor:path) => {
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(self, rhs)
            }
        }
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(&self, &rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(&self, rhs)
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self, &rhs)
            }
        }
    };
}

binop!(Add, add, Expr::add);
binop!(Sub, sub, Expr::sub);
binop!(Mul, mul, Expr::mul);
binop!(Div, div, Expr::div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> ComplexNum {
        Complex64::new(re, im)
    }

    #[test]
    fn local_rules() {
        let x = Expr::var(0);
        assert!((Expr::zero() * &x).is_zero());
        assert!((&x * Expr::one()).ptr_eq(&x));
        assert!((&x + Expr::zero()).ptr_eq(&x));
        assert!((&x - Expr::zero()).ptr_eq(&x));
        assert_eq!((Expr::real(2.0) * Expr::real(3.0)).as_const(), Some(c(6.0, 0.0)));
        assert_eq!(Expr::powi(&x, 0).as_const(), Some(c(1.0, 0.0)));
        assert!(Expr::neg(&Expr::neg(&x)).ptr_eq(&x));
    }

    #[test]
    fn nested_constant_factors_merge() {
        let x = Expr::var(0);
        let e = Expr::real(2.0) * (Expr::real(3.0) * &x);
        match e.kind() {
            ExprKind::Mul(l, r) => {
                assert_eq!(l.as_const(), Some(c(6.0, 0.0)));
                assert!(r.ptr_eq(&x));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn power_rule() {
        let e = parse("x1^2", 2).unwrap();
        let d = e.diff(0);
        for x in [-1.5, 0.0, 0.3, 2.0] {
            let v = d.eval(&[x, 0.7]).unwrap();
            assert_eq!(v, c(2.0 * x, 0.0));
        }
    }

    #[test]
    fn independent_variable_gives_zero() {
        let e = parse("sin(x1)", 2).unwrap();
        assert!(e.diff(1).is_zero());
    }

    #[test]
    fn derivative_is_memoised() {
        let e = parse("exp(x1*x2) * cos(x2)", 2).unwrap();
        let d1 = e.diff(0);
        let d2 = e.diff(0);
        assert!(d1.ptr_eq(&d2));
    }

    #[test]
    fn display_round_trips() {
        let src = "(-x1)^3 - i*x2/(2 + cos(x1)) + exp(-0.25*x2) * (1.5 - 2*i)";
        let e = parse(src, 2).unwrap();
        let back = parse(&e.to_string(), 2).unwrap();
        for p in [[0.1, -0.4], [1.2, 0.9]] {
            assert_eq!(e.eval(&p).unwrap(), back.eval(&p).unwrap());
        }
    }

    #[test]
    fn balanced_sum_matches_linear_sum() {
        let terms: Vec<Expr> = (0..37).map(|k| Expr::real(k as f64) * Expr::var(k % 3)).collect();
        let s = Expr::sum(terms.clone());
        let mut lin = Expr::zero();
        for t in &terms {
            lin = lin + t;
        }
        let p = [0.3, -1.1, 2.5];
        let a = s.eval(&p).unwrap();
        let b = lin.eval(&p).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn max_var_reports_highest_index() {
        assert_eq!(parse("x1 + x3*x2", 3).unwrap().max_var(), Some(2));
        assert_eq!(parse("2 + i", 3).unwrap().max_var(), None);
    }
}
