use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{ComplexNum, Evaluator, Expr};

use super::field::{check_dim, VecField};

/// A differential form of fixed degree on an `dim`-dimensional chart.
///
/// Coefficients are keyed by strictly increasing index tuples; a missing key
/// means a structurally zero coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    dim: usize,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, Expr>,
}

/// Accumulates terms per key and sums each key once at the end, which keeps
/// coefficient trees balanced.
pub struct FormBuilder {
    dim: usize,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Vec<Expr>>,
}

impl FormBuilder {
    pub fn new(dim: usize, degree: usize) -> Self {
        FormBuilder { dim, degree, terms: BTreeMap::new() }
    }

    /// Adds `coef` to the coefficient of the (already sorted) `key`.
    pub fn push(&mut self, key: Vec<usize>, coef: Expr) {
        debug_assert_eq!(key.len(), self.degree);
        if !coef.is_zero() {
            self.terms.entry(key).or_default().push(coef);
        }
    }

    pub fn push_form(&mut self, form: &Form) {
        for (k, c) in &form.coeffs {
            self.push(k.clone(), c.clone());
        }
    }

    pub fn push_scaled(&mut self, form: &Form, factor: &Expr) {
        if factor.is_zero() {
            return;
        }
        for (k, c) in &form.coeffs {
            self.push(k.clone(), factor * c);
        }
    }

    pub fn finish(self) -> Form {
        let coeffs = self
            .terms
            .into_iter()
            .filter_map(|(k, ts)| {
                let s = Expr::sum(ts);
                (!s.is_zero()).then_some((k, s))
            })
            .collect();
        Form { dim: self.dim, degree: self.degree, coeffs }
    }
}

fn is_increasing(key: &[usize]) -> bool {
    key.windows(2).all(|w| w[0] < w[1])
}

/// Sorts `idx` in place and returns the permutation sign, or `None` when an
/// index repeats.
fn sort_with_sign(idx: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

impl Form {
    /// Builds a form from explicit coefficients, validating every key.
    pub fn new(dim: usize, degree: usize, coeffs: BTreeMap<Vec<usize>, Expr>) -> Result<Self> {
        for k in coeffs.keys() {
            if k.len() != degree || !is_increasing(k) || k.iter().any(|&i| i >= dim) {
                return Err(Error::InvalidKey { key: k.clone(), degree, dim });
            }
        }
        let coeffs = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Ok(Form { dim, degree, coeffs })
    }

    pub fn zero(dim: usize, degree: usize) -> Self {
        Form { dim, degree, coeffs: BTreeMap::new() }
    }

    /// A function viewed as a degree-0 form.
    pub fn scalar(dim: usize, f: Expr) -> Self {
        let mut b = FormBuilder::new(dim, 0);
        b.push(Vec::new(), f);
        b.finish()
    }

    /// `dx^i` (zero-based `i`).
    pub fn dx(dim: usize, i: usize) -> Self {
        Self::basis(dim, &[i])
    }

    /// `dx^{i_1} ^ ... ^ dx^{i_k}` for arbitrary (unsorted) indices.
    pub fn basis(dim: usize, indices: &[usize]) -> Self {
        let mut key = indices.to_vec();
        let mut b = FormBuilder::new(dim, key.len());
        if let Some(sign) = sort_with_sign(&mut key) {
            b.push(key, Expr::real(sign));
        }
        b.finish()
    }

    /// `sum_i comps[i] dx^i`.
    pub fn one_form(comps: Vec<Expr>) -> Self {
        let dim = comps.len();
        let mut b = FormBuilder::new(dim, 1);
        for (i, c) in comps.into_iter().enumerate() {
            b.push(vec![i], c);
        }
        b.finish()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `dx^key`; `key` must be strictly increasing.
    pub fn coeff(&self, key: &[usize]) -> Expr {
        self.coeffs.get(key).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.coeffs.iter()
    }

    /// Dense coefficient list of a 1-form.
    pub fn one_form_comps(&self) -> Result<Vec<Expr>> {
        if self.degree != 1 {
            return Err(Error::NotOneForm(self.degree));
        }
        Ok((0..self.dim).map(|i| self.coeff(&[i])).collect())
    }

    pub fn add(&self, other: &Form) -> Result<Form> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Form) -> Result<Form> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Form, sign: f64) -> Result<Form> {
        check_dim(self.dim, other.dim)?;
        if self.degree != other.degree {
            return Err(Error::Arity { degree: self.degree, got: other.degree });
        }
        let mut b = FormBuilder::new(self.dim, self.degree);
        b.push_form(self);
        for (k, c) in &other.coeffs {
            b.push(k.clone(), if sign < 0.0 { -c } else { c.clone() });
        }
        Ok(b.finish())
    }

    pub fn scale(&self, f: &Expr) -> Form {
        let mut b = FormBuilder::new(self.dim, self.degree);
        b.push_scaled(self, f);
        b.finish()
    }

    pub fn scale_const(&self, c: ComplexNum) -> Form {
        self.scale(&Expr::constant(c))
    }

    /// Numeric coefficients at the evaluator's point.
    pub fn eval_coeffs(&self, ev: &mut Evaluator) -> Result<BTreeMap<Vec<usize>, ComplexNum>> {
        self.coeffs.iter().map(|(k, c)| Ok((k.clone(), ev.eval(c)?))).collect()
    }
}

/// Wedge product with shuffle signs. If the degrees add up past the chart
/// dimension the result is the (empty) zero form of that degree.
pub fn wedge(a: &Form, b: &Form) -> Form {
    let degree = a.degree + b.degree;
    let mut out = FormBuilder::new(a.dim, degree);
    if degree > a.dim {
        return out.finish();
    }
    for (ka, ca) in &a.coeffs {
        for (kb, cb) in &b.coeffs {
            let mut key: Vec<usize> = ka.iter().chain(kb).copied().collect();
            if let Some(sign) = sort_with_sign(&mut key) {
                out.push(key, (ca * cb).scale(ComplexNum::new(sign, 0.0)));
            }
        }
    }
    out.finish()
}

/// `d(a_I dx^I) = sum_i d_i a_I dx^i ^ dx^I`.
pub fn ext_d(a: &Form) -> Result<Form> {
    if a.degree >= a.dim {
        return Err(Error::DegreeOverflow(a.degree));
    }
    let mut out = FormBuilder::new(a.dim, a.degree + 1);
    for (key, c) in &a.coeffs {
        for i in 0..a.dim {
            if key.contains(&i) {
                continue;
            }
            let dc = c.diff(i);
            if dc.is_zero() {
                continue;
            }
            let pos = key.iter().filter(|&&j| j < i).count();
            let mut k = key.clone();
            k.insert(pos, i);
            out.push(k, if pos % 2 == 0 { dc } else { -dc });
        }
    }
    Ok(out.finish())
}

/// Interior product in the first slot: `(i(Y) a)(v_2, ..) = a(Y, v_2, ..)`.
pub fn interior(y: &VecField, a: &Form) -> Result<Form> {
    check_dim(a.dim, y.dim())?;
    if a.degree == 0 {
        return Err(Error::InteriorOfFunction);
    }
    let mut out = FormBuilder::new(a.dim, a.degree - 1);
    for (key, c) in &a.coeffs {
        for (s, &idx) in key.iter().enumerate() {
            let comp = y.component(idx);
            if comp.is_zero() {
                continue;
            }
            let mut k = key.clone();
            k.remove(s);
            let term = comp * c;
            out.push(k, if s % 2 == 0 { term } else { -term });
        }
    }
    Ok(out.finish())
}

/// Symbolic pairing `zeta(V) = sum_r zeta_r V^r` of a 1-form with a field.
pub fn pair(zeta: &Form, v: &VecField) -> Result<Expr> {
    let f = interior(v, zeta)?;
    if f.degree != 0 {
        return Err(Error::NotOneForm(zeta.degree));
    }
    Ok(f.coeff(&[]))
}

fn det(mut m: Vec<Vec<ComplexNum>>) -> ComplexNum {
    let n = m.len();
    let mut acc = ComplexNum::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].norm().total_cmp(&m[b][col].norm()))
            .unwrap();
        if m[pivot][col].norm() == 0.0 {
            return ComplexNum::new(0.0, 0.0);
        }
        if pivot != col {
            m.swap(pivot, col);
            acc = -acc;
        }
        let p = m[col][col];
        acc *= p;
        for row in col + 1..n {
            let factor = m[row][col] / p;
            if factor.norm() == 0.0 {
                continue;
            }
            for c in col..n {
                let v = m[col][c];
                m[row][c] -= factor * v;
            }
        }
    }
    acc
}

/// Evaluates a form on numeric vectors at the evaluator's point.
pub fn eval_form_values(a: &Form, vectors: &[Vec<ComplexNum>], ev: &mut Evaluator) -> Result<ComplexNum> {
    if vectors.len() != a.degree {
        return Err(Error::Arity { degree: a.degree, got: vectors.len() });
    }
    for v in vectors {
        check_dim(a.dim, v.len())?;
    }
    let mut total = ComplexNum::new(0.0, 0.0);
    for (key, c) in &a.coeffs {
        let coef = ev.eval(c)?;
        let m: Vec<Vec<ComplexNum>> = key.iter().map(|&i| vectors.iter().map(|v| v[i]).collect()).collect();
        total += coef * det(m);
    }
    if !total.re.is_finite() || !total.im.is_finite() {
        return Err(crate::expr::ExprError::NonFinite.into());
    }
    Ok(total)
}

/// Full antisymmetric evaluation `a(v_1, ..., v_k)` at `point`.
pub fn eval_form(a: &Form, vectors: &[VecField], point: &[f64]) -> Result<ComplexNum> {
    if vectors.len() != a.degree {
        return Err(Error::Arity { degree: a.degree, got: vectors.len() });
    }
    let mut ev = Evaluator::new(point);
    let vals = vectors.iter().map(|v| v.eval(&mut ev)).collect::<Result<Vec<_>>>()?;
    eval_form_values(a, &vals, &mut ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn d(dim: usize, i: usize) -> VecField {
        VecField::coordinate(dim, i)
    }

    #[test]
    fn basis_pairing() {
        let w = wedge(&Form::dx(2, 0), &Form::dx(2, 1));
        let p = [0.2, 0.3];
        assert_eq!(eval_form(&w, &[d(2, 0), d(2, 1)], &p).unwrap(), ComplexNum::new(1.0, 0.0));
        assert_eq!(eval_form(&w, &[d(2, 1), d(2, 0)], &p).unwrap(), ComplexNum::new(-1.0, 0.0));
        assert_eq!(eval_form(&Form::dx(2, 0), &[d(2, 0)], &p).unwrap(), ComplexNum::new(1.0, 0.0));
    }

    #[test]
    fn wedge_alternates() {
        assert!(wedge(&Form::dx(3, 0), &Form::dx(3, 0)).is_zero());
        let w = wedge(&Form::dx(3, 2), &Form::dx(3, 0));
        assert_eq!(w.coeff(&[0, 2]).as_const(), Some(ComplexNum::new(-1.0, 0.0)));
    }

    #[test]
    fn wedge_past_top_degree_is_zero() {
        let top = Form::basis(2, &[0, 1]);
        let w = wedge(&top, &Form::dx(2, 0));
        assert_eq!(w.degree(), 3);
        assert!(w.is_zero());
    }

    #[test]
    fn basis_sorts_with_sign() {
        let f = Form::basis(4, &[3, 1, 2]);
        assert_eq!(f.coeff(&[1, 2, 3]).as_const(), Some(ComplexNum::new(1.0, 0.0)));
        let g = Form::basis(4, &[2, 1]);
        assert_eq!(g.coeff(&[1, 2]).as_const(), Some(ComplexNum::new(-1.0, 0.0)));
        assert!(Form::basis(4, &[1, 1]).is_zero());
    }

    #[test]
    fn d_of_simple_form() {
        // d(x1 dx2) = dx1 ^ dx2
        let a = Form::dx(2, 1).scale(&parse("x1", 2).unwrap());
        let da = ext_d(&a).unwrap();
        assert_eq!(da.coeff(&[0, 1]).as_const(), Some(ComplexNum::new(1.0, 0.0)));
    }

    #[test]
    fn d_of_top_degree_is_an_error() {
        let top = Form::basis(2, &[0, 1]);
        assert_eq!(ext_d(&top), Err(Error::DegreeOverflow(2)));
    }

    #[test]
    fn interior_contracts_first_slot() {
        let w = Form::basis(2, &[0, 1]);
        let c = interior(&d(2, 0), &w).unwrap();
        assert_eq!(c, Form::dx(2, 1));
        let c = interior(&d(2, 1), &w).unwrap();
        assert_eq!(c.coeff(&[0]).as_const(), Some(ComplexNum::new(-1.0, 0.0)));
    }

    #[test]
    fn interior_of_function_rejected() {
        let f = Form::scalar(2, Expr::one());
        assert_eq!(interior(&d(2, 0), &f), Err(Error::InteriorOfFunction));
    }

    #[test]
    fn arity_checked() {
        let w = Form::basis(2, &[0, 1]);
        assert_eq!(eval_form(&w, &[d(2, 0)], &[0.0, 0.0]), Err(Error::Arity { degree: 2, got: 1 }));
    }

    #[test]
    fn invalid_keys_rejected() {
        let mut m = BTreeMap::new();
        m.insert(vec![1, 0], Expr::one());
        assert!(Form::new(2, 2, m).is_err());
        let mut m = BTreeMap::new();
        m.insert(vec![0, 5], Expr::one());
        assert!(Form::new(4, 2, m).is_err());
    }

    #[test]
    fn zero_coefficients_dropped() {
        let mut m = BTreeMap::new();
        m.insert(vec![0], Expr::zero());
        m.insert(vec![1], Expr::one());
        let f = Form::new(2, 1, m).unwrap();
        assert_eq!(f.terms().count(), 1);
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let m = vec![
            vec![ComplexNum::new(1.0, 0.5), ComplexNum::new(2.0, 0.0), ComplexNum::new(0.0, -1.0)],
            vec![ComplexNum::new(0.0, 0.0), ComplexNum::new(-1.0, 1.0), ComplexNum::new(3.0, 0.0)],
            vec![ComplexNum::new(0.5, 0.0), ComplexNum::new(1.0, 0.0), ComplexNum::new(2.0, 2.0)],
        ];
        let cof = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        assert!((det(m) - cof).norm() < 1e-14);
    }
}
