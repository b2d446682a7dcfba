//! Almost-complex structures on a chart.
//!
//! Index convention: `entry(i, r) = J_i^r = dx^r(J d_i)`, so
//! `(JX)^r = sum_p J_p^r X^p` and `(J zeta)_i = sum_r J_i^r zeta_r` with
//! `(J zeta)(V) = zeta(JV)`.
//!
//! Type projections: `pi_{1,0} X = (X - i JX) / 2`, `pi_{0,1} X = (X + i JX) / 2`
//! on vectors, and `pi^{1,0} zeta = (zeta - i J zeta) / 2`,
//! `pi^{0,1} zeta = (zeta + i J zeta) / 2` on 1-forms. A `(0,1)`-form
//! satisfies `J omega = -i omega`. Higher-degree forms are bigraded by
//! substituting `dx^i = pi^{1,0} dx^i + pi^{0,1} dx^i` and expanding.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::calculus::{ext_d, wedge, Form, FormBuilder, VecField};
use crate::error::{Error, Result};
use crate::expr::{ComplexNum, Evaluator, Expr};

/// Residual tolerance for `A * A_inv = I` in [`AcsField::conjugate_standard`].
pub const INVERSE_TOLERANCE: f64 = 1e-10;

/// Vector types under the eigen-decomposition of `J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorType {
    /// `+i` eigenspace.
    OneZero,
    /// `-i` eigenspace.
    ZeroOne,
}

/// The four bidegree components of `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DShift {
    /// `rho`, shift `(2, -1)`.
    Rho,
    /// `partial`, shift `(1, 0)`.
    Partial,
    /// `partial-bar`, shift `(0, 1)`.
    PartialBar,
    /// `rho-bar`, shift `(-1, 2)`.
    RhoBar,
}

impl DShift {
    pub const ALL: [DShift; 4] = [DShift::Rho, DShift::Partial, DShift::PartialBar, DShift::RhoBar];

    pub fn offset(self) -> (i64, i64) {
        match self {
            DShift::Rho => (2, -1),
            DShift::Partial => (1, 0),
            DShift::PartialBar => (0, 1),
            DShift::RhoBar => (-1, 2),
        }
    }
}

/// A form split into its `(p, q)` components.
#[derive(Debug, Clone)]
pub struct BigradedForm {
    dim: usize,
    degree: usize,
    components: BTreeMap<(usize, usize), Form>,
}

impl BigradedForm {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn component(&self, p: usize, q: usize) -> Form {
        self.components.get(&(p, q)).cloned().unwrap_or_else(|| Form::zero(self.dim, self.degree))
    }

    pub fn components(&self) -> impl Iterator<Item = (&(usize, usize), &Form)> {
        self.components.iter()
    }

    /// Sum of all components; evaluates equal to the source form.
    pub fn total(&self) -> Form {
        let mut b = FormBuilder::new(self.dim, self.degree);
        for f in self.components.values() {
            b.push_form(f);
        }
        b.finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub samples: usize,
    /// max over samples and entries of `|J^2 + I|`
    pub max_square_residual: f64,
    /// max over samples of `|tr J|`
    pub max_trace: f64,
    pub tol: f64,
    pub pass: bool,
}

type Decomposition = BTreeMap<(usize, usize), Form>;

struct Inner {
    dim: usize,
    entries: Vec<Expr>,
    proj: OnceLock<(Vec<Form>, Vec<Form>)>,
    basis: Mutex<HashMap<Vec<usize>, Arc<Decomposition>>>,
}

/// An almost-complex structure given by its component functions `J_i^r`.
///
/// Cloning is cheap; projections of the basis forms are cached and shared
/// between clones.
#[derive(Clone)]
pub struct AcsField {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for AcsField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AcsField").field("dim", &self.inner.dim).field("entries", &self.inner.entries).finish()
    }
}

fn c(re: f64, im: f64) -> ComplexNum {
    Complex64::new(re, im)
}

impl AcsField {
    /// Raw structure from rows `entries[i][r] = J_i^r`. Nothing guarantees
    /// `J^2 = -1`; run [`AcsField::validate`] before trusting it.
    pub fn new(entries: Vec<Vec<Expr>>) -> Result<Self> {
        let dim = entries.len();
        if dim < 2 || !dim.is_multiple_of(2) {
            return Err(Error::OddDimension(dim));
        }
        for row in &entries {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
        }
        Ok(Self::from_flat(dim, entries.into_iter().flatten().collect()))
    }

    fn from_flat(dim: usize, entries: Vec<Expr>) -> Self {
        AcsField {
            inner: Arc::new(Inner { dim, entries, proj: OnceLock::new(), basis: Mutex::new(HashMap::new()) }),
        }
    }

    /// The constant structure `J0 d_{2a-1} = d_{2a}`, `J0 d_{2a} = -d_{2a-1}`.
    pub fn standard(dim: usize) -> Result<Self> {
        if dim < 2 || !dim.is_multiple_of(2) {
            return Err(Error::OddDimension(dim));
        }
        let mut entries = vec![vec![Expr::zero(); dim]; dim];
        for a in (0..dim).step_by(2) {
            entries[a][a + 1] = Expr::one();
            entries[a + 1][a] = Expr::real(-1.0);
        }
        Self::new(entries)
    }

    /// `J = A_inv J0 A` as linear maps. `a` and `a_inv` are standard matrices
    /// (`a[r][i] = dx^r(A d_i)`); the result is stored in the `J_i^r`
    /// convention. `J^2 = -1` holds identically whenever `A_inv` inverts `A`,
    /// which is checked at every sample point.
    pub fn conjugate_standard(a: &[Vec<Expr>], a_inv: &[Vec<Expr>], samples: &[Vec<f64>]) -> Result<Self> {
        let dim = a.len();
        if dim < 2 || !dim.is_multiple_of(2) {
            return Err(Error::OddDimension(dim));
        }
        for row in a.iter().chain(a_inv) {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
        }
        if a_inv.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: a_inv.len() });
        }
        for p in samples {
            let mut ev = Evaluator::new(p);
            let av = eval_matrix(a, &mut ev)?;
            let bv = eval_matrix(a_inv, &mut ev)?;
            let mut residual: f64 = 0.0;
            for r in 0..dim {
                for col in 0..dim {
                    let prod: ComplexNum = (0..dim).map(|s| av[r][s] * bv[s][col]).sum();
                    let target = if r == col { 1.0 } else { 0.0 };
                    residual = residual.max((prod - target).norm());
                }
            }
            if residual >= INVERSE_TOLERANCE {
                return Err(Error::NotInverse { residual, point: p.clone() });
            }
        }
        // (J0 A)[s][i]: J0 e_{2a} = e_{2a+1}, J0 e_{2a+1} = -e_{2a}
        let j0a: Vec<Vec<Expr>> = (0..dim)
            .map(|s| {
                (0..dim)
                    .map(|i| if s % 2 == 1 { a[s - 1][i].clone() } else { Expr::neg(&a[s + 1][i]) })
                    .collect()
            })
            .collect();
        let mut flat = vec![Expr::zero(); dim * dim];
        for r in 0..dim {
            for i in 0..dim {
                // J_i^r = (A_inv J0 A)[r][i]
                flat[i * dim + r] = Expr::sum((0..dim).map(|s| &a_inv[r][s] * &j0a[s][i]));
            }
        }
        Ok(Self::from_flat(dim, flat))
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// `J_i^r = dx^r(J d_i)`.
    pub fn entry(&self, i: usize, r: usize) -> &Expr {
        &self.inner.entries[i * self.inner.dim + r]
    }

    /// Pointwise `(max |J^2 + I|, |tr J|)`.
    pub fn point_residuals(&self, ev: &mut Evaluator) -> Result<(f64, f64)> {
        let n = self.dim();
        let m: Vec<Vec<ComplexNum>> =
            (0..n).map(|i| (0..n).map(|r| ev.eval(self.entry(i, r))).collect::<Result<_, _>>()).collect::<Result<_, _>>()?;
        let mut sq: f64 = 0.0;
        for i in 0..n {
            for r in 0..n {
                let s: ComplexNum = (0..n).map(|p| m[i][p] * m[p][r]).sum();
                let target = if i == r { -1.0 } else { 0.0 };
                sq = sq.max((s - target).norm());
            }
        }
        let tr: ComplexNum = (0..n).map(|k| m[k][k]).sum();
        Ok((sq, tr.norm()))
    }

    /// Checks `J^2 = -1` and `tr J = 0` at every sample.
    pub fn validate(&self, samples: &[Vec<f64>], tol: f64) -> Result<ValidationReport> {
        let mut max_sq: f64 = 0.0;
        let mut max_tr: f64 = 0.0;
        for p in samples {
            if p.len() != self.dim() {
                return Err(Error::DimensionMismatch { expected: self.dim(), got: p.len() });
            }
            let (sq, tr) = self.point_residuals(&mut Evaluator::new(p))?;
            max_sq = max_sq.max(sq);
            max_tr = max_tr.max(tr);
        }
        Ok(ValidationReport {
            samples: samples.len(),
            max_square_residual: max_sq,
            max_trace: max_tr,
            tol,
            pass: max_sq < tol && max_tr < tol,
        })
    }

    /// `(JX)^r = sum_p J_p^r X^p`.
    pub fn apply(&self, x: &VecField) -> Result<VecField> {
        let n = self.dim();
        check(n, x.dim())?;
        Ok(VecField::new(
            (0..n).map(|r| Expr::sum((0..n).map(|p| self.entry(p, r) * x.component(p)))).collect(),
        ))
    }

    /// `(J zeta)_i = sum_r J_i^r zeta_r` for a 1-form `zeta`.
    pub fn apply_form1(&self, zeta: &Form) -> Result<Form> {
        let n = self.dim();
        check(n, zeta.dim())?;
        let z = zeta.one_form_comps()?;
        Ok(Form::one_form((0..n).map(|i| Expr::sum((0..n).map(|r| self.entry(i, r) * &z[r]))).collect()))
    }

    /// `pi_{1,0} X = (X - i JX) / 2` or `pi_{0,1} X = (X + i JX) / 2`.
    pub fn project_vec(&self, x: &VecField, ty: VectorType) -> Result<VecField> {
        let jx = self.apply(x)?;
        let s = match ty {
            VectorType::OneZero => c(0.0, -0.5),
            VectorType::ZeroOne => c(0.0, 0.5),
        };
        Ok(VecField::new(
            x.comps().iter().zip(jx.comps()).map(|(a, b)| Expr::add(&a.scale(c(0.5, 0.0)), &b.scale(s))).collect(),
        ))
    }

    /// `pi^{1,0} dx^i` and `pi^{0,1} dx^i` for every `i`.
    fn projected_basis(&self) -> &(Vec<Form>, Vec<Form>) {
        self.inner.proj.get_or_init(|| {
            let n = self.dim();
            let mut p10 = Vec::with_capacity(n);
            let mut p01 = Vec::with_capacity(n);
            for i in 0..n {
                // (J dx^i)_j = J_j^i
                let make = |sign: f64| {
                    Form::one_form(
                        (0..n)
                            .map(|j| {
                                let delta = if i == j { Expr::real(0.5) } else { Expr::zero() };
                                Expr::add(&delta, &self.entry(j, i).scale(c(0.0, 0.5 * sign)))
                            })
                            .collect(),
                    )
                };
                p10.push(make(-1.0));
                p01.push(make(1.0));
            }
            (p10, p01)
        })
    }

    fn basis_decomposition(&self, key: &[usize]) -> Arc<Decomposition> {
        {
            let cache = self.inner.basis.lock().unwrap_or_else(|e| e.into_inner());
            if let Some(d) = cache.get(key) {
                return d.clone();
            }
        }
        let n = self.dim();
        let k = key.len();
        let (p10, p01) = self.projected_basis();
        let mut out: BTreeMap<(usize, usize), FormBuilder> = BTreeMap::new();
        // mask bit set: slot takes its (1,0) part; the empty key gives (0,0)
        for mask in 0..(1u32 << k) {
            let mut acc = Form::scalar(n, Expr::one());
            for (slot, &idx) in key.iter().enumerate() {
                let factor = if mask & (1 << slot) != 0 { &p10[idx] } else { &p01[idx] };
                acc = wedge(&acc, factor);
            }
            let p = mask.count_ones() as usize;
            out.entry((p, k - p)).or_insert_with(|| FormBuilder::new(n, k)).push_form(&acc);
        }
        let decomposition: Decomposition = out.into_iter().map(|(pq, b)| (pq, b.finish())).collect();
        let decomposition = Arc::new(decomposition);
        let mut cache = self.inner.basis.lock().unwrap_or_else(|e| e.into_inner());
        cache.entry(key.to_vec()).or_insert(decomposition).clone()
    }

    /// Splits `a` into its `(p, q)` components. Coefficients stay symbolic in
    /// the entries of `J`, so they can be differentiated afterwards.
    pub fn bigrade(&self, a: &Form) -> Result<BigradedForm> {
        check(self.dim(), a.dim())?;
        let mut builders: BTreeMap<(usize, usize), FormBuilder> = BTreeMap::new();
        for (key, coef) in a.terms() {
            let dec = self.basis_decomposition(key);
            for (pq, part) in dec.iter() {
                builders.entry(*pq).or_insert_with(|| FormBuilder::new(a.dim(), a.degree())).push_scaled(part, coef);
            }
        }
        let components = builders
            .into_iter()
            .map(|(pq, b)| (pq, b.finish()))
            .filter(|(_, f)| !f.is_zero())
            .collect();
        Ok(BigradedForm { dim: a.dim(), degree: a.degree(), components })
    }

    /// `pi^{p,q} a`.
    pub fn project(&self, a: &Form, p: usize, q: usize) -> Result<Form> {
        check(self.dim(), a.dim())?;
        let mut b = FormBuilder::new(a.dim(), a.degree());
        if p + q == a.degree() {
            for (key, coef) in a.terms() {
                if let Some(part) = self.basis_decomposition(key).get(&(p, q)) {
                    b.push_scaled(part, coef);
                }
            }
        }
        Ok(b.finish())
    }

    /// One bidegree component of `d`:
    /// `sum_{(p,q)} pi^{(p,q) + shift} d(pi^{p,q} a)`. Targets outside the
    /// valid range contribute nothing; a top-degree `a` gives the zero form.
    pub fn comp_d(&self, a: &Form, shift: DShift) -> Result<Form> {
        check(self.dim(), a.dim())?;
        let degree = a.degree() + 1;
        if a.degree() >= a.dim() {
            return Ok(Form::zero(a.dim(), degree));
        }
        let (s1, s2) = shift.offset();
        let mut out = FormBuilder::new(a.dim(), degree);
        for ((p, q), part) in self.bigrade(a)?.components() {
            let tp = *p as i64 + s1;
            let tq = *q as i64 + s2;
            if tp < 0 || tq < 0 {
                continue;
            }
            let dpart = ext_d(part)?;
            out.push_form(&self.project(&dpart, tp as usize, tq as usize)?);
        }
        Ok(out.finish())
    }
}

fn check(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn eval_matrix(m: &[Vec<Expr>], ev: &mut Evaluator) -> Result<Vec<Vec<ComplexNum>>> {
    m.iter().map(|row| row.iter().map(|e| ev.eval(e).map_err(Error::from)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::eval_form;
    use crate::expr::parse;

    fn m(rows: &[&[&str]]) -> Vec<Vec<Expr>> {
        let n = rows.len();
        rows.iter().map(|r| r.iter().map(|s| parse(s, n).unwrap()).collect()).collect()
    }

    #[test]
    fn standard_structure_validates_exactly() {
        let j = AcsField::standard(2).unwrap();
        let rep = j.validate(&[vec![0.1, 0.2], vec![-0.7, 0.4]], 1e-12).unwrap();
        assert_eq!(rep.max_square_residual, 0.0);
        assert_eq!(rep.max_trace, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn identity_is_not_almost_complex() {
        let j = AcsField::new(m(&[&["1", "0"], &["0", "1"]])).unwrap();
        let rep = j.validate(&[vec![0.0, 0.0]], 1e-9).unwrap();
        assert_eq!(rep.max_square_residual, 2.0);
        assert!(!rep.pass);
    }

    #[test]
    fn odd_dimension_rejected() {
        assert!(matches!(AcsField::standard(3), Err(Error::OddDimension(3))));
        let r = AcsField::new(m(&[&["0", "1", "0"], &["-1", "0", "0"], &["0", "0", "1"]]));
        assert!(matches!(r, Err(Error::OddDimension(3))));
    }

    #[test]
    fn conjugating_by_identity_gives_standard() {
        let id = m(&[&["1", "0"], &["0", "1"]]);
        let j = AcsField::conjugate_standard(&id, &id, &[vec![0.0, 0.0]]).unwrap();
        let j0 = AcsField::standard(2).unwrap();
        for i in 0..2 {
            for r in 0..2 {
                assert_eq!(j.entry(i, r).as_const(), j0.entry(i, r).as_const());
            }
        }
    }

    #[test]
    fn wrong_inverse_rejected() {
        let a = m(&[&["1", "x1"], &["0", "1"]]);
        let j = AcsField::conjugate_standard(&a, &a, &[vec![0.5, 0.0]]);
        assert!(matches!(j, Err(Error::NotInverse { .. })));
    }

    #[test]
    fn standard_action_on_forms() {
        // J0 dx1 = -dx2 on n = 2
        let j = AcsField::standard(2).unwrap();
        let jdx = j.apply_form1(&Form::dx(2, 0)).unwrap();
        assert!(jdx.coeff(&[0]).is_zero());
        assert_eq!(jdx.coeff(&[1]).as_const(), Some(c(-1.0, 0.0)));
        let jjdx = j.apply_form1(&jdx).unwrap();
        assert_eq!(jjdx.coeff(&[0]).as_const(), Some(c(-1.0, 0.0)));
    }

    #[test]
    fn j_form1_rejects_higher_degree() {
        let j = AcsField::standard(2).unwrap();
        assert!(matches!(j.apply_form1(&Form::basis(2, &[0, 1])), Err(Error::NotOneForm(2))));
    }

    #[test]
    fn standard_projections() {
        let j = AcsField::standard(2).unwrap();
        let v = j.project_vec(&VecField::coordinate(2, 0), VectorType::OneZero).unwrap();
        assert_eq!(v.component(0).as_const(), Some(c(0.5, 0.0)));
        assert_eq!(v.component(1).as_const(), Some(c(0.0, -0.5)));

        let b = j.bigrade(&Form::dx(2, 0)).unwrap();
        let p10 = b.component(1, 0);
        assert_eq!(p10.coeff(&[0]).as_const(), Some(c(0.5, 0.0)));
        assert_eq!(p10.coeff(&[1]).as_const(), Some(c(0.0, 0.5)));
        let pairing = eval_form(&p10, &[v], &[0.0, 0.0]).unwrap();
        assert_eq!(pairing, c(0.5, 0.0));
    }

    #[test]
    fn function_has_no_rho_parts() {
        let j = AcsField::standard(4).unwrap();
        let f = Form::scalar(4, parse("x1*x3 + sin(x2)", 4).unwrap());
        assert!(j.comp_d(&f, DShift::Rho).unwrap().is_zero());
        assert!(j.comp_d(&f, DShift::RhoBar).unwrap().is_zero());
    }

    #[test]
    fn top_degree_comp_d_is_zero() {
        let j = AcsField::standard(2).unwrap();
        let top = Form::basis(2, &[0, 1]).scale(&parse("x1", 2).unwrap());
        let r = j.comp_d(&top, DShift::Partial).unwrap();
        assert_eq!(r.degree(), 3);
        assert!(r.is_zero());
    }
}
