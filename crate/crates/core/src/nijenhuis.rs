//! The Nijenhuis tensor and its squares.
//!
//! `N(X, Y) = [JX, JY] - J[X, JY] - J[JX, Y] - [X, Y]` is computed two ways:
//! from brackets ([`n_def`]) and from the coordinate formula
//! `N_ik^r = sum_p J_i^p (d_p J_k^r - d_k J_p^r) - J_k^p (d_p J_i^r - d_i J_p^r)`
//! ([`n_coord`]). The two agree whenever `J^2 = -1`.
//!
//! On top of `N` this module builds the strong squares `N^2(X, Z; Y) =
//! N(N(X, Z), Y)` and `J N^2`, the four-term functionals `K` and `L`, the
//! intermediate squares `hbar(X, Z) = Z*([N(X, Z), X])` and
//! `ell(X, Z) = Z*(J[N(X, Z), X])`, and the weak squares `S_i`, `S`, `T`.

use std::sync::OnceLock;

use crate::acs::AcsField;
use crate::calculus::{lie_bracket, pair, Form, VecField};
use crate::error::{Error, Result};
use crate::expr::{ComplexNum, Evaluator, Expr};

/// `N(X, Y)` from its bracket definition.
pub fn n_def(j: &AcsField, x: &VecField, y: &VecField) -> Result<VecField> {
    let jx = j.apply(x)?;
    let jy = j.apply(y)?;
    let t1 = lie_bracket(&jx, &jy)?;
    let t2 = j.apply(&lie_bracket(x, &jy)?)?;
    let t3 = j.apply(&lie_bracket(&jx, y)?)?;
    let t4 = lie_bracket(x, y)?;
    t1.sub(&t2)?.sub(&t3)?.sub(&t4)
}

/// `N^2(X, Z; Y) = N(N(X, Z), Y)`.
pub fn n_squared(j: &AcsField, x: &VecField, z: &VecField, y: &VecField) -> Result<VecField> {
    n_def(j, &n_def(j, x, z)?, y)
}

/// `J N^2(X, Z; Y)`.
pub fn jn_squared(j: &AcsField, x: &VecField, z: &VecField, y: &VecField) -> Result<VecField> {
    j.apply(&n_squared(j, x, z, y)?)
}

/// Symbolic components `N_ik^r = dx^r(N(d_i, d_k))`.
#[derive(Debug, Clone)]
pub struct NijenhuisComponents {
    dim: usize,
    entries: Vec<Expr>,
}

impl NijenhuisComponents {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, k: usize, r: usize) -> &Expr {
        &self.entries[(i * self.dim + k) * self.dim + r]
    }

    /// `sum_k N_ik^k`.
    pub fn trace(&self, i: usize) -> Expr {
        Expr::sum((0..self.dim).map(|k| self.get(i, k, k).clone()))
    }

    /// Largest `|N_ik^r|` at a point.
    pub fn max_abs(&self, ev: &mut Evaluator) -> Result<f64> {
        let mut m: f64 = 0.0;
        for e in &self.entries {
            m = m.max(ev.eval(e)?.norm());
        }
        Ok(m)
    }
}

/// The coordinate formula for `N_ik^r`. Antisymmetry in `(i, k)` is exact:
/// only `i < k` is computed, the rest is negated or zero.
pub fn n_coord(j: &AcsField) -> NijenhuisComponents {
    let n = j.dim();
    let mut entries = vec![Expr::zero(); n * n * n];
    for i in 0..n {
        for k in i + 1..n {
            for r in 0..n {
                let e = Expr::sum((0..n).flat_map(|p| {
                    let a = j.entry(i, p) * (j.entry(k, r).diff(p) - j.entry(p, r).diff(k));
                    let b = j.entry(k, p) * (j.entry(i, r).diff(p) - j.entry(p, r).diff(i));
                    [a, -b]
                }));
                entries[(k * n + i) * n + r] = -&e;
                entries[(i * n + k) * n + r] = e;
            }
        }
    }
    NijenhuisComponents { dim: n, entries }
}

/// Weak squares evaluated at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakSquares {
    pub s_i: Vec<ComplexNum>,
    pub s: ComplexNum,
    pub t: ComplexNum,
}

/// Coordinate-frame machinery for `K`, `L`, `hbar`, `ell` and the weak
/// squares. Fields `N(d_i, d_k)` come from the bracket route and are built
/// once, on first use.
pub struct Squares {
    j: AcsField,
    coords: OnceLock<NijenhuisComponents>,
    fields: OnceLock<Vec<VecField>>,
}

impl Squares {
    pub fn new(j: &AcsField) -> Self {
        Squares { j: j.clone(), coords: OnceLock::new(), fields: OnceLock::new() }
    }

    pub fn structure(&self) -> &AcsField {
        &self.j
    }

    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    pub fn components(&self) -> &NijenhuisComponents {
        self.coords.get_or_init(|| n_coord(&self.j))
    }

    fn check(&self, idx: &[usize]) -> Result<()> {
        let n = self.dim();
        match idx.iter().find(|&&i| i >= n) {
            Some(&index) => Err(Error::IndexOutOfRange { index, dim: n }),
            None => Ok(()),
        }
    }

    /// `N(d_i, d_k)` via [`n_def`].
    pub fn n_field(&self, i: usize, k: usize) -> Result<&VecField> {
        self.check(&[i, k])?;
        let n = self.dim();
        let fields = self.fields.get_or_init(|| {
            let coord = |a| VecField::coordinate(n, a);
            let mut out = vec![VecField::zero(n); n * n];
            for a in 0..n {
                for b in a + 1..n {
                    // dimensions agree by construction
                    let f = n_def(&self.j, &coord(a), &coord(b)).expect("coordinate fields match J");
                    out[b * n + a] = f.scale_const(ComplexNum::new(-1.0, 0.0));
                    out[a * n + b] = f;
                }
            }
            out
        });
        Ok(&fields[i * n + k])
    }

    /// `[N(d_i, d_k), d_j]`.
    pub fn bracket(&self, i: usize, k: usize, jj: usize) -> Result<VecField> {
        self.check(&[jj])?;
        lie_bracket(self.n_field(i, k)?, &VecField::coordinate(self.dim(), jj))
    }

    /// `K(d_i, d_k, d_j, d_l)` with duals `dx^k`, `dx^l`:
    /// `(dx^l([N(d_i,d_k),d_j]) + dx^l([N(d_j,d_k),d_i]) + dx^k([N(d_i,d_l),d_j]) + dx^k([N(d_j,d_l),d_i])) / 4`.
    pub fn k_func(&self, i: usize, k: usize, jj: usize, l: usize) -> Result<Expr> {
        self.check(&[i, k, jj, l])?;
        let terms = [
            self.bracket(i, k, jj)?.component(l).clone(),
            self.bracket(jj, k, i)?.component(l).clone(),
            self.bracket(i, l, jj)?.component(k).clone(),
            self.bracket(jj, l, i)?.component(k).clone(),
        ];
        Ok(Expr::sum(terms).scale(ComplexNum::new(0.25, 0.0)))
    }

    /// `L(d_i, d_k, d_j, d_l)`: as [`Squares::k_func`] with `J` applied to
    /// each bracket.
    pub fn l_func(&self, i: usize, k: usize, jj: usize, l: usize) -> Result<Expr> {
        self.check(&[i, k, jj, l])?;
        let jb = |a, b, c| -> Result<VecField> { self.j.apply(&self.bracket(a, b, c)?) };
        let terms = [
            jb(i, k, jj)?.component(l).clone(),
            jb(jj, k, i)?.component(l).clone(),
            jb(i, l, jj)?.component(k).clone(),
            jb(jj, l, i)?.component(k).clone(),
        ];
        Ok(Expr::sum(terms).scale(ComplexNum::new(0.25, 0.0)))
    }

    /// `hbar(d_i, d_k) = -d_i N_ik^k`, from the coordinate components.
    pub fn hbar(&self, i: usize, k: usize) -> Result<Expr> {
        self.check(&[i, k])?;
        Ok(-self.components().get(i, k, k).diff(i))
    }

    /// `hbar(d_i, d_k) = dx^k([N(d_i, d_k), d_i])`, from brackets.
    pub fn hbar_def(&self, i: usize, k: usize) -> Result<Expr> {
        Ok(self.bracket(i, k, i)?.component(k).clone())
    }

    /// `ell(d_i, d_k) = dx^k(J[N(d_i, d_k), d_i])`.
    pub fn ell(&self, i: usize, k: usize) -> Result<Expr> {
        Ok(self.j.apply(&self.bracket(i, k, i)?)?.component(k).clone())
    }

    /// `S_i = sum_k hbar(d_i, d_k)` (bracket route).
    pub fn s_i(&self, i: usize) -> Result<Expr> {
        Ok(Expr::sum((0..self.dim()).map(|k| self.hbar_def(i, k)).collect::<Result<Vec<_>>>()?))
    }

    /// `T = sum_{i,k} ell(d_i, d_k)`.
    pub fn t(&self) -> Result<Expr> {
        let n = self.dim();
        let mut terms = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in 0..n {
                terms.push(self.ell(i, k)?);
            }
        }
        Ok(Expr::sum(terms))
    }

    /// `(S_1, .., S_n)`, `S` and `T` at `point`.
    pub fn weak_squares_at(&self, point: &[f64]) -> Result<WeakSquares> {
        let mut ev = Evaluator::new(point);
        let s_i = (0..self.dim()).map(|i| Ok(ev.eval(&self.s_i(i)?)?)).collect::<Result<Vec<_>>>()?;
        let s = s_i.iter().sum();
        let t = ev.eval(&self.t()?)?;
        Ok(WeakSquares { s_i, s, t })
    }
}

/// `K(d_i, d_k, d_j, d_l)`; see [`Squares::k_func`].
pub fn k_func(j: &AcsField, i: usize, k: usize, jj: usize, l: usize) -> Result<Expr> {
    Squares::new(j).k_func(i, k, jj, l)
}

/// `L(d_i, d_k, d_j, d_l)`; see [`Squares::l_func`].
pub fn l_func(j: &AcsField, i: usize, k: usize, jj: usize, l: usize) -> Result<Expr> {
    Squares::new(j).l_func(i, k, jj, l)
}

/// `hbar(d_i, d_k)` (coordinate route).
pub fn hbar(j: &AcsField, i: usize, k: usize) -> Result<Expr> {
    Squares::new(j).hbar(i, k)
}

/// `ell(d_i, d_k)`.
pub fn ell(j: &AcsField, i: usize, k: usize) -> Result<Expr> {
    Squares::new(j).ell(i, k)
}

/// Weak squares of `J` at `point`.
pub fn weak_squares(j: &AcsField, point: &[f64]) -> Result<WeakSquares> {
    Squares::new(j).weak_squares_at(point)
}

/// `K(X, Z, Y, W)` for arbitrary fields; the duals `Z*` and `W*` must be
/// supplied as 1-forms since no metric is available to produce them.
pub fn k_func_with_duals(
    j: &AcsField,
    [x, z, y, w]: [&VecField; 4],
    z_dual: &Form,
    w_dual: &Form,
) -> Result<Expr> {
    four_term(j, [x, z, y, w], z_dual, w_dual, false)
}

/// `L(X, Z, Y, W)` for arbitrary fields with explicit duals.
pub fn l_func_with_duals(
    j: &AcsField,
    [x, z, y, w]: [&VecField; 4],
    z_dual: &Form,
    w_dual: &Form,
) -> Result<Expr> {
    four_term(j, [x, z, y, w], z_dual, w_dual, true)
}

fn four_term(
    j: &AcsField,
    [x, z, y, w]: [&VecField; 4],
    z_dual: &Form,
    w_dual: &Form,
    with_j: bool,
) -> Result<Expr> {
    let term = |a: &VecField, b: &VecField, c: &VecField, dual: &Form| -> Result<Expr> {
        let mut v = lie_bracket(&n_def(j, a, b)?, c)?;
        if with_j {
            v = j.apply(&v)?;
        }
        pair(dual, &v)
    };
    let terms = [term(x, z, y, w_dual)?, term(y, z, x, w_dual)?, term(x, w, y, z_dual)?, term(y, w, x, z_dual)?];
    Ok(Expr::sum(terms).scale(ComplexNum::new(0.25, 0.0)))
}
