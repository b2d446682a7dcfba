use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::acs::{AcsField, DShift, VectorType};
use crate::calculus::{eval_form_values, ext_d, interior, lie_bracket, Form, VecField};
use crate::error::Result;
use crate::expr::{ComplexNum, Evaluator, Expr};
use crate::nijenhuis::{n_def, Squares};

use super::random;
use super::Structure;

type C = ComplexNum;
type Pairs = Vec<(C, C)>;
pub(super) type PointCheck<'a> = Box<dyn Fn(&[f64], &mut ChaCha8Rng) -> Result<Pairs> + Send + Sync + 'a>;

const I: C = C::new(0.0, 1.0);

fn re(x: f64) -> C {
    C::new(x, 0.0)
}

/// `rhobar i(d_a) rho(dx^b + i J dx^b)` and `rho i(d_a) rhobar(dx^b - i J dx^b)`
/// for all `a, b`, indexed `a * n + b`.
pub(super) struct Duals {
    g: Vec<Form>,
    h: Vec<Form>,
}

pub(super) struct Env<'a> {
    s: &'a Structure,
    degree: u32,
    squares: Squares,
    duals: OnceLock<Result<Duals>>,
}

impl<'a> Env<'a> {
    pub(super) fn new(s: &'a Structure, degree: u32) -> Self {
        Env { s, degree, squares: Squares::new(&s.acs), duals: OnceLock::new() }
    }

    fn j(&self) -> &AcsField {
        &self.s.acs
    }

    fn n(&self) -> usize {
        self.s.dim()
    }

    fn field(&self, rng: &mut ChaCha8Rng) -> VecField {
        random::vector_field(rng, self.n(), self.degree)
    }

    fn function(&self, rng: &mut ChaCha8Rng) -> Expr {
        random::polynomial(rng, self.n(), self.degree)
    }

    fn form(&self, rng: &mut ChaCha8Rng, k: usize) -> Form {
        random::form(rng, self.n(), k, self.degree)
    }

    fn duals(&self) -> Result<&Duals> {
        self.duals.get_or_init(|| build_duals(self.j())).as_ref().map_err(Clone::clone)
    }
}

fn build_duals(j: &AcsField) -> Result<Duals> {
    let n = j.dim();
    let mut g = Vec::with_capacity(n * n);
    let mut h = Vec::with_capacity(n * n);
    for a in 0..n {
        let da = VecField::coordinate(n, a);
        for b in 0..n {
            let dx = Form::dx(n, b);
            let jdx = j.apply_form1(&dx)?;
            let plus = dx.add(&jdx.scale_const(I))?;
            let minus = dx.sub(&jdx.scale_const(I))?;
            g.push(j.comp_d(&interior(&da, &j.comp_d(&plus, DShift::Rho)?)?, DShift::RhoBar)?);
            h.push(j.comp_d(&interior(&da, &j.comp_d(&minus, DShift::RhoBar)?)?, DShift::Rho)?);
        }
    }
    Ok(Duals { g, h })
}

fn vals(v: &VecField, ev: &mut Evaluator) -> Result<Vec<C>> {
    v.eval(ev)
}

fn on1(a: &Form, u: &[C], ev: &mut Evaluator) -> Result<C> {
    eval_form_values(a, &[u.to_vec()], ev)
}

fn on2(a: &Form, u: &[C], v: &[C], ev: &mut Evaluator) -> Result<C> {
    eval_form_values(a, &[u.to_vec(), v.to_vec()], ev)
}

fn unit(n: usize, i: usize) -> Vec<C> {
    let mut v = vec![C::new(0.0, 0.0); n];
    v[i] = re(1.0);
    v
}

fn zero_pairs(values: impl IntoIterator<Item = C>) -> Pairs {
    values.into_iter().map(|v| (v, C::new(0.0, 0.0))).collect()
}

/// Coefficient-wise comparison of two forms of equal degree.
fn form_pairs(a: &Form, b: &Form, ev: &mut Evaluator) -> Result<Pairs> {
    let ca = a.eval_coeffs(ev)?;
    let cb = b.eval_coeffs(ev)?;
    let zero = C::new(0.0, 0.0);
    let mut keys: Vec<&Vec<usize>> = ca.keys().chain(cb.keys()).collect();
    keys.sort();
    keys.dedup();
    Ok(keys.into_iter().map(|k| (*ca.get(k).unwrap_or(&zero), *cb.get(k).unwrap_or(&zero))).collect())
}

#[derive(Clone, Copy)]
enum Flavor {
    Omega,
    Theta,
    Real,
}

/// Builds the per-point check for `id`. `None` means the identity does not
/// apply to this structure.
pub(super) fn prepare<'e>(id: &str, env: &'e Env<'e>) -> Result<Option<PointCheck<'e>>> {
    let check: PointCheck<'e> = match id {
        "bracket-projection" => Box::new(move |p, rng| bracket_projection(env, p, rng)),
        "dbar-f-pairing" => Box::new(move |p, rng| f_pairing(env, p, rng, DShift::PartialBar, DShift::Partial)),
        "d-f-pairing" => Box::new(move |p, rng| f_pairing(env, p, rng, DShift::Partial, DShift::PartialBar)),
        "rho-01-pairing" => Box::new(move |p, rng| form_pairing(env, p, rng, (0, 1), DShift::Rho)),
        "rhobar-10-pairing" => Box::new(move |p, rng| form_pairing(env, p, rng, (1, 0), DShift::RhoBar)),
        "j-eigenforms" => Box::new(move |p, rng| j_eigenforms(env, p, rng)),
        "nsq-bracket-01" => Box::new(move |p, rng| nsq_bracket(env, p, rng, Flavor::Omega, false)),
        "jnsq-bracket-01" => Box::new(move |p, rng| nsq_bracket(env, p, rng, Flavor::Omega, true)),
        "nsq-bracket-10" => Box::new(move |p, rng| nsq_bracket(env, p, rng, Flavor::Theta, false)),
        "jnsq-bracket-10" => Box::new(move |p, rng| nsq_bracket(env, p, rng, Flavor::Theta, true)),
        "nsq-bracket-real" => Box::new(move |p, rng| nsq_bracket(env, p, rng, Flavor::Real, false)),
        "jnsq-bracket-real" => Box::new(move |p, rng| nsq_bracket(env, p, rng, Flavor::Real, true)),
        "trace-cancellation" => trace_cancellation(env)?,
        "weak-square-s" => weak_square_s(env)?,
        "nsq-dual-01" => Box::new(move |p, rng| nsq_dual(env, p, rng, Flavor::Omega, false)),
        "jnsq-dual-01" => Box::new(move |p, rng| nsq_dual(env, p, rng, Flavor::Omega, true)),
        "nsq-dual-10" => Box::new(move |p, rng| nsq_dual(env, p, rng, Flavor::Theta, false)),
        "jnsq-dual-10" => Box::new(move |p, rng| nsq_dual(env, p, rng, Flavor::Theta, true)),
        "nsq-dual-real" => Box::new(move |p, rng| nsq_dual(env, p, rng, Flavor::Real, false)),
        "jnsq-dual-real" => Box::new(move |p, rng| nsq_dual(env, p, rng, Flavor::Real, true)),
        "square-dual-forms" => square_dual_forms(env)?,
        "dual-sum-vanishing" => dual_sum_vanishing(env)?,
        "weak-square-t" => {
            let t = env.squares.t()?;
            Box::new(move |p, _| Ok(zero_pairs([Evaluator::new(p).eval(&t)?])))
        }
        "rho-tensorial" => Box::new(move |p, rng| rho_tensorial(env, p, rng)),
        "d-decomposition" => Box::new(move |p, rng| d_decomposition(env, p, rng)),
        "integrable-n-vanishes" => {
            if !env.s.integrable {
                return Ok(None);
            }
            integrable_n_vanishes(env)?
        }
        other => return Err(crate::Error::UnknownIdentity(other.to_string())),
    };
    Ok(Some(check))
}

fn bracket_projection(env: &Env, p: &[f64], rng: &mut ChaCha8Rng) -> Result<Pairs> {
    let j = env.j();
    let (x, y) = (env.field(rng), env.field(rng));
    let nxy = n_def(j, &x, &y)?;
    let mut ev = Evaluator::new(p);
    let mut out = Pairs::new();
    for (inner, outer) in [(VectorType::OneZero, VectorType::ZeroOne), (VectorType::ZeroOne, VectorType::OneZero)] {
        let br = lie_bracket(&j.project_vec(&x, inner)?, &j.project_vec(&y, inner)?)?;
        let lhs = vals(&j.project_vec(&br, outer)?, &mut ev)?;
        let rhs = vals(&j.project_vec(&nxy, outer)?.scale_const(re(-0.25)), &mut ev)?;
        out.extend(lhs.into_iter().zip(rhs));
    }
    Ok(out)
}

/// `(first f)(N(X,Y)) = -4 (second second f)(X,Y)`.
fn f_pairing(env: &Env, p: &[f64], rng: &mut ChaCha8Rng, first: DShift, second: DShift) -> Result<Pairs> {
    let j = env.j();
    let f = Form::scalar(env.n(), env.function(rng));
    let (x, y) = (env.field(rng), env.field(rng));
    let mut ev = Evaluator::new(p);
    let nv = vals(&n_def(j, &x, &y)?, &mut ev)?;
    let lhs = on1(&j.comp_d(&f, first)?, &nv, &mut ev)?;
    let second_sq = j.comp_d(&j.comp_d(&f, second)?, second)?;
    let (xv, yv) = (vals(&x, &mut ev)?, vals(&y, &mut ev)?);
    let rhs = re(-4.0) * on2(&second_sq, &xv, &yv, &mut ev)?;
    Ok(vec![(lhs, rhs)])
}

/// `a(N(X,Y)) = 4 (shift a)(X,Y)` for `a` the `ty` part of a random real 1-form.
fn form_pairing(env: &Env, p: &[f64], rng: &mut ChaCha8Rng, ty: (usize, usize), shift: DShift) -> Result<Pairs> {
    let j = env.j();
    let a = j.project(&env.form(rng, 1), ty.0, ty.1)?;
    let (x, y) = (env.field(rng), env.field(rng));
    let mut ev = Evaluator::new(p);
    let nv = vals(&n_def(j, &x, &y)?, &mut ev)?;
    let lhs = on1(&a, &nv, &mut ev)?;
    let (xv, yv) = (vals(&x, &mut ev)?, vals(&y, &mut ev)?);
    let rhs = re(4.0) * on2(&j.comp_d(&a, shift)?, &xv, &yv, &mut ev)?;
    Ok(vec![(lhs, rhs)])
}

fn j_eigenforms(env: &Env, p: &[f64], rng: &mut ChaCha8Rng) -> Result<Pairs> {
    let j = env.j();
    let zeta = env.form(rng, 1);
    let x = env.field(rng);
    let mut ev = Evaluator::new(p);
    let xv = vals(&x, &mut ev)?;
    let jxv = vals(&j.apply(&x)?, &mut ev)?;
    let omega = j.project(&zeta, 0, 1)?;
    let theta = j.project(&zeta, 1, 0)?;
    Ok(vec![
        (on1(&omega, &jxv, &mut ev)?, -I * on1(&omega, &xv, &mut ev)?),
        (on1(&theta, &jxv, &mut ev)?, I * on1(&theta, &xv, &mut ev)?),
    ])
}

struct SquareSample {
    zeta: Form,
    x: Vec<C>,
    z: Vec<C>,
    y: VecField,
    n2: Vec<C>,
    jn2: Vec<C>,
}

/// Draws `zeta, X, Z, Y` and evaluates `N2(X,Z;Y)` and `J N2(X,Z;Y)`.
fn square_sample(env: &Env, ev: &mut Evaluator, rng: &mut ChaCha8Rng) -> Result<(SquareSample, VecField)> {
    let j = env.j();
    let zeta = env.form(rng, 1);
    let (x, z, y) = (env.field(rng), env.field(rng), env.field(rng));
    let nxz = n_def(j, &x, &z)?;
    let n2 = n_def(j, &nxz, &y)?;
    let sample = SquareSample {
        zeta,
        x: vals(&x, ev)?,
        z: vals(&z, ev)?,
        n2: vals(&n2, ev)?,
        jn2: vals(&j.apply(&n2)?, ev)?,
        y,
    };
    Ok((sample, nxz))
}

fn nsq_bracket(env: &Env, p: &[f64], rng: &mut ChaCha8Rng, flavor: Flavor, with_j: bool) -> Result<Pairs> {
    let j = env.j();
    let mut ev = Evaluator::new(p);
    let (s, nxz) = square_sample(env, &mut ev, rng)?;
    let br = vals(&lie_bracket(&nxz, &s.y)?, &mut ev)?;
    let lhs_vec = if with_j { &s.jn2 } else { &s.n2 };
    let pair = match flavor {
        Flavor::Omega => {
            let omega = j.project(&s.zeta, 0, 1)?;
            let factor = if with_j { -I } else { re(1.0) };
            (on1(&omega, lhs_vec, &mut ev)?, factor * on1(&omega, &br, &mut ev)?)
        }
        Flavor::Theta => {
            let theta = j.project(&s.zeta, 1, 0)?;
            let factor = if with_j { I } else { re(1.0) };
            (on1(&theta, lhs_vec, &mut ev)?, factor * on1(&theta, &br, &mut ev)?)
        }
        Flavor::Real => {
            let rhs_form = if with_j { j.apply_form1(&s.zeta)? } else { s.zeta.clone() };
            (on1(&s.zeta, lhs_vec, &mut ev)?, on1(&rhs_form, &br, &mut ev)?)
        }
    };
    Ok(vec![pair])
}

/// `rhobar i(Y) rho a` and `rho i(Y) rhobar a`.
fn rbr(j: &AcsField, y: &VecField, a: &Form) -> Result<Form> {
    j.comp_d(&interior(y, &j.comp_d(a, DShift::Rho)?)?, DShift::RhoBar)
}

fn rrb(j: &AcsField, y: &VecField, a: &Form) -> Result<Form> {
    j.comp_d(&interior(y, &j.comp_d(a, DShift::RhoBar)?)?, DShift::Rho)
}

fn nsq_dual(env: &Env, p: &[f64], rng: &mut ChaCha8Rng, flavor: Flavor, with_j: bool) -> Result<Pairs> {
    let j = env.j();
    let mut ev = Evaluator::new(p);
    let (s, _) = square_sample(env, &mut ev, rng)?;
    let lhs_vec = if with_j { &s.jn2 } else { &s.n2 };
    let pair = match flavor {
        Flavor::Omega => {
            let omega = j.project(&s.zeta, 0, 1)?;
            let factor = if with_j { re(16.0) * I } else { re(-16.0) };
            let rhs = on2(&rbr(j, &s.y, &omega)?, &s.x, &s.z, &mut ev)?;
            (on1(&omega, lhs_vec, &mut ev)?, factor * rhs)
        }
        Flavor::Theta => {
            let theta = j.project(&s.zeta, 1, 0)?;
            let factor = if with_j { re(-16.0) * I } else { re(-16.0) };
            let rhs = on2(&rrb(j, &s.y, &theta)?, &s.x, &s.z, &mut ev)?;
            (on1(&theta, lhs_vec, &mut ev)?, factor * rhs)
        }
        Flavor::Real => {
            let jz = j.apply_form1(&s.zeta)?;
            let a = on2(&rbr(j, &s.y, &s.zeta.add(&jz.scale_const(I))?)?, &s.x, &s.z, &mut ev)?;
            let b = on2(&rrb(j, &s.y, &s.zeta.sub(&jz.scale_const(I))?)?, &s.x, &s.z, &mut ev)?;
            let rhs = if with_j { re(8.0) * I * (a - b) } else { re(-8.0) * (a + b) };
            (on1(&s.zeta, lhs_vec, &mut ev)?, rhs)
        }
    };
    Ok(vec![pair])
}

fn trace_cancellation<'e>(env: &'e Env<'e>) -> Result<PointCheck<'e>> {
    let n = env.n();
    let nc = env.squares.components();
    let mut traces: Vec<Expr> = (0..n).map(|i| nc.trace(i)).collect();
    for i in 0..n {
        let terms = (0..n).map(|k| Ok(env.squares.n_field(i, k)?.component(k).clone())).collect::<Result<Vec<_>>>()?;
        traces.push(Expr::sum(terms));
    }
    Ok(Box::new(move |p, _| {
        let mut ev = Evaluator::new(p);
        Ok(zero_pairs(traces.iter().map(|t| ev.eval(t)).collect::<Result<Vec<_>, _>>()?))
    }))
}

fn weak_square_s<'e>(env: &'e Env<'e>) -> Result<PointCheck<'e>> {
    let n = env.n();
    let sq = &env.squares;
    let mut exprs = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        exprs.push(sq.s_i(i)?);
    }
    exprs.push(Expr::sum(exprs.clone()));
    for i in 0..n {
        exprs.push(Expr::sum((0..n).map(|k| sq.hbar(i, k)).collect::<Result<Vec<_>>>()?));
    }
    Ok(Box::new(move |p, _| {
        let mut ev = Evaluator::new(p);
        Ok(zero_pairs(exprs.iter().map(|e| ev.eval(e)).collect::<Result<Vec<_>, _>>()?))
    }))
}

/// `D+(a,b)(d_u,d_v)` and `D-(a,b)(d_u,d_v)` evaluated at a point.
struct DualValues {
    n: usize,
    g: Vec<C>,
    h: Vec<C>,
}

impl DualValues {
    fn new(d: &Duals, n: usize, ev: &mut Evaluator) -> Result<Self> {
        let units: Vec<Vec<C>> = (0..n).map(|i| unit(n, i)).collect();
        let mut g = vec![C::new(0.0, 0.0); n * n * n * n];
        let mut h = g.clone();
        for ab in 0..n * n {
            for u in 0..n {
                for v in 0..n {
                    let idx = (ab * n + u) * n + v;
                    g[idx] = on2(&d.g[ab], &units[u], &units[v], ev)?;
                    h[idx] = on2(&d.h[ab], &units[u], &units[v], ev)?;
                }
            }
        }
        Ok(DualValues { n, g, h })
    }

    fn idx(&self, a: usize, b: usize, u: usize, v: usize) -> usize {
        ((a * self.n + b) * self.n + u) * self.n + v
    }

    fn g(&self, a: usize, b: usize, u: usize, v: usize) -> C {
        self.g[self.idx(a, b, u, v)]
    }

    fn h(&self, a: usize, b: usize, u: usize, v: usize) -> C {
        self.h[self.idx(a, b, u, v)]
    }

    fn plus(&self, a: usize, b: usize, u: usize, v: usize) -> C {
        self.g(a, b, u, v) + self.h(a, b, u, v)
    }

    fn minus(&self, a: usize, b: usize, u: usize, v: usize) -> C {
        self.g(a, b, u, v) - self.h(a, b, u, v)
    }
}

fn square_dual_forms<'e>(env: &'e Env<'e>) -> Result<PointCheck<'e>> {
    let n = env.n();
    let sq = &env.squares;
    let mut hbar = Vec::with_capacity(n * n);
    let mut ell = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            hbar.push(sq.hbar_def(i, k)?);
            ell.push(sq.ell(i, k)?);
        }
    }
    let s_i: Vec<Expr> = (0..n).map(|i| sq.s_i(i)).collect::<Result<_>>()?;
    let t = sq.t()?;
    env.duals()?;
    Ok(Box::new(move |p, rng| {
        let duals = env.duals()?;
        let mut ev = Evaluator::new(p);
        let dv = DualValues::new(duals, n, &mut ev)?;
        let mut out = Pairs::new();
        let (i, k, jj, l) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
        let k_rhs = re(-2.0) * (dv.plus(jj, l, i, k) + dv.plus(i, l, jj, k) + dv.plus(jj, k, i, l) + dv.plus(i, k, jj, l));
        let l_rhs = re(2.0) * I * (dv.minus(jj, l, i, k) + dv.minus(i, l, jj, k) + dv.minus(jj, k, i, l) + dv.minus(i, k, jj, l));
        out.push((ev.eval(&sq.k_func(i, k, jj, l)?)?, k_rhs));
        out.push((ev.eval(&sq.l_func(i, k, jj, l)?)?, l_rhs));
        let mut s_total = C::new(0.0, 0.0);
        let mut t_total = C::new(0.0, 0.0);
        for a in 0..n {
            let mut s_a = C::new(0.0, 0.0);
            for b in 0..n {
                let hb = re(-8.0) * dv.plus(a, b, a, b);
                let el = re(8.0) * I * dv.minus(a, b, a, b);
                out.push((ev.eval(&hbar[a * n + b])?, hb));
                out.push((ev.eval(&ell[a * n + b])?, el));
                s_a += hb;
                t_total += el;
            }
            out.push((ev.eval(&s_i[a])?, s_a));
            s_total += s_a;
        }
        let s_lhs = s_i.iter().map(|e| ev.eval(e)).sum::<Result<C, _>>()?;
        out.push((s_lhs, s_total));
        out.push((ev.eval(&t)?, t_total));
        Ok(out)
    }))
}

fn dual_sum_vanishing<'e>(env: &'e Env<'e>) -> Result<PointCheck<'e>> {
    let n = env.n();
    env.duals()?;
    Ok(Box::new(move |p, _| {
        let mut ev = Evaluator::new(p);
        let dv = DualValues::new(env.duals()?, n, &mut ev)?;
        let mut values: Vec<C> = (0..n).map(|i| (0..n).map(|k| dv.plus(i, k, i, k)).sum()).collect();
        values.push((0..n).flat_map(|i| (0..n).map(move |k| (i, k))).map(|(i, k)| dv.g(i, k, i, k)).sum());
        values.push((0..n).flat_map(|i| (0..n).map(move |k| (i, k))).map(|(i, k)| dv.h(i, k, i, k)).sum());
        Ok(zero_pairs(values))
    }))
}

fn rho_tensorial(env: &Env, p: &[f64], rng: &mut ChaCha8Rng) -> Result<Pairs> {
    let j = env.j();
    let f = env.function(rng);
    let zeta = env.form(rng, 1);
    let fz = zeta.scale(&f);
    let mut ev = Evaluator::new(p);
    let mut out = Pairs::new();
    for shift in [DShift::Rho, DShift::RhoBar] {
        out.extend(form_pairs(&j.comp_d(&fz, shift)?, &j.comp_d(&zeta, shift)?.scale(&f), &mut ev)?);
    }
    Ok(out)
}

fn d_decomposition(env: &Env, p: &[f64], rng: &mut ChaCha8Rng) -> Result<Pairs> {
    let j = env.j();
    let mut ev = Evaluator::new(p);
    let mut out = Pairs::new();
    for k in 0..=2.min(env.n() - 1) {
        let a = env.form(rng, k);
        let mut total = Form::zero(env.n(), k + 1);
        for shift in DShift::ALL {
            total = total.add(&j.comp_d(&a, shift)?)?;
        }
        out.extend(form_pairs(&total, &ext_d(&a)?, &mut ev)?);
    }
    Ok(out)
}

fn integrable_n_vanishes<'e>(env: &'e Env<'e>) -> Result<PointCheck<'e>> {
    let n = env.n();
    let nc = env.squares.components();
    let mut exprs = Vec::new();
    for i in 0..n {
        for k in i + 1..n {
            let f = env.squares.n_field(i, k)?;
            for r in 0..n {
                exprs.push(nc.get(i, k, r).clone());
                exprs.push(f.component(r).clone());
            }
        }
    }
    Ok(Box::new(move |p, _| {
        let mut ev = Evaluator::new(p);
        Ok(zero_pairs(exprs.iter().map(|e| ev.eval(e)).collect::<Result<Vec<_>, _>>()?))
    }))
}
