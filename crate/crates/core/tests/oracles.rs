mod common;

use nijenhuis::acs::{DShift, VectorType};
use nijenhuis::calculus::{eval_form, ext_d, interior, lie_bracket, Form, VecField};
use nijenhuis::expr::{ComplexNum, Evaluator};
use nijenhuis::nijenhuis::{k_func, n_def, n_squared, Squares};
use nijenhuis::verify::{random, sample_points};
use nijenhuis::{parse, Expr};

use common::{random_expr, structure, Rng};

const H: f64 = 1e-5;

fn close(a: ComplexNum, b: ComplexNum, rel: f64) -> bool {
    (a - b).norm() <= rel * (1.0 + a.norm().max(b.norm()))
}

/// Central difference of a vector-valued map in direction `p`.
fn fd<F: Fn(&[f64]) -> Vec<f64>>(f: &F, x: &[f64], p: usize) -> Vec<f64> {
    let (mut up, mut down) = (x.to_vec(), x.to_vec());
    up[p] += H;
    down[p] -= H;
    f(&up).iter().zip(f(&down)).map(|(a, b)| (a - b) / (2.0 * H)).collect()
}

/// `[X, Y]` at `x` for vector fields given as plain functions.
fn fd_bracket<F: Fn(&[f64]) -> Vec<f64>, G: Fn(&[f64]) -> Vec<f64>>(xf: &F, yf: &G, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let (xv, yv) = (xf(x), yf(x));
    let mut out = vec![0.0; n];
    for p in 0..n {
        let dy = fd(yf, x, p);
        let dx = fd(xf, x, p);
        for r in 0..n {
            out[r] += xv[p] * dy[r] - yv[p] * dx[r];
        }
    }
    out
}

/// The non-integrable test structure written out by hand:
/// `J d1 = d2, J d2 = -d1, J d3 = d4 + x1 d2, J d4 = -d3 + x1 d1`.
fn twist_by_hand(x: &[f64]) -> [[f64; 4]; 4] {
    [[0.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0], [0.0, x[0], 0.0, 1.0], [x[0], 0.0, -1.0, 0.0]]
}

fn apply_hand(x: &[f64], v: &[f64]) -> Vec<f64> {
    let j = twist_by_hand(x);
    (0..4).map(|r| (0..4).map(|p| j[p][r] * v[p]).sum()).collect()
}

fn fd_nijenhuis(x: &[f64], i: usize, k: usize) -> Vec<f64> {
    let e = |a: usize| move |_: &[f64]| -> Vec<f64> { (0..4).map(|r| if r == a { 1.0 } else { 0.0 }).collect() };
    let je = |a: usize| move |y: &[f64]| apply_hand(y, &e(a)(y));
    let t1 = fd_bracket(&je(i), &je(k), x);
    let t2 = apply_hand(x, &fd_bracket(&e(i), &je(k), x));
    let t3 = apply_hand(x, &fd_bracket(&je(i), &e(k), x));
    let t4 = fd_bracket(&e(i), &e(k), x);
    (0..4).map(|r| t1[r] - t2[r] - t3[r] - t4[r]).collect()
}

#[test]
fn conjugated_twist_matches_hand_matrix() {
    let s = structure("twist4");
    let mut rng = Rng::new(11);
    for _ in 0..20 {
        let x: Vec<f64> = (0..4).map(|_| rng.uniform(-0.5, 0.5)).collect();
        let hand = twist_by_hand(&x);
        for i in 0..4 {
            for r in 0..4 {
                let v = s.acs.entry(i, r).eval(&x).unwrap();
                assert!((v.re - hand[i][r]).abs() < 1e-15 && v.im == 0.0, "J_{i}^{r} at {x:?}");
            }
        }
    }
}

#[test]
fn nijenhuis_matches_finite_differences_on_twist() {
    let s = structure("twist4");
    let mut rng = Rng::new(12);
    for _ in 0..20 {
        let x: Vec<f64> = (0..4).map(|_| rng.uniform(-0.5, 0.5)).collect();
        for (i, k) in [(0, 2), (0, 1), (1, 3), (2, 3)] {
            let sym = n_def(&s.acs, &VecField::coordinate(4, i), &VecField::coordinate(4, k)).unwrap().eval_at(&x).unwrap();
            let num = fd_nijenhuis(&x, i, k);
            for r in 0..4 {
                assert!(close(sym[r], ComplexNum::new(num[r], 0.0), 1e-6), "N({i},{k})^{r}: {} vs {}", sym[r], num[r]);
            }
        }
        // hand computation: N(d1, d3) = d1
        let n13 = fd_nijenhuis(&x, 0, 2);
        assert!((n13[0] - 1.0).abs() < 1e-6 && n13[1..].iter().all(|v| v.abs() < 1e-6));
    }
}

#[test]
fn bracket_matches_finite_differences() {
    let mut rng = Rng::new(13);
    for _ in 0..30 {
        let n = 2 * rng.below(2) + 2;
        let x = VecField::new((0..n).map(|_| random_expr(&mut rng, n, 3)).collect());
        let y = VecField::new((0..n).map(|_| random_expr(&mut rng, n, 3)).collect());
        let p: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let as_fn = |v: &VecField| {
            let v = v.clone();
            move |q: &[f64]| -> Vec<f64> { v.eval_at(q).unwrap().iter().map(|z| z.re).collect() }
        };
        let num = fd_bracket(&as_fn(&x), &as_fn(&y), &p);
        let sym = lie_bracket(&x, &y).unwrap().eval_at(&p).unwrap();
        for r in 0..n {
            assert!(close(sym[r], ComplexNum::new(num[r], 0.0), 1e-6), "{} vs {}", sym[r], num[r]);
        }
    }
}

#[test]
fn exterior_derivative_matches_invariant_formula() {
    // d w(X, Y) = X w(Y) - Y w(X) - w([X, Y]), with X w(Y) by central differences
    let mut rng = Rng::new(14);
    let mut r = random::rng_for(14, 0);
    for _ in 0..20 {
        let n = 4;
        let w = random::form(&mut r, n, 1, 2);
        let x = random::vector_field(&mut r, n, 2);
        let y = random::vector_field(&mut r, n, 2);
        let p: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let pair_at = |a: &VecField| {
            let (w, a) = (w.clone(), a.clone());
            move |q: &[f64]| vec![eval_form(&w, std::slice::from_ref(&a), q).unwrap().re]
        };
        let xv = x.eval_at(&p).unwrap();
        let yv = y.eval_at(&p).unwrap();
        let directional = |v: &[ComplexNum], f: &dyn Fn(&[f64]) -> Vec<f64>| -> f64 {
            (0..n).map(|q| v[q].re * fd(&f, &p, q)[0]).sum()
        };
        let expected = directional(&xv, &pair_at(&y)) - directional(&yv, &pair_at(&x))
            - eval_form(&w, &[lie_bracket(&x, &y).unwrap()], &p).unwrap().re;
        let got = eval_form(&ext_d(&w).unwrap(), &[x, y], &p).unwrap();
        assert!(close(got, ComplexNum::new(expected, 0.0), 1e-6), "{got} vs {expected}");
    }
}

#[test]
fn evaluation_uses_determinant_convention() {
    let n = 4;
    let w = Form::basis(n, &[0, 1, 3]);
    let mut rng = Rng::new(15);
    let vecs: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect()).collect();
    let fields: Vec<VecField> = vecs.iter().map(|v| VecField::new(v.iter().map(|&c| Expr::real(c)).collect())).collect();
    let got = eval_form(&w, &fields, &[0.0; 4]).unwrap();
    // explicit permutation sum over slots (0, 1, 3)
    let idx = [0, 1, 3];
    let perms = [([0, 1, 2], 1.0), ([0, 2, 1], -1.0), ([1, 0, 2], -1.0), ([1, 2, 0], 1.0), ([2, 0, 1], 1.0), ([2, 1, 0], -1.0)];
    let expected: f64 = perms.iter().map(|(s, sign)| sign * (0..3).map(|a| vecs[a][idx[s[a]]]).product::<f64>()).sum();
    assert!((got.re - expected).abs() < 1e-14);
}

#[test]
fn interior_is_transpose_of_left_wedge() {
    // w(u ^ v1 ^ v2) = (i(u) w)(v1 ^ v2)
    let mut r = random::rng_for(16, 0);
    let n = 4;
    for _ in 0..10 {
        let w = random::form(&mut r, n, 3, 2);
        let u = random::vector_field(&mut r, n, 1);
        let v1 = random::vector_field(&mut r, n, 1);
        let v2 = random::vector_field(&mut r, n, 1);
        let p = [0.3, -0.2, 0.7, 0.1];
        let lhs = eval_form(&w, &[u.clone(), v1.clone(), v2.clone()], &p).unwrap();
        let rhs = eval_form(&interior(&u, &w).unwrap(), &[v1, v2], &p).unwrap();
        assert!(close(lhs, rhs, 1e-12));
    }
}

#[test]
fn j_on_forms_is_adjoint() {
    let s = structure("twist4");
    let mut r = random::rng_for(17, 0);
    for p in sample_points(&s, 20, 17, 1e-9).unwrap() {
        let zeta = random::form(&mut r, 4, 1, 2);
        let x = random::vector_field(&mut r, 4, 2);
        let lhs = eval_form(&s.acs.apply_form1(&zeta).unwrap(), std::slice::from_ref(&x), &p).unwrap();
        let rhs = eval_form(&zeta, &[s.acs.apply(&x).unwrap()], &p).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }
}

#[test]
fn vector_projections_split_and_are_eigenvectors() {
    let s = structure("pullback4");
    let mut r = random::rng_for(18, 0);
    for p in sample_points(&s, 10, 18, 1e-9).unwrap() {
        let x = random::vector_field(&mut r, 4, 2);
        let a = s.acs.project_vec(&x, VectorType::OneZero).unwrap();
        let b = s.acs.project_vec(&x, VectorType::ZeroOne).unwrap();
        let sum = a.add(&b).unwrap().eval_at(&p).unwrap();
        let xv = x.eval_at(&p).unwrap();
        let ja = s.acs.apply(&a).unwrap().eval_at(&p).unwrap();
        let av = a.eval_at(&p).unwrap();
        for r in 0..4 {
            assert!((sum[r] - xv[r]).norm() < 1e-12);
            assert!((ja[r] - ComplexNum::new(0.0, 1.0) * av[r]).norm() < 1e-12);
        }
    }
}

#[test]
fn bigrading_partitions_and_pure_types_annihilate() {
    let s = structure("twist4");
    let mut r = random::rng_for(19, 0);
    for p in sample_points(&s, 10, 19, 1e-9).unwrap() {
        let a = random::form(&mut r, 4, 2, 2);
        let b = s.acs.bigrade(&a).unwrap();
        let mut ev = Evaluator::new(&p);
        let total = b.total().eval_coeffs(&mut ev).unwrap();
        let orig = a.eval_coeffs(&mut ev).unwrap();
        for (k, v) in &orig {
            assert!((total.get(k).copied().unwrap_or_default() - v).norm() < 1e-12);
        }
        let x = s.acs.project_vec(&random::vector_field(&mut r, 4, 1), VectorType::OneZero).unwrap();
        let y = s.acs.project_vec(&random::vector_field(&mut r, 4, 1), VectorType::OneZero).unwrap();
        let v = eval_form(&b.component(0, 2), &[x.clone(), y.clone()], &p).unwrap();
        assert!(v.norm() < 1e-12);
        let v = eval_form(&b.component(1, 1), &[x, y], &p).unwrap();
        assert!(v.norm() < 1e-12);
        // idempotence
        let pure = b.component(1, 1);
        let again = s.acs.bigrade(&pure).unwrap();
        let reference = pure.eval_coeffs(&mut ev).unwrap();
        for (pq, f) in again.components() {
            for (k, v) in f.eval_coeffs(&mut ev).unwrap() {
                let expected = if *pq == (1, 1) { reference.get(&k).copied().unwrap_or_default() } else { ComplexNum::default() };
                assert!((v - expected).norm() < 1e-12, "{pq:?} {k:?}");
            }
        }
    }
}

#[test]
fn hbar_routes_agree_on_builtins() {
    for name in ["flat", "flat2", "flat6", "pullback4", "twist4"] {
        let s = structure(name);
        let sq = Squares::new(&s.acs);
        let n = s.dim();
        for p in sample_points(&s, 50, 20, 1e-9).unwrap() {
            let mut ev = Evaluator::new(&p);
            for i in 0..n {
                for k in 0..n {
                    let a = ev.eval(&sq.hbar(i, k).unwrap()).unwrap();
                    let b = ev.eval(&sq.hbar_def(i, k).unwrap()).unwrap();
                    assert!((a - b).norm() < 1e-10, "{name} hbar({i},{k})");
                }
            }
        }
    }
}

#[test]
fn k_functional_matches_direct_brackets() {
    // K(d1, d3, d2, d4) = 1/4 (dx4([N(d1,d3),d2]) + dx4([N(d2,d3),d1]) + dx3([N(d1,d4),d2]) + dx3([N(d2,d4),d1]))
    let s = structure("twist4");
    let j = &s.acs;
    let d = |a| VecField::coordinate(4, a);
    let term = |a, b, c, dual: usize, p: &[f64]| {
        let v = lie_bracket(&n_def(j, &d(a), &d(b)).unwrap(), &d(c)).unwrap();
        eval_form(&Form::dx(4, dual), &[v], p).unwrap()
    };
    let k = k_func(j, 0, 2, 1, 3).unwrap();
    for p in sample_points(&s, 20, 21, 1e-9).unwrap() {
        let direct =
            (term(0, 2, 1, 3, &p) + term(1, 2, 0, 3, &p) + term(0, 3, 1, 2, &p) + term(1, 3, 0, 2, &p)) * 0.25;
        assert!(close(k.eval(&p).unwrap(), direct, 1e-12));
        // relabeling symmetries
        let a = k.eval(&p).unwrap();
        assert!((a - k_func(j, 1, 2, 0, 3).unwrap().eval(&p).unwrap()).norm() < 1e-12);
        assert!((a - k_func(j, 0, 3, 1, 2).unwrap().eval(&p).unwrap()).norm() < 1e-12);
    }
}

#[test]
fn strong_square_dual_form_example() {
    // omega(N2(d1,d3;d2)) = -16 (rhobar i(d2) rho omega)(d1,d3) for omega = pi01 dx1
    let s = structure("twist4");
    let j = &s.acs;
    let d = |a| VecField::coordinate(4, a);
    let omega = j.project(&Form::dx(4, 0), 0, 1).unwrap();
    let n2 = n_squared(j, &d(0), &d(2), &d(1)).unwrap();
    let rhs_form = j.comp_d(&interior(&d(1), &j.comp_d(&omega, DShift::Rho).unwrap()).unwrap(), DShift::RhoBar).unwrap();
    for p in sample_points(&s, 20, 22, 1e-9).unwrap() {
        let lhs = eval_form(&omega, std::slice::from_ref(&n2), &p).unwrap();
        let rhs = eval_form(&rhs_form, &[d(0), d(2)], &p).unwrap() * -16.0;
        assert!(close(lhs, rhs, 1e-9), "{lhs} vs {rhs}");
    }
}

#[test]
fn nijenhuis_is_function_linear_and_antisymmetric() {
    let s = structure("twist4");
    let mut r = random::rng_for(23, 0);
    for p in sample_points(&s, 10, 23, 1e-9).unwrap() {
        let f = random::polynomial(&mut r, 4, 2);
        let x = random::vector_field(&mut r, 4, 2);
        let y = random::vector_field(&mut r, 4, 2);
        let a = n_def(&s.acs, &x.scale(&f), &y).unwrap().eval_at(&p).unwrap();
        let b = n_def(&s.acs, &x, &y).unwrap().scale(&f).eval_at(&p).unwrap();
        let xy = n_def(&s.acs, &x, &y).unwrap().eval_at(&p).unwrap();
        let yx = n_def(&s.acs, &y, &x).unwrap().eval_at(&p).unwrap();
        for k in 0..4 {
            assert!(close(a[k], b[k], 1e-9));
            assert!((xy[k] + yx[k]).norm() < 1e-12);
        }
    }
}

#[test]
fn parsed_twist_expression_evaluates() {
    let e = parse("x1*x3 + sin(x2)^2 - exp(0)", 4).unwrap();
    let v = e.eval(&[2.0, 0.0, 3.0, 0.0]).unwrap();
    assert!((v.re - 5.0).abs() < 1e-15);
}
