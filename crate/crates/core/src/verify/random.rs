//! Seeded random test objects: polynomial functions, vector fields and forms.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calculus::{Chart, Form, FormBuilder, VecField};
use crate::expr::Expr;

/// splitmix64 finalizer.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a, stable across platforms and toolchains.
pub fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, stream))
}

/// A point drawn uniformly from the chart box.
pub fn point_in_box<R: Rng>(rng: &mut R, chart: &Chart) -> Vec<f64> {
    chart.bounds().iter().map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect()
}

/// Exponent vectors of all monomials in `dim` variables of total degree at
/// most `degree`, in graded lexicographic order.
pub fn monomials(dim: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(dim: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == dim {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for e in (0..=left).rev() {
            cur.push(e);
            rec(dim, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=degree {
        rec(dim, d, &mut Vec::with_capacity(dim), &mut out);
    }
    out
}

/// A real polynomial of total degree at most `degree` with coefficients
/// uniform in `[-1, 1]`.
pub fn polynomial<R: Rng>(rng: &mut R, dim: usize, degree: u32) -> Expr {
    Expr::sum(monomials(dim, degree).into_iter().map(|exps| {
        let c = Expr::real(rng.random_range(-1.0..=1.0));
        exps.iter().enumerate().filter(|(_, &e)| e > 0).fold(c, |acc, (v, &e)| acc * Expr::powi(&Expr::var(v), e))
    }))
}

pub fn vector_field<R: Rng>(rng: &mut R, dim: usize, degree: u32) -> VecField {
    VecField::new((0..dim).map(|_| polynomial(rng, dim, degree)).collect())
}

/// A real `k`-form with polynomial coefficients.
pub fn form<R: Rng>(rng: &mut R, dim: usize, k: usize, degree: u32) -> Form {
    let mut b = FormBuilder::new(dim, k);
    for key in increasing_tuples(dim, k) {
        b.push(key, polynomial(rng, dim, degree));
    }
    b.finish()
}

/// All strictly increasing `k`-tuples from `0..dim`.
pub fn increasing_tuples(dim: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, dim: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(i + 1, dim, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, dim, k, &mut Vec::new(), &mut out);
    out
}
