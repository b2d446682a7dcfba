#![allow(dead_code)]

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nijenhuis::cli::builtin;
use nijenhuis::verify::Structure;
use nijenhuis::Expr;

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.random_range(lo..hi)
    }
}

pub fn structure(name: &str) -> Structure {
    builtin(name).unwrap_or_else(|| panic!("no builtin {name}")).build().unwrap().structure
}

/// A random real expression in `n` variables, smooth on `[-1, 1]^n`.
/// Divisors are kept at least 1 away from zero.
pub fn random_expr(rng: &mut Rng, n: usize, depth: u32) -> Expr {
    if depth == 0 || rng.below(4) == 0 {
        return if rng.below(3) == 0 {
            Expr::real(rng.uniform(-2.0, 2.0))
        } else {
            Expr::var(rng.below(n))
        };
    }
    let a = random_expr(rng, n, depth - 1);
    match rng.below(9) {
        0 => &a + &random_expr(rng, n, depth - 1),
        1 => &a - &random_expr(rng, n, depth - 1),
        2 | 3 => &a * &random_expr(rng, n, depth - 1),
        4 => {
            let b = random_expr(rng, n, depth - 1);
            &a / &(Expr::real(1.0) + &b * &b)
        }
        5 => Expr::powi(&a, rng.below(4) as u32),
        6 => Expr::sin(&a),
        7 => Expr::cos(&a),
        _ => Expr::exp(&Expr::sin(&a)),
    }
}
