#![allow(dead_code)]

use chaoscum::{ChaosExpansion, SymTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12 / tol)
}

#[track_caller]
pub fn assert_rel(a: f64, b: f64, tol: f64) {
    assert!(
        (a - b).abs() <= tol * a.abs().max(b.abs()) || (a - b).abs() <= 1e-12,
        "{a} vs {b} (tol {tol})"
    );
}

/// Every tuple in `{0..d}^n`, row-major.
pub fn all_tuples(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..d).map(move |i| {
                    let mut t = t.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

/// Random expansion with kernels in orders `1..=max_q` and a random constant.
pub fn random_expansion<R: Rng>(rng: &mut R, dim: usize, max_q: usize) -> ChaosExpansion {
    let constant = rng.random_range(-1.0..1.0);
    let kernels: Vec<SymTensor> = (1..=max_q)
        .map(|q| SymTensor::random(dim, q, rng).scale(0.5))
        .collect();
    ChaosExpansion::from_parts(dim, constant, kernels).unwrap()
}

/// Kernel normalized so that `q! ‖f‖² = 1`.
pub fn unit_variance_kernel<R: Rng>(rng: &mut R, dim: usize, q: usize) -> SymTensor {
    let f = SymTensor::random(dim, q, rng);
    let qf: f64 = (1..=q).map(|k| k as f64).product();
    let n = (qf * f.norm().powi(2)).sqrt();
    f.scale(1.0 / n)
}

/// `E[X^n]` for a standard normal.
pub fn gaussian_moment(n: usize) -> f64 {
    if n % 2 == 1 {
        0.0
    } else {
        (1..n).step_by(2).map(|k| k as f64).product()
    }
}

/// `E[(X² - 1)^m]` by binomial expansion against Gaussian moments.
pub fn centered_chi_square_moment(m: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..=m {
        let binom: f64 = (0..j).map(|i| (m - i) as f64 / (i + 1) as f64).product();
        let sign = if (m - j).is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += binom * sign * gaussian_moment(2 * j);
    }
    acc
}

/// All permutations of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}
