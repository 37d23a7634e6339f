//! Monte Carlo estimates of moments and cumulants of chaos expansions.
//!
//! With `X_k = X(e_k)` i.i.d. standard normal, a sorted multi-index `α` with
//! coordinate multiplicities `(m_1, …, m_d)` evaluates as
//!
//! ```text
//! I_q(f)(x) = Σ_α f(α) mult(α) Π_k He_{m_k}(x_k)
//! ```
//!
//! where `He` are the monic (probabilists') Hermite polynomials.
//!
//! Samples are split into [`BATCHES`] contiguous batches. Batch `b` draws
//! from its own ChaCha8 stream `b` under the master seed, so runs are
//! reproducible regardless of how many threads evaluate them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chaos::{moments_to_cumulants, ChaosExpansion, MomentSequence};
use crate::symtensor::layout;

pub const BATCHES: usize = 50;
pub const MIN_SAMPLES: usize = 1000;

/// Identifies the sampler so recorded runs can be reproduced.
pub const GENERATOR: &str = "rand_chacha::ChaCha8Rng (stream = batch) + rand_distr::StandardNormal";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("need at least {MIN_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("cumulant order must be at least 2, got {0}")]
    OrderTooSmall(usize),
    #[error("sample has dimension {got}, expansion has {expected}")]
    DimMismatch { expected: usize, got: usize },
}

/// `He_q(x)` via `He_{q+1} = x He_q - q He_{q-1}`.
pub fn hermite(q: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if q == 0 {
        return prev;
    }
    for k in 1..q {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Coordinates of `X` in the basis `e_1, …, e_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSample(pub Vec<f64>);

impl GaussianSample {
    pub fn draw<R: rand::Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        GaussianSample((0..dim).map(|_| StandardNormal.sample(rng)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// A chaos expansion flattened into monomials in Hermite polynomials.
#[derive(Clone, Debug)]
pub struct Evaluator {
    dim: usize,
    constant: f64,
    max_power: usize,
    // (coefficient · mult(α), [(coordinate, power)])
    terms: Vec<(f64, Vec<(usize, usize)>)>,
}

impl Evaluator {
    pub fn new(f: &ChaosExpansion) -> Self {
        let dim = f.dim();
        let mut terms = Vec::new();
        let mut max_power = 0;
        for (q, kernel) in f.kernels() {
            let lay = layout(dim, q);
            for (i, &c) in kernel.coeffs().iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let mut powers: Vec<(usize, usize)> = Vec::new();
                for &a in lay.key(i) {
                    match powers.last_mut() {
                        Some((coord, p)) if *coord == a => *p += 1,
                        _ => powers.push((a, 1)),
                    }
                }
                max_power = max_power.max(powers.iter().map(|p| p.1).max().unwrap_or(0));
                terms.push((c * lay.weight(i), powers));
            }
        }
        Evaluator {
            dim,
            constant: f.constant_term(),
            max_power,
            terms,
        }
    }

    /// Value at `x`, with an extra `shift` subtracted from the constant.
    fn eval_shifted(&self, x: &[f64], shift: f64, table: &mut Vec<f64>) -> f64 {
        let stride = self.max_power + 1;
        table.clear();
        for &xk in x {
            let (mut prev, mut cur) = (1.0, xk);
            table.push(1.0);
            for k in 1..stride {
                table.push(cur);
                let next = xk * cur - k as f64 * prev;
                prev = cur;
                cur = next;
            }
        }
        let mut acc = self.constant - shift;
        for (c, powers) in &self.terms {
            acc += c * powers
                .iter()
                .map(|&(coord, p)| table[coord * stride + p])
                .product::<f64>();
        }
        acc
    }

    pub fn eval(&self, x: &GaussianSample) -> Result<f64, McError> {
        if x.dim() != self.dim {
            return Err(McError::DimMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(self.eval_shifted(&x.0, 0.0, &mut Vec::new()))
    }
}

/// Value of `F` at one Gaussian sample.
pub fn evaluate(f: &ChaosExpansion, x: &GaussianSample) -> Result<f64, McError> {
    Evaluator::new(f).eval(x)
}

/// One cumulant estimate. Serializes as
/// `{"s", "estimate", "stderr", "N", "seed"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub s: usize,
    pub estimate: f64,
    pub stderr: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
}

impl EstimatorResult {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain struct")
    }

    /// `(value - estimate) / stderr`.
    pub fn z_score(&self, value: f64) -> f64 {
        (value - self.estimate) / self.stderr
    }
}

/// Power sums `Σ (F - f_0)^k`, `k = 1..s_max`, for one batch.
fn batch_power_sums(
    ev: &Evaluator,
    shift: f64,
    s_max: usize,
    count: usize,
    seed: u64,
    batch: usize,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    let mut sums = vec![0.0; s_max];
    let mut x = vec![0.0; ev.dim];
    let mut table = Vec::new();
    for _ in 0..count {
        for xk in x.iter_mut() {
            *xk = StandardNormal.sample(&mut rng);
        }
        let v = ev.eval_shifted(&x, shift, &mut table);
        let mut p = 1.0;
        for s in sums.iter_mut() {
            p *= v;
            *s += p;
        }
    }
    sums
}

fn cumulants_from_sums(sums: &[f64], count: usize, shift: f64) -> Vec<f64> {
    let mu = MomentSequence::new(sums.iter().map(|s| s / count as f64).collect());
    let mut k = moments_to_cumulants(&mu).values().to_vec();
    k[0] += shift;
    k
}

/// Sample cumulants `κ_1..κ_{s_max}` of `F` from `n` draws, with
/// batch-means standard errors over [`BATCHES`] batches.
pub fn estimate_cumulants(
    f: &ChaosExpansion,
    s_max: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<EstimatorResult>, McError> {
    if n < MIN_SAMPLES {
        return Err(McError::TooFewSamples(n));
    }
    if s_max < 2 {
        return Err(McError::OrderTooSmall(s_max));
    }
    let ev = Evaluator::new(f);
    // centering on the exact mean keeps the raw power sums well conditioned
    let shift = f.constant_term();
    let sizes: Vec<usize> = (0..BATCHES)
        .map(|b| (b + 1) * n / BATCHES - b * n / BATCHES)
        .collect();
    let batch_sums: Vec<Vec<f64>> = sizes
        .par_iter()
        .enumerate()
        .map(|(b, &count)| batch_power_sums(&ev, shift, s_max, count, seed, b))
        .collect();

    let mut pooled = vec![0.0; s_max];
    for sums in &batch_sums {
        for (p, s) in pooled.iter_mut().zip(sums) {
            *p += s;
        }
    }
    let overall = cumulants_from_sums(&pooled, n, shift);
    let per_batch: Vec<Vec<f64>> = batch_sums
        .iter()
        .zip(&sizes)
        .map(|(sums, &count)| cumulants_from_sums(sums, count, shift))
        .collect();

    let b = BATCHES as f64;
    Ok((0..s_max)
        .map(|k| {
            let mean = per_batch.iter().map(|c| c[k]).sum::<f64>() / b;
            let var = per_batch.iter().map(|c| (c[k] - mean).powi(2)).sum::<f64>() / (b - 1.0);
            EstimatorResult {
                s: k + 1,
                estimate: overall[k],
                stderr: (var / b).sqrt(),
                n,
                seed,
            }
        })
        .collect())
}

/// Sample mean of `F · G` with its batch-means standard error.
pub fn estimate_product_mean(
    f: &ChaosExpansion,
    g: &ChaosExpansion,
    n: usize,
    seed: u64,
) -> Result<(f64, f64), McError> {
    if n < MIN_SAMPLES {
        return Err(McError::TooFewSamples(n));
    }
    if f.dim() != g.dim() {
        return Err(McError::DimMismatch {
            expected: f.dim(),
            got: g.dim(),
        });
    }
    let (ef, eg) = (Evaluator::new(f), Evaluator::new(g));
    let means: Vec<f64> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let count = (b + 1) * n / BATCHES - b * n / BATCHES;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let (mut tf, mut tg) = (Vec::new(), Vec::new());
            let mut x = vec![0.0; ef.dim];
            let mut acc = 0.0;
            for _ in 0..count {
                for xk in x.iter_mut() {
                    *xk = StandardNormal.sample(&mut rng);
                }
                acc += ef.eval_shifted(&x, 0.0, &mut tf) * eg.eval_shifted(&x, 0.0, &mut tg);
            }
            acc / count as f64
        })
        .collect();
    let b = BATCHES as f64;
    let mean = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
    Ok((mean, (var / b).sqrt()))
}
