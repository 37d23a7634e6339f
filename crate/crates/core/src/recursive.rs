//! Cumulants of a single chaos `F = I_q(f)` from iterated symmetric
//! contractions:
//!
//! ```text
//! κ_s(F) = q! (s-1)! Σ_r c_q(r_1,…,r_{s-2}) ⟨(…((f ⊗̃_{r_1} f) ⊗̃_{r_2} f)…) ⊗̃_{r_{s-2}} f, f⟩
//! ```
//!
//! The sum runs over the admissible r-vectors described on [`RVector`]. The
//! constants `c_q` are exact integers; the intermediate contraction of every
//! r-vector prefix is computed once and shared by all of its extensions.

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

use crate::chaos::ChaosExpansion;
use crate::combinatorics::{binomial, binomial_f64, factorial, factorial_f64, to_f64};
use crate::symtensor::{contract, inner_product, sym_contract, SymTensor, TensorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecursiveError {
    #[error("kernel order {0} is below 2")]
    OrderTooSmall(usize),
    #[error("contraction index {r} at position {pos} is outside 1..={q}")]
    IndexOutOfRange { r: usize, pos: usize, q: usize },
    #[error("inadmissible prefix: binomial upper argument {upper} is negative at position {pos}")]
    NegativeBinomial { upper: i64, pos: usize },
    #[error("empty r-vector")]
    Empty,
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type RecursiveResult<T> = Result<T, RecursiveError>;

/// A tuple `(r_1, …, r_{s-2})` with
///
/// - (i) `1 ≤ r_i ≤ q`;
/// - (ii) `Σ r_i = (s-2) q / 2`;
/// - (iii) `r_1 + … + r_k < (k+1) q / 2` for `k = 1..s-3`;
/// - (iv) `r_k ≤ k q - 2 (r_1 + … + r_{k-1})` for `k = 2..s-2`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RVector {
    pub q: usize,
    pub s: usize,
    pub rs: Vec<usize>,
}

/// An exact constant `c_q(r_1, …, r_a)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CqConstant {
    pub rs: Vec<usize>,
    pub value: BigUint,
}

impl RVector {
    pub fn constant(&self) -> RecursiveResult<CqConstant> {
        Ok(CqConstant {
            rs: self.rs.clone(),
            value: cq(self.q, &self.rs)?,
        })
    }
}

/// Checks (i)–(iv) literally, without any of the pruning shortcuts used by
/// [`enumerate_rvectors`].
pub fn is_admissible(q: usize, s: usize, rs: &[usize]) -> bool {
    if s < 3 || rs.len() != s - 2 {
        return false;
    }
    if rs.iter().any(|&r| r < 1 || r > q) {
        return false;
    }
    let total: usize = rs.iter().sum();
    if 2 * total != (s - 2) * q {
        return false;
    }
    if rs[0] >= q {
        return false;
    }
    let mut partial = 0usize;
    for k in 1..=s - 3 {
        partial += rs[k - 1];
        if 2 * partial >= (k + 1) * q {
            return false;
        }
    }
    let mut before = rs[0];
    for k in 2..=s - 2 {
        if (rs[k - 1] + 2 * before) > k * q {
            return false;
        }
        before += rs[k - 1];
    }
    true
}

/// All admissible r-vectors for `(q, s)` in lexicographic order.
pub fn enumerate_rvectors(q: usize, s: usize) -> Vec<RVector> {
    assert!(q >= 2 && s >= 3, "need q ≥ 2 and s ≥ 3");
    let mut out = Vec::new();
    if (s * q) % 2 == 1 {
        return out;
    }
    let mut prefix = Vec::with_capacity(s - 2);
    walk_rvectors(q, s, &mut prefix, 0, &mut |rs| {
        out.push(RVector {
            q,
            s,
            rs: rs.to_vec(),
        })
    });
    out
}

/// Depth-first over admissible prefixes; `visit` sees each complete tuple.
fn walk_rvectors(
    q: usize,
    s: usize,
    prefix: &mut Vec<usize>,
    sum: usize,
    visit: &mut dyn FnMut(&[usize]),
) {
    let len = s - 2;
    let target = len * q / 2;
    let k = prefix.len() + 1;
    if k > len {
        if sum == target {
            visit(prefix);
        }
        return;
    }
    // order of the running contraction before step k
    let running = k * q - 2 * sum;
    let remaining_after = len - k;
    for r in 1..=q.min(running) {
        let new_sum = sum + r;
        if new_sum > target {
            break;
        }
        if k <= len.saturating_sub(1) && 2 * new_sum >= (k + 1) * q {
            break;
        }
        let left = target - new_sum;
        if left < remaining_after || left > remaining_after * q {
            continue;
        }
        prefix.push(r);
        walk_rvectors(q, s, prefix, new_sum, visit);
        prefix.pop();
    }
}

/// `c_q(r_1, …, r_a)`, built from `c_q(r) = q (r-1)! C(q-1, r-1)²` and
///
/// ```text
/// c_q(r_1,…,r_a) = q (r_a-1)! C(aq - 2r_1 - … - 2r_{a-1} - 1, r_a-1) C(q-1, r_a-1) c_q(r_1,…,r_{a-1})
/// ```
pub fn cq(q: usize, rs: &[usize]) -> RecursiveResult<BigUint> {
    if rs.is_empty() {
        return Err(RecursiveError::Empty);
    }
    let mut acc = BigUint::one();
    let mut sum = 0i64;
    for (i, &r) in rs.iter().enumerate() {
        if r < 1 || r > q {
            return Err(RecursiveError::IndexOutOfRange { r, pos: i + 1, q });
        }
        acc *= cq_step(q, i + 1, sum, r)?;
        sum += r as i64;
    }
    Ok(acc)
}

/// Factor contributed by position `a` when the previous entries sum to `sum`.
fn cq_step(q: usize, a: usize, sum: i64, r: usize) -> RecursiveResult<BigUint> {
    let upper = (a * q) as i64 - 2 * sum - 1;
    if upper < 0 {
        return Err(RecursiveError::NegativeBinomial { upper, pos: a });
    }
    Ok(BigUint::from(q)
        * factorial(r - 1)
        * binomial(upper as usize, r - 1)
        * binomial(q - 1, r - 1))
}

/// A source of `c_q` values. [`cq`] is the production one; tests swap in
/// corrupted tables to check that cross-validation notices.
pub type CqFn<'a> = &'a dyn Fn(usize, &[usize]) -> RecursiveResult<BigUint>;

fn check_kernel(f: &SymTensor) -> RecursiveResult<usize> {
    let q = f.order();
    if q < 2 {
        return Err(RecursiveError::OrderTooSmall(q));
    }
    Ok(q)
}

/// `κ_s(I_q(f))` by the contraction formula.
pub fn kappa_recursive(f: &SymTensor, s: usize) -> RecursiveResult<f64> {
    kappa_recursive_with(f, s, &cq)
}

pub fn kappa_recursive_with(f: &SymTensor, s: usize, cq_fn: CqFn<'_>) -> RecursiveResult<f64> {
    let q = check_kernel(f)?;
    match s {
        0 => panic!("cumulant order starts at 1"),
        1 => return Ok(0.0),
        2 => return Ok(factorial_f64(q) * inner_product(f, f)?),
        _ => {}
    }
    if (s * q) % 2 == 1 {
        return Ok(0.0);
    }
    let mut terms = Vec::new();
    let mut prefix = Vec::with_capacity(s - 2);
    contraction_walk(f, s, &mut prefix, 0, f.clone(), &mut |rs, chain| {
        let c = to_f64(&cq_fn(q, rs)?);
        terms.push(c * inner_product(chain, f)?);
        Ok(())
    })?;
    // fixed summation order: lexicographic in the r-vector
    let sum: f64 = terms.iter().sum();
    Ok(factorial_f64(q) * factorial_f64(s - 1) * sum)
}

/// Walks the admissible r-vectors of `(q, s)` while carrying the running
/// left-nested contraction `(…(f ⊗̃_{r_1} f)…) ⊗̃_{r_k} f`.
fn contraction_walk(
    f: &SymTensor,
    s: usize,
    prefix: &mut Vec<usize>,
    sum: usize,
    chain: SymTensor,
    visit: &mut dyn FnMut(&[usize], &SymTensor) -> RecursiveResult<()>,
) -> RecursiveResult<()> {
    let q = f.order();
    let len = s - 2;
    let target = len * q / 2;
    let k = prefix.len() + 1;
    if k > len {
        if sum == target {
            visit(prefix, &chain)?;
        }
        return Ok(());
    }
    let running = chain.order();
    let remaining_after = len - k;
    for r in 1..=q.min(running) {
        let new_sum = sum + r;
        if new_sum > target {
            break;
        }
        if k < len && 2 * new_sum >= (k + 1) * q {
            break;
        }
        let left = target - new_sum;
        if left < remaining_after || left > remaining_after * q {
            continue;
        }
        let next = sym_contract(&chain, f, r)?;
        prefix.push(r);
        contraction_walk(f, s, prefix, new_sum, next, visit)?;
        prefix.pop();
    }
    Ok(())
}

/// Explicit chaos expansion of `Γ_{s-1}(I_q(f))`:
///
/// ```text
/// Σ c_q(r_1,…,r_{s-1}) 1{r_1 < q} … 1{r_1+…+r_{s-2} < (s-1)q/2} I_{sq-2Σr}((…(f ⊗̃_{r_1} f)…) ⊗̃_{r_{s-1}} f)
/// ```
///
/// with `r_k ≤ min(q, kq - 2(r_1+…+r_{k-1}))`.
pub fn gamma_expansion_chaos(f: &SymTensor, s: usize) -> RecursiveResult<ChaosExpansion> {
    check_kernel(f)?;
    assert!(s >= 2, "Γ_{{s-1}} needs s ≥ 2");
    let mut out = ChaosExpansion::zero(f.dim());
    let mut terms: Vec<SymTensor> = Vec::new();
    gamma_walk(
        f,
        s - 1,
        1,
        0,
        BigUint::one(),
        f.clone(),
        &mut |c, chain| {
            terms.push(chain.scale(to_f64(c)));
        },
    )?;
    for t in terms {
        out = out
            .add(&ChaosExpansion::integral(t))
            .expect("dimensions agree");
    }
    Ok(out)
}

fn gamma_walk(
    f: &SymTensor,
    steps: usize,
    step: usize,
    sum: usize,
    c: BigUint,
    chain: SymTensor,
    visit: &mut dyn FnMut(&BigUint, &SymTensor),
) -> RecursiveResult<()> {
    if step > steps {
        visit(&c, &chain);
        return Ok(());
    }
    let q = f.order();
    // an intermediate of order 0 is a constant and has no derivative, so the
    // range below is empty for it
    for r in 1..=q.min(chain.order()) {
        let factor = cq_step(q, step, sum as i64, r)?;
        let next = sym_contract(&chain, f, r)?;
        gamma_walk(f, steps, step + 1, sum + r, &c * factor, next, visit)?;
    }
    Ok(())
}

/// `κ_4` as `(3/q) Σ_{r=1}^{q-1} r r!² C(q,r)⁴ (2q-2r)! ‖f ⊗̃_r f‖²`.
pub fn kappa4_contraction_form(f: &SymTensor) -> RecursiveResult<f64> {
    let q = check_kernel(f)?;
    let mut acc = 0.0;
    for r in 1..q {
        let c = to_f64(
            &(BigUint::from(r)
                * factorial(r).pow(2)
                * binomial(q, r).pow(4)
                * factorial(2 * q - 2 * r)),
        );
        acc += c * sym_contract(f, f, r)?.norm().powi(2);
    }
    Ok(3.0 / q as f64 * acc)
}

/// `κ_4` as `Σ_{r=1}^{q-1} q!⁴ / (r!² (q-r)!²) [‖f ⊗_r f‖² + C(2q-2r, q-r) ‖f ⊗̃_r f‖²]`.
pub fn kappa4_nunugio_form(f: &SymTensor) -> RecursiveResult<f64> {
    let q = check_kernel(f)?;
    let mut acc = 0.0;
    for r in 1..q {
        let c = to_f64(&(factorial(q).pow(4) / (factorial(r).pow(2) * factorial(q - r).pow(2))));
        let plain = contract(f, f, r)?.norm().powi(2);
        let sym = sym_contract(f, f, r)?.norm().powi(2);
        acc += c * (plain + binomial_f64(2 * q - 2 * r, q - r) * sym);
    }
    Ok(acc)
}
