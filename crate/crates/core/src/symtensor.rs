//! Symmetric tensors over `H = R^d` with the standard orthonormal basis.
//!
//! A [`SymTensor`] of order `q` stores one coefficient per sorted multi-index
//! `α = (a_1 ≤ … ≤ a_q)`; the value of the full tensor at any permutation of
//! `α` is that coefficient. Storage is dense over the `C(d+q-1, q)` sorted
//! multi-indices, ordered colexicographically so that the position of a key
//! can be computed directly:
//!
//! ```text
//! rank(a_1, …, a_q) = Σ_i C(a_i + i, i + 1)        (0-based a_i and i)
//! ```
//!
//! Sums over all of `{1..d}^q` are evaluated on sorted keys weighted by the
//! number of distinct arrangements, `mult(α) = q! / Π m_k!`.
//!
//! Contractions `f ⊗_r g` are in general not symmetric. They are kept as a
//! [`BlockTensor`] (symmetric inside each block) and folded back into a
//! [`SymTensor`] by [`BlockTensor::symmetrize`], which weights each block
//! split by its interleaving count instead of enumerating permutations.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinatorics::{binomial_usize, multinomial, to_f64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("contraction order {r} out of range for orders {p} and {q}")]
    ContractionOrder { r: usize, p: usize, q: usize },
    #[error("multi-index {0:?} is not sorted")]
    UnsortedIndex(Vec<usize>),
    #[error("multi-index {index:?} has wrong length for order {order}")]
    IndexLength { index: Vec<usize>, order: usize },
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("dimension must be positive")]
    ZeroDim,
    #[error("invalid kernel file: {0}")]
    Format(String),
}

pub type TensorResult<T> = Result<T, TensorError>;

/// The sorted multi-indices of one `(dim, order)` pair, in storage order.
#[derive(Debug)]
pub struct Layout {
    order: usize,
    keys: Vec<usize>,
    weights: Vec<f64>,
}

impl Layout {
    fn build(dim: usize, order: usize) -> Self {
        let len = layout_len(dim, order);
        let mut keys = Vec::with_capacity(len * order);
        let mut weights = Vec::with_capacity(len);
        let mut key = vec![0usize; order];
        let mut counts = vec![0usize; dim];
        for n in 0..len {
            keys.extend_from_slice(&key);
            counts.iter_mut().for_each(|c| *c = 0);
            for &a in &key {
                counts[a] += 1;
            }
            weights.push(to_f64(&multinomial(&counts)));
            if n + 1 < len {
                next_colex(&mut key, dim);
            }
        }
        Layout {
            order,
            keys,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn key(&self, i: usize) -> &[usize] {
        &self.keys[i * self.order..(i + 1) * self.order]
    }

    /// Number of index tuples in `{0..d}^q` that sort to key `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }
}

fn next_colex(key: &mut [usize], dim: usize) {
    let q = key.len();
    for i in 0..q {
        let bump = if i + 1 < q {
            key[i] < key[i + 1]
        } else {
            key[i] + 1 < dim
        };
        if bump {
            key[i] += 1;
            key[..i].iter_mut().for_each(|k| *k = 0);
            return;
        }
    }
    unreachable!("advanced past the last multi-index");
}

/// Storage position of a sorted 0-based multi-index.
pub fn rank(sorted: &[usize]) -> usize {
    sorted
        .iter()
        .enumerate()
        .map(|(i, &a)| binomial_usize(a + i, i + 1))
        .sum()
}

/// `C(d+q-1, q)`.
pub fn layout_len(dim: usize, order: usize) -> usize {
    binomial_usize(dim + order - 1, order)
}

thread_local! {
    static LAYOUTS: RefCell<HashMap<(usize, usize), Rc<Layout>>> = RefCell::new(HashMap::new());
}

pub fn layout(dim: usize, order: usize) -> Rc<Layout> {
    LAYOUTS.with(|cache| {
        cache
            .borrow_mut()
            .entry((dim, order))
            .or_insert_with(|| Rc::new(Layout::build(dim, order)))
            .clone()
    })
}

fn merge_into(a: &[usize], b: &[usize], out: &mut Vec<usize>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// A symmetric kernel `f ∈ H^{⊙q}` over `H = R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor {
    order: usize,
    dim: usize,
    coeffs: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(dim: usize, order: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        SymTensor {
            order,
            dim,
            coeffs: vec![0.0; layout_len(dim, order)],
        }
    }

    /// Order-0 tensor holding `c`.
    pub fn scalar(dim: usize, c: f64) -> Self {
        let mut t = SymTensor::zeros(dim, 0);
        t.coeffs[0] = c;
        t
    }

    /// Basis vector `e_i` (0-based) as an order-1 tensor.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut t = SymTensor::zeros(dim, 1);
        t.coeffs[i] = 1.0;
        t
    }

    pub fn from_vector(v: &[f64]) -> Self {
        SymTensor {
            order: 1,
            dim: v.len(),
            coeffs: v.to_vec(),
        }
    }

    /// Builds a kernel from `(sorted 0-based multi-index, value)` pairs;
    /// unlisted indices are zero and repeated indices accumulate.
    pub fn from_entries<I>(dim: usize, order: usize, entries: I) -> TensorResult<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        if dim == 0 {
            return Err(TensorError::ZeroDim);
        }
        let mut t = SymTensor::zeros(dim, order);
        for (idx, val) in entries {
            t.check_index(&idx)?;
            if idx.windows(2).any(|w| w[0] > w[1]) {
                return Err(TensorError::UnsortedIndex(idx));
            }
            t.coeffs[rank(&idx)] += val;
        }
        Ok(t)
    }

    /// Evaluates `value(idx)` at every sorted multi-index.
    pub fn from_fn(dim: usize, order: usize, mut value: impl FnMut(&[usize]) -> f64) -> Self {
        let lay = layout(dim, order);
        let coeffs = (0..lay.len()).map(|i| value(lay.key(i))).collect();
        SymTensor { order, dim, coeffs }
    }

    /// Symmetric matrix (upper triangle read) as an order-2 kernel.
    pub fn from_matrix(a: &[Vec<f64>]) -> Self {
        let d = a.len();
        SymTensor::from_fn(d, 2, |k| a[k[0]][k[1]])
    }

    /// i.i.d. uniform entries on `[-1, 1]` at each sorted multi-index.
    pub fn random<R: Rng + ?Sized>(dim: usize, order: usize, rng: &mut R) -> Self {
        let len = layout_len(dim, order);
        SymTensor {
            order,
            dim,
            coeffs: (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        }
    }

    fn check_index(&self, idx: &[usize]) -> TensorResult<()> {
        if idx.len() != self.order {
            return Err(TensorError::IndexLength {
                index: idx.to_vec(),
                order: self.order,
            });
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.dim) {
            return Err(TensorError::IndexOutOfRange {
                index: bad,
                dim: self.dim,
            });
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficients in storage (colex) order.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Value of the full tensor at an arbitrary 0-based index tuple.
    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.order);
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        self.coeffs[rank(&sorted)]
    }

    /// Sets the value at every permutation of `idx`.
    pub fn set(&mut self, idx: &[usize], val: f64) {
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        let r = rank(&sorted);
        self.coeffs[r] = val;
    }

    /// `(sorted multi-index, value)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let lay = layout(self.dim, self.order);
        (0..self.coeffs.len()).map(move |i| (lay.key(i).to_vec(), self.coeffs[i]))
    }

    fn check_same_shape(&self, other: &SymTensor) -> TensorResult<()> {
        if self.dim != other.dim {
            return Err(TensorError::DimMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        if self.order != other.order {
            return Err(TensorError::OrderMismatch {
                left: self.order,
                right: other.order,
            });
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        inner_product_unchecked(self, self).sqrt()
    }

    pub fn scale(&self, c: f64) -> SymTensor {
        SymTensor {
            order: self.order,
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add(&self, other: &SymTensor) -> TensorResult<SymTensor> {
        self.check_same_shape(other)?;
        Ok(SymTensor {
            order: self.order,
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &SymTensor) -> TensorResult<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
        Ok(())
    }

    /// Largest absolute coefficient difference.
    pub fn max_abs_diff(&self, other: &SymTensor) -> TensorResult<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn to_block(&self) -> BlockTensor {
        BlockTensor {
            dim: self.dim,
            block_orders: vec![self.order],
            coeffs: self.coeffs.clone(),
        }
    }
}

impl fmt::Display for SymTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymTensor(q={}, d={})[", self.order, self.dim)?;
        let mut first = true;
        for (key, val) in self.iter().filter(|(_, v)| *v != 0.0) {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            let one_based: Vec<usize> = key.iter().map(|k| k + 1).collect();
            write!(f, "{one_based:?}: {val}")?;
        }
        write!(f, "]")
    }
}

fn inner_product_unchecked(f: &SymTensor, g: &SymTensor) -> f64 {
    let lay = layout(f.dim, f.order);
    f.coeffs
        .iter()
        .zip(&g.coeffs)
        .enumerate()
        .map(|(i, (a, b))| lay.weight(i) * a * b)
        .sum()
}

/// `⟨f, g⟩` in `H^{⊗q}`: the sum of `f(i) g(i)` over all of `{1..d}^q`.
pub fn inner_product(f: &SymTensor, g: &SymTensor) -> TensorResult<f64> {
    f.check_same_shape(g)?;
    Ok(inner_product_unchecked(f, g))
}

/// A tensor that is symmetric inside each of its blocks but not across
/// them. Coefficients are row-major over the per-block layouts.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTensor {
    dim: usize,
    block_orders: Vec<usize>,
    coeffs: Vec<f64>,
}

impl BlockTensor {
    pub fn zeros(dim: usize, block_orders: Vec<usize>) -> Self {
        let len = block_orders.iter().map(|&o| layout_len(dim, o)).product();
        BlockTensor {
            dim,
            block_orders,
            coeffs: vec![0.0; len],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_orders(&self) -> &[usize] {
        &self.block_orders
    }

    pub fn order(&self) -> usize {
        self.block_orders.iter().sum()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn layouts(&self) -> Vec<Rc<Layout>> {
        self.block_orders
            .iter()
            .map(|&o| layout(self.dim, o))
            .collect()
    }

    /// Visits every block-key tuple with its flat position.
    fn for_each_key(&self, mut visit: impl FnMut(usize, &[&[usize]], f64)) {
        let lays = self.layouts();
        let lens: Vec<usize> = lays.iter().map(|l| l.len()).collect();
        let mut pos = vec![0usize; lens.len()];
        for flat in 0..self.coeffs.len() {
            let keys: Vec<&[usize]> = lays.iter().zip(&pos).map(|(l, &p)| l.key(p)).collect();
            let w: f64 = lays.iter().zip(&pos).map(|(l, &p)| l.weight(p)).product();
            visit(flat, &keys, w);
            for b in (0..pos.len()).rev() {
                pos[b] += 1;
                if pos[b] < lens[b] {
                    break;
                }
                pos[b] = 0;
            }
        }
    }

    /// Value at an arbitrary index tuple; indices are split into blocks in
    /// order and sorted within each block.
    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.order());
        let mut flat = 0usize;
        let mut start = 0;
        for &o in &self.block_orders {
            let mut part = idx[start..start + o].to_vec();
            part.sort_unstable();
            flat = flat * layout_len(self.dim, o) + rank(&part);
            start += o;
        }
        self.coeffs[flat]
    }

    /// Euclidean norm of the full, unsymmetrized tensor.
    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        self.for_each_key(|flat, _, w| acc += w * self.coeffs[flat] * self.coeffs[flat]);
        acc.sqrt()
    }

    /// `⟨self, h⟩` for a symmetric `h` of the same total order.
    pub fn inner_product_sym(&self, h: &SymTensor) -> TensorResult<f64> {
        if self.dim != h.dim {
            return Err(TensorError::DimMismatch {
                left: self.dim,
                right: h.dim,
            });
        }
        if self.order() != h.order {
            return Err(TensorError::OrderMismatch {
                left: self.order(),
                right: h.order,
            });
        }
        let mut acc = 0.0;
        let mut merged = Vec::with_capacity(h.order);
        self.for_each_key(|flat, keys, w| {
            merged.clear();
            keys.iter().for_each(|k| merged.extend_from_slice(k));
            merged.sort_unstable();
            acc += w * self.coeffs[flat] * h.coeffs[rank(&merged)];
        });
        Ok(acc)
    }

    /// Average over all permutations of the full index set.
    ///
    /// For a target multiset `β`, every block split `(α_1, …, α_m)` of `β`
    /// accounts for `Π mult(α_j)` of the `mult(β)` arrangements of `β`.
    pub fn symmetrize(&self) -> SymTensor {
        let order = self.order();
        let mut out = SymTensor::zeros(self.dim, order);
        let mut merged = Vec::with_capacity(order);
        self.for_each_key(|flat, keys, w| {
            let c = self.coeffs[flat];
            if c == 0.0 {
                return;
            }
            merged.clear();
            keys.iter().for_each(|k| merged.extend_from_slice(k));
            merged.sort_unstable();
            out.coeffs[rank(&merged)] += w * c;
        });
        let lay = layout(self.dim, order);
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c /= lay.weight(i);
        }
        out
    }
}

/// `f ⊗_r g`: identifies `r` slots of `f` with `r` slots of `g` and sums over
/// them. The result has blocks of orders `p - r` and `q - r`.
pub fn contract(f: &SymTensor, g: &SymTensor, r: usize) -> TensorResult<BlockTensor> {
    if f.dim != g.dim {
        return Err(TensorError::DimMismatch {
            left: f.dim,
            right: g.dim,
        });
    }
    let (p, q) = (f.order, g.order);
    if r > p.min(q) {
        return Err(TensorError::ContractionOrder { r, p, q });
    }
    let d = f.dim;
    let la = layout(d, p - r);
    let lb = layout(d, q - r);
    let lk = layout(d, r);

    // Slices of f and g with r slots fixed: mf[a][k] = f(a ∪ k).
    let slice = |t: &SymTensor, outer: &Layout| -> Vec<f64> {
        let mut buf = Vec::with_capacity(t.order);
        let mut m = Vec::with_capacity(outer.len() * lk.len());
        for a in 0..outer.len() {
            for k in 0..lk.len() {
                merge_into(outer.key(a), lk.key(k), &mut buf);
                m.push(t.coeffs[rank(&buf)]);
            }
        }
        m
    };
    let mf = slice(f, &la);
    let mg = slice(g, &lb);
    let nk = lk.len();
    let wk: Vec<f64> = (0..nk).map(|k| lk.weight(k)).collect();

    let mut coeffs = Vec::with_capacity(la.len() * lb.len());
    let mut row = vec![0.0; nk];
    for a in 0..la.len() {
        let fa = &mf[a * nk..(a + 1) * nk];
        for (x, (fv, w)) in row.iter_mut().zip(fa.iter().zip(&wk)) {
            *x = fv * w;
        }
        for b in 0..lb.len() {
            let gb = &mg[b * nk..(b + 1) * nk];
            coeffs.push(row.iter().zip(gb).map(|(x, y)| x * y).sum());
        }
    }
    Ok(BlockTensor {
        dim: d,
        block_orders: vec![p - r, q - r],
        coeffs,
    })
}

/// `f ⊗̃_r g`.
pub fn sym_contract(f: &SymTensor, g: &SymTensor, r: usize) -> TensorResult<SymTensor> {
    Ok(contract(f, g, r)?.symmetrize())
}

/// On-disk kernel format: sorted 1-based indices, unlisted entries zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelFile {
    pub q: usize,
    pub dim: usize,
    pub entries: Vec<KernelEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelEntry {
    pub idx: Vec<usize>,
    pub val: f64,
}

impl KernelFile {
    pub fn into_tensor(self) -> TensorResult<SymTensor> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in self.entries {
            if e.idx.contains(&0) {
                return Err(TensorError::Format(format!(
                    "indices are 1-based, got {:?}",
                    e.idx
                )));
            }
            entries.push((e.idx.iter().map(|i| i - 1).collect::<Vec<_>>(), e.val));
        }
        SymTensor::from_entries(self.dim, self.q, entries).map_err(|err| match err {
            // report indices back in the file's 1-based convention
            TensorError::UnsortedIndex(idx) => {
                TensorError::UnsortedIndex(idx.into_iter().map(|i| i + 1).collect())
            }
            TensorError::IndexOutOfRange { index, dim } => TensorError::IndexOutOfRange {
                index: index + 1,
                dim,
            },
            other => other,
        })
    }

    /// Non-zero entries only.
    pub fn from_tensor(t: &SymTensor) -> Self {
        KernelFile {
            q: t.order(),
            dim: t.dim(),
            entries: t
                .iter()
                .filter(|(_, v)| *v != 0.0)
                .map(|(k, v)| KernelEntry {
                    idx: k.iter().map(|i| i + 1).collect(),
                    val: v,
                })
                .collect(),
        }
    }
}

pub fn parse_kernel(json: &str) -> TensorResult<SymTensor> {
    let file: KernelFile =
        serde_json::from_str(json).map_err(|e| TensorError::Format(e.to_string()))?;
    file.into_tensor()
}
