//! Diagram route: connected loopless q-regular multigraphs on labeled
//! vertices, their leg-matching weights, and graph contractions of `f`.
//!
//! Each vertex `j ∈ [s]` carries `q` legs. A leg matching pairs all `sq`
//! legs with no pair inside one vertex; its projection to vertex pairs is a
//! multigraph. For a multigraph `γ` with edge multiplicities `k_e`, the
//! number of leg matchings projecting onto it is
//!
//! ```text
//! w(γ) = (q!)^s / Π_e k_e!
//! ```
//!
//! (distribute each vertex's legs over its edges, then match the legs of
//! every edge). Summing `w(γ) · ∫ f_γ` over connected `γ` gives `κ_s(I_q(f))`;
//! summing over all matchings, connected or not, gives `E[I_q(f)^s]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;
use thiserror::Error;

use crate::combinatorics::{factorial, to_f64};
use crate::symtensor::SymTensor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagramError {
    #[error("kernel order {kernel} does not match graph degree {degree}")]
    OrderMismatch { kernel: usize, degree: usize },
    #[error("graph has {edges} edges, above the cap of {cap}")]
    TooManyEdges { edges: usize, cap: usize },
}

pub type DiagramResult<T> = Result<T, DiagramError>;

/// A loopless multigraph on vertices `0..s` (displayed 1-based).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multigraph {
    s: usize,
    q: usize,
    edges: BTreeMap<(usize, usize), usize>,
}

impl Multigraph {
    /// Builds a graph from `(i, j, multiplicity)` triples with 0-based
    /// vertices. The degree `q` is taken from vertex 0; see
    /// [`Multigraph::is_regular`].
    pub fn from_edges(s: usize, edges: &[(usize, usize, usize)]) -> Self {
        let mut map = BTreeMap::new();
        for &(i, j, k) in edges {
            assert!(i != j, "loops are not allowed");
            assert!(i < s && j < s, "vertex out of range");
            if k > 0 {
                *map.entry((i.min(j), i.max(j))).or_insert(0) += k;
            }
        }
        let mut g = Multigraph {
            s,
            q: 0,
            edges: map,
        };
        g.q = g.degree(0);
        g
    }

    pub fn vertices(&self) -> usize {
        self.s
    }

    pub fn degree_target(&self) -> usize {
        self.q
    }

    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), usize)> + '_ {
        self.edges.iter().map(|(&e, &k)| (e, k))
    }

    pub fn multiplicity(&self, i: usize, j: usize) -> usize {
        self.edges.get(&(i.min(j), i.max(j))).copied().unwrap_or(0)
    }

    /// Edge count with multiplicity.
    pub fn edge_count(&self) -> usize {
        self.edges.values().sum()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|((i, j), _)| *i == v || *j == v)
            .map(|(_, &k)| k)
            .sum()
    }

    pub fn is_regular(&self) -> bool {
        (0..self.s).all(|v| self.degree(v) == self.q)
    }

    pub fn is_connected(&self) -> bool {
        if self.s == 0 {
            return true;
        }
        let mut uf = UnionFind::new(self.s);
        for &(i, j) in self.edges.keys() {
            uf.union(i, j);
        }
        let root = uf.find(0);
        (1..self.s).all(|v| uf.find(v) == root)
    }

    /// Number of leg matchings projecting onto this graph.
    pub fn weight(&self) -> BigUint {
        let mut denom = BigUint::one();
        for &k in self.edges.values() {
            denom *= factorial(k);
        }
        factorial(self.q).pow(self.s as u32) / denom
    }
}

impl fmt::Display for Multigraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (&(i, j), &k) in &self.edges {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{}-{}:{}", i + 1, j + 1, k)?;
        }
        Ok(())
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// `K(s, q)`: connected loopless multigraphs on `[s]` with every degree `q`,
/// sorted by edge list.
pub fn enumerate_k(s: usize, q: usize) -> Vec<Multigraph> {
    let mut out = enumerate_regular(s, q);
    out.retain(|g| g.is_connected());
    out
}

/// All loopless q-regular multigraphs on `[s]`, connected or not.
pub fn enumerate_regular(s: usize, q: usize) -> Vec<Multigraph> {
    let mut out = Vec::new();
    if s < 2 || (s * q) % 2 == 1 {
        return out;
    }
    let pairs: Vec<(usize, usize)> = (0..s)
        .flat_map(|i| (i + 1..s).map(move |j| (i, j)))
        .collect();
    let mut rem = vec![q; s];
    let mut mult = vec![0usize; pairs.len()];
    fill_pairs(&pairs, 0, &mut rem, &mut mult, &mut |mult| {
        let edges = pairs
            .iter()
            .zip(mult)
            .filter(|(_, &k)| k > 0)
            .map(|(&e, &k)| (e, k))
            .collect();
        out.push(Multigraph { s, q, edges });
    });
    out.sort_by_key(edge_list);
    out
}

fn edge_list(g: &Multigraph) -> Vec<(usize, usize, usize)> {
    g.edges.iter().map(|(&(i, j), &k)| (i, j, k)).collect()
}

/// Assigns multiplicities to `pairs[idx..]` in lexicographic pair order.
fn fill_pairs(
    pairs: &[(usize, usize)],
    idx: usize,
    rem: &mut [usize],
    mult: &mut [usize],
    emit: &mut dyn FnMut(&[usize]),
) {
    if idx == pairs.len() {
        if rem.iter().all(|&r| r == 0) {
            emit(mult);
        }
        return;
    }
    let (i, j) = pairs[idx];
    // starting a new row: the previous vertex has no pairs left
    if j == i + 1 && i > 0 && rem[i - 1] != 0 {
        return;
    }
    let s = rem.len();
    let capacity: usize = rem[j..s].iter().sum();
    if rem[i] > capacity {
        return;
    }
    let last_in_row = j == s - 1;
    let hi = rem[i].min(rem[j]);
    let lo = if last_in_row { rem[i] } else { 0 };
    if lo > hi {
        return;
    }
    for k in lo..=hi {
        rem[i] -= k;
        rem[j] -= k;
        mult[idx] = k;
        fill_pairs(pairs, idx + 1, rem, mult, emit);
        rem[i] += k;
        rem[j] += k;
    }
    mult[idx] = 0;
}

/// A perfect matching of the legs `(vertex, slot)`, stored as pairs of leg
/// ids `vertex * q + slot` with the smaller id first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LegMatching {
    s: usize,
    q: usize,
    pairs: Vec<(usize, usize)>,
}

impl LegMatching {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn projection(&self) -> Multigraph {
        project(self.s, self.q, &self.pairs)
    }
}

fn project(s: usize, q: usize, pairs: &[(usize, usize)]) -> Multigraph {
    let mut edges = BTreeMap::new();
    for &(a, b) in pairs {
        let (i, j) = (a / q, b / q);
        *edges.entry((i.min(j), i.max(j))).or_insert(0) += 1;
    }
    Multigraph { s, q, edges }
}

/// Callback receiving a leg matching as `(leg, leg)` pairs.
pub type MatchingVisitor<'a> = dyn FnMut(&[(usize, usize)]) + 'a;

/// Calls `visit` with every loopless perfect matching of the `sq` legs.
pub fn for_each_leg_matching(s: usize, q: usize, visit: &mut MatchingVisitor<'_>) {
    let n = s * q;
    if n % 2 == 1 {
        return;
    }
    let mut used = vec![false; n];
    let mut pairs = Vec::with_capacity(n / 2);
    match_legs(q, &mut used, &mut pairs, visit);
}

fn match_legs(
    q: usize,
    used: &mut [bool],
    pairs: &mut Vec<(usize, usize)>,
    visit: &mut MatchingVisitor<'_>,
) {
    let Some(a) = used.iter().position(|&u| !u) else {
        visit(pairs);
        return;
    };
    used[a] = true;
    // legs of the same vertex are contiguous; start past them
    for b in (a / q + 1) * q..used.len() {
        if used[b] {
            continue;
        }
        used[b] = true;
        pairs.push((a, b));
        match_legs(q, used, pairs, visit);
        pairs.pop();
        used[b] = false;
    }
    used[a] = false;
}

pub fn enumerate_leg_matchings(s: usize, q: usize) -> Vec<LegMatching> {
    let mut out = Vec::new();
    for_each_leg_matching(s, q, &mut |pairs| {
        out.push(LegMatching {
            s,
            q,
            pairs: pairs.to_vec(),
        })
    });
    out
}

/// Number of leg matchings per projected multigraph.
pub fn matching_projection_counts(s: usize, q: usize) -> BTreeMap<Multigraph, u64> {
    let mut counts = BTreeMap::new();
    for_each_leg_matching(s, q, &mut |pairs| {
        *counts.entry(project(s, q, pairs)).or_insert(0) += 1;
    });
    counts
}

/// Counts leg matchings projecting onto `g` by enumeration.
pub fn weight_brute_force(g: &Multigraph) -> u64 {
    let mut count = 0;
    for_each_leg_matching(g.s, g.q, &mut |pairs| {
        if project(g.s, g.q, pairs) == *g {
            count += 1;
        }
    });
    count
}

/// Dense factor over a list of edge-slot variables, row-major in `vars`.
struct Factor {
    vars: Vec<usize>,
    data: Vec<f64>,
}

/// `∫ f_γ`: the sum over all index assignments to the `sq/2` edge slots of
/// the product of one copy of `f` per vertex.
///
/// Slots are eliminated one at a time, always picking the slot whose
/// elimination leaves the smallest intermediate factor.
pub fn graph_contraction(f: &SymTensor, g: &Multigraph) -> DiagramResult<f64> {
    if f.order() != g.q {
        return Err(DiagramError::OrderMismatch {
            kernel: f.order(),
            degree: g.q,
        });
    }
    let d = f.dim();
    let q = g.q;

    // slot variables per vertex
    let mut incident: Vec<Vec<usize>> = vec![Vec::with_capacity(q); g.s];
    let mut nvars = 0;
    for (&(i, j), &k) in &g.edges {
        for _ in 0..k {
            incident[i].push(nvars);
            incident[j].push(nvars);
            nvars += 1;
        }
    }

    let full = dense_kernel(f);
    let mut factors: Vec<Factor> = incident
        .into_iter()
        .map(|vars| Factor {
            vars,
            data: full.clone(),
        })
        .collect();

    let mut remaining: BTreeSet<usize> = (0..nvars).collect();
    while !remaining.is_empty() {
        let var = *remaining
            .iter()
            .min_by_key(|&&v| (merged_vars(&factors, v).len(), v))
            .expect("non-empty");
        remaining.remove(&var);
        let (with, without): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|fac| fac.vars.contains(&var));
        factors = without;
        factors.push(eliminate(&with, var, d));
    }
    Ok(factors.iter().map(|fac| fac.data[0]).product())
}

/// `f` over all of `{0..d}^q`, row-major.
fn dense_kernel(f: &SymTensor) -> Vec<f64> {
    let (d, q) = (f.dim(), f.order());
    let len = d.pow(q as u32);
    let mut idx = vec![0usize; q];
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(f.get(&idx));
        for p in (0..q).rev() {
            idx[p] += 1;
            if idx[p] < d {
                break;
            }
            idx[p] = 0;
        }
    }
    out
}

fn merged_vars(factors: &[Factor], var: usize) -> Vec<usize> {
    let mut vars: Vec<usize> = factors
        .iter()
        .filter(|fac| fac.vars.contains(&var))
        .flat_map(|fac| fac.vars.iter().copied())
        .filter(|&v| v != var)
        .collect();
    vars.sort_unstable();
    vars.dedup();
    vars
}

/// Multiplies `factors` and sums out `var`.
fn eliminate(factors: &[Factor], var: usize, d: usize) -> Factor {
    let out_vars = merged_vars(factors, var);
    let mut all_vars = out_vars.clone();
    all_vars.push(var);
    // position of each factor variable inside `all_vars`
    let maps: Vec<Vec<usize>> = factors
        .iter()
        .map(|fac| {
            fac.vars
                .iter()
                .map(|v| all_vars.iter().position(|w| w == v).expect("present"))
                .collect()
        })
        .collect();
    let out_len = d.pow(out_vars.len() as u32);
    let mut data = vec![0.0; out_len];
    let mut assign = vec![0usize; all_vars.len()];
    for (o, slot) in data.iter_mut().enumerate() {
        // decode the output index into assign[..out_vars.len()]
        let mut rest = o;
        for p in (0..out_vars.len()).rev() {
            assign[p] = rest % d;
            rest /= d;
        }
        let mut acc = 0.0;
        for x in 0..d {
            assign[out_vars.len()] = x;
            let mut prod = 1.0;
            for (fac, map) in factors.iter().zip(&maps) {
                let mut flat = 0;
                for &p in map {
                    flat = flat * d + assign[p];
                }
                prod *= fac.data[flat];
            }
            acc += prod;
        }
        *slot = acc;
    }
    Factor {
        vars: out_vars,
        data,
    }
}

/// `κ_s(I_q(f)) = Σ_{γ ∈ K(s,q)} w(γ) ∫ f_γ`. Zero for `s = 1` and for
/// odd `sq`.
pub fn kappa_diagram(f: &SymTensor, s: usize) -> DiagramResult<f64> {
    let q = f.order();
    if s < 2 || (s * q) % 2 == 1 {
        return Ok(0.0);
    }
    let graphs = enumerate_k(s, q);
    let terms: Vec<DiagramResult<f64>> = graphs
        .par_iter()
        .map(|g| Ok(to_f64(&g.weight()) * graph_contraction(f, g)?))
        .collect();
    let mut sum = 0.0;
    for t in terms {
        sum += t?;
    }
    Ok(sum)
}

/// `E[I_q(f)^m]` as a sum over every loopless perfect leg matching.
pub fn moment_via_matchings(f: &SymTensor, m: usize) -> DiagramResult<f64> {
    let q = f.order();
    if m == 0 {
        return Ok(1.0);
    }
    if (m * q) % 2 == 1 {
        return Ok(0.0);
    }
    let counts = matching_projection_counts(m, q);
    let mut sum = 0.0;
    for (g, n) in &counts {
        sum += *n as f64 * graph_contraction(f, g)?;
    }
    Ok(sum)
}

/// One line of the `diagrams list` dump: edges then a tab and the weight.
pub fn dump_line(g: &Multigraph) -> String {
    format!("{g}\t{}", g.weight())
}
