//! Finite Wiener–Itô chaos expansions `F = f_0 + Σ_q I_q(f_q)` and the
//! operators acting on them.
//!
//! Products use the multiplication formula
//!
//! ```text
//! I_p(f) I_q(g) = Σ_{r=0}^{p∧q} r! C(p,r) C(q,r) I_{p+q-2r}(f ⊗̃_r g)
//! ```
//!
//! and `⟨DF, -DL⁻¹G⟩_H` is evaluated in closed form on kernels,
//!
//! ```text
//! ⟨D I_p(f), -D L⁻¹ I_q(g)⟩ = Σ_{r=1}^{p∧q} p (r-1)! C(p-1,r-1) C(q-1,r-1) I_{p+q-2r}(f ⊗̃_r g)
//! ```
//!
//! so no H-valued random variable is ever materialized.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinatorics::{binomial, binomial_f64, factorial, factorial_f64, to_f64};
use crate::symtensor::{layout_len, sym_contract, KernelFile, SymTensor, TensorError};

/// Highest chaos order a product may produce before aborting.
pub const DEFAULT_ORDER_CAP: usize = 64;

/// Largest kernel (in stored coefficients) a product may produce.
pub const MAX_KERNEL_ENTRIES: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChaosError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("chaos order {order} exceeds cap {cap}")]
    OrderCap { order: usize, cap: usize },
    #[error("kernel of order {order} over dimension {dim} is too large to store")]
    TooLarge { order: usize, dim: usize },
    #[error("invalid expansion: {0}")]
    Format(String),
}

pub type ChaosResult<T> = Result<T, ChaosError>;

/// `F = f_0 + Σ_{q≥1} I_q(f_q)` with finitely many kernels. Absent orders
/// are zero kernels.
#[derive(Clone, Debug, PartialEq)]
pub struct ChaosExpansion {
    dim: usize,
    constant: f64,
    kernels: BTreeMap<usize, SymTensor>,
}

impl ChaosExpansion {
    pub fn zero(dim: usize) -> Self {
        ChaosExpansion {
            dim,
            constant: 0.0,
            kernels: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        ChaosExpansion {
            constant: c,
            ..ChaosExpansion::zero(dim)
        }
    }

    /// `I_q(f)`; an order-0 kernel becomes the constant.
    pub fn integral(f: SymTensor) -> Self {
        let mut out = ChaosExpansion::zero(f.dim());
        out.add_term(f);
        out
    }

    pub fn from_parts(
        dim: usize,
        constant: f64,
        kernels: impl IntoIterator<Item = SymTensor>,
    ) -> ChaosResult<Self> {
        let mut out = ChaosExpansion::constant(dim, constant);
        for k in kernels {
            if k.dim() != dim {
                return Err(ChaosError::DimMismatch {
                    left: dim,
                    right: k.dim(),
                });
            }
            out.add_term(k);
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    /// The kernel of `J_q F`, if stored. `q = 0` is the constant.
    pub fn kernel(&self, q: usize) -> Option<&SymTensor> {
        self.kernels.get(&q)
    }

    pub fn kernels(&self) -> impl Iterator<Item = (usize, &SymTensor)> {
        self.kernels.iter().map(|(&q, f)| (q, f))
    }

    /// Highest order carrying a non-zero kernel; 0 for constants.
    pub fn max_order(&self) -> usize {
        self.kernels
            .iter()
            .rev()
            .find(|(_, f)| !f.is_zero())
            .map_or(0, |(&q, _)| q)
    }

    fn add_term(&mut self, f: SymTensor) {
        debug_assert_eq!(f.dim(), self.dim);
        if f.order() == 0 {
            self.constant += f.coeffs()[0];
            return;
        }
        match self.kernels.get_mut(&f.order()) {
            Some(existing) => existing.axpy(1.0, &f).expect("same shape"),
            None => {
                self.kernels.insert(f.order(), f);
            }
        }
    }

    fn add_scaled_term(&mut self, c: f64, f: SymTensor) {
        if c == 1.0 {
            self.add_term(f)
        } else {
            self.add_term(f.scale(c))
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        ChaosExpansion {
            dim: self.dim,
            constant: self.constant * c,
            kernels: self.kernels.iter().map(|(&q, f)| (q, f.scale(c))).collect(),
        }
    }

    pub fn add(&self, other: &ChaosExpansion) -> ChaosResult<Self> {
        check_dims(self, other)?;
        let mut out = self.clone();
        out.constant += other.constant;
        for f in other.kernels.values() {
            out.add_term(f.clone());
        }
        Ok(out)
    }

    /// All terms including the constant as an order-0 kernel; zero kernels
    /// are skipped.
    fn terms(&self) -> Vec<SymTensor> {
        let mut out = Vec::with_capacity(self.kernels.len() + 1);
        if self.constant != 0.0 {
            out.push(SymTensor::scalar(self.dim, self.constant));
        }
        out.extend(self.kernels.values().filter(|f| !f.is_zero()).cloned());
        out
    }

    /// Largest coefficient-wise difference across all chaos orders.
    pub fn max_abs_diff(&self, other: &ChaosExpansion) -> ChaosResult<f64> {
        check_dims(self, other)?;
        let mut worst = (self.constant - other.constant).abs();
        let orders: std::collections::BTreeSet<usize> = self
            .kernels
            .keys()
            .chain(other.kernels.keys())
            .copied()
            .collect();
        for q in orders {
            let zero = SymTensor::zeros(self.dim, q);
            let a = self.kernels.get(&q).unwrap_or(&zero);
            let b = other.kernels.get(&q).unwrap_or(&zero);
            worst = worst.max(a.max_abs_diff(b)?);
        }
        Ok(worst)
    }

    /// `c_0 + c_1 F + … + c_n F^n` computed with [`multiply`].
    pub fn polynomial(&self, coeffs: &[f64]) -> ChaosResult<Self> {
        let mut acc = ChaosExpansion::zero(self.dim);
        for &c in coeffs.iter().rev() {
            acc = multiply(&acc, self)?;
            acc.constant += c;
        }
        Ok(acc)
    }
}

fn check_dims(f: &ChaosExpansion, g: &ChaosExpansion) -> ChaosResult<()> {
    if f.dim != g.dim {
        return Err(ChaosError::DimMismatch {
            left: f.dim,
            right: g.dim,
        });
    }
    Ok(())
}

/// Product of two expansions with the default order cap.
pub fn multiply(f: &ChaosExpansion, g: &ChaosExpansion) -> ChaosResult<ChaosExpansion> {
    multiply_capped(f, g, DEFAULT_ORDER_CAP)
}

pub fn multiply_capped(
    f: &ChaosExpansion,
    g: &ChaosExpansion,
    cap: usize,
) -> ChaosResult<ChaosExpansion> {
    check_dims(f, g)?;
    let mut out = ChaosExpansion::zero(f.dim);
    let (ft, gt) = (f.terms(), g.terms());
    for a in &ft {
        for b in &gt {
            let (p, q) = (a.order(), b.order());
            if p + q > cap {
                return Err(ChaosError::OrderCap { order: p + q, cap });
            }
            for r in 0..=p.min(q) {
                let order = p + q - 2 * r;
                if layout_len(f.dim, order) > MAX_KERNEL_ENTRIES {
                    return Err(ChaosError::TooLarge { order, dim: f.dim });
                }
                let coef = to_f64(&(factorial(r) * binomial(p, r) * binomial(q, r)));
                out.add_scaled_term(coef, sym_contract(a, b, r)?);
            }
        }
    }
    Ok(out)
}

/// `E[F] = f_0`.
pub fn expectation(f: &ChaosExpansion) -> f64 {
    f.constant
}

/// Chaos expansion of `⟨DF, -DL⁻¹G⟩_H`. Constants of either side drop out.
pub fn gamma_pair(f: &ChaosExpansion, g: &ChaosExpansion) -> ChaosResult<ChaosExpansion> {
    check_dims(f, g)?;
    let mut out = ChaosExpansion::zero(f.dim);
    for (&p, a) in &f.kernels {
        if a.is_zero() {
            continue;
        }
        for (&q, b) in &g.kernels {
            if b.is_zero() {
                continue;
            }
            for r in 1..=p.min(q) {
                let coef = to_f64(
                    &(binomial(p - 1, r - 1) * binomial(q - 1, r - 1) * factorial(r - 1) * p),
                );
                out.add_scaled_term(coef, sym_contract(a, b, r)?);
            }
        }
    }
    Ok(out)
}

/// `Γ_j(F)`: `Γ_0 = F`, `Γ_{j+1} = ⟨DF, -DL⁻¹Γ_j⟩`.
pub fn gamma(f: &ChaosExpansion, j: usize) -> ChaosExpansion {
    let mut cur = f.clone();
    for _ in 0..j {
        // same dimension throughout, so this cannot fail
        cur = gamma_pair(f, &cur).expect("dimensions agree");
    }
    cur
}

/// `κ_s(F) = (s-1)! E[Γ_{s-1}(F)]` for `s ≥ 1`.
pub fn cumulant_via_gamma(f: &ChaosExpansion, s: usize) -> f64 {
    assert!(s >= 1, "cumulant order starts at 1");
    factorial_f64(s - 1) * expectation(&gamma(f, s - 1))
}

/// Raw moments `E[X^k]`, `k = 1..m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence(Vec<f64>);

/// Cumulants `κ_k`, `k = 1..m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantSequence(Vec<f64>);

macro_rules! one_based_sequence {
    ($name:ident) => {
        impl $name {
            pub fn new(values: Vec<f64>) -> Self {
                $name(values)
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            /// 1-based access.
            pub fn get(&self, k: usize) -> f64 {
                self.0[k - 1]
            }

            pub fn values(&self) -> &[f64] {
                &self.0
            }
        }
    };
}

one_based_sequence!(MomentSequence);
one_based_sequence!(CumulantSequence);

/// `E[F^k]` for `k = 1..m` through repeated products.
pub fn moments(f: &ChaosExpansion, m: usize) -> ChaosResult<MomentSequence> {
    moments_capped(f, m, DEFAULT_ORDER_CAP)
}

pub fn moments_capped(f: &ChaosExpansion, m: usize, cap: usize) -> ChaosResult<MomentSequence> {
    let mut out = Vec::with_capacity(m);
    let mut power = f.clone();
    for k in 1..=m {
        if k > 1 {
            power = multiply_capped(&power, f, cap)?;
        }
        out.push(expectation(&power));
    }
    Ok(MomentSequence(out))
}

/// Solves `E X^{m+1} = Σ_{s=0}^{m} C(m,s) κ_{s+1} E X^{m-s}` for the
/// cumulants.
pub fn moments_to_cumulants(mu: &MomentSequence) -> CumulantSequence {
    let raw = |k: usize| if k == 0 { 1.0 } else { mu.0[k - 1] };
    let mut kappa: Vec<f64> = Vec::with_capacity(mu.len());
    for m in 0..mu.len() {
        let lower: f64 = (0..m)
            .map(|s| binomial_f64(m, s) * kappa[s] * raw(m - s))
            .sum();
        kappa.push(raw(m + 1) - lower);
    }
    CumulantSequence(kappa)
}

/// The same recursion solved for the moments.
pub fn cumulants_to_moments(kappa: &CumulantSequence) -> MomentSequence {
    let mut mu: Vec<f64> = Vec::with_capacity(kappa.len());
    for m in 0..kappa.len() {
        let raw = |k: usize| if k == 0 { 1.0 } else { mu[k - 1] };
        let next = (0..=m)
            .map(|s| binomial_f64(m, s) * kappa.0[s] * raw(m - s))
            .sum();
        mu.push(next);
    }
    MomentSequence(mu)
}

/// On-disk expansion format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionFile {
    pub dim: usize,
    #[serde(default)]
    pub constant: f64,
    pub kernels: Vec<ExpansionKernel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionKernel {
    pub q: usize,
    pub tensor: KernelFile,
}

impl ExpansionFile {
    pub fn into_expansion(self) -> ChaosResult<ChaosExpansion> {
        let mut out = ChaosExpansion::constant(self.dim, self.constant);
        for k in self.kernels {
            if k.q != k.tensor.q {
                return Err(ChaosError::Format(format!(
                    "kernel listed at order {} has tensor order {}",
                    k.q, k.tensor.q
                )));
            }
            if k.tensor.dim != self.dim {
                return Err(ChaosError::DimMismatch {
                    left: self.dim,
                    right: k.tensor.dim,
                });
            }
            if k.q == 0 {
                return Err(ChaosError::Format(
                    "order-0 kernels belong in \"constant\"".into(),
                ));
            }
            if out.kernels.contains_key(&k.q) {
                return Err(ChaosError::Format(format!("order {} listed twice", k.q)));
            }
            out.add_term(k.tensor.into_tensor()?);
        }
        Ok(out)
    }

    pub fn from_expansion(f: &ChaosExpansion) -> Self {
        ExpansionFile {
            dim: f.dim,
            constant: f.constant,
            kernels: f
                .kernels
                .iter()
                .map(|(&q, t)| ExpansionKernel {
                    q,
                    tensor: KernelFile::from_tensor(t),
                })
                .collect(),
        }
    }
}

pub fn parse_expansion(json: &str) -> ChaosResult<ChaosExpansion> {
    let file: ExpansionFile =
        serde_json::from_str(json).map_err(|e| ChaosError::Format(e.to_string()))?;
    file.into_expansion()
}
