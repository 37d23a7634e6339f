//! Command implementations, independent of argument parsing and output
//! formatting.

use chaoscum::chaos::{cumulant_via_gamma, MAX_KERNEL_ENTRIES};
use chaoscum::diagrams::{dump_line, enumerate_k, kappa_diagram};
use chaoscum::montecarlo::{estimate_cumulants, EstimatorResult, MIN_SAMPLES};
use chaoscum::recursive::{kappa_recursive, kappa_recursive_with, CqFn};
use chaoscum::symtensor::{layout_len, sym_contract};
use chaoscum::{ChaosExpansion, SymTensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{CliError, Input, Limits, Method, Outcome};

/// One table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Exact(f64),
    Estimate(EstimatorResult),
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CumulantRow {
    pub s: usize,
    pub cells: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CumulantReport {
    pub methods: Vec<Method>,
    pub s_max: usize,
    pub samples: usize,
    pub seed: u64,
    pub rows: Vec<CumulantRow>,
}

#[derive(Clone, Debug)]
pub struct CumulantConfig {
    pub methods: Vec<Method>,
    pub s_max: usize,
    pub samples: usize,
    pub seed: u64,
    pub limits: Limits,
}

/// Largest chaos order the Γ route materializes for `κ_s` of an expansion
/// whose top order is `k`.
fn gamma_peak_order(k: usize, s: usize) -> usize {
    if k < 2 {
        k
    } else {
        s * (k - 2) + 2
    }
}

fn gamma_cell(f: &ChaosExpansion, s: usize, limits: &Limits) -> Cell {
    let peak = gamma_peak_order(f.max_order(), s);
    if peak > limits.chaos_max_order {
        return Cell::Skipped(format!(
            "gamma: chaos order {peak} above chaos_max_order = {}",
            limits.chaos_max_order
        ));
    }
    if layout_len(f.dim(), peak) > MAX_KERNEL_ENTRIES {
        return Cell::Skipped(format!(
            "gamma: order-{peak} kernel over dimension {} is too large",
            f.dim()
        ));
    }
    Cell::Exact(cumulant_via_gamma(f, s))
}

fn recursive_cell(input: &Input, s: usize) -> Result<Cell, CliError> {
    let Some((c, f)) = input.single_chaos() else {
        return Ok(Cell::Skipped(
            "recursive: input is not a single chaos".into(),
        ));
    };
    if s == 1 {
        return Ok(Cell::Exact(c));
    }
    if f.order() < 2 {
        return Ok(Cell::Skipped("recursive: needs kernel order q >= 2".into()));
    }
    kappa_recursive(f, s)
        .map(Cell::Exact)
        .map_err(|e| CliError::Input(e.to_string()))
}

fn diagram_cell(input: &Input, s: usize, limits: &Limits) -> Result<Cell, CliError> {
    let Some((c, f)) = input.single_chaos() else {
        return Ok(Cell::Skipped("diagram: input is not a single chaos".into()));
    };
    if s == 1 {
        return Ok(Cell::Exact(c));
    }
    let edges = s * f.order() / 2;
    if (s * f.order()).is_multiple_of(2) && edges > limits.diagram_max_edges {
        return Ok(Cell::Skipped(format!(
            "diagram: {edges} edges above diagram_max_edges = {}",
            limits.diagram_max_edges
        )));
    }
    kappa_diagram(f, s)
        .map(Cell::Exact)
        .map_err(|e| CliError::Input(e.to_string()))
}

/// κ_1..κ_smax by every requested route.
pub fn cumulants(input: &Input, cfg: &CumulantConfig) -> Result<CumulantReport, CliError> {
    if cfg.s_max < 2 {
        return Err(CliError::Input(format!(
            "--smax must be at least 2, got {}",
            cfg.s_max
        )));
    }
    if cfg.methods.is_empty() {
        return Err(CliError::Input("at least one method is required".into()));
    }
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();
    let wants_mc = methods.contains(&Method::Montecarlo);
    if wants_mc && cfg.samples < MIN_SAMPLES {
        return Err(CliError::Input(format!(
            "--samples must be at least {MIN_SAMPLES}, got {}",
            cfg.samples
        )));
    }

    let expansion = input.expansion();
    let mc: Option<Vec<EstimatorResult>> = if wants_mc && cfg.samples <= cfg.limits.mc_max_samples {
        Some(
            estimate_cumulants(&expansion, cfg.s_max, cfg.samples, cfg.seed)
                .map_err(|e| CliError::Input(e.to_string()))?,
        )
    } else {
        None
    };

    let mut rows = Vec::with_capacity(cfg.s_max);
    for s in 1..=cfg.s_max {
        let mut cells = Vec::with_capacity(methods.len());
        for &m in &methods {
            cells.push(match m {
                Method::Recursive => recursive_cell(input, s)?,
                Method::Gamma => gamma_cell(&expansion, s, &cfg.limits),
                Method::Diagram => diagram_cell(input, s, &cfg.limits)?,
                Method::Montecarlo => match &mc {
                    Some(est) => Cell::Estimate(est[s - 1].clone()),
                    None => Cell::Skipped(format!(
                        "montecarlo: N = {} above mc_max_samples = {}",
                        cfg.samples, cfg.limits.mc_max_samples
                    )),
                },
            });
        }
        rows.push(CumulantRow { s, cells });
    }
    Ok(CumulantReport {
        methods,
        s_max: cfg.s_max,
        samples: cfg.samples,
        seed: cfg.seed,
        rows,
    })
}

#[derive(Clone, Debug)]
pub struct CrossConfig {
    pub s_max: usize,
    pub seed: u64,
    pub tol: f64,
    pub kernels_per_cell: usize,
    pub limits: Limits,
}

/// The largest disagreement seen between two exact routes.
#[derive(Clone, Debug, PartialEq)]
pub struct Discrepancy {
    pub q: usize,
    pub d: usize,
    pub s: usize,
    pub kernel: usize,
    pub left: (Method, f64),
    pub right: (Method, f64),
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossReport {
    pub tol: f64,
    pub comparisons: usize,
    pub skipped: usize,
    pub worst: Option<Discrepancy>,
}

impl CrossReport {
    pub fn tolerance_valid(&self) -> bool {
        self.tol > 0.0
    }

    pub fn passed(&self) -> bool {
        self.tolerance_valid() && self.worst.as_ref().is_none_or(|w| w.relative <= self.tol)
    }

    pub fn outcome(&self) -> Outcome {
        if self.passed() {
            Outcome::Success
        } else {
            Outcome::ValidationFailure
        }
    }
}

/// Relative discrepancy, measured against `max(|a|, |b|, 1)`: kernels are
/// normalized to unit variance, so 1 is the natural scale of the cumulants
/// and the floor keeps exact zeros (odd `sq`) comparable.
pub fn relative_discrepancy(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Kernel with i.i.d. uniform `[-1, 1]` entries on sorted indices,
/// rescaled to `q! ‖f‖² = 1`.
pub fn unit_variance_kernel(rng: &mut ChaCha8Rng, dim: usize, q: usize) -> SymTensor {
    let f = SymTensor::random(dim, q, rng);
    let qf: f64 = (1..=q).map(|k| k as f64).product();
    f.scale(1.0 / (qf * f.norm().powi(2)).sqrt())
}

/// Seeded grid `q ∈ {2,3}`, `d ∈ {2,3,4}`, `s = 2..=s_max`; compares the
/// exact routes pairwise. `cq_fn` supplies the recursive route's constants.
pub fn crossvalidate(cfg: &CrossConfig, cq_fn: CqFn<'_>) -> Result<CrossReport, CliError> {
    if cfg.s_max < 2 {
        return Err(CliError::Input(format!(
            "--smax must be at least 2, got {}",
            cfg.s_max
        )));
    }
    if cfg.kernels_per_cell == 0 {
        return Err(CliError::Input("--kernels must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut comparisons = 0;
    let mut skipped = 0;
    let mut worst: Option<Discrepancy> = None;
    for q in [2, 3] {
        for d in [2, 3, 4] {
            for kernel in 0..cfg.kernels_per_cell {
                let f = unit_variance_kernel(&mut rng, d, q);
                let fe = ChaosExpansion::integral(f.clone());
                for s in 2..=cfg.s_max {
                    let mut values = vec![
                        (
                            Method::Recursive,
                            kappa_recursive_with(&f, s, cq_fn)
                                .map_err(|e| CliError::Input(e.to_string()))?,
                        ),
                        (Method::Gamma, cumulant_via_gamma(&fe, s)),
                    ];
                    if s * q / 2 <= cfg.limits.diagram_max_edges {
                        values.push((
                            Method::Diagram,
                            kappa_diagram(&f, s).map_err(|e| CliError::Input(e.to_string()))?,
                        ));
                    } else {
                        skipped += 1;
                    }
                    for i in 0..values.len() {
                        for j in i + 1..values.len() {
                            comparisons += 1;
                            let rel = relative_discrepancy(values[i].1, values[j].1);
                            if worst.as_ref().is_none_or(|w| rel > w.relative) {
                                worst = Some(Discrepancy {
                                    q,
                                    d,
                                    s,
                                    kernel,
                                    left: values[i],
                                    right: values[j],
                                    relative: rel,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(CrossReport {
        tol: cfg.tol,
        comparisons,
        skipped,
        worst,
    })
}

/// One row of the fourth-moment demonstration.
#[derive(Clone, Debug, PartialEq)]
pub struct FmtRow {
    pub n: usize,
    pub contraction_norm: f64,
    /// κ_2..κ_smax of `I_2(f_n)`.
    pub kappas: Vec<f64>,
}

impl FmtRow {
    pub fn expected_norm(&self) -> f64 {
        1.0 / (4.0 * self.n as f64).sqrt()
    }

    pub fn expected_kappa4(&self) -> f64 {
        12.0 / self.n as f64
    }

    pub fn kappa(&self, s: usize) -> f64 {
        self.kappas[s - 2]
    }
}

/// `f_n = (2n)^{-1/2} Σ_{i ≤ n} e_i ⊗ e_i` over dimension `n`.
pub fn fmt_kernel(n: usize) -> SymTensor {
    let c = 1.0 / (2.0 * n as f64).sqrt();
    SymTensor::from_fn(n, 2, |idx| if idx[0] == idx[1] { c } else { 0.0 })
}

pub fn fmt_demo(ns: &[usize], s_max: usize) -> Result<Vec<FmtRow>, CliError> {
    if s_max < 2 {
        return Err(CliError::Input(format!(
            "--smax must be at least 2, got {s_max}"
        )));
    }
    if ns.is_empty() || ns.contains(&0) {
        return Err(CliError::Input("--n must list positive integers".into()));
    }
    ns.iter()
        .map(|&n| {
            let f = fmt_kernel(n);
            let contraction_norm = sym_contract(&f, &f, 1)
                .map_err(|e| CliError::Input(e.to_string()))?
                .norm();
            let kappas = (2..=s_max)
                .map(|s| kappa_recursive(&f, s).map_err(|e| CliError::Input(e.to_string())))
                .collect::<Result<_, _>>()?;
            Ok(FmtRow {
                n,
                contraction_norm,
                kappas,
            })
        })
        .collect()
}

/// Diagram listing: `None` when `sq` is odd.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagramListing {
    pub s: usize,
    pub q: usize,
    pub lines: Option<Vec<String>>,
}

pub fn diagrams(s: usize, q: usize, limits: &Limits) -> Result<DiagramListing, CliError> {
    if s < 2 || q < 2 {
        return Err(CliError::Input(format!(
            "need s >= 2 and q >= 2, got s = {s}, q = {q}"
        )));
    }
    if (s * q) % 2 == 1 {
        return Ok(DiagramListing { s, q, lines: None });
    }
    if s * q / 2 > limits.diagram_max_edges {
        return Err(CliError::Input(format!(
            "{} edges above diagram_max_edges = {}; raise it with --config",
            s * q / 2,
            limits.diagram_max_edges
        )));
    }
    let lines = enumerate_k(s, q).iter().map(dump_line).collect();
    Ok(DiagramListing {
        s,
        q,
        lines: Some(lines),
    })
}
