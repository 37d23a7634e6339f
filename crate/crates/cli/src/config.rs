//! Feasibility limits, overridable through a `key=value` file.

use std::path::Path;

use chaoscum::chaos::DEFAULT_ORDER_CAP;

use crate::CliError;

/// Size caps beyond which a method is reported as skipped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest edge count `sq/2` for the diagram route.
    pub diagram_max_edges: usize,
    /// Largest chaos order materialized by the Γ route.
    pub chaos_max_order: usize,
    /// Largest Monte Carlo sample size.
    pub mc_max_samples: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            diagram_max_edges: 10,
            chaos_max_order: DEFAULT_ORDER_CAP,
            mc_max_samples: 10_000_000,
        }
    }
}

impl Limits {
    /// Parses `key = value` lines; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut limits = Limits::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Input(format!("config line {}: expected key=value", n + 1))
            })?;
            let value: usize = value.trim().parse().map_err(|_| {
                CliError::Input(format!(
                    "config line {}: `{}` is not a non-negative integer",
                    n + 1,
                    value.trim()
                ))
            })?;
            match key.trim() {
                "diagram_max_edges" => limits.diagram_max_edges = value,
                "chaos_max_order" => limits.chaos_max_order = value,
                "mc_max_samples" => limits.mc_max_samples = value,
                other => {
                    return Err(CliError::Input(format!(
                        "config line {}: unknown key `{other}`",
                        n + 1
                    )))
                }
            }
        }
        Ok(limits)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}
