//! Run configuration: a JSON object read from a file or stdin.

use std::io::Read;
use std::path::Path;

use jscc_core::{JointChannelChain, SourceChain, SquareMatrix, StochasticMatrix};
use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;

const COLUMN_TOL: f64 = 1e-9;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub source: Option<Value>,
    pub channel: Option<Value>,
    pub n: Option<u64>,
    pub k: Option<u64>,
    pub k_range: Option<KRange>,
    pub n_values: Option<Vec<u64>>,
    pub r: Option<f64>,
    pub r_values: Option<Vec<f64>>,
    pub bounds: Option<Vec<String>>,
    pub thetas: Option<Vec<f64>>,
    pub theta_primes: Option<Vec<f64>>,
    pub n_max: Option<usize>,
    pub grid_density: Option<usize>,
    pub log_base: Option<String>,
    /// Accepted for forward compatibility; every computation is deterministic.
    #[allow(dead_code)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KRange {
    pub min: u64,
    pub max: u64,
    #[serde(default = "one")]
    pub step: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplicitChain {
    /// Rows indexed by the next state, columns by the current one.
    matrix: Vec<Vec<f64>>,
    x_size: Option<usize>,
    z_size: Option<usize>,
    initial: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
            None => {
                let mut s = String::new();
                std::io::stdin()
                    .read_to_string(&mut s)
                    .map_err(|e| CliError::Config(format!("cannot read stdin: {e}")))?;
                s
            }
        };
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        if let Some(base) = &cfg.log_base {
            if base != "natural" {
                return Err(CliError::Config(format!(
                    "log_base: only \"natural\" is supported, got \"{base}\""
                )));
            }
        }
        Ok(cfg)
    }

    pub fn source(&self) -> Result<SourceChain<f64>, CliError> {
        let spec = self
            .source
            .as_ref()
            .ok_or_else(|| CliError::Config("source: missing".into()))?;
        let (matrix, x_size, z_size, initial) = parse_chain("source", spec)?;
        if z_size != 1 || x_size != matrix.dim() {
            return Err(CliError::Config(
                "source: a source chain has no side state; drop x_size/z_size".into(),
            ));
        }
        match initial {
            Some(p) => SourceChain::new(matrix, p),
            None => SourceChain::stationary(matrix),
        }
        .map_err(|e| CliError::Config(format!("source: {e}")))
    }

    pub fn channel(&self) -> Result<JointChannelChain<f64>, CliError> {
        let spec = self
            .channel
            .as_ref()
            .ok_or_else(|| CliError::Config("channel: missing".into()))?;
        let (matrix, x_size, z_size, initial) = parse_chain("channel", spec)?;
        match initial {
            Some(p) => JointChannelChain::new(x_size, z_size, matrix, p),
            None => JointChannelChain::stationary(x_size, z_size, matrix),
        }
        .map_err(|e| CliError::Config(format!("channel: {e}")))
    }
}

type ParsedChain = (StochasticMatrix<f64>, usize, usize, Option<Vec<f64>>);

fn parse_chain(field: &str, spec: &Value) -> Result<ParsedChain, CliError> {
    if let Value::String(s) = spec {
        let (p, q) = parse_preset(s).map_err(|m| CliError::Config(format!("{field}: {m}")))?;
        let m = StochasticMatrix::binary(p, q)
            .map_err(|e| CliError::Config(format!("{field}: {e}")))?;
        return Ok((m, 2, 1, None));
    }
    let chain: ExplicitChain = serde_json::from_value(spec.clone())
        .map_err(|e| CliError::Config(format!("{field}: {e}")))?;
    let d = chain.matrix.len();
    if d == 0 || chain.matrix.iter().any(|row| row.len() != d) {
        return Err(CliError::Config(format!(
            "{field}.matrix: must be square and non-empty"
        )));
    }
    for (i, row) in chain.matrix.iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CliError::Config(format!(
                "{field}.matrix: entry ({i}, {j}) is negative or not finite"
            )));
        }
    }
    for j in 0..d {
        let sum: f64 = chain.matrix.iter().map(|row| row[j]).sum();
        if (sum - 1.0).abs() > COLUMN_TOL {
            return Err(CliError::Config(format!(
                "{field}.matrix: column {j} sums to {sum}, expected 1"
            )));
        }
    }
    let (x_size, z_size) = match (chain.x_size, chain.z_size) {
        (None, None) => (d, 1),
        (Some(x), None) => (x, d / x.max(1)),
        (None, Some(z)) => (d / z.max(1), z),
        (Some(x), Some(z)) => (x, z),
    };
    if x_size * z_size != d {
        return Err(CliError::Config(format!(
            "{field}: x_size {x_size} times z_size {z_size} must equal the matrix size {d}"
        )));
    }
    let inner = SquareMatrix::from_rows(&chain.matrix)
        .map_err(|e| CliError::Config(format!("{field}.matrix: {e}")))?;
    let m = StochasticMatrix::new(inner)
        .map_err(|e| CliError::Config(format!("{field}.matrix: {e}")))?;
    Ok((m, x_size, z_size, chain.initial))
}

/// `"W(p,q)"` → `(p, q)`.
pub fn parse_preset(s: &str) -> Result<(f64, f64), String> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let inner = compact
        .strip_prefix("W(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| format!("unknown preset \"{s}\"; expected W(p,q)"))?;
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("preset \"{s}\" needs exactly two parameters"));
    }
    let parse = |t: &str| {
        t.parse::<f64>()
            .ok()
            .filter(|v| (0.0..=1.0).contains(v))
            .ok_or_else(|| format!("preset parameter \"{t}\" is not a number in [0, 1]"))
    };
    Ok((parse(parts[0])?, parse(parts[1])?))
}
