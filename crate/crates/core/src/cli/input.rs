use std::fmt;
use std::path::Path;

use crate::cones::SimplicialCone;
use crate::error::{Error, Result};
use crate::numlin::GramMatrix;

/// Cone given either as `gram:d:rho` or as a generator matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeInput {
    Equicorrelated { dim: usize, rho: f64 },
    Generators(Vec<Vec<f64>>),
}

impl ConeInput {
    /// Parses `gram:d:rho`; anything else is read as a generator file.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.strip_prefix("gram:") {
            Some(rest) => parse_gram_spec(rest),
            None => read_generators(Path::new(spec)),
        }
    }

    pub fn cone(&self) -> Result<SimplicialCone> {
        match self {
            ConeInput::Equicorrelated { dim, rho } => {
                let g = GramMatrix::equicorrelated(*dim, *rho)?;
                SimplicialCone::from_gram(&g)
            }
            ConeInput::Generators(rows) => SimplicialCone::new(rows.clone()),
        }
    }
}

impl fmt::Display for ConeInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeInput::Equicorrelated { dim, rho } => write!(f, "gram:{dim}:{rho}"),
            ConeInput::Generators(rows) => {
                let text: Vec<String> = rows
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|x| x.to_string())
                            .collect::<Vec<_>>()
                            .join(" ")
                    })
                    .collect();
                write!(f, "generators:[{}]", text.join("; "))
            }
        }
    }
}

fn parse_gram_spec(rest: &str) -> Result<ConeInput> {
    let bad = || Error::InvalidInput(format!("expected gram:d:rho, got gram:{rest}"));
    let (d, rho) = rest.split_once(':').ok_or_else(bad)?;
    let dim: usize = d.trim().parse().map_err(|_| bad())?;
    let rho: f64 = rho.trim().parse().map_err(|_| bad())?;
    if dim == 0 || !rho.is_finite() {
        return Err(bad());
    }
    Ok(ConeInput::Equicorrelated { dim, rho })
}

fn read_generators(path: &Path) -> Result<ConeInput> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    parse_generators(&text)
}

/// One generator per non-empty line, whitespace-separated; `#` starts a
/// comment.
pub fn parse_generators(text: &str) -> Result<ConeInput> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| {
                        Error::InvalidInput(format!("line {}: bad number '{t}'", lineno + 1))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("no generators given".into()));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::DimensionMismatch(
            "generator rows differ in length".into(),
        ));
    }
    Ok(ConeInput::Generators(rows))
}
