//! Returns-CSV ingestion and artifact emission with reproducibility headers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gmv_core::linalg::ReturnsMatrix;
use gmv_core::{Error, Result};
use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

/// Parsed return history: assets from the header row, one CSV row per date.
pub struct IngestedReturns {
    pub assets: Vec<String>,
    /// Present when the file's first column is a date column; kept verbatim.
    pub dates: Option<Vec<String>>,
    pub returns: ReturnsMatrix,
}

/// Read a returns CSV: first row = asset identifiers, one row per date,
/// decimal points only. A first column headed "date" (case-insensitive) is
/// preserved but ignored for the math. Missing or unparseable cells are
/// rejected with the row and column named.
pub fn read_returns_csv(path: &Path) -> Result<IngestedReturns> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{} is empty", path.display())))?;
    let mut cols: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let has_dates = cols
        .first()
        .is_some_and(|c| c.eq_ignore_ascii_case("date") || c.is_empty());
    if has_dates {
        cols.remove(0);
    }
    if cols.len() < 2 {
        return Err(Error::Data(
            "need at least two asset columns in the header row".into(),
        ));
    }
    let mut dates = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in lines {
        let mut cells = line.split(',').map(str::trim);
        if has_dates {
            dates.push(
                cells
                    .next()
                    .unwrap_or_default()
                    .to_string(),
            );
        }
        let mut row = Vec::with_capacity(cols.len());
        for asset in &cols {
            let cell = cells.next().unwrap_or("");
            if cell.is_empty() {
                return Err(Error::Data(format!(
                    "missing value at row {} column '{asset}'",
                    line_no + 1
                )));
            }
            let value: f64 = cell.parse().map_err(|_| {
                Error::Data(format!(
                    "cannot parse '{cell}' at row {} column '{asset}'",
                    line_no + 1
                ))
            })?;
            row.push(value);
        }
        if cells.next().is_some() {
            return Err(Error::Data(format!(
                "row {} has more cells than the header",
                line_no + 1
            )));
        }
        rows.push(row);
    }
    let n = rows.len();
    let p = cols.len();
    if n < 2 {
        return Err(Error::Data("need at least two observation rows".into()));
    }
    // observations arrive date-by-row; the math wants assets x dates
    let data = DMatrix::from_fn(p, n, |i, t| rows[t][i]);
    Ok(IngestedReturns {
        assets: cols,
        dates: if has_dates { Some(dates) } else { None },
        returns: ReturnsMatrix::new(data)?,
    })
}

/// Reproducibility stamp embedded in every artifact.
pub struct ArtifactMeta {
    pub seed: u64,
    pub config_hash: String,
}

impl ArtifactMeta {
    pub fn new(seed: u64, config_material: &[u8]) -> Self {
        let digest = Sha256::digest(config_material);
        let config_hash = digest.iter().fold(String::new(), |mut acc, b| {
            let _ = write!(acc, "{b:02x}");
            acc
        });
        ArtifactMeta { seed, config_hash }
    }

    pub fn header_lines(&self) -> String {
        format!(
            "# version={}\n# seed={}\n# config_hash={}\n",
            env!("CARGO_PKG_VERSION"),
            self.seed,
            self.config_hash
        )
    }
}

/// Write a CSV artifact: comment headers, column header, then rows.
pub fn write_csv(
    path: &Path,
    meta: &ArtifactMeta,
    columns: &str,
    rows: impl IntoIterator<Item = String>,
) -> Result<()> {
    let mut out = meta.header_lines();
    out.push_str(columns);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Data(format!("cannot serialize JSON: {e}")))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}
