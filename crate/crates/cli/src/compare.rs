//! Column-wise differences between two run directories.

use std::fmt;
use std::path::Path;

use crate::output::HEADER;

const FILES: [&str; 2] = ["probes.csv", "profiles.csv"];

/// Relative tolerance on the `t` and `x` keys of matched rows.
const KEY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnDiff {
    pub file: &'static str,
    pub column: &'static str,
    pub rows: usize,
    pub max: f64,
    /// `sqrt(sum d^2)` over all rows.
    pub l2: f64,
}

#[derive(Debug)]
pub struct CompareError(pub String);

impl fmt::Display for CompareError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CompareError {}

fn read(path: &Path) -> Result<Vec<Vec<f64>>, CompareError> {
    let err = |m: String| CompareError(format!("{}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let header = r.headers().map_err(|e| err(e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(err(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| err(e.to_string()))?;
            rec.iter()
                .map(|f| f.parse::<f64>().map_err(|_| err(format!("row {}: invalid number {f:?}", i + 1))))
                .collect()
        })
        .collect()
}

fn same_key(a: f64, b: f64) -> bool {
    (a - b).abs() <= KEY_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Differences `b - a` of every value column of the files both runs wrote.
pub fn compare_runs(a: &Path, b: &Path) -> Result<Vec<ColumnDiff>, CompareError> {
    let mut present = Vec::new();
    for file in FILES {
        let (pa, pb) = (a.join(file), b.join(file));
        match (pa.exists(), pb.exists()) {
            (false, false) => {}
            (true, false) => return Err(CompareError(format!("{} missing", pb.display()))),
            (false, true) => return Err(CompareError(format!("{} missing", pa.display()))),
            (true, true) => present.push((file, pa, pb)),
        }
    }
    let mut out = Vec::new();
    for (file, pa, pb) in present {
        let (ra, rb) = (read(&pa)?, read(&pb)?);
        if ra.len() != rb.len() {
            return Err(CompareError(format!("{file}: {} rows against {}", ra.len(), rb.len())));
        }
        for (i, (x, y)) in ra.iter().zip(&rb).enumerate() {
            if !(same_key(x[0], y[0]) && same_key(x[1], y[1])) {
                return Err(CompareError(format!(
                    "{file}: row {} is at (t, x) = ({}, {}) against ({}, {})",
                    i + 1,
                    x[0],
                    x[1],
                    y[0],
                    y[1]
                )));
            }
        }
        for (col, &column) in HEADER.iter().enumerate().skip(2) {
            let d = ra.iter().zip(&rb).map(|(x, y)| (y[col] - x[col]).abs());
            let (max, sq) = d.fold((0.0f64, 0.0), |(m, s), d| (m.max(d), s + d * d));
            out.push(ColumnDiff { file, column, rows: ra.len(), max, l2: sq.sqrt() });
        }
    }
    if out.is_empty() {
        return Err(CompareError(format!("no run outputs in {} or {}", a.display(), b.display())));
    }
    Ok(out)
}
