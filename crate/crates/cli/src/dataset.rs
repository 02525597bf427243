//! Datasets of ring conformations: ingestion, validation and export.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use cyclo_topo::geometry::{
    constraint_residual, eckart_align, torsion_angles, GeometryError, LinkageParams, Point, Realization,
    StandardRealization, TorsionSequence, RING,
};
use cyclo_topo::sampling::SyntheticSample;
use cyclo_topo::symmetry::SymmetryLabel;
use log::warn;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Ingested,
    Sampled,
    Synthetic,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Ingested => "ingested",
            Origin::Sampled => "sampled",
            Origin::Synthetic => "synthetic",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub origin: Origin,
    pub realizations: Option<Vec<StandardRealization>>,
    pub torsions: Option<Vec<TorsionSequence>>,
    pub labels: Option<Vec<SymmetryLabel>>,
    /// Source path, or a hash of the generating configuration.
    pub provenance: String,
    pub params: Option<LinkageParams>,
    pub synthetic: Option<SyntheticSample>,
}

impl Dataset {
    pub fn from_realizations(origin: Origin, realizations: Vec<StandardRealization>, provenance: String) -> Result<Self, GeometryError> {
        let torsions = realizations.iter().map(|r| torsion_angles(r.realization())).collect::<Result<Vec<_>, _>>()?;
        let params = realizations.first().map(|r| r.params());
        Ok(Self { origin, realizations: Some(realizations), torsions: Some(torsions), labels: None, provenance, params, synthetic: None })
    }

    pub fn from_torsions(origin: Origin, torsions: Vec<TorsionSequence>, provenance: String) -> Self {
        Self { origin, realizations: None, torsions: Some(torsions), labels: None, provenance, params: None, synthetic: None }
    }

    pub fn synthetic(sample: SyntheticSample, provenance: String) -> Self {
        Self { origin: Origin::Synthetic, realizations: None, torsions: None, labels: None, provenance, params: None, synthetic: Some(sample) }
    }

    pub fn len(&self) -> usize {
        if let Some(t) = &self.torsions {
            t.len()
        } else if let Some(r) = &self.realizations {
            r.len()
        } else {
            self.synthetic.as_ref().map_or(0, |s| s.len())
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest torsion discrepancy between the stored realizations and
    /// torsions, if both are present.
    pub fn consistency_error(&self) -> Option<f64> {
        let (r, t) = (self.realizations.as_ref()?, self.torsions.as_ref()?);
        let mut worst = 0.0f64;
        for (x, s) in r.iter().zip(t) {
            let Ok(u) = torsion_angles(x.realization()) else { return Some(f64::INFINITY) };
            for i in 0..RING {
                worst = worst.max(cyclo_topo::metrics::circular_distance(u.get(i), s.get(i)));
            }
        }
        Some(worst)
    }
}

/// Column layout of a coordinate file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Layout {
    /// `x0,y0,z0,…,x7,y7,z7`.
    Carbon24,
    /// 72 columns of which `carbon_columns[3k + c]` holds coordinate `c` of
    /// carbon `k`.
    Full72 { carbon_columns: Vec<usize> },
}

impl Layout {
    pub fn full72() -> Self {
        Layout::Full72 { carbon_columns: (0..3 * RING).collect() }
    }

    pub fn width(&self) -> usize {
        match self {
            Layout::Carbon24 => 3 * RING,
            Layout::Full72 { .. } => 72,
        }
    }

    fn columns(&self) -> Vec<usize> {
        match self {
            Layout::Carbon24 => (0..3 * RING).collect(),
            Layout::Full72 { carbon_columns } => carbon_columns.clone(),
        }
    }
}

impl FromStr for Layout {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "carbon24" => Ok(Layout::Carbon24),
            "full72" => Ok(Layout::full72()),
            other => Err(format!("unknown layout '{other}' (expected carbon24 or full72)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCount { line: usize, expected: usize, found: usize },
    #[error("line {line}, column {column}: '{token}' is not a finite number")]
    BadNumber { line: usize, column: usize, token: String },
    #[error("no data rows")]
    Empty,
    #[error("column mapping must list 24 distinct columns below 72")]
    Mapping,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowDiagnostic {
    pub line: usize,
    /// Max `|constraint residual| / ℓ²`, infinite for degenerate rows.
    pub residual: f64,
    pub reason: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub struct ValidationError {
    pub rows: Vec<RowDiagnostic>,
    pub checked: usize,
    pub tolerance: f64,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} of {} rows fail validation (tolerance {:e})", self.rows.len(), self.checked, self.tolerance)?;
        for r in self.rows.iter().take(10) {
            write!(f, "\n  line {}: {} (relative residual {:e})", r.line, r.reason, r.residual)?;
        }
        if self.rows.len() > 10 {
            write!(f, "\n  ... and {} more", self.rows.len() - 10)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("estimated linkage parameters are invalid: {0}")]
    Params(GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    pub layout: Layout,
    /// Bound on `max |constraint residual| / ℓ²` per row.
    pub residual_tol: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { layout: Layout::Carbon24, residual_tol: 1e-3 }
    }
}

/// Data rows of a coordinate file. Blank lines and lines starting with `#`
/// are skipped; separators are commas and whitespace.
pub fn parse_rows(text: &str, width: usize) -> Result<Vec<(usize, Vec<f64>)>, ParseError> {
    let mut rows = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        if tokens.len() != width {
            return Err(ParseError::ColumnCount { line, expected: width, found: tokens.len() });
        }
        let mut values = Vec::with_capacity(width);
        for (c, tok) in tokens.iter().enumerate() {
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => return Err(ParseError::BadNumber { line, column: c + 1, token: tok.to_string() }),
            }
        }
        rows.push((line, values));
    }
    if rows.is_empty() {
        return Err(ParseError::Empty);
    }
    Ok(rows)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median bond length and median bond angle over all rows.
pub fn estimate_params(rows: &[[Point; RING]]) -> Result<LinkageParams, GeometryError> {
    let mut lengths = Vec::with_capacity(rows.len() * RING);
    let mut angles = Vec::with_capacity(rows.len() * RING);
    for x in rows {
        for i in 0..RING {
            let (p, q, s) = (x[(i + RING - 1) % RING], x[i], x[(i + 1) % RING]);
            lengths.push((s - q).norm());
            let (a, b) = (p - q, s - q);
            angles.push((a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos());
        }
    }
    LinkageParams::new(median(lengths), median(angles))
}

/// Reads a coordinate file; see [`ingest_str`].
pub fn ingest(path: &Path, opts: &IngestOptions) -> Result<Dataset, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    let mut data = ingest_str(&text, opts)?;
    data.provenance = path.display().to_string();
    Ok(data)
}

/// Parses and validates conformations. Linkage parameters are the data
/// medians; rows whose relative constraint residual exceeds the tolerance
/// are reported together. Rows violating the Eckart condition are
/// re-aligned with a warning.
pub fn ingest_str(text: &str, opts: &IngestOptions) -> Result<Dataset, IngestError> {
    let columns = opts.layout.columns();
    let mut seen = columns.clone();
    seen.sort_unstable();
    seen.dedup();
    if columns.len() != 3 * RING || seen.len() != columns.len() || seen.iter().any(|&c| c >= opts.layout.width()) {
        return Err(ParseError::Mapping.into());
    }
    let rows = parse_rows(text, opts.layout.width())?;
    let points: Vec<[Point; RING]> = rows
        .iter()
        .map(|(_, v)| std::array::from_fn(|k| Point::new(v[columns[3 * k]], v[columns[3 * k + 1]], v[columns[3 * k + 2]])))
        .collect();
    let params = estimate_params(&points).map_err(IngestError::Params)?;
    let l2 = params.bond_length() * params.bond_length();
    let tol = StandardRealization::alignment_tolerance(&params);
    let mut bad = Vec::new();
    let mut out = Vec::with_capacity(points.len());
    let mut realigned = 0;
    for ((line, _), x) in rows.iter().zip(&points) {
        let residual = constraint_residual(x, &params).iter().fold(0.0f64, |m, r| m.max(r.abs())) / l2;
        if !(residual <= opts.residual_tol) {
            bad.push(RowDiagnostic { line: *line, residual, reason: "constraint residual too large".into() });
            continue;
        }
        let r = Realization::from_points_unchecked(*x, params);
        let standard = match StandardRealization::new(r.clone(), tol) {
            Ok(s) => s,
            Err(_) => match eckart_align(&r) {
                Ok(s) => {
                    realigned += 1;
                    s
                }
                Err(e) => {
                    bad.push(RowDiagnostic { line: *line, residual, reason: e.to_string() });
                    continue;
                }
            },
        };
        if let Err(e) = torsion_angles(standard.realization()) {
            bad.push(RowDiagnostic { line: *line, residual: f64::INFINITY, reason: e.to_string() });
            continue;
        }
        out.push(standard);
    }
    if !bad.is_empty() {
        return Err(ValidationError { rows: bad, checked: rows.len(), tolerance: opts.residual_tol }.into());
    }
    if realigned > 0 {
        warn!("{realigned} of {} rows violated the Eckart condition and were re-aligned", out.len());
    }
    let mut data = Dataset::from_realizations(Origin::Ingested, out, String::new()).expect("torsions checked per row");
    data.params = Some(params);
    Ok(data)
}

/// Carbon24 text for `realizations`, one row per conformation, shortest
/// round-trip decimal representation.
pub fn export_realizations(realizations: &[StandardRealization]) -> String {
    let mut s = String::from("# x0,y0,z0,x1,y1,z1,x2,y2,z2,x3,y3,z3,x4,y4,z4,x5,y5,z5,x6,y6,z6,x7,y7,z7\n");
    for r in realizations {
        let row: Vec<String> = r.points().iter().flat_map(|p| [p.x, p.y, p.z]).map(|v| format!("{v}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Rows `index,s0,…,s7` in radians.
pub fn export_torsions(torsions: &[TorsionSequence]) -> String {
    let mut s = String::from("index,s0,s1,s2,s3,s4,s5,s6,s7\n");
    for (i, t) in torsions.iter().enumerate() {
        let _ = write!(s, "{i}");
        for a in t.angles() {
            let _ = write!(s, ",{a}");
        }
        s.push('\n');
    }
    s
}
