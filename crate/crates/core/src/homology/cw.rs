//! Finite CW complexes given by integer cellular boundary matrices, and their
//! Betti numbers over prime fields.
//!
//! Text format (`#` starts a comment, blank lines are ignored):
//!
//! ```text
//! cells 2 4 4          # number of cells in dimensions 0, 1, 2, ...
//! boundary 1           # rows = 0-cells, columns = 1-cells
//! -1 0 -1 -1
//!  1 0  1  1
//! boundary 2           # rows = 1-cells, columns = 2-cells
//! ...
//! ```
//!
//! Every `boundary q` block for `q = 1..top` is required; a block for a
//! dimension with no cells (on either side) has no rows or empty rows.

use super::simplex::{is_prime, PrimeField};
use super::HomologyError;

/// Cell counts per dimension and the boundary matrices `∂_q`, `q ≥ 1`.
/// `boundaries[q - 1][i][j]` is the incidence of (q-1)-cell `i` in the
/// boundary of q-cell `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CWComplexDescription {
    pub cells: Vec<usize>,
    pub boundaries: Vec<Vec<Vec<i64>>>,
}

impl CWComplexDescription {
    /// Checks shapes and `∂_{q-1} ∘ ∂_q = 0` over the integers.
    pub fn new(cells: Vec<usize>, boundaries: Vec<Vec<Vec<i64>>>) -> Result<Self, HomologyError> {
        let c = Self { cells, boundaries };
        c.validate()?;
        Ok(c)
    }

    pub fn top_dim(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }

    fn validate(&self) -> Result<(), HomologyError> {
        if self.boundaries.len() != self.top_dim() {
            return Err(HomologyError::InvalidComplex(format!(
                "{} boundary matrices for top dimension {}",
                self.boundaries.len(),
                self.top_dim()
            )));
        }
        for (k, m) in self.boundaries.iter().enumerate() {
            let (rows, cols) = (self.cells[k], self.cells[k + 1]);
            if m.len() != rows || m.iter().any(|r| r.len() != cols) {
                return Err(HomologyError::InvalidComplex(format!("boundary {} must be {rows}×{cols}", k + 1)));
            }
        }
        for k in 1..self.boundaries.len() {
            let (a, b) = (&self.boundaries[k - 1], &self.boundaries[k]);
            for (i, row) in a.iter().enumerate() {
                for j in 0..self.cells[k + 1] {
                    let s: i64 = row.iter().enumerate().map(|(m, x)| x * b[m][j]).sum();
                    if s != 0 {
                        return Err(HomologyError::InvalidComplex(format!(
                            "boundary of boundary is {s} at ({i}, {j}) in dimension {}",
                            k + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Subcomplex on the given cells; `keep[q]` lists kept q-cells. Faces of
    /// kept cells must be kept.
    pub fn subcomplex(&self, keep: &[Vec<usize>]) -> Result<Self, HomologyError> {
        let cells: Vec<usize> = keep.iter().map(Vec::len).collect();
        let mut boundaries = Vec::new();
        for q in 1..keep.len() {
            let m = &self.boundaries[q - 1];
            for &j in &keep[q] {
                for (i, row) in m.iter().enumerate() {
                    if row[j] != 0 && !keep[q - 1].contains(&i) {
                        return Err(HomologyError::InvalidComplex(format!(
                            "{q}-cell {j} has dropped face {i}"
                        )));
                    }
                }
            }
            boundaries.push(keep[q - 1].iter().map(|&i| keep[q].iter().map(|&j| m[i][j]).collect()).collect());
        }
        Self::new(cells, boundaries)
    }

    pub fn parse(text: &str) -> Result<Self, HomologyError> {
        let err = |m: String| HomologyError::InvalidComplex(m);
        let mut cells: Option<Vec<usize>> = None;
        let mut boundaries: Vec<Vec<Vec<i64>>> = Vec::new();
        let mut current: Option<usize> = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            match words.next() {
                Some("cells") => {
                    let v: Result<Vec<usize>, _> = words.map(str::parse).collect();
                    let v = v.map_err(|e| err(format!("line {}: {e}", ln + 1)))?;
                    boundaries = vec![Vec::new(); v.len().saturating_sub(1)];
                    cells = Some(v);
                }
                Some("boundary") => {
                    let q: usize = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| err(format!("line {}: boundary needs a dimension", ln + 1)))?;
                    if q == 0 || q > boundaries.len() {
                        return Err(err(format!("line {}: no boundary {q}", ln + 1)));
                    }
                    current = Some(q);
                }
                Some(_) => {
                    let q = current.ok_or_else(|| err(format!("line {}: row outside a boundary block", ln + 1)))?;
                    let row: Result<Vec<i64>, _> = line.split_whitespace().map(str::parse).collect();
                    boundaries[q - 1].push(row.map_err(|e| err(format!("line {}: {e}", ln + 1)))?);
                }
                None => {}
            }
        }
        let cells = cells.ok_or_else(|| err("missing cells line".into()))?;
        // Blocks for dimensions without columns may omit their rows.
        for (k, m) in boundaries.iter_mut().enumerate() {
            if m.is_empty() && cells[k + 1] == 0 {
                *m = vec![Vec::new(); cells[k]];
            }
        }
        Self::new(cells, boundaries)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("cells {}\n", self.cells.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "));
        for (k, m) in self.boundaries.iter().enumerate() {
            s.push_str(&format!("boundary {}\n", k + 1));
            for row in m {
                s.push_str(&row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
                s.push('\n');
            }
        }
        s
    }
}

/// Rank over `F_p` by Gaussian elimination.
pub fn rank_mod_p(m: &[Vec<i64>], p: u32) -> usize {
    let f = PrimeField::new(p);
    let mut a: Vec<Vec<u64>> = m.iter().map(|r| r.iter().map(|&x| f.from_i64(x)).collect()).collect();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| a[r][c] != 0) else { continue };
        a.swap(rank, piv);
        let inv = f.inv(a[rank][c]);
        for x in a[rank].iter_mut() {
            *x = f.mul(*x, inv);
        }
        for r in 0..rows {
            if r != rank && a[r][c] != 0 {
                let factor = a[r][c];
                for k in 0..cols {
                    let sub = f.mul(factor, a[rank][k]);
                    a[r][k] = f.add(a[r][k], f.neg(sub));
                }
            }
        }
        rank += 1;
    }
    rank
}

/// `β_q = dim C_q - rank ∂_q - rank ∂_{q+1}` over `F_p`.
pub fn cw_betti(c: &CWComplexDescription, field_char: u32) -> Result<Vec<usize>, HomologyError> {
    if !is_prime(field_char) {
        return Err(HomologyError::InvalidPrime(field_char));
    }
    c.validate()?;
    let ranks: Vec<usize> = c.boundaries.iter().map(|m| rank_mod_p(m, field_char)).collect();
    Ok((0..c.cells.len())
        .map(|q| {
            let into = if q == 0 { 0 } else { ranks[q - 1] };
            let out = ranks.get(q).copied().unwrap_or(0);
            c.cells[q] - into - out
        })
        .collect())
}

/// Cell models of the cyclooctane conformation space and its cyclic quotient.
pub mod models {
    use super::CWComplexDescription;

    /// A sphere and a Klein bottle meeting in two disjoint circles `a`, `b`.
    ///
    /// 0-cells `v ∈ a`, `w ∈ b`; 1-cells `a`, `b` (loops), `c` (arc `v → w`
    /// on the Klein bottle), `d` (arc `v → w` on the sphere); 2-cells the caps
    /// `D_a`, `D_b`, the sphere band `B` (word `a d b⁻¹ d⁻¹`) and the Klein
    /// bottle cell `C` (word `a a c b⁻¹ b⁻¹ c⁻¹`).
    pub fn sphere_and_klein_bottle() -> CWComplexDescription {
        CWComplexDescription::new(
            vec![2, 4, 4],
            vec![
                vec![vec![0, 0, -1, -1], vec![0, 0, 1, 1]],
                vec![vec![1, 0, 1, 2], vec![0, 1, -1, -2], vec![0, 0, 0, 0], vec![0, 0, 0, 0]],
            ],
        )
        .expect("valid model")
    }

    /// Named pieces of [`sphere_and_klein_bottle`]: `sphere` and `klein`.
    pub fn sphere_and_klein_piece(name: &str) -> Option<CWComplexDescription> {
        let full = sphere_and_klein_bottle();
        let keep = match name {
            "sphere" => vec![vec![0, 1], vec![0, 1, 3], vec![0, 1, 2]],
            "klein" => vec![vec![0, 1], vec![0, 1, 2], vec![3]],
            "full" => vec![vec![0, 1], vec![0, 1, 2, 3], vec![0, 1, 2, 3]],
            _ => return None,
        };
        full.subcomplex(&keep).ok()
    }

    /// The cyclic quotient: a disc `A'` and two Möbius strips `B'`, `C'`
    /// glued along their common boundary circle `a1 a2`.
    ///
    /// 0-cells `v1`, `v2`; 1-cells `a1: v1 → v2`, `a2: v2 → v1`, `c`, `d`
    /// (both `v1 → v2`); 2-cells `∂A' = a1 + a2`, `∂B' = a1 - a2 - 2c`,
    /// `∂C' = a1 - a2 - 2d`.
    pub fn cyclic_quotient() -> CWComplexDescription {
        CWComplexDescription::new(
            vec![2, 4, 3],
            vec![
                vec![vec![-1, 1, -1, -1], vec![1, -1, 1, 1]],
                vec![vec![1, 1, 1], vec![1, -1, -1], vec![0, -2, 0], vec![0, 0, -2]],
            ],
        )
        .expect("valid model")
    }

    /// Subcomplex of [`cyclic_quotient`] spanned by the named 2-cells
    /// (`"A"`, `"B"`, `"C"`) and their faces.
    pub fn cyclic_quotient_piece(parts: &[&str]) -> Option<CWComplexDescription> {
        let mut two = Vec::new();
        let mut one = vec![0, 1];
        for part in parts {
            match *part {
                "A" => two.push(0),
                "B" => {
                    two.push(1);
                    one.push(2);
                }
                "C" => {
                    two.push(2);
                    one.push(3);
                }
                _ => return None,
            }
        }
        two.sort_unstable();
        two.dedup();
        one.sort_unstable();
        one.dedup();
        cyclic_quotient().subcomplex(&[vec![0, 1], one, two]).ok()
    }
}
