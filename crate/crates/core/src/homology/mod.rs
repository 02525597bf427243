//! Vietoris–Rips persistent homology over prime fields, Betti numbers,
//! circular coordinates and Betti numbers of finite CW complexes.

mod cocycle;
pub mod cw;
mod filtration;
mod persistence;
pub mod simplex;

use std::fmt::Write as _;

use thiserror::Error;

pub use cocycle::{circular_coordinate, most_prominent_alive, winding_number, winding_sum, CircularCoordinate, CircularOptions};
pub use cw::{cw_betti, CWComplexDescription};
pub use filtration::{build_filtration, Filtration, FiltrationSimplex};
pub use persistence::{persistence, persistence_with, Cocycle, PersistenceOptions, PersistenceResult};

/// Default cap on the number of stored simplices.
pub const DEFAULT_SIMPLEX_BUDGET: usize = 50_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomologyError {
    #[error("filtration needs {count} simplices, budget is {budget}; lower r_max")]
    CapacityExceeded { count: usize, budget: usize },
    #[error("{0} is not a prime")]
    InvalidPrime(u32),
    #[error("unsupported dimension {0}")]
    InvalidDimension(usize),
    #[error("invalid threshold {0}")]
    InvalidThreshold(f64),
    #[error("VR complex at scale {r} has {components} components")]
    Disconnected { r: f64, components: usize },
    #[error("no dimension-1 interval is alive at scale {r}")]
    NoProminentClass { r: f64 },
    #[error("lifted cocycle has coboundary {value} on triangle {triangle:?}")]
    CocycleNotIntegral { triangle: [usize; 3], value: i64 },
    #[error("vertex path does not return to its start")]
    NotACycle,
    #[error("consecutive vertices {0} and {1} do not span an edge")]
    NotEdges(usize, usize),
    #[error("invalid cell complex: {0}")]
    InvalidComplex(String),
}

/// Half-open interval `[birth, death)`; `death` is infinite for classes
/// alive at the cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub birth: f64,
    pub death: f64,
}

impl Interval {
    pub fn new(birth: f64, death: f64) -> Self {
        Self { birth, death }
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    pub fn contains(&self, r: f64) -> bool {
        self.birth <= r && r < self.death
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// Per-dimension interval multisets over `F_p`, sorted by `(birth, death)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    field_char: u32,
    r_max: f64,
    /// Smallest positive entry of the distance matrix.
    min_positive: f64,
    intervals: Vec<Vec<Interval>>,
}

impl PersistenceDiagram {
    pub fn new(field_char: u32, r_max: f64, min_positive: f64, mut intervals: Vec<Vec<Interval>>) -> Self {
        for v in intervals.iter_mut() {
            v.sort_by(|a, b| a.birth.total_cmp(&b.birth).then(a.death.total_cmp(&b.death)));
        }
        Self { field_char, r_max, min_positive, intervals }
    }

    pub fn field_char(&self) -> u32 {
        self.field_char
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn min_positive_diameter(&self) -> f64 {
        self.min_positive
    }

    pub fn max_dim(&self) -> usize {
        self.intervals.len().saturating_sub(1)
    }

    pub fn dim(&self, q: usize) -> &[Interval] {
        self.intervals.get(q).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn intervals(&self) -> &[Vec<Interval>] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Export lines `dim,birth,death,field`, essential deaths as `inf`.
    pub fn to_text(&self) -> String {
        let mut s = String::from("dim,birth,death,field\n");
        for (q, v) in self.intervals.iter().enumerate() {
            for i in v {
                let death = if i.is_essential() { "inf".to_string() } else { format!("{}", i.death) };
                let _ = writeln!(s, "{q},{},{death},{}", i.birth, self.field_char);
            }
        }
        s
    }
}

/// Number of intervals containing `r`, per dimension.
pub fn betti_at(diag: &PersistenceDiagram, r: f64) -> Vec<usize> {
    diag.intervals.iter().map(|v| v.iter().filter(|i| i.contains(r)).count()).collect()
}

/// Keeps intervals with `death / birth ≥ ratio`, a zero birth counting as the
/// smallest positive diameter; essential intervals are always kept.
pub fn prominent_intervals(diag: &PersistenceDiagram, ratio: f64) -> PersistenceDiagram {
    let floor = diag.min_positive;
    let intervals = diag
        .intervals
        .iter()
        .map(|v| {
            v.iter()
                .copied()
                .filter(|i| {
                    let b = if i.birth > 0.0 { i.birth } else { floor };
                    i.is_essential() || i.death >= ratio * b
                })
                .collect()
        })
        .collect();
    PersistenceDiagram { intervals, ..diag.clone() }
}

/// Betti numbers of the prominent intervals: the count per dimension of
/// intervals kept by [`prominent_intervals`].
pub fn prominent_betti(diag: &PersistenceDiagram, ratio: f64) -> Vec<usize> {
    prominent_intervals(diag, ratio).intervals.iter().map(Vec::len).collect()
}

/// Longest range `[lo, hi]` of breakpoints around `r` on which `betti_at`
/// is constant. Breakpoints are interval endpoints and `r_max`.
pub fn plateau_around(diag: &PersistenceDiagram, r: f64) -> (f64, f64) {
    let mut ends: Vec<f64> = diag
        .intervals
        .iter()
        .flatten()
        .flat_map(|i| [i.birth, i.death])
        .filter(|x| x.is_finite())
        .collect();
    ends.push(diag.r_max);
    ends.sort_by(f64::total_cmp);
    let lo = ends.iter().copied().filter(|&x| x <= r).fold(0.0, f64::max);
    let hi = ends.iter().copied().filter(|&x| x > r).fold(diag.r_max, f64::min);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag() -> PersistenceDiagram {
        let s2 = 2f64.sqrt();
        PersistenceDiagram::new(
            2,
            2.0,
            1.0,
            vec![
                vec![Interval::new(0.0, f64::INFINITY), Interval::new(0.0, 1.0), Interval::new(0.0, 1.0), Interval::new(0.0, 1.0)],
                vec![Interval::new(1.0, s2)],
                vec![],
            ],
        )
    }

    #[test]
    fn betti_and_prominence() {
        let d = diag();
        assert_eq!(betti_at(&d, 1.2), vec![1, 1, 0]);
        assert_eq!(betti_at(&d, 0.5), vec![4, 0, 0]);
        assert_eq!(prominent_intervals(&d, 2.0).dim(1).len(), 0);
        assert_eq!(prominent_intervals(&d, 1.2).dim(1).len(), 1);
        assert_eq!(prominent_betti(&d, 2.0), vec![1, 0, 0]);
        let empty = PersistenceDiagram::new(2, 1.0, 1.0, vec![vec![], vec![]]);
        assert!(prominent_intervals(&empty, 2.0).is_empty());
    }

    #[test]
    fn export_format() {
        let t = diag().to_text();
        assert!(t.starts_with("dim,birth,death,field\n0,0,1,2\n"));
        assert!(t.contains("0,0,inf,2"));
    }

    #[test]
    fn plateau() {
        let d = diag();
        let (lo, hi) = plateau_around(&d, 1.2);
        assert_eq!(lo, 1.0);
        assert!((hi - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(plateau_around(&d, 1.5), (2f64.sqrt(), 2.0));
    }
}
