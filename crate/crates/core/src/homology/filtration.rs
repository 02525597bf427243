use super::{HomologyError, DEFAULT_SIMPLEX_BUDGET};
use crate::metrics::DistanceMatrix;

/// A simplex with its vertices in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct FiltrationSimplex {
    pub vertices: Vec<usize>,
    pub diameter: f64,
}

impl FiltrationSimplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Explicit Vietoris–Rips filtration, sorted by diameter, then dimension,
/// then vertices lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    pub simplices: Vec<FiltrationSimplex>,
    pub r_max: f64,
}

impl Filtration {
    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn count_dim(&self, q: usize) -> usize {
        self.simplices.iter().filter(|s| s.dim() == q).count()
    }
}

/// All simplices of dimension `≤ max_dim + 1` with diameter `≤ r_max`.
pub fn build_filtration(d: &DistanceMatrix, max_dim: usize, r_max: f64) -> Result<Filtration, HomologyError> {
    build_filtration_with_budget(d, max_dim, r_max, DEFAULT_SIMPLEX_BUDGET)
}

pub fn build_filtration_with_budget(
    d: &DistanceMatrix,
    max_dim: usize,
    r_max: f64,
    budget: usize,
) -> Result<Filtration, HomologyError> {
    if max_dim > 2 {
        return Err(HomologyError::InvalidDimension(max_dim));
    }
    if !(r_max > 0.0) {
        return Err(HomologyError::InvalidThreshold(r_max));
    }
    let n = d.size();
    let mut simplices = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    for v in 0..n {
        stack.clear();
        stack.push(v);
        extend(d, r_max, max_dim + 1, &mut stack, 0.0, &mut simplices, budget)?;
    }
    simplices.sort_by(|a: &FiltrationSimplex, b| {
        a.diameter
            .total_cmp(&b.diameter)
            .then(a.vertices.len().cmp(&b.vertices.len()))
            .then_with(|| a.vertices.cmp(&b.vertices))
    });
    Ok(Filtration { simplices, r_max })
}

fn extend(
    d: &DistanceMatrix,
    r_max: f64,
    top: usize,
    stack: &mut Vec<usize>,
    diam: f64,
    out: &mut Vec<FiltrationSimplex>,
    budget: usize,
) -> Result<(), HomologyError> {
    if out.len() >= budget {
        return Err(HomologyError::CapacityExceeded { count: out.len() + 1, budget });
    }
    out.push(FiltrationSimplex { vertices: stack.clone(), diameter: diam });
    if stack.len() > top {
        return Ok(());
    }
    let last = *stack.last().expect("nonempty");
    for w in (last + 1)..d.size() {
        let mut dw = diam;
        let mut ok = true;
        for &u in stack.iter() {
            let x = d.get(u, w);
            if x > r_max {
                ok = false;
                break;
            }
            dw = dw.max(x);
        }
        if ok {
            stack.push(w);
            extend(d, r_max, top, stack, dw, out, budget)?;
            stack.pop();
        }
    }
    Ok(())
}
