//! Circular coordinates from persistent 1-cocycles.

use std::collections::HashMap;

use super::persistence::{persistence_with, Cocycle, PersistenceOptions};
use super::{HomologyError, Interval, DEFAULT_SIMPLEX_BUDGET};
use crate::metrics::DistanceMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct CircularOptions {
    pub prime: u32,
    /// Cutoff of the persistence computation used to rank classes; defaults
    /// to `min(2r, max distance)`.
    pub r_max: Option<f64>,
    pub budget: usize,
}

impl Default for CircularOptions {
    fn default() -> Self {
        Self { prime: 47, r_max: None, budget: DEFAULT_SIMPLEX_BUDGET }
    }
}

/// A map to `R/Z` on the vertices of the VR complex at scale `r`, with the
/// harmonic edge form it integrates.
#[derive(Debug, Clone, PartialEq)]
pub struct CircularCoordinate {
    pub values: Vec<f64>,
    pub source_interval: Interval,
    pub prime: u32,
    pub scale: f64,
    /// Harmonic representative on edge `(hi, lo)`, oriented from `hi` to `lo`.
    theta: HashMap<(usize, usize), f64>,
}

impl CircularCoordinate {
    /// Form value on the oriented edge `u → v`, if it is an edge.
    pub fn edge_value(&self, u: usize, v: usize) -> Option<f64> {
        if u > v {
            self.theta.get(&(u, v)).copied()
        } else {
            self.theta.get(&(v, u)).map(|t| -t)
        }
    }

    /// Largest `|θ|` over all edges.
    pub fn max_edge_value(&self) -> f64 {
        self.theta.values().fold(0.0, |m, t| m.max(t.abs()))
    }

    /// Coordinate whose form is zero, for tests and degenerate inputs.
    pub fn constant(d: &DistanceMatrix, r: f64) -> Self {
        let mut theta = HashMap::new();
        for u in 0..d.size() {
            for v in 0..u {
                if d.get(u, v) <= r {
                    theta.insert((u, v), 0.0);
                }
            }
        }
        Self { values: vec![0.0; d.size()], source_interval: Interval::new(0.0, f64::INFINITY), prime: 2, scale: r, theta }
    }
}

/// Most persistent interval alive at `r`; ties go to the earlier birth, then
/// the smaller column index.
pub fn most_prominent_alive(cocycles: &[Cocycle], r: f64) -> Option<&Cocycle> {
    cocycles.iter().filter(|c| c.interval.contains(r)).min_by(|a, b| {
        b.interval
            .persistence()
            .total_cmp(&a.interval.persistence())
            .then(a.interval.birth.total_cmp(&b.interval.birth))
            .then(a.column.cmp(&b.column))
    })
}

/// Circular coordinate of the most prominent dimension-1 class alive at `r`:
/// the `F_p` cocycle is lifted to `(-p/2, p/2)`, checked to be an integral
/// cocycle on the VR complex at `r`, and corrected by the least-squares
/// coboundary.
pub fn circular_coordinate(d: &DistanceMatrix, r: f64, opts: &CircularOptions) -> Result<CircularCoordinate, HomologyError> {
    if !(r > 0.0) {
        return Err(HomologyError::InvalidThreshold(r));
    }
    let n = d.size();
    let components = components_at(d, r);
    if components != 1 {
        return Err(HomologyError::Disconnected { r, components });
    }
    let r_max = opts.r_max.unwrap_or_else(|| (2.0 * r).min(d.max())).max(r);
    let popts = PersistenceOptions { field_char: opts.prime, max_dim: 1, r_max, budget: opts.budget, cocycles: true };
    let result = persistence_with(d, &popts)?;
    let chosen = most_prominent_alive(&result.cocycles, r).ok_or(HomologyError::NoProminentClass { r })?;
    let p = opts.prime as i64;
    let lift = |c: u64| {
        let c = c as i64;
        if c > p / 2 {
            c - p
        } else {
            c
        }
    };
    let mut alpha: HashMap<(usize, usize), i64> = HashMap::new();
    for u in 0..n {
        for v in 0..u {
            if d.get(u, v) <= r {
                alpha.insert((u, v), 0);
            }
        }
    }
    for &([hi, lo], c) in &chosen.edges {
        if let Some(a) = alpha.get_mut(&(hi, lo)) {
            *a = lift(c);
        }
    }
    check_integral(d, r, &alpha)?;
    let f = least_squares(n, &alpha);
    let theta: HashMap<(usize, usize), f64> =
        alpha.iter().map(|(&(hi, lo), &a)| ((hi, lo), a as f64 - (f[lo] - f[hi]))).collect();
    let values = f.iter().map(|x| (-x).rem_euclid(1.0)).collect();
    Ok(CircularCoordinate { values, source_interval: chosen.interval, prime: opts.prime, scale: r, theta })
}

fn components_at(d: &DistanceMatrix, r: f64) -> usize {
    let n = d.size();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if !seen[v] && d.get(u, v) <= r {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    count
}

/// `δα = α[w1,w2] - α[w0,w2] + α[w0,w1] = 0` on every triangle `w0 > w1 > w2`.
fn check_integral(d: &DistanceMatrix, r: f64, alpha: &HashMap<(usize, usize), i64>) -> Result<(), HomologyError> {
    let n = d.size();
    let nbrs: Vec<Vec<usize>> = (0..n).map(|u| (0..u).filter(|&v| d.get(u, v) <= r).collect()).collect();
    for w0 in 0..n {
        for &w1 in &nbrs[w0] {
            for &w2 in &nbrs[w1] {
                if d.get(w0, w2) > r {
                    continue;
                }
                let value = alpha[&(w1, w2)] - alpha[&(w0, w2)] + alpha[&(w0, w1)];
                if value != 0 {
                    return Err(HomologyError::CocycleNotIntegral { triangle: [w0, w1, w2], value });
                }
            }
        }
    }
    Ok(())
}

/// Minimises `Σ_e (α_e - (f_lo - f_hi))²` by conjugate gradients on the
/// graph Laplacian; the solution has zero mean.
fn least_squares(n: usize, alpha: &HashMap<(usize, usize), i64>) -> Vec<f64> {
    let mut edges: Vec<(usize, usize, f64)> = alpha.iter().map(|(&(h, l), &a)| (h, l, a as f64)).collect();
    edges.sort_by_key(|e| (e.0, e.1));
    let mut b = vec![0.0; n];
    let mut degree = vec![0.0; n];
    for &(h, l, a) in &edges {
        b[l] += a;
        b[h] -= a;
        degree[h] += 1.0;
        degree[l] += 1.0;
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        for (o, (xi, di)) in out.iter_mut().zip(x.iter().zip(&degree)) {
            *o = di * xi;
        }
        for &(h, l, _) in &edges {
            out[h] -= x[l];
            out[l] -= x[h];
        }
    };
    let mut x = vec![0.0; n];
    let mut res = b.clone();
    let mut dir = res.clone();
    let mut ad = vec![0.0; n];
    let mut rr: f64 = res.iter().map(|v| v * v).sum();
    let stop = 1e-28 * rr.max(1.0);
    for _ in 0..(10 * n + 100) {
        if rr <= stop {
            break;
        }
        apply(&dir, &mut ad);
        let step = rr / dir.iter().zip(&ad).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += step * dir[i];
            res[i] -= step * ad[i];
        }
        let next: f64 = res.iter().map(|v| v * v).sum();
        let beta = next / rr;
        rr = next;
        for i in 0..n {
            dir[i] = res[i] + beta * dir[i];
        }
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    x.iter().map(|v| v - mean).collect()
}

/// Sum of the edge form along a closed vertex path.
pub fn winding_sum(coord: &CircularCoordinate, cycle: &[usize]) -> Result<f64, HomologyError> {
    if cycle.len() < 2 || cycle.first() != cycle.last() {
        return Err(HomologyError::NotACycle);
    }
    let mut total = 0.0;
    for w in cycle.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        total += coord.edge_value(w[0], w[1]).ok_or(HomologyError::NotEdges(w[0], w[1]))?;
    }
    Ok(total)
}

/// [`winding_sum`] rounded to the nearest integer.
pub fn winding_number(coord: &CircularCoordinate, cycle: &[usize]) -> Result<i64, HomologyError> {
    winding_sum(coord, cycle).map(|s| s.round() as i64)
}
