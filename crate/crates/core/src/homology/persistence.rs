//! Cohomology-based Vietoris–Rips persistence with implicit coboundaries,
//! clearing and emergent pairs.
//!
//! Simplices of one dimension are totally ordered by `(diameter ascending,
//! index descending)`, where the index is the combinatorial number system
//! rank of the vertex set. Columns are reduced in the reverse of that order
//! and the pivot of a coboundary column is its first cofacet in it.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use super::simplex::{is_prime, Binomial, PrimeField};
use super::{HomologyError, Interval, PersistenceDiagram, DEFAULT_SIMPLEX_BUDGET};
use crate::metrics::DistanceMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceOptions {
    pub field_char: u32,
    pub max_dim: usize,
    pub r_max: f64,
    /// Cap on stored edges plus triangles.
    pub budget: usize,
    /// Record representative cocycles of the dimension-1 intervals.
    pub cocycles: bool,
}

impl PersistenceOptions {
    pub fn new(field_char: u32, max_dim: usize, r_max: f64) -> Self {
        Self { field_char, max_dim, r_max, budget: DEFAULT_SIMPLEX_BUDGET, cocycles: false }
    }
}

/// Representative `F_p` cocycle of a dimension-1 interval. Edge `[hi, lo]`
/// (`hi > lo`) is oriented from `hi` to `lo`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cocycle {
    pub interval: Interval,
    /// Combinatorial index of the column simplex, used for tie-breaking.
    pub column: u64,
    pub edges: Vec<([usize; 2], u64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceResult {
    pub diagram: PersistenceDiagram,
    pub cocycles: Vec<Cocycle>,
}

/// VR persistence over `F_p` up to `max_dim`, truncated at `r_max`.
pub fn persistence(
    d: &DistanceMatrix,
    field_char: u32,
    max_dim: usize,
    r_max: f64,
) -> Result<PersistenceDiagram, HomologyError> {
    persistence_with(d, &PersistenceOptions::new(field_char, max_dim, r_max)).map(|r| r.diagram)
}

pub fn persistence_with(d: &DistanceMatrix, opts: &PersistenceOptions) -> Result<PersistenceResult, HomologyError> {
    if !is_prime(opts.field_char) {
        return Err(HomologyError::InvalidPrime(opts.field_char));
    }
    if opts.max_dim > 2 {
        return Err(HomologyError::InvalidDimension(opts.max_dim));
    }
    if !(opts.r_max > 0.0) {
        return Err(HomologyError::InvalidThreshold(opts.r_max));
    }
    let n = d.size();
    let min_positive = d.as_slice().iter().copied().filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min);
    let mut intervals = vec![Vec::new(); opts.max_dim + 1];
    let mut cocycles = Vec::new();
    if n == 0 {
        return Ok(PersistenceResult {
            diagram: PersistenceDiagram::new(opts.field_char, opts.r_max, min_positive, intervals),
            cocycles,
        });
    }
    let cx = Complex::new(d, opts.r_max, opts.max_dim);
    let field = PrimeField::new(opts.field_char);

    let mut edges: Vec<(f64, u64)> = Vec::new();
    for u in 0..n {
        for &v in &cx.nbrs[u] {
            let v = v as usize;
            if v < u {
                edges.push((d.get(u, v), cx.binom.index(&[u, v])));
            }
        }
    }
    if edges.len() > opts.budget {
        return Err(HomologyError::CapacityExceeded { count: edges.len(), budget: opts.budget });
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut uf = UnionFind::new(n);
    let mut killing: HashSet<u64> = HashSet::new();
    let mut verts = Vec::with_capacity(4);
    for &(diam, idx) in &edges {
        cx.binom.vertices(idx, 1, n, &mut verts);
        if uf.union(verts[0], verts[1]) {
            killing.insert(idx);
            if diam > 0.0 {
                intervals[0].push(Interval::new(0.0, diam));
            }
        }
    }
    for _ in 0..uf.components() {
        intervals[0].push(Interval::new(0.0, f64::INFINITY));
    }
    if opts.max_dim >= 1 {
        let mut columns: Vec<(f64, u64)> = edges.iter().copied().filter(|e| !killing.contains(&e.1)).collect();
        drop(killing);
        sort_columns(&mut columns);
        let out = cx.reduce(1, &columns, &field, opts.cocycles);
        intervals[1] = out.intervals;
        cocycles = out.cocycles;
        drop(columns);
        if opts.max_dim >= 2 {
            let mut columns = cx.triangles(&out.pivots, opts.budget.saturating_sub(edges.len()))?;
            drop(out.pivots);
            sort_columns(&mut columns);
            intervals[2] = cx.reduce(2, &columns, &field, false).intervals;
        }
    }
    Ok(PersistenceResult {
        diagram: PersistenceDiagram::new(opts.field_char, opts.r_max, min_positive, intervals),
        cocycles,
    })
}

/// Reverse filtration order: diameter descending, index ascending.
fn sort_columns(c: &mut [(f64, u64)]) {
    c.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        match self.rank[a].cmp(&self.rank[b]) {
            Ordering::Less => self.parent[a] = b,
            Ordering::Greater => self.parent[b] = a,
            Ordering::Equal => {
                self.parent[b] = a;
                self.rank[a] += 1;
            }
        }
        true
    }

    fn components(&mut self) -> usize {
        (0..self.parent.len()).filter(|&x| self.find(x) == x).count()
    }
}

/// Heap entry; the heap maximum is the earliest simplex in filtration order.
#[derive(Debug, Clone, Copy)]
struct Entry {
    diam: f64,
    index: u64,
    coef: u64,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.diam.total_cmp(&self.diam).then(self.index.cmp(&other.index))
    }
}

struct Owner {
    coef: u64,
    simplex: u64,
    diam: f64,
    /// Reduction column when it is more than the column simplex itself.
    column: Option<Box<[(u64, f64, u64)]>>,
}

struct Reduced {
    intervals: Vec<Interval>,
    pivots: HashSet<u64>,
    cocycles: Vec<Cocycle>,
}

struct Complex<'a> {
    d: &'a DistanceMatrix,
    n: usize,
    r_max: f64,
    binom: Binomial,
    /// Neighbours within `r_max`, in decreasing vertex order.
    nbrs: Vec<Vec<u32>>,
}

impl<'a> Complex<'a> {
    fn new(d: &'a DistanceMatrix, r_max: f64, max_dim: usize) -> Self {
        let n = d.size();
        let nbrs = (0..n)
            .map(|u| {
                let row = d.row(u);
                (0..n).rev().filter(|&v| v != u && row[v] <= r_max).map(|v| v as u32).collect()
            })
            .collect();
        Self { d, n, r_max, binom: Binomial::new(n, max_dim + 2), nbrs }
    }

    /// Cofacets of the simplex with decreasing vertices `s`, in decreasing
    /// index order, as `(index, diameter, sign)`.
    fn cofacets(&self, s: &[usize], diam: f64, out: &mut Vec<(u64, f64, bool)>) {
        out.clear();
        let pivot = *s.iter().min_by_key(|&&u| self.nbrs[u].len()).expect("nonempty simplex");
        let mut tau = [0usize; 5];
        let k = s.len();
        'cand: for &w in &self.nbrs[pivot] {
            let w = w as usize;
            let mut dw = diam;
            for &u in s {
                if u == w {
                    continue 'cand;
                }
                let x = self.d.get(u, w);
                if x > self.r_max {
                    continue 'cand;
                }
                dw = dw.max(x);
            }
            let j = s.iter().take_while(|&&u| u > w).count();
            tau[..j].copy_from_slice(&s[..j]);
            tau[j] = w;
            tau[j + 1..=k].copy_from_slice(&s[j..]);
            out.push((self.binom.index(&tau[..=k]), dw, j % 2 == 1));
        }
    }

    #[cfg(test)]
    fn simplex_diam(&self, s: &[usize]) -> f64 {
        let mut m = 0.0f64;
        for a in 0..s.len() {
            for b in (a + 1)..s.len() {
                m = m.max(self.d.get(s[a], s[b]));
            }
        }
        m
    }

    fn triangles(&self, cleared: &HashSet<u64>, budget: usize) -> Result<Vec<(f64, u64)>, HomologyError> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for &v in &self.nbrs[u] {
                let v = v as usize;
                if v >= u {
                    continue;
                }
                let duv = self.d.get(u, v);
                for &w in &self.nbrs[v] {
                    let w = w as usize;
                    if w >= v {
                        continue;
                    }
                    let duw = self.d.get(u, w);
                    if duw > self.r_max {
                        continue;
                    }
                    let idx = self.binom.index(&[u, v, w]);
                    if cleared.contains(&idx) {
                        continue;
                    }
                    if out.len() >= budget {
                        return Err(HomologyError::CapacityExceeded { count: out.len() + 1, budget });
                    }
                    out.push((duv.max(duw).max(self.d.get(v, w)), idx));
                }
            }
        }
        Ok(out)
    }

    fn reduce(&self, dim: usize, columns: &[(f64, u64)], field: &PrimeField, want_cocycles: bool) -> Reduced {
        let p = field.p();
        let mut pivot_of: HashMap<u64, Owner> = HashMap::new();
        let mut intervals = Vec::new();
        let mut cocycles = Vec::new();
        let mut verts = Vec::with_capacity(4);
        let mut cof = Vec::new();
        let mut heap: BinaryHeap<Entry> = BinaryHeap::new();
        let mut work: Vec<(u64, f64, u64)> = Vec::new();
        let sign = |neg: bool| if neg { p - 1 } else { 1 };
        for &(diam, idx) in columns {
            self.binom.vertices(idx, dim, self.n, &mut verts);
            self.cofacets(&verts, diam, &mut cof);
            if let Some(&(tau, _, neg)) = cof.iter().find(|c| c.1 == diam) {
                if !pivot_of.contains_key(&tau) {
                    pivot_of.insert(tau, Owner { coef: sign(neg), simplex: idx, diam, column: None });
                    continue;
                }
            }
            heap.clear();
            work.clear();
            work.push((idx, diam, 1));
            heap.extend(cof.iter().map(|&(index, diam, neg)| Entry { diam, index, coef: sign(neg) }));
            loop {
                let Some(piv) = pop_pivot(&mut heap, field) else {
                    intervals.push(Interval::new(diam, f64::INFINITY));
                    if want_cocycles {
                        cocycles.push(self.cocycle(Interval::new(diam, f64::INFINITY), idx, &mut work, field));
                    }
                    break;
                };
                match pivot_of.get(&piv.index) {
                    Some(owner) => {
                        let factor = field.mul(field.neg(piv.coef), field.inv(owner.coef));
                        heap.push(piv);
                        let single = [(owner.simplex, owner.diam, 1u64)];
                        let column: &[(u64, f64, u64)] = owner.column.as_deref().unwrap_or(&single);
                        for &(s, sd, c) in column {
                            let c = field.mul(c, factor);
                            work.push((s, sd, c));
                            self.binom.vertices(s, dim, self.n, &mut verts);
                            self.cofacets(&verts, sd, &mut cof);
                            heap.extend(cof.iter().map(|&(index, diam, neg)| Entry {
                                diam,
                                index,
                                coef: field.mul(c, sign(neg)),
                            }));
                        }
                    }
                    None => {
                        let interval = Interval::new(diam, piv.diam);
                        if piv.diam > diam {
                            intervals.push(interval);
                        }
                        let merged = merge(&mut work, field);
                        if want_cocycles && piv.diam > diam {
                            cocycles.push(self.cocycle_from(interval, idx, &merged));
                        }
                        let column = if merged.len() == 1 && merged[0].0 == idx && merged[0].2 == 1 {
                            None
                        } else {
                            Some(merged.into_boxed_slice())
                        };
                        pivot_of.insert(piv.index, Owner { coef: piv.coef, simplex: idx, diam, column });
                        break;
                    }
                }
            }
        }
        Reduced { intervals, pivots: pivot_of.into_keys().collect(), cocycles }
    }

    fn cocycle(&self, interval: Interval, column: u64, work: &mut Vec<(u64, f64, u64)>, field: &PrimeField) -> Cocycle {
        let merged = merge(work, field);
        self.cocycle_from(interval, column, &merged)
    }

    fn cocycle_from(&self, interval: Interval, column: u64, merged: &[(u64, f64, u64)]) -> Cocycle {
        let mut verts = Vec::with_capacity(2);
        let edges = merged
            .iter()
            .map(|&(s, _, c)| {
                self.binom.vertices(s, 1, self.n, &mut verts);
                ([verts[0], verts[1]], c)
            })
            .collect();
        Cocycle { interval, column, edges }
    }
}

/// Pops the earliest entry with nonzero accumulated coefficient.
fn pop_pivot(heap: &mut BinaryHeap<Entry>, field: &PrimeField) -> Option<Entry> {
    while let Some(mut top) = heap.pop() {
        while let Some(next) = heap.peek() {
            if next.index != top.index {
                break;
            }
            top.coef = field.add(top.coef, next.coef);
            heap.pop();
        }
        if top.coef != 0 {
            return Some(top);
        }
    }
    None
}

/// Sums coefficients of equal simplices and drops zeros.
fn merge(work: &mut [(u64, f64, u64)], field: &PrimeField) -> Vec<(u64, f64, u64)> {
    work.sort_by_key(|e| e.0);
    let mut out: Vec<(u64, f64, u64)> = Vec::with_capacity(work.len());
    for &(s, d, c) in work.iter() {
        match out.last_mut() {
            Some(last) if last.0 == s => last.2 = field.add(last.2, c),
            _ => out.push((s, d, c)),
        }
    }
    out.retain(|e| e.2 != 0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::betti_at;

    fn square() -> DistanceMatrix {
        let s = 2f64.sqrt();
        DistanceMatrix::from_vec(4, vec![0.0, 1.0, s, 1.0, 1.0, 0.0, 1.0, s, s, 1.0, 0.0, 1.0, 1.0, s, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn single_point() {
        let d = DistanceMatrix::zeros(1);
        let diag = persistence(&d, 2, 2, 1.0).unwrap();
        assert_eq!(diag.dim(0), &[Interval::new(0.0, f64::INFINITY)]);
        assert_eq!(betti_at(&diag, 0.3), vec![1, 0, 0]);
    }

    #[test]
    fn square_diagram() {
        for p in [2, 3] {
            let diag = persistence(&square(), p, 2, 2.0).unwrap();
            assert_eq!(diag.dim(0).len(), 4);
            assert_eq!(diag.dim(0).iter().filter(|i| i.is_essential()).count(), 1);
            assert_eq!(diag.dim(1), &[Interval::new(1.0, 2f64.sqrt())]);
            assert!(diag.dim(2).is_empty());
            assert_eq!(betti_at(&diag, 1.2), vec![1, 1, 0]);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(persistence(&square(), 4, 1, 1.0), Err(HomologyError::InvalidPrime(4))));
        assert!(matches!(persistence(&square(), 2, 3, 1.0), Err(HomologyError::InvalidDimension(3))));
        let opts = PersistenceOptions { budget: 3, ..PersistenceOptions::new(2, 1, 2.0) };
        assert!(matches!(persistence_with(&square(), &opts), Err(HomologyError::CapacityExceeded { .. })));
    }

    #[test]
    fn cofacets_are_in_decreasing_index_order() {
        let n = 9;
        let d = DistanceMatrix::from_fn(n, |i, j| 1.0 + ((i * 7 + j * 3) % 5) as f64);
        let cx = Complex::new(&d, 10.0, 2);
        let mut out = Vec::new();
        cx.cofacets(&[6, 3], d.get(6, 3), &mut out);
        assert_eq!(out.len(), n - 2);
        assert!(out.windows(2).all(|w| w[0].0 > w[1].0));
        for &(idx, diam, _) in &out {
            let mut v = Vec::new();
            cx.binom.vertices(idx, 2, n, &mut v);
            assert_eq!(cx.simplex_diam(&v), diam);
        }
    }
}
