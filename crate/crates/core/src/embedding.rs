//! Isomap: neighbourhood graphs, graph geodesics, classical MDS and the
//! per-edge distortion of the embedding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::metrics::DistanceMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("target dimension must be at least 1")]
    InvalidDimension,
    #[error("eigen-solver residual {residual:e} exceeds {bound:e}")]
    NotConverged { residual: f64, bound: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeighborhoodRule {
    /// `k` nearest neighbours, symmetrised.
    Knn(usize),
    /// All pairs at distance at most `ε`.
    Eps(f64),
}

impl Default for NeighborhoodRule {
    fn default() -> Self {
        Self::Knn(12)
    }
}

/// Weighted undirected graph; adjacency lists are sorted by vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl NeighborhoodGraph {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (u, v, w) in edges {
            if u != v && w > 0.0 {
                adj[u].push((v, w));
                adj[v].push((u, w));
            }
        }
        for a in adj.iter_mut() {
            a.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
            a.dedup_by_key(|x| x.0);
        }
        Self { adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    /// Edges `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, a)| a.iter().filter(move |(v, _)| *v > u).map(move |&(v, w)| (u, v, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Zero distances are skipped, so coincident points are never joined.
pub fn neighborhood_graph(d: &DistanceMatrix, rule: NeighborhoodRule) -> NeighborhoodGraph {
    let n = d.size();
    let edges: Vec<(usize, usize, f64)> = match rule {
        NeighborhoodRule::Knn(k) => (0..n)
            .into_par_iter()
            .flat_map_iter(|u| {
                let row = d.row(u);
                let mut cand: Vec<usize> = (0..n).filter(|&v| v != u && row[v] > 0.0).collect();
                cand.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
                cand.truncate(k);
                cand.into_iter().map(move |v| (u, v, row[v]))
            })
            .collect(),
        NeighborhoodRule::Eps(eps) => (0..n)
            .flat_map(|u| {
                let row = d.row(u);
                ((u + 1)..n).filter(move |&v| row[v] <= eps).map(move |v| (u, v, row[v]))
            })
            .collect(),
    };
    NeighborhoodGraph::from_edges(n, edges)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geodesics {
    /// Shortest-path distances on the largest component.
    pub distances: DistanceMatrix,
    /// Original index of each row of `distances`.
    pub vertices: Vec<usize>,
    pub dropped: usize,
}

/// Connected components, numbered in order of their smallest vertex.
pub fn components(g: &NeighborhoodGraph) -> Vec<usize> {
    let n = g.len();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &(v, _) in g.neighbors(u) {
                if comp[v] == usize::MAX {
                    comp[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    comp
}

#[derive(PartialEq)]
struct Visit(f64, usize);

impl Eq for Visit {}

impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Visit {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Dijkstra from `source`; unreachable vertices get `∞`.
pub fn shortest_paths_from(g: &NeighborhoodGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::from([Visit(0.0, source)]);
    while let Some(Visit(du, u)) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        for &(v, w) in g.neighbors(u) {
            let dv = du + w;
            if dv < dist[v] {
                dist[v] = dv;
                heap.push(Visit(dv, v));
            }
        }
    }
    dist
}

/// Vertex path of a shortest path from `source` to `target`, both included.
pub fn shortest_path(g: &NeighborhoodGraph, source: usize, target: usize) -> Option<Vec<usize>> {
    let mut dist = vec![f64::INFINITY; g.len()];
    let mut prev = vec![usize::MAX; g.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::from([Visit(0.0, source)]);
    while let Some(Visit(du, u)) = heap.pop() {
        if u == target {
            break;
        }
        if du > dist[u] {
            continue;
        }
        for &(v, w) in g.neighbors(u) {
            let dv = du + w;
            if dv < dist[v] {
                dist[v] = dv;
                prev[v] = u;
                heap.push(Visit(dv, v));
            }
        }
    }
    if dist[target].is_infinite() {
        return None;
    }
    let mut path = vec![target];
    while *path.last().expect("nonempty") != source {
        path.push(prev[*path.last().expect("nonempty")]);
    }
    path.reverse();
    Some(path)
}

/// All-pairs shortest paths on the largest component (ties go to the
/// component with the smallest vertex).
pub fn geodesic_distances(g: &NeighborhoodGraph) -> Geodesics {
    let comp = components(g);
    let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; ncomp];
    for &c in &comp {
        sizes[c] += 1;
    }
    let best = (0..ncomp).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap_or(0);
    let vertices: Vec<usize> = (0..g.len()).filter(|&v| comp[v] == best).collect();
    let rows: Vec<Vec<f64>> = vertices
        .par_iter()
        .map(|&s| {
            let d = shortest_paths_from(g, s);
            vertices.iter().map(|&v| d[v]).collect()
        })
        .collect();
    let m = vertices.len();
    let distances = DistanceMatrix::from_fn(m, |i, j| rows[i][j].min(rows[j][i]));
    Geodesics { distances, dropped: g.len() - m, vertices }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// One row per point, `dim` coordinates each.
    pub coords: Vec<Vec<f64>>,
    /// Leading eigenvalues of the MDS operator, descending, including any
    /// that were not used because they are not positive.
    pub spectrum: Vec<f64>,
    pub requested: usize,
    pub dim: usize,
}

impl Embedding {
    pub fn is_rank_deficient(&self) -> bool {
        self.dim < self.requested
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.coords[i].iter().zip(&self.coords[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Rows `index,x0,x1,...`; `labels` gives the index written per row.
    pub fn to_text(&self, labels: &[usize]) -> String {
        let mut s = String::from("index");
        for k in 0..self.dim {
            let _ = write!(s, ",x{k}");
        }
        s.push('\n');
        for (row, idx) in self.coords.iter().zip(labels) {
            let _ = write!(s, "{idx}");
            for x in row {
                let _ = write!(s, ",{x}");
            }
            s.push('\n');
        }
        s
    }
}

/// Below this multiple of `‖B‖_F` an eigenvalue counts as zero.
const ZERO_EIGEN: f64 = 1e-12;
/// Residual bound `‖Bv − λv‖ ≤ RESIDUAL ‖B‖_F` on returned eigenpairs.
const RESIDUAL: f64 = 1e-8;
/// Operators up to this size are diagonalised densely.
const DENSE_LIMIT: usize = 400;

/// Classical multidimensional scaling with the top-`m` positive eigenpairs
/// of `B = −½ J D² J`. Each eigenvector's first non-negligible loading is
/// made positive.
pub fn classical_mds(d: &DistanceMatrix, m: usize) -> Result<Embedding, EmbeddingError> {
    if m == 0 {
        return Err(EmbeddingError::InvalidDimension);
    }
    let n = d.size();
    if n == 0 {
        return Err(EmbeddingError::TooFewPoints { needed: 1, got: 0 });
    }
    let b = double_center(d);
    let norm = b.norm();
    let k = m.min(n);
    let (values, vectors) = if norm == 0.0 {
        (vec![0.0; k], vec![DVector::zeros(n); k])
    } else {
        top_eigenpairs(&b, k, norm)?
    };
    let dim = values.iter().take_while(|&&l| l > ZERO_EIGEN * norm).count();
    for &l in values.iter().skip(dim) {
        if l < 0.0 {
            log::debug!("dropping eigenvalue {l:e}");
        }
    }
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(dim);
    for (l, v) in values.iter().zip(&vectors).take(dim) {
        let mut v = v.clone();
        let big = v.amax();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * big) {
            if *first < 0.0 {
                v = -v;
            }
        }
        cols.push(v * l.sqrt());
    }
    let coords = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    Ok(Embedding { coords, spectrum: values, requested: m, dim })
}

fn double_center(d: &DistanceMatrix) -> DMatrix<f64> {
    let n = d.size();
    let mut b = DMatrix::from_fn(n, n, |i, j| {
        let x = d.get(i, j);
        -0.5 * x * x
    });
    let row_means: Vec<f64> = (0..n).map(|i| b.row(i).sum() / n as f64).collect();
    let total = row_means.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] += total - row_means[i] - row_means[j];
        }
    }
    b
}

/// Largest `k` eigenpairs of the symmetric `b`: Lanczos with full
/// reorthogonalisation, enlarging the Krylov space until every pair meets the
/// residual bound, with a dense fallback.
fn top_eigenpairs(b: &DMatrix<f64>, k: usize, norm: f64) -> Result<(Vec<f64>, Vec<DVector<f64>>), EmbeddingError> {
    let n = b.nrows();
    let bound = RESIDUAL * norm;
    if n <= DENSE_LIMIT {
        return dense_top(b, k, bound);
    }
    let mut steps = 4 * k + 40;
    while steps < n / 2 {
        if let Some(result) = lanczos(b, k, steps, norm, bound) {
            return Ok(result);
        }
        steps *= 2;
    }
    dense_top(b, k, bound)
}

fn dense_top(b: &DMatrix<f64>, k: usize, bound: f64) -> Result<(Vec<f64>, Vec<DVector<f64>>), EmbeddingError> {
    let eig = SymmetricEigen::new(b.clone());
    let mut order: Vec<usize> = (0..b.nrows()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let v = eig.eigenvectors.column(i).into_owned();
        let l = eig.eigenvalues[i];
        let residual = (b * &v - &v * l).norm();
        if residual > bound {
            return Err(EmbeddingError::NotConverged { residual, bound });
        }
        values.push(l);
        vectors.push(v);
    }
    Ok((values, vectors))
}

fn lanczos(b: &DMatrix<f64>, k: usize, steps: usize, norm: f64, bound: f64) -> Option<(Vec<f64>, Vec<DVector<f64>>)> {
    let n = b.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x15_0_3ab);
    let mut q = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    q /= q.norm();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut w = b * &q;
        let a = q.dot(&w);
        basis.push(q.clone());
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = v.dot(&w);
                w.axpy(-c, v, 1.0);
            }
        }
        let bnorm = w.norm();
        if bnorm <= 1e-13 * norm {
            break;
        }
        beta.push(bnorm);
        q = w / bnorm;
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j || j + 1 == i {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let y = eig.eigenvectors.column(i);
        let mut v = DVector::zeros(n);
        for (j, bj) in basis.iter().enumerate() {
            v.axpy(y[j], bj, 1.0);
        }
        v /= v.norm();
        let l = v.dot(&(b * &v));
        if (b * &v - &v * l).norm() > bound {
            return None;
        }
        values.push(l);
        vectors.push(v);
    }
    // An early invariant subspace may hold fewer than k pairs; the missing
    // ones are zero eigenvalues of a low-rank operator.
    while values.len() < k {
        values.push(0.0);
        vectors.push(DVector::zeros(n));
    }
    Some((values, vectors))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDistortion {
    pub i: usize,
    pub j: usize,
    pub geodesic: f64,
    pub embedded: f64,
    pub log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    /// One entry per graph edge inside the embedded component, in original
    /// indices.
    pub edges: Vec<EdgeDistortion>,
    pub mean_abs: f64,
    /// Quantiles 0.05, 0.25, 0.5, 0.75, 0.95 of `|log_ratio|`.
    pub quantiles: [f64; 5],
}

impl DistortionReport {
    pub fn to_text(&self) -> String {
        let mut s = String::from("i,j,geodesic,embedded,log_ratio\n");
        for e in &self.edges {
            let _ = writeln!(s, "{},{},{},{},{}", e.i, e.j, e.geodesic, e.embedded, e.log_ratio);
        }
        s
    }

    /// Mean `|log_ratio|` over edges touching a vertex in `set`.
    pub fn mean_abs_touching(&self, set: &[bool]) -> Option<f64> {
        let v: Vec<f64> = self.edges.iter().filter(|e| set[e.i] || set[e.j]).map(|e| e.log_ratio.abs()).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Isomap {
    pub embedding: Embedding,
    /// Original index of each embedded point.
    pub vertices: Vec<usize>,
    pub dropped: usize,
    pub distortion: DistortionReport,
}

pub fn isomap(d: &DistanceMatrix, rule: NeighborhoodRule, m: usize) -> Result<Isomap, EmbeddingError> {
    if d.size() < 2 {
        return Err(EmbeddingError::TooFewPoints { needed: 2, got: d.size() });
    }
    let g = neighborhood_graph(d, rule);
    let geo = geodesic_distances(&g);
    let embedding = classical_mds(&geo.distances, m)?;
    let mut local = vec![usize::MAX; d.size()];
    for (k, &v) in geo.vertices.iter().enumerate() {
        local[v] = k;
    }
    let mut edges = Vec::new();
    for (u, v, _) in g.edges() {
        let (a, b) = (local[u], local[v]);
        if a == usize::MAX || b == usize::MAX {
            continue;
        }
        let geodesic = geo.distances.get(a, b);
        let embedded = embedding.distance(a, b);
        let log_ratio = (embedded / geodesic).ln();
        edges.push(EdgeDistortion { i: u, j: v, geodesic, embedded, log_ratio });
    }
    let mut abs: Vec<f64> = edges.iter().map(|e| e.log_ratio.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let quantile = |p: f64| {
        if abs.is_empty() {
            f64::NAN
        } else {
            abs[((abs.len() - 1) as f64 * p).round() as usize]
        }
    };
    let mean_abs = if abs.is_empty() { f64::NAN } else { abs.iter().sum::<f64>() / abs.len() as f64 };
    let distortion = DistortionReport {
        quantiles: [quantile(0.05), quantile(0.25), quantile(0.5), quantile(0.75), quantile(0.95)],
        mean_abs,
        edges,
    };
    Ok(Isomap { embedding, vertices: geo.vertices, dropped: geo.dropped, distortion })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn line(xs: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_fn(xs.len(), |i, j| (xs[i] - xs[j]).abs())
    }

    fn euclid(pts: &[Vec<f64>]) -> DistanceMatrix {
        DistanceMatrix::from_fn(pts.len(), |i, j| {
            pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        })
    }

    #[test]
    fn knn_on_a_line() {
        let g = neighborhood_graph(&line(&[0.0, 1.0, 2.0]), NeighborhoodRule::Knn(1));
        let e: Vec<(usize, usize)> = g.edges().map(|(u, v, _)| (u, v)).collect();
        assert_eq!(e, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn infinite_ball_is_complete() {
        let g = neighborhood_graph(&line(&[0.0, 1.0, 2.5, 4.0]), NeighborhoodRule::Eps(f64::INFINITY));
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn path_geodesic() {
        let g = NeighborhoodGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]);
        let geo = geodesic_distances(&g);
        assert_eq!(geo.distances.get(0, 2), 2.0);
        assert_eq!(shortest_path(&g, 0, 2), Some(vec![0, 1, 2]));
    }

    #[test]
    fn largest_component_kept() {
        let g = NeighborhoodGraph::from_edges(5, [(0, 1, 1.0), (2, 3, 1.0), (3, 4, 1.0)]);
        let geo = geodesic_distances(&g);
        assert_eq!(geo.vertices, vec![2, 3, 4]);
        assert_eq!(geo.dropped, 2);
        assert_eq!(shortest_path(&g, 0, 4), None);
    }

    #[test]
    fn mds_line() {
        let e = classical_mds(&line(&[0.0, 3.0, 7.0]), 1).unwrap();
        assert_eq!(e.dim, 1);
        for (i, j, want) in [(0, 1, 3.0), (1, 2, 4.0), (0, 2, 7.0)] {
            assert!((e.distance(i, j) - want).abs() < 1e-9);
        }
        assert!(e.coords[0][0] > 0.0 || e.coords[0][0].abs() < 1e-12);
    }

    #[test]
    fn mds_zero_matrix() {
        let e = classical_mds(&DistanceMatrix::zeros(4), 2).unwrap();
        assert!(e.is_rank_deficient());
        assert_eq!(e.dim, 0);
        assert!(e.coords.iter().all(|c| c.is_empty()));
    }

    #[test]
    fn mds_large_uses_lanczos() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Vec<f64>> = (0..600).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let d = euclid(&pts);
        let e = classical_mds(&d, 3).unwrap();
        for i in (0..600).step_by(37) {
            for j in (0..600).step_by(41) {
                assert!((e.distance(i, j) - d.get(i, j)).abs() < 1e-6);
            }
        }
        let e = classical_mds(&d, 5).unwrap();
        assert_eq!(e.dim, 3);
    }

    #[test]
    fn flat_square_isomap() {
        // Halton points: dense and free of near-coincident pairs.
        let halton = |mut i: usize, base: usize| {
            let (mut f, mut r) = (1.0, 0.0);
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        };
        let pts: Vec<Vec<f64>> = (1..=800).map(|i| vec![halton(i, 2), halton(i, 3)]).collect();
        let iso = isomap(&euclid(&pts), NeighborhoodRule::Knn(8), 2).unwrap();
        assert!(iso.distortion.quantiles[2] < 0.05, "{:?}", iso.distortion.quantiles);
    }

    #[test]
    fn circle_isomap_is_round() {
        let n = 200;
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let iso = isomap(&euclid(&pts), NeighborhoodRule::Knn(4), 2).unwrap();
        let c = &iso.embedding.coords;
        let centre: Vec<f64> = (0..2).map(|k| c.iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
        let radii: Vec<f64> = c.iter().map(|p| ((p[0] - centre[0]).powi(2) + (p[1] - centre[1]).powi(2)).sqrt()).collect();
        let mean = radii.iter().sum::<f64>() / n as f64;
        let sd = (radii.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!(sd / mean < 0.05);
    }

    fn floyd_warshall(g: &NeighborhoodGraph) -> Vec<Vec<f64>> {
        let n = g.len();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (u, row) in d.iter_mut().enumerate() {
            row[u] = 0.0;
            for &(v, w) in g.neighbors(u) {
                row[v] = row[v].min(w);
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        d
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn edge_weights_are_input_entries(seed in 0u64..1000, k in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec<f64>> = (0..15).map(|_| vec![rng.random(), rng.random()]).collect();
            let d = euclid(&pts);
            let g = neighborhood_graph(&d, NeighborhoodRule::Knn(k));
            for (u, v, w) in g.edges() {
                prop_assert_eq!(w, d.get(u, v));
            }
            for u in 0..15 {
                prop_assert!(g.degree(u) >= k);
            }
        }

        #[test]
        fn dijkstra_matches_floyd_warshall(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 12;
            let edges: Vec<(usize, usize, f64)> = (0..25)
                .map(|_| (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0.1..2.0)))
                .collect();
            let g = NeighborhoodGraph::from_edges(n, edges);
            let fw = floyd_warshall(&g);
            let geo = geodesic_distances(&g);
            for (a, &u) in geo.vertices.iter().enumerate() {
                for (b, &v) in geo.vertices.iter().enumerate() {
                    prop_assert!((geo.distances.get(a, b) - fw[u][v]).abs() <= 1e-12 * fw[u][v].max(1.0));
                }
            }
            for a in 0..geo.vertices.len() {
                for b in 0..geo.vertices.len() {
                    for c in 0..geo.vertices.len() {
                        let d = &geo.distances;
                        prop_assert!(d.get(a, c) <= d.get(a, b) + d.get(b, c) + 1e-12);
                    }
                }
            }
        }

        #[test]
        fn mds_round_trip(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect()).collect();
            let d = euclid(&pts);
            let e = classical_mds(&d, 3).unwrap();
            for i in 0..20 {
                for j in 0..20 {
                    prop_assert!((e.distance(i, j) - d.get(i, j)).abs() < 1e-6);
                }
            }
        }
    }
}
