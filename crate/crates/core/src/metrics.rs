//! Angular and Euclidean metrics on conformations, their quotients by the
//! cyclic and dihedral relabelling groups, and dense distance matrices.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{act_on_points, GroupElement, Point, StandardRealization, TorsionSequence, RING};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("point {index} violates the Eckart condition")]
    NotAligned { index: usize },
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("metric base {base:?} needs {needed} input")]
    RepresentationMismatch { base: BaseMetric, needed: &'static str },
    #[error("empty dataset")]
    Empty,
    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseMetric {
    Angular,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quotient {
    None,
    C8,
    D8,
}

impl Quotient {
    /// Group elements minimised over, identity first.
    pub fn elements(&self) -> Vec<GroupElement> {
        match self {
            Quotient::None => vec![GroupElement::IDENTITY],
            Quotient::C8 => GroupElement::cyclic().collect(),
            Quotient::D8 => GroupElement::dihedral().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MetricSpec {
    pub base: BaseMetric,
    pub quotient: Quotient,
}

impl MetricSpec {
    pub fn new(base: BaseMetric, quotient: Quotient) -> Self {
        Self { base, quotient }
    }

    pub fn angular() -> Self {
        Self::new(BaseMetric::Angular, Quotient::None)
    }

    pub fn euclidean() -> Self {
        Self::new(BaseMetric::Euclidean, Quotient::None)
    }
}

/// Dense symmetric matrix of pairwise distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    /// Fills the matrix from `f(i, j)` evaluated once per pair `i < j`.
    pub fn from_fn<F>(n: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let rows: Vec<Vec<f64>> =
            (0..n).into_par_iter().map(|i| ((i + 1)..n).map(|j| f(i, j)).collect()).collect();
        let mut m = Self::zeros(n);
        for (i, row) in rows.into_iter().enumerate() {
            for (off, d) in row.into_iter().enumerate() {
                let j = i + 1 + off;
                m.data[i * n + j] = d;
                m.data[j * n + i] = d;
            }
        }
        m
    }

    /// Validates symmetry, zero diagonal and nonnegativity.
    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self, MetricError> {
        if data.len() != n * n {
            return Err(MetricError::SizeMismatch { left: data.len(), right: n * n });
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(MetricError::InvalidMatrix(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let d = data[i * n + j];
                if !(d >= 0.0) || d != data[j * n + i] {
                    return Err(MetricError::InvalidMatrix(format!("entry ({i}, {j}) = {d}")));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Restriction to the given indices, in the given order.
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        let k = indices.len();
        let mut data = Vec::with_capacity(k * k);
        for &i in indices {
            let row = self.row(i);
            data.extend(indices.iter().map(|&j| row[j]));
        }
        Self { n: k, data }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|d| d * factor).collect() }
    }
}

/// Circular distance on S¹ between two angles.
#[inline]
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % (2.0 * PI);
    d.min(2.0 * PI - d)
}

/// `d∠(a, b) = Σ_i min(|a_i - b_i|, 2π - |a_i - b_i|)`.
pub fn angular_distance(a: &TorsionSequence, b: &TorsionSequence) -> f64 {
    let (a, b) = (a.angles(), b.angles());
    (0..RING).map(|i| circular_distance(a[i], b[i])).sum()
}

/// `d‖(a, b) = sqrt(Σ_i ‖a_i - b_i‖²)` on Eckart-aligned realizations.
pub fn euclidean_distance(
    a: &StandardRealization,
    b: &StandardRealization,
) -> Result<f64, MetricError> {
    let tol = StandardRealization::alignment_tolerance(&a.params()) * 10.0;
    if !a.is_aligned(tol) {
        return Err(MetricError::NotAligned { index: 0 });
    }
    if !b.is_aligned(tol) {
        return Err(MetricError::NotAligned { index: 1 });
    }
    Ok(euclidean_points(a.points(), b.points()))
}

#[inline]
pub(crate) fn euclidean_points(a: &[Point; RING], b: &[Point; RING]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm_squared()).sum::<f64>().sqrt()
}

#[inline]
fn angular_under(g: &GroupElement, a: &[f64; RING], b: &[f64; RING]) -> f64 {
    (0..RING).map(|i| circular_distance(a[i], b[g.torsion_index(i)])).sum()
}

/// Quotient angular distance: minimum of `d∠(a, g·b)` over the group.
pub fn quotient_angular(q: Quotient, a: &TorsionSequence, b: &TorsionSequence) -> f64 {
    let (a, b) = (a.angles(), b.angles());
    q.elements().iter().map(|g| angular_under(g, a, b)).fold(f64::INFINITY, f64::min)
}

/// Quotient Euclidean distance: minimum of `d‖(a, g·b)` over the group.
pub fn quotient_euclidean(
    q: Quotient,
    a: &StandardRealization,
    b: &StandardRealization,
) -> Result<f64, MetricError> {
    euclidean_distance(a, b)?;
    Ok(quotient_euclidean_points(q, a.points(), b.points()))
}

fn quotient_euclidean_points(q: Quotient, a: &[Point; RING], b: &[Point; RING]) -> f64 {
    q.elements()
        .iter()
        .map(|g| euclidean_points(a, &act_on_points(g, b)))
        .fold(f64::INFINITY, f64::min)
}

/// A single conformation in the representation a metric needs.
#[derive(Debug, Clone, Copy)]
pub enum PointRef<'a> {
    Torsions(&'a TorsionSequence),
    Standard(&'a StandardRealization),
}

/// A dataset slice in one representation.
#[derive(Debug, Clone, Copy)]
pub enum Points<'a> {
    Torsions(&'a [TorsionSequence]),
    Standard(&'a [StandardRealization]),
}

impl Points<'_> {
    pub fn len(&self) -> usize {
        match self {
            Points::Torsions(t) => t.len(),
            Points::Standard(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Base distance minimised over the quotient group acting on `b`.
pub fn quotient_distance(spec: MetricSpec, a: PointRef, b: PointRef) -> Result<f64, MetricError> {
    match (spec.base, a, b) {
        (BaseMetric::Angular, PointRef::Torsions(a), PointRef::Torsions(b)) => {
            Ok(quotient_angular(spec.quotient, a, b))
        }
        (BaseMetric::Euclidean, PointRef::Standard(a), PointRef::Standard(b)) => {
            quotient_euclidean(spec.quotient, a, b)
        }
        (BaseMetric::Angular, ..) => {
            Err(MetricError::RepresentationMismatch { base: spec.base, needed: "torsion" })
        }
        (BaseMetric::Euclidean, ..) => {
            Err(MetricError::RepresentationMismatch { base: spec.base, needed: "standard realization" })
        }
    }
}

/// Pairwise quotient distances; the upper triangle is computed once.
pub fn distance_matrix(points: Points, spec: MetricSpec) -> Result<DistanceMatrix, MetricError> {
    if points.is_empty() {
        return Err(MetricError::Empty);
    }
    let group = spec.quotient.elements();
    match (spec.base, points) {
        (BaseMetric::Angular, Points::Torsions(t)) => {
            let images: Vec<Vec<[f64; RING]>> = t
                .iter()
                .map(|s| {
                    let a = s.angles();
                    group.iter().map(|g| std::array::from_fn(|i| a[g.torsion_index(i)])).collect()
                })
                .collect();
            Ok(DistanceMatrix::from_fn(t.len(), |i, j| {
                let a = t[i].angles();
                images[j]
                    .iter()
                    .map(|b| (0..RING).map(|k| circular_distance(a[k], b[k])).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
            }))
        }
        (BaseMetric::Euclidean, Points::Standard(s)) => {
            for (index, x) in s.iter().enumerate() {
                let tol = StandardRealization::alignment_tolerance(&x.params()) * 10.0;
                if !x.is_aligned(tol) {
                    return Err(MetricError::NotAligned { index });
                }
            }
            let images: Vec<Vec<[Point; RING]>> = s
                .iter()
                .map(|x| group.iter().map(|g| act_on_points(g, x.points())).collect())
                .collect();
            Ok(DistanceMatrix::from_fn(s.len(), |i, j| {
                let a = s[i].points();
                images[j].iter().map(|b| euclidean_points(a, b)).fold(f64::INFINITY, f64::min)
            }))
        }
        (BaseMetric::Angular, _) => {
            Err(MetricError::RepresentationMismatch { base: spec.base, needed: "torsion" })
        }
        (BaseMetric::Euclidean, _) => {
            Err(MetricError::RepresentationMismatch { base: spec.base, needed: "standard realization" })
        }
    }
}

/// Paired-distance comparison between two metrics on the same points.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionStats {
    /// `(i, j, d1_ij, d2_ij)` for the sampled pairs.
    pub pairs: Vec<(usize, usize, f64, f64)>,
    pub correlation: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Compares `d1` against `d2` on up to `max_pairs` random pairs `i < j`
/// (all pairs if there are fewer). Ratios are `d2 / d1` over pairs with `d1 > 0`.
pub fn distortion_stats(
    d1: &DistanceMatrix,
    d2: &DistanceMatrix,
    max_pairs: usize,
    seed: u64,
) -> Result<DistortionStats, MetricError> {
    if d1.size() != d2.size() {
        return Err(MetricError::SizeMismatch { left: d1.size(), right: d2.size() });
    }
    let n = d1.size();
    let total = n * n.saturating_sub(1) / 2;
    let linear: Vec<usize> = if max_pairs >= total {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = sample(&mut rng, total, max_pairs).into_vec();
        v.sort_unstable();
        v
    };
    let pairs: Vec<_> = linear
        .into_iter()
        .map(|k| {
            let (i, j) = unrank_pair(k, n);
            (i, j, d1.get(i, j), d2.get(i, j))
        })
        .collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(_, _, a, b) in &pairs {
        if a > 0.0 {
            lo = lo.min(b / a);
            hi = hi.max(b / a);
        }
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.3).collect();
    Ok(DistortionStats { correlation: pearson(&xs, &ys), pairs, min_ratio: lo, max_ratio: hi })
}

/// Pair `(i, j)`, `i < j`, at position `k` of the row-major upper triangle.
fn unrank_pair(mut k: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let len = n - 1 - i;
        if k < len {
            return (i, i + 1 + k);
        }
        k -= len;
        i += 1;
    }
}

/// Pearson correlation; NaN if either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
