//! Point clouds: random-walk samples of the ring constraint variety with
//! Gauss–Newton projection, and lattice samples of reference manifolds with
//! their flat quotient metrics.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::geometry::{
    axis_rotation, constraint_jacobian, constraint_residual, crown, eckart_align_points, max_abs,
    torsions_of_points, LinkageParams, Point, Realization, StandardRealization, TorsionSequence,
    RING,
};
use crate::metrics::{angular_distance, DistanceMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("no realization exists for bond angle {bond_angle} > 3π/4")]
    EmptyVariety { bond_angle: f64 },
    #[error("Newton projection failed on {failed} of {attempted} steps")]
    NewtonDivergence { failed: usize, attempted: usize },
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Maximum number of returned samples.
    pub count: usize,
    pub seed: u64,
    /// Length of each tangent step, model units.
    pub step_size: f64,
    /// Greedy subsampling radius in d∠; 0 disables subsampling.
    pub min_separation: f64,
    pub max_newton_iters: usize,
    /// Max-norm bound on the constraint residual of accepted states.
    pub newton_tol: f64,
    /// Independent walks, merged in chain order.
    pub chains: usize,
    /// Steps per chain. `None` means enough steps for `count` states.
    pub steps: Option<usize>,
    /// Record every `thin`-th state of each chain.
    pub thin: usize,
    /// Start of the first chain; the crown when absent.
    pub start: Option<Realization>,
    /// Metric in which tangent steps are isotropic and have length `step_size`.
    pub step_metric: StepMetric,
}

/// How the length and direction distribution of a tangent step are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepMetric {
    /// Euclidean norm in R²⁴, model units.
    #[default]
    Cartesian,
    /// Euclidean norm of the torsion change, radians; the Cartesian length
    /// is capped at one bond length.
    Torsion,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            count: 2000,
            seed: 0,
            step_size: 0.1,
            min_separation: 0.0,
            max_newton_iters: 30,
            newton_tol: 1e-10,
            chains: 8,
            steps: None,
            thin: 1,
            start: None,
            step_metric: StepMetric::Cartesian,
        }
    }
}

impl SamplerConfig {
    fn validate(&self) -> Result<(), SamplingError> {
        let bad = |m: &str| Err(SamplingError::InvalidConfig(m.to_string()));
        if self.count == 0 {
            return bad("count must be positive");
        }
        if !(self.step_size > 0.0) {
            return bad("step_size must be positive");
        }
        if !(self.newton_tol > 0.0) {
            return bad("newton_tol must be positive");
        }
        if !(self.min_separation >= 0.0) {
            return bad("min_separation must be nonnegative");
        }
        if self.max_newton_iters == 0 || self.chains == 0 || self.thin == 0 {
            return bad("max_newton_iters, chains and thin must be positive");
        }
        Ok(())
    }
}

/// Walk diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SamplerStats {
    pub attempted: usize,
    pub accepted: usize,
    pub failed: usize,
    /// Accepted steps whose residual norm decreased at every Newton iteration.
    pub monotone: usize,
    /// States recorded before subsampling.
    pub pool: usize,
}

/// A valid starting realization: the crown, which at `φ = 3π/4` is the
/// planar regular octagon.
pub fn initial_seed_realization(params: &LinkageParams) -> Result<Realization, SamplingError> {
    check_angle(params)?;
    let points = crown(params, true).ok_or(SamplingError::EmptyVariety { bond_angle: params.bond_angle() })?;
    Ok(Realization::from_points_unchecked(points, *params))
}

fn check_angle(params: &LinkageParams) -> Result<(), SamplingError> {
    if params.bond_angle() > 3.0 * FRAC_PI_4 + 1e-12 {
        return Err(SamplingError::EmptyVariety { bond_angle: params.bond_angle() });
    }
    Ok(())
}

type Flat = SMatrix<f64, 24, 1>;

fn flatten(x: &[Point; RING]) -> Flat {
    Flat::from_fn(|k, _| x[k / 3][k % 3])
}

fn unflatten(v: &Flat) -> [Point; RING] {
    std::array::from_fn(|i| Vector3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2]))
}

/// Outcome of a Gauss–Newton projection onto the variety.
#[derive(Debug, Clone)]
pub struct Projection {
    pub points: [Point; RING],
    pub iterations: usize,
    pub monotone: bool,
}

/// Iterates `x ← x - J⁺ F(x)` until `max|F| < tol`; `None` if the cap is hit.
pub fn project(
    x: &[Point; RING],
    params: &LinkageParams,
    max_iters: usize,
    tol: f64,
) -> Option<Projection> {
    let mut v = flatten(x);
    let mut pts = *x;
    let mut res = constraint_residual(&pts, params);
    let mut last = norm(&res);
    let mut monotone = true;
    for it in 0..=max_iters {
        if max_abs(&res) < tol {
            return Some(Projection { points: pts, iterations: it, monotone });
        }
        if it == max_iters || !last.is_finite() {
            break;
        }
        let jac = constraint_jacobian(&pts);
        let j = DMatrix::from_fn(2 * RING, 3 * RING, |r, c| jac[r][c]);
        let f = DVector::from_column_slice(&res);
        let svd = j.svd(true, true);
        let cutoff = 1e-10 * svd.singular_values.max();
        let delta = svd.solve(&f, cutoff).ok()?;
        for k in 0..3 * RING {
            v[k] -= delta[k];
        }
        pts = unflatten(&v);
        res = constraint_residual(&pts, params);
        let now = norm(&res);
        if now >= last {
            monotone = false;
        }
        last = now;
    }
    None
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Orthonormal basis of the tangent plane of the variety at `x`, with
/// translations and infinitesimal rotations removed.
pub fn tangent_basis(x: &[Point; RING]) -> [Flat; 2] {
    let jac = constraint_jacobian(x);
    let centroid: Point = x.iter().sum::<Point>() / RING as f64;
    // Padded to square so the SVD returns a full set of right vectors.
    let mut a = SMatrix::<f64, 24, 24>::zeros();
    for r in 0..2 * RING {
        for c in 0..3 * RING {
            a[(r, c)] = jac[r][c];
        }
    }
    for i in 0..RING {
        let q = x[i] - centroid;
        for c in 0..3 {
            a[(16 + c, 3 * i + c)] = 1.0;
        }
        // Rows of Σ q_i × dx_i.
        let cross = Matrix3::new(0.0, -q.z, q.y, q.z, 0.0, -q.x, -q.y, q.x, 0.0);
        for r in 0..3 {
            for c in 0..3 {
                a[(19 + r, 3 * i + c)] = cross[(r, c)];
            }
        }
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let mut order: Vec<usize> = (0..24).collect();
    order.sort_by(|&p, &q| svd.singular_values[p].total_cmp(&svd.singular_values[q]));
    let pick = |k: usize| Flat::from_fn(|c, _| vt[(order[k], c)]);
    [pick(0), pick(1)]
}

/// Samples the variety by `cfg.chains` random walks. The first chain starts
/// at `cfg.start` or the crown; the others start at projections of randomly
/// perturbed crowns. Every recorded state is Eckart-aligned; if
/// `min_separation > 0` the pool is greedily thinned in d∠ and truncated to
/// `count`.
pub fn sample_variety(
    params: &LinkageParams,
    cfg: &SamplerConfig,
) -> Result<Vec<StandardRealization>, SamplingError> {
    sample_variety_with_stats(params, cfg).map(|(s, _)| s)
}

pub fn sample_variety_with_stats(
    params: &LinkageParams,
    cfg: &SamplerConfig,
) -> Result<(Vec<StandardRealization>, SamplerStats), SamplingError> {
    check_angle(params)?;
    cfg.validate()?;
    let seed_pts = initial_seed_realization(params)?.points().to_owned();
    let mut stats = SamplerStats::default();
    let per_chain = cfg.steps.unwrap_or_else(|| (cfg.count * cfg.thin).div_ceil(cfg.chains));
    let mut pool: Vec<[Point; RING]> = Vec::new();
    for chain in 0..cfg.chains {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (chain as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let start = if chain == 0 {
            cfg.start.as_ref().map(|r| *r.points()).unwrap_or(seed_pts)
        } else {
            random_start(&seed_pts, params, cfg, &mut rng)
        };
        let mut x = match project(&start, params, cfg.max_newton_iters, cfg.newton_tol) {
            Some(p) => p.points,
            None => continue,
        };
        for step in 0..per_chain {
            stats.attempted += 1;
            let theta = rng.random::<f64>() * 2.0 * PI;
            let dir = step_direction(&x, theta, cfg.step_metric, params);
            let trial = unflatten(&(flatten(&x) + dir * cfg.step_size));
            match project(&trial, params, cfg.max_newton_iters, cfg.newton_tol) {
                Some(p) if torsions_of_points(&p.points).is_ok() => {
                    stats.accepted += 1;
                    stats.monotone += p.monotone as usize;
                    x = match eckart_align_points(&p.points) {
                        Ok(aligned) => aligned,
                        Err(_) => p.points,
                    };
                }
                _ => stats.failed += 1,
            }
            if step % cfg.thin == 0 {
                pool.push(x);
            }
        }
    }
    if stats.failed * 2 > stats.attempted {
        return Err(SamplingError::NewtonDivergence { failed: stats.failed, attempted: stats.attempted });
    }
    stats.pool = pool.len();
    let mut aligned: Vec<StandardRealization> = Vec::with_capacity(pool.len());
    let mut torsions: Vec<TorsionSequence> = Vec::with_capacity(pool.len());
    for pts in pool {
        let Ok(std_pts) = eckart_align_points(&pts) else { continue };
        let Ok(t) = torsions_of_points(&std_pts) else { continue };
        aligned.push(StandardRealization::new_unchecked(Realization::from_points_unchecked(std_pts, *params)));
        torsions.push(t);
    }
    let keep = if cfg.min_separation > 0.0 {
        greedy_subsample(&torsions, cfg.min_separation, cfg.count)
    } else {
        (0..aligned.len().min(cfg.count)).collect()
    };
    let out = keep.into_iter().map(|i| aligned[i].clone()).collect();
    Ok((out, stats))
}

/// Tangent vector at angle `theta`, of unit length in the chosen metric.
fn step_direction(x: &[Point; RING], theta: f64, metric: StepMetric, params: &LinkageParams) -> Flat {
    let basis = tangent_basis(x);
    let (c, s) = (theta.cos(), theta.sin());
    match metric {
        StepMetric::Cartesian => basis[0] * c + basis[1] * s,
        StepMetric::Torsion => {
            let g = torsion_differential(x, &basis);
            // Metric tensor M = GᵀG = L Lᵀ; u = L⁻ᵀ (c, s) has ‖G u‖ = 1.
            let m00: f64 = g.iter().map(|r| r[0] * r[0]).sum();
            let m01: f64 = g.iter().map(|r| r[0] * r[1]).sum();
            let m11: f64 = g.iter().map(|r| r[1] * r[1]).sum();
            let l00 = m00.sqrt();
            let l10 = m01 / l00;
            let l11 = (m11 - l10 * l10).max(0.0).sqrt();
            if !(l00 > 1e-12 && l11 > 1e-12) {
                return basis[0] * c + basis[1] * s;
            }
            let u1 = s / l11;
            let u0 = (c - l10 * u1) / l00;
            let dir = basis[0] * u0 + basis[1] * u1;
            let cap = params.bond_length() / dir.norm();
            if cap < 1.0 {
                dir * cap
            } else {
                dir
            }
        }
    }
}

/// Central-difference derivative of the torsions along the two basis vectors.
fn torsion_differential(x: &[Point; RING], basis: &[Flat; 2]) -> [[f64; 2]; RING] {
    let h = 1e-6;
    let v = flatten(x);
    let mut g = [[0.0; 2]; RING];
    for (k, b) in basis.iter().enumerate() {
        let plus = torsions_of_points(&unflatten(&(v + b * h)));
        let minus = torsions_of_points(&unflatten(&(v - b * h)));
        if let (Ok(p), Ok(m)) = (plus, minus) {
            for i in 0..RING {
                g[i][k] = crate::geometry::wrap_angle(p.get(i) - m.get(i)) / (2.0 * h);
            }
        }
    }
    g
}

fn random_start(
    seed: &[Point; RING],
    params: &LinkageParams,
    cfg: &SamplerConfig,
    rng: &mut ChaCha8Rng,
) -> [Point; RING] {
    let scale = 0.5 * params.bond_length();
    for _ in 0..100 {
        let mut x = *seed;
        for p in x.iter_mut() {
            for c in 0..3 {
                let z: f64 = StandardNormal.sample(rng);
                p[c] += z * scale;
            }
        }
        if let Some(p) = project(&x, params, cfg.max_newton_iters * 4, cfg.newton_tol) {
            if torsions_of_points(&p.points).is_ok() {
                return p.points;
            }
        }
    }
    *seed
}

/// Greedy net in d∠: scans in order, keeps a point if it is at least
/// `min_sep` from every kept point, stops after `limit` points.
pub fn greedy_subsample(torsions: &[TorsionSequence], min_sep: f64, limit: usize) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, t) in torsions.iter().enumerate() {
        if kept.len() >= limit {
            break;
        }
        if kept.iter().all(|&k| angular_distance(&torsions[k], t) >= min_sep) {
            kept.push(i);
        }
    }
    kept
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyntheticKind {
    Circle,
    Sphere2,
    FlatTorus,
    FlatKleinBottle,
    MobiusStrip,
}

impl std::str::FromStr for SyntheticKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "circle" => Self::Circle,
            "sphere2" => Self::Sphere2,
            "flat_torus" => Self::FlatTorus,
            "flat_klein_bottle" => Self::FlatKleinBottle,
            "mobius_strip" => Self::MobiusStrip,
            other => return Err(format!("unknown synthetic kind '{other}'")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub count: usize,
    pub seed: u64,
    pub noise: f64,
}

/// Half-width of the synthetic Möbius strip `[0,1] × [-w, w]`.
pub const MOBIUS_HALF_WIDTH: f64 = 0.125;

/// Sample coordinates: ambient coordinates for the circle and sphere,
/// fundamental-domain coordinates for the flat quotients.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub kind: SyntheticKind,
    pub coords: Vec<Vec<f64>>,
}

impl SyntheticSample {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.coords[i], &self.coords[j]);
        match self.kind {
            SyntheticKind::Circle | SyntheticKind::Sphere2 => {
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            }
            SyntheticKind::FlatTorus => torus_distance([a[0], a[1]], [b[0], b[1]]),
            SyntheticKind::FlatKleinBottle => klein_distance([a[0], a[1]], [b[0], b[1]]),
            SyntheticKind::MobiusStrip => mobius_distance([a[0], a[1]], [b[0], b[1]]),
        }
    }

    pub fn distance_matrix(&self) -> DistanceMatrix {
        DistanceMatrix::from_fn(self.len(), |i, j| self.distance(i, j))
    }
}

/// Flat torus `R² / Z²`.
pub fn torus_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let mut best = f64::INFINITY;
    for m in -1..=1 {
        for k in -1..=1 {
            best = best.min(plane(a, [b[0] + m as f64, b[1] + k as f64]));
        }
    }
    best
}

/// Flat Klein bottle: deck transformations `(x, y) ↦ ((-1)^k x + m, y + k)`.
pub fn klein_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let mut best = f64::INFINITY;
    for k in -1i32..=1 {
        let flip = if k % 2 == 0 { 1.0 } else { -1.0 };
        for m in -1..=2 {
            best = best.min(plane(a, [flip * b[0] + m as f64, b[1] + k as f64]));
        }
    }
    best
}

/// Flat Möbius strip `[0,1] × [-w, w]` with `(x, y) ~ (x + 1, -y)`.
pub fn mobius_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let mut best = f64::INFINITY;
    for k in -1i32..=1 {
        let flip = if k % 2 == 0 { 1.0 } else { -1.0 };
        best = best.min(plane(a, [b[0] + k as f64, flip * b[1]]));
    }
    best
}

#[inline]
fn plane(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Grid dimensions `(nx, ny)` with `nx ≈ aspect · ny` and `nx · ny ≈ count`.
fn grid_shape(count: usize, aspect: f64) -> (usize, usize) {
    let ny = ((count as f64 / aspect).sqrt().round() as usize).max(1);
    let nx = ((count as f64 / ny as f64).round() as usize).max(1);
    (nx, ny)
}

/// Quasi-uniform lattice sample: evenly spaced circle points with a random
/// phase, a randomly rotated Fibonacci sphere, and cell-centred grids on the
/// flat quotients (the grid has the lattice size nearest to `count`). Noise is
/// Gaussian with standard deviation `noise` per coordinate; flat coordinates
/// are reduced back into the fundamental domain.
pub fn synthetic_points(spec: &SyntheticSpec) -> SyntheticSample {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.count.max(1);
    let mut coords: Vec<Vec<f64>> = match spec.kind {
        SyntheticKind::Circle => {
            let phase = rng.random::<f64>() * 2.0 * PI;
            (0..n)
                .map(|i| {
                    let a = phase + 2.0 * PI * i as f64 / n as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect()
        }
        SyntheticKind::Sphere2 => {
            let axis = Vector3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            let rot = axis_rotation(&axis, rng.random::<f64>() * 2.0 * PI);
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let t = golden * i as f64;
                    let p = rot * Vector3::new(r * t.cos(), r * t.sin(), z);
                    vec![p.x, p.y, p.z]
                })
                .collect()
        }
        SyntheticKind::FlatTorus | SyntheticKind::FlatKleinBottle => {
            let (nx, ny) = grid_shape(n, 1.0);
            let dy = rng.random::<f64>() / ny as f64;
            let dx = if spec.kind == SyntheticKind::FlatTorus { rng.random::<f64>() / nx as f64 } else { 0.0 };
            grid(nx, ny, |i, j| {
                vec![((i as f64 + 0.5) / nx as f64 + dx) % 1.0, ((j as f64 + 0.5) / ny as f64 + dy) % 1.0]
            })
        }
        SyntheticKind::MobiusStrip => {
            let w = MOBIUS_HALF_WIDTH;
            let (nx, ny) = grid_shape(n, 1.0 / (2.0 * w));
            let ny = ny.max(3) | 1;
            let dx = rng.random::<f64>() / nx as f64;
            grid(nx, ny, |i, j| {
                vec![(i as f64 / nx as f64 + dx) % 1.0, -w + 2.0 * w * j as f64 / (ny - 1) as f64]
            })
        }
    };
    if spec.noise > 0.0 {
        for c in coords.iter_mut() {
            for v in c.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += z * spec.noise;
            }
            reduce(spec.kind, c);
        }
    }
    SyntheticSample { kind: spec.kind, coords }
}

fn grid(nx: usize, ny: usize, f: impl Fn(usize, usize) -> Vec<f64>) -> Vec<Vec<f64>> {
    (0..ny).flat_map(|j| (0..nx).map(move |i| (i, j))).map(|(i, j)| f(i, j)).collect()
}

/// Maps a perturbed point back into the fundamental domain.
fn reduce(kind: SyntheticKind, c: &mut [f64]) {
    match kind {
        SyntheticKind::FlatTorus => {
            c[0] = c[0].rem_euclid(1.0);
            c[1] = c[1].rem_euclid(1.0);
        }
        SyntheticKind::FlatKleinBottle => {
            let k = c[1].floor();
            c[1] -= k;
            if (k as i64).rem_euclid(2) == 1 {
                c[0] = 1.0 - c[0];
            }
            c[0] = c[0].rem_euclid(1.0);
        }
        SyntheticKind::MobiusStrip => {
            let k = c[0].floor();
            c[0] -= k;
            if (k as i64).rem_euclid(2) == 1 {
                c[1] = -c[1];
            }
            c[1] = c[1].clamp(-MOBIUS_HALF_WIDTH, MOBIUS_HALF_WIDTH);
        }
        SyntheticKind::Circle | SyntheticKind::Sphere2 => {}
    }
}

/// Distance matrix of a synthetic sample.
pub fn synthetic_sample(spec: &SyntheticSpec) -> DistanceMatrix {
    synthetic_points(spec).distance_matrix()
}
