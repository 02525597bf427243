//! Realizations of the closed eight-bar linkage with fixed bond lengths and
//! bond angles, their torsion angles, Eckart alignment, and the action of the
//! dihedral group of the octagon on both representations.

use std::f64::consts::{FRAC_PI_8, PI};
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Number of vertices of the ring.
pub const RING: usize = 8;

pub type Point = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid linkage parameters: bond length {bond_length}, bond angle {bond_angle}")]
    InvalidParams { bond_length: f64, bond_angle: f64 },
    #[error("collinear consecutive edges at vertex {index}")]
    DegenerateGeometry { index: usize },
    #[error("cross-covariance against the planar octagon is rank deficient (singular values {singular_values:?})")]
    AlignmentDegenerate { singular_values: [f64; 3] },
    #[error("points violate the linkage constraints (max |residual| {max_residual:e})")]
    ConstraintViolation { max_residual: f64 },
    #[error("realization violates the Eckart condition (centroid {centroid:e}, rotation sum {rotation:e})")]
    NotAligned { centroid: f64, rotation: f64 },
}

/// Bond length and bond angle shared by every edge and joint of the ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkageParams {
    bond_length: f64,
    bond_angle: f64,
}

impl LinkageParams {
    pub fn new(bond_length: f64, bond_angle: f64) -> Result<Self, GeometryError> {
        if !(bond_length > 0.0 && bond_length.is_finite() && bond_angle > 0.0 && bond_angle < PI) {
            return Err(GeometryError::InvalidParams { bond_length, bond_angle });
        }
        Ok(Self { bond_length, bond_angle })
    }

    /// Carbon ring of cyclooctane: 1.53 Å bonds and 115° joints.
    pub fn cyclooctane() -> Self {
        Self { bond_length: 1.53, bond_angle: 115f64.to_radians() }
    }

    pub fn bond_length(&self) -> f64 {
        self.bond_length
    }

    pub fn bond_angle(&self) -> f64 {
        self.bond_angle
    }

    /// Squared distance between next-nearest ring neighbours (cosine law).
    pub fn second_neighbour_sq(&self) -> f64 {
        let l2 = self.bond_length * self.bond_length;
        2.0 * l2 - 2.0 * l2 * self.bond_angle.cos()
    }

    /// Default tolerance for realization validity, `1e-6 * ℓ`.
    pub fn default_tolerance(&self) -> f64 {
        1e-6 * self.bond_length
    }
}

/// Eight points in R³ forming a realization of the ring linkage.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    points: [Point; RING],
    params: LinkageParams,
}

impl Realization {
    /// Validates the ring constraints at the default tolerance.
    pub fn new(points: [Point; RING], params: LinkageParams) -> Result<Self, GeometryError> {
        Self::with_tolerance(points, params, params.default_tolerance())
    }

    /// Validates bond lengths and bond angles against `tol` (model units for
    /// lengths, radians for angles).
    pub fn with_tolerance(
        points: [Point; RING],
        params: LinkageParams,
        tol: f64,
    ) -> Result<Self, GeometryError> {
        let mut worst = 0.0f64;
        for i in 0..RING {
            let a = points[prev(i)];
            let b = points[i];
            let c = points[next(i)];
            worst = worst.max(((c - b).norm() - params.bond_length).abs());
            let u = a - b;
            let v = c - b;
            let cos = (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0);
            worst = worst.max((cos.acos() - params.bond_angle).abs());
        }
        if !(worst <= tol) {
            return Err(GeometryError::ConstraintViolation { max_residual: worst });
        }
        Ok(Self { points, params })
    }

    /// Wraps points without checking the constraints.
    pub fn from_points_unchecked(points: [Point; RING], params: LinkageParams) -> Self {
        Self { points, params }
    }

    pub fn points(&self) -> &[Point; RING] {
        &self.points
    }

    pub fn params(&self) -> LinkageParams {
        self.params
    }

    /// Applies the rigid motion `x ↦ R x + shift`.
    pub fn transformed(&self, rotation: &Matrix3<f64>, shift: &Point) -> Self {
        Self { points: self.points.map(|p| rotation * p + shift), params: self.params }
    }

    pub fn max_residual(&self) -> f64 {
        max_abs(&constraint_residual(&self.points, &self.params))
    }
}

/// A realization in Eckart frame: centred at the origin and rotated so that
/// `Σ x^pln_i × x_i = 0` against the unit planar octagon.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardRealization(Realization);

impl StandardRealization {
    /// Accepts `r` if both Eckart sums vanish within `tol`.
    pub fn new(r: Realization, tol: f64) -> Result<Self, GeometryError> {
        let (centroid, rotation) = eckart_sums(r.points());
        if centroid > tol || rotation > tol {
            return Err(GeometryError::NotAligned { centroid, rotation });
        }
        Ok(Self(r))
    }

    pub fn new_unchecked(r: Realization) -> Self {
        Self(r)
    }

    pub fn realization(&self) -> &Realization {
        &self.0
    }

    pub fn points(&self) -> &[Point; RING] {
        self.0.points()
    }

    pub fn params(&self) -> LinkageParams {
        self.0.params()
    }

    /// Eckart alignment tolerance used throughout, `1e-9 * ℓ`.
    pub fn alignment_tolerance(params: &LinkageParams) -> f64 {
        1e-9 * params.bond_length
    }

    pub fn is_aligned(&self, tol: f64) -> bool {
        let (c, r) = eckart_sums(self.points());
        c <= tol && r <= tol
    }

    pub fn into_inner(self) -> Realization {
        self.0
    }
}

/// Eight oriented dihedral angles in `(-π, π]`; entry `i` is the torsion
/// about edge `e_i = x_{i+1} - x_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorsionSequence([f64; RING]);

impl TorsionSequence {
    /// Wraps each angle into `(-π, π]`.
    pub fn new(angles: [f64; RING]) -> Self {
        Self(angles.map(wrap_angle))
    }

    pub fn angles(&self) -> &[f64; RING] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i % RING]
    }

    pub fn negated(&self) -> Self {
        Self::new(self.0.map(|a| -a))
    }
}

impl fmt::Display for TorsionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:.2}°", a.to_degrees())?;
        }
        write!(f, ")")
    }
}

/// Maps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

/// Element `s^reflect ∘ t^shift` of the dihedral group of order 16, where
/// `t` shifts the labels by one and `s` reverses them. `t^shift` is applied
/// first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    shift: u8,
    reflect: bool,
}

impl GroupElement {
    pub const IDENTITY: Self = Self { shift: 0, reflect: false };
    pub const T: Self = Self { shift: 1, reflect: false };
    pub const S: Self = Self { shift: 0, reflect: true };

    pub fn new(shift: i64, reflect: bool) -> Self {
        Self { shift: shift.rem_euclid(RING as i64) as u8, reflect }
    }

    pub fn shift(&self) -> usize {
        self.shift as usize
    }

    pub fn reflect(&self) -> bool {
        self.reflect
    }

    /// The eight rotations `t^0 … t^7`.
    pub fn cyclic() -> impl Iterator<Item = Self> {
        (0..RING as i64).map(|k| Self::new(k, false))
    }

    /// All sixteen elements, rotations first.
    pub fn dihedral() -> impl Iterator<Item = Self> {
        Self::cyclic().chain((0..RING as i64).map(|k| Self::new(k, true)))
    }

    /// Index map on torsion sequences: `(g·σ)_i = σ_{g.torsion_index(i)}`.
    pub fn torsion_index(&self, i: usize) -> usize {
        let k = self.shift as i64;
        let i = i as i64;
        let j = if self.reflect { 1 - i + k } else { i + k };
        j.rem_euclid(RING as i64) as usize
    }

    /// Index map on vertices: `(g·x)_i = M_g x_{g.vertex_index(i)}`.
    pub fn vertex_index(&self, i: usize) -> usize {
        let k = self.shift as i64;
        let i = i as i64;
        let j = if self.reflect { 2 - i + k } else { i + k };
        j.rem_euclid(RING as i64) as usize
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        // Torsion maps are affine, i ↦ ε i + c, with c = shift + reflect.
        let (e1, c1) = self.affine();
        let (e2, c2) = other.affine();
        let eps = e1 * e2;
        let c = e2 * c1 + c2;
        let reflect = eps < 0;
        Self::new(c - reflect as i64, reflect)
    }

    pub fn inverse(&self) -> Self {
        if self.reflect {
            *self
        } else {
            Self::new(-(self.shift as i64), false)
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::IDENTITY, |acc, _| self.compose(&acc))
    }

    fn affine(&self) -> (i64, i64) {
        if self.reflect {
            (-1, self.shift as i64 + 1)
        } else {
            (1, self.shift as i64)
        }
    }

    /// Rotation accompanying the relabelling on Eckart-aligned realizations.
    pub fn rotation(&self) -> Matrix3<f64> {
        let t = shift_rotation().pow(self.shift as u32);
        if self.reflect {
            reversal_rotation() * t
        } else {
            t
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.reflect, self.shift) {
            (false, 0) => write!(f, "id"),
            (false, k) => write!(f, "t^{k}"),
            (true, 0) => write!(f, "s"),
            (true, k) => write!(f, "s·t^{k}"),
        }
    }
}

/// Rotation by −π/4 about the z axis; `T x^pln_{i+1} = x^pln_i`.
pub fn shift_rotation() -> Matrix3<f64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Matrix3::new(h, h, 0.0, -h, h, 0.0, 0.0, 0.0, 1.0)
}

/// Rotation by π about the horizontal axis at angle π/8;
/// maps `x^pln_{2-i}` to `x^pln_i`.
pub fn reversal_rotation() -> Matrix3<f64> {
    let u = Vector3::new(FRAC_PI_8.cos(), FRAC_PI_8.sin(), 0.0);
    2.0 * u * u.transpose() - Matrix3::identity()
}

/// Vertices of the planar regular octagon with circumradius 1,
/// `x^pln_i = (cos (2i-1)π/8, sin (2i-1)π/8, 0)`.
pub fn planar_reference() -> [Point; RING] {
    std::array::from_fn(|i| {
        let a = (2.0 * i as f64 - 1.0) * FRAC_PI_8;
        Vector3::new(a.cos(), a.sin(), 0.0)
    })
}

/// Norms of the two Eckart sums `Σ x_i` and `Σ x^pln_i × x_i`.
pub fn eckart_sums(points: &[Point; RING]) -> (f64, f64) {
    let pln = planar_reference();
    let centroid: Point = points.iter().sum();
    let rot: Point = pln.iter().zip(points).map(|(p, x)| p.cross(x)).sum();
    (centroid.norm(), rot.norm())
}

#[inline]
pub(crate) fn next(i: usize) -> usize {
    (i + 1) % RING
}

#[inline]
pub(crate) fn prev(i: usize) -> usize {
    (i + RING - 1) % RING
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Oriented torsion angles. `σ_i = atan2(⟨n_{i-1} × n_i, ê_i⟩, ⟨n_{i-1}, n_i⟩)`
/// with `n_i` the unit normal of `e_i × e_{i+1}`.
pub fn torsion_angles(r: &Realization) -> Result<TorsionSequence, GeometryError> {
    torsions_of_points(r.points())
}

pub(crate) fn torsions_of_points(x: &[Point; RING]) -> Result<TorsionSequence, GeometryError> {
    let edges: [Point; RING] = std::array::from_fn(|i| x[next(i)] - x[i]);
    let mut normals = [Point::zeros(); RING];
    for i in 0..RING {
        let c = edges[i].cross(&edges[next(i)]);
        let n = c.norm();
        if n < 1e-12 {
            return Err(GeometryError::DegenerateGeometry { index: next(i) });
        }
        normals[i] = c / n;
    }
    let angles = std::array::from_fn(|i| {
        let a = normals[prev(i)];
        let b = normals[i];
        let e = edges[i].normalize();
        a.cross(&b).dot(&e).atan2(a.dot(&b))
    });
    Ok(TorsionSequence::new(angles))
}

/// The sixteen quadratic constraint values: entries `0..8` are
/// `‖x_{i+1} - x_i‖² - ℓ²`, entries `8..16` are `‖x_{i+2} - x_i‖² - (2ℓ² - 2ℓ² cos φ)`.
pub fn constraint_residual(points: &[Point; RING], params: &LinkageParams) -> [f64; 2 * RING] {
    let l2 = params.bond_length * params.bond_length;
    let d2 = params.second_neighbour_sq();
    std::array::from_fn(|k| {
        if k < RING {
            (points[next(k)] - points[k]).norm_squared() - l2
        } else {
            let i = k - RING;
            (points[(i + 2) % RING] - points[i]).norm_squared() - d2
        }
    })
}

/// Jacobian of [`constraint_residual`] as a row-major 16×24 array, columns
/// ordered `(x0, y0, z0, x1, …)`.
pub fn constraint_jacobian(points: &[Point; RING]) -> [[f64; 3 * RING]; 2 * RING] {
    let mut jac = [[0.0; 3 * RING]; 2 * RING];
    for k in 0..2 * RING {
        let (i, j) = if k < RING { (k, next(k)) } else { (k - RING, (k - RING + 2) % RING) };
        let d = points[j] - points[i];
        for c in 0..3 {
            jac[k][3 * j + c] = 2.0 * d[c];
            jac[k][3 * i + c] = -2.0 * d[c];
        }
    }
    jac
}

/// Rigidly moves `r` into Eckart frame: translation to the centroid, then the
/// proper rotation minimising `Σ ‖x^pln_i - R x_i‖²`.
pub fn eckart_align(r: &Realization) -> Result<StandardRealization, GeometryError> {
    let points = eckart_align_points(r.points())?;
    Ok(StandardRealization(Realization::from_points_unchecked(points, r.params())))
}

pub(crate) fn eckart_align_points(x: &[Point; RING]) -> Result<[Point; RING], GeometryError> {
    let centroid: Point = x.iter().sum::<Point>() / RING as f64;
    let centred = x.map(|p| p - centroid);
    let pln = planar_reference();
    let mut h = Matrix3::zeros();
    for (q, p) in centred.iter().zip(&pln) {
        h += q * p.transpose();
    }
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("svd u"), svd.v_t.expect("svd v_t"));
    let s = svd.singular_values;
    let mut sorted = [s[0], s[1], s[2]];
    sorted.sort_by(|a, b| b.total_cmp(a));
    // The reference is planar, so rank 2 is the generic case.
    if !(sorted[1] > 1e-10 * sorted[0].max(f64::MIN_POSITIVE)) {
        return Err(GeometryError::AlignmentDegenerate { singular_values: sorted });
    }
    let v = v_t.transpose();
    let smallest = (0..3).min_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap_or(2);
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(smallest, smallest)] = -1.0;
    }
    let rot = v * d * u.transpose();
    Ok(centred.map(|q| rot * q))
}

/// `g` acting on torsion sequences.
pub fn act_on_torsions(g: &GroupElement, sigma: &TorsionSequence) -> TorsionSequence {
    let a = sigma.angles();
    TorsionSequence(std::array::from_fn(|i| a[g.torsion_index(i)]))
}

/// `g` acting on Eckart-aligned realizations: relabelling combined with the
/// rotation that keeps the planar reference fixed.
pub fn act_on_standard(g: &GroupElement, x: &StandardRealization) -> StandardRealization {
    let points = act_on_points(g, x.points());
    StandardRealization(Realization::from_points_unchecked(points, x.params()))
}

pub(crate) fn act_on_points(g: &GroupElement, x: &[Point; RING]) -> [Point; RING] {
    let m = g.rotation();
    std::array::from_fn(|i| m * x[g.vertex_index(i)])
}

/// The planar regular octagon with edge length ℓ, in Eckart frame.
pub fn planar_octagon(params: &LinkageParams) -> [Point; RING] {
    let radius = params.bond_length / (2.0 * FRAC_PI_8.sin());
    planar_reference().map(|p| p * radius)
}

/// The crown: vertices alternate between two parallel planes, torsions
/// `(α, -α, α, -α, …)`. Exists for every `φ ≤ 3π/4` and collapses to the
/// planar octagon at `φ = 3π/4`.
pub fn crown(params: &LinkageParams, upper_first: bool) -> Option<[Point; RING]> {
    let l2 = params.bond_length * params.bond_length;
    let r2 = params.second_neighbour_sq() / 2.0;
    let chord2 = 4.0 * r2 * FRAC_PI_8.sin().powi(2);
    let h2 = (l2 - chord2) / 4.0;
    if h2 < -1e-12 * l2 {
        return None;
    }
    let h = h2.max(0.0).sqrt();
    let radius = r2.sqrt();
    let sign = if upper_first { 1.0 } else { -1.0 };
    let pln = planar_reference();
    Some(std::array::from_fn(|i| {
        let z = if i % 2 == 0 { sign * h } else { -sign * h };
        Vector3::new(pln[i].x * radius, pln[i].y * radius, z)
    }))
}

/// Builds an open chain from torsions by the standard internal-coordinate
/// construction: bond `ℓ`, angle `φ`, dihedral `σ_i` about edge `i`. The
/// returned 8 points satisfy every constraint except possibly the ones that
/// close the ring.
pub fn chain_from_torsions(sigma: &TorsionSequence, params: &LinkageParams) -> [Point; RING] {
    let l = params.bond_length;
    let phi = params.bond_angle;
    let mut x = [Point::zeros(); RING];
    x[1] = Vector3::new(l, 0.0, 0.0);
    x[2] = x[1] + l * Vector3::new(-phi.cos(), phi.sin(), 0.0);
    for k in 3..RING {
        // Dihedral about edge e_{k-2} = (x_{k-2}, x_{k-1}) is σ_{k-2}.
        let a = x[k - 3];
        let b = x[k - 2];
        let c = x[k - 1];
        let bc = (c - b).normalize();
        let n = (b - a).cross(&bc).normalize();
        let m = n.cross(&bc);
        let tor = sigma.get(k - 2);
        x[k] = c + l * (bc * -phi.cos() + m * (phi.sin() * tor.cos()) + n * (phi.sin() * tor.sin()));
    }
    x
}

/// Rotation by `angle` about the unit `axis`.
pub fn axis_rotation(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle).into_inner()
}
