//! Topology of the conformation space of an eight-membered ring with fixed
//! bond lengths and bond angles: sampling, metrics, the dihedral symmetry
//! classification, persistent homology and low-dimensional embeddings.

pub mod embedding;
pub mod geometry;
pub mod homology;
pub mod metrics;
pub mod sampling;
pub mod symmetry;

pub use geometry::{
    act_on_standard, act_on_torsions, constraint_jacobian, constraint_residual, eckart_align,
    torsion_angles, GeometryError, GroupElement, LinkageParams, Realization, StandardRealization,
    TorsionSequence,
};
pub use metrics::{BaseMetric, DistanceMatrix, MetricError, MetricSpec, Quotient};
