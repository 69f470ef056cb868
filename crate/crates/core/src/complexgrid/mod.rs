//! Meshed planar domains, discrete complex calculus and polynomial fitting.

mod arnoldi;
mod calculus;
pub mod io;
mod mesh;
mod poly;

pub use calculus::{
    complex_derivative, conjugate_derivative, cotan_laplacian, cotan_weights, harmonicity_defect,
    max_harmonicity_defect, path_integral, real_gradient, ComplexField, PathInDomain, PathPoint,
};
pub use mesh::{build_domain, Curve, DomainSpec, Mesh, PlanarDomain, VertexMarker};
#[allow(unused_imports)]
pub(crate) use mesh::{point_in_polygon, segment_distance, signed_area};
pub use arnoldi::{ArnoldiBasis, ArnoldiPolynomial};
pub use poly::{least_squares_polynomial_fit, weighted_polynomial_fit, ComplexPolynomial, FitReport};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GridError {
    #[error("mesh resolution must be positive, got {0}")]
    InvalidResolution(f64),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("hole {0} touches or crosses the outer boundary")]
    HoleTouchesBoundary(usize),
    #[error("holes {0} and {1} overlap")]
    OverlappingHoles(usize, usize),
    #[error("meshing failed: {0}")]
    Meshing(String),
    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),
    #[error("field has {got} values, expected {expected}")]
    FieldSize { expected: usize, got: usize },
    #[error("path leaves the domain near ({0}, {1})")]
    PathExitsMesh(f64, f64),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("sample points are all coincident")]
    CoincidentSamples,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for GridError {
    fn from(e: std::io::Error) -> Self {
        GridError::Io(e.to_string())
    }
}
