//! Minimal plurisubharmonicity tests for functions on ℝ³, mean convexity of
//! closed boundary meshes, and connected components of sublevel sets.

use std::sync::Arc;

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

mod sublevel;
mod surface;

pub use sublevel::{
    component_boundary_mesh, exhaustion_chain, select_component, sublevel_components, write_nrrd, ChainLevel,
    ExhaustionChain, VoxelComponent,
};
pub use surface::{box_mesh, icosphere, mean_convexity, torus, vertex_mean_curvature, MeanConvexityReport};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ConvexityError {
    #[error("point ({0}, {1}, {2}) is outside the field box (or closer than one step to its edge)")]
    OutsideBox(f64, f64, f64),
    #[error("sample grid is empty")]
    EmptyGrid,
    #[error("grid values: expected {expected}, got {got}")]
    GridSize { expected: usize, got: usize },
    #[error("mesh is not closed: edge ({0}, {1}) has {2} incident faces")]
    NotClosed(usize, usize, usize),
    #[error("mesh is not consistently oriented at edge ({0}, {1})")]
    NotOrientable(usize, usize),
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),
    #[error("sublevel values must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("marker lies in no component")]
    MarkerOutside,
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for ConvexityError {
    fn from(e: std::io::Error) -> Self {
        ConvexityError::Io(e.to_string())
    }
}

pub type Point3 = [f64; 3];
type Eval = Arc<dyn Fn(Point3) -> f64 + Send + Sync>;
type Hess = Arc<dyn Fn(Point3) -> Matrix3<f64> + Send + Sync>;

/// Regular lattice of sample points on a closed box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    pub lo: Point3,
    pub hi: Point3,
    pub dims: [usize; 3],
}

impl Grid3 {
    pub fn new(lo: Point3, hi: Point3, dims: [usize; 3]) -> Self {
        Self { lo, hi, dims }
    }

    pub fn cube(half: f64, n: usize) -> Self {
        Self::new([-half; 3], [half; 3], [n; 3])
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> Point3 {
        std::array::from_fn(|a| {
            if self.dims[a] > 1 {
                (self.hi[a] - self.lo[a]) / (self.dims[a] - 1) as f64
            } else {
                0.0
            }
        })
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        [i, j, idx / (self.dims[0] * self.dims[1])]
    }

    pub fn point(&self, idx: usize) -> Point3 {
        let s = self.spacing();
        let ijk = self.ijk(idx);
        std::array::from_fn(|a| self.lo[a] + ijk[a] as f64 * s[a])
    }

    /// Nearest lattice index, if `x` lies in the box.
    pub fn nearest(&self, x: Point3) -> Option<usize> {
        let s = self.spacing();
        let mut ijk = [0usize; 3];
        for a in 0..3 {
            if !(x[a] >= self.lo[a] && x[a] <= self.hi[a]) {
                return None;
            }
            ijk[a] = if s[a] > 0.0 {
                (((x[a] - self.lo[a]) / s[a]).round() as usize).min(self.dims[a] - 1)
            } else {
                0
            };
        }
        Some(self.index(ijk[0], ijk[1], ijk[2]))
    }
}

/// Real function on a box in ℝ³: closed form (optionally with its Hessian)
/// or trilinear interpolation of lattice values.
#[derive(Clone)]
pub struct ScalarField3 {
    eval: Eval,
    hessian: Option<Hess>,
    pub lo: Point3,
    pub hi: Point3,
    /// Length scale used for the default finite-difference step.
    pub scale: f64,
}

impl std::fmt::Debug for ScalarField3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField3")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("scale", &self.scale)
            .field("analytic_hessian", &self.hessian.is_some())
            .finish()
    }
}

impl ScalarField3 {
    pub fn analytic(lo: Point3, hi: Point3, f: impl Fn(Point3) -> f64 + Send + Sync + 'static) -> Self {
        let scale = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max).max(1.0);
        Self {
            eval: Arc::new(f),
            hessian: None,
            lo,
            hi,
            scale,
        }
    }

    pub fn with_hessian(mut self, h: impl Fn(Point3) -> Matrix3<f64> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    pub fn without_hessian(mut self) -> Self {
        self.hessian = None;
        self
    }

    /// Trilinear interpolation of `values` (x fastest) on `grid`.
    pub fn from_grid(grid: Grid3, values: Vec<f64>) -> Result<Self, ConvexityError> {
        if values.len() != grid.len() {
            return Err(ConvexityError::GridSize {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if grid.dims.iter().any(|&d| d < 2) {
            return Err(ConvexityError::EmptyGrid);
        }
        let (lo, hi) = (grid.lo, grid.hi);
        let s = grid.spacing();
        let f = move |x: Point3| {
            let mut base = [0usize; 3];
            let mut t = [0.0; 3];
            for a in 0..3 {
                let u = ((x[a] - grid.lo[a]) / s[a]).clamp(0.0, (grid.dims[a] - 1) as f64);
                let b = (u.floor() as usize).min(grid.dims[a] - 2);
                base[a] = b;
                t[a] = u - b as f64;
            }
            let mut acc = 0.0;
            for c in 0..8 {
                let d = [c & 1, (c >> 1) & 1, (c >> 2) & 1];
                let w: f64 = (0..3).map(|a| if d[a] == 1 { t[a] } else { 1.0 - t[a] }).product();
                acc += w * values[grid.index(base[0] + d[0], base[1] + d[1], base[2] + d[2])];
            }
            acc
        };
        Ok(Self::analytic(lo, hi, f))
    }

    pub fn eval(&self, x: Point3) -> f64 {
        (self.eval)(x)
    }

    pub fn has_analytic_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn default_step(&self) -> f64 {
        f64::EPSILON.cbrt() * self.scale
    }

    fn inside(&self, x: Point3, margin: f64) -> bool {
        (0..3).all(|a| x[a] - margin >= self.lo[a] && x[a] + margin <= self.hi[a])
    }

    /// Analytic Hessian when available, otherwise central differences.
    pub fn hessian(&self, x: Point3, fd_step: Option<f64>) -> Result<Matrix3<f64>, ConvexityError> {
        if let Some(h) = &self.hessian {
            if !self.inside(x, 0.0) {
                return Err(ConvexityError::OutsideBox(x[0], x[1], x[2]));
            }
            return Ok(h(x));
        }
        let h = fd_step.unwrap_or_else(|| self.default_step());
        if !self.inside(x, h) {
            return Err(ConvexityError::OutsideBox(x[0], x[1], x[2]));
        }
        let f = |dx: [f64; 3]| self.eval([x[0] + dx[0], x[1] + dx[1], x[2] + dx[2]]);
        let e = |a: usize, s: f64| -> [f64; 3] { std::array::from_fn(|b| if a == b { s } else { 0.0 }) };
        let add = |p: [f64; 3], q: [f64; 3]| -> [f64; 3] { std::array::from_fn(|b| p[b] + q[b]) };
        let f0 = f([0.0; 3]);
        let mut m = Matrix3::zeros();
        for a in 0..3 {
            m[(a, a)] = (f(e(a, h)) - 2.0 * f0 + f(e(a, -h))) / (h * h);
            for b in a + 1..3 {
                let v = (f(add(e(a, h), e(b, h))) - f(add(e(a, h), e(b, -h))) - f(add(e(a, -h), e(b, h)))
                    + f(add(e(a, -h), e(b, -h))))
                    / (4.0 * h * h);
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        Ok(m)
    }
}

/// Sorted eigenvalues λ₁ ≤ λ₂ ≤ λ₃ of the Hessian at `x`.
pub fn hessian_eigs(field: &ScalarField3, x: Point3, fd_step: Option<f64>) -> Result<[f64; 3], ConvexityError> {
    let m = field.hessian(x, fd_step)?;
    let ev = SymmetricEigen::new(m).eigenvalues;
    let mut out = [ev[0], ev[1], ev[2]];
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PshVerdict {
    StronglyMinimalPsh,
    MinimalPshBoundaryCase,
    NotMinimalPsh,
}

impl PshVerdict {
    pub fn classify(min_sum: f64, tol: f64) -> Self {
        if min_sum > tol {
            PshVerdict::StronglyMinimalPsh
        } else if min_sum >= -tol {
            PshVerdict::MinimalPshBoundaryCase
        } else {
            PshVerdict::NotMinimalPsh
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    /// Minimum of λ₁ + λ₂ over the samples.
    pub min_over_region: f64,
    pub argmin: Point3,
    pub verdict: PshVerdict,
    pub tolerance: f64,
    pub samples: usize,
    pub analytic_hessian: bool,
}

/// Minimum of λ₁ + λ₂ over the grid points and the resulting verdict.
pub fn check_minimal_psh(
    field: &ScalarField3,
    grid: &Grid3,
    tol: f64,
    fd_step: Option<f64>,
) -> Result<ConvexityReport, ConvexityError> {
    if grid.is_empty() {
        return Err(ConvexityError::EmptyGrid);
    }
    let (min, idx) = (0..grid.len())
        .into_par_iter()
        .map(|i| hessian_eigs(field, grid.point(i), fd_step).map(|l| (l[0] + l[1], i)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold((f64::INFINITY, 0), |acc, v| if v.0 < acc.0 { v } else { acc });
    Ok(ConvexityReport {
        min_over_region: min,
        argmin: grid.point(idx),
        verdict: PshVerdict::classify(min, tol),
        tolerance: tol,
        samples: grid.len(),
        analytic_hessian: field.has_analytic_hessian(),
    })
}

/// `|x|²` on `[-b, b]³` with its Hessian.
pub fn norm_squared(b: f64) -> ScalarField3 {
    ScalarField3::analytic([-b; 3], [b; 3], |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
        .with_hessian(|_| Matrix3::from_diagonal_element(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn saddle(b: f64) -> ScalarField3 {
        ScalarField3::analytic([-b; 3], [b; 3], |x| x[0] * x[0] + x[1] * x[1] - x[2] * x[2])
            .with_hessian(|_| Matrix3::from_diagonal(&nalgebra::Vector3::new(2.0, 2.0, -2.0)))
    }

    #[test]
    fn eigen_examples() {
        let x = [0.3, -0.2, 0.7];
        assert_eq!(hessian_eigs(&norm_squared(2.0), x, None).unwrap(), [2.0, 2.0, 2.0]);
        assert_eq!(hessian_eigs(&saddle(2.0), x, None).unwrap(), [-2.0, 2.0, 2.0]);
        let prod = ScalarField3::analytic([-2.0; 3], [2.0; 3], |x| x[0] * x[1]);
        let l = hessian_eigs(&prod, x, None).unwrap();
        for (a, b) in l.iter().zip([-1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-5);
        }
        assert!(matches!(
            hessian_eigs(&prod, [2.0, 0.0, 0.0], None),
            Err(ConvexityError::OutsideBox(..))
        ));
    }

    #[test]
    fn verdicts() {
        let g = Grid3::cube(1.0, 7);
        let r = check_minimal_psh(&norm_squared(2.0), &g, 1e-6, None).unwrap();
        assert_eq!(r.verdict, PshVerdict::StronglyMinimalPsh);
        assert_eq!(r.min_over_region, 4.0);
        let fd = check_minimal_psh(&norm_squared(2.0).without_hessian(), &g, 1e-6, None).unwrap();
        assert_abs_diff_eq!(fd.min_over_region, 4.0, epsilon = 1e-3);
        let s = check_minimal_psh(&saddle(2.0).without_hessian(), &g, 1e-3, None).unwrap();
        assert_eq!(s.verdict, PshVerdict::MinimalPshBoundaryCase);
        let neg = ScalarField3::analytic([-2.0; 3], [2.0; 3], |x| -(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
        let n = check_minimal_psh(&neg, &g, 1e-3, None).unwrap();
        assert_eq!(n.verdict, PshVerdict::NotMinimalPsh);
        assert_abs_diff_eq!(n.min_over_region, -4.0, epsilon = 1e-3);
    }

    #[test]
    fn fd_converges_quadratically() {
        // φ = x²y + z⁴ has Hessian [[2y, 2x, 0], [2x, 0, 0], [0, 0, 12z²]]
        let f = ScalarField3::analytic([-2.0; 3], [2.0; 3], |x| x[0] * x[0] * x[1] + x[2].powi(4));
        let x = [0.4, -0.3, 0.5];
        let exact = Matrix3::new(2.0 * x[1], 2.0 * x[0], 0.0, 2.0 * x[0], 0.0, 0.0, 0.0, 0.0, 12.0 * x[2] * x[2]);
        let err = |h: f64| (f.hessian(x, Some(h)).unwrap() - exact).abs().max();
        let (e1, e2) = (err(1e-2), err(5e-3));
        assert!(e1 > 0.0 && (e2 / e1 - 0.25).abs() < 0.05, "{e1} {e2}");
    }

    #[test]
    fn grid_field_is_trilinear() {
        let g = Grid3::cube(1.0, 5);
        let vals: Vec<f64> = (0..g.len()).map(|i| {
            let p = g.point(i);
            1.0 + 2.0 * p[0] - p[1] + 0.5 * p[2]
        }).collect();
        let f = ScalarField3::from_grid(g, vals).unwrap();
        assert_abs_diff_eq!(f.eval([0.13, -0.4, 0.77]), 1.0 + 0.26 + 0.4 + 0.385, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn affine_invariance(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, d in -3.0..3.0f64) {
            let g = Grid3::cube(0.5, 3);
            let base = check_minimal_psh(&norm_squared(1.0).without_hessian(), &g, 1e-3, None).unwrap();
            let shifted = ScalarField3::analytic([-1.0; 3], [1.0; 3], move |x| {
                x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + a * x[0] + b * x[1] + c * x[2] + d
            });
            let r = check_minimal_psh(&shifted, &g, 1e-3, None).unwrap();
            prop_assert_eq!(r.verdict, base.verdict);
            prop_assert!((r.min_over_region - base.min_over_region).abs() < 1e-3);
        }

        #[test]
        fn convex_never_rejected(l in proptest::array::uniform3(0.0..3.0f64), s in -1.0..1.0f64) {
            // Q = Rᵀ diag(l) R with a rotation about z
            let (cs, sn) = (s.cos(), s.sin());
            let r = Matrix3::new(cs, -sn, 0.0, sn, cs, 0.0, 0.0, 0.0, 1.0);
            let q = r.transpose() * Matrix3::from_diagonal(&nalgebra::Vector3::from(l)) * r;
            let f = ScalarField3::analytic([-1.0; 3], [1.0; 3], move |x| {
                let v = nalgebra::Vector3::from(x);
                0.5 * v.dot(&(q * v))
            }).with_hessian(move |_| q);
            let rep = check_minimal_psh(&f, &Grid3::cube(0.5, 2), 1e-9, None).unwrap();
            prop_assert_ne!(rep.verdict, PshVerdict::NotMinimalPsh);
        }
    }
}
