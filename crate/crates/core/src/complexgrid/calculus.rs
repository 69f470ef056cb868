//! Discrete complex calculus on a meshed planar domain: per-triangle Wirtinger
//! derivatives, cotangent Laplacian, and line integrals along paths.

use serde::{Deserialize, Serialize};

use super::mesh::{cross, PlanarDomain};
use super::GridError;
use crate::C64;

/// Per-triangle gradient `(f_x, f_y)` of the piecewise-linear interpolant.
fn triangle_gradient(domain: &PlanarDomain, field: &[C64], t: usize) -> Result<(C64, C64), GridError> {
    let mesh = &domain.mesh;
    let [ia, ib, ic] = mesh.triangles[t];
    let (a, b, c) = (mesh.vertices[ia], mesh.vertices[ib], mesh.vertices[ic]);
    let (e1, e2) = (b - a, c - a);
    let det = cross(e1, e2);
    let scale = e1.norm_sqr().max(e2.norm_sqr());
    if det.abs() <= 64.0 * f64::EPSILON * scale {
        return Err(GridError::DegenerateTriangle(t));
    }
    let (d1, d2) = (field[ib] - field[ia], field[ic] - field[ia]);
    // [e1.re e1.im; e2.re e2.im] [fx; fy] = [d1; d2]
    let fx = (d1 * e2.im - d2 * e1.im) / det;
    let fy = (d2 * e1.re - d1 * e2.re) / det;
    Ok((fx, fy))
}

/// Per-triangle `df/dz = (f_x - i f_y) / 2` of the linear interpolant of vertex data.
pub fn complex_derivative(field: &[C64], domain: &PlanarDomain) -> Result<Vec<C64>, GridError> {
    check_len(field.len(), domain)?;
    (0..domain.mesh.triangles.len())
        .map(|t| {
            let (fx, fy) = triangle_gradient(domain, field, t)?;
            Ok(0.5 * (fx - C64::i() * fy))
        })
        .collect()
}

/// Per-triangle `df/dz̄ = (f_x + i f_y) / 2`.
pub fn conjugate_derivative(field: &[C64], domain: &PlanarDomain) -> Result<Vec<C64>, GridError> {
    check_len(field.len(), domain)?;
    (0..domain.mesh.triangles.len())
        .map(|t| {
            let (fx, fy) = triangle_gradient(domain, field, t)?;
            Ok(0.5 * (fx + C64::i() * fy))
        })
        .collect()
}

/// Real gradient of a real vertex field per triangle.
pub fn real_gradient(field: &[f64], domain: &PlanarDomain) -> Result<Vec<[f64; 2]>, GridError> {
    let cfield: Vec<C64> = field.iter().map(|&x| C64::new(x, 0.0)).collect();
    check_len(cfield.len(), domain)?;
    (0..domain.mesh.triangles.len())
        .map(|t| {
            let (fx, fy) = triangle_gradient(domain, &cfield, t)?;
            Ok([fx.re, fy.re])
        })
        .collect()
}

fn check_len(n: usize, domain: &PlanarDomain) -> Result<(), GridError> {
    if n != domain.mesh.num_vertices() {
        return Err(GridError::FieldSize {
            expected: domain.mesh.num_vertices(),
            got: n,
        });
    }
    Ok(())
}

/// Cotangent edge weights `(cot α + cot β) / 2`, keyed like [`super::Mesh::edges`].
pub fn cotan_weights(domain: &PlanarDomain) -> Vec<([usize; 2], f64)> {
    let mesh = &domain.mesh;
    let mut w: std::collections::BTreeMap<[usize; 2], f64> = std::collections::BTreeMap::new();
    for tri in &mesh.triangles {
        for k in 0..3 {
            let (i, j, o) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let (u, v) = (mesh.vertices[i] - mesh.vertices[o], mesh.vertices[j] - mesh.vertices[o]);
            let cot = (u.re * v.re + u.im * v.im) / cross(u, v);
            *w.entry([i.min(j), i.max(j)]).or_insert(0.0) += 0.5 * cot;
        }
    }
    w.into_iter().collect()
}

/// Unnormalized cotangent Laplacian `sum_j w_ij (u_j - u_i)` at every vertex.
pub fn cotan_laplacian(field: &[f64], domain: &PlanarDomain) -> Vec<f64> {
    let mut out = vec![0.0; field.len()];
    for ([a, b], w) in cotan_weights(domain) {
        let d = field[b] - field[a];
        out[a] += w * d;
        out[b] -= w * d;
    }
    out
}

/// Harmonicity defect per interior vertex: the cotangent flux imbalance of the
/// interpolant through the dual cell, divided by the dual-cell perimeter
/// `sum_j w_ij |x_j - x_i|`. Vanishes for affine fields; boundary and curve
/// vertices report `None`.
pub fn harmonicity_defect(field: &[f64], domain: &PlanarDomain) -> Vec<Option<f64>> {
    let mesh = &domain.mesh;
    let mut flux = vec![0.0; field.len()];
    let mut perimeter = vec![0.0; field.len()];
    for ([a, b], w) in cotan_weights(domain) {
        let d = field[b] - field[a];
        flux[a] += w * d;
        flux[b] -= w * d;
        let len = (mesh.vertices[a] - mesh.vertices[b]).norm();
        perimeter[a] += w * len;
        perimeter[b] += w * len;
    }
    (0..field.len())
        .map(|v| {
            if mesh.is_boundary(v) || perimeter[v] <= 0.0 {
                None
            } else {
                Some(flux[v].abs() / perimeter[v])
            }
        })
        .collect()
}

/// Max harmonicity defect over interior vertices.
pub fn max_harmonicity_defect(field: &[f64], domain: &PlanarDomain) -> f64 {
    harmonicity_defect(field, domain)
        .into_iter()
        .flatten()
        .fold(0.0, f64::max)
}

/// A point on a path: either a mesh vertex or an arbitrary complex number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PathPoint {
    Vertex(usize),
    Point(C64),
}

/// Polyline through the domain; closed paths repeat their first point last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathInDomain {
    pub points: Vec<PathPoint>,
    pub closed: bool,
}

impl PathInDomain {
    pub fn open(points: Vec<PathPoint>) -> Self {
        Self {
            points,
            closed: false,
        }
    }

    /// Closed path through `points`; the first point is appended at the end.
    pub fn closed(mut points: Vec<PathPoint>) -> Self {
        if let Some(&first) = points.first() {
            if points.last() != Some(&first) || points.len() == 1 {
                points.push(first);
            }
        }
        Self {
            points,
            closed: true,
        }
    }

    /// Counterclockwise circle sampled at `n` points.
    pub fn circle(center: C64, radius: f64, n: usize) -> Self {
        Self::closed(
            (0..n)
                .map(|k| {
                    PathPoint::Point(
                        center
                            + C64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / n as f64),
                    )
                })
                .collect(),
        )
    }

    /// Closed loop through mesh vertices.
    pub fn vertex_loop(vertices: &[usize]) -> Self {
        Self::closed(vertices.iter().map(|&v| PathPoint::Vertex(v)).collect())
    }

    /// Vertices reversed (orientation flip).
    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self {
            points,
            closed: self.closed,
        }
    }

    pub fn coordinates(&self, domain: &PlanarDomain) -> Result<Vec<C64>, GridError> {
        self.points
            .iter()
            .map(|p| match *p {
                PathPoint::Vertex(v) => domain
                    .mesh
                    .vertices
                    .get(v)
                    .copied()
                    .ok_or(GridError::PathExitsMesh(v as f64, 0.0)),
                PathPoint::Point(z) => Ok(z),
            })
            .collect()
    }

    pub fn length(&self, domain: &PlanarDomain) -> Result<f64, GridError> {
        let z = self.coordinates(domain)?;
        Ok(z.windows(2).map(|w| (w[1] - w[0]).norm()).sum())
    }
}

/// A complex field on a domain.
#[derive(Clone, Copy)]
pub enum ComplexField<'a> {
    /// Values at mesh vertices, linearly interpolated inside triangles.
    Vertex(&'a [C64]),
    /// Piecewise-constant per-triangle values.
    Triangle(&'a [C64]),
    /// Closed-form function of `z`.
    Analytic(&'a dyn Fn(C64) -> C64),
}

impl ComplexField<'_> {
    fn value(&self, p: PathPoint, domain: &PlanarDomain) -> Result<C64, GridError> {
        match (*self, p) {
            (ComplexField::Vertex(f), PathPoint::Vertex(v)) => Ok(f[v]),
            (ComplexField::Analytic(f), PathPoint::Vertex(v)) => Ok(f(domain.mesh.vertices[v])),
            (ComplexField::Analytic(f), PathPoint::Point(z)) => Ok(f(z)),
            (ComplexField::Vertex(f), PathPoint::Point(z)) => {
                let (t, l) = domain
                    .locate(z)
                    .ok_or(GridError::PathExitsMesh(z.re, z.im))?;
                let tri = domain.mesh.triangles[t];
                Ok(f[tri[0]] * l[0] + f[tri[1]] * l[1] + f[tri[2]] * l[2])
            }
            (ComplexField::Triangle(f), p) => {
                let z = match p {
                    PathPoint::Vertex(v) => domain.mesh.vertices[v],
                    PathPoint::Point(z) => z,
                };
                let (t, _) = domain
                    .locate(z)
                    .ok_or(GridError::PathExitsMesh(z.re, z.im))?;
                Ok(f[t])
            }
        }
    }
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

/// Line integral `∫ f dz` along the path.
///
/// Sampled fields use the trapezoidal rule on path points. Analytic fields are
/// integrated exactly along each straight segment up to 5-point Gauss-Legendre
/// accuracy. Points must lie in the domain: sampled fields require point
/// location in the mesh, analytic fields require membership in the closed
/// region described by the domain spec or in the mesh itself.
pub fn path_integral(
    field: ComplexField<'_>,
    path: &PathInDomain,
    domain: &PlanarDomain,
) -> Result<C64, GridError> {
    let z = path.coordinates(domain)?;
    if z.len() < 2 {
        return Ok(C64::new(0.0, 0.0));
    }
    if let ComplexField::Vertex(f) | ComplexField::Triangle(f) = field {
        let expected = match field {
            ComplexField::Vertex(_) => domain.mesh.num_vertices(),
            _ => domain.mesh.triangles.len(),
        };
        if f.len() != expected {
            return Err(GridError::FieldSize {
                expected,
                got: f.len(),
            });
        }
    }
    match field {
        ComplexField::Analytic(f) => {
            let tol = 1e-9 * domain.spec.h;
            let mids = z.windows(2).map(|w| 0.5 * (w[0] + w[1]));
            for q in z.iter().copied().chain(mids) {
                if !spec_contains(domain, q, tol) && !domain.contains(q) {
                    return Err(GridError::PathExitsMesh(q.re, q.im));
                }
            }
            let mut total = C64::new(0.0, 0.0);
            for w in z.windows(2) {
                let (a, b) = (w[0], w[1]);
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                let seg: C64 = GAUSS5.iter().map(|&(x, wt)| f(mid + half * x) * wt).sum();
                total += seg * half;
            }
            Ok(total)
        }
        _ => {
            let vals: Vec<C64> = path
                .points
                .iter()
                .map(|&p| field.value(p, domain))
                .collect::<Result<_, _>>()?;
            for w in z.windows(2) {
                let m = 0.5 * (w[0] + w[1]);
                if domain.locate(m).is_none() {
                    return Err(GridError::PathExitsMesh(m.re, m.im));
                }
            }
            Ok((1..z.len())
                .map(|k| 0.5 * (z[k] - z[k - 1]) * (vals[k] + vals[k - 1]))
                .sum())
        }
    }
}

fn spec_contains(domain: &PlanarDomain, z: C64, tol: f64) -> bool {
    use super::mesh::Curve;
    let near = |c: &Curve| -> f64 {
        match c {
            Curve::Circle { center, radius } => ((z - center).norm() - radius).abs(),
            Curve::Polygon { points } => (0..points.len())
                .map(|i| super::mesh::segment_distance(z, points[i], points[(i + 1) % points.len()]))
                .fold(f64::INFINITY, f64::min),
        }
    };
    let spec = &domain.spec;
    let in_outer = spec.outer.contains(z) || near(&spec.outer) <= tol;
    let in_hole = spec.holes.iter().any(|h| h.contains(z) && near(h) > tol);
    in_outer && !in_hole
}
