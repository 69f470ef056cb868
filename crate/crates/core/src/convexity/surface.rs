use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ConvexityError, Point3};
use crate::complexgrid::io::SurfaceMesh;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanConvexityReport {
    /// min over vertices of κ₁ + κ₂, seen from the interior side.
    pub min: f64,
    pub argmin_vertex: usize,
    pub argmin_point: Point3,
    pub max: f64,
    pub mean: f64,
    #[serde(skip)]
    pub per_vertex: Vec<f64>,
}

fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Point3, b: Point3) -> Point3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

fn check_closed(mesh: &SurfaceMesh) -> Result<(), ConvexityError> {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for f in &mesh.faces {
        for k in 0..3 {
            *directed.entry((f[k], f[(k + 1) % 3])).or_default() += 1;
        }
    }
    for (&(a, b), &n) in &directed {
        let back = directed.get(&(b, a)).copied().unwrap_or(0);
        if n + back != 2 {
            return Err(ConvexityError::NotClosed(a.min(b), a.max(b), n + back));
        }
        if n != 1 {
            return Err(ConvexityError::NotOrientable(a.min(b), a.max(b)));
        }
    }
    Ok(())
}

fn signed_volume(mesh: &SurfaceMesh) -> f64 {
    mesh.faces
        .iter()
        .map(|f| {
            let [a, b, c] = f.map(|i| mesh.vertices[i]);
            dot(a, cross(b, c)) / 6.0
        })
        .sum()
}

/// Per-vertex κ₁ + κ₂ from the cotangent formula with mixed Voronoi areas.
/// Positive where the surface bends towards the enclosed region (a sphere is
/// positive everywhere). The enclosed side is found from the sign of the
/// enclosed volume, so either face orientation is accepted.
pub fn vertex_mean_curvature(mesh: &SurfaceMesh) -> Result<Vec<f64>, ConvexityError> {
    check_closed(mesh)?;
    let nv = mesh.vertices.len();
    let mut lap = vec![[0.0; 3]; nv];
    let mut area = vec![0.0; nv];
    let mut normal = vec![[0.0; 3]; nv];
    for (fi, f) in mesh.faces.iter().enumerate() {
        let p = f.map(|i| mesh.vertices[i]);
        let n = cross(sub(p[1], p[0]), sub(p[2], p[0]));
        let a2 = norm(n);
        if !(a2 > 0.0) {
            return Err(ConvexityError::DegenerateMesh(format!("face {fi} has zero area")));
        }
        let mut cot = [0.0; 3];
        for k in 0..3 {
            let (u, v) = (sub(p[(k + 1) % 3], p[k]), sub(p[(k + 2) % 3], p[k]));
            cot[k] = dot(u, v) / a2;
        }
        let obtuse = (0..3).find(|&k| cot[k] < 0.0);
        for k in 0..3 {
            let (i, j, l) = (k, (k + 1) % 3, (k + 2) % 3);
            // edge ij is opposite l, edge il opposite j
            let (eij, eil) = (sub(p[j], p[i]), sub(p[l], p[i]));
            for a in 0..3 {
                lap[f[i]][a] += 0.5 * (cot[l] * eij[a] + cot[j] * eil[a]);
                normal[f[i]][a] += n[a];
            }
            area[f[i]] += match obtuse {
                None => (dot(eij, eij) * cot[l] + dot(eil, eil) * cot[j]) / 8.0,
                Some(o) if o == i => a2 / 4.0,
                Some(_) => a2 / 8.0,
            };
        }
    }
    let sign = if signed_volume(mesh) >= 0.0 { -1.0 } else { 1.0 };
    Ok((0..nv)
        .map(|v| {
            let n = normal[v];
            let len = norm(n);
            let k = lap[v].map(|c| c / area[v]);
            sign * dot(k, n) / len
        })
        .collect())
}

pub fn mean_convexity(mesh: &SurfaceMesh) -> Result<MeanConvexityReport, ConvexityError> {
    let h = vertex_mean_curvature(mesh)?;
    let (argmin, min) = h
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    Ok(MeanConvexityReport {
        min,
        argmin_vertex: argmin,
        argmin_point: mesh.vertices[argmin],
        max: h.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: h.iter().sum::<f64>() / h.len() as f64,
        per_vertex: h,
    })
}

/// Sphere of radius `r` from `subdivisions` rounds of 4-to-1 splitting of an
/// icosahedron (10·4^s + 2 vertices).
pub fn icosphere(r: f64, subdivisions: usize) -> SurfaceMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Point3> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let unit = |p: Point3| p.map(|c| c / norm(p));
    v = v.into_iter().map(unit).collect();
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut nf = Vec::with_capacity(4 * f.len());
        let mut m = |a: usize, b: usize, v: &mut Vec<Point3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let p = unit([0, 1, 2].map(|k| 0.5 * (v[a][k] + v[b][k])));
                v.push(p);
                v.len() - 1
            })
        };
        for [a, b, c] in f {
            let (ab, bc, ca) = (m(a, b, &mut v), m(b, c, &mut v), m(c, a, &mut v));
            nf.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = nf;
    }
    SurfaceMesh::new(v.into_iter().map(|p| p.map(|c| c * r)).collect(), f)
}

/// Torus with centre-line radius `big_r` and tube radius `r` on an
/// `nu × nv` parameter grid (u around the axis, v around the tube).
pub fn torus(big_r: f64, r: f64, nu: usize, nv: usize) -> SurfaceMesh {
    use std::f64::consts::TAU;
    let mut verts = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let w = TAU * j as f64 / nv as f64;
            let rho = big_r + r * w.cos();
            verts.push([rho * u.cos(), rho * u.sin(), r * w.sin()]);
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    SurfaceMesh::new(verts, faces)
}

/// Surface of the box `[-a₀, a₀] × [-a₁, a₁] × [-a₂, a₂]` with `n` cells per edge.
pub fn box_mesh(half: Point3, n: usize) -> SurfaceMesh {
    let n = n.max(1);
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    let mut vid = |c: [usize; 3], verts: &mut Vec<Point3>| {
        *index.entry(c).or_insert_with(|| {
            verts.push(std::array::from_fn(|a| half[a] * (2.0 * c[a] as f64 / n as f64 - 1.0)));
            verts.len() - 1
        })
    };
    for axis in 0..3 {
        let (p, q) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n] {
            for s in 0..n {
                for t in 0..n {
                    let corner = |ds: usize, dt: usize| {
                        let mut c = [0; 3];
                        c[axis] = side;
                        c[p] = s + ds;
                        c[q] = t + dt;
                        c
                    };
                    let ids = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)].map(|c| vid(c, &mut verts));
                    // (p, q, axis) is right-handed, so this winding faces +axis
                    if side == n {
                        faces.push([ids[0], ids[1], ids[2]]);
                        faces.push([ids[0], ids[2], ids[3]]);
                    } else {
                        faces.push([ids[0], ids[2], ids[1]]);
                        faces.push([ids[0], ids[3], ids[2]]);
                    }
                }
            }
        }
    }
    SurfaceMesh::new(verts, faces)
}
