//! Planar domains and their conforming triangulations.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::GridError;
use crate::C64;

/// A closed curve in the plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Curve {
    Circle { center: C64, radius: f64 },
    /// Closed polygon, first vertex not repeated.
    Polygon { points: Vec<C64> },
}

impl Curve {
    pub fn circle(center: C64, radius: f64) -> Self {
        Curve::Circle { center, radius }
    }

    pub fn polygon(points: Vec<C64>) -> Self {
        Curve::Polygon { points }
    }

    /// Axis-aligned rectangle `[x0,x1] x [y0,y1]`, counterclockwise.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Curve::Polygon {
            points: vec![
                C64::new(x0, y0),
                C64::new(x1, y0),
                C64::new(x1, y1),
                C64::new(x0, y1),
            ],
        }
    }

    /// Counterclockwise vertex list resolved so that no segment exceeds `max_seg`.
    pub fn resolve(&self, max_seg: f64) -> Vec<C64> {
        match self {
            Curve::Circle { center, radius } => {
                let n = ((2.0 * PI * radius / max_seg).ceil() as usize).max(8);
                (0..n)
                    .map(|k| center + C64::from_polar(*radius, 2.0 * PI * k as f64 / n as f64))
                    .collect()
            }
            Curve::Polygon { points } => {
                let mut pts = points.clone();
                if signed_area(&pts) < 0.0 {
                    pts.reverse();
                }
                let mut out = Vec::new();
                for i in 0..pts.len() {
                    let a = pts[i];
                    let b = pts[(i + 1) % pts.len()];
                    let n = (((b - a).norm() / max_seg).ceil() as usize).max(1);
                    for k in 0..n {
                        out.push(a + (b - a) * (k as f64 / n as f64));
                    }
                }
                out
            }
        }
    }

    /// Corner vertices (circles are sampled at 64 points) in counterclockwise order.
    fn outline(&self) -> Vec<C64> {
        match self {
            Curve::Circle { .. } => self.resolve(self.length() / 64.0),
            Curve::Polygon { points } => {
                let mut pts = points.clone();
                if signed_area(&pts) < 0.0 {
                    pts.reverse();
                }
                pts
            }
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            Curve::Circle { radius, .. } => 2.0 * PI * radius,
            Curve::Polygon { points } => (0..points.len())
                .map(|i| (points[(i + 1) % points.len()] - points[i]).norm())
                .sum(),
        }
    }

    pub fn contains(&self, z: C64) -> bool {
        match self {
            Curve::Circle { center, radius } => (z - center).norm() < *radius,
            Curve::Polygon { points } => point_in_polygon(z, points),
        }
    }

    fn is_convex(&self) -> bool {
        match self {
            Curve::Circle { radius, .. } => *radius > 0.0,
            Curve::Polygon { points } => is_convex_polygon(points),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub outer: Curve,
    /// Convex holes removed from the outer region.
    #[serde(default)]
    pub holes: Vec<Curve>,
    /// Closed curves inside the domain that the mesh must resolve with edges.
    #[serde(default)]
    pub curves: Vec<Curve>,
    /// Target maximum edge length.
    pub h: f64,
}

impl DomainSpec {
    pub fn disc(radius: f64, h: f64) -> Self {
        Self {
            outer: Curve::circle(C64::new(0.0, 0.0), radius),
            holes: Vec::new(),
            curves: Vec::new(),
            h,
        }
    }

    pub fn annulus(inner: f64, outer: f64, h: f64) -> Self {
        Self {
            outer: Curve::circle(C64::new(0.0, 0.0), outer),
            holes: vec![Curve::circle(C64::new(0.0, 0.0), inner)],
            curves: Vec::new(),
            h,
        }
    }

    pub fn with_holes(mut self, holes: Vec<Curve>) -> Self {
        self.holes = holes;
        self
    }

    pub fn with_curves(mut self, curves: Vec<Curve>) -> Self {
        self.curves = curves;
        self
    }
}

/// Which part of the domain a mesh vertex lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexMarker {
    Interior,
    /// Boundary component: 0 is the outer boundary, `k >= 1` is hole `k - 1`.
    Boundary(usize),
    /// Vertex on interior constraint curve `k`.
    Curve(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<C64>,
    /// Counterclockwise triangles.
    pub triangles: Vec<[usize; 3]>,
    pub markers: Vec<VertexMarker>,
    /// Closed vertex loops per boundary component, counterclockwise for the
    /// outer boundary and clockwise (domain on the left) for holes.
    pub boundary_loops: Vec<Vec<usize>>,
    /// Closed vertex loops per interior curve, counterclockwise.
    pub curve_loops: Vec<Vec<usize>>,
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Unique undirected edges `[a, b]` with `a < b`, in a deterministic order.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = self
            .triangles
            .iter()
            .flat_map(|t| {
                [[t[0], t[1]], [t[1], t[2]], [t[2], t[0]]].map(|[a, b]| [a.min(b), a.max(b)])
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * cross(b - a, c - a)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges()
            .iter()
            .map(|&[a, b]| (self.vertices[a] - self.vertices[b]).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        matches!(self.markers[v], VertexMarker::Boundary(_))
    }

    /// Vertices of boundary component `k`.
    pub fn boundary_vertices(&self, k: usize) -> &[usize] {
        &self.boundary_loops[k]
    }

    /// Vertex adjacency lists, sorted.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for [a, b] in self.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn nearest_vertex(&self, z: C64) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, v) in self.vertices.iter().enumerate() {
            let d = (v - z).norm_sqr();
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }
}

/// A meshed planar domain.
#[derive(Debug, Serialize, Deserialize)]
pub struct PlanarDomain {
    pub spec: DomainSpec,
    pub mesh: Mesh,
    #[serde(skip)]
    locator: OnceLock<Locator>,
}

impl Clone for PlanarDomain {
    fn clone(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            mesh: self.mesh.clone(),
            locator: OnceLock::new(),
        }
    }
}

impl PartialEq for PlanarDomain {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.mesh == other.mesh
    }
}

impl PlanarDomain {
    pub fn from_parts(spec: DomainSpec, mesh: Mesh) -> Self {
        Self {
            spec,
            mesh,
            locator: OnceLock::new(),
        }
    }

    pub fn num_boundary_components(&self) -> usize {
        self.mesh.boundary_loops.len()
    }

    /// Triangle containing `z` together with its barycentric coordinates.
    pub fn locate(&self, z: C64) -> Option<(usize, [f64; 3])> {
        self.locator
            .get_or_init(|| Locator::new(&self.mesh))
            .locate(&self.mesh, z)
    }

    /// Inside the discretized domain (point location succeeds).
    pub fn contains(&self, z: C64) -> bool {
        self.locate(z).is_some()
    }
}

/// Share of `h` used for boundary and lattice spacing.
const SPACING: f64 = 0.8;

/// Build a conforming triangulation of the domain described by `spec`.
pub fn build_domain(spec: &DomainSpec) -> Result<PlanarDomain, GridError> {
    if !(spec.h > 0.0) || !spec.h.is_finite() {
        return Err(GridError::InvalidResolution(spec.h));
    }
    validate(spec)?;
    let s = SPACING * spec.h;

    // Constraint loops: outer, holes, interior curves.
    let mut loops: Vec<Vec<C64>> = Vec::new();
    loops.push(spec.outer.resolve(s));
    for hole in &spec.holes {
        let mut l = hole.resolve(s);
        l.reverse();
        loops.push(l);
    }
    for c in &spec.curves {
        loops.push(c.resolve(s));
    }
    let n_boundary_loops = 1 + spec.holes.len();
    let outer_poly = loops[0].clone();
    let hole_polys: Vec<Vec<C64>> = loops[1..n_boundary_loops].to_vec();

    let mut points: Vec<C64> = Vec::new();
    let mut markers = Vec::new();
    let mut constraint_edges: Vec<[usize; 2]> = Vec::new();
    let mut loop_ids: Vec<Vec<usize>> = Vec::new();
    for (k, l) in loops.iter().enumerate() {
        let start = points.len();
        let marker = if k < n_boundary_loops {
            VertexMarker::Boundary(k)
        } else {
            VertexMarker::Curve(k - n_boundary_loops)
        };
        points.extend(l.iter().copied());
        markers.extend(std::iter::repeat(marker).take(l.len()));
        let ids: Vec<usize> = (start..points.len()).collect();
        for i in 0..ids.len() {
            constraint_edges.push([ids[i], ids[(i + 1) % ids.len()]]);
        }
        loop_ids.push(ids);
    }
    let n_constrained = points.len();
    let segments: Vec<(C64, C64)> = constraint_edges
        .iter()
        .map(|&[a, b]| (points[a], points[b]))
        .collect();
    let seg_index = SegmentIndex::new(&segments, s);

    let inside = |z: C64| -> bool {
        point_in_polygon(z, &outer_poly) && !hole_polys.iter().any(|h| point_in_polygon(z, h))
    };

    // Triangular lattice seeds.
    let (lo, hi) = bbox(&outer_poly);
    let dy = s * (3f64).sqrt() / 2.0;
    let mut row = 0usize;
    let mut y = lo.im + 0.5 * dy;
    while y < hi.im {
        let offset = if row % 2 == 0 { 0.0 } else { 0.5 * s };
        let mut x = lo.re + offset + 0.25 * s;
        while x < hi.re {
            let z = C64::new(x, y);
            if inside(z) && seg_index.min_distance(z, 0.5 * s) >= 0.5 * s {
                points.push(z);
                markers.push(VertexMarker::Interior);
            }
            x += s;
        }
        y += dy;
        row += 1;
    }

    // Triangulate, then insert circumcenters of triangles with an edge longer
    // than h until none remain.
    for _ in 0..64 {
        let (triangles, long) = triangulate(&points, &constraint_edges, &inside, spec.h)?;
        if long.is_empty() {
            let mut mesh = Mesh {
                vertices: points,
                triangles,
                markers,
                boundary_loops: loop_ids[..n_boundary_loops].to_vec(),
                curve_loops: loop_ids[n_boundary_loops..].to_vec(),
            };
            smooth(&mut mesh, spec.h);
            check_mesh(&mesh, n_constrained)?;
            return Ok(PlanarDomain::from_parts(spec.clone(), mesh));
        }
        let mut added: Vec<C64> = Vec::new();
        for t in long {
            let [a, b, c] = t.map(|i| points[i]);
            let cc = circumcenter(a, b, c);
            let p = if inside(cc) && seg_index.min_distance(cc, 0.25 * s) >= 0.25 * s {
                cc
            } else {
                let e = [(a, b), (b, c), (c, a)]
                    .into_iter()
                    .max_by(|x, y| (x.0 - x.1).norm().total_cmp(&(y.0 - y.1).norm()))
                    .unwrap();
                0.5 * (e.0 + e.1)
            };
            if added.iter().all(|q| (q - p).norm() > 0.05 * s) {
                added.push(p);
            }
        }
        for p in added {
            points.push(p);
            markers.push(VertexMarker::Interior);
        }
    }
    Err(GridError::Meshing("edge refinement did not terminate".into()))
}

const SMOOTH_ITERS: usize = 6;

/// Laplacian smoothing of interior vertices; moves that would invert a
/// triangle or stretch an edge past `h` are skipped.
fn smooth(mesh: &mut Mesh, h: f64) {
    let adj = mesh.neighbors();
    let mut tris_of = vec![Vec::new(); mesh.vertices.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &v in tri {
            tris_of[v].push(t);
        }
    }
    for _ in 0..SMOOTH_ITERS {
        for v in 0..mesh.vertices.len() {
            if mesh.markers[v] != VertexMarker::Interior || adj[v].is_empty() {
                continue;
            }
            let old = mesh.vertices[v];
            let avg = adj[v].iter().map(|&w| mesh.vertices[w]).sum::<C64>() / adj[v].len() as f64;
            mesh.vertices[v] = avg;
            let ok = tris_of[v].iter().all(|&t| mesh.triangle_area(t) > 0.0)
                && adj[v].iter().all(|&w| (mesh.vertices[w] - avg).norm() <= h);
            if !ok {
                mesh.vertices[v] = old;
            }
        }
    }
}

fn circumcenter(a: C64, b: C64, c: C64) -> C64 {
    let (b, c) = (b - a, c - a);
    let d = 2.0 * cross(b, c);
    a + C64::new(
        c.im * b.norm_sqr() - b.im * c.norm_sqr(),
        b.re * c.norm_sqr() - c.re * b.norm_sqr(),
    ) / d
}

fn triangulate(
    points: &[C64],
    constraints: &[[usize; 2]],
    inside: &dyn Fn(C64) -> bool,
    h: f64,
) -> Result<(Vec<[usize; 3]>, Vec<[usize; 3]>), GridError> {
    let verts: Vec<Point2<f64>> = points.iter().map(|z| Point2::new(z.re, z.im)).collect();
    let mut conflicts = Vec::new();
    let cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::try_bulk_load_cdt(verts, constraints.to_vec(), |e| {
            conflicts.push(e)
        })
        .map_err(|e| GridError::Meshing(format!("{e:?}")))?;
    if !conflicts.is_empty() {
        return Err(GridError::Meshing(format!(
            "{} crossing boundary segments",
            conflicts.len()
        )));
    }
    if cdt.num_vertices() != points.len() {
        return Err(GridError::Meshing("duplicate mesh vertices".into()));
    }
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        let vs = face.vertices().map(|v| v.fix().index());
        let centroid = (points[vs[0]] + points[vs[1]] + points[vs[2]]) / 3.0;
        if inside(centroid) {
            triangles.push(vs);
        }
    }
    triangles.sort_unstable();
    let constrained: std::collections::HashSet<[usize; 2]> = constraints
        .iter()
        .map(|&[a, b]| [a.min(b), a.max(b)])
        .collect();
    let long: Vec<[usize; 3]> = triangles
        .iter()
        .filter(|t| {
            [[t[0], t[1]], [t[1], t[2]], [t[2], t[0]]].iter().any(|&[a, b]| {
                !constrained.contains(&[a.min(b), a.max(b)]) && (points[a] - points[b]).norm() > h
            })
        })
        .copied()
        .collect();
    Ok((triangles, long))
}

fn check_mesh(mesh: &Mesh, n_constrained: usize) -> Result<(), GridError> {
    if mesh.triangles.is_empty() {
        return Err(GridError::Meshing("empty triangulation".into()));
    }
    for t in 0..mesh.triangles.len() {
        if mesh.triangle_area(t) <= 0.0 {
            return Err(GridError::Meshing(format!("triangle {t} not positively oriented")));
        }
    }
    let mut used = vec![false; mesh.vertices.len()];
    for t in &mesh.triangles {
        for &v in t {
            used[v] = true;
        }
    }
    if let Some(v) = (0..n_constrained).find(|&v| !used[v]) {
        return Err(GridError::Meshing(format!("boundary vertex {v} not in any triangle")));
    }
    Ok(())
}

fn validate(spec: &DomainSpec) -> Result<(), GridError> {
    let outer = spec.outer.outline();
    if outer.len() < 3 || signed_area(&outer).abs() <= 0.0 {
        return Err(GridError::InvalidCurve("outer boundary is degenerate".into()));
    }
    let holes: Vec<Vec<C64>> = spec.holes.iter().map(|h| h.outline()).collect();
    for (i, (hole, curve)) in holes.iter().zip(&spec.holes).enumerate() {
        if !curve.is_convex() {
            return Err(GridError::InvalidCurve(format!("hole {i} is not convex")));
        }
        let inside = hole.iter().all(|&z| point_in_polygon(z, &outer));
        if !inside || polyline_distance(hole, &outer) <= 0.0 {
            return Err(GridError::HoleTouchesBoundary(i));
        }
    }
    for i in 0..holes.len() {
        for j in (i + 1)..holes.len() {
            let overlap = holes[i].iter().any(|&z| point_in_polygon(z, &holes[j]))
                || holes[j].iter().any(|&z| point_in_polygon(z, &holes[i]))
                || polyline_distance(&holes[i], &holes[j]) <= 0.0;
            if overlap {
                return Err(GridError::OverlappingHoles(i, j));
            }
        }
    }
    for (i, c) in spec.curves.iter().enumerate() {
        let pts = c.outline();
        let ok = pts.iter().all(|&z| point_in_polygon(z, &outer))
            && polyline_distance(&pts, &outer) > 0.0
            && holes.iter().all(|h| {
                polyline_distance(&pts, h) > 0.0 && !pts.iter().any(|&z| point_in_polygon(z, h))
            });
        if !ok {
            return Err(GridError::InvalidCurve(format!(
                "interior curve {i} leaves the domain or touches a boundary"
            )));
        }
    }
    Ok(())
}

pub(crate) fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

pub(crate) fn signed_area(poly: &[C64]) -> f64 {
    0.5 * (0..poly.len())
        .map(|i| cross(poly[i], poly[(i + 1) % poly.len()]))
        .sum::<f64>()
}

pub(crate) fn point_in_polygon(z: C64, poly: &[C64]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if z.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub(crate) fn is_convex_polygon(points: &[C64]) -> bool {
    let n = points.len();
    if n < 3 {
        return false;
    }
    let sign = signed_area(points).signum();
    (0..n).all(|i| {
        let a = points[i];
        let b = points[(i + 1) % n];
        let c = points[(i + 2) % n];
        cross(b - a, c - b) * sign >= 0.0
    })
}

pub(crate) fn segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    let t = if len2 > 0.0 {
        ((z - a).re * ab.re + (z - a).im * ab.im) / len2
    } else {
        0.0
    };
    (z - (a + ab * t.clamp(0.0, 1.0))).norm()
}

fn segments_intersect(a: C64, b: C64, c: C64, d: C64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    if d1 == 0.0 && d2 == 0.0 {
        let (lo1, hi1) = bbox(&[a, b]);
        let (lo2, hi2) = bbox(&[c, d]);
        return lo1.re <= hi2.re && lo2.re <= hi1.re && lo1.im <= hi2.im && lo2.im <= hi1.im;
    }
    d1 * d2 <= 0.0 && d3 * d4 <= 0.0
}

/// Distance between two closed polylines (0 when they cross).
pub(crate) fn polyline_distance(p: &[C64], q: &[C64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..p.len() {
        let (a, b) = (p[i], p[(i + 1) % p.len()]);
        for j in 0..q.len() {
            let (c, d) = (q[j], q[(j + 1) % q.len()]);
            if segments_intersect(a, b, c, d) {
                return 0.0;
            }
            best = best
                .min(segment_distance(a, c, d))
                .min(segment_distance(b, c, d))
                .min(segment_distance(c, a, b))
                .min(segment_distance(d, a, b));
        }
    }
    best
}

fn bbox(points: &[C64]) -> (C64, C64) {
    let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for z in points {
        lo.re = lo.re.min(z.re);
        lo.im = lo.im.min(z.im);
        hi.re = hi.re.max(z.re);
        hi.im = hi.im.max(z.im);
    }
    (lo, hi)
}

/// Uniform bucket grid over constraint segments for near-distance queries.
struct SegmentIndex<'a> {
    segments: &'a [(C64, C64)],
    origin: C64,
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> SegmentIndex<'a> {
    fn new(segments: &'a [(C64, C64)], cell: f64) -> Self {
        let origin = C64::new(0.0, 0.0);
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (k, (a, b)) in segments.iter().enumerate() {
            let (lo, hi) = bbox(&[*a, *b]);
            let (i0, j0) = cell_of(lo, origin, cell);
            let (i1, j1) = cell_of(hi, origin, cell);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    buckets.entry((i, j)).or_default().push(k);
                }
            }
        }
        Self {
            segments,
            origin,
            cell,
            buckets,
        }
    }

    /// Distance to the nearest segment, exact when it is below `radius`.
    fn min_distance(&self, z: C64, radius: f64) -> f64 {
        let r = (radius / self.cell).ceil() as i64;
        let (ci, cj) = cell_of(z, self.origin, self.cell);
        let mut best = f64::INFINITY;
        for i in (ci - r)..=(ci + r) {
            for j in (cj - r)..=(cj + r) {
                if let Some(list) = self.buckets.get(&(i, j)) {
                    for &k in list {
                        let (a, b) = self.segments[k];
                        best = best.min(segment_distance(z, a, b));
                    }
                }
            }
        }
        best
    }
}

fn cell_of(z: C64, origin: C64, cell: f64) -> (i64, i64) {
    (
        ((z.re - origin.re) / cell).floor() as i64,
        ((z.im - origin.im) / cell).floor() as i64,
    )
}

/// Bucket grid over triangles for point location.
#[derive(Debug)]
struct Locator {
    lo: C64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    fn new(mesh: &Mesh) -> Self {
        let (lo, hi) = bbox(&mesh.vertices);
        let n = mesh.triangles.len().max(1) as f64;
        let area = ((hi.re - lo.re) * (hi.im - lo.im)).max(1e-300);
        let cell = (area / n).sqrt().max(1e-12) * 2.0;
        let nx = (((hi.re - lo.re) / cell).ceil() as usize).max(1);
        let ny = (((hi.im - lo.im) / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let (tlo, thi) = bbox(&tri.map(|i| mesh.vertices[i]));
            let i0 = (((tlo.re - lo.re) / cell).floor() as usize).min(nx - 1);
            let i1 = (((thi.re - lo.re) / cell).floor() as usize).min(nx - 1);
            let j0 = (((tlo.im - lo.im) / cell).floor() as usize).min(ny - 1);
            let j1 = (((thi.im - lo.im) / cell).floor() as usize).min(ny - 1);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Self {
            lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn locate(&self, mesh: &Mesh, z: C64) -> Option<(usize, [f64; 3])> {
        let fx = (z.re - self.lo.re) / self.cell;
        let fy = (z.im - self.lo.im) / self.cell;
        if !(fx >= -1e-9 && fy >= -1e-9) {
            return None;
        }
        let i = (fx.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (fy.floor().max(0.0) as usize).min(self.ny - 1);
        if fx > self.nx as f64 + 1e-9 || fy > self.ny as f64 + 1e-9 {
            return None;
        }
        const EPS: f64 = 1e-12;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.nx + i] {
            let [a, b, c] = mesh.triangles[t].map(|v| mesh.vertices[v]);
            let area = cross(b - a, c - a);
            let l0 = cross(b - z, c - z) / area;
            let l1 = cross(c - z, a - z) / area;
            let l2 = 1.0 - l0 - l1;
            let worst = l0.min(l1).min(l2);
            if worst >= -EPS && best.map_or(true, |(_, _, w)| worst > w) {
                best = Some((t, [l0, l1, l2], worst));
            }
        }
        best.map(|(t, l, _)| (t, l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_disc_mesh() {
        let d = build_domain(&DomainSpec::disc(1.0, 0.1)).unwrap();
        let m = &d.mesh;
        assert!(m.vertices.iter().all(|z| z.norm() <= 1.0 + 1e-12));
        assert_eq!(m.boundary_loops.len(), 1);
        assert!(m.max_edge_length() <= 0.1 + 1e-12);
        assert!(m.boundary_vertices(0).iter().all(|&v| (m.vertices[v].norm() - 1.0).abs() < 1e-12));
        for t in 0..m.triangles.len() {
            assert!(m.triangle_area(t) > 0.0);
        }
        // area of the inscribed polygon
        let area: f64 = (0..m.triangles.len()).map(|t| m.triangle_area(t)).sum();
        assert!((area - PI).abs() < 0.01);
    }

    #[test]
    fn annulus_has_two_boundary_components() {
        let d = build_domain(&DomainSpec::annulus(0.5, 1.0, 0.05)).unwrap();
        assert_eq!(d.num_boundary_components(), 2);
        let m = &d.mesh;
        for &v in m.boundary_vertices(1) {
            assert!((m.vertices[v].norm() - 0.5).abs() < 1e-12);
            assert_eq!(m.markers[v], VertexMarker::Boundary(1));
        }
        assert!(m.vertices.iter().all(|z| z.norm() >= 0.5 - 1e-12));
        assert!(m.max_edge_length() <= 0.05 + 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            build_domain(&DomainSpec::disc(1.0, 0.0)),
            Err(GridError::InvalidResolution(_))
        ));
        let overlapping = DomainSpec::disc(1.0, 0.1).with_holes(vec![
            Curve::circle(C64::new(0.0, 0.0), 0.3),
            Curve::circle(C64::new(0.2, 0.0), 0.3),
        ]);
        assert!(matches!(
            build_domain(&overlapping),
            Err(GridError::OverlappingHoles(0, 1))
        ));
        let touching = DomainSpec::disc(1.0, 0.1)
            .with_holes(vec![Curve::circle(C64::new(0.8, 0.0), 0.3)]);
        assert!(matches!(
            build_domain(&touching),
            Err(GridError::HoleTouchesBoundary(0))
        ));
        let nonconvex = DomainSpec::disc(1.0, 0.1).with_holes(vec![Curve::polygon(vec![
            C64::new(-0.3, -0.3),
            C64::new(0.3, -0.3),
            C64::new(0.0, 0.0),
            C64::new(0.3, 0.3),
            C64::new(-0.3, 0.3),
        ])]);
        assert!(matches!(build_domain(&nonconvex), Err(GridError::InvalidCurve(_))));
    }

    #[test]
    fn interior_curves_are_resolved() {
        let spec = DomainSpec::disc(1.0, 0.05)
            .with_curves(vec![Curve::circle(C64::new(0.0, 0.0), 0.75)]);
        let d = build_domain(&spec).unwrap();
        assert_eq!(d.mesh.curve_loops.len(), 1);
        let edges: std::collections::HashSet<_> = d.mesh.edges().into_iter().collect();
        let l = &d.mesh.curve_loops[0];
        for i in 0..l.len() {
            let (a, b) = (l[i], l[(i + 1) % l.len()]);
            assert!(edges.contains(&[a.min(b), a.max(b)]));
        }
    }

    #[test]
    fn locate_gives_barycentric_weights() {
        let d = build_domain(&DomainSpec::disc(1.0, 0.1)).unwrap();
        let z = C64::new(0.31, -0.27);
        let (t, l) = d.locate(z).unwrap();
        let p: C64 = (0..3).map(|k| d.mesh.vertices[d.mesh.triangles[t][k]] * l[k]).sum();
        assert!((p - z).norm() < 1e-12);
        assert!(d.locate(C64::new(1.2, 0.0)).is_none());
    }
}
