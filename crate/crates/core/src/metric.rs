//! Intrinsic geometry of sampled immersions: metric graphs, Dijkstra
//! distances and divergent-path diagnostics.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::weierstrass::{norm3, sub3, ImmersionField};
use crate::C64;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("immersed edge ({0}, {1}) has zero length")]
    ZeroLengthEdge(usize, usize),
    #[error("metric graph is disconnected")]
    Disconnected,
    #[error("target set is empty or unreachable")]
    UnreachableTarget,
    #[error("vertex {0} out of range")]
    BadVertex(usize),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for MetricError {
    fn from(e: std::io::Error) -> Self {
        MetricError::Io(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricMode {
    /// `|u(a) − u(b)|` along the immersed segment.
    EmbeddedEdges,
    /// `|a − b|·sqrt(λ)` integrated along the planar segment.
    ConformalFactor,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphOptions {
    pub mode: MetricMode,
    /// Extra shortcut edges to every vertex within this many mesh hops, kept
    /// only when the straight planar segment stays inside the mesh. 1 gives
    /// the plain edge graph.
    pub ring: usize,
}

impl GraphOptions {
    pub fn new(mode: MetricMode) -> Self {
        Self { mode, ring: 3 }
    }

    pub fn edges_only(mode: MetricMode) -> Self {
        Self { mode, ring: 1 }
    }
}

/// Weighted vertex graph of a sampled immersion.
#[derive(Clone, Debug)]
pub struct MetricGraph {
    pub options: GraphOptions,
    /// Sorted adjacency with lengths.
    pub adjacency: Vec<Vec<(usize, f64)>>,
    /// Boundary vertex sets per boundary component.
    pub boundary: Vec<Vec<usize>>,
}

/// Sub-segment count used to measure shortcut edges.
const SEGMENT_SAMPLES: usize = 4;

pub fn build_metric_graph(u: &ImmersionField, options: GraphOptions) -> Result<MetricGraph, MetricError> {
    let domain = &u.domain;
    let mesh = &domain.mesh;
    let n = mesh.num_vertices();
    let neighbors = mesh.neighbors();
    let direct_len = |a: usize, b: usize| -> f64 {
        match options.mode {
            MetricMode::EmbeddedEdges => norm3(sub3(u.position(a), u.position(b))),
            MetricMode::ConformalFactor => {
                (mesh.vertices[a] - mesh.vertices[b]).norm()
                    * (0.5 * (u.metric_density[a] + u.metric_density[b])).sqrt()
            }
        }
    };
    let sample = |z: C64| -> Option<([f64; 3], f64)> {
        let (t, l) = domain.locate(z)?;
        let tri = mesh.triangles[t];
        let p = std::array::from_fn(|k| (0..3).map(|i| l[i] * u.u[k][tri[i]]).sum());
        let lam: f64 = (0..3).map(|i| l[i] * u.metric_density[tri[i]]).sum();
        Some((p, lam))
    };
    let shortcut_len = |a: usize, b: usize| -> Option<f64> {
        let (za, zb) = (mesh.vertices[a], mesh.vertices[b]);
        let mut pts = Vec::with_capacity(SEGMENT_SAMPLES + 1);
        pts.push((u.position(a), u.metric_density[a]));
        for i in 1..SEGMENT_SAMPLES {
            pts.push(sample(za + (zb - za) * (i as f64 / SEGMENT_SAMPLES as f64))?);
        }
        pts.push((u.position(b), u.metric_density[b]));
        Some(match options.mode {
            MetricMode::EmbeddedEdges => pts.windows(2).map(|w| norm3(sub3(w[1].0, w[0].0))).sum(),
            MetricMode::ConformalFactor => {
                let seg = (zb - za).norm() / SEGMENT_SAMPLES as f64;
                pts.windows(2)
                    .map(|w| 0.5 * seg * (w[0].1.max(0.0).sqrt() + w[1].1.max(0.0).sqrt()))
                    .sum()
            }
        })
    };

    let adjacency: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut out: Vec<(usize, f64)> = neighbors[a].iter().map(|&b| (b, direct_len(a, b))).collect();
            if options.ring > 1 {
                // breadth-first rings around a
                let mut ring_of: Vec<usize> = neighbors[a].clone();
                let mut seen: Vec<usize> = neighbors[a].clone();
                seen.push(a);
                for _ in 1..options.ring {
                    let mut next = Vec::new();
                    for &v in &ring_of {
                        for &w in &neighbors[v] {
                            if !seen.contains(&w) {
                                seen.push(w);
                                next.push(w);
                            }
                        }
                    }
                    for &b in &next {
                        if let Some(l) = shortcut_len(a, b) {
                            out.push((b, l));
                        }
                    }
                    ring_of = next;
                }
            }
            out.sort_by(|x, y| x.0.cmp(&y.0));
            out
        })
        .collect();
    for (a, adj) in adjacency.iter().enumerate() {
        if let Some(&(b, _)) = adj.iter().find(|(_, l)| !(*l > 0.0)) {
            return Err(MetricError::ZeroLengthEdge(a.min(b), a.max(b)));
        }
    }
    let g = MetricGraph {
        options,
        adjacency,
        boundary: mesh.boundary_loops.clone(),
    };
    if g.distances_from(0).iter().any(|d| d.is_infinite()) {
        return Err(MetricError::Disconnected);
    }
    Ok(g)
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MetricGraph {
    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    /// All boundary vertices.
    pub fn boundary_all(&self) -> Vec<usize> {
        self.boundary.iter().flatten().copied().collect()
    }

    /// Edge length between adjacent vertices.
    pub fn edge_length(&self, a: usize, b: usize) -> Option<f64> {
        self.adjacency[a]
            .binary_search_by(|(v, _)| v.cmp(&b))
            .ok()
            .map(|i| self.adjacency[a][i].1)
    }

    /// Single-source shortest path lengths.
    pub fn distances_from(&self, source: usize) -> Vec<f64> {
        self.dijkstra(source, None, |_, _, l| l).0
    }

    fn dijkstra(
        &self,
        source: usize,
        targets: Option<&[bool]>,
        weight: impl Fn(usize, usize, f64) -> f64,
    ) -> (Vec<f64>, Vec<usize>, Option<usize>) {
        let n = self.num_vertices();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Item(0.0, source));
        while let Some(Item(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            if targets.is_some_and(|t| t[v]) {
                return (dist, prev, Some(v));
            }
            for &(w, l) in &self.adjacency[v] {
                let nd = d + weight(v, w, l);
                if nd < dist[w] {
                    dist[w] = nd;
                    prev[w] = v;
                    heap.push(Item(nd, w));
                }
            }
        }
        (dist, prev, None)
    }
}

/// Shortest-path distance from `p0` to the nearest vertex of `targets`.
pub fn intrinsic_distance(graph: &MetricGraph, p0: usize, targets: &[usize]) -> Result<f64, MetricError> {
    let n = graph.num_vertices();
    if p0 >= n {
        return Err(MetricError::BadVertex(p0));
    }
    let mut mask = vec![false; n];
    for &t in targets {
        *mask.get_mut(t).ok_or(MetricError::BadVertex(t))? = true;
    }
    let (dist, _, hit) = graph.dijkstra(p0, Some(&mask), |_, _, l| l);
    hit.map(|v| dist[v]).ok_or(MetricError::UnreachableTarget)
}

/// Intrinsic distance from the immersion's base point to the whole boundary.
pub fn intrinsic_radius(u: &ImmersionField, options: GraphOptions) -> Result<f64, MetricError> {
    let g = build_metric_graph(u, options)?;
    intrinsic_distance(&g, u.base_point, &g.boundary_all())
}

/// A vertex path with its length in the graph metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergentPath {
    pub length: f64,
    pub vertices: Vec<usize>,
}

/// Multiplier applied to edges touching an already used path.
pub const PATH_PENALTY: f64 = 4.0;

/// `k` shortest paths from `p0` to boundary component `component`; after each
/// path the edges at its vertices are penalized so later paths spread out.
/// Lengths are reported in the unpenalized metric, so the first (minimum) one
/// is the intrinsic distance.
pub fn divergent_paths(
    graph: &MetricGraph,
    p0: usize,
    component: usize,
    k: usize,
) -> Result<Vec<DivergentPath>, MetricError> {
    let n = graph.num_vertices();
    if p0 >= n {
        return Err(MetricError::BadVertex(p0));
    }
    let mut mask = vec![false; n];
    for &t in graph.boundary.get(component).ok_or(MetricError::UnreachableTarget)? {
        mask[t] = true;
    }
    let mut used = vec![false; n];
    let mut out = Vec::new();
    for _ in 0..k {
        let (_, prev, hit) = graph.dijkstra(p0, Some(&mask), |a, b, l| {
            if (used[a] && a != p0) || used[b] {
                l * PATH_PENALTY
            } else {
                l
            }
        });
        let end = hit.ok_or(MetricError::UnreachableTarget)?;
        let mut vertices = vec![end];
        while *vertices.last().unwrap() != p0 {
            vertices.push(prev[*vertices.last().unwrap()]);
        }
        vertices.reverse();
        let length = vertices
            .windows(2)
            .map(|w| graph.edge_length(w[0], w[1]).unwrap())
            .sum();
        for &v in &vertices {
            used[v] = true;
        }
        out.push(DivergentPath { length, vertices });
    }
    Ok(out)
}

/// Lengths of [`divergent_paths`].
pub fn divergent_path_lengths(
    graph: &MetricGraph,
    p0: usize,
    component: usize,
    k: usize,
) -> Result<Vec<f64>, MetricError> {
    Ok(divergent_paths(graph, p0, component, k)?
        .into_iter()
        .map(|p| p.length)
        .collect())
}

/// Distance field as CSV `vertex,dist`.
pub fn write_distance_csv<W: Write>(dist: &[f64], mut w: W) -> Result<(), MetricError> {
    writeln!(w, "vertex,dist")?;
    for (v, d) in dist.iter().enumerate() {
        writeln!(w, "{v},{d}")?;
    }
    Ok(())
}

/// Polyline JSON for a path: planar points and immersed points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPolyline {
    pub length: f64,
    pub vertices: Vec<usize>,
    pub planar: Vec<[f64; 2]>,
    pub immersed: Vec<[f64; 3]>,
}

pub fn path_polyline(u: &ImmersionField, path: &DivergentPath) -> PathPolyline {
    PathPolyline {
        length: path.length,
        vertices: path.vertices.clone(),
        planar: path
            .vertices
            .iter()
            .map(|&v| {
                let z = u.domain.mesh.vertices[v];
                [z.re, z.im]
            })
            .collect(),
        immersed: path.vertices.iter().map(|&v| u.position(v)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexgrid::{build_domain, DomainSpec, PlanarDomain};
    use crate::weierstrass::{integrate_triple, triple_from_fg, Holo};
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    fn flat(radius: f64, h: f64) -> ImmersionField {
        let d = Arc::new(build_domain(&DomainSpec::disc(radius, h)).unwrap());
        let pos: Vec<[f64; 3]> = d.mesh.vertices.iter().map(|z| [z.re, z.im, 0.0]).collect();
        let base = d.mesh.nearest_vertex(C64::new(0.0, 0.0));
        ImmersionField::from_positions(d, &pos, base)
    }

    fn center_dist(u: &ImmersionField, opts: GraphOptions) -> f64 {
        let g = build_metric_graph(u, opts).unwrap();
        intrinsic_distance(&g, u.base_point, &g.boundary_all()).unwrap()
    }

    #[test]
    fn flat_modes_match_planar_lengths() {
        let u = flat(1.0, 0.1);
        for mode in [MetricMode::EmbeddedEdges, MetricMode::ConformalFactor] {
            let g = build_metric_graph(&u, GraphOptions::edges_only(mode)).unwrap();
            for [a, b] in u.domain.mesh.edges() {
                let l = (u.domain.mesh.vertices[a] - u.domain.mesh.vertices[b]).norm();
                assert!((g.edge_length(a, b).unwrap() - l).abs() < 1e-12 * l.max(1.0));
            }
        }
    }

    #[test]
    fn flat_radius() {
        for (r, h) in [(1.0, 0.05), (2.0, 0.1)] {
            let u = flat(r, h);
            let base = u.domain.mesh.vertices[u.base_point].norm();
            for mode in [MetricMode::EmbeddedEdges, MetricMode::ConformalFactor] {
                let d = center_dist(&u, GraphOptions::new(mode));
                assert!(((d + base) / r - 1.0).abs() < 0.02, "{mode:?} r={r}: {d}");
            }
        }
    }

    #[test]
    fn scaling_is_exact() {
        let u = flat(1.0, 0.1);
        let opts = GraphOptions::new(MetricMode::EmbeddedEdges);
        let g1 = build_metric_graph(&u, opts).unwrap();
        let g2 = build_metric_graph(&u.scaled(2.0), opts).unwrap();
        let (d1, d2) = (g1.distances_from(5), g2.distances_from(5));
        for (a, b) in d1.iter().zip(&d2) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn graph_distance_is_a_metric() {
        let u = flat(1.0, 0.1);
        let g = build_metric_graph(&u, GraphOptions::new(MetricMode::ConformalFactor)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = g.num_vertices();
        for _ in 0..20 {
            let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            let (da, db) = (g.distances_from(a), g.distances_from(b));
            assert!((da[b] - db[a]).abs() < 1e-12);
            assert!(da[c] <= da[b] + db[c] + 1e-12);
        }
    }

    #[test]
    fn enneper_modes_agree_per_edge() {
        let d: Arc<PlanarDomain> = Arc::new(build_domain(&DomainSpec::disc(1.0, 0.02)).unwrap());
        let t = triple_from_fg(&Holo::real(1.0), &Holo::z(), d.clone()).unwrap();
        let u = integrate_triple(&t, 0, [0.0; 3]).unwrap();
        let ge = build_metric_graph(&u, GraphOptions::edges_only(MetricMode::EmbeddedEdges)).unwrap();
        let gc = build_metric_graph(&u, GraphOptions::edges_only(MetricMode::ConformalFactor)).unwrap();
        let worst = d
            .mesh
            .edges()
            .iter()
            .map(|&[a, b]| {
                let (x, y) = (ge.edge_length(a, b).unwrap(), gc.edge_length(a, b).unwrap());
                (x / y - 1.0).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 0.02, "{worst}");
    }

    #[test]
    fn divergent_paths_min_is_distance() {
        let u = flat(1.0, 0.1);
        let g = build_metric_graph(&u, GraphOptions::new(MetricMode::EmbeddedEdges)).unwrap();
        let lens = divergent_path_lengths(&g, u.base_point, 0, 5).unwrap();
        let d = intrinsic_distance(&g, u.base_point, &g.boundary[0]).unwrap();
        let base = u.domain.mesh.vertices[u.base_point].norm();
        assert_eq!(lens[0], d);
        assert!(lens.iter().all(|&l| l >= d && l + base >= 1.0 - 1e-9));
    }

    #[test]
    fn refinement_is_cauchy() {
        let opts = GraphOptions::new(MetricMode::EmbeddedEdges);
        let d: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| {
                let u = flat(1.0, h);
                center_dist(&u, opts) + u.domain.mesh.vertices[u.base_point].norm()
            })
            .collect();
        assert!((d[2] - d[1]).abs() <= 2.0 * (d[1] - d[0]).abs() + 1e-3, "{d:?}");
        assert!(d[2] <= d[1] + 0.01, "{d:?}");
    }
}
