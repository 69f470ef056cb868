//! Stage geometry and the deformation engine.
//!
//! Every stage places poles only at fixed Cantor points ("sources"), four
//! per piece, reached by zigzag descents to the deepest tree level. The
//! sources of a piece are sources of its children, so `u_{j−1}` extends to
//! `K_j` without change and the engine only has to add a push.

use std::collections::HashMap;
use std::sync::Arc;

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{storage::Owned, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{unit_columns, PoleTerm, RationalData};
use super::PipelineError;
use crate::cantor::{complement_domain, CantorTree, ConvexPiece};
use crate::complexgrid::{Curve, PlanarDomain, VertexMarker};
use crate::C64;

/// Child index pairs of the zigzag descents (0 bottom-left, 1 top-left,
/// 2 bottom-right, 3 top-right).
const ZIGZAG: [[usize; 2]; 4] = [[0, 3], [3, 0], [1, 2], [2, 1]];

/// The four source points of `tree.level(level)[k]`.
pub fn piece_sources(tree: &CantorTree, level: usize, k: usize) -> Vec<C64> {
    ZIGZAG
        .iter()
        .map(|pair| {
            let mut idx = k;
            for step in 0..tree.depth - level {
                idx = 4 * idx + pair[step % 2];
            }
            tree.levels[tree.depth - 1][idx].centroid()
        })
        .collect()
}

/// Points of the gap strips of a piece: its centroid and the midpoints of
/// adjacent children, skipping any that land inside a child.
pub fn gap_points(tree: &CantorTree, level: usize, k: usize) -> Vec<C64> {
    let piece = &tree.level(level).expect("level in range")[k];
    let kids = &tree.levels[level][4 * k..4 * k + 4];
    let c: Vec<C64> = kids.iter().map(|p| p.centroid()).collect();
    [piece.centroid(), 0.5 * (c[0] + c[2]), 0.5 * (c[1] + c[3]), 0.5 * (c[0] + c[1]), 0.5 * (c[2] + c[3])]
        .into_iter()
        .filter(|&z| piece.contains_strictly(z, 0.0) && kids.iter().all(|p| !p.contains(z)))
        .collect()
}

/// Equispaced samples along a piece boundary.
pub fn boundary_samples(piece: &ConvexPiece, n: usize) -> Vec<C64> {
    let curve = Curve::polygon(piece.polygon.clone());
    let pts = curve.resolve(curve.length() / n as f64);
    pts.into_iter().take(n.max(3)).collect()
}

/// Mesh of `K_j` with the depth of each vertex in the tree.
#[derive(Clone, Debug)]
pub struct StageGeometry {
    pub j: usize,
    pub domain: Arc<PlanarDomain>,
    /// Deepest level whose closed pieces contain the vertex (−1 outside the root).
    pub closed: Vec<i32>,
    /// Deepest level whose open pieces contain the vertex.
    pub open: Vec<i32>,
}

impl StageGeometry {
    pub fn build(tree: &CantorTree, j: usize, chart_radius: f64, h: f64) -> Result<Self, PipelineError> {
        let outer = Curve::circle(C64::new(0.0, 0.0), chart_radius);
        let curve_levels: Vec<usize> = (0..j).collect();
        let domain = complement_domain(tree, j, &outer, h, &curve_levels)?;
        let offsets: Vec<usize> = (0..=j).scan(0usize, |acc, l| {
            let o = *acc;
            *acc += 1usize << (2 * l);
            Some(o)
        })
        .collect();
        let curve_level = |k: usize| offsets.iter().rposition(|&o| o <= k).unwrap_or(0) as i32;
        let (closed, open): (Vec<i32>, Vec<i32>) = domain
            .mesh
            .vertices
            .par_iter()
            .zip(domain.mesh.markers.par_iter())
            .map(|(&z, m)| match *m {
                VertexMarker::Boundary(0) => (-1, -1),
                VertexMarker::Boundary(_) => (j as i32, j as i32 - 1),
                VertexMarker::Curve(k) => {
                    let l = curve_level(k);
                    (l, l - 1)
                }
                VertexMarker::Interior => {
                    let d = closed_depth(tree, z, j);
                    (d, d)
                }
            })
            .unzip();
        Ok(Self {
            j,
            domain: Arc::new(domain),
            closed,
            open,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.closed.len()
    }

    pub fn vertices(&self) -> &[C64] {
        &self.domain.mesh.vertices
    }

    /// Vertices of `K_i`.
    pub fn in_k(&self, i: usize) -> Vec<usize> {
        self.select(|_, o| o < i as i32)
    }

    /// Vertices of `bK_i`.
    pub fn boundary_k(&self, i: usize) -> Vec<usize> {
        self.select(|c, o| c == i as i32 && o == i as i32 - 1)
    }

    /// Vertices of `K_i ∖ K̊_{i−1}`.
    pub fn collar(&self, i: usize) -> Vec<usize> {
        self.select(|c, o| o < i as i32 && c >= i as i32 - 1)
    }

    /// Vertices of `K̊_i ∖ K_{i−1}`.
    pub fn open_collar(&self, i: usize) -> Vec<usize> {
        self.select(|c, o| c < i as i32 && o >= i as i32 - 1)
    }

    fn select(&self, keep: impl Fn(i32, i32) -> bool) -> Vec<usize> {
        (0..self.num_vertices())
            .filter(|&v| keep(self.closed[v], self.open[v]))
            .collect()
    }
}

fn closed_depth(tree: &CantorTree, z: C64, cap: usize) -> i32 {
    if !tree.root.contains(z) {
        return -1;
    }
    let mut range = 0..4;
    let mut d = 0;
    for l in 1..=cap.min(tree.depth) {
        let pieces = &tree.levels[l - 1];
        match range.clone().find(|&k| pieces[k].contains(z)) {
            Some(k) => {
                d = l as i32;
                range = 4 * k..4 * k + 4;
            }
            None => break,
        }
    }
    d
}

/// Tunables of the stage engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineSpec {
    /// Pole orders used at every source.
    pub orders: Vec<u32>,
    /// Samples per piece boundary in the fits.
    pub boundary_samples: usize,
    /// Weight of closeness on `bK_{j−1}` relative to band placement.
    pub closeness_weight: f64,
    /// Weight of the interpolation rows for hit points.
    pub hit_weight: f64,
    /// Share of `ε_j` the push may use on `K_{j−1}`.
    pub closeness_share: f64,
    /// Gauss–Seidel sweeps over parent pieces.
    pub sweeps: usize,
    /// Levenberg–Marquardt evaluation budget per parent.
    pub max_evaluations: usize,
    /// `sup |u_0|` on `bK_0` as a share of the radius of `L_1`.
    pub initial_share: f64,
}

impl Default for EngineSpec {
    fn default() -> Self {
        Self {
            orders: vec![1, 2],
            boundary_samples: 64,
            closeness_weight: 1.0,
            hit_weight: 1.0,
            closeness_share: 0.5,
            sweeps: 2,
            max_evaluations: 300,
            initial_share: 0.5,
        }
    }
}

/// Ridge weight on the scaled coefficients.
const RIDGE: f64 = 1e-6;

/// A hit target assigned to a gap point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub point: C64,
    pub target: [f64; 3],
}

/// Band and closeness data for one stage.
pub struct StageTargets {
    pub epsilon: f64,
    /// Radii bounding the band `L̊_{j+1} ∖ L_j`.
    pub band: (f64, f64),
    pub hit_tolerance: f64,
    /// Seeds per parent piece.
    pub seeds: Vec<Vec<Seed>>,
}

/// Outcome of the push computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushReport {
    /// Scale applied to the raw push so it meets the closeness share.
    pub scale: f64,
    /// Raw push sup on `K_{j−1}` (samples and mesh vertices).
    pub raw_sup: f64,
    /// Band residual RMS of the raw push on the children samples.
    pub raw_band_rms: f64,
    pub evaluations: usize,
}

/// `u_0`: unit-order poles at the root sources, scaled so that
/// `sup_{bK_0} |u_0| = share·radius`.
pub fn initial_data(tree: &CantorTree, radius: f64, spec: &EngineSpec) -> RationalData {
    let terms: Vec<PoleTerm> = piece_sources(tree, 0, 0)
        .into_iter()
        .map(|c| PoleTerm {
            center: c,
            order: 1,
            coeff: C64::new(1.0, 0.0),
        })
        .collect();
    let data = RationalData::new(terms);
    let sup = data
        .positions(&boundary_samples(&tree.root, spec.boundary_samples))
        .iter()
        .map(|p| norm3(*p))
        .fold(0.0, f64::max);
    data.scaled(spec.initial_share * radius / sup)
}

type Key = (u64, u64, u32);

fn key(c: C64, order: u32) -> Key {
    (c.re.to_bits(), c.im.to_bits(), order)
}

/// One parent's unknowns and sample sets.
struct ParentBlock {
    unknowns: Vec<(C64, u32)>,
    parent_samples: Vec<C64>,
    child_samples: Vec<C64>,
    seeds: Vec<Seed>,
}

/// Compute `u_j` from `u_{j−1}`: a Levenberg–Marquardt push per parent
/// piece (Gauss–Seidel over parents), then a uniform scale so the change on
/// `K_{j−1}` stays within the closeness share of `ε_j`.
pub fn stage_push(
    tree: &CantorTree,
    j: usize,
    prev: &RationalData,
    geometry: &StageGeometry,
    targets: &StageTargets,
    spec: &EngineSpec,
) -> Result<(RationalData, PushReport), PipelineError> {
    let parents = tree.level(j - 1)?;
    let n_samples = spec.boundary_samples;
    let blocks: Vec<ParentBlock> = (0..parents.len())
        .map(|k| {
            let mut unknowns = Vec::new();
            for child in tree.children_of(k) {
                for c in piece_sources(tree, j, child) {
                    for &o in &spec.orders {
                        unknowns.push((c, o));
                    }
                }
            }
            let child_samples = tree
                .children_of(k)
                .flat_map(|c| boundary_samples(&tree.levels[j - 1][c], n_samples))
                .collect();
            ParentBlock {
                unknowns,
                parent_samples: boundary_samples(&parents[k], n_samples),
                child_samples,
                seeds: targets.seeds.get(k).cloned().unwrap_or_default(),
            }
        })
        .collect();

    // coefficients of every unknown, seeded from matching old terms
    let mut index: HashMap<Key, (usize, usize)> = HashMap::new();
    for (b, block) in blocks.iter().enumerate() {
        for (i, &(c, o)) in block.unknowns.iter().enumerate() {
            index.insert(key(c, o), (b, i));
        }
    }
    let mut coef: Vec<Vec<C64>> = blocks.iter().map(|b| vec![C64::new(0.0, 0.0); b.unknowns.len()]).collect();
    let mut fixed = Vec::new();
    for t in &prev.terms {
        match index.get(&key(t.center, t.order)) {
            Some(&(b, i)) => coef[b][i] += t.coeff,
            None => fixed.push(*t),
        }
    }
    let old = coef.clone();
    let to_terms = |coef: &[Vec<C64>], skip: Option<usize>| -> RationalData {
        let mut terms = fixed.clone();
        for (b, block) in blocks.iter().enumerate() {
            if Some(b) == skip {
                continue;
            }
            for (&(c, o), &s) in block.unknowns.iter().zip(&coef[b]) {
                if s != C64::new(0.0, 0.0) {
                    terms.push(PoleTerm { center: c, order: o, coeff: s });
                }
            }
        }
        RationalData::new(terms)
    };

    let mut evaluations = 0;
    let mut band_sq = vec![(0.0, 0usize); blocks.len()];
    for _ in 0..spec.sweeps.max(1) {
        for (b, block) in blocks.iter().enumerate() {
            let others = to_terms(&coef, Some(b));
            let goal: Vec<[f64; 3]> = prev
                .positions(&block.parent_samples)
                .iter()
                .zip(others.positions(&block.parent_samples))
                .map(|(p, q)| sub3(*p, q))
                .collect();
            let ext = others.positions(&block.child_samples);
            let seed_pts: Vec<C64> = block.seeds.iter().map(|s| s.point).collect();
            let seed_ext = others.positions(&seed_pts);
            let problem = PushProblem::new(block, &goal, ext, seed_ext, targets, spec, &coef[b]);
            let (problem, report) = LevenbergMarquardt::new()
                .with_patience(spec.max_evaluations.max(1))
                .minimize(problem);
            evaluations += report.number_of_evaluations;
            coef[b] = problem.coefficients();
            band_sq[b] = problem.band_sq();
        }
    }
    let (sq, cnt) = band_sq.iter().fold((0.0, 0), |(s, n), (a, m)| (s + a, n + m));
    let raw_band_rms = if cnt > 0 { (sq / cnt as f64).sqrt() } else { 0.0 };

    // raw push and its sup on K_{j−1}
    let mut push_terms = Vec::new();
    for (b, block) in blocks.iter().enumerate() {
        for ((&(c, o), &s), &s0) in block.unknowns.iter().zip(&coef[b]).zip(&old[b]) {
            if s != s0 {
                push_terms.push(PoleTerm {
                    center: c,
                    order: o,
                    coeff: s - s0,
                });
            }
        }
    }
    let push = RationalData::new(push_terms);
    let mut probe: Vec<C64> = parents
        .iter()
        .flat_map(|p| boundary_samples(p, 4 * n_samples))
        .collect();
    let kprev = geometry.in_k(j - 1);
    probe.extend(kprev.iter().map(|&v| geometry.vertices()[v]));
    let raw_sup = push.positions(&probe).iter().map(|p| norm3(*p)).fold(0.0, f64::max);
    let budget = spec.closeness_share * targets.epsilon;
    let scale = if raw_sup > budget { budget / raw_sup } else { 1.0 };

    let mut terms = fixed;
    for (b, block) in blocks.iter().enumerate() {
        for ((&(c, o), &s), &s0) in block.unknowns.iter().zip(&coef[b]).zip(&old[b]) {
            let v = s0 + (s - s0) * scale;
            if v != C64::new(0.0, 0.0) {
                terms.push(PoleTerm { center: c, order: o, coeff: v });
            }
        }
    }
    Ok((
        RationalData::new(terms),
        PushReport {
            scale,
            raw_sup,
            raw_band_rms,
            evaluations,
        },
    ))
}

/// Closeness rows on the parent boundary, band rows on the children
/// boundaries and interpolation rows at seeds, over column-scaled real
/// coefficients.
struct PushProblem {
    close: DMatrix<f64>,
    goal: DVector<f64>,
    band: DMatrix<f64>,
    ext: Vec<[f64; 3]>,
    hit: DMatrix<f64>,
    hit_goal: DVector<f64>,
    scale: Vec<f64>,
    close_w: f64,
    hit_w: f64,
    mid: f64,
    half: f64,
    x: DVector<f64>,
}

fn design(points: &[C64], unknowns: &[(C64, u32)]) -> DMatrix<f64> {
    let cols: Vec<Vec<[[f64; 3]; 2]>> = unknowns
        .par_iter()
        .map(|&(c, o)| points.iter().map(|&z| unit_columns(c, o, z)).collect())
        .collect();
    DMatrix::from_fn(3 * points.len(), 2 * unknowns.len(), |r, c| cols[c / 2][r / 3][c % 2][r % 3])
}

impl PushProblem {
    fn new(
        block: &ParentBlock,
        goal: &[[f64; 3]],
        ext: Vec<[f64; 3]>,
        seed_ext: Vec<[f64; 3]>,
        targets: &StageTargets,
        spec: &EngineSpec,
        start: &[C64],
    ) -> Self {
        let mut close = design(&block.parent_samples, &block.unknowns);
        let mut band = design(&block.child_samples, &block.unknowns);
        let seed_pts: Vec<C64> = block.seeds.iter().map(|s| s.point).collect();
        let mut hit = design(&seed_pts, &block.unknowns);
        let scale: Vec<f64> = (0..close.ncols())
            .map(|c| {
                let s = close.column(c).norm() + band.column(c).norm();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        for (c, s) in scale.iter().enumerate() {
            close.column_mut(c).unscale_mut(*s);
            band.column_mut(c).unscale_mut(*s);
            hit.column_mut(c).unscale_mut(*s);
        }
        let hit_goal = DVector::from_iterator(
            3 * block.seeds.len(),
            block
                .seeds
                .iter()
                .zip(&seed_ext)
                .flat_map(|(s, e)| sub3(s.target, *e)),
        );
        let x = DVector::from_iterator(
            2 * start.len(),
            start.iter().zip(scale.chunks(2)).flat_map(|(s, sc)| [s.re * sc[0], s.im * sc[1]]),
        );
        let (lo, hi) = targets.band;
        Self {
            close,
            goal: DVector::from_iterator(3 * goal.len(), goal.iter().flatten().copied()),
            band,
            ext,
            hit,
            hit_goal,
            scale,
            close_w: spec.closeness_weight.sqrt() / targets.epsilon,
            hit_w: spec.hit_weight.sqrt() / targets.hit_tolerance,
            mid: 0.5 * (lo + hi),
            half: 0.5 * (hi - lo),
            x,
        }
    }

    fn coefficients(&self) -> Vec<C64> {
        self.x
            .as_slice()
            .chunks(2)
            .zip(self.scale.chunks(2))
            .map(|(x, s)| C64::new(x[0] / s[0], x[1] / s[1]))
            .collect()
    }

    fn band_points(&self) -> Vec<[f64; 3]> {
        let v = &self.band * &self.x;
        self.ext
            .iter()
            .enumerate()
            .map(|(i, e)| [v[3 * i] + e[0], v[3 * i + 1] + e[1], v[3 * i + 2] + e[2]])
            .collect()
    }

    fn band_sq(&self) -> (f64, usize) {
        let pts = self.band_points();
        let s = pts.iter().map(|p| ((norm3(*p) - self.mid) / self.half).powi(2)).sum();
        (s, pts.len())
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for PushProblem {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.x.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.x.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let close = (&self.close * &self.x - &self.goal) * self.close_w;
        let band: Vec<f64> = self
            .band_points()
            .iter()
            .map(|p| (norm3(*p) - self.mid) / self.half)
            .collect();
        let hit = (&self.hit * &self.x - &self.hit_goal) * self.hit_w;
        let ridge = &self.x * RIDGE;
        let mut r = Vec::with_capacity(close.len() + band.len() + hit.len() + ridge.len());
        r.extend(close.iter());
        r.extend(band);
        r.extend(hit.iter());
        r.extend(ridge.iter());
        Some(DVector::from_vec(r))
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let n = self.x.len();
        let pts = self.band_points();
        let rows = self.close.nrows() + pts.len() + self.hit.nrows() + n;
        let mut jac = DMatrix::zeros(rows, n);
        let mut r0 = 0;
        jac.rows_mut(r0, self.close.nrows()).copy_from(&(&self.close * self.close_w));
        r0 += self.close.nrows();
        for (i, p) in pts.iter().enumerate() {
            let norm = norm3(*p).max(f64::MIN_POSITIVE);
            for k in 0..3 {
                let w = p[k] / (norm * self.half);
                let row = self.band.row(3 * i + k) * w;
                let mut target = jac.row_mut(r0 + i);
                target += row;
            }
        }
        r0 += pts.len();
        jac.rows_mut(r0, self.hit.nrows()).copy_from(&(&self.hit * self.hit_w));
        r0 += self.hit.nrows();
        for i in 0..n {
            jac[(r0 + i, i)] = RIDGE;
        }
        Some(jac)
    }
}

pub(crate) fn norm3(p: [f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

pub(crate) fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::build_cantor_tree;

    fn tree() -> CantorTree {
        build_cantor_tree(&ConvexPiece::rectangle(-0.5, -0.5, 0.5, 0.5), 0.2, 6).unwrap()
    }

    #[test]
    fn sources_are_nested() {
        let t = tree();
        for level in 0..3 {
            for k in 0..t.level(level).unwrap().len() {
                let own = piece_sources(&t, level, k);
                let kids: Vec<C64> = t.children_of(k).flat_map(|c| piece_sources(&t, level + 1, c)).collect();
                for s in own {
                    assert!(kids.contains(&s));
                }
            }
        }
    }

    #[test]
    fn sources_sit_deep_inside() {
        let t = tree();
        let root = &t.root;
        for s in piece_sources(&t, 0, 0) {
            assert!(root.contains_strictly(s, 0.25));
        }
    }

    #[test]
    fn gap_points_avoid_children() {
        let t = tree();
        let g = gap_points(&t, 0, 0);
        assert_eq!(g.len(), 5);
        for z in g {
            assert!(t.levels[0].iter().all(|p| !p.contains(z)));
        }
    }

    #[test]
    fn vertex_classes() {
        let t = tree();
        let g = StageGeometry::build(&t, 2, 1.5, 0.08).unwrap();
        let bk2 = g.boundary_k(2);
        let bk1 = g.boundary_k(1);
        let bk0 = g.boundary_k(0);
        let loops: usize = g.domain.mesh.boundary_loops[1..].iter().map(|l| l.len()).sum();
        assert_eq!(bk2.len(), loops);
        assert!(!bk1.is_empty() && !bk0.is_empty());
        // bK_1 ⊂ K_1 ∖ K̊_0 and K̊_2 ∖ K_1 excludes bK_1
        let collar = g.collar(1);
        assert!(bk1.iter().all(|v| collar.contains(v)));
        let open = g.open_collar(2);
        assert!(bk1.iter().all(|v| !open.contains(v)));
        assert_eq!(g.in_k(2).len(), g.num_vertices());
    }
}
