//! Labyrinths of ring blocks in a boundary collar of the unit disc, Runge
//! fits that are large on the blocks, and the López–Ros step `h = e^p`.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::complexgrid::io::SurfaceMesh;
use crate::complexgrid::{ArnoldiBasis, ArnoldiPolynomial, FitReport, GridError, PlanarDomain};
use crate::metric::{intrinsic_radius, GraphOptions, MetricError, MetricMode};
use crate::weierstrass::{integrate_triple, triple_from_fg, Holo, ImmersionField, WeierError};
use crate::C64;

#[derive(Debug, thiserror::Error)]
pub enum LabyrinthError {
    #[error("invalid labyrinth parameter: {0}")]
    InvalidParameter(String),
    #[error("blocks {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("degree cap {cap} reached with residual {residual} ≥ {epsilon}")]
    DegreeCap {
        cap: usize,
        residual: f64,
        epsilon: f64,
        best: Box<RungeFit>,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Weier(#[from] WeierError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Radial share of each ring slot taken by its block.
pub const BLOCK_FILL: f64 = 0.6;

/// Sign pattern of block targets across rings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetPattern {
    /// `+m` on every block.
    Uniform,
    /// `+m, −m, +m, …` from the inner ring outwards.
    Alternating,
}

/// Annular sector `r_in ≤ |z| ≤ r_out`, `arg z ∈ [θ₀, θ₀ + span]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub id: usize,
    pub r_in: f64,
    pub r_out: f64,
    pub theta_start: f64,
    pub span: f64,
    /// Target value in units of `m`.
    pub target: C64,
    pub samples: Vec<C64>,
}

const EDGE_TOL: f64 = 1e-12;

fn angle_offset(theta: f64, start: f64) -> f64 {
    (theta - start).rem_euclid(TAU)
}

impl Block {
    pub fn sector(id: usize, r_in: f64, r_out: f64, theta_start: f64, span: f64, target: C64) -> Self {
        let mut b = Self {
            id,
            r_in,
            r_out,
            theta_start: theta_start.rem_euclid(TAU),
            span,
            target,
            samples: Vec::new(),
        };
        b.samples = b.sample_points();
        b
    }

    pub fn thickness(&self) -> f64 {
        self.r_out - self.r_in
    }

    /// Membership with a `1e-12` allowance for rounding on the edges.
    pub fn contains(&self, z: C64) -> bool {
        let r = z.norm();
        let t = angle_offset(z.arg(), self.theta_start);
        r >= self.r_in - EDGE_TOL && r <= self.r_out + EDGE_TOL && (t <= self.span + EDGE_TOL || t >= TAU - EDGE_TOL)
    }

    /// Three radial rows (edges and middle) at arc spacing of half the thickness.
    fn sample_points(&self) -> Vec<C64> {
        let step = 0.5 * self.thickness();
        let r_mid = 0.5 * (self.r_in + self.r_out);
        let n = ((self.span * r_mid / step).ceil() as usize).max(16);
        let mut out = Vec::with_capacity(3 * (n + 1));
        for r in [self.r_in, r_mid, self.r_out] {
            for k in 0..=n {
                out.push(C64::from_polar(r, self.theta_start + self.span * k as f64 / n as f64));
            }
        }
        out
    }

    /// Boundary polygon with `arc_segments` segments per arc, counterclockwise.
    pub fn polygon(&self, arc_segments: usize) -> Vec<C64> {
        let n = arc_segments.max(1);
        let at = |r: f64, k: usize| C64::from_polar(r, self.theta_start + self.span * k as f64 / n as f64);
        let mut out: Vec<C64> = (0..=n).map(|k| at(self.r_out, k)).collect();
        out.extend((0..=n).rev().map(|k| at(self.r_in, k)));
        out
    }

    fn disjoint_from(&self, other: &Block) -> bool {
        if self.r_out < other.r_in || other.r_out < self.r_in {
            return true;
        }
        let inside = |a: &Block, t: f64| angle_offset(t, a.theta_start) <= a.span;
        !(inside(self, other.theta_start)
            || inside(self, other.theta_start + other.span)
            || inside(other, self.theta_start)
            || inside(other, self.theta_start + self.span))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Labyrinth {
    /// Collar `1 − δ ≤ |z| ≤ 1`.
    pub delta: f64,
    pub blocks: Vec<Block>,
    /// Number of ring pairs `n` (0 for hand-built labyrinths).
    pub depth: usize,
    pub gap_fraction: f64,
    /// Points where the fit should stay small: the circle
    /// `|z| = CORE_FRACTION·(1 − 2δ)` and the origin.
    pub core: Vec<C64>,
}

impl Labyrinth {
    /// Labyrinth from arbitrary blocks; fails on overlaps.
    pub fn from_blocks(delta: f64, blocks: Vec<Block>) -> Result<Self, LabyrinthError> {
        check_delta(delta)?;
        let lab = Self {
            delta,
            blocks,
            depth: 0,
            gap_fraction: 0.0,
            core: core_samples(delta),
        };
        lab.check_disjoint()?;
        Ok(lab)
    }

    pub fn check_disjoint(&self) -> Result<(), LabyrinthError> {
        for i in 0..self.blocks.len() {
            for j in i + 1..self.blocks.len() {
                if !self.blocks[i].disjoint_from(&self.blocks[j]) {
                    return Err(LabyrinthError::Overlap(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, z: C64) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(z))
    }

    /// Blocks met by the radial segment at angle `theta` across the collar.
    pub fn radial_crossings(&self, theta: f64) -> usize {
        let probe = C64::from_polar(1.0, theta);
        self.blocks.iter().filter(|b| b.contains(probe * (0.5 * (b.r_in + b.r_out)))).count()
    }

    pub fn to_json(&self, arc_segments: usize) -> serde_json::Value {
        let blocks: Vec<serde_json::Value> = self
            .blocks
            .iter()
            .map(|b| {
                serde_json::json!({
                    "id": b.id,
                    "target": [b.target.re, b.target.im],
                    "polygon": b.polygon(arc_segments).iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({
            "delta": self.delta,
            "depth": self.depth,
            "gap_fraction": self.gap_fraction,
            "blocks": blocks,
        })
    }

    /// Flat triangulated strips of the blocks at height 0, with a
    /// `block_id` vertex scalar.
    pub fn overlay(&self, arc_segments: usize) -> SurfaceMesh {
        let n = arc_segments.max(1);
        let mut out = SurfaceMesh::new(Vec::new(), Vec::new()).with_scalar("block_id", Vec::new());
        for b in &self.blocks {
            let base = out.vertices.len();
            for k in 0..=n {
                let t = b.theta_start + b.span * k as f64 / n as f64;
                for r in [b.r_in, b.r_out] {
                    let z = C64::from_polar(r, t);
                    out.vertices.push([z.re, z.im, 0.0]);
                    out.vertex_scalars[0].1.push(b.id as f64);
                }
            }
            for k in 0..n {
                let (a, c) = (base + 2 * k, base + 2 * k + 2);
                out.faces.push([a, c, a + 1]);
                out.faces.push([a + 1, c, c + 1]);
            }
        }
        out
    }

    /// Overlay mapped through an immersion (points outside the mesh dropped
    /// together with their triangles).
    pub fn lifted_overlay(&self, u: &ImmersionField, arc_segments: usize) -> SurfaceMesh {
        let flat = self.overlay(arc_segments);
        let mut keep = vec![None; flat.vertices.len()];
        let mut out = SurfaceMesh::new(Vec::new(), Vec::new()).with_scalar("block_id", Vec::new());
        for (i, p) in flat.vertices.iter().enumerate() {
            if let Some((t, l)) = u.domain.locate(C64::new(p[0], p[1])) {
                let tri = u.domain.mesh.triangles[t];
                let q: [f64; 3] = std::array::from_fn(|k| (0..3).map(|j| l[j] * u.u[k][tri[j]]).sum());
                keep[i] = Some(out.vertices.len());
                out.vertices.push(q);
                out.vertex_scalars[0].1.push(flat.vertex_scalars[0].1[i]);
            }
        }
        for f in &flat.faces {
            if let [Some(a), Some(b), Some(c)] = f.map(|v| keep[v]) {
                out.faces.push([a, b, c]);
            }
        }
        out
    }
}

fn check_delta(delta: f64) -> Result<(), LabyrinthError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(LabyrinthError::InvalidParameter(format!("collar width {delta} not in (0, 1)")));
    }
    Ok(())
}

/// Radius of the core circle as a fraction of `1 − 2δ`.
pub const CORE_FRACTION: f64 = 0.5;

fn core_samples(delta: f64) -> Vec<C64> {
    let rc = CORE_FRACTION * (1.0 - 2.0 * delta);
    let mut core = vec![C64::new(0.0, 0.0)];
    if rc > 0.0 {
        core.extend((0..128).map(|k| C64::from_polar(rc, TAU * k as f64 / 128.0)));
    }
    core
}

/// `2n` concentric ring blocks in the collar; ring `k` misses an angular gap
/// of width `gap·2π` centred at angle 0 (even `k`) or π (odd `k`).
pub fn build_labyrinth(n: usize, delta: f64, gap: f64, pattern: TargetPattern) -> Result<Labyrinth, LabyrinthError> {
    if n == 0 {
        return Err(LabyrinthError::InvalidParameter("depth must be at least 1".into()));
    }
    check_delta(delta)?;
    if !(gap > 0.0 && gap < 1.0) {
        return Err(LabyrinthError::InvalidParameter(format!("gap fraction {gap} not in (0, 1)")));
    }
    let slot = delta / (2 * n) as f64;
    let margin = 0.5 * (1.0 - BLOCK_FILL) * slot;
    if !(BLOCK_FILL * slot > 1e-9) {
        return Err(LabyrinthError::InvalidParameter("rings too thin".into()));
    }
    let blocks: Vec<Block> = (0..2 * n)
        .map(|k| {
            let r0 = 1.0 - delta + k as f64 * slot;
            let gap_center = if k % 2 == 0 { 0.0 } else { PI };
            let half_gap = PI * gap;
            let sign = match pattern {
                TargetPattern::Uniform => 1.0,
                TargetPattern::Alternating if k % 2 == 1 => -1.0,
                TargetPattern::Alternating => 1.0,
            };
            Block::sector(
                k,
                r0 + margin,
                r0 + slot - margin,
                gap_center + half_gap,
                TAU - 2.0 * half_gap,
                C64::new(sign, 0.0),
            )
        })
        .collect();
    let lab = Labyrinth {
        delta,
        blocks,
        depth: n,
        gap_fraction: gap,
        core: core_samples(delta),
    };
    lab.check_disjoint()?;
    Ok(lab)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RungeFit {
    pub poly: ArnoldiPolynomial,
    pub m: f64,
    pub epsilon: f64,
    /// `max |p − m·target|` over block samples.
    pub block_residual: f64,
    /// `max |p|` over core samples.
    pub core_residual: f64,
    pub report: FitReport,
    /// Degrees tried, in order.
    pub degrees_tried: Vec<usize>,
}

impl RungeFit {
    pub fn residual(&self) -> f64 {
        self.block_residual.max(self.core_residual)
    }
}

const LAWSON_ITERS: usize = 8;
/// Lawson refinement starts once the plain fit is within this factor of ε.
const LAWSON_START: f64 = 4.0;

fn sup_residual(poly: &ArnoldiPolynomial, samples: &[(C64, C64)]) -> f64 {
    samples.iter().map(|(z, t)| (poly.eval(*z) - t).norm()).fold(0.0, f64::max)
}

fn fit_degree(basis: &ArnoldiBasis, targets: &[C64], degree: usize, epsilon: f64) -> Result<(ArnoldiPolynomial, FitReport), GridError> {
    let (mut best, mut best_rep) = basis.fit(targets, None, degree)?;
    if best_rep.max_residual > LAWSON_START * epsilon {
        return Ok((best, best_rep));
    }
    // Lawson reweighting pushes the least-squares fit towards the minimax one
    let n = targets.len();
    let mut w = vec![1.0; n];
    let mut res: Vec<f64> = Vec::new();
    for _ in 0..LAWSON_ITERS {
        if best_rep.max_residual < 0.5 * epsilon {
            break;
        }
        let (p, rep) = basis.fit(targets, Some(&w), degree)?;
        if rep.max_residual < best_rep.max_residual {
            (best, best_rep) = (p.clone(), rep);
        }
        res.clear();
        res.extend(basis.points().iter().zip(targets).map(|(z, t)| (p.eval(*z) - t).norm()));
        let total: f64 = w.iter().zip(&res).map(|(w, r)| w * r).sum();
        if !(total > 0.0) {
            break;
        }
        for (wi, r) in w.iter_mut().zip(&res) {
            *wi = (*wi * r / total * n as f64).max(1e-8);
        }
    }
    Ok((best, best_rep))
}

/// Polynomial `p` with `|p − m·target_k| < ε` on every block sample and
/// `|p| < ε` on the core; degrees escalate until the tolerance is met.
///
/// Fits use a discrete orthonormal basis on the samples, so `p` is returned
/// in that form.
pub fn runge_large_on_labyrinth(lab: &Labyrinth, m: f64, epsilon: f64, degree_cap: usize) -> Result<RungeFit, LabyrinthError> {
    if !(m >= 0.0) || !(epsilon > 0.0) {
        return Err(LabyrinthError::InvalidParameter(format!("m = {m}, ε = {epsilon}")));
    }
    if m == 0.0 {
        return Ok(RungeFit {
            poly: ArnoldiPolynomial::zero(),
            m,
            epsilon,
            block_residual: 0.0,
            core_residual: 0.0,
            report: FitReport {
                degree: 0,
                max_residual: 0.0,
                rms_residual: 0.0,
                rank: 0,
                rank_deficient: false,
            },
            degrees_tried: vec![0],
        });
    }
    let mut samples: Vec<(C64, C64)> = Vec::new();
    for b in &lab.blocks {
        samples.extend(b.samples.iter().map(|&z| (z, b.target * m)));
    }
    let n_block = samples.len();
    samples.extend(lab.core.iter().map(|&z| (z, C64::new(0.0, 0.0))));
    let points: Vec<C64> = samples.iter().map(|s| s.0).collect();
    let targets: Vec<C64> = samples.iter().map(|s| s.1).collect();
    let basis = ArnoldiBasis::new(&points, degree_cap)?;
    let cap = basis.max_degree();
    let mut degrees = Vec::new();
    let mut d = 2usize.min(cap);
    let mut best: Option<RungeFit> = None;
    loop {
        degrees.push(d);
        let (poly, report) = fit_degree(&basis, &targets, d, epsilon)?;
        let fit = RungeFit {
            block_residual: sup_residual(&poly, &samples[..n_block]),
            core_residual: sup_residual(&poly, &samples[n_block..]),
            poly,
            m,
            epsilon,
            report,
            degrees_tried: degrees.clone(),
        };
        if fit.residual() < epsilon {
            return Ok(fit);
        }
        if best.as_ref().is_none_or(|b| fit.residual() < b.residual()) {
            best = Some(fit);
        }
        if d >= cap {
            break;
        }
        d = (d + 2).max((d as f64 * 1.25).ceil() as usize).min(cap);
    }
    let mut best = best.expect("at least one degree tried");
    best.degrees_tried = degrees;
    Err(LabyrinthError::DegreeCap {
        cap: degree_cap,
        residual: best.residual(),
        epsilon,
        best: Box::new(best),
    })
}

/// Metric amplification `(|h| + |g|²/|h|)² / (1 + |g|²)²` of `(f, g) ↦ (f h, g/h)`.
pub fn lopez_ros_metric_ratio(h: C64, g: C64) -> f64 {
    let (a, s) = (h.norm(), g.norm_sqr());
    ((a + s / a) / (1.0 + s)).powi(2)
}

#[derive(Clone, Debug)]
pub struct JxStep {
    pub f: Holo,
    pub g: Holo,
    pub fit: RungeFit,
    pub before: ImmersionField,
    pub after: ImmersionField,
    pub report: JxReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JxReport {
    pub m: f64,
    pub epsilon: f64,
    /// Declared bound on the sup change of the third coordinate.
    pub epsilon_prime: f64,
    pub third_coordinate_change: f64,
    pub third_coordinate_pass: bool,
    /// `min e^{2|Re p|}` over block samples, against `e^{2(m−ε)}`.
    pub h_factor_min: f64,
    pub h_factor_threshold: f64,
    /// `min λ_after/λ_before` over mesh vertices inside blocks.
    pub metric_ratio_min: f64,
    /// `min` over the same vertices of the exact López–Ros ratio.
    pub metric_ratio_predicted_min: f64,
    pub amplification_pass: bool,
    pub radius_before: f64,
    pub radius_after: f64,
}

/// One López–Ros step with `h = e^p`, `p` from [`runge_large_on_labyrinth`].
///
/// Both immersions are integrated from the vertex nearest 0, pinned at the
/// origin. The third coordinate `Re ∫ f g` is unchanged in exact arithmetic,
/// so `ε'` is a rounding budget `256·eps·L·S` with `L` the total mesh edge
/// length and `S` the largest `|f g|` on the vertices.
pub fn jorge_xavier_step(
    f: &Holo,
    g: &Holo,
    domain: Arc<PlanarDomain>,
    lab: &Labyrinth,
    m: f64,
    epsilon: f64,
    degree_cap: usize,
) -> Result<JxStep, LabyrinthError> {
    let fit = runge_large_on_labyrinth(lab, m, epsilon, degree_cap)?;
    let h = Holo::exp(Holo::arnoldi(fit.poly.clone()));
    let (f2, g2) = if fit.poly.is_zero() {
        (f.clone(), g.clone())
    } else {
        (Holo::mul(f.clone(), h.clone()), Holo::div(g.clone(), h))
    };
    let base = domain.mesh.nearest_vertex(C64::new(0.0, 0.0));
    let before = integrate_triple(&triple_from_fg(f, g, domain.clone())?, base, [0.0; 3])?;
    let after = integrate_triple(&triple_from_fg(&f2, &g2, domain.clone())?, base, [0.0; 3])?;

    let mesh = &domain.mesh;
    let total_len: f64 = mesh.edges().iter().map(|&[a, b]| (mesh.vertices[a] - mesh.vertices[b]).norm()).sum();
    let sup_fg = mesh
        .vertices
        .iter()
        .map(|&z| (f.eval(z) * g.eval(z)).norm())
        .fold(0.0, f64::max);
    let epsilon_prime = 256.0 * f64::EPSILON * total_len * sup_fg.max(1.0);
    let change = before.u[2]
        .iter()
        .zip(&after.u[2])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let h_factor_min = lab
        .blocks
        .iter()
        .flat_map(|b| b.samples.iter())
        .map(|&z| (2.0 * fit.poly.eval(z).re.abs()).exp())
        .fold(f64::INFINITY, f64::min);
    let h_factor_threshold = (2.0 * (m - epsilon)).exp();
    let mut ratio_min = f64::INFINITY;
    let mut predicted_min = f64::INFINITY;
    for (v, &z) in mesh.vertices.iter().enumerate() {
        if lab.contains(z).is_some() {
            ratio_min = ratio_min.min(after.metric_density[v] / before.metric_density[v]);
            predicted_min = predicted_min.min(lopez_ros_metric_ratio(fit.poly.eval(z).exp(), g.eval(z)));
        }
    }
    let opts = GraphOptions::new(MetricMode::ConformalFactor);
    let report = JxReport {
        m,
        epsilon,
        epsilon_prime,
        third_coordinate_change: change,
        third_coordinate_pass: change < epsilon_prime,
        h_factor_min,
        h_factor_threshold,
        metric_ratio_min: ratio_min,
        metric_ratio_predicted_min: predicted_min,
        amplification_pass: m == 0.0 || h_factor_min >= h_factor_threshold,
        radius_before: intrinsic_radius(&before, opts)?,
        radius_after: intrinsic_radius(&after, opts)?,
    };
    Ok(JxStep {
        f: f2,
        g: g2,
        fit,
        before,
        after,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexgrid::{build_domain, DomainSpec};

    #[test]
    fn small_labyrinths() {
        let lab = build_labyrinth(1, 0.2, 0.1, TargetPattern::Uniform).unwrap();
        assert_eq!(lab.blocks.len(), 2);
        for b in &lab.blocks {
            assert!(b.r_in >= 0.8 && b.r_out <= 1.0);
            assert!(b.samples.iter().all(|&z| b.contains(z)));
        }
        let lab3 = build_labyrinth(3, 0.2, 0.1, TargetPattern::Alternating).unwrap();
        assert_eq!(lab3.blocks.len(), 6);
        for k in 0..360 {
            let theta = TAU * k as f64 / 360.0;
            let hits = lab3.radial_crossings(theta);
            let in_gap = angle_offset(theta, -PI * 0.1) <= TAU * 0.1 || angle_offset(theta, PI - PI * 0.1) <= TAU * 0.1;
            assert!(hits >= 3 || in_gap, "{theta}: {hits}");
        }
        assert!(matches!(
            build_labyrinth(0, 0.2, 0.1, TargetPattern::Uniform),
            Err(LabyrinthError::InvalidParameter(_))
        ));
        assert_eq!(lab3.blocks[1].target, C64::new(-1.0, 0.0));
    }

    #[test]
    fn overlap_rejected() {
        let a = Block::sector(0, 0.8, 0.9, 0.0, 1.0, C64::new(1.0, 0.0));
        let b = Block::sector(1, 0.85, 0.95, 0.5, 1.0, C64::new(1.0, 0.0));
        let c = Block::sector(2, 0.85, 0.95, 2.0, 1.0, C64::new(1.0, 0.0));
        assert!(matches!(Labyrinth::from_blocks(0.2, vec![a.clone(), b]), Err(LabyrinthError::Overlap(0, 1))));
        assert!(Labyrinth::from_blocks(0.2, vec![a, c]).is_ok());
    }

    #[test]
    fn single_block_fit() {
        let block = Block::sector(0, 0.85, 0.95, -0.4, 0.8, C64::new(1.0, 0.0));
        let lab = Labyrinth::from_blocks(0.2, vec![block]).unwrap();
        let fit = runge_large_on_labyrinth(&lab, 5.0, 0.1, 256).unwrap();
        assert!(fit.residual() < 0.1);
        assert!(fit.report.degree <= 35, "{}", fit.report.degree);
        let zero = runge_large_on_labyrinth(&lab, 0.0, 0.1, 256).unwrap();
        assert!(zero.poly.is_zero() && zero.residual() == 0.0);
    }

    fn min_degree(lab: &Labyrinth, m: f64, eps: f64) -> usize {
        (2..200)
            .find(|&cap| runge_large_on_labyrinth(lab, m, eps, cap).is_ok())
            .expect("fit within degree 200")
    }

    #[test]
    fn odd_targets_need_lower_degree() {
        let mk = |sign: f64| {
            Labyrinth::from_blocks(
                0.2,
                vec![
                    Block::sector(0, 0.85, 0.95, -0.3, 0.6, C64::new(1.0, 0.0)),
                    Block::sector(1, 0.85, 0.95, PI - 0.3, 0.6, C64::new(sign, 0.0)),
                ],
            )
            .unwrap()
        };
        let odd = min_degree(&mk(-1.0), 2.0, 0.1);
        let even = min_degree(&mk(1.0), 2.0, 0.1);
        assert!(odd < even, "{odd} {even}");
        assert!(odd <= 21 && even <= 22, "{odd} {even}");
    }

    #[test]
    fn step_on_flat_data_grows_radius() {
        let dom = Arc::new(build_domain(&DomainSpec::disc(1.0, 0.04)).unwrap());
        let lab = build_labyrinth(2, 0.3, 0.75, TargetPattern::Uniform).unwrap();
        let s = jorge_xavier_step(&Holo::real(1.0), &Holo::real(0.5), dom, &lab, 3.0, 1.5, 200).unwrap();
        let r = &s.report;
        assert!(r.radius_after > r.radius_before, "{r:?}");
        assert!(r.third_coordinate_pass && r.amplification_pass, "{r:?}");
        assert!((r.metric_ratio_min / r.metric_ratio_predicted_min - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_step_is_identity() {
        let dom = Arc::new(build_domain(&DomainSpec::disc(1.0, 0.1)).unwrap());
        let lab = build_labyrinth(1, 0.2, 0.1, TargetPattern::Uniform).unwrap();
        let s = jorge_xavier_step(&Holo::real(1.0), &Holo::real(0.5), dom, &lab, 0.0, 0.1, 64).unwrap();
        for k in 0..3 {
            assert_eq!(s.before.u[k], s.after.u[k]);
        }
        assert_eq!(s.report.radius_before, s.report.radius_after);
    }

    #[test]
    fn metric_ratio_formula() {
        assert!((lopez_ros_metric_ratio(C64::new(1.0, 0.0), C64::new(0.5, 0.0)) - 1.0).abs() < 1e-15);
        let big = lopez_ros_metric_ratio(C64::new(3f64.exp(), 0.0), C64::new(0.5, 0.0));
        assert!(big > (6.0f64).exp() / 1.5625 && big < (6.0f64).exp());
    }

    #[test]
    fn json_and_overlay() {
        let lab = build_labyrinth(2, 0.2, 0.1, TargetPattern::Uniform).unwrap();
        let j = lab.to_json(32);
        assert_eq!(j["blocks"].as_array().unwrap().len(), 4);
        let o = lab.overlay(32);
        assert_eq!(o.faces.len(), 4 * 64);
        assert_eq!(o.vertex_scalars[0].1.len(), o.vertices.len());
        for b in &lab.blocks {
            let poly = b.polygon(8);
            assert!(crate::complexgrid::signed_area(&poly) > 0.0);
        }
    }
}
