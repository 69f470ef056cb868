//! Staged construction of immersions of Cantor-set complements with a
//! ledger of per-stage certificates.
//!
//! Stage `j` lives on `K_j`, the chart disc minus the open level-`j` pieces
//! of a Cantor tree (`K_0` is the complement of the root). The immersion is
//! `u_j = Re L[F_j]` with `F_j` rational ([`field`]); `u_{j+1}` adds a push
//! computed by [`engine::stage_push`]. Every certificate is recomputed from
//! the stored coefficients by [`recompute`].

mod checks;
mod engine;
mod field;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cantor::{build_cantor_tree, CantorError, CantorTree, ConvexPiece};
use crate::complexgrid::io::{write_columns_csv, write_ply, PlyFormat, SurfaceMesh};
use crate::complexgrid::{GridError, PlanarDomain};
use crate::convexity::{exhaustion_chain, norm_squared, ConvexityError, ExhaustionChain, Grid3, Point3, ScalarField3};
use crate::metric::{build_metric_graph, GraphOptions, MetricError, MetricMode};
use crate::nadirashvili::Eps;
use crate::weierstrass::ImmersionField;
use crate::C64;

pub use checks::{
    cauchy_diagnostic, cauchy_from_images, hitting_check, limit_set_report, properness_check, sphere_samples,
    CauchyReport, HitResult, LimitSetReport, ProperReport,
};
pub use engine::{boundary_samples, gap_points, piece_sources, EngineSpec, PushReport, Seed, StageGeometry};
pub use field::{PoleTerm, RationalData};

use checks::dist3;
use engine::{initial_data, stage_push, StageTargets};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Cantor(#[from] CantorError),
    #[error(transparent)]
    Convexity(#[from] ConvexityError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("stage {j}: {message}")]
    Stage { j: usize, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Version of the run configuration and ledger layout.
pub const CONFIG_SCHEMA: u32 = 1;

/// Exhaustion function of the target domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiSpec {
    /// `φ(x) = |x|²`, so `{φ < c}` is a ball.
    NormSquared,
}

impl PhiSpec {
    pub fn eval(&self, x: Point3) -> f64 {
        match self {
            PhiSpec::NormSquared => x[0] * x[0] + x[1] * x[1] + x[2] * x[2],
        }
    }

    /// Radius of the sphere `{φ = c}`.
    pub fn radius(&self, c: f64) -> f64 {
        match self {
            PhiSpec::NormSquared => c.max(0.0).sqrt(),
        }
    }

    pub fn field(&self, half: f64) -> ScalarField3 {
        match self {
            PhiSpec::NormSquared => norm_squared(half),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema: u32,
    /// Root piece `Δ₀` as a convex polygon.
    pub root: Vec<[f64; 2]>,
    pub gamma: f64,
    /// Depth of the Cantor tree; sources sit at this level.
    pub depth: usize,
    /// Radius of the chart disc carrying the mesh.
    pub chart_radius: f64,
    pub phi: PhiSpec,
    /// `r_1 < r_2 < …`, at least `stages + 1` of them.
    pub values: Vec<f64>,
    /// `Ω = {φ < omega_level}`.
    pub omega_level: f64,
    /// `ε_0`; later values follow the strict halving rule.
    pub epsilon: f64,
    /// Finite hit set `A`.
    pub hit_set: Vec<[f64; 3]>,
    pub hit_tolerance: f64,
    /// Smallest allowed `|φ(a) − r_j|`.
    pub hit_margin: f64,
    pub mesh_h: f64,
    /// `J`.
    pub stages: usize,
    /// Chart position of `p_0`.
    pub p0: [f64; 2],
    /// Lattice points per axis of the voxel sets `L_j`.
    pub voxels: usize,
    pub limit_directions: usize,
    pub cauchy_slack: f64,
    #[serde(default)]
    pub engine: EngineSpec,
}

impl RunConfig {
    /// Ball target `φ = |x|²` over the centred unit square with `γ = 0.2`.
    pub fn ball(stages: usize) -> Self {
        let r = |i: usize| (1.5 * i as f64).powi(2);
        Self {
            schema: CONFIG_SCHEMA,
            root: vec![[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]],
            gamma: 0.2,
            depth: 8,
            chart_radius: 1.5,
            phi: PhiSpec::NormSquared,
            values: (1..=stages + 1).map(r).collect(),
            omega_level: r(stages + 2),
            epsilon: 1.0,
            hit_set: Vec::new(),
            hit_tolerance: 0.25,
            hit_margin: 1e-3,
            mesh_h: 0.03,
            stages,
            p0: [1.0, 0.0],
            voxels: 48,
            limit_directions: 256,
            cauchy_slack: 0.05,
            engine: EngineSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        if self.schema != CONFIG_SCHEMA {
            return bad(format!("schema {} (expected {CONFIG_SCHEMA})", self.schema));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma {} outside (0, 1)", self.gamma));
        }
        if self.depth <= self.stages {
            return bad(format!("depth {} must exceed the stage count {}", self.depth, self.stages));
        }
        if self.values.len() < self.stages + 1 {
            return bad(format!("{} values given, {} needed", self.values.len(), self.stages + 1));
        }
        if !(self.values[0] > 0.0) || self.values.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("values must be positive and strictly increasing".into());
        }
        if !(self.omega_level > self.values[self.stages]) {
            return bad("omega_level must exceed r_{J+1}".into());
        }
        for (name, x) in [
            ("epsilon", self.epsilon),
            ("hit_tolerance", self.hit_tolerance),
            ("mesh_h", self.mesh_h),
            ("chart_radius", self.chart_radius),
        ] {
            if !(x > 0.0) || !x.is_finite() {
                return bad(format!("{name} must be positive"));
            }
        }
        if !(self.hit_margin >= 0.0) || !(self.cauchy_slack >= 0.0) {
            return bad("hit_margin and cauchy_slack must be nonnegative".into());
        }
        if self.voxels < 8 || self.limit_directions == 0 {
            return bad("voxels must be at least 8 and limit_directions positive".into());
        }
        let e = &self.engine;
        if e.orders.is_empty() || e.orders.contains(&0) || e.boundary_samples < 8 {
            return bad("engine needs positive pole orders and at least 8 boundary samples".into());
        }
        if !(e.closeness_share > 0.0 && e.closeness_share < 1.0) || !(e.initial_share > 0.0 && e.initial_share < 1.0) {
            return bad("closeness_share and initial_share must lie in (0, 1)".into());
        }
        let root = self.root_piece()?;
        let p0 = C64::new(self.p0[0], self.p0[1]);
        if root.contains(p0) || p0.norm() >= self.chart_radius {
            return bad("p0 must lie in the chart outside the root".into());
        }
        if root.polygon.iter().any(|z| z.norm() >= self.chart_radius) {
            return bad("chart disc must contain the root".into());
        }
        for a in &self.hit_set {
            let f = self.phi.eval(*a);
            if !(f < self.omega_level) {
                return bad(format!("hit point {a:?} outside Ω"));
            }
            if let Some(r) = self.values.iter().find(|&&r| (f - r).abs() <= self.hit_margin) {
                return bad(format!("hit point {a:?} within the margin of the level set φ = {r}"));
            }
        }
        Ok(())
    }

    pub fn root_piece(&self) -> Result<ConvexPiece, PipelineError> {
        Ok(ConvexPiece::root(self.root.iter().map(|p| C64::new(p[0], p[1])).collect())?)
    }

    /// `r_i` with `r_0 = 0`.
    pub fn r(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.values[i - 1]
        }
    }

    pub fn from_json(s: &str) -> Result<Self, PipelineError> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }
}

/// SHA-256 of the canonical JSON form, as hex.
pub fn config_hash(config: &RunConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// One pass/fail entry. `margin` is positive on a pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub pass: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub margin: Option<f64>,
    pub note: String,
}

impl Certificate {
    fn vacuous(note: &str) -> Self {
        Self {
            pass: true,
            value: None,
            threshold: None,
            margin: None,
            note: note.into(),
        }
    }

    fn below(value: f64, threshold: f64, note: &str) -> Self {
        Self {
            pass: value < threshold,
            value: Some(value),
            threshold: Some(threshold),
            margin: Some(threshold - value),
            note: note.into(),
        }
    }
}

/// Conditions (a)–(g) for one stage `j ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageCertificates {
    /// `4^j` disjoint pieces, nested in the previous level.
    pub a: Certificate,
    /// `|u_j − u_{j−1}| < ε_j` on `K_{j−1}`.
    pub b: Certificate,
    /// `u_j(bK_j) ⊂ L̊_{j+1} ∖ L_j`.
    pub c: Certificate,
    /// `u_j(K_j ∖ K̊_{j−1}) ∩ L_{j−1} = ∅`.
    pub d: Certificate,
    /// `dist_{u_j}(p_0, bK_i) > i` for `i ≤ j`.
    pub e: Certificate,
    /// `A ∩ L̊_i ⊂ u_j(K̊_i ∖ K_{i−1})` within the hit tolerance, `i ≤ j`.
    pub f: Certificate,
    /// `ε_j < ε_{j−1}/2`.
    pub g: Certificate,
}

impl StageCertificates {
    pub fn all(&self) -> [(&'static str, &Certificate); 7] {
        [
            ("a", &self.a),
            ("b", &self.b),
            ("c", &self.c),
            ("d", &self.d),
            ("e", &self.e),
            ("f", &self.f),
            ("g", &self.g),
        ]
    }

    pub fn all_pass(&self) -> bool {
        self.all().iter().all(|(_, c)| c.pass)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub triangles: usize,
    pub holes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusRecord {
    pub i: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageHit {
    pub i: usize,
    pub result: HitResult,
}

/// Everything measured on one stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurements {
    pub mesh: MeshSummary,
    pub certificates: Option<StageCertificates>,
    pub radii: Vec<RadiusRecord>,
    pub hits: Vec<StageHit>,
    pub properness: Option<ProperReport>,
    /// `[min, max]` of `φ∘u_j` on `bK_j`.
    pub band_range: [f64; 2],
    /// Smallest metric density over the vertices.
    pub min_density: f64,
    pub p0_vertex: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub j: usize,
    pub epsilon: Eps,
    pub data: RationalData,
    pub push: Option<PushReport>,
    pub seeds: Vec<Seed>,
    pub measured: Measurements,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// (a) and (g) at every stage.
    pub structural_pass: bool,
    pub all_b_pass: bool,
    pub all_pass: bool,
    pub cauchy: CauchyReport,
    /// `2ε_1`.
    pub cauchy_bound: Option<f64>,
    pub limit_set: LimitSetReport,
    pub chain_warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: u32,
    pub config: RunConfig,
    pub config_hash: String,
    pub stages: Vec<StageRecord>,
    pub summary: RunSummary,
}

impl RunRecord {
    /// Sum of the Cauchy sup-differences stays within `2ε_1`.
    pub fn cauchy_sum_within_bound(&self) -> Option<bool> {
        self.summary.cauchy_bound.map(|b| self.summary.cauchy.total <= b)
    }
}

/// A finished run with the stage meshes.
#[derive(Clone, Debug)]
pub struct Run {
    pub record: RunRecord,
    pub domains: Vec<Arc<PlanarDomain>>,
}

/// Fixed data shared by every stage.
struct Context<'a> {
    config: &'a RunConfig,
    tree: CantorTree,
    chain: ExhaustionChain,
    sphere: Vec<Point3>,
}

impl<'a> Context<'a> {
    fn new(config: &'a RunConfig, marker: Point3) -> Result<Self, PipelineError> {
        config.validate()?;
        let tree = build_cantor_tree(&config.root_piece()?, config.gamma, config.depth)?;
        let half = 1.05 * config.phi.radius(config.omega_level);
        let grid = Grid3::cube(half, config.voxels);
        let chain = exhaustion_chain(
            &config.phi.field(half),
            &config.values[..=config.stages],
            marker,
            &grid,
            1e-3,
        )?;
        let sphere = sphere_samples([0.0; 3], config.phi.radius(config.omega_level), config.limit_directions);
        Ok(Self {
            config,
            tree,
            chain,
            sphere,
        })
    }

    fn geometry(&self, j: usize) -> Result<StageGeometry, PipelineError> {
        StageGeometry::build(&self.tree, j, self.config.chart_radius, self.config.mesh_h)
    }

    fn p0(&self) -> C64 {
        C64::new(self.config.p0[0], self.config.p0[1])
    }
}

/// Marker of the exhaustion components: the image of `p_0` under `u_0`.
fn marker(config: &RunConfig, tree: &CantorTree) -> Point3 {
    let d = initial_data(tree, config.phi.radius(config.r(1)), &config.engine);
    d.position(C64::new(config.p0[0], config.p0[1]))
}

fn epsilons(config: &RunConfig) -> Result<Vec<Eps>, PipelineError> {
    let e0 = Eps::from_f64(config.epsilon).ok_or_else(|| PipelineError::InvalidConfig("epsilon".into()))?;
    let mut v = vec![e0];
    for _ in 0..config.stages {
        let next = v.last().expect("nonempty").next_strict_half();
        v.push(next);
    }
    Ok(v)
}

/// Run stages `0..=J`. Failed certificates are recorded, not fatal.
pub fn run_construction(config: &RunConfig) -> Result<Run, PipelineError> {
    config.validate()?;
    let tree = build_cantor_tree(&config.root_piece()?, config.gamma, config.depth)?;
    let ctx = Context::new(config, marker(config, &tree))?;
    let eps = epsilons(config)?;
    let mut stages: Vec<StageRecord> = Vec::new();
    let mut domains = Vec::new();
    let mut images = Vec::new();
    let mut data = initial_data(&ctx.tree, config.phi.radius(config.r(1)), &config.engine);
    for j in 0..=config.stages {
        let geometry = ctx.geometry(j)?;
        let mut push = None;
        let mut seeds = Vec::new();
        let prev = data.clone();
        if j >= 1 {
            let per_parent = assign_seeds(&ctx, j, &prev);
            seeds = per_parent.iter().flatten().copied().collect();
            let targets = StageTargets {
                epsilon: eps[j].to_f64(),
                band: (config.phi.radius(config.r(j)), config.phi.radius(config.r(j + 1))),
                hit_tolerance: config.hit_tolerance,
                seeds: per_parent,
            };
            let (next, report) = stage_push(&ctx.tree, j, &prev, &geometry, &targets, &config.engine)?;
            data = next;
            push = Some(report);
        }
        let (measured, image) = measure(&ctx, j, &geometry, (j >= 1).then_some(&prev), &data, &eps)?;
        images.push(image);
        domains.push(geometry.domain.clone());
        stages.push(StageRecord {
            j,
            epsilon: eps[j],
            data: data.clone(),
            push,
            seeds,
            measured,
        });
    }
    let summary = summarize(&ctx, &stages, &images)?;
    Ok(Run {
        record: RunRecord {
            schema: CONFIG_SCHEMA,
            config: config.clone(),
            config_hash: config_hash(config),
            stages,
            summary,
        },
        domains,
    })
}

/// Each hit point in `L̊_j` gets the unused gap point of a level-`(j−1)`
/// piece whose current image is nearest.
fn assign_seeds(ctx: &Context, j: usize, prev: &RationalData) -> Vec<Vec<Seed>> {
    let config = ctx.config;
    let n = ctx.tree.level(j - 1).map(|l| l.len()).unwrap_or(0);
    let mut out = vec![Vec::new(); n];
    let mut candidates: Vec<(usize, C64, Point3)> = (0..n)
        .flat_map(|k| gap_points(&ctx.tree, j - 1, k).into_iter().map(move |z| (k, z)))
        .map(|(k, z)| (k, z, prev.position(z)))
        .collect();
    for &a in config.hit_set.iter().filter(|a| config.phi.eval(**a) < config.r(j)) {
        let best = candidates
            .iter()
            .enumerate()
            .min_by(|x, y| dist3(x.1 .2, a).total_cmp(&dist3(y.1 .2, a)))
            .map(|(i, _)| i);
        if let Some(i) = best {
            let (k, z, _) = candidates.remove(i);
            out[k].push(Seed { point: z, target: a });
        }
    }
    out
}

/// Certificates and measurements of stage `j` for the given data.
fn measure(
    ctx: &Context,
    j: usize,
    geometry: &StageGeometry,
    prev: Option<&RationalData>,
    data: &RationalData,
    eps: &[Eps],
) -> Result<(Measurements, Vec<Point3>), PipelineError> {
    let config = ctx.config;
    let mesh = &geometry.domain.mesh;
    let (pos, density) = data.sample(&mesh.vertices);
    if let Some(v) = pos.iter().position(|p| !p.iter().all(|x| x.is_finite())) {
        return Err(PipelineError::Stage {
            j,
            message: format!("non-finite immersion at vertex {v}"),
        });
    }
    let p0_vertex = mesh.nearest_vertex(ctx.p0());
    let field = ImmersionField {
        domain: geometry.domain.clone(),
        u: [0, 1, 2].map(|k| pos.iter().map(|p| p[k]).collect()),
        metric_density: density.clone(),
        base_point: p0_vertex,
    };
    let bk = geometry.boundary_k(j);
    let phis: Vec<f64> = bk.iter().map(|&v| config.phi.eval(pos[v])).collect();
    let band_range = [
        phis.iter().copied().fold(f64::INFINITY, f64::min),
        phis.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    ];
    let summary = MeshSummary {
        vertices: mesh.num_vertices(),
        triangles: mesh.triangles.len(),
        holes: geometry.domain.num_boundary_components() - 1,
    };
    let min_density = density.iter().copied().fold(f64::INFINITY, f64::min);
    let Some(prev) = prev else {
        return Ok((
            Measurements {
                mesh: summary,
                certificates: None,
                radii: Vec::new(),
                hits: Vec::new(),
                properness: None,
                band_range,
                min_density,
                p0_vertex,
            },
            pos,
        ));
    };

    // (a)
    let pieces = 1usize << (2 * j);
    let overlaps = ctx.tree.intersecting_pairs(j)?.len();
    let unnested = ctx.tree.nesting_violations(j - 1)?.len();
    let a = Certificate {
        pass: summary.holes == pieces && overlaps == 0 && unnested == 0,
        value: Some(summary.holes as f64),
        threshold: Some(pieces as f64),
        margin: None,
        note: format!("{} holes, {overlaps} overlapping pairs, {unnested} unnested pieces", summary.holes),
    };

    // (b)
    let kprev = geometry.in_k(j - 1);
    let old = prev.positions(&kprev.iter().map(|&v| mesh.vertices[v]).collect::<Vec<_>>());
    let sup = kprev
        .iter()
        .zip(&old)
        .map(|(&v, o)| dist3(pos[v], *o))
        .fold(0.0, f64::max);
    let b = Certificate::below(sup, eps[j].to_f64(), "sup over K_{j-1} vertices");

    // (c)
    let (lo, hi) = (config.r(j), config.r(j + 1));
    let c = Certificate {
        pass: band_range[0] > lo && band_range[1] < hi,
        value: Some(band_range[1]),
        threshold: Some(hi),
        margin: Some((band_range[0] - lo).min(hi - band_range[1])),
        note: format!("phi on bK_j in [{:.6e}, {:.6e}], band ({lo}, {hi})", band_range[0], band_range[1]),
    };

    // (d)
    let (d, properness) = if j == 1 {
        (Certificate::vacuous("L_0 is empty"), None)
    } else {
        let collar: Vec<Point3> = geometry.collar(j).iter().map(|&v| pos[v]).collect();
        let rep = properness_check(&collar, &ctx.chain.levels[j - 2].component, &ctx.chain.grid);
        let cert = Certificate {
            pass: rep.pass,
            value: Some(rep.inside as f64),
            threshold: Some(0.0),
            margin: Some(if rep.pass { rep.min_clearance } else { -(rep.inside as f64) }),
            note: format!("{} collar samples in L_(j-1); clearance {:.4e}", rep.inside, rep.min_clearance),
        };
        (cert, Some(rep))
    };

    // (e)
    let graph = build_metric_graph(&field, GraphOptions::new(MetricMode::ConformalFactor))?;
    let dist = graph.distances_from(p0_vertex);
    let radii: Vec<RadiusRecord> = (1..=j)
        .map(|i| RadiusRecord {
            i,
            distance: geometry
                .boundary_k(i)
                .iter()
                .map(|&v| dist[v])
                .fold(f64::INFINITY, f64::min),
        })
        .collect();
    let e_margin = radii.iter().map(|r| r.distance - r.i as f64).fold(f64::INFINITY, f64::min);
    let e = Certificate {
        pass: radii.iter().all(|r| r.distance > r.i as f64),
        value: radii.last().map(|r| r.distance),
        threshold: Some(j as f64),
        margin: Some(e_margin),
        note: "smallest margin dist(p0, bK_i) - i".into(),
    };

    // (f)
    let mut hits = Vec::new();
    for i in 1..=j {
        let scope: Vec<Point3> = config
            .hit_set
            .iter()
            .copied()
            .filter(|a| config.phi.eval(*a) < config.r(i))
            .collect();
        if scope.is_empty() {
            continue;
        }
        for result in hitting_check(&field, &scope, &geometry.open_collar(i), config.hit_tolerance)? {
            hits.push(StageHit { i, result });
        }
    }
    let f = if hits.is_empty() {
        Certificate::vacuous("no hit points in scope")
    } else {
        let worst = hits
            .iter()
            .map(|h| h.result.distance.unwrap_or(f64::MAX))
            .fold(0.0, f64::max);
        Certificate::below(worst, config.hit_tolerance, "largest nearest-image distance")
    };

    // (g)
    let g = Certificate {
        pass: eps[j].lt_half_of(eps[j - 1]) && eps[j].to_f64() > 0.0,
        value: Some(eps[j].to_f64()),
        threshold: Some(0.5 * eps[j - 1].to_f64()),
        margin: Some(0.5 * eps[j - 1].to_f64() - eps[j].to_f64()),
        note: "strict halving".into(),
    };

    Ok((
        Measurements {
            mesh: summary,
            certificates: Some(StageCertificates { a, b, c, d, e, f, g }),
            radii,
            hits,
            properness,
            band_range,
            min_density,
            p0_vertex,
        },
        pos,
    ))
}

fn summarize(ctx: &Context, stages: &[StageRecord], images: &[Vec<Point3>]) -> Result<RunSummary, PipelineError> {
    let certs: Vec<&StageCertificates> = stages.iter().filter_map(|s| s.measured.certificates.as_ref()).collect();
    let k0 = ctx.geometry(0)?;
    let k0_points: Vec<C64> = k0.in_k(0).iter().map(|&v| k0.vertices()[v]).collect();
    let data: Vec<RationalData> = stages.iter().map(|s| s.data.clone()).collect();
    Ok(RunSummary {
        structural_pass: certs.iter().all(|c| c.a.pass && c.g.pass),
        all_b_pass: certs.iter().all(|c| c.b.pass),
        all_pass: certs.iter().all(|c| c.all_pass()),
        cauchy: cauchy_diagnostic(&data, &k0_points, ctx.config.cauchy_slack),
        cauchy_bound: stages.get(1).map(|s| 2.0 * s.epsilon.to_f64()),
        limit_set: limit_set_report(images, &ctx.sphere),
        chain_warnings: ctx.chain.levels.iter().flat_map(|l| l.warnings.clone()).collect(),
    })
}

/// Outcome of re-deriving a ledger from its stored data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecomputeReport {
    pub identical: bool,
    pub mismatched_stages: Vec<usize>,
    pub summary_identical: bool,
    pub hash_matches: bool,
}

/// Rebuild every mesh and recheck every certificate from the stored stage
/// coefficients; the results must equal the stored ones exactly.
pub fn recompute(record: &RunRecord) -> Result<RecomputeReport, PipelineError> {
    let config = &record.config;
    let tree = build_cantor_tree(&config.root_piece()?, config.gamma, config.depth)?;
    let ctx = Context::new(config, marker(config, &tree))?;
    let eps = epsilons(config)?;
    let mut mismatched = Vec::new();
    let mut images = Vec::new();
    for (j, stage) in record.stages.iter().enumerate() {
        let geometry = ctx.geometry(j)?;
        let prev = j.checked_sub(1).map(|i| &record.stages[i].data);
        let (measured, image) = measure(&ctx, j, &geometry, prev, &stage.data, &eps)?;
        images.push(image);
        if measured != stage.measured || stage.epsilon != eps[j] || stage.j != j {
            mismatched.push(j);
        }
    }
    let summary = summarize(&ctx, &record.stages, &images)?;
    let summary_identical = summary == record.summary;
    let hash_matches = config_hash(config) == record.config_hash;
    Ok(RecomputeReport {
        identical: mismatched.is_empty() && summary_identical && hash_matches,
        mismatched_stages: mismatched,
        summary_identical,
        hash_matches,
    })
}

/// Write `stage_<j>.ply` for `j ≥ 1`, `ledger.json` and `metrics.csv`.
pub fn write_artifacts(run: &Run, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    let record = &run.record;
    for (stage, domain) in record.stages.iter().zip(&run.domains).skip(1) {
        let pos = stage.data.positions(&domain.mesh.vertices);
        let phi: Vec<f64> = pos.iter().map(|p| record.config.phi.eval(*p)).collect();
        let mesh = SurfaceMesh::from_positions(&domain.mesh, &pos).with_scalar("phi", phi);
        let path = dir.join(format!("stage_{}.ply", stage.j));
        write_ply(&mesh, PlyFormat::Ascii, std::io::BufWriter::new(std::fs::File::create(&path)?))?;
        paths.push(path);
    }
    let path = dir.join("ledger.json");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
    serde_json::to_writer_pretty(&mut w, record)?;
    w.flush()?;
    paths.push(path);

    let path = dir.join("metrics.csv");
    let rows: Vec<&StageRecord> = record.stages.iter().skip(1).collect();
    let col = |f: &dyn Fn(&StageRecord) -> f64| rows.iter().map(|s| f(s)).collect::<Vec<f64>>();
    let cert = |s: &StageRecord, k: usize| -> f64 {
        s.measured
            .certificates
            .as_ref()
            .map_or(f64::NAN, |c| c.all()[k].1.margin.unwrap_or(f64::NAN))
    };
    let columns = [
        col(&|s| s.j as f64),
        col(&|s| s.epsilon.to_f64()),
        col(&|s| s.push.as_ref().map_or(f64::NAN, |p| p.scale)),
        col(&|s| cert(s, 1)),
        col(&|s| cert(s, 2)),
        col(&|s| cert(s, 3)),
        col(&|s| cert(s, 4)),
        col(&|s| s.measured.band_range[0]),
        col(&|s| s.measured.band_range[1]),
    ];
    let refs: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
    write_columns_csv(
        &["j", "epsilon", "push_scale", "b_margin", "c_margin", "d_margin", "e_margin", "band_min", "band_max"],
        &refs,
        std::io::BufWriter::new(std::fs::File::create(&path)?),
    )?;
    paths.push(path);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(stages: usize) -> RunConfig {
        RunConfig {
            mesh_h: 0.08,
            depth: 6,
            voxels: 24,
            limit_directions: 64,
            engine: EngineSpec {
                boundary_samples: 32,
                max_evaluations: 60,
                sweeps: 1,
                ..EngineSpec::default()
            },
            ..RunConfig::ball(stages)
        }
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut c = small(1);
        c.gamma = 1.5;
        assert!(c.validate().is_err());
        let mut c = small(1);
        c.values = vec![2.0, 1.0];
        assert!(c.validate().is_err());
        let mut c = small(1);
        c.hit_set = vec![[1.5, 0.0, 0.0]];
        assert!(c.validate().is_err(), "on the level set r_1 = 2.25");
        let mut c = small(1);
        c.depth = 1;
        assert!(c.validate().is_err());
        assert!(small(2).validate().is_ok());
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash(&small(1)), config_hash(&small(1)));
        assert_ne!(config_hash(&small(1)), config_hash(&small(2)));
    }

    #[test]
    fn zero_stages_records_only_k0() {
        let run = run_construction(&small(0)).unwrap();
        assert_eq!(run.record.stages.len(), 1);
        assert!(run.record.stages[0].measured.certificates.is_none());
        assert!(!run.record.summary.limit_set.sufficient);
        assert!(!run.record.summary.cauchy.sufficient);
    }

    #[test]
    fn one_stage_is_structural_and_recomputable() {
        let run = run_construction(&small(1)).unwrap();
        let s = &run.record.stages[1];
        let c = s.measured.certificates.as_ref().unwrap();
        assert!(c.a.pass && c.g.pass && c.b.pass, "{c:?}");
        assert_eq!(s.measured.mesh.holes, 4);
        let json = serde_json::to_string(&run.record).unwrap();
        let back: RunRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, run.record);
        assert!(recompute(&back).unwrap().identical);
    }
}
