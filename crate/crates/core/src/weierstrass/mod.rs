//! Weierstrass representation of conformal minimal surfaces.
//!
//! Convention: `Φ = (½f(1−g²), (i/2)f(1+g²), fg)` and `u = Re ∫ Φ dz`, so
//! `Φ = 2∂u` with `∂ = ½(∂x − i∂y)`. The metric is `λ|dz|²` with
//! `λ = ½|Φ|² = ¼|f|²(1+|g|²)²`, and the flux along a loop is `Im ∮ Φ`.

mod holo;

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::complexgrid::{
    max_harmonicity_defect, path_integral, ComplexField, GridError, PathInDomain, PlanarDomain,
};
use crate::C64;

pub use holo::Holo;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum WeierError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("immersion floor violated at vertex {vertex}: |Φ|² = {value:e}")]
    ImmersionFloor { vertex: usize, value: f64 },
    #[error("non-finite Weierstrass data at vertex {0}")]
    NonFinite(usize),
    #[error("conformality residual {residual:e} exceeds {tol:e}")]
    Conformality { residual: f64, tol: f64 },
    #[error("real period {period:?} on hole loop {loop_index} exceeds {tol:e}")]
    Period {
        loop_index: usize,
        period: [f64; 3],
        tol: f64,
    },
    #[error("flux needs a closed loop")]
    OpenPath,
    #[error("deformation factor vanishes at vertex {0}")]
    VanishingFactor(usize),
    #[error("base vertex {0} out of range")]
    BadBaseVertex(usize),
    #[error("field size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
}

/// Default floor for `|φ₁|²+|φ₂|²+|φ₃|²`.
pub const IMMERSION_FLOOR: f64 = 1e-14;
/// Default relative tolerance for `φ₁²+φ₂²+φ₃²`.
pub const CONFORMALITY_RTOL: f64 = 1e-9;
/// Default period tolerance per unit loop length.
pub const PERIOD_RTOL: f64 = 1e-6;

/// The three Weierstrass components from `(f, g)` values at one point.
pub fn phi_from_fg(f: C64, g: C64) -> [C64; 3] {
    let g2 = g * g;
    [
        0.5 * f * (1.0 - g2),
        C64::new(0.0, 0.5) * f * (1.0 + g2),
        f * g,
    ]
}

/// Closed-form Weierstrass data: either `(f, g)` or the components directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeierSource {
    Fg { f: Holo, g: Holo },
    Phi { phi: [Holo; 3] },
}

impl WeierSource {
    pub fn phi(&self, z: C64) -> [C64; 3] {
        match self {
            WeierSource::Fg { f, g } => phi_from_fg(f.eval(z), g.eval(z)),
            WeierSource::Phi { phi } => [phi[0].eval(z), phi[1].eval(z), phi[2].eval(z)],
        }
    }
}

/// Weierstrass data `Φ` sampled at mesh vertices.
#[derive(Clone, Debug)]
pub struct SampledHolomorphicTriple {
    pub domain: Arc<PlanarDomain>,
    pub phi: [Vec<C64>; 3],
    pub source: Option<WeierSource>,
    pub conformality_rtol: f64,
    pub immersion_floor: f64,
}

impl SampledHolomorphicTriple {
    /// Triple from raw component samples, checked against the immersion floor.
    pub fn from_samples(domain: Arc<PlanarDomain>, phi: [Vec<C64>; 3]) -> Result<Self, WeierError> {
        let n = domain.mesh.num_vertices();
        for c in &phi {
            if c.len() != n {
                return Err(WeierError::SizeMismatch {
                    expected: n,
                    got: c.len(),
                });
            }
        }
        let t = Self {
            domain,
            phi,
            source: None,
            conformality_rtol: CONFORMALITY_RTOL,
            immersion_floor: IMMERSION_FLOOR,
        };
        t.check_floor()?;
        Ok(t)
    }

    /// Triple sampled from closed-form data, which is kept for quadrature.
    pub fn from_source(domain: Arc<PlanarDomain>, source: WeierSource) -> Result<Self, WeierError> {
        let mut phi = [Vec::new(), Vec::new(), Vec::new()];
        for &z in &domain.mesh.vertices {
            let p = source.phi(z);
            for k in 0..3 {
                phi[k].push(p[k]);
            }
        }
        let mut t = Self::from_samples(domain, phi)?;
        t.source = Some(source);
        Ok(t)
    }

    fn check_floor(&self) -> Result<(), WeierError> {
        for v in 0..self.phi[0].len() {
            let p = self.at(v);
            if p.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(WeierError::NonFinite(v));
            }
            let s: f64 = p.iter().map(|c| c.norm_sqr()).sum();
            if s <= self.immersion_floor {
                return Err(WeierError::ImmersionFloor { vertex: v, value: s });
            }
        }
        Ok(())
    }

    pub fn at(&self, v: usize) -> [C64; 3] {
        [self.phi[0][v], self.phi[1][v], self.phi[2][v]]
    }

    /// `Φ` at an arbitrary point: exact with a closed-form source, otherwise
    /// linearly interpolated.
    pub fn eval(&self, z: C64) -> Option<[C64; 3]> {
        if let Some(s) = &self.source {
            return Some(s.phi(z));
        }
        let (t, l) = self.domain.locate(z)?;
        let tri = self.domain.mesh.triangles[t];
        Some(std::array::from_fn(|k| {
            self.phi[k][tri[0]] * l[0] + self.phi[k][tri[1]] * l[1] + self.phi[k][tri[2]] * l[2]
        }))
    }

    /// `∫ Φ dz` along the straight segment between two vertices.
    fn edge_integral(&self, a: usize, b: usize) -> [C64; 3] {
        let (za, zb) = (self.domain.mesh.vertices[a], self.domain.mesh.vertices[b]);
        match &self.source {
            Some(s) => {
                let (mid, half) = (0.5 * (za + zb), 0.5 * (zb - za));
                let mut acc = [C64::new(0.0, 0.0); 3];
                for &(x, w) in &GAUSS5 {
                    let p = s.phi(mid + half * x);
                    for k in 0..3 {
                        acc[k] += p[k] * w;
                    }
                }
                acc.map(|c| c * half)
            }
            None => std::array::from_fn(|k| 0.5 * (zb - za) * (self.phi[k][a] + self.phi[k][b])),
        }
    }

    /// `∮ Φ dz` along a path, componentwise.
    pub fn contour_integral(&self, path: &PathInDomain) -> Result<[C64; 3], WeierError> {
        let mut out = [C64::new(0.0, 0.0); 3];
        for (k, o) in out.iter_mut().enumerate() {
            *o = match &self.source {
                Some(s) => {
                    let f = |z: C64| s.phi(z)[k];
                    path_integral(ComplexField::Analytic(&f), path, &self.domain)?
                }
                None => path_integral(ComplexField::Vertex(&self.phi[k]), path, &self.domain)?,
            };
        }
        Ok(out)
    }

    /// Metric density `½|Φ|²` per vertex.
    pub fn metric_density(&self) -> Vec<f64> {
        (0..self.phi[0].len())
            .map(|v| 0.5 * self.at(v).iter().map(|c| c.norm_sqr()).sum::<f64>())
            .collect()
    }
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

/// Build `Φ` from closed-form `(f, g)`.
pub fn triple_from_fg(f: &Holo, g: &Holo, domain: Arc<PlanarDomain>) -> Result<SampledHolomorphicTriple, WeierError> {
    SampledHolomorphicTriple::from_source(
        domain,
        WeierSource::Fg {
            f: f.clone(),
            g: g.clone(),
        },
    )
}

/// Build `Φ` from sampled `(f, g)` vertex values.
pub fn triple_from_fg_samples(
    f: &[C64],
    g: &[C64],
    domain: Arc<PlanarDomain>,
) -> Result<SampledHolomorphicTriple, WeierError> {
    let n = domain.mesh.num_vertices();
    if f.len() != n || g.len() != n {
        return Err(WeierError::SizeMismatch {
            expected: n,
            got: f.len().min(g.len()),
        });
    }
    let mut phi = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for (fv, gv) in f.iter().zip(g) {
        let p = phi_from_fg(*fv, *gv);
        for k in 0..3 {
            phi[k].push(p[k]);
        }
    }
    SampledHolomorphicTriple::from_samples(domain, phi)
}

/// Max over vertices of `|φ₁²+φ₂²+φ₃²|`.
pub fn conformality_residual(phi: &SampledHolomorphicTriple) -> f64 {
    (0..phi.phi[0].len())
        .map(|v| {
            let p = phi.at(v);
            (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).norm()
        })
        .fold(0.0, f64::max)
}

/// A conformal minimal immersion sampled at mesh vertices.
#[derive(Clone, Debug)]
pub struct ImmersionField {
    pub domain: Arc<PlanarDomain>,
    pub u: [Vec<f64>; 3],
    /// `λ` with `u*ds² = λ|dz|²`.
    pub metric_density: Vec<f64>,
    pub base_point: usize,
}

impl ImmersionField {
    /// Immersion from vertex positions, with `λ` estimated from area ratios of
    /// incident triangles.
    pub fn from_positions(domain: Arc<PlanarDomain>, positions: &[[f64; 3]], base_point: usize) -> Self {
        let mesh = &domain.mesh;
        let mut acc = vec![(0.0, 0.0); mesh.num_vertices()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let a2 = mesh.triangle_area(t);
            let [p, q, r] = tri.map(|i| positions[i]);
            let a3 = 0.5 * norm3(cross3(sub3(q, p), sub3(r, p)));
            for &i in tri {
                acc[i].0 += a3;
                acc[i].1 += a2;
            }
        }
        let metric_density = acc.iter().map(|(a3, a2)| a3 / a2).collect();
        Self {
            u: [0, 1, 2].map(|k| positions.iter().map(|p| p[k]).collect()),
            domain,
            metric_density,
            base_point,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.u[0].len()
    }

    pub fn position(&self, v: usize) -> [f64; 3] {
        [self.u[0][v], self.u[1][v], self.u[2][v]]
    }

    pub fn positions(&self) -> Vec<[f64; 3]> {
        (0..self.num_vertices()).map(|v| self.position(v)).collect()
    }

    /// Max harmonicity defect over the three components.
    pub fn harmonicity_residual(&self) -> f64 {
        self.u
            .iter()
            .map(|c| max_harmonicity_defect(c, &self.domain))
            .fold(0.0, f64::max)
    }

    /// Max over triangles of the largest angle change between the planar and
    /// immersed triangle, in radians.
    pub fn angle_distortion(&self) -> f64 {
        let mesh = &self.domain.mesh;
        mesh.triangles
            .iter()
            .map(|tri| {
                let mut worst: f64 = 0.0;
                for k in 0..3 {
                    let (o, i, j) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                    let (a, b) = (mesh.vertices[i] - mesh.vertices[o], mesh.vertices[j] - mesh.vertices[o]);
                    let ang2 = (a.conj() * b).arg().abs();
                    let (p, q) = (
                        sub3(self.position(i), self.position(o)),
                        sub3(self.position(j), self.position(o)),
                    );
                    let ang3 = norm3(cross3(p, q)).atan2(dot3(p, q));
                    worst = worst.max((ang2 - ang3).abs());
                }
                worst
            })
            .fold(0.0, f64::max)
    }

    /// Translate so the base point maps to the given value.
    pub fn pinned(mut self, base_value: [f64; 3]) -> Self {
        let p = self.position(self.base_point);
        for k in 0..3 {
            let d = base_value[k] - p[k];
            self.u[k].iter_mut().for_each(|x| *x += d);
        }
        self
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in out.u.iter_mut() {
            c.iter_mut().for_each(|x| *x *= s);
        }
        out.metric_density.iter_mut().for_each(|l| *l *= s * s);
        out
    }
}

/// Integrate `Φ` to `u = Re ∫ Φ` with `u(base_point) = base_value`.
///
/// Values spread from the base point along a breadth-first spanning tree of
/// mesh edges. Real periods over every hole loop are checked first against
/// `PERIOD_RTOL · loop length`.
pub fn integrate_triple(
    phi: &SampledHolomorphicTriple,
    base_point: usize,
    base_value: [f64; 3],
) -> Result<ImmersionField, WeierError> {
    let n = phi.domain.mesh.num_vertices();
    if base_point >= n {
        return Err(WeierError::BadBaseVertex(base_point));
    }
    let residual = conformality_residual(phi);
    let scale = (0..n)
        .map(|v| phi.at(v).iter().map(|c| c.norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max);
    let tol = phi.conformality_rtol * scale.max(1.0);
    if residual > tol {
        return Err(WeierError::Conformality { residual, tol });
    }
    for (loop_index, lp) in phi.domain.mesh.boundary_loops.iter().enumerate().skip(1) {
        let path = PathInDomain::vertex_loop(lp);
        let len = path.length(&phi.domain)?;
        let p = phi.contour_integral(&path)?;
        let period = p.map(|c| c.re);
        let tol = PERIOD_RTOL * len;
        if period.iter().any(|x| x.abs() > tol) {
            return Err(WeierError::Period {
                loop_index,
                period,
                tol,
            });
        }
    }

    let adj = phi.domain.mesh.neighbors();
    let mut u = [vec![f64::NAN; n], vec![f64::NAN; n], vec![f64::NAN; n]];
    let mut seen = vec![false; n];
    for k in 0..3 {
        u[k][base_point] = base_value[k];
    }
    seen[base_point] = true;
    let mut queue = VecDeque::from([base_point]);
    while let Some(a) = queue.pop_front() {
        for &b in &adj[a] {
            if !seen[b] {
                seen[b] = true;
                let d = phi.edge_integral(a, b);
                for k in 0..3 {
                    u[k][b] = u[k][a] + d[k].re;
                }
                queue.push_back(b);
            }
        }
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(GridError::Meshing(format!("vertex {v} unreachable from base point")).into());
    }
    Ok(ImmersionField {
        domain: phi.domain.clone(),
        u,
        metric_density: phi.metric_density(),
        base_point,
    })
}

/// Flux of the immersion along a loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxVector {
    #[serde(rename = "loop")]
    pub loop_path: PathInDomain,
    pub value: [f64; 3],
}

/// `Im ∮ Φ` along a closed loop.
pub fn flux(phi: &SampledHolomorphicTriple, loop_path: &PathInDomain) -> Result<FluxVector, WeierError> {
    if !loop_path.closed || loop_path.points.first() != loop_path.points.last() {
        return Err(WeierError::OpenPath);
    }
    let p = phi.contour_integral(loop_path)?;
    Ok(FluxVector {
        loop_path: loop_path.clone(),
        value: p.map(|c| c.im),
    })
}

/// One line of a flux report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxRecord {
    pub loop_id: String,
    pub value: [f64; 3],
    pub tol: f64,
}

/// López–Ros deformation `(f, g) ↦ (f h, g / h)`; `h` must not vanish on the
/// mesh vertices.
pub fn lopez_ros(f: &Holo, g: &Holo, h: &Holo, domain: &PlanarDomain) -> Result<(Holo, Holo), WeierError> {
    for (v, &z) in domain.mesh.vertices.iter().enumerate() {
        if h.eval(z).norm() == 0.0 {
            return Err(WeierError::VanishingFactor(v));
        }
    }
    Ok((Holo::mul(f.clone(), h.clone()), Holo::div(g.clone(), h.clone())))
}

/// López–Ros deformation on sampled values.
pub fn lopez_ros_samples(f: &[C64], g: &[C64], h: &[C64]) -> Result<(Vec<C64>, Vec<C64>), WeierError> {
    if f.len() != h.len() || g.len() != h.len() {
        return Err(WeierError::SizeMismatch {
            expected: h.len(),
            got: f.len().min(g.len()),
        });
    }
    if let Some(v) = h.iter().position(|x| x.norm() == 0.0) {
        return Err(WeierError::VanishingFactor(v));
    }
    Ok((
        f.iter().zip(h).map(|(a, b)| a * b).collect(),
        g.iter().zip(h).map(|(a, b)| a / b).collect(),
    ))
}

pub(crate) fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}
