//! Recursive radius/intrinsic-radius/precision schedules and per-step
//! certificates for sequences of minimal discs.

use serde::{Deserialize, Serialize};

use crate::metric::{build_metric_graph, intrinsic_distance, GraphOptions, MetricError, MetricMode};
use crate::weierstrass::ImmersionField;
use crate::C64;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NadirError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("schedule length must be at least 1")]
    EmptySchedule,
    #[error("step {j} outside schedule of length {len}")]
    StepOutOfRange { j: usize, len: usize },
    #[error("immersions live on different meshes")]
    MeshMismatch,
    #[error("origin is not inside the mesh")]
    OriginOutside,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Positive number `mantissa · 2^exp2` with `mantissa ∈ [1, 2)`, so long
/// halving chains never underflow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eps {
    pub mantissa: f64,
    pub exp2: i64,
}

impl Eps {
    pub fn from_f64(x: f64) -> Option<Self> {
        if !(x > 0.0) || !x.is_finite() {
            return None;
        }
        let mut e = x.log2().floor() as i64;
        let mut m = x / 2f64.powi(e as i32);
        // guard the floor against rounding at exact powers of two
        if m >= 2.0 {
            m /= 2.0;
            e += 1;
        } else if m < 1.0 {
            m *= 2.0;
            e -= 1;
        }
        Some(Self { mantissa: m, exp2: e })
    }

    /// Value as `f64` (0 once below the subnormal range).
    pub fn to_f64(self) -> f64 {
        if self.exp2 < -1100 {
            return 0.0;
        }
        let half = (self.exp2 / 2) as i32;
        self.mantissa * 2f64.powi(half) * 2f64.powi(self.exp2 as i32 - half)
    }

    /// The largest representable value strictly below `self / 2`.
    pub fn next_strict_half(self) -> Self {
        let m = self.mantissa.next_down();
        if m < 1.0 {
            Self {
                mantissa: 2.0 * m,
                exp2: self.exp2 - 2,
            }
        } else {
            Self {
                mantissa: m,
                exp2: self.exp2 - 1,
            }
        }
    }

    /// `self < other / 2`, exactly.
    pub fn lt_half_of(self, other: Self) -> bool {
        let e = other.exp2 - 1;
        self.exp2 < e || (self.exp2 == e && self.mantissa < other.mantissa)
    }

    pub fn log2(self) -> f64 {
        self.exp2 as f64 + self.mantissa.log2()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub r: Vec<f64>,
    pub rho: Vec<f64>,
    pub eps: Vec<Eps>,
    #[serde(rename = "J")]
    pub j_len: usize,
    /// `sqrt(r₁² + Σ_{j≥2} 1/j²) = sqrt(r₁² + π²/6 − 1)`.
    pub r_limit: f64,
}

/// Build the schedule `r_j = sqrt(r_{j−1}² + 1/j²)`, `ρ_j = ρ_{j−1} + 1/j`,
/// `ε_j` the largest value below `ε_{j−1}/2`.
pub fn make_schedule(r1: f64, rho1: f64, eps1: f64, j_len: usize) -> Result<Schedule, NadirError> {
    if !(r1 > 0.0) || !r1.is_finite() {
        return Err(NadirError::NonPositive("r1"));
    }
    if !(rho1 > 0.0) || !rho1.is_finite() {
        return Err(NadirError::NonPositive("rho1"));
    }
    let e1 = Eps::from_f64(eps1).ok_or(NadirError::NonPositive("eps1"))?;
    if j_len == 0 {
        return Err(NadirError::EmptySchedule);
    }
    let mut r = Vec::with_capacity(j_len);
    let mut rho = Vec::with_capacity(j_len);
    let mut eps = Vec::with_capacity(j_len);
    r.push(r1);
    rho.push(rho1);
    eps.push(e1);
    for j in 2..=j_len {
        let jf = j as f64;
        let rp = r[j - 2];
        r.push((rp * rp + 1.0 / (jf * jf)).sqrt());
        rho.push(rho[j - 2] + 1.0 / jf);
        eps.push(eps[j - 2].next_strict_half());
    }
    let r_limit = (r1 * r1 + std::f64::consts::PI.powi(2) / 6.0 - 1.0).sqrt();
    Ok(Schedule {
        r,
        rho,
        eps,
        j_len,
        r_limit,
    })
}

impl Schedule {
    /// Recheck every recurrence exactly as it was computed.
    pub fn recurrences_hold(&self) -> bool {
        (1..self.j_len).all(|i| {
            let jf = (i + 1) as f64;
            self.r[i] == (self.r[i - 1] * self.r[i - 1] + 1.0 / (jf * jf)).sqrt()
                && self.rho[i] == self.rho[i - 1] + 1.0 / jf
                && self.eps[i].lt_half_of(self.eps[i - 1])
                && self.r[i] > self.r[i - 1]
                && self.r[i] <= self.r_limit
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepConditions {
    pub base_point_zero: bool,
    pub closeness_on_shrunk_disc: bool,
    pub range_in_ball: bool,
    pub intrinsic_radius_exceeds: bool,
}

impl StepConditions {
    pub fn all(&self) -> bool {
        self.base_point_zero && self.closeness_on_shrunk_disc && self.range_in_ball && self.intrinsic_radius_exceeds
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMeasured {
    pub max_center_offset: f64,
    pub max_closeness_violation: f64,
    pub max_norm: f64,
    pub measured_intrinsic_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTolerances {
    pub center_tol: f64,
    pub eps_j: f64,
    pub shrunk_radius: f64,
    pub r_j: f64,
    pub rho_j: f64,
    pub graph: GraphOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepCertificate {
    pub j: usize,
    pub conditions: StepConditions,
    pub measured: StepMeasured,
    pub tolerances: StepTolerances,
}

/// Tolerance for `u_j(0) = 0`.
pub const CENTER_TOL: f64 = 1e-9;
/// Relative slack on the ball radius for points sampled on its sphere.
pub const BALL_RTOL: f64 = 1e-12;

/// Evaluate the per-step conditions for `u_next` against `u_prev` at step
/// `j` (1-based) of the schedule.
pub fn verify_step(
    u_prev: &ImmersionField,
    u_next: &ImmersionField,
    j: usize,
    schedule: &Schedule,
) -> Result<StepCertificate, NadirError> {
    if j == 0 || j > schedule.j_len {
        return Err(NadirError::StepOutOfRange {
            j,
            len: schedule.j_len,
        });
    }
    let same = std::sync::Arc::ptr_eq(&u_prev.domain, &u_next.domain) || u_prev.domain == u_next.domain;
    if !same {
        return Err(NadirError::MeshMismatch);
    }
    let (r_j, rho_j) = (schedule.r[j - 1], schedule.rho[j - 1]);
    let eps_j = schedule.eps[j - 1].to_f64();
    let domain = &u_next.domain;
    let mesh = &domain.mesh;

    let origin = C64::new(0.0, 0.0);
    let (t, l) = domain.locate(origin).ok_or(NadirError::OriginOutside)?;
    let tri = mesh.triangles[t];
    let at0: [f64; 3] = std::array::from_fn(|k| (0..3).map(|i| l[i] * u_next.u[k][tri[i]]).sum());
    let max_center_offset = at0.iter().map(|x| x * x).sum::<f64>().sqrt();

    let shrunk_radius = 1.0 - eps_j;
    let max_closeness_violation = (0..mesh.num_vertices())
        .filter(|&v| mesh.vertices[v].norm() <= shrunk_radius)
        .map(|v| {
            let (a, b) = (u_next.position(v), u_prev.position(v));
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
        })
        .fold(0.0, f64::max);

    let max_norm = (0..mesh.num_vertices())
        .map(|v| {
            let p = u_next.position(v);
            (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
        })
        .fold(0.0, f64::max);

    let graph = GraphOptions::new(MetricMode::EmbeddedEdges);
    let g = build_metric_graph(u_next, graph)?;
    let p0 = mesh.nearest_vertex(origin);
    let measured_intrinsic_radius = intrinsic_distance(&g, p0, &g.boundary_all())?;

    Ok(StepCertificate {
        j,
        conditions: StepConditions {
            base_point_zero: max_center_offset <= CENTER_TOL,
            closeness_on_shrunk_disc: max_closeness_violation < eps_j,
            range_in_ball: max_norm <= r_j * (1.0 + BALL_RTOL),
            intrinsic_radius_exceeds: measured_intrinsic_radius > rho_j,
        },
        measured: StepMeasured {
            max_center_offset,
            max_closeness_violation,
            max_norm,
            measured_intrinsic_radius,
        },
        tolerances: StepTolerances {
            center_tol: CENTER_TOL,
            eps_j,
            shrunk_radius,
            r_j,
            rho_j,
            graph,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PythagorasReport {
    pub pass: bool,
    pub max_norm: f64,
    pub bound: f64,
}

/// `max |x| ≤ sqrt(r² + s²) + tol`.
pub fn pythagoras_check(points: &[[f64; 3]], r: f64, s: f64, tol: f64) -> PythagorasReport {
    let max_norm = points
        .iter()
        .map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt())
        .fold(0.0, f64::max);
    let bound = r.hypot(s);
    PythagorasReport {
        pass: max_norm <= bound + tol,
        max_norm,
        bound,
    }
}
