//! Stand-alone checks used by the stage certificates.

use serde::{Deserialize, Serialize};

use super::field::RationalData;
use super::PipelineError;
use crate::convexity::{Grid3, Point3, VoxelComponent};
use crate::weierstrass::ImmersionField;
use crate::C64;

/// Nearest image sample to one target point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitResult {
    pub target: Point3,
    /// Nearest region vertex (`None` for an empty region).
    pub vertex: Option<usize>,
    pub distance: Option<f64>,
    pub pass: bool,
}

/// For each target, the nearest image of a region vertex and whether it is
/// within `tol`.
pub fn hitting_check(
    u: &ImmersionField,
    targets: &[Point3],
    region: &[usize],
    tol: f64,
) -> Result<Vec<HitResult>, PipelineError> {
    if !(tol > 0.0) {
        return Err(PipelineError::InvalidConfig(format!("hit tolerance {tol} must be positive")));
    }
    Ok(targets
        .iter()
        .map(|&a| {
            let best = region
                .iter()
                .map(|&v| (dist3(u.position(v), a), v))
                .min_by(|x, y| x.0.total_cmp(&y.0));
            HitResult {
                target: a,
                vertex: best.map(|b| b.1),
                distance: best.map(|b| b.0),
                pass: best.is_some_and(|b| b.0 < tol),
            }
        })
        .collect())
}

/// Outcome of the properness check against a voxel set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProperReport {
    pub pass: bool,
    /// Samples whose nearest lattice point is in the set.
    pub inside: usize,
    /// Smallest distance from a sample outside the set to a voxel of the set,
    /// capped at the search radius.
    pub min_clearance: f64,
    pub clearance_capped: bool,
}

/// Search radius of the clearance scan, in lattice steps.
const CLEARANCE_STEPS: i64 = 6;

/// No sample may fall in the voxel set; reports the smallest clearance.
pub fn properness_check(points: &[Point3], component: &VoxelComponent, grid: &Grid3) -> ProperReport {
    let mut mask = vec![false; grid.len()];
    for &v in &component.voxels {
        mask[v] = true;
    }
    let sp = grid.spacing();
    let cap = CLEARANCE_STEPS as f64 * sp.iter().copied().fold(f64::INFINITY, f64::min);
    let mut inside = 0;
    let mut best = cap;
    let mut capped = true;
    for &x in points {
        if grid.nearest(x).is_some_and(|i| mask[i]) {
            inside += 1;
            continue;
        }
        let c: [i64; 3] = [0, 1, 2].map(|k| ((x[k] - grid.lo[k]) / sp[k]).round() as i64);
        for di in -CLEARANCE_STEPS..=CLEARANCE_STEPS {
            for dj in -CLEARANCE_STEPS..=CLEARANCE_STEPS {
                for dk in -CLEARANCE_STEPS..=CLEARANCE_STEPS {
                    let ijk = [c[0] + di, c[1] + dj, c[2] + dk];
                    if (0..3).any(|k| ijk[k] < 0 || ijk[k] >= grid.dims[k] as i64) {
                        continue;
                    }
                    let idx = grid.index(ijk[0] as usize, ijk[1] as usize, ijk[2] as usize);
                    if mask[idx] {
                        let d = dist3(grid.point(idx), x);
                        if d < best {
                            best = d;
                            capped = false;
                        }
                    }
                }
            }
        }
    }
    ProperReport {
        pass: inside == 0,
        inside,
        min_clearance: best,
        clearance_capped: capped,
    }
}

/// Coverage of a sphere by late-stage images.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSetReport {
    pub sufficient: bool,
    pub stages_used: Vec<usize>,
    pub directions: usize,
    /// Largest distance from a sphere sample to the nearest image point.
    pub max_gap: f64,
    pub mean_gap: f64,
}

/// Fibonacci points on the sphere of the given centre and radius.
pub fn sphere_samples(center: Point3, radius: f64, n: usize) -> Vec<Point3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * k as f64;
            [
                center[0] + radius * r * t.cos(),
                center[1] + radius * r * t.sin(),
                center[2] + radius * z,
            ]
        })
        .collect()
}

/// Distance from `samples` of the boundary sphere to the union of the images
/// of the last two stages. Fewer than two stages give an insufficient report.
pub fn limit_set_report(stage_images: &[Vec<Point3>], samples: &[Point3]) -> LimitSetReport {
    let n = stage_images.len();
    let used: Vec<usize> = (n.saturating_sub(2)..n).collect();
    if n < 2 {
        return LimitSetReport {
            sufficient: false,
            stages_used: used,
            directions: samples.len(),
            max_gap: 0.0,
            mean_gap: 0.0,
        };
    }
    let gaps: Vec<f64> = samples
        .iter()
        .map(|&s| {
            used.iter()
                .flat_map(|&j| stage_images[j].iter())
                .map(|&p| dist3(p, s))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    LimitSetReport {
        sufficient: true,
        stages_used: used,
        directions: samples.len(),
        max_gap: gaps.iter().copied().fold(0.0, f64::max),
        mean_gap: gaps.iter().sum::<f64>() / gaps.len().max(1) as f64,
    }
}

/// Sup-differences of successive stages on `K_0` and their ratios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyReport {
    pub sufficient: bool,
    /// `d_j = sup_{K_0} |u_j − u_{j−1}|` for `j = 1..`.
    pub sup_differences: Vec<f64>,
    /// `d_j / d_{j−1}` for `j = 2..` (0 when both vanish).
    pub ratios: Vec<f64>,
    pub slack: f64,
    /// Stages `j` whose ratio exceeds `½ + slack`.
    pub flagged: Vec<usize>,
    pub total: f64,
}

/// Cauchy diagnostic from the stage data evaluated at points of `K_0`.
pub fn cauchy_diagnostic(data: &[RationalData], k0_points: &[C64], slack: f64) -> CauchyReport {
    let images: Vec<Vec<Point3>> = data.iter().map(|d| d.positions(k0_points)).collect();
    cauchy_from_images(&images, slack)
}

/// [`cauchy_diagnostic`] on precomputed images of the same points.
pub fn cauchy_from_images(images: &[Vec<Point3>], slack: f64) -> CauchyReport {
    let sup: Vec<f64> = images
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| dist3(*a, *b)).fold(0.0, f64::max))
        .collect();
    let ratios: Vec<f64> = sup
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else if w[1] > 0.0 { f64::MAX } else { 0.0 })
        .collect();
    let flagged = ratios
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > 0.5 + slack)
        .map(|(i, _)| i + 2)
        .collect();
    CauchyReport {
        sufficient: images.len() >= 3,
        total: sup.iter().sum(),
        sup_differences: sup,
        ratios,
        slack,
        flagged,
    }
}

pub(crate) fn dist3(a: Point3, b: Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexgrid::{build_domain, DomainSpec};
    use crate::convexity::{norm_squared, sublevel_components};
    use std::sync::Arc;

    fn annulus_field(shift_origin: bool) -> ImmersionField {
        let domain = Arc::new(build_domain(&DomainSpec::annulus(1.2, 1.8, 0.2)).unwrap());
        let mut pos: Vec<Point3> = domain.mesh.vertices.iter().map(|z| [z.re, z.im, 0.0]).collect();
        if shift_origin {
            pos[0] = [0.0, 0.0, 0.0];
        }
        ImmersionField::from_positions(domain, &pos, 0)
    }

    fn unit_ball() -> (VoxelComponent, Grid3) {
        let grid = Grid3::cube(2.5, 41);
        let comps = sublevel_components(&norm_squared(2.5), 1.0, &grid).unwrap();
        (comps[0].clone(), grid)
    }

    #[test]
    fn hit_exact_vertex() {
        let u = annulus_field(false);
        let region: Vec<usize> = (0..u.num_vertices()).collect();
        let r = hitting_check(&u, &[u.position(7)], &region, 1e-9).unwrap();
        assert_eq!(r[0].distance, Some(0.0));
        assert!(r[0].pass);
    }

    #[test]
    fn far_target_misses() {
        let u = annulus_field(false);
        let region: Vec<usize> = (0..u.num_vertices()).collect();
        let r = hitting_check(&u, &[[0.0, 0.0, 1.0]], &region, 0.1).unwrap();
        assert!(r[0].distance.unwrap() >= 1.0 - 1e-12);
        assert!(!r[0].pass);
        assert!(hitting_check(&u, &[], &region, 0.0).is_err());
    }

    #[test]
    fn shell_annulus_is_proper() {
        let (ball, grid) = unit_ball();
        let u = annulus_field(false);
        let rep = properness_check(&u.positions(), &ball, &grid);
        assert!(rep.pass, "{rep:?}");
        assert!(rep.min_clearance > 0.0);
        let bad = annulus_field(true);
        let rep = properness_check(&bad.positions(), &ball, &grid);
        assert!(!rep.pass);
        assert_eq!(rep.inside, 1);
    }

    #[test]
    fn half_ball_images_leave_a_gap() {
        let r = 2.0;
        let dirs = sphere_samples([0.0; 3], r, 200);
        let n = 20;
        let step = r / n as f64;
        let mut half = Vec::new();
        for i in -n..=n {
            for j in -n..=n {
                for k in 0..=n {
                    let p = [i as f64 * step, j as f64 * step, k as f64 * step];
                    if dist3(p, [0.0; 3]) <= r {
                        half.push(p);
                    }
                }
            }
        }
        let rep = limit_set_report(&[half.clone(), half], &dirs);
        assert!(rep.sufficient);
        assert!((rep.max_gap - r).abs() < 0.05 * r, "{}", rep.max_gap);
        let single = limit_set_report(&[dirs.clone()], &dirs);
        assert!(!single.sufficient);
    }

    #[test]
    fn stalled_and_injected_sequences() {
        let p = |x: f64| vec![[x, 0.0, 0.0], [0.0, x, 0.0]];
        let stalled = cauchy_from_images(&[p(0.0), p(1.0), p(1.0), p(1.0)], 0.05);
        assert!(stalled.flagged.is_empty());
        assert_eq!(stalled.ratios, vec![0.0, 0.0]);
        let halving = cauchy_from_images(&[p(0.0), p(1.0), p(1.4), p(1.6)], 0.05);
        assert!(halving.flagged.is_empty());
        let injected = cauchy_from_images(&[p(0.0), p(1.0), p(1.4), p(1.9)], 0.05);
        assert_eq!(injected.flagged, vec![3]);
    }
}
