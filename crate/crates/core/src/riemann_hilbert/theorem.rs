use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RhError;
use crate::complexgrid::{complex_derivative, path_integral, ComplexField, PathInDomain};
use crate::convexity::ScalarField3;
use crate::metric::{build_metric_graph, intrinsic_distance, GraphOptions};
use crate::weierstrass::ImmersionField;
use crate::C64;

/// One checked inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bullet {
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Bullet {
    /// `measured < bound`.
    pub fn below(measured: f64, bound: f64) -> Self {
        Self {
            measured,
            bound,
            pass: measured < bound,
        }
    }

    /// `measured > bound`.
    pub fn above(measured: f64, bound: f64) -> Self {
        Self {
            measured,
            bound,
            pass: measured > bound,
        }
    }

    /// `measured ≤ bound`.
    pub fn at_most(measured: f64, bound: f64) -> Self {
        Self {
            measured,
            bound,
            pass: measured <= bound,
        }
    }
}

/// `χ(z, ξ) = u(z) + α(z, r(z) ξ)` on boundary vertices.
pub struct ChiData<'a> {
    /// `r` at a boundary vertex, in `[0, 1]`.
    pub r: &'a (dyn Fn(usize) -> f64 + Sync),
    /// `α(z, ξ)` at a boundary vertex; `α(z, 0) = 0`.
    pub alpha: &'a (dyn Fn(usize, C64) -> [f64; 3] + Sync),
}

pub struct TheoremRhInput<'a> {
    pub u: &'a ImmersionField,
    pub u_tilde: &'a ImmersionField,
    pub chi: ChiData<'a>,
    /// Vertices of the neighbourhood `Ω` of `supp r`.
    pub omega: &'a [usize],
    /// Marked interior vertices.
    pub lambda: &'a [usize],
    /// Jet order `d`.
    pub order: usize,
    /// One loop per hole.
    pub flux_loops: &'a [PathInDomain],
    pub epsilon: f64,
    pub jet_tol: f64,
    pub flux_tol: f64,
    pub fiber_samples: usize,
    pub fiber_radii: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremRhCertificate {
    /// `|ũ − u|` off `Ω`.
    pub closeness: Bullet,
    /// `dist(ũ(z), χ(z, b𝔻))` on the boundary.
    pub boundary_proximity: Bullet,
    /// `dist(ũ(z), χ(ρ(z), 𝔻̄))` on `Ω`.
    pub collar_proximity: Bullet,
    /// Largest scaled Taylor coefficient of order ≤ d of `ũ − u` at `Λ`.
    pub jet_agreement: Bullet,
    pub flux: Vec<Bullet>,
    pub retraction: String,
    pub order: usize,
}

impl TheoremRhCertificate {
    pub fn passed(&self) -> bool {
        self.closeness.pass
            && self.boundary_proximity.pass
            && self.collar_proximity.pass
            && self.jet_agreement.pass
            && self.flux.iter().all(|b| b.pass)
    }
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn same_mesh(a: &ImmersionField, b: &ImmersionField) -> Result<(), RhError> {
    if Arc::ptr_eq(&a.domain, &b.domain)
        || (a.domain.mesh.vertices == b.domain.mesh.vertices && a.domain.mesh.triangles == b.domain.mesh.triangles)
    {
        Ok(())
    } else {
        Err(RhError::MeshMismatch)
    }
}

fn check_vertices(vs: &[usize], n: usize) -> Result<(), RhError> {
    match vs.iter().find(|&&v| v >= n) {
        Some(&v) => Err(RhError::BadVertex(v)),
        None => Ok(()),
    }
}

/// `Im ∮ 2∂u` with per-triangle derivatives of the piecewise-linear immersion.
pub(crate) fn sampled_flux(u: &ImmersionField, path: &PathInDomain) -> Result<[f64; 3], RhError> {
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let field: Vec<C64> = u.u[k].iter().map(|&x| C64::new(x, 0.0)).collect();
        let phi: Vec<C64> = complex_derivative(&field, &u.domain)?.into_iter().map(|d| 2.0 * d).collect();
        *o = path_integral(ComplexField::Triangle(&phi), path, &u.domain)?.im;
    }
    Ok(out)
}

/// Vertices reached by growing rings around `v` until at least `want` are found.
fn neighbourhood(adj: &[Vec<usize>], v: usize, want: usize) -> Vec<usize> {
    let mut set: BTreeSet<usize> = BTreeSet::from([v]);
    let mut frontier = vec![v];
    while set.len() < want && !frontier.is_empty() {
        let mut next = Vec::new();
        for &w in &frontier {
            for &x in &adj[w] {
                if set.insert(x) {
                    next.push(x);
                }
            }
        }
        frontier = next;
    }
    set.into_iter().collect()
}

/// Fit `ũ − u` near `v` by a real polynomial of degree `d + 1` and return the
/// largest `|c_α| R^{|α|}` over `|α| ≤ d`, with `R` the fit radius.
fn jet_defect(u: &ImmersionField, ut: &ImmersionField, adj: &[Vec<usize>], v: usize, d: usize) -> f64 {
    let deg = d + 1;
    let monos: Vec<(usize, usize)> = (0..=deg).flat_map(|t| (0..=t).map(move |a| (t - a, a))).collect();
    let mesh = &u.domain.mesh;
    let nb = neighbourhood(adj, v, 3 * monos.len());
    let p = mesh.vertices[v];
    let radius = nb.iter().map(|&w| (mesh.vertices[w] - p).norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(nb.len(), monos.len(), |i, j| {
        let q = (mesh.vertices[nb[i]] - p) / radius;
        q.re.powi(monos[j].0 as i32) * q.im.powi(monos[j].1 as i32)
    });
    let svd = a.svd(true, true);
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        let b = DVector::from_iterator(nb.len(), nb.iter().map(|&w| ut.u[k][w] - u.u[k][w]));
        let c = svd.solve(&b, 1e-12).expect("svd with vectors");
        for (j, &(x, y)) in monos.iter().enumerate() {
            if x + y <= d {
                worst = worst.max(c[j].abs());
            }
        }
    }
    worst
}

/// Check the five conclusions of the Riemann–Hilbert theorem for a given pair
/// `u, ũ`. The retraction `ρ` maps a vertex of `Ω` to its nearest boundary
/// vertex.
pub fn verify_theorem_rh(input: &TheoremRhInput<'_>) -> Result<TheoremRhCertificate, RhError> {
    let (u, ut) = (input.u, input.u_tilde);
    same_mesh(u, ut)?;
    let n = u.num_vertices();
    check_vertices(input.omega, n)?;
    check_vertices(input.lambda, n)?;
    let domain = &u.domain;
    let holes = domain.num_boundary_components().saturating_sub(1);
    if input.flux_loops.len() < holes {
        return Err(RhError::MissingFluxLoop {
            needed: holes,
            got: input.flux_loops.len(),
        });
    }
    let in_omega: Vec<bool> = {
        let mut m = vec![false; n];
        for &v in input.omega {
            m[v] = true;
        }
        m
    };
    let closeness = (0..n)
        .filter(|&v| !in_omega[v])
        .map(|v| dist3(ut.position(v), u.position(v)))
        .fold(0.0, f64::max);

    let boundary = domain.mesh.boundary_loops.concat();
    let nf = input.fiber_samples.max(8);
    let nr = input.fiber_radii.max(2);
    let circle = |z: usize, s: f64| -> Vec<[f64; 3]> {
        let r = (input.chi.r)(z);
        let base = u.position(z);
        (0..nf)
            .map(|m| {
                let xi = C64::from_polar(r * s, std::f64::consts::TAU * m as f64 / nf as f64);
                let a = (input.chi.alpha)(z, xi);
                [base[0] + a[0], base[1] + a[1], base[2] + a[2]]
            })
            .collect()
    };
    let set_dist = |p: [f64; 3], set: &[[f64; 3]]| set.iter().map(|&q| dist3(p, q)).fold(f64::INFINITY, f64::min);
    let boundary_prox = boundary
        .par_iter()
        .map(|&z| set_dist(ut.position(z), &circle(z, 1.0)))
        .reduce(|| 0.0, f64::max);

    let collar = input
        .omega
        .par_iter()
        .map(|&v| {
            let p = domain.mesh.vertices[v];
            let rho = *boundary
                .iter()
                .min_by(|&&a, &&b| {
                    (domain.mesh.vertices[a] - p)
                        .norm()
                        .total_cmp(&(domain.mesh.vertices[b] - p).norm())
                })
                .expect("domain has a boundary");
            let mut disc = vec![u.position(rho)];
            for t in 1..nr {
                disc.extend(circle(rho, t as f64 / (nr - 1) as f64));
            }
            set_dist(ut.position(v), &disc)
        })
        .reduce(|| 0.0, f64::max);

    let adj = domain.mesh.neighbors();
    let jet = input
        .lambda
        .iter()
        .map(|&v| jet_defect(u, ut, &adj, v, input.order))
        .fold(0.0, f64::max);

    let mut flux = Vec::with_capacity(input.flux_loops.len());
    for path in input.flux_loops {
        let (a, b) = (sampled_flux(u, path)?, sampled_flux(ut, path)?);
        flux.push(Bullet::at_most(dist3(a, b), input.flux_tol));
    }
    Ok(TheoremRhCertificate {
        closeness: Bullet::below(closeness, input.epsilon),
        boundary_proximity: Bullet::below(boundary_prox, input.epsilon),
        collar_proximity: Bullet::below(collar, input.epsilon),
        jet_agreement: Bullet::at_most(jet, input.jet_tol),
        flux,
        retraction: "nearest_boundary_vertex".into(),
        order: input.order,
    })
}

pub struct LemmaInput<'a> {
    pub u: &'a ImmersionField,
    pub u_tilde: &'a ImmersionField,
    pub phi: &'a ScalarField3,
    pub a_prime: f64,
    pub b: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub mu: f64,
    /// Vertices of the compact set `K`.
    pub k_vertices: &'a [usize],
    pub lambda: &'a [usize],
    pub p0: usize,
    pub graph: GraphOptions,
    /// Allowed `|ũ − u|` at `Λ`.
    pub lambda_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCertificate {
    /// `min φ(ũ)` on the boundary against `a'`.
    pub boundary_above: Bullet,
    /// `max φ(ũ)` on the boundary against `b`.
    pub boundary_below: Bullet,
    /// `min (φ(ũ) − φ(u))` against `−δ`.
    pub no_drop: Bullet,
    pub closeness_on_k: Bullet,
    pub intrinsic_distance: Bullet,
    pub interpolation: Bullet,
}

impl LemmaCertificate {
    pub fn passed(&self) -> bool {
        [
            self.boundary_above,
            self.boundary_below,
            self.no_drop,
            self.closeness_on_k,
            self.intrinsic_distance,
            self.interpolation,
        ]
        .iter()
        .all(|b| b.pass)
    }
}

/// Measure the conclusions of the boundary-lifting lemma for `u, ũ`.
pub fn verify_lemma_conditions(input: &LemmaInput<'_>) -> Result<LemmaCertificate, RhError> {
    let (u, ut) = (input.u, input.u_tilde);
    same_mesh(u, ut)?;
    let n = u.num_vertices();
    check_vertices(input.k_vertices, n)?;
    check_vertices(input.lambda, n)?;
    check_vertices(&[input.p0], n)?;
    let phi = |x: [f64; 3]| -> Result<f64, RhError> {
        if (0..3).any(|a| !(x[a] >= input.phi.lo[a] && x[a] <= input.phi.hi[a])) {
            return Err(RhError::OutsideBox(x[0], x[1], x[2]));
        }
        Ok(input.phi.eval(x))
    };
    let phi_t: Vec<f64> = (0..n).map(|v| phi(ut.position(v))).collect::<Result<_, _>>()?;
    let phi_u: Vec<f64> = (0..n).map(|v| phi(u.position(v))).collect::<Result<_, _>>()?;
    let boundary = u.domain.mesh.boundary_loops.concat();
    let bmin = boundary.iter().map(|&v| phi_t[v]).fold(f64::INFINITY, f64::min);
    let bmax = boundary.iter().map(|&v| phi_t[v]).fold(f64::NEG_INFINITY, f64::max);
    let drop = (0..n).map(|v| phi_t[v] - phi_u[v]).fold(f64::INFINITY, f64::min);
    let close = input
        .k_vertices
        .iter()
        .map(|&v| dist3(ut.position(v), u.position(v)))
        .fold(0.0, f64::max);
    let graph = build_metric_graph(ut, input.graph)?;
    let dist = intrinsic_distance(&graph, input.p0, &boundary)?;
    let interp = input
        .lambda
        .iter()
        .map(|&v| dist3(ut.position(v), u.position(v)))
        .fold(0.0, f64::max);
    Ok(LemmaCertificate {
        boundary_above: Bullet::above(bmin, input.a_prime),
        boundary_below: Bullet::below(bmax, input.b),
        no_drop: Bullet::above(drop, -input.delta),
        closeness_on_k: Bullet::below(close, input.epsilon),
        intrinsic_distance: Bullet::above(dist, input.mu),
        interpolation: Bullet::at_most(interp, input.lambda_tol),
    })
}
