//! Approximate Riemann–Hilbert problem on the closed unit disc for polynomial
//! fiber discs, and verifiers for the conditions of the minimal-surface
//! Riemann–Hilbert theorem and the boundary-lifting lemma.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexgrid::{ComplexPolynomial, GridError};
use crate::metric::MetricError;
use crate::C64;

mod theorem;

pub use theorem::{
    verify_lemma_conditions, verify_theorem_rh, Bullet, ChiData, LemmaCertificate, LemmaInput, TheoremRhCertificate,
    TheoremRhInput,
};

#[derive(Debug, thiserror::Error)]
pub enum RhError {
    #[error("radius must lie in (0, 1), got {0}")]
    InvalidRadius(f64),
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("verification grid too small: {0}")]
    GridTooSmall(String),
    #[error("no exponent up to {cap} passed the certificate")]
    NotSolved { cap: usize, best: Box<RhSolution> },
    #[error("immersions live on different meshes")]
    MeshMismatch,
    #[error("need {needed} flux loops, got {got}")]
    MissingFluxLoop { needed: usize, got: usize },
    #[error("vertex {0} out of range")]
    BadVertex(usize),
    #[error("immersed point ({0}, {1}, {2}) outside the exhaustion function's box")]
    OutsideBox(f64, f64, f64),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// `g(z, ξ) = f(z) + Σ_k a_k(z) ξ^k` for `z` on the unit circle, with
/// values in `ℂⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberDiscFamily {
    /// `f`, one polynomial per component.
    pub center: Vec<ComplexPolynomial>,
    /// `coefficients[k - 1][c]` is component `c` of `a_k`.
    pub coefficients: Vec<Vec<ComplexPolynomial>>,
}

impl FiberDiscFamily {
    pub fn new(center: Vec<ComplexPolynomial>, coefficients: Vec<Vec<ComplexPolynomial>>) -> Result<Self, RhError> {
        if center.is_empty() {
            return Err(RhError::DimensionMismatch("no components".into()));
        }
        if let Some(k) = coefficients.iter().position(|a| a.len() != center.len()) {
            return Err(RhError::DimensionMismatch(format!(
                "a_{} has {} components, f has {}",
                k + 1,
                coefficients[k].len(),
                center.len()
            )));
        }
        Ok(Self { center, coefficients })
    }

    /// Scalar family `g(z, ξ) = f(z) + a(z) ξ`.
    pub fn linear(f: ComplexPolynomial, a: ComplexPolynomial) -> Self {
        Self {
            center: vec![f],
            coefficients: vec![vec![a]],
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Fiber degree `K`.
    pub fn degree(&self) -> usize {
        self.coefficients.len()
    }

    /// `f` sampled at `nb` equally spaced boundary points.
    pub fn boundary_samples(&self, nb: usize) -> Vec<Vec<C64>> {
        let t = RootTable::new(nb);
        (0..nb).map(|j| self.center.iter().map(|p| p.eval(t.w[j])).collect()).collect()
    }

    /// `max_k max_{|z| = 1} |a_k(z)|` estimated on `nb` boundary points.
    pub fn max_coefficient(&self, nb: usize) -> f64 {
        let t = RootTable::new(nb);
        self.coefficients
            .iter()
            .flat_map(|a| a.iter())
            .map(|p| p.sup_on(&t.w))
            .fold(0.0, f64::max)
    }

    /// `F = f + Σ_k a_k z^{kN}` as explicit polynomials.
    pub fn ansatz_polynomials(&self, n: usize) -> Vec<ComplexPolynomial> {
        (0..self.dim())
            .map(|c| {
                let mut p = self.center[c].clone();
                for (k, a) in self.coefficients.iter().enumerate() {
                    p = p.add(&a[c].mul(&ComplexPolynomial::monomial(C64::new(1.0, 0.0), (k + 1) * n)));
                }
                p
            })
            .collect()
    }
}

/// Roots of unity `w[k] = e^{2πik/n}`; all boundary and fiber angles are
/// taken from one table so that `z^N` on the grid is itself a fiber sample.
#[derive(Clone, Debug)]
struct RootTable {
    w: Vec<C64>,
}

impl RootTable {
    fn new(n: usize) -> Self {
        Self {
            w: (0..n)
                .map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64))
                .collect(),
        }
    }

    fn len(&self) -> usize {
        self.w.len()
    }

    /// `w[a]^b`.
    fn pow(&self, a: usize, b: usize) -> C64 {
        self.w[(a * b) % self.len()]
    }
}

/// A candidate solution `F`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RhMap {
    /// `F = f + Σ_k a_k z^{kN}` built from the family.
    Ansatz { n: usize },
    /// Arbitrary polynomial map, one polynomial per component.
    Explicit { components: Vec<ComplexPolynomial> },
}

/// Verification grid sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhGrid {
    pub boundary: usize,
    pub radii: usize,
    pub fiber_samples: usize,
    pub fiber_radii: usize,
}

impl Default for RhGrid {
    fn default() -> Self {
        Self {
            boundary: 256,
            radii: 32,
            fiber_samples: 256,
            fiber_radii: 32,
        }
    }
}

impl RhGrid {
    fn check(&self) -> Result<(), RhError> {
        if self.boundary < 64 || self.radii < 16 {
            return Err(RhError::GridTooSmall(format!(
                "{} boundary points and {} radii (need 64 and 16)",
                self.boundary, self.radii
            )));
        }
        if self.fiber_samples < 8 || self.fiber_radii < 2 {
            return Err(RhError::GridTooSmall("fiber sampling".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhCertificate {
    pub r_prime: f64,
    pub epsilon: f64,
    pub map: RhMap,
    /// `sup_{|z| ≤ r'} |F − f|`.
    pub center_closeness: f64,
    /// `sup_{|z| = 1} dist(F(z), g(z, b𝔻))`.
    pub boundary_proximity: f64,
    /// `sup_{|z| = 1, r' ≤ ρ ≤ 1} dist(F(ρz), g(z, 𝔻̄))`.
    pub annulus_proximity: f64,
    pub center_pass: bool,
    pub boundary_pass: bool,
    pub annulus_pass: bool,
    pub grid: RhGrid,
}

impl RhCertificate {
    pub fn passed(&self) -> bool {
        self.center_pass && self.boundary_pass && self.annulus_pass
    }

    fn worst_ratio(&self) -> f64 {
        [self.center_closeness, self.boundary_proximity, self.annulus_proximity]
            .into_iter()
            .fold(0.0, f64::max)
            / self.epsilon
    }
}

fn dist2(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

struct Evaluator<'a> {
    family: &'a FiberDiscFamily,
    map: &'a RhMap,
    table: RootTable,
    /// Boundary point `j` is `table.w[j * stride]`.
    stride: usize,
}

impl Evaluator<'_> {
    fn interior(&self, z: C64) -> Vec<C64> {
        match self.map {
            RhMap::Ansatz { n } => (0..self.family.dim())
                .map(|c| {
                    let mut v = self.family.center[c].eval(z);
                    for (k, a) in self.family.coefficients.iter().enumerate() {
                        v += a[c].eval(z) * z.powu(((k + 1) * n) as u32);
                    }
                    v
                })
                .collect(),
            RhMap::Explicit { components } => components.iter().map(|p| p.eval(z)).collect(),
        }
    }

    /// `F` at boundary point `j`; for the ansatz `z^{kN}` is read off the table.
    fn boundary(&self, j: usize) -> Vec<C64> {
        let idx = j * self.stride;
        let z = self.table.w[idx];
        match self.map {
            RhMap::Ansatz { n } => (0..self.family.dim())
                .map(|c| {
                    let mut v = self.family.center[c].eval(z);
                    for (k, a) in self.family.coefficients.iter().enumerate() {
                        v += a[c].eval(z) * self.table.pow(idx, (k + 1) * n);
                    }
                    v
                })
                .collect(),
            RhMap::Explicit { components } => components.iter().map(|p| p.eval(z)).collect(),
        }
    }
}

/// Fiber data at one boundary point: `f(z)` and `a_k(z)`.
struct Fiber {
    f: Vec<C64>,
    a: Vec<Vec<C64>>,
}

impl Fiber {
    fn at(family: &FiberDiscFamily, z: C64) -> Self {
        Self {
            f: family.center.iter().map(|p| p.eval(z)).collect(),
            a: family.coefficients.iter().map(|ak| ak.iter().map(|p| p.eval(z)).collect()).collect(),
        }
    }

    /// `g(z, s · w[m])` with powers of `w[m]` taken from the table.
    fn eval(&self, table: &RootTable, m: usize, s: f64) -> Vec<C64> {
        let mut v = self.f.clone();
        let mut sk = 1.0;
        for (k, a) in self.a.iter().enumerate() {
            sk *= s;
            let xi = table.pow(m, k + 1) * sk;
            for (vc, ac) in v.iter_mut().zip(a) {
                *vc += ac * xi;
            }
        }
        v
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Measure the three suprema for `map` on the grid.
pub fn rh_verify(
    family: &FiberDiscFamily,
    map: &RhMap,
    r_prime: f64,
    epsilon: f64,
    grid: RhGrid,
) -> Result<RhCertificate, RhError> {
    grid.check()?;
    if !(r_prime > 0.0 && r_prime < 1.0) {
        return Err(RhError::InvalidRadius(r_prime));
    }
    if !(epsilon > 0.0) {
        return Err(RhError::InvalidEpsilon(epsilon));
    }
    if let RhMap::Explicit { components } = map {
        if components.len() != family.dim() {
            return Err(RhError::DimensionMismatch(format!(
                "F has {} components, f has {}",
                components.len(),
                family.dim()
            )));
        }
    }
    let (nb, nf) = (grid.boundary, grid.fiber_samples);
    let l = nb / gcd(nb, nf) * nf;
    let ev = Evaluator {
        family,
        map,
        table: RootTable::new(l),
        stride: l / nb,
    };
    let fstride = l / nf;
    let radius = |i: usize, lo: f64, hi: f64| lo + (hi - lo) * i as f64 / (grid.radii - 1) as f64;

    let rows: Vec<(f64, f64, f64)> = (0..nb)
        .into_par_iter()
        .map(|j| {
            let z = ev.table.w[j * ev.stride];
            let fib = Fiber::at(family, z);
            let mut center: f64 = 0.0;
            for i in 0..grid.radii {
                let w = z * radius(i, 0.0, r_prime);
                let fz: Vec<C64> = family.center.iter().map(|p| p.eval(w)).collect();
                center = center.max(dist2(&ev.interior(w), &fz).sqrt());
            }
            let fb = ev.boundary(j);
            let circle: Vec<Vec<C64>> = (0..nf).map(|m| fib.eval(&ev.table, m * fstride, 1.0)).collect();
            let boundary = circle.iter().map(|q| dist2(&fb, q)).fold(f64::INFINITY, f64::min).sqrt();
            let mut disc = circle;
            for t in 0..grid.fiber_radii - 1 {
                let s = t as f64 / (grid.fiber_radii - 1) as f64;
                if t == 0 {
                    disc.push(fib.f.clone());
                    continue;
                }
                disc.extend((0..nf).map(|m| fib.eval(&ev.table, m * fstride, s)));
            }
            // a point whose distance to some sample is already below the
            // running maximum cannot raise it, so the scan stops there
            let mut annulus: f64 = 0.0;
            for i in 0..grid.radii {
                let rho = radius(i, r_prime, 1.0);
                let p = if i + 1 == grid.radii { fb.clone() } else { ev.interior(z * rho) };
                let floor = annulus * annulus;
                let mut d = f64::INFINITY;
                for q in &disc {
                    d = d.min(dist2(&p, q));
                    if d <= floor {
                        break;
                    }
                }
                annulus = annulus.max(d.sqrt());
            }
            (center, boundary, annulus)
        })
        .collect();
    let max = |f: fn(&(f64, f64, f64)) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let (c, b, a) = (max(|r| r.0), max(|r| r.1), max(|r| r.2));
    Ok(RhCertificate {
        r_prime,
        epsilon,
        map: map.clone(),
        center_closeness: c,
        boundary_proximity: b,
        annulus_proximity: a,
        center_pass: c < epsilon,
        boundary_pass: b < epsilon,
        annulus_pass: a < epsilon,
        grid,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhOptions {
    /// `r' = max(r, 1 − c/N)`; `None` picks `c = max(1, ln(2·K·A/ε))` with
    /// `A` the largest boundary modulus of the `a_k`, which makes
    /// `K·A·(1 − c/N)^N < ε` for large `N`.
    pub c: Option<f64>,
    /// Largest exponent tried; exponents run 1, 2, …, `n_max`.
    pub n_max: usize,
    pub grid: RhGrid,
}

impl Default for RhOptions {
    fn default() -> Self {
        Self {
            c: None,
            n_max: 512,
            grid: RhGrid::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhSolution {
    /// `F` as explicit polynomials.
    pub polynomial: Vec<ComplexPolynomial>,
    pub r_prime: f64,
    pub n: usize,
    pub c: f64,
    pub certificate: RhCertificate,
    /// Exponents tried before success.
    pub attempts: usize,
}

pub fn r_prime_for(r: f64, c: f64, n: usize) -> f64 {
    r.max(1.0 - c / n as f64)
}

/// Smallest `N` whose ansatz `F = f + Σ a_k z^{kN}` passes the certificate
/// with `r' = max(r, 1 − c/N)`.
pub fn rh_solve_disc(family: &FiberDiscFamily, r: f64, epsilon: f64, options: &RhOptions) -> Result<RhSolution, RhError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(RhError::InvalidRadius(r));
    }
    if !(epsilon > 0.0) {
        return Err(RhError::InvalidEpsilon(epsilon));
    }
    let c = options.c.unwrap_or_else(|| {
        let ka = family.degree() as f64 * family.max_coefficient(options.grid.boundary);
        (2.0 * ka / epsilon).ln().max(1.0)
    });
    let mut best: Option<RhSolution> = None;
    for n in 1..=options.n_max.max(1) {
        let rp = r_prime_for(r, c, n);
        let cert = rh_verify(family, &RhMap::Ansatz { n }, rp, epsilon, options.grid)?;
        let sol = RhSolution {
            polynomial: family.ansatz_polynomials(n),
            r_prime: rp,
            n,
            c,
            attempts: n,
            certificate: cert,
        };
        if sol.certificate.passed() {
            return Ok(sol);
        }
        if best.as_ref().is_none_or(|b| sol.certificate.worst_ratio() < b.certificate.worst_ratio()) {
            best = Some(sol);
        }
    }
    Err(RhError::NotSolved {
        cap: options.n_max,
        best: Box::new(best.expect("at least one attempt")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn example() -> FiberDiscFamily {
        FiberDiscFamily::linear(ComplexPolynomial::from_real(&[0.0, 1.0]), ComplexPolynomial::from_real(&[0.5]))
    }

    #[test]
    fn linear_example_solves_at_three() {
        let sol = rh_solve_disc(&example(), 0.5, 0.1, &RhOptions::default()).unwrap();
        assert_eq!(sol.n, 3);
        assert_eq!(sol.r_prime, 0.5);
        assert!(sol.certificate.passed());
        assert_eq!(sol.certificate.boundary_proximity, 0.0);
        assert!((sol.certificate.center_closeness - 0.0625).abs() < 1e-12);
        let want = ComplexPolynomial::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert_eq!(sol.polynomial, vec![want]);
    }

    #[test]
    fn exact_on_fiber_circle_for_every_n() {
        let fam = FiberDiscFamily::linear(
            ComplexPolynomial::new(vec![c(0.2, -0.1), c(0.3, 0.4), c(0.0, 0.7)]),
            ComplexPolynomial::constant(c(0.3, -0.2)),
        );
        for n in 1..=40 {
            let cert = rh_verify(&fam, &RhMap::Ansatz { n }, 0.6, 0.1, RhGrid::default()).unwrap();
            assert_eq!(cert.boundary_proximity, 0.0, "n = {n}");
        }
    }

    #[test]
    fn degenerate_fibers() {
        let zero = vec![vec![ComplexPolynomial::zero(), ComplexPolynomial::zero()]];
        let constant = FiberDiscFamily::new(
            vec![ComplexPolynomial::from_real(&[1.0]), ComplexPolynomial::constant(c(0.0, 2.0))],
            zero.clone(),
        )
        .unwrap();
        for eps in [1e-6, 1.0] {
            let sol = rh_solve_disc(&constant, 0.3, eps, &RhOptions::default()).unwrap();
            assert_eq!(sol.n, 1);
            assert_eq!(sol.certificate.center_closeness, 0.0);
            assert_eq!(sol.certificate.annulus_proximity, 0.0);
        }
        // F = f, but dist(f(ρz), f(z)) = 2(1 − ρ) forces r' ≥ 0.975
        let affine = FiberDiscFamily::new(
            vec![ComplexPolynomial::from_real(&[1.0, 2.0]), ComplexPolynomial::from_real(&[0.5])],
            zero,
        )
        .unwrap();
        let sol = rh_solve_disc(&affine, 0.3, 0.05, &RhOptions::default()).unwrap();
        assert_eq!(sol.certificate.center_closeness, 0.0);
        assert!(sol.r_prime > 0.975 && sol.n == 41, "{} {}", sol.n, sol.r_prime);
    }

    #[test]
    fn perturbation_fails_center() {
        let fam = example();
        let sol = rh_solve_disc(&fam, 0.5, 0.1, &RhOptions::default()).unwrap();
        let shifted = sol.polynomial[0].add(&ComplexPolynomial::constant(c(0.2, 0.0)));
        let cert = rh_verify(
            &fam,
            &RhMap::Explicit { components: vec![shifted] },
            sol.r_prime,
            0.1,
            RhGrid::default(),
        )
        .unwrap();
        assert!(!cert.center_pass);
        assert!((cert.center_closeness - 0.2625).abs() < 1e-9);
    }

    #[test]
    fn center_monotone_in_n_on_fixed_disc() {
        let fam = example();
        let mut prev = f64::INFINITY;
        for n in 2..=20 {
            let cert = rh_verify(&fam, &RhMap::Ansatz { n }, 0.5, 0.1, RhGrid::default()).unwrap();
            assert!(cert.center_closeness <= prev);
            prev = cert.center_closeness;
        }
    }

    #[test]
    fn nonlinear_fibers_in_two_dimensions() {
        let z = ComplexPolynomial::from_real(&[0.0, 1.0]);
        let fam = FiberDiscFamily::new(
            vec![z.clone(), ComplexPolynomial::from_real(&[0.1, 0.0, 0.5])],
            vec![
                vec![ComplexPolynomial::from_real(&[0.2]), ComplexPolynomial::new(vec![c(0.0, 0.1), c(0.1, 0.0)])],
                vec![ComplexPolynomial::from_real(&[0.0, 0.05]), ComplexPolynomial::zero()],
            ],
        )
        .unwrap();
        let grid = RhGrid {
            boundary: 128,
            radii: 16,
            fiber_samples: 128,
            fiber_radii: 16,
        };
        let sol = rh_solve_disc(&fam, 0.4, 0.05, &RhOptions { grid, ..Default::default() }).unwrap();
        assert!(sol.certificate.passed());
        assert!(sol.r_prime >= 0.4);
        // exact for K = 2 as well
        assert_eq!(sol.certificate.boundary_proximity, 0.0);
    }

    #[test]
    fn refinement_never_lowers_suprema() {
        let fam = example();
        let coarse = RhGrid {
            boundary: 64,
            radii: 16,
            fiber_samples: 256,
            fiber_radii: 32,
        };
        let fine = RhGrid {
            boundary: 128,
            radii: 31,
            ..coarse
        };
        let map = RhMap::Ansatz { n: 5 };
        let a = rh_verify(&fam, &map, 0.7, 0.1, coarse).unwrap();
        let b = rh_verify(&fam, &map, 0.7, 0.1, fine).unwrap();
        assert!(b.center_closeness >= a.center_closeness);
        assert!(b.annulus_proximity >= a.annulus_proximity);
        assert!(b.boundary_proximity >= a.boundary_proximity);
    }

    #[test]
    fn lowering_r_prime_recorded() {
        let fam = example();
        let low = rh_verify(&fam, &RhMap::Ansatz { n: 3 }, 0.2, 0.1, RhGrid::default()).unwrap();
        let ok = rh_verify(&fam, &RhMap::Ansatz { n: 3 }, 0.5, 0.1, RhGrid::default()).unwrap();
        assert!(low.annulus_proximity > ok.annulus_proximity);
        assert!(!low.annulus_pass);
    }

    #[test]
    fn cap_returns_best() {
        let fam = example();
        let opts = RhOptions {
            n_max: 2,
            ..Default::default()
        };
        match rh_solve_disc(&fam, 0.5, 0.1, &opts) {
            Err(RhError::NotSolved { best, .. }) => {
                assert_eq!(best.n, 2);
                assert!(!best.certificate.passed());
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            rh_verify(&fam, &RhMap::Ansatz { n: 1 }, 0.5, 0.1, RhGrid { boundary: 32, ..Default::default() }),
            Err(RhError::GridTooSmall(_))
        ));
    }
}
