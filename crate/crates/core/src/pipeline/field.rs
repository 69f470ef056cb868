//! Integral-free minimal immersions with Gauss map `g = z`.
//!
//! For a meromorphic `F` put
//! `L[F] = (½(1−z²)F'' + zF' − F, (i/2)(1+z²)F'' − izF' + iF, zF'' − F')`.
//! Then `L[F]' = Φ` for the data `(f, g) = (F''', z)`, so `u = Re L[F]` is a
//! conformal minimal immersion wherever `F''' ≠ 0`, with no periods.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::C64;

/// The term `coeff · (z − center)^(−order)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleTerm {
    pub center: C64,
    pub order: u32,
    pub coeff: C64,
}

impl PoleTerm {
    /// `(F, F', F'', F''')` of the term at `z`.
    fn jet(&self, z: C64) -> [C64; 4] {
        let w = (z - self.center).inv();
        let k = self.order as f64;
        let wk = self.coeff * w.powu(self.order);
        let f0 = wk;
        let f1 = -k * wk * w;
        let f2 = k * (k + 1.0) * wk * w * w;
        let f3 = -k * (k + 1.0) * (k + 2.0) * wk * w * w * w;
        [f0, f1, f2, f3]
    }
}

/// `L[F]` from the jet of `F`.
fn lift(z: C64, j: [C64; 4]) -> [C64; 3] {
    let i = C64::new(0.0, 1.0);
    let z2 = z * z;
    [
        0.5 * (1.0 - z2) * j[2] + z * j[1] - j[0],
        0.5 * i * (1.0 + z2) * j[2] - i * z * j[1] + i * j[0],
        z * j[2] - j[1],
    ]
}

/// `F = Σ` of pole terms.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RationalData {
    pub terms: Vec<PoleTerm>,
}

impl RationalData {
    pub fn new(terms: Vec<PoleTerm>) -> Self {
        Self { terms }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn jet(&self, z: C64) -> [C64; 4] {
        let mut acc = [C64::new(0.0, 0.0); 4];
        for t in &self.terms {
            for (a, b) in acc.iter_mut().zip(t.jet(z)) {
                *a += b;
            }
        }
        acc
    }

    /// `u(z) = Re L[F](z)`.
    pub fn position(&self, z: C64) -> [f64; 3] {
        lift(z, self.jet(z)).map(|c| c.re)
    }

    /// `f = F'''`.
    pub fn f(&self, z: C64) -> C64 {
        self.jet(z)[3]
    }

    /// `λ = ¼|f|²(1+|z|²)²`.
    pub fn metric_density(&self, z: C64) -> f64 {
        let s = 1.0 + z.norm_sqr();
        0.25 * self.f(z).norm_sqr() * s * s
    }

    /// Positions and metric densities at many points (order preserved).
    pub fn sample(&self, points: &[C64]) -> (Vec<[f64; 3]>, Vec<f64>) {
        points
            .par_iter()
            .map(|&z| {
                let j = self.jet(z);
                let s = 1.0 + z.norm_sqr();
                (lift(z, j).map(|c| c.re), 0.25 * j[3].norm_sqr() * s * s)
            })
            .unzip()
    }

    pub fn positions(&self, points: &[C64]) -> Vec<[f64; 3]> {
        points.par_iter().map(|&z| self.position(z)).collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(
            self.terms
                .iter()
                .map(|t| PoleTerm {
                    coeff: t.coeff * s,
                    ..*t
                })
                .collect(),
        )
    }

    /// Concatenation, which represents the sum.
    pub fn plus(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::new(terms)
    }

    /// Distance from `z` to the nearest pole.
    pub fn pole_distance(&self, z: C64) -> f64 {
        self.terms.iter().map(|t| (t.center - z).norm()).fold(f64::INFINITY, f64::min)
    }
}

/// `Re L[c·(z−center)^(−order)]` at `z` for `c = 1` and `c = i`.
pub(crate) fn unit_columns(center: C64, order: u32, z: C64) -> [[f64; 3]; 2] {
    let t = PoleTerm {
        center,
        order,
        coeff: C64::new(1.0, 0.0),
    };
    let l = lift(z, t.jet(z));
    [l.map(|c| c.re), l.map(|c| -c.im)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weierstrass::phi_from_fg;

    fn data() -> RationalData {
        RationalData::new(vec![
            PoleTerm {
                center: C64::new(0.1, -0.2),
                order: 1,
                coeff: C64::new(0.7, 0.3),
            },
            PoleTerm {
                center: C64::new(-0.3, 0.25),
                order: 3,
                coeff: C64::new(-0.02, 0.05),
            },
        ])
    }

    #[test]
    fn lift_differentiates_to_phi() {
        let d = data();
        let z = C64::new(0.9, 0.4);
        let h = 1e-5;
        let dl: Vec<C64> = (0..3)
            .map(|k| (lift(z + h, d.jet(z + h))[k] - lift(z - h, d.jet(z - h))[k]) / (2.0 * h))
            .collect();
        let phi = phi_from_fg(d.f(z), z);
        for k in 0..3 {
            assert!((dl[k] - phi[k]).norm() < 1e-7 * (1.0 + phi[k].norm()), "{k}");
        }
    }

    #[test]
    fn density_matches_phi() {
        let d = data();
        let z = C64::new(-0.7, 1.1);
        let phi = phi_from_fg(d.f(z), z);
        let half_norm: f64 = 0.5 * phi.iter().map(|c| c.norm_sqr()).sum::<f64>();
        assert!((d.metric_density(z) - half_norm).abs() < 1e-12 * half_norm);
    }

    #[test]
    fn columns_are_linear_pieces() {
        let z = C64::new(0.4, 0.8);
        let c = C64::new(0.3, -0.6);
        let t = RationalData::new(vec![PoleTerm {
            center: C64::new(0.0, 0.1),
            order: 2,
            coeff: c,
        }]);
        let [a, b] = unit_columns(C64::new(0.0, 0.1), 2, z);
        let p = t.position(z);
        for k in 0..3 {
            assert!((c.re * a[k] + c.im * b[k] - p[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn vanishes_at_infinity() {
        let p = data().position(C64::new(1e6, 2e6));
        assert!(p.iter().all(|x| x.abs() < 1e-5));
    }
}
