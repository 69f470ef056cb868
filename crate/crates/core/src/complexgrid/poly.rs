//! Complex polynomials and least-squares fitting on scattered samples.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::GridError;
use crate::C64;

/// Polynomial with complex coefficients in ascending degree.
///
/// The coefficient list is kept trimmed: either empty (the zero polynomial)
/// or ending in a nonzero coefficient.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<C64>", into = "Vec<C64>")]
pub struct ComplexPolynomial {
    coeffs: Vec<C64>,
}

impl From<Vec<C64>> for ComplexPolynomial {
    fn from(coeffs: Vec<C64>) -> Self {
        Self::new(coeffs)
    }
}

impl From<ComplexPolynomial> for Vec<C64> {
    fn from(p: ComplexPolynomial) -> Self {
        p.coeffs
    }
}

impl ComplexPolynomial {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `c z^n`.
    pub fn monomial(c: C64, n: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
        coeffs[n] = c;
        Self::new(coeffs)
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = C64::new(0.0, 0.0);
        Self::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(zero)
                        + other.coeffs.get(k).copied().unwrap_or(zero)
                })
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Max of |p| over the given points.
    pub fn sup_on(&self, points: &[C64]) -> f64 {
        points.iter().map(|&z| self.eval(z).norm()).fold(0.0, f64::max)
    }
}

/// Outcome of a least-squares fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub degree: usize,
    pub max_residual: f64,
    pub rms_residual: f64,
    /// Numerical rank of the scaled Vandermonde matrix.
    pub rank: usize,
    /// True when the system was rank deficient and the minimum-norm solution was taken.
    pub rank_deficient: bool,
}

/// Relative singular-value cutoff for the rank decision.
const RANK_RTOL: f64 = 1e-13;

/// Fit a polynomial of the given degree to `(point, target)` samples in the
/// least-squares sense.
///
/// Columns of the Vandermonde matrix are scaled to unit norm before an SVD
/// solve; rank-deficient systems get the minimum-norm solution and are
/// flagged in the report.
pub fn least_squares_polynomial_fit(
    samples: &[(C64, C64)],
    degree: usize,
) -> Result<(ComplexPolynomial, FitReport), GridError> {
    weighted_polynomial_fit(samples, None, degree)
}

/// Least-squares fit minimising `Σ w_i |p(z_i) − t_i|²`.
pub fn weighted_polynomial_fit(
    samples: &[(C64, C64)],
    weights: Option<&[f64]>,
    degree: usize,
) -> Result<(ComplexPolynomial, FitReport), GridError> {
    let n_cols = degree + 1;
    if let Some(w) = weights {
        if w.len() != samples.len() {
            return Err(GridError::FieldSize {
                expected: samples.len(),
                got: w.len(),
            });
        }
    }
    let row_scale = |i: usize| weights.map_or(1.0, |w| w[i].max(0.0).sqrt());
    if samples.len() < n_cols {
        return Err(GridError::InsufficientSamples {
            needed: n_cols,
            got: samples.len(),
        });
    }
    let first = samples[0].0;
    if degree > 0 && samples.iter().all(|(z, _)| (*z - first).norm() == 0.0) {
        return Err(GridError::CoincidentSamples);
    }
    let n_rows = samples.len();
    let mut a = DMatrix::<C64>::zeros(n_rows, n_cols);
    for (i, (z, _)) in samples.iter().enumerate() {
        let mut p = C64::new(row_scale(i), 0.0);
        for j in 0..n_cols {
            a[(i, j)] = p;
            p *= z;
        }
    }
    let mut scales = vec![1.0; n_cols];
    for (j, s) in scales.iter_mut().enumerate() {
        let norm = a.column(j).norm();
        if norm > 0.0 {
            *s = norm;
            a.column_mut(j).unscale_mut(norm);
        }
    }
    let b = DVector::<C64>::from_iterator(n_rows, samples.iter().enumerate().map(|(i, (_, t))| *t * row_scale(i)));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * RANK_RTOL * (n_rows.max(n_cols) as f64);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let x = svd
        .solve(&b, cutoff)
        .map_err(|e| GridError::Numerical(e.to_string()))?;
    let coeffs: Vec<C64> = x.iter().zip(&scales).map(|(c, s)| c / *s).collect();
    let poly = ComplexPolynomial::new(coeffs);

    let residuals: Vec<f64> = samples
        .iter()
        .map(|(z, t)| (poly.eval(*z) - t).norm())
        .collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    let rms_residual = (residuals.iter().map(|r| r * r).sum::<f64>() / n_rows as f64).sqrt();
    Ok((
        poly,
        FitReport {
            degree,
            max_residual,
            rms_residual,
            rank,
            rank_deficient: rank < n_cols,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn trims_trailing_zeros() {
        let p = ComplexPolynomial::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(p.degree(), Some(0));
        assert!(ComplexPolynomial::new(vec![c(0.0, 0.0)]).is_zero());
    }

    #[test]
    fn constant_fit_is_exact() {
        let samples: Vec<_> = (0..10).map(|k| (c(k as f64 * 0.1, 0.3), c(3.0, 0.0))).collect();
        let (p, rep) = least_squares_polynomial_fit(&samples, 0).unwrap();
        assert!((p.eval(c(0.0, 0.0)) - c(3.0, 0.0)).norm() < 1e-14);
        assert!(rep.max_residual < 1e-14);
    }

    #[test]
    fn quadratic_recovered_from_circle_samples() {
        let samples: Vec<_> = (0..50)
            .map(|k| {
                let z = C64::from_polar(1.0, 2.0 * PI * k as f64 / 50.0);
                (z, z * z - 1.0)
            })
            .collect();
        let (p, _) = least_squares_polynomial_fit(&samples, 2).unwrap();
        let want = [c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        for (got, w) in p.coeffs().iter().zip(want) {
            assert!((got - w).norm() < 1e-10);
        }
    }

    #[test]
    fn too_few_samples_rejected() {
        let samples = vec![(c(0.0, 0.0), c(1.0, 0.0))];
        assert!(matches!(
            least_squares_polynomial_fit(&samples, 2),
            Err(GridError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn coincident_points_rejected() {
        let samples = vec![(c(0.5, 0.5), c(1.0, 0.0)); 6];
        assert!(matches!(
            least_squares_polynomial_fit(&samples, 2),
            Err(GridError::CoincidentSamples)
        ));
    }

    #[test]
    fn rank_deficiency_reported() {
        // Two distinct points cannot pin down a quadratic.
        let samples = vec![
            (c(0.0, 0.0), c(1.0, 0.0)),
            (c(1.0, 0.0), c(2.0, 0.0)),
            (c(0.0, 0.0), c(1.0, 0.0)),
        ];
        let (p, rep) = least_squares_polynomial_fit(&samples, 2).unwrap();
        assert!(rep.rank_deficient);
        assert_eq!(rep.rank, 2);
        assert!(rep.max_residual < 1e-12);
        assert!((p.eval(c(1.0, 0.0)) - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn two_disc_sign_fit_regression() {
        // ±1 on discs of radius 0.2 about ±0.5, 100 points each.
        let mut samples = Vec::new();
        for (center, target) in [(0.5, 1.0), (-0.5, -1.0)] {
            for k in 0..100 {
                // sunflower sampling of the disc
                let r = 0.2 * ((k as f64 + 0.5) / 100.0).sqrt();
                let t = k as f64 * 2.399_963_229_728_653;
                samples.push((c(center, 0.0) + C64::from_polar(r, t), c(target, 0.0)));
            }
        }
        let (_, rep) = least_squares_polynomial_fit(&samples, 11).unwrap();
        assert!(rep.max_residual < 0.05, "residual {}", rep.max_residual);
    }

    #[test]
    fn algebra_matches_evaluation() {
        let p = ComplexPolynomial::new(vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 1.0)]);
        let q = ComplexPolynomial::new(vec![c(0.0, -1.0), c(2.0, 0.5)]);
        let z = c(0.3, -0.7);
        assert!((p.mul(&q).eval(z) - p.eval(z) * q.eval(z)).norm() < 1e-14);
        assert!((p.add(&q).eval(z) - p.eval(z) - q.eval(z)).norm() < 1e-14);
        let dp = p.derivative();
        assert!((dp.eval(z) - (c(-0.5, 0.0) + c(0.0, 2.0) * z)).norm() < 1e-14);
    }
}
