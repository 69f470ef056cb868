//! Polynomials in a discrete orthonormal basis built by Arnoldi iteration
//! on sample points (Vandermonde with Arnoldi).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ComplexPolynomial, FitReport, GridError};
use crate::C64;

/// `p = Σ c_k q_k` where `q_0 = 1` and
/// `h_{k+1,k} q_{k+1} = z q_k − Σ_{j≤k} h_{j,k} q_j`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArnoldiPolynomial {
    /// Column `k` holds `h_{0,k}, …, h_{k+1,k}`.
    pub hessenberg: Vec<Vec<C64>>,
    pub coeffs: Vec<C64>,
}

impl ArnoldiPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    pub fn eval(&self, z: C64) -> C64 {
        let Some(&c0) = self.coeffs.first() else {
            return C64::new(0.0, 0.0);
        };
        let mut q = Vec::with_capacity(self.coeffs.len());
        q.push(C64::new(1.0, 0.0));
        let mut acc = c0;
        for (k, &c) in self.coeffs.iter().enumerate().skip(1) {
            let h = &self.hessenberg[k - 1];
            let mut v = z * q[k - 1];
            for j in 0..k {
                v -= h[j] * q[j];
            }
            let next = v / h[k];
            acc += c * next;
            q.push(next);
        }
        acc
    }

    /// Monomial coefficients. Cancellation grows quickly with the degree.
    pub fn to_monomial(&self) -> ComplexPolynomial {
        let mut basis = vec![ComplexPolynomial::constant(C64::new(1.0, 0.0))];
        let z = ComplexPolynomial::monomial(C64::new(1.0, 0.0), 1);
        let mut out = ComplexPolynomial::zero();
        for (k, &c) in self.coeffs.iter().enumerate() {
            if k > 0 {
                let h = &self.hessenberg[k - 1];
                let mut v = z.mul(&basis[k - 1]);
                for j in 0..k {
                    v = v.add(&basis[j].scale(-h[j]));
                }
                basis.push(v.scale(C64::new(1.0, 0.0) / h[k]));
            }
            out = out.add(&basis[k].scale(c));
        }
        out
    }
}

/// Orthonormal basis `q_0..q_D` sampled at fixed points, reused for fits of
/// every degree up to `D`.
#[derive(Clone, Debug)]
pub struct ArnoldiBasis {
    points: Vec<C64>,
    q: DMatrix<C64>,
    hessenberg: Vec<Vec<C64>>,
}

/// Relative size of `h_{k+1,k}` below which the basis is truncated.
const BREAKDOWN_RTOL: f64 = 1e-12;

impl ArnoldiBasis {
    /// Basis up to `max_degree`, truncated early if the Krylov space is
    /// exhausted by the sample points.
    pub fn new(points: &[C64], max_degree: usize) -> Result<Self, GridError> {
        let m = points.len();
        if m == 0 {
            return Err(GridError::InsufficientSamples { needed: 1, got: 0 });
        }
        let scale = (m as f64).sqrt();
        let zmax = points.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let mut cols: Vec<DVector<C64>> = vec![DVector::from_element(m, C64::new(1.0, 0.0))];
        let mut hessenberg = Vec::new();
        for k in 0..max_degree.min(m - 1) {
            let mut v = DVector::from_iterator(m, points.iter().zip(cols[k].iter()).map(|(z, q)| z * q));
            let mut h = vec![C64::new(0.0, 0.0); k + 2];
            // two Gram–Schmidt passes
            for _ in 0..2 {
                for (j, qj) in cols.iter().enumerate() {
                    let c = qj.dotc(&v) / m as f64;
                    h[j] += c;
                    v.axpy(-c, qj, C64::new(1.0, 0.0));
                }
            }
            let norm = v.norm() / scale;
            if norm <= BREAKDOWN_RTOL * zmax {
                break;
            }
            h[k + 1] = C64::new(norm, 0.0);
            cols.push(v.unscale(norm));
            hessenberg.push(h);
        }
        Ok(Self {
            points: points.to_vec(),
            q: DMatrix::from_columns(&cols),
            hessenberg,
        })
    }

    pub fn max_degree(&self) -> usize {
        self.q.ncols() - 1
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    /// Weighted least-squares fit `min Σ w_i |p(z_i) − t_i|²` of the given degree.
    pub fn fit(&self, targets: &[C64], weights: Option<&[f64]>, degree: usize) -> Result<(ArnoldiPolynomial, FitReport), GridError> {
        let m = self.points.len();
        if targets.len() != m {
            return Err(GridError::FieldSize {
                expected: m,
                got: targets.len(),
            });
        }
        if let Some(w) = weights {
            if w.len() != m {
                return Err(GridError::FieldSize { expected: m, got: w.len() });
            }
        }
        if degree > self.max_degree() {
            return Err(GridError::InsufficientSamples {
                needed: degree + 1,
                got: self.max_degree() + 1,
            });
        }
        let q = self.q.columns(0, degree + 1);
        let b = DVector::from_column_slice(targets);
        let (coeffs, rank) = match weights {
            None => ((q.adjoint() * &b).unscale(m as f64), degree + 1),
            Some(w) => {
                let sw: Vec<f64> = w.iter().map(|w| w.max(0.0).sqrt()).collect();
                let mut a = q.clone_owned();
                for (i, s) in sw.iter().enumerate() {
                    a.row_mut(i).scale_mut(*s);
                }
                let bw = DVector::from_iterator(m, b.iter().zip(&sw).map(|(t, s)| t * *s));
                let svd = a.svd(true, true);
                let cutoff = svd.singular_values.max() * 1e-13 * m as f64;
                let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
                let x = svd.solve(&bw, cutoff).map_err(|e| GridError::Numerical(e.to_string()))?;
                (x, rank)
            }
        };
        let values = q * &coeffs;
        let residuals: Vec<f64> = values.iter().zip(targets).map(|(v, t)| (v - t).norm()).collect();
        let poly = ArnoldiPolynomial {
            hessenberg: self.hessenberg[..degree].to_vec(),
            coeffs: coeffs.iter().copied().collect(),
        };
        Ok((
            poly,
            FitReport {
                degree,
                max_residual: residuals.iter().copied().fold(0.0, f64::max),
                rms_residual: (residuals.iter().map(|r| r * r).sum::<f64>() / m as f64).sqrt(),
                rank,
                rank_deficient: rank < degree + 1,
            },
        ))
    }
}
