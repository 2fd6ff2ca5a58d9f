//! Dense symmetric solves for the small q×q systems the fitters produce.

use crate::error::{Error, Result};

/// Symmetric positive definite system `A x = b`, accumulated in place.
///
/// `A` is stored row-major. Built by [`NormalEquations`] and by the Gibbs
/// sampler's conditional precision matrix.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl NormalEquations {
    pub fn new(dim: usize) -> Self {
        NormalEquations { dim, a: vec![0.0; dim * dim], b: vec![0.0; dim] }
    }

    /// Adds `weight · φφ'` to `A` and `weight · target · φ` to `b`.
    pub fn add_observation(&mut self, phi: &[f64], target: f64, weight: f64) {
        debug_assert_eq!(phi.len(), self.dim);
        for i in 0..self.dim {
            let wphi = weight * phi[i];
            self.b[i] += wphi * target;
            for j in 0..self.dim {
                self.a[i * self.dim + j] += wphi * phi[j];
            }
        }
    }

    /// Adds `value` to the diagonal of `A` (ridge / prior precision).
    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.dim {
            self.a[i * self.dim + i] += value;
        }
    }

    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    /// Solves `A x = b` via Cholesky factorization.
    pub fn solve(&self) -> Result<Vec<f64>> {
        let chol = Cholesky::decompose(&self.a, self.dim)?;
        Ok(chol.solve(&self.b))
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L L'`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors a symmetric matrix; fails with `SingularDesign` when a pivot
    /// falls below 1e-12 of the largest diagonal entry (rank deficiency or
    /// indefiniteness, up to rounding).
    pub fn decompose(a: &[f64], dim: usize) -> Result<Cholesky> {
        assert_eq!(a.len(), dim * dim);
        let scale = (0..dim).map(|i| a[i * dim + i].abs()).fold(0.0, f64::max);
        let floor = scale * 1e-12;
        let mut l = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut sum = a[i * dim + j];
                for t in 0..j {
                    sum -= l[i * dim + t] * l[j * dim + t];
                }
                if i == j {
                    if !(sum > floor) || !sum.is_finite() {
                        return Err(Error::SingularDesign);
                    }
                    l[i * dim + j] = sum.sqrt();
                } else {
                    l[i * dim + j] = sum / l[j * dim + j];
                }
            }
        }
        Ok(Cholesky { dim, l })
    }

    /// Solves `L L' x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let y = self.forward_substitute(b);
        self.back_substitute(&y)
    }

    /// Solves `L y = b`.
    pub fn forward_substitute(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut sum = b[i];
            for t in 0..i {
                sum -= self.l[i * n + t] * y[t];
            }
            y[i] = sum / self.l[i * n + i];
        }
        y
    }

    /// Solves `L' x = y`.
    pub fn back_substitute(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut sum = y[i];
            for t in (i + 1)..n {
                sum -= self.l[t * n + i] * x[t];
            }
            x[i] = sum / self.l[i * n + i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_known_system() {
        // A = [[4, 2], [2, 3]], b = [2, 5] -> x = [-0.5, 2]
        let mut ne = NormalEquations::new(2);
        ne.a = vec![4.0, 2.0, 2.0, 3.0];
        ne.b = vec![2.0, 5.0];
        let x = ne.solve().unwrap();
        assert!((x[0] + 0.5).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_least_squares_coefficients() {
        // Exact linear data: target = 1 - 2x, quadratic design.
        let mut ne = NormalEquations::new(3);
        for i in 0..20 {
            let x = -1.0 + i as f64 * 0.1;
            let phi = [1.0, x, x * x];
            ne.add_observation(&phi, 1.0 - 2.0 * x, 0.5 + 0.02 * i as f64);
        }
        let beta = ne.solve().unwrap();
        assert!((beta[0] - 1.0).abs() < 1e-10);
        assert!((beta[1] + 2.0).abs() < 1e-10);
        assert!(beta[2].abs() < 1e-10);
    }

    #[test]
    fn singular_matrix_rejected() {
        let mut ne = NormalEquations::new(2);
        // Rank-1: both rows proportional.
        ne.add_observation(&[1.0, 2.0], 1.0, 1.0);
        ne.add_observation(&[2.0, 4.0], 2.0, 1.0);
        assert_eq!(ne.solve(), Err(Error::SingularDesign));
    }

    #[test]
    fn triangular_solves_invert_factor() {
        let a = vec![6.0, 3.0, 1.0, 3.0, 5.0, 2.0, 1.0, 2.0, 4.0];
        let chol = Cholesky::decompose(&a, 3).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = chol.solve(&b);
        // Check A x = b directly.
        for i in 0..3 {
            let got: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((got - b[i]).abs() < 1e-12);
        }
    }
}
