//! Complex-valued functions sampled on a [`Grid`].

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{NlsError, Result};
use crate::grid::Grid;

#[derive(Clone)]
pub struct ComplexField {
    pub grid: Arc<Grid>,
    pub values: Vec<C64>,
}

impl ComplexField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self { grid: grid.clone(), values: vec![C64::ZERO; grid.n] }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> C64) -> Self {
        let values = grid.nodes.iter().map(|&x| f(x)).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn from_real_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<C64>) -> Self {
        assert_eq!(values.len(), grid.n);
        Self { grid: grid.clone(), values }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(NlsError::NonFinite)
        }
    }

    pub fn check_same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(NlsError::GridMismatch)
        }
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let scale = self.linf_norm().max(1e-300);
        self.values.iter().all(|v| v.im.abs() <= tol * scale)
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn l2_norm(&self) -> f64 {
        self.grid.l2_norm_sq(&self.values).sqrt()
    }

    pub fn h1_norm(&self) -> f64 {
        self.grid.h1_norm_sq(&self.values).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Real inner product (self, other)_{L2} = Re int self conj(other).
    pub fn inner(&self, other: &ComplexField) -> f64 {
        self.grid.inner(&self.values, &other.values)
    }

    pub fn scale(&self, s: f64) -> ComplexField {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// self + s * other.
    pub fn axpy(&self, s: f64, other: &ComplexField) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ComplexField) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn conj(&self) -> ComplexField {
        self.map(|v| v.conj())
    }

    /// Multiply by the global phase e^{i theta}.
    pub fn rotate(&self, theta: f64) -> ComplexField {
        let ph = C64::from_polar(1.0, theta);
        self.map(|v| v * ph)
    }

    /// Multiply pointwise by a real profile.
    pub fn mul_real(&self, profile: &[f64]) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(profile).map(|(v, p)| v * p).collect(),
        }
    }

    pub fn times_i(&self) -> ComplexField {
        self.map(|v| C64::new(-v.im, v.re))
    }

    pub fn linf_distance(&self, other: &ComplexField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
