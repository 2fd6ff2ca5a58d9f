//! Kernel weights `K_h(d) = h⁻¹ K(d/h)` for local estimation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelShape {
    /// Infinite support; never produces zero mass.
    Gaussian,
    /// Compact support `[0, h)`.
    Triangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub shape: KernelShape,
    pub h: f64,
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

impl Kernel {
    pub fn new(shape: KernelShape, h: f64) -> Result<Kernel> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
        }
        Ok(Kernel { shape, h })
    }

    pub fn gaussian(h: f64) -> Result<Kernel> {
        Kernel::new(KernelShape::Gaussian, h)
    }

    pub fn triangular(h: f64) -> Result<Kernel> {
        Kernel::new(KernelShape::Triangular, h)
    }

    /// Weight at distance `d ≥ 0`.
    pub fn weight(&self, d: f64) -> f64 {
        debug_assert!(d >= 0.0);
        match self.shape {
            KernelShape::Gaussian => {
                let u = d / self.h;
                INV_SQRT_2PI / self.h * (-0.5 * u * u).exp()
            }
            KernelShape::Triangular => (1.0 - d / self.h).max(0.0) / self.h,
        }
    }
}

/// Free-function form of [`Kernel::weight`].
pub fn kernel_weight(kernel: &Kernel, d: f64) -> Result<f64> {
    if d < 0.0 || !d.is_finite() {
        return Err(Error::InvalidArgument(format!("distance must be nonnegative, got {d}")));
    }
    Ok(kernel.weight(d))
}
