use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

/// Default smoothing of `min(1, ·)`; keeps the surrogate within 5e-4 of the exact min.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Gaussian position kernel `exp(-|x - y|² / σ²)`.
#[inline]
pub fn spatial_kernel(x: &Vec3, y: &Vec3, sigma_w: f64) -> f64 {
    (-(x - y).norm_squared() / (sigma_w * sigma_w)).exp()
}

/// Oriented kernel on directors, `exp(<u, v>)`.
#[inline]
pub fn orientation_kernel(u: &Vec3, v: &Vec3) -> f64 {
    u.dot(v).exp()
}

/// Smooth surrogate of `min(1, s)`: `(s + 1 - sqrt(ε + (s - 1)²)) / 2`.
#[inline]
pub fn smooth_min_one(s: f64, epsilon: f64) -> f64 {
    0.5 * (s + 1.0 - (epsilon + (s - 1.0) * (s - 1.0)).sqrt())
}

#[inline]
pub(crate) fn smooth_min_one_deriv(s: f64, epsilon: f64) -> f64 {
    let d = s - 1.0;
    0.5 * (1.0 - d / (epsilon + d * d).sqrt())
}

/// `max(0, s)²`.
#[inline]
pub fn hinge_sq(s: f64) -> f64 {
    if s > 0.0 {
        s * s
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn hinge_sq_deriv(s: f64) -> f64 {
    if s > 0.0 {
        2.0 * s
    } else {
        0.0
    }
}

/// Parameters of the data-attachment kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VarifoldKernelConfig {
    /// Spatial scale σ_W (mm).
    pub sigma_w: f64,
    /// Smoothing of `min(1, ·)`.
    pub epsilon: f64,
    /// Weight the target sum by target areas and each source term by its area.
    pub weighted_quadrature: bool,
    /// Optional truncation radius, in multiples of `sigma_w`, for cell-list
    /// kernel sums. `None` evaluates every pair.
    pub cutoff: Option<f64>,
}

impl Default for VarifoldKernelConfig {
    fn default() -> Self {
        VarifoldKernelConfig {
            sigma_w: 1.0,
            epsilon: DEFAULT_EPSILON,
            weighted_quadrature: false,
            cutoff: None,
        }
    }
}

impl VarifoldKernelConfig {
    pub fn new(sigma_w: f64, epsilon: f64) -> Result<Self> {
        let cfg = VarifoldKernelConfig {
            sigma_w,
            epsilon,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_sigma(sigma_w: f64) -> Self {
        VarifoldKernelConfig {
            sigma_w,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_w > 0.0 && self.sigma_w.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma_w must be positive, got {}",
                self.sigma_w
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1e-2) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, 1e-2], got {}",
                self.epsilon
            )));
        }
        if let Some(c) = self.cutoff {
            if !(c > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "cutoff must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }

    /// Absolute truncation radius in mm, if any.
    pub(crate) fn cutoff_mm(&self) -> Option<f64> {
        self.cutoff.map(|c| c * self.sigma_w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn spatial_values() {
        let x = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(spatial_kernel(&x, &x, 2.0), 1.0);
        let y = x + Vec3::new(0.0, 2.0, 0.0);
        assert!((spatial_kernel(&x, &y, 2.0) - (-1f64).exp()).abs() < 1e-15);
        let far = x + Vec3::new(20.0, 0.0, 0.0);
        assert!(spatial_kernel(&x, &far, 2.0) < 1e-43);
    }

    #[test]
    fn orientation_values() {
        let u = Vec3::x();
        assert!((orientation_kernel(&u, &u) - E).abs() < 1e-15);
        assert!((orientation_kernel(&u, &-u) - 1.0 / E).abs() < 1e-15);
        assert_eq!(orientation_kernel(&u, &Vec3::y()), 1.0);
    }

    #[test]
    fn smooth_min_values() {
        assert!((smooth_min_one(1.0, 1e-6) - 0.9995).abs() < 1e-15);
        assert_eq!(smooth_min_one(0.0, 0.0), 0.0);
        let expected = (4.0 - (1e-6f64 + 4.0).sqrt()) / 2.0;
        assert!((smooth_min_one(3.0, 1e-6) - expected).abs() < 1e-15);
        assert!((smooth_min_one(3.0, 1e-6) - 0.99999987).abs() < 1e-8);
    }

    #[test]
    fn smooth_min_bounds_on_grid() {
        for eps in [1e-2, 1e-4, 1e-6] {
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=600 {
                let s = -2.0 + 6.0 * k as f64 / 600.0;
                let v = smooth_min_one(s, eps);
                assert!(v < s.min(1.0));
                assert!(s.min(1.0) - v <= eps.sqrt() / 2.0 + 1e-15);
                assert!(v > prev);
                prev = v;
            }
        }
    }

    #[test]
    fn hinge_values() {
        assert_eq!(hinge_sq(-3.0), 0.0);
        assert_eq!(hinge_sq(0.0), 0.0);
        assert_eq!(hinge_sq(2.0), 4.0);
        assert_eq!(hinge_sq_deriv(0.0), 0.0);
        assert_eq!(hinge_sq_deriv(1.5), 3.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for &s in &[-1.0, 0.3, 0.999, 1.0, 1.7, 3.0] {
            let fd = (smooth_min_one(s + h, 1e-3) - smooth_min_one(s - h, 1e-3)) / (2.0 * h);
            assert!((fd - smooth_min_one_deriv(s, 1e-3)).abs() < 1e-6);
        }
    }

    #[test]
    fn config_validation() {
        assert!(VarifoldKernelConfig::new(1.0, 1e-6).is_ok());
        assert!(VarifoldKernelConfig::new(0.0, 1e-6).is_err());
        assert!(VarifoldKernelConfig::new(1.0, 0.0).is_err());
        assert!(VarifoldKernelConfig::new(1.0, 0.1).is_err());
    }
}
