use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

pub const DEFAULT_SCALE_DIVISORS: [f64; 4] = [1.0, 4.0, 8.0, 16.0];

/// Sum of Gaussians `K(x, y) = Σ_s exp(-|x - y|² / (σ₀/s)²)` over the scale
/// divisors `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelSpec", into = "KernelSpec")]
pub struct DeformationKernel {
    sigma0: f64,
    scale_divisors: Vec<f64>,
    inv_widths_sq: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct KernelSpec {
    sigma0: f64,
    scale_divisors: Vec<f64>,
}

impl TryFrom<KernelSpec> for DeformationKernel {
    type Error = Error;

    fn try_from(spec: KernelSpec) -> Result<Self> {
        DeformationKernel::new(spec.sigma0, spec.scale_divisors)
    }
}

impl From<DeformationKernel> for KernelSpec {
    fn from(k: DeformationKernel) -> Self {
        KernelSpec {
            sigma0: k.sigma0,
            scale_divisors: k.scale_divisors,
        }
    }
}

impl DeformationKernel {
    pub fn new(sigma0: f64, scale_divisors: Vec<f64>) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma0 must be positive, got {sigma0}"
            )));
        }
        if scale_divisors.is_empty() {
            return Err(Error::InvalidConfig("no scale divisors".into()));
        }
        for (i, &s) in scale_divisors.iter().enumerate() {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "scale divisor {s} is not positive"
                )));
            }
            if scale_divisors[..i].contains(&s) {
                return Err(Error::InvalidConfig(format!("scale divisor {s} repeated")));
            }
        }
        let inv_widths_sq = scale_divisors
            .iter()
            .map(|s| (s / sigma0) * (s / sigma0))
            .collect();
        Ok(DeformationKernel {
            sigma0,
            scale_divisors,
            inv_widths_sq,
        })
    }

    /// Divisors `[1, 4, 8, 16]`.
    pub fn with_default_scales(sigma0: f64) -> Result<Self> {
        Self::new(sigma0, DEFAULT_SCALE_DIVISORS.to_vec())
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn scale_divisors(&self) -> &[f64] {
        &self.scale_divisors
    }

    /// Kernel as a function of the squared distance.
    #[inline]
    pub fn value_sq(&self, r2: f64) -> f64 {
        self.inv_widths_sq.iter().map(|a| (-a * r2).exp()).sum()
    }

    /// `(f, f', f'')` with respect to the squared distance.
    #[inline]
    pub(crate) fn derivatives_sq(&self, r2: f64) -> (f64, f64, f64) {
        let mut f = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for a in &self.inv_widths_sq {
            let e = (-a * r2).exp();
            f += e;
            d1 -= a * e;
            d2 += a * a * e;
        }
        (f, d1, d2)
    }

    #[inline]
    pub(crate) fn value_and_slope_sq(&self, r2: f64) -> (f64, f64) {
        let mut f = 0.0;
        let mut d1 = 0.0;
        for a in &self.inv_widths_sq {
            let e = (-a * r2).exp();
            f += e;
            d1 -= a * e;
        }
        (f, d1)
    }
}

/// Scalar deformation kernel between two points.
pub fn kv_scalar(x: &Vec3, y: &Vec3, kernel: &DeformationKernel) -> f64 {
    kernel.value_sq((x - y).norm_squared())
}
