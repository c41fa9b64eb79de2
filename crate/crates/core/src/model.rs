//! The potential and its parameters.
//!
//! The well is the infinitely deep box `(-L, L)` with two purely imaginary
//! steps: the potential is `+i g` for `x > ell`, `-i g` for `x < -ell` and zero
//! in between. Every solver in the crate works in the dimensionless pair
//!
//! ```text
//! lambda = ell / (L - ell)        Z = g (L - ell)^2 / 2
//! ```
//!
//! together with the length `L - ell`, which converts the scaled wavenumber
//! `R` back to an energy `E = R^2 / (L - ell)^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Physical description of the well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Half-width of the box.
    pub l: f64,
    /// Onset of the imaginary steps, `0 <= ell < L`.
    pub ell: f64,
    /// Height of the imaginary steps, `g >= 0`.
    pub g: f64,
}

impl PhysicalParams {
    pub fn new(l: f64, ell: f64, g: f64) -> Result<Self> {
        let p = PhysicalParams { l, ell, g };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l.is_finite() && self.l > 0.0) {
            return Err(invalid(format!("L must be finite and positive, got {}", self.l)));
        }
        if !(self.ell.is_finite() && self.ell >= 0.0) {
            return Err(invalid(format!("ell must be non-negative, got {}", self.ell)));
        }
        if self.ell >= self.l {
            return Err(invalid(format!("ell must be smaller than L (ell = {}, L = {})", self.ell, self.l)));
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(invalid(format!("g must be finite and non-negative, got {}", self.g)));
        }
        Ok(())
    }
}

/// Dimensionless parameters used by every solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledParams {
    /// Shift ratio `ell / (L - ell)`.
    pub lambda: f64,
    /// Scaled coupling `g (L - ell)^2 / 2`.
    pub z: f64,
    /// Length `L - ell` of each imaginary step.
    pub scale: f64,
}

impl ScaledParams {
    pub fn new(lambda: f64, z: f64, scale: f64) -> Result<Self> {
        let p = ScaledParams { lambda, z, scale };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with unit step length, the natural choice when only the
    /// dimensionless spectrum `R_n` matters.
    pub fn unit(lambda: f64, z: f64) -> Result<Self> {
        Self::new(lambda, z, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(invalid(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.z.is_finite() && self.z >= 0.0) {
            return Err(invalid(format!("Z must be finite and >= 0, got {}", self.z)));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(invalid(format!("scale must be finite and > 0, got {}", self.scale)));
        }
        Ok(())
    }

    /// Inverse of [`scale_params`].
    pub fn to_physical(&self) -> PhysicalParams {
        let ell = self.lambda * self.scale;
        PhysicalParams { l: ell + self.scale, ell, g: 2.0 * self.z / (self.scale * self.scale) }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        ScaledParams { lambda, ..*self }
    }

    pub fn with_z(&self, z: f64) -> Self {
        ScaledParams { z, ..*self }
    }

    pub fn energy(&self, r: f64) -> f64 {
        energy_from_r(r, self.scale)
    }
}

pub fn scale_params(p: &PhysicalParams) -> Result<ScaledParams> {
    p.validate()?;
    let scale = p.l - p.ell;
    Ok(ScaledParams { lambda: p.ell / scale, z: p.g * scale * scale / 2.0, scale })
}

/// Complex potential at a point strictly inside the box.
///
/// Exactly at `x = +-ell` the step is ambiguous; the point is assigned to the
/// inner (zero) region.
pub fn potential_at(p: &PhysicalParams, x: f64) -> Result<Complex64> {
    if !(x.abs() < p.l) {
        return Err(Error::Domain { x, half_width: p.l });
    }
    let v = if x > p.ell {
        p.g
    } else if x < -p.ell {
        -p.g
    } else {
        0.0
    };
    Ok(Complex64::new(0.0, v))
}

#[inline]
pub fn energy_from_r(r: f64, scale: f64) -> f64 {
    r * r / (scale * scale)
}
