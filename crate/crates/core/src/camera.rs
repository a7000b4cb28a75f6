//! Pinhole camera intrinsics.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Pinhole intrinsics: optical center `(u0, v0)` and focal length `f`, all in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub u0: f64,
    pub v0: f64,
    pub f: f64,
}

impl CameraIntrinsics {
    pub fn new(u0: f64, v0: f64, f: f64) -> Result<Self> {
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::Domain(format!("focal length must be positive, got {f}")));
        }
        Ok(Self { u0, v0, f })
    }

    /// Intrinsics for an image of `width` x `height` pixels with the given
    /// horizontal field of view: `f = (width/2) / tan(fov/2)`, principal point
    /// at the image center.
    pub fn from_fov(width: usize, height: usize, fov_deg: f64) -> Result<Self> {
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(Error::Domain(format!(
                "field of view must be in (0, 180) degrees, got {fov_deg}"
            )));
        }
        let half = (fov_deg.to_radians() / 2.0).tan();
        Self::new(
            width as f64 / 2.0,
            height as f64 / 2.0,
            width as f64 / 2.0 / half,
        )
    }

    /// Scales the focal length by `alpha`, leaving the optical center unchanged.
    pub fn scale_focal(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!(
                "focal scale must be positive, got {alpha}"
            )));
        }
        Self::new(self.u0, self.v0, self.f * alpha)
    }
}
