//! Depth rasters with per-pixel validity.

use crate::error::{Error, Result};

/// A 2D raster of per-pixel depth values plus a validity mask.
///
/// Depth values are in scene units of arbitrary scale; the library never
/// converts units implicitly. Invalid pixels are excluded from every
/// statistic, loss and metric.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl DepthMap {
    /// Builds a depth map from row-major values and a matching mask.
    ///
    /// Masked-valid values must be finite; non-finite values under a valid
    /// mask flag are rejected.
    pub fn new(width: usize, height: usize, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain("depth map dimensions must be positive".into()));
        }
        let n = width * height;
        if values.len() != n || mask.len() != n {
            return Err(Error::Domain(format!(
                "expected {} entries, got {} values / {} mask flags",
                n,
                values.len(),
                mask.len()
            )));
        }
        for (i, (&v, &m)) in values.iter().zip(&mask).enumerate() {
            if m && !v.is_finite() {
                return Err(Error::Domain(format!(
                    "non-finite value {v} at valid pixel index {i}"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            values,
            mask,
        })
    }

    /// All pixels valid.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(width, height, values, vec![true; n])
    }

    /// Builds a map where non-finite values are marked invalid instead of rejected.
    pub fn from_raw(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        let mask = values.iter().map(|v| v.is_finite()).collect();
        Self::new(width, height, values, mask)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        let i = self.index(u, v);
        self.mask[i].then(|| self.values[i])
    }

    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.mask[self.index(u, v)]
    }

    /// Valid values in row-major pixel order.
    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.mask)
            .filter_map(|(&v, &m)| m.then_some(v))
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Applies `f` to every valid value, keeping the mask.
    pub fn map_valid(&self, mut f: impl FnMut(f64) -> f64) -> DepthMap {
        let values = self
            .values
            .iter()
            .zip(&self.mask)
            .map(|(&v, &m)| if m { f(v) } else { v })
            .collect();
        DepthMap {
            width: self.width,
            height: self.height,
            values,
            mask: self.mask.clone(),
        }
    }

    /// Adds a constant offset to every valid value; the mask is unchanged.
    pub fn apply_shift(&self, delta: f64) -> DepthMap {
        self.map_valid(|d| d + delta)
    }

    /// Affinely maps valid values so that min = 0 and max = 1.
    ///
    /// Errors on maps without at least two distinct valid values.
    pub fn normalize_unit_range(&self) -> Result<DepthMap> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in self.valid_values() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Err(Error::EmptyInput("no valid pixels".into()));
        }
        if hi - lo <= 0.0 {
            return Err(Error::Degenerate(
                "constant depth map cannot be normalized to unit range".into(),
            ));
        }
        let range = hi - lo;
        Ok(self.map_valid(|d| (d - lo) / range))
    }

    /// Intersection of the two validity masks; dimensions must match.
    pub fn common_mask(&self, other: &DepthMap) -> Result<Vec<bool>> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Domain(format!(
                "dimension mismatch: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(self
            .mask
            .iter()
            .zip(&other.mask)
            .map(|(&a, &b)| a && b)
            .collect())
    }
}
