//! Point clouds and per-pixel normal maps.

use crate::error::{Error, Result};
use crate::math::{norm, Vec3};

/// A set of 3D points, optionally carrying source pixel indices and unit normals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub source_pixel: Option<Vec<(u32, u32)>>,
    pub normals: Option<Vec<Vec3>>,
}

impl PointCloud {
    pub fn new(
        points: Vec<Vec3>,
        source_pixel: Option<Vec<(u32, u32)>>,
        normals: Option<Vec<Vec3>>,
    ) -> Result<Self> {
        if let Some(sp) = &source_pixel {
            if sp.len() != points.len() {
                return Err(Error::Domain(
                    "source_pixel length does not match points".into(),
                ));
            }
        }
        if let Some(ns) = &normals {
            if ns.len() != points.len() {
                return Err(Error::Domain("normals length does not match points".into()));
            }
            for (i, n) in ns.iter().enumerate() {
                if (norm(*n) - 1.0).abs() > 1e-9 {
                    return Err(Error::Domain(format!(
                        "normal {i} is not unit length (|n| = {})",
                        norm(*n)
                    )));
                }
            }
        }
        Ok(Self {
            points,
            source_pixel,
            normals,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Per-pixel unit normals with a validity mask.
///
/// Valid normals are oriented toward the camera: `n . (0,0,1) <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    width: usize,
    height: usize,
    normals: Vec<Vec3>,
    mask: Vec<bool>,
}

impl NormalMap {
    pub fn new(width: usize, height: usize, normals: Vec<Vec3>, mask: Vec<bool>) -> Result<Self> {
        let n = width * height;
        if normals.len() != n || mask.len() != n {
            return Err(Error::Domain(format!(
                "expected {n} entries, got {} normals / {} mask flags",
                normals.len(),
                mask.len()
            )));
        }
        for (i, (v, &m)) in normals.iter().zip(&mask).enumerate() {
            if !m {
                continue;
            }
            if (norm(*v) - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!("normal at {i} is not unit length")));
            }
            if v[2] > 0.0 {
                return Err(Error::Domain(format!(
                    "normal at {i} faces away from the camera (z = {})",
                    v[2]
                )));
            }
        }
        Ok(Self {
            width,
            height,
            normals,
            mask,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Option<Vec3> {
        let i = self.index(u, v);
        self.mask[i].then(|| self.normals[i])
    }

    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.mask[self.index(u, v)]
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_unit_normals() {
        let r = NormalMap::new(1, 1, vec![[0.0, 0.0, -2.0]], vec![true]);
        assert!(r.is_err());
    }

    #[test]
    fn rejects_away_facing_normals() {
        let r = NormalMap::new(1, 1, vec![[0.0, 0.0, 1.0]], vec![true]);
        assert!(r.is_err());
        // invalid pixels are unconstrained
        assert!(NormalMap::new(1, 1, vec![[0.0, 0.0, 1.0]], vec![false]).is_ok());
    }

    #[test]
    fn cloud_length_checks() {
        let pts = vec![[0.0, 0.0, 1.0], [1.0, 0.0, 1.0]];
        assert!(PointCloud::new(pts.clone(), Some(vec![(0, 0)]), None).is_err());
        assert!(PointCloud::new(pts, Some(vec![(0, 0), (1, 0)]), None).is_ok());
    }
}
