//! Unprojection of depth maps into point clouds and surface-normal
//! estimation by local total-least-squares plane fitting.

use crate::camera::CameraIntrinsics;
use crate::cloud::{NormalMap, PointCloud};
use crate::depth::DepthMap;
use crate::error::{Error, Result};
use crate::math::{fit_plane, Moments, Vec3};

/// Unprojects every valid pixel through the pinhole model:
/// `x = (u - u0) d / f`, `y = (v - v0) d / f`, `z = d`.
pub fn unproject(depth: &DepthMap, cam: &CameraIntrinsics) -> Result<PointCloud> {
    let mut points = Vec::with_capacity(depth.valid_count());
    let mut pixels = Vec::with_capacity(depth.valid_count());
    for v in 0..depth.height() {
        for u in 0..depth.width() {
            if let Some(d) = depth.get(u, v) {
                points.push(pixel_to_point(u, v, d, cam));
                pixels.push((u as u32, v as u32));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyInput("depth map has no valid pixels".into()));
    }
    PointCloud::new(points, Some(pixels), None)
}

#[inline]
pub(crate) fn pixel_to_point(u: usize, v: usize, d: f64, cam: &CameraIntrinsics) -> Vec3 {
    [
        (u as f64 - cam.u0) * d / cam.f,
        (v as f64 - cam.v0) * d / cam.f,
        d,
    ]
}

/// Orients `n` toward the camera (`n.z <= 0`) with a deterministic tie-break
/// for normals orthogonal to the optical axis.
#[inline]
pub fn orient_toward_camera(n: Vec3) -> Vec3 {
    let flip = n[2] > 0.0
        || (n[2] == 0.0 && (n[0] > 0.0 || (n[0] == 0.0 && n[1] > 0.0)));
    if flip {
        [-n[0], -n[1], -n[2]]
    } else {
        n
    }
}

/// Summed-area tables of the point moments needed for windowed plane fits.
struct MomentTables {
    w: usize,
    // one (w+1)*(h+1) cumulative table per moment channel
    tables: [Vec<f64>; 10],
}

impl MomentTables {
    fn build(depth: &DepthMap, cam: &CameraIntrinsics) -> Self {
        let (w, h) = (depth.width(), depth.height());
        let stride = w + 1;
        let mut tables: [Vec<f64>; 10] =
            std::array::from_fn(|_| vec![0.0; stride * (h + 1)]);
        for v in 0..h {
            for u in 0..w {
                let mut vals = [0.0f64; 10];
                if let Some(d) = depth.get(u, v) {
                    let p = pixel_to_point(u, v, d, cam);
                    vals = [
                        1.0,
                        p[0],
                        p[1],
                        p[2],
                        p[0] * p[0],
                        p[0] * p[1],
                        p[0] * p[2],
                        p[1] * p[1],
                        p[1] * p[2],
                        p[2] * p[2],
                    ];
                }
                let i = (v + 1) * stride + (u + 1);
                for (t, val) in tables.iter_mut().zip(vals) {
                    t[i] = val + t[i - 1] + t[i - stride] - t[i - stride - 1];
                }
            }
        }
        Self { w, tables }
    }

    /// Moments over the pixel rectangle `[u0, u1) x [v0, v1)`.
    fn window(&self, u0: usize, u1: usize, v0: usize, v1: usize) -> Moments {
        let stride = self.w + 1;
        let sum = |t: &Vec<f64>| {
            t[v1 * stride + u1] - t[v0 * stride + u1] - t[v1 * stride + u0]
                + t[v0 * stride + u0]
        };
        let s: [f64; 10] = std::array::from_fn(|k| sum(&self.tables[k]));
        Moments {
            n: s[0],
            sx: s[1],
            sy: s[2],
            sz: s[3],
            sxx: s[4],
            sxy: s[5],
            sxz: s[6],
            syy: s[7],
            syz: s[8],
            szz: s[9],
        }
    }
}

/// Estimates a per-pixel surface normal by fitting a total-least-squares
/// plane to the unprojected points of the `window x window` neighborhood.
///
/// `window` must be odd and >= 3. Neighborhoods use valid pixels only;
/// pixels with fewer than 3 valid neighbors, or with a degenerate
/// (collinear) neighborhood, come out invalid. Valid normals are unit
/// length and oriented toward the camera.
pub fn estimate_normals(
    depth: &DepthMap,
    cam: &CameraIntrinsics,
    window: usize,
) -> Result<NormalMap> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "normal window must be odd and >= 3, got {window}"
        )));
    }
    let (w, h) = (depth.width(), depth.height());
    let half = window / 2;
    let tables = MomentTables::build(depth, cam);

    let mut normals = vec![[0.0, 0.0, -1.0]; w * h];
    let mut mask = vec![false; w * h];
    for v in 0..h {
        let v0 = v.saturating_sub(half);
        let v1 = (v + half + 1).min(h);
        for u in 0..w {
            if !depth.is_valid(u, v) {
                continue;
            }
            let u0 = u.saturating_sub(half);
            let u1 = (u + half + 1).min(w);
            let m = tables.window(u0, u1, v0, v1);
            if let Some(fit) = fit_plane(&m) {
                let i = v * w + u;
                normals[i] = orient_toward_camera(fit.normal);
                mask[i] = true;
            }
        }
    }
    NormalMap::new(w, h, normals, mask)
}
