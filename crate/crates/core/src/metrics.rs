//! Evaluation metrics: AbsRel, delta1, WHDR, locally scale-invariant RMSE,
//! depth boundary errors and planarity errors.

use crate::camera::CameraIntrinsics;
use crate::depth::DepthMap;
use crate::error::{Error, Result};
use crate::geometry::pixel_to_point;
use crate::losses::{align_scale_shift, ordinal_label};
use crate::math::{dot, fit_plane, Moments};
use crate::sampling::{detect_edges, PointPairSet, EDGE_THRESHOLD};
use serde::{Deserialize, Serialize};

/// Default WHDR ordinal-equality threshold.
pub const WHDR_TAU: f64 = 0.02;
/// Depth-boundary-error truncation cap, in pixels.
pub const DBE_CAP: f64 = 10.0;
/// Clamp applied to aligned predictions before ratio tests.
pub const RATIO_EPS: f64 = 1e-6;

/// Flat record of every metric; absent entries were not computable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub absrel: Option<f64>,
    pub delta1: Option<f64>,
    pub whdr: Option<f64>,
    pub lsiv: Option<f64>,
    pub dbe_acc: Option<f64>,
    pub dbe_comp: Option<f64>,
    pub pe_plan: Option<f64>,
    pub pe_orie: Option<f64>,
}

impl MetricReport {
    /// Fixed field order used by every emitter.
    pub const FIELDS: [&'static str; 8] = [
        "absrel", "delta1", "whdr", "lsiv", "dbe_acc", "dbe_comp", "pe_plan", "pe_orie",
    ];

    pub fn get(&self, field: &str) -> Option<f64> {
        match field {
            "absrel" => self.absrel,
            "delta1" => self.delta1,
            "whdr" => self.whdr,
            "lsiv" => self.lsiv,
            "dbe_acc" => self.dbe_acc,
            "dbe_comp" => self.dbe_comp,
            "pe_plan" => self.pe_plan,
            "pe_orie" => self.pe_orie,
            _ => None,
        }
    }
}

fn maybe_align(pred: &DepthMap, gt: &DepthMap, prealign: bool) -> Result<DepthMap> {
    if prealign {
        Ok(align_scale_shift(pred, gt)?.apply(pred))
    } else {
        pred.common_mask(gt)?; // dimension check
        Ok(pred.clone())
    }
}

/// Mean absolute relative error `|d - d*| / d*` over common valid pixels with
/// positive ground truth, after optional scale-shift alignment.
pub fn absrel(pred: &DepthMap, gt: &DepthMap, prealign: bool) -> Result<f64> {
    let aligned = maybe_align(pred, gt, prealign)?;
    let mask = aligned.common_mask(gt)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for ((&d, &g), m) in aligned.values().iter().zip(gt.values()).zip(&mask) {
        if *m && g > 0.0 {
            sum += (d - g).abs() / g;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyInput(
            "no valid pixels with positive ground truth".into(),
        ));
    }
    Ok(sum / n as f64)
}

/// Fraction of pixels with `max(d/d*, d*/d) < 1.25`; the aligned prediction
/// is clamped to [`RATIO_EPS`] before the ratio.
pub fn delta1(pred: &DepthMap, gt: &DepthMap, prealign: bool) -> Result<f64> {
    let aligned = maybe_align(pred, gt, prealign)?;
    let mask = aligned.common_mask(gt)?;
    let mut pass = 0usize;
    let mut n = 0usize;
    for ((&d, &g), m) in aligned.values().iter().zip(gt.values()).zip(&mask) {
        if *m && g > 0.0 {
            let d = d.max(RATIO_EPS);
            if (d / g).max(g / d) < 1.25 {
                pass += 1;
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyInput(
            "no valid pixels with positive ground truth".into(),
        ));
    }
    Ok(pass as f64 / n as f64)
}

/// Weighted human disagreement rate over a sampled pair set.
///
/// Ground-truth pairs are given a closer/farther/equal label by ratio
/// threshold `tau`. A pair with an ordered ground-truth label disagrees when
/// the prediction does not strictly reproduce that order; near-equal
/// ground-truth pairs never count as disagreements, keeping the metric
/// invariant under strictly monotonic transforms of the prediction.
/// Pairs with non-positive or invalid values are skipped.
pub fn whdr(pred: &DepthMap, gt: &DepthMap, pairs: &PointPairSet, tau: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("empty pair set".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let mut disagree = 0usize;
    let mut total = 0usize;
    for pair in pairs.iter() {
        let ((ua, va), (ub, vb)) = pair.pixels;
        let (Some(ga), Some(gb)) = (gt.get(ua, va), gt.get(ub, vb)) else {
            continue;
        };
        let (Some(da), Some(db)) = (pred.get(ua, va), pred.get(ub, vb)) else {
            continue;
        };
        let Some(label) = ordinal_label(ga, gb, tau) else {
            continue;
        };
        total += 1;
        let agrees = match label {
            1 => da > db,
            -1 => da < db,
            _ => true,
        };
        if !agrees {
            disagree += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyInput("no usable pairs".into()));
    }
    Ok(disagree as f64 / total as f64)
}

/// Locally scale-invariant RMSE.
///
/// Per region, fits the least-squares scale `s` minimizing `sum (s d - d*)^2`
/// and computes the RMSE of `s d - d*`; the result is the mean over regions.
/// Regions whose prediction is identically zero are skipped and counted.
/// With `regions = None` the whole image forms one region.
pub fn lsiv(pred: &DepthMap, gt: &DepthMap, regions: Option<&[Vec<bool>]>) -> Result<f64> {
    let base = pred.common_mask(gt)?;
    let whole = vec![base.clone()];
    let region_masks: Vec<Vec<bool>> = match regions {
        None => whole,
        Some(rs) => rs
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&base)
                    .map(|(&a, &b)| a && b)
                    .collect::<Vec<bool>>()
            })
            .collect(),
    };
    let mut total = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for mask in &region_masks {
        let (mut sdd, mut sdg, mut n) = (0.0, 0.0, 0usize);
        for ((&d, &g), m) in pred.values().iter().zip(gt.values()).zip(mask) {
            if *m {
                sdd += d * d;
                sdg += d * g;
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::EmptyInput("region has no valid pixels".into()));
        }
        if sdd <= 0.0 {
            skipped += 1;
            continue;
        }
        let s = sdg / sdd;
        let mut sq = 0.0;
        for ((&d, &g), m) in pred.values().iter().zip(gt.values()).zip(mask) {
            if *m {
                sq += (s * d - g) * (s * d - g);
            }
        }
        total += (sq / n as f64).sqrt();
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptyInput(format!(
            "all {skipped} regions skipped (zero prediction)"
        )));
    }
    Ok(total / used as f64)
}

/// Depth boundary errors: truncated mean distances between the edge maps of
/// prediction and ground truth, in both directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthBoundaryError {
    /// Mean truncated distance from predicted edges to the nearest gt edge.
    pub dbe_acc: Option<f64>,
    /// Mean truncated distance from gt edges to the nearest predicted edge.
    pub dbe_comp: Option<f64>,
}

/// Extracts edges from both maps with the shared default threshold and
/// measures truncated Euclidean edge-to-edge distances (cap [`DBE_CAP`]).
/// A direction whose source map has no edges is reported absent.
pub fn dbe(pred: &DepthMap, gt: &DepthMap) -> Result<DepthBoundaryError> {
    pred.common_mask(gt)?;
    let pe = detect_edges(pred, EDGE_THRESHOLD);
    let ge = detect_edges(gt, EDGE_THRESHOLD);
    let collect = |flags: &[bool], w: usize| -> Vec<(f64, f64)> {
        flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| ((i % w) as f64, (i / w) as f64))
            .collect()
    };
    let pred_px = collect(&pe.flags, pe.width);
    let gt_px = collect(&ge.flags, ge.width);
    let mean_trunc_dist = |from: &[(f64, f64)], to: &[(f64, f64)]| -> Option<f64> {
        if from.is_empty() {
            return None;
        }
        let mut sum = 0.0;
        for &(x, y) in from {
            let mut best = DBE_CAP * DBE_CAP;
            for &(tx, ty) in to {
                let d2 = (x - tx) * (x - tx) + (y - ty) * (y - ty);
                if d2 < best {
                    best = d2;
                }
            }
            sum += best.sqrt().min(DBE_CAP);
        }
        Some(sum / from.len() as f64)
    };
    Ok(DepthBoundaryError {
        dbe_acc: mean_trunc_dist(&pred_px, &gt_px),
        dbe_comp: mean_trunc_dist(&gt_px, &pred_px),
    })
}

/// Planarity errors over ground-truth-planar regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarityError {
    /// Mean RMS point-to-fitted-plane distance, scene units.
    pub pe_plan: f64,
    /// Mean angle between predicted and ground-truth plane normals, degrees.
    pub pe_orie: f64,
    pub skipped_masks: usize,
}

/// Fits 3D planes to the scale-shift-aligned predicted points and to the
/// ground-truth points of each mask; reports flatness (RMS residual of the
/// predicted points) and orientation (angle between the two fitted normals).
/// Masks with fewer than 3 usable points are skipped and counted.
pub fn pe(
    pred: &DepthMap,
    gt: &DepthMap,
    cam: &CameraIntrinsics,
    plane_masks: &[Vec<bool>],
) -> Result<PlanarityError> {
    if plane_masks.is_empty() {
        return Err(Error::EmptyInput("no plane masks".into()));
    }
    let aligned = align_scale_shift(pred, gt)?.apply(pred);
    let base = aligned.common_mask(gt)?;
    let (w, h) = (gt.width(), gt.height());
    let mut plan_sum = 0.0;
    let mut orie_sum = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for mask in plane_masks {
        let mut mp = Moments::default();
        let mut mg = Moments::default();
        for v in 0..h {
            for u in 0..w {
                let i = v * w + u;
                if mask[i] && base[i] {
                    mp.add(pixel_to_point(u, v, aligned.values()[i], cam));
                    mg.add(pixel_to_point(u, v, gt.values()[i], cam));
                }
            }
        }
        let (Some(fp), Some(fg)) = (fit_plane(&mp), fit_plane(&mg)) else {
            skipped += 1;
            continue;
        };
        plan_sum += (fp.sq_residual_sum / mp.n).sqrt();
        let c = dot(fp.normal, fg.normal).abs().clamp(0.0, 1.0);
        orie_sum += c.acos().to_degrees();
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptyInput(format!(
            "all {skipped} plane masks skipped"
        )));
    }
    Ok(PlanarityError {
        pe_plan: plan_sum / used as f64,
        pe_orie: orie_sum / used as f64,
        skipped_masks: skipped,
    })
}
