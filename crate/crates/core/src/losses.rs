//! Depth training losses as pure numerical routines: image-level normalized
//! regression (ILNR), pair-wise normal (PWN), multi-scale gradient (MSG),
//! ordinal ranking loss, the rival normalizations, and the closed-form
//! scale-shift alignment used throughout.

use crate::camera::CameraIntrinsics;
use crate::cloud::NormalMap;
use crate::depth::DepthMap;
use crate::error::{Error, Result};
use crate::geometry::estimate_normals;
use crate::math::dot;
use crate::sampling::PointPairSet;

/// Floor applied to every normalizing denominator.
pub const EPS_DENOM: f64 = 1e-6;

/// Statistics of a depth map after trimming the lowest and highest 10% of
/// valid values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimmedStats {
    pub mu_trim: f64,
    pub sigma_trim: f64,
    pub kept_count: usize,
}

/// Mean and population standard deviation of the valid values after removing
/// `floor(0.1 N)` lowest and `floor(0.1 N)` highest values.
pub fn trimmed_stats(depth: &DepthMap) -> Result<TrimmedStats> {
    let mut vals: Vec<f64> = depth.valid_values().collect();
    if vals.is_empty() {
        return Err(Error::EmptyInput("no valid pixels".into()));
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cut = vals.len() / 10;
    let kept = &vals[cut..vals.len() - cut];
    let n = kept.len() as f64;
    let mu = kept.iter().sum::<f64>() / n;
    let var = kept.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    Ok(TrimmedStats {
        mu_trim: mu,
        sigma_trim: var.sqrt(),
        kept_count: kept.len(),
    })
}

/// Trimmed z-score normalization: `(d - mu_trim) / max(sigma_trim, eps)`.
pub fn ilnr_normalize(depth: &DepthMap) -> Result<DepthMap> {
    let stats = trimmed_stats(depth)?;
    let sigma = stats.sigma_trim.max(EPS_DENOM);
    Ok(depth.map_valid(|d| (d - stats.mu_trim) / sigma))
}

/// ILNR loss: mean over common valid pixels of
/// `|d - nd*| + |tanh(d/100) - tanh(nd*/100)|` with `nd* = ilnr_normalize(gt)`.
///
/// The trimmed-away pixels (lowest/highest 10% of gt by value) are removed
/// from the mean as well, not just from the normalization statistics; this is
/// what makes the loss itself insensitive to extreme gt outliers — a trimmed
/// z-score alone would still let the outlier pixel's own residual blow up.
pub fn ilnr_loss(pred: &DepthMap, gt: &DepthMap) -> Result<f64> {
    let norm_gt = ilnr_normalize(gt)?;
    let mask = pred.common_mask(&norm_gt)?;
    // value range kept by the trim, on gt's original scale
    let mut sorted: Vec<f64> = gt.valid_values().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cut = sorted.len() / 10;
    let (keep_lo, keep_hi) = (sorted[cut], sorted[sorted.len() - 1 - cut]);
    let mut sum = 0.0;
    let mut n = 0usize;
    for (i, ((&d, &g), m)) in pred
        .values()
        .iter()
        .zip(norm_gt.values())
        .zip(&mask)
        .enumerate()
    {
        if *m && (keep_lo..=keep_hi).contains(&gt.values()[i]) {
            sum += (d - g).abs() + ((d / 100.0).tanh() - (g / 100.0).tanh()).abs();
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyInput("no common valid pixels".into()));
    }
    Ok(sum / n as f64)
}

/// Min-max normalization to `[0, 1]`; errors on constant maps.
pub fn normalize_minmax(depth: &DepthMap) -> Result<DepthMap> {
    depth.normalize_unit_range()
}

/// Z-score normalization `(d - mu) / max(sigma, eps)` over valid pixels.
pub fn normalize_zscore(depth: &DepthMap) -> Result<DepthMap> {
    let n = depth.valid_count();
    if n == 0 {
        return Err(Error::EmptyInput("no valid pixels".into()));
    }
    let mu = depth.valid_values().sum::<f64>() / n as f64;
    let var = depth.valid_values().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n as f64;
    let sigma = var.sqrt().max(EPS_DENOM);
    Ok(depth.map_valid(|d| (d - mu) / sigma))
}

/// Median-absolute-deviation normalization `(d - median) / max(MAD, eps)`.
pub fn normalize_mad(depth: &DepthMap) -> Result<DepthMap> {
    let mut vals: Vec<f64> = depth.valid_values().collect();
    if vals.is_empty() {
        return Err(Error::EmptyInput("no valid pixels".into()));
    }
    let med = median(&mut vals);
    let mut devs: Vec<f64> = vals.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&mut devs).max(EPS_DENOM);
    Ok(depth.map_valid(|d| (d - med) / mad))
}

fn median(vals: &mut [f64]) -> f64 {
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = vals.len();
    if n.is_multiple_of(2) {
        (vals[n / 2 - 1] + vals[n / 2]) / 2.0
    } else {
        vals[n / 2]
    }
}

/// Closed-form least-squares scale and shift aligning `pred` to `gt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentParams {
    pub scale: f64,
    pub shift: f64,
}

impl AlignmentParams {
    pub fn apply(&self, pred: &DepthMap) -> DepthMap {
        pred.map_valid(|d| self.scale * d + self.shift)
    }
}

/// Minimizes `sum (s d + t - d*)^2` over the common valid pixels.
///
/// Requires at least 2 common valid pixels with non-constant `pred`.
pub fn align_scale_shift(pred: &DepthMap, gt: &DepthMap) -> Result<AlignmentParams> {
    let mask = pred.common_mask(gt)?;
    let mut n = 0.0;
    let (mut sd, mut sg, mut sdd, mut sdg) = (0.0, 0.0, 0.0, 0.0);
    for ((&d, &g), m) in pred.values().iter().zip(gt.values()).zip(&mask) {
        if *m {
            n += 1.0;
            sd += d;
            sg += g;
            sdd += d * d;
            sdg += d * g;
        }
    }
    if n < 2.0 {
        return Err(Error::EmptyInput(
            "need at least 2 common valid pixels".into(),
        ));
    }
    let det = n * sdd - sd * sd;
    // det = n * sum (d - mean)^2; zero iff pred is constant
    if det <= 1e-12 * n * sdd.max(1.0) {
        return Err(Error::Degenerate(
            "constant prediction: scale-shift system is rank deficient".into(),
        ));
    }
    Ok(AlignmentParams {
        scale: (n * sdg - sd * sg) / det,
        shift: (sdd * sg - sd * sdg) / det,
    })
}

/// Least-squares scale (no shift) minimizing `sum (s d - d*)^2`.
/// Returns `None` when `pred` is identically zero on the common mask.
pub fn align_scale_only(pred: &DepthMap, gt: &DepthMap) -> Result<Option<f64>> {
    let mask = pred.common_mask(gt)?;
    let (mut sdd, mut sdg) = (0.0, 0.0);
    let mut n = 0usize;
    for ((&d, &g), m) in pred.values().iter().zip(gt.values()).zip(&mask) {
        if *m {
            sdd += d * d;
            sdg += d * g;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyInput("no common valid pixels".into()));
    }
    if sdd <= 0.0 {
        return Ok(None);
    }
    Ok(Some(sdg / sdd))
}

/// Pair-wise normal loss: mean over pairs of `|nA.nB - n*A.n*B|`.
pub fn pwn_loss(
    pred_normals: &NormalMap,
    gt_normals: &NormalMap,
    pairs: &PointPairSet,
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("empty pair set".into()));
    }
    let mut sum = 0.0;
    for pair in pairs.iter() {
        let ((ua, va), (ub, vb)) = pair.pixels;
        let na = pred_normals.get(ua, va).ok_or_else(|| {
            Error::Domain(format!("pair endpoint ({ua},{va}) invalid in predicted normals"))
        })?;
        let nb = pred_normals.get(ub, vb).ok_or_else(|| {
            Error::Domain(format!("pair endpoint ({ub},{vb}) invalid in predicted normals"))
        })?;
        let ga = gt_normals.get(ua, va).ok_or_else(|| {
            Error::Domain(format!("pair endpoint ({ua},{va}) invalid in gt normals"))
        })?;
        let gb = gt_normals.get(ub, vb).ok_or_else(|| {
            Error::Domain(format!("pair endpoint ({ub},{vb}) invalid in gt normals"))
        })?;
        sum += (dot(na, nb) - dot(ga, gb)).abs();
    }
    Ok(sum / pairs.len() as f64)
}

/// Multi-scale gradient loss over `scales` dyadic strides.
///
/// At scale `k` (1-based) gradients are forward differences at stride
/// `2^(k-1)`; each scale contributes the mean absolute gradient difference
/// over its valid samples, and scales are summed. Scales too large for the
/// image contribute nothing; if every scale is empty the loss is undefined.
pub fn msg_loss(pred: &DepthMap, gt_normalized: &DepthMap, scales: usize) -> Result<f64> {
    if scales == 0 {
        return Err(Error::Domain("scale count must be >= 1".into()));
    }
    let mask = pred.common_mask(gt_normalized)?;
    let (w, h) = (pred.width(), pred.height());
    let pv = pred.values();
    let gv = gt_normalized.values();
    let valid = |u: usize, v: usize| mask[v * w + u];
    let mut total = 0.0;
    let mut any = false;
    for k in 0..scales {
        let stride = 1usize << k;
        let mut sum = 0.0;
        let mut n = 0usize;
        for v in 0..h {
            for u in 0..w {
                if !valid(u, v) {
                    continue;
                }
                let i = v * w + u;
                if u + stride < w && valid(u + stride, v) {
                    let j = i + stride;
                    sum += ((pv[j] - pv[i]) - (gv[j] - gv[i])).abs();
                    n += 1;
                }
                if v + stride < h && valid(u, v + stride) {
                    let j = i + stride * w;
                    sum += ((pv[j] - pv[i]) - (gv[j] - gv[i])).abs();
                    n += 1;
                }
            }
        }
        if n > 0 {
            total += sum / n as f64;
            any = true;
        }
    }
    if !any {
        return Err(Error::EmptyInput(
            "no valid gradient samples at any scale".into(),
        ));
    }
    Ok(total)
}

/// Ordinal label of a ground-truth pair under ratio threshold `tau`:
/// `+1` if `a/b > 1 + tau`, `-1` if `a/b < 1/(1+tau)`, `0` otherwise.
/// `None` when either value is non-positive.
pub fn ordinal_label(a: f64, b: f64, tau: f64) -> Option<i8> {
    if a <= 0.0 || b <= 0.0 {
        return None;
    }
    let r = a / b;
    if r > 1.0 + tau {
        Some(1)
    } else if r < 1.0 / (1.0 + tau) {
        Some(-1)
    } else {
        Some(0)
    }
}

/// Outcome of the ranking loss: the mean plus how many pairs were skipped
/// because of non-positive ground-truth values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingLoss {
    pub value: f64,
    pub used_pairs: usize,
    pub skipped_pairs: usize,
}

/// Ordinal ranking loss.
///
/// Ground-truth pairs are labeled by ratio threshold `tau`; ordered pairs
/// contribute `log(1 + exp(-l (dA - dB)))` and near-equal pairs contribute
/// `(dA - dB)^2`. Pairs with non-positive ground truth are skipped and
/// counted. `margin` is added to the ordered-pair gap requirement:
/// the loss argument becomes `l (dA - dB) - margin`.
pub fn ranking_loss(
    pred: &DepthMap,
    gt: &DepthMap,
    pairs: &PointPairSet,
    tau: f64,
    margin: f64,
) -> Result<RankingLoss> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput("empty pair set".into()));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for pair in pairs.iter() {
        let ((ua, va), (ub, vb)) = pair.pixels;
        let (da, db) = match (pred.get(ua, va), pred.get(ub, vb)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                skipped += 1;
                continue;
            }
        };
        let (ga, gb) = match (gt.get(ua, va), gt.get(ub, vb)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                skipped += 1;
                continue;
            }
        };
        let Some(label) = ordinal_label(ga, gb, tau) else {
            skipped += 1;
            continue;
        };
        sum += match label {
            0 => (da - db) * (da - db),
            l => {
                let t = f64::from(l) * (da - db) - margin;
                // log(1 + exp(-t)) computed stably
                if t > 0.0 {
                    (-t).exp().ln_1p()
                } else {
                    -t + t.exp().ln_1p()
                }
            }
        };
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptyInput("all pairs skipped".into()));
    }
    Ok(RankingLoss {
        value: sum / used as f64,
        used_pairs: used,
        skipped_pairs: skipped,
    })
}

/// Weights of the overall loss `lambda_p PWN + lambda_a ILNR + lambda_g MSG`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossWeights {
    pub lambda_p: f64,
    pub lambda_a: f64,
    pub lambda_g: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_p: 1.0,
            lambda_a: 1.0,
            lambda_g: 0.5,
        }
    }
}

/// Default number of MSG scales.
pub const MSG_SCALES: usize = 4;

/// Overall loss: `lambda_p L_PWN + lambda_a L_ILNR + lambda_g L_MSG`.
///
/// Surface normals for the PWN term are computed from `pred` after aligning
/// it to `gt` by least-squares scale and shift, and from `gt` directly, both
/// with the given camera and window. MSG compares `pred` against the
/// ILNR-normalized ground truth.
#[allow(clippy::too_many_arguments)]
pub fn overall_loss(
    pred: &DepthMap,
    gt: &DepthMap,
    cam: &CameraIntrinsics,
    pairs: &PointPairSet,
    weights: &LossWeights,
    normal_window: usize,
) -> Result<f64> {
    let mut total = 0.0;
    if weights.lambda_a != 0.0 {
        total += weights.lambda_a * ilnr_loss(pred, gt)?;
    }
    if weights.lambda_g != 0.0 {
        total += weights.lambda_g * msg_loss(pred, &ilnr_normalize(gt)?, MSG_SCALES)?;
    }
    if weights.lambda_p != 0.0 {
        let aligned = align_scale_shift(pred, gt)?.apply(pred);
        let pred_normals = estimate_normals(&aligned, cam, normal_window)?;
        let gt_normals = estimate_normals(gt, cam, normal_window)?;
        total += weights.lambda_p * pwn_loss(&pred_normals, &gt_normals, pairs)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{PairCategory, PointPair};

    fn map(values: &[f64]) -> DepthMap {
        DepthMap::from_values(values.len(), 1, values.to_vec()).unwrap()
    }

    fn map2d(w: usize, h: usize, values: Vec<f64>) -> DepthMap {
        DepthMap::from_values(w, h, values).unwrap()
    }

    /// Independent sort-and-slice oracle for the trimmed statistics.
    fn trimmed_oracle(values: &[f64]) -> (f64, f64, usize) {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cut = (0.1 * v.len() as f64).floor() as usize;
        let kept = &v[cut..v.len() - cut];
        let mu = kept.iter().sum::<f64>() / kept.len() as f64;
        let var = kept.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / kept.len() as f64;
        (mu, var.sqrt(), kept.len())
    }

    #[test]
    fn trimmed_stats_small_map_keeps_all() {
        let d = map(&[1.0, 2.0, 3.0, 4.0]);
        let s = trimmed_stats(&d).unwrap();
        let (mu, sigma, kept) = trimmed_oracle(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.kept_count, kept);
        assert_eq!(kept, 4);
        assert!((s.mu_trim - 2.5).abs() < 1e-12);
        assert!((s.mu_trim - mu).abs() < 1e-12);
        assert!((s.sigma_trim - sigma).abs() < 1e-12);
    }

    #[test]
    fn trimmed_stats_drops_extremes() {
        let vals: Vec<f64> = (1..=10).map(f64::from).collect();
        let d = map(&vals);
        let s = trimmed_stats(&d).unwrap();
        assert_eq!(s.kept_count, 8);
        assert!((s.mu_trim - 5.5).abs() < 1e-12);
        let (mu, sigma, _) = trimmed_oracle(&vals);
        assert!((s.mu_trim - mu).abs() < 1e-12);
        assert!((s.sigma_trim - sigma).abs() < 1e-12);
    }

    #[test]
    fn trimmed_stats_constant_map() {
        let d = map(&[3.0; 12]);
        let s = trimmed_stats(&d).unwrap();
        assert_eq!(s.sigma_trim, 0.0);
    }

    #[test]
    fn ilnr_normalize_constant_is_zero() {
        let d = map(&[7.0; 5]);
        let n = ilnr_normalize(&d).unwrap();
        assert!(n.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ilnr_normalize_matches_trimmed_oracle() {
        let vals = [1.0, 2.0, 3.0, 4.0];
        let d = map(&vals);
        let n = ilnr_normalize(&d).unwrap();
        let (mu, sigma, _) = trimmed_oracle(&vals);
        for (&out, &raw) in n.values().iter().zip(&vals) {
            assert!((out - (raw - mu) / sigma).abs() < 1e-12);
        }
    }

    #[test]
    fn ilnr_normalize_centering() {
        // when trimming drops nothing the output has mean 0
        let d = map(&[1.0, 2.0, 5.0, 9.0]);
        let n = ilnr_normalize(&d).unwrap();
        let mean = n.values().iter().sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-9);
    }

    #[test]
    fn ilnr_loss_perfect_prediction_is_zero() {
        let gt = map(&[1.0, 2.0, 3.0, 4.0, 8.0]);
        let pred = ilnr_normalize(&gt).unwrap();
        assert!(ilnr_loss(&pred, &gt).unwrap() < 1e-15);
    }

    #[test]
    fn ilnr_loss_matches_per_pixel_oracle() {
        let gt = map(&[1.0, 2.0, 3.0, 4.0]);
        let norm_gt = ilnr_normalize(&gt).unwrap();
        let pred = norm_gt.apply_shift(0.1);
        let loss = ilnr_loss(&pred, &gt).unwrap();
        // independent per-pixel oracle
        let mut expect = 0.0;
        for &g in norm_gt.values() {
            let d = g + 0.1;
            expect += (d - g).abs() + ((d / 100.0).tanh() - (g / 100.0).tanh()).abs();
        }
        expect /= 4.0;
        assert!((loss - expect).abs() < 1e-12);
        // |nd*| << 100 so the tanh term is ~0.001 per pixel
        assert!((loss - 0.101).abs() < 1e-4);
    }

    #[test]
    fn ilnr_loss_no_common_pixels_errors() {
        let gt = DepthMap::new(2, 1, vec![1.0, 2.0], vec![true, false]).unwrap();
        let pred = DepthMap::new(2, 1, vec![1.0, 2.0], vec![false, true]).unwrap();
        assert!(matches!(ilnr_loss(&pred, &gt), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn ilnr_more_robust_to_outliers_than_minmax() {
        // 100-pixel map; inject one 1e6 outlier into gt and compare the
        // change of ILNR vs the min-max-normalized variant.
        let base: Vec<f64> = (0..100).map(|i| 1.0 + (i as f64) * 0.05).collect();
        let gt = map2d(10, 10, base.clone());
        let pred = ilnr_normalize(&gt).unwrap().apply_shift(0.5);

        let mut outlier_vals = base.clone();
        outlier_vals[57] = 1e6;
        let gt_out = map2d(10, 10, outlier_vals);

        let ilnr_clean = ilnr_loss(&pred, &gt).unwrap();
        let ilnr_dirty = ilnr_loss(&pred, &gt_out).unwrap();
        let rel_ilnr = (ilnr_dirty - ilnr_clean).abs() / ilnr_clean;

        // min-max variant of the same pixel-wise loss
        let minmax_loss = |p: &DepthMap, g: &DepthMap| {
            let ng = normalize_minmax(g).unwrap();
            let n = p.values().len() as f64;
            p.values()
                .iter()
                .zip(ng.values())
                .map(|(&d, &g)| (d - g).abs() + ((d / 100.0).tanh() - (g / 100.0).tanh()).abs())
                .sum::<f64>()
                / n
        };
        let pred_mm = normalize_minmax(&gt).unwrap().apply_shift(0.5);
        let mm_clean = minmax_loss(&pred_mm, &gt);
        let mm_dirty = minmax_loss(&pred_mm, &gt_out);
        let rel_mm = (mm_dirty - mm_clean).abs() / mm_clean;

        assert!(rel_ilnr < 0.10, "ILNR changed by {rel_ilnr}");
        assert!(rel_mm > 0.50, "min-max changed by only {rel_mm}");
    }

    #[test]
    fn minmax_zscore_mad_basics() {
        let mm = normalize_minmax(&map(&[0.0, 10.0])).unwrap();
        assert_eq!(mm.values(), &[0.0, 1.0]);

        let z = normalize_zscore(&map(&[-1.0, 0.0, 1.0])).unwrap();
        let sigma = (2.0f64 / 3.0).sqrt();
        assert!((z.values()[0] + 1.0 / sigma).abs() < 1e-12);
        assert!((z.values()[1]).abs() < 1e-12);
        assert!((z.values()[2] - 1.0 / sigma).abs() < 1e-12);

        // brute-force median/MAD oracle: median 1, deviations [0,0,0,99] -> MAD 0
        // which hits the eps floor
        let m = normalize_mad(&map(&[1.0, 1.0, 1.0, 100.0])).unwrap();
        assert_eq!(m.values()[0], 0.0);
        assert!((m.values()[3] - 99.0 / EPS_DENOM).abs() < 1e-3);

        let m2 = normalize_mad(&map(&[1.0, 2.0, 4.0, 100.0])).unwrap();
        // median 3, deviations [2,1,1,97] -> MAD 1.5
        assert!((m2.values()[0] - (1.0 - 3.0) / 1.5).abs() < 1e-12);
    }

    #[test]
    fn align_identity_and_exact_affine() {
        let gt = map(&[1.0, 2.0, 3.0, 5.0]);
        let a = align_scale_shift(&gt, &gt).unwrap();
        assert!((a.scale - 1.0).abs() < 1e-12 && a.shift.abs() < 1e-12);

        let pred = gt.map_valid(|d| (d - 3.0) / 2.0);
        let a = align_scale_shift(&pred, &gt).unwrap();
        assert!((a.scale - 2.0).abs() < 1e-12);
        assert!((a.shift - 3.0).abs() < 1e-12);
    }

    #[test]
    fn align_constant_pred_errors() {
        let gt = map(&[1.0, 2.0, 3.0]);
        let pred = map(&[4.0, 4.0, 4.0]);
        assert!(matches!(
            align_scale_shift(&pred, &gt),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn align_beats_grid_oracle() {
        // noisy case: closed form must beat every candidate on a grid
        let gt = map(&[1.0, 2.2, 2.9, 4.3, 5.1, 6.0]);
        let pred = map(&[0.4, 1.1, 1.4, 2.3, 2.4, 3.1]);
        let a = align_scale_shift(&pred, &gt).unwrap();
        let residual = |s: f64, t: f64| {
            pred.values()
                .iter()
                .zip(gt.values())
                .map(|(&d, &g)| (s * d + t - g).powi(2))
                .sum::<f64>()
        };
        let best = residual(a.scale, a.shift);
        for i in 0..80 {
            for j in 0..80 {
                let s = 0.5 + i as f64 * 0.05;
                let t = -2.0 + j as f64 * 0.05;
                assert!(best <= residual(s, t) + 1e-12);
            }
        }
    }

    #[allow(clippy::type_complexity)]
    fn pairset(pairs: &[((usize, usize), (usize, usize))]) -> PointPairSet {
        PointPairSet::new(
            pairs
                .iter()
                .map(|&pixels| PointPair {
                    pixels,
                    category: PairCategory::Global,
                })
                .collect(),
        )
    }

    #[test]
    fn pwn_extremes() {
        // 2x1 maps: A at (0,0), B at (1,0)
        let same = NormalMap::new(
            2,
            1,
            vec![[0.0, 0.0, -1.0], [0.0, 0.0, -1.0]],
            vec![true, true],
        )
        .unwrap();
        let perp = NormalMap::new(
            2,
            1,
            vec![[0.0, 0.0, -1.0], [-1.0, 0.0, 0.0]],
            vec![true, true],
        )
        .unwrap();
        let pairs = pairset(&[((0, 0), (1, 0))]);
        assert_eq!(pwn_loss(&same, &same, &pairs).unwrap(), 0.0);
        // pred dot = 1, gt dot = 0
        assert_eq!(pwn_loss(&same, &perp, &pairs).unwrap(), 1.0);
    }

    #[test]
    fn pwn_matches_loop_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (w, h) = (10, 10);
        let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
            let normals: Vec<[f64; 3]> = (0..w * h)
                .map(|_| {
                    let v = [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..0.0f64).min(-1e-3),
                    ];
                    crate::math::normalize(v).unwrap()
                })
                .collect();
            NormalMap::new(w, h, normals, vec![true; w * h]).unwrap()
        };
        let pn = mk(&mut rng);
        let gn = mk(&mut rng);
        let pairs: Vec<((usize, usize), (usize, usize))> = (0..100)
            .map(|_| {
                (
                    (rng.gen_range(0..w), rng.gen_range(0..h)),
                    (rng.gen_range(0..w), rng.gen_range(0..h)),
                )
            })
            .filter(|(a, b)| a != b)
            .collect();
        let set = pairset(&pairs);
        let loss = pwn_loss(&pn, &gn, &set).unwrap();
        let mut oracle = 0.0;
        for &((ua, va), (ub, vb)) in &pairs {
            oracle += (dot(pn.get(ua, va).unwrap(), pn.get(ub, vb).unwrap())
                - dot(gn.get(ua, va).unwrap(), gn.get(ub, vb).unwrap()))
            .abs();
        }
        oracle /= pairs.len() as f64;
        assert!((loss - oracle).abs() < 1e-9);
    }

    #[test]
    fn msg_shift_blind() {
        let gt = map2d(4, 4, (0..16).map(|i| i as f64 * 0.3).collect());
        let pred = gt.apply_shift(2.5);
        assert!(msg_loss(&pred, &gt, 4).unwrap() < 1e-12);
    }

    #[test]
    fn msg_ramp_vs_flat_oracle() {
        // 1D ramp with slope 0.5 against a flat prediction at K = 1:
        // every forward difference differs by exactly the slope.
        let gt = map(&[0.0, 0.5, 1.0, 1.5, 2.0]);
        let pred = map(&[1.0; 5]);
        let loss = msg_loss(&pred, &gt, 1).unwrap();
        assert!((loss - 0.5).abs() < 1e-12);
    }

    #[test]
    fn msg_symmetric() {
        let a = map2d(4, 4, (0..16).map(|i| (i as f64).sin()).collect());
        let b = map2d(4, 4, (0..16).map(|i| (i as f64 * 0.7).cos()).collect());
        let l1 = msg_loss(&a, &b, 4).unwrap();
        let l2 = msg_loss(&b, &a, 4).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
    }

    #[test]
    fn msg_tiny_image_errors_when_all_scales_empty() {
        let a = DepthMap::from_values(1, 1, vec![1.0]).unwrap();
        assert!(matches!(msg_loss(&a, &a, 4), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn ranking_saturates_on_agreement() {
        // ordering agrees with a gap of 10
        let gt = map(&[1.0, 5.0]);
        let pred = map(&[0.0, 10.0]);
        let pairs = pairset(&[((1, 0), (0, 0))]);
        let r = ranking_loss(&pred, &gt, &pairs, 0.02, 0.0).unwrap();
        assert!(r.value <= 0.01);
    }

    #[test]
    fn ranking_equal_pair_zero() {
        let gt = map(&[2.0, 2.0]);
        let pred = map(&[3.0, 3.0]);
        let pairs = pairset(&[((0, 0), (1, 0))]);
        let r = ranking_loss(&pred, &gt, &pairs, 0.02, 0.0).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn ranking_skips_nonpositive_gt() {
        let gt = map(&[-1.0, 2.0, 3.0, 4.0]);
        let pred = map(&[1.0, 2.0, 3.0, 4.0]);
        let pairs = pairset(&[((0, 0), (1, 0)), ((2, 0), (3, 0))]);
        let r = ranking_loss(&pred, &gt, &pairs, 0.02, 0.0).unwrap();
        assert_eq!(r.skipped_pairs, 1);
        assert_eq!(r.used_pairs, 1);
    }

    #[test]
    fn ranking_matches_loop_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 50;
        let gt_vals: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
        let pred_vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let gt = map(&gt_vals);
        let pred = map(&pred_vals);
        let idx: Vec<((usize, usize), (usize, usize))> = (0..50)
            .map(|_| ((rng.gen_range(0..n), 0), (rng.gen_range(0..n), 0)))
            .filter(|(a, b)| a != b)
            .collect();
        let set = pairset(&idx);
        let tau = 0.02;
        let r = ranking_loss(&pred, &gt, &set, tau, 0.0).unwrap();
        // independent loop oracle with the naive formula
        let mut sum = 0.0;
        let mut used = 0;
        for &((ua, _), (ub, _)) in &idx {
            let (ga, gb) = (gt_vals[ua], gt_vals[ub]);
            let (da, db) = (pred_vals[ua], pred_vals[ub]);
            let ratio = ga / gb;
            let l = if ratio > 1.0 + tau {
                1.0
            } else if ratio < 1.0 / (1.0 + tau) {
                -1.0
            } else {
                0.0
            };
            if l == 0.0 {
                sum += (da - db) * (da - db);
            } else {
                sum += (1.0 + (-(l * (da - db))).exp()).ln();
            }
            used += 1;
        }
        assert!((r.value - sum / used as f64).abs() < 1e-9);
    }

    #[test]
    fn overall_weight_selection_reduces_to_ilnr() {
        let gt = map2d(8, 8, (0..64).map(|i| 1.0 + (i % 9) as f64 * 0.2).collect());
        let pred = map2d(8, 8, (0..64).map(|i| 0.4 + (i % 7) as f64 * 0.3).collect());
        let cam = CameraIntrinsics::from_fov(8, 8, 60.0).unwrap();
        let pairs = pairset(&[((0, 0), (1, 1))]);
        let w = LossWeights {
            lambda_p: 0.0,
            lambda_a: 1.0,
            lambda_g: 0.0,
        };
        let l = overall_loss(&pred, &gt, &cam, &pairs, &w, 5).unwrap();
        assert_eq!(l, ilnr_loss(&pred, &gt).unwrap());
    }
}
