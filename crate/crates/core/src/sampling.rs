//! Point-pair sampling: pairs straddling depth edges, pairs on the same
//! plane, and globally random pairs. These feed the pair-wise normal loss,
//! the ranking loss and the WHDR metric.

use crate::cloud::NormalMap;
use crate::depth::DepthMap;
use crate::error::{Error, Result};
use crate::math::{dot, normalize, Vec3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

/// Category of a sampled pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairCategory {
    /// Endpoints on opposite sides of a depth edge.
    Edge,
    /// Both endpoints on the same detected plane.
    Plane,
    /// Uniformly random valid endpoints.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointPair {
    pub pixels: ((usize, usize), (usize, usize)),
    pub category: PairCategory,
}

/// A list of sampled pixel pairs with category tags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointPairSet {
    pairs: Vec<PointPair>,
}

impl PointPairSet {
    pub fn new(pairs: Vec<PointPair>) -> Self {
        debug_assert!(pairs.iter().all(|p| p.pixels.0 != p.pixels.1));
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PointPair> {
        self.pairs.iter()
    }

    pub fn extend(&mut self, other: PointPairSet) {
        self.pairs.extend(other.pairs);
    }

    pub fn count_category(&self, cat: PairCategory) -> usize {
        self.pairs.iter().filter(|p| p.category == cat).count()
    }
}

/// Whether a sampler found anything to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleStatus {
    Ok,
    /// Nothing qualified; the returned set is empty.
    Empty,
}

/// Per-pixel edge flags.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMask {
    pub width: usize,
    pub height: usize,
    pub flags: Vec<bool>,
}

impl EdgeMask {
    #[inline]
    pub fn is_edge(&self, u: usize, v: usize) -> bool {
        self.flags[v * self.width + u]
    }

    pub fn edge_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// Default relative-gradient threshold for edge detection.
pub const EDGE_THRESHOLD: f64 = 0.05;

/// Flags pixels where the relative forward-difference depth gradient
/// `|dA - dB| / min(dA, dB)` exceeds `threshold` in either axis.
pub fn detect_edges(depth: &DepthMap, threshold: f64) -> EdgeMask {
    let (w, h) = (depth.width(), depth.height());
    let mut flags = vec![false; w * h];
    let exceeds = |a: f64, b: f64| {
        let denom = a.abs().min(b.abs()).max(1e-12);
        (a - b).abs() / denom > threshold
    };
    for v in 0..h {
        for u in 0..w {
            let Some(d) = depth.get(u, v) else { continue };
            if u + 1 < w {
                if let Some(dn) = depth.get(u + 1, v) {
                    if exceeds(d, dn) {
                        flags[v * w + u] = true;
                    }
                }
            }
            if v + 1 < h {
                if let Some(dn) = depth.get(u, v + 1) {
                    if exceeds(d, dn) {
                        flags[v * w + u] = true;
                    }
                }
            }
        }
    }
    EdgeMask {
        width: w,
        height: h,
        flags,
    }
}

/// Retention thresholds on the ground-truth normal dot product of edge pairs:
/// positive samples (sharp normal change) keep `dot < 0.3`, negative samples
/// (near-parallel) keep `dot > 0.95`.
pub const EDGE_DOT_POSITIVE: f64 = 0.3;
pub const EDGE_DOT_NEGATIVE: f64 = 0.95;

/// Samples pairs straddling edge pixels.
///
/// At each edge pixel the endpoints are placed `offset` pixels away along
/// the dominant gradient axis. A candidate is retained only when both
/// endpoints carry valid ground-truth normals and the normal dot product is
/// either below [`EDGE_DOT_POSITIVE`] or above [`EDGE_DOT_NEGATIVE`].
/// Edge pixels are visited in seeded random order until `count` pairs are
/// retained or the pixels are exhausted.
pub fn sample_edge_pairs(
    depth: &DepthMap,
    edges: &EdgeMask,
    gt_normals: &NormalMap,
    count: usize,
    offset: usize,
    rng_seed: u64,
) -> (PointPairSet, SampleStatus) {
    let (w, h) = (edges.width, edges.height);
    let mut edge_pixels: Vec<(usize, usize)> = (0..h)
        .flat_map(|v| (0..w).map(move |u| (u, v)))
        .filter(|&(u, v)| edges.is_edge(u, v))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    edge_pixels.shuffle(&mut rng);

    let mut pairs = Vec::new();
    for (u, v) in edge_pixels {
        if pairs.len() >= count {
            break;
        }
        let d = match depth.get(u, v) {
            Some(d) => d,
            None => continue,
        };
        let gx = if u + 1 < w {
            depth.get(u + 1, v).map(|dn| (dn - d).abs()).unwrap_or(0.0)
        } else {
            0.0
        };
        let gy = if v + 1 < h {
            depth.get(u, v + 1).map(|dn| (dn - d).abs()).unwrap_or(0.0)
        } else {
            0.0
        };
        let (a, b) = if gx >= gy {
            if u < offset || u + offset >= w {
                continue;
            }
            ((u - offset, v), (u + offset, v))
        } else {
            if v < offset || v + offset >= h {
                continue;
            }
            ((u, v - offset), (u, v + offset))
        };
        let (Some(na), Some(nb)) = (gt_normals.get(a.0, a.1), gt_normals.get(b.0, b.1)) else {
            continue;
        };
        let nd = dot(na, nb);
        if nd < EDGE_DOT_POSITIVE || nd > EDGE_DOT_NEGATIVE {
            pairs.push(PointPair {
                pixels: (a, b),
                category: PairCategory::Edge,
            });
        }
    }
    let status = if pairs.is_empty() {
        SampleStatus::Empty
    } else {
        SampleStatus::Ok
    };
    (PointPairSet::new(pairs), status)
}

/// Per-pixel plane labels from region growing over a normal map.
/// Label 0 means non-planar / unassigned.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSegmentation {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub plane_count: usize,
    /// Unit normal per plane id (index `id - 1`).
    pub plane_normals: Vec<Vec3>,
}

impl PlaneSegmentation {
    #[inline]
    pub fn label(&self, u: usize, v: usize) -> u32 {
        self.labels[v * self.width + u]
    }

    /// Member pixels of a plane id, in row-major order.
    pub fn members(&self, id: u32) -> Vec<(usize, usize)> {
        (0..self.height)
            .flat_map(|v| (0..self.width).map(move |u| (u, v)))
            .filter(|&(u, v)| self.label(u, v) == id)
            .collect()
    }

    /// Binary mask of a plane id.
    pub fn mask_of(&self, id: u32) -> Vec<bool> {
        self.labels.iter().map(|&l| l == id).collect()
    }
}

/// Grows 4-connected regions of near-constant normal direction.
///
/// A pixel joins a region when its normal deviates from the region seed's
/// normal by less than `angle_tol` degrees. Regions smaller than
/// `min_region` pixels are labeled 0. The reported plane normal is the
/// normalized mean of the member normals, oriented toward the camera.
pub fn segment_planes(normals: &NormalMap, angle_tol_deg: f64, min_region: usize) -> PlaneSegmentation {
    let (w, h) = (normals.width(), normals.height());
    let cos_tol = angle_tol_deg.to_radians().cos();
    let mut labels = vec![0u32; w * h];
    let mut visited = vec![false; w * h];
    let mut plane_normals = Vec::new();
    let mut next_id = 1u32;

    let mut stack = Vec::new();
    for seed_v in 0..h {
        for seed_u in 0..w {
            let si = seed_v * w + seed_u;
            if visited[si] || !normals.is_valid(seed_u, seed_v) {
                continue;
            }
            let seed_n = normals.get(seed_u, seed_v).unwrap();
            let mut region = Vec::new();
            stack.clear();
            stack.push((seed_u, seed_v));
            visited[si] = true;
            while let Some((u, v)) = stack.pop() {
                region.push((u, v));
                let mut push = |uu: usize, vv: usize, stack: &mut Vec<(usize, usize)>| {
                    let i = vv * w + uu;
                    if visited[i] {
                        return;
                    }
                    if let Some(n) = normals.get(uu, vv) {
                        if dot(n, seed_n) >= cos_tol {
                            visited[i] = true;
                            stack.push((uu, vv));
                        }
                    }
                };
                if u > 0 {
                    push(u - 1, v, &mut stack);
                }
                if u + 1 < w {
                    push(u + 1, v, &mut stack);
                }
                if v > 0 {
                    push(u, v - 1, &mut stack);
                }
                if v + 1 < h {
                    push(u, v + 1, &mut stack);
                }
            }
            if region.len() < min_region {
                continue;
            }
            let mut sum = [0.0; 3];
            for &(u, v) in &region {
                let n = normals.get(u, v).unwrap();
                for k in 0..3 {
                    sum[k] += n[k];
                }
            }
            let mean = normalize(sum).unwrap_or(seed_n);
            for &(u, v) in &region {
                labels[v * w + u] = next_id;
            }
            plane_normals.push(mean);
            next_id += 1;
        }
    }
    PlaneSegmentation {
        width: w,
        height: h,
        labels,
        plane_count: plane_normals.len(),
        plane_normals,
    }
}

/// Default pairs per plane.
pub const PAIRS_PER_PLANE: usize = 5000;

/// Samples exactly `per_plane` same-plane pairs on every detected plane.
///
/// Pairs are drawn without replacement (deduplicated) until the distinct
/// pairs of a plane are exhausted, then with replacement.
pub fn sample_plane_pairs(
    seg: &PlaneSegmentation,
    per_plane: usize,
    rng_seed: u64,
) -> (PointPairSet, SampleStatus) {
    if seg.plane_count == 0 || per_plane == 0 {
        let status = if seg.plane_count == 0 {
            SampleStatus::Empty
        } else {
            SampleStatus::Ok
        };
        return (PointPairSet::default(), status);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut pairs = Vec::with_capacity(per_plane * seg.plane_count);
    for id in 1..=seg.plane_count as u32 {
        let members = seg.members(id);
        if members.len() < 2 {
            continue;
        }
        let distinct_total = members.len() * (members.len() - 1) / 2;
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        let mut emitted = 0;
        while emitted < per_plane {
            let i = rng.gen_range(0..members.len());
            let j = rng.gen_range(0..members.len());
            if i == j {
                continue;
            }
            let key = (i.min(j), i.max(j));
            if seen.len() < distinct_total && !seen.insert(key) {
                continue;
            }
            pairs.push(PointPair {
                pixels: (members[i], members[j]),
                category: PairCategory::Plane,
            });
            emitted += 1;
        }
    }
    let status = if pairs.is_empty() {
        SampleStatus::Empty
    } else {
        SampleStatus::Ok
    };
    (PointPairSet::new(pairs), status)
}

/// Samples `count` uniformly random pairs of distinct valid pixels.
pub fn sample_global_pairs(
    mask: &[bool],
    width: usize,
    height: usize,
    count: usize,
    rng_seed: u64,
) -> Result<PointPairSet> {
    assert_eq!(mask.len(), width * height);
    let valid: Vec<(usize, usize)> = (0..height)
        .flat_map(|v| (0..width).map(move |u| (u, v)))
        .filter(|&(u, v)| mask[v * width + u])
        .collect();
    if valid.len() < 2 {
        return Err(Error::EmptyInput(
            "need at least 2 valid pixels for global pairs".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let a = valid[rng.gen_range(0..valid.len())];
        let b = valid[rng.gen_range(0..valid.len())];
        if a == b {
            continue;
        }
        pairs.push(PointPair {
            pixels: (a, b),
            category: PairCategory::Global,
        });
    }
    Ok(PointPairSet::new(pairs))
}

/// Tunables of the combined sampler.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SamplerConfig {
    /// Relative depth-gradient threshold for edge detection.
    pub edge_threshold: f64,
    /// Endpoint distance from the edge pixel, in pixels.
    pub edge_offset: usize,
    /// Maximum number of retained edge pairs.
    pub edge_budget: usize,
    /// Pairs sampled per detected plane.
    pub per_plane: usize,
    /// Region-growing angle tolerance in degrees.
    pub angle_tol_deg: f64,
    /// Minimum plane region size in pixels.
    pub min_region: usize,
    /// Global pairs as a fraction of the valid pixel count.
    pub global_fraction: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            edge_threshold: EDGE_THRESHOLD,
            edge_offset: 2,
            edge_budget: 10_000,
            per_plane: PAIRS_PER_PLANE,
            angle_tol_deg: 5.0,
            min_region: 200,
            global_fraction: 0.5,
        }
    }
}

/// Runs all three samplers on one scene and concatenates the results.
/// Global pairs are restricted to pixels valid in both the depth map and
/// the normal map so every pair can feed the normal loss.
pub fn sample_combined(
    depth: &DepthMap,
    gt_normals: &NormalMap,
    config: &SamplerConfig,
    rng_seed: u64,
) -> Result<PointPairSet> {
    let edges = detect_edges(depth, config.edge_threshold);
    let (mut set, _) = sample_edge_pairs(
        depth,
        &edges,
        gt_normals,
        config.edge_budget,
        config.edge_offset,
        rng_seed,
    );
    let seg = segment_planes(gt_normals, config.angle_tol_deg, config.min_region);
    let (plane_pairs, _) = sample_plane_pairs(&seg, config.per_plane, rng_seed.wrapping_add(1));
    set.extend(plane_pairs);

    let joint: Vec<bool> = depth
        .mask()
        .iter()
        .zip(gt_normals.mask())
        .map(|(&a, &b)| a && b)
        .collect();
    let valid = joint.iter().filter(|&&m| m).count();
    let global_count = (valid as f64 * config.global_fraction).round() as usize;
    set.extend(sample_global_pairs(
        &joint,
        depth.width(),
        depth.height(),
        global_count,
        rng_seed.wrapping_add(2),
    )?);
    Ok(set)
}
