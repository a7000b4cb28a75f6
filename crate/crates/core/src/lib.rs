//! Depth-map geometry toolkit: pinhole unprojection and normal estimation,
//! depth losses and evaluation metrics, geometry-aware point-pair sampling,
//! recovery of depth-shift/focal-scale distortions, a synthetic scene
//! generator, and file formats plus a CLI to tie it together.

// `!(x > 0.0)`-style guards are deliberate: they reject NaN along with the
// out-of-range values, which `x <= 0.0` would let through. Threshold pairs
// are likewise spelled out as explicit comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::manual_range_contains)]

pub mod camera;
pub mod cloud;
pub mod depth;
pub mod error;
pub mod geometry;
pub mod io;
pub mod losses;
pub mod math;
pub mod metrics;
pub mod recovery;
pub mod sampling;
pub mod synth;

pub mod cli;

pub use camera::CameraIntrinsics;
pub use cloud::{NormalMap, PointCloud};
pub use depth::DepthMap;
pub use error::{Error, Result};
pub use geometry::{estimate_normals, orient_toward_camera, unproject};
pub use losses::{
    align_scale_only, align_scale_shift, ilnr_loss, ilnr_normalize, msg_loss, ordinal_label,
    overall_loss, pwn_loss, ranking_loss, trimmed_stats, AlignmentParams, LossWeights,
};
pub use metrics::{absrel, dbe, delta1, lsiv, pe, whdr, MetricReport};
pub use recovery::{
    distortion_objective, perturb, recover, recovery_benchmark, Perturbation, RecoveryConfig,
    RecoveryResult, ShiftFocalEstimator,
};
pub use sampling::{
    detect_edges, sample_combined, sample_edge_pairs, sample_global_pairs, sample_plane_pairs,
    segment_planes, PointPair, PointPairSet, SamplerConfig,
};
pub use synth::{synth_scene, Scene, SceneKind, SceneSpec};
