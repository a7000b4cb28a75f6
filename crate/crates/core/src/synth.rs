//! Synthetic piecewise-planar scenes rendered by analytic ray-plane
//! intersection, with exact plane labels and normals as ground truth.

use crate::camera::CameraIntrinsics;
use crate::cloud::NormalMap;
use crate::depth::DepthMap;
use crate::error::{Error, Result};
use crate::math::{dot, Vec3};
use crate::sampling::PlaneSegmentation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::str::FromStr;

/// Scene family to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SceneKind {
    /// Floor plus `walls` walls (2-4: back, left, right, ceiling in that order).
    Room { walls: u8 },
    /// A full room shell with `count` boxes standing on the floor.
    Boxes { count: u8 },
    /// A full room shell with a staircase of `steps` steps against the back wall.
    Staircase { steps: u8 },
    /// A single fronto-parallel plane (no jitter); focal scale is
    /// unidentifiable on this scene by construction.
    SinglePlane,
}

/// Declarative description of a synthetic scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub width: usize,
    pub height: usize,
    pub fov_deg: f64,
}

impl SceneSpec {
    pub fn new(kind: SceneKind, width: usize, height: usize, fov_deg: f64) -> Self {
        Self {
            kind,
            width,
            height,
            fov_deg,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Domain("scene resolution must be positive".into()));
        }
        match self.kind {
            SceneKind::Room { walls } if !(2..=4).contains(&walls) => Err(Error::Domain(
                format!("room needs 2-4 walls, got {walls}"),
            )),
            SceneKind::Boxes { count: 0 } => {
                Err(Error::Domain("boxes scene needs at least one box".into()))
            }
            SceneKind::Staircase { steps: 0 } => {
                Err(Error::Domain("staircase needs at least one step".into()))
            }
            _ => Ok(()),
        }
    }
}

impl FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "room" => Ok(SceneKind::Room { walls: 4 }),
            "room2" => Ok(SceneKind::Room { walls: 2 }),
            "room3" => Ok(SceneKind::Room { walls: 3 }),
            "boxes" => Ok(SceneKind::Boxes { count: 2 }),
            "staircase" => Ok(SceneKind::Staircase { steps: 4 }),
            "single-plane" => Ok(SceneKind::SinglePlane),
            other => Err(Error::Domain(format!(
                "unknown scene kind '{other}' (expected room, room2, room3, boxes, staircase, single-plane)"
            ))),
        }
    }
}

/// A generated scene: depth, camera, exact plane labels and per-plane normals.
#[derive(Debug, Clone)]
pub struct Scene {
    pub depth: DepthMap,
    pub cam: CameraIntrinsics,
    pub planes: PlaneSegmentation,
}

impl Scene {
    /// Ground-truth normal map: each pixel carries its plane's analytic normal.
    pub fn normal_map(&self) -> NormalMap {
        let n = self.planes.labels.len();
        let mut normals = vec![[0.0, 0.0, -1.0]; n];
        let mut mask = vec![false; n];
        for (i, &label) in self.planes.labels.iter().enumerate() {
            if label > 0 {
                normals[i] = self.planes.plane_normals[label as usize - 1];
                mask[i] = true;
            }
        }
        NormalMap::new(self.planes.width, self.planes.height, normals, mask).unwrap()
    }
}

struct Rotation([[f64; 3]; 3]);

impl Rotation {
    fn from_angles(yaw: f64, pitch: f64, roll: f64) -> Self {
        let (cy, sy) = (yaw.cos(), yaw.sin());
        let (cp, sp) = (pitch.cos(), pitch.sin());
        let (cr, sr) = (roll.cos(), roll.sin());
        // R = Ry(yaw) Rx(pitch) Rz(roll)
        let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
        let rx = [[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]];
        let rz = [[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]];
        Rotation(mat_mul(&ry, &mat_mul(&rx, &rz)))
    }

    fn identity() -> Self {
        Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    fn apply(&self, v: Vec3) -> Vec3 {
        std::array::from_fn(|i| dot(self.0[i], v))
    }

    fn apply_transpose(&self, v: Vec3) -> Vec3 {
        std::array::from_fn(|i| self.0[0][i] * v[0] + self.0[1][i] * v[1] + self.0[2][i] * v[2])
    }
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

/// Half-space boundary of the room shell: outward normal along `axis` with
/// the given sign, at distance `offset` from the origin.
struct ShellPlane {
    axis: usize,
    sign: f64,
    offset: f64,
}

struct Aabb {
    min: Vec3,
    max: Vec3,
}

impl Aabb {
    /// Entry intersection of the ray `t * dir` (camera at the origin) with
    /// the box: `(t, axis, normal_sign)` of the entered face.
    #[allow(clippy::needless_range_loop)] // k indexes dir, min and max in lockstep
    fn entry(&self, dir: Vec3) -> Option<(f64, usize, f64)> {
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        let mut near_axis = 0;
        for k in 0..3 {
            if dir[k].abs() < 1e-12 {
                if 0.0 < self.min[k] || 0.0 > self.max[k] {
                    return None;
                }
                continue;
            }
            let mut t0 = self.min[k] / dir[k];
            let mut t1 = self.max[k] / dir[k];
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            if t0 > t_near {
                t_near = t0;
                near_axis = k;
            }
            t_far = t_far.min(t1);
        }
        if t_near <= 0.0 || t_near > t_far {
            return None;
        }
        Some((t_near, near_axis, -dir[near_axis].signum()))
    }
}

const MIN_PLANE_PIXELS: usize = 16;

/// Renders a scene by ray casting: for every pixel the nearest surface along
/// the pinhole ray, with the winning face recorded as the plane label.
pub fn synth_scene(spec: &SceneSpec, rng_seed: u64) -> Result<Scene> {
    spec.validate()?;
    let cam = CameraIntrinsics::from_fov(spec.width, spec.height, spec.fov_deg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    // scene geometry (world frame); the camera is rotated instead of the scene
    let (rot, shell, boxes) = build_geometry(&spec.kind, &mut rng);

    let (w, h) = (spec.width, spec.height);
    let mut depth_vals = vec![f64::NAN; w * h];
    let mut mask = vec![false; w * h];
    // face key: shell planes get 0..shell.len(), box faces follow
    let mut face_of_pixel = vec![usize::MAX; w * h];
    let mut face_normals: HashMap<usize, Vec3> = HashMap::new();

    for v in 0..h {
        for u in 0..w {
            let dir_c = [(u as f64 - cam.u0) / cam.f, (v as f64 - cam.v0) / cam.f, 1.0];
            let dir_w = rot.apply(dir_c);
            let mut best_t = f64::INFINITY;
            let mut best_face = usize::MAX;
            let mut best_normal_w = [0.0, 0.0, 0.0];
            for (k, p) in shell.iter().enumerate() {
                let denom = p.sign * dir_w[p.axis];
                if denom <= 1e-12 {
                    continue;
                }
                let t = p.offset / denom;
                if t > 0.0 && t < best_t {
                    best_t = t;
                    best_face = k;
                    let mut n = [0.0; 3];
                    n[p.axis] = -p.sign; // inward, toward the camera
                    best_normal_w = n;
                }
            }
            for (b, aabb) in boxes.iter().enumerate() {
                if let Some((t, axis, sign)) = aabb.entry(dir_w) {
                    if t < best_t {
                        best_t = t;
                        best_face = shell.len() + b * 6 + axis * 2 + usize::from(sign < 0.0);
                        let mut n = [0.0; 3];
                        n[axis] = sign;
                        best_normal_w = n;
                    }
                }
            }
            if best_face == usize::MAX {
                continue;
            }
            let i = v * w + u;
            depth_vals[i] = best_t; // dir_c has unit z, so t is the camera-frame depth
            mask[i] = true;
            face_of_pixel[i] = best_face;
            face_normals.entry(best_face).or_insert_with(|| {
                orient_to_camera(rot.apply_transpose(best_normal_w))
            });
        }
    }

    if !mask.iter().any(|&m| m) {
        return Err(Error::Domain("scene produced no visible surface".into()));
    }

    // relabel faces with enough pixels as planes, in face-key order
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &f in &face_of_pixel {
        if f != usize::MAX {
            *counts.entry(f).or_default() += 1;
        }
    }
    let mut kept: Vec<usize> = counts
        .iter()
        .filter(|(_, &c)| c >= MIN_PLANE_PIXELS)
        .map(|(&f, _)| f)
        .collect();
    kept.sort_unstable();
    let id_of: HashMap<usize, u32> = kept
        .iter()
        .enumerate()
        .map(|(i, &f)| (f, i as u32 + 1))
        .collect();
    let labels: Vec<u32> = face_of_pixel
        .iter()
        .map(|f| id_of.get(f).copied().unwrap_or(0))
        .collect();
    let plane_normals: Vec<Vec3> = kept.iter().map(|f| face_normals[f]).collect();

    Ok(Scene {
        depth: DepthMap::new(w, h, depth_vals, mask)?,
        cam,
        planes: PlaneSegmentation {
            width: w,
            height: h,
            labels,
            plane_count: plane_normals.len(),
            plane_normals,
        },
    })
}

fn orient_to_camera(n: Vec3) -> Vec3 {
    let flip =
        n[2] > 0.0 || (n[2] == 0.0 && (n[0] > 0.0 || (n[0] == 0.0 && n[1] > 0.0)));
    let n = if flip { [-n[0], -n[1], -n[2]] } else { n };
    crate::math::normalize(n).unwrap()
}

fn build_geometry(kind: &SceneKind, rng: &mut ChaCha8Rng) -> (Rotation, Vec<ShellPlane>, Vec<Aabb>) {
    if matches!(kind, SceneKind::SinglePlane) {
        let back = ShellPlane {
            axis: 2,
            sign: 1.0,
            offset: 4.0,
        };
        return (Rotation::identity(), vec![back], vec![]);
    }

    let yaw = rng.gen_range(-15f64..15.0).to_radians();
    let pitch = rng.gen_range(-10f64..10.0).to_radians();
    let roll = rng.gen_range(-5f64..5.0).to_radians();
    let rot = Rotation::from_angles(yaw, pitch, roll);

    let half_x = rng.gen_range(1.5..2.5);
    let half_y = rng.gen_range(1.0..1.6);
    let depth_z = rng.gen_range(3.0..5.0);

    let floor = ShellPlane {
        axis: 1,
        sign: 1.0,
        offset: half_y,
    };
    let wall_pool = [
        ShellPlane {
            axis: 2,
            sign: 1.0,
            offset: depth_z,
        },
        ShellPlane {
            axis: 0,
            sign: -1.0,
            offset: half_x,
        },
        ShellPlane {
            axis: 0,
            sign: 1.0,
            offset: half_x,
        },
        ShellPlane {
            axis: 1,
            sign: -1.0,
            offset: half_y,
        },
    ];

    let wall_count = match kind {
        SceneKind::Room { walls } => *walls as usize,
        _ => 4,
    };
    let mut shell = vec![floor];
    shell.extend(wall_pool.into_iter().take(wall_count));

    let mut boxes = Vec::new();
    match kind {
        SceneKind::Boxes { count } => {
            for _ in 0..*count {
                let bw = rng.gen_range(0.3..0.7);
                let bh = rng.gen_range(0.4..1.0);
                let bd = rng.gen_range(0.3..0.7);
                let cx = rng.gen_range(-half_x + bw..half_x - bw);
                let cz = rng.gen_range(depth_z * 0.4..depth_z - bd - 0.2);
                boxes.push(Aabb {
                    min: [cx - bw / 2.0, half_y - bh, cz],
                    max: [cx + bw / 2.0, half_y + 0.1, cz + bd],
                });
            }
        }
        SceneKind::Staircase { steps } => {
            let n = *steps as usize;
            let rise = (2.0 * half_y * 0.8) / n as f64;
            let run = (depth_z * 0.5) / n as f64;
            let z0 = depth_z * 0.45;
            for k in 0..n {
                let top = half_y - rise * (k + 1) as f64;
                boxes.push(Aabb {
                    min: [-half_x * 0.8, top, z0 + run * k as f64],
                    max: [half_x * 0.8, half_y + 0.1, depth_z + 0.1],
                });
            }
        }
        _ => {}
    }
    (rot, shell, boxes)
}
