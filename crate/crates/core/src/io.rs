//! File formats (depth rasters, PLY point clouds), run configuration, and
//! report emitters.
//!
//! All writes are atomic: content goes to a temporary file in the target
//! directory and is renamed into place, so interrupted runs never leave
//! truncated artifacts.

use crate::cloud::PointCloud;
use crate::depth::DepthMap;
use crate::error::{Error, Result};
use crate::losses::LossWeights;
use crate::metrics::MetricReport;
use crate::sampling::SamplerConfig;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Depth raster encodings understood by [`read_depth`] / [`write_depth`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthFormat {
    /// 16-bit grayscale PNG; stored value / divisor = depth, 0 = invalid.
    U16,
    /// Raw little-endian raster: magic `DEPF`, u32 width, u32 height, f32 data.
    F32,
    /// Plain text: `width height` header line, then one row per line.
    Txt,
}

impl FromStr for DepthFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u16" => Ok(DepthFormat::U16),
            "f32" => Ok(DepthFormat::F32),
            "txt" => Ok(DepthFormat::Txt),
            other => Err(Error::Domain(format!(
                "unknown depth format {other:?} (expected u16, f32, or txt)"
            ))),
        }
    }
}

/// Default divisor for the 16-bit integer format (millimeter convention).
pub const DEFAULT_DIVISOR: f64 = 1000.0;

/// Magic bytes of the raw f32 raster format.
pub const F32_MAGIC: &[u8; 4] = b"DEPF";

fn fmt_err(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

/// Reads a depth raster. `divisor` applies to the `u16` format only (stored
/// value / divisor = scene units); zero, NaN, and infinite samples become
/// invalid pixels.
pub fn read_depth(path: &Path, format: DepthFormat, divisor: f64) -> Result<DepthMap> {
    match format {
        DepthFormat::U16 => read_depth_u16(path, divisor),
        DepthFormat::F32 => read_depth_f32(path),
        DepthFormat::Txt => read_depth_txt(path),
    }
}

/// Writes a depth raster in the requested format (atomically).
pub fn write_depth(depth: &DepthMap, path: &Path, format: DepthFormat, divisor: f64) -> Result<()> {
    match format {
        DepthFormat::U16 => write_depth_u16(depth, path, divisor),
        DepthFormat::F32 => write_depth_f32(depth, path),
        DepthFormat::Txt => write_depth_txt(depth, path),
    }
}

fn read_depth_u16(path: &Path, divisor: f64) -> Result<DepthMap> {
    if !(divisor > 0.0) {
        return Err(Error::Domain(format!("divisor must be positive, got {divisor}")));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| fmt_err(path, 0, format!("not a decodable PNG: {e}")))?;
    let gray = match img {
        image::DynamicImage::ImageLuma16(g) => g,
        other => image::DynamicImage::to_luma16(&other),
    };
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let values: Vec<f64> = gray
        .pixels()
        .map(|p| {
            let raw = p.0[0];
            if raw == 0 {
                f64::NAN // from_raw masks non-finite samples out
            } else {
                raw as f64 / divisor
            }
        })
        .collect();
    DepthMap::from_raw(w, h, values)
}

fn write_depth_u16(depth: &DepthMap, path: &Path, divisor: f64) -> Result<()> {
    if !(divisor > 0.0) {
        return Err(Error::Domain(format!("divisor must be positive, got {divisor}")));
    }
    let (w, h) = (depth.width(), depth.height());
    let mut img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(w as u32, h as u32);
    for v in 0..h {
        for u in 0..w {
            let raw = match depth.get(u, v) {
                Some(d) => (d * divisor).round().clamp(0.0, u16::MAX as f64) as u16,
                None => 0,
            };
            img.put_pixel(u as u32, v as u32, image::Luma([raw]));
        }
    }
    let mut buf = Vec::new();
    img.write_to(
        &mut std::io::Cursor::new(&mut buf),
        image::ImageFormat::Png,
    )
    .map_err(|e| Error::Domain(format!("PNG encoding failed: {e}")))?;
    atomic_write(path, &buf)
}

fn read_depth_f32(path: &Path) -> Result<DepthMap> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cur = std::io::Cursor::new(&bytes);
    let mut magic = [0u8; 4];
    cur.read_exact(&mut magic)
        .map_err(|_| fmt_err(path, 0, "truncated file: missing magic"))?;
    if &magic != F32_MAGIC {
        return Err(fmt_err(path, 0, format!("unknown magic {magic:?}, expected {F32_MAGIC:?}")));
    }
    let w = cur
        .read_u32::<LittleEndian>()
        .map_err(|_| fmt_err(path, 4, "truncated file: missing width"))? as usize;
    let h = cur
        .read_u32::<LittleEndian>()
        .map_err(|_| fmt_err(path, 8, "truncated file: missing height"))? as usize;
    if w == 0 || h == 0 {
        return Err(fmt_err(path, 4, format!("degenerate dimensions {w}x{h}")));
    }
    let expected = 12 + 4 * w * h;
    if bytes.len() != expected {
        return Err(fmt_err(
            path,
            bytes.len().min(expected) as u64,
            format!("size mismatch: {w}x{h} needs {expected} bytes, file has {}", bytes.len()),
        ));
    }
    let mut values = Vec::with_capacity(w * h);
    for _ in 0..w * h {
        values.push(cur.read_f32::<LittleEndian>().unwrap() as f64);
    }
    DepthMap::from_raw(w, h, values)
}

fn write_depth_f32(depth: &DepthMap, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(12 + 4 * depth.values().len());
    buf.extend_from_slice(F32_MAGIC);
    buf.write_u32::<LittleEndian>(depth.width() as u32).unwrap();
    buf.write_u32::<LittleEndian>(depth.height() as u32).unwrap();
    for i in 0..depth.values().len() {
        let x = if depth.mask()[i] {
            depth.values()[i] as f32
        } else {
            f32::NAN
        };
        buf.write_f32::<LittleEndian>(x).unwrap();
    }
    atomic_write(path, &buf)
}

fn read_depth_txt(path: &Path) -> Result<DepthMap> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut consumed = 0u64;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| fmt_err(path, 0, "empty file"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let parse_dim = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| fmt_err(path, 0, format!("bad dimension {s:?} in header")))
    };
    if dims.len() != 2 {
        return Err(fmt_err(path, 0, format!("header must be 'width height', got {header:?}")));
    }
    let (w, h) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    consumed += header.len() as u64 + 1;
    let mut values = Vec::with_capacity(w * h);
    for row in 0..h {
        let line = lines.next().ok_or_else(|| {
            fmt_err(path, consumed, format!("truncated: expected {h} rows, got {row}"))
        })?;
        let mut count = 0;
        for tok in line.split_whitespace() {
            let x: f64 = tok.parse().map_err(|_| {
                fmt_err(path, consumed, format!("bad value {tok:?} in row {row}"))
            })?;
            values.push(x);
            count += 1;
        }
        if count != w {
            return Err(fmt_err(
                path,
                consumed,
                format!("row {row} has {count} values, expected {w}"),
            ));
        }
        consumed += line.len() as u64 + 1;
    }
    DepthMap::from_raw(w, h, values)
}

fn write_depth_txt(depth: &DepthMap, path: &Path) -> Result<()> {
    let mut out = format!("{} {}\n", depth.width(), depth.height());
    for v in 0..depth.height() {
        let row: Vec<String> = (0..depth.width())
            .map(|u| match depth.get(u, v) {
                Some(d) => format!("{d:.17e}"),
                None => "nan".to_string(),
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Writes a point cloud as PLY (`format ascii 1.0` or
/// `format binary_little_endian 1.0`), with `nx ny nz` properties when the
/// cloud carries normals. Coordinates are stored as f32, the common PLY
/// convention.
pub fn write_ply(cloud: &PointCloud, path: &Path, binary: bool) -> Result<()> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput("refusing to write an empty point cloud".into()));
    }
    let mut buf: Vec<u8> = Vec::new();
    let format_line = if binary {
        "format binary_little_endian 1.0"
    } else {
        "format ascii 1.0"
    };
    buf.extend_from_slice(b"ply\n");
    buf.extend_from_slice(format_line.as_bytes());
    buf.push(b'\n');
    buf.extend_from_slice(format!("element vertex {}\n", cloud.len()).as_bytes());
    for prop in ["x", "y", "z"] {
        buf.extend_from_slice(format!("property float {prop}\n").as_bytes());
    }
    if cloud.normals.is_some() {
        for prop in ["nx", "ny", "nz"] {
            buf.extend_from_slice(format!("property float {prop}\n").as_bytes());
        }
    }
    buf.extend_from_slice(b"end_header\n");

    for i in 0..cloud.len() {
        let mut record: Vec<f32> = cloud.points[i].iter().map(|&x| x as f32).collect();
        if let Some(normals) = &cloud.normals {
            record.extend(normals[i].iter().map(|&x| x as f32));
        }
        if binary {
            for x in record {
                buf.write_f32::<LittleEndian>(x).unwrap();
            }
        } else {
            let text: Vec<String> = record.iter().map(|x| format!("{x}")).collect();
            buf.extend_from_slice(text.join(" ").as_bytes());
            buf.push(b'\n');
        }
    }
    atomic_write(path, &buf)
}

/// Writes bytes to `path` via a temporary sibling file and an atomic rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Camera initialization: a field of view or explicit intrinsics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CameraInit {
    Fov { fov_deg: f64 },
    Explicit { fx: f64, u0: f64, v0: f64 },
}

impl Default for CameraInit {
    fn default() -> Self {
        CameraInit::Fov { fov_deg: 60.0 }
    }
}

/// Declarative batch-run configuration; serializes to TOML (comments and
/// nesting supported) with identity round-trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub gt_inputs: Vec<PathBuf>,
    pub format: DepthFormat,
    /// Divisor for the u16 format; always explicit, never inferred.
    pub divisor: f64,
    pub camera: CameraInit,
    /// Metric names to compute; empty means all.
    pub metrics: Vec<String>,
    pub loss_weights: LossWeights,
    pub sampler: SamplerConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            gt_inputs: Vec::new(),
            format: DepthFormat::F32,
            divisor: DEFAULT_DIVISOR,
            camera: CameraInit::default(),
            metrics: Vec::new(),
            loss_weights: LossWeights::default(),
            sampler: SamplerConfig::default(),
            seed: 0,
            out_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Domain(format!("config encode: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Domain(format!("config parse: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_toml()?.as_bytes())
    }
}

/// One processed item in a batch report. Failures are kept as rows with a
/// non-`ok` status rather than dropped.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub status: String,
    pub metrics: MetricReport,
    pub delta_d_hat: Option<f64>,
    pub alpha_f_hat: Option<f64>,
    pub seconds: Option<f64>,
}

impl ReportRow {
    pub fn ok(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            status: "ok".into(),
            ..Self::default()
        }
    }

    pub fn failed(id: impl Into<String>, status: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            status: status.into(),
            ..Self::default()
        }
    }
}

/// Report output dialects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Formats a float with 6 significant digits (plain notation).
pub fn fmt_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let decimals = (5 - v.abs().log10().floor() as i64).clamp(0, 17) as usize;
    format!("{v:.decimals$}")
}

const REPORT_COLUMNS: [&str; 5] = ["id", "status", "delta_d_hat", "alpha_f_hat", "seconds"];

/// Renders rows as a document: CSV with a fixed column order and 6
/// significant digits, or structured JSON.
pub fn emit_report(rows: &[ReportRow], format: ReportFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("no report rows".into()));
    }
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(rows)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Error::Domain(format!("report encode: {e}"))),
        ReportFormat::Csv => {
            let mut header: Vec<&str> = REPORT_COLUMNS[..2].to_vec();
            header.extend(MetricReport::FIELDS);
            header.extend(&REPORT_COLUMNS[2..]);
            let mut out = header.join(",");
            out.push('\n');
            for row in rows {
                let mut cells = vec![row.id.clone(), row.status.clone()];
                let opt = |v: Option<f64>| v.map(fmt_sig6).unwrap_or_default();
                for field in MetricReport::FIELDS {
                    cells.push(opt(row.metrics.get(field)));
                }
                cells.push(opt(row.delta_d_hat));
                cells.push(opt(row.alpha_f_hat));
                cells.push(opt(row.seconds));
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraIntrinsics;
    use crate::geometry::unproject;

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn u16_divisor_and_invalid_zero() {
        let dir = tmpdir();
        let path = dir.path().join("d.png");
        let depth = DepthMap::new(
            2,
            2,
            vec![1.0, 2.0, 0.0, 3.0],
            vec![true, true, false, true],
        )
        .unwrap();
        write_depth(&depth, &path, DepthFormat::U16, 1000.0).unwrap();
        let back = read_depth(&path, DepthFormat::U16, 1000.0).unwrap();
        assert_eq!(back.get(0, 0), Some(1.0));
        assert_eq!(back.get(1, 0), Some(2.0));
        assert!(!back.is_valid(0, 1));
        assert_eq!(back.get(1, 1), Some(3.0));
    }

    #[test]
    fn u16_round_trip_within_quantization() {
        let dir = tmpdir();
        let path = dir.path().join("d.png");
        let values: Vec<f64> = (0..64).map(|i| 0.5 + 0.031 * i as f64).collect();
        let depth = DepthMap::from_values(8, 8, values).unwrap();
        write_depth(&depth, &path, DepthFormat::U16, 1000.0).unwrap();
        let back = read_depth(&path, DepthFormat::U16, 1000.0).unwrap();
        for i in 0..64 {
            assert!((back.values()[i] - depth.values()[i]).abs() <= 0.5 / 1000.0 + 1e-12);
        }
    }

    #[test]
    fn f32_round_trip_and_nan_mask() {
        let dir = tmpdir();
        let path = dir.path().join("d.depf");
        let depth = DepthMap::from_raw(3, 2, vec![1.5, f64::NAN, 2.25, 3.0, f64::INFINITY, 0.125])
            .unwrap();
        write_depth(&depth, &path, DepthFormat::F32, 1.0).unwrap();
        let back = read_depth(&path, DepthFormat::F32, 1.0).unwrap();
        assert_eq!(back.mask(), depth.mask());
        for i in 0..6 {
            if depth.mask()[i] {
                assert_eq!(back.values()[i], depth.values()[i]); // exact in f32
            }
        }
    }

    #[test]
    fn f32_format_errors_carry_offsets() {
        let dir = tmpdir();
        let bad_magic = dir.path().join("bad.depf");
        fs::write(&bad_magic, b"XXXX\x01\x00\x00\x00\x01\x00\x00\x00").unwrap();
        match read_depth(&bad_magic, DepthFormat::F32, 1.0).unwrap_err() {
            Error::Format { offset, .. } => assert_eq!(offset, 0),
            other => panic!("unexpected error {other:?}"),
        }

        let truncated = dir.path().join("trunc.depf");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(F32_MAGIC);
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes()); // 3 samples missing
        fs::write(&truncated, &bytes).unwrap();
        match read_depth(&truncated, DepthFormat::F32, 1.0).unwrap_err() {
            Error::Format { offset, message, .. } => {
                assert_eq!(offset, 16);
                assert!(message.contains("size mismatch"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn txt_round_trip_and_errors() {
        let dir = tmpdir();
        let path = dir.path().join("d.txt");
        let depth =
            DepthMap::from_raw(2, 2, vec![1.0, f64::NAN, 1.0 / 3.0, 4.0]).unwrap();
        write_depth(&depth, &path, DepthFormat::Txt, 1.0).unwrap();
        let back = read_depth(&path, DepthFormat::Txt, 1.0).unwrap();
        assert_eq!(back.values()[0], 1.0);
        assert!(!back.mask()[1]);
        assert_eq!(back.values()[2], depth.values()[2]); // 17 digits: exact
        let short = dir.path().join("short.txt");
        fs::write(&short, "2 2\n1.0 2.0\n").unwrap();
        match read_depth(&short, DepthFormat::Txt, 1.0).unwrap_err() {
            Error::Format { offset, .. } => assert_eq!(offset, 12),
            other => panic!("unexpected error {other:?}"),
        }
        let ragged = dir.path().join("ragged.txt");
        fs::write(&ragged, "2 1\n1.0 2.0 3.0\n").unwrap();
        assert!(matches!(
            read_depth(&ragged, DepthFormat::Txt, 1.0),
            Err(Error::Format { .. })
        ));
    }

    /// Minimal independent PLY parser used to cross-check the writer.
    fn parse_ply(bytes: &[u8]) -> (bool, usize, usize, Vec<f32>) {
        let header_end = bytes
            .windows(11)
            .position(|w| w == b"end_header\n")
            .unwrap()
            + 11;
        let header = std::str::from_utf8(&bytes[..header_end]).unwrap();
        let binary = header.contains("binary_little_endian");
        let count: usize = header
            .lines()
            .find(|l| l.starts_with("element vertex"))
            .unwrap()
            .split_whitespace()
            .nth(2)
            .unwrap()
            .parse()
            .unwrap();
        let props = header
            .lines()
            .filter(|l| l.starts_with("property float"))
            .count();
        let mut data = Vec::new();
        if binary {
            let body = &bytes[header_end..];
            assert_eq!(body.len(), count * props * 4);
            for chunk in body.chunks_exact(4) {
                data.push(f32::from_le_bytes(chunk.try_into().unwrap()));
            }
        } else {
            for line in std::str::from_utf8(&bytes[header_end..]).unwrap().lines() {
                for tok in line.split_whitespace() {
                    data.push(tok.parse().unwrap());
                }
            }
        }
        (binary, count, props, data)
    }

    fn sample_cloud() -> PointCloud {
        let depth = DepthMap::from_values(4, 4, (0..16).map(|i| 1.0 + i as f64 * 0.1).collect())
            .unwrap();
        let cam = CameraIntrinsics::from_fov(4, 4, 60.0).unwrap();
        unproject(&depth, &cam).unwrap()
    }

    #[test]
    fn ply_ascii_and_binary_agree() {
        let dir = tmpdir();
        let cloud = sample_cloud();
        let a = dir.path().join("a.ply");
        let b = dir.path().join("b.ply");
        write_ply(&cloud, &a, false).unwrap();
        write_ply(&cloud, &b, true).unwrap();
        let (bin_a, n_a, p_a, d_a) = parse_ply(&fs::read(&a).unwrap());
        let (bin_b, n_b, p_b, d_b) = parse_ply(&fs::read(&b).unwrap());
        assert!(!bin_a && bin_b);
        assert_eq!((n_a, p_a), (16, 3));
        assert_eq!((n_b, p_b), (16, 3));
        for (x, y) in d_a.iter().zip(&d_b) {
            assert!((x - y).abs() <= 1e-6);
        }
        for (i, x) in d_b.iter().enumerate() {
            assert!((*x as f64 - cloud.points[i / 3][i % 3]).abs() <= 1e-6);
        }
    }

    #[test]
    fn ply_single_point_and_normals() {
        let dir = tmpdir();
        let cloud = PointCloud::new(
            vec![[1.0, 2.0, 3.0]],
            None,
            Some(vec![[0.0, 0.0, -1.0]]),
        )
        .unwrap();
        let path = dir.path().join("p.ply");
        write_ply(&cloud, &path, false).unwrap();
        let bytes = fs::read(&path).unwrap();
        let text = std::str::from_utf8(&bytes).unwrap();
        assert!(text.contains("element vertex 1"));
        let (_, count, props, data) = parse_ply(&bytes);
        assert_eq!((count, props), (1, 6));
        assert_eq!(data, vec![1.0, 2.0, 3.0, 0.0, 0.0, -1.0]);
        assert!(write_ply(&PointCloud::default(), &path, false).is_err());
    }

    #[test]
    fn run_config_toml_round_trip() {
        let config = RunConfig {
            inputs: vec![PathBuf::from("a.depf")],
            gt_inputs: vec![PathBuf::from("a_gt.depf")],
            format: DepthFormat::U16,
            divisor: 256.0,
            camera: CameraInit::Explicit {
                fx: 300.0,
                u0: 64.0,
                v0: 48.0,
            },
            metrics: vec!["absrel".into(), "whdr".into()],
            seed: 42,
            out_dir: PathBuf::from("out"),
            ..RunConfig::default()
        };
        let text = config.to_toml().unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, config);
        // comments are tolerated
        let commented = format!("# run configuration\n{text}");
        assert_eq!(RunConfig::from_toml(&commented).unwrap(), config);
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(1.0), "1.00000");
        assert_eq!(fmt_sig6(123456.7), "123457");
        assert_eq!(fmt_sig6(0.0123456749), "0.0123457");
        assert_eq!(fmt_sig6(-2.5), "-2.50000");
    }

    #[test]
    fn csv_report_shape_and_parse_back() {
        let mut row = ReportRow::ok("img0");
        row.metrics.absrel = Some(0.0123456789);
        row.metrics.delta1 = Some(1.0);
        row.delta_d_hat = Some(0.3);
        row.alpha_f_hat = Some(0.9);
        let csv = emit_report(&[row.clone()], ReportFormat::Csv).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "id,status,absrel,delta1,whdr,lsiv,dbe_acc,dbe_comp,pe_plan,pe_orie,delta_d_hat,alpha_f_hat,seconds"
        );
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells[0], "img0");
        assert_eq!(cells[1], "ok");
        let absrel_back: f64 = cells[2].parse().unwrap();
        assert!((absrel_back - 0.0123456789).abs() < 1e-7);
        assert_eq!(cells[4], ""); // absent metric stays empty, not zero

        // column order and values stable across invocations
        assert_eq!(csv, emit_report(&[row.clone()], ReportFormat::Csv).unwrap());

        let json = emit_report(&[row], ReportFormat::Json).unwrap();
        let parsed: Vec<ReportRow> = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed[0].metrics.delta1, Some(1.0));
    }
}
