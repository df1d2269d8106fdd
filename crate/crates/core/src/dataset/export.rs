use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::FilterType;
use image::{GrayImage, ImageEncoder};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dsp::{Dtm, Rtm};
use crate::error::{Error, Result};
use crate::matrix::{self, MatrixFile, RealMatrix};

/// Display floor relative to the map maximum.
pub const DB_FLOOR: f64 = -60.0;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary file so an interrupted run never leaves a
/// truncated artefact under the final name.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".part");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Rhs,
    Rhm,
    Png,
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the manifest's directory.
    pub path: String,
    pub format: FileFormat,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Raw,
    Rtm,
    Dtm,
    Trajectory,
    Entropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub kind: ArtifactKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub files: Vec<FileRecord>,
}

/// Output contract of a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub activity: String,
    pub seed: u64,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn count(&self, kind: ArtifactKind) -> usize {
        self.artifacts.iter().filter(|a| a.kind == kind).count()
    }

    pub fn files(&self) -> impl Iterator<Item = &FileRecord> {
        self.artifacts.iter().flat_map(|a| &a.files)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    /// Checks every listed file under `dir` for size, checksum and format.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        verify_files(self.files(), dir)
    }
}

pub fn verify_files<'a>(files: impl IntoIterator<Item = &'a FileRecord>, dir: &Path) -> Result<()> {
    for f in files {
        let path = dir.join(&f.path);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if bytes.len() as u64 != f.bytes || sha256_hex(&bytes) != f.sha256 {
            return Err(Error::Format(format!("{}: checksum mismatch", path.display())));
        }
        reparse(&bytes, f.format).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn reparse(bytes: &[u8], format: FileFormat) -> std::result::Result<(), String> {
    match format {
        FileFormat::Rhs | FileFormat::Rhm => {
            let m = matrix::decode(bytes).map_err(|e| e.to_string())?;
            let want = if format == FileFormat::Rhs { "RHS1" } else { "RHM1" };
            if m.magic() != want {
                return Err(format!("expected {want}, found {}", m.magic()));
            }
            Ok(())
        }
        FileFormat::Png => image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
            .map(|_| ())
            .map_err(|e| e.to_string()),
        FileFormat::Json => serde_json::from_slice::<serde_json::Value>(bytes)
            .map(|_| ())
            .map_err(|e| e.to_string()),
        FileFormat::Csv => {
            let text = std::str::from_utf8(bytes).map_err(|e| e.to_string())?;
            let mut lines = text.lines();
            let header = lines.next().ok_or("empty CSV")?;
            let width = header.split(',').count();
            match lines.find(|l| l.split(',').count() != width) {
                Some(l) => Err(format!("ragged CSV row '{l}'")),
                None => Ok(()),
            }
        }
    }
}

/// Collects files written under a common root.
pub struct Writer {
    root: PathBuf,
}

impl Writer {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn put(&self, rel: &str, format: FileFormat, bytes: &[u8]) -> Result<FileRecord> {
        write_file(&self.root.join(rel), bytes)?;
        Ok(FileRecord {
            path: rel.to_string(),
            format,
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        })
    }

    pub fn put_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<FileRecord> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("JSON value serialises");
        bytes.push(b'\n');
        self.put(rel, FileFormat::Json, &bytes)
    }
}

/// 8-bit grayscale rendering: dB relative to the maximum, clipped at
/// [`DB_FLOOR`], min-max stretched, last matrix row at the top of the image.
/// `amplitude` selects 20·log10 (magnitudes) instead of 10·log10 (powers).
pub fn render(map: &RealMatrix, amplitude: bool, size: Option<(u32, u32)>) -> GrayImage {
    let (rows, cols) = (map.rows(), map.cols());
    let peak = map.max();
    let factor = if amplitude { 20.0 } else { 10.0 };
    let db: Vec<f64> = map
        .as_slice()
        .iter()
        .map(|&v| {
            if peak > 0.0 && v > 0.0 {
                (factor * (v / peak).log10()).max(DB_FLOOR)
            } else {
                DB_FLOOR
            }
        })
        .collect();
    let lo = db.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut img = GrayImage::new(cols as u32, rows as u32);
    for c in 0..cols {
        for r in 0..rows {
            let v = db[c * rows + r];
            let level = if span > 0.0 { ((v - lo) / span * 255.0).round() as u8 } else { 0 };
            img.put_pixel(c as u32, (rows - 1 - r) as u32, image::Luma([level]));
        }
    }
    match size {
        Some((w, h)) if (w, h) != (cols as u32, rows as u32) => {
            image::imageops::resize(&img, w, h, FilterType::Triangle)
        }
        _ => img,
    }
}

pub fn encode_png(img: &GrayImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(img.as_raw(), img.width(), img.height(), image::ExtendedColorType::L8)
        .map_err(|e| Error::Format(format!("PNG encoding failed: {e}")))?;
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Axis {
    pub quantity: String,
    pub unit: String,
    pub first: f64,
    pub step: f64,
}

/// JSON sidecar next to every exported map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub kind: ArtifactKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub rows: usize,
    pub cols: usize,
    /// Axis of matrix row index 0, 1, ... (the PNG shows the last row on top).
    pub row_axis: Axis,
    pub col_axis: Axis,
    pub value: String,
    pub entropy_nats: Option<f64>,
    pub png_scale: String,
    pub png_floor_db: f64,
    pub png_width: u32,
    pub png_height: u32,
}

/// RHM1 + PNG + JSON for the RTM.
pub fn export_rtm(w: &Writer, rtm: &Rtm, entropy: Option<f64>, size: Option<(u32, u32)>) -> Result<Artifact> {
    let m = &rtm.magnitude;
    let rhm = w.put("rtm.rhm", FileFormat::Rhm, &matrix::encode_real(m, (rtm.range_step, rtm.time_step))?)?;
    let img = render(m, true, size);
    let png = w.put("rtm.png", FileFormat::Png, &encode_png(&img)?)?;
    let sidecar = Sidecar {
        kind: ArtifactKind::Rtm,
        variant: None,
        rows: m.rows(),
        cols: m.cols(),
        row_axis: Axis {
            quantity: "range".into(),
            unit: "m".into(),
            first: 0.0,
            step: rtm.range_step,
        },
        col_axis: Axis {
            quantity: "time".into(),
            unit: "s".into(),
            first: 0.0,
            step: rtm.time_step,
        },
        value: "magnitude".into(),
        entropy_nats: entropy,
        png_scale: "20log10 relative to max".into(),
        png_floor_db: DB_FLOOR,
        png_width: img.width(),
        png_height: img.height(),
    };
    let json = w.put_json("rtm.json", &sidecar)?;
    Ok(Artifact {
        kind: ArtifactKind::Rtm,
        variant: None,
        files: vec![rhm, png, json],
    })
}

/// RHM1 + PNG + JSON for one DTM, named after its variant under `prefix`.
pub fn export_dtm(
    w: &Writer,
    prefix: &str,
    dtm: &Dtm,
    entropy: Option<f64>,
    size: Option<(u32, u32)>,
) -> Result<Artifact> {
    let tag = dtm.variant.tag();
    let stem = format!("{prefix}dtm_{tag}");
    let m = &dtm.power;
    let rhm = w.put(
        &format!("{stem}.rhm"),
        FileFormat::Rhm,
        &matrix::encode_real(m, (dtm.doppler_step, dtm.time_step))?,
    )?;
    let img = render(m, false, size);
    let png = w.put(&format!("{stem}.png"), FileFormat::Png, &encode_png(&img)?)?;
    let sidecar = Sidecar {
        kind: ArtifactKind::Dtm,
        variant: Some(tag.clone()),
        rows: m.rows(),
        cols: m.cols(),
        row_axis: Axis {
            quantity: "doppler".into(),
            unit: "Hz".into(),
            first: dtm.doppler(0),
            step: dtm.doppler_step,
        },
        col_axis: Axis {
            quantity: "time".into(),
            unit: "s".into(),
            first: dtm.time_origin,
            step: dtm.time_step,
        },
        value: "power".into(),
        entropy_nats: entropy,
        png_scale: "10log10 relative to max".into(),
        png_floor_db: DB_FLOOR,
        png_width: img.width(),
        png_height: img.height(),
    };
    let json = w.put_json(&format!("{stem}.json"), &sidecar)?;
    Ok(Artifact {
        kind: ArtifactKind::Dtm,
        variant: Some(tag),
        files: vec![rhm, png, json],
    })
}

/// Human-readable summary of an RHS1/RHM1 file and its sidecar if present.
pub fn inspect(path: &Path) -> Result<String> {
    use std::fmt::Write;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let file = matrix::decode(bytes.as_slice()).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let (rows, cols) = file.shape();
    let (s0, s1) = file.steps();
    let mut out = String::new();
    let _ = writeln!(out, "file:   {}", path.display());
    let _ = writeln!(out, "format: {}", file.magic());
    let _ = writeln!(out, "shape:  {rows} x {cols}");
    let _ = writeln!(out, "steps:  {s0:e}, {s1:e}");
    match &file {
        MatrixFile::Complex { matrix, .. } => {
            let _ = writeln!(out, "mean power: {:e}", matrix.mean_power());
        }
        MatrixFile::Real { matrix, .. } => {
            let _ = writeln!(out, "max: {:e}  sum: {:e}", matrix.max(), matrix.sum());
            match crate::dsp::entropy(matrix) {
                Ok(h) => {
                    let _ = writeln!(out, "entropy: {h:.6} nats");
                }
                Err(_) => {
                    let _ = writeln!(out, "entropy: undefined (all-zero map)");
                }
            }
        }
    }
    let sidecar = path.with_extension("json");
    if let Ok(text) = fs::read_to_string(&sidecar) {
        if let Ok(s) = serde_json::from_str::<Sidecar>(&text) {
            let _ = writeln!(
                out,
                "rows:   {} from {} {} step {}",
                s.row_axis.quantity, s.row_axis.first, s.row_axis.unit, s.row_axis.step
            );
            let _ = writeln!(
                out,
                "cols:   {} from {} {} step {}",
                s.col_axis.quantity, s.col_axis.first, s.col_axis.unit, s.col_axis.step
            );
            if let Some(v) = s.variant {
                let _ = writeln!(out, "variant: {v}");
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_orientation_and_floor() {
        let mut m = RealMatrix::zeros(3, 2);
        m.set(2, 0, 1.0);
        m.set(0, 1, 1e-3);
        let img = render(&m, false, None);
        assert_eq!(img.dimensions(), (2, 3));
        // highest row is drawn at the top
        assert_eq!(img.get_pixel(0, 0)[0], 255);
        // -30 dB sits halfway down a 60 dB range
        assert_eq!(img.get_pixel(1, 2)[0], 128);
        assert_eq!(img.get_pixel(1, 1)[0], 0);
        let z = render(&RealMatrix::zeros(4, 4), true, Some((8, 8)));
        assert_eq!(z.dimensions(), (8, 8));
        assert!(z.pixels().all(|p| p[0] == 0));
    }

    #[test]
    fn written_files_verify_and_tampering_is_caught() {
        let dir = tempfile::tempdir().unwrap();
        let w = Writer::new(dir.path());
        let m = RealMatrix::from_columns(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let rhm = w.put("a/m.rhm", FileFormat::Rhm, &matrix::encode_real(&m, (1.0, 2.0)).unwrap()).unwrap();
        let png = w.put("m.png", FileFormat::Png, &encode_png(&render(&m, false, None)).unwrap()).unwrap();
        let csv = w.put("t.csv", FileFormat::Csv, b"a,b\n1,2\n").unwrap();
        verify_files([&rhm, &png, &csv], dir.path()).unwrap();
        fs::write(dir.path().join("t.csv"), b"a,b\n1,3\n").unwrap();
        assert!(matches!(verify_files([&csv], dir.path()), Err(Error::Format(_))));
        assert!(!dir.path().join("m.png.part").exists());
    }
}
