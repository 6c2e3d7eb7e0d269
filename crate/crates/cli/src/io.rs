//! Image, CSV and JSON files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use image::RgbImage;
use num_complex::Complex64;
use qsaf::flow::FlowDiagnostic;
use qsaf::{CMatrix, HermitianMatrix};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const DIAGNOSTICS_HEADER: [&str; 3] = ["iter", "purity_gap_max", "potential_J"];

/// Reads a PNG or PPM file as 8-bit RGB.
pub fn read_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).with_context(|| format!("reading image {}", path.display()))?;
    Ok(img.to_rgb8())
}

/// Writes 8-bit RGB; the format follows the extension (`.png` or `.ppm`).
pub fn write_rgb(path: &Path, img: &RgbImage) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("png" | "ppm") => {}
        _ => bail!("unsupported image extension for {}", path.display()),
    }
    img.save(path).with_context(|| format!("writing image {}", path.display()))
}

/// Luminance of each pixel in `[0, 255]`, row-major.
pub fn to_gray(img: &RgbImage) -> Vec<f64> {
    image::DynamicImage::ImageRgb8(img.clone())
        .to_luma8()
        .pixels()
        .map(|p| f64::from(p.0[0]))
        .collect()
}

/// Gray values rounded into an RGB image.
pub fn from_gray(width: u32, height: u32, values: &[f64]) -> RgbImage {
    RgbImage::from_fn(width, height, |x, y| {
        let v = values[(y * width + x) as usize].round().clamp(0.0, 255.0) as u8;
        image::Rgb([v, v, v])
    })
}

/// Writes rows of numbers under `header`.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            bail!("row has {} fields, header has {}", row.len(), header.len());
        }
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics(path: &Path, diagnostics: &[FlowDiagnostic]) -> Result<()> {
    let rows: Vec<Vec<f64>> = diagnostics
        .iter()
        .map(|d| vec![d.iteration as f64, d.purity_gap_max, d.potential_j])
        .collect();
    write_table(path, &DIAGNOSTICS_HEADER, &rows)
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<FlowDiagnostic>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    if r.headers()?.iter().ne(DIAGNOSTICS_HEADER) {
        bail!("unexpected diagnostics header in {}", path.display());
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            let field = |i: usize| -> Result<&str> { rec.get(i).context("missing field") };
            Ok(FlowDiagnostic {
                iteration: field(0)?.parse()?,
                purity_gap_max: field(1)?.parse()?,
                potential_j: field(2)?.parse()?,
            })
        })
        .collect()
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// A complex matrix as separate real and imaginary row arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        Self {
            re: rows(|z| z.re),
            im: Some(rows(|z| z.im)),
        }
    }

    pub fn to_hermitian(&self) -> Result<HermitianMatrix> {
        let n = self.re.len();
        if n == 0 || self.re.iter().any(|r| r.len() != n) {
            bail!("matrix must be square and non-empty");
        }
        if let Some(im) = &self.im {
            if im.len() != n || im.iter().any(|r| r.len() != n) {
                bail!("imaginary part has the wrong shape");
            }
        }
        let m = CMatrix::from_fn(n, n, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |im| im[i][j]);
            Complex64::new(self.re[i][j], im)
        });
        Ok(HermitianMatrix::new(m)?)
    }
}
