//! Hyperspectral cube container, synthetic scene generator, and on-disk format.
//!
//! Cube files: 4-byte magic `HSC1`, little-endian u32 header length, UTF-8
//! JSON header `{"h","w","d","dtype":"f32","layout":"bip","wavelengths"}`,
//! then `h*w*d` little-endian f32 samples in band-interleaved-by-pixel order.
//! Labels travel in a JSON sidecar (`num_classes` + one label per pixel,
//! row-major).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CUBE_MAGIC: &[u8; 4] = b"HSC1";

/// Fraction of an eigendirection's variance that class separation may consume
/// before generation refuses (the remainder stays within-class).
const MAX_SEPARATION_BUDGET: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct HsiCube {
    pub h: usize,
    pub w: usize,
    pub d: usize,
    /// Band-interleaved by pixel: `data[p*d + j]` is band `j` of pixel `p`.
    pub data: Vec<f32>,
    pub wavelengths: Option<Vec<f64>>,
}

impl HsiCube {
    pub fn new(
        h: usize,
        w: usize,
        d: usize,
        data: Vec<f32>,
        wavelengths: Option<Vec<f64>>,
    ) -> Result<Self> {
        if h == 0 || w == 0 || d == 0 {
            return Err(Error::argument("cube dimensions must be positive"));
        }
        if data.len() != h * w * d {
            return Err(Error::argument(format!(
                "cube data has {} samples, expected {}x{}x{} = {}",
                data.len(),
                h,
                w,
                d,
                h * w * d
            )));
        }
        if let Some(ws) = &wavelengths {
            if ws.len() != d {
                return Err(Error::argument(format!(
                    "wavelength list has {} entries for {} bands",
                    ws.len(),
                    d
                )));
            }
        }
        Ok(HsiCube {
            h,
            w,
            d,
            data,
            wavelengths,
        })
    }

    pub fn num_pixels(&self) -> usize {
        self.h * self.w
    }

    /// Spectrum of the pixel at row-major index `p`.
    pub fn pixel(&self, p: usize) -> &[f32] {
        &self.data[p * self.d..(p + 1) * self.d]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCube {
    pub cube: HsiCube,
    /// One class id per pixel, row-major, contiguous blocks by construction.
    pub labels: Vec<u32>,
    pub num_classes: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct CubeHeader {
    h: usize,
    w: usize,
    d: usize,
    dtype: String,
    layout: String,
    wavelengths: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelSidecar {
    num_classes: u32,
    labels: Vec<u32>,
}

/// Standard normal via Box-Muller; two uniform draws per sample keeps the
/// stream layout trivial to reproduce.
pub(crate) fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0,1], ln stays finite
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Random orthonormal basis: modified Gram-Schmidt on a seeded Gaussian
/// matrix. Columns are the eigendirections of the generated covariance.
fn random_orthonormal(d: usize, rng: &mut impl Rng) -> Array2<f64> {
    let mut q = Array2::zeros((d, d));
    for j in 0..d {
        for i in 0..d {
            q[[i, j]] = standard_normal(rng);
        }
    }
    for j in 0..d {
        for k in 0..j {
            let dot: f64 = (0..d).map(|i| q[[i, k]] * q[[i, j]]).sum();
            for i in 0..d {
                q[[i, j]] -= dot * q[[i, k]];
            }
        }
        let norm: f64 = (0..d).map(|i| q[[i, j]] * q[[i, j]]).sum::<f64>().sqrt();
        // A zero column after projection has probability ~0; renorm guards fp.
        for i in 0..d {
            q[[i, j]] /= norm;
        }
    }
    q
}

/// Contiguous row-major class blocks: every class present, sizes within one
/// pixel of each other, mixed-class neighborhoods only at block borders.
pub fn block_labels(num_pixels: usize, num_classes: u32) -> Vec<u32> {
    (0..num_pixels)
        .map(|p| ((p as u64 * num_classes as u64) / num_pixels as u64) as u32)
        .collect()
}

/// Synthetic scene with a geometric eigen-spectrum `rho^(j-1)` and class
/// means on a centered unit-gap grid along the top-2 eigendirections. The
/// between-class variance along each displaced direction is carved out of the
/// within-class variance so the total covariance keeps the stated spectrum
/// (plus isotropic `noise_sigma^2`).
pub fn generate_synthetic(
    h: usize,
    w: usize,
    d: usize,
    num_classes: u32,
    rho: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<LabeledCube> {
    if h == 0 || w == 0 || d == 0 {
        return Err(Error::argument("cube dimensions must be positive"));
    }
    if num_classes == 0 {
        return Err(Error::argument("need at least one class"));
    }
    if (num_classes as usize) > h * w {
        return Err(Error::argument(format!(
            "{} classes cannot tile {} pixels",
            num_classes,
            h * w
        )));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::argument(format!(
            "spectral decay rho must lie in (0,1), got {rho}"
        )));
    }
    if noise_sigma < 0.0 {
        return Err(Error::argument("noise_sigma must be nonnegative"));
    }
    if num_classes > 1 && d < 2 {
        return Err(Error::argument(
            "class separation uses the top-2 eigendirections; need d >= 2",
        ));
    }

    let m = h * w;
    let c = num_classes as usize;
    let labels = block_labels(m, num_classes);
    let lambdas: Vec<f64> = (0..d).map(|j| rho.powi(j as i32)).collect();

    // Centered class-mean grid in the (e1, e2) plane, unit gaps.
    let grid_w = (c as f64).sqrt().ceil() as usize;
    let grid_h = c.div_ceil(grid_w);
    let offsets: Vec<(f64, f64)> = (0..c)
        .map(|cls| {
            let gx = (cls % grid_w) as f64 - (grid_w as f64 - 1.0) / 2.0;
            let gy = (cls / grid_w) as f64 - (grid_h as f64 - 1.0) / 2.0;
            (gx, gy)
        })
        .collect();

    // Between-class variance along each displaced axis, weighted by the
    // actual block sizes.
    let mut class_count = vec![0usize; c];
    for &l in &labels {
        class_count[l as usize] += 1;
    }
    let mut between = [0.0f64; 2];
    for axis in 0..2usize.min(d) {
        let pick = |o: &(f64, f64)| if axis == 0 { o.0 } else { o.1 };
        let mean: f64 = offsets
            .iter()
            .zip(&class_count)
            .map(|(o, &n)| pick(o) * n as f64 / m as f64)
            .sum();
        between[axis] = offsets
            .iter()
            .zip(&class_count)
            .map(|(o, &n)| (pick(o) - mean).powi(2) * n as f64 / m as f64)
            .sum();
    }

    let mut within = lambdas.clone();
    for axis in 0..2usize.min(d) {
        if between[axis] > MAX_SEPARATION_BUDGET * lambdas[axis] {
            return Err(Error::argument(format!(
                "class separation variance {:.3} exceeds the spectral budget {:.3} \
                 along eigendirection {}; fewer classes or slower decay needed",
                between[axis],
                lambdas[axis],
                axis + 1
            )));
        }
        within[axis] -= between[axis];
    }
    let within_sqrt: Vec<f64> = within.iter().map(|v| v.sqrt()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = random_orthonormal(d, &mut rng);

    // Class means in band coordinates.
    let mut means = vec![vec![0.0f64; d]; c];
    for (cls, &(gx, gy)) in offsets.iter().enumerate() {
        for i in 0..d {
            means[cls][i] = gx * basis[[i, 0]];
            if d > 1 {
                means[cls][i] += gy * basis[[i, 1]];
            }
        }
    }

    let mut data = vec![0.0f32; m * d];
    let mut z = vec![0.0f64; d];
    for p in 0..m {
        for zj in z.iter_mut() {
            *zj = standard_normal(&mut rng);
        }
        let mu = &means[labels[p] as usize];
        for i in 0..d {
            let mut s = mu[i];
            for (j, zj) in z.iter().enumerate() {
                s += within_sqrt[j] * zj * basis[[i, j]];
            }
            if noise_sigma > 0.0 {
                s += noise_sigma * standard_normal(&mut rng);
            }
            data[p * d + i] = s as f32;
        }
    }

    Ok(LabeledCube {
        cube: HsiCube::new(h, w, d, data, None)?,
        labels,
        num_classes,
    })
}

/// Pixels-by-bands matrix in f64; all downstream math runs in double
/// precision regardless of the f32 payload.
pub fn flatten(cube: &HsiCube) -> Array2<f64> {
    let m = cube.num_pixels();
    let mut x = Array2::zeros((m, cube.d));
    for p in 0..m {
        let px = cube.pixel(p);
        for j in 0..cube.d {
            x[[p, j]] = px[j] as f64;
        }
    }
    x
}

pub fn save_cube(cube: &HsiCube, path: &Path) -> Result<()> {
    let header = CubeHeader {
        h: cube.h,
        w: cube.w,
        d: cube.d,
        dtype: "f32".to_string(),
        layout: "bip".to_string(),
        wavelengths: cube.wavelengths.clone(),
    };
    let header_json = serde_json::to_vec(&header)?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(CUBE_MAGIC)?;
    out.write_all(&(header_json.len() as u32).to_le_bytes())?;
    out.write_all(&header_json)?;
    for v in &cube.data {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_cube(path: &Path) -> Result<HsiCube> {
    let mut input = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|_| Error::format("cube file shorter than its magic"))?;
    if &magic != CUBE_MAGIC {
        return Err(Error::format(format!(
            "bad magic {:?}, expected {:?}",
            magic, CUBE_MAGIC
        )));
    }
    let mut len_bytes = [0u8; 4];
    input
        .read_exact(&mut len_bytes)
        .map_err(|_| Error::format("cube file truncated in header length"))?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    input
        .read_exact(&mut header_bytes)
        .map_err(|_| Error::format("cube file truncated in header"))?;
    let header: CubeHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::format(format!("cube header is not valid JSON: {e}")))?;
    if header.dtype != "f32" {
        return Err(Error::format(format!(
            "unsupported dtype {:?}, expected \"f32\"",
            header.dtype
        )));
    }
    if header.layout != "bip" {
        return Err(Error::format(format!(
            "unsupported layout {:?}, expected \"bip\"",
            header.layout
        )));
    }
    let n = header.h * header.w * header.d;
    let mut payload = vec![0u8; n * 4];
    input
        .read_exact(&mut payload)
        .map_err(|_| Error::format("cube file truncated in payload"))?;
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(Error::format("cube file has trailing bytes after payload"));
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    HsiCube::new(header.h, header.w, header.d, data, header.wavelengths)
        .map_err(|e| Error::format(format!("cube header inconsistent: {e}")))
}

pub fn save_labels(labeled: &LabeledCube, path: &Path) -> Result<()> {
    let sidecar = LabelSidecar {
        num_classes: labeled.num_classes,
        labels: labeled.labels.clone(),
    };
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut out, &sidecar)?;
    out.flush()?;
    Ok(())
}

pub fn load_labels(path: &Path, expected_pixels: usize) -> Result<(Vec<u32>, u32)> {
    let file = BufReader::new(File::open(path)?);
    let sidecar: LabelSidecar = serde_json::from_reader(file)
        .map_err(|e| Error::format(format!("label sidecar is not valid JSON: {e}")))?;
    if sidecar.labels.len() != expected_pixels {
        return Err(Error::format(format!(
            "label sidecar has {} entries for {} pixels",
            sidecar.labels.len(),
            expected_pixels
        )));
    }
    if sidecar.num_classes == 0 {
        return Err(Error::format("label sidecar declares zero classes"));
    }
    if let Some(&bad) = sidecar
        .labels
        .iter()
        .find(|&&l| l >= sidecar.num_classes)
    {
        return Err(Error::format(format!(
            "label {bad} out of range for {} classes",
            sidecar.num_classes
        )));
    }
    Ok((sidecar.labels, sidecar.num_classes))
}
