//! Spectral compression: PCA basis fitting and band-space projections.
//!
//! The covariance eigendecomposition runs in f64 via the cyclic Jacobi
//! solver; truncated projection onto the leading eigenvectors is optimal in
//! Frobenius norm among all rank-k linear reconstructions, and the tests hold
//! the implementation to that.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

/// Eigenvalues this far below zero (relative to the largest magnitude) are
/// fp noise from a rank-deficient covariance and clamp to zero; anything
/// lower means the input was not a covariance.
const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    /// Per-band mean of the fitted data.
    pub mean: Array1<f64>,
    /// Eigenvectors as columns, descending eigenvalue order, sign-fixed.
    pub eigvecs: Array2<f64>,
    /// Nonnegative eigenvalues, descending.
    pub eigvals: Array1<f64>,
    pub sample_count: usize,
}

impl SpectralBasis {
    pub fn bands(&self) -> usize {
        self.mean.len()
    }
}

/// Fit a full PCA basis on a pixels-by-bands matrix. Covariance is
/// `X~^T X~ / (M-1)` over the centered data.
pub fn fit_pca(x: &Array2<f64>) -> Result<SpectralBasis> {
    let m = x.nrows();
    let d = x.ncols();
    if d == 0 {
        return Err(Error::argument("fit_pca needs at least one band"));
    }
    if m < 2 {
        return Err(Error::argument(format!(
            "fit_pca needs at least 2 samples, got {m}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("fit_pca input contains non-finite values"));
    }
    let mean = x.mean_axis(Axis(0)).expect("m >= 2");
    let centered = x - &mean;
    let cov = centered.t().dot(&centered) / (m as f64 - 1.0);
    let (mut vals, vecs) = symmetric_eigen(&cov)?;

    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = -NEGATIVE_EIGENVALUE_TOL * scale.max(1.0);
    for v in vals.iter_mut() {
        if *v < floor {
            return Err(Error::numeric(format!(
                "covariance eigenvalue {v:.6e} is negative beyond fp tolerance"
            )));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }

    Ok(SpectralBasis {
        mean,
        eigvecs: vecs,
        eigvals: vals,
        sample_count: m,
    })
}

fn check_k(basis: &SpectralBasis, k: usize) -> Result<()> {
    if k == 0 || k > basis.bands() {
        return Err(Error::argument(format!(
            "band count k={k} outside 1..={}",
            basis.bands()
        )));
    }
    Ok(())
}

/// Coordinates of each row in the leading-k eigenbasis: `(X - mean) E_k`.
pub fn project(basis: &SpectralBasis, x: &Array2<f64>, k: usize) -> Result<Array2<f64>> {
    check_k(basis, k)?;
    if x.ncols() != basis.bands() {
        return Err(Error::argument(format!(
            "data has {} bands, basis has {}",
            x.ncols(),
            basis.bands()
        )));
    }
    let ek = basis.eigvecs.slice(ndarray::s![.., ..k]);
    Ok((x - &basis.mean).dot(&ek))
}

/// Back-projection into band space: `Z E_k^T + mean`, with k taken from the
/// coordinate count of `z`.
pub fn reconstruct(basis: &SpectralBasis, z: &Array2<f64>) -> Result<Array2<f64>> {
    let k = z.ncols();
    check_k(basis, k)?;
    let ek = basis.eigvecs.slice(ndarray::s![.., ..k]);
    Ok(z.dot(&ek.t()) + &basis.mean)
}

/// Squared Frobenius reconstruction residual of the rank-k projection.
/// When the basis was fitted on `x`, this equals `(M-1)` times the trailing
/// eigenvalue sum.
pub fn reconstruction_error(basis: &SpectralBasis, x: &Array2<f64>, k: usize) -> Result<f64> {
    let z = project(basis, x, k)?;
    let back = reconstruct(basis, &z)?;
    Ok(x.iter()
        .zip(back.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// Fraction of total variance captured by the leading k eigenvalues.
/// Zero-variance data counts as fully explained.
pub fn explained_variance_ratio(basis: &SpectralBasis, k: usize) -> Result<f64> {
    check_k(basis, k)?;
    let total: f64 = basis.eigvals.iter().sum();
    if total <= 0.0 {
        return Ok(1.0);
    }
    let head: f64 = basis.eigvals.iter().take(k).sum();
    Ok(head / total)
}

/// Smallest k whose explained variance reaches `eta`.
pub fn select_k(basis: &SpectralBasis, eta: f64) -> Result<usize> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::argument(format!(
            "variance target eta must lie in (0,1], got {eta}"
        )));
    }
    let total: f64 = basis.eigvals.iter().sum();
    if total <= 0.0 {
        return Err(Error::numeric(
            "select_k needs at least one positive eigenvalue",
        ));
    }
    let mut head = 0.0;
    for (i, v) in basis.eigvals.iter().enumerate() {
        head += v;
        if head / total >= eta {
            return Ok(i + 1);
        }
    }
    // Cumulative fp shortfall at eta = 1; the full basis explains everything.
    Ok(basis.bands())
}

/// Band-count compression factor d/k.
pub fn compression_ratio(d: usize, k: usize) -> Result<f64> {
    if d == 0 || k == 0 || k > d {
        return Err(Error::argument(format!(
            "compression ratio needs 1 <= k <= d, got d={d} k={k}"
        )));
    }
    Ok(d as f64 / k as f64)
}

#[derive(Debug, Serialize, Deserialize)]
struct BasisMeta {
    bands: usize,
    sample_count: usize,
    blob: String,
    layout: String,
}

const BASIS_LAYOUT: &str = "f64le: mean[d], eigvecs column-major[d*d], eigvals[d]";

/// Write the basis as a JSON descriptor plus raw little-endian f64 blob
/// (mean, then eigenvectors column-major, then eigenvalues).
pub fn save_basis(basis: &SpectralBasis, json_path: &Path, blob_path: &Path) -> Result<()> {
    let d = basis.bands();
    let meta = BasisMeta {
        bands: d,
        sample_count: basis.sample_count,
        blob: blob_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        layout: BASIS_LAYOUT.to_string(),
    };
    let mut jf = BufWriter::new(File::create(json_path)?);
    serde_json::to_writer_pretty(&mut jf, &meta)?;
    jf.flush()?;

    let mut bf = BufWriter::new(File::create(blob_path)?);
    for v in basis.mean.iter() {
        bf.write_all(&v.to_le_bytes())?;
    }
    for col in 0..d {
        for row in 0..d {
            bf.write_all(&basis.eigvecs[[row, col]].to_le_bytes())?;
        }
    }
    for v in basis.eigvals.iter() {
        bf.write_all(&v.to_le_bytes())?;
    }
    bf.flush()?;
    Ok(())
}

pub fn load_basis(json_path: &Path, blob_path: &Path) -> Result<SpectralBasis> {
    let meta: BasisMeta = serde_json::from_reader(BufReader::new(File::open(json_path)?))
        .map_err(|e| Error::format(format!("basis descriptor is not valid JSON: {e}")))?;
    let d = meta.bands;
    let expected = (d + d * d + d) * 8;
    let mut bytes = Vec::new();
    BufReader::new(File::open(blob_path)?).read_to_end(&mut bytes)?;
    if bytes.len() != expected {
        return Err(Error::format(format!(
            "basis blob has {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let mut vals = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")));
    let mean = Array1::from_iter((&mut vals).take(d));
    let mut eigvecs = Array2::zeros((d, d));
    for col in 0..d {
        for row in 0..d {
            eigvecs[[row, col]] = vals.next().expect("length checked");
        }
    }
    let eigvals = Array1::from_iter(vals);
    Ok(SpectralBasis {
        mean,
        eigvecs,
        eigvals,
        sample_count: meta.sample_count,
    })
}
