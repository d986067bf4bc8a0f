//! Anti-aliased spatial downsampling of principal-component images, the
//! ideal low-frequency crop, and energy/mixing diagnostics.
//!
//! DFT convention: unnormalized forward, 1/(HW) inverse. The radial
//! frequency of bin (u, v) uses the signed centered grid divided by (H, W),
//! so Nyquist sits at 0.5 cycles/pixel per axis. Ideal filters act
//! periodically (DFT-native); the spatial Gaussian uses symmetric reflect
//! padding. Both choices are load-bearing for the energy identities below.

use ndarray::{Array2, Array3, ArrayView2};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Row-major single-channel image.
pub type Image2D = Array2<f64>;

/// Truncation radius of the spatial Gaussian, in standard deviations.
const GAUSSIAN_SUPPORT_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LowpassSpec {
    /// Keep DFT bins with radial frequency <= f_c (cycles/pixel).
    IdealDisk { f_c: f64 },
    /// Spatial-domain Gaussian blur, reflect-padded, truncated at 4 sigma.
    Gaussian { sigma: f64 },
}

impl LowpassSpec {
    pub fn ideal_disk(f_c: f64) -> Result<Self> {
        if !(f_c > 0.0 && f_c <= 0.5) {
            return Err(Error::argument(format!(
                "cutoff must lie in (0, 0.5] cycles/pixel, got {f_c}"
            )));
        }
        Ok(Self::IdealDisk { f_c })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::argument(format!(
                "gaussian sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self::Gaussian { sigma })
    }

    /// Ideal anti-aliasing cutoff for integer stride d: f_c = 0.5/d.
    pub fn ideal_for_stride(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::argument("stride must be >= 1"));
        }
        Self::ideal_disk(0.5 / d as f64)
    }

    /// Heuristic Gaussian anti-aliasing width for stride s: sigma = 0.5 s.
    pub fn gaussian_for_stride(s: f64) -> Result<Self> {
        if !(s >= 1.0) {
            return Err(Error::argument(format!("stride must be >= 1, got {s}")));
        }
        Self::gaussian(0.5 * s)
    }
}

/// Stack of per-component images sharing one spatial grid, component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PcStack {
    /// Shape (components, height, width).
    pub planes: Array3<f64>,
}

impl PcStack {
    pub fn new(planes: Array3<f64>) -> Result<Self> {
        let (k, h, w) = planes.dim();
        if k == 0 || h == 0 || w == 0 {
            return Err(Error::argument("stack needs nonzero dimensions"));
        }
        if planes.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("stack contains non-finite values"));
        }
        Ok(Self { planes })
    }

    /// Reshape an (H*W)-by-k coordinate matrix into k image planes,
    /// row-major pixel order.
    pub fn from_projection(z: &Array2<f64>, h: usize, w: usize) -> Result<Self> {
        let (m, k) = z.dim();
        if m != h * w {
            return Err(Error::argument(format!(
                "{m} rows cannot fill a {h}x{w} grid"
            )));
        }
        let mut planes = Array3::zeros((k, h, w));
        for j in 0..k {
            for p in 0..m {
                planes[[j, p / w, p % w]] = z[[p, j]];
            }
        }
        Self::new(planes)
    }

    /// Flatten back to an (H*W)-by-k coordinate matrix.
    pub fn to_projection(&self) -> Array2<f64> {
        let (k, h, w) = self.planes.dim();
        let mut z = Array2::zeros((h * w, k));
        for j in 0..k {
            for p in 0..h * w {
                z[[p, j]] = self.planes[[j, p / w, p % w]];
            }
        }
        z
    }

    pub fn components(&self) -> usize {
        self.planes.dim().0
    }

    pub fn height(&self) -> usize {
        self.planes.dim().1
    }

    pub fn width(&self) -> usize {
        self.planes.dim().2
    }

    pub fn plane(&self, j: usize) -> ArrayView2<'_, f64> {
        self.planes.index_axis(ndarray::Axis(0), j)
    }
}

/// Sum of squared values.
pub fn energy(img: &Image2D) -> f64 {
    img.iter().map(|v| v * v).sum()
}

fn signed_freq(u: usize, n: usize) -> i64 {
    if u <= (n - 1) / 2 {
        u as i64
    } else {
        u as i64 - n as i64
    }
}

fn radial_frequency(u: usize, v: usize, h: usize, w: usize) -> f64 {
    let fu = signed_freq(u, h) as f64 / h as f64;
    let fv = signed_freq(v, w) as f64 / w as f64;
    (fu * fu + fv * fv).sqrt()
}

/// Unnormalized forward 2-D DFT.
pub fn dft2(img: &Image2D) -> Array2<Complex64> {
    let (h, w) = img.dim();
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft_forward(w);
    let col_fft = planner.plan_fft_forward(h);
    let mut data: Vec<Complex64> = img.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for r in 0..h {
        row_fft.process(&mut data[r * w..(r + 1) * w]);
    }
    let mut cols = vec![Complex64::default(); h * w];
    for r in 0..h {
        for c in 0..w {
            cols[c * h + r] = data[r * w + c];
        }
    }
    for c in 0..w {
        col_fft.process(&mut cols[c * h..(c + 1) * h]);
    }
    Array2::from_shape_fn((h, w), |(r, c)| cols[c * h + r])
}

/// Inverse 2-D DFT with 1/(HW) normalization, real part.
pub fn idft2_real(spec: &Array2<Complex64>) -> Image2D {
    let (h, w) = spec.dim();
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft_inverse(w);
    let col_fft = planner.plan_fft_inverse(h);
    let mut data: Vec<Complex64> = spec.iter().copied().collect();
    for r in 0..h {
        row_fft.process(&mut data[r * w..(r + 1) * w]);
    }
    let mut cols = vec![Complex64::default(); h * w];
    for r in 0..h {
        for c in 0..w {
            cols[c * h + r] = data[r * w + c];
        }
    }
    for c in 0..w {
        col_fft.process(&mut cols[c * h..(c + 1) * h]);
    }
    let scale = 1.0 / (h * w) as f64;
    Array2::from_shape_fn((h, w), |(r, c)| cols[c * h + r].re * scale)
}

fn check_image(img: &Image2D) -> Result<()> {
    let (h, w) = img.dim();
    if h == 0 || w == 0 {
        return Err(Error::argument("image needs nonzero dimensions"));
    }
    if img.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("image contains non-finite values"));
    }
    Ok(())
}

fn check_cutoff(f_c: f64) -> Result<()> {
    if !(f_c > 0.0 && f_c <= 0.5) {
        return Err(Error::argument(format!(
            "cutoff must lie in (0, 0.5] cycles/pixel, got {f_c}"
        )));
    }
    Ok(())
}

/// Ideal low-frequency crop: zero every DFT bin with radial frequency above
/// `f_c`, inverse transform, take the real part.
pub fn lfc_crop(img: &Image2D, f_c: f64) -> Result<Image2D> {
    check_image(img)?;
    check_cutoff(f_c)?;
    let (h, w) = img.dim();
    let mut spec = dft2(img);
    for u in 0..h {
        for v in 0..w {
            if radial_frequency(u, v, h, w) > f_c {
                spec[[u, v]] = Complex64::default();
            }
        }
    }
    Ok(idft2_real(&spec))
}

/// Spectral energy removed by `lfc_crop`, normalized so it equals the
/// squared spatial-domain residual exactly (Parseval).
pub fn lost_energy(img: &Image2D, f_c: f64) -> Result<f64> {
    check_image(img)?;
    check_cutoff(f_c)?;
    let (h, w) = img.dim();
    let spec = dft2(img);
    let mut lost = 0.0;
    for u in 0..h {
        for v in 0..w {
            if radial_frequency(u, v, h, w) > f_c {
                lost += spec[[u, v]].norm_sqr();
            }
        }
    }
    Ok(lost / (h * w) as f64)
}

/// Symmetric reflection (abc|cba) of an out-of-range index.
fn reflect(mut i: i64, n: usize) -> usize {
    let n = n as i64;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (GAUSSIAN_SUPPORT_SIGMAS * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = k.iter().sum();
    for v in k.iter_mut() {
        *v /= total;
    }
    k
}

fn gaussian_blur(img: &Image2D, sigma: f64) -> Image2D {
    let (h, w) = img.dim();
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let mut rows = Array2::zeros((h, w));
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (t, kv) in kernel.iter().enumerate() {
                let src = reflect(c as i64 + t as i64 - radius, w);
                acc += kv * img[[r, src]];
            }
            rows[[r, c]] = acc;
        }
    }
    let mut out = Array2::zeros((h, w));
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (t, kv) in kernel.iter().enumerate() {
                let src = reflect(r as i64 + t as i64 - radius, h);
                acc += kv * rows[[src, c]];
            }
            out[[r, c]] = acc;
        }
    }
    out
}

/// Apply a low-pass prefilter at full resolution.
pub fn apply_lowpass(img: &Image2D, filter: &LowpassSpec) -> Result<Image2D> {
    match *filter {
        LowpassSpec::IdealDisk { f_c } => lfc_crop(img, f_c),
        LowpassSpec::Gaussian { sigma } => {
            check_image(img)?;
            if !(sigma > 0.0) {
                return Err(Error::argument("gaussian sigma must be positive"));
            }
            Ok(gaussian_blur(img, sigma))
        }
    }
}

/// Prefilter then sample every d-th pixel from index 0; output is
/// ceil(H/d) x ceil(W/d). d = 1 is the identity (no filtering).
pub fn downsample(img: &Image2D, d: usize, filter: &LowpassSpec) -> Result<Image2D> {
    check_image(img)?;
    if d < 1 {
        return Err(Error::argument("downsample stride must be >= 1"));
    }
    if d == 1 {
        return Ok(img.clone());
    }
    let filtered = apply_lowpass(img, filter)?;
    let (h, w) = img.dim();
    let oh = h.div_ceil(d);
    let ow = w.div_ceil(d);
    Ok(Array2::from_shape_fn((oh, ow), |(r, c)| {
        filtered[[r * d, c * d]]
    }))
}

/// Signed frequencies a b-point axis can represent, with split weights on
/// the shared Nyquist bin when b is even.
fn target_freqs(u: usize, bt: usize) -> Vec<(i64, f64)> {
    let f = signed_freq(u, bt);
    if bt % 2 == 0 && f == -(bt as i64) / 2 {
        vec![(f, 0.5), (-f, 0.5)]
    } else {
        vec![(f, 1.0)]
    }
}

/// Trigonometric resampling of a square plane onto a coarser square grid:
/// keep the target-representable DFT bins, evaluate the interpolant at
/// stride b0/bt starting from pixel 0.
fn fourier_resample(img: &Image2D, bt: usize) -> Image2D {
    let b0 = img.nrows();
    let spec = dft2(img);
    let scale = (bt * bt) as f64 / (b0 * b0) as f64;
    let wrap = |f: i64| -> usize { f.rem_euclid(b0 as i64) as usize };
    let mut out_spec = Array2::from_elem((bt, bt), Complex64::default());
    for u in 0..bt {
        for v in 0..bt {
            let mut acc = Complex64::default();
            for &(fu, wu) in &target_freqs(u, bt) {
                for &(fv, wv) in &target_freqs(v, bt) {
                    acc += spec[[wrap(fu), wrap(fv)]] * (wu * wv);
                }
            }
            out_spec[[u, v]] = acc * scale;
        }
    }
    idft2_real(&out_spec)
}

/// Source-grid pixel index that coarse index `i` samples under a
/// b0 -> b_target resize (exact for integer strides, rounded otherwise).
pub fn source_pixel(i: usize, b0: usize, b_target: usize) -> usize {
    if b0 % b_target == 0 {
        i * (b0 / b_target)
    } else {
        let s = b0 as f64 / b_target as f64;
        ((i as f64 * s).round() as usize).min(b0 - 1)
    }
}

/// Resize every component plane of a square stack to B_target x B_target.
/// Integer strides prefilter-and-sample via `downsample`; fractional strides
/// prefilter then resample trigonometrically on the target-representable
/// bins. The curriculum only shrinks, so upsampling is refused.
pub fn resize_cube(stack: &PcStack, b_target: usize, filter: &LowpassSpec) -> Result<PcStack> {
    let (k, h, w) = stack.planes.dim();
    if h != w {
        return Err(Error::argument(format!(
            "resize needs a square stack, got {h}x{w}"
        )));
    }
    if b_target == 0 {
        return Err(Error::argument("target size must be >= 1"));
    }
    if b_target > h {
        return Err(Error::unsupported(format!(
            "upsampling {h} -> {b_target} is not part of the curriculum"
        )));
    }
    if b_target == h {
        return Ok(stack.clone());
    }
    let mut planes = Array3::zeros((k, b_target, b_target));
    for j in 0..k {
        let plane = stack.plane(j).to_owned();
        let small = if h % b_target == 0 {
            downsample(&plane, h / b_target, filter)?
        } else {
            fourier_resample(&apply_lowpass(&plane, filter)?, b_target)
        };
        planes
            .index_axis_mut(ndarray::Axis(0), j)
            .assign(&small);
    }
    PcStack::new(planes)
}

/// Class-mean separation before and after filtering with a nonnegative
/// normalized kernel. Pixel sets index the grid; the mean is the k-vector
/// of per-component averages and the distance is Euclidean.
pub fn mean_separation(
    stack: &PcStack,
    set_a: &[(usize, usize)],
    set_b: &[(usize, usize)],
    filter: &LowpassSpec,
) -> Result<(f64, f64)> {
    if set_a.is_empty() || set_b.is_empty() {
        return Err(Error::argument("class pixel sets must be non-empty"));
    }
    let LowpassSpec::Gaussian { sigma } = *filter else {
        return Err(Error::argument(
            "separation comparison needs a nonnegative kernel; the ideal disk response has negative lobes",
        ));
    };
    let (k, h, w) = stack.planes.dim();
    for &(r, c) in set_a.iter().chain(set_b.iter()) {
        if r >= h || c >= w {
            return Err(Error::argument(format!(
                "pixel ({r},{c}) outside {h}x{w} grid"
            )));
        }
    }
    let class_mean = |planes: &Array3<f64>, set: &[(usize, usize)]| -> Vec<f64> {
        (0..k)
            .map(|j| {
                set.iter().map(|&(r, c)| planes[[j, r, c]]).sum::<f64>() / set.len() as f64
            })
            .collect()
    };
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let before = dist(
        &class_mean(&stack.planes, set_a),
        &class_mean(&stack.planes, set_b),
    );
    let mut filtered = Array3::zeros((k, h, w));
    for j in 0..k {
        let plane = gaussian_blur(&stack.plane(j).to_owned(), sigma);
        filtered.index_axis_mut(ndarray::Axis(0), j).assign(&plane);
    }
    let after = dist(&class_mean(&filtered, set_a), &class_mean(&filtered, set_b));
    Ok((before, after))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> Image2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((h, w), |_| rng.gen_range(-1.0..1.0))
    }

    /// Direct O(n^4) DFT, independent of the fft-backed path.
    fn naive_dft2(img: &Image2D) -> Array2<Complex64> {
        let (h, w) = img.dim();
        Array2::from_shape_fn((h, w), |(u, v)| {
            let mut acc = Complex64::default();
            for x in 0..h {
                for y in 0..w {
                    let phase = -2.0
                        * std::f64::consts::PI
                        * (u as f64 * x as f64 / h as f64 + v as f64 * y as f64 / w as f64);
                    acc += img[[x, y]] * Complex64::new(phase.cos(), phase.sin());
                }
            }
            acc
        })
    }

    /// Periodic trigonometric interpolation of a coarse grid back onto a
    /// fine grid, direct evaluation.
    fn sinc_reconstruct(coarse: &Image2D, h: usize, w: usize) -> Image2D {
        let (ch, cw) = coarse.dim();
        let spec = naive_dft2(coarse);
        let norm = 1.0 / (ch * cw) as f64;
        Array2::from_shape_fn((h, w), |(x, y)| {
            let mut acc = Complex64::default();
            for u in 0..ch {
                for v in 0..cw {
                    let fu = signed_freq(u, ch) as f64;
                    let fv = signed_freq(v, cw) as f64;
                    let phase = 2.0
                        * std::f64::consts::PI
                        * (fu * x as f64 / h as f64 + fv * y as f64 / w as f64);
                    acc += spec[[u, v]] * Complex64::new(phase.cos(), phase.sin());
                }
            }
            acc.re * norm
        })
    }

    #[test]
    fn fft_matches_naive_dft() {
        let img = random_image(12, 9, 1);
        let fast = dft2(&img);
        let slow = naive_dft2(&img);
        for (a, b) in fast.iter().zip(slow.iter()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-9);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-9);
        }
        let back = idft2_real(&fast);
        for (a, b) in back.iter().zip(img.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn crop_leaves_constants_alone() {
        let img = Array2::from_elem((8, 8), 3.25);
        for f_c in [0.05, 0.2, 0.5] {
            let out = lfc_crop(&img, f_c).unwrap();
            for v in out.iter() {
                assert_abs_diff_eq!(*v, 3.25, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn crop_removes_out_of_band_sinusoid() {
        // Row frequency 16/40 = 0.4 sits on an exact bin; a 0.2 cutoff
        // removes it entirely.
        let img = Array2::from_shape_fn((40, 40), |(x, _)| {
            (2.0 * std::f64::consts::PI * 16.0 * x as f64 / 40.0).sin()
        });
        let out = lfc_crop(&img, 0.2).unwrap();
        let max = out.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(max <= 1e-8, "residual {max}");
        assert_abs_diff_eq!(
            lost_energy(&img, 0.2).unwrap(),
            energy(&img),
            epsilon = 1e-9 * energy(&img)
        );
    }

    #[test]
    fn kept_energy_matches_in_disk_spectrum() {
        let img = random_image(32, 32, 7);
        let f_c = 0.22;
        let out = lfc_crop(&img, f_c).unwrap();
        let spec = naive_dft2(&img);
        let mut kept = 0.0;
        for u in 0..32 {
            for v in 0..32 {
                if radial_frequency(u, v, 32, 32) <= f_c {
                    kept += spec[[u, v]].norm_sqr();
                }
            }
        }
        kept /= 32.0 * 32.0;
        let out_energy = energy(&out);
        assert!(
            (out_energy - kept).abs() <= 1e-9 * kept,
            "spatial {out_energy} vs spectral {kept}"
        );
        assert!(out_energy <= energy(&img) * (1.0 + 1e-12));
    }

    #[test]
    fn energy_partition_is_exact() {
        for seed in 0..5u64 {
            let img = random_image(24, 24, 100 + seed);
            for f_c in [0.1, 0.25, 0.4] {
                let total = energy(&img);
                let crop = lfc_crop(&img, f_c).unwrap();
                let lost = lost_energy(&img, f_c).unwrap();
                assert!(
                    (lost + energy(&crop) - total).abs() <= 1e-9 * total,
                    "partition off at seed {seed} f_c {f_c}"
                );
                let resid: f64 = img
                    .iter()
                    .zip(crop.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                assert!((lost - resid).abs() <= 1e-9 * total.max(1.0));
            }
        }
    }

    #[test]
    fn ideal_crop_contracts_pairwise_distances() {
        for seed in 0..12u64 {
            let f = random_image(24, 24, 200 + seed);
            let g = random_image(24, 24, 300 + seed);
            for f_c in [0.1, 0.25, 0.4] {
                let tf = lfc_crop(&f, f_c).unwrap();
                let tg = lfc_crop(&g, f_c).unwrap();
                let before: f64 = f
                    .iter()
                    .zip(g.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let after: f64 = tf
                    .iter()
                    .zip(tg.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(after <= before + 1e-9, "expanded at seed {seed} f_c {f_c}");
            }
        }
    }

    #[test]
    fn stride_one_is_identity() {
        let img = random_image(10, 10, 2);
        let out = downsample(&img, 1, &LowpassSpec::ideal_disk(0.5).unwrap()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn constant_image_downsamples_to_constant() {
        let img = Array2::from_elem((9, 7), -1.5);
        for filter in [
            LowpassSpec::ideal_for_stride(3).unwrap(),
            LowpassSpec::gaussian_for_stride(3.0).unwrap(),
        ] {
            let out = downsample(&img, 3, &filter).unwrap();
            assert_eq!(out.dim(), (3, 3));
            for v in out.iter() {
                assert_abs_diff_eq!(*v, -1.5, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn output_shape_uses_ceil_division() {
        let img = random_image(7, 5, 3);
        let out = downsample(&img, 2, &LowpassSpec::gaussian(1.0).unwrap()).unwrap();
        assert_eq!(out.dim(), (4, 3));
    }

    #[test]
    fn bandlimited_downsample_is_invertible() {
        // Content strictly below 0.25 cycles/pixel survives stride-2
        // sampling; periodic sinc interpolation recovers the original grid.
        let raw = random_image(32, 32, 9);
        let img = lfc_crop(&raw, 0.2).unwrap();
        let small = downsample(&img, 2, &LowpassSpec::ideal_for_stride(2).unwrap()).unwrap();
        assert_eq!(small.dim(), (16, 16));
        let back = sinc_reconstruct(&small, 32, 32);
        let num: f64 = img
            .iter()
            .zip(back.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let den = energy(&img);
        assert!(
            (num / den).sqrt() <= 1e-6,
            "relative reconstruction error {}",
            (num / den).sqrt()
        );
    }

    #[test]
    fn gaussian_blur_matches_direct_convolution() {
        let img = random_image(16, 12, 4);
        let sigma = 1.3;
        let fast = gaussian_blur(&img, sigma);
        let kernel = gaussian_kernel(sigma);
        let radius = (kernel.len() / 2) as i64;
        for r in 0..16 {
            for c in 0..12 {
                let mut acc = 0.0;
                for (ti, ki) in kernel.iter().enumerate() {
                    for (tj, kj) in kernel.iter().enumerate() {
                        let sr = reflect(r as i64 + ti as i64 - radius, 16);
                        let sc = reflect(c as i64 + tj as i64 - radius, 12);
                        acc += ki * kj * img[[sr, sc]];
                    }
                }
                assert_abs_diff_eq!(fast[[r as usize, c as usize]], acc, epsilon = 1e-12);
            }
        }
    }

    fn random_stack(k: usize, b: usize, seed: u64) -> PcStack {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PcStack::new(Array3::from_shape_fn((k, b, b), |_| rng.gen_range(-1.0..1.0))).unwrap()
    }

    #[test]
    fn resize_to_same_size_is_identity() {
        let stack = random_stack(3, 20, 5);
        let out = resize_cube(&stack, 20, &LowpassSpec::gaussian(1.0).unwrap()).unwrap();
        assert_eq!(out, stack);
    }

    #[test]
    fn resize_matches_per_plane_downsample() {
        let stack = random_stack(1, 50, 6);
        let filter = LowpassSpec::ideal_for_stride(2).unwrap();
        let out = resize_cube(&stack, 25, &filter).unwrap();
        let direct = downsample(&stack.plane(0).to_owned(), 2, &filter).unwrap();
        assert_eq!(out.plane(0).to_owned(), direct);
        // Quarter pixel count after halving each axis.
        assert_eq!(out.height() * out.width() * 4, 50 * 50);
    }

    #[test]
    fn resize_commutes_with_channel_selection() {
        let stack = random_stack(4, 30, 7);
        let filter = LowpassSpec::gaussian_for_stride(2.0).unwrap();
        let whole = resize_cube(&stack, 15, &filter).unwrap();
        for j in 0..4 {
            let single = PcStack::new(
                stack
                    .plane(j)
                    .to_owned()
                    .insert_axis(ndarray::Axis(0)),
            )
            .unwrap();
            let alone = resize_cube(&single, 15, &filter).unwrap();
            assert_eq!(alone.plane(0).to_owned(), whole.plane(j).to_owned());
        }
    }

    #[test]
    fn fractional_resize_matches_interpolation_oracle() {
        // 30 -> 20 is stride 1.5; the output must sample the periodic
        // trigonometric interpolant of the prefiltered plane.
        let raw = random_image(30, 30, 8);
        let img = lfc_crop(&raw, 0.12).unwrap();
        let stack = PcStack::new(img.clone().insert_axis(ndarray::Axis(0))).unwrap();
        let out = resize_cube(&stack, 20, &LowpassSpec::ideal_disk(0.12).unwrap()).unwrap();
        let fine = sinc_reconstruct(&img, 60, 60); // 60 = lcm(30,20); stride 1.5 on 30 = stride 3 here
        for r in 0..20 {
            for c in 0..20 {
                assert_abs_diff_eq!(
                    out.plane(0)[[r, c]],
                    fine[[r * 3, c * 3]],
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn resize_refuses_upsampling() {
        let stack = random_stack(2, 10, 9);
        let err = resize_cube(&stack, 11, &LowpassSpec::gaussian(1.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn source_pixel_strides_are_consistent() {
        assert_eq!(source_pixel(3, 50, 25), 6);
        assert_eq!(source_pixel(0, 50, 38), 0);
        assert_eq!(source_pixel(37, 50, 38), 49);
        assert_eq!(source_pixel(19, 50, 38), 25);
    }

    #[test]
    fn far_apart_patch_interiors_keep_their_separation() {
        // Patch values 3 and -2 on a zero background. Interior pixels sit
        // further than the truncated kernel radius (2 at sigma 0.5) from any
        // patch edge, so filtering never mixes classes there.
        let mut img = Array2::zeros((32, 32));
        for r in 4..12 {
            for c in 4..12 {
                img[[r, c]] = 3.0;
            }
        }
        for r in 20..28 {
            for c in 20..28 {
                img[[r, c]] = -2.0;
            }
        }
        let stack = PcStack::new(img.insert_axis(ndarray::Axis(0))).unwrap();
        let set_a: Vec<_> = (6..10).flat_map(|r| (6..10).map(move |c| (r, c))).collect();
        let set_b: Vec<_> = (22..26)
            .flat_map(|r| (22..26).map(move |c| (r, c)))
            .collect();
        let (before, after) =
            mean_separation(&stack, &set_a, &set_b, &LowpassSpec::gaussian(0.5).unwrap()).unwrap();
        assert_abs_diff_eq!(before, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(after, before, epsilon = 1e-9);
    }

    #[test]
    fn adjacent_half_planes_mix_and_contract() {
        let img = Array2::from_shape_fn((32, 32), |(r, _)| if r < 16 { 0.0 } else { 1.0 });
        let stack = PcStack::new(img.clone().insert_axis(ndarray::Axis(0))).unwrap();
        let set_a: Vec<_> = (0..16).flat_map(|r| (0..32).map(move |c| (r, c))).collect();
        let set_b: Vec<_> = (16..32)
            .flat_map(|r| (0..32).map(move |c| (r, c)))
            .collect();
        let sigma = 2.0;
        let (before, after) =
            mean_separation(&stack, &set_a, &set_b, &LowpassSpec::gaussian(sigma).unwrap())
                .unwrap();
        assert_abs_diff_eq!(before, 1.0, epsilon = 1e-12);
        assert!(after < before, "no contraction: {after} vs {before}");
        // Direct convolution oracle for the filtered means.
        let blurred = gaussian_blur(&img, sigma);
        let mean_over = |set: &[(usize, usize)]| -> f64 {
            set.iter().map(|&(r, c)| blurred[[r, c]]).sum::<f64>() / set.len() as f64
        };
        let oracle = (mean_over(&set_a) - mean_over(&set_b)).abs();
        assert_abs_diff_eq!(after, oracle, epsilon = 1e-12);
    }

    #[test]
    fn identical_sets_have_zero_separation() {
        let stack = random_stack(2, 16, 10);
        let set: Vec<_> = (2..6).flat_map(|r| (2..6).map(move |c| (r, c))).collect();
        let (before, after) =
            mean_separation(&stack, &set, &set, &LowpassSpec::gaussian(1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(before, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(after, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn separation_rejects_bad_inputs() {
        let stack = random_stack(1, 8, 11);
        let set: Vec<_> = vec![(1, 1)];
        assert!(mean_separation(&stack, &[], &set, &LowpassSpec::gaussian(1.0).unwrap()).is_err());
        assert!(matches!(
            mean_separation(&stack, &set, &set, &LowpassSpec::ideal_disk(0.2).unwrap()),
            Err(Error::Argument(_))
        ));
        assert!(mean_separation(&stack, &[(9, 0)], &set, &LowpassSpec::gaussian(1.0).unwrap())
            .is_err());
    }

    #[test]
    fn cutoff_validation() {
        let img = random_image(8, 8, 12);
        assert!(lfc_crop(&img, 0.0).is_err());
        assert!(lfc_crop(&img, 0.51).is_err());
        assert!(LowpassSpec::ideal_disk(0.6).is_err());
        assert!(LowpassSpec::gaussian(0.0).is_err());
        assert!(downsample(&img, 0, &LowpassSpec::gaussian(1.0).unwrap()).is_err());
    }

    #[test]
    fn projection_stack_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let z = Array2::from_shape_fn((24, 3), |_| rng.gen_range(-1.0..1.0));
        let stack = PcStack::from_projection(&z, 4, 6).unwrap();
        assert_eq!(stack.components(), 3);
        assert_eq!(stack.to_projection(), z);
        assert!(PcStack::from_projection(&z, 5, 5).is_err());
    }
}
