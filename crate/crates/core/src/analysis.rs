//! Cost model, conditioning and variance bounds, and time-to-threshold
//! calculators for the curriculum-versus-baseline comparison.
//!
//! All logarithms are natural. Time bounds are expressed in the cost
//! model's units, so a model with step_cost(full bands) = 1 reports total
//! cost in full-band step equivalents.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::spectral::SpectralBasis;

/// Affine per-step cost in the band count: c0 + c1 * bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub c0: f64,
    pub c1: f64,
}

impl CostModel {
    pub fn new(c0: f64, c1: f64) -> Result<Self> {
        if !(c0 >= 0.0 && c0.is_finite()) {
            return Err(Error::argument(format!("fixed cost must be >= 0, got {c0}")));
        }
        if !(c1 > 0.0 && c1.is_finite()) {
            return Err(Error::argument(format!(
                "per-band cost must be > 0, got {c1}"
            )));
        }
        Ok(Self { c0, c1 })
    }

    /// Unit-free default: one cost unit per band, no fixed overhead.
    pub fn per_band() -> Self {
        Self { c0: 0.0, c1: 1.0 }
    }

    /// Scaled so a full-band step costs exactly 1 unit.
    pub fn normalized_to(full_bands: usize) -> Result<Self> {
        if full_bands == 0 {
            return Err(Error::argument("band count must be >= 1"));
        }
        Ok(Self {
            c0: 0.0,
            c1: 1.0 / full_bands as f64,
        })
    }
}

pub fn step_cost(model: &CostModel, bands: usize) -> f64 {
    model.c0 + model.c1 * bands as f64
}

/// Per-step data-volume factor of training at K of N bands with spatial
/// stride d: (K/N)/d^2.
pub fn cost_factor(k: usize, n: usize, d: usize) -> Result<f64> {
    if k == 0 || n == 0 || d == 0 || k > n {
        return Err(Error::argument(format!(
            "cost factor needs 1 <= K <= N and d >= 1, got K={k} N={n} d={d}"
        )));
    }
    Ok((k as f64 / n as f64) / (d * d) as f64)
}

/// Where the strong convexity constant comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurvatureSource {
    /// Squared loss: mu = smallest retained eigenvalue + ridge.
    SquaredLoss,
    /// General convex loss: only the ridge term is guaranteed.
    RidgeOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub mu_full: f64,
    pub l_full: f64,
    pub kappa_full: f64,
    pub mu_k: f64,
    pub l_k: f64,
    pub kappa_k: f64,
    /// Per-step gap contraction factor 1 - mu_k/L_k of the truncated stage.
    pub rho_k: f64,
}

/// Smoothness and strong-convexity constants of the regularized objective
/// on the full spectrum and on its leading-K truncation.
///
/// L = L_phi * lambda_1 + ridge for both problems (truncation keeps the top
/// eigenvalue); mu improves from lambda_D to lambda_K under truncation for
/// squared loss.
pub fn condition_numbers(
    lambda: &[f64],
    ridge: f64,
    l_phi: f64,
    k: usize,
    curvature: CurvatureSource,
) -> Result<ConditionReport> {
    if lambda.is_empty() {
        return Err(Error::argument("spectrum must be non-empty"));
    }
    if k == 0 || k > lambda.len() {
        return Err(Error::argument(format!(
            "K={k} outside 1..={}",
            lambda.len()
        )));
    }
    if !(ridge > 0.0) {
        return Err(Error::argument(format!("ridge must be > 0, got {ridge}")));
    }
    if !(l_phi > 0.0) {
        return Err(Error::argument(format!(
            "loss smoothness constant must be > 0, got {l_phi}"
        )));
    }
    for w in lambda.windows(2) {
        if w[1] > w[0] + 1e-12 * w[0].abs().max(1.0) {
            return Err(Error::argument("spectrum must be descending"));
        }
    }
    if lambda.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::argument("spectrum must be nonnegative and finite"));
    }
    let l = l_phi * lambda[0] + ridge;
    let (mu_full, mu_k) = match curvature {
        CurvatureSource::SquaredLoss => (lambda[lambda.len() - 1] + ridge, lambda[k - 1] + ridge),
        CurvatureSource::RidgeOnly => (ridge, ridge),
    };
    Ok(ConditionReport {
        mu_full,
        l_full: l,
        kappa_full: l / mu_full,
        mu_k,
        l_k: l,
        kappa_k: l / mu_k,
        rho_k: 1.0 - mu_k / l,
    })
}

/// Trace bound on the single-sample gradient covariance at the K-band
/// stage: C_phi^2 * sum of the leading K eigenvalues.
pub fn sgd_variance_bound(lambda: &[f64], c_phi: f64, k: usize) -> Result<f64> {
    if k == 0 || k > lambda.len() {
        return Err(Error::argument(format!(
            "K={k} outside 1..={}",
            lambda.len()
        )));
    }
    if !(c_phi > 0.0) {
        return Err(Error::argument("loss derivative bound must be > 0"));
    }
    Ok(c_phi * c_phi * lambda.iter().take(k).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeBoundReport {
    /// Early-stage step count (summed over reduced-band stages).
    pub t1: f64,
    /// Closing full-band step count.
    pub t2: f64,
    pub t_ours: f64,
    pub t_base: f64,
    /// Negative exactly when the curriculum bound beats the baseline bound.
    pub win_margin: f64,
    pub speedup: f64,
}

/// Two-stage time-to-threshold bound: t1 steps at K bands driving the gap
/// from delta0 to delta1, then full-band steps to eps, against the
/// always-full-band baseline.
pub fn two_stage_bound(
    report: &ConditionReport,
    cost: &CostModel,
    n_bands: usize,
    k_bands: usize,
    delta0: f64,
    delta1: f64,
    eps: f64,
) -> Result<TimeBoundReport> {
    if !(eps > 0.0 && eps < delta1 && delta1 <= delta0) {
        return Err(Error::argument(format!(
            "need 0 < eps < delta1 <= delta0, got eps={eps} delta1={delta1} delta0={delta0}"
        )));
    }
    if k_bands == 0 || k_bands > n_bands {
        return Err(Error::argument(format!(
            "need 1 <= K <= N, got K={k_bands} N={n_bands}"
        )));
    }
    let sc_k = step_cost(cost, k_bands);
    let sc_n = step_cost(cost, n_bands);
    let t1 = report.kappa_k * (delta0 / delta1).ln();
    let t2 = report.kappa_full * (delta1 / eps).ln();
    let t_ours = t1 * sc_k + t2 * sc_n;
    let t_base = report.kappa_full * (delta0 / eps).ln() * sc_n;
    let win_margin = (t1 / report.kappa_full) * (sc_k / sc_n) + (delta1 / delta0).ln();
    Ok(TimeBoundReport {
        t1,
        t2,
        t_ours,
        t_base,
        win_margin,
        speedup: t_base / t_ours,
    })
}

/// Multi-stage generalization. `stages` lists the early reduced-band stages
/// as (K_s, t_s) with a per-stage condition report; the closing full-band
/// stage is implicit and runs until the gap reaches eps. Each early stage
/// shrinks the gap by exp(-t_s/kappa_{K_s}), the same first-order factor as
/// the per-step contraction, which makes the S=2 case coincide with
/// `two_stage_bound` exactly.
pub fn s_stage_bound(
    stages: &[(usize, f64)],
    reports: &[ConditionReport],
    cost: &CostModel,
    n_bands: usize,
    delta0: f64,
    eps: f64,
) -> Result<TimeBoundReport> {
    if stages.is_empty() {
        return Err(Error::argument("stage list must be non-empty"));
    }
    if stages.len() != reports.len() {
        return Err(Error::argument(format!(
            "{} stages but {} condition reports",
            stages.len(),
            reports.len()
        )));
    }
    if !(eps > 0.0 && eps < delta0) {
        return Err(Error::argument(format!(
            "need 0 < eps < delta0, got eps={eps} delta0={delta0}"
        )));
    }
    let kappa_full = reports[0].kappa_full;
    let sc_n = step_cost(cost, n_bands);
    let mut early_cost = 0.0;
    let mut early_steps = 0.0;
    let mut delta = delta0;
    for (&(k_s, t_s), rep) in stages.iter().zip(reports) {
        if k_s == 0 || k_s > n_bands {
            return Err(Error::argument(format!(
                "stage band count {k_s} outside 1..={n_bands}"
            )));
        }
        if !(t_s >= 0.0 && t_s.is_finite()) {
            return Err(Error::argument(format!(
                "stage step count must be >= 0, got {t_s}"
            )));
        }
        early_steps += t_s;
        early_cost += t_s * step_cost(cost, k_s);
        delta *= (-t_s / rep.kappa_k).exp();
    }
    // Early stages may already land below eps; the closing stage then needs
    // no steps.
    let t2 = (kappa_full * (delta / eps).ln()).max(0.0);
    let t_ours = early_cost + t2 * sc_n;
    let t_base = kappa_full * (delta0 / eps).ln() * sc_n;
    let win_margin = early_cost / (kappa_full * sc_n) + (delta / delta0).ln();
    Ok(TimeBoundReport {
        t1: early_steps,
        t2,
        t_ours,
        t_base,
        win_margin,
        speedup: t_base / t_ours,
    })
}

/// Excess-risk bound: eps_bias + (sigma^2/M) * sum_i lambda_i/(lambda_i + ridge).
pub fn bias_variance_bound(
    lambda: &[f64],
    ridge: f64,
    sigma2: f64,
    m: usize,
    eps_bias: f64,
) -> Result<f64> {
    if !(ridge > 0.0) {
        return Err(Error::argument("ridge must be > 0"));
    }
    if !(sigma2 >= 0.0 && eps_bias >= 0.0) {
        return Err(Error::argument("noise power and bias floor must be >= 0"));
    }
    if m == 0 {
        return Err(Error::argument("sample count must be >= 1"));
    }
    let trace: f64 = lambda.iter().map(|&v| v / (v + ridge)).sum();
    Ok(eps_bias + sigma2 / m as f64 * trace)
}

/// Mahalanobis distance of the class-mean displacement restricted to the
/// leading-K eigenspace: (m_a-m_b)' P_K Sigma^{-1} P_K (m_a-m_b).
pub fn subspace_mahalanobis(
    m_a: &Array1<f64>,
    m_b: &Array1<f64>,
    sigma: &Array2<f64>,
    basis: &SpectralBasis,
    k: usize,
) -> Result<f64> {
    let d = basis.bands();
    if m_a.len() != d || m_b.len() != d || sigma.dim() != (d, d) {
        return Err(Error::argument("dimension mismatch with the basis"));
    }
    if k == 0 || k > d {
        return Err(Error::argument(format!("K={k} outside 1..={d}")));
    }
    let (vals, vecs) = symmetric_eigen(sigma)?;
    let largest = vals[0].abs();
    if vals[vals.len() - 1] <= 1e-12 * largest.max(1.0) {
        return Err(Error::numeric(
            "covariance is singular within tolerance; cannot invert",
        ));
    }
    let diff = m_a - m_b;
    // v = P_K diff via the K leading basis columns.
    let ek = basis.eigvecs.slice(ndarray::s![.., ..k]);
    let coords = ek.t().dot(&diff);
    let v = ek.dot(&coords);
    // Sigma^{-1} v through the eigendecomposition of Sigma.
    let proj = vecs.t().dot(&v);
    let scaled = Array1::from_iter(proj.iter().zip(vals.iter()).map(|(p, l)| p / l));
    let inv_v = vecs.dot(&scaled);
    Ok(v.dot(&inv_v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostFit {
    pub model: CostModel,
    /// Sum of squared residuals of the affine fit.
    pub residual: f64,
    pub r_squared: f64,
}

/// Least-squares calibration of the cost model from measured (bands, time)
/// pairs. The intercept is clamped at zero (negative fixed cost is
/// unphysical); a nonpositive slope is a fit failure.
pub fn fit_cost_model(measured: &[(usize, f64)]) -> Result<CostFit> {
    let distinct = {
        let mut bands: Vec<usize> = measured.iter().map(|&(b, _)| b).collect();
        bands.sort_unstable();
        bands.dedup();
        bands.len()
    };
    if distinct < 2 {
        return Err(Error::fit(format!(
            "need measurements at >= 2 distinct band counts, got {distinct}"
        )));
    }
    let n = measured.len() as f64;
    let mean_x = measured.iter().map(|&(b, _)| b as f64).sum::<f64>() / n;
    let mean_y = measured.iter().map(|&(_, t)| t).sum::<f64>() / n;
    let sxx: f64 = measured
        .iter()
        .map(|&(b, _)| (b as f64 - mean_x).powi(2))
        .sum();
    let sxy: f64 = measured
        .iter()
        .map(|&(b, t)| (b as f64 - mean_x) * (t - mean_y))
        .sum();
    let mut c1 = sxy / sxx;
    let mut c0 = mean_y - c1 * mean_x;
    if c0 < 0.0 {
        c0 = 0.0;
        let sxx0: f64 = measured.iter().map(|&(b, _)| (b as f64).powi(2)).sum();
        let sxy0: f64 = measured.iter().map(|&(b, t)| b as f64 * t).sum();
        c1 = sxy0 / sxx0;
    }
    if !(c1 > 0.0) {
        return Err(Error::fit(format!(
            "fitted per-band cost is nonpositive ({c1:.3e}); timings do not scale with bands"
        )));
    }
    let residual: f64 = measured
        .iter()
        .map(|&(b, t)| (t - c0 - c1 * b as f64).powi(2))
        .sum();
    let sst: f64 = measured.iter().map(|&(_, t)| (t - mean_y).powi(2)).sum();
    let r_squared = if sst > 0.0 {
        1.0 - residual / sst
    } else if residual <= 1e-12 {
        1.0
    } else {
        0.0
    };
    Ok(CostFit {
        model: CostModel { c0, c1 },
        residual,
        r_squared,
    })
}

/// The geometric eigenvalue profile rho^(j-1), j = 1..=d.
pub fn geometric_spectrum(rho: f64, d: usize) -> Result<Vec<f64>> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::argument(format!(
            "decay ratio must lie in (0,1), got {rho}"
        )));
    }
    if d == 0 {
        return Err(Error::argument("band count must be >= 1"));
    }
    Ok((0..d).map(|j| rho.powi(j as i32)).collect())
}
