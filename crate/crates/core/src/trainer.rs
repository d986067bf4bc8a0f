//! Convex training backbone: ridge and binary logistic regression executed
//! over a curriculum plan or as a full-spectrum baseline, with per-step
//! simulated cost accounting and closed-form loss gaps.
//!
//! Training runs in the fitted eigenbasis coordinates. Because the basis is
//! fitted on the training split, the within-split coordinate matrix has
//! exactly zero column means and a diagonal Gram matrix, which makes the
//! ridge Hessian diagonal and the optimum (and so the loss gap) available
//! in closed form at O(bands) per step.

use std::time::Instant;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{step_cost, CostModel};
use crate::cube::{flatten, LabeledCube};
use crate::error::{Error, Result};
use crate::schedule::{lr_at, LrSchedule, SchedulePlan};
use crate::spatial::{resize_cube, source_pixel, LowpassSpec, PcStack};
use crate::spectral::{fit_pca, project, SpectralBasis};

/// Offset mixed into the user seed for the validation-split permutation so
/// the split never shares a stream with batch shuffling.
const SPLIT_SEED_OFFSET: u64 = 7777;

/// Fraction of pixels held out for validation, stratified by class.
const VALIDATION_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Ridge,
    Logistic,
}

/// Linear predictor with an unregularized bias. Label smoothing is fixed
/// at zero; the backbone stays convex.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexModel {
    pub kind: ModelKind,
    pub weights: Array1<f64>,
    pub bias: f64,
    pub ridge_lambda: f64,
}

impl ConvexModel {
    /// Zero-initialized model on k coordinates.
    pub fn new(kind: ModelKind, k: usize, ridge_lambda: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::argument("model needs at least one coordinate"));
        }
        if !(ridge_lambda >= 0.0 && ridge_lambda.is_finite()) {
            return Err(Error::argument(format!(
                "ridge strength must be >= 0, got {ridge_lambda}"
            )));
        }
        Ok(Self {
            kind,
            weights: Array1::zeros(k),
            bias: 0.0,
            ridge_lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Raw predictions X w + b.
    pub fn decision(&self, x: &ArrayView2<'_, f64>) -> Array1<f64> {
        x.dot(&self.weights) + self.bias
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    /// Full-batch gradient descent, one step per epoch.
    Gd,
    /// Minibatch SGD with epoch-wise shuffling, ceil(M/batch) steps per epoch.
    Sgd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub lr_schedule: LrSchedule,
    /// Cost model behind the simulated per-step cost column.
    pub cost: CostModel,
}

impl TrainConfig {
    pub fn new(
        batch_size: usize,
        seed: u64,
        optimizer: Optimizer,
        lr_schedule: LrSchedule,
        cost: CostModel,
    ) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::argument("batch size must be >= 1"));
        }
        Ok(Self {
            batch_size,
            seed,
            optimizer,
            lr_schedule,
            cost,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub stage: usize,
    pub k: usize,
    pub b: usize,
    pub loss: f64,
    /// Gap of the full-spectrum training objective at the current iterate
    /// (zero-extended), when the optimum is computable.
    pub loss_gap: Option<f64>,
    /// Cumulative simulated cost after this step.
    pub sim_cost: f64,
    /// Cumulative wall time; excluded from determinism comparisons.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub rows: Vec<TraceRow>,
    pub final_val_accuracy: Option<f64>,
}

impl TrainTrace {
    pub fn total_sim_cost(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.sim_cost)
    }

    /// Cumulative simulated cost at the first step whose gap reaches the
    /// threshold.
    pub fn cost_to_gap(&self, threshold: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.loss_gap.is_some_and(|g| g <= threshold))
            .map(|r| r.sim_cost)
    }

    pub fn steps_to_gap(&self, threshold: f64) -> Option<usize> {
        self.rows
            .iter()
            .position(|r| r.loss_gap.is_some_and(|g| g <= threshold))
            .map(|p| p + 1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,stage,k,b,loss,loss_gap,sim_cost,wall_ms\n");
        for r in &self.rows {
            let gap = r.loss_gap.map_or(String::new(), |g| format!("{g}"));
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.step, r.stage, r.k, r.b, r.loss, gap, r.sim_cost, r.wall_ms
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format("empty trace file"))?;
        if header.trim() != "step,stage,k,b,loss,loss_gap,sim_cost,wall_ms" {
            return Err(Error::format(format!("unexpected trace header: {header}")));
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 8 {
                return Err(Error::format(format!(
                    "trace line {} has {} columns, expected 8",
                    n + 2,
                    cols.len()
                )));
            }
            let parse_f = |s: &str, what: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::format(format!("bad {what} value {s:?} on line {}", n + 2)))
            };
            let parse_u = |s: &str, what: &str| -> Result<usize> {
                s.parse::<usize>()
                    .map_err(|_| Error::format(format!("bad {what} value {s:?} on line {}", n + 2)))
            };
            rows.push(TraceRow {
                step: parse_u(cols[0], "step")?,
                stage: parse_u(cols[1], "stage")?,
                k: parse_u(cols[2], "k")?,
                b: parse_u(cols[3], "b")?,
                loss: parse_f(cols[4], "loss")?,
                loss_gap: if cols[5].is_empty() {
                    None
                } else {
                    Some(parse_f(cols[5], "loss_gap")?)
                },
                sim_cost: parse_f(cols[6], "sim_cost")?,
                wall_ms: parse_f(cols[7], "wall_ms")?,
            });
        }
        Ok(Self {
            rows,
            final_val_accuracy: None,
        })
    }
}

/// Loss and gradient of the regularized empirical risk on a batch. The
/// gradient packs the bias derivative last (k+1 entries). Ridge uses the
/// half squared error per sample; logistic expects labels in {0,1}.
pub fn loss_and_grad(
    model: &ConvexModel,
    x: &ArrayView2<'_, f64>,
    y: &ArrayView1<'_, f64>,
) -> Result<(f64, Array1<f64>)> {
    let (m, k) = x.dim();
    if k != model.dim() {
        return Err(Error::argument(format!(
            "batch has {k} coordinates, model has {}",
            model.dim()
        )));
    }
    if y.len() != m || m == 0 {
        return Err(Error::argument(format!(
            "batch of {m} rows with {} labels",
            y.len()
        )));
    }
    let lambda = model.ridge_lambda;
    let a = model.decision(x);
    let minv = 1.0 / m as f64;
    let (data_loss, residual) = match model.kind {
        ModelKind::Ridge => {
            let r = &a - y;
            (0.5 * minv * r.dot(&r), r)
        }
        ModelKind::Logistic => {
            if y.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::argument("logistic labels must be 0 or 1"));
            }
            let mut loss = 0.0;
            let mut s = Array1::zeros(m);
            for i in 0..m {
                let ai = a[i];
                // softplus(a) - y a, evaluated stably.
                loss += ai.max(0.0) + (-ai.abs()).exp().ln_1p() - y[i] * ai;
                s[i] = 1.0 / (1.0 + (-ai).exp()) - y[i];
            }
            (loss * minv, s)
        }
    };
    let loss = data_loss + 0.5 * lambda * model.weights.dot(&model.weights);
    let mut grad = Array1::zeros(k + 1);
    let gw = x.t().dot(&residual) * minv + &(lambda * &model.weights);
    grad.slice_mut(s![..k]).assign(&gw);
    grad[k] = residual.sum() * minv;
    if !loss.is_finite() || grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("non-finite loss or gradient"));
    }
    Ok((loss, grad))
}

/// One gradient step at the given learning rate.
pub fn sgd_step(
    model: &ConvexModel,
    x: &ArrayView2<'_, f64>,
    y: &ArrayView1<'_, f64>,
    lr: f64,
) -> Result<ConvexModel> {
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(Error::argument(format!("learning rate must be >= 0, got {lr}")));
    }
    let (_, grad) = loss_and_grad(model, x, y)?;
    let k = model.dim();
    let mut out = model.clone();
    out.weights = &model.weights - &(lr * &grad.slice(s![..k]));
    out.bias = model.bias - lr * grad[k];
    Ok(out)
}

/// Zero-extend the weights onto additional trailing coordinates. Nested
/// eigenbasis coordinates make this prediction-preserving: new coordinates
/// multiply zero weights.
pub fn expand_weights(model: &ConvexModel, k_new: usize) -> Result<ConvexModel> {
    let k = model.dim();
    if k_new < k {
        return Err(Error::argument(format!(
            "cannot shrink weights from {k} to {k_new}"
        )));
    }
    if k_new == k {
        return Ok(model.clone());
    }
    let mut weights = Array1::zeros(k_new);
    weights.slice_mut(s![..k]).assign(&model.weights);
    Ok(ConvexModel {
        kind: model.kind,
        weights,
        bias: model.bias,
        ridge_lambda: model.ridge_lambda,
    })
}

/// A short full-batch fine-tune at a fixed representation: `t_ft` epochs of
/// gradient steps at constant learning rate.
pub fn fine_tune(
    model: &ConvexModel,
    x: &Array2<f64>,
    y: &Array1<f64>,
    t_ft: usize,
    lr: f64,
) -> Result<ConvexModel> {
    let mut cur = model.clone();
    for _ in 0..t_ft {
        cur = sgd_step(&cur, &x.view(), &y.view(), lr)?;
    }
    Ok(cur)
}

/// Fraction of correct 0/1 predictions at threshold 1/2 on the decision
/// value (ridge) or the sigmoid (logistic; same threshold either way).
pub fn validation_accuracy(
    model: &ConvexModel,
    x: &ArrayView2<'_, f64>,
    y: &ArrayView1<'_, f64>,
) -> Result<f64> {
    if x.nrows() == 0 || x.nrows() != y.len() {
        return Err(Error::argument("validation set is empty or mismatched"));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::argument("accuracy needs labels in {0,1}"));
    }
    let a = model.decision(x);
    let correct = a
        .iter()
        .zip(y.iter())
        .filter(|&(&ai, &yi)| {
            let pred = match model.kind {
                ModelKind::Ridge => ai >= 0.5,
                ModelKind::Logistic => ai >= 0.0,
            };
            pred == (yi == 1.0)
        })
        .count();
    Ok(correct as f64 / y.len() as f64)
}

/// Stratified train/validation pixel split: per class, a seeded permutation
/// sends about 20% of pixels (at least one, never all) to validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneSplit {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
}

pub fn split_pixels(labels: &[u32], num_classes: u32, seed: u64) -> Result<SceneSplit> {
    if labels.is_empty() || num_classes == 0 {
        return Err(Error::argument("need labeled pixels and classes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(SPLIT_SEED_OFFSET));
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    for c in 0..num_classes {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == c)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            return Err(Error::argument(format!("class {c} has no pixels")));
        }
        members.shuffle(&mut rng);
        let n = members.len();
        let nv = if n == 1 {
            0
        } else {
            ((VALIDATION_FRACTION * n as f64).round() as usize).clamp(1, n - 1)
        };
        val_idx.extend_from_slice(&members[..nv]);
        train_idx.extend_from_slice(&members[nv..]);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    Ok(SceneSplit { train_idx, val_idx })
}

/// Split the scene and fit the eigenbasis on its training pixels.
pub fn fit_scene_basis(scene: &LabeledCube, seed: u64) -> Result<(SceneSplit, SpectralBasis)> {
    let split = split_pixels(&scene.labels, scene.num_classes, seed)?;
    let x = flatten(&scene.cube);
    let x_train = x.select(Axis(0), &split.train_idx);
    let basis = fit_pca(&x_train)?;
    Ok((split, basis))
}

/// Closed-form machinery for the full-spectrum ridge gap: with the basis
/// fitted on the training split, the Hessian in eigen coordinates is
/// diag(lambda_j (M-1)/M + ridge) plus a unit bias curvature, and the
/// optimum separates per coordinate.
struct RidgeGap {
    h: Array1<f64>,
    w_star: Array1<f64>,
    b_star: f64,
}

impl RidgeGap {
    fn build(z_train: &ArrayView2<'_, f64>, y_train: &ArrayView1<'_, f64>, ridge: f64) -> Self {
        let m = z_train.nrows() as f64;
        let d = z_train.ncols();
        let mut h = Array1::zeros(d);
        let mut w_star = Array1::zeros(d);
        for j in 0..d {
            let col = z_train.column(j);
            let hj = col.dot(&col) / m + ridge;
            let cj = col.dot(y_train) / m;
            h[j] = hj;
            w_star[j] = cj / hj;
        }
        let b_star = y_train.mean().expect("non-empty training split");
        Self { h, w_star, b_star }
    }

    /// Gap at a zero-extended iterate, O(d).
    fn gap(&self, weights: &Array1<f64>, bias: f64) -> f64 {
        let mut g = 0.5 * (bias - self.b_star).powi(2);
        for j in 0..self.h.len() {
            let wj = if j < weights.len() { weights[j] } else { 0.0 };
            g += 0.5 * self.h[j] * (wj - self.w_star[j]).powi(2);
        }
        g
    }
}

/// Damped Newton solve of the full logistic objective, used once per run to
/// anchor the loss-gap column. Needs ridge > 0 for a unique optimum.
fn logistic_optimum(
    z: &ArrayView2<'_, f64>,
    y: &ArrayView1<'_, f64>,
    ridge: f64,
) -> Result<(ConvexModel, f64)> {
    let (m, d) = z.dim();
    let mut model = ConvexModel::new(ModelKind::Logistic, d, ridge)?;
    let (mut loss, mut grad) = loss_and_grad(&model, z, y)?;
    for _ in 0..100 {
        if grad.iter().map(|g| g.abs()).fold(0.0f64, f64::max) < 1e-13 {
            break;
        }
        // Hessian (1/M) X~' S X~ + ridge on the feature block.
        let a = model.decision(z);
        let mut hess = Array2::zeros((d + 1, d + 1));
        for i in 0..m {
            let p = 1.0 / (1.0 + (-a[i]).exp());
            let s = (p * (1.0 - p)).max(1e-12);
            let zi = z.row(i);
            for r in 0..d {
                let sr = s * zi[r] / m as f64;
                for c in r..d {
                    hess[[r, c]] += sr * zi[c];
                }
                hess[[r, d]] += sr;
            }
            hess[[d, d]] += s / m as f64;
        }
        for r in 0..d {
            hess[[r, r]] += ridge;
            for c in r + 1..=d {
                hess[[c, r]] = hess[[r, c]];
            }
        }
        let dir = solve_dense(&mut hess, &grad)?;
        // Backtracking keeps the iteration strictly descending.
        let mut t = 1.0;
        loop {
            let mut cand = model.clone();
            cand.weights = &model.weights - &(t * &dir.slice(s![..d]));
            cand.bias = model.bias - t * dir[d];
            let (cl, cg) = loss_and_grad(&cand, z, y)?;
            if cl <= loss || t < 1e-8 {
                model = cand;
                loss = cl;
                grad = cg;
                break;
            }
            t *= 0.5;
        }
    }
    Ok((model, loss))
}

/// In-place Gauss elimination with partial pivoting.
fn solve_dense(a: &mut Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = b.len();
    let mut x = b.clone();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[[i, col]]
                    .abs()
                    .partial_cmp(&a[[j, col]].abs())
                    .expect("finite pivots")
            })
            .expect("non-empty range");
        if a[[pivot, col]].abs() < 1e-300 {
            return Err(Error::numeric("singular system in Newton solve"));
        }
        if pivot != col {
            for c in 0..n {
                a.swap([col, c], [pivot, c]);
            }
            x.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[[row, col]] / a[[col, col]];
            for c in col..n {
                a[[row, c]] -= f * a[[col, c]];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= a[[col, col]];
        for row in 0..col {
            x[row] -= a[[row, col]] * x[col];
        }
    }
    Ok(x)
}

/// Monte-Carlo estimate of the single-sample feature-gradient variance
/// trace at the model's current weights: mean over seeded draws (with
/// replacement) of ||g_i - g_bar||^2, where g_i is the data term of sample
/// i's gradient restricted to the feature block.
pub fn gradient_variance_mc(
    model: &ConvexModel,
    x: &ArrayView2<'_, f64>,
    y: &ArrayView1<'_, f64>,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    let (m, k) = x.dim();
    if k != model.dim() || y.len() != m || m == 0 {
        return Err(Error::argument("data does not match the model"));
    }
    if draws == 0 {
        return Err(Error::argument("need at least one draw"));
    }
    let a = model.decision(x);
    let factor: Array1<f64> = match model.kind {
        ModelKind::Ridge => &a - y,
        ModelKind::Logistic => {
            Array1::from_iter(a.iter().zip(y.iter()).map(|(&ai, &yi)| {
                1.0 / (1.0 + (-ai).exp()) - yi
            }))
        }
    };
    // Full-batch mean of the data term.
    let mean_g = x.t().dot(&factor) / m as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..draws {
        let i = rand::Rng::gen_range(&mut rng, 0..m);
        let gi = &x.row(i).to_owned() * factor[i];
        let diff = &gi - &mean_g;
        acc += diff.dot(&diff);
    }
    Ok(acc / draws as f64)
}

struct StageData {
    x_train: Array2<f64>,
    y_train: Array1<f64>,
    x_val: Array2<f64>,
    y_val: Array1<f64>,
}

/// Materialize one stage's representation: slice the leading k coordinates
/// at native resolution, or resize the component images and inherit each
/// coarse pixel's split membership and label from its stride-source pixel.
fn stage_data(
    z_full: &Array2<f64>,
    labels: &[u32],
    split: &SceneSplit,
    h: usize,
    w: usize,
    k: usize,
    b: usize,
) -> Result<StageData> {
    let gather = |idx: &[usize], z: &Array2<f64>| -> (Array2<f64>, Array1<f64>) {
        let x = z.select(Axis(0), idx);
        let y = Array1::from_iter(idx.iter().map(|&i| labels[i] as f64));
        (x, y)
    };
    if b == h {
        let zk = z_full.slice(s![.., ..k]).to_owned();
        let (x_train, y_train) = gather(&split.train_idx, &zk);
        let (x_val, y_val) = gather(&split.val_idx, &zk);
        return Ok(StageData {
            x_train,
            y_train,
            x_val,
            y_val,
        });
    }
    if h != w {
        return Err(Error::argument(format!(
            "reduced-resolution stages need a square scene, got {h}x{w}"
        )));
    }
    let stack = PcStack::from_projection(&z_full.slice(s![.., ..k]).to_owned(), h, w)?;
    let stride = h as f64 / b as f64;
    let filter = LowpassSpec::gaussian_for_stride(stride)?;
    let coarse = resize_cube(&stack, b, &filter)?.to_projection();
    let mut in_train = vec![false; h * w];
    for &i in &split.train_idx {
        in_train[i] = true;
    }
    let mut in_val = vec![false; h * w];
    for &i in &split.val_idx {
        in_val[i] = true;
    }
    let mut tr_rows = Vec::new();
    let mut va_rows = Vec::new();
    for r in 0..b {
        for c in 0..b {
            let src = source_pixel(r, h, b) * w + source_pixel(c, w, b);
            let coarse_idx = r * b + c;
            if in_train[src] {
                tr_rows.push((coarse_idx, src));
            } else if in_val[src] {
                va_rows.push((coarse_idx, src));
            }
        }
    }
    if tr_rows.is_empty() || va_rows.is_empty() {
        return Err(Error::argument(format!(
            "resolution {b} leaves an empty split"
        )));
    }
    let take = |rows: &[(usize, usize)]| -> (Array2<f64>, Array1<f64>) {
        let idx: Vec<usize> = rows.iter().map(|&(ci, _)| ci).collect();
        let x = coarse.select(Axis(0), &idx);
        let y = Array1::from_iter(rows.iter().map(|&(_, src)| labels[src] as f64));
        (x, y)
    };
    let (x_train, y_train) = take(&tr_rows);
    let (x_val, y_val) = take(&va_rows);
    Ok(StageData {
        x_train,
        y_train,
        x_val,
        y_val,
    })
}

fn check_scene(scene: &LabeledCube) -> Result<()> {
    if scene.num_classes != 2 {
        return Err(Error::argument(format!(
            "the convex backbone trains binary scenes, got {} classes",
            scene.num_classes
        )));
    }
    Ok(())
}

/// Shared executor for baseline and curriculum runs. Stage step counts are
/// in plan units (epochs); SGD multiplies by ceil(M/batch) steps per epoch
/// while full-batch GD takes one step per epoch.
fn execute_stages(
    plan: &SchedulePlan,
    scene: &LabeledCube,
    model0: &ConvexModel,
    config: &TrainConfig,
) -> Result<TrainTrace> {
    check_scene(scene)?;
    plan.validate()?;
    let h = scene.cube.h;
    let w = scene.cube.w;
    let d = scene.cube.d;
    let b0 = h;
    if model0.dim() != plan.stages[0].k {
        return Err(Error::argument(format!(
            "model has {} coordinates, the first stage trains {}",
            model0.dim(),
            plan.stages[0].k
        )));
    }
    if plan.stages.iter().any(|s| s.k > d) {
        return Err(Error::argument(format!(
            "plan retains more than {d} bands"
        )));
    }
    if plan.stages.iter().any(|s| s.b > b0) {
        return Err(Error::argument(format!(
            "plan resolution exceeds the native {b0}"
        )));
    }

    let start = Instant::now();
    let (split, basis) = fit_scene_basis(scene, config.seed)?;
    let x_all = flatten(&scene.cube);
    let z_full = project(&basis, &x_all, d)?;

    // Gap anchor on the full-spectrum training objective.
    let z_train = z_full.select(Axis(0), &split.train_idx);
    let y_train_full = Array1::from_iter(split.train_idx.iter().map(|&i| scene.labels[i] as f64));
    enum GapAnchor {
        Ridge(RidgeGap),
        Logistic { opt_loss: f64 },
        None,
    }
    let anchor = match model0.kind {
        ModelKind::Ridge => GapAnchor::Ridge(RidgeGap::build(
            &z_train.view(),
            &y_train_full.view(),
            model0.ridge_lambda,
        )),
        ModelKind::Logistic if model0.ridge_lambda > 0.0 => {
            let (_, opt_loss) = logistic_optimum(
                &z_train.view(),
                &y_train_full.view(),
                model0.ridge_lambda,
            )?;
            GapAnchor::Logistic { opt_loss }
        }
        ModelKind::Logistic => GapAnchor::None,
    };
    let full_gap = |model: &ConvexModel| -> Result<Option<f64>> {
        match &anchor {
            GapAnchor::Ridge(rg) => Ok(Some(rg.gap(&model.weights, model.bias))),
            GapAnchor::Logistic { opt_loss } => {
                let expanded = expand_weights(model, d)?;
                let (l, _) = loss_and_grad(&expanded, &z_train.view(), &y_train_full.view())?;
                Ok(Some(l - opt_loss))
            }
            GapAnchor::None => Ok(None),
        }
    };

    let mut model = model0.clone();
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut sim_cost = 0.0;
    let mut global_step = 0usize;
    let mut last_stage: Option<StageData> = None;

    for stage in &plan.stages {
        let data = stage_data(&z_full, &scene.labels, &split, h, w, stage.k, stage.b)?;
        model = expand_weights(&model, stage.k)?;
        let m = data.x_train.nrows();
        let steps_per_epoch = match config.optimizer {
            Optimizer::Gd => 1,
            Optimizer::Sgd => m.div_ceil(config.batch_size),
        };
        let stage_steps = stage.steps * steps_per_epoch;
        let cost_per_step = step_cost(&config.cost, stage.k)
            * (stage.b as f64 / b0 as f64).powi(2);
        let mut order: Vec<usize> = (0..m).collect();
        for step_in_stage in 0..stage_steps {
            let lr_fraction = stage.lr_interval.0
                + (step_in_stage + 1) as f64 / stage_steps as f64
                    * (stage.lr_interval.1 - stage.lr_interval.0);
            let lr = lr_at(&config.lr_schedule, lr_fraction.min(1.0))?;
            let batch_idx: Option<Vec<usize>> = match config.optimizer {
                Optimizer::Gd => None,
                Optimizer::Sgd => {
                    if step_in_stage % steps_per_epoch == 0 {
                        // One shuffle stream per (stage, epoch), disjoint
                        // from the split stream by construction.
                        let epoch = step_in_stage / steps_per_epoch;
                        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                        rng.set_stream(((stage.index as u64 + 1) << 32) | epoch as u64);
                        order.shuffle(&mut rng);
                    }
                    let at = (step_in_stage % steps_per_epoch) * config.batch_size;
                    Some(order[at..(at + config.batch_size).min(m)].to_vec())
                }
            };
            let (loss, grad) = match &batch_idx {
                None => loss_and_grad(&model, &data.x_train.view(), &data.y_train.view())?,
                Some(idx) => {
                    let xb = data.x_train.select(Axis(0), idx);
                    let yb = Array1::from_iter(idx.iter().map(|&i| data.y_train[i]));
                    loss_and_grad(&model, &xb.view(), &yb.view())?
                }
            };
            let kd = model.dim();
            model.weights = &model.weights - &(lr * &grad.slice(s![..kd]));
            model.bias -= lr * grad[kd];
            sim_cost += cost_per_step;
            global_step += 1;
            rows.push(TraceRow {
                step: global_step,
                stage: stage.index,
                k: stage.k,
                b: stage.b,
                loss,
                loss_gap: full_gap(&model)?,
                sim_cost,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
        last_stage = Some(data);
    }

    let final_val_accuracy = match &last_stage {
        Some(data) => Some(validation_accuracy(
            &model,
            &data.x_val.view(),
            &data.y_val.view(),
        )?),
        None => None,
    };
    Ok(TrainTrace {
        rows,
        final_val_accuracy,
    })
}

/// Conventional full-spectrum run: every epoch trains all bands at native
/// resolution for `t0` epochs.
pub fn run_baseline(
    scene: &LabeledCube,
    model: &ConvexModel,
    t0: usize,
    config: &TrainConfig,
) -> Result<TrainTrace> {
    check_scene(scene)?;
    let d = scene.cube.d;
    if model.dim() != d {
        return Err(Error::argument(format!(
            "baseline model must carry all {d} bands, got {}",
            model.dim()
        )));
    }
    if t0 == 0 {
        return Ok(TrainTrace {
            rows: vec![],
            final_val_accuracy: None,
        });
    }
    let plan = SchedulePlan {
        t0,
        beta: 0.5, // unused by execution; budget fields describe planning only
        t: t0,
        stages: vec![crate::schedule::CurriculumStage {
            index: 1,
            b: scene.cube.h,
            k: d,
            steps: t0,
            lr_interval: (0.0, 1.0),
        }],
        t_ft: 0,
        b_candidates: vec![vec![scene.cube.h]],
    };
    execute_stages(&plan, scene, model, config)
}

/// Curriculum run over an assembled plan: stages execute in order with
/// nested-coordinate weight expansion at each boundary.
pub fn run_spectral_train(
    plan: &SchedulePlan,
    scene: &LabeledCube,
    model: &ConvexModel,
    config: &TrainConfig,
) -> Result<TrainTrace> {
    execute_stages(plan, scene, model, config)
}

/// Proxy accuracy for resolution search: fresh zero model fine-tuned for
/// `t_ft` epochs at candidate resolution `b` on the leading `k` components.
/// Scoring happens on the held-out pixels at native resolution; the proxy
/// has to predict final-task quality, not coarse-grid quality, and a stride
/// whose coarse grid collapses onto one class would otherwise score a
/// trivially perfect constant predictor.
pub fn resolution_proxy(
    scene: &LabeledCube,
    kind: ModelKind,
    ridge: f64,
    lr: f64,
    seed: u64,
) -> impl Fn(usize, usize, usize) -> Result<f64> + Sync + '_ {
    move |b: usize, k: usize, t_ft: usize| -> Result<f64> {
        check_scene(scene)?;
        let (split, basis) = fit_scene_basis(scene, seed)?;
        let x_all = flatten(&scene.cube);
        let z = project(&basis, &x_all, k)?;
        let data = stage_data(&z, &scene.labels, &split, scene.cube.h, scene.cube.w, k, b)?;
        let model = ConvexModel::new(kind, k, ridge)?;
        let tuned = fine_tune(&model, &data.x_train, &data.y_train, t_ft, lr)?;
        let x_val = z.select(Axis(0), &split.val_idx);
        let y_val = Array1::from_iter(split.val_idx.iter().map(|&i| scene.labels[i] as f64));
        validation_accuracy(&tuned, &x_val.view(), &y_val.view())
    }
}
