//! Curriculum plan construction: compute-balanced step allocation, the
//! band-count ramp, the warmup-cosine learning-rate schedule, and
//! validation-guided resolution search.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One curriculum stage: spatial size, retained band count, optimization
/// steps, and the learning-rate interval it occupies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurriculumStage {
    /// 1-based stage index.
    pub index: usize,
    /// Spatial side length trained at.
    pub b: usize,
    /// Retained leading components.
    pub k: usize,
    pub steps: usize,
    /// Half-open fraction interval ((i-1)/N, i/N] of the total budget.
    pub lr_interval: (f64, f64),
}

/// Learning-rate shape: linear warmup then cosine decay to the floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LrShape {
    LinearWarmupCosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub peak_lr: f64,
    pub warmup_epochs: usize,
    pub min_lr: f64,
    pub total_epochs: usize,
    pub shape: LrShape,
}

impl LrSchedule {
    pub fn new(peak_lr: f64, warmup_epochs: usize, min_lr: f64, total_epochs: usize) -> Result<Self> {
        if !(peak_lr > 0.0 && peak_lr.is_finite()) {
            return Err(Error::argument(format!("peak lr must be > 0, got {peak_lr}")));
        }
        if !(min_lr >= 0.0 && min_lr <= peak_lr) {
            return Err(Error::argument(format!(
                "need 0 <= min lr <= peak lr, got min {min_lr} peak {peak_lr}"
            )));
        }
        if total_epochs == 0 {
            return Err(Error::argument("total epochs must be >= 1"));
        }
        if warmup_epochs > total_epochs {
            return Err(Error::argument(format!(
                "warmup {warmup_epochs} exceeds total {total_epochs}"
            )));
        }
        Ok(Self {
            peak_lr,
            warmup_epochs,
            min_lr,
            total_epochs,
            shape: LrShape::LinearWarmupCosine,
        })
    }

    /// Conventional defaults: peak 0.004, 20 warmup epochs, floor 1e-6.
    pub fn standard(total_epochs: usize) -> Result<Self> {
        Self::new(0.004, 20, 1e-6, total_epochs)
    }

    /// Degenerate schedule holding one constant rate (no warmup, floor at
    /// the peak).
    pub fn constant(lr: f64, total_epochs: usize) -> Result<Self> {
        Self::new(lr, 0, lr, total_epochs)
    }
}

/// Learning rate at a fraction of the total budget: linear from 0 to the
/// peak across warmup, then cosine down to the floor. Continuous at the
/// junction.
pub fn lr_at(schedule: &LrSchedule, epoch_fraction: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epoch_fraction) || !epoch_fraction.is_finite() {
        return Err(Error::argument(format!(
            "epoch fraction must lie in [0,1], got {epoch_fraction}"
        )));
    }
    let wf = schedule.warmup_epochs as f64 / schedule.total_epochs as f64;
    if epoch_fraction < wf {
        return Ok(schedule.peak_lr * epoch_fraction / wf);
    }
    if wf >= 1.0 {
        return Ok(schedule.peak_lr * epoch_fraction);
    }
    let progress = (epoch_fraction - wf) / (1.0 - wf);
    Ok(schedule.min_lr
        + (schedule.peak_lr - schedule.min_lr) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos()))
}

/// Compute-balanced step count for a stage at resolution B_i when the
/// per-step cost scales as B^2: floor((T/N)(B0/B_i)^2), at least 1.
pub fn steps_for_stage(t: usize, n_stages: usize, b0: usize, b_i: usize) -> Result<usize> {
    if n_stages == 0 || b0 == 0 || b_i == 0 {
        return Err(Error::argument("stage counts and sizes must be positive"));
    }
    if b_i > b0 {
        return Err(Error::argument(format!(
            "stage resolution {b_i} exceeds native {b0}; the curriculum never upsamples"
        )));
    }
    let ratio = b0 as f64 / b_i as f64;
    let steps = (t as f64 / n_stages as f64) * ratio * ratio;
    Ok((steps.floor() as usize).max(1))
}

/// Band-count ramp shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RampShape {
    Linear,
}

/// Monotone band schedule from k1 to the full count d across the stages.
pub fn spectral_schedule(
    k1: usize,
    d: usize,
    n_stages: usize,
    _shape: RampShape,
) -> Result<Vec<usize>> {
    if k1 == 0 || d == 0 || k1 > d {
        return Err(Error::argument(format!(
            "need 1 <= k1 <= d, got k1={k1} d={d}"
        )));
    }
    if n_stages == 0 {
        return Err(Error::argument("stage count must be >= 1"));
    }
    if n_stages == 1 {
        return Ok(vec![d]);
    }
    let mut ks: Vec<usize> = (0..n_stages)
        .map(|i| {
            let f = k1 as f64 + i as f64 * (d as f64 - k1 as f64) / (n_stages as f64 - 1.0);
            f.round() as usize
        })
        .collect();
    ks[n_stages - 1] = d;
    Ok(ks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulePlan {
    pub t0: usize,
    pub beta: f64,
    /// Effective budget floor(beta * t0), in the same epoch units as t0.
    pub t: usize,
    pub stages: Vec<CurriculumStage>,
    /// Proxy fine-tune epochs for resolution search (0 disables).
    pub t_ft: usize,
    /// Per-stage candidate resolutions, sorted ascending.
    pub b_candidates: Vec<Vec<usize>>,
}

/// Serialized plan document.
#[derive(Debug, Serialize, Deserialize)]
struct PlanDoc {
    t0: usize,
    beta: f64,
    n_stages: usize,
    stages: Vec<StageDoc>,
    t_ft: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct StageDoc {
    i: usize,
    b: usize,
    k: usize,
    steps: usize,
    lr_lo: f64,
    lr_hi: f64,
}

impl SchedulePlan {
    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    /// Total optimization steps across stages.
    pub fn total_steps(&self) -> usize {
        self.stages.iter().map(|s| s.steps).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = PlanDoc {
            t0: self.t0,
            beta: self.beta,
            n_stages: self.stages.len(),
            stages: self
                .stages
                .iter()
                .map(|s| StageDoc {
                    i: s.index,
                    b: s.b,
                    k: s.k,
                    steps: s.steps,
                    lr_lo: s.lr_interval.0,
                    lr_hi: s.lr_interval.1,
                })
                .collect(),
            t_ft: self.t_ft,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parse a serialized plan. Candidate sets collapse to the chosen
    /// resolution (a stored plan is already resolved).
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PlanDoc =
            serde_json::from_str(text).map_err(|e| Error::format(format!("bad plan JSON: {e}")))?;
        if doc.stages.is_empty() {
            return Err(Error::format("plan has no stages"));
        }
        if doc.stages.len() != doc.n_stages {
            return Err(Error::format(format!(
                "plan declares {} stages but lists {}",
                doc.n_stages,
                doc.stages.len()
            )));
        }
        if !(doc.beta > 0.0 && doc.beta < 1.0) {
            return Err(Error::format(format!(
                "budget ratio must lie in (0,1), got {}",
                doc.beta
            )));
        }
        let plan = Self {
            t0: doc.t0,
            beta: doc.beta,
            t: (doc.beta * doc.t0 as f64).floor() as usize,
            stages: doc
                .stages
                .iter()
                .map(|s| CurriculumStage {
                    index: s.i,
                    b: s.b,
                    k: s.k,
                    steps: s.steps,
                    lr_interval: (s.lr_lo, s.lr_hi),
                })
                .collect(),
            t_ft: doc.t_ft,
            b_candidates: doc.stages.iter().map(|s| vec![s.b]).collect(),
        };
        plan.validate().map_err(|e| Error::format(e.to_string()))?;
        Ok(plan)
    }

    /// Check the cross-stage invariants.
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::argument("plan has no stages"));
        }
        for (n, s) in self.stages.iter().enumerate() {
            if s.index != n + 1 {
                return Err(Error::argument(format!(
                    "stage {} carries index {}",
                    n + 1,
                    s.index
                )));
            }
            if s.b == 0 || s.k == 0 {
                return Err(Error::argument("stage sizes must be positive"));
            }
        }
        for w in self.stages.windows(2) {
            if w[1].b < w[0].b {
                return Err(Error::argument(format!(
                    "resolutions must be nondecreasing: {} then {}",
                    w[0].b, w[1].b
                )));
            }
            if w[1].k < w[0].k {
                return Err(Error::argument(format!(
                    "band counts must be nondecreasing: {} then {}",
                    w[0].k, w[1].k
                )));
            }
        }
        Ok(())
    }
}

/// Resolver invoked for stages whose candidate set holds more than one
/// resolution: (stage index, sorted candidates, stage band count) -> chosen B.
pub type StageResolver<'a> = &'a mut dyn FnMut(usize, &[usize], usize) -> Result<usize>;

/// Assemble a full curriculum plan. Each stage takes its resolution from
/// the sole candidate, or from `resolver` when several are offered; band
/// counts ramp linearly from k1 to d; steps follow the compute-balanced
/// allocation over the effective budget floor(beta * t0).
#[allow(clippy::too_many_arguments)]
pub fn plan_schedule(
    t0: usize,
    beta: f64,
    n_stages: usize,
    b0: usize,
    d: usize,
    k1: usize,
    b_candidates: &[Vec<usize>],
    mut resolver: Option<StageResolver<'_>>,
) -> Result<SchedulePlan> {
    if t0 == 0 {
        return Err(Error::argument("baseline budget must be >= 1"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::argument(format!(
            "budget ratio must lie in (0,1), got {beta}"
        )));
    }
    if n_stages == 0 {
        return Err(Error::argument("stage count must be >= 1"));
    }
    if b0 == 0 {
        return Err(Error::argument("native resolution must be >= 1"));
    }
    if b_candidates.len() != n_stages {
        return Err(Error::argument(format!(
            "{} candidate sets for {n_stages} stages",
            b_candidates.len()
        )));
    }
    let ks = spectral_schedule(k1, d, n_stages, RampShape::Linear)?;
    let t = (beta * t0 as f64).floor() as usize;
    let mut stages = Vec::with_capacity(n_stages);
    for (i, cands) in b_candidates.iter().enumerate() {
        if cands.is_empty() {
            return Err(Error::argument(format!("stage {} has no candidates", i + 1)));
        }
        let mut sorted = cands.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if *sorted.last().expect("non-empty") > b0 {
            return Err(Error::argument(format!(
                "stage {} candidate exceeds native resolution {b0}",
                i + 1
            )));
        }
        let b = if sorted.len() == 1 {
            sorted[0]
        } else {
            match resolver.as_mut() {
                Some(f) => {
                    let chosen = f(i + 1, &sorted, ks[i])?;
                    if !sorted.contains(&chosen) {
                        return Err(Error::search(format!(
                            "resolver returned {chosen}, not a stage-{} candidate",
                            i + 1
                        )));
                    }
                    chosen
                }
                None => {
                    return Err(Error::argument(format!(
                        "stage {} offers {} candidates but no resolver was given",
                        i + 1,
                        sorted.len()
                    )))
                }
            }
        };
        stages.push(CurriculumStage {
            index: i + 1,
            b,
            k: ks[i],
            steps: steps_for_stage(t, n_stages, b0, b)?,
            lr_interval: (i as f64 / n_stages as f64, (i + 1) as f64 / n_stages as f64),
        });
    }
    let plan = SchedulePlan {
        t0,
        beta,
        t,
        stages,
        t_ft: 0,
        b_candidates: b_candidates
            .iter()
            .map(|c| {
                let mut s = c.clone();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect(),
    };
    plan.validate()?;
    Ok(plan)
}

fn worker_cap() -> usize {
    std::env::var("SPECTRAIN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Validation-guided resolution choice: evaluate the proxy at every
/// candidate and keep the most accurate, breaking ties toward the smaller
/// (cheaper) resolution. A sole candidate is returned without running the
/// proxy. Candidates failing the proxy are skipped unless all fail.
///
/// The proxy receives (candidate B, stage band count, fine-tune epochs) and
/// must be deterministic per candidate regardless of evaluation order;
/// worker threads (capped by SPECTRAIN_THREADS) change wall time only.
pub fn order_search<F>(
    stage_index: usize,
    candidates: &[usize],
    k_i: usize,
    proxy: &F,
    t_ft: usize,
) -> Result<usize>
where
    F: Fn(usize, usize, usize) -> Result<f64> + Sync,
{
    if candidates.is_empty() {
        return Err(Error::argument(format!(
            "stage {stage_index} has no candidates"
        )));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() == 1 {
        return Ok(sorted[0]);
    }
    search_with_workers(stage_index, &sorted, k_i, proxy, t_ft, worker_cap())
}

/// Evaluation core behind `order_search` with an explicit worker count;
/// `sorted` must be ascending and deduplicated.
fn search_with_workers<F>(
    stage_index: usize,
    sorted: &[usize],
    k_i: usize,
    proxy: &F,
    t_ft: usize,
    workers: usize,
) -> Result<usize>
where
    F: Fn(usize, usize, usize) -> Result<f64> + Sync,
{
    let threads = workers.min(sorted.len()).max(1);
    let results: Vec<Result<f64>> = if threads <= 1 {
        sorted.iter().map(|&b| proxy(b, k_i, t_ft)).collect()
    } else {
        let slots: Mutex<Vec<Option<Result<f64>>>> =
            Mutex::new((0..sorted.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..threads {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= sorted.len() {
                        break;
                    }
                    let out = proxy(sorted[i], k_i, t_ft);
                    slots.lock().expect("no poisoned proxy slots")[i] = Some(out);
                });
            }
        });
        slots
            .into_inner()
            .expect("scope joined all workers")
            .into_iter()
            .map(|s| s.expect("every slot filled"))
            .collect()
    };
    let mut best: Option<(usize, f64)> = None;
    let mut first_err: Option<Error> = None;
    for (&b, res) in sorted.iter().zip(results) {
        match res {
            Ok(acc) => {
                if !(0.0..=1.0).contains(&acc) {
                    return Err(Error::search(format!(
                        "proxy accuracy {acc} outside [0,1] at resolution {b}"
                    )));
                }
                // Strictly-greater keeps the smaller B on ties (ascending scan).
                if best.map_or(true, |(_, a)| acc > a) {
                    best = Some((b, acc));
                }
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    match best {
        Some((b, _)) => Ok(b),
        None => Err(Error::search(format!(
            "proxy failed on every stage-{stage_index} candidate: {}",
            first_err.expect("at least one error when no successes")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn step_allocation_matches_reference_points() {
        assert_eq!(steps_for_stage(150, 3, 50, 25).unwrap(), 200);
        assert_eq!(steps_for_stage(150, 3, 50, 50).unwrap(), 50);
        assert_eq!(steps_for_stage(10, 5, 64, 64).unwrap(), 2);
        assert_eq!(steps_for_stage(150, 3, 50, 38).unwrap(), 86);
        assert!(steps_for_stage(150, 3, 50, 51).is_err());
    }

    #[test]
    fn step_allocation_never_returns_zero() {
        assert_eq!(steps_for_stage(1, 10, 50, 50).unwrap(), 1);
    }

    #[test]
    fn smaller_resolution_earns_more_steps() {
        let mut prev = usize::MAX;
        for b in [10, 20, 30, 40, 50] {
            let s = steps_for_stage(150, 3, 50, b).unwrap();
            assert!(s <= prev);
            prev = s;
        }
    }

    #[test]
    fn band_ramp_matches_reference_points() {
        assert_eq!(
            spectral_schedule(20, 200, 3, RampShape::Linear).unwrap(),
            vec![20, 110, 200]
        );
        assert_eq!(
            spectral_schedule(200, 200, 4, RampShape::Linear).unwrap(),
            vec![200, 200, 200, 200]
        );
        assert_eq!(
            spectral_schedule(20, 200, 2, RampShape::Linear).unwrap(),
            vec![20, 200]
        );
        assert_eq!(spectral_schedule(20, 200, 1, RampShape::Linear).unwrap(), vec![200]);
        assert!(spectral_schedule(201, 200, 3, RampShape::Linear).is_err());
    }

    #[test]
    fn band_ramp_is_monotone_and_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let d = rng.gen_range(2..300);
            let k1 = rng.gen_range(1..=d);
            let n = rng.gen_range(1..8);
            let ks = spectral_schedule(k1, d, n, RampShape::Linear).unwrap();
            assert_eq!(ks.len(), n);
            assert_eq!(*ks.last().unwrap(), d);
            for w in ks.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn lr_matches_boundary_values() {
        let sched = LrSchedule::standard(300).unwrap();
        assert_abs_diff_eq!(lr_at(&sched, 0.0).unwrap(), 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(lr_at(&sched, 20.0 / 300.0).unwrap(), 0.004, epsilon = 1e-15);
        assert_abs_diff_eq!(lr_at(&sched, 1.0).unwrap(), 1e-6, epsilon = 1e-18);
        assert!(lr_at(&sched, -0.1).is_err());
        assert!(lr_at(&sched, 1.1).is_err());
    }

    #[test]
    fn lr_has_no_jumps() {
        // Continuity: adjacent samples differ by at most the Lipschitz slope
        // of either piece times the grid step, with no extra gap.
        let sched = LrSchedule::standard(300).unwrap();
        let wf = 20.0 / 300.0;
        let slope = (sched.peak_lr / wf)
            .max((sched.peak_lr - sched.min_lr) * std::f64::consts::PI / (2.0 * (1.0 - wf)));
        let h = 1e-4;
        let mut t: f64 = 0.0;
        let mut prev = lr_at(&sched, 0.0).unwrap();
        while t < 1.0 {
            t = (t + h).min(1.0);
            let cur = lr_at(&sched, t).unwrap();
            assert!(
                (cur - prev).abs() <= slope * h + 1e-6 * sched.peak_lr,
                "jump at t={t}"
            );
            prev = cur;
        }
        // The warmup/cosine junction agrees from both sides.
        let left = sched.peak_lr * (wf - 1e-12) / wf;
        let right = lr_at(&sched, wf).unwrap();
        assert_abs_diff_eq!(left, right, epsilon = 1e-9 * sched.peak_lr);
    }

    #[test]
    fn constant_schedule_is_flat() {
        let sched = LrSchedule::constant(0.1, 600).unwrap();
        for t in [0.0, 0.3, 0.5, 0.99, 1.0] {
            assert_abs_diff_eq!(lr_at(&sched, t).unwrap(), 0.1, epsilon = 1e-15);
        }
    }

    #[test]
    fn plan_matches_reference_example() {
        let plan = plan_schedule(
            300,
            0.5,
            3,
            50,
            200,
            20,
            &[vec![25], vec![38], vec![50]],
            None,
        )
        .unwrap();
        assert_eq!(plan.t, 150);
        let got: Vec<(usize, usize, usize)> =
            plan.stages.iter().map(|s| (s.b, s.k, s.steps)).collect();
        assert_eq!(got, vec![(25, 20, 200), (38, 110, 86), (50, 200, 50)]);
        assert_abs_diff_eq!(plan.stages[0].lr_interval.1, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(plan.stages[2].lr_interval.1, 1.0, epsilon = 0.0);
    }

    #[test]
    fn degenerate_plan_is_the_baseline_shape() {
        let plan = plan_schedule(300, 0.999, 1, 50, 200, 20, &[vec![50]], None).unwrap();
        assert_eq!(plan.stages.len(), 1);
        assert_eq!(plan.stages[0].b, 50);
        assert_eq!(plan.stages[0].k, 200);
        assert_eq!(plan.stages[0].steps, 299);
    }

    #[test]
    fn plan_rejects_bad_inputs() {
        assert!(plan_schedule(300, 0.5, 3, 50, 200, 20, &[vec![25], vec![], vec![50]], None)
            .is_err());
        assert!(plan_schedule(300, 1.0, 3, 50, 200, 20, &[vec![25], vec![38], vec![50]], None)
            .is_err());
        assert!(plan_schedule(300, 0.5, 2, 50, 200, 20, &[vec![25]], None).is_err());
        assert!(
            plan_schedule(300, 0.5, 1, 50, 200, 20, &[vec![60]], None).is_err(),
            "candidate beyond native resolution"
        );
        // Multiple candidates need a resolver.
        assert!(matches!(
            plan_schedule(300, 0.5, 1, 50, 200, 20, &[vec![25, 50]], None),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn resolver_choices_flow_into_the_plan() {
        let mut picks = vec![];
        let mut resolver = |i: usize, cands: &[usize], k: usize| -> Result<usize> {
            picks.push((i, cands.to_vec(), k));
            Ok(cands[cands.len() - 1])
        };
        let plan = plan_schedule(
            300,
            0.5,
            2,
            50,
            200,
            20,
            &[vec![25, 50], vec![50]],
            Some(&mut resolver),
        )
        .unwrap();
        assert_eq!(plan.stages[0].b, 50);
        assert_eq!(picks, vec![(1, vec![25, 50], 20)]);
    }

    #[test]
    fn budget_overshoot_is_bounded_by_flooring_slack() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let t0 = rng.gen_range(10..500);
            let beta = rng.gen_range(0.05..0.95);
            let n = rng.gen_range(1..6);
            let b0 = rng.gen_range(8..64);
            let cands: Vec<Vec<usize>> = (0..n)
                .map(|i| vec![b0 - (n - 1 - i) * (b0 / (2 * n))])
                .collect();
            let plan = plan_schedule(t0, beta, n, b0, 100, 10, &cands, None).unwrap();
            let spent: f64 = plan
                .stages
                .iter()
                .map(|s| s.steps as f64 * (s.b as f64 / b0 as f64).powi(2))
                .sum();
            assert!(
                spent.floor() <= (plan.t + n) as f64,
                "spent {spent} with T={} N={n}",
                plan.t
            );
        }
    }

    #[test]
    fn plan_json_roundtrip_preserves_stages() {
        let plan = plan_schedule(
            300,
            0.5,
            3,
            50,
            200,
            20,
            &[vec![25], vec![38], vec![50]],
            None,
        )
        .unwrap();
        let text = plan.to_json().unwrap();
        let back = SchedulePlan::from_json(&text).unwrap();
        assert_eq!(back.stages, plan.stages);
        assert_eq!(back.t, plan.t);
        assert!(SchedulePlan::from_json("{\"t0\": 1}").is_err());
    }

    #[test]
    fn sole_candidate_skips_the_proxy() {
        let proxy = |_b: usize, _k: usize, _t: usize| -> Result<f64> {
            panic!("proxy must not run for a singleton candidate set")
        };
        assert_eq!(order_search(1, &[25], 20, &proxy, 2).unwrap(), 25);
    }

    #[test]
    fn ties_break_toward_the_smaller_resolution() {
        let proxy = |_b: usize, _k: usize, _t: usize| -> Result<f64> { Ok(0.75) };
        assert_eq!(order_search(1, &[25, 13, 50], 20, &proxy, 2).unwrap(), 13);
    }

    #[test]
    fn search_result_ignores_candidate_ordering() {
        let proxy = |b: usize, _k: usize, _t: usize| -> Result<f64> {
            Ok(match b {
                13 => 0.52,
                25 => 0.97,
                50 => 0.90,
                _ => unreachable!(),
            })
        };
        for cands in [[13, 25, 50], [50, 25, 13], [25, 50, 13]] {
            assert_eq!(order_search(1, &cands, 20, &proxy, 2).unwrap(), 25);
        }
    }

    #[test]
    fn partial_proxy_failures_fall_back_to_successes() {
        let proxy = |b: usize, _k: usize, _t: usize| -> Result<f64> {
            if b == 13 {
                Err(Error::numeric("diverged"))
            } else {
                Ok(0.8)
            }
        };
        assert_eq!(order_search(1, &[13, 25], 20, &proxy, 2).unwrap(), 25);
        let all_fail = |_b: usize, _k: usize, _t: usize| -> Result<f64> {
            Err(Error::numeric("diverged"))
        };
        assert!(matches!(
            order_search(1, &[13, 25], 20, &all_fail, 2),
            Err(Error::Search(_))
        ));
    }

    #[test]
    fn parallel_search_equals_serial_search() {
        let proxy = |b: usize, _k: usize, _t: usize| -> Result<f64> {
            Ok(1.0 / (1.0 + (b as f64 - 30.0).abs()))
        };
        let cands = [10, 20, 30, 40, 50];
        let serial = search_with_workers(1, &cands, 20, &proxy, 2, 1).unwrap();
        for workers in [2, 3, 8] {
            assert_eq!(
                search_with_workers(1, &cands, 20, &proxy, 2, workers).unwrap(),
                serial
            );
        }
        assert_eq!(serial, 30);
    }

    #[test]
    fn out_of_range_proxy_accuracy_is_a_search_error() {
        let proxy = |_b: usize, _k: usize, _t: usize| -> Result<f64> { Ok(1.5) };
        assert!(matches!(
            order_search(1, &[13, 25], 20, &proxy, 2),
            Err(Error::Search(_))
        ));
    }
}
