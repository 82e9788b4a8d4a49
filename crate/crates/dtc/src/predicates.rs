//! Candidate split generation: exhaustive axis-aligned search, randomized
//! oblique hill-climbing, and one-vs-rest linear-classifier splits.
//!
//! All strategies score candidates with the shared scoring functions from
//! [`crate::learner`], so scores computed here are bit-identical to
//! independently recomputed ones.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::learner::{score_from_counts, split_score, splitmix64, Aggregation};
use crate::model::{Label, Predicate, SubsetView};

/// Hyperparameters shared by the logistic-regression and linear-SVM
/// trainers.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerParams {
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub regularization: f64,
    pub max_epochs: usize,
    pub grad_tolerance: f64,
}

impl Default for TrainerParams {
    fn default() -> Self {
        TrainerParams {
            learning_rate: 0.5,
            lr_decay: 0.01,
            regularization: 1e-4,
            max_epochs: 1000,
            grad_tolerance: 1e-6,
        }
    }
}

impl TrainerParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs < 1 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if self.regularization < 0.0 {
            return Err(Error::Config("regularization must be non-negative".into()));
        }
        // positive-only checks reject NaN too
        let positive = |v: f64| v.partial_cmp(&0.0) == Some(std::cmp::Ordering::Greater);
        if !positive(self.learning_rate) || !positive(self.grad_tolerance) || self.lr_decay < 0.0 {
            return Err(Error::Config("invalid trainer hyperparameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainerKind {
    LogReg(TrainerParams),
    LinSvm(TrainerParams),
}

impl TrainerKind {
    fn params(&self) -> &TrainerParams {
        match self {
            TrainerKind::LogReg(p) | TrainerKind::LinSvm(p) => p,
        }
    }
}

/// Oblique hill-climbing parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Oc1Params {
    /// Independent restarts; restart 0 is seeded from the axis optimum.
    pub restarts: usize,
    /// Random coefficient jumps taken per restart when a sweep stagnates.
    pub jumps: usize,
    /// Maximum coefficient-perturbation sweeps per restart.
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for Oc1Params {
    fn default() -> Self {
        Oc1Params {
            restarts: 10,
            jumps: 5,
            max_sweeps: 20,
            seed: 0,
        }
    }
}

impl Oc1Params {
    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 || self.max_sweeps < 1 {
            return Err(Error::Config(
                "oc1 requires at least 1 restart and 1 sweep".into(),
            ));
        }
        Ok(())
    }
}

/// Maps each row's label to its rank among the sorted distinct labels of the
/// view. Ascending rank order matches ascending label order, which keeps
/// count-vector entropy sums bit-identical to `split_score`.
fn dense_labels(labels: &[Label]) -> (Vec<usize>, usize) {
    let mut uniq: Vec<Label> = labels.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    let dense = labels
        .iter()
        .map(|l| uniq.binary_search(l).expect("label present"))
        .collect();
    (dense, uniq.len())
}

fn cmp_candidate(a: &(f64, usize, f64), b: &(f64, usize, f64)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.cmp(&b.1))
        .then(a.2.total_cmp(&b.2))
}

/// Exhaustive axis-aligned search: for every feature, every midpoint between
/// consecutive distinct values is a candidate. Returns the best predicate
/// and its score; ties break to the lowest (feature, threshold).
pub fn best_axis_split(
    view: &SubsetView<'_>,
    labels: &[Label],
    agg: Aggregation,
) -> Option<(Predicate, f64)> {
    let n = view.len();
    if n < 2 {
        return None;
    }
    let (dense, l_count) = dense_labels(labels);
    let d = view.table().state_dim();
    let best = (0..d)
        .into_par_iter()
        .filter_map(|f| axis_sweep_feature(view, &dense, l_count, f, agg))
        .min_by(cmp_candidate)?;
    let (score, feature, threshold) = best;
    Some((Predicate::axis(feature, threshold), score))
}

fn axis_sweep_feature(
    view: &SubsetView<'_>,
    dense: &[usize],
    l_count: usize,
    feature: usize,
    agg: Aggregation,
) -> Option<(f64, usize, f64)> {
    let n = view.len();
    let mut order: Vec<(f64, usize)> = (0..n).map(|i| (view.state(i)[feature], dense[i])).collect();
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    let mut left = vec![0usize; l_count];
    let mut right = vec![0usize; l_count];
    for &(_, l) in &order {
        right[l] += 1;
    }
    let mut left_total = 0usize;
    let mut right_total = n;

    let mut best: Option<(f64, usize, f64)> = None;
    let mut i = 0;
    while i < n {
        let v = order[i].0;
        while i < n && order[i].0 == v {
            left[order[i].1] += 1;
            right[order[i].1] -= 1;
            left_total += 1;
            right_total -= 1;
            i += 1;
        }
        if i == n {
            break; // last distinct value: no candidate after it
        }
        let next = order[i].0;
        let mut threshold = (v + next) / 2.0;
        if threshold >= next {
            // midpoint of adjacent floats rounded up; fall back to the left
            // value so the predicate matches the counted partition
            threshold = v;
        }
        let score = score_from_counts(&left, left_total, &right, right_total, agg);
        if best.is_none_or(|b| score < b.0) {
            best = Some((score, feature, threshold));
        }
    }
    best
}

fn halfspace_of(v: &[f64], d: usize) -> Predicate {
    Predicate::halfspace(v[..d].to_vec(), -v[d])
}

/// OC1-style oblique split. Hill-climbs one coefficient at a time (bias
/// included as coefficient `d`) by solving the induced 1-D threshold problem,
/// takes random jumps on stagnation, and runs `params.restarts` restarts.
/// Restart 0 starts from the axis optimum and final candidates are re-scored
/// exactly, so the result never scores worse than `best_axis_split`.
///
/// The wall-clock `deadline` is checked between sweeps so a large node
/// cannot overshoot a short budget by a whole restart schedule.
pub fn oc1_split(
    view: &SubsetView<'_>,
    labels: &[Label],
    params: &Oc1Params,
    agg: Aggregation,
    tolerance: f64,
    deadline: Option<Instant>,
) -> Result<Option<(Predicate, f64)>> {
    let Some((axis_pred, axis_score)) = best_axis_split(view, labels, agg) else {
        return Ok(None);
    };
    let d = view.table().state_dim();
    let n = view.len();
    let (dense, l_count) = dense_labels(labels);

    // augmented samples (x, 1); a coefficient vector v encodes v·x̃ <= 0
    let width = d + 1;
    let mut xs = vec![0.0f64; n * width];
    for i in 0..n {
        xs[i * width..i * width + d].copy_from_slice(view.state(i));
        xs[i * width + d] = 1.0;
    }
    let axis_v: Vec<f64> = {
        let Predicate::AxisAligned { feature, threshold } = &axis_pred else {
            unreachable!()
        };
        let mut v = vec![0.0; width];
        v[*feature] = 1.0;
        v[d] = -threshold;
        v
    };

    let climb = |restart: usize| -> Result<(f64, usize, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(
            params.seed ^ (restart as u64).wrapping_mul(0xD1B5_4A32_D192_ED03),
        ));
        let mut v = if restart == 0 {
            axis_v.clone()
        } else {
            let mut v: Vec<f64> = (0..width).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if v.iter().all(|c| c.abs() < 1e-9) {
                v[0] = 1.0;
            }
            v
        };
        let mut s: Vec<f64> = (0..n)
            .map(|i| {
                let row = &xs[i * width..(i + 1) * width];
                row.iter().zip(&v).map(|(x, c)| x * c).sum()
            })
            .collect();
        let mut current = estimate_from_signs(&s, &dense, l_count, agg);
        let mut best_v = v.clone();
        let mut best_est = current;
        let mut jumps_left = params.jumps;

        let mut left = vec![0usize; l_count];
        let mut right = vec![0usize; l_count];
        for _sweep in 0..params.max_sweeps {
            if let Some(dl) = deadline {
                if Instant::now() >= dl {
                    return Err(Error::Timeout);
                }
            }
            let mut improved = false;
            for j in 0..width {
                if let Some((a, est)) =
                    coefficient_sweep(&xs, &s, &v, j, width, &dense, &mut left, &mut right, agg)
                {
                    if est < current - tolerance {
                        let delta = a - v[j];
                        for i in 0..n {
                            s[i] += delta * xs[i * width + j];
                        }
                        v[j] = a;
                        current = est;
                        improved = true;
                        if current < best_est {
                            best_est = current;
                            best_v.copy_from_slice(&v);
                        }
                    }
                }
            }
            if !improved {
                if jumps_left == 0 {
                    break;
                }
                jumps_left -= 1;
                let j = rng.gen_range(0..width);
                let delta = rng.gen_range(-1.0f64..1.0) * (1.0 + v[j].abs());
                v[j] += delta;
                for i in 0..n {
                    s[i] += delta * xs[i * width + j];
                }
                current = estimate_from_signs(&s, &dense, l_count, agg);
            }
        }
        // exact score of the best vector seen in this restart
        let pred = halfspace_of(&best_v, d);
        let exact = split_score(view, labels, &pred, agg);
        Ok((exact, restart, best_v))
    };

    let restarts: Result<Vec<(f64, usize, Vec<f64>)>> =
        (0..params.restarts).into_par_iter().map(climb).collect();
    let best_restart = restarts?
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    Ok(match best_restart {
        Some((score, _, v)) if score <= axis_score => Some((halfspace_of(&v, d), score)),
        // hill-climbing failed to reach the axis optimum; fall back to it
        _ => {
            let Predicate::AxisAligned { feature, threshold } = axis_pred else {
                unreachable!()
            };
            let mut v = vec![0.0; width];
            v[feature] = 1.0;
            v[d] = -threshold;
            Some((halfspace_of(&v, d), axis_score))
        }
    })
}

fn estimate_from_signs(s: &[f64], dense: &[usize], l_count: usize, agg: Aggregation) -> f64 {
    let mut left = vec![0usize; l_count];
    let mut right = vec![0usize; l_count];
    let mut lt = 0usize;
    let mut rt = 0usize;
    for (i, &si) in s.iter().enumerate() {
        if si <= 0.0 {
            left[dense[i]] += 1;
            lt += 1;
        } else {
            right[dense[i]] += 1;
            rt += 1;
        }
    }
    score_from_counts(&left, lt, &right, rt, agg)
}

/// Best value for coefficient `j` with all others fixed, by sweeping the
/// per-sample flip points `U_i = v_j - s_i / x_ij` (samples with `x_ij = 0`
/// never change side). Returns the best `(value, estimated score)`.
#[allow(clippy::too_many_arguments)]
fn coefficient_sweep(
    xs: &[f64],
    s: &[f64],
    v: &[f64],
    j: usize,
    width: usize,
    dense: &[usize],
    left: &mut [usize],
    right: &mut [usize],
    agg: Aggregation,
) -> Option<(f64, f64)> {
    let n = s.len();
    left.fill(0);
    right.fill(0);
    let mut lt = 0usize;
    let mut rt = 0usize;
    // movable samples: (flip point U, label, x_ij > 0)
    let mut movable: Vec<(f64, usize, bool)> = Vec::new();
    for i in 0..n {
        let xij = xs[i * width + j];
        let u = if xij == 0.0 {
            f64::NAN
        } else {
            v[j] - s[i] / xij
        };
        if xij == 0.0 || !u.is_finite() {
            // fixed on its current side
            if s[i] <= 0.0 {
                left[dense[i]] += 1;
                lt += 1;
            } else {
                right[dense[i]] += 1;
                rt += 1;
            }
        } else {
            movable.push((u, dense[i], xij > 0.0));
        }
    }
    if movable.is_empty() {
        return None;
    }
    movable.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    // at a = -inf: positive-x samples are on the true side
    for &(_, l, pos) in &movable {
        if pos {
            left[l] += 1;
            lt += 1;
        } else {
            right[l] += 1;
            rt += 1;
        }
    }

    let mut best: Option<(f64, f64)> = None;
    let consider = |value: f64, score: f64, best: &mut Option<(f64, f64)>| {
        if best.is_none_or(|b| score < b.1) {
            *best = Some((value, score));
        }
    };

    let first = movable[0].0;
    consider(
        first - 1.0,
        score_from_counts(left, lt, right, rt, agg),
        &mut best,
    );
    let mut i = 0;
    while i < movable.len() {
        let u = movable[i].0;
        while i < movable.len() && movable[i].0 == u {
            let (_, l, pos) = movable[i];
            if pos {
                // true -> false once a exceeds U
                left[l] -= 1;
                lt -= 1;
                right[l] += 1;
                rt += 1;
            } else {
                right[l] -= 1;
                rt -= 1;
                left[l] += 1;
                lt += 1;
            }
            i += 1;
        }
        let candidate = if i < movable.len() {
            (u + movable[i].0) / 2.0
        } else {
            u + 1.0
        };
        consider(
            candidate,
            score_from_counts(left, lt, right, rt, agg),
            &mut best,
        );
    }
    best
}

/// Trains a binary linear classifier separating `positives` from
/// `negatives` and returns the raw-space halfspace whose true side is the
/// positive class. Features are standardized internally; the
/// standardization is folded back into the returned weights and bias.
pub fn train_linear_classifier(
    kind: &TrainerKind,
    positives: &SubsetView<'_>,
    negatives: &SubsetView<'_>,
    _seed: u64,
) -> Result<Predicate> {
    debug_assert!(!positives.is_empty() && !negatives.is_empty());
    let d = positives.table().state_dim();
    let np = positives.len();
    let n = np + negatives.len();

    let point = |i: usize| -> &[f64] {
        if i < np {
            positives.state(i)
        } else {
            negatives.state(i - np)
        }
    };
    let y = |i: usize| -> f64 {
        if i < np {
            1.0
        } else {
            -1.0
        }
    };

    // population mean / std per feature; constant features are dropped
    let mut mean = vec![0.0f64; d];
    for i in 0..n {
        for (f, v) in point(i).iter().enumerate() {
            mean[f] += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut var = vec![0.0f64; d];
    for i in 0..n {
        for (f, v) in point(i).iter().enumerate() {
            let e = v - mean[f];
            var[f] += e * e;
        }
    }
    let std: Vec<f64> = var.iter().map(|v| (v / n as f64).sqrt()).collect();
    let active: Vec<usize> = (0..d).filter(|&f| std[f] > 0.0 && std[f].is_finite()).collect();
    if active.is_empty() {
        return Err(Error::TrainingDegenerate);
    }
    let k = active.len();

    // standardized design matrix
    let mut zs = vec![0.0f64; n * k];
    for i in 0..n {
        let x = point(i);
        for (c, &f) in active.iter().enumerate() {
            zs[i * k + c] = (x[f] - mean[f]) / std[f];
        }
    }

    let params = kind.params();
    let (w, b) = match kind {
        TrainerKind::LogReg(_) => logreg_fit(&zs, n, k, &y_vec(n, &y), params),
        TrainerKind::LinSvm(_) => svm_fit(&zs, n, k, &y_vec(n, &y), params),
    };

    // fold standardization back: positive side  <=>  w·z + b >= 0
    let mut weights = vec![0.0f64; d];
    let mut bias = b;
    for (c, &f) in active.iter().enumerate() {
        weights[f] = -w[c] / std[f];
        bias -= w[c] * mean[f] / std[f];
    }
    Ok(Predicate::halfspace(weights, bias))
}

fn y_vec(n: usize, y: &dyn Fn(usize) -> f64) -> Vec<f64> {
    (0..n).map(y).collect()
}

fn sigmoid(s: f64) -> f64 {
    1.0 / (1.0 + (-s.clamp(-40.0, 40.0)).exp())
}

/// Batch gradient descent on L2-regularized logistic loss (bias
/// unregularized). Stops when the gradient norm drops below
/// `grad_tolerance`.
fn logreg_fit(zs: &[f64], n: usize, k: usize, y: &[f64], p: &TrainerParams) -> (Vec<f64>, f64) {
    let mut w = vec![0.0f64; k];
    let mut b = 0.0f64;
    let inv_n = 1.0 / n as f64;
    let mut grad = vec![0.0f64; k];
    for t in 1..=p.max_epochs {
        for (g, wi) in grad.iter_mut().zip(&w) {
            *g = p.regularization * wi;
        }
        let mut gb = 0.0;
        for i in 0..n {
            let row = &zs[i * k..(i + 1) * k];
            let mut s = b;
            for (zi, wi) in row.iter().zip(&w) {
                s += zi * wi;
            }
            let target = if y[i] > 0.0 { 1.0 } else { 0.0 };
            let e = (sigmoid(s) - target) * inv_n;
            for (g, zi) in grad.iter_mut().zip(row) {
                *g += e * zi;
            }
            gb += e;
        }
        let gnorm = (grad.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
        if gnorm < p.grad_tolerance {
            break;
        }
        let lr = p.learning_rate / (1.0 + p.lr_decay * t as f64);
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= lr * g;
        }
        b -= lr * gb;
    }
    (w, b)
}

/// Batch Pegasos-style subgradient descent on the hinge loss, bias folded in
/// as an always-one feature, with the usual 1/√λ-ball projection.
fn svm_fit(zs: &[f64], n: usize, k: usize, y: &[f64], p: &TrainerParams) -> (Vec<f64>, f64) {
    let lambda = p.regularization.max(1e-12);
    let mut w = vec![0.0f64; k + 1]; // last entry is the bias weight
    let inv_n = 1.0 / n as f64;
    let radius = 1.0 / lambda.sqrt();
    let mut prev = w.clone();
    for t in 1..=p.max_epochs {
        let eta = 1.0 / (lambda * t as f64);
        let shrink = 1.0 - eta * lambda; // = 1 - 1/t
        let mut push = vec![0.0f64; k + 1];
        for i in 0..n {
            let row = &zs[i * k..(i + 1) * k];
            let mut s = w[k];
            for (zi, wi) in row.iter().zip(&w[..k]) {
                s += zi * wi;
            }
            if y[i] * s < 1.0 {
                for (pj, zi) in push.iter_mut().zip(row) {
                    *pj += y[i] * zi;
                }
                push[k] += y[i];
            }
        }
        for j in 0..=k {
            w[j] = shrink * w[j] + eta * inv_n * push[j];
        }
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > radius {
            let scale = radius / norm;
            for v in w.iter_mut() {
                *v *= scale;
            }
        }
        let delta = w
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if t > 1 && delta < 1e-12 * (1.0 + w.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            break;
        }
        prev.copy_from_slice(&w);
    }
    (w[..k].to_vec(), w[k])
}

/// One-vs-rest linear-classifier split: trains one classifier per label
/// present in the view and returns the halfspace with the best score.
/// Ties break to the lowest label; returns `Ok(None)` when no trained
/// halfspace splits the view. The `deadline` is checked before each
/// per-label fit.
pub fn lc_split(
    view: &SubsetView<'_>,
    labels: &[Label],
    kind: &TrainerKind,
    agg: Aggregation,
    seed: u64,
    deadline: Option<Instant>,
) -> Result<Option<(Predicate, f64)>> {
    let mut uniq: Vec<Label> = labels.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    if uniq.len() < 2 {
        return Ok(None);
    }
    let table = view.table();
    let candidates: Result<Vec<Option<(f64, usize, Predicate)>>> = uniq
        .par_iter()
        .enumerate()
        .map(|(rank, &u)| {
            if let Some(dl) = deadline {
                if Instant::now() >= dl {
                    return Err(Error::Timeout);
                }
            }
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for (i, &row) in view.rows().iter().enumerate() {
                if labels[i] == u {
                    pos.push(row);
                } else {
                    neg.push(row);
                }
            }
            let pos_view = SubsetView::from_rows(table, pos);
            let neg_view = SubsetView::from_rows(table, neg);
            let Ok(pred) = train_linear_classifier(
                kind,
                &pos_view,
                &neg_view,
                splitmix64(seed ^ rank as u64),
            ) else {
                return Ok(None);
            };
            let score = split_score(view, labels, &pred, agg);
            Ok(if score.is_finite() {
                Some((score, rank, pred))
            } else {
                None
            })
        })
        .collect();
    let best = candidates?
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(best.map(|(score, _, pred)| (pred, score)))
}
