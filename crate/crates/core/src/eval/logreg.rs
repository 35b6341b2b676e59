//! L2-regularised logistic regression with a cross-validated choice of `C`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::sigmoid;

/// `{1e-3, 1e-2, 1e-1, 1, 1e1, 1e2}`.
pub const C_GRID: [f64; 6] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2];
pub const CV_FOLDS: usize = 5;
pub const THRESHOLD: f64 = 0.5;

const MAX_ITER: usize = 2000;
const GRAD_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
}

impl LogisticRegression {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.bias + x.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>())
    }

    /// Positive iff `p > 0.5`.
    pub fn predict(&self, x: &[f64]) -> bool {
        self.predict_proba(x) > THRESHOLD
    }
}

fn check(x: &[Vec<f64>], y: &[bool]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::InvalidInput("no training rows".into()));
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::InvalidInput("labels contain a single class".into()));
    }
    let d = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != d) {
        return Err(Error::Dimension {
            expected: d,
            found: r.len(),
        });
    }
    Ok(d)
}

/// Objective `C·Σ logloss + ½‖w‖²` (bias unpenalised) and its gradient.
fn objective(x: &[Vec<f64>], y: &[bool], c: f64, theta: &[f64]) -> (f64, Vec<f64>) {
    let d = theta.len() - 1;
    let mut f = 0.0;
    let mut g = vec![0.0; d + 1];
    for (row, &label) in x.iter().zip(y) {
        let z = theta[d] + row.iter().zip(theta).map(|(a, w)| a * w).sum::<f64>();
        let t = if label { 1.0 } else { 0.0 };
        // log(1 + e^z) - t z, computed stably
        f += c * (z.max(0.0) + (-z.abs()).exp().ln_1p() - t * z);
        let r = c * (sigmoid(z) - t);
        for (gi, a) in g.iter_mut().zip(row) {
            *gi += r * a;
        }
        g[d] += r;
    }
    for i in 0..d {
        f += 0.5 * theta[i] * theta[i];
        g[i] += theta[i];
    }
    (f, g)
}

/// Gradient descent with Armijo backtracking.
pub fn fit(x: &[Vec<f64>], y: &[bool], c: f64) -> Result<LogisticRegression> {
    let d = check(x, y)?;
    if !(c > 0.0) {
        return Err(Error::Config(format!("C must be positive, got {c}")));
    }
    let mut theta = vec![0.0; d + 1];
    let (mut f, mut g) = objective(x, y, c, &theta);
    let mut step = 1.0;
    for _ in 0..MAX_ITER {
        let gg: f64 = g.iter().map(|v| v * v).sum();
        if gg.sqrt() < GRAD_TOL * (1.0 + f.abs()) {
            break;
        }
        step *= 2.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(&g).map(|(t, gi)| t - step * gi).collect();
            let (fc, gc) = objective(x, y, c, &cand);
            if fc <= f - 1e-4 * step * gg {
                theta = cand;
                f = fc;
                g = gc;
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                break;
            }
        }
        if step < 1e-20 {
            break;
        }
    }
    Ok(LogisticRegression {
        bias: theta[d],
        weights: theta[..d].to_vec(),
        c,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub accuracy: f64,
}

impl BinaryMetrics {
    /// Precision is 0 when nothing is predicted positive.
    pub fn compute(predicted: &[bool], truth: &[bool]) -> Self {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fneg = 0usize;
        let mut correct = 0usize;
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p, t) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                _ => {}
            }
            if p == t {
                correct += 1;
            }
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fneg);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        BinaryMetrics {
            recall,
            precision,
            f1,
            accuracy: ratio(correct, truth.len()),
        }
    }

    pub fn evaluate(model: &LogisticRegression, x: &[Vec<f64>], y: &[bool]) -> Self {
        let pred: Vec<bool> = x.iter().map(|r| model.predict(r)).collect();
        Self::compute(&pred, y)
    }
}

/// Fold index per row; each class is dealt round-robin after a seeded
/// shuffle, so folds are stratified.
pub fn stratified_folds(y: &[bool], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; y.len()];
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        for (j, i) in idx.into_iter().enumerate() {
            folds[i] = j % k;
        }
    }
    folds
}

/// Mean F1 over the `k` folds for one `C`.
pub fn cross_validated_f1(x: &[Vec<f64>], y: &[bool], c: f64, k: usize, seed: u64) -> Result<f64> {
    let folds = stratified_folds(y, k, seed);
    let mut total = 0.0;
    for f in 0..k {
        let pick = |test: bool| -> (Vec<Vec<f64>>, Vec<bool>) {
            (0..y.len())
                .filter(|&i| (folds[i] == f) == test)
                .map(|i| (x[i].clone(), y[i]))
                .unzip()
        };
        let (xtr, ytr) = pick(false);
        let (xte, yte) = pick(true);
        let model = fit(&xtr, &ytr, c)?;
        total += BinaryMetrics::evaluate(&model, &xte, &yte).f1;
    }
    Ok(total / k as f64)
}

/// Picks `C` from `grid` by cross-validated F1 (first best on ties) and
/// refits on all rows.
pub fn fit_cv(x: &[Vec<f64>], y: &[bool], grid: &[f64], seed: u64) -> Result<LogisticRegression> {
    check(x, y)?;
    if grid.is_empty() {
        return Err(Error::Config("empty C grid".into()));
    }
    let minority = y
        .iter()
        .filter(|&&v| v)
        .count()
        .min(y.iter().filter(|&&v| !v).count());
    let k = CV_FOLDS.min(minority);
    let best_c = if k < 2 {
        1.0
    } else {
        let mut best = (f64::NEG_INFINITY, grid[0]);
        for &c in grid {
            let s = cross_validated_f1(x, y, c, k, seed)?;
            if s > best.0 {
                best = (s, c);
            }
        }
        best.1
    };
    fit(x, y, best_c)
}
