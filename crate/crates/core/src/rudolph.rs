//! The exact two-layer threshold net computing `B ↦ B″`, and the affine
//! least-squares fit showing that no affine map does the same.

use log::warn;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bitset::{AttrSet, BitSet, ObjSet};
use crate::context::FormalContext;
use crate::error::{Error, Result};
use crate::nn::{self, Activation, DenseNet, Init, Layer, Loss, LrSchedule, TrainConfig};
use crate::par::Execution;

/// Largest attribute count verified exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 20;
/// Largest attribute count accepted by [`best_affine_fit_residual`].
pub const AFFINE_FIT_LIMIT: usize = 12;

/// `|G|×|M|` matrix with `w[g][m] = 0` if `(g, m) ∈ I`, else `-1`. The
/// hidden layer thresholds `W·b` and computes `B′`; the output layer
/// thresholds `Wᵀ·a` and computes `A′`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureNet {
    n_objects: usize,
    n_attributes: usize,
    weights: Vec<i32>,
}

#[inline]
fn threshold(x: i32) -> bool {
    x == 0
}

impl ClosureNet {
    pub fn build(ctx: &FormalContext) -> Self {
        let (g, m) = (ctx.n_objects(), ctx.n_attributes());
        let mut weights = vec![-1; g * m];
        for (j, row) in ctx.rows().iter().enumerate() {
            for h in row.iter() {
                weights[j * m + h] = 0;
            }
        }
        ClosureNet {
            n_objects: g,
            n_attributes: m,
            weights,
        }
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    pub fn weight(&self, g: usize, m: usize) -> i32 {
        self.weights[g * self.n_attributes + m]
    }

    /// Toggles one weight between `0` and `-1`.
    pub fn flip_weight(&mut self, g: usize, m: usize) {
        let w = &mut self.weights[g * self.n_attributes + m];
        *w = -1 - *w;
    }

    pub fn hidden(&self, b: &AttrSet) -> Result<ObjSet> {
        if b.width() != self.n_attributes {
            return Err(Error::Dimension {
                expected: self.n_attributes,
                found: b.width(),
            });
        }
        Ok(self.hidden_unchecked(b))
    }

    fn hidden_unchecked(&self, b: &AttrSet) -> ObjSet {
        let mut out = BitSet::empty(self.n_objects);
        for j in 0..self.n_objects {
            let row = &self.weights[j * self.n_attributes..(j + 1) * self.n_attributes];
            let z: i32 = b.iter().map(|h| row[h]).sum();
            if threshold(z) {
                out.insert(j);
            }
        }
        out
    }

    fn output_unchecked(&self, a: &ObjSet) -> AttrSet {
        let mut out = BitSet::empty(self.n_attributes);
        for h in 0..self.n_attributes {
            let z: i32 = a
                .iter()
                .map(|j| self.weights[j * self.n_attributes + h])
                .sum();
            if threshold(z) {
                out.insert(h);
            }
        }
        out
    }

    pub fn forward(&self, b: &AttrSet) -> Result<AttrSet> {
        let a = self.hidden(b)?;
        Ok(self.output_unchecked(&a))
    }

    /// The same net as a frozen [`DenseNet`] with threshold activations.
    pub fn to_dense(&self) -> DenseNet {
        let (g, m) = (self.n_objects, self.n_attributes);
        let mut hidden = Layer::zeros(m, g, false, Activation::Threshold01);
        let mut output = Layer::zeros(g, m, false, Activation::Threshold01);
        for j in 0..g {
            for h in 0..m {
                let w = self.weight(j, h) as f64;
                hidden.weights[j * m + h] = w;
                output.weights[h * g + j] = w;
            }
        }
        DenseNet::new(vec![hidden, output]).expect("shapes chain")
    }
}

/// Result of checking a [`ClosureNet`] against the context's closure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub tested: usize,
    pub exhaustive: bool,
    /// First failing input in enumeration order, if any.
    pub counterexample: Option<AttrSet>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

fn check_one(ctx: &FormalContext, net: &ClosureNet, b: &AttrSet) -> bool {
    let a = net.hidden_unchecked(b);
    a == ctx.derive_objs_unchecked(b) && net.output_unchecked(&a) == ctx.closure_attrs_unchecked(b)
}

/// Checks `forward(B) = B″` and `hidden(B) = B′`: every `B ⊆ M` when
/// `|M| ≤ 20`, otherwise `samples` uniformly random sets.
pub fn verify_closure_net(
    ctx: &FormalContext,
    net: &ClosureNet,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<Verification> {
    let m = ctx.n_attributes();
    if net.n_attributes != m || net.n_objects != ctx.n_objects() {
        return Err(Error::Dimension {
            expected: m,
            found: net.n_attributes,
        });
    }
    if m <= EXHAUSTIVE_LIMIT {
        let total = 1usize << m;
        let failures = exec.map_chunks(total, 4096, |range| {
            range
                .map(|mask| BitSet::from_mask(m, mask as u64))
                .find(|b| !check_one(ctx, net, b))
        });
        Ok(Verification {
            tested: total,
            exhaustive: true,
            counterexample: failures.into_iter().flatten().next(),
        })
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<AttrSet> = (0..samples)
            .map(|_| BitSet::from_bools(&(0..m).map(|_| rng.random_bool(0.5)).collect::<Vec<_>>()))
            .collect();
        let ok = exec.map(&inputs, |b| check_one(ctx, net, b));
        Ok(Verification {
            tested: samples,
            exhaustive: false,
            counterexample: ok.iter().position(|v| !v).map(|i| inputs[i].clone()),
        })
    }
}

/// Least-squares affine map from `[1 v(B)]` to `v(B″)` over all `B ⊆ M`;
/// returns the largest absolute residual. Zero iff the closure is affine on
/// the encodings.
pub fn best_affine_fit_residual(ctx: &FormalContext) -> Result<f64> {
    const RIDGE: f64 = 1e-10;
    let m = ctx.n_attributes();
    if m > AFFINE_FIT_LIMIT {
        return Err(Error::InvalidInput(format!(
            "affine fit enumerates all attribute sets; |M| = {m} exceeds {AFFINE_FIT_LIMIT}"
        )));
    }
    let n = 1usize << m;
    let x = DMatrix::from_fn(n, m + 1, |r, c| {
        if c == 0 {
            1.0
        } else {
            ((r >> (c - 1)) & 1) as f64
        }
    });
    let closures: Vec<AttrSet> = (0..n)
        .map(|r| ctx.closure_attrs_unchecked(&BitSet::from_mask(m, r as u64)))
        .collect();
    let y = DMatrix::from_fn(n, m, |r, c| if closures[r].contains(c) { 1.0 } else { 0.0 });
    let xt = x.transpose();
    let gram = &xt * &x + DMatrix::identity(m + 1, m + 1) * RIDGE;
    let rhs = &xt * &y;
    let w = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("normal equations are not positive definite".into()))?
        .solve(&rhs);
    let residual = &x * w - y;
    Ok(residual.amax())
}

/// Outcome of fitting a linear net to the attribute derivation.
#[derive(Clone, Debug, Serialize)]
pub struct LinearDiagnostic {
    pub train_sets: usize,
    pub test_sets: usize,
    pub train_mse: f64,
    pub test_mse: f64,
    /// Fraction of sets whose rounded output equals `B′` exactly.
    pub train_exact: f64,
    pub test_exact: f64,
}

/// Trains a linear net `|M| → |G|` (no activation) on `B ↦ B′` for all sets
/// of size ≤ `t` and tests on a sample of larger sets.
pub fn linear_derivation_diagnostic(
    ctx: &FormalContext,
    t: usize,
    test_samples: usize,
    epochs: usize,
    seed: u64,
) -> Result<LinearDiagnostic> {
    let (g, m) = (ctx.n_objects(), ctx.n_attributes());
    let t = t.min(m);
    let train_sets = crate::closure2vec::subsets_up_to(m, t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let test_sets: Vec<AttrSet> = (0..test_samples)
        .filter_map(|_| {
            let b = BitSet::from_bools(&(0..m).map(|_| rng.random_bool(0.5)).collect::<Vec<_>>());
            (b.len() > t).then_some(b)
        })
        .collect();
    let example = |b: &AttrSet| (b.to_f64(), ctx.derive_objs_unchecked(b).to_f64());
    let train: Vec<_> = train_sets.iter().map(example).collect();
    let test: Vec<_> = test_sets.iter().map(example).collect();

    let mut net = DenseNet::new(vec![Layer::random(
        m,
        g,
        true,
        Activation::Identity,
        Init::Glorot,
        &mut rng,
    )])?;
    let cfg = TrainConfig {
        epochs,
        lr0: 0.05,
        lr_schedule: LrSchedule::LinearDecayToZero,
        batch_size: 16,
        loss: Loss::Mse,
        seed,
        shuffle: true,
    };
    nn::train(&mut net, &train, &cfg)?;
    let score = |data: &[(Vec<f64>, Vec<f64>)]| -> Result<(f64, f64)> {
        if data.is_empty() {
            return Ok((0.0, 0.0));
        }
        let mut mse = 0.0;
        let mut exact = 0usize;
        for (x, y) in data {
            let out = net.forward(x)?;
            mse += nn::loss_value(Loss::Mse, &out, y);
            if out.iter().zip(y).all(|(o, t)| (o.round() - t).abs() < 0.5) {
                exact += 1;
            }
        }
        Ok((mse / data.len() as f64, exact as f64 / data.len() as f64))
    };
    let (train_mse, train_exact) = score(&train)?;
    let (test_mse, test_exact) = score(&test)?;
    if test.is_empty() {
        warn!("no test sets larger than {t} were drawn");
    }
    Ok(LinearDiagnostic {
        train_sets: train.len(),
        test_sets: test.len(),
        train_mse,
        test_mse,
        train_exact,
        test_exact,
    })
}
