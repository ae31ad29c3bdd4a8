//! Comparison baselines: fuzzy membership functions and a small sigmoid
//! multilayer perceptron trained with the delta rule.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::case::{FeatureVector, Target, NUM_ATTRIBUTES};
use crate::error::{Error, Result};

/// Triangle with feet at `a` and `b` and peak at `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularParams {
    a: f64,
    m: f64,
    b: f64,
}

impl TriangularParams {
    pub fn new(a: f64, m: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && m.is_finite() && b.is_finite()) || !(a < m && m < b) {
            return Err(Error::InvalidParams(format!(
                "triangular membership needs a < m < b, got a={a} m={m} b={b}"
            )));
        }
        Ok(Self { a, m, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

pub fn triangular_membership(x: f64, p: &TriangularParams) -> f64 {
    let TriangularParams { a, m, b } = *p;
    if x <= a || x >= b {
        0.0
    } else if x <= m {
        (x - a) / (m - a)
    } else {
        (b - x) / (b - m)
    }
}

/// Trapezoid with feet `a`, `d` and plateau `[b, c]`. Either slope may be
/// vertical (`a == b` or `c == d`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidalParams {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl TrapezoidalParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let finite = [a, b, c, d].iter().all(|v| v.is_finite());
        if !finite || !(a <= b && b <= c && c <= d && a < d) {
            return Err(Error::InvalidParams(format!(
                "trapezoidal membership needs a <= b <= c <= d and a < d, got {a}, {b}, {c}, {d}"
            )));
        }
        Ok(Self { a, b, c, d })
    }
}

pub fn trapezoidal_membership(x: f64, p: &TrapezoidalParams) -> f64 {
    let TrapezoidalParams { a, b, c, d } = *p;
    if x < a || x > d {
        0.0
    } else if (b..=c).contains(&x) {
        1.0
    } else if x < b {
        (x - a) / (b - a)
    } else {
        (d - x) / (d - c)
    }
}

pub fn sigmoid(y: f64) -> f64 {
    1.0 / (1.0 + (-y).exp())
}

/// Error term of an output unit: `o (1 - o) (t - o)`.
pub fn output_delta(o: f64, t: f64) -> f64 {
    o * (1.0 - o) * (t - o)
}

/// Error term of a hidden unit from `(weight to k, delta of k)` pairs of the
/// units it feeds.
pub fn hidden_delta(o: f64, downstream: &[(f64, f64)]) -> f64 {
    o * (1.0 - o) * downstream.iter().map(|(w, d)| w * d).sum::<f64>()
}

/// Layer activations from one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

/// Error terms for every non-input unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Deltas {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

/// Largest magnitude of an initial weight.
pub const INIT_WEIGHT_SCALE: f64 = 0.05;

pub const HIDDEN_UNITS: usize = 3;
pub const OUTPUT_UNITS: usize = 2;

/// One-hidden-layer sigmoid network. Each layer gets a constant-1 bias input,
/// stored as the last column of its weight matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layer_sizes: [usize; 3],
    /// `hidden x (inputs + 1)`
    w_hidden: Vec<Vec<f64>>,
    /// `outputs x (hidden + 1)`
    w_out: Vec<Vec<f64>>,
    eta: f64,
    seed: u64,
}

impl Mlp {
    /// Random weights uniform in `[-0.05, 0.05]` drawn from `seed`.
    pub fn new(inputs: usize, hidden: usize, outputs: usize, eta: f64, seed: u64) -> Result<Self> {
        if inputs == 0 || hidden == 0 || outputs == 0 {
            return Err(Error::InvalidParams("layer sizes must be positive".into()));
        }
        check_eta(eta)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layer = |rows: usize, cols: usize| -> Vec<Vec<f64>> {
            (0..rows)
                .map(|_| {
                    (0..cols)
                        .map(|_| rng.random_range(-INIT_WEIGHT_SCALE..=INIT_WEIGHT_SCALE))
                        .collect()
                })
                .collect()
        };
        let w_hidden = layer(hidden, inputs + 1);
        let w_out = layer(outputs, hidden + 1);
        Ok(Self {
            layer_sizes: [inputs, hidden, outputs],
            w_hidden,
            w_out,
            eta,
            seed,
        })
    }

    /// The 13-3-2 heart-disease network.
    pub fn heart(eta: f64, seed: u64) -> Result<Self> {
        Self::new(NUM_ATTRIBUTES, HIDDEN_UNITS, OUTPUT_UNITS, eta, seed)
    }

    /// Network with explicit weights; bias weights are the last column.
    pub fn from_weights(w_hidden: Vec<Vec<f64>>, w_out: Vec<Vec<f64>>, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        let hidden = w_hidden.len();
        let inputs = w_hidden.first().map_or(0, |r| r.len().saturating_sub(1));
        let outputs = w_out.len();
        let m = Self {
            layer_sizes: [inputs, hidden, outputs],
            w_hidden,
            w_out,
            eta,
            seed: 0,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let [inputs, hidden, outputs] = self.layer_sizes;
        let shape_ok = inputs > 0
            && hidden > 0
            && outputs > 0
            && self.w_hidden.len() == hidden
            && self.w_hidden.iter().all(|r| r.len() == inputs + 1)
            && self.w_out.len() == outputs
            && self.w_out.iter().all(|r| r.len() == hidden + 1);
        if !shape_ok {
            return Err(Error::InvalidParams("weight matrix shapes do not match layer sizes".into()));
        }
        let finite = self
            .w_hidden
            .iter()
            .chain(&self.w_out)
            .flatten()
            .all(|w| w.is_finite());
        if !finite {
            return Err(Error::InvalidParams("weights must be finite".into()));
        }
        check_eta(self.eta)
    }

    pub fn layer_sizes(&self) -> [usize; 3] {
        self.layer_sizes
    }

    pub fn hidden_weights(&self) -> &[Vec<f64>] {
        &self.w_hidden
    }

    pub fn output_weights(&self) -> &[Vec<f64>] {
        &self.w_out
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn forward(&self, input: &[f64]) -> Result<Activations> {
        let [inputs, _, _] = self.layer_sizes;
        if input.len() != inputs {
            return Err(Error::LengthMismatch {
                left: input.len(),
                right: inputs,
            });
        }
        let hidden: Vec<f64> = self.w_hidden.iter().map(|w| sigmoid(dot_bias(w, input))).collect();
        let output = self.w_out.iter().map(|w| sigmoid(dot_bias(w, &hidden))).collect();
        Ok(Activations { hidden, output })
    }

    /// Output deltas first, then hidden deltas through the current output
    /// weights.
    pub fn deltas(&self, act: &Activations, target: &[f64]) -> Result<Deltas> {
        if target.len() != act.output.len() {
            return Err(Error::LengthMismatch {
                left: target.len(),
                right: act.output.len(),
            });
        }
        let output: Vec<f64> = act
            .output
            .iter()
            .zip(target)
            .map(|(&o, &t)| output_delta(o, t))
            .collect();
        let hidden = act
            .hidden
            .iter()
            .enumerate()
            .map(|(h, &o)| {
                let downstream: Vec<(f64, f64)> =
                    self.w_out.iter().zip(&output).map(|(w, &d)| (w[h], d)).collect();
                hidden_delta(o, &downstream)
            })
            .collect();
        Ok(Deltas { hidden, output })
    }

    /// `w_ji += eta * delta_j * x_ji` for every weight, where `x_ji` is the
    /// input to unit `j` from unit `i` (1 for the bias).
    pub fn update_weights(&mut self, deltas: &Deltas, input: &[f64], act: &Activations) {
        let eta = self.eta;
        for (row, &d) in self.w_out.iter_mut().zip(&deltas.output) {
            apply_increments(row, &act.hidden, eta * d);
        }
        for (row, &d) in self.w_hidden.iter_mut().zip(&deltas.hidden) {
            apply_increments(row, input, eta * d);
        }
    }

    /// One stochastic update. Returns the example's squared error before the
    /// update, `sum_k (t_k - o_k)^2`.
    pub fn train_step(&mut self, input: &[f64], target: &[f64]) -> Result<f64> {
        let act = self.forward(input)?;
        let deltas = self.deltas(&act, target)?;
        let err = squared_error(&act.output, target);
        self.update_weights(&deltas, input, &act);
        Ok(err)
    }

    /// Per-epoch passes over the examples in order; returns the mean squared
    /// error over all examples and outputs after each epoch.
    pub fn train(&mut self, inputs: &[Vec<f64>], targets: &[Vec<f64>], epochs: usize) -> Result<Vec<f64>> {
        if epochs == 0 {
            return Err(Error::InvalidParams("epochs must be at least 1".into()));
        }
        if inputs.is_empty() {
            return Err(Error::Empty("no training examples"));
        }
        if inputs.len() != targets.len() {
            return Err(Error::LengthMismatch {
                left: inputs.len(),
                right: targets.len(),
            });
        }
        let mut log = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            for (x, t) in inputs.iter().zip(targets) {
                self.train_step(x, t)?;
            }
            log.push(self.mse(inputs, targets)?);
        }
        Ok(log)
    }

    pub fn mse(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
        let mut total = 0.0;
        let mut count = 0usize;
        for (x, t) in inputs.iter().zip(targets) {
            let act = self.forward(x)?;
            total += squared_error(&act.output, t);
            count += t.len();
        }
        Ok(total / count as f64)
    }

    /// Index of the largest output, lowest index on ties.
    pub fn classify(&self, input: &[f64]) -> Result<usize> {
        let out = self.forward(input)?.output;
        Ok(out
            .iter()
            .enumerate()
            .fold(0, |best, (i, &o)| if o > out[best] { i } else { best }))
    }

    /// Class decision for a scaled patient vector.
    pub fn predict(&self, input: &FeatureVector) -> Result<Target> {
        Ok(if self.classify(input.as_slice())? == 1 {
            Target::Present
        } else {
            Target::Absent
        })
    }

    pub fn write_json<W: Write>(&self, sink: W) -> Result<()> {
        serde_json::to_writer_pretty(sink, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(source: R) -> Result<Self> {
        let m: Mlp = serde_json::from_reader(source)?;
        m.validate()?;
        Ok(m)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidParams(format!("learning rate must be finite and >= 0, got {eta}")));
    }
    Ok(())
}

fn dot_bias(w: &[f64], x: &[f64]) -> f64 {
    let (bias, weights) = w.split_last().expect("weight row includes bias");
    weights.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bias
}

fn apply_increments(row: &mut [f64], x: &[f64], scale: f64) {
    let (bias, weights) = row.split_last_mut().expect("weight row includes bias");
    for (w, xi) in weights.iter_mut().zip(x) {
        *w += scale * xi;
    }
    *bias += scale;
}

fn squared_error(output: &[f64], target: &[f64]) -> f64 {
    output.iter().zip(target).map(|(o, t)| (t - o) * (t - o)).sum()
}

/// Absence is `(1, 0)`, presence `(0, 1)`.
pub fn one_hot(t: Target) -> Vec<f64> {
    match t {
        Target::Absent => vec![1.0, 0.0],
        Target::Present => vec![0.0, 1.0],
    }
}

/// Trained network and its learning curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: Mlp,
    pub initial: Mlp,
    pub epoch_mse: Vec<f64>,
}

/// Trains the 13-3-2 network on scaled, labelled vectors.
pub fn train_mlp(
    examples: &[(FeatureVector, Target)],
    epochs: usize,
    eta: f64,
    seed: u64,
) -> Result<TrainOutcome> {
    let initial = Mlp::heart(eta, seed)?;
    let inputs: Vec<Vec<f64>> = examples.iter().map(|(x, _)| x.0.to_vec()).collect();
    let targets: Vec<Vec<f64>> = examples.iter().map(|(_, t)| one_hot(*t)).collect();
    let mut model = initial.clone();
    let epoch_mse = model.train(&inputs, &targets, epochs)?;
    Ok(TrainOutcome {
        model,
        initial,
        epoch_mse,
    })
}

/// Epoch log as CSV: `epoch,mse`, epochs numbered from 1.
pub fn write_epoch_log<W: Write>(epoch_mse: &[f64], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["epoch", "mse"])?;
    for (i, mse) in epoch_mse.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format!("{mse:?}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_epoch_log<R: Read>(source: R) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let epoch: usize = rec[0]
            .parse()
            .map_err(|_| Error::Malformed(format!("bad epoch `{}`", &rec[0])))?;
        if epoch != i + 1 {
            return Err(Error::Malformed(format!("epoch {epoch} out of sequence")));
        }
        out.push(
            rec[1]
                .parse()
                .map_err(|_| Error::Malformed(format!("bad mse `{}`", &rec[1])))?,
        );
    }
    Ok(out)
}
