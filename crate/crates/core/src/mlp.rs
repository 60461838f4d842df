//! Feed-forward MLP regressor used as the black-box model f̂.
//!
//! Hidden layers are ReLU, the output is a single linear unit, and training
//! minimizes mean squared error with mini-batch momentum SGD. Inputs and
//! targets are z-score normalized with statistics taken from the training
//! split and stored in the model, so [`predict`] is self-contained. Training
//! holds out a validation fraction and early-stops on validation MSE.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MLPError {
    #[error("training data contains non-finite values")]
    NonFiniteData,
    #[error("input width {got} does not match model input dimension {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MLPConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Fraction of samples used for training; the rest validate.
    pub split: f64,
    /// Early stopping: epochs without validation improvement before halting.
    pub patience: usize,
    pub rng_seed: u64,
}

impl Default for MLPConfig {
    fn default() -> Self {
        MLPConfig {
            hidden: vec![64, 64, 64],
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 200,
            batch_size: 32,
            split: 0.9,
            patience: 20,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// out × in
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MLPModel {
    pub layers: Vec<Layer>,
    pub input_dim: usize,
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
    pub y_mean: f64,
    pub y_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Final MSE on the training split, raw target units.
    pub train_mse: f64,
    /// Final MSE on the validation split, raw target units.
    pub val_mse: f64,
    /// Mean mini-batch loss per epoch, raw target units.
    pub epoch_train_mse: Vec<f64>,
}

// ---------------------------------------------------------------------------
// forward / backward

fn relu(a: &mut Array2<f64>) {
    a.mapv_inplace(|v| if v > 0.0 { v } else { 0.0 });
}

/// Forward pass on normalized inputs; returns all post-activation values
/// (index 0 is the input itself) for backprop.
fn forward_cached(layers: &[Layer], x: &Array2<f64>) -> Vec<Array2<f64>> {
    let mut acts = Vec::with_capacity(layers.len() + 1);
    acts.push(x.clone());
    for (i, layer) in layers.iter().enumerate() {
        let mut z = acts[i].dot(&layer.w.t());
        z += &layer.b;
        if i + 1 < layers.len() {
            relu(&mut z);
        }
        acts.push(z);
    }
    acts
}

fn forward(layers: &[Layer], x: &Array2<f64>) -> Array1<f64> {
    let acts = forward_cached(layers, x);
    acts.last().unwrap().column(0).to_owned()
}

/// MSE loss and gradients w.r.t. every parameter, on normalized data.
fn loss_and_grads(
    layers: &[Layer],
    x: &Array2<f64>,
    y: &Array1<f64>,
) -> (f64, Vec<(Array2<f64>, Array1<f64>)>) {
    let n = x.nrows() as f64;
    let acts = forward_cached(layers, x);
    let pred = acts.last().unwrap().column(0).to_owned();
    let resid = &pred - y;
    let loss = resid.mapv(|r| r * r).sum() / n;

    // dL/d(output) for the last layer's post-activation (linear)
    let mut delta = resid.mapv(|r| 2.0 * r / n).insert_axis(Axis(1));
    let mut grads: Vec<(Array2<f64>, Array1<f64>)> = vec![Default::default(); layers.len()];
    for i in (0..layers.len()).rev() {
        let gw = delta.t().dot(&acts[i]);
        let gb = delta.sum_axis(Axis(0));
        if i > 0 {
            let mut next = delta.dot(&layers[i].w);
            // ReLU mask from the post-activation of layer i-1
            next.zip_mut_with(&acts[i], |d, &a| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = next;
        }
        grads[i] = (gw, gb);
    }
    (loss, grads)
}

// ---------------------------------------------------------------------------
// training

fn znorm_cols(x: &Array2<f64>, mean: &[f64], std: &[f64]) -> Array2<f64> {
    let mut out = x.clone();
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        col.mapv_inplace(|v| (v - mean[j]) / std[j]);
    }
    out
}

fn column_stats(x: &Array2<f64>, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let t = x.ncols();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; t];
    let mut std = vec![0.0; t];
    for &i in rows {
        for j in 0..t {
            mean[j] += x[(i, j)];
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    for &i in rows {
        for j in 0..t {
            let d = x[(i, j)] - mean[j];
            std[j] += d * d;
        }
    }
    for s in &mut std {
        *s = (*s / n).sqrt();
        if *s < 1e-12 {
            *s = 1.0;
        }
    }
    (mean, std)
}

fn init_layers(dims: &[usize], rng: &mut ChaCha12Rng) -> Vec<Layer> {
    let mut layers = Vec::new();
    for win in dims.windows(2) {
        let (fan_in, fan_out) = (win[0], win[1]);
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
        let w = Array2::from_shape_fn((fan_out, fan_in), |_| normal.sample(rng));
        layers.push(Layer {
            w,
            b: Array1::zeros(fan_out),
        });
    }
    layers
}

/// Train on rows of `x` against `y` by mini-batch momentum SGD, early
/// stopping on the held-out split; the best-validation weights are kept.
pub fn train_mlp(
    x: &Array2<f64>,
    y: &Array1<f64>,
    config: &MLPConfig,
) -> Result<(MLPModel, TrainReport), MLPError> {
    let n = x.nrows();
    assert!(n >= 10, "need at least 10 samples");
    assert_eq!(y.len(), n, "x/y row mismatch");
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(MLPError::NonFiniteData);
    }

    let mut rng = ChaCha12Rng::seed_from_u64(config.rng_seed);
    let mut indices: Vec<usize> = (0..n).collect();
    shuffle(&mut indices, &mut rng);
    let n_train = ((n as f64 * config.split).round() as usize).clamp(1, n - 1);
    let (train_idx, val_idx) = indices.split_at(n_train);

    let (x_mean, x_std) = column_stats(x, train_idx);
    let ys: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
    let y_mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut y_std = (ys.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / ys.len() as f64).sqrt();
    if y_std < 1e-12 {
        y_std = 1.0;
    }

    let take = |idx: &[usize]| -> (Array2<f64>, Array1<f64>) {
        let xs = Array2::from_shape_fn((idx.len(), x.ncols()), |(i, j)| {
            (x[(idx[i], j)] - x_mean[j]) / x_std[j]
        });
        let ys = Array1::from_shape_fn(idx.len(), |i| (y[idx[i]] - y_mean) / y_std);
        (xs, ys)
    };
    let (xt, yt) = take(train_idx);
    let (xv, yv) = take(val_idx);

    let mut dims = vec![x.ncols()];
    dims.extend_from_slice(&config.hidden);
    dims.push(1);
    assert!(dims.iter().all(|&d| d >= 1), "layer widths must be >= 1");
    assert!(
        config.split > 0.0 && config.split < 1.0,
        "split must be in (0,1)"
    );
    let mut layers = init_layers(&dims, &mut rng);
    let mut velocity: Vec<(Array2<f64>, Array1<f64>)> = layers
        .iter()
        .map(|l| (Array2::zeros(l.w.dim()), Array1::zeros(l.b.len())))
        .collect();

    let raw_scale = y_std * y_std; // normalized MSE -> raw MSE
    let mut epoch_train_mse = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_layers = layers.clone();
    let mut since_best = 0usize;
    let mut epochs_run = 0usize;
    let mut order: Vec<usize> = (0..xt.nrows()).collect();

    for _ in 0..config.epochs {
        epochs_run += 1;
        shuffle(&mut order, &mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0.0;
        for chunk in order.chunks(config.batch_size.max(1)) {
            let xb = Array2::from_shape_fn((chunk.len(), xt.ncols()), |(i, j)| {
                xt[(chunk[i], j)]
            });
            let yb = Array1::from_shape_fn(chunk.len(), |i| yt[chunk[i]]);
            let (loss, grads) = loss_and_grads(&layers, &xb, &yb);
            epoch_loss += loss;
            batches += 1.0;
            for (i, (gw, gb)) in grads.into_iter().enumerate() {
                let (vw, vb) = &mut velocity[i];
                *vw *= config.momentum;
                *vw -= &(gw * config.learning_rate);
                *vb *= config.momentum;
                *vb -= &(gb * config.learning_rate);
                layers[i].w += &*vw;
                layers[i].b += &*vb;
            }
        }
        epoch_train_mse.push(epoch_loss / batches * raw_scale);

        let val_pred = forward(&layers, &xv);
        let val_mse = (&val_pred - &yv).mapv(|r| r * r).mean().unwrap() * raw_scale;
        if val_mse < best_val - 1e-15 {
            best_val = val_mse;
            best_layers = layers.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }

    let layers = best_layers;
    let train_pred = forward(&layers, &xt);
    let train_mse = (&train_pred - &yt).mapv(|r| r * r).mean().unwrap() * raw_scale;
    let val_pred = forward(&layers, &xv);
    let val_mse = (&val_pred - &yv).mapv(|r| r * r).mean().unwrap() * raw_scale;

    Ok((
        MLPModel {
            layers,
            input_dim: x.ncols(),
            x_mean,
            x_std,
            y_mean,
            y_std,
        },
        TrainReport {
            epochs_run,
            train_mse,
            val_mse,
            epoch_train_mse,
        },
    ))
}

fn shuffle(idx: &mut [usize], rng: &mut ChaCha12Rng) {
    for i in (1..idx.len()).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
}

/// Predict raw-scale responses for rows of `x`.
pub fn predict(model: &MLPModel, x: &Array2<f64>) -> Result<Array1<f64>, MLPError> {
    if x.ncols() != model.input_dim {
        return Err(MLPError::ShapeMismatch {
            expected: model.input_dim,
            got: x.ncols(),
        });
    }
    let xn = znorm_cols(x, &model.x_mean, &model.x_std);
    let out = forward(&model.layers, &xn);
    Ok(out.mapv(|v| v * model.y_std + model.y_mean))
}

/// Coefficient of determination R² of predictions against actuals.
pub fn r_squared(pred: &[f64], actual: &[f64]) -> f64 {
    let n = actual.len() as f64;
    let mean = actual.iter().sum::<f64>() / n;
    let ss_res: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (a - p) * (a - p))
        .sum();
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

// ---------------------------------------------------------------------------
// gradient check

/// Maximum relative error between analytic gradients and central finite
/// differences (h = 1e-5) of the normalized-space MSE over all parameters.
/// Parameters whose ±h perturbation flips a ReLU activation are skipped:
/// finite differences straddle a kink there and measure nothing.
pub fn grad_check_mlp(model: &MLPModel, x: &Array2<f64>, y: &Array1<f64>) -> f64 {
    let h = 1e-5;
    let xn = znorm_cols(x, &model.x_mean, &model.x_std);
    let yn = y.mapv(|v| (v - model.y_mean) / model.y_std);
    let (_, grads) = loss_and_grads(&model.layers, &xn, &yn);
    let mut layers = model.layers.clone();
    let mut max_rel = 0.0f64;
    let probe = |layers: &[Layer], xn: &Array2<f64>, yn: &Array1<f64>| -> (f64, Vec<bool>) {
        let acts = forward_cached(layers, xn);
        let pred = acts.last().unwrap().column(0).to_owned();
        let loss = (&pred - yn).mapv(|r| r * r).mean().unwrap();
        let mask = acts[1..acts.len() - 1]
            .iter()
            .flat_map(|a| a.iter().map(|&v| v > 0.0))
            .collect();
        (loss, mask)
    };
    for li in 0..layers.len() {
        for idx in 0..layers[li].w.len() + layers[li].b.len() {
            let nw = layers[li].w.len();
            let orig = if idx < nw {
                layers[li].w.as_slice().unwrap()[idx]
            } else {
                layers[li].b[idx - nw]
            };
            let set = |layers: &mut Vec<Layer>, v: f64| {
                if idx < nw {
                    layers[li].w.as_slice_mut().unwrap()[idx] = v;
                } else {
                    layers[li].b[idx - nw] = v;
                }
            };
            set(&mut layers, orig + h);
            let (lp, mp) = probe(&layers, &xn, &yn);
            set(&mut layers, orig - h);
            let (lm, mm) = probe(&layers, &xn, &yn);
            set(&mut layers, orig);
            if mp != mm {
                continue; // perturbation crosses a ReLU kink
            }
            let numeric = (lp - lm) / (2.0 * h);
            let analytic = if idx < nw {
                grads[li].0.as_slice().unwrap()[idx]
            } else {
                grads[li].1[idx - nw]
            };
            max_rel = max_rel.max(rel_err(analytic, numeric));
        }
    }
    max_rel
}

fn rel_err(a: f64, b: f64) -> f64 {
    let denom = (a.abs() + b.abs()).max(1e-8);
    (a - b).abs() / denom
}

// ---------------------------------------------------------------------------
// checkpoints

const MAGIC: &[u8; 4] = b"SKNN";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    input_dim: usize,
    shapes: Vec<(usize, usize)>,
    x_mean: Vec<f64>,
    x_std: Vec<f64>,
    y_mean: f64,
    y_std: f64,
}

/// Binary checkpoint: magic, version, JSON header, then row-major f64
/// little-endian weight/bias payloads in layer order.
pub fn save_mlp(model: &MLPModel, path: &Path) -> Result<(), MLPError> {
    let header = Header {
        input_dim: model.input_dim,
        shapes: model.layers.iter().map(|l| l.w.dim()).collect(),
        x_mean: model.x_mean.clone(),
        x_std: model.x_std.clone(),
        y_mean: model.y_mean,
        y_std: model.y_std,
    };
    let hjson = serde_json::to_vec(&header).map_err(|e| MLPError::Checkpoint(e.to_string()))?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(hjson.len() as u32).to_le_bytes());
    out.extend_from_slice(&hjson);
    for layer in &model.layers {
        for v in layer.w.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in layer.b.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}

pub fn load_mlp(path: &Path) -> Result<MLPModel, MLPError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let fail = |m: &str| MLPError::Checkpoint(m.to_string());
    if bytes.len() < 12 || &bytes[0..4] != MAGIC {
        return Err(fail("not an SKNN checkpoint"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(fail(&format!("unsupported version {version}")));
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if bytes.len() < 12 + hlen {
        return Err(fail("truncated header"));
    }
    let header: Header = serde_json::from_slice(&bytes[12..12 + hlen])
        .map_err(|e| MLPError::Checkpoint(e.to_string()))?;
    let mut off = 12 + hlen;
    let mut read_f64s = |count: usize| -> Result<Vec<f64>, MLPError> {
        let need = count * 8;
        if bytes.len() < off + need {
            return Err(fail("truncated payload"));
        }
        let vals = bytes[off..off + need]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        off += need;
        Ok(vals)
    };
    let mut layers = Vec::new();
    for &(rows, cols) in &header.shapes {
        let w = Array2::from_shape_vec((rows, cols), read_f64s(rows * cols)?)
            .map_err(|e| MLPError::Checkpoint(e.to_string()))?;
        let b = Array1::from_vec(read_f64s(rows)?);
        layers.push(Layer { w, b });
    }
    Ok(MLPModel {
        layers,
        input_dim: header.input_dim,
        x_mean: header.x_mean,
        x_std: header.x_std,
        y_mean: header.y_mean,
        y_std: header.y_std,
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_linear(n: usize, seed: u64) -> (Array2<f64>, Array1<f64>) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, 1), |_| rng.random_range(-5.0..5.0));
        let y = x.column(0).mapv(|v| 2.0 * v + 1.0);
        (x, y)
    }

    fn small_config() -> MLPConfig {
        MLPConfig {
            hidden: vec![16],
            epochs: 120,
            ..MLPConfig::default()
        }
    }

    #[test]
    fn linear_function_is_learned_nearly_exactly() {
        let (x, y) = toy_linear(1000, 1);
        let (model, report) = train_mlp(&x, &y, &small_config()).unwrap();
        let pred = predict(&model, &x).unwrap();
        let r2 = r_squared(pred.as_slice().unwrap(), y.as_slice().unwrap());
        assert!(r2 >= 0.999, "r2 = {r2}, report {report:?}");
    }

    #[test]
    fn constant_target_is_reproduced() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let x = Array2::from_shape_fn((200, 2), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_elem(200, 3.25);
        let cfg = MLPConfig {
            hidden: vec![4],
            epochs: 3000,
            learning_rate: 0.01,
            momentum: 0.9,
            patience: 300,
            ..MLPConfig::default()
        };
        let (model, _) = train_mlp(&x, &y, &cfg).unwrap();
        let pred = predict(&model, &x).unwrap();
        for p in pred.iter() {
            assert!((p - 3.25).abs() < 1e-3, "pred {p}");
        }
    }

    #[test]
    fn zero_weight_model_predicts_target_mean() {
        let model = MLPModel {
            layers: vec![Layer {
                w: Array2::zeros((1, 2)),
                b: Array1::zeros(1),
            }],
            input_dim: 2,
            x_mean: vec![0.0, 0.0],
            x_std: vec![1.0, 1.0],
            y_mean: 4.5,
            y_std: 2.0,
        };
        let x = Array2::from_shape_vec((3, 2), vec![1.0, 2.0, -1.0, 0.5, 3.0, 3.0]).unwrap();
        let pred = predict(&model, &x).unwrap();
        for p in pred.iter() {
            assert_eq!(*p, 4.5);
        }
    }

    #[test]
    fn single_sample_matches_batch_row() {
        let (x, y) = toy_linear(200, 3);
        let (model, _) = train_mlp(&x, &y, &small_config()).unwrap();
        let batch = predict(&model, &x).unwrap();
        for i in [0usize, 7, 199] {
            let row = x.row(i).insert_axis(Axis(0)).to_owned();
            let single = predict(&model, &row).unwrap()[0];
            assert!(
                (single - batch[i]).abs() <= 1e-12 * (1.0 + batch[i].abs()),
                "row {i}: {single} vs {}",
                batch[i]
            );
        }
    }

    #[test]
    fn report_mse_matches_recomputation_from_predictions() {
        let (x, y) = toy_linear(300, 4);
        let cfg = small_config();
        let (model, report) = train_mlp(&x, &y, &cfg).unwrap();
        // recover the training split exactly as train_mlp built it
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.rng_seed);
        let mut indices: Vec<usize> = (0..x.nrows()).collect();
        shuffle(&mut indices, &mut rng);
        let n_train = ((x.nrows() as f64 * cfg.split).round() as usize).clamp(1, x.nrows() - 1);
        let train_idx = &indices[..n_train];
        let xt = Array2::from_shape_fn((n_train, 1), |(i, j)| x[(train_idx[i], j)]);
        let pred = predict(&model, &xt).unwrap();
        let mse = train_idx
            .iter()
            .zip(pred.iter())
            .map(|(&i, p)| (y[i] - p) * (y[i] - p))
            .sum::<f64>()
            / n_train as f64;
        assert!(
            (mse - report.train_mse).abs() <= 1e-9 * (1.0 + report.train_mse),
            "{mse} vs {}",
            report.train_mse
        );
    }

    #[test]
    fn epoch_losses_decrease_on_linear_toy() {
        let (x, y) = toy_linear(1000, 5);
        let (_, report) = train_mlp(&x, &y, &small_config()).unwrap();
        let e = &report.epoch_train_mse;
        for i in 1..e.len() {
            if e[i - 1] <= e[0] * 1e-4 {
                break; // converged to the mini-batch noise floor
            }
            assert!(e[i] <= e[i - 1] * 1.05, "epoch {i}: {} > {}", e[i], e[i - 1]);
        }
        assert!(e.last().unwrap() < &(e[0] * 0.5));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let x = Array2::from_shape_fn((12, 3), |_| rng.random_range(-2.0..2.0));
        let y = Array1::from_shape_fn(12, |i| x[(i, 0)] * x[(i, 1)] - x[(i, 2)]);
        let cfg = MLPConfig {
            hidden: vec![4, 4],
            epochs: 5,
            ..MLPConfig::default()
        };
        let (model, _) = train_mlp(&x, &y, &cfg).unwrap();
        // check on a batch of 8 samples
        let x8 = Array2::from_shape_fn((8, 3), |(i, j)| x[(i, j)]);
        let y8 = Array1::from_shape_fn(8, |i| y[i]);
        let err = grad_check_mlp(&model, &x8, &y8);
        assert!(err <= 1e-4, "max rel err {err}");
    }

    #[test]
    fn linear_model_gradient_matches_closed_form() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let x = Array2::from_shape_fn((50, 2), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(50, |i| 3.0 * x[(i, 0)] - x[(i, 1)] + 0.5);
        let w = Array2::from_shape_vec((1, 2), vec![0.3, -0.7]).unwrap();
        let b = Array1::from_vec(vec![0.1]);
        let layers = vec![Layer {
            w: w.clone(),
            b: b.clone(),
        }];
        let (_, grads) = loss_and_grads(&layers, &x, &y);
        // closed form: dL/dw = 2/N X^T r, dL/db = 2/N sum r
        let pred = x.dot(&w.t()).column(0).to_owned() + b[0];
        let r = &pred - &y;
        let n = x.nrows() as f64;
        for j in 0..2 {
            let want = 2.0 / n * x.column(j).dot(&r);
            let got = grads[0].0[(0, j)];
            assert!((want - got).abs() <= 1e-8 * (1.0 + want.abs()));
        }
        let want_b = 2.0 / n * r.sum();
        assert!((want_b - grads[0].1[0]).abs() <= 1e-8 * (1.0 + want_b.abs()));
    }

    #[test]
    fn zero_inputs_give_mean_residual_bias_gradient() {
        let x = Array2::zeros((10, 2));
        let y = Array1::from_shape_fn(10, |i| i as f64);
        let layers = vec![Layer {
            w: Array2::from_elem((1, 2), 0.5),
            b: Array1::from_vec(vec![1.0]),
        }];
        let (_, grads) = loss_and_grads(&layers, &x, &y);
        let resid_mean = y.mapv(|v| 1.0 - v).mean().unwrap();
        assert!((grads[0].1[0] - 2.0 * resid_mean).abs() < 1e-12);
    }

    #[test]
    fn normalization_absorbs_affine_feature_rescaling() {
        let (x, y) = toy_linear(200, 8);
        let x2 = x.mapv(|v| 3.0 * v + 1.0);
        let cfg = MLPConfig {
            hidden: vec![8],
            epochs: 20,
            ..MLPConfig::default()
        };
        let (m1, _) = train_mlp(&x, &y, &cfg).unwrap();
        let (m2, _) = train_mlp(&x2, &y, &cfg).unwrap();
        // normalized views of the two feature sets agree to rounding
        let z1 = znorm_cols(&x, &m1.x_mean, &m1.x_std);
        let z2 = znorm_cols(&x2, &m2.x_mean, &m2.x_std);
        for (a, b) in z1.iter().zip(z2.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
        let p1 = predict(&m1, &x).unwrap();
        let p2 = predict(&m2, &x2).unwrap();
        for (a, b) in p1.iter().zip(p2.iter()) {
            assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = toy_linear(200, 9);
        let cfg = small_config();
        let (m1, r1) = train_mlp(&x, &y, &cfg).unwrap();
        let (m2, r2) = train_mlp(&x, &y, &cfg).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn checkpoint_round_trips_bitwise() {
        let (x, y) = toy_linear(100, 10);
        let cfg = MLPConfig {
            hidden: vec![6, 5],
            epochs: 10,
            ..MLPConfig::default()
        };
        let (model, _) = train_mlp(&x, &y, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.sknn");
        save_mlp(&model, &path).unwrap();
        let back = load_mlp(&path).unwrap();
        assert_eq!(model, back);

        std::fs::write(&path, b"garbage").unwrap();
        assert!(matches!(load_mlp(&path), Err(MLPError::Checkpoint(_))));
    }

    #[test]
    fn error_cases_are_reported() {
        let x = Array2::from_elem((20, 1), f64::NAN);
        let y = Array1::zeros(20);
        assert!(matches!(
            train_mlp(&x, &y, &small_config()),
            Err(MLPError::NonFiniteData)
        ));

        let (x, y) = toy_linear(50, 11);
        let (model, _) = train_mlp(&x, &y, &small_config()).unwrap();
        let wide = Array2::zeros((3, 2));
        assert!(matches!(
            predict(&model, &wide),
            Err(MLPError::ShapeMismatch {
                expected: 1,
                got: 2
            })
        ));
    }
}
