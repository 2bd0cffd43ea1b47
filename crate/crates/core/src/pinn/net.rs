//! The implicit neural field (t, x, y) -> (c, u, v, p).
//!
//! A fully-connected SiLU network evaluated with a forward jet that carries
//! the value plus the input derivatives (d/dt, d/dx, d/dy, d2/dx2, d2/dy2)
//! needed by the physics residuals. Parameter gradients are obtained by
//! reverse propagation through the jet, so the residual loss is trainable
//! without a general-purpose autodiff tape.
//!
//! Inputs in nondimensional units are affinely normalized to [-1, 1] per
//! axis; the chain-rule factors of that map are folded into the jet seeds
//! so all derivatives are with respect to the nondimensional coordinates.

use crate::error::{CtflowError, Result};
use crate::store;
use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const N_INPUTS: usize = 3;
pub const N_OUTPUTS: usize = 4;
/// Jet streams: value, d/dt, d/dx, d/dy, d2/dx2, d2/dy2.
pub const N_STREAMS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisNorm {
    pub min: f64,
    pub max: f64,
}

impl AxisNorm {
    pub fn scale(&self) -> f64 {
        2.0 / (self.max - self.min)
    }
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.min) * self.scale() - 1.0
    }
}

/// Input normalization over the training window and ROI bounding box,
/// in nondimensional units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub t: AxisNorm,
    pub x: AxisNorm,
    pub y: AxisNorm,
}

impl Normalization {
    pub fn contains(&self, t: f64, x: f64, y: f64) -> bool {
        let eps = 1e-9;
        let ok = |a: &AxisNorm, v: f64| {
            let z = a.apply(v);
            (-1.0 - eps..=1.0 + eps).contains(&z)
        };
        ok(&self.t, t) && ok(&self.x, x) && ok(&self.y, y)
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct FieldNetwork {
    pub layers: Vec<Layer>,
    pub norm: Normalization,
    pub seed: u64,
}

/// SiLU and its first three derivatives.
#[inline]
fn silu_derivs(z: f64) -> (f64, f64, f64, f64) {
    let s = 1.0 / (1.0 + (-z).exp());
    let s1 = s * (1.0 - s);
    let s2 = s1 * (1.0 - 2.0 * s);
    let s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
    let f = z * s;
    let f1 = s + z * s1;
    let f2 = 2.0 * s1 + z * s2;
    let f3 = 3.0 * s2 + z * s3;
    (f, f1, f2, f3)
}

/// Jet of the network outputs for a batch: [stream][output field][point].
pub struct OutputJet {
    pub data: [Array2<f64>; N_STREAMS],
}

impl OutputJet {
    pub fn value(&self) -> &Array2<f64> {
        &self.data[0]
    }
}

/// Gradients with the same shape as the parameters.
#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub layers: Vec<Layer>,
}

impl ParamGrads {
    pub fn zeros_like(net: &FieldNetwork) -> Self {
        ParamGrads {
            layers: net
                .layers
                .iter()
                .map(|l| Layer {
                    w: Array2::zeros(l.w.raw_dim()),
                    b: Array1::zeros(l.b.raw_dim()),
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &ParamGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.w += &b.w;
            a.b += &b.b;
        }
    }
}

impl FieldNetwork {
    /// Glorot-uniform initialized network with `hidden_layers` hidden
    /// layers of `width` neurons.
    pub fn new(hidden_layers: usize, width: usize, norm: Normalization, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dims = vec![N_INPUTS];
        dims.extend(std::iter::repeat(width).take(hidden_layers));
        dims.push(N_OUTPUTS);
        let layers = dims
            .windows(2)
            .map(|d| {
                let (n_in, n_out) = (d[0], d[1]);
                let bound = (6.0 / (n_in + n_out) as f64).sqrt();
                let w = Array2::from_shape_fn((n_out, n_in), |_| rng.gen_range(-bound..bound));
                let b = Array1::zeros(n_out);
                Layer { w, b }
            })
            .collect();
        FieldNetwork { layers, norm, seed }
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn check_domain(&self, points: &[(f64, f64, f64)]) -> Result<()> {
        for &(t, x, y) in points {
            if !self.norm.contains(t, x, y) {
                return Err(CtflowError::Domain(format!(
                    "point (t={t}, x={x}, y={y}) outside the normalized field domain"
                )));
            }
        }
        Ok(())
    }

    /// Normalized input matrix (3 x B).
    fn input_matrix(&self, points: &[(f64, f64, f64)]) -> Array2<f64> {
        let b = points.len();
        let mut m = Array2::zeros((N_INPUTS, b));
        for (k, &(t, x, y)) in points.iter().enumerate() {
            m[[0, k]] = self.norm.t.apply(t);
            m[[1, k]] = self.norm.x.apply(x);
            m[[2, k]] = self.norm.y.apply(y);
        }
        m
    }

    /// Plain batched evaluation: (c, u, v, p) per point.
    pub fn evaluate_fields(&self, points: &[(f64, f64, f64)]) -> Result<Vec<[f64; 4]>> {
        self.check_domain(points)?;
        let out = self.forward_values(&self.input_matrix(points));
        Ok((0..points.len())
            .map(|k| [out[[0, k]], out[[1, k]], out[[2, k]], out[[3, k]]])
            .collect())
    }

    /// Value-only forward on a normalized input matrix.
    fn forward_values(&self, input: &Array2<f64>) -> Array2<f64> {
        let n_layers = self.layers.len();
        let mut a = input.clone();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = layer.w.dot(&a);
            z += &layer.b.view().insert_axis(Axis(1));
            if li + 1 < n_layers {
                z.mapv_inplace(|v| v / (1.0 + (-v).exp()));
            }
            a = z;
        }
        a
    }

    /// Value-only forward that keeps the per-layer state for backward.
    pub fn forward_values_training(&self, input: &Array2<f64>) -> (Array2<f64>, ValueState) {
        let n_layers = self.layers.len();
        let mut a = input.clone();
        let mut states = Vec::with_capacity(n_layers);
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = layer.w.dot(&a);
            z += &layer.b.view().insert_axis(Axis(1));
            let hidden = li + 1 < n_layers;
            let (act, f1) = if hidden {
                let mut f1 = Array2::zeros(z.raw_dim());
                let mut act = Array2::zeros(z.raw_dim());
                ndarray::Zip::from(&mut act).and(&mut f1).and(&z).for_each(|a, d, &zv| {
                    let s = 1.0 / (1.0 + (-zv).exp());
                    *a = zv * s;
                    *d = s + zv * s * (1.0 - s);
                });
                (act, f1)
            } else {
                (z.clone(), Array2::zeros((0, 0)))
            };
            states.push(ValueLayerState { a_in: a, f1 });
            a = act;
        }
        (a, ValueState { layers: states })
    }

    /// Backward through a value-only forward. `out_bar` is the cotangent of
    /// the outputs (4 x B). Returns parameter gradients.
    pub fn backward_values(&self, state: &ValueState, out_bar: &Array2<f64>) -> ParamGrads {
        let mut grads = ParamGrads::zeros_like(self);
        let mut a_bar = out_bar.clone();
        for li in (0..self.layers.len()).rev() {
            let st = &state.layers[li];
            let hidden = li + 1 < self.layers.len();
            let z_bar = if hidden {
                &a_bar * &st.f1
            } else {
                a_bar.clone()
            };
            grads.layers[li].w = z_bar.dot(&st.a_in.t());
            grads.layers[li].b = z_bar.sum_axis(Axis(1));
            if li > 0 {
                a_bar = self.layers[li].w.t().dot(&z_bar);
            }
        }
        grads
    }

    /// Jet seeds for a batch of nondimensional points: normalized values
    /// with the affine chain-rule factors on the derivative streams.
    fn jet_seeds(&self, points: &[(f64, f64, f64)]) -> [Array2<f64>; N_STREAMS] {
        let b = points.len();
        let value = self.input_matrix(points);
        let mut d_t = Array2::zeros((N_INPUTS, b));
        let mut d_x = Array2::zeros((N_INPUTS, b));
        let mut d_y = Array2::zeros((N_INPUTS, b));
        for k in 0..b {
            d_t[[0, k]] = self.norm.t.scale();
            d_x[[1, k]] = self.norm.x.scale();
            d_y[[2, k]] = self.norm.y.scale();
        }
        [
            value,
            d_t,
            d_x,
            d_y,
            Array2::zeros((N_INPUTS, b)),
            Array2::zeros((N_INPUTS, b)),
        ]
    }

    /// Forward jet propagation; returns the output jet and, when
    /// `keep_state`, the per-layer state for the backward pass.
    pub fn forward_jet(
        &self,
        points: &[(f64, f64, f64)],
        keep_state: bool,
    ) -> Result<(OutputJet, Option<Vec<JetLayerStateOwned>>)> {
        self.check_domain(points)?;
        let mut streams = self.jet_seeds(points);
        let n_layers = self.layers.len();
        let mut states: Vec<JetLayerStateOwned> = Vec::new();
        for (li, layer) in self.layers.iter().enumerate() {
            let hidden = li + 1 < n_layers;
            // linear part for every stream
            let z: Vec<Array2<f64>> = streams
                .iter()
                .enumerate()
                .map(|(s, a)| {
                    let mut zz = layer.w.dot(a);
                    if s == 0 {
                        zz += &layer.b.view().insert_axis(Axis(1));
                    }
                    zz
                })
                .collect();
            if hidden {
                let dim = z[0].raw_dim();
                let mut f0 = Array2::zeros(dim.clone());
                let mut f1 = Array2::zeros(dim.clone());
                let mut f2 = Array2::zeros(dim.clone());
                let mut f3 = Array2::zeros(dim.clone());
                ndarray::Zip::from(&mut f0)
                    .and(&mut f1)
                    .and(&mut f2)
                    .and(&mut f3)
                    .and(&z[0])
                    .for_each(|a0, a1, a2, a3, &zv| {
                        let (v0, v1, v2, v3) = silu_derivs(zv);
                        *a0 = v0;
                        *a1 = v1;
                        *a2 = v2;
                        *a3 = v3;
                    });
                let a_val = f0;
                let a_t = &f1 * &z[1];
                let a_x = &f1 * &z[2];
                let a_y = &f1 * &z[3];
                let a_xx = &f2 * &(&z[2] * &z[2]) + &(&f1 * &z[4]);
                let a_yy = &f2 * &(&z[3] * &z[3]) + &(&f1 * &z[5]);
                let new_streams = [a_val, a_t, a_x, a_y, a_xx, a_yy];
                if keep_state {
                    states.push(JetLayerStateOwned {
                        a_in: streams,
                        z,
                        f1: Some(f1),
                        f2: Some(f2),
                        f3: Some(f3),
                    });
                } else {
                    states.clear();
                }
                streams = new_streams;
            } else {
                let new_streams: [Array2<f64>; N_STREAMS] = [
                    z[0].clone(),
                    z[1].clone(),
                    z[2].clone(),
                    z[3].clone(),
                    z[4].clone(),
                    z[5].clone(),
                ];
                if keep_state {
                    states.push(JetLayerStateOwned {
                        a_in: streams,
                        z,
                        f1: None,
                        f2: None,
                        f3: None,
                    });
                }
                streams = new_streams;
            }
        }
        Ok((
            OutputJet { data: streams },
            if keep_state { Some(states) } else { None },
        ))
    }

    /// Reverse pass through the jet. `jet_bar` holds cotangents of every
    /// output stream (same shapes as the OutputJet).
    pub fn backward_jet(
        &self,
        states: &[JetLayerStateOwned],
        jet_bar: &[Array2<f64>; N_STREAMS],
    ) -> ParamGrads {
        let mut grads = ParamGrads::zeros_like(self);
        let mut bar: [Array2<f64>; N_STREAMS] = jet_bar.clone();
        for li in (0..self.layers.len()).rev() {
            let st = &states[li];
            let hidden = li + 1 < self.layers.len();
            // cotangents of the pre-activations z (per stream)
            let z_bar: [Array2<f64>; N_STREAMS] = if hidden {
                let f1 = st.f1.as_ref().expect("hidden state");
                let f2 = st.f2.as_ref().expect("hidden state");
                let f3 = st.f3.as_ref().expect("hidden state");
                let (z_t, z_x, z_y, z_xx, z_yy) =
                    (&st.z[1], &st.z[2], &st.z[3], &st.z[4], &st.z[5]);
                // value stream collects contributions from every output
                let mut zb0 = &bar[0] * f1;
                zb0 = zb0
                    + &(&bar[1] * f2) * z_t
                    + &(&bar[2] * f2) * z_x
                    + &(&bar[3] * f2) * z_y
                    + &bar[4] * &(f3 * &(z_x * z_x) + &(f2 * z_xx))
                    + &bar[5] * &(f3 * &(z_y * z_y) + &(f2 * z_yy));
                let zb1 = &bar[1] * f1;
                let zb2 = &bar[2] * f1 + &(&bar[4] * f2) * &(2.0 * z_x);
                let zb3 = &bar[3] * f1 + &(&bar[5] * f2) * &(2.0 * z_y);
                let zb4 = &bar[4] * f1;
                let zb5 = &bar[5] * f1;
                [zb0, zb1, zb2, zb3, zb4, zb5]
            } else {
                bar.clone()
            };
            // linear part: accumulate weight/bias grads, push to inputs
            let mut w_grad = Array2::zeros(self.layers[li].w.raw_dim());
            for s in 0..N_STREAMS {
                w_grad = w_grad + z_bar[s].dot(&st.a_in[s].t());
            }
            grads.layers[li].w = w_grad;
            grads.layers[li].b = z_bar[0].sum_axis(Axis(1));
            if li > 0 {
                let wt = self.layers[li].w.t();
                bar = [
                    wt.dot(&z_bar[0]),
                    wt.dot(&z_bar[1]),
                    wt.dot(&z_bar[2]),
                    wt.dot(&z_bar[3]),
                    wt.dot(&z_bar[4]),
                    wt.dot(&z_bar[5]),
                ];
            }
        }
        grads
    }

    /// Flat parameter vector (checkpoint order).
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(CtflowError::Config(format!(
                "parameter count mismatch: {} vs {}",
                flat.len(),
                self.n_params()
            )));
        }
        let mut k = 0;
        for l in &mut self.layers {
            for w in l.w.iter_mut() {
                *w = flat[k];
                k += 1;
            }
            for b in l.b.iter_mut() {
                *b = flat[k];
                k += 1;
            }
        }
        Ok(())
    }

    pub fn save_checkpoint(&self, dir: &Path, iter: usize) -> Result<()> {
        store::ensure_dir(dir)?;
        let meta = CheckpointMeta {
            widths: self.layers.iter().map(|l| l.w.nrows()).collect(),
            norm: self.norm,
            seed: self.seed,
            iter,
        };
        store::write_meta(dir, &meta)?;
        store::write_f64(&dir.join("params.f64"), &self.flat_params())
    }

    pub fn load_checkpoint(dir: &Path) -> Result<(FieldNetwork, usize)> {
        let meta: CheckpointMeta = store::read_meta(dir)?;
        let hidden = meta.widths.len() - 1;
        let width = if hidden > 0 { meta.widths[0] } else { N_OUTPUTS };
        let mut net = FieldNetwork::new(hidden, width, meta.norm, meta.seed);
        let flat = store::read_f64(&dir.join("params.f64"), net.n_params())?;
        net.set_flat_params(&flat)?;
        Ok((net, meta.iter))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointMeta {
    /// Output width of each layer.
    widths: Vec<usize>,
    norm: Normalization,
    seed: u64,
    iter: usize,
}

pub struct ValueLayerState {
    a_in: Array2<f64>,
    f1: Array2<f64>,
}

pub struct ValueState {
    layers: Vec<ValueLayerState>,
}

pub struct JetLayerStateOwned {
    a_in: [Array2<f64>; N_STREAMS],
    z: Vec<Array2<f64>>,
    f1: Option<Array2<f64>>,
    f2: Option<Array2<f64>>,
    f3: Option<Array2<f64>>,
}
