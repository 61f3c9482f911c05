//! A small feed-forward network stack: dense layers, one valid-padding 2-D
//! convolution with a pass-through tail, element-wise activations, exact
//! backpropagation, Nadam and soft target updates.
//!
//! Inputs are batches laid out row-major as `[batch, features]`; a rank-1
//! tensor is treated as a batch of one. A convolution layer reads the first
//! `C_i·w_i²` features as a channel-major `C_i × w_i × w_i` map and copies the
//! remaining `passthrough` features unchanged behind its `C_o·w_o²` outputs.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, data: vec![0.0; n] }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self { shape: vec![data.len()], data }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `(batch, features)` view of a rank-1 or rank-2 tensor.
    fn as_batch(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [n] => Ok((1, *n)),
            [b, n] => Ok((*b, *n)),
            other => Err(Error::Dimension(format!("expected rank 1 or 2, got shape {other:?}"))),
        }
    }

    /// Row `i` of a `[batch, features]` tensor.
    pub fn row(&self, i: usize) -> &[f64] {
        let cols = *self.shape.last().unwrap_or(&0);
        &self.data[i * cols..(i + 1) * cols]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        input: usize,
        output: usize,
        activation: Activation,
    },
    Conv {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        input_width: usize,
        #[serde(default)]
        passthrough: usize,
        activation: Activation,
    },
    Activation {
        size: usize,
        activation: Activation,
    },
}

impl LayerSpec {
    /// Output width `(w_i − v)/s + 1`, or `None` when it is not a positive integer.
    pub fn conv_output_width(input_width: usize, kernel: usize, stride: usize) -> Option<usize> {
        if stride == 0 || kernel == 0 || kernel > input_width || !(input_width - kernel).is_multiple_of(stride) {
            return None;
        }
        Some((input_width - kernel) / stride + 1)
    }

    pub fn input_size(&self) -> usize {
        match *self {
            LayerSpec::Dense { input, .. } => input,
            LayerSpec::Conv {
                in_channels,
                input_width,
                passthrough,
                ..
            } => in_channels * input_width * input_width + passthrough,
            LayerSpec::Activation { size, .. } => size,
        }
    }

    pub fn output_size(&self) -> usize {
        match *self {
            LayerSpec::Dense { output, .. } => output,
            LayerSpec::Conv {
                out_channels,
                kernel,
                stride,
                input_width,
                passthrough,
                ..
            } => {
                let wo = Self::conv_output_width(input_width, kernel, stride).unwrap_or(0);
                out_channels * wo * wo + passthrough
            }
            LayerSpec::Activation { size, .. } => size,
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let fail = |message: String| Err(Error::Layer { layer: index, message });
        match *self {
            LayerSpec::Dense { input, output, .. } => {
                if input == 0 || output == 0 {
                    return fail("dense sizes must be positive".into());
                }
            }
            LayerSpec::Conv {
                in_channels,
                out_channels,
                kernel,
                stride,
                input_width,
                ..
            } => {
                if in_channels == 0 || out_channels == 0 {
                    return fail("conv channel counts must be positive".into());
                }
                if Self::conv_output_width(input_width, kernel, stride).is_none() {
                    return fail(format!(
                        "(w_i - v)/s + 1 is not a positive integer for w_i={input_width}, v={kernel}, s={stride}"
                    ));
                }
            }
            LayerSpec::Activation { size, .. } => {
                if size == 0 {
                    return fail("activation size must be positive".into());
                }
            }
        }
        Ok(())
    }

    /// Shapes of this layer's weight and bias tensors.
    fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Dense { input, output, .. } => vec![vec![output, input], vec![output]],
            LayerSpec::Conv {
                in_channels,
                out_channels,
                kernel,
                ..
            } => vec![vec![out_channels, in_channels, kernel, kernel], vec![out_channels]],
            LayerSpec::Activation { .. } => Vec::new(),
        }
    }

    fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Dense { input, .. } => input,
            LayerSpec::Conv {
                in_channels, kernel, ..
            } => in_channels * kernel * kernel,
            LayerSpec::Activation { .. } => 0,
        }
    }

    fn activation(&self) -> Activation {
        match *self {
            LayerSpec::Dense { activation, .. }
            | LayerSpec::Conv { activation, .. }
            | LayerSpec::Activation { activation, .. } => activation,
        }
    }
}

/// Per-slot FLOP count: a convolution contributes `C_i·w_i²·C_o·w_o²`, a dense
/// layer `in·out`, activations nothing.
pub fn flops_estimate(specs: &[LayerSpec]) -> u64 {
    specs
        .iter()
        .map(|s| match *s {
            LayerSpec::Conv {
                in_channels,
                out_channels,
                kernel,
                stride,
                input_width,
                ..
            } => {
                let wo = LayerSpec::conv_output_width(input_width, kernel, stride).unwrap_or(0) as u64;
                let wi = input_width as u64;
                in_channels as u64 * wi * wi * out_channels as u64 * wo * wo
            }
            LayerSpec::Dense { input, output, .. } => (input * output) as u64,
            LayerSpec::Activation { .. } => 0,
        })
        .sum()
}

#[derive(Debug, Clone)]
struct LayerCache {
    /// Layer input (dense, activation) or im2col patches (conv).
    input: Vec<f64>,
    /// Pre-activation values.
    pre: Vec<f64>,
    /// Post-activation values.
    post: Vec<f64>,
}

#[derive(Debug, Clone)]
struct ForwardCache {
    batch: usize,
    rank1: bool,
    layers: Vec<LayerCache>,
}

/// Gradients of a scalar objective with respect to every parameter tensor
/// (summed over the batch) and the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub params: Vec<Tensor>,
    pub input: Tensor,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<LayerSpec>,
    params: Vec<Tensor>,
    #[serde(skip)]
    cache: Option<ForwardCache>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers && self.params == other.params
    }
}

/// `C = A·B` with explicit strides (`rs`, `cs`) for each operand.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    c: &mut [f64],
    accumulate: bool,
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if !accumulate {
            c[..m * n].fill(0.0);
        }
        return;
    }
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: every caller passes slices whose lengths cover the strided
    // m×k, k×n and m×n extents (checked by the debug assertions below), and
    // `c` does not alias `a` or `b`.
    debug_assert!(a.len() > (m - 1) * rsa + (k - 1) * csa);
    debug_assert!(b.len() > (k - 1) * rsb + (n - 1) * csb);
    debug_assert!(c.len() >= m * n);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

struct ConvGeom {
    ci: usize,
    co: usize,
    v: usize,
    s: usize,
    wi: usize,
    wo: usize,
    pass: usize,
}

impl ConvGeom {
    fn of(spec: &LayerSpec) -> Option<Self> {
        match *spec {
            LayerSpec::Conv {
                in_channels,
                out_channels,
                kernel,
                stride,
                input_width,
                passthrough,
                ..
            } => Some(Self {
                ci: in_channels,
                co: out_channels,
                v: kernel,
                s: stride,
                wi: input_width,
                wo: LayerSpec::conv_output_width(input_width, kernel, stride)?,
                pass: passthrough,
            }),
            _ => None,
        }
    }

    fn patch(&self) -> usize {
        self.ci * self.v * self.v
    }

    fn in_size(&self) -> usize {
        self.ci * self.wi * self.wi + self.pass
    }

    fn out_size(&self) -> usize {
        self.co * self.wo * self.wo + self.pass
    }

    /// Patch matrix `[batch·w_o², C_i·v²]` of a batch of inputs.
    fn im2col(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let (patch, positions) = (self.patch(), self.wo * self.wo);
        let mut cols = vec![0.0; batch * positions * patch];
        for b in 0..batch {
            let xb = &x[b * self.in_size()..];
            for p in 0..self.wo {
                for q in 0..self.wo {
                    let row = &mut cols[(b * positions + p * self.wo + q) * patch..][..patch];
                    let mut idx = 0;
                    for c in 0..self.ci {
                        for u in 0..self.v {
                            let base = c * self.wi * self.wi + (p * self.s + u) * self.wi + q * self.s;
                            row[idx..idx + self.v].copy_from_slice(&xb[base..base + self.v]);
                            idx += self.v;
                        }
                    }
                }
            }
        }
        cols
    }

    fn col2im_add(&self, dcols: &[f64], batch: usize, dx: &mut [f64]) {
        let (patch, positions) = (self.patch(), self.wo * self.wo);
        for b in 0..batch {
            let dxb = &mut dx[b * self.in_size()..];
            for p in 0..self.wo {
                for q in 0..self.wo {
                    let row = &dcols[(b * positions + p * self.wo + q) * patch..][..patch];
                    let mut idx = 0;
                    for c in 0..self.ci {
                        for u in 0..self.v {
                            let base = c * self.wi * self.wi + (p * self.s + u) * self.wi + q * self.s;
                            for (d, g) in dxb[base..base + self.v].iter_mut().zip(&row[idx..idx + self.v]) {
                                *d += g;
                            }
                            idx += self.v;
                        }
                    }
                }
            }
        }
    }
}

impl Network {
    /// Builds a network with fan-in scaled uniform initialization
    /// `U(−1/√fan_in, 1/√fan_in)` for weights and biases.
    pub fn new<R: Rng + ?Sized>(layers: Vec<LayerSpec>, rng: &mut R) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            l.validate(i)?;
        }
        for i in 1..layers.len() {
            if layers[i - 1].output_size() != layers[i].input_size() {
                return Err(Error::Layer {
                    layer: i,
                    message: format!(
                        "expects {} inputs but layer {} produces {}",
                        layers[i].input_size(),
                        i - 1,
                        layers[i - 1].output_size()
                    ),
                });
            }
        }
        let mut params = Vec::new();
        for l in &layers {
            let bound = 1.0 / (l.fan_in().max(1) as f64).sqrt();
            for shape in l.param_shapes() {
                let n: usize = shape.iter().product();
                let data = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
                params.push(Tensor { shape, data });
            }
        }
        Ok(Self {
            layers,
            params,
            cache: None,
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    /// Mutable parameter access; invalidates any cached forward pass.
    pub fn params_mut(&mut self) -> &mut [Tensor] {
        self.cache = None;
        &mut self.params
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].input_size()
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().map_or(0, |l| l.output_size())
    }

    pub fn n_params(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Index of the first parameter tensor owned by each layer.
    fn param_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut k = 0;
        for l in &self.layers {
            offsets.push(k);
            k += l.param_shapes().len();
        }
        offsets
    }

    /// Re-draws the weights and biases of `layer` from `U(−bound, bound)`.
    pub fn reinit_layer<R: Rng + ?Sized>(&mut self, layer: usize, bound: f64, rng: &mut R) -> Result<()> {
        if layer >= self.layers.len() {
            return Err(Error::Layer {
                layer,
                message: "no such layer".into(),
            });
        }
        let start = self.param_offsets()[layer];
        let count = self.layers[layer].param_shapes().len();
        for t in &mut self.params[start..start + count] {
            t.data.iter_mut().for_each(|w| *w = rng.random_range(-bound..=bound));
        }
        self.cache = None;
        Ok(())
    }

    /// Pure evaluation; safe to call concurrently on a shared network.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        self.run(input, false).map(|(t, _)| t)
    }

    /// Evaluation that keeps the intermediates for one [`Network::backward`].
    pub fn forward_train(&mut self, input: &Tensor) -> Result<Tensor> {
        let (out, cache) = self.run(input, true)?;
        self.cache = cache;
        Ok(out)
    }

    fn run(&self, input: &Tensor, keep: bool) -> Result<(Tensor, Option<ForwardCache>)> {
        let (batch, features) = input.as_batch()?;
        if features != self.input_size() {
            return Err(Error::Layer {
                layer: 0,
                message: format!("expects {} inputs, got {features}", self.input_size()),
            });
        }
        let offsets = self.param_offsets();
        let mut x = input.data.clone();
        let mut caches = Vec::new();
        for (li, layer) in self.layers.iter().enumerate() {
            let act = layer.activation();
            let (pre, stored_input) = match *layer {
                LayerSpec::Dense { input, output, .. } => {
                    let w = &self.params[offsets[li]].data;
                    let bias = &self.params[offsets[li] + 1].data;
                    let mut z = vec![0.0; batch * output];
                    gemm(batch, input, output, &x, input, 1, w, 1, input, &mut z, false);
                    for row in z.chunks_mut(output) {
                        row.iter_mut().zip(bias).for_each(|(v, b)| *v += b);
                    }
                    (z, x)
                }
                LayerSpec::Conv { .. } => {
                    let g = ConvGeom::of(layer).expect("validated conv");
                    let w = &self.params[offsets[li]].data;
                    let bias = &self.params[offsets[li] + 1].data;
                    let positions = g.wo * g.wo;
                    let cols = g.im2col(&x, batch);
                    let mut zc = vec![0.0; batch * positions * g.co];
                    gemm(batch * positions, g.patch(), g.co, &cols, g.patch(), 1, w, 1, g.patch(), &mut zc, false);
                    let mut z = vec![0.0; batch * g.out_size()];
                    for b in 0..batch {
                        let zb = &mut z[b * g.out_size()..(b + 1) * g.out_size()];
                        for pq in 0..positions {
                            for o in 0..g.co {
                                zb[o * positions + pq] = zc[(b * positions + pq) * g.co + o] + bias[o];
                            }
                        }
                        let tail = &x[b * g.in_size() + g.in_size() - g.pass..(b + 1) * g.in_size()];
                        zb[g.co * positions..].copy_from_slice(tail);
                    }
                    (z, cols)
                }
                LayerSpec::Activation { .. } => (x.clone(), x),
            };
            let post: Vec<f64> = match *layer {
                LayerSpec::Conv { .. } => {
                    let g = ConvGeom::of(layer).expect("validated conv");
                    let conv_len = g.co * g.wo * g.wo;
                    let mut post = pre.clone();
                    for row in post.chunks_mut(g.out_size()) {
                        row[..conv_len].iter_mut().for_each(|v| *v = act.apply(*v));
                    }
                    post
                }
                _ => pre.iter().map(|&z| act.apply(z)).collect(),
            };
            if keep {
                caches.push(LayerCache {
                    input: stored_input,
                    pre,
                    post: post.clone(),
                });
            }
            x = post;
        }
        let out_features = self.output_size();
        let shape = if input.shape.len() == 1 {
            vec![out_features]
        } else {
            vec![batch, out_features]
        };
        let cache = keep.then_some(ForwardCache {
            batch,
            rank1: input.shape.len() == 1,
            layers: caches,
        });
        Ok((Tensor { shape, data: x }, cache))
    }

    /// Backpropagates `upstream = ∂L/∂output` through the cached forward pass.
    /// The cache is consumed; a second call without a new forward errors.
    pub fn backward(&mut self, upstream: &Tensor) -> Result<Gradients> {
        let cache = self.cache.take().ok_or(Error::MissingCache)?;
        let batch = cache.batch;
        let (ub, uf) = upstream.as_batch()?;
        if ub != batch || uf != self.output_size() {
            return Err(Error::Dimension(format!(
                "upstream gradient is {ub}x{uf}, output is {batch}x{}",
                self.output_size()
            )));
        }
        let offsets = self.param_offsets();
        let mut grads: Vec<Tensor> = self.params.iter().map(|t| Tensor::zeros(t.shape.clone())).collect();
        let mut delta = upstream.data.clone();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let lc = &cache.layers[li];
            let act = layer.activation();
            match *layer {
                LayerSpec::Dense { input, output, .. } => {
                    for ((d, &z), &a) in delta.iter_mut().zip(&lc.pre).zip(&lc.post) {
                        *d *= act.derivative(z, a);
                    }
                    let w = &self.params[offsets[li]].data;
                    gemm(output, batch, input, &delta, 1, output, &lc.input, input, 1, &mut grads[offsets[li]].data, false);
                    let db = &mut grads[offsets[li] + 1].data;
                    for row in delta.chunks(output) {
                        db.iter_mut().zip(row).for_each(|(g, d)| *g += d);
                    }
                    let mut dx = vec![0.0; batch * input];
                    gemm(batch, output, input, &delta, output, 1, w, input, 1, &mut dx, false);
                    delta = dx;
                }
                LayerSpec::Conv { .. } => {
                    let g = ConvGeom::of(layer).expect("validated conv");
                    let positions = g.wo * g.wo;
                    let conv_len = g.co * positions;
                    let mut dzc = vec![0.0; batch * positions * g.co];
                    let mut dx = vec![0.0; batch * g.in_size()];
                    for b in 0..batch {
                        let off = b * g.out_size();
                        for o in 0..g.co {
                            for pq in 0..positions {
                                let i = off + o * positions + pq;
                                dzc[(b * positions + pq) * g.co + o] = delta[i] * act.derivative(lc.pre[i], lc.post[i]);
                            }
                        }
                        dx[b * g.in_size() + g.in_size() - g.pass..(b + 1) * g.in_size()]
                            .copy_from_slice(&delta[off + conv_len..off + g.out_size()]);
                    }
                    let w = &self.params[offsets[li]].data;
                    gemm(g.co, batch * positions, g.patch(), &dzc, 1, g.co, &lc.input, g.patch(), 1, &mut grads[offsets[li]].data, false);
                    let db = &mut grads[offsets[li] + 1].data;
                    for row in dzc.chunks(g.co) {
                        db.iter_mut().zip(row).for_each(|(gb, d)| *gb += d);
                    }
                    let mut dcols = vec![0.0; batch * positions * g.patch()];
                    gemm(batch * positions, g.co, g.patch(), &dzc, g.co, 1, w, g.patch(), 1, &mut dcols, false);
                    g.col2im_add(&dcols, batch, &mut dx);
                    delta = dx;
                }
                LayerSpec::Activation { .. } => {
                    for ((d, &z), &a) in delta.iter_mut().zip(&lc.pre).zip(&lc.post) {
                        *d *= act.derivative(z, a);
                    }
                }
            }
        }
        let shape = if cache.rank1 {
            vec![self.input_size()]
        } else {
            vec![batch, self.input_size()]
        };
        Ok(Gradients {
            params: grads,
            input: Tensor { shape, data: delta },
        })
    }

    /// Flat copy of all parameters in tensor order.
    pub fn flat_params(&self) -> Vec<f64> {
        self.params.iter().flat_map(|t| t.data.iter().copied()).collect()
    }

    /// FNV-1a hash of the parameter bits; cheap change detection.
    pub fn param_fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in &self.params {
            for v in &t.data {
                for b in v.to_bits().to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }

    /// Writes the versioned binary artifact.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(&mut f).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut f).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let manifest = Manifest {
            layers: self.layers.clone(),
            shapes: self.params.iter().map(|t| t.shape.clone()).collect(),
        };
        let json = serde_json::to_vec(&manifest).map_err(std::io::Error::other)?;
        w.write_all(WEIGHTS_MAGIC)?;
        w.write_all(&WEIGHTS_VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for t in &self.params {
            for v in &t.data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let io = |e| Error::io("<stream>", e);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != WEIGHTS_MAGIC {
            return Err(Error::Artifact("not a network weight file".into()));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word).map_err(io)?;
        let version = u32::from_le_bytes(word);
        if version != WEIGHTS_VERSION {
            return Err(Error::Artifact(format!("unsupported weight format version {version}")));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len).map_err(io)?;
        let len = u64::from_le_bytes(len);
        if len > 1 << 24 {
            return Err(Error::Artifact("manifest too large".into()));
        }
        let mut json = vec![0u8; len as usize];
        r.read_exact(&mut json).map_err(io)?;
        let manifest: Manifest = serde_json::from_slice(&json)?;
        let mut net = Network::new(manifest.layers, &mut crate::rng::from_seed(0))?;
        let expected: Vec<Vec<usize>> = net.params.iter().map(|t| t.shape.clone()).collect();
        if expected != manifest.shapes {
            return Err(Error::Artifact("shape manifest disagrees with the layer list".into()));
        }
        let mut buf = [0u8; 8];
        for t in &mut net.params {
            for v in &mut t.data {
                r.read_exact(&mut buf).map_err(io)?;
                *v = f64::from_le_bytes(buf);
            }
        }
        Ok(net)
    }
}

const WEIGHTS_MAGIC: &[u8; 8] = b"RACSIMNN";
const WEIGHTS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Manifest {
    layers: Vec<LayerSpec>,
    shapes: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NadamState {
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon_hat: f64,
    pub learning_rate: f64,
}

impl NadamState {
    pub fn new(net: &Network, learning_rate: f64) -> Self {
        Self::with_hyper(net, learning_rate, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyper(net: &Network, learning_rate: f64, beta1: f64, beta2: f64, epsilon_hat: f64) -> Self {
        let zeros: Vec<Vec<f64>> = net.params.iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            first_moment: zeros.clone(),
            second_moment: zeros,
            step_count: 0,
            beta1,
            beta2,
            epsilon_hat,
            learning_rate,
        }
    }
}

/// One Nadam step (descent on `grads`):
///
/// ```text
/// m ← β₁m + (1−β₁)g          v ← β₂v + (1−β₂)g²
/// m̂ = β₁m/(1−β₁^{t+1}) + (1−β₁)g/(1−β₁^t)      v̂ = v/(1−β₂^t)
/// θ ← θ − lr·m̂/(√v̂ + ε̂)
/// ```
pub fn nadam_step(params: &mut [Tensor], grads: &[Tensor], state: &mut NadamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(Error::Dimension("parameter, gradient and moment lists differ".into()));
    }
    if params
        .iter()
        .zip(grads)
        .zip(&state.first_moment)
        .any(|((p, g), m)| p.len() != g.len() || p.len() != m.len())
    {
        return Err(Error::Dimension("parameter and gradient shapes differ".into()));
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1_next = 1.0 - b1.powi(t + 1);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(&mut state.first_moment)
        .zip(&mut state.second_moment)
    {
        for (((w, &gi), mi), vi) in p.data.iter_mut().zip(&g.data).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mi = b1 * *mi + (1.0 - b1) * gi;
            *vi = b2 * *vi + (1.0 - b2) * gi * gi;
            let m_hat = b1 * *mi / c1_next + (1.0 - b1) * gi / c1;
            let v_hat = *vi / c2;
            *w -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon_hat);
        }
    }
    Ok(())
}

/// `target ← δ·current + (1−δ)·target`.
pub fn soft_update(target: &mut Network, current: &Network, delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidConfig(format!("soft update delta {delta} outside (0,1]")));
    }
    if target.layers != current.layers {
        return Err(Error::Dimension("soft update between different architectures".into()));
    }
    for (t, c) in target.params.iter_mut().zip(&current.params) {
        for (tw, &cw) in t.data.iter_mut().zip(&c.data) {
            *tw = delta * cw + (1.0 - delta) * *tw;
        }
    }
    target.cache = None;
    Ok(())
}

/// Result of comparing analytic and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_param_error: f64,
    pub max_input_error: f64,
}

impl GradCheck {
    pub fn max_error(&self) -> f64 {
        self.max_param_error.max(self.max_input_error)
    }
}

fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// Checks `backward` against central finite differences (step `h`) of the
/// scalar objective `Σ w ⊙ forward(input)` for the given weights `w`.
pub fn gradient_check(net: &Network, input: &Tensor, weights: &Tensor, h: f64) -> Result<GradCheck> {
    let mut work = net.clone();
    let out = work.forward_train(input)?;
    if out.len() != weights.len() {
        return Err(Error::Dimension("objective weights do not match the output".into()));
    }
    let upstream = Tensor {
        shape: out.shape.clone(),
        data: weights.data.clone(),
    };
    let analytic = work.backward(&upstream)?;
    let objective = |n: &Network, x: &Tensor| -> Result<f64> {
        Ok(n.forward(x)?.data.iter().zip(&weights.data).map(|(o, w)| o * w).sum())
    };
    let mut max_param_error: f64 = 0.0;
    for ti in 0..work.params.len() {
        for j in 0..work.params[ti].len() {
            let orig = work.params[ti].data[j];
            work.params[ti].data[j] = orig + h;
            let plus = objective(&work, input)?;
            work.params[ti].data[j] = orig - h;
            let minus = objective(&work, input)?;
            work.params[ti].data[j] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            max_param_error = max_param_error.max(relative_error(analytic.params[ti].data[j], numeric));
        }
    }
    let mut max_input_error: f64 = 0.0;
    let mut x = input.clone();
    for j in 0..x.len() {
        let orig = x.data[j];
        x.data[j] = orig + h;
        let plus = objective(&work, &x)?;
        x.data[j] = orig - h;
        let minus = objective(&work, &x)?;
        x.data[j] = orig;
        let numeric = (plus - minus) / (2.0 * h);
        max_input_error = max_input_error.max(relative_error(analytic.input.data[j], numeric));
    }
    Ok(GradCheck {
        max_param_error,
        max_input_error,
    })
}
