use ndarray::linalg::general_mat_mul;
use ndarray::{s, ArrayView2, ArrayViewMut2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layer::{LayerSpec, ParamSlot};
use super::loss::softmax_row;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Gradient with respect to the flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

impl From<Vec<f64>> for GradientVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// How per-sample parameter gradients are combined during backprop.
///
/// `Sum` is the ordinary batch gradient. The other two reduce each sample's
/// gradient individually, which is what diagonal-Fisher and MAS need.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Sum,
    SumSquares,
    SumAbs,
}

/// Intermediate values of one forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `inputs[i]` is the input of layer `i`; the last entry is the network output.
    inputs: Vec<Tensor>,
    /// im2col matrices (rows = in_ch·k·k, cols = batch·positions) of conv layers.
    cols: Vec<Option<Vec<f64>>>,
    /// Flat input index selected by each max-pool output element.
    argmax: Vec<Option<Vec<usize>>>,
}

impl Trace {
    pub fn output(&self) -> &Tensor {
        self.inputs.last().expect("trace holds at least the input")
    }

    pub fn layer_input(&self, layer: usize) -> &Tensor {
        &self.inputs[layer]
    }

    pub(crate) fn conv_cols(&self, layer: usize) -> Option<&[f64]> {
        self.cols[layer].as_deref()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    /// Per-sample input shape of every layer, plus the output shape at the end.
    shapes: Vec<Vec<usize>>,
    params: Vec<f64>,
    param_index: Vec<Option<ParamSlot>>,
}

impl Network {
    /// Builds a network with zero parameters. `input_shape` is the per-sample
    /// shape (`[784]` for a dense net, `[1, 28, 28]` for a conv net).
    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("no layers".into()));
        }
        if let Some(pos) = layers.iter().position(|l| *l == LayerSpec::SoftmaxOutput) {
            if pos + 1 != layers.len() {
                return Err(Error::InvalidNetwork("softmax output must be the last layer".into()));
            }
        }
        let mut shapes = vec![input_shape.clone()];
        let mut param_index = Vec::with_capacity(layers.len());
        let mut offset = 0;
        for (i, layer) in layers.iter().enumerate() {
            let next = layer.output_shape(i, shapes.last().unwrap())?;
            shapes.push(next);
            let (weight_len, bias_len) = layer.param_counts();
            if weight_len + bias_len > 0 {
                param_index.push(Some(ParamSlot {
                    offset,
                    len: weight_len + bias_len,
                    weight_len,
                }));
                offset += weight_len + bias_len;
            } else {
                param_index.push(None);
            }
        }
        Ok(Self {
            input_shape,
            layers,
            shapes,
            params: vec![0.0; offset],
            param_index,
        })
    }

    /// Fully connected ReLU network, softmax output. `sizes` lists every
    /// width including input and output, e.g. `[784, 300, 150, 10]`.
    pub fn dense(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidNetwork(
                "dense network needs at least input and output sizes".into(),
            ));
        }
        let mut layers = Vec::new();
        for (i, pair) in sizes.windows(2).enumerate() {
            layers.push(LayerSpec::Dense {
                inputs: pair[0],
                outputs: pair[1],
            });
            if i + 2 < sizes.len() {
                layers.push(LayerSpec::Relu);
            }
        }
        layers.push(LayerSpec::SoftmaxOutput);
        Network::new(vec![sizes[0]], layers)
    }

    /// Conv(1→32, 5×5) · pool · Conv(32→64, 5×5) · pool · Dense(1024→256) · Dense(256→10).
    pub fn conv_mnist() -> Self {
        Network::new(
            vec![1, 28, 28],
            vec![
                LayerSpec::Conv2d {
                    in_channels: 1,
                    out_channels: 32,
                    kernel: 5,
                    stride: 1,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool2d { kernel: 2 },
                LayerSpec::Conv2d {
                    in_channels: 32,
                    out_channels: 64,
                    kernel: 5,
                    stride: 1,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool2d { kernel: 2 },
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    inputs: 1024,
                    outputs: 256,
                },
                LayerSpec::Relu,
                LayerSpec::Dense {
                    inputs: 256,
                    outputs: 10,
                },
                LayerSpec::SoftmaxOutput,
            ],
        )
        .expect("fixed architecture is valid")
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().unwrap()
    }

    pub fn num_classes(&self) -> usize {
        self.output_shape().iter().product()
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Alignment {
                what: "parameter vector",
                expected: self.params.len(),
                actual: params.len(),
            });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn param_index(&self) -> &[Option<ParamSlot>] {
        &self.param_index
    }

    /// `true` for connection weights, `false` for biases.
    pub fn weight_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.params.len()];
        for slot in self.param_index.iter().flatten() {
            mask[slot.weights()].iter_mut().for_each(|m| *m = true);
        }
        mask
    }

    /// Short architecture description, stable across runs; used to check that
    /// persisted maps belong to a compatible network.
    pub fn fingerprint(&self) -> String {
        let dims = |s: &[usize]| s.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x");
        let mut parts = vec![format!("in:{}", dims(&self.input_shape))];
        for layer in &self.layers {
            parts.push(match *layer {
                LayerSpec::Dense { inputs, outputs } => format!("dense:{inputs}x{outputs}"),
                LayerSpec::Conv2d {
                    in_channels,
                    out_channels,
                    kernel,
                    stride,
                } => format!("conv:{in_channels}x{out_channels}k{kernel}s{stride}"),
                LayerSpec::MaxPool2d { kernel } => format!("pool:{kernel}"),
                other => other.name().to_string(),
            });
        }
        parts.push(format!("params:{}", self.params.len()));
        parts.join(",")
    }

    /// Fan-in scaled uniform init, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, zero biases.
    pub fn seeded_init(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (layer, slot) in self.layers.iter().zip(&self.param_index) {
            let Some(slot) = slot else { continue };
            let bound = (6.0 / layer.fan_in() as f64).sqrt();
            for w in &mut self.params[slot.weights()] {
                *w = (2.0 * rng.random::<f64>() - 1.0) * bound;
            }
            self.params[slot.biases()].iter_mut().for_each(|b| *b = 0.0);
        }
    }

    fn check_input(&self, batch: &Tensor) -> Result<()> {
        if batch.shape()[1..] != self.input_shape[..] {
            let mut expected = vec![batch.rows()];
            expected.extend_from_slice(&self.input_shape);
            return Err(Error::ShapeMismatch {
                layer: 0,
                kind: self.layers[0].name(),
                expected,
                actual: batch.shape().to_vec(),
            });
        }
        Ok(())
    }

    /// Output of the last layer: probabilities when the network ends in
    /// [`LayerSpec::SoftmaxOutput`], raw scores otherwise.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let mut x = {
            self.check_input(batch)?;
            batch.clone()
        };
        for i in 0..self.layers.len() {
            x = self.layer_forward(i, &x, None, None);
        }
        Ok(x)
    }

    /// Pre-softmax scores.
    pub fn logits(&self, batch: &Tensor) -> Result<Tensor> {
        self.check_input(batch)?;
        let mut x = batch.clone();
        for i in 0..self.logit_layer_count() {
            x = self.layer_forward(i, &x, None, None);
        }
        Ok(x)
    }

    /// Number of layers up to and including the one that produces logits.
    pub(crate) fn logit_layer_count(&self) -> usize {
        match self.layers.last() {
            Some(LayerSpec::SoftmaxOutput) => self.layers.len() - 1,
            _ => self.layers.len(),
        }
    }

    /// Forward pass up to the logits, keeping everything backprop needs.
    pub fn trace(&self, batch: &Tensor) -> Result<Trace> {
        self.check_input(batch)?;
        let n = self.logit_layer_count();
        let mut inputs = Vec::with_capacity(n + 1);
        let mut cols = vec![None; n];
        let mut argmax = vec![None; n];
        inputs.push(batch.clone());
        for i in 0..n {
            let next = self.layer_forward(i, &inputs[i], Some(&mut cols[i]), Some(&mut argmax[i]));
            inputs.push(next);
        }
        Ok(Trace { inputs, cols, argmax })
    }

    fn batch_shape(&self, layer: usize, batch: usize) -> Vec<usize> {
        let mut shape = vec![batch];
        shape.extend_from_slice(&self.shapes[layer]);
        shape
    }

    fn layer_forward(
        &self,
        i: usize,
        x: &Tensor,
        keep_cols: Option<&mut Option<Vec<f64>>>,
        keep_argmax: Option<&mut Option<Vec<usize>>>,
    ) -> Tensor {
        let n = x.rows();
        let mut out = Tensor::zeros(self.batch_shape(i + 1, n));
        match self.layers[i] {
            LayerSpec::Dense { inputs, outputs } => {
                let slot = self.param_index[i].unwrap();
                let p = &self.params[slot.range()];
                let w = ArrayView2::from_shape((outputs, inputs), &p[..slot.weight_len]).unwrap();
                let b = &p[slot.weight_len..];
                let mut y = out.as_matrix_mut();
                general_mat_mul(1.0, &x.as_matrix(), &w.t(), 0.0, &mut y);
                for mut row in y.axis_iter_mut(Axis(0)) {
                    row.iter_mut().zip(b).for_each(|(v, b)| *v += b);
                }
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
            } => {
                let [_, h, w] = self.shapes[i][..] else { unreachable!() };
                let [_, oh, ow] = self.shapes[i + 1][..] else {
                    unreachable!()
                };
                let positions = oh * ow;
                let ckk = in_channels * kernel * kernel;
                let cols = im2col(x.data(), n, in_channels, h, w, kernel, stride, oh, ow);
                let slot = self.param_index[i].unwrap();
                let p = &self.params[slot.range()];
                let wm = ArrayView2::from_shape((out_channels, ckk), &p[..slot.weight_len]).unwrap();
                let b = &p[slot.weight_len..];
                let cm = ArrayView2::from_shape((ckk, n * positions), &cols).unwrap();
                let mut prod = ndarray::Array2::<f64>::zeros((out_channels, n * positions));
                general_mat_mul(1.0, &wm, &cm, 0.0, &mut prod);
                let data = out.data_mut();
                for s in 0..n {
                    for oc in 0..out_channels {
                        let dst = &mut data[(s * out_channels + oc) * positions..][..positions];
                        let src = prod.slice(s![oc, s * positions..(s + 1) * positions]);
                        for (d, v) in dst.iter_mut().zip(src.iter()) {
                            *d = v + b[oc];
                        }
                    }
                }
                if let Some(keep) = keep_cols {
                    *keep = Some(cols);
                }
            }
            LayerSpec::MaxPool2d { kernel } => {
                let [c, h, w] = self.shapes[i][..] else { unreachable!() };
                let [_, oh, ow] = self.shapes[i + 1][..] else {
                    unreachable!()
                };
                let src = x.data();
                let mut picks = Vec::with_capacity(out.len());
                for (o, dst) in out.data_mut().iter_mut().enumerate() {
                    let oc = o % ow;
                    let or = (o / ow) % oh;
                    let plane = o / (ow * oh);
                    debug_assert!(plane < n * c);
                    let base = plane * h * w;
                    let mut best = base + or * kernel * w + oc * kernel;
                    for kr in 0..kernel {
                        for kc in 0..kernel {
                            let idx = base + (or * kernel + kr) * w + oc * kernel + kc;
                            if src[idx] > src[best] {
                                best = idx;
                            }
                        }
                    }
                    *dst = src[best];
                    picks.push(best);
                }
                if let Some(keep) = keep_argmax {
                    *keep = Some(picks);
                }
            }
            LayerSpec::Relu => {
                for (d, v) in out.data_mut().iter_mut().zip(x.data()) {
                    *d = v.max(0.0);
                }
            }
            LayerSpec::Flatten => out.data_mut().copy_from_slice(x.data()),
            LayerSpec::SoftmaxOutput => {
                let k = x.row_len();
                for (dst, src) in out.data_mut().chunks_mut(k).zip(x.data().chunks(k)) {
                    softmax_row(src, dst);
                }
            }
        }
        out
    }

    /// Backpropagates `dlogits` (gradient with respect to the pre-softmax
    /// scores, one row per sample) and adds the reduced parameter gradient
    /// into `out`.
    pub fn backprop(&self, trace: &Trace, dlogits: Tensor, reduction: Reduction, out: &mut [f64]) -> Result<()> {
        if out.len() != self.params.len() {
            return Err(Error::Alignment {
                what: "gradient buffer",
                expected: self.params.len(),
                actual: out.len(),
            });
        }
        let top = self.logit_layer_count();
        if dlogits.shape() != trace.inputs[top].shape() {
            return Err(Error::ShapeMismatch {
                layer: top,
                kind: "logits",
                expected: trace.inputs[top].shape().to_vec(),
                actual: dlogits.shape().to_vec(),
            });
        }
        let first_param = self.param_index.iter().position(Option::is_some).unwrap_or(0);
        let mut delta = dlogits;
        for i in (first_param..top).rev() {
            let need_input_grad = i > first_param;
            delta = self.layer_backward(i, trace, delta, reduction, out, need_input_grad);
        }
        Ok(())
    }

    fn layer_backward(
        &self,
        i: usize,
        trace: &Trace,
        delta: Tensor,
        reduction: Reduction,
        out: &mut [f64],
        need_input_grad: bool,
    ) -> Tensor {
        let x = &trace.inputs[i];
        let n = x.rows();
        match self.layers[i] {
            LayerSpec::Dense { inputs, outputs } => {
                let slot = self.param_index[i].unwrap();
                let (gw, gb) = out[slot.range()].split_at_mut(slot.weight_len);
                let mut gw = ArrayViewMut2::from_shape((outputs, inputs), gw).unwrap();
                let d = delta.as_matrix();
                let a = x.as_matrix();
                match reduction {
                    Reduction::Sum => {
                        general_mat_mul(1.0, &d.t(), &a, 1.0, &mut gw);
                        for row in d.axis_iter(Axis(0)) {
                            gb.iter_mut().zip(row.iter()).for_each(|(g, v)| *g += v);
                        }
                    }
                    Reduction::SumSquares | Reduction::SumAbs => {
                        // Per-sample gradient of w_ij is d_i·a_j, so both
                        // reductions factor into one product of transformed matrices.
                        let f = |v: &f64| match reduction {
                            Reduction::SumSquares => v * v,
                            _ => v.abs(),
                        };
                        let dm = d.map(f);
                        let am = a.map(f);
                        general_mat_mul(1.0, &dm.t(), &am, 1.0, &mut gw);
                        for row in dm.axis_iter(Axis(0)) {
                            gb.iter_mut().zip(row.iter()).for_each(|(g, v)| *g += v);
                        }
                    }
                }
                let mut dx = Tensor::zeros(x.shape().to_vec());
                if need_input_grad {
                    let p = &self.params[slot.range()];
                    let w = ArrayView2::from_shape((outputs, inputs), &p[..slot.weight_len]).unwrap();
                    general_mat_mul(1.0, &d, &w, 0.0, &mut dx.as_matrix_mut());
                }
                dx
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
            } => {
                let [_, h, w] = self.shapes[i][..] else { unreachable!() };
                let [_, oh, ow] = self.shapes[i + 1][..] else {
                    unreachable!()
                };
                let positions = oh * ow;
                let ckk = in_channels * kernel * kernel;
                let cols = trace.cols[i].as_ref().expect("trace keeps conv columns");
                let cm = ArrayView2::from_shape((ckk, n * positions), cols).unwrap();
                // delta is (n, oc, P); regroup as (oc, n·P) to match the columns.
                let mut dm = ndarray::Array2::<f64>::zeros((out_channels, n * positions));
                for s in 0..n {
                    for oc in 0..out_channels {
                        let src = &delta.data()[(s * out_channels + oc) * positions..][..positions];
                        dm.slice_mut(s![oc, s * positions..(s + 1) * positions])
                            .iter_mut()
                            .zip(src)
                            .for_each(|(d, v)| *d = *v);
                    }
                }
                let slot = self.param_index[i].unwrap();
                let (gw, gb) = out[slot.range()].split_at_mut(slot.weight_len);
                let mut gw = ArrayViewMut2::from_shape((out_channels, ckk), gw).unwrap();
                match reduction {
                    Reduction::Sum => {
                        general_mat_mul(1.0, &dm, &cm.t(), 1.0, &mut gw);
                        for (g, row) in gb.iter_mut().zip(dm.axis_iter(Axis(0))) {
                            *g += row.sum();
                        }
                    }
                    Reduction::SumSquares | Reduction::SumAbs => {
                        let mut per = ndarray::Array2::<f64>::zeros((out_channels, ckk));
                        for s in 0..n {
                            let span = s * positions..(s + 1) * positions;
                            let ds = dm.slice(s![.., span.clone()]);
                            let cs = cm.slice(s![.., span]);
                            general_mat_mul(1.0, &ds, &cs.t(), 0.0, &mut per);
                            for (g, v) in gw.iter_mut().zip(per.iter()) {
                                *g += reduce(*v, reduction);
                            }
                            for (g, row) in gb.iter_mut().zip(ds.axis_iter(Axis(0))) {
                                *g += reduce(row.sum(), reduction);
                            }
                        }
                    }
                }
                let mut dx = Tensor::zeros(x.shape().to_vec());
                if need_input_grad {
                    let p = &self.params[slot.range()];
                    let wm = ArrayView2::from_shape((out_channels, ckk), &p[..slot.weight_len]).unwrap();
                    let mut dcols = ndarray::Array2::<f64>::zeros((ckk, n * positions));
                    general_mat_mul(1.0, &wm.t(), &dm, 0.0, &mut dcols);
                    col2im(
                        dcols.as_slice().unwrap(),
                        dx.data_mut(),
                        n,
                        in_channels,
                        h,
                        w,
                        kernel,
                        stride,
                        oh,
                        ow,
                    );
                }
                dx
            }
            LayerSpec::MaxPool2d { .. } => {
                let picks = trace.argmax[i].as_ref().expect("trace keeps pool indices");
                let mut dx = Tensor::zeros(x.shape().to_vec());
                let dst = dx.data_mut();
                for (&idx, &g) in picks.iter().zip(delta.data()) {
                    dst[idx] += g;
                }
                dx
            }
            LayerSpec::Relu => {
                let mut dx = delta;
                for (g, v) in dx.data_mut().iter_mut().zip(x.data()) {
                    if *v <= 0.0 {
                        *g = 0.0;
                    }
                }
                dx
            }
            LayerSpec::Flatten => delta.reshape(x.shape().to_vec()).unwrap(),
            LayerSpec::SoftmaxOutput => unreachable!("backprop starts below the softmax"),
        }
    }
}

fn reduce(v: f64, reduction: Reduction) -> f64 {
    match reduction {
        Reduction::Sum => v,
        Reduction::SumSquares => v * v,
        Reduction::SumAbs => v.abs(),
    }
}

/// Unfolds `(n, c, h, w)` into a `(c·k·k, n·oh·ow)` matrix.
#[allow(clippy::too_many_arguments)]
fn im2col(
    x: &[f64],
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    oh: usize,
    ow: usize,
) -> Vec<f64> {
    let positions = oh * ow;
    let width = n * positions;
    let mut cols = vec![0.0; c * k * k * width];
    for ch in 0..c {
        for kr in 0..k {
            for kc in 0..k {
                let row = (ch * k + kr) * k + kc;
                let dst = &mut cols[row * width..(row + 1) * width];
                for s in 0..n {
                    let plane = &x[(s * c + ch) * h * w..][..h * w];
                    for r in 0..oh {
                        let src_row = (r * stride + kr) * w + kc;
                        let out = &mut dst[s * positions + r * ow..][..ow];
                        for (col, v) in out.iter_mut().enumerate() {
                            *v = plane[src_row + col * stride];
                        }
                    }
                }
            }
        }
    }
    cols
}

#[allow(clippy::too_many_arguments)]
fn col2im(
    cols: &[f64],
    dx: &mut [f64],
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    oh: usize,
    ow: usize,
) {
    let positions = oh * ow;
    let width = n * positions;
    for ch in 0..c {
        for kr in 0..k {
            for kc in 0..k {
                let row = (ch * k + kr) * k + kc;
                let src = &cols[row * width..(row + 1) * width];
                for s in 0..n {
                    let plane = &mut dx[(s * c + ch) * h * w..][..h * w];
                    for r in 0..oh {
                        let dst_row = (r * stride + kr) * w + kc;
                        let from = &src[s * positions + r * ow..][..ow];
                        for (col, v) in from.iter().enumerate() {
                            plane[dst_row + col * stride] += v;
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_index_is_contiguous() {
        let net = Network::conv_mnist();
        let mut expected = 0;
        for slot in net.param_index().iter().flatten() {
            assert_eq!(slot.offset, expected);
            expected += slot.len;
        }
        assert_eq!(expected, net.num_params());
        assert_eq!(net.output_shape(), &[10]);
    }

    #[test]
    fn dense_default_size() {
        let net = Network::dense(&[784, 300, 150, 10]).unwrap();
        assert_eq!(net.num_params(), 784 * 300 + 300 + 300 * 150 + 150 + 1510);
        assert_eq!(net.num_classes(), 10);
    }

    #[test]
    fn zero_weights_give_uniform_softmax() {
        let net = Network::dense(&[5, 4, 10]).unwrap();
        let x = Tensor::new(vec![3, 5], (0..15).map(|v| v as f64 * 0.3).collect()).unwrap();
        let out = net.forward(&x).unwrap();
        assert_eq!(out.shape(), &[3, 10]);
        assert!(out.data().iter().all(|p| (p - 0.1).abs() < 1e-15));
    }

    #[test]
    fn identity_dense_logits() {
        let mut net = Network::new(
            vec![2],
            vec![LayerSpec::Dense { inputs: 2, outputs: 2 }, LayerSpec::SoftmaxOutput],
        )
        .unwrap();
        net.set_params(&[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let x = Tensor::new(vec![1, 2], vec![3.0, 5.0]).unwrap();
        assert_eq!(net.logits(&x).unwrap().data(), &[3.0, 5.0]);
        let p = net.forward(&x).unwrap();
        assert!((p.data().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_names_layer() {
        let net = Network::dense(&[4, 10]).unwrap();
        let x = Tensor::zeros(vec![2, 5]);
        match net.forward(&x) {
            Err(Error::ShapeMismatch {
                layer,
                expected,
                actual,
                ..
            }) => {
                assert_eq!(layer, 0);
                assert_eq!(expected, vec![2, 4]);
                assert_eq!(actual, vec![2, 5]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(Network::new(vec![4], vec![LayerSpec::SoftmaxOutput, LayerSpec::Relu]).is_err());
        assert!(Network::new(vec![4], vec![LayerSpec::Dense { inputs: 3, outputs: 2 }]).is_err());
    }

    #[test]
    fn seeded_init_is_deterministic_and_bounded() {
        let mut a = Network::dense(&[784, 300, 10]).unwrap();
        let mut b = a.clone();
        a.seeded_init(7);
        b.seeded_init(7);
        assert_eq!(a.params(), b.params());
        b.seeded_init(8);
        assert_ne!(a.params(), b.params());
        let slot = a.param_index()[0].unwrap();
        let bound = (6.0f64 / 784.0).sqrt();
        assert!(a.params()[slot.weights()].iter().all(|w| w.abs() <= bound));
        assert!(a.params()[slot.biases()].iter().all(|&b| b == 0.0));
    }

    #[test]
    fn maxpool_and_conv_shapes() {
        let net = Network::new(
            vec![1, 7, 7],
            vec![
                LayerSpec::Conv2d {
                    in_channels: 1,
                    out_channels: 2,
                    kernel: 3,
                    stride: 2,
                },
                LayerSpec::MaxPool2d { kernel: 2 },
                LayerSpec::Flatten,
            ],
        )
        .unwrap();
        assert_eq!(net.output_shape(), &[2]);
    }

    #[test]
    fn conv_matches_direct_convolution() {
        let mut net = Network::new(
            vec![2, 5, 4],
            vec![LayerSpec::Conv2d {
                in_channels: 2,
                out_channels: 3,
                kernel: 2,
                stride: 2,
            }],
        )
        .unwrap();
        net.seeded_init(3);
        for (i, p) in net.params_mut().iter_mut().enumerate().skip(24) {
            *p = i as f64 * 0.01;
        }
        let x = Tensor::new(vec![2, 2, 5, 4], (0..80).map(|v| (v as f64 * 0.37).sin()).collect()).unwrap();
        let y = net.forward(&x).unwrap();
        assert_eq!(y.shape(), &[2, 3, 2, 2]);
        let p = net.params();
        for s in 0..2 {
            for oc in 0..3 {
                for r in 0..2 {
                    for c in 0..2 {
                        let mut acc = p[24 + oc];
                        for ch in 0..2 {
                            for kr in 0..2 {
                                for kc in 0..2 {
                                    let wv = p[((oc * 2 + ch) * 2 + kr) * 2 + kc];
                                    let xv = x.data()[((s * 2 + ch) * 5 + r * 2 + kr) * 4 + c * 2 + kc];
                                    acc += wv * xv;
                                }
                            }
                        }
                        let got = y.data()[((s * 3 + oc) * 2 + r) * 2 + c];
                        assert!((got - acc).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
