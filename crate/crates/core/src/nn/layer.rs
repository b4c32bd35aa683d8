use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One layer of a [`Network`](super::Network).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        inputs: usize,
        outputs: usize,
    },
    /// Valid padding. Kernels are square.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
    },
    /// Non-overlapping max pooling (stride equals kernel), trailing rows and
    /// columns that do not fill a window are dropped.
    MaxPool2d {
        kernel: usize,
    },
    Relu,
    Flatten,
    /// Row-wise softmax. Only valid as the last layer.
    SoftmaxOutput,
}

/// Location of a layer's parameters in the flat parameter vector. Weights
/// come first, then biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamSlot {
    pub offset: usize,
    pub len: usize,
    pub weight_len: usize,
}

impl ParamSlot {
    pub fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.weight_len
    }

    pub fn biases(&self) -> std::ops::Range<usize> {
        self.offset + self.weight_len..self.offset + self.len
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::MaxPool2d { .. } => "maxpool2d",
            LayerSpec::Relu => "relu",
            LayerSpec::Flatten => "flatten",
            LayerSpec::SoftmaxOutput => "softmax",
        }
    }

    /// (weight count, bias count).
    pub fn param_counts(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Dense { inputs, outputs } => (inputs * outputs, outputs),
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => (out_channels * in_channels * kernel * kernel, out_channels),
            _ => (0, 0),
        }
    }

    pub fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Dense { inputs, .. } => inputs,
            LayerSpec::Conv2d {
                in_channels, kernel, ..
            } => in_channels * kernel * kernel,
            _ => 0,
        }
    }

    /// Per-sample output shape for a per-sample input shape.
    pub(crate) fn output_shape(&self, index: usize, input: &[usize]) -> Result<Vec<usize>> {
        let mismatch = |expected: Vec<usize>| Error::ShapeMismatch {
            layer: index,
            kind: self.name(),
            expected,
            actual: input.to_vec(),
        };
        match *self {
            LayerSpec::Dense { inputs, outputs } => {
                if input != [inputs] {
                    return Err(mismatch(vec![inputs]));
                }
                Ok(vec![outputs])
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
            } => {
                if kernel == 0 || stride == 0 {
                    return Err(Error::InvalidNetwork(format!(
                        "layer {index}: conv kernel and stride must be positive"
                    )));
                }
                match input {
                    [c, h, w] if *c == in_channels && *h >= kernel && *w >= kernel => {
                        Ok(vec![out_channels, (h - kernel) / stride + 1, (w - kernel) / stride + 1])
                    }
                    _ => Err(mismatch(vec![in_channels, kernel, kernel])),
                }
            }
            LayerSpec::MaxPool2d { kernel } => {
                if kernel == 0 {
                    return Err(Error::InvalidNetwork(format!(
                        "layer {index}: pooling kernel must be positive"
                    )));
                }
                match input {
                    [c, h, w] if *h >= kernel && *w >= kernel => Ok(vec![*c, h / kernel, w / kernel]),
                    _ => Err(mismatch(vec![0, kernel, kernel])),
                }
            }
            LayerSpec::Relu | LayerSpec::SoftmaxOutput => Ok(input.to_vec()),
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        }
    }
}
