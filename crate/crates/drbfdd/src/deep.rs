//! The convolutional feature extractor and its composition with the kernel
//! head into a single end-to-end trainable detector.
//!
//! The canned extractors follow the classic LeNet-5 layout: two conv+pool
//! stages, then a dense layer down to an 84-wide latent vector. Every
//! nonlinearity is the bounded tanh, including the final one, so the latent
//! representation handed to the head (and to k-means during pretraining)
//! always lies inside (-1.7159, 1.7159) per coordinate.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::layers;
use crate::pretrain::init_rbfdd;
use crate::rbfdd::{self, HeadForwardContext, HeadGradients, RbfddParams};
use crate::tensor::Tensor;

/// Latent width of the canned extractors.
pub const LATENT_DIM: usize = 84;

/// One stage of the feature extractor.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv2d {
        weights: Tensor,
        bias: Tensor,
        stride: usize,
        pad: usize,
    },
    Conv1d {
        weights: Tensor,
        bias: Tensor,
        stride: usize,
        pad: usize,
    },
    MaxPool {
        window: usize,
    },
    Dense {
        weights: Tensor,
        bias: Tensor,
    },
    ScaledTanh,
    Flatten,
    /// Right-pads the last (spatial) dim of a [N,C,L] tensor with zeros so
    /// later pooling stages divide evenly.
    ZeroPad1d {
        pad: usize,
    },
}

impl Layer {
    fn param_tensors(&self) -> Vec<&Tensor> {
        match self {
            Layer::Conv2d { weights, bias, .. }
            | Layer::Conv1d { weights, bias, .. }
            | Layer::Dense { weights, bias } => vec![weights, bias],
            _ => vec![],
        }
    }

    fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Conv2d { weights, bias, .. }
            | Layer::Conv1d { weights, bias, .. }
            | Layer::Dense { weights, bias } => vec![weights, bias],
            _ => vec![],
        }
    }

    /// Output shape for a given per-sample input shape (no batch dim).
    fn out_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let err = |detail: String| Error::ShapeMismatch {
            op: "FeatureExtractor",
            detail,
        };
        match self {
            Layer::Conv2d { weights, stride, pad, .. } => {
                if input.len() != 3 || input[0] != weights.shape()[1] {
                    return Err(err(format!(
                        "conv2d expects [C={}, H, W], got {:?}",
                        weights.shape()[1],
                        input
                    )));
                }
                let oh = conv_out(input[1], weights.shape()[2], *stride, *pad)?;
                let ow = conv_out(input[2], weights.shape()[3], *stride, *pad)?;
                Ok(vec![weights.shape()[0], oh, ow])
            }
            Layer::Conv1d { weights, stride, pad, .. } => {
                if input.len() != 2 || input[0] != weights.shape()[1] {
                    return Err(err(format!(
                        "conv1d expects [C={}, L], got {:?}",
                        weights.shape()[1],
                        input
                    )));
                }
                let ol = conv_out(input[1], weights.shape()[2], *stride, *pad)?;
                Ok(vec![weights.shape()[0], ol])
            }
            Layer::MaxPool { window } => match input.len() {
                3 => {
                    if input[1] % window != 0 {
                        return Err(Error::NonDivisiblePool { dim: input[1], window: *window });
                    }
                    if input[2] % window != 0 {
                        return Err(Error::NonDivisiblePool { dim: input[2], window: *window });
                    }
                    Ok(vec![input[0], input[1] / window, input[2] / window])
                }
                2 => {
                    if input[1] % window != 0 {
                        return Err(Error::NonDivisiblePool { dim: input[1], window: *window });
                    }
                    Ok(vec![input[0], input[1] / window])
                }
                _ => Err(err(format!("maxpool expects rank 2 or 3 samples, got {:?}", input))),
            },
            Layer::Dense { weights, .. } => {
                if input.len() != 1 || input[0] != weights.shape()[1] {
                    return Err(err(format!(
                        "dense expects flat [{}], got {:?}",
                        weights.shape()[1],
                        input
                    )));
                }
                Ok(vec![weights.shape()[0]])
            }
            Layer::ScaledTanh => Ok(input.to_vec()),
            Layer::Flatten => Ok(vec![input.iter().product()]),
            Layer::ZeroPad1d { pad } => {
                if input.len() != 2 {
                    return Err(err(format!("zero-pad expects [C, L] samples, got {:?}", input)));
                }
                Ok(vec![input[0], input[1] + pad])
            }
        }
    }
}

fn conv_out(size: usize, kernel: usize, stride: usize, pad: usize) -> Result<usize> {
    let padded = size + 2 * pad;
    if kernel > padded || (padded - kernel) % stride != 0 {
        return Err(Error::NonExactOutputSize {
            op: "FeatureExtractor",
            size,
            pad,
            kernel,
            stride,
        });
    }
    Ok((padded - kernel) / stride + 1)
}

/// An ordered stack of layers mapping a batch of raw samples to a flat
/// [N, latent] representation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExtractor {
    layers: Vec<Layer>,
    input_shape: Vec<usize>,
    latent_dim: usize,
}

/// Per-layer forward state kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input to each layer; `inputs[0]` is the batch itself.
    inputs: Vec<Tensor>,
    /// Pool argmax indices for MaxPool layers, None elsewhere.
    argmaxes: Vec<Option<Vec<usize>>>,
    /// Final [N, latent] output.
    pub latent: Tensor,
}

impl FeatureExtractor {
    /// Validates the stack by tracing a sample shape through every layer.
    /// The output must be flat (rank-1 per sample).
    pub fn new(layers: Vec<Layer>, input_shape: Vec<usize>) -> Result<Self> {
        let mut shape = input_shape.clone();
        for layer in &layers {
            shape = layer.out_shape(&shape)?;
        }
        if shape.len() != 1 {
            return Err(Error::ShapeMismatch {
                op: "FeatureExtractor::new",
                detail: format!("stack must end in a flat representation, got {:?}", shape),
            });
        }
        Ok(FeatureExtractor {
            layers,
            input_shape,
            latent_dim: shape[0],
        })
    }

    /// The no-op extractor: flattens each sample. This is how the shallow
    /// detector fits the same training machinery as the deep one.
    pub fn identity(input_shape: Vec<usize>) -> Self {
        let latent_dim = input_shape.iter().product();
        FeatureExtractor {
            layers: vec![Layer::Flatten],
            input_shape,
            latent_dim,
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn param_tensors(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| l.param_tensors()).collect()
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.param_tensors_mut())
            .collect()
    }

    fn check_batch(&self, batch: &Tensor) -> Result<()> {
        if batch.rank() != self.input_shape.len() + 1
            || batch.shape()[1..] != *self.input_shape
        {
            return Err(Error::ShapeMismatch {
                op: "FeatureExtractor::forward",
                detail: format!(
                    "batch {:?} does not match input spec {:?}",
                    batch.shape(),
                    self.input_shape
                ),
            });
        }
        Ok(())
    }

    /// Runs the stack over a batch, recording what backward needs.
    pub fn forward(&self, batch: &Tensor) -> Result<ForwardTrace> {
        self.check_batch(batch)?;
        let n = batch.shape()[0];
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut argmaxes = vec![None; self.layers.len()];
        let mut current = batch.clone();
        for (li, layer) in self.layers.iter().enumerate() {
            let next = match layer {
                Layer::Conv2d { weights, bias, stride, pad } => {
                    layers::conv2d(&current, weights, bias, *stride, *pad)?
                }
                Layer::Conv1d { weights, bias, stride, pad } => {
                    layers::conv1d(&current, weights, bias, *stride, *pad)?
                }
                Layer::MaxPool { window } => {
                    let p = layers::maxpool(&current, *window)?;
                    argmaxes[li] = Some(p.argmax);
                    p.output
                }
                Layer::Dense { weights, bias } => layers::dense(&current, weights, bias)?,
                Layer::ScaledTanh => layers::scaled_tanh(&current),
                Layer::Flatten => {
                    let flat: usize = current.shape()[1..].iter().product();
                    current.clone().reshape(vec![n, flat])?
                }
                Layer::ZeroPad1d { pad } => {
                    let (c, l) = (current.shape()[1], current.shape()[2]);
                    let mut out = Tensor::zeros(&[n, c, l + pad]);
                    let src = current.data();
                    let dst = out.data_mut();
                    for plane in 0..n * c {
                        dst[plane * (l + pad)..plane * (l + pad) + l]
                            .copy_from_slice(&src[plane * l..(plane + 1) * l]);
                    }
                    out
                }
            };
            inputs.push(current);
            current = next;
        }
        Ok(ForwardTrace {
            inputs,
            argmaxes,
            latent: current,
        })
    }

    /// Chains an upstream [N, latent] gradient back through the stack.
    /// Returns per-layer parameter gradients (empty vecs for parameterless
    /// layers) and the gradient with respect to the batch.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        upstream_latent: &Tensor,
    ) -> Result<(Vec<Vec<Tensor>>, Tensor)> {
        if trace.inputs.len() != self.layers.len() {
            return Err(Error::ShapeMismatch {
                op: "FeatureExtractor::backward",
                detail: "trace does not match this extractor".into(),
            });
        }
        if upstream_latent.shape() != trace.latent.shape() {
            return Err(Error::ShapeMismatch {
                op: "FeatureExtractor::backward",
                detail: format!(
                    "upstream {:?} vs latent {:?}",
                    upstream_latent.shape(),
                    trace.latent.shape()
                ),
            });
        }
        let mut layer_grads: Vec<Vec<Tensor>> = vec![vec![]; self.layers.len()];
        let mut upstream = upstream_latent.clone();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let input = &trace.inputs[li];
            let g = match layer {
                Layer::Conv2d { weights, stride, pad, .. } => {
                    layers::conv2d_backward(input, weights, *stride, *pad, &upstream)?
                }
                Layer::Conv1d { weights, stride, pad, .. } => {
                    layers::conv1d_backward(input, weights, *stride, *pad, &upstream)?
                }
                Layer::MaxPool { .. } => {
                    let argmax = trace.argmaxes[li].as_ref().ok_or(Error::ShapeMismatch {
                        op: "FeatureExtractor::backward",
                        detail: "missing pooling indices in trace".into(),
                    })?;
                    layers::maxpool_backward(input.shape(), argmax, &upstream)?
                }
                Layer::Dense { weights, .. } => {
                    layers::dense_backward(input, weights, &upstream)?
                }
                Layer::ScaledTanh => layers::scaled_tanh_backward(input, &upstream)?,
                Layer::Flatten => crate::tensor::LayerGrad {
                    grad_input: upstream.clone().reshape(input.shape().to_vec())?,
                    grad_params: vec![],
                },
                Layer::ZeroPad1d { pad } => {
                    let (n, c, l) = (input.shape()[0], input.shape()[1], input.shape()[2]);
                    let mut g = Tensor::zeros(&[n, c, l]);
                    let src = upstream.data();
                    let dst = g.data_mut();
                    for plane in 0..n * c {
                        dst[plane * l..(plane + 1) * l]
                            .copy_from_slice(&src[plane * (l + pad)..plane * (l + pad) + l]);
                    }
                    crate::tensor::LayerGrad {
                        grad_input: g,
                        grad_params: vec![],
                    }
                }
            };
            layer_grads[li] = g.grad_params;
            upstream = g.grad_input;
        }
        Ok((layer_grads, upstream))
    }
}

fn glorot(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-limit..limit)).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

fn conv2d_layer(rng: &mut ChaCha8Rng, f: usize, c: usize, k: usize, pad: usize) -> Layer {
    Layer::Conv2d {
        weights: glorot(rng, &[f, c, k, k], c * k * k, f * k * k),
        bias: Tensor::zeros(&[f]),
        stride: 1,
        pad,
    }
}

fn conv1d_layer(rng: &mut ChaCha8Rng, f: usize, c: usize, k: usize, pad: usize) -> Layer {
    Layer::Conv1d {
        weights: glorot(rng, &[f, c, k], c * k, f * k),
        bias: Tensor::zeros(&[f]),
        stride: 1,
        pad,
    }
}

fn dense_layer(rng: &mut ChaCha8Rng, dout: usize, din: usize) -> Layer {
    Layer::Dense {
        weights: glorot(rng, &[dout, din], din, dout),
        bias: Tensor::zeros(&[dout]),
    }
}

/// LeNet-5-style 2-D extractor for 1x28x28 images:
/// conv(6@5x5, pad 2) -> tanh -> pool 2 -> conv(16@5x5) -> tanh -> pool 2
/// -> flatten(400) -> dense(84) -> tanh.
pub fn build_extractor_2d(seed: u64) -> FeatureExtractor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = vec![
        conv2d_layer(&mut rng, 6, 1, 5, 2),
        Layer::ScaledTanh,
        Layer::MaxPool { window: 2 },
        conv2d_layer(&mut rng, 16, 6, 5, 0),
        Layer::ScaledTanh,
        Layer::MaxPool { window: 2 },
        Layer::Flatten,
        dense_layer(&mut rng, LATENT_DIM, 16 * 5 * 5),
        Layer::ScaledTanh,
    ];
    FeatureExtractor::new(layers, vec![1, 28, 28]).expect("canned 2d architecture is valid")
}

/// 1-D analogue for 1xL signals (L = 417 for heartbeats). The input is
/// right-padded with zeros up to the next multiple of 4 so both pooling
/// stages divide evenly.
pub fn build_extractor_1d(seed: u64, length: usize) -> FeatureExtractor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let padded = length.div_ceil(4) * 4;
    let after = (padded / 2 - 4) / 2; // conv k=5 pad 2 keeps length; pool; conv k=5; pool
    let mut layers = Vec::new();
    if padded != length {
        layers.push(Layer::ZeroPad1d { pad: padded - length });
    }
    layers.extend([
        conv1d_layer(&mut rng, 6, 1, 5, 2),
        Layer::ScaledTanh,
        Layer::MaxPool { window: 2 },
        conv1d_layer(&mut rng, 16, 6, 5, 0),
        Layer::ScaledTanh,
        Layer::MaxPool { window: 2 },
        Layer::Flatten,
        dense_layer(&mut rng, LATENT_DIM, 16 * after),
        Layer::ScaledTanh,
    ]);
    FeatureExtractor::new(layers, vec![1, length]).expect("canned 1d architecture is valid")
}

/// Default heartbeat length for the 1-D extractor.
pub const HEARTBEAT_LEN: usize = 417;

/// A feature extractor composed with a kernel head whose input dim equals
/// the extractor's latent dim.
#[derive(Debug, Clone)]
pub struct DrbfddModel {
    extractor: FeatureExtractor,
    head: RbfddParams,
}

/// Forward state of the full model over one batch.
#[derive(Debug, Clone)]
pub struct ModelForward {
    pub trace: ForwardTrace,
    pub head_ctx: HeadForwardContext,
}

/// Every gradient of one backward pass: per-extractor-layer parameter
/// gradients plus the head block.
#[derive(Debug, Clone)]
pub struct ModelGradients {
    pub layer_grads: Vec<Vec<Tensor>>,
    pub head: HeadGradients,
}

impl ModelGradients {
    /// Flat view in the same order as [`DrbfddModel::param_tensors_mut`].
    pub fn flat(&self) -> Vec<&Tensor> {
        let mut out: Vec<&Tensor> = self
            .layer_grads
            .iter()
            .flat_map(|g| g.iter())
            .collect();
        out.push(&self.head.centers);
        out.push(&self.head.spreads);
        out.push(&self.head.weights);
        out
    }
}

impl DrbfddModel {
    pub fn new(extractor: FeatureExtractor, head: RbfddParams) -> Result<Self> {
        if head.input_dim() != extractor.latent_dim() {
            return Err(Error::ShapeMismatch {
                op: "DrbfddModel::new",
                detail: format!(
                    "head expects dim {}, extractor produces {}",
                    head.input_dim(),
                    extractor.latent_dim()
                ),
            });
        }
        Ok(DrbfddModel { extractor, head })
    }

    /// Extractor plus a placeholder single-kernel head; call
    /// [`pretrain_model`] (or [`crate::optim::train`], which does it for
    /// you) before scoring anything.
    pub fn with_placeholder_head(extractor: FeatureExtractor) -> Self {
        let d = extractor.latent_dim();
        let head = RbfddParams::new(
            Tensor::zeros(&[1, d]),
            Tensor::filled(&[1], 1.0),
            Tensor::zeros(&[1]),
        )
        .expect("placeholder head is valid");
        DrbfddModel { extractor, head }
    }

    pub fn extractor(&self) -> &FeatureExtractor {
        &self.extractor
    }

    pub fn head(&self) -> &RbfddParams {
        &self.head
    }

    pub fn set_head(&mut self, head: RbfddParams) -> Result<()> {
        if head.input_dim() != self.extractor.latent_dim() {
            return Err(Error::ShapeMismatch {
                op: "DrbfddModel::set_head",
                detail: format!(
                    "head dim {} vs latent dim {}",
                    head.input_dim(),
                    self.extractor.latent_dim()
                ),
            });
        }
        self.head = head;
        Ok(())
    }

    /// All trainable tensors: extractor parameters in layer order, then the
    /// head's centers, spreads, weights.
    pub fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = self.extractor.param_tensors_mut();
        out.extend(self.head.param_tensors_mut());
        out
    }

    pub fn param_tensors(&self) -> Vec<&Tensor> {
        let mut out = self.extractor.param_tensors();
        out.extend(self.head.param_tensors());
        out
    }

    /// Latent representation and head outputs for a batch.
    pub fn forward(&self, batch: &Tensor) -> Result<ModelForward> {
        let trace = self.extractor.forward(batch)?;
        let head_ctx = rbfdd::head_forward(&trace.latent, &self.head)?;
        Ok(ModelForward { trace, head_ctx })
    }

    /// Batch cost of a forward pass.
    pub fn loss(&self, fwd: &ModelForward, beta: f64, lambda: f64) -> Result<rbfdd::LossTerms> {
        rbfdd::loss(&fwd.head_ctx, &self.head, beta, lambda)
    }

    /// End-to-end gradients: the head's input gradient is chained back
    /// through every extractor layer.
    pub fn backward(&self, fwd: &ModelForward, beta: f64, lambda: f64) -> Result<ModelGradients> {
        let head = rbfdd::head_gradients(&fwd.head_ctx, &fwd.trace.latent, &self.head, beta, lambda)?;
        let (layer_grads, _grad_batch) = self.extractor.backward(&fwd.trace, &head.input)?;
        Ok(ModelGradients { layer_grads, head })
    }

    /// Anomaly scores (`-y`) for every sample of a batch.
    pub fn score_batch(&self, batch: &Tensor) -> Result<Vec<f64>> {
        let fwd = self.forward(batch)?;
        Ok(fwd.head_ctx.y().iter().map(|y| -y).collect())
    }
}

/// Replaces the model's head with one initialized by k-means over the
/// latent representations of `sample` (a batch of normal instances).
pub fn pretrain_model(model: &mut DrbfddModel, sample: &Tensor, h: usize, seed: u64) -> Result<()> {
    if sample.shape().first().copied().unwrap_or(0) == 0 {
        return Err(Error::EmptyDataset("pretrain sample".into()));
    }
    let trace = model.extractor.forward(sample)?;
    let head = init_rbfdd(&trace.latent, h, seed)?;
    model.set_head(head)
}
