//! Forward and backward passes for every layer the deep stack composes:
//! 2-D/1-D cross-correlation, max pooling, dense affine maps, and the
//! bounded tanh activation.
//!
//! Convolution here is cross-correlation (no kernel flip), the usual
//! deep-learning convention. All backward functions return exact analytic
//! gradients; the tests check them against central finite differences.

use crate::error::{Error, Result};
use crate::tensor::{LayerGrad, Tensor};

/// Output amplitude of the bounded activation: `y = 1.7159 * tanh(2x/3)`.
pub const SCALED_TANH_AMPLITUDE: f64 = 1.7159;
/// Input slope of the bounded activation.
pub const SCALED_TANH_SLOPE: f64 = 2.0 / 3.0;

fn out_size(op: &'static str, size: usize, kernel: usize, stride: usize, pad: usize) -> Result<usize> {
    let padded = size + 2 * pad;
    if kernel > padded {
        return Err(Error::ShapeMismatch {
            op,
            detail: format!("kernel {} exceeds padded input {}", kernel, padded),
        });
    }
    if (padded - kernel) % stride != 0 {
        return Err(Error::NonExactOutputSize {
            op,
            size,
            pad,
            kernel,
            stride,
        });
    }
    Ok((padded - kernel) / stride + 1)
}

fn expect_rank(op: &'static str, t: &Tensor, rank: usize, what: &str) -> Result<()> {
    if t.rank() != rank {
        return Err(Error::ShapeMismatch {
            op,
            detail: format!("{} has shape {:?}, expected rank {}", what, t.shape(), rank),
        });
    }
    Ok(())
}

/// Zero-pads the two spatial dims of a [N,C,H,W] tensor.
fn pad2d(input: &Tensor, pad: usize) -> Tensor {
    if pad == 0 {
        return input.clone();
    }
    let (n, c, h, w) = (
        input.shape()[0],
        input.shape()[1],
        input.shape()[2],
        input.shape()[3],
    );
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let mut out = Tensor::zeros(&[n, c, ph, pw]);
    let src = input.data();
    let dst = out.data_mut();
    for plane in 0..n * c {
        for y in 0..h {
            let s = (plane * h + y) * w;
            let d = (plane * ph + y + pad) * pw + pad;
            dst[d..d + w].copy_from_slice(&src[s..s + w]);
        }
    }
    out
}

/// 2-D cross-correlation of [N,C,H,W] input with [F,C,kH,kW] filters.
pub fn conv2d(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    stride: usize,
    pad: usize,
) -> Result<Tensor> {
    expect_rank("conv2d", input, 4, "input")?;
    expect_rank("conv2d", weights, 4, "weights")?;
    if stride == 0 {
        return Err(Error::InvalidArgument("conv2d: stride must be positive".into()));
    }
    let [n, c, h, w] = [input.shape()[0], input.shape()[1], input.shape()[2], input.shape()[3]];
    let [f, wc, kh, kw] = [
        weights.shape()[0],
        weights.shape()[1],
        weights.shape()[2],
        weights.shape()[3],
    ];
    if wc != c || bias.shape() != [f] {
        return Err(Error::ShapeMismatch {
            op: "conv2d",
            detail: format!(
                "input channels {} vs weight channels {}, bias {:?} vs filters {}",
                c,
                wc,
                bias.shape(),
                f
            ),
        });
    }
    let oh = out_size("conv2d", h, kh, stride, pad)?;
    let ow = out_size("conv2d", w, kw, stride, pad)?;

    let padded = pad2d(input, pad);
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let mut out = Tensor::zeros(&[n, f, oh, ow]);
    let pd = padded.data();
    let wd = weights.data();
    let bd = bias.data();
    let od = out.data_mut();
    for ni in 0..n {
        for fi in 0..f {
            let b = bd[fi];
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = b;
                    for ci in 0..c {
                        let ip = ((ni * c + ci) * ph + oy * stride) * pw + ox * stride;
                        let wp = ((fi * c + ci) * kh) * kw;
                        for ky in 0..kh {
                            let ir = ip + ky * pw;
                            let wr = wp + ky * kw;
                            for kx in 0..kw {
                                acc += pd[ir + kx] * wd[wr + kx];
                            }
                        }
                    }
                    od[((ni * f + fi) * oh + oy) * ow + ox] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Backward pass of [`conv2d`]. `grad_params` holds `[grad_weights, grad_bias]`.
pub fn conv2d_backward(
    input: &Tensor,
    weights: &Tensor,
    stride: usize,
    pad: usize,
    upstream: &Tensor,
) -> Result<LayerGrad> {
    expect_rank("conv2d_backward", upstream, 4, "upstream")?;
    let [n, c, h, w] = [input.shape()[0], input.shape()[1], input.shape()[2], input.shape()[3]];
    let [f, _, kh, kw] = [
        weights.shape()[0],
        weights.shape()[1],
        weights.shape()[2],
        weights.shape()[3],
    ];
    let oh = out_size("conv2d_backward", h, kh, stride, pad)?;
    let ow = out_size("conv2d_backward", w, kw, stride, pad)?;
    if upstream.shape() != [n, f, oh, ow] {
        return Err(Error::ShapeMismatch {
            op: "conv2d_backward",
            detail: format!(
                "upstream {:?} does not match forward output [{}, {}, {}, {}]",
                upstream.shape(),
                n,
                f,
                oh,
                ow
            ),
        });
    }

    let padded = pad2d(input, pad);
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let mut grad_padded = Tensor::zeros(&[n, c, ph, pw]);
    let mut grad_w = Tensor::zeros(weights.shape());
    let mut grad_b = Tensor::zeros(&[f]);

    let pd = padded.data();
    let wd = weights.data();
    let ud = upstream.data();
    let gp = grad_padded.data_mut();
    let gw = grad_w.data_mut();
    let gb = grad_b.data_mut();
    for ni in 0..n {
        for fi in 0..f {
            for oy in 0..oh {
                for ox in 0..ow {
                    let u = ud[((ni * f + fi) * oh + oy) * ow + ox];
                    gb[fi] += u;
                    for ci in 0..c {
                        let ip = ((ni * c + ci) * ph + oy * stride) * pw + ox * stride;
                        let wp = ((fi * c + ci) * kh) * kw;
                        for ky in 0..kh {
                            let ir = ip + ky * pw;
                            let wr = wp + ky * kw;
                            for kx in 0..kw {
                                gw[wr + kx] += u * pd[ir + kx];
                                gp[ir + kx] += u * wd[wr + kx];
                            }
                        }
                    }
                }
            }
        }
    }

    // Crop the padding back off the input gradient.
    let grad_input = if pad == 0 {
        grad_padded
    } else {
        let mut g = Tensor::zeros(&[n, c, h, w]);
        let gd = g.data_mut();
        let src = grad_padded.data();
        for plane in 0..n * c {
            for y in 0..h {
                let s = (plane * ph + y + pad) * pw + pad;
                let d = (plane * h + y) * w;
                gd[d..d + w].copy_from_slice(&src[s..s + w]);
            }
        }
        g
    };
    Ok(LayerGrad {
        grad_input,
        grad_params: vec![grad_w, grad_b],
    })
}

/// Zero-pads the spatial dim of a [N,C,L] tensor.
fn pad1d(input: &Tensor, pad: usize) -> Tensor {
    if pad == 0 {
        return input.clone();
    }
    let (n, c, l) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let pl = l + 2 * pad;
    let mut out = Tensor::zeros(&[n, c, pl]);
    let src = input.data();
    let dst = out.data_mut();
    for plane in 0..n * c {
        dst[plane * pl + pad..plane * pl + pad + l].copy_from_slice(&src[plane * l..(plane + 1) * l]);
    }
    out
}

/// 1-D cross-correlation of [N,C,L] input with [F,C,k] filters.
pub fn conv1d(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    stride: usize,
    pad: usize,
) -> Result<Tensor> {
    expect_rank("conv1d", input, 3, "input")?;
    expect_rank("conv1d", weights, 3, "weights")?;
    if stride == 0 {
        return Err(Error::InvalidArgument("conv1d: stride must be positive".into()));
    }
    let [n, c, l] = [input.shape()[0], input.shape()[1], input.shape()[2]];
    let [f, wc, k] = [weights.shape()[0], weights.shape()[1], weights.shape()[2]];
    if wc != c || bias.shape() != [f] {
        return Err(Error::ShapeMismatch {
            op: "conv1d",
            detail: format!(
                "input channels {} vs weight channels {}, bias {:?} vs filters {}",
                c,
                wc,
                bias.shape(),
                f
            ),
        });
    }
    let ol = out_size("conv1d", l, k, stride, pad)?;

    let padded = pad1d(input, pad);
    let pl = l + 2 * pad;
    let mut out = Tensor::zeros(&[n, f, ol]);
    let pd = padded.data();
    let wd = weights.data();
    let bd = bias.data();
    let od = out.data_mut();
    for ni in 0..n {
        for fi in 0..f {
            for ox in 0..ol {
                let mut acc = bd[fi];
                for ci in 0..c {
                    let ip = (ni * c + ci) * pl + ox * stride;
                    let wp = (fi * c + ci) * k;
                    for kx in 0..k {
                        acc += pd[ip + kx] * wd[wp + kx];
                    }
                }
                od[(ni * f + fi) * ol + ox] = acc;
            }
        }
    }
    Ok(out)
}

/// Backward pass of [`conv1d`]. `grad_params` holds `[grad_weights, grad_bias]`.
pub fn conv1d_backward(
    input: &Tensor,
    weights: &Tensor,
    stride: usize,
    pad: usize,
    upstream: &Tensor,
) -> Result<LayerGrad> {
    expect_rank("conv1d_backward", upstream, 3, "upstream")?;
    let [n, c, l] = [input.shape()[0], input.shape()[1], input.shape()[2]];
    let [f, _, k] = [weights.shape()[0], weights.shape()[1], weights.shape()[2]];
    let ol = out_size("conv1d_backward", l, k, stride, pad)?;
    if upstream.shape() != [n, f, ol] {
        return Err(Error::ShapeMismatch {
            op: "conv1d_backward",
            detail: format!(
                "upstream {:?} does not match forward output [{}, {}, {}]",
                upstream.shape(),
                n,
                f,
                ol
            ),
        });
    }

    let padded = pad1d(input, pad);
    let pl = l + 2 * pad;
    let mut grad_padded = Tensor::zeros(&[n, c, pl]);
    let mut grad_w = Tensor::zeros(weights.shape());
    let mut grad_b = Tensor::zeros(&[f]);

    let pd = padded.data();
    let wd = weights.data();
    let ud = upstream.data();
    let gp = grad_padded.data_mut();
    let gw = grad_w.data_mut();
    let gb = grad_b.data_mut();
    for ni in 0..n {
        for fi in 0..f {
            for ox in 0..ol {
                let u = ud[(ni * f + fi) * ol + ox];
                gb[fi] += u;
                for ci in 0..c {
                    let ip = (ni * c + ci) * pl + ox * stride;
                    let wp = (fi * c + ci) * k;
                    for kx in 0..k {
                        gw[wp + kx] += u * pd[ip + kx];
                        gp[ip + kx] += u * wd[wp + kx];
                    }
                }
            }
        }
    }

    let grad_input = if pad == 0 {
        grad_padded
    } else {
        let mut g = Tensor::zeros(&[n, c, l]);
        let gd = g.data_mut();
        let src = grad_padded.data();
        for plane in 0..n * c {
            gd[plane * l..(plane + 1) * l]
                .copy_from_slice(&src[plane * pl + pad..plane * pl + pad + l]);
        }
        g
    };
    Ok(LayerGrad {
        grad_input,
        grad_params: vec![grad_w, grad_b],
    })
}

/// Max pooling output: pooled tensor plus, per output element, the flat index
/// of the winning input element (ties go to the lowest flat index).
#[derive(Debug, Clone)]
pub struct MaxPoolOutput {
    pub output: Tensor,
    pub argmax: Vec<usize>,
}

/// Non-overlapping max pooling. Rank-4 input pools both spatial dims,
/// rank-3 input pools the last dim; the window must divide them exactly.
pub fn maxpool(input: &Tensor, window: usize) -> Result<MaxPoolOutput> {
    if window == 0 {
        return Err(Error::InvalidArgument("maxpool: window must be positive".into()));
    }
    match input.rank() {
        4 => {
            let [n, c, h, w] = [input.shape()[0], input.shape()[1], input.shape()[2], input.shape()[3]];
            if h % window != 0 {
                return Err(Error::NonDivisiblePool { dim: h, window });
            }
            if w % window != 0 {
                return Err(Error::NonDivisiblePool { dim: w, window });
            }
            let (oh, ow) = (h / window, w / window);
            let mut out = Tensor::zeros(&[n, c, oh, ow]);
            let mut argmax = vec![0usize; out.len()];
            let src = input.data();
            let od = out.data_mut();
            for plane in 0..n * c {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut best = f64::NEG_INFINITY;
                        let mut best_idx = 0usize;
                        for ky in 0..window {
                            let row = (plane * h + oy * window + ky) * w + ox * window;
                            for kx in 0..window {
                                let v = src[row + kx];
                                if v > best {
                                    best = v;
                                    best_idx = row + kx;
                                }
                            }
                        }
                        let o = (plane * oh + oy) * ow + ox;
                        od[o] = best;
                        argmax[o] = best_idx;
                    }
                }
            }
            Ok(MaxPoolOutput { output: out, argmax })
        }
        3 => {
            let [n, c, l] = [input.shape()[0], input.shape()[1], input.shape()[2]];
            if l % window != 0 {
                return Err(Error::NonDivisiblePool { dim: l, window });
            }
            let ol = l / window;
            let mut out = Tensor::zeros(&[n, c, ol]);
            let mut argmax = vec![0usize; out.len()];
            let src = input.data();
            let od = out.data_mut();
            for plane in 0..n * c {
                for ox in 0..ol {
                    let base = plane * l + ox * window;
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0usize;
                    for kx in 0..window {
                        let v = src[base + kx];
                        if v > best {
                            best = v;
                            best_idx = base + kx;
                        }
                    }
                    let o = plane * ol + ox;
                    od[o] = best;
                    argmax[o] = best_idx;
                }
            }
            Ok(MaxPoolOutput { output: out, argmax })
        }
        r => Err(Error::ShapeMismatch {
            op: "maxpool",
            detail: format!("expected rank 3 or 4 input, got rank {}", r),
        }),
    }
}

/// Backward pass of [`maxpool`]: routes each upstream element to its argmax.
pub fn maxpool_backward(
    input_shape: &[usize],
    argmax: &[usize],
    upstream: &Tensor,
) -> Result<LayerGrad> {
    if argmax.len() != upstream.len() {
        return Err(Error::ShapeMismatch {
            op: "maxpool_backward",
            detail: format!(
                "argmax has {} entries, upstream has {}",
                argmax.len(),
                upstream.len()
            ),
        });
    }
    let mut grad_input = Tensor::zeros(input_shape);
    let gd = grad_input.data_mut();
    for (&idx, &u) in argmax.iter().zip(upstream.data()) {
        gd[idx] += u;
    }
    Ok(LayerGrad {
        grad_input,
        grad_params: vec![],
    })
}

/// Affine map of [N,Din] input by [Dout,Din] weights and [Dout] bias.
pub fn dense(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    expect_rank("dense", input, 2, "input")?;
    expect_rank("dense", weights, 2, "weights")?;
    let [n, din] = [input.shape()[0], input.shape()[1]];
    let [dout, wdin] = [weights.shape()[0], weights.shape()[1]];
    if wdin != din || bias.shape() != [dout] {
        return Err(Error::ShapeMismatch {
            op: "dense",
            detail: format!(
                "input dim {} vs weights {:?}, bias {:?}",
                din,
                weights.shape(),
                bias.shape()
            ),
        });
    }
    let mut out = Tensor::zeros(&[n, dout]);
    let id = input.data();
    let wd = weights.data();
    let bd = bias.data();
    let od = out.data_mut();
    for ni in 0..n {
        let row = &id[ni * din..(ni + 1) * din];
        for o in 0..dout {
            let wrow = &wd[o * din..(o + 1) * din];
            let mut acc = bd[o];
            for i in 0..din {
                acc += row[i] * wrow[i];
            }
            od[ni * dout + o] = acc;
        }
    }
    Ok(out)
}

/// Backward pass of [`dense`]. `grad_params` holds `[grad_weights, grad_bias]`.
pub fn dense_backward(input: &Tensor, weights: &Tensor, upstream: &Tensor) -> Result<LayerGrad> {
    let [n, din] = [input.shape()[0], input.shape()[1]];
    let [dout, _] = [weights.shape()[0], weights.shape()[1]];
    if upstream.shape() != [n, dout] {
        return Err(Error::ShapeMismatch {
            op: "dense_backward",
            detail: format!("upstream {:?}, expected [{}, {}]", upstream.shape(), n, dout),
        });
    }
    let mut grad_input = Tensor::zeros(&[n, din]);
    let mut grad_w = Tensor::zeros(&[dout, din]);
    let mut grad_b = Tensor::zeros(&[dout]);
    let id = input.data();
    let wd = weights.data();
    let ud = upstream.data();
    let gi = grad_input.data_mut();
    let gw = grad_w.data_mut();
    let gb = grad_b.data_mut();
    for ni in 0..n {
        for o in 0..dout {
            let u = ud[ni * dout + o];
            gb[o] += u;
            for i in 0..din {
                gw[o * din + i] += u * id[ni * din + i];
                gi[ni * din + i] += u * wd[o * din + i];
            }
        }
    }
    Ok(LayerGrad {
        grad_input,
        grad_params: vec![grad_w, grad_b],
    })
}

/// Elementwise bounded activation `y = 1.7159 * tanh(2x/3)`; output magnitude
/// stays strictly below the amplitude for finite input.
pub fn scaled_tanh(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    for v in out.data_mut() {
        *v = SCALED_TANH_AMPLITUDE * (SCALED_TANH_SLOPE * *v).tanh();
    }
    out
}

/// Backward pass of [`scaled_tanh`] given the saved layer input.
pub fn scaled_tanh_backward(input: &Tensor, upstream: &Tensor) -> Result<LayerGrad> {
    if input.shape() != upstream.shape() {
        return Err(Error::ShapeMismatch {
            op: "scaled_tanh_backward",
            detail: format!("input {:?} vs upstream {:?}", input.shape(), upstream.shape()),
        });
    }
    let mut grad_input = Tensor::zeros(input.shape());
    let gd = grad_input.data_mut();
    for (i, (&x, &u)) in input.data().iter().zip(upstream.data()).enumerate() {
        let t = (SCALED_TANH_SLOPE * x).tanh();
        gd[i] = u * SCALED_TANH_AMPLITUDE * SCALED_TANH_SLOPE * (1.0 - t * t);
    }
    Ok(LayerGrad {
        grad_input,
        grad_params: vec![],
    })
}

/// Scalar version of [`scaled_tanh`], used by the kernel head.
pub fn scaled_tanh_scalar(x: f64) -> f64 {
    SCALED_TANH_AMPLITUDE * (SCALED_TANH_SLOPE * x).tanh()
}

/// Derivative of [`scaled_tanh_scalar`] with respect to its input.
pub fn scaled_tanh_derivative(x: f64) -> f64 {
    let t = (SCALED_TANH_SLOPE * x).tanh();
    SCALED_TANH_AMPLITUDE * SCALED_TANH_SLOPE * (1.0 - t * t)
}
