//! Integer forward pass for the node segment.
//!
//! The datapath mirrors the hardware: inputs enter as unsigned 8-bit
//! samples, weights are 10-bit sign-magnitude, every layer accumulates in a
//! 32-bit saturating register preloaded with the bias, and results
//! requantize to signed Q7.8 activations. Relu is fused onto the
//! accumulator before requantization; sigmoid and tanh run after it as a
//! 256-entry table indexed by the activation's integer part. Batchnorm
//! cannot execute here directly — [`fold_batchnorm`] absorbs it into the
//! preceding layer's kernel and bias first — and transposed convolutions
//! are not supported on this path at all.
//!
//! Traversal orders match the real engine exactly, so the two paths differ
//! only by quantization, never by schedule.

use crate::error::{Error, Result};
use crate::fxp::{requantize, Acc32, ActS16, ActU8, Rounding, WeightF10, ACT_FRAC_BITS, WEIGHT_FRAC_BITS};
use crate::netmodel::{Activation, LayerOp, NetworkSpec, Padding, TensorShape};

use super::engine::ResolvedWeights;
use super::tensor::{Tensor, TensorData};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct FixedStats {
    /// Outputs whose 32-bit accumulator clipped at least once.
    pub acc_overflows: u64,
    /// Outputs that clipped when narrowing to 16 bits.
    pub requant_saturations: u64,
}

#[derive(Clone, PartialEq, Debug)]
enum FixedBuf {
    U8(Vec<u8>),
    S16(Vec<i16>),
}

impl FixedBuf {
    fn frac_bits(&self) -> u32 {
        match self {
            FixedBuf::U8(_) => 0,
            FixedBuf::S16(_) => ACT_FRAC_BITS,
        }
    }

    fn mac_into(&self, idx: usize, acc: &mut Acc32, w: WeightF10) {
        match self {
            FixedBuf::U8(v) => acc.mac_u8(ActU8 { raw: v[idx] }, w),
            FixedBuf::S16(v) => acc.mac_s16(
                ActS16 {
                    raw: v[idx],
                    frac_bits: ACT_FRAC_BITS,
                },
                w,
            ),
        }
    }

    fn len(&self) -> usize {
        match self {
            FixedBuf::U8(v) => v.len(),
            FixedBuf::S16(v) => v.len(),
        }
    }
}

/// Folds every batchnorm in layers `0..=node_end` into the weighted layer
/// directly before it: the kernel's output-channel columns scale by the
/// batchnorm scale and the bias becomes `bias*scale + shift`. The batchnorm
/// itself is left parameterless (an identity).
pub fn fold_batchnorm(
    net: &NetworkSpec,
    weights: &mut ResolvedWeights,
    node_end: usize,
) -> Result<()> {
    for index in 0..=node_end {
        let layer = &net.layers[index];
        if !matches!(layer.op, LayerOp::BatchNorm) {
            continue;
        }
        let scale = weights.kernels[index].take();
        let shift = weights.biases[index].take();
        if scale.is_none() && shift.is_none() {
            continue;
        }
        let foldable = index > 0
            && matches!(
                net.layers[index - 1].op,
                LayerOp::Conv2d { .. } | LayerOp::ConvTranspose2d { .. } | LayerOp::Dense { .. }
            );
        if !foldable {
            return Err(Error::layer(
                &layer.id,
                "batchnorm on the integer datapath must directly follow a conv or dense layer",
            ));
        }
        let (_, prev_out) = net.layer_io(index - 1)?;
        let cout = prev_out.channels as usize;
        let kernel = weights.kernels[index - 1]
            .as_mut()
            .expect("weighted layers always resolve a kernel");
        if let Some(scale) = &scale {
            for (j, k) in kernel.iter_mut().enumerate() {
                *k *= scale[j % cout];
            }
        }
        let bias = weights.biases[index - 1]
            .as_mut()
            .expect("weighted layers always resolve a bias");
        for (oc, b) in bias.iter_mut().enumerate() {
            let s = scale.as_ref().map_or(1.0, |v| v[oc]);
            let t = shift.as_ref().map_or(0.0, |v| v[oc]);
            *b = *b * s + t;
        }
    }
    Ok(())
}

fn activation_lut(a: Activation) -> [i16; 256] {
    let mut lut = [0i16; 256];
    for (i, slot) in lut.iter_mut().enumerate() {
        let x = (i as i32 - 128) as f32;
        let y = match a {
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
            _ => unreachable!("only saturating activations use the table"),
        };
        let scaled = (y as f64 * (1u32 << ACT_FRAC_BITS) as f64).round();
        *slot = scaled as i16;
    }
    lut
}

fn lut_lookup(lut: &[i16; 256], raw_q78: i16) -> i16 {
    let idx = ((raw_q78 >> ACT_FRAC_BITS) as i8 as i32 + 128) as usize;
    lut[idx]
}

/// Finishes one accumulated output: fused relu, requantize to Q7.8, table
/// activation if any, and stats bookkeeping.
fn finish_output(
    mut acc: Acc32,
    activation: Activation,
    lut: Option<&[i16; 256]>,
    stats: &mut FixedStats,
) -> i16 {
    if activation == Activation::Relu && acc.raw < 0 {
        acc.raw = 0;
    }
    let rq = requantize(&acc, ACT_FRAC_BITS, Rounding::NearestEven);
    stats.acc_overflows += acc.overflowed as u64;
    stats.requant_saturations += rq.saturated as u64;
    match lut {
        Some(table) => lut_lookup(table, rq.raw),
        None => rq.raw,
    }
}

struct QuantizedLayer {
    kernel: Vec<WeightF10>,
    bias_acc: Vec<Acc32>,
    lut: Option<[i16; 256]>,
}

fn quantize_layer(
    kernel: &[f32],
    bias: &[f32],
    acc_frac: u32,
    activation: Activation,
) -> QuantizedLayer {
    QuantizedLayer {
        kernel: kernel.iter().map(|&v| WeightF10::quantize(v)).collect(),
        bias_acc: bias.iter().map(|&b| Acc32::from_bias(b, acc_frac)).collect(),
        lut: match activation {
            Activation::Sigmoid | Activation::Tanh => Some(activation_lut(activation)),
            _ => None,
        },
    }
}

fn pad_begin(in_d: u32, k: u32, s: u32, out_d: u32) -> i64 {
    let total = ((out_d as i64 - 1) * s as i64 + k as i64 - in_d as i64).max(0);
    total / 2
}

#[allow(clippy::too_many_arguments)]
fn conv2d_fixed(
    input: &FixedBuf,
    in_shape: TensorShape,
    out_shape: TensorShape,
    q: &QuantizedLayer,
    kh: u32,
    kw: u32,
    stride: u32,
    padding: Padding,
    activation: Activation,
    stats: &mut FixedStats,
) -> Vec<i16> {
    let acc_frac = input.frac_bits() + WEIGHT_FRAC_BITS;
    debug_assert_eq!(q.bias_acc.first().map_or(acc_frac, |a| a.frac_bits), acc_frac);
    let cin = in_shape.channels as usize;
    let cout = out_shape.channels as usize;
    let w_in = in_shape.width as usize;
    let (pad_t, pad_l) = match padding {
        Padding::Valid => (0, 0),
        Padding::Same => (
            pad_begin(in_shape.height, kh, stride, out_shape.height),
            pad_begin(in_shape.width, kw, stride, out_shape.width),
        ),
    };
    let mut out = Vec::with_capacity(out_shape.element_count() as usize);
    for oy in 0..out_shape.height as i64 {
        for ox in 0..out_shape.width as i64 {
            for oc in 0..cout {
                let mut acc = q.bias_acc[oc];
                for ky in 0..kh as i64 {
                    let iy = oy * stride as i64 + ky - pad_t;
                    if iy < 0 || iy >= in_shape.height as i64 {
                        continue;
                    }
                    for kx in 0..kw as i64 {
                        let ix = ox * stride as i64 + kx - pad_l;
                        if ix < 0 || ix >= in_shape.width as i64 {
                            continue;
                        }
                        let in_base = (iy as usize * w_in + ix as usize) * cin;
                        let k_base = (ky as usize * kw as usize + kx as usize) * cin * cout;
                        for ic in 0..cin {
                            input.mac_into(in_base + ic, &mut acc, q.kernel[k_base + ic * cout + oc]);
                        }
                    }
                }
                out.push(finish_output(acc, activation, q.lut.as_ref(), stats));
            }
        }
    }
    out
}

fn dense_fixed(
    input: &FixedBuf,
    q: &QuantizedLayer,
    units: usize,
    activation: Activation,
    stats: &mut FixedStats,
) -> Vec<i16> {
    let n = input.len();
    let mut out = Vec::with_capacity(units);
    for u in 0..units {
        let mut acc = q.bias_acc[u];
        for i in 0..n {
            input.mac_into(i, &mut acc, q.kernel[i * units + u]);
        }
        out.push(finish_output(acc, activation, q.lut.as_ref(), stats));
    }
    out
}

fn maxpool_fixed(
    input: &FixedBuf,
    in_shape: TensorShape,
    out_shape: TensorShape,
    kh: u32,
    kw: u32,
    stride: u32,
) -> FixedBuf {
    fn pool<T: Copy + PartialOrd>(
        v: &[T],
        in_shape: TensorShape,
        out_shape: TensorShape,
        kh: u32,
        kw: u32,
        stride: u32,
    ) -> Vec<T> {
        let c = in_shape.channels as usize;
        let w_in = in_shape.width as usize;
        let mut out = Vec::with_capacity(out_shape.element_count() as usize);
        for oy in 0..out_shape.height as usize {
            for ox in 0..out_shape.width as usize {
                for ch in 0..c {
                    let mut best: Option<T> = None;
                    for ky in 0..kh as usize {
                        let iy = oy * stride as usize + ky;
                        if iy >= in_shape.height as usize {
                            break;
                        }
                        for kx in 0..kw as usize {
                            let ix = ox * stride as usize + kx;
                            if ix >= w_in {
                                break;
                            }
                            let x = v[(iy * w_in + ix) * c + ch];
                            match best {
                                Some(b) if x <= b => {}
                                _ => best = Some(x),
                            }
                        }
                    }
                    out.push(best.expect("pool window overlaps the image"));
                }
            }
        }
        out
    }
    match input {
        FixedBuf::U8(v) => FixedBuf::U8(pool(v, in_shape, out_shape, kh, kw, stride)),
        FixedBuf::S16(v) => FixedBuf::S16(pool(v, in_shape, out_shape, kh, kw, stride)),
    }
}

fn activation_fixed(input: FixedBuf, a: Activation, stats: &mut FixedStats) -> FixedBuf {
    match a {
        Activation::None => input,
        // Unsigned activations are already nonnegative.
        Activation::Relu => match input {
            FixedBuf::U8(v) => FixedBuf::U8(v),
            FixedBuf::S16(v) => FixedBuf::S16(v.into_iter().map(|x| x.max(0)).collect()),
        },
        Activation::Sigmoid | Activation::Tanh => {
            let lut = activation_lut(a);
            match input {
                FixedBuf::U8(v) => FixedBuf::S16(
                    v.into_iter()
                        .map(|x| {
                            if x > 127 {
                                stats.requant_saturations += 1;
                            }
                            lut[(x.min(127) as i32 + 128) as usize]
                        })
                        .collect(),
                ),
                FixedBuf::S16(v) => {
                    FixedBuf::S16(v.into_iter().map(|x| lut_lookup(&lut, x)).collect())
                }
            }
        }
    }
}

/// Runs layers `0..=node_end` on the integer datapath. The returned tensor
/// is the raw boundary activation (`act_u8` if no weighted layer ran yet,
/// `act_s16` Q7.8 otherwise).
pub fn run_node_fixed(
    net: &NetworkSpec,
    weights: &ResolvedWeights,
    node_end: usize,
    input: &Tensor,
) -> Result<(Tensor, FixedStats)> {
    if input.shape != net.input_shape {
        return Err(Error::InvalidArgument(format!(
            "input tensor is {}, network expects {}",
            input.shape, net.input_shape
        )));
    }
    let mut stats = FixedStats::default();
    let mut buf = FixedBuf::U8(
        input
            .to_real_values()
            .into_iter()
            .map(|v| ActU8::from_real(v).raw)
            .collect(),
    );
    for index in 0..=node_end {
        let layer = &net.layers[index];
        let (in_shape, out_shape) = net.layer_io(index)?;
        buf = match &layer.op {
            LayerOp::Conv2d {
                kernel: k,
                stride,
                padding,
                activation,
                ..
            } => {
                let q = quantize_layer(
                    weights.kernels[index].as_deref().ok_or_else(|| {
                        Error::layer(&layer.id, "no kernel weights resolved for this layer")
                    })?,
                    weights.biases[index].as_deref().unwrap_or(&[]),
                    buf.frac_bits() + WEIGHT_FRAC_BITS,
                    *activation,
                );
                FixedBuf::S16(conv2d_fixed(
                    &buf, in_shape, out_shape, &q, k.0, k.1, *stride, *padding, *activation,
                    &mut stats,
                ))
            }
            LayerOp::Dense { units, activation } => {
                let q = quantize_layer(
                    weights.kernels[index].as_deref().ok_or_else(|| {
                        Error::layer(&layer.id, "no kernel weights resolved for this layer")
                    })?,
                    weights.biases[index].as_deref().unwrap_or(&[]),
                    buf.frac_bits() + WEIGHT_FRAC_BITS,
                    *activation,
                );
                FixedBuf::S16(dense_fixed(&buf, &q, *units as usize, *activation, &mut stats))
            }
            LayerOp::ConvTranspose2d { .. } => {
                return Err(Error::layer(
                    &layer.id,
                    "conv_transpose2d is not supported on the node's integer datapath",
                ));
            }
            LayerOp::MaxPool { kernel: k, stride } => {
                maxpool_fixed(&buf, in_shape, out_shape, k.0, k.1, *stride)
            }
            LayerOp::Flatten | LayerOp::Dropout => buf,
            LayerOp::BatchNorm => {
                if weights.kernels[index].is_some() || weights.biases[index].is_some() {
                    return Err(Error::layer(
                        &layer.id,
                        "batchnorm must be folded before running the integer datapath",
                    ));
                }
                buf
            }
            LayerOp::Activation { activation } => activation_fixed(buf, *activation, &mut stats),
        };
    }
    let (_, boundary_shape) = net.layer_io(node_end)?;
    let tensor = match buf {
        FixedBuf::U8(v) => Tensor::new(boundary_shape, TensorData::ActU8(v))?,
        FixedBuf::S16(v) => Tensor::new(
            boundary_shape,
            TensorData::ActS16 {
                raw: v,
                frac_bits: ACT_FRAC_BITS,
            },
        )?,
    };
    Ok((tensor, stats))
}
