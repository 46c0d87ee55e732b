//! Real-valued (f32) forward pass.
//!
//! The accumulation order is part of the contract, because split execution
//! is only transparent if node and hub produce bit-identical reals:
//!
//! * conv2d gathers `(ky, kx, ic)` ascending and adds the bias last;
//!   zero-padded taps are skipped, not added as zeros
//! * conv_transpose2d starts each output at its bias, then gathers the
//!   contributing inputs `(iy, ix, ic)` ascending; taps that fall outside
//!   the kernel are dropped
//! * dense accumulates input index ascending, bias last
//! * maxpool keeps the first element of the window and replaces it only on
//!   strictly greater values; windows truncate at the image edge
//! * relu is `if x > 0 { x } else { 0.0 }`, sigmoid is `1/(1 + exp(-x))`
//!   in f32, tanh is f32 `tanh`
//!
//! All arithmetic is plain f32 adds and multiplies, never fused.

use crate::error::{Error, Result};
use crate::fxp::WeightF10;
use crate::netmodel::{
    Activation, LayerOp, LayerSpec, NetworkSpec, Padding, TensorShape,
};

use super::tensor::Tensor;
use super::weights::{kernel_record_shape, WeightRole, WeightStore};

pub fn apply_activation(a: Activation, x: f32) -> f32 {
    match a {
        Activation::None => x,
        Activation::Relu => {
            if x > 0.0 {
                x
            } else {
                0.0
            }
        }
        Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        Activation::Tanh => x.tanh(),
    }
}

/// Leading zero-pad so the kernel centres match framework conventions for
/// ceil-mode padding.
fn pad_begin(in_d: u32, k: u32, s: u32, out_d: u32) -> i64 {
    let total = ((out_d as i64 - 1) * s as i64 + k as i64 - in_d as i64).max(0);
    total / 2
}

/// `(input_index, kernel_index)` pairs feeding output position `o` of a
/// transposed convolution, input index ascending.
fn transpose_taps(o: usize, k: u32, s: u32, pad: i64, in_d: u32) -> Vec<(usize, usize)> {
    let mut taps = Vec::new();
    for kk in (0..k as i64).rev() {
        let t = o as i64 + pad - kk;
        if t >= 0 && t % s as i64 == 0 {
            let i = t / s as i64;
            if i < in_d as i64 {
                taps.push((i as usize, kk as usize));
            }
        }
    }
    taps
}

#[allow(clippy::too_many_arguments)]
fn conv2d_real(
    input: &[f32],
    in_shape: TensorShape,
    out_shape: TensorShape,
    kernel: &[f32],
    bias: &[f32],
    kh: u32,
    kw: u32,
    stride: u32,
    padding: Padding,
    activation: Activation,
) -> Vec<f32> {
    let (h_in, w_in, cin) = (
        in_shape.height as i64,
        in_shape.width as usize,
        in_shape.channels as usize,
    );
    let w_in_i = in_shape.width as i64;
    let cout = out_shape.channels as usize;
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
                let mut acc = 0.0f32;
                for ky in 0..kh as i64 {
                    let iy = oy * stride as i64 + ky - pad_t;
                    if iy < 0 || iy >= h_in {
                        continue;
                    }
                    for kx in 0..kw as i64 {
                        let ix = ox * stride as i64 + kx - pad_l;
                        if ix < 0 || ix >= w_in_i {
                            continue;
                        }
                        let in_base = (iy as usize * w_in + ix as usize) * cin;
                        let k_base = (ky as usize * kw as usize + kx as usize) * cin * cout;
                        for ic in 0..cin {
                            acc += input[in_base + ic] * kernel[k_base + ic * cout + oc];
                        }
                    }
                }
                acc += bias[oc];
                out.push(apply_activation(activation, acc));
            }
        }
    }
    out
}

fn conv_transpose2d_real(
    input: &[f32],
    in_shape: TensorShape,
    out_shape: TensorShape,
    kernel: &[f32],
    bias: &[f32],
    kh: u32,
    kw: u32,
    stride: u32,
    activation: Activation,
) -> Vec<f32> {
    let cin = in_shape.channels as usize;
    let cout = out_shape.channels as usize;
    let w_in = in_shape.width as usize;
    let pad_y = (kh as i64 - stride as i64).max(0) / 2;
    let pad_x = (kw as i64 - stride as i64).max(0) / 2;
    let taps_x: Vec<Vec<(usize, usize)>> = (0..out_shape.width as usize)
        .map(|ox| transpose_taps(ox, kw, stride, pad_x, in_shape.width))
        .collect();
    let mut out = Vec::with_capacity(out_shape.element_count() as usize);
    for oy in 0..out_shape.height as usize {
        let taps_y = transpose_taps(oy, kh, stride, pad_y, in_shape.height);
        for taps_x in taps_x.iter() {
            for oc in 0..cout {
                let mut acc = bias[oc];
                for &(iy, ky) in &taps_y {
                    for &(ix, kx) in taps_x {
                        let in_base = (iy * w_in + ix) * cin;
                        let k_base = (ky * kw as usize + kx) * cin * cout;
                        for ic in 0..cin {
                            acc += input[in_base + ic] * kernel[k_base + ic * cout + oc];
                        }
                    }
                }
                out.push(apply_activation(activation, acc));
            }
        }
    }
    out
}

fn dense_real(input: &[f32], kernel: &[f32], bias: &[f32], units: usize, activation: Activation) -> Vec<f32> {
    let mut out = Vec::with_capacity(units);
    for u in 0..units {
        let mut acc = 0.0f32;
        for (i, x) in input.iter().enumerate() {
            acc += x * kernel[i * units + u];
        }
        acc += bias[u];
        out.push(apply_activation(activation, acc));
    }
    out
}

fn maxpool_real(
    input: &[f32],
    in_shape: TensorShape,
    out_shape: TensorShape,
    kh: u32,
    kw: u32,
    stride: u32,
) -> Vec<f32> {
    let c = in_shape.channels as usize;
    let w_in = in_shape.width as usize;
    let mut out = Vec::with_capacity(out_shape.element_count() as usize);
    for oy in 0..out_shape.height as usize {
        for ox in 0..out_shape.width as usize {
            for ch in 0..c {
                let mut best: Option<f32> = None;
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
                        let v = input[(iy * w_in + ix) * c + ch];
                        match best {
                            Some(b) if v <= b => {}
                            _ => best = Some(v),
                        }
                    }
                }
                out.push(best.expect("pool window overlaps the image"));
            }
        }
    }
    out
}

/// Runs one layer on a real-valued activation buffer.
pub fn forward_layer_real(
    layer: &LayerSpec,
    in_shape: TensorShape,
    out_shape: TensorShape,
    input: &[f32],
    kernel: Option<&[f32]>,
    bias: Option<&[f32]>,
) -> Result<Vec<f32>> {
    let need_kernel = || {
        kernel.ok_or_else(|| Error::layer(&layer.id, "no kernel weights resolved for this layer"))
    };
    Ok(match &layer.op {
        LayerOp::Conv2d {
            kernel: k,
            stride,
            padding,
            activation,
            ..
        } => conv2d_real(
            input,
            in_shape,
            out_shape,
            need_kernel()?,
            bias.ok_or_else(|| Error::layer(&layer.id, "no bias resolved for this layer"))?,
            k.0,
            k.1,
            *stride,
            *padding,
            *activation,
        ),
        LayerOp::ConvTranspose2d {
            kernel: k,
            stride,
            activation,
            ..
        } => conv_transpose2d_real(
            input,
            in_shape,
            out_shape,
            need_kernel()?,
            bias.ok_or_else(|| Error::layer(&layer.id, "no bias resolved for this layer"))?,
            k.0,
            k.1,
            *stride,
            *activation,
        ),
        LayerOp::Dense { units, activation } => dense_real(
            input,
            need_kernel()?,
            bias.ok_or_else(|| Error::layer(&layer.id, "no bias resolved for this layer"))?,
            *units as usize,
            *activation,
        ),
        LayerOp::MaxPool { kernel: k, stride } => {
            maxpool_real(input, in_shape, out_shape, k.0, k.1, *stride)
        }
        LayerOp::Flatten | LayerOp::Dropout => input.to_vec(),
        LayerOp::BatchNorm => {
            let c = in_shape.channels as usize;
            let mut out = Vec::with_capacity(input.len());
            for (i, x) in input.iter().enumerate() {
                let ch = i % c;
                let scale = kernel.map_or(1.0, |k| k[ch]);
                let shift = bias.map_or(0.0, |b| b[ch]);
                out.push(x * scale + shift);
            }
            out
        }
        LayerOp::Activation { activation } => input
            .iter()
            .map(|&x| apply_activation(*activation, x))
            .collect(),
    })
}

/// Per-layer f32 parameters, unpacked from a [`WeightStore`] and validated
/// against the network's resolved shapes.
#[derive(Clone, PartialEq, Debug)]
pub struct ResolvedWeights {
    pub kernels: Vec<Option<Vec<f32>>>,
    pub biases: Vec<Option<Vec<f32>>>,
}

fn roundtrip_f10(values: &mut [f32]) {
    for v in values {
        *v = WeightF10::quantize(*v).to_f32();
    }
}

/// Pulls every layer's parameters out of `store` as f32 vectors. Weighted
/// layers must have a kernel; a missing bias is zeros. Batchnorm reads its
/// per-channel scale from the kernel role and shift from the bias role,
/// both optional. Layers up to and including `roundtrip_until` get every
/// parameter snapped through the 10-bit weight format.
pub fn resolve_real_weights(
    net: &NetworkSpec,
    store: &WeightStore,
    roundtrip_until: Option<usize>,
) -> Result<ResolvedWeights> {
    let mut kernels = Vec::with_capacity(net.layers.len());
    let mut biases = Vec::with_capacity(net.layers.len());
    for (index, layer) in net.layers.iter().enumerate() {
        let (in_shape, out_shape) = net.layer_io(index)?;
        let expected_kernel = match &layer.op {
            LayerOp::BatchNorm => Some(TensorShape::new(1, 1, in_shape.channels)),
            op => kernel_record_shape(op, in_shape),
        };
        let mut kernel = None;
        let mut bias = None;
        if let Some(expected) = expected_kernel {
            let record = store.get(&layer.id, WeightRole::Kernel);
            match record {
                Some(r) => {
                    if r.shape != expected {
                        return Err(Error::layer(
                            &layer.id,
                            format!("kernel record has shape {}, expected {expected}", r.shape),
                        ));
                    }
                    kernel = Some(r.data.to_real());
                }
                None if matches!(layer.op, LayerOp::BatchNorm) => {}
                None => {
                    return Err(Error::layer(&layer.id, "weights file has no kernel record"))
                }
            }
            let bias_len = match &layer.op {
                LayerOp::BatchNorm => in_shape.channels,
                _ => out_shape.channels,
            };
            let expected_bias = TensorShape::new(1, 1, bias_len);
            match store.get(&layer.id, WeightRole::Bias) {
                Some(r) => {
                    if r.shape != expected_bias {
                        return Err(Error::layer(
                            &layer.id,
                            format!("bias record has shape {}, expected {expected_bias}", r.shape),
                        ));
                    }
                    bias = Some(r.data.to_real());
                }
                None if matches!(layer.op, LayerOp::BatchNorm) => {}
                None => bias = Some(vec![0.0; bias_len as usize]),
            }
        }
        if roundtrip_until.is_some_and(|end| index <= end) {
            if let Some(k) = &mut kernel {
                roundtrip_f10(k);
            }
            if let Some(b) = &mut bias {
                roundtrip_f10(b);
            }
        }
        kernels.push(kernel);
        biases.push(bias);
    }
    Ok(ResolvedWeights { kernels, biases })
}

/// Full forward pass; returns every layer's output in order.
pub fn forward_network_real(
    net: &NetworkSpec,
    weights: &ResolvedWeights,
    input: &Tensor,
) -> Result<Vec<Tensor>> {
    if input.shape != net.input_shape {
        return Err(Error::InvalidArgument(format!(
            "input tensor is {}, network expects {}",
            input.shape, net.input_shape
        )));
    }
    let mut current = input.to_real_values();
    let mut outputs = Vec::with_capacity(net.layers.len());
    for (index, layer) in net.layers.iter().enumerate() {
        let (in_shape, out_shape) = net.layer_io(index)?;
        current = forward_layer_real(
            layer,
            in_shape,
            out_shape,
            &current,
            weights.kernels[index].as_deref(),
            weights.biases[index].as_deref(),
        )?;
        outputs.push(Tensor::from_real(out_shape, current.clone())?);
    }
    Ok(outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::parse_inferred;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn activations_behave() {
        assert_eq!(apply_activation(Activation::Relu, -3.0), 0.0);
        assert_eq!(apply_activation(Activation::Relu, 2.5), 2.5);
        assert_eq!(apply_activation(Activation::Sigmoid, 0.0), 0.5);
        assert_eq!(apply_activation(Activation::Tanh, 0.0), 0.0);
        assert_eq!(apply_activation(Activation::None, -7.0), -7.0);
        assert!(apply_activation(Activation::Sigmoid, 10.0) > 0.9999);
    }

    #[test]
    fn one_by_one_conv_is_a_scaled_copy() {
        let in_shape = TensorShape::new(2, 2, 1);
        let out = conv2d_real(
            &[1.0, -2.0, 3.0, 4.0],
            in_shape,
            TensorShape::new(2, 2, 1),
            &[2.0],
            &[0.5],
            1,
            1,
            1,
            Padding::Same,
            Activation::None,
        );
        assert_eq!(out, vec![2.5, -3.5, 6.5, 8.5]);

        let relu = conv2d_real(
            &[1.0, -2.0, 3.0, 4.0],
            in_shape,
            TensorShape::new(2, 2, 1),
            &[2.0],
            &[0.5],
            1,
            1,
            1,
            Padding::Same,
            Activation::Relu,
        );
        assert_eq!(relu, vec![2.5, 0.0, 6.5, 8.5]);
    }

    #[test]
    fn same_padding_sums_only_real_taps() {
        // 3x3 ones kernel over a 3x3 ones image, stride 1: corners see a
        // 2x2 neighbourhood, edges 2x3, centre the full 3x3.
        let out = conv2d_real(
            &[1.0; 9],
            TensorShape::new(3, 3, 1),
            TensorShape::new(3, 3, 1),
            &[1.0; 9],
            &[0.0],
            3,
            3,
            1,
            Padding::Same,
            Activation::None,
        );
        assert_eq!(out, vec![4.0, 6.0, 4.0, 6.0, 9.0, 6.0, 4.0, 6.0, 4.0]);
    }

    #[test]
    fn valid_padding_drops_the_border() {
        let input: Vec<f32> = (0..16).map(|v| v as f32).collect();
        let out = conv2d_real(
            &input,
            TensorShape::new(4, 4, 1),
            TensorShape::new(2, 2, 1),
            &[1.0; 9],
            &[0.0],
            3,
            3,
            1,
            Padding::Valid,
            Activation::None,
        );
        // Window sums of the 3x3 blocks anchored at (0,0), (0,1), (1,0), (1,1).
        assert_eq!(out, vec![45.0, 54.0, 81.0, 90.0]);
    }

    #[test]
    fn transposed_conv_upsamples_one_pixel() {
        let out = conv_transpose2d_real(
            &[3.0],
            TensorShape::new(1, 1, 1),
            TensorShape::new(2, 2, 1),
            &[0.5, 1.0, -1.0, 2.0],
            &[0.25],
            2,
            2,
            2,
            Activation::None,
        );
        assert_eq!(out, vec![1.75, 3.25, -2.75, 6.25]);
    }

    #[test]
    fn transposed_conv_matches_scatter_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let in_h = rng.gen_range(1..4u32);
            let in_w = rng.gen_range(1..4u32);
            let cin = rng.gen_range(1..3u32);
            let cout = rng.gen_range(1..3u32);
            let s = rng.gen_range(1..4u32);
            let kh = rng.gen_range(1..5u32);
            let kw = rng.gen_range(1..5u32);
            let in_shape = TensorShape::new(in_h, in_w, cin);
            let out_shape = TensorShape::new(in_h * s, in_w * s, cout);
            let input: Vec<f32> = (0..in_shape.element_count())
                .map(|_| rng.gen_range(-2.0..2.0))
                .collect();
            let kernel: Vec<f32> = (0..(kh * kw * cin * cout) as usize)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let bias: Vec<f32> = (0..cout).map(|_| rng.gen_range(-1.0..1.0)).collect();

            let got = conv_transpose2d_real(
                &input, in_shape, out_shape, &kernel, &bias, kh, kw, s, Activation::None,
            );

            // Scatter formulation: every input pixel stamps the kernel onto
            // the stride-spaced output grid; out-of-range taps vanish.
            let pad_y = (kh as i64 - s as i64).max(0) / 2;
            let pad_x = (kw as i64 - s as i64).max(0) / 2;
            let mut want = vec![0.0f64; got.len()];
            for iy in 0..in_h as i64 {
                for ix in 0..in_w as i64 {
                    for ky in 0..kh as i64 {
                        for kx in 0..kw as i64 {
                            let oy = iy * s as i64 + ky - pad_y;
                            let ox = ix * s as i64 + kx - pad_x;
                            if oy < 0
                                || ox < 0
                                || oy >= out_shape.height as i64
                                || ox >= out_shape.width as i64
                            {
                                continue;
                            }
                            for ic in 0..cin as i64 {
                                for oc in 0..cout as i64 {
                                    let iv = input
                                        [((iy * in_w as i64 + ix) * cin as i64 + ic) as usize];
                                    let kv = kernel[(((ky * kw as i64 + kx) * cin as i64 + ic)
                                        * cout as i64
                                        + oc)
                                        as usize];
                                    want[((oy * out_shape.width as i64 + ox) * cout as i64 + oc)
                                        as usize] += (iv * kv) as f64;
                                }
                            }
                        }
                    }
                }
            }
            for (i, w) in want.iter_mut().enumerate() {
                *w += bias[i % cout as usize] as f64;
            }
            for (g, w) in got.iter().zip(&want) {
                assert!((*g as f64 - w).abs() < 1e-4, "{g} vs {w}");
            }
        }
    }

    #[test]
    fn dense_layer_reference() {
        // Two inputs, three units; kernel rows are per-input.
        let out = dense_real(
            &[2.0, -1.0],
            &[1.0, 0.0, 0.5, 0.0, 1.0, 0.5],
            &[0.0, 10.0, 0.25],
            3,
            Activation::None,
        );
        assert_eq!(out, vec![2.0, 9.0, 0.75]);
    }

    #[test]
    fn maxpool_truncates_windows_at_the_edge() {
        // 1x4 row pooled 3-wide at stride 2: floor(4/2) = 2 outputs, the
        // second window only covers columns 2..4.
        let out = maxpool_real(
            &[1.0, 5.0, 2.0, 3.0],
            TensorShape::new(1, 4, 1),
            TensorShape::new(1, 2, 1),
            1,
            3,
            2,
        );
        assert_eq!(out, vec![5.0, 3.0]);
    }

    fn tiny_net() -> NetworkSpec {
        parse_inferred(
            r#"{
            "name": "tiny",
            "input": [4, 4, 1],
            "layers": [
                {"id": "c1", "type": "conv2d", "kernel": [3, 3], "filters": 2, "stride": 1,
                 "activation": "relu"},
                {"id": "p1", "type": "maxpool", "kernel": [2, 2]},
                {"id": "f1", "type": "flatten"},
                {"id": "d1", "type": "dense", "units": 3}
            ]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn resolve_validates_presence_and_shape() {
        let net = tiny_net();
        let store = super::super::weights::seeded_weights(&net, 5).unwrap();
        let resolved = resolve_real_weights(&net, &store, None).unwrap();
        assert!(resolved.kernels[0].is_some());
        assert!(resolved.kernels[1].is_none());
        assert_eq!(resolved.kernels[3].as_ref().unwrap().len(), 8 * 3);

        let mut missing = store.clone();
        missing.records.retain(|r| r.layer_id != "d1");
        let err = resolve_real_weights(&net, &missing, None).unwrap_err();
        assert!(err.to_string().contains("d1"), "{err}");

        let mut wrong = store.clone();
        for r in &mut wrong.records {
            if r.layer_id == "c1" && r.role == WeightRole::Kernel {
                r.shape = TensorShape::new(3, 3, 4);
            }
        }
        assert!(resolve_real_weights(&net, &wrong, None).is_err());
    }

    #[test]
    fn roundtrip_snaps_to_the_weight_grid() {
        let net = tiny_net();
        let store = super::super::weights::seeded_weights(&net, 5).unwrap();
        let resolved = resolve_real_weights(&net, &store, Some(0)).unwrap();
        for v in resolved.kernels[0].as_ref().unwrap() {
            let scaled = (v * 256.0).round();
            assert_eq!(v * 256.0, scaled, "{v} is off the 1/256 grid");
        }
        // Layers past the cutoff keep their raw values.
        assert_eq!(
            resolved.kernels[3],
            resolve_real_weights(&net, &store, None).unwrap().kernels[3]
        );
    }

    #[test]
    fn forward_pass_produces_declared_shapes() {
        let net = tiny_net();
        let store = super::super::weights::seeded_weights(&net, 5).unwrap();
        let weights = resolve_real_weights(&net, &store, None).unwrap();
        let input = super::super::weights::seeded_input(net.input_shape, 9);
        let outputs = forward_network_real(&net, &weights, &input).unwrap();
        assert_eq!(outputs.len(), 4);
        assert_eq!(outputs[0].shape, TensorShape::new(4, 4, 2));
        assert_eq!(outputs[1].shape, TensorShape::new(2, 2, 2));
        assert_eq!(outputs[3].shape, TensorShape::new(1, 1, 3));
        // relu output is nonnegative.
        assert!(outputs[0].real().unwrap().iter().all(|&v| v >= 0.0));

        let bad_input = super::super::weights::seeded_input(TensorShape::new(3, 3, 1), 9);
        assert!(forward_network_real(&net, &weights, &bad_input).is_err());
    }
}
