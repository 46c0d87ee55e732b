//! Weight storage and deterministic weight/input synthesis.
//!
//! Kernel layouts (all row-major over the listed axes):
//!
//! * conv / transposed conv: `(ky, kx, ic, oc)` stored under the record
//!   shape `kh x kw x (cin*cout)`
//! * dense: `(input_index, unit)` under the shape `in x units x 1`
//! * biases and batchnorm parameters: one value per output channel,
//!   shape `1 x 1 x n`
//!
//! Synthesis draws kernels uniformly from `[-sqrt(6/fan_in), sqrt(6/fan_in)]`
//! so activation magnitudes hold steady through depth, and biases from
//! `[-1, 1]`; both ranges sit comfortably inside the 10-bit weight format.
//! One ChaCha8 stream seeded from the user's seed feeds the layers in
//! network order, so a given (architecture, seed) pair always produces the
//! same bytes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fxp::WeightF10;
use crate::netmodel::{LayerOp, NetworkSpec, TensorShape};

use super::tensor::Tensor;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum WeightRole {
    Kernel,
    Bias,
}

impl WeightRole {
    pub fn name(self) -> &'static str {
        match self {
            WeightRole::Kernel => "kernel",
            WeightRole::Bias => "bias",
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum WeightData {
    Real32(Vec<f32>),
    WeightF10(Vec<WeightF10>),
}

impl WeightData {
    pub fn len(&self) -> usize {
        match self {
            WeightData::Real32(v) => v.len(),
            WeightData::WeightF10(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype_name(&self) -> &'static str {
        match self {
            WeightData::Real32(_) => "real32",
            WeightData::WeightF10(_) => "weight_f10",
        }
    }

    pub fn to_real(&self) -> Vec<f32> {
        match self {
            WeightData::Real32(v) => v.clone(),
            WeightData::WeightF10(v) => v.iter().map(|w| w.to_f32()).collect(),
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct WeightRecord {
    pub layer_id: String,
    pub role: WeightRole,
    pub shape: TensorShape,
    pub data: WeightData,
}

#[derive(Clone, PartialEq, Debug, Default)]
pub struct WeightStore {
    pub records: Vec<WeightRecord>,
}

impl WeightStore {
    pub fn push(&mut self, record: WeightRecord) -> Result<()> {
        if record.shape.element_count() != record.data.len() as u64 {
            return Err(Error::InvalidArgument(format!(
                "weight record {}/{} has {} values but shape {} needs {}",
                record.layer_id,
                record.role.name(),
                record.data.len(),
                record.shape,
                record.shape.element_count()
            )));
        }
        if self.get(&record.layer_id, record.role).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate weight record for {}/{}",
                record.layer_id,
                record.role.name()
            )));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn get(&self, layer_id: &str, role: WeightRole) -> Option<&WeightRecord> {
        self.records
            .iter()
            .find(|r| r.layer_id == layer_id && r.role == role)
    }
}

/// Fan-in used for the synthesis bound. Transposed convolutions spread
/// `kh*kw` taps over an `s x s` upsampling grid, so each output sees about
/// `kh*kw / s^2` of them per input channel.
fn synthesis_fan_in(op: &LayerOp, in_shape: TensorShape) -> u64 {
    match op {
        LayerOp::Conv2d { kernel, .. } => {
            kernel.0 as u64 * kernel.1 as u64 * in_shape.channels as u64
        }
        LayerOp::ConvTranspose2d { kernel, stride, .. } => {
            let taps = (kernel.0 as u64 * kernel.1 as u64) / (*stride as u64 * *stride as u64);
            taps.max(1) * in_shape.channels as u64
        }
        LayerOp::Dense { .. } => in_shape.element_count(),
        _ => 1,
    }
}

pub(crate) fn kernel_record_shape(op: &LayerOp, in_shape: TensorShape) -> Option<TensorShape> {
    match op {
        LayerOp::Conv2d {
            kernel, filters, ..
        }
        | LayerOp::ConvTranspose2d {
            kernel, filters, ..
        } => Some(TensorShape::new(
            kernel.0,
            kernel.1,
            in_shape.channels * filters,
        )),
        LayerOp::Dense { units, .. } => Some(TensorShape::new(
            in_shape.element_count() as u32,
            *units,
            1,
        )),
        _ => None,
    }
}

fn per_channel_shape(n: u32) -> TensorShape {
    TensorShape::new(1, 1, n)
}

fn output_channels(op: &LayerOp) -> Option<u32> {
    match op {
        LayerOp::Conv2d { filters, .. } | LayerOp::ConvTranspose2d { filters, .. } => {
            Some(*filters)
        }
        LayerOp::Dense { units, .. } => Some(*units),
        _ => None,
    }
}

/// Deterministic pseudo-random weights for every parameterised layer of
/// `net`.
pub fn seeded_weights(net: &NetworkSpec, seed: u64) -> Result<WeightStore> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = WeightStore::default();
    for (index, layer) in net.layers.iter().enumerate() {
        let (in_shape, _) = net.layer_io(index)?;
        if let Some(kernel_shape) = kernel_record_shape(&layer.op, in_shape) {
            let bound = (6.0 / synthesis_fan_in(&layer.op, in_shape) as f64).sqrt() as f32;
            let n = kernel_shape.element_count() as usize;
            let values: Vec<f32> = (0..n).map(|_| rng.gen_range(-bound..=bound)).collect();
            store.push(WeightRecord {
                layer_id: layer.id.clone(),
                role: WeightRole::Kernel,
                shape: kernel_shape,
                data: WeightData::Real32(values),
            })?;
            let out_c = output_channels(&layer.op).expect("weighted layer has output channels");
            let bias: Vec<f32> = (0..out_c).map(|_| rng.gen_range(-1.0..=1.0f32)).collect();
            store.push(WeightRecord {
                layer_id: layer.id.clone(),
                role: WeightRole::Bias,
                shape: per_channel_shape(out_c),
                data: WeightData::Real32(bias),
            })?;
        } else if matches!(layer.op, LayerOp::BatchNorm) {
            let c = in_shape.channels;
            let scale: Vec<f32> = (0..c).map(|_| rng.gen_range(0.5..=1.5f32)).collect();
            let shift: Vec<f32> = (0..c).map(|_| rng.gen_range(-1.0..=1.0f32)).collect();
            store.push(WeightRecord {
                layer_id: layer.id.clone(),
                role: WeightRole::Kernel,
                shape: per_channel_shape(c),
                data: WeightData::Real32(scale),
            })?;
            store.push(WeightRecord {
                layer_id: layer.id.clone(),
                role: WeightRole::Bias,
                shape: per_channel_shape(c),
                data: WeightData::Real32(shift),
            })?;
        }
    }
    Ok(store)
}

/// Deterministic input frame: integer samples in `0..=63`, stored as reals
/// so every precision mode starts from exactly the same values.
pub fn seeded_input(shape: TensorShape, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.element_count() as usize;
    let values: Vec<f32> = (0..n).map(|_| rng.gen_range(0u32..=63) as f32).collect();
    Tensor::from_real(shape, values).expect("generated length matches shape")
}
