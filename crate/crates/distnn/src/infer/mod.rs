//! Split inference: run a network cut at a chosen layer, with the node
//! segment executing at one of three precisions.
//!
//! * `fp32` — both segments run the same f32 engine; splitting is exactly
//!   transparent, to the bit.
//! * `w10-fp` — the node segment's parameters snap through the 10-bit
//!   weight format but arithmetic stays f32: this isolates the error that
//!   comes from weight storage alone.
//! * `w10-f8` — the node segment runs the full integer datapath (8-bit
//!   inputs, Q7.8 activations, saturating 32-bit accumulation); the
//!   boundary tensor is dequantized before the hub continues in f32.

pub mod engine;
pub mod files;
pub mod fixed;
pub mod metrics;
pub mod tensor;
pub mod weights;

pub use engine::{forward_network_real, resolve_real_weights, ResolvedWeights};
pub use files::{read_tensor, read_weights, write_tensor, write_weights};
pub use fixed::{fold_batchnorm, run_node_fixed, FixedStats};
pub use metrics::{psnr_db, quality, quality_json, ssim, Quality};
pub use tensor::{Tensor, TensorData};
pub use weights::{seeded_input, seeded_weights, WeightData, WeightRecord, WeightRole, WeightStore};

use crate::error::{Error, Result};
use crate::netmodel::NetworkSpec;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum PrecisionMode {
    #[default]
    Fp32,
    W10Fp,
    W10F8,
}

impl PrecisionMode {
    pub fn name(self) -> &'static str {
        match self {
            PrecisionMode::Fp32 => "fp32",
            PrecisionMode::W10Fp => "w10-fp",
            PrecisionMode::W10F8 => "w10-f8",
        }
    }
}

impl std::str::FromStr for PrecisionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fp32" => Ok(PrecisionMode::Fp32),
            "w10-fp" => Ok(PrecisionMode::W10Fp),
            "w10-f8" => Ok(PrecisionMode::W10F8),
            other => Err(Error::InvalidArgument(format!(
                "precision must be fp32, w10-fp, or w10-f8, got {other:?}"
            ))),
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct SplitOutcome {
    pub split_id: String,
    pub mode: PrecisionMode,
    /// The tensor that crosses the link, as the hub receives it (always
    /// real-valued: integer boundaries are dequantized before transport).
    pub node_output: Tensor,
    /// Output of the final layer, computed on the hub.
    pub final_output: Tensor,
    /// Integer-datapath counters; present only for `w10-f8`.
    pub fixed_stats: Option<FixedStats>,
}

/// Full-network f32 run with unmodified weights; returns every layer's
/// output. `outputs.last()` is the reference reconstruction.
pub fn run_reference(
    net: &NetworkSpec,
    store: &WeightStore,
    input: &Tensor,
) -> Result<Vec<Tensor>> {
    let weights = resolve_real_weights(net, store, None)?;
    forward_network_real(net, &weights, input)
}

fn forward_segment_real(
    net: &NetworkSpec,
    weights: &ResolvedWeights,
    first: usize,
    mut current: Vec<f32>,
) -> Result<Vec<f32>> {
    for index in first..net.layers.len() {
        let (in_shape, out_shape) = net.layer_io(index)?;
        current = engine::forward_layer_real(
            &net.layers[index],
            in_shape,
            out_shape,
            &current,
            weights.kernels[index].as_deref(),
            weights.biases[index].as_deref(),
        )?;
    }
    Ok(current)
}

/// Runs `net` split after `split_id`: layers up to and including the split
/// execute as the node, the rest as the hub.
pub fn run_split(
    net: &NetworkSpec,
    store: &WeightStore,
    input: &Tensor,
    split_id: &str,
    mode: PrecisionMode,
) -> Result<SplitOutcome> {
    let split_index = net.layer_index(split_id)?;
    let (node_output, fixed_stats, hub_weights) = match mode {
        PrecisionMode::Fp32 | PrecisionMode::W10Fp => {
            let roundtrip = match mode {
                PrecisionMode::W10Fp => Some(split_index),
                _ => None,
            };
            if input.shape != net.input_shape {
                return Err(Error::InvalidArgument(format!(
                    "input tensor is {}, network expects {}",
                    input.shape, net.input_shape
                )));
            }
            let weights = resolve_real_weights(net, store, roundtrip)?;
            let mut current = input.to_real_values();
            for index in 0..=split_index {
                let (in_shape, out_shape) = net.layer_io(index)?;
                current = engine::forward_layer_real(
                    &net.layers[index],
                    in_shape,
                    out_shape,
                    &current,
                    weights.kernels[index].as_deref(),
                    weights.biases[index].as_deref(),
                )?;
            }
            let (_, boundary_shape) = net.layer_io(split_index)?;
            (
                Tensor::from_real(boundary_shape, current)?,
                None,
                weights,
            )
        }
        PrecisionMode::W10F8 => {
            let hub_weights = resolve_real_weights(net, store, None)?;
            let mut node_weights = hub_weights.clone();
            fold_batchnorm(net, &mut node_weights, split_index)?;
            let (boundary, stats) = run_node_fixed(net, &node_weights, split_index, input)?;
            (boundary.to_real(), Some(stats), hub_weights)
        }
    };

    let final_values = forward_segment_real(
        net,
        &hub_weights,
        split_index + 1,
        node_output.to_real_values(),
    )?;
    let final_shape = net.output_shape()?;
    Ok(SplitOutcome {
        split_id: split_id.to_string(),
        mode,
        node_output,
        final_output: Tensor::from_real(final_shape, final_values)?,
        fixed_stats,
    })
}
