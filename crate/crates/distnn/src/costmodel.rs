//! Per-layer cost accounting and split-point selection.
//!
//! Three quantities drive the choice of where to cut a network in two:
//!
//! * **data volume** (DV): elements in a layer's output feature map — what a
//!   radio would have to move if the network were cut right after that layer;
//! * **computational cost** (CC): multiply-accumulate operations the layer
//!   performs, either the full analytic count or the MAC-block count a
//!   hardware MAC array would schedule;
//! * **figure of merit** (FoM): `DV x CC`. Transmitting where the FoM is
//!   minimal moves little data after little (node-side) work.
//!
//! Pooling layers carry no table row: they neither multiply nor change the
//! element count in a way the hardware accounts for. Flatten, batchnorm,
//! dropout, and activation layers appear with zero MACs so the table covers
//! every addressable boundary.

use crate::error::{Error, Result};
use crate::netmodel::{LayerKind, LayerOp, LayerSpec, NetworkSpec, TensorShape};

/// Which CC feeds the figure of merit.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum CostMode {
    /// Full multiply-accumulate counts (kernel x input channels x output).
    #[default]
    Analytic,
    /// MAC-block counts as scheduled on the node array, which fold the
    /// per-block kernel work out of the figure.
    Table,
}

/// Whether a candidate's CC is its own or the running node-side total.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum FomScope {
    #[default]
    PerLayer,
    /// Inclusive prefix sum: everything the node computes up to and
    /// including the candidate layer.
    Cumulative,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct CostConfig {
    pub cost_mode: CostMode,
    pub fom_scope: FomScope,
}

/// MAC-array implementation style; determines how output blocks decompose.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub enum Implementation {
    /// One block per output element; all `kh x kw` kernel taps in parallel.
    #[default]
    Parallel,
    /// `kh` blocks per output element; each handles one kernel row of `kh`
    /// sequential taps.
    Serial,
}

impl Implementation {
    pub fn name(self) -> &'static str {
        match self {
            Implementation::Parallel => "parallel",
            Implementation::Serial => "serial",
        }
    }
}

/// One cost-table row.
#[derive(Clone, PartialEq, Debug)]
pub struct LayerCost {
    pub layer_id: String,
    pub kind: LayerKind,
    pub out_shape: TensorShape,
    pub dv: u64,
    pub macs_analytic: u64,
    pub blocks_parallel: u64,
    pub blocks_serial: u64,
    pub fom: f64,
    pub dv_rel: f64,
    pub cc_rel: f64,
    pub fom_rel: f64,
}

/// Elements in a feature map.
pub fn data_volume(shape: TensorShape) -> u64 {
    shape.element_count()
}

/// Multiply-accumulates for a conv-kind layer: every output element costs
/// one kernel's worth of taps across all input channels.
pub fn mac_count_conv(
    layer: &LayerSpec,
    in_shape: TensorShape,
    out_shape: TensorShape,
) -> Result<u64> {
    let kernel = match &layer.op {
        LayerOp::Conv2d { kernel, .. } | LayerOp::ConvTranspose2d { kernel, .. } => *kernel,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "layer {:?} is {}, not a convolution",
                layer.id,
                layer.kind()
            )))
        }
    };
    checked_product(
        &[
            kernel.0 as u64,
            kernel.1 as u64,
            in_shape.channels as u64,
            out_shape.height as u64,
            out_shape.width as u64,
            out_shape.channels as u64,
        ],
        &layer.id,
    )
}

/// Multiply-accumulates for a dense layer: full input-by-output crossbar.
pub fn mac_count_dense(input_elements: u64, units: u64) -> u64 {
    input_elements * units
}

/// MAC blocks a conv-kind layer occupies on the node array.
///
/// A parallel array spends one block per output element (`H x W x C` of the
/// output map, kernel taps concurrent inside the block); a serial array
/// splits each of those into `kh` row blocks.
pub fn mac_blocks(
    layer: &LayerSpec,
    out_shape: TensorShape,
    implementation: Implementation,
) -> Result<u64> {
    let kernel = match &layer.op {
        LayerOp::Conv2d { kernel, .. } | LayerOp::ConvTranspose2d { kernel, .. } => *kernel,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "layer {:?} is {}, not a convolution",
                layer.id,
                layer.kind()
            )))
        }
    };
    let parallel = out_shape.element_count();
    Ok(match implementation {
        Implementation::Parallel => parallel,
        Implementation::Serial => parallel * kernel.0 as u64,
    })
}

/// MACs per block for the given kernel: all taps for a parallel block, one
/// kernel row for a serial block.
pub fn macs_per_block(kernel: (u32, u32), implementation: Implementation) -> u64 {
    match implementation {
        Implementation::Parallel => kernel.0 as u64 * kernel.1 as u64,
        Implementation::Serial => kernel.0 as u64,
    }
}

/// Builds the cost table: one row per layer in network order, pooling layers
/// excluded (they are pure shape transforms with no table entry).
pub fn cost_table(net: &NetworkSpec, cfg: &CostConfig) -> Result<Vec<LayerCost>> {
    if !net.is_inferred() {
        return Err(Error::InvalidArgument(
            "cost_table requires a shape-inferred network".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut cc_values = Vec::new();
    let mut cc_running: u64 = 0;

    for (index, layer) in net.layers.iter().enumerate() {
        if layer.kind() == LayerKind::MaxPool {
            continue;
        }
        let (in_shape, out_shape) = net.layer_io(index)?;
        let macs = match &layer.op {
            LayerOp::Conv2d { .. } | LayerOp::ConvTranspose2d { .. } => {
                mac_count_conv(layer, in_shape, out_shape)?
            }
            LayerOp::Dense { units, .. } => {
                mac_count_dense(in_shape.element_count(), *units as u64)
            }
            _ => 0,
        };
        let (blocks_parallel, blocks_serial) = if layer.kind().is_conv() {
            (
                mac_blocks(layer, out_shape, Implementation::Parallel)?,
                mac_blocks(layer, out_shape, Implementation::Serial)?,
            )
        } else {
            (0, 0)
        };
        let cc_own = match cfg.cost_mode {
            CostMode::Analytic => macs,
            CostMode::Table => {
                if layer.kind().is_conv() {
                    blocks_parallel
                } else {
                    macs
                }
            }
        };
        cc_running = cc_running.checked_add(cc_own).ok_or_else(|| {
            Error::InvalidArgument(format!("cumulative CC overflows at layer {:?}", layer.id))
        })?;
        let cc = match cfg.fom_scope {
            FomScope::PerLayer => cc_own,
            FomScope::Cumulative => cc_running,
        };
        let dv = data_volume(out_shape);
        cc_values.push(cc);
        rows.push(LayerCost {
            layer_id: layer.id.clone(),
            kind: layer.kind(),
            out_shape,
            dv,
            macs_analytic: macs,
            blocks_parallel,
            blocks_serial,
            fom: dv as f64 * cc as f64,
            dv_rel: 0.0,
            cc_rel: 0.0,
            fom_rel: 0.0,
        });
    }

    if rows.is_empty() {
        return Err(Error::InvalidArgument(
            "network has no cost-bearing layers".into(),
        ));
    }

    let dv_max = rows.iter().map(|r| r.dv).max().unwrap_or(0);
    let cc_max = cc_values.iter().copied().max().unwrap_or(0);
    let fom_max = rows.iter().map(|r| r.fom).fold(0.0f64, f64::max);
    for (row, cc) in rows.iter_mut().zip(&cc_values) {
        row.dv_rel = rel(row.dv as f64, dv_max as f64);
        row.cc_rel = rel(*cc as f64, cc_max as f64);
        row.fom_rel = rel(row.fom, fom_max);
    }
    Ok(rows)
}

fn rel(value: f64, max: f64) -> f64 {
    if max > 0.0 {
        value / max
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SplitOptions {
    /// Admit zero-MAC rows (flatten, batchnorm, dropout, activation) as
    /// split candidates. Off by default: a zero-cost layer always ties for
    /// the minimum FoM at zero and would shadow the real boundary choices.
    pub allow_zero_cost: bool,
}

/// The layer id with the minimum figure of merit among split candidates;
/// ties resolve to the earliest layer.
pub fn select_split(costs: &[LayerCost]) -> Result<&str> {
    select_split_with(costs, SplitOptions::default())
}

pub fn select_split_with(costs: &[LayerCost], options: SplitOptions) -> Result<&str> {
    if costs.is_empty() {
        return Err(Error::InvalidArgument("empty cost table".into()));
    }
    let mut best: Option<&LayerCost> = None;
    for row in costs {
        if !options.allow_zero_cost && !row.kind.has_macs() {
            continue;
        }
        match best {
            Some(current) if row.fom >= current.fom => {}
            _ => best = Some(row),
        }
    }
    best.map(|row| row.layer_id.as_str()).ok_or_else(|| {
        Error::InvalidArgument("no split candidates (no conv or dense layers)".into())
    })
}

/// Analytic MACs on each side of a split: (node including the split layer,
/// hub after it).
pub fn split_macs(costs: &[LayerCost], split_id: &str) -> Result<(u64, u64)> {
    let index = costs
        .iter()
        .position(|r| r.layer_id == split_id)
        .ok_or_else(|| Error::UnknownLayer(split_id.to_string()))?;
    let node = costs[..=index].iter().map(|r| r.macs_analytic).sum();
    let hub = costs[index + 1..].iter().map(|r| r.macs_analytic).sum();
    Ok((node, hub))
}

pub fn total_macs(costs: &[LayerCost]) -> u64 {
    costs.iter().map(|r| r.macs_analytic).sum()
}

fn checked_product(factors: &[u64], layer: &str) -> Result<u64> {
    let mut acc: u128 = 1;
    for &f in factors {
        acc *= f as u128;
    }
    u64::try_from(acc).map_err(|_| {
        Error::InvalidArgument(format!("MAC count overflows at layer {layer:?}"))
    })
}
