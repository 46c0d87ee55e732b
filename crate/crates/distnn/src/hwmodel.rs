//! Energy, power, and latency accounting for the node's MAC array.
//!
//! The node schedules convolutions as MAC blocks (see
//! [`costmodel::mac_blocks`]); each (kernel size, implementation) pair has a
//! measured per-block energy, and one block retires per clock cycle. Power
//! follows from energy and the frame rate:
//!
//! ```text
//! power = energy_per_inference x frames_per_second [x memory overhead]
//! ```
//!
//! Only conv-kind layers occupy the array. Dense and shape-transform layers
//! contribute zero blocks to node reports; their full MAC counts still show
//! up in the analytic energy used by feasibility checks
//! ([`crate::commmodel::feasibility`]).

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::costmodel::{macs_per_block, Implementation, LayerCost};
use crate::error::{Error, Result};
use crate::netmodel::NetworkSpec;

pub const PICOJOULE: f64 = 1e-12;

#[derive(Clone, PartialEq, Debug)]
pub struct HwConfig {
    pub implementation: Implementation,
    /// Measured energy per MAC block, keyed by (kernel, implementation).
    pub block_energy: BTreeMap<((u32, u32), Implementation), f64>,
    /// Flat per-MAC energy: the fallback for kernels missing from
    /// `block_energy`, and the basis of analytic (per-MAC) energy totals.
    pub energy_per_mac: f64,
    pub clock_hz: f64,
    pub fps: f64,
    /// Multiplier covering memory traffic around the array.
    pub mem_overhead_factor: f64,
    /// Whether reported powers include `mem_overhead_factor`.
    pub overhead_applied: bool,
    /// Allow kernels missing from `block_energy` to fall back to
    /// `energy_per_mac x macs_per_block`; when false they are errors.
    pub per_mac_fallback: bool,
}

impl Default for HwConfig {
    fn default() -> Self {
        let mut block_energy = BTreeMap::new();
        block_energy.insert(((5, 5), Implementation::Parallel), 8.0 * PICOJOULE);
        block_energy.insert(((3, 3), Implementation::Parallel), 1.75 * PICOJOULE);
        block_energy.insert(((5, 5), Implementation::Serial), 6.0 * PICOJOULE);
        block_energy.insert(((3, 3), Implementation::Serial), 2.0 * PICOJOULE);
        HwConfig {
            implementation: Implementation::Parallel,
            block_energy,
            energy_per_mac: 1.2 * PICOJOULE,
            clock_hz: 1e8,
            fps: 30.0,
            mem_overhead_factor: 1.8,
            overhead_applied: false,
            per_mac_fallback: true,
        }
    }
}

impl HwConfig {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&str, f64); 5] = [
            ("energy_per_mac", self.energy_per_mac),
            ("clock_hz", self.clock_hz),
            ("fps", self.fps),
            ("mem_overhead_factor", self.mem_overhead_factor),
            ("block energies", self.block_energy.values().copied().fold(1.0, f64::min)),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive and finite"
                )));
            }
        }
        Ok(())
    }

    /// Energy of one MAC block for `kernel` under `implementation`.
    pub fn block_energy(&self, kernel: (u32, u32), implementation: Implementation) -> Result<f64> {
        if let Some(&e) = self.block_energy.get(&(kernel, implementation)) {
            return Ok(e);
        }
        if self.per_mac_fallback {
            return Ok(self.energy_per_mac * macs_per_block(kernel, implementation) as f64);
        }
        Err(Error::InvalidArgument(format!(
            "no block energy for {}x{} kernel under {} implementation",
            kernel.0,
            kernel.1,
            implementation.name()
        )))
    }

    fn overhead(&self) -> f64 {
        if self.overhead_applied {
            self.mem_overhead_factor
        } else {
            1.0
        }
    }
}

/// Per-inference energy of one layer's block schedule.
pub fn layer_energy(blocks: u64, kernel: (u32, u32), cfg: &HwConfig) -> Result<f64> {
    Ok(blocks as f64 * cfg.block_energy(kernel, cfg.implementation)?)
}

/// Continuous power when the layer runs once per frame.
pub fn layer_power(energy_j: f64, cfg: &HwConfig) -> f64 {
    energy_j * cfg.fps * cfg.overhead()
}

/// Time to retire all blocks at one block per cycle.
pub fn layer_latency(blocks: u64, cfg: &HwConfig) -> f64 {
    blocks as f64 / cfg.clock_hz
}

#[derive(Clone, PartialEq, Debug)]
pub struct HwLayerRow {
    pub layer_id: String,
    pub kernel: Option<(u32, u32)>,
    pub blocks: u64,
    pub energy_j: f64,
    pub power_w: f64,
    pub latency_s: f64,
}

#[derive(Clone, PartialEq, Debug)]
pub struct HwReport {
    pub rows: Vec<HwLayerRow>,
    pub total_energy_j: f64,
    pub total_power_w: f64,
    pub total_latency_s: f64,
    pub config: HwConfig,
}

/// Energy/power/latency for every node-side layer (up to and including the
/// split). Layers without a block schedule — dense, pooling, and the other
/// shape transforms — appear with zero blocks so the report covers the whole
/// node segment.
pub fn node_report(
    net: &NetworkSpec,
    costs: &[LayerCost],
    split_id: &str,
    cfg: &HwConfig,
) -> Result<HwReport> {
    cfg.validate()?;
    let split_index = net.layer_index(split_id)?;
    let by_id: BTreeMap<&str, &LayerCost> =
        costs.iter().map(|r| (r.layer_id.as_str(), r)).collect();

    let mut rows = Vec::new();
    for layer in &net.layers[..=split_index] {
        let kernel = layer.op.kernel().filter(|_| layer.kind().is_conv());
        let (blocks, energy_j) = match kernel {
            Some(k) => {
                let cost = by_id.get(layer.id.as_str()).ok_or_else(|| {
                    Error::Internal(format!("cost table is missing layer {:?}", layer.id))
                })?;
                let blocks = match cfg.implementation {
                    Implementation::Parallel => cost.blocks_parallel,
                    Implementation::Serial => cost.blocks_serial,
                };
                (blocks, layer_energy(blocks, k, cfg)?)
            }
            None => (0, 0.0),
        };
        rows.push(HwLayerRow {
            layer_id: layer.id.clone(),
            kernel,
            blocks,
            energy_j,
            power_w: layer_power(energy_j, cfg),
            latency_s: layer_latency(blocks, cfg),
        });
    }

    let total_energy_j: f64 = rows.iter().map(|r| r.energy_j).sum();
    let total_latency_s: f64 = rows.iter().map(|r| r.latency_s).sum();
    Ok(HwReport {
        total_energy_j,
        total_power_w: layer_power(total_energy_j, cfg),
        total_latency_s,
        rows,
        config: cfg.clone(),
    })
}

/// A published general-purpose accelerator to compare the node against.
#[derive(Clone, PartialEq, Debug)]
pub struct BaselineEntry {
    pub name: String,
    pub energy_per_mac: f64,
    pub source_note: String,
}

#[derive(Clone, PartialEq, Debug)]
pub struct BaselineRow {
    pub name: String,
    pub power_w: f64,
    /// Baseline power over node power; > 1 means the node wins.
    pub ratio: f64,
}

/// Power each baseline would burn running the same `macs` per frame, and its
/// ratio to the node's power (`node_energy_j x fps`).
pub fn compare_baselines(
    node_energy_j: f64,
    fps: f64,
    baselines: &[BaselineEntry],
    macs: u64,
) -> Result<Vec<BaselineRow>> {
    if !(node_energy_j > 0.0) || !(fps > 0.0) {
        return Err(Error::InvalidArgument(
            "baseline comparison needs positive node energy and fps".into(),
        ));
    }
    let node_power = node_energy_j * fps;
    Ok(baselines
        .iter()
        .map(|b| {
            let power_w = macs as f64 * b.energy_per_mac * fps;
            BaselineRow {
                name: b.name.clone(),
                power_w,
                ratio: power_w / node_power,
            }
        })
        .collect())
}

// --- configuration files ----------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HwConfigFile {
    implementation: Option<String>,
    energy_per_mac_pj: Option<f64>,
    clock_hz: Option<f64>,
    fps: Option<f64>,
    mem_overhead_factor: Option<f64>,
    overhead_applied: Option<bool>,
    per_mac_fallback: Option<bool>,
    #[serde(default)]
    block_energy_pj: Vec<BlockEnergyEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockEnergyEntry {
    kernel: [u32; 2],
    implementation: String,
    picojoules: f64,
}

fn parse_implementation(name: &str) -> Result<Implementation> {
    match name {
        "parallel" => Ok(Implementation::Parallel),
        "serial" => Ok(Implementation::Serial),
        other => Err(Error::InvalidArgument(format!(
            "implementation must be \"parallel\" or \"serial\", got {other:?}"
        ))),
    }
}

/// Applies a partial-override config document on top of the defaults.
pub fn config_from_json(document: &str) -> Result<HwConfig> {
    let file: HwConfigFile =
        serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;
    let mut cfg = HwConfig::default();
    if let Some(name) = &file.implementation {
        cfg.implementation = parse_implementation(name)?;
    }
    if let Some(pj) = file.energy_per_mac_pj {
        cfg.energy_per_mac = pj * PICOJOULE;
    }
    if let Some(v) = file.clock_hz {
        cfg.clock_hz = v;
    }
    if let Some(v) = file.fps {
        cfg.fps = v;
    }
    if let Some(v) = file.mem_overhead_factor {
        cfg.mem_overhead_factor = v;
    }
    if let Some(v) = file.overhead_applied {
        cfg.overhead_applied = v;
    }
    if let Some(v) = file.per_mac_fallback {
        cfg.per_mac_fallback = v;
    }
    for entry in &file.block_energy_pj {
        let implementation = parse_implementation(&entry.implementation)?;
        cfg.block_energy.insert(
            ((entry.kernel[0], entry.kernel[1]), implementation),
            entry.picojoules * PICOJOULE,
        );
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<HwConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    config_from_json(&text)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BaselineFileEntry {
    name: String,
    energy_per_mac_pj: f64,
    #[serde(default)]
    source_note: String,
}

pub fn baselines_from_json(document: &str) -> Result<Vec<BaselineEntry>> {
    let entries: Vec<BaselineFileEntry> =
        serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;
    Ok(entries
        .into_iter()
        .map(|e| BaselineEntry {
            name: e.name,
            energy_per_mac: e.energy_per_mac_pj * PICOJOULE,
            source_note: e.source_note,
        })
        .collect())
}

pub fn load_baselines(path: &Path) -> Result<Vec<BaselineEntry>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    baselines_from_json(&text)
}
