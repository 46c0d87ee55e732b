//! Radio cost model and the split feasibility checks built on it.
//!
//! Each protocol is characterised by a published range of per-bit energies
//! and data rates; single-point estimates are the geometric means of those
//! ranges, which behaves sensibly when a range spans decades (LoRa's rate
//! spans 300 bps to 27 kbps).
//!
//! Feasibility compares three energies per inference:
//!
//! * `e_node`  — MACs the node executes, at the node's per-MAC energy
//! * `e_comm`  — shipping the cut tensor across the link
//! * `e_hub`   — MACs the hub executes, at the hub's per-MAC energy
//!
//! against `e_full_node`, the cost of running the whole network locally.

use std::path::Path;

use serde::Deserialize;

use crate::costmodel::{split_macs, LayerCost};
use crate::error::{Error, Result};
use crate::hwmodel::HwConfig;
use crate::netmodel::NetworkSpec;

/// Typical hub-class accelerator energy per MAC (an order of magnitude or
/// two above the node's near-threshold array).
pub const DEFAULT_HUB_ENERGY_PER_MAC: f64 = 10e-12;

pub const DEFAULT_BITS_PER_ELEMENT: u32 = 16;

#[derive(Clone, PartialEq, Debug)]
pub struct ProtocolSpec {
    /// Registry key, e.g. `"ble"`.
    pub name: String,
    /// Human-facing label, e.g. `"BLE"`.
    pub label: String,
    pub energy_min_j_per_bit: f64,
    pub energy_max_j_per_bit: f64,
    pub rate_min_bps: f64,
    pub rate_max_bps: f64,
}

impl ProtocolSpec {
    fn ranged(
        name: &str,
        label: &str,
        energy_j_per_bit: (f64, f64),
        rate_bps: (f64, f64),
    ) -> Self {
        ProtocolSpec {
            name: name.into(),
            label: label.into(),
            energy_min_j_per_bit: energy_j_per_bit.0,
            energy_max_j_per_bit: energy_j_per_bit.1,
            rate_min_bps: rate_bps.0,
            rate_max_bps: rate_bps.1,
        }
    }

    /// Point estimate: geometric mean of the published energy range.
    pub fn energy_point(&self) -> f64 {
        (self.energy_min_j_per_bit * self.energy_max_j_per_bit).sqrt()
    }

    /// Point estimate: geometric mean of the published rate range.
    pub fn rate_point(&self) -> f64 {
        (self.rate_min_bps * self.rate_max_bps).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("energy per bit", self.energy_min_j_per_bit, self.energy_max_j_per_bit),
            ("data rate", self.rate_min_bps, self.rate_max_bps),
        ];
        for (what, min, max) in ranges {
            if !(min > 0.0 && max >= min) || !max.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "protocol {:?}: {what} range must be positive with min <= max",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// The link technologies a body-worn node can realistically use. Ranges are
/// J/bit and bit/s.
pub fn builtin_protocols() -> Vec<ProtocolSpec> {
    vec![
        ProtocolSpec::ranged("ble", "BLE", (1e-8, 5e-8), (125e3, 2e6)),
        ProtocolSpec::ranged("zigbee", "Zigbee", (5e-8, 1e-7), (250e3, 250e3)),
        ProtocolSpec::ranged("wifi-halow", "Wi-Fi HaLow", (5e-9, 1e-8), (10e6, 10e6)),
        ProtocolSpec::ranged("bcc", "BCC", (2e-12, 1e-11), (2e6, 2e6)),
        ProtocolSpec::ranged("lora", "LoRa", (5e-8, 1.5e-7), (300.0, 27e3)),
        ProtocolSpec::ranged("uwb", "UWB", (1e-8, 2e-8), (110e3, 27e6)),
        ProtocolSpec::ranged("backscatter", "Backscatter", (1e-12, 1e-11), (2e6, 2e6)),
    ]
}

pub fn find_protocol<'a>(registry: &'a [ProtocolSpec], name: &str) -> Result<&'a ProtocolSpec> {
    registry
        .iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| {
            let known: Vec<&str> = registry.iter().map(|p| p.name.as_str()).collect();
            Error::UnknownProtocol(format!("{name:?} (known: {})", known.join(", ")))
        })
}

/// Resolves a `--protocol` argument against `registry`. The form
/// `custom:<nJ_per_bit>:<bps>` builds a one-off protocol with degenerate
/// ranges instead of looking one up.
pub fn parse_protocol_arg(registry: &[ProtocolSpec], arg: &str) -> Result<ProtocolSpec> {
    if let Some(rest) = arg.strip_prefix("custom:") {
        let mut parts = rest.split(':');
        let (nj, bps) = match (parts.next(), parts.next(), parts.next()) {
            (Some(nj), Some(bps), None) => (nj, bps),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "custom protocol must be custom:<nJ_per_bit>:<bps>, got {arg:?}"
                )))
            }
        };
        let energy_nj: f64 = nj.parse().map_err(|_| {
            Error::InvalidArgument(format!("custom protocol energy {nj:?} is not a number"))
        })?;
        let rate: f64 = bps.parse().map_err(|_| {
            Error::InvalidArgument(format!("custom protocol rate {bps:?} is not a number"))
        })?;
        let energy = energy_nj * 1e-9;
        let spec = ProtocolSpec::ranged("custom", "Custom", (energy, energy), (rate, rate));
        spec.validate()?;
        return Ok(spec);
    }
    find_protocol(registry, arg).cloned()
}

#[derive(Clone, PartialEq, Debug)]
pub struct CommCost {
    pub bits: u64,
    pub energy_j: f64,
    pub time_s: f64,
}

/// Cost of shipping `dv` tensor elements at `bits_per_element` over one
/// frame. Element widths follow what the serializer can produce: 8, 16, or
/// 32 bits.
pub fn comm_cost(dv: u64, bits_per_element: u32, protocol: &ProtocolSpec) -> Result<CommCost> {
    protocol.validate()?;
    if dv == 0 {
        return Err(Error::InvalidArgument(
            "communication cost of an empty tensor is undefined".into(),
        ));
    }
    if !matches!(bits_per_element, 8 | 16 | 32) {
        return Err(Error::InvalidArgument(format!(
            "bits per element must be 8, 16, or 32, got {bits_per_element}"
        )));
    }
    let bits = dv * bits_per_element as u64;
    Ok(CommCost {
        bits,
        energy_j: bits as f64 * protocol.energy_point(),
        time_s: bits as f64 / protocol.rate_point(),
    })
}

#[derive(Clone, PartialEq, Debug)]
pub struct FeasibilityReport {
    pub split_id: String,
    pub protocol: ProtocolSpec,
    pub bits_per_element: u32,
    pub dv: u64,
    pub node_macs: u64,
    pub hub_macs: u64,
    pub e_node_j: f64,
    pub e_comm_j: f64,
    pub e_hub_j: f64,
    pub e_full_node_j: f64,
    pub comm: CommCost,
}

impl FeasibilityReport {
    /// The node's compute is cheaper than what it hands to the hub would
    /// cost locally at hub efficiency — the split does shift real work.
    pub fn node_lt_hub(&self) -> bool {
        self.e_node_j < self.e_hub_j
    }

    /// Distributing beats running everything on the node: the node-side
    /// compute plus the radio costs less than full local inference.
    pub fn dist_saves(&self) -> bool {
        self.e_node_j + self.e_comm_j < self.e_full_node_j
    }

    /// Node compute energy over radio energy; near 1.0 the two budgets are
    /// balanced, far below 1.0 the radio dominates.
    pub fn balance(&self) -> f64 {
        self.e_node_j / self.e_comm_j
    }
}

/// Energy picture of cutting `net` at `split_id` and shipping the cut tensor
/// over `protocol`. Node and full-node energies use the node's per-MAC
/// energy; hub energy uses `hub_energy_per_mac`.
pub fn feasibility(
    net: &NetworkSpec,
    costs: &[LayerCost],
    split_id: &str,
    hw_cfg: &HwConfig,
    protocol: &ProtocolSpec,
    hub_energy_per_mac: f64,
    bits_per_element: u32,
) -> Result<FeasibilityReport> {
    hw_cfg.validate()?;
    if !(hub_energy_per_mac > 0.0) || !hub_energy_per_mac.is_finite() {
        return Err(Error::InvalidArgument(
            "hub energy per MAC must be positive and finite".into(),
        ));
    }
    net.layer_index(split_id)?;
    let (node_macs, hub_macs) = split_macs(costs, split_id)?;
    let dv = costs
        .iter()
        .find(|r| r.layer_id == split_id)
        .map(|r| r.dv)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "layer {split_id:?} has no cost row to take a data volume from"
            ))
        })?;
    let comm = comm_cost(dv, bits_per_element, protocol)?;
    Ok(FeasibilityReport {
        split_id: split_id.to_string(),
        protocol: protocol.clone(),
        bits_per_element,
        dv,
        node_macs,
        hub_macs,
        e_node_j: node_macs as f64 * hw_cfg.energy_per_mac,
        e_comm_j: comm.energy_j,
        e_hub_j: hub_macs as f64 * hub_energy_per_mac,
        e_full_node_j: (node_macs + hub_macs) as f64 * hw_cfg.energy_per_mac,
        comm,
    })
}

// --- protocol registry files -------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProtocolFileEntry {
    name: String,
    #[serde(default)]
    label: Option<String>,
    energy_nj_per_bit: [f64; 2],
    rate_bps: [f64; 2],
}

pub fn protocols_from_json(document: &str) -> Result<Vec<ProtocolSpec>> {
    let entries: Vec<ProtocolFileEntry> =
        serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;
    let mut registry = Vec::new();
    for e in entries {
        let spec = ProtocolSpec {
            label: e.label.unwrap_or_else(|| e.name.clone()),
            name: e.name,
            energy_min_j_per_bit: e.energy_nj_per_bit[0] * 1e-9,
            energy_max_j_per_bit: e.energy_nj_per_bit[1] * 1e-9,
            rate_min_bps: e.rate_bps[0],
            rate_max_bps: e.rate_bps[1],
        };
        spec.validate()?;
        if registry.iter().any(|p: &ProtocolSpec| p.name == spec.name) {
            return Err(Error::Schema(format!("duplicate protocol name {:?}", spec.name)));
        }
        registry.push(spec);
    }
    if registry.is_empty() {
        return Err(Error::Schema("protocol registry file lists no protocols".into()));
    }
    Ok(registry)
}

pub fn load_protocols(path: &Path) -> Result<Vec<ProtocolSpec>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    protocols_from_json(&text)
}
