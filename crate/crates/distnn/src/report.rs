//! Report rendering: CSV for machines, aligned text for eyeballs.
//!
//! CSV output is byte-deterministic for a given input: column order is
//! fixed, floats always render as six-digit scientific notation (or plain
//! six-decimal fixed point for the normalized columns), and rows end with
//! `\n`.

use std::fmt::Write as _;

use crate::commmodel::{CommCost, FeasibilityReport, ProtocolSpec};
use crate::costmodel::LayerCost;
use crate::hwmodel::{BaselineRow, HwReport};

pub const COST_CSV_HEADER: &str =
    "layer_id,kind,out_h,out_w,out_c,dv,macs,blocks_parallel,blocks_serial,fom,dv_rel,cc_rel,fom_rel";

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

fn frac(v: f64) -> String {
    format!("{v:.6}")
}

/// `value` with an SI prefix, e.g. `4.1943 uJ`. Only used in text reports.
pub fn si(value: f64, unit: &str) -> String {
    if value == 0.0 {
        return format!("0 {unit}");
    }
    let prefixes: [(f64, &str); 8] = [
        (1e-12, "p"),
        (1e-9, "n"),
        (1e-6, "u"),
        (1e-3, "m"),
        (1.0, ""),
        (1e3, "k"),
        (1e6, "M"),
        (1e9, "G"),
    ];
    let magnitude = value.abs();
    let (scale, prefix) = prefixes
        .iter()
        .rev()
        .find(|(scale, _)| magnitude >= *scale)
        .unwrap_or(&prefixes[0]);
    format!("{:.5} {}{}", value / scale, prefix, unit)
}

fn cost_row(row: &LayerCost) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        row.layer_id,
        row.kind.name(),
        row.out_shape.height,
        row.out_shape.width,
        row.out_shape.channels,
        row.dv,
        row.macs_analytic,
        row.blocks_parallel,
        row.blocks_serial,
        sci(row.fom),
        frac(row.dv_rel),
        frac(row.cc_rel),
        frac(row.fom_rel),
    )
}

/// The normative 13-column cost table.
pub fn cost_csv(costs: &[LayerCost]) -> String {
    let mut out = String::from(COST_CSV_HEADER);
    out.push('\n');
    for row in costs {
        out.push_str(&cost_row(row));
        out.push('\n');
    }
    out
}

/// Cost table with a trailing `split` column flagging the selected layer.
pub fn cost_csv_with_split(costs: &[LayerCost], split_id: &str) -> String {
    let mut out = String::from(COST_CSV_HEADER);
    out.push_str(",split\n");
    for row in costs {
        out.push_str(&cost_row(row));
        out.push(',');
        if row.layer_id == split_id {
            out.push_str("SPLIT");
        }
        out.push('\n');
    }
    out
}

pub fn cost_text(costs: &[LayerCost], split_id: Option<&str>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:<17} {:>12} {:>10} {:>12} {:>12} {:>8} {:>8} {:>8}",
        "layer", "kind", "out", "dv", "macs", "fom", "dv_rel", "cc_rel", "fom_rel"
    );
    for row in costs {
        let marker = if split_id == Some(row.layer_id.as_str()) {
            "  <- SPLIT"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "{:<10} {:<17} {:>12} {:>10} {:>12} {:>12} {:>8.4} {:>8.4} {:>8.4}{}",
            row.layer_id,
            row.kind.name(),
            row.out_shape.to_string(),
            row.dv,
            row.macs_analytic,
            format!("{:.4e}", row.fom),
            row.dv_rel,
            row.cc_rel,
            row.fom_rel,
            marker,
        );
    }
    out
}

pub fn hw_csv(report: &HwReport) -> String {
    let mut out = String::from("layer_id,kernel,blocks,energy_j,power_w,latency_s\n");
    for row in &report.rows {
        let kernel = row
            .kernel
            .map(|(h, w)| format!("{h}x{w}"))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.layer_id,
            kernel,
            row.blocks,
            sci(row.energy_j),
            sci(row.power_w),
            sci(row.latency_s),
        );
    }
    let _ = writeln!(
        out,
        "TOTAL,,{},{},{},{}",
        report.rows.iter().map(|r| r.blocks).sum::<u64>(),
        sci(report.total_energy_j),
        sci(report.total_power_w),
        sci(report.total_latency_s),
    );
    out
}

pub fn hw_text(report: &HwReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} implementation, {:.0} fps, {} clock{}",
        report.config.implementation.name(),
        report.config.fps,
        si(report.config.clock_hz, "Hz"),
        if report.config.overhead_applied {
            format!(
                ", memory overhead x{:.2} applied",
                report.config.mem_overhead_factor
            )
        } else {
            String::new()
        }
    );
    let _ = writeln!(
        out,
        "{:<10} {:>7} {:>12} {:>14} {:>14} {:>14}",
        "layer", "kernel", "blocks", "energy", "power", "latency"
    );
    for row in &report.rows {
        let kernel = row
            .kernel
            .map(|(h, w)| format!("{h}x{w}"))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<10} {:>7} {:>12} {:>14} {:>14} {:>14}",
            row.layer_id,
            kernel,
            row.blocks,
            si(row.energy_j, "J"),
            si(row.power_w, "W"),
            si(row.latency_s, "s"),
        );
    }
    let _ = writeln!(
        out,
        "{:<10} {:>7} {:>12} {:>14} {:>14} {:>14}",
        "TOTAL",
        "",
        report.rows.iter().map(|r| r.blocks).sum::<u64>(),
        si(report.total_energy_j, "J"),
        si(report.total_power_w, "W"),
        si(report.total_latency_s, "s"),
    );
    out
}

pub fn baselines_csv(rows: &[BaselineRow]) -> String {
    let mut out = String::from("name,power_w,ratio\n");
    for row in rows {
        let _ = writeln!(out, "{},{},{}", row.name, sci(row.power_w), frac(row.ratio));
    }
    out
}

pub fn baselines_text(rows: &[BaselineRow], node_power_w: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "node power: {}", si(node_power_w, "W"));
    let _ = writeln!(out, "{:<24} {:>14} {:>12}", "baseline", "power", "ratio");
    for row in rows {
        let _ = writeln!(
            out,
            "{:<24} {:>14} {:>11.1}x",
            row.name,
            si(row.power_w, "W"),
            row.ratio
        );
    }
    out
}

pub fn protocols_csv(registry: &[ProtocolSpec]) -> String {
    let mut out = String::from(
        "name,label,energy_min_j_per_bit,energy_max_j_per_bit,energy_point_j_per_bit,\
         rate_min_bps,rate_max_bps,rate_point_bps\n",
    );
    for p in registry {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.name,
            p.label,
            sci(p.energy_min_j_per_bit),
            sci(p.energy_max_j_per_bit),
            sci(p.energy_point()),
            sci(p.rate_min_bps),
            sci(p.rate_max_bps),
            sci(p.rate_point()),
        );
    }
    out
}

pub fn protocols_text(registry: &[ProtocolSpec]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:<14} {:>24} {:>26}",
        "name", "label", "energy/bit (point)", "rate (point)"
    );
    for p in registry {
        let energy = format!(
            "{}..{} ({})",
            si(p.energy_min_j_per_bit, "J"),
            si(p.energy_max_j_per_bit, "J"),
            si(p.energy_point(), "J")
        );
        let rate = format!(
            "{}..{} ({})",
            si(p.rate_min_bps, "bps"),
            si(p.rate_max_bps, "bps"),
            si(p.rate_point(), "bps")
        );
        let _ = writeln!(out, "{:<14} {:<14} {:>24} {:>26}", p.name, p.label, energy, rate);
    }
    out
}

pub fn comm_csv(protocol: &ProtocolSpec, dv: u64, bits_per_element: u32, cost: &CommCost) -> String {
    let mut out = String::from("protocol,dv,bits_per_element,bits,energy_j,time_s\n");
    let _ = writeln!(
        out,
        "{},{},{},{},{},{}",
        protocol.name,
        dv,
        bits_per_element,
        cost.bits,
        sci(cost.energy_j),
        sci(cost.time_s),
    );
    out
}

pub fn comm_text(protocol: &ProtocolSpec, dv: u64, bits_per_element: u32, cost: &CommCost) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}: {} elements x {} bits = {} bits per frame",
        protocol.label, dv, bits_per_element, cost.bits
    );
    let _ = writeln!(
        out,
        "energy {}  time {}",
        si(cost.energy_j, "J"),
        si(cost.time_s, "s")
    );
    out
}

pub fn feasibility_csv(report: &FeasibilityReport) -> String {
    let mut out = String::from(
        "split_id,protocol,dv,bits_per_element,node_macs,hub_macs,e_node_j,e_comm_j,e_hub_j,\
         e_full_node_j,node_lt_hub,dist_saves,balance\n",
    );
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        report.split_id,
        report.protocol.name,
        report.dv,
        report.bits_per_element,
        report.node_macs,
        report.hub_macs,
        sci(report.e_node_j),
        sci(report.e_comm_j),
        sci(report.e_hub_j),
        sci(report.e_full_node_j),
        report.node_lt_hub(),
        report.dist_saves(),
        frac(report.balance()),
    );
    out
}

pub fn feasibility_text(report: &FeasibilityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "split after {} over {} ({} elements x {} bits)",
        report.split_id, report.protocol.label, report.dv, report.bits_per_element
    );
    let _ = writeln!(
        out,
        "  e_node      {:>14}   ({} MACs)",
        si(report.e_node_j, "J"),
        report.node_macs
    );
    let _ = writeln!(out, "  e_comm      {:>14}", si(report.e_comm_j, "J"));
    let _ = writeln!(
        out,
        "  e_hub       {:>14}   ({} MACs)",
        si(report.e_hub_j, "J"),
        report.hub_macs
    );
    let _ = writeln!(out, "  e_full_node {:>14}", si(report.e_full_node_j, "J"));
    let _ = writeln!(
        out,
        "  node<hub {}   dist_saves {}   balance {:.4}",
        report.node_lt_hub(),
        report.dist_saves(),
        report.balance()
    );
    out
}
