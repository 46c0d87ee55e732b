//! C interface to the distnn models.
//!
//! Every function that can fail returns a [`DistnnStatus`] and, on failure,
//! stores a message retrievable with [`distnn_last_error_message`]. Handles
//! returned through out-parameters own their data and must be released with
//! the matching `_free` function. Strings are copied into caller-supplied
//! buffers and are always NUL-terminated.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use distnn::commmodel::{builtin_protocols, comm_cost, feasibility, find_protocol, ProtocolSpec};
use distnn::costmodel::{
    cost_table, select_split, CostConfig, CostMode, FomScope, Implementation, LayerCost,
};
use distnn::fxp::WeightF10;
use distnn::hwmodel::{node_report, HwConfig};
use distnn::netmodel::{parse_inferred, LayerKind, NetworkSpec};
use distnn::{Error, ErrorClass};

/// Result of a C API call. `Ok` is zero; everything else is a failure and
/// leaves a message for [`distnn_last_error_message`].
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DistnnStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Invalid input: malformed document, unknown identifier, bad parameter.
    InvalidArgument = 2,
    /// A data file could not be read or decoded.
    DataFile = 3,
    /// Internal failure; file a bug if one of these escapes.
    Internal = 4,
    /// A string argument was not valid UTF-8.
    Utf8 = 5,
    /// A caller-supplied buffer was too small for the string plus NUL.
    BufferTooSmall = 6,
}

/// MAC-array schedule.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DistnnImplementation {
    Parallel = 0,
    Serial = 1,
}

/// Cost accounting used for the figure of merit.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DistnnCostMode {
    /// Analytic multiply-accumulate counts.
    Analytic = 0,
    /// Hardware block counts for the configured schedule.
    Table = 1,
}

/// Whether the figure of merit scores each layer alone or cumulatively.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DistnnFomScope {
    PerLayer = 0,
    Cumulative = 1,
}

/// Layer operation kind.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DistnnLayerKind {
    Conv2d = 0,
    ConvTranspose2d = 1,
    Dense = 2,
    MaxPool = 3,
    Flatten = 4,
    BatchNorm = 5,
    Dropout = 6,
    Activation = 7,
}

/// One row of a cost table. Layer ids are fetched separately with
/// [`distnn_cost_table_row_id`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DistnnCostRow {
    pub kind: DistnnLayerKind,
    pub out_h: u32,
    pub out_w: u32,
    pub out_c: u32,
    /// Elements in the layer's output feature map.
    pub dv: u64,
    /// Analytic multiply-accumulate count.
    pub macs: u64,
    pub blocks_parallel: u64,
    pub blocks_serial: u64,
    /// Data volume times computational cost; the split minimizes this.
    pub fom: f64,
    pub dv_rel: f64,
    pub cc_rel: f64,
    pub fom_rel: f64,
}

/// Scalar hardware parameters. Obtained from [`distnn_hw_config_default`]
/// and adjusted field by field; the measured per-block energy table keeps
/// its built-in entries, with `energy_per_mac_j` covering every other
/// kernel geometry.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DistnnHwConfig {
    pub implementation: DistnnImplementation,
    pub energy_per_mac_j: f64,
    pub clock_hz: f64,
    pub fps: f64,
    pub mem_overhead_factor: f64,
    pub overhead_applied: bool,
    pub per_mac_fallback: bool,
}

/// Node-segment totals up to and including the split layer.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DistnnNodeTotals {
    pub blocks: u64,
    pub energy_j: f64,
    pub power_w: f64,
    pub latency_s: f64,
}

/// A communication link. The `_point` fields drive all cost math; the
/// range fields record the registry entry they were condensed from.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DistnnProtocol {
    pub energy_point_j_per_bit: f64,
    pub rate_point_bps: f64,
    pub energy_min_j_per_bit: f64,
    pub energy_max_j_per_bit: f64,
    pub rate_min_bps: f64,
    pub rate_max_bps: f64,
}

/// Cost of shipping one boundary tensor.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DistnnCommCost {
    pub bits: u64,
    pub energy_j: f64,
    pub time_s: f64,
}

/// Energy accounting for one candidate split.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DistnnFeasibility {
    pub dv: u64,
    pub node_macs: u64,
    pub hub_macs: u64,
    pub e_node_j: f64,
    pub e_comm_j: f64,
    pub e_hub_j: f64,
    pub e_full_node_j: f64,
    pub comm_bits: u64,
    pub comm_time_s: f64,
    /// Node compute costs less than hub compute for the same layers.
    pub node_lt_hub: bool,
    /// Node energy plus link energy beats running everything on the node.
    pub dist_saves: bool,
    /// Link energy divided by the node energy it displaces.
    pub balance: f64,
}

/// A parsed network architecture.
pub struct DistnnNetwork {
    net: NetworkSpec,
}

/// A computed per-layer cost table.
pub struct DistnnCostTable {
    rows: Vec<LayerCost>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let owned = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn fail(status: DistnnStatus, msg: impl std::fmt::Display) -> DistnnStatus {
    set_last_error(&msg.to_string());
    status
}

fn fail_err(e: &Error) -> DistnnStatus {
    let status = match e.class() {
        ErrorClass::Validation => DistnnStatus::InvalidArgument,
        ErrorClass::DataFile => DistnnStatus::DataFile,
        ErrorClass::Internal => DistnnStatus::Internal,
    };
    fail(status, e)
}

fn guarded(f: impl FnOnce() -> DistnnStatus) -> DistnnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(DistnnStatus::Internal, "panic inside distnn"),
    }
}

/// Message from the most recent failing call on this thread. Never null;
/// empty when the last call succeeded. The pointer stays valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn distnn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn cstr_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, DistnnStatus> {
    if ptr.is_null() {
        return Err(fail(DistnnStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(DistnnStatus::Utf8, format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, DistnnStatus> {
    ptr.as_ref()
        .ok_or_else(|| fail(DistnnStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, DistnnStatus> {
    ptr.as_mut()
        .ok_or_else(|| fail(DistnnStatus::NullPointer, format!("{what} is null")))
}

unsafe fn copy_string(s: &str, buf: *mut c_char, buf_len: usize, what: &str) -> DistnnStatus {
    if buf.is_null() {
        return fail(DistnnStatus::NullPointer, format!("{what} buffer is null"));
    }
    let bytes = s.as_bytes();
    if buf_len < bytes.len() + 1 {
        return fail(
            DistnnStatus::BufferTooSmall,
            format!("{what} needs {} bytes, buffer holds {buf_len}", bytes.len() + 1),
        );
    }
    std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len());
    *buf.add(bytes.len()) = 0;
    DistnnStatus::Ok
}

fn kind_to_c(kind: LayerKind) -> DistnnLayerKind {
    match kind {
        LayerKind::Conv2d => DistnnLayerKind::Conv2d,
        LayerKind::ConvTranspose2d => DistnnLayerKind::ConvTranspose2d,
        LayerKind::Dense => DistnnLayerKind::Dense,
        LayerKind::MaxPool => DistnnLayerKind::MaxPool,
        LayerKind::Flatten => DistnnLayerKind::Flatten,
        LayerKind::BatchNorm => DistnnLayerKind::BatchNorm,
        LayerKind::Dropout => DistnnLayerKind::Dropout,
        LayerKind::Activation => DistnnLayerKind::Activation,
    }
}

fn hw_config_from_c(c: &DistnnHwConfig) -> HwConfig {
    let mut cfg = HwConfig::default();
    cfg.implementation = match c.implementation {
        DistnnImplementation::Serial => Implementation::Serial,
        DistnnImplementation::Parallel => Implementation::Parallel,
    };
    cfg.energy_per_mac = c.energy_per_mac_j;
    cfg.clock_hz = c.clock_hz;
    cfg.fps = c.fps;
    cfg.mem_overhead_factor = c.mem_overhead_factor;
    cfg.overhead_applied = c.overhead_applied;
    cfg.per_mac_fallback = c.per_mac_fallback;
    cfg
}

fn protocol_to_c(p: &ProtocolSpec) -> DistnnProtocol {
    DistnnProtocol {
        energy_point_j_per_bit: p.energy_point(),
        rate_point_bps: p.rate_point(),
        energy_min_j_per_bit: p.energy_min_j_per_bit,
        energy_max_j_per_bit: p.energy_max_j_per_bit,
        rate_min_bps: p.rate_min_bps,
        rate_max_bps: p.rate_max_bps,
    }
}

fn protocol_from_c(c: &DistnnProtocol) -> ProtocolSpec {
    ProtocolSpec {
        name: "c-api".to_owned(),
        label: "C API protocol".to_owned(),
        energy_min_j_per_bit: c.energy_point_j_per_bit,
        energy_max_j_per_bit: c.energy_point_j_per_bit,
        rate_min_bps: c.rate_point_bps,
        rate_max_bps: c.rate_point_bps,
    }
}

/// Parse a network architecture from a JSON document.
#[no_mangle]
pub unsafe extern "C" fn distnn_network_parse_json(
    json: *const c_char,
    out: *mut *mut DistnnNetwork,
) -> DistnnStatus {
    guarded(|| {
        let out = match out_arg(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let doc = match cstr_arg(json, "json") {
            Ok(v) => v,
            Err(s) => return s,
        };
        match parse_inferred(doc) {
            Ok(net) => {
                *out = Box::into_raw(Box::new(DistnnNetwork { net }));
                DistnnStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// Parse a network architecture from a JSON file on disk.
#[no_mangle]
pub unsafe extern "C" fn distnn_network_parse_file(
    path: *const c_char,
    out: *mut *mut DistnnNetwork,
) -> DistnnStatus {
    guarded(|| {
        let out = match out_arg(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let path = match cstr_arg(path, "path") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(DistnnStatus::DataFile, format!("{path}: {e}")),
        };
        match parse_inferred(&text) {
            Ok(net) => {
                *out = Box::into_raw(Box::new(DistnnNetwork { net }));
                DistnnStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// Release a network handle. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn distnn_network_free(net: *mut DistnnNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Number of layers in the network; zero for a null handle.
#[no_mangle]
pub unsafe extern "C" fn distnn_network_layer_count(net: *const DistnnNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.net.layers.len())
}

/// Copy the id of layer `index` into `buf` (NUL-terminated).
#[no_mangle]
pub unsafe extern "C" fn distnn_network_layer_id(
    net: *const DistnnNetwork,
    index: usize,
    buf: *mut c_char,
    buf_len: usize,
) -> DistnnStatus {
    guarded(|| {
        let net = match ref_arg(net, "net") {
            Ok(v) => v,
            Err(s) => return s,
        };
        match net.net.layers.get(index) {
            Some(layer) => copy_string(&layer.id, buf, buf_len, "layer id"),
            None => fail(
                DistnnStatus::InvalidArgument,
                format!("layer index {index} out of range"),
            ),
        }
    })
}

/// Build the per-layer cost table for a network.
#[no_mangle]
pub unsafe extern "C" fn distnn_cost_table_build(
    net: *const DistnnNetwork,
    mode: DistnnCostMode,
    scope: DistnnFomScope,
    out: *mut *mut DistnnCostTable,
) -> DistnnStatus {
    guarded(|| {
        let out = match out_arg(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let net = match ref_arg(net, "net") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let cfg = CostConfig {
            cost_mode: match mode {
                DistnnCostMode::Table => CostMode::Table,
                DistnnCostMode::Analytic => CostMode::Analytic,
            },
            fom_scope: match scope {
                DistnnFomScope::Cumulative => FomScope::Cumulative,
                DistnnFomScope::PerLayer => FomScope::PerLayer,
            },
        };
        match cost_table(&net.net, &cfg) {
            Ok(rows) => {
                *out = Box::into_raw(Box::new(DistnnCostTable { rows }));
                DistnnStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// Release a cost table. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn distnn_cost_table_free(table: *mut DistnnCostTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of rows in the table; zero for a null handle.
#[no_mangle]
pub unsafe extern "C" fn distnn_cost_table_len(table: *const DistnnCostTable) -> usize {
    table.as_ref().map_or(0, |t| t.rows.len())
}

/// Copy row `index` into `out`.
#[no_mangle]
pub unsafe extern "C" fn distnn_cost_table_row(
    table: *const DistnnCostTable,
    index: usize,
    out: *mut DistnnCostRow,
) -> DistnnStatus {
    guarded(|| {
        let out = match out_arg(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let table = match ref_arg(table, "table") {
            Ok(v) => v,
            Err(s) => return s,
        };
        match table.rows.get(index) {
            Some(row) => {
                *out = DistnnCostRow {
                    kind: kind_to_c(row.kind),
                    out_h: row.out_shape.height,
                    out_w: row.out_shape.width,
                    out_c: row.out_shape.channels,
                    dv: row.dv,
                    macs: row.macs_analytic,
                    blocks_parallel: row.blocks_parallel,
                    blocks_serial: row.blocks_serial,
                    fom: row.fom,
                    dv_rel: row.dv_rel,
                    cc_rel: row.cc_rel,
                    fom_rel: row.fom_rel,
                };
                DistnnStatus::Ok
            }
            None => fail(
                DistnnStatus::InvalidArgument,
                format!("row index {index} out of range"),
            ),
        }
    })
}

/// Copy the layer id of row `index` into `buf` (NUL-terminated).
#[no_mangle]
pub unsafe extern "C" fn distnn_cost_table_row_id(
    table: *const DistnnCostTable,
    index: usize,
    buf: *mut c_char,
    buf_len: usize,
) -> DistnnStatus {
    guarded(|| {
        let table = match ref_arg(table, "table") {
            Ok(v) => v,
            Err(s) => return s,
        };
        match table.rows.get(index) {
            Some(row) => copy_string(&row.layer_id, buf, buf_len, "layer id"),
            None => fail(
                DistnnStatus::InvalidArgument,
                format!("row index {index} out of range"),
            ),
        }
    })
}

/// Pick the split layer: the table row with the smallest figure of merit
/// among MAC-bearing layers, earliest on ties. Writes the row index.
#[no_mangle]
pub unsafe extern "C" fn distnn_select_split(
    table: *const DistnnCostTable,
    out_index: *mut usize,
) -> DistnnStatus {
    guarded(|| {
        let out_index = match out_arg(out_index, "out_index") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let table = match ref_arg(table, "table") {
            Ok(v) => v,
            Err(s) => return s,
        };
        match select_split(&table.rows) {
            Ok(id) => {
                let idx = table
                    .rows
                    .iter()
                    .position(|r| r.layer_id == id)
                    .expect("selected id is in the table");
                *out_index = idx;
                DistnnStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// Built-in hardware operating point.
#[no_mangle]
pub extern "C" fn distnn_hw_config_default() -> DistnnHwConfig {
    let cfg = HwConfig::default();
    DistnnHwConfig {
        implementation: match cfg.implementation {
            Implementation::Serial => DistnnImplementation::Serial,
            Implementation::Parallel => DistnnImplementation::Parallel,
        },
        energy_per_mac_j: cfg.energy_per_mac,
        clock_hz: cfg.clock_hz,
        fps: cfg.fps,
        mem_overhead_factor: cfg.mem_overhead_factor,
        overhead_applied: cfg.overhead_applied,
        per_mac_fallback: cfg.per_mac_fallback,
    }
}

/// Energy, power, and latency of the node segment ending at `split_id`.
#[no_mangle]
pub unsafe extern "C" fn distnn_node_report_totals(
    net: *const DistnnNetwork,
    table: *const DistnnCostTable,
    split_id: *const c_char,
    config: *const DistnnHwConfig,
    out: *mut DistnnNodeTotals,
) -> DistnnStatus {
    guarded(|| {
        let out = match out_arg(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let net = match ref_arg(net, "net") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let table = match ref_arg(table, "table") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let split_id = match cstr_arg(split_id, "split_id") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let config = match ref_arg(config, "config") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let cfg = hw_config_from_c(config);
        match node_report(&net.net, &table.rows, split_id, &cfg) {
            Ok(report) => {
                *out = DistnnNodeTotals {
                    blocks: report.rows.iter().map(|r| r.blocks).sum(),
                    energy_j: report.total_energy_j,
                    power_w: report.total_power_w,
                    latency_s: report.total_latency_s,
                };
                DistnnStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// Look up a protocol in the built-in registry by name (case-insensitive).
#[no_mangle]
pub unsafe extern "C" fn distnn_protocol_by_name(
    name: *const c_char,
    out: *mut DistnnProtocol,
) -> DistnnStatus {
    guarded(|| {
        let out = match out_arg(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let name = match cstr_arg(name, "name") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let registry = builtin_protocols();
        match find_protocol(&registry, name) {
            Ok(p) => {
                *out = protocol_to_c(p);
                DistnnStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// Link cost of shipping `dv` elements at `bits_per_element` (8, 16, or 32).
#[no_mangle]
pub unsafe extern "C" fn distnn_comm_cost(
    dv: u64,
    bits_per_element: u32,
    protocol: *const DistnnProtocol,
    out: *mut DistnnCommCost,
) -> DistnnStatus {
    guarded(|| {
        let out = match out_arg(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let protocol = match ref_arg(protocol, "protocol") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let spec = protocol_from_c(protocol);
        match comm_cost(dv, bits_per_element, &spec) {
            Ok(cost) => {
                *out = DistnnCommCost {
                    bits: cost.bits,
                    energy_j: cost.energy_j,
                    time_s: cost.time_s,
                };
                DistnnStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// Energy accounting for splitting at `split_id` over the given link.
/// `hub_energy_per_mac_j` is the hub accelerator's per-MAC energy in joules.
#[no_mangle]
pub unsafe extern "C" fn distnn_feasibility(
    net: *const DistnnNetwork,
    table: *const DistnnCostTable,
    split_id: *const c_char,
    config: *const DistnnHwConfig,
    protocol: *const DistnnProtocol,
    hub_energy_per_mac_j: f64,
    bits_per_element: u32,
    out: *mut DistnnFeasibility,
) -> DistnnStatus {
    guarded(|| {
        let out = match out_arg(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let net = match ref_arg(net, "net") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let table = match ref_arg(table, "table") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let split_id = match cstr_arg(split_id, "split_id") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let config = match ref_arg(config, "config") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let protocol = match ref_arg(protocol, "protocol") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let cfg = hw_config_from_c(config);
        let spec = protocol_from_c(protocol);
        match feasibility(
            &net.net,
            &table.rows,
            split_id,
            &cfg,
            &spec,
            hub_energy_per_mac_j,
            bits_per_element,
        ) {
            Ok(report) => {
                *out = DistnnFeasibility {
                    dv: report.dv,
                    node_macs: report.node_macs,
                    hub_macs: report.hub_macs,
                    e_node_j: report.e_node_j,
                    e_comm_j: report.e_comm_j,
                    e_hub_j: report.e_hub_j,
                    e_full_node_j: report.e_full_node_j,
                    comm_bits: report.comm.bits,
                    comm_time_s: report.comm.time_s,
                    node_lt_hub: report.node_lt_hub(),
                    dist_saves: report.dist_saves(),
                    balance: report.balance(),
                };
                DistnnStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// Quantize a real weight to the 10-bit sign-magnitude word (round to
/// nearest, ties to even, saturating at the format limits).
#[no_mangle]
pub unsafe extern "C" fn distnn_quantize_weight(value: f32, out_word: *mut u16) -> DistnnStatus {
    guarded(|| {
        let out_word = match out_arg(out_word, "out_word") {
            Ok(v) => v,
            Err(s) => return s,
        };
        *out_word = WeightF10::quantize(value).to_word();
        DistnnStatus::Ok
    })
}

/// Decode a 10-bit weight word back to its real value. Words with bits
/// above bit 9 set are rejected.
#[no_mangle]
pub unsafe extern "C" fn distnn_dequantize_weight(word: u16, out_value: *mut f32) -> DistnnStatus {
    guarded(|| {
        let out_value = match out_arg(out_value, "out_value") {
            Ok(v) => v,
            Err(s) => return s,
        };
        match WeightF10::from_word(word) {
            Ok(w) => {
                *out_value = w.to_f32();
                DistnnStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}
