//! Command-line front end for split-inference design exploration.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use distnn::commmodel::{
    builtin_protocols, comm_cost, feasibility, load_protocols, parse_protocol_arg,
    DEFAULT_BITS_PER_ELEMENT, DEFAULT_HUB_ENERGY_PER_MAC,
};
use distnn::costmodel::{
    cost_table, select_split, split_macs, CostConfig, CostMode, FomScope, Implementation,
    LayerCost,
};
use distnn::hwmodel::{
    compare_baselines, load_baselines, load_config, node_report, HwConfig, PICOJOULE,
};
use distnn::infer::{
    quality, quality_json, read_tensor, read_weights, run_reference, run_split, seeded_input,
    seeded_weights, write_tensor, PrecisionMode, Tensor, WeightStore,
};
use distnn::netmodel::{parse_inferred, NetworkSpec};
use distnn::report;
use distnn::{Error, Result};

#[derive(Parser)]
#[command(
    name = "distnn",
    version,
    about = "Explore where to cut a network between a wearable node and its hub"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-layer cost table (data volume, MACs, figure of merit) with the
    /// selected split flagged.
    Analyze(AnalyzeArgs),
    /// Report only the selected split layer.
    Split(SplitArgs),
    /// Node-side energy, power, and latency up to the split.
    Power(PowerArgs),
    /// Link cost and energy feasibility of a split.
    Comm(CommArgs),
    /// Run split inference and score the reconstruction.
    Simulate(SimulateArgs),
    /// List the communication protocol registry.
    Protocols(ProtocolsArgs),
}

#[derive(Args)]
struct ArchArgs {
    /// Network architecture JSON file.
    #[arg(long)]
    arch: PathBuf,
    /// Cost accounting for the figure of merit: analytic MAC counts or
    /// hardware block counts.
    #[arg(long, default_value = "analytic", value_parser = ["analytic", "table"])]
    cost_mode: String,
    /// Score each layer alone or by cumulative cost up to it.
    #[arg(long, default_value = "per-layer", value_parser = ["per-layer", "cumulative"])]
    fom_mode: String,
}

impl ArchArgs {
    fn load(&self) -> Result<(NetworkSpec, Vec<LayerCost>)> {
        let net = load_net(&self.arch)?;
        let cfg = CostConfig {
            cost_mode: match self.cost_mode.as_str() {
                "table" => CostMode::Table,
                _ => CostMode::Analytic,
            },
            fom_scope: match self.fom_mode.as_str() {
                "cumulative" => FomScope::Cumulative,
                _ => FomScope::PerLayer,
            },
        };
        let costs = cost_table(&net, &cfg)?;
        Ok((net, costs))
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Report format.
    #[arg(long, default_value = "text", value_parser = ["csv", "text"])]
    format: String,
    /// Write the report to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl OutputArgs {
    fn csv(&self) -> bool {
        self.format == "csv"
    }

    fn emit(&self, content: &str) -> Result<()> {
        match &self.output {
            Some(path) => std::fs::write(path, content).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            }),
            None => {
                print!("{content}");
                Ok(())
            }
        }
    }
}

#[derive(Args)]
struct HwArgs {
    /// Block schedule of the MAC array.
    #[arg(long, value_parser = ["parallel", "serial"])]
    implementation: Option<String>,
    /// Inference frame rate used for power.
    #[arg(long)]
    fps: Option<f64>,
    /// Clock frequency in Hz (one block per cycle).
    #[arg(long)]
    clock_hz: Option<f64>,
    /// Memory-traffic overhead factor.
    #[arg(long)]
    mem_overhead: Option<f64>,
    /// Multiply reported power by the memory-overhead factor.
    #[arg(long)]
    apply_overhead: bool,
    /// JSON file of hardware parameters; command-line flags override it.
    #[arg(long)]
    hw_config: Option<PathBuf>,
}

impl HwArgs {
    fn build(&self) -> Result<HwConfig> {
        let mut cfg = match &self.hw_config {
            Some(path) => load_config(path)?,
            None => HwConfig::default(),
        };
        if let Some(name) = &self.implementation {
            cfg.implementation = match name.as_str() {
                "serial" => Implementation::Serial,
                _ => Implementation::Parallel,
            };
        }
        if let Some(v) = self.fps {
            cfg.fps = v;
        }
        if let Some(v) = self.clock_hz {
            cfg.clock_hz = v;
        }
        if let Some(v) = self.mem_overhead {
            cfg.mem_overhead_factor = v;
        }
        if self.apply_overhead {
            cfg.overhead_applied = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    arch: ArchArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    arch: ArchArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct PowerArgs {
    #[command(flatten)]
    arch: ArchArgs,
    #[command(flatten)]
    out: OutputArgs,
    #[command(flatten)]
    hw: HwArgs,
    /// Split layer id, or "auto" to use the figure-of-merit choice.
    #[arg(long, default_value = "auto")]
    split: String,
    /// JSON file of baseline accelerators to compare the node against.
    #[arg(long)]
    baselines: Option<PathBuf>,
}

#[derive(Args)]
struct CommArgs {
    #[command(flatten)]
    arch: ArchArgs,
    #[command(flatten)]
    out: OutputArgs,
    /// Split layer id, or "auto".
    #[arg(long, default_value = "auto")]
    split: String,
    /// Protocol name from the registry, or custom:<nJ_per_bit>:<bps>.
    #[arg(long, default_value = "ble")]
    protocol: String,
    /// JSON file replacing the built-in protocol registry.
    #[arg(long)]
    protocols_file: Option<PathBuf>,
    /// Serialized width of one boundary tensor element (8, 16, or 32).
    #[arg(long, default_value_t = DEFAULT_BITS_PER_ELEMENT)]
    bits_per_element: u32,
    /// Hub accelerator energy per MAC, in picojoules.
    #[arg(long, default_value_t = DEFAULT_HUB_ENERGY_PER_MAC / PICOJOULE)]
    hub_energy_per_mac: f64,
    #[command(flatten)]
    hw: HwArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    arch: ArchArgs,
    /// Weights file, or seeded:<seed> to synthesize deterministic weights.
    #[arg(long)]
    weights: String,
    /// Input tensor file, or seeded:<seed> for a deterministic frame.
    #[arg(long)]
    input: String,
    /// Split layer id, or "auto".
    #[arg(long, default_value = "auto")]
    split: String,
    /// Node-segment precision.
    #[arg(long, default_value = "fp32", value_parser = ["fp32", "w10-fp", "w10-f8"])]
    precision: String,
    /// Write the final (hub) output tensor here.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the boundary tensor the node ships to the hub.
    #[arg(long)]
    node_output: Option<PathBuf>,
    /// Compare against the full-precision reference and write the metrics
    /// JSON here.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct ProtocolsArgs {
    #[command(flatten)]
    out: OutputArgs,
    /// JSON file replacing the built-in protocol registry.
    #[arg(long)]
    protocols_file: Option<PathBuf>,
}

fn load_net(path: &Path) -> Result<NetworkSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_inferred(&text)
}

fn resolve_split(net: &NetworkSpec, costs: &[LayerCost], arg: &str) -> Result<String> {
    if arg == "auto" {
        Ok(select_split(costs)?.to_string())
    } else {
        net.layer_index(arg)?;
        Ok(arg.to_string())
    }
}

fn load_registry(path: &Option<PathBuf>) -> Result<Vec<distnn::commmodel::ProtocolSpec>> {
    match path {
        Some(p) => load_protocols(p),
        None => Ok(builtin_protocols()),
    }
}

/// `seeded:<seed>` or a file path.
enum SourceArg {
    Seeded(u64),
    File(PathBuf),
}

fn parse_source(arg: &str) -> Result<SourceArg> {
    match arg.strip_prefix("seeded:") {
        Some(seed) => seed
            .parse()
            .map(SourceArg::Seeded)
            .map_err(|_| Error::InvalidArgument(format!("bad seed in {arg:?}"))),
        None => Ok(SourceArg::File(PathBuf::from(arg))),
    }
}

fn load_weight_source(net: &NetworkSpec, arg: &str) -> Result<WeightStore> {
    match parse_source(arg)? {
        SourceArg::Seeded(seed) => seeded_weights(net, seed),
        SourceArg::File(path) => read_weights(&path),
    }
}

fn load_input_source(net: &NetworkSpec, arg: &str) -> Result<Tensor> {
    match parse_source(arg)? {
        SourceArg::Seeded(seed) => Ok(seeded_input(net.input_shape, seed)),
        SourceArg::File(path) => read_tensor(&path),
    }
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let (_, costs) = args.arch.load()?;
    let split = select_split(&costs)?.to_string();
    let content = if args.out.csv() {
        report::cost_csv_with_split(&costs, &split)
    } else {
        report::cost_text(&costs, Some(&split))
    };
    args.out.emit(&content)
}

fn cmd_split(args: SplitArgs) -> Result<()> {
    let (_, costs) = args.arch.load()?;
    let split = select_split(&costs)?.to_string();
    let row = costs
        .iter()
        .find(|r| r.layer_id == split)
        .expect("selected split has a cost row");
    let content = if args.out.csv() {
        report::cost_csv(std::slice::from_ref(row).to_vec().as_slice())
    } else {
        format!(
            "split after {} ({}): dv {}, macs {}, fom {:.4e}\n",
            row.layer_id,
            row.kind.name(),
            row.dv,
            row.macs_analytic,
            row.fom
        )
    };
    args.out.emit(&content)
}

fn cmd_power(args: PowerArgs) -> Result<()> {
    let (net, costs) = args.arch.load()?;
    let cfg = args.hw.build()?;
    let split = resolve_split(&net, &costs, &args.split)?;
    let hw = node_report(&net, &costs, &split, &cfg)?;
    let mut content = if args.out.csv() {
        report::hw_csv(&hw)
    } else {
        format!("node segment through {split}\n{}", report::hw_text(&hw))
    };
    if let Some(path) = &args.baselines {
        let baselines = load_baselines(path)?;
        let (node_macs, _) = split_macs(&costs, &split)?;
        let rows = compare_baselines(hw.total_energy_j, cfg.fps, &baselines, node_macs)?;
        content.push('\n');
        if args.out.csv() {
            content.push_str(&report::baselines_csv(&rows));
        } else {
            content.push_str(&report::baselines_text(&rows, hw.total_power_w));
        }
    }
    args.out.emit(&content)
}

fn cmd_comm(args: CommArgs) -> Result<()> {
    let (net, costs) = args.arch.load()?;
    let cfg = args.hw.build()?;
    let registry = load_registry(&args.protocols_file)?;
    let protocol = parse_protocol_arg(&registry, &args.protocol)?;
    let split = resolve_split(&net, &costs, &args.split)?;
    let hub_energy = args.hub_energy_per_mac * PICOJOULE;
    let fease = feasibility(
        &net,
        &costs,
        &split,
        &cfg,
        &protocol,
        hub_energy,
        args.bits_per_element,
    )?;
    let cost = comm_cost(fease.dv, args.bits_per_element, &protocol)?;
    let mut content = if args.out.csv() {
        report::comm_csv(&protocol, fease.dv, args.bits_per_element, &cost)
    } else {
        report::comm_text(&protocol, fease.dv, args.bits_per_element, &cost)
    };
    content.push('\n');
    if args.out.csv() {
        content.push_str(&report::feasibility_csv(&fease));
    } else {
        content.push_str(&report::feasibility_text(&fease));
    }
    args.out.emit(&content)
}

fn cmd_protocols(args: ProtocolsArgs) -> Result<()> {
    let registry = load_registry(&args.protocols_file)?;
    let content = if args.out.csv() {
        report::protocols_csv(&registry)
    } else {
        report::protocols_text(&registry)
    };
    args.out.emit(&content)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let (net, costs) = args.arch.load()?;
    let split = resolve_split(&net, &costs, &args.split)?;
    let store = load_weight_source(&net, &args.weights)?;
    let input = load_input_source(&net, &args.input)?;
    let mode: PrecisionMode = args.precision.parse()?;
    let outcome = run_split(&net, &store, &input, &split, mode)?;

    if let Some(path) = &args.node_output {
        write_tensor(path, &outcome.node_output)?;
    }
    if let Some(path) = &args.output {
        write_tensor(path, &outcome.final_output)?;
    }

    println!(
        "split after {} [{}]: boundary {}, output {}",
        split,
        mode.name(),
        outcome.node_output.shape,
        outcome.final_output.shape
    );
    if let Some(stats) = outcome.fixed_stats {
        println!(
            "integer datapath: {} accumulator overflows, {} requantization saturations",
            stats.acc_overflows, stats.requant_saturations
        );
    }
    if let Some(path) = &args.metrics {
        let reference = run_reference(&net, &store, &input)?;
        let reference_final = reference.last().expect("network has layers");
        let q = quality(reference_final, &outcome.final_output)?;
        let doc = serde_json::to_string_pretty(&quality_json(&q)).expect("metrics serialize");
        std::fs::write(path, format!("{doc}\n")).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        match q.ssim {
            Some(s) => println!("quality vs fp32 reference: ssim {:.6}, mse {:.6e}", s, q.mse),
            None => println!("quality vs fp32 reference: mse {:.6e}", q.mse),
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Split(args) => cmd_split(args),
        Command::Power(args) => cmd_power(args),
        Command::Comm(args) => cmd_comm(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Protocols(args) => cmd_protocols(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.class().exit_code());
    }
}
