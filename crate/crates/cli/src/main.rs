use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use wearsim_core::cluster::topology::{self, LinearLayout};
use wearsim_core::metrics::{self, RunReport};
use wearsim_core::workload;
use wearsim_core::{ConfigError, RunConfig, Scenario, Simulation};

#[derive(Parser)]
#[command(name = "wearsim", version, about = "Flash cluster wear-leveling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its report files.
    Run(RunArgs),
    /// Run two configs on the same workload and print their ratios as JSON.
    Compare(CompareArgs),
    /// Print the analytical wear-out time grid.
    Table1 {
        /// Print CSV instead of the text grid.
        #[arg(long)]
        csv: bool,
    },
    /// Write a generated topology file.
    GenTopology(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args, Default)]
struct Overrides {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
    /// Topology file.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Generate a single-rack topology with this many storage nodes.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    total_ops: Option<u64>,
    #[arg(long)]
    warmup_ops: Option<u64>,
    #[arg(long)]
    phi: Option<u64>,
    #[arg(long)]
    grant_total: Option<u64>,
    #[arg(long)]
    write_array_len: Option<usize>,
    #[arg(long)]
    delayed_invalidations: Option<OnOff>,
    #[arg(long)]
    replica_count: Option<usize>,
    #[arg(long)]
    snapshot_interval_us: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Output directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the dispatched-event trace to `trace.csv`.
    #[arg(long)]
    trace: bool,
    /// Write the generated operation stream to this file and exit.
    #[arg(long)]
    export_ops: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    config_a: PathBuf,
    config_b: PathBuf,
    /// Write the comparison JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Layout {
    /// Four racks of 1, 3, 5 and 7 storage nodes.
    Lopsided4,
    /// One rack, node size and endurance drawn uniformly.
    Linear,
    /// One rack, alternating high and low endurance.
    Mixed,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    layout: Layout,
    #[arg(long, default_value_t = 32)]
    nodes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Blocks per storage node (lopsided4, mixed).
    #[arg(long, default_value_t = 256)]
    capacity: u64,
    /// Endurance cycles (lopsided4) or the high value (mixed).
    #[arg(long, default_value_t = 300)]
    cycles: u64,
    /// Low endurance value (mixed).
    #[arg(long, default_value_t = 500)]
    low_cycles: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse()
}

/// Splits failures into bad input (exit 1) and runtime failures (exit 2).
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.into())
    }
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Table1 { csv } => {
            let text = if csv { metrics::table1_csv() } else { metrics::table1_text() };
            print!("{text}");
            Ok(())
        }
        Command::GenTopology(args) => cmd_gen(args).map_err(Failure::Config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn build_config(o: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &o.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = o.scenario {
        cfg.scenario = v;
    }
    if let Some(v) = &o.topology {
        cfg.topology = Some(v.clone());
        cfg.nodes = None;
    }
    if let Some(v) = o.nodes {
        cfg.nodes = Some(v);
        cfg.topology = None;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.total_ops {
        cfg.workload.total_ops = v;
    }
    if let Some(v) = o.warmup_ops {
        cfg.workload.warmup_ops = v;
    }
    if let Some(v) = o.phi {
        cfg.protocol.phi = Some(v);
    }
    if let Some(v) = o.grant_total {
        cfg.protocol.grant_total = v;
    }
    if let Some(v) = o.write_array_len {
        cfg.protocol.write_array_len = Some(v);
    }
    if let Some(v) = o.delayed_invalidations {
        cfg.protocol.delayed_invalidations = matches!(v, OnOff::On);
    }
    if let Some(v) = o.replica_count {
        cfg.baseline.replica_count = v;
    }
    if let Some(v) = o.snapshot_interval_us {
        cfg.snapshot_interval_us = Some(v);
    }
    cfg.validate("command line", None)?;
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = build_config(&args.overrides)?;
    if let Some(out) = &args.out {
        cfg.out_dir = Some(out.clone());
    }
    cfg.trace |= args.trace;

    if let Some(path) = &args.export_ops {
        let topo = cfg.load_topology()?;
        let ops = workload::generate(&cfg.workload_spec(), topo.clients().count() as u32);
        let file = File::create(path).with_context(|| format!("creating {}", path.display())).map_err(runtime)?;
        workload::write_trace(&ops, BufWriter::new(file)).map_err(runtime)?;
        return Ok(());
    }

    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut sim = Simulation::from_config(&cfg)?;
    if cfg.trace {
        std::fs::create_dir_all(&out_dir).map_err(runtime)?;
        let path = out_dir.join("trace.csv");
        let file = File::create(&path).with_context(|| format!("creating {}", path.display())).map_err(runtime)?;
        sim.set_trace(Box::new(BufWriter::new(file))).map_err(runtime)?;
    }
    sim.run().map_err(runtime)?;
    let report = sim.finish().map_err(runtime)?;
    metrics::emit_report(&report, &out_dir)
        .with_context(|| format!("writing report to {}", out_dir.display()))
        .map_err(runtime)?;
    if report.cluster_worn_out {
        eprintln!("note: cluster wore out before the workload finished; report is partial");
    }
    println!(
        "{}: wear stddev {:.4}, {} invalidation-related messages, report in {}",
        report.scenario,
        report.wear_stddev,
        report.invalidation_related_messages,
        out_dir.display()
    );
    Ok(())
}

fn run_report(cfg: &RunConfig) -> Result<RunReport, Failure> {
    let mut sim = Simulation::from_config(cfg)?;
    sim.run().map_err(runtime)?;
    sim.finish().map_err(runtime)
}

fn cmd_compare(args: CompareArgs) -> Result<(), Failure> {
    let a = RunConfig::load(&args.config_a)?;
    let b = RunConfig::load(&args.config_b)?;
    if a.workload_seed() != b.workload_seed() {
        return Err(Failure::Config(anyhow::anyhow!(
            "workload seeds differ ({} vs {}); comparisons need the same workload",
            a.workload_seed(),
            b.workload_seed()
        )));
    }
    let (ra, rb) = std::thread::scope(|s| {
        let ha = s.spawn(|| run_report(&a));
        let hb = s.spawn(|| run_report(&b));
        (ha.join().expect("run thread"), hb.join().expect("run thread"))
    });
    let (ra, rb) = (ra?, rb?);
    let text = serde_json::to_string_pretty(&comparison(&ra, &rb)).expect("json") + "\n";
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(runtime)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// `a / b`, with `0 / 0 = 1` and division of a positive value by zero
/// reported as null.
fn ratio(a: f64, b: f64) -> Value {
    if a == b {
        json!(1.0)
    } else if b == 0.0 {
        Value::Null
    } else {
        json!(a / b)
    }
}

fn side(r: &RunReport) -> Value {
    json!({
        "scenario": r.scenario,
        "wear_stddev": r.wear_stddev,
        "invalidation_related_messages": r.invalidation_related_messages,
        "total_messages": r.messages.total(),
        "min_remaining_write_capacity": r.final_snapshot.min_remaining(),
        "block_writes": r.stats.block_writes_total,
        "cluster_worn_out": r.cluster_worn_out,
    })
}

fn comparison(a: &RunReport, b: &RunReport) -> Value {
    let mut per_kind = Map::new();
    let (ma, mb) = (a.messages.to_map(), b.messages.to_map());
    for (kind, &ca) in &ma {
        per_kind.insert(kind.clone(), ratio(ca as f64, mb.get(kind).copied().unwrap_or(0) as f64));
    }
    let min = |r: &RunReport| r.final_snapshot.min_remaining().unwrap_or(0) as f64;
    json!({
        "a": side(a),
        "b": side(b),
        "ratios": {
            "wear_stddev": ratio(a.wear_stddev, b.wear_stddev),
            "invalidation_related_messages": ratio(
                a.invalidation_related_messages as f64,
                b.invalidation_related_messages as f64,
            ),
            "total_messages": ratio(a.messages.total() as f64, b.messages.total() as f64),
            "min_remaining_write_capacity": ratio(min(a), min(b)),
            "block_writes": ratio(a.stats.block_writes_total as f64, b.stats.block_writes_total as f64),
            "messages": per_kind,
        }
    })
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<()> {
    if args.nodes == 0 {
        bail!("--nodes must be at least 1");
    }
    let topo = match args.layout {
        Layout::Lopsided4 => topology::lopsided4(args.capacity, args.cycles),
        Layout::Linear => topology::linear(&LinearLayout::new(args.nodes, args.seed)),
        Layout::Mixed => topology::mixed_endurance(args.nodes, args.capacity, args.cycles, args.low_cycles),
    };
    let text = topo.to_toml_string();
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
