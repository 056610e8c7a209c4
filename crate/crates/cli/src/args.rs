//! Command-line parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use memtol::model::Variant;
use memtol::sim::QueuePolicy;
use memtol::CprParams;

use crate::axis::{parse_axis_arg, Axis};
use crate::config::{parse_profile, Format, HopShape, PhasingKind, Plan, ProfileSpec, RunConfig};
use crate::error::Result;
use crate::run::{cmd_compare, cmd_cpr, cmd_model, cmd_sim, cmd_sweep, cpr_table};

#[derive(Debug, Parser)]
#[command(name = "memtol", version, about = "Throughput models and simulator for key-value operations on microsecond-latency memory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate model variants over a parameter grid.
    Model(Common),
    /// Simulate every grid point at the fastest thread count.
    Sim(Common),
    /// Model and simulator side by side.
    Sweep(Common),
    /// Model error against the simulator; exits 2 outside the band.
    Compare(Common),
    /// Cost-performance ratio of replacing DRAM.
    Cpr(CprArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write results here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Latency the normalized columns are relative to (µs).
    #[arg(long, value_name = "US")]
    pub baseline_latency: Option<f64>,
    /// Truncation tolerance of the wait-time series.
    #[arg(long)]
    pub tail_tol: Option<f64>,

    #[arg(long, value_name = "US")]
    pub t_mem_us: Option<f64>,
    #[arg(long, value_name = "US")]
    pub t_sw_us: Option<f64>,
    #[arg(long, value_name = "US")]
    pub t_io_pre_us: Option<f64>,
    #[arg(long, value_name = "US")]
    pub t_io_post_us: Option<f64>,
    #[arg(long, value_name = "US")]
    pub l_mem_us: Option<f64>,
    #[arg(long, value_name = "US")]
    pub l_io_us: Option<f64>,
    #[arg(long, value_name = "US")]
    pub l_dram_us: Option<f64>,
    /// Memory accesses per IO.
    #[arg(long)]
    pub m: Option<f64>,
    /// IOs per operation.
    #[arg(long)]
    pub s: Option<f64>,
    /// Prefetch queue depth.
    #[arg(long)]
    pub p: Option<f64>,
    /// Threads for the model variants that use it.
    #[arg(long)]
    pub n: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_name = "BYTES")]
    pub a_mem: Option<f64>,
    #[arg(long, value_name = "BYTES_PER_S")]
    pub b_mem: Option<f64>,
    #[arg(long, value_name = "BYTES")]
    pub a_io: Option<f64>,
    #[arg(long, value_name = "BYTES_PER_S")]
    pub b_io: Option<f64>,
    #[arg(long, value_name = "OPS_PER_S")]
    pub r_io: Option<f64>,

    /// Grid axis as NAME=VALUES, e.g. `l_mem=0.1,0.5,1..10`. Repeatable.
    #[arg(long = "axis", value_name = "NAME=VALUES")]
    pub axes: Vec<String>,
    #[arg(long, value_delimiter = ',', value_parser = parse_variant)]
    pub variants: Option<Vec<Variant>>,
    /// Thread counts tried per point.
    #[arg(long, value_delimiter = ',')]
    pub threads: Option<Vec<u32>>,
    /// Skip the simulator in `sweep`.
    #[arg(long)]
    pub no_sim: bool,
    #[arg(long)]
    pub measure_ops: Option<u64>,
    #[arg(long)]
    pub warmup_ops: Option<u64>,
    /// Preset name or inline JSON profile.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long, value_enum)]
    pub hops: Option<HopShape>,
    #[arg(long, value_enum)]
    pub phasing: Option<PhasingKind>,
    #[arg(long, value_parser = parse_queue_policy)]
    pub queue_policy: Option<QueuePolicy>,
    /// Allowed relative error of the probabilistic model in `compare`.
    #[arg(long)]
    pub band: Option<f64>,
    #[arg(long)]
    pub max_points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CprArgs {
    #[command(flatten)]
    pub output: Output,
    /// Share of server cost in replaced DRAM.
    #[arg(long, default_value_t = 0.4)]
    pub c: f64,
    /// Relative bit cost of the replacement.
    #[arg(long, required_unless_present = "table")]
    pub b: Option<f64>,
    /// Throughput degradation.
    #[arg(long, required_unless_present = "table")]
    pub d: Option<f64>,
    /// Print the built-in endpoints for compressed DRAM and low-latency flash.
    #[arg(long, conflicts_with_all = ["b", "d"])]
    pub table: bool,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse()
}

fn parse_queue_policy(s: &str) -> std::result::Result<QueuePolicy, String> {
    serde_json::from_value(serde_json::Value::from(s.replace('-', "_")))
        .map_err(|_| format!("unknown queue policy `{s}` (block_issue, defer_start)"))
}

impl Common {
    fn overrides(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let flags = [
            (Axis::TMem, self.t_mem_us),
            (Axis::TSw, self.t_sw_us),
            (Axis::TIoPre, self.t_io_pre_us),
            (Axis::TIoPost, self.t_io_post_us),
            (Axis::LMem, self.l_mem_us),
            (Axis::LIo, self.l_io_us),
            (Axis::LDram, self.l_dram_us),
            (Axis::M, self.m),
            (Axis::S, self.s),
            (Axis::P, self.p),
            (Axis::N, self.n),
            (Axis::Rho, self.rho),
            (Axis::Epsilon, self.epsilon),
            (Axis::AMem, self.a_mem),
            (Axis::BMem, self.b_mem),
            (Axis::AIo, self.a_io),
            (Axis::BIo, self.b_io),
            (Axis::RIo, self.r_io),
        ];
        for (axis, v) in flags {
            if let Some(v) = v {
                cfg.params.insert(axis.name().to_string(), v);
            }
        }
        for arg in &self.axes {
            let (axis, values) = parse_axis_arg(arg)?;
            cfg.axes.insert(axis.name().to_string(), values);
        }
        if let Some(text) = &self.profile {
            let profile = if text.trim_start().starts_with('{') {
                ProfileSpec::Inline(parse_profile(text)?)
            } else {
                ProfileSpec::Preset(text.clone())
            };
            cfg.profile = Some(profile);
        }
        cfg.variants = self.variants.clone();
        cfg.include_sim = self.no_sim.then_some(false);
        cfg.thread_grid = self.threads.clone();
        cfg.seed = self.seed;
        cfg.baseline_latency_us = self.baseline_latency;
        cfg.tail_tol = self.tail_tol;
        cfg.max_points = self.max_points;
        cfg.band = self.band;
        cfg.sim.measure_ops = self.measure_ops;
        cfg.sim.warmup_ops = self.warmup_ops;
        cfg.sim.phasing = self.phasing;
        cfg.sim.hops = self.hops;
        cfg.sim.queue_policy = self.queue_policy;
        cfg.format = self.output.format;
        cfg.output = self.output.out.clone();
        Ok(cfg)
    }

    pub fn plan(&self) -> Result<Plan> {
        let file = match &self.config {
            Some(path) => RunConfig::from_json(&std::fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        Plan::from_config(&file.merge(self.overrides()?))
    }
}

fn emit(bytes: &[u8], out: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

/// Runs a parsed command, writing results to `stdout` (or the output file)
/// and diagnostics to `stderr`.
pub fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Model(c) => {
            let plan = c.plan()?;
            emit(&cmd_model(&plan)?.encode(plan.format, None)?, plan.output.as_ref(), stdout)
        }
        Command::Sim(c) => {
            let plan = c.plan()?;
            emit(&cmd_sim(&plan)?.encode(plan.format, None)?, plan.output.as_ref(), stdout)
        }
        Command::Sweep(c) => {
            let plan = c.plan()?;
            emit(&cmd_sweep(&plan)?.encode(plan.format, None)?, plan.output.as_ref(), stdout)
        }
        Command::Compare(c) => {
            let plan = c.plan()?;
            let cmp = cmd_compare(&plan)?;
            for s in &cmp.summary {
                writeln!(
                    stderr,
                    "{:<14} points {:>5}  min {:+.4}  max {:+.4}  mean {:+.4}",
                    s.variant.name(),
                    s.points,
                    s.min,
                    s.max,
                    s.mean
                )?;
            }
            let summary = serde_json::to_value(&cmp.summary)?;
            let bytes = cmp.table.encode(plan.format, Some(("summary", summary)))?;
            emit(&bytes, plan.output.as_ref(), stdout)?;
            cmp.check_band(plan.band)
        }
        Command::Cpr(a) => {
            let rows = if a.table {
                cpr_table(a.c)
            } else {
                let (b, d) = (a.b.unwrap_or_default(), a.d.unwrap_or_default());
                vec![("custom", "-", CprParams { c: a.c, b, d })]
            };
            let format = a.output.format.unwrap_or_default();
            emit(&cmd_cpr(&rows)?.encode(format, None)?, a.output.out.as_ref(), stdout)
        }
    }
}

/// Full command-line entry point; returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

