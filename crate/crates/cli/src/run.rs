//! The subcommands, as library functions returning tables.

use memtol::model::{predict, Variant};
use memtol::sim::{best_index, run_simulation, Phasing, SimConfig, SimResult};
use memtol::workload::HopDistribution;
use memtol::CprParams;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{HopShape, PhasingKind, Plan};
use crate::error::{CliError, Result};
use crate::grid::{expand, Point};
use crate::report::{Cell, Table};

pub const INPUT_COLUMNS: [&str; 19] = [
    "point",
    "t_mem",
    "t_sw",
    "t_io_pre",
    "t_io_post",
    "l_mem",
    "l_io",
    "n_threads",
    "prefetch_depth",
    "m_accesses",
    "s_ios",
    "rho",
    "epsilon",
    "l_dram",
    "a_mem",
    "b_mem",
    "a_io",
    "b_io",
    "r_io",
];

pub const MODEL_COLUMNS: [&str; 4] = ["variant", "reciprocal", "throughput", "normalized"];

pub const SIM_COLUMNS: [&str; 12] = [
    "seed",
    "best_n",
    "throughput",
    "stall_share",
    "slot_wait_share",
    "idle_share",
    "io_polls_per_op",
    "load_latency_mean",
    "load_latency_max",
    "full_latency_fraction",
    "evicted_reload_fraction",
    "ops_measured",
];

pub const SWEEP_EXTRA_COLUMNS: [&str; 3] = ["sim_best_n", "sim_throughput", "error"];

const IO_VARIANTS: [Variant; 4] = [
    Variant::MaskOnly,
    Variant::BestCase,
    Variant::Probabilistic,
    Variant::Extended,
];

fn columns(groups: &[&[&'static str]]) -> Vec<&'static str> {
    groups.iter().flat_map(|g| g.iter().copied()).collect()
}

fn inputs(pt: &Point) -> Vec<Cell> {
    let (p, s) = (&pt.params, &pt.system);
    vec![
        pt.index.into(),
        p.t_mem.into(),
        p.t_sw.into(),
        p.t_io_pre.into(),
        p.t_io_post.into(),
        p.l_mem.into(),
        p.l_io.into(),
        p.n_threads.into(),
        p.prefetch_depth.into(),
        p.m_accesses.into(),
        p.s_ios.into(),
        s.rho.into(),
        s.epsilon.into(),
        s.l_dram.into(),
        s.a_mem.into(),
        s.b_mem.into(),
        s.a_io.into(),
        s.b_io.into(),
        s.r_io.into(),
    ]
}

fn model_cells(plan: &Plan, pt: &Point, variant: Variant) -> Result<Vec<Cell>> {
    let pr = predict(variant, &pt.params, &pt.system, plan.tail_tol, plan.baseline_latency)?;
    Ok(vec![
        variant.name().into(),
        pr.reciprocal.into(),
        pr.throughput.into(),
        pr.normalized.into(),
    ])
}

fn variants(plan: &Plan, default: &[Variant]) -> Vec<Variant> {
    plan.variants.clone().unwrap_or_else(|| default.to_vec())
}

/// Simulator seed for one grid point. Each point draws from its own stream,
/// so results do not depend on which points share a run.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Simulator configuration for one point, with `n_threads` left as given.
pub fn sim_config(plan: &Plan, pt: &Point) -> SimConfig {
    let seed = point_seed(plan.seed, pt.index);
    let mut cfg = match &plan.profile {
        Some(profile) => SimConfig::from_profile(pt.params, profile),
        None => {
            let mut cfg = SimConfig::new(pt.params);
            if plan.hops == HopShape::Geometric {
                cfg.m_distribution = HopDistribution::Geometric {
                    mean: pt.params.m_accesses * pt.params.s_ios,
                };
            }
            cfg
        }
    };
    cfg.system = pt.system;
    cfg.seed = seed;
    cfg.phasing = match plan.phasing {
        PhasingKind::Aligned => Phasing::Aligned,
        PhasingKind::Staggered => Phasing::Staggered { seed: seed ^ 0x9e37_79b9_7f4a_7c15 },
    };
    cfg.io_latency_mixture = plan.io_latency_mixture.clone();
    cfg.warmup_ops = plan.warmup_ops;
    cfg.measure_ops = plan.measure_ops;
    cfg.queue_policy = plan.queue_policy;
    cfg
}

/// Best-N simulation result for every point, in point order.
pub fn simulate(plan: &Plan, points: &[Point]) -> Result<Vec<SimResult>> {
    let grid = &plan.thread_grid;
    let configs: Vec<SimConfig> = points.iter().map(|pt| sim_config(plan, pt)).collect();
    let runs: Vec<Result<SimResult>> = (0..points.len() * grid.len())
        .into_par_iter()
        .map(|i| {
            let mut cfg = configs[i / grid.len()].clone();
            cfg.params.n_threads = grid[i % grid.len()];
            Ok(run_simulation(&cfg)?)
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(runs
        .chunks(grid.len())
        .map(|chunk| chunk[best_index(chunk)].clone())
        .collect())
}

fn sim_cells(plan: &Plan, pt: &Point, r: &SimResult) -> Vec<Cell> {
    let ops = r.ops_completed as f64;
    let share = |x: f64| if r.sim_time > 0.0 { x / r.sim_time } else { 0.0 };
    let h = &r.load_latency_histogram;
    let c = &r.subop_counts;
    let reload = if c.memory > 0 { c.evicted_reload as f64 / c.memory as f64 } else { 0.0 };
    vec![
        point_seed(plan.seed, pt.index).into(),
        r.n_threads.into(),
        r.throughput.into(),
        r.stall_share().into(),
        share(r.slot_wait_total).into(),
        share(r.idle_time_total).into(),
        (c.io_polls as f64 / ops).into(),
        h.mean().into(),
        h.max_latency().into(),
        h.fraction_at(pt.params.l_mem).into(),
        reload.into(),
        r.ops_completed.into(),
    ]
}

/// One row per point per variant.
pub fn cmd_model(plan: &Plan) -> Result<Table> {
    let points = expand(plan)?;
    let vs = variants(plan, &Variant::ALL);
    let mut table = Table::new(columns(&[&INPUT_COLUMNS, &MODEL_COLUMNS]));
    for pt in &points {
        for &v in &vs {
            let mut row = inputs(pt);
            row.extend(model_cells(plan, pt, v)?);
            table.push(row);
        }
    }
    Ok(table)
}

/// One row per point: the fastest thread count from the grid.
pub fn cmd_sim(plan: &Plan) -> Result<Table> {
    let points = expand(plan)?;
    let results = simulate(plan, &points)?;
    let mut table = Table::new(columns(&[&INPUT_COLUMNS, &SIM_COLUMNS]));
    for (pt, r) in points.iter().zip(&results) {
        let mut row = inputs(pt);
        row.extend(sim_cells(plan, pt, r));
        table.push(row);
    }
    Ok(table)
}

/// Model rows, each followed by the simulator's best throughput at that
/// point and the relative model error. The model is evaluated at the
/// simulator's best thread count.
pub fn cmd_sweep(plan: &Plan) -> Result<Table> {
    let points = expand(plan)?;
    let vs = variants(plan, &IO_VARIANTS);
    let results = if plan.include_sim {
        Some(simulate(plan, &points)?)
    } else {
        None
    };
    let mut table = Table::new(columns(&[&INPUT_COLUMNS, &MODEL_COLUMNS, &SWEEP_EXTRA_COLUMNS]));
    for (i, pt) in points.iter().enumerate() {
        let sim = results.as_ref().map(|r| &r[i]);
        let mut pt = *pt;
        if let Some(r) = sim {
            pt.params.n_threads = r.n_threads;
        }
        for &v in &vs {
            let mut row = inputs(&pt);
            let model = model_cells(plan, &pt, v)?;
            let Cell::Float(theta) = model[2] else { unreachable!() };
            row.extend(model);
            match sim {
                Some(r) => row.extend([
                    r.n_threads.into(),
                    r.throughput.into(),
                    ((theta - r.throughput) / r.throughput).into(),
                ]),
                None => row.extend([Cell::Empty, Cell::Empty, Cell::Empty]),
            }
            table.push(row);
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub variant: Variant,
    pub points: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

pub struct Comparison {
    pub table: Table,
    pub summary: Vec<ErrorSummary>,
}

/// Model-versus-simulator errors per point and their range per variant.
pub fn cmd_compare(plan: &Plan) -> Result<Comparison> {
    let vs = variants(plan, &IO_VARIANTS);
    if let Some(v) = vs.iter().find(|v| !v.has_io()) {
        return Err(CliError::Usage(format!(
            "`{v}` models memory-only operations and cannot be compared with the simulator"
        )));
    }
    let plan = Plan {
        include_sim: true,
        variants: Some(vs.clone()),
        ..plan.clone()
    };
    let table = cmd_sweep(&plan)?;
    let summary = vs
        .iter()
        .map(|&v| {
            let errs: Vec<f64> = (0..table.rows.len())
                .filter(|&r| table.get(r, "variant") == Some(&Cell::Text(v.name().into())))
                .filter_map(|r| table.float(r, "error"))
                .collect();
            ErrorSummary {
                variant: v,
                points: errs.len(),
                min: errs.iter().copied().fold(f64::INFINITY, f64::min),
                max: errs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean: errs.iter().sum::<f64>() / errs.len() as f64,
            }
        })
        .collect();
    Ok(Comparison { table, summary })
}

impl Comparison {
    /// Fails when the probabilistic variant's error leaves `±band`.
    pub fn check_band(&self, band: f64) -> Result<()> {
        for s in &self.summary {
            if s.variant == Variant::Probabilistic && !(s.min >= -band && s.max <= band) {
                return Err(CliError::BandViolation {
                    band,
                    min: s.min,
                    max: s.max,
                });
            }
        }
        Ok(())
    }
}

/// Endpoints of the cost-performance comparison: relative bit cost and
/// throughput degradation for each replacement medium.
pub const CPR_TABLE: [(&str, &str, f64, f64); 4] = [
    ("compressed_dram", "low", 0.5, 0.02),
    ("compressed_dram", "high", 1.0 / 3.0, 0.0),
    ("low_latency_flash", "low", 0.2, 0.19),
    ("low_latency_flash", "high", 0.15, 0.02),
];

pub const CPR_COLUMNS: [&str; 6] = ["medium", "end", "c", "b", "d", "cpr"];

/// One row per `(medium, end, params)`.
pub fn cmd_cpr(rows: &[(&str, &str, CprParams)]) -> Result<Table> {
    let mut table = Table::new(CPR_COLUMNS.to_vec());
    for (medium, end, c) in rows {
        c.validate()?;
        table.push(vec![
            (*medium).into(),
            (*end).into(),
            c.c.into(),
            c.b.into(),
            c.d.into(),
            memtol::model::cpr(c).into(),
        ]);
    }
    Ok(table)
}

/// The built-in endpoint table at DRAM share `c`.
pub fn cpr_table(c: f64) -> Vec<(&'static str, &'static str, CprParams)> {
    CPR_TABLE
        .iter()
        .map(|&(medium, end, b, d)| (medium, end, CprParams { c, b, d }))
        .collect()
}
