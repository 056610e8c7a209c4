//! Discrete-event simulation of one CPU core running cooperative user-level
//! threads.
//!
//! Each thread repeatedly executes operations made of memory suboperations
//! (compute, prefetch the next pointer, yield) followed by a pre-IO
//! suboperation (submit an asynchronous IO, yield) and a post-IO suboperation
//! (consume the IO, yield). Ready threads are served in FIFO order. The core
//! stalls when a resumed thread's prefetched line has not arrived. At most
//! `prefetch_depth` prefetches are in flight. A prefetch issued while every
//! slot is busy stalls the core until one frees, or with
//! [`QueuePolicy::DeferStart`] waits in a queue while the core moves on. A
//! thread whose IO is still pending when resumed pays one context switch and
//! yields again.
//!
//! Time is kept in integer picoseconds, so identical configs produce
//! bit-identical results.

mod engine;
mod histogram;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{OperationModelParams, SystemParams};
use crate::workload::{HopDistribution, IoCountModel, WorkloadProfile};

pub use engine::{from_ps, to_ps};
pub use histogram::{LatencyHistogram, DEFAULT_BUCKET_PS};

/// Thread start offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phasing {
    /// All threads start together in thread order.
    Aligned,
    /// Each thread starts after a uniform random delay in
    /// `[0, one single-threaded operation)`.
    Staggered { seed: u64 },
}

/// One point of an IO latency mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyPoint {
    pub latency: f64,
    pub probability: f64,
}

/// What happens to a prefetch issued while all prefetch slots are busy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueuePolicy {
    /// The core stalls at the prefetch instruction until a slot frees.
    #[default]
    BlockIssue,
    /// The prefetch is queued and starts when a slot frees; the core moves on.
    DeferStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    MemoryAndIo,
    /// Operations consist of memory suboperations only.
    MemoryOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: OperationModelParams,
    pub system: SystemParams,
    /// Memory hops per operation.
    pub m_distribution: HopDistribution,
    /// IOs per operation. `None` draws `params.s_ios` IOs per operation.
    pub io_count: Option<IoCountModel>,
    pub phasing: Phasing,
    /// Empty means a point mass at `params.l_io`.
    pub io_latency_mixture: Vec<LatencyPoint>,
    /// Operations completed before measurement starts. `None` means
    /// ten per thread.
    pub warmup_ops: Option<u64>,
    pub measure_ops: u64,
    pub seed: u64,
    pub mode: SimMode,
    #[serde(default)]
    pub queue_policy: QueuePolicy,
}

impl SimConfig {
    /// Fixed-shape operations: `m_accesses * s_ios` hops and `s_ios` IOs,
    /// staggered start, unbounded system.
    pub fn new(params: OperationModelParams) -> Self {
        let hops = (params.m_accesses * params.s_ios).round().max(0.0) as u32;
        SimConfig {
            params,
            system: SystemParams::unbounded(),
            m_distribution: HopDistribution::Fixed { hops },
            io_count: None,
            phasing: Phasing::Staggered { seed: 0 },
            io_latency_mixture: Vec::new(),
            warmup_ops: None,
            measure_ops: 20_000,
            seed: 0,
            mode: SimMode::MemoryAndIo,
            queue_policy: QueuePolicy::default(),
        }
    }

    /// Simulates operations drawn from a workload profile.
    pub fn from_profile(params: OperationModelParams, profile: &WorkloadProfile) -> Self {
        SimConfig {
            m_distribution: profile.hops_per_op,
            io_count: Some(profile.io_count),
            ..Self::new(params)
        }
    }

    pub fn io_model(&self) -> IoCountModel {
        self.io_count.unwrap_or(IoCountModel::FixedIos {
            ios: self.params.s_ios,
        })
    }

    pub fn warmup(&self) -> u64 {
        self.warmup_ops
            .unwrap_or(10 * u64::from(self.params.n_threads))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.system.validate()?;
        self.m_distribution.validate()?;
        let io = self.io_model();
        io.validate()?;
        if self.measure_ops < 1 {
            return Err(Error::InvalidConfig("measure_ops must be >= 1".into()));
        }
        let hops_may_be_zero = self.m_distribution.min() == 0;
        let no_io = self.mode == SimMode::MemoryOnly || io.may_be_zero();
        if hops_may_be_zero && no_io {
            return Err(Error::InvalidConfig(
                "operations may have neither memory hops nor IOs".into(),
            ));
        }
        if self.phasing == Phasing::Aligned
            && !(self.m_distribution.is_fixed()
                && (self.mode == SimMode::MemoryOnly || io.is_deterministic()))
        {
            return Err(Error::InvalidConfig(
                "aligned phasing needs a fixed operation shape".into(),
            ));
        }
        if !self.io_latency_mixture.is_empty() {
            let mut total = 0.0;
            for pt in &self.io_latency_mixture {
                if !(pt.latency >= 0.0 && pt.latency.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "mixture latency must be >= 0, got {}",
                        pt.latency
                    )));
                }
                if !(0.0..=1.0).contains(&pt.probability) {
                    return Err(Error::InvalidConfig(format!(
                        "mixture probability must lie in [0, 1], got {}",
                        pt.probability
                    )));
                }
                total += pt.probability;
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "mixture probabilities sum to {total}, expected 1"
                )));
            }
        }
        Ok(())
    }
}

/// Suboperations executed during measurement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubopCounts {
    pub memory: u64,
    pub pre_io: u64,
    pub post_io: u64,
    /// Loads whose prefetched line had been evicted and was fetched again.
    pub evicted_reload: u64,
    /// Resumptions that found the IO still pending.
    pub io_polls: u64,
}

/// Where one thread's measured time went.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadTimes {
    /// Running on the core: compute, switches, polls (ps).
    pub busy_ps: u64,
    /// On the core, waiting for its load (ps).
    pub stall_ps: u64,
    /// Waiting in the ready queue or not yet started (ps).
    pub queued_ps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub n_threads: u32,
    pub ops_completed: u64,
    /// Measured simulated time in seconds.
    pub sim_time: f64,
    /// Operations per second.
    pub throughput: f64,
    /// Core time spent waiting for loads, in seconds.
    pub stall_time_total: f64,
    /// Part of the stall spent waiting for a prefetch slot before the fetch
    /// even started, in seconds.
    pub slot_wait_total: f64,
    /// Core time with no ready thread, in seconds.
    pub idle_time_total: f64,
    pub load_latency_histogram: LatencyHistogram,
    pub subop_counts: SubopCounts,
    /// Mean time from operation start to completion, in seconds.
    pub mean_op_latency: f64,
    /// Largest number of simultaneously in-flight prefetches.
    pub max_prefetches_in_flight: u32,
    /// Largest fetch latency (start to data arrival) in the run, in seconds.
    pub max_fetch_latency: f64,
    pub thread_times: Vec<ThreadTimes>,
    pub measured_ps: u64,
}

impl SimResult {
    /// Share of measured core time spent stalled on loads.
    pub fn stall_share(&self) -> f64 {
        if self.sim_time > 0.0 {
            self.stall_time_total / self.sim_time
        } else {
            0.0
        }
    }
}

/// Runs the configured machine until `measure_ops` operations complete after
/// warm-up.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    Ok(engine::Machine::new(cfg).run())
}

/// Runs the machine with the IO segment removed from every operation.
pub fn run_memory_only(cfg: &SimConfig) -> Result<SimResult> {
    let cfg = SimConfig {
        mode: SimMode::MemoryOnly,
        ..cfg.clone()
    };
    run_simulation(&cfg)
}

/// Result of a thread-count sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreadSweep {
    pub best_n: u32,
    pub best: SimResult,
    pub all: Vec<SimResult>,
}

/// Simulates every candidate thread count and keeps the fastest, preferring
/// fewer threads on ties. Results in `all` follow the candidate order.
pub fn sweep_thread_count(cfg: &SimConfig, n_candidates: &[u32]) -> Result<ThreadSweep> {
    if n_candidates.is_empty() {
        return Err(Error::InvalidConfig("empty thread-count candidate list".into()));
    }
    let mut all = Vec::with_capacity(n_candidates.len());
    for &n in n_candidates {
        let mut c = cfg.clone();
        c.params.n_threads = n;
        all.push(run_simulation(&c)?);
    }
    let best_idx = best_index(&all);
    Ok(ThreadSweep {
        best_n: all[best_idx].n_threads,
        best: all[best_idx].clone(),
        all,
    })
}

/// Index of the highest throughput, smaller thread count first on ties.
pub fn best_index(results: &[SimResult]) -> usize {
    let mut best = 0;
    for (i, r) in results.iter().enumerate().skip(1) {
        let b = &results[best];
        if r.throughput > b.throughput
            || (r.throughput == b.throughput && r.n_threads < b.n_threads)
        {
            best = i;
        }
    }
    best
}
