//! Closed-form throughput models.
//!
//! Every function works with reciprocal throughputs, i.e. core time per
//! operation in seconds. The memory-only variants describe one memory access
//! per operation; the memory-and-IO variants describe one IO preceded by
//! `m_accesses` memory accesses, and [`reciprocal_per_kv_op`] scales them to
//! operations that issue `s_ios` IOs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{CprParams, OperationModelParams, SystemParams};

/// Default relative tail mass dropped from the wait-time series.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Hard cap on the number of insertion rows summed by the wait-time series.
pub const DEFAULT_ROW_CAP: usize = 10_000;

/// Host DRAM latency used as the normalisation baseline by default.
pub const DEFAULT_BASELINE_LATENCY: f64 = 0.1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Single,
    Multi,
    MemPrefetchLimited,
    MaskOnly,
    BestCase,
    Probabilistic,
    Extended,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Single,
        Variant::Multi,
        Variant::MemPrefetchLimited,
        Variant::MaskOnly,
        Variant::BestCase,
        Variant::Probabilistic,
        Variant::Extended,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Single => "single",
            Variant::Multi => "multi",
            Variant::MemPrefetchLimited => "mem_prefetch_limited",
            Variant::MaskOnly => "mask_only",
            Variant::BestCase => "best_case",
            Variant::Probabilistic => "probabilistic",
            Variant::Extended => "extended",
        }
    }

    /// Whether the variant models operations that include an IO.
    pub fn has_io(self) -> bool {
        matches!(
            self,
            Variant::MaskOnly | Variant::BestCase | Variant::Probabilistic | Variant::Extended
        )
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == norm)
            .or(match norm.as_str() {
                "mask" => Some(Variant::MaskOnly),
                "best" => Some(Variant::BestCase),
                "prob" => Some(Variant::Probabilistic),
                "mem" | "prefetch_limited" => Some(Variant::MemPrefetchLimited),
                _ => None,
            })
            .ok_or_else(|| format!("unknown model variant `{s}`"))
    }
}

/// One evaluated model variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputPrediction {
    pub variant: Variant,
    /// Seconds per operation.
    pub reciprocal: f64,
    /// Operations per second.
    pub throughput: f64,
    /// Throughput relative to the same variant at the baseline latency.
    pub normalized: f64,
}

fn positive(r: f64) -> Result<f64> {
    if r > 0.0 && r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonPositiveReciprocal(r))
    }
}

/// Single thread, one access per operation: nothing overlaps.
pub fn reciprocal_single(p: &OperationModelParams) -> Result<f64> {
    positive(p.t_mem + p.l_mem)
}

/// Many threads with an unbounded prefetch queue: either the core or
/// Little's law over `n_threads` in-flight accesses is the bottleneck.
pub fn reciprocal_multi(p: &OperationModelParams) -> Result<f64> {
    let core = p.t_mem + p.t_sw;
    let little = (p.t_mem + p.l_mem) / f64::from(p.n_threads);
    positive(core.max(little))
}

fn mem_prefetch_limited(p: &OperationModelParams, l_mem: f64) -> f64 {
    let core = p.t_mem + p.t_sw;
    let little = (p.t_mem + l_mem) / f64::from(p.n_threads);
    let queue = l_mem / f64::from(p.prefetch_depth);
    core.max(little).max(queue)
}

/// Memory-only throughput with the prefetch queue limit added.
pub fn reciprocal_mem_prefetch_limited(p: &OperationModelParams) -> Result<f64> {
    positive(mem_prefetch_limited(p, p.l_mem))
}

/// Largest memory latency the memory-only model hides completely.
pub fn hidable_latency_mem_only(p: &OperationModelParams) -> f64 {
    f64::from(p.prefetch_depth) * (p.t_mem + p.t_sw)
}

/// Core time spent on IO per operation: both IO suboperations and their switches.
pub fn io_overhead(p: &OperationModelParams) -> f64 {
    p.t_io_pre + p.t_io_post + 2.0 * p.t_sw
}

/// `m_accesses` memory-only operations back to back, plus the IO overhead.
pub fn reciprocal_mask_only(p: &OperationModelParams) -> Result<f64> {
    positive(p.m_accesses * mem_prefetch_limited(p, p.l_mem) + io_overhead(p))
}

/// Perfectly interleaved suboperations: the prefetch cap applies only to the
/// whole operation.
pub fn reciprocal_best_case(p: &OperationModelParams) -> Result<f64> {
    let core = p.m_accesses * (p.t_mem + p.t_sw) + io_overhead(p);
    let queue = p.m_accesses * p.l_mem / f64::from(p.prefetch_depth);
    positive(core.max(queue))
}

/// Largest memory latency the best-case memory-and-IO model hides.
pub fn hidable_latency_with_io(p: &OperationModelParams) -> f64 {
    let depth = f64::from(p.prefetch_depth);
    depth * (p.t_mem + p.t_sw) + depth * io_overhead(p) / p.m_accesses
}

/// Prefetch wait seen after a window of `prefetch_depth` slot-consuming
/// suboperations, `j` of which are pre-IO, with `k` post-IO suboperations
/// interleaved.
pub fn wait_time(j: u32, k: u32, p: &OperationModelParams) -> f64 {
    let w = p.l_mem
        - hidable_latency_mem_only(p)
        - f64::from(j) * (p.t_io_pre - p.t_mem)
        - f64::from(k) * (p.t_io_post + p.t_sw);
    w.max(0.0)
}

/// Multinomial weight of a window with `j` pre-IO and `k` post-IO
/// suboperations under i.i.d. suboperation categories.
pub fn sequence_probability(j: u32, k: u32, p: &OperationModelParams) -> f64 {
    let m = p.m_accesses;
    let depth = p.prefetch_depth;
    assert!(j <= depth, "j = {j} exceeds the prefetch depth {depth}");
    let ln = LnFactorial::new((depth + k) as usize);
    let ln_mem = (m / (m + 2.0)).ln();
    let ln_io = (1.0 / (m + 2.0)).ln();
    let log_p = ln.get((depth + k) as usize)
        - ln.get((depth - j) as usize)
        - ln.get(j as usize)
        - ln.get(k as usize)
        + f64::from(depth - j) * ln_mem
        + f64::from(j + k) * ln_io;
    log_p.exp()
}

/// `ln(n!)` for every `n` up to a bound, accumulated as a running sum of logs.
struct LnFactorial(Vec<f64>);

impl LnFactorial {
    fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        let mut acc = 0.0_f64;
        table.push(0.0);
        for i in 1..=max {
            acc += (i as f64).ln();
            table.push(acc);
        }
        LnFactorial(table)
    }

    fn get(&self, n: usize) -> f64 {
        self.0[n]
    }
}

/// Wait-time series with a generic memory-latency function and an optional
/// fourth suboperation category (memory accesses whose prefetched line was
/// evicted before use). Both the plain probabilistic model and the extended
/// model go through here.
struct WaitSeries<'a> {
    p: &'a OperationModelParams,
    /// Probability of a slot-consuming memory suboperation.
    prob_mem: f64,
    /// Probability of a pre-IO (slot-consuming) and of a post-IO suboperation.
    prob_io: f64,
    /// Probability of a post-eviction memory suboperation.
    prob_evict: f64,
    /// Effective memory latency for a window with `j` pre-IO suboperations.
    latency: &'a dyn Fn(u32) -> f64,
}

impl WaitSeries<'_> {
    fn expected_wait(&self, tail_tol: f64, row_cap: usize) -> Result<f64> {
        let p = self.p;
        let depth = p.prefetch_depth;
        let slot_sum = hidable_latency_mem_only(p);
        let pre_cut = p.t_io_pre - p.t_mem;
        let post_cut = p.t_io_post + p.t_sw;

        let ln = LnFactorial::new(depth as usize + row_cap + 1);
        let ln_mem = self.prob_mem.ln();
        let ln_io = self.prob_io.ln();
        let ln_evict = self.prob_evict.ln();
        // Insertions (post-IO or post-eviction) arrive with this total probability.
        let insert = self.prob_io + self.prob_evict;
        let ln_insert_norm = (1.0 - insert).ln() * f64::from(depth + 1);

        let lat: Vec<f64> = (0..=depth).map(|j| (self.latency)(j)).collect();
        // Slot part of each term: choose which j of the depth slots are pre-IO.
        let slot_ln: Vec<f64> = (0..=depth)
            .map(|j| {
                -ln.get((depth - j) as usize) - ln.get(j as usize)
                    + f64::from(depth - j) * ln_mem
                    + f64::from(j) * ln_io
            })
            .collect();

        let mut num = 0.0;
        let mut den = 0.0;
        let mut cum = 0.0;
        let mut row = 0usize;
        loop {
            if row > row_cap {
                return Err(Error::NonConvergent {
                    cap: row_cap,
                    tail_tol,
                });
            }
            let n = row as u32;
            let len = f64::from(depth + n);
            let e_max = if self.prob_evict > 0.0 { n } else { 0 };
            for e in 0..=e_max {
                let k = n - e;
                let mut ln_ins = ln.get((depth + n) as usize)
                    - ln.get(k as usize)
                    + f64::from(k) * ln_io;
                if e > 0 {
                    ln_ins += -ln.get(e as usize) + f64::from(e) * ln_evict;
                }
                for j in 0..=depth {
                    let weight = (ln_ins + slot_ln[j as usize]).exp();
                    let l_eff = lat[j as usize];
                    let mut w = l_eff
                        - slot_sum
                        - f64::from(j) * pre_cut
                        - f64::from(k) * post_cut;
                    if e > 0 {
                        w -= f64::from(e) * (l_eff + p.t_sw);
                    }
                    if w > 0.0 {
                        num += weight * w;
                    }
                    den += weight * len;
                }
            }
            // Normalised mass of insertion row n: C(P+n, n) s^n (1-s)^(P+1).
            let row_ln = ln.get((depth + n) as usize) - ln.get(depth as usize) - ln.get(row)
                + f64::from(n) * insert.ln()
                + ln_insert_norm;
            cum += row_ln.exp();
            if 1.0 - cum < tail_tol {
                break;
            }
            row += 1;
        }
        Ok(num / den)
    }
}

fn check_tol(tail_tol: f64) -> Result<()> {
    if tail_tol > 0.0 && tail_tol < 1.0 {
        Ok(())
    } else {
        Err(crate::error::invalid("tail_tol", format!("must lie in (0, 1), got {tail_tol}")))
    }
}

fn base_series<'a>(p: &'a OperationModelParams, latency: &'a dyn Fn(u32) -> f64) -> WaitSeries<'a> {
    let m = p.m_accesses;
    WaitSeries {
        p,
        prob_mem: m / (m + 2.0),
        prob_io: 1.0 / (m + 2.0),
        prob_evict: 0.0,
        latency,
    }
}

/// Expected prefetch wait per suboperation, as the ratio of the expected
/// window wait to the expected window length.
pub fn expected_wait_per_subop(p: &OperationModelParams, tail_tol: f64) -> Result<f64> {
    expected_wait_per_subop_capped(p, tail_tol, DEFAULT_ROW_CAP)
}

pub fn expected_wait_per_subop_capped(
    p: &OperationModelParams,
    tail_tol: f64,
    row_cap: usize,
) -> Result<f64> {
    check_tol(tail_tol)?;
    let l_mem = p.l_mem;
    let latency = move |_j: u32| l_mem;
    base_series(p, &latency).expected_wait(tail_tol, row_cap)
}

/// Throughput model for randomly interleaved suboperations.
pub fn reciprocal_probabilistic(p: &OperationModelParams, tail_tol: f64) -> Result<f64> {
    let wait = expected_wait_per_subop(p, tail_tol)?;
    let m = p.m_accesses;
    positive(m * (p.t_mem + p.t_sw) + io_overhead(p) + (m + 2.0) * wait)
}

/// Memory latency after tiering and the memory bandwidth floor for a window
/// holding `prefetch_depth - j` memory accesses.
pub fn effective_memory_latency(j: u32, p: &OperationModelParams, s: &SystemParams) -> f64 {
    let accesses = f64::from(p.prefetch_depth.saturating_sub(j));
    s.tiered_latency(p.l_mem).max(accesses * s.mem_transfer_time())
}

/// Probabilistic model revised for tiering, memory bandwidth and premature
/// eviction, capped by SSD bandwidth and IOPS.
pub fn reciprocal_extended(p: &OperationModelParams, s: &SystemParams, tail_tol: f64) -> Result<f64> {
    Ok(reciprocal_extended_parts(p, s, tail_tol)?.0)
}

/// Extended model split into its three terms: revised core time, SSD
/// bandwidth floor and SSD IOPS floor. The reciprocal is their maximum.
pub fn reciprocal_extended_parts(
    p: &OperationModelParams,
    s: &SystemParams,
    tail_tol: f64,
) -> Result<(f64, f64, f64, f64)> {
    check_tol(tail_tol)?;
    let m = p.m_accesses;
    let eps = s.epsilon;
    let latency = |j: u32| effective_memory_latency(j, p, s);
    let mut series = base_series(p, &latency);
    if eps > 0.0 {
        series.prob_mem = (1.0 - eps) * m / (m + 2.0);
        series.prob_evict = eps * m / (m + 2.0);
    }
    let wait = series.expected_wait(tail_tol, DEFAULT_ROW_CAP)?;
    let core = if eps > 0.0 {
        // A post-eviction access occupies the core for a demand fetch.
        let demand = s.tiered_latency(p.l_mem).max(s.mem_transfer_time());
        (1.0 - eps) * m * (p.t_mem + p.t_sw) + eps * m * (demand + p.t_sw)
    } else {
        m * (p.t_mem + p.t_sw)
    };
    let revised = core + io_overhead(p) + (m + 2.0) * wait;
    let bw = s.b_io.map_or(0.0, |b| s.a_io / b);
    let iops = s.r_io.map_or(0.0, |r| 1.0 / r);
    Ok((positive(revised.max(bw).max(iops))?, revised, bw, iops))
}

/// Reciprocal throughput of one variant, per memory access for the
/// memory-only variants and per IO for the others.
pub fn reciprocal(
    variant: Variant,
    p: &OperationModelParams,
    s: &SystemParams,
    tail_tol: f64,
) -> Result<f64> {
    match variant {
        Variant::Single => reciprocal_single(p),
        Variant::Multi => reciprocal_multi(p),
        Variant::MemPrefetchLimited => reciprocal_mem_prefetch_limited(p),
        Variant::MaskOnly => reciprocal_mask_only(p),
        Variant::BestCase => reciprocal_best_case(p),
        Variant::Probabilistic => reciprocal_probabilistic(p, tail_tol),
        Variant::Extended => reciprocal_extended(p, s, tail_tol),
    }
}

/// Reciprocal throughput per key-value operation. Memory-and-IO variants are
/// evaluated per IO with `m_accesses` hops and scaled by `s_ios`; memory-only
/// variants are returned unchanged.
pub fn reciprocal_per_kv_op(
    variant: Variant,
    p: &OperationModelParams,
    s: &SystemParams,
    tail_tol: f64,
) -> Result<f64> {
    let r = reciprocal(variant, p, s, tail_tol)?;
    Ok(if variant.has_io() { p.s_ios * r } else { r })
}

/// Splits an operation with `m_total` hops and `s_ios` IOs into per-IO form.
pub fn split_per_io(p: &OperationModelParams, m_total: f64, s_ios: f64) -> OperationModelParams {
    OperationModelParams {
        m_accesses: m_total / s_ios,
        s_ios,
        ..*p
    }
}

/// Evaluates one variant and normalises it against the same variant at
/// `l_baseline`.
pub fn predict(
    variant: Variant,
    p: &OperationModelParams,
    s: &SystemParams,
    tail_tol: f64,
    l_baseline: f64,
) -> Result<ThroughputPrediction> {
    let reciprocal = reciprocal_per_kv_op(variant, p, s, tail_tol)?;
    let base = reciprocal_per_kv_op(variant, &p.with_l_mem(l_baseline), s, tail_tol)?;
    Ok(ThroughputPrediction {
        variant,
        reciprocal,
        throughput: 1.0 / reciprocal,
        normalized: base / reciprocal,
    })
}

/// Fractional throughput loss at `l_eval` relative to `l_baseline`.
pub fn normalized_degradation(
    variant: Variant,
    p: &OperationModelParams,
    s: &SystemParams,
    l_baseline: f64,
    l_eval: f64,
    tail_tol: f64,
) -> Result<f64> {
    let base = reciprocal_per_kv_op(variant, &p.with_l_mem(l_baseline), s, tail_tol)?;
    let eval = reciprocal_per_kv_op(variant, &p.with_l_mem(l_eval), s, tail_tol)?;
    Ok(1.0 - base / eval)
}

/// Cost-performance of a server whose DRAM share `c` is replaced by memory of
/// relative bit cost `b`, at throughput degradation `d`.
pub fn cpr(c: &CprParams) -> f64 {
    (1.0 - c.d) / (c.c * c.b + (1.0 - c.c))
}
