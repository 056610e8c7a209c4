//! Parameter sets shared by the closed-form models and the simulator.
//!
//! All durations are seconds, sizes are bytes and rates are per second.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Microseconds to seconds.
pub const fn us(x: f64) -> f64 {
    x * 1e-6
}

/// Seconds to microseconds.
pub const fn to_us(seconds: f64) -> f64 {
    seconds * 1e6
}

/// Per-core timing and shape parameters of one key-value operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperationModelParams {
    /// Compute time of a memory suboperation.
    pub t_mem: f64,
    /// User-level context switch time.
    pub t_sw: f64,
    /// Pre-IO suboperation time (address computation and submission).
    pub t_io_pre: f64,
    /// Post-IO suboperation time (completion check and data use).
    pub t_io_post: f64,
    /// Load latency of secondary memory.
    pub l_mem: f64,
    /// Device latency of one IO. The closed forms assume it is hidden.
    pub l_io: f64,
    /// User-level threads per core.
    pub n_threads: u32,
    /// Prefetch queue depth per core.
    pub prefetch_depth: u32,
    /// Mean memory accesses per IO.
    pub m_accesses: f64,
    /// Mean IOs per key-value operation.
    pub s_ios: f64,
}

impl OperationModelParams {
    /// The illustrative values used throughout the analysis: 0.1 µs memory
    /// suboperations, 0.05 µs switches, 4 µs / 3 µs IO suboperations, P = M = 10.
    ///
    /// `n_threads` is set high enough that the Little's-law term of the
    /// multi-threaded bound never binds below 100 µs of latency.
    pub fn example() -> Self {
        OperationModelParams {
            t_mem: us(0.1),
            t_sw: us(0.05),
            t_io_pre: us(4.0),
            t_io_post: us(3.0),
            l_mem: us(5.0),
            l_io: us(80.0),
            n_threads: 1024,
            prefetch_depth: 10,
            m_accesses: 10.0,
            s_ios: 1.0,
        }
    }

    pub fn with_l_mem(mut self, l_mem: f64) -> Self {
        self.l_mem = l_mem;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let durations = [
            ("t_mem", self.t_mem),
            ("t_sw", self.t_sw),
            ("t_io_pre", self.t_io_pre),
            ("t_io_post", self.t_io_post),
            ("l_mem", self.l_mem),
            ("l_io", self.l_io),
        ];
        for (name, v) in durations {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be a finite duration >= 0, got {v}")));
            }
        }
        if self.n_threads < 1 {
            return Err(invalid("n_threads", "must be >= 1"));
        }
        if self.prefetch_depth < 1 {
            return Err(invalid("prefetch_depth", "must be >= 1"));
        }
        if !(self.m_accesses.is_finite() && self.m_accesses > 0.0) {
            return Err(invalid("m_accesses", format!("must be > 0, got {}", self.m_accesses)));
        }
        if !(self.s_ios.is_finite() && self.s_ios > 0.0) {
            return Err(invalid("s_ios", format!("must be > 0, got {}", self.s_ios)));
        }
        Ok(())
    }

    /// Time one memory suboperation occupies the core, switch included.
    pub fn mem_subop(&self) -> f64 {
        self.t_mem + self.t_sw
    }
}

impl Default for OperationModelParams {
    fn default() -> Self {
        Self::example()
    }
}

/// Device limits and tiering knobs. `None` rates mean unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Memory access (cacheline) size.
    pub a_mem: f64,
    /// Maximum memory bandwidth.
    pub b_mem: Option<f64>,
    /// IO access size.
    pub a_io: f64,
    /// Maximum SSD bandwidth.
    pub b_io: Option<f64>,
    /// Maximum SSD random-access rate.
    pub r_io: Option<f64>,
    /// Fraction of accesses served by secondary memory rather than DRAM.
    pub rho: f64,
    /// Probability that a prefetched line is evicted before it is used.
    pub epsilon: f64,
    /// DRAM latency.
    pub l_dram: f64,
}

impl SystemParams {
    /// No bandwidth or IOPS caps, everything offloaded, no eviction.
    pub fn unbounded() -> Self {
        SystemParams {
            a_mem: 64.0,
            b_mem: None,
            a_io: 4096.0,
            b_io: None,
            r_io: None,
            rho: 1.0,
            epsilon: 0.0,
            l_dram: us(0.1),
        }
    }

    /// The evaluation machine's limits: 10 GB/s memory and SSD bandwidth,
    /// 2.2 MIOPS, 64 B lines, 4 kB IOs.
    pub fn testbed() -> Self {
        SystemParams {
            b_mem: Some(10e9),
            b_io: Some(10e9),
            r_io: Some(2.2e6),
            ..Self::unbounded()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_mem.is_finite() && self.a_mem > 0.0) {
            return Err(invalid("a_mem", "must be > 0"));
        }
        if !(self.a_io.is_finite() && self.a_io > 0.0) {
            return Err(invalid("a_io", "must be > 0"));
        }
        for (name, v) in [("b_mem", self.b_mem), ("b_io", self.b_io), ("r_io", self.r_io)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(invalid(name, format!("must be > 0, got {v}")));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(invalid("rho", format!("must lie in [0, 1], got {}", self.rho)));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(invalid("epsilon", format!("must lie in [0, 1), got {}", self.epsilon)));
        }
        if !(self.l_dram.is_finite() && self.l_dram >= 0.0) {
            return Err(invalid("l_dram", "must be a finite duration >= 0"));
        }
        Ok(())
    }

    /// Minimum spacing between memory transfers, zero when unbounded.
    pub fn mem_transfer_time(&self) -> f64 {
        self.b_mem.map_or(0.0, |b| self.a_mem / b)
    }

    /// Minimum spacing between IO completions implied by the bandwidth and
    /// IOPS caps, zero when both are unbounded.
    pub fn io_service_time(&self) -> f64 {
        let bw = self.b_io.map_or(0.0, |b| self.a_io / b);
        let iops = self.r_io.map_or(0.0, |r| 1.0 / r);
        bw.max(iops)
    }

    /// Average latency after tiering between secondary memory and DRAM.
    pub fn tiered_latency(&self, l_mem: f64) -> f64 {
        self.rho * l_mem + (1.0 - self.rho) * self.l_dram
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::unbounded()
    }
}

/// Inputs to the cost-performance ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CprParams {
    /// Cost share of the replaced DRAM in the whole server.
    pub c: f64,
    /// Bit cost of secondary memory relative to DRAM.
    pub b: f64,
    /// Throughput degradation caused by secondary memory.
    pub d: f64,
}

impl CprParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(invalid("c", format!("must lie in (0, 1), got {}", self.c)));
        }
        if !(self.b > 0.0 && self.b <= 1.0) {
            return Err(invalid("b", format!("must lie in (0, 1], got {}", self.b)));
        }
        if !(self.d >= 0.0 && self.d < 1.0) {
            return Err(invalid("d", format!("must lie in [0, 1), got {}", self.d)));
        }
        Ok(())
    }
}
