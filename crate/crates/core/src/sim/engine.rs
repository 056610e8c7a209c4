use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    LatencyHistogram, Phasing, QueuePolicy, SimConfig, SimMode, SimResult, SubopCounts, ThreadTimes,
    DEFAULT_BUCKET_PS,
};
use crate::workload::{HopDistribution, IoCountModel};

/// Seconds to integer picoseconds.
pub fn to_ps(seconds: f64) -> u64 {
    (seconds * 1e12).round().max(0.0) as u64
}

pub fn from_ps(ps: u64) -> f64 {
    ps as f64 * 1e-12
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pending {
    Nothing,
    Load,
    Io { done: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum IoStage {
    NotSubmitted,
    Submitted,
}

#[derive(Debug, Clone, Copy)]
struct Fetch {
    serial: u64,
    start: Option<u64>,
    done: u64,
    evicted: bool,
}

#[derive(Debug, Clone)]
struct Thread {
    pending: Pending,
    fetch: Fetch,
    hops: u32,
    segments: u32,
    has_io: bool,
    segment: u32,
    hops_left: u32,
    io_stage: IoStage,
    op_start: u64,
    enqueued: u64,
    times: ThreadTimes,
}

enum Step {
    Mem,
    PreIo,
    PostIo,
    OpDone,
}

impl Thread {
    fn idle() -> Self {
        Thread {
            pending: Pending::Nothing,
            fetch: Fetch {
                serial: 0,
                start: None,
                done: 0,
                evicted: false,
            },
            hops: 0,
            segments: 1,
            has_io: false,
            segment: 0,
            hops_left: 0,
            io_stage: IoStage::NotSubmitted,
            op_start: 0,
            enqueued: 0,
            times: ThreadTimes::default(),
        }
    }

    fn segment_hops(&self, segment: u32) -> u32 {
        self.hops / self.segments + u32::from(segment < self.hops % self.segments)
    }

    fn begin_op(&mut self, hops: u32, ios: u32, now: u64) {
        self.hops = hops;
        self.has_io = ios > 0;
        self.segments = ios.max(1);
        self.segment = 0;
        self.hops_left = self.segment_hops(0);
        self.io_stage = IoStage::NotSubmitted;
        self.op_start = now;
    }

    /// Moves to the next segment; returns false once the operation is over.
    fn next_segment(&mut self) -> bool {
        self.segment += 1;
        if self.segment >= self.segments {
            return false;
        }
        self.hops_left = self.segment_hops(self.segment);
        self.io_stage = IoStage::NotSubmitted;
        true
    }

    fn next_step(&mut self) -> Step {
        loop {
            if self.hops_left > 0 {
                self.hops_left -= 1;
                return Step::Mem;
            }
            if self.has_io {
                match self.io_stage {
                    IoStage::NotSubmitted => {
                        self.io_stage = IoStage::Submitted;
                        return Step::PreIo;
                    }
                    IoStage::Submitted => return Step::PostIo,
                }
            }
            if !self.next_segment() {
                return Step::OpDone;
            }
        }
    }
}

/// Timing constants in picoseconds.
struct Timing {
    t_mem: u64,
    t_sw: u64,
    t_io_pre: u64,
    t_io_post: u64,
    l_mem: u64,
    l_dram: u64,
    l_io: u64,
    mem_gap: u64,
    io_gap: u64,
}

pub(super) struct Machine<'a> {
    cfg: &'a SimConfig,
    timing: Timing,
    hops: HopDistribution,
    ios: IoCountModel,
    memory_only: bool,
    io_mixture: Vec<(u64, f64)>,
    rng: ChaCha8Rng,

    now: u64,
    threads: Vec<Thread>,
    ready: VecDeque<u32>,
    arrivals: VecDeque<(u64, u32)>,
    /// Fraction of the first operation each thread skips.
    entry_point: Vec<f64>,

    depth: usize,
    releases: BinaryHeap<Reverse<u64>>,
    deferred: VecDeque<(u64, u32)>,
    next_serial: u64,
    mem_free: u64,
    io_free: u64,

    completed: u64,
    warmup: u64,
    target: u64,
    t_start: Option<u64>,

    hist: LatencyHistogram,
    counts: SubopCounts,
    stall_ps: u64,
    slot_wait_ps: u64,
    idle_ps: u64,
    op_latency_sum: u128,
    max_in_flight: usize,
    max_fetch_ps: u64,
}

impl<'a> Machine<'a> {
    pub(super) fn new(cfg: &'a SimConfig) -> Self {
        let p = &cfg.params;
        let s = &cfg.system;
        let timing = Timing {
            t_mem: to_ps(p.t_mem),
            t_sw: to_ps(p.t_sw),
            t_io_pre: to_ps(p.t_io_pre),
            t_io_post: to_ps(p.t_io_post),
            l_mem: to_ps(p.l_mem),
            l_dram: to_ps(s.l_dram),
            l_io: to_ps(p.l_io),
            mem_gap: to_ps(s.mem_transfer_time()),
            io_gap: to_ps(s.io_service_time()),
        };
        let n = p.n_threads as usize;
        let warmup = cfg.warmup();
        let mut m = Machine {
            cfg,
            timing,
            hops: cfg.m_distribution,
            ios: cfg.io_model(),
            memory_only: cfg.mode == SimMode::MemoryOnly,
            io_mixture: cfg
                .io_latency_mixture
                .iter()
                .map(|pt| (to_ps(pt.latency), pt.probability))
                .collect(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            now: 0,
            threads: vec![Thread::idle(); n],
            ready: VecDeque::with_capacity(n),
            arrivals: VecDeque::new(),
            entry_point: Vec::new(),
            depth: p.prefetch_depth as usize,
            releases: BinaryHeap::new(),
            deferred: VecDeque::new(),
            next_serial: 0,
            mem_free: 0,
            io_free: 0,
            completed: 0,
            warmup,
            target: warmup + cfg.measure_ops,
            t_start: (warmup == 0).then_some(0),
            hist: LatencyHistogram::new(DEFAULT_BUCKET_PS),
            counts: SubopCounts::default(),
            stall_ps: 0,
            slot_wait_ps: 0,
            idle_ps: 0,
            op_latency_sum: 0,
            max_in_flight: 0,
            max_fetch_ps: 0,
        };
        m.schedule_arrivals();
        m
    }

    fn schedule_arrivals(&mut self) {
        let n = self.threads.len() as u32;
        match self.cfg.phasing {
            Phasing::Aligned => {
                for tid in 0..n {
                    self.start_thread(tid, 0);
                    self.ready.push_back(tid);
                }
            }
            Phasing::Staggered { seed } => {
                let span = self.single_thread_op_ps().max(1);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut offsets: Vec<(u64, u32)> =
                    (0..n).map(|tid| (rng.gen_range(0..span), tid)).collect();
                self.entry_point = (0..n).map(|_| rng.gen()).collect();
                offsets.sort_unstable();
                self.arrivals = offsets.into();
            }
        }
    }

    /// Length of one operation executed by a lone thread, used as the
    /// stagger span.
    fn single_thread_op_ps(&self) -> u64 {
        let t = &self.timing;
        let hops = self.hops.mean();
        let mut len = hops * (t.t_mem + t.t_sw + t.l_mem) as f64;
        if !self.memory_only {
            len += self.ios.mean() * (t.t_io_pre + t.t_io_post + 2 * t.t_sw + t.l_io) as f64;
        }
        len.round() as u64
    }

    fn draw_op(&mut self) -> (u32, u32) {
        let hops = self.hops.sample(&mut self.rng);
        let ios = if self.memory_only {
            0
        } else {
            self.ios.sample(&mut self.rng)
        };
        (hops, ios)
    }

    fn start_thread(&mut self, tid: u32, at: u64) {
        let (hops, ios) = self.draw_op();
        let entry = self.entry_point.get(tid as usize).copied().unwrap_or(0.0);
        let th = &mut self.threads[tid as usize];
        th.begin_op(hops, ios, at);
        th.enqueued = 0;
        // Enter the first operation part-way through.
        let steps = hops + 2 * ios;
        for _ in 0..(entry * f64::from(steps)) as u32 {
            th.next_step();
        }
    }

    fn measuring(&self) -> bool {
        self.t_start.is_some()
    }

    fn sample_mem_latency(&mut self) -> u64 {
        let rho = self.cfg.system.rho;
        if rho >= 1.0 {
            self.timing.l_mem
        } else if rho <= 0.0 {
            self.timing.l_dram
        } else if self.rng.gen::<f64>() < rho {
            self.timing.l_mem
        } else {
            self.timing.l_dram
        }
    }

    fn sample_io_latency(&mut self) -> u64 {
        if self.io_mixture.is_empty() {
            return self.timing.l_io;
        }
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        for &(lat, prob) in &self.io_mixture {
            acc += prob;
            if u < acc {
                return lat;
            }
        }
        self.io_mixture.last().map_or(self.timing.l_io, |&(lat, _)| lat)
    }

    /// Starts a memory transfer at `at`; returns its completion time.
    fn memory_access(&mut self, at: u64) -> u64 {
        let service = at.max(self.mem_free);
        self.mem_free = service + self.timing.mem_gap;
        let done = service + self.sample_mem_latency();
        self.max_fetch_ps = self.max_fetch_ps.max(done - at);
        done
    }

    fn start_fetch(&mut self, at: u64, serial: u64, tid: u32) {
        let done = self.memory_access(at);
        self.releases.push(Reverse(done));
        self.max_in_flight = self.max_in_flight.max(self.releases.len());
        let f = &mut self.threads[tid as usize].fetch;
        if f.serial == serial {
            f.start = Some(at);
            f.done = done;
        }
    }

    /// Frees one prefetch slot and hands it to the oldest deferred prefetch.
    fn release_one(&mut self) -> Option<u64> {
        let Reverse(at) = self.releases.pop()?;
        if let Some((serial, tid)) = self.deferred.pop_front() {
            self.start_fetch(at, serial, tid);
        }
        Some(at)
    }

    fn advance_prefetches(&mut self, to: u64) {
        while matches!(self.releases.peek(), Some(&Reverse(t)) if t <= to) {
            self.release_one();
        }
    }

    fn issue_prefetch(&mut self, tid: u32) {
        self.advance_prefetches(self.now);
        self.next_serial += 1;
        let serial = self.next_serial;
        let eps = self.cfg.system.epsilon;
        let evicted = eps > 0.0 && self.rng.gen::<f64>() < eps;
        self.threads[tid as usize].fetch = Fetch {
            serial,
            start: None,
            done: 0,
            evicted,
        };
        if self.releases.len() < self.depth {
            self.start_fetch(self.now, serial, tid);
        } else if self.cfg.queue_policy == QueuePolicy::DeferStart {
            self.deferred.push_back((serial, tid));
        } else {
            let Reverse(free) = self.releases.pop().expect("full queue has a prefetch in flight");
            let wait = free - self.now;
            if self.measuring() {
                self.stall_ps += wait;
                self.slot_wait_ps += wait;
                self.threads[tid as usize].times.stall_ps += wait;
            }
            self.now = free;
            self.start_fetch(free, serial, tid);
        }
    }

    /// Resolves the load a resumed thread performs; returns the stall.
    fn resolve_load(&mut self, tid: u32) -> u64 {
        self.advance_prefetches(self.now);
        let now = self.now;
        let fetch = self.threads[tid as usize].fetch;
        let (stall, observed, slot_wait) = if fetch.evicted {
            // The line arrived and was evicted before use: demand fetch.
            let done = self.memory_access(now);
            if self.measuring() {
                self.counts.evicted_reload += 1;
            }
            (done - now, done - now, 0)
        } else {
            while self.threads[tid as usize].fetch.start.is_none() {
                self.release_one()
                    .expect("deferred prefetch with no prefetch in flight");
            }
            let f = self.threads[tid as usize].fetch;
            let start = f.start.unwrap_or(now);
            let stall = f.done.saturating_sub(now);
            let observed = f.done.saturating_sub(now.max(start));
            (stall, observed, start.saturating_sub(now))
        };
        if self.measuring() {
            self.hist.record(observed);
            self.stall_ps += stall;
            self.slot_wait_ps += slot_wait;
            self.threads[tid as usize].times.stall_ps += stall;
        }
        stall
    }

    fn submit_io(&mut self) -> u64 {
        let service = self.now.max(self.io_free);
        self.io_free = service + self.timing.io_gap;
        service + self.sample_io_latency()
    }

    fn busy(&mut self, tid: u32, dt: u64) {
        self.now += dt;
        if self.measuring() {
            self.threads[tid as usize].times.busy_ps += dt;
        }
    }

    /// Records a finished operation; returns true when the run is over.
    fn complete_op(&mut self, tid: u32) -> bool {
        self.completed += 1;
        let now = self.now;
        if self.measuring() {
            self.op_latency_sum += u128::from(now - self.threads[tid as usize].op_start);
        }
        if self.completed == self.warmup {
            self.t_start = Some(now);
        }
        if self.completed >= self.target {
            return true;
        }
        let (hops, ios) = self.draw_op();
        self.threads[tid as usize].begin_op(hops, ios, now);
        false
    }

    fn account_queue(&mut self, tid: u32, until: u64) {
        if let Some(t0) = self.t_start {
            let th = &mut self.threads[tid as usize];
            let from = th.enqueued.max(t0);
            th.times.queued_ps += until.saturating_sub(from);
        }
    }

    fn admit_arrivals(&mut self) {
        while matches!(self.arrivals.front(), Some(&(t, _)) if t <= self.now) {
            let (t, tid) = self.arrivals.pop_front().unwrap();
            self.start_thread(tid, t);
            self.ready.push_back(tid);
        }
    }

    pub(super) fn run(mut self) -> SimResult {
        let t = Timing { ..self.timing };
        loop {
            self.admit_arrivals();
            let Some(tid) = self.ready.pop_front() else {
                let (next, _) = *self
                    .arrivals
                    .front()
                    .expect("no runnable thread and no pending arrival");
                if self.measuring() {
                    self.idle_ps += next - self.now;
                }
                self.now = next;
                continue;
            };
            self.account_queue(tid, self.now);

            match self.threads[tid as usize].pending {
                Pending::Load => {
                    let stall = self.resolve_load(tid);
                    self.now += stall;
                }
                Pending::Io { done } if done > self.now => {
                    self.busy(tid, t.t_sw);
                    if self.measuring() {
                        self.counts.io_polls += 1;
                    }
                    self.requeue(tid);
                    continue;
                }
                Pending::Io { .. } | Pending::Nothing => {}
            }
            self.threads[tid as usize].pending = Pending::Nothing;

            let finished = loop {
                let step = self.threads[tid as usize].next_step();
                match step {
                    Step::Mem => {
                        self.busy(tid, t.t_mem);
                        self.issue_prefetch(tid);
                        self.threads[tid as usize].pending = Pending::Load;
                        if self.measuring() {
                            self.counts.memory += 1;
                        }
                        self.busy(tid, t.t_sw);
                        break false;
                    }
                    Step::PreIo => {
                        self.busy(tid, t.t_io_pre);
                        let done = self.submit_io();
                        self.threads[tid as usize].pending = Pending::Io { done };
                        if self.measuring() {
                            self.counts.pre_io += 1;
                        }
                        self.busy(tid, t.t_sw);
                        break false;
                    }
                    Step::PostIo => {
                        self.busy(tid, t.t_io_post);
                        if self.measuring() {
                            self.counts.post_io += 1;
                        }
                        if !self.threads[tid as usize].next_segment() && self.complete_op(tid) {
                            break true;
                        }
                        self.busy(tid, t.t_sw);
                        break false;
                    }
                    Step::OpDone => {
                        if self.complete_op(tid) {
                            break true;
                        }
                    }
                }
            };
            if finished {
                return self.finish(tid);
            }
            self.requeue(tid);
        }
    }

    fn requeue(&mut self, tid: u32) {
        self.threads[tid as usize].enqueued = self.now;
        self.ready.push_back(tid);
    }

    fn finish(mut self, running: u32) -> SimResult {
        let t_end = self.now;
        let t_start = self.t_start.unwrap_or(0);
        let waiting: Vec<u32> = self
            .ready
            .iter()
            .copied()
            .chain(self.arrivals.iter().map(|&(_, tid)| tid))
            .filter(|&tid| tid != running)
            .collect();
        for tid in waiting {
            self.account_queue(tid, t_end);
        }
        let measured = t_end - t_start;
        let sim_time = from_ps(measured);
        let ops = self.cfg.measure_ops;
        SimResult {
            n_threads: self.cfg.params.n_threads,
            ops_completed: ops,
            sim_time,
            throughput: ops as f64 / sim_time,
            stall_time_total: from_ps(self.stall_ps),
            slot_wait_total: from_ps(self.slot_wait_ps),
            idle_time_total: from_ps(self.idle_ps),
            load_latency_histogram: self.hist,
            subop_counts: self.counts,
            mean_op_latency: self.op_latency_sum as f64 * 1e-12 / ops as f64,
            max_prefetches_in_flight: self.max_in_flight as u32,
            max_fetch_latency: from_ps(self.max_fetch_ps),
            thread_times: self.threads.iter().map(|th| th.times).collect(),
            measured_ps: measured,
        }
    }
}
