//! Monte-Carlo check of the expected prefetch wait per suboperation.
//!
//! A stream of i.i.d. suboperations (memory, pre-IO, post-IO with weights
//! M : 1 : 1) is cut into consecutive windows, each ending at its P-th
//! slot-consuming suboperation. Enumerating window shapes over all positions
//! weights a window by its length relative to consecutive cutting, so the
//! per-suboperation wait is sum(len * W) / sum(len^2).

use memtol::model::{expected_wait_per_subop, hidable_latency_mem_only, wait_time, DEFAULT_TAIL_TOL};
use memtol::{us, OperationModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUBOPS_PER_SET: u64 = 10_000_000;
const SETS: u64 = 50;

fn oracle(p: &OperationModelParams, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = p.m_accesses;
    let mem = m / (m + 2.0);
    let pre = (m + 1.0) / (m + 2.0);
    let (mut num, mut den) = (0.0f64, 0.0f64);
    let (mut slots, mut j, mut k) = (0u32, 0u32, 0u32);
    for _ in 0..SUBOPS_PER_SET {
        let u: f64 = rng.gen();
        if u < mem {
            slots += 1;
        } else if u < pre {
            slots += 1;
            j += 1;
        } else {
            k += 1;
        }
        if slots == p.prefetch_depth {
            let len = f64::from(slots + k);
            num += len * wait_time(j, k, p);
            den += len * len;
            (slots, j, k) = (0, 0, 0);
        }
    }
    num / den
}

fn random_params(rng: &mut ChaCha8Rng) -> OperationModelParams {
    let mut p = OperationModelParams::example();
    p.m_accesses = rng.gen_range(2.0..20.0);
    p.prefetch_depth = rng.gen_range(4..=16);
    p.t_mem = us(rng.gen_range(0.05..0.2));
    p.t_sw = us(rng.gen_range(0.02..0.1));
    p.t_io_pre = us(rng.gen_range(1.0..5.0));
    p.t_io_post = us(rng.gen_range(0.2..3.0));
    // Far enough past the hidable latency that most windows wait.
    p.l_mem = hidable_latency_mem_only(&p) + us(rng.gen_range(1.0..10.0));
    p
}

#[test]
fn expected_wait_matches_window_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let sets: Vec<OperationModelParams> = (0..SETS).map(|_| random_params(&mut rng)).collect();
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get());
    let errors: Vec<(usize, f64, f64)> = std::thread::scope(|scope| {
        let chunks: Vec<_> = sets
            .chunks(sets.len().div_ceil(workers))
            .enumerate()
            .map(|(c, chunk)| {
                let base = c * sets.len().div_ceil(workers);
                scope.spawn(move || {
                    chunk
                        .iter()
                        .enumerate()
                        .map(|(i, p)| {
                            let idx = base + i;
                            let model = expected_wait_per_subop(p, DEFAULT_TAIL_TOL).unwrap();
                            (idx, model, oracle(p, idx as u64))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        chunks.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(errors.len(), SETS as usize);
    for (idx, model, sampled) in errors {
        assert!(model > 0.0, "set {idx} has no wait");
        let rel = (model - sampled).abs() / model;
        assert!(rel < 0.01, "set {idx}: model {model} sampled {sampled} ({rel})");
    }
}
