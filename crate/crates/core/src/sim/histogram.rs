use serde::{Deserialize, Serialize};

/// Fixed-width histogram of observed load latencies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyHistogram {
    /// Bucket width in picoseconds.
    pub bucket_ps: u64,
    pub counts: Vec<u64>,
}

/// 0.1 µs buckets.
pub const DEFAULT_BUCKET_PS: u64 = 100_000;

impl LatencyHistogram {
    pub fn new(bucket_ps: u64) -> Self {
        assert!(bucket_ps > 0);
        LatencyHistogram {
            bucket_ps,
            counts: Vec::new(),
        }
    }

    pub fn bucket_of(&self, latency_ps: u64) -> usize {
        (latency_ps / self.bucket_ps) as usize
    }

    pub fn record(&mut self, latency_ps: u64) {
        let b = self.bucket_of(latency_ps);
        if b >= self.counts.len() {
            self.counts.resize(b + 1, 0);
        }
        self.counts[b] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bucket_width(&self) -> f64 {
        self.bucket_ps as f64 * 1e-12
    }

    /// Fraction of loads in the bucket holding `latency` seconds.
    pub fn fraction_at(&self, latency: f64) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let b = self.bucket_of(super::engine::to_ps(latency));
        self.counts.get(b).copied().unwrap_or(0) as f64 / total as f64
    }

    /// Fraction of loads at or above `latency` seconds (bucket-aligned).
    pub fn fraction_from(&self, latency: f64) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let b = self.bucket_of(super::engine::to_ps(latency));
        self.counts.iter().skip(b).sum::<u64>() as f64 / total as f64
    }

    /// Upper edge of the highest non-empty bucket, in seconds.
    pub fn max_latency(&self) -> f64 {
        match self.counts.iter().rposition(|&c| c > 0) {
            Some(b) => (b as u64 + 1) as f64 * self.bucket_width(),
            None => 0.0,
        }
    }

    /// Mean using bucket midpoints, in seconds.
    pub fn mean(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let w = self.bucket_width();
        let sum: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(b, &c)| (b as f64 + 0.5) * w * c as f64)
            .sum();
        sum / total as f64
    }

    /// `log10(count)` per bucket, `None` for empty buckets.
    pub fn log10_counts(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .map(|&c| (c > 0).then(|| (c as f64).log10()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buckets() {
        let mut h = LatencyHistogram::new(DEFAULT_BUCKET_PS);
        h.record(0);
        h.record(99_999);
        h.record(100_000);
        h.record(10_000_000);
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[1], 1);
        assert_eq!(h.counts[100], 1);
        assert_eq!(h.total(), 4);
        assert!((h.fraction_at(10e-6) - 0.25).abs() < 1e-12);
        assert!((h.fraction_from(0.1e-6) - 0.5).abs() < 1e-12);
        assert!((h.max_latency() - 10.1e-6).abs() < 1e-15);
        assert_eq!(h.log10_counts()[2], None);
    }
}
