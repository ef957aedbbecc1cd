//! Entanglement link parameters and batch mathematics.
//!
//! A heralded-entanglement batch is `attempts_per_batch` Bernoulli attempts
//! of `attempt_duration` each. The first success within a batch is drawn in
//! one shot from the truncated geometric law (distributionally identical to
//! attempt-by-attempt sampling, and cheap enough to simulate hundreds of
//! millions of attempts). Consecutive batches of one request are spaced by
//! `batch_duration + inter_batch_overhead`; the overhead stands in for
//! re-synchronization and intermittent sync failures between batches.

use crate::sim::SimDuration;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct LinkParams {
    pub attempt_duration_ns: u64,
    pub attempts_per_batch: u32,
    pub p_success_per_attempt: f64,
    /// Gap between consecutive batch starts beyond the batch itself.
    pub inter_batch_overhead_ns: u64,
    /// How long a device waits for the peer before giving up with a sync
    /// failure, in its own ticks.
    pub sync_window_ticks: u64,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            attempt_duration_ns: 3_950,
            attempts_per_batch: 500,
            p_success_per_attempt: 1.39e-5,
            inter_batch_overhead_ns: 955_000,
            sync_window_ticks: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct MockedEntanglement {
    pub enabled: bool,
    /// Desired heralding rate; the per-attempt probability is fitted so the
    /// expected time to success matches 1/rate.
    pub target_rate_per_s: f64,
}

impl Default for MockedEntanglement {
    fn default() -> Self {
        MockedEntanglement { enabled: false, target_rate_per_s: 10.14 }
    }
}

/// Result of running one batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchOutcome {
    /// Success at the 1-based attempt index.
    Success { attempt: u32 },
    Failure,
}

impl LinkParams {
    pub fn batch_duration(&self) -> SimDuration {
        SimDuration::from_ns(self.attempt_duration_ns * self.attempts_per_batch as u64)
    }

    /// Batch-start spacing for consecutive batches of one request.
    pub fn batch_spacing(&self) -> SimDuration {
        SimDuration::from_ns(
            self.attempt_duration_ns * self.attempts_per_batch as u64 + self.inter_batch_overhead_ns,
        )
    }

    /// Probability that a batch succeeds: 1 - (1-p)^attempts.
    pub fn batch_success_probability(&self) -> f64 {
        batch_success_probability(self.p_success_per_attempt, self.attempts_per_batch)
    }

    /// Draws one batch with success probability `p` per attempt: the first
    /// success index is geometric, truncated at the batch size.
    pub fn run_batch<R: Rng>(&self, p: f64, rng: &mut R) -> BatchOutcome {
        debug_assert!((0.0..=1.0).contains(&p));
        if p <= 0.0 {
            return BatchOutcome::Failure;
        }
        if p >= 1.0 {
            return BatchOutcome::Success { attempt: 1 };
        }
        let u: f64 = rng.random();
        // First success at attempt k ~ 1 + floor(ln(u) / ln(1-p)).
        let k = 1 + (u.ln() / (1.0 - p).ln()).floor() as u64;
        if k <= self.attempts_per_batch as u64 {
            BatchOutcome::Success { attempt: k as u32 }
        } else {
            BatchOutcome::Failure
        }
    }

    /// Expected time from first batch start to heralded success (including
    /// inter-batch spacing), for per-attempt probability `p`.
    pub fn expected_time_to_success_ns(&self, p: f64) -> f64 {
        let pb = batch_success_probability(p, self.attempts_per_batch);
        let mean_failed = (1.0 - pb) / pb;
        let spacing = self.batch_spacing().as_ns() as f64;
        mean_failed * spacing + self.mean_success_attempt(p) * self.attempt_duration_ns as f64
    }

    /// E[attempt index | success within a batch], 1-based.
    pub fn mean_success_attempt(&self, p: f64) -> f64 {
        let n = self.attempts_per_batch as f64;
        let q = 1.0 - p;
        let qn = q.powf(n);
        // E[K | K <= n] for geometric K.
        (1.0 / p - qn * (n + 1.0 / p)) / (1.0 - qn)
    }

    /// Per-attempt probability whose expected time-to-success hits
    /// 1/target_rate, by bisection (the expectation is monotone in p).
    pub fn fit_attempt_probability(&self, target_rate_per_s: f64) -> f64 {
        let target_ns = 1e9 / target_rate_per_s;
        let mut lo = 1e-9;
        let mut hi = 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.expected_time_to_success_ns(mid) > target_ns {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

pub fn batch_success_probability(p: f64, attempts: u32) -> f64 {
    1.0 - (1.0 - p).powi(attempts as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn defaults_reproduce_the_published_batch_statistics() {
        let link = LinkParams::default();
        let pb = link.batch_success_probability();
        assert!((pb - 6.93e-3).abs() < 1e-4, "pb = {pb}");
        let mean_failed = (1.0 - pb) / pb;
        assert!((mean_failed - 144.0).abs() < 1.0, "mean failed batches = {mean_failed}");
    }

    #[test]
    fn default_spacing_lands_device_rate_near_published_value() {
        let link = LinkParams::default();
        let t = link.expected_time_to_success_ns(link.p_success_per_attempt);
        let rate = 1e9 / t;
        assert!((rate - 2.37).abs() < 0.02, "rate = {rate}");
    }

    #[test]
    fn batch_draw_matches_direct_simulation_distribution() {
        // Against an explicit per-attempt loop at a coarse p.
        let link = LinkParams { attempts_per_batch: 10, ..Default::default() };
        let p = 0.2;
        let n = 200_000;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        let mut geom_successes = 0u32;
        let mut geom_sum = 0u64;
        for _ in 0..n {
            if let BatchOutcome::Success { attempt } = link.run_batch(p, &mut rng) {
                geom_successes += 1;
                geom_sum += attempt as u64;
            }
        }
        let mut loop_rng = rand_chacha::ChaCha12Rng::seed_from_u64(2);
        let mut loop_successes = 0u32;
        let mut loop_sum = 0u64;
        for _ in 0..n {
            for a in 1..=10u32 {
                if loop_rng.random::<f64>() < p {
                    loop_successes += 1;
                    loop_sum += a as u64;
                    break;
                }
            }
        }
        let rate_a = geom_successes as f64 / n as f64;
        let rate_b = loop_successes as f64 / n as f64;
        assert!((rate_a - rate_b).abs() < 0.005, "{rate_a} vs {rate_b}");
        let mean_a = geom_sum as f64 / geom_successes as f64;
        let mean_b = loop_sum as f64 / loop_successes as f64;
        assert!((mean_a - mean_b).abs() < 0.05, "{mean_a} vs {mean_b}");
    }

    #[test]
    fn edge_probabilities() {
        let link = LinkParams::default();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        assert_eq!(link.run_batch(1.0, &mut rng), BatchOutcome::Success { attempt: 1 });
        assert_eq!(link.run_batch(0.0, &mut rng), BatchOutcome::Failure);
    }

    #[test]
    fn fitted_probability_hits_target_rate() {
        let link = LinkParams::default();
        let p = link.fit_attempt_probability(10.14);
        let t = link.expected_time_to_success_ns(p);
        let rate = 1e9 / t;
        assert!((rate - 10.14).abs() < 0.01, "rate = {rate}");
    }

    #[test]
    fn mean_success_attempt_is_near_half_batch_for_tiny_p() {
        let link = LinkParams::default();
        let m = link.mean_success_attempt(link.p_success_per_attempt);
        assert!((m - 250.0).abs() < 2.0, "m = {m}");
    }
}
