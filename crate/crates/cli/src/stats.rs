//! Latency-distribution and logical-error statistics.

/// Result of a cutoff-latency query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffLatency {
    pub value: u64,
    /// The requested tail mass was below 1/|samples|; the maximum sample is
    /// returned instead.
    pub saturated: bool,
}

/// Smallest latency `L` whose empirical tail `P(X >= L)` does not exceed
/// `k * p_l`. With `k * p_l = 1` this is the minimum sample; as the tail mass
/// approaches zero it converges to the worst case.
pub fn cutoff_latency(samples: &[u64], k: f64, p_l: f64) -> Option<CutoffLatency> {
    if samples.is_empty() || k < 0.0 || !(0.0..=1.0).contains(&p_l) || k * p_l > 1.0 {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let tail_mass = k * p_l;
    if tail_mass < 1.0 / n as f64 {
        return Some(CutoffLatency {
            value: sorted[n - 1],
            saturated: true,
        });
    }
    // tail(sorted[i]) = (n - first occurrence of sorted[i]) / n
    let mut i = 0;
    while i < n {
        let tail = (n - i) as f64 / n as f64;
        if tail <= tail_mass {
            return Some(CutoffLatency {
                value: sorted[i],
                saturated: false,
            });
        }
        let value = sorted[i];
        while i < n && sorted[i] == value {
            i += 1;
        }
    }
    Some(CutoffLatency {
        value: sorted[n - 1],
        saturated: true,
    })
}

/// Logical error rate including idle errors accumulated while waiting for
/// the decoder: `p_l * (1 + mean_latency_rounds / d)`.
pub fn effective_error_rate(p_l: f64, mean_latency_rounds: f64, d: usize) -> f64 {
    p_l * (1.0 + mean_latency_rounds / d as f64)
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denominator = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denominator;
    let margin = (z / denominator) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - margin).max(0.0), (center + margin).min(1.0))
}
