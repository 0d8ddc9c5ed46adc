use std::fmt;

/// A binomial proportion with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

const Z95: f64 = 1.959_963_984_540_054;

impl RateEstimate {
    pub fn new(successes: u64, trials: u64) -> Self {
        assert!(successes <= trials, "more successes than trials");
        if trials == 0 {
            return Self { successes, trials, rate: 0.0, ci_low: 0.0, ci_high: 1.0 };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Self {
            successes,
            trials,
            rate: p,
            ci_low: if successes == 0 { 0.0 } else { (centre - half).max(0.0) },
            ci_high: if successes == trials { 1.0 } else { (centre + half).min(1.0) },
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }

    /// Binomial standard error `sqrt(p (1 - p) / n)` of the point estimate.
    pub fn std_error(&self) -> f64 {
        if self.trials == 0 {
            return f64::INFINITY;
        }
        (self.rate * (1.0 - self.rate) / self.trials as f64).sqrt()
    }
}

impl fmt::Display for RateEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6e} [{:.6e}, {:.6e}]", self.rate, self.ci_low, self.ci_high)
    }
}

/// Aggregated outputs of one simulated configuration.
///
/// Trial `t` draws from stream `t` of a ChaCha8 generator seeded with
/// `master_seed`, so any single trial can be replayed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub trials: u64,
    pub master_seed: u64,
    /// False-positive rate; absent for analytic baselines.
    pub fp_rate: Option<RateEstimate>,
    pub avg_packet_bits: f64,
    pub avg_provenance_bits: f64,
    /// Mean fraction of ones in the segment filter.
    pub avg_sparsity: f64,
    /// Hash, keyed-primitive and codec calls per packet.
    pub end_to_end_delay_units: f64,
}
