//! Failure probability of the dictionary broadcast.
//!
//! A vehicle entering the coverage area waits `tau_l ~ U(0, tau_b)` for the
//! next dictionary broadcast, plus `tau_t` to receive it and `tau_d` to look
//! up its segment. It fails if a data packet arrives first, after
//! `tau_a`: uniform on `(0, tau_p)` or exponential with rate `lambda_p`,
//! where `tau_p = 1 / lambda_p`.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::sim::fp::trial_rng;
use crate::sim::report::RateEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalModel {
    Uniform,
    Poisson,
}

/// Times in seconds, rate in packets per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DictTimingConfig {
    pub tau_b: f64,
    /// Transmission plus propagation delay of the dictionary.
    pub tau_t: f64,
    pub tau_d: f64,
    pub lambda_p: f64,
    pub arrival_model: ArrivalModel,
    pub trials: u64,
    pub seed: u64,
}

impl DictTimingConfig {
    pub fn tau_p(&self) -> f64 {
        1.0 / self.lambda_p
    }

    /// Whether the total dictionary latency is at most 1% of the mean packet
    /// interval. Here `P_fail <= (tau_b + tau_t + tau_d) / tau_p <= 1%`
    /// under both arrival models.
    pub fn in_low_failure_regime(&self) -> bool {
        self.tau_b + self.tau_t + self.tau_d <= 0.01 * self.tau_p()
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(self.tau_b) && self.tau_b > 0.0 && ok(self.tau_t) && ok(self.tau_d)) {
            return domain("tau_b must be positive and tau_t, tau_d non-negative");
        }
        if !(self.lambda_p.is_finite() && self.lambda_p > 0.0) {
            return domain("lambda_p must be positive");
        }
        if self.trials == 0 {
            return domain("need at least one trial");
        }
        Ok(())
    }
}

const CHUNK: u64 = 4096;

/// Monte-Carlo estimate of `Pr(tau_l + tau_t + tau_d > tau_a)`.
pub fn dict_pfail(cfg: &DictTimingConfig) -> Result<RateEstimate> {
    cfg.validate()?;
    let exp = Exp::new(cfg.lambda_p).expect("validated rate");
    let tau_p = cfg.tau_p();
    let chunks = cfg.trials.div_ceil(CHUNK);
    let fails: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = trial_rng(cfg.seed, c);
            let n = CHUNK.min(cfg.trials - c * CHUNK);
            (0..n)
                .filter(|_| {
                    let tau_l = rng.random::<f64>() * cfg.tau_b;
                    let tau_a = match cfg.arrival_model {
                        ArrivalModel::Uniform => rng.random::<f64>() * tau_p,
                        ArrivalModel::Poisson => exp.sample(&mut rng),
                    };
                    tau_l + cfg.tau_t + cfg.tau_d > tau_a
                })
                .count() as u64
        })
        .sum();
    Ok(RateEstimate::new(fails, cfg.trials))
}
