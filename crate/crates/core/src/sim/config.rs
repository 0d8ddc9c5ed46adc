//! Scenario configuration and its `key=value` text form.

use std::fmt;
use std::str::FromStr;

use crate::analysis::optimal_k1;
use crate::error::{domain, Error, Result};
use crate::segment::{is_valid_values, Segment};

/// How the segment assignment of each packet's path is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Placement {
    /// A fresh uniform draw from the valid sequences for every trial.
    UniformValid,
    /// The same sequence (RSU-outward order) for every trial.
    Fixed(Vec<Segment>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Node count including the RSU.
    pub n: u32,
    pub h: usize,
    pub r: Segment,
    pub beta: Segment,
    pub segment_length_m: f64,
    pub m1: u64,
    pub m2: u64,
    pub k1: usize,
    pub k2: usize,
    pub trials: u64,
    pub master_seed: u64,
    pub placement: Placement,
}

impl ScenarioConfig {
    /// Defaults for an `h`-hop path over `h + 1` nodes with a BF1 large
    /// enough that path recovery practically never fails.
    pub fn new(h: usize, r: Segment, beta: Segment, m2: u64, k2: usize) -> Self {
        let m1 = 256;
        let k1 = optimal_k1(m1, h.max(1) as u64).unwrap_or(1) as usize;
        Self {
            n: h as u32 + 1,
            h,
            r,
            beta,
            segment_length_m: 100.0,
            m1,
            m2,
            k1,
            k2,
            trials: 100_000,
            master_seed: 0x5EED,
            placement: Placement::UniformValid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.h == 0 || self.h > u8::MAX as usize {
            return domain(format!("h must lie in [1, 255], got {}", self.h));
        }
        if (self.n as usize) < self.h + 1 {
            return domain(format!("h={} needs at least h+1 nodes, got N={}", self.h, self.n));
        }
        if self.beta == 0 || self.beta > self.r {
            return domain(format!("beta must lie in [1, r={}], got {}", self.r, self.beta));
        }
        if !(self.segment_length_m.is_finite() && self.segment_length_m > 0.0) {
            return domain("segment length must be positive");
        }
        if self.k1 == 0 || self.k1 as u64 > self.m1 || self.m1 > u64::from(u16::MAX) {
            return domain(format!("need 1 <= k1 <= m1 <= 65535, got k1={} m1={}", self.k1, self.m1));
        }
        if self.k2 == 0 || self.k2 as u64 > self.m2 || self.m2 > u64::from(u16::MAX) {
            return domain(format!("need 1 <= k2 <= m2 <= 65535, got k2={} m2={}", self.k2, self.m2));
        }
        if let Placement::Fixed(seq) = &self.placement {
            if seq.len() != self.h || !is_valid_values(seq, self.beta, self.r) {
                return domain("fixed placement must be a valid sequence of length h");
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let placement = match &self.placement {
            Placement::UniformValid => "uniform-valid".to_string(),
            Placement::Fixed(v) => v.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
        };
        format!(
            "n={}\nh={}\nr={}\nbeta={}\nsegment_length_m={}\nm1={}\nm2={}\nk1={}\nk2={}\ntrials={}\nmaster_seed={}\nplacement={}\n",
            self.n,
            self.h,
            self.r,
            self.beta,
            self.segment_length_m,
            self.m1,
            self.m2,
            self.k1,
            self.k2,
            self.trials,
            self.master_seed,
            placement
        )
    }

    /// Parses `key=value` lines; `#` starts a comment. Missing keys keep the
    /// defaults of [`ScenarioConfig::new`] for the parsed `h`, `r`, `beta`,
    /// `m2` and `k2`, which are required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Decode(format!("line {}: expected key=value", lineno + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let get = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Decode(format!("bad value `{v}` for {key}")))
        }
        let required = |key: &str| get(key).ok_or_else(|| Error::Decode(format!("missing key `{key}`")));
        let mut cfg = Self::new(
            num("h", required("h")?)?,
            num("r", required("r")?)?,
            num("beta", required("beta")?)?,
            num("m2", required("m2")?)?,
            num("k2", required("k2")?)?,
        );
        for (k, v) in &pairs {
            match k.as_str() {
                "h" | "r" | "beta" | "m2" | "k2" => {}
                "n" => cfg.n = num(k, v)?,
                "segment_length_m" => cfg.segment_length_m = num(k, v)?,
                "m1" => cfg.m1 = num(k, v)?,
                "k1" => cfg.k1 = num(k, v)?,
                "trials" => cfg.trials = num(k, v)?,
                "master_seed" => cfg.master_seed = num(k, v)?,
                "placement" => {
                    cfg.placement = if v == "uniform-valid" {
                        Placement::UniformValid
                    } else {
                        Placement::Fixed(v.split(',').map(|s| num(k, s.trim())).collect::<Result<_>>()?)
                    }
                }
                other => return Err(Error::Decode(format!("unknown key `{other}`"))),
            }
        }
        if get("m1").is_some() && get("k1").is_none() {
            cfg.k1 = optimal_k1(cfg.m1, cfg.h.max(1) as u64).unwrap_or(1) as usize;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for ScenarioConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}
