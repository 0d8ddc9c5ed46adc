//! The averaged false-positive objective and the parameter choices built on
//! it.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use crate::analysis::occupancy::Occupancy;
use crate::analysis::table::CTable;
use crate::error::{domain, Error, Result};
use crate::segment::Segment;

/// Parameters of the BF2 false-positive analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FpParams {
    pub m2: u64,
    pub k2: u64,
    /// Number of embedding nodes.
    pub l: usize,
    pub r: Segment,
    pub beta: Segment,
    pub h: usize,
}

impl FpParams {
    /// Parameters for an `h`-hop path with `L = h`.
    pub fn new(m2: u64, k2: u64, h: usize, beta: Segment, r: Segment) -> Result<Self> {
        let p = Self { m2, k2, l: h, r, beta, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k2 == 0 || self.k2 > self.m2 {
            return domain(format!("k2 must lie in [1, m2={}], got {}", self.m2, self.k2));
        }
        if self.beta == 0 || self.beta > self.r {
            return domain(format!("beta must lie in [1, r={}], got {}", self.r, self.beta));
        }
        if self.l == 0 {
            return domain("L must be at least 1");
        }
        Ok(())
    }
}

/// `(p1, p2)` with `p1 = (alpha / m2)^k2` and `p2 = 1 - p1`.
pub fn collision_probs(alpha: u64, m2: u64, k2: u64) -> Result<(f64, f64)> {
    if m2 == 0 || alpha > m2 {
        return domain(format!("alpha={alpha} outside [0, m2={m2}]"));
    }
    let p1 = (alpha as f64 / m2 as f64).powi(i32::try_from(k2).unwrap_or(i32::MAX));
    Ok((p1, 1.0 - p1))
}

fn check_table(params: &FpParams, table: &CTable) -> Result<()> {
    if (table.l(), table.beta(), table.r()) != (params.l, params.beta, params.r) {
        return domain("count table was built for different (L, beta, r)");
    }
    Ok(())
}

/// Unclamped `(1/|P|) sum_j p1^j p2^(F-j) C_j`, summed in the log domain.
fn conditional_raw(alpha: u64, m2: u64, k2: u64, table: &CTable) -> f64 {
    if alpha == 0 {
        return 0.0;
    }
    let p1 = (alpha as f64 / m2 as f64).powi(k2 as i32);
    let ln_p1 = p1.ln();
    let ln_p2 = (-p1).ln_1p();
    let f = table.false_pairs();
    let ln_norm = (table.sequence_count() as f64).ln();
    let ln_c = table.ln_column_sums();
    let mut sum = 0.0;
    for j in 1..=f {
        let lc = ln_c[j as usize];
        if lc == f64::NEG_INFINITY {
            continue;
        }
        let tail = if j == f { 0.0 } else { (f - j) as f64 * ln_p2 };
        let t = j as f64 * ln_p1 + tail + lc - ln_norm;
        if t > -745.0 {
            sum += t.exp();
        }
    }
    sum
}

/// Probability of a BF2 false positive given `alpha` lit bits, clamped to
/// `[0, 1]`.
pub fn conditional_fp(alpha: u64, params: &FpParams, table: &CTable) -> Result<f64> {
    params.validate()?;
    check_table(params, table)?;
    if alpha > params.m2 {
        return domain(format!("alpha={alpha} exceeds m2={}", params.m2));
    }
    Ok(conditional_raw(alpha, params.m2, params.k2, table).clamp(0.0, 1.0))
}

/// Objective value together with the number of conditional terms that had
/// to be clamped into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpEstimate {
    pub value: f64,
    pub clamp_events: u32,
}

fn expected_from_dist(dist: &[f64], m2: u64, k2: u64, l: usize, table: &CTable) -> FpEstimate {
    let top = m2.min(k2 * l as u64);
    let mut clamp_events = 0;
    let mut value = 0.0;
    for alpha in 1..=top {
        let pa = dist[alpha as usize];
        if pa == 0.0 {
            continue;
        }
        let c = conditional_raw(alpha, m2, k2, table);
        if !(0.0..=1.0).contains(&c) {
            clamp_events += 1;
        }
        value += pa * c.clamp(0.0, 1.0);
    }
    if !(0.0..=1.0).contains(&value) {
        clamp_events += 1;
    }
    FpEstimate { value: value.clamp(0.0, 1.0), clamp_events }
}

/// `sum_alpha Pr(alpha) * conditional_fp(alpha)`.
pub fn expected_fp(params: &FpParams, table: &CTable) -> Result<FpEstimate> {
    params.validate()?;
    check_table(params, table)?;
    let mut occ = Occupancy::new(params.m2 as usize);
    occ.advance(params.k2 * params.l as u64);
    Ok(expected_from_dist(occ.dist(), params.m2, params.k2, params.l, table))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMethod {
    /// Evaluate every `k2` in range.
    FullScan,
    /// Step from `k2 = 1` while the objective decreases.
    Descent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct K2Optimum {
    pub k2: u64,
    pub value: f64,
    /// Every evaluated `(k2, objective)` point, ascending in `k2`.
    pub curve: Vec<(u64, f64)>,
    pub clamp_events: u32,
}

impl K2Optimum {
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("k2,expected_fp\n");
        for (k, v) in &self.curve {
            writeln!(out, "{k},{v:e}").expect("writing to a String cannot fail");
        }
        out
    }
}

/// Minimizes the objective over `k2` in `k_range` (clipped to `[1, m2]`).
/// Ties go to the smaller `k2`.
pub fn optimize_k2_in(
    m2: u64,
    table: &CTable,
    k_range: std::ops::RangeInclusive<u64>,
    method: SearchMethod,
) -> Result<K2Optimum> {
    if m2 == 0 {
        return domain("m2 must be positive");
    }
    let lo = (*k_range.start()).max(1);
    let hi = (*k_range.end()).min(m2);
    if lo > hi {
        return domain(format!("empty k2 range [{lo}, {hi}]"));
    }
    let l = table.l() as u64;
    let mut occ = Occupancy::new(m2 as usize);
    occ.advance(lo * l);
    let mut curve = Vec::new();
    let mut clamp_events = 0;
    let mut best: Option<(u64, f64)> = None;
    for k in lo..=hi {
        if k > lo {
            occ.advance(l);
        }
        let est = expected_from_dist(occ.dist(), m2, k, table.l(), table);
        clamp_events += est.clamp_events;
        curve.push((k, est.value));
        match best {
            Some((_, v)) if est.value >= v => {
                if method == SearchMethod::Descent {
                    break;
                }
            }
            _ => best = Some((k, est.value)),
        }
    }
    let (k2, value) = best.expect("range is non-empty");
    Ok(K2Optimum { k2, value, curve, clamp_events })
}

/// Full-scan minimizer over `k2` in `[1, m2]`.
pub fn optimize_k2(m2: u64, l: usize, beta: Segment, r: Segment) -> Result<K2Optimum> {
    let table = CTable::build(l, beta, r)?;
    optimize_k2_in(m2, &table, 1..=m2, SearchMethod::FullScan)
}

/// `round(m1 / edges * ln 2)` clamped to `[1, m1]`.
pub fn optimal_k1(m1: u64, edge_count: u64) -> Result<u64> {
    if edge_count == 0 || m1 == 0 {
        return domain("m1 and edge count must be positive");
    }
    Ok(((m1 as f64 / edge_count as f64 * LN_2).round() as u64).clamp(1, m1))
}

/// Smallest BF1 size reaching per-edge false-positive rate `target` for
/// `edge_count` insertions at the optimal hash count:
/// `ceil(-n ln p / (ln 2)^2)`.
pub fn size_bf1(edge_count: u64, target: f64) -> Result<u64> {
    if edge_count == 0 || !(target > 0.0 && target < 1.0) {
        return domain("need edge_count >= 1 and target in (0, 1)");
    }
    Ok((-(edge_count as f64) * target.ln() / (LN_2 * LN_2)).ceil() as u64)
}

/// Smallest `m2` (up to `max_m2`) whose optimized objective is at most
/// `target`, together with its optimal `k2`.
///
/// Relies on the optimum being non-increasing in `m2`, found by doubling then
/// bisection.
pub fn required_m2(target: f64, table: &CTable, max_m2: u64) -> Result<(u64, K2Optimum)> {
    if !(target > 0.0 && target < 1.0) {
        return domain("target must lie in (0, 1)");
    }
    let eval = |m2: u64| optimize_k2_in(m2, table, 1..=m2, SearchMethod::FullScan);
    let mut hi = 1u64;
    let mut hi_opt = eval(hi)?;
    while hi_opt.value > target {
        if hi >= max_m2 {
            return Err(Error::Resource(format!("no m2 <= {max_m2} reaches a false-positive rate of {target:e}")));
        }
        hi = (hi * 2).min(max_m2);
        hi_opt = eval(hi)?;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let opt = eval(mid)?;
        if opt.value <= target {
            hi = mid;
            hi_opt = opt;
        } else {
            lo = mid;
        }
    }
    Ok((hi, hi_opt))
}
