//! Counting alternative valid sequences reachable through extra recoveries.
//!
//! A false pair is a (position, segment) combination other than the true
//! one; there are `L * (r - 1)` of them. An extra recovery is a false pair
//! that passes the BF2 query anyway.

use num_bigint::BigUint;
use num_traits::Zero;

use crate::analysis::occupancy::binomial;
use crate::error::{domain, Result};
use crate::segment::{is_valid_values, Segment, SegmentSequence, RSU_SEGMENT};

fn require_valid(seq: &SegmentSequence, beta: Segment, r: Segment) -> Result<()> {
    if !is_valid_values(seq.values(), beta, r) {
        return domain(format!("sequence {seq} is not valid for beta={beta}, r={r}"));
    }
    Ok(())
}

/// Number of valid sequences that differ from `seq` in exactly one position.
///
/// With the RSU root prepended as `v[0] = 1`, an interior position `i`
/// (1-based, `i < L`) can take any value in `[v[i+1] - beta, v[i-1] + beta]`
/// intersected with `[v[i-1], v[i+1]]`. For window span `d = v[i+1] - v[i-1]`
/// that is `d + 1` values if `d <= beta` and `2 beta - d + 1` otherwise, one
/// of which is the current value. The last position ranges over
/// `[v[L-1], min(v[L-1] + beta, r)]`.
pub fn c_x1(seq: &SegmentSequence, beta: Segment, r: Segment) -> Result<u64> {
    require_valid(seq, beta, r)?;
    let x = seq.values();
    let at = |i: usize| if i == 0 { RSU_SEGMENT } else { x[i - 1] };
    let len = x.len();
    let b = u64::from(beta);
    let mut count = 0u64;
    for i in 1..len {
        let d = u64::from(at(i + 1) - at(i - 1));
        count += if d <= b { d } else { 2 * b - d };
    }
    count += b.min(u64::from(r - at(len - 1)));
    Ok(count)
}

/// Brute-force single-substitution count: tries every other value at every
/// position.
pub fn c_x1_oracle(seq: &SegmentSequence, beta: Segment, r: Segment) -> Result<u64> {
    require_valid(seq, beta, r)?;
    let mut y = seq.values().to_vec();
    let mut count = 0;
    for i in 0..y.len() {
        let orig = y[i];
        for v in (1..=r).filter(|&v| v != orig) {
            y[i] = v;
            count += u64::from(is_valid_values(&y, beta, r));
        }
        y[i] = orig;
    }
    Ok(count)
}

/// Lower bound on the number of `j`-subsets of false pairs that expose at
/// least one alternative sequence: `sum_{l=1}^{c} C(L(r-1) - l, j - 1)`.
///
/// Equals `C(F, j) - C(F - c, j)`, the number of `j`-subsets containing one
/// of the `c` pairs that alone already form an alternative.
pub fn c_xj_lower(c_x1_value: u64, l: u64, r: u64, j: u64) -> Result<BigUint> {
    if j == 0 || l == 0 || r == 0 {
        return domain("j, L and r must be positive");
    }
    let f = l * (r - 1);
    if c_x1_value > f {
        return domain(format!("C(x,1)={c_x1_value} exceeds the {f} false pairs"));
    }
    Ok((1..=c_x1_value).fold(BigUint::zero(), |acc, i| acc + binomial(f - i, j - 1)))
}

/// Number of valid sequences whose position `t` takes a value in `sets[t]`,
/// `sets` in RSU-outward order.
fn count_assignments(sets: &[Vec<Segment>], beta: Segment, r: Segment) -> u64 {
    let width = usize::from(r) + 1;
    let mut ways = vec![0u64; width];
    ways[usize::from(RSU_SEGMENT)] = 1;
    let mut next = vec![0u64; width];
    for set in sets {
        next.iter_mut().for_each(|w| *w = 0);
        for &v in set {
            let lo = v.saturating_sub(beta).max(1);
            next[usize::from(v)] = (lo..=v).map(|u| ways[usize::from(u)]).sum();
        }
        std::mem::swap(&mut ways, &mut next);
    }
    ways.iter().sum()
}

/// Exact count of `j`-subsets `R` of false pairs such that some valid
/// sequence other than `seq` takes, at every position, either the true value
/// or a value recovered through `R`. Enumerates all subsets.
pub fn c_xj_oracle(seq: &SegmentSequence, beta: Segment, r: Segment, j: usize) -> Result<u64> {
    require_valid(seq, beta, r)?;
    let x = seq.values();
    let pairs: Vec<(usize, Segment)> =
        x.iter().enumerate().flat_map(|(i, &xi)| (1..=r).filter(move |&v| v != xi).map(move |v| (i, v))).collect();
    if j == 0 || j > pairs.len() {
        return Ok(0);
    }
    let mut count = 0u64;
    let mut pick: Vec<usize> = (0..j).collect();
    loop {
        let mut sets: Vec<Vec<Segment>> = x.iter().map(|&v| vec![v]).collect();
        for &p in &pick {
            let (i, v) = pairs[p];
            sets[i].push(v);
        }
        count += u64::from(count_assignments(&sets, beta, r) > 1);
        // Next combination in lexicographic order.
        let n = pairs.len();
        let Some(pos) = (0..j).rev().find(|&t| pick[t] < n - j + t) else {
            break;
        };
        pick[pos] += 1;
        for t in pos + 1..j {
            pick[t] = pick[t - 1] + 1;
        }
    }
    Ok(count)
}
