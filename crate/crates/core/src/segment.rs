//! Segmented coverage model.
//!
//! The RSU models its coverage area as a line of length `L` starting at the
//! RSU and splits it into `r` equal segments `A1..Ar`, `A1` being the segment
//! that contains the RSU. Vehicles look up their segment in a broadcast
//! [`SegmentDictionary`] and the RSU only ever learns segment indices.
//!
//! Segment indices are 1-based everywhere in the public interface.
//!
//! A [`SegmentSequence`] lists the segments of the `L` embedding nodes of one
//! packet, ordered from the RSU side outward. Because a node may only forward
//! to a node in the same or a lower-indexed segment, at most `beta` segments
//! away, such a sequence is non-decreasing with steps in `0..=beta`. The RSU
//! itself sits in segment 1 and acts as an implicit root: the first entry of
//! the sequence lies in `1..=1 + beta`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::packet::NodeId;

/// 1-based segment index.
pub type Segment = u16;

/// Segment of the RSU.
pub const RSU_SEGMENT: Segment = 1;

/// The partition of the coverage line together with the communication
/// constraint `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSpace {
    r: Segment,
    segment_length_m: f64,
    beta: Segment,
}

impl SegmentSpace {
    pub fn new(r: Segment, segment_length_m: f64, beta: Segment) -> Result<Self> {
        if r == 0 {
            return domain("number of segments must be positive");
        }
        if !(segment_length_m.is_finite() && segment_length_m > 0.0) {
            return domain(format!("segment length must be positive, got {segment_length_m}"));
        }
        if beta == 0 || beta > r {
            return domain(format!("beta must lie in [1, r={r}], got {beta}"));
        }
        Ok(Self { r, segment_length_m, beta })
    }

    pub fn r(&self) -> Segment {
        self.r
    }

    pub fn beta(&self) -> Segment {
        self.beta
    }

    pub fn segment_length_m(&self) -> f64 {
        self.segment_length_m
    }

    pub fn rsu_segment(&self) -> Segment {
        RSU_SEGMENT
    }

    pub fn coverage_length(&self) -> f64 {
        f64::from(self.r) * self.segment_length_m
    }

    /// The dictionary the RSU broadcasts for this partition.
    pub fn dictionary(&self) -> SegmentDictionary {
        SegmentDictionary::uniform(self.r, self.segment_length_m).expect("validated segment space")
    }
}

/// Broadcast mapping from positions (meters from the RSU) to segments.
///
/// Segment `i` owns the half-open interval `boundaries[i - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentDictionary {
    boundaries: Vec<(f64, f64)>,
    version: u32,
}

impl SegmentDictionary {
    pub fn uniform(r: Segment, segment_length_m: f64) -> Result<Self> {
        if r == 0 || !(segment_length_m.is_finite() && segment_length_m > 0.0) {
            return domain("dictionary needs r >= 1 and a positive segment length");
        }
        let boundaries = (0..r)
            .map(|i| {
                let lo = f64::from(i) * segment_length_m;
                (lo, lo + segment_length_m)
            })
            .collect();
        Ok(Self { boundaries, version: 1 })
    }

    /// Builds a dictionary from explicit intervals, checking that they are
    /// contiguous, non-empty and start at the RSU (position 0).
    pub fn from_boundaries(boundaries: Vec<(f64, f64)>, version: u32) -> Result<Self> {
        if boundaries.is_empty() {
            return domain("dictionary needs at least one segment");
        }
        if boundaries.len() > usize::from(Segment::MAX) {
            return domain("too many segments");
        }
        let mut expected_lo = 0.0;
        for (i, &(lo, hi)) in boundaries.iter().enumerate() {
            if lo != expected_lo || !hi.is_finite() || hi <= lo {
                return domain(format!("segment {} interval [{lo}, {hi}) is not contiguous from {expected_lo}", i + 1));
            }
            expected_lo = hi;
        }
        Ok(Self { boundaries, version })
    }

    pub fn r(&self) -> Segment {
        self.boundaries.len() as Segment
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn boundaries(&self) -> &[(f64, f64)] {
        &self.boundaries
    }

    pub fn coverage_length(&self) -> f64 {
        self.boundaries.last().map_or(0.0, |b| b.1)
    }

    pub fn segment_of(&self, position_m: f64) -> Result<Segment> {
        let length = self.coverage_length();
        if !(position_m >= 0.0 && position_m < length) {
            return Err(Error::OutOfCoverage { position: position_m, length });
        }
        // First interval whose upper bound exceeds the position.
        let idx = self.boundaries.partition_point(|&(_, hi)| hi <= position_m);
        Ok(idx as Segment + 1)
    }

    /// Line format: `r=<int> seg_len=<float>` followed by `idx lo hi` rows.
    ///
    /// `seg_len` is the length of the first segment; rows carry the exact
    /// bounds.
    pub fn to_text(&self) -> String {
        let seg_len = self.boundaries[0].1 - self.boundaries[0].0;
        let mut out = format!("r={} seg_len={}\n", self.r(), seg_len);
        for (i, (lo, hi)) in self.boundaries.iter().enumerate() {
            out.push_str(&format!("{} {} {}\n", i + 1, lo, hi));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Decode("empty dictionary".into()))?;
        let mut r = None;
        let mut seg_len = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("r", v)) => r = v.parse::<Segment>().ok(),
                Some(("seg_len", v)) => seg_len = v.parse::<f64>().ok(),
                _ => return Err(Error::Decode(format!("unexpected header field `{field}`"))),
            }
        }
        let (r, seg_len) = match (r, seg_len) {
            (Some(r), Some(s)) => (r, s),
            _ => return Err(Error::Decode("header must be `r=<int> seg_len=<float>`".into())),
        };
        let mut boundaries = Vec::with_capacity(usize::from(r));
        for (row, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                [idx, lo, hi] => idx.parse::<usize>().ok().zip(lo.parse::<f64>().ok()).zip(hi.parse::<f64>().ok()),
                _ => None,
            };
            let ((idx, lo), hi) = parsed.ok_or_else(|| Error::Decode(format!("malformed row `{line}`")))?;
            if idx != row + 1 {
                return Err(Error::Decode(format!("row {} carries index {idx}", row + 1)));
            }
            boundaries.push((lo, hi));
        }
        if boundaries.len() != usize::from(r) {
            return Err(Error::Decode(format!("header announces {r} segments, found {}", boundaries.len())));
        }
        if (boundaries[0].1 - boundaries[0].0 - seg_len).abs() > 1e-9 * seg_len.abs().max(1.0) {
            return Err(Error::Decode("seg_len disagrees with the first row".into()));
        }
        Self::from_boundaries(boundaries, 1).map_err(|e| Error::Decode(e.to_string()))
    }
}

impl fmt::Display for SegmentDictionary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for SegmentDictionary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Looks up the segment containing `position_m`.
pub fn segment_of(position_m: f64, dict: &SegmentDictionary) -> Result<Segment> {
    dict.segment_of(position_m)
}

/// The node-to-segment assignment `g`, fixed for the lifetime of one packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpatialMap {
    assignment: BTreeMap<NodeId, Segment>,
    epoch: u64,
}

impl SpatialMap {
    pub fn new(assignment: BTreeMap<NodeId, Segment>, epoch: u64, r: Segment) -> Result<Self> {
        if let Some((node, seg)) = assignment.iter().find(|(_, &s)| s == 0 || s > r) {
            return domain(format!("node {node} mapped to segment {seg} outside [1, {r}]"));
        }
        Ok(Self { assignment, epoch })
    }

    pub fn segment(&self, node: NodeId) -> Option<Segment> {
        self.assignment.get(&node).copied()
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, Segment)> + '_ {
        self.assignment.iter().map(|(&n, &s)| (n, s))
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

/// Segments of the embedding nodes, ordered from the RSU side outward.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SegmentSequence {
    values: Vec<Segment>,
}

impl SegmentSequence {
    pub fn new(values: Vec<Segment>) -> Result<Self> {
        if values.is_empty() {
            return domain("segment sequence must be non-empty");
        }
        Ok(Self { values })
    }

    /// Parses the written form that includes the RSU's own segment as a
    /// leading `1`, e.g. `A1 A3 A5` for a two-node sequence `(3, 5)`.
    pub fn from_rooted(values: &[Segment]) -> Result<Self> {
        match values.split_first() {
            Some((&RSU_SEGMENT, rest)) if !rest.is_empty() => Self::new(rest.to_vec()),
            _ => domain("rooted sequence must start at segment 1 and name at least one node"),
        }
    }

    /// Builds a sequence from segments listed in travel order (source first).
    pub fn from_travel_order(segments: &[Segment]) -> Result<Self> {
        Self::new(segments.iter().rev().copied().collect())
    }

    pub fn values(&self) -> &[Segment] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Segments in travel order (source first, RSU-adjacent node last).
    pub fn travel_order(&self) -> Vec<Segment> {
        self.values.iter().rev().copied().collect()
    }

    pub fn into_values(self) -> Vec<Segment> {
        self.values
    }
}

impl fmt::Display for SegmentSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "A{v}")?;
        }
        Ok(())
    }
}

fn check_params(len: usize, beta: Segment, r: Segment) -> Result<()> {
    if len == 0 {
        return domain("sequence length must be at least 1");
    }
    if beta == 0 || beta > r {
        return domain(format!("beta must lie in [1, r={r}], got {beta}"));
    }
    Ok(())
}

/// Checks `values` against the routing and communication constraints.
pub fn is_valid_values(values: &[Segment], beta: Segment, r: Segment) -> bool {
    let mut prev = RSU_SEGMENT;
    for &v in values {
        if v < prev || v - prev > beta || v > r {
            return false;
        }
        prev = v;
    }
    !values.is_empty()
}

/// Returns whether `seq` is a valid sequence for `beta` and `r`.
///
/// Entries outside `[1, r]` are a domain error rather than `false`.
pub fn validate_sequence(seq: &SegmentSequence, beta: Segment, r: Segment) -> Result<bool> {
    if let Some(&bad) = seq.values.iter().find(|&&v| v == 0 || v > r) {
        return domain(format!("segment {bad} outside [1, {r}]"));
    }
    Ok(is_valid_values(&seq.values, beta, r))
}

/// Depth-first walk over every valid sequence of a given length, in
/// lexicographic order. Holds a single `O(len)` buffer.
#[derive(Debug, Clone)]
pub struct ValidSequences {
    beta: Segment,
    r: Segment,
    current: Vec<Segment>,
    started: bool,
    done: bool,
}

impl ValidSequences {
    /// Advances to the next valid sequence, returning it by reference.
    pub fn advance(&mut self) -> Option<&[Segment]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.current);
        }
        let len = self.current.len();
        for i in (0..len).rev() {
            let prev = if i == 0 { RSU_SEGMENT } else { self.current[i - 1] };
            let ceiling = (prev + self.beta).min(self.r);
            if self.current[i] < ceiling {
                self.current[i] += 1;
                let v = self.current[i];
                self.current[i + 1..].iter_mut().for_each(|x| *x = v);
                return Some(&self.current);
            }
        }
        self.done = true;
        None
    }
}

impl Iterator for ValidSequences {
    type Item = SegmentSequence;

    fn next(&mut self) -> Option<SegmentSequence> {
        self.advance().map(|v| SegmentSequence { values: v.to_vec() })
    }
}

/// Enumerates the set of valid sequences of length `len` (the set `P_beta`).
pub fn enumerate_valid_sequences(len: usize, beta: Segment, r: Segment) -> Result<ValidSequences> {
    check_params(len, beta, r)?;
    Ok(ValidSequences { beta, r, current: vec![RSU_SEGMENT; len], started: false, done: false })
}

/// `|P_beta|` by dynamic programming over the last value; saturates at
/// `u128::MAX`.
pub fn count_valid_sequences(len: usize, beta: Segment, r: Segment) -> Result<u128> {
    check_params(len, beta, r)?;
    let r_us = usize::from(r);
    let b = usize::from(beta);
    // ways[v] = number of valid prefixes ending in segment v (index v - 1).
    let mut ways = vec![0u128; r_us];
    for w in ways.iter_mut().take((1 + b).min(r_us)) {
        *w = 1;
    }
    let mut next = vec![0u128; r_us];
    for _ in 1..len {
        for v in 0..r_us {
            let lo = v.saturating_sub(b);
            next[v] = ways[lo..=v].iter().fold(0u128, |acc, &w| acc.saturating_add(w));
        }
        std::mem::swap(&mut ways, &mut next);
    }
    Ok(ways.iter().fold(0u128, |acc, &w| acc.saturating_add(w)))
}

/// Uniform sampler over `P_beta` that never materializes the set.
///
/// `completions[t][v]` counts the valid ways to fill positions `t+1..len`
/// once position `t` holds segment `v + 1`.
#[derive(Debug, Clone)]
pub struct SequenceSampler {
    len: usize,
    beta: Segment,
    r: Segment,
    completions: Vec<Vec<u128>>,
    total: u128,
}

impl SequenceSampler {
    pub fn new(len: usize, beta: Segment, r: Segment) -> Result<Self> {
        check_params(len, beta, r)?;
        let r_us = usize::from(r);
        let b = usize::from(beta);
        let mut completions = vec![vec![0u128; r_us]; len];
        completions[len - 1].iter_mut().for_each(|c| *c = 1);
        for t in (0..len - 1).rev() {
            for v in 0..r_us {
                let hi = (v + b).min(r_us - 1);
                let sum = completions[t + 1][v..=hi]
                    .iter()
                    .try_fold(0u128, |acc, &c| acc.checked_add(c))
                    .ok_or_else(|| Error::Resource("valid-sequence count overflows u128".into()))?;
                completions[t][v] = sum;
            }
        }
        let mut total = 0u128;
        for c in completions[0].iter().take((1 + b).min(r_us)) {
            total =
                total.checked_add(*c).ok_or_else(|| Error::Resource("valid-sequence count overflows u128".into()))?;
        }
        Ok(Self { len, beta, r, completions, total })
    }

    /// `|P_beta|`.
    pub fn total(&self) -> u128 {
        self.total
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SegmentSequence {
        let b = usize::from(self.beta);
        let r_us = usize::from(self.r);
        let mut values = Vec::with_capacity(self.len);
        let mut lo = 0usize;
        let mut hi = b.min(r_us - 1);
        let mut budget = self.total;
        for t in 0..self.len {
            let mut pick = rng.random_range(0..budget);
            let mut chosen = hi;
            for v in lo..=hi {
                let c = self.completions[t][v];
                if pick < c {
                    chosen = v;
                    break;
                }
                pick -= c;
            }
            values.push(chosen as Segment + 1);
            budget = self.completions[t][chosen];
            lo = chosen;
            hi = (chosen + b).min(r_us - 1);
        }
        SegmentSequence { values }
    }
}

/// Location-privacy figures, in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBits {
    /// Uncertainty the RSU resolves from a segment index, `log2(r)`.
    pub rsu_resolved: f64,
    /// Uncertainty left to the RSU, `log2(M / r)`.
    pub rsu_residual: f64,
    /// Uncertainty left to an observer of one transmission.
    pub eavesdropper: f64,
}

/// Privacy of a segment report when the coverage area holds `m_cells` GPS
/// cells.
///
/// `hop_gap == 0` models an external eavesdropper between RSU and source
/// (`log2(2 beta M / r)`); `hop_gap >= 1` models the forwarder `hop_gap` hops
/// away from the vehicle (`log2(hop_gap beta M / r)`).
pub fn privacy_bits(m_cells: u64, r: Segment, beta: Segment, hop_gap: u32) -> Result<PrivacyBits> {
    if r == 0 || beta == 0 {
        return domain("r and beta must be positive");
    }
    if m_cells < u64::from(r) {
        return domain(format!("M={m_cells} GPS cells cannot be split into r={r} segments"));
    }
    let m = m_cells as f64;
    let r = f64::from(r);
    let beta = f64::from(beta);
    let factor = if hop_gap == 0 { 2.0 } else { f64::from(hop_gap) };
    Ok(PrivacyBits {
        rsu_resolved: r.log2(),
        rsu_residual: (m / r).log2(),
        eavesdropper: (factor * beta * m / r).log2(),
    })
}
