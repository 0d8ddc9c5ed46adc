//! Provenance size and cost comparisons: the GPS-appending baseline, the
//! CLBF header size at a target false-positive rate, and the per-hop
//! compressed segment filter.

use rayon::prelude::*;

use crate::analysis::{optimal_k1, required_m2, size_bf1, CTable};
use crate::bloom::BloomFilter;
use crate::compression::{compress_with, decompress, Codec};
use crate::error::{domain, Error, Result};
use crate::packet::segment_stream;
use crate::segment::Segment;
use crate::sim::config::ScenarioConfig;
use crate::sim::fp::{trial_rng, Scenario};
use crate::sim::report::SimReport;

/// Bytes each node appends in the baseline: its ID and location padded to
/// one cipher block.
pub const GPS_BLOB_BYTES: u64 = 16;

/// Baseline in which every hop appends an encrypted 16-byte blob.
///
/// After hop `i` the packet carries `16 i` provenance bytes, so the average
/// over an `h`-hop path is `16 (h + 1) / 2` bytes. Delay counts one keyed
/// call per hop.
pub fn gps_baseline(h: usize, payload_bytes: u64) -> Result<SimReport> {
    if h == 0 {
        return domain("h must be at least 1");
    }
    let avg_bytes = GPS_BLOB_BYTES as f64 * (h as f64 + 1.0) / 2.0;
    Ok(SimReport {
        trials: 0,
        master_seed: 0,
        fp_rate: None,
        avg_packet_bits: 8.0 * (avg_bytes + payload_bytes as f64),
        avg_provenance_bits: 8.0 * avg_bytes,
        avg_sparsity: 0.0,
        end_to_end_delay_units: h as f64,
    })
}

/// Filter sizes that reach a target false-positive rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProvenanceSize {
    pub m1: u64,
    pub k1: u64,
    pub m2: u64,
    pub k2: u64,
    /// Analytical BF2 false-positive rate at `(m2, k2)`.
    pub fp2: f64,
}

impl ProvenanceSize {
    pub fn total_bits(&self) -> u64 {
        self.m1 + self.m2
    }
}

/// CLBF header size for an `h`-hop path: BF1 from the standard sizing rule
/// for `h` edges, BF2 from the smallest `m2` whose optimized objective meets
/// `target`.
pub fn clbf_provenance_bits(h: usize, r: Segment, beta: Segment, target: f64) -> Result<ProvenanceSize> {
    let m1 = size_bf1(h as u64, target)?;
    let k1 = optimal_k1(m1, h as u64)?;
    let table = CTable::build(h, beta, r)?;
    let (m2, opt) = required_m2(target, &table, u64::from(u16::MAX))?;
    Ok(ProvenanceSize { m1, k1, m2, k2: opt.k2, fp2: opt.value })
}

/// Segment filter carried hop by hop in compressed form: every node
/// decompresses, embeds its segment and recompresses.
///
/// `avg_provenance_bits` is the mean compressed body size over all hops and
/// trials (`m2` when `codec` is `None`); `avg_sparsity` is the mean fraction
/// of ones seen on the hops.
pub fn simulate_compressed_flow(cfg: &ScenarioConfig, codec: Option<Codec>) -> Result<SimReport> {
    let sc = Scenario::new(cfg.clone())?;
    let (lit, size, calls) = (0..cfg.trials)
        .into_par_iter()
        .map(|t| flow_trial(&sc, t, codec))
        .try_reduce(|| (0, 0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)))?;
    let hops = (cfg.trials.max(1) * cfg.h as u64) as f64;
    let n = cfg.trials.max(1) as f64;
    Ok(SimReport {
        trials: cfg.trials,
        master_seed: cfg.master_seed,
        fp_rate: None,
        avg_packet_bits: size as f64 / hops,
        avg_provenance_bits: size as f64 / hops,
        avg_sparsity: lit as f64 / (hops * cfg.m2 as f64),
        end_to_end_delay_units: calls as f64 / n,
    })
}

fn flow_trial(sc: &Scenario, t: u64, codec: Option<Codec>) -> Result<(u64, u64, u64)> {
    let c = sc.config();
    let mut rng = trial_rng(c.master_seed, t);
    let d = sc.draw_path(&mut rng);
    let mut wire: Option<crate::compression::CompressedBits> = None;
    let (mut lit, mut size, mut calls) = (0u64, 0u64, 0u64);
    let mut bf = BloomFilter::new(c.m2, c.k2)?;
    for (&node, &seg) in d.0.iter().zip(&d.1) {
        if let Some(w) = &wire {
            let bits = decompress(w).map_err(|e| Error::Decode(format!("trial {t}: {e}")))?;
            bf = BloomFilter::from_bits(&bits, c.k2)?;
            calls += 1;
        }
        let creds = sc.keystore().credentials(node).expect("path nodes come from the key store");
        for i in segment_stream(creds, seg, &d.2, c.m2).take(c.k2) {
            bf.set(i)?;
        }
        calls += c.k2 as u64;
        lit += bf.popcount();
        match codec {
            Some(codec) => {
                let bits = bf.to_bits();
                let enc = compress_with(&bits, codec)?;
                calls += 1;
                size += enc.body_bits as u64;
                wire = Some(enc);
            }
            None => size += c.m2,
        }
    }
    Ok((lit, size, calls))
}
