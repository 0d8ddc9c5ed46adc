//! Localizing a segment-level jammer from which segments still deliver
//! provenance.
//!
//! Every vehicle outside the jammed segment sends one packet along a
//! min-hop route to each RSU. The RSUs recover segment sequences and mark
//! every segment seen in a uniquely recovered packet. Segments never seen are
//! the fault region.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::error::{domain, Result};
use crate::packet::{embed_terminal_edge, forward_step, ClbfPacket, NodeCredentials, NodeId, PacketId};
use crate::recovery::{recover, KeyStore, OutcomeKind};
use crate::segment::Segment;

/// Vehicles spread evenly over the `r` segments of one road.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JammerTopology {
    pub r: Segment,
    pub beta: Segment,
    pub nodes_per_segment: u32,
    pub master_seed: u64,
}

impl JammerTopology {
    pub fn new(r: Segment, beta: Segment) -> Self {
        Self { r, beta, nodes_per_segment: 3, master_seed: 0x5EED }
    }

    /// Segment of vehicle `id` (ids start at 1).
    fn segment(&self, id: u32) -> Segment {
        ((id - 1) / self.nodes_per_segment) as Segment + 1
    }

    fn vehicles(&self) -> impl Iterator<Item = NodeId> {
        (1..=u32::from(self.r) * self.nodes_per_segment).map(NodeId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JammerVerdict {
    /// Every segment delivered.
    None,
    /// Single RSU: segments past `b` are silent.
    Beyond(Segment),
    /// Both RSUs agree on exactly one silent segment.
    Exact(Segment),
    /// Both RSUs leave the inclusive range silent.
    Between(Segment, Segment),
}

impl fmt::Display for JammerVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JammerVerdict::None => f.write_str("none"),
            JammerVerdict::Beyond(b) => write!(f, "beyond A{b}"),
            JammerVerdict::Exact(s) => write!(f, "A{s}"),
            JammerVerdict::Between(a, b) => write!(f, "A{a}..A{b}"),
        }
    }
}

const RSU_NEAR: NodeId = NodeId(0);
const RSU_FAR: NodeId = NodeId(u32::MAX);
const M: u64 = 4096;
const K: usize = 12;

/// Segments observed by one RSU. `seg_of` maps a vehicle to its segment as
/// that RSU numbers them (1 next to the RSU).
fn observe(
    topo: &JammerTopology,
    keystore: &KeyStore,
    alive: &[NodeId],
    seg_of: &dyn Fn(NodeId) -> Segment,
    pid_base: u64,
) -> Result<BTreeSet<Segment>> {
    let beta = topo.beta;
    // Breadth-first search from the RSU over links a node may use towards it:
    // from segment s to segment t with t <= s and s - t <= beta.
    let idx = |n: NodeId| alive.iter().position(|&m| m == n).expect("alive node");
    let mut dist = vec![usize::MAX; alive.len()];
    let mut next_hop: Vec<Option<NodeId>> = vec![None; alive.len()];
    let mut queue = VecDeque::new();
    for &n in alive {
        if seg_of(n) - 1 <= beta {
            dist[idx(n)] = 1;
            queue.push_back(n);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &u in alive {
            let (su, sv) = (seg_of(u), seg_of(v));
            if u != v && sv <= su && su - sv <= beta && dist[idx(u)] == usize::MAX {
                dist[idx(u)] = dist[idx(v)] + 1;
                next_hop[idx(u)] = Some(v);
                queue.push_back(u);
            }
        }
    }
    let mut seen = BTreeSet::new();
    for (i, &src) in alive.iter().enumerate() {
        if dist[i] == usize::MAX {
            continue;
        }
        let mut path = vec![src];
        while let Some(n) = next_hop[idx(*path.last().expect("non-empty"))] {
            path.push(n);
        }
        let mut pkt = ClbfPacket::new(PacketId::from_u64(pid_base + i as u64), M, K, M, K, Vec::new())?;
        let mut prev = None;
        for &n in &path {
            forward_step(&mut pkt, keystore.credentials(n).expect("known node"), prev, seg_of(n), K, K)?;
            prev = Some(n);
        }
        let last = keystore.credentials(*path.last().expect("non-empty")).expect("known node");
        embed_terminal_edge(&mut pkt, last, keystore.rsu_id(), K)?;
        let (_, outcome) = recover(&pkt, keystore, src, beta, topo.r, K, K)?;
        if let OutcomeKind::Unique { segments, .. } = outcome.kind {
            seen.extend(segments);
        }
    }
    Ok(seen)
}

/// Runs the drill. `jammed` disables every vehicle of that segment; the
/// second RSU, if enabled, sits at the far end of segment `r`.
pub fn jammer_scenario(topo: &JammerTopology, jammed: Option<Segment>, dual_rsu: bool) -> Result<JammerVerdict> {
    let r = topo.r;
    if r < 2 || topo.beta == 0 || topo.beta > r || topo.nodes_per_segment == 0 {
        return domain("need r >= 2, 1 <= beta <= r and at least one node per segment");
    }
    if let Some(j) = jammed {
        if j <= 1 || j > r {
            return domain(format!("jammed segment must lie in [2, {r}], got {j}"));
        }
        if dual_rsu && j == r {
            return domain("with two RSUs the jammed segment must lie in [2, r-1]");
        }
    }
    let creds: Vec<NodeCredentials> =
        topo.vehicles().map(|n| NodeCredentials::from_seed(topo.master_seed, n)).collect();
    let alive: Vec<NodeId> = topo.vehicles().filter(|&n| Some(topo.segment(n.0)) != jammed).collect();

    let near_keys = KeyStore::new(RSU_NEAR, creds.clone())?;
    let near = observe(topo, &near_keys, &alive, &|n| topo.segment(n.0), 0)?;
    let silent_near: Vec<Segment> = (1..=r).filter(|s| !near.contains(s)).collect();
    if !dual_rsu {
        return Ok(match silent_near.first() {
            None => JammerVerdict::None,
            Some(&first) => JammerVerdict::Beyond(first - 1),
        });
    }
    let far_keys = KeyStore::new(RSU_FAR, creds)?;
    let far = observe(topo, &far_keys, &alive, &|n| r + 1 - topo.segment(n.0), 1 << 32)?;
    let silent: Vec<Segment> = silent_near.into_iter().filter(|s| !far.contains(&(r + 1 - s))).collect();
    Ok(match silent.as_slice() {
        [] => JammerVerdict::None,
        [s] => JammerVerdict::Exact(*s),
        [first, .., last] => JammerVerdict::Between(*first, *last),
    })
}
