//! RSU-side reconstruction of the forwarding path and node segments.
//!
//! The pipeline is: query every known edge against BF1, enumerate `h`-hop
//! source-to-RSU paths over the recovered edges, query every (node, segment)
//! pair of each path against BF2, prune segment sets against the routing and
//! communication constraints, and classify.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::bloom::BloomFilter;
use crate::error::{domain, Error, Result};
use crate::packet::{
    derive_edge_id, derive_terminal_edge_id, edge_stream, segment_stream, ClbfPacket, EdgeId, NodeCredentials, NodeId,
    PacketId,
};
use crate::segment::{Segment, RSU_SEGMENT};

/// Default bound on the number of enumerated candidate paths.
pub const DEFAULT_PATH_CAP: usize = 100_000;

/// Keys of every vehicle plus the precomputed table of possible edges.
#[derive(Debug, Clone)]
pub struct KeyStore {
    rsu_id: NodeId,
    nodes: BTreeMap<NodeId, NodeCredentials>,
    edges: Vec<EdgeId>,
}

impl KeyStore {
    /// Builds a store whose edge table holds every ordered vehicle pair and
    /// every vehicle's terminal edge to the RSU.
    pub fn new(rsu_id: NodeId, creds: impl IntoIterator<Item = NodeCredentials>) -> Result<Self> {
        let mut nodes = BTreeMap::new();
        for c in creds {
            if c.node_id == rsu_id {
                return domain(format!("vehicle id {rsu_id} collides with the RSU id"));
            }
            if nodes.insert(c.node_id, c).is_some() {
                return domain("duplicate node id in key store");
            }
        }
        let mut edges = Vec::with_capacity(nodes.len() * nodes.len());
        for receiver in nodes.values() {
            for &sender in nodes.keys() {
                if sender != receiver.node_id {
                    edges.push(derive_edge_id(receiver, receiver.node_id, sender)?);
                }
            }
            edges.push(derive_terminal_edge_id(receiver, rsu_id)?);
        }
        Ok(Self { rsu_id, nodes, edges })
    }

    /// Store for vehicles `1..=n` with keys derived from `master_seed`; the
    /// RSU is node 0.
    pub fn from_seed(master_seed: u64, n: u32) -> Result<Self> {
        Self::new(NodeId(0), (1..=n).map(|i| NodeCredentials::from_seed(master_seed, NodeId(i))))
    }

    pub fn rsu_id(&self) -> NodeId {
        self.rsu_id
    }

    pub fn credentials(&self, node: NodeId) -> Option<&NodeCredentials> {
        self.nodes.get(&node)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Every edge the RSU can test for.
    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }
}

/// Edges whose `k1` indices are all set in BF1.
pub fn recover_edges(bf1: &BloomFilter, keystore: &KeyStore, pid: &PacketId, k1: usize) -> Vec<EdgeId> {
    keystore.edges.iter().filter(|e| bf1.contains_stream(edge_stream(e, pid, bf1.m()), k1)).copied().collect()
}

/// All simple `h`-hop paths from `source` to `rsu` over `edges`, with the
/// default cap.
pub fn enumerate_paths(edges: &[EdgeId], source: NodeId, rsu: NodeId, h: usize) -> Result<Vec<Vec<NodeId>>> {
    enumerate_paths_capped(edges, source, rsu, h, DEFAULT_PATH_CAP)
}

/// Like [`enumerate_paths`] but fails with a resource error once more than
/// `cap` paths are found. Paths list `h + 1` nodes, source first.
pub fn enumerate_paths_capped(
    edges: &[EdgeId],
    source: NodeId,
    rsu: NodeId,
    h: usize,
    cap: usize,
) -> Result<Vec<Vec<NodeId>>> {
    if h == 0 {
        return domain("hop length must be at least 1");
    }
    let mut adj: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for e in edges {
        adj.entry(e.from_node).or_default().push(e.to_node);
    }
    for targets in adj.values_mut() {
        targets.sort_unstable();
        targets.dedup();
    }
    let mut out = Vec::new();
    let mut path = vec![source];
    dfs(&adj, rsu, h, &mut path, &mut out, cap)?;
    Ok(out)
}

fn dfs(
    adj: &HashMap<NodeId, Vec<NodeId>>,
    rsu: NodeId,
    h: usize,
    path: &mut Vec<NodeId>,
    out: &mut Vec<Vec<NodeId>>,
    cap: usize,
) -> Result<()> {
    let here = *path.last().expect("path starts at the source");
    let depth = path.len() - 1;
    if depth == h {
        if here == rsu {
            if out.len() == cap {
                return Err(Error::Resource(format!("more than {cap} candidate paths")));
            }
            out.push(path.clone());
        }
        return Ok(());
    }
    if here == rsu {
        return Ok(());
    }
    for &next in adj.get(&here).map_or(&[][..], Vec::as_slice) {
        if path.contains(&next) {
            continue;
        }
        path.push(next);
        dfs(adj, rsu, h, path, out, cap)?;
        path.pop();
    }
    Ok(())
}

/// For each embedding node of `path_nodes` (the RSU, if present, is
/// skipped), the segments in `1..=r` whose `k2` indices are all set in BF2.
pub fn recover_segments(
    bf2: &BloomFilter,
    path_nodes: &[NodeId],
    keystore: &KeyStore,
    r: Segment,
    pid: &PacketId,
    k2: usize,
) -> Result<Vec<Vec<Segment>>> {
    if path_nodes.is_empty() {
        return domain("path must contain at least one node");
    }
    path_nodes
        .iter()
        .filter(|&&n| n != keystore.rsu_id)
        .map(|&n| {
            let creds = keystore.credentials(n).ok_or_else(|| Error::Domain(format!("no key for node {n}")))?;
            Ok((1..=r).filter(|&s| bf2.contains_stream(segment_stream(creds, s, pid, bf2.m()), k2)).collect())
        })
        .collect()
}

/// Arc-consistent reduction of per-node segment sets.
///
/// `sets` is in travel order (source first, RSU-adjacent node last). Returns
/// the pruned sets, each holding exactly the segments that occur in at least
/// one valid full assignment, and the number of such assignments
/// (saturating).
pub fn prune_sets(sets: &[Vec<Segment>], beta: Segment, r: Segment) -> (Vec<Vec<Segment>>, u128) {
    let h = sets.len();
    if h == 0 {
        return (Vec::new(), 0);
    }
    let width = usize::from(r) + 1;
    // Walk from the RSU outward: position t holds the node at travel index h-1-t.
    let at = |t: usize| &sets[h - 1 - t];
    let mut fwd = vec![vec![0u128; width]; h];
    for t in 0..h {
        for &v in at(t) {
            if v == 0 || v > r {
                continue;
            }
            let ways = if t == 0 {
                u128::from(v >= RSU_SEGMENT && v - RSU_SEGMENT <= beta)
            } else {
                let lo = v.saturating_sub(beta).max(1);
                (lo..=v).fold(0u128, |acc, u| acc.saturating_add(fwd[t - 1][usize::from(u)]))
            };
            fwd[t][usize::from(v)] = ways;
        }
    }
    let mut bwd = vec![vec![0u128; width]; h];
    for t in (0..h).rev() {
        for &v in at(t) {
            if v == 0 || v > r {
                continue;
            }
            bwd[t][usize::from(v)] = if t == h - 1 {
                1
            } else {
                let hi = (v.saturating_add(beta)).min(r);
                (v..=hi).fold(0u128, |acc, w| acc.saturating_add(bwd[t + 1][usize::from(w)]))
            };
        }
    }
    let total = fwd[h - 1].iter().fold(0u128, |acc, &w| acc.saturating_add(w));
    let mut pruned = vec![Vec::new(); h];
    for t in 0..h {
        let mut keep: Vec<Segment> = at(t)
            .iter()
            .copied()
            .filter(|&v| v >= 1 && v <= r && fwd[t][usize::from(v)] > 0 && bwd[t][usize::from(v)] > 0)
            .collect();
        keep.sort_unstable();
        keep.dedup();
        pruned[h - 1 - t] = keep;
    }
    (pruned, total)
}

/// One candidate path with its recovered and pruned segment sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    /// `h + 1` nodes, source first, RSU last.
    pub path: Vec<NodeId>,
    /// Recovered segment set per embedding node, travel order.
    pub recovered: Vec<Vec<Segment>>,
    /// Sets after pruning; equal to `recovered` until [`prune`] runs.
    pub pruned: Vec<Vec<Segment>>,
    /// Number of valid full segment assignments (set by [`prune`]).
    pub assignments: u128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub pid: PacketId,
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Builds the candidate set: paths over recovered edges plus recovered
/// segment sets for each path.
pub fn build_candidates(
    pkt: &ClbfPacket,
    keystore: &KeyStore,
    source: NodeId,
    r: Segment,
    k1: usize,
    k2: usize,
) -> Result<CandidateSet> {
    let h = usize::from(pkt.hop_counter);
    let edges = recover_edges(&pkt.bf1, keystore, &pkt.pid, k1);
    let paths = enumerate_paths(&edges, source, keystore.rsu_id, h)?;
    // Several paths share nodes; query each node once.
    let mut cache: HashMap<NodeId, Vec<Segment>> = HashMap::new();
    let mut candidates = Vec::with_capacity(paths.len());
    for path in paths {
        let mut recovered = Vec::with_capacity(h);
        for &n in &path[..h] {
            let set = match cache.entry(n) {
                Entry::Occupied(e) => e.into_mut(),
                Entry::Vacant(e) => e.insert(recover_segments(&pkt.bf2, &[n], keystore, r, &pkt.pid, k2)?.remove(0)),
            };
            recovered.push(set.clone());
        }
        candidates.push(Candidate { path, pruned: recovered.clone(), recovered, assignments: 0 });
    }
    Ok(CandidateSet { pid: pkt.pid, candidates })
}

/// Prunes every candidate's segment sets and drops candidates that admit no
/// valid assignment.
///
/// Fails with [`Error::InconsistentProvenance`] if no candidate survives,
/// which cannot happen for an untampered packet.
pub fn prune(mut candidates: CandidateSet, beta: Segment, r: Segment) -> Result<CandidateSet> {
    if candidates.is_empty() {
        return Err(Error::InconsistentProvenance("no candidate path reaches the RSU".into()));
    }
    for c in &mut candidates.candidates {
        let (pruned, count) = prune_sets(&c.recovered, beta, r);
        c.pruned = pruned;
        c.assignments = count;
    }
    candidates.candidates.retain(|c| c.assignments > 0);
    if candidates.is_empty() {
        return Err(Error::InconsistentProvenance(
            "no candidate path has a segment assignment satisfying the constraints".into(),
        ));
    }
    Ok(candidates)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutcomeKind {
    /// One path and one segment per embedding node (travel order).
    Unique {
        path: Vec<NodeId>,
        segments: Vec<Segment>,
    },
    FalsePositive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryOutcome {
    pub pid: PacketId,
    pub kind: OutcomeKind,
    pub candidate_count: usize,
}

impl RecoveryOutcome {
    pub fn is_unique(&self) -> bool {
        matches!(self.kind, OutcomeKind::Unique { .. })
    }

    pub const CSV_HEADER: &'static str = "pid,outcome,path,segments,candidate_count";

    /// One CSV row; the segments field is quoted since it contains commas.
    pub fn to_csv_row(&self) -> String {
        let (tag, path, segments) = match &self.kind {
            OutcomeKind::Unique { path, segments } => (
                "Unique",
                path.iter().map(ToString::to_string).collect::<Vec<_>>().join("-"),
                segments.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
            ),
            OutcomeKind::FalsePositive => ("FalsePositive", String::new(), String::new()),
        };
        let mut row = String::new();
        let seg_field = if segments.contains(',') { format!("\"{segments}\"") } else { segments };
        write!(row, "{},{tag},{path},{seg_field},{}", self.pid, self.candidate_count)
            .expect("writing to a String cannot fail");
        row
    }
}

/// Classifies a pruned candidate set.
pub fn classify(candidates: &CandidateSet) -> Result<RecoveryOutcome> {
    let kind = match candidates.candidates.as_slice() {
        [] => return Err(Error::InconsistentProvenance("empty candidate set".into())),
        [only] if only.pruned.iter().all(|s| s.len() == 1) => {
            OutcomeKind::Unique { path: only.path.clone(), segments: only.pruned.iter().map(|s| s[0]).collect() }
        }
        _ => OutcomeKind::FalsePositive,
    };
    Ok(RecoveryOutcome { pid: candidates.pid, kind, candidate_count: candidates.len() })
}

/// Full recovery of one received packet.
pub fn recover(
    pkt: &ClbfPacket,
    keystore: &KeyStore,
    source: NodeId,
    beta: Segment,
    r: Segment,
    k1: usize,
    k2: usize,
) -> Result<(CandidateSet, RecoveryOutcome)> {
    let candidates = prune(build_candidates(pkt, keystore, source, r, k1, k2)?, beta, r)?;
    let outcome = classify(&candidates)?;
    Ok((candidates, outcome))
}
