//! Node identities, edge IDs and the per-hop embedding procedure.
//!
//! Every forwarding node inserts the edge it received the packet on into BF1
//! and its own segment into BF2, then bumps the hop counter. The source only
//! touches BF2. The node next to the RSU additionally inserts a terminal
//! edge towards the RSU, so an `h`-hop path leaves `h` edges in BF1.

use std::fmt;

use hmac::{Hmac, KeyInit, Mac};
use sha2::{Digest, Sha256};

use crate::bloom::BloomFilter;
use crate::error::{domain, Error, Result};
use crate::hashing::{IndexStream, EDGE_TAG, SEGMENT_TAG};
use crate::segment::Segment;

pub const KEY_LEN: usize = 16;
pub const EDGE_ID_LEN: usize = 16;
pub const PID_LEN: usize = 8;

const EID_TAG: &[u8] = b"EID";
const TERMINAL_EID_TAG: &[u8] = b"EID-RSU";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn to_bytes(self) -> [u8; 4] {
        self.0.to_be_bytes()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PacketId(pub [u8; PID_LEN]);

impl PacketId {
    pub fn from_u64(v: u64) -> Self {
        Self(v.to_be_bytes())
    }
}

impl fmt::Display for PacketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|b| write!(f, "{b:02x}"))
    }
}

/// Identity and pre-shared key of one vehicle.
#[derive(Clone, PartialEq, Eq)]
pub struct NodeCredentials {
    pub node_id: NodeId,
    pub key: [u8; KEY_LEN],
}

impl NodeCredentials {
    pub fn new(node_id: NodeId, key: [u8; KEY_LEN]) -> Self {
        Self { node_id, key }
    }

    /// Deterministic key for simulations: `SHA-256("KEY" || seed || id)`.
    pub fn from_seed(master_seed: u64, node_id: NodeId) -> Self {
        let mut h = Sha256::new();
        h.update(b"KEY");
        h.update(master_seed.to_be_bytes());
        h.update(node_id.to_bytes());
        let digest = h.finalize();
        Self { node_id, key: digest[..KEY_LEN].try_into().expect("digest is 32 bytes") }
    }
}

impl fmt::Debug for NodeCredentials {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NodeCredentials").field("node_id", &self.node_id).field("key", &"<redacted>").finish()
    }
}

/// Directed edge `from -> to` with its keyed identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId {
    pub value: [u8; EDGE_ID_LEN],
    pub from_node: NodeId,
    pub to_node: NodeId,
}

fn prf(key: &[u8; KEY_LEN], tag: &[u8], a: NodeId, b: NodeId) -> [u8; EDGE_ID_LEN] {
    let mut mac = <Hmac<Sha256> as KeyInit>::new_from_slice(key).expect("HMAC accepts any key length");
    mac.update(tag);
    mac.update(&a.to_bytes());
    mac.update(&b.to_bytes());
    let out = mac.finalize().into_bytes();
    out[..EDGE_ID_LEN].try_into().expect("HMAC-SHA256 output is 32 bytes")
}

/// Edge ID computed by receiver `self_id` for a packet from `neighbor_id`.
///
/// The resulting edge is directed `neighbor_id -> self_id`.
pub fn derive_edge_id(creds: &NodeCredentials, self_id: NodeId, neighbor_id: NodeId) -> Result<EdgeId> {
    if self_id != creds.node_id {
        return domain(format!("credentials belong to {}, not {self_id}", creds.node_id));
    }
    if self_id == neighbor_id {
        return domain(format!("self-loop on node {self_id}"));
    }
    Ok(EdgeId { value: prf(&creds.key, EID_TAG, self_id, neighbor_id), from_node: neighbor_id, to_node: self_id })
}

/// Edge ID for the last hop `self_id -> rsu_id`, computed by the sender.
pub fn derive_terminal_edge_id(creds: &NodeCredentials, rsu_id: NodeId) -> Result<EdgeId> {
    if creds.node_id == rsu_id {
        return domain("the RSU does not embed");
    }
    Ok(EdgeId {
        value: prf(&creds.key, TERMINAL_EID_TAG, creds.node_id, rsu_id),
        from_node: creds.node_id,
        to_node: rsu_id,
    })
}

/// BF1 material: `eid || pid`.
pub fn edge_material(eid: &EdgeId, pid: &PacketId) -> [u8; EDGE_ID_LEN + PID_LEN] {
    let mut out = [0u8; EDGE_ID_LEN + PID_LEN];
    out[..EDGE_ID_LEN].copy_from_slice(&eid.value);
    out[EDGE_ID_LEN..].copy_from_slice(&pid.0);
    out
}

/// BF2 material: `node_id || segment || pid || key`.
pub fn segment_material(creds: &NodeCredentials, segment: Segment, pid: &PacketId) -> [u8; 4 + 2 + PID_LEN + KEY_LEN] {
    let mut out = [0u8; 4 + 2 + PID_LEN + KEY_LEN];
    out[..4].copy_from_slice(&creds.node_id.to_bytes());
    out[4..6].copy_from_slice(&segment.to_be_bytes());
    out[6..6 + PID_LEN].copy_from_slice(&pid.0);
    out[6 + PID_LEN..].copy_from_slice(&creds.key);
    out
}

pub fn edge_stream(eid: &EdgeId, pid: &PacketId, m1: u64) -> IndexStream {
    IndexStream::new(EDGE_TAG, &edge_material(eid, pid), m1)
}

pub fn segment_stream(creds: &NodeCredentials, segment: Segment, pid: &PacketId, m2: u64) -> IndexStream {
    IndexStream::new(SEGMENT_TAG, &segment_material(creds, segment, pid), m2)
}

/// Packet header: the two provenance filters plus a hop counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClbfPacket {
    pub pid: PacketId,
    pub bf1: BloomFilter,
    pub bf2: BloomFilter,
    pub hop_counter: u8,
    pub payload: Vec<u8>,
}

impl ClbfPacket {
    /// Fresh packet with all-zero filters and a zero counter.
    pub fn new(pid: PacketId, m1: u64, k1: usize, m2: u64, k2: usize, payload: Vec<u8>) -> Result<Self> {
        if m1 > u64::from(u16::MAX) || m2 > u64::from(u16::MAX) {
            return domain("filter sizes must fit the 16-bit wire fields");
        }
        if payload.len() > usize::from(u16::MAX) {
            return domain("payload longer than 65535 bytes");
        }
        Ok(Self { pid, bf1: BloomFilter::new(m1, k1)?, bf2: BloomFilter::new(m2, k2)?, hop_counter: 0, payload })
    }

    /// Wire layout: `pid(8) | hop(1) | m1(2) | BF1 | m2(2) | BF2 | len(2) | payload`,
    /// integers big-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(15 + self.payload.len());
        out.extend_from_slice(&self.pid.0);
        out.push(self.hop_counter);
        out.extend_from_slice(&(self.bf1.m() as u16).to_be_bytes());
        out.extend_from_slice(&self.bf1.to_bytes());
        out.extend_from_slice(&(self.bf2.m() as u16).to_be_bytes());
        out.extend_from_slice(&self.bf2.to_bytes());
        out.extend_from_slice(&(self.payload.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses the wire layout. Hash counts are not on the wire and must be
    /// supplied.
    pub fn from_bytes(bytes: &[u8], k1: usize, k2: usize) -> Result<Self> {
        let mut cur = bytes;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cur.len() < n {
                return Err(Error::Decode("packet truncated".into()));
            }
            let (head, tail) = cur.split_at(n);
            cur = tail;
            Ok(head)
        };
        let pid = PacketId(take(PID_LEN)?.try_into().expect("length checked"));
        let hop_counter = take(1)?[0];
        let m1 = u64::from(u16::from_be_bytes(take(2)?.try_into().expect("length checked")));
        let bf1 = BloomFilter::from_bytes(m1, k1, take(m1.div_ceil(8) as usize)?)?;
        let m2 = u64::from(u16::from_be_bytes(take(2)?.try_into().expect("length checked")));
        let bf2 = BloomFilter::from_bytes(m2, k2, take(m2.div_ceil(8) as usize)?)?;
        let len = usize::from(u16::from_be_bytes(take(2)?.try_into().expect("length checked")));
        let payload = take(len)?.to_vec();
        if !cur.is_empty() {
            return Err(Error::Decode(format!("{} trailing bytes after payload", cur.len())));
        }
        Ok(Self { pid, bf1, bf2, hop_counter, payload })
    }
}

fn check_k(bf: &BloomFilter, k: usize, which: &str) -> Result<()> {
    if bf.k() != k {
        return domain(format!("{which} was created for k={}, embedding asked for k={k}", bf.k()));
    }
    Ok(())
}

pub fn embed_segment(pkt: &mut ClbfPacket, creds: &NodeCredentials, segment: Segment, k2: usize) -> Result<()> {
    if segment == 0 {
        return domain("segments are numbered from 1");
    }
    check_k(&pkt.bf2, k2, "BF2")?;
    for i in segment_stream(creds, segment, &pkt.pid, pkt.bf2.m()).take(k2) {
        pkt.bf2.set_unchecked(i);
    }
    Ok(())
}

pub fn embed_edge(pkt: &mut ClbfPacket, eid: &EdgeId, k1: usize) -> Result<()> {
    check_k(&pkt.bf1, k1, "BF1")?;
    for i in edge_stream(eid, &pkt.pid, pkt.bf1.m()).take(k1) {
        pkt.bf1.set_unchecked(i);
    }
    Ok(())
}

/// Inserts the last-hop edge towards the RSU. Called by the RSU-adjacent
/// node after its [`forward_step`].
pub fn embed_terminal_edge(pkt: &mut ClbfPacket, creds: &NodeCredentials, rsu_id: NodeId, k1: usize) -> Result<()> {
    let eid = derive_terminal_edge_id(creds, rsu_id)?;
    embed_edge(pkt, &eid, k1)
}

/// Processing at one embedding node. `prev` is `None` at the source.
pub fn forward_step(
    pkt: &mut ClbfPacket,
    creds: &NodeCredentials,
    prev: Option<NodeId>,
    segment: Segment,
    k1: usize,
    k2: usize,
) -> Result<()> {
    if pkt.hop_counter == u8::MAX {
        return domain("hop counter would overflow");
    }
    if let Some(prev) = prev {
        let eid = derive_edge_id(creds, creds.node_id, prev)?;
        embed_edge(pkt, &eid, k1)?;
    }
    embed_segment(pkt, creds, segment, k2)?;
    pkt.hop_counter += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn creds(id: u32) -> NodeCredentials {
        NodeCredentials::from_seed(42, NodeId(id))
    }

    #[test]
    fn edge_ids_are_deterministic_and_asymmetric() {
        let (a, b) = (creds(1), creds(2));
        let ab = derive_edge_id(&a, a.node_id, b.node_id).unwrap();
        assert_eq!(ab, derive_edge_id(&a, a.node_id, b.node_id).unwrap());
        let ba = derive_edge_id(&b, b.node_id, a.node_id).unwrap();
        assert_ne!(ab.value, ba.value);
        assert_eq!((ab.from_node, ab.to_node), (NodeId(2), NodeId(1)));
        assert!(derive_edge_id(&a, a.node_id, a.node_id).is_err());
        assert!(derive_edge_id(&a, b.node_id, NodeId(3)).is_err());
    }

    #[test]
    fn terminal_edge_differs_from_regular_edge() {
        let a = creds(1);
        let rsu = NodeId(0);
        let t = derive_terminal_edge_id(&a, rsu).unwrap();
        let e = derive_edge_id(&a, a.node_id, rsu).unwrap();
        assert_ne!(t.value, e.value);
        assert_eq!((t.from_node, t.to_node), (a.node_id, rsu));
    }

    #[test]
    fn source_step_leaves_bf1_untouched() {
        let mut pkt = ClbfPacket::new(PacketId::from_u64(9), 10, 5, 10, 5, vec![]).unwrap();
        forward_step(&mut pkt, &creds(1), None, 3, 5, 5).unwrap();
        assert_eq!(pkt.hop_counter, 1);
        assert_eq!(pkt.bf1.popcount(), 0);
        let lit = pkt.bf2.popcount();
        assert!((1..=5).contains(&lit));
    }

    #[test]
    fn intermediate_step_touches_both_filters() {
        let mut pkt = ClbfPacket::new(PacketId::from_u64(9), 10, 5, 10, 5, vec![]).unwrap();
        forward_step(&mut pkt, &creds(1), None, 3, 5, 5).unwrap();
        let before = pkt.bf2.popcount();
        forward_step(&mut pkt, &creds(2), Some(NodeId(1)), 2, 5, 5).unwrap();
        assert_eq!(pkt.hop_counter, 2);
        assert!((1..=5).contains(&pkt.bf1.popcount()));
        assert!(pkt.bf2.popcount() >= before);
    }

    #[test]
    fn wire_roundtrip() {
        let mut pkt = ClbfPacket::new(PacketId::from_u64(77), 37, 3, 100, 4, b"hello".to_vec()).unwrap();
        forward_step(&mut pkt, &creds(5), None, 2, 3, 4).unwrap();
        forward_step(&mut pkt, &creds(6), Some(NodeId(5)), 1, 3, 4).unwrap();
        let bytes = pkt.to_bytes();
        assert_eq!(bytes.len(), 8 + 1 + 2 + 5 + 2 + 13 + 2 + 5);
        assert_eq!(ClbfPacket::from_bytes(&bytes, 3, 4).unwrap(), pkt);
        assert!(ClbfPacket::from_bytes(&bytes[..bytes.len() - 1], 3, 4).is_err());
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(ClbfPacket::from_bytes(&longer, 3, 4).is_err());
    }

    #[test]
    fn mismatched_k_is_rejected() {
        let mut pkt = ClbfPacket::new(PacketId::from_u64(1), 10, 2, 10, 2, vec![]).unwrap();
        assert!(embed_segment(&mut pkt, &creds(1), 1, 3).is_err());
        assert!(embed_segment(&mut pkt, &creds(1), 0, 2).is_err());
    }

    #[test]
    fn pid_display_is_hex() {
        assert_eq!(PacketId::from_u64(0xAB).to_string(), "00000000000000ab");
    }
}
