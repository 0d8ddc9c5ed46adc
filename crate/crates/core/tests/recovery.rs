use clbf::packet::{embed_terminal_edge, forward_step, ClbfPacket, NodeId, PacketId};
use clbf::recovery::{recover, KeyStore, OutcomeKind};
use clbf::Error;

const K1: usize = 6;
const K2: usize = 4;

/// Sends one packet along `path` (source first) with `segments` in travel
/// order and returns it as the RSU receives it.
fn send(ks: &KeyStore, path: &[u32], segments: &[u16], m2: u64) -> ClbfPacket {
    let mut pkt = ClbfPacket::new(PacketId::from_u64(77), 256, K1, m2, K2, b"hello".to_vec()).unwrap();
    let mut prev = None;
    for (&n, &s) in path.iter().zip(segments) {
        forward_step(&mut pkt, ks.credentials(NodeId(n)).unwrap(), prev, s, K1, K2).unwrap();
        prev = Some(NodeId(n));
    }
    let last = ks.credentials(NodeId(*path.last().unwrap())).unwrap();
    embed_terminal_edge(&mut pkt, last, ks.rsu_id(), K1).unwrap();
    let wire = pkt.to_bytes();
    ClbfPacket::from_bytes(&wire, K1, K2).unwrap()
}

#[test]
fn three_hop_chain_is_recovered() {
    let ks = KeyStore::from_seed(9, 12).unwrap();
    let pkt = send(&ks, &[7, 3, 11], &[4, 3, 2], 512);
    assert_eq!(pkt.payload, b"hello");
    let (cands, outcome) = recover(&pkt, &ks, NodeId(7), 1, 6, K1, K2).unwrap();
    assert_eq!(cands.len(), 1);
    assert_eq!(
        outcome.kind,
        OutcomeKind::Unique { path: vec![NodeId(7), NodeId(3), NodeId(11), NodeId(0)], segments: vec![4, 3, 2] }
    );
}

#[test]
fn crowded_segment_filter_is_ambiguous_but_sound() {
    let ks = KeyStore::from_seed(9, 12).unwrap();
    let pkt = send(&ks, &[7, 3, 11], &[4, 3, 2], 6);
    let (cands, outcome) = recover(&pkt, &ks, NodeId(7), 1, 6, K1, K2).unwrap();
    assert_eq!(outcome.kind, OutcomeKind::FalsePositive);
    let truth = &cands.candidates[0];
    assert_eq!(truth.path, vec![NodeId(7), NodeId(3), NodeId(11), NodeId(0)]);
    assert!(truth.pruned[0].contains(&4) && truth.pruned[1].contains(&3) && truth.pruned[2].contains(&2));
}

#[test]
fn wrong_source_finds_no_path() {
    let ks = KeyStore::from_seed(9, 12).unwrap();
    let pkt = send(&ks, &[7, 3, 11], &[4, 3, 2], 512);
    assert!(matches!(recover(&pkt, &ks, NodeId(5), 1, 6, K1, K2), Err(Error::InconsistentProvenance(_))));
}

#[test]
fn foreign_keys_recover_nothing() {
    let ks = KeyStore::from_seed(9, 12).unwrap();
    let other = KeyStore::from_seed(10, 12).unwrap();
    let pkt = send(&ks, &[7, 3, 11], &[4, 3, 2], 512);
    assert!(recover(&pkt, &other, NodeId(7), 1, 6, K1, K2).is_err());
}

#[test]
fn segments_violating_the_step_rule_are_inconsistent() {
    let ks = KeyStore::from_seed(9, 12).unwrap();
    // A jump of two segments between neighbours breaks beta = 1.
    let pkt = send(&ks, &[7, 3, 11], &[5, 3, 2], 512);
    assert!(matches!(recover(&pkt, &ks, NodeId(7), 1, 6, K1, K2), Err(Error::InconsistentProvenance(_))));
}
