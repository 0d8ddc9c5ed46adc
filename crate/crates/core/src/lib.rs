//! Spatial provenance for multi-hop vehicular networks with segment-level
//! location privacy.
//!
//! A packet travelling towards a road-side unit (RSU) carries two Bloom
//! filters. BF1 collects keyed edge IDs of the links it crossed, BF2 collects
//! the road segment of every forwarding node. The RSU, which holds every
//! node's key, reconstructs the path and the segment of each hop, and uses
//! the routing constraints to discard segment combinations that cannot
//! occur.
//!
//! The crate is organised as follows:
//!
//! * [`segment`]: coverage segments, the broadcast dictionary, valid segment
//!   sequences and privacy figures.
//! * [`hashing`], [`bloom`], [`packet`]: index derivation, filters, edge IDs
//!   and per-hop embedding.
//! * [`recovery`]: path and segment reconstruction at the RSU.
//! * [`analysis`]: the analytical false-positive model and the choice of
//!   `k2`.
//! * [`compression`]: lossless coding of sparse filters.
//! * [`sim`]: Monte-Carlo experiments.
//!
//! ```
//! use clbf::packet::{embed_terminal_edge, forward_step, ClbfPacket, NodeId, PacketId};
//! use clbf::recovery::{recover, KeyStore, OutcomeKind};
//!
//! let keys = KeyStore::from_seed(7, 3)?;
//! let mut pkt = ClbfPacket::new(PacketId::from_u64(1), 512, 8, 512, 8, Vec::new())?;
//! // Node 3 in segment 2 sends through node 1 in segment 1.
//! forward_step(&mut pkt, keys.credentials(NodeId(3)).unwrap(), None, 2, 8, 8)?;
//! forward_step(&mut pkt, keys.credentials(NodeId(1)).unwrap(), Some(NodeId(3)), 1, 8, 8)?;
//! embed_terminal_edge(&mut pkt, keys.credentials(NodeId(1)).unwrap(), keys.rsu_id(), 8)?;
//!
//! let (_, outcome) = recover(&pkt, &keys, NodeId(3), 1, 4, 8, 8)?;
//! assert_eq!(
//!     outcome.kind,
//!     OutcomeKind::Unique { path: vec![NodeId(3), NodeId(1), NodeId(0)], segments: vec![2, 1] }
//! );
//! # Ok::<(), clbf::Error>(())
//! ```

pub mod analysis;
pub mod bloom;
pub mod compression;
pub mod error;
pub mod hashing;
pub mod packet;
pub mod recovery;
pub mod segment;
pub mod sim;

pub use error::{Error, Result};

// Keeps the guide's code samples compiling and passing as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/segments.md")]
    mod segments {}
    #[doc = include_str!("../../../book/src/embedding.md")]
    mod embedding {}
    #[doc = include_str!("../../../book/src/recovery.md")]
    mod recovery {}
    #[doc = include_str!("../../../book/src/false-positives.md")]
    mod false_positives {}
    #[doc = include_str!("../../../book/src/compression.md")]
    mod compression {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
}
