//! Index derivation for the provenance filters.
//!
//! Index `l` (counting from 1) is the first eight bytes of
//! `SHA-256(len(tag) || tag || material || l)`, read big-endian, reduced
//! modulo `m` and shifted to `[1, m]`. The tag separates the edge filter from
//! the segment filter; keyed inputs carry the key inside `material`.

use sha2::{Digest, Sha256};

/// Domain tag for edge insertions into BF1.
pub const EDGE_TAG: &[u8] = b"EDGE";
/// Domain tag for segment insertions into BF2.
pub const SEGMENT_TAG: &[u8] = b"SEG";

/// Lazily derived index sequence for one element.
///
/// Queries stop at the first unset bit, so most negative lookups cost a
/// single digest.
#[derive(Clone)]
pub struct IndexStream {
    prefix: Sha256,
    m: u64,
    next_l: u32,
}

impl IndexStream {
    /// # Panics
    /// If `m == 0` or the tag is longer than 255 bytes.
    pub fn new(domain_tag: &[u8], material: &[u8], m: u64) -> Self {
        assert!(m >= 1, "filter size must be positive");
        let tag_len = u8::try_from(domain_tag.len()).expect("domain tag longer than 255 bytes");
        let mut prefix = Sha256::new();
        prefix.update([tag_len]);
        prefix.update(domain_tag);
        prefix.update(material);
        Self { prefix, m, next_l: 1 }
    }

    /// The `l`-th index (1-based) without advancing the stream.
    pub fn index_at(&self, l: u32) -> u64 {
        let mut h = self.prefix.clone();
        h.update(l.to_be_bytes());
        let digest = h.finalize();
        let word = u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"));
        word % self.m + 1
    }
}

impl Iterator for IndexStream {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let idx = self.index_at(self.next_l);
        self.next_l = self.next_l.checked_add(1)?;
        Some(idx)
    }
}

/// The first `k` indices in `[1, m]` for `material` under `domain_tag`.
///
/// The indices for `k` are a prefix of those for `k + 1`.
pub fn hash_indices(domain_tag: &[u8], material: &[u8], k: usize, m: u64) -> Vec<u64> {
    IndexStream::new(domain_tag, material, m).take(k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let a = hash_indices(SEGMENT_TAG, b"node-7", 16, 100);
        assert_eq!(a, hash_indices(SEGMENT_TAG, b"node-7", 16, 100));
        assert!(a.iter().all(|&i| (1..=100).contains(&i)));
        assert_eq!(hash_indices(EDGE_TAG, b"anything", 1, 1), vec![1]);
    }

    #[test]
    fn prefix_property() {
        let short = hash_indices(EDGE_TAG, b"x", 3, 1000);
        let long = hash_indices(EDGE_TAG, b"x", 9, 1000);
        assert_eq!(short[..], long[..3]);
    }

    #[test]
    fn tags_separate_domains() {
        assert_ne!(hash_indices(EDGE_TAG, b"same", 8, 1 << 40), hash_indices(SEGMENT_TAG, b"same", 8, 1 << 40));
    }

    #[test]
    fn tag_length_prevents_shifting() {
        // ("SE", "Gx") and ("SEG", "x") would collide without the length prefix.
        assert_ne!(hash_indices(b"SE", b"Gx", 4, 1 << 40), hash_indices(b"SEG", b"x", 4, 1 << 40));
    }
}
