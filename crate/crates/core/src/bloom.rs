//! Fixed-size Bloom filter with 1-based bit positions.

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BloomFilter {
    m: u64,
    k: usize,
    words: Vec<u64>,
}

impl BloomFilter {
    pub fn new(m: u64, k: usize) -> Result<Self> {
        if m == 0 {
            return domain("filter size m must be positive");
        }
        if m > u64::from(u16::MAX) * 64 {
            return domain(format!("filter size {m} is unreasonably large"));
        }
        if k == 0 || k as u64 > m {
            return domain(format!("hash count k must lie in [1, m={m}], got {k}"));
        }
        Ok(Self { m, k, words: vec![0; m.div_ceil(64) as usize] })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn check(&self, index: u64) -> Result<()> {
        if index == 0 || index > self.m {
            return domain(format!("index {index} outside [1, {}]", self.m));
        }
        Ok(())
    }

    #[inline]
    fn slot(index: u64) -> (usize, u64) {
        let i = index - 1;
        ((i / 64) as usize, 1u64 << (i % 64))
    }

    /// Sets one bit. `index` must already be in range.
    #[inline]
    pub(crate) fn set_unchecked(&mut self, index: u64) {
        debug_assert!(index >= 1 && index <= self.m);
        let (w, mask) = Self::slot(index);
        self.words[w] |= mask;
    }

    #[inline]
    pub(crate) fn get_unchecked(&self, index: u64) -> bool {
        debug_assert!(index >= 1 && index <= self.m);
        let (w, mask) = Self::slot(index);
        self.words[w] & mask != 0
    }

    pub fn get(&self, index: u64) -> Result<bool> {
        self.check(index)?;
        Ok(self.get_unchecked(index))
    }

    pub fn set(&mut self, index: u64) -> Result<()> {
        self.check(index)?;
        self.set_unchecked(index);
        Ok(())
    }

    /// Sets every index in `indices`; on error no bit is changed.
    pub fn insert(&mut self, indices: &[u64]) -> Result<()> {
        for &i in indices {
            self.check(i)?;
        }
        for &i in indices {
            self.set_unchecked(i);
        }
        Ok(())
    }

    /// True iff every index is set. An empty list is trivially contained.
    pub fn query(&self, indices: &[u64]) -> Result<bool> {
        for &i in indices {
            self.check(i)?;
        }
        Ok(indices.iter().all(|&i| self.get_unchecked(i)))
    }

    /// Membership test over the first `k` items of an index stream whose
    /// values are known to lie in `[1, m]`; stops at the first unset bit.
    pub fn contains_stream(&self, indices: impl IntoIterator<Item = u64>, k: usize) -> bool {
        indices.into_iter().take(k).all(|i| self.get_unchecked(i))
    }

    /// Number of set bits (`alpha`).
    pub fn popcount(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    /// Bits as booleans, position 1 first.
    pub fn to_bits(&self) -> Vec<bool> {
        (1..=self.m).map(|i| self.get_unchecked(i)).collect()
    }

    pub fn from_bits(bits: &[bool], k: usize) -> Result<Self> {
        let mut bf = Self::new(bits.len() as u64, k)?;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                bf.set_unchecked(i as u64 + 1);
            }
        }
        Ok(bf)
    }

    /// `ceil(m / 8)` bytes; bit 1 is the most significant bit of byte 0.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.m.div_ceil(8) as usize];
        for i in 1..=self.m {
            if self.get_unchecked(i) {
                let p = (i - 1) as usize;
                out[p / 8] |= 0x80 >> (p % 8);
            }
        }
        out
    }

    pub fn from_bytes(m: u64, k: usize, bytes: &[u8]) -> Result<Self> {
        let mut bf = Self::new(m, k)?;
        if bytes.len() as u64 != m.div_ceil(8) {
            return Err(Error::Decode(format!("{m}-bit filter needs {} bytes, got {}", m.div_ceil(8), bytes.len())));
        }
        for (p, byte) in bytes.iter().enumerate() {
            for b in 0..8 {
                if byte & (0x80 >> b) != 0 {
                    let index = (p * 8 + b) as u64 + 1;
                    if index > m {
                        return Err(Error::Decode("padding bits must be zero".into()));
                    }
                    bf.set_unchecked(index);
                }
            }
        }
        Ok(bf)
    }
}

/// Free-function form of [`BloomFilter::query`].
pub fn query(bf: &BloomFilter, indices: &[u64]) -> Result<bool> {
    bf.query(indices)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_filter_rejects_everything() {
        let bf = BloomFilter::new(10, 3).unwrap();
        assert!(!bf.query(&[1]).unwrap());
        assert!(!bf.query(&[10, 4]).unwrap());
        assert_eq!(bf.popcount(), 0);
    }

    #[test]
    fn range_checks() {
        let mut bf = BloomFilter::new(10, 3).unwrap();
        assert!(bf.query(&[0]).is_err());
        assert!(bf.query(&[11]).is_err());
        assert!(bf.insert(&[3, 11]).is_err());
        assert_eq!(bf.popcount(), 0);
        assert!(BloomFilter::new(0, 1).is_err());
        assert!(BloomFilter::new(4, 5).is_err());
        assert!(BloomFilter::new(4, 0).is_err());
    }

    #[test]
    fn insert_then_query() {
        let mut bf = BloomFilter::new(70, 2).unwrap();
        bf.insert(&[1, 64, 65, 70]).unwrap();
        assert!(bf.query(&[64, 65]).unwrap());
        assert!(bf.query(&[1, 70]).unwrap());
        assert!(!bf.query(&[2]).unwrap());
        assert_eq!(bf.popcount(), 4);
    }

    #[test]
    fn byte_layout_is_msb_first() {
        let mut bf = BloomFilter::new(10, 1).unwrap();
        bf.insert(&[1, 9, 10]).unwrap();
        assert_eq!(bf.to_bytes(), vec![0x80, 0xC0]);
        assert_eq!(BloomFilter::from_bytes(10, 1, &[0x80, 0xC0]).unwrap(), bf);
        assert!(BloomFilter::from_bytes(10, 1, &[0x80, 0xE0]).is_err());
        assert!(BloomFilter::from_bytes(10, 1, &[0x80]).is_err());
    }

    #[test]
    fn bits_roundtrip() {
        let bits = [true, false, false, true, true];
        let bf = BloomFilter::from_bits(&bits, 1).unwrap();
        assert_eq!(bf.to_bits(), bits);
    }
}
