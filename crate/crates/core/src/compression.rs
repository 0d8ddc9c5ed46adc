//! Lossless coding of sparse filter bit arrays.
//!
//! Encoded form: one scheme byte, the original length in bits as a 16-bit
//! big-endian integer, then the body. Body bits are packed most significant
//! bit first and the last byte is zero-padded.
//!
//! Schemes:
//!
//! * `0x00` raw: the bits unchanged.
//! * `0x01` zero-run: Elias gamma of `ones + 1`, then for each one the gamma
//!   code of `1 + number of zeros since the previous one`. Trailing zeros are
//!   implied by the length.
//! * `0x10 | e` rake with window `R = 2^e`: scan a window of `R` bits; if it
//!   holds no one, emit `1` and skip the window; otherwise emit `0` followed
//!   by the `e`-bit offset of the first one and resume just past that one.
//!   A final partial window is handled the same way.

use crate::error::{domain, Error, Result};

pub const TAG_RAW: u8 = 0x00;
pub const TAG_ZERO_RUN: u8 = 0x01;
pub const TAG_RAKE_BASE: u8 = 0x10;
pub const HEADER_BYTES: usize = 3;
/// Largest rake exponent accepted (`R = 128`).
pub const MAX_RAKE_EXP: u8 = 7;
/// Window used by [`Codec::DEFAULT_RAKE`].
pub const DEFAULT_RAKE_EXP: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Codec {
    Raw,
    ZeroRun,
    /// Rake with window `2^log2_window`.
    Rake {
        log2_window: u8,
    },
}

impl Codec {
    pub const DEFAULT_RAKE: Codec = Codec::Rake { log2_window: DEFAULT_RAKE_EXP };

    pub fn tag(self) -> u8 {
        match self {
            Codec::Raw => TAG_RAW,
            Codec::ZeroRun => TAG_ZERO_RUN,
            Codec::Rake { log2_window } => TAG_RAKE_BASE | log2_window,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            TAG_RAW => Ok(Codec::Raw),
            TAG_ZERO_RUN => Ok(Codec::ZeroRun),
            t if t & 0xF0 == TAG_RAKE_BASE && t & 0x0F <= MAX_RAKE_EXP => Ok(Codec::Rake { log2_window: t & 0x0F }),
            t => Err(Error::Decode(format!("unknown scheme tag {t:#04x}"))),
        }
    }
}

/// A self-describing encoded bit string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedBits {
    pub tag: u8,
    pub body: Vec<u8>,
    /// Length of the original bit string.
    pub original_length: usize,
    /// Number of meaningful body bits (excludes padding).
    pub body_bits: usize,
}

impl CompressedBits {
    pub fn codec(&self) -> Result<Codec> {
        Codec::from_tag(self.tag)
    }

    /// Header plus padded body.
    pub fn encoded_len_bytes(&self) -> usize {
        HEADER_BYTES + self.body.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len_bytes());
        out.push(self.tag);
        out.extend_from_slice(&(self.original_length as u16).to_be_bytes());
        out.extend_from_slice(&self.body);
        out
    }

    /// Parses the header; the body is validated by [`decompress`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_BYTES {
            return Err(Error::Decode("missing header".into()));
        }
        Codec::from_tag(bytes[0])?;
        let original_length = usize::from(u16::from_be_bytes([bytes[1], bytes[2]]));
        let body = bytes[HEADER_BYTES..].to_vec();
        Ok(Self { tag: bytes[0], body_bits: body.len() * 8, body, original_length })
    }
}

#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().expect("byte just pushed") |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    fn push_bits(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            self.push(value >> i & 1 == 1);
        }
    }

    fn push_gamma(&mut self, v: u64) {
        debug_assert!(v >= 1);
        let width = 64 - v.leading_zeros();
        self.push_bits(0, width - 1);
        self.push_bits(v, width);
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl BitReader<'_> {
    fn bit(&mut self) -> Result<bool> {
        let byte = self.bytes.get(self.pos / 8).ok_or_else(|| Error::Decode("body truncated".into()))?;
        let b = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(b)
    }

    fn bits(&mut self, width: u32) -> Result<u64> {
        (0..width).try_fold(0u64, |acc, _| Ok(acc << 1 | u64::from(self.bit()?)))
    }

    fn gamma(&mut self) -> Result<u64> {
        let mut zeros = 0;
        while !self.bit()? {
            zeros += 1;
            if zeros > 32 {
                return Err(Error::Decode("gamma code too long".into()));
            }
        }
        Ok(1 << zeros | self.bits(zeros)?)
    }

    /// Remaining bits must be zero padding inside the last byte.
    fn finish(self) -> Result<()> {
        if self.bytes.len() != self.pos.div_ceil(8) {
            return Err(Error::Decode("trailing bytes after body".into()));
        }
        let rest = self.pos % 8;
        if rest != 0 && self.bytes[self.pos / 8] & (0xFF >> rest) != 0 {
            return Err(Error::Decode("non-zero padding".into()));
        }
        Ok(())
    }
}

fn encode_raw(bits: &[bool], w: &mut BitWriter) {
    bits.iter().for_each(|&b| w.push(b));
}

fn encode_zero_run(bits: &[bool], w: &mut BitWriter) {
    let ones = bits.iter().filter(|&&b| b).count() as u64;
    w.push_gamma(ones + 1);
    let mut gap = 0u64;
    for &b in bits {
        if b {
            w.push_gamma(gap + 1);
            gap = 0;
        } else {
            gap += 1;
        }
    }
}

fn encode_rake(bits: &[bool], log2_window: u8, w: &mut BitWriter) {
    let window = 1usize << log2_window;
    let mut i = 0;
    while i < bits.len() {
        let end = (i + window).min(bits.len());
        match bits[i..end].iter().position(|&b| b) {
            None => {
                w.push(true);
                i += window;
            }
            Some(off) => {
                w.push(false);
                w.push_bits(off as u64, u32::from(log2_window));
                i += off + 1;
            }
        }
    }
}

/// Encodes with a fixed scheme.
pub fn compress_with(bits: &[bool], codec: Codec) -> Result<CompressedBits> {
    if bits.len() > usize::from(u16::MAX) {
        return domain(format!("{} bits exceed the 16-bit length field", bits.len()));
    }
    let mut w = BitWriter::default();
    match codec {
        Codec::Raw => encode_raw(bits, &mut w),
        Codec::ZeroRun => encode_zero_run(bits, &mut w),
        Codec::Rake { log2_window } => {
            if log2_window > MAX_RAKE_EXP {
                return domain(format!("rake exponent {log2_window} above {MAX_RAKE_EXP}"));
            }
            encode_rake(bits, log2_window, &mut w)
        }
    }
    Ok(CompressedBits { tag: codec.tag(), body: w.bytes, original_length: bits.len(), body_bits: w.len })
}

/// Encodes with whichever of rake (window 4), zero-run and raw gives the
/// shortest body; ties go to the earlier scheme in that list.
pub fn compress(bits: &[bool]) -> Result<CompressedBits> {
    let mut best = compress_with(bits, Codec::DEFAULT_RAKE)?;
    for codec in [Codec::ZeroRun, Codec::Raw] {
        let c = compress_with(bits, codec)?;
        if c.body_bits < best.body_bits {
            best = c;
        }
    }
    Ok(best)
}

pub fn decompress(c: &CompressedBits) -> Result<Vec<bool>> {
    let n = c.original_length;
    let mut r = BitReader { bytes: &c.body, pos: 0 };
    let mut out = Vec::with_capacity(n);
    match c.codec()? {
        Codec::Raw => {
            for _ in 0..n {
                out.push(r.bit()?);
            }
        }
        Codec::ZeroRun => {
            let ones = r.gamma()? - 1;
            if ones > n as u64 {
                return Err(Error::Decode("more ones than bits".into()));
            }
            for _ in 0..ones {
                let gap = (r.gamma()? - 1) as usize;
                if out.len() + gap + 1 > n {
                    return Err(Error::Decode("run overflows the original length".into()));
                }
                out.resize(out.len() + gap, false);
                out.push(true);
            }
            out.resize(n, false);
        }
        Codec::Rake { log2_window } => {
            let window = 1usize << log2_window;
            while out.len() < n {
                if r.bit()? {
                    let fill = window.min(n - out.len());
                    out.resize(out.len() + fill, false);
                } else {
                    let off = r.bits(u32::from(log2_window))? as usize;
                    if out.len() + off + 1 > n {
                        return Err(Error::Decode("offset points past the end".into()));
                    }
                    out.resize(out.len() + off, false);
                    out.push(true);
                }
            }
        }
    }
    r.finish()?;
    Ok(out)
}

/// Fraction of ones.
pub fn density(bits: &[bool]) -> f64 {
    if bits.is_empty() {
        return 0.0;
    }
    bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_str(s: &str) -> Vec<bool> {
        s.bytes().map(|b| b == b'1').collect()
    }

    #[test]
    fn rake_codewords() {
        // 0000 -> "1"; 01.. -> "0" + "01"; then 00 (partial window of zeros) -> "1".
        let c = compress_with(&from_str("0000"), Codec::DEFAULT_RAKE).unwrap();
        assert_eq!(c.body_bits, 1);
        let c = compress_with(&from_str("010000"), Codec::DEFAULT_RAKE).unwrap();
        assert_eq!(c.body_bits, 3 + 1);
        assert_eq!(c.body, vec![0b0011_0000]);
        assert_eq!(decompress(&c).unwrap(), from_str("010000"));
    }

    #[test]
    fn zero_run_layout() {
        // ones = 2 -> gamma(3) = 011; gaps 1 and 0 -> gamma(2) = 010, gamma(1) = 1.
        let c = compress_with(&from_str("01100"), Codec::ZeroRun).unwrap();
        assert_eq!(c.body_bits, 7);
        assert_eq!(c.body, vec![0b0110_1010]);
        assert_eq!(decompress(&c).unwrap(), from_str("01100"));
    }

    #[test]
    fn all_zero_and_dense_inputs() {
        let zeros = vec![false; 100];
        let c = compress(&zeros).unwrap();
        assert!(c.body.len() <= 3);
        assert_eq!(decompress(&c).unwrap(), zeros);
        let dense: Vec<bool> = (0..100).map(|i| i % 2 == 0).collect();
        let c = compress(&dense).unwrap();
        assert_eq!(c.tag, TAG_RAW);
        assert_eq!(c.body_bits, 100);
        assert_eq!(decompress(&c).unwrap(), dense);
    }

    #[test]
    fn byte_roundtrip_and_errors() {
        let bits = from_str("0001000000010000001");
        for codec in [Codec::Raw, Codec::ZeroRun, Codec::DEFAULT_RAKE, Codec::Rake { log2_window: 0 }] {
            let c = compress_with(&bits, codec).unwrap();
            let parsed = CompressedBits::from_bytes(&c.to_bytes()).unwrap();
            assert_eq!(decompress(&parsed).unwrap(), bits);
            let mut cut = c.to_bytes();
            cut.pop();
            if let Ok(p) = CompressedBits::from_bytes(&cut) {
                assert!(decompress(&p).is_err());
            }
        }
        assert!(CompressedBits::from_bytes(&[0x02, 0, 1, 0]).is_err());
        assert!(CompressedBits::from_bytes(&[0x00, 0]).is_err());
        assert!(decompress(&CompressedBits::from_bytes(&[0x00, 0, 1, 0x81]).unwrap()).is_err());
        assert!(decompress(&CompressedBits::from_bytes(&[0x00, 0, 1, 0x80, 0]).unwrap()).is_err());
        assert!(compress_with(&bits, Codec::Rake { log2_window: 9 }).is_err());
    }

    #[test]
    fn empty_input() {
        let c = compress(&[]).unwrap();
        assert_eq!(decompress(&c).unwrap(), Vec::<bool>::new());
    }
}
