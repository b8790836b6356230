//! Word-level helpers for packed bit vectors.
//!
//! Bit `k` of a vector lives in word `k / 64` at position `k % 64`. Bits past
//! the logical length are always kept at zero.

pub const WORD_BITS: usize = 64;

#[inline]
pub fn word_count(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Mask of the valid bits in the last word of a `bits`-long vector.
#[inline]
pub fn tail_mask(bits: usize) -> u64 {
    match bits % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

#[inline]
pub fn get(words: &[u64], k: usize) -> bool {
    words[k / WORD_BITS] >> (k % WORD_BITS) & 1 == 1
}

#[inline]
pub fn set(words: &mut [u64], k: usize) {
    words[k / WORD_BITS] |= 1u64 << (k % WORD_BITS);
}

#[inline]
pub fn clear(words: &mut [u64], k: usize) {
    words[k / WORD_BITS] &= !(1u64 << (k % WORD_BITS));
}

/// Indices of the set bits, ascending.
pub fn ones(words: &[u64]) -> Vec<usize> {
    let mut out = Vec::new();
    for (w, &word) in words.iter().enumerate() {
        let mut rest = word;
        while rest != 0 {
            let tz = rest.trailing_zeros() as usize;
            out.push(w * WORD_BITS + tz);
            rest &= rest - 1;
        }
    }
    out
}

/// Packs a set of indices into a fresh `bits`-long word vector.
///
/// Panics if an index is out of range.
pub fn from_indices(indices: &[usize], bits: usize) -> Vec<u64> {
    let mut words = vec![0u64; word_count(bits)];
    for &k in indices {
        assert!(k < bits, "index {k} out of range for {bits} bits");
        set(&mut words, k);
    }
    words
}
