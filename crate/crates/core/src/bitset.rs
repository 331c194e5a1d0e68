//! Word-level bitset helpers and a dense adjacency matrix.

use crate::graph::Graph;

/// Dense adjacency is used when the matrix stays below this many words.
pub(crate) const DENSE_MAX_WORDS: usize = 1 << 24;

#[inline]
pub(crate) fn and_count(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
}

#[cfg(test)]
pub(crate) fn count(a: &[u64]) -> u32 {
    a.iter().map(|w| w.count_ones()).sum()
}

#[inline]
pub(crate) fn is_empty(a: &[u64]) -> bool {
    a.iter().all(|&w| w == 0)
}

#[inline]
pub(crate) fn test(a: &[u64], i: usize) -> bool {
    a[i / 64] >> (i % 64) & 1 == 1
}

#[inline]
pub(crate) fn set(a: &mut [u64], i: usize) {
    a[i / 64] |= 1 << (i % 64);
}

/// Gathers the bits of `src` selected by `mask` into the low bits.
#[inline]
#[allow(unused_unsafe)]
pub(crate) fn compress_word(src: u64, mask: u64) -> u64 {
    #[cfg(all(target_arch = "x86_64", target_feature = "bmi2"))]
    {
        // SAFETY: the bmi2 target feature is enabled at compile time.
        unsafe { core::arch::x86_64::_pext_u64(src, mask) }
    }
    #[cfg(not(all(target_arch = "x86_64", target_feature = "bmi2")))]
    {
        let (mut out, mut m, mut k) = (0u64, mask, 0);
        while m != 0 {
            let b = m.trailing_zeros();
            out |= (src >> b & 1) << k;
            k += 1;
            m &= m - 1;
        }
        out
    }
}

/// Writes the bits of `src` at positions set in `mask`, packed in order,
/// into `out` (which must be zeroed and hold `count(mask)` bits).
pub(crate) fn compress_into(src: &[u64], mask: &[u64], out: &mut [u64]) {
    let mut pos = 0usize;
    for (&s, &m) in src.iter().zip(mask) {
        if m == 0 {
            continue;
        }
        let bits = compress_word(s, m);
        let len = m.count_ones() as usize;
        let (w, off) = (pos / 64, pos % 64);
        out[w] |= bits << off;
        if off != 0 && off + len > 64 {
            out[w + 1] |= bits >> (64 - off);
        }
        pos += len;
    }
}

/// Adjacency matrix with one bit row per vertex.
pub(crate) struct DenseAdjacency {
    pub words: usize,
    bits: Vec<u64>,
}

impl DenseAdjacency {
    /// `None` when the matrix would be too large or the graph too sparse
    /// for word-parallel rows to pay off.
    pub fn build_if_worthwhile(g: &Graph) -> Option<Self> {
        let n = g.vertex_count();
        let words = n.div_ceil(64).max(1);
        let avg_degree = 2 * g.edge_count() / n.max(1);
        if n * words > DENSE_MAX_WORDS || avg_degree * 8 < words {
            return None;
        }
        Some(Self::build(g))
    }

    pub fn build(g: &Graph) -> Self {
        let n = g.vertex_count();
        let words = n.div_ceil(64).max(1);
        let mut bits = vec![0u64; n * words];
        for u in 0..n {
            let row = &mut bits[u * words..(u + 1) * words];
            for &v in g.neighbors(u) {
                set(row, v as usize);
            }
        }
        Self { words, bits }
    }

    #[inline]
    pub fn row(&self, u: usize) -> &[u64] {
        &self.bits[u * self.words..(u + 1) * self.words]
    }
}
