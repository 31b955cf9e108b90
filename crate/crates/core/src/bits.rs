//! Fixed-width bit vectors used for subformula type sets.
//!
//! A `BitVec` is sized once per subformula closure and never grows. All the
//! saturation-engine hot paths (meet, subset test, hashing) are word-wise.

/// Heap-allocated fixed-width bit vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    words: Box<[u64]>,
}

impl BitVec {
    pub fn zeros(width: usize) -> Self {
        BitVec {
            words: vec![0u64; width.div_ceil(64)].into_boxed_slice(),
        }
    }

    pub fn ones(width: usize) -> Self {
        let mut v = Self::zeros(width);
        for i in 0..width {
            v.set(i, true);
        }
        v
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, b: bool) {
        if b {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn and_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.words.len(), other.words.len());
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a &= *b;
        }
    }

    pub fn and(&self, other: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.and_assign(other);
        out
    }

    /// `self ⊆ other` pointwise.
    #[inline]
    pub fn is_subset(&self, other: &BitVec) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| a & !b == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Keep only positions present in `mask`.
    pub fn masked(&self, mask: &BitVec) -> BitVec {
        self.and(mask)
    }

    pub fn or_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.words.len(), other.words.len());
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a |= *b;
        }
    }

    pub fn or(&self, other: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.or_assign(other);
        out
    }

    /// OR in a vector that may cover fewer positions than this one.
    pub fn or_assign_shorter(&mut self, other: &BitVec) {
        debug_assert!(other.words.len() <= self.words.len());
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a |= *b;
        }
    }

    pub fn intersects(&self, other: &BitVec) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .any(|(a, b)| a & b != 0)
    }

    /// `(self ∩ mask) ⊆ other` without allocating the intersection.
    #[inline]
    pub fn masked_subset(&self, mask: &BitVec, other: &BitVec) -> bool {
        self.words
            .iter()
            .zip(mask.words.iter())
            .zip(other.words.iter())
            .all(|((a, m), b)| a & m & !b == 0)
    }

    pub fn iter_ones(&self, width: usize) -> impl Iterator<Item = usize> + '_ {
        (0..width).filter(move |&i| self.get(i))
    }
}

impl std::fmt::Debug for BitVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitVec[")?;
        for w in self.words.iter().rev() {
            write!(f, "{w:016x}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_roundtrip_across_word_boundary() {
        let mut v = BitVec::zeros(130);
        v.set(0, true);
        v.set(63, true);
        v.set(64, true);
        v.set(129, true);
        assert!(v.get(0) && v.get(63) && v.get(64) && v.get(129));
        assert!(!v.get(1) && !v.get(128));
        assert_eq!(v.count_ones(), 4);
    }

    #[test]
    fn subset_and_meet_agree() {
        let mut a = BitVec::zeros(70);
        let mut b = BitVec::zeros(70);
        for i in [3usize, 40, 69] {
            a.set(i, true);
            b.set(i, true);
        }
        b.set(10, true);
        assert!(a.is_subset(&b));
        assert!(!b.is_subset(&a));
        assert_eq!(a.and(&b), a);
    }
}
