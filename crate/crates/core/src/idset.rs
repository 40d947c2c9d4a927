//! Fixed-universe bit set used for packet and symbol identifiers.

use rand::Rng;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct IdSet {
    words: Vec<u64>,
    universe: usize,
}

impl IdSet {
    pub fn new(universe: usize) -> Self {
        Self {
            words: vec![0; universe.div_ceil(64)],
            universe,
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut s = Self::new(universe);
        for id in 0..universe {
            s.insert(id);
        }
        s
    }

    pub fn from_ids(universe: usize, ids: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::new(universe);
        for id in ids {
            s.insert(id);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    /// Returns true if `id` was not already present.
    pub fn insert(&mut self, id: usize) -> bool {
        assert!(id < self.universe, "id {id} outside universe {}", self.universe);
        let (w, b) = (id / 64, id % 64);
        let fresh = self.words[w] & (1 << b) == 0;
        self.words[w] |= 1 << b;
        fresh
    }

    pub fn remove(&mut self, id: usize) {
        if id < self.universe {
            self.words[id / 64] &= !(1 << (id % 64));
        }
    }

    pub fn contains(&self, id: usize) -> bool {
        id < self.universe && self.words[id / 64] & (1 << (id % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn union_with(&mut self, other: &IdSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    /// Elements of `self` that are not in `other`.
    pub fn difference(&self, other: &IdSet) -> IdSet {
        let words = self
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| w & !other.words.get(i).copied().unwrap_or(0))
            .collect();
        IdSet {
            words,
            universe: self.universe,
        }
    }

    /// Iterates `self - other` without allocating.
    pub fn difference_iter<'a>(&'a self, other: &'a IdSet) -> impl Iterator<Item = usize> + 'a {
        self.words.iter().enumerate().flat_map(move |(wi, &w)| {
            let mut bits = w & !other.words.get(wi).copied().unwrap_or(0);
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Uniformly random element of `self - other`.
    pub fn choose_difference<R: Rng + ?Sized>(&self, other: &IdSet, rng: &mut R) -> Option<usize> {
        let masked = |i: usize| self.words[i] & !other.words.get(i).copied().unwrap_or(0);
        let n: usize = (0..self.words.len()).map(|i| masked(i).count_ones() as usize).sum();
        if n == 0 {
            return None;
        }
        let mut r = rng.random_range(0..n);
        for i in 0..self.words.len() {
            let mut bits = masked(i);
            let c = bits.count_ones() as usize;
            if r < c {
                for _ in 0..r {
                    bits &= bits - 1;
                }
                return Some(i * 64 + bits.trailing_zeros() as usize);
            }
            r -= c;
        }
        None
    }

    pub fn is_subset(&self, other: &IdSet) -> bool {
        self.words
            .iter()
            .enumerate()
            .all(|(i, w)| w & !other.words.get(i).copied().unwrap_or(0) == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// The `n`-th smallest element (0-based).
    pub fn nth(&self, mut n: usize) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate() {
            let c = w.count_ones() as usize;
            if n < c {
                let mut bits = w;
                for _ in 0..n {
                    bits &= bits - 1;
                }
                return Some(wi * 64 + bits.trailing_zeros() as usize);
            }
            n -= c;
        }
        None
    }

    /// Uniformly random element, or `None` when empty.
    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        let n = self.len();
        if n == 0 {
            return None;
        }
        self.nth(rng.random_range(0..n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_ops() {
        let mut s = IdSet::new(130);
        assert!(s.insert(0));
        assert!(s.insert(129));
        assert!(!s.insert(129));
        assert_eq!(s.len(), 2);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 129]);
        assert_eq!(s.nth(1), Some(129));
        assert_eq!(s.nth(2), None);
        s.remove(0);
        assert!(!s.contains(0));
    }

    proptest! {
        #[test]
        fn difference_matches_btreeset(a in proptest::collection::btree_set(0usize..200, 0..60),
                                       b in proptest::collection::btree_set(0usize..200, 0..60)) {
            let sa = IdSet::from_ids(200, a.iter().copied());
            let sb0 = IdSet::from_ids(200, b.iter().copied());
            prop_assert_eq!(sa.difference_iter(&sb0).collect::<Vec<_>>(), sa.difference(&sb0).iter().collect::<Vec<_>>());
            let sb = IdSet::from_ids(200, b.iter().copied());
            let d: Vec<usize> = sa.difference(&sb).iter().collect();
            let expect: Vec<usize> = a.difference(&b).copied().collect();
            prop_assert_eq!(d, expect);
            prop_assert_eq!(sa.is_subset(&sb), a.is_subset(&b));
        }
    }
}
