//! Sparse-table range minimum over a static array.

#[derive(Debug, Clone, Default)]
pub struct SparseMin {
    /// `levels[k][i]` is the minimum of `values[i..i + 2^k]`.
    levels: Vec<Vec<u32>>,
}

impl SparseMin {
    pub fn new(values: Vec<u32>) -> Self {
        let n = values.len();
        let mut levels = vec![values];
        let mut width = 1;
        while width * 2 <= n {
            let prev = levels.last().unwrap();
            let next: Vec<u32> = (0..=n - width * 2)
                .map(|i| prev[i].min(prev[i + width]))
                .collect();
            levels.push(next);
            width *= 2;
        }
        SparseMin { levels }
    }

    pub fn len(&self) -> usize {
        self.levels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels[0].is_empty()
    }

    pub fn get(&self, i: usize) -> u32 {
        self.levels[0][i]
    }

    /// Minimum of `values[lo..=hi]`. Panics if the range is empty or out of bounds.
    #[inline]
    pub fn min(&self, lo: usize, hi: usize) -> u32 {
        assert!(lo <= hi && hi < self.len(), "bad range {lo}..={hi}");
        let k = (usize::BITS - 1 - (hi - lo + 1).leading_zeros()) as usize;
        let level = &self.levels[k];
        level[lo].min(level[hi + 1 - (1 << k)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_arrays() {
        let t = SparseMin::new(vec![5, 3, 8, 1, 9, 2]);
        assert_eq!(t.min(0, 0), 5);
        assert_eq!(t.min(0, 5), 1);
        assert_eq!(t.min(4, 5), 2);
        assert_eq!(t.min(0, 2), 3);
        assert!(SparseMin::new(vec![]).is_empty());
    }

    proptest! {
        #[test]
        fn matches_linear_scan(values in prop::collection::vec(0u32..1000, 1..200), a in any::<usize>(), b in any::<usize>()) {
            let t = SparseMin::new(values.clone());
            let (lo, hi) = { let (x, y) = (a % values.len(), b % values.len()); (x.min(y), x.max(y)) };
            prop_assert_eq!(t.min(lo, hi), *values[lo..=hi].iter().min().unwrap());
        }
    }
}
