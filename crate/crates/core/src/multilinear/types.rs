//! Type vectors (occurrence counts of asset indices) and a dense ranking of
//! all types with a fixed total.

use std::fmt;

/// Occurrence counts `(n_1, ..., n_m)` of each asset index in a tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeVector(Vec<usize>);

impl TypeVector {
    pub fn new(counts: Vec<usize>) -> Self {
        assert!(!counts.is_empty(), "type vector needs at least one asset");
        Self(counts)
    }

    /// The type of an index tuple over `assets` assets.
    pub fn of_tuple(tuple: &[usize], assets: usize) -> Self {
        let mut counts = vec![0; assets];
        for &j in tuple {
            counts[j] += 1;
        }
        Self(counts)
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn assets(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for TypeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

/// `C(total + parts - 1, parts - 1)`, or `None` on overflow.
pub fn type_class_count(total: usize, parts: usize) -> Option<u64> {
    if parts == 0 {
        return Some(u64::from(total == 0));
    }
    let k = (parts - 1) as u128;
    let n = (total + parts - 1) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    u64::try_from(acc).ok()
}

/// Enumerates and ranks all compositions of `total` into `parts` nonnegative
/// parts, in lexicographic order of the leading `parts - 1` entries.
#[derive(Debug, Clone)]
pub struct TypeIndexer {
    total: usize,
    parts: usize,
    /// `counts[p][r]` = number of compositions of `r` into `p` parts, `p <= parts`.
    counts: Vec<Vec<usize>>,
}

impl TypeIndexer {
    pub fn new(total: usize, parts: usize) -> Self {
        assert!(parts > 0);
        let mut counts = vec![vec![0usize; total + 1]; parts + 1];
        counts[0][0] = 1;
        for p in 1..=parts {
            let mut running = 0usize;
            for r in 0..=total {
                running = running.saturating_add(counts[p - 1][r]);
                counts[p][r] = running;
            }
        }
        Self { total, parts, counts }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn parts(&self) -> usize {
        self.parts
    }

    pub fn len(&self) -> usize {
        self.counts[self.parts][self.total]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of `counts` in [`TypeIndexer::iter`] order.
    pub fn rank(&self, counts: &[usize]) -> usize {
        debug_assert_eq!(counts.len(), self.parts);
        debug_assert_eq!(counts.iter().sum::<usize>(), self.total);
        let mut remaining = self.total;
        let mut rank = 0;
        for (i, &n) in counts[..self.parts - 1].iter().enumerate() {
            let tail = self.parts - i;
            // compositions of `remaining` into `tail` parts whose first part is below n
            rank += self.counts[tail][remaining] - self.counts[tail][remaining - n];
            remaining -= n;
        }
        rank
    }

    pub fn iter(&self) -> TypeIter {
        let mut first = vec![0; self.parts];
        first[self.parts - 1] = self.total;
        TypeIter {
            next: Some(first),
        }
    }
}

/// Iterator over compositions in rank order.
#[derive(Debug, Clone)]
pub struct TypeIter {
    next: Option<Vec<usize>>,
}

impl Iterator for TypeIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let parts = current.len();
        let mut following = current.clone();
        let mut tail = following[parts - 1];
        let mut j = parts - 1;
        while j > 0 {
            j -= 1;
            if tail > 0 {
                following[j] += 1;
                following[parts - 1] = tail - 1;
                self.next = Some(following);
                return Some(current);
            }
            tail += following[j];
            following[j] = 0;
        }
        Some(current)
    }
}

/// Iterates over every tuple in `{0..assets}^len` in lexicographic order,
/// calling `visit` with the tuple.
pub fn for_each_tuple(len: usize, assets: usize, mut visit: impl FnMut(&[usize])) {
    let mut tuple = vec![0usize; len];
    loop {
        visit(&tuple);
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            tuple[i] += 1;
            if tuple[i] < assets {
                break;
            }
            tuple[i] = 0;
        }
    }
}
