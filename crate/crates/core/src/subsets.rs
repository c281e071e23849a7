//! Lexicographic enumeration of fixed-size subsets.

/// Default limit on the number of subsets any exhaustive routine will visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 2_000_000;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Streams the `k`-subsets of `pool` in lexicographic order of positions.
///
/// ```
/// use chanelim::subsets::Combinations;
/// let mut c = Combinations::new(vec![3, 5, 7], 2);
/// let mut seen = Vec::new();
/// while let Some(s) = c.next_subset() {
///     seen.push(s.to_vec());
/// }
/// assert_eq!(seen, vec![vec![3, 5], vec![3, 7], vec![5, 7]]);
/// ```
pub struct Combinations {
    pool: Vec<usize>,
    pos: Vec<usize>,
    current: Vec<usize>,
    started: bool,
    done: bool,
}

impl Combinations {
    pub fn new(pool: Vec<usize>, k: usize) -> Self {
        let done = k > pool.len();
        Self {
            pos: (0..k).collect(),
            current: Vec::with_capacity(k),
            pool,
            started: false,
            done,
        }
    }

    pub fn next_subset(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if self.started {
            let n = self.pool.len();
            let k = self.pos.len();
            let mut i = k;
            loop {
                if i == 0 {
                    self.done = true;
                    return None;
                }
                i -= 1;
                if self.pos[i] < n - k + i {
                    break;
                }
            }
            self.pos[i] += 1;
            for j in i + 1..k {
                self.pos[j] = self.pos[j - 1] + 1;
            }
        }
        self.started = true;
        self.current.clear();
        self.current.extend(self.pos.iter().map(|&p| self.pool[p]));
        Some(&self.current)
    }
}
