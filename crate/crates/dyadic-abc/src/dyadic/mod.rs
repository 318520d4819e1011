//! Grid sets `A ⊂ (δZ) ∩ [0, W)` with `δ = 2^-n`, stored as sorted integer indices.

mod bitset;
mod frostman;
mod generate;
mod sumset;

pub use bitset::Bits;
pub use frostman::{frostman_check, FrostmanReport};
pub use generate::{
    gen_ap, gen_example_form87, gen_random, gen_regular_tree, gen_uniform_tree, Placement,
};
pub use sumset::{iterated_sum, iterated_sum_with_limit, sumset, SumsetKernel, DEFAULT_MAX_WIDTH};

use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported resolution exponent.
pub const MAX_N: u32 = 56;

/// A finite subset of the grid `2^-n Z` inside `[0, W)`.
///
/// Index `k` stands for the point `k * 2^-n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeltaSet {
    n: u32,
    width: u64,
    indices: Vec<u64>,
}

impl DeltaSet {
    /// Builds a set from strictly increasing indices.
    pub fn new(n: u32, width: u64, indices: Vec<u64>) -> Result<Self> {
        check_scale(n, width)?;
        let limit = width << n;
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition("indices must be strictly increasing".into()));
        }
        if let Some(&last) = indices.last() {
            if last >= limit {
                return Err(Error::OutOfRange {
                    what: "index",
                    value: last as i64,
                    range: format!("[0, {limit})"),
                });
            }
        }
        Ok(DeltaSet { n, width, indices })
    }

    /// Builds a set from arbitrary indices, sorting and removing duplicates.
    pub fn from_unsorted(n: u32, width: u64, mut indices: Vec<u64>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        DeltaSet::new(n, width, indices)
    }

    /// Smallest width holding the given indices.
    pub fn fitting(n: u32, indices: Vec<u64>) -> Result<Self> {
        let max = indices.iter().copied().max().unwrap_or(0);
        let width = (max >> n) + 1;
        DeltaSet::from_unsorted(n, width, indices)
    }

    /// The full grid `{0, ..., 2^n - 1}`.
    pub fn full(n: u32) -> Result<Self> {
        check_scale(n, 1)?;
        DeltaSet::new(n, 1, (0..1u64 << n).collect())
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    /// Exclusive upper bound on indices, `W * 2^n`.
    pub fn limit(&self) -> u64 {
        self.width << self.n
    }

    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, k: u64) -> bool {
        self.indices.binary_search(&k).is_ok()
    }

    pub fn point(&self, i: usize) -> f64 {
        self.indices[i] as f64 / (self.n as f64).exp2()
    }

    /// `log2 |A| / n`, the size exponent at this resolution.
    pub fn exponent(&self) -> f64 {
        (self.len() as f64).log2() / self.n as f64
    }

    /// The same points viewed in a wider domain.
    pub fn with_width(&self, width: u64) -> Result<Self> {
        DeltaSet::new(self.n, width, self.indices.clone())
    }

    /// Translates by `t` grid steps, widening the domain as needed.
    pub fn translate(&self, t: u64) -> Result<Self> {
        let idx: Vec<u64> = self.indices.iter().map(|k| k + t).collect();
        let max = idx.last().copied().unwrap_or(0);
        let width = self.width.max((max >> self.n) + 1);
        DeltaSet::new(self.n, width, idx)
    }

    pub fn to_bits(&self) -> Bits {
        Bits::from_indices(self.limit() as usize, &self.indices)
    }

    /// Number of dyadic cells of side `2^-r_exp` meeting the set.
    pub fn covering_number(&self, r_exp: u32) -> Result<usize> {
        if r_exp > self.n {
            return Err(Error::OutOfRange {
                what: "r_exp",
                value: r_exp as i64,
                range: format!("[0, {}]", self.n),
            });
        }
        let shift = self.n - r_exp;
        let mut count = 0;
        let mut last = None;
        for &k in &self.indices {
            let cell = k >> shift;
            if last != Some(cell) {
                count += 1;
                last = Some(cell);
            }
        }
        Ok(count)
    }

    /// Distinct cells at level `j`, in increasing order.
    pub fn cells(&self, j: u32) -> Vec<u64> {
        let shift = self.n - j.min(self.n);
        let mut out: Vec<u64> = self.indices.iter().map(|k| k >> shift).collect();
        out.dedup();
        out
    }

    /// Points of the set lying in the level-`j` cell `cell`.
    pub fn restrict_to_cell(&self, j: u32, cell: u64) -> &[u64] {
        let shift = self.n - j;
        let lo = cell << shift;
        let hi = (cell + 1) << shift;
        let a = self.indices.partition_point(|&k| k < lo);
        let b = self.indices.partition_point(|&k| k < hi);
        &self.indices[a..b]
    }

    /// Writes the text format: a header `n=<int> W=<int>`, then one index per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("n={} W={}\n", self.n, self.width);
        for k in &self.indices {
            let _ = writeln!(s, "{k}");
        }
        s
    }

    /// Parses the text format written by [`DeltaSet::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        DeltaSet::read(text.as_bytes())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = loop {
            match lines.next() {
                Some(line) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => return Err(Error::Parse("missing header".into())),
            }
        };
        let (mut n, mut w) = (None, None);
        for tok in header.split_whitespace() {
            match tok.split_once('=') {
                Some(("n", v)) => n = v.parse::<u32>().ok(),
                Some(("W", v)) => w = v.parse::<u64>().ok(),
                _ => return Err(Error::Parse(format!("bad header token {tok:?}"))),
            }
        }
        let (n, w) = match (n, w) {
            (Some(n), Some(w)) => (n, w),
            _ => return Err(Error::Parse(format!("bad header {header:?}"))),
        };
        let mut indices = Vec::new();
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            indices.push(
                t.parse::<u64>()
                    .map_err(|_| Error::Parse(format!("bad index {t:?}")))?,
            );
        }
        DeltaSet::new(n, w, indices)
    }
}

fn check_scale(n: u32, width: u64) -> Result<()> {
    if n > MAX_N {
        return Err(Error::OutOfRange {
            what: "n",
            value: n as i64,
            range: format!("[0, {MAX_N}]"),
        });
    }
    if width == 0 || width.leading_zeros() <= n + 1 {
        return Err(Error::OutOfRange {
            what: "W",
            value: width as i64,
            range: format!("[1, 2^{})", 62 - n),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covering_examples() {
        let full = DeltaSet::full(5).unwrap();
        assert_eq!(full.covering_number(5).unwrap(), 32);
        let single = DeltaSet::new(10, 1, vec![700]).unwrap();
        for r in 0..=10 {
            assert_eq!(single.covering_number(r).unwrap(), 1);
        }
        // 0, 0.3, 0.31 at n = 10
        let a = DeltaSet::new(10, 1, vec![0, 307, 317]).unwrap();
        assert_eq!(a.covering_number(2).unwrap(), 2);
        assert!(a.covering_number(11).is_err());
    }

    #[test]
    fn invariants_checked() {
        assert!(DeltaSet::new(3, 1, vec![1, 1]).is_err());
        assert!(DeltaSet::new(3, 1, vec![8]).is_err());
        assert!(DeltaSet::new(3, 2, vec![8]).is_ok());
        assert!(DeltaSet::new(3, 0, vec![]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let a = DeltaSet::new(6, 3, vec![0, 5, 64, 190]).unwrap();
        let t = a.to_text();
        assert_eq!(t, "n=6 W=3\n0\n5\n64\n190\n");
        let b = DeltaSet::from_text(&t).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.to_text(), t);
        assert!(DeltaSet::from_text("n=3\n1\n").is_err());
        assert!(DeltaSet::from_text("n=3 W=1\n2\n1\n").is_err());
    }

    #[test]
    fn restrict_and_cells() {
        let a = DeltaSet::new(4, 1, vec![1, 2, 9, 15]).unwrap();
        assert_eq!(a.cells(1), vec![0, 1]);
        assert_eq!(a.restrict_to_cell(1, 1), &[9, 15]);
        assert_eq!(a.restrict_to_cell(2, 1), &[] as &[u64]);
    }
}
