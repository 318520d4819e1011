//! Fixed-length bitsets with shifted OR, the workhorse of sumset cardinalities.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_indices(len: usize, indices: &[u64]) -> Self {
        let mut b = Bits::zeros(len);
        for &k in indices {
            b.set(k as usize);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `self |= src << shift`; bits pushed past `len` are dropped.
    pub fn or_shifted(&mut self, src: &Bits, shift: usize) {
        let ws = shift / 64;
        let bs = shift % 64;
        let n = self.words.len();
        if ws >= n {
            return;
        }
        let limit = (n - ws).min(src.words.len());
        if bs == 0 {
            for (d, s) in self.words[ws..ws + limit].iter_mut().zip(&src.words[..limit]) {
                *d |= s;
            }
        } else {
            let mut carry = 0u64;
            for i in 0..limit {
                let w = src.words[i];
                self.words[ws + i] |= (w << bs) | carry;
                carry = w >> (64 - bs);
            }
            if ws + limit < n {
                self.words[ws + limit] |= carry;
            }
        }
        self.trim();
    }

    fn trim(&mut self) {
        let extra = self.words.len() * 64 - self.len;
        if extra > 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= u64::MAX >> extra;
            }
        }
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as u64;
                    w &= w - 1;
                    Some(wi as u64 * 64 + t)
                }
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_or_matches_naive() {
        let src = Bits::from_indices(200, &[0, 1, 63, 64, 130, 199]);
        for shift in [0usize, 1, 5, 63, 64, 65, 127, 150, 199, 200, 300] {
            let mut dst = Bits::zeros(260);
            dst.or_shifted(&src, shift);
            let got: Vec<u64> = dst.iter_ones().collect();
            let want: Vec<u64> = [0u64, 1, 63, 64, 130, 199]
                .iter()
                .map(|k| k + shift as u64)
                .filter(|&k| k < 260)
                .collect();
            assert_eq!(got, want, "shift {shift}");
        }
    }
}
