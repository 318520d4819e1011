use super::{Bits, DeltaSet};
use crate::error::{Error, Result};
use crate::params::Dyadic;

/// Default cap on the domain width of iterated sums.
pub const DEFAULT_MAX_WIDTH: u64 = 1 << 12;

/// Cells hit by `{a + c b}`: index `k_a + floor(c k_b)`.
///
/// `c` must be a non-negative dyadic `p/2^q` with `q <= n` and `c <= 1`.
pub fn sumset(a: &DeltaSet, c: Dyadic, b: &DeltaSet) -> Result<DeltaSet> {
    if a.n() != b.n() {
        return Err(Error::ScaleMismatch(a.n(), b.n()));
    }
    c.check(a.n())?;
    if c.is_negative() {
        return Err(Error::Precondition(
            "grid sets live in [0, W); use a non-negative coefficient".into(),
        ));
    }
    let n = a.n();
    let shifts = shifts(c, b);
    if a.is_empty() || shifts.is_empty() {
        return DeltaSet::new(n, a.width().max(b.width()), vec![]);
    }
    let max = a.indices().last().unwrap() + shifts.last().unwrap();
    let width = a.width().max((max >> n) + 1);
    let words = (max as usize + 1).div_ceil(64);
    let indices = if a.len() * 4 < words {
        let mut out = Vec::with_capacity(a.len() * shifts.len());
        for &s in &shifts {
            out.extend(a.indices().iter().map(|k| k + s));
        }
        out.sort_unstable();
        out.dedup();
        out
    } else {
        let kernel = SumsetKernel::new(a);
        let mut buf = Bits::zeros(max as usize + 1);
        kernel.fill(&shifts, &mut buf);
        buf.iter_ones().collect()
    };
    DeltaSet::new(n, width, indices)
}

/// Distinct shifts `floor(c k_b)` in increasing order (for `c >= 0`).
pub(crate) fn shifts(c: Dyadic, b: &DeltaSet) -> Vec<u64> {
    let mut s: Vec<u64> = b
        .indices()
        .iter()
        .map(|&k| c.floor_mul(k as i64) as u64)
        .collect();
    s.dedup();
    s
}

/// Reusable bitset of `A` for counting `|A + cB|` over many coefficients.
#[derive(Clone, Debug)]
pub struct SumsetKernel {
    bits: Bits,
    max_index: u64,
}

impl SumsetKernel {
    pub fn new(a: &DeltaSet) -> Self {
        let max_index = a.indices().last().copied().unwrap_or(0);
        SumsetKernel {
            bits: Bits::from_indices(max_index as usize + 1, a.indices()),
            max_index,
        }
    }

    fn fill(&self, shifts: &[u64], buf: &mut Bits) {
        for &s in shifts {
            buf.or_shifted(&self.bits, s as usize);
        }
    }

    /// `|A + cB|_δ` without materialising the set.
    pub fn count(&self, c: Dyadic, b: &DeltaSet) -> usize {
        let shifts = shifts(c, b);
        match shifts.last() {
            None => 0,
            Some(&last) => {
                let mut buf = Bits::zeros((self.max_index + last) as usize + 1);
                self.fill(&shifts, &mut buf);
                buf.count_ones()
            }
        }
    }
}

/// `kB` at fixed resolution with the default width cap.
pub fn iterated_sum(b: &DeltaSet, k: u64) -> Result<DeltaSet> {
    iterated_sum_with_limit(b, k, DEFAULT_MAX_WIDTH)
}

/// `kB = B + ... + B` (k summands), each partial sum snapped to the grid.
pub fn iterated_sum_with_limit(b: &DeltaSet, k: u64, max_width: u64) -> Result<DeltaSet> {
    if k == 0 {
        return Err(Error::OutOfRange {
            what: "k",
            value: 0,
            range: "[1, inf)".into(),
        });
    }
    let need = k.checked_mul(b.width()).ok_or(Error::Overflow("iterated_sum width"))?;
    if need > max_width {
        return Err(Error::WidthOverflow {
            width: need,
            limit: max_width,
        });
    }
    // binary doubling: sums of grid sets with c = 1 are exact, hence associative
    let one = Dyadic::one();
    let mut acc: Option<DeltaSet> = None;
    let mut power = b.clone();
    let mut rest = k;
    loop {
        if rest & 1 == 1 {
            acc = Some(match acc {
                None => power.clone(),
                Some(x) => sumset(&x, one, &power)?,
            });
        }
        rest >>= 1;
        if rest == 0 {
            break;
        }
        power = sumset(&power, one, &power)?;
    }
    let out = acc.expect("k >= 1");
    // report the nominal width k*W so that kB ⊂ [0, kW)
    let width = out.width().max(need);
    out.with_width(width)
}
