use serde::{Deserialize, Serialize};

use super::DeltaSet;
use crate::error::{Error, Result};

/// Worst non-concentration ratio `|A ∩ B(x,r)| / (r^κ |A|)` over sampled balls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrostmanReport {
    pub exponent_kappa: f64,
    /// Radii run over `2^-j` for `r_max_exp <= j <= r_min_exp`.
    pub r_min_exp: u32,
    pub r_max_exp: u32,
    pub worst_ratio: f64,
    /// Center index and radius exponent of the worst ball.
    pub witness: (u64, u32),
}

impl FrostmanReport {
    pub fn holds(&self, constant: f64) -> bool {
        self.worst_ratio <= constant
    }
}

/// Evaluates the Frostman ratio on closed balls centred at points of `A`
/// with dyadic radii `2^-j`, `r_max_exp <= j <= r_min_exp`.
pub fn frostman_check(
    a: &DeltaSet,
    kappa: f64,
    r_min_exp: u32,
    r_max_exp: u32,
) -> Result<FrostmanReport> {
    if a.is_empty() {
        return Err(Error::Empty("frostman_check needs a nonempty set"));
    }
    if r_min_exp < r_max_exp || r_min_exp > a.n() {
        return Err(Error::Precondition(format!(
            "need r_max_exp <= r_min_exp <= n, got {r_max_exp}, {r_min_exp}, n = {}",
            a.n()
        )));
    }
    let idx = a.indices();
    let total = idx.len() as f64;
    let mut worst = (f64::NEG_INFINITY, (idx[0], r_min_exp));
    for j in r_max_exp..=r_min_exp {
        let rad = 1u64 << (a.n() - j);
        let scale = (j as f64 * kappa).exp2() / total;
        // sliding window over sorted centres
        let (mut lo, mut hi) = (0usize, 0usize);
        for &x in idx {
            while idx[lo] + rad < x {
                lo += 1;
            }
            while hi < idx.len() && idx[hi] <= x + rad {
                hi += 1;
            }
            let ratio = (hi - lo) as f64 * scale;
            if ratio > worst.0 {
                worst = (ratio, (x, j));
            }
        }
    }
    Ok(FrostmanReport {
        exponent_kappa: kappa,
        r_min_exp,
        r_max_exp,
        worst_ratio: worst.0,
        witness: worst.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_grid_ratio_at_most_three() {
        let n = 8;
        let a = DeltaSet::full(n).unwrap();
        let rep = frostman_check(&a, 1.0, n, 0).unwrap();
        assert!(rep.worst_ratio <= 3.0, "{rep:?}");
        // oracle: interior ball of radius 2^-j holds 2^(n-j+1)+1 points
        let j = 3;
        let expect = ((1u64 << (n - j + 1)) + 1) as f64 / ((1u64 << n) as f64 / 8.0);
        let rep = frostman_check(&a, 1.0, j, j).unwrap();
        assert!((rep.worst_ratio - expect).abs() < 1e-12);
    }

    #[test]
    fn atom_fails() {
        let n = 10;
        let a = DeltaSet::new(n, 1, vec![300]).unwrap();
        let rep = frostman_check(&a, 0.5, n, n).unwrap();
        assert!((rep.worst_ratio - 32.0).abs() < 1e-12);
        assert!(!rep.holds(3.0));
    }

    #[test]
    fn sqrt_ap_is_half_regular() {
        let n = 12;
        let a = DeltaSet::new(n, 1, (0..64).map(|i| i * 64).collect()).unwrap();
        let rep = frostman_check(&a, 0.5, n, 0).unwrap();
        assert!(rep.worst_ratio <= 3.0, "{rep:?}");
    }

    #[test]
    fn bad_input() {
        let a = DeltaSet::new(4, 1, vec![]).unwrap();
        assert!(frostman_check(&a, 1.0, 4, 0).is_err());
        let a = DeltaSet::new(4, 1, vec![1]).unwrap();
        assert!(frostman_check(&a, 1.0, 1, 2).is_err());
        assert!(frostman_check(&a, 1.0, 5, 0).is_err());
    }
}
