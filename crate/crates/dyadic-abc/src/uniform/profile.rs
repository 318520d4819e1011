use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::exact;

/// Branching numbers `R(0), ..., R(N-1)` of an `(m, N)`-uniform set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct BranchingProfile {
    m: u32,
    r: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawProfile {
    m: u32,
    #[serde(rename = "R")]
    r: Vec<u64>,
}

impl TryFrom<RawProfile> for BranchingProfile {
    type Error = Error;
    fn try_from(raw: RawProfile) -> Result<Self> {
        BranchingProfile::new(raw.m, raw.r)
    }
}

impl From<BranchingProfile> for RawProfile {
    fn from(p: BranchingProfile) -> Self {
        RawProfile { m: p.m, r: p.r }
    }
}

impl BranchingProfile {
    pub fn new(m: u32, r: Vec<u64>) -> Result<Self> {
        if m == 0 || m > 62 {
            return Err(Error::InvalidProfile(format!("m = {m} not in [1, 62]")));
        }
        if let Some((s, &v)) = r.iter().enumerate().find(|(_, &v)| v == 0 || v > 1 << m) {
            return Err(Error::InvalidProfile(format!(
                "R({s}) = {v} not in [1, 2^{m}]"
            )));
        }
        if m as u64 * r.len() as u64 > 62 {
            return Err(Error::InvalidProfile("m * N must be at most 62".into()));
        }
        Ok(BranchingProfile { m, r })
    }

    /// `R(s) = 2^(floor(κ m (s+1)) - floor(κ m s))`: a κ-regular tree.
    pub fn regular(m: u32, levels: usize, kappa: f64) -> Result<Self> {
        let k = exact(kappa);
        let fl = |s: usize| (k * (m as i64 * s as i64)).floor().to_integer();
        let r = (0..levels)
            .map(|s| 1u64 << (fl(s + 1) - fl(s)).clamp(0, m as i64))
            .collect();
        BranchingProfile::new(m, r)
    }

    /// Constant branching `R(s) = r` on every level.
    pub fn constant(m: u32, levels: usize, r: u64) -> Result<Self> {
        BranchingProfile::new(m, vec![r; levels])
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn levels(&self) -> usize {
        self.r.len()
    }

    pub fn r(&self) -> &[u64] {
        &self.r
    }

    pub fn get(&self, s: usize) -> u64 {
        self.r[s]
    }

    /// Resolution exponent `m N` of the described set.
    pub fn n(&self) -> u32 {
        self.m * self.r.len() as u32
    }

    /// Cardinality of the described set.
    pub fn product(&self) -> u128 {
        self.r.iter().map(|&v| v as u128).product()
    }

    /// `R(J) = ∏_{s ∈ J} R(s)` for `J = {lo, ..., hi}`.
    pub fn interval_product(&self, lo: usize, hi: usize) -> u128 {
        self.r[lo..=hi].iter().map(|&v| v as u128).product()
    }

    pub fn log2_product(&self) -> f64 {
        self.r.iter().map(|&v| (v as f64).log2()).sum()
    }

    /// Profile at scale `ell m`: `R^{ell m}(σ) = ∏_{s = ell σ}^{ell(σ+1)-1} R^m(s)`.
    pub fn aggregate(&self, ell: usize) -> Result<BranchingProfile> {
        if ell == 0 || self.levels() % ell != 0 {
            return Err(Error::Precondition(format!(
                "{} levels not divisible by ell = {ell}",
                self.levels()
            )));
        }
        let r = self
            .r
            .chunks(ell)
            .map(|c| c.iter().product::<u64>())
            .collect();
        BranchingProfile::new(self.m * ell as u32, r)
    }

    /// Copy with `R(s) = 1` on the given levels.
    pub fn collapsed(&self, levels: &[usize]) -> BranchingProfile {
        let mut r = self.r.clone();
        for &s in levels {
            r[s] = 1;
        }
        BranchingProfile { m: self.m, r }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let p = BranchingProfile::new(2, vec![4, 2, 1]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"m":2,"R":[4,2,1]}"#);
        let q: BranchingProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        assert!(serde_json::from_str::<BranchingProfile>(r#"{"m":2,"R":[5]}"#).is_err());
    }

    #[test]
    fn aggregation_matches_products() {
        let p = BranchingProfile::new(2, vec![4, 2, 1, 3, 1, 1]).unwrap();
        let q = p.aggregate(2).unwrap();
        assert_eq!(q.m(), 4);
        assert_eq!(q.r(), &[8, 3, 1]);
        assert_eq!(q.product(), p.product());
        assert!(p.aggregate(4).is_err());
    }

    #[test]
    fn regular_profiles() {
        let p = BranchingProfile::regular(4, 4, 0.5).unwrap();
        assert_eq!(p.r(), &[4, 4, 4, 4]);
        let p = BranchingProfile::regular(1, 10, 0.4).unwrap();
        assert_eq!(p.product(), 16);
        assert!(p.r().iter().all(|&v| v == 1 || v == 2));
    }
}
