//! Uniform (Cantor-tree) sets and the surgery performed on them: uniform extraction,
//! collapsing, separation pruning, interval extension and low/high classification.

mod intervals;
mod numerology;
mod profile;
mod surgery;

pub use intervals::{
    audit_branching_floor, audit_lemma5, classify_low_high, extend_intervals, lift_intervals,
    prune_separation_2, trivial_intervals, Interval, IntervalFamily, Pruned, Tag,
};
pub use numerology::{numerology_scan, NumerologyReport};
pub use profile::BranchingProfile;
pub use surgery::{collapse, prune_separation_1, separation_violations, uniformize};

use crate::dyadic::DeltaSet;
use crate::error::{Error, Result};
use crate::params::{exact, lt_pow2};

/// Child counts of every level-`s` parent, as `(parent prefix, [child prefixes])`.
pub(crate) fn children_at(idx: &[u64], n: u32, m: u32, s: usize) -> Vec<(u64, Vec<u64>)> {
    let ps = n - m * s as u32;
    let cs = n - m * (s as u32 + 1);
    let mut out: Vec<(u64, Vec<u64>)> = Vec::new();
    for &k in idx {
        let (p, c) = (k >> ps, k >> cs);
        match out.last_mut() {
            Some((lp, kids)) if *lp == p => {
                if kids.last() != Some(&c) {
                    kids.push(c);
                }
            }
            _ => out.push((p, vec![c])),
        }
    }
    out
}

pub(crate) fn check_tree_shape(a: &DeltaSet, m: u32, levels: usize) -> Result<()> {
    if a.n() != m * levels as u32 {
        return Err(Error::ScaleMismatch(a.n(), m * levels as u32));
    }
    if a.is_empty() {
        return Err(Error::Empty("uniform sets are nonempty"));
    }
    if a.indices().last().copied().unwrap_or(0) >> a.n() != 0 {
        return Err(Error::Precondition("tree sets live in [0, 1)".into()));
    }
    Ok(())
}

/// The branching profile of `A` if every level-`s` parent has the same number of children.
pub fn is_uniform(a: &DeltaSet, m: u32, levels: usize) -> Result<Option<BranchingProfile>> {
    check_tree_shape(a, m, levels)?;
    let mut r = Vec::with_capacity(levels);
    for s in 0..levels {
        let groups = children_at(a.indices(), a.n(), m, s);
        let c = groups[0].1.len();
        if groups.iter().any(|(_, kids)| kids.len() != c) {
            return Ok(None);
        }
        r.push(c as u64);
    }
    Ok(Some(BranchingProfile::new(m, r)?))
}

/// Levels where `R_B(s) > 1` but `R_A(s) < 2^((1-η) m)`.
pub fn polarisation_check(
    profile_a: &BranchingProfile,
    profile_b: &BranchingProfile,
    eta: f64,
) -> Result<(bool, Vec<usize>)> {
    if profile_a.levels() != profile_b.levels() || profile_a.m() != profile_b.m() {
        return Err(Error::Precondition("profiles must share m and N".into()));
    }
    let e = (exact(1.0) - exact(eta)) * profile_a.m() as i64;
    let bad: Vec<usize> = (0..profile_a.levels())
        .filter(|&s| profile_b.get(s) > 1 && lt_pow2(profile_a.get(s) as u128, &e))
        .collect();
    Ok((bad.is_empty(), bad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{gen_uniform_tree, Placement};
    use crate::params::ScaleSpec;

    #[test]
    fn uniformity_examples() {
        let full = DeltaSet::full(6).unwrap();
        assert_eq!(is_uniform(&full, 2, 3).unwrap().unwrap().r(), &[4, 4, 4]);
        let a = DeltaSet::new(2, 1, vec![0, 1, 3]).unwrap();
        assert_eq!(is_uniform(&a, 1, 2).unwrap(), None);
        assert!(is_uniform(&a, 2, 2).is_err());
        let spec = ScaleSpec::new(2, 1, 4).unwrap();
        let p = BranchingProfile::new(2, vec![3, 1, 2, 4]).unwrap();
        for seed in 0..20 {
            let t = gen_uniform_tree(&spec, &p, Placement::Random(seed)).unwrap();
            assert_eq!(is_uniform(&t, 2, 4).unwrap().as_ref(), Some(&p));
        }
    }

    #[test]
    fn polarisation_examples() {
        let ones = BranchingProfile::constant(3, 4, 1).unwrap();
        let full = BranchingProfile::constant(3, 4, 8).unwrap();
        let some = BranchingProfile::new(3, vec![2, 5, 1, 3]).unwrap();
        assert_eq!(polarisation_check(&some, &ones, 0.1).unwrap(), (true, vec![]));
        assert_eq!(polarisation_check(&full, &full, 0.01).unwrap(), (true, vec![]));
        // B full everywhere; A = 8 except a planted violation at level 2
        let a = BranchingProfile::new(3, vec![8, 8, 4, 8]).unwrap();
        assert_eq!(polarisation_check(&a, &full, 0.1).unwrap(), (false, vec![2]));
        // 2^(3 * 2/3) = 4 exactly: not a violation at eta = 1/3
        assert_eq!(polarisation_check(&a, &full, 1.0 / 3.0).unwrap().0, true);
    }
}
