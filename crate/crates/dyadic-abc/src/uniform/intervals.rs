use serde::{Deserialize, Serialize};

use super::{collapse, is_uniform, BranchingProfile};
use crate::dyadic::DeltaSet;
use crate::error::{Error, Result};
use crate::params::{exact, ge_pow2, le_pow2, Exponent};

/// Role of an interval of scales.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    /// Maximal run of trivial `B`-branching.
    #[serde(rename = "N_B")]
    NB,
    /// Extension stopped because `R_B >= 2^(ζ m |J|)`.
    #[serde(rename = "N_plus_case_a")]
    CaseA,
    /// Extension reached scale 0 first.
    #[serde(rename = "N_plus_case_b")]
    CaseB,
    #[serde(rename = "low")]
    Low,
    #[serde(rename = "high")]
    High,
    #[serde(rename = "useless")]
    Useless,
}

impl Tag {
    /// Intervals produced by case (a), before or after classification.
    pub fn is_plus(self) -> bool {
        matches!(self, Tag::CaseA | Tag::Low | Tag::High)
    }
}

/// Closed interval `{lo, ..., hi}` of scales.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: usize,
    pub hi: usize,
    pub tag: Tag,
}

impl Interval {
    pub fn new(lo: usize, hi: usize, tag: Tag) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi, tag }
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, s: usize) -> bool {
        self.lo <= s && s <= self.hi
    }
}

/// Pairwise disjoint tagged intervals, sorted by left end.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalFamily {
    pub intervals: Vec<Interval>,
}

impl IntervalFamily {
    pub fn new(mut intervals: Vec<Interval>) -> Result<Self> {
        intervals.sort_by_key(|i| i.lo);
        if intervals.iter().any(|i| i.lo > i.hi) {
            return Err(Error::Precondition("interval with lo > hi".into()));
        }
        if intervals.windows(2).any(|w| w[0].hi >= w[1].lo) {
            return Err(Error::Precondition("intervals overlap".into()));
        }
        Ok(IntervalFamily { intervals })
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Interval> {
        self.intervals.iter()
    }

    pub fn total_length(&self) -> usize {
        self.intervals.iter().map(Interval::len).sum()
    }

    /// Total length of intervals with the given tag.
    pub fn length_with(&self, tag: Tag) -> usize {
        self.intervals
            .iter()
            .filter(|i| i.tag == tag)
            .map(Interval::len)
            .sum()
    }

    pub fn with_tag(&self, tag: Tag) -> impl Iterator<Item = &Interval> {
        self.intervals.iter().filter(move |i| i.tag == tag)
    }

    /// The partition of `{0, ..., levels-1}` induced by the `Low` intervals:
    /// the low intervals themselves plus maximal complementary runs tagged `Useless`.
    pub fn low_partition(&self, levels: usize) -> Vec<Interval> {
        let mut out = Vec::new();
        let mut next = 0;
        for i in self.with_tag(Tag::Low) {
            if i.lo > next {
                out.push(Interval::new(next, i.lo - 1, Tag::Useless));
            }
            out.push(*i);
            next = i.hi + 1;
        }
        if next < levels {
            out.push(Interval::new(next, levels - 1, Tag::Useless));
        }
        out
    }
}

/// Maximal runs of levels with `R(σ) = 1`.
pub fn trivial_intervals(profile: &BranchingProfile) -> IntervalFamily {
    let mut out = Vec::new();
    let mut start = None;
    for (s, &r) in profile.r().iter().enumerate() {
        match (r == 1, start) {
            (true, None) => start = Some(s),
            (false, Some(lo)) => {
                out.push(Interval::new(lo, s - 1, Tag::NB));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(lo) = start {
        out.push(Interval::new(lo, profile.levels() - 1, Tag::NB));
    }
    IntervalFamily { intervals: out }
}

/// Maps each `{σ, ..., τ}` to `{ell σ, ..., ell(τ+1) - 1}`.
pub fn lift_intervals(family: &IntervalFamily, ell: usize) -> IntervalFamily {
    IntervalFamily {
        intervals: family
            .intervals
            .iter()
            .map(|i| Interval::new(ell * i.lo, ell * (i.hi + 1) - 1, i.tag))
            .collect(),
    }
}

/// Right-to-left extension of the lifted trivial intervals.
///
/// Each interval grows to the left one scale at a time until
/// `R_B(J) >= 2^(ζ m |J|)` (case a) or it contains scale 0 (case b). Earlier
/// intervals that the extension meets are contained in it and absorbed; an
/// interval that merely ends right before the extension's left end is disjoint
/// from it and gets its own extension.
pub fn extend_intervals(
    profile_b: &BranchingProfile,
    lifted: &IntervalFamily,
    zeta: f64,
    ell: usize,
) -> Result<IntervalFamily> {
    let z = exact(zeta);
    if z * (ell as i64) < Exponent::from_integer(1) {
        return Err(Error::Precondition(format!("ell * zeta = {ell} * {zeta} < 1")));
    }
    if lifted.intervals.iter().any(|i| i.hi >= profile_b.levels()) {
        return Err(Error::Precondition("interval beyond the profile".into()));
    }
    let m = profile_b.m() as i64;
    let mut out = Vec::new();
    let mut k = lifted.intervals.len();
    while k > 0 {
        let start = lifted.intervals[k - 1];
        let hi = start.hi;
        let mut lo = start.lo;
        let mut r = profile_b.interval_product(lo, hi);
        let tag = loop {
            let len = (hi - lo + 1) as i64;
            if ge_pow2(r, &(z * (m * len))) {
                break Tag::CaseA;
            }
            if lo == 0 {
                break Tag::CaseB;
            }
            lo -= 1;
            r *= profile_b.get(lo) as u128;
        };
        out.push(Interval::new(lo, hi, tag));
        // skip intervals meeting the extension
        while k > 0 && lifted.intervals[k - 1].hi >= lo {
            k -= 1;
        }
    }
    IntervalFamily::new(out)
}

/// Tags case-(a) intervals `Low` when `R_A(J) <= 2^(Γ m |J|)`, otherwise `High`.
pub fn classify_low_high(
    family: &IntervalFamily,
    profile_a: &BranchingProfile,
    gamma_cap: Exponent,
) -> IntervalFamily {
    let m = profile_a.m() as i64;
    let intervals = family
        .intervals
        .iter()
        .map(|i| {
            if !i.tag.is_plus() {
                return *i;
            }
            let r = profile_a.interval_product(i.lo, i.hi);
            let tag = if le_pow2(r, &(gamma_cap * (m * i.len() as i64))) {
                Tag::Low
            } else {
                Tag::High
            };
            Interval { tag, ..*i }
        })
        .collect();
    IntervalFamily { intervals }
}

/// Output of [`prune_separation_2`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pruned {
    pub set: DeltaSet,
    pub profile: BranchingProfile,
    /// The collapsed scales `S_ξ`.
    pub collapsed: Vec<usize>,
}

/// Number of uncollapsed scales at the left end of `J`: `ceil(ξ |J|)`.
fn kept_scales(xi: Exponent, len: usize) -> usize {
    (xi * len as i64).ceil().to_integer() as usize
}

/// Collapses, inside every case-(a) interval `J`, all but the leftmost `ceil(ξ|J|)` scales.
///
/// The collapsed right part `J_ξ` is a proper right sub-interval of a minimal
/// extension, so `R_B(J_ξ) < 2^(ζ m |J_ξ|)`; the surviving branching is then at least
/// `2^(ξ ζ m |J|)`, and distinct children of a level-`(t-r)` cell end up at distance
/// at least `(δ_J/Δ_J)^(2ξ) Δ_J` once the set is separated at every level.
pub fn prune_separation_2(
    b: &DeltaSet,
    family: &IntervalFamily,
    xi: f64,
    profile_b: &BranchingProfile,
) -> Result<Pruned> {
    let x = exact(xi);
    if is_uniform(b, profile_b.m(), profile_b.levels())?.as_ref() != Some(profile_b) {
        return Err(Error::Precondition("B must be uniform with the given profile".into()));
    }
    let mut levels = Vec::new();
    for i in family.iter().filter(|i| i.tag.is_plus()) {
        if x * (i.len() as i64) < Exponent::from_integer(1) {
            return Err(Error::Precondition(format!(
                "xi * |J| < 1 for J = {}..{}",
                i.lo, i.hi
            )));
        }
        let u = kept_scales(x, i.len());
        levels.extend(i.lo + u..=i.hi);
    }
    let (set, profile) = collapse(b, profile_b, &levels)?;
    Ok(Pruned {
        set,
        profile,
        collapsed: levels,
    })
}

/// Case-(a) intervals violating `R_B''(J) >= 2^(ξ ζ m |J|)`.
pub fn audit_branching_floor(
    profile: &BranchingProfile,
    family: &IntervalFamily,
    xi: f64,
    zeta: f64,
) -> Vec<Interval> {
    let e = exact(xi) * exact(zeta) * profile.m() as i64;
    family
        .iter()
        .filter(|i| i.tag.is_plus())
        .filter(|i| !ge_pow2(profile.interval_product(i.lo, i.hi), &(e * i.len() as i64)))
        .copied()
        .collect()
}

/// Pairs of level-`(t+1)` cells inside one level-`(t-r)` cell closer than
/// `(δ_J/Δ_J)^(2ξ) Δ_J`, reported as `(interval, left cell, right cell)`.
///
/// Distances are exact: cells `i < j` at level `L` are `(j - i - 1) 2^-(mL)` apart.
pub fn audit_lemma5(
    b: &DeltaSet,
    m: u32,
    family: &IntervalFamily,
    xi: f64,
) -> Vec<(Interval, u64, u64)> {
    let x = exact(xi);
    let mut bad = Vec::new();
    for i in family.iter().filter(|i| i.tag.is_plus()) {
        let fine = m * (i.hi as u32 + 1);
        let coarse = m * i.lo as u32;
        // (d - 1) >= 2^(m |J| (1 - 2ξ))
        let need = (Exponent::from_integer(1) - x * 2) * (m as i64 * i.len() as i64);
        let cells = b.cells(fine);
        for w in cells.windows(2) {
            let same_parent = w[0] >> (fine - coarse) == w[1] >> (fine - coarse);
            if same_parent && !ge_pow2((w[1] - w[0] - 1) as u128, &need) {
                bad.push((*i, w[0], w[1]));
            }
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uniform::prune_separation_1;

    fn fam(v: &[(usize, usize)]) -> Vec<(usize, usize)> {
        v.to_vec()
    }

    fn spans(f: &IntervalFamily) -> Vec<(usize, usize)> {
        f.iter().map(|i| (i.lo, i.hi)).collect()
    }

    #[test]
    fn trivial_and_lift() {
        let p = BranchingProfile::new(4, vec![16, 1, 1, 16, 1]).unwrap();
        assert_eq!(spans(&trivial_intervals(&p)), fam(&[(1, 2), (4, 4)]));
        let ones = BranchingProfile::constant(4, 5, 1).unwrap();
        assert_eq!(spans(&trivial_intervals(&ones)), fam(&[(0, 4)]));
        let single = IntervalFamily::new(vec![Interval::new(0, 0, Tag::NB)]).unwrap();
        assert_eq!(spans(&lift_intervals(&single, 3)), fam(&[(0, 2)]));
        let all = IntervalFamily::new(vec![Interval::new(0, 4, Tag::NB)]).unwrap();
        assert_eq!(spans(&lift_intervals(&all, 3)), fam(&[(0, 14)]));
    }

    #[test]
    fn lifted_products_agree() {
        let fine = BranchingProfile::new(2, vec![4, 1, 2, 3, 1, 1, 1, 4, 2]).unwrap();
        let coarse = fine.aggregate(3).unwrap();
        for (lo, hi) in [(0, 0), (0, 2), (1, 2), (2, 2)] {
            let f = IntervalFamily::new(vec![Interval::new(lo, hi, Tag::NB)]).unwrap();
            let l = lift_intervals(&f, 3).intervals[0];
            assert_eq!(coarse.interval_product(lo, hi), fine.interval_product(l.lo, l.hi));
        }
    }

    #[test]
    fn extension_hand_trace() {
        // ell N = 6, m = 3, branching only at level 0
        let p = BranchingProfile::new(3, vec![8, 1, 1, 1, 1, 1]).unwrap();
        let lifted = IntervalFamily::new(vec![Interval::new(3, 5, Tag::NB)]).unwrap();
        // zeta = 1/3: need R >= 2^|J|; reaching level 0 gives 8 < 2^6 -> case (b)
        let e = extend_intervals(&p, &lifted, 1.0 / 3.0, 3).unwrap();
        assert_eq!(e.intervals, vec![Interval::new(0, 5, Tag::CaseB)]);
        // zeta = 1/2, ell = 2: 8 >= 2^(1.5 * 6) fails too; zeta = 1/6 at ell = 6
        let e = extend_intervals(&p, &lifted, 1.0 / 6.0, 6).unwrap();
        // at J = {0..5}: 8 >= 2^(0.5*6) = 8 -> case (a)
        assert_eq!(e.intervals, vec![Interval::new(0, 5, Tag::CaseA)]);
        assert!(extend_intervals(&p, &lifted, 0.1, 3).is_err());
        let all = IntervalFamily::new(vec![Interval::new(0, 5, Tag::NB)]).unwrap();
        let e = extend_intervals(&BranchingProfile::constant(3, 6, 1).unwrap(), &all, 0.5, 2)
            .unwrap();
        assert_eq!(e.intervals, vec![Interval::new(0, 5, Tag::CaseB)]);
    }

    #[test]
    fn extension_swallows_and_separates() {
        // levels: 0..3 trivial, 4 full, 5..7 trivial, 8 full, 9..11 trivial (m = 2)
        let mut r = vec![1u64; 12];
        r[4] = 4;
        r[8] = 4;
        let p = BranchingProfile::new(2, r).unwrap();
        let lifted = IntervalFamily::new(vec![
            Interval::new(0, 3, Tag::NB),
            Interval::new(5, 7, Tag::NB),
            Interval::new(9, 11, Tag::NB),
        ])
        .unwrap();
        // zeta = 1/3 (ell = 3): {9..11} + level 8 gives 4 >= 2^(2/3*4)? 4 < 6.35, continue;
        // through 5..7 (absorbed), reach 4: R = 16 at |J| = 8 vs 2^(16/3) = 40.3; keep
        // going to 0: R = 16 vs 2^8 -> case (b) over everything
        let e = extend_intervals(&p, &lifted, 1.0 / 3.0, 3).unwrap();
        assert_eq!(e.intervals, vec![Interval::new(0, 11, Tag::CaseB)]);
        // zeta = 1/2 (ell = 2 would not match but the check only needs ell*zeta >= 1)
        // {9..11}+8: 4 >= 2^4? no; +7: 4 >= 2^5 no ... -> (b)
        let e = extend_intervals(&p, &lifted, 0.25, 4).unwrap();
        // zeta = 1/4: {8..11}: 4 >= 2^(0.5*4) = 4 -> case (a), stops at 8
        // next interval {5..7} ends at 7 < 8: disjoint, extended on its own:
        // {4..7}: 4 >= 4 -> case (a); then {0..3} ends at 3 < 4 -> (b)
        assert_eq!(
            e.intervals,
            vec![
                Interval::new(0, 3, Tag::CaseB),
                Interval::new(4, 7, Tag::CaseA),
                Interval::new(8, 11, Tag::CaseA),
            ]
        );
    }

    #[test]
    fn classification() {
        let fam = IntervalFamily::new(vec![
            Interval::new(0, 1, Tag::CaseB),
            Interval::new(2, 4, Tag::CaseA),
        ])
        .unwrap();
        let ones = BranchingProfile::constant(2, 5, 1).unwrap();
        let c = classify_low_high(&fam, &ones, Exponent::new(1, 10));
        assert_eq!(c.intervals[1].tag, Tag::Low);
        assert_eq!(c.intervals[0].tag, Tag::CaseB);
        let full = BranchingProfile::constant(2, 5, 4).unwrap();
        let c = classify_low_high(&fam, &full, Exponent::new(9, 10));
        assert_eq!(c.intervals[1].tag, Tag::High);
        assert_eq!(c.length_with(Tag::High), 3);
        let part = c.low_partition(5);
        assert_eq!(part, vec![Interval::new(0, 4, Tag::Useless)]);
    }

    #[test]
    fn prune2_hand_example() {
        // m = 2, one case-(a) interval J = {1..5} (r = 4), xi = 1/4:
        // keep ceil(5/4) = 2 scales, collapse the right 3
        // base-4 digits in {0, 2}: already separated at every level
        let pts = (0u64..64)
            .map(|i| (0..6).map(|d| ((i >> d) & 1) << (2 * d + 1)).sum())
            .collect();
        let t = DeltaSet::from_unsorted(12, 1, pts).unwrap();
        let (b, q) = prune_separation_1(&t, 2, 6).unwrap();
        assert_eq!(b, t);
        let fam = IntervalFamily::new(vec![Interval::new(1, 5, Tag::CaseA)]).unwrap();
        let out = prune_separation_2(&b, &fam, 0.25, &q).unwrap();
        assert_eq!(out.collapsed, vec![3, 4, 5]);
        assert_eq!(out.profile.r(), &[2, 2, 2, 1, 1, 1]);
        assert!(audit_branching_floor(&out.profile, &fam, 0.25, 0.5).is_empty());
        assert!(audit_lemma5(&out.set, 2, &fam, 0.25).is_empty());
        let empty = IntervalFamily::default();
        assert_eq!(prune_separation_2(&b, &empty, 0.25, &q).unwrap().set, b);
        assert!(prune_separation_2(&b, &fam, 0.1, &q).is_err());
    }

    #[test]
    fn json_shape() {
        let f = IntervalFamily::new(vec![Interval::new(2, 4, Tag::Low)]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"intervals":[{"lo":2,"hi":4,"tag":"low"}]}"#);
        assert_eq!(serde_json::from_str::<IntervalFamily>(&s).unwrap(), f);
    }
}
