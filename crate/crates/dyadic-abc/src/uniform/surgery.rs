use super::{check_tree_shape, children_at, is_uniform, BranchingProfile};
use crate::dyadic::DeltaSet;
use crate::error::{Error, Result};

/// Keeps the points whose level-`cs`-shifted prefix is in `kept` (sorted).
fn keep_prefixes(pts: &[u64], shift: u32, kept: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(pts.len());
    let mut j = 0;
    for &k in pts {
        let p = k >> shift;
        while j < kept.len() && kept[j] < p {
            j += 1;
        }
        if j < kept.len() && kept[j] == p {
            out.push(k);
        }
    }
    out
}

fn bucket(c: usize) -> u32 {
    // (2^(b-1), 2^b] with 1 folded into b = 1
    (usize::BITS - (c.max(2) - 1).leading_zeros()).max(1)
}

/// Extracts an `(m, N)`-uniform subset with `|A'| >= |A| / (2m)^N`.
///
/// Works bottom-up: at level `s` the parents are bucketed by child count into
/// `(2^(b-1), 2^b]`, the bucket carrying the most points is kept, and every kept
/// parent is cut down to the bucket's smallest child count (leftmost children first).
/// Since all level-`(s+1)` cells already carry the same number of points, the
/// kept bucket holds at least `1/m` of the points and the cut loses at most half.
pub fn uniformize(a: &DeltaSet, m: u32, levels: usize) -> Result<(DeltaSet, BranchingProfile)> {
    check_tree_shape(a, m, levels)?;
    let n = a.n();
    let mut pts = a.indices().to_vec();
    let mut r = vec![0u64; levels];
    for s in (0..levels).rev() {
        let groups = children_at(&pts, n, m, s);
        let mut mass = vec![0usize; m as usize + 1];
        for (_, kids) in &groups {
            mass[bucket(kids.len()) as usize] += kids.len();
        }
        // first maximum: ties go to the smaller bucket
        let best = (1..=m as usize).fold(1, |b, i| if mass[i] > mass[b] { i } else { b });
        let t = groups
            .iter()
            .filter(|(_, k)| bucket(k.len()) as usize == best)
            .map(|(_, k)| k.len())
            .min()
            .expect("chosen bucket is nonempty");
        let kept: Vec<u64> = groups
            .iter()
            .filter(|(_, k)| bucket(k.len()) as usize == best)
            .flat_map(|(_, k)| k[..t].iter().copied())
            .collect();
        pts = keep_prefixes(&pts, n - m * (s as u32 + 1), &kept);
        r[s] = t as u64;
    }
    Ok((DeltaSet::new(n, 1, pts)?, BranchingProfile::new(m, r)?))
}

fn require_profile(a: &DeltaSet, profile: &BranchingProfile) -> Result<()> {
    match is_uniform(a, profile.m(), profile.levels())? {
        Some(p) if &p == profile => Ok(()),
        Some(p) => Err(Error::InvalidProfile(format!(
            "set has profile {:?}, expected {:?}",
            p.r(),
            profile.r()
        ))),
        None => Err(Error::NotUniform(
            (0..profile.levels())
                .find(|&s| {
                    let g = children_at(a.indices(), a.n(), profile.m(), s);
                    g.iter().any(|(_, k)| k.len() != g[0].1.len())
                })
                .unwrap_or(0),
        )),
    }
}

/// Keeps only the leftmost child at every level in `levels_to_collapse`.
///
/// The result is uniform with `R'(s) = 1` on the collapsed levels and
/// `|A'| = |A| / ∏ R(s)` exactly.
pub fn collapse(
    a: &DeltaSet,
    profile: &BranchingProfile,
    levels_to_collapse: &[usize],
) -> Result<(DeltaSet, BranchingProfile)> {
    require_profile(a, profile)?;
    let mut levels = levels_to_collapse.to_vec();
    levels.sort_unstable();
    levels.dedup();
    if let Some(&s) = levels.iter().find(|&&s| s >= profile.levels()) {
        return Err(Error::OutOfRange {
            what: "collapse level",
            value: s as i64,
            range: format!("[0, {})", profile.levels()),
        });
    }
    let (n, m) = (a.n(), profile.m());
    let mut pts = a.indices().to_vec();
    for &s in &levels {
        let kept: Vec<u64> = children_at(&pts, n, m, s)
            .iter()
            .map(|(_, k)| k[0])
            .collect();
        pts = keep_prefixes(&pts, n - m * (s as u32 + 1), &kept);
    }
    Ok((DeltaSet::new(n, 1, pts)?, profile.collapsed(&levels)))
}

/// Top-down pruning so that distinct cells at every level `1..=N` are at least one
/// cell apart.
///
/// Within each parent the children are scanned left to right and a child is kept
/// when it is not adjacent to the last kept one; every parent is then cut to the
/// smallest surviving count (leftmost first). Each level keeps at least `ceil(R/2)`
/// children, so `|B''| >= 2^-N |B|`.
pub fn prune_separation_1(
    b: &DeltaSet,
    m: u32,
    levels: usize,
) -> Result<(DeltaSet, BranchingProfile)> {
    if is_uniform(b, m, levels)?.is_none() {
        return Err(Error::Precondition("prune_separation_1 needs a uniform set".into()));
    }
    let n = b.n();
    let mut pts = b.indices().to_vec();
    let mut r = Vec::with_capacity(levels);
    for s in 0..levels {
        let groups = children_at(&pts, n, m, s);
        let picks: Vec<Vec<u64>> = groups
            .iter()
            .map(|(_, kids)| {
                let mut keep: Vec<u64> = Vec::new();
                for &q in kids {
                    if keep.last().is_none_or(|&l| q >= l + 2) {
                        keep.push(q);
                    }
                }
                keep
            })
            .collect();
        let t = picks.iter().map(Vec::len).min().expect("nonempty set");
        let kept: Vec<u64> = picks.iter().flat_map(|p| p[..t].iter().copied()).collect();
        pts = keep_prefixes(&pts, n - m * (s as u32 + 1), &kept);
        r.push(t as u64);
    }
    Ok((DeltaSet::new(n, 1, pts)?, BranchingProfile::new(m, r)?))
}

/// Pairs of distinct adjacent cells `(level, left cell)` at levels `1..=N`.
pub fn separation_violations(b: &DeltaSet, m: u32, levels: usize) -> Vec<(usize, u64)> {
    let mut bad = Vec::new();
    for l in 1..=levels {
        let cells = b.cells(m * l as u32);
        for w in cells.windows(2) {
            if w[1] - w[0] < 2 {
                bad.push((l, w[0]));
            }
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{gen_random, gen_uniform_tree, Placement};
    use crate::params::ScaleSpec;

    #[test]
    fn buckets() {
        let got: Vec<u32> = (1..=9).map(bucket).collect();
        assert_eq!(got, vec![1, 1, 2, 2, 3, 3, 3, 3, 4]);
    }

    #[test]
    fn uniformize_examples() {
        let spec = ScaleSpec::new(2, 1, 3).unwrap();
        let p = BranchingProfile::new(2, vec![3, 2, 4]).unwrap();
        let t = gen_uniform_tree(&spec, &p, Placement::Random(5)).unwrap();
        let (u, q) = uniformize(&t, 2, 3).unwrap();
        assert_eq!((u, q), (t, p));

        // full grid minus one point, m = 1, N = 3: hand trace
        // level 2: parents {0..3}; parent 3 has one child -> bucket 1 holds all
        // mass; keep t = 1 child everywhere -> R(2) = 1
        let a = DeltaSet::new(3, 1, (0..7).collect()).unwrap();
        let (u, q) = uniformize(&a, 1, 3).unwrap();
        assert_eq!(q.r(), &[2, 2, 1]);
        assert_eq!(u.indices(), &[0, 2, 4, 6]);
        assert!(u.len() * 8 >= a.len());

        let a = gen_random(12, 4096 / 3, 11).unwrap();
        let (u, q) = uniformize(&a, 2, 6).unwrap();
        assert_eq!(is_uniform(&u, 2, 6).unwrap(), Some(q));
        assert!(u.len() * 4usize.pow(6) >= a.len());
    }

    #[test]
    fn collapse_examples() {
        let spec = ScaleSpec::new(2, 1, 3).unwrap();
        let p = BranchingProfile::new(2, vec![4, 2, 4]).unwrap();
        let t = gen_uniform_tree(&spec, &p, Placement::Random(2)).unwrap();
        let (c, q) = collapse(&t, &p, &[1]).unwrap();
        assert_eq!(c.len(), 16);
        assert_eq!(q.r(), &[4, 1, 4]);
        assert_eq!(collapse(&t, &p, &[]).unwrap().0, t);
        assert_eq!(collapse(&t, &p, &[0, 1, 2]).unwrap().0.len(), 1);
        assert!(collapse(&t, &p, &[3]).is_err());
        let wrong = BranchingProfile::new(2, vec![4, 2, 3]).unwrap();
        assert!(collapse(&t, &wrong, &[1]).is_err());
    }

    #[test]
    fn prune1_examples() {
        // full grid at m = 1: every other cell at each level
        let full = DeltaSet::full(3).unwrap();
        let (b, q) = prune_separation_1(&full, 1, 3).unwrap();
        assert_eq!(q.r(), &[1, 1, 1]);
        assert_eq!(b.len(), 1);
        assert!(separation_violations(&b, 1, 3).is_empty());

        let full = DeltaSet::full(6).unwrap();
        let (b, q) = prune_separation_1(&full, 2, 3).unwrap();
        assert_eq!(q.r(), &[2, 2, 2]);
        assert!(separation_violations(&b, 2, 3).is_empty());
        assert!(b.len() * 8 >= full.len());

        // already separated: unchanged
        let sep = DeltaSet::new(4, 1, vec![0, 2, 8, 10]).unwrap();
        let (b, _) = prune_separation_1(&sep, 2, 2).unwrap();
        assert_eq!(b, sep);
    }
}
