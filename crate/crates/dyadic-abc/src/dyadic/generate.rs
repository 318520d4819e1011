use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DeltaSet;
use crate::error::{Error, Result};
use crate::params::ScaleSpec;
use crate::uniform::BranchingProfile;

/// Where the children of a tree node are placed among the `2^m` slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    /// The leftmost `R(s)` slots.
    LeftPacked,
    /// A uniformly random subset, drawn from a seeded stream.
    Random(u64),
}

/// Arithmetic progression `{0, s, 2s, ...}` of `size` points with step `s = floor(2^n / size)`.
pub fn gen_ap(n: u32, size: u64) -> Result<DeltaSet> {
    if n > super::MAX_N {
        return Err(Error::OutOfRange {
            what: "n",
            value: n as i64,
            range: format!("[0, {}]", super::MAX_N),
        });
    }
    if size == 0 || size > 1u64 << n {
        return Err(Error::OutOfRange {
            what: "size",
            value: size as i64,
            range: format!("[1, 2^{n}]"),
        });
    }
    let step = (1u64 << n) / size;
    DeltaSet::new(n, 1, (0..size).map(|i| i * step).collect())
}

/// The progressions `A = {j/n^(1/2)}`, `B = C = {j/n^(1/4)}` (`j >= 1`, up to 1).
///
/// Requires `n_param = 16^k`, so every point sits on the grid of resolution `2^-(2k)`.
/// The point `1` has index `2^(2k)`, hence `W = 2`.
pub fn gen_example_form87(n_param: u64) -> Result<(DeltaSet, DeltaSet, DeltaSet)> {
    if n_param == 0 || !n_param.is_power_of_two() || n_param.trailing_zeros() % 4 != 0 {
        return Err(Error::NotFourthPower(n_param));
    }
    let k = n_param.trailing_zeros() / 4;
    let g = 2 * k;
    let root2 = 1u64 << (2 * k);
    let root4 = 1u64 << k;
    let a = DeltaSet::new(g, 2, (1..=root2).collect())?;
    let b = DeltaSet::new(g, 2, (1..=root4).map(|j| j * root4).collect())?;
    Ok((a, b.clone(), b))
}

/// A uniformly random subset of `{0, ..., 2^n - 1}` with `size` points.
pub fn gen_random(n: u32, size: usize, seed: u64) -> Result<DeltaSet> {
    if n > 30 || size as u64 > 1u64 << n {
        return Err(Error::OutOfRange {
            what: "size",
            value: size as i64,
            range: format!("[0, 2^{n}] with n <= 30"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = sample(&mut rng, 1usize << n, size)
        .into_iter()
        .map(|i| i as u64)
        .collect();
    DeltaSet::from_unsorted(n, 1, idx)
}

/// An `(m, ell*N)`-uniform set with the given branching numbers.
pub fn gen_uniform_tree(
    spec: &ScaleSpec,
    profile: &BranchingProfile,
    placement: Placement,
) -> Result<DeltaSet> {
    if profile.m() != spec.m {
        return Err(Error::InvalidProfile(format!(
            "profile has m = {}, scale has m = {}",
            profile.m(),
            spec.m
        )));
    }
    if profile.levels() != spec.levels() {
        return Err(Error::ProfileLength {
            expected: spec.levels(),
            got: profile.levels(),
        });
    }
    tree_from_profile(profile, placement)
}

/// Tree with `R(s) = 2^(floor(κm(s+1)) - floor(κms))`, so `|A| ≈ 2^(κ m levels)`.
pub fn gen_regular_tree(m: u32, levels: usize, kappa: f64, placement: Placement) -> Result<DeltaSet> {
    let profile = BranchingProfile::regular(m, levels, kappa)?;
    tree_from_profile(&profile, placement)
}

pub(crate) fn tree_from_profile(profile: &BranchingProfile, placement: Placement) -> Result<DeltaSet> {
    let m = profile.m();
    let n = m * profile.levels() as u32;
    let mut rng = match placement {
        Placement::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Placement::LeftPacked => None,
    };
    let mut prefixes = vec![0u64];
    for &r in profile.r() {
        let mut next = Vec::with_capacity(prefixes.len() * r as usize);
        for &p in &prefixes {
            match rng.as_mut() {
                None => next.extend((0..r).map(|c| (p << m) | c)),
                Some(rng) => {
                    let mut kids: Vec<u64> = sample(rng, 1usize << m, r as usize)
                        .into_iter()
                        .map(|c| c as u64)
                        .collect();
                    kids.sort_unstable();
                    next.extend(kids.into_iter().map(|c| (p << m) | c));
                }
            }
        }
        prefixes = next;
    }
    DeltaSet::new(n, 1, prefixes)
}
