//! Invariants of every module, checked on random inputs.

use proptest::prelude::*;

use dyadic_abc::dyadic::{frostman_check, gen_uniform_tree, iterated_sum, sumset, DeltaSet, Placement};
use dyadic_abc::experiments::{run_doubling_ladder, run_greedy_iterated_sum};
use dyadic_abc::measure::{
    conditional_entropy, entropy, entropy_chain, form2_audit, DiscreteMeasure,
};
use dyadic_abc::params::{Dyadic, ScaleSpec};
use dyadic_abc::projection::{l2_by_pairs, l2_by_pushforward};
use dyadic_abc::uniform::{
    collapse, extend_intervals, is_uniform, lift_intervals, prune_separation_1,
    separation_violations, trivial_intervals, uniformize, BranchingProfile,
};

fn set(max_n: u32) -> impl Strategy<Value = DeltaSet> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::btree_set(0..(1u64 << n), 1..=(1usize << n).min(64))
            .prop_map(move |s| DeltaSet::new(n, 1, s.into_iter().collect()).unwrap())
    })
}

/// A set together with a coefficient `c = p/2^q`, `0 <= c <= 1`, `q <= n`.
fn set_pair_coeff() -> impl Strategy<Value = (DeltaSet, DeltaSet, Dyadic)> {
    (1..=10u32).prop_flat_map(|n| {
        let s = move || {
            prop::collection::btree_set(0..(1u64 << n), 1..=48)
                .prop_map(move |s| DeltaSet::new(n, 1, s.into_iter().collect()).unwrap())
        };
        let c = (0..=n).prop_flat_map(|q| (0..=(1i64 << q)).prop_map(move |p| Dyadic::new(p, q)));
        (s(), s(), c)
    })
}

/// A random profile with every `R(s)` in `1..=2^m`.
fn profile(max_m: u32, max_levels: usize) -> impl Strategy<Value = BranchingProfile> {
    (1..=max_m, 1..=max_levels).prop_flat_map(|(m, levels)| {
        prop::collection::vec(1..=(1u64 << m), levels)
            .prop_map(move |r| BranchingProfile::new(m, r).unwrap())
    })
}

fn tree(max_m: u32, max_levels: usize) -> impl Strategy<Value = (DeltaSet, BranchingProfile)> {
    (profile(max_m, max_levels), any::<u64>()).prop_map(|(p, seed)| {
        let spec = ScaleSpec::new(p.m(), 1, p.levels() as u32).unwrap();
        (gen_uniform_tree(&spec, &p, Placement::Random(seed)).unwrap(), p)
    })
}

fn measure(dim: u8, max_n: u32) -> impl Strategy<Value = DiscreteMeasure> {
    (1..=max_n).prop_flat_map(move |n| {
        let side = 1i64 << n;
        let y = if dim == 2 { side } else { 1 };
        prop::collection::vec((0..side, 0..y, 1..100u64), 1..40).prop_map(move |atoms| {
            DiscreteMeasure::new(dim, n, atoms.into_iter().map(|(x, y, w)| ([x, y], w)).collect()).unwrap()
        })
    })
}

fn slope(n: u32) -> impl Strategy<Value = Dyadic> {
    (0..=n).prop_flat_map(|q| (-(1i64 << q)..=(1i64 << q)).prop_map(move |p| Dyadic::new(p, q)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn covering_at_grid_resolution_is_cardinality(a in set(12)) {
        prop_assert_eq!(a.covering_number(a.n()).unwrap(), a.len());
    }

    #[test]
    fn covering_doubles_at_most(a in set(12)) {
        for j in 0..a.n() {
            let coarse = a.covering_number(j).unwrap();
            let fine = a.covering_number(j + 1).unwrap();
            prop_assert!(coarse <= fine && fine <= 2 * coarse);
        }
    }

    #[test]
    fn sumset_bounds((a, b, c) in set_pair_coeff()) {
        let s = sumset(&a, c, &b).unwrap().len();
        prop_assert!(s >= a.len());
        prop_assert!(s <= a.len() * b.len());
        let one = sumset(&a, Dyadic::one(), &b).unwrap().len();
        prop_assert!(one >= a.len().max(b.len()));
    }

    #[test]
    fn iterated_sums_fit_their_domain(b in set(8), k in 1u64..8) {
        let kb = iterated_sum(&b, k).unwrap();
        prop_assert!(kb.len() as u64 <= k << b.n());
    }

    #[test]
    fn generated_trees_have_their_profile((a, p) in tree(3, 5)) {
        prop_assert_eq!(is_uniform(&a, p.m(), p.levels()).unwrap(), Some(p.clone()));
        prop_assert_eq!(a.len() as u128, p.product());
    }

    #[test]
    fn regular_trees_are_frostman(m in 1u32..=4, levels in 1usize..=4, q in 1u32..=4, seed: u64) {
        let kappa = q as f64 / 4.0;
        let r = 1u64 << (kappa * m as f64).ceil() as u32;
        let p = BranchingProfile::constant(m, levels, r).unwrap();
        let spec = ScaleSpec::new(m, 1, levels as u32).unwrap();
        let a = gen_uniform_tree(&spec, &p, Placement::Random(seed)).unwrap();
        let rep = frostman_check(&a, kappa, a.n(), 0).unwrap();
        prop_assert!(rep.worst_ratio <= 8.0, "{rep:?}");
    }

    #[test]
    fn collapse_divides_exactly((a, p) in tree(3, 5), mask: u8) {
        let levels: Vec<usize> = (0..p.levels()).filter(|s| mask >> s & 1 == 1).collect();
        let (b, q) = collapse(&a, &p, &levels).unwrap();
        let removed: u128 = levels.iter().map(|&s| p.get(s) as u128).product();
        prop_assert_eq!(b.len() as u128 * removed, a.len() as u128);
        prop_assert_eq!(is_uniform(&b, p.m(), p.levels()).unwrap(), Some(q));
    }

    #[test]
    fn uniformize_keeps_enough(m in 1u32..=3, levels in 1usize..=4, seed: u64, frac in 1u64..=8) {
        let n = m * levels as u32;
        let size = (((1u64 << n) * frac) / 8).max(1) as usize;
        let a = dyadic_abc::dyadic::gen_random(n, size, seed).unwrap();
        let (u, p) = uniformize(&a, m, levels).unwrap();
        prop_assert_eq!(is_uniform(&u, m, levels).unwrap(), Some(p));
        let loss = (2.0 * m as f64).powi(levels as i32);
        prop_assert!(u.len() as f64 * loss >= a.len() as f64);
    }

    #[test]
    fn first_pruning_separates((b, p) in tree(3, 5)) {
        let (c, q) = prune_separation_1(&b, p.m(), p.levels()).unwrap();
        prop_assert!(separation_violations(&c, p.m(), p.levels()).is_empty());
        prop_assert!(c.len() << p.levels() >= b.len());
        prop_assert_eq!(is_uniform(&c, p.m(), p.levels()).unwrap(), Some(q));
    }

    #[test]
    fn extensions_cover_the_lifted_intervals(
        m in 1u32..=3,
        ell in 2usize..=5,
        coarse in prop::collection::vec(prop::bool::ANY, 2..=5),
        busy in prop::collection::vec(1u64..=4, 25),
    ) {
        prop_assume!(m as usize * ell * coarse.len() <= 62);
        let mut r = Vec::new();
        for (i, &trivial) in coarse.iter().enumerate() {
            for s in 0..ell {
                r.push(if trivial { 1 } else { busy[(i * ell + s) % 25].min(1 << m) });
            }
        }
        let pb = BranchingProfile::new(m, r).unwrap();
        let lifted = lift_intervals(&trivial_intervals(&pb.aggregate(ell).unwrap()), ell);
        let fam = extend_intervals(&pb, &lifted, 1.0 / ell as f64, ell).unwrap();
        for i in lifted.iter() {
            prop_assert!(fam.iter().any(|j| j.lo <= i.lo && i.hi <= j.hi), "{i:?} in {fam:?}");
        }
    }

    #[test]
    fn refinement_identity(mu in measure(2, 6), a in 0u32..=6, b in 0u32..=6) {
        let (k, j) = (a.min(b).min(mu.n()), a.max(b).min(mu.n()));
        let direct = conditional_entropy(&mu, j, k).unwrap();
        let diff = entropy(&mu, j).unwrap() - entropy(&mu, k).unwrap();
        prop_assert!((direct - diff).abs() <= 2f64.powi(-40));
    }

    #[test]
    fn entropy_against_l2_and_support(mu in prop_oneof![measure(1, 10), measure(2, 6)], j in 0u32..=10) {
        let j = j.min(mu.n());
        let h = entropy(&mu, j).unwrap();
        let cells = mu.coarsen(j).unwrap().len() as f64;
        prop_assert!(h >= 0.0 && h <= cells.log2() + 1e-12);
        let floor = mu.dim() as f64 * j as f64 - mu.discretize_density_l2(j).unwrap().log2();
        prop_assert!(h >= floor - 1e-9);
    }

    #[test]
    fn projections_keep_mass(mu in measure(2, 6), c in slope(6)) {
        let c = if c.to_f64().abs() <= 1.0 { c } else { Dyadic::zero() };
        let p = mu.project(c).unwrap();
        prop_assert_eq!(p.total(), mu.total());
    }

    #[test]
    fn chain_inequality(a in measure(1, 8), b in measure(1, 8), c in slope(8), mask: u8) {
        let n = a.n().min(b.n());
        let mu = DiscreteMeasure::product(&coarsened(&a, n), &coarsened(&b, n)).unwrap();
        let mut cuts = vec![0];
        cuts.extend((1..n).filter(|j| mask >> j & 1 == 1));
        cuts.push(n);
        let c = if c.to_f64().abs() <= 1.0 { c } else { Dyadic::one() };
        let r = entropy_chain(&mu, c, &cuts).unwrap();
        prop_assert!(r.holds, "{} < {} - {}", r.lhs, r.rhs, r.correction);
    }

    #[test]
    fn symmetrized_measures_double(nu in measure(1, 8)) {
        prop_assert!(form2_audit(&nu).unwrap().holds);
    }

    #[test]
    fn two_path_projection_norms(mu in measure(2, 6), c in slope(6), j in 0u32..=6) {
        let c = if c.to_f64().abs() <= 1.0 { c } else { Dyadic::zero() };
        let j = j.min(mu.n());
        prop_assert_eq!(
            l2_by_pushforward(&mu, c, j).unwrap().numerator,
            l2_by_pairs(&mu, c, j).unwrap().numerator
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ladder_always_finds_a_step(b in set(8), steps in 1u32..=6) {
        let r = run_doubling_ladder(&b, steps).unwrap();
        prop_assert!(r.k >= 1 && r.k <= steps);
        prop_assert!(r.sizes.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn greedy_sizes_grow(b in set(6), c in set(4), steps in 2usize..=5) {
        // coefficients may not be finer than B
        let shift = c.n().saturating_sub(b.n());
        let mut ks: Vec<u64> = c.indices().iter().map(|k| k >> shift).collect();
        ks.dedup();
        let c = DeltaSet::new(c.n() - shift, 1, ks).unwrap();
        let r = run_greedy_iterated_sum(&b, &c, steps, 0.0).unwrap();
        prop_assert_eq!(r.sizes.len(), steps);
        prop_assert!(r.sizes.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(r.n_star >= 1 && r.n_star < steps);
        // H_n lives in [0, n)
        for (i, &s) in r.sizes.iter().enumerate() {
            prop_assert!(s as u64 <= (i as u64 + 1) << b.n());
        }
    }
}

/// The same measure viewed at the coarser resolution `n`.
fn coarsened(mu: &DiscreteMeasure, n: u32) -> DiscreteMeasure {
    DiscreteMeasure::new(1, n, mu.coarsen(n).unwrap()).unwrap()
}
