//! Exact kernels for δ-discretised sum-product estimates.
//!
//! Sets live on the grid `2^-n Z` ([`dyadic`]), are organised as branching trees and
//! pruned ([`uniform`]), carry discrete measures whose dyadic entropies are tracked
//! across scales ([`measure`]), and are projected along slopes drawn from another
//! measure ([`projection`]). [`experiments`] ties these into reproducible runs.
//!
//! ```
//! use dyadic_abc::dyadic::{gen_ap, gen_regular_tree, SumsetKernel, Placement};
//! use dyadic_abc::params::Dyadic;
//!
//! let a = gen_ap(12, 1 << 8).unwrap();
//! let b = gen_regular_tree(1, 12, 0.5, Placement::Random(0)).unwrap();
//! let k = SumsetKernel::new(&a);
//! assert!(k.count(Dyadic::new(3, 4), &b) > a.len());
//! ```

pub mod dyadic;
pub mod error;
pub mod params;
pub mod uniform;
pub mod measure;
pub mod projection;
pub mod experiments;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub mod book_introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/sets.md")]
pub mod book_sets {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/trees.md")]
pub mod book_trees {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/intervals.md")]
pub mod book_intervals {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/entropy.md")]
pub mod book_entropy {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/projections.md")]
pub mod book_projections {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod book_experiments {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod book_cli {}
