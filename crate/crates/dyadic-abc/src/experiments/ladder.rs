use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use super::output::{f, Table};
use crate::dyadic::{sumset, DeltaSet, SumsetKernel};
use crate::error::{Error, Result};
use crate::params::Dyadic;

/// Largest index range `2^(n_steps+1) W 2^n` the ladder will materialise.
pub const LADDER_LIMIT: u64 = 1 << 32;

/// `x^e <= 2^p y^e`, exactly.
fn pow_le(x: usize, y: usize, e: u32, p: u32) -> bool {
    BigUint::from(x).pow(e) <= (BigUint::one() << p as usize) * BigUint::from(y).pow(e)
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderReport {
    pub n_steps: u32,
    /// `|2^k B|_δ` for `k = 0, ..., n_steps + 1`.
    pub sizes: Vec<usize>,
    /// First `k >= 1` with `|2^(k+1) B| <= 2 δ^(-1/n) |2^k B|`.
    pub k: u32,
}

/// Sizes of the dyadic iterated sums `2^k B` and the first level where doubling is small.
///
/// If no `k <= n_steps` qualified, `|2^(n+1) B| > 2^n δ^-1 |2B|`, which exceeds the
/// `2^(n+1) W δ^-1` cells available once `|2B| >= 2W`; a miss is reported as an error.
pub fn run_doubling_ladder(b: &DeltaSet, n_steps: u32) -> Result<LadderReport> {
    if b.is_empty() {
        return Err(Error::Empty("ladder needs a nonempty set"));
    }
    if n_steps == 0 {
        return Err(Error::Precondition("n_steps must be positive".into()));
    }
    let span = (b.width() << b.n())
        .checked_shl(n_steps + 1)
        .filter(|&v| v <= LADDER_LIMIT)
        .ok_or(Error::WidthOverflow {
            width: b.width() << (n_steps + 1),
            limit: LADDER_LIMIT >> b.n(),
        })?;
    debug_assert!(span > 0);
    let mut sizes = vec![b.len()];
    let mut cur = b.clone();
    for _ in 0..=n_steps {
        cur = sumset(&cur, Dyadic::one(), &cur)?;
        sizes.push(cur.len());
    }
    let k = (1..=n_steps)
        .find(|&k| pow_le(sizes[k as usize + 1], sizes[k as usize], n_steps, n_steps + b.n()))
        .ok_or_else(|| Error::Hypothesis("no doubling step found".into()))?;
    Ok(LadderReport { n_steps, sizes, k })
}

pub fn ladder_table(r: &LadderReport) -> Table {
    let mut t = Table::new(&["k", "size", "chosen"]);
    for (k, s) in r.sizes.iter().enumerate() {
        t.push(vec![k.to_string(), s.to_string(), (k as u32 == r.k).to_string()]);
    }
    t
}

#[derive(Clone, Debug, Serialize)]
pub struct GreedyReport {
    /// `|H_1|, ..., |H_N|`.
    pub sizes: Vec<usize>,
    pub c_sequence: Vec<String>,
    /// Smallest `n` in `1..N` with `|H_(n+1)| <= 2 δ^(-1/(N-1)) |H_n|`.
    pub n_star: usize,
    /// `log2 |H_N| / log2(1/δ)`.
    pub exponent: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `β + γ(1-β) - η`.
    pub target: f64,
}

/// Greedy sums `H_(n+1) = H_n + c_(n+1) B`, each `c` maximising the new size.
///
/// `C` holds coefficients `k/2^(C.n)` in `[0, 1]`; its resolution may not exceed that of `B`.
pub fn run_greedy_iterated_sum(
    b: &DeltaSet,
    c: &DeltaSet,
    n_steps: usize,
    eta: f64,
) -> Result<GreedyReport> {
    if b.is_empty() || c.is_empty() {
        return Err(Error::Empty("greedy needs nonempty B and C"));
    }
    if n_steps < 2 {
        return Err(Error::Precondition("need at least two steps".into()));
    }
    if c.n() > b.n() || c.indices().last().is_some_and(|&k| k > 1 << c.n()) {
        return Err(Error::Precondition(
            "coefficients must lie in [0, 1] at a resolution no finer than B".into(),
        ));
    }
    if b.width() > 1 {
        return Err(Error::Precondition("B must lie in [0, 1)".into()));
    }
    let res = b.n();
    let coeffs: Vec<Dyadic> = c.indices().iter().map(|&k| Dyadic::from_index(k, c.n())).collect();
    let zero = DeltaSet::new(res, 1, vec![0])?;
    let mut h = sumset(&zero, coeffs[0], b)?;
    let mut sizes = vec![h.len()];
    let mut seq = vec![coeffs[0].to_string()];
    for _ in 1..n_steps {
        let kernel = SumsetKernel::new(&h);
        let counts: Vec<usize> = coeffs.par_iter().map(|&x| kernel.count(x, b)).collect();
        // ties go to the smallest coefficient: max_by_key keeps the last maximum
        let (i, _) = counts
            .iter()
            .enumerate()
            .rev()
            .max_by_key(|(_, &v)| v)
            .expect("nonempty C");
        h = sumset(&h, coeffs[i], b)?;
        sizes.push(h.len());
        seq.push(coeffs[i].to_string());
    }
    if h.width() > n_steps as u64 + 1 {
        return Err(Error::WidthOverflow {
            width: h.width(),
            limit: n_steps as u64 + 1,
        });
    }
    let e = n_steps as u32 - 1;
    let n_star = (1..n_steps)
        .find(|&i| pow_le(sizes[i], sizes[i - 1], e, e + res))
        .ok_or_else(|| Error::Hypothesis("no pigeonhole step found".into()))?;
    let beta = (b.len() as f64).log2() / res as f64;
    let gamma = if c.n() == 0 {
        0.0
    } else {
        (c.len() as f64).log2() / c.n() as f64
    };
    Ok(GreedyReport {
        exponent: (h.len() as f64).log2() / res as f64,
        target: beta + gamma * (1.0 - beta) - eta,
        sizes,
        c_sequence: seq,
        n_star,
        beta,
        gamma,
    })
}

pub fn greedy_table(r: &GreedyReport) -> Table {
    let mut t = Table::new(&["step", "size", "c", "exponent", "target", "n_star"]);
    for (i, (s, c)) in r.sizes.iter().zip(&r.c_sequence).enumerate() {
        t.push(vec![
            (i + 1).to_string(),
            s.to_string(),
            c.clone(),
            f(r.exponent),
            f(r.target),
            r.n_star.to_string(),
        ]);
    }
    t
}
