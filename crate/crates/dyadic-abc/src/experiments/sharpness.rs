use std::collections::BTreeSet;

use serde::Serialize;

use super::output::{f, opt, Table};
use crate::dyadic::{gen_example_form87, sumset};
use crate::error::{Error, Result};
use crate::params::Dyadic;

/// Largest admissible parameter, `16^6`.
pub const MAX_SHARPNESS_N: u64 = 1 << 24;

/// One row of the sharpness table for `A = {j/√n}`, `B = C = {j/n^(1/4)}`.
#[derive(Clone, Debug, Serialize)]
pub struct SharpnessRow {
    pub n_param: u64,
    pub size_a: usize,
    /// `|A + BC|`, counted as distinct numerators `j + kl` over `√n`.
    pub abc: usize,
    pub ratio: f64,
    /// `max_{c ∈ C} |A + cB|_δ`.
    pub max_acb: usize,
    pub best_c: String,
    pub max_ratio: f64,
    /// `log ratio / log n`; undefined at `n = 1`.
    pub slope: Option<f64>,
    pub max_slope: Option<f64>,
}

/// Brute-force evaluation of the product-set example for each `n`.
pub fn run_sharpness_form87(n_params: &[u64]) -> Result<Vec<SharpnessRow>> {
    n_params.iter().map(|&n| sharpness_row(n)).collect()
}

fn sharpness_row(n_param: u64) -> Result<SharpnessRow> {
    if n_param > MAX_SHARPNESS_N {
        return Err(Error::OutOfRange {
            what: "n",
            value: n_param as i64,
            range: format!("[1, {MAX_SHARPNESS_N}]"),
        });
    }
    let (a, b, c) = gen_example_form87(n_param)?;
    let k = n_param.trailing_zeros() / 4;
    let root4 = 1u64 << k;

    // all points share the denominator √n = 2^(2k) and bc = (j/2^k)(l/2^k)
    let bc: BTreeSet<u64> = b
        .indices()
        .iter()
        .flat_map(|&x| c.indices().iter().map(move |&y| (x / root4) * (y / root4)))
        .collect();
    let abc: BTreeSet<u64> = a
        .indices()
        .iter()
        .flat_map(|&x| bc.iter().map(move |&p| x + p))
        .collect();

    let mut best = (0usize, Dyadic::zero());
    for &y in c.indices() {
        let cy = Dyadic::new((y / root4) as i64, k);
        let size = sumset(&a, cy, &b)?.len();
        if size > best.0 {
            best = (size, cy);
        }
    }
    let size_a = a.len();
    let ratio = abc.len() as f64 / size_a as f64;
    let max_ratio = best.0 as f64 / size_a as f64;
    let slope = |r: f64| (n_param > 1).then(|| r.ln() / (n_param as f64).ln());
    Ok(SharpnessRow {
        n_param,
        size_a,
        abc: abc.len(),
        ratio,
        max_acb: best.0,
        best_c: best.1.to_string(),
        max_ratio,
        slope: slope(ratio),
        max_slope: slope(max_ratio),
    })
}

/// Whether the slopes of the defined rows strictly decrease in the given order.
pub fn slopes_decrease(rows: &[SharpnessRow]) -> bool {
    let s: Vec<f64> = rows.iter().filter_map(|r| r.slope).collect();
    s.windows(2).all(|w| w[1] < w[0])
}

pub fn sharpness_table(rows: &[SharpnessRow]) -> Table {
    let mut t = Table::new(&[
        "n", "size_a", "abc", "ratio", "slope", "max_acb", "best_c", "max_ratio", "max_slope",
    ]);
    for r in rows {
        t.push(vec![
            r.n_param.to_string(),
            r.size_a.to_string(),
            r.abc.to_string(),
            f(r.ratio),
            opt(r.slope),
            r.max_acb.to_string(),
            r.best_c.clone(),
            f(r.max_ratio),
            opt(r.max_slope),
        ]);
    }
    t
}
