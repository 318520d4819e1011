use std::collections::BTreeMap;

use serde::Serialize;

use super::{coarse, Cell, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::params::Dyadic;

/// Per-block correction: a unit cell projects under `π_c`, `|c| <= 1`, into an interval
/// of length at most 2, which meets at most 3 unit cells.
pub const C_CORR: f64 = 1.584_962_500_721_156;

/// Shannon entropy in bits of the distribution `w_i / total`.
pub fn entropy_of_weights(weights: impl IntoIterator<Item = u64>, total: u64) -> f64 {
    let t = total as f64;
    let s: f64 = weights
        .into_iter()
        .filter(|&w| w > 0)
        .map(|w| {
            let w = w as f64;
            w * w.log2()
        })
        .sum();
    (t.log2() - s / t).max(0.0)
}

/// `H(μ, D_j)` in bits.
pub fn entropy(mu: &DiscreteMeasure, j: u32) -> Result<f64> {
    let cells = mu.coarsen(j)?;
    Ok(entropy_of_weights(cells.iter().map(|c| c.1), mu.total()))
}

/// `H(μ, D_fine | D_coarse) = Σ_E μ(E) H(μ_E, D_fine)`, evaluated from the definition.
pub fn conditional_entropy(mu: &DiscreteMeasure, j_fine: u32, j_coarse: u32) -> Result<f64> {
    if j_coarse > j_fine {
        return Err(Error::Precondition(format!(
            "coarse level {j_coarse} exceeds fine level {j_fine}"
        )));
    }
    let s = j_fine - j_coarse;
    let mut parents: BTreeMap<Cell, Vec<u64>> = BTreeMap::new();
    for (c, w) in mu.coarsen(j_fine)? {
        parents
            .entry([coarse(c[0], s), coarse(c[1], s)])
            .or_default()
            .push(w);
    }
    let t = mu.total() as f64;
    Ok(parents
        .values()
        .map(|kids| {
            let we: u64 = kids.iter().sum();
            we as f64 / t * entropy_of_weights(kids.iter().copied(), we)
        })
        .sum())
}

/// `(H(μ∗ν, D_j), Σ_x ν(x) H(μ + x, D_j))` for line measures.
///
/// The first is at least the second by concavity of entropy.
pub fn concavity_check(mu: &DiscreteMeasure, nu: &DiscreteMeasure, j: u32) -> Result<(f64, f64)> {
    let lhs = entropy(&mu.convolve(nu)?, j)?;
    let mut rhs = 0.0;
    for &(x, w) in nu.atoms() {
        rhs += nu.mass(w) * entropy(&mu.translate(x[0]), j)?;
    }
    Ok((lhs, rhs))
}

/// Atoms of `μ` grouped by level-`j` cell and rescaled to that cell.
fn local_pieces(mu: &DiscreteMeasure, j: u32) -> Result<Vec<(Cell, u64, DiscreteMeasure)>> {
    mu.check_level(j)?;
    let s = mu.n() - j;
    let mut groups: BTreeMap<Cell, Vec<(Cell, u64)>> = BTreeMap::new();
    for &(c, w) in mu.atoms() {
        let q = [coarse(c[0], s), coarse(c[1], s)];
        let local = [c[0] - (q[0] << s), c[1] - (q[1] << s)];
        groups.entry(q).or_default().push((local, w));
    }
    groups
        .into_iter()
        .map(|(q, atoms)| {
            let w = atoms.iter().map(|a| a.1).sum();
            Ok((q, w, DiscreteMeasure::new(mu.dim(), s, atoms)?))
        })
        .collect()
}

/// One block `{n_j, ..., n_(j+1)}` of the entropy chain.
#[derive(Clone, Debug, Serialize)]
pub struct ChainBlock {
    pub lo: u32,
    pub hi: u32,
    /// `(Q, μ(Q), H(π_c μ^Q, D_(hi-lo)))` for every `Q ∈ D_lo` with `μ(Q) > 0`.
    pub cells: Vec<(Cell, f64, f64)>,
    pub sum: f64,
}

/// Both sides of the multiscale entropy chain.
#[derive(Clone, Debug, Serialize)]
pub struct EntropyChainReport {
    pub c: String,
    pub cuts: Vec<u32>,
    /// `H(π_c μ, D_n)`.
    pub lhs: f64,
    pub blocks: Vec<ChainBlock>,
    /// `Σ_j Σ_Q μ(Q) H(π_c μ^Q, D_(n_(j+1) - n_j))`.
    pub rhs: f64,
    /// `h · C_CORR`.
    pub correction: f64,
    pub holds: bool,
}

/// Evaluates `H(π_c μ, D_n) >= Σ_j Σ_Q μ(Q) H(π_c μ^Q, D_(n_(j+1)-n_j)) - h C_CORR`.
pub fn entropy_chain(mu2: &DiscreteMeasure, c: Dyadic, cuts: &[u32]) -> Result<EntropyChainReport> {
    let n = mu2.n();
    if cuts.len() < 2
        || cuts[0] != 0
        || *cuts.last().unwrap_or(&0) != n
        || cuts.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::Precondition(format!(
            "cuts must increase strictly from 0 to {n}: {cuts:?}"
        )));
    }
    let lhs = entropy(&mu2.project(c)?, n)?;
    let mut blocks = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mut cells = Vec::new();
        let mut sum = 0.0;
        for (q, wq, local) in local_pieces(mu2, lo)? {
            let h = entropy(&local.project(c)?, hi - lo)?;
            let m = mu2.mass(wq);
            sum += m * h;
            cells.push((q, m, h));
        }
        blocks.push(ChainBlock { lo, hi, cells, sum });
    }
    let rhs = blocks.iter().map(|b| b.sum).sum();
    let correction = (cuts.len() - 1) as f64 * C_CORR;
    Ok(EntropyChainReport {
        c: c.to_string(),
        cuts: cuts.to_vec(),
        lhs,
        blocks,
        rhs,
        correction,
        holds: lhs >= rhs - correction - 1e-9,
    })
}

/// `min_Q H(π_c μ^Q, D_(hi-lo))` over `Q ∈ D_lo` with `μ(Q) > 0`, with the minimising cell.
pub fn uniform_fiber_entropy(mu2: &DiscreteMeasure, c: Dyadic, lo: u32, hi: u32) -> Result<(f64, Cell)> {
    if lo > hi {
        return Err(Error::Precondition(format!("block {lo}..{hi} is empty")));
    }
    mu2.check_level(hi)?;
    let mut best = (f64::INFINITY, [0, 0]);
    for (q, _, local) in local_pieces(mu2, lo)? {
        let h = entropy(&local.project(c)?, hi - lo)?;
        if h < best.0 {
            best = (h, q);
        }
    }
    Ok(best)
}
