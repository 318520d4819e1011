//! Finitely supported measures on dyadic cells of the line and the plane.
//!
//! Weights are positive integers over a common denominator (their sum), so masses,
//! pushforwards and squared `L²` sums are exact; only logarithms go through `f64`.

mod entropy;
mod symmetric;

pub use entropy::{
    concavity_check, conditional_entropy, entropy, entropy_chain, entropy_of_weights,
    uniform_fiber_entropy, ChainBlock, EntropyChainReport, C_CORR,
};
pub use symmetric::{form2_audit, symmetrize, Form2Report};

use serde::{Deserialize, Serialize};
use serde_json::Number;

use crate::dyadic::DeltaSet;
use crate::error::{Error, Result};
use crate::params::Dyadic;

/// A dyadic cell: `[k0 2^-n, (k0+1) 2^-n)` on the line (`k1 = 0`), or a square in the plane.
pub type Cell = [i64; 2];

/// Scale at which float weights from JSON are turned into integers.
const FLOAT_SCALE: f64 = (1u64 << 40) as f64;

/// A probability measure with atoms at dyadic cells of side `2^-n`.
///
/// Equality compares masses, not the integer weights representing them.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    dim: u8,
    n: u32,
    atoms: Vec<(Cell, u64)>,
    total: u64,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    dim: u8,
    n: u32,
    atoms: Vec<(Vec<i64>, Number)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    denominator: Option<u64>,
}

/// Sorts, merges equal cells and drops zero weights.
fn normalize(mut atoms: Vec<(Cell, u64)>) -> Result<Vec<(Cell, u64)>> {
    atoms.sort_unstable_by_key(|a| a.0);
    let mut out: Vec<(Cell, u64)> = Vec::with_capacity(atoms.len());
    for (c, w) in atoms {
        if w == 0 {
            continue;
        }
        match out.last_mut() {
            Some((lc, lw)) if *lc == c => *lw = lw.checked_add(w).ok_or(Error::Overflow("weight"))?,
            _ => out.push((c, w)),
        }
    }
    Ok(out)
}

/// Floor of `k / 2^shift` for signed `k`.
pub(crate) fn coarse(k: i64, shift: u32) -> i64 {
    k >> shift
}

impl PartialEq for DiscreteMeasure {
    fn eq(&self, other: &Self) -> bool {
        let (s, t) = (self.total as u128, other.total as u128);
        self.dim == other.dim
            && self.n == other.n
            && self.atoms.len() == other.atoms.len()
            && self
                .atoms
                .iter()
                .zip(&other.atoms)
                .all(|(a, b)| a.0 == b.0 && a.1 as u128 * t == b.1 as u128 * s)
    }
}

impl Eq for DiscreteMeasure {}

impl DiscreteMeasure {
    /// Builds a measure from integer weights; their sum is the common denominator.
    pub fn new(dim: u8, n: u32, atoms: Vec<(Cell, u64)>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::OutOfRange {
                what: "dim",
                value: dim as i64,
                range: "{1, 2}".into(),
            });
        }
        if n > 62 {
            return Err(Error::OutOfRange {
                what: "n",
                value: n as i64,
                range: "[0, 62]".into(),
            });
        }
        if dim == 1 && atoms.iter().any(|(c, _)| c[1] != 0) {
            return Err(Error::Precondition("1-dim atoms have second coordinate 0".into()));
        }
        let atoms = normalize(atoms)?;
        if atoms.is_empty() {
            return Err(Error::Empty("a measure needs positive mass"));
        }
        let total = atoms
            .iter()
            .try_fold(0u64, |t, &(_, w)| t.checked_add(w))
            .ok_or(Error::Overflow("total weight"))?;
        Ok(DiscreteMeasure { dim, n, atoms, total })
    }

    /// Line measure from `(index, weight)` pairs.
    pub fn line(n: u32, atoms: impl IntoIterator<Item = (i64, u64)>) -> Result<Self> {
        DiscreteMeasure::new(1, n, atoms.into_iter().map(|(k, w)| ([k, 0], w)).collect())
    }

    pub fn point_mass(dim: u8, n: u32, cell: Cell) -> Result<Self> {
        DiscreteMeasure::new(dim, n, vec![(cell, 1)])
    }

    /// Normalised counting measure `|A|^-1 H^0|_A`.
    pub fn counting(a: &DeltaSet) -> Result<Self> {
        DiscreteMeasure::line(a.n(), a.indices().iter().map(|&k| (k as i64, 1)))
    }

    /// `μ_a × μ_b` on the plane.
    pub fn product(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<Self> {
        if a.dim != 1 || b.dim != 1 {
            return Err(Error::Precondition("product of two line measures".into()));
        }
        if a.n != b.n {
            return Err(Error::ScaleMismatch(a.n, b.n));
        }
        a.total
            .checked_mul(b.total)
            .ok_or(Error::Overflow("product weight"))?;
        let atoms = a
            .atoms
            .iter()
            .flat_map(|&(x, wx)| b.atoms.iter().map(move |&(y, wy)| ([x[0], y[0]], wx * wy)))
            .collect();
        DiscreteMeasure::new(2, a.n, atoms)
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn atoms(&self) -> &[(Cell, u64)] {
        &self.atoms
    }

    /// Common denominator of all masses.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn mass(&self, w: u64) -> f64 {
        w as f64 / self.total as f64
    }

    /// Weights of the level-`j` cells, merged and sorted.
    pub fn coarsen(&self, j: u32) -> Result<Vec<(Cell, u64)>> {
        self.check_level(j)?;
        let s = self.n - j;
        let mut out: Vec<(Cell, u64)> = Vec::new();
        for &(c, w) in &self.atoms {
            let q = [coarse(c[0], s), coarse(c[1], s)];
            match out.last_mut() {
                Some((lc, lw)) if *lc == q => *lw += w,
                _ => out.push((q, w)),
            }
        }
        // sorted input keeps equal parents adjacent only in dimension 1
        if self.dim == 2 {
            out = normalize(out)?;
        }
        Ok(out)
    }

    pub(crate) fn check_level(&self, j: u32) -> Result<()> {
        if j > self.n {
            return Err(Error::OutOfRange {
                what: "level",
                value: j as i64,
                range: format!("[0, {}]", self.n),
            });
        }
        Ok(())
    }

    /// `Σ_Q w(Q)^2` over level-`j` cells: the exact numerator of `‖μ^(j)‖²`.
    pub fn square_sum(&self, j: u32) -> Result<u128> {
        Ok(self
            .coarsen(j)?
            .iter()
            .map(|&(_, w)| w as u128 * w as u128)
            .sum())
    }

    /// `‖μ^(j)‖₂² = 2^(d j) Σ_Q μ(Q)²`, the `L²` norm of the level-`j` density.
    pub fn discretize_density_l2(&self, j: u32) -> Result<f64> {
        let s = self.square_sum(j)? as f64;
        let t = self.total as f64;
        Ok(s / (t * t) * 2f64.powi((self.dim as u32 * j) as i32))
    }

    /// `μ^Q`: restriction to the level-`j` cell `q`, normalised and rescaled to the unit cell.
    pub fn renormalize_cell(&self, j: u32, q: Cell) -> Result<Self> {
        self.check_level(j)?;
        let s = self.n - j;
        let atoms: Vec<(Cell, u64)> = self
            .atoms
            .iter()
            .filter(|(c, _)| coarse(c[0], s) == q[0] && coarse(c[1], s) == q[1])
            .map(|&(c, w)| {
                let local = [c[0] - (q[0] << s), if self.dim == 2 { c[1] - (q[1] << s) } else { 0 }];
                (local, w)
            })
            .collect();
        if atoms.is_empty() {
            return Err(Error::Precondition(format!("μ(Q) = 0 for Q = {q:?} at level {j}")));
        }
        DiscreteMeasure::new(self.dim, s, atoms)
    }

    /// Pushforward under `π_c(x, y) = x + c y`, each image assigned to its grid cell.
    pub fn project(&self, c: Dyadic) -> Result<Self> {
        if self.dim != 2 {
            return Err(Error::Precondition("projection needs a planar measure".into()));
        }
        if !c.abs_le_one() {
            return Err(Error::NotRepresentable(c.to_string(), self.n));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|&(p, w)| ([c.floor_mul_shifted(p[1], p[0], 0), 0], w))
            .collect();
        DiscreteMeasure::new(1, self.n, atoms)
    }

    /// First-coordinate marginal.
    pub fn marginal_x(&self) -> Result<Self> {
        self.project(Dyadic::zero())
    }

    /// Convolution `μ ∗ ν` of two line measures at the same resolution.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        if self.dim != 1 || other.dim != 1 {
            return Err(Error::Precondition("convolution of line measures".into()));
        }
        if self.n != other.n {
            return Err(Error::ScaleMismatch(self.n, other.n));
        }
        self.total
            .checked_mul(other.total)
            .ok_or(Error::Overflow("convolution weight"))?;
        let atoms = self
            .atoms
            .iter()
            .flat_map(|&(a, wa)| other.atoms.iter().map(move |&(b, wb)| ([a[0] + b[0], 0], wa * wb)))
            .collect();
        DiscreteMeasure::new(1, self.n, atoms)
    }

    /// Translate a line measure by `t` grid steps.
    pub fn translate(&self, t: i64) -> Self {
        let atoms = self.atoms.iter().map(|&(c, w)| ([c[0] + t, c[1]], w)).collect();
        DiscreteMeasure { atoms, ..*self }
    }

    pub fn to_json(&self) -> Result<String> {
        let raw = RawMeasure {
            dim: self.dim,
            n: self.n,
            atoms: self
                .atoms
                .iter()
                .map(|&(c, w)| (c[..self.dim as usize].to_vec(), Number::from(w)))
                .collect(),
            denominator: Some(self.total),
        };
        Ok(serde_json::to_string(&raw)?)
    }

    /// Reads `{"dim":..,"n":..,"atoms":[[[i, ...], w], ...]}`.
    ///
    /// Integer weights are kept as they are (an optional `denominator` must equal their
    /// sum). Float weights are rounded to multiples of `2^-40` first.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawMeasure = serde_json::from_str(text)?;
        let ints = raw.atoms.iter().all(|(_, w)| w.is_u64());
        let mut atoms = Vec::with_capacity(raw.atoms.len());
        for (idx, w) in &raw.atoms {
            if idx.len() != raw.dim as usize {
                return Err(Error::Parse(format!("cell {idx:?} has the wrong dimension")));
            }
            let cell = [idx[0], if raw.dim == 2 { idx[1] } else { 0 }];
            let w = if ints {
                w.as_u64().unwrap_or(0)
            } else {
                let f = w.as_f64().ok_or_else(|| Error::Parse(format!("bad weight {w}")))?;
                if !(f >= 0.0) {
                    return Err(Error::Parse(format!("negative weight {f}")));
                }
                (f * FLOAT_SCALE).round() as u64
            };
            atoms.push((cell, w));
        }
        if let (true, Some(d)) = (ints, raw.denominator) {
            let sum: u128 = atoms.iter().map(|a| a.1 as u128).sum();
            if d as u128 != sum {
                return Err(Error::Parse(format!(
                    "denominator {d} differs from the weight sum {sum}"
                )));
            }
        }
        DiscreteMeasure::new(raw.dim, raw.n, atoms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_and_l2() {
        let a = DeltaSet::new(4, 1, vec![1, 5, 6, 9]).unwrap();
        let mu = DiscreteMeasure::counting(&a).unwrap();
        // ‖μ‖² at grid resolution is 2^n / |A|
        assert_eq!(mu.discretize_density_l2(4).unwrap(), 16.0 / 4.0);
        let p = DiscreteMeasure::line(5, [(3, 1)]).unwrap();
        assert_eq!(p.discretize_density_l2(3).unwrap(), 8.0);
        let two = DiscreteMeasure::line(5, [(0, 1), (31, 1)]).unwrap();
        assert_eq!(two.discretize_density_l2(3).unwrap(), 4.0);
        let full = DiscreteMeasure::counting(&DeltaSet::full(3).unwrap()).unwrap();
        assert_eq!(full.discretize_density_l2(3).unwrap(), 1.0);
    }

    #[test]
    fn projections() {
        let a = DiscreteMeasure::line(4, [(0, 1), (1, 1)]).unwrap();
        let mu = DiscreteMeasure::product(&a, &a).unwrap();
        let p = mu.project(Dyadic::one()).unwrap();
        assert_eq!(p.atoms(), &[([0, 0], 1), ([1, 0], 2), ([2, 0], 1)]);
        assert_eq!(mu.project(Dyadic::zero()).unwrap(), a.clone());
        let pt = DiscreteMeasure::point_mass(2, 4, [3, 5]).unwrap();
        // 3 + 5/4 = 4.25 -> cell 4
        let q = pt.project(Dyadic::new(1, 2)).unwrap();
        assert_eq!(q.atoms(), &[([4, 0], 1)]);
        assert!(mu.project(Dyadic::new(3, 1)).is_err());
        assert_eq!(mu.project(Dyadic::new(-1, 0)).unwrap().total(), mu.total());
    }

    #[test]
    fn renormalize() {
        let mu = DiscreteMeasure::line(3, [(0, 1), (5, 2), (7, 1)]).unwrap();
        assert_eq!(mu.renormalize_cell(0, [0, 0]).unwrap(), mu);
        let r = mu.renormalize_cell(1, [1, 0]).unwrap();
        assert_eq!((r.n(), r.atoms()), (2, &[([1, 0], 2), ([3, 0], 1)][..]));
        assert!(mu.renormalize_cell(1, [2, 0]).is_err());
        let sq = DiscreteMeasure::point_mass(2, 4, [13, 6]).unwrap();
        let r = sq.renormalize_cell(2, [3, 1]).unwrap();
        assert_eq!(r.atoms(), &[([1, 2], 1)]);
    }

    #[test]
    fn json_round_trip() {
        let mu = DiscreteMeasure::new(2, 3, vec![([1, 2], 3), ([-1, 0], 1)]).unwrap();
        let s = mu.to_json().unwrap();
        assert_eq!(DiscreteMeasure::from_json(&s).unwrap(), mu);
        let f = DiscreteMeasure::from_json(r#"{"dim":1,"n":2,"atoms":[[[0],0.5],[[3],0.25],[[1],0.25]]}"#)
            .unwrap();
        assert_eq!(f.mass(f.atoms()[0].1), 0.5);
        assert!(DiscreteMeasure::from_json(r#"{"dim":1,"n":2,"atoms":[[[0],1]],"denominator":3}"#).is_err());
        let d = DiscreteMeasure::from_json(r#"{"dim":1,"n":2,"atoms":[[[0],2],[[1],2]],"denominator":4}"#);
        assert_eq!(d.unwrap(), DiscreteMeasure::line(2, [(0, 1), (1, 1)]).unwrap());
        assert!(DiscreteMeasure::from_json(r#"{"dim":1,"n":2,"atoms":[[[0,1],1]]}"#).is_err());
    }
}
