use serde::Serialize;

use super::DiscreteMeasure;
use crate::error::{Error, Result};

/// `ν̄ = ν ∗ (-ν)`, supported in `[-1, 1]`.
pub fn symmetrize(nu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    if nu.dim() != 1 {
        return Err(Error::Precondition("symmetrize needs a line measure".into()));
    }
    nu.total()
        .checked_mul(nu.total())
        .ok_or(Error::Overflow("symmetrized weight"))?;
    let atoms = nu
        .atoms()
        .iter()
        .flat_map(|&(a, wa)| nu.atoms().iter().map(move |&(b, wb)| ([a[0] - b[0], 0], wa * wb)))
        .collect();
    DiscreteMeasure::new(1, nu.n(), atoms)
}

/// Worst case of `ν̄(B(x, r)) <= 4 ν̄(B(0, r)) <= 4 sup_y ν(B(y, r))` over dyadic radii.
#[derive(Clone, Debug, Serialize)]
pub struct Form2Report {
    /// `max_{x, r} ν̄(B(x,r)) / ν̄(B(0,r))`.
    pub worst_ratio: f64,
    /// `max_r ν̄(B(0,r)) / sup_y ν(B(y,r))`, at most 1.
    pub worst_origin_ratio: f64,
    pub holds: bool,
}

/// Largest total weight inside an open ball `|k - x| < rad` over all real `x`: any run of
/// grid points spanning at most `2 rad - 1` fits in one.
fn max_window(atoms: &[(i64, u64)], rad: i64) -> u64 {
    let (mut best, mut cur, mut lo) = (0, 0, 0);
    for hi in 0..atoms.len() {
        cur += atoms[hi].1;
        while atoms[hi].0 - atoms[lo].0 > 2 * rad - 1 {
            cur -= atoms[lo].1;
            lo += 1;
        }
        best = best.max(cur);
    }
    best
}

/// Audits the doubling property of `ν̄` with open balls `B(x, 2^-j)`, `j = 0..=n`, `x` real.
///
/// Splitting the line into half-open intervals `J_i` of length `r`, Cauchy-Schwarz gives
/// `ν̄(B(x,r)) <= 3 Σ ν(J_i)² <= 3 ν̄(B(0,r))`; the audit checks the stated constant 4.
pub fn form2_audit(nu: &DiscreteMeasure) -> Result<Form2Report> {
    let bar = symmetrize(nu)?;
    let pts: Vec<(i64, u64)> = bar.atoms().iter().map(|&(c, w)| (c[0], w)).collect();
    let raw: Vec<(i64, u64)> = nu.atoms().iter().map(|&(c, w)| (c[0], w)).collect();
    let (mut worst, mut worst0) = (0f64, 0f64);
    for j in 0..=nu.n() {
        let rad = 1i64 << (nu.n() - j);
        let at0: u64 = pts
            .iter()
            .filter(|(k, _)| k.abs() < rad)
            .map(|p| p.1)
            .sum();
        let top = max_window(&pts, rad);
        worst = worst.max(top as f64 / at0 as f64);
        let sup_nu = max_window(&raw, rad) as f64 / nu.total() as f64;
        worst0 = worst0.max(bar.mass(at0) / sup_nu);
    }
    Ok(Form2Report {
        worst_ratio: worst,
        worst_origin_ratio: worst0,
        holds: worst <= 4.0 && worst0 <= 1.0 + 1e-12,
    })
}
