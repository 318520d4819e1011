//! Averaged `L²` norms of projections `π_c μ` and their entropy consequences.

mod audit;

pub use audit::{common_tube_range, near_far_audit, NearFarReport};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{entropy, DiscreteMeasure};
use crate::params::Dyadic;

/// Supports above this size are refused by the quadratic pair-counting path.
pub const PAIR_COUNT_LIMIT: usize = 10_000;

/// Exact pieces of `‖(π_c μ)^(n)‖₂² = 2^n · numerator / total²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ProjectionL2 {
    pub numerator: u128,
    pub total: u64,
    pub n: u32,
}

impl ProjectionL2 {
    pub fn value(&self) -> f64 {
        let t = self.total as f64;
        self.numerator as f64 / (t * t) * (self.n as f64).exp2()
    }
}

fn check_plane(mu2: &DiscreteMeasure, n: u32) -> Result<()> {
    if mu2.dim() != 2 {
        return Err(Error::Precondition("expected a planar measure".into()));
    }
    if n > mu2.n() {
        return Err(Error::OutOfRange {
            what: "n",
            value: n as i64,
            range: format!("[0, {}]", mu2.n()),
        });
    }
    Ok(())
}

/// Level-`n` cell of `π_c(p)` for an atom `p` at resolution `res`.
fn tube(c: Dyadic, p: [i64; 2], shift: u32) -> i64 {
    c.floor_mul_shifted(p[1], p[0], shift)
}

/// First path: push forward, then sum squared cell masses.
pub fn l2_by_pushforward(mu2: &DiscreteMeasure, c: Dyadic, n: u32) -> Result<ProjectionL2> {
    check_plane(mu2, n)?;
    let proj = mu2.project(c)?;
    Ok(ProjectionL2 {
        numerator: proj.square_sum(n)?,
        total: mu2.total(),
        n,
    })
}

/// Second path: `Σ_I (μ × μ){(p, q) : p, q ∈ π_c^-1(I)}`, pair by pair.
pub fn l2_by_pairs(mu2: &DiscreteMeasure, c: Dyadic, n: u32) -> Result<ProjectionL2> {
    check_plane(mu2, n)?;
    if mu2.support_size() > PAIR_COUNT_LIMIT {
        return Err(Error::TooManyAtoms {
            atoms: mu2.support_size(),
            limit: PAIR_COUNT_LIMIT,
        });
    }
    if !c.abs_le_one() {
        return Err(Error::NotRepresentable(c.to_string(), mu2.n()));
    }
    let shift = mu2.n() - n;
    let tubes: Vec<(i64, u64)> = mu2
        .atoms()
        .iter()
        .map(|&(p, w)| (tube(c, p, shift), w))
        .collect();
    let mut numerator = 0u128;
    for &(tp, wp) in &tubes {
        for &(tq, wq) in &tubes {
            if tp == tq {
                numerator += wp as u128 * wq as u128;
            }
        }
    }
    Ok(ProjectionL2 {
        numerator,
        total: mu2.total(),
        n,
    })
}

/// `‖(π_c μ)^(n)‖₂²`, with both evaluation paths compared when the support is small enough.
pub fn l2_of_projection(mu2: &DiscreteMeasure, c: Dyadic, n: u32) -> Result<f64> {
    let a = l2_by_pushforward(mu2, c, n)?;
    if mu2.support_size() <= PAIR_COUNT_LIMIT {
        let b = l2_by_pairs(mu2, c, n)?;
        if a != b {
            return Err(Error::Hypothesis(format!(
                "pushforward and pair counts differ: {} vs {}",
                a.numerator, b.numerator
            )));
        }
    }
    Ok(a.value())
}

/// Parameters of the averaged projection bound.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LemmaParams {
    /// Non-concentration exponent of `ν`.
    pub gamma: f64,
    /// Separation exponent of the `y`-cells.
    pub xi: f64,
    /// The constant `𝐂 >= 1` in both non-concentration hypotheses.
    pub constant: f64,
}

/// Measured quantities of a pair `(μ, ν)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Measured {
    /// `log |𝒜| / n` and `log |ℬ| / n` for the occupied `x`- and `y`-cells.
    pub gamma_a: f64,
    pub gamma_b: f64,
    /// `max_Q μ(Q) Δ^-(γ_A+γ_B)`.
    pub mu_constant: f64,
    /// `max_I ν(I) Δ^-γ`.
    pub nu_constant: f64,
    /// Smallest gap between distinct `y`-cells, in cells (`None` with a single cell).
    pub min_gap: Option<u64>,
}

impl Measured {
    /// Least `𝐂 >= 1` for which both non-concentration hypotheses hold.
    pub fn constant(&self) -> f64 {
        self.mu_constant.max(self.nu_constant).max(1.0)
    }

    /// Largest separation exponent allowed by the data, clipped to `[0, 1]`.
    /// Adjacent cells (gap 0) give 1.
    pub fn xi(&self, n: u32) -> f64 {
        match self.min_gap {
            None => 0.0,
            Some(0) => 1.0,
            Some(g) => (1.0 - (g as f64).log2() / n as f64).clamp(0.0, 1.0),
        }
    }
}

fn distinct_sorted(mut v: Vec<i64>) -> Vec<i64> {
    v.sort_unstable();
    v.dedup();
    v
}

/// Measures `γ_A, γ_B`, the non-concentration constants and the `y`-separation.
pub fn measure_hypotheses(mu2: &DiscreteMeasure, nu: &DiscreteMeasure, n: u32, gamma: f64) -> Result<Measured> {
    check_plane(mu2, n)?;
    if nu.dim() != 1 {
        return Err(Error::Precondition("ν must be a line measure".into()));
    }
    let cells = mu2.coarsen(n)?;
    let xs = distinct_sorted(cells.iter().map(|c| c.0[0]).collect());
    let ys = distinct_sorted(cells.iter().map(|c| c.0[1]).collect());
    let nf = n.max(1) as f64;
    let gamma_a = (xs.len() as f64).log2() / nf;
    let gamma_b = (ys.len() as f64).log2() / nf;
    let wmax = cells.iter().map(|c| c.1).max().unwrap_or(0);
    let mu_constant = wmax as f64 * xs.len() as f64 * ys.len() as f64 / mu2.total() as f64;
    let nu_cells = nu.coarsen(n.min(nu.n()))?;
    let numax = nu_cells.iter().map(|c| c.1).max().unwrap_or(0);
    let nu_constant = nu.mass(numax) * (gamma * n as f64).exp2();
    let min_gap = ys.windows(2).map(|w| (w[1] - w[0] - 1) as u64).min();
    Ok(Measured {
        gamma_a,
        gamma_b,
        mu_constant,
        nu_constant,
        min_gap,
    })
}

/// The averaged `L²` norm against the bound `𝐂 max{Δ^(γ_A+γ_B-1), Δ^(γ-1-ξ)}`.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectionAverageReport {
    pub n: u32,
    pub params: LemmaParams,
    pub measured: Measured,
    /// `(c, ν(c), ‖(π_c μ)^(n)‖₂²)` for every atom of `ν`.
    pub per_c: Vec<(String, f64, f64)>,
    pub average: f64,
    /// `max{Δ^(γ_A+γ_B-1), Δ^(γ-1-ξ)}`.
    pub max_term: f64,
    /// `average / max_term`.
    pub fitted_constant: f64,
    /// `average / (𝐂 max_term)`: the constant hidden in the bound.
    pub normalized_constant: f64,
    /// Failed hypotheses, empty when all hold.
    pub hypothesis_failures: Vec<String>,
}

/// Atoms of `ν` as slopes `c = k 2^-n_ν`.
pub fn slopes(nu: &DiscreteMeasure) -> Result<Vec<(Dyadic, u64)>> {
    nu.atoms()
        .iter()
        .map(|&(k, w)| {
            let c = Dyadic::new(k[0], nu.n());
            if c.abs_le_one() {
                Ok((c, w))
            } else {
                Err(Error::Precondition(format!("ν has an atom at {c} outside [-1, 1]")))
            }
        })
        .collect()
}

fn audit(m: &Measured, p: &LemmaParams, n: u32) -> Vec<String> {
    let mut bad = Vec::new();
    let tol = 1.0 + 1e-9;
    if p.constant < 1.0 {
        bad.push(format!("constant {} < 1", p.constant));
    }
    if m.mu_constant > p.constant * tol {
        bad.push(format!(
            "μ(Q) <= C Δ^(γ_A+γ_B) fails: needs C >= {}",
            m.mu_constant
        ));
    }
    if m.nu_constant > p.constant * tol {
        bad.push(format!("ν(I) <= C Δ^γ fails: needs C >= {}", m.nu_constant));
    }
    if !(p.xi > 0.0 && p.xi <= 1.0) {
        bad.push(format!("ξ = {} not in (0, 1]", p.xi));
    }
    if let Some(g) = m.min_gap {
        // gap g cells means distance g Δ; need g >= Δ^(ξ-1)
        if (g as f64) < (n as f64 * (1.0 - p.xi)).exp2() * (1.0 - 1e-12) {
            bad.push(format!("y-cells {g} cells apart, below Δ^ξ at ξ = {}", p.xi));
        }
    }
    bad
}

/// `∫ ‖(π_c μ)^(n)‖₂² dν(c)` with the hypotheses audited first.
///
/// In strict mode a failed hypothesis is an error; with `exploratory` the failures are
/// recorded in the report instead.
pub fn averaged_l2(
    mu2: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    n: u32,
    params: &LemmaParams,
    exploratory: bool,
) -> Result<ProjectionAverageReport> {
    let measured = measure_hypotheses(mu2, nu, n, params.gamma)?;
    let failures = audit(&measured, params, n);
    if !failures.is_empty() && !exploratory {
        return Err(Error::Hypothesis(failures.join("; ")));
    }
    let mut per_c = Vec::new();
    let mut average = 0.0;
    for (c, w) in slopes(nu)? {
        let v = l2_by_pushforward(mu2, c, n)?.value();
        average += nu.mass(w) * v;
        per_c.push((c.to_string(), nu.mass(w), v));
    }
    let nf = n as f64;
    let max_term = (nf * (1.0 - measured.gamma_a - measured.gamma_b))
        .exp2()
        .max((nf * (1.0 + params.xi - params.gamma)).exp2());
    Ok(ProjectionAverageReport {
        n,
        params: *params,
        measured,
        per_c,
        average,
        max_term,
        fitted_constant: average / max_term,
        normalized_constant: average / (params.constant * max_term),
        hypothesis_failures: failures,
    })
}

/// `∫ H(π_c μ, D_n) dν(c)` against `n min{γ_A+γ_B, γ-ξ} - log 𝐂 - log C₀`.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectionEntropyReport {
    pub average_entropy: f64,
    pub lower_bound: f64,
    /// `-∫ log ‖·‖² dν` and `-log ∫ ‖·‖² dν`; Jensen says the first is larger.
    pub jensen: (f64, f64),
    pub best_c: String,
    pub best_entropy: f64,
    pub holds: bool,
    pub l2: ProjectionAverageReport,
}

pub fn averaged_projection_entropy(
    mu2: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    n: u32,
    params: &LemmaParams,
    c0: f64,
    exploratory: bool,
) -> Result<ProjectionEntropyReport> {
    let l2 = averaged_l2(mu2, nu, n, params, exploratory)?;
    let mut avg_h = 0.0;
    let mut neg_log = 0.0;
    let mut best = (String::new(), f64::NEG_INFINITY);
    for ((c, w), (_, _, v)) in slopes(nu)?.into_iter().zip(&l2.per_c) {
        let h = entropy(&mu2.project(c)?, n)?;
        avg_h += nu.mass(w) * h;
        neg_log -= nu.mass(w) * v.log2();
        if h > best.1 {
            best = (c.to_string(), h);
        }
    }
    let m = &l2.measured;
    let lower_bound = n as f64 * (m.gamma_a + m.gamma_b).min(params.gamma - params.xi)
        - params.constant.log2()
        - c0.log2();
    Ok(ProjectionEntropyReport {
        average_entropy: avg_h,
        lower_bound,
        jensen: (neg_log, -l2.average.log2()),
        best_c: best.0,
        best_entropy: best.1,
        holds: avg_h >= lower_bound - 1e-9,
        l2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_paths(mu: &DiscreteMeasure, c: Dyadic, n: u32) -> (u128, u128) {
        (
            l2_by_pushforward(mu, c, n).unwrap().numerator,
            l2_by_pairs(mu, c, n).unwrap().numerator,
        )
    }

    #[test]
    fn l2_examples() {
        let p = DiscreteMeasure::point_mass(2, 6, [5, 9]).unwrap();
        assert_eq!(l2_of_projection(&p, Dyadic::new(1, 1), 6).unwrap(), 64.0);
        // uniform column over x, y fixed: the projection is uniform
        let col = DiscreteMeasure::new(2, 3, (0..8).map(|x| ([x, 2], 1)).collect()).unwrap();
        assert_eq!(l2_of_projection(&col, Dyadic::zero(), 3).unwrap(), 1.0);
        // three atoms, c = 1/2: cells 1 + 0, 2 + 1, 5 + 1 -> {1, 3, 6}
        let mu = DiscreteMeasure::new(2, 3, vec![([1, 1], 1), ([2, 3], 2), ([5, 3], 1)]).unwrap();
        let (a, b) = two_paths(&mu, Dyadic::new(1, 1), 3);
        assert_eq!((a, b), (6, 6));
        let mu = DiscreteMeasure::new(2, 3, vec![([1, 1], 1), ([1, 0], 2), ([5, 3], 1)]).unwrap();
        let (a, b) = two_paths(&mu, Dyadic::new(1, 1), 3);
        assert_eq!((a, b), (10, 10));
    }

    #[test]
    fn singletons_fit_constant_one() {
        let mu = DiscreteMeasure::point_mass(2, 8, [3, 4]).unwrap();
        let nu = DiscreteMeasure::line(8, [(17, 1)]).unwrap();
        let p = LemmaParams {
            gamma: 0.0,
            xi: 1e-9,
            constant: 1.0,
        };
        let r = averaged_l2(&mu, &nu, 8, &p, false).unwrap();
        assert_eq!(r.average, 256.0);
        assert!((r.fitted_constant - 1.0).abs() < 1e-6);
    }

    #[test]
    fn point_mass_nu_gives_marginal() {
        let a = DiscreteMeasure::line(5, [(0, 1), (1, 3), (9, 2)]).unwrap();
        let b = DiscreteMeasure::line(5, [(4, 1), (20, 1)]).unwrap();
        let mu = DiscreteMeasure::product(&a, &b).unwrap();
        let nu = DiscreteMeasure::line(5, [(0, 1)]).unwrap();
        let p = LemmaParams {
            gamma: 0.5,
            xi: 0.5,
            constant: 100.0,
        };
        let r = averaged_l2(&mu, &nu, 5, &p, true).unwrap();
        assert!((r.average - a.discretize_density_l2(5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn strict_mode_refuses() {
        let a = DiscreteMeasure::line(4, [(0, 1), (1, 1)]).unwrap();
        let mu = DiscreteMeasure::product(&a, &a).unwrap();
        let nu = DiscreteMeasure::line(4, [(0, 1), (8, 1)]).unwrap();
        let p = LemmaParams {
            gamma: 0.5,
            xi: 0.5,
            constant: 1.0,
        };
        // y-cells 0 and 1 are adjacent
        assert!(averaged_l2(&mu, &nu, 4, &p, false).is_err());
        let r = averaged_l2(&mu, &nu, 4, &p, true).unwrap();
        assert!(!r.hypothesis_failures.is_empty());
        assert_eq!(r.measured.xi(4), 1.0);
    }

    #[test]
    fn entropy_and_jensen() {
        let a = DiscreteMeasure::line(6, (0..8).map(|k| (8 * k, 1))).unwrap();
        let b = DiscreteMeasure::line(6, [(0, 1), (32, 1)]).unwrap();
        let mu = DiscreteMeasure::product(&a, &b).unwrap();
        let nu = DiscreteMeasure::line(6, (0..16).map(|k| (4 * k, 1))).unwrap();
        let m = measure_hypotheses(&mu, &nu, 6, 4.0 / 6.0).unwrap();
        let p = LemmaParams {
            gamma: 4.0 / 6.0,
            xi: m.xi(6),
            constant: m.constant(),
        };
        let r = averaged_projection_entropy(&mu, &nu, 6, &p, 1024.0, false).unwrap();
        assert!(r.holds);
        assert!(r.jensen.0 >= r.jensen.1 - 1e-12);
        let p0 = DiscreteMeasure::point_mass(2, 6, [0, 0]).unwrap();
        let nu0 = DiscreteMeasure::line(6, [(0, 1)]).unwrap();
        let r = averaged_projection_entropy(&p0, &nu0, 6, &p, 1.0, true).unwrap();
        assert_eq!(r.average_entropy, 0.0);
        assert!(r.lower_bound <= 0.0);
    }
}
