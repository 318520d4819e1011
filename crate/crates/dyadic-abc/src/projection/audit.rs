use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{measure_hypotheses, slopes, tube, LemmaParams};
use crate::error::Result;
use crate::measure::DiscreteMeasure;
use crate::params::Dyadic;

/// Range `(k_min, k_max)` of slopes `c = k 2^-c_exp`, `|c| <= 1`, for which the grid
/// points `p, q` share a tube `π_c^-1(I)` with `I` a grid cell; `None` if there is none.
pub fn common_tube_range(p: [i64; 2], q: [i64; 2], c_exp: u32) -> Option<(i64, i64)> {
    let one = 1i64 << c_exp;
    let mut out: Option<(i64, i64)> = None;
    for k in -one..=one {
        let c = Dyadic::new(k, c_exp);
        if tube(c, p, 0) == tube(c, q, 0) {
            out = Some(out.map_or((k, k), |(lo, _)| (lo, k)));
        }
    }
    out
}

/// Checks on the near/far split of pairs of atoms.
#[derive(Clone, Debug, Serialize)]
pub struct NearFarReport {
    /// `(μ×μ)(|p - q| < 10Δ) / (𝐂 Δ^(γ_A+γ_B))`.
    pub near_ratio: f64,
    /// `max ν(I(p, q)) / (𝐂 Δ^(γ-ξ))` over the far pairs examined.
    pub far_ratio: f64,
    pub far_pairs: usize,
    /// Far pairs sharing a tube with `|p_y - q_y| <= Δ`; the geometry says none exist.
    pub horizontal_pairs: usize,
}

/// Audits both halves of the averaged `L²` argument at resolution `n = μ.n()`.
///
/// All pairs are used when the support has at most `pair_budget.sqrt()` atoms, otherwise
/// `pair_budget` pairs are drawn from a stream seeded with `seed`.
pub fn near_far_audit(
    mu2: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    params: &LemmaParams,
    pair_budget: usize,
    seed: u64,
) -> Result<NearFarReport> {
    let n = mu2.n();
    let m = measure_hypotheses(mu2, nu, n, params.gamma)?;
    let nf = n as f64;
    let atoms = mu2.atoms();
    let t2 = (mu2.total() as f64).powi(2);
    let cs = slopes(nu)?;

    // near part: exact over all pairs inside a 10Δ ball, via a sweep in x
    let mut near = 0u128;
    let mut by_x: Vec<_> = atoms.to_vec();
    by_x.sort_unstable_by_key(|a| a.0);
    for (i, &(p, wp)) in by_x.iter().enumerate() {
        for &(q, wq) in &by_x[i..] {
            if q[0] - p[0] >= 10 {
                break;
            }
            let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
            if dx * dx + dy * dy < 100 {
                let w = wp as u128 * wq as u128;
                near += if p == q { w } else { 2 * w };
            }
        }
    }
    let near_scale = params.constant * (-nf * (m.gamma_a + m.gamma_b)).exp2();
    let near_ratio = near as f64 / t2 / near_scale;

    // far part
    let far_scale = params.constant * (-nf * (params.gamma - params.xi)).exp2();
    let (mut far_ratio, mut far_pairs, mut horizontal) = (0f64, 0usize, 0usize);
    let mut visit = |p: [i64; 2], q: [i64; 2]| {
        let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
        if dx * dx + dy * dy < 100 {
            return;
        }
        far_pairs += 1;
        let mass: u64 = cs
            .iter()
            .filter(|(c, _)| tube(*c, p, 0) == tube(*c, q, 0))
            .map(|x| x.1)
            .sum();
        if mass > 0 && dy.abs() <= 1 {
            horizontal += 1;
        }
        far_ratio = far_ratio.max(nu.mass(mass) / far_scale);
    };
    let len = atoms.len();
    if len * len <= pair_budget {
        for i in 0..len {
            for j in i + 1..len {
                visit(atoms[i].0, atoms[j].0);
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..pair_budget {
            let (i, j) = (rng.random_range(0..len), rng.random_range(0..len));
            visit(atoms[i].0, atoms[j].0);
        }
    }
    Ok(NearFarReport {
        near_ratio,
        far_ratio,
        far_pairs,
        horizontal_pairs: horizontal,
    })
}
