use serde::Serialize;

use crate::params::{le_pow2, lt_pow2, Exponent};

/// A `(P1)/(P2)` pair and a `Γ` for which no good level exists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NumerologyException {
    pub m: u32,
    pub levels: usize,
    pub r_a: Vec<u64>,
    pub r_b: Vec<u64>,
    /// `Γ = gamma_eighths / 8`.
    pub gamma_eighths: u32,
}

/// Outcome of the exhaustive scan.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NumerologyReport {
    pub pairs: u64,
    /// `(pair, Γ)` combinations with `Γ > (α - β)/(1 - β)` that were checked.
    pub checks: u64,
    pub exceptions: Vec<NumerologyException>,
}

/// Scans every `(P1)/(P2)` profile pair with `m <= max_m`, `N <= max_levels`.
///
/// `B` branches fully on a set `F` of levels and trivially elsewhere; `A` is full on
/// `F` and arbitrary off it. With `α = log|A|/(mN)` and `β = |F|/N < 1`, each
/// `Γ = k/8 > (α - β)/(1 - β)` must admit a level with `R_B(s) = 1` and
/// `R_A(s) <= 2^(Γ m)`. Every comparison is exact.
pub fn numerology_scan(max_m: u32, max_levels: usize) -> NumerologyReport {
    let mut report = NumerologyReport::default();
    for m in 1..=max_m {
        for levels in 1..=max_levels {
            scan_shape(m, levels, &mut report);
        }
    }
    report
}

fn scan_shape(m: u32, levels: usize, report: &mut NumerologyReport) {
    let full = 1u64 << m;
    for mask in 0u32..(1 << levels) {
        let f = mask.count_ones() as usize;
        if f == levels {
            continue;
        }
        let free: Vec<usize> = (0..levels).filter(|s| mask & (1 << s) == 0).collect();
        // odometer over R_A on the free levels
        let mut ra = vec![full; levels];
        for &s in &free {
            ra[s] = 1;
        }
        loop {
            report.pairs += 1;
            check_pair(m, levels, mask, &ra, &free, report);
            let mut i = 0;
            while i < free.len() && ra[free[i]] == full {
                ra[free[i]] = 1;
                i += 1;
            }
            if i == free.len() {
                break;
            }
            ra[free[i]] += 1;
        }
    }
}

fn check_pair(
    m: u32,
    levels: usize,
    mask: u32,
    ra: &[u64],
    free: &[usize],
    report: &mut NumerologyReport,
) {
    let size: u128 = ra.iter().map(|&v| v as u128).product();
    let f = levels - free.len();
    let m = m as i64;
    for k in 1..=8u32 {
        // k/8 > (log|A| - f m)/((N - f) m)  <=>  |A| < 2^((k (N-f) m + 8 f m)/8)
        let e = Exponent::new(k as i64 * (levels - f) as i64 * m + 8 * f as i64 * m, 8);
        if !lt_pow2(size, &e) {
            continue;
        }
        report.checks += 1;
        let cap = Exponent::new(k as i64 * m, 8);
        if !free.iter().any(|&s| le_pow2(ra[s] as u128, &cap)) {
            report.exceptions.push(NumerologyException {
                m: m as u32,
                levels,
                r_a: ra.to_vec(),
                r_b: (0..levels)
                    .map(|s| if mask & (1 << s) != 0 { 1 << m } else { 1 })
                    .collect(),
                gamma_eighths: k,
            });
        }
    }
}
