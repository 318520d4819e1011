use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::{f, Table};
use super::seeds::{SeedStreams, Stream};
use crate::dyadic::{gen_uniform_tree, DeltaSet, Placement};
use crate::error::{Error, Result};
use crate::measure::{entropy_of_weights, C_CORR};
use crate::params::{Dyadic, ParameterSet, ScaleSpec};
use crate::uniform::{
    audit_branching_floor, audit_lemma5, classify_low_high, extend_intervals, is_uniform,
    lift_intervals, polarisation_check, prune_separation_1, prune_separation_2, trivial_intervals,
    BranchingProfile, Interval, IntervalFamily, Tag,
};

/// `log2 C₀`, the frozen budget for the averaged projection constant.
pub const C0_LOG2: f64 = 10.0;
/// Non-concentration constant allowed for `ν` at each low scale.
pub const FROSTMAN_BUDGET: f64 = 40.0;

/// Shape of a generated assembly instance (always `m = 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssemblyConfig {
    pub ell: u32,
    pub n_coarse: u32,
    pub zeta: f64,
    pub eta: f64,
    /// Coarse level on which `B` branches (on its first `ell - 1` scales).
    pub b_block: usize,
    /// Whether `A` also branches on the last scale of that block.
    pub a_full_block: bool,
    /// Number of further scales, outside the block, on which `A` branches.
    pub a_extra: usize,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            ell: 8,
            n_coarse: 2,
            zeta: 0.125,
            eta: 0.125,
            b_block: 0,
            a_full_block: false,
            a_extra: 1,
        }
    }
}

impl AssemblyConfig {
    /// The `i`-th member of the seeded family: `ell` in `{8, 9}`, one in five
    /// instances with `B` branching late (so no low interval), varying `A`.
    pub fn seeded(i: u64) -> Self {
        AssemblyConfig {
            ell: 8 + (i % 2) as u32,
            b_block: usize::from(i % 5 == 4),
            a_full_block: (i / 2) % 2 == 1,
            a_extra: ((i / 4) % 2) as usize,
            ..Default::default()
        }
    }
}

/// One block of the partition with its guaranteed and measured entropy.
#[derive(Clone, Debug, Serialize)]
pub struct BlockReport {
    pub interval: Interval,
    pub lo_bits: u32,
    pub hi_bits: u32,
    pub log2_ra: f64,
    pub log2_rb: f64,
    /// Useless: `log2 R_A - 1` for every `c` and `Q`. Low: `log2 R_A + ξζm|J| - log2 𝐂 - log2 C₀`
    /// for the `ν`-average of every `Q`.
    pub lower_bound: f64,
    /// Smallest value of the bounded quantity over `Q` (and `c` for useless blocks).
    pub measured_min: f64,
    /// `∫ Σ_Q μ(Q) H(π_c μ^Q) dν(c)`.
    pub measured_mean: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssemblyReport {
    pub config: Option<AssemblyConfig>,
    pub seed: u64,
    pub m: u32,
    pub ell: u32,
    pub n_coarse: u32,
    pub n: u32,
    pub size_a: usize,
    pub size_b: usize,
    pub size_b_pruned: usize,
    pub params: ParameterSet,
    pub gamma_cap: f64,
    pub xi: f64,
    pub prune1_changed: bool,
    pub family: IntervalFamily,
    pub collapsed: Vec<usize>,
    pub branching_floor_violations: usize,
    pub lemma5_violations: usize,
    pub low_length: usize,
    pub low_length_bound: f64,
    /// `ν` is the counting measure on `{k 2^-nu_exp}`.
    pub nu_exp: u32,
    pub nu_constant: f64,
    pub cuts: Vec<u32>,
    pub blocks: Vec<BlockReport>,
    /// `(c, H(π_c μ, D_n), Σ_j Σ_Q μ(Q) H(π_c μ^Q))`.
    pub per_c: Vec<(Dyadic, f64, f64)>,
    pub chain_violations: usize,
    pub average_entropy: f64,
    /// `Σ_P lower_bound(P) - h C_CORR`.
    pub assembly_rhs: f64,
    pub assembly_holds: bool,
    pub best_c: Dyadic,
    pub best_entropy: f64,
    pub log2_size_a: f64,
    pub beats_alpha_bar: bool,
    /// `target n - h (log2 40 + log2 C₀)`.
    pub target_level: f64,
    pub achieves_target: bool,
}

impl AssemblyReport {
    pub fn has_low(&self) -> bool {
        self.low_length > 0
    }

    pub fn per_interval_holds(&self) -> bool {
        self.blocks.iter().all(|b| b.holds)
    }

    /// Every inequality and audit that must hold on a valid instance.
    pub fn holds(&self) -> bool {
        self.chain_violations == 0
            && self.per_interval_holds()
            && self.assembly_holds
            && self.branching_floor_violations == 0
            && self.lemma5_violations == 0
            && self.nu_constant <= FROSTMAN_BUDGET
    }
}

fn hypothesis(msg: impl Into<String>) -> Error {
    Error::Hypothesis(msg.into())
}

/// Builds the instance described by `cfg` and runs the assembly on it.
pub fn run_final_assembly(cfg: &AssemblyConfig, seed: u64) -> Result<AssemblyReport> {
    let streams = SeedStreams::new(seed);
    let spec = ScaleSpec::new(1, cfg.ell, cfg.n_coarse)?;
    let levels = spec.levels();
    let ell = cfg.ell as usize;
    if cfg.b_block >= cfg.n_coarse as usize || ell < 2 {
        return Err(Error::Precondition("B block outside [N] or ell < 2".into()));
    }
    let block = ell * cfg.b_block..ell * (cfg.b_block + 1);
    let mut rb = vec![1u64; levels];
    for r in &mut rb[block.start..block.end - 1] {
        *r = 2;
    }
    let mut ra = rb.clone();
    if cfg.a_full_block {
        ra[block.end - 1] = 2;
    }
    let outside: Vec<usize> = (0..levels).filter(|s| !block.contains(s)).collect();
    if cfg.a_extra > outside.len() {
        return Err(Error::Precondition("a_extra exceeds the free scales".into()));
    }
    let mut rng = streams.rng(Stream::AssemblyShape, 0);
    for i in sample(&mut rng, outside.len(), cfg.a_extra) {
        ra[outside[i]] = 2;
    }
    let a = gen_uniform_tree(
        &spec,
        &BranchingProfile::new(1, ra)?,
        Placement::Random(streams.seed(Stream::AssemblyA, 0)),
    )?;
    // left-packed: the unused last scale keeps coarse children apart
    let b = gen_uniform_tree(&spec, &BranchingProfile::new(1, rb)?, Placement::LeftPacked)?;
    let mut report = run_assembly_on(&a, &b, &spec, cfg.zeta, cfg.eta)?;
    report.config = Some(cfg.clone());
    report.seed = seed;
    Ok(report)
}

/// Points grouped by their level-`lo` cell, in local coordinates of that cell.
fn group(pts: &[u64], n: u32, lo: u32) -> Vec<Vec<u64>> {
    let s = n - lo;
    let mut out: Vec<Vec<u64>> = Vec::new();
    let mut last = None;
    for &p in pts {
        let cell = p >> s;
        if last != Some(cell) {
            out.push(Vec::new());
            last = Some(cell);
        }
        out.last_mut().expect("pushed").push(p - (cell << s));
    }
    out
}

/// `H(π_c (μ_a × μ_b), D_k)` for counting measures, cells read off after `>> shift`.
fn piece_entropy(a: &[u64], b: &[u64], c: Dyadic, shift: u32, buf: &mut Vec<u64>) -> f64 {
    buf.clear();
    for &y in b {
        let t = c.floor_mul(y as i64) as u64;
        buf.extend(a.iter().map(|&x| (x + t) >> shift));
    }
    buf.sort_unstable();
    let total = buf.len() as u64;
    entropy_of_weights(buf.chunk_by(|x, y| x == y).map(|r| r.len() as u64), total)
}

/// `max_I ν(I) 2^j` over level-`j` cells, for `ν` uniform on `{k 2^-e}`, `k < 2^e`.
fn nu_constant_at(e: u32, j: u32) -> f64 {
    if j >= e {
        (j - e) as f64
    } else {
        0.0
    }
    .exp2()
}

/// Runs pruning, extension, classification and the `ν`-averaged entropy chain on
/// the pair `(A, B)`; both must be uniform at scale `spec.m` over `ell N` scales.
pub fn run_assembly_on(
    a: &DeltaSet,
    b: &DeltaSet,
    spec: &ScaleSpec,
    zeta: f64,
    eta: f64,
) -> Result<AssemblyReport> {
    let (m, ell) = (spec.m, spec.ell as usize);
    let levels = spec.levels();
    let n = spec.n();
    let pa = is_uniform(a, m, levels)?.ok_or_else(|| hypothesis("A is not uniform"))?;
    let pb = is_uniform(b, m, levels)?.ok_or_else(|| hypothesis("B is not uniform"))?;
    let (ok, bad) = polarisation_check(&pa.aggregate(ell)?, &pb.aggregate(ell)?, eta)?;
    if !ok {
        return Err(hypothesis(format!("pair not polarised at coarse levels {bad:?}")));
    }
    let (b2, _) = prune_separation_1(b, m * ell as u32, spec.n_coarse as usize)?;
    let pb2 = is_uniform(&b2, m, levels)?
        .ok_or_else(|| hypothesis("separated B is not uniform at the fine scale"))?;

    let nf = n as f64;
    let alpha_bar = (a.len() as f64).log2() / nf;
    let beta_1 = (b2.len() as f64).log2() / nf;
    let params = ParameterSet::new(alpha_bar, beta_1, 1.0, beta_1, eta, zeta);
    params.validate()?;
    let xi = params.xi();

    let lifted = lift_intervals(&trivial_intervals(&pb2.aggregate(ell)?), ell);
    let extended = extend_intervals(&pb2, &lifted, zeta, ell)?;
    let family = classify_low_high(&extended, &pa, params.gamma_cap_exact());
    let pruned = prune_separation_2(&b2, &family, xi, &pb2)?;
    let floor_bad = audit_branching_floor(&pruned.profile, &family, xi, zeta).len();
    let lemma5_bad = audit_lemma5(&pruned.set, m, &family, xi).len();

    let partition = family.low_partition(levels);
    let lows: Vec<&Interval> = partition.iter().filter(|i| i.tag == Tag::Low).collect();
    let low_length: usize = lows.iter().map(|i| i.len()).sum();
    let max_low_bits = lows.iter().map(|i| m * i.len() as u32).max().unwrap_or(0);
    // the coarsest ν whose atoms stay within the budget at every low scale
    let nu_exp = max_low_bits.saturating_sub(5).clamp(4.min(n), n);
    let nu_constant = lows
        .iter()
        .map(|i| nu_constant_at(nu_exp, m * i.len() as u32))
        .fold(1.0, f64::max);
    let log2_c = nu_constant.log2();

    let mut cuts: Vec<u32> = partition.iter().map(|i| m * i.lo as u32).collect();
    cuts.push(n);
    let h = partition.len();
    let bpts = pruned.set.indices();
    let apts = a.indices();
    let groups: Vec<(Vec<Vec<u64>>, Vec<Vec<u64>>)> = cuts[..h]
        .iter()
        .map(|&lo| (group(apts, n, lo), group(bpts, n, lo)))
        .collect();
    let weights: Vec<Vec<f64>> = groups
        .iter()
        .map(|(ga, gb)| {
            let t = (apts.len() * bpts.len()) as f64;
            ga.iter()
                .flat_map(|x| gb.iter().map(move |y| (x.len() * y.len()) as f64 / t))
                .collect()
        })
        .collect();

    let coeffs: Vec<Dyadic> = (0..1u64 << nu_exp).map(|k| Dyadic::from_index(k, nu_exp)).collect();
    // per c: full entropy and per-block per-piece entropies
    let evals: Vec<(f64, Vec<Vec<f64>>)> = coeffs
        .par_iter()
        .map(|&c| {
            let mut buf = Vec::new();
            let lhs = piece_entropy(apts, bpts, c, 0, &mut buf);
            let blocks = groups
                .iter()
                .enumerate()
                .map(|(j, (ga, gb))| {
                    let shift = n - cuts[j + 1];
                    ga.iter()
                        .flat_map(|x| gb.iter().map(move |y| (x, y)))
                        .map(|(x, y)| piece_entropy(x, y, c, shift, &mut buf))
                        .collect()
                })
                .collect();
            (lhs, blocks)
        })
        .collect();

    let correction = h as f64 * C_CORR;
    let per_c: Vec<(Dyadic, f64, f64)> = coeffs
        .iter()
        .zip(&evals)
        .map(|(&c, (lhs, blocks))| {
            let rhs = blocks
                .iter()
                .zip(&weights)
                .map(|(hs, ws)| hs.iter().zip(ws).map(|(h, w)| h * w).sum::<f64>())
                .sum();
            (c, *lhs, rhs)
        })
        .collect();
    let chain_violations = per_c
        .iter()
        .filter(|(_, l, r)| *l < r - correction - 1e-9)
        .count();

    let k = coeffs.len() as f64;
    let blocks: Vec<BlockReport> = partition
        .iter()
        .enumerate()
        .map(|(j, iv)| {
            let log2_ra = (pa.interval_product(iv.lo, iv.hi) as f64).log2();
            let log2_rb = (pruned.profile.interval_product(iv.lo, iv.hi) as f64).log2();
            let pieces = weights[j].len();
            let avg: Vec<f64> = (0..pieces)
                .map(|q| evals.iter().map(|e| e.1[j][q]).sum::<f64>() / k)
                .collect();
            let measured_mean = avg.iter().zip(&weights[j]).map(|(h, w)| h * w).sum();
            let (lower_bound, measured_min) = if iv.tag == Tag::Low {
                let gain = xi * zeta * (m as usize * iv.len()) as f64;
                (
                    log2_ra + gain - log2_c - C0_LOG2,
                    avg.iter().copied().fold(f64::INFINITY, f64::min),
                )
            } else {
                (
                    log2_ra - 1.0,
                    evals
                        .iter()
                        .flat_map(|e| e.1[j].iter().copied())
                        .fold(f64::INFINITY, f64::min),
                )
            };
            BlockReport {
                interval: *iv,
                lo_bits: cuts[j],
                hi_bits: cuts[j + 1],
                log2_ra,
                log2_rb,
                lower_bound,
                measured_min,
                measured_mean,
                holds: measured_min >= lower_bound - 1e-9,
            }
        })
        .collect();

    let average_entropy = per_c.iter().map(|p| p.1).sum::<f64>() / k;
    let assembly_rhs = blocks.iter().map(|b| b.lower_bound).sum::<f64>() - correction;
    let (best_c, best_entropy) = per_c
        .iter()
        .fold((per_c[0].0, per_c[0].1), |acc, p| if p.1 > acc.1 { (p.0, p.1) } else { acc });
    let log2_size_a = (a.len() as f64).log2();
    let target_level = params.assembly_target(alpha_bar) * nf
        - h as f64 * (FROSTMAN_BUDGET.log2() + C0_LOG2);
    Ok(AssemblyReport {
        config: None,
        seed: 0,
        m,
        ell: spec.ell,
        n_coarse: spec.n_coarse,
        n,
        size_a: a.len(),
        size_b: b.len(),
        size_b_pruned: bpts.len(),
        gamma_cap: params.gamma_cap(),
        xi,
        low_length_bound: params.low_fraction() * levels as f64,
        params,
        prune1_changed: b2 != *b,
        family,
        collapsed: pruned.collapsed,
        branching_floor_violations: floor_bad,
        lemma5_violations: lemma5_bad,
        low_length,
        nu_exp,
        nu_constant,
        cuts,
        chain_violations,
        average_entropy,
        assembly_holds: average_entropy >= assembly_rhs - 1e-9,
        assembly_rhs,
        blocks,
        per_c,
        best_c,
        best_entropy,
        log2_size_a,
        beats_alpha_bar: best_entropy > log2_size_a + 1e-9,
        achieves_target: best_entropy >= target_level,
        target_level,
    })
}

/// One row per partition block.
pub fn assembly_table(r: &AssemblyReport) -> Table {
    let mut t = Table::new(&[
        "lo", "hi", "tag", "lo_bits", "hi_bits", "log2_ra", "log2_rb", "lower_bound",
        "measured_min", "measured_mean", "holds",
    ]);
    for b in &r.blocks {
        let tag = serde_json::to_value(b.interval.tag)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        t.push(vec![
            b.interval.lo.to_string(),
            b.interval.hi.to_string(),
            tag,
            b.lo_bits.to_string(),
            b.hi_bits.to_string(),
            f(b.log2_ra),
            f(b.log2_rb),
            f(b.lower_bound),
            f(b.measured_min),
            f(b.measured_mean),
            b.holds.to_string(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouping_and_pieces() {
        let g = group(&[1, 2, 9, 12, 15], 4, 1);
        assert_eq!(g, vec![vec![1, 2], vec![1, 4, 7]]);
        let mut buf = Vec::new();
        // c = 1/2, b in {0, 2}: shifts 0 and 1, a in {0, 1}: values 0,1,1,2
        let h = piece_entropy(&[0, 1], &[0, 2], Dyadic::new(1, 1), 0, &mut buf);
        assert!((h - 1.5).abs() < 1e-12);
        let h = piece_entropy(&[0, 1], &[0, 2], Dyadic::new(1, 1), 1, &mut buf);
        assert!((h - (2.0 - 0.75f64 * 3f64.log2())).abs() < 1e-12);
        assert_eq!(nu_constant_at(6, 11), 32.0);
        assert_eq!(nu_constant_at(6, 3), 1.0);
    }

    #[test]
    fn default_instance_has_one_low_interval() {
        let r = run_final_assembly(&AssemblyConfig::default(), 1).unwrap();
        // B branches on scales 0..=6; extension from {8..15} stops at scale 5
        let low: Vec<_> = r.family.with_tag(Tag::Low).collect();
        assert_eq!(low.len(), 1);
        assert_eq!((low[0].lo, low[0].hi), (5, 15));
        assert_eq!(r.cuts, vec![0, 5, 16]);
        assert!(!r.prune1_changed);
        assert!(r.holds(), "{r:?}");
        assert!(r.beats_alpha_bar);
    }

    #[test]
    fn all_useless_degrades_to_branching_count() {
        let cfg = AssemblyConfig {
            b_block: 1,
            ..Default::default()
        };
        let r = run_final_assembly(&cfg, 4).unwrap();
        assert!(!r.has_low());
        assert_eq!(r.blocks.len(), 1);
        assert!((r.assembly_rhs - (r.log2_size_a - 1.0 - C_CORR)).abs() < 1e-9);
        assert!(r.holds());
    }

    #[test]
    fn generation_failures_are_reported() {
        let cfg = AssemblyConfig {
            b_block: 5,
            ..Default::default()
        };
        assert!(run_final_assembly(&cfg, 0).is_err());
        let cfg = AssemblyConfig {
            eta: 0.01,
            ..Default::default()
        };
        assert!(matches!(run_final_assembly(&cfg, 0), Err(Error::Hypothesis(_))));
    }
}
