use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::{f, Table};
use super::seeds::{SeedStreams, Stream};
use super::{ExperimentConfig, Family};
use crate::dyadic::{gen_ap, gen_random, gen_uniform_tree, DeltaSet, Placement, SumsetKernel};
use crate::error::Result;
use crate::params::{Dyadic, ScaleSpec};
use crate::uniform::BranchingProfile;

/// Default number of coefficients examined per sweep point.
pub const SAMPLE_LIMIT: usize = 10_000;

/// Expansion exponents `log2 |A + cB|_δ / n - ᾱ` at one `(δ, γ)` sweep point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpansionRecord {
    /// `δ = 2^-delta_exp`.
    pub delta_exp: u32,
    pub gamma: f64,
    pub alpha_bar: f64,
    pub beta_1: f64,
    pub size_a: usize,
    pub size_b: usize,
    pub size_c: usize,
    /// Whether `per_c` covers a seeded sample of `C` rather than all of it.
    pub sampled: bool,
    /// `(c, exponent)` sorted by `c`.
    pub per_c: Vec<(Dyadic, f64)>,
    pub best_c: Dyadic,
    pub best_exponent: f64,
    pub median: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Sweep output with the disclosures needed to reproduce it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub seed: u64,
    pub family: Family,
    pub sample_limit: usize,
    pub notes: Vec<String>,
    pub records: Vec<ExpansionRecord>,
}

/// Regular profile at `m = 1` with `⌊κ n⌉` branching levels spread evenly.
fn regular(levels: usize, kappa: f64) -> Result<BranchingProfile> {
    BranchingProfile::regular(1, levels, kappa)
}

/// Instance `(A, B, C)` at resolution `n` for one sweep point.
pub fn sweep_instance(
    config: &ExperimentConfig,
    n: u32,
    gamma: f64,
    streams: &SeedStreams,
    point: u64,
) -> Result<(DeltaSet, DeltaSet, DeltaSet)> {
    let p = &config.params;
    let levels = n as usize;
    let spec = ScaleSpec::new(1, 1, n)?;
    let pb = regular(levels, p.kappa)?;
    let b = gen_uniform_tree(&spec, &pb, Placement::Random(streams.seed(Stream::SweepB, point)))?;
    let a_size = (p.alpha * n as f64).round().exp2() as u64;
    let seed_a = streams.seed(Stream::SweepA, point);
    let a = match config.family {
        Family::Form87 => gen_ap(n, a_size)?,
        Family::UniformTree => gen_uniform_tree(&spec, &regular(levels, p.alpha)?, Placement::Random(seed_a))?,
        Family::RandomFrostman => gen_random(n, a_size as usize, seed_a)?,
        Family::P1p2Tree => {
            // A branches fully wherever B does, the remaining budget spread over the rest
            let full: usize = pb.r().iter().filter(|&&r| r > 1).count();
            let rest = levels - full;
            let want = (p.alpha * n as f64).round() as usize;
            let extra = want.saturating_sub(full).min(rest);
            let mut taken = 0;
            let mut free = 0;
            let r: Vec<u64> = pb
                .r()
                .iter()
                .map(|&rb| {
                    if rb > 1 {
                        return 2;
                    }
                    free += 1;
                    if taken * rest < extra * free {
                        taken += 1;
                        2
                    } else {
                        1
                    }
                })
                .collect();
            gen_uniform_tree(&spec, &BranchingProfile::new(1, r)?, Placement::Random(seed_a))?
        }
    };
    // C is a Cantor-type set: left-packed, so its points have few nonzero digits
    let c = gen_uniform_tree(&spec, &regular(levels, gamma)?, Placement::LeftPacked)?;
    Ok((a, b, c))
}

fn median(sorted: &[f64]) -> f64 {
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    }
}

/// Per-`c` expansion exponents of `(A, B)` over the coefficient set `C`.
pub fn expansion_record(
    a: &DeltaSet,
    b: &DeltaSet,
    c: &DeltaSet,
    gamma: f64,
    limit: usize,
    streams: &SeedStreams,
    point: u64,
) -> Result<ExpansionRecord> {
    let n = a.n();
    let nf = n as f64;
    let alpha_bar = (a.len() as f64).log2() / nf;
    let (coeffs, sampled): (Vec<u64>, bool) = if c.len() <= limit {
        (c.indices().to_vec(), false)
    } else {
        let mut rng = streams.rng(Stream::SweepSample, point);
        let mut pick: Vec<u64> = sample(&mut rng, c.len(), limit)
            .into_iter()
            .map(|i| c.indices()[i])
            .collect();
        pick.sort_unstable();
        (pick, true)
    };
    let kernel = SumsetKernel::new(a);
    let per_c: Vec<(Dyadic, f64)> = coeffs
        .par_iter()
        .map(|&k| {
            let x = Dyadic::from_index(k, c.n());
            (x, (kernel.count(x, b) as f64).log2() / nf - alpha_bar)
        })
        .collect();
    let mut values: Vec<f64> = per_c.iter().map(|p| p.1).collect();
    values.sort_by(f64::total_cmp);
    let (best_c, best_exponent) = per_c
        .iter()
        .fold(per_c[0], |acc, &p| if p.1 > acc.1 { p } else { acc });
    Ok(ExpansionRecord {
        delta_exp: n,
        gamma,
        alpha_bar,
        beta_1: (b.len() as f64).log2() / nf,
        size_a: a.len(),
        size_b: b.len(),
        size_c: c.len(),
        sampled,
        best_c,
        best_exponent,
        median: median(&values),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        min: values[0],
        max: values[values.len() - 1],
        per_c,
    })
}

/// Runs every `(δ, γ)` point of the configuration.
pub fn run_expansion_sweep(config: &ExperimentConfig) -> Result<SweepReport> {
    config.validate()?;
    let streams = SeedStreams::new(config.seed);
    let limit = config.sample_limit.unwrap_or(SAMPLE_LIMIT);
    let mut points = Vec::new();
    for &n in &config.delta_exponents {
        for &g in &config.gammas {
            points.push((n, g));
        }
    }
    points.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let records = points
        .iter()
        .enumerate()
        .map(|(i, &(n, g))| {
            let (a, b, c) = sweep_instance(config, n, g, &streams, i as u64)?;
            expansion_record(&a, &b, &c, g, limit, &streams, i as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut notes = vec![format!(
        "B: random {}-regular tree; C: left-packed gamma-regular tree; nu = counting measure on C",
        config.params.kappa
    )];
    if config.family == Family::Form87 {
        notes.push("A is an arithmetic progression: a heuristic worst case, not a proven one".into());
    }
    if records.iter().any(|r| r.sampled) {
        notes.push(format!("coefficients sampled without replacement, {limit} per point"));
    }
    Ok(SweepReport {
        seed: config.seed,
        family: config.family,
        sample_limit: limit,
        notes,
        records,
    })
}

/// Summary rows, one per sweep point.
pub fn sweep_table(r: &SweepReport) -> Table {
    let mut t = Table::new(&[
        "delta_exp", "gamma", "alpha_bar", "beta_1", "size_a", "size_b", "size_c", "sampled",
        "n_coeffs", "median", "mean", "min", "max", "best_c", "best_exponent",
    ]);
    for x in &r.records {
        t.push(vec![
            x.delta_exp.to_string(),
            f(x.gamma),
            f(x.alpha_bar),
            f(x.beta_1),
            x.size_a.to_string(),
            x.size_b.to_string(),
            x.size_c.to_string(),
            x.sampled.to_string(),
            x.per_c.len().to_string(),
            f(x.median),
            f(x.mean),
            f(x.min),
            f(x.max),
            x.best_c.to_string(),
            f(x.best_exponent),
        ]);
    }
    t
}

/// Long form, one row per `(δ, γ, c)`.
pub fn sweep_detail_table(r: &SweepReport) -> Table {
    let mut t = Table::new(&["delta_exp", "gamma", "c", "exponent"]);
    for x in &r.records {
        for (c, e) in &x.per_c {
            t.push(vec![x.delta_exp.to_string(), f(x.gamma), c.to_string(), f(*e)]);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParameterSet;

    fn config(n: u32, gammas: Vec<f64>) -> ExperimentConfig {
        ExperimentConfig {
            params: ParameterSet::new(0.5, 0.25, 0.8, 0.25, 0.1, 0.1),
            family: Family::Form87,
            delta_exponents: vec![n],
            gammas,
            nu: Default::default(),
            seed: 3,
            sample_limit: Some(50),
            outputs: Default::default(),
        }
    }

    #[test]
    fn degenerate_b() {
        let a = gen_ap(8, 16).unwrap();
        let b = DeltaSet::new(8, 1, vec![0]).unwrap();
        let c = DeltaSet::full(4).unwrap();
        let s = SeedStreams::new(0);
        let r = expansion_record(&a, &b, &c, 1.0, 100, &s, 0).unwrap();
        assert!(r.per_c.iter().all(|p| p.1 == 0.0));
        assert!(!r.sampled);
    }

    #[test]
    fn full_b_nearly_fills() {
        // A = step-16 progression, B = all of [0,1): A + cB is an interval for c >= 1/16
        let a = gen_ap(10, 64).unwrap();
        let b = DeltaSet::full(10).unwrap();
        let c = DeltaSet::new(4, 1, vec![8]).unwrap();
        let r = expansion_record(&a, &b, &c, 1.0, 100, &SeedStreams::new(0), 0).unwrap();
        let want = ((1008f64 + 512.0).log2()) / 10.0 - 0.6;
        assert!((r.best_exponent - want).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn sweep_is_sorted_and_reproducible() {
        let c = config(10, vec![0.9, 0.3]);
        let r1 = run_expansion_sweep(&c).unwrap();
        let r2 = run_expansion_sweep(&c).unwrap();
        assert_eq!(r1.records.len(), 2);
        assert!(r1.records[0].gamma < r1.records[1].gamma);
        assert_eq!(
            sweep_detail_table(&r1).to_csv_string().unwrap(),
            sweep_detail_table(&r2).to_csv_string().unwrap()
        );
        for x in &r1.records {
            assert!(x.per_c.windows(2).all(|w| w[0].0 < w[1].0));
            assert!(x.per_c.iter().all(|p| p.1 >= -x.alpha_bar && p.1 <= 1.0 - x.alpha_bar + 1.0 / 10.0));
        }
        assert!(r1.records[1].sampled);
    }

    #[test]
    fn translation_invariance() {
        let s = SeedStreams::new(1);
        let (a, b, c) = sweep_instance(&config(10, vec![0.5]), 10, 0.5, &s, 0).unwrap();
        let t = a.translate(1 << 10).unwrap();
        let r = expansion_record(&a, &b, &c, 0.5, 100, &s, 0).unwrap();
        let rt = expansion_record(&t, &b, &c, 0.5, 100, &s, 0).unwrap();
        for (x, y) in r.per_c.iter().zip(&rt.per_c) {
            assert_eq!(x.1, y.1);
        }
    }
}
