use std::error::Error as StdError;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use dyadic_abc::dyadic::{
    frostman_check, gen_ap, gen_example_form87, gen_random, gen_regular_tree, gen_uniform_tree,
    DeltaSet, Placement,
};
use dyadic_abc::experiments::output::{flat_table, sig12, to_json_string, Format, Table};
use dyadic_abc::experiments::{
    assembly_table, greedy_table, ladder_table, run_doubling_ladder, run_expansion_sweep,
    run_final_assembly, run_greedy_iterated_sum, run_sharpness_form87, sharpness_table,
    sweep_detail_table, sweep_table, AssemblyConfig, ExperimentConfig,
};
use dyadic_abc::measure::{conditional_entropy, entropy, entropy_chain, DiscreteMeasure};
use dyadic_abc::params::{exact, Dyadic, ScaleSpec};
use dyadic_abc::projection::{averaged_l2, averaged_projection_entropy, measure_hypotheses, LemmaParams};
use dyadic_abc::uniform::{
    classify_low_high, extend_intervals, is_uniform, lift_intervals, prune_separation_1,
    prune_separation_2, trivial_intervals, uniformize, BranchingProfile, IntervalFamily,
};

type Res<T> = std::result::Result<T, Box<dyn StdError>>;

/// Exact computations with δ-discretised sets and measures, and the sum-product experiments.
///
/// Sets are read and written in the text format `n=<int> W=<int>` followed by one index
/// per line; measures, profiles and interval families are JSON. `-` reads standard input.
#[derive(Parser)]
#[command(name = "dyadic-abc", version)]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Format of reports; sets and measures always use their own formats.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a set or a measure.
    Gen {
        #[command(subcommand)]
        kind: Gen,
    },
    /// Covering numbers, Frostman ratios or the branching profile of a set.
    Analyze {
        #[command(subcommand)]
        kind: Analyze,
    },
    /// Prune a tree set to an (m, levels)-uniform subset.
    Uniformize {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        m: u32,
        /// Defaults to n / m.
        #[arg(long)]
        levels: Option<usize>,
        /// Where to write the resulting profile (JSON); standard error otherwise.
        #[arg(long)]
        profile_out: Option<PathBuf>,
    },
    /// Separate a uniform set: every level without `--family`, inside extended intervals with it.
    Prune {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        levels: Option<usize>,
        /// Interval family (JSON) from `extend`; switches to the second pruning.
        #[arg(long, requires = "xi")]
        family: Option<PathBuf>,
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long)]
        profile_out: Option<PathBuf>,
    },
    /// Extend the trivial coarse intervals of a fine profile of B.
    Extend {
        /// Fine-level profile of B (JSON `{"m":..,"R":[..]}`).
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        zeta: f64,
        /// Fine-level profile of A; tags the case-(a) intervals low or high.
        #[arg(long, requires = "gamma_cap")]
        profile_a: Option<PathBuf>,
        #[arg(long)]
        gamma_cap: Option<f64>,
    },
    /// Dyadic entropies of a measure, or the multiscale chain of a projection.
    Entropy {
        #[arg(long)]
        measure: PathBuf,
        /// Single level; all levels `0..=n` otherwise.
        #[arg(long)]
        j: Option<u32>,
        /// Also report `H(μ, D_j | D_coarse)`.
        #[arg(long)]
        coarse: Option<u32>,
        /// Slope for the chain, e.g. `3/8`; needs a plane measure and `--cuts`.
        #[arg(long, requires = "cuts")]
        c: Option<String>,
        #[arg(long, value_delimiter = ',')]
        cuts: Option<Vec<u32>>,
    },
    /// The ν-averaged L² norm (or entropy) of the projections of a plane measure.
    ProjectAvg {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        /// Defaults to the resolution of μ.
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        gamma: f64,
        /// Defaults to the measured separation exponent.
        #[arg(long)]
        xi: Option<f64>,
        /// Defaults to the measured constant.
        #[arg(long)]
        constant: Option<f64>,
        /// `log2 C0`; when given, reports the averaged entropy instead.
        #[arg(long)]
        c0_log2: Option<f64>,
        /// Run even if a hypothesis fails.
        #[arg(long)]
        exploratory: bool,
    },
    /// Sizes of the iterated sums 2^k B and the first small doubling.
    Ladder {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, default_value_t = 6)]
        steps: u32,
    },
    /// Greedy iterated sums H_(n+1) = H_n + c B with c from C.
    Greedy {
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        c: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
    },
    /// Expansion exponents over a sweep of resolutions and γ.
    Sweep {
        /// JSON experiment configuration.
        #[arg(long)]
        config: PathBuf,
        /// One row per coefficient instead of one per sweep point.
        #[arg(long)]
        detail: bool,
    },
    /// Generate an instance and check the multiscale assembly on it.
    Assemble {
        /// Member of the seeded family.
        #[arg(long, conflicts_with = "config")]
        instance: Option<u64>,
        /// JSON assembly configuration.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Brute-force sizes for the product-set example at the given n.
    Sharpness {
        #[arg(long, value_delimiter = ',', default_values_t = [16u64, 256, 4096])]
        n: Vec<u64>,
    },
}

#[derive(Subcommand)]
enum Gen {
    /// Arithmetic progression of `size` points.
    Ap {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        size: u64,
    },
    /// Uniformly random subset.
    Random {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        size: usize,
    },
    /// Tree with a prescribed branching profile.
    Tree {
        #[arg(long)]
        m: u32,
        /// Branching numbers, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<u64>,
        /// Fine levels per coarse level.
        #[arg(long, default_value_t = 1)]
        ell: u32,
        #[arg(long)]
        left_packed: bool,
    },
    /// κ-regular tree with R = 2^ceil(κm).
    Regular {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        left_packed: bool,
    },
    /// One of the sets of the product-set example, n a power of 16.
    Form87 {
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t = Which::A)]
        which: Which,
    },
    /// Normalised counting measure on a set.
    Counting {
        #[arg(long)]
        set: PathBuf,
    },
    /// Product of two line measures.
    Product {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    A,
    B,
    C,
}

#[derive(Subcommand)]
enum Analyze {
    /// `|A|_(2^-j)` for one or all `j`.
    Covering {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        j: Option<u32>,
    },
    /// Worst ratio `|A ∩ B(x, r)| / (r^κ |A|)` over balls at points of A.
    Frostman {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        kappa: f64,
        /// Smallest radius `2^-r_min_exp`; defaults to n.
        #[arg(long)]
        r_min_exp: Option<u32>,
        #[arg(long, default_value_t = 0)]
        r_max_exp: u32,
    },
    /// The branching profile if the set is uniform.
    Branching {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        levels: Option<usize>,
    },
}

enum Output {
    Set(DeltaSet),
    Measure(DiscreteMeasure),
    Report { json: Value, table: Option<Table> },
}

fn report<T: Serialize>(value: &T, table: Option<Table>) -> Res<Output> {
    Ok(Output::Report {
        json: serde_json::to_value(value)?,
        table,
    })
}

fn read_text(path: &Path) -> Res<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn read_set(path: &Path) -> Res<DeltaSet> {
    Ok(DeltaSet::from_text(&read_text(path)?)?)
}

fn read_measure(path: &Path) -> Res<DiscreteMeasure> {
    Ok(DiscreteMeasure::from_json(&read_text(path)?)?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Res<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

fn placement(left_packed: bool, seed: u64) -> Placement {
    if left_packed {
        Placement::LeftPacked
    } else {
        Placement::Random(seed)
    }
}

fn default_levels(set: &DeltaSet, m: u32, levels: Option<usize>) -> Res<usize> {
    match levels {
        Some(l) => Ok(l),
        None if m > 0 && set.n() % m == 0 => Ok((set.n() / m) as usize),
        None => Err(format!("n = {} is not a multiple of m = {m}; pass --levels", set.n()).into()),
    }
}

fn emit_profile(profile: &BranchingProfile, path: Option<&Path>) -> Res<()> {
    let text = serde_json::to_string(profile)?;
    match path {
        Some(p) => fs::write(p, text + "\n")?,
        None => eprintln!("{text}"),
    }
    Ok(())
}

fn family_table(family: &IntervalFamily) -> Res<Table> {
    let mut t = Table::new(&["lo", "hi", "len", "tag"]);
    for i in family.iter() {
        let tag = serde_json::to_value(i.tag)?;
        t.push(vec![
            i.lo.to_string(),
            i.hi.to_string(),
            i.len().to_string(),
            tag.as_str().unwrap_or_default().to_string(),
        ]);
    }
    Ok(t)
}

fn gen(kind: Gen, seed: u64) -> Res<Output> {
    Ok(match kind {
        Gen::Ap { n, size } => Output::Set(gen_ap(n, size)?),
        Gen::Random { n, size } => Output::Set(gen_random(n, size, seed)?),
        Gen::Tree { m, r, ell, left_packed } => {
            let profile = BranchingProfile::new(m, r)?;
            let levels = profile.levels() as u32;
            if ell == 0 || levels % ell != 0 {
                return Err(format!("{levels} levels do not split into blocks of {ell}").into());
            }
            let spec = ScaleSpec::new(m, ell, levels / ell)?;
            Output::Set(gen_uniform_tree(&spec, &profile, placement(left_packed, seed))?)
        }
        Gen::Regular { m, levels, kappa, left_packed } => {
            Output::Set(gen_regular_tree(m, levels, kappa, placement(left_packed, seed))?)
        }
        Gen::Form87 { n, which } => {
            let (a, b, c) = gen_example_form87(n)?;
            Output::Set(match which {
                Which::A => a,
                Which::B => b,
                Which::C => c,
            })
        }
        Gen::Counting { set } => Output::Measure(DiscreteMeasure::counting(&read_set(&set)?)?),
        Gen::Product { a, b } => Output::Measure(DiscreteMeasure::product(&read_measure(&a)?, &read_measure(&b)?)?),
    })
}

fn analyze(kind: Analyze) -> Res<Output> {
    match kind {
        Analyze::Covering { set, j } => {
            let a = read_set(&set)?;
            let js: Vec<u32> = match j {
                Some(j) => vec![j],
                None => (0..=a.n()).collect(),
            };
            let mut t = Table::new(&["j", "covering"]);
            let mut rows = Vec::new();
            for j in js {
                let c = a.covering_number(j)?;
                t.push(vec![j.to_string(), c.to_string()]);
                rows.push(json!({"j": j, "covering": c}));
            }
            report(&rows, Some(t))
        }
        Analyze::Frostman { set, kappa, r_min_exp, r_max_exp } => {
            let a = read_set(&set)?;
            let r = frostman_check(&a, kappa, r_min_exp.unwrap_or(a.n()), r_max_exp)?;
            report(&r, None)
        }
        Analyze::Branching { set, m, levels } => {
            let a = read_set(&set)?;
            let levels = default_levels(&a, m, levels)?;
            let profile = is_uniform(&a, m, levels)?;
            report(&json!({"uniform": profile.is_some(), "profile": profile}), None)
        }
    }
}

fn entropy_cmd(
    measure: &Path,
    j: Option<u32>,
    coarse: Option<u32>,
    c: Option<String>,
    cuts: Option<Vec<u32>>,
) -> Res<Output> {
    let mu = read_measure(measure)?;
    if let Some(c) = c {
        let c: Dyadic = c.parse()?;
        let r = entropy_chain(&mu, c, &cuts.unwrap_or_default())?;
        let mut t = Table::new(&["lo", "hi", "sum"]);
        for b in &r.blocks {
            t.push(vec![b.lo.to_string(), b.hi.to_string(), sig12(b.sum)]);
        }
        return report(&r, Some(t));
    }
    let js: Vec<u32> = match j {
        Some(j) => vec![j],
        None => (0..=mu.n()).collect(),
    };
    let mut t = Table::new(&["j", "entropy", "conditional"]);
    let mut rows = Vec::new();
    for j in js {
        let h = entropy(&mu, j)?;
        let cond = match coarse {
            Some(k) if k <= j => Some(conditional_entropy(&mu, j, k)?),
            _ => None,
        };
        t.push(vec![j.to_string(), sig12(h), cond.map(sig12).unwrap_or_default()]);
        rows.push(json!({"j": j, "entropy": h, "conditional": cond}));
    }
    report(&rows, Some(t))
}

fn run(cli: Cli) -> Res<Output> {
    let seed = cli.seed.unwrap_or(0);
    match cli.cmd {
        Cmd::Gen { kind } => gen(kind, seed),
        Cmd::Analyze { kind } => analyze(kind),
        Cmd::Uniformize { set, m, levels, profile_out } => {
            let a = read_set(&set)?;
            let levels = default_levels(&a, m, levels)?;
            let (u, p) = uniformize(&a, m, levels)?;
            emit_profile(&p, profile_out.as_deref())?;
            Ok(Output::Set(u))
        }
        Cmd::Prune { set, m, levels, family, xi, profile_out } => {
            let b = read_set(&set)?;
            let levels = default_levels(&b, m, levels)?;
            let (set, profile) = match (family, xi) {
                (Some(f), Some(xi)) => {
                    let family: IntervalFamily = read_json(&f)?;
                    let profile = is_uniform(&b, m, levels)?.ok_or("the set is not uniform")?;
                    let pr = prune_separation_2(&b, &family, xi, &profile)?;
                    (pr.set, pr.profile)
                }
                _ => prune_separation_1(&b, m, levels)?,
            };
            emit_profile(&profile, profile_out.as_deref())?;
            Ok(Output::Set(set))
        }
        Cmd::Extend { profile, ell, zeta, profile_a, gamma_cap } => {
            let pb: BranchingProfile = read_json(&profile)?;
            let coarse = pb.aggregate(ell)?;
            let lifted = lift_intervals(&trivial_intervals(&coarse), ell);
            let mut family = extend_intervals(&pb, &lifted, zeta, ell)?;
            if let (Some(pa), Some(g)) = (profile_a, gamma_cap) {
                let pa: BranchingProfile = read_json(&pa)?;
                family = classify_low_high(&family, &pa, exact(g));
            }
            let t = family_table(&family)?;
            report(&family, Some(t))
        }
        Cmd::Entropy { measure, j, coarse, c, cuts } => entropy_cmd(&measure, j, coarse, c, cuts),
        Cmd::ProjectAvg { mu, nu, n, gamma, xi, constant, c0_log2, exploratory } => {
            let mu = read_measure(&mu)?;
            let nu = read_measure(&nu)?;
            let n = n.unwrap_or(mu.n());
            let measured = measure_hypotheses(&mu, &nu, n, gamma)?;
            let params = LemmaParams {
                gamma,
                xi: xi.unwrap_or(measured.xi(n)),
                constant: constant.unwrap_or(measured.constant()),
            };
            let per_c_table = |per_c: &[(String, f64, f64)]| {
                let mut t = Table::new(&["c", "nu_mass", "l2"]);
                for (c, w, v) in per_c {
                    t.push(vec![c.clone(), sig12(*w), sig12(*v)]);
                }
                t
            };
            match c0_log2 {
                Some(c0) => {
                    let r = averaged_projection_entropy(&mu, &nu, n, &params, c0, exploratory)?;
                    let t = per_c_table(&r.l2.per_c);
                    report(&r, Some(t))
                }
                None => {
                    let r = averaged_l2(&mu, &nu, n, &params, exploratory)?;
                    let t = per_c_table(&r.per_c);
                    report(&r, Some(t))
                }
            }
        }
        Cmd::Ladder { set, steps } => {
            let r = run_doubling_ladder(&read_set(&set)?, steps)?;
            report(&r, Some(ladder_table(&r)))
        }
        Cmd::Greedy { b, c, steps, eta } => {
            let r = run_greedy_iterated_sum(&read_set(&b)?, &read_set(&c)?, steps, eta)?;
            report(&r, Some(greedy_table(&r)))
        }
        Cmd::Sweep { config, detail } => {
            let mut cfg = ExperimentConfig::from_json(&read_text(&config)?)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let r = run_expansion_sweep(&cfg)?;
            let t = if detail { sweep_detail_table(&r) } else { sweep_table(&r) };
            if let Some(p) = &cfg.outputs.csv {
                t.write_csv(fs::File::create(p)?)?;
            }
            if let Some(p) = &cfg.outputs.json {
                fs::write(p, to_json_string(&r)? + "\n")?;
            }
            report(&r, Some(t))
        }
        Cmd::Assemble { instance, config } => {
            let cfg = match (instance, config) {
                (Some(i), _) => AssemblyConfig::seeded(i),
                (None, Some(p)) => read_json(&p)?,
                (None, None) => AssemblyConfig::default(),
            };
            let r = run_final_assembly(&cfg, seed)?;
            report(&r, Some(assembly_table(&r)))
        }
        Cmd::Sharpness { n } => {
            let rows = run_sharpness_form87(&n)?;
            report(&rows, Some(sharpness_table(&rows)))
        }
    }
}

fn render(output: Output, format: Format) -> Res<String> {
    Ok(match output {
        Output::Set(s) => s.to_text(),
        Output::Measure(m) => m.to_json()? + "\n",
        Output::Report { json, table } => match format {
            Format::Json => to_json_string(&json)? + "\n",
            Format::Csv => match table {
                Some(t) => t.to_csv_string()?,
                None => flat_table(&json)?.to_csv_string()?,
            },
        },
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (out, format) = (cli.out.clone(), cli.format);
    let result = run(cli).and_then(|o| render(o, format)).and_then(|text| {
        match out {
            Some(p) => fs::write(p, text)?,
            None => io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
