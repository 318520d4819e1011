//! Experiment harness: instance families, theorem-shaped experiments and their tables.

mod assembly;
mod ladder;
pub mod output;
mod seeds;
mod sharpness;
mod sweep;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParameterSet;

pub use assembly::{
    assembly_table, run_assembly_on, run_final_assembly, AssemblyConfig, AssemblyReport,
    BlockReport, C0_LOG2, FROSTMAN_BUDGET,
};
pub use ladder::{
    greedy_table, ladder_table, run_doubling_ladder, run_greedy_iterated_sum, GreedyReport,
    LadderReport,
};
pub use seeds::{SeedStreams, Stream};
pub use sharpness::{run_sharpness_form87, sharpness_table, slopes_decrease, SharpnessRow};
pub use sweep::{
    expansion_record, run_expansion_sweep, sweep_detail_table, sweep_instance, sweep_table,
    ExpansionRecord, SweepReport, SAMPLE_LIMIT,
};

/// How the set `A` of a sweep point is built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Arithmetic progression, as in the product-set example.
    #[default]
    Form87,
    /// Random-placement `α`-regular tree.
    UniformTree,
    /// Uniformly random subset of size `2^(αn)`.
    RandomFrostman,
    /// Tree branching fully wherever `B` branches.
    #[serde(rename = "P1P2-tree")]
    P1p2Tree,
}

/// The measure `ν` on coefficients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NuConstruction {
    /// Counting measure on `C`.
    #[default]
    CountingOnC,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

/// JSON configuration of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: ParameterSet,
    #[serde(default)]
    pub family: Family,
    /// Each `n` gives `δ = 2^-n`, read as `ell m N` with `m = ell = 1`, `N = n`.
    pub delta_exponents: Vec<u32>,
    pub gammas: Vec<f64>,
    #[serde(default)]
    pub nu: NuConstruction,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sample_limit: Option<usize>,
    #[serde(default)]
    pub outputs: Outputs,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta_exponents.is_empty() || self.gammas.is_empty() {
            return Err(Error::Precondition("sweep lists must be nonempty".into()));
        }
        if let Some(&n) = self.delta_exponents.iter().find(|&&n| n == 0 || n > 24) {
            return Err(Error::OutOfRange {
                what: "delta exponent",
                value: n as i64,
                range: "[1, 24]".into(),
            });
        }
        if self.gammas.iter().any(|&g| !(g > 0.0 && g <= 1.0)) {
            return Err(Error::Precondition("gammas must lie in (0, 1]".into()));
        }
        if self.sample_limit == Some(0) {
            return Err(Error::Precondition("sample_limit must be positive".into()));
        }
        let p = &self.params;
        for (name, v) in [("alpha", p.alpha), ("kappa", p.kappa)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Precondition(format!("{name} = {v} not in (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}
