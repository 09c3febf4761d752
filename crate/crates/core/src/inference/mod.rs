//! Resampling engines and the probability estimators built on them.
//!
//! Two resampling modes are offered. [`ResampleMode::Bootstrap`] draws
//! atoms with replacement; [`ResampleMode::Subsample`] draws a fixed number
//! of distinct atoms without replacement and repeats that many times, which
//! is what election-forensics write-ups often call a "jackknife" even though
//! it is not leave-one-out.
//!
//! Every replicate has its own generator seeded by [`replicate_seed`], a pure
//! function of the plan seed and the replicate index, so results do not
//! depend on how replicates are scheduled across threads.

mod estimate;
mod fit;
mod rng;
mod sampler;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use estimate::{
    probability_all_geo, probability_all_geo_with, replicate_diagnostics, AllGeoEstimate, Estimator,
    ReplicateDiagnostic,
};
pub use fit::{
    bootstrap_c_over_m, fit_h_linear, probability_gip_window, FitResult, RatioSample, SharePoint, WeightScheme,
    WindowEstimate, MIN_SLOPE,
};
pub use rng::{replicate_rng, replicate_seed, uniform_f64, ReplicateRng};
pub use sampler::{resample, resample_indices};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResampleMode {
    /// With replacement.
    Bootstrap,
    /// Without replacement, fixed size.
    #[default]
    Subsample,
}

impl ResampleMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResampleMode::Bootstrap => "bootstrap",
            ResampleMode::Subsample => "subsample",
        }
    }
}

impl std::fmt::Display for ResampleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ResampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bootstrap" => Ok(ResampleMode::Bootstrap),
            "subsample" | "jackknife" => Ok(ResampleMode::Subsample),
            other => Err(Error::Config(format!("unknown resample mode {other:?}"))),
        }
    }
}

fn default_true() -> bool {
    true
}

/// Missing fields in a serialised plan take their [`Default`] values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResamplePlan {
    pub mode: ResampleMode,
    pub sample_size: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Run replicates on the rayon pool. Output is identical either way,
    /// so the flag is read from configs but never written.
    #[serde(default = "default_true", skip_serializing)]
    pub parallel: bool,
}

impl Default for ResamplePlan {
    fn default() -> Self {
        ResamplePlan { mode: ResampleMode::Subsample, sample_size: 20, replicates: 10_000, seed: 42, parallel: true }
    }
}

impl ResamplePlan {
    pub fn new(mode: ResampleMode, sample_size: usize, replicates: usize, seed: u64) -> Self {
        ResamplePlan { mode, sample_size, replicates, seed, parallel: true }
    }

    pub fn serial(self) -> Self {
        ResamplePlan { parallel: false, ..self }
    }

    /// Checks the plan against a population of `atoms` resampling units.
    pub fn validate(&self, atoms: usize) -> Result<()> {
        if self.sample_size < 2 {
            return Err(Error::InvalidPlan(format!("sample size must be at least 2, got {}", self.sample_size)));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidPlan("at least one replicate is required".into()));
        }
        if atoms == 0 {
            return Err(Error::InvalidPlan("nothing to resample".into()));
        }
        if self.mode == ResampleMode::Subsample && self.sample_size > atoms {
            return Err(Error::InvalidPlan(format!(
                "subsample of {} requested from {} atoms",
                self.sample_size, atoms
            )));
        }
        Ok(())
    }
}
