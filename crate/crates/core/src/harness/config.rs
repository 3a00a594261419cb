use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::learners::{ReferenceSpec, StepSize};
use crate::mdp::{builtin, Label, MdpDocument, TabularMdp};
use crate::options::{OptionSpec, OptionsDocument};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelRef {
    Builtin(String),
    File(PathBuf),
    Inline(MdpDocument),
}

impl ModelRef {
    pub fn load(&self) -> Result<TabularMdp> {
        match self {
            ModelRef::Builtin(name) => builtin(name),
            ModelRef::File(path) => TabularMdp::from_json(&std::fs::read_to_string(path)?),
            ModelRef::Inline(doc) => crate::mdp::validate_mdp(doc),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionsRef {
    File(PathBuf),
    Inline(OptionsDocument),
}

impl OptionsRef {
    pub fn load(&self, mdp: &TabularMdp) -> Result<Vec<OptionSpec>> {
        match self {
            OptionsRef::File(path) => {
                let doc: OptionsDocument = serde_json::from_str(&std::fs::read_to_string(path)?)?;
                doc.resolve(mdp)
            }
            OptionsRef::Inline(doc) => doc.resolve(mdp),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Differential,
    Rvi,
    InterOption,
    IntraOption,
}

impl Algorithm {
    pub fn uses_options(self) -> bool {
        matches!(self, Algorithm::InterOption | Algorithm::IntraOption)
    }

    /// Differential family: keeps a scalar `r_bar` tied to the table by the ledger identity.
    pub fn is_differential(self) -> bool {
        !matches!(self, Algorithm::Rvi)
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    #[serde(default = "one")]
    pub eta: f64,
    /// Required for RVI; optional elsewhere, where it only adds an `f(q)` column.
    #[serde(default)]
    pub f: Option<ReferenceSpec>,
    pub alpha: StepSize,
    /// Step size of the length estimates (inter-option only). Defaults to `alpha`.
    #[serde(default)]
    pub beta: Option<StepSize>,
    #[serde(default)]
    pub q0: f64,
    #[serde(default)]
    pub r_bar0: f64,
}

/// Behavior (meta-)policy over the learner's choices: one row shared by every
/// state, or one row per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BehaviorSpec {
    Shared(Vec<f64>),
    PerState(Vec<Vec<f64>>),
}

fn default_record_every() -> u64 {
    1
}

fn default_tolerance() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelRef,
    #[serde(default)]
    pub options: Option<OptionsRef>,
    pub learner: LearnerConfig,
    /// Uniform over choices when absent.
    #[serde(default)]
    pub behavior: Option<BehaviorSpec>,
    pub start_state: Label,
    pub steps: u64,
    pub runs: usize,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a config file. Relative model and options paths are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let ModelRef::File(p) = &mut cfg.model {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(OptionsRef::File(p)) = &mut cfg.options {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigInvalid(m.into()));
        if self.steps == 0 {
            return bad("steps must be at least 1");
        }
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1");
        }
        if !(self.learner.eta > 0.0) || !self.learner.eta.is_finite() {
            return bad("eta must be positive");
        }
        if !self.learner.q0.is_finite() || !self.learner.r_bar0.is_finite() {
            return bad("initial values must be finite");
        }
        self.learner.alpha.validate()?;
        if let Some(beta) = &self.learner.beta {
            beta.validate()?;
        }
        if self.learner.algorithm == Algorithm::Rvi && self.learner.f.is_none() {
            return bad("RVI Q-learning needs a reference function `f`");
        }
        if self.options.is_some() && !self.learner.algorithm.uses_options() {
            return bad("an options file needs an option learner");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization, hex encoded.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
