//! Run configuration: a TOML document with `[lattice]`, `[model]`,
//! `[integrator]`, `[compare]` and `[expand]` sections plus top-level lists.
//! Every diagnostic names the offending key path.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{IntegratorConfig, Scheme};
use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, MAX_GRID_EXPONENT};
use crate::observables::ObservableId;
use crate::oracle::Point;
use crate::predict::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    #[serde(rename = "M", default = "default_grid_exponent")]
    pub grid_exponent: u32,
    #[serde(default = "default_mass")]
    pub m: f64,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self { grid_exponent: default_grid_exponent(), m: default_mass() }
    }
}

/// A single component count or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComponentCounts {
    One(usize),
    Many(Vec<usize>),
}

impl ComponentCounts {
    pub fn values(&self) -> Vec<usize> {
        match self {
            ComponentCounts::One(n) => vec![*n],
            ComponentCounts::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "N", default = "default_counts")]
    pub n: ComponentCounts,
    /// `false` samples the free field exactly instead of running the dynamics.
    #[serde(default = "yes")]
    pub interaction: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { n: default_counts(), interaction: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub mala: bool,
    /// Retained snapshots per chain are `steps / thin`.
    #[serde(default = "default_steps")]
    pub steps: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: u64,
    #[serde(default = "default_thin")]
    pub thin: u64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            scheme: default_scheme(),
            mala: false,
            steps: default_steps(),
            burn_in: default_burn_in(),
            thin: default_thin(),
        }
    }
}

impl IntegratorSection {
    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            scheme: self.scheme,
            mala: self.mala,
            burn_in_steps: self.burn_in,
            thin_stride: self.thin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    /// A row passes if `|estimate − prediction| ≤ max(z_max·stderr, rel_tol·|prediction|)`.
    #[serde(default = "default_z_max")]
    pub z_max: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_batches")]
    pub n_batches: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self { z_max: default_z_max(), rel_tol: default_rel_tol(), n_batches: default_batches() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandSection {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub order: u32,
    /// Evaluation points; defaults to the first `k` displacements.
    #[serde(default)]
    pub points: Option<Vec<[i64; 2]>>,
}

impl Default for ExpandSection {
    fn default() -> Self {
        Self { k: default_k(), order: 0, points: None }
    }
}

/// Names of the deterministic checks run by `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    KernelIdentity,
    ResolventIdentity,
    ShiftConstant,
    PairRecursion,
    InductiveRecursion,
    ClosedForms,
    MatchingCounts,
    ExclusionCount,
    WickEquivalence,
    ExpansionLeading,
}

impl CheckName {
    pub const ALL: [CheckName; 10] = [
        CheckName::KernelIdentity,
        CheckName::ResolventIdentity,
        CheckName::ShiftConstant,
        CheckName::PairRecursion,
        CheckName::InductiveRecursion,
        CheckName::ClosedForms,
        CheckName::MatchingCounts,
        CheckName::ExclusionCount,
        CheckName::WickEquivalence,
        CheckName::ExpansionLeading,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::KernelIdentity => "kernel-identity",
            CheckName::ResolventIdentity => "resolvent-identity",
            CheckName::ShiftConstant => "shift-constant",
            CheckName::PairRecursion => "pair-recursion",
            CheckName::InductiveRecursion => "inductive-recursion",
            CheckName::ClosedForms => "closed-forms",
            CheckName::MatchingCounts => "matching-counts",
            CheckName::ExclusionCount => "exclusion-count",
            CheckName::WickEquivalence => "wick-equivalence",
            CheckName::ExpansionLeading => "expansion-leading",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default = "default_observables")]
    pub observables: Vec<ObservableId>,
    #[serde(default = "default_displacements")]
    pub displacements: Vec<[i64; 2]>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub expand: ExpandSection,
    #[serde(default = "default_checks")]
    pub checks: Vec<CheckName>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSection::default(),
            model: ModelSection::default(),
            integrator: IntegratorSection::default(),
            observables: default_observables(),
            displacements: default_displacements(),
            seed: default_seed(),
            output_dir: default_output_dir(),
            compare: CompareSection::default(),
            expand: ExpandSection::default(),
            checks: default_checks(),
        }
    }
}

fn default_grid_exponent() -> u32 {
    4
}
fn default_mass() -> f64 {
    5.0
}
fn default_counts() -> ComponentCounts {
    ComponentCounts::One(8)
}
fn yes() -> bool {
    true
}
fn default_dt() -> f64 {
    0.01
}
fn default_scheme() -> Scheme {
    Scheme::SemiImplicit
}
fn default_steps() -> u64 {
    1000
}
fn default_burn_in() -> u64 {
    10_000
}
fn default_thin() -> u64 {
    1
}
fn default_z_max() -> f64 {
    3.0
}
fn default_rel_tol() -> f64 {
    0.1
}
fn default_batches() -> usize {
    20
}
fn default_k() -> usize {
    2
}
fn default_observables() -> Vec<ObservableId> {
    vec![ObservableId::Q(1)]
}
fn default_displacements() -> Vec<[i64; 2]> {
    vec![[0, 0], [1, 0], [2, 0]]
}
fn default_seed() -> u64 {
    1
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_checks() -> Vec<CheckName> {
    CheckName::ALL.to_vec()
}

/// Parses and validates a TOML run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::invalid("<document>", e.to_string()))?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let key = if key == "." { "<document>".to_string() } else { key };
        Error::invalid(key, e.into_inner().message().trim().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lattice.grid_exponent > MAX_GRID_EXPONENT {
            return Err(Error::invalid(
                "lattice.M",
                format!("grid exponent {} exceeds {MAX_GRID_EXPONENT}", self.lattice.grid_exponent),
            ));
        }
        self.lattice_spec()?;
        let counts = self.component_counts();
        if counts.is_empty() {
            return Err(Error::invalid("model.N", "component list is empty"));
        }
        if let Some(n) = counts.iter().find(|&&n| n == 0) {
            return Err(Error::invalid("model.N", format!("component count must be at least 1, got {n}")));
        }
        let mut sorted = counts.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != counts.len() {
            return Err(Error::invalid("model.N", "component counts must be distinct"));
        }
        self.integrator.integrator().validate()?;
        let min_n = sorted[0];
        for id in &self.observables {
            if let ObservableId::Mixed(i) | ObservableId::Fluct(i) = *id {
                if i > min_n {
                    return Err(Error::invalid(
                        "observables",
                        format!("`{id}` refers to component {i} but N can be {min_n}"),
                    ));
                }
            }
        }
        if !(self.compare.z_max > 0.0) {
            return Err(Error::invalid("compare.z_max", "must be positive"));
        }
        if !(self.compare.rel_tol >= 0.0) {
            return Err(Error::invalid("compare.rel_tol", "must be nonnegative"));
        }
        if self.compare.n_batches < 2 {
            return Err(Error::invalid("compare.n_batches", "must be at least 2"));
        }
        if !(1..=4).contains(&self.expand.k) {
            return Err(Error::invalid("expand.k", format!("supported range is 1..=4, got {}", self.expand.k)));
        }
        if self.expand.order > 1 {
            return Err(Error::invalid("expand.order", format!("supported range is 0..=1, got {}", self.expand.order)));
        }
        if let Some(p) = &self.expand.points {
            if p.len() != self.expand.k {
                return Err(Error::invalid("expand.points", format!("need {} points, got {}", self.expand.k, p.len())));
            }
        }
        Ok(())
    }

    pub fn lattice_spec(&self) -> Result<LatticeSpec> {
        LatticeSpec::new(self.lattice.grid_exponent, self.lattice.m)
    }

    pub fn component_counts(&self) -> Vec<usize> {
        self.model.n.values()
    }

    pub fn mode(&self) -> Mode {
        if self.model.interaction {
            Mode::Interacting
        } else {
            Mode::Free
        }
    }

    pub fn displacement_points(&self) -> Vec<Point> {
        self.displacements.iter().map(|d| (d[0], d[1])).collect()
    }

    pub fn expand_points(&self) -> Vec<Point> {
        match &self.expand.points {
            Some(p) => p.iter().map(|d| (d[0], d[1])).collect(),
            None => {
                let d = self.displacement_points();
                (0..self.expand.k).map(|i| d.get(i).copied().unwrap_or((i as i64, 0))).collect()
            }
        }
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
