//! Run configuration.
//!
//! A config is a TOML document. Words use the letter encoding (`a..z`
//! generators, `A..Z` inverses, `1` the identity), acting parts are `;`
//! separated integer vectors or letter-encoded words.
//!
//! ```toml
//! [group]
//! rank = 2
//! acting = "Z"            # "trivial", "Z", "Z^k" or "free:k"
//! theta = ["alpha"]       # one table name per acting generator
//!
//! [auto.alpha]
//! a = "a"
//! b = "ab"
//! [auto.alpha.inv]
//! a = "a"
//! b = "Ab"
//!
//! [measure]
//! atoms = [{ w = "a", p = "0", weight = 0.5 }, { w = "1", p = "1", weight = 0.5 }]
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use walkbound::boundary::UNRESOLVED_CEILING;
use walkbound::{
    ActingGroup, ActingKind, ActingPart, Automorphism, Error, ExtElement, GenerationCheck, ReducedWord,
    StepMeasure, SublatticeSpec,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub group: GroupSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub auto: BTreeMap<String, AutoTable>,
    pub measure: MeasureSpec,
    #[serde(default)]
    pub run: RunParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sublattice: Option<SublatticeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic: Option<HarmonicConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub rank: usize,
    #[serde(default = "trivial")]
    pub acting: String,
    #[serde(default)]
    pub theta: Vec<String>,
}

fn trivial() -> String {
    "trivial".into()
}

/// Images of the generators, keyed by generator letter, plus the declared
/// inverse under `inv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoTable {
    #[serde(flatten)]
    pub image: BTreeMap<String, String>,
    pub inv: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub w: String,
    #[serde(default)]
    pub p: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub atoms: Vec<AtomSpec>,
    /// Radius of the semigroup-generation check.
    #[serde(default = "one")]
    pub generation_radius: usize,
    /// Skips the generation check; for measures supported on a subgroup.
    #[serde(default)]
    pub waive_generation: bool,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunParams {
    pub seed: u64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub depth: usize,
    /// Depth at which `λ̂` is tabulated when a command resamples from it.
    pub table_depth: Option<usize>,
    /// Guard zone of the truncated-prefix ray action; audited by
    /// `stationarity` when set.
    pub margin: Option<usize>,
    pub burn_in: usize,
    pub horizon: usize,
    pub max_iter: usize,
    pub samples: usize,
    pub entropy_depths: Vec<usize>,
    pub step_budget: usize,
    pub return_index: usize,
    pub unresolved_ceiling: f64,
    pub exhausted_ceiling: f64,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            seed: 0,
            n_paths: 1000,
            n_steps: 1000,
            depth: 2,
            table_depth: None,
            margin: None,
            burn_in: 200,
            horizon: 16,
            max_iter: 30,
            samples: 10_000,
            entropy_depths: vec![8, 12, 16],
            step_budget: 100_000,
            return_index: 1,
            unresolved_ceiling: UNRESOLVED_CEILING,
            exhausted_ceiling: 0.01,
        }
    }
}

/// `moduli` for lattice acting groups, `degree` and `images` for the
/// permutation kernel of a free acting group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SublatticeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moduli: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeConfig {
    #[serde(default = "three")]
    pub rank: usize,
    #[serde(default = "identity_word")]
    pub base: String,
    #[serde(default)]
    pub sequence: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<String>,
    #[serde(default = "twelve")]
    pub k_max: usize,
}

fn three() -> usize {
    3
}

fn twelve() -> usize {
    12
}

fn identity_word() -> String {
    "1".into()
}

/// The function is the indicator of `cylinder`, or a table read from `csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cylinder: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub points: Vec<PointSpec>,
    #[serde(default = "two")]
    pub test_radius: usize,
}

fn two() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub w: String,
    #[serde(default)]
    pub p: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] Error),
}

pub type ConfigResult<T> = Result<T, ConfigError>;

/// Group, measure and optional lattice, validated.
#[derive(Clone, Debug)]
pub struct Model {
    pub group: ActingGroup,
    pub measure: StepMeasure,
    pub lattice: Option<SublatticeSpec>,
    /// `(name, table)` for every automorphism in the config, in name order.
    pub automorphisms: Vec<(String, Automorphism)>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> ConfigResult<RunConfig> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> ConfigResult<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        RunConfig::from_toml(&text)
    }

    /// Normalized form: every field written out, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn acting_kind(&self) -> ConfigResult<ActingKind> {
        parse_acting(&self.group.acting)
    }

    /// Checks everything that does not need a simulation: parses words,
    /// verifies inverse tables and commutation, weights and generation,
    /// and the run parameters.
    pub fn build(&self) -> ConfigResult<Model> {
        let rank = self.group.rank;
        if rank == 0 || rank > walkbound::words::MAX_RANK {
            return Err(invalid(format!("group.rank must be in 1..=26, got {rank}")));
        }
        let kind = self.acting_kind()?;
        let mut automorphisms = Vec::new();
        for (name, table) in &self.auto {
            automorphisms.push((name.clone(), table.build(name, rank)?));
        }
        let theta = self
            .group
            .theta
            .iter()
            .map(|name| {
                automorphisms
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, a)| a.clone())
                    .ok_or_else(|| invalid(format!("group.theta names unknown table auto.{name}")))
            })
            .collect::<ConfigResult<Vec<_>>>()?;
        let group = if kind.rank() == 0 {
            if !theta.is_empty() {
                return Err(invalid("a trivial acting group takes no theta tables".into()));
            }
            ActingGroup::trivial(rank)
        } else {
            ActingGroup::new(rank, kind, theta)?
        };
        let atoms = self
            .measure
            .atoms
            .iter()
            .map(|a| Ok((element(&group, &a.w, &a.p)?, a.weight)))
            .collect::<ConfigResult<Vec<_>>>()?;
        let check = if self.measure.waive_generation {
            GenerationCheck::Waived
        } else {
            GenerationCheck::Radius(self.measure.generation_radius)
        };
        let measure = StepMeasure::new(&group, atoms, check)?;
        let lattice = self.sublattice.as_ref().map(|s| s.build(kind)).transpose()?;
        self.run.validate()?;
        Ok(Model {
            group,
            measure,
            lattice,
            automorphisms,
        })
    }
}

impl AutoTable {
    fn build(&self, name: &str, rank: usize) -> ConfigResult<Automorphism> {
        let column = |map: &BTreeMap<String, String>, what: &str| -> ConfigResult<Vec<ReducedWord>> {
            let mut out = Vec::with_capacity(rank);
            for g in 1..=rank {
                let key = walkbound::Letter::new(g, false).to_char().to_string();
                let word = map
                    .get(&key)
                    .ok_or_else(|| invalid(format!("auto.{name}{what} has no image for {key}")))?;
                out.push(ReducedWord::parse(rank, word)?);
            }
            if map.len() != rank {
                return Err(invalid(format!(
                    "auto.{name}{what} lists {} generators for rank {rank}",
                    map.len()
                )));
            }
            Ok(out)
        };
        Ok(Automorphism::new(
            column(&self.image, "")?,
            column(&self.inv, ".inv")?,
        )?)
    }
}

impl SublatticeConfig {
    fn build(&self, kind: ActingKind) -> ConfigResult<SublatticeSpec> {
        let spec = match (&self.moduli, self.degree, &self.images) {
            (Some(m), None, None) => SublatticeSpec::Moduli(m.clone()),
            (None, Some(degree), Some(images)) => SublatticeSpec::PermutationKernel {
                degree,
                images: images.clone(),
            },
            _ => {
                return Err(invalid(
                    "sublattice needs either moduli, or degree together with images".into(),
                ))
            }
        };
        spec.validate(kind)?;
        Ok(spec)
    }
}

impl RunParams {
    fn validate(&self) -> ConfigResult<()> {
        let positive = [
            ("n_paths", self.n_paths),
            ("n_steps", self.n_steps),
            ("depth", self.depth),
            ("max_iter", self.max_iter),
            ("samples", self.samples),
            ("step_budget", self.step_budget),
            ("return_index", self.return_index),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(invalid(format!("run.{key} must be positive")));
            }
        }
        if let Some(t) = self.table_depth {
            if t < self.depth {
                return Err(invalid(format!(
                    "run.table_depth {t} is below run.depth {}",
                    self.depth
                )));
            }
        }
        for (key, v) in [
            ("unresolved_ceiling", self.unresolved_ceiling),
            ("exhausted_ceiling", self.exhausted_ceiling),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("run.{key} must lie in [0, 1], got {v}")));
            }
        }
        if self.entropy_depths.is_empty() || self.entropy_depths.contains(&0) {
            return Err(invalid(
                "run.entropy_depths must be non-empty and positive".into(),
            ));
        }
        Ok(())
    }

    /// `table_depth`, defaulting to three levels below `depth`.
    pub fn table_depth(&self) -> usize {
        self.table_depth.unwrap_or(self.depth + 3)
    }
}

pub fn parse_acting(s: &str) -> ConfigResult<ActingKind> {
    let s = s.trim();
    let bad = || invalid(format!("group.acting {s:?} is not trivial, Z, Z^k or free:k"));
    Ok(match s {
        "trivial" => ActingKind::IntLattice(0),
        "Z" => ActingKind::IntLattice(1),
        _ => {
            if let Some(k) = s.strip_prefix("Z^") {
                ActingKind::IntLattice(k.parse().map_err(|_| bad())?)
            } else if let Some(k) = s.strip_prefix("free:") {
                ActingKind::Free(k.parse().map_err(|_| bad())?)
            } else {
                return Err(bad());
            }
        }
    })
}

pub fn element(group: &ActingGroup, w: &str, p: &str) -> ConfigResult<ExtElement> {
    let w = ReducedWord::parse(group.rank(), w)?;
    let p = ActingPart::parse(group.kind(), p)?;
    Ok(group.element(w, p)?)
}

fn invalid(msg: String) -> ConfigError {
    ConfigError::Invalid(msg)
}
