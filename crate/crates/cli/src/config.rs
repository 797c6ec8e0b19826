//! Run configuration files.
//!
//! A run is described by a TOML file. Model settings can come from a named
//! preset; explicit keys win over the preset, and command-line flags win
//! over the file.
//!
//! ```toml
//! preset = "sival"                 # sival | birds | newsgroups | synthetic
//! strategies = ["random", "agin", "cbas"]
//! repetitions = 10
//! seed = 0                         # repetition r uses seed + r
//! train_fraction = 0.6666666666666666
//! output = "results"
//!
//! [dataset]
//! path = "data/apple.csv"          # relative to this file
//! # or: [dataset.synthetic] with generator keys
//!
//! [kernel]                         # optional when a preset is given
//! kind = "gaussian-rbf"
//! gamma = 0.01
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mial_core::data::{generate_synthetic, load_dataset, MilDataset, SyntheticConfig};
use mial_core::eval::{TTestKind, WinOptions};
use mial_core::experiment::{ExperimentConfig, DEFAULT_TRAIN_FRACTION};
use mial_core::session::{ClusteringParams, SessionConfig, TrainEvaluation};
use mial_core::strategy::Strategy;
use mial_core::svm::{KernelSpec, SolverOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Named model settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Sival,
    Birds,
    Newsgroups,
    Synthetic,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Sival, Preset::Birds, Preset::Newsgroups, Preset::Synthetic];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Sival => "sival",
            Preset::Birds => "birds",
            Preset::Newsgroups => "newsgroups",
            Preset::Synthetic => "synthetic",
        }
    }

    /// Kernel and base cost `C+` (negatives get `rho * C+`).
    pub fn model(self) -> (KernelSpec, f64) {
        match self {
            Preset::Sival => (KernelSpec::GaussianRbf { gamma: 0.01 }, 1000.0),
            Preset::Birds => (KernelSpec::GaussianRbf { gamma: 0.1 }, 1000.0),
            Preset::Newsgroups => (KernelSpec::ChiSquared, 1000.0),
            Preset::Synthetic => (KernelSpec::GaussianRbf { gamma: 0.5 }, 1.0),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown preset `{s}` (expected sival, birds, newsgroups or synthetic)"))
    }
}

/// Where the data comes from: a MIL-CSV file or the generator.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
    /// Reject files violating the standard MIL assumption.
    #[serde(default = "yes")]
    pub strict: bool,
    /// Standardize every feature to zero mean and unit variance.
    #[serde(default)]
    pub standardize: bool,
}

fn yes() -> bool {
    true
}

fn default_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}

fn default_repetitions() -> usize {
    10
}

fn default_train_fraction() -> f64 {
    DEFAULT_TRAIN_FRACTION
}

fn default_alpha() -> f64 {
    0.05
}

fn default_fraction_steps() -> usize {
    20
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub dataset: DatasetSource,
    /// Group label for win tables; defaults to the dataset name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<String>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_cost: Option<f64>,
    #[serde(default)]
    pub clustering: ClusteringParams,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub train_evaluation: TrainEvaluation,
    #[serde(default)]
    pub ttest: TTestKind,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Grid resolution of the wins-versus-fraction table.
    #[serde(default = "default_fraction_steps")]
    pub fraction_steps: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Worker threads; all cores when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    /// Directory that relative dataset paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config is valid")
    }
}

/// Command-line values that replace file values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub dataset: Option<PathBuf>,
    pub strategies: Option<Vec<Strategy>>,
    pub repetitions: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub jobs: Option<usize>,
}

/// Everything a run needs, after presets, overrides and validation.
#[derive(Clone, Debug)]
pub struct ResolvedRun {
    /// The effective configuration, with model settings filled in.
    pub config: RunConfig,
    pub dataset: MilDataset,
    pub experiment: ExperimentConfig,
    pub wins: WinOptions,
    pub config_hash: String,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file; relative dataset paths resolve against its
    /// directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = o.preset {
            self.preset = Some(p);
        }
        if let Some(d) = &o.dataset {
            self.dataset.path = Some(d.clone());
            self.dataset.synthetic = None;
            self.base_dir = PathBuf::new();
        }
        if let Some(s) = &o.strategies {
            self.strategies = s.clone();
        }
        if let Some(r) = o.repetitions {
            self.repetitions = r;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = &o.output {
            self.output = out.clone();
        }
        if let Some(j) = o.jobs {
            self.jobs = Some(j);
        }
    }

    /// Fills model settings from the preset; explicit keys are kept.
    fn effective(&self) -> CliResult<RunConfig> {
        let mut c = self.clone();
        if let Some(preset) = c.preset {
            let (kernel, cost) = preset.model();
            c.kernel.get_or_insert(kernel);
            c.base_cost.get_or_insert(cost);
            if preset == Preset::Synthetic && c.dataset.path.is_none() && c.dataset.synthetic.is_none() {
                c.dataset.synthetic = Some(SyntheticConfig::default());
            }
        }
        if c.kernel.is_none() || c.base_cost.is_none() {
            return Err(CliError::Config(
                "kernel and base_cost are required unless a preset supplies them".into(),
            ));
        }
        match (&c.dataset.path, &c.dataset.synthetic) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "dataset takes either `path` or `synthetic`, not both".into(),
            )),
            (None, None) => Err(CliError::Config("no dataset given".into())),
            _ => Ok(c),
        }
    }

    /// Hash of the effective configuration. The output directory and the
    /// thread count do not affect results and are left out.
    pub fn hash(&self) -> CliResult<String> {
        let mut c = self.effective()?;
        c.output = PathBuf::new();
        c.jobs = None;
        let json = serde_json::to_vec(&c).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(hex::encode(&Sha256::digest(&json)[..8]))
    }

    pub fn resolve(&self) -> CliResult<ResolvedRun> {
        let config = self.effective()?;
        let config_hash = self.hash()?;
        if config.jobs == Some(0) {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        if config.fraction_steps == 0 {
            return Err(CliError::Config("fraction_steps must be at least 1".into()));
        }
        if !(config.alpha > 0.0 && config.alpha < 1.0) {
            return Err(CliError::Config(format!("alpha must lie in (0, 1), got {}", config.alpha)));
        }
        let mut session = SessionConfig::new(
            Strategy::Cbas,
            config.kernel.expect("filled by effective"),
            config.base_cost.expect("filled by effective"),
            config.seed,
        );
        session.clustering = Some(config.clustering);
        session.solver = config.solver;
        session.train_evaluation = config.train_evaluation;
        let mut experiment = ExperimentConfig::new(
            session,
            config.strategies.clone(),
            config.repetitions,
            config.seed,
        );
        experiment.train_fraction = config.train_fraction;
        experiment.corpus = config.corpus.clone().unwrap_or_default();
        experiment.validate()?;

        let dataset = self.load_dataset(&config)?;
        Ok(ResolvedRun {
            wins: WinOptions {
                alpha: config.alpha,
                kind: config.ttest,
            },
            config,
            dataset,
            experiment,
            config_hash,
        })
    }

    fn load_dataset(&self, config: &RunConfig) -> CliResult<MilDataset> {
        let source = &config.dataset;
        let dataset = match (&source.path, &source.synthetic) {
            (Some(path), _) => {
                let path = self.base_dir.join(path);
                if !path.is_file() {
                    return Err(CliError::Config(format!("dataset {} not found", path.display())));
                }
                load_dataset(&path, source.strict)?
            }
            (None, Some(spec)) => generate_synthetic(spec)?,
            (None, None) => unreachable!("checked by effective"),
        };
        Ok(if source.standardize {
            dataset.standardized()
        } else {
            dataset
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_fill_model_settings() {
        let c = RunConfig::from_toml("preset = \"sival\"\n[dataset]\npath = \"x.csv\"\n").unwrap();
        let e = c.effective().unwrap();
        assert_eq!(e.kernel, Some(KernelSpec::GaussianRbf { gamma: 0.01 }));
        assert_eq!(e.base_cost, Some(1000.0));
        let c = RunConfig::from_toml(
            "preset = \"birds\"\nbase_cost = 10.0\n[dataset]\npath = \"x.csv\"\n",
        )
        .unwrap();
        let e = c.effective().unwrap();
        assert_eq!(e.kernel, Some(KernelSpec::GaussianRbf { gamma: 0.1 }));
        assert_eq!(e.base_cost, Some(10.0));
        assert_eq!(Preset::Newsgroups.model(), (KernelSpec::ChiSquared, 1000.0));
    }

    #[test]
    fn flags_override_file() {
        let mut c = RunConfig::from_toml("preset = \"synthetic\"\nseed = 3\nrepetitions = 5\n").unwrap();
        c.apply(&Overrides {
            seed: Some(9),
            jobs: Some(2),
            ..Default::default()
        });
        assert_eq!(c.seed, 9);
        assert_eq!(c.repetitions, 5);
        assert_eq!(c.jobs, Some(2));
    }

    #[test]
    fn hash_ignores_output_and_jobs() {
        let a = RunConfig::from_toml("preset = \"synthetic\"\n").unwrap();
        let mut b = a.clone();
        b.output = "elsewhere".into();
        b.jobs = Some(3);
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.seed = 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        // explicit values equal to the preset's hash the same
        let c = RunConfig::from_toml(
            "preset = \"synthetic\"\nbase_cost = 1.0\n[kernel]\nkind = \"gaussian-rbf\"\ngamma = 0.5\n",
        )
        .unwrap();
        assert_eq!(a.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn bad_configs_are_config_errors() {
        for text in [
            "unknown_key = 1\n",
            "[dataset]\npath = \"x.csv\"\n",
            "preset = \"sival\"\n",
            "preset = \"synthetic\"\nstrategies = []\n",
            "preset = \"synthetic\"\nstrategies = [\"agin\", \"agin\"]\n",
            "preset = \"synthetic\"\nrepetitions = 0\n",
            "preset = \"synthetic\"\nalpha = 2.0\n",
            "preset = \"synthetic\"\n[dataset]\npath = \"definitely/missing.csv\"\n",
        ] {
            let err = RunConfig::from_toml(text).and_then(|c| c.resolve().map(|_| ()));
            assert!(matches!(err, Err(CliError::Config(_))), "{text}: {err:?}");
        }
    }
}
