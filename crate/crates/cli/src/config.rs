use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vqasc::ansatz::AnsatzSpec;
use vqasc::datasets::{iris_128, iris_binary, GeneratorSpec};
use vqasc::graph::Dataset;
use vqasc::vqasc::{GraphConfig, ObjectiveConfig, ReadoutConfig};

/// Where the points come from. Exactly one source must be given.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSource {
    pub path: Option<PathBuf>,
    pub generator: Option<GeneratorSpec>,
    /// `iris` (150 rows, setosa vs rest) or `iris128` (the fixed 128-row subsample).
    pub builtin: Option<String>,
    /// Random subsample of this many rows, seeded by `subsample_seed`.
    pub subsample: Option<usize>,
    #[serde(default)]
    pub subsample_seed: u64,
}

impl DatasetSource {
    pub fn load(&self, base: &Path) -> Result<Dataset> {
        let ds = match (&self.path, &self.generator, &self.builtin) {
            (Some(p), None, None) => {
                let p = if p.is_absolute() { p.clone() } else { base.join(p) };
                Dataset::read_csv(&p).with_context(|| format!("reading dataset {}", p.display()))?
            }
            (None, Some(g), None) => g.generate().context("dataset.generator")?,
            (None, None, Some(b)) => match b.as_str() {
                "iris" => iris_binary(),
                "iris128" => iris_128(),
                other => bail!("dataset.builtin: unknown dataset '{other}' (iris|iris128)"),
            },
            (None, None, None) => bail!("dataset: one of path, generator or builtin is required"),
            _ => bail!("dataset: path, generator and builtin are mutually exclusive"),
        };
        match self.subsample {
            Some(n) => Ok(ds.subsample(n, self.subsample_seed).context("dataset.subsample")?),
            None => Ok(ds),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    pub id: String,
    pub layers: usize,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        Self {
            id: "fig4".into(),
            layers: 7,
        }
    }
}

impl AnsatzConfig {
    pub fn spec(&self, n_qubits: usize) -> AnsatzSpec {
        AnsatzSpec::new(self.id.as_str(), n_qubits, self.layers)
    }
}

/// Everything `cluster` needs; together with the seed it fixes the run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub dataset: DatasetSource,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub ansatz: AnsatzConfig,
    #[serde(default)]
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub readout: ReadoutConfig,
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = r#"
            [dataset]
            generator = { kind = "moons", n = 16, noise = 0.05, seed = 1 }

            [graph]
            gamma = 5.0
            k = 4

            [ansatz]
            id = "C"
            layers = 2

            [objective]
            tau = 0.8
            restarts = 2

            [readout]
            dump_statevector = true
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.graph.k, Some(4));
        assert_eq!(cfg.objective.tau, Some(0.8));
        assert_eq!(cfg.objective.max_itr, 2000);
        assert_eq!(cfg.readout.lambdas.len(), 4);
        let ds = cfg.dataset.load(Path::new(".")).unwrap();
        assert_eq!(ds.len(), 16);
    }

    #[test]
    fn bundled_configs_load() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        for name in ["iris", "moons", "circles"] {
            let cfg = RunConfig::from_toml_file(&dir.join(format!("{name}.toml"))).unwrap();
            assert_eq!(cfg.dataset.load(&dir).unwrap().len(), 128, "{name}");
            assert_eq!(cfg.objective.tau, Some(0.8));
        }
    }

    #[test]
    fn unknown_fields_name_their_path() {
        let err = toml::from_str::<RunConfig>("[graph]\ngama = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("gama"));
    }

    #[test]
    fn dataset_sources_are_exclusive() {
        let src = DatasetSource {
            builtin: Some("iris".into()),
            path: Some("x.csv".into()),
            ..Default::default()
        };
        assert!(src.load(Path::new(".")).is_err());
        assert!(DatasetSource::default().load(Path::new(".")).is_err());
    }
}
