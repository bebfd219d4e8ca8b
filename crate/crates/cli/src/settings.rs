//! Estimation settings shared by every subcommand, and the run record
//! written next to each command's outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use teflow::pipeline::{LagMode, Transform};
use teflow::te::{DEFAULT_BOOTSTRAP, DEFAULT_QUANTILE_CUTS, DEFAULT_SEED, DEFAULT_SHUFFLES};
use teflow::TeConfig;

/// Every field is optional so that a config file and the command line can
/// be layered; [`Settings::resolve`] fills the gaps with defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub seed: Option<u64>,
    pub base: Option<f64>,
    pub quantiles: Option<Vec<f64>>,
    pub shuffles: Option<usize>,
    pub boot: Option<usize>,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub block_order: Option<usize>,
    pub lag_mode: Option<LagMode>,
    pub source_transform: Option<Transform>,
    pub target_transform: Option<Transform>,
}

impl Settings {
    /// Fields set in `top` win.
    pub fn overlay(self, top: Settings) -> Settings {
        Settings {
            seed: top.seed.or(self.seed),
            base: top.base.or(self.base),
            quantiles: top.quantiles.or(self.quantiles),
            shuffles: top.shuffles.or(self.shuffles),
            boot: top.boot.or(self.boot),
            k: top.k.or(self.k),
            l: top.l.or(self.l),
            block_order: top.block_order.or(self.block_order),
            lag_mode: top.lag_mode.or(self.lag_mode),
            source_transform: top.source_transform.or(self.source_transform),
            target_transform: top.target_transform.or(self.target_transform),
        }
    }

    /// Reads a settings file. A file written as a run record is accepted
    /// too; its `[settings]` table is used and the rest ignored.
    pub fn from_file(path: &Path) -> Result<Settings> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut table: toml::Table =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let table = match table.remove("settings") {
            Some(toml::Value::Table(inner)) => inner,
            Some(_) => bail!("{}: `settings` must be a table", path.display()),
            None => table,
        };
        table
            .try_into()
            .with_context(|| format!("invalid settings in {}", path.display()))
    }

    /// All fields filled in.
    pub fn resolve(self) -> Settings {
        let l = self.l.unwrap_or(1);
        Settings {
            seed: Some(self.seed.unwrap_or(DEFAULT_SEED)),
            base: Some(self.base.unwrap_or(2.0)),
            quantiles: Some(
                self.quantiles
                    .unwrap_or_else(|| DEFAULT_QUANTILE_CUTS.to_vec()),
            ),
            shuffles: Some(self.shuffles.unwrap_or(DEFAULT_SHUFFLES)),
            boot: Some(self.boot.unwrap_or(DEFAULT_BOOTSTRAP)),
            k: Some(self.k.unwrap_or(1)),
            l: Some(l),
            block_order: Some(self.block_order.unwrap_or(l)),
            lag_mode: Some(self.lag_mode.unwrap_or_default()),
            source_transform: Some(self.source_transform.unwrap_or_default()),
            target_transform: Some(self.target_transform.unwrap_or_default()),
        }
    }

    /// Expects a resolved value.
    pub fn te_config(&self) -> TeConfig {
        TeConfig {
            k: self.k.unwrap_or(1),
            l: self.l.unwrap_or(1),
            alphabet_size: self.quantiles.as_ref().map_or(3, |q| q.len() + 1),
            quantile_cuts: self
                .quantiles
                .clone()
                .unwrap_or_else(|| DEFAULT_QUANTILE_CUTS.to_vec()),
            log_base: self.base.unwrap_or(2.0),
            n_shuffles: self.shuffles.unwrap_or(DEFAULT_SHUFFLES),
            n_bootstrap: self.boot.unwrap_or(DEFAULT_BOOTSTRAP),
            block_order: self.block_order.unwrap_or(1),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
        }
    }
}

/// What a run did: command, inputs, outputs and the resolved settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub out: PathBuf,
    pub settings: Settings,
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, toml::Value>,
    #[serde(default)]
    pub outputs: Vec<String>,
}

impl RunRecord {
    pub fn new(command: &str, out: &Path, settings: &Settings) -> Self {
        Self {
            command: command.to_string(),
            out: out.to_path_buf(),
            settings: settings.clone(),
            inputs: BTreeMap::new(),
            parameters: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, name: impl Into<String>, path: &Path) {
        self.inputs.insert(name.into(), path.display().to_string());
    }

    pub fn parameter(&mut self, name: &str, value: impl Into<toml::Value>) {
        self.parameters.insert(name.to_string(), value.into());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.file_name().map_or_else(
            || path.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        ));
    }

    pub fn file_name(command: &str) -> String {
        format!("{command}_run.toml")
    }

    pub fn write(&self) -> Result<PathBuf> {
        let path = self.out.join(Self::file_name(&self.command));
        let text = toml::to_string(self).context("serializing run record")?;
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_prefers_top() {
        let file = Settings {
            seed: Some(1),
            shuffles: Some(10),
            ..Settings::default()
        };
        let cli = Settings {
            seed: Some(7),
            ..Settings::default()
        };
        let merged = file.overlay(cli).resolve();
        assert_eq!(merged.seed, Some(7));
        assert_eq!(merged.shuffles, Some(10));
        assert_eq!(merged.boot, Some(DEFAULT_BOOTSTRAP));
        assert_eq!(
            merged.te_config(),
            TeConfig::default().with_seed(7).with_shuffles(10)
        );
    }

    #[test]
    fn run_record_round_trips_as_settings_file() {
        let dir = tempfile::tempdir().unwrap();
        let settings = Settings {
            l: Some(3),
            lag_mode: Some(LagMode::SourceShift),
            target_transform: Some(Transform::FirstDifference),
            ..Settings::default()
        }
        .resolve();
        let mut record = RunRecord::new("te", dir.path(), &settings);
        record.input("source", Path::new("gtc.csv"));
        record.parameter("max_lag", 8i64);
        let path = record.write().unwrap();
        assert_eq!(Settings::from_file(&path).unwrap(), settings);
        assert_eq!(settings.block_order, Some(3));

        let back: RunRecord = toml::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back, record);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "seed = 3\nshufles = 10\n").unwrap();
        assert!(Settings::from_file(&path).is_err());
        fs::write(&path, "seed = 3\nquantiles = [0.1, 0.5, 0.9]\n").unwrap();
        let s = Settings::from_file(&path).unwrap().resolve();
        assert_eq!(s.te_config().alphabet_size, 4);
    }
}
