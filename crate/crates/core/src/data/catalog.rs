use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::RawDataset;
use crate::error::{Error, Result};

/// Reference shape of a public benchmark table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnownDataset {
    pub name: &'static str,
    pub file: &'static str,
    pub channels: usize,
    pub rows: usize,
    pub granularity: &'static str,
}

pub const KNOWN: &[KnownDataset] = &[
    KnownDataset { name: "ETTh1", file: "ETTh1.csv", channels: 7, rows: 17420, granularity: "1hour" },
    KnownDataset { name: "ETTh2", file: "ETTh2.csv", channels: 7, rows: 17420, granularity: "1hour" },
    KnownDataset { name: "ETTm1", file: "ETTm1.csv", channels: 7, rows: 69680, granularity: "5min" },
    KnownDataset { name: "ETTm2", file: "ETTm2.csv", channels: 7, rows: 69680, granularity: "5min" },
    KnownDataset { name: "traffic", file: "traffic.csv", channels: 862, rows: 17544, granularity: "1hour" },
    KnownDataset { name: "electricity", file: "electricity.csv", channels: 321, rows: 26304, granularity: "1hour" },
    KnownDataset { name: "weather", file: "weather.csv", channels: 21, rows: 52696, granularity: "10min" },
    KnownDataset { name: "ILI", file: "national_illness.csv", channels: 7, rows: 966, granularity: "1week" },
];

pub fn known(name: &str) -> Option<&'static KnownDataset> {
    KNOWN.iter().find(|k| k.name.eq_ignore_ascii_case(name))
}

fn is_ili(name: &str) -> bool {
    name.eq_ignore_ascii_case("ili") || name.eq_ignore_ascii_case("national_illness")
}

/// Look-back used by default: 104 for ILI, 336 otherwise.
pub fn default_lookback(name: &str) -> usize {
    if is_ili(name) {
        104
    } else {
        336
    }
}

pub fn default_horizons(name: &str) -> &'static [usize] {
    if is_ili(name) {
        &[24, 36, 48, 60]
    } else {
        &[96, 192, 336, 720]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub channels: Option<usize>,
    pub granularity: Option<String>,
}

/// TOML file mapping dataset names to files:
///
/// ```toml
/// [datasets.ETTh1]
/// path = "ETT-small/ETTh1.csv"
/// channels = 7
/// granularity = "1hour"
/// ```
///
/// Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub datasets: BTreeMap<String, ManifestEntry>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: Manifest = toml::from_str(&text).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for entry in manifest.datasets.values_mut() {
            if entry.path.is_relative() {
                entry.path = base.join(&entry.path);
            }
        }
        Ok(manifest)
    }
}

/// Resolves dataset names to files: manifest entries first, then the known
/// file names under a data root.
#[derive(Debug, Clone)]
pub struct Catalog {
    pub root: PathBuf,
    pub manifest: Manifest,
}

impl Catalog {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            manifest: Manifest::default(),
        }
    }

    pub fn with_manifest(mut self, manifest: Manifest) -> Self {
        self.manifest = manifest;
        self
    }

    pub fn resolve(&self, name: &str) -> Result<PathBuf> {
        if let Some((_, entry)) = self
            .manifest
            .datasets
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
        {
            return Ok(entry.path.clone());
        }
        match known(name) {
            Some(k) => Ok(self.root.join(k.file)),
            None => Err(Error::InvalidConfig(format!(
                "unknown dataset `{name}`; known: {}",
                KNOWN.iter().map(|k| k.name).collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    /// Loads a dataset by name, labels it with the canonical name and logs a
    /// warning for every mismatch against the reference or manifest shape.
    pub fn load(&self, name: &str) -> Result<RawDataset> {
        let path = self.resolve(name)?;
        let mut ds = super::load_csv(&path)?;
        ds.name = known(name).map(|k| k.name.to_string()).unwrap_or_else(|| name.to_string());
        for w in self.shape_warnings(&ds) {
            log::warn!("{w}");
        }
        Ok(ds)
    }

    pub fn shape_warnings(&self, ds: &RawDataset) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(k) = known(&ds.name) {
            if k.channels != ds.channels() {
                out.push(format!(
                    "{}: {} channels, reference has {}",
                    ds.name,
                    ds.channels(),
                    k.channels
                ));
            }
            if k.rows != ds.rows() {
                out.push(format!("{}: {} rows, reference has {}", ds.name, ds.rows(), k.rows));
            }
        }
        if let Some(entry) = self.manifest.datasets.get(&ds.name) {
            if let Some(c) = entry.channels.filter(|c| *c != ds.channels()) {
                out.push(format!(
                    "{}: {} channels, manifest declares {c}",
                    ds.name,
                    ds.channels()
                ));
            }
        }
        out
    }
}
