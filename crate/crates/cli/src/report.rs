//! Report types and their JSON / CSV serializations.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spheremetric::discontinuity::DsSummary;
use spheremetric::features::PreprocessSpec;
use spheremetric::frechet::OmniFidReport;

use crate::config::RunConfig;
use crate::CliError;

/// Bumped whenever a field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo {
            name: "spheremetric".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractorInfo {
    pub name: String,
    pub dim: usize,
    pub preprocessing: PreprocessSpec,
    pub preprocessing_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub role: String,
    pub root: PathBuf,
    pub count: usize,
    /// Digest of image ids and pixel hashes.
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub id: String,
    pub ds: f64,
}

/// One level of a corruption sweep against the clean reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: String,
    pub level: f64,
    pub fid: f64,
    pub fid_bar_frontal: f64,
    pub fid_bar_up: f64,
    pub fid_bar_down: f64,
    pub omnifid: f64,
    pub ds_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Results {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fid: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub omnifid: Option<OmniFidReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ds: Option<DsSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub sweep: Vec<SweepRow>,
    /// Files written by generating commands, relative to the output root.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
    pub stages: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub config: RunConfig,
    pub extractor: Option<ExtractorInfo>,
    pub datasets: Vec<DatasetInfo>,
    pub results: Results,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub per_image: Vec<ImageScore>,
    pub warnings: Vec<String>,
    /// The only field allowed to differ between identical runs.
    pub timing: Timing,
}

impl MetricReport {
    pub fn new(config: RunConfig) -> Self {
        MetricReport {
            schema_version: SCHEMA_VERSION,
            tool: ToolInfo::current(),
            config,
            extractor: None,
            datasets: Vec::new(),
            results: Results::default(),
            per_image: Vec::new(),
            warnings: Vec::new(),
            timing: Timing::default(),
        }
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self, CliError> {
        Ok(serde_json::from_str(s)?)
    }

    /// Flat table: one row per metric for fid/omnifid, one row per image
    /// for ds, one row per level for sweeps.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let r = &self.results;
        if !r.sweep.is_empty() {
            for row in &r.sweep {
                w.serialize(row)?;
            }
        } else if !self.per_image.is_empty() {
            for row in &self.per_image {
                w.serialize(row)?;
            }
        } else {
            w.write_record(["metric", "group", "value"])?;
            if let Some(f) = r.fid {
                w.write_record(["fid", "", &f.to_string()])?;
            }
            if let Some(o) = &r.omnifid {
                w.write_record(["fid_bar", "frontal", &o.fid_bar.frontal.to_string()])?;
                w.write_record(["fid_bar", "up", &o.fid_bar.up.to_string()])?;
                w.write_record(["fid_bar", "down", &o.fid_bar.down.to_string()])?;
                w.write_record(["omnifid", "", &o.omnifid.to_string()])?;
            }
            if let Some(d) = &r.ds {
                for (name, v) in [
                    ("mean", d.mean),
                    ("q1", d.q1),
                    ("median", d.median),
                    ("q3", d.q3),
                    ("iqr", d.iqr),
                    ("min", d.min),
                    ("max", d.max),
                ] {
                    w.write_record(["ds", name, &v.to_string()])?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
    }

    /// JSON with timing removed, for reproducibility comparisons.
    pub fn without_timing(&self) -> MetricReport {
        MetricReport {
            timing: Timing::default(),
            ..self.clone()
        }
    }
}

/// Companion path for the JSON report when the main output is CSV.
pub fn companion_json_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("report.json")
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp-out");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
