use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use spheremetric::dataset::{LoadOptions, ScanOptions};
use spheremetric::discontinuity::{DsConfig, DsKernel, DEFAULT_C};
use spheremetric::features::ExtractorChoice;
use spheremetric::projection::{ProjectionConfig, Sampling};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Fid,
    Omnifid,
    Ds,
    Sweep,
    Corrupt,
    Project,
    Synth,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::Fid => "fid",
            CommandKind::Omnifid => "omnifid",
            CommandKind::Ds => "ds",
            CommandKind::Sweep => "sweep",
            CommandKind::Corrupt => "corrupt",
            CommandKind::Project => "project",
            CommandKind::Synth => "synth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    /// Seamless pole-textured panoramas.
    #[default]
    Pole,
    /// Pole-textured panoramas with a seam offset injected.
    Seamed,
    /// One scene at ten increasing seam offsets.
    Graded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub count: usize,
    pub width: usize,
    pub seam_offset: f64,
}

/// Everything that determines a run's output. Serialized into every
/// report so the run can be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub ref_dir: Option<PathBuf>,
    pub eval_dir: Option<PathBuf>,
    pub input_dir: Option<PathBuf>,
    pub ref_stats: Option<PathBuf>,
    pub extractor: ExtractorChoice,
    pub model_path: Option<PathBuf>,
    pub face_size: Option<usize>,
    pub resize: Option<(usize, usize)>,
    pub strict_aspect: bool,
    pub include: Vec<String>,
    pub exclude: Vec<String>,
    pub ds_kernel: DsKernel,
    pub ds_c: f64,
    pub sweep: Vec<String>,
    pub synth: Option<SynthSpec>,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        RunConfig {
            command,
            ref_dir: None,
            eval_dir: None,
            input_dir: None,
            ref_stats: None,
            extractor: ExtractorChoice::default(),
            model_path: None,
            face_size: None,
            resize: None,
            strict_aspect: true,
            include: Vec::new(),
            exclude: Vec::new(),
            ds_kernel: DsKernel::default(),
            ds_c: DEFAULT_C,
            sweep: Vec::new(),
            synth: None,
            seed: 0,
            jobs: None,
            cache: None,
            out: None,
            format: OutputFormat::Json,
        }
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            target: self.resize,
            strict_aspect: self.strict_aspect,
        }
    }

    pub fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            include: self.include.clone(),
            exclude: self.exclude.clone(),
        }
    }

    pub fn projection(&self) -> ProjectionConfig {
        ProjectionConfig {
            face_size: self.face_size,
            sampling: Sampling::Bilinear,
        }
    }

    pub fn ds_config(&self) -> DsConfig {
        DsConfig {
            kernel: self.ds_kernel,
            c: self.ds_c,
        }
    }
}
