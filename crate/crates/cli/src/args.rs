use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use spheremetric::discontinuity::{DsKernel, DEFAULT_C};
use spheremetric::features::{ExtractorChoice, MODEL_ENV_VAR};

use crate::config::{CommandKind, OutputFormat, RunConfig, SynthKind, SynthSpec};

/// Geometry-aware fidelity metrics for 360-degree images.
#[derive(Debug, Parser)]
#[command(name = "spheremetric", version, about, propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// FID between two equirectangular datasets (whole-image features).
    Fid(MetricArgs),
    /// OmniFID between two equirectangular datasets (cubemap view groups).
    Omnifid(MetricArgs),
    /// Discontinuity Score of every image in a dataset.
    Ds(DsArgs),
    /// Corrupt a dataset in memory and tabulate FID, OmniFID and DS per level.
    Sweep(SweepArgs),
    /// Write corrupted copies of a dataset, one directory per level.
    Corrupt(CorruptArgs),
    /// Write the six cubemap faces of every image.
    Project(ProjectArgs),
    /// Generate a synthetic equirectangular dataset.
    Synth(SynthArgs),
    /// Re-run the configuration embedded in a report and compare results.
    Replay(ReplayArgs),
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
    let w: usize = w.trim().parse().map_err(|_| format!("bad width in {s:?}"))?;
    let h: usize = h.trim().parse().map_err(|_| format!("bad height in {s:?}"))?;
    if w == 0 || h == 0 {
        return Err(format!("size must be positive, got {s:?}"));
    }
    Ok((w, h))
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be > 0, got {s}"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Bilinear resize applied after decoding, e.g. 1024x512.
    #[arg(long, value_parser = parse_size, value_name = "WxH")]
    pub resize: Option<(usize, usize)>,

    /// Reject images that are not 2:1. With `false` they are resized to 2:1.
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    pub strict_aspect: bool,

    /// Only use files whose relative path matches (repeatable).
    #[arg(long, value_name = "GLOB")]
    pub include: Vec<String>,

    /// Skip files whose relative path matches (repeatable).
    #[arg(long, value_name = "GLOB")]
    pub exclude: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractorArgs {
    /// Feature backend: inception-onnx (needs a model file) or mock.
    #[arg(long, default_value = "inception-onnx", value_parser = |s: &str| s.parse::<ExtractorChoice>().map_err(|e| e.to_string()))]
    pub extractor: ExtractorChoice,

    /// Inception-V3 ONNX file.
    #[arg(long, env = MODEL_ENV_VAR, value_name = "FILE")]
    pub model_path: Option<PathBuf>,

    /// Cubemap face edge in pixels (default: half the equirect height).
    #[arg(long, value_name = "PIXELS", value_parser = clap::value_parser!(usize))]
    pub face_size: Option<usize>,

    /// Feature cache file, created if missing.
    #[arg(long, value_name = "FILE")]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Report file (default: stdout). With csv, a `.report.json` sits next to it.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct DsParams {
    #[arg(long, default_value = "scharr-second-order", value_parser = |s: &str| s.parse::<DsKernel>().map_err(|e| e.to_string()))]
    pub ds_kernel: DsKernel,

    /// Stabilizer in the DS ratio (intensities on the 0..255 scale).
    #[arg(long, default_value_t = DEFAULT_C, value_parser = parse_positive)]
    pub ds_c: f64,
}

#[derive(Debug, Clone, Args)]
pub struct MetricArgs {
    /// Reference dataset directory.
    #[arg(long = "ref", value_name = "DIR")]
    pub ref_dir: Option<PathBuf>,

    /// Dataset under evaluation.
    #[arg(long = "eval", value_name = "DIR")]
    pub eval_dir: PathBuf,

    /// Reference statistics file: read if it exists, else computed from
    /// --ref and written.
    #[arg(long, value_name = "FILE")]
    pub ref_stats: Option<PathBuf>,

    #[command(flatten)]
    pub extractor: ExtractorArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub output: OutputArgs,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct DsArgs {
    /// Dataset to score.
    #[arg(long = "eval", value_name = "DIR")]
    pub eval_dir: PathBuf,
    #[command(flatten)]
    pub ds: DsParams,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Clean reference dataset.
    #[arg(long = "ref", value_name = "DIR")]
    pub ref_dir: PathBuf,

    /// `kind[:level,...]` with kind one of fov, salt_pepper, gaussian_noise,
    /// gaussian_blur, seam_crop (repeatable).
    #[arg(long, required = true, value_name = "SPEC")]
    pub sweep: Vec<String>,

    #[command(flatten)]
    pub extractor: ExtractorArgs,
    #[command(flatten)]
    pub ds: DsParams,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct CorruptArgs {
    #[arg(long, value_name = "DIR")]
    pub input: PathBuf,

    /// Output root; one subdirectory per sweep level.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Same syntax as `sweep --sweep` (repeatable).
    #[arg(long, required = true, value_name = "SPEC")]
    pub sweep: Vec<String>,

    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ProjectArgs {
    #[arg(long, value_name = "DIR")]
    pub input: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, value_name = "PIXELS")]
    pub face_size: Option<usize>,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = SynthKind::Pole)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 64)]
    pub count: usize,
    /// Equirect width; height is half of it.
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    /// Seam jump for `--kind seamed`, on the 0..255 scale.
    #[arg(long, default_value_t = 40.0)]
    pub seam_offset: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// A JSON report written by an earlier run.
    #[arg(long, value_name = "FILE")]
    pub report: PathBuf,
    /// Where to write the replayed report (metric commands only).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub enum Invocation {
    Run(RunConfig),
    Replay { report: PathBuf, out: Option<PathBuf> },
}

impl DataArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.resize = self.resize;
        cfg.strict_aspect = self.strict_aspect;
        cfg.include = self.include.clone();
        cfg.exclude = self.exclude.clone();
    }
}

impl ExtractorArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.extractor = self.extractor;
        cfg.model_path = self.model_path.clone();
        cfg.face_size = self.face_size;
        cfg.cache = self.cache.clone();
    }
}

impl Cli {
    pub fn into_invocation(self) -> Invocation {
        let jobs = self.jobs;
        let cfg = match self.command {
            Command::Fid(a) => metric_config(CommandKind::Fid, a),
            Command::Omnifid(a) => metric_config(CommandKind::Omnifid, a),
            Command::Ds(a) => {
                let mut c = RunConfig::new(CommandKind::Ds);
                c.eval_dir = Some(a.eval_dir);
                c.ds_kernel = a.ds.ds_kernel;
                c.ds_c = a.ds.ds_c;
                a.data.apply(&mut c);
                c.out = a.output.out;
                c.format = a.output.format;
                c.seed = a.seed;
                c
            }
            Command::Sweep(a) => {
                let mut c = RunConfig::new(CommandKind::Sweep);
                c.ref_dir = Some(a.ref_dir);
                c.sweep = a.sweep;
                a.extractor.apply(&mut c);
                c.ds_kernel = a.ds.ds_kernel;
                c.ds_c = a.ds.ds_c;
                a.data.apply(&mut c);
                c.out = a.output.out;
                c.format = a.output.format;
                c.seed = a.seed;
                c
            }
            Command::Corrupt(a) => {
                let mut c = RunConfig::new(CommandKind::Corrupt);
                c.input_dir = Some(a.input);
                c.out = Some(a.out);
                c.sweep = a.sweep;
                a.data.apply(&mut c);
                c.seed = a.seed;
                c
            }
            Command::Project(a) => {
                let mut c = RunConfig::new(CommandKind::Project);
                c.input_dir = Some(a.input);
                c.out = Some(a.out);
                c.face_size = a.face_size;
                a.data.apply(&mut c);
                c
            }
            Command::Synth(a) => {
                let mut c = RunConfig::new(CommandKind::Synth);
                c.out = Some(a.out);
                c.seed = a.seed;
                c.synth = Some(SynthSpec {
                    kind: a.kind,
                    count: a.count,
                    width: a.width,
                    seam_offset: a.seam_offset,
                });
                c
            }
            Command::Replay(a) => {
                return Invocation::Replay {
                    report: a.report,
                    out: a.out,
                }
            }
        };
        Invocation::Run(RunConfig { jobs, ..cfg })
    }
}

fn metric_config(kind: CommandKind, a: MetricArgs) -> RunConfig {
    let mut c = RunConfig::new(kind);
    c.ref_dir = a.ref_dir;
    c.eval_dir = Some(a.eval_dir);
    c.ref_stats = a.ref_stats;
    a.extractor.apply(&mut c);
    a.data.apply(&mut c);
    c.out = a.output.out;
    c.format = a.output.format;
    c.seed = a.seed;
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_documented_flags() {
        let cli = Cli::try_parse_from([
            "spheremetric",
            "omnifid",
            "--ref",
            "a",
            "--eval",
            "b",
            "--extractor",
            "mock",
            "--face-size",
            "128",
            "--resize",
            "1024x512",
            "--strict-aspect",
            "false",
            "--format",
            "csv",
            "--out",
            "r.csv",
            "--seed",
            "7",
            "--jobs",
            "2",
        ])
        .unwrap();
        let Invocation::Run(c) = cli.into_invocation() else {
            panic!("expected a run");
        };
        assert_eq!(c.command, CommandKind::Omnifid);
        assert_eq!(c.extractor, ExtractorChoice::Mock);
        assert_eq!(c.face_size, Some(128));
        assert_eq!(c.resize, Some((1024, 512)));
        assert!(!c.strict_aspect);
        assert_eq!(c.format, OutputFormat::Csv);
        assert_eq!((c.seed, c.jobs), (7, Some(2)));
    }

    #[test]
    fn ds_flags() {
        let cli = Cli::try_parse_from([
            "spheremetric",
            "ds",
            "--eval",
            "d",
            "--ds-kernel",
            "scharr-first-order",
            "--ds-c",
            "0.1",
        ])
        .unwrap();
        let Invocation::Run(c) = cli.into_invocation() else {
            panic!("expected a run");
        };
        assert_eq!(c.ds_kernel, DsKernel::ScharrFirstOrder);
        assert_eq!(c.ds_c, 0.1);
        assert!(Cli::try_parse_from(["spheremetric", "ds", "--eval", "d", "--ds-c", "0"]).is_err());
        assert!(Cli::try_parse_from(["spheremetric", "fid", "--eval", "d", "--resize", "12"]).is_err());
    }
}
