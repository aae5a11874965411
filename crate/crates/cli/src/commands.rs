use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use spheremetric::corruption::{image_seed, Corruption};
use spheremetric::dataset::{
    get_or_compute_features, load_all, load_and_normalize, scan, view_tags, DatasetManifest,
    FeatureCache, FeatureRequest, FeatureTable, ManifestEntry, MANIFEST_FILE_NAME, RUN_FILE_NAME,
};
use spheremetric::discontinuity::{ds_image, summarize};
use spheremetric::features::{build_extractor, extract, FeatureExtractor};
use spheremetric::frechet::{
    cubemap_group_features, estimate_gaussian, frechet_distance, group_face_array, group_stats,
    omnifid_from_stats, read_stats, sample_size_warnings, write_stats, GaussianStats, StatsFile,
    StatsProvenance, ViewGroup, DEFAULT_SAMPLE_FLOOR,
};
use spheremetric::image::{ContentHash, Image};
use spheremetric::projection::{project, resize, FaceLabel};
use spheremetric::synth::{graded_seam_corpus, inject_seam, pole_textured};

use crate::config::{CommandKind, RunConfig, SynthKind};
use crate::report::{
    write_atomic, DatasetInfo, ExtractorInfo, ImageScore, MetricReport, SweepRow, Timing,
};
use crate::CliError;

#[derive(Default)]
struct Stopwatch {
    stages: BTreeMap<String, f64>,
}

impl Stopwatch {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        *self.stages.entry(stage.to_string()).or_default() += t.elapsed().as_secs_f64();
        log::info!("{stage}: done in {:.2}s", t.elapsed().as_secs_f64());
        out
    }
}

/// Runs `cfg` and returns its report. Nothing is written for metric
/// commands; generating commands write their files (and [`RUN_FILE_NAME`]).
pub fn execute(cfg: &RunConfig) -> Result<MetricReport, CliError> {
    let start = Instant::now();
    let mut report = MetricReport::new(cfg.clone());
    let mut sw = Stopwatch::default();
    let work = |report: &mut MetricReport, sw: &mut Stopwatch| match cfg.command {
        CommandKind::Fid => cmd_metric(cfg, report, sw, false),
        CommandKind::Omnifid => cmd_metric(cfg, report, sw, true),
        CommandKind::Ds => cmd_ds(cfg, report, sw),
        CommandKind::Sweep => cmd_sweep(cfg, report, sw),
        CommandKind::Corrupt => cmd_corrupt(cfg, report, sw),
        CommandKind::Project => cmd_project(cfg, report, sw),
        CommandKind::Synth => cmd_synth(cfg, report, sw),
    };
    match cfg.jobs {
        Some(0) => return Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Output(format!("thread pool: {e}")))?
            .install(|| work(&mut report, &mut sw))?,
        None => work(&mut report, &mut sw)?,
    }
    report.timing = Timing {
        elapsed_seconds: start.elapsed().as_secs_f64(),
        stages: sw.stages,
    };
    if is_generator(cfg.command) {
        let root = required(&cfg.out, "--out")?;
        write_atomic(&root.join(RUN_FILE_NAME), &report.to_json()?)?;
    }
    Ok(report)
}

pub fn is_generator(kind: CommandKind) -> bool {
    matches!(kind, CommandKind::Corrupt | CommandKind::Project | CommandKind::Synth)
}

fn required<'a>(v: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    v.as_deref()
        .ok_or_else(|| CliError::Usage(format!("{flag} is required for this command")))
}

fn extractor_info(ex: &dyn FeatureExtractor) -> ExtractorInfo {
    ExtractorInfo {
        name: ex.name().to_string(),
        dim: ex.dim(),
        preprocessing: ex.preprocessing(),
        preprocessing_id: ex.preprocessing().to_string(),
    }
}

fn dataset_info(role: &str, m: &DatasetManifest) -> DatasetInfo {
    DatasetInfo {
        role: role.into(),
        root: m.root.clone(),
        count: m.len(),
        digest: m.digest(),
    }
}

fn hash_key(h: &ContentHash) -> u64 {
    u64::from_le_bytes(h.0[..8].try_into().expect("8 bytes"))
}

/// Per-image corruption seed, tied to the image content rather than its
/// position so subsets and supersets agree.
fn corruption_seed(global: u64, entry: &ManifestEntry) -> u64 {
    image_seed(global, hash_key(&entry.hash))
}

fn parse_sweeps(specs: &[String]) -> Result<Vec<Corruption>, CliError> {
    if specs.is_empty() {
        return Err(CliError::Usage("--sweep is required".into()));
    }
    let mut out = Vec::new();
    for s in specs {
        out.extend(Corruption::parse_sweep(s)?);
    }
    Ok(out)
}

const WHOLE: &str = "whole";

fn sections_from_table(table: &FeatureTable, omni: bool) -> Result<Vec<(String, GaussianStats)>, CliError> {
    if omni {
        let faces = table.faces().expect("cubemap features requested");
        let grouped = faces.iter().map(group_face_array).collect::<Result<Vec<_>, _>>()?;
        let stats = group_stats(&grouped)?;
        Ok(ViewGroup::ALL
            .iter()
            .zip(stats)
            .map(|(g, s)| (g.as_str().to_string(), s))
            .collect())
    } else {
        let whole = table.whole().expect("whole features requested");
        Ok(vec![(WHOLE.to_string(), estimate_gaussian(&whole)?)])
    }
}

fn cmd_metric(
    cfg: &RunConfig,
    report: &mut MetricReport,
    sw: &mut Stopwatch,
    omni: bool,
) -> Result<(), CliError> {
    let ex = build_extractor(cfg.extractor, cfg.model_path.as_deref())?;
    report.extractor = Some(extractor_info(&*ex));
    let load = cfg.load_options();
    let proj = cfg.projection();
    let request = if omni {
        FeatureRequest::CUBEMAP
    } else {
        FeatureRequest::WHOLE
    };
    let (whole_tag, cube_tag) = view_tags(&load, &proj);
    let provenance = StatsProvenance {
        extractor: ex.name().to_string(),
        preprocessing: ex.preprocessing().to_string(),
        config: if omni { cube_tag } else { whole_tag },
    };
    let labels: Vec<&str> = if omni {
        ViewGroup::ALL.iter().map(|g| g.as_str()).collect()
    } else {
        vec![WHOLE]
    };
    let mut cache = cfg.cache.as_deref().map(FeatureCache::open).transpose()?;

    let mut features = |role: &str, dir: &Path, report: &mut MetricReport, sw: &mut Stopwatch| {
        let m = sw.time(&format!("scan-{role}"), || scan(dir, &cfg.scan_options()))?;
        report.datasets.push(dataset_info(role, &m));
        let table = sw.time(&format!("features-{role}"), || {
            get_or_compute_features(&m, &*ex, &load, &proj, request, cache.as_mut())
        })?;
        log::info!("{role}: {} images, {} computed", m.len(), table.computed);
        sections_from_table(&table, omni)
    };

    let reuse = cfg.ref_stats.as_deref().filter(|p| p.exists());
    let ref_sections = match reuse {
        Some(path) => {
            let file = read_stats(path)?;
            if file.provenance != provenance {
                return Err(CliError::Usage(format!(
                    "{} was computed under {:?}, this run needs {:?}",
                    path.display(),
                    file.provenance,
                    provenance
                )));
            }
            let mut out = Vec::new();
            for l in &labels {
                let s = file.section(l).ok_or_else(|| {
                    CliError::Usage(format!("{} has no {l:?} section", path.display()))
                })?;
                out.push((l.to_string(), s.clone()));
            }
            let bytes = fs::read(path)?;
            report.datasets.push(DatasetInfo {
                role: "ref-stats".into(),
                root: path.to_path_buf(),
                count: out[0].1.sample_count,
                digest: bytes[bytes.len() - 32..].iter().map(|b| format!("{b:02x}")).collect(),
            });
            out
        }
        None => {
            let dir = required(&cfg.ref_dir, "--ref (or an existing --ref-stats)")?;
            let sections = features("ref", dir, report, sw)?;
            if let Some(path) = &cfg.ref_stats {
                write_stats(
                    path,
                    &StatsFile {
                        provenance: provenance.clone(),
                        sections: sections.clone(),
                    },
                )?;
                log::info!("wrote reference statistics to {}", path.display());
            }
            sections
        }
    };
    let eval_dir = required(&cfg.eval_dir, "--eval")?;
    let eval_sections = features("eval", eval_dir, report, sw)?;

    sw.time("frechet", || -> Result<(), CliError> {
        if omni {
            let a: [GaussianStats; 3] = std::array::from_fn(|i| ref_sections[i].1.clone());
            let b: [GaussianStats; 3] = std::array::from_fn(|i| eval_sections[i].1.clone());
            let r = omnifid_from_stats(&a, &b)?;
            report.warnings.extend(r.warnings.iter().cloned());
            report.results.omnifid = Some(r);
        } else {
            let (a, b) = (&ref_sections[0].1, &eval_sections[0].1);
            report.results.fid = Some(frechet_distance(a, b)?);
            report.warnings.extend(sample_size_warnings(
                &[a.sample_count, b.sample_count],
                DEFAULT_SAMPLE_FLOOR,
            ));
        }
        Ok(())
    })
}

/// DS only looks at the seam columns, so the aspect ratio is not checked.
fn ds_scores(cfg: &RunConfig, m: &DatasetManifest) -> Result<Vec<(String, f64)>, CliError> {
    let ds_cfg = cfg.ds_config();
    ds_cfg.validate()?;
    let scores = m
        .entries
        .par_iter()
        .map(|e| {
            let mut img = Image::open(&m.path_of(e))?;
            if let Some((w, h)) = cfg.resize {
                img = resize(&img, w, h)?;
            }
            Ok((e.id.clone(), ds_image(&img, &ds_cfg)?))
        })
        .collect::<spheremetric::Result<Vec<_>>>()?;
    Ok(scores)
}

fn cmd_ds(cfg: &RunConfig, report: &mut MetricReport, sw: &mut Stopwatch) -> Result<(), CliError> {
    let dir = required(&cfg.eval_dir, "--eval")?;
    let m = sw.time("scan-eval", || scan(dir, &cfg.scan_options()))?;
    report.datasets.push(dataset_info("eval", &m));
    let scores = sw.time("ds", || ds_scores(cfg, &m))?;
    report.results.ds = Some(summarize(&scores)?);
    report.per_image = scores.into_iter().map(|(id, ds)| ImageScore { id, ds }).collect();
    Ok(())
}

struct SweepPoint {
    whole: GaussianStats,
    groups: [GaussianStats; 3],
    ds_mean: f64,
}

fn sweep_point(
    images: &[Image],
    ex: &dyn FeatureExtractor,
    cfg: &RunConfig,
) -> Result<SweepPoint, CliError> {
    let refs: Vec<&Image> = images.iter().collect();
    let whole = estimate_gaussian(&extract(&refs, ex)?)?;
    let groups = group_stats(&cubemap_group_features(images, ex, &cfg.projection())?)?;
    let ds_cfg = cfg.ds_config();
    ds_cfg.validate()?;
    let ds: Vec<f64> = images
        .par_iter()
        .map(|i| ds_image(i, &ds_cfg))
        .collect::<spheremetric::Result<_>>()?;
    Ok(SweepPoint {
        whole,
        groups,
        ds_mean: ds.iter().sum::<f64>() / ds.len() as f64,
    })
}

fn cmd_sweep(cfg: &RunConfig, report: &mut MetricReport, sw: &mut Stopwatch) -> Result<(), CliError> {
    let corruptions = parse_sweeps(&cfg.sweep)?;
    let ex = build_extractor(cfg.extractor, cfg.model_path.as_deref())?;
    report.extractor = Some(extractor_info(&*ex));
    let dir = required(&cfg.ref_dir, "--ref")?;
    let m = sw.time("scan-ref", || scan(dir, &cfg.scan_options()))?;
    report.datasets.push(dataset_info("ref", &m));
    let clean = sw.time("load", || load_all(&m, &cfg.load_options()))?;
    let base = sw.time("clean", || sweep_point(&clean, &*ex, cfg))?;
    let row = |kind: &str, level: f64, p: &SweepPoint| -> Result<SweepRow, CliError> {
        let fid = frechet_distance(&base.whole, &p.whole)?;
        let o = omnifid_from_stats(&base.groups, &p.groups)?;
        Ok(SweepRow {
            kind: kind.into(),
            level,
            fid,
            fid_bar_frontal: o.fid_bar.frontal,
            fid_bar_up: o.fid_bar.up,
            fid_bar_down: o.fid_bar.down,
            omnifid: o.omnifid,
            ds_mean: p.ds_mean,
        })
    };
    report.results.sweep.push(row("none", 0.0, &base)?);
    for c in &corruptions {
        let label = c.label();
        let corrupted = sw.time(&format!("corrupt-{label}"), || {
            clean
                .par_iter()
                .zip(&m.entries)
                .map(|(img, e)| c.apply(img, corruption_seed(cfg.seed, e)))
                .collect::<spheremetric::Result<Vec<_>>>()
        })?;
        let p = sw.time(&format!("metrics-{label}"), || sweep_point(&corrupted, &*ex, cfg))?;
        report.results.sweep.push(row(c.kind_name(), c.strength(), &p)?);
    }
    report.warnings.extend(sample_size_warnings(&[m.len()], DEFAULT_SAMPLE_FLOOR));
    Ok(())
}

fn png_id(id: &str) -> String {
    match id.rsplit_once('.') {
        Some((stem, _)) => format!("{stem}.png"),
        None => format!("{id}.png"),
    }
}

fn id_path(root: &Path, id: &str) -> PathBuf {
    id.split('/').fold(root.to_path_buf(), |p, c| p.join(c))
}

fn save_under(root: &Path, id: &str, img: &Image) -> Result<ManifestEntry, CliError> {
    let path = id_path(root, id);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    img.save(&path)?;
    Ok(ManifestEntry {
        id: id.to_string(),
        hash: img.content_hash()?,
        width: img.width(),
        height: img.height(),
    })
}

fn write_manifest(root: &Path, mut entries: Vec<ManifestEntry>) -> Result<(), CliError> {
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    let manifest = DatasetManifest {
        root: root.to_path_buf(),
        entries,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(&root.join(MANIFEST_FILE_NAME), &text)
}

fn ensure_distinct(input: &Path, out: &Path) -> Result<(), CliError> {
    let canon = |p: &Path| fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
    let (i, o) = (canon(input), canon(out));
    if o.starts_with(&i) || i.starts_with(&o) {
        return Err(CliError::Usage(format!(
            "output {} must not overlap input {}",
            out.display(),
            input.display()
        )));
    }
    Ok(())
}

fn cmd_corrupt(cfg: &RunConfig, report: &mut MetricReport, sw: &mut Stopwatch) -> Result<(), CliError> {
    let corruptions = parse_sweeps(&cfg.sweep)?;
    let input = required(&cfg.input_dir, "--input")?;
    let out = required(&cfg.out, "--out")?;
    ensure_distinct(input, out)?;
    let m = sw.time("scan-input", || scan(input, &cfg.scan_options()))?;
    report.datasets.push(dataset_info("input", &m));
    let load = cfg.load_options();
    for c in &corruptions {
        let label = c.label();
        let level_dir = out.join(&label);
        fs::create_dir_all(&level_dir)?;
        let entries = sw.time(&format!("corrupt-{label}"), || {
            m.entries
                .par_iter()
                .map(|e| {
                    let img = load_and_normalize(&m, e, &load)?;
                    let cor = c.apply(&img, corruption_seed(cfg.seed, e))?;
                    save_under(&level_dir, &png_id(&e.id), &cor)
                })
                .collect::<Result<Vec<_>, CliError>>()
        })?;
        write_manifest(&level_dir, entries)?;
        report.results.outputs.push(label);
    }
    Ok(())
}

fn cmd_project(cfg: &RunConfig, report: &mut MetricReport, sw: &mut Stopwatch) -> Result<(), CliError> {
    let input = required(&cfg.input_dir, "--input")?;
    let out = required(&cfg.out, "--out")?;
    ensure_distinct(input, out)?;
    let m = sw.time("scan-input", || scan(input, &cfg.scan_options()))?;
    report.datasets.push(dataset_info("input", &m));
    let load = cfg.load_options();
    let proj = cfg.projection();
    let written = sw.time("project", || {
        m.entries
            .par_iter()
            .map(|e| {
                let img = load_and_normalize(&m, e, &load)?;
                let cm = project(&img, &proj)?;
                let stem = e.id.rsplit_once('.').map_or(e.id.as_str(), |(s, _)| s);
                FaceLabel::ALL
                    .iter()
                    .map(|&f| {
                        let id = format!("{stem}_{}.png", f.as_str());
                        save_under(out, &id, cm.face(f)).map(|_| id)
                    })
                    .collect::<Result<Vec<_>, CliError>>()
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    report.results.outputs = written.into_iter().flatten().collect();
    Ok(())
}

fn cmd_synth(cfg: &RunConfig, report: &mut MetricReport, sw: &mut Stopwatch) -> Result<(), CliError> {
    let out = required(&cfg.out, "--out")?;
    let spec = cfg
        .synth
        .ok_or_else(|| CliError::Usage("missing synthetic dataset spec".into()))?;
    fs::create_dir_all(out)?;
    let images: Vec<(String, Image)> = sw.time("generate", || -> Result<_, CliError> {
        Ok(match spec.kind {
            SynthKind::Pole | SynthKind::Seamed => (0..spec.count as u64)
                .into_par_iter()
                .map(|i| {
                    let img = pole_textured(spec.width, cfg.seed, i)?;
                    Ok(if spec.kind == SynthKind::Seamed {
                        (format!("seamed_{i:04}.png"), inject_seam(&img, spec.seam_offset))
                    } else {
                        (format!("pole_{i:04}.png"), img)
                    })
                })
                .collect::<spheremetric::Result<Vec<_>>>()?,
            SynthKind::Graded => graded_seam_corpus(spec.width, cfg.seed)?
                .into_iter()
                .enumerate()
                .map(|(k, (_, img))| (format!("graded_{k:02}.png"), img))
                .collect(),
        })
    })?;
    let entries = sw.time("write", || {
        images
            .par_iter()
            .map(|(id, img)| save_under(out, id, img))
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    report.results.outputs = entries.iter().map(|e| e.id.clone()).collect();
    write_manifest(out, entries)
}
