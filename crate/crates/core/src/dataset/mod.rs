//! Dataset scanning, loading, and cached feature extraction.

mod cache;

use std::path::{Path, PathBuf};

use globset::{Glob, GlobSet, GlobSetBuilder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::features::{extract, FeatureExtractor, FeatureVector, PreprocessSpec};
use crate::image::{ContentHash, EquirectImage, Image};
use crate::projection::{project, resize, ProjectionConfig};

pub use cache::{CacheKey, FeatureCache, CACHE_FORMAT_VERSION};

pub const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg"];

/// Sidecar written next to generated datasets; ignored by [`scan`].
pub const MANIFEST_FILE_NAME: &str = "manifest.json";
/// Report the command-line tool writes next to generated images.
pub const RUN_FILE_NAME: &str = "run.json";

/// Images processed per extraction round when filling cache misses.
const CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative path with `/` separators.
    pub id: String,
    pub hash: ContentHash,
    pub width: usize,
    pub height: usize,
}

impl ManifestEntry {
    pub fn path(&self, root: &Path) -> PathBuf {
        self.id.split('/').fold(root.to_path_buf(), |p, c| p.join(c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn path_of(&self, entry: &ManifestEntry) -> PathBuf {
        entry.path(&self.root)
    }

    /// SHA-256 over ids and content hashes; independent of the root path.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.entries {
            h.update((e.id.len() as u64).to_le_bytes());
            h.update(e.id.as_bytes());
            h.update(e.hash.0);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Glob filters on relative paths. An empty include list admits every
/// image file.
#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    pub include: Vec<String>,
    pub exclude: Vec<String>,
}

fn glob_set(patterns: &[String]) -> Result<Option<GlobSet>> {
    if patterns.is_empty() {
        return Ok(None);
    }
    let mut b = GlobSetBuilder::new();
    for p in patterns {
        b.add(Glob::new(p).map_err(|e| Error::config(format!("bad glob {p:?}: {e}")))?);
    }
    b.build()
        .map(Some)
        .map_err(|e| Error::config(format!("bad glob set: {e}")))
}

fn is_image_name(name: &str) -> bool {
    name.rsplit_once('.')
        .map(|(_, ext)| IMAGE_EXTENSIONS.iter().any(|e| ext.eq_ignore_ascii_case(e)))
        .unwrap_or(false)
}

fn relative_id(root: &Path, path: &Path) -> Option<String> {
    let rel = path.strip_prefix(root).ok()?;
    let parts: Option<Vec<&str>> = rel.components().map(|c| c.as_os_str().to_str()).collect();
    Some(parts?.join("/"))
}

/// Walks `root` recursively and hashes the decoded pixels of every image.
/// Hidden files, [`MANIFEST_FILE_NAME`] and [`RUN_FILE_NAME`] are ignored
/// silently; other non-image or undecodable files are skipped with a warning.
pub fn scan(root: &Path, opts: &ScanOptions) -> Result<DatasetManifest> {
    if !root.is_dir() {
        return Err(Error::input(format!("{} is not a directory", root.display())));
    }
    let include = glob_set(&opts.include)?;
    let exclude = glob_set(&opts.exclude)?;
    let mut candidates = Vec::new();
    for item in WalkDir::new(root).follow_links(true) {
        let item = match item {
            Ok(i) => i,
            Err(e) => {
                log::warn!("skipping unreadable entry: {e}");
                continue;
            }
        };
        if !item.file_type().is_file() {
            continue;
        }
        let name = item.file_name().to_string_lossy();
        if name.starts_with('.') || name == MANIFEST_FILE_NAME || name == RUN_FILE_NAME {
            continue;
        }
        let Some(id) = relative_id(root, item.path()) else {
            log::warn!("skipping non-UTF-8 path {}", item.path().display());
            continue;
        };
        if !is_image_name(&name) {
            log::warn!("skipping non-image file {id}");
            continue;
        }
        if include.as_ref().is_some_and(|g| !g.is_match(&id))
            || exclude.as_ref().is_some_and(|g| g.is_match(&id))
        {
            continue;
        }
        candidates.push(id);
    }
    candidates.sort();
    let entries: Vec<ManifestEntry> = candidates
        .into_par_iter()
        .filter_map(|id| {
            let path = id.split('/').fold(root.to_path_buf(), |p, c| p.join(c));
            match Image::open(&path).and_then(|img| Ok((img.content_hash()?, img))) {
                Ok((hash, img)) => Some(ManifestEntry {
                    id,
                    hash,
                    width: img.width(),
                    height: img.height(),
                }),
                Err(e) => {
                    log::warn!("skipping {id}: {e}");
                    None
                }
            }
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptyDataset(root.to_path_buf()));
    }
    Ok(DatasetManifest {
        root: root.to_path_buf(),
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Bilinear resize target (width, height).
    pub target: Option<(usize, usize)>,
    /// Reject images that are not 2:1. When off, such images are resized
    /// to `width x width/2` with a warning.
    pub strict_aspect: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            target: None,
            strict_aspect: true,
        }
    }
}

impl LoadOptions {
    fn tag(&self) -> String {
        let target = match self.target {
            Some((w, h)) => format!("{w}x{h}"),
            None => "native".into(),
        };
        format!("load={target},strict={}", self.strict_aspect)
    }
}

/// Decodes one image file to RGB, applies the optional resize and checks
/// the 2:1 equirectangular aspect.
pub fn load_path(path: &Path, opts: &LoadOptions) -> Result<EquirectImage> {
    let mut img = Image::open(path)?;
    if let Some((w, h)) = opts.target {
        if w == 0 || h == 0 {
            return Err(Error::config(format!("resize target {w}x{h} is empty")));
        }
        img = resize(&img, w, h)?;
    }
    let (w, h) = (img.width(), img.height());
    if w != 2 * h {
        if opts.strict_aspect {
            return Err(Error::BadImage {
                path: path.to_path_buf(),
                reason: format!("{w}x{h} is not 2:1 equirectangular (strict aspect mode)"),
            });
        }
        let h2 = (w / 2).max(1);
        log::warn!("{}: {w}x{h} is not 2:1, resizing to {}x{h2}", path.display(), 2 * h2);
        img = resize(&img, 2 * h2, h2)?;
    }
    EquirectImage::new(img)
}

pub fn load_and_normalize(
    manifest: &DatasetManifest,
    entry: &ManifestEntry,
    opts: &LoadOptions,
) -> Result<EquirectImage> {
    load_path(&manifest.path_of(entry), opts)
}

/// Loads every manifest entry in parallel, preserving order.
pub fn load_all(manifest: &DatasetManifest, opts: &LoadOptions) -> Result<Vec<Image>> {
    manifest
        .entries
        .par_iter()
        .map(|e| load_and_normalize(manifest, e, opts).map(EquirectImage::into_image))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureRequest {
    pub whole: bool,
    pub cubemap: bool,
}

impl FeatureRequest {
    pub const WHOLE: FeatureRequest = FeatureRequest {
        whole: true,
        cubemap: false,
    };
    pub const CUBEMAP: FeatureRequest = FeatureRequest {
        whole: false,
        cubemap: true,
    };
    pub const BOTH: FeatureRequest = FeatureRequest {
        whole: true,
        cubemap: true,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub hash: ContentHash,
    pub whole: Option<FeatureVector>,
    /// In [`crate::projection::FaceLabel::ALL`] order.
    pub faces: Option<[FeatureVector; 6]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub extractor: String,
    pub preprocessing: PreprocessSpec,
    pub rows: Vec<FeatureRow>,
    /// Images whose features had to be computed (cache misses).
    pub computed: usize,
}

impl FeatureTable {
    pub fn whole(&self) -> Option<Vec<FeatureVector>> {
        self.rows.iter().map(|r| r.whole.clone()).collect()
    }

    pub fn faces(&self) -> Option<Vec<[FeatureVector; 6]>> {
        self.rows.iter().map(|r| r.faces.clone()).collect()
    }
}

/// Cache view keys for whole-image and cubemap features under these settings.
pub fn view_tags(load: &LoadOptions, projection: &ProjectionConfig) -> (String, String) {
    let face = match projection.face_size {
        Some(n) => n.to_string(),
        None => "auto".into(),
    };
    (
        format!("whole;{}", load.tag()),
        format!("cubemap;{};face={face};{:?}", load.tag(), projection.sampling),
    )
}

/// Whole-image and/or per-face features for every manifest entry, served
/// from `cache` when the (content hash, extractor, preprocessing, view) key
/// matches and computed (then appended to the cache) otherwise.
pub fn get_or_compute_features(
    manifest: &DatasetManifest,
    extractor: &dyn FeatureExtractor,
    load: &LoadOptions,
    projection: &ProjectionConfig,
    request: FeatureRequest,
    mut cache: Option<&mut FeatureCache>,
) -> Result<FeatureTable> {
    if manifest.is_empty() {
        return Err(Error::EmptyDataset(manifest.root.clone()));
    }
    let preprocessing = extractor.preprocessing().to_string();
    let (whole_tag, cube_tag) = view_tags(load, projection);
    let key = |hash: ContentHash, view: &str| CacheKey {
        content: hash,
        extractor: extractor.name().to_string(),
        preprocessing: preprocessing.clone(),
        view: view.to_string(),
    };

    let mut rows: Vec<FeatureRow> = manifest
        .entries
        .iter()
        .map(|e| {
            let lookup = |view: &str| cache.as_deref().and_then(|c| c.get(&key(e.hash, view)));
            FeatureRow {
                id: e.id.clone(),
                hash: e.hash,
                whole: if request.whole {
                    lookup(&whole_tag).and_then(|v| v.first().cloned())
                } else {
                    None
                },
                faces: if request.cubemap {
                    lookup(&cube_tag).and_then(|v| v.to_vec().try_into().ok())
                } else {
                    None
                },
            }
        })
        .collect();

    let missing: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| (request.whole && r.whole.is_none()) || (request.cubemap && r.faces.is_none()))
        .map(|(i, _)| i)
        .collect();

    for chunk in missing.chunks(CHUNK) {
        let images: Vec<Image> = chunk
            .par_iter()
            .map(|&i| load_and_normalize(manifest, &manifest.entries[i], load).map(EquirectImage::into_image))
            .collect::<Result<_>>()?;
        let need_whole: Vec<usize> = (0..chunk.len())
            .filter(|&k| request.whole && rows[chunk[k]].whole.is_none())
            .collect();
        let need_cube: Vec<usize> = (0..chunk.len())
            .filter(|&k| request.cubemap && rows[chunk[k]].faces.is_none())
            .collect();
        if !need_whole.is_empty() {
            let refs: Vec<&Image> = need_whole.iter().map(|&k| &images[k]).collect();
            for (&k, f) in need_whole.iter().zip(extract(&refs, extractor)?) {
                let row = &mut rows[chunk[k]];
                if let Some(c) = cache.as_deref_mut() {
                    c.insert(key(row.hash, &whole_tag), vec![f.clone()])?;
                }
                row.whole = Some(f);
            }
        }
        if !need_cube.is_empty() {
            let cubemaps = need_cube
                .par_iter()
                .map(|&k| project(&images[k], projection))
                .collect::<Result<Vec<_>>>()?;
            let faces: Vec<&Image> = cubemaps.iter().flat_map(|c| c.faces().iter()).collect();
            let feats = extract(&faces, extractor)?;
            for (&k, six) in need_cube.iter().zip(feats.chunks_exact(6)) {
                let row = &mut rows[chunk[k]];
                if let Some(c) = cache.as_deref_mut() {
                    c.insert(key(row.hash, &cube_tag), six.to_vec())?;
                }
                row.faces = Some(six.to_vec().try_into().expect("six faces"));
            }
        }
    }

    Ok(FeatureTable {
        extractor: extractor.name().to_string(),
        preprocessing: extractor.preprocessing(),
        rows,
        computed: missing.len(),
    })
}
