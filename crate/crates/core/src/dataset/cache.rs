//! Append-only feature cache.
//!
//! File layout: magic `SMFCACHE`, u32 version, then records. Each record is
//! a u32 payload length, the payload, and the SHA-256 of the payload.
//! Payload: 32-byte content hash, three length-prefixed strings
//! (extractor, preprocessing, view), u32 vector count, u32 dimension, and
//! the f64 values (little endian throughout).
//!
//! A record is written with a single `write_all` on a file opened in append
//! mode, so a reader racing the writer sees at worst an incomplete tail,
//! which it ignores. A checksum failure or an impossible length is treated
//! as corruption: the valid prefix is kept and the file is rewritten.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::image::ContentHash;

const MAGIC: &[u8; 8] = b"SMFCACHE";
pub const CACHE_FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 12;
const MAX_RECORD: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub content: ContentHash,
    pub extractor: String,
    pub preprocessing: String,
    /// What was fed to the extractor, e.g. whole image or cubemap faces,
    /// including load and projection settings.
    pub view: String,
}

pub struct FeatureCache {
    path: PathBuf,
    entries: HashMap<CacheKey, Vec<FeatureVector>>,
    file: File,
}

impl std::fmt::Debug for FeatureCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeatureCache")
            .field("path", &self.path)
            .field("entries", &self.entries.len())
            .finish()
    }
}

fn header() -> Vec<u8> {
    let mut h = MAGIC.to_vec();
    h.extend_from_slice(&CACHE_FORMAT_VERSION.to_le_bytes());
    h
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

fn encode_record(key: &CacheKey, vectors: &[FeatureVector]) -> Vec<u8> {
    let dim = vectors.first().map_or(0, FeatureVector::dim);
    let mut payload = Vec::with_capacity(64 + 8 * dim * vectors.len());
    payload.extend_from_slice(&key.content.0);
    put_str(&mut payload, &key.extractor);
    put_str(&mut payload, &key.preprocessing);
    put_str(&mut payload, &key.view);
    payload.extend_from_slice(&(vectors.len() as u32).to_le_bytes());
    payload.extend_from_slice(&(dim as u32).to_le_bytes());
    for v in vectors {
        for x in v.as_slice() {
            payload.extend_from_slice(&x.to_le_bytes());
        }
    }
    let mut rec = Vec::with_capacity(payload.len() + 36);
    rec.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    rec.extend_from_slice(&payload);
    rec.extend_from_slice(&Sha256::digest(&payload));
    rec
}

fn decode_payload(p: &[u8]) -> Option<(CacheKey, Vec<FeatureVector>)> {
    let mut pos = 0;
    let mut take = |n: usize| -> Option<&[u8]> {
        let s = p.get(pos..pos + n)?;
        pos += n;
        Some(s)
    };
    let content = ContentHash(take(32)?.try_into().ok()?);
    let mut string = || -> Option<String> {
        let n = u32::from_le_bytes(take(4)?.try_into().ok()?) as usize;
        String::from_utf8(take(n)?.to_vec()).ok()
    };
    let extractor = string()?;
    let preprocessing = string()?;
    let view = string()?;
    let count = u32::from_le_bytes(take(4)?.try_into().ok()?) as usize;
    let dim = u32::from_le_bytes(take(4)?.try_into().ok()?) as usize;
    let body = take(count.checked_mul(dim)?.checked_mul(8)?)?;
    if pos != p.len() {
        return None;
    }
    let vectors = body
        .chunks_exact(8 * dim.max(1))
        .take(count)
        .map(|c| {
            FeatureVector::new(c.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect()).ok()
        })
        .collect::<Option<Vec<_>>>()?;
    Some((
        CacheKey {
            content,
            extractor,
            preprocessing,
            view,
        },
        vectors,
    ))
}

enum Scan {
    Clean,
    /// Incomplete trailing record (interrupted or in-flight append).
    Partial(usize),
    Corrupt(usize, String),
}

fn parse(bytes: &[u8], entries: &mut HashMap<CacheKey, Vec<FeatureVector>>) -> Scan {
    if bytes.len() < HEADER_LEN || bytes[..HEADER_LEN] != header()[..] {
        return Scan::Corrupt(0, "bad header or unsupported version".into());
    }
    let mut pos = HEADER_LEN;
    while pos < bytes.len() {
        let Some(len) = bytes.get(pos..pos + 4) else {
            return Scan::Partial(pos);
        };
        let len = u32::from_le_bytes(len.try_into().unwrap()) as usize;
        if len > MAX_RECORD {
            return Scan::Corrupt(pos, format!("record length {len} at offset {pos}"));
        }
        let end = pos + 4 + len + 32;
        if end > bytes.len() {
            return Scan::Partial(pos);
        }
        let payload = &bytes[pos + 4..pos + 4 + len];
        if Sha256::digest(payload).as_slice() != &bytes[pos + 4 + len..end] {
            return Scan::Corrupt(pos, format!("checksum mismatch at offset {pos}"));
        }
        match decode_payload(payload) {
            Some((k, v)) => {
                entries.insert(k, v);
            }
            None => return Scan::Corrupt(pos, format!("malformed record at offset {pos}")),
        }
        pos = end;
    }
    Scan::Clean
}

impl FeatureCache {
    /// Opens (creating if needed) a cache file for reading and appending.
    /// This handle is meant to be the only writer.
    pub fn open(path: &Path) -> Result<FeatureCache> {
        let mut entries = HashMap::new();
        let existing = match fs::read(path) {
            Ok(b) => Some(b),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        let rewrite = match &existing {
            None => Some(0),
            Some(bytes) => match parse(bytes, &mut entries) {
                Scan::Clean => None,
                Scan::Partial(at) => {
                    log::warn!("{}: dropping incomplete trailing record", path.display());
                    Some(at)
                }
                Scan::Corrupt(at, why) => {
                    log::warn!(
                        "{}: cache corrupted ({why}); rebuilding from {} intact entries",
                        path.display(),
                        entries.len()
                    );
                    Some(at)
                }
            },
        };
        if let Some(keep) = rewrite {
            let mut bytes = header();
            if let Some(old) = &existing {
                if keep > HEADER_LEN {
                    bytes.extend_from_slice(&old[HEADER_LEN..keep]);
                }
            }
            let tmp = path.with_extension("tmp-cache");
            fs::write(&tmp, &bytes)?;
            fs::rename(&tmp, path)?;
        }
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(FeatureCache {
            path: path.to_path_buf(),
            entries,
            file,
        })
    }

    /// Read-only snapshot; tolerates an in-flight append at the tail.
    pub fn snapshot(path: &Path) -> Result<HashMap<CacheKey, Vec<FeatureVector>>> {
        let bytes = fs::read(path)?;
        let mut entries = HashMap::new();
        match parse(&bytes, &mut entries) {
            Scan::Clean | Scan::Partial(_) => Ok(entries),
            Scan::Corrupt(_, why) => Err(Error::Format {
                kind: "feature cache",
                reason: why,
            }),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &CacheKey) -> Option<&[FeatureVector]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn insert(&mut self, key: CacheKey, vectors: Vec<FeatureVector>) -> Result<()> {
        if let Some(d) = vectors.first().map(FeatureVector::dim) {
            if let Some(bad) = vectors.iter().find(|v| v.dim() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: bad.dim(),
                });
            }
        }
        self.file.write_all(&encode_record(&key, &vectors))?;
        self.file.flush()?;
        self.entries.insert(key, vectors);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(i: u8, view: &str) -> CacheKey {
        CacheKey {
            content: ContentHash([i; 32]),
            extractor: "mock".into(),
            preprocessing: "native".into(),
            view: view.into(),
        }
    }

    fn vecs(seed: f64, n: usize) -> Vec<FeatureVector> {
        (0..n)
            .map(|i| FeatureVector::new(vec![seed, i as f64 * 0.1 + 1e-17, -seed / 3.0]).unwrap())
            .collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.smcache");
        let mut c = FeatureCache::open(&p).unwrap();
        c.insert(key(1, "whole"), vecs(0.7, 1)).unwrap();
        c.insert(key(1, "cube"), vecs(1.0 / 3.0, 6)).unwrap();
        drop(c);
        let c = FeatureCache::open(&p).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.get(&key(1, "cube")).unwrap(), vecs(1.0 / 3.0, 6).as_slice());
        assert!(c.get(&key(2, "cube")).is_none());
        assert_eq!(FeatureCache::snapshot(&p).unwrap().len(), 2);
    }

    #[test]
    fn partial_tail_is_tolerated_then_trimmed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.smcache");
        let mut c = FeatureCache::open(&p).unwrap();
        c.insert(key(1, "whole"), vecs(2.0, 1)).unwrap();
        drop(c);
        let full_len = fs::metadata(&p).unwrap().len();
        let rec = encode_record(&key(2, "whole"), &vecs(3.0, 1));
        let mut f = OpenOptions::new().append(true).open(&p).unwrap();
        f.write_all(&rec[..rec.len() / 2]).unwrap();
        drop(f);
        assert_eq!(FeatureCache::snapshot(&p).unwrap().len(), 1);
        let c = FeatureCache::open(&p).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(fs::metadata(&p).unwrap().len(), full_len);
    }

    #[test]
    fn corruption_triggers_rebuild() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.smcache");
        let mut c = FeatureCache::open(&p).unwrap();
        c.insert(key(1, "whole"), vecs(2.0, 1)).unwrap();
        let good_len = fs::metadata(&p).unwrap().len() as usize;
        c.insert(key(2, "whole"), vecs(5.0, 1)).unwrap();
        drop(c);
        let mut bytes = fs::read(&p).unwrap();
        let last = bytes.len() - 40;
        bytes[last] ^= 0xff;
        fs::write(&p, &bytes).unwrap();
        assert!(FeatureCache::snapshot(&p).is_err());
        let mut c = FeatureCache::open(&p).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(fs::metadata(&p).unwrap().len() as usize, good_len);
        c.insert(key(3, "whole"), vecs(9.0, 1)).unwrap();
        drop(c);
        assert_eq!(FeatureCache::open(&p).unwrap().len(), 2);

        fs::write(&p, b"garbage!").unwrap();
        assert_eq!(FeatureCache::open(&p).unwrap().len(), 0);
    }
}
