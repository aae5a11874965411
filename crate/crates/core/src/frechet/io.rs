//! Binary stats files.
//!
//! Layout (little endian): magic `SMGSTAT\0`, u32 version, three
//! length-prefixed UTF-8 strings (extractor, preprocessing, config), u32
//! section count, then per section a length-prefixed label, u64 dimension,
//! u64 sample count, `d` f64 means and `d*d` f64 covariance entries in
//! row-major order. A SHA-256 digest of everything before it closes the file.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GaussianStats;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SMGSTAT\0";
pub const STATS_FORMAT_VERSION: u32 = 1;
const MAX_DIM: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsProvenance {
    pub extractor: String,
    pub preprocessing: String,
    /// Load and projection settings the features were computed under.
    pub config: String,
}

/// Labelled Gaussian fits sharing one provenance, e.g. `whole`, or the
/// three view groups.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsFile {
    pub provenance: StatsProvenance,
    pub sections: Vec<(String, GaussianStats)>,
}

impl StatsFile {
    pub fn section(&self, label: &str) -> Option<&GaussianStats> {
        self.sections.iter().find(|(l, _)| l == label).map(|(_, s)| s)
    }
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

pub fn encode_stats(file: &StatsFile) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&STATS_FORMAT_VERSION.to_le_bytes());
    put_str(&mut buf, &file.provenance.extractor);
    put_str(&mut buf, &file.provenance.preprocessing);
    put_str(&mut buf, &file.provenance.config);
    buf.extend_from_slice(&(file.sections.len() as u32).to_le_bytes());
    for (label, stats) in &file.sections {
        let d = stats.dim();
        put_str(&mut buf, label);
        buf.extend_from_slice(&(d as u64).to_le_bytes());
        buf.extend_from_slice(&(stats.sample_count as u64).to_le_bytes());
        for v in stats.mean.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for i in 0..d {
            for j in 0..d {
                buf.extend_from_slice(&stats.covariance[(i, j)].to_le_bytes());
            }
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    buf
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(format_err("truncated"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| format_err("string is not UTF-8"))
    }
}

fn format_err(reason: impl Into<String>) -> Error {
    Error::Format {
        kind: "stats file",
        reason: reason.into(),
    }
}

pub fn decode_stats(bytes: &[u8]) -> Result<StatsFile> {
    if bytes.len() < MAGIC.len() + 32 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(format_err("bad magic"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(format_err("checksum mismatch"));
    }
    let mut r = Reader {
        buf: body,
        pos: MAGIC.len(),
    };
    let version = r.u32()?;
    if version != STATS_FORMAT_VERSION {
        return Err(format_err(format!(
            "unsupported version {version} (expected {STATS_FORMAT_VERSION})"
        )));
    }
    let provenance = StatsProvenance {
        extractor: r.string()?,
        preprocessing: r.string()?,
        config: r.string()?,
    };
    let count = r.u32()?;
    let mut sections = Vec::new();
    for _ in 0..count {
        let label = r.string()?;
        let d = r.u64()?;
        if d == 0 || d > MAX_DIM {
            return Err(format_err(format!("implausible dimension {d}")));
        }
        let d = d as usize;
        let sample_count = r.u64()? as usize;
        let mean = DVector::from_iterator(d, (0..d).map(|_| r.f64()).collect::<Result<Vec<_>>>()?);
        let cov = (0..d * d).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let covariance = DMatrix::from_row_slice(d, d, &cov);
        sections.push((
            label,
            GaussianStats {
                mean,
                covariance,
                sample_count,
            },
        ));
    }
    if r.pos != body.len() {
        return Err(format_err("trailing bytes"));
    }
    Ok(StatsFile {
        provenance,
        sections,
    })
}

/// Writes via a temporary sibling and rename, so readers never see a
/// partial file.
pub fn write_stats(path: &Path, file: &StatsFile) -> Result<()> {
    let bytes = encode_stats(file);
    let tmp = path.with_extension("tmp-stats");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_stats(path: &Path) -> Result<StatsFile> {
    decode_stats(&fs::read(path)?)
}
