//! SLP1 streamline files and `index,label` CSV label files.
//!
//! SLP1 layout, little-endian:
//!
//! ```text
//! magic  "SLP1"            4 bytes
//! count  u32               number of streamlines
//! repeat count times:
//!   points u16             >= 2
//!   points × (x, y, z) f32
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Point3, Streamline, StreamlineSet};
use crate::error::{Error, Result};

pub const SLP_MAGIC: [u8; 4] = *b"SLP1";

pub fn encode_slp(set: &StreamlineSet) -> Result<Vec<u8>> {
    let count = u32::try_from(set.len())
        .map_err(|_| Error::Config(format!("{} streamlines exceed the SLP1 limit", set.len())))?;
    let payload: usize = set.streamlines.iter().map(|s| 2 + 12 * s.len()).sum();
    let mut buf = Vec::with_capacity(8 + payload);
    buf.extend_from_slice(&SLP_MAGIC);
    buf.extend_from_slice(&count.to_le_bytes());
    for (i, s) in set.streamlines.iter().enumerate() {
        let n = u16::try_from(s.len()).map_err(|_| Error::PointCountTooLarge {
            streamline: i,
            count: s.len(),
        })?;
        buf.extend_from_slice(&n.to_le_bytes());
        for p in s.points() {
            for v in [p.x, p.y, p.z] {
                buf.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
    }
    Ok(buf)
}

pub fn decode_slp(bytes: &[u8]) -> Result<StreamlineSet> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != SLP_MAGIC {
        return Err(Error::BadMagic);
    }
    let count = u32::from_le_bytes(cur.array("streamline count")?) as usize;
    // each streamline occupies at least 2 + 24 bytes
    let mut streamlines = Vec::with_capacity(count.min(bytes.len() / 26));
    for i in 0..count {
        let n = u16::from_le_bytes(cur.array("point count")?) as usize;
        if n < 2 {
            return Err(Error::PointCountTooSmall {
                streamline: i,
                count: n,
            });
        }
        let raw = cur.take(12 * n, "coordinates")?;
        let mut points = Vec::with_capacity(n);
        for (j, chunk) in raw.chunks_exact(12).enumerate() {
            let coord = |k: usize| {
                f32::from_le_bytes(chunk[4 * k..4 * k + 4].try_into().unwrap()) as f64
            };
            let p = Point3::new(coord(0), coord(1), coord(2));
            if !p.is_finite() {
                return Err(Error::NonFiniteCoordinate {
                    streamline: i,
                    point: j,
                });
            }
            points.push(p);
        }
        streamlines.push(Streamline { points });
    }
    if cur.pos != bytes.len() {
        return Err(Error::Truncated(format!(
            "{} trailing bytes after {count} streamlines",
            bytes.len() - cur.pos
        )));
    }
    Ok(StreamlineSet::new(streamlines))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::Truncated(format!("reading {what} at byte {}", self.pos))),
        }
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().unwrap())
    }
}

/// Read an SLP1 file. The returned set carries no labels.
pub fn read_slp(path: impl AsRef<Path>) -> Result<StreamlineSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_slp(&bytes)
}

/// Write an SLP1 file. Coordinates are stored as `f32`; labels are ignored.
pub fn write_slp(set: &StreamlineSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_slp(set)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn parse_labels(text: &str, expected: Option<usize>) -> Result<Vec<usize>> {
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("index,label") => {}
        Some(other) => {
            return Err(Error::LabelFormat(format!(
                "expected header `index,label`, found {other:?}"
            )))
        }
        None => return Err(Error::LabelFormat("missing header `index,label`".into())),
    }
    let mut labels = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (index, label) = line
            .split_once(',')
            .ok_or_else(|| Error::LabelFormat(format!("row {row}: expected two columns")))?;
        let index: usize = index
            .trim()
            .parse()
            .map_err(|_| Error::LabelFormat(format!("row {row}: bad index {index:?}")))?;
        if index != labels.len() {
            return Err(Error::LabelFormat(format!(
                "row {row}: index {index} out of order"
            )));
        }
        let label: usize = label
            .trim()
            .parse()
            .map_err(|_| Error::LabelFormat(format!("row {row}: non-integer label {label:?}")))?;
        labels.push(label);
    }
    if let Some(expected) = expected {
        if expected != labels.len() {
            return Err(Error::LabelCountMismatch {
                expected,
                found: labels.len(),
            });
        }
    }
    Ok(labels)
}

/// Read a label CSV. When `expected` is given the row count must match it.
pub fn read_labels(path: impl AsRef<Path>, expected: Option<usize>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text, expected)
}

pub fn format_labels(labels: &[usize]) -> String {
    let mut out = String::with_capacity(12 + labels.len() * 8);
    out.push_str("index,label\n");
    for (i, l) in labels.iter().enumerate() {
        out.push_str(&format!("{i},{l}\n"));
    }
    out
}

pub fn write_labels(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(format_labels(labels).as_bytes())
        .map_err(|e| Error::io(path, e))
}
