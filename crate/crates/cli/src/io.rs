//! File formats: `series.csv`, EFRKSNAP snapshots with JSON sidecars, and
//! run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use efrk::spectral::Axis;
use efrk::{Grid, RealField, TimeSeriesRecord};
use serde::{Deserialize, Serialize};

pub const SERIES_HEADER: [&str; 7] = ["step", "t", "tau", "energy", "mass", "err_l2", "cpu_s"];
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"EFRKSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Shortest round-trip representation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

/// Writes rows under a header through a single CSV writer.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())?;
    }
    w.flush()?;
    Ok(())
}

pub fn series_row(r: &TimeSeriesRecord) -> Vec<String> {
    vec![
        r.step.to_string(),
        fmt_f64(r.t),
        fmt_f64(r.tau),
        fmt_f64(r.energy),
        fmt_f64(r.mass),
        r.err_l2.map(fmt_f64).unwrap_or_default(),
        fmt_f64(r.cpu_s),
    ]
}

pub fn write_series<'a>(path: &Path, records: impl IntoIterator<Item = &'a TimeSeriesRecord>) -> Result<()> {
    write_csv(path, &SERIES_HEADER, records.into_iter().map(series_row))
}

pub fn read_series(path: &Path) -> Result<Vec<TimeSeriesRecord>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    ensure!(header == SERIES_HEADER, "{}: unexpected header {header:?}", path.display());
    let mut out = Vec::new();
    for (line, row) in r.records().enumerate() {
        let row = row?;
        let num = |k: usize| -> Result<f64> {
            row[k]
                .parse()
                .with_context(|| format!("{}: row {}: bad {}", path.display(), line + 1, SERIES_HEADER[k]))
        };
        out.push(TimeSeriesRecord {
            step: row[0].parse().with_context(|| format!("{}: row {}: bad step", path.display(), line + 1))?,
            t: num(1)?,
            tau: num(2)?,
            energy: num(3)?,
            mass: num(4)?,
            err_l2: if row[5].is_empty() { None } else { Some(num(5)?) },
            cpu_s: num(6)?,
        });
    }
    Ok(out)
}

/// Header of an EFRKSNAP file; also the content of its JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    pub n: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub t: f64,
}

impl SnapshotHeader {
    pub fn of(field: &RealField, t: f64) -> Self {
        let axes = field.grid().axes();
        Self {
            format: "EFRKSNAP".into(),
            version: SNAPSHOT_VERSION,
            dim: axes.len(),
            n: axes.iter().map(|a| a.n).collect(),
            lower: axes.iter().map(|a| a.lower).collect(),
            upper: axes.iter().map(|a| a.upper).collect(),
            t,
        }
    }
}

/// Magic, `u32` version, `u32` dimension, `u32` points per axis, `f64`
/// bounds `(a_k, b_k)` per axis, `f64` time, then the values in grid order;
/// everything little-endian.
pub fn encode_snapshot(field: &RealField, t: f64) -> Vec<u8> {
    let axes = field.grid().axes();
    let mut buf = Vec::with_capacity(24 + 20 * axes.len() + 8 * field.len());
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(axes.len() as u32).to_le_bytes());
    for a in axes {
        buf.extend_from_slice(&(a.n as u32).to_le_bytes());
    }
    for a in axes {
        buf.extend_from_slice(&a.lower.to_le_bytes());
        buf.extend_from_slice(&a.upper.to_le_bytes());
    }
    buf.extend_from_slice(&t.to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        ensure!(end <= self.bytes.len(), "snapshot truncated at byte {}", self.pos);
        let out = self.bytes[self.pos..end].try_into().expect("slice of length N");
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<(RealField, f64)> {
    let mut c = Cursor { bytes, pos: 0 };
    if &c.take::<8>()? != SNAPSHOT_MAGIC {
        bail!("not an EFRKSNAP file");
    }
    let version = c.u32()?;
    ensure!(version == SNAPSHOT_VERSION, "unsupported snapshot version {version}");
    let dim = c.u32()? as usize;
    ensure!((1..=3).contains(&dim), "invalid snapshot dimension {dim}");
    let n: Vec<usize> = (0..dim).map(|_| c.u32().map(|v| v as usize)).collect::<Result<_>>()?;
    let mut axes = Vec::with_capacity(dim);
    for &nk in &n {
        let (lower, upper) = (c.f64()?, c.f64()?);
        axes.push(Axis { n: nk, lower, upper });
    }
    let t = c.f64()?;
    let grid = Grid::from_axes(axes).context("invalid snapshot grid")?;
    let expected = c.pos + 8 * grid.len();
    ensure!(
        bytes.len() == expected,
        "snapshot holds {} bytes, expected {expected}",
        bytes.len()
    );
    let values = (0..grid.len()).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    Ok((RealField::new(&grid, values)?, t))
}

/// Writes `path` and its JSON sidecar `path.json`.
pub fn write_snapshot(path: &Path, field: &RealField, t: f64) -> Result<()> {
    let mut file = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    file.write_all(&encode_snapshot(field, t))?;
    write_json(&sidecar_path(path), &SnapshotHeader::of(field, t))
}

pub fn read_snapshot(path: &Path) -> Result<(RealField, f64)> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    decode_snapshot(&bytes).with_context(|| format!("{}", path.display()))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn snapshot_name(index: usize) -> String {
    format!("snapshot_{index:04}.efrksnap")
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}
