//! Dataset manifests (JSON Lines), resolution filtering and summary
//! statistics, plus the captioning interface in [`caption`].

pub mod caption;

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// One image entry. Fields not modeled here are kept in `extra` and written
/// back unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub path: String,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aesthetic_score: Option<f64>,
    #[serde(default)]
    pub source: String,
    /// Outcome of manual quality review; `None` until reviewed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approved: Option<bool>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl ManifestRecord {
    pub fn new(path: impl Into<String>, width: u32, height: u32) -> Self {
        Self {
            path: path.into(),
            width,
            height,
            caption: None,
            aesthetic_score: None,
            source: String::new(),
            approved: None,
            extra: Map::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.path.is_empty() {
            return Err(Error::Validation("manifest record has an empty path".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Validation(format!(
                "{}: dimensions must be positive, got {}x{}",
                self.path, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn short_side(&self) -> u32 {
        self.width.min(self.height)
    }
}

pub fn parse_manifest(reader: impl BufRead) -> Result<Vec<ManifestRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("<manifest line {}>", i + 1), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ManifestRecord = serde_json::from_str(&line).map_err(|source| Error::Json {
            context: format!("manifest line {}", i + 1),
            source,
        })?;
        record
            .validate()
            .map_err(|e| Error::Validation(format!("manifest line {}: {e}", i + 1)))?;
        records.push(record);
    }
    Ok(records)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(BufReader::new(file)).map_err(|e| e.at_path(path))
}

pub fn write_manifest(mut out: impl Write, records: &[ManifestRecord]) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|source| Error::Json {
            context: format!("serializing {}", r.path),
            source,
        })?;
        writeln!(out, "{line}").map_err(|e| Error::io("<manifest output>", e))?;
    }
    Ok(())
}

pub fn write_manifest_file(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    let mut buf = Vec::new();
    write_manifest(&mut buf, records)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// How the short side is compared against a resolution threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortSideRule {
    /// `min(w, h) > threshold`
    #[default]
    Exceeds,
    /// `min(w, h) >= threshold`
    AtLeast,
}

impl ShortSideRule {
    pub fn passes(self, record: &ManifestRecord, threshold: u32) -> bool {
        match self {
            ShortSideRule::Exceeds => record.short_side() > threshold,
            ShortSideRule::AtLeast => record.short_side() >= threshold,
        }
    }
}

/// Keeps records whose short side strictly exceeds `threshold`, in order.
pub fn filter_short_side(records: &[ManifestRecord], threshold: u32) -> Vec<ManifestRecord> {
    filter_short_side_with(records, threshold, ShortSideRule::Exceeds)
}

pub fn filter_short_side_with(records: &[ManifestRecord], threshold: u32, rule: ShortSideRule) -> Vec<ManifestRecord> {
    records.iter().filter(|r| rule.passes(r, threshold)).cloned().collect()
}

/// Fraction of records passing [`filter_short_side_with`].
pub fn proportion_above(records: &[ManifestRecord], threshold: u32, rule: ShortSideRule) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::invalid("proportion over an empty manifest"));
    }
    let passing = records.iter().filter(|r| rule.passes(r, threshold)).count();
    Ok(passing as f64 / records.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub count: usize,
    pub median_height: u32,
    pub median_width: u32,
    pub mean_height: f64,
    pub mean_width: f64,
}

/// Lower median: element `(n - 1) / 2` of the sorted values.
fn lower_median(mut values: Vec<u32>) -> u32 {
    values.sort_unstable();
    values[(values.len() - 1) / 2]
}

fn mean(values: &[u32]) -> f64 {
    values.iter().map(|&v| u64::from(v)).sum::<u64>() as f64 / values.len() as f64
}

pub fn dataset_stats(records: &[ManifestRecord]) -> Result<DatasetStats> {
    if records.is_empty() {
        return Err(Error::invalid("statistics over an empty manifest"));
    }
    let heights: Vec<u32> = records.iter().map(|r| r.height).collect();
    let widths: Vec<u32> = records.iter().map(|r| r.width).collect();
    Ok(DatasetStats {
        count: records.len(),
        mean_height: mean(&heights),
        mean_width: mean(&widths),
        median_height: lower_median(heights),
        median_width: lower_median(widths),
    })
}

/// Sets the manual-review flag on every record whose path equals `path`.
/// Returns how many records matched.
pub fn set_approval(records: &mut [ManifestRecord], path: &str, approved: bool) -> usize {
    let mut n = 0;
    for r in records.iter_mut().filter(|r| r.path == path) {
        r.approved = Some(approved);
        n += 1;
    }
    n
}
