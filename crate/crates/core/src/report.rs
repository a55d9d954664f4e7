//! Per-image and aggregate metric reports.
//!
//! In memory every value keeps full precision. When a report is written,
//! each float is rounded to 6 significant digits, so regenerated reports are
//! byte-identical across runs, thread counts and platforms.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::glcm::{self, GlcmSettings};
use crate::jpeg::{self, JpegSettings, Subsampling};
use crate::pixel::{self, RgbImage};
use crate::tensor::pairwise_sum;

/// Rounds to 6 significant digits. Negative zero becomes zero.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

fn sig6<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig(*x))
}

fn sig6_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&round_sig(*v)),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSettings {
    pub patch_side: usize,
    pub gray_levels: usize,
    pub jpeg_quality: u8,
    pub subsampling: Subsampling,
}

impl Default for ReportSettings {
    fn default() -> Self {
        let g = GlcmSettings::default();
        let j = JpegSettings::default();
        Self {
            patch_side: g.patch_side,
            gray_levels: g.gray_levels,
            jpeg_quality: j.quality,
            subsampling: j.subsampling,
        }
    }
}

impl ReportSettings {
    pub fn glcm(&self) -> GlcmSettings {
        GlcmSettings {
            patch_side: self.patch_side,
            gray_levels: self.gray_levels,
            ..GlcmSettings::default()
        }
    }

    pub fn jpeg(&self) -> JpegSettings {
        JpegSettings {
            quality: self.jpeg_quality,
            subsampling: self.subsampling,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=256).contains(&self.gray_levels) || !self.gray_levels.is_power_of_two() {
            return Err(Error::invalid(format!(
                "gray levels must be a power of two in 2..=256, got {}",
                self.gray_levels
            )));
        }
        if !(1..=100).contains(&self.jpeg_quality) {
            return Err(Error::invalid(format!(
                "JPEG quality must be in 1..=100, got {}",
                self.jpeg_quality
            )));
        }
        self.glcm().offsets().map(|_| ())?;
        if self.patch_side <= *self.glcm().deltas.iter().max().unwrap_or(&0) {
            return Err(Error::invalid(format!(
                "patch side {} is too small for the GLCM offsets",
                self.patch_side
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageEntry {
    pub path: String,
    #[serde(serialize_with = "sig6")]
    pub glcm_score: f64,
    #[serde(serialize_with = "sig6")]
    pub compression_ratio: f64,
    pub patch_count: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregate {
    #[serde(serialize_with = "sig6")]
    pub mean_glcm: f64,
    #[serde(serialize_with = "sig6")]
    pub mean_ratio: f64,
    pub count: usize,
}

/// Externally computed holistic scores, ingested from a sidecar JSON file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Holistic {
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "sig6_opt")]
    pub fid: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "sig6_opt")]
    pub clipscore: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "sig6_opt")]
    pub aesthetics: Option<f64>,
}

impl Holistic {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let h: Holistic = serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        for v in [h.fid, h.clipscore, h.aesthetics].into_iter().flatten() {
            if !v.is_finite() {
                return Err(Error::Validation(format!(
                    "{}: non-finite holistic score",
                    path.display()
                )));
            }
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricReport {
    pub settings: ReportSettings,
    pub per_image: Vec<ImageEntry>,
    pub aggregate: Aggregate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holistic: Option<Holistic>,
}

/// Scores one decoded image. `path` is only used as the entry label.
pub fn score_image(img: &RgbImage, path: &str, settings: &ReportSettings) -> Result<ImageEntry> {
    let gray = pixel::to_gray(img);
    let g = glcm::glcm_score_detailed(&gray, &settings.glcm()).map_err(|e| e.at_path(path))?;
    let ratio = jpeg::compression_ratio(img, &settings.jpeg()).map_err(|e| e.at_path(path))?;
    Ok(ImageEntry {
        path: path.to_owned(),
        glcm_score: g.score,
        compression_ratio: ratio,
        patch_count: g.patch_count,
        width: img.width(),
        height: img.height(),
    })
}

/// An image to score: `label` is what appears in the report, `file` is
/// where the pixels are read from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreInput {
    pub label: String,
    pub file: PathBuf,
}

/// Reads and scores every input on the current rayon pool. Entries are
/// sorted by label.
pub fn score_files(inputs: &[ScoreInput], settings: &ReportSettings) -> Result<Vec<ImageEntry>> {
    settings.validate()?;
    let mut entries = inputs
        .par_iter()
        .map(|input| {
            let img = crate::io::read_rgb(&input.file)?;
            score_image(&img, &input.label, settings)
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(entries)
}

fn mean_of(entries: &[ImageEntry], f: impl Fn(&ImageEntry) -> f64) -> f64 {
    let values: Vec<f64> = entries.iter().map(f).collect();
    pairwise_sum(&values, |v| v) / values.len() as f64
}

impl MetricReport {
    pub fn new(settings: ReportSettings, mut per_image: Vec<ImageEntry>) -> Result<Self> {
        if per_image.is_empty() {
            return Err(Error::invalid("a report needs at least one image"));
        }
        per_image.sort_by(|a, b| a.path.cmp(&b.path));
        let aggregate = Aggregate {
            mean_glcm: mean_of(&per_image, |e| e.glcm_score),
            mean_ratio: mean_of(&per_image, |e| e.compression_ratio),
            count: per_image.len(),
        };
        Ok(Self {
            settings,
            per_image,
            aggregate,
            holistic: None,
        })
    }

    pub fn with_holistic(mut self, holistic: Holistic) -> Self {
        self.holistic = Some(holistic);
        self
    }

    /// Checks the structural invariants of a parsed report. Aggregates are
    /// compared against the per-image means with a tolerance that admits
    /// the 6-significant-digit rounding of written reports.
    pub fn validate(&self) -> Result<()> {
        self.settings.validate()?;
        if self.per_image.len() != self.aggregate.count || self.per_image.is_empty() {
            return Err(Error::Validation(format!(
                "aggregate count {} does not match {} per-image entries",
                self.aggregate.count,
                self.per_image.len()
            )));
        }
        for e in &self.per_image {
            if !(0.0..=1.0).contains(&e.glcm_score)
                || e.compression_ratio.is_nan()
                || e.compression_ratio <= 0.0
                || e.patch_count == 0
            {
                return Err(Error::Validation(format!("{}: metric values out of range", e.path)));
            }
        }
        let checks = [
            (
                "mean_glcm",
                self.aggregate.mean_glcm,
                mean_of(&self.per_image, |e| e.glcm_score),
            ),
            (
                "mean_ratio",
                self.aggregate.mean_ratio,
                mean_of(&self.per_image, |e| e.compression_ratio),
            ),
        ];
        for (name, got, want) in checks {
            if (got - want).abs() > 1e-5 * want.abs().max(1.0) {
                return Err(Error::Validation(format!("{name} is {got}, per-image mean is {want}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "metric report".into(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.at_path(path))
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |source| Error::Csv {
            context: "report CSV".into(),
            source,
        };
        w.write_record([
            "path",
            "glcm_score",
            "compression_ratio",
            "patch_count",
            "width",
            "height",
        ])
        .map_err(csv_err)?;
        for e in &self.per_image {
            w.write_record([
                e.path.clone(),
                round_sig(e.glcm_score).to_string(),
                round_sig(e.compression_ratio).to_string(),
                e.patch_count.to_string(),
                e.width.to_string(),
                e.height.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<report CSV>", e))
    }

    /// Scatter data (`glcm_score` against `compression_ratio`) for external
    /// plotting.
    pub fn write_plot_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |source| Error::Csv {
            context: "plot CSV".into(),
            source,
        };
        w.write_record(["glcm_score", "compression_ratio", "path"])
            .map_err(csv_err)?;
        for e in &self.per_image {
            w.write_record([
                round_sig(e.glcm_score).to_string(),
                round_sig(e.compression_ratio).to_string(),
                e.path.clone(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<plot CSV>", e))
    }

    /// Per-image values of one metric keyed by file name.
    pub fn metric_by_basename(&self, metric: Metric) -> Result<BTreeMap<String, f64>> {
        let mut map = BTreeMap::new();
        for e in &self.per_image {
            if map.insert(basename(&e.path), metric.value(e)).is_some() {
                return Err(Error::invalid(format!(
                    "duplicate file name {:?} in report",
                    basename(&e.path)
                )));
            }
        }
        Ok(map)
    }
}

pub fn basename(path: &str) -> String {
    Path::new(path)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    GlcmScore,
    CompressionRatio,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::GlcmScore, Metric::CompressionRatio];

    pub fn name(self) -> &'static str {
        match self {
            Metric::GlcmScore => "glcm_score",
            Metric::CompressionRatio => "compression_ratio",
        }
    }

    pub fn value(self, e: &ImageEntry) -> f64 {
        match self {
            Metric::GlcmScore => e.glcm_score,
            Metric::CompressionRatio => e.compression_ratio,
        }
    }

    /// Richer texture means a higher GLCM score and a lower compression
    /// ratio.
    pub fn higher_is_better(self) -> bool {
        matches!(self, Metric::GlcmScore)
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::invalid(format!(
                "unknown metric {s:?}, expected glcm_score or compression_ratio"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRate {
    pub a_wins: usize,
    pub b_wins: usize,
    pub ties: usize,
    #[serde(serialize_with = "sig6")]
    pub win_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub count: usize,
    pub glcm_score: WinRate,
    pub compression_ratio: WinRate,
}

impl Comparison {
    pub fn get(&self, metric: Metric) -> &WinRate {
        match metric {
            Metric::GlcmScore => &self.glcm_score,
            Metric::CompressionRatio => &self.compression_ratio,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("comparison serializes");
        s.push('\n');
        s
    }
}

fn win_rate(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>, higher_is_better: bool) -> WinRate {
    let (mut a_wins, mut b_wins, mut ties) = (0, 0, 0);
    for (name, &va) in a {
        let vb = b[name];
        match va.partial_cmp(&vb) {
            Some(std::cmp::Ordering::Equal) | None => ties += 1,
            Some(ord) => {
                if (ord == std::cmp::Ordering::Greater) == higher_is_better {
                    a_wins += 1
                } else {
                    b_wins += 1
                }
            }
        }
    }
    let win_rate = (a_wins as f64 + 0.5 * ties as f64) / a.len() as f64;
    WinRate {
        a_wins,
        b_wins,
        ties,
        win_rate,
    }
}

/// Fraction of images on which set A beats set B, per metric, pairing
/// images by file name. Ties count one half.
pub fn compare_sets(a: &MetricReport, b: &MetricReport) -> Result<Comparison> {
    let ga = a.metric_by_basename(Metric::GlcmScore)?;
    let gb = b.metric_by_basename(Metric::GlcmScore)?;
    let only_a: Vec<&String> = ga.keys().filter(|k| !gb.contains_key(*k)).collect();
    let only_b: Vec<&String> = gb.keys().filter(|k| !ga.contains_key(*k)).collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        return Err(Error::invalid(format!(
            "reports cover different images; only in A: {only_a:?}; only in B: {only_b:?}"
        )));
    }
    let ra = a.metric_by_basename(Metric::CompressionRatio)?;
    let rb = b.metric_by_basename(Metric::CompressionRatio)?;
    Ok(Comparison {
        count: ga.len(),
        glcm_score: win_rate(&ga, &gb, true),
        compression_ratio: win_rate(&ra, &rb, false),
    })
}
