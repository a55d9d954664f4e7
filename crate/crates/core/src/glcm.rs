//! Gray-level co-occurrence matrices and the patch-averaged GLCM entropy
//! score.
//!
//! Matrices are accumulated symmetrically: every displaced pair `(a, b)`
//! increments both `(a, b)` and `(b, a)`. Entropy is base 2 and normalized
//! by `log2(levels^2)`, so a score lies in `[0, 1]` and higher means richer
//! local texture.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pixel::{self, GrayImage, GrayPatch};
use crate::tensor::pairwise_sum;

pub const DEFAULT_PATCH_SIDE: usize = 64;
pub const DEFAULT_GRAY_LEVELS: usize = 64;
pub const DEFAULT_DELTAS: [usize; 4] = [1, 2, 3, 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "0")]
    Deg0,
    #[serde(rename = "45")]
    Deg45,
    #[serde(rename = "90")]
    Deg90,
    #[serde(rename = "135")]
    Deg135,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [
        Orientation::Deg0,
        Orientation::Deg45,
        Orientation::Deg90,
        Orientation::Deg135,
    ];

    pub fn degrees(self) -> u32 {
        match self {
            Orientation::Deg0 => 0,
            Orientation::Deg45 => 45,
            Orientation::Deg90 => 90,
            Orientation::Deg135 => 135,
        }
    }

    /// Unit (row, col) step. Row indices grow downwards, so "up" is -1.
    fn unit_step(self) -> (isize, isize) {
        match self {
            Orientation::Deg0 => (0, 1),
            Orientation::Deg45 => (-1, 1),
            Orientation::Deg90 => (-1, 0),
            Orientation::Deg135 => (-1, -1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlcmOffset {
    pub delta: usize,
    pub theta: Orientation,
}

impl GlcmOffset {
    pub fn new(delta: usize, theta: Orientation) -> Result<Self> {
        if delta == 0 {
            return Err(Error::invalid("GLCM offset distance must be >= 1"));
        }
        Ok(Self { delta, theta })
    }

    /// Pixel displacement `(dr, dc)` from the reference pixel to its neighbor.
    pub fn displacement(self) -> (isize, isize) {
        let (ur, uc) = self.theta.unit_step();
        let d = self.delta as isize;
        (ur * d, uc * d)
    }

    /// All distance/orientation combinations for the given distances,
    /// distance-major.
    pub fn grid(deltas: &[usize]) -> Result<Vec<GlcmOffset>> {
        let mut out = Vec::with_capacity(deltas.len() * 4);
        for &delta in deltas {
            for theta in Orientation::ALL {
                out.push(GlcmOffset::new(delta, theta)?);
            }
        }
        Ok(out)
    }

    /// The 16 combinations of distances 1..=4 and the four orientations.
    pub fn defaults() -> Vec<GlcmOffset> {
        Self::grid(&DEFAULT_DELTAS).expect("default distances are positive")
    }
}

/// Symmetric co-occurrence counts for one patch and one offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glcm {
    levels: usize,
    counts: Vec<u32>,
    total: u64,
}

impl Glcm {
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Raw symmetric pair counts, `levels x levels` row-major.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.levels + j]
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        f64::from(self.count(i, j)) / self.total as f64
    }

    /// Normalized matrix, `levels x levels` row-major.
    pub fn probs(&self) -> Vec<f64> {
        if self.total == 0 {
            return vec![0.0; self.counts.len()];
        }
        let n = self.total as f64;
        self.counts.iter().map(|&c| f64::from(c) / n).collect()
    }
}

/// Accumulates symmetric co-occurrence counts into `counts` (which must be
/// zeroed, `levels^2` long). Returns the number of increments.
fn accumulate(data: &[u8], side: usize, levels: usize, offset: GlcmOffset, counts: &mut [u32]) -> u64 {
    let (dr, dc) = offset.displacement();
    let d = offset.delta;
    // Rows/cols of reference pixels whose neighbor stays inside the patch.
    let rows = if dr < 0 { d..side } else { 0..side - dr as usize };
    let cols = if dc < 0 { d..side } else { 0..side - dc as usize };
    let mut pairs = 0u64;
    for r in rows {
        let nr = (r as isize + dr) as usize;
        let row = &data[r * side..(r + 1) * side];
        let nrow = &data[nr * side..(nr + 1) * side];
        for c in cols.clone() {
            let a = usize::from(row[c]);
            let b = usize::from(nrow[(c as isize + dc) as usize]);
            counts[a * levels + b] += 1;
            counts[b * levels + a] += 1;
        }
        pairs += cols.len() as u64;
    }
    pairs * 2
}

pub fn glcm(patch: &GrayPatch, offset: GlcmOffset) -> Result<Glcm> {
    if offset.delta >= patch.side() {
        return Err(Error::invalid(format!(
            "offset distance {} must be smaller than patch side {}",
            offset.delta,
            patch.side()
        )));
    }
    let levels = patch.levels();
    let mut counts = vec![0u32; levels * levels];
    let total = accumulate(patch.data(), patch.side(), levels, offset, &mut counts);
    Ok(Glcm { levels, counts, total })
}

/// Base-2 entropy of the normalized matrix divided by `log2(levels^2)`.
pub fn glcm_entropy(g: &Glcm) -> Result<f64> {
    if g.total == 0 {
        return Err(Error::invalid("entropy of an all-zero co-occurrence matrix"));
    }
    Ok(normalized_entropy(&g.counts, g.total, g.levels, &XLogX::new(0)))
}

/// Memoized `c * log2(c)` for small integer counts.
struct XLogX(Vec<f64>);

impl XLogX {
    fn new(max: usize) -> Self {
        Self((0..=max).map(xlog2x).collect())
    }

    #[inline]
    fn get(&self, c: u32) -> f64 {
        self.0.get(c as usize).copied().unwrap_or_else(|| xlog2x(c as usize))
    }
}

fn xlog2x(c: usize) -> f64 {
    if c == 0 {
        0.0
    } else {
        let c = c as f64;
        c * c.log2()
    }
}

// H = log2(N) - (1/N) * sum c log2 c, for counts c summing to N.
fn normalized_entropy(counts: &[u32], total: u64, levels: usize, table: &XLogX) -> f64 {
    let n = total as f64;
    let acc: f64 = counts.iter().filter(|&&c| c > 0).map(|&c| table.get(c)).sum();
    let h = n.log2() - acc / n;
    // The smallest non-zero entropy for these counts is about log2(N)/N;
    // anything below 1e-9 is cancellation residue of a point mass.
    let h = if h < 1e-9 { 0.0 } else { h };
    let max = 2.0 * (levels as f64).log2();
    (h / max).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlcmSettings {
    pub patch_side: usize,
    pub gray_levels: usize,
    pub deltas: Vec<usize>,
}

impl Default for GlcmSettings {
    fn default() -> Self {
        Self {
            patch_side: DEFAULT_PATCH_SIDE,
            gray_levels: DEFAULT_GRAY_LEVELS,
            deltas: DEFAULT_DELTAS.to_vec(),
        }
    }
}

impl GlcmSettings {
    pub fn offsets(&self) -> Result<Vec<GlcmOffset>> {
        if self.deltas.is_empty() {
            return Err(Error::invalid("at least one GLCM distance is required"));
        }
        GlcmOffset::grid(&self.deltas)
    }

    fn validate(&self) -> Result<Vec<GlcmOffset>> {
        let offsets = self.offsets()?;
        if self.patch_side < 2 {
            return Err(Error::invalid(format!(
                "patch side must be >= 2, got {}",
                self.patch_side
            )));
        }
        if let Some(o) = offsets.iter().find(|o| o.delta >= self.patch_side) {
            return Err(Error::invalid(format!(
                "offset distance {} must be smaller than patch side {}",
                o.delta, self.patch_side
            )));
        }
        Ok(offsets)
    }
}

/// Mean over the given offsets of the normalized GLCM entropy of one patch.
pub fn patch_entropy(patch: &GrayPatch, offsets: &[GlcmOffset]) -> Result<f64> {
    if offsets.is_empty() {
        return Err(Error::invalid("at least one GLCM offset is required"));
    }
    let mut sum = 0.0;
    for &o in offsets {
        sum += glcm_entropy(&glcm(patch, o)?)?;
    }
    Ok(sum / offsets.len() as f64)
}

/// GLCM texture score of an 8-bit gray image: the image is quantized to
/// `settings.gray_levels`, tiled into non-overlapping patches, and the
/// per-patch mean entropy over all offsets is averaged over patches.
///
/// Patches are processed in parallel on the current rayon pool; the
/// reduction order is fixed, so the result does not depend on the number of
/// threads.
pub fn glcm_score(img: &GrayImage, settings: &GlcmSettings) -> Result<f64> {
    Ok(glcm_score_detailed(img, settings)?.score)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlcmScore {
    pub score: f64,
    pub patch_count: usize,
}

pub fn glcm_score_detailed(img: &GrayImage, settings: &GlcmSettings) -> Result<GlcmScore> {
    let offsets = settings.validate()?;
    let quantized = pixel::quantize(img, settings.gray_levels)?;
    let side = settings.patch_side;
    let levels = settings.gray_levels;
    let (cols, rows) = pixel::patch_grid(img.width(), img.height(), side);
    let patch_count = cols * rows;
    if patch_count == 0 {
        return Err(Error::invalid(format!(
            "a {}x{} image holds no {side}x{side} patch",
            img.width(),
            img.height()
        )));
    }

    let table = XLogX::new(2 * side * side);
    let per_patch: Vec<f64> = (0..patch_count)
        .into_par_iter()
        .map_init(
            || vec![0u32; levels * levels],
            |counts, idx| {
                let tile = pixel::extract_tile(&quantized, (idx % cols) * side, (idx / cols) * side, side);
                let mut sum = 0.0;
                for &o in &offsets {
                    counts.fill(0);
                    let total = accumulate(&tile, side, levels, o, counts);
                    sum += normalized_entropy(counts, total, levels, &table);
                }
                sum / offsets.len() as f64
            },
        )
        .collect();

    let score = pairwise_sum(&per_patch, |v| v) / patch_count as f64;
    Ok(GlcmScore { score, patch_count })
}
