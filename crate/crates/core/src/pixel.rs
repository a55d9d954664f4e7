//! 8-bit image containers, luma conversion, gray-level quantization and
//! patch tiling.

use crate::error::{Error, Result};

/// Interleaved 8-bit RGB image, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for RgbImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RgbImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::invalid(format!(
                "RGB buffer has {} bytes, expected {}",
                data.len(),
                width * height * 3
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::from_fn(width, height, |_, _| rgb)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// Single-channel 8-bit image, row-major. Also used to hold quantized
/// gray levels after [`quantize`].
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "gray buffer has {} bytes, expected {}",
                data.len(),
                width * height
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

/// A square tile of quantized gray levels, the unit of co-occurrence
/// analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayPatch {
    side: usize,
    levels: usize,
    data: Vec<u8>,
}

impl GrayPatch {
    pub fn new(side: usize, levels: usize, data: Vec<u8>) -> Result<Self> {
        if side < 2 {
            return Err(Error::invalid(format!("patch side must be >= 2, got {side}")));
        }
        validate_levels(levels)?;
        if data.len() != side * side {
            return Err(Error::invalid(format!(
                "patch buffer has {} values, expected {}",
                data.len(),
                side * side
            )));
        }
        if let Some(&v) = data.iter().find(|&&v| usize::from(v) >= levels) {
            return Err(Error::invalid(format!("patch value {v} outside [0, {}]", levels - 1)));
        }
        Ok(Self { side, levels, data })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.side + col]
    }
}

/// BT.601 luma with round-half-up, in 16.16 fixed point so the result does
/// not depend on float rounding.
#[inline]
pub fn luma(rgb: [u8; 3]) -> u8 {
    // 0.299, 0.587, 0.114 scaled by 2^16; the weights sum to exactly 65536.
    const WR: u32 = 19595;
    const WG: u32 = 38470;
    const WB: u32 = 7471;
    let acc = WR * u32::from(rgb[0]) + WG * u32::from(rgb[1]) + WB * u32::from(rgb[2]);
    ((acc + 32768) >> 16).min(255) as u8
}

pub fn to_gray(img: &RgbImage) -> GrayImage {
    let data = img.data.chunks_exact(3).map(|px| luma([px[0], px[1], px[2]])).collect();
    GrayImage {
        width: img.width,
        height: img.height,
        data,
    }
}

fn validate_levels(levels: usize) -> Result<()> {
    if !(2..=256).contains(&levels) || !levels.is_power_of_two() {
        return Err(Error::invalid(format!(
            "gray levels must be a power of two in [2, 256], got {levels}"
        )));
    }
    Ok(())
}

/// Uniform binning of 8-bit values into `levels` bins: `v -> v / (256 / levels)`.
pub fn quantize(img: &GrayImage, levels: usize) -> Result<GrayImage> {
    validate_levels(levels)?;
    let shift = (256 / levels).trailing_zeros();
    Ok(GrayImage {
        width: img.width,
        height: img.height,
        data: img.data.iter().map(|&v| v >> shift).collect(),
    })
}

/// Number of full `side x side` tiles that fit in a `width x height` image.
pub fn patch_grid(width: usize, height: usize, side: usize) -> (usize, usize) {
    if side == 0 {
        return (0, 0);
    }
    (width / side, height / side)
}

/// Cuts `img` into non-overlapping tiles in row-major order. Partial tiles at
/// the right and bottom borders are dropped. `levels` is the number of gray
/// levels `img` was quantized to.
pub fn partition(img: &GrayImage, side: usize, levels: usize) -> Result<Vec<GrayPatch>> {
    if side < 2 {
        return Err(Error::invalid(format!("patch side must be >= 2, got {side}")));
    }
    validate_levels(levels)?;
    let (cols, rows) = patch_grid(img.width, img.height, side);
    let mut patches = Vec::with_capacity(cols * rows);
    for pr in 0..rows {
        for pc in 0..cols {
            let data = extract_tile(img, pc * side, pr * side, side);
            patches.push(GrayPatch::new(side, levels, data)?);
        }
    }
    Ok(patches)
}

pub(crate) fn extract_tile(img: &GrayImage, x0: usize, y0: usize, side: usize) -> Vec<u8> {
    let mut data = Vec::with_capacity(side * side);
    for y in y0..y0 + side {
        let start = y * img.width + x0;
        data.extend_from_slice(&img.data[start..start + side]);
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn luma_reference_values() {
        assert_eq!(luma([255, 255, 255]), 255);
        assert_eq!(luma([0, 0, 0]), 0);
        // 0.299 * 255 = 76.245
        assert_eq!(luma([255, 0, 0]), 76);
        // 0.587 * 255 = 149.685
        assert_eq!(luma([0, 255, 0]), 150);
        // 0.114 * 255 = 29.07
        assert_eq!(luma([0, 0, 255]), 29);
    }

    #[test]
    fn luma_matches_float_formula() {
        for r in (0..=255u8).step_by(5) {
            for g in (0..=255u8).step_by(7) {
                for b in (0..=255u8).step_by(11) {
                    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
                    let got = f64::from(luma([r, g, b]));
                    if (y.fract() - 0.5).abs() < 1e-2 {
                        assert!((got - y).abs() <= 0.51, "rgb=({r},{g},{b})");
                    } else {
                        assert_eq!(got, y.round(), "rgb=({r},{g},{b})");
                    }
                }
            }
        }
    }

    #[test]
    fn gray_triples_are_preserved() {
        for v in 0..=255u8 {
            assert_eq!(luma([v, v, v]), v);
        }
    }

    #[test]
    fn quantize_bins() {
        let img = GrayImage::new(3, 1, vec![255, 0, 128]).unwrap();
        let q = quantize(&img, 64).unwrap();
        assert_eq!(q.data(), &[63, 0, 32]);
    }

    #[test]
    fn quantize_rejects_bad_levels() {
        let img = GrayImage::new(1, 1, vec![7]).unwrap();
        for levels in [0, 1, 3, 48, 100, 512] {
            assert!(matches!(quantize(&img, levels), Err(Error::InvalidArgument(_))));
        }
        assert_eq!(quantize(&img, 256).unwrap().data(), &[7]);
        assert_eq!(quantize(&img, 2).unwrap().data(), &[0]);
    }

    #[test]
    fn partition_counts() {
        let cases = [
            ((4096, 4096), 4096),
            ((100, 100), 1),
            ((63, 200), 0),
            ((200, 63), 0),
            ((130, 64), 2),
        ];
        for ((w, h), expected) in cases {
            let img = GrayImage::new(w, h, vec![0; w * h]).unwrap();
            assert_eq!(partition(&img, 64, 64).unwrap().len(), expected, "{w}x{h}");
        }
    }

    #[test]
    fn partition_is_row_major() {
        let img = GrayImage::from_fn(4, 4, |x, y| (y * 4 + x) as u8).unwrap();
        let patches = partition(&img, 2, 16).unwrap();
        let firsts: Vec<u8> = patches.iter().map(|p| p.get(0, 0)).collect();
        assert_eq!(firsts, vec![0, 2, 8, 10]);
        assert_eq!(patches[3].data(), &[10, 11, 14, 15]);
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(RgbImage::new(0, 4, vec![]).is_err());
        assert!(RgbImage::new(2, 2, vec![0; 11]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayPatch::new(2, 4, vec![0, 1, 2, 4]).is_err());
        assert!(GrayPatch::new(1, 4, vec![0]).is_err());
    }

    proptest! {
        #[test]
        fn quantize_is_monotone(a in 0u8..=255, b in 0u8..=255, shift in 0u32..8) {
            let levels = 256usize >> shift;
            prop_assume!(levels >= 2);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let img = GrayImage::new(2, 1, vec![lo, hi]).unwrap();
            let q = quantize(&img, levels).unwrap();
            prop_assert!(q.data()[0] <= q.data()[1]);
            prop_assert!(usize::from(q.data()[1]) < levels);
        }

        #[test]
        fn tiles_are_disjoint_and_cover_grid(w in 1usize..90, h in 1usize..90, side in 2usize..20) {
            // Encode each pixel's coordinates so tile contents identify their source.
            let img = GrayImage::from_fn(w, h, |x, y| ((x * 7 + y * 13) % 256) as u8).unwrap();
            let patches = partition(&img, side, 256).unwrap();
            let (cols, rows) = patch_grid(w, h, side);
            prop_assert_eq!(patches.len(), cols * rows);
            for (i, p) in patches.iter().enumerate() {
                let (x0, y0) = ((i % cols) * side, (i / cols) * side);
                prop_assert!(x0 + side <= w && y0 + side <= h);
                for r in 0..side {
                    for c in 0..side {
                        prop_assert_eq!(p.get(r, c), img.get(x0 + c, y0 + r));
                    }
                }
            }
        }
    }
}
