//! Baseline sequential JPEG encoder and the compression-ratio metric.
//!
//! The encoder uses integer color conversion, an integer DCT and the
//! standard Annex K Huffman tables, so for a given image and settings the
//! output bytes are the same on every platform.

mod dct;
mod entropy;
mod tables;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pixel::RgbImage;

use entropy::{BitWriter, HuffmanTable};
use tables::*;

pub const DEFAULT_QUALITY: u8 = 95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Subsampling {
    #[default]
    #[serde(rename = "4:4:4")]
    S444,
    #[serde(rename = "4:2:0")]
    S420,
}

impl fmt::Display for Subsampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subsampling::S444 => "4:4:4",
            Subsampling::S420 => "4:2:0",
        })
    }
}

impl std::str::FromStr for Subsampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "4:4:4" | "444" => Ok(Subsampling::S444),
            "4:2:0" | "420" => Ok(Subsampling::S420),
            other => Err(Error::invalid(format!(
                "unknown chroma subsampling {other:?}, expected 4:4:4 or 4:2:0"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JpegSettings {
    pub quality: u8,
    pub subsampling: Subsampling,
}

impl Default for JpegSettings {
    fn default() -> Self {
        Self {
            quality: DEFAULT_QUALITY,
            subsampling: Subsampling::S444,
        }
    }
}

impl JpegSettings {
    pub fn with_quality(quality: u8) -> Self {
        Self {
            quality,
            ..Self::default()
        }
    }
}

/// Luma and chroma quantizer steps in natural (row-major) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantTables {
    pub luma: [u16; 64],
    pub chroma: [u16; 64],
}

/// IJG-style quality scaling of the Annex K base tables.
pub fn scale_quant_tables(quality: u8) -> Result<QuantTables> {
    if !(1..=100).contains(&quality) {
        return Err(Error::invalid(format!(
            "JPEG quality must be in [1, 100], got {quality}"
        )));
    }
    let q = u32::from(quality);
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let apply = |base: &[u16; 64]| {
        let mut out = [0u16; 64];
        for (o, &b) in out.iter_mut().zip(base) {
            *o = ((u32::from(b) * scale + 50) / 100).clamp(1, 255) as u16;
        }
        out
    };
    Ok(QuantTables {
        luma: apply(&BASE_LUMA_QUANT),
        chroma: apply(&BASE_CHROMA_QUANT),
    })
}

/// One full-resolution component plane padded to whole MCUs.
struct Plane {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Plane {
    fn block(&self, bx: usize, by: usize) -> [i32; 64] {
        let mut out = [0i32; 64];
        for y in 0..8 {
            let row = (by * 8 + y) * self.width + bx * 8;
            for x in 0..8 {
                out[y * 8 + x] = i32::from(self.data[row + x]) - 128;
            }
        }
        out
    }

    fn downsample_2x2(&self) -> Plane {
        let (w, h) = (self.width / 2, self.height / 2);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let i = 2 * y * self.width + 2 * x;
                let sum = u32::from(self.data[i])
                    + u32::from(self.data[i + 1])
                    + u32::from(self.data[i + self.width])
                    + u32::from(self.data[i + self.width + 1]);
                data.push(((sum + 2) >> 2) as u8);
            }
        }
        Plane {
            width: w,
            height: h,
            data,
        }
    }
}

/// BT.601 full-range RGB to YCbCr in 16.16 fixed point, planes padded to
/// `pw x ph` by edge replication.
fn ycbcr_planes(img: &RgbImage, pw: usize, ph: usize) -> [Plane; 3] {
    const ONE_HALF: i32 = 1 << 15;
    const CBCR_OFFSET: i32 = 128 << 16;
    let mut planes = [(); 3].map(|_| Vec::with_capacity(pw * ph));
    for y in 0..ph {
        let sy = y.min(img.height() - 1);
        for x in 0..pw {
            let sx = x.min(img.width() - 1);
            let [r, g, b] = img.pixel(sx, sy).map(i32::from);
            let luma = (19595 * r + 38470 * g + 7471 * b + ONE_HALF) >> 16;
            let cb = (-11059 * r - 21709 * g + 32768 * b + CBCR_OFFSET + ONE_HALF - 1) >> 16;
            let cr = (32768 * r - 27439 * g - 5329 * b + CBCR_OFFSET + ONE_HALF - 1) >> 16;
            planes[0].push(luma.clamp(0, 255) as u8);
            planes[1].push(cb.clamp(0, 255) as u8);
            planes[2].push(cr.clamp(0, 255) as u8);
        }
    }
    planes.map(|data| Plane {
        width: pw,
        height: ph,
        data,
    })
}

fn write_marker_segment(out: &mut Vec<u8>, marker: u8, payload: &[u8]) {
    out.extend_from_slice(&[0xFF, marker]);
    out.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(payload);
}

fn write_headers(out: &mut Vec<u8>, img: &RgbImage, tables: &QuantTables, subsampling: Subsampling) {
    out.extend_from_slice(&[0xFF, 0xD8]);
    // JFIF 1.01, no units, 1:1 density, no thumbnail.
    write_marker_segment(out, 0xE0, b"JFIF\0\x01\x01\x00\x00\x01\x00\x01\x00\x00");

    let mut dqt = Vec::with_capacity(130);
    for (id, table) in [(0u8, &tables.luma), (1u8, &tables.chroma)] {
        dqt.push(id);
        dqt.extend(ZIGZAG.iter().map(|&k| table[k] as u8));
    }
    write_marker_segment(out, 0xDB, &dqt);

    let luma_sampling = match subsampling {
        Subsampling::S444 => 0x11,
        Subsampling::S420 => 0x22,
    };
    let mut sof = vec![8];
    sof.extend_from_slice(&(img.height() as u16).to_be_bytes());
    sof.extend_from_slice(&(img.width() as u16).to_be_bytes());
    sof.extend_from_slice(&[3, 1, luma_sampling, 0, 2, 0x11, 1, 3, 0x11, 1]);
    write_marker_segment(out, 0xC0, &sof);

    let mut dht = Vec::new();
    for (class_id, bits, values) in [
        (0x00u8, &LUMA_DC_BITS, &LUMA_DC_VALUES[..]),
        (0x10, &LUMA_AC_BITS, &LUMA_AC_VALUES[..]),
        (0x01, &CHROMA_DC_BITS, &CHROMA_DC_VALUES[..]),
        (0x11, &CHROMA_AC_BITS, &CHROMA_AC_VALUES[..]),
    ] {
        dht.push(class_id);
        dht.extend_from_slice(bits);
        dht.extend_from_slice(values);
    }
    write_marker_segment(out, 0xC4, &dht);

    write_marker_segment(out, 0xDA, &[3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0]);
}

fn quantized_zigzag(block: &[i32; 64], table: &[u16; 64]) -> [i32; 64] {
    let coefs = dct::forward(block);
    let mut zz = [0i32; 64];
    for (k, &natural) in ZIGZAG.iter().enumerate() {
        zz[k] = dct::quantize(coefs[natural], table[natural]);
    }
    zz
}

/// Encodes `img` as a baseline JFIF stream.
///
/// Fails only for images wider or taller than 65535 pixels, which the
/// frame header cannot represent.
pub fn encode(img: &RgbImage, settings: &JpegSettings) -> Result<Vec<u8>> {
    if img.width() > usize::from(u16::MAX) || img.height() > usize::from(u16::MAX) {
        return Err(Error::invalid(format!(
            "{}x{} exceeds the 65535-pixel JPEG frame limit",
            img.width(),
            img.height()
        )));
    }
    let tables = scale_quant_tables(settings.quality)?;
    let mcu = match settings.subsampling {
        Subsampling::S444 => 8,
        Subsampling::S420 => 16,
    };
    let mcus_x = img.width().div_ceil(mcu);
    let mcus_y = img.height().div_ceil(mcu);
    let [y_plane, cb_full, cr_full] = ycbcr_planes(img, mcus_x * mcu, mcus_y * mcu);
    let (cb, cr) = match settings.subsampling {
        Subsampling::S444 => (cb_full, cr_full),
        Subsampling::S420 => (cb_full.downsample_2x2(), cr_full.downsample_2x2()),
    };

    let luma_dc = HuffmanTable::new(&LUMA_DC_BITS, &LUMA_DC_VALUES);
    let luma_ac = HuffmanTable::new(&LUMA_AC_BITS, &LUMA_AC_VALUES);
    let chroma_dc = HuffmanTable::new(&CHROMA_DC_BITS, &CHROMA_DC_VALUES);
    let chroma_ac = HuffmanTable::new(&CHROMA_AC_BITS, &CHROMA_AC_VALUES);

    let mut out = Vec::with_capacity(1024 + img.width() * img.height() / 2);
    write_headers(&mut out, img, &tables, settings.subsampling);

    let luma_blocks = mcu / 8;
    let mut w = BitWriter::new(&mut out);
    let mut pred = [0i32; 3];
    for my in 0..mcus_y {
        for mx in 0..mcus_x {
            for by in 0..luma_blocks {
                for bx in 0..luma_blocks {
                    let block = y_plane.block(mx * luma_blocks + bx, my * luma_blocks + by);
                    let zz = quantized_zigzag(&block, &tables.luma);
                    pred[0] = entropy::encode_block(&mut w, &zz, pred[0], &luma_dc, &luma_ac);
                }
            }
            for (c, plane) in [(1, &cb), (2, &cr)] {
                let zz = quantized_zigzag(&plane.block(mx, my), &tables.chroma);
                pred[c] = entropy::encode_block(&mut w, &zz, pred[c], &chroma_dc, &chroma_ac);
            }
        }
    }
    w.flush();
    out.extend_from_slice(&[0xFF, 0xD9]);
    Ok(out)
}

/// Raw in-memory size of an 8-bit RGB bitmap: `3 * width * height` bytes.
pub fn raw_size(img: &RgbImage) -> usize {
    img.width() * img.height() * 3
}

/// Raw bitmap size divided by the encoded JPEG size. Lower values mean more
/// incompressible fine detail.
pub fn compression_ratio(img: &RgbImage, settings: &JpegSettings) -> Result<f64> {
    let encoded = encode(img, settings)?;
    Ok(raw_size(img) as f64 / encoded.len() as f64)
}
