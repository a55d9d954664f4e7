//! Deterministic synthetic images for tests, benchmarks and fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pixel::{GrayImage, RgbImage};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smoothly interpolated lattice noise in `[0, 1]`.
struct ValueNoise {
    cell: usize,
    cols: usize,
    lattice: Vec<f64>,
}

impl ValueNoise {
    fn new(width: usize, height: usize, cell: usize, rng: &mut ChaCha8Rng) -> Self {
        let cols = width / cell + 2;
        let rows = height / cell + 2;
        let lattice = (0..cols * rows).map(|_| rng.random::<f64>()).collect();
        Self { cell, cols, lattice }
    }

    fn at(&self, x: usize, y: usize) -> f64 {
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let (cx, cy) = (x / self.cell, y / self.cell);
        let tx = smooth((x % self.cell) as f64 / self.cell as f64);
        let ty = smooth((y % self.cell) as f64 / self.cell as f64);
        let v = |i: usize, j: usize| self.lattice[j * self.cols + i];
        let top = v(cx, cy) * (1.0 - tx) + v(cx + 1, cy) * tx;
        let bottom = v(cx, cy + 1) * (1.0 - tx) + v(cx + 1, cy + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

/// Sum of value-noise octaves from `coarse` cells down to 2-pixel cells,
/// normalized to `[0, 1]`.
struct Fractal {
    octaves: Vec<(ValueNoise, f64)>,
    norm: f64,
}

impl Fractal {
    fn new(width: usize, height: usize, coarse: usize, persistence: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut octaves = Vec::new();
        let (mut cell, mut amp) = (coarse.max(2), 1.0);
        while cell >= 2 {
            octaves.push((ValueNoise::new(width, height, cell, rng), amp));
            cell /= 2;
            amp *= persistence;
        }
        let norm = octaves.iter().map(|(_, a)| a).sum();
        Self { octaves, norm }
    }

    fn at(&self, x: usize, y: usize) -> f64 {
        self.octaves.iter().map(|(n, a)| a * n.at(x, y)).sum::<f64>() / self.norm
    }
}

enum Shape {
    Disk { cx: f64, cy: f64, r: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Disk { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
        }
    }
}

/// Photo-like RGB image: a fractal-textured colour field with a handful of
/// flat-edged objects and mild sensor grain. The same seed always yields
/// the same pixels.
pub fn photo(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut r = rng(seed);
    let coarse = (width.min(height) / 4).clamp(4, 128).next_power_of_two();
    let fields: Vec<Fractal> = (0..3)
        .map(|_| Fractal::new(width, height, coarse, 0.6, &mut r))
        .collect();
    let base: [f64; 3] = [
        r.random_range(40.0..120.0),
        r.random_range(40.0..120.0),
        r.random_range(40.0..120.0),
    ];
    let (wf, hf) = (width as f64, height as f64);
    let shapes: Vec<(Shape, [f64; 3])> = (0..r.random_range(3..7))
        .map(|_| {
            let shape = if r.random_bool(0.5) {
                Shape::Disk {
                    cx: r.random_range(0.0..wf),
                    cy: r.random_range(0.0..hf),
                    r: r.random_range(0.05..0.25) * wf.min(hf),
                }
            } else {
                let (x0, y0) = (r.random_range(0.0..wf), r.random_range(0.0..hf));
                Shape::Rect {
                    x0,
                    y0,
                    x1: x0 + r.random_range(0.1..0.4) * wf,
                    y1: y0 + r.random_range(0.1..0.4) * hf,
                }
            };
            let tint = [
                r.random_range(-60.0..60.0),
                r.random_range(-60.0..60.0),
                r.random_range(-60.0..60.0),
            ];
            (shape, tint)
        })
        .collect();
    let mut grain = rng(seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut data = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut offset = [0.0; 3];
            for (shape, tint) in &shapes {
                if shape.contains(px, py) {
                    offset.iter_mut().zip(tint).for_each(|(o, t)| *o += t);
                }
            }
            let luminance = fields[0].at(x, y);
            let noise = grain.random_range(-3.0..3.0);
            for c in 0..3 {
                let v = base[c] + 110.0 * luminance + 40.0 * (fields[c].at(x, y) - 0.5) + offset[c] + noise;
                data.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    RgbImage::new(width, height, data).expect("dimensions match buffer")
}

/// Independent uniform RGB noise.
pub fn noise(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut r = rng(seed);
    let data = (0..width * height * 3).map(|_| r.random::<u8>()).collect();
    RgbImage::new(width, height, data).expect("dimensions match buffer")
}

/// Two-tone checkerboard with square cells of `cell` pixels.
pub fn checkerboard(width: usize, height: usize, cell: usize, dark: u8, light: u8) -> GrayImage {
    let cell = cell.max(1);
    GrayImage::from_fn(width, height, |x, y| {
        if (x / cell + y / cell).is_multiple_of(2) {
            dark
        } else {
            light
        }
    })
    .expect("dimensions match buffer")
}

pub fn gray_to_rgb(img: &GrayImage) -> RgbImage {
    RgbImage::from_fn(img.width(), img.height(), |x, y| {
        let v = img.get(x, y);
        [v, v, v]
    })
    .expect("dimensions match buffer")
}

/// Gaussian blur of each channel with standard deviation `sigma`.
pub fn gaussian_blur(img: &RgbImage, sigma: f32) -> RgbImage {
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
        .expect("dimensions match buffer");
    let blurred = image::imageops::blur(&buf, sigma);
    RgbImage::new(img.width(), img.height(), blurred.into_raw()).expect("dimensions match buffer")
}
