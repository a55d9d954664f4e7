//! Separable 8x8 forward DCT in integer arithmetic.

/// `BASIS[u][x] = round(2^15 * c(u)/2 * cos((2x+1)u*pi/16))`, with
/// `c(0) = 1/sqrt(2)` and `c(u) = 1` otherwise.
const BASIS: [[i64; 8]; 8] = [
    [11585, 11585, 11585, 11585, 11585, 11585, 11585, 11585],
    [16069, 13623, 9102, 3196, -3196, -9102, -13623, -16069],
    [15137, 6270, -6270, -15137, -15137, -6270, 6270, 15137],
    [13623, -3196, -16069, -9102, 9102, 16069, 3196, -13623],
    [11585, -11585, -11585, 11585, 11585, -11585, -11585, 11585],
    [9102, -16069, 3196, 13623, -13623, -3196, 16069, -9102],
    [6270, -15137, 15137, -6270, -6270, 15137, -15137, 6270],
    [3196, -9102, 13623, -16069, 16069, -13623, 9102, -3196],
];

pub(crate) const DCT_SCALE_BITS: u32 = 30;

/// Forward DCT of a level-shifted 8x8 block in natural order. Output
/// coefficients are scaled by `2^DCT_SCALE_BITS`.
pub(crate) fn forward(block: &[i32; 64]) -> [i64; 64] {
    let mut rows = [0i64; 64];
    for y in 0..8 {
        for (u, basis) in BASIS.iter().enumerate() {
            let mut acc = 0i64;
            for x in 0..8 {
                acc += basis[x] * i64::from(block[y * 8 + x]);
            }
            rows[y * 8 + u] = acc;
        }
    }
    let mut out = [0i64; 64];
    for u in 0..8 {
        for (v, basis) in BASIS.iter().enumerate() {
            let mut acc = 0i64;
            for y in 0..8 {
                acc += basis[y] * rows[y * 8 + u];
            }
            out[v * 8 + u] = acc;
        }
    }
    out
}

/// Divides a scaled coefficient by a quantizer step, rounding half away
/// from zero.
#[inline]
pub(crate) fn quantize(coef: i64, step: u16) -> i32 {
    let div = i64::from(step) << DCT_SCALE_BITS;
    let q = (coef.abs() + div / 2) / div;
    (if coef < 0 { -q } else { q }) as i32
}
