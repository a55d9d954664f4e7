//! Huffman code construction and the entropy-coded segment writer.

pub(crate) struct HuffmanTable {
    codes: [u16; 256],
    sizes: [u8; 256],
}

impl HuffmanTable {
    /// Canonical code assignment from the `BITS`/`HUFFVAL` lists.
    pub(crate) fn new(bits: &[u8; 16], values: &[u8]) -> Self {
        let mut codes = [0u16; 256];
        let mut sizes = [0u8; 256];
        let mut code = 0u16;
        let mut k = 0;
        for (len_minus_one, &count) in bits.iter().enumerate() {
            for _ in 0..count {
                let sym = usize::from(values[k]);
                codes[sym] = code;
                sizes[sym] = len_minus_one as u8 + 1;
                code += 1;
                k += 1;
            }
            code <<= 1;
        }
        Self { codes, sizes }
    }

    #[inline]
    fn get(&self, symbol: u8) -> (u16, u8) {
        let s = usize::from(symbol);
        debug_assert!(self.sizes[s] > 0, "symbol {symbol:#x} has no code");
        (self.codes[s], self.sizes[s])
    }
}

pub(crate) struct BitWriter<'a> {
    out: &'a mut Vec<u8>,
    acc: u32,
    nbits: u32,
}

impl<'a> BitWriter<'a> {
    pub(crate) fn new(out: &'a mut Vec<u8>) -> Self {
        Self { out, acc: 0, nbits: 0 }
    }

    #[inline]
    pub(crate) fn put(&mut self, bits: u32, len: u8) {
        if len == 0 {
            return;
        }
        let len = u32::from(len);
        self.acc = (self.acc << len) | (bits & ((1 << len) - 1));
        self.nbits += len;
        while self.nbits >= 8 {
            let byte = (self.acc >> (self.nbits - 8)) as u8;
            self.out.push(byte);
            if byte == 0xFF {
                self.out.push(0x00);
            }
            self.nbits -= 8;
        }
        self.acc &= (1 << self.nbits) - 1;
    }

    /// Pads the final partial byte with 1-bits.
    pub(crate) fn flush(&mut self) {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.put((1 << pad) - 1, pad as u8);
        }
    }
}

/// Magnitude category (bit length of |v|) and the appended bits for a
/// coefficient value.
#[inline]
fn category(v: i32) -> (u8, u32) {
    let mag = v.unsigned_abs();
    let size = (32 - mag.leading_zeros()) as u8;
    let bits = if v < 0 { (v - 1) as u32 } else { v as u32 };
    (size, bits & ((1u32 << size) - 1))
}

/// Encodes one quantized block given in zig-zag order. Returns the DC value
/// to use as the next predictor.
pub(crate) fn encode_block(
    w: &mut BitWriter<'_>,
    zz: &[i32; 64],
    prev_dc: i32,
    dc: &HuffmanTable,
    ac: &HuffmanTable,
) -> i32 {
    let (size, bits) = category(zz[0] - prev_dc);
    let (code, len) = dc.get(size);
    w.put(u32::from(code), len);
    w.put(bits, size);

    let last = zz.iter().rposition(|&c| c != 0).unwrap_or(0);
    let mut run = 0u8;
    for &coef in &zz[1..=last] {
        if coef == 0 {
            run += 1;
            continue;
        }
        while run >= 16 {
            let (code, len) = ac.get(0xF0);
            w.put(u32::from(code), len);
            run -= 16;
        }
        let (size, bits) = category(coef);
        let (code, len) = ac.get((run << 4) | size);
        w.put(u32::from(code), len);
        w.put(bits, size);
        run = 0;
    }
    if last < 63 {
        let (code, len) = ac.get(0x00);
        w.put(u32::from(code), len);
    }
    zz[0]
}
