//! Poly1305 one-time authenticator, 26-bit limb arithmetic.

use zeroize::Zeroize;

pub const KEY_LEN: usize = 32;
pub const TAG_LEN: usize = 16;

const MASK26: u64 = 0x3ff_ffff;

#[inline(always)]
fn le32(b: &[u8]) -> u64 {
    u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as u64
}

/// Incremental Poly1305 state. Partial input is buffered until a full
/// 16-byte block is available.
pub(crate) struct Poly1305 {
    r: [u64; 5],
    s: [u64; 4],
    h: [u64; 5],
    pad: [u64; 4],
    buf: [u8; 16],
    buf_len: usize,
}

impl Poly1305 {
    pub(crate) fn new(key: &[u8; KEY_LEN]) -> Self {
        // clamp r
        let r = [
            le32(&key[0..]) & 0x3ff_ffff,
            (le32(&key[3..]) >> 2) & 0x3ff_ff03,
            (le32(&key[6..]) >> 4) & 0x3ff_c0ff,
            (le32(&key[9..]) >> 6) & 0x3f0_3fff,
            (le32(&key[12..]) >> 8) & 0x00f_ffff,
        ];
        Poly1305 {
            s: [r[1] * 5, r[2] * 5, r[3] * 5, r[4] * 5],
            r,
            h: [0; 5],
            pad: [
                le32(&key[16..]),
                le32(&key[20..]),
                le32(&key[24..]),
                le32(&key[28..]),
            ],
            buf: [0; 16],
            buf_len: 0,
        }
    }

    fn block(&mut self, m: &[u8; 16], hibit: u64) {
        let [r0, r1, r2, r3, r4] = self.r;
        let [s1, s2, s3, s4] = self.s;
        let mut h = self.h;

        h[0] += le32(&m[0..]) & MASK26;
        h[1] += (le32(&m[3..]) >> 2) & MASK26;
        h[2] += (le32(&m[6..]) >> 4) & MASK26;
        h[3] += (le32(&m[9..]) >> 6) & MASK26;
        h[4] += (le32(&m[12..]) >> 8) | hibit;

        let d0 = h[0] * r0 + h[1] * s4 + h[2] * s3 + h[3] * s2 + h[4] * s1;
        let mut d1 = h[0] * r1 + h[1] * r0 + h[2] * s4 + h[3] * s3 + h[4] * s2;
        let mut d2 = h[0] * r2 + h[1] * r1 + h[2] * r0 + h[3] * s4 + h[4] * s3;
        let mut d3 = h[0] * r3 + h[1] * r2 + h[2] * r1 + h[3] * r0 + h[4] * s4;
        let mut d4 = h[0] * r4 + h[1] * r3 + h[2] * r2 + h[3] * r1 + h[4] * r0;

        let mut c = d0 >> 26;
        h[0] = d0 & MASK26;
        d1 += c;
        c = d1 >> 26;
        h[1] = d1 & MASK26;
        d2 += c;
        c = d2 >> 26;
        h[2] = d2 & MASK26;
        d3 += c;
        c = d3 >> 26;
        h[3] = d3 & MASK26;
        d4 += c;
        c = d4 >> 26;
        h[4] = d4 & MASK26;
        h[0] += c * 5;
        c = h[0] >> 26;
        h[0] &= MASK26;
        h[1] += c;

        self.h = h;
    }

    pub(crate) fn update(&mut self, mut data: &[u8]) {
        if self.buf_len > 0 {
            let take = (16 - self.buf_len).min(data.len());
            self.buf[self.buf_len..self.buf_len + take].copy_from_slice(&data[..take]);
            self.buf_len += take;
            data = &data[take..];
            if self.buf_len < 16 {
                return;
            }
            let b = self.buf;
            self.block(&b, 1 << 24);
            self.buf_len = 0;
        }
        let mut chunks = data.chunks_exact(16);
        for chunk in &mut chunks {
            self.block(chunk.try_into().expect("16-byte chunk"), 1 << 24);
        }
        let rem = chunks.remainder();
        self.buf[..rem.len()].copy_from_slice(rem);
        self.buf_len = rem.len();
    }

    /// Zero-pads buffered input to a block boundary (the AEAD's pad16).
    pub(crate) fn pad_to_block(&mut self) {
        if self.buf_len > 0 {
            self.update(&[0u8; 16][..16 - self.buf_len]);
        }
    }

    pub(crate) fn finalize(mut self) -> [u8; TAG_LEN] {
        if self.buf_len > 0 {
            let mut last = [0u8; 16];
            last[..self.buf_len].copy_from_slice(&self.buf[..self.buf_len]);
            last[self.buf_len] = 1;
            self.block(&last, 0);
        }

        let mut h = self.h;
        let mut c = h[1] >> 26;
        h[1] &= MASK26;
        h[2] += c;
        c = h[2] >> 26;
        h[2] &= MASK26;
        h[3] += c;
        c = h[3] >> 26;
        h[3] &= MASK26;
        h[4] += c;
        c = h[4] >> 26;
        h[4] &= MASK26;
        h[0] += c * 5;
        c = h[0] >> 26;
        h[0] &= MASK26;
        h[1] += c;

        // g = h + 5 - 2^130; keep g when it did not underflow
        let mut g = [0u64; 5];
        g[0] = h[0] + 5;
        c = g[0] >> 26;
        g[0] &= MASK26;
        g[1] = h[1] + c;
        c = g[1] >> 26;
        g[1] &= MASK26;
        g[2] = h[2] + c;
        c = g[2] >> 26;
        g[2] &= MASK26;
        g[3] = h[3] + c;
        c = g[3] >> 26;
        g[3] &= MASK26;
        g[4] = (h[4] + c).wrapping_sub(1 << 26);

        let select = (g[4] >> 63).wrapping_sub(1);
        for i in 0..5 {
            h[i] = (h[i] & !select) | (g[i] & select);
        }
        h[4] &= MASK26;

        let words = [
            (h[0] | (h[1] << 26)) & 0xffff_ffff,
            ((h[1] >> 6) | (h[2] << 20)) & 0xffff_ffff,
            ((h[2] >> 12) | (h[3] << 14)) & 0xffff_ffff,
            ((h[3] >> 18) | (h[4] << 8)) & 0xffff_ffff,
        ];

        let mut tag = [0u8; TAG_LEN];
        let mut carry = 0u64;
        for i in 0..4 {
            let f = words[i] + self.pad[i] + carry;
            tag[4 * i..4 * i + 4].copy_from_slice(&(f as u32).to_le_bytes());
            carry = f >> 32;
        }
        tag
    }
}

impl Drop for Poly1305 {
    fn drop(&mut self) {
        self.r.zeroize();
        self.s.zeroize();
        self.h.zeroize();
        self.pad.zeroize();
        self.buf.zeroize();
    }
}

pub(crate) fn tag(key: &[u8; KEY_LEN], message: &[u8]) -> [u8; TAG_LEN] {
    let mut mac = Poly1305::new(key);
    mac.update(message);
    mac.finalize()
}
