use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A 4×4 binary image stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryImage([u8; 16]);

impl BinaryImage {
    pub const SIDE: usize = 4;

    /// Builds an image from 16 row-major pixels, each 0 or 1.
    pub fn new(pixels: [u8; 16]) -> Result<Self> {
        if let Some(p) = pixels.iter().find(|&&p| p > 1) {
            return Err(Error::Data(format!("pixel value {p} is not binary")));
        }
        Ok(Self(pixels))
    }

    pub fn from_slice(pixels: &[u8]) -> Result<Self> {
        let arr: [u8; 16] = pixels
            .try_into()
            .map_err(|_| Error::Data(format!("expected 16 pixels, got {}", pixels.len())))?;
        Self::new(arr)
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut pixels = [0u8; 16];
        for (i, p) in pixels.iter_mut().enumerate() {
            *p = u8::from(f(i / 4, i % 4));
        }
        Self(pixels)
    }

    /// Bit `i` of `bits` (LSB first) becomes pixel `i` in row-major order.
    pub fn from_bits(bits: u16) -> Self {
        Self::from_fn(|r, c| bits >> (r * 4 + c) & 1 == 1)
    }

    pub fn to_bits(&self) -> u16 {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &p)| acc | (u16::from(p) << i))
    }

    pub fn zeros() -> Self {
        Self([0; 16])
    }

    pub fn ones() -> Self {
        Self([1; 16])
    }

    pub fn pixels(&self) -> &[u8; 16] {
        &self.0
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.0[row * 4 + col]
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&p| p == 1).count()
    }

    /// The image with one pixel inverted.
    pub fn flipped(&self, index: usize) -> Self {
        let mut pixels = self.0;
        pixels[index] ^= 1;
        Self(pixels)
    }

    /// 90° clockwise rotation: `out(r, c) = in(3 - c, r)`.
    pub fn rotate90(&self) -> Self {
        Self::from_fn(|r, c| self.get(3 - c, r) == 1)
    }

    pub fn rotations(&self) -> [BinaryImage; 4] {
        let r1 = self.rotate90();
        let r2 = r1.rotate90();
        [*self, r1, r2, r2.rotate90()]
    }

    /// Quadrant-major view used by the circuit encoder: quadrants in order
    /// top-left, top-right, bottom-left, bottom-right, each flattened
    /// row-major so bit `k` of a quadrant drives qubit `k`.
    pub fn quadrants(&self) -> [[u8; 4]; 4] {
        let mut out = [[0u8; 4]; 4];
        for (q, quad) in out.iter_mut().enumerate() {
            let (r0, c0) = (2 * (q / 2), 2 * (q % 2));
            for (k, bit) in quad.iter_mut().enumerate() {
                *bit = self.get(r0 + k / 2, c0 + k % 2);
            }
        }
        out
    }

    /// Four text rows of `0`/`1`, newline terminated.
    pub fn to_grid(&self) -> String {
        let mut s = String::with_capacity(20);
        for row in self.0.chunks(4) {
            for &p in row {
                s.push(if p == 1 { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn from_grid(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
            return Err(Error::Data(format!("expected a 4x4 grid, got {text:?}")));
        }
        let mut pixels = [0u8; 16];
        for (i, ch) in rows.concat().chars().enumerate() {
            pixels[i] = match ch {
                '0' | '.' => 0,
                '1' | '#' => 1,
                other => return Err(Error::Data(format!("pixel `{other}` is not binary"))),
            };
        }
        Ok(Self(pixels))
    }
}

impl fmt::Display for BinaryImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_grid())
    }
}

impl Serialize for BinaryImage {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BinaryImage {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pixels = Vec::<u8>::deserialize(deserializer)?;
        BinaryImage::from_slice(&pixels).map_err(serde::de::Error::custom)
    }
}
