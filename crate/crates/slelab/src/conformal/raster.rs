//! Boolean domain rasters: `true` marks a free (domain) pixel.

use std::io::{Read, Write};

use super::bvh::closest_on_segment;
use crate::error::{Error, Result};
use crate::C64;

const MAGIC: &[u8; 8] = b"SLELABRB";

/// Pixel `(i, j)` is the square with lower-left corner
/// `origin + pixel * (i + i j)`; `j` grows upward.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub origin: C64,
    pub pixel: f64,
    pub inside: Vec<bool>,
}

impl Raster {
    pub fn from_fn(origin: C64, pixel: f64, width: usize, height: usize, f: impl Fn(C64) -> bool) -> Self {
        let mut inside = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                inside.push(f(origin + C64::new((i as f64 + 0.5) * pixel, (j as f64 + 0.5) * pixel)));
            }
        }
        Raster { width, height, origin, pixel, inside }
    }

    /// Square raster covering `[-half, half]^2`.
    pub fn centered(half: f64, pixel: f64, f: impl Fn(C64) -> bool) -> Self {
        let n = (2.0 * half / pixel).ceil() as usize;
        Self::from_fn(C64::new(-half, -half), pixel, n, n, f)
    }

    pub fn center(&self, i: usize, j: usize) -> C64 {
        self.origin + C64::new((i as f64 + 0.5) * self.pixel, (j as f64 + 0.5) * self.pixel)
    }

    /// Inside test with everything beyond the frame counted as outside.
    pub fn get(&self, i: i64, j: i64) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.width
            && (j as usize) < self.height
            && self.inside[j as usize * self.width + i as usize]
    }

    pub fn pixel_of(&self, z: C64) -> (i64, i64) {
        let w = (z - self.origin) / self.pixel;
        (w.re.floor() as i64, w.im.floor() as i64)
    }

    pub fn contains(&self, z: C64) -> bool {
        let (i, j) = self.pixel_of(z);
        self.get(i, j)
    }

    pub fn count_inside(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// Mark every pixel whose centre is within `thickness` of the polyline
    /// as outside.
    pub fn carve_polyline(&mut self, pts: &[C64], thickness: f64) {
        let segs: Vec<(C64, C64)> = if pts.len() == 1 { vec![(pts[0], pts[0])] } else { pts.windows(2).map(|w| (w[0], w[1])).collect() };
        for (a, b) in segs {
            let lo = C64::new(a.re.min(b.re) - thickness, a.im.min(b.im) - thickness);
            let hi = C64::new(a.re.max(b.re) + thickness, a.im.max(b.im) + thickness);
            let (i0, j0) = self.pixel_of(lo);
            let (i1, j1) = self.pixel_of(hi);
            for j in j0.max(0)..=j1.min(self.height as i64 - 1) {
                for i in i0.max(0)..=i1.min(self.width as i64 - 1) {
                    let c = self.center(i as usize, j as usize);
                    if (closest_on_segment(a, b, c) - c).norm() <= thickness {
                        self.inside[j as usize * self.width + i as usize] = false;
                    }
                }
            }
        }
    }

    /// The 4-connected component of free pixels containing `z`.
    pub fn component_containing(&self, z: C64) -> Result<Raster> {
        let (i, j) = self.pixel_of(z);
        if !self.get(i, j) {
            return Err(Error::OutOfDomain(format!("{z} is not a free pixel")));
        }
        let mut out = vec![false; self.inside.len()];
        let mut stack = vec![(i, j)];
        out[j as usize * self.width + i as usize] = true;
        while let Some((i, j)) = stack.pop() {
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (a, b) = (i + di, j + dj);
                if self.get(a, b) {
                    let k = b as usize * self.width + a as usize;
                    if !out[k] {
                        out[k] = true;
                        stack.push((a, b));
                    }
                }
            }
        }
        Ok(Raster { inside: out, ..self.clone() })
    }

    /// Binary PGM (P5), free pixels white, first row at the top.
    pub fn write_pgm(&self, mut w: impl Write) -> Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        let mut row = vec![0u8; self.width];
        for j in (0..self.height).rev() {
            for (i, px) in row.iter_mut().enumerate() {
                *px = if self.inside[j * self.width + i] { 255 } else { 0 };
            }
            w.write_all(&row)?;
        }
        Ok(())
    }

    /// Read P5 or P2; grey levels above half of maxval are free.
    pub fn read_pgm(mut r: impl Read, origin: C64, pixel: f64) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        let mut pos = 0;
        let mut token = |buf: &[u8]| -> Result<String> {
            loop {
                while pos < buf.len() && buf[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < buf.len() && buf[pos] == b'#' {
                    while pos < buf.len() && buf[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let s = pos;
            while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if s == pos {
                return Err(Error::Parse("truncated PGM header".into()));
            }
            Ok(String::from_utf8_lossy(&buf[s..pos]).into_owned())
        };
        let magic = token(&buf)?;
        let num = |t: String| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad PGM number {t:?}")));
        let width = num(token(&buf)?)?;
        let height = num(token(&buf)?)?;
        let maxval = num(token(&buf)?)?;
        let mut grey = Vec::with_capacity(width * height);
        match magic.as_str() {
            "P5" => {
                let start = pos + 1;
                let bytes = if maxval > 255 { 2 } else { 1 };
                let data = buf.get(start..start + width * height * bytes).ok_or_else(|| Error::Parse("truncated PGM data".into()))?;
                for k in 0..width * height {
                    grey.push(if bytes == 2 { (data[2 * k] as usize) << 8 | data[2 * k + 1] as usize } else { data[k] as usize });
                }
            }
            "P2" => {
                for _ in 0..width * height {
                    grey.push(num(token(&buf)?)?);
                }
            }
            m => return Err(Error::Parse(format!("unsupported PGM magic {m:?}"))),
        }
        let mut inside = vec![false; width * height];
        for r in 0..height {
            for i in 0..width {
                inside[(height - 1 - r) * width + i] = 2 * grey[r * width + i] > maxval;
            }
        }
        Ok(Raster { width, height, origin, pixel, inside })
    }

    /// Packed bits, LSB first, rows from the bottom, after a 40-byte header:
    /// magic, width and height as u32, origin and pixel size as f64.
    pub fn write_packed(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.width as u32).to_le_bytes())?;
        w.write_all(&(self.height as u32).to_le_bytes())?;
        for v in [self.origin.re, self.origin.im, self.pixel] {
            w.write_all(&v.to_le_bytes())?;
        }
        let mut bytes = vec![0u8; self.inside.len().div_ceil(8)];
        for (k, &b) in self.inside.iter().enumerate() {
            if b {
                bytes[k / 8] |= 1 << (k % 8);
            }
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_packed(mut r: impl Read) -> Result<Self> {
        let mut head = [0u8; 40];
        r.read_exact(&mut head)?;
        if &head[..8] != MAGIC {
            return Err(Error::Parse("not a packed raster".into()));
        }
        let u = |k: usize| u32::from_le_bytes(head[k..k + 4].try_into().unwrap()) as usize;
        let f = |k: usize| f64::from_le_bytes(head[k..k + 8].try_into().unwrap());
        let (width, height) = (u(8), u(12));
        let mut bytes = vec![0u8; (width * height).div_ceil(8)];
        r.read_exact(&mut bytes)?;
        let inside = (0..width * height).map(|k| bytes[k / 8] >> (k % 8) & 1 == 1).collect();
        Ok(Raster { width, height, origin: C64::new(f(16), f(24)), pixel: f(32), inside })
    }
}
