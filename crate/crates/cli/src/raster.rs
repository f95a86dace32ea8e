//! Binary PPM (P6) grayscale rasters: black for kept cells, white otherwise.

use anyhow::{bail, ensure, Context, Result};
use fracperc::{IntervalUnion, RealizationTree};

/// Largest raster side in pixels.
pub const MAX_SIDE: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub dark: Vec<bool>,
}

impl Raster {
    pub fn blank(width: usize, height: usize) -> Self {
        Self { width, height, dark: vec![false; width * height] }
    }

    pub fn is_dark(&self, col: usize, row: usize) -> bool {
        self.dark[row * self.width + col]
    }

    pub fn dark_count(&self) -> usize {
        self.dark.iter().filter(|&&d| d).count()
    }

    /// Encodes with each line of `comment` as a header comment.
    pub fn to_ppm(&self, comment: &str) -> Vec<u8> {
        let mut out = b"P6\n".to_vec();
        for line in comment.lines() {
            let line = line.strip_prefix("# ").unwrap_or(line);
            out.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        out.extend_from_slice(format!("{} {}\n255\n", self.width, self.height).as_bytes());
        for &d in &self.dark {
            let v = if d { 0u8 } else { 255 };
            out.extend_from_slice(&[v, v, v]);
        }
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self> {
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            let line_end = bytes[pos..].iter().position(|&b| b == b'\n').context("truncated header")? + pos;
            let line = std::str::from_utf8(&bytes[pos..line_end])?;
            pos = line_end + 1;
            if line.starts_with('#') {
                continue;
            }
            fields.extend(line.split_whitespace().map(str::to_owned));
        }
        ensure!(fields[0] == "P6" && fields[3] == "255", "not an 8-bit P6 image");
        let (width, height): (usize, usize) = (fields[1].parse()?, fields[2].parse()?);
        let body = &bytes[pos..];
        ensure!(body.len() == 3 * width * height, "pixel data has wrong length");
        let dark = body.chunks_exact(3).map(|px| px[0] < 128).collect();
        Ok(Self { width, height, dark })
    }
}

fn side(base: u32, n: u32) -> Result<u64> {
    match (base as u64).checked_pow(n) {
        Some(s) if s <= MAX_SIDE => Ok(s),
        _ => bail!("raster of {base}^{n} pixels per side exceeds {MAX_SIDE}"),
    }
}

/// One pixel per level-`n` cell. Image row `r` shows lattice row
/// `M^n - 1 - r`, so the picture has the usual orientation.
pub fn render_level(tree: &RealizationTree, n: u32) -> Result<Raster> {
    ensure!(tree.spec().dim() == 2, "rendering needs a planar model");
    let s = side(tree.spec().base(), n)? as usize;
    let mut r = Raster::blank(s, s);
    for c in tree.coords(n)?.chunks_exact(2) {
        let (col, row) = (c[0] as usize, c[1] as usize);
        r.dark[(s - 1 - row) * s + col] = true;
    }
    Ok(r)
}

/// A strip of `height` rows, one column per length-`M^-n` box of `[lo, hi]`,
/// dark where the box meets the projection.
pub fn render_projection(u: &IntervalUnion, lo: f64, hi: f64, base: u32, n: u32, height: usize) -> Result<Raster> {
    let scale = side(base, n)? as f64;
    let width = ((hi - lo) * scale).ceil().max(1.0) as usize;
    ensure!(width as u64 <= 2 * MAX_SIDE, "projection raster too wide");
    let mut row = vec![false; width];
    for c in u.components() {
        let a = (((c.lo - lo) * scale).floor().max(0.0) as usize).min(width - 1);
        let b = (((c.hi - lo) * scale).ceil() as usize).clamp(a + 1, width);
        row[a..b].iter_mut().for_each(|x| *x = true);
    }
    let dark = (0..height).flat_map(|_| row.iter().copied()).collect();
    Ok(Raster { width, height, dark })
}
