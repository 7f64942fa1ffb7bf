//! Grayscale PGM (P2/P5, maxval ≤ 255) and block tiling.

use crate::blockstats::Block;
use crate::error::{Error, Result};

/// Row-major grayscale image with real-valued samples. Values are not
/// clamped; quantization happens in [`write_pgm`].
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero-sized image {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImage("non-finite pixel".into()));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// The `l × l` patch with top-left corner `(x, y)`, which must lie inside.
    pub fn patch(&self, x: usize, y: usize, l: usize) -> Result<Block> {
        if x + l > self.width || y + l > self.height {
            return Err(Error::ImageSmallerThanBlock { width: self.width, height: self.height, edge: l });
        }
        let mut data = Vec::with_capacity(l * l);
        for row in y..y + l {
            data.extend_from_slice(&self.pixels[row * self.width + x..row * self.width + x + l]);
        }
        Block::new(data)
    }

    /// Samples rounded half away from zero and clamped to `[0, 255]`.
    pub fn quantized(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| quantize(v) as f64).collect(),
        }
    }
}

fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgmFormat {
    /// ASCII samples.
    P2,
    /// Binary samples.
    #[default]
    P5,
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&[u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() && self.bytes[self.pos] != b'#' {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let tok = self.token().ok_or_else(|| Error::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("bad {what} {:?}", String::from_utf8_lossy(tok))))
    }
}

pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut r = HeaderReader { bytes, pos: 0 };
    let format = match bytes.get(..2) {
        Some(b"P2") => PgmFormat::P2,
        Some(b"P5") => PgmFormat::P5,
        _ => {
            let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
            return Err(Error::MalformedHeader(format!("unsupported magic {magic:?}")));
        }
    };
    r.pos = 2;
    if !matches!(bytes.get(2), Some(b) if b.is_ascii_whitespace() || *b == b'#') {
        return Err(Error::MalformedHeader("missing separator after magic".into()));
    }
    let width = r.number("width")? as usize;
    let height = r.number("height")? as usize;
    let maxval = r.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 {
        return Err(Error::MalformedHeader("maxval is zero".into()));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    let expected = width * height;
    let mut pixels = Vec::with_capacity(expected);
    match format {
        PgmFormat::P5 => {
            // Exactly one whitespace byte separates maxval from the raster.
            match bytes.get(r.pos) {
                Some(b) if b.is_ascii_whitespace() => r.pos += 1,
                _ => return Err(Error::MalformedHeader("missing separator after maxval".into())),
            }
            let data = &bytes[r.pos..];
            if data.len() < expected {
                return Err(Error::TruncatedData { expected, found: data.len() });
            }
            for &b in &data[..expected] {
                if b as u32 > maxval {
                    return Err(Error::MalformedPixel { value: b as u32, maxval });
                }
                pixels.push(b as f64);
            }
        }
        PgmFormat::P2 => {
            while pixels.len() < expected {
                let Some(tok) = r.token() else {
                    return Err(Error::TruncatedData { expected, found: pixels.len() });
                };
                let value: u32 = std::str::from_utf8(tok)
                    .ok()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::MalformedHeader(format!("bad sample {:?}", String::from_utf8_lossy(tok))))?;
                if value > maxval {
                    return Err(Error::MalformedPixel { value, maxval });
                }
                pixels.push(value as f64);
            }
        }
    }
    GrayImage::new(width, height, pixels)
}

pub fn write_pgm(img: &GrayImage, format: PgmFormat) -> Vec<u8> {
    let magic = match format {
        PgmFormat::P2 => "P2",
        PgmFormat::P5 => "P5",
    };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    match format {
        PgmFormat::P5 => out.extend(img.pixels.iter().map(|&v| quantize(v))),
        PgmFormat::P2 => {
            for row in img.pixels.chunks(img.width) {
                let line: Vec<String> = row.iter().map(|&v| quantize(v).to_string()).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
    }
    out
}

/// Non-overlapping `l × l` tiles in row-major grid order. Edges that do not
/// divide evenly are padded by replicating the last column/row.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid {
    pub block_edge: usize,
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub blocks: Vec<Block>,
    pub pad_right: usize,
    pub pad_bottom: usize,
}

impl BlockGrid {
    pub fn width(&self) -> usize {
        self.blocks_x * self.block_edge - self.pad_right
    }

    pub fn height(&self) -> usize {
        self.blocks_y * self.block_edge - self.pad_bottom
    }
}

pub fn tile(img: &GrayImage, l: usize) -> Result<BlockGrid> {
    if l < 2 {
        return Err(Error::InvalidConfig(format!("block edge must be at least 2, got {l}")));
    }
    if img.width == 0 || img.height == 0 {
        return Err(Error::ImageSmallerThanBlock { width: img.width, height: img.height, edge: l });
    }
    let blocks_x = img.width.div_ceil(l);
    let blocks_y = img.height.div_ceil(l);
    let mut blocks = Vec::with_capacity(blocks_x * blocks_y);
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            let mut data = Vec::with_capacity(l * l);
            for dy in 0..l {
                let y = (by * l + dy).min(img.height - 1);
                for dx in 0..l {
                    let x = (bx * l + dx).min(img.width - 1);
                    data.push(img.get(x, y));
                }
            }
            blocks.push(Block::new(data)?);
        }
    }
    Ok(BlockGrid {
        block_edge: l,
        blocks_x,
        blocks_y,
        blocks,
        pad_right: blocks_x * l - img.width,
        pad_bottom: blocks_y * l - img.height,
    })
}

pub fn untile(grid: &BlockGrid) -> Result<GrayImage> {
    let l = grid.block_edge;
    let bad = |msg: String| Error::InconsistentGrid(msg);
    if l < 2 || grid.blocks_x == 0 || grid.blocks_y == 0 {
        return Err(bad(format!("edge {l} with {}x{} blocks", grid.blocks_x, grid.blocks_y)));
    }
    if grid.blocks.len() != grid.blocks_x * grid.blocks_y {
        return Err(bad(format!(
            "{} blocks for a {}x{} grid",
            grid.blocks.len(),
            grid.blocks_x,
            grid.blocks_y
        )));
    }
    if grid.pad_right >= l || grid.pad_bottom >= l {
        return Err(bad(format!("padding {}x{} not below edge {l}", grid.pad_right, grid.pad_bottom)));
    }
    if let Some(i) = grid.blocks.iter().position(|b| b.len() != l * l) {
        return Err(bad(format!("block {i} has length {}", grid.blocks[i].len())));
    }
    let (width, height) = (grid.width(), grid.height());
    let mut pixels = vec![0.0; width * height];
    for (k, block) in grid.blocks.iter().enumerate() {
        let (bx, by) = (k % grid.blocks_x, k / grid.blocks_x);
        for dy in 0..l {
            let y = by * l + dy;
            if y >= height {
                break;
            }
            for dx in 0..l {
                let x = bx * l + dx;
                if x >= width {
                    break;
                }
                pixels[y * width + x] = block.as_slice()[dy * l + dx];
            }
        }
    }
    GrayImage::new(width, height, pixels)
}
