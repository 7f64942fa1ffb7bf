//! Per-block decomposition of whole images and the text codes file that
//! stores the results.
//!
//! ```text
//! SSIMDECOMP-CODES 1
//! l=<l> w=<w> h=<h> padr=<pr> padb=<pb> m=<m> cost=<tag> dictsum=<hex>
//! <blockindex>: <i1>,...,<ik>; <s1>,...,<sk>; <o>
//! ```
//!
//! Constant blocks, and blocks the SSIM closed form cannot handle, are
//! stored as offset-only records with empty index and coefficient lists.

use rayon::prelude::*;

use crate::blockstats::{self, Block};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::imageio::{self, BlockGrid, GrayImage};
use crate::selection::{self, CostKind, DecomposeOptions};
use crate::solvers;

pub const CODES_MAGIC: &str = "SSIMDECOMP-CODES 1";

#[derive(Debug, Clone, PartialEq)]
pub struct CodesHeader {
    pub block_edge: usize,
    pub width: usize,
    pub height: usize,
    pub pad_right: usize,
    pub pad_bottom: usize,
    pub sparsity: usize,
    pub cost: CostKind,
    pub dict_checksum: u64,
}

impl CodesHeader {
    pub fn blocks_x(&self) -> usize {
        (self.width + self.pad_right) / self.block_edge
    }

    pub fn blocks_y(&self) -> usize {
        (self.height + self.pad_bottom) / self.block_edge
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCode {
    pub index: usize,
    pub atoms: Vec<usize>,
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl BlockCode {
    pub fn offset_only(index: usize, offset: f64) -> Self {
        Self { index, atoms: Vec::new(), coeffs: Vec::new(), offset }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodesFile {
    pub header: CodesHeader,
    pub records: Vec<BlockCode>,
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(",")
}

impl CodesFile {
    pub fn render(&self) -> String {
        let h = &self.header;
        let mut out = format!(
            "{CODES_MAGIC}\nl={} w={} h={} padr={} padb={} m={} cost={} dictsum={:016x}\n",
            h.block_edge, h.width, h.height, h.pad_right, h.pad_bottom, h.sparsity, h.cost, h.dict_checksum
        );
        for r in &self.records {
            out.push_str(&format!(
                "{}: {}; {}; {:?}\n",
                r.index,
                join(&r.atoms, |i| i.to_string()),
                join(&r.coeffs, |s| format!("{s:?}")),
                r.offset
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::MalformedCodes(msg);
        let mut lines = text.lines().map(str::trim_end);
        if lines.next() != Some(CODES_MAGIC) {
            return Err(bad("bad magic line".into()));
        }
        let header_line = lines.next().ok_or_else(|| bad("missing header line".into()))?;
        let header = parse_header(header_line)?;
        let mut records = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            records.push(parse_record(line)?);
        }
        let codes = Self { header, records };
        codes.validate()?;
        Ok(codes)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::MalformedCodes(msg));
        let h = &self.header;
        if h.block_edge < 2 || h.width == 0 || h.height == 0 || h.sparsity == 0 {
            return bad(format!("invalid header sizes l={} w={} h={} m={}", h.block_edge, h.width, h.height, h.sparsity));
        }
        if h.pad_right >= h.block_edge
            || h.pad_bottom >= h.block_edge
            || !(h.width + h.pad_right).is_multiple_of(h.block_edge)
            || !(h.height + h.pad_bottom).is_multiple_of(h.block_edge)
        {
            return bad("padding inconsistent with image size and block edge".into());
        }
        let expected = h.blocks_x() * h.blocks_y();
        if self.records.len() != expected {
            return bad(format!("{} records for {expected} blocks", self.records.len()));
        }
        for (k, r) in self.records.iter().enumerate() {
            if r.index != k {
                return bad(format!("record {k} carries index {}", r.index));
            }
            if r.atoms.len() != r.coeffs.len() || r.atoms.len() > h.sparsity {
                return bad(format!("record {k}: {} atoms, {} coefficients", r.atoms.len(), r.coeffs.len()));
            }
            if r.coeffs.iter().chain(std::iter::once(&r.offset)).any(|v| !v.is_finite()) {
                return bad(format!("record {k}: non-finite value"));
            }
        }
        Ok(())
    }
}

fn parse_header(line: &str) -> Result<CodesHeader> {
    let bad = |msg: String| Error::MalformedCodes(msg);
    let mut fields = std::collections::HashMap::new();
    for tok in line.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| bad(format!("bad header field {tok:?}")))?;
        if fields.insert(k, v).is_some() {
            return Err(bad(format!("duplicate header field {k}")));
        }
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(format!("missing header field {k}")));
    let num = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| bad(format!("bad value for {k}"))) };
    Ok(CodesHeader {
        block_edge: num("l")?,
        width: num("w")?,
        height: num("h")?,
        pad_right: num("padr")?,
        pad_bottom: num("padb")?,
        sparsity: num("m")?,
        cost: get("cost")?.parse().map_err(|_| bad("bad cost tag".into()))?,
        dict_checksum: u64::from_str_radix(get("dictsum")?, 16).map_err(|_| bad("bad dictsum".into()))?,
    })
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str, index: usize) -> Result<Vec<T>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::MalformedCodes(format!("block {index}: bad {what} {t:?}"))))
        .collect()
}

fn parse_record(line: &str) -> Result<BlockCode> {
    let bad = |msg: String| Error::MalformedCodes(msg);
    let (idx, rest) = line.split_once(':').ok_or_else(|| bad(format!("bad record {line:?}")))?;
    let index: usize = idx.trim().parse().map_err(|_| bad(format!("bad block index {idx:?}")))?;
    let parts: Vec<&str> = rest.split(';').collect();
    let [atoms, coeffs, offset] = parts.as_slice() else {
        return Err(bad(format!("block {index}: expected three `;`-separated fields")));
    };
    Ok(BlockCode {
        index,
        atoms: parse_list(atoms, "atom index", index)?,
        coeffs: parse_list(coeffs, "coefficient", index)?,
        offset: offset.trim().parse().map_err(|_| bad(format!("block {index}: bad offset")))?,
    })
}

/// Aggregate quality of a decomposed image, measured per block.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeSummary {
    pub block_mse: Vec<f64>,
    pub mean_mse: f64,
    /// Mean of the stabilized SSIM over all blocks.
    pub mean_ssim: f64,
    /// Mean correlation over blocks where both original and approximation vary.
    pub mean_pcc: f64,
    pub constant_blocks: usize,
    /// Blocks downgraded to offset-only because the target was uncorrelated.
    pub degenerate_blocks: usize,
}

enum BlockOutcome {
    Coded(BlockCode),
    Constant(BlockCode),
    Degenerate(BlockCode),
}

fn decompose_block(dict: &Dictionary, index: usize, y: &Block, opts: &DecomposeOptions) -> Result<BlockOutcome> {
    let mean = y.stats().mean;
    if y.is_constant() {
        return Ok(BlockOutcome::Constant(BlockCode::offset_only(index, mean)));
    }
    match selection::decompose(dict, y, opts) {
        Ok(d) => Ok(BlockOutcome::Coded(BlockCode {
            index,
            atoms: d.subset.indices().to_vec(),
            coeffs: d.coeffs,
            offset: d.offset,
        })),
        Err(Error::DegenerateCorrelation) => Ok(BlockOutcome::Degenerate(BlockCode::offset_only(index, mean))),
        Err(e) => Err(e),
    }
}

/// Tiles `img` at the dictionary's block edge and decomposes every block.
pub fn decompose_image(img: &GrayImage, dict: &Dictionary, opts: &DecomposeOptions) -> Result<(CodesFile, DecomposeSummary)> {
    let l = dict
        .block_edge()
        .ok_or_else(|| Error::InvalidConfig(format!("atom length {} is not a square block", dict.p())))?;
    if opts.sparsity == 0 || opts.sparsity > dict.len() {
        return Err(Error::InvalidConfig(format!("sparsity {} outside 1..={}", opts.sparsity, dict.len())));
    }
    let grid = imageio::tile(img, l)?;
    let outcomes: Vec<BlockOutcome> = grid
        .blocks
        .par_iter()
        .enumerate()
        .map(|(i, y)| decompose_block(dict, i, y, opts))
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(outcomes.len());
    let (mut constant_blocks, mut degenerate_blocks) = (0, 0);
    for o in outcomes {
        records.push(match o {
            BlockOutcome::Coded(r) => r,
            BlockOutcome::Constant(r) => {
                constant_blocks += 1;
                r
            }
            BlockOutcome::Degenerate(r) => {
                degenerate_blocks += 1;
                r
            }
        });
    }
    let codes = CodesFile {
        header: CodesHeader {
            block_edge: l,
            width: img.width(),
            height: img.height(),
            pad_right: grid.pad_right,
            pad_bottom: grid.pad_bottom,
            sparsity: opts.sparsity,
            cost: opts.cost,
            dict_checksum: dict.checksum(),
        },
        records,
    };

    let approx = reconstruct_blocks(&codes, dict)?;
    let mut block_mse = Vec::with_capacity(approx.len());
    let (mut ssim_sum, mut pcc_sum, mut pcc_count) = (0.0, 0.0, 0usize);
    for (x, y) in approx.iter().zip(&grid.blocks) {
        block_mse.push(blockstats::mse(x, y)?);
        ssim_sum += blockstats::ssim_eps(x, y, blockstats::DEFAULT_EPS1, blockstats::DEFAULT_EPS2)?;
        if let Ok(r) = blockstats::pcc(x, y) {
            pcc_sum += r;
            pcc_count += 1;
        }
    }
    let blocks = block_mse.len() as f64;
    let summary = DecomposeSummary {
        mean_mse: block_mse.iter().sum::<f64>() / blocks,
        block_mse,
        mean_ssim: ssim_sum / blocks,
        mean_pcc: if pcc_count == 0 { f64::NAN } else { pcc_sum / pcc_count as f64 },
        constant_blocks,
        degenerate_blocks,
    };
    Ok((codes, summary))
}

fn reconstruct_blocks(codes: &CodesFile, dict: &Dictionary) -> Result<Vec<Block>> {
    codes.validate()?;
    let h = &codes.header;
    if h.dict_checksum != dict.checksum() {
        return Err(Error::ChecksumMismatch { expected: h.dict_checksum, found: dict.checksum() });
    }
    if h.block_edge * h.block_edge != dict.p() {
        return Err(Error::MalformedCodes(format!(
            "block edge {} does not match atom length {}",
            h.block_edge,
            dict.p()
        )));
    }
    codes
        .records
        .iter()
        .map(|r| {
            if let Some(&bad) = r.atoms.iter().find(|&&i| i >= dict.len()) {
                return Err(Error::MalformedCodes(format!("block {}: atom {bad} out of range", r.index)));
            }
            solvers::reconstruct_parts(dict, &r.atoms, &r.coeffs, r.offset)
        })
        .collect()
}

/// Rebuilds every block, reassembles the grid and strips padding. Samples
/// are left unquantized.
pub fn reconstruct_image(codes: &CodesFile, dict: &Dictionary) -> Result<GrayImage> {
    let blocks = reconstruct_blocks(codes, dict)?;
    let h = &codes.header;
    imageio::untile(&BlockGrid {
        block_edge: h.block_edge,
        blocks_x: h.blocks_x(),
        blocks_y: h.blocks_y(),
        blocks,
        pad_right: h.pad_right,
        pad_bottom: h.pad_bottom,
    })
}
