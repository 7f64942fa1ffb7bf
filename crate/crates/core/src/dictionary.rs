//! Atom sets ("basis sets") and their text file format.
//!
//! ```text
//! SSIMDECOMP-DICT 1
//! <n> <p>
//! # optional comment lines
//! <p space-separated reals>   (n lines)
//! ```

use std::f64::consts::PI;
use std::hash::Hasher;

use fnv::FnvHasher;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blockstats::Block;
use crate::error::{Error, Result};
use crate::imageio::GrayImage;

pub const DICT_MAGIC: &str = "SSIMDECOMP-DICT 1";
const PROVENANCE_PREFIX: &str = "# provenance: ";

/// Upper bound on patch draws per requested atom before giving up on a flat image.
const PATCH_ATTEMPTS_PER_ATOM: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    p: usize,
    atoms: Vec<Block>,
    provenance: String,
}

impl Dictionary {
    /// Validates that there is at least one atom, all atoms share a length
    /// and none is constant (the offset term already spans constants).
    pub fn new(atoms: Vec<Block>, provenance: impl Into<String>) -> Result<Self> {
        let Some(first) = atoms.first() else {
            return Err(Error::InvalidConfig("dictionary needs at least one atom".into()));
        };
        let p = first.len();
        for (i, atom) in atoms.iter().enumerate() {
            if atom.len() != p {
                return Err(Error::DimensionMismatch { expected: p, found: atom.len() });
            }
            if atom.is_constant() {
                return Err(Error::ZeroVarianceAtom(i));
            }
        }
        Ok(Self { p, atoms, provenance: provenance.into() })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, provenance: impl Into<String>) -> Result<Self> {
        let atoms = rows.into_iter().map(Block::new).collect::<Result<Vec<_>>>()?;
        Self::new(atoms, provenance)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn atoms(&self) -> &[Block] {
        &self.atoms
    }

    pub fn atom(&self, index: usize) -> Result<&Block> {
        self.atoms.get(index).ok_or(Error::IndexOutOfRange { index, len: self.atoms.len() })
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Edge length `l` when `p = l²`.
    pub fn block_edge(&self) -> Option<usize> {
        let l = (self.p as f64).sqrt().round() as usize;
        (l * l == self.p).then_some(l)
    }

    /// Serialization without comment lines; the checksum is taken over this.
    pub fn canonical_text(&self) -> String {
        self.render(false)
    }

    pub fn save(&self) -> String {
        self.render(true)
    }

    fn render(&self, with_comments: bool) -> String {
        let mut out = String::new();
        out.push_str(DICT_MAGIC);
        out.push('\n');
        out.push_str(&format!("{} {}\n", self.len(), self.p));
        if with_comments && !self.provenance.is_empty() {
            let prov = self.provenance.replace(['\n', '\r'], " ");
            out.push_str(&format!("{PROVENANCE_PREFIX}{prov}\n"));
        }
        for atom in &self.atoms {
            let line: Vec<String> = atom.as_slice().iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// 64-bit FNV-1a over [`Dictionary::canonical_text`].
    pub fn checksum(&self) -> u64 {
        let mut h = FnvHasher::default();
        h.write(self.canonical_text().as_bytes());
        h.finish()
    }

    pub fn load(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes)
            .map_err(|e| Error::MalformedDictFile(format!("not UTF-8: {e}")))?;
        Self::parse(text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let malformed = |msg: String| Error::MalformedDictFile(msg);
        let mut lines = text.lines().map(str::trim_end);
        match lines.next() {
            Some(DICT_MAGIC) => {}
            other => return Err(malformed(format!("bad magic line {other:?}"))),
        }
        let mut provenance = String::new();
        let mut body = Vec::new();
        for line in lines {
            if let Some(rest) = line.strip_prefix(PROVENANCE_PREFIX) {
                provenance = rest.to_string();
            } else if !line.starts_with('#') && !line.trim().is_empty() {
                body.push(line);
            }
        }
        let (header, rows) = body
            .split_first()
            .ok_or_else(|| malformed("missing atom count line".into()))?;
        let counts: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| malformed(format!("bad count {t:?}"))))
            .collect::<Result<_>>()?;
        let &[n, p] = counts.as_slice() else {
            return Err(malformed(format!("expected `<n> <p>`, got {header:?}")));
        };
        if n == 0 || p < 2 {
            return Err(malformed(format!("invalid sizes n={n} p={p}")));
        }
        if rows.len() != n {
            return Err(malformed(format!("header declares {n} atoms, found {}", rows.len())));
        }
        let mut atoms = Vec::with_capacity(n);
        for (i, row) in rows.iter().enumerate() {
            let values: Vec<f64> = row
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| malformed(format!("atom {i}: bad value {t:?}"))))
                .collect::<Result<_>>()?;
            if values.len() != p {
                return Err(malformed(format!("atom {i} has {} values, expected {p}", values.len())));
            }
            atoms.push(Block::new(values).map_err(|e| malformed(format!("atom {i}: {e}")))?);
        }
        Self::new(atoms, provenance)
    }
}

/// Samples `n` non-constant `l × l` patches at uniformly random positions.
pub fn build_random_patches(img: &GrayImage, l: usize, n: usize, seed: u64) -> Result<Dictionary> {
    if l < 2 {
        return Err(Error::InvalidConfig(format!("block edge must be at least 2, got {l}")));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("atom count must be at least 1".into()));
    }
    if img.width() < l || img.height() < l {
        return Err(Error::ImageSmallerThanBlock { width: img.width(), height: img.height(), edge: l });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = PATCH_ATTEMPTS_PER_ATOM * n;
    let mut atoms = Vec::with_capacity(n);
    let mut attempts = 0;
    while atoms.len() < n {
        if attempts == max_attempts {
            return Err(Error::TooManyConstantPatches { attempts });
        }
        attempts += 1;
        let x = rng.random_range(0..=img.width() - l);
        let y = rng.random_range(0..=img.height() - l);
        let patch = img.patch(x, y, l)?;
        if !patch.is_constant() {
            atoms.push(patch);
        }
    }
    Dictionary::new(atoms, format!("patches l={l} n={n} seed={seed}"))
}

/// The `l² − 1` orthonormal two-dimensional DCT-II atoms, DC excluded,
/// ordered by vertical then horizontal frequency.
pub fn build_dct(l: usize) -> Result<Dictionary> {
    if l < 2 {
        return Err(Error::InvalidConfig(format!("block edge must be at least 2, got {l}")));
    }
    let norm = |k: usize| if k == 0 { (1.0 / l as f64).sqrt() } else { (2.0 / l as f64).sqrt() };
    let basis = |k: usize, x: usize| norm(k) * (PI * (2 * x + 1) as f64 * k as f64 / (2 * l) as f64).cos();
    let mut atoms = Vec::with_capacity(l * l - 1);
    for v in 0..l {
        for u in 0..l {
            if u == 0 && v == 0 {
                continue;
            }
            let mut data = Vec::with_capacity(l * l);
            for y in 0..l {
                for x in 0..l {
                    data.push(basis(v, y) * basis(u, x));
                }
            }
            atoms.push(Block::new(data)?);
        }
    }
    Dictionary::new(atoms, format!("dct l={l}"))
}
