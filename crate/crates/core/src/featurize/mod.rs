//! Molecular featurization: Morgan fingerprints, a graph-derived
//! physicochemical descriptor set, Tanimoto similarity, and feature
//! standardization.

mod cache;
mod descriptors;
mod standardize;

pub use cache::{read_feature_cache, write_feature_cache, FeatureCache, FeatureRecord};
pub use descriptors::{descriptor_names, physchem_descriptors, DescriptorVector, DESCRIPTOR_SCHEMA_VERSION};
pub use standardize::{standardize, Standardizer};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;
use crate::smiles::MolecularGraph;

/// Fingerprint width in bits.
pub const FINGERPRINT_WIDTH: usize = 2048;
/// Circular environment radius.
pub const FINGERPRINT_RADIUS: u32 = 3;

/// Seed folded into the environment hash so bit assignment is a fixed
/// function of the graph across platforms and releases.
const HASH_SEED: u64 = 0x9e3779b97f4a7c15;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeaturizeError {
    #[error("fingerprint widths differ: {a} vs {b}")]
    WidthMismatch { a: usize, b: usize },
    #[error("column counts differ: train has {train}, input has {input}")]
    ShapeMismatch { train: usize, input: usize },
    #[error("training matrix is empty")]
    EmptyTrain,
}

/// Fixed-width bit vector hashing circular atom environments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    blocks: Vec<u64>,
    width: usize,
    popcount: u32,
}

impl Fingerprint {
    fn zeroed(width: usize) -> Self {
        assert!(width >= 1, "fingerprint width must be at least 1");
        Fingerprint { blocks: vec![0; width.div_ceil(64)], width, popcount: 0 }
    }

    fn set(&mut self, bit: usize) {
        let (block, offset) = (bit / 64, bit % 64);
        if self.blocks[block] & (1 << offset) == 0 {
            self.blocks[block] |= 1 << offset;
            self.popcount += 1;
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn popcount(&self) -> u32 {
        self.popcount
    }

    pub fn bit(&self, i: usize) -> bool {
        self.blocks[i / 64] & (1 << (i % 64)) != 0
    }

    /// Indices of set bits, ascending.
    pub fn on_bits(&self) -> Vec<usize> {
        (0..self.width).filter(|&i| self.bit(i)).collect()
    }

    /// Builds a fingerprint from explicit bit indices (test and I/O surface).
    pub fn from_on_bits(width: usize, bits: &[usize]) -> Self {
        let mut fp = Fingerprint::zeroed(width);
        for &b in bits {
            assert!(b < width, "bit {b} out of range for width {width}");
            fp.set(b);
        }
        fp
    }

    /// Lowercase hex encoding, most significant block first, fixed length.
    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.blocks.len() * 16);
        for block in self.blocks.iter().rev() {
            s.push_str(&format!("{block:016x}"));
        }
        s
    }

    pub fn from_hex(width: usize, hex: &str) -> Option<Self> {
        let n_blocks = width.div_ceil(64);
        if hex.len() != n_blocks * 16 {
            return None;
        }
        let mut blocks = vec![0u64; n_blocks];
        for (i, chunk) in hex.as_bytes().chunks(16).enumerate() {
            let s = std::str::from_utf8(chunk).ok()?;
            blocks[n_blocks - 1 - i] = u64::from_str_radix(s, 16).ok()?;
        }
        let popcount = blocks.iter().map(|b| b.count_ones()).sum();
        Some(Fingerprint { blocks, width, popcount })
    }
}

/// 64-bit mixing hash over the invariant tuple bytes (FNV-1a with a
/// splitmix64 finalizer), seeded for cross-platform determinism.
fn mix_hash(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64 ^ HASH_SEED;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58476d1ce4e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d049bb133111eb);
    h ^ (h >> 31)
}

/// Morgan circular fingerprint with the default width and radius.
pub fn morgan_fingerprint_default(graph: &MolecularGraph) -> Fingerprint {
    morgan_fingerprint(graph, FINGERPRINT_RADIUS, FINGERPRINT_WIDTH)
}

/// Morgan circular fingerprint: for each atom and each environment level
/// r in 0..=radius, a canonical invariant of the r-neighborhood is hashed to
/// a bit index mod `width`. Output is independent of atom input order.
pub fn morgan_fingerprint(graph: &MolecularGraph, radius: u32, width: usize) -> Fingerprint {
    let n = graph.heavy_atom_count();
    let mut fp = Fingerprint::zeroed(width);

    // Initial atom invariants: element, degree, charge, implicit H count,
    // aromatic flag, ring flag.
    let mut invariants: Vec<u64> = graph
        .atoms()
        .iter()
        .map(|a| {
            let mut buf = [0u8; 7];
            buf[0] = a.element.atomic_number();
            buf[1] = a.degree;
            buf[2] = (a.formal_charge as i16 + 128) as u8;
            buf[3] = a.implicit_h;
            buf[4] = u8::from(a.is_aromatic);
            buf[5] = u8::from(a.in_ring);
            buf[6] = 0xa0;
            mix_hash(&buf)
        })
        .collect();

    for inv in &invariants {
        fp.set((inv % width as u64) as usize);
    }

    let mut buf = Vec::with_capacity(64);
    for _ in 0..radius {
        let mut next = vec![0u64; n];
        for i in 0..n {
            // Neighbor (bond order, invariant) pairs in canonical order.
            let mut env: Vec<(u8, u64)> =
                graph.neighbors(i).map(|(j, order)| (order.code(), invariants[j])).collect();
            env.sort_unstable();
            buf.clear();
            buf.extend_from_slice(&invariants[i].to_le_bytes());
            for (code, inv) in &env {
                buf.push(*code);
                buf.extend_from_slice(&inv.to_le_bytes());
            }
            next[i] = mix_hash(&buf);
        }
        invariants = next;
        for inv in &invariants {
            fp.set((inv % width as u64) as usize);
        }
    }
    fp
}

/// Tanimoto similarity |a AND b| / |a OR b|. Two all-zero fingerprints are
/// treated as identical objects with similarity 1.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FeaturizeError> {
    if a.width != b.width {
        return Err(FeaturizeError::WidthMismatch { a: a.width, b: b.width });
    }
    Ok(tanimoto_same_width(a, b))
}

/// Tanimoto for fingerprints already known to share a width (kernel inner
/// loops validate once up front).
pub(crate) fn tanimoto_same_width(a: &Fingerprint, b: &Fingerprint) -> f64 {
    debug_assert_eq!(a.width, b.width);
    let mut inter = 0u32;
    let mut union = 0u32;
    for (x, y) in a.blocks.iter().zip(&b.blocks) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Row-major dense matrix of descriptor features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * cols);
        for row in &rows {
            assert_eq!(row.len(), cols, "ragged rows");
            data.extend_from_slice(row);
        }
        DenseMatrix { rows: n, cols, data }
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len());
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn select(&self, indices: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix { rows: indices.len(), cols: self.cols, data }
    }
}

/// Which feature family a matrix carries; models check kind compatibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    Fingerprint,
    Descriptor,
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureKind::Fingerprint => f.write_str("mfp"),
            FeatureKind::Descriptor => f.write_str("physchem"),
        }
    }
}

/// Feature container handed to models: fingerprint lists for the Tanimoto
/// kernel and boosting, dense descriptor matrices for the RBF kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureMatrix {
    Fingerprints(Vec<Fingerprint>),
    Dense(DenseMatrix),
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        match self {
            FeatureMatrix::Fingerprints(v) => v.len(),
            FeatureMatrix::Dense(m) => m.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> FeatureKind {
        match self {
            FeatureMatrix::Fingerprints(_) => FeatureKind::Fingerprint,
            FeatureMatrix::Dense(_) => FeatureKind::Descriptor,
        }
    }

    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        match self {
            FeatureMatrix::Fingerprints(v) => {
                FeatureMatrix::Fingerprints(indices.iter().map(|&i| v[i].clone()).collect())
            }
            FeatureMatrix::Dense(m) => FeatureMatrix::Dense(m.select(indices)),
        }
    }
}

/// Fingerprints for a batch of molecules, parallel across molecules with
/// deterministic output order.
pub fn fingerprint_batch(graphs: &[MolecularGraph]) -> Vec<Fingerprint> {
    par::run_indexed(graphs.len(), |i| morgan_fingerprint_default(&graphs[i]))
}

/// Descriptor matrix for a batch of molecules.
pub fn descriptor_batch(graphs: &[MolecularGraph]) -> DenseMatrix {
    let cols = descriptor_names().len();
    let data = par::fill_rows(graphs.len(), cols, |i, row| {
        row.copy_from_slice(physchem_descriptors(&graphs[i]).values());
    });
    DenseMatrix::from_flat(graphs.len(), cols, data)
}
