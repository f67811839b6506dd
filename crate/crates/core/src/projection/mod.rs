//! Supervised linear maps between embedding spaces.
//!
//! A [`LinearMap`] sends a source row `x` to `W (x - μ)`, where `μ` is an
//! optional input offset (only CCA uses one). Four fitting routes are
//! provided: orthogonal Procrustes, unconstrained least squares, CCA and
//! RCSLS refinement.

mod cca;
mod lstsq;
mod procrustes;
mod rcsls;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

pub use cca::{fit_cca, CcaFit};
pub use lstsq::fit_least_squares;
pub use procrustes::fit_procrustes;
pub use rcsls::{fit_rcsls, rcsls_loss_and_grad, rcsls_objective, RcslsConfig, RcslsNeighborhoods};

use crate::dictionary::IndexedDictionary;
use crate::embeddings::{write_row, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tolerance used to certify `WᵀW = I`.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap<T: Scalar> {
    matrix: DMatrix<T>,
    offset: Option<DVector<T>>,
    orthogonal: bool,
}

impl<T: Scalar> LinearMap<T> {
    /// Unconstrained map with output dimension `matrix.nrows()`.
    pub fn new(matrix: DMatrix<T>) -> Self {
        LinearMap {
            matrix,
            offset: None,
            orthogonal: false,
        }
    }

    /// Orthogonal map; fails unless `‖WᵀW − I‖_max ≤ 1e-8`.
    pub fn orthogonal(matrix: DMatrix<T>) -> Result<Self> {
        if !matrix.is_square() || orthogonality_error(&matrix) > T::lit(ORTHOGONALITY_TOL) {
            return Err(Error::InvalidArgument("matrix is not orthogonal".into()));
        }
        Ok(LinearMap {
            matrix,
            offset: None,
            orthogonal: true,
        })
    }

    pub fn identity(dim: usize) -> Self {
        LinearMap {
            matrix: DMatrix::identity(dim, dim),
            offset: None,
            orthogonal: true,
        }
    }

    /// Subtract `offset` from every input row before applying the matrix.
    pub fn with_offset(mut self, offset: DVector<T>) -> Result<Self> {
        if offset.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: offset.len(),
            });
        }
        self.offset = Some(offset);
        Ok(self)
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn offset(&self) -> Option<&DVector<T>> {
        self.offset.as_ref()
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }

    pub fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Row-major copy of the matrix, the layout the gemm kernel expects.
    pub(crate) fn row_major(&self) -> Vec<T> {
        let (r, c) = self.matrix.shape();
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            out.extend(self.matrix.row(i).iter().copied());
        }
        out
    }
}

/// `‖WᵀW − I‖_max`.
pub fn orthogonality_error<T: Scalar>(w: &DMatrix<T>) -> T {
    let gram = w.transpose() * w;
    let mut worst = T::zero();
    for (r, c) in (0..gram.nrows()).flat_map(|r| (0..gram.ncols()).map(move |c| (r, c))) {
        let target = if r == c { T::one() } else { T::zero() };
        worst = worst.max((gram[(r, c)] - target).abs());
    }
    worst
}

/// Source and target embeddings living in one shared space.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedEmbeddings<T: Scalar> {
    pub src: EmbeddingMatrix<T>,
    pub tgt: EmbeddingMatrix<T>,
}

impl<T: Scalar> AlignedEmbeddings<T> {
    pub fn new(src: EmbeddingMatrix<T>, tgt: EmbeddingMatrix<T>) -> Result<Self> {
        if src.dim() != tgt.dim() {
            return Err(Error::DimensionMismatch {
                expected: src.dim(),
                got: tgt.dim(),
            });
        }
        Ok(AlignedEmbeddings { src, tgt })
    }
}

const APPLY_CHUNK: usize = 4096;

/// Replaces every row `x` by `W (x − μ)`; the vocabulary is unchanged.
pub fn apply_projection<T: Scalar>(map: &LinearMap<T>, emb: &EmbeddingMatrix<T>) -> Result<EmbeddingMatrix<T>> {
    let (d_in, d_out) = (map.input_dim(), map.output_dim());
    if emb.dim() != d_in {
        return Err(Error::DimensionMismatch {
            expected: d_in,
            got: emb.dim(),
        });
    }
    if d_out == 0 {
        return Err(Error::InvalidArgument("projection has zero output dimension".into()));
    }
    let w = map.row_major();
    let mut out = vec![T::zero(); emb.len() * d_out];
    out.par_chunks_mut(APPLY_CHUNK * d_out)
        .zip(emb.as_slice().par_chunks(APPLY_CHUNK * d_in))
        .for_each(|(dst, src)| {
            let rows = src.len() / d_in;
            match map.offset() {
                Some(mu) => {
                    let mut shifted = src.to_vec();
                    for row in shifted.chunks_exact_mut(d_in) {
                        row.iter_mut().zip(mu.iter()).for_each(|(x, &m)| *x -= m);
                    }
                    T::gemm_nt(rows, d_out, d_in, &shifted, &w, dst);
                }
                None => T::gemm_nt(rows, d_out, d_in, src, &w, dst),
            }
        });
    Ok(emb.with_data(out, d_out))
}

pub(crate) fn check_dictionary<T: Scalar>(
    src: &EmbeddingMatrix<T>,
    tgt: &EmbeddingMatrix<T>,
    dict: &IndexedDictionary,
) -> Result<()> {
    if dict.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    if dict.src_vocab_size() != src.len() || dict.tgt_vocab_size() != tgt.len() {
        return Err(Error::VocabMismatch {
            src: src.len(),
            tgt: tgt.len(),
            other_src: dict.src_vocab_size(),
            other_tgt: dict.tgt_vocab_size(),
        });
    }
    Ok(())
}

/// Dictionary rows as `(X_D, Z_D)`, one row per pair.
pub(crate) fn paired_rows<T: Scalar>(
    src: &EmbeddingMatrix<T>,
    tgt: &EmbeddingMatrix<T>,
    dict: &IndexedDictionary,
) -> (DMatrix<T>, DMatrix<T>) {
    let x = src.gather(dict.pairs().iter().map(|p| p.0));
    let z = tgt.gather(dict.pairs().iter().map(|p| p.1));
    (x, z)
}

/// Writes `"<rows> <cols>"`, the matrix rows, and an optional
/// `"offset v1 … vd"` line for centered maps.
pub fn save_map<T: Scalar>(map: &LinearMap<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{} {}", map.output_dim(), map.input_dim()).map_err(io)?;
    let rows = map.row_major();
    for row in rows.chunks_exact(map.input_dim().max(1)) {
        let mut line = Vec::new();
        write_row(&mut line, row).map_err(io)?;
        // write_row emits a leading space, drop it
        w.write_all(&line[1..]).map_err(io)?;
    }
    if let Some(mu) = map.offset() {
        w.write_all(b"offset").map_err(io)?;
        write_row(&mut w, mu.as_slice()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a map written by [`save_map`]. The orthogonal flag is recomputed.
pub fn load_map<T: Scalar>(path: impl AsRef<Path>) -> Result<LinearMap<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let mut next = || lines.next().transpose().map_err(|e| Error::io(path, e));
    let header = next()?.ok_or_else(|| Error::parse(path, 1, "missing header"))?;
    let dims: Vec<usize> = header
        .split_ascii_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(path, 1, "malformed header"))?;
    let [rows, cols] = dims[..] else {
        return Err(Error::parse(path, 1, "malformed header"));
    };
    let parse_values = |text: &str, lineno: usize| -> Result<Vec<T>> {
        let v = text
            .split_ascii_whitespace()
            .map(|t| t.parse::<T>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<T>>>()
            .ok_or_else(|| Error::parse(path, lineno, "bad value"))?;
        if v.len() != cols {
            return Err(Error::parse(path, lineno, format!("expected {cols} values, found {}", v.len())));
        }
        Ok(v)
    };
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let lineno = r + 2;
        let line = next()?.ok_or_else(|| Error::parse(path, lineno, "missing matrix row"))?;
        data.extend(parse_values(&line, lineno)?);
    }
    let matrix = DMatrix::from_row_slice(rows, cols, &data);
    let orthogonal = matrix.is_square() && orthogonality_error(&matrix) <= T::lit(ORTHOGONALITY_TOL);
    let mut map = LinearMap {
        matrix,
        offset: None,
        orthogonal,
    };
    let lineno = rows + 2;
    if let Some(line) = next()? {
        if let Some(rest) = line.strip_prefix("offset") {
            map.offset = Some(DVector::from_vec(parse_values(rest, lineno)?));
        } else if !line.trim().is_empty() {
            return Err(Error::parse(path, lineno, "unexpected trailing content"));
        }
    }
    Ok(map)
}
