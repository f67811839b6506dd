//! Monolingual word embeddings: vocabulary, dense storage, word2vec text I/O
//! and the length/centering normalizations applied before alignment.
//!
//! Matrices are stored row-major with one row per word (`n × d`), so the
//! vector of word `i` is the contiguous slice `row(i)`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{norm, Scalar};

/// Ordered word list with a dense reverse index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary, rejecting repeated words.
    pub fn new(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate word {w:?} in vocabulary")));
            }
        }
        Ok(Vocabulary { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }
}

/// Vocabulary plus an `n × d` matrix of finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T: Scalar> {
    vocab: Vocabulary,
    data: Vec<T>,
    dim: usize,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub fn new(vocab: Vocabulary, data: Vec<T>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        if data.len() != vocab.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: vocab.len() * dim,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value in vector of {:?}",
                vocab.word(pos / dim)
            )));
        }
        Ok(EmbeddingMatrix { vocab, data, dim })
    }

    /// Convenience constructor from parallel word and row lists.
    pub fn from_rows<S: Into<String>>(words: Vec<S>, rows: Vec<Vec<T>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        let vocab = Vocabulary::new(words.into_iter().map(Into::into).collect())?;
        Self::new(vocab, rows.concat(), dim)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.dim)
    }

    /// Row-major backing buffer.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn vector(&self, word: &str) -> Option<&[T]> {
        self.vocab.get(word).map(|i| self.row(i))
    }

    /// Same vocabulary, new values. Caller guarantees the shape.
    pub(crate) fn with_data(&self, data: Vec<T>, dim: usize) -> Self {
        debug_assert_eq!(data.len(), self.len() * dim);
        EmbeddingMatrix {
            vocab: self.vocab.clone(),
            data,
            dim,
        }
    }

    /// Copies the selected rows into a dense `indices.len() × d` matrix.
    pub fn gather(&self, indices: impl IntoIterator<Item = usize>) -> DMatrix<T> {
        let rows: Vec<usize> = indices.into_iter().collect();
        DMatrix::from_fn(rows.len(), self.dim, |r, c| self.data[rows[r] * self.dim + c])
    }

    /// Whole matrix as a dense `n × d` nalgebra matrix.
    pub fn to_dmatrix(&self) -> DMatrix<T> {
        DMatrix::from_row_slice(self.len(), self.dim, &self.data)
    }

    /// Mean Euclidean row norm, zero for an empty matrix.
    pub fn mean_row_norm(&self) -> T {
        if self.is_empty() {
            return T::zero();
        }
        let total = self.rows().fold(T::zero(), |acc, r| acc + norm(r));
        total / T::from_usize_lossy(self.len())
    }
}

/// Options for [`load_embeddings`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    /// Keep at most this many distinct words (file order is frequency order).
    pub max_vocab: Option<usize>,
    /// Lowercase every word before deduplication.
    pub lowercase: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            max_vocab: None,
            lowercase: true,
        }
    }
}

/// Per-character Unicode lowercase mapping (no context-sensitive rules).
pub fn lowercase_word(word: &str) -> String {
    word.chars().flat_map(char::to_lowercase).collect()
}

/// Reads a word2vec text file.
///
/// Rows are kept in file order. When lowercasing, later rows whose folded
/// form was already seen are dropped, so the most frequent spelling wins.
/// Reading stops once `max_vocab` distinct words have been collected.
pub fn load_embeddings<T: Scalar>(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<EmbeddingMatrix<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(BufReader::new(file), path, opts)
}

/// Reader-based variant of [`load_embeddings`]; `origin` only labels errors.
pub fn read_embeddings<T: Scalar, R: BufRead>(
    mut reader: R,
    origin: &Path,
    opts: &LoadOptions,
) -> Result<EmbeddingMatrix<T>> {
    if opts.max_vocab == Some(0) {
        return Err(Error::InvalidArgument("max_vocab must be at least 1".into()));
    }
    let mut line = String::new();
    let read = reader.read_line(&mut line).map_err(|e| Error::io(origin, e))?;
    if read == 0 {
        return Err(Error::parse(origin, 1, "missing header"));
    }
    let header: Vec<&str> = line.split_ascii_whitespace().collect();
    let (declared, dim) = match header.as_slice() {
        [n, d] => match (n.parse::<usize>(), d.parse::<usize>()) {
            (Ok(n), Ok(d)) if d > 0 => (n, d),
            _ => return Err(Error::parse(origin, 1, format!("malformed header {:?}", line.trim_end()))),
        },
        _ => return Err(Error::parse(origin, 1, format!("malformed header {:?}", line.trim_end()))),
    };

    let limit = opts.max_vocab.unwrap_or(usize::MAX);
    let mut words = Vec::new();
    let mut seen = HashMap::new();
    let mut data: Vec<T> = Vec::new();
    let mut rows_read = 0usize;
    let mut lineno = 1usize;
    loop {
        if words.len() >= limit {
            break;
        }
        line.clear();
        let read = reader.read_line(&mut line).map_err(|e| Error::io(origin, e))?;
        if read == 0 {
            break;
        }
        lineno += 1;
        let mut tokens = line.split_ascii_whitespace();
        let Some(word) = tokens.next() else {
            // blank trailing line
            continue;
        };
        rows_read += 1;
        if rows_read > declared {
            return Err(Error::parse(origin, lineno, format!("more rows than the {declared} declared in header")));
        }
        let start = data.len();
        for tok in tokens {
            let value: T = tok
                .parse()
                .map_err(|_| Error::parse(origin, lineno, format!("cannot parse value {tok:?}")))?;
            if !value.is_finite() {
                return Err(Error::parse(origin, lineno, format!("non-finite value {tok:?}")));
            }
            data.push(value);
        }
        let got = data.len() - start;
        if got != dim {
            return Err(Error::parse(origin, lineno, format!("expected {dim} values, found {got}")));
        }
        let key = if opts.lowercase { lowercase_word(word) } else { word.to_owned() };
        if seen.contains_key(&key) {
            data.truncate(start);
            continue;
        }
        seen.insert(key.clone(), words.len());
        words.push(key);
    }
    if words.len() < limit && rows_read < declared {
        return Err(Error::parse(
            origin,
            lineno,
            format!("header declares {declared} rows, file has {rows_read}"),
        ));
    }
    let vocab = Vocabulary { words, index: seen };
    Ok(EmbeddingMatrix { vocab, data, dim })
}

/// Writes word2vec text format using shortest round-trip float formatting.
pub fn save_embeddings<T: Scalar>(emb: &EmbeddingMatrix<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_embeddings(emb, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_embeddings<T: Scalar, W: Write>(emb: &EmbeddingMatrix<T>, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{} {}", emb.len(), emb.dim())?;
    for (word, row) in emb.vocab().words().iter().zip(emb.rows()) {
        w.write_all(word.as_bytes())?;
        write_row(w, row)?;
    }
    Ok(())
}

/// Writes ` v1 v2 … vd\n`.
pub(crate) fn write_row<T: Scalar, W: Write>(w: &mut W, row: &[T]) -> std::io::Result<()> {
    for v in row {
        write!(w, " {v}")?;
    }
    writeln!(w)
}

fn unit_rows_in_place<T: Scalar>(vocab: &Vocabulary, data: &mut [T], dim: usize) -> Result<()> {
    for (i, row) in data.chunks_exact_mut(dim).enumerate() {
        let n = norm(row);
        if n == T::zero() {
            return Err(Error::ZeroVector {
                word: vocab.word(i).to_owned(),
            });
        }
        row.iter_mut().for_each(|x| *x /= n);
    }
    Ok(())
}

fn center_rows_in_place<T: Scalar>(data: &mut [T], dim: usize) {
    let n = data.len() / dim;
    if n == 0 {
        return;
    }
    let mut mean = vec![T::zero(); dim];
    for row in data.chunks_exact(dim) {
        mean.iter_mut().zip(row).for_each(|(m, &x)| *m += x);
    }
    let count = T::from_usize_lossy(n);
    mean.iter_mut().for_each(|m| *m /= count);
    for row in data.chunks_exact_mut(dim) {
        row.iter_mut().zip(&mean).for_each(|(x, &m)| *x -= m);
    }
}

/// Scales every row to unit length. Fails on a zero row.
pub fn unit_normalize<T: Scalar>(emb: &EmbeddingMatrix<T>) -> Result<EmbeddingMatrix<T>> {
    let mut data = emb.data.clone();
    unit_rows_in_place(&emb.vocab, &mut data, emb.dim)?;
    Ok(emb.with_data(data, emb.dim))
}

/// Mean-centers the matrix (subtracts the mean row from every row).
pub fn center<T: Scalar>(emb: &EmbeddingMatrix<T>) -> EmbeddingMatrix<T> {
    let mut data = emb.data.clone();
    center_rows_in_place(&mut data, emb.dim);
    emb.with_data(data, emb.dim)
}

/// Iterative Normalization: each round scales rows to unit length and then
/// subtracts the mean row. The result is zero-mean with row norms that
/// approach one as rounds increase.
pub fn iterative_normalize<T: Scalar>(emb: &EmbeddingMatrix<T>, rounds: usize) -> Result<EmbeddingMatrix<T>> {
    if rounds == 0 {
        return Err(Error::InvalidArgument("normalization rounds must be positive".into()));
    }
    let mut data = emb.data.clone();
    for _ in 0..rounds {
        unit_rows_in_place(&emb.vocab, &mut data, emb.dim)?;
        center_rows_in_place(&mut data, emb.dim);
    }
    Ok(emb.with_data(data, emb.dim))
}
