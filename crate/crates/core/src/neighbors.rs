//! Exact cosine retrieval, CSLS scoring, mutual-nearest-neighbor dictionary
//! induction and bilingual lexicon induction (BLI) evaluation.
//!
//! Similarities are computed block by block with a dense `Q Kᵀ` product, so
//! memory stays bounded for large vocabularies. Each query row is handled by
//! exactly one worker and keys are scanned in ascending index order, which
//! makes every result independent of the thread count. Ties always go to the
//! lower index.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::dictionary::IndexedDictionary;
use crate::embeddings::{unit_normalize, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default CSLS neighborhood size.
pub const DEFAULT_CSLS_K: usize = 10;

const QUERY_BLOCK: usize = 256;
const KEY_BLOCK: usize = 2048;

/// Runs `visit(state, key_offset, scores)` for every query against every
/// key block, where `scores[t]` is the dot product with key `key_offset + t`.
fn scan_similarities<T, S, I, F>(queries: &[T], keys: &[T], dim: usize, init: I, visit: F) -> Vec<S>
where
    T: Scalar,
    S: Send,
    I: Fn(usize) -> S + Sync,
    F: Fn(&mut S, usize, usize, &[T]) + Sync,
{
    let n_keys = keys.len() / dim;
    queries
        .par_chunks(QUERY_BLOCK * dim)
        .enumerate()
        .flat_map_iter(|(block, q)| {
            let rows = q.len() / dim;
            let first = block * QUERY_BLOCK;
            let mut states: Vec<S> = (first..first + rows).map(&init).collect();
            let mut buf = vec![T::zero(); rows * KEY_BLOCK.min(n_keys.max(1))];
            for start in (0..n_keys).step_by(KEY_BLOCK) {
                let width = KEY_BLOCK.min(n_keys - start);
                let k = &keys[start * dim..(start + width) * dim];
                T::gemm_nt(rows, width, dim, q, k, &mut buf[..rows * width]);
                for (r, state) in states.iter_mut().enumerate() {
                    visit(state, first + r, start, &buf[r * width..(r + 1) * width]);
                }
            }
            states
        })
        .collect()
}

/// Keeps the `k` best `(index, score)` entries, best first.
struct TopK<T> {
    k: usize,
    items: Vec<(usize, T)>,
}

impl<T: Scalar> TopK<T> {
    fn new(k: usize) -> Self {
        TopK {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn push(&mut self, index: usize, score: T) {
        if self.items.len() == self.k {
            let (wi, ws) = self.items[self.k - 1];
            if !(score > ws || (score == ws && index < wi)) {
                return;
            }
            self.items.pop();
        }
        let pos = self
            .items
            .iter()
            .position(|&(i, s)| score > s || (score == s && index < i))
            .unwrap_or(self.items.len());
        self.items.insert(pos, (index, score));
    }
}

/// Top-`k` keys by raw dot product for every query (row-major inputs).
pub(crate) fn topk_dot<T: Scalar>(queries: &[T], keys: &[T], dim: usize, k: usize) -> Vec<Vec<(usize, T)>> {
    scan_similarities(
        queries,
        keys,
        dim,
        |_| TopK::new(k),
        |top, _, offset, scores| {
            for (t, &s) in scores.iter().enumerate() {
                top.push(offset + t, s);
            }
        },
    )
    .into_iter()
    .map(|t| t.items)
    .collect()
}

fn check_k(k: usize, available: usize) -> Result<()> {
    if k == 0 || k > available {
        return Err(Error::InvalidK { k, max: available });
    }
    Ok(())
}

fn check_dims<T: Scalar>(a: &EmbeddingMatrix<T>, b: &EmbeddingMatrix<T>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Exact top-`k` keys by cosine similarity for every query, best first.
pub fn topk_cosine<T: Scalar>(
    queries: &EmbeddingMatrix<T>,
    keys: &EmbeddingMatrix<T>,
    k: usize,
) -> Result<Vec<Vec<(usize, T)>>> {
    check_dims(queries, keys)?;
    check_k(k, keys.len())?;
    let q = unit_normalize(queries)?;
    let kk = unit_normalize(keys)?;
    Ok(topk_dot(q.as_slice(), kk.as_slice(), q.dim(), k))
}

/// Per-word CSLS penalties: the mean cosine of each word to its `k`
/// nearest neighbors in the other language.
#[derive(Debug, Clone, PartialEq)]
pub struct CslsIndex<T: Scalar> {
    k: usize,
    r_src: Vec<T>,
    r_tgt: Vec<T>,
}

impl<T: Scalar> CslsIndex<T> {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Mean top-`k` cosine of each source word into the target space.
    pub fn r_src(&self) -> &[T] {
        &self.r_src
    }

    /// Mean top-`k` cosine of each target word into the source space.
    pub fn r_tgt(&self) -> &[T] {
        &self.r_tgt
    }

    fn check<U: Scalar>(&self, src: &EmbeddingMatrix<U>, tgt: &EmbeddingMatrix<U>) -> Result<()> {
        if self.r_src.len() != src.len() || self.r_tgt.len() != tgt.len() {
            return Err(Error::VocabMismatch {
                src: src.len(),
                tgt: tgt.len(),
                other_src: self.r_src.len(),
                other_tgt: self.r_tgt.len(),
            });
        }
        Ok(())
    }
}

fn mean_scores<T: Scalar>(top: &[(usize, T)]) -> T {
    let sum = top.iter().fold(T::zero(), |acc, &(_, s)| acc + s);
    sum / T::from_usize_lossy(top.len())
}

/// Builds the CSLS penalties. Requires `k` below both vocabulary sizes.
pub fn build_csls_index<T: Scalar>(src: &EmbeddingMatrix<T>, tgt: &EmbeddingMatrix<T>, k: usize) -> Result<CslsIndex<T>> {
    check_dims(src, tgt)?;
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::InvalidArgument("CSLS needs non-empty vocabularies".into()));
    }
    let limit = src.len().min(tgt.len());
    if k == 0 || k >= limit {
        return Err(Error::InvalidK { k, max: limit - 1 });
    }
    let x = unit_normalize(src)?;
    let z = unit_normalize(tgt)?;
    let d = x.dim();
    let r_src = topk_dot(x.as_slice(), z.as_slice(), d, k).iter().map(|t| mean_scores(t)).collect();
    let r_tgt = topk_dot(z.as_slice(), x.as_slice(), d, k).iter().map(|t| mean_scores(t)).collect();
    Ok(CslsIndex { k, r_src, r_tgt })
}

/// CSLS argmax over `keys` for the selected query rows.
/// `score(q, key) = 2·cos − r_query[q] − r_key[key]`, ties to the lower key.
fn csls_argmax<T: Scalar>(
    queries: &EmbeddingMatrix<T>,
    keys: &EmbeddingMatrix<T>,
    selected: &[usize],
    r_query: &[T],
    r_key: &[T],
    key_limit: usize,
) -> Result<Vec<usize>> {
    if let Some(&bad) = selected.iter().find(|&&q| q >= queries.len()) {
        return Err(Error::IndexOutOfBounds {
            index: bad,
            len: queries.len(),
        });
    }
    let q_unit = unit_normalize(queries)?;
    let k_unit = unit_normalize(keys)?;
    let d = q_unit.dim();
    let mut q = Vec::with_capacity(selected.len() * d);
    for &i in selected {
        q.extend_from_slice(q_unit.row(i));
    }
    let key_limit = key_limit.min(keys.len());
    let two = T::lit(2.0);
    let best = scan_similarities(
        &q,
        &k_unit.as_slice()[..key_limit * d],
        d,
        |r| (selected[r], None::<(usize, T)>),
        |(query, best), _, offset, cos| {
            let rq = r_query[*query];
            for (t, &c) in cos.iter().enumerate() {
                let j = offset + t;
                let score = two * c - rq - r_key[j];
                if best.is_none_or(|(_, b)| score > b) {
                    *best = Some((j, score));
                }
            }
        },
    );
    Ok(best.into_iter().map(|(_, b)| b.expect("non-empty key set").0).collect())
}

/// Translates each query source index to its CSLS-best target index.
pub fn csls_translate<T: Scalar>(
    index: &CslsIndex<T>,
    src: &EmbeddingMatrix<T>,
    tgt: &EmbeddingMatrix<T>,
    queries: &[usize],
) -> Result<Vec<usize>> {
    check_dims(src, tgt)?;
    index.check(src, tgt)?;
    csls_argmax(src, tgt, queries, &index.r_src, &index.r_tgt, tgt.len())
}

/// Reverse direction: CSLS-best source index for each target query.
pub fn csls_translate_backward<T: Scalar>(
    index: &CslsIndex<T>,
    src: &EmbeddingMatrix<T>,
    tgt: &EmbeddingMatrix<T>,
    queries: &[usize],
) -> Result<Vec<usize>> {
    check_dims(src, tgt)?;
    index.check(src, tgt)?;
    csls_argmax(tgt, src, queries, &index.r_tgt, &index.r_src, src.len())
}

/// Options for [`induce_synthetic_dictionary_with`].
#[derive(Debug, Clone, Default)]
pub struct InduceOptions {
    /// Only the `max_rank` most frequent words of each side take part.
    pub max_rank: Option<usize>,
    /// Drop candidate pairs whose source or target word is already covered
    /// by this dictionary.
    pub exclude: Option<IndexedDictionary>,
}

/// Synthetic dictionary of mutual CSLS nearest neighbors: `(i, j)` is kept
/// when `j` is the best target for `i` and `i` is the best source for `j`.
pub fn induce_synthetic_dictionary<T: Scalar>(
    index: &CslsIndex<T>,
    src: &EmbeddingMatrix<T>,
    tgt: &EmbeddingMatrix<T>,
) -> Result<IndexedDictionary> {
    induce_synthetic_dictionary_with(index, src, tgt, &InduceOptions::default())
}

pub fn induce_synthetic_dictionary_with<T: Scalar>(
    index: &CslsIndex<T>,
    src: &EmbeddingMatrix<T>,
    tgt: &EmbeddingMatrix<T>,
    opts: &InduceOptions,
) -> Result<IndexedDictionary> {
    check_dims(src, tgt)?;
    index.check(src, tgt)?;
    let n = opts.max_rank.map_or(src.len(), |r| r.min(src.len()));
    let m = opts.max_rank.map_or(tgt.len(), |r| r.min(tgt.len()));
    if n == 0 || m == 0 {
        return Ok(IndexedDictionary::empty(src.len(), tgt.len()));
    }
    let forward = csls_argmax(src, tgt, &(0..n).collect::<Vec<_>>(), &index.r_src, &index.r_tgt, m)?;
    let backward = csls_argmax(tgt, src, &(0..m).collect::<Vec<_>>(), &index.r_tgt, &index.r_src, n)?;
    let (covered_src, covered_tgt): (HashSet<usize>, HashSet<usize>) = match &opts.exclude {
        Some(d) => (d.pairs().iter().map(|p| p.0).collect(), d.pairs().iter().map(|p| p.1).collect()),
        None => Default::default(),
    };
    let pairs = forward
        .iter()
        .enumerate()
        .filter(|&(i, &j)| backward[j] == i)
        .filter(|&(i, j)| !covered_src.contains(&i) && !covered_tgt.contains(j))
        .map(|(i, &j)| (i, j));
    IndexedDictionary::new(pairs, src.len(), tgt.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BliEntry {
    pub source: String,
    pub prediction: String,
    pub gold: Vec<String>,
    pub correct: bool,
    /// 1-based position of the source word in its embedding file.
    pub frequency_rank: usize,
}

/// Precision@1 of CSLS translation against a gold dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct BliReport {
    pub p_at_1: f64,
    pub evaluated_words: usize,
    pub oov_words: usize,
    pub per_word: Vec<BliEntry>,
}

impl BliReport {
    /// Records source words of the raw dictionary that could not be indexed.
    pub fn with_oov(mut self, oov_words: usize) -> Self {
        self.oov_words = oov_words;
        self
    }

    pub fn correct(&self) -> usize {
        self.per_word.iter().filter(|e| e.correct).count()
    }

    /// TSV: header, one row per source word, then a `#` summary line.
    pub fn write_tsv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "source\tprediction\tgold\tcorrect\tfrequency_rank")?;
        for e in &self.per_word {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                e.source,
                e.prediction,
                e.gold.join(","),
                u8::from(e.correct),
                e.frequency_rank
            )?;
        }
        writeln!(
            w,
            "# p_at_1={:.6}\tcorrect={}\tevaluated={}\toov={}",
            self.p_at_1,
            self.correct(),
            self.evaluated_words,
            self.oov_words
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_tsv(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }
}

/// Translates every distinct gold source word with CSLS; a prediction is
/// correct when it is any of that word's gold targets.
pub fn evaluate_bli<T: Scalar>(
    index: &CslsIndex<T>,
    src: &EmbeddingMatrix<T>,
    tgt: &EmbeddingMatrix<T>,
    gold: &IndexedDictionary,
) -> Result<BliReport> {
    if gold.src_vocab_size() != src.len() || gold.tgt_vocab_size() != tgt.len() {
        return Err(Error::VocabMismatch {
            src: src.len(),
            tgt: tgt.len(),
            other_src: gold.src_vocab_size(),
            other_tgt: gold.tgt_vocab_size(),
        });
    }
    let grouped = gold.targets_by_source();
    let queries: Vec<usize> = grouped.iter().map(|g| g.0).collect();
    let predictions = csls_translate(index, src, tgt, &queries)?;
    let per_word: Vec<BliEntry> = grouped
        .iter()
        .zip(&predictions)
        .map(|((i, targets), &pred)| BliEntry {
            source: src.vocab().word(*i).to_owned(),
            prediction: tgt.vocab().word(pred).to_owned(),
            gold: targets.iter().map(|&j| tgt.vocab().word(j).to_owned()).collect(),
            correct: targets.contains(&pred),
            frequency_rank: i + 1,
        })
        .collect();
    let evaluated = per_word.len();
    let correct = per_word.iter().filter(|e| e.correct).count();
    Ok(BliReport {
        p_at_1: if evaluated == 0 { 0.0 } else { correct as f64 / evaluated as f64 },
        evaluated_words: evaluated,
        oov_words: 0,
        per_word,
    })
}

/// Raw cosine nearest neighbor (no hubness correction), ties to lower index.
pub fn cosine_translate<T: Scalar>(
    src: &EmbeddingMatrix<T>,
    tgt: &EmbeddingMatrix<T>,
    queries: &[usize],
) -> Result<Vec<usize>> {
    check_dims(src, tgt)?;
    let zeros_q = vec![T::zero(); src.len()];
    let zeros_k = vec![T::zero(); tgt.len()];
    csls_argmax(src, tgt, queries, &zeros_q, &zeros_k, tgt.len())
}

/// How many queries pick each target as their cosine nearest neighbor.
pub fn hub_occurrence<T: Scalar>(src: &EmbeddingMatrix<T>, tgt: &EmbeddingMatrix<T>) -> Result<HashMap<usize, usize>> {
    let all: Vec<usize> = (0..src.len()).collect();
    let mut counts = HashMap::new();
    for j in cosine_translate(src, tgt, &all)? {
        *counts.entry(j).or_insert(0) += 1;
    }
    Ok(counts)
}
