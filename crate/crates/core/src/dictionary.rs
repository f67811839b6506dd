//! Bilingual dictionaries in MUSE text format and their index form.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::embeddings::{lowercase_word, Vocabulary};
use crate::error::{Error, Result};

/// Raw `(source, target)` surface-form pairs in file order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WordPairList {
    pub pairs: Vec<(String, String)>,
}

impl WordPairList {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Lowercases both sides, matching the embedding loader's folding.
    pub fn lowercased(&self) -> WordPairList {
        WordPairList {
            pairs: self
                .pairs
                .iter()
                .map(|(s, t)| (lowercase_word(s), lowercase_word(t)))
                .collect(),
        }
    }
}

impl<S: Into<String>, T: Into<String>> FromIterator<(S, T)> for WordPairList {
    fn from_iter<I: IntoIterator<Item = (S, T)>>(iter: I) -> Self {
        WordPairList {
            pairs: iter.into_iter().map(|(s, t)| (s.into(), t.into())).collect(),
        }
    }
}

/// Deduplicated `(source index, target index)` pairs over a fixed pair of
/// vocabularies. A source index may appear with several targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedDictionary {
    pairs: Vec<(usize, usize)>,
    src_vocab_size: usize,
    tgt_vocab_size: usize,
}

impl IndexedDictionary {
    /// Validates bounds and drops repeated pairs, keeping first occurrences.
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>, src_vocab_size: usize, tgt_vocab_size: usize) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (i, j) in pairs {
            if i >= src_vocab_size {
                return Err(Error::IndexOutOfBounds {
                    index: i,
                    len: src_vocab_size,
                });
            }
            if j >= tgt_vocab_size {
                return Err(Error::IndexOutOfBounds {
                    index: j,
                    len: tgt_vocab_size,
                });
            }
            if seen.insert((i, j)) {
                out.push((i, j));
            }
        }
        Ok(IndexedDictionary {
            pairs: out,
            src_vocab_size,
            tgt_vocab_size,
        })
    }

    pub fn empty(src_vocab_size: usize, tgt_vocab_size: usize) -> Self {
        IndexedDictionary {
            pairs: Vec::new(),
            src_vocab_size,
            tgt_vocab_size,
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn src_vocab_size(&self) -> usize {
        self.src_vocab_size
    }

    pub fn tgt_vocab_size(&self) -> usize {
        self.tgt_vocab_size
    }

    /// Distinct source indices in order of first appearance.
    pub fn sources(&self) -> Vec<usize> {
        let mut seen = HashSet::new();
        self.pairs.iter().map(|&(i, _)| i).filter(|i| seen.insert(*i)).collect()
    }

    /// Gold target set per source index, in order of first appearance.
    pub fn targets_by_source(&self) -> Vec<(usize, Vec<usize>)> {
        let mut order: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut slot = std::collections::HashMap::new();
        for &(i, j) in &self.pairs {
            let k = *slot.entry(i).or_insert_with(|| {
                order.push((i, Vec::new()));
                order.len() - 1
            });
            order[k].1.push(j);
        }
        order
    }

    /// True when no source maps to two targets and no target to two sources.
    pub fn is_injective(&self) -> bool {
        let mut s = HashSet::new();
        let mut t = HashSet::new();
        self.pairs.iter().all(|&(i, j)| s.insert(i) && t.insert(j))
    }

    /// Converts back to surface forms.
    pub fn to_words(&self, src: &Vocabulary, tgt: &Vocabulary) -> WordPairList {
        self.pairs
            .iter()
            .map(|&(i, j)| (src.word(i).to_owned(), tgt.word(j).to_owned()))
            .collect()
    }
}

/// Reads a MUSE dictionary: one whitespace-separated pair per non-empty line.
pub fn parse_dictionary(path: impl AsRef<Path>) -> Result<WordPairList> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dictionary(BufReader::new(file), path)
}

pub fn read_dictionary<R: BufRead>(reader: R, origin: &Path) -> Result<WordPairList> {
    let mut pairs = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => continue,
            [s, t] => pairs.push(((*s).to_owned(), (*t).to_owned())),
            _ => {
                return Err(Error::parse(
                    origin,
                    n + 1,
                    format!("expected 2 tokens, found {}", tokens.len()),
                ))
            }
        }
    }
    Ok(WordPairList { pairs })
}

/// Writes pairs tab-separated, one per line.
pub fn save_dictionary(pairs: &WordPairList, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (s, t) in &pairs.pairs {
        writeln!(w, "{s}\t{t}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Maps surface pairs to indices. Pairs with an out-of-vocabulary word and
/// repeated pairs are dropped; the second value counts them.
pub fn index_dictionary(raw: &WordPairList, src: &Vocabulary, tgt: &Vocabulary) -> (IndexedDictionary, usize) {
    let mut seen = HashSet::new();
    let mut pairs = Vec::new();
    let mut dropped = 0;
    for (s, t) in &raw.pairs {
        match (src.get(s), tgt.get(t)) {
            (Some(i), Some(j)) if seen.insert((i, j)) => pairs.push((i, j)),
            _ => dropped += 1,
        }
    }
    let dict = IndexedDictionary {
        pairs,
        src_vocab_size: src.len(),
        tgt_vocab_size: tgt.len(),
    };
    (dict, dropped)
}

/// Number of distinct source words in `raw` with no in-vocabulary pair.
pub fn count_oov_sources(raw: &WordPairList, src: &Vocabulary, tgt: &Vocabulary) -> usize {
    let mut all = HashSet::new();
    let mut covered = HashSet::new();
    for (s, t) in &raw.pairs {
        all.insert(s.as_str());
        if src.get(s).is_some() && tgt.get(t).is_some() {
            covered.insert(s.as_str());
        }
    }
    all.len() - covered.len()
}

/// Set union: every pair of `a`, then the pairs of `b` not already present.
pub fn merge_dictionaries(a: &IndexedDictionary, b: &IndexedDictionary) -> Result<IndexedDictionary> {
    if a.src_vocab_size != b.src_vocab_size || a.tgt_vocab_size != b.tgt_vocab_size {
        return Err(Error::VocabMismatch {
            src: a.src_vocab_size,
            tgt: a.tgt_vocab_size,
            other_src: b.src_vocab_size,
            other_tgt: b.tgt_vocab_size,
        });
    }
    let mut seen: HashSet<(usize, usize)> = a.pairs.iter().copied().collect();
    let mut pairs = a.pairs.clone();
    pairs.extend(b.pairs.iter().copied().filter(|p| seen.insert(*p)));
    Ok(IndexedDictionary {
        pairs,
        src_vocab_size: a.src_vocab_size,
        tgt_vocab_size: a.tgt_vocab_size,
    })
}
