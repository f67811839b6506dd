//! Retrofitting aligned embeddings to a bilingual dictionary.
//!
//! Minimizes
//!
//! ```text
//! L = α ‖X̂ − X′‖² + α ‖Ẑ − Z′‖² + Σ_{(i,j)∈D} β_ij ‖x̂_i − ẑ_j‖²
//! ```
//!
//! by exact block coordinate descent: each dictionary word is set to the
//! minimizer of `L` in that row with all other rows fixed. `L` is convex and
//! quadratic, so the objective never increases from one sweep to the next.
//! Words outside the dictionary keep their original vectors.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dictionary::{merge_dictionaries, IndexedDictionary};
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::projection::AlignedEmbeddings;
use crate::scalar::{squared_distance, Scalar};

/// How the pair weights `β_ij` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaScheme {
    /// `β_ij = 1 / max(deg(i), deg(j))`, where the degree of a word is its
    /// number of distinct dictionary partners. A word's pair weights sum to
    /// at most one, and to exactly one when its partners have no more
    /// partners than it does.
    InverseDegree,
    /// `β_ij = 1`.
    Uniform,
}

impl std::str::FromStr for BetaScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse-degree" => Ok(BetaScheme::InverseDegree),
            "uniform" => Ok(BetaScheme::Uniform),
            other => Err(Error::InvalidArgument(format!("unknown beta scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrofitConfig {
    pub alpha: f64,
    pub beta: BetaScheme,
    pub iterations: usize,
    /// Stop once no row moves by this much in a sweep. `None` uses
    /// `1e-5 ×` the mean row norm of the original embeddings.
    pub convergence_tol: Option<f64>,
    /// Multiplier on `β_ij` for pairs that come only from a synthetic
    /// dictionary in [`retrofit_combined`].
    pub synthetic_weight: f64,
}

impl Default for RetrofitConfig {
    fn default() -> Self {
        RetrofitConfig {
            alpha: 1.0,
            beta: BetaScheme::InverseDegree,
            iterations: 10,
            convergence_tol: None,
            synthetic_weight: 1.0,
        }
    }
}

impl RetrofitConfig {
    fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::InvalidArgument(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be at least 1".into()));
        }
        if self.synthetic_weight.is_nan() || self.synthetic_weight <= 0.0 {
            return Err(Error::InvalidArgument("synthetic weight must be positive".into()));
        }
        if let Some(tol) = self.convergence_tol {
            if tol.is_nan() || tol < 0.0 {
                return Err(Error::InvalidArgument("convergence tolerance must be non-negative".into()));
            }
        }
        Ok(())
    }
}

/// Objective value split into its anchor and dictionary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective<T> {
    pub total: T,
    pub anchor: T,
    pub dictionary: T,
}

#[derive(Debug, Clone)]
pub struct RetrofitResult<T: Scalar> {
    pub src: EmbeddingMatrix<T>,
    pub tgt: EmbeddingMatrix<T>,
    /// Entry 0 is the objective of the inputs, entry `s` the value after
    /// sweep `s`.
    pub objective_trace: Vec<Objective<T>>,
    pub sweeps_run: usize,
}

impl<T: Scalar> RetrofitResult<T> {
    /// `sweep, L, L_a, L_b` rows with a header.
    pub fn write_trace<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "sweep\tL\tL_a\tL_b")?;
        for (s, o) in self.objective_trace.iter().enumerate() {
            writeln!(w, "{s}\t{}\t{}\t{}", o.total, o.anchor, o.dictionary)?;
        }
        Ok(())
    }

    pub fn save_trace(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_trace(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy)]
struct Edge<T> {
    i: usize,
    j: usize,
    weight: T,
}

/// Weighted dictionary edges; `multiplier(r)` scales the weight of pair `r`.
fn edges<T: Scalar>(dict: &IndexedDictionary, scheme: BetaScheme, multiplier: impl Fn(usize) -> f64) -> Vec<Edge<T>> {
    let mut deg_src = vec![0usize; dict.src_vocab_size()];
    let mut deg_tgt = vec![0usize; dict.tgt_vocab_size()];
    for &(i, j) in dict.pairs() {
        deg_src[i] += 1;
        deg_tgt[j] += 1;
    }
    dict.pairs()
        .iter()
        .enumerate()
        .map(|(r, &(i, j))| {
            let beta = match scheme {
                BetaScheme::Uniform => 1.0,
                BetaScheme::InverseDegree => 1.0 / deg_src[i].max(deg_tgt[j]) as f64,
            };
            Edge {
                i,
                j,
                weight: T::lit(beta * multiplier(r)),
            }
        })
        .collect()
}

fn check_shapes<T: Scalar>(
    x_hat: &EmbeddingMatrix<T>,
    z_hat: &EmbeddingMatrix<T>,
    originals: &AlignedEmbeddings<T>,
    dict: &IndexedDictionary,
) -> Result<()> {
    let same = |a: &EmbeddingMatrix<T>, b: &EmbeddingMatrix<T>| a.len() == b.len() && a.dim() == b.dim();
    if !same(x_hat, &originals.src) || !same(z_hat, &originals.tgt) {
        return Err(Error::InvalidArgument("candidate and original embeddings differ in shape".into()));
    }
    if dict.src_vocab_size() != x_hat.len() || dict.tgt_vocab_size() != z_hat.len() {
        return Err(Error::VocabMismatch {
            src: x_hat.len(),
            tgt: z_hat.len(),
            other_src: dict.src_vocab_size(),
            other_tgt: dict.tgt_vocab_size(),
        });
    }
    Ok(())
}

fn objective_with<T: Scalar>(
    x_hat: &EmbeddingMatrix<T>,
    z_hat: &EmbeddingMatrix<T>,
    originals: &AlignedEmbeddings<T>,
    edges: &[Edge<T>],
    alpha: T,
) -> Objective<T> {
    let frob = |a: &EmbeddingMatrix<T>, b: &EmbeddingMatrix<T>| squared_distance(a.as_slice(), b.as_slice());
    let anchor = alpha * (frob(x_hat, &originals.src) + frob(z_hat, &originals.tgt));
    let dictionary = edges.iter().fold(T::zero(), |acc, e| {
        acc + e.weight * squared_distance(x_hat.row(e.i), z_hat.row(e.j))
    });
    Objective {
        total: anchor + dictionary,
        anchor,
        dictionary,
    }
}

/// `L`, `L_a` and `L_b` of a candidate `(X̂, Ẑ)` against the originals.
pub fn retrofit_objective<T: Scalar>(
    x_hat: &EmbeddingMatrix<T>,
    z_hat: &EmbeddingMatrix<T>,
    originals: &AlignedEmbeddings<T>,
    dict: &IndexedDictionary,
    cfg: &RetrofitConfig,
) -> Result<Objective<T>> {
    check_shapes(x_hat, z_hat, originals, dict)?;
    let e = edges(dict, cfg.beta, |_| 1.0);
    Ok(objective_with(x_hat, z_hat, originals, &e, T::lit(cfg.alpha)))
}

/// Retrofits both sides to `dict`.
pub fn retrofit<T: Scalar>(
    aligned: &AlignedEmbeddings<T>,
    dict: &IndexedDictionary,
    cfg: &RetrofitConfig,
) -> Result<RetrofitResult<T>> {
    cfg.validate()?;
    let e = edges(dict, cfg.beta, |_| 1.0);
    run(aligned, dict, e, cfg)
}

/// Retrofits to `train ∪ synthetic`, scaling the weight of synthetic-only
/// pairs by `cfg.synthetic_weight`.
pub fn retrofit_combined<T: Scalar>(
    aligned: &AlignedEmbeddings<T>,
    train: &IndexedDictionary,
    synthetic: &IndexedDictionary,
    cfg: &RetrofitConfig,
) -> Result<RetrofitResult<T>> {
    cfg.validate()?;
    let merged = merge_dictionaries(train, synthetic)?;
    let n_train = train.len();
    let e = edges(&merged, cfg.beta, |r| if r < n_train { 1.0 } else { cfg.synthetic_weight });
    run(aligned, &merged, e, cfg)
}

fn run<T: Scalar>(
    aligned: &AlignedEmbeddings<T>,
    dict: &IndexedDictionary,
    edges: Vec<Edge<T>>,
    cfg: &RetrofitConfig,
) -> Result<RetrofitResult<T>> {
    let AlignedEmbeddings { src, tgt } = aligned;
    check_shapes(src, tgt, aligned, dict)?;
    let alpha = T::lit(cfg.alpha);
    let mut x_hat = src.clone();
    let mut z_hat = tgt.clone();
    let mut trace = vec![objective_with(&x_hat, &z_hat, aligned, &edges, alpha)];
    if dict.is_empty() {
        log::warn!("retrofitting to an empty dictionary leaves the embeddings unchanged");
        return Ok(RetrofitResult {
            src: x_hat,
            tgt: z_hat,
            objective_trace: trace,
            sweeps_run: 0,
        });
    }

    let tol = match cfg.convergence_tol {
        Some(t) => T::lit(t),
        None => {
            let mean = (src.mean_row_norm() + tgt.mean_row_norm()) / T::lit(2.0);
            T::lit(1e-5) * mean
        }
    };

    // adjacency lists in ascending word order
    let mut by_src: Vec<Vec<(usize, T)>> = vec![Vec::new(); src.len()];
    let mut by_tgt: Vec<Vec<(usize, T)>> = vec![Vec::new(); tgt.len()];
    for e in &edges {
        by_src[e.i].push((e.j, e.weight));
        by_tgt[e.j].push((e.i, e.weight));
    }
    let src_words: Vec<usize> = {
        let set: HashSet<usize> = edges.iter().map(|e| e.i).collect();
        let mut v: Vec<usize> = set.into_iter().collect();
        v.sort_unstable();
        v
    };
    let tgt_words: Vec<usize> = {
        let set: HashSet<usize> = edges.iter().map(|e| e.j).collect();
        let mut v: Vec<usize> = set.into_iter().collect();
        v.sort_unstable();
        v
    };

    let dim = src.dim();
    let mut buf = vec![T::zero(); dim];
    let mut sweeps = 0;
    for _ in 0..cfg.iterations {
        let mut moved = T::zero();
        for &i in &src_words {
            update_row(&mut buf, src.row(i), &by_src[i], &z_hat, alpha);
            moved = moved.max(squared_distance(&buf, x_hat.row(i)));
            x_hat.row_mut(i).copy_from_slice(&buf);
        }
        for &j in &tgt_words {
            update_row(&mut buf, tgt.row(j), &by_tgt[j], &x_hat, alpha);
            moved = moved.max(squared_distance(&buf, z_hat.row(j)));
            z_hat.row_mut(j).copy_from_slice(&buf);
        }
        let moved = moved.sqrt();
        sweeps += 1;
        trace.push(objective_with(&x_hat, &z_hat, aligned, &edges, alpha));
        log::debug!("retrofit sweep {sweeps}: L = {}", trace[sweeps].total);
        if moved < tol {
            break;
        }
    }
    Ok(RetrofitResult {
        src: x_hat,
        tgt: z_hat,
        objective_trace: trace,
        sweeps_run: sweeps,
    })
}

/// Writes `(α·orig + Σ β·partner) / (α + Σ β)` into `out`.
fn update_row<T: Scalar>(out: &mut [T], orig: &[T], partners: &[(usize, T)], other: &EmbeddingMatrix<T>, alpha: T) {
    let mut denom = alpha;
    out.iter_mut().zip(orig).for_each(|(o, &v)| *o = alpha * v);
    for &(p, w) in partners {
        denom += w;
        out.iter_mut().zip(other.row(p)).for_each(|(o, &v)| *o += w * v);
    }
    out.iter_mut().for_each(|o| *o /= denom);
}
