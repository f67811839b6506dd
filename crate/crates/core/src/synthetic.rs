//! Seeded synthetic data: Gaussian embeddings, random rotations and noisy
//! bilingual spaces with known gold translations.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dictionary::IndexedDictionary;
use crate::embeddings::{EmbeddingMatrix, Vocabulary};
use crate::projection::{apply_projection, LinearMap};
use crate::scalar::{norm, Scalar};

fn gaussian_vec<T: Scalar>(rng: &mut ChaCha8Rng, len: usize) -> Vec<T> {
    (0..len).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect()
}

fn words(prefix: &str, n: usize) -> Vocabulary {
    Vocabulary::new((0..n).map(|i| format!("{prefix}{i}")).collect()).expect("distinct generated words")
}

/// `n × d` standard normal entries, words `w0 … w{n-1}`.
pub fn gaussian_embeddings<T: Scalar>(n: usize, d: usize, seed: u64) -> EmbeddingMatrix<T> {
    gaussian_embeddings_named("w", n, d, seed)
}

pub fn gaussian_embeddings_named<T: Scalar>(prefix: &str, n: usize, d: usize, seed: u64) -> EmbeddingMatrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EmbeddingMatrix::new(words(prefix, n), gaussian_vec(&mut rng, n * d), d).expect("finite gaussian data")
}

/// Haar-distributed orthogonal matrix from the QR factorization of a
/// Gaussian matrix, with column signs fixed by `diag(R) > 0`.
pub fn random_orthogonal<T: Scalar>(d: usize, seed: u64) -> DMatrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_vec(d, d, gaussian_vec::<T>(&mut rng, d * d));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for c in 0..d {
        if r[(c, c)] < T::zero() {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

/// Pairs `(i, i)` for `i < n` over two size-`n` vocabularies.
pub fn identity_dict(n: usize) -> IndexedDictionary {
    IndexedDictionary::new((0..n).map(|i| (i, i)), n, n).expect("in-range identity pairs")
}

/// Parameters of a noisy-rotation bilingual space.
#[derive(Debug, Clone, Copy)]
pub struct BilingualConfig {
    pub words: usize,
    pub dim: usize,
    /// Standard deviation of the per-coordinate target noise, relative to
    /// the `1/√d` coordinate scale of a unit vector.
    pub noise: f64,
    pub train_pairs: usize,
    pub test_pairs: usize,
    pub seed: u64,
}

impl Default for BilingualConfig {
    fn default() -> Self {
        BilingualConfig {
            words: 2000,
            dim: 20,
            noise: 0.5,
            train_pairs: 200,
            test_pairs: 200,
            seed: 0,
        }
    }
}

/// Source word `s{i}` translates to target word `t{i}`; the target vector
/// is the rotated source vector plus Gaussian noise, both unit length.
#[derive(Debug, Clone)]
pub struct SyntheticBilingual<T: Scalar> {
    pub src: EmbeddingMatrix<T>,
    pub tgt: EmbeddingMatrix<T>,
    pub rotation: DMatrix<T>,
    pub train: IndexedDictionary,
    pub test: IndexedDictionary,
}

pub fn bilingual<T: Scalar>(cfg: &BilingualConfig) -> SyntheticBilingual<T> {
    assert!(cfg.train_pairs + cfg.test_pairs <= cfg.words, "not enough words for disjoint splits");
    let (n, d) = (cfg.words, cfg.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = gaussian_vec::<T>(&mut rng, n * d);
    normalize_rows(&mut x, d);
    let src = EmbeddingMatrix::new(words("s", n), x, d).expect("finite data");
    let rotation = random_orthogonal::<T>(d, rng.random());
    let rotated = apply_projection(&LinearMap::new(rotation.clone()), &src).expect("square rotation");
    let scale = T::lit(cfg.noise / (d as f64).sqrt());
    let mut z: Vec<T> = rotated
        .as_slice()
        .iter()
        .map(|&v| v + scale * T::lit(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    normalize_rows(&mut z, d);
    let tgt = EmbeddingMatrix::new(words("t", n), z, d).expect("finite data");

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let train = IndexedDictionary::new(order[..cfg.train_pairs].iter().map(|&i| (i, i)), n, n).expect("in range");
    let test = IndexedDictionary::new(
        order[cfg.train_pairs..cfg.train_pairs + cfg.test_pairs].iter().map(|&i| (i, i)),
        n,
        n,
    )
    .expect("in range");
    SyntheticBilingual {
        src,
        tgt,
        rotation,
        train,
        test,
    }
}

fn normalize_rows<T: Scalar>(data: &mut [T], d: usize) {
    for row in data.chunks_exact_mut(d) {
        let n = norm(row);
        row.iter_mut().for_each(|v| *v /= n);
    }
}
