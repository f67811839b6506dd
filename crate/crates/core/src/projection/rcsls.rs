//! Relaxed CSLS refinement of a linear map.
//!
//! For a pair `(i, j)` and map `W` the relaxed loss is
//!
//! ```text
//! −2 (W x_i)ᵀ z_j + 1/k Σ_{z ∈ N_T(W x_i)} (W x_i)ᵀ z + 1/k Σ_{x ∈ N_S(z_j)} (W x)ᵀ z_j
//! ```
//!
//! where `N_T` are the `k` targets with the largest score against `W x_i`
//! and `N_S` the `k` projected sources with the largest score against
//! `z_j`. Inputs are expected to be unit length, so scores are cosines when
//! `W` is orthogonal. With neighborhoods held fixed the loss is linear in
//! `W`, which gives the exact (sub)gradient used below.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_dictionary, LinearMap};
use crate::dictionary::IndexedDictionary;
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::neighbors::topk_dot;
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct RcslsConfig {
    pub k_neighbors: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// `None` means full batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    /// Restrict neighborhood search to the most frequent words of each side.
    pub neighborhood_cap: Option<usize>,
}

impl Default for RcslsConfig {
    fn default() -> Self {
        RcslsConfig {
            k_neighbors: 10,
            epochs: 10,
            learning_rate: 1.0,
            batch_size: None,
            seed: 0,
            neighborhood_cap: None,
        }
    }
}

/// Frozen neighborhoods for one evaluation, one entry per dictionary pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RcslsNeighborhoods {
    /// Target neighbors of each projected dictionary source.
    pub of_source: Vec<Vec<usize>>,
    /// Source neighbors of each dictionary target, scored in projected space.
    pub of_target: Vec<Vec<usize>>,
}

impl RcslsNeighborhoods {
    /// Nearest neighbors under the current map.
    pub fn compute<T: Scalar>(
        w: &LinearMap<T>,
        src: &EmbeddingMatrix<T>,
        tgt: &EmbeddingMatrix<T>,
        dict: &IndexedDictionary,
        cfg: &RcslsConfig,
    ) -> Result<Self> {
        check_inputs(w, src, tgt, dict)?;
        let d_in = src.dim();
        let d_out = tgt.dim();
        let n_src = cfg.neighborhood_cap.map_or(src.len(), |c| c.min(src.len()));
        let n_tgt = cfg.neighborhood_cap.map_or(tgt.len(), |c| c.min(tgt.len()));
        let k = cfg.k_neighbors;
        if k == 0 || k >= n_src || k >= n_tgt {
            return Err(Error::InvalidK {
                k,
                max: n_src.min(n_tgt).saturating_sub(1),
            });
        }
        let wr = w.row_major();

        let mut xs = Vec::with_capacity(dict.len() * d_in);
        let mut zs = Vec::with_capacity(dict.len() * d_out);
        for &(i, j) in dict.pairs() {
            xs.extend_from_slice(src.row(i));
            zs.extend_from_slice(tgt.row(j));
        }
        let mut projected_pairs = vec![T::zero(); dict.len() * d_out];
        T::gemm_nt(dict.len(), d_out, d_in, &xs, &wr, &mut projected_pairs);
        let mut projected_src = vec![T::zero(); n_src * d_out];
        T::gemm_nt(n_src, d_out, d_in, &src.as_slice()[..n_src * d_in], &wr, &mut projected_src);

        let strip = |v: Vec<Vec<(usize, T)>>| v.into_iter().map(|t| t.into_iter().map(|p| p.0).collect()).collect();
        Ok(RcslsNeighborhoods {
            of_source: strip(topk_dot(&projected_pairs, &tgt.as_slice()[..n_tgt * d_out], d_out, k)),
            of_target: strip(topk_dot(&zs, &projected_src, d_out, k)),
        })
    }
}

fn check_inputs<T: Scalar>(
    w: &LinearMap<T>,
    src: &EmbeddingMatrix<T>,
    tgt: &EmbeddingMatrix<T>,
    dict: &IndexedDictionary,
) -> Result<()> {
    check_dictionary(src, tgt, dict)?;
    if w.offset().is_some() {
        return Err(Error::InvalidArgument("RCSLS does not support centered maps".into()));
    }
    if w.input_dim() != src.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.input_dim(),
            got: src.dim(),
        });
    }
    if w.output_dim() != tgt.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.output_dim(),
            got: tgt.dim(),
        });
    }
    Ok(())
}

/// Mean relaxed loss over the dictionary and its gradient with respect to
/// `W`, for the given frozen neighborhoods.
pub fn rcsls_objective<T: Scalar>(
    w: &DMatrix<T>,
    src: &EmbeddingMatrix<T>,
    tgt: &EmbeddingMatrix<T>,
    dict: &IndexedDictionary,
    neighborhoods: &RcslsNeighborhoods,
) -> (T, DMatrix<T>) {
    let (d_out, d_in) = w.shape();
    let p = dict.len();
    let inv_k = |len: usize| T::one() / T::from_usize_lossy(len);
    let two = T::lit(2.0);

    // loss and gradient are sums of rank-one terms a_r b_rᵀ
    let mut left = DMatrix::<T>::zeros(d_out, 2 * p);
    let mut right = DMatrix::<T>::zeros(d_in, 2 * p);
    let mut loss = T::zero();
    for (r, &(i, j)) in dict.pairs().iter().enumerate() {
        let x = nalgebra::DVectorView::from_slice(src.row(i), d_in);
        let z = tgt.row(j);
        let wx = w * x;

        let nt = &neighborhoods.of_source[r];
        let mut target_mean = vec![T::zero(); d_out];
        for &t in nt {
            target_mean.iter_mut().zip(tgt.row(t)).for_each(|(m, &v)| *m += v);
        }
        target_mean.iter_mut().for_each(|m| *m *= inv_k(nt.len()));

        let ns = &neighborhoods.of_target[r];
        let mut source_mean = vec![T::zero(); d_in];
        for &s in ns {
            source_mean.iter_mut().zip(src.row(s)).for_each(|(m, &v)| *m += v);
        }
        source_mean.iter_mut().for_each(|m| *m *= inv_k(ns.len()));

        let wx = wx.as_slice();
        let w_source_mean = w * nalgebra::DVector::from_column_slice(&source_mean);
        loss += -two * dot(wx, z) + dot(wx, &target_mean) + dot(w_source_mean.as_slice(), z);

        for c in 0..d_out {
            left[(c, 2 * r)] = target_mean[c] - two * z[c];
            left[(c, 2 * r + 1)] = z[c];
        }
        for c in 0..d_in {
            right[(c, 2 * r)] = x[c];
            right[(c, 2 * r + 1)] = source_mean[c];
        }
    }
    let scale = inv_k(p);
    (loss * scale, left * right.transpose() * scale)
}

/// Loss and gradient with neighborhoods computed from `w` itself.
pub fn rcsls_loss_and_grad<T: Scalar>(
    w: &LinearMap<T>,
    src: &EmbeddingMatrix<T>,
    tgt: &EmbeddingMatrix<T>,
    dict: &IndexedDictionary,
    cfg: &RcslsConfig,
) -> Result<(T, DMatrix<T>)> {
    let nb = RcslsNeighborhoods::compute(w, src, tgt, dict, cfg)?;
    Ok(rcsls_objective(w.matrix(), src, tgt, dict, &nb))
}

/// Gradient descent on the relaxed loss starting from `init`.
///
/// Neighborhoods are recomputed after every step. A step that does not
/// lower the full-dictionary loss is rejected and the learning rate halved,
/// so the returned map never has a higher loss than `init`.
pub fn fit_rcsls<T: Scalar>(
    src: &EmbeddingMatrix<T>,
    tgt: &EmbeddingMatrix<T>,
    dict: &IndexedDictionary,
    cfg: &RcslsConfig,
    init: &LinearMap<T>,
) -> Result<LinearMap<T>> {
    if cfg.epochs == 0 {
        return Ok(init.clone());
    }
    if cfg.learning_rate.is_nan() || cfg.learning_rate <= 0.0 {
        return Err(Error::InvalidArgument("learning rate must be positive".into()));
    }
    let mut current = LinearMap::new(init.matrix().clone());
    let (mut loss, mut grad) = rcsls_loss_and_grad(&current, src, tgt, dict, cfg)?;
    let mut lr = T::lit(cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for epoch in 0..cfg.epochs {
        let step = match cfg.batch_size {
            Some(b) if b < dict.len() => {
                let picked = sample(&mut rng, dict.len(), b.max(1)).into_vec();
                let batch = IndexedDictionary::new(
                    picked.into_iter().map(|r| dict.pairs()[r]),
                    dict.src_vocab_size(),
                    dict.tgt_vocab_size(),
                )?;
                rcsls_loss_and_grad(&current, src, tgt, &batch, cfg)?.1
            }
            _ => grad.clone(),
        };
        let candidate = LinearMap::new(current.matrix() - step * lr);
        let (next_loss, next_grad) = rcsls_loss_and_grad(&candidate, src, tgt, dict, cfg)?;
        if next_loss < loss {
            log::debug!("rcsls epoch {epoch}: loss {loss} -> {next_loss}");
            current = candidate;
            loss = next_loss;
            grad = next_grad;
        } else {
            lr /= T::lit(2.0);
            log::debug!("rcsls epoch {epoch}: rejected step, learning rate now {lr}");
        }
    }
    Ok(current)
}
