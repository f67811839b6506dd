use nalgebra::SVD;

use super::{check_dictionary, paired_rows, LinearMap};
use crate::dictionary::IndexedDictionary;
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Orthogonal Procrustes: the rotation `W` minimizing `Σ ‖W x_i − z_j‖²`
/// over dictionary pairs.
///
/// With the cross-covariance `M = Σ z_j x_iᵀ = U Σ Vᵀ` the minimizer is
/// `W = U Vᵀ`. When singular values repeat the factorization is not unique
/// but every choice attains the same objective.
pub fn fit_procrustes<T: Scalar>(
    src: &EmbeddingMatrix<T>,
    tgt: &EmbeddingMatrix<T>,
    dict: &IndexedDictionary,
) -> Result<LinearMap<T>> {
    if src.dim() != tgt.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            got: tgt.dim(),
        });
    }
    check_dictionary(src, tgt, dict)?;
    let (x, z) = paired_rows(src, tgt, dict);
    let cross = z.transpose() * x;
    let svd = SVD::new(cross, true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("SVD did not return singular vectors".into())),
    };
    LinearMap::orthogonal(u * v_t).map_err(|_| Error::Numerical("Procrustes SVD lost orthogonality".into()))
}
