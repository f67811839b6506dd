use nalgebra::SVD;

use super::{check_dictionary, paired_rows, LinearMap};
use crate::dictionary::IndexedDictionary;
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Unconstrained least squares `min_W Σ ‖W x_i − z_j‖²`.
///
/// Solved as `Wᵀ = X_D⁺ Z_D` through the SVD pseudo-inverse, so
/// rank-deficient systems get the minimum-norm solution.
pub fn fit_least_squares<T: Scalar>(
    src: &EmbeddingMatrix<T>,
    tgt: &EmbeddingMatrix<T>,
    dict: &IndexedDictionary,
) -> Result<LinearMap<T>> {
    check_dictionary(src, tgt, dict)?;
    let (x, z) = paired_rows(src, tgt, dict);
    let (p, d) = x.shape();
    let svd = SVD::new(x, true, true);
    let largest = svd.singular_values.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let eps = largest * T::from_usize_lossy(p.max(d)) * T::default_epsilon();
    let solution = svd.solve(&z, eps).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(LinearMap::new(solution.transpose()))
}
