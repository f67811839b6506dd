use nalgebra::{DMatrix, DVector, SVD};

use super::{check_dictionary, paired_rows, LinearMap};
use crate::dictionary::IndexedDictionary;
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Ridge added to a within-language covariance found to be singular.
pub const CCA_RIDGE: f64 = 1e-8;

/// Projections of both languages onto their leading canonical directions.
#[derive(Debug, Clone)]
pub struct CcaFit<T: Scalar> {
    pub src_map: LinearMap<T>,
    pub tgt_map: LinearMap<T>,
    /// Canonical correlations, descending, one per kept direction.
    pub correlations: Vec<T>,
}

/// Canonical correlation analysis over dictionary pairs.
///
/// Both sides are centered on their dictionary-row means, whitened with
/// `C^{-1/2}`, and the whitened cross-covariance is decomposed by SVD. The
/// first `⌈dim_ratio · min(d_src, d_tgt)⌉` directions are kept, so the
/// canonical variates have unit variance over the dictionary rows.
pub fn fit_cca<T: Scalar>(
    src: &EmbeddingMatrix<T>,
    tgt: &EmbeddingMatrix<T>,
    dict: &IndexedDictionary,
    dim_ratio: f64,
) -> Result<CcaFit<T>> {
    if !(dim_ratio > 0.0 && dim_ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!("dim_ratio {dim_ratio} not in (0, 1]")));
    }
    check_dictionary(src, tgt, dict)?;
    let p = dict.len();
    let max_dim = src.dim().max(tgt.dim());
    if p <= max_dim {
        return Err(Error::InvalidArgument(format!(
            "CCA needs more dictionary pairs ({p}) than dimensions ({max_dim})"
        )));
    }
    let (mut x, mut z) = paired_rows(src, tgt, dict);
    let mu_x = column_mean(&x);
    let mu_z = column_mean(&z);
    subtract_row(&mut x, &mu_x);
    subtract_row(&mut z, &mu_z);

    let denom = T::from_usize_lossy(p - 1);
    let cxx = x.transpose() * &x / denom;
    let czz = z.transpose() * &z / denom;
    let cxz = x.transpose() * &z / denom;
    let kx = inverse_sqrt(cxx, "source")?;
    let kz = inverse_sqrt(czz, "target")?;

    let whitened = &kx * cxz * &kz;
    let svd = SVD::new(whitened, true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("SVD did not return singular vectors".into())),
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("finite singular values")
    });
    let keep = ((dim_ratio * src.dim().min(tgt.dim()) as f64).ceil() as usize).clamp(1, order.len());
    let order = &order[..keep];

    let u_keep = DMatrix::from_fn(u.nrows(), keep, |r, c| u[(r, order[c])]);
    let v_keep = DMatrix::from_fn(v_t.ncols(), keep, |r, c| v_t[(order[c], r)]);
    let a = kx * u_keep;
    let b = kz * v_keep;
    let correlations = order.iter().map(|&k| svd.singular_values[k]).collect();

    Ok(CcaFit {
        src_map: LinearMap::new(a.transpose()).with_offset(mu_x)?,
        tgt_map: LinearMap::new(b.transpose()).with_offset(mu_z)?,
        correlations,
    })
}

fn column_mean<T: Scalar>(m: &DMatrix<T>) -> DVector<T> {
    let n = T::from_usize_lossy(m.nrows());
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

fn subtract_row<T: Scalar>(m: &mut DMatrix<T>, mu: &DVector<T>) {
    for (mut col, &v) in m.column_iter_mut().zip(mu.iter()) {
        col.add_scalar_mut(-v);
    }
}

/// Symmetric `C^{-1/2}`, adding a ridge when `C` is numerically singular.
fn inverse_sqrt<T: Scalar>(mut c: DMatrix<T>, side: &str) -> Result<DMatrix<T>> {
    let eig = c.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let min = eig.eigenvalues.iter().copied().fold(max, |a, b| a.min(b));
    let eig = if min <= max * T::lit(1e-12) {
        log::warn!("{side} covariance is singular (min eigenvalue {min}), adding ridge {CCA_RIDGE}");
        for i in 0..c.nrows() {
            c[(i, i)] += T::lit(CCA_RIDGE);
        }
        c.symmetric_eigen()
    } else {
        eig
    };
    if eig.eigenvalues.iter().any(|&l| l <= T::zero()) {
        return Err(Error::Numerical(format!("{side} covariance is not positive definite")));
    }
    let scale = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| T::one() / l.sqrt()));
    Ok(&eig.eigenvectors * scale * eig.eigenvectors.transpose())
}
