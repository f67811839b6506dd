//! Supervised cross-lingual word embedding (CLWE) toolkit.
//!
//! The crate fits linear maps between two monolingual embedding spaces from
//! a training dictionary (orthogonal Procrustes, least squares, CCA or
//! RCSLS), retrofits the aligned spaces to the dictionary, optionally adds a
//! synthetic dictionary of mutual CSLS nearest neighbors, and scores
//! bilingual lexicon induction (BLI) precision@1.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the pipeline uses.
//!
//! ```
//! use clwe::{synthetic, fit_procrustes, apply_projection, build_csls_index, evaluate_bli};
//!
//! let data = synthetic::bilingual::<f64>(&synthetic::BilingualConfig {
//!     words: 300,
//!     dim: 8,
//!     noise: 0.1,
//!     train_pairs: 100,
//!     test_pairs: 50,
//!     seed: 1,
//! });
//! let w = fit_procrustes(&data.src, &data.tgt, &data.train).unwrap();
//! let projected = apply_projection(&w, &data.src).unwrap();
//! let index = build_csls_index(&projected, &data.tgt, 10).unwrap();
//! let report = evaluate_bli(&index, &projected, &data.tgt, &data.test).unwrap();
//! assert!(report.p_at_1 > 0.5);
//! ```

pub mod dictionary;
pub mod embeddings;
pub mod error;
pub mod neighbors;
pub mod pipeline;
pub mod projection;
pub mod retrofit;
pub mod scalar;
pub mod synthetic;

pub use dictionary::{
    count_oov_sources, index_dictionary, merge_dictionaries, parse_dictionary, save_dictionary, IndexedDictionary,
    WordPairList,
};
pub use embeddings::{iterative_normalize, load_embeddings, save_embeddings, unit_normalize, LoadOptions, Vocabulary};
pub use error::{Error, Result};
pub use neighbors::{
    build_csls_index, csls_translate, evaluate_bli, induce_synthetic_dictionary, topk_cosine, BliReport, InduceOptions,
};
pub use projection::{
    apply_projection, fit_cca, fit_least_squares, fit_procrustes, fit_rcsls, rcsls_loss_and_grad, RcslsConfig,
};
pub use retrofit::{retrofit, retrofit_combined, retrofit_objective, BetaScheme, RetrofitConfig};
pub use scalar::Scalar;

pub type EmbeddingMatrix = embeddings::EmbeddingMatrix<f64>;
pub type EmbeddingMatrix32 = embeddings::EmbeddingMatrix<f32>;
pub type LinearMap = projection::LinearMap<f64>;
pub type LinearMap32 = projection::LinearMap<f32>;
pub type AlignedEmbeddings = projection::AlignedEmbeddings<f64>;
pub type CslsIndex = neighbors::CslsIndex<f64>;
pub type RetrofitResult = retrofit::RetrofitResult<f64>;
pub type CcaFit = projection::CcaFit<f64>;
