//! Penalized two-block partial least squares.
//!
//! One alternating algorithm covers four methods (PLS-SVD, PLS-W2A,
//! regularized CCA and PLS regression), each with optional lasso, group
//! or sparse-group penalties on either weight vector. Fits can run in
//! memory, over chunked on-disk datasets, or against a streaming
//! incremental SVD.
//!
//! ```
//! use plsforge::{fit, DenseMatrix, FitOptions, PenaltySpec, PlsMode};
//!
//! let x = DenseMatrix::from_row_slice(4, 2, &[1.0, 2.0, 2.0, 1.0, 3.0, 5.0, 4.0, 3.0]);
//! let y = DenseMatrix::from_row_slice(4, 1, &[1.0, 2.0, 4.0, 3.0]);
//! let model = fit(&x, &y, PlsMode::regression(), 2, &PenaltySpec::none(),
//!                 &PenaltySpec::none(), &FitOptions::default()).unwrap();
//! let yhat = plsforge::predict(&model, &x).unwrap();
//! assert_eq!(yhat.shape(), (4, 1));
//! ```

pub mod bigdata;
pub mod datagen;
mod error;
pub mod linalg;
pub mod penalty;
pub mod pls;

pub use error::{PlsError, Result};
pub use linalg::{DenseMatrix, SvdFactorization, SvdTriple, Vector};
pub use penalty::{GroupStructure, PenaltyKind, PenaltySpec};
pub use pls::{
    classify, classify_labels, encode_dummy, fit, fit_plsda, fit_products, fit_simpls, predict,
    regression_coefficients, Centering, CrossProducts, DummyResponse, Engine, FitOptions, PlsFit,
    PlsMode, Ridge,
};
pub use bigdata::{fit_bigdata, ChunkSource, IncrementalState, RowBlockPartition};
