//! Scandiction: joint scanning and prediction of two-dimensional data arrays.
//!
//! A *scandictor* is a pair of a scanner, which picks the next unvisited site
//! of an array based on the values seen so far, and a predictor, which guesses
//! the value at that site before it is revealed. This crate provides
//!
//! - grids, rectangles and the block partition used by block-wise scandictors ([`grid`]),
//! - data-independent scanners (raster family, Hilbert, odds-then-evens),
//!   finite-state scanner machines, decision-tree scanners and block-wise
//!   composition ([`scan`]),
//! - Bayes-optimal and batch-optimal Markov predictors plus the cumulative-loss
//!   driver ([`predict`]),
//! - loss functions, Bayes envelopes and the minimax affine approximation of
//!   an envelope by binary entropy ([`loss`]),
//! - the block-wise exponential-weighting universal scandictor and its regret
//!   accounting ([`universal`]),
//! - seeded random-field generators ([`fields`]),
//! - empirical distributions, conditional entropies and LZ78 compressibility
//!   ([`entropy`]),
//! - reproducible experiments that emit CSV ([`experiments`]).
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod entropy;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod grid;
pub mod loss;
pub mod predict;
pub mod rng;
pub mod scan;
pub mod universal;

pub use error::{Error, Result};
pub use grid::{Alphabet, BlockId, BlockLayout, DataArray, Rect, Site};
pub use loss::{AffineApprox, Loss};
pub use predict::{History, MarkovTable, Predictor};
pub use scan::{ScanKind, ScanSession, ScanTrajectory, Scanner};
