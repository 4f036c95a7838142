//! Truncated power series over GF(2), matrices of them, and low-rank update kernels.

mod clmul;
mod matrix;
mod series;
mod update;

pub use matrix::{series_inverse_monomial, PolyMatrix};
pub use series::{min_degree_term, TruncPoly};
pub use update::{
    apply_change, decompose_change, det_ratio, det_update, woodbury_entry, woodbury_in_place, woodbury_update, LowRankChange,
    DEFAULT_BATCH_CAP,
};
