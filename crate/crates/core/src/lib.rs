//! Static detection of train/test data leakage in data-frame programs and
//! Jupyter notebooks.
//!
//! The analysis tracks, for every data-frame variable, which rows of which
//! input files it may depend on and whether a whole-frame transformation
//! (normalization) has correlated its rows. Training and testing data must
//! come from disjoint, untainted sources.

pub mod domain;
pub mod engine;
pub mod interp;
pub mod lang;
pub mod notebook;
pub mod oracle;
pub mod report;
