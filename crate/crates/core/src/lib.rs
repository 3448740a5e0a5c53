//! Statement classification and state-of-mind tracking for time-stamped quotes.

pub mod corpus;
pub mod eval;
pub mod featurize;
pub mod reduce;
pub mod svm;
pub mod tracker;
pub mod report;
