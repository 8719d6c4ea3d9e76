//! Training-data subset selection and filter-then-select active learning.
//!
//! * [`kernel`] builds shifted-cosine similarity and Euclidean distance
//!   kernels, optionally sparsified to a nearest-neighbour graph.
//! * [`objectives`] defines Facility-Location and Disparity-Min with
//!   incremental state; [`optimizer`] maximizes them under a cardinality budget.
//! * [`models`] provides kNN and multinomial logistic regression.
//! * [`active`] implements uncertainty filtering and the batch active-learning
//!   loop; [`harness`] runs the subset-size sweeps and selector comparisons.

pub mod active;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod models;
pub mod objectives;
pub mod optimizer;

pub use error::{Error, Result};
