pub mod cli;
pub mod clt;
pub mod embedding;
pub mod entropy;
pub mod error;
pub mod frechet;
pub mod lp;
pub mod measure;
pub mod metric;
pub mod modified;
pub mod par;
pub mod report;
pub mod rng;
pub mod simplex;
pub mod stats;

pub use error::{Error, Result};
pub use metric::{FiniteMetricSpace, Metric};
pub use par::Exec;
