pub mod analysis;
pub mod bench;
pub mod error;
pub mod filter;
pub mod graph;
pub mod loss;
pub mod model;
pub mod noise;
pub mod sqrt;

pub use error::{Error, Result};
