pub mod error;
pub mod glm;
pub mod hmm;
pub mod io;
pub mod nb;
pub mod series;
pub mod simulate;
pub mod baseline;
pub mod benchmark;
pub mod cli;
pub mod eval;
pub mod pipeline;

pub use error::{Error, Result};
