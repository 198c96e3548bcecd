pub mod bench;
pub mod channel;
pub mod codec;
pub mod decoder;
pub mod error;
pub mod infometrics;
pub mod metalearn;
pub mod rng;
pub mod taskdist;
pub mod tensor;

pub use error::{Error, Result};
