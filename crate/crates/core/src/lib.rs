pub mod bigmath;
pub mod dimension;
pub mod entropy;
pub mod error;
pub mod factor;
pub mod fan;
pub mod lowering;
pub mod samples;
pub mod schema;
pub mod staged;
pub mod subset;
pub mod subshift;
pub mod symbolic;

pub use error::{Error, Result};
