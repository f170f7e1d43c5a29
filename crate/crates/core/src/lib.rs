pub mod complexes;
pub mod cycles;
pub mod error;
pub mod modcat;
pub mod relk0;
pub mod rings;

pub use error::{Error, Result};
