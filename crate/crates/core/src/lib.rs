//! Computable metric spaces, represented spaces, and Borel codes over
//! Type-2 names.

pub mod borel_codes;
pub mod cli;
pub mod codec;
pub mod completion;
pub mod constructions;
pub mod error;
pub mod fuel;
pub mod functions;
pub mod metric;
pub mod names;
pub mod open_sets;
pub mod progress;
pub mod rational;
pub mod sierpinski;
pub mod vm;

pub use error::{Error, Result};
pub use fuel::Fuel;
pub use names::{BaireName, Stream};
