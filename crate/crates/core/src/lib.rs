pub mod error;
pub mod brst;
pub mod cartan;
pub mod dressing;
pub mod dsl;
pub mod jet;
pub mod riemann;
pub mod sample;
pub mod suite;
pub mod tractor;

pub use error::{Error, ParseError, ParseErrorKind, Result};
