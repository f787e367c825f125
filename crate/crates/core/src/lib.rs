pub mod diophantine;
pub mod duality;
pub mod ehm;
pub mod eigen;
pub mod cli;
pub mod cocycle;
pub mod error;
pub mod operator;
pub mod reducibility;
pub mod symbol;

pub use error::{Error, Result};
