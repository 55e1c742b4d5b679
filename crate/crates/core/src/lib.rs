pub mod config;
pub mod error;
pub mod mpm;
pub mod observations;
pub mod press;
pub mod rl;
pub mod scene;
pub mod tasks;

pub use error::{Error, Result};
