pub mod config;
pub mod data;
pub mod dd;
pub mod error;
pub mod fem;
pub mod metrics;
pub mod output;
pub mod problem;
pub mod reference;
pub mod roots;
pub mod tensor;
pub mod workflow;
pub mod yield_surface;

pub use error::{Error, Result};
