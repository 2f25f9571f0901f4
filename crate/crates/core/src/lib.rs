pub mod error;
pub mod numeric;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{DenseTensor, ModeSplit, Scalar};
pub mod tt;
pub mod dmd;
pub mod graph;
pub mod swarm;
pub mod analysis;
pub mod experiments;
pub mod io;
