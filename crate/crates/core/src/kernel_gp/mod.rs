//! Kernels, incremental Gaussian-process posterior inference and the
//! confidence-width schedule used to turn the posterior into optimistic
//! reward estimates.

mod kernel;
pub mod linalg;
mod posterior;
mod schedule;

pub use kernel::{gram_matrix, KernelFactor, KernelSpec, MaternNu, Selector};
pub use posterior::{GpPosterior, Prediction};
pub use schedule::ConfidenceSchedule;
