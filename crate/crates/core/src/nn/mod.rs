//! Compact convolutional channel estimator: layers, network, optimizer,
//! training loop and weight files.

mod adam;
pub mod layers;
mod net;
mod real;
mod tensor;
mod train;

pub use adam::{learning_rate, Adam};
pub use net::{Architecture, Net, Workspace};
pub use real::Real;
pub use tensor::{Tensor, TensorFile, MAGIC, VERSION};
pub use train::{rms_magnitude, train, EpochStats, TrainConfig, TrainingSet};

pub(crate) use tensor::{write_atomic, Reader};

/// Weight files use the generic named-tensor container.
pub type ModelWeights = TensorFile;
