//! Training and inference for pairwise conditional random fields whose
//! parameters are learned by a 1-slack structured SVM under selectable
//! submodularity constraint regimes.
//!
//! The regimes range from globally sign-restricted weights (submodular for
//! every possible nonnegative input) to constraints enforced only on the
//! feature vectors observed in the data ("probably submodular"), where
//! out-of-sample submodularity holds with high probability and test-time
//! violations are repaired by truncation. Inference is an exact graph cut
//! for binary labels and swap moves for more.

pub mod cone;
pub mod constraints;
mod dense;
pub mod error;
pub mod inference;
pub mod io;
pub mod loss;
mod maxflow;
pub mod model;
pub mod multilabel;
pub mod qp;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use model::{GraphInstance, LabelSet, Labeling, ModelDims, WeightVector};
