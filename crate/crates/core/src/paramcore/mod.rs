//! Flat-vector arithmetic, classifiers with analytic gradients, and clipping.

mod checkpoint;
mod model;
mod vector;

pub use checkpoint::{read_checkpoint, write_checkpoint, HEADER_LEN as CHECKPOINT_HEADER_LEN};
pub use model::{cross_entropy, Classifier, LinearModel, MlpModel, Model, Sample};
pub use vector::{clip_grad, reg_grad, sign_of, sign_vec, ClipConfig, ParamVector, SignVector};

pub(crate) use vector::{check_finite, check_len, norm2};
