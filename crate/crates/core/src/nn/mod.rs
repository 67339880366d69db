//! Layer primitives, each with an explicit forward and backward pass.
//!
//! Forward functions return their output together with a cache holding what
//! the backward pass needs. Backward functions take the cache by value, so a
//! cache can feed at most one backward call.

mod activation;
mod conv;
mod dense;
pub mod gradcheck;
mod loss;
mod pool;

pub use activation::{dropout_backward, dropout_forward, relu_backward, relu_forward, DropoutCache, ReluCache};
pub use conv::{conv2d_backward, conv2d_forward, conv_output_len, ConvCache, ConvGrads, ConvParams};
pub use dense::{dense_backward, dense_forward, DenseCache, DenseGrads};
pub use gradcheck::{gradcheck, GradCheckReport, LayerProbe};
pub use loss::{
    cross_entropy_loss, one_hot, one_hot_labels, softmax, softmax_cross_entropy, softmax_xent_backward, LOG_EPSILON,
};
pub use pool::{maxpool2d_backward, maxpool2d_forward, PoolCache, PoolSpec};
