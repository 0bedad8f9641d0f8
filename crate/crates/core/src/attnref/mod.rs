//! Forward-pass reference for the per-task channel/spatial attention block,
//! the cross-task dependence gate and the multi-task losses.
//!
//! Everything is `f64` and single-threaded; shapes are small enough that
//! clarity wins over speed.

mod attention;
mod loss;
mod tensor;
mod text;

pub use attention::{
    apply_channel, apply_spatial, channel_attention, dependence, idiosyncrasy, sigmoid,
    spatial_attention, ChannelAttnWeights, DependenceWeights, SpatialAttnWeights,
};
pub use loss::{
    cross_entropy, joint_loss, mean_cross_entropy, weighted_joint_loss, DEFAULT_AUX_WEIGHT,
    LOG_FLOOR,
};
pub use tensor::{Matrix, Plane, Tensor3};
pub use text::{parse_tensor_text, write_tensor_text, NamedTensor, TensorSet};
